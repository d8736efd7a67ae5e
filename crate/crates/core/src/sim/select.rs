use serde::Serialize;

use super::scenario::Band;
use crate::error::{Error, Result};
use crate::routing::Strategy;

/// Measured D2D and CC outage of one (strategy, band) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub strategy: Strategy,
    pub band: Band,
    pub d2d_outage: f64,
    pub cc_outage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyChoice {
    pub constraint: f64,
    pub admissible: Vec<OperatingPoint>,
    /// `None` means no D2D is permitted under the constraint.
    pub chosen: Option<OperatingPoint>,
}

/// Picks the lowest-D2D-outage combination whose CC outage stays within
/// `constraint`. Ties go to the lower CC outage, then to list order.
pub fn select_strategy(constraint: f64, evaluated: &[OperatingPoint]) -> Result<StrategyChoice> {
    if evaluated.is_empty() {
        return Err(Error::Domain("no operating points to select from".into()));
    }
    if !(0.0..=1.0).contains(&constraint) {
        return Err(Error::Domain(format!("constraint {constraint} is not a probability")));
    }
    let admissible: Vec<OperatingPoint> = evaluated.iter().copied().filter(|p| p.cc_outage <= constraint).collect();
    let chosen = admissible.iter().copied().reduce(|best, p| {
        let better = p.d2d_outage < best.d2d_outage
            || (p.d2d_outage == best.d2d_outage && p.cc_outage < best.cc_outage);
        if better {
            p
        } else {
            best
        }
    });
    Ok(StrategyChoice { constraint, admissible, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(strategy: Strategy, band: Band, d2d: f64, cc: f64) -> OperatingPoint {
        OperatingPoint { strategy, band, d2d_outage: d2d, cc_outage: cc }
    }

    fn published() -> Vec<OperatingPoint> {
        vec![
            op(Strategy::Iar, Band::Dl, 0.20, 0.12),
            op(Strategy::Iar, Band::Ul, 0.08, 0.15),
            op(Strategy::Spr, Band::Ul, 0.03, 0.40),
            op(Strategy::Spr, Band::Dl, 0.15, 0.30),
        ]
    }

    #[test]
    fn below_every_entry_nothing_is_permitted() {
        let c = select_strategy(0.05, &published()).unwrap();
        assert!(c.chosen.is_none());
        assert!(c.admissible.is_empty());
    }

    #[test]
    fn published_operating_points() {
        let pick = |c: f64| {
            let ch = select_strategy(c, &published()).unwrap().chosen.unwrap();
            (ch.strategy, ch.band)
        };
        assert_eq!(pick(0.12), (Strategy::Iar, Band::Dl));
        assert_eq!(pick(0.15), (Strategy::Iar, Band::Ul));
        assert_eq!(pick(0.40), (Strategy::Spr, Band::Ul));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(select_strategy(0.1, &[]).is_err());
    }
}
