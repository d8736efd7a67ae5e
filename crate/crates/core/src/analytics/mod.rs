//! Closed-form outage expressions for the cellular and relayed links, and a
//! Poisson-field Monte-Carlo check of the downlink coverage formula.

pub mod quadrature;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeds::Seed;

/// Absolute tolerance for the interference integral.
pub const A_FUNCTION_TOL: f64 = 1e-10;
const A_FUNCTION_MAX_INTERVALS: usize = 2000;

/// Base-station field seen by the closed-form analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgParams {
    /// Base stations per square meter.
    pub bs_density: f64,
    pub alpha: f64,
    /// Linear SINR threshold.
    pub threshold: f64,
}

impl SgParams {
    pub fn new(bs_density: f64, alpha: f64, threshold: f64) -> Result<Self> {
        if !(bs_density >= 0.0) {
            return Err(Error::Domain(format!("BS density must be >= 0, got {bs_density}")));
        }
        if !(alpha > 2.0) {
            return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
        }
        if !(threshold > 0.0) {
            return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
        }
        Ok(SgParams { bs_density, alpha, threshold })
    }

    /// Convenience for densities in BS/km² and thresholds in dB.
    pub fn from_km2_db(bs_per_km2: f64, alpha: f64, threshold_db: f64) -> Result<Self> {
        Self::new(bs_per_km2 * 1e-6, alpha, 10f64.powf(threshold_db / 10.0))
    }
}

fn check_a_args(threshold: f64, alpha: f64) -> Result<()> {
    if !(threshold > 0.0) || !(alpha > 2.0) {
        return Err(Error::Domain(format!(
            "A(threshold, alpha) needs threshold > 0 and alpha > 2, got ({threshold}, {alpha})"
        )));
    }
    Ok(())
}

/// `A(ζ, α) = ∫_{ζ^(-2/α)}^∞ ζ^(2/α) / (1 + u^(α/2)) du`, evaluated by
/// quadrature.
///
/// The infinite range is folded with `u = 1/t`, and `t = s^m` with
/// `m = 2/(α-2)` then removes the `t^(α/2-2)` endpoint singularity, leaving
/// `ζ^(2/α) ∫_0^{ζ^((α-2)/α)} m / (1 + s^(α/(α-2))) ds`.
pub fn a_function_quadrature(threshold: f64, alpha: f64) -> Result<f64> {
    check_a_args(threshold, alpha)?;
    let m = 2.0 / (alpha - 2.0);
    let p = alpha / (alpha - 2.0);
    let upper = threshold.powf((alpha - 2.0) / alpha);
    let scale = threshold.powf(2.0 / alpha);
    let q = quadrature::integrate(
        |s| m / (1.0 + s.powf(p)),
        0.0,
        upper,
        A_FUNCTION_TOL / scale.max(1.0),
        A_FUNCTION_MAX_INTERVALS,
    )?;
    Ok(scale * q.value)
}

/// `√ζ · arctan(√ζ)`: the α = 4 closed form.
pub fn a_function_alpha4(threshold: f64) -> f64 {
    let s = threshold.sqrt();
    s * s.atan()
}

/// The interference integral; uses the closed form when α = 4.
pub fn a_function(threshold: f64, alpha: f64) -> Result<f64> {
    check_a_args(threshold, alpha)?;
    if alpha == 4.0 {
        Ok(a_function_alpha4(threshold))
    } else {
        a_function_quadrature(threshold, alpha)
    }
}

/// Downlink success `exp(-Λ π r² A(ζ, 4))` for one leg at distance `r`.
pub fn cc_leg_success(params: &SgParams, r: f64) -> f64 {
    (-params.bs_density * std::f64::consts::PI * r * r * a_function_alpha4(params.threshold)).exp()
}

/// Cellular end-to-end outage with both legs following the α = 4
/// Poisson-field law: `1 - exp(-Λ π (r_up² + r_down²) A(ζ, 4))`.
pub fn cc_outage_closed_form(params: &SgParams, r_up: f64, r_down: f64) -> Result<f64> {
    if !(r_up >= 0.0 && r_down >= 0.0) {
        return Err(Error::Domain(format!("distances must be >= 0, got ({r_up}, {r_down})")));
    }
    let exponent = params.bs_density
        * std::f64::consts::PI
        * (r_up * r_up + r_down * r_down)
        * a_function_alpha4(params.threshold);
    Ok(-(-exponent).exp_m1())
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{what} = {p} is not a probability")));
    }
    Ok(())
}

/// `1 - p_up · p_down`.
pub fn cc_end_to_end_outage(p_up_success: f64, p_down_success: f64) -> Result<f64> {
    check_probability(p_up_success, "uplink success")?;
    check_probability(p_down_success, "downlink success")?;
    Ok(1.0 - p_up_success * p_down_success)
}

/// Realized per-hop outage probabilities of one decode-and-forward route.
#[derive(Debug, Clone, PartialEq)]
pub struct HopOutageProfile {
    per_hop_outage: Vec<f64>,
}

impl HopOutageProfile {
    pub fn new(per_hop_outage: Vec<f64>) -> Result<Self> {
        for (j, p) in per_hop_outage.iter().enumerate() {
            check_probability(*p, &format!("hop {j} outage"))?;
        }
        Ok(HopOutageProfile { per_hop_outage })
    }

    pub fn from_success(per_hop_success: &[f64]) -> Result<Self> {
        Self::new(per_hop_success.iter().map(|s| 1.0 - s).collect())
    }

    pub fn hops(&self) -> usize {
        self.per_hop_outage.len()
    }

    pub fn per_hop_outage(&self) -> &[f64] {
        &self.per_hop_outage
    }
}

/// Decode-and-forward route outage `1 - Π_j (1 - p_j)`.
pub fn d2d_route_outage(profile: &HopOutageProfile) -> f64 {
    let success: f64 = profile.per_hop_outage.iter().map(|p| 1.0 - p).product();
    (1.0 - success).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcValidation {
    pub empirical: f64,
    pub analytic: f64,
    pub abs_gap: f64,
    pub trials: usize,
}

/// Interferers beyond `FIELD_RADIUS_FACTOR * r` are dropped. The neglected
/// tail shifts success by about `Λ π ζ r² / FIELD_RADIUS_FACTOR²`.
pub const FIELD_RADIUS_FACTOR: f64 = 40.0;
const TRIALS_PER_CHUNK: usize = 1024;

/// Monte-Carlo counterpart of the downlink coverage law.
///
/// Each trial places a Rayleigh-faded unit-power transmitter at distance `r`
/// and an independent Poisson field of density `Λ` in the annulus
/// `[r, 40 r]`, all faded, with pathloss `d^-4` and no noise. Success is
/// `h r^-4 > ζ Σ h_i d_i^-4`.
pub fn validate_cc_closed_form(params: &SgParams, r: f64, trials: usize, seed: u64) -> Result<CcValidation> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("probe distance must be positive, got {r}")));
    }
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let analytic = cc_leg_success(params, r);
    let r_max = FIELD_RADIUS_FACTOR * r;
    let area = std::f64::consts::PI * (r_max * r_max - r * r);
    let mean_count = params.bs_density * area;
    let counter = Poisson::new(mean_count.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Domain(format!("Poisson mean {mean_count}: {e}")))?;

    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let root = Seed(seed).label("ppp-validation");
    let successes: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = TRIALS_PER_CHUNK.min(trials - c * TRIALS_PER_CHUNK);
            let mut rng = root.child(c as u64).rng();
            (0..n)
                .filter(|_| ppp_trial(params, r, r_max, mean_count, &counter, &mut rng))
                .count()
        })
        .sum();
    let empirical = successes as f64 / trials as f64;
    Ok(CcValidation {
        empirical,
        analytic,
        abs_gap: (empirical - analytic).abs(),
        trials,
    })
}

fn ppp_trial<R: Rng>(
    params: &SgParams,
    r: f64,
    r_max: f64,
    mean_count: f64,
    counter: &Poisson<f64>,
    rng: &mut R,
) -> bool {
    let h: f64 = Exp1.sample(rng);
    let signal = h / r.powi(4);
    if mean_count <= 0.0 {
        return true;
    }
    let count = counter.sample(rng) as usize;
    let (r2, span) = (r * r, r_max * r_max - r * r);
    let budget = signal / params.threshold;
    let mut interference = 0.0;
    for _ in 0..count {
        // Radius with density ∝ ρ on [r, r_max].
        let rho2 = r2 + rng.random::<f64>() * span;
        let g: f64 = Exp1.sample(rng);
        interference += g / (rho2 * rho2);
        if interference >= budget {
            return false;
        }
    }
    interference < budget
}
