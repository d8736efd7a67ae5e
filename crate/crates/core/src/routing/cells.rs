use crate::env::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub bs_positions: Vec<Point>,
    pub boundary_tolerance_m: f64,
}

impl CellGeometry {
    pub fn new(bs_positions: Vec<Point>, boundary_tolerance_m: f64) -> Result<Self> {
        if bs_positions.is_empty() {
            return Err(Error::Domain("cell geometry needs at least one BS".into()));
        }
        if !(boundary_tolerance_m > 0.0) {
            return Err(Error::Domain(format!(
                "boundary tolerance must be positive, got {boundary_tolerance_m}"
            )));
        }
        Ok(CellGeometry { bs_positions, boundary_tolerance_m })
    }

    /// Index of the closest BS (lowest index on ties).
    pub fn serving_cell(&self, p: Point) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, bs) in self.bs_positions.iter().enumerate() {
            let d = bs.distance_sq(p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Distances to the closest and second-closest BS.
    pub fn two_nearest(&self, p: Point) -> (f64, f64) {
        let mut first = f64::INFINITY;
        let mut second = f64::INFINITY;
        for bs in &self.bs_positions {
            let d = bs.distance(p);
            if d < first {
                second = first;
                first = d;
            } else if d < second {
                second = d;
            }
        }
        (first, second)
    }

    /// Whether `p` lies in the Voronoi-edge band.
    pub fn on_boundary(&self, p: Point) -> bool {
        if self.bs_positions.len() < 2 {
            return false;
        }
        let (d1, d2) = self.two_nearest(p);
        d2 - d1 <= self.boundary_tolerance_m
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryBand {
    pub nodes: Vec<usize>,
    pub diagnostic: Option<String>,
}

/// Indices of the points whose distances to their two nearest BSs differ by
/// at most the boundary tolerance.
pub fn boundary_nodes(positions: &[Point], cells: &CellGeometry) -> BoundaryBand {
    if cells.bs_positions.len() < 2 {
        return BoundaryBand {
            nodes: Vec::new(),
            diagnostic: Some("a single BS has no cell boundary; IAR is undefined".into()),
        };
    }
    BoundaryBand {
        nodes: positions
            .iter()
            .enumerate()
            .filter(|(_, p)| cells.on_boundary(**p))
            .map(|(i, _)| i)
            .collect(),
        diagnostic: None,
    }
}
