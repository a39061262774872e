//! Model parameters, points of the simplex and partition masses.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance on the total mass of a simplex point or a weight vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Model parameters. `alpha` is locked to 1/2; every closed form in this
/// crate (the projected density, the `-3/2` exponents) depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    theta: f64,
    alpha: f64,
}

impl Params {
    pub const ALPHA: f64 = 0.5;

    pub fn new(theta: f64) -> Result<Self> {
        Self::with_alpha(Self::ALPHA, theta)
    }

    pub fn with_alpha(alpha: f64, theta: f64) -> Result<Self> {
        if alpha != Self::ALPHA {
            return Err(LabError::UnsupportedAlpha(alpha));
        }
        if !theta.is_finite() || theta <= -0.5 {
            return Err(LabError::ThetaOutOfRange(theta));
        }
        Ok(Self { theta, alpha })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A point of the closed simplex `Δ_d`: `d` explicit coordinates and the
/// implicit remainder `x_{d+1} = 1 - Σ x_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
    rest: f64,
}

impl SimplexPoint {
    /// Validates `d` explicit coordinates; the last coordinate is implied.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(LabError::InvalidArgument("a simplex point needs d >= 1".into()));
        }
        check_entries(&coords)?;
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 + SIMPLEX_TOL {
            return Err(LabError::MassExceedsOne { sum });
        }
        let rest = (1.0 - sum).max(0.0);
        Ok(Self { coords, rest })
    }

    /// Builds a point from all `d + 1` barycentric coordinates, keeping the
    /// last one as given instead of recomputing it by subtraction.
    pub fn from_full(mut full: Vec<f64>) -> Result<Self> {
        if full.len() < 2 {
            return Err(LabError::InvalidArgument("need at least two barycentric coordinates".into()));
        }
        check_entries(&full)?;
        let sum: f64 = full.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(if sum > 1.0 {
                LabError::MassExceedsOne { sum }
            } else {
                LabError::InvalidArgument(format!("barycentric coordinates sum to {sum}"))
            });
        }
        let rest = full.pop().unwrap_or_default();
        Ok(Self { coords: full, rest })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The implicit coordinate `x_{d+1}`.
    pub fn last(&self) -> f64 {
        self.rest
    }

    /// Coordinate `i` of the full vector, `0 <= i <= d`.
    pub fn full_coord(&self, i: usize) -> f64 {
        if i < self.coords.len() {
            self.coords[i]
        } else {
            self.rest
        }
    }

    /// All `d + 1` coordinates.
    pub fn full(&self) -> impl Iterator<Item = f64> + '_ {
        self.coords.iter().copied().chain(std::iter::once(self.rest))
    }

    pub fn is_interior(&self) -> bool {
        self.full().all(|v| v > 0.0)
    }
}

fn check_entries(v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(LabError::NonFinite("simplex coordinates"));
        }
        if value < 0.0 {
            return Err(LabError::NegativeCoordinate { index, value });
        }
    }
    Ok(())
}

/// Masses `p_1..p_{d+1}` of the base measure on a finite partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseWeights {
    p: Vec<f64>,
}

impl BaseWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(LabError::InvalidBase("need at least two cells".into()));
        }
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(LabError::InvalidBase(format!("cell mass {bad} is not positive")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(LabError::InvalidBase(format!("masses sum to {sum}")));
        }
        Ok(Self { p })
    }

    /// `d + 1` equal cells.
    pub fn symmetric(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(LabError::InvalidArgument("d must be positive".into()));
        }
        Self::new(vec![1.0 / (d as f64 + 1.0); d + 1])
    }

    /// Geometric base `ν0(j) = (1-q) q^{j-1}` on the first `d` categories,
    /// with the tail mass `q^d` as the last cell.
    pub fn geometric(q: f64, d: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(LabError::DomainError("q"));
        }
        if d == 0 {
            return Err(LabError::InvalidArgument("d must be positive".into()));
        }
        let mut p: Vec<f64> = (0..d).map(|j| (1.0 - q) * q.powi(j as i32)).collect();
        p.push(q.powi(d as i32));
        Self::new(p)
    }

    /// Number of explicit simplex coordinates, one less than the cell count.
    pub fn dim(&self) -> usize {
        self.p.len() - 1
    }

    pub fn masses(&self) -> &[f64] {
        &self.p
    }

    pub fn is_symmetric(&self) -> bool {
        let first = self.p[0];
        self.p.iter().all(|&v| (v - first).abs() <= SIMPLEX_TOL)
    }
}

/// Level-`k` dyadic partition: `2^k` cells of mass `2^{-k}`, where cell `j`
/// of level `k` is the union of cells `2j-1` and `2j` of level `k + 1`
/// (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPartition {
    level: u32,
    base: BaseWeights,
}

/// Upper bound on the dyadic level; `2^20` cells is far past any experiment.
pub const MAX_DYADIC_LEVEL: u32 = 20;

pub fn dyadic_base(level: u32) -> Result<DyadicPartition> {
    if level == 0 || level > MAX_DYADIC_LEVEL {
        return Err(LabError::InvalidArgument(format!("dyadic level {level} outside 1..={MAX_DYADIC_LEVEL}")));
    }
    let cells = 1usize << level;
    let base = BaseWeights::new(vec![1.0 / cells as f64; cells])?;
    Ok(DyadicPartition { level, base })
}

impl DyadicPartition {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base(&self) -> &BaseWeights {
        &self.base
    }

    pub fn cells(&self) -> usize {
        1 << self.level
    }

    /// Children at level `k + 1` of 1-based cell `j`.
    pub fn refine(&self, j: usize) -> (usize, usize) {
        debug_assert!(j >= 1 && j <= self.cells());
        (2 * j - 1, 2 * j)
    }

    /// Parent at level `k - 1` of 1-based cell `j`.
    pub fn parent(j: usize) -> usize {
        j.div_ceil(2)
    }

    /// Sums level-`k` cell values into their level-`k - 1` parents.
    pub fn coarsen(values: &[f64]) -> Vec<f64> {
        values.chunks(2).map(|c| c.iter().sum()).collect()
    }
}

/// A point together with an unnormalized importance weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSample {
    pub point: SimplexPoint,
    pub weight: f64,
    /// Set when `theta <= -1/4`, where the weights have infinite variance.
    pub high_variance: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_validation() {
        assert!(Params::new(0.0).is_ok());
        assert_eq!(Params::new(-0.5), Err(LabError::ThetaOutOfRange(-0.5)));
        assert!(matches!(Params::with_alpha(0.3, 1.0), Err(LabError::UnsupportedAlpha(_))));
        assert!(Params::new(f64::NAN).is_err());
    }

    #[test]
    fn make_simplex_point_examples() {
        let x = SimplexPoint::new(vec![0.2, 0.3]).unwrap();
        assert_eq!(x.dim(), 2);
        assert!((x.last() - 0.5).abs() < 1e-15);
        assert!(x.is_interior());

        let b = SimplexPoint::new(vec![0.0, 1.0]).unwrap();
        assert!(!b.is_interior());

        assert!(matches!(SimplexPoint::new(vec![0.6, 0.6]), Err(LabError::MassExceedsOne { .. })));
        assert!(matches!(SimplexPoint::new(vec![-0.1, 0.2]), Err(LabError::NegativeCoordinate { index: 0, .. })));
        assert!(SimplexPoint::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn dyadic_levels() {
        let one = dyadic_base(1).unwrap();
        assert_eq!(one.base().masses(), &[0.5, 0.5]);
        let two = dyadic_base(2).unwrap();
        assert_eq!(two.base().masses(), &[0.25; 4]);
        assert_eq!(one.refine(1), (1, 2));
        assert_eq!(one.refine(2), (3, 4));
        assert_eq!(DyadicPartition::parent(3), 2);
        assert!(dyadic_base(0).is_err());
    }

    #[test]
    fn dyadic_coarsening_is_exact() {
        for k in 2..=10 {
            let fine = dyadic_base(k).unwrap();
            let coarse = dyadic_base(k - 1).unwrap();
            assert_eq!(DyadicPartition::coarsen(fine.base().masses()), coarse.base().masses());
        }
    }

    #[test]
    fn geometric_base_sums_to_one() {
        let b = BaseWeights::geometric(0.5, 4).unwrap();
        assert_eq!(b.masses(), &[0.5, 0.25, 0.125, 0.0625, 0.0625]);
        assert!(BaseWeights::new(vec![1.0, 0.0]).is_err());
        assert!(BaseWeights::new(vec![0.5, 0.6]).is_err());
    }

    proptest! {
        #[test]
        fn constructed_points_satisfy_invariants(v in prop::collection::vec(-0.5f64..1.0, 1..8)) {
            if let Ok(x) = SimplexPoint::new(v) {
                prop_assert!(x.coords().iter().all(|&c| c >= 0.0));
                prop_assert!(x.coords().iter().sum::<f64>() <= 1.0 + SIMPLEX_TOL);
                prop_assert!((0.0..=1.0).contains(&x.last()));
            }
        }
    }
}
