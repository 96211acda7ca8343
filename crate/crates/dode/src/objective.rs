//! The outer-problem objective: normalized demand and count discrepancy
//! terms, their weighted combination, generation-constraint checks, RMSE,
//! and the shared counter of true-simulator objective evaluations.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scenario::GenerationConstraints;
use crate::types::{Bounds, CountVector, DemandVector};

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn l2_diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Normalized demand discrepancy ||x - seed|| / ||seed||.
pub fn f1(x: &DemandVector, seed: &DemandVector) -> Result<f64> {
    if x.len() != seed.len() {
        return Err(Error::ShapeMismatch { expected: seed.len(), got: x.len() });
    }
    let denom = l2_norm(&seed.values);
    if denom == 0.0 {
        return Err(Error::ZeroSeedNorm);
    }
    Ok(l2_diff_norm(&x.values, &seed.values) / denom)
}

/// Normalized count discrepancy ||c - c_hat|| / ||c_hat||.
pub fn f2(c: &[f64], c_hat: &[f64]) -> Result<f64> {
    if c.len() != c_hat.len() {
        return Err(Error::ShapeMismatch { expected: c_hat.len(), got: c.len() });
    }
    let denom = l2_norm(c_hat);
    if denom == 0.0 {
        return Err(Error::ZeroObservedNorm);
    }
    Ok(l2_diff_norm(c, c_hat) / denom)
}

/// Root mean squared error between two equally long vectors.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(Error::ShapeMismatch { expected: y.len(), got: y_hat.len() });
    }
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / y.len() as f64).sqrt())
}

/// Elementwise projection onto the bounds box.
pub fn clip_to_bounds(x: &DemandVector, bounds: &Bounds) -> DemandVector {
    let values = x
        .values
        .iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&v, (&l, &u))| v.clamp(l, u))
        .collect();
    DemandVector::new(values)
}

/// Generation-constraint verdict plus per-origin slack (cap minus outbound
/// sum, in production order).
pub fn check_generation(x: &DemandVector, gen: &GenerationConstraints) -> (bool, Vec<f64>) {
    (gen.is_feasible(&x.values), gen.slacks(&x.values))
}

/// Objective ingredients: term weights, the optional prior, and the
/// observed counts the estimate is matched against.
#[derive(Debug, Clone)]
pub struct ObjectiveConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub seed: Option<DemandVector>,
    pub observed: CountVector,
}

impl ObjectiveConfig {
    /// Even weighting when a prior exists; count term only when it does not.
    pub fn new(seed: Option<DemandVector>, observed: CountVector) -> Self {
        let omega1 = if seed.is_some() { 1.0 } else { 0.0 };
        Self { omega1, omega2: 1.0, seed, observed }
    }

    /// Compose the weighted objective from a count vector (simulated or
    /// predicted).
    pub fn value(&self, x: &DemandVector, counts: &[f64], counted: bool) -> Result<ObjectiveValue> {
        let term1 = match &self.seed {
            Some(seed) if self.omega1 > 0.0 => f1(x, seed)?,
            _ => 0.0,
        };
        let term2 = f2(counts, &self.observed.to_f64())?;
        Ok(ObjectiveValue {
            f1: term1,
            f2: term2,
            total: self.omega1 * term1 + self.omega2 * term2,
            of_eval_counted: counted,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub f1: f64,
    pub f2: f64,
    pub total: f64,
    /// Whether this evaluation consumed one unit of the true-simulator
    /// budget (false for surrogate-backed evaluations).
    pub of_eval_counted: bool,
}

/// Supplies counts for a demand vector: either the true simulator or a
/// trained surrogate.
pub trait CountsSource {
    fn counts_for(&self, x: &DemandVector) -> Result<Vec<f64>>;
    /// True evaluations are charged against the budget; surrogate queries
    /// are free.
    fn is_true_simulator(&self) -> bool;
}

/// Shared, atomically updated count of true-simulator objective
/// evaluations.
#[derive(Debug, Clone, Default)]
pub struct EvalCounter(Arc<AtomicU64>);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }

    pub fn increment(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst) + 1
    }
}

/// Evaluate the objective at `x`, obtaining counts from `source` and
/// charging the counter only for true-simulator evaluations.
pub fn objective(
    x: &DemandVector,
    config: &ObjectiveConfig,
    source: &impl CountsSource,
    counter: &EvalCounter,
) -> Result<ObjectiveValue> {
    let counts = source.counts_for(x)?;
    let counted = source.is_true_simulator();
    if counted {
        counter.increment();
    }
    config.value(x, &counts, counted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::GenerationConstraints;
    use crate::types::{NodeId, TimeGrid, TripProductions};
    use approx::assert_relative_eq;

    #[test]
    fn f1_examples() {
        let seed = DemandVector::new(vec![2.0, 2.0]);
        assert_eq!(f1(&seed, &seed).unwrap(), 0.0);

        let x = DemandVector::new(vec![4.0, 4.0]);
        assert_relative_eq!(f1(&x, &seed).unwrap(), 1.0);

        let ones = DemandVector::ones(528);
        let double = DemandVector::new(vec![2.0; 528]);
        assert_relative_eq!(f1(&double, &ones).unwrap(), 1.0);

        assert!(matches!(
            f1(&DemandVector::zeros(2), &DemandVector::zeros(2)),
            Err(Error::ZeroSeedNorm)
        ));
    }

    #[test]
    fn f1_homogeneity() {
        let seed = DemandVector::new(vec![1.5, 0.25, 3.0, 2.0]);
        for k in [0.0, 0.5, 1.0, 2.0] {
            let x = DemandVector::new(seed.values.iter().map(|v| k * v).collect());
            assert_relative_eq!(f1(&x, &seed).unwrap(), (k - 1.0f64).abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn f2_examples() {
        let c_hat = vec![3.0, 4.0];
        assert_eq!(f2(&c_hat, &c_hat).unwrap(), 0.0);
        assert_relative_eq!(f2(&[0.0, 0.0], &c_hat).unwrap(), 1.0);

        let c_hat = vec![2.0, 3.0, 6.0];
        let mut c = c_hat.clone();
        c[0] += 1.0;
        assert_relative_eq!(f2(&c, &c_hat).unwrap(), 1.0 / 7.0);

        assert!(matches!(f2(&[0.0], &[0.0]), Err(Error::ZeroObservedNorm)));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        assert_relative_eq!(rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 12.5f64.sqrt());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_triangle_sanity() {
        // rmse is a scaled norm, so the triangle inequality holds directly.
        let mut rng_state = 123u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64 * 10.0
        };
        for _ in 0..50 {
            let y: Vec<f64> = (0..8).map(|_| next()).collect();
            let z: Vec<f64> = (0..8).map(|_| next()).collect();
            let w: Vec<f64> = (0..8).map(|_| next()).collect();
            let lhs = rmse(&y, &w).unwrap();
            let rhs = rmse(&y, &z).unwrap() + rmse(&z, &w).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn clipping() {
        let bounds = Bounds::new(vec![0.0, 0.0], vec![30.0, 30.0]).unwrap();
        let inside = DemandVector::new(vec![5.0, 10.0]);
        assert_eq!(clip_to_bounds(&inside, &bounds), inside);
        assert_eq!(
            clip_to_bounds(&DemandVector::new(vec![-1.0, 100.0]), &bounds).values,
            vec![0.0, 30.0]
        );
    }

    fn two_origin_gen() -> GenerationConstraints {
        let od = crate::scenario::OdSet {
            pairs: vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))],
        };
        let grid = TimeGrid::new(900.0, 1).unwrap();
        let prod = TripProductions {
            caps: vec![(NodeId(0), 5.0), (NodeId(1), 3.0)],
        };
        GenerationConstraints::new(&od, &grid, &prod)
    }

    #[test]
    fn generation_check() {
        let gen = two_origin_gen();

        let saturated = DemandVector::new(vec![5.0, 3.0]);
        let (feasible, slacks) = check_generation(&saturated, &gen);
        assert!(feasible);
        assert_eq!(slacks, vec![0.0, 0.0]);

        let over = DemandVector::new(vec![5.05, 3.03]);
        let (feasible, slacks) = check_generation(&over, &gen);
        assert!(!feasible);
        assert!(slacks.iter().all(|&s| s < 0.0));

        let zero = DemandVector::zeros(2);
        let (feasible, slacks) = check_generation(&zero, &gen);
        assert!(feasible);
        assert_eq!(slacks, vec![5.0, 3.0]);
    }

    struct FixedCounts(Vec<f64>, bool);

    impl CountsSource for FixedCounts {
        fn counts_for(&self, _x: &DemandVector) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
        fn is_true_simulator(&self) -> bool {
            self.1
        }
    }

    #[test]
    fn objective_composition_and_counting() {
        let observed = CountVector { values: vec![3, 4] };
        let cfg = ObjectiveConfig::new(None, observed.clone());
        assert_eq!(cfg.omega1, 0.0);

        let counter = EvalCounter::new();
        let x = DemandVector::ones(2);
        let sim = FixedCounts(vec![3.0, 4.0], true);
        let val = objective(&x, &cfg, &sim, &counter).unwrap();
        assert_eq!(val.total, 0.0);
        assert!(val.of_eval_counted);
        assert_eq!(counter.get(), 1);

        // Surrogate evaluations leave the counter untouched.
        let surrogate = FixedCounts(vec![0.0, 0.0], false);
        let val = objective(&x, &cfg, &surrogate, &counter).unwrap();
        assert!(!val.of_eval_counted);
        assert_relative_eq!(val.total, 1.0);
        assert_eq!(counter.get(), 1);
    }

    #[test]
    fn weighted_sum() {
        // f1 = 0.5 and f2 = 0.25 with unit weights combine to 0.75.
        let seed = DemandVector::new(vec![2.0, 0.0]);
        let x = DemandVector::new(vec![3.0, 0.0]);
        let observed = CountVector { values: vec![4, 0] };
        let cfg = ObjectiveConfig::new(Some(seed), observed);
        let val = cfg.value(&x, &[3.0, 0.0], true).unwrap();
        assert_relative_eq!(val.f1, 0.5);
        assert_relative_eq!(val.f2, 0.25);
        assert_relative_eq!(val.total, 0.75);
    }
}
