//! Shared domain vocabulary: the time discretization, demand and count
//! vectors, search-space bounds and trip productions.
//!
//! Demand is indexed by (OD pair `w`, departure interval `s`) and stored
//! flat in row-major order, `w` outer and `s` inner. Counts are indexed by
//! (sensor position `q`, interval `r`) with the same layout. All interval
//! indices are zero-based in code; file exports use one-based labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub usize);

/// Analysis period `[0, t_end)` split into equal intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end_s: f64,
    pub n_intervals: usize,
}

impl TimeGrid {
    pub fn new(t_end_s: f64, n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 || t_end_s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_end > 0 and at least one interval (got {t_end_s} s, {n_intervals})"
            )));
        }
        Ok(Self { t_end_s, n_intervals })
    }

    pub fn interval_s(&self) -> f64 {
        self.t_end_s / self.n_intervals as f64
    }

    /// Interval containing time `t`; times at or past `t_end` are attributed
    /// to the last interval.
    pub fn interval_of(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.interval_s()) as usize).min(self.n_intervals - 1)
    }

    /// Start time of interval `s`.
    pub fn interval_start(&self, s: usize) -> f64 {
        s as f64 * self.interval_s()
    }
}

/// Flat demand index for OD pair `w` and interval `s`.
#[inline]
pub fn demand_index(w: usize, s: usize, n_intervals: usize) -> usize {
    w * n_intervals + s
}

/// Flat count index for sensor position `q` and interval `r`.
#[inline]
pub fn count_index(q: usize, r: usize, n_intervals: usize) -> usize {
    q * n_intervals + r
}

/// Nonnegative demand per (OD pair, interval), flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector {
    pub values: Vec<f64>,
}

impl DemandVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn ones(len: usize) -> Self {
        Self { values: vec![1.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-sensor, per-interval vehicle counts, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector {
    pub values: Vec<u32>,
}

impl CountVector {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Elementwise search-space box for the demand vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::ShapeMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| *l < 0.0 || l > u) {
            return Err(Error::InvalidParameter(
                "bounds must satisfy 0 <= lower <= upper elementwise".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &DemandVector) -> bool {
        x.values.len() == self.lower.len()
            && x.values
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// Cap on total outbound trips per origin, summed over destinations and
/// departure intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TripProductions {
    /// (origin node, cap) in ascending node order.
    pub caps: Vec<(NodeId, f64)>,
}

impl TripProductions {
    pub fn cap_of(&self, origin: NodeId) -> Option<f64> {
        self.caps
            .binary_search_by_key(&origin, |(n, _)| *n)
            .ok()
            .map(|i| self.caps[i].1)
    }
}

/// Which synthetic prior demand vector anchors the `f1` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    None,
    Ld,
    Hd,
}

impl std::fmt::Display for SeedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedKind::None => write!(f, "none"),
            SeedKind::Ld => write!(f, "ld"),
            SeedKind::Hd => write!(f, "hd"),
        }
    }
}

impl std::str::FromStr for SeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(SeedKind::None),
            "ld" => Ok(SeedKind::Ld),
            "hd" => Ok(SeedKind::Hd),
            other => Err(Error::InvalidParameter(format!("unknown seed kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_membership() {
        let grid = TimeGrid::new(3600.0, 4).unwrap();
        assert_eq!(grid.interval_s(), 900.0);
        assert_eq!(grid.interval_of(0.0), 0);
        assert_eq!(grid.interval_of(899.9), 0);
        assert_eq!(grid.interval_of(950.0), 1);
        // At or past t_end lands in the last interval.
        assert_eq!(grid.interval_of(3600.0), 3);
        assert_eq!(grid.interval_of(10_000.0), 3);
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(3600.0, 0).is_err());
    }

    #[test]
    fn row_major_layout() {
        // w outer, s inner.
        assert_eq!(demand_index(0, 0, 4), 0);
        assert_eq!(demand_index(0, 3, 4), 3);
        assert_eq!(demand_index(1, 0, 4), 4);
        assert_eq!(demand_index(2, 1, 4), 9);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![0.0, 1.0], vec![2.0, 2.0]).is_ok());
        assert!(Bounds::new(vec![3.0], vec![2.0]).is_err());
        assert!(Bounds::new(vec![-1.0], vec![2.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn seed_kind_round_trips() {
        for kind in [SeedKind::None, SeedKind::Ld, SeedKind::Hd] {
            assert_eq!(kind.to_string().parse::<SeedKind>().unwrap(), kind);
        }
        assert!("mystery".parse::<SeedKind>().is_err());
    }
}
