//! Exact causal predicates on Minkowski point configurations.
//!
//! All comparisons are done in `BigRational`, so verdicts are decisions, not
//! estimates. Coordinates are `(x^0, x^1, ..., x^{d-1})` with signature
//! `(+,-,...,-)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    BigRational::from(BigInt::from(n))
}

/// Parse "p/q" or "p" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, ConfigError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| ConfigError::BadRational(s.to_string()))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ConfigError::BadRational(s.to_string()))?;
    if d.is_zero() {
        return Err(ConfigError::BadRational(s.to_string()));
    }
    Ok(BigRational::new(n, d))
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("spacetime dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("point {index} has {got} coordinates, expected {expected}")]
    WrongArity {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("configuration must contain at least one point")]
    Empty,
    #[error("not a rational number: {0:?}")]
    BadRational(String),
}

/// A finite list of exact spacetime points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointConfig {
    pub d: usize,
    pub points: Vec<Vec<Rat>>,
}

impl PointConfig {
    pub fn new(d: usize, points: Vec<Vec<Rat>>) -> Result<Self, ConfigError> {
        if d < 2 {
            return Err(ConfigError::DimensionTooSmall(d));
        }
        if points.is_empty() {
            return Err(ConfigError::Empty);
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(ConfigError::WrongArity {
                    index: i,
                    got: p.len(),
                    expected: d,
                });
            }
        }
        Ok(PointConfig { d, points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn from_i64(d: usize, pts: &[&[i64]]) -> Result<Self, ConfigError> {
        let points = pts
            .iter()
            .map(|p| p.iter().map(|&c| rat_int(c)).collect())
            .collect();
        PointConfig::new(d, points)
    }
}

/// Exact causal relation of an ordered pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalVerdict {
    /// `x - y` is timelike with positive time component: x strictly after y.
    StrictlyFuture,
    /// `x - y` is null and nonzero; the flag is true when x is later.
    Lightlike { future: bool },
    StrictlyPast,
    Spacelike,
    Equal,
}

/// Minkowski square of a difference vector, `(Δx^0)^2 - |Δx⃗|^2`.
pub fn minkowski_square(v: &[Rat]) -> Rat {
    let mut q = &v[0] * &v[0];
    for vi in &v[1..] {
        q -= vi * vi;
    }
    q
}

pub fn diff(x: &[Rat], y: &[Rat]) -> Vec<Rat> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn classify_pair(x: &[Rat], y: &[Rat]) -> CausalVerdict {
    let v = diff(x, y);
    if v.iter().all(|c| c.is_zero()) {
        return CausalVerdict::Equal;
    }
    let q = minkowski_square(&v);
    if q.is_negative() {
        return CausalVerdict::Spacelike;
    }
    let future = v[0].is_positive();
    if q.is_zero() {
        CausalVerdict::Lightlike { future }
    } else if future {
        CausalVerdict::StrictlyFuture
    } else {
        CausalVerdict::StrictlyPast
    }
}

/// `x ∈ J^-(y)`: x is in the causal past of y (including x = y).
pub fn in_causal_past(x: &[Rat], y: &[Rat]) -> bool {
    matches!(
        classify_pair(x, y),
        CausalVerdict::StrictlyPast | CausalVerdict::Lightlike { future: false } | CausalVerdict::Equal
    )
}

/// Membership in `C_I = {x : x_i ∉ J^-(x_j) for all i ∈ I, j ∉ I}`.
///
/// `subset` is a bitmask over point indices; bit i set means i ∈ I.
pub fn c_i_member(config: &PointConfig, subset: u32) -> bool {
    let n = config.n();
    debug_assert!(n <= 32);
    for i in 0..n {
        if subset & (1 << i) == 0 {
            continue;
        }
        for j in 0..n {
            if subset & (1 << j) != 0 {
                continue;
            }
            if in_causal_past(&config.points[i], &config.points[j]) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverWitness {
    /// Some proper nonempty subset I with x ∈ C_I, the smallest bitmask.
    Member { subset: u32 },
    /// All points coincide: the configuration sits on the total diagonal
    /// where the cover does not apply.
    OnDiagonal,
}

/// Every configuration off the total diagonal lies in some `C_I`.
pub fn cover_witness(config: &PointConfig) -> CoverWitness {
    let n = config.n();
    assert!(n >= 2 && n <= 16, "cover scan supports 2..=16 points");
    if config.points.iter().all(|p| *p == config.points[0]) {
        return CoverWitness::OnDiagonal;
    }
    for subset in 1..((1u32 << n) - 1) {
        if c_i_member(config, subset) {
            return CoverWitness::Member { subset };
        }
    }
    unreachable!("cover lemma: some C_I must contain any off-diagonal configuration")
}

/// Exact partition-of-unity weights `f_I` subordinate to the cover, built
/// from causal margins. The weight of subset I is the sum over pairs
/// (i ∈ I, j ∉ I) of a positive margin certifying `x_i ∉ J^-(x_j)`:
/// spacelike pairs contribute `|Δx⃗|^2 - (Δx^0)^2`, strictly-later pairs
/// contribute `x_i^0 - x_j^0`. Weights are normalized to sum to 1.
pub fn partition_weights(config: &PointConfig) -> Result<Vec<(u32, Rat)>, CoverWitness> {
    let n = config.n();
    assert!(n >= 2 && n <= 16);
    if config.points.iter().all(|p| *p == config.points[0]) {
        return Err(CoverWitness::OnDiagonal);
    }
    let mut raw: Vec<(u32, Rat)> = Vec::new();
    for subset in 1..((1u32 << n) - 1) {
        if !c_i_member(config, subset) {
            continue;
        }
        let mut margin = Rat::zero();
        for i in 0..n {
            if subset & (1 << i) == 0 {
                continue;
            }
            for j in 0..n {
                if subset & (1 << j) != 0 {
                    continue;
                }
                let xi = &config.points[i];
                let xj = &config.points[j];
                match classify_pair(xi, xj) {
                    CausalVerdict::Spacelike => {
                        margin += -minkowski_square(&diff(xi, xj));
                    }
                    CausalVerdict::StrictlyFuture | CausalVerdict::Lightlike { future: true } => {
                        margin += &xi[0] - &xj[0];
                    }
                    _ => unreachable!("c_i_member certified the pair"),
                }
            }
        }
        raw.push((subset, margin));
    }
    let total: Rat = raw.iter().map(|(_, m)| m.clone()).sum();
    debug_assert!(total.is_positive());
    Ok(raw
        .into_iter()
        .map(|(s, m)| (s, m / total.clone()))
        .collect())
}
