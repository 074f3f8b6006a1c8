//! Compactly supported smooth probes.
//!
//! A `TestFunction` is a polynomial (in the normalized variable
//! `u = (x - c)/r`) times the standard bump `exp(-1/(1-|u|^2))`, supported in
//! the closed ball `B(c, r)`. Derivatives are evaluated through the symbolic
//! expression tree of the profile, which is exact (closed form) wherever the
//! profile is analytic, in particular at the origin.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, Expr};
use crate::multi::{order, MultiIndex};

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// Pointwise-evaluable probe with exact derivatives; test functions and their
/// linear combinations both implement it.
pub trait Probe: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Exact partial derivative `∂^alpha` at `x` via the symbolic profile.
    fn derivative_at(&self, alpha: &[usize], x: &[f64]) -> f64;
    /// Center and radius of a ball containing the support.
    fn support(&self) -> (Vec<f64>, f64);
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub d: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Polynomial factor in the normalized variable, as (multi-index, coeff).
    pub poly: Vec<(MultiIndex, f64)>,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn bump(d: usize, center: Vec<f64>, radius: f64) -> Result<Self, ProbeError> {
        Self::with_poly(d, center, radius, vec![(vec![0; d], 1.0)])
    }

    /// `make_bump`: bump times a polynomial in the normalized variable.
    pub fn with_poly(
        d: usize,
        center: Vec<f64>,
        radius: f64,
        poly: Vec<(MultiIndex, f64)>,
    ) -> Result<Self, ProbeError> {
        if d == 0 {
            return Err(ProbeError::ZeroDimension);
        }
        if !(radius > 0.0) {
            return Err(ProbeError::NonPositiveRadius(radius));
        }
        assert_eq!(center.len(), d);
        Ok(TestFunction {
            d,
            center,
            radius,
            poly,
            amplitude: 1.0,
        })
    }

    /// One-dimensional convenience: coefficient list `[c0, c1, ...]` for
    /// powers of the normalized variable.
    pub fn bump_1d(center: f64, radius: f64, coeffs: &[f64]) -> Result<Self, ProbeError> {
        let poly = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| (vec![k], c))
            .collect();
        Self::with_poly(1, vec![center], radius, poly)
    }

    /// The dilation `φ^λ(x) = λ^{-d} φ(x/λ)`.
    pub fn dilate(&self, lambda: f64) -> TestFunction {
        assert!(lambda > 0.0, "dilation parameter must be positive");
        TestFunction {
            d: self.d,
            center: self.center.iter().map(|c| c * lambda).collect(),
            radius: self.radius * lambda,
            poly: self.poly.clone(),
            amplitude: self.amplitude * lambda.powi(-(self.d as i32)),
        }
    }

    fn normalized(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let u: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) / self.radius)
            .collect();
        let s = u.iter().map(|v| v * v).sum();
        (u, s)
    }

    /// Profile as a symbolic expression in the original coordinates; exact
    /// only inside the open support ball.
    pub fn to_expr(&self) -> Expr {
        let u: Vec<Expr> = (0..self.d)
            .map(|i| {
                expr::div(
                    expr::sub(Expr::var(i), Expr::constant(self.center[i])),
                    Expr::constant(self.radius),
                )
            })
            .collect();
        let mut s = Expr::constant(0.0);
        for ui in &u {
            s = expr::add(s, expr::mul(ui.clone(), ui.clone()));
        }
        let bump = Expr::Exp(Arc::new(expr::neg(expr::div(
            Expr::constant(1.0),
            expr::sub(Expr::constant(1.0), s),
        ))));
        let mut poly = Expr::constant(0.0);
        for (alpha, c) in &self.poly {
            let mut mono = Expr::constant(*c);
            for (i, &k) in alpha.iter().enumerate() {
                for _ in 0..k {
                    mono = expr::mul(mono, u[i].clone());
                }
            }
            poly = expr::add(poly, mono);
        }
        expr::mul(Expr::constant(self.amplitude), expr::mul(poly, bump))
    }
}

impl Probe for TestFunction {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (u, s) = self.normalized(x);
        if s >= 1.0 {
            return 0.0;
        }
        let mut poly = 0.0;
        for (alpha, c) in &self.poly {
            let mut mono = *c;
            for (i, &k) in alpha.iter().enumerate() {
                mono *= u[i].powi(k as i32);
            }
            poly += mono;
        }
        self.amplitude * poly * (-1.0 / (1.0 - s)).exp()
    }

    fn derivative_at(&self, alpha: &[usize], x: &[f64]) -> f64 {
        let (_, s) = self.normalized(x);
        if s >= 1.0 {
            // all derivatives vanish outside the open support ball
            return 0.0;
        }
        if order(alpha) == 0 {
            return self.value(x);
        }
        self.to_expr().diff_multi(alpha).eval(x)
    }

    fn support(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }
}

/// Finite linear combination of test functions (pairing-linearity probes).
pub struct ProbeCombination {
    pub terms: Vec<(f64, TestFunction)>,
}

impl Probe for ProbeCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, p)| a * p.value(x)).sum()
    }

    fn derivative_at(&self, alpha: &[usize], x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, p)| a * p.derivative_at(alpha, x))
            .sum()
    }

    fn support(&self) -> (Vec<f64>, f64) {
        // smallest ball around the union of the member supports
        let supports: Vec<(Vec<f64>, f64)> = self.terms.iter().map(|(_, p)| p.support()).collect();
        let d = self.dim();
        let center: Vec<f64> = (0..d)
            .map(|i| supports.iter().map(|(c, _)| c[i]).sum::<f64>() / supports.len() as f64)
            .collect();
        let radius = supports
            .iter()
            .map(|(c, r)| {
                let dist: f64 = c
                    .iter()
                    .zip(&center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist + r
            })
            .fold(0.0, f64::max);
        (center, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_bump_value_at_origin() {
        let phi = TestFunction::bump_1d(0.0, 1.0, &[1.0]).unwrap();
        assert!((phi.value(&[0.0]) - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn odd_polynomial_vanishes_at_center() {
        let phi = TestFunction::bump_1d(0.0, 1.0, &[0.0, 1.0]).unwrap();
        assert_eq!(phi.value(&[0.0]), 0.0);
        assert_eq!(phi.value(&[0.3]), -phi.value(&[-0.3]));
    }

    #[test]
    fn off_center_bump_vanishes_at_origin() {
        let phi = TestFunction::bump(2, vec![3.0, 0.0], 1.0).unwrap();
        assert_eq!(phi.value(&[0.0, 0.0]), 0.0);
        assert_eq!(phi.derivative_at(&[1, 0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn exact_support() {
        let phi = TestFunction::bump_1d(0.0, 1.0, &[1.0]).unwrap();
        assert_eq!(phi.value(&[1.0]), 0.0);
        assert_eq!(phi.value(&[1.0000001]), 0.0);
        // near the boundary the profile underflows to zero well before the
        // support edge, so probe a point where the value is representable
        assert!(phi.value(&[0.99]) > 0.0);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(TestFunction::bump_1d(0.0, 0.0, &[1.0]).is_err());
        assert!(TestFunction::bump_1d(0.0, -1.0, &[1.0]).is_err());
    }

    #[test]
    fn dilation_identity_and_pointwise_law() {
        let phi = TestFunction::bump_1d(0.2, 1.0, &[1.0, 0.5]).unwrap();
        let same = phi.dilate(1.0);
        for &x in &[-0.5, 0.0, 0.4, 1.1] {
            assert_eq!(phi.value(&[x]), same.value(&[x]));
        }
        let lam = 0.25;
        let scaled = phi.dilate(lam);
        for &x in &[-0.2, 0.0, 0.1, 0.29] {
            let expect = lam.powi(-1) * phi.value(&[x / lam]);
            assert!((scaled.value(&[x]) - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
        assert!((scaled.radius - lam).abs() < 1e-15);
    }

    #[test]
    fn symbolic_derivative_matches_finite_difference() {
        let phi = TestFunction::bump_1d(0.0, 1.0, &[1.0, 2.0]).unwrap();
        let h = 1e-5;
        for &x in &[0.0, 0.3, -0.4] {
            let fd = (phi.value(&[x + h]) - phi.value(&[x - h])) / (2.0 * h);
            let sym = phi.derivative_at(&[1], &[x]);
            assert!((fd - sym).abs() < 1e-6, "x={x}: fd={fd} sym={sym}");
        }
    }
}
