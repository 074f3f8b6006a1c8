//! Numerical distributions as pairing engines: a regular kernel evaluable
//! off a singular locus plus an exact delta-derivative part.

use thiserror::Error;

use crate::expr::{self, Expr};
use crate::multi::{self, MultiIndex};
use crate::quad::{self, QuadError, QuadOpts};
use crate::testfn::Probe;

#[derive(Debug, Clone, PartialEq)]
pub enum Locus {
    /// No singular set; the regular part is smooth everywhere.
    None,
    Origin,
    /// Linear subspace spanned by the given basis vectors (surface mode).
    Subspace(Vec<Vec<f64>>),
}

impl Locus {
    /// Euclidean distance from `x` to the locus.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Locus::None => f64::INFINITY,
            Locus::Origin => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Locus::Subspace(basis) => {
                // distance to span(basis); basis assumed orthogonalized on construction
                let mut res: Vec<f64> = x.to_vec();
                for b in basis {
                    let nb: f64 = b.iter().map(|v| v * v).sum();
                    if nb == 0.0 {
                        continue;
                    }
                    let proj: f64 = res.iter().zip(b).map(|(r, v)| r * v).sum::<f64>() / nb;
                    for (r, v) in res.iter_mut().zip(b) {
                        *r -= proj * v;
                    }
                }
                res.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistributionKernel {
    pub d: usize,
    pub regular: Option<Expr>,
    pub locus: Locus,
    /// Terms `c_alpha ∂^alpha δ`.
    pub delta: Vec<(MultiIndex, f64)>,
    /// Declared scaling degree, used as the integrability gate at the locus.
    pub declared_sd: Option<f64>,
    /// Regulator magnitude for `eps` kernels; coupled to dilation in the
    /// estimator (`eps_n = eps0 * lambda_n`).
    pub regulator: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingValue {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Error)]
pub enum PairingError {
    #[error("quadrature did not converge: {0}")]
    NonIntegrable(#[from] QuadError),
    #[error("probe support meets the singular locus and declared sd {sd} >= d {d}; use the extension engine")]
    NeedsExtension { sd: f64, d: usize },
    #[error("dimension mismatch: kernel d={kernel}, probe d={probe}")]
    DimensionMismatch { kernel: usize, probe: usize },
    #[error("kernel regular part is not differentiable")]
    NotDifferentiable,
    #[error("tensor of mixed regular/delta kernels is not representable")]
    TensorUnsupported,
}

impl DistributionKernel {
    pub fn from_expr(d: usize, regular: Expr, locus: Locus) -> Self {
        DistributionKernel {
            d,
            regular: Some(regular),
            locus,
            delta: Vec::new(),
            declared_sd: None,
            regulator: None,
        }
    }

    pub fn parse(d: usize, dsl: &str, locus: Locus) -> Result<Self, expr::ParseError> {
        Ok(Self::from_expr(d, expr::parse(dsl, d)?, locus))
    }

    pub fn delta_only(d: usize, delta: Vec<(MultiIndex, f64)>) -> Self {
        DistributionKernel {
            d,
            regular: None,
            locus: Locus::Origin,
            delta,
            declared_sd: None,
            regulator: None,
        }
    }

    pub fn with_declared_sd(mut self, sd: f64) -> Self {
        self.declared_sd = Some(sd);
        self
    }

    pub fn eval_regular(&self, x: &[f64]) -> f64 {
        self.eval_regular_with_eps(x, self.regulator.unwrap_or(0.0))
    }

    pub fn eval_regular_with_eps(&self, x: &[f64], eps: f64) -> f64 {
        self.regular
            .as_ref()
            .map_or(0.0, |e| e.eval_with_eps(x, eps))
    }

    /// Dual pairing `<t, φ>` at the default tolerance.
    pub fn pair(&self, phi: &dyn Probe) -> Result<PairingValue, PairingError> {
        self.pair_with(phi, QuadOpts::default())
    }

    pub fn pair_with(&self, phi: &dyn Probe, opts: QuadOpts) -> Result<PairingValue, PairingError> {
        if self.d != phi.dim() {
            return Err(PairingError::DimensionMismatch {
                kernel: self.d,
                probe: phi.dim(),
            });
        }
        let (center, radius) = phi.support();
        let touches_locus = self.regular.is_some()
            && !matches!(self.locus, Locus::None)
            && self.locus.distance(&center) <= radius;
        if touches_locus {
            if let Some(sd) = self.declared_sd {
                if sd >= self.d as f64 {
                    return Err(PairingError::NeedsExtension { sd, d: self.d });
                }
            }
        }

        let mut value = 0.0;
        let mut error = 0.0;
        if let Some(reg) = &self.regular {
            let eps = self.regulator.unwrap_or(0.0);
            let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
            let f = |x: &[f64]| reg.eval_with_eps(x, eps) * phi.value(x);
            let locus = &self.locus;
            let dist = |x: &[f64]| locus.distance(x);
            let q = if touches_locus {
                quad::integrate(&f, &lo, &hi, Some(&dist), opts)?
            } else {
                quad::integrate(&f, &lo, &hi, None, opts)?
            };
            value += q.value;
            error += q.error;
        }
        // <c ∂^α δ, φ> = c (-1)^{|α|} ∂^α φ(0)
        let origin = vec![0.0; self.d];
        for (alpha, c) in &self.delta {
            let sign = if multi::order(alpha) % 2 == 0 { 1.0 } else { -1.0 };
            value += c * sign * phi.derivative_at(alpha, &origin);
        }
        Ok(PairingValue { value, error })
    }

    /// `∂^α t`, realized symbolically on the regular part and by index shift
    /// on the delta part.
    pub fn derive(&self, alpha: &[usize]) -> Result<DistributionKernel, PairingError> {
        let regular = self.regular.as_ref().map(|e| e.diff_multi(alpha));
        let delta = self
            .delta
            .iter()
            .map(|(beta, c)| (multi::addm(alpha, beta), *c))
            .collect();
        Ok(DistributionKernel {
            d: self.d,
            regular,
            locus: self.locus.clone(),
            delta,
            declared_sd: None,
            regulator: self.regulator,
        })
    }

    /// `x^α t`.
    pub fn multiply_monomial(&self, alpha: &[usize]) -> DistributionKernel {
        let regular = self.regular.as_ref().map(|e| {
            let mut m = e.clone();
            for (i, &k) in alpha.iter().enumerate() {
                for _ in 0..k {
                    m = expr::mul(m, Expr::var(i));
                }
            }
            m
        });
        // x^α ∂^β δ = (-1)^{|α|} β!/(β-α)! ∂^{β-α} δ when α <= β, else 0
        let mut delta = Vec::new();
        for (beta, c) in &self.delta {
            if multi::leq(alpha, beta) {
                let reduced = multi::sub(beta, alpha);
                let factor = multi::multi_factorial(beta) / multi::multi_factorial(&reduced);
                let sign = if multi::order(alpha) % 2 == 0 { 1.0 } else { -1.0 };
                delta.push((reduced, c * sign * factor));
            }
        }
        DistributionKernel {
            d: self.d,
            regular,
            locus: self.locus.clone(),
            delta,
            declared_sd: None,
            regulator: self.regulator,
        }
    }

    /// `f t` for smooth `f` given as an expression.
    pub fn multiply_smooth(&self, f: &Expr) -> DistributionKernel {
        let regular = self
            .regular
            .as_ref()
            .map(|e| expr::mul(f.clone(), e.clone()));
        // f ∂^β δ = Σ_{γ<=β} (-1)^{|γ|} C(β,γ) ∂^γ f(0) ∂^{β-γ} δ
        let origin = vec![0.0; self.d];
        let mut delta = Vec::new();
        for (beta, c) in &self.delta {
            for gamma in multi::multi_indices_up_to(self.d, multi::order(beta)) {
                if !multi::leq(&gamma, beta) {
                    continue;
                }
                let df0 = f.diff_multi(&gamma).eval(&origin);
                if df0 == 0.0 {
                    continue;
                }
                let sign = if multi::order(&gamma) % 2 == 0 { 1.0 } else { -1.0 };
                let coeff = c * sign * multi::multi_binomial(beta, &gamma) * df0;
                delta.push((multi::sub(beta, &gamma), coeff));
            }
        }
        DistributionKernel {
            d: self.d,
            regular,
            locus: self.locus.clone(),
            delta,
            declared_sd: None,
            regulator: self.regulator,
        }
    }

    /// Tensor product on disjoint variable blocks. Mixed regular/delta
    /// factors are not representable in this kernel model.
    pub fn tensor(&self, other: &DistributionKernel) -> Result<DistributionKernel, PairingError> {
        let d = self.d + other.d;
        match (
            (&self.regular, self.delta.is_empty()),
            (&other.regular, other.delta.is_empty()),
        ) {
            ((Some(a), true), (Some(b), true)) => {
                let regular = expr::mul(a.clone(), b.shift_vars(self.d));
                let locus = match (&self.locus, &other.locus) {
                    (Locus::None, Locus::None) => Locus::None,
                    _ => Locus::Origin,
                };
                Ok(DistributionKernel {
                    d,
                    regular: Some(regular),
                    locus,
                    delta: Vec::new(),
                    declared_sd: None,
                    regulator: None,
                })
            }
            ((None, _), (None, _)) => {
                let mut delta = Vec::new();
                for (a, ca) in &self.delta {
                    for (b, cb) in &other.delta {
                        let mut idx = a.clone();
                        idx.extend_from_slice(b);
                        delta.push((idx, ca * cb));
                    }
                }
                Ok(DistributionKernel::delta_only(d, delta))
            }
            _ => Err(PairingError::TensorUnsupported),
        }
    }
}
