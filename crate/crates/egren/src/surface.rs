//! Extension at the total diagonal of a product configuration space.
//!
//! The diagonal `Δₙ = {x₁ = … = xₙ}` in `R^{dn}` is fibered by the flat chart
//! `x_i = u + ξ_i(η) + S η`, where `u ∈ R^d` is the base (center-of-mass)
//! coordinate, `η ∈ R^{d(n-1)}` spans the relative directions via
//! `ξ_i = η_i (i < n)`, `ξ_n = -Σ η_i`, and `S` is an optional shear shifting
//! the complementary subspace. The surface is fixed pointwise under η ↦ λη
//! for any shear, so transversal scaling and fiberwise extension are
//! well-defined on the chart and shear-independent.
//!
//! Kernels that only depend on coordinate differences — every kernel of
//! interest near `Δₙ` — are constant along the base, which collapses the
//! pairing to (base mass) × (single fiber extension). Base-dependent kernels
//! fall back to a tensor Gauss–Legendre rule over the base probe with one
//! fiber extension per node.

use thiserror::Error;

use crate::expr::{self, Expr};
use crate::extension::{
    self, CutoffFamily, ExtensionError, ExtensionMode, ExtensionPairing, ExtensionResult,
    WOperator,
};
use crate::kernel::{DistributionKernel, Locus, PairingError};
use crate::multi::MultiIndex;
use crate::quad::{self, QuadOpts};
use crate::scaling::{self, DyadicScalingReport, ScalingError};
use crate::testfn::{Probe, TestFunction};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("fibration needs n >= 2 points and d >= 1")]
    TooFewPoints,
    #[error("shear must be a d x d(n-1) matrix")]
    BadShear,
    #[error("kernel dimension {got} does not match d*n = {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("delta parts are not supported at a surface")]
    DeltaAtSurface,
    #[error("probe dimensions must be (d, d(n-1))")]
    ProbeDimensionMismatch,
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

/// Flat fibration of `R^{dn}` over the total diagonal.
#[derive(Debug, Clone)]
pub struct SurfaceFibration {
    pub d: usize,
    pub n: usize,
    /// Optional shear, `d` rows by `d(n-1)` columns, added to the base leg.
    pub shear: Option<Vec<Vec<f64>>>,
}

impl SurfaceFibration {
    pub fn diagonal(d: usize, n: usize) -> Result<Self, SurfaceError> {
        if d == 0 || n < 2 {
            return Err(SurfaceError::TooFewPoints);
        }
        Ok(SurfaceFibration { d, n, shear: None })
    }

    pub fn with_shear(d: usize, n: usize, shear: Vec<Vec<f64>>) -> Result<Self, SurfaceError> {
        let fib = Self::diagonal(d, n)?;
        if shear.len() != d || shear.iter().any(|row| row.len() != d * (n - 1)) {
            return Err(SurfaceError::BadShear);
        }
        Ok(SurfaceFibration {
            shear: Some(shear),
            ..fib
        })
    }

    pub fn codim(&self) -> usize {
        self.d * (self.n - 1)
    }

    /// Relative offset `ξ_i(η) + S η` of point `i`, component `k`.
    fn offset(&self, i: usize, k: usize, eta: &[f64]) -> f64 {
        let mut v = if i + 1 < self.n {
            eta[i * self.d + k]
        } else {
            -(0..self.n - 1).map(|j| eta[j * self.d + k]).sum::<f64>()
        };
        if let Some(s) = &self.shear {
            v += s[k].iter().zip(eta).map(|(a, e)| a * e).sum::<f64>();
        }
        v
    }

    /// Chart map `(u, η) ↦ (x_1, …, x_n)`.
    pub fn embed(&self, u: &[f64], eta: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.d);
        assert_eq!(eta.len(), self.codim());
        let mut x = Vec::with_capacity(self.d * self.n);
        for i in 0..self.n {
            for k in 0..self.d {
                x.push(u[k] + self.offset(i, k, eta));
            }
        }
        x
    }

    /// Symbolic chart map with the base frozen at `u0` and fiber variables
    /// renumbered to `0..codim`.
    fn fiber_map(&self, u0: &[f64]) -> Vec<Expr> {
        let mut map = Vec::with_capacity(self.d * self.n);
        for i in 0..self.n {
            for k in 0..self.d {
                let mut e = Expr::constant(u0[k]);
                if i + 1 < self.n {
                    e = expr::add(e, Expr::var(i * self.d + k));
                } else {
                    for j in 0..self.n - 1 {
                        e = expr::sub(e, Expr::var(j * self.d + k));
                    }
                }
                if let Some(s) = &self.shear {
                    for (c, coef) in s[k].iter().enumerate() {
                        if *coef != 0.0 {
                            e = expr::add(
                                e,
                                expr::mul(Expr::constant(*coef), Expr::var(c)),
                            );
                        }
                    }
                }
                map.push(e);
            }
        }
        map
    }

    /// Restriction of `t` to the fiber over `u0`, as a kernel in the fiber
    /// coordinates with the singular locus at the fiber origin.
    pub fn fiber_kernel(
        &self,
        t: &DistributionKernel,
        u0: &[f64],
    ) -> Result<DistributionKernel, SurfaceError> {
        if t.d != self.d * self.n {
            return Err(SurfaceError::DimensionMismatch {
                got: t.d,
                want: self.d * self.n,
            });
        }
        if !t.delta.is_empty() {
            return Err(SurfaceError::DeltaAtSurface);
        }
        let reg = t.regular.as_ref().ok_or(SurfaceError::DeltaAtSurface)?;
        let restricted = reg.substitute(&self.fiber_map(u0));
        let mut k = DistributionKernel::from_expr(self.codim(), restricted, Locus::Origin);
        k.regulator = t.regulator;
        if let Some(sd) = t.declared_sd {
            k = k.with_declared_sd(sd);
        }
        Ok(k)
    }

    /// True when `t ∘ embed` is numerically independent of the base point
    /// (difference kernels always are, sheared or not).
    pub fn base_independent(&self, t: &DistributionKernel, reach: f64) -> bool {
        let Some(reg) = t.regular.as_ref() else {
            return false;
        };
        let codim = self.codim();
        // deterministic low-discrepancy-ish sample; exactness not needed,
        // a false negative only costs the slow path
        let mut probes = Vec::new();
        for s in 0..4 {
            let eta: Vec<f64> = (0..codim)
                .map(|j| reach * 0.37 * (((s * codim + j) as f64 * 2.399963).sin()))
                .collect();
            probes.push(eta);
        }
        for eta in &probes {
            let base = reg.eval(&self.embed(&vec![0.0; self.d], eta));
            for s in 1..4 {
                let u: Vec<f64> = (0..self.d)
                    .map(|k| reach * 0.61 * (((s * self.d + k) as f64 * 1.83).cos()))
                    .collect();
                let v = reg.eval(&self.embed(&u, eta));
                let scale = base.abs().max(v.abs()).max(1e-12);
                if (v - base).abs() > 1e-9 * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Probe `φ_b(u) φ_f(η)` in chart coordinates.
#[derive(Debug, Clone)]
pub struct SurfaceProbe {
    pub base: TestFunction,
    pub fiber: TestFunction,
}

impl SurfaceProbe {
    pub fn new(
        fib: &SurfaceFibration,
        base: TestFunction,
        fiber: TestFunction,
    ) -> Result<Self, SurfaceError> {
        if base.d != fib.d || fiber.d != fib.codim() {
            return Err(SurfaceError::ProbeDimensionMismatch);
        }
        Ok(SurfaceProbe { base, fiber })
    }
}

/// Default probe set: unit base bump times the standard fiber probes.
pub fn default_surface_probes(fib: &SurfaceFibration) -> Vec<SurfaceProbe> {
    let base = TestFunction::bump(fib.d, vec![0.0; fib.d], 1.0).unwrap();
    scaling::default_probes(fib.codim())
        .into_iter()
        .map(|fiber| SurfaceProbe {
            base: base.clone(),
            fiber,
        })
        .collect()
}

pub fn transversal_scaling_degree(
    t: &DistributionKernel,
    fib: &SurfaceFibration,
    probes: &[SurfaceProbe],
    n_max: usize,
) -> Result<DyadicScalingReport, SurfaceError> {
    transversal_scaling_degree_with(t, fib, probes, n_max, QuadOpts::default())
}

/// Scaling-degree estimate along the fiber directions only:
/// `t_{λ,⊥}(u, η) = t(embed(u, λη))`, slope-fitted on the dyadic schedule.
pub fn transversal_scaling_degree_with(
    t: &DistributionKernel,
    fib: &SurfaceFibration,
    probes: &[SurfaceProbe],
    n_max: usize,
    opts: QuadOpts,
) -> Result<DyadicScalingReport, SurfaceError> {
    if t.d != fib.d * fib.n {
        return Err(SurfaceError::DimensionMismatch {
            got: t.d,
            want: fib.d * fib.n,
        });
    }
    if !t.delta.is_empty() {
        return Err(SurfaceError::DeltaAtSurface);
    }
    let reach = probes
        .iter()
        .map(|p| {
            let (c, r) = p.fiber.support();
            c.iter().map(|v| v * v).sum::<f64>().sqrt() + r
        })
        .fold(1.0f64, f64::max);
    if fib.base_independent(t, reach) {
        // the base factor is a λ-independent constant, so the fiber-only
        // estimator sees the same slope
        let fiber_kernel = fib.fiber_kernel(t, &vec![0.0; fib.d])?;
        let fiber_probes: Vec<TestFunction> = probes.iter().map(|p| p.fiber.clone()).collect();
        return Ok(scaling::scaling_degree_estimate_with(
            &fiber_kernel,
            &fiber_probes,
            n_max,
            opts,
        )?);
    }
    // base-dependent path: joint quadrature with the annulus mask on η
    let reg = t.regular.as_ref().ok_or(SurfaceError::DeltaAtSurface)?;
    let codim = fib.codim();
    let mut fits = Vec::new();
    for probe in probes {
        let (bc, br) = probe.base.support();
        let (fc, fr) = probe.fiber.support();
        let mut lo: Vec<f64> = bc.iter().map(|c| c - br).collect();
        let mut hi: Vec<f64> = bc.iter().map(|c| c + br).collect();
        lo.extend(fc.iter().map(|c| c - fr));
        hi.extend(fc.iter().map(|c| c + fr));
        let eps0 = t.regulator.unwrap_or(0.0);
        let mut samples = Vec::with_capacity(n_max + 1);
        for nn in 0..=n_max {
            let lambda = 0.5f64.powi(nn as i32);
            let eps = eps0 * lambda;
            let f = |y: &[f64]| {
                let (u, eta) = y.split_at(fib.d);
                let r = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
                let win = scaling::annulus_window(r, 0.25 * fr, 0.5 * fr);
                if win == 0.0 {
                    return 0.0;
                }
                let scaled: Vec<f64> = eta.iter().map(|v| v * lambda).collect();
                reg.eval_with_eps(&fib.embed(u, &scaled), eps)
                    * win
                    * probe.base.value(u)
                    * probe.fiber.value(eta)
            };
            let dist = |y: &[f64]| {
                y[fib.d..].iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            let q = quad::integrate(&f, &lo, &hi, Some(&dist), opts)
                .map_err(PairingError::from)?;
            samples.push((lambda, q.value.abs()));
        }
        if let Some(fit) = scaling::fit_tail(&samples) {
            fits.push(fit);
        }
        let _ = codim;
    }
    let best = fits
        .iter()
        .cloned()
        .max_by(|a, b| a.sd_estimate.total_cmp(&b.sd_estimate))
        .ok_or(ScalingError::Inconclusive)?;
    Ok(DyadicScalingReport {
        sd_estimate: best.sd_estimate,
        residual: best.residual,
        probes: fits,
        exact: false,
    })
}

/// Extension of `t0` across the diagonal, applied fiber by fiber.
pub struct SurfaceExtension {
    pub t0: DistributionKernel,
    pub fib: SurfaceFibration,
    pub mode: ExtensionMode,
    pub constants: Vec<(MultiIndex, f64)>,
    pub ambiguity_dimension: usize,
    /// Transversal scaling degree used for the mode decision.
    pub sd_transversal: f64,
    pub base_independent: bool,
    cutoff: CutoffFamily,
    w: Option<WOperator>,
    n_max: usize,
}

impl SurfaceExtension {
    pub fn pair(&self, probe: &SurfaceProbe) -> Result<ExtensionPairing, SurfaceError> {
        self.pair_with(probe, QuadOpts::default())
    }

    pub fn pair_with(
        &self,
        probe: &SurfaceProbe,
        opts: QuadOpts,
    ) -> Result<ExtensionPairing, SurfaceError> {
        if probe.base.d != self.fib.d || probe.fiber.d != self.fib.codim() {
            return Err(SurfaceError::ProbeDimensionMismatch);
        }
        let (bc, br) = probe.base.support();
        let lo: Vec<f64> = bc.iter().map(|c| c - br).collect();
        let hi: Vec<f64> = bc.iter().map(|c| c + br).collect();
        if self.base_independent {
            let mass = quad::integrate(&|u: &[f64]| probe.base.value(u), &lo, &hi, None, opts)
                .map_err(PairingError::from)?;
            let fiber = self.fiber_extension(&vec![0.0; self.fib.d])?;
            let p = fiber.extension.pair_with(&probe.fiber, opts)?;
            return Ok(ExtensionPairing {
                value: mass.value * p.value,
                error: mass.value.abs() * p.error + p.value.abs() * mass.error,
                tail_bound: mass.value.abs() * p.tail_bound,
                terms_used: p.terms_used,
            });
        }
        // tensor Gauss-Legendre over the base, one fiber extension per node;
        // the integrand is smooth in u so a fixed moderate order suffices
        let (nodes, weights) = gauss_legendre_12();
        let mut grids: Vec<Vec<(f64, f64)>> = Vec::with_capacity(self.fib.d);
        for k in 0..self.fib.d {
            grids.push(
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| {
                        let half = 0.5 * (hi[k] - lo[k]);
                        (lo[k] + half * (x + 1.0), half * w)
                    })
                    .collect(),
            );
        }
        let mut value = 0.0;
        let mut error = 0.0;
        let mut tail = 0.0;
        let mut terms = 0usize;
        let mut idx = vec![0usize; self.fib.d];
        loop {
            let mut u = Vec::with_capacity(self.fib.d);
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                u.push(grids[k][i].0);
                w *= grids[k][i].1;
            }
            let bv = probe.base.value(&u);
            if bv != 0.0 {
                let fiber = self.fiber_extension(&u)?;
                let p = fiber.extension.pair_with(&probe.fiber, opts)?;
                value += w * bv * p.value;
                error += (w * bv).abs() * p.error;
                tail += (w * bv).abs() * p.tail_bound;
                terms = terms.max(p.terms_used);
            }
            let mut k = 0;
            loop {
                if k == self.fib.d {
                    return Ok(ExtensionPairing {
                        value,
                        error,
                        tail_bound: tail,
                        terms_used: terms,
                    });
                }
                idx[k] += 1;
                if idx[k] < grids[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn fiber_extension(&self, u0: &[f64]) -> Result<ExtensionResult, SurfaceError> {
        let kernel = self
            .fib
            .fiber_kernel(&self.t0, u0)?
            .with_declared_sd(self.sd_transversal);
        let res = match (&self.mode, &self.w) {
            (ExtensionMode::Unique, _) => {
                extension::extend_unique(kernel, self.cutoff.clone(), self.n_max)?
            }
            (ExtensionMode::Ambiguous, Some(w)) => extension::extend_with_w(
                kernel,
                w.clone(),
                self.constants.clone(),
                self.cutoff.clone(),
                self.n_max,
            )?,
            (ExtensionMode::Ambiguous, None) => unreachable!("ambiguous mode carries a W"),
        };
        Ok(res)
    }
}

/// Fiberwise extension across `Δₙ`: mode and ambiguity count use the
/// codimension `d(n-1)` in place of the point-case dimension.
pub fn extend_at_surface(
    t0: DistributionKernel,
    fib: SurfaceFibration,
    w: Option<WOperator>,
    constants: Vec<(MultiIndex, f64)>,
    cutoff: CutoffFamily,
    n_max: usize,
) -> Result<SurfaceExtension, SurfaceError> {
    if t0.d != fib.d * fib.n {
        return Err(SurfaceError::DimensionMismatch {
            got: t0.d,
            want: fib.d * fib.n,
        });
    }
    if !t0.delta.is_empty() {
        return Err(SurfaceError::DeltaAtSurface);
    }
    let codim = fib.codim();
    let sd = match t0.declared_sd {
        Some(sd) => sd,
        None => {
            transversal_scaling_degree(&t0, &fib, &default_surface_probes(&fib), 12)?.sd_estimate
        }
    };
    let reach = 8.0;
    let base_independent = fib.base_independent(&t0, reach);
    if sd < codim as f64 {
        Ok(SurfaceExtension {
            t0,
            fib,
            mode: ExtensionMode::Unique,
            constants: Vec::new(),
            ambiguity_dimension: 0,
            sd_transversal: sd,
            base_independent,
            cutoff,
            w: None,
            n_max,
        })
    } else {
        let expected = (sd - codim as f64).floor() as usize;
        let w = match w {
            Some(w) => w,
            None => WOperator::new(codim, sd - codim as f64, cutoff.clone()),
        };
        if w.order != expected || w.d != codim {
            return Err(SurfaceError::Extension(ExtensionError::OrderMismatch {
                w_order: w.order,
                expected,
            }));
        }
        let ambiguity = extension::ambiguity_dimension(codim, sd);
        let mut full: Vec<(MultiIndex, f64)> = w
            .alphas
            .iter()
            .map(|a| {
                let v = constants
                    .iter()
                    .find(|(b, _)| b == a)
                    .map(|(_, c)| *c)
                    .unwrap_or(0.0);
                (a.clone(), v)
            })
            .collect();
        full.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(SurfaceExtension {
            t0,
            fib,
            mode: ExtensionMode::Ambiguous,
            constants: full,
            ambiguity_dimension: ambiguity,
            sd_transversal: sd,
            base_independent,
            cutoff,
            w: Some(w),
            n_max,
        })
    }
}

/// 12-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre_12() -> (Vec<f64>, Vec<f64>) {
    let half_nodes = [
        0.125_233_408_511_469,
        0.367_831_498_998_180,
        0.587_317_954_286_617,
        0.769_902_674_194_305,
        0.904_117_256_370_475,
        0.981_560_634_246_719,
    ];
    let half_weights = [
        0.249_147_045_813_403,
        0.233_492_536_538_355,
        0.203_167_426_723_066,
        0.160_078_328_543_346,
        0.106_939_325_995_318,
        0.047_175_336_386_512,
    ];
    let mut nodes = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for (x, w) in half_nodes.iter().zip(&half_weights).rev() {
        nodes.push(-x);
        weights.push(*w);
    }
    for (x, w) in half_nodes.iter().zip(&half_weights) {
        nodes.push(*x);
        weights.push(*w);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_1d() -> SurfaceProbe {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        SurfaceProbe::new(
            &fib,
            TestFunction::bump(1, vec![0.0], 1.0).unwrap(),
            TestFunction::bump(1, vec![0.0], 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn embed_hits_the_diagonal_at_zero_fiber() {
        let fib = SurfaceFibration::diagonal(2, 3).unwrap();
        let x = fib.embed(&[1.0, -2.0], &[0.0; 4]);
        assert_eq!(x, vec![1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
        // fiber offsets sum to zero over the points
        let x = fib.embed(&[0.0, 0.0], &[1.0, 2.0, 3.0, -4.0]);
        for k in 0..2 {
            let s: f64 = (0..3).map(|i| x[2 * i + k]).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn shear_preserves_the_surface_pointwise() {
        let fib = SurfaceFibration::with_shear(2, 2, vec![vec![0.3, -0.7], vec![1.1, 0.2]])
            .unwrap();
        let x = fib.embed(&[0.5, 0.5], &[0.0, 0.0]);
        assert_eq!(x, vec![0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn difference_kernel_is_base_independent() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "pow(abs(x1 - x2), -0.5)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap();
        assert!(fib.base_independent(&t, 2.0));
        let t2 = DistributionKernel::parse(2, "x1 * x2", Locus::None).unwrap();
        assert!(!fib.base_independent(&t2, 2.0));
    }

    #[test]
    fn transversal_degree_of_1d_difference_kernel() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "pow(abs(x1 - x2), -0.5)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap();
        let report =
            transversal_scaling_degree(&t, &fib, &default_surface_probes(&fib), 12).unwrap();
        assert!((report.sd_estimate - 0.5).abs() < 0.05, "{}", report.sd_estimate);
    }

    #[test]
    fn transversal_degree_of_smooth_kernel_is_nonpositive() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(2, "1 + (x1 - x2)^2", Locus::None).unwrap();
        let report =
            transversal_scaling_degree(&t, &fib, &default_surface_probes(&fib), 12).unwrap();
        assert!(report.sd_estimate <= 0.05, "{}", report.sd_estimate);
    }

    #[test]
    fn base_dependent_path_agrees_with_fast_path_on_a_product_kernel() {
        // (1 + u^2)-modulated difference kernel: base-dependent, but the
        // transversal slope is untouched by the smooth base factor
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "(1 + ((x1 + x2)/2)^2) * pow(abs(x1 - x2), -0.5)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap();
        assert!(!fib.base_independent(&t, 2.0));
        let report = transversal_scaling_degree_with(
            &t,
            &fib,
            &default_surface_probes(&fib),
            10,
            QuadOpts::with_tol(1e-6, 30),
        )
        .unwrap();
        assert!((report.sd_estimate - 0.5).abs() < 0.08, "{}", report.sd_estimate);
    }

    #[test]
    fn unique_surface_extension_matches_2d_quadrature() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "pow(abs(x1 - x2), -0.5)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap()
        .with_declared_sd(0.5);
        let ext = extend_at_surface(
            t.clone(),
            fib.clone(),
            None,
            Vec::new(),
            CutoffFamily::new(1, 0.25, 0.5),
            40,
        )
        .unwrap();
        assert_eq!(ext.mode, ExtensionMode::Unique);
        assert_eq!(ext.ambiguity_dimension, 0);
        let probe = probe_1d();
        let got = ext.pair_with(&probe, QuadOpts::with_tol(1e-9, 34)).unwrap();

        // oracle: 2D quadrature in chart coordinates, graded toward the
        // surface by η = v|v| (the Jacobian 2|v| absorbs the singularity)
        let reg = t.regular.as_ref().unwrap();
        let f = |y: &[f64]| {
            let eta = y[1] * y[1].abs();
            let x = fib.embed(&y[0..1], &[eta]);
            reg.eval(&x) * probe.base.value(&y[0..1]) * probe.fiber.value(&[eta])
                * 2.0
                * y[1].abs()
        };
        let oracle = quad::integrate(
            &f,
            &[-1.0, -1.0],
            &[1.0, 1.0],
            None,
            QuadOpts::with_tol(1e-10, 34),
        )
        .unwrap();
        let rel = (got.value - oracle.value).abs() / oracle.value.abs();
        assert!(rel < 1e-5, "got {} oracle {}", got.value, oracle.value);
    }

    #[test]
    fn critical_surface_extension_is_ambiguous_dimension_one() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "pow(abs(x1 - x2), -1)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap()
        .with_declared_sd(1.0);
        let ext = extend_at_surface(
            t,
            fib,
            None,
            Vec::new(),
            CutoffFamily::new(1, 0.25, 0.5),
            40,
        )
        .unwrap();
        assert_eq!(ext.mode, ExtensionMode::Ambiguous);
        assert_eq!(ext.ambiguity_dimension, 1);
        // the subtracted pairing exists on a generic probe
        let probe = probe_1d();
        let p = ext.pair_with(&probe, QuadOpts::with_tol(1e-9, 34)).unwrap();
        assert!(p.value.is_finite());
    }

    #[test]
    fn smooth_surface_extension_coincides_with_kernel() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(2, "1 + (x1 - x2)^2", Locus::None)
            .unwrap()
            .with_declared_sd(0.0);
        let ext = extend_at_surface(
            t.clone(),
            fib.clone(),
            None,
            Vec::new(),
            CutoffFamily::new(1, 0.25, 0.5),
            40,
        )
        .unwrap();
        let probe = probe_1d();
        let got = ext.pair_with(&probe, QuadOpts::with_tol(1e-9, 30)).unwrap();
        let reg = t.regular.as_ref().unwrap();
        let f = |y: &[f64]| {
            let x = fib.embed(&y[0..1], &y[1..2]);
            reg.eval(&x) * probe.base.value(&y[0..1]) * probe.fiber.value(&y[1..2])
        };
        let oracle = quad::integrate(
            &f,
            &[-1.0, -1.0],
            &[1.0, 1.0],
            None,
            QuadOpts::with_tol(1e-9, 30),
        )
        .unwrap();
        let rel = (got.value - oracle.value).abs() / oracle.value.abs();
        assert!(rel < 1e-6, "got {} oracle {}", got.value, oracle.value);
    }

    #[test]
    fn base_dependent_extension_pairs_via_node_grid() {
        let fib = SurfaceFibration::diagonal(1, 2).unwrap();
        let t = DistributionKernel::parse(
            2,
            "(1 + ((x1 + x2)/2)^2) * pow(abs(x1 - x2), -0.5)",
            Locus::Subspace(vec![vec![1.0, 1.0]]),
        )
        .unwrap()
        .with_declared_sd(0.5);
        let ext = extend_at_surface(
            t.clone(),
            fib.clone(),
            None,
            Vec::new(),
            CutoffFamily::new(1, 0.25, 0.5),
            40,
        )
        .unwrap();
        assert!(!ext.base_independent);
        let probe = probe_1d();
        let got = ext.pair_with(&probe, QuadOpts::with_tol(1e-8, 30)).unwrap();
        let reg = t.regular.as_ref().unwrap();
        let f = |y: &[f64]| {
            let eta = y[1] * y[1].abs();
            let x = fib.embed(&y[0..1], &[eta]);
            reg.eval(&x) * probe.base.value(&y[0..1]) * probe.fiber.value(&[eta])
                * 2.0
                * y[1].abs()
        };
        let oracle = quad::integrate(
            &f,
            &[-1.0, -1.0],
            &[1.0, 1.0],
            None,
            QuadOpts::with_tol(1e-10, 34),
        )
        .unwrap();
        let rel = (got.value - oracle.value).abs() / oracle.value.abs();
        assert!(rel < 1e-4, "got {} oracle {}", got.value, oracle.value);
    }
}

