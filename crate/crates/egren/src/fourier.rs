//! Directional Fourier-decay probe: estimates the sup-norm decay of the
//! windowed Fourier transform of `χt` along covector rays. This is the
//! numerical stand-in for checking strong decrease outside a cone; it is a
//! spot check, not a wave-front-set computation.

use thiserror::Error;

use crate::kernel::{DistributionKernel, Locus};
use crate::multi;
use crate::parallel::par_map;
use crate::quad::{self, QuadOpts};
use crate::testfn::{Probe, TestFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionDecay {
    /// |F(s u)| fell below the quadrature noise floor before the largest
    /// tested frequency: decay faster than any tested power.
    RapidDecay,
    /// Fitted decay exponent: |F(s u)| ~ s^{-e}.
    Exponent(f64),
    /// Oscillatory quadrature failed for this direction.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub directions: Vec<(Vec<f64>, DirectionDecay)>,
}

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("window and kernel dimensions differ")]
    DimensionMismatch,
    #[error("need at least one direction and N >= 2")]
    BadArguments,
}

/// Windowed transform `F(k) = ∫ χ(x) t(x) e^{-i k·x} dx` sampled at dyadic
/// magnitudes `s = 2^j`, `j = 0..N`, along each unit direction.
pub fn fourier_decay_probe(
    t: &DistributionKernel,
    window: &TestFunction,
    directions: &[Vec<f64>],
    n_dyadic: usize,
) -> Result<DecayReport, DecayError> {
    if t.d != window.d {
        return Err(DecayError::DimensionMismatch);
    }
    if directions.is_empty() || n_dyadic < 2 {
        return Err(DecayError::BadArguments);
    }
    let results = par_map(directions.to_vec(), |u| {
        let verdict = direction_decay(t, window, &u, n_dyadic);
        (u, verdict)
    });
    Ok(DecayReport {
        directions: results,
    })
}

fn direction_decay(
    t: &DistributionKernel,
    window: &TestFunction,
    u: &[f64],
    n_dyadic: usize,
) -> DirectionDecay {
    let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = u.iter().map(|v| v / norm).collect();
    let (center, radius) = window.support();
    let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
    let opts = QuadOpts::with_tol(1e-9, 24);

    let mut mags = Vec::with_capacity(n_dyadic + 1);
    let origin = vec![0.0; t.d];
    for j in 0..=n_dyadic {
        let s = 2.0f64.powi(j as i32);
        let mut re = 0.0;
        let mut im = 0.0;
        if t.regular.is_some() {
            let phase = |x: &[f64]| -> f64 { s * x.iter().zip(&unit).map(|(a, b)| a * b).sum::<f64>() };
            let fr = |x: &[f64]| t.eval_regular(x) * window.value(x) * phase(x).cos();
            let fi = |x: &[f64]| -t.eval_regular(x) * window.value(x) * phase(x).sin();
            let locus = &t.locus;
            let dist = |x: &[f64]| locus.distance(x);
            let singular = !matches!(t.locus, Locus::None);
            let qr = if singular {
                quad::integrate(&fr, &lo, &hi, Some(&dist), opts)
            } else {
                quad::integrate(&fr, &lo, &hi, None, opts)
            };
            let qi = if singular {
                quad::integrate(&fi, &lo, &hi, Some(&dist), opts)
            } else {
                quad::integrate(&fi, &lo, &hi, None, opts)
            };
            match (qr, qi) {
                (Ok(a), Ok(b)) => {
                    re += a.value;
                    im += b.value;
                }
                _ => return DirectionDecay::Inconclusive,
            }
        }
        // FT of c ∂^α δ against the window: c (-ik)^α χ(0)-type exact term;
        // only the magnitude matters here
        for (alpha, c) in &t.delta {
            let k_alpha: f64 = unit
                .iter()
                .zip(alpha)
                .map(|(ki, &a)| (s * ki).powi(a as i32))
                .product();
            let w0 = window.derivative_at(&vec![0; t.d], &origin);
            let term = c * k_alpha * w0;
            match multi::order(alpha) % 4 {
                0 => re += term,
                1 => im -= term,
                2 => re -= term,
                _ => im += term,
            }
        }
        mags.push((s, (re * re + im * im).sqrt()));
    }

    // quadrature noise sits near the relative tolerance of the rule
    let floor = 1e-9 * mags[0].1.max(1e-300);
    let tail_start = mags.len() / 2;
    if mags[tail_start..].iter().any(|(_, m)| *m < floor) {
        return DirectionDecay::RapidDecay;
    }
    let pts: Vec<(f64, f64)> = mags
        .iter()
        .skip(tail_start)
        .map(|(s, m)| (s.ln(), m.ln()))
        .collect();
    if pts.len() < 3 {
        return DirectionDecay::Inconclusive;
    }
    // per-octave slopes: a genuine power law has a flat slope profile, while
    // smooth kernels steepen without bound as s grows
    let ln2 = std::f64::consts::LN_2;
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / ln2).collect();
    let avg = slopes.iter().sum::<f64>() / slopes.len() as f64;
    if slopes.last().copied().unwrap_or(0.0) < avg - 0.5 {
        return DirectionDecay::RapidDecay;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    DirectionDecay::Exponent(-(sxy / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> TestFunction {
        TestFunction::bump_1d(0.0, 1.0, &[1.0]).unwrap()
    }

    #[test]
    fn smooth_kernel_decays_rapidly() {
        let t = DistributionKernel::parse(1, "exp(-x1*x1)", Locus::None).unwrap();
        let r = fourier_decay_probe(&t, &window(), &[vec![1.0]], 6).unwrap();
        match &r.directions[0].1 {
            DirectionDecay::RapidDecay => {}
            DirectionDecay::Exponent(e) => assert!(*e > 6.0, "exponent {e}"),
            DirectionDecay::Inconclusive => panic!("inconclusive"),
        }
    }

    #[test]
    fn delta_has_no_decay() {
        let t = DistributionKernel::delta_only(1, vec![(vec![0], 1.0)]);
        let r = fourier_decay_probe(&t, &window(), &[vec![1.0]], 6).unwrap();
        match &r.directions[0].1 {
            DirectionDecay::Exponent(e) => assert!(e.abs() < 0.05, "exponent {e}"),
            other => panic!("unexpected verdict {other:?}"),
        }
    }

    #[test]
    fn heaviside_decays_like_first_power() {
        // oracle for the exponent: FT of a windowed step falls off as 1/|k|
        let t = DistributionKernel::parse(1, "(1 + sign(x1)) / 2", Locus::Origin).unwrap();
        let r = fourier_decay_probe(&t, &window(), &[vec![1.0]], 7).unwrap();
        match &r.directions[0].1 {
            DirectionDecay::Exponent(e) => assert!((e - 1.0).abs() < 0.2, "exponent {e}"),
            other => panic!("unexpected verdict {other:?}"),
        }
    }
}
