//! Exact risk on the Fourier side.
//!
//! With `B(h) = ∫φ_f(t)²(φ_K(th) − 1)² dt` and
//! `V(h) = (1/(nh))∫φ_K² − (1/n)∫φ_f(t)²φ_K(th)² dt`, Parseval gives
//! `2π·MISE = B(h) + V(h)`. The integrated squared error of a realised estimate is
//! expanded into pair sums of `K_h * K_h` and point evaluations of `K_h * f`, both
//! exact, so no spatial grid is ever formed.

use std::f64::consts::PI;
use std::fmt;

use crate::densities::{DensitySpec, Sample};
use crate::error::{Error, Result};
use crate::fourier::{cos_transform_smooth, truncation_point, PiecewisePoly};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::numerics::{integrate_panels, minimize_scalar, refined_edges, QuadratureSettings};

/// `B(h)`, `V(h)` and `MISE = (B + V)/(2π)` at one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub h: f64,
    pub n: u64,
    pub bias_term: f64,
    pub variance_term: f64,
    pub mise: f64,
}

impl fmt::Display for RiskReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "h = {:.12e}", self.h)?;
        writeln!(f, "bias_term = {:.12e}", self.bias_term)?;
        writeln!(f, "variance_term = {:.12e}", self.variance_term)?;
        write!(f, "mise = {:.12e}", self.mise)
    }
}

/// Minimiser `h₀ₙ` of the MISE and the minimal value `Φ(n, f, K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalBandwidthResult {
    pub h0n: f64,
    pub phi: f64,
    pub bracket: (f64, f64),
}

fn risk_settings() -> QuadratureSettings {
    QuadratureSettings::new(1e-15, 1e-12, 1 << 15).expect("valid settings")
}

/// Truncation of integrals weighted by `φ_f²` (the support when compact).
fn density_upper(density: &DensitySpec) -> Result<f64> {
    density.square_upper(|_| 1.0, "risk integral")
}

fn merged_breaks(kernel: &KernelSpec, h: f64, density: &DensitySpec, upper: f64) -> Vec<f64> {
    let mut b: Vec<f64> = kernel
        .cf_breakpoints()
        .iter()
        .map(|s| s / h)
        .chain(density.cf_breakpoints().iter().copied())
        .filter(|&t| t > 0.0 && t < upper)
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Panels no wider than one period of `φ_K(th)` when that is oscillatory.
fn panel_width(kernel: &KernelSpec, h: f64, upper: f64) -> f64 {
    if kernel.char_fn().is_gaussian() || kernel.cf_support_upper().is_finite() {
        upper
    } else {
        2.0 * PI / h
    }
}

/// Half-line integrals `∫₀ φ_f²(φ_K(th) − 1)²` and `∫₀ φ_f² φ_K(th)²`.
fn half_line_terms(kernel: &KernelSpec, density: &DensitySpec, h: f64) -> Result<(f64, f64)> {
    let st = risk_settings();
    let upper = density_upper(density)?;
    let breaks = merged_breaks(kernel, h, density, upper);
    let edges = refined_edges(0.0, upper, &breaks, panel_width(kernel, h, upper));
    let bias = integrate_panels(
        |t| {
            let f = density.cf(t);
            let d = kernel.cf(t * h) - 1.0;
            f * f * d * d
        },
        &edges,
        &st,
    )?;
    let k_upper = (kernel.cf_support_upper() / h).min(upper);
    let cross = if k_upper <= 0.0 {
        0.0
    } else {
        let edges = refined_edges(0.0, k_upper, &breaks, panel_width(kernel, h, k_upper));
        integrate_panels(
            |t| {
                let f = density.cf(t);
                let k = kernel.cf(t * h);
                f * f * k * k
            },
            &edges,
            &st,
        )?
    };
    Ok((bias, cross))
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidInput("sample size n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `MISE(h)` through the Parseval decomposition.
pub fn mise_exact(kernel: &KernelSpec, density: &DensitySpec, n: u64, h: f64) -> Result<RiskReport> {
    check_n(n)?;
    check_bandwidth(h)?;
    let (bias_half, cross_half) = half_line_terms(kernel, density, h)?;
    let kernel_sq = 2.0 * PI * kernel.roughness()?;
    let nf = n as f64;
    let bias_term = 2.0 * bias_half;
    // ∫φ_K(th)²(1 − φ_f²) >= 0; clamp rounding
    let variance_term = ((kernel_sq / h - 2.0 * cross_half) / nf).max(0.0);
    Ok(RiskReport {
        h,
        n,
        bias_term,
        variance_term,
        mise: (bias_term + variance_term) / (2.0 * PI),
    })
}

/// `R(K)/(nh) − R(K_h * f)/n`, the integrated variance, with `R(K_h * f)` integrated
/// in the kernel's own frequency variable `s = th`. Agrees with
/// `mise_exact(..).variance_term / (2π)`, which integrates in `t`.
pub fn variance_identity_check(kernel: &KernelSpec, density: &DensitySpec, n: u64, h: f64) -> Result<f64> {
    check_n(n)?;
    check_bandwidth(h)?;
    Ok(kernel.roughness()? / (n as f64 * h) - smoothed_roughness(kernel, density, h)? / n as f64)
}

/// `R(K_h * f) = (1/2π)∫φ_K(th)²φ_f(t)² dt = (1/(πh))∫₀ φ_K(s)²φ_f(s/h)² ds`.
pub fn smoothed_roughness(kernel: &KernelSpec, density: &DensitySpec, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let st = risk_settings();
    let f_upper = density_upper(density)? * h;
    let k_upper = if kernel.cf_support_upper().is_finite() {
        kernel.cf_support_upper()
    } else {
        kernel.cf_square_upper(1e-12)?
    };
    let upper = f_upper.min(k_upper);
    let mut breaks: Vec<f64> = kernel
        .cf_breakpoints()
        .iter()
        .copied()
        .chain(density.cf_breakpoints().iter().map(|b| b * h))
        .filter(|&s| s > 0.0 && s < upper)
        .collect();
    breaks.sort_by(f64::total_cmp);
    let width = if kernel.char_fn().is_gaussian() || kernel.cf_support_upper().is_finite() {
        upper
    } else {
        2.0 * PI
    };
    let edges = refined_edges(0.0, upper, &breaks, width);
    let v = integrate_panels(
        |s| {
            let k = kernel.cf(s);
            let f = density.cf(s / h);
            k * k * f * f
        },
        &edges,
        &st,
    )?;
    Ok(v / (PI * h))
}

/// Default search interval for `h₀ₙ`: `[0.05, 20]·S_K/D_f` when that ratio exists,
/// otherwise `[10⁻³, 10]`.
pub fn default_bracket(kernel: &KernelSpec, density: &DensitySpec) -> (f64, f64) {
    match zero_bias_bandwidth(kernel, density) {
        Ok(h) => (0.05 * h, 20.0 * h),
        Err(_) => (1e-3, 10.0),
    }
}

const SCAN_POINTS: usize = 64;

/// Minimises `MISE(h)` over `[h_lo, h_hi]`.
///
/// A log-spaced scan locates the best cell, Brent's method refines it, and the
/// result is never worse than the scan or the bracket ends. If the curve is flat to
/// the right of the minimiser the largest flat point is returned.
pub fn optimal_bandwidth(
    kernel: &KernelSpec,
    density: &DensitySpec,
    n: u64,
    h_lo: f64,
    h_hi: f64,
) -> Result<OptimalBandwidthResult> {
    if !(h_lo > 0.0 && h_lo < h_hi && h_hi.is_finite()) {
        return Err(Error::InvalidBracket { lo: h_lo, hi: h_hi });
    }
    check_n(n)?;
    let risk = |h: f64| mise_exact(kernel, density, n, h).map(|r| r.mise);

    let ratio = (h_hi / h_lo).ln();
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i + 1 == SCAN_POINTS {
                h_hi
            } else {
                h_lo * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp()
            }
        })
        .collect();
    let values = grid.iter().map(|&h| risk(h)).collect::<Result<Vec<f64>>>()?;
    let best = (0..grid.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .expect("nonempty grid");

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut failure = None;
    let (mut h0, mut phi) = minimize_scalar(
        |h| match risk(h) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-10 * grid[best],
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if values[best] < phi || (values[best] == phi && grid[best] > h0) {
        h0 = grid[best];
        phi = values[best];
    }

    // Flat to the right: push h to the end of the plateau.
    let flat = |v: f64| v <= phi + 1e-13 * phi.abs();
    let probe = (h0 * (1.0 + 1e-6)).min(h_hi);
    if probe > h0 && flat(risk(probe)?) {
        let (mut a, mut b) = (probe, h_hi);
        if flat(risk(b)?) {
            a = b;
        } else {
            while b - a > 1e-10 * a {
                let m = 0.5 * (a + b);
                if flat(risk(m)?) {
                    a = m;
                } else {
                    b = m;
                }
            }
        }
        h0 = a;
        phi = risk(a)?.min(phi);
    }

    Ok(OptimalBandwidthResult {
        h0n: h0,
        phi,
        bracket: (h_lo, h_hi),
    })
}

/// `Φ(n, f, K) = min_h MISE` over the default bracket.
pub fn min_mise(kernel: &KernelSpec, density: &DensitySpec, n: u64) -> Result<OptimalBandwidthResult> {
    let (lo, hi) = default_bracket(kernel, density);
    optimal_bandwidth(kernel, density, n, lo, hi)
}

/// `x ↦ (K_h * f)(x) = (1/2π)∫φ_K(th)φ_f(t)cos(tx) dt`.
enum Convolver<'a> {
    Exact(PiecewisePoly),
    Numeric {
        kernel: &'a KernelSpec,
        density: &'a DensitySpec,
        h: f64,
        breaks: Vec<f64>,
        upper: f64,
    },
}

impl<'a> Convolver<'a> {
    fn new(kernel: &'a KernelSpec, density: &'a DensitySpec, h: f64) -> Result<Self> {
        if let (Some(k), Some(f)) = (kernel.char_fn().as_piecewise(), density.char_fn().as_piecewise()) {
            return Ok(Convolver::Exact(k.scaled(h).product(f)));
        }
        let k_sup = kernel.cf_support_upper() / h;
        let f_sup = density.char_fn().support();
        let upper = if k_sup.is_finite() || f_sup.is_finite() {
            k_sup.min(f_sup)
        } else {
            let cap = (kernel.char_fn().cap() / h).min(density.char_fn().cap());
            truncation_point(
                |t| kernel.char_fn().envelope(t * h) * density.char_fn().envelope(t),
                1.0,
                cap,
                1e-16,
            )
            .ok_or_else(|| Error::NonConvergence("φ_K(th)φ_f(t) does not decay before the cap".into()))?
        };
        let breaks = merged_breaks(kernel, h, density, upper);
        Ok(Convolver::Numeric {
            kernel,
            density,
            h,
            breaks,
            upper,
        })
    }

    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Convolver::Exact(p) => Ok(p.cos_transform(x) / (2.0 * PI)),
            Convolver::Numeric {
                kernel,
                density,
                h,
                breaks,
                upper,
            } => {
                let v = cos_transform_smooth(
                    |t| kernel.cf(t * h) * density.cf(t),
                    breaks,
                    *upper,
                    x,
                    &risk_settings(),
                )?;
                Ok(v / (2.0 * PI))
            }
        }
    }
}

/// Integrated squared error `∫(f̂ − f)² = (1/2π)∫|φ_n(t)φ_K(th) − φ_f(t)|² dt` of the
/// estimate built from `sample`, unscaled.
///
/// Evaluated as `(1/n²)ΣΣ(K_h*K_h)(X_i − X_j) − (2/n)Σ(K_h*f)(X_i) + R(f)`.
pub fn ise_exact(kernel: &KernelSpec, h: f64, sample: &Sample, density: &DensitySpec) -> Result<f64> {
    check_bandwidth(h)?;
    let xs = sample.points();
    let n = xs.len();
    let nf = n as f64;

    let mut pairs = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        let mut row = 0.0;
        for &xj in &xs[i + 1..] {
            row += kernel.autoconv((xi - xj) / h);
        }
        pairs += row;
    }
    let quadratic = (nf * kernel.autoconv(0.0) + 2.0 * pairs) / (nf * nf * h);

    let conv = Convolver::new(kernel, density, h)?;
    let mut linear = 0.0;
    for &x in xs {
        linear += conv.eval(x)?;
    }
    let r_f = density.deriv_roughness(0)?;
    Ok((quadratic - 2.0 * linear / nf + r_f).max(0.0))
}

/// Direct quadrature of `(1/2π)∫|φ_n(t)φ_K(th) − φ_f(t)|² dt` in real arithmetic.
/// Cost grows with the spread of the sample; meant as a cross-check of
/// [`ise_exact`] on small samples.
pub fn ise_by_quadrature(kernel: &KernelSpec, h: f64, sample: &Sample, density: &DensitySpec) -> Result<f64> {
    check_bandwidth(h)?;
    let xs = sample.points();
    let nf = xs.len() as f64;
    let k_upper = if kernel.cf_support_upper().is_finite() {
        kernel.cf_support_upper() / h
    } else {
        kernel.cf_square_upper(1e-12)? / h
    };
    let upper = k_upper.max(density_upper(density)?);
    let spread = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let edges = refined_edges(0.0, upper, &merged_breaks(kernel, h, density, upper), PI / spread);
    let v = integrate_panels(
        |t| {
            let (mut c, mut s) = (0.0, 0.0);
            for &x in xs {
                let (sn, cs) = (t * x).sin_cos();
                c += cs;
                s += sn;
            }
            let k = kernel.cf(t * h);
            let re = c / nf * k - density.cf(t);
            let im = s / nf * k;
            re * re + im * im
        },
        &edges,
        &QuadratureSettings::new(1e-14, 1e-11, 1 << 18)?,
    )?;
    Ok(v / PI)
}

/// `S_K/D_f`, the bandwidth at which the estimator is exactly unbiased.
pub fn zero_bias_bandwidth(kernel: &KernelSpec, density: &DensitySpec) -> Result<f64> {
    let (s_k, _) = kernel.s_t();
    if s_k <= 0.0 {
        return Err(Error::NotApplicable(format!("kernel `{}` has S_K = 0", kernel.name())));
    }
    if !density.d_f().is_finite() || density.d_f() <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "density `{}` has D_f = {}",
            density.name(),
            density.d_f()
        )));
    }
    Ok(s_k / density.d_f())
}

/// `D_f·R(K)/S_K`, an upper bound on `n·Φ(n, f, K)` for every `n`.
pub fn parametric_bound(kernel: &KernelSpec, density: &DensitySpec) -> Result<f64> {
    let h = zero_bias_bandwidth(kernel, density)?;
    Ok(kernel.roughness()? / h)
}

/// `(2k+1)(2k)^{−2k/(2k+1)}(R(K)/S_K)^{2k/(2k+1)}R(f^{(k)})`, an upper bound on
/// `n^{2k/(2k+1)}·Φ(n, f, K)` for a superkernel.
pub fn smooth_rate_bound(kernel: &KernelSpec, density: &DensitySpec, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let (s_k, _) = kernel.s_t();
    if s_k <= 0.0 {
        return Err(Error::NotApplicable(format!("kernel `{}` has S_K = 0", kernel.name())));
    }
    let kk = 2.0 * k as f64;
    let e = kk / (kk + 1.0);
    Ok((kk + 1.0) * kk.powf(-e) * (kernel.roughness()? / s_k).powf(e) * density.deriv_roughness(k)?)
}

/// `n/(ln n)^{1/α}·Φ(n, f, K)` for each `n`, which stays bounded for a superkernel on
/// a supersmooth density.
pub fn supersmooth_rate_check(
    kernel: &KernelSpec,
    density: &DensitySpec,
    alpha: f64,
    gamma: f64,
    n_list: &[u64],
) -> Result<Vec<f64>> {
    if let Some(&n) = n_list.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidInput(format!("n = {n}: the rate needs n >= 2")));
    }
    if kernel.s_t().0 <= 0.0 {
        return Err(Error::NotApplicable(format!("kernel `{}` has S_K = 0", kernel.name())));
    }
    density.supersmooth_integral(alpha, gamma)?;
    n_list
        .iter()
        .map(|&n| {
            let nf = n as f64;
            Ok(nf / nf.ln().powf(1.0 / alpha) * min_mise(kernel, density, n)?.phi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn trap() -> KernelSpec {
        KernelSpec::trapezoidal()
    }
    fn fvp() -> DensitySpec {
        DensitySpec::fvp()
    }

    /// Closed-form MISE of the Gaussian kernel on the standard normal density.
    fn gauss_gauss_mise(n: f64, h: f64) -> f64 {
        (1.0 / (n * h) + (1.0 - 1.0 / n) / (1.0 + h * h).sqrt() - 2.0 * 2f64.sqrt() / (2.0 + h * h).sqrt() + 1.0)
            / (2.0 * PI.sqrt())
    }

    #[test]
    fn zero_bias_mise() {
        let r = mise_exact(&trap(), &fvp(), 100, 1.0).unwrap();
        assert_abs_diff_eq!(r.mise, 1.0 / (100.0 * PI), epsilon = 1e-14);
        assert_eq!(r.bias_term, 0.0);
        let r = mise_exact(&trap(), &fvp(), 100, 0.5).unwrap();
        assert_relative_eq!(r.mise, 7.0 / (300.0 * PI), epsilon = 1e-12);
        assert_relative_eq!(r.mise, (r.bias_term + r.variance_term) / (2.0 * PI), epsilon = 1e-15);
        for h in [0.2, 0.5, 0.8, 1.0] {
            assert!(mise_exact(&trap(), &fvp(), 100, h).unwrap().bias_term.abs() <= 1e-10);
        }
    }

    #[test]
    fn mise_matches_gaussian_closed_form() {
        let k = KernelSpec::gaussian();
        let d = DensitySpec::gaussian();
        for &(n, h) in &[(1u64, 1.0), (100, 0.4), (400, 0.33), (100_000, 0.1)] {
            let r = mise_exact(&k, &d, n, h).unwrap();
            assert_relative_eq!(r.mise, gauss_gauss_mise(n as f64, h), epsilon = 1e-9);
        }
    }

    #[test]
    fn variance_halves_when_n_doubles() {
        for (k, d, h) in [
            (trap(), fvp(), 0.7),
            (KernelSpec::gaussian(), fvp(), 0.3),
            (KernelSpec::gaussian(), DensitySpec::cauchy(), 1.3),
        ] {
            let a = mise_exact(&k, &d, 100, h).unwrap();
            let b = mise_exact(&k, &d, 200, h).unwrap();
            assert_eq!(b.variance_term, a.variance_term / 2.0);
        }
    }

    #[test]
    fn variance_identity_examples() {
        let v = variance_identity_check(&trap(), &fvp(), 100, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / (100.0 * PI), epsilon = 1e-12);
        let r = smoothed_roughness(&trap(), &fvp(), 1e-3).unwrap();
        assert_abs_diff_eq!(r, 1.0 / (3.0 * PI), epsilon = 1e-4);
        let k = KernelSpec::gaussian();
        let d = DensitySpec::gaussian();
        let v = variance_identity_check(&k, &d, 1, 1.0).unwrap();
        let m = mise_exact(&k, &d, 1, 1.0).unwrap();
        assert_relative_eq!(v, m.variance_term / (2.0 * PI), epsilon = 1e-9);
        // R(K_1 * f) for two unit normals is the N(0, 2) roughness 1/(2√(2π))
        assert_relative_eq!(v, 1.0 / (2.0 * PI.sqrt()) - 1.0 / (2.0 * (2.0 * PI).sqrt()), epsilon = 1e-10);
    }

    #[test]
    fn mise_rejects_bad_arguments() {
        assert!(matches!(mise_exact(&trap(), &fvp(), 100, 0.0), Err(Error::InvalidBandwidth(_))));
        assert!(mise_exact(&trap(), &fvp(), 0, 1.0).is_err());
        assert!(matches!(
            optimal_bandwidth(&trap(), &fvp(), 100, 2.0, 1.0),
            Err(Error::InvalidBracket { .. })
        ));
    }

    #[test]
    fn optimal_bandwidth_trapezoid_fvp() {
        // reference optima from an independent scipy minimisation of the same integrals
        for &(n, h_ref, nphi_ref) in &[
            (100u64, 1.63512, 0.180263),
            (1_000, 1.33388, 0.230885),
            (10_000, 1.17941, 0.265803),
            (100_000, 1.09815, 0.287678),
        ] {
            let r = min_mise(&trap(), &fvp(), n).unwrap();
            assert_relative_eq!(r.h0n, h_ref, epsilon = 2e-5);
            assert_relative_eq!(n as f64 * r.phi, nphi_ref, epsilon = 1e-5);
            assert!(r.phi <= mise_exact(&trap(), &fvp(), n, r.bracket.0).unwrap().mise);
            assert!(r.phi <= mise_exact(&trap(), &fvp(), n, r.bracket.1).unwrap().mise);
        }
        let big = min_mise(&trap(), &fvp(), 100_000).unwrap();
        assert!((1.0..=1.25).contains(&big.h0n));
    }

    #[test]
    fn optimal_bandwidth_gaussian_pair() {
        let r = min_mise(&KernelSpec::gaussian(), &DensitySpec::gaussian(), 400).unwrap();
        assert!((r.h0n / 0.3196 - 1.0).abs() < 0.1);
        assert_relative_eq!(r.h0n, 0.33025, epsilon = 1e-4);
        assert_relative_eq!(r.phi, 0.0020178, epsilon = 1e-4);
        // brute force on the closed form
        let best = (1..4000)
            .map(|i| i as f64 * 1e-4 + 0.2)
            .map(|h| (h, gauss_gauss_mise(400.0, h)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert_abs_diff_eq!(r.h0n, best.0, epsilon = 2e-4);
    }

    #[test]
    fn more_data_less_risk() {
        let a = min_mise(&trap(), &fvp(), 100).unwrap().phi;
        let b = min_mise(&trap(), &fvp(), 200).unwrap().phi;
        assert!(b < a);
    }

    #[test]
    fn plateau_is_resolved_to_its_right_end() {
        // Constant curve: every point is a minimiser, the largest is returned.
        let sinc = KernelSpec::sinc();
        let r = optimal_bandwidth(&sinc, &fvp(), 1, 0.5, 0.9).unwrap();
        assert!(r.h0n >= 0.9 * (1.0 - 1e-9));
    }

    #[test]
    fn zero_bias_and_bounds() {
        assert_eq!(zero_bias_bandwidth(&trap(), &fvp()).unwrap(), 1.0);
        assert!(matches!(
            zero_bias_bandwidth(&trap(), &DensitySpec::gaussian()),
            Err(Error::NotApplicable(_))
        ));
        assert!(matches!(
            zero_bias_bandwidth(&KernelSpec::gaussian(), &fvp()),
            Err(Error::NotApplicable(_))
        ));
        assert_relative_eq!(parametric_bound(&trap(), &fvp()).unwrap(), 4.0 / (3.0 * PI), epsilon = 1e-12);
        assert_relative_eq!(parametric_bound(&KernelSpec::sinc(), &fvp()).unwrap(), 1.0 / PI, epsilon = 1e-12);
        let at_one = 100.0 * mise_exact(&trap(), &fvp(), 100, 1.0).unwrap().mise;
        assert!(at_one <= parametric_bound(&trap(), &fvp()).unwrap());
    }

    #[test]
    fn smooth_rate_constants() {
        let g = DensitySpec::gaussian();
        let v = smooth_rate_bound(&trap(), &g, 2).unwrap();
        let expected = 5.0 * 4f64.powf(-0.8) * (4.0 / (3.0 * PI)).powf(0.8) * 3.0 / (8.0 * PI.sqrt());
        assert_relative_eq!(v, expected, epsilon = 1e-10);
        assert_relative_eq!(v, 0.175796, epsilon = 1e-5);
        let v = smooth_rate_bound(&trap(), &fvp(), 1).unwrap();
        let expected = 3.0 * 2f64.powf(-2.0 / 3.0) * (4.0 / (3.0 * PI)).powf(2.0 / 3.0) / (30.0 * PI);
        assert_relative_eq!(v, expected, epsilon = 1e-10);
        assert!(matches!(
            smooth_rate_bound(&KernelSpec::gaussian(), &g, 2),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn supersmooth_sequence() {
        let g = DensitySpec::gaussian();
        assert!(supersmooth_rate_check(&trap(), &g, 2.0, 0.5, &[]).unwrap().is_empty());
        assert!(supersmooth_rate_check(&trap(), &g, 2.0, 0.5, &[1]).is_err());
        let seq = supersmooth_rate_check(&trap(), &g, 2.0, 0.5, &[100, 1_000, 10_000]).unwrap();
        let max = seq.iter().copied().fold(0.0, f64::max);
        assert!(max < 10.0 * seq[2]);
    }

    #[test]
    fn ise_examples() {
        let s = Sample::new(vec![0.0]).unwrap();
        assert_relative_eq!(ise_exact(&trap(), 1.0, &s, &fvp()).unwrap(), 2.0 / (3.0 * PI), epsilon = 1e-12);
        let big = fvp().sample(10_000, &mut RngStream::new(3, 0)).unwrap();
        assert!(ise_exact(&trap(), 1.0, &big, &fvp()).unwrap() < 5e-3);
    }

    #[test]
    fn ise_routes_agree() {
        let cases = [
            (trap(), fvp(), 0.8),
            (KernelSpec::gaussian(), fvp(), 0.4),
            (KernelSpec::gaussian(), DensitySpec::gaussian(), 0.5),
            (trap(), DensitySpec::gaussian(), 0.6),
            (KernelSpec::epanechnikov(), DensitySpec::gaussian(), 0.9),
        ];
        for (i, (k, d, h)) in cases.into_iter().enumerate() {
            let s = d.sample(30, &mut RngStream::new(17, i as u64)).unwrap();
            let s = Sample::new(s.points().iter().map(|x| x.clamp(-40.0, 40.0)).collect()).unwrap();
            let a = ise_exact(&k, h, &s, &d).unwrap();
            let b = ise_by_quadrature(&k, h, &s, &d).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn ise_handles_far_outliers() {
        // points far out exercise the high-frequency transform of K_h * f
        let s = Sample::new(vec![0.1, -0.7, 2.0e4, -3.3e5, 1.2]).unwrap();
        for k in [trap(), KernelSpec::gaussian()] {
            let v = ise_exact(&k, 0.7, &s, &fvp()).unwrap();
            let trimmed = Sample::new(vec![0.1, -0.7, 1.2]).unwrap();
            let base = ise_exact(&k, 0.7, &trimmed, &fvp()).unwrap();
            assert!(v.is_finite() && v > 0.0 && v < 2.0 * base + 1.0);
        }
        let g = KernelSpec::gaussian();
        let d = fvp();
        let conv = Convolver::new(&g, &d, 0.7).unwrap();
        // far out, Gaussian smoothing of (1 − cos x)/(πx²) damps the cosine by e^{−h²/2}
        for &x in &[2.0e4f64, 3.3e5, 7.7e6] {
            let expected = (1.0 - (-0.245f64).exp() * x.cos()) / (PI * x * x);
            assert_relative_eq!(conv.eval(x).unwrap(), expected, max_relative = 1e-3);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn parseval_routes_agree(kind in 0usize..3, dens in 0usize..3, h in 0.05f64..3.0, n in 1u64..10_000) {
            let k = [KernelSpec::trapezoidal(), KernelSpec::gaussian(), KernelSpec::sinc()][kind].clone();
            let d = [DensitySpec::fvp(), DensitySpec::gaussian(), DensitySpec::cauchy()][dens].clone();
            let v = variance_identity_check(&k, &d, n, h).unwrap();
            let m = mise_exact(&k, &d, n, h).unwrap();
            prop_assert!((v - m.variance_term / (2.0 * PI)).abs() <= 1e-9 * v.abs());
            prop_assert!(m.bias_term >= 0.0 && m.variance_term >= 0.0);
        }
    }
}
