//! Data-driven bandwidth selectors: the flat-region rule on the empirical
//! characteristic function, least-squares cross-validation, and the Sheather–Jones
//! solve-the-equation plug-in.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::densities::{DensitySpec, Sample};
use crate::error::{Error, Result};
use crate::estimation::ecf_abs2;
use crate::kernels::KernelSpec;
use crate::numerics::{integrate_panels, refined_edges, QuadratureSettings};
use crate::risk::zero_bias_bandwidth;

/// Settings of the flat-region rule `D̂ = inf{D > 0 : |φ_n(D + t)|² < c·ln(n)/n for all
/// t ∈ (0, ℓ)}`, `ĥ = 1/D̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolitisSettings {
    pub c: f64,
    pub ell: f64,
    pub d_step: f64,
    pub d_max: f64,
    pub t_step: f64,
}

impl Default for PolitisSettings {
    fn default() -> Self {
        Self {
            c: 1.0,
            ell: 1.0,
            d_step: 0.01,
            d_max: 20.0,
            t_step: 0.01,
        }
    }
}

impl PolitisSettings {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.c, self.ell, self.d_step, self.d_max, self.t_step]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_positive || self.d_step > self.d_max {
            return Err(Error::InvalidInput(format!(
                "flat-region settings need positive finite fields and d_step <= d_max, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `c·ln(n)/n`.
    pub fn threshold(&self, n: usize) -> f64 {
        self.c * (n as f64).ln() / n as f64
    }
}

/// A selected bandwidth with named diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorResult {
    pub h: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SelectorResult {
    fn new(h: f64, diagnostics: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        Self {
            h,
            diagnostics: diagnostics.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

fn need_points(sample: &Sample, min: usize, what: &str) -> Result<()> {
    if sample.n() < min {
        return Err(Error::InvalidInput(format!(
            "{what} needs at least {min} observations, got {}",
            sample.n()
        )));
    }
    Ok(())
}

/// Scans `D = d_step, 2·d_step, …, d_max` and returns the first `D` for which
/// `|φ_n(D + t)|²` stays below the threshold at every inner grid point
/// `t = t_step, 2·t_step, … < ℓ`. `h = 1/D̂`.
pub fn politis_select(sample: &Sample, settings: &PolitisSettings) -> Result<SelectorResult> {
    settings.validate()?;
    need_points(sample, 2, "the flat-region rule")?;
    let threshold = settings.threshold(sample.n());
    let inner: Vec<f64> = (1..)
        .map(|k| k as f64 * settings.t_step)
        .take_while(|&t| t < settings.ell * (1.0 - 1e-12))
        .collect();
    let d_count = (settings.d_max / settings.d_step * (1.0 + 1e-12)).floor() as usize;

    // When t_step is a multiple of d_step every frequency D + t sits on the lattice
    // m·d_step, so each |φ_n|² is computed once.
    let ratio = settings.t_step / settings.d_step;
    let lattice = ((ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0).then(|| ratio.round() as usize);
    let mut memo: Vec<Option<f64>> = Vec::new();
    let mut evaluations = 0usize;
    let mut abs2_at = |i: usize, k: usize| -> f64 {
        match lattice {
            Some(r) => {
                let m = i + (k + 1) * r;
                if memo.len() <= m {
                    memo.resize(m + 1, None);
                }
                *memo[m].get_or_insert_with(|| {
                    evaluations += 1;
                    ecf_abs2(sample, m as f64 * settings.d_step)
                })
            }
            None => {
                evaluations += 1;
                ecf_abs2(sample, i as f64 * settings.d_step + inner[k])
            }
        }
    };

    for i in 1..=d_count {
        if (0..inner.len()).all(|k| abs2_at(i, k) < threshold) {
            let d_hat = i as f64 * settings.d_step;
            return Ok(SelectorResult::new(
                1.0 / d_hat,
                [
                    ("d_hat", d_hat),
                    ("threshold", threshold),
                    ("ecf_evaluations", evaluations as f64),
                    ("fallback", 0.0),
                ],
            ));
        }
    }
    Err(Error::NoFlatRegion {
        d_max: settings.d_max,
    })
}

/// [`politis_select`], falling back to `h = 1/d_max` when no flat region is found.
/// The fallback is marked by `fallback = 1` in the diagnostics.
pub fn politis_select_or_fallback(sample: &Sample, settings: &PolitisSettings) -> Result<SelectorResult> {
    match politis_select(sample, settings) {
        Err(Error::NoFlatRegion { d_max }) => Ok(SelectorResult::new(
            1.0 / d_max,
            [
                ("d_hat", f64::NAN),
                ("threshold", settings.threshold(sample.n())),
                ("fallback", 1.0),
            ],
        )),
        other => other,
    }
}

/// Sorted pairwise differences `X_j − X_i >= 0`, `i < j`.
fn pair_differences(sample: &Sample) -> Vec<f64> {
    let mut xs = sample.points().to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(xs[j] - xs[i]);
        }
    }
    out
}

/// `LSCV(h) = R(f̂_h) − (2/n)Σ_i f̂_{−i}(X_i)` from pair sums, with
/// `R(f̂_h) = (1/(n²h))[n·(K*K)(0) + 2Σ_{i<j}(K*K)(Δ_ij/h)]`.
fn lscv_from_differences(diffs: &[f64], n: usize, kernel: &KernelSpec, h: f64) -> f64 {
    let (mut k_sum, mut kk_sum) = (0.0, 0.0);
    for &d in diffs {
        let (k, kk) = kernel.eval_with_autoconv(d / h);
        k_sum += k;
        kk_sum += kk;
    }
    let nf = n as f64;
    let roughness = (nf * kernel.autoconv(0.0) + 2.0 * kk_sum) / (nf * nf * h);
    roughness - 4.0 * k_sum / (nf * (nf - 1.0) * h)
}

fn check_lscv_inputs(sample: &Sample, kernel: &KernelSpec, h: f64) -> Result<()> {
    need_points(sample, 2, "cross-validation")?;
    if !kernel.is_integrable() {
        return Err(Error::NotIntegrable(kernel.name().to_string()));
    }
    crate::kernels::check_bandwidth(h)
}

/// The cross-validation criterion at one bandwidth, by pair sums.
pub fn lscv_score(sample: &Sample, kernel: &KernelSpec, h: f64) -> Result<f64> {
    check_lscv_inputs(sample, kernel, h)?;
    Ok(lscv_from_differences(&pair_differences(sample), sample.n(), kernel, h))
}

/// The cross-validation criterion with `R(f̂_h) = (1/2π)∫|φ_n(t)|²φ_K(th)² dt` by
/// quadrature. Independent of [`lscv_score`] in the quadratic term; cost grows with
/// the spread of the sample.
pub fn lscv_score_cf(sample: &Sample, kernel: &KernelSpec, h: f64) -> Result<f64> {
    check_lscv_inputs(sample, kernel, h)?;
    let xs = sample.points();
    let nf = xs.len() as f64;
    let upper = kernel.cf_square_upper(1e-12)? / h;
    let breaks: Vec<f64> = kernel.cf_breakpoints().iter().map(|b| b / h).collect();
    let spread = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let edges = refined_edges(0.0, upper, &breaks, PI / spread);
    let integral = integrate_panels(
        |t| {
            let (mut c, mut s) = (0.0, 0.0);
            for &x in xs {
                let (sn, cs) = (t * x).sin_cos();
                c += cs;
                s += sn;
            }
            let k = kernel.cf(t * h);
            (c * c + s * s) / (nf * nf) * k * k
        },
        &edges,
        &QuadratureSettings::new(1e-15, 1e-12, 1 << 18)?,
    )?;
    let mut k_sum = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        for &xj in &xs[i + 1..] {
            k_sum += kernel.eval_unchecked((xi - xj) / h);
        }
    }
    Ok(integral / PI - 4.0 * k_sum / (nf * (nf - 1.0) * h))
}

/// The grid point minimising the cross-validation criterion; ties go to the
/// smaller bandwidth.
pub fn lscv_select(sample: &Sample, kernel: &KernelSpec, h_grid: &[f64]) -> Result<SelectorResult> {
    if h_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &h in h_grid {
        check_lscv_inputs(sample, kernel, h)?;
    }
    let diffs = pair_differences(sample);
    let mut best: Option<(f64, f64, usize)> = None;
    for (idx, &h) in h_grid.iter().enumerate() {
        let score = lscv_from_differences(&diffs, sample.n(), kernel, h);
        let better = match best {
            None => true,
            Some((bs, bh, _)) => score < bs || (score == bs && h < bh),
        };
        if better {
            best = Some((score, h, idx));
        }
    }
    let (score, h, idx) = best.expect("nonempty grid");
    Ok(SelectorResult::new(
        h,
        [("lscv", score), ("grid_index", idx as f64), ("grid_size", h_grid.len() as f64)],
    ))
}

pub const LSCV_GRID_SIZE: usize = 40;

/// 40 log-spaced bandwidths over `[0.1, 4]×base`, where `base` is the zero-bias
/// bandwidth `S_K/D_f` when the target density is known and has one, and the
/// normal-reference `σ̂·n^{−1/5}` otherwise.
pub fn lscv_default_grid(sample: &Sample, kernel: &KernelSpec, density: Option<&DensitySpec>) -> Result<Vec<f64>> {
    let base = match density.map(|d| zero_bias_bandwidth(kernel, d)) {
        Some(Ok(h)) => h,
        _ => {
            let sigma = robust_scale(sample.points())?;
            sigma * (sample.n() as f64).powf(-0.2)
        }
    };
    let (lo, hi) = (0.1 * base, 4.0 * base);
    let ratio = (hi / lo).ln();
    Ok((0..LSCV_GRID_SIZE)
        .map(|i| lo * (ratio * i as f64 / (LSCV_GRID_SIZE - 1) as f64).exp())
        .collect())
}

/// Sample quantile with linear interpolation between order statistics (type 7).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `min(sd, IQR/1.349)`; the standard deviation alone when the IQR vanishes.
pub fn robust_scale(points: &[f64]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateSample("scale needs at least two points".into()));
    }
    let mean = points.iter().sum::<f64>() / n as f64;
    let sd = (points.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("all observations are identical".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    Ok(if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd })
}

/// Beyond this `|u|` the standard normal density underflows to zero.
const NORMAL_UNDERFLOW: f64 = 40.0;

/// `ψ̂_r(g) = (1/(n²g^{r+1}))[n·φ^{(r)}(0) + 2Σ_{i<j}φ^{(r)}(Δ_ij/g)]` for `r ∈ {4, 6}`,
/// with `diffs` sorted within each `i` (as produced by [`pair_differences`]).
fn psi_hat(diffs_by_row: &[Vec<f64>], n: usize, r: u32, g: f64) -> f64 {
    let norm = 1.0 / (2.0 * PI).sqrt();
    let deriv = |u: f64| {
        let u2 = u * u;
        let poly = match r {
            4 => (u2 - 6.0) * u2 + 3.0,
            6 => ((u2 - 15.0) * u2 + 45.0) * u2 - 15.0,
            _ => unreachable!("only fourth and sixth derivatives are used"),
        };
        poly * (-0.5 * u2).exp() * norm
    };
    let cutoff = NORMAL_UNDERFLOW * g;
    let mut sum = 0.0;
    for row in diffs_by_row {
        for &d in row {
            if d > cutoff {
                break;
            }
            sum += deriv(d / g);
        }
    }
    let nf = n as f64;
    (nf * deriv(0.0) + 2.0 * sum) / (nf * nf * g.powi(r as i32 + 1))
}

/// Sheather–Jones solve-the-equation bandwidth for the Gaussian kernel.
///
/// Normal-scale references for `ψ₆` and `ψ₈` (scale `σ̂ = min(sd, IQR/1.349)`) set the
/// pilots `a` and `b`; `ψ̂₄(a)` and `ψ̂₆(b)` fix `γ(h) = 1.357(ψ̂₄(a)/(−ψ̂₆(b)))^{1/7}h^{5/7}`,
/// and `h = [R(K)/(n·ψ̂₄(γ(h)))]^{1/5}` is solved by bisection on `[10⁻³σ̂, 10σ̂]`.
pub fn sj_select(sample: &Sample) -> Result<SelectorResult> {
    need_points(sample, 10, "the Sheather–Jones rule")?;
    let sigma = robust_scale(sample.points())?;
    let n = sample.n();
    let nf = n as f64;
    let sqrt_pi = PI.sqrt();
    let sqrt_2pi = (2.0 * PI).sqrt();

    let mut xs = sample.points().to_vec();
    xs.sort_by(f64::total_cmp);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| xs[i + 1..].iter().map(|x| x - xs[i]).collect()).collect();

    // K = φ: K⁽⁴⁾(0) = 3/√(2π), K⁽⁶⁾(0) = −15/√(2π), R(K) = 1/(2√π), μ₂ = 1
    let k4 = 3.0 / sqrt_2pi;
    let k6 = -15.0 / sqrt_2pi;
    let r_k = 1.0 / (2.0 * sqrt_pi);
    let psi6_ns = -15.0 / (16.0 * sqrt_pi * sigma.powi(7));
    let psi8_ns = 105.0 / (32.0 * sqrt_pi * sigma.powi(9));
    let a = (-2.0 * k4 / (psi6_ns * nf)).powf(1.0 / 7.0);
    let b = (-2.0 * k6 / (psi8_ns * nf)).powf(1.0 / 9.0);
    let psi4_a = psi_hat(&rows, n, 4, a);
    let psi6_b = psi_hat(&rows, n, 6, b);
    if !(psi4_a > 0.0 && psi6_b < 0.0) {
        return Err(Error::NoRoot(format!(
            "pilot functionals have the wrong sign (psi4 = {psi4_a:e}, psi6 = {psi6_b:e})"
        )));
    }
    let gamma_coef = (2.0 * k4 * psi4_a / (r_k * -psi6_b)).powf(1.0 / 7.0);

    let residual = |h: f64| {
        let g = gamma_coef * h.powf(5.0 / 7.0);
        let psi4 = psi_hat(&rows, n, 4, g);
        if psi4 > 0.0 {
            h - (r_k / (nf * psi4)).powf(0.2)
        } else {
            f64::NEG_INFINITY
        }
    };

    let (mut lo, mut hi) = (1e-3 * sigma, 10.0 * sigma);
    let (f_lo, f_hi) = (residual(lo), residual(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo:e}, {hi:e}] (residuals {f_lo:e}, {f_hi:e})"
        )));
    }
    let mut iterations = 0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(SelectorResult::new(
        0.5 * (lo + hi),
        [
            ("sigma", sigma),
            ("pilot_a", a),
            ("pilot_b", b),
            ("psi4_a", psi4_a),
            ("psi6_b", psi6_b),
            ("iterations", iterations as f64),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::risk::min_mise;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn fvp_sample(n: usize, seed: u64) -> Sample {
        DensitySpec::fvp().sample(n, &mut RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn politis_threshold() {
        assert_relative_eq!(PolitisSettings::default().threshold(100), 0.0460517, epsilon = 1e-6);
    }

    #[test]
    fn politis_needs_a_flat_region() {
        let s = Sample::new(vec![2.5; 50]).unwrap();
        assert!(matches!(
            politis_select(&s, &PolitisSettings::default()),
            Err(Error::NoFlatRegion { .. })
        ));
        let fb = politis_select_or_fallback(&s, &PolitisSettings::default()).unwrap();
        assert_eq!(fb.h, 1.0 / 20.0);
        assert_eq!(fb.diagnostics["fallback"], 1.0);
    }

    #[test]
    fn politis_on_fvp() {
        let s = fvp_sample(1600, 42);
        let r = politis_select(&s, &PolitisSettings::default()).unwrap();
        let d = r.diagnostics["d_hat"];
        assert!((0.6..=1.3).contains(&d), "D = {d}");
        assert_relative_eq!(r.h, 1.0 / d, epsilon = 1e-15);
        assert_eq!(r, politis_select(&s, &PolitisSettings::default()).unwrap());
    }

    #[test]
    fn politis_lattice_memo_matches_direct_scan() {
        let s = fvp_sample(400, 1);
        let fast = politis_select(&s, &PolitisSettings::default()).unwrap();
        // an off-lattice inner step disables the memo; a relative nudge of 1e-8 leaves the
        // frequencies essentially unchanged
        let slow = politis_select(
            &s,
            &PolitisSettings {
                t_step: 0.01 * (1.0 + 1e-8),
                ..PolitisSettings::default()
            },
        )
        .unwrap();
        assert_eq!(fast.diagnostics["d_hat"], slow.diagnostics["d_hat"]);
    }

    #[test]
    fn lscv_examples() {
        let s = Sample::new(vec![-1.0, 1.0]).unwrap();
        let k = KernelSpec::trapezoidal();
        assert_eq!(lscv_select(&s, &k, &[0.7]).unwrap().h, 0.7);
        assert!(matches!(lscv_select(&s, &k, &[]), Err(Error::EmptyGrid)));

        // brute force: ∫f̂² by spatial quadrature, leave-one-out by direct double sum
        let grid = [0.5, 1.0, 2.0];
        let brute = |h: f64| {
            let st = QuadratureSettings::new(1e-12, 1e-10, 1 << 16).unwrap();
            let fhat = |x: f64| 0.5 * (k.eval_unchecked((x + 1.0) / h) + k.eval_unchecked((x - 1.0) / h)) / h;
            let edges = refined_edges(0.0, 4000.0, &[], 1.0);
            let half = integrate_panels(|x| fhat(x).powi(2), &edges, &st).unwrap();
            // f̂ = O(x⁻²), so the squared tail beyond 4000 is O(10⁻¹¹)
            let r_fhat = 2.0 * half;
            // (2/n)Σ_i f̂_{−i}(X_i) with n = 2
            let loo = k.eval_unchecked(2.0 / h) / h + k.eval_unchecked(-2.0 / h) / h;
            r_fhat - loo
        };
        let scores: Vec<f64> = grid.iter().map(|&h| brute(h)).collect();
        for (&h, &b) in grid.iter().zip(&scores) {
            assert_relative_eq!(lscv_score(&s, &k, h).unwrap(), b, epsilon = 1e-7);
        }
        let argmin = (0..3).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
        assert_eq!(lscv_select(&s, &k, &grid).unwrap().h, grid[argmin]);
    }

    #[test]
    fn lscv_ties_go_to_smaller_bandwidth() {
        let s = Sample::new(vec![-1.0, 1.0]).unwrap();
        let k = KernelSpec::gaussian();
        let r = lscv_select(&s, &k, &[0.9, 0.6, 0.9, 0.6]).unwrap();
        assert_eq!(r.h, if lscv_score(&s, &k, 0.6).unwrap() <= lscv_score(&s, &k, 0.9).unwrap() { 0.6 } else { 0.9 });
        assert_eq!(r.diagnostics["grid_index"], if r.h == 0.6 { 1.0 } else { 0.0 });
    }

    #[test]
    fn lscv_routes_agree() {
        for seed in 0..20u64 {
            let n = 5 + (seed as usize * 7) % 46;
            let s = fvp_sample(n, 100 + seed);
            let s = Sample::new(s.points().iter().map(|x| x.clamp(-60.0, 60.0)).collect()).unwrap();
            for (k, h) in [(KernelSpec::trapezoidal(), 0.3 + 0.1 * (seed % 10) as f64), (KernelSpec::gaussian(), 0.4)] {
                let a = lscv_score(&s, &k, h).unwrap();
                let b = lscv_score_cf(&s, &k, h).unwrap();
                assert!((a - b).abs() <= 1e-8, "seed {seed}, {}: {a} vs {b}", k.name());
            }
        }
    }

    #[test]
    fn lscv_default_grid_bases() {
        let s = fvp_sample(100, 3);
        let k = KernelSpec::trapezoidal();
        let g = lscv_default_grid(&s, &k, Some(&DensitySpec::fvp())).unwrap();
        assert_eq!(g.len(), 40);
        assert_relative_eq!(g[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(g[39], 4.0, epsilon = 1e-14);
        let g = lscv_default_grid(&s, &k, None).unwrap();
        let base = robust_scale(s.points()).unwrap() * 100f64.powf(-0.2);
        assert_relative_eq!(g[0], 0.1 * base, epsilon = 1e-14);
    }

    #[test]
    fn sj_examples() {
        let s = DensitySpec::gaussian().sample(400, &mut RngStream::new(42, 0)).unwrap();
        let h = sj_select(&s).unwrap().h;
        let oracle = min_mise(&KernelSpec::gaussian(), &DensitySpec::gaussian(), 400).unwrap().h0n;
        assert!((h / oracle - 1.0).abs() < 0.2, "h = {h}, oracle = {oracle}");
        let scaled = sj_select(&s.scaled(3.0).unwrap()).unwrap().h;
        assert_relative_eq!(scaled, 3.0 * h, epsilon = 1e-6 * 3.0 * h);
        assert!(matches!(sj_select(&Sample::new(vec![1.5; 20]).unwrap()), Err(Error::DegenerateSample(_))));
        assert!(sj_select(&Sample::new(vec![1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn pilot_constants() {
        // a = (96/(15√2))^{1/7}σn^{−1/7} ≈ 1.2407σn^{−1/7}, b = (960/(105√2))^{1/9}σn^{−1/9} ≈ 1.2304σn^{−1/9}
        let s = DensitySpec::gaussian().sample(500, &mut RngStream::new(8, 0)).unwrap();
        let r = sj_select(&s).unwrap();
        let sigma = r.diagnostics["sigma"];
        let ca = (96.0 / (15.0 * 2f64.sqrt())).powf(1.0 / 7.0);
        let cb = (960.0 / (105.0 * 2f64.sqrt())).powf(1.0 / 9.0);
        assert_abs_diff_eq!(ca, 1.2407, epsilon = 1e-4);
        assert_abs_diff_eq!(cb, 1.2304, epsilon = 1e-4);
        assert_relative_eq!(r.diagnostics["pilot_a"], ca * sigma * 500f64.powf(-1.0 / 7.0), max_relative = 1e-14);
        assert_relative_eq!(r.diagnostics["pilot_b"], cb * sigma * 500f64.powf(-1.0 / 9.0), max_relative = 1e-14);
    }

    #[test]
    fn robust_scale_fallbacks() {
        // more than half the points tie, so the IQR is zero and the sd is used
        let pts = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0];
        let mean = 0.0;
        let sd = (pts.iter().map(|x: &f64| (x - mean).powi(2)).sum::<f64>() / 7.0).sqrt();
        assert_relative_eq!(robust_scale(&pts).unwrap(), sd, epsilon = 1e-15);
        assert!(matches!(robust_scale(&[2.0, 2.0]), Err(Error::DegenerateSample(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn larger_c_never_raises_the_cutoff(seed in 0u64..1000, c1 in 0.2f64..3.0, c2 in 0.2f64..3.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let s = fvp_sample(200, seed);
            let d = |c: f64| {
                politis_select(&s, &PolitisSettings { c, ..PolitisSettings::default() })
                    .map(|r| r.diagnostics["d_hat"])
                    .unwrap_or(f64::INFINITY)
            };
            prop_assert!(d(hi) <= d(lo));
        }

        #[test]
        fn lscv_argmin_is_scale_invariant(seed in 0u64..1000, s in 0.5f64..4.0) {
            let sample = fvp_sample(30, seed);
            let k = KernelSpec::gaussian();
            let grid: Vec<f64> = (0..12).map(|i| 0.2 * 1.3f64.powi(i)).collect();
            let a = lscv_select(&sample, &k, &grid).unwrap().diagnostics["grid_index"];
            let scaled_grid: Vec<f64> = grid.iter().map(|h| h * s).collect();
            let b = lscv_select(&sample.scaled(s).unwrap(), &k, &scaled_grid).unwrap().diagnostics["grid_index"];
            prop_assert_eq!(a, b);
        }
    }
}
