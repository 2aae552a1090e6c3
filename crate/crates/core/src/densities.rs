//! Target densities with their characteristic functions, exact samplers and the
//! cf-support descriptors `C_f`, `D_f`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fourier::{truncation_point, CfTail, CharFn, PiecewisePoly};
use crate::numerics::{integrate, integrate_panels, refined_edges, QuadratureSettings, RngStream};

/// An immutable sample `X_1, …, X_n` with `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Arc<[f64]>,
}

impl Sample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("a sample needs at least one point".into()));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample point {x}")));
        }
        Ok(Self { points: points.into() })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Every point moved by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|x| x + c).collect())
    }

    /// Every point multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|x| x * s).collect())
    }

    /// FNV-1a over the bit patterns of the points; identifies a sample in logs.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.points.iter() {
            for byte in x.to_bits().to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Fvp,
    Gaussian,
    Cauchy,
}

/// A target density: pdf, characteristic function, sampler and `C_f`, `D_f`.
#[derive(Clone)]
pub struct DensitySpec {
    name: &'static str,
    family: Family,
    cf: CharFn,
    c_f: f64,
    d_f: f64,
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySpec")
            .field("name", &self.name)
            .field("c_f", &self.c_f)
            .field("d_f", &self.d_f)
            .finish()
    }
}

impl DensitySpec {
    /// `f(x) = (1 − cos x)/(πx²)`, `φ_f(t) = (1 − |t|)` on `[−1, 1]`.
    pub fn fvp() -> Self {
        let poly = PiecewisePoly::new(vec![0.0, 1.0], vec![vec![1.0, -1.0]]).expect("valid triangle");
        Self {
            name: "fvp",
            family: Family::Fvp,
            cf: CharFn::piecewise(poly),
            c_f: 1.0,
            d_f: 1.0,
        }
    }

    pub fn gaussian() -> Self {
        Self {
            name: "gaussian",
            family: Family::Gaussian,
            cf: CharFn::gaussian(40.0),
            c_f: f64::INFINITY,
            d_f: f64::INFINITY,
        }
    }

    /// Standard Cauchy, `φ_f(t) = e^{−|t|}`.
    pub fn cauchy() -> Self {
        let cf = CharFn::general(
            Arc::new(|t: f64| (-t.abs()).exp()),
            Vec::new(),
            f64::INFINITY,
            CfTail::Exponential { rate: 1.0 },
            60.0,
        );
        Self {
            name: "cauchy",
            family: Family::Cauchy,
            cf,
            c_f: f64::INFINITY,
            d_f: f64::INFINITY,
        }
    }

    /// Looks a built-in density up by (case-insensitive) name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "fvp" => Ok(Self::fvp()),
            "gaussian" => Ok(Self::gaussian()),
            "cauchy" => Ok(Self::cauchy()),
            other => Err(Error::config(
                "density",
                format!("unknown density `{other}` (expected fvp, gaussian or cauchy)"),
            )),
        }
    }

    pub fn name(&self) -> &str {
        self.name
    }

    pub fn char_fn(&self) -> &CharFn {
        &self.cf
    }

    pub fn cf_breakpoints(&self) -> &[f64] {
        self.cf.breakpoints()
    }

    /// Largest `r` with `φ_f ≠ 0` a.e. on `[0, r]`.
    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    /// Supremum of the support of `φ_f`.
    pub fn d_f(&self) -> f64 {
        self.d_f
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Fvp => fvp_pdf(x),
            Family::Gaussian => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Family::Cauchy => 1.0 / (PI * (1.0 + x * x)),
        }
    }

    pub fn cf(&self, t: f64) -> f64 {
        self.cf.eval(t)
    }

    /// `n` independent draws, deterministic given the stream.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<Sample> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        let points = match self.family {
            Family::Fvp => (0..n).map(|_| fvp_draw(rng)).collect(),
            Family::Cauchy => (0..n).map(|_| (PI * (rng.uniform() - 0.5)).tan()).collect(),
            Family::Gaussian => {
                let mut out = Vec::with_capacity(n + 1);
                while out.len() < n {
                    // Box–Muller; both coordinates are used
                    let r = (-2.0 * rng.uniform_open0().ln()).sqrt();
                    let (s, c) = (2.0 * PI * rng.uniform()).sin_cos();
                    out.push(r * c);
                    out.push(r * s);
                }
                out.truncate(n);
                out
            }
        };
        Sample::new(points)
    }

    /// `F(x) = ∫_{−∞}^x f`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("cdf at non-finite x = {x}")));
        }
        let half = match self.family {
            Family::Cauchy => x.abs().atan() / PI,
            Family::Gaussian => {
                let st = QuadratureSettings::new(1e-14, 1e-12, 1 << 12)?;
                let a = x.abs().min(40.0);
                if a == 0.0 {
                    0.0
                } else {
                    integrate(|u| self.pdf(u), 0.0, a, &st)?
                }
            }
            Family::Fvp => fvp_half_mass(x.abs())?,
        };
        Ok(if x >= 0.0 { 0.5 + half } else { 0.5 - half })
    }

    pub(crate) fn square_upper(&self, weight: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
        if self.cf.support().is_finite() {
            return Ok(self.cf.support());
        }
        truncation_point(|t| weight(t) * self.cf.envelope(t).powi(2), 1.0, self.cf.cap(), 1e-13).ok_or_else(|| {
            Error::NonConvergence(format!(
                "{what} of `{}`: integrand does not decay before the cap t = {}",
                self.name,
                self.cf.cap()
            ))
        })
    }

    /// `R(f^{(k)}) = (1/2π)∫|t|^{2k} φ_f(t)² dt`; `k = 0` gives `R(f)`.
    pub fn deriv_roughness(&self, k: u32) -> Result<f64> {
        let p = 2 * k as i32;
        let upper = self.square_upper(|t| t.powi(p), "derivative roughness")?;
        let st = QuadratureSettings::new(1e-13, 1e-11, 1 << 15)?;
        let edges = refined_edges(0.0, upper, self.cf.breakpoints(), 4.0);
        let v = integrate_panels(|t| t.powi(p) * self.cf.eval(t).powi(2), &edges, &st)?;
        Ok(v / PI)
    }

    /// `I_{α,γ}(f) = ∫ e^{γ|t|^α} φ_f(t)² dt`.
    ///
    /// Integrated over growing windows `[0, T]` until successive partial integrals
    /// settle; `Divergent` once a partial integral exceeds `1e12` or the integrand
    /// is still above `1e-12` at the truncation cap.
    pub fn supersmooth_integral(&self, alpha: f64, gamma: f64) -> Result<f64> {
        if !(alpha > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha and gamma must be positive, got {alpha}, {gamma}"
            )));
        }
        let st = QuadratureSettings::new(1e-13, 1e-11, 1 << 15)?;
        let w = |t: f64| {
            let c = self.cf.eval(t);
            if c == 0.0 {
                0.0
            } else {
                (gamma * t.powf(alpha) + 2.0 * c.abs().ln()).exp()
            }
        };
        if self.cf.support().is_finite() {
            let edges = refined_edges(0.0, self.cf.support(), self.cf.breakpoints(), 4.0);
            return Ok(2.0 * integrate_panels(w, &edges, &st)?);
        }
        const BLOW_UP: f64 = 1e12;
        let cap = self.cf.cap();
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut hi: f64 = 1.0;
        loop {
            hi = hi.min(cap);
            let piece = integrate_panels(w, &refined_edges(lo, hi, &[], 4.0), &st)?;
            total += piece;
            if !total.is_finite() || 2.0 * total > BLOW_UP {
                return Err(Error::Divergent(format!(
                    "I(alpha = {alpha}, gamma = {gamma}) of `{}`: partial integral exceeds {BLOW_UP:e}",
                    self.name
                )));
            }
            if w(hi) * hi <= 1e-14 * total && piece <= 1e-13 * total {
                return Ok(2.0 * total);
            }
            if hi >= cap {
                return Err(Error::Divergent(format!(
                    "I(alpha = {alpha}, gamma = {gamma}) of `{}`: integrand {:e} at the cap t = {cap}",
                    self.name,
                    w(hi)
                )));
            }
            lo = hi;
            hi *= 2.0;
        }
    }
}

fn fvp_pdf(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        return (0.5 - x2 * (1.0 / 24.0 - x2 * (1.0 / 720.0 - x2 / 40320.0))) / PI;
    }
    let s = (0.5 * x).sin();
    2.0 * s * s / (PI * x * x)
}

/// Envelope `g(x) = min(1/(2π), 2/(πx²))` with mass `4/π`: a uniform core on
/// `[−2, 2]` and Pareto tails `|x| = 2/U`, each taken with probability 1/2.
fn fvp_draw(rng: &mut RngStream) -> f64 {
    loop {
        let x = if rng.uniform() < 0.5 {
            4.0 * rng.uniform() - 2.0
        } else {
            let mag = 2.0 / rng.uniform_open0();
            if rng.uniform() < 0.5 {
                -mag
            } else {
                mag
            }
        };
        let g = if x.abs() <= 2.0 { 0.5 / PI } else { 2.0 / (PI * x * x) };
        if rng.uniform() * g <= fvp_pdf(x) {
            return x;
        }
    }
}

/// Beyond this the FVP mass is taken from the `1/(πx²)` average tail.
const FVP_QUAD_LIMIT: f64 = 1000.0;

/// `∫_0^{kπ} f` for `k = 0..`, up to the quadrature limit.
fn fvp_cumulative() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let st = QuadratureSettings::new(1e-15, 1e-13, 1 << 12).expect("valid settings");
        let m = (FVP_QUAD_LIMIT / PI).ceil() as usize;
        let mut acc = vec![0.0; m + 1];
        for k in 1..=m {
            let piece = integrate(fvp_pdf, (k - 1) as f64 * PI, k as f64 * PI, &st).expect("smooth integrand");
            acc[k] = acc[k - 1] + piece;
        }
        acc
    })
}

fn fvp_half_mass(a: f64) -> Result<f64> {
    let st = QuadratureSettings::new(1e-15, 1e-13, 1 << 12)?;
    let upto = a.min(FVP_QUAD_LIMIT);
    let k = (upto / PI).floor() as usize;
    let table = fvp_cumulative();
    let base = k as f64 * PI;
    let mut v = table[k];
    if upto > base {
        v += integrate(fvp_pdf, base, upto, &st)?;
    }
    if a > FVP_QUAD_LIMIT {
        v += 1.0 / (PI * FVP_QUAD_LIMIT) - 1.0 / (PI * a);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::cos_transform_numeric;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn pdf_values() {
        let f = DensitySpec::fvp();
        assert_relative_eq!(f.pdf(0.0), 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(f.pdf(PI), 2.0 / PI.powi(3), epsilon = 1e-14);
        let direct = |x: f64| (1.0 - x.cos()) / (PI * x * x);
        assert_relative_eq!(f.pdf(0.0099), direct(0.0099), epsilon = 1e-9);
        assert_relative_eq!(f.pdf(0.0101), direct(0.0101), epsilon = 1e-9);
        assert_relative_eq!(DensitySpec::gaussian().pdf(0.0), 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn cf_values() {
        let f = DensitySpec::fvp();
        assert_eq!(f.cf(0.0), 1.0);
        assert_eq!(f.cf(0.5), 0.5);
        assert_eq!(f.cf(2.0), 0.0);
        for d in [0.01, 0.1, 1.0] {
            assert_eq!(f.cf(f.d_f() + d), 0.0);
        }
        for dens in [DensitySpec::fvp(), DensitySpec::gaussian(), DensitySpec::cauchy()] {
            assert_eq!(dens.cf(0.0), 1.0);
            for i in 0..100 {
                let t = i as f64 * 0.13;
                assert!(dens.cf(t).abs() <= 1.0);
                assert!(dens.pdf(t * 7.0) >= 0.0);
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        assert_abs_diff_eq!(DensitySpec::fvp().cdf(1e6).unwrap(), 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(DensitySpec::gaussian().cdf(40.0).unwrap(), 1.0, epsilon = 1e-12);
        // the pdf integrates to one over a wide window plus the analytic tail
        let st = QuadratureSettings::default();
        let f = DensitySpec::fvp();
        let edges = refined_edges(0.0, 2000.0, &[], PI);
        let mass = 2.0 * integrate_panels(|x| f.pdf(x), &edges, &st).unwrap() + 2.0 / (PI * 2000.0);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        for d in [DensitySpec::fvp(), DensitySpec::gaussian(), DensitySpec::cauchy()] {
            assert_abs_diff_eq!(d.cdf(0.0).unwrap(), 0.5, epsilon = 1e-15);
            let mut prev = 0.0;
            for i in -400i32..=400 {
                let x = i as f64 * 0.05 + if i.abs() > 300 { (i.abs() - 300) as f64 * 30.0 * i.signum() as f64 } else { 0.0 };
                let c = d.cdf(x).unwrap();
                assert!(c >= prev - 1e-15, "{} not monotone at {x}", d.name());
                prev = c;
            }
        }
        let f = DensitySpec::fvp();
        assert!(f.cdf(999.9).unwrap() <= f.cdf(1000.1).unwrap());
    }

    #[test]
    fn deriv_roughness_closed_forms() {
        assert_relative_eq!(
            DensitySpec::gaussian().deriv_roughness(2).unwrap(),
            3.0 / (8.0 * PI.sqrt()),
            epsilon = 1e-10
        );
        assert_relative_eq!(DensitySpec::fvp().deriv_roughness(1).unwrap(), 1.0 / (30.0 * PI), epsilon = 1e-12);
        assert_relative_eq!(DensitySpec::fvp().deriv_roughness(0).unwrap(), 1.0 / (3.0 * PI), epsilon = 1e-12);
        assert_relative_eq!(DensitySpec::cauchy().deriv_roughness(0).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-10);
    }

    #[test]
    fn supersmooth_integrals() {
        assert_relative_eq!(
            DensitySpec::gaussian().supersmooth_integral(2.0, 0.5).unwrap(),
            (2.0 * PI).sqrt(),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            DensitySpec::fvp().supersmooth_integral(1.0, 1.0).unwrap(),
            2.0 * (2.0 * std::f64::consts::E - 5.0),
            epsilon = 1e-11
        );
        assert!(matches!(
            DensitySpec::gaussian().supersmooth_integral(2.0, 1.5),
            Err(Error::Divergent(_))
        ));
        assert!(matches!(
            DensitySpec::cauchy().supersmooth_integral(1.0, 3.0),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn fourier_round_trip() {
        let st = QuadratureSettings::new(1e-13, 1e-12, 1 << 15).unwrap();
        for d in [DensitySpec::fvp(), DensitySpec::gaussian()] {
            let upper = d.square_upper(|_| 1.0, "test").unwrap();
            for &x in &[0.0, 1.0, -1.0, PI, -PI] {
                let inv = cos_transform_numeric(|t| d.cf(t), d.cf_breakpoints(), upper, x, &st).unwrap() / (2.0 * PI);
                assert_abs_diff_eq!(inv, d.pdf(x), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = DensitySpec::gaussian();
        let a = g.sample(5, &mut RngStream::new(7, 3)).unwrap();
        let b = g.sample(5, &mut RngStream::new(7, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 5);
        assert!(a.points().iter().all(|x| x.is_finite()));
        assert_ne!(a, g.sample(5, &mut RngStream::new(7, 4)).unwrap());
        assert!(g.sample(0, &mut RngStream::new(7, 3)).is_err());
    }

    #[test]
    fn fvp_sample_is_centred() {
        let s = DensitySpec::fvp().sample(10_000, &mut RngStream::new(42, 0)).unwrap();
        let n = s.n() as f64;
        let mean = s.points().iter().sum::<f64>() / n;
        let sd = s.points().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * sd.sqrt() / 100.0);
    }

    #[test]
    fn cauchy_and_gaussian_samples_match_their_cdfs() {
        for d in [DensitySpec::cauchy(), DensitySpec::gaussian()] {
            let s = d.sample(4000, &mut RngStream::new(9, 1)).unwrap();
            assert!(ks_statistic(&d, &s) < 1.63 / (s.n() as f64).sqrt());
        }
    }

    #[test]
    fn sample_rejects_bad_points() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        let s = Sample::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.shifted(1.0).unwrap().points(), &[2.0, 3.0]);
        assert_ne!(s.fingerprint(), s.shifted(1.0).unwrap().fingerprint());
    }

    pub(crate) fn ks_statistic(d: &DensitySpec, s: &Sample) -> f64 {
        let mut xs = s.points().to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = d.cdf(x).unwrap();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}
