//! Kernels described both spatially and by their characteristic function, and the
//! functionals used to classify them: moments, order, the flat-region bounds
//! `S_K`/`T_K`, roughness `R(K)` and the admissibility condition `R(K) < 2K(0)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fourier::{cos_transform_numeric, truncation_point, CfTail, CharFn, PiecewisePoly};
use crate::numerics::{integrate_panels, integrate_with_breaks, refined_edges, QuadratureSettings};

pub const DEFAULT_FLATNESS_EPS: f64 = 1e-9;
pub const DEFAULT_SCAN_STEP: f64 = 1e-3;
pub const DEFAULT_SCAN_MAX: f64 = 10.0;
pub const DEFAULT_MOMENT_EPS: f64 = 1e-6;
pub const DEFAULT_J_MAX: u32 = 10;
/// Spatial truncation radius for moment integrals.
pub const MOMENT_RADIUS: f64 = 200.0;
const MOMENT_TAIL_TOL: f64 = 1e-8;

/// Bound on the spatial decay of `|K(x)|`, used to decide whether a truncated
/// moment integral is trustworthy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialTail {
    /// `K(x) = 0` for `|x| > radius`.
    Compact(f64),
    /// Standard normal decay.
    Gaussian,
    /// `|K(x)| <= coef / |x|^power`.
    Algebraic { coef: f64, power: f64 },
    /// Faster than any power but without a closed-form bound; estimated numerically.
    Rapid,
}

#[derive(Clone)]
enum Spatial {
    Trapezoidal,
    Gaussian,
    Epanechnikov,
    Sinc,
    /// Spatial form recovered from the characteristic function by numeric inversion.
    Inverted(Arc<InvertedTables>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A kernel `K` together with its characteristic function `φ_K`.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    spatial: Spatial,
    cf: CharFn,
    integrable: bool,
    spatial_tail: SpatialTail,
    cache: Arc<KernelCache>,
}

#[derive(Default)]
struct KernelCache {
    roughness: OnceLock<f64>,
    s_t: OnceLock<(f64, f64)>,
    autoconv_inverted: OnceLock<Arc<InvertedTables>>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("integrable", &self.integrable)
            .field("cf_breakpoints", &self.cf.breakpoints())
            .field("cf_support_upper", &self.cf.support())
            .finish()
    }
}

impl KernelSpec {
    /// `K(x) = (cos x − cos 2x)/(πx²)`, `φ_K(t) = 1` on `|t| < 1`, `2 − |t|` on `1 <= |t| < 2`.
    pub fn trapezoidal() -> Self {
        let poly = PiecewisePoly::new(vec![0.0, 1.0, 2.0], vec![vec![1.0], vec![2.0, -1.0]])
            .expect("valid trapezoid");
        Self::builtin(
            "trapezoidal",
            Spatial::Trapezoidal,
            CharFn::piecewise(poly),
            true,
            SpatialTail::Algebraic {
                coef: 2.0 / PI,
                power: 2.0,
            },
        )
    }

    pub fn gaussian() -> Self {
        Self::builtin(
            "gaussian",
            Spatial::Gaussian,
            CharFn::gaussian(40.0),
            true,
            SpatialTail::Gaussian,
        )
    }

    pub fn epanechnikov() -> Self {
        let cf = CharFn::general(
            Arc::new(epanechnikov_cf),
            Vec::new(),
            f64::INFINITY,
            // |sin t − t cos t| <= 1 + t <= 2t for t >= 1
            CfTail::Algebraic {
                coef: 6.0,
                power: 2.0,
            },
            1e5,
        );
        Self::builtin(
            "epanechnikov",
            Spatial::Epanechnikov,
            cf,
            true,
            SpatialTail::Compact(1.0),
        )
    }

    /// Infinite-order kernel with `φ(t) = exp(−t²/(1−t²))` on `|t| < 1`. Its spatial
    /// form has no closed expression and is recovered by numeric inversion.
    pub fn natterer() -> Self {
        let cf = CharFn::general(
            Arc::new(natterer_cf),
            vec![1.0],
            1.0,
            CfTail::Compact,
            1.0,
        );
        let tables = Arc::new(InvertedTables::new(cf.clone(), 1));
        Self::builtin("natterer", Spatial::Inverted(tables), cf, true, SpatialTail::Rapid)
    }

    /// `φ = 1` on `|t| < 1`. Square-integrable but not integrable, so it takes part in
    /// Fourier-side computations only.
    pub fn sinc() -> Self {
        let poly = PiecewisePoly::new(vec![0.0, 1.0], vec![vec![1.0]]).expect("valid indicator");
        Self::builtin(
            "sinc",
            Spatial::Sinc,
            CharFn::piecewise(poly),
            false,
            SpatialTail::Algebraic {
                coef: 1.0 / PI,
                power: 1.0,
            },
        )
    }

    /// A user-supplied kernel. `eval` is the spatial form, `cf` its characteristic function.
    pub fn custom(
        name: &str,
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        cf: CharFn,
        integrable: bool,
        spatial_tail: SpatialTail,
    ) -> Self {
        Self::builtin(name, Spatial::Custom(eval), cf, integrable, spatial_tail)
    }

    fn builtin(name: &str, spatial: Spatial, cf: CharFn, integrable: bool, spatial_tail: SpatialTail) -> Self {
        Self {
            name: name.to_string(),
            spatial,
            cf,
            integrable,
            spatial_tail,
            cache: Arc::new(KernelCache::default()),
        }
    }

    /// Looks a built-in kernel up by (case-insensitive) name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "trapezoidal" => Ok(Self::trapezoidal()),
            "gaussian" => Ok(Self::gaussian()),
            "epanechnikov" => Ok(Self::epanechnikov()),
            "natterer" => Ok(Self::natterer()),
            "sinc" => Ok(Self::sinc()),
            other => Err(Error::config(
                "kernel",
                format!("unknown kernel `{other}` (expected trapezoidal, gaussian, epanechnikov, natterer or sinc)"),
            )),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_integrable(&self) -> bool {
        self.integrable
    }

    pub fn char_fn(&self) -> &CharFn {
        &self.cf
    }

    pub fn cf_breakpoints(&self) -> &[f64] {
        self.cf.breakpoints()
    }

    pub fn cf_support_upper(&self) -> f64 {
        self.cf.support()
    }

    pub fn spatial_tail(&self) -> SpatialTail {
        self.spatial_tail
    }

    /// `K(x)`. Refused for kernels that are not integrable.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.integrable {
            return Err(Error::NotIntegrable(self.name.clone()));
        }
        Ok(self.eval_unchecked(x))
    }

    /// `K(x)` without the integrability guard.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.spatial {
            Spatial::Trapezoidal => trapezoidal_eval(x),
            Spatial::Gaussian => gaussian_pdf(x),
            Spatial::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
            Spatial::Sinc => {
                if x.abs() < 1e-4 {
                    (1.0 - x * x / 6.0) / PI
                } else {
                    x.sin() / (PI * x)
                }
            }
            Spatial::Inverted(t) => t.eval(x),
            Spatial::Custom(f) => f(x),
        }
    }

    /// `K_h(x) = K(x/h)/h`.
    pub fn scaled_eval(&self, h: f64, x: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.eval(x / h)? / h)
    }

    /// `φ_K(t)`.
    pub fn cf(&self, t: f64) -> f64 {
        self.cf.eval(t)
    }

    /// `(K * K)(x)`, the self-convolution, whose characteristic function is `φ_K²`.
    pub fn autoconv(&self, x: f64) -> f64 {
        match &self.spatial {
            Spatial::Trapezoidal => trapezoidal_autoconv(x),
            Spatial::Gaussian => (-0.25 * x * x).exp() / (2.0 * PI.sqrt()),
            Spatial::Epanechnikov => {
                let a = x.abs();
                if a >= 2.0 {
                    0.0
                } else {
                    3.0 / 160.0 * (2.0 - a).powi(3) * (a * a + 6.0 * a + 4.0)
                }
            }
            // φ² = φ for an indicator
            Spatial::Sinc => self.eval_unchecked(x),
            Spatial::Inverted(_) | Spatial::Custom(_) => {
                if let Some(p) = self.cf.as_piecewise() {
                    return p.product(p).cos_transform(x) / (2.0 * PI);
                }
                let tables = self
                    .cache
                    .autoconv_inverted
                    .get_or_init(|| Arc::new(InvertedTables::new(self.cf.clone(), 2)));
                tables.eval(x)
            }
        }
    }

    /// `(K(u), (K*K)(u))` in one pass; the pair sums of cross-validation and the
    /// integrated squared error call this for every pair of observations.
    #[inline]
    pub fn eval_with_autoconv(&self, u: f64) -> (f64, f64) {
        match &self.spatial {
            Spatial::Trapezoidal if u.abs() >= 1.0 => trapezoidal_pair(u),
            _ => (self.eval_unchecked(u), self.autoconv(u)),
        }
    }

    /// Upper truncation point for integrals of `φ_K(t)²` (scaled by `weight(t)`) on
    /// `[0, ∞)`, or the support when compact.
    pub(crate) fn cf_square_upper(&self, eps: f64) -> Result<f64> {
        if self.cf.support().is_finite() {
            return Ok(self.cf.support());
        }
        let start = self.cf.breakpoints().last().copied().unwrap_or(1.0).max(1.0);
        truncation_point(|t| self.cf.envelope(t).powi(2), start, self.cf.cap(), eps).ok_or_else(|| {
            Error::NonConvergence(format!(
                "φ_K² of `{}` does not decay below {eps:e} before t = {}",
                self.name,
                self.cf.cap()
            ))
        })
    }

    /// `R(K) = ∫K² = (1/2π)∫φ_K²`, computed on the Fourier side.
    pub fn roughness(&self) -> Result<f64> {
        if let Some(&r) = self.cache.roughness.get() {
            return Ok(r);
        }
        let st = QuadratureSettings::new(1e-13, 1e-12, 1 << 15)?;
        let upper = self.cf_square_upper(1e-10)?;
        let edges = refined_edges(0.0, upper, self.cf.breakpoints(), 8.0);
        let integral = integrate_panels(
            |t| {
                let v = self.cf.eval(t);
                v * v
            },
            &edges,
            &st,
        )?;
        let r = integral / PI;
        let _ = self.cache.roughness.set(r);
        Ok(r)
    }

    /// `(S_K, T_K)` with the default scan settings, cached.
    pub fn s_t(&self) -> (f64, f64) {
        *self
            .cache
            .s_t
            .get_or_init(|| self.compute_s_t(DEFAULT_FLATNESS_EPS, DEFAULT_SCAN_STEP, DEFAULT_SCAN_MAX))
    }

    /// Scans `|φ_K(t) − 1|` on a grid of step `scan_step` up to `scan_max`, with the
    /// characteristic-function break points added to the grid.
    ///
    /// `S_K` is the largest grid point `r` such that `φ_K` stays within `flatness_eps`
    /// of 1 on every grid point of `[0, r]`; `T_K` is the largest grid point where it
    /// is within `flatness_eps` of 1.
    pub fn compute_s_t(&self, flatness_eps: f64, scan_step: f64, scan_max: f64) -> (f64, f64) {
        let steps = (scan_max / scan_step).floor() as usize;
        let mut grid: Vec<f64> = (0..=steps).map(|k| k as f64 * scan_step).collect();
        grid.extend(self.cf.breakpoints().iter().copied().filter(|&b| b <= scan_max));
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let flat = |t: f64| (self.cf.eval(t) - 1.0).abs() <= flatness_eps;
        let mut s = 0.0;
        for &t in &grid {
            if flat(t) {
                s = t;
            } else {
                break;
            }
        }
        let t_k = grid.iter().rev().copied().find(|&t| flat(t)).unwrap_or(0.0);
        (s, t_k)
    }

    /// `m_j(K) = ∫ x^j K(x) dx` by spatial quadrature on `|x| <= 200`.
    ///
    /// Fails with `NonConvergence` when the tail beyond the truncation radius cannot be
    /// bounded below `1e-8`, which is the case whenever `x^j K(x)` is not absolutely
    /// integrable (e.g. the trapezoidal kernel, whose tails decay like `x⁻²`).
    pub fn moment(&self, j: u32) -> Result<f64> {
        if !self.integrable {
            return Err(Error::NotIntegrable(self.name.clone()));
        }
        if j == 0 {
            return Err(Error::InvalidInput("moment order must be >= 1".into()));
        }
        let radius = match self.spatial_tail {
            SpatialTail::Compact(r) => r.min(MOMENT_RADIUS),
            _ => MOMENT_RADIUS,
        };
        let tail = self.moment_tail(j, radius);
        if !(tail <= MOMENT_TAIL_TOL) {
            return Err(Error::NonConvergence(format!(
                "moment {j} of `{}`: tail beyond |x| = {radius} estimated at {tail:e}",
                self.name
            )));
        }
        let mut breaks = vec![0.0];
        let mut b = 0.5;
        while b < radius {
            breaks.push(b);
            breaks.push(-b);
            b *= 2.0;
        }
        let st = QuadratureSettings::new(1e-12, 1e-10, 1 << 15)?;
        integrate_with_breaks(
            |x| x.powi(j as i32) * self.eval_unchecked(x),
            -radius,
            radius,
            &breaks,
            &st,
        )
    }

    fn moment_tail(&self, j: u32, radius: f64) -> f64 {
        let jf = j as f64;
        match self.spatial_tail {
            SpatialTail::Compact(r) if r <= radius => 0.0,
            SpatialTail::Compact(_) => f64::INFINITY,
            SpatialTail::Gaussian => 2.0 * radius.powf(jf - 1.0) * gaussian_pdf(radius) * (1.0 + jf),
            SpatialTail::Algebraic { coef, power } => {
                let excess = power - jf - 1.0;
                if excess > 0.0 {
                    2.0 * coef * radius.powf(-excess) / excess
                } else {
                    f64::INFINITY
                }
            }
            SpatialTail::Rapid => {
                let peak = (0..=20)
                    .map(|i| radius * (0.5 + 0.025 * i as f64))
                    .map(|x| self.eval_unchecked(x).abs())
                    .fold(0.0, f64::max);
                2.0 * radius.powf(jf + 1.0) * peak
            }
        }
    }

    /// `m_j(K)` through the moment/derivative correspondence `m_j = (−i)^j φ_K^{(j)}(0)`.
    ///
    /// `φ_K` is even, so `g(u) = φ_K(r√u)` is smooth on `[0, 1]`; its Chebyshev
    /// interpolant gives the Taylor coefficients of `g` at `u = 0` through the closed
    /// form of `T_m^{(k)}(−1)`, and `φ_K^{(2k)}(0) = (2k)!·g^{(k)}(0)/(k!·r^{2k})`.
    /// Odd moments of the (symmetric) built-ins vanish identically, and so does every
    /// moment when `φ_K` is flat at the origin.
    pub fn cf_moment(&self, j: u32) -> f64 {
        if j % 2 == 1 || self.s_t().0 > 0.0 {
            return 0.0;
        }
        let k = j / 2;
        let first_break = self.cf.breakpoints().iter().copied().find(|&b| b > 0.0).unwrap_or(1.0);
        let r = 0.5 * first_break.min(1.0);
        let mut coeffs = chebyshev_coeffs(|u| self.cf.eval(r * u.max(0.0).sqrt()), CF_MOMENT_NODES);
        // Coefficients at rounding level carry no signal, and `T_m^{(k)}(−1)` grows like m^{2k}.
        let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for c in coeffs.iter_mut() {
            if c.abs() < 1e-14 * scale {
                *c = 0.0;
            }
        }
        // g^{(k)}(0) with x = 2u − 1, so d/du = 2 d/dx
        let mut deriv = 0.0;
        for (m, c) in coeffs.iter().enumerate() {
            let mf = m as f64;
            let mut at_one = 1.0;
            for i in 0..k {
                let fi = i as f64;
                at_one *= (mf * mf - fi * fi) / (2.0 * fi + 1.0);
            }
            let sign = if (m as u32 + k) % 2 == 0 { 1.0 } else { -1.0 };
            deriv += c * sign * at_one;
        }
        deriv *= 2f64.powi(k as i32);
        let taylor = deriv / factorial(k) / r.powi(j as i32);
        let phi_deriv = factorial(j) * taylor;
        if k % 2 == 0 {
            phi_deriv
        } else {
            -phi_deriv
        }
    }

    /// Moments `m_1..m_jmax`, order, flat-region bounds and roughness.
    ///
    /// Each moment comes from spatial quadrature when that integral converges and
    /// from the characteristic-function derivative otherwise (non-integrable kernels,
    /// slowly decaying tails).
    pub fn classify(&self, j_max: u32, moment_eps: f64) -> Result<KernelClassification> {
        if j_max < 2 {
            return Err(Error::InvalidInput("j_max must be at least 2".into()));
        }
        let mut moments = Vec::with_capacity(j_max as usize);
        for j in 1..=j_max {
            let m = if self.integrable {
                match self.moment(j) {
                    Ok(m) => m,
                    Err(Error::NonConvergence(_)) => self.cf_moment(j),
                    Err(e) => return Err(e),
                }
            } else {
                self.cf_moment(j)
            };
            moments.push(m);
        }
        let order = match moments.iter().position(|m| m.abs() > moment_eps) {
            Some(i) => KernelOrder::Finite(i as u32 + 1),
            None => KernelOrder::Infinite { checked_up_to: j_max },
        };
        let (s_k, t_k) = self.s_t();
        Ok(KernelClassification {
            s_k,
            t_k,
            order,
            moments,
            roughness: self.roughness()?,
            is_superkernel: s_k == t_k && s_k > 0.0,
        })
    }

    /// The admissibility condition `R(K) < 2K(0)` that guarantees an optimal
    /// bandwidth exists.
    pub fn is_admissible(&self) -> Result<bool> {
        let k0 = self.eval(0.0)?;
        if k0 <= 0.0 {
            return Ok(false);
        }
        Ok(self.roughness()? < 2.0 * k0)
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(h))
    }
}

/// Kernel order: the first non-vanishing moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelOrder {
    Finite(u32),
    /// No moment above the threshold up to `checked_up_to`.
    Infinite { checked_up_to: u32 },
}

impl fmt::Display for KernelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelOrder::Finite(k) => write!(f, "{k}"),
            KernelOrder::Infinite { checked_up_to } => {
                write!(f, "infinite (no nonzero moment up to j_max = {checked_up_to})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelClassification {
    pub s_k: f64,
    pub t_k: f64,
    pub order: KernelOrder,
    /// `m_1, …, m_jmax`
    pub moments: Vec<f64>,
    pub roughness: f64,
    pub is_superkernel: bool,
}

impl fmt::Display for KernelClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "s_k = {}", self.s_k)?;
        writeln!(f, "t_k = {}", self.t_k)?;
        writeln!(f, "order = {}", self.order)?;
        for (j, m) in self.moments.iter().enumerate() {
            writeln!(f, "m_{} = {:.6e}", j + 1, m)?;
        }
        writeln!(f, "roughness = {:.12e}", self.roughness)?;
        write!(f, "is_superkernel = {}", self.is_superkernel)
    }
}

fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}


const CF_MOMENT_NODES: usize = 20;

/// Chebyshev coefficients of the degree `nodes − 1` interpolant of `f` on `[0, 1]`
/// (first-kind nodes, mapped by `u = (x + 1)/2`).
fn chebyshev_coeffs<F: Fn(f64) -> f64>(f: F, nodes: usize) -> Vec<f64> {
    let nf = nodes as f64;
    let values: Vec<f64> = (0..nodes)
        .map(|i| f(0.5 * ((PI * (i as f64 + 0.5) / nf).cos() + 1.0)))
        .collect();
    (0..nodes)
        .map(|m| {
            let sum: f64 = values
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * m as f64 * (i as f64 + 0.5) / nf).cos())
                .sum();
            if m == 0 {
                sum / nf
            } else {
                2.0 * sum / nf
            }
        })
        .collect()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn trapezoidal_eval(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        return (1.5 - x2 * (15.0 / 24.0 - x2 * (63.0 / 720.0 - x2 * 255.0 / 40320.0))) / PI;
    }
    // cos x − cos 2x = 2 sin²(x/2)(4cos²(x/2) − 1), free of cancellation
    let (s, c) = (0.5 * x).sin_cos();
    2.0 * s * s * (4.0 * c * c - 1.0) / (PI * x * x)
}

/// Maclaurin coefficients (in `x²`) of the trapezoidal self-convolution
/// `(1/π)[∫₀¹ cos(xt) dt + ∫₁² (2−t)² cos(xt) dt]`.
fn trapezoidal_autoconv_series() -> &'static [f64; 18] {
    static COEFFS: OnceLock<[f64; 18]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut out = [0.0; 18];
        let mut fact = 1.0; // (2m)!
        for (m, slot) in out.iter_mut().enumerate() {
            if m > 0 {
                fact *= (2 * m - 1) as f64 * (2 * m) as f64;
            }
            let p = 2 * m as i32;
            let moment = |e: i32| (2f64.powi(e) - 1.0) / e as f64;
            let second = 4.0 * moment(p + 1) - 4.0 * moment(p + 2) + moment(p + 3);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sign * (1.0 / (p + 1) as f64 + second) / (fact * PI);
        }
        out
    })
}

fn trapezoidal_autoconv(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        let x2 = a * a;
        return trapezoidal_autoconv_series()
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x2 + c);
    }
    trapezoidal_pair(a).1
}

#[inline]
fn trapezoidal_pair(u: f64) -> (f64, f64) {
    let a = u.abs();
    let (s, c) = (0.5 * a).sin_cos();
    let sin1 = 2.0 * s * c;
    let cos1 = 1.0 - 2.0 * s * s;
    let sin2 = 2.0 * sin1 * cos1;
    let a2 = a * a;
    let k = 2.0 * s * s * (4.0 * c * c - 1.0) / (PI * a2);
    let kk = 2.0 / PI * (cos1 / a2 + (sin1 - sin2) / (a2 * a));
    (k, kk)
}

fn epanechnikov_cf(t: f64) -> f64 {
    let a = t.abs();
    if a < 0.5 {
        // 3 Σ_{k>=1} (−1)^{k+1} 2k t^{2k−2} / (2k+1)!
        let t2 = a * a;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 6.0; // (2k+1)! for k = 1
        for k in 1..=10u32 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * 2.0 * k as f64 * pow / fact;
            pow *= t2;
            fact *= (2 * k + 2) as f64 * (2 * k + 3) as f64;
        }
        return 3.0 * sum;
    }
    3.0 * (a.sin() - a * a.cos()) / (a * a * a)
}

fn natterer_cf(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (-t2 / (1.0 - t2)).exp()
    }
}

/// Spatial values of a compactly supported characteristic function raised to a
/// power, `(1/2π)∫φ(t)^power cos(xt) dt`, tabulated on a grid and interpolated.
struct InvertedTables {
    cf: CharFn,
    power: i32,
    table: OnceLock<Vec<f64>>,
}

const TABLE_STEP: f64 = 1.0 / 64.0;
const TABLE_LIMIT: f64 = 64.0;

impl InvertedTables {
    fn new(cf: CharFn, power: i32) -> Self {
        Self {
            cf,
            power,
            table: OnceLock::new(),
        }
    }

    fn direct(&self, x: f64) -> f64 {
        let st = QuadratureSettings::new(1e-13, 1e-11, 1 << 15).expect("valid settings");
        let upper = if self.cf.support().is_finite() {
            self.cf.support()
        } else {
            truncation_point(|t| self.cf.envelope(t).powi(self.power), 1.0, self.cf.cap(), 1e-14)
                .unwrap_or(self.cf.cap())
        };
        cos_transform_numeric(
            |t| self.cf.eval(t).powi(self.power),
            self.cf.breakpoints(),
            upper,
            x,
            &st,
        )
        .unwrap_or(f64::NAN)
            / (2.0 * PI)
    }

    fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        if a >= TABLE_LIMIT - 2.0 * TABLE_STEP {
            return self.direct(a);
        }
        let table = self.table.get_or_init(|| {
            let n = (TABLE_LIMIT / TABLE_STEP) as usize;
            (0..=n).map(|i| self.direct(i as f64 * TABLE_STEP)).collect()
        });
        // 4-point Lagrange interpolation; the function is even, so negative indices reflect.
        let pos = a / TABLE_STEP;
        let i = pos.floor() as i64;
        let frac = pos - i as f64;
        let at = |k: i64| table[k.unsigned_abs() as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let u = frac;
        -p0 * u * (u - 1.0) * (u - 2.0) / 6.0 + p1 * (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
            - p2 * (u + 1.0) * u * (u - 2.0) / 2.0
            + p3 * (u + 1.0) * u * (u - 1.0) / 6.0
    }
}
