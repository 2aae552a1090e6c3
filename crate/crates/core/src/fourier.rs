//! Characteristic-function representations and cosine transforms.
//!
//! All built-in kernels and densities are symmetric, so their characteristic
//! functions are real and even and are described on `[0, ∞)` only. Piecewise
//! polynomial characteristic functions (trapezoidal, sinc, Fejér-de la
//! Vallée-Poussin) get exact products and exact cosine transforms; everything
//! else goes through adaptive quadrature with an explicit truncation point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{integrate_panels, refined_edges, QuadratureSettings};

/// An even function given on `[0, ∞)` by polynomial pieces in `t`, zero beyond the
/// last knot. Piece `i` covers `[knots[i], knots[i+1])` with ascending monomial
/// coefficients `coeffs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    knots: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(knots: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != 0.0 || coeffs.len() != knots.len() - 1 {
            return Err(Error::InvalidInput(
                "piecewise polynomial needs knots starting at 0 and one coefficient list per piece".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidInput("knots must be finite and strictly increasing".into()));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(Self { knots, coeffs })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Upper end of the support.
    pub fn support(&self) -> f64 {
        *self.knots.last().expect("at least two knots")
    }

    fn piece_index(&self, u: f64) -> Option<usize> {
        // The last piece is closed at the support end so that indicators are `1` there.
        if !(u <= self.support()) {
            return None;
        }
        // partition_point gives the first knot > u; the piece starts one before it.
        let idx = self.knots.partition_point(|&k| k <= u);
        Some(idx.saturating_sub(1).min(self.coeffs.len() - 1))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let u = t.abs();
        match self.piece_index(u) {
            Some(i) => horner(&self.coeffs[i], u),
            None => 0.0,
        }
    }

    /// The function `t ↦ p(t·h)`.
    pub fn scaled(&self, h: f64) -> Self {
        let knots = self.knots.iter().map(|k| k / h).collect();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let mut hp = 1.0;
                c.iter()
                    .map(|&ck| {
                        let v = ck * hp;
                        hp *= h;
                        v
                    })
                    .collect()
            })
            .collect();
        Self { knots, coeffs }
    }

    /// Pointwise product, supported on the intersection of both supports.
    pub fn product(&self, other: &Self) -> Self {
        let upper = self.support().min(other.support());
        let mut knots: Vec<f64> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .copied()
            .filter(|&k| k < upper)
            .collect();
        knots.push(upper);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let coeffs = knots
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let a = &self.coeffs[self.piece_index(mid).expect("inside support")];
                let b = &other.coeffs[other.piece_index(mid).expect("inside support")];
                poly_mul(a, b)
            })
            .collect();
        Self { knots, coeffs }
    }

    /// `∫_{-∞}^{∞} p(t) dt`.
    pub fn integral(&self) -> f64 {
        2.0 * self
            .knots
            .windows(2)
            .zip(&self.coeffs)
            .map(|(w, c)| {
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| {
                        let e = (k + 1) as i32;
                        ck * (w[1].powi(e) - w[0].powi(e)) / e as f64
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
    }

    /// `∫_{-∞}^{∞} p(t) cos(x t) dt`, in closed form.
    pub fn cos_transform(&self, x: f64) -> f64 {
        let x = x.abs();
        2.0 * self
            .knots
            .windows(2)
            .zip(&self.coeffs)
            .map(|(w, c)| piece_cos_integral(c, w[0], w[1], x))
            .sum::<f64>()
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `∫_a^b p(t) cos(x t) dt` for `0 <= a < b`, `x >= 0`.
fn piece_cos_integral(c: &[f64], a: f64, b: f64, x: f64) -> f64 {
    if x * b <= 2.0 {
        // Taylor series of the cosine; no cancellation for small x·b.
        let mut sum = 0.0;
        let mut factor = 1.0; // (-1)^m x^{2m} / (2m)!
        for m in 0..60usize {
            let term: f64 = c
                .iter()
                .enumerate()
                .map(|(k, ck)| {
                    let e = (k + 2 * m + 1) as i32;
                    ck * (b.powi(e) - a.powi(e)) / e as f64
                })
                .sum::<f64>()
                * factor;
            sum += term;
            if m > 0 && term.abs() <= 1e-18 * sum.abs().max(1e-300) {
                break;
            }
            let m2 = (2 * m + 1) as f64;
            factor *= -x * x / (m2 * (m2 + 1.0));
        }
        return sum;
    }
    // Repeated integration by parts:
    // ∫ p cos(xt) = Σ_j p^{(j)}(t) sin(xt + jπ/2) / x^{j+1}.
    let antiderivative = |t: f64| {
        let (s, co) = (x * t).sin_cos();
        let mut deriv = c.to_vec();
        let mut total = 0.0;
        let mut xp = x;
        let mut j = 0usize;
        while !deriv.is_empty() {
            let pj = horner(&deriv, t);
            let trig = match j % 4 {
                0 => s,
                1 => co,
                2 => -s,
                _ => -co,
            };
            total += pj * trig / xp;
            xp *= x;
            j += 1;
            deriv = deriv
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, ck)| ck * k as f64)
                .collect();
        }
        total
    };
    antiderivative(b) - antiderivative(a)
}

/// Decay envelope of a characteristic function: an upper bound on `|φ(s)|` for all
/// `s >= t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfTail {
    /// Identically zero beyond the support.
    Compact,
    /// `exp(-t²/2)`
    Gaussian,
    /// `exp(-rate·t)`
    Exponential { rate: f64 },
    /// `coef / t^power`
    Algebraic { coef: f64, power: f64 },
}

/// How a characteristic function is evaluated.
#[derive(Clone)]
pub enum CfShape {
    Piecewise(PiecewisePoly),
    /// `exp(-t²/2)`
    Gaussian,
    General(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CfShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfShape::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            CfShape::Gaussian => f.write_str("Gaussian"),
            CfShape::General(_) => f.write_str("General(..)"),
        }
    }
}

/// A real, even characteristic function together with the structural facts the
/// quadrature needs: kink points, support and decay.
#[derive(Debug, Clone)]
pub struct CharFn {
    shape: CfShape,
    breakpoints: Vec<f64>,
    support: f64,
    tail: CfTail,
    cap: f64,
}

impl CharFn {
    pub fn piecewise(poly: PiecewisePoly) -> Self {
        let support = poly.support();
        let breakpoints = poly.knots()[1..].to_vec();
        Self {
            shape: CfShape::Piecewise(poly),
            breakpoints,
            support,
            tail: CfTail::Compact,
            cap: support,
        }
    }

    /// `exp(-t²/2)`, truncated at `cap`.
    pub fn gaussian(cap: f64) -> Self {
        Self {
            shape: CfShape::Gaussian,
            breakpoints: Vec::new(),
            support: f64::INFINITY,
            tail: CfTail::Gaussian,
            cap,
        }
    }

    /// Any other even characteristic function. `support` is `f64::INFINITY` when
    /// unbounded; `cap` is the hard truncation point for quadrature.
    pub fn general(
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        mut breakpoints: Vec<f64>,
        support: f64,
        tail: CfTail,
        cap: f64,
    ) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let cap = if support.is_finite() { support } else { cap };
        Self {
            shape: CfShape::General(f),
            breakpoints,
            support,
            tail,
            cap,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.shape {
            CfShape::Piecewise(p) => p.eval(t),
            CfShape::Gaussian => (-0.5 * t * t).exp(),
            CfShape::General(f) => {
                if t.abs() >= self.support {
                    0.0
                } else {
                    f(t)
                }
            }
        }
    }

    pub fn shape(&self) -> &CfShape {
        &self.shape
    }

    pub fn as_piecewise(&self) -> Option<&PiecewisePoly> {
        match &self.shape {
            CfShape::Piecewise(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.shape, CfShape::Gaussian)
    }

    /// Kink and support points on `[0, ∞)`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Smallest `U` with `φ(t) = 0` for `|t| >= U`, or `+∞`.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Hard truncation point used by quadrature (the support when finite).
    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn tail(&self) -> CfTail {
        self.tail
    }

    /// Upper bound on `|φ(s)|` for all `s >= |t|`.
    pub fn envelope(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= self.support {
            return 0.0;
        }
        match self.tail {
            CfTail::Compact => 1.0,
            CfTail::Gaussian => (-0.5 * t * t).exp(),
            CfTail::Exponential { rate } => (-rate * t).exp(),
            CfTail::Algebraic { coef, power } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (coef / t.powf(power)).min(1.0)
                }
            }
        }
    }
}

/// First point `T` of a geometric grid starting at `start` where
/// `envelope(T)·max(T, 1) <= eps`, searched up to `cap`.
pub fn truncation_point<E: Fn(f64) -> f64>(envelope: E, start: f64, cap: f64, eps: f64) -> Option<f64> {
    let mut t = start.max(1e-3);
    loop {
        if t >= cap {
            return (envelope(cap) * cap.max(1.0) <= eps).then_some(cap);
        }
        if envelope(t) * t.max(1.0) <= eps {
            return Some(t);
        }
        t *= 1.1;
    }
}

/// `∫_{-∞}^{∞} w(t) cos(x t) dt` for an even `w` that vanishes (or has been
/// truncated) beyond `upper`. Panels are at most one period of the cosine wide.
pub fn cos_transform_numeric<W: Fn(f64) -> f64>(
    w: W,
    breakpoints: &[f64],
    upper: f64,
    x: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let x = x.abs();
    let width = if x > 0.0 { 2.0 * std::f64::consts::PI / x } else { f64::INFINITY };
    let edges = refined_edges(0.0, upper, breakpoints, width);
    // Over many periods the panels cancel, and the attainable accuracy is set by
    // ∫|w| rather than by the (small) result.
    let mut st = *settings;
    if edges.len() > 16 {
        let coarse = refined_edges(0.0, upper, breakpoints, upper / 8.0);
        let loose = QuadratureSettings::new(1e-300, 1e-4, 1 << 10)?;
        let l1 = integrate_panels(|t| w(t).abs(), &coarse, &loose)?;
        st.abs_tol = st.abs_tol.max(st.rel_tol * l1);
    }
    Ok(2.0 * integrate_panels(|t| w(t) * (x * t).cos(), &edges, &st)?)
}

/// Beyond this many cosine periods over `[0, upper]` the transform switches from
/// panel quadrature to the integration-by-parts expansion.
const MAX_PERIODS: f64 = 4000.0;

/// `∫_{-∞}^{∞} w(t) cos(x t) dt` for an even `w` that vanishes beyond `upper` and is
/// smooth between consecutive break points.
///
/// Moderate `|x|` goes through [`cos_transform_numeric`]. For large `|x|` each smooth
/// piece `[a, b]` contributes `[w sin(xt)/x + w' cos(xt)/x² − w'' sin(xt)/x³]_a^b`,
/// with one-sided values and derivatives taken from a quartic fit inside the piece;
/// the neglected remainder is of order `|w'''|/x⁴`.
pub fn cos_transform_smooth<W: Fn(f64) -> f64>(
    w: W,
    breakpoints: &[f64],
    upper: f64,
    x: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let x = x.abs();
    if x * upper <= 2.0 * std::f64::consts::PI * MAX_PERIODS {
        return cos_transform_numeric(w, breakpoints, upper, x, settings);
    }
    let mut edges = vec![0.0];
    edges.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < upper));
    edges.push(upper);
    let mut total = 0.0;
    for piece in edges.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let step = 1e-3 * (b - a);
        for (end, dir, sign) in [(a, 1.0, -1.0), (b, -1.0, 1.0)] {
            let (v, d1, d2) = one_sided_jet(&w, end, dir * step);
            let (sn, cs) = (x * end).sin_cos();
            total += sign * (v * sn / x + d1 * cs / (x * x) - d2 * sn / (x * x * x));
        }
    }
    Ok(2.0 * total)
}

/// Value, first and second derivative of `w` at `end`, approached from the side of
/// `step`, from the quartic through `w(end + k·step)`, `k = 1..5`.
fn one_sided_jet<W: Fn(f64) -> f64>(w: &W, end: f64, step: f64) -> (f64, f64, f64) {
    // Rows map the samples at k = 1..5 to the Taylor coefficients c0, c1, c2 of the
    // interpolating quartic, in units of `step`.
    const C0: [f64; 5] = [5.0, -10.0, 10.0, -5.0, 1.0];
    const C1: [f64; 5] = [-77.0 / 12.0, 107.0 / 6.0, -39.0 / 2.0, 61.0 / 6.0, -25.0 / 12.0];
    const C2: [f64; 5] = [71.0 / 24.0, -59.0 / 6.0, 49.0 / 4.0, -41.0 / 6.0, 35.0 / 24.0];
    let y: Vec<f64> = (1..=5).map(|k| w(end + k as f64 * step)).collect();
    let dot = |c: &[f64; 5]| c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
    (dot(&C0), dot(&C1) / step, 2.0 * dot(&C2) / (step * step))
}
