//! The kernel density estimator `f̂(x) = (1/n)Σ K_h(x − X_i)` and the empirical
//! characteristic function.

use num_complex::Complex64;

use crate::densities::Sample;
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::numerics::pairwise_sum;

/// A kernel, a bandwidth and a sample.
#[derive(Debug, Clone)]
pub struct Estimate {
    kernel: KernelSpec,
    bandwidth: f64,
    sample: Sample,
}

impl Estimate {
    pub fn new(kernel: KernelSpec, bandwidth: f64, sample: Sample) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(Self {
            kernel,
            bandwidth,
            sample,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    /// `f̂(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.kernel.is_integrable() {
            return Err(Error::NotIntegrable(self.kernel.name().to_string()));
        }
        let h = self.bandwidth;
        let terms: Vec<f64> = self
            .sample
            .points()
            .iter()
            .map(|xi| self.kernel.eval_unchecked((x - xi) / h))
            .collect();
        Ok(pairwise_sum(&terms) / (h * self.sample.n() as f64))
    }

    /// `f̂` at every point of `grid`; identical to pointwise [`Estimate::eval`].
    pub fn eval_grid(&self, grid: &EvalGrid) -> Result<Vec<f64>> {
        grid.points().map(|x| self.eval(x)).collect()
    }
}

/// `count` equispaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    lo: f64,
    hi: f64,
    count: usize,
}

impl EvalGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if count < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {count}")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.step();
        (0..self.count).map(move |i| if i + 1 == self.count { self.hi } else { self.lo + i as f64 * step })
    }
}

/// `φ_n(t) = (1/n)Σ e^{itX_j}`.
pub fn ecf(sample: &Sample, t: f64) -> Complex64 {
    let (re, im): (Vec<f64>, Vec<f64>) = sample
        .points()
        .iter()
        .map(|x| {
            let (s, c) = (t * x).sin_cos();
            (c, s)
        })
        .unzip();
    let n = sample.n() as f64;
    Complex64::new(pairwise_sum(&re) / n, pairwise_sum(&im) / n)
}

/// `|φ_n(t)|²`, clamped to `[0, 1]`.
pub fn ecf_abs2(sample: &Sample, t: f64) -> f64 {
    ecf(sample, t).norm_sqr().min(1.0)
}
