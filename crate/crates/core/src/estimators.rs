//! Gamma-kernel density, numerator and regression estimators.
//!
//! Kernel sums run over the sample sorted by `(x, y)` and are reduced with
//! pairwise summation, so an estimate depends only on the multiset of rows
//! and never on their order or on how callers split work.

use alloc::vec::Vec;
use core::ops::Add;

use crate::error::{domain, Error, Result};
use crate::kernel::{GammaKernel, KernelParams};

/// Observations `X_1..X_n` and, optionally, transformed responses `Φ(Y_1)..Φ(Y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    xs: Vec<f64>,
    ys: Option<Vec<f64>>,
    sorted_xs: Vec<f64>,
    sorted_ys: Option<Vec<f64>>,
    y_range: Option<(f64, f64)>,
}

impl Sample {
    pub fn new(xs: Vec<f64>, ys: Option<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Contract("empty sample"));
        }
        if let Some(bad) = xs.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(domain("sample", *bad, "observations x >= 0 and finite"));
        }
        if let Some(ys) = &ys {
            if ys.len() != xs.len() {
                return Err(Error::Contract("xs and ys differ in length"));
            }
            if let Some(bad) = ys.iter().find(|y| !y.is_finite()) {
                return Err(domain("sample", *bad, "finite responses"));
            }
        }

        let mut order: Vec<usize> = (0..xs.len()).collect();
        match &ys {
            Some(ys) => order
                .sort_unstable_by(|&i, &j| xs[i].total_cmp(&xs[j]).then(ys[i].total_cmp(&ys[j]))),
            None => order.sort_unstable_by(|&i, &j| xs[i].total_cmp(&xs[j])),
        }
        let sorted_xs = order.iter().map(|&i| xs[i]).collect();
        let sorted_ys = ys.as_ref().map(|ys| order.iter().map(|&i| ys[i]).collect());
        let y_range = ys.as_ref().map(|ys| {
            ys.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                    (lo.min(y), hi.max(y))
                })
        });
        Ok(Self {
            xs,
            ys,
            sorted_xs,
            sorted_ys,
            y_range,
        })
    }

    pub fn from_xs(xs: Vec<f64>) -> Result<Self> {
        Self::new(xs, None)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Observations in their original order.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> Option<&[f64]> {
        self.ys.as_deref()
    }

    pub fn has_responses(&self) -> bool {
        self.ys.is_some()
    }
}

/// Strictly increasing evaluation points inside `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    points: Vec<f64>,
    a: f64,
    b: f64,
}

impl EvaluationGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let (Some(&a), Some(&b)) = (points.first(), points.last()) else {
            return Err(Error::Contract("evaluation grid is empty"));
        };
        if let Some(bad) = points.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(domain("grid", *bad, "grid points >= 0 and finite"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Contract("grid points must be strictly increasing"));
        }
        Ok(Self { points, a, b })
    }

    /// `count` equally spaced points from `a` to `b`, endpoints included.
    pub fn linspace(a: f64, b: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::Contract("grid count must be positive")),
            1 => Self::new(alloc::vec![a]),
            _ => {
                if !(a < b) {
                    return Err(Error::Contract("grid needs a < b"));
                }
                let step = (b - a) / (count - 1) as f64;
                let mut points: Vec<f64> = (0..count).map(|i| a + step * i as f64).collect();
                points[count - 1] = b;
                Self::new(points)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A regression estimate together with its starvation flag.
///
/// When no kernel weight reaches the point, the estimate is `0` (the `y/0 = 0`
/// convention) and `starved` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionEstimate {
    pub value: f64,
    pub starved: bool,
}

/// Estimated curves on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub grid: EvaluationGrid,
    pub density: Vec<f64>,
    pub numerator: Option<Vec<f64>>,
    pub regression: Option<Vec<f64>>,
    pub starved: Option<Vec<bool>>,
    pub h: f64,
    pub n: usize,
}

/// Which curve of an [`EstimateSeries`] to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Density,
    Regression,
}

#[derive(Clone, Copy, Default)]
struct Pair(f64, f64);

impl Add for Pair {
    type Output = Pair;
    fn add(self, rhs: Pair) -> Pair {
        Pair(self.0 + rhs.0, self.1 + rhs.1)
    }
}

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (tree) sum of `term(lo..hi)` in index order.
fn pairwise<T, F>(lo: usize, hi: usize, term: &F) -> T
where
    T: Add<Output = T> + Default,
    F: Fn(usize) -> T,
{
    if hi - lo <= PAIRWISE_BLOCK {
        return (lo..hi).fold(T::default(), |acc, i| acc + term(i));
    }
    let mid = lo + (hi - lo) / 2;
    pairwise(lo, mid, term) + pairwise(mid, hi, term)
}

/// Pairwise sum of a slice in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise(0, values.len(), &|i| values[i])
}

fn kernel_sum(sample: &Sample, kernel: &GammaKernel) -> f64 {
    let xs = &sample.sorted_xs;
    pairwise(0, xs.len(), &|i| kernel.eval(xs[i]))
}

fn weighted_sums(sample: &Sample, kernel: &GammaKernel) -> Result<Pair> {
    let ys = sample
        .sorted_ys
        .as_ref()
        .ok_or(Error::Contract("sample has no responses"))?;
    let xs = &sample.sorted_xs;
    Ok(pairwise(0, xs.len(), &|i| {
        let k = kernel.eval(xs[i]);
        Pair(k, ys[i] * k)
    }))
}

fn ratio(sample: &Sample, sums: Pair) -> RegressionEstimate {
    if sums.0 == 0.0 {
        return RegressionEstimate {
            value: 0.0,
            starved: true,
        };
    }
    // a convex combination of the responses; clamp away the last-ulp overshoot
    let (lo, hi) = sample.y_range.expect("responses present");
    RegressionEstimate {
        value: (sums.1 / sums.0).clamp(lo, hi),
        starved: false,
    }
}

/// `D_n(x) = (1/n) Σ K(X_t)`.
pub fn density_estimate(sample: &Sample, x: f64, h: f64) -> Result<f64> {
    let kernel = GammaKernel::new(KernelParams::new(x, h)?)?;
    Ok(kernel_sum(sample, &kernel) / sample.len() as f64)
}

/// `N_n(x) = (1/n) Σ Φ(Y_t) K(X_t)`.
pub fn numerator_estimate(sample: &Sample, x: f64, h: f64) -> Result<f64> {
    let kernel = GammaKernel::new(KernelParams::new(x, h)?)?;
    Ok(weighted_sums(sample, &kernel)?.1 / sample.len() as f64)
}

/// `R_n(x) = Σ Φ(Y_t) K(X_t) / Σ K(X_t)`.
pub fn regression_estimate(sample: &Sample, x: f64, h: f64) -> Result<RegressionEstimate> {
    let kernel = GammaKernel::new(KernelParams::new(x, h)?)?;
    let sums = weighted_sums(sample, &kernel)?;
    Ok(ratio(sample, sums))
}

/// Applies the pointwise estimators at every grid point, in grid order.
pub fn estimate_on_grid(
    sample: &Sample,
    grid: &EvaluationGrid,
    h: f64,
    with_regression: bool,
) -> Result<EstimateSeries> {
    if with_regression && !sample.has_responses() {
        return Err(Error::Contract(
            "regression requested but sample has no responses",
        ));
    }
    let n = sample.len();
    let mut density = Vec::with_capacity(grid.len());
    let mut numerator = Vec::new();
    let mut regression = Vec::new();
    let mut starved = Vec::new();
    for &x in grid.points() {
        let kernel = GammaKernel::new(KernelParams::new(x, h)?)?;
        if with_regression {
            let sums = weighted_sums(sample, &kernel)?;
            let r = ratio(sample, sums);
            density.push(sums.0 / n as f64);
            numerator.push(sums.1 / n as f64);
            regression.push(r.value);
            starved.push(r.starved);
        } else {
            density.push(kernel_sum(sample, &kernel) / n as f64);
        }
    }
    Ok(EstimateSeries {
        grid: grid.clone(),
        density,
        numerator: with_regression.then_some(numerator),
        regression: with_regression.then_some(regression),
        starved: with_regression.then_some(starved),
        h,
        n,
    })
}

/// `max |estimate - reference|` over the grid; starved points are skipped for regression.
pub fn sup_error<F: Fn(f64) -> f64>(
    series: &EstimateSeries,
    reference: F,
    which: Curve,
) -> Result<f64> {
    let points = series.grid.points();
    match which {
        Curve::Density => Ok(points
            .iter()
            .zip(&series.density)
            .map(|(&x, &d)| (d - reference(x)).abs())
            .fold(0.0, f64::max)),
        Curve::Regression => {
            let (Some(values), Some(starved)) = (&series.regression, &series.starved) else {
                return Err(Error::Contract("series carries no regression curve"));
            };
            let mut informative = false;
            let mut worst: f64 = 0.0;
            for ((&x, &r), &s) in points.iter().zip(values).zip(starved) {
                if !s {
                    informative = true;
                    worst = worst.max((r - reference(x)).abs());
                }
            }
            if !informative {
                return Err(Error::Contract("every grid point is starved"));
            }
            Ok(worst)
        }
    }
}
