//! Seeded generators for i.i.d. and ergodic dependent samples with known
//! marginal density, regression function and conditional variance.
//!
//! The dependent model is the exponential autoregression
//! `X_t = ρ X_{t-1} + I_t E_t`, `I_t ~ Bernoulli(1-ρ)`, `E_t ~ Exp(λ)`,
//! whose stationary marginal is exactly `Exp(λ)`. Responses are
//! `Φ(Y_t) = R(X_t) η_t` with `η_t ~ Gamma(1/v, v)`, so that
//! `E[Φ(Y) | X = x] = R(x)` and `Var[Φ(Y) | X = x] = v R(x)²`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::asymptotics::{CurveModel, CurveModelBuilder};
use crate::error::{domain, Error, Result};
use crate::estimators::Sample;

/// Default number of discarded initial states for the autoregression.
pub const DEFAULT_BURN_IN: usize = 1000;

/// ChaCha8 stream keyed by `(seed, stream)`; identical keys give identical
/// output on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Regression functions available to simulated models.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegressionFn {
    /// `x / (1 + x)`
    Rational,
    /// `tanh(x)`: linear near the origin, saturating at 1.
    LinearSat,
    /// `c`
    Constant(f64),
}

impl RegressionFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RegressionFn::Rational => x / (1.0 + x),
            RegressionFn::LinearSat => libm::tanh(x),
            RegressionFn::Constant(c) => c,
        }
    }

    pub fn first(&self, x: f64) -> f64 {
        match *self {
            RegressionFn::Rational => 1.0 / ((1.0 + x) * (1.0 + x)),
            RegressionFn::LinearSat => {
                let t = libm::tanh(x);
                1.0 - t * t
            }
            RegressionFn::Constant(_) => 0.0,
        }
    }

    pub fn second(&self, x: f64) -> f64 {
        match *self {
            RegressionFn::Rational => -2.0 / ((1.0 + x) * (1.0 + x) * (1.0 + x)),
            RegressionFn::LinearSat => {
                let t = libm::tanh(x);
                -2.0 * t * (1.0 - t * t)
            }
            RegressionFn::Constant(_) => 0.0,
        }
    }
}

#[cfg(feature = "serde")]
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// A data-generating model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum ProcessSpec {
    IidExponential {
        rate: f64,
    },
    IidGamma {
        shape: f64,
        scale: f64,
    },
    Ear1 {
        rho: f64,
        rate: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_burn_in"))]
        burn_in: usize,
    },
    RegressionOver {
        base: Box<ProcessSpec>,
        regfn: RegressionFn,
        noise_var: f64,
    },
}

fn positive(op: &'static str, v: f64, what: &'static str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(op, v, what))
    }
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::IidExponential { rate } => positive("iid_exponential", *rate, "rate > 0"),
            ProcessSpec::IidGamma { shape, scale } => {
                positive("iid_gamma", *shape, "shape > 0")?;
                positive("iid_gamma", *scale, "scale > 0")
            }
            ProcessSpec::Ear1 { rho, rate, .. } => {
                if !(*rho >= 0.0 && *rho < 1.0) {
                    return Err(domain("ear1", *rho, "0 <= rho < 1"));
                }
                positive("ear1", *rate, "rate > 0")
            }
            ProcessSpec::RegressionOver {
                base,
                regfn,
                noise_var,
            } => {
                if matches!(**base, ProcessSpec::RegressionOver { .. }) {
                    return Err(Error::Contract(
                        "regression base must be a covariate process",
                    ));
                }
                base.validate()?;
                if !(*noise_var >= 0.0) || !noise_var.is_finite() {
                    return Err(domain("regression_over", *noise_var, "noise_var >= 0"));
                }
                if let RegressionFn::Constant(c) = regfn {
                    if !(*c >= 0.0) || !c.is_finite() {
                        return Err(domain("regression_over", *c, "constant >= 0"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn has_responses(&self) -> bool {
        matches!(self, ProcessSpec::RegressionOver { .. })
    }

    /// Draws a sample of length `n` from this model.
    pub fn generate(&self, rng: &mut SeededRng, n: usize) -> Result<Sample> {
        match self {
            ProcessSpec::IidExponential { .. } | ProcessSpec::IidGamma { .. } => {
                generate_iid(rng, self, n)
            }
            ProcessSpec::Ear1 { rho, rate, burn_in } => {
                generate_ear1(rng, *rho, *rate, n, *burn_in)
            }
            ProcessSpec::RegressionOver {
                base,
                regfn,
                noise_var,
            } => generate_regression(rng, base, *regfn, *noise_var, n),
        }
    }

    /// Stationary marginal density of the covariate with its first two derivatives.
    fn marginal(&self) -> Result<CurveModelBuilder> {
        match *self {
            ProcessSpec::IidExponential { rate } | ProcessSpec::Ear1 { rate, .. } => Ok(
                CurveModel::builder(move |x| exp_pdf(rate, x)).density_derivatives(
                    move |x| -rate * exp_pdf(rate, x),
                    move |x| rate * rate * exp_pdf(rate, x),
                ),
            ),
            ProcessSpec::IidGamma { shape, scale } => {
                let score = move |x: f64| (shape - 1.0) / x - 1.0 / scale;
                Ok(
                    CurveModel::builder(move |x| gamma_pdf(shape, scale, x)).density_derivatives(
                        move |x| gamma_pdf(shape, scale, x) * score(x),
                        move |x| {
                            let s = score(x);
                            gamma_pdf(shape, scale, x) * (s * s - (shape - 1.0) / (x * x))
                        },
                    ),
                )
            }
            ProcessSpec::RegressionOver { .. } => Err(Error::Contract("nested regression model")),
        }
    }

    /// The model's true curves: `f`, `f'`, `f''` and, for regression models,
    /// `R`, `R'`, `R''` and `σ²(x) = v R(x)²`.
    pub fn truth(&self) -> Result<CurveModel> {
        self.validate()?;
        match self {
            ProcessSpec::RegressionOver {
                base,
                regfn,
                noise_var,
            } => {
                let (regfn, v) = (*regfn, *noise_var);
                base.marginal()?
                    .regression(move |x| regfn.eval(x))
                    .regression_derivatives(move |x| regfn.first(x), move |x| regfn.second(x))
                    .conditional_variance(move |x| {
                        let r = regfn.eval(x);
                        v * r * r
                    })
                    .register()
            }
            _ => self.marginal()?.register(),
        }
    }
}

fn exp_pdf(rate: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        rate * libm::exp(-rate * x)
    }
}

fn gamma_pdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match shape {
            s if s < 1.0 => f64::INFINITY,
            s if s == 1.0 => 1.0 / scale,
            _ => 0.0,
        };
    }
    let ln_gamma = crate::specfun::log_gamma(shape).expect("validated shape");
    libm::exp((shape - 1.0) * libm::log(x) - x / scale - ln_gamma - shape * libm::log(scale))
}

/// One Gamma(`shape`, `scale`) variate (Marsaglia–Tsang rejection).
pub fn sample_gamma(rng: &mut SeededRng, shape: f64, scale: f64) -> Result<f64> {
    let dist = Gamma::new(shape, scale)
        .map_err(|_| domain("sample_gamma", shape.min(scale), "shape, scale > 0"))?;
    Ok(dist.sample(rng))
}

/// `n` independent draws from an `iid_*` model.
pub fn generate_iid(rng: &mut SeededRng, spec: &ProcessSpec, n: usize) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Contract("sample size must be positive"));
    }
    spec.validate()?;
    let xs: Vec<f64> = match *spec {
        ProcessSpec::IidExponential { rate } => {
            let dist = Exp::new(rate).map_err(|_| domain("iid_exponential", rate, "rate > 0"))?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        ProcessSpec::IidGamma { shape, scale } => {
            let dist =
                Gamma::new(shape, scale).map_err(|_| domain("iid_gamma", shape, "shape > 0"))?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        _ => return Err(Error::Contract("generate_iid needs an iid_* process")),
    };
    Sample::from_xs(xs)
}

/// Exponential autoregression of order one, started from its stationary law.
///
/// With `rho = 0` the chain has no memory and the draws are exactly those of
/// `generate_iid` for `Exp(rate)`.
pub fn generate_ear1(
    rng: &mut SeededRng,
    rho: f64,
    rate: f64,
    n: usize,
    burn_in: usize,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Contract("sample size must be positive"));
    }
    let spec = ProcessSpec::Ear1 { rho, rate, burn_in };
    spec.validate()?;
    if rho == 0.0 {
        return generate_iid(rng, &ProcessSpec::IidExponential { rate }, n);
    }
    let innovation = Exp::new(rate).map_err(|_| domain("ear1", rate, "rate > 0"))?;
    let mut state = innovation.sample(rng);
    let step = |state: &mut f64, rng: &mut SeededRng| {
        let e = innovation.sample(rng);
        let fresh = rng.random_bool(1.0 - rho);
        *state = rho * *state + if fresh { e } else { 0.0 };
    };
    for _ in 0..burn_in {
        step(&mut state, rng);
    }
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        step(&mut state, rng);
        xs.push(state);
    }
    Sample::from_xs(xs)
}

/// Covariates from `base`, responses `R(X_t) η_t` with `η_t ~ Gamma(1/v, v)`
/// (`η ≡ 1` when `v = 0`).
pub fn generate_regression(
    rng: &mut SeededRng,
    base: &ProcessSpec,
    regfn: RegressionFn,
    noise_var: f64,
    n: usize,
) -> Result<Sample> {
    ProcessSpec::RegressionOver {
        base: Box::new(base.clone()),
        regfn,
        noise_var,
    }
    .validate()?;
    let covariates = base.generate(rng, n)?;
    let xs = covariates.xs().to_vec();
    let ys: Vec<f64> = if noise_var == 0.0 {
        xs.iter().map(|&x| regfn.eval(x)).collect()
    } else {
        let noise = Gamma::new(1.0 / noise_var, noise_var)
            .map_err(|_| domain("regression_over", noise_var, "noise_var > 0"))?;
        xs.iter()
            .map(|&x| regfn.eval(x) * noise.sample(rng))
            .collect()
    };
    Sample::new(xs, Some(ys))
}
