//! Bandwidth schedules, leading bias terms, limiting variances and the
//! standardization used to test the central limit theorems.

use alloc::boxed::Box;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{domain, Error, Result};

/// `h(n) = c · n^{-alpha_exp}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "RawSchedule", into = "RawSchedule")
)]
pub struct BandwidthSchedule {
    c: f64,
    alpha_exp: f64,
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
#[derive(Clone, Copy)]
struct RawSchedule {
    c: f64,
    alpha: f64,
}

impl TryFrom<RawSchedule> for BandwidthSchedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        BandwidthSchedule::new(raw.c, raw.alpha)
    }
}

impl From<BandwidthSchedule> for RawSchedule {
    fn from(s: BandwidthSchedule) -> Self {
        RawSchedule {
            c: s.c,
            alpha: s.alpha_exp,
        }
    }
}

impl BandwidthSchedule {
    pub fn new(c: f64, alpha_exp: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(domain("bandwidth_schedule", c, "c > 0"));
        }
        if !(alpha_exp > 0.0 && alpha_exp < 1.0) {
            return Err(domain("bandwidth_schedule", alpha_exp, "0 < alpha < 1"));
        }
        Ok(Self { c, alpha_exp })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha_exp(&self) -> f64 {
        self.alpha_exp
    }
}

pub fn bandwidth(schedule: BandwidthSchedule, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Contract("bandwidth needs n >= 1"));
    }
    Ok(schedule.c * libm::pow(n as f64, -schedule.alpha_exp))
}

/// Either a fixed bandwidth or a schedule in `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum Bandwidth {
    Fixed { h: f64 },
    Schedule(BandwidthSchedule),
}

impl Bandwidth {
    pub fn at(&self, n: u64) -> Result<f64> {
        match *self {
            Bandwidth::Fixed { h } => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(domain("bandwidth", h, "h > 0"));
                }
                Ok(h)
            }
            Bandwidth::Schedule(s) => bandwidth(s, n),
        }
    }
}

pub type CurveFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

struct Derivatives {
    value: CurveFn,
    first: Option<CurveFn>,
    second: Option<CurveFn>,
}

/// True curves of a data model: density `f`, regression `R`, conditional variance `σ²`,
/// with caller-supplied analytic derivatives.
///
/// Built through [`CurveModelBuilder`]; registration checks every supplied
/// derivative against central finite differences.
pub struct CurveModel {
    f: Derivatives,
    r: Option<Derivatives>,
    sigma2: Option<CurveFn>,
}

impl fmt::Debug for CurveModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveModel")
            .field("f1", &self.f.first.is_some())
            .field("f2", &self.f.second.is_some())
            .field("regression", &self.r.is_some())
            .field("r1", &self.r.as_ref().is_some_and(|r| r.first.is_some()))
            .field("r2", &self.r.as_ref().is_some_and(|r| r.second.is_some()))
            .field("sigma2", &self.sigma2.is_some())
            .finish()
    }
}

/// Probe points for the derivative consistency check.
const PROBE: [f64; 10] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];
const PROBE_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;

pub struct CurveModelBuilder {
    f: Derivatives,
    r: Option<Derivatives>,
    sigma2: Option<CurveFn>,
}

impl CurveModelBuilder {
    pub fn density_derivatives(
        mut self,
        f1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.f.first = Some(Box::new(f1));
        self.f.second = Some(Box::new(f2));
        self
    }

    pub fn regression(mut self, r: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.r = Some(Derivatives {
            value: Box::new(r),
            first: None,
            second: None,
        });
        self
    }

    /// Requires [`regression`](Self::regression) to have been set first.
    pub fn regression_derivatives(
        mut self,
        r1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        if let Some(r) = self.r.as_mut() {
            r.first = Some(Box::new(r1));
            r.second = Some(Box::new(r2));
        }
        self
    }

    pub fn conditional_variance(mut self, s2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sigma2 = Some(Box::new(s2));
        self
    }

    pub fn register(self) -> Result<CurveModel> {
        check_derivatives(&self.f, "f1", "f2")?;
        if let Some(r) = &self.r {
            check_derivatives(r, "r1", "r2")?;
        }
        Ok(CurveModel {
            f: self.f,
            r: self.r,
            sigma2: self.sigma2,
        })
    }
}

fn check_one(field: &'static str, base: &CurveFn, deriv: &CurveFn) -> Result<()> {
    for &x in &PROBE {
        let numeric = (base(x + FD_STEP) - base(x - FD_STEP)) / (2.0 * FD_STEP);
        let analytic = deriv(x);
        if !((numeric - analytic).abs() <= PROBE_TOL * analytic.abs().max(1.0)) {
            return Err(Error::Derivative {
                field,
                x,
                analytic,
                numeric,
            });
        }
    }
    Ok(())
}

fn check_derivatives(d: &Derivatives, first: &'static str, second: &'static str) -> Result<()> {
    if let Some(d1) = &d.first {
        check_one(first, &d.value, d1)?;
        if let Some(d2) = &d.second {
            check_one(second, d1, d2)?;
        }
    }
    Ok(())
}

impl CurveModel {
    pub fn builder(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> CurveModelBuilder {
        CurveModelBuilder {
            f: Derivatives {
                value: Box::new(f),
                first: None,
                second: None,
            },
            r: None,
            sigma2: None,
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f.value)(x)
    }

    pub fn regression(&self, x: f64) -> Option<f64> {
        self.r.as_ref().map(|r| (r.value)(x))
    }

    pub fn sigma2(&self, x: f64) -> Option<f64> {
        self.sigma2.as_ref().map(|s| s(x))
    }

    pub fn has_regression(&self) -> bool {
        self.r.is_some()
    }

    fn f_derivs(&self) -> Result<(&CurveFn, &CurveFn)> {
        match (&self.f.first, &self.f.second) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Contract("model lacks density derivatives")),
        }
    }

    fn r_derivs(&self) -> Result<(&CurveFn, &CurveFn)> {
        match self.r.as_ref().map(|r| (&r.first, &r.second)) {
            Some((Some(a), Some(b))) => Ok((a, b)),
            _ => Err(Error::Contract("model lacks regression derivatives")),
        }
    }
}

/// Leading density bias `(2 f'(x) + x f''(x)) / 2 · h`.
pub fn density_bias(model: &CurveModel, x: f64, h: f64) -> Result<f64> {
    let (f1, f2) = model.f_derivs()?;
    Ok((2.0 * f1(x) + x * f2(x)) / 2.0 * h)
}

/// Leading regression bias: `b(x) h / f(x)` with `b = R' f + (x/2) R'' f + x R' f'`
/// for `x > 0`, and `R'(0) h` at the boundary.
pub fn regression_bias(model: &CurveModel, x: f64, h: f64) -> Result<f64> {
    let (r1, r2) = model.r_derivs()?;
    let f = model.f(x);
    if !(f > 0.0) {
        return Err(domain("regression_bias", f, "f(x) > 0"));
    }
    if x == 0.0 {
        return Ok(r1(0.0) * h);
    }
    let (f1, _) = model.f_derivs()?;
    let b = r1(x) * f + 0.5 * x * r2(x) * f + x * r1(x) * f1(x);
    Ok(b * h / f)
}

/// `f(x) / (2√(πx))` for `x > 0`, `f(0) / 2` at the boundary.
pub fn density_clt_variance(model: &CurveModel, x: f64) -> Result<f64> {
    let f = model.f(x);
    if !(f > 0.0) {
        return Err(domain("density_clt_variance", f, "f(x) > 0"));
    }
    if x == 0.0 {
        Ok(f / 2.0)
    } else {
        Ok(f / (2.0 * libm::sqrt(PI * x)))
    }
}

/// `σ²(x) / (2√(πx) f(x))` for `x > 0`, `σ²(0) / (2 f(0))` at the boundary.
pub fn regression_clt_variance(model: &CurveModel, x: f64) -> Result<f64> {
    let s2 = model
        .sigma2(x)
        .ok_or(Error::Contract("model lacks a conditional variance"))?;
    let f = model.f(x);
    if !(f > 0.0) {
        return Err(domain("regression_clt_variance", f, "f(x) > 0"));
    }
    if x == 0.0 {
        Ok(s2 / (2.0 * f))
    } else {
        Ok(s2 / (2.0 * libm::sqrt(PI * x) * f))
    }
}

/// `√(n√h)(estimate - truth)/√variance`, or `√(nh)(...)` at the boundary.
pub fn standardize(
    estimate: f64,
    truth: f64,
    variance: f64,
    n: u64,
    h: f64,
    boundary: bool,
) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(domain("standardize", variance, "variance > 0"));
    }
    let n = n as f64;
    let rate = if boundary {
        libm::sqrt(n * h)
    } else {
        libm::sqrt(n * libm::sqrt(h))
    };
    Ok(rate * (estimate - truth) / libm::sqrt(variance))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model() -> CurveModel {
        CurveModel::builder(|x| libm::exp(-x))
            .density_derivatives(|x| -libm::exp(-x), |x| libm::exp(-x))
            .regression(|x| x / (1.0 + x))
            .regression_derivatives(
                |x| 1.0 / ((1.0 + x) * (1.0 + x)),
                |x| -2.0 / libm::pow(1.0 + x, 3.0),
            )
            .conditional_variance(|_| 0.25)
            .register()
            .unwrap()
    }

    #[test]
    fn bandwidth_values() {
        let s = BandwidthSchedule::new(1.0, 0.45).unwrap();
        assert!((bandwidth(s, 10_000).unwrap() - 0.015_848_931_924_611_135).abs() < 1e-15);
        assert_eq!(
            bandwidth(BandwidthSchedule::new(1.0, 0.3).unwrap(), 1).unwrap(),
            1.0
        );
        assert_eq!(
            bandwidth(BandwidthSchedule::new(2.0, 0.5).unwrap(), 4).unwrap(),
            1.0
        );
        assert!(BandwidthSchedule::new(1.0, 1.0).is_err());
        assert!(BandwidthSchedule::new(0.0, 0.5).is_err());
        assert!(bandwidth(s, 0).is_err());
    }

    #[test]
    fn density_bias_values() {
        let m = exp_model();
        assert!(density_bias(&m, 2.0, 0.3).unwrap().abs() < 1e-17);
        let v = density_bias(&m, 1.0, 0.01).unwrap();
        assert!((v + 0.001_839_397_205_857_211_6).abs() < 1e-15);
        assert!((density_bias(&m, 0.0, 0.01).unwrap() + 0.01).abs() < 1e-16);
    }

    #[test]
    fn density_bias_sign_change_at_two() {
        for i in 1..100 {
            let x = 0.05 * i as f64;
            let b = density_bias(&exp_model(), x, 0.01).unwrap();
            if x < 2.0 - 1e-9 {
                assert!(b < 0.0, "x={x}");
            } else if x > 2.0 + 1e-9 {
                assert!(b > 0.0, "x={x}");
            }
        }
    }

    #[test]
    fn regression_bias_values() {
        let constant = CurveModel::builder(|x| libm::exp(-x))
            .density_derivatives(|x| -libm::exp(-x), |x| libm::exp(-x))
            .regression(|_| 2.0)
            .regression_derivatives(|_| 0.0, |_| 0.0)
            .register()
            .unwrap();
        for x in [0.0, 0.5, 3.0] {
            assert_eq!(regression_bias(&constant, x, 0.1).unwrap(), 0.0);
        }
        let linear0 = CurveModel::builder(|x| libm::exp(-x))
            .density_derivatives(|x| -libm::exp(-x), |x| libm::exp(-x))
            .regression(|x| 0.5 * x)
            .regression_derivatives(|_| 0.5, |_| 0.0)
            .register()
            .unwrap();
        assert!((regression_bias(&linear0, 0.0, 0.02).unwrap() - 0.01).abs() < 1e-17);
        // b(1)/f(1) = R'(1) + R''(1)/2 + R'(1) f'(1)/f(1) = 1/4 - 1/8 - 1/4
        let v = regression_bias(&exp_model(), 1.0, 0.01).unwrap();
        assert!((v + 0.001_25).abs() < 1e-15);
    }

    #[test]
    fn variance_values() {
        let m = exp_model();
        assert!((density_clt_variance(&m, 1.0).unwrap() - 0.103_776_874_355_148_68).abs() < 1e-15);
        assert!((density_clt_variance(&m, 0.0).unwrap() - 0.5).abs() < 1e-16);
        assert!(
            (regression_clt_variance(&m, 1.0).unwrap() - 0.191_703_286_595_467_78).abs() < 1e-14
        );
        assert!((regression_clt_variance(&m, 0.0).unwrap() - 0.125).abs() < 1e-16);
        let noiseless = CurveModel::builder(|x| libm::exp(-x))
            .conditional_variance(|_| 0.0)
            .register()
            .unwrap();
        assert_eq!(regression_clt_variance(&noiseless, 1.0).unwrap(), 0.0);
        let scaled = CurveModel::builder(|x| 3.0 * libm::exp(-x))
            .register()
            .unwrap();
        let ratio =
            density_clt_variance(&scaled, 0.7).unwrap() / density_clt_variance(&m, 0.7).unwrap();
        assert!((ratio - 3.0).abs() < 1e-14);
    }

    #[test]
    fn variance_decreasing_in_x() {
        let m = exp_model();
        let mut last = f64::INFINITY;
        for i in 0..=490 {
            let x = 0.1 + 0.01 * i as f64;
            let v = density_clt_variance(&m, x).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn domain_errors() {
        let zero = CurveModel::builder(|_| 0.0)
            .conditional_variance(|_| 1.0)
            .register()
            .unwrap();
        assert!(density_clt_variance(&zero, 1.0).is_err());
        assert!(regression_clt_variance(&zero, 1.0).is_err());
        let bare = CurveModel::builder(|x| libm::exp(-x)).register().unwrap();
        assert!(density_bias(&bare, 1.0, 0.1).is_err());
        assert!(regression_bias(&bare, 1.0, 0.1).is_err());
        assert!(regression_clt_variance(&bare, 1.0).is_err());
        assert!(standardize(1.0, 0.0, 0.0, 10, 0.1, false).is_err());
    }

    #[test]
    fn standardize_values() {
        assert_eq!(standardize(0.3, 0.3, 2.0, 100, 0.1, false).unwrap(), 0.0);
        let z = standardize(0.01, 0.0, 1.0, 10_000, 0.01, false).unwrap();
        assert!((z - 0.316_227_766_016_837_94).abs() < 1e-15);
        let z = standardize(0.01, 0.0, 1.0, 10_000, 0.01, true).unwrap();
        assert!((z - 0.1).abs() < 1e-15);
    }

    #[test]
    fn registration_rejects_bad_derivatives() {
        let err = CurveModel::builder(|x| libm::exp(-x))
            .density_derivatives(|x| libm::exp(-x), |x| libm::exp(-x))
            .register()
            .unwrap_err();
        assert!(matches!(err, Error::Derivative { field: "f1", .. }));
        let err = CurveModel::builder(|x| x * x)
            .density_derivatives(|x| 2.0 * x, |_| 2.0 + 1e-3)
            .register()
            .unwrap_err();
        assert!(matches!(err, Error::Derivative { field: "f2", .. }));
    }
}
