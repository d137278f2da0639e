//! The gamma kernel and its analytic companions.
//!
//! For a target point `x ≥ 0` and bandwidth `h > 0` the kernel is the
//! Gamma(`x/h + 1`, `h`) density. Every evaluation is done in log-space,
//! centred on the mode `x`:
//!
//! ```text
//! ln K(y) = ln S(x/h) - ½ ln(2π x h) + (x/h) (ln(y/x) - y/x + 1)
//! ```
//!
//! which is the textbook `(α-1) ln y - y/β - ln Γ(α) - α ln β` with the
//! Stirling ratio `S` absorbing `ln Γ`. The rearrangement stays accurate for
//! `x/h` in the millions, where the direct form loses most of its digits.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::specfun::ln_stirling_ratio;

/// Target point and bandwidth; induces shape `x/h + 1` and scale `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    x: f64,
    h: f64,
}

impl KernelParams {
    pub fn new(x: f64, h: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(domain("kernel", x, "target point x >= 0"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(domain("kernel", h, "bandwidth h > 0"));
        }
        Ok(Self { x, h })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> f64 {
        self.x / self.h + 1.0
    }

    pub fn scale(&self) -> f64 {
        self.h
    }
}

/// A gamma law with shape `z + 1` and scale `θ`, so that its mode is `z θ`.
///
/// Constants are precomputed so repeated evaluation costs one `log1p` and one `exp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    z: f64,
    scale: f64,
    mode: f64,
    log_norm: f64,
}

impl GammaLaw {
    /// Gamma law with shape `z + 1` and scale `scale`.
    pub fn new(z: f64, scale: f64) -> Result<Self> {
        if !(z >= 0.0) || !z.is_finite() {
            return Err(domain("gamma_law", z, "shape - 1 >= 0"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain("gamma_law", scale, "scale > 0"));
        }
        let mode = z * scale;
        let log_norm = if z == 0.0 {
            -libm::log(scale)
        } else {
            ln_stirling_ratio(z)? - 0.5 * libm::log(2.0 * PI * mode * scale)
        };
        Ok(Self {
            z,
            scale,
            mode,
            log_norm,
        })
    }

    pub fn shape(&self) -> f64 {
        self.z + 1.0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.shape()) * self.scale
    }

    /// Log-density; `-∞` outside the support.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y < 0.0 || y.is_nan() {
            return f64::NEG_INFINITY;
        }
        if self.z == 0.0 {
            return self.log_norm - y / self.scale;
        }
        if y == 0.0 {
            return f64::NEG_INFINITY;
        }
        let d = (y - self.mode) / self.mode;
        self.log_norm + self.z * (libm::log1p(d) - d)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if self.z == 0.0 && y >= 0.0 {
            return libm::exp(-y / self.scale) / self.scale;
        }
        libm::exp(self.ln_pdf(y))
    }

    /// Value at the mode, the supremum of the density.
    pub fn peak(&self) -> f64 {
        libm::exp(self.log_norm)
    }

    /// Integration window `[0, mode + 40 sd]` with breakpoints clustered around the mode.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let sd = self.std_dev();
        let upper = self.mode + 40.0 * sd;
        let mut breaks = Vec::with_capacity(10);
        breaks.push(0.0);
        for k in [-32.0, -8.0, -2.0, 0.0, 2.0, 8.0, 32.0] {
            let b = self.mode + k * sd;
            if b > 0.0 && b < upper {
                breaks.push(b);
            }
        }
        breaks.push(upper);
        breaks
    }
}

/// The kernel `K_{x/h+1, h}` with its constants cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaKernel {
    params: KernelParams,
    law: GammaLaw,
}

impl GammaKernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        let law = GammaLaw::new(params.x / params.h, params.h)?;
        Ok(Self { params, law })
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn law(&self) -> &GammaLaw {
        &self.law
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.law.pdf(y)
    }

    #[inline]
    pub fn ln_eval(&self, y: f64) -> f64 {
        self.law.ln_pdf(y)
    }
}

/// Evaluates the kernel at `y`; zero for `y < 0`, `1/h` at `y = 0` when `x = 0`.
pub fn kernel_eval(params: KernelParams, y: f64) -> Result<f64> {
    Ok(GammaKernel::new(params)?.eval(y))
}

/// Supremum of the kernel over `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupBound {
    /// `x > 0`: density value at the mode `y = x`, equal to `S(x/h) / √(2π x h)`.
    Mode(f64),
    /// `x = 0`: the exponential density peaks at the origin with value `1/h`.
    Boundary(f64),
}

impl SupBound {
    pub fn value(self) -> f64 {
        match self {
            SupBound::Mode(v) | SupBound::Boundary(v) => v,
        }
    }
}

pub fn kernel_sup_bound(params: KernelParams) -> Result<SupBound> {
    if params.x == 0.0 {
        return Ok(SupBound::Boundary(1.0 / params.h));
    }
    Ok(SupBound::Mode(GammaKernel::new(params)?.law.peak()))
}

/// `G_{(p,n,x)}`: Gamma(`p x / h + 1`, `h / p`), whose mode is again `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRef {
    pub p: f64,
    pub x: f64,
    pub h: f64,
}

impl GammaRef {
    pub fn law(&self) -> Result<GammaLaw> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(domain("gamma_ref", self.p, "p > 0"));
        }
        let params = KernelParams::new(self.x, self.h)?;
        GammaLaw::new(self.p * params.x / params.h, params.h / self.p)
    }
}

/// Normalizing constant `B(p, n, x) = Γ(px/h+1) / (Γ(x/h+1)^p p^{px/h+1} h^{p-1})`.
///
/// Evaluated through `S^p(x/h) / (S(px/h) (2π x h)^{(p-1)/2} √p)` for `x > 0`,
/// which never forms a gamma function of a large argument.
pub fn b_constant(p: f64, x: f64, h: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(domain("b_constant", p, "p >= 1"));
    }
    let params = KernelParams::new(x, h)?;
    if params.x == 0.0 {
        // Γ(1) / (p h^{p-1})
        return Ok(1.0 / (p * libm::pow(h, p - 1.0)));
    }
    let z = x / h;
    let ln_b = p * ln_stirling_ratio(z)?
        - ln_stirling_ratio(p * z)?
        - 0.5 * (p - 1.0) * libm::log(2.0 * PI * x * h)
        - 0.5 * libm::log(p);
    Ok(libm::exp(ln_b))
}

/// `E[fn(G)]` for `G ~ G_{(p,n,x)}` by adaptive quadrature, relative tolerance 1e-8.
pub fn gamma_expectation<F: Fn(f64) -> f64>(gref: GammaRef, f: F) -> Result<f64> {
    let law = gref.law()?;
    let integral = integrate(
        |y| f(y) * law.pdf(y),
        &law.breakpoints(),
        Tolerance::default(),
    )?;
    Ok(integral.value)
}

/// Both sides of `E(φ(T) K^p(T)) = B(p,n,x) E(φ(G_p) g(G_p))` for `T` with density `g`.
///
/// The left side integrates `φ K^p g` directly; the right side goes through
/// [`b_constant`] and [`gamma_expectation`].
pub fn moment_identity_check<P, G>(p: f64, x: f64, h: f64, phi: P, g: G) -> Result<(f64, f64)>
where
    P: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let b = b_constant(p, x, h)?;
    let kernel = GammaKernel::new(KernelParams::new(x, h)?)?;
    let lhs = integrate(
        |y| {
            let v = phi(y);
            if v == 0.0 {
                return 0.0;
            }
            v * libm::exp(p * kernel.ln_eval(y)) * g(y)
        },
        &kernel.law.breakpoints(),
        Tolerance::default(),
    )?
    .value;
    let rhs = b * gamma_expectation(GammaRef { p, x, h }, |y| phi(y) * g(y))?;
    Ok((lhs, rhs))
}

/// `max_y |K_{x}(y) - K_{u}(y)|` over the supplied points, at a common bandwidth.
pub fn lipschitz_modulus(x: f64, u: f64, h: f64, y_grid: &[f64]) -> Result<f64> {
    if y_grid.is_empty() {
        return Err(Error::Contract(
            "lipschitz_modulus needs a non-empty y grid",
        ));
    }
    if !(x > 0.0 && u > 0.0) {
        return Err(domain(
            "lipschitz_modulus",
            x.min(u),
            "points inside a compact [a, b] with a > 0",
        ));
    }
    let kx = GammaKernel::new(KernelParams::new(x, h)?)?;
    let ku = GammaKernel::new(KernelParams::new(u, h)?)?;
    Ok(y_grid
        .iter()
        .map(|&y| (kx.eval(y) - ku.eval(y)).abs())
        .fold(0.0, f64::max))
}
