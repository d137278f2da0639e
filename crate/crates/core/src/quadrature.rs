//! Globally adaptive Gauss–Kronrod (10/21) integration on finite intervals.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_534_417,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-8,
            absolute: 1e-15,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the given partition.
///
/// `breaks` must be non-decreasing with at least two entries; zero-width pieces are skipped.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<Integral> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Contract(
            "integration breakpoints must be sorted and finite",
        ));
    }
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk21(&f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                residual: error,
            });
        }
        if error <= tol.absolute.max(tol.relative * value.abs()) {
            return Ok(Integral { value, error });
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                estimate: value,
                residual: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|l, r| l.1.error.total_cmp(&r.1.error))
            .expect("non-empty");
        let s = segments[worst];
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            // interval exhausted at machine precision
            return Err(Error::Quadrature {
                estimate: value,
                residual: error,
            });
        }
        segments[worst] = gk21(&f, s.a, mid);
        segments.push(gk21(&f, mid, s.b));
    }
}
