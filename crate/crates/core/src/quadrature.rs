//! Globally adaptive 15-point Gauss–Kronrod quadrature for vector-valued
//! integrands on piecewise-smooth intervals.
//!
//! Callers pass the interval as a sorted list of breakpoints; every piece
//! starts as its own panel, so a discontinuity placed on a breakpoint never
//! lies inside a panel. The panel with the largest error estimate is bisected
//! until the summed estimate meets the tolerance.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Absolute tolerance used for every spatial integral of the corridor model ($/day).
pub const DEFAULT_ABS_TOL: f64 = 1e-8;

const MAX_PANELS: usize = 4096;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral estimate with its error bound and the number of panels used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy)]
struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
}

fn gauss_kronrod<const N: usize, F>(f: &F, lo: f64, hi: f64) -> Panel<N>
where
    F: Fn(f64) -> [f64; N],
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    for i in 0..N {
        kronrod[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for (j, (&x, &wk)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for i in 0..N {
            let sum = f1[i] + f2[i];
            kronrod[i] += wk * sum;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * sum;
            }
        }
    }
    let mut error: f64 = 0.0;
    let mut value = [0.0; N];
    for i in 0..N {
        value[i] = kronrod[i] * half;
        error = error.max(((kronrod[i] - gauss[i]) * half).abs());
    }
    Panel {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`, never letting a
/// panel straddle an interior breakpoint.
///
/// The error estimate is the maximum over components. Convergence is declared
/// when the summed estimate falls below `abs_tol`, or below the level of
/// floating-point roundoff for the magnitude of the result.
pub fn integrate<const N: usize, F>(f: F, breakpoints: &[f64], abs_tol: f64) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    if breakpoints.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "breakpoints",
            reason: "need at least the two interval ends",
        });
    }
    if breakpoints.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParameter {
            name: "breakpoints",
            reason: "must be finite and nondecreasing",
        });
    }
    let lo = breakpoints[0];
    let hi = breakpoints[breakpoints.len() - 1];
    let mut panels: Vec<Panel<N>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();
    if panels.is_empty() {
        return Ok(Estimate {
            value: [0.0; N],
            error: 0.0,
            panels: 0,
        });
    }
    let span = hi - lo;
    loop {
        let mut value = [0.0; N];
        let mut error = 0.0;
        let mut worst = 0;
        for (idx, p) in panels.iter().enumerate() {
            for (v, pv) in value.iter_mut().zip(&p.value) {
                *v += pv;
            }
            error += p.error;
            if p.error > panels[worst].error {
                worst = idx;
            }
        }
        let magnitude = value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tolerance = abs_tol.max(64.0 * f64::EPSILON * magnitude);
        if error <= tolerance {
            return Ok(Estimate {
                value,
                error,
                panels: panels.len(),
            });
        }
        let p = panels[worst];
        if panels.len() >= MAX_PANELS || (p.hi - p.lo) <= 1e-12 * span {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: error,
                tolerance,
                panels: panels.len(),
            });
        }
        let mid = 0.5 * (p.lo + p.hi);
        panels[worst] = gauss_kronrod(&f, p.lo, mid);
        panels.push(gauss_kronrod(&f, mid, p.hi));
    }
}

/// Scalar convenience wrapper over [`integrate`]; returns `(value, error)`.
pub fn integrate_scalar<F>(f: F, breakpoints: &[f64], abs_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let est = integrate(|x| [f(x)], breakpoints, abs_tol)?;
    Ok((est.value[0], est.error))
}
