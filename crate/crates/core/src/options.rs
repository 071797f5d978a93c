//! Entry and exit thresholds for switching between fare-based and fare-free
//! operation when demand follows a GBM.
//!
//! Value of the fare-based state: `V0(Q) = Y0 Q^g1`. Value of the fare-free
//! state: `V1(Q) = X1 Q^g0 + nu0 Q + nu1`. The upper threshold `Q_hi` (pay `D`
//! to go fare-free) and the lower threshold `Q_lo` (pay `K` to return) solve
//! value matching and smooth pasting at both points.
//!
//! A value-iteration solver of the same two-state switching problem on a
//! log-demand grid serves as an independent cross-check.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demand::GbmParams;
use crate::error::{domain, invalid};
use crate::welfare::GainCoefficients;
use crate::{normal_cdf, Error, Result};

/// Roots of `sigma^2/2 g(g-1) + eta g - k = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    /// `gamma_1 > 1`.
    pub positive: f64,
    /// `gamma_0 < 0`.
    pub negative: f64,
}

impl RootPair {
    /// Value of the characteristic quadratic at `g`.
    pub fn quadratic(gbm: &GbmParams, g: f64) -> f64 {
        0.5 * gbm.volatility * gbm.volatility * g * (g - 1.0) + gbm.growth * g - gbm.discount
    }
}

/// Characteristic roots. The root without cancellation is computed directly
/// and the other from the product `g0 g1 = -2k / sigma^2`.
pub fn characteristic_roots(gbm: &GbmParams) -> Result<RootPair> {
    let s2 = gbm.volatility * gbm.volatility;
    if !(gbm.volatility > 0.0 && gbm.volatility.is_finite()) {
        return Err(domain("sigma", gbm.volatility, "sigma > 0"));
    }
    if !(gbm.discount > 0.0) {
        return Err(domain("k", gbm.discount, "k > 0"));
    }
    if !(gbm.discount > gbm.growth) {
        return Err(invalid("k", "discount rate must exceed the growth rate"));
    }
    let a = 0.5 - gbm.growth / s2;
    let product = -2.0 * gbm.discount / s2;
    let disc = libm::sqrt(a * a - product);
    let (positive, negative) = if a >= 0.0 {
        let p = a + disc;
        (p, product / p)
    } else {
        let n = a - disc;
        (product / n, n)
    };
    Ok(RootPair { positive, negative })
}

/// Gain perpetuities, demand dynamics and the two switching costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingInputs {
    pub gain: GainCoefficients,
    pub gbm: GbmParams,
    /// `D`, paid when switching to fare-free ($).
    pub activation_cost: f64,
    /// `K`, paid when switching back to fare-based ($).
    pub deactivation_cost: f64,
}

impl SwitchingInputs {
    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        if !(self.gbm.discount > self.gbm.growth) {
            return Err(invalid("k", "discount rate must exceed the growth rate"));
        }
        for (name, v) in [("D", self.activation_cost), ("K", self.deactivation_cost)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(name, v, "finite and >= 0"));
            }
        }
        if !(self.gain.nu_0 > 0.0) {
            return Err(Error::Structural(
                "gain must increase with demand (nu_0 > 0)",
            ));
        }
        Ok(())
    }

    /// Flows of the two modes relative to fare-based operation.
    pub fn flows(&self) -> [AffineFlow; 2] {
        [
            AffineFlow {
                slope: 0.0,
                intercept: 0.0,
            },
            AffineFlow {
                slope: self.gain.delta_q,
                intercept: self.gain.delta_c,
            },
        ]
    }
}

/// How [`solve_thresholds`] reached its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// No switching cost: both thresholds equal the single threshold.
    ZeroCost,
    Newton,
    /// Newton after a perturbed restart.
    Restart(usize),
    /// Newton along a path of switching costs from an exact solution.
    Continuation,
}

/// Thresholds and value-function constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingSolution {
    /// Switch to fare-free once demand reaches this level.
    pub upper: f64,
    /// Switch back to fare-based once demand falls to this level.
    pub lower: f64,
    /// `Y0` of `V0(Q) = Y0 Q^g1`.
    pub y0: f64,
    /// `X1` of `V1(Q) = X1 Q^g0 + nu0 Q + nu1`.
    pub x1: f64,
    /// Threshold without switching costs.
    pub single_threshold: f64,
    /// Largest value-matching or smooth-pasting residual, in dollars
    /// (pasting rows multiplied by the threshold), over `max(1, D, K)`.
    pub residual_norm: f64,
    pub roots: RootPair,
    pub iterations: usize,
    pub method: SolveMethod,
}

/// `(V0(Q), V1(Q))`.
pub fn value_functions(
    solution: &SwitchingSolution,
    inputs: &SwitchingInputs,
    q: f64,
) -> Result<(f64, f64)> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain("Q", q, "Q > 0"));
    }
    let r = solution.roots;
    let v0 = solution.y0 * libm::pow(q, r.positive);
    let v1 = solution.x1 * libm::pow(q, r.negative) + inputs.gain.nu_0 * q + inputs.gain.nu_1;
    Ok((v0, v1))
}

/// `Q* = g0 g1 nu1 / ((1 - g0)(g1 - 1) nu0)`.
pub fn single_threshold(inputs: &SwitchingInputs) -> Result<f64> {
    inputs.validate()?;
    let r = characteristic_roots(&inputs.gbm)?;
    threshold_from_roots(&r, &inputs.gain)
}

fn threshold_from_roots(r: &RootPair, gain: &GainCoefficients) -> Result<f64> {
    let g0 = r.negative;
    let g1 = r.positive;
    let q = g0 * g1 * gain.nu_1 / ((1.0 - g0) * (g1 - 1.0) * gain.nu_0);
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Structural(
            "gain intercept must be negative for an interior switch point",
        ));
    }
    Ok(q)
}

// The system in units of Q* for demand and |nu1| for value. With z = Q/Q*,
// the value gap is f(z) = x z^g0 + m z - 1 - y z^g1 and the conditions are
// f(a) = d, a f'(a) = 0, f(b) = -kappa, b f'(b) = 0.
struct Scaled {
    g0: f64,
    g1: f64,
    m: f64,
    d: f64,
    kappa: f64,
}

// Unknowns: (ln a, ln b, y, x).
type State = [f64; 4];

const ACCEPT: f64 = 1e-9;
const MAX_NEWTON: usize = 100;
const RESTARTS: usize = 5;

impl Scaled {
    fn residual(&self, u: &State) -> Vector4<f64> {
        let (a, b) = (libm::exp(u[0]), libm::exp(u[1]));
        let (y, x) = (u[2], u[3]);
        let (a0, a1) = (libm::pow(a, self.g0), libm::pow(a, self.g1));
        let (b0, b1) = (libm::pow(b, self.g0), libm::pow(b, self.g1));
        Vector4::new(
            x * a0 + self.m * a - 1.0 - y * a1 - self.d,
            self.g0 * x * a0 + self.m * a - self.g1 * y * a1,
            y * b1 - x * b0 - self.m * b + 1.0 - self.kappa,
            self.g1 * y * b1 - self.g0 * x * b0 - self.m * b,
        )
    }

    fn jacobian(&self, u: &State) -> Matrix4<f64> {
        let (a, b) = (libm::exp(u[0]), libm::exp(u[1]));
        let (y, x) = (u[2], u[3]);
        let (g0, g1, m) = (self.g0, self.g1, self.m);
        let (a0, a1) = (libm::pow(a, g0), libm::pow(a, g1));
        let (b0, b1) = (libm::pow(b, g0), libm::pow(b, g1));
        Matrix4::new(
            g0 * x * a0 + m * a - g1 * y * a1,
            0.0,
            -a1,
            a0,
            g0 * g0 * x * a0 + m * a - g1 * g1 * y * a1,
            0.0,
            -g1 * a1,
            g0 * a0,
            0.0,
            g1 * y * b1 - g0 * x * b0 - m * b,
            b1,
            -b0,
            0.0,
            g1 * g1 * y * b1 - g0 * g0 * x * b0 - m * b,
            g1 * b1,
            -g0 * b0,
        )
    }

    // Constants making both pasting rows vanish at the given thresholds.
    fn pasting_constants(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let (g0, g1, m) = (self.g0, self.g1, self.m);
        let mat = Matrix2::new(
            -g1 * libm::pow(a, g1),
            g0 * libm::pow(a, g0),
            g1 * libm::pow(b, g1),
            -g0 * libm::pow(b, g0),
        );
        let sol = mat.lu().solve(&Vector2::new(-m * a, m * b))?;
        Some((sol[0], sol[1]))
    }

    fn gap(&self, z: f64, y: f64, x: f64) -> f64 {
        x * libm::pow(z, self.g0) + self.m * z - 1.0 - y * libm::pow(z, self.g1)
    }

    fn newton(&self, start: State) -> (State, f64, usize) {
        let norm = |r: &Vector4<f64>| r.amax();
        let mut u = start;
        let mut r = self.residual(&u);
        let mut best = norm(&r);
        let mut iterations = 0;
        while iterations < MAX_NEWTON && best > 1e-15 {
            iterations += 1;
            let Some(step) = self.jacobian(&u).lu().solve(&(-r)) else {
                break;
            };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let trial = [
                    u[0] + lambda * step[0],
                    u[1] + lambda * step[1],
                    u[2] + lambda * step[2],
                    u[3] + lambda * step[3],
                ];
                let tr = self.residual(&trial);
                let n = norm(&tr);
                if n.is_finite() && n < best {
                    u = trial;
                    r = tr;
                    best = n;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (u, best, iterations)
    }

    fn admissible(&self, u: &State) -> bool {
        u[0] > 0.0 && u[1] < 0.0 && u.iter().all(|v| v.is_finite())
    }

    fn guess(&self, spread: f64) -> Option<State> {
        let (a, b) = (spread, 1.0 / spread);
        let (y, x) = self.pasting_constants(a, b)?;
        Some([libm::log(a), libm::log(b), y, x])
    }
}

/// Solves value matching and smooth pasting at both thresholds by damped
/// Newton on log thresholds. Falls back to perturbed restarts and then to
/// continuation in the switching costs.
pub fn solve_thresholds(inputs: &SwitchingInputs) -> Result<SwitchingSolution> {
    inputs.validate()?;
    let roots = characteristic_roots(&inputs.gbm)?;
    let q_star = threshold_from_roots(&roots, &inputs.gain)?;
    let (g0, g1) = (roots.negative, roots.positive);
    let value_scale = -inputs.gain.nu_1;
    let (cost_d, cost_k) = (inputs.activation_cost, inputs.deactivation_cost);
    let cost_scale = 1f64.max(cost_d).max(cost_k);
    let m = inputs.gain.nu_0 * q_star / value_scale;

    let finish = |u: State, resid: f64, iterations: usize, method: SolveMethod| {
        let (a, b) = (libm::exp(u[0]), libm::exp(u[1]));
        SwitchingSolution {
            upper: a * q_star,
            lower: b * q_star,
            y0: u[2] * value_scale / libm::pow(q_star, g1),
            x1: u[3] * value_scale / libm::pow(q_star, g0),
            single_threshold: q_star,
            residual_norm: resid * value_scale / cost_scale,
            roots,
            iterations,
            method,
        }
    };

    if cost_d == 0.0 && cost_k == 0.0 {
        // Both thresholds collapse onto Q*; pasting at z = 1 fixes y and x.
        let y = (m + g0 * (1.0 - m)) / (g1 - g0);
        let x = y + 1.0 - m;
        return Ok(finish([0.0, 0.0, y, x], 0.0, 0, SolveMethod::ZeroCost));
    }
    if cost_d == 0.0 || cost_k == 0.0 {
        return Err(invalid(
            "switching costs",
            "D and K must both be positive or both zero",
        ));
    }

    // Staying fare-free forever at vanishing demand is worth nu1; exiting is
    // worth -K. Without nu1 < -K no demand level justifies switching back.
    if cost_k >= value_scale {
        return Err(Error::Structural(
            "switching back costs more than the perpetual fare-free loss",
        ));
    }

    let target = Scaled {
        g0,
        g1,
        m,
        d: cost_d / value_scale,
        kappa: cost_k / value_scale,
    };
    let accept =
        |u: &State, resid: f64| target.admissible(u) && resid * value_scale / cost_scale <= ACCEPT;

    let mut total_iterations = 0;
    if let Some(start) = target.guess(1.5) {
        let (u, resid, it) = target.newton(start);
        total_iterations += it;
        if accept(&u, resid) {
            return Ok(finish(u, resid, total_iterations, SolveMethod::Newton));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for attempt in 1..=RESTARTS {
            let ln_a = start[0] * libm::exp(rng.random_range(-1.0..1.0));
            let ln_b = start[1] * libm::exp(rng.random_range(-1.0..1.0));
            let Some((y, x)) = target.pasting_constants(libm::exp(ln_a), libm::exp(ln_b)) else {
                continue;
            };
            let (u, resid, it) = target.newton([ln_a, ln_b, y, x]);
            total_iterations += it;
            if accept(&u, resid) {
                return Ok(finish(
                    u,
                    resid,
                    total_iterations,
                    SolveMethod::Restart(attempt),
                ));
            }
        }
    }

    // A guess with both pasting rows satisfied solves the problem exactly
    // for the costs it implies; walk those costs to the target in log space.
    let mut last_resid = f64::INFINITY;
    for spread in [1.5, 2.0, 1.2, 3.0, 1.05] {
        let Some(mut u) = target.guess(spread) else {
            continue;
        };
        let d0 = target.gap(libm::exp(u[0]), u[2], u[3]);
        let k0 = -target.gap(libm::exp(u[1]), u[2], u[3]);
        if !(d0 > 0.0 && k0 > 0.0) {
            continue;
        }
        let (ld0, lk0) = (libm::log(d0), libm::log(k0));
        let (ld1, lk1) = (libm::log(target.d), libm::log(target.kappa));
        let mut s: f64 = 0.0;
        let mut ds: f64 = 0.05;
        while s < 1.0 && ds > 1e-7 {
            let next = (s + ds).min(1.0);
            let stage = Scaled {
                d: libm::exp(ld0 + next * (ld1 - ld0)),
                kappa: libm::exp(lk0 + next * (lk1 - lk0)),
                ..target
            };
            let (v, resid, it) = stage.newton(u);
            total_iterations += it;
            let scale = stage.d.max(stage.kappa).max(1.0 / value_scale);
            if stage.admissible(&v) && resid <= 1e-9 * scale {
                u = v;
                s = next;
                ds *= 1.5;
            } else {
                ds *= 0.5;
            }
        }
        if s >= 1.0 {
            let (v, resid, it) = target.newton(u);
            total_iterations += it;
            last_resid = resid;
            if accept(&v, resid) {
                return Ok(finish(
                    v,
                    resid,
                    total_iterations,
                    SolveMethod::Continuation,
                ));
            }
        }
    }
    Err(Error::NoConvergence {
        what: "switching threshold solver",
        iterations: total_iterations,
        residual: last_resid * value_scale / cost_scale,
    })
}

/// Affine flow `slope * Q + intercept` per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFlow {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineFlow {
    pub fn at(&self, q: f64) -> f64 {
        self.slope * q + self.intercept
    }
}

/// Grid and stopping rule of the value-iteration oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpGrid {
    /// Log-spaced demand points.
    pub points: usize,
    /// The grid covers `[Q*/span, Q* span]`.
    pub span: f64,
    /// Decision steps per GBM period.
    pub substeps: usize,
    /// Stop once the sup-norm change is below `tolerance * max(1, D, K)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Transition kernel half-width in standard deviations; the mass beyond
    /// is lumped onto the last cell reached.
    pub kernel_width: f64,
}

impl Default for DpGrid {
    fn default() -> Self {
        Self {
            points: 2000,
            span: 20.0,
            substeps: 1,
            tolerance: 1e-6,
            max_iterations: 200_000,
            kernel_width: 7.0,
        }
    }
}

/// Thresholds read off the value-iteration switch regions.
#[derive(Debug, Clone, PartialEq)]
pub struct DpThresholds {
    pub upper: f64,
    pub lower: f64,
    /// Break-even density the grid is centred on.
    pub centre: f64,
    pub log_step: f64,
    pub iterations: usize,
    pub substeps: usize,
    /// Switching to fare-free happens on an up-set of the grid and switching
    /// back on a down-set.
    pub monotone: bool,
}

struct DpValues {
    fare_based: Vec<f64>,
    fare_free: Vec<f64>,
}

/// Value iteration on the two-mode switching problem with the exact GBM
/// transition kernel over a log-demand grid. In each step the mode is chosen
/// first and the step's flow then accrues at the chosen mode.
pub fn dp_oracle(
    flows: &[AffineFlow; 2],
    gbm: &GbmParams,
    activation_cost: f64,
    deactivation_cost: f64,
    grid: &DpGrid,
) -> Result<DpThresholds> {
    dp_solve(flows, gbm, activation_cost, deactivation_cost, grid, None).map(|(t, _)| t)
}

/// Oracle at `grid.substeps` and four times as many, plus the extrapolation
/// `2 Q(dt/4) - Q(dt)` that removes the leading `sqrt(dt)` bias of the
/// discrete decision dates.
#[derive(Debug, Clone, PartialEq)]
pub struct DpCrossCheck {
    pub coarse: DpThresholds,
    pub fine: DpThresholds,
    pub upper: f64,
    pub lower: f64,
}

pub fn dp_cross_check(
    flows: &[AffineFlow; 2],
    gbm: &GbmParams,
    activation_cost: f64,
    deactivation_cost: f64,
    grid: &DpGrid,
) -> Result<DpCrossCheck> {
    let (coarse, values) = dp_solve(flows, gbm, activation_cost, deactivation_cost, grid, None)?;
    let fine_grid = DpGrid {
        substeps: grid.substeps * 4,
        ..*grid
    };
    let (fine, _) = dp_solve(
        flows,
        gbm,
        activation_cost,
        deactivation_cost,
        &fine_grid,
        Some(values),
    )?;
    Ok(DpCrossCheck {
        upper: 2.0 * fine.upper - coarse.upper,
        lower: 2.0 * fine.lower - coarse.lower,
        coarse,
        fine,
    })
}

struct Kernel {
    weights: Vec<f64>,
    half: usize,
    below: f64,
    above: f64,
}

impl Kernel {
    fn new(mean: f64, sd: f64, step: f64, width: f64) -> Self {
        let half = libm::ceil((width * sd + mean.abs()) / step) as usize;
        let h = half as f64;
        let cdf = |edge: f64| normal_cdf((edge - mean) / sd);
        let weights = (0..=2 * half)
            .map(|j| {
                let o = j as f64 - h;
                let (lo, hi) = ((o - 0.5) * step, (o + 0.5) * step);
                // Difference upper tails on the right to keep precision.
                if lo > mean {
                    cdf_upper(lo, mean, sd) - cdf_upper(hi, mean, sd)
                } else {
                    cdf(hi) - cdf(lo)
                }
            })
            .collect();
        Self {
            weights,
            half,
            below: cdf(-(h + 0.5) * step),
            above: cdf_upper((h + 0.5) * step, mean, sd),
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let h = self.half;
        let last = n - 1;
        for (i, o) in out.iter_mut().enumerate() {
            let lo_idx = i.saturating_sub(h);
            let hi_idx = (i + h).min(last);
            let mut acc = self.below * v[lo_idx] + self.above * v[hi_idx];
            if i >= h && i + h <= last {
                acc += self
                    .weights
                    .iter()
                    .zip(&v[i - h..=i + h])
                    .map(|(w, x)| w * x)
                    .sum::<f64>();
            } else {
                for (j, w) in self.weights.iter().enumerate() {
                    let idx = (i + j).saturating_sub(h).min(last);
                    acc += w * v[idx];
                }
            }
            *o = acc;
        }
    }
}

fn cdf_upper(edge: f64, mean: f64, sd: f64) -> f64 {
    0.5 * libm::erfc((edge - mean) / sd * core::f64::consts::FRAC_1_SQRT_2)
}

fn dp_solve(
    flows: &[AffineFlow; 2],
    gbm: &GbmParams,
    cost_d: f64,
    cost_k: f64,
    grid: &DpGrid,
    warm: Option<DpValues>,
) -> Result<(DpThresholds, DpValues)> {
    gbm.validate()?;
    if !(gbm.volatility > 0.0) {
        return Err(domain("sigma", gbm.volatility, "sigma > 0"));
    }
    if !(gbm.discount > 0.0) {
        return Err(domain("k", gbm.discount, "k > 0"));
    }
    if grid.points < 10 || !(grid.span > 1.0) || grid.substeps == 0 || !(grid.kernel_width > 0.0) {
        return Err(invalid(
            "dp grid",
            "need >= 10 points, span > 1, substeps >= 1, kernel width > 0",
        ));
    }
    for (name, v) in [("D", cost_d), ("K", cost_k)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(domain(name, v, "finite and >= 0"));
        }
    }
    let slope = flows[1].slope - flows[0].slope;
    let intercept = flows[1].intercept - flows[0].intercept;
    if !(slope > 0.0) {
        return Err(Error::Structural("gain must increase with demand"));
    }
    let centre = -intercept / slope;
    if !(centre > 0.0 && centre.is_finite()) {
        return Err(Error::Structural("gain has no positive break-even density"));
    }
    let n = grid.points;
    let step = 2.0 * libm::log(grid.span) / (n - 1) as f64;
    let base = libm::log(centre / grid.span);
    let ln_q: Vec<f64> = (0..n).map(|i| base + i as f64 * step).collect();
    let dt = 1.0 / grid.substeps as f64;
    let beta = libm::exp(-gbm.discount * dt);
    let kernel = Kernel::new(
        (gbm.growth - 0.5 * gbm.volatility * gbm.volatility) * dt,
        gbm.volatility * libm::sqrt(dt),
        step,
        grid.kernel_width,
    );
    // Only the flow difference matters for the decisions, so the fare-based
    // flow is subtracted from both modes.
    let gain: Vec<f64> = ln_q
        .iter()
        .map(|&l| (slope * libm::exp(l) + intercept) * dt)
        .collect();
    let tol = grid.tolerance * 1f64.max(cost_d).max(cost_k);

    let (mut v0, mut v1) = match warm {
        Some(w) if w.fare_based.len() == n => (w.fare_based, w.fare_free),
        _ => (vec![0.0; n], vec![0.0; n]),
    };
    let mut e0 = vec![0.0; n];
    let mut e1 = vec![0.0; n];
    let mut iterations = 0;
    loop {
        kernel.apply(&v0, &mut e0);
        kernel.apply(&v1, &mut e1);
        let mut change: f64 = 0.0;
        for i in 0..n {
            let c0 = beta * e0[i];
            let c1 = gain[i] + beta * e1[i];
            let n0 = c0.max(c1 - cost_d);
            let n1 = c1.max(c0 - cost_k);
            change = change.max((n0 - v0[i]).abs()).max((n1 - v1[i]).abs());
            v0[i] = n0;
            v1[i] = n1;
        }
        iterations += 1;
        if change < tol {
            break;
        }
        if iterations >= grid.max_iterations {
            return Err(Error::NoConvergence {
                what: "value iteration",
                iterations,
                residual: change,
            });
        }
    }
    kernel.apply(&v0, &mut e0);
    kernel.apply(&v1, &mut e1);
    let c0: Vec<f64> = e0.iter().map(|e| beta * e).collect();
    let c1: Vec<f64> = e1.iter().zip(&gain).map(|(e, g)| g + beta * e).collect();
    let enter: Vec<f64> = (0..n).map(|i| c1[i] - cost_d - c0[i]).collect();
    let leave: Vec<f64> = (0..n).map(|i| c0[i] - cost_k - c1[i]).collect();

    let first_enter = enter
        .iter()
        .position(|&a| a > 0.0)
        .ok_or(Error::Structural(
            "no demand level on the grid triggers the switch to fare-free",
        ))?;
    let last_leave = leave
        .iter()
        .rposition(|&a| a > 0.0)
        .ok_or(Error::Structural(
            "no demand level on the grid triggers the switch back",
        ))?;
    if first_enter == 0 || last_leave == n - 1 {
        return Err(Error::Structural(
            "switch region reaches the edge of the grid",
        ));
    }
    let monotone = enter[first_enter..].iter().all(|&a| a > 0.0)
        && leave[..=last_leave].iter().all(|&a| a > 0.0);
    let crossing = |i: usize, fa: f64, fb: f64| {
        let t = fa / (fa - fb);
        libm::exp(ln_q[i] + t * step)
    };
    let upper = crossing(first_enter - 1, enter[first_enter - 1], enter[first_enter]);
    let lower = crossing(last_leave, leave[last_leave], leave[last_leave + 1]);
    Ok((
        DpThresholds {
            upper,
            lower,
            centre,
            log_step: step,
            iterations,
            substeps: grid.substeps,
            monotone,
        },
        DpValues {
            fare_based: v0,
            fare_free: v1,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(d: f64, k: f64) -> SwitchingInputs {
        let gbm = GbmParams::baseline();
        SwitchingInputs {
            gain: GainCoefficients::from_deltas(25.58, -6560.0, gbm.growth, gbm.discount).unwrap(),
            gbm,
            activation_cost: d,
            deactivation_cost: k,
        }
    }

    #[test]
    fn baseline_roots() {
        let r = characteristic_roots(&GbmParams::baseline()).unwrap();
        assert!(r.positive > 1.0 && r.negative < 0.0);
        let s2 = 0.1347f64 * 0.1347;
        assert!((r.positive * r.negative + 2.0 * 0.02 / s2).abs() < 1e-12);
        assert!((r.positive * r.negative + 2.2043).abs() < 1e-3);
    }

    #[test]
    fn roots_with_zero_drift() {
        let gbm = GbmParams {
            growth: 0.0,
            volatility: 0.2,
            discount: 0.02,
            initial: 1.0,
        };
        let r = characteristic_roots(&gbm).unwrap();
        assert!((r.positive + r.negative - 1.0).abs() < 1e-14);
        assert!((r.positive * r.negative + 1.0).abs() < 1e-14);
    }

    #[test]
    fn roots_refuse_degenerate_inputs() {
        let g = GbmParams::baseline();
        assert!(characteristic_roots(&GbmParams {
            volatility: 0.0,
            ..g
        })
        .is_err());
        assert!(characteristic_roots(&GbmParams {
            discount: 0.01,
            ..g
        })
        .is_err());
    }

    #[test]
    fn zero_cost_solution_is_single_threshold() {
        let i = inputs(0.0, 0.0);
        let s = solve_thresholds(&i).unwrap();
        assert_eq!(s.method, SolveMethod::ZeroCost);
        assert_eq!(s.upper, s.lower);
        assert!((s.upper - single_threshold(&i).unwrap()).abs() < 1e-9);
        // Q* coincides with the myopic break-even density
        assert!((s.single_threshold - 6560.0 / 25.58).abs() < 1e-9 * s.single_threshold);
        let (v0, v1) = value_functions(&s, &i, s.upper).unwrap();
        assert!((v0 - v1).abs() < 1e-8 * v0.abs().max(1.0));
    }

    #[test]
    fn baseline_thresholds_bracket_single_threshold() {
        let i = inputs(5000.0, 5000.0);
        let s = solve_thresholds(&i).unwrap();
        assert!(s.lower < s.single_threshold && s.single_threshold < s.upper);
        assert!(s.residual_norm < 1e-8);
        let (v0u, v1u) = value_functions(&s, &i, s.upper).unwrap();
        assert!((v1u - v0u - 5000.0).abs() < 1e-6);
        let (v0l, v1l) = value_functions(&s, &i, s.lower).unwrap();
        assert!((v0l - v1l - 5000.0).abs() < 1e-6);
    }

    #[test]
    fn large_and_tiny_costs_solve() {
        for c in [1e-6, 1e-3, 1e5, 3e5] {
            let s = solve_thresholds(&inputs(c, c)).unwrap();
            assert!(
                s.lower < s.single_threshold && s.single_threshold < s.upper,
                "cost {c}"
            );
            assert!(s.residual_norm < 1e-8, "cost {c}: {}", s.residual_norm);
        }
    }

    #[test]
    fn exit_cost_above_perpetual_loss_has_no_lower_threshold() {
        let i = inputs(5000.0, 5000.0);
        let k = -i.gain.nu_1;
        assert!(matches!(
            solve_thresholds(&inputs(5000.0, k * 1.01)),
            Err(Error::Structural(_))
        ));
        assert!(solve_thresholds(&inputs(1e7, 5000.0)).is_ok());
    }

    #[test]
    fn value_functions_vanish_at_zero_and_reject_nonpositive() {
        let i = inputs(5000.0, 5000.0);
        let s = solve_thresholds(&i).unwrap();
        assert!(value_functions(&s, &i, 1e-12).unwrap().0.abs() < 1e-6);
        assert!(value_functions(&s, &i, 0.0).is_err());
    }

    #[test]
    fn ode_residuals_vanish() {
        let i = inputs(5000.0, 5000.0);
        let s = solve_thresholds(&i).unwrap();
        let (eta, sigma, k) = (i.gbm.growth, i.gbm.volatility, i.gbm.discount);
        for q in [150.0, 260.0, 400.0] {
            let h = q * 1e-3;
            let v = |q| value_functions(&s, &i, q).unwrap();
            let (m, p, c) = (v(q - h), v(q + h), v(q));
            for (lo, hi, mid, flow) in [(m.0, p.0, c.0, 0.0), (m.1, p.1, c.1, i.gain.gain(q))] {
                let d1 = (hi - lo) / (2.0 * h);
                let d2 = (hi - 2.0 * mid + lo) / (h * h);
                let r = 0.5 * sigma * sigma * q * q * d2 + eta * q * d1 - k * mid + flow;
                let scale = (k * mid).abs().max(flow.abs()).max(1.0);
                assert!(r.abs() < 1e-6 * scale, "q {q}: {r}");
            }
        }
    }

    #[test]
    fn single_threshold_requires_negative_intercept() {
        let gbm = GbmParams::baseline();
        let i = SwitchingInputs {
            gain: GainCoefficients::from_deltas(25.0, 100.0, gbm.growth, gbm.discount).unwrap(),
            gbm,
            activation_cost: 1.0,
            deactivation_cost: 1.0,
        };
        assert!(matches!(single_threshold(&i), Err(Error::Structural(_))));
        let falling = SwitchingInputs {
            gain: GainCoefficients::from_deltas(-25.0, -100.0, gbm.growth, gbm.discount).unwrap(),
            ..i
        };
        assert!(matches!(
            solve_thresholds(&falling),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn mixed_zero_cost_rejected() {
        assert!(solve_thresholds(&inputs(0.0, 10.0)).is_err());
    }

    #[test]
    fn dp_without_costs_hits_break_even() {
        let i = inputs(0.0, 0.0);
        let grid = DpGrid {
            points: 400,
            ..DpGrid::default()
        };
        let dp = dp_oracle(&i.flows(), &i.gbm, 0.0, 0.0, &grid).unwrap();
        let q_star = single_threshold(&i).unwrap();
        let cell = libm::exp(dp.log_step);
        assert!(dp.upper / q_star < cell && q_star / dp.upper < cell);
        assert!(dp.lower / q_star < cell && q_star / dp.lower < cell);
        assert!(dp.monotone);
    }

    #[test]
    fn kernel_mass_is_one() {
        let k = Kernel::new(0.01, 0.1347, 0.003, 7.0);
        let total: f64 = k.weights.iter().sum::<f64>() + k.below + k.above;
        assert!((total - 1.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn roots_satisfy_identities(eta in -0.05..0.05f64, sigma in 0.02..0.6f64, gap in 0.001..0.1f64) {
            let gbm = GbmParams { growth: eta, volatility: sigma, discount: eta.max(0.0) + gap, initial: 1.0 };
            let r = characteristic_roots(&gbm).unwrap();
            let s2 = sigma * sigma;
            prop_assert!(RootPair::quadratic(&gbm, r.positive).abs() < 1e-12);
            prop_assert!(RootPair::quadratic(&gbm, r.negative).abs() < 1e-12);
            prop_assert!((r.positive * r.negative + 2.0 * gbm.discount / s2).abs() <= 1e-12 * (2.0 * gbm.discount / s2).max(1.0));
            prop_assert!((r.positive + r.negative - (1.0 - 2.0 * eta / s2)).abs() <= 1e-12 * (2.0 * eta / s2).abs().max(1.0));
        }

        #[test]
        fn single_threshold_is_linear_in_intercept(c in -1e5..-1.0f64, scale in 0.1..10.0f64) {
            let gbm = GbmParams::baseline();
            let mk = |dc| SwitchingInputs {
                gain: GainCoefficients::from_deltas(20.0, dc, gbm.growth, gbm.discount).unwrap(),
                gbm,
                activation_cost: 0.0,
                deactivation_cost: 0.0,
            };
            let a = single_threshold(&mk(c)).unwrap();
            let b = single_threshold(&mk(c * scale)).unwrap();
            prop_assert!((b - a * scale).abs() <= 1e-12 * b);
        }
    }
}
