//! Weak symmetry images `g = W+ h` by double contour integration.
//!
//! With `l = gamma + iu` on the Bromwich line,
//!
//! ```text
//! F(l) = int_{-R}^{R} [psi'(l) / (psi(l) - psi(-zeta - iz)) - 1 / (l + zeta + iz)] h_hat(z) dz
//! g(x) = (1 / 2pi) int_{-r}^{r} e^{l x} F(l) du
//! ```
//!
//! `F` does not depend on `x`, so images over many points share one set of
//! inner integrals. `F(conj l) = conj F(l)` for real payoffs, which lets the
//! image engine integrate `u` over `[0, r]` only.
//!
//! Tolerances: `quad_tol` bounds the quadrature error of the scaled quantity
//! `e^{-gamma x} g(x)`; the truncation error is reported separately through
//! [`error_bound`].

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WrpError};
use crate::levy::{denominator_floor, mirror_root_abscissa, JumpMeasure, LevyTriplet, DEFAULT_FLOOR_GRID};
use crate::payoff::{FourierPayoff, Integrability};
use crate::quad::{integrate, integrate_oscillatory_tail, QuadResult, Tolerance};

pub const DEFAULT_GAMMA: f64 = 4.0;
pub const DEFAULT_FLOOR_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Calibrated on pure Brownian motion: twice the largest observed ratio of
/// true error to `(e^{gamma x} / x)(|h_hat|_1 / r + tail_mass(r/2))`.
pub const DEFAULT_BOUND_CONSTANT: f64 = 0.0575;
/// Initial and maximal outer truncation used by [`compute_g_curve`].
pub const CURVE_R_START: f64 = 20.0;
pub const CURVE_R_CAP: f64 = 1e4;
/// `e^{gamma x}` beyond this exponent overflows or loses all precision.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Bromwich abscissa and truncation of the double integral. `big_r` may be
/// infinite (serialized as `null`), in which case the inner integral covers
/// the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourParams {
    pub gamma: f64,
    pub r: f64,
    #[serde(rename = "R", with = "inf_as_null")]
    pub big_r: f64,
    pub quad_tol: f64,
    pub floor_threshold: f64,
    pub bound_constant: f64,
}

impl ContourParams {
    pub fn new(gamma: f64, r: f64, big_r: f64) -> Self {
        Self {
            gamma,
            r,
            big_r,
            quad_tol: DEFAULT_QUAD_TOL,
            floor_threshold: DEFAULT_FLOOR_THRESHOLD,
            bound_constant: DEFAULT_BOUND_CONSTANT,
        }
    }

    /// `r = R`, the default shape for put payoffs.
    pub fn square(gamma: f64, r: f64) -> Self {
        Self::new(gamma, r, r)
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    /// Parameter ranges plus the sampled denominator floor and the
    /// mirror-root abscissa over a window of the truncated square.
    /// Checks ranges and that the contour clears the kernel poles for a
    /// payoff preimage damped by `zeta`.
    pub fn validate(&self, triplet: &LevyTriplet, zeta: f64) -> Result<()> {
        let bad = |what: &str| Err(WrpError::InvalidParameter(what.to_string()));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be finite and > 0");
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return bad("r must be finite and > 0");
        }
        if !(self.big_r > 0.0) {
            return bad("R must be > 0 (or infinite)");
        }
        if !(self.quad_tol > 0.0 && self.floor_threshold >= 0.0 && self.bound_constant > 0.0) {
            return bad("quad_tol and bound_constant must be > 0, floor_threshold >= 0");
        }
        let span = self.r.max(if self.big_r.is_finite() { self.big_r } else { self.r }).min(200.0);
        // Both diagnostics read the kernel's `zeta` off the triplet.
        let triplet = &LevyTriplet { zeta, ..triplet.clone() };
        let abscissa = mirror_root_abscissa(triplet, (-span, span), DEFAULT_FLOOR_GRID);
        if self.gamma <= abscissa {
            return Err(WrpError::ContourBelowPoles { gamma: self.gamma, abscissa });
        }
        let floor = denominator_floor(triplet, self.gamma, (-span, span), (-span, span), DEFAULT_FLOOR_GRID);
        if floor < self.floor_threshold {
            return Err(WrpError::DenominatorUnderflow { value: floor, threshold: self.floor_threshold });
        }
        Ok(())
    }
}

impl Default for ContourParams {
    fn default() -> Self {
        Self::square(DEFAULT_GAMMA, 60.0)
    }
}

/// The triplet's exponential moment must cover the payoff's damping, unless
/// `psi` is entire (no jumps).
pub fn check_compatible(triplet: &LevyTriplet, payoff: &FourierPayoff) -> Result<()> {
    if !matches!(triplet.jumps, JumpMeasure::None) && payoff.zeta() > triplet.zeta + 1e-12 {
        return Err(WrpError::AdmissibilityViolation { re: -payoff.zeta(), min: -triplet.zeta });
    }
    Ok(())
}

/// Kernel at a fixed `l`, with `psi(l)` and `psi'(l)` hoisted.
struct Kernel<'a> {
    triplet: &'a LevyTriplet,
    payoff: &'a FourierPayoff,
    lambda: Complex64,
    psi_l: Complex64,
    dpsi_l: Complex64,
    zeta: f64,
}

impl<'a> Kernel<'a> {
    fn new(triplet: &'a LevyTriplet, payoff: &'a FourierPayoff, lambda: Complex64) -> Self {
        Self {
            triplet,
            payoff,
            lambda,
            psi_l: triplet.psi_unchecked(lambda),
            dpsi_l: triplet.psi_prime_unchecked(lambda),
            zeta: payoff.zeta(),
        }
    }

    /// Kernel times `h_hat(z)`, and `|psi(l) - psi(-zeta - iz)|`.
    #[inline]
    fn eval(&self, z: f64) -> (Complex64, f64) {
        let w = Complex64::new(-self.zeta, -z);
        let d = self.psi_l - self.triplet.psi_unchecked(w);
        let k = self.dpsi_l / d - 1.0 / (self.lambda - w);
        (k * self.payoff.h_hat(z), d.norm())
    }
}

/// `[psi'(l) / (psi(l) - psi(-zeta - iz)) - 1 / (l + zeta + iz)] h_hat(z)`.
pub fn integrand(triplet: &LevyTriplet, payoff: &FourierPayoff, lambda: Complex64, z: f64) -> Result<Complex64> {
    check_compatible(triplet, payoff)?;
    triplet.psi(lambda)?;
    let (v, d) = Kernel::new(triplet, payoff, lambda).eval(z);
    if d < DEFAULT_FLOOR_THRESHOLD {
        return Err(WrpError::DenominatorUnderflow { value: d, threshold: DEFAULT_FLOOR_THRESHOLD });
    }
    Ok(v)
}

/// `F(l) = int_{-R}^{R} kernel(l, z) h_hat(z) dz`; `big_r` may be infinite.
pub fn inner_integral(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    lambda: Complex64,
    big_r: f64,
    tol: Tolerance,
    floor_threshold: f64,
) -> Result<QuadResult> {
    let kernel = Kernel::new(triplet, payoff, lambda);
    let min_denom = Cell::new(f64::INFINITY);
    let f = |z: f64| {
        let (v, d) = kernel.eval(z);
        if d < min_denom.get() {
            min_denom.set(d);
        }
        v
    };
    let u = lambda.im;
    let zeta = payoff.zeta();
    let mut breaks = vec![0.0, u, -u, zeta, -zeta];
    let result = if big_r.is_finite() {
        integrate(f, -big_r, big_r, &breaks, tol, 4000)
    } else if let Some(freq) = payoff.tail_frequency().filter(|w| *w > 1e-6) {
        let period = 2.0 * PI / freq;
        let z0 = u.abs() + 40.0 + 2.0 * period;
        let part = Tolerance::new(tol.abs / 3.0, tol.rel);
        let core = integrate(f, -z0, z0, &breaks, part, 4000);
        let right = integrate_oscillatory_tail(f, z0, 1.0, period, part, 4000);
        let left = integrate_oscillatory_tail(f, -z0, -1.0, period, part, 4000);
        QuadResult {
            value: core.value + right.value + left.value,
            abs_err: core.abs_err + right.abs_err + left.abs_err,
            evals: core.evals + right.evals + left.evals,
            converged: core.converged && right.converged && left.converged,
        }
    } else {
        let z0 = u.abs() + 40.0;
        breaks.extend([z0, -z0]);
        integrate(f, f64::NEG_INFINITY, f64::INFINITY, &breaks, tol, 8000)
    };
    if min_denom.get() < floor_threshold {
        return Err(WrpError::DenominatorUnderflow { value: min_denom.get(), threshold: floor_threshold });
    }
    Ok(result)
}

/// Inner-integral tolerance at `u`: `0.5 quad_tol / ((1 + u)(1 + ln(1 + u))^2)`
/// integrates to `0.5 quad_tol` over `u in [0, inf)`, half the outer budget.
pub(crate) fn inner_tolerance(u: f64, quad_tol: f64) -> Tolerance {
    let a = 1.0 + u.abs();
    let l = 1.0 + a.ln();
    Tolerance::new(0.5 * quad_tol / (a * l * l), 1e-12)
}

/// Heuristic truncation certificate
/// `C (e^{gamma x} / x) (|h_hat|_1 / r + tail_mass(min(r/2, R)))`.
pub fn error_bound(payoff: &FourierPayoff, gamma: f64, x: f64, r: f64, big_r: f64, constant: f64) -> f64 {
    constant * (gamma * x).exp() / x * (payoff.l1_norm() / r + payoff.tail_mass((0.5 * r).min(big_r)))
}

fn check_point_inputs(triplet: &LevyTriplet, payoff: &FourierPayoff, x: f64, gamma: f64) -> Result<()> {
    if payoff.integrability() != Integrability::L1 {
        return Err(WrpError::RequiresL1);
    }
    check_compatible(triplet, payoff)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(WrpError::InvalidParameter(format!("symmetry images are evaluated at x > 0, got {x}")));
    }
    if gamma * x > OVERFLOW_EXPONENT {
        return Err(WrpError::OverflowGuard(gamma * x));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPoint {
    pub x: f64,
    pub g: f64,
    pub err_bound: f64,
    /// `|Im|` of the raw double integral.
    pub im_residual: f64,
    /// Estimated quadrature error of `g`.
    pub quad_err: f64,
}

/// `g_{r,R}(x)` by nested adaptive quadrature over the full line `u in [-r, r]`.
pub fn compute_g_point(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    x: f64,
    params: &ContourParams,
) -> Result<GPoint> {
    check_point_inputs(triplet, payoff, x, params.gamma)?;
    params.validate(triplet, payoff.zeta())?;
    let failure: RefCell<Option<WrpError>> = RefCell::new(None);
    let f = |u: f64| {
        let lambda = Complex64::new(params.gamma, u);
        let tol = inner_tolerance(u, params.quad_tol);
        match inner_integral(triplet, payoff, lambda, params.big_r, tol, params.floor_threshold) {
            Ok(q) => Complex64::new(0.0, u * x).exp() * q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    // Panels of at most one oscillation period of e^{iux}.
    let width = (2.0 * PI / x).min(2.0);
    let n = (params.r / width).ceil() as usize;
    let breaks: Vec<f64> = (-(n as i64)..=n as i64).map(|k| k as f64 * params.r / n as f64).collect();
    let tol = Tolerance::new(2.0 * PI * params.quad_tol, 0.0);
    let q = integrate(f, -params.r, params.r, &breaks, tol, 20 * n + 200);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let scale = (params.gamma * x).exp() / (2.0 * PI);
    Ok(GPoint {
        x,
        g: scale * q.value.re,
        err_bound: error_bound(payoff, params.gamma, x, params.r, params.big_r, params.bound_constant),
        im_residual: scale * q.value.im.abs(),
        quad_err: scale * q.abs_err,
    })
}

/// Evaluable representation of `g` on a grid of positive points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryImage {
    pub x_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub error_bounds: Vec<f64>,
    pub im_residuals: Vec<f64>,
    pub quad_errors: Vec<f64>,
    /// Outer truncation used at each point.
    pub r_values: Vec<f64>,
    /// `r` holds the largest outer truncation used.
    pub params: ContourParams,
    pub payoff: String,
    pub triplet: LevyTriplet,
}

impl SymmetryImage {
    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    /// Linear interpolation of `g`. `g` vanishes on `x <= 0`; between 0 and the
    /// first grid point the image is joined to `g(0+) = 0`, which holds for
    /// payoffs vanishing near the barrier. Points beyond the grid are an error.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let n = self.x_grid.len();
        if x <= 0.0 {
            return Ok(0.0);
        }
        if n == 0 || x > self.x_grid[n - 1] {
            let hi = self.x_grid.last().copied().unwrap_or(0.0);
            return Err(WrpError::GridExtrapolation { x, lo: 0.0, hi });
        }
        if x < self.x_grid[0] {
            return Ok(self.g_values[0] * x / self.x_grid[0]);
        }
        let k = self.x_grid.partition_point(|&v| v < x).clamp(1, n - 1);
        let (x0, x1) = (self.x_grid[k - 1], self.x_grid[k]);
        let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        Ok(self.g_values[k - 1] + t * (self.g_values[k] - self.g_values[k - 1]))
    }

    pub fn max_error_bound(&self) -> f64 {
        self.error_bounds.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_im_ratio(&self) -> f64 {
        self.im_residuals.iter().zip(&self.g_values).map(|(im, g)| im / (1.0 + g.abs())).fold(0.0, f64::max)
    }
}

/// Chebyshev-Lobatto points per interpolation block of `F`.
const BLOCK_NODES: usize = 17;
const BLOCK_WIDTH: f64 = 32.0;

/// `F` sampled on one block `[a, b]` of the `u` axis.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub(crate) a: f64,
    pub(crate) b: f64,
    f: [Complex64; BLOCK_NODES],
    /// Largest interpolation mismatch at the check points.
    pub(crate) interp_err: f64,
    pub(crate) inner_err: f64,
    /// `|F(gamma - ic) - conj F(gamma + ic)|` at the centre `c`.
    mirror_gap: f64,
}

#[inline]
fn lobatto(j: usize) -> f64 {
    (PI * j as f64 / (BLOCK_NODES - 1) as f64).cos()
}

impl Block {
    fn node(&self, t: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * t
    }

    /// Barycentric interpolation on the Lobatto nodes.
    pub(crate) fn eval(&self, u: f64) -> Complex64 {
        let t = (2.0 * u - self.a - self.b) / (self.b - self.a);
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..BLOCK_NODES {
            let d = t - lobatto(j);
            if d == 0.0 {
                return self.f[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == BLOCK_NODES - 1 {
                w *= 0.5;
            }
            num += self.f[j] * (w / d);
            den += w / d;
        }
        num / den
    }
}

/// Interpolated `F(gamma + iu)` from sorted, contiguous blocks.
pub(crate) fn eval_blocks(blocks: &[Block], u: f64) -> Complex64 {
    let k = blocks.partition_point(|b| b.b < u).min(blocks.len() - 1);
    blocks[k].eval(u)
}

pub(crate) struct Engine<'a> {
    pub(crate) triplet: &'a LevyTriplet,
    pub(crate) payoff: &'a FourierPayoff,
    pub(crate) gamma: f64,
    pub(crate) big_r: f64,
    pub(crate) quad_tol: f64,
    pub(crate) floor_threshold: f64,
}

impl Engine<'_> {
    pub(crate) fn f_at(&self, u: f64) -> Result<QuadResult> {
        let lambda = Complex64::new(self.gamma, u);
        let mut tol = inner_tolerance(u, self.quad_tol);
        tol.abs *= 0.5;
        inner_integral(self.triplet, self.payoff, lambda, self.big_r, tol, self.floor_threshold)
    }

    fn block(&self, a: f64, b: f64) -> Result<Block> {
        let mut blk = Block {
            a,
            b,
            f: [Complex64::new(0.0, 0.0); BLOCK_NODES],
            interp_err: 0.0,
            inner_err: 0.0,
            mirror_gap: 0.0,
        };
        for j in 0..BLOCK_NODES {
            let q = self.f_at(blk.node(lobatto(j)))?;
            blk.inner_err = blk.inner_err.max(q.abs_err);
            blk.f[j] = q.value;
        }
        // Check points halfway between Lobatto nodes, one near an end and one central.
        let m = BLOCK_NODES - 1;
        for t in [(PI * 0.5 / m as f64).cos(), (PI * (m / 2) as f64 / m as f64 + PI * 0.5 / m as f64).cos()] {
            let u = blk.node(t);
            let q = self.f_at(u)?;
            blk.interp_err = blk.interp_err.max((q.value - blk.eval(u)).norm());
        }
        let c = 0.5 * (a + b);
        let mirror = self.f_at(-c)?.value;
        blk.mirror_gap = (mirror - blk.eval(c).conj()).norm();
        Ok(blk)
    }

    /// Adaptive Chebyshev blocks covering `[0, r_max]`.
    pub(crate) fn sample(&self, r_max: f64) -> Result<Vec<Block>> {
        let n = (r_max / BLOCK_WIDTH).ceil().max(1.0) as usize;
        let mut pending: Vec<(f64, f64)> =
            (0..n).map(|k| (r_max * k as f64 / n as f64, r_max * (k + 1) as f64 / n as f64)).collect();
        let mut done = Vec::new();
        for round in 0..40 {
            let evaluated: Vec<Block> = pending.par_iter().map(|&(a, b)| self.block(a, b)).collect::<Result<_>>()?;
            pending.clear();
            for blk in evaluated {
                let allowed = 0.5 * inner_tolerance(blk.a, self.quad_tol).abs;
                if blk.interp_err > allowed && blk.b - blk.a > 1e-3 && round < 39 {
                    let mid = 0.5 * (blk.a + blk.b);
                    pending.push((blk.a, mid));
                    pending.push((mid, blk.b));
                } else {
                    done.push(blk);
                }
            }
            if pending.is_empty() {
                break;
            }
        }
        done.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(done)
    }

    /// `(g, quad_err, im_residual)` at `x` with outer truncation `r`, using
    /// `int_0^r e^{iux} F du` with `F` interpolated from `blocks`.
    fn point(&self, blocks: &[Block], x: f64, r: f64) -> (f64, f64, f64) {
        let eval = |u: f64| Complex64::from_polar(1.0, u * x) * eval_blocks(blocks, u);
        let width = (2.0 * PI / x).min(4.0);
        let n = (r / width).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (1..n).map(|k| r * k as f64 / n as f64).collect();
        let q = integrate(eval, 0.0, r, &breaks, Tolerance::new(0.5 * PI * self.quad_tol, 0.0), 50 * n + 200);
        let mut sampled_err = 0.0;
        let mut gap = 0.0;
        for blk in blocks.iter().filter(|b| b.a < r) {
            let w = blk.b.min(r) - blk.a;
            sampled_err += w * (blk.interp_err + blk.inner_err);
            gap += w * blk.mirror_gap;
        }
        let scale = (self.gamma * x).exp();
        (scale * q.value.re / PI, scale * (q.abs_err + sampled_err) / PI, scale * gap / (2.0 * PI))
    }

    fn run(&self, xs: &[f64], rs: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let r_max = rs.iter().cloned().fold(0.0, f64::max);
        let blocks = self.sample(r_max)?;
        Ok(xs.par_iter().zip(rs.par_iter()).map(|(&x, &r)| self.point(&blocks, x, r)).collect())
    }
}

fn validate_grid(x_grid: &[f64], gamma: f64) -> Result<()> {
    for &x in x_grid {
        if !(x.is_finite() && x > 0.0) {
            return Err(WrpError::InvalidParameter(format!("symmetry images are evaluated at x > 0, got {x}")));
        }
        if gamma * x > OVERFLOW_EXPONENT {
            return Err(WrpError::OverflowGuard(gamma * x));
        }
    }
    Ok(())
}

fn build_image(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    x_grid: &[f64],
    rs: Vec<f64>,
    params: ContourParams,
) -> Result<SymmetryImage> {
    let engine = Engine {
        triplet,
        payoff,
        gamma: params.gamma,
        big_r: params.big_r,
        quad_tol: params.quad_tol,
        floor_threshold: params.floor_threshold,
    };
    let vals = if x_grid.is_empty() { Vec::new() } else { engine.run(x_grid, &rs)? };
    let error_bounds = x_grid
        .iter()
        .zip(&rs)
        .map(|(&x, &r)| error_bound(payoff, params.gamma, x, r, params.big_r, params.bound_constant))
        .collect();
    Ok(SymmetryImage {
        x_grid: x_grid.to_vec(),
        g_values: vals.iter().map(|v| v.0).collect(),
        quad_errors: vals.iter().map(|v| v.1).collect(),
        im_residuals: vals.iter().map(|v| v.2).collect(),
        error_bounds,
        r_values: rs,
        params,
        payoff: payoff.descriptor(),
        triplet: triplet.clone(),
    })
}

/// Image on `x_grid` with one fixed truncation `(r, R)` for every point.
pub fn compute_g_image(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    x_grid: &[f64],
    params: &ContourParams,
) -> Result<SymmetryImage> {
    if payoff.integrability() != Integrability::L1 {
        return Err(WrpError::RequiresL1);
    }
    check_compatible(triplet, payoff)?;
    validate_grid(x_grid, params.gamma)?;
    params.validate(triplet, payoff.zeta())?;
    build_image(triplet, payoff, x_grid, vec![params.r; x_grid.len()], *params)
}

/// Image whose per-point truncation `r` is the first of `20, 40, 80, ...`
/// (capped at `1e4`) bringing [`error_bound`] below `target_err`. The inner
/// integral runs over the whole line, so `min(r/2, R) = r/2`. `base`
/// supplies `gamma` and the bound constant; its `quad_tol` is loosened to
/// `0.01 target_err e^{-gamma x_max}` when that is larger.
pub fn compute_g_curve(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    x_grid: &[f64],
    target_err: f64,
    base: &ContourParams,
) -> Result<SymmetryImage> {
    if payoff.integrability() != Integrability::L1 {
        return Err(WrpError::RequiresL1);
    }
    check_compatible(triplet, payoff)?;
    if !(target_err > 0.0) {
        return Err(WrpError::InvalidParameter("target_err must be > 0".into()));
    }
    validate_grid(x_grid, base.gamma)?;
    let mut rs = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let mut r = CURVE_R_START;
        loop {
            let bound = error_bound(payoff, base.gamma, x, r, f64::INFINITY, base.bound_constant);
            if bound <= target_err {
                break;
            }
            if r >= CURVE_R_CAP {
                return Err(WrpError::TruncationCapExceeded { x, cap: CURVE_R_CAP, bound, target: target_err });
            }
            r = (2.0 * r).min(CURVE_R_CAP);
        }
        rs.push(r);
    }
    let mut params = *base;
    params.big_r = f64::INFINITY;
    // Quadrature error is amplified by e^{gamma x}; 1% of the target suffices.
    let x_max = x_grid.iter().cloned().fold(0.0, f64::max);
    params.quad_tol = base.quad_tol.max(0.01 * target_err * (-base.gamma * x_max).exp());
    params.r = rs.iter().cloned().fold(CURVE_R_START, f64::max);
    params.validate(triplet, payoff.zeta())?;
    build_image(triplet, payoff, x_grid, rs, params)
}

/// How the image entering a hedge is truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(ContourParams),
    Target { target_err: f64, base: ContourParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePayoff {
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Certificate of the `-g` part; zero below the barrier.
    pub error_bounds: Vec<f64>,
}

/// Static hedge `h - g`: `h(x)` for `x < 0`, `h(0-)` at the barrier and
/// `-g(x)` above it.
pub fn static_hedge_payoff(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    x_grid: &[f64],
    truncation: Truncation,
) -> Result<HedgePayoff> {
    let positive: Vec<f64> = x_grid.iter().copied().filter(|x| *x > 0.0).collect();
    let image = match truncation {
        Truncation::Fixed(p) => compute_g_image(triplet, payoff, &positive, &p)?,
        Truncation::Target { target_err, base } => compute_g_curve(triplet, payoff, &positive, target_err, &base)?,
    };
    let mut k = 0;
    let mut values = Vec::with_capacity(x_grid.len());
    let mut error_bounds = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        if x > 0.0 {
            values.push(-image.g_values[k]);
            error_bounds.push(image.error_bounds[k]);
            k += 1;
        } else {
            let at = if x == 0.0 { -f64::MIN_POSITIVE } else { x };
            values.push(payoff.h(at));
            error_bounds.push(0.0);
        }
    }
    Ok(HedgePayoff { x_grid: x_grid.to_vec(), values, error_bounds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceResidual {
    pub w: f64,
    /// `int_0^inf e^{-wx} g(x) dx` from the image.
    pub lhs: f64,
    /// `F(w)` by direct inner quadrature.
    pub rhs: f64,
    pub residual: f64,
    pub relative: f64,
    pub tail_estimate: f64,
}

/// Composite Simpson for uneven spacing; a trailing odd interval uses the
/// quadratic through the last three points.
fn simpson_uneven(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let pair = |i: usize| {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i] + (h0 + h1).powi(2) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2])
    };
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        acc += pair(i);
        i += 2;
    }
    if i + 1 < n {
        // Last interval [x_{n-2}, x_{n-1}] from the parabola through the last three points.
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let (y0, y1, y2) = (y[n - 3], y[n - 2], y[n - 1]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        acc += h1 / 6.0 * ((3.0 - h1 / (h0 + h1)) * y2 + (3.0 + h1 / h0) * y1 - h1 * h1 / (h0 * (h0 + h1)) * y0);
    }
    acc
}

/// Residuals of `int_0^inf e^{-wx} g(x) dx = F(w)` for each `w >= gamma + 0.5`.
/// The piece `[0, x_0]` uses the linear extrapolation of the first two points.
pub fn verify_laplace_identity(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    image: &SymmetryImage,
    w_list: &[f64],
) -> Result<Vec<LaplaceResidual>> {
    let gamma = image.params.gamma;
    let n = image.len();
    if n < 3 {
        return Err(WrpError::InsufficientGrid("need at least three grid points".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| image.x_grid[a].total_cmp(&image.x_grid[b]));
    let xs: Vec<f64> = order.iter().map(|&i| image.x_grid[i]).collect();
    let gs: Vec<f64> = order.iter().map(|&i| image.g_values[i]).collect();
    let mut out = Vec::with_capacity(w_list.len());
    for &w in w_list {
        if !(w >= gamma + 0.5) {
            return Err(WrpError::InsufficientGrid(format!("w = {w} must be at least gamma + 0.5 = {}", gamma + 0.5)));
        }
        let rhs = inner_integral(
            triplet,
            payoff,
            Complex64::new(w, 0.0),
            image.params.big_r,
            Tolerance::new(1e-15, 1e-12),
            image.params.floor_threshold,
        )?
        .value
        .re;
        let ys: Vec<f64> = xs.iter().zip(&gs).map(|(x, g)| (-w * x).exp() * g).collect();
        let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        let y_zero = ys[0] - slope * xs[0];
        let head = 0.5 * xs[0] * (y_zero + ys[0]);
        let lhs = head + simpson_uneven(&xs, &ys);
        let tail_estimate = ys[n - 1].abs() / (w - gamma);
        let tol = 1e-6 * (1.0 + rhs.abs());
        if tail_estimate > tol {
            return Err(WrpError::InsufficientGrid(format!(
                "tail beyond x = {} estimated at {tail_estimate:e} > {tol:e}",
                xs[n - 1]
            )));
        }
        let residual = (lhs - rhs).abs();
        out.push(LaplaceResidual { w, lhs, rhs, residual, relative: residual / rhs.abs().max(1e-300), tail_estimate });
    }
    Ok(out)
}
