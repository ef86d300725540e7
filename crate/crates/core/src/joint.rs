//! Joint law of `(X_T, sup_{s <= T} X_s)` and pairings `<g, p_T>`.
//!
//! For the indicator `h = 1_{(-inf, K]}` with image `g`,
//! `P(X_T <= K + x, sup X >= x) = E g(X_T - x)
//!   = (1/2pi) int e^{-lx + T psi(l)} F(l) du`, `l = gamma + iu`,
//! where `F` is the inner integral of the symmetry kernel. `F` depends on
//! neither `x` nor `T`, so one [`InnerIntegralCache`] serves every query.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{cdf, expect_payoff};
use crate::error::{Result, WrpError};
use crate::levy::{mirror_root_abscissa, LevyTriplet, DEFAULT_FLOOR_GRID};
use crate::payoff::{make_indicator, FourierPayoff, PayoffKind};
use crate::quad::{integrate, Tolerance};
use crate::symmetry::{
    check_compatible, eval_blocks, inner_integral, Block, ContourParams, Engine, DEFAULT_FLOOR_THRESHOLD,
};

pub const DEFAULT_STEP: f64 = 0.6;
pub const DEFAULT_JOINT_GAMMA: f64 = 4.0;
pub const DEFAULT_JOINT_QUAD_TOL: f64 = 1e-12;
/// Terms with `|e^{T psi(l)}| < TERM_EPS |e^{T psi(gamma)}|` are dropped.
pub const TERM_EPS: f64 = 1e-18;
/// Clipping to `[0, 1]` tolerates this much overshoot before failing.
pub const CLIP_SLACK: f64 = 1e-6;
pub const MAX_SENSITIVITY_ORDER: u32 = 4;
/// Uniform sums whose estimated aliasing error exceeds this (relative to
/// `1 + |value|`) are rejected.
pub const ALIAS_GUARD: f64 = 1e-2;

/// Outer Bromwich rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OuterRule {
    /// Trapezoidal sum on `u = j step`.
    Uniform { step: f64 },
    /// Adaptive Gauss-Kronrod over Chebyshev interpolants of `F`.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    pub gamma: f64,
    #[serde(rename = "R", with = "crate::symmetry::inf_as_null")]
    pub big_r: f64,
    pub quad_tol: f64,
    pub floor_threshold: f64,
    pub rule: OuterRule,
    /// `zeta` of the indicator preimage; defaults to the triplet's, or 1
    /// when that is 0.
    pub payoff_zeta: Option<f64>,
}

impl Default for JointParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_JOINT_GAMMA,
            big_r: f64::INFINITY,
            quad_tol: DEFAULT_JOINT_QUAD_TOL,
            floor_threshold: DEFAULT_FLOOR_THRESHOLD,
            rule: OuterRule::Uniform { step: DEFAULT_STEP },
            payoff_zeta: None,
        }
    }
}

impl JointParams {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_rule(mut self, rule: OuterRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_payoff_zeta(mut self, zeta: f64) -> Self {
        self.payoff_zeta = Some(zeta);
        self
    }

    /// Indicator `1_{(-inf, K]}` with this configuration's preimage `zeta`.
    pub fn indicator(&self, triplet: &LevyTriplet, strike: f64) -> Result<FourierPayoff> {
        let zeta = self.payoff_zeta.unwrap_or(if triplet.zeta > 0.0 { triplet.zeta } else { 1.0 });
        make_indicator(strike, zeta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLawQuery {
    #[serde(rename = "K")]
    pub strike: f64,
    pub x: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl JointLawQuery {
    pub fn new(strike: f64, x: f64, t: f64) -> Result<Self> {
        if !(strike < 0.0) {
            return Err(WrpError::InvalidStrike(strike));
        }
        if !(x.is_finite() && x >= 0.0) {
            return Err(WrpError::InvalidParameter(format!("barrier level x must be >= 0, got {x}")));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(WrpError::InvalidParameter(format!("horizon T must be > 0, got {t}")));
        }
        Ok(Self { strike, x, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbability {
    /// Clipped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
}

#[derive(Debug, Clone)]
enum Samples {
    Uniform { step: f64, f: Vec<Complex64>, psi: Vec<Complex64> },
    Blocks(Vec<Block>),
}

/// `F(gamma + iu)` on `[0, u_max]`, valid for horizons `T >= t_min`.
#[derive(Debug, Clone)]
pub struct InnerIntegralCache {
    pub gamma: f64,
    pub u_max: f64,
    pub t_min: f64,
    pub fingerprint: String,
    /// Largest real part of the kernel poles near the contour.
    pub abscissa: f64,
    strike: Option<f64>,
    triplet: LevyTriplet,
    samples: Samples,
}

/// SHA-256 of the serialized `(triplet, payoff, gamma, zeta, R, quad_tol, rule)`.
pub fn fingerprint(triplet: &LevyTriplet, payoff: &FourierPayoff, params: &JointParams) -> String {
    let text = serde_json::json!({
        "triplet": triplet,
        "payoff": payoff.descriptor(),
        "gamma": params.gamma,
        "zeta": payoff.zeta(),
        "R": if params.big_r.is_finite() { Some(params.big_r) } else { None },
        "quad_tol": params.quad_tol,
        "rule": params.rule,
    })
    .to_string();
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

/// Smallest `u` with `t Re(psi(gamma + iu) - psi(gamma)) < ln TERM_EPS`.
fn cutoff(triplet: &LevyTriplet, gamma: f64, t: f64) -> Result<f64> {
    let base = triplet.psi_unchecked(Complex64::new(gamma, 0.0)).re;
    let target = TERM_EPS.ln();
    let mut u: f64 = 1.0;
    while t * (triplet.psi_unchecked(Complex64::new(gamma, u)).re - base) > target {
        u *= 1.25;
        if u > 1e5 {
            return Err(WrpError::InvalidParameter(format!("Bromwich integrand does not decay for T = {t}")));
        }
    }
    Ok(u)
}

impl InnerIntegralCache {
    /// Tabulates `F` for `payoff` far enough out for every `T >= t_min`.
    pub fn build(triplet: &LevyTriplet, payoff: &FourierPayoff, params: &JointParams, t_min: f64) -> Result<Self> {
        check_compatible(triplet, payoff)?;
        if !(t_min.is_finite() && t_min > 0.0) {
            return Err(WrpError::InvalidParameter(format!("t_min must be > 0, got {t_min}")));
        }
        let u_max = cutoff(triplet, params.gamma, t_min)?;
        let contour = ContourParams {
            gamma: params.gamma,
            r: u_max,
            big_r: params.big_r,
            quad_tol: params.quad_tol,
            floor_threshold: params.floor_threshold,
            ..ContourParams::default()
        };
        contour.validate(triplet, payoff.zeta())?;
        let span = u_max.min(200.0);
        let shifted = LevyTriplet { zeta: payoff.zeta(), ..triplet.clone() };
        let abscissa = mirror_root_abscissa(&shifted, (-span, span), DEFAULT_FLOOR_GRID);
        let samples = match params.rule {
            OuterRule::Uniform { step } => {
                if !(step > 0.0) {
                    return Err(WrpError::InvalidParameter(format!("step must be > 0, got {step}")));
                }
                let n = (u_max / step).ceil() as usize;
                let lambdas: Vec<Complex64> = (0..=n).map(|j| Complex64::new(params.gamma, j as f64 * step)).collect();
                let f = lambdas
                    .par_iter()
                    .map(|&l| {
                        let tol = Tolerance::new(params.quad_tol, 1e-13);
                        Ok(inner_integral(triplet, payoff, l, params.big_r, tol, params.floor_threshold)?.value)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let psi = lambdas.iter().map(|&l| triplet.psi_unchecked(l)).collect();
                Samples::Uniform { step, f, psi }
            }
            OuterRule::Adaptive => {
                let engine = Engine {
                    triplet,
                    payoff,
                    gamma: params.gamma,
                    big_r: params.big_r,
                    quad_tol: params.quad_tol,
                    floor_threshold: params.floor_threshold,
                };
                Samples::Blocks(engine.sample(u_max)?)
            }
        };
        Ok(Self {
            gamma: params.gamma,
            u_max,
            t_min,
            fingerprint: fingerprint(triplet, payoff, params),
            abscissa,
            strike: payoff.strike(),
            triplet: triplet.clone(),
            samples,
        })
    }

    /// Bromwich nodes of a uniform cache.
    pub fn lambda_grid(&self) -> Vec<Complex64> {
        match &self.samples {
            Samples::Uniform { step, f, .. } => {
                (0..f.len()).map(|j| Complex64::new(self.gamma, j as f64 * step)).collect()
            }
            Samples::Blocks(_) => Vec::new(),
        }
    }

    /// Cached `F` values of a uniform cache.
    pub fn f_values(&self) -> &[Complex64] {
        match &self.samples {
            Samples::Uniform { f, .. } => f,
            Samples::Blocks(_) => &[],
        }
    }

    /// Number of inner integrals stored (nodes, or block nodes for the adaptive rule).
    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Uniform { f, .. } => f.len(),
            Samples::Blocks(b) => b.len() * 17,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails unless the cache was built for exactly this model and payoff.
    pub fn check(&self, triplet: &LevyTriplet, payoff: &FourierPayoff, params: &JointParams) -> Result<()> {
        let fp = fingerprint(triplet, payoff, params);
        if fp != self.fingerprint {
            return Err(WrpError::CacheMismatch(format!("cache {} does not match request {fp}", self.fingerprint)));
        }
        Ok(())
    }

    /// `(1/2pi) int w(l, psi(l)) e^{-lx + T psi(l)} F(l) du` over the whole line.
    fn bromwich<W: Fn(Complex64, Complex64) -> Complex64 + Sync>(
        &self,
        x: f64,
        t: f64,
        u_limit: f64,
        weight: W,
    ) -> Result<f64> {
        if t < self.t_min * (1.0 - 1e-12) {
            return Err(WrpError::InvalidParameter(format!("cache covers T >= {}, got T = {t}", self.t_min)));
        }
        let lead = t * self.triplet.psi_unchecked(Complex64::new(self.gamma, 0.0)).re - self.gamma * x;
        if lead.abs() > crate::symmetry::OVERFLOW_EXPONENT {
            return Err(WrpError::OverflowGuard(lead));
        }
        let term = |l: Complex64, psi: Complex64, f: Complex64| weight(l, psi) * (t * psi - l * x).exp() * f;
        match &self.samples {
            Samples::Uniform { step, f, psi } => {
                let mut acc = 0.5 * term(Complex64::new(self.gamma, 0.0), psi[0], f[0]).re;
                let n = if u_limit.is_finite() { f.len().min((u_limit / step).floor() as usize + 1) } else { f.len() };
                for j in 1..n {
                    acc += term(Complex64::new(self.gamma, j as f64 * step), psi[j], f[j]).re;
                }
                let value = acc * step / PI;
                let alias = self.aliasing_estimate(x, t, *step, f[0].norm());
                if alias > ALIAS_GUARD * (1.0 + value.abs()) {
                    return Err(WrpError::QuadratureFailure { err: alias, tol: ALIAS_GUARD * (1.0 + value.abs()) });
                }
                Ok(value)
            }
            Samples::Blocks(blocks) => {
                let integrand = |u: f64| {
                    let l = Complex64::new(self.gamma, u);
                    Complex64::new(term(l, self.triplet.psi_unchecked(l), eval_blocks(blocks, u)).re, 0.0)
                };
                let hi = self.u_max.min(u_limit);
                let breaks: Vec<f64> = (1..hi.ceil() as usize).map(|k| k as f64).collect();
                let scale = lead.exp();
                let q = integrate(integrand, 0.0, hi, &breaks, Tolerance::new(1e-15 * scale, 1e-13), 20_000);
                Ok(q.value.re / PI)
            }
        }
    }

    /// Order-of-magnitude aliasing error of the uniform rule: the
    /// trapezoidal error on a strip of half-width `d` is about
    /// `2 e^{-2pi d/step} int |f|` on the shifted lines. The strip reaches
    /// left to the kernel poles; on the right `d` is optimised against the
    /// growth of `e^{T psi}`. `|F(gamma)|` stands in for `|F|`, and the
    /// Gaussian width of `e^{T psi}` for the length of the line.
    fn aliasing_estimate(&self, x: f64, t: f64, step: f64, f_abs: f64) -> f64 {
        let log_m = |v: f64| t * self.triplet.psi_unchecked(Complex64::new(v, 0.0)).re - v * x;
        let width = (2.0 * PI / (t * self.triplet.sigma * self.triplet.sigma)).sqrt();
        let right = (1..=400)
            .map(|k| {
                let d = 0.05 * k as f64;
                -2.0 * PI * d / step + log_m(self.gamma + d)
            })
            .fold(f64::INFINITY, f64::min);
        let d = self.gamma - self.abscissa.max(-self.triplet.zeta);
        let left = -2.0 * PI * d / step + log_m(self.gamma - d);
        2.0 * f_abs * width / (2.0 * PI) * (right.exp() + left.exp())
    }

    /// `E g(X_T - x)` for the cached payoff's image `g`.
    pub fn pairing(&self, x: f64, t: f64) -> Result<f64> {
        self.bromwich(x, t, f64::INFINITY, |_, _| Complex64::new(1.0, 0.0))
    }

    /// [`Self::pairing`] with the outer integral cut at `|u| <= r`.
    pub fn pairing_truncated(&self, x: f64, t: f64, r: f64) -> Result<f64> {
        self.bromwich(x, t, r, |_, _| Complex64::new(1.0, 0.0))
    }

    /// Joint probability for an indicator cache.
    pub fn joint(&self, q: &JointLawQuery) -> Result<JointProbability> {
        if self.strike != Some(q.strike) {
            return Err(WrpError::CacheMismatch(format!("cache strike {:?} != query K = {}", self.strike, q.strike)));
        }
        let raw = self.pairing(q.x, q.t)?;
        if !(-CLIP_SLACK..=1.0 + CLIP_SLACK).contains(&raw) {
            return Err(WrpError::QuadratureFailure { err: (raw - raw.clamp(0.0, 1.0)).abs(), tol: CLIP_SLACK });
        }
        Ok(JointProbability { value: raw.clamp(0.0, 1.0), raw })
    }

    /// `d^{nx}/dx^{nx} d^{nt}/dT^{nt}` of the joint probability: the outer
    /// integrand gains `(-l)^{nx} psi(l)^{nt}`.
    pub fn sensitivity(&self, q: &JointLawQuery, order_x: u32, order_t: u32) -> Result<f64> {
        if order_x + order_t > MAX_SENSITIVITY_ORDER {
            return Err(WrpError::InvalidParameter(format!(
                "total derivative order {} exceeds {MAX_SENSITIVITY_ORDER}",
                order_x + order_t
            )));
        }
        if self.strike != Some(q.strike) {
            return Err(WrpError::CacheMismatch(format!("cache strike {:?} != query K = {}", self.strike, q.strike)));
        }
        self.bromwich(q.x, q.t, f64::INFINITY, |l, psi| (-l).powu(order_x) * psi.powu(order_t))
    }
}

/// Joint probability against a prebuilt cache for `payoff = 1_{(-inf, K]}`.
pub fn joint_probability(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    query: &JointLawQuery,
    cache: &InnerIntegralCache,
    params: &JointParams,
) -> Result<JointProbability> {
    if !matches!(payoff.kind(), PayoffKind::Indicator { .. }) {
        return Err(WrpError::InvalidParameter("joint probabilities need an indicator payoff".into()));
    }
    cache.check(triplet, payoff, params)?;
    cache.joint(query)
}

/// One-shot joint probability (builds its own cache).
pub fn joint_probability_once(
    triplet: &LevyTriplet,
    query: &JointLawQuery,
    params: &JointParams,
) -> Result<JointProbability> {
    let payoff = params.indicator(triplet, query.strike)?;
    let cache = InnerIntegralCache::build(triplet, &payoff, params, query.t)?;
    cache.joint(query)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSurface {
    #[serde(rename = "K")]
    pub strike: f64,
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `values[i][j]` at `(t_grid[i], x_grid[j])`.
    pub values: Vec<Vec<f64>>,
    pub cache_nodes: usize,
    pub build_seconds: f64,
    pub eval_seconds: f64,
}

/// Joint probabilities on `t_grid x x_grid` from one shared cache.
pub fn joint_surface(
    triplet: &LevyTriplet,
    strike: f64,
    x_grid: &[f64],
    t_grid: &[f64],
    params: &JointParams,
) -> Result<JointSurface> {
    let queries: Vec<JointLawQuery> = t_grid
        .iter()
        .flat_map(|&t| x_grid.iter().map(move |&x| JointLawQuery::new(strike, x, t)))
        .collect::<Result<_>>()?;
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let start = Instant::now();
    if queries.is_empty() {
        return Ok(JointSurface {
            strike,
            x_grid: x_grid.to_vec(),
            t_grid: t_grid.to_vec(),
            values: vec![Vec::new(); t_grid.len()],
            cache_nodes: 0,
            build_seconds: 0.0,
            eval_seconds: 0.0,
        });
    }
    let payoff = params.indicator(triplet, strike)?;
    let cache = InnerIntegralCache::build(triplet, &payoff, params, t_min)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let flat = queries.par_iter().map(|q| Ok(cache.joint(q)?.value)).collect::<Result<Vec<f64>>>()?;
    let eval_seconds = start.elapsed().as_secs_f64();
    let values = if x_grid.is_empty() {
        vec![Vec::new(); t_grid.len()]
    } else {
        flat.chunks(x_grid.len()).map(|c| c.to_vec()).collect()
    };
    Ok(JointSurface {
        strike,
        x_grid: x_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        values,
        cache_nodes: cache.len(),
        build_seconds,
        eval_seconds,
    })
}

/// Mixed derivative of the joint probability in `x` and `T`.
pub fn sensitivity(
    triplet: &LevyTriplet,
    strike: f64,
    x: f64,
    t: f64,
    order_x: u32,
    order_t: u32,
    params: &JointParams,
) -> Result<f64> {
    let q = JointLawQuery::new(strike, x, t)?;
    let payoff = params.indicator(triplet, strike)?;
    let cache = InnerIntegralCache::build(triplet, &payoff, params, t)?;
    cache.sensitivity(&q, order_x, order_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub t: f64,
    /// `<g, p_t>` by the Bromwich sum.
    pub pairing: f64,
    /// `int h p_t` from the inverted density.
    pub expectation: f64,
    pub difference: f64,
}

/// Both sides of `<g, p_t> = E h(X_t)`.
pub fn pair_g_with_density(
    triplet: &LevyTriplet,
    payoff: &FourierPayoff,
    t: f64,
    params: &JointParams,
) -> Result<PairingCheck> {
    let cache = InnerIntegralCache::build(triplet, payoff, params, t)?;
    let pairing = cache.pairing(0.0, t)?;
    let expectation = expect_payoff(triplet, payoff, t)?.value;
    Ok(PairingCheck { t, pairing, expectation, difference: (pairing - expectation).abs() })
}

/// `P(X_T <= K)`, the `x = 0` column of the joint law.
pub fn marginal_cdf(triplet: &LevyTriplet, strike: f64, t: f64) -> Result<f64> {
    cdf(triplet, t, strike)
}
