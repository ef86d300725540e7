//! Monte Carlo oracle for `X_t = (mu + beta/alpha) t + sigma B_t - Gamma_t`,
//! the process whose compensated Laplace exponent is `psi`.
//!
//! Increments are a Normal draw minus a `Gamma(beta dt, rate alpha)` draw
//! (jumps below 1e-30 flushed), so the only material bias is in the running
//! maximum. Without bridge sampling the maximum is taken over grid nodes and
//! is biased low. With bridge sampling the diffusive part of each step is a
//! Brownian bridge whose maximum is drawn exactly; jumps sit at step ends.
//!
//! Each path owns a Xoshiro256++ stream seeded from a bijective mix of the
//! seed and the path index, so results do not depend on thread count or
//! scheduling.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WrpError};
use crate::levy::{JumpMeasure, LevyTriplet};
use crate::payoff::FourierPayoff;
use crate::symmetry::SymmetryImage;

pub const MIN_PATHS: usize = 1_000;
pub const MIN_STEPS: usize = 100;
pub const BATCH_MAGIC: &[u8; 4] = b"WRPB";
pub const BATCH_VERSION: u32 = 1;

/// `ln U >= -37.5` for every `U = 1 - k 2^{-53} > 0`.
const LOG_U_FLOOR: f64 = 37.5;
/// `ln 1e-30`: Gamma draws with `U^{1/shape}` below `1e-30` are flushed to
/// zero. The expected flushed mass per path is at most `beta T 1e-30 / alpha`.
const GAMMA_FLUSH_LOG: f64 = -69.077_552_789_821_37;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, n_steps: usize, t: f64, seed: u64, bridge_correction: bool) -> Result<Self> {
        let c = SimConfig { n_paths, n_steps, t, seed, bridge_correction };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(WrpError::InvalidParameter(format!("n_paths must be >= {MIN_PATHS}, got {}", self.n_paths)));
        }
        if self.n_steps < MIN_STEPS {
            return Err(WrpError::InvalidParameter(format!("n_steps must be >= {MIN_STEPS}, got {}", self.n_steps)));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(WrpError::InvalidParameter(format!("T must be > 0, got {}", self.t)));
        }
        Ok(())
    }
}

/// Sign of the running-maximum discretization bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxBias {
    /// Node maxima under-sample the path supremum.
    Low,
    /// Exact for the diffusive part; jump placement makes the sign uncertain.
    Unsigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub terminal: Vec<f64>,
    /// Includes `X_0 = 0`, so `running_max >= max(terminal, 0)`.
    pub running_max: Vec<f64>,
    pub config: SimConfig,
    pub bias: MaxBias,
}

impl PathBatch {
    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    /// Columnar export: 16-byte header (magic, version u32, n_paths u64, all
    /// little-endian), then the terminal and running-max columns as f64.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BATCH_MAGIC)?;
        w.write_all(&BATCH_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.len());
        for v in self.terminal.iter().chain(&self.running_max) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Reads the columns written by [`PathBatch::write_to`].
pub fn read_batch_columns<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != BATCH_MAGIC {
        return Err(WrpError::InvalidParameter("not a WRPB batch file".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != BATCH_VERSION {
        return Err(WrpError::InvalidParameter(format!("unsupported batch version {version}")));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let mut body = vec![0u8; 16 * n];
    r.read_exact(&mut body)?;
    let column = |k: usize| -> Vec<f64> {
        body[8 * n * k..8 * n * (k + 1)]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    };
    Ok((column(0), column(1)))
}

/// `Gamma(shape, rate)` increments by `G_{1+shape} U^{1/shape} / rate`.
/// Draws with `U^{1/shape} < 1e-30` are flushed to zero; the others occur
/// independently per step with probability `1 - gate`, so the gap between
/// them is geometric and `U` is uniform on `(gate, 1]` where they occur.
struct Jumps {
    inv_shape: f64,
    inv_rate: f64,
    gate: f64,
    log_gate: f64,
    big: Gamma<f64>,
}

impl Jumps {
    /// Steps to skip before the next nonzero jump.
    #[inline]
    fn gap(&self, rng: &mut PathRng) -> usize {
        (open_uniform(rng).ln() / self.log_gate) as usize
    }

    #[inline]
    fn size(&self, rng: &mut PathRng) -> f64 {
        let u = self.gate + (1.0 - self.gate) * open_uniform(rng);
        self.big.sample(rng) * (u.ln() * self.inv_shape).exp() * self.inv_rate
    }
}

struct Stepper {
    drift: f64,
    vol: f64,
    var: f64,
    /// `2 / var`.
    two_over_var: f64,
    bridge: bool,
    jumps: Option<Jumps>,
}

/// Uniform on `(0, 1]`.
#[inline]
fn open_uniform(rng: &mut PathRng) -> f64 {
    1.0 - rng.random::<f64>()
}

impl Stepper {
    fn new(triplet: &LevyTriplet, config: &SimConfig) -> Result<Self> {
        let dt = config.t / config.n_steps as f64;
        // The exponent is compensated, so the jump mean beta/alpha is returned in the drift.
        let mut drift = triplet.mu;
        let jumps = match triplet.jumps {
            JumpMeasure::None => None,
            JumpMeasure::GammaNegative { alpha, beta } => {
                drift += beta / alpha;
                let shape = beta * dt;
                let big = Gamma::new(1.0 + shape, 1.0)
                    .map_err(|e| WrpError::InvalidParameter(format!("Gamma increment law: {e}")))?;
                let log_gate = GAMMA_FLUSH_LOG * shape;
                Some(Jumps { inv_shape: 1.0 / shape, inv_rate: 1.0 / alpha, gate: log_gate.exp(), log_gate, big })
            }
            JumpMeasure::TabulatedDensity { .. } => return Err(WrpError::UnsupportedJumpKind),
        };
        let var = triplet.sigma * triplet.sigma * dt;
        Ok(Stepper {
            drift: drift * dt,
            vol: triplet.sigma * dt.sqrt(),
            var,
            two_over_var: 2.0 / var,
            bridge: config.bridge_correction,
            jumps,
        })
    }

    /// Bridge maximum from `a` to `b` over one step.
    #[inline]
    fn bridge_max(&self, a: f64, b: f64, u: f64) -> f64 {
        let d = b - a;
        0.5 * (a + b + (d * d - 2.0 * self.var * u.ln()).sqrt())
    }

    fn path(&self, rng: &mut PathRng, n_steps: usize) -> (f64, f64) {
        let mut x = 0.0;
        let mut m: f64 = 0.0;
        let mut skip = self.jumps.as_ref().map_or(usize::MAX, |j| j.gap(rng));
        for _ in 0..n_steps {
            let z: f64 = StandardNormal.sample(rng);
            let b = x + self.drift + self.vol * z;
            if self.bridge {
                if b > m {
                    m = self.bridge_max(x, b, open_uniform(rng));
                } else {
                    // The bridge exceeds m iff ln U < -2(m - x)(m - b) / var.
                    let e = (m - x) * (m - b) * self.two_over_var;
                    if e < LOG_U_FLOOR {
                        let u = open_uniform(rng);
                        if u.ln() < -e {
                            m = self.bridge_max(x, b, u);
                        }
                    }
                }
            }
            x = b;
            if skip == 0 {
                if let Some(j) = &self.jumps {
                    x -= j.size(rng);
                    skip = j.gap(rng);
                }
            } else {
                skip -= 1;
            }
            if !self.bridge {
                m = m.max(x);
            }
        }
        (x, m)
    }
}

type PathRng = Xoshiro256PlusPlus;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bijective in `index` for a fixed seed, so paths never share a stream seed.
fn path_rng(seed: u64, index: usize) -> PathRng {
    PathRng::seed_from_u64(splitmix64(splitmix64(seed) ^ index as u64))
}

/// Simulates `config.n_paths` independent paths.
pub fn simulate(triplet: &LevyTriplet, config: &SimConfig) -> Result<PathBatch> {
    triplet.validate()?;
    config.validate()?;
    let stepper = Stepper::new(triplet, config)?;
    let pairs: Vec<(f64, f64)> = (0..config.n_paths)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| stepper.path(&mut path_rng(config.seed, i), config.n_steps))
        .collect();
    let (terminal, running_max) = pairs.into_iter().unzip();
    let bias = if config.bridge_correction { MaxBias::Unsigned } else { MaxBias::Low };
    Ok(PathBatch { terminal, running_max, config: *config, bias })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

fn require_nonempty(batch: &PathBatch) -> Result<()> {
    if batch.is_empty() {
        return Err(WrpError::InvalidParameter("empty path batch".into()));
    }
    Ok(())
}

/// Sample mean and standard error, summed in path order.
fn mean_se(values: impl Iterator<Item = f64>) -> Estimate {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Estimate { value: mean, se: (var / n).sqrt() }
}

/// Frequency of `{X_T <= K + x, sup X >= x}` with binomial standard error.
pub fn estimate_joint(batch: &PathBatch, strike: f64, x: f64) -> Result<Estimate> {
    require_nonempty(batch)?;
    let hits = batch.terminal.iter().zip(&batch.running_max).filter(|(&t, &m)| t <= strike + x && m >= x).count();
    let n = batch.len() as f64;
    let p = hits as f64 / n;
    Ok(Estimate { value: p, se: (p * (1.0 - p) / n).sqrt() })
}

/// `E h(S_T) 1{sup S < 0}` for `S = x0 + X` started at `x0 <= 0`.
pub fn estimate_barrier_price<F: Fn(f64) -> f64>(batch: &PathBatch, h: F, x0: f64) -> Result<Estimate> {
    require_nonempty(batch)?;
    check_start(x0)?;
    Ok(mean_se(
        batch.terminal.iter().zip(&batch.running_max).map(|(&t, &m)| if x0 + m < 0.0 { h(x0 + t) } else { 0.0 }),
    ))
}

/// `E f(S_T)` for `S = x0 + X` on the same paths.
pub fn estimate_european<F: Fn(f64) -> Result<f64>>(batch: &PathBatch, f: F, x0: f64) -> Result<Estimate> {
    require_nonempty(batch)?;
    check_start(x0)?;
    let values: Vec<f64> = batch.terminal.iter().map(|&t| f(x0 + t)).collect::<Result<_>>()?;
    Ok(mean_se(values.into_iter()))
}

fn check_start(x0: f64) -> Result<()> {
    if !(x0.is_finite() && x0 <= 0.0) {
        return Err(WrpError::InvalidParameter(format!("start level must be <= 0 (barrier at 0), got {x0}")));
    }
    Ok(())
}

/// Both sides of the static-hedge identity on common paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeCheck {
    pub barrier: Estimate,
    pub european: Estimate,
    /// `sqrt(se_barrier^2 + se_european^2)`.
    pub combined_se: f64,
    /// Standard error of the per-path difference.
    pub paired_se: f64,
    pub difference: f64,
}

/// Barrier price of `payoff` against `E[h(S_T) - g(S_T)]` with `g` linearly
/// interpolated from `image`.
pub fn hedge_check(batch: &PathBatch, payoff: &FourierPayoff, image: &SymmetryImage, x0: f64) -> Result<HedgeCheck> {
    let barrier = estimate_barrier_price(batch, |s| payoff.h(s), x0)?;
    let hedge = |s: f64| -> Result<f64> { Ok(if s < 0.0 { payoff.h(s) } else { -image.interpolate(s)? }) };
    let european = estimate_european(batch, hedge, x0)?;
    let diffs: Vec<f64> = batch
        .terminal
        .iter()
        .zip(&batch.running_max)
        .map(|(&t, &m)| {
            let s = x0 + t;
            let knocked = if x0 + m < 0.0 { payoff.h(s) } else { 0.0 };
            Ok(knocked - hedge(s)?)
        })
        .collect::<Result<_>>()?;
    let paired = mean_se(diffs.into_iter());
    Ok(HedgeCheck {
        barrier,
        european,
        combined_se: barrier.se.hypot(european.se),
        paired_se: paired.se,
        difference: barrier.value - european.value,
    })
}

/// Sample mean and variance of `X_T` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Estimate,
    pub variance: Estimate,
}

pub fn terminal_moments(batch: &PathBatch) -> Result<Moments> {
    require_nonempty(batch)?;
    let mean = mean_se(batch.terminal.iter().copied());
    let n = batch.len() as f64;
    let (m2, m4) = batch.terminal.iter().fold((0.0, 0.0), |(a, b), &t| {
        let d = (t - mean.value).powi(2);
        (a + d, b + d * d)
    });
    let var = m2 / (n - 1.0);
    let var_se = ((m4 / n - (m2 / n).powi(2)) / n).max(0.0).sqrt();
    Ok(Moments { mean, variance: Estimate { value: var, se: var_se } })
}

pub fn mean_running_max(batch: &PathBatch) -> Result<Estimate> {
    require_nonempty(batch)?;
    Ok(mean_se(batch.running_max.iter().copied()))
}
