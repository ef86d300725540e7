//! Verification suite: analytic identities and Monte Carlo agreement checks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::joint::{joint_probability_once, marginal_cdf, pair_g_with_density, JointLawQuery, JointParams, OuterRule};
use crate::levy::LevyTriplet;
use crate::mc::{estimate_barrier_price, estimate_joint, hedge_check, simulate, PathBatch, SimConfig};
use crate::payoff::{make_indicator, make_put, FourierPayoff};
use crate::symmetry::{compute_g_image, verify_laplace_identity, ContourParams, SymmetryImage};

pub const SCHEMA_VERSION: u32 = 1;

/// Put strike and start level shared by the checks.
pub const STRIKE: f64 = -0.2;
pub const PREIMAGE_ZETA: f64 = 0.9;
pub const HEDGE_START: f64 = -0.1;
pub const JOINT_LEVEL: f64 = 0.1;
/// Outer truncation for the Brownian reflection check (R = inf).
pub const REFLECTION_R: f64 = 4_000.0;
pub const REFLECTION_QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Small Monte Carlo batches; seconds.
    Quick,
    /// Monte Carlo at 10^6 paths and 10^4 steps; minutes.
    Full,
}

impl Suite {
    /// `(paths, fine steps, coarse steps)`; the coarse run sets the bias allowance.
    pub fn mc_sizes(self) -> (usize, usize, usize) {
        match self {
            Suite::Quick => (100_000, 1_000, 100),
            Suite::Full => (1_000_000, 10_000, 1_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn timed<F: FnOnce() -> Result<(f64, f64, String)>>(name: &str, upper_bound: bool, f: F) -> Check {
    let start = Instant::now();
    let outcome = f();
    let runtime_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((value, tolerance, detail)) => {
            let pass = if upper_bound { value < tolerance } else { value <= tolerance };
            Check { name: name.into(), value, tolerance, pass: pass && value.is_finite(), runtime_seconds, detail }
        }
        Err(e) => Check {
            name: name.into(),
            value: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            runtime_seconds,
            detail: format!("error: {e}"),
        },
    }
}

fn example_put() -> Result<FourierPayoff> {
    make_put(STRIKE, PREIMAGE_ZETA)
}

/// Max `|g(x) - h(-x)|` over `x = 0.1, ..., 2.0` for standard Brownian motion.
pub fn pure_bm_reflection() -> Result<(f64, f64, String)> {
    let bm = LevyTriplet::brownian(0.0, 1.0)?;
    let put = example_put()?;
    let grid: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let params = ContourParams::new(4.0, REFLECTION_R, f64::INFINITY).with_quad_tol(REFLECTION_QUAD_TOL);
    let image = compute_g_image(&bm, &put, &grid, &params)?;
    let (worst, at) = grid
        .iter()
        .zip(&image.g_values)
        .map(|(&x, &g)| ((g - put.h(-x)).abs(), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    Ok((worst, 1e-4, format!("worst at x = {at}, r = {REFLECTION_R}")))
}

/// Image of the example put on `0.01, 0.02, ..., x_max` with `r = R = 60`.
pub fn example_image(x_max: f64) -> Result<SymmetryImage> {
    let n = (x_max / 0.01).ceil() as usize;
    let grid: Vec<f64> = (1..=n).map(|k| 0.01 * k as f64).collect();
    compute_g_image(&LevyTriplet::example(), &example_put()?, &grid, &ContourParams::square(4.0, 60.0))
}

/// Largest relative residual of the Laplace identity at `w = 4.5, 5, 6`.
pub fn laplace_identity() -> Result<(f64, f64, String)> {
    let image = example_image(7.0)?;
    let res = verify_laplace_identity(&LevyTriplet::example(), &example_put()?, &image, &[4.5, 5.0, 6.0])?;
    let worst = res.iter().map(|r| r.relative).fold(0.0, f64::max);
    let detail = res.iter().map(|r| format!("w = {}: {:.3e}", r.w, r.relative)).collect::<Vec<_>>().join("; ");
    Ok((worst, 1e-3, detail))
}

/// Largest `|<g, p_t> - E h(X_t)| / (1 + |E h(X_t)|)` for the put and the
/// indicator at `t = 0.25, 1, 4`.
pub fn pairing_identity() -> Result<(f64, f64, String)> {
    let t = LevyTriplet::example();
    let params = JointParams::default().with_rule(OuterRule::Adaptive);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, payoff) in [("put", example_put()?), ("indicator", make_indicator(STRIKE, PREIMAGE_ZETA)?)] {
        for horizon in [0.25, 1.0, 4.0] {
            let c = pair_g_with_density(&t, &payoff, horizon, &params)?;
            let rel = c.difference / (1.0 + c.expectation.abs());
            worst = worst.max(rel);
            detail.push(format!("{name} t = {horizon}: {rel:.2e}"));
        }
    }
    Ok((worst, 1e-4, detail.join("; ")))
}

/// `|P(X_1 <= K, sup X >= 0) - P(X_1 <= K)|`.
pub fn x0_collapse() -> Result<(f64, f64, String)> {
    let t = LevyTriplet::example();
    let joint = joint_probability_once(&t, &JointLawQuery::new(STRIKE, 0.0, 1.0)?, &JointParams::default())?.value;
    let marginal = marginal_cdf(&t, STRIKE, 1.0)?;
    Ok(((joint - marginal).abs(), 1e-5, format!("joint {joint:.17e}, marginal {marginal:.17e}")))
}

/// Fine and coarse bridge-corrected batches of the example model at `T = 1`.
pub struct McBatches {
    pub fine: PathBatch,
    pub coarse: PathBatch,
}

pub fn mc_batches(suite: Suite, seed: u64) -> Result<McBatches> {
    let (paths, fine, coarse) = suite.mc_sizes();
    let t = LevyTriplet::example();
    Ok(McBatches {
        fine: simulate(&t, &SimConfig::new(paths, fine, 1.0, seed, true)?)?,
        coarse: simulate(&t, &SimConfig::new(paths, coarse, 1.0, seed, true)?)?,
    })
}

/// `|analytic - MC|` against `3 SE + |MC_fine - MC_coarse|`.
pub fn mc_joint(batches: &McBatches) -> Result<(f64, f64, String)> {
    let t = LevyTriplet::example();
    let q = JointLawQuery::new(STRIKE, JOINT_LEVEL, 1.0)?;
    let analytic = joint_probability_once(&t, &q, &JointParams::default())?.value;
    let fine = estimate_joint(&batches.fine, STRIKE, JOINT_LEVEL)?;
    let coarse = estimate_joint(&batches.coarse, STRIKE, JOINT_LEVEL)?;
    let allowance = (fine.value - coarse.value).abs();
    Ok((
        (analytic - fine.value).abs(),
        3.0 * fine.se + allowance,
        format!("analytic {analytic:.6}, mc {:.6} +- {:.2e}, allowance {allowance:.2e}", fine.value, fine.se),
    ))
}

/// Barrier price against `E[h - g]` on common paths started at `-0.1`.
pub fn mc_hedge(batches: &McBatches) -> Result<(f64, f64, String)> {
    let put = example_put()?;
    let s_max = batches.fine.terminal.iter().cloned().fold(0.0, f64::max) + HEDGE_START;
    let image = example_image(s_max.max(0.1) + 0.01)?;
    let check = hedge_check(&batches.fine, &put, &image, HEDGE_START)?;
    let coarse = estimate_barrier_price(&batches.coarse, |s| put.h(s), HEDGE_START)?;
    let allowance = (check.barrier.value - coarse.value).abs();
    Ok((
        check.difference.abs(),
        3.0 * check.combined_se + allowance,
        format!(
            "barrier {:.6} +- {:.2e}, hedge {:.6} +- {:.2e}, allowance {allowance:.2e}",
            check.barrier.value, check.barrier.se, check.european.value, check.european.se
        ),
    ))
}

/// Least-squares slope of `log |g_r(1) - g_240(1)|` against `log r`.
pub fn convergence_slope() -> Result<(f64, f64, String)> {
    let t = LevyTriplet::example();
    let put = example_put()?;
    let g =
        |r: f64| -> Result<f64> { Ok(compute_g_image(&t, &put, &[1.0], &ContourParams::square(4.0, r))?.g_values[0]) };
    let reference = g(240.0)?;
    let rs: [f64; 4] = [15.0, 30.0, 60.0, 120.0];
    let mut pts = Vec::new();
    for r in rs {
        pts.push((r.ln(), (g(r)? - reference).abs().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok((slope, -0.8, format!("g_240(1) = {reference:.17e}")))
}

/// Runs every check; the Monte Carlo batches are shared by `mc_joint` and `mc_hedge`.
pub fn run_suite(suite: Suite, seed: u64) -> VerifyReport {
    let mut checks = vec![
        timed("laplace_identity", true, laplace_identity),
        timed("pure_bm_reflection", true, pure_bm_reflection),
        timed("pairing_identity", true, pairing_identity),
        timed("x0_collapse", true, x0_collapse),
    ];
    let start = Instant::now();
    match mc_batches(suite, seed) {
        Ok(b) => {
            let sim = start.elapsed().as_secs_f64();
            let mut joint = timed("mc_joint", false, || mc_joint(&b));
            joint.runtime_seconds += sim;
            checks.push(joint);
            checks.push(timed("mc_hedge", false, || mc_hedge(&b)));
        }
        Err(e) => {
            for name in ["mc_joint", "mc_hedge"] {
                checks.push(timed(name, false, || Err(crate::error::WrpError::InvalidParameter(e.to_string()))));
            }
        }
    }
    checks.push(timed("convergence_slope", false, convergence_slope));
    let pass = checks.iter().all(|c| c.pass);
    VerifyReport { schema_version: SCHEMA_VERSION, suite, seed, checks, pass }
}
