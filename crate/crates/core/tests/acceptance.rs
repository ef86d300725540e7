//! Acceptance criteria AC1 to AC9. Runs without the libtest harness so each
//! criterion prints one PASS/FAIL line; the process fails if any criterion does.

use std::time::Instant;

use wrp_core::density::cdf;
use wrp_core::joint::{
    joint_probability_once, joint_surface, pair_g_with_density, sensitivity, JointLawQuery, JointParams, OuterRule,
};
use wrp_core::levy::LevyTriplet;
use wrp_core::mc::{estimate_barrier_price, estimate_joint, hedge_check, simulate, PathBatch, SimConfig};
use wrp_core::payoff::{make_indicator, make_put};
use wrp_core::symmetry::{compute_g_image, verify_laplace_identity, ContourParams};

const K: f64 = -0.2;
const ZETA: f64 = 0.9;
const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    line: String,
}

fn report(id: &str, pass: bool, line: String) -> Outcome {
    println!("{id} {} {line}", if pass { "PASS" } else { "FAIL" });
    Outcome { pass, line }
}

/// Standard BM, put K = -0.2: the image is the mirrored payoff `(x - 0.2)^+`.
fn ac1() -> Outcome {
    let start = Instant::now();
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let put = make_put(K, ZETA).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let params = ContourParams::new(4.0, 4_000.0, f64::INFINITY).with_quad_tol(1e-8);
    let worst = match compute_g_image(&bm, &put, &grid, &params) {
        Ok(img) => grid.iter().zip(&img.g_values).map(|(&x, &g)| (g - (x + K).max(0.0)).abs()).fold(0.0, f64::max),
        Err(e) => return report("AC1", false, format!("pure-BM reflection: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    report(
        "AC1",
        worst < 1e-4 && secs < 10.0,
        format!("pure-BM reflection: max |g(x) - h(-x)| = {worst:.3e} (< 1e-4), {secs:.2} s (< 10 s)"),
    )
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let t = LevyTriplet::example();
    let put = make_put(K, ZETA).unwrap();
    let grid: Vec<f64> = (1..=700).map(|k| 0.01 * k as f64).collect();
    let res = compute_g_image(&t, &put, &grid, &ContourParams::square(4.0, 60.0))
        .and_then(|img| verify_laplace_identity(&t, &put, &img, &[4.5, 5.0, 6.0]));
    let res = match res {
        Ok(r) => r,
        Err(e) => return report("AC2", false, format!("Laplace identity: {e}")),
    };
    let worst = res.iter().map(|r| r.relative).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    report(
        "AC2",
        res.len() == 3 && worst < 1e-3 && secs < 30.0,
        format!("Laplace identity: worst relative residual over w = 4.5, 5, 6 is {worst:.3e} (< 1e-3), {secs:.2} s (< 30 s)"),
    )
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let t = LevyTriplet::example();
    let params = JointParams::default().with_rule(OuterRule::Adaptive);
    let mut worst: f64 = 0.0;
    for payoff in [make_put(K, ZETA).unwrap(), make_indicator(K, ZETA).unwrap()] {
        for horizon in [0.25, 1.0, 4.0] {
            match pair_g_with_density(&t, &payoff, horizon, &params) {
                Ok(c) => worst = worst.max(c.difference / (1.0 + c.expectation.abs())),
                Err(e) => return report("AC3", false, format!("pairing identity: t = {horizon}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "AC3",
        worst < 1e-4 && secs < 60.0,
        format!("pairing identity: worst |<g,p_t> - E h| / (1 + |E h|) = {worst:.3e} (< 1e-4), {secs:.2} s (< 60 s)"),
    )
}

fn ac4() -> Outcome {
    let t = LevyTriplet::example();
    let q = JointLawQuery::new(K, 0.0, 1.0).unwrap();
    let joint = joint_probability_once(&t, &q, &JointParams::default()).map(|p| p.value);
    let marginal = cdf(&t, 1.0, K);
    match (joint, marginal) {
        (Ok(j), Ok(m)) => {
            let d = (j - m).abs();
            report("AC4", d < 1e-5, format!("x = 0 collapse: |joint - P(X_1 <= K)| = {d:.3e} (< 1e-5)"))
        }
        (j, m) => report("AC4", false, format!("x = 0 collapse: {j:?} / {m:?}")),
    }
}

struct Batches {
    fine: PathBatch,
    coarse: PathBatch,
    seconds: f64,
}

fn batches() -> Batches {
    let start = Instant::now();
    let t = LevyTriplet::example();
    let fine = simulate(&t, &SimConfig::new(1_000_000, 10_000, 1.0, SEED, true).unwrap()).unwrap();
    let coarse = simulate(&t, &SimConfig::new(1_000_000, 1_000, 1.0, SEED, true).unwrap()).unwrap();
    Batches { fine, coarse, seconds: start.elapsed().as_secs_f64() }
}

fn ac5(b: &Batches) -> Outcome {
    let start = Instant::now();
    let t = LevyTriplet::example();
    let analytic = match joint_probability_once(&t, &JointLawQuery::new(K, 0.1, 1.0).unwrap(), &JointParams::default())
    {
        Ok(p) => p.value,
        Err(e) => return report("AC5", false, format!("MC joint law: {e}")),
    };
    let fine = estimate_joint(&b.fine, K, 0.1).unwrap();
    let coarse = estimate_joint(&b.coarse, K, 0.1).unwrap();
    let allowance = (fine.value - coarse.value).abs();
    let tol = 3.0 * fine.se + allowance;
    let d = (analytic - fine.value).abs();
    let secs = b.seconds + start.elapsed().as_secs_f64();
    report(
        "AC5",
        d <= tol && secs < 300.0,
        format!(
            "MC joint law: analytic {analytic:.6} vs MC {:.6} (SE {:.2e}); |diff| = {d:.3e} <= 3 SE + allowance {allowance:.2e} = {tol:.3e}, {secs:.1} s (< 300 s)",
            fine.value, fine.se
        ),
    )
}

fn ac6(b: &Batches) -> Outcome {
    let start = Instant::now();
    let t = LevyTriplet::example();
    let put = make_put(K, ZETA).unwrap();
    let x0 = -0.1;
    let s_max = b.fine.terminal.iter().cloned().fold(0.0, f64::max) + x0;
    let n = ((s_max.max(0.1) + 0.01) / 0.01).ceil() as usize;
    let grid: Vec<f64> = (1..=n).map(|k| 0.01 * k as f64).collect();
    let image = match compute_g_image(&t, &put, &grid, &ContourParams::square(4.0, 60.0)) {
        Ok(i) => i,
        Err(e) => return report("AC6", false, format!("static hedge: {e}")),
    };
    let check = hedge_check(&b.fine, &put, &image, x0).unwrap();
    let coarse = estimate_barrier_price(&b.coarse, |s| (K - s).max(0.0), x0).unwrap();
    let allowance = (check.barrier.value - coarse.value).abs();
    let tol = 3.0 * check.combined_se + allowance;
    let d = check.difference.abs();
    let secs = b.seconds + start.elapsed().as_secs_f64();
    report(
        "AC6",
        d <= tol && secs < 300.0,
        format!(
            "static hedge: barrier {:.6} vs E[h - g] {:.6}; |diff| = {d:.3e} <= 3 combined SE + allowance {allowance:.2e} = {tol:.3e}, {secs:.1} s (< 300 s)",
            check.barrier.value, check.european.value
        ),
    )
}

fn ac7() -> Outcome {
    let t = LevyTriplet::example();
    let put = make_put(K, ZETA).unwrap();
    let g = |r: f64| compute_g_image(&t, &put, &[1.0], &ContourParams::square(4.0, r)).map(|i| i.g_values[0]);
    let reference = g(240.0).unwrap();
    let pts: Vec<(f64, f64)> =
        [15.0f64, 30.0, 60.0, 120.0].iter().map(|&r| (r.ln(), (g(r).unwrap() - reference).abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    report(
        "AC7",
        slope <= -0.8,
        format!("convergence slope: log-log slope of |g_r(1) - g_240(1)| = {slope:.3} (<= -0.8)"),
    )
}

fn ac8() -> Outcome {
    let t = LevyTriplet::example();
    let put = make_put(K, ZETA).unwrap();
    let start = Instant::now();
    let g = compute_g_image(&t, &put, &[1.0], &ContourParams::square(4.0, 60.0)).map(|i| i.g_values[0]);
    let g_secs = start.elapsed().as_secs_f64();

    let params = JointParams::default();
    let start = Instant::now();
    let single = joint_probability_once(&t, &JointLawQuery::new(K, 0.1, 1.0).unwrap(), &params);
    let joint_secs = start.elapsed().as_secs_f64();

    let xs: Vec<f64> = (0..100).map(|k| 0.2 * k as f64 / 99.0).collect();
    let ts: Vec<f64> = (0..100).map(|k| 0.1 + 0.9 * k as f64 / 99.0).collect();
    let start = Instant::now();
    let surface = joint_surface(&t, K, &xs, &ts, &params);
    let surface_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut independent_ok = true;
    for &horizon in &ts {
        for &x in &xs {
            independent_ok &= joint_probability_once(&t, &JointLawQuery::new(K, x, horizon).unwrap(), &params).is_ok();
        }
    }
    let independent_secs = start.elapsed().as_secs_f64();
    let speedup = independent_secs / surface_secs;
    let pass = g.is_ok()
        && single.is_ok()
        && surface.is_ok()
        && independent_ok
        && g_secs < 15.0
        && joint_secs < 20.0
        && surface_secs < 200.0
        && speedup >= 20.0;
    report(
        "AC8",
        pass,
        format!(
            "performance: g(1) at r = R = 60 in {g_secs:.3} s (< 15 s); one joint probability in {joint_secs:.3} s (< 20 s); \
             100 x 100 surface in {surface_secs:.3} s (< 200 s); 10000 independent evaluations in {independent_secs:.1} s, speedup {speedup:.0}x (>= 20x)"
        ),
    )
}

fn ac9() -> Outcome {
    let t = LevyTriplet::example();
    let params = JointParams::default();
    let p = |x: f64, horizon: f64| {
        joint_probability_once(&t, &JointLawQuery::new(K, x, horizon).unwrap(), &params).unwrap().raw
    };
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for (x, horizon) in [(0.1, 1.0), (0.3, 0.5), (0.05, 0.25)] {
        let dx = sensitivity(&t, K, x, horizon, 1, 0, &params).unwrap();
        let dt = sensitivity(&t, K, x, horizon, 0, 1, &params).unwrap();
        let fd_x = (p(x + h, horizon) - p(x - h, horizon)) / (2.0 * h);
        let fd_t = (p(x, horizon + h) - p(x, horizon - h)) / (2.0 * h);
        worst = worst.max(((dx - fd_x) / fd_x).abs()).max(((dt - fd_t) / fd_t).abs());
    }
    report(
        "AC9",
        worst < 1e-3,
        format!("sensitivities: worst relative gap to central differences = {worst:.3e} (< 1e-3)"),
    )
}

fn main() {
    let mut outcomes = vec![ac1(), ac2(), ac3(), ac4()];
    let b = batches();
    outcomes.push(ac5(&b));
    outcomes.push(ac6(&b));
    drop(b);
    outcomes.extend([ac7(), ac8(), ac9()]);
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.line.as_str()).collect();
    println!("acceptance: {} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
