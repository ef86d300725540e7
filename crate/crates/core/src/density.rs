//! Transition densities by characteristic-function inversion.
//!
//! `p_t(x) = (1/2pi) int e^{iux} exp(t psi(-iu)) du` is evaluated with the
//! trapezoidal rule on a uniform frequency grid. For an entire, rapidly
//! decaying integrand the only errors are aliasing, `sum_{j != 0} p(x + jP)`
//! with period `P = 2pi / step`, and truncation at the cutoff `U`. `P` is
//! chosen from Chernoff bounds on both tails and `U` from the Gaussian factor
//! `exp(-t sigma^2 u^2 / 2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WrpError};
use crate::levy::{JumpMeasure, LevyTriplet};
use crate::payoff::{FourierPayoff, PayoffKind};
use crate::quad::{integrate_real, Tolerance};

/// Frequency cutoff: `exp(t Re psi(-iU)) < CUTOFF_EPS`.
pub const CUTOFF_EPS: f64 = 1e-16;
/// Tail probability left outside the aliasing window.
pub const TAIL_EPS: f64 = 1e-22;
/// Negative excursions down to `-CLIP_TOL` are ringing and clipped to 0.
pub const CLIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySlice {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `|1 - int p|` by Simpson's rule over `x_grid`; only meaningful when the
    /// grid covers the bulk of the law.
    pub normalization_defect: f64,
    /// Most negative raw value before clipping (0 if none).
    pub clipped_excursion: f64,
    pub cutoff: f64,
    pub step: f64,
}

/// Tail lengths `(L_left, L_right)` with `P(X_t < -L_left)` and
/// `P(X_t > L_right)` below `eps` by the Chernoff bound
/// `P(X_t > L) <= exp(-theta L + t psi(theta))`.
pub fn chernoff_window(triplet: &LevyTriplet, t: f64, eps: f64) -> Result<(f64, f64)> {
    let c = -eps.ln();
    let bound = |theta: f64| (t * triplet.psi_unchecked(Complex64::new(theta, 0.0)).re + c) / theta.abs();
    let geometric = |lo: f64, hi: f64| (0..=80).map(move |k| lo * (hi / lo).powf(k as f64 / 80.0));
    let right = geometric(1e-2, 1e3).map(bound).fold(f64::INFINITY, f64::min);
    let left = match triplet.jumps {
        JumpMeasure::None => geometric(1e-2, 1e3).map(|th| bound(-th)).fold(f64::INFINITY, f64::min),
        _ => {
            if !(triplet.zeta > 0.0) {
                return Err(WrpError::InvalidParameter(
                    "density inversion needs zeta > 0 to bound the jump tail".into(),
                ));
            }
            (1..=40).map(|k| bound(-triplet.zeta * k as f64 / 40.0)).fold(f64::INFINITY, f64::min)
        }
    };
    Ok((left.max(0.0), right.max(0.0)))
}

/// Precomputed trapezoidal inversion of `exp(t psi(-iu))` for one `t`.
#[derive(Debug, Clone)]
pub struct Inverter {
    pub t: f64,
    pub step: f64,
    pub cutoff: f64,
    /// `[lo, hi]` where aliasing is below the tail tolerance.
    pub window: (f64, f64),
    phi: Vec<Complex64>,
}

impl Inverter {
    /// Inverter accurate on `[a, b]` extended by the Chernoff tails.
    pub fn new(triplet: &LevyTriplet, t: f64, a: f64, b: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(WrpError::InvalidParameter(format!("t must be > 0, got {t}")));
        }
        triplet.validate()?;
        let (l_left, l_right) = chernoff_window(triplet, t, TAIL_EPS)?;
        let lo = a.min(-l_left);
        let hi = b.max(l_right);
        let period = (l_right - lo).max(hi + l_left);
        let step = 2.0 * PI / period;
        let cutoff = (2.0 * (-CUTOFF_EPS.ln()) / (t * triplet.sigma * triplet.sigma)).sqrt();
        let n = (cutoff / step).ceil() as usize;
        let phi = (0..=n).map(|k| (triplet.char_exponent(k as f64 * step) * t).exp()).collect();
        Ok(Self { t, step, cutoff, window: (lo, hi), phi })
    }

    /// Raw (unclipped) density.
    pub fn density(&self, x: f64) -> f64 {
        let mut acc = 0.5 * self.phi[0].re;
        for (k, ph) in self.phi.iter().enumerate().skip(1) {
            acc += (Complex64::from_polar(1.0, k as f64 * self.step * x) * ph).re;
        }
        acc * self.step / PI
    }

    /// `P(X_t <= x)`: the trapezoidal density integrated exactly from the
    /// left end of the window.
    pub fn cdf(&self, x: f64) -> f64 {
        let lo = self.window.0;
        if x <= lo {
            return 0.0;
        }
        let mut acc = 0.5 * self.phi[0].re * (x - lo);
        for (k, ph) in self.phi.iter().enumerate().skip(1) {
            let u = k as f64 * self.step;
            let d = (Complex64::from_polar(1.0, u * x) - Complex64::from_polar(1.0, u * lo)) / Complex64::new(0.0, u);
            acc += (d * ph).re;
        }
        (acc * self.step / PI).clamp(0.0, 1.0)
    }
}

/// Density of `X_t` on `x_grid`, clipped at 0.
pub fn density(triplet: &LevyTriplet, t: f64, x_grid: &[f64]) -> Result<DensitySlice> {
    let (a, b) = x_grid.iter().fold((0.0f64, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let inv = Inverter::new(triplet, t, a, b)?;
    let raw: Vec<f64> = x_grid.iter().map(|&x| inv.density(x)).collect();
    let clipped_excursion = raw.iter().cloned().fold(0.0, f64::min);
    if clipped_excursion < -CLIP_TOL {
        return Err(WrpError::NegativeDensity(clipped_excursion));
    }
    let p_values: Vec<f64> = raw.iter().map(|p| p.max(0.0)).collect();
    let mass =
        if x_grid.len() >= 3 && x_grid.windows(2).all(|w| w[1] > w[0]) { simpson(x_grid, &p_values) } else { f64::NAN };
    Ok(DensitySlice {
        t,
        x_grid: x_grid.to_vec(),
        p_values,
        normalization_defect: (1.0 - mass).abs(),
        clipped_excursion,
        cutoff: inv.cutoff,
        step: inv.step,
    })
}

/// Composite Simpson on an increasing, possibly uneven grid.
fn simpson(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < x.len() {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        acc += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i] + (h0 + h1).powi(2) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i + 1 < x.len() {
        acc += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    acc
}

/// Growth envelope of a test function, used to bound the tails left out of
/// the integration window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `|f(x)| <= a + b |x|`.
    Linear { a: f64, b: f64 },
    /// `|f(x)| <= scale e^{-left_rate x}` for `x < 0` and
    /// `scale e^{right_rate x}` for `x > 0`.
    Exponential { scale: f64, left_rate: f64, right_rate: f64 },
}

impl Envelope {
    pub fn bounded(c: f64) -> Self {
        Envelope::Linear { a: c, b: 0.0 }
    }

    /// Envelope of a payoff: puts grow linearly, the rest are bounded.
    pub fn for_payoff(payoff: &FourierPayoff) -> Self {
        fn lin(p: &FourierPayoff) -> (f64, f64) {
            match p.kind() {
                PayoffKind::Put { .. } => (0.0, 1.0),
                PayoffKind::Combination(legs) => legs.iter().fold((0.0, 0.0), |(a, b), (w, q)| {
                    let (qa, qb) = lin(q);
                    (a + w.abs() * qa, b + w.abs() * qb)
                }),
                _ => (p.sup_norm(), 0.0),
            }
        }
        let (a, b) = lin(payoff);
        Envelope::Linear { a, b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub quad_err: f64,
    /// Bound on `int |f| p` outside the integration window.
    pub tail_bound: f64,
}

/// `E f(X_t)` by adaptive quadrature of `f p_t` over the Chernoff window;
/// `breaks` mark kinks of `f`.
pub fn expectation<F: Fn(f64) -> f64>(
    triplet: &LevyTriplet,
    f: F,
    envelope: Envelope,
    breaks: &[f64],
    t: f64,
) -> Result<Expectation> {
    let inv = Inverter::new(triplet, t, 0.0, 0.0)?;
    let (lo, hi) = inv.window;
    // Exponential moments available on each side.
    let theta_left = match triplet.jumps {
        JumpMeasure::None => f64::INFINITY,
        _ => triplet.zeta,
    };
    let (scale, left_rate, right_rate) = match envelope {
        Envelope::Linear { a, b } => {
            if b == 0.0 {
                (a, 0.0, 0.0)
            } else {
                // a + b|x| <= (a + b / (e l)) e^{l |x|}
                let l = if theta_left.is_finite() { 0.5 * theta_left } else { 1.0 };
                (a + b / (std::f64::consts::E * l), l, l)
            }
        }
        Envelope::Exponential { scale, left_rate, right_rate } => (scale, left_rate, right_rate),
    };
    if left_rate >= theta_left {
        return Err(WrpError::TailUnbounded(format!(
            "left growth rate {left_rate} needs an exponential moment beyond zeta = {}",
            triplet.zeta
        )));
    }
    let th_l = if theta_left.is_finite() { theta_left } else { left_rate + 4.0 };
    let th_r = right_rate + 4.0;
    let psi = |l: f64| triplet.psi_unchecked(Complex64::new(l, 0.0)).re;
    // E[e^{l|X|} 1{X < lo}] <= e^{(th - l) lo} E e^{-th X}, and likewise on the right.
    let tail_bound =
        scale * (((th_l - left_rate) * lo + t * psi(-th_l)).exp() + ((right_rate - th_r) * hi + t * psi(th_r)).exp());
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    // Resolve the bulk of the density with at least ~200 panels.
    let width = (hi - lo) / 200.0;
    pts.extend((1..200).map(|k| lo + k as f64 * width));
    let (value, quad_err, _) =
        integrate_real(|x| f(x) * inv.density(x), lo, hi, &pts, Tolerance::new(1e-12, 1e-11), 20_000);
    Ok(Expectation { value, quad_err, tail_bound })
}

/// `E h(X_t)` for a payoff.
pub fn expect_payoff(triplet: &LevyTriplet, payoff: &FourierPayoff, t: f64) -> Result<Expectation> {
    expectation(triplet, |x| payoff.h(x), Envelope::for_payoff(payoff), &payoff.kinks(), t)
}

/// `P(X_t <= x)`.
pub fn cdf(triplet: &LevyTriplet, t: f64, x: f64) -> Result<f64> {
    Ok(Inverter::new(triplet, t, x, x)?.cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::{make_indicator, make_put};
    use statrs::distribution::{ContinuousCDF, Normal};

    fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    fn normal_cdf(x: f64) -> f64 {
        Normal::new(0.0, 1.0).unwrap().cdf(x)
    }

    #[test]
    fn brownian_density_is_gaussian() {
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..=400).map(|k| -8.0 + 0.04 * k as f64).collect();
        let s = density(&bm, 1.0, &xs).unwrap();
        for (x, p) in xs.iter().zip(&s.p_values) {
            assert!((p - normal_pdf(*x)).abs() < 1e-14, "x = {x}");
        }
        assert!((s.p_values[200] - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(s.normalization_defect < 1e-9);
    }

    #[test]
    fn example_density_integrates_to_one_with_the_right_mean() {
        let t = LevyTriplet::example();
        let xs: Vec<f64> = (0..=6000).map(|k| -50.0 + 0.01 * k as f64).collect();
        let s = density(&t, 1.0, &xs).unwrap();
        assert!(s.normalization_defect < 1e-6, "{}", s.normalization_defect);
        assert!(s.p_values.iter().all(|p| *p >= 0.0));
        let xp: Vec<f64> = xs.iter().zip(&s.p_values).map(|(x, p)| x * p).collect();
        let mean = simpson(&xs, &xp);
        assert!((mean - t.mean_rate()).abs() < 1e-6, "{mean}");
    }

    #[test]
    fn cdf_matches_gaussian_and_density_quadrature() {
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        // Phi at these points, from an independent double-precision erfc.
        let frozen = [(-2.0, 0.022750131948179195), (-0.2, 0.42074029056089696), (0.0, 0.5), (1.3, 0.9031995154143897)];
        for (x, expect) in frozen {
            let got = cdf(&bm, 1.0, x).unwrap();
            assert!((got - expect).abs() < 1e-14, "x = {x}: {got} vs {expect}");
        }
        let t = LevyTriplet::example();
        let inv = Inverter::new(&t, 1.0, -0.2, -0.2).unwrap();
        let (direct, _, _) =
            integrate_real(|x| inv.density(x), inv.window.0, -0.2, &[], Tolerance::new(1e-14, 1e-13), 5000);
        assert!((inv.cdf(-0.2) - direct).abs() < 1e-11);
    }

    #[test]
    fn expectation_of_one_and_of_a_bachelier_put() {
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        let one = expectation(&bm, |_| 1.0, Envelope::bounded(1.0), &[], 1.0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-10 && one.tail_bound < 1e-12);
        // E(K - B_1)^+ = phi(K) + K Phi(K).
        let k = -0.2;
        let put = expect_payoff(&bm, &make_put(k, 0.9).unwrap(), 1.0).unwrap();
        let expect = normal_pdf(k) + k * normal_cdf(k);
        assert!((put.value - expect).abs() < 1e-10, "{} vs {expect}", put.value);
        let ind = expect_payoff(&bm, &make_indicator(k, 0.9).unwrap(), 1.0).unwrap();
        assert!((ind.value - normal_cdf(k)).abs() < 1e-10);
    }

    #[test]
    fn fast_growth_is_rejected() {
        let t = LevyTriplet::example();
        let env = Envelope::Exponential { scale: 1.0, left_rate: 1.0, right_rate: 0.0 };
        assert!(matches!(expectation(&t, |x| (-x).exp(), env, &[], 1.0), Err(WrpError::TailUnbounded(_))));
    }

    #[test]
    fn short_and_long_horizons_stay_nonnegative() {
        let t = LevyTriplet::example();
        for h in [0.05, 0.25, 4.0, 16.0] {
            let xs: Vec<f64> = (0..=500).map(|k| -20.0 + 0.05 * k as f64).collect();
            let s = density(&t, h, &xs).unwrap();
            assert!(s.clipped_excursion > -CLIP_TOL, "t = {h}: {}", s.clipped_excursion);
        }
    }
}
