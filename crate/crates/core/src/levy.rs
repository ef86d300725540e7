//! Spectrally negative Lévy processes described by a triplet `(mu, sigma, Pi)`.
//!
//! The Laplace exponent is
//!
//! ```text
//! psi(l) = mu l + sigma^2 l^2 / 2 + int_{(-inf,0)} (e^{l x} - 1 - l x) Pi(dx)
//! ```
//!
//! so that `E exp(l X_t) = exp(t psi(l))` wherever both sides are finite.
//! The negative Gamma measure `beta e^{-alpha |x|} / |x|` has the closed form
//! `beta (l / alpha - log(1 + l / alpha))` (principal branch); with
//! `mu = -beta / alpha` the linear terms cancel and
//! `psi(l) = sigma^2 l^2 / 2 - beta log(1 + l / alpha)`.
//!
//! Every admissible argument satisfies `Re(l) >= -zeta > -alpha`, which keeps
//! `1 + l / alpha` off the negative real axis.
//!
//! Tabulated measures are stored as `m(x) = x^2 Pi'(x)`, which stays bounded
//! at the origin even for infinite-activity measures. The compensated
//! integrand `(e^{l x} - 1 - l x) / x^2` tends to `l^2 / 2` as `x -> 0`, so the
//! cancellation near zero is handled by evaluating it through a series there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WrpError};

pub type ComplexPoint = Complex64;

/// Gauss-Legendre 8-point rule on [-1, 1] (nodes, weights), used per grid cell
/// for tabulated jump measures.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum JumpMeasure {
    None,
    /// Density `beta e^{-alpha |x|} / |x|` on `(-inf, 0)`.
    GammaNegative {
        alpha: f64,
        beta: f64,
    },
    /// Jump density sampled on a strictly increasing grid of negative points.
    /// Between nodes `log(x^2 * density)` is interpolated by local cubics.
    TabulatedDensity {
        grid: Vec<f64>,
        density: Vec<f64>,
    },
}

impl JumpMeasure {
    fn validate(&self) -> Result<()> {
        match self {
            JumpMeasure::None => Ok(()),
            JumpMeasure::GammaNegative { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0 && beta.is_finite() && *beta > 0.0) {
                    return Err(WrpError::InvalidParameter(format!(
                        "Gamma jump measure needs alpha, beta > 0 (got {alpha}, {beta})"
                    )));
                }
                Ok(())
            }
            JumpMeasure::TabulatedDensity { grid, density } => {
                if grid.len() < 2 || grid.len() != density.len() {
                    return Err(WrpError::InvalidParameter(
                        "tabulated jump density needs matching grid/density with >= 2 points".into(),
                    ));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(WrpError::InvalidParameter("jump grid must be strictly increasing".into()));
                }
                if grid.last().is_some_and(|&x| x >= 0.0) {
                    return Err(WrpError::InvalidParameter("jump measure must assign zero mass to [0, inf)".into()));
                }
                if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(WrpError::InvalidParameter("jump density must be finite and >= 0".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub mu: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub jumps: JumpMeasure,
}

/// `(e^{w} - 1 - w) / w^2` with a series near zero.
#[inline]
fn phi2(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        let w2 = w * w;
        Complex64::new(0.5, 0.0) + w / 6.0 + w2 / 24.0 + w2 * w / 120.0 + w2 * w2 / 720.0
    } else {
        (w.exp() - 1.0 - w) / (w * w)
    }
}

/// `(e^{w} - 1) / w` with a series near zero.
#[inline]
fn phi1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        let w2 = w * w;
        Complex64::new(1.0, 0.0) + w / 2.0 + w2 / 6.0 + w2 * w / 24.0 + w2 * w2 / 120.0
    } else {
        (w.exp() - 1.0) / w
    }
}

impl LevyTriplet {
    pub fn new(mu: f64, sigma: f64, zeta: f64, jumps: JumpMeasure) -> Result<Self> {
        let t = Self { mu, sigma, zeta, jumps };
        t.validate()?;
        Ok(t)
    }

    /// Brownian motion with drift; `zeta` defaults to 0.
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, 0.0, JumpMeasure::None)
    }

    /// `X_t = sigma B_t - Gamma_t` with `mu = -beta / alpha` and `zeta = 0.9 alpha`.
    pub fn bm_gamma(sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(-beta / alpha, sigma, 0.9 * alpha, JumpMeasure::GammaNegative { alpha, beta })
    }

    /// The worked example: `alpha = beta = sigma = 1`, `zeta = 0.9`.
    pub fn example() -> Self {
        Self::bm_gamma(1.0, 1.0, 1.0).expect("valid parameters")
    }

    pub fn with_zeta(mut self, zeta: f64) -> Result<Self> {
        self.zeta = zeta;
        self.validate()?;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: LevyTriplet = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("triplet serializes")
    }

    /// Structural checks only; integrability lives in [`validate_admissibility`].
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(WrpError::InvalidParameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !self.mu.is_finite() {
            return Err(WrpError::InvalidParameter("mu must be finite".into()));
        }
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(WrpError::InvalidParameter(format!("zeta must be >= 0, got {}", self.zeta)));
        }
        self.jumps.validate()
    }

    fn check_domain(&self, lambda: Complex64) -> Result<()> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(WrpError::InvalidParameter(format!("non-finite argument {lambda}")));
        }
        if let JumpMeasure::GammaNegative { alpha, .. } = self.jumps {
            if lambda.im == 0.0 && lambda.re <= -alpha {
                return Err(WrpError::BranchCutViolation { lambda: lambda.to_string() });
            }
        }
        // Small slack so that -zeta - iz itself is accepted after rounding.
        if lambda.re < -self.zeta - 1e-12 * (1.0 + self.zeta) {
            return Err(WrpError::AdmissibilityViolation { re: lambda.re, min: -self.zeta });
        }
        Ok(())
    }

    pub fn psi(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_domain(lambda)?;
        Ok(self.psi_unchecked(lambda))
    }

    pub fn psi_prime(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_domain(lambda)?;
        Ok(self.psi_prime_unchecked(lambda))
    }

    pub fn psi_second(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_domain(lambda)?;
        Ok(self.psi_second_unchecked(lambda))
    }

    /// Laplace exponent without domain checks; callers guarantee
    /// `Re(lambda) >= -zeta`.
    #[inline]
    pub fn psi_unchecked(&self, lambda: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let base = lambda * self.mu + lambda * lambda * (0.5 * s2);
        match &self.jumps {
            JumpMeasure::None => base,
            JumpMeasure::GammaNegative { alpha, beta } => {
                let q = lambda / *alpha;
                base + (q - (q + 1.0).ln()) * *beta
            }
            JumpMeasure::TabulatedDensity { grid, density } => {
                base + tabulated_integral(grid, density, |x| lambda * lambda * phi2(lambda * x))
            }
        }
    }

    #[inline]
    pub fn psi_prime_unchecked(&self, lambda: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let base = lambda * s2 + self.mu;
        match &self.jumps {
            JumpMeasure::None => base,
            JumpMeasure::GammaNegative { alpha, beta } => base + *beta / *alpha - *beta / (lambda + *alpha),
            JumpMeasure::TabulatedDensity { grid, density } => {
                // int x (e^{l x} - 1) Pi(dx) = int m(x) l (e^{lx}-1)/(l x) dx
                base + tabulated_integral(grid, density, |x| lambda * phi1(lambda * x))
            }
        }
    }

    pub fn psi_second_unchecked(&self, lambda: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        match &self.jumps {
            JumpMeasure::None => Complex64::new(s2, 0.0),
            JumpMeasure::GammaNegative { alpha, beta } => {
                let d = lambda + *alpha;
                Complex64::new(s2, 0.0) + *beta / (d * d)
            }
            JumpMeasure::TabulatedDensity { grid, density } => {
                Complex64::new(s2, 0.0) + tabulated_integral(grid, density, |x| (lambda * x).exp())
            }
        }
    }

    /// Real-argument helpers.
    pub fn psi_real(&self, lambda: f64) -> Result<f64> {
        Ok(self.psi(Complex64::new(lambda, 0.0))?.re)
    }

    /// `E X_1 = psi'(0)`.
    pub fn mean_rate(&self) -> f64 {
        self.psi_prime_unchecked(Complex64::new(0.0, 0.0)).re
    }

    /// `Var X_1 = psi''(0)`.
    pub fn variance_rate(&self) -> f64 {
        self.psi_second_unchecked(Complex64::new(0.0, 0.0)).re
    }

    /// Characteristic exponent helper: `E exp(-i u X_t) = exp(t psi(-i u))`.
    #[inline]
    pub fn char_exponent(&self, u: f64) -> Complex64 {
        self.psi_unchecked(Complex64::new(0.0, -u))
    }
}

/// `int m(x) f(x) dx` over the tabulated grid, with `m = x^2 * density`
/// interpolated by a local cubic (in `log m` where `m > 0`) and 8-point
/// Gauss-Legendre per cell.
fn tabulated_integral<F: Fn(f64) -> Complex64>(grid: &[f64], density: &[f64], f: F) -> Complex64 {
    let n = grid.len();
    let m = |i: usize| grid[i] * grid[i] * density[i];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n - 1 {
        let (x0, x1) = (grid[i], grid[i + 1]);
        let c = 0.5 * (x0 + x1);
        let h = 0.5 * (x1 - x0);
        // Cubic Lagrange through the neighbouring nodes where they exist, on
        // log m when m > 0 there (exact for exponential tails), else on m.
        let lo = i.saturating_sub(1);
        let hi = (i + 2).min(n - 1);
        let idx: Vec<usize> = (lo..=hi).collect();
        let positive = idx.iter().all(|&a| m(a) > 0.0);
        for &(t, w) in GL8.iter() {
            let x = c + h * t;
            let mut v = 0.0;
            for &a in &idx {
                let mut l = 1.0;
                for &b in &idx {
                    if a != b {
                        l *= (x - grid[b]) / (grid[a] - grid[b]);
                    }
                }
                v += l * if positive { m(a).ln() } else { m(a) };
            }
            if positive {
                v = v.exp();
            }
            acc += f(x) * (w * h * v);
        }
    }
    acc
}

/// Result of one integrability check in [`validate_admissibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCheck {
    pub name: String,
    /// Computed value of the integral, or `inf` when it diverges.
    pub value: f64,
    /// `closed_form`, `quadrature`, or `trivial`.
    pub method: String,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<AdmissibilityCheck>,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks `sigma > 0`, `int x^2 Pi(dx) < inf` and `int_{-inf}^{-1} |x| e^{-zeta x} Pi(dx) < inf`.
pub fn validate_admissibility(triplet: &LevyTriplet) -> AdmissibilityReport {
    let mut checks = vec![AdmissibilityCheck {
        name: "sigma_positive".into(),
        value: triplet.sigma,
        method: "trivial".into(),
        pass: triplet.sigma > 0.0 && triplet.sigma.is_finite(),
        note: String::new(),
    }];
    let zeta = triplet.zeta;
    match &triplet.jumps {
        JumpMeasure::None => {
            for name in ["second_moment", "exponential_moment"] {
                checks.push(AdmissibilityCheck {
                    name: name.into(),
                    value: 0.0,
                    method: "trivial".into(),
                    pass: true,
                    note: "zero measure".into(),
                });
            }
        }
        JumpMeasure::GammaNegative { alpha, beta } => {
            checks.push(AdmissibilityCheck {
                name: "second_moment".into(),
                value: beta / (alpha * alpha),
                method: "closed_form".into(),
                pass: true,
                note: "beta / alpha^2".into(),
            });
            let ok = zeta < *alpha;
            checks.push(AdmissibilityCheck {
                name: "exponential_moment".into(),
                value: if ok { beta * (-(alpha - zeta)).exp() / (alpha - zeta) } else { f64::INFINITY },
                method: "closed_form".into(),
                pass: ok,
                note: if ok {
                    "beta e^{-(alpha-zeta)} / (alpha - zeta)".into()
                } else {
                    format!("diverges: zeta = {zeta} >= alpha = {alpha}")
                },
            });
        }
        JumpMeasure::TabulatedDensity { grid, density } => {
            let second = tabulated_integral(grid, density, |_| Complex64::new(1.0, 0.0)).re;
            checks.push(AdmissibilityCheck {
                name: "second_moment".into(),
                value: second,
                method: "quadrature".into(),
                pass: second.is_finite(),
                note: String::new(),
            });
            // |x| e^{-zeta x} Pi'(x) = m(x) e^{-zeta x} / |x|, restricted to x <= -1.
            let f = |x: f64| {
                if x <= -1.0 {
                    Complex64::new((-zeta * x).exp() / x.abs(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            let total = tabulated_integral(grid, density, f).re;
            // The grid truncates the tail; flag it when the outermost cell still carries mass.
            let first_cell = tabulated_integral(&grid[..2], &density[..2], f).re;
            let decaying = total == 0.0 || first_cell <= 1e-6 * total;
            checks.push(AdmissibilityCheck {
                name: "exponential_moment".into(),
                value: if decaying { total } else { f64::INFINITY },
                method: "quadrature".into(),
                pass: total.is_finite() && decaying,
                note: if decaying {
                    String::new()
                } else {
                    "integrand has not decayed at the left end of the grid".into()
                },
            });
        }
    }
    AdmissibilityReport { checks }
}

/// Minimum of `|psi(gamma + iu) - psi(-zeta - iz)|` over a uniform grid.
///
/// A sampled lower bound only; it flags contours that pass close to a zero of
/// the denominator but cannot certify that none exists between samples.
pub fn denominator_floor(triplet: &LevyTriplet, gamma: f64, u_range: (f64, f64), z_range: (f64, f64), n: usize) -> f64 {
    let n = n.max(2);
    let step = |r: (f64, f64), k: usize| r.0 + (r.1 - r.0) * k as f64 / (n - 1) as f64;
    let zeta = triplet.zeta;
    let right: Vec<Complex64> =
        (0..n).map(|k| triplet.psi_unchecked(Complex64::new(-zeta, -step(z_range, k)))).collect();
    let mut floor = f64::INFINITY;
    for i in 0..n {
        let left = triplet.psi_unchecked(Complex64::new(gamma, step(u_range, i)));
        for r in &right {
            floor = floor.min((left - r).norm());
        }
    }
    floor
}

pub const DEFAULT_FLOOR_GRID: usize = 401;

/// Largest real part among the non-trivial roots `l != w` of
/// `psi(l) = psi(w)`, `w = -zeta - iz`, for `z` sampled on `z_range`.
///
/// The kernel `psi'(l) / (psi(l) - psi(w)) - 1/(l - w)` has a simple pole at
/// each such root, so the Bromwich abscissa has to sit to the right of all of
/// them. Roots are tracked by Newton iteration started from the mirror image
/// of `w` under the quadratic part of `psi`.
pub fn mirror_root_abscissa(triplet: &LevyTriplet, z_range: (f64, f64), n: usize) -> f64 {
    let s2 = triplet.sigma * triplet.sigma;
    let drift = triplet.mean_rate();
    let zeta = triplet.zeta;
    let mut best = f64::NEG_INFINITY;
    let n = n.max(2);
    for k in 0..n {
        let z = z_range.0 + (z_range.1 - z_range.0) * k as f64 / (n - 1) as f64;
        let w = Complex64::new(-zeta, -z);
        let target = triplet.psi_unchecked(w);
        for start in [-w - 2.0 * drift / s2, -w, -w + 1.0] {
            let mut l = start;
            let mut ok = false;
            for _ in 0..80 {
                if l.re <= -zeta {
                    break;
                }
                let f = triplet.psi_unchecked(l) - target;
                let d = triplet.psi_prime_unchecked(l);
                if d.norm() == 0.0 {
                    break;
                }
                let step = f / d;
                l -= step;
                if step.norm() < 1e-13 * (1.0 + l.norm()) {
                    ok = true;
                    break;
                }
            }
            if ok && (l - w).norm() > 1e-6 && l.re > -zeta {
                best = best.max(l.re);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gamma_table(alpha: f64, beta: f64) -> LevyTriplet {
        // Geometric grid towards 0 resolves the x^2 * density ~ |x| profile.
        let mut grid: Vec<f64> = (0..600).map(|k| -150.0 * (1e-7f64 / 150.0).powf(k as f64 / 599.0)).collect();
        grid.dedup();
        let density = grid.iter().map(|x: &f64| beta * (-alpha * x.abs()).exp() / x.abs()).collect();
        LevyTriplet::new(-beta / alpha, 1.0, 0.9 * alpha, JumpMeasure::TabulatedDensity { grid, density }).unwrap()
    }

    #[test]
    fn psi_examples() {
        let bg = LevyTriplet::example();
        assert_eq!(bg.psi(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let v = bg.psi(c(1.0, 0.0)).unwrap();
        assert!((v.re - (0.5 - 2f64.ln())).abs() < 1e-15 && v.im == 0.0);
        assert!((v.re + 0.1931).abs() < 1e-4);
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        assert!((bm.psi(c(2.0, 3.0)).unwrap() - c(-2.5, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn psi_prime_examples() {
        let bg = LevyTriplet::example();
        assert!((bg.psi_prime(c(1.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((bg.psi_prime(c(4.0, 0.0)).unwrap() - c(3.8, 0.0)).norm() < 1e-15);
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        assert_eq!(bm.psi_prime(c(0.0, 1.0)).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn domain_errors() {
        let bg = LevyTriplet::example();
        assert!(matches!(bg.psi(c(-1.5, 0.0)), Err(WrpError::BranchCutViolation { .. })));
        assert!(matches!(bg.psi(c(-0.95, 1.0)), Err(WrpError::AdmissibilityViolation { .. })));
        assert!(bg.psi(c(-0.9, -3.0)).is_ok());
    }

    #[test]
    fn psi_prime_matches_finite_differences() {
        let bg = LevyTriplet::example();
        for l in [c(4.0, 3.0), c(0.3, -7.0), c(-0.5, 0.2)] {
            let h = 1e-5;
            let fd = (bg.psi_unchecked(l + h) - bg.psi_unchecked(l - h)) / (2.0 * h);
            assert!((fd - bg.psi_prime_unchecked(l)).norm() < 1e-8);
            let fd2 = (bg.psi_prime_unchecked(l + h) - bg.psi_prime_unchecked(l - h)) / (2.0 * h);
            assert!((fd2 - bg.psi_second_unchecked(l)).norm() < 1e-8);
        }
    }

    #[test]
    fn tabulated_gamma_agrees_with_closed_form() {
        let tab = gamma_table(1.0, 1.0);
        let bg = LevyTriplet::example();
        for l in [c(1.0, 0.0), c(4.0, 5.0), c(-0.8, -2.0), c(2.0, 20.0)] {
            let a = tab.psi_unchecked(l);
            let b = bg.psi_unchecked(l);
            assert!((a - b).norm() < 1e-6 * (1.0 + b.norm()), "psi {l}: {a} vs {b}");
            let a = tab.psi_prime_unchecked(l);
            let b = bg.psi_prime_unchecked(l);
            assert!((a - b).norm() < 1e-6 * (1.0 + b.norm()), "psi' {l}: {a} vs {b}");
        }
        assert!(validate_admissibility(&tab).pass(), "{:?}", validate_admissibility(&tab));
    }

    #[test]
    fn admissibility_examples() {
        let ok = LevyTriplet::example();
        assert!(validate_admissibility(&ok).pass());
        let mut bad = ok.clone();
        bad.zeta = 1.2;
        let rep = validate_admissibility(&bad);
        assert!(!rep.pass());
        assert!(rep.checks.iter().any(|c| c.name == "exponential_moment" && c.value.is_infinite()));
        let bm = LevyTriplet::brownian(0.3, 2.0).unwrap().with_zeta(5.0).unwrap();
        assert!(validate_admissibility(&bm).pass());
    }

    #[test]
    fn denominator_floor_examples() {
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
        let f = denominator_floor(&bm, 4.0, (-10.0, 10.0), (-10.0, 10.0), DEFAULT_FLOOR_GRID);
        assert!((f - 8.0).abs() < 1e-12, "{f}");
        let f0 = denominator_floor(&bm, 0.0, (-10.0, 10.0), (-10.0, 10.0), DEFAULT_FLOOR_GRID);
        assert_eq!(f0, 0.0);
        let bg = LevyTriplet::example();
        assert!(denominator_floor(&bg, 4.0, (-60.0, 60.0), (-60.0, 60.0), DEFAULT_FLOOR_GRID) > 1.0);
    }

    #[test]
    fn mirror_roots_lie_left_of_the_default_abscissa() {
        let bg = LevyTriplet::example();
        let a = mirror_root_abscissa(&bg, (-60.0, 60.0), 1201);
        assert!(a > 2.8 && a < 2.9, "{a}");
        // Pure BM: the mirror root of w = -zeta - iz is zeta + iz.
        let bm = LevyTriplet::brownian(0.0, 1.0).unwrap().with_zeta(0.9).unwrap();
        let a = mirror_root_abscissa(&bm, (-10.0, 10.0), 101);
        assert!((a - 0.9).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip_uses_fixed_field_names() {
        let t = LevyTriplet::example();
        let s = t.to_json();
        assert!(s.contains("\"mu\"") && s.contains("\"sigma\"") && s.contains("\"zeta\"") && s.contains("\"jumps\""));
        assert!(s.contains("\"kind\":\"gamma_negative\""));
        assert_eq!(LevyTriplet::from_json(&s).unwrap(), t);
        assert!(LevyTriplet::from_json(r#"{"mu":0,"sigma":-1,"zeta":0,"jumps":{"kind":"none"}}"#).is_err());
    }

    #[test]
    fn asymptotic_growth_is_quadratic() {
        let bg = LevyTriplet::example();
        for u in [1e2, 1e3, 1e4] {
            for sign in [-1.0, 1.0] {
                let r = bg.psi_unchecked(c(4.0, sign * u)).norm() / (u * u);
                assert!(r > 0.05 && r < 5.0, "{r}");
            }
        }
    }
}
