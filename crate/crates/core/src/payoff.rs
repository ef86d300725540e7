//! Payoffs supported below the barrier and their Fourier preimages.
//!
//! Convention: `e^{zeta x} h(x) = int e^{-i x z} h_hat(z) dz`, i.e.
//! `h_hat(z) = (1 / 2pi) int e^{(zeta + i z) x} h(x) dx`. No `1 / 2pi` appears in
//! the forward direction.
//!
//! Closed forms (for `K < 0`, `a = zeta + i z`):
//!
//! * put `(K - x)^+`: `h_hat(z) = e^{K a} / (2pi a^2)`, in `L1`;
//! * indicator `1_{x <= K}`: `h_hat(z) = e^{K a} / (2pi a)`, in `L2` only.
//!
//! Custom payoffs are given on a grid and interpolated linearly; their
//! preimage is the exact transform of the interpolant.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WrpError};
use crate::quad::{integrate_real, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrability {
    L1,
    L2Only,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    Put {
        strike: f64,
    },
    Indicator {
        strike: f64,
    },
    Custom(CustomPayoff),
    /// Finite linear combination `sum w_i h_i` sharing one `zeta`.
    Combination(Vec<(f64, FourierPayoff)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomPayoff {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Cumulative `int_{|z| > r} |h_hat|` on `tail_r` (both half-lines).
    tail_r: Vec<f64>,
    tail_mass: Vec<f64>,
    /// Fitted power-law exponent of `|h_hat|` on `[1e2, 1e4]`.
    decay_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPayoff {
    kind: PayoffKind,
    zeta: f64,
    integrability: Integrability,
    l1_norm: f64,
    l2_norm: f64,
}

#[inline]
fn phi1(q: Complex64) -> Complex64 {
    if q.norm() < 1e-3 {
        let q2 = q * q;
        Complex64::new(1.0, 0.0) + q / 2.0 + q2 / 6.0 + q2 * q / 24.0 + q2 * q2 / 120.0
    } else {
        (q.exp() - 1.0) / q
    }
}

/// `(q e^q - e^q + 1) / q^2`
#[inline]
fn phi_lin(q: Complex64) -> Complex64 {
    if q.norm() < 1e-3 {
        let q2 = q * q;
        Complex64::new(0.5, 0.0) + q / 3.0 + q2 / 8.0 + q2 * q / 30.0 + q2 * q2 / 144.0
    } else {
        let e = q.exp();
        (q * e - e + 1.0) / (q * q)
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if !(strike.is_finite() && strike < 0.0) {
        return Err(WrpError::InvalidStrike(strike));
    }
    Ok(())
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(WrpError::InvalidParameter(format!("payoff zeta must be > 0, got {zeta}")));
    }
    Ok(())
}

/// Put `(K - x)^+`.
pub fn make_put(strike: f64, zeta: f64) -> Result<FourierPayoff> {
    check_strike(strike)?;
    check_zeta(zeta)?;
    let scale = (strike * zeta).exp();
    Ok(FourierPayoff {
        kind: PayoffKind::Put { strike },
        zeta,
        integrability: Integrability::L1,
        l1_norm: scale / (2.0 * zeta),
        l2_norm: (scale * scale / (8.0 * PI * zeta.powi(3))).sqrt(),
    })
}

/// Digital `1_{(-inf, K]}`.
pub fn make_indicator(strike: f64, zeta: f64) -> Result<FourierPayoff> {
    check_strike(strike)?;
    check_zeta(zeta)?;
    let scale = (strike * zeta).exp();
    Ok(FourierPayoff {
        kind: PayoffKind::Indicator { strike },
        zeta,
        integrability: Integrability::L2Only,
        l1_norm: f64::INFINITY,
        l2_norm: (scale * scale / (4.0 * PI * zeta)).sqrt(),
    })
}

/// Payoff from samples `(x_i, h_i)`, linearly interpolated and zero outside
/// `[x_0, x_n]`. The grid must lie in `(-inf, 0)` (or carry zeros at `x >= 0`).
pub fn make_custom(grid: &[f64], values: &[f64], zeta: f64) -> Result<FourierPayoff> {
    check_zeta(zeta)?;
    if grid.len() < 2 || grid.len() != values.len() {
        return Err(WrpError::InvalidParameter("custom payoff needs >= 2 matching (x, h) samples".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(WrpError::InvalidParameter("custom grid must be finite and strictly increasing".into()));
    }
    // Samples at x >= 0 must vanish; keep the first one so the interpolant
    // still ramps down to the barrier.
    let first_nonneg = grid.iter().position(|&x| x >= 0.0).unwrap_or(grid.len());
    if let Some(i) = (first_nonneg..grid.len()).find(|&i| values[i].abs() > 1e-10) {
        return Err(WrpError::SupportViolation(format!(
            "h({}) = {} is nonzero at or above the barrier",
            grid[i], values[i]
        )));
    }
    let n = (first_nonneg + 1).min(grid.len());
    if first_nonneg == 0 {
        return Err(WrpError::SupportViolation("no samples strictly below the barrier".into()));
    }
    let grid = grid[..n].to_vec();
    let values = values[..n].to_vec();

    let damped: Vec<f64> = grid.iter().zip(&values).map(|(x, h)| (zeta * x).exp() * h.abs()).collect();
    let peak = damped.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 && damped[0] > 1e-6 * peak {
        return Err(WrpError::NonIntegrable(format!(
            "e^(zeta x) h(x) = {:e} at the left end x = {} has not decayed (peak {:e})",
            damped[0], grid[0], peak
        )));
    }

    let mut custom =
        CustomPayoff { grid, values, tail_r: Vec::new(), tail_mass: Vec::new(), decay_slope: f64::NEG_INFINITY };

    // Parseval: int |h_hat|^2 dz = (1 / 2pi) int e^{2 zeta x} h(x)^2 dx
    let mut l2sq = 0.0;
    for i in 0..custom.grid.len() - 1 {
        let (x0, x1) = (custom.grid[i], custom.grid[i + 1]);
        let (h0, h1) = (custom.values[i], custom.values[i + 1]);
        let (v, _, _) = integrate_real(
            |x| {
                let h = h0 + (h1 - h0) * (x - x0) / (x1 - x0);
                (2.0 * zeta * x).exp() * h * h
            },
            x0,
            x1,
            &[],
            Tolerance::new(1e-16, 1e-12),
            50,
        );
        l2sq += v;
    }
    let l2_norm = (l2sq / (2.0 * PI)).sqrt();

    let zero = custom.values.iter().all(|v| *v == 0.0);
    let (integrability, l1_norm) = if zero {
        custom.decay_slope = f64::NEG_INFINITY;
        custom.tail_r = vec![0.0];
        custom.tail_mass = vec![0.0];
        (Integrability::L1, 0.0)
    } else {
        custom.decay_slope = fit_decay_slope(|z| custom_hat(&custom, zeta, z).norm());
        if custom.decay_slope <= -1.1 {
            custom.build_tail_table(zeta);
            (Integrability::L1, custom.tail_mass[0])
        } else {
            (Integrability::L2Only, f64::INFINITY)
        }
    };

    Ok(FourierPayoff { kind: PayoffKind::Custom(custom), zeta, integrability, l1_norm, l2_norm })
}

/// Read a two-column CSV `(x, h)`; a non-numeric first line is treated as a header.
pub fn read_custom_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut hs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next(), cols.next());
        match (a.and_then(|s| s.parse::<f64>().ok()), b.and_then(|s| s.parse::<f64>().ok())) {
            (Some(x), Some(h)) => {
                xs.push(x);
                hs.push(h);
            }
            _ if lineno == 0 => continue,
            _ => {
                return Err(WrpError::InvalidParameter(format!(
                    "{}:{}: expected two numeric columns",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok((xs, hs))
}

pub fn linear_combination(legs: Vec<(f64, FourierPayoff)>) -> Result<FourierPayoff> {
    let first = legs.first().ok_or_else(|| WrpError::InvalidParameter("empty payoff combination".into()))?;
    let zeta = first.1.zeta;
    if legs.iter().any(|(w, p)| !w.is_finite() || (p.zeta - zeta).abs() > 0.0) {
        return Err(WrpError::InvalidParameter("combined payoffs must share zeta and have finite weights".into()));
    }
    let integrability = if legs.iter().all(|(_, p)| p.integrability == Integrability::L1) {
        Integrability::L1
    } else {
        Integrability::L2Only
    };
    // Triangle-inequality bounds; the error bounds only need upper estimates.
    let l1_norm = legs.iter().map(|(w, p)| w.abs() * p.l1_norm).sum();
    let l2_norm = legs.iter().map(|(w, p)| w.abs() * p.l2_norm).sum();
    Ok(FourierPayoff { kind: PayoffKind::Combination(legs), zeta, integrability, l1_norm, l2_norm })
}

fn custom_hat(c: &CustomPayoff, zeta: f64, z: f64) -> Complex64 {
    let a = Complex64::new(zeta, z);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..c.grid.len() - 1 {
        let (x0, x1) = (c.grid[i], c.grid[i + 1]);
        let (h0, h1) = (c.values[i], c.values[i + 1]);
        if h0 == 0.0 && h1 == 0.0 {
            continue;
        }
        let dx = x1 - x0;
        let q = a * dx;
        let e0 = (a * x0).exp();
        acc += e0 * dx * (phi1(q) * h0 + phi_lin(q) * (h1 - h0));
    }
    acc / (2.0 * PI)
}

/// Log-log slope of the envelope of `f` over `[1e2, 1e4]`.
fn fit_decay_slope<F: Fn(f64) -> f64>(f: F) -> f64 {
    let windows = 12;
    let per = 24;
    let (lo, hi) = (2f64, 4f64);
    let mut pts = Vec::with_capacity(windows);
    for w in 0..windows {
        let a = lo + (hi - lo) * w as f64 / windows as f64;
        let b = lo + (hi - lo) * (w + 1) as f64 / windows as f64;
        let mut m = 0.0f64;
        for k in 0..per {
            let e = a + (b - a) * (k as f64 + 0.5) / per as f64;
            m = m.max(f(10f64.powf(e)));
        }
        if m > 0.0 {
            pts.push((0.5 * (a + b) * std::f64::consts::LN_10, m.ln()));
        }
    }
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl CustomPayoff {
    const TAIL_MAX: f64 = 1e4;

    fn build_tail_table(&mut self, zeta: f64) {
        // Geometric breakpoints from 0.05 to 1e4 plus the origin.
        let mut rs = vec![0.0];
        let mut r = 0.05;
        while r < Self::TAIL_MAX {
            rs.push(r);
            r *= 1.5;
        }
        rs.push(Self::TAIL_MAX);
        let abs_hat = |z: f64| custom_hat(self, zeta, z).norm();
        let mut pieces = Vec::with_capacity(rs.len() - 1);
        for w in rs.windows(2) {
            let tol = Tolerance::new(1e-14, 1e-6);
            let (p, _, _) = integrate_real(abs_hat, w[0], w[1], &[], tol, 200);
            let (m, _, _) = integrate_real(abs_hat, -w[1], -w[0], &[], tol, 200);
            pieces.push(p + m);
        }
        // Power-law extrapolation past 1e4, doubled for safety.
        let s = self.decay_slope;
        let z = Self::TAIL_MAX;
        let edge = abs_hat(z).max(abs_hat(-z));
        let beyond = 2.0 * 2.0 * edge * z / (-s - 1.0);
        let mut tail = vec![0.0; rs.len()];
        tail[rs.len() - 1] = beyond;
        for k in (0..rs.len() - 1).rev() {
            tail[k] = tail[k + 1] + pieces[k];
        }
        self.tail_r = rs;
        self.tail_mass = tail;
    }

    fn tail(&self, r: f64) -> f64 {
        let rs = &self.tail_r;
        if rs.len() == 1 {
            return self.tail_mass[0];
        }
        let last = rs.len() - 1;
        if r >= rs[last] {
            let s = self.decay_slope;
            return self.tail_mass[last] * (r / rs[last]).powf(s + 1.0);
        }
        let k = rs.partition_point(|&x| x <= r).saturating_sub(1);
        let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
        self.tail_mass[k] + t * (self.tail_mass[k + 1] - self.tail_mass[k])
    }
}

impl FourierPayoff {
    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    /// Strike of a put or indicator.
    pub fn strike(&self) -> Option<f64> {
        match self.kind {
            PayoffKind::Put { strike } | PayoffKind::Indicator { strike } => Some(strike),
            _ => None,
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        match &self.kind {
            PayoffKind::Put { strike } => (strike - x).max(0.0),
            PayoffKind::Indicator { strike } => {
                if x <= *strike {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::Custom(c) => {
                let g = &c.grid;
                if x < g[0] || x > g[g.len() - 1] {
                    return 0.0;
                }
                let k = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1);
                let t = (x - g[k - 1]) / (g[k] - g[k - 1]);
                c.values[k - 1] + t * (c.values[k] - c.values[k - 1])
            }
            PayoffKind::Combination(legs) => legs.iter().map(|(w, p)| w * p.h(x)).sum(),
        }
    }

    pub fn h_hat(&self, z: f64) -> Complex64 {
        let a = Complex64::new(self.zeta, z);
        match &self.kind {
            PayoffKind::Put { strike } => (a * *strike).exp() / (a * a * (2.0 * PI)),
            PayoffKind::Indicator { strike } => (a * *strike).exp() / (a * (2.0 * PI)),
            PayoffKind::Custom(c) => custom_hat(c, self.zeta, z),
            PayoffKind::Combination(legs) => legs.iter().map(|(w, p)| p.h_hat(z) * *w).sum(),
        }
    }

    /// `int_{|z| > r} |h_hat(z)| dz`; infinite for `L2`-only payoffs.
    pub fn tail_mass(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match &self.kind {
            PayoffKind::Put { strike } => {
                let z = self.zeta;
                (strike * z).exp() / (PI * z) * (0.5 * PI - (r / z).atan())
            }
            PayoffKind::Indicator { .. } => f64::INFINITY,
            PayoffKind::Custom(c) => match self.integrability {
                Integrability::L1 => c.tail(r),
                Integrability::L2Only => f64::INFINITY,
            },
            PayoffKind::Combination(legs) => legs.iter().map(|(w, p)| w.abs() * p.tail_mass(r)).sum(),
        }
    }

    /// Oscillation rate `w` of the slowest-decaying part of `h_hat`, which
    /// behaves like `e^{i w z}` times a smooth envelope in the tails. `None`
    /// when several rates compete.
    pub fn tail_frequency(&self) -> Option<f64> {
        match &self.kind {
            PayoffKind::Put { strike } | PayoffKind::Indicator { strike } => Some(strike.abs()),
            PayoffKind::Custom(c) => {
                let n = c.grid.len();
                (c.values[n - 1] != 0.0).then(|| c.grid[n - 1].abs())
            }
            PayoffKind::Combination(legs) => {
                let first = legs[0].1.tail_frequency()?;
                legs.iter().all(|(_, p)| p.tail_frequency() == Some(first)).then_some(first)
            }
        }
    }

    /// Points where `h` is not smooth; used as quadrature breakpoints.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            PayoffKind::Put { strike } | PayoffKind::Indicator { strike } => vec![*strike],
            PayoffKind::Custom(c) => c.grid.clone(),
            PayoffKind::Combination(legs) => legs.iter().flat_map(|(_, p)| p.kinks()).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Largest `|h|` on the support; the custom interpolant attains it at a node.
    pub fn sup_norm(&self) -> f64 {
        match &self.kind {
            PayoffKind::Put { .. } => f64::INFINITY,
            PayoffKind::Indicator { .. } => 1.0,
            PayoffKind::Custom(c) => c.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            PayoffKind::Combination(legs) => legs.iter().map(|(w, p)| w.abs() * p.sup_norm()).sum(),
        }
    }

    /// Canonical description used in cache fingerprints.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            PayoffKind::Put { strike } => format!("put(K={strike:?},zeta={:?})", self.zeta),
            PayoffKind::Indicator { strike } => format!("indicator(K={strike:?},zeta={:?})", self.zeta),
            PayoffKind::Custom(c) => {
                let mut h: u64 = 0xcbf2_9ce4_8422_2325;
                for v in c.grid.iter().chain(&c.values) {
                    for b in v.to_bits().to_le_bytes() {
                        h ^= b as u64;
                        h = h.wrapping_mul(0x0100_0000_01b3);
                    }
                }
                format!("custom(n={},hash={h:016x},zeta={:?})", c.grid.len(), self.zeta)
            }
            PayoffKind::Combination(legs) => {
                let parts: Vec<String> = legs.iter().map(|(w, p)| format!("{w:?}*{}", p.descriptor())).collect();
                format!("sum[{}]", parts.join(","))
            }
        }
    }
}

/// Payoff configuration file: `{"kind": "put"|"indicator"|"custom", "K", "zeta", "grid"}`.
/// For custom payoffs `grid` is a path to a two-column CSV (relative paths are
/// resolved against the config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub kind: String,
    #[serde(rename = "K", default)]
    pub strike: Option<f64>,
    pub zeta: f64,
    #[serde(default)]
    pub grid: Option<String>,
}

fn default_schema() -> u32 {
    1
}

impl PayoffSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self, base_dir: Option<&Path>) -> Result<FourierPayoff> {
        if self.schema_version != 1 {
            return Err(WrpError::InvalidParameter(format!(
                "unsupported payoff schema_version {}",
                self.schema_version
            )));
        }
        let need_strike =
            || self.strike.ok_or_else(|| WrpError::InvalidParameter(format!("payoff kind {} requires K", self.kind)));
        match self.kind.as_str() {
            "put" => make_put(need_strike()?, self.zeta),
            "indicator" => make_indicator(need_strike()?, self.zeta),
            "custom" => {
                let rel = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| WrpError::InvalidParameter("custom payoff requires grid".into()))?;
                let path = match base_dir {
                    Some(d) if Path::new(rel).is_relative() => d.join(rel),
                    _ => Path::new(rel).to_path_buf(),
                };
                let (x, h) = read_custom_csv(&path)?;
                make_custom(&x, &h, self.zeta)
            }
            other => Err(WrpError::InvalidParameter(format!("unknown payoff kind {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_oscillatory_tail};

    /// `e^{-zeta x} int e^{-ixz} h_hat(z) dz`; the integrand oscillates like `e^{i(K-x)z}`.
    fn invert(p: &FourierPayoff, x: f64) -> f64 {
        let f = |z: f64| p.h_hat(z) * Complex64::new(0.0, -x * z).exp();
        let tol = Tolerance::new(1e-13, 1e-11);
        let w = (p.strike().unwrap() - x).abs();
        let v = if w < 1e-3 {
            integrate(f, f64::NEG_INFINITY, f64::INFINITY, &[0.0], tol, 20_000).value
        } else {
            let period = 2.0 * PI / w;
            let z0 = 4.0 * period;
            integrate(f, -z0, z0, &[0.0], tol, 20_000).value
                + integrate_oscillatory_tail(f, z0, 1.0, period, tol, 2000).value
                + integrate_oscillatory_tail(f, -z0, -1.0, period, tol, 2000).value
        };
        (-p.zeta() * x).exp() * v.re
    }

    #[test]
    fn put_preimage_value_at_zero() {
        let p = make_put(-0.2, 0.9).unwrap();
        let v = p.h_hat(0.0);
        assert!((v.re - (-0.18f64).exp() / (2.0 * PI * 0.81)).abs() < 1e-15);
        assert!((v.re - 0.164_13).abs() < 1e-5);
        assert_eq!(v.im, 0.0);
        assert_eq!(p.h(0.5), 0.0);
        assert!((p.h(-0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn put_round_trip() {
        let p = make_put(-0.2, 0.9).unwrap();
        assert!((invert(&p, -0.3) - 0.1).abs() < 1e-6);
        let worst = (0..50)
            .map(|k| -5.0 + (5.0 - 1e-3) * k as f64 / 49.0)
            .map(|x| (invert(&p, x) - p.h(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn indicator_sign_from_direct_integration() {
        // (1/2pi) int_{-inf}^{K} e^{(zeta+iz) x} dx, computed by quadrature.
        let (k, zeta) = (-0.2, 0.9);
        let p = make_indicator(k, zeta).unwrap();
        for z in [0.0, 0.7, -3.0, 12.0] {
            let a = Complex64::new(zeta, z);
            let direct = integrate(
                |x| (a * x).exp() / (2.0 * PI),
                f64::NEG_INFINITY,
                k,
                &[],
                Tolerance::new(1e-14, 1e-12),
                2000,
            );
            assert!((direct.value - p.h_hat(z)).norm() < 1e-10, "z={z}");
        }
        assert!(p.h_hat(0.0).re > 0.0);
        assert_eq!(p.integrability(), Integrability::L2Only);
        assert!((p.l2_norm().powi(2) - (2.0 * k * zeta).exp() / (4.0 * PI * zeta)).abs() < 1e-15);
        assert!(p.tail_mass(10.0).is_infinite());
    }

    #[test]
    fn indicator_round_trip_below_strike() {
        // L2-only preimage: the inversion integral converges conditionally.
        let p = make_indicator(-0.2, 0.9).unwrap();
        let v = invert(&p, -0.3);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn put_tail_mass_matches_quadrature() {
        let p = make_put(-0.2, 0.9).unwrap();
        for r in [0.0, 1.0, 30.0, 500.0] {
            let (num, _, _) =
                integrate_real(|z| p.h_hat(z).norm(), r, f64::INFINITY, &[], Tolerance::new(1e-14, 1e-11), 2000);
            assert!((2.0 * num - p.tail_mass(r)).abs() < 1e-9 * (1.0 + p.tail_mass(r)), "r={r}");
        }
        assert!((p.tail_mass(0.0) - p.l1_norm()).abs() < 1e-14);
    }

    #[test]
    fn put_decay_slope_is_minus_two() {
        let p = make_put(-0.2, 0.9).unwrap();
        let s = fit_decay_slope(|z| p.h_hat(z).norm());
        assert!((s + 2.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn strikes_at_or_above_barrier_are_rejected() {
        assert!(matches!(make_put(0.0, 0.9), Err(WrpError::InvalidStrike(_))));
        assert!(matches!(make_indicator(0.1, 0.9), Err(WrpError::InvalidStrike(_))));
    }

    fn put_grid(k: f64) -> (Vec<f64>, Vec<f64>) {
        let n = 4001;
        let x: Vec<f64> = (0..n).map(|i| -40.0 + (40.0 + k) * i as f64 / (n - 1) as f64).collect();
        let mut h: Vec<f64> = x.iter().map(|x| (k - x).max(0.0)).collect();
        *h.last_mut().unwrap() = 0.0;
        (x, h)
    }

    #[test]
    fn custom_put_matches_closed_form() {
        let (x, h) = put_grid(-0.2);
        let c = make_custom(&x, &h, 0.9).unwrap();
        let p = make_put(-0.2, 0.9).unwrap();
        assert_eq!(c.integrability(), Integrability::L1);
        for z in [0.0, 0.5, -2.0, 10.0, 100.0] {
            assert!((c.h_hat(z) - p.h_hat(z)).norm() < 1e-10, "z={z}");
        }
        assert!((c.l2_norm() - p.l2_norm()).abs() < 1e-9);
        assert!((c.l1_norm() - p.l1_norm()).abs() < 1e-3 * p.l1_norm());
        assert!((c.tail_mass(20.0) - p.tail_mass(20.0)).abs() < 0.05 * p.tail_mass(20.0));
    }

    #[test]
    fn custom_zero_payoff_has_zero_preimage() {
        let x = [-3.0, -2.0, -1.0];
        let c = make_custom(&x, &[0.0; 3], 0.9).unwrap();
        assert_eq!(c.h_hat(1.3), Complex64::new(0.0, 0.0));
        assert_eq!(c.tail_mass(0.0), 0.0);
    }

    #[test]
    fn custom_support_errors() {
        assert!(matches!(make_custom(&[-1.0, 0.0, 0.5], &[1.0, 1.0, 1.0], 0.9), Err(WrpError::SupportViolation(_))));
        assert!(make_custom(&[-40.0, -1.0, 0.0], &[0.0, 1.0, 0.0], 0.9).is_ok());
        assert!(matches!(make_custom(&[-2.0, -1.0], &[5.0, 5.0], 0.9), Err(WrpError::NonIntegrable(_))));
    }

    #[test]
    fn custom_digital_is_l2_only() {
        let x: Vec<f64> = (0..2001).map(|i| -40.0 + 39.8 * i as f64 / 2000.0).collect();
        let h = vec![1.0; x.len()];
        let c = make_custom(&x, &h, 0.9).unwrap();
        assert_eq!(c.integrability(), Integrability::L2Only);
        let ind = make_indicator(-0.2, 0.9).unwrap();
        assert!((c.h_hat(3.0) - ind.h_hat(3.0)).norm() < 1e-12);
    }

    #[test]
    fn payoff_spec_parses_documented_fields() {
        let s = PayoffSpec::from_json(r#"{"kind":"put","K":-0.2,"zeta":0.9}"#).unwrap();
        let p = s.build(None).unwrap();
        assert_eq!(p.strike(), Some(-0.2));
        assert!(PayoffSpec::from_json(r#"{"kind":"put","zeta":0.9}"#).unwrap().build(None).is_err());
    }

    proptest::proptest! {
        #[test]
        fn hat_is_conjugate_symmetric(z in -500.0f64..500.0, k in -3.0f64..-0.01, zeta in 0.05f64..3.0) {
            for p in [make_put(k, zeta).unwrap(), make_indicator(k, zeta).unwrap()] {
                let a = p.h_hat(-z);
                let b = p.h_hat(z).conj();
                proptest::prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn tail_mass_is_monotone(r in 0.0f64..1e5, k in -3.0f64..-0.01, zeta in 0.05f64..3.0) {
            let p = make_put(k, zeta).unwrap();
            proptest::prop_assert!(p.tail_mass(2.0 * r) <= p.tail_mass(r));
            proptest::prop_assert!(p.tail_mass(r) >= 0.0);
        }
    }
}
