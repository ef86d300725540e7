//! Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! The 7/15-point Gauss-Kronrod pair from QUADPACK drives a globally adaptive
//! bisection scheme. Semi-infinite pieces are handled with the substitution
//! `z = a + (1 - t) / t`, `t in (0, 1]`, so the rule never evaluates the
//! integrand at infinity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

/// Kronrod abscissae on [0, 1], descending; `XGK[7]` is the centre.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the embedded 7-point rule (odd Kronrod nodes).
pub const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Absolute/relative tolerance pair; a result is accepted when the
/// estimated error is below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: Complex64) -> f64 {
        self.abs.max(self.rel * value.norm())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_err: f64,
    pub evals: usize,
    pub converged: bool,
}

/// One 15-point panel: Kronrod value, embedded Gauss value and the QUADPACK
/// error heuristic.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub kronrod: Complex64,
    pub gauss: Complex64,
    pub err: f64,
    /// `err` is the round-off floor `50 eps int |f|` and cannot shrink by bisection.
    pub at_floor: bool,
}

/// The 15 abscissae of the Kronrod rule mapped onto `[a, b]`, in ascending order.
pub fn gk15_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for j in 0..7 {
        out[j] = c - h * XGK[j];
        out[14 - j] = c + h * XGK[j];
    }
    out[7] = c;
    out
}

/// Weights matching [`gk15_nodes`] (Kronrod and embedded Gauss), scaled by the half-width.
pub fn gk15_weights(a: f64, b: f64) -> ([f64; 15], [f64; 15]) {
    let h = 0.5 * (b - a);
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for j in 0..7 {
        wk[j] = h * WGK[j];
        wk[14 - j] = h * WGK[j];
        if j % 2 == 1 {
            wg[j] = h * WG[j / 2];
            wg[14 - j] = h * WG[j / 2];
        }
    }
    wk[7] = h * WGK[7];
    wg[7] = h * WG[3];
    (wk, wg)
}

/// Combine precomputed integrand values at [`gk15_nodes`] into a panel estimate.
pub fn gk15_combine(values: &[Complex64; 15], a: f64, b: f64) -> Panel {
    let (wk, wg) = gk15_weights(a, b);
    let mut kronrod = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut resabs = 0.0;
    for j in 0..15 {
        kronrod += values[j] * wk[j];
        gauss += values[j] * wg[j];
        resabs += wk[j].abs() * values[j].norm();
    }
    let mean = kronrod / (b - a);
    let mut resasc = 0.0;
    for j in 0..15 {
        resasc += wk[j].abs() * (values[j] - mean).norm();
    }
    let mut err = (kronrod - gauss).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let mut at_floor = false;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * resabs;
        if err <= floor {
            err = floor;
            at_floor = true;
        }
    }
    Panel { kronrod, gauss, err, at_floor }
}

pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Panel {
    let nodes = gk15_nodes(a, b);
    let mut values = [Complex64::new(0.0, 0.0); 15];
    for (v, &x) in values.iter_mut().zip(nodes.iter()) {
        *v = f(x);
    }
    gk15_combine(&values, a, b)
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `z = base + (1 - t) / t`
    Right(f64),
    /// `z = base - (1 - t) / t`
    Left(f64),
}

impl Map {
    #[inline]
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Identity => (t, 1.0),
            Map::Right(base) => (base + (1.0 - t) / t, 1.0 / (t * t)),
            Map::Left(base) => (base - (1.0 - t) / t, 1.0 / (t * t)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    map: Map,
    value: Complex64,
    err: f64,
    at_floor: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn eval_segment<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64, map: Map) -> Segment {
    let panel = gk15(
        &mut |t| {
            let (z, jac) = map.apply(t);
            let v = f(z) * jac;
            // Far-tail evaluations may overflow to inf/NaN where the true value is ~0.
            if !(v.re.is_finite() && v.im.is_finite()) && z.abs() > 1e12 {
                Complex64::new(0.0, 0.0)
            } else {
                v
            }
        },
        a,
        b,
    );
    Segment { a, b, map, value: panel.kronrod, err: panel.err, at_floor: panel.at_floor }
}

/// Globally adaptive integration of `f` over `[lo, hi]`, where either bound
/// may be infinite. `breaks` are interior points where the integrand changes
/// character; they seed the initial partition.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> QuadResult {
    if lo == hi {
        return QuadResult { value: Complex64::new(0.0, 0.0), abs_err: 0.0, evals: 0, converged: true };
    }
    let (lo, hi, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let mut points: Vec<f64> = breaks.iter().copied().filter(|p| p.is_finite() && *p > lo && *p < hi).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    // A semi-infinite piece needs a finite anchor; reuse the outermost break or 0.
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut finite: Vec<f64> = Vec::new();
    let left_anchor = if lo.is_finite() {
        finite.push(lo);
        None
    } else {
        Some(points.first().copied().unwrap_or(if hi.is_finite() { hi } else { 0.0 }))
    };
    finite.extend(points.iter().copied());
    let right_anchor = if hi.is_finite() {
        finite.push(hi);
        None
    } else {
        Some(finite.last().copied().unwrap_or(0.0))
    };
    if let Some(anchor) = left_anchor {
        if finite.first().is_none_or(|&x| x != anchor) {
            finite.insert(0, anchor);
        }
        heap.push(eval_segment(&mut f, 0.0, 1.0, Map::Left(anchor)));
        evals += 15;
    }
    if let Some(anchor) = right_anchor {
        if finite.last().is_none_or(|&x| x != anchor) {
            finite.push(anchor);
        }
        heap.push(eval_segment(&mut f, 0.0, 1.0, Map::Right(anchor)));
        evals += 15;
    }
    for w in finite.windows(2) {
        if w[1] > w[0] {
            heap.push(eval_segment(&mut f, w[0], w[1], Map::Identity));
            evals += 15;
        }
    }

    let total = |heap: &BinaryHeap<Segment>| -> (Complex64, f64) {
        heap.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), s| (v + s.value, e + s.err))
    };

    let (mut value, mut err) = total(&heap);
    let mut converged = err <= tol.target(value);
    while !converged && heap.len() < max_segments {
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        // The worst segment is round-off limited, so no bisection can help.
        if worst.at_floor {
            heap.push(worst);
            converged = true;
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-15 * worst.a.abs().max(1e-300) {
            heap.push(worst);
            break;
        }
        let left = eval_segment(&mut f, worst.a, mid, worst.map);
        let right = eval_segment(&mut f, mid, worst.b, worst.map);
        evals += 30;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // Refresh sums occasionally to avoid drift from incremental updates.
        if heap.len() % 64 == 0 {
            let (v, e) = total(&heap);
            value = v;
            err = e;
        }
        converged = err <= tol.target(value);
    }
    let (v, e) = total(&heap);
    value = v;
    err = e;
    converged = converged || err <= tol.target(value);
    QuadResult { value: value * sign, abs_err: err, evals, converged }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> (f64, f64, bool) {
    let r = integrate(|x| Complex64::new(f(x), 0.0), lo, hi, breaks, tol, max_segments);
    (r.value.re, r.abs_err, r.converged)
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
struct Wynn {
    table: Vec<Vec<Complex64>>,
}

impl Wynn {
    fn new() -> Self {
        Self { table: Vec::new() }
    }

    /// Push the next partial sum; returns the best limit estimate so far.
    fn push(&mut self, s: Complex64) -> Complex64 {
        // table[k] holds column k of the epsilon table (column 0: partial sums).
        if self.table.is_empty() {
            self.table.push(Vec::new());
        }
        self.table[0].push(s);
        let n = self.table[0].len();
        for k in 1..n {
            if self.table.len() <= k {
                self.table.push(Vec::new());
            }
            let j = self.table[k].len();
            let prev_minus = if k >= 2 { self.table[k - 2][j + 1] } else { Complex64::new(0.0, 0.0) };
            let diff = self.table[k - 1][j + 1] - self.table[k - 1][j];
            let v = if diff.norm() == 0.0 { Complex64::new(f64::INFINITY, 0.0) } else { prev_minus + 1.0 / diff };
            self.table[k].push(v);
        }
        // Even columns carry estimates; take the deepest finite one.
        let mut best = s;
        let mut k = 0;
        while k < self.table.len() {
            if let Some(v) = self.table[k].last() {
                if v.re.is_finite() && v.im.is_finite() {
                    best = *v;
                }
            }
            k += 2;
        }
        best
    }
}

/// `int_a^{+-inf} f` for integrands of the form `e^{i w z} g(z)` with `g`
/// eventually monotone, by summing over half-periods (alternating terms) and
/// applying Wynn's epsilon algorithm to the partial sums. `direction` is `+1`
/// or `-1`.
pub fn integrate_oscillatory_tail<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    direction: f64,
    period: f64,
    tol: Tolerance,
    max_cycles: usize,
) -> QuadResult {
    let step = 0.5 * period.abs() * direction.signum();
    let mut wynn = Wynn::new();
    let mut partial = Complex64::new(0.0, 0.0);
    let mut evals = 0;
    let mut quad_err = 0.0;
    let mut history: Vec<Complex64> = Vec::new();
    for k in 0..max_cycles {
        let lo = a + step * k as f64;
        let hi = lo + step;
        let piece = integrate(&mut f, lo.min(hi), lo.max(hi), &[], Tolerance::new(0.1 * tol.abs, tol.rel), 200);
        evals += piece.evals;
        quad_err += piece.abs_err;
        partial += piece.value;
        // Restart the table every 40 cycles to bound its cost.
        if k % 40 == 0 && k > 0 {
            wynn = Wynn::new();
        }
        let est = wynn.push(partial);
        history.push(est);
        let m = history.len();
        if m >= 6 {
            let spread = (history[m - 1] - history[m - 2]).norm().max((history[m - 2] - history[m - 3]).norm());
            if spread + quad_err <= tol.target(est) {
                return QuadResult { value: est, abs_err: spread + quad_err, evals, converged: true };
            }
        }
    }
    let m = history.len();
    let value = history.last().copied().unwrap_or_default();
    let spread = if m >= 2 { (history[m - 1] - history[m - 2]).norm() } else { f64::INFINITY };
    QuadResult { value, abs_err: spread + quad_err, evals, converged: false }
}
