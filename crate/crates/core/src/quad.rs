//! One-dimensional quadrature: adaptive Gauss-Kronrod and nested midpoint with Richardson.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Quad { value: kron * h, error: ((kron - gauss) * h).abs() }
}

struct Seg {
    a: f64,
    b: f64,
    q: Quad,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.q.error == o.q.error
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.q.error.total_cmp(&o.q.error)
    }
}

/// Adaptive G7/K15 on a finite interval; bisects the worst segment until the
/// summed error estimate meets `max(abs_tol, rel_tol*|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    integrate_with_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// As [`integrate`] over `[edges[0], edges[last]]`, starting from the
/// segments between sorted `edges`, so that known jumps and kinks sit on
/// segment ends instead of being hunted by bisection.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, edges: &[f64], abs_tol: f64, rel_tol: f64) -> Quad {
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in edges.windows(2) {
        if w[1] > w[0] {
            let q = gk15(&f, w[0], w[1]);
            total += q.value;
            err += q.error;
            heap.push(Seg { a: w[0], b: w[1], q });
        }
    }
    if heap.is_empty() {
        return Quad { value: 0.0, error: 0.0 };
    }
    let cap = 2000 + 50 * heap.len();
    let mut iters = 0;
    while err > abs_tol.max(rel_tol * total.abs()) && iters < cap {
        let Some(s) = heap.pop() else { break };
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            heap.push(s);
            break;
        }
        let l = gk15(&f, s.a, m);
        let r = gk15(&f, m, s.b);
        total += l.value + r.value - s.q.value;
        err += l.error + r.error - s.q.error;
        heap.push(Seg { a: s.a, b: m, q: l });
        heap.push(Seg { a: m, b: s.b, q: r });
        iters += 1;
    }
    // resum to avoid drift from the running updates
    let (v, e) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.q.value, e + s.q.error));
    Quad { value: v, error: e }
}

/// Integral over `[a, inf)` through `x = a + t/(1-t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    integrate_to_inf_with_breaks(f, a, &[], abs_tol, rel_tol)
}

/// As [`integrate_to_inf`] with interior breakpoints `breaks > a`.
pub fn integrate_to_inf_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Quad {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().filter(|b| **b > a && b.is_finite()).map(|b| (b - a) / (1.0 + b - a)));
    edges.push(1.0);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    integrate_with_breaks(g, &edges, abs_tol, rel_tol)
}

/// Integral over the real line, split at 0.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, abs_tol: f64, rel_tol: f64) -> Quad {
    let r = integrate_to_inf(&f, 0.0, abs_tol * 0.5, rel_tol);
    let l = integrate_to_inf(|x| f(-x), 0.0, abs_tol * 0.5, rel_tol);
    Quad { value: l.value + r.value, error: l.error + r.error }
}

/// Nested midpoint rule with step tripling (so evaluations are reused) and
/// Richardson elimination of the `h^2` term. Returns the extrapolated value
/// with the gap to the previous extrapolant as the error estimate, or the
/// sequence of raw midpoint sums if `guard` is exceeded.
pub fn midpoint_richardson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_level: usize,
    guard: f64,
) -> std::result::Result<Quad, Vec<f64>> {
    let mut n = 1usize;
    let mut sum = f(0.5 * (a + b));
    let mut raw = vec![sum * (b - a)];
    let mut prev_ext: Option<f64> = None;
    for _ in 0..max_level {
        let h = (b - a) / n as f64;
        // new points at a + h(i + 1/6) and a + h(i + 5/6)
        let mut add = 0.0;
        for i in 0..n {
            let x0 = a + h * i as f64;
            add += f(x0 + h / 6.0) + f(x0 + 5.0 * h / 6.0);
        }
        sum += add;
        n *= 3;
        let m = sum * (b - a) / n as f64;
        if !m.is_finite() || m.abs() > guard {
            raw.push(m);
            return Err(raw);
        }
        let ext = (9.0 * m - raw[raw.len() - 1]) / 8.0;
        raw.push(m);
        if let Some(p) = prev_ext {
            let err = (ext - p).abs();
            if err <= rel_tol * ext.abs() || err == 0.0 {
                return Ok(Quad { value: ext, error: err });
            }
        }
        prev_ext = Some(ext);
    }
    let v = prev_ext.unwrap_or(raw[raw.len() - 1]);
    let e = (v - raw[raw.len() - 1]).abs();
    Ok(Quad { value: v, error: e })
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
