//! Gauss–Legendre rules: 1-D nodes, composite panels, and the collapsed
//! (Duffy) rule on the reference simplex `{t ≥ 0, Σt ≤ 1}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] to [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    GaussLegendre { nodes, weights }
}

/// The `n`-point rule on `[0, 1]`, exact for polynomials of degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute(n))).clone()
}

/// Composite rule on `[a, b]` with `panels` equal panels of `n` nodes each.
pub fn composite(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let left = a + p as f64 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((left + h * x, h * w));
        }
    }
    out
}

/// Collapsed tensor rule with `q` points per axis on the reference
/// `k`-simplex; exact for polynomials of total degree `p` when `2q − 1 ≥ p + k − 1`.
pub fn simplex_rule(k: usize, q: usize) -> Vec<(Vec<f64>, f64)> {
    if k == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let rule = gauss_legendre(q);
    let mut out = Vec::with_capacity(q.pow(k as u32));
    let mut idx = vec![0usize; k];
    loop {
        let mut t = vec![0.0; k];
        let mut w = 1.0;
        let mut rest = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            let u = rule.nodes[i];
            t[axis] = rest * u;
            w *= rule.weights[i] * rest;
            rest *= 1.0 - u;
        }
        out.push((t, w));
        let mut axis = 0;
        loop {
            idx[axis] += 1;
            if idx[axis] < q {
                break;
            }
            idx[axis] = 0;
            axis += 1;
            if axis == k {
                return out;
            }
        }
    }
}

/// Points per axis making the collapsed rule exact for degree `p` on a `k`-simplex.
pub fn exact_order(k: usize, p: usize) -> usize {
    (p + k).div_ceil(2).max(1)
}
