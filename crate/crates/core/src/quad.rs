//! Gauss-Legendre rules and a node-doubling driver.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result, C64};

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule of size `n`; rules are built once per process.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over [a, b]; `f` returns `N` complex components.
    pub fn integrate<const N: usize, F>(&self, a: f64, b: f64, f: F) -> [C64; N]
    where
        F: Fn(f64) -> [C64; N],
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [C64::new(0.0, 0.0); N];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for k in 0..N {
                acc[k] += v[k] * (w * half);
            }
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Node-doubling settings.
#[derive(Debug, Clone, Copy)]
pub struct Doubling {
    pub start: usize,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for Doubling {
    fn default() -> Self {
        Doubling {
            start: 64,
            tol: 1e-11,
            max_nodes: 4096,
        }
    }
}

/// Result of a converged integral: value, last change, node count used.
#[derive(Debug, Clone, Copy)]
pub struct Converged<const N: usize> {
    pub value: [C64; N],
    pub change: f64,
    pub nodes: usize,
}

/// Doubles the node count until successive estimates agree to `tol`
/// (absolute, relative to max(1, |value|)).
pub fn integrate_doubling<const N: usize, F>(
    a: f64,
    b: f64,
    opts: Doubling,
    f: F,
) -> Result<Converged<N>>
where
    F: Fn(f64) -> [C64; N],
{
    let mut n = opts.start;
    let mut prev = GaussLegendre::cached(n).integrate(a, b, &f);
    loop {
        let next_n = 2 * n;
        if next_n > opts.max_nodes {
            let change = f64::NAN;
            return Err(Error::Quadrature { change, nodes: n });
        }
        let cur = GaussLegendre::cached(next_n).integrate(a, b, &f);
        let change = (0..N).map(|k| (cur[k] - prev[k]).norm()).fold(0.0, f64::max);
        let scale = (0..N).map(|k| cur[k].norm()).fold(1.0, f64::max);
        if change <= opts.tol * scale {
            return Ok(Converged {
                value: cur,
                change,
                nodes: next_n,
            });
        }
        if 2 * next_n > opts.max_nodes {
            return Err(Error::Quadrature {
                change,
                nodes: next_n,
            });
        }
        prev = cur;
        n = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 64, 257] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(10);
        let v = r.integrate(0.0, 2.0, |x| [C64::new(x.powi(19), 0.0)]);
        assert!((v[0].re - 2f64.powi(20) / 20.0).abs() < 1e-8);
    }

    #[test]
    fn doubling_converges_on_smooth_integrand() {
        let c = integrate_doubling(0.0, 1.0, Doubling::default(), |x| [C64::new(x.exp(), 0.0)])
            .unwrap();
        assert!((c.value[0].re - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
