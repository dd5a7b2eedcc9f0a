//! Composite Gauss-Legendre quadrature on the Nyquist band.

use crate::scalar::Real;

const ORDER: usize = 16;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A fixed set of nodes and weights covering an interval.
#[derive(Debug, Clone)]
pub(crate) struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    /// Composite rule over `[lo, hi]`, split at `breaks` (any order, points
    /// outside the interval ignored) and with every panel no wider than
    /// `max_width`.
    pub fn composite(lo: T, hi: T, breaks: &[T], max_width: T) -> Self {
        let mut cuts: Vec<T> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup();
        let (x, w) = gauss_legendre(ORDER);
        let x: Vec<T> = x.into_iter().map(T::lit).collect();
        let w: Vec<T> = w.into_iter().map(T::lit).collect();
        let half = T::lit(0.5);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let pieces = if max_width > T::zero() {
                ((b - a) / max_width).ceil().to_f64_lossy().max(1.0) as usize
            } else {
                1
            };
            let step = (b - a) / T::lit(pieces as f64);
            for k in 0..pieces {
                let pa = a + step * T::lit(k as f64);
                let mid = pa + step * half;
                let rad = step * half;
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push(mid + rad * *xi);
                    weights.push(rad * *wi);
                }
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}
