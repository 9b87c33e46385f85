//! Gauss-Legendre rules and composite panel grids.
//!
//! Nodes are the roots of `P_n`, found by Newton iteration on the three-term
//! recurrence from Tricomi's initial guesses. Weights are
//! `2 / ((1 − x²) P_n'(x)²)`.

use std::f64::consts::PI;

/// Nodes and weights on `[−1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        if n == 1 {
            return Self { nodes: vec![0.0], weights: vec![2.0] };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi: x ≈ (1 − (n−1)/(8n³)) cos(π(4i + 3)/(4n + 2)).
            let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite rule: `panels` equal panels on `[lo, hi]`, each with an
/// `nodes_per_panel`-point Gauss-Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub lo: f64,
    pub hi: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub points: Vec<(f64, f64)>,
}

impl CompositeRule {
    pub fn new(lo: f64, hi: f64, panels: usize, nodes_per_panel: usize) -> Self {
        assert!(hi > lo, "empty interval [{lo}, {hi}]");
        assert!(panels >= 1);
        let rule = GaussLegendre::new(nodes_per_panel);
        let width = (hi - lo) / panels as f64;
        let mut points = Vec::with_capacity(panels * nodes_per_panel);
        for k in 0..panels {
            let a = lo + k as f64 * width;
            let b = if k + 1 == panels { hi } else { a + width };
            points.extend(rule.mapped(a, b));
        }
        Self { lo, hi, panels, nodes_per_panel, points }
    }

    /// Largest distance between neighbouring nodes, including the interval
    /// ends.
    pub fn max_gap(&self) -> f64 {
        let mut gap = self.points[0].0 - self.lo;
        for w in self.points.windows(2) {
            gap = gap.max(w[1].0 - w[0].0);
        }
        gap.max(self.hi - self.points[self.points.len() - 1].0)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(|&(x, w)| w * f(x)).sum()
    }
}

/// Trapezoid weights for a uniform grid of `n` samples with spacing `h`.
pub fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}
