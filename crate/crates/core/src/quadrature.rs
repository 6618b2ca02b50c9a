//! Gauss–Legendre rules and their collapsed-coordinate extension to
//! simplices.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_m and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre on `[0, 1]`.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    )
}

/// A rule on the reference simplex: barycentric nodes and weights that sum
/// to one, so `∫_S f ≈ vol(S) Σ w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub barycentric: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Tensor Gauss–Legendre in collapsed (Duffy) coordinates, `m` nodes per
    /// axis. Exact for polynomials of degree `≤ 2m − dim`.
    pub fn collapsed(dim: usize, m: usize) -> Self {
        let (x, w) = gauss_legendre_unit(m);
        let total = m.pow(dim as u32);
        let d_fact: f64 = (1..=dim).map(|k| k as f64).product();
        let mut barycentric = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut lam = vec![0.0; dim + 1];
            let mut remaining = 1.0;
            let mut weight = d_fact;
            for (k, &i) in idx.iter().enumerate() {
                let s = x[i];
                lam[k + 1] = remaining * s;
                weight *= w[i] * (1.0 - s).powi((dim - 1 - k) as i32);
                remaining *= 1.0 - s;
            }
            lam[0] = remaining;
            barycentric.push(lam);
            weights.push(weight);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < m {
                    break;
                }
                *slot = 0;
            }
        }
        SimplexRule { barycentric, weights }
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
