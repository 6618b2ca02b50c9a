//! The reduced real Monge–Ampère equation on a₁ and its continuity path
//!
//! ```text
//! K · det ∇²u · Π_β (β, κ − ∇u/2) = exp(−w_t − ⟨∇u, ξ⟩),    w_t = t·u + (1−t)·u⁰
//! ```
//!
//! with ∇u taking values in 2Δ = 2(κ − Δ⁺). The constant is
//! `K = V / (2^r G(ξ))`, which makes `∫ e^{−w_t} = V` hold for every t.
//! In rank one the equation is solved on a truncated line in flux form;
//! in rank two only the pointwise residual is available.

mod residual;
mod sweep;

pub use residual::{ma_residual, PointResidual};
pub use sweep::{
    continuity_sweep, estimate_rm_numeric, solve_at_t, write_trace_csv, ContinuityOptions, ContinuityState,
    ContinuityTrace, RmEstimate, Termination,
};

use crate::dh_integral::QuadratureOptions;
use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::problem::HorosphericalProblem;
use crate::quadrature::gauss_legendre;
use crate::rational;
use crate::soliton::objective;

/// `u⁰(x) = log Σ_v e^{⟨v,x⟩}` over the vertices of 2Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePotential {
    vertices: Vec<Vec<f64>>,
}

/// Log-sum-exp of `⟨v, x⟩` and the softmax weights.
fn softmax(vertices: &[Vec<f64>], x: &[f64]) -> (f64, Vec<f64>) {
    let e: Vec<f64> = vertices
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect();
    let top = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = e.iter().map(|z| (z - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    (top + total.ln(), weights.iter().map(|w| w / total).collect())
}

impl ReferencePotential {
    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        softmax(&self.vertices, x).0
    }

    /// A convex combination of the vertices, hence inside 2Δ.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, w) = softmax(&self.vertices, x);
        (0..self.dim())
            .map(|i| w.iter().zip(&self.vertices).map(|(wk, v)| wk * v[i]).sum())
            .collect()
    }

    /// The covariance of the vertices under the softmax weights.
    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let (_, w) = softmax(&self.vertices, x);
        let g = self.gradient(x);
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        w.iter()
                            .zip(&self.vertices)
                            .map(|(wk, v)| wk * (v[i] - g[i]) * (v[j] - g[j]))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Requires the origin in the interior of 2Δ.
pub fn reference_potential(two_delta: &Polytope) -> Result<ReferencePotential> {
    if !two_delta.contains_in_interior(&rational::zeros(two_delta.dim())) {
        return Err(Error::validation(
            "reference potential",
            "the origin is not an interior point of 2Δ",
        ));
    }
    Ok(ReferencePotential {
        vertices: two_delta.vertices_f64(),
    })
}

/// Uniform tensor grid on `[−L, L]^dim` with `n` points per axis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if n < 5 || half_width.is_nan() || half_width <= 0.0 {
            return Err(Error::validation(
                "grid",
                format!("need at least 5 points and a positive box, got n={n}, L={half_width}"),
            ));
        }
        Ok(Grid { dim, n, half_width })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.h()
    }

    /// Per-axis indices of a flat index.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        out
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index).iter().map(|&k| self.coordinate(k)).collect()
    }
}

/// Half-width `L` for which the tails of `e^{−v_{2Δ}}` beyond the box carry
/// less than `tail · V` along each coordinate direction.
pub fn default_half_width(two_delta: &Polytope, volume: f64, tail: f64) -> f64 {
    let verts = two_delta.vertices_f64();
    let mut l: f64 = 1.0;
    for i in 0..two_delta.dim() {
        for sign in [1.0, -1.0] {
            let slope = verts.iter().map(|v| sign * v[i]).fold(f64::NEG_INFINITY, f64::max);
            l = l.max((1.0 / (tail * volume * slope)).ln() / slope);
        }
    }
    l
}

/// Everything the discrete equation needs, in floating point.
#[derive(Debug, Clone)]
pub struct MaEquation {
    pub dim: usize,
    kappa: Vec<f64>,
    forms: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub volume: f64,
    /// The constant `K` in front of the Monge–Ampère operator.
    pub constant: f64,
    pub reference: ReferencePotential,
    two_delta: Polytope,
    /// `max_{v ∈ 2Δ} |v|`, a bound for every admissible gradient.
    pub gradient_bound: f64,
}

impl MaEquation {
    pub fn new(hp: &HorosphericalProblem, xi: &[f64], quad: &QuadratureOptions) -> Result<Self> {
        if xi.len() != hp.rank() {
            return Err(Error::Dimension {
                expected: hp.rank(),
                got: xi.len(),
            });
        }
        let two_delta = hp.two_delta();
        let volume = rational::to_f64(&hp.volume()?);
        let g = objective(hp, xi, quad)?;
        let dim = hp.rank();
        Ok(MaEquation {
            dim,
            kappa: hp.kappa_f64(),
            forms: hp.density().forms_f64(),
            xi: xi.to_vec(),
            volume,
            constant: volume / (2f64.powi(dim as i32) * g),
            reference: reference_potential(&two_delta)?,
            gradient_bound: two_delta.max_vertex_norm(),
            two_delta,
        })
    }

    pub fn two_delta(&self) -> &Polytope {
        &self.two_delta
    }

    /// `Π_β (β, κ − σ/2)` for a gradient value σ.
    pub fn density_factor(&self, sigma: &[f64]) -> f64 {
        self.forms
            .iter()
            .map(|f| {
                f.iter()
                    .zip(&self.kappa)
                    .zip(sigma)
                    .map(|((b, k), s)| b * (k - 0.5 * s))
                    .sum::<f64>()
            })
            .product()
    }

    /// `ξ`-twisted density `Π_β (β, κ − σ/2) e^{⟨ξ, σ⟩}`.
    pub fn flux_density(&self, sigma: &[f64]) -> f64 {
        let twist: f64 = self.xi.iter().zip(sigma).map(|(a, b)| a * b).sum();
        self.density_factor(sigma) * twist.exp()
    }

    pub fn gradient_admissible(&self, sigma: &[f64], margin: f64) -> bool {
        self.two_delta.contains_in_interior_f64(sigma, margin)
    }

    pub fn default_grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.dim, n, default_half_width(&self.two_delta, self.volume, 1e-8))
    }
}

/// `Φ(s) = ∫_a^s f(σ) dσ` for the rank-one flux density on `2Δ = [a, b]`,
/// extended linearly outside `[a, b]`.
#[derive(Debug, Clone)]
pub(crate) struct Flux1D {
    pub a: f64,
    pub b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    eq_forms: Vec<f64>,
    kappa: f64,
    xi: f64,
}

impl Flux1D {
    pub fn new(eq: &MaEquation) -> Self {
        let v = eq.two_delta.vertices_f64();
        let (nodes, weights) = gauss_legendre(24);
        Flux1D {
            a: v[0][0],
            b: v[1][0],
            nodes,
            weights,
            eq_forms: eq.forms.iter().map(|f| f[0]).collect(),
            kappa: eq.kappa[0],
            xi: eq.xi[0],
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        let s = s.clamp(self.a, self.b);
        let poly: f64 = self.eq_forms.iter().map(|b| b * (self.kappa - 0.5 * s)).product();
        poly * (self.xi * s).exp()
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * self.density(mid + half * x))
            .sum();
        sum * half
    }

    #[cfg(test)]
    fn total(&self) -> f64 {
        self.integral(self.a, self.b)
    }

    /// `Φ(hi) − Φ(lo)`, integrated directly to avoid cancellation.
    pub fn between(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return -self.between(hi, lo);
        }
        let mut sum = 0.0;
        if lo < self.a {
            sum += self.density(self.a) * (hi.min(self.a) - lo);
        }
        if hi > self.b {
            sum += self.density(self.b) * (hi - lo.max(self.b));
        }
        let (l, r) = (lo.max(self.a), hi.min(self.b));
        if l < r {
            sum += self.integral(l, r);
        }
        sum
    }

    #[cfg(test)]
    fn value(&self, s: f64) -> f64 {
        self.between(self.a, s)
    }
}
