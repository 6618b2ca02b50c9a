//! The solitonic vector field ξ and the Kähler–Einstein test.
//!
//! ξ is the unique minimizer of the strictly convex function
//!
//! ```text
//! G(ξ) = ∫_{Δ⁺} e^{−2⟨p−κ, ξ⟩} dμ_DH,    ∇G = −2 F(ξ),    ∇²G = 4 ∫ (p−κ)⊗(p−κ) e^{…} dμ_DH
//! ```
//!
//! where `F(ξ) = ∫ (p−κ) e^{−2⟨p−κ, ξ⟩} dμ_DH` is the modified Futaki
//! vector. Minimization is damped Newton with Armijo backtracking.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::dh_integral::{weighted_moments_centered, Moments, QuadratureOptions};
use crate::error::{Error, Result};
use crate::problem::HorosphericalProblem;
use crate::rational::{self, QVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonOptions {
    /// Stop when `‖F(ξ)‖ ≤ tol · V`.
    pub tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        SolitonOptions {
            tol: 1e-10,
            max_iterations: 100,
            armijo: 1e-4,
            quadrature: QuadratureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSolution {
    pub xi: Vec<f64>,
    /// `‖F(ξ)‖ / V` at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
    pub hessian_min_eig: f64,
}

fn moments(hp: &HorosphericalProblem, xi: &[f64], quad: &QuadratureOptions) -> Result<Moments> {
    if xi.len() != hp.rank() {
        return Err(Error::Dimension {
            expected: hp.rank(),
            got: xi.len(),
        });
    }
    let ell: Vec<f64> = xi.iter().map(|x| -2.0 * x).collect();
    weighted_moments_centered(hp.moment(), hp.density(), &ell, &hp.kappa_f64(), quad)
}

/// `G(ξ)`.
pub fn objective(hp: &HorosphericalProblem, xi: &[f64], quad: &QuadratureOptions) -> Result<f64> {
    Ok(moments(hp, xi, quad)?.i0)
}

/// `F(ξ)`, one component per a₁ basis vector.
pub fn futaki_vector(hp: &HorosphericalProblem, xi: &[f64], quad: &QuadratureOptions) -> Result<Vec<f64>> {
    Ok(moments(hp, xi, quad)?.i1)
}

/// `∇G(ξ) = −2 F(ξ)`.
pub fn objective_gradient(hp: &HorosphericalProblem, xi: &[f64], quad: &QuadratureOptions) -> Result<Vec<f64>> {
    Ok(futaki_vector(hp, xi, quad)?.iter().map(|f| -2.0 * f).collect())
}

fn hessian(m: &Moments) -> DMatrix<f64> {
    let n = m.i1.len();
    DMatrix::from_fn(n, n, |i, j| 4.0 * 0.5 * (m.i2[i][j] + m.i2[j][i]))
}

fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.min()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn solve_soliton(hp: &HorosphericalProblem, opts: &SolitonOptions) -> Result<SolitonSolution> {
    let volume = rational::to_f64(&hp.volume()?);
    let r = hp.rank();
    let mut xi = vec![0.0; r];
    let mut m = moments(hp, &xi, &opts.quadrature)?;
    for iteration in 0..=opts.max_iterations {
        let residual = norm(&m.i1) / volume;
        let h = hessian(&m);
        if residual <= opts.tol {
            return Ok(SolitonSolution {
                xi,
                residual_norm: residual,
                iterations: iteration,
                hessian_min_eig: min_eigenvalue(&h),
            });
        }
        if iteration == opts.max_iterations {
            break;
        }
        let grad = DVector::from_iterator(r, m.i1.iter().map(|f| -2.0 * f));
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                return Err(Error::Solver(format!(
                    "soliton: Hessian not positive definite at iteration {iteration} (min eigenvalue {:e})",
                    min_eigenvalue(&h)
                )))
            }
        };
        let slope = grad.dot(&step);
        // Close to the minimum the decrease of G drops below its rounding
        // level; the gradient norm is the usable merit there.
        let noise = 64.0 * f64::EPSILON * m.i0.abs();
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = xi.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
            let mt = moments(hp, &trial, &opts.quadrature)?;
            let armijo = mt.i0 <= m.i0 + opts.armijo * alpha * slope;
            let flat = -alpha * slope <= noise && norm(&mt.i1) < norm(&m.i1);
            if mt.i0.is_finite() && (armijo || flat) {
                xi = trial;
                m = mt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::Solver(format!(
                    "soliton: line search stalled at iteration {iteration}, residual {residual:e}"
                )));
            }
        }
    }
    Err(Error::Solver(format!(
        "soliton: no convergence in {} iterations (residual {:e}); kappa may be numerically on the boundary",
        opts.max_iterations,
        norm(&m.i1) / volume
    )))
}

/// `(Bar_DH = κ, Bar_DH − κ)`, decided in exact arithmetic.
pub fn kahler_einstein_test(hp: &HorosphericalProblem) -> Result<(bool, QVector)> {
    let gap = rational::sub(&hp.barycenter()?, hp.kappa());
    Ok((gap.iter().all(Zero::is_zero), gap))
}
