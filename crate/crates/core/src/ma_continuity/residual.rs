use super::{Grid, MaEquation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PointResidual {
    /// Flat grid index.
    pub index: usize,
    pub value: f64,
    /// False when the discrete gradient left the interior of 2Δ or the
    /// density factor is not positive there.
    pub admissible: bool,
}

/// Pointwise residual `K det ∇²u Π_β(β, κ − ∇u/2) − e^{−w_t − ⟨∇u, ξ⟩}` at
/// interior grid points, from centered differences. Rank one and two.
pub fn ma_residual(eq: &MaEquation, grid: &Grid, u: &[f64], t: f64) -> Result<Vec<PointResidual>> {
    if grid.dim != eq.dim {
        return Err(Error::Dimension {
            expected: eq.dim,
            got: grid.dim,
        });
    }
    if u.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let h = grid.h();
    let n = grid.n;
    let mut out = Vec::new();
    match eq.dim {
        1 => {
            for i in 1..n - 1 {
                let grad = [(u[i + 1] - u[i - 1]) / (2.0 * h)];
                let det = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
                out.push(point(eq, grid, u, t, i, &grad, det));
            }
        }
        2 => {
            let at = |i: usize, j: usize| u[i * n + j];
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let grad = [
                        (at(i + 1, j) - at(i - 1, j)) / (2.0 * h),
                        (at(i, j + 1) - at(i, j - 1)) / (2.0 * h),
                    ];
                    let uxx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (h * h);
                    let uyy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (h * h);
                    let uxy =
                        (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h * h);
                    out.push(point(eq, grid, u, t, i * n + j, &grad, uxx * uyy - uxy * uxy));
                }
            }
        }
        r => {
            return Err(Error::Unsupported(format!(
                "Monge-Ampere residual in rank {r}; ranks 1 and 2 are implemented"
            )))
        }
    }
    Ok(out)
}

fn point(eq: &MaEquation, grid: &Grid, u: &[f64], t: f64, index: usize, grad: &[f64], det: f64) -> PointResidual {
    let x = grid.point(index);
    let w = t * u[index] + (1.0 - t) * eq.reference.value(&x);
    let factor = eq.density_factor(grad);
    let twist: f64 = grad.iter().zip(&eq.xi).map(|(g, s)| g * s).sum();
    let admissible = eq.gradient_admissible(grad, 0.0) && factor > 0.0;
    PointResidual {
        index,
        value: eq.constant * det * factor - (-w - twist).exp(),
        admissible,
    }
}
