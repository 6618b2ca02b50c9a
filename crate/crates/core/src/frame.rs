//! Coordinates on a₁ and its dual.
//!
//! The moment polytope lives in an `r`-dimensional subspace of the
//! character space. A frame fixes a basis `b_1..b_r` of that subspace:
//! a point `y ∈ ℝ^r` of a₁* stands for the character `Σ y_i b_i`, and a
//! vector `v` of the coweight side has a₁-coordinates `z_i = (b_i, v)`, so
//! that `⟨y, z⟩ = Σ y_i z_i`. Linear forms `p ↦ (β, p)` become coefficient
//! vectors `(β, b_i)` in the same way.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{self, QVector, Rational};
use crate::root_system::RootDatum;

#[derive(Debug, Clone, PartialEq)]
pub struct A1Frame {
    basis: Vec<QVector>,
    gram: Vec<QVector>,
    /// Rows: a basis of the character lattice in a₁* coordinates.
    lattice: Vec<QVector>,
}

fn identity(n: usize) -> Vec<QVector> {
    (0..n)
        .map(|i| {
            let mut e = rational::zeros(n);
            e[i] = Rational::from_integer(1.into());
            e
        })
        .collect()
}

impl A1Frame {
    /// a₁* is the whole character space, with the coordinate lattice.
    pub fn standard(rd: &RootDatum) -> Self {
        A1Frame {
            basis: identity(rd.dim),
            gram: rd.gram.clone(),
            lattice: identity(rd.dim),
        }
    }

    pub fn new(rd: &RootDatum, basis: Vec<QVector>, lattice: Option<Vec<QVector>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::validation("a1 basis", "empty basis"));
        }
        if let Some(b) = basis.iter().find(|b| b.len() != rd.dim) {
            return Err(Error::Dimension {
                expected: rd.dim,
                got: b.len(),
            });
        }
        if rational::rank(&basis) != basis.len() {
            return Err(Error::validation("a1 basis", "basis vectors are linearly dependent"));
        }
        let r = basis.len();
        let lattice = match lattice {
            None => identity(r),
            Some(rows) => {
                if rows.len() != r || rows.iter().any(|row| row.len() != r) {
                    return Err(Error::validation(
                        "lattice override",
                        format!("expected an {r}x{r} matrix"),
                    ));
                }
                if rational::determinant(&rows).is_zero() {
                    return Err(Error::validation("lattice override", "matrix is singular"));
                }
                rows
            }
        };
        Ok(A1Frame {
            basis,
            gram: rd.gram.clone(),
            lattice,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QVector] {
        &self.basis
    }

    fn pair(&self, a: &[Rational], b: &[Rational]) -> Rational {
        rational::dot(a, &rational::mat_vec(&self.gram, b))
    }

    /// a₁* coordinates of a character, if it lies in the subspace.
    pub fn to_a1_star(&self, p: &[Rational]) -> Option<QVector> {
        rational::solve(&rational::transpose(&self.basis), p)
    }

    /// Coefficients of the form `y ↦ (β, Σ y_i b_i)`; also the a₁
    /// coordinates of a coweight-side vector.
    pub fn form(&self, beta: &[Rational]) -> QVector {
        self.basis.iter().map(|b| self.pair(beta, b)).collect()
    }

    pub fn in_character_lattice(&self, y: &[Rational]) -> bool {
        rational::solve(&rational::transpose(&self.lattice), y)
            .is_some_and(|c| c.iter().all(rational::is_integral))
    }

    /// Membership in the dual lattice of one-parameter subgroups.
    pub fn in_coweight_lattice(&self, z: &[Rational]) -> bool {
        self.lattice
            .iter()
            .all(|row| rational::is_integral(&rational::dot(row, z)))
    }
}
