use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::{affine_rank, Polytope};
use crate::error::{Error, Result};
use crate::rational::{self, QVector, Rational};

/// A full-dimensional simplex given by `dim + 1` affinely independent
/// vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    vertices: Vec<QVector>,
}

impl Simplex {
    pub fn new(vertices: Vec<QVector>) -> Result<Self> {
        let dim = vertices.first().map_or(0, Vec::len);
        if vertices.len() != dim + 1 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Polytope(format!(
                "a simplex in dimension {dim} needs {} vertices",
                dim + 1
            )));
        }
        let s = Simplex { vertices };
        if s.signed_det().is_zero() {
            return Err(Error::Polytope("simplex vertices are affinely dependent".into()));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[QVector] {
        &self.vertices
    }

    fn signed_det(&self) -> Rational {
        let v0 = &self.vertices[0];
        let edges: Vec<QVector> = self.vertices[1..].iter().map(|v| rational::sub(v, v0)).collect();
        rational::determinant(&edges)
    }

    pub fn volume(&self) -> Rational {
        self.signed_det().abs() / Rational::from_integer(rational::factorial(self.dim()))
    }

    /// Barycentric coordinates of `y`, or `None` if outside the affine span.
    pub fn barycentric(&self, y: &[Rational]) -> Option<QVector> {
        let d = self.dim();
        // Solve Σ λ_k v_k = y, Σ λ_k = 1.
        let mut rows: Vec<QVector> = (0..d)
            .map(|i| self.vertices.iter().map(|v| v[i].clone()).collect())
            .collect();
        rows.push(vec![Rational::from_integer(1.into()); d + 1]);
        let mut rhs = y.to_vec();
        rhs.push(Rational::from_integer(1.into()));
        rational::solve(&rows, &rhs)
    }

    pub fn contains(&self, y: &[Rational]) -> bool {
        self.barycentric(y)
            .is_some_and(|l| l.iter().all(|x| !x.is_negative()))
    }
}

/// Fan triangulation: cone from the lexicographically least vertex of each
/// face over the triangulations of the faces' facets not containing it.
/// Output order is fully determined by the vertex ordering.
pub fn triangulate(p: &Polytope) -> Vec<Simplex> {
    let facets: Vec<BTreeSet<usize>> = (0..p.facets().len())
        .map(|i| p.facet_vertices(i).iter().copied().collect())
        .collect();
    let all: BTreeSet<usize> = (0..p.vertices().len()).collect();
    let mut out = Vec::new();
    for cell in triangulate_face(p, &facets, &all, p.dim()) {
        let vertices = cell.iter().map(|&i| p.vertices()[i].clone()).collect();
        out.push(Simplex { vertices });
    }
    out
}

fn triangulate_face(
    p: &Polytope,
    facets: &[BTreeSet<usize>],
    face: &BTreeSet<usize>,
    dim: usize,
) -> Vec<Vec<usize>> {
    let apex = *face.iter().next().expect("faces are nonempty");
    if dim == 0 {
        return vec![vec![apex]];
    }
    let mut cells = Vec::new();
    for sub in subfaces(p, facets, face, dim) {
        if sub.contains(&apex) {
            continue;
        }
        for mut cell in triangulate_face(p, facets, &sub, dim - 1) {
            cell.insert(0, apex);
            cells.push(cell);
        }
    }
    cells
}

/// Facets of a face, as vertex-index sets, in a deterministic order.
fn subfaces(
    p: &Polytope,
    facets: &[BTreeSet<usize>],
    face: &BTreeSet<usize>,
    dim: usize,
) -> Vec<BTreeSet<usize>> {
    let mut found = BTreeSet::new();
    for f in facets {
        let meet: BTreeSet<usize> = face.intersection(f).copied().collect();
        if meet.is_empty() || meet == *face {
            continue;
        }
        let pts: Vec<&QVector> = meet.iter().map(|&i| &p.vertices()[i]).collect();
        if affine_rank(&pts) + 1 == dim {
            found.insert(meet);
        }
    }
    found.into_iter().collect()
}
