//! Exact rational convex polytopes with both vertex and facet
//! representations.
//!
//! Hull computations are brute force over subsets of points or
//! inequalities. That is plenty for the handful of vertices a desk-scale
//! moment polytope has, and it keeps every step exact.

mod reflective;
mod triangulate;

pub use reflective::{validate_reflective, ConditionResult, ReflectivityReport, VertexBranch};
pub use triangulate::{triangulate, Simplex};

use std::collections::BTreeSet;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, QVector, Rational};

/// The halfspace `{y : ⟨normal, y⟩ ≤ offset}`. Normals are stored as
/// primitive integer vectors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Facet {
    pub normal: QVector,
    pub offset: Rational,
}

impl Facet {
    pub fn new(normal: QVector, offset: Rational) -> Self {
        let s = rational::primitive_scale(&normal);
        Facet {
            normal: rational::scale(&normal, &s),
            offset: offset * s,
        }
    }

    /// `offset − ⟨normal, y⟩`; nonnegative inside.
    pub fn slack(&self, y: &[Rational]) -> Rational {
        &self.offset - rational::dot(&self.normal, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<QVector>,
    facets: Vec<Facet>,
    /// For each facet, the sorted indices of the vertices lying on it.
    incidence: Vec<Vec<usize>>,
}

fn check_dims(points: &[QVector]) -> Result<usize> {
    let dim = points
        .first()
        .ok_or_else(|| Error::Polytope("empty input".into()))?
        .len();
    if dim == 0 {
        return Err(Error::Polytope("zero-dimensional ambient space".into()));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(dim)
}

fn affine_rank(points: &[&QVector]) -> usize {
    match points.split_first() {
        None => 0,
        Some((p0, rest)) => {
            let diffs: Vec<QVector> = rest.iter().map(|p| rational::sub(p, p0)).collect();
            rational::rank(&diffs)
        }
    }
}

impl Polytope {
    /// Convex hull of a finite point set. Rejects lower-dimensional hulls.
    pub fn from_vertices(points: Vec<QVector>) -> Result<Self> {
        let dim = check_dims(&points)?;
        let points: Vec<QVector> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let refs: Vec<&QVector> = points.iter().collect();
        let r = affine_rank(&refs);
        if r < dim {
            return Err(Error::Polytope(format!(
                "lower-dimensional: affine hull has dimension {r} in ambient dimension {dim}"
            )));
        }

        let mut facets = BTreeSet::new();
        if dim == 1 {
            let lo = points.first().unwrap()[0].clone();
            let hi = points.last().unwrap()[0].clone();
            facets.insert(Facet::new(vec![Rational::one()], hi));
            facets.insert(Facet::new(vec![-Rational::one()], -lo));
        } else {
            for subset in (0..points.len()).combinations(dim) {
                let p0 = &points[subset[0]];
                let rows: Vec<QVector> = subset[1..]
                    .iter()
                    .map(|&i| rational::sub(&points[i], p0))
                    .collect();
                let ns = rational::null_space(&rows, dim);
                if ns.len() != 1 {
                    continue;
                }
                let normal = &ns[0];
                let offset = rational::dot(normal, p0);
                let mut above = false;
                let mut below = false;
                for p in &points {
                    let v = rational::dot(normal, p);
                    if v > offset {
                        above = true;
                    } else if v < offset {
                        below = true;
                    }
                    if above && below {
                        break;
                    }
                }
                match (above, below) {
                    (false, true) => {
                        facets.insert(Facet::new(normal.clone(), offset));
                    }
                    (true, false) => {
                        facets.insert(Facet::new(rational::neg(normal), -offset));
                    }
                    _ => {}
                }
            }
        }
        let facets: Vec<Facet> = facets.into_iter().collect();

        // A point is a vertex iff the normals of its tight facets span.
        let vertices: Vec<QVector> = points
            .into_iter()
            .filter(|p| {
                let tight: Vec<QVector> = facets
                    .iter()
                    .filter(|f| f.slack(p).is_zero())
                    .map(|f| f.normal.clone())
                    .collect();
                rational::rank(&tight) == dim
            })
            .collect();
        Ok(Self::assemble(dim, vertices, facets))
    }

    /// Intersection of halfspaces `⟨normal, y⟩ ≤ offset`. Rejects empty,
    /// unbounded and lower-dimensional results.
    pub fn from_halfspaces(halfspaces: Vec<Facet>) -> Result<Self> {
        let normals: Vec<QVector> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        let dim = check_dims(&normals)?;

        // Bounded iff the recession cone {A y ≤ 0} is trivial; test that on
        // the cone cut by the unit box.
        let mut cone: Vec<Facet> = halfspaces
            .iter()
            .map(|h| Facet {
                normal: h.normal.clone(),
                offset: Rational::zero(),
            })
            .collect();
        for i in 0..dim {
            let mut e = rational::zeros(dim);
            e[i] = Rational::one();
            cone.push(Facet {
                normal: e.clone(),
                offset: Rational::one(),
            });
            cone.push(Facet {
                normal: rational::neg(&e),
                offset: Rational::one(),
            });
        }
        if let Some(ray) = enumerate_vertices(dim, &cone)
            .into_iter()
            .find(|v| !rational::is_zero_vec(v))
        {
            return Err(Error::Polytope(format!(
                "unbounded: recession direction {:?}",
                rational::to_f64_vec(&ray)
            )));
        }

        let vertices = enumerate_vertices(dim, &halfspaces);
        if vertices.is_empty() {
            return Err(Error::Polytope("empty intersection of halfspaces".into()));
        }
        Self::from_vertices(vertices)
    }

    fn assemble(dim: usize, vertices: Vec<QVector>, facets: Vec<Facet>) -> Self {
        let incidence = facets
            .iter()
            .map(|f| {
                vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| f.slack(v).is_zero())
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Polytope {
            dim,
            vertices,
            facets,
            incidence,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[QVector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Vertex indices on facet `i`.
    pub fn facet_vertices(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    pub fn contains(&self, y: &[Rational]) -> bool {
        self.facets.iter().all(|f| !f.slack(y).is_negative())
    }

    pub fn contains_in_interior(&self, y: &[Rational]) -> bool {
        self.facets.iter().all(|f| f.slack(y).is_positive())
    }

    /// Floating-point interior test with a relative margin.
    pub fn contains_in_interior_f64(&self, y: &[f64], margin: f64) -> bool {
        self.facets.iter().all(|f| {
            let n = rational::to_f64_vec(&f.normal);
            let dot: f64 = n.iter().zip(y).map(|(a, b)| a * b).sum();
            rational::to_f64(&f.offset) - dot > margin
        })
    }

    pub fn translate(&self, shift: &[Rational]) -> Self {
        let vertices: Vec<QVector> = self.vertices.iter().map(|v| rational::add(v, shift)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal.clone(),
                offset: &f.offset + rational::dot(&f.normal, shift),
            })
            .collect();
        Self::reassemble(self.dim, vertices, facets)
    }

    /// The point reflection `−P`.
    pub fn negate(&self) -> Self {
        let vertices = self.vertices.iter().map(|v| rational::neg(v)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: rational::neg(&f.normal),
                offset: f.offset.clone(),
            })
            .collect();
        Self::reassemble(self.dim, vertices, facets)
    }

    /// Dilation by a positive factor.
    pub fn dilate(&self, factor: &Rational) -> Result<Self> {
        if !factor.is_positive() {
            return Err(Error::Polytope("dilation factor must be positive".into()));
        }
        let vertices = self.vertices.iter().map(|v| rational::scale(v, factor)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal.clone(),
                offset: &f.offset * factor,
            })
            .collect();
        Ok(Self::reassemble(self.dim, vertices, facets))
    }

    /// Image under an invertible linear map given by its rows.
    pub fn linear_image(&self, map: &[QVector]) -> Result<Self> {
        if rational::determinant(map).is_zero() {
            return Err(Error::Polytope("linear map is singular".into()));
        }
        Self::from_vertices(self.vertices.iter().map(|v| rational::mat_vec(map, v)).collect())
    }

    fn reassemble(dim: usize, vertices: Vec<QVector>, facets: Vec<Facet>) -> Self {
        let vertices: Vec<QVector> = vertices.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let facets: Vec<Facet> = facets.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Self::assemble(dim, vertices, facets)
    }

    /// Exact volume, summed over the fan triangulation.
    pub fn volume(&self) -> Rational {
        triangulate(self)
            .iter()
            .fold(Rational::zero(), |acc, s| acc + s.volume())
    }

    /// Largest Euclidean vertex norm (in these coordinates).
    pub fn max_vertex_norm(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| rational::to_f64_vec(v).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| rational::to_f64_vec(v)).collect()
    }
}

/// Every feasible intersection point of `dim` independent bounding
/// hyperplanes.
fn enumerate_vertices(dim: usize, halfspaces: &[Facet]) -> Vec<QVector> {
    let mut out = BTreeSet::new();
    for subset in (0..halfspaces.len()).combinations(dim) {
        let m: Vec<QVector> = subset.iter().map(|&i| halfspaces[i].normal.clone()).collect();
        let b: Vec<Rational> = subset.iter().map(|&i| halfspaces[i].offset.clone()).collect();
        if let Some(y) = rational::solve(&m, &b) {
            if halfspaces.iter().all(|h| !h.slack(&y).is_negative()) {
                out.insert(y);
            }
        }
    }
    out.into_iter().collect()
}

/// The polar dual `Q* = {y : ⟨x, y⟩ ≥ −1 for all x ∈ Q}`. Requires the
/// origin in the interior of `Q`.
pub fn dual_polytope(q: &Polytope) -> Result<Polytope> {
    if !q.contains_in_interior(&rational::zeros(q.dim())) {
        return Err(Error::validation(
            "dual polytope",
            "the origin is not an interior point",
        ));
    }
    let halfspaces = q
        .vertices()
        .iter()
        .map(|v| Facet::new(rational::neg(v), Rational::one()))
        .collect();
    Polytope::from_halfspaces(halfspaces)
}

/// `max_{v ∈ P} ⟨x, v⟩`.
pub fn support_value(p: &Polytope, x: &[Rational]) -> Rational {
    p.vertices()
        .iter()
        .map(|v| rational::dot(x, v))
        .max()
        .expect("polytopes have at least one vertex")
}

/// `Δ⁺ = κ + Q*`, checking that κ lands in the interior.
pub fn moment_polytope(q: &Polytope, kappa: &[Rational]) -> Result<Polytope> {
    if kappa.len() != q.dim() {
        return Err(Error::Dimension {
            expected: q.dim(),
            got: kappa.len(),
        });
    }
    let delta_plus = dual_polytope(q)?.translate(kappa);
    if !delta_plus.contains_in_interior(kappa) {
        return Err(Error::validation(
            "moment polytope interiority",
            "kappa is not an interior point of kappa + Q*",
        ));
    }
    Ok(delta_plus)
}

/// `Δ = κ − Δ⁺`, which contains the origin in its interior.
pub fn delta_from_moment(delta_plus: &Polytope, kappa: &[Rational]) -> Result<Polytope> {
    if kappa.len() != delta_plus.dim() {
        return Err(Error::Dimension {
            expected: delta_plus.dim(),
            got: kappa.len(),
        });
    }
    if !delta_plus.contains_in_interior(kappa) {
        return Err(Error::validation(
            "kappa interiority",
            "kappa is not an interior point of the moment polytope",
        ));
    }
    Ok(delta_plus.negate().translate(kappa))
}
