//! Classical root systems in orthogonal coordinates and the parabolic data
//! (roots outside a Levi subset, the shift vector κ, the integers a_α)
//! that parameterize a horospherical manifold.
//!
//! Realizations are the textbook ones: `A_n` lives in `ℝ^{n+1}` with roots
//! `e_i − e_j`, `B_n`/`C_n`/`D_n` in `ℝ^n`. Direct sums stack coordinate
//! blocks, and torus factors add coordinates carrying no roots. The scalar
//! product is the Euclidean one, which is Weyl-invariant in these models.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, mat_vec, QVector, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl Family {
    pub fn from_letter(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "C" | "c" => Ok(Family::C),
            "D" | "d" => Ok(Family::D),
            other => Err(Error::RootSystem(format!(
                "unknown family letter {other:?} (expected A, B, C or D)"
            ))),
        }
    }

    /// Number of ambient coordinates used by the standard realization.
    fn ambient(self, rank: usize) -> usize {
        match self {
            Family::A => rank + 1,
            _ => rank,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::C => 'C',
            Family::D => 'D',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSystemSpec {
    pub factors: Vec<(Family, usize)>,
    pub torus_rank: usize,
}

impl RootSystemSpec {
    pub fn torus(rank: usize) -> Self {
        RootSystemSpec {
            factors: Vec::new(),
            torus_rank: rank,
        }
    }

    pub fn simple(family: Family, rank: usize) -> Self {
        RootSystemSpec {
            factors: vec![(family, rank)],
            torus_rank: 0,
        }
    }
}

/// A reductive root datum: roots, simple roots and the scalar product on
/// the character space.
#[derive(Debug, Clone, PartialEq)]
pub struct RootDatum {
    pub spec: RootSystemSpec,
    pub dim: usize,
    pub simple_roots: Vec<QVector>,
    pub positive_roots: Vec<QVector>,
    /// Coefficients of each positive root in the simple-root basis.
    pub simple_coefficients: Vec<Vec<i64>>,
    pub gram: Vec<QVector>,
}

fn unit(dim: usize, i: usize, coeff: i64) -> QVector {
    let mut v = rational::zeros(dim);
    v[i] = int(coeff);
    v
}

fn combo(dim: usize, terms: &[(usize, i64)]) -> QVector {
    let mut v = rational::zeros(dim);
    for &(i, c) in terms {
        v[i] += int(c);
    }
    v
}

/// Builds the root datum for a direct sum of classical factors plus a
/// central torus.
pub fn build_root_system(spec: &RootSystemSpec) -> Result<RootDatum> {
    for &(family, rank) in &spec.factors {
        if rank == 0 {
            return Err(Error::RootSystem(format!("{family}0 has rank zero")));
        }
        if family == Family::D && rank < 2 {
            return Err(Error::RootSystem("D1 is not a root system (use D_n, n >= 2)".into()));
        }
    }
    let dim: usize = spec
        .factors
        .iter()
        .map(|&(f, n)| f.ambient(n))
        .sum::<usize>()
        + spec.torus_rank;

    let mut simple = Vec::new();
    let mut positive = Vec::new();
    let mut offset = 0;
    for &(family, n) in &spec.factors {
        let o = offset;
        let chain = |i: usize| combo(dim, &[(o + i, 1), (o + i + 1, -1)]);
        match family {
            Family::A => {
                simple.extend((0..n).map(chain));
                for i in 0..=n {
                    for j in i + 1..=n {
                        positive.push(combo(dim, &[(o + i, 1), (o + j, -1)]));
                    }
                }
            }
            Family::B | Family::C => {
                simple.extend((0..n - 1).map(chain));
                let last = if family == Family::B { 1 } else { 2 };
                simple.push(unit(dim, o + n - 1, last));
                for i in 0..n {
                    for j in i + 1..n {
                        positive.push(combo(dim, &[(o + i, 1), (o + j, -1)]));
                        positive.push(combo(dim, &[(o + i, 1), (o + j, 1)]));
                    }
                    positive.push(unit(dim, o + i, last));
                }
            }
            Family::D => {
                simple.extend((0..n - 1).map(chain));
                simple.push(combo(dim, &[(o + n - 2, 1), (o + n - 1, 1)]));
                for i in 0..n {
                    for j in i + 1..n {
                        positive.push(combo(dim, &[(o + i, 1), (o + j, -1)]));
                        positive.push(combo(dim, &[(o + i, 1), (o + j, 1)]));
                    }
                }
            }
        }
        offset += family.ambient(n);
    }

    let gram: Vec<QVector> = (0..dim).map(|i| unit(dim, i, 1)).collect();
    let basis_t = rational::transpose(&simple);
    let mut coefficients = Vec::with_capacity(positive.len());
    for root in &positive {
        let c = rational::solve(&basis_t, root)
            .ok_or_else(|| Error::RootSystem("positive root outside the simple-root span".into()))?;
        let c: Vec<i64> = c
            .iter()
            .map(|x| {
                if x.is_integer() && !x.is_negative() {
                    Ok(rational::to_f64(x) as i64)
                } else {
                    Err(Error::RootSystem(format!("root coefficient {x} is not a nonnegative integer")))
                }
            })
            .collect::<Result<_>>()?;
        coefficients.push(c);
    }

    let rd = RootDatum {
        spec: spec.clone(),
        dim,
        simple_roots: simple,
        positive_roots: positive,
        simple_coefficients: coefficients,
        gram,
    };
    rd.check_cartan()?;
    Ok(rd)
}

impl RootDatum {
    /// The scalar product `(a, b)` defined by the gram matrix.
    pub fn pair(&self, a: &[Rational], b: &[Rational]) -> Rational {
        rational::dot(a, &mat_vec(&self.gram, b))
    }

    pub fn cartan_matrix(&self) -> Vec<Vec<Rational>> {
        self.simple_roots
            .iter()
            .map(|a| {
                self.simple_roots
                    .iter()
                    .map(|b| int(2) * self.pair(a, b) / self.pair(b, b))
                    .collect()
            })
            .collect()
    }

    fn check_cartan(&self) -> Result<()> {
        for (i, row) in self.cartan_matrix().iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let ok = if i == j {
                    *c == int(2)
                } else {
                    c.is_integer() && !c.is_positive()
                };
                if !ok {
                    return Err(Error::RootSystem(format!(
                        "Cartan entry ({i},{j}) = {c} violates the integrality condition"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_root(&self, v: &[Rational]) -> bool {
        let negated = rational::neg(v);
        self.positive_roots
            .iter()
            .any(|r| r.as_slice() == v || *r == negated)
    }

    pub fn rank(&self) -> usize {
        self.simple_roots.len()
    }
}

/// `α∨ = 2α/(α,α)` in the shared coordinate space.
pub fn coroot(rd: &RootDatum, alpha: &[Rational]) -> Result<QVector> {
    if alpha.len() != rd.dim {
        return Err(Error::Dimension {
            expected: rd.dim,
            got: alpha.len(),
        });
    }
    if !rd.is_root(alpha) {
        return Err(Error::NotARoot(format!("{:?}", rational::to_f64_vec(alpha))));
    }
    let norm = rd.pair(alpha, alpha);
    Ok(rational::scale(alpha, &(int(2) / norm)))
}

/// Roots of the unipotent radical opposite to the Levi subset, the shift
/// vector κ = Σ α over them, and `a_α = ⟨κ, α∨⟩`.
///
/// κ plays the role of `-2ρ_P` when `P` contains the opposite Borel; see
/// the book chapter on conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicDatum {
    /// Zero-based indices into `RootDatum::simple_roots`.
    pub levi_subset: BTreeSet<usize>,
    pub phi_q_plus: Vec<QVector>,
    pub kappa: QVector,
    pub a_alpha: Vec<u64>,
}

/// `levi` holds zero-based simple-root indices.
pub fn parabolic_data(rd: &RootDatum, levi: &BTreeSet<usize>) -> Result<ParabolicDatum> {
    if let Some(&bad) = levi.iter().find(|&&i| i >= rd.rank()) {
        return Err(Error::RootSystem(format!(
            "Levi index {bad} out of range (rank {})",
            rd.rank()
        )));
    }
    // A positive root lies in the Levi iff its simple-root support is inside I.
    let phi_q_plus: Vec<QVector> = rd
        .positive_roots
        .iter()
        .zip(&rd.simple_coefficients)
        .filter(|(_, c)| c.iter().enumerate().any(|(i, &ci)| ci != 0 && !levi.contains(&i)))
        .map(|(r, _)| r.clone())
        .collect();
    let kappa = phi_q_plus
        .iter()
        .fold(rational::zeros(rd.dim), |acc, r| rational::add(&acc, r));
    let mut a_alpha = Vec::with_capacity(phi_q_plus.len());
    for alpha in &phi_q_plus {
        let cv = coroot(rd, alpha)?;
        let a = rd.pair(&kappa, &cv);
        if !a.is_integer() || !a.is_positive() {
            return Err(Error::RootSystem(format!("a_alpha = {a} is not a positive integer")));
        }
        a_alpha.push(rational::to_f64(&a) as u64);
    }
    Ok(ParabolicDatum {
        levi_subset: levi.clone(),
        phi_q_plus,
        kappa,
        a_alpha,
    })
}

impl ParabolicDatum {
    /// `α∨ / a_α` for every root in Φ_Q⁺, in character coordinates.
    pub fn scaled_coroots(&self, rd: &RootDatum) -> Result<Vec<QVector>> {
        self.phi_q_plus
            .iter()
            .zip(&self.a_alpha)
            .map(|(alpha, &a)| {
                let cv = coroot(rd, alpha)?;
                Ok(rational::scale(&cv, &(Rational::one() / int(a as i64))))
            })
            .collect()
    }

    pub fn is_toric(&self) -> bool {
        self.phi_q_plus.is_empty() && self.kappa.iter().all(Zero::is_zero)
    }
}
