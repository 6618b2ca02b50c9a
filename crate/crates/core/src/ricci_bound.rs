//! The greatest Ricci lower bound R(M), by exact ray–facet intersection.
//!
//! With `b = Bar_DH − κ ≠ 0`, the ray from the origin in direction `−b`
//! leaves `Δ⁺ − κ` at `−s*·b`, and `R(M) = s*/(1 + s*)`. When `b = 0` the
//! manifold is Kähler–Einstein and `R(M) = 1`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::problem::HorosphericalProblem;
use crate::rational::{self, QVector, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RicciBoundResult {
    pub t_infinity: Rational,
    /// `None` in the Kähler–Einstein case, where there is no exit.
    pub exit_scalar: Option<Rational>,
    /// Indices into the facets of `Δ⁺ − κ` that are tight at the exit point.
    pub tight_facets: Vec<usize>,
    pub exit_point: Option<QVector>,
}

/// `s* = min { offset / ⟨normal, d⟩ : ⟨normal, d⟩ > 0 }` and the facets
/// attaining it.
pub fn ray_exit(p: &Polytope, d: &[Rational]) -> Result<(Rational, Vec<usize>)> {
    if d.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: d.len(),
        });
    }
    if rational::is_zero_vec(d) {
        return Err(Error::validation("ray direction", "direction vector is zero"));
    }
    if !p.contains_in_interior(&rational::zeros(p.dim())) {
        return Err(Error::validation("ray origin", "the origin is not an interior point"));
    }
    let mut best: Option<Rational> = None;
    let mut tight = Vec::new();
    for (i, f) in p.facets().iter().enumerate() {
        let rate = rational::dot(&f.normal, d);
        if !rate.is_positive() {
            continue;
        }
        let s = &f.offset / rate;
        match &best {
            Some(b) if s > *b => {}
            Some(b) if s == *b => tight.push(i),
            _ => {
                best = Some(s);
                tight = vec![i];
            }
        }
    }
    // A bounded polytope always has a facet ahead of a nonzero ray.
    let s = best.expect("bounded polytope");
    Ok((s, tight))
}

/// R(M) from the shifted polytope `Δ⁺ − κ` and the gap `Bar_DH − κ`.
pub fn ricci_bound_from_gap(shifted: &Polytope, gap: &[Rational]) -> Result<RicciBoundResult> {
    if gap.iter().all(Zero::is_zero) {
        return Ok(RicciBoundResult {
            t_infinity: Rational::one(),
            exit_scalar: None,
            tight_facets: Vec::new(),
            exit_point: None,
        });
    }
    let direction = rational::neg(gap);
    let (s, tight) = ray_exit(shifted, &direction)?;
    let t = &s / (Rational::one() + &s);
    Ok(RicciBoundResult {
        t_infinity: t,
        exit_point: Some(rational::scale(&direction, &s)),
        exit_scalar: Some(s),
        tight_facets: tight,
    })
}

pub fn greatest_ricci_lower_bound(hp: &HorosphericalProblem) -> Result<RicciBoundResult> {
    let gap = rational::sub(&hp.barycenter()?, hp.kappa());
    ricci_bound_from_gap(&hp.shifted(), &gap)
}
