//! The reflectivity conditions a polytope `Q ⊂ a₁` must satisfy to define
//! a Fano horospherical embedding, plus the dominance check on `κ + Q*`.

use num_traits::Signed;
use serde::Serialize;

use super::{dual_polytope, Polytope};
use crate::error::{Error, Result};
use crate::frame::A1Frame;
use crate::rational::{self, QVector, Rational};
use crate::root_system::{ParabolicDatum, RootDatum};

/// Which admissible branch a vertex of `Q` satisfies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexBranch {
    Lattice,
    /// Equals `α∨/a_α` for the root with this index in Φ_Q⁺.
    ScaledCoroot(usize),
    /// Both a lattice point and a scaled coroot.
    Both(usize),
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub passed: bool,
    /// True when there was nothing to check.
    pub vacuous: bool,
    /// Points violating the condition, as `"p/q"` coordinate strings.
    pub offending: Vec<Vec<String>>,
}

impl ConditionResult {
    fn from_failures(checked: usize, offending: Vec<QVector>) -> Self {
        ConditionResult {
            passed: offending.is_empty(),
            vacuous: checked == 0,
            offending: offending
                .iter()
                .map(|v| v.iter().map(rational::format_rational).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectivityReport {
    /// (1) vertices of Q are coweight-lattice points or scaled coroots.
    pub vertices_admissible: ConditionResult,
    pub vertex_branches: Vec<VertexBranch>,
    /// (2) vertices of Q* are characters.
    pub dual_vertices_in_lattice: ConditionResult,
    /// (3) every `α∨/a_α` lies in Q.
    pub scaled_coroots_in_q: ConditionResult,
    /// (4) `κ + Q*` lies in the closed dominant chamber.
    pub dominant: ConditionResult,
    /// Upper bound `f = max (α, p)` over vertices of `κ + Q*` and α ∈ Φ_Q⁺.
    pub density_bound: Option<String>,
}

impl ReflectivityReport {
    pub fn all_passed(&self) -> bool {
        self.vertices_admissible.passed
            && self.dual_vertices_in_lattice.passed
            && self.scaled_coroots_in_q.passed
            && self.dominant.passed
    }

    /// Name of the first failing condition, if any.
    pub fn first_failure(&self) -> Option<&'static str> {
        [
            (&self.vertices_admissible, "reflectivity (1): vertices of Q in N(T) or of the form coroot/a"),
            (&self.dual_vertices_in_lattice, "reflectivity (2): vertices of Q* in X(T)"),
            (&self.scaled_coroots_in_q, "reflectivity (3): coroot/a in Q"),
            (&self.dominant, "dominance: kappa + Q* in the dominant chamber"),
        ]
        .into_iter()
        .find(|(c, _)| !c.passed)
        .map(|(_, name)| name)
    }
}

pub fn validate_reflective(
    q: &Polytope,
    rd: &RootDatum,
    pd: &ParabolicDatum,
    frame: &A1Frame,
) -> Result<ReflectivityReport> {
    if q.dim() != frame.rank() {
        return Err(Error::Dimension {
            expected: frame.rank(),
            got: q.dim(),
        });
    }
    let dual = dual_polytope(q)?;

    let scaled: Vec<QVector> = pd
        .scaled_coroots(rd)?
        .iter()
        .map(|c| frame.form(c))
        .collect();

    let mut branches = Vec::new();
    let mut bad_vertices = Vec::new();
    for v in q.vertices() {
        let lattice = frame.in_coweight_lattice(v);
        let coroot = scaled.iter().position(|c| c == v);
        let branch = match (lattice, coroot) {
            (true, None) => VertexBranch::Lattice,
            (false, Some(i)) => VertexBranch::ScaledCoroot(i),
            (true, Some(i)) => VertexBranch::Both(i),
            (false, None) => {
                bad_vertices.push(v.clone());
                VertexBranch::Neither
            }
        };
        branches.push(branch);
    }

    let bad_dual: Vec<QVector> = dual
        .vertices()
        .iter()
        .filter(|y| !frame.in_character_lattice(y))
        .cloned()
        .collect();

    let outside: Vec<QVector> = scaled.iter().filter(|c| !q.contains(c)).cloned().collect();

    let kappa = frame.to_a1_star(&pd.kappa).ok_or_else(|| {
        Error::validation("kappa in a1*", "kappa does not lie in the span of the a1 basis")
    })?;
    let delta_plus = dual.translate(&kappa);
    let forms: Vec<QVector> = rd.positive_roots.iter().map(|a| frame.form(a)).collect();
    let non_dominant: Vec<QVector> = delta_plus
        .vertices()
        .iter()
        .filter(|p| forms.iter().any(|f| rational::dot(f, p).is_negative()))
        .cloned()
        .collect();
    let q_forms: Vec<QVector> = pd.phi_q_plus.iter().map(|a| frame.form(a)).collect();
    let density_bound = if q_forms.is_empty() {
        None
    } else {
        delta_plus
            .vertices()
            .iter()
            .flat_map(|p| q_forms.iter().map(move |f| rational::dot(f, p)))
            .max()
            .map(|f: Rational| rational::format_rational(&f))
    };

    Ok(ReflectivityReport {
        vertices_admissible: ConditionResult::from_failures(q.vertices().len(), bad_vertices),
        vertex_branches: branches,
        dual_vertices_in_lattice: ConditionResult::from_failures(dual.vertices().len(), bad_dual),
        scaled_coroots_in_q: ConditionResult::from_failures(scaled.len(), outside),
        dominant: ConditionResult::from_failures(
            if forms.iter().all(|f| rational::is_zero_vec(f)) { 0 } else { forms.len() },
            non_dominant,
        ),
        density_bound,
    })
}
