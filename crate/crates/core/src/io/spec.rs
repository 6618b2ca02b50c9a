use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::CliError;
use crate::frame::A1Frame;
use crate::polytope::{Facet, Polytope, ReflectivityReport};
use crate::problem::HorosphericalProblem;
use crate::rational::{parse_rational, QVector, Rational};
use crate::root_system::{build_root_system, parabolic_data, Family, RootSystemSpec};

/// A rational read from JSON, either as an integer or as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Q(pub Rational);

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Q;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a rational string such as \"-1/2\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Q, E> {
                Ok(Q(Rational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Q, E> {
                Ok(Q(Rational::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Q, E> {
                Err(E::custom(format!("float {v} is not exact; write it as a string like \"1/3\"")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Q, E> {
                parse_rational(v).map(Q).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

fn qvec(v: &[Q]) -> QVector {
    v.iter().map(|q| q.0.clone()).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FactorSpec {
    Pair(String, usize),
    Named { family: String, rank: usize },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSystemJson {
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub torus_rank: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetJson {
    pub normal: Vec<Q>,
    pub offset: Q,
}

/// `vertices` or `facets` (`⟨normal, y⟩ ≤ offset`), not both.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeJson {
    pub vertices: Option<Vec<Vec<Q>>>,
    pub facets: Option<Vec<FacetJson>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeChoice {
    #[serde(rename = "Q")]
    pub q: Option<PolytopeJson>,
    pub moment: Option<PolytopeJson>,
}

/// Solver settings stored with the problem. Command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptionsJson {
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    #[serde(rename = "box")]
    pub half_width: Option<f64>,
    pub t0: Option<f64>,
    pub quad_order: Option<usize>,
    pub allow_nonreflective: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub root_system: RootSystemJson,
    /// One-based simple-root indices.
    #[serde(default)]
    pub levi_subset: Vec<usize>,
    /// Basis of a₁* inside the character space; the whole space by default.
    pub a1_basis: Option<Vec<Vec<Q>>>,
    /// Rows: a basis of the character lattice in a₁* coordinates.
    pub lattice_override: Option<Vec<Vec<Q>>>,
    pub polytope: PolytopeChoice,
    #[serde(default)]
    pub options: SolverOptionsJson,
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub spec: ProblemSpec,
    pub problem: HorosphericalProblem,
    /// Present when the input gave Q.
    pub reflectivity: Option<ReflectivityReport>,
    /// Hex SHA-256 of the raw input bytes.
    pub input_sha256: String,
}

fn build_polytope(p: &PolytopeJson, path: &str) -> Result<Polytope, CliError> {
    match (&p.vertices, &p.facets) {
        (Some(v), None) => {
            Polytope::from_vertices(v.iter().map(|x| qvec(x)).collect()).map_err(CliError::from_load)
        }
        (None, Some(f)) => Polytope::from_halfspaces(
            f.iter().map(|h| Facet::new(qvec(&h.normal), h.offset.0.clone())).collect(),
        )
        .map_err(CliError::from_load),
        _ => Err(CliError::schema(path, "give exactly one of \"vertices\" and \"facets\"")),
    }
}

fn root_system_spec(rs: &RootSystemJson) -> Result<RootSystemSpec, CliError> {
    let mut factors = Vec::new();
    for (i, f) in rs.factors.iter().enumerate() {
        let (letter, rank) = match f {
            FactorSpec::Pair(l, r) => (l, *r),
            FactorSpec::Named { family, rank } => (family, *rank),
        };
        let family = Family::from_letter(letter)
            .map_err(|e| CliError::schema(format!("root_system.factors[{i}]"), e.to_string()))?;
        factors.push((family, rank));
    }
    Ok(RootSystemSpec {
        factors,
        torus_rank: rs.torus_rank,
    })
}

/// Parses and validates a problem from JSON text.
pub fn parse_problem(text: &str, allow_nonreflective: bool) -> Result<LoadedProblem, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ProblemSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::schema(path, e.into_inner().to_string())
    })?;
    let input_sha256 = hex::encode(Sha256::digest(text.as_bytes()));

    let rd = build_root_system(&root_system_spec(&spec.root_system)?).map_err(CliError::from_load)?;
    let mut levi = BTreeSet::new();
    for (i, &k) in spec.levi_subset.iter().enumerate() {
        if k == 0 || k > rd.rank() {
            return Err(CliError::schema(
                format!("levi_subset[{i}]"),
                format!("index {k} is not in 1..={}", rd.rank()),
            ));
        }
        levi.insert(k - 1);
    }
    let pd = parabolic_data(&rd, &levi).map_err(CliError::from_load)?;
    let lattice = spec.lattice_override.as_ref().map(|m| m.iter().map(|r| qvec(r)).collect());
    let frame = match &spec.a1_basis {
        Some(b) => A1Frame::new(&rd, b.iter().map(|r| qvec(r)).collect(), lattice),
        None if lattice.is_some() => A1Frame::new(&rd, A1Frame::standard(&rd).basis().to_vec(), lattice),
        None => Ok(A1Frame::standard(&rd)),
    }
    .map_err(CliError::from_load)?;

    let allow = allow_nonreflective || spec.options.allow_nonreflective.unwrap_or(false);
    let (problem, reflectivity) = match (&spec.polytope.q, &spec.polytope.moment) {
        (Some(q), None) => {
            let q = build_polytope(q, "polytope.Q")?;
            let (hp, report) =
                HorosphericalProblem::from_reflective(rd, pd, frame, &q).map_err(CliError::from_load)?;
            if let (false, Some(name)) = (allow, report.first_failure()) {
                return Err(CliError::Validation(format!("{name}; {}", offending(&report))));
            }
            (hp, Some(report))
        }
        (None, Some(m)) => {
            let m = build_polytope(m, "polytope.moment")?;
            let hp = HorosphericalProblem::from_root_data(rd, pd, frame, m).map_err(CliError::from_load)?;
            (hp, None)
        }
        _ => return Err(CliError::schema("polytope", "give exactly one of \"Q\" and \"moment\"")),
    };
    Ok(LoadedProblem {
        spec,
        problem,
        reflectivity,
        input_sha256,
    })
}

fn offending(r: &ReflectivityReport) -> String {
    let all = [
        &r.vertices_admissible,
        &r.dual_vertices_in_lattice,
        &r.scaled_coroots_in_q,
        &r.dominant,
    ];
    let bad = all.iter().find(|c| !c.passed).map_or(&[][..], |c| &c.offending[..]);
    let pts: Vec<String> = bad.iter().map(|p| format!("({})", p.join(", "))).collect();
    format!("offending points: {}", pts.join(" "))
}

pub fn load_problem(path: &Path, allow_nonreflective: bool) -> Result<LoadedProblem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::schema(path.display().to_string(), format!("cannot read input: {e}")))?;
    parse_problem(&text, allow_nonreflective)
}
