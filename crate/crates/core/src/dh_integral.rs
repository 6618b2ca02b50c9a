//! Integrals over the moment polytope against the Duistermaat–Heckman
//! density `Π_β (β, p)`.
//!
//! Volumes and barycenters are exact rationals: each simplex of the fan
//! triangulation is handled by expanding the product of linear forms in
//! barycentric coordinates and integrating monomials in closed form,
//!
//! ```text
//! ∫_S λ^a dx = d! vol(S) Π a_k! / (|a| + d)!
//! ```
//!
//! Exponentially weighted moments, which the soliton solver needs, use
//! collapsed Gauss–Legendre quadrature with an order-doubling error check.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::polytope::{triangulate, Polytope, Simplex};
use crate::quadrature::{CompensatedSum, SimplexRule};
use crate::rational::{self, QVector, Rational};

/// Product of linear forms `p ↦ ⟨form, p⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DHDensity {
    dim: usize,
    forms: Vec<QVector>,
}

impl DHDensity {
    pub fn new(dim: usize, forms: Vec<QVector>) -> Result<Self> {
        if let Some(f) = forms.iter().find(|f| f.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: f.len(),
            });
        }
        Ok(DHDensity { dim, forms })
    }

    /// The constant density 1 (toric case).
    pub fn lebesgue(dim: usize) -> Self {
        DHDensity {
            dim,
            forms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forms(&self) -> &[QVector] {
        &self.forms
    }

    pub fn degree(&self) -> usize {
        self.forms.len()
    }

    pub fn eval(&self, p: &[Rational]) -> Rational {
        self.forms
            .iter()
            .fold(Rational::one(), |acc, f| acc * rational::dot(f, p))
    }

    pub fn eval_f64(forms: &[Vec<f64>], p: &[f64]) -> f64 {
        forms
            .iter()
            .map(|f| f.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
            .product()
    }

    pub fn forms_f64(&self) -> Vec<Vec<f64>> {
        self.forms.iter().map(|f| rational::to_f64_vec(f)).collect()
    }

    /// Every factor must be nonnegative on the polytope; checking vertices
    /// suffices for linear forms.
    pub fn check_nonnegative(&self, p: &Polytope) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: p.dim(),
            });
        }
        for (i, f) in self.forms.iter().enumerate() {
            if let Some(v) = p.vertices().iter().find(|v| rational::dot(f, v).is_negative()) {
                return Err(Error::validation(
                    "density nonnegativity",
                    format!(
                        "form {i} is negative at vertex {:?}",
                        v.iter().map(rational::format_rational).collect::<Vec<_>>()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// `p ↦ ⟨coeffs, p⟩ + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub coeffs: QVector,
    pub constant: Rational,
}

impl AffineForm {
    pub fn linear(coeffs: QVector) -> Self {
        AffineForm {
            coeffs,
            constant: Rational::zero(),
        }
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut e = rational::zeros(dim);
        e[i] = Rational::one();
        Self::linear(e)
    }

    fn eval(&self, p: &[Rational]) -> Rational {
        rational::dot(&self.coeffs, p) + &self.constant
    }
}

/// Exact integral over a simplex of a product of affine forms.
pub fn integrate_linear_forms(s: &Simplex, forms: &[AffineForm]) -> Rational {
    let d = s.dim();
    let verts = s.vertices();
    // Expand Π_j Σ_k λ_k ℓ_j(v_k) into monomials in the barycentric λ.
    let mut poly: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    poly.insert(vec![0; d + 1], Rational::one());
    for form in forms {
        let values: Vec<Rational> = verts.iter().map(|v| form.eval(v)).collect();
        let mut next: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (mono, c) in &poly {
            for (k, val) in values.iter().enumerate() {
                if val.is_zero() {
                    continue;
                }
                let mut m = mono.clone();
                m[k] += 1;
                *next.entry(m).or_insert_with(Rational::zero) += c * val;
            }
        }
        poly = next;
    }
    let n = forms.len();
    let denom = Rational::from_integer(rational::factorial(n + d));
    let scale = Rational::from_integer(rational::factorial(d)) * s.volume() / denom;
    let sum = poly.iter().fold(Rational::zero(), |acc, (mono, c)| {
        let num: BigInt = mono
            .iter()
            .map(|&a| rational::factorial(a as usize))
            .product();
        acc + c * Rational::from_integer(num)
    });
    sum * scale
}

/// Exact integral over a simplex of the monomial `Π p_i^{e_i}`.
pub fn integrate_monomial(s: &Simplex, exponents: &[u32]) -> Rational {
    let forms: Vec<AffineForm> = exponents
        .iter()
        .enumerate()
        .flat_map(|(i, &e)| std::iter::repeat_n(AffineForm::coordinate(s.dim(), i), e as usize))
        .collect();
    integrate_linear_forms(s, &forms)
}

/// DH volume and first moments `∫ p Π(β,p) dp`, exact.
fn exact_moments(p: &Polytope, d: &DHDensity) -> Result<(Rational, QVector)> {
    d.check_nonnegative(p)?;
    let base: Vec<AffineForm> = d.forms.iter().cloned().map(AffineForm::linear).collect();
    let mut volume = Rational::zero();
    let mut first = rational::zeros(p.dim());
    for s in triangulate(p) {
        volume += integrate_linear_forms(&s, &base);
        for (i, slot) in first.iter_mut().enumerate() {
            let mut forms = base.clone();
            forms.push(AffineForm::coordinate(p.dim(), i));
            *slot += integrate_linear_forms(&s, &forms);
        }
    }
    if !volume.is_positive() {
        return Err(Error::validation(
            "DH volume",
            "the density vanishes identically on the polytope",
        ));
    }
    Ok((volume, first))
}

/// `V = ∫_{Δ⁺} Π(β, p) dp`.
pub fn dh_volume(p: &Polytope, d: &DHDensity) -> Result<Rational> {
    d.check_nonnegative(p)?;
    let base: Vec<AffineForm> = d.forms.iter().cloned().map(AffineForm::linear).collect();
    let volume = triangulate(p)
        .iter()
        .fold(Rational::zero(), |acc, s| acc + integrate_linear_forms(s, &base));
    if !volume.is_positive() {
        return Err(Error::validation(
            "DH volume",
            "the density vanishes identically on the polytope",
        ));
    }
    Ok(volume)
}

/// `Bar_DH = V⁻¹ ∫ p Π(β, p) dp`.
pub fn dh_barycenter(p: &Polytope, d: &DHDensity) -> Result<QVector> {
    let (volume, first) = exact_moments(p, d)?;
    Ok(first.iter().map(|m| m / &volume).collect())
}

/// Knobs for the exponential-moment quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureOptions {
    /// Nodes per axis; defaults to density degree + 20.
    pub order: Option<usize>,
    pub rel_tol: f64,
    /// Number of `+4` order increases tried before giving up.
    pub max_refinements: usize,
    /// Worker threads for the per-simplex loop. Results do not depend on it.
    pub workers: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: None,
            rel_tol: 1e-12,
            max_refinements: 6,
            workers: workers_from_env(),
        }
    }
}

/// `HOROFANO_THREADS`, else the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var("HOROFANO_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `I₀ = ∫ e^{⟨ℓ,q⟩} dμ`, `I₁ = ∫ q e^{⟨ℓ,q⟩} dμ`, `I₂ = ∫ q⊗q e^{⟨ℓ,q⟩} dμ`
/// with `q = p − center` and `dμ` the DH measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub i0: f64,
    pub i1: Vec<f64>,
    pub i2: Vec<Vec<f64>>,
    /// Estimated relative error from the last order increase.
    pub rel_error: f64,
    pub order: usize,
}

struct Prepared {
    dim: usize,
    simplices: Vec<(Vec<Vec<f64>>, f64)>,
    forms: Vec<Vec<f64>>,
    radius: f64,
}

fn prepare(p: &Polytope, d: &DHDensity, center: &[f64]) -> Result<Prepared> {
    d.check_nonnegative(p)?;
    let simplices = triangulate(p)
        .iter()
        .map(|s| {
            (
                s.vertices().iter().map(|v| rational::to_f64_vec(v)).collect(),
                rational::to_f64(&s.volume()),
            )
        })
        .collect();
    let radius = p
        .vertices_f64()
        .iter()
        .map(|v| v.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    Ok(Prepared {
        dim: p.dim(),
        simplices,
        forms: d.forms_f64(),
        radius,
    })
}

type Partial = (f64, Vec<f64>, Vec<f64>);

fn simplex_moments(
    prep: &Prepared,
    rule: &SimplexRule,
    verts: &[Vec<f64>],
    vol: f64,
    ell: &[f64],
    center: &[f64],
) -> Partial {
    let n = prep.dim;
    let mut i0 = 0.0;
    let mut i1 = vec![0.0; n];
    let mut i2 = vec![0.0; n * n];
    let mut x = vec![0.0; n];
    let mut q = vec![0.0; n];
    for (lam, w) in rule.barycentric.iter().zip(&rule.weights) {
        x.iter_mut().for_each(|xi| *xi = 0.0);
        for (l, v) in lam.iter().zip(verts) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += l * vi;
            }
        }
        for i in 0..n {
            q[i] = x[i] - center[i];
        }
        let expo: f64 = ell.iter().zip(&q).map(|(a, b)| a * b).sum();
        let f = w * expo.exp() * DHDensity::eval_f64(&prep.forms, &x);
        i0 += f;
        for i in 0..n {
            i1[i] += f * q[i];
            for j in 0..n {
                i2[i * n + j] += f * q[i] * q[j];
            }
        }
    }
    (
        i0 * vol,
        i1.iter().map(|v| v * vol).collect(),
        i2.iter().map(|v| v * vol).collect(),
    )
}

fn evaluate(prep: &Prepared, m: usize, ell: &[f64], center: &[f64], workers: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let rule = SimplexRule::collapsed(prep.dim, m);
    let count = prep.simplices.len();
    let workers = workers.clamp(1, count.max(1));
    let partials: Vec<Partial> = if workers == 1 {
        prep.simplices
            .iter()
            .map(|(v, vol)| simplex_moments(prep, &rule, v, *vol, ell, center))
            .collect()
    } else {
        let chunk = count.div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = prep
                .simplices
                .chunks(chunk)
                .map(|part| {
                    let rule = &rule;
                    scope.spawn(move || {
                        part.iter()
                            .map(|(v, vol)| simplex_moments(prep, rule, v, *vol, ell, center))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("quadrature worker panicked"))
                .collect()
        })
    };
    // Reduce in triangulation order.
    let n = prep.dim;
    let mut s0 = CompensatedSum::default();
    let mut s1 = vec![CompensatedSum::default(); n];
    let mut s2 = vec![CompensatedSum::default(); n * n];
    for (a, b, c) in &partials {
        s0.add(*a);
        s1.iter_mut().zip(b).for_each(|(s, x)| s.add(*x));
        s2.iter_mut().zip(c).for_each(|(s, x)| s.add(*x));
    }
    (
        s0.value(),
        s1.iter().map(CompensatedSum::value).collect(),
        s2.iter().map(CompensatedSum::value).collect(),
    )
}

fn relative_change(a: &(f64, Vec<f64>, Vec<f64>), b: &(f64, Vec<f64>, Vec<f64>), radius: f64) -> f64 {
    let scale = b.0.abs().max(f64::MIN_POSITIVE);
    let d0 = (a.0 - b.0).abs() / scale;
    let d1 = a.1.iter().zip(&b.1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / (scale * radius);
    let d2 = a.2.iter().zip(&b.2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        / (scale * radius * radius);
    d0.max(d1).max(d2)
}

/// Exponentially weighted DH moments about the origin.
pub fn weighted_moments(p: &Polytope, d: &DHDensity, ell: &[f64], opts: &QuadratureOptions) -> Result<Moments> {
    weighted_moments_centered(p, d, ell, &vec![0.0; p.dim()], opts)
}

/// As [`weighted_moments`], with `q = p − center` in both the exponent and
/// the moment factors.
pub fn weighted_moments_centered(
    p: &Polytope,
    d: &DHDensity,
    ell: &[f64],
    center: &[f64],
    opts: &QuadratureOptions,
) -> Result<Moments> {
    if ell.len() != p.dim() || center.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: if ell.len() != p.dim() { ell.len() } else { center.len() },
        });
    }
    let prep = prepare(p, d, center)?;
    let mut m = opts.order.unwrap_or(d.degree() + 20).max(1);
    let mut coarse = evaluate(&prep, m, ell, center, opts.workers);
    let mut estimate = f64::INFINITY;
    for _ in 0..=opts.max_refinements {
        let fine = evaluate(&prep, m + 4, ell, center, opts.workers);
        estimate = relative_change(&coarse, &fine, prep.radius);
        m += 4;
        if estimate <= opts.rel_tol {
            let n = prep.dim;
            let i2 = (0..n).map(|i| fine.2[i * n..(i + 1) * n].to_vec()).collect();
            return Ok(Moments {
                i0: fine.0,
                i1: fine.1,
                i2,
                rel_error: estimate,
                order: m,
            });
        }
        coarse = fine;
    }
    Err(Error::Quadrature { estimate })
}
