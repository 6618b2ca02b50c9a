//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use horofano::dh_integral::{
    dh_barycenter, dh_volume, integrate_monomial, weighted_moments, DHDensity, QuadratureOptions,
};
use horofano::io::load_problem;
use horofano::ma_continuity::{continuity_sweep, estimate_rm_numeric, ContinuityOptions, MaEquation, Termination};
use horofano::polytope::{validate_reflective, Polytope, Simplex};
use horofano::problem::HorosphericalProblem;
use horofano::rational::{self, frac, int, qvec, to_f64, QVector, Rational};
use horofano::ricci_bound::greatest_ricci_lower_bound;
use horofano::soliton::{kahler_einstein_test, objective, objective_gradient, solve_soliton, SolitonOptions};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

fn load(name: &str) -> HorosphericalProblem {
    load_problem(&fixture(name), false).unwrap().problem
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("took {:.1}s, limit {limit}s", elapsed.as_secs_f64()))
}

// ---------- 1: integration ----------

fn random_polytope(rng: &mut ChaCha8Rng, dim: usize, side: i64) -> Polytope {
    loop {
        let n = rng.gen_range(dim + 2..=dim + 6);
        let pts: Vec<QVector> = (0..n).map(|_| (0..dim).map(|_| int(rng.gen_range(0..=side))).collect()).collect();
        if let Ok(p) = Polytope::from_vertices(pts) {
            return p;
        }
    }
}

fn random_forms(rng: &mut ChaCha8Rng, dim: usize) -> Vec<QVector> {
    let k = rng.gen_range(0..=3);
    (0..k)
        .map(|_| loop {
            let f: QVector = (0..dim).map(|_| int(rng.gen_range(0..=2))).collect();
            if !rational::is_zero_vec(&f) {
                break f;
            }
        })
        .collect()
}

/// Uniform sampling in `[0, side]^d`; returns the estimate and standard error
/// of `V` and of each `∫ p_i dμ`.
fn monte_carlo(p: &Polytope, forms: &[QVector], side: f64, samples: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let d = p.dim();
    let facets: Vec<(Vec<f64>, f64)> =
        p.facets().iter().map(|f| (rational::to_f64_vec(&f.normal), to_f64(&f.offset))).collect();
    let forms: Vec<Vec<f64>> = forms.iter().map(|f| rational::to_f64_vec(f)).collect();
    let box_volume = side.powi(d as i32);
    let mut sum = vec![0.0; d + 1];
    let mut sum_sq = vec![0.0; d + 1];
    let mut y = vec![0.0; d];
    for _ in 0..samples {
        for c in y.iter_mut() {
            *c = rng.gen::<f64>() * side;
        }
        let inside = facets
            .iter()
            .all(|(n, b)| n.iter().zip(&y).map(|(a, c)| a * c).sum::<f64>() <= *b);
        if !inside {
            continue;
        }
        let f = box_volume * DHDensity::eval_f64(&forms, &y);
        sum[0] += f;
        sum_sq[0] += f * f;
        for i in 0..d {
            let g = f * y[i];
            sum[i + 1] += g;
            sum_sq[i + 1] += g * g;
        }
    }
    let n = samples as f64;
    sum.iter()
        .zip(&sum_sq)
        .map(|(s, q)| {
            let mean = s / n;
            (mean, ((q / n - mean * mean) / n).sqrt())
        })
        .collect()
}

fn factorial(n: u32) -> Rational {
    (1..=n).fold(Rational::one(), |acc, k| acc * int(k as i64))
}

fn criterion_integration() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let side = 6;
    let mut worst_sigma: f64 = 0.0;
    for k in 0..20 {
        let dim = if k < 14 { 2 } else { 3 };
        let p = random_polytope(&mut rng, dim, side);
        let forms = random_forms(&mut rng, dim);
        let density = DHDensity::new(dim, forms.clone()).unwrap();
        let v = dh_volume(&p, &density).unwrap();
        let bar = dh_barycenter(&p, &density).unwrap();
        let mut exact = vec![to_f64(&v)];
        exact.extend(bar.iter().map(|b| to_f64(&(b * &v))));
        let mc = monte_carlo(&p, &forms, side as f64, 1_000_000, &mut rng);
        for (i, ((m, se), e)) in mc.iter().zip(&exact).enumerate() {
            let z = (m - e).abs() / se.max(1e-300);
            worst_sigma = worst_sigma.max(z);
            ensure(z <= 4.0, || format!("polytope {k}, moment {i}: exact {e}, Monte Carlo {m} ± {se}"))?;
        }
        let q = weighted_moments(&p, &density, &vec![0.0; dim], &QuadratureOptions::default()).unwrap();
        ensure((q.i0 - exact[0]).abs() <= 1e-12 * exact[0], || format!("polytope {k}: quadrature V {}", q.i0))?;
        for i in 0..dim {
            ensure((q.i1[i] - exact[i + 1]).abs() <= 1e-12 * exact[0] * side as f64, || {
                format!("polytope {k}: quadrature moment {i} {}", q.i1[i])
            })?;
        }
    }

    // Scaled standard simplices: ∫_{sΔ} x^a = s^{n+|a|} ∏ a_i! / (n+|a|)!.
    let scales = [int(1), int(2), frac(3, 2)];
    let exponents: [&[u32]; 7] = [&[0], &[3], &[1, 0], &[2, 1], &[0, 0, 0], &[1, 1, 1], &[0, 2, 1]];
    let mut closed_forms = 0;
    for a in exponents {
        let n = a.len();
        let total: u32 = a.iter().sum();
        for s in &scales {
            let mut verts = vec![rational::zeros(n)];
            for i in 0..n {
                let mut e = rational::zeros(n);
                e[i] = s.clone();
                verts.push(e);
            }
            let simplex = Simplex::new(verts.clone()).unwrap();
            let s_pow = (0..n as u32 + total).fold(Rational::one(), |acc, _| acc * s);
            let expected = s_pow * a.iter().fold(Rational::one(), |acc, &k| acc * factorial(k))
                / factorial(n as u32 + total);
            ensure(integrate_monomial(&simplex, a) == expected, || format!("simplex {a:?} scale {s}"))?;
            // The same through the density path: x^a as a product of coordinate forms.
            let forms: Vec<QVector> = a
                .iter()
                .enumerate()
                .flat_map(|(i, &k)| {
                    let mut e = rational::zeros(n);
                    e[i] = int(1);
                    std::iter::repeat_n(e, k as usize)
                })
                .collect();
            let p = Polytope::from_vertices(verts).unwrap();
            let density = DHDensity::new(n, forms).unwrap();
            ensure(dh_volume(&p, &density).unwrap() == expected, || format!("simplex volume {a:?} scale {s}"))?;
            let bar = dh_barycenter(&p, &density).unwrap();
            for j in 0..n {
                let want = s * int(a[j] as i64 + 1) / int((n as u32 + total + 1) as i64);
                ensure(bar[j] == want, || format!("simplex barycenter {a:?} scale {s}"))?;
            }
            closed_forms += 1;
        }
    }

    // Boxes ∏[0, a_i] with density ∏ x_i^{k_i}: V = ∏ a_i^{k_i+1}/(k_i+1),
    // Bar_i = a_i (k_i+1)/(k_i+2).
    let boxes: [(&[i64], &[usize]); 4] = [(&[2, 3], &[2, 1]), (&[1, 5], &[0, 3]), (&[3, 1, 2], &[1, 0, 2]), (&[4], &[3])];
    for (sides, ks) in boxes {
        let n = sides.len();
        let verts: Vec<QVector> = (0..1usize << n)
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { int(sides[i]) } else { int(0) }).collect())
            .collect();
        let p = Polytope::from_vertices(verts).unwrap();
        let forms: Vec<QVector> = (0..n)
            .flat_map(|i| {
                let mut e = rational::zeros(n);
                e[i] = int(1);
                std::iter::repeat_n(e, ks[i])
            })
            .collect();
        let density = DHDensity::new(n, forms).unwrap();
        let expected = (0..n).fold(Rational::one(), |acc, i| {
            acc * (0..=ks[i]).fold(Rational::one(), |x, _| x * int(sides[i])) / int(ks[i] as i64 + 1)
        });
        ensure(dh_volume(&p, &density).unwrap() == expected, || format!("box {sides:?} {ks:?}"))?;
        let bar = dh_barycenter(&p, &density).unwrap();
        for i in 0..n {
            ensure(bar[i] == int(sides[i]) * int(ks[i] as i64 + 1) / int(ks[i] as i64 + 2), || {
                format!("box barycenter {sides:?} {ks:?}")
            })?;
        }
        closed_forms += 1;
    }
    let elapsed = start.elapsed();
    within_time(elapsed, 10.0)?;
    Ok(format!(
        "20 random polytopes within {worst_sigma:.2}σ of 1e6-sample Monte Carlo, {closed_forms} closed forms exact, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------- 2: soliton ----------

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Root of the decreasing function `F` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫_a^b (p − κ) ρ(p) e^{−2(p−κ)ξ} dp` for a one-dimensional marginal.
fn marginal_futaki(rho: impl Fn(f64) -> f64, a: f64, b: f64, kappa: f64, xi: f64) -> f64 {
    simpson(|p| (p - kappa) * rho(p) * (-2.0 * (p - kappa) * xi).exp(), a, b, 20_000)
}

fn criterion_soliton() -> Check {
    let start = Instant::now();
    let opts = SolitonOptions::default();
    // On [−1, 2] the stationarity condition integrates in closed form:
    // (1 − c)e^c = (1 + 2c)e^{−2c} with c = 2ξ.
    let interval = HorosphericalProblem::toric(Polytope::from_vertices(vec![qvec(&[-1]), qvec(&[2])]).unwrap()).unwrap();
    let xi_interval = solve_soliton(&interval, &opts).unwrap().xi[0];
    let c = bisect(|c| (1.0 - c) * c.exp() - (1.0 + 2.0 * c) * (-2.0 * c).exp(), 0.1, 2.0);
    ensure((xi_interval - c / 2.0).abs() <= 1e-6, || format!("[-1, 2]: ξ* {xi_interval} vs {}", c / 2.0))?;
    let mut worst: f64 = (xi_interval - c / 2.0).abs();
    for (lo, hi) in [(-1, 2), (-1, 4), (-2, 1), (-3, 1)] {
        let hp = HorosphericalProblem::toric(Polytope::from_vertices(vec![qvec(&[lo]), qvec(&[hi])]).unwrap()).unwrap();
        let xi = solve_soliton(&hp, &opts).unwrap().xi[0];
        let oracle = bisect(|x| marginal_futaki(|_| 1.0, lo as f64, hi as f64, 0.0, x), -20.0, 20.0);
        worst = worst.max((xi - oracle).abs());
        ensure((xi - oracle).abs() <= 1e-6, || format!("[{lo}, {hi}]: ξ* {xi} vs bisection {oracle}"))?;
    }
    {
        let hp = load("a1_reflective");
        let forms = hp.density().forms_f64();
        let v = hp.moment().vertices_f64();
        let (a, b) = (v[0][0].min(v[1][0]), v[0][0].max(v[1][0]));
        let kappa = hp.kappa_f64()[0];
        let xi = solve_soliton(&hp, &opts).unwrap().xi[0];
        let oracle = bisect(|x| marginal_futaki(|p| DHDensity::eval_f64(&forms, &[p]), a, b, kappa, x), -20.0, 20.0);
        worst = worst.max((xi - oracle).abs());
        ensure((xi - oracle).abs() <= 1e-6, || format!("a1_reflective: ξ* {xi} vs bisection {oracle}"))?;
    }
    // Box [0,2]×[−1,1] with density p₁ and κ = (1, 0): the second component
    // vanishes by symmetry and the first solves a one-dimensional marginal.
    let square = load("square_linear_density");
    {
        let sol = solve_soliton(&square, &opts).unwrap();
        let oracle = bisect(|x| marginal_futaki(|p| p, 0.0, 2.0, 1.0, x), -20.0, 20.0);
        let err = (sol.xi[0] - oracle).abs().max(sol.xi[1].abs());
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("square_linear_density: ξ* {:?} vs ({oracle}, 0)", sol.xi))?;
    }

    let hexagon = HorosphericalProblem::toric(
        Polytope::from_vertices(vec![qvec(&[2, 0]), qvec(&[1, 2]), qvec(&[-1, 1]), qvec(&[-1, -1]), qvec(&[0, -2])])
            .unwrap(),
    )
    .unwrap();
    let quad = QuadratureOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst_fd: f64 = 0.0;
    for hp in [&square, &hexagon] {
        for _ in 0..10 {
            let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = objective_gradient(hp, &xi, &quad).unwrap();
            let h = 1e-3;
            let at = |i: usize, s: f64| {
                let mut x = xi.clone();
                x[i] += s;
                objective(hp, &x, &quad).unwrap()
            };
            let fd: Vec<f64> = (0..2)
                .map(|i| (8.0 * (at(i, h) - at(i, -h)) - (at(i, 2.0 * h) - at(i, -2.0 * h))) / (12.0 * h))
                .collect();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let rel = norm(&diff) / norm(&g);
            worst_fd = worst_fd.max(rel);
            ensure(rel <= 1e-6, || format!("gradient at {xi:?}: {g:?} vs finite differences {fd:?}"))?;
        }
    }
    let elapsed = start.elapsed();
    within_time(elapsed, 5.0)?;
    Ok(format!(
        "ξ* = {xi_interval:.6} on [-1, 2]; within {worst:.1e} of bisection on 6 problems, gradient vs finite differences {worst_fd:.1e} at 20 points, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------- 3: symmetry ----------

fn poly(points: &[&[i64]]) -> Polytope {
    Polytope::from_vertices(points.iter().map(|p| qvec(p)).collect()).unwrap()
}

fn criterion_symmetry() -> Check {
    let hexagon: &[&[i64]] = &[&[1, 0], &[0, 1], &[-1, 1], &[-1, 0], &[0, -1], &[1, -1]];
    let cube: Vec<Vec<i64>> = (0..8).map(|m| (0..3).map(|i| if m >> i & 1 == 1 { 1 } else { -1 }).collect()).collect();
    let cube: Vec<&[i64]> = cube.iter().map(|v| v.as_slice()).collect();
    let octahedron: &[&[i64]] = &[&[1, 0, 0], &[-1, 0, 0], &[0, 1, 0], &[0, -1, 0], &[0, 0, 1], &[0, 0, -1]];
    let cases: Vec<(Polytope, QVector)> = vec![
        (poly(&[&[-1], &[1]]), qvec(&[0])),
        (poly(&[&[1], &[5]]), qvec(&[3])),
        (poly(&[&[-1, -1], &[1, -1], &[1, 1], &[-1, 1]]), qvec(&[0, 0])),
        (poly(hexagon), qvec(&[0, 0])),
        (poly(hexagon).translate(&qvec(&[3, -2])), qvec(&[3, -2])),
        (poly(&[&[2, 1], &[1, 3], &[-2, -1], &[-1, -3]]), qvec(&[0, 0])),
        (poly(&[&[3, 1], &[1, 2], &[-1, 3], &[-3, -1], &[-1, -2], &[1, -3]]), qvec(&[0, 0])),
        (poly(&[&[0, 1], &[2, 1], &[2, 3], &[0, 3]]), qvec(&[1, 2])),
        (poly(&cube), qvec(&[0, 0, 0])),
        (poly(octahedron).translate(&qvec(&[1, 1, 1])), qvec(&[1, 1, 1])),
    ];
    let opts = SolitonOptions::default();
    let mut worst: f64 = 0.0;
    for (k, (p, kappa)) in cases.iter().enumerate() {
        let dim = p.dim();
        let hp = HorosphericalProblem::new(p.clone(), kappa.clone(), DHDensity::lebesgue(dim)).unwrap();
        let xi = solve_soliton(&hp, &opts).unwrap().xi;
        let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(n);
        ensure(n <= 1e-10, || format!("case {k}: |ξ*| = {n:e}"))?;
        ensure(kahler_einstein_test(&hp).unwrap().0, || format!("case {k}: KE test false"))?;

        // Push the first vertex outward along its first coordinate.
        let mut verts = p.vertices().to_vec();
        let push = (&verts[0][0] - &kappa[0]).signum() * frac(1, 2);
        verts[0][0] += push;
        let bent = Polytope::from_vertices(verts).unwrap();
        let hp = HorosphericalProblem::new(bent, kappa.clone(), DHDensity::lebesgue(dim)).unwrap();
        ensure(!kahler_einstein_test(&hp).unwrap().0, || format!("case {k}: perturbed polytope still KE"))?;
        let xi = solve_soliton(&hp, &opts).unwrap().xi;
        ensure(xi.iter().any(|x| x.abs() > 1e-6), || format!("case {k}: perturbed ξ* {xi:?}"))?;
    }
    Ok(format!("10 symmetric problems with |ξ*| ≤ {worst:.1e} and KE exact, perturbations detected"))
}

// ---------- 4: greatest Ricci lower bound ----------

/// `s* = sup{s : κ − s(Bar − κ) ∈ Δ⁺}` bracketed by exact containment tests.
fn containment_bracket(hp: &HorosphericalProblem) -> (Rational, Rational) {
    let gap = rational::sub(&hp.barycenter().unwrap(), hp.kappa());
    let inside = |s: &Rational| hp.moment().contains(&rational::sub(hp.kappa(), &rational::scale(&gap, s)));
    let step = frac(1, 8);
    let mut lo = Rational::zero();
    while inside(&(&lo + &step)) {
        lo += &step;
    }
    let mut hi = &lo + &step;
    for _ in 0..60 {
        let mid = (&lo + &hi) / int(2);
        if inside(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn criterion_ricci_bound() -> Check {
    let cases = [("toric_interval", frac(2, 3)), ("toric_interval_wide", frac(2, 5)), ("square_linear_density", frac(3, 4))];
    for (name, want) in &cases {
        let hp = load(name);
        let r = greatest_ricci_lower_bound(&hp).unwrap().t_infinity;
        ensure(&r == want, || format!("{name}: R = {r}, expected {want}"))?;
        let (lo, hi) = containment_bracket(&hp);
        let s = &r / (Rational::one() - &r);
        ensure(lo <= s && s <= hi, || format!("{name}: s* = {s} outside containment bracket [{lo}, {hi}]"))?;
    }
    let hp = load("square_linear_density");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..5 {
        let t = random_unimodular(&mut rng);
        let moved = transform(&hp, &t);
        let r = greatest_ricci_lower_bound(&moved).unwrap().t_infinity;
        ensure(r == frac(3, 4), || format!("R = {r} after the unimodular map {t:?}"))?;
    }
    Ok("R = 2/3, 2/5, 3/4 exactly, agreeing with containment sweeps; invariant under 5 unimodular maps".into())
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> Vec<QVector> {
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..rng.gen_range(2..5) {
        let k = rng.gen_range(-3..=3);
        let e = if rng.gen() { [[1, k], [0, 1]] } else { [[1, 0], [k, 1]] };
        m = [
            [e[0][0] * m[0][0] + e[0][1] * m[1][0], e[0][0] * m[0][1] + e[0][1] * m[1][1]],
            [e[1][0] * m[0][0] + e[1][1] * m[1][0], e[1][0] * m[0][1] + e[1][1] * m[1][1]],
        ];
    }
    if rng.gen() {
        m.swap(0, 1);
    }
    m.iter().map(|row| qvec(row)).collect()
}

/// Pushes the problem forward by `t`; density forms move by the inverse transpose.
fn transform(hp: &HorosphericalProblem, t: &[QVector]) -> HorosphericalProblem {
    let inv_t = rational::transpose(&rational::inverse(t).unwrap());
    let forms = hp.density().forms().iter().map(|f| rational::mat_vec(&inv_t, f)).collect();
    HorosphericalProblem::new(
        hp.moment().linear_image(t).unwrap(),
        rational::mat_vec(t, hp.kappa()),
        DHDensity::new(hp.rank(), forms).unwrap(),
    )
    .unwrap()
}

// ---------- 5 and 6: continuity ----------

struct Sweeps {
    name: &'static str,
    volume: f64,
    soliton: horofano::ma_continuity::ContinuityTrace,
    einstein: horofano::ma_continuity::ContinuityTrace,
}

fn sweeps(name: &'static str) -> Sweeps {
    let hp = load(name);
    let quad = QuadratureOptions::default();
    let opts = ContinuityOptions::default();
    let xi = solve_soliton(&hp, &SolitonOptions::default()).unwrap().xi;
    let run = |xi: &[f64]| continuity_sweep(&MaEquation::new(&hp, xi, &quad).unwrap(), &opts).unwrap();
    Sweeps {
        name,
        volume: to_f64(&hp.volume().unwrap()),
        soliton: run(&xi),
        einstein: run(&[0.0]),
    }
}

fn criterion_continuity(s: &Sweeps, elapsed: Duration) -> Check {
    let rm = estimate_rm_numeric(&s.einstein).map_err(|e| e.to_string())?;
    ensure(matches!(s.einstein.termination, Termination::Divergence { .. }), || {
        format!("ξ = 0 sweep: {:?}", s.einstein.termination)
    })?;
    ensure((rm.estimate - 2.0 / 3.0).abs() <= 0.05, || format!("R numeric {}", rm.estimate))?;
    ensure(s.soliton.termination == Termination::ReachedOne, || format!("ξ* sweep: {:?}", s.soliton.termination))?;
    let last = s.soliton.states.last().unwrap();
    ensure(last.t == 1.0 && last.residual_norm <= 1e-8, || format!("final residual {:e}", last.residual_norm))?;
    let mut worst: f64 = 0.0;
    for st in s.soliton.states.iter().chain(&s.einstein.states) {
        let rel = (st.mass - s.volume).abs() / s.volume;
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("mass {} at t = {}", st.mass, st.t))?;
    }
    within_time(elapsed, 60.0)?;
    Ok(format!(
        "ξ = 0 diverges with R ≈ {:.4} ± {:.1e}; ξ* reaches t = 1 with residual {:.1e}; mass error ≤ {worst:.1e}; {:.1}s",
        rm.estimate,
        rm.uncertainty,
        last.residual_norm,
        elapsed.as_secs_f64()
    ))
}

fn criterion_envelope(all: &[Sweeps]) -> Check {
    let text = std::fs::read_to_string(fixture("envelope")).unwrap();
    let envelope: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut states = 0;
    for s in all {
        for (label, trace) in [("soliton", &s.soliton), ("einstein", &s.einstein)] {
            let e = &envelope[s.name][label];
            let bound = |k: &str| e[k].as_f64().unwrap_or_else(|| panic!("envelope {}.{label}.{k}", s.name));
            let (sup_max, m_lo, m_hi) = (bound("sup_psi_max"), bound("m_t_min"), bound("m_t_max"));
            let m0 = trace.states.first().map_or(0.0, |st| st.m_t);
            for st in &trace.states {
                let at = || format!("{} {label} t = {}", s.name, st.t);
                ensure((st.m_t - m0).abs() <= 5.0, || format!("{}: m_t {} drifted from {m0}", at(), st.m_t))?;
                // Slopes are difference quotients of O(10) values.
                ensure(st.max_grad_w <= trace.gradient_bound * (1.0 + 1e-9), || {
                    format!("{}: |∇w| {} > {}", at(), st.max_grad_w, trace.gradient_bound)
                })?;
                ensure(st.centering.abs() <= 1e-3 * trace.volume, || format!("{}: centering {:e}", at(), st.centering))?;
                ensure(st.sup_psi <= sup_max, || format!("{}: sup ψ {} > {sup_max}", at(), st.sup_psi))?;
                ensure((m_lo..=m_hi).contains(&st.m_t), || format!("{}: m_t {} outside [{m_lo}, {m_hi}]", at(), st.m_t))?;
                states += 1;
            }
        }
    }
    Ok(format!("{states} accepted states on {} problems inside the envelope", all.len()))
}

// ---------- 7: reflectivity ----------

fn reflectivity(name: &str) -> horofano::polytope::ReflectivityReport {
    load_problem(&fixture(name), true).unwrap().reflectivity.unwrap()
}

fn criterion_reflectivity() -> Check {
    let square = reflectivity("square_reflexive");
    ensure(square.vertices_admissible.passed && square.dual_vertices_in_lattice.passed, || {
        format!("square: {square:?}")
    })?;
    let interval = reflectivity("nonlattice_dual");
    ensure(interval.vertices_admissible.passed, || format!("[-1, 2] condition (1): {interval:?}"))?;
    ensure(
        !interval.dual_vertices_in_lattice.passed
            && interval.dual_vertices_in_lattice.offending == vec![vec!["-1/2".to_string()]],
        || format!("[-1, 2] condition (2): {:?}", interval.dual_vertices_in_lattice),
    )?;
    let loaded = horofano::io::parse_problem(
        r#"{"root_system": {"factors": [["A", 1]]}, "a1_basis": [[1, -1]], "polytope": {"Q": {"vertices": [[-1], [1]]}}}"#,
        true,
    )
    .unwrap();
    let data = loaded.problem.root_data().unwrap();
    let a1 = |lo: Rational, hi: Rational| {
        let q = Polytope::from_vertices(vec![vec![lo], vec![hi]]).unwrap();
        validate_reflective(&q, &data.rd, &data.pd, &data.frame).unwrap()
    };
    let good = a1(int(-1), int(1));
    ensure(good.scaled_coroots_in_q.passed && !good.scaled_coroots_in_q.vacuous, || format!("A1 Q = [-1, 1]: {good:?}"))?;
    let bad = a1(frac(-1, 2), frac(1, 2));
    ensure(
        !bad.scaled_coroots_in_q.passed && bad.scaled_coroots_in_q.offending == vec![vec!["1".to_string()]],
        || format!("A1 Q = [-1/2, 1/2]: {:?}", bad.scaled_coroots_in_q),
    )?;
    Ok("square passes (1)-(2); [-1, 2] fails (2) at -1/2; A1 coroot condition passes for [-1, 1], fails at 1 for [-1/2, 1/2]".into())
}

// ---------- 8: determinism ----------

fn run_cli(name: &str, threads: &str, trace: &Path) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_horofano"))
        .args(["all", "--input"])
        .arg(fixture(name))
        .arg("--trace")
        .arg(trace)
        .env("HOROFANO_THREADS", threads)
        .output()
        .unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    // Remove the traces so a run that skips them cannot match a stale file.
    let take = |p: &Path| {
        let bytes = std::fs::read(p).unwrap_or_default();
        let _ = std::fs::remove_file(p);
        bytes
    };
    let sibling = horofano::io::sibling_trace_path(trace);
    (out.stdout, take(trace), take(&sibling))
}

fn criterion_determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let names = ["toric_interval", "a1_reflective", "toric_symmetric", "square_reflexive", "square_linear_density"];
    for name in names {
        // The report records the trace path, so every run uses the same one.
        let trace = dir.path().join(format!("{name}.csv"));
        let runs: Vec<_> = ["1", "1", "4"].iter().map(|threads| run_cli(name, threads, &trace)).collect();
        ensure(runs[0] == runs[1], || format!("{name}: repeated runs differ"))?;
        ensure(runs[0] == runs[2], || format!("{name}: HOROFANO_THREADS=1 and 4 differ"))?;
    }
    Ok(format!("`all` reports and traces byte-identical across repeats and thread counts on {} inputs", names.len()))
}

// ---------- driver ----------

fn run(id: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS [{id}] {name}: {detail} ({secs:.1}s)");
            true
        }
        Err(detail) => {
            println!("FAIL [{id}] {name}: {detail} ({secs:.1}s)");
            false
        }
    }
}

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let mut ok = true;
    ok &= run(1, "DH integration", criterion_integration);
    ok &= run(2, "soliton vector", criterion_soliton);
    ok &= run(3, "symmetric polytopes", criterion_symmetry);
    ok &= run(4, "greatest Ricci lower bound", criterion_ricci_bound);

    let start = Instant::now();
    let interval = panic::catch_unwind(|| sweeps("toric_interval"));
    let interval_time = start.elapsed();
    let interval = interval.ok();
    ok &= run(5, "continuity on [-1, 2]", || match &interval {
        Some(s) => criterion_continuity(s, interval_time),
        None => Err("sweep failed".into()),
    });
    ok &= run(6, "diagnostics envelope", || {
        let mut all = vec![interval.expect("toric_interval sweeps")];
        for name in ["toric_interval_wide", "toric_symmetric", "a1_reflective"] {
            all.push(sweeps(name));
        }
        criterion_envelope(&all)
    });
    ok &= run(7, "reflectivity validation", criterion_reflectivity);
    ok &= run(8, "determinism", criterion_determinism);
    if !ok {
        std::process::exit(1);
    }
}
