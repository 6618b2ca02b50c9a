//! Rank-one solver and the continuity sweep in t.
//!
//! On the grid `x_0 < … < x_{N−1}` with slopes `s_j = (u_{j+1} − u_j)/h`
//! the equation is imposed in flux form,
//!
//! ```text
//! K (Φ(s_i) − Φ(s_{i−1})) = h_i e^{−w_i},    Φ(s) = ∫_a^s Π_β(β, κ − σ/2) e^{ξσ} dσ
//! ```
//!
//! with `s_{−1} = a`, `s_{N−1} = b` (2Δ = [a, b]) and trapezoid weights
//! `h_i`. The end equations also carry the mass of `e^{−w}` beyond the box,
//! `e^{−w_0}/|a|` and `e^{−w_{N−1}}/b`, from the affine asymptotics of w.
//! Summing over i gives trapezoid mass plus tails `= K Φ(b) = V`, so the
//! mass identity holds exactly and the additive constant of u is fixed by
//! the equation. Without the tail terms the t = 1 problem on the box is
//! not balanced.

use std::io::Write;

use serde::Serialize;

use super::{Flux1D, Grid, MaEquation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityOptions {
    pub grid_points: usize,
    /// Box half-width; by default chosen from the tail bound of `e^{−v_{2Δ}}`.
    pub half_width: Option<f64>,
    pub t0: f64,
    /// Newton stops when `max_i |R_i| / h_i` falls below this.
    pub newton_tol: f64,
    pub newton_max_iterations: usize,
    pub initial_step: f64,
    pub max_step: f64,
    /// A step below this after halving declares divergence.
    pub min_step: f64,
    pub growth: f64,
    /// Divergence when `|x_t|` exceeds this fraction of the half-width.
    pub escape_fraction: f64,
}

impl Default for ContinuityOptions {
    fn default() -> Self {
        ContinuityOptions {
            grid_points: 2001,
            half_width: None,
            t0: 0.1,
            newton_tol: 1e-10,
            newton_max_iterations: 60,
            initial_step: 0.05,
            max_step: 0.05,
            min_step: 1e-4,
            growth: 1.5,
            escape_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityState {
    pub t: f64,
    pub grid: Grid,
    pub u: Vec<f64>,
    /// `min w_t` and its location.
    pub m_t: f64,
    pub x_t: Vec<f64>,
    /// `∫ e^{−w_t}`: trapezoid sum plus the exponential tails beyond the box.
    pub mass: f64,
    pub residual_norm: f64,
    /// `max (u_t − u⁰)` over the grid.
    pub sup_psi: f64,
    pub max_grad_w: f64,
    /// `∫ w_t' e^{−w_t}` over the line, which vanishes for exact solutions.
    pub centering: f64,
    /// Slopes are nondecreasing.
    pub convex: bool,
    /// Slopes stay in 2Δ up to rounding.
    pub admissible: bool,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedOne,
    Divergence { t_failed: f64, reason: String },
    InitialFailure { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityTrace {
    pub xi: Vec<f64>,
    pub volume: f64,
    pub gradient_bound: f64,
    pub states: Vec<ContinuityState>,
    /// Step in t that led to each state; the first entry is `t0`.
    pub steps: Vec<f64>,
    pub termination: Termination,
    /// Size of the last attempted step.
    pub final_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmEstimate {
    pub estimate: f64,
    pub uncertainty: f64,
}

struct Discretization<'a> {
    eq: &'a MaEquation,
    flux: Flux1D,
    grid: Grid,
    h: f64,
    weights: Vec<f64>,
    reference: Vec<f64>,
}

struct Evaluation {
    residual: Vec<f64>,
    slopes: Vec<f64>,
    exp_w: Vec<f64>,
    merit: f64,
    norm: f64,
}

impl<'a> Discretization<'a> {
    fn new(eq: &'a MaEquation, grid: Grid) -> Self {
        let n = grid.n;
        let h = grid.h();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        let reference: Vec<f64> = (0..n).map(|i| eq.reference.value(&[grid.coordinate(i)])).collect();
        Discretization {
            eq,
            flux: Flux1D::new(eq),
            grid,
            h,
            weights,
            reference,
        }
    }

    fn slopes(&self, u: &[f64]) -> Vec<f64> {
        u.windows(2).map(|p| (p[1] - p[0]) / self.h).collect()
    }

    fn w(&self, u: &[f64], t: f64) -> Vec<f64> {
        u.iter().zip(&self.reference).map(|(a, b)| t * a + (1.0 - t) * b).collect()
    }

    /// Mass of `e^{−w}` beyond each end of the box.
    fn tails(&self, exp_w: &[f64]) -> (f64, f64) {
        (exp_w[0] / -self.flux.a, exp_w[exp_w.len() - 1] / self.flux.b)
    }

    fn evaluate(&self, u: &[f64], t: f64) -> Evaluation {
        let n = u.len();
        let k = self.eq.constant;
        let slopes = self.slopes(u);
        let exp_w: Vec<f64> = self.w(u, t).iter().map(|w| (-w).exp()).collect();
        let (tail_left, tail_right) = self.tails(&exp_w);
        let mut residual = Vec::with_capacity(n);
        let mut merit = 0.0;
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { slopes[i] } else { self.flux.b };
            let left = if i > 0 { slopes[i - 1] } else { self.flux.a };
            let mut r = k * self.flux.between(left, right) - self.weights[i] * exp_w[i];
            if i == 0 {
                r -= tail_left;
            }
            if i + 1 == n {
                r -= tail_right;
            }
            let scaled = r / self.weights[i];
            merit += scaled * scaled;
            norm = norm.max(scaled.abs());
            residual.push(r);
        }
        Evaluation {
            residual,
            slopes,
            exp_w,
            merit,
            norm,
        }
    }

    fn newton_step(&self, ev: &Evaluation, t: f64) -> Result<Vec<f64>> {
        let n = ev.residual.len();
        let k = self.eq.constant / self.h;
        let coupling: Vec<f64> = ev.slopes.iter().map(|&s| k * self.flux.density(s)).collect();
        let (tail_left, tail_right) = self.tails(&ev.exp_w);
        let lower: Vec<f64> = coupling.clone();
        let upper: Vec<f64> = coupling.clone();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let up = if i + 1 < n { coupling[i] } else { 0.0 };
                let lo = if i > 0 { coupling[i - 1] } else { 0.0 };
                let mut d = -up - lo + t * self.weights[i] * ev.exp_w[i];
                if i == 0 {
                    d += t * tail_left;
                }
                if i + 1 == n {
                    d += t * tail_right;
                }
                d
            })
            .collect();
        let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
        solve_tridiagonal(lower, diag, upper, rhs)
            .ok_or_else(|| Error::Solver(format!("continuity: singular Newton system at t = {t}")))
    }

    fn slopes_in_range(&self, slopes: &[f64], slack: f64) -> bool {
        let eps = slack * (self.flux.b - self.flux.a);
        slopes.iter().all(|&s| s >= self.flux.a - eps && s <= self.flux.b + eps)
    }

    fn trapezoid_mass(&self, u: &[f64], t: f64) -> f64 {
        self.w(u, t).iter().zip(&self.weights).map(|(w, h)| h * (-w).exp()).sum()
    }

    fn state(&self, u: Vec<f64>, t: f64, ev: &Evaluation, iterations: usize) -> ContinuityState {
        let n = u.len();
        let h = self.h;
        let w = self.w(&u, t);
        let (k, m_t) = w
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bv), (i, &v)| if v < bv { (i, v) } else { (bk, bv) });
        let mut x = self.grid.coordinate(k);
        if k > 0 && k + 1 < n {
            let curvature = w[k - 1] - 2.0 * w[k] + w[k + 1];
            if curvature > 0.0 {
                x += 0.5 * h * (w[k - 1] - w[k + 1]) / curvature;
            }
        }
        let w_slopes: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]) / h).collect();
        let (tail_left, tail_right) = self.tails(&ev.exp_w);
        let mass = self.trapezoid_mass(&u, t) + tail_left + tail_right;
        let centering: f64 = (0..n)
            .map(|i| {
                let dw = if i == 0 {
                    w_slopes[0]
                } else if i == n - 1 {
                    w_slopes[n - 2]
                } else {
                    0.5 * (w_slopes[i - 1] + w_slopes[i])
                };
                self.weights[i] * dw * ev.exp_w[i]
            })
            .sum::<f64>()
            // Beyond the box `∫ w' e^{−w}` integrates exactly to the endpoint values.
            - ev.exp_w[0]
            + ev.exp_w[n - 1];
        let sup_psi = u
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_grad_w = w_slopes.iter().map(|s| s.abs()).fold(0.0, f64::max);
        let tol = 1e-9 * (self.flux.b - self.flux.a);
        ContinuityState {
            t,
            grid: self.grid,
            m_t,
            x_t: vec![x],
            mass,
            residual_norm: ev.norm,
            sup_psi,
            max_grad_w,
            centering,
            convex: ev.slopes.windows(2).all(|p| p[1] >= p[0] - tol),
            admissible: self.slopes_in_range(&ev.slopes, 1e-9),
            newton_iterations: iterations,
            u,
        }
    }

    /// The discrete t = 0 solution with `e^{−u⁰}` rescaled to mass V. Summing
    /// the flux equations gives `K Φ(s_i)` as the cumulative mass left of
    /// cell i, so every slope follows from one inversion of the monotone Φ.
    fn initial_guess(&self) -> Vec<f64> {
        let n = self.reference.len();
        let exp_w: Vec<f64> = self.reference.iter().map(|w| (-w).exp()).collect();
        let (tail_left, tail_right) = self.tails(&exp_w);
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = tail_left;
        for (h, e) in self.weights.iter().zip(&exp_w) {
            acc += h * e;
            cumulative.push(acc);
        }
        let total = acc + tail_right;
        let span = self.flux.between(self.flux.a, self.flux.b);
        let mut u = Vec::with_capacity(n);
        u.push(self.reference[0]);
        for c in &cumulative[..n - 1] {
            let target = span * c / total;
            let (mut lo, mut hi) = (self.flux.a, self.flux.b);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if self.flux.between(self.flux.a, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let last = *u.last().expect("nonempty");
            u.push(last + self.h * 0.5 * (lo + hi));
        }
        u
    }

    /// Size of the scaled residual that rounding alone produces: slopes
    /// carry an error of about `ε|u|/h`, and the residual divides their
    /// flux once more by h.
    fn rounding_floor(&self, u: &[f64], slopes: &[f64]) -> f64 {
        let size = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let f = slopes.iter().fold(0.0f64, |m, &s| m.max(self.flux.density(s)));
        16.0 * f64::EPSILON * size * self.eq.constant * f.max(1.0) / (self.h * self.h)
    }

    fn solve(&self, t: f64, init: &[f64], opts: &ContinuityOptions) -> Result<ContinuityState> {
        let mut u = init.to_vec();
        // Shift so that the mass already equals V.
        let exp_w: Vec<f64> = self.w(&u, t).iter().map(|w| (-w).exp()).collect();
        let (tl, tr) = self.tails(&exp_w);
        let shift = ((self.trapezoid_mass(&u, t) + tl + tr) / self.eq.volume).ln() / t;
        u.iter_mut().for_each(|x| *x += shift);
        let mut ev = self.evaluate(&u, t);
        let mut iteration = 0;
        let stalled = loop {
            if !ev.norm.is_finite() {
                break "non-finite residual";
            }
            if ev.norm <= opts.newton_tol {
                return Ok(self.state(u, t, &ev, iteration));
            }
            if iteration == opts.newton_max_iterations {
                break "iteration limit";
            }
            iteration += 1;
            let step = self.newton_step(&ev, t)?;
            let mut alpha = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
                if self.slopes_in_range(&self.slopes(&trial), 1e-6) {
                    let tev = self.evaluate(&trial, t);
                    if tev.merit <= (1.0 - 2e-4 * alpha) * ev.merit {
                        u = trial;
                        ev = tev;
                        break true;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-10 {
                    break false;
                }
            };
            if !accepted {
                break "line search stalled";
            }
        };
        if ev.norm.is_finite() && ev.norm <= self.rounding_floor(&u, &ev.slopes) {
            return Ok(self.state(u, t, &ev, iteration));
        }
        Err(Error::Solver(format!(
            "continuity: Newton failed at t = {t} after {iteration} iterations ({stalled}, residual {:e})",
            ev.norm
        )))
    }
}

/// Gaussian elimination with partial pivoting on a tridiagonal system.
/// `lower[i]` is entry `(i+1, i)` and `upper[i]` is entry `(i, i+1)`.
fn solve_tridiagonal(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = d.len();
    if n == 1 {
        return (d[0] != 0.0).then(|| vec![b[0] / d[0]]);
    }
    // Second superdiagonal created by row swaps.
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let bi = b[i];
            b[i] = b[i + 1];
            b[i + 1] = bi - fact * b[i + 1];
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    Some(b)
}

fn check_rank_one(eq: &MaEquation) -> Result<()> {
    if eq.dim != 1 {
        return Err(Error::Unsupported(format!(
            "continuity solver in rank {}; only rank 1 is implemented",
            eq.dim
        )));
    }
    Ok(())
}

fn resolve_grid(eq: &MaEquation, opts: &ContinuityOptions) -> Result<Grid> {
    match opts.half_width {
        Some(l) => Grid::new(1, opts.grid_points, l),
        None => eq.default_grid(opts.grid_points),
    }
}

/// Solves the rank-one discrete equation at `t ∈ (0, 1]`, warm-started
/// from `init` (grid values of u).
pub fn solve_at_t(
    eq: &MaEquation,
    grid: &Grid,
    t: f64,
    init: &[f64],
    opts: &ContinuityOptions,
) -> Result<ContinuityState> {
    check_rank_one(eq)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::validation("continuity parameter", format!("t = {t} is outside (0, 1]")));
    }
    if init.len() != grid.n || grid.dim != 1 {
        return Err(Error::Dimension {
            expected: grid.n,
            got: init.len(),
        });
    }
    Discretization::new(eq, *grid).solve(t, init, opts)
}

/// Advances t from `t0` toward 1, halving the step on failure.
pub fn continuity_sweep(eq: &MaEquation, opts: &ContinuityOptions) -> Result<ContinuityTrace> {
    check_rank_one(eq)?;
    let grid = resolve_grid(eq, opts)?;
    let disc = Discretization::new(eq, grid);
    let mut trace = ContinuityTrace {
        xi: eq.xi.clone(),
        volume: eq.volume,
        gradient_bound: eq.gradient_bound,
        states: Vec::new(),
        steps: Vec::new(),
        termination: Termination::ReachedOne,
        final_step: opts.t0,
    };
    let window = opts.escape_fraction * grid.half_width;
    let init = disc.initial_guess();
    match disc.solve(opts.t0, &init, opts) {
        Ok(s) => {
            trace.states.push(s);
            trace.steps.push(opts.t0);
        }
        Err(e) => {
            trace.termination = Termination::InitialFailure { reason: e.to_string() };
            return Ok(trace);
        }
    }
    let mut dt = opts.initial_step;
    loop {
        let last = trace.states.last().expect("at least one state");
        if last.t >= 1.0 {
            trace.termination = Termination::ReachedOne;
            return Ok(trace);
        }
        let target = (last.t + dt).min(1.0);
        let step = target - last.t;
        trace.final_step = step;
        let outcome = disc.solve(target, &last.u, opts).and_then(|s| {
            if s.x_t[0].abs() > window {
                Err(Error::Solver(format!(
                    "minimum point {} left the window |x| <= {window}",
                    s.x_t[0]
                )))
            } else {
                Ok(s)
            }
        });
        match outcome {
            Ok(s) => {
                trace.states.push(s);
                trace.steps.push(step);
                dt = (dt * opts.growth).min(opts.max_step);
            }
            Err(e) => {
                dt = step / 2.0;
                if dt < opts.min_step {
                    trace.termination = Termination::Divergence {
                        t_failed: target,
                        reason: e.to_string(),
                    };
                    return Ok(trace);
                }
            }
        }
    }
}

/// Last accepted t plus half the final step, with the final step as the
/// uncertainty; 1 when the sweep reached t = 1.
pub fn estimate_rm_numeric(trace: &ContinuityTrace) -> Result<RmEstimate> {
    match &trace.termination {
        Termination::ReachedOne => Ok(RmEstimate {
            estimate: 1.0,
            uncertainty: 0.0,
        }),
        Termination::Divergence { .. } => {
            let last = trace.states.last().map_or(0.0, |s| s.t);
            Ok(RmEstimate {
                estimate: last + 0.5 * trace.final_step,
                uncertainty: trace.final_step,
            })
        }
        Termination::InitialFailure { reason } => Err(Error::Solver(format!(
            "no accepted state to estimate from: {reason}"
        ))),
    }
}

/// Columns: t, m_t, x_t (one per coordinate), mass, residual, sup_psi, step.
pub fn write_trace_csv<W: Write>(trace: &ContinuityTrace, out: W) -> Result<()> {
    let r = trace.xi.len();
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "m_t".to_string()];
    if r == 1 {
        header.push("x_t".to_string());
    } else {
        header.extend((1..=r).map(|i| format!("x_t_{i}")));
    }
    header.extend(["mass", "residual", "sup_psi", "step"].map(String::from));
    let io = |e: csv::Error| Error::Solver(format!("writing trace: {e}"));
    writer.write_record(&header).map_err(io)?;
    for (s, step) in trace.states.iter().zip(&trace.steps) {
        let mut row = vec![s.t.to_string(), s.m_t.to_string()];
        row.extend(s.x_t.iter().map(f64::to_string));
        row.extend([s.mass, s.residual_norm, s.sup_psi, *step].map(|v| v.to_string()));
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::Solver(format!("writing trace: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dh_integral::QuadratureOptions;
    use crate::polytope::Polytope;
    use crate::problem::HorosphericalProblem;
    use crate::rational::qvec;

    fn equation(lo: i64, hi: i64, xi: f64) -> MaEquation {
        let hp = HorosphericalProblem::toric(Polytope::from_vertices(vec![qvec(&[lo]), qvec(&[hi])]).unwrap()).unwrap();
        MaEquation::new(&hp, &[xi], &QuadratureOptions::default()).unwrap()
    }

    #[test]
    fn tridiagonal_matches_dense() {
        // Zero leading diagonal forces a pivot.
        let dl = vec![2.0, 1.0, -1.0];
        let d = vec![0.0, 3.0, 1.0, 2.0];
        let du = vec![1.0, -2.0, 4.0];
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b: Vec<f64> = (0..4)
            .map(|i| {
                let mut v = d[i] * x[i];
                if i > 0 {
                    v += dl[i - 1] * x[i - 1];
                }
                if i < 3 {
                    v += du[i] * x[i + 1];
                }
                v
            })
            .collect();
        let got = solve_tridiagonal(dl, d, du, b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_solution_is_even() {
        let eq = equation(-1, 1, 0.0);
        let opts = ContinuityOptions {
            grid_points: 401,
            ..ContinuityOptions::default()
        };
        let grid = resolve_grid(&eq, &opts).unwrap();
        let disc = Discretization::new(&eq, grid);
        let s = solve_at_t(&eq, &grid, 0.5, &disc.reference, &opts).unwrap();
        assert!(s.x_t[0].abs() < 1e-9);
        let n = s.u.len();
        for i in 0..n / 2 {
            assert!((s.u[i] - s.u[n - 1 - i]).abs() < 1e-8);
        }
        assert!(s.convex && s.admissible);
    }

    #[test]
    fn mass_identity_at_t0() {
        let eq = equation(-1, 2, 0.0);
        let opts = ContinuityOptions::default();
        let grid = resolve_grid(&eq, &opts).unwrap();
        let disc = Discretization::new(&eq, grid);
        let s = solve_at_t(&eq, &grid, opts.t0, &disc.reference, &opts).unwrap();
        assert!((s.mass - 3.0).abs() / 3.0 < 1e-4);
        assert!(s.residual_norm <= 1e-10);
    }

    #[test]
    fn rank_two_is_unsupported() {
        let square = Polytope::from_vertices(vec![qvec(&[1, 1]), qvec(&[1, -1]), qvec(&[-1, 1]), qvec(&[-1, -1])]).unwrap();
        let hp = HorosphericalProblem::toric(square).unwrap();
        let eq = MaEquation::new(&hp, &[0.0, 0.0], &QuadratureOptions::default()).unwrap();
        assert!(matches!(
            continuity_sweep(&eq, &ContinuityOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
