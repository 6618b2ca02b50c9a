use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::spec::LoadedProblem;
use super::CliError;
use crate::dh_integral::QuadratureOptions;
use crate::ma_continuity::{
    continuity_sweep, estimate_rm_numeric, write_trace_csv, ContinuityOptions, ContinuityTrace, MaEquation,
    RmEstimate, Termination,
};
use crate::polytope::ReflectivityReport;
use crate::rational::{format_rational, to_f64};
use crate::ricci_bound::greatest_ricci_lower_bound;
use crate::soliton::{kahler_einstein_test, solve_soliton, SolitonOptions};

pub const CONVENTION: &str = "kappa = sum of the positive roots outside the Levi; Delta+ in a1* coordinates; \
KE iff Bar_DH = kappa; soliton weight exp(-2<p - kappa, xi>); R(M) from the ray -(Bar_DH - kappa) in Delta+ - kappa";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Invariants,
    Soliton,
    RicciBound,
    Continuity,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Invariants => "invariants",
            Command::Soliton => "soliton",
            Command::RicciBound => "ricci-bound",
            Command::Continuity => "continuity",
            Command::All => "all",
        }
    }
}

/// Settings from the command line; `None` falls back to the problem file,
/// then to the library defaults.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub half_width: Option<f64>,
    pub t0: Option<f64>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub kappa: &'static str,
    pub rationals: &'static str,
    pub coordinates: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub rank: usize,
    pub kappa: Vec<String>,
    pub moment_vertices: Vec<Vec<String>>,
    pub density_degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub kappa_interior: bool,
    pub density_nonnegative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflectivity: Option<ReflectivityReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Invariants {
    #[serde(rename = "V")]
    pub volume: String,
    #[serde(rename = "Bar_DH")]
    pub barycenter: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonSection {
    pub xi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub hessian_min_eig: f64,
    pub ke: bool,
    pub ke_gap: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RicciSection {
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "R_decimal")]
    pub r_decimal: f64,
    pub exit_scalar: Option<String>,
    pub tight_facets: Vec<usize>,
    pub exit_point: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub xi: Vec<f64>,
    pub termination: Termination,
    pub accepted_states: usize,
    pub final_t: Option<f64>,
    pub final_residual: Option<f64>,
    pub max_residual: f64,
    pub max_mass_relative_error: f64,
    pub max_grad_w: f64,
    pub gradient_bound: f64,
    pub max_centering_over_volume: f64,
    pub sup_psi_range: Option<[f64; 2]>,
    pub m_t_range: Option<[f64; 2]>,
    pub convex: bool,
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySection {
    pub grid_points: usize,
    pub half_width: Option<f64>,
    pub t0: f64,
    pub soliton_sweep: SweepSummary,
    pub einstein_sweep: SweepSummary,
    /// From the ξ = 0 sweep.
    pub rm_numeric: Option<RmEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input_sha256: String,
    pub conventions: Conventions,
    pub problem: ProblemSummary,
    pub validation: Validation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Invariants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ricci_bound: Option<RicciSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity: Option<ContinuitySection>,
    /// Why `all` left out the continuity sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_skipped: Option<String>,
}

fn strings(v: &[crate::rational::Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn range(values: impl Iterator<Item = f64>) -> Option<[f64; 2]> {
    values.fold(None, |acc, x| match acc {
        None => Some([x, x]),
        Some([lo, hi]) => Some([lo.min(x), hi.max(x)]),
    })
}

fn summarize(trace: &ContinuityTrace, trace_file: Option<&Path>) -> SweepSummary {
    let s = &trace.states;
    let max = |f: &dyn Fn(&crate::ma_continuity::ContinuityState) -> f64| s.iter().map(f).fold(0.0, f64::max);
    SweepSummary {
        xi: trace.xi.clone(),
        termination: trace.termination.clone(),
        accepted_states: s.len(),
        final_t: s.last().map(|x| x.t),
        final_residual: s.last().map(|x| x.residual_norm),
        max_residual: max(&|x| x.residual_norm),
        max_mass_relative_error: max(&|x| (x.mass - trace.volume).abs() / trace.volume),
        max_grad_w: max(&|x| x.max_grad_w),
        gradient_bound: trace.gradient_bound,
        max_centering_over_volume: max(&|x| x.centering.abs() / trace.volume),
        sup_psi_range: range(s.iter().map(|x| x.sup_psi)),
        m_t_range: range(s.iter().map(|x| x.m_t)),
        convex: s.iter().all(|x| x.convex),
        admissible: s.iter().all(|x| x.admissible),
        trace_file: trace_file.map(|p| p.display().to_string()),
    }
}

/// `trace.csv` → `trace_xi0.csv`.
pub fn sibling_trace_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_xi0.{}", ext.to_string_lossy()),
        None => format!("{stem}_xi0"),
    };
    path.with_file_name(name)
}

fn write_trace(trace: &ContinuityTrace, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Solver(format!("cannot create {}: {e}", path.display())))?;
    write_trace_csv(trace, std::io::BufWriter::new(file)).map_err(CliError::from_run)
}

/// Runs the pipeline behind `command` and assembles the report.
pub fn run(command: Command, lp: &LoadedProblem, opts: &RunOptions) -> Result<Report, CliError> {
    let hp = &lp.problem;
    let file_opts = &lp.spec.options;
    let quadrature = QuadratureOptions {
        order: file_opts.quad_order,
        ..QuadratureOptions::default()
    };
    let mut report = Report {
        tool: "horofano",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        input_sha256: lp.input_sha256.clone(),
        conventions: Conventions {
            kappa: CONVENTION,
            rationals: "exact values are \"p/q\" strings; floating-point values are decimals",
            coordinates: "a1* coordinates with respect to the problem's a1 basis",
        },
        problem: ProblemSummary {
            rank: hp.rank(),
            kappa: strings(hp.kappa()),
            moment_vertices: hp.moment().vertices().iter().map(|v| strings(v)).collect(),
            density_degree: hp.density().degree(),
        },
        validation: Validation {
            kappa_interior: true,
            density_nonnegative: true,
            reflectivity: lp.reflectivity.clone(),
        },
        invariants: None,
        soliton: None,
        ricci_bound: None,
        continuity: None,
        continuity_skipped: None,
    };
    if command == Command::Validate {
        return Ok(report);
    }

    let volume = hp.volume().map_err(CliError::from_run)?;
    report.invariants = Some(Invariants {
        volume: format_rational(&volume),
        barycenter: strings(&hp.barycenter().map_err(CliError::from_run)?),
    });

    let wants = |cs: &[Command]| cs.contains(&command);
    let mut xi_star = None;
    if wants(&[Command::Soliton, Command::Continuity, Command::All]) {
        let sopts = SolitonOptions {
            tol: opts.tol.or(file_opts.tol).unwrap_or(SolitonOptions::default().tol),
            quadrature: quadrature.clone(),
            ..SolitonOptions::default()
        };
        let sol = solve_soliton(hp, &sopts).map_err(CliError::from_run)?;
        let (ke, gap) = kahler_einstein_test(hp).map_err(CliError::from_run)?;
        xi_star = Some(sol.xi.clone());
        report.soliton = Some(SolitonSection {
            xi: sol.xi,
            residual: sol.residual_norm,
            iterations: sol.iterations,
            hessian_min_eig: sol.hessian_min_eig,
            ke,
            ke_gap: strings(&gap),
        });
    }

    if wants(&[Command::RicciBound, Command::All]) {
        let r = greatest_ricci_lower_bound(hp).map_err(CliError::from_run)?;
        report.ricci_bound = Some(RicciSection {
            r: format_rational(&r.t_infinity),
            r_decimal: to_f64(&r.t_infinity),
            exit_scalar: r.exit_scalar.as_ref().map(format_rational),
            tight_facets: r.tight_facets,
            exit_point: r.exit_point.as_deref().map(strings),
        });
    }

    if command == Command::All && hp.rank() != 1 {
        report.continuity_skipped = Some(format!(
            "the continuity solver handles rank 1 only; this problem has rank {}",
            hp.rank()
        ));
    } else if wants(&[Command::Continuity, Command::All]) {
        let defaults = ContinuityOptions::default();
        let copts = ContinuityOptions {
            grid_points: opts.grid.or(file_opts.grid).unwrap_or(defaults.grid_points),
            half_width: opts.half_width.or(file_opts.half_width),
            t0: opts.t0.or(file_opts.t0).unwrap_or(defaults.t0),
            ..defaults
        };
        let xi_star = xi_star.expect("soliton runs before continuity");
        let zero = vec![0.0; hp.rank()];
        let sweep = |xi: &[f64]| -> Result<ContinuityTrace, CliError> {
            let eq = MaEquation::new(hp, xi, &quadrature).map_err(CliError::from_run)?;
            continuity_sweep(&eq, &copts).map_err(CliError::from_run)
        };
        let soliton_trace = sweep(&xi_star)?;
        let einstein_trace = sweep(&zero)?;
        let (p1, p2) = match &opts.trace {
            Some(p) => (Some(p.clone()), Some(sibling_trace_path(p))),
            None => (None, None),
        };
        if let (Some(a), Some(b)) = (&p1, &p2) {
            write_trace(&soliton_trace, a)?;
            write_trace(&einstein_trace, b)?;
        }
        report.continuity = Some(ContinuitySection {
            grid_points: copts.grid_points,
            half_width: copts.half_width,
            t0: copts.t0,
            soliton_sweep: summarize(&soliton_trace, p1.as_deref()),
            einstein_sweep: summarize(&einstein_trace, p2.as_deref()),
            rm_numeric: estimate_rm_numeric(&einstein_trace).ok(),
        });
    }
    Ok(report)
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// A few lines for a terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}: rank {}, kappa = ({})", self.tool, self.command, self.problem.rank, self.problem.kappa.join(", "));
        if let Some(r) = &self.validation.reflectivity {
            let _ = writeln!(out, "reflectivity: {}", if r.all_passed() { "all conditions hold" } else { "FAILED (overridden)" });
        }
        if let Some(i) = &self.invariants {
            let _ = writeln!(out, "V = {}, Bar_DH = ({})", i.volume, i.barycenter.join(", "));
        }
        if let Some(s) = &self.soliton {
            let _ = writeln!(out, "xi = {:?} (residual {:.2e}), Kahler-Einstein: {}", s.xi, s.residual, s.ke);
        }
        if let Some(r) = &self.ricci_bound {
            let _ = writeln!(out, "R(M) = {} ~ {:.6}", r.r, r.r_decimal);
        }
        if let Some(reason) = &self.continuity_skipped {
            let _ = writeln!(out, "continuity skipped: {reason}");
        }
        if let Some(c) = &self.continuity {
            for (name, s) in [("xi = xi*", &c.soliton_sweep), ("xi = 0", &c.einstein_sweep)] {
                let outcome = match &s.termination {
                    Termination::ReachedOne => "reached t = 1".to_string(),
                    Termination::Divergence { t_failed, .. } => format!("diverged near t = {t_failed:.4}"),
                    Termination::InitialFailure { reason } => format!("failed to start: {reason}"),
                };
                let _ = writeln!(out, "sweep {name}: {outcome} after {} accepted states", s.accepted_states);
            }
            if let Some(e) = &c.rm_numeric {
                let _ = writeln!(out, "numeric R(M) estimate {:.4} +/- {:.4}", e.estimate, e.uncertainty);
            }
        }
        out
    }
}
