use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::cases::{find_case, ManufacturedCase};
use crate::analysis::{
    discrete_inf_sup, error_bundle, verify_error_equation, weak_divergence_norm, ConvergenceRecord,
    ErrorEquationResidual, InfSupReport, LevelRecord, Rate, INF_SUP_MAX_PRESSURE_DOFS,
};
use crate::assembly::assemble;
use crate::error::{Error, Result};
use crate::mesh::{generate_mesh_with, shape_regularity, MeshFamily, MeshOptions};
use crate::solver::{solve_with, SolverMethod, SolverOptions};
use crate::spaces::Discretization;

/// Largest accepted residual of the error equation and of `div_w u_h`.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Errors below this count as exact reproduction for polynomial cases.
pub const EXACTNESS_TOLERANCE: f64 = 1e-9;

/// Slack subtracted from the theoretical orders.
pub const RATE_SLACK: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub case: String,
    pub family: MeshFamily,
    pub degree: usize,
    pub n0: usize,
    pub levels: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub solver: SolverMethod,
    pub dump_matrices: bool,
    /// `beta_h` is skipped on levels with more pressure unknowns (and on
    /// levels with a single one).
    pub inf_sup_cap: usize,
    pub error_equation_samples: usize,
}

impl StudyConfig {
    pub fn new(case: &str, family: MeshFamily, degree: usize) -> Self {
        StudyConfig {
            case: case.to_string(),
            family,
            degree,
            n0: 4,
            levels: 4,
            seed: MeshOptions::default().seed,
            out: None,
            solver: SolverMethod::Direct,
            dump_matrices: false,
            inf_sup_cap: INF_SUP_MAX_PRESSURE_DOFS,
            error_equation_samples: 50,
        }
    }

    fn validate(&self) -> Result<ManufacturedCase> {
        if !(1..=3).contains(&self.degree) {
            return Err(Error::Config(format!(
                "study degree must be 1, 2 or 3, got {}",
                self.degree
            )));
        }
        if self.n0 == 0 {
            return Err(Error::Config("n0 must be at least 1".into()));
        }
        if self.levels < crate::analysis::MIN_LEVELS {
            return Err(Error::Config(format!(
                "a study needs at least {} levels to fit rates, got {}",
                crate::analysis::MIN_LEVELS,
                self.levels
            )));
        }
        if self.levels > 12 {
            return Err(Error::Config(format!("{} levels is beyond desk scale", self.levels)));
        }
        find_case(&self.case)
    }
}

/// Everything measured on one level besides the error bundle.
#[derive(Clone, Debug, Serialize)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub n: usize,
    pub max_aspect: f64,
    pub error_equation: ErrorEquationResidual,
    pub divergence: f64,
    /// The solver report as a JSON line.
    pub solve: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyOutcome {
    pub case: String,
    pub family: String,
    pub degree: usize,
    pub seed: u64,
    pub record: ConvergenceRecord,
    pub diagnostics: Vec<LevelDiagnostics>,
    pub checks: Vec<ThresholdCheck>,
}

impl StudyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Rate table and threshold summary for a terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "case {} on {} meshes, k = {}, seed {}",
            self.case, self.family, self.degree, self.seed
        );
        let _ = writeln!(
            s,
            "{:>5} {:>10} {:>7} {:>11} {:>11} {:>11} {:>11} {:>11} {:>8}",
            "level", "h", "cells", "|||e|||", "Q0u-u0", "u-u0", "Qp-ph", "p-ph", "beta_h"
        );
        for l in &self.record.levels {
            let e = &l.errors;
            let beta = l.beta_h.map(|b| format!("{b:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:>5} {:>10.4e} {:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>8}",
                l.level, l.h, l.cells, e.triple_bar, e.vel_l2_proj, e.vel_l2_true, e.pres_l2, e.pres_l2_true, beta
            );
        }
        let r = &self.record.rates;
        let _ = writeln!(
            s,
            "{:>5} {:>10} {:>7} {:>11} {:>11} {:>11} {:>11} {:>11}",
            "rate", "", "", r.triple_bar, r.vel_l2_proj, r.vel_l2_true, r.pres_l2, r.pres_l2_true
        );
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(s, "{mark} {}: expected {}, observed {}", c.name, c.expected, c.observed);
        }
        s
    }
}

fn dump_dir(config: &StudyConfig, level: usize) -> PathBuf {
    let base = match &config.out {
        Some(out) => {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
            out.with_file_name(format!("{stem}-matrices"))
        }
        None => PathBuf::from("wgstokes-matrices"),
    };
    base.join(format!("level-{level}"))
}

pub fn run_study(config: &StudyConfig) -> Result<StudyOutcome> {
    let case = config.validate()?;
    let k = config.degree;
    let mut levels = Vec::with_capacity(config.levels);
    let mut diagnostics = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        let n = config.n0 << level;
        let step = || -> Result<(LevelRecord, LevelDiagnostics)> {
            let opts = MeshOptions {
                seed: config.seed.wrapping_add(level as u64),
                ..MeshOptions::default()
            };
            let mesh = generate_mesh_with(config.family, n, &opts)?;
            let max_aspect = shape_regularity(&mesh, f64::INFINITY)?.max_aspect;
            let cells = mesh.num_cells();
            let disc = Discretization::with_options(mesh, k, case.discretization_options(k))?;
            let sys = assemble(&disc, |p| case.body_force(p), |p| crate::analysis::ExactSolution::velocity(&case, p))?;
            if config.dump_matrices {
                sys.dump(&dump_dir(config, level))?;
            }
            let report = solve_with(&sys, &SolverOptions::with_method(config.solver))?;
            let errors = error_bundle(&disc, &case, &report)?;
            let beta_h = if (2..=config.inf_sup_cap).contains(&disc.dofs().num_pressure()) {
                Some(discrete_inf_sup(&disc)?.beta)
            } else {
                None
            };
            let error_equation = verify_error_equation(
                &disc,
                &sys,
                &report,
                &case,
                config.error_equation_samples,
                config.seed.wrapping_add(level as u64),
            )?;
            let divergence = weak_divergence_norm(&disc, &report.velocity)?;
            Ok((
                LevelRecord {
                    level,
                    h: errors.h,
                    cells,
                    errors,
                    beta_h,
                },
                LevelDiagnostics {
                    level,
                    n,
                    max_aspect,
                    error_equation,
                    divergence,
                    solve: report.to_json_line(Some(level)),
                },
            ))
        };
        let (rec, diag) = step().map_err(|e| e.at_level(level))?;
        levels.push(rec);
        diagnostics.push(diag);
    }
    let record = ConvergenceRecord::new(levels)?;
    let checks = threshold_checks(&case, k, &record, &diagnostics);
    if let Some(out) = &config.out {
        std::fs::write(out, record.to_csv()).map_err(|e| Error::io(out, e))?;
    }
    Ok(StudyOutcome {
        case: case.name.to_string(),
        family: config.family.name().to_string(),
        degree: k,
        seed: config.seed,
        record,
        diagnostics,
        checks,
    })
}

fn rate_check(name: &str, rate: &Rate, min: f64) -> ThresholdCheck {
    ThresholdCheck {
        name: format!("{name} slope"),
        expected: format!(">= {min:.2}"),
        observed: rate.to_string(),
        passed: rate.meets(min),
    }
}

fn max_check(name: &str, values: impl Iterator<Item = f64>, tol: f64) -> ThresholdCheck {
    let worst = values.fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
    ThresholdCheck {
        name: name.to_string(),
        expected: format!("<= {tol:.0e}"),
        observed: format!("{worst:.3e}"),
        passed: worst <= tol,
    }
}

fn threshold_checks(
    case: &ManufacturedCase,
    k: usize,
    record: &ConvergenceRecord,
    diagnostics: &[LevelDiagnostics],
) -> Vec<ThresholdCheck> {
    let mut checks = Vec::new();
    if case.is_exact_for(k) {
        let errs = record.levels.iter().flat_map(|l| {
            let e = &l.errors;
            [e.triple_bar, e.vel_l2_proj, e.pres_l2]
        });
        checks.push(max_check("reproduction error", errs, EXACTNESS_TOLERANCE));
    } else {
        let kf = k as f64;
        let r = &record.rates;
        checks.push(rate_check("triple_bar", &r.triple_bar, kf - RATE_SLACK));
        checks.push(rate_check("pres_l2", &r.pres_l2, kf - RATE_SLACK));
        checks.push(rate_check("vel_l2_proj", &r.vel_l2_proj, kf + 1.0 - RATE_SLACK));
    }
    checks.push(max_check(
        "error equation (momentum)",
        diagnostics.iter().map(|d| d.error_equation.momentum_sampled),
        IDENTITY_TOLERANCE,
    ));
    checks.push(max_check(
        "error equation (continuity)",
        diagnostics.iter().map(|d| d.error_equation.continuity_dual),
        IDENTITY_TOLERANCE,
    ));
    checks.push(max_check(
        "||div_w u_h||",
        diagnostics.iter().map(|d| d.divergence),
        IDENTITY_TOLERANCE,
    ));
    checks
}

#[derive(Clone, Debug, Serialize)]
pub struct InfSupLevel {
    pub level: usize,
    pub n: usize,
    pub cells: usize,
    pub report: InfSupReport,
}

/// `beta_h` on `levels` meshes `n0 * 2^j`.
pub fn run_inf_sup_study(
    family: MeshFamily,
    degree: usize,
    n0: usize,
    levels: usize,
    seed: u64,
) -> Result<Vec<InfSupLevel>> {
    if n0 == 0 || levels == 0 {
        return Err(Error::Config("n0 and levels must both be at least 1".into()));
    }
    (0..levels)
        .map(|level| {
            let n = n0 << level;
            let opts = MeshOptions {
                seed: seed.wrapping_add(level as u64),
                ..MeshOptions::default()
            };
            let run = || -> Result<InfSupLevel> {
                let mesh = generate_mesh_with(family, n, &opts)?;
                let cells = mesh.num_cells();
                let disc = Discretization::new(mesh, degree)?;
                Ok(InfSupLevel {
                    level,
                    n,
                    cells,
                    report: discrete_inf_sup(&disc)?,
                })
            };
            run().map_err(|e| e.at_level(level))
        })
        .collect()
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
