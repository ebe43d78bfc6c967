//! Marking, the solve-estimate-refine loop and convergence tables.

use std::fmt::Write as _;

use crate::assembly::{compute_errors, solve_problem, DiscreteSolution, ErrorNorms};
use crate::error::{Error, Result};
use crate::estimator::{aggregate, compute_indicators, ElementIndicators, EstimatorReport};
use crate::mesh::{refine_marked, refine_uniform, Mesh};
use crate::problem::Problem;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Triangles whose indicator strictly exceeds `threshold` times the largest.
pub fn mark(eta: &[f64], threshold: f64) -> Vec<usize> {
    let max = eta.iter().copied().fold(0.0f64, f64::max);
    let cut = threshold * max;
    eta.iter().enumerate().filter(|(_, v)| **v > cut).map(|(i, _)| i).collect()
}

/// Rate with respect to DoF^{-1/2}.
pub fn convergence_rate(e_prev: f64, dof_prev: usize, e_next: f64, dof_next: usize) -> Result<f64> {
    let positive = e_prev > 0.0 && e_next > 0.0 && e_prev.is_finite() && e_next.is_finite();
    if !positive || dof_prev == 0 || dof_next == 0 || dof_prev == dof_next {
        return Err(Error::InvalidRate);
    }
    Ok((e_prev / e_next).ln() / (0.5 * (dof_next as f64 / dof_prev as f64).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementMode {
    Uniform,
    Adaptive,
}

impl RefinementMode {
    pub fn name(self) -> &'static str {
        match self {
            RefinementMode::Uniform => "uniform",
            RefinementMode::Adaptive => "adaptive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub mode: RefinementMode,
    /// Number of solved levels.
    pub steps: usize,
    pub threshold: f64,
    /// Stop before solving a mesh with more vertices than this.
    pub max_dof: Option<usize>,
}

impl LoopConfig {
    pub fn new(mode: RefinementMode, steps: usize) -> LoopConfig {
        LoopConfig { mode, steps, threshold: DEFAULT_THRESHOLD, max_dof: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    /// All vertices, boundary included.
    pub dof: usize,
    pub interior_dof: usize,
    pub e_l2: f64,
    pub cv_l2: Option<f64>,
    pub e_h1: f64,
    pub cv_h1: Option<f64>,
    pub h1_semi: f64,
    pub eta: f64,
    pub osc: f64,
    pub effectivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

impl ConvergenceTable {
    /// Appends a row and fills in the rates against the previous one.
    pub fn push(&mut self, mut row: ConvergenceRow) {
        if let Some(prev) = self.rows.last() {
            row.cv_l2 = convergence_rate(prev.e_l2, prev.dof, row.e_l2, row.dof).ok();
            row.cv_h1 = convergence_rate(prev.e_h1, prev.dof, row.e_h1, row.dof).ok();
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,dof,e_l2,cv_l2,e_h1,cv_h1,eta,effectivity\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{},{:.6e},{},{:.6e},{}",
                r.k,
                r.dof,
                r.e_l2,
                fmt_opt(r.cv_l2, 4),
                r.e_h1,
                fmt_opt(r.cv_h1, 4),
                r.eta,
                fmt_opt(r.effectivity, 4)
            );
        }
        s
    }

    /// Column-aligned layout for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>3} {:>8} {:>10} {:>6} {:>10} {:>6} {:>10} {:>7}\n",
            "k", "DoF", "e_L2", "CV_L2", "e_H1", "CV_H1", "eta", "eff"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>3} {:>8} {:>10.2E} {:>6} {:>10.2E} {:>6} {:>10.2E} {:>7}",
                r.k,
                r.dof,
                r.e_l2,
                fmt_opt(r.cv_l2, 2),
                r.e_h1,
                fmt_opt(r.cv_h1, 2),
                r.eta,
                fmt_opt(r.effectivity, 2)
            );
        }
        s
    }
}

/// Everything computed on one level, handed to the loop observer.
pub struct LevelData<'a> {
    pub k: usize,
    pub mesh: &'a Mesh,
    pub solution: &'a DiscreteSolution,
    pub errors: &'a ErrorNorms,
    pub indicators: &'a ElementIndicators,
    pub report: &'a EstimatorReport,
    /// Triangles refined to produce the next mesh; every triangle in
    /// uniform mode, empty on the last level.
    pub marked: &'a [usize],
}

/// Solve, measure, estimate and refine `config.steps` times. Failures carry
/// the 1-based level index.
pub fn run_loop<O: FnMut(&LevelData) -> Result<()>>(
    problem: &Problem,
    initial: Mesh,
    config: &LoopConfig,
    mut observer: O,
) -> Result<ConvergenceTable> {
    if config.steps == 0 {
        return Err(Error::InvalidArgument("the loop needs at least one step".into()));
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("marking threshold {} outside (0, 1)", config.threshold)));
    }
    let mut table = ConvergenceTable::default();
    let mut mesh = initial;
    for k in 1..=config.steps {
        if let Some(cap) = config.max_dof {
            if mesh.num_vertices() > cap && k > 1 {
                break;
            }
        }
        let level = |e: Error| e.at_level(k);
        let uh = solve_problem(&mesh, problem).map_err(level)?;
        let errors = compute_errors(&mesh, &uh, &problem.exact).map_err(level)?;
        let indicators = compute_indicators(&mesh, &uh, &problem.coefficient, |x, s| problem.source(x, s)).map_err(level)?;
        let report = aggregate(&indicators, errors.h1);
        table.push(ConvergenceRow {
            k,
            dof: mesh.num_vertices(),
            interior_dof: mesh.num_interior_vertices(),
            e_l2: errors.l2,
            cv_l2: None,
            e_h1: errors.h1,
            cv_h1: None,
            h1_semi: errors.h1_semi,
            eta: report.eta,
            osc: report.osc,
            effectivity: report.effectivity.value(),
        });
        let last = k == config.steps;
        let marked: Vec<usize> = match (last, config.mode) {
            (true, _) => Vec::new(),
            (false, RefinementMode::Uniform) => (0..mesh.num_triangles()).collect(),
            (false, RefinementMode::Adaptive) => mark(&indicators.totals(), config.threshold),
        };
        observer(&LevelData {
            k,
            mesh: &mesh,
            solution: &uh,
            errors: &errors,
            indicators: &indicators,
            report: &report,
            marked: &marked,
        })
        .map_err(level)?;
        if last {
            break;
        }
        mesh = match config.mode {
            RefinementMode::Uniform => refine_uniform(&mesh).map_err(level)?,
            RefinementMode::Adaptive => refine_marked(&mesh, &marked).map_err(level)?,
        };
    }
    Ok(table)
}
