//! Command-line runner: configuration merging, the four subcommands and the
//! files they write.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! file, then the output-directory environment variable, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adapt::{run_loop, ConvergenceRow, ConvergenceTable, LoopConfig, RefinementMode};
use crate::assembly::{apply_dirichlet, assemble, assemble_load, compute_errors, solve};
use crate::error::Error;
use crate::estimator::{aggregate, compute_indicators};
use crate::mesh::{build_structured_mesh_with, refine_uniform, write_mesh, Diagonals, Geometry};
use crate::problem::{Problem, ProblemKind};
use crate::tcoercivity::{verify_coercivity, ClementRule, LiftingKind, Roles};

/// Overrides the output directory of every subcommand unless a flag is given.
pub const OUTPUT_DIR_ENV: &str = "SIGNFEM_OUTPUT_DIR";

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "signfem", version, about = "Adaptive P1 FEM for sign-changing diffusion coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve once on the initial mesh and dump the system, solution and indicators.
    Solve(RunArgs),
    /// Run the solve-estimate-refine loop and write the convergence table.
    Converge(RunArgs),
    /// Estimate the lifting and coercivity constants on nested meshes.
    VerifyCoercivity(CoercivityArgs),
    /// Write the initial mesh, optionally refined uniformly.
    DumpMesh(MeshArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// polynomial | singular
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// uniform | adaptive
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Cells per unit length of the initial grid.
    #[arg(long)]
    pub initial_n: Option<String>,
    #[arg(long)]
    pub mark_threshold: Option<String>,
    /// Stop before solving a mesh with more vertices.
    #[arg(long)]
    pub max_dof: Option<String>,
    /// uniform | mirrored
    #[arg(long)]
    pub diagonals: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct CoercivityArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// square | lshape
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub initial_n: Option<String>,
    /// auto | plus-to-minus | minus-to-plus
    #[arg(long)]
    pub roles: Option<String>,
    /// nodal | clement | clement-edge
    #[arg(long)]
    pub lifting: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct MeshArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub initial_n: Option<String>,
    /// Uniform refinements applied before writing.
    #[arg(long)]
    pub refine: Option<String>,
    #[arg(long)]
    pub diagonals: Option<String>,
}

/// Errors of the runner, each with its exit status.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Run(e) => match e.root() {
                Error::SingularSystem(_) | Error::Solver(_) => EXIT_SINGULAR,
                Error::Io(_) => EXIT_IO,
                Error::InvalidArgument(_) | Error::InadmissibleContrast(_) | Error::Parse { .. } => EXIT_PARSE,
                _ => EXIT_OTHER,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "configuration error: {msg}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Run(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("line {}: expected key = value, found {line:?}", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Parse(format!("line {}: empty key", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Merged settings with the set of keys a subcommand accepts.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(config: Option<&Path>, allowed: &[&str], flags: Vec<(&str, Option<String>)>, env_dir: Option<String>) -> CliResult<Settings> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Run(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))?;
            for (k, v) in parse_config_text(&text)? {
                if k != "output_dir" && !allowed.contains(&k.as_str()) {
                    return Err(CliError::Parse(format!("unknown key {k:?} in {}", path.display())));
                }
                values.insert(k, v);
            }
        }
        if let Some(dir) = env_dir {
            values.insert("output_dir".into(), dir);
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| CliError::Parse(format!("{key}: cannot parse {s:?}"))),
        }
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> CliResult<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => options.iter().find(|(name, _)| name == s).map(|(_, v)| *v).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                CliError::Parse(format!("{key}: {s:?} is not one of {}", names.join(", ")))
            }),
        }
    }

    fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.values.get("output_dir").map(String::as_str).unwrap_or("out"))
    }
}

/// Fully parsed configuration of `solve` and `converge`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub mu: f64,
    pub mode: RefinementMode,
    pub steps: usize,
    pub initial_n: usize,
    pub mark_threshold: f64,
    pub max_dof: Option<usize>,
    pub diagonals: Diagonals,
    pub output_dir: PathBuf,
}

const RUN_KEYS: &[&str] = &["problem", "mu", "mode", "steps", "initial_n", "mark_threshold", "max_dof", "diagonals"];

fn diagonals_choice(s: &Settings) -> CliResult<Diagonals> {
    s.choice("diagonals", Diagonals::Uniform, &[("uniform", Diagonals::Uniform), ("mirrored", Diagonals::Mirrored)])
}

impl RunConfig {
    pub fn from_args(args: &RunArgs, env_dir: Option<String>) -> CliResult<RunConfig> {
        let flags = vec![
            ("output_dir", args.output_dir.clone()),
            ("problem", args.problem.clone()),
            ("mu", args.mu.clone()),
            ("mode", args.mode.clone()),
            ("steps", args.steps.clone()),
            ("initial_n", args.initial_n.clone()),
            ("mark_threshold", args.mark_threshold.clone()),
            ("max_dof", args.max_dof.clone()),
            ("diagonals", args.diagonals.clone()),
        ];
        let s = Settings::load(args.config.as_deref(), RUN_KEYS, flags, env_dir)?;
        let problem = s.choice(
            "problem",
            ProblemKind::Polynomial,
            &[("polynomial", ProblemKind::Polynomial), ("singular", ProblemKind::Singular)],
        )?;
        let mu: f64 = s.get("mu", -3.0)?;
        if !(mu < 0.0) || !mu.is_finite() {
            return Err(CliError::Parse(format!("mu: must be negative, got {mu}")));
        }
        let mode = s.choice(
            "mode",
            RefinementMode::Uniform,
            &[("uniform", RefinementMode::Uniform), ("adaptive", RefinementMode::Adaptive)],
        )?;
        let steps: usize = s.get("steps", 4)?;
        if steps == 0 {
            return Err(CliError::Parse("steps: must be at least 1".into()));
        }
        let initial_n: usize = s.get("initial_n", 8)?;
        if initial_n == 0 {
            return Err(CliError::Parse("initial_n: must be at least 1".into()));
        }
        let mark_threshold: f64 = s.get("mark_threshold", crate::adapt::DEFAULT_THRESHOLD)?;
        if !(mark_threshold > 0.0 && mark_threshold < 1.0) {
            return Err(CliError::Parse(format!("mark_threshold: must lie in (0, 1), got {mark_threshold}")));
        }
        let max_dof = match s.values.get("max_dof") {
            None => None,
            Some(_) => Some(s.get::<usize>("max_dof", 0)?),
        };
        Ok(RunConfig {
            problem,
            mu,
            mode,
            steps,
            initial_n,
            mark_threshold,
            max_dof,
            diagonals: diagonals_choice(&s)?,
            output_dir: s.output_dir(),
        })
    }

    fn problem_name(&self) -> &'static str {
        match self.problem {
            ProblemKind::Polynomial => "polynomial",
            ProblemKind::Singular => "singular",
        }
    }

    fn echo(&self) -> String {
        format!(
            "problem = {}\nmu = {}\nmode = {}\nsteps = {}\ninitial_n = {}\nmark_threshold = {}\nmax_dof = {}\ndiagonals = {}\n",
            self.problem_name(),
            self.mu,
            self.mode.name(),
            self.steps,
            self.initial_n,
            self.mark_threshold,
            self.max_dof.map(|d| d.to_string()).unwrap_or_else(|| "none".into()),
            match self.diagonals {
                Diagonals::Uniform => "uniform",
                Diagonals::Mirrored => "mirrored",
            }
        )
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())))))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Run(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn open(path: &Path) -> CliResult<BufWriter<fs::File>> {
    let f = fs::File::create(path)
        .map_err(|e| CliError::Run(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))?;
    Ok(BufWriter::new(f))
}

/// Runs `converge`; returns the table after writing `table.csv`,
/// `table.txt`, `run.log` and one `indicators_kNN.txt` per level.
pub fn run_converge(cfg: &RunConfig) -> CliResult<ConvergenceTable> {
    let problem = Problem::new(cfg.problem, cfg.mu)?;
    create_dir(&cfg.output_dir)?;
    let mut log = format!("{}{}\n", cfg.echo(), problem.describe());
    let mesh = build_structured_mesh_with(problem.geometry, cfg.initial_n, cfg.diagonals)?;
    let mut loop_cfg = LoopConfig::new(cfg.mode, cfg.steps);
    loop_cfg.threshold = cfg.mark_threshold;
    loop_cfg.max_dof = cfg.max_dof;
    let mut io_failure = None;
    let result = run_loop(&problem, mesh, &loop_cfg, |d| {
        let path = cfg.output_dir.join(format!("indicators_k{:02}.txt", d.k));
        let written = open(&path).and_then(|mut w| {
            d.indicators.write_dump(&mut w)?;
            w.flush()?;
            Ok(())
        });
        if let Err(e) = written {
            io_failure = Some(e);
            return Err(Error::Io(std::io::Error::other("indicator dump failed")));
        }
        Ok(())
    });
    if let Some(e) = io_failure {
        return Err(e);
    }
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            log.push_str(&format!("failed: {e}\n"));
            write_file(&cfg.output_dir.join("run.log"), &log)?;
            return Err(e.into());
        }
    };
    write_file(&cfg.output_dir.join("table.csv"), &table.to_csv())?;
    write_file(&cfg.output_dir.join("table.txt"), &table.to_text())?;
    write_file(&cfg.output_dir.join("run.log"), &log)?;
    Ok(table)
}

/// Runs `solve` on the initial mesh: writes `system.txt` (coordinate
/// format, Dirichlet rows included), `solution.txt`, `indicators.txt`,
/// a one-row table and `run.log`.
pub fn run_solve(cfg: &RunConfig) -> CliResult<ConvergenceRow> {
    let problem = Problem::new(cfg.problem, cfg.mu)?;
    create_dir(&cfg.output_dir)?;
    let mut log = format!("{}{}\n", cfg.echo(), problem.describe());
    let mesh = build_structured_mesh_with(problem.geometry, cfg.initial_n, cfg.diagonals)?;
    let a = assemble(&mesh, &problem.coefficient)?;
    let b = assemble_load(&mesh, |x, s| problem.source(x, s));
    let system = apply_dirichlet(&mesh, a, b, |x| problem.dirichlet(x));
    let mut w = open(&cfg.output_dir.join("system.txt"))?;
    system.matrix.write_coordinate(&mut w)?;
    w.flush()?;
    let uh = match solve(&mesh, &system) {
        Ok(u) => u,
        Err(e) => {
            let e = e.at_level(1);
            log.push_str(&format!("failed: {e}\n"));
            write_file(&cfg.output_dir.join("run.log"), &log)?;
            return Err(e.into());
        }
    };
    let mut sol = String::from("# id x y u_h\n");
    for (i, v) in mesh.vertices().iter().enumerate() {
        sol.push_str(&format!("{i} {:?} {:?} {:.15e}\n", v.coords[0], v.coords[1], uh.values[i]));
    }
    write_file(&cfg.output_dir.join("solution.txt"), &sol)?;
    let errors = compute_errors(&mesh, &uh, &problem.exact)?;
    let ind = compute_indicators(&mesh, &uh, &problem.coefficient, |x, s| problem.source(x, s))?;
    let mut w = open(&cfg.output_dir.join("indicators.txt"))?;
    ind.write_dump(&mut w)?;
    w.flush()?;
    let report = aggregate(&ind, errors.h1);
    let row = ConvergenceRow {
        k: 1,
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
    };
    let mut table = ConvergenceTable::default();
    table.push(row.clone());
    write_file(&cfg.output_dir.join("table.csv"), &table.to_csv())?;
    write_file(&cfg.output_dir.join("table.txt"), &table.to_text())?;
    write_file(&cfg.output_dir.join("run.log"), &log)?;
    Ok(row)
}

const GEOMETRIES: &[(&str, Geometry)] = &[("square", Geometry::SymmetricSquare), ("lshape", Geometry::LShapedInterface)];

/// Runs `verify-coercivity`; writes `coercivity.txt`.
pub fn run_coercivity(args: &CoercivityArgs, env_dir: Option<String>) -> CliResult<String> {
    let flags = vec![
        ("output_dir", args.output_dir.clone()),
        ("geometry", args.geometry.clone()),
        ("mu", args.mu.clone()),
        ("levels", args.levels.clone()),
        ("initial_n", args.initial_n.clone()),
        ("roles", args.roles.clone()),
        ("lifting", args.lifting.clone()),
    ];
    let keys = ["geometry", "mu", "levels", "initial_n", "roles", "lifting"];
    let s = Settings::load(args.config.as_deref(), &keys, flags, env_dir)?;
    let geometry = s.choice("geometry", Geometry::SymmetricSquare, GEOMETRIES)?;
    let mu: f64 = s.get("mu", -0.5)?;
    if !(mu < 0.0) || !mu.is_finite() {
        return Err(CliError::Parse(format!("mu: must be negative, got {mu}")));
    }
    let levels: usize = s.get("levels", 3)?;
    let initial_n: usize = s.get("initial_n", 2)?;
    if levels == 0 || initial_n == 0 {
        return Err(CliError::Parse("levels and initial_n must be at least 1".into()));
    }
    let auto = Roles::preferred(geometry, mu);
    let roles = s.choice(
        "roles",
        auto,
        &[("auto", auto), ("plus-to-minus", Roles::PlusToMinus), ("minus-to-plus", Roles::MinusToPlus)],
    )?;
    let lifting = s.choice(
        "lifting",
        LiftingKind::Nodal,
        &[
            ("nodal", LiftingKind::Nodal),
            ("clement", LiftingKind::Clement(ClementRule::PointValues)),
            ("clement-edge", LiftingKind::Clement(ClementRule::EdgeMeans)),
        ],
    )?;
    let report = verify_coercivity(geometry, mu, initial_n, levels, roles, lifting)?;
    let dir = s.output_dir();
    create_dir(&dir)?;
    let text = report.to_text();
    write_file(&dir.join("coercivity.txt"), &text)?;
    Ok(text)
}

/// Runs `dump-mesh`; writes `mesh.txt`.
pub fn run_dump_mesh(args: &MeshArgs, env_dir: Option<String>) -> CliResult<PathBuf> {
    let flags = vec![
        ("output_dir", args.output_dir.clone()),
        ("geometry", args.geometry.clone()),
        ("initial_n", args.initial_n.clone()),
        ("refine", args.refine.clone()),
        ("diagonals", args.diagonals.clone()),
    ];
    let s = Settings::load(args.config.as_deref(), &["geometry", "initial_n", "refine", "diagonals"], flags, env_dir)?;
    let geometry = s.choice("geometry", Geometry::SymmetricSquare, GEOMETRIES)?;
    let initial_n: usize = s.get("initial_n", 8)?;
    if initial_n == 0 {
        return Err(CliError::Parse("initial_n: must be at least 1".into()));
    }
    let refine: usize = s.get("refine", 0)?;
    let mut mesh = build_structured_mesh_with(geometry, initial_n, diagonals_choice(&s)?)?;
    for _ in 0..refine {
        mesh = refine_uniform(&mesh)?;
    }
    let dir = s.output_dir();
    create_dir(&dir)?;
    let path = dir.join("mesh.txt");
    let mut w = open(&path)?;
    write_mesh(&mesh, &mut w)?;
    w.flush()?;
    Ok(path)
}

/// Parses `args` (program name first), runs and returns the exit status.
/// Diagnostics go to stderr, tables and reports to stdout.
pub fn main_with_args<I, T>(args: I, env_dir: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => RunConfig::from_args(a, env_dir).and_then(|c| run_solve(&c)).map(|row| {
            let mut t = ConvergenceTable::default();
            t.push(row);
            print!("{}", t.to_text());
        }),
        Command::Converge(a) => RunConfig::from_args(a, env_dir).and_then(|c| run_converge(&c)).map(|t| print!("{}", t.to_text())),
        Command::VerifyCoercivity(a) => run_coercivity(a, env_dir).map(|r| print!("{r}")),
        Command::DumpMesh(a) => run_dump_mesh(a, env_dir).map(|p| println!("{}", p.display())),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("signfem: {e}");
            e.exit_code()
        }
    }
}
