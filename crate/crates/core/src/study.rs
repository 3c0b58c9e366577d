//! Convergence and timing studies, and the file-producing commands behind the
//! `amgct` binary.
//!
//! A study runs, for every level `J` of its range: mesh, assemble, coarsen
//! with `J + 1` levels, solve by the combination technique and/or the full
//! tensor product, and compare against a reference at sampled node pairs.
//! Nothing is written until every level has finished, so a failed study
//! leaves no partial CSV behind.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::amg::{build_hierarchy, operator_complexity, CoarseningParams, Hierarchy};
use crate::combination::{
    enumerate_indices, evaluate_combined, pivoted_cholesky, reference_disk, reference_lowrank, reference_square,
    relative_error, solve_all, solve_full, CombinedSolution, EvaluationSample, GaussianKernel, LowRankFactor,
    SolveOptions, TensorLoad,
};
use crate::error::{Error, Result};
use crate::fem::{assemble, AssembledProblem};
use crate::mesh::{generate_disk_mesh, generate_square_mesh, load_mesh, Mesh};
use crate::mm::{read_matrix_market, write_matrix_market};
use crate::tensor::AmgCycleConfig;

/// Largest fine size `N_J` for which the full tensor-product solve is run.
/// Its iterate alone holds `N_J²` values.
/// Level 12 already has about 1.7e7 nodes on the square.
pub const MAX_GENERATED_LEVEL: u32 = 12;

pub const FULL_TP_LIMIT: usize = 4000;
/// Trace tolerance of the kernel factorisation behind Gaussian loads.
pub const KERNEL_TRACE_TOL: f64 = 1e-8;
pub const KERNEL_MAX_RANK: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Square,
    Disk,
    /// A mesh file. `{J}` in the path is replaced by the level.
    MeshFile(PathBuf),
}

impl Geometry {
    pub fn mesh(&self, level: u32) -> Result<Mesh> {
        let min = match self {
            Geometry::Square => 1,
            Geometry::Disk => 2,
            Geometry::MeshFile(_) => 0,
        };
        if !matches!(self, Geometry::MeshFile(_)) && !(min..=MAX_GENERATED_LEVEL).contains(&level) {
            return Err(Error::InvalidParameter(format!(
                "{self} meshes exist for levels {min}..={MAX_GENERATED_LEVEL}, got {level}"
            )));
        }
        match self {
            Geometry::Square => Ok(generate_square_mesh(level)),
            Geometry::Disk => Ok(generate_disk_mesh(level)),
            Geometry::MeshFile(p) => load_mesh(p.to_string_lossy().replace("{J}", &level.to_string())),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Geometry::Square),
            "disk" => Ok(Geometry::Disk),
            _ => match s.strip_prefix("mesh:") {
                Some(p) if !p.is_empty() => Ok(Geometry::MeshFile(PathBuf::from(p))),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown geometry '{s}' (expected square, disk or mesh:<path>)"
                ))),
            },
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Square => f.write_str("square"),
            Geometry::Disk => f.write_str("disk"),
            Geometry::MeshFile(p) => write!(f, "mesh:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rhs {
    /// `f(x, y) = 1`.
    Constant,
    /// `f(x, y) = exp(-‖x - y‖² / ℓ)` with `ℓ` the configured correlation length.
    Gaussian,
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Rhs::Constant),
            "gaussian" => Ok(Rhs::Gaussian),
            _ => Err(Error::InvalidParameter(format!(
                "unknown rhs '{s}' (expected constant or gaussian)"
            ))),
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rhs::Constant => "constant",
            Rhs::Gaussian => "gaussian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ct,
    FullTp,
    Both,
}

impl Mode {
    fn runs_ct(self) -> bool {
        matches!(self, Mode::Ct | Mode::Both)
    }

    fn runs_full(self) -> bool {
        matches!(self, Mode::FullTp | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ct" => Ok(Mode::Ct),
            "full_tp" | "full-tp" => Ok(Mode::FullTp),
            "both" => Ok(Mode::Both),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode '{s}' (expected ct, full_tp or both)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ct => "ct",
            Mode::FullTp => "full_tp",
            Mode::Both => "both",
        })
    }
}

/// Parses `3..6` (inclusive), `3,4,6` or a single level.
pub fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidParameter(format!("invalid level range '{s}'"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let levels = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    Ok(levels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub geometry: Geometry,
    pub levels: Vec<u32>,
    pub rhs: Rhs,
    /// Only used by [`Rhs::Gaussian`].
    pub corr_length: f64,
    pub coarsening: CoarseningParams,
    pub tol: f64,
    pub max_it: usize,
    pub n_eval: usize,
    pub seed: u64,
    pub mode: Mode,
    pub output_dir: PathBuf,
    /// Worker threads; `None` leaves the global pool alone.
    pub jobs: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::Disk,
            levels: vec![3, 4, 5, 6],
            rhs: Rhs::Constant,
            corr_length: 1.0,
            coarsening: CoarseningParams::default(),
            tol: 1e-8,
            max_it: 200,
            n_eval: 1000,
            seed: 1,
            mode: Mode::Ct,
            output_dir: PathBuf::from("study_out"),
            jobs: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("invalid value '{value}' for '{key}'"))),
    }
}

impl StudyConfig {
    /// Sets one parameter by name. Names match the command-line flags with
    /// `_` or `-` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "geometry" => self.geometry = value.parse()?,
            "levels" => self.levels = parse_levels(value)?,
            "rhs" => self.rhs = value.parse()?,
            "corr_length" => self.corr_length = parse_value(&key, value)?,
            "eps_str" => self.coarsening.eps_str = parse_value(&key, value)?,
            "jacobi_passes" => self.coarsening.jacobi_passes = parse_value(&key, value)?,
            "truncation" => self.coarsening.truncation = parse_value(&key, value)?,
            "second_pass" => self.coarsening.second_pass = parse_bool(&key, value)?,
            "tol" => self.tol = parse_value(&key, value)?,
            "max_it" => self.max_it = parse_value(&key, value)?,
            "n_eval" => self.n_eval = parse_value(&key, value)?,
            "seed" => self.seed = parse_value(&key, value)?,
            "mode" => self.mode = value.parse()?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value),
            "jobs" => self.jobs = Some(parse_value(&key, value)?),
            _ => return Err(Error::InvalidParameter(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_file_text(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("level range is empty".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("levels must be strictly ascending".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.n_eval == 0 {
            return Err(Error::InvalidParameter("n_eval must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be positive".into()));
        }
        if self.rhs == Rhs::Gaussian && !(self.corr_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation length must be positive, got {}",
                self.corr_length
            )));
        }
        self.coarsening.validate()
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        let c = &self.coarsening;
        vec![
            ("geometry", self.geometry.to_string()),
            ("levels", join(&self.levels)),
            ("rhs", self.rhs.to_string()),
            ("corr_length", self.corr_length.to_string()),
            ("eps_str", c.eps_str.to_string()),
            ("jacobi_passes", c.jacobi_passes.to_string()),
            ("truncation", c.truncation.to_string()),
            ("second_pass", c.second_pass.to_string()),
            ("interpolatory_set", format!("{:?}", c.interpolatory_set).to_lowercase()),
            ("min_coarse_size", c.min_coarse_size.to_string()),
            ("max_levels", "J+1".to_string()),
            ("tol", self.tol.to_string()),
            ("max_it", self.max_it.to_string()),
            ("n_eval", self.n_eval.to_string()),
            ("seed", self.seed.to_string()),
            ("mode", self.mode.to_string()),
            ("cycle", "V(1,1) Gauss-Seidel, exact coarsest solve".to_string()),
        ]
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// One solve of one level `J` in one mode.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub level: u32,
    pub n: usize,
    pub error: f64,
    pub time: Duration,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct LevelInfo {
    pub level: u32,
    pub sizes: Vec<usize>,
    pub operator_complexity: f64,
    pub reference: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub ct: Vec<StudyRow>,
    pub full_tp: Vec<StudyRow>,
    pub levels: Vec<LevelInfo>,
}

fn build_load(problem: &AssembledProblem, rhs: Rhs, corr_length: f64) -> Result<(TensorLoad, Option<LowRankFactor>)> {
    match rhs {
        Rhs::Constant => Ok((TensorLoad::constant(problem), None)),
        Rhs::Gaussian => {
            let kernel = GaussianKernel::new(problem.node_coords.clone(), corr_length)?;
            let lr = pivoted_cholesky(&kernel.diagonal(), |i| kernel.row(i), KERNEL_TRACE_TOL, KERNEL_MAX_RANK)?;
            Ok((TensorLoad::from_kernel_factor(problem, &lr)?, Some(lr)))
        }
    }
}

fn reference(
    cfg: &StudyConfig,
    problem: &AssembledProblem,
    h: &Hierarchy,
    lr: Option<&LowRankFactor>,
    sample: &EvaluationSample,
) -> Result<(Vec<f64>, String)> {
    let coords = problem.interior_coords();
    match (&cfg.geometry, lr) {
        (Geometry::Disk, None) => Ok((reference_disk(sample, &coords)?, "analytic disk solution".into())),
        (Geometry::Square, None) => Ok((reference_square(sample, &coords)?, "series solution on the square".into())),
        (Geometry::MeshFile(_), None) => {
            // Constant load is the rank-one factor `1`.
            let one = LowRankFactor {
                columns: vec![vec![1.0; problem.n_nodes()]],
                pivots: vec![],
                trace_error: 0.0,
                initial_trace: 0.0,
                rank_limited: false,
            };
            let r = reference_lowrank(problem, h, &one, sample, AmgCycleConfig::default())?;
            Ok((r, "discrete fine-level solution".into()))
        }
        (_, Some(lr)) => {
            let r = reference_lowrank(problem, h, lr, sample, AmgCycleConfig::default())?;
            Ok((r, format!("low-rank reference, rank {}", lr.rank())))
        }
    }
}

fn row(level: u32, n: usize, c: &CombinedSolution, sample: &EvaluationSample, reference: &[f64]) -> Result<StudyRow> {
    let error = relative_error(&evaluate_combined(c, sample)?, reference)?;
    Ok(StudyRow {
        level,
        n,
        error,
        time: c.solve_time,
        iterations: c.total_iterations(),
        converged: c.all_converged(),
    })
}

fn run_level(cfg: &StudyConfig, level: u32, report: &mut StudyReport) -> Result<()> {
    let mesh = cfg.geometry.mesh(level)?;
    let problem = assemble(&mesh)?;
    let n = problem.n_interior();
    let params = CoarseningParams {
        max_levels: level as usize + 1,
        ..cfg.coarsening.clone()
    };
    let h = build_hierarchy(&problem.stiffness, &params)?;
    let mut info = LevelInfo {
        level,
        sizes: h.level_sizes(),
        operator_complexity: operator_complexity(&h),
        ..Default::default()
    };
    if h.finest_level() < level as usize {
        info.notes.push(format!(
            "coarsening stopped after {} levels instead of {}",
            h.n_levels(),
            level + 1
        ));
    }
    let (load, lr) = build_load(&problem, cfg.rhs, cfg.corr_length)?;
    if let Some(lr) = &lr {
        info.notes.push(format!(
            "kernel rank {} with trace error {:.3e} of {:.3e}{}",
            lr.rank(),
            lr.trace_error,
            lr.initial_trace,
            if lr.rank_limited { " (rank limit hit)" } else { "" }
        ));
    }
    let sample = EvaluationSample::uniform(n, cfg.n_eval, cfg.seed)?;
    let (reference, kind) = reference(cfg, &problem, &h, lr.as_ref(), &sample)?;
    info.reference = kind;
    let opts = SolveOptions {
        tol: cfg.tol,
        max_it: cfg.max_it,
        cycle: AmgCycleConfig::default(),
    };
    if cfg.mode.runs_ct() {
        let c = solve_all(&load, &h, &enumerate_indices(h.finest_level()), opts)?;
        let r = row(level, n, &c, &sample, &reference)?;
        if !r.converged {
            info.notes.push("ct: some subproblems did not converge".into());
        }
        report.ct.push(r);
    }
    if cfg.mode.runs_full() {
        if n > FULL_TP_LIMIT {
            info.notes.push(format!("full_tp skipped: N = {n} exceeds {FULL_TP_LIMIT}"));
        } else {
            let c = solve_full(&load, &h, opts)?;
            let r = row(level, n, &c, &sample, &reference)?;
            if !r.converged {
                info.notes.push("full_tp: solve did not converge".into());
            }
            report.full_tp.push(r);
        }
    }
    report.levels.push(info);
    Ok(())
}

/// Runs every level of the study in memory.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let run = || {
        let mut report = StudyReport {
            config: cfg.clone(),
            ct: vec![],
            full_tp: vec![],
            levels: vec![],
        };
        for &level in &cfg.levels {
            run_level(cfg, level, &mut report)?;
        }
        Ok(report)
    };
    match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?
            .install(run),
        None => run(),
    }
}

impl StudyReport {
    pub fn error_csv(rows: &[StudyRow]) -> String {
        let mut s = String::from("level,error\n");
        for r in rows {
            let _ = writeln!(s, "{},{:.10e}", r.level, r.error);
        }
        s
    }

    pub fn time_csv(rows: &[StudyRow]) -> String {
        let mut s = String::from("N,time\n");
        for r in rows {
            let _ = writeln!(s, "{},{:.6}", r.n, r.time.as_secs_f64());
        }
        s
    }

    /// Parameters, level sizes (coarsest first, one row per `J`) and flags.
    /// Contains no timings, so it is reproducible byte for byte.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.config.params() {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "\n# level sizes, j = 0 (coarsest) .. J");
        for l in &self.levels {
            let _ = writeln!(s, "J={} C_A={:.4} sizes {}", l.level, l.operator_complexity, join(&l.sizes));
        }
        let _ = writeln!(s, "\n# references");
        for l in &self.levels {
            let _ = writeln!(s, "J={} {}", l.level, l.reference);
        }
        let mut iters = String::new();
        for (name, rows) in [("ct", &self.ct), ("full_tp", &self.full_tp)] {
            for r in rows.iter() {
                let _ = writeln!(
                    iters,
                    "{name} J={} iterations {} converged {}",
                    r.level, r.iterations, r.converged
                );
            }
        }
        if !iters.is_empty() {
            let _ = writeln!(s, "\n# solves\n{}", iters.trim_end());
        }
        let notes: Vec<String> = self
            .levels
            .iter()
            .flat_map(|l| l.notes.iter().map(move |n| format!("J={} {n}", l.level)))
            .collect();
        if !notes.is_empty() {
            let _ = writeln!(s, "\n# flags\n{}", notes.join("\n"));
        }
        s
    }

    /// Output files by name, in write order.
    pub fn files(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if self.config.mode.runs_ct() {
            out.insert("ct_error.csv".into(), Self::error_csv(&self.ct));
            out.insert("ct_time.csv".into(), Self::time_csv(&self.ct));
        }
        if self.config.mode.runs_full() {
            out.insert("full_tp_error.csv".into(), Self::error_csv(&self.full_tp));
            out.insert("full_tp_time.csv".into(), Self::time_csv(&self.full_tp));
        }
        out.insert("manifest.txt".into(), self.manifest());
        out
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn all_converged(&self) -> bool {
        self.ct.iter().chain(&self.full_tp).all(|r| r.converged)
    }
}

/// Runs the study and writes its files to `cfg.output_dir`.
pub fn cmd_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let report = run_study(cfg)?;
    report.write(&cfg.output_dir)?;
    Ok(report)
}

/// Writes the mesh of `geometry` at `level`.
pub fn cmd_mesh(geometry: &Geometry, level: u32, out: impl AsRef<Path>) -> Result<Mesh> {
    let mesh = geometry.mesh(level)?;
    mesh.write(out)?;
    Ok(mesh)
}

/// Assembles the mesh and writes `stiffness.mtx`, `mass.mtx`, `load.mtx`
/// (the load mass against all nodes) and `interior_nodes.txt`.
pub fn cmd_assemble(geometry: &Geometry, level: u32, out_dir: impl AsRef<Path>) -> Result<AssembledProblem> {
    let dir = out_dir.as_ref();
    let problem = assemble(&geometry.mesh(level)?)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_market(&problem.stiffness, dir.join("stiffness.mtx"))?;
    write_matrix_market(&problem.mass, dir.join("mass.mtx"))?;
    write_matrix_market(&problem.load_mass, dir.join("load.mtx"))?;
    let mut nodes = String::new();
    for (&node, p) in problem.interior_to_node.iter().zip(problem.interior_coords()) {
        let _ = writeln!(nodes, "{node} {:.17e} {:.17e}", p[0], p[1]);
    }
    let path = dir.join("interior_nodes.txt");
    fs::write(&path, nodes).map_err(|e| Error::io(&path, e))?;
    Ok(problem)
}

/// Builds a hierarchy from a Matrix Market file and exports it to `out_dir`.
pub fn cmd_hierarchy(matrix_path: impl AsRef<Path>, params: &CoarseningParams, out_dir: impl AsRef<Path>) -> Result<Hierarchy> {
    let a = read_matrix_market(matrix_path)?;
    let h = build_hierarchy(&a, params)?;
    h.export(out_dir)?;
    Ok(h)
}
