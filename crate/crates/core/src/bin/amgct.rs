use std::path::PathBuf;
use std::process::ExitCode;

use amg_ct::amg::{operator_complexity, CoarseningParams};
use amg_ct::study::{cmd_assemble, cmd_hierarchy, cmd_mesh, cmd_study, Geometry, StudyConfig};
use amg_ct::Error;
use clap::{Args, Parser, Subcommand};

/// Combination-technique solver for tensor-product elliptic problems on
/// algebraic multigrid hierarchies.
#[derive(Parser)]
#[command(name = "amgct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh in the plain text mesh format.
    Mesh {
        #[arg(long)]
        geometry: String,
        #[arg(long = "level", short = 'J')]
        level: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble stiffness, mass and load matrices as Matrix Market files.
    Assemble {
        #[arg(long)]
        geometry: String,
        #[arg(long = "level", short = 'J')]
        level: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coarsen a Matrix Market matrix and export every level.
    Hierarchy {
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        eps_str: Option<f64>,
        #[arg(long)]
        jacobi_passes: Option<usize>,
        #[arg(long)]
        truncation: Option<f64>,
        #[arg(long)]
        max_levels: Option<usize>,
        #[arg(long)]
        second_pass: Option<bool>,
    },
    /// Run a convergence and timing study.
    Study(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    geometry: Option<String>,
    /// Inclusive range such as `3..6`, or a comma list.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    rhs: Option<String>,
    #[arg(long)]
    corr_length: Option<String>,
    #[arg(long)]
    eps_str: Option<String>,
    #[arg(long)]
    jacobi_passes: Option<String>,
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long)]
    second_pass: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_it: Option<String>,
    #[arg(long)]
    n_eval: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Worker threads; 1 gives the sequential baseline.
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn config(&self) -> amg_ct::Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("geometry", &self.geometry),
            ("levels", &self.levels),
            ("rhs", &self.rhs),
            ("corr_length", &self.corr_length),
            ("eps_str", &self.eps_str),
            ("jacobi_passes", &self.jacobi_passes),
            ("truncation", &self.truncation),
            ("second_pass", &self.second_pass),
            ("tol", &self.tol),
            ("max_it", &self.max_it),
            ("n_eval", &self.n_eval),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("jobs", &self.jobs),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Io { .. }
        | Error::InvalidMesh(_)
        | Error::DegenerateTriangle { .. }
        | Error::InvalidMatrix(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::LevelOutOfRange { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> amg_ct::Result<()> {
    match cli.command {
        Command::Mesh { geometry, level, out } => {
            let mesh = cmd_mesh(&geometry.parse::<Geometry>()?, level, &out)?;
            println!(
                "{}: {} nodes, {} triangles",
                out.display(),
                mesh.n_nodes(),
                mesh.n_triangles()
            );
        }
        Command::Assemble { geometry, level, out } => {
            let p = cmd_assemble(&geometry.parse::<Geometry>()?, level, &out)?;
            println!(
                "{}: {} interior unknowns, {} stiffness nonzeros",
                out.display(),
                p.n_interior(),
                p.stiffness.nnz()
            );
        }
        Command::Hierarchy {
            matrix,
            out,
            eps_str,
            jacobi_passes,
            truncation,
            max_levels,
            second_pass,
        } => {
            let d = CoarseningParams::default();
            let params = CoarseningParams {
                eps_str: eps_str.unwrap_or(d.eps_str),
                jacobi_passes: jacobi_passes.unwrap_or(d.jacobi_passes),
                truncation: truncation.unwrap_or(d.truncation),
                max_levels: max_levels.unwrap_or(d.max_levels),
                second_pass: second_pass.unwrap_or(d.second_pass),
                ..d
            };
            let h = cmd_hierarchy(&matrix, &params, &out)?;
            let sizes: Vec<String> = h.sizes().iter().map(usize::to_string).collect();
            println!("sizes {}", sizes.join(" "));
            println!("operator_complexity {:.4}", operator_complexity(&h));
        }
        Command::Study(args) => {
            let cfg = args.config()?;
            let report = cmd_study(&cfg)?;
            for r in &report.ct {
                println!("ct      J={} N={} error {:.4e} time {:.3}s", r.level, r.n, r.error, r.time.as_secs_f64());
            }
            for r in &report.full_tp {
                println!("full_tp J={} N={} error {:.4e} time {:.3}s", r.level, r.n, r.error, r.time.as_secs_f64());
            }
            if !report.all_converged() {
                eprintln!("warning: some solves did not converge; see manifest.txt");
            }
            println!("wrote {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
