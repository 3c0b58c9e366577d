//! Gaussian covariance load: a pivoted Cholesky factor of the kernel drives
//! both the combination solve and a low-rank discrete reference.
//!
//!     cargo run --release --example gaussian_lowrank -- 4 1.0

use amg_ct::amg::{build_hierarchy, CoarseningParams};
use amg_ct::combination::{
    enumerate_indices, evaluate_combined, pivoted_cholesky, reference_lowrank, relative_error, solve_all,
    EvaluationSample, GaussianKernel, SolveOptions, TensorLoad,
};
use amg_ct::fem::assemble;
use amg_ct::mesh::generate_disk_mesh;
use amg_ct::tensor::AmgCycleConfig;

fn main() -> amg_ct::Result<()> {
    let mut args = std::env::args().skip(1);
    let level: u32 = args.next().map_or(4, |s| s.parse().expect("level must be an integer"));
    let corr: f64 = args.next().map_or(1.0, |s| s.parse().expect("correlation length must be a number"));

    let p = assemble(&generate_disk_mesh(level))?;
    let kernel = GaussianKernel::new(p.node_coords.clone(), corr)?;
    for tol in [1e-2, 1e-4, 1e-8] {
        let lr = pivoted_cholesky(&kernel.diagonal(), |i| kernel.row(i), tol, 400)?;
        println!("trace tolerance {tol:.0e}: rank {:3}, remaining trace {:.2e}", lr.rank(), lr.trace_error);
    }
    let lr = pivoted_cholesky(&kernel.diagonal(), |i| kernel.row(i), 1e-8, 400)?;

    let h = build_hierarchy(&p.stiffness, &CoarseningParams { max_levels: level as usize + 1, ..Default::default() })?;
    let load = TensorLoad::from_kernel_factor(&p, &lr)?;
    let c = solve_all(&load, &h, &enumerate_indices(h.finest_level()), SolveOptions::default())?;
    let sample = EvaluationSample::uniform(p.n_interior(), 1000, 1)?;
    let reference = reference_lowrank(&p, &h, &lr, &sample, AmgCycleConfig::default())?;
    let err = relative_error(&evaluate_combined(&c, &sample)?, &reference)?;
    println!("J={level} ℓ={corr}: combination error against the rank-{} reference {err:.3e}", lr.rank());
    Ok(())
}
