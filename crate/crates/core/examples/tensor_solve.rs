//! Solves one anisotropic subproblem `A_j X A_j'ᵀ = F` with the direction-wise
//! multigrid iteration and checks it against a dense Kronecker solve.
//!
//!     cargo run --release --example tensor_solve -- 3 1

use amg_ct::amg::{build_hierarchy, CoarseningParams};
use amg_ct::combination::{subproblem_rhs, tensor_load_constant};
use amg_ct::fem::assemble;
use amg_ct::mesh::generate_disk_mesh;
use amg_ct::tensor::{dense_kron_solve, tensor_solve, AmgCycleConfig, LevelView, TensorProblem};

fn main() -> amg_ct::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().expect("levels must be integers"));
    let (j, jp) = (args.next().unwrap_or(3), args.next().unwrap_or(1));

    let p = assemble(&generate_disk_mesh(4))?;
    let params = CoarseningParams { max_levels: 5, ..Default::default() };
    let h = build_hierarchy(&p.stiffness, &params)?;
    let f = subproblem_rhs(&tensor_load_constant(&p), &h, (j, jp))?;
    let problem = TensorProblem::new(LevelView::new(&h, j)?, LevelView::new(&h, jp)?, f.clone())?;

    let (x, stats) = tensor_solve(&problem, 1e-10, 100, AmgCycleConfig::default())?;
    println!("pair ({j}, {jp}): {} x {} unknowns", h.size(j), h.size(jp));
    for (k, r) in stats.residual_history.iter().enumerate() {
        println!("  iteration {k:2}: relative residual {r:.3e}");
    }
    println!("converged {} in {:?}", stats.converged, stats.wall_time);

    match dense_kron_solve(h.matrix(j), h.matrix(jp), &f) {
        Ok(direct) => {
            let mut diff = x.clone();
            diff.axpy(-1.0, &direct);
            println!("relative difference to dense solve {:.3e}", diff.frobenius_norm() / direct.frobenius_norm());
        }
        Err(e) => println!("dense comparison skipped: {e}"),
    }
    Ok(())
}
