//! Combination-technique convergence on the disk with a constant load,
//! measured against the analytic solution.
//!
//!     cargo run --release --example combination_disk -- 3 5

use amg_ct::amg::{build_hierarchy, CoarseningParams};
use amg_ct::combination::{
    enumerate_indices, evaluate_combined, reference_disk, relative_error, solve_all, EvaluationSample, SolveOptions,
    TensorLoad,
};
use amg_ct::fem::assemble;
use amg_ct::mesh::generate_disk_mesh;

fn main() -> amg_ct::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u32>().expect("levels must be integers"));
    let (lo, hi) = (args.next().unwrap_or(3), args.next().unwrap_or(5));
    let mut previous = None;
    for level in lo..=hi {
        let p = assemble(&generate_disk_mesh(level))?;
        let params = CoarseningParams { max_levels: level as usize + 1, ..Default::default() };
        let h = build_hierarchy(&p.stiffness, &params)?;
        let idx = enumerate_indices(h.finest_level());
        let c = solve_all(&TensorLoad::constant(&p), &h, &idx, SolveOptions::default())?;

        let sample = EvaluationSample::uniform(p.n_interior(), 1000, 1)?;
        let approx = evaluate_combined(&c, &sample)?;
        let err = relative_error(&approx, &reference_disk(&sample, &p.interior_coords())?)?;
        let ratio = previous.map_or(String::new(), |e: f64| format!(", ratio {:.2}", e / err));
        println!(
            "J={level} N={:5} terms {:2} iterations {:4} time {:7.3}s error {err:.3e}{ratio}",
            p.n_interior(),
            idx.len(),
            c.total_iterations(),
            c.solve_time.as_secs_f64()
        );
        previous = Some(err);
    }
    Ok(())
}
