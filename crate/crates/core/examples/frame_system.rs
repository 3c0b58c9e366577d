//! Assembles the multilevel frame system of a disk Poisson problem, solves it
//! by CG and compares the projected solution with a fine-level solve.
//!
//!     cargo run --release --example frame_system -- 4

use amg_ct::amg::{build_hierarchy, CoarseningParams};
use amg_ct::fem::{assemble, load_vector, sample_nodes};
use amg_ct::frame::{build_frame, frame_rhs, frame_solve, project_to_fine};
use amg_ct::krylov::pcg;
use amg_ct::mesh::generate_disk_mesh;

fn main() -> amg_ct::Result<()> {
    let level: u32 = std::env::args().nth(1).map_or(4, |s| s.parse().expect("level must be an integer"));
    let p = assemble(&generate_disk_mesh(level))?;
    let h = build_hierarchy(&p.stiffness, &CoarseningParams { max_levels: level as usize + 1, ..Default::default() })?;
    let fs = build_frame(&h)?;
    println!("levels {:?}, frame size {}", h.level_sizes(), fs.total_size());

    let f = load_vector(&p, &sample_nodes(&p, |_| 1.0))?;
    let rhs = frame_rhs(&h, &f)?;
    let out = frame_solve(&fs, &rhs, 1e-10, 5000)?;
    println!("frame CG: {} iterations, relative residual {:.2e}", out.iterations, out.relative_residual);
    let u = project_to_fine(&h, &out.solution)?;

    // The frame is singular but consistent, so its projection matches the
    // ordinary fine-level solution.
    let a = &p.stiffness;
    let d = a.diagonal();
    let fine = pcg(|x, y| a.spmv_into(x, y), |r, z| z.iter_mut().zip(r).zip(&d).for_each(|((z, r), d)| *z = r / d), &f, 1e-12, 5000);
    let num: f64 = u.iter().zip(&fine.x).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = fine.x.iter().map(|b| b * b).sum();
    println!("relative difference to fine solve {:.2e}", (num / den).sqrt());
    Ok(())
}
