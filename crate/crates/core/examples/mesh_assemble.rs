//! Generates a mesh, assembles P1 matrices and optionally writes them out.
//!
//!     cargo run --example mesh_assemble -- disk 4 [out_dir]

use amg_ct::fem::assemble;
use amg_ct::study::{cmd_assemble, Geometry};

fn main() -> amg_ct::Result<()> {
    let mut args = std::env::args().skip(1);
    let geometry: Geometry = args.next().as_deref().unwrap_or("disk").parse()?;
    let level: u32 = args.next().map_or(Ok(4), |s| s.parse()).expect("level must be an integer");

    let mesh = geometry.mesh(level)?;
    println!(
        "{geometry} J={level}: {} nodes, {} triangles, {} boundary nodes, h_max {:.4}, area {:.6}",
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.boundary_nodes.len(),
        mesh.max_edge_length(),
        mesh.total_area()
    );

    let p = assemble(&mesh)?;
    let n = p.n_interior();
    let ones = vec![1.0; n];
    let mass_total: f64 = p.mass.spmv(&ones)?.iter().sum();
    println!(
        "interior unknowns {n}, stiffness nnz {}, symmetry defect {:.1e}, 1ᵀM1 over the interior {:.6}",
        p.stiffness.nnz(),
        p.stiffness.symmetry_defect(),
        mass_total
    );

    if let Some(dir) = args.next() {
        cmd_assemble(&geometry, level, &dir)?;
        println!("wrote stiffness.mtx, mass.mtx, load.mtx and interior_nodes.txt to {dir}");
    }
    Ok(())
}
