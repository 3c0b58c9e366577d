//! Coarsens a stiffness matrix and reports how the levels shrink.
//!
//!     cargo run --release --example amg_hierarchy -- disk 5

use amg_ct::amg::{build_hierarchy, operator_complexity, CoarseningParams};
use amg_ct::fem::assemble;
use amg_ct::study::Geometry;

fn main() -> amg_ct::Result<()> {
    let mut args = std::env::args().skip(1);
    let geometry: Geometry = args.next().as_deref().unwrap_or("disk").parse()?;
    let level: u32 = args.next().map_or(Ok(5), |s| s.parse()).expect("level must be an integer");

    let p = assemble(&geometry.mesh(level)?)?;
    for second_pass in [false, true] {
        let params = CoarseningParams {
            max_levels: level as usize + 1,
            second_pass,
            ..Default::default()
        };
        let h = build_hierarchy(&p.stiffness, &params)?;
        println!("second pass {second_pass}: C_A = {:.3}", operator_complexity(&h));
        for j in (0..h.n_levels()).rev() {
            let a = h.matrix(j);
            let ratio = if j + 1 < h.n_levels() {
                format!("{:.2}", h.size(j + 1) as f64 / a.n_rows() as f64)
            } else {
                "-".into()
            };
            println!(
                "  level {j}: n {:6} nnz {:7} nnz/row {:5.1} shrink {ratio}",
                a.n_rows(),
                a.nnz(),
                a.nnz() as f64 / a.n_rows() as f64
            );
        }
    }
    Ok(())
}
