//! Runs a small study through the library, the same path `amgct study` takes,
//! and prints the CSV and manifest it would write.
//!
//!     cargo run --release --example study -- geometry=square levels=3..4 mode=both

use amg_ct::study::{run_study, StudyConfig, StudyReport};

fn main() -> amg_ct::Result<()> {
    let mut cfg = StudyConfig::default();
    cfg.set("levels", "3..4")?;
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments look like key=value");
        cfg.set(k, v)?;
    }
    let report = run_study(&cfg)?;
    print!("{}", StudyReport::error_csv(&report.ct));
    if !report.full_tp.is_empty() {
        print!("full tensor product\n{}", StudyReport::error_csv(&report.full_tp));
    }
    print!("\n{}", report.manifest());
    Ok(())
}
