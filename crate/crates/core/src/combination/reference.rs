//! Reference values of `u` at sampled node pairs.

use std::f64::consts::PI;

use super::loads::LowRankFactor;
use super::EvaluationSample;
use crate::amg::Hierarchy;
use crate::error::{Error, Result};
use crate::fem::AssembledProblem;
use crate::krylov::pcg;
use crate::mesh::Point;
use crate::tensor::{AmgCycleConfig, VCycle};

/// Tolerance of the univariate solves behind [`reference_lowrank`].
pub const REFERENCE_TOL: f64 = 1e-10;
/// Odd terms kept in the series for the square.
const SERIES_TERMS: usize = 1000;

fn check_sample(sample: &EvaluationSample, n: usize) -> Result<()> {
    match sample.pairs.iter().flat_map(|&(a, b)| [a, b]).max() {
        Some(m) if m >= n => Err(Error::dims("reference sample index", n, m + 1)),
        _ => Ok(()),
    }
}

/// `-Δv = 1` on the disk of radius 1/2 centred at the origin.
pub fn disk_poisson_constant(p: Point) -> f64 {
    (0.25 - p[0] * p[0] - p[1] * p[1]) / 4.0
}

/// `u(x, y) = v(x) v(y) = (1/16)(|x|² - 1/4)(|y|² - 1/4)`.
pub fn reference_disk(sample: &EvaluationSample, coords: &[Point]) -> Result<Vec<f64>> {
    check_sample(sample, coords.len())?;
    Ok(sample
        .pairs
        .iter()
        .map(|&(a, b)| disk_poisson_constant(coords[a]) * disk_poisson_constant(coords[b]))
        .collect())
}

/// `cosh(a) / cosh(b)` for `|a| ≤ b` without overflow.
fn cosh_ratio(a: f64, b: f64) -> f64 {
    let a = a.abs();
    (a - b).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
}

/// `-Δv = 1` on the unit square with zero boundary values, from the Fourier
/// series in the coordinate whose partner lies nearer the centre line.
pub fn square_poisson_constant(p: Point) -> f64 {
    let (x, y) = if (p[1] - 0.5).abs() <= (p[0] - 0.5).abs() {
        (p[0], p[1])
    } else {
        (p[1], p[0])
    };
    let mut sum = 0.0;
    for k in 0..SERIES_TERMS {
        let m = (2 * k + 1) as f64;
        let c = 4.0 / (PI.powi(3) * m.powi(3));
        sum += c * (m * PI * x).sin() * cosh_ratio(m * PI * (y - 0.5), m * PI / 2.0);
    }
    x * (1.0 - x) / 2.0 - sum
}

/// `u(x, y) = v(x) v(y)` with `v` from [`square_poisson_constant`].
pub fn reference_square(sample: &EvaluationSample, coords: &[Point]) -> Result<Vec<f64>> {
    check_sample(sample, coords.len())?;
    let v: Vec<f64> = coords.iter().map(|&p| square_poisson_constant(p)).collect();
    Ok(sample.pairs.iter().map(|&(a, b)| v[a] * v[b]).collect())
}

/// Solutions `w_r` of `A w_r = M L_r`, one per factor column, by CG
/// preconditioned with one V-cycle of `h`.
pub fn lowrank_solutions(
    problem: &AssembledProblem,
    h: &Hierarchy,
    lr: &LowRankFactor,
    cfg: AmgCycleConfig,
) -> Result<Vec<Vec<f64>>> {
    if h.fine_matrix() != &problem.stiffness {
        return Err(Error::InvalidParameter(
            "hierarchy was not built from this problem's stiffness matrix".into(),
        ));
    }
    let cycle = VCycle::new(h, cfg)?;
    let top = h.finest_level();
    let a = &problem.stiffness;
    lr.columns
        .iter()
        .map(|col| {
            let b = problem.load_mass.spmv(col)?;
            let out = pcg(
                |x, y| a.spmv_into(x, y),
                |r, z| {
                    z.fill(0.0);
                    cycle.apply(top, r, z);
                },
                &b,
                REFERENCE_TOL,
                1000,
            );
            if !out.converged {
                return Err(Error::NotConverged(format!(
                    "reference solve stopped at relative residual {:e}",
                    out.relative_residual
                )));
            }
            Ok(out.x)
        })
        .collect()
}

/// `Σ_r w_r[a] w_r[b]` for the load `Σ_r (M L_r)(M L_r)ᵀ`.
pub fn reference_lowrank(
    problem: &AssembledProblem,
    h: &Hierarchy,
    lr: &LowRankFactor,
    sample: &EvaluationSample,
    cfg: AmgCycleConfig,
) -> Result<Vec<f64>> {
    check_sample(sample, problem.n_interior())?;
    let w = lowrank_solutions(problem, h, lr, cfg)?;
    Ok(sample
        .pairs
        .iter()
        .map(|&(a, b)| w.iter().map(|wr| wr[a] * wr[b]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_reference_values() {
        let coords = vec![[0.0, 0.0], [0.5, 0.0], [0.3, -0.4], [0.1, 0.2]];
        let sample = EvaluationSample {
            pairs: vec![(0, 0), (1, 3), (2, 0), (3, 2), (2, 3)],
            seed: 0,
        };
        let u = reference_disk(&sample, &coords).unwrap();
        assert_eq!(u[0], 0.00390625);
        assert_eq!(u[1], 0.0);
        assert!(u[2].abs() < 1e-18);
        assert_eq!(u[3], u[4]);
        let bad = EvaluationSample {
            pairs: vec![(0, 4)],
            seed: 0,
        };
        assert!(reference_disk(&bad, &coords).is_err());
    }

    #[test]
    fn square_series_solves_poisson() {
        // Boundary values, symmetry and a five-point Laplacian check.
        assert!(square_poisson_constant([0.0, 0.3]).abs() < 1e-12);
        assert!(square_poisson_constant([0.7, 1.0]).abs() < 1e-8);
        let c = square_poisson_constant([0.5, 0.5]);
        // Known centre value of the torsion function of the unit square.
        assert!((c - 0.0736713532).abs() < 1e-8, "{c}");
        let p = [0.3, 0.65];
        let q = [0.65, 0.3];
        assert!((square_poisson_constant(p) - square_poisson_constant(q)).abs() < 1e-12);
        let h = 1e-3;
        let lap = (square_poisson_constant([p[0] + h, p[1]])
            + square_poisson_constant([p[0] - h, p[1]])
            + square_poisson_constant([p[0], p[1] + h])
            + square_poisson_constant([p[0], p[1] - h])
            - 4.0 * square_poisson_constant(p))
            / (h * h);
        assert!((lap + 1.0).abs() < 1e-4, "{lap}");
    }
}
