//! Deterministic evolution of the velocity density by the linear collision
//! operator, compared with the Monte Carlo law at the same time.
//!
//! cargo run --release --example boltzmann

use gasrelax::boltzmann::{stationarity_residual, BoltzmannSolver, DensityGrid, SolverConfig};
use gasrelax::params::normal_pdf;
use gasrelax::time_process::MixtureDensity;
use gasrelax::{equilibrium_spec, time_variance, GasParams};

fn main() -> gasrelax::Result<()> {
    let p = GasParams::new(3.0, 1.0, 4.0, 1.0, 2.0)?;
    let f0 = DensityGrid::gaussian(2048, 20.0, p.sigma0_sq())?;
    let solver = BoltzmannSolver::new(&f0, &p, SolverConfig::default())?;

    for t in [0.5, 1.0, 2.0] {
        let (f, report) = solver.evolve(&f0, t, 0.05)?;
        let mix = MixtureDensity::new(&p, t, 1e-14)?;
        println!(
            "t = {t}: mass {:.12}, variance {:.6} (exact {:.6}), L1 to mixture {:.2e}, {} RK4 steps",
            f.mass(),
            f.variance(),
            time_variance(t, &p),
            f.l1_distance(|v| mix.pdf(v)),
            report.steps
        );
    }

    let eq = equilibrium_spec(&p);
    let g = DensityGrid::from_fn(2048, 20.0, |v| normal_pdf(v, eq.variance))?;
    println!("stationarity residual of the equilibrium law: {:.2e}", stationarity_residual(&g, &p)?);
    Ok(())
}
