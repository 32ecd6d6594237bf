//! Solver fixtures shared by the benchmarks in `benches/`.

use kinfluid::harness::Scenario;
use kinfluid::micromac::{CoupledConfig, CoupledSolver};
use kinfluid::reference::{EulerSolver, KineticSolver};
use kinfluid::Result;

pub fn euler(sc: &Scenario) -> Result<EulerSolver> {
    EulerSolver::new(sc.space, sc.gas, sc.boundaries, &sc.initial_moments())
}

pub fn kinetic(sc: &Scenario) -> Result<KineticSolver> {
    KineticSolver::new(sc.space, sc.velocity_grid()?, sc.gas, sc.boundaries, &sc.initial_moments())
}

/// Coupled solver with `h = h0` in every cell.
pub fn coupled(sc: &Scenario, h0: f64) -> Result<CoupledSolver> {
    let h = vec![h0; sc.space.nx];
    CoupledSolver::new(sc.space, sc.velocity_grid()?, sc.gas, sc.boundaries, CoupledConfig::default(), &sc.initial_moments(), Some(&h))
}
