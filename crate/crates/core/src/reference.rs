//! Baseline solvers: the discrete-velocity BGK model and the Euler system.
//!
//! Both are explicit in transport. The kinetic solver relaxes implicitly
//! toward the discrete Maxwellian of the post-transport moments.

use crate::boundary::{Boundaries, KineticRole};
use crate::error::{Error, Result};
use crate::flux::{kinetic_flux_field, macro_flux, spectral_radius, KineticOrder, Limiter};
use crate::maxwellian::discrete_maxwellian_into;
use crate::state::{
    collision_frequency, moments_of, pair_moments, primitive_of, ConservedMoments, GasModel, PairField, SpaceGrid,
    VelocityGrid, NG,
};

/// Safety factor applied to every CFL bound.
pub const CFL_SAFETY: f64 = 0.9;

/// Time integral of the interface fluxes through the two domain ends.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FluxTally {
    pub left: [f64; 3],
    pub right: [f64; 3],
    /// Running `sum |flux| dt` over both ends, for relative error scales.
    pub magnitude: [f64; 3],
}

impl FluxTally {
    pub fn record(&mut self, left: [f64; 3], right: [f64; 3], dt: f64) {
        for c in 0..3 {
            self.left[c] += dt * left[c];
            self.right[c] += dt * right[c];
            self.magnitude[c] += dt * (left[c].abs() + right[c].abs());
        }
    }

    /// Net amount that left the domain.
    pub fn net_outflow(&self) -> [f64; 3] {
        [0, 1, 2].map(|c| self.right[c] - self.left[c])
    }
}

/// `dx * sum` of the interior cells.
pub fn interior_totals(cells: &[ConservedMoments], dx: f64) -> [f64; 3] {
    let mut t = [0.0; 3];
    for m in &cells[NG..cells.len() - NG] {
        t[0] += m.rho;
        t[1] += m.mom;
        t[2] += m.en;
    }
    t.map(|x| x * dx)
}

/// `rho_i - dt/dx (psi_{i+1/2} - psi_{i-1/2})` on interior cells; ghosts are
/// carried over unchanged.
pub fn conservative_update(
    cells: &[ConservedMoments],
    psi: &[[f64; 3]],
    dt: f64,
    dx: f64,
) -> Result<Vec<ConservedMoments>> {
    let nx = cells.len() - 2 * NG;
    assert_eq!(psi.len(), nx + 1, "one flux per interface expected");
    let mut out = cells.to_vec();
    let r = dt / dx;
    for i in 0..nx {
        let s = NG + i;
        let m = &cells[s];
        let new = ConservedMoments::new(
            m.rho - r * (psi[i + 1][0] - psi[i][0]),
            m.mom - r * (psi[i + 1][1] - psi[i][1]),
            m.en - r * (psi[i + 1][2] - psi[i][2]),
        );
        primitive_of(&new, i as isize)?;
        out[s] = new;
    }
    Ok(out)
}

/// Fluid CFL time step `0.9 dx / alpha`.
pub fn fluid_dt(alpha: f64, dx: f64) -> Result<f64> {
    let dt = CFL_SAFETY * dx / alpha;
    if dt.is_finite() && dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::TimeStepCollapse { dt })
    }
}

/// Result of one conservative step: new cells and the two boundary fluxes.
#[derive(Clone, Debug)]
pub struct MacroStep {
    pub cells: Vec<ConservedMoments>,
    pub left_flux: [f64; 3],
    pub right_flux: [f64; 3],
}

/// One forward-Euler step of the fluid system with ghosts already filled.
pub fn euler_step(cells: &[ConservedMoments], dt: f64, dx: f64, alpha: f64, limiter: Limiter) -> Result<MacroStep> {
    let psi = macro_flux(cells, None, alpha, limiter);
    let out = conservative_update(cells, &psi, dt, dx)?;
    Ok(MacroStep { cells: out, left_flux: psi[0], right_flux: psi[psi.len() - 1] })
}

/// Result of one kinetic step.
#[derive(Clone, Debug)]
pub struct KineticStep {
    pub dist: PairField,
    pub left_flux: [f64; 3],
    pub right_flux: [f64; 3],
    pub fallbacks: usize,
}

/// Transport of every velocity node followed by implicit BGK relaxation.
pub fn kinetic_step(
    dist: &PairField,
    dt: f64,
    dx: f64,
    vgrid: &VelocityGrid,
    gas: &GasModel,
    order: KineticOrder,
) -> Result<KineticStep> {
    let nv = vgrid.len();
    let ncells = dist.ncells();
    let nx = ncells - 2 * NG;
    let phi_f = kinetic_flux_field(&dist.f, vgrid.nodes(), order);
    let phi_g = kinetic_flux_field(&dist.g, vgrid.nodes(), order);
    let mut out = dist.clone();
    let r = dt / dx;
    let mut mf = vec![0.0; nv];
    let mut mg = vec![0.0; nv];
    let mut fallbacks = 0;
    for i in 0..nx {
        let s = NG + i;
        let base = s * nv;
        for j in 0..nv {
            out.f[base + j] = dist.f[base + j] - r * (phi_f[(i + 1) * nv + j] - phi_f[i * nv + j]);
            out.g[base + j] = dist.g[base + j] - r * (phi_g[(i + 1) * nv + j] - phi_g[i * nv + j]);
        }
        let m = moments_of(&out, vgrid, s);
        primitive_of(&m, i as isize)?;
        let rep = discrete_maxwellian_into(&m, vgrid, &mut mf, &mut mg, i as isize)?;
        if !rep.converged {
            fallbacks += 1;
        }
        let k = dt * collision_frequency(&m, gas);
        let d = 1.0 / (1.0 + k);
        for j in 0..nv {
            out.f[base + j] = (out.f[base + j] + k * mf[j]) * d;
            out.g[base + j] = (out.g[base + j] + k * mg[j]) * d;
        }
    }
    let bflux = |k: usize| pair_moments(&phi_f[k * nv..(k + 1) * nv], &phi_g[k * nv..(k + 1) * nv], vgrid);
    Ok(KineticStep { dist: out, left_flux: bflux(0), right_flux: bflux(nx), fallbacks })
}

/// Transport CFL time step `0.9 c dx / max |v|`, `c` the order's Courant limit.
pub fn kinetic_dt(vgrid: &VelocityGrid, dx: f64, order: KineticOrder) -> f64 {
    CFL_SAFETY * order.cfl_limit() * dx / vgrid.max_speed()
}

/// Full-Euler solver state.
#[derive(Clone, Debug)]
pub struct EulerSolver {
    pub space: SpaceGrid,
    pub gas: GasModel,
    pub bc: Boundaries,
    pub limiter: Limiter,
    pub cells: Vec<ConservedMoments>,
    pub time: f64,
    pub steps: usize,
    pub tally: FluxTally,
}

impl EulerSolver {
    /// `interior` holds one state per interior cell.
    pub fn new(space: SpaceGrid, gas: GasModel, bc: Boundaries, interior: &[ConservedMoments]) -> Result<Self> {
        if interior.len() != space.nx {
            return Err(Error::ShapeMismatch { expected: space.nx, found: interior.len() });
        }
        let mut cells = vec![ConservedMoments::ZERO; space.n_total()];
        cells[NG..NG + space.nx].copy_from_slice(interior);
        bc.fill_macro(&mut cells);
        Ok(Self { space, gas, bc, limiter: Limiter::Minmod, cells, time: 0.0, steps: 0, tally: FluxTally::default() })
    }

    pub fn alpha(&self) -> Result<f64> {
        spectral_radius(&self.cells, self.gas.gamma)
    }

    pub fn stable_dt(&self) -> Result<f64> {
        fluid_dt(self.alpha()?, self.space.dx)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let alpha = self.alpha()?;
        let st = euler_step(&self.cells, dt, self.space.dx, alpha, self.limiter)?;
        self.cells = st.cells;
        self.bc.fill_macro(&mut self.cells);
        self.tally.record(st.left_flux, st.right_flux, dt);
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    pub fn interior(&self) -> &[ConservedMoments] {
        &self.cells[NG..NG + self.space.nx]
    }

    pub fn totals(&self) -> [f64; 3] {
        interior_totals(&self.cells, self.space.dx)
    }
}

/// Full-kinetic solver state.
#[derive(Clone, Debug)]
pub struct KineticSolver {
    pub space: SpaceGrid,
    pub vgrid: VelocityGrid,
    pub gas: GasModel,
    pub bc: Boundaries,
    pub order: KineticOrder,
    pub dist: PairField,
    pub time: f64,
    pub steps: usize,
    pub tally: FluxTally,
    pub fallbacks: usize,
}

impl KineticSolver {
    /// Starts from the discrete Maxwellian of each interior state.
    pub fn new(
        space: SpaceGrid,
        vgrid: VelocityGrid,
        gas: GasModel,
        bc: Boundaries,
        interior: &[ConservedMoments],
    ) -> Result<Self> {
        if interior.len() != space.nx {
            return Err(Error::ShapeMismatch { expected: space.nx, found: interior.len() });
        }
        let nv = vgrid.len();
        let mut dist = PairField::zeros(space.n_total(), nv);
        let mut fallbacks = 0;
        for (i, m) in interior.iter().enumerate() {
            let s = NG + i;
            let (f, g) = dist.cell_mut(s);
            if !discrete_maxwellian_into(m, &vgrid, f, g, i as isize)?.converged {
                fallbacks += 1;
            }
        }
        bc.fill_kinetic(&mut dist, &vgrid, KineticRole::Distribution)?;
        Ok(Self {
            space,
            vgrid,
            gas,
            bc,
            order: KineticOrder::Second,
            dist,
            time: 0.0,
            steps: 0,
            tally: FluxTally::default(),
            fallbacks,
        })
    }

    pub fn stable_dt(&self) -> f64 {
        kinetic_dt(&self.vgrid, self.space.dx, self.order)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let st = kinetic_step(&self.dist, dt, self.space.dx, &self.vgrid, &self.gas, self.order)?;
        self.dist = st.dist;
        self.bc.fill_kinetic(&mut self.dist, &self.vgrid, KineticRole::Distribution)?;
        self.tally.record(st.left_flux, st.right_flux, dt);
        self.fallbacks += st.fallbacks;
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Moments of every storage cell (ghosts included).
    pub fn moments(&self) -> Vec<ConservedMoments> {
        (0..self.dist.ncells()).map(|s| moments_of(&self.dist, &self.vgrid, s)).collect()
    }

    pub fn totals(&self) -> [f64; 3] {
        interior_totals(&self.moments(), self.space.dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryKind;
    use crate::maxwellian::discrete_maxwellian;
    use crate::state::Primitive;

    fn neumann() -> Boundaries {
        Boundaries::new(BoundaryKind::Neumann, BoundaryKind::Neumann).unwrap()
    }

    fn sod_interior(nx: usize, gas: &GasModel) -> Vec<ConservedMoments> {
        let l = ConservedMoments::from_primitive(Primitive::from_temperature(2e-5, 0.0, 273.15, gas));
        let r = ConservedMoments::from_primitive(Primitive::from_temperature(0.25e-5, 0.0, 218.4, gas));
        (0..nx).map(|i| if i < nx / 2 { l } else { r }).collect()
    }

    #[test]
    fn uniform_fluid_state_is_exactly_preserved() {
        let gas = GasModel::hydrogen();
        let space = SpaceGrid::new(20, 0.0, 1.0).unwrap();
        let m = ConservedMoments::from_primitive(Primitive::from_temperature(1e-3, 150.0, 300.0, &gas));
        let mut s = EulerSolver::new(space, gas, neumann(), &vec![m; 20]).unwrap();
        for _ in 0..50 {
            let dt = s.stable_dt().unwrap();
            s.step(dt).unwrap();
        }
        assert!(s.interior().iter().all(|c| *c == m));
    }

    #[test]
    fn uniform_maxwellian_is_a_kinetic_fixed_point() {
        let gas = GasModel::hydrogen();
        let space = SpaceGrid::new(12, 0.0, 1.0).unwrap();
        let vgrid = VelocityGrid::symmetric(40, 4.0 * (gas.r * 300.0f64).sqrt()).unwrap();
        let m = ConservedMoments::from_primitive(Primitive::from_temperature(1e-3, 50.0, 300.0, &gas));
        let mut s = KineticSolver::new(space, vgrid, gas, neumann(), &vec![m; 12]).unwrap();
        let start = s.dist.clone();
        let scale = start.max_abs();
        for _ in 0..20 {
            let dt = s.stable_dt();
            s.step(dt).unwrap();
        }
        for (a, b) in s.dist.f.iter().chain(&s.dist.g).zip(start.f.iter().chain(&start.g)) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn stiff_relaxation_returns_the_maxwellian() {
        let gas0 = GasModel::hydrogen();
        let nx = 10;
        let space = SpaceGrid::new(nx, -1.0, 1.0).unwrap();
        let vgrid = VelocityGrid::symmetric(40, 4.0 * (gas0.r * 273.15f64).sqrt()).unwrap();
        let interior = sod_interior(nx, &gas0);
        let s = KineticSolver::new(space, vgrid.clone(), gas0, neumann(), &interior).unwrap();
        let dt = s.stable_dt();
        // pick the viscosity constant so that dt * nu is about 1e12
        let m = interior[0];
        let theta = m.theta();
        let gas = GasModel { c_mu: m.rho * theta.powf(1.0 - gas0.omega) * dt / 1e12, ..gas0 };
        let st = kinetic_step(&s.dist, dt, space.dx, &vgrid, &gas, KineticOrder::Second).unwrap();
        for i in 0..nx {
            let c = NG + i;
            let target = moments_of(&st.dist, &vgrid, c);
            let eq = discrete_maxwellian(&target, &vgrid).unwrap();
            let (f, g) = st.dist.cell(c);
            let sc = eq.mf.iter().cloned().fold(0.0, f64::max);
            let sg = eq.mg.iter().cloned().fold(0.0, f64::max);
            for j in 0..vgrid.len() {
                assert!((f[j] - eq.mf[j]).abs() <= 1e-8 * sc);
                assert!((g[j] - eq.mg[j]).abs() <= 1e-8 * sg);
            }
        }
    }

    #[test]
    fn kinetic_step_balances_totals_with_boundary_fluxes() {
        let gas = GasModel::hydrogen();
        let nx = 30;
        let space = SpaceGrid::new(nx, -20.0, 20.0).unwrap();
        let vgrid = VelocityGrid::symmetric(40, 4.0 * (gas.r * 273.15f64).sqrt()).unwrap();
        let mut s = KineticSolver::new(space, vgrid.clone(), gas, neumann(), &sod_interior(nx, &gas)).unwrap();
        // accumulate totals with plain loops, independent of moments_of
        let oracle = |d: &PairField| {
            let mut t = [0.0; 3];
            for c in NG..NG + nx {
                let (f, g) = d.cell(c);
                for (j, &v) in vgrid.nodes().iter().enumerate() {
                    t[0] += f[j] * vgrid.dv() * space.dx;
                    t[1] += v * f[j] * vgrid.dv() * space.dx;
                    t[2] += (0.5 * v * v * f[j] + g[j]) * vgrid.dv() * space.dx;
                }
            }
            t
        };
        let before = oracle(&s.dist);
        for _ in 0..3 {
            let dt = s.stable_dt();
            s.step(dt).unwrap();
        }
        let after = oracle(&s.dist);
        let out = s.tally.net_outflow();
        for c in 0..3 {
            let scale = before[c].abs().max(before[0] * 273.15 * gas.r);
            assert!((after[c] - before[c] + out[c]).abs() <= 1e-12 * scale, "component {c}");
        }
    }

    #[test]
    fn fluid_step_balances_totals_with_boundary_fluxes() {
        let gas = GasModel::hydrogen();
        let nx = 50;
        let space = SpaceGrid::new(nx, -20.0, 20.0).unwrap();
        let mut s = EulerSolver::new(space, gas, neumann(), &sod_interior(nx, &gas)).unwrap();
        let before = s.totals();
        for _ in 0..40 {
            let dt = s.stable_dt().unwrap();
            s.step(dt).unwrap();
        }
        let after = s.totals();
        let out = s.tally.net_outflow();
        for c in 0..3 {
            let scale = before[c].abs() + s.tally.magnitude[c];
            assert!((after[c] - before[c] + out[c]).abs() <= 1e-13 * scale, "component {c}");
        }
    }

    #[test]
    fn negative_pressure_is_reported_with_its_cell() {
        let cells = vec![ConservedMoments::new(1.0, 0.0, 1.0); 8];
        let mut psi = vec![[0.0; 3]; 5];
        psi[3] = [0.0, 0.0, 100.0];
        match conservative_update(&cells, &psi, 1.0, 1.0) {
            Err(Error::NonPhysicalState { cell, .. }) => assert_eq!(cell, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
