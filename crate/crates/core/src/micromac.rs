//! The coupled micro-macro solver.
//!
//! The conserved moments are advanced everywhere with the total flux
//! `F(rho) + <v m g_K>`. The perturbation `g_K` lives only where the
//! transition function is positive and is advanced with an upwind transport,
//! an explicit Maxwellian source and an implicit relaxation. One step runs
//! the macroscopic update, a criterion pass over fluid cells, the transport
//! of `g_K`, a criterion pass over kinetic cells and the final projection of
//! `g_K` onto the new transition function.

use serde::{Deserialize, Serialize};

use crate::boundary::{Boundaries, KineticRole};
use crate::error::{Error, Result};
use crate::flux::{interface_flux, macro_flux, spectral_radius, KineticOrder, Limiter};
use crate::indicators::{BreakdownReport, Controller, Pass, StepContext};
use crate::maxwellian::discrete_maxwellian_into;
use crate::reference::{conservative_update, interior_totals, FluxTally, MacroStep, CFL_SAFETY};
use crate::state::{
    collision_frequency, ConservedMoments, GasModel, PairField, SpaceGrid, TransitionField, VelocityGrid, NG,
};

/// How the time variation of `h` enters the perturbation equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Rescale `g_K` by `h^{n+1} / h^n` in a separate step.
    Split,
    /// Keep the `(g_K / h) dh/dt` source inside the update.
    NonSplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledConfig {
    pub scheme: Scheme,
    pub kinetic_order: KineticOrder,
    pub limiter: Limiter,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        Self { scheme: Scheme::Split, kinetic_order: KineticOrder::Second, limiter: Limiter::Minmod }
    }
}

/// Conserved moments and perturbation in storage layout, `h` per interior cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    pub moments: Vec<ConservedMoments>,
    pub gk: PairField,
    pub h: TransitionField,
    pub time: f64,
    pub step: usize,
}

/// `<v m g>` of one cell: `(<v g_F>, <v^2 g_F>, <v (v^2/2 g_F + g_G)>)`.
pub fn kinetic_flux_moments(gf: &[f64], gg: &[f64], vgrid: &VelocityGrid) -> [f64; 3] {
    let mut m = [0.0; 3];
    for ((&v, &a), &b) in vgrid.nodes().iter().zip(gf).zip(gg) {
        m[0] += v * a;
        m[1] += v * v * a;
        m[2] += v * (0.5 * v * v * a + b);
    }
    m.map(|x| x * vgrid.dv())
}

/// Conservative update with the total flux. With `g_K = 0` everywhere this
/// is bit-for-bit the fluid update.
pub fn macro_update(
    moments: &[ConservedMoments],
    gk: &PairField,
    vgrid: &VelocityGrid,
    dt: f64,
    dx: f64,
    alpha: f64,
    limiter: Limiter,
) -> Result<MacroStep> {
    let active = gk.f.iter().chain(&gk.g).any(|&x| x != 0.0);
    let gkm: Option<Vec<[f64; 3]>> = active.then(|| {
        (0..gk.ncells())
            .map(|s| {
                let (f, g) = gk.cell(s);
                kinetic_flux_moments(f, g, vgrid)
            })
            .collect()
    });
    let psi = macro_flux(moments, gkm.as_deref(), alpha, limiter);
    let cells = conservative_update(moments, &psi, dt, dx)?;
    Ok(MacroStep { cells, left_flux: psi[0], right_flux: psi[psi.len() - 1] })
}

/// `g <- g h_new / h_old` on interior cells; zero where either vanishes.
pub fn h_projection_step(gk: &mut PairField, h_old: &[f64], h_new: &[f64]) {
    for (i, (&ho, &hn)) in h_old.iter().zip(h_new).enumerate() {
        let s = NG + i;
        if ho == hn {
            continue;
        }
        if ho == 0.0 || hn == 0.0 {
            gk.clear_cell(s);
            continue;
        }
        let r = hn / ho;
        let (f, g) = gk.cell_mut(s);
        f.iter_mut().chain(g.iter_mut()).for_each(|x| *x *= r);
    }
}

/// Transport-relaxation of the perturbation on cells with `h > 0`; zero
/// elsewhere (ghosts included).
///
/// `eq_old` must be valid on every cell within two of an active one (ghosts
/// filled), `eq_new` on the active cells. `nu` is per interior cell.
#[allow(clippy::too_many_arguments)]
pub fn gk_transport_step(
    g_half: &PairField,
    eq_old: &PairField,
    eq_new: &PairField,
    h: &[f64],
    nu: &[f64],
    dt: f64,
    dx: f64,
    vgrid: &VelocityGrid,
    order: KineticOrder,
) -> PairField {
    let nv = vgrid.len();
    let nodes = vgrid.nodes();
    let mut out = PairField::zeros(g_half.ncells(), nv);
    let flux_at = |field: &[f64], k: usize, j: usize| {
        let i = NG - 1 + k;
        interface_flux(
            field[(i - 1) * nv + j],
            field[i * nv + j],
            field[(i + 1) * nv + j],
            field[(i + 2) * nv + j],
            nodes[j],
            order,
        )
    };
    let r = dt / dx;
    for (i, &hi) in h.iter().enumerate() {
        if hi <= 0.0 {
            continue;
        }
        let s = NG + i;
        let d = 1.0 / (1.0 + dt * nu[i]);
        for (src, old, new, dst) in [
            (&g_half.f, &eq_old.f, &eq_new.f, &mut out.f),
            (&g_half.g, &eq_old.g, &eq_new.g, &mut out.g),
        ] {
            for j in 0..nv {
                let div_g = flux_at(src, i + 1, j) - flux_at(src, i, j);
                let div_e = flux_at(old, i + 1, j) - flux_at(old, i, j);
                let c = s * nv + j;
                dst[c] = (src[c] - r * hi * (div_g + div_e) - hi * (new[c] - old[c])) * d;
            }
        }
    }
    out
}

/// Smallest ratio `(g + h E) / (h (g + E))` over active cells and nodes,
/// capped at one. Nodes where `h (g + E)` is negligible are skipped, and so
/// are nodes where `g + h E` is already non-positive: no step size repairs
/// those, and the positivity monitor reports them.
pub fn positivity_ratio(gk: &PairField, eq: &PairField, h: &[f64]) -> f64 {
    let nv = gk.nv();
    let mut ratio = 1.0_f64;
    for (i, &hi) in h.iter().enumerate() {
        if hi <= 0.0 {
            continue;
        }
        let s = NG + i;
        for (g, e) in [(&gk.f, &eq.f), (&gk.g, &eq.g)] {
            let g = &g[s * nv..(s + 1) * nv];
            let e = &e[s * nv..(s + 1) * nv];
            let scale = e.iter().cloned().fold(0.0, f64::max);
            for (&gj, &ej) in g.iter().zip(e) {
                let num = gj + hi * ej;
                let den = hi * (gj + ej);
                if num <= 0.0 || den <= 1e-14 * hi * scale {
                    continue;
                }
                ratio = ratio.min(num / den);
            }
        }
    }
    ratio.max(0.0)
}

/// `0.9 min(dx / alpha, c ratio dx / max|v|)`, `c` the transport Courant limit.
pub fn coupled_cfl_dt(alpha: f64, dx: f64, vgrid: &VelocityGrid, ratio: f64, order: KineticOrder) -> Result<f64> {
    let dt = CFL_SAFETY * (dx / alpha).min(order.cfl_limit() * ratio * dx / vgrid.max_speed());
    if dt.is_finite() && dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::TimeStepCollapse { dt })
    }
}

/// Lowest normalised values of `E + g_K` and `h E + g_K` seen so far.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityMonitor {
    /// `min (E + g) / max E` over active cells, nodes and both components.
    pub min_f: f64,
    /// `min (h E + g) / (h max E)`.
    pub min_hf: f64,
    /// Step and interior cell where `min_f` was attained.
    pub worst: Option<(usize, usize)>,
}

impl Default for PositivityMonitor {
    fn default() -> Self {
        Self { min_f: f64::INFINITY, min_hf: f64::INFINITY, worst: None }
    }
}

impl PositivityMonitor {
    pub fn observe(&mut self, step: usize, gk: &PairField, eq: &PairField, h: &[f64]) {
        let nv = gk.nv();
        for (i, &hi) in h.iter().enumerate() {
            if hi <= 0.0 {
                continue;
            }
            let s = NG + i;
            for (g, e) in [(&gk.f, &eq.f), (&gk.g, &eq.g)] {
                let g = &g[s * nv..(s + 1) * nv];
                let e = &e[s * nv..(s + 1) * nv];
                let scale = e.iter().cloned().fold(0.0, f64::max);
                for (&gj, &ej) in g.iter().zip(e) {
                    let f = (ej + gj) / scale;
                    if f < self.min_f {
                        self.min_f = f;
                        self.worst = Some((step, i));
                    }
                    self.min_hf = self.min_hf.min((hi * ej + gj) / (hi * scale));
                }
            }
        }
    }

    /// True when no active value fell below `-tol` (relative).
    pub fn holds(&self, tol: f64) -> bool {
        self.min_f >= -tol
    }
}

/// Discrete Maxwellians of selected cells, tagged with the moment step they
/// belong to.
#[derive(Clone, Debug)]
struct EqCache {
    field: PairField,
    stamp: Vec<usize>,
}

impl EqCache {
    fn new(ncells: usize, nv: usize) -> Self {
        Self { field: PairField::zeros(ncells, nv), stamp: vec![usize::MAX; ncells] }
    }

    /// Returns the number of Newton fallbacks.
    fn ensure(&mut self, s: usize, m: &ConservedMoments, stamp: usize, vgrid: &VelocityGrid) -> Result<usize> {
        if self.stamp[s] == stamp {
            return Ok(0);
        }
        let (f, g) = self.field.cell_mut(s);
        let rep = discrete_maxwellian_into(m, vgrid, f, g, s as isize - NG as isize)?;
        self.stamp[s] = stamp;
        Ok(usize::from(!rep.converged))
    }
}

/// The coupled solver and its diagnostics.
#[derive(Clone, Debug)]
pub struct CoupledSolver {
    pub space: SpaceGrid,
    pub vgrid: VelocityGrid,
    pub gas: GasModel,
    pub bc: Boundaries,
    pub config: CoupledConfig,
    pub state: CoupledState,
    pub report: BreakdownReport,
    pub tally: FluxTally,
    pub monitor: PositivityMonitor,
    pub fallbacks: usize,
    eq_cur: EqCache,
    eq_next: EqCache,
}

impl CoupledSolver {
    /// Starts from local equilibrium (`g_K = 0`) with the given `h`
    /// (all fluid when `None`).
    pub fn new(
        space: SpaceGrid,
        vgrid: VelocityGrid,
        gas: GasModel,
        bc: Boundaries,
        config: CoupledConfig,
        interior: &[ConservedMoments],
        h0: Option<&[f64]>,
    ) -> Result<Self> {
        let nx = space.nx;
        if interior.len() != nx {
            return Err(Error::ShapeMismatch { expected: nx, found: interior.len() });
        }
        if bc.has_wall() && !vgrid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let h = match h0 {
            None => TransitionField::fluid(nx),
            Some(v) if v.len() == nx => TransitionField::from_values(v.to_vec()),
            Some(v) => return Err(Error::ShapeMismatch { expected: nx, found: v.len() }),
        };
        let mut moments = vec![ConservedMoments::ZERO; space.n_total()];
        moments[NG..NG + nx].copy_from_slice(interior);
        bc.fill_macro(&mut moments);
        let nv = vgrid.len();
        let ncells = space.n_total();
        Ok(Self {
            space,
            vgrid,
            gas,
            bc,
            config,
            state: CoupledState { moments, gk: PairField::zeros(ncells, nv), h, time: 0.0, step: 0 },
            report: BreakdownReport::new(nx),
            tally: FluxTally::default(),
            monitor: PositivityMonitor::default(),
            fallbacks: 0,
            eq_cur: EqCache::new(ncells, nv),
            eq_next: EqCache::new(ncells, nv),
        })
    }

    pub fn alpha(&self) -> Result<f64> {
        spectral_radius(&self.state.moments, self.gas.gamma)
    }

    /// Coupled CFL step for the current state.
    pub fn stable_dt(&mut self) -> Result<f64> {
        let alpha = self.alpha()?;
        let step = self.state.step;
        for i in 0..self.space.nx {
            if self.state.h.is_active(i) {
                let s = NG + i;
                self.fallbacks += self.eq_cur.ensure(s, &self.state.moments[s], step, &self.vgrid)?;
            }
        }
        let ratio = positivity_ratio(&self.state.gk, &self.eq_cur.field, self.state.h.values());
        coupled_cfl_dt(alpha, self.space.dx, &self.vgrid, ratio, self.config.kinetic_order)
    }

    /// Advances one step of length `dt`. Without a controller `h` is frozen.
    pub fn step(&mut self, dt: f64, mut controller: Option<&mut dyn Controller>) -> Result<()> {
        let nx = self.space.nx;
        let dx = self.space.dx;
        let n = self.state.step;
        let alpha = self.alpha()?;
        let h_old = self.state.h.values().to_vec();

        // macroscopic update
        let ms = macro_update(&self.state.moments, &self.state.gk, &self.vgrid, dt, dx, alpha, self.config.limiter)?;
        let mut new = ms.cells;
        self.bc.fill_macro(&mut new);
        self.tally.record(ms.left_flux, ms.right_flux, dt);

        // criterion on fluid cells
        let mut h_mid = h_old.clone();
        let fluid: Vec<usize> = (0..nx).filter(|&i| h_old[i] == 0.0).collect();
        if let Some(c) = controller.as_deref_mut() {
            let ctx = StepContext {
                step: n,
                time: self.state.time,
                dt,
                dx,
                alpha,
                old: &self.state.moments,
                new: &new,
                gk: &self.state.gk,
                vgrid: &self.vgrid,
                gas: &self.gas,
            };
            c.assign(Pass::Fluid, &fluid, &ctx, &mut h_mid, &mut self.report);
        }

        // perturbation transport
        let mut g_half = self.state.gk.clone();
        let h_tr: &[f64] = match self.config.scheme {
            Scheme::Split => {
                h_projection_step(&mut g_half, &h_old, &h_mid);
                &h_mid
            }
            Scheme::NonSplit => &h_old,
        };
        self.bc.fill_kinetic(&mut g_half, &self.vgrid, KineticRole::Perturbation)?;
        let mut near = vec![false; nx];
        for (i, &hi) in h_tr.iter().enumerate() {
            if hi > 0.0 {
                for nb in near.iter_mut().take((i + 3).min(nx)).skip(i.saturating_sub(2)) {
                    *nb = true;
                }
            }
        }
        let mut nu = vec![0.0; nx];
        for i in 0..nx {
            let s = NG + i;
            if near[i] {
                self.fallbacks += self.eq_cur.ensure(s, &self.state.moments[s], n, &self.vgrid)?;
            }
            if h_tr[i] > 0.0 {
                self.fallbacks += self.eq_next.ensure(s, &new[s], n + 1, &self.vgrid)?;
                nu[i] = collision_frequency(&new[s], &self.gas);
            }
        }
        if near.iter().any(|&b| b) {
            self.bc.fill_kinetic(&mut self.eq_cur.field, &self.vgrid, KineticRole::Distribution)?;
        }
        let mut g_new = gk_transport_step(
            &g_half,
            &self.eq_cur.field,
            &self.eq_next.field,
            h_tr,
            &nu,
            dt,
            dx,
            &self.vgrid,
            self.config.kinetic_order,
        );

        // criterion on kinetic cells
        let mut h_new = h_mid.clone();
        let kinetic: Vec<usize> = (0..nx).filter(|&i| h_old[i] > 0.0).collect();
        if let Some(c) = controller {
            let ctx = StepContext {
                step: n,
                time: self.state.time,
                dt,
                dx,
                alpha,
                old: &self.state.moments,
                new: &new,
                gk: &g_new,
                vgrid: &self.vgrid,
                gas: &self.gas,
            };
            c.assign(Pass::Kinetic, &kinetic, &ctx, &mut h_new, &mut self.report);
        }

        // projection onto h^{n+1}
        match self.config.scheme {
            Scheme::Split => h_projection_step(&mut g_new, &h_mid, &h_new),
            Scheme::NonSplit => {
                let nv = self.vgrid.len();
                for i in 0..nx {
                    let s = NG + i;
                    if h_new[i] == 0.0 || h_old[i] == 0.0 {
                        g_new.clear_cell(s);
                        continue;
                    }
                    if h_new[i] == h_old[i] {
                        continue;
                    }
                    let w = (h_new[i] - h_old[i]) / (h_old[i] * (1.0 + dt * nu[i]));
                    let (f0, g0) = self.state.gk.cell(s);
                    let (f1, g1) = g_new.cell_mut(s);
                    for j in 0..nv {
                        f1[j] += w * f0[j];
                        g1[j] += w * g0[j];
                    }
                }
            }
        }
        self.bc.fill_kinetic(&mut g_new, &self.vgrid, KineticRole::Perturbation)?;
        self.monitor.observe(n + 1, &g_new, &self.eq_next.field, &h_new);

        std::mem::swap(&mut self.eq_cur, &mut self.eq_next);
        self.state = CoupledState {
            moments: new,
            gk: g_new,
            h: TransitionField::from_values(h_new),
            time: self.state.time + dt,
            step: n + 1,
        };
        Ok(())
    }

    pub fn interior(&self) -> &[ConservedMoments] {
        &self.state.moments[NG..NG + self.space.nx]
    }

    pub fn totals(&self) -> [f64; 3] {
        interior_totals(&self.state.moments, self.space.dx)
    }

    /// Signed heat flux `<v (v^2/2 g_F + g_G)>` of every interior cell.
    pub fn heat_flux(&self) -> Vec<f64> {
        (0..self.space.nx)
            .map(|i| {
                let (f, g) = self.state.gk.cell(NG + i);
                kinetic_flux_moments(f, g, &self.vgrid)[2]
            })
            .collect()
    }
}
