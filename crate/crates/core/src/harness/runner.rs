//! Time loop shared by the three backends.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::KineticOrder;
use crate::indicators::{local_knudsen, micro_beta4, BreakdownController, Controller, ForcedController};
use crate::maxwellian::discrete_maxwellian;
use crate::micromac::{coupled_cfl_dt, kinetic_flux_moments, CoupledConfig, CoupledSolver, Scheme};
use crate::reference::{interior_totals, kinetic_dt, EulerSolver, FluxTally, KineticSolver};
use crate::state::{primitive_of, ConservedMoments, CriterionKind, VelocityGrid, NG};

use super::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Euler,
    Kinetic,
    MicroMacro(Scheme),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerChoice {
    Adaptive,
    ForcedFluid,
    ForcedKinetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: BackendKind,
    /// Only used by the micro-macro backend.
    pub controller: ControllerChoice,
    /// Limiter and kinetic order also apply to the reference backends.
    pub coupled: CoupledConfig,
    /// Extra snapshot every `n` steps; 0 keeps only the figure times.
    pub snapshot_every: usize,
    /// Overrides the scenario's final time.
    pub t_final: Option<f64>,
}

impl RunConfig {
    pub fn new(backend: BackendKind) -> Self {
        let mut coupled = CoupledConfig::default();
        if let BackendKind::MicroMacro(s) = backend {
            coupled.scheme = s;
        }
        Self { backend, controller: ControllerChoice::Adaptive, coupled, snapshot_every: 0, t_final: None }
    }
}

/// Per-cell profiles and global diagnostics at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub temperature: Vec<f64>,
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub knudsen: Vec<f64>,
    pub beta4: Vec<f64>,
    pub totals: [f64; 3],
    pub active_fraction: f64,
    /// Mean wall-clock seconds per step since the previous snapshot.
    pub wall_per_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub initial_totals: [f64; 3],
    pub final_totals: [f64; 3],
    /// `|final - initial + net outflow|` over `sum |q| dx + sum |flux| dt`.
    pub conservation_drift: [f64; 3],
    /// Lowest `(E + g_K) / max E` over active cells (micro-macro only).
    pub positivity_min: Option<f64>,
    /// Fraction of (cell, step) pairs with `h > 0`.
    pub mean_active_fraction: f64,
    /// Active fraction averaged in time.
    pub time_avg_active_fraction: f64,
    pub max_active_fraction: f64,
    pub reached_full_kinetic: bool,
    pub wall_clock: f64,
    pub newton_fallbacks: usize,
}

enum Backend {
    Euler(Box<EulerSolver>),
    Kinetic(Box<KineticSolver>),
    Coupled(Box<CoupledSolver>, Box<dyn Controller>),
}

struct Runner {
    backend: Backend,
    vgrid: VelocityGrid,
    order: KineticOrder,
    report_beta: bool,
}

impl Runner {
    fn new(sc: &Scenario, cfg: &RunConfig) -> Result<Self> {
        let vgrid = sc.velocity_grid()?;
        let init = sc.initial_moments();
        let backend = match cfg.backend {
            BackendKind::Euler => {
                let mut s = EulerSolver::new(sc.space, sc.gas, sc.boundaries, &init)?;
                s.limiter = cfg.coupled.limiter;
                Backend::Euler(Box::new(s))
            }
            BackendKind::Kinetic => {
                let mut s = KineticSolver::new(sc.space, vgrid.clone(), sc.gas, sc.boundaries, &init)?;
                s.order = cfg.coupled.kinetic_order;
                Backend::Kinetic(Box::new(s))
            }
            BackendKind::MicroMacro(scheme) => {
                let config = CoupledConfig { scheme, ..cfg.coupled };
                let controller: Box<dyn Controller> = match cfg.controller {
                    ControllerChoice::Adaptive => {
                        sc.thresholds.validate()?;
                        Box::new(BreakdownController::new(sc.thresholds))
                    }
                    ControllerChoice::ForcedFluid => Box::new(ForcedController(0.0)),
                    ControllerChoice::ForcedKinetic => Box::new(ForcedController(1.0)),
                };
                let s = CoupledSolver::new(sc.space, vgrid.clone(), sc.gas, sc.boundaries, config, &init, None)?;
                Backend::Coupled(Box::new(s), controller)
            }
        };
        let report_beta = cfg.controller == ControllerChoice::Adaptive
            && sc.thresholds.criterion == CriterionKind::HeatFluxRatio;
        Ok(Self { backend, vgrid, order: cfg.coupled.kinetic_order, report_beta })
    }

    fn time(&self) -> f64 {
        match &self.backend {
            Backend::Euler(s) => s.time,
            Backend::Kinetic(s) => s.time,
            Backend::Coupled(s, _) => s.state.time,
        }
    }

    fn stable_dt(&mut self) -> Result<f64> {
        match &mut self.backend {
            Backend::Euler(s) => coupled_cfl_dt(s.alpha()?, s.space.dx, &self.vgrid, 1.0, self.order),
            Backend::Kinetic(s) => Ok(kinetic_dt(&s.vgrid, s.space.dx, s.order)),
            Backend::Coupled(s, _) => s.stable_dt(),
        }
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        match &mut self.backend {
            Backend::Euler(s) => s.step(dt),
            Backend::Kinetic(s) => s.step(dt),
            Backend::Coupled(s, c) => s.step(dt, Some(c.as_mut())),
        }
    }

    /// Moments of every storage cell, ghosts filled.
    fn moments(&self) -> Vec<ConservedMoments> {
        match &self.backend {
            Backend::Euler(s) => s.cells.clone(),
            Backend::Kinetic(s) => s.moments(),
            Backend::Coupled(s, _) => s.state.moments.clone(),
        }
    }

    fn h(&self, nx: usize) -> Vec<f64> {
        match &self.backend {
            Backend::Euler(_) => vec![0.0; nx],
            Backend::Kinetic(_) => vec![1.0; nx],
            Backend::Coupled(s, _) => s.state.h.values().to_vec(),
        }
    }

    fn tally(&self) -> FluxTally {
        match &self.backend {
            Backend::Euler(s) => s.tally,
            Backend::Kinetic(s) => s.tally,
            Backend::Coupled(s, _) => s.tally,
        }
    }

    fn fallbacks(&self) -> usize {
        match &self.backend {
            Backend::Euler(_) => 0,
            Backend::Kinetic(s) => s.fallbacks,
            Backend::Coupled(s, _) => s.fallbacks,
        }
    }

    /// Heat flux and `beta_4` of the non-equilibrium part of every interior cell.
    fn heat_flux_and_beta(&self, moments: &[ConservedMoments], floor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let nx = moments.len() - 2 * NG;
        match &self.backend {
            Backend::Euler(_) => Ok((vec![0.0; nx], vec![0.0; nx])),
            Backend::Kinetic(s) => {
                let mut q = Vec::with_capacity(nx);
                let mut b = Vec::with_capacity(nx);
                for (i, m) in moments[NG..NG + nx].iter().enumerate() {
                    let eq = discrete_maxwellian(m, &self.vgrid)?;
                    let (f, g) = s.dist.cell(NG + i);
                    let gf: Vec<f64> = f.iter().zip(&eq.mf).map(|(a, e)| a - e).collect();
                    let gg: Vec<f64> = g.iter().zip(&eq.mg).map(|(a, e)| a - e).collect();
                    q.push(kinetic_flux_moments(&gf, &gg, &self.vgrid)[2]);
                    b.push(micro_beta4(&gf, &gg, m, &self.vgrid, floor));
                }
                Ok((q, b))
            }
            Backend::Coupled(s, _) => {
                let q = s.heat_flux();
                let b = if self.report_beta {
                    s.report.beta4.clone()
                } else {
                    (0..nx)
                        .map(|i| {
                            let (f, g) = s.state.gk.cell(NG + i);
                            micro_beta4(f, g, &moments[NG + i], &self.vgrid, floor)
                        })
                        .collect()
                };
                Ok((q, b))
            }
        }
    }

    fn snapshot(&self, sc: &Scenario, step: usize, wall_per_step: f64) -> Result<Snapshot> {
        let nx = sc.space.nx;
        let m = self.moments();
        let dx = sc.space.dx;
        let mut snap = Snapshot {
            time: self.time(),
            step,
            x: (0..nx).map(|i| sc.space.center(i)).collect(),
            rho: Vec::with_capacity(nx),
            u: Vec::with_capacity(nx),
            temperature: Vec::with_capacity(nx),
            q: Vec::new(),
            h: self.h(nx),
            knudsen: Vec::with_capacity(nx),
            beta4: Vec::new(),
            totals: interior_totals(&m, dx),
            active_fraction: 0.0,
            wall_per_step,
        };
        for i in 0..nx {
            let s = NG + i;
            let p = primitive_of(&m[s], i as isize)?;
            snap.rho.push(p.rho);
            snap.u.push(p.u);
            snap.temperature.push(p.temperature(&sc.gas));
            snap.knudsen.push(local_knudsen(&[m[s - 1], m[s], m[s + 1]], &sc.gas, dx));
        }
        let (q, b) = self.heat_flux_and_beta(&m, sc.thresholds.f3_floor)?;
        snap.q = q;
        snap.beta4 = b;
        snap.active_fraction = snap.h.iter().filter(|&&v| v > 0.0).count() as f64 / nx as f64;
        Ok(snap)
    }
}

/// Runs `sc` to its final time, handing every snapshot to `sink`.
///
/// Snapshots are taken at `t = 0`, at each figure time, every
/// `cfg.snapshot_every` steps, and at the final time.
pub fn run(sc: &Scenario, cfg: &RunConfig, sink: &mut dyn FnMut(&Snapshot) -> Result<()>) -> Result<RunSummary> {
    let t_final = cfg.t_final.unwrap_or(sc.t_final);
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidConfig(format!("final time must be positive, got {t_final}")));
    }
    let mut targets: Vec<f64> = sc.figure_times.iter().copied().filter(|&t| t > 0.0 && t < t_final).collect();
    targets.push(t_final);
    let nx = sc.space.nx;
    let dx = sc.space.dx;

    let mut r = Runner::new(sc, cfg)?;
    let initial = interior_totals(&r.moments(), dx);
    let scale0: [f64; 3] = {
        let m = r.moments();
        let mut s = [0.0; 3];
        for c in &m[NG..NG + nx] {
            s[0] += c.rho.abs() * dx;
            s[1] += c.mom.abs() * dx;
            s[2] += c.en.abs() * dx;
        }
        s
    };
    sink(&r.snapshot(sc, 0, 0.0).map_err(at(0.0, 0))?)?;

    let start = Instant::now();
    let mut since_snap = Instant::now();
    let mut steps_since = 0usize;
    let mut step = 0usize;
    let mut next = 0usize;
    let (mut pair_active, mut time_active, mut max_active) = (0.0, 0.0, 0.0_f64);
    let mut full = false;
    let eps = 1e-12 * t_final;

    while next < targets.len() {
        let time = r.time();
        let target = targets[next];
        let mut dt = r.stable_dt().map_err(at(time, step))?;
        let hit = time + dt >= target - eps;
        if hit {
            dt = target - time;
        }
        let frac = r.h(nx).iter().filter(|&&v| v > 0.0).count() as f64 / nx as f64;
        pair_active += frac;
        time_active += frac * dt;
        max_active = max_active.max(frac);
        full |= frac == 1.0;
        r.step(dt).map_err(at(time, step))?;
        step += 1;
        steps_since += 1;
        if hit {
            next += 1;
        }
        let periodic = cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every);
        if hit || periodic {
            let wall = since_snap.elapsed().as_secs_f64() / steps_since as f64;
            sink(&r.snapshot(sc, step, wall).map_err(at(r.time(), step))?)?;
            since_snap = Instant::now();
            steps_since = 0;
        }
    }
    let final_h = r.h(nx);
    let frac = final_h.iter().filter(|&&v| v > 0.0).count() as f64 / nx as f64;
    max_active = max_active.max(frac);
    full |= frac == 1.0;

    let final_totals = interior_totals(&r.moments(), dx);
    let tally = r.tally();
    let out = tally.net_outflow();
    let drift = [0, 1, 2].map(|c| {
        let scale = scale0[c] + tally.magnitude[c];
        let d = (final_totals[c] - initial[c] + out[c]).abs();
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    });
    let positivity_min = match &r.backend {
        Backend::Coupled(s, _) if s.monitor.min_f.is_finite() => Some(s.monitor.min_f),
        _ => None,
    };
    Ok(RunSummary {
        steps: step,
        final_time: r.time(),
        initial_totals: initial,
        final_totals,
        conservation_drift: drift,
        positivity_min,
        mean_active_fraction: pair_active / step.max(1) as f64,
        time_avg_active_fraction: time_active / r.time(),
        max_active_fraction: max_active,
        reached_full_kinetic: full,
        wall_clock: start.elapsed().as_secs_f64(),
        newton_fallbacks: r.fallbacks(),
    })
}

fn at(time: f64, step: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtStep { time, step, source: Box::new(e) }
}

/// Runs to the end and keeps every snapshot in memory.
pub fn run_collect(sc: &Scenario, cfg: &RunConfig) -> Result<(Vec<Snapshot>, RunSummary)> {
    let mut snaps = Vec::new();
    let summary = run(sc, cfg, &mut |s| {
        snaps.push(s.clone());
        Ok(())
    })?;
    Ok((snaps, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::build_scenario;

    fn small(name: &str) -> Scenario {
        build_scenario(name).unwrap().with_resolution(60, 16).unwrap()
    }

    #[test]
    fn snapshots_land_on_figure_times() {
        let sc = small("sod1");
        let (snaps, sum) = run_collect(&sc, &RunConfig::new(BackendKind::Euler)).unwrap();
        let times: Vec<f64> = snaps.iter().map(|s| s.time).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(times[0], 0.0);
        for (t, f) in times[1..].iter().zip(&sc.figure_times) {
            assert!((t - f).abs() <= 1e-12 * f, "{t} vs {f}");
        }
        assert!((sum.final_time - 0.024).abs() < 1e-14);
        assert!(snaps.iter().all(|s| s.q.iter().all(|&q| q == 0.0)));
        assert!(sum.conservation_drift.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn periodic_snapshots() {
        let sc = small("sod2");
        let mut cfg = RunConfig::new(BackendKind::Euler);
        cfg.snapshot_every = 7;
        cfg.t_final = Some(2e-3);
        let (snaps, sum) = run_collect(&sc, &cfg).unwrap();
        let periodic = snaps.iter().filter(|s| s.step > 0 && s.step % 7 == 0).count();
        assert_eq!(periodic, sum.steps / 7);
        assert_eq!(snaps.last().unwrap().step, sum.steps);
    }

    #[test]
    fn forced_fluid_matches_euler_snapshots() {
        let sc = small("blast1");
        let (a, _) = run_collect(&sc, &RunConfig::new(BackendKind::Euler)).unwrap();
        let mut cfg = RunConfig::new(BackendKind::MicroMacro(Scheme::Split));
        cfg.controller = ControllerChoice::ForcedFluid;
        let (b, _) = run_collect(&sc, &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.time, x.step, &x.rho, &x.u, &x.temperature), (y.time, y.step, &y.rho, &y.u, &y.temperature));
        }
    }

    #[test]
    fn kinetic_run_reports_full_activity() {
        let mut sc = small("sod1");
        sc.figure_times.clear();
        let mut cfg = RunConfig::new(BackendKind::Kinetic);
        cfg.t_final = Some(1e-3);
        let (snaps, sum) = run_collect(&sc, &cfg).unwrap();
        assert!(sum.reached_full_kinetic);
        assert_eq!(sum.mean_active_fraction, 1.0);
        assert!(sum.positivity_min.is_none());
        let last = snaps.last().unwrap();
        assert!(last.q.iter().any(|&q| q != 0.0));
    }

    #[test]
    fn errors_carry_step_context() {
        let mut sc = small("sod1");
        sc.initial.states[0].theta = -1.0;
        let err = run_collect(&sc, &RunConfig::new(BackendKind::Euler)).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 0, .. }), "{err}");
    }

    #[test]
    fn invalid_final_time_is_rejected() {
        let sc = small("sod1");
        let mut cfg = RunConfig::new(BackendKind::Euler);
        cfg.t_final = Some(0.0);
        assert!(matches!(run_collect(&sc, &cfg), Err(Error::InvalidConfig(_))));
    }
}
