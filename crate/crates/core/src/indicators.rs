//! Breakdown indicators and the transition controller.
//!
//! Active cells are judged by the heat flux of their own perturbation.
//! Fluid cells have no perturbation, so theirs is predicted from one step of
//! the perturbation equation with `g^n = 0`, using Maxwellian moments only.

use serde::{Deserialize, Serialize};

use crate::maxwellian::{euler_flux, maxwellian_raw_moments};
use crate::state::{
    collision_frequency, ConservedMoments, CriterionKind, GasModel, PairField, Thresholds, VelocityGrid, NG,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BreakdownSource {
    Microscopic,
    MacroPredicted,
    Knudsen,
    /// h was imposed without evaluating a criterion.
    Imposed,
}

/// Per-interior-cell record of the last criterion evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub lambda4: Vec<f64>,
    pub beta4: Vec<f64>,
    pub knudsen: Vec<f64>,
    pub source: Vec<BreakdownSource>,
}

impl BreakdownReport {
    pub fn new(nx: usize) -> Self {
        Self {
            lambda4: vec![0.0; nx],
            beta4: vec![0.0; nx],
            knudsen: vec![0.0; nx],
            source: vec![BreakdownSource::Imposed; nx],
        }
    }
}

/// `(lambda_1, ..., lambda_4)` of one cell of a perturbation pair.
pub fn micro_lambdas(gf: &[f64], gg: &[f64], grid: &VelocityGrid) -> [f64; 4] {
    let mut l = [0.0; 4];
    let mut l2 = 0.0;
    for ((&v, &a), &b) in grid.nodes().iter().zip(gf).zip(gg) {
        l[0] += a.abs();
        l2 += v * a.abs();
        l[2] += 0.5 * v * v * a.abs() + b.abs();
        l[3] += v * (0.5 * v * v * a + b);
    }
    let dv = grid.dv();
    [l[0] * dv, (l2 * dv).abs(), l[2] * dv, (l[3] * dv).abs()]
}

/// Floored `|F_3(rho)|`.
fn energy_flux_scale(m: &ConservedMoments, floor: f64) -> f64 {
    let f3 = euler_flux(m)[2].abs();
    let theta = m.theta();
    f3.max(floor * m.rho * theta * theta.sqrt())
}

/// `lambda_4 / |F_3|` with the energy-flux denominator floored at
/// `floor * rho * theta^(3/2)`.
pub fn macro_beta4(lambda4: f64, m: &ConservedMoments, floor: f64) -> f64 {
    lambda4 / energy_flux_scale(m, floor)
}

/// Heat-flux ratio from an actual perturbation.
pub fn micro_beta4(gf: &[f64], gg: &[f64], m: &ConservedMoments, grid: &VelocityGrid, floor: f64) -> f64 {
    macro_beta4(micro_lambdas(gf, gg, grid)[3], m, floor)
}

/// `(beta_1, ..., beta_4)`; `beta_2` is `+inf` when the momentum vanishes.
pub fn micro_betas_full(gf: &[f64], gg: &[f64], m: &ConservedMoments, grid: &VelocityGrid, floor: f64) -> [f64; 4] {
    let l = micro_lambdas(gf, gg, grid);
    let b2 = if m.mom == 0.0 { f64::INFINITY } else { l[1] / m.mom.abs() };
    [l[0] / m.rho, b2, l[2] / m.en, macro_beta4(l[3], m, floor)]
}

/// Energy flux `F_3` and its flux `X = <v^2 (v^2/2 M_F + M_G)>` of a Maxwellian.
fn heat_pair(m: &ConservedMoments) -> (f64, f64) {
    let (rho, u, theta) = (m.rho, m.velocity(), m.theta());
    (euler_flux(m)[2], 0.5 * maxwellian_raw_moments(rho, u, theta, 4))
}

/// Predicted `|<v (v^2/2 g_F + g_G)>|` of a fluid cell after one step.
///
/// `stencil` holds cells `i - 1, i, i + 1` at `t^n`, `new_center` is cell `i`
/// at `t^{n+1}`. The Maxwellian transport uses a linear Lax-Friedrichs flux
/// with speed `alpha`.
pub fn predicted_g_moment(
    stencil: &[ConservedMoments; 3],
    new_center: &ConservedMoments,
    dt: f64,
    dx: f64,
    nu: f64,
    alpha: f64,
) -> f64 {
    let [l, c, r] = stencil.map(|m| heat_pair(&m));
    let (f3_new, _) = heat_pair(new_center);
    let lf = |a: (f64, f64), b: (f64, f64)| 0.5 * (a.1 + b.1) - 0.5 * alpha * (b.0 - a.0);
    let div = lf(c, r) - lf(l, c);
    let k = 1.0 + dt * nu;
    let time_part = (f3_new - c.0) / k;
    let flux_part = dt * div / (k * dx);
    (-time_part - flux_part).abs()
}

/// Local Knudsen number `lambda_path / L` of the centre of a three-cell
/// stencil, with Bird's gradient length built from central differences.
///
/// The momentum scale is `max(|rho u|, rho c)` so that `L` stays positive
/// where the velocity changes sign.
pub fn local_knudsen(stencil: &[ConservedMoments; 3], gas: &GasModel, dx: f64) -> f64 {
    let [l, c, r] = stencil;
    let mom_scale = c.mom.abs().max(c.rho * (gas.gamma * c.theta()).sqrt());
    let mut length = f64::INFINITY;
    for (q, ql, qr) in [(c.rho, l.rho, r.rho), (mom_scale, l.mom, r.mom), (c.en, l.en, r.en)] {
        let grad = (qr - ql) / (2.0 * dx);
        if grad != 0.0 {
            length = length.min((q / grad).abs());
        }
    }
    if length.is_infinite() {
        return 0.0;
    }
    mean_free_path(c, gas) / length
}

/// Hard-sphere mean free path `k T / (sqrt 2 pi p sigma^2)`.
pub fn mean_free_path(m: &ConservedMoments, gas: &GasModel) -> f64 {
    let theta = m.theta();
    let t = theta / gas.r;
    let p = m.rho * theta;
    gas.k_b * t / (std::f64::consts::SQRT_2 * std::f64::consts::PI * p * gas.sigma_c * gas.sigma_c)
}

/// Linear ramp from `lo` (h = 0) to `hi` (h = 1), clamped.
pub fn h_of_beta(beta: f64, lo: f64, hi: f64) -> f64 {
    ((beta - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Which cell class a controller pass evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pass {
    /// Cells with `h^n = 0`, judged from macroscopic data.
    Fluid,
    /// Cells with `h^n > 0`, judged from the updated perturbation.
    Kinetic,
}

/// Read-only data available to a controller during a step. Cell arrays are
/// in storage layout (ghosts included).
pub struct StepContext<'a> {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub dx: f64,
    pub alpha: f64,
    pub old: &'a [ConservedMoments],
    pub new: &'a [ConservedMoments],
    /// Perturbation after the transport step; meaningful in the kinetic pass.
    pub gk: &'a PairField,
    pub vgrid: &'a VelocityGrid,
    pub gas: &'a GasModel,
}

/// Assigns `h^{n+1}` to one class of cells.
pub trait Controller {
    /// `cells` are interior indices; write `h[i]` (and the report) for each.
    fn assign(&mut self, pass: Pass, cells: &[usize], ctx: &StepContext<'_>, h: &mut [f64], report: &mut BreakdownReport);
}

/// The adaptive controller: heat-flux ratio or local Knudsen number.
#[derive(Clone, Debug)]
pub struct BreakdownController {
    pub thresholds: Thresholds,
}

impl BreakdownController {
    pub fn new(thresholds: Thresholds) -> Self {
        Self { thresholds }
    }
}

impl Controller for BreakdownController {
    fn assign(&mut self, pass: Pass, cells: &[usize], ctx: &StepContext<'_>, h: &mut [f64], report: &mut BreakdownReport) {
        let th = &self.thresholds;
        for &i in cells {
            let s = NG + i;
            let stencil_new = [ctx.new[s - 1], ctx.new[s], ctx.new[s + 1]];
            let kn = local_knudsen(&stencil_new, ctx.gas, ctx.dx);
            report.knudsen[i] = kn;
            match th.criterion {
                CriterionKind::LocalKnudsen => {
                    report.source[i] = BreakdownSource::Knudsen;
                    h[i] = h_of_beta(kn, th.eps_star, th.eps_thr);
                }
                CriterionKind::HeatFluxRatio => {
                    let (lambda, beta, src) = match pass {
                        Pass::Fluid => {
                            let stencil = [ctx.old[s - 1], ctx.old[s], ctx.old[s + 1]];
                            let nu = collision_frequency(&ctx.new[s], ctx.gas);
                            let l = predicted_g_moment(&stencil, &ctx.new[s], ctx.dt, ctx.dx, nu, ctx.alpha);
                            (l, macro_beta4(l, &ctx.old[s], th.f3_floor), BreakdownSource::MacroPredicted)
                        }
                        Pass::Kinetic => {
                            let (gf, gg) = ctx.gk.cell(s);
                            let l = micro_lambdas(gf, gg, ctx.vgrid)[3];
                            (l, macro_beta4(l, &ctx.new[s], th.f3_floor), BreakdownSource::Microscopic)
                        }
                    };
                    report.lambda4[i] = lambda;
                    report.beta4[i] = beta;
                    report.source[i] = src;
                    h[i] = h_of_beta(beta, th.beta_star, th.beta_thr);
                }
            }
        }
    }
}

/// Imposes a constant `h` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ForcedController(pub f64);

impl Controller for ForcedController {
    fn assign(&mut self, _: Pass, cells: &[usize], _: &StepContext<'_>, h: &mut [f64], report: &mut BreakdownReport) {
        for &i in cells {
            h[i] = self.0.clamp(0.0, 1.0);
            report.source[i] = BreakdownSource::Imposed;
        }
    }
}

/// Imposes `h = script(step, pass, cell)`.
pub struct ScriptedController<F>(pub F);

impl<F: FnMut(usize, Pass, usize) -> f64> Controller for ScriptedController<F> {
    fn assign(&mut self, pass: Pass, cells: &[usize], ctx: &StepContext<'_>, h: &mut [f64], report: &mut BreakdownReport) {
        for &i in cells {
            h[i] = (self.0)(ctx.step, pass, i).clamp(0.0, 1.0);
            report.source[i] = BreakdownSource::Imposed;
        }
    }
}
