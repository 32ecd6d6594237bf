//! Continuous and discrete (entropy-minimized) Maxwellians of the reduced model.
//!
//! The discrete equilibrium lives in the exponential family
//! `MF_j = exp(a0 + a1 v_j + a2 v_j^2)`, `MG_j = theta* MF_j` with
//! `theta* = -1 / (2 a2)`. Its three discrete moments are fitted to the target
//! by Newton's method, so relaxation towards it is exactly conservative on the
//! velocity grid.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::state::{primitive_of, ConservedMoments, VelocityGrid};

/// Relative moment residual accepted by the Newton solve.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Below this the iteration stops immediately; between it and `NEWTON_TOL` the
/// solve stops as soon as progress stalls at the rounding floor.
const NEWTON_TARGET: f64 = 1e-14;

/// Outcome of one discrete Maxwellian construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonReport {
    /// Multipliers `(a0, a1, a2)` of the dimensional exponential.
    pub lagrange: [f64; 3],
    /// Effective temperature `theta*` slaving `MG` to `MF`.
    pub theta_star: f64,
    pub iterations: usize,
    /// Max-norm of the normalized moment residual.
    pub residual: f64,
    /// `false` when Newton failed and the rescaled continuous fallback was used.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMaxwellian {
    pub mf: Vec<f64>,
    pub mg: Vec<f64>,
    pub report: NewtonReport,
}

impl DiscreteMaxwellian {
    pub fn lagrange(&self) -> [f64; 3] {
        self.report.lagrange
    }
}

/// Pointwise samples `MF_j = rho / sqrt(2 pi theta) exp(-(v_j - u)^2 / (2 theta))`,
/// `MG_j = theta MF_j`.
pub fn continuous_maxwellian(rho: f64, u: f64, theta: f64, grid: &VelocityGrid) -> (Vec<f64>, Vec<f64>) {
    let norm = rho / (2.0 * std::f64::consts::PI * theta).sqrt();
    let mf: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&v| norm * (-(v - u) * (v - u) / (2.0 * theta)).exp())
        .collect();
    let mg = mf.iter().map(|&x| theta * x).collect();
    (mf, mg)
}

/// Entropy-minimized discrete Maxwellian matching `target` on `grid`.
pub fn discrete_maxwellian(target: &ConservedMoments, grid: &VelocityGrid) -> Result<DiscreteMaxwellian> {
    let mut mf = vec![0.0; grid.len()];
    let mut mg = vec![0.0; grid.len()];
    let report = discrete_maxwellian_into(target, grid, &mut mf, &mut mg, -1)?;
    Ok(DiscreteMaxwellian { mf, mg, report })
}

/// Sums `W_k = sum_j w_j^k e_j dw` for `k = 0..=4` in normalized velocity.
struct Sums {
    w: [f64; 5],
}

fn exponent_sums(beta: &[f64; 3], w_nodes: &[f64], dw: f64, e: &mut [f64]) -> Sums {
    let mut w = [0.0; 5];
    for (ej, &x) in e.iter_mut().zip(w_nodes) {
        let val = (beta[0] + beta[1] * x + beta[2] * x * x).exp();
        *ej = val;
        let x2 = x * x;
        w[0] += val;
        w[1] += x * val;
        w[2] += x2 * val;
        w[3] += x2 * x * val;
        w[4] += x2 * x2 * val;
    }
    for wk in &mut w {
        *wk *= dw;
    }
    Sums { w }
}

/// Normalized residual: mass, momentum about `u`, and energy in units of theta.
fn residual(beta: &[f64; 3], s: &Sums) -> [f64; 3] {
    let ts = -0.5 / beta[2];
    [
        s.w[0] - 1.0,
        s.w[1],
        0.5 * s.w[2] + ts * s.w[0] - 1.5,
    ]
}

fn max_norm(r: &[f64; 3]) -> f64 {
    r.iter().fold(0.0_f64, |m, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY })
}

/// Allocation-free variant writing into `mf`, `mg`; `cell` tags errors.
///
/// The unknowns are solved in the normalized velocity `w = (v - u) / sqrt(theta)`
/// of the target state, which keeps the Jacobian well scaled for dimensional
/// inputs. If Newton does not converge within [`NEWTON_MAX_ITER`] iterations the
/// continuous Maxwellian is sampled and rescaled so mass and energy match
/// exactly, and the report is flagged as not converged.
pub fn discrete_maxwellian_into(
    target: &ConservedMoments,
    grid: &VelocityGrid,
    mf: &mut [f64],
    mg: &mut [f64],
    cell: isize,
) -> Result<NewtonReport> {
    let n = grid.len();
    if mf.len() != n || mg.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: mf.len().min(mg.len()),
        });
    }
    let p = primitive_of(target, cell)?;
    let c = p.theta.sqrt();
    let dw = grid.dv() / c;
    // Stack buffers would be nicer but grids are small; reuse mf for e_j.
    let w_nodes: Vec<f64> = grid.nodes().iter().map(|&v| (v - p.u) / c).collect();

    let mut beta = [-0.5 * (2.0 * std::f64::consts::PI).ln(), 0.0, -0.5];
    let mut sums = exponent_sums(&beta, &w_nodes, dw, mf);
    let mut r = residual(&beta, &sums);
    let mut rnorm = max_norm(&r);
    let mut iterations = 0;
    let mut converged = rnorm <= NEWTON_TARGET;

    while !converged && iterations < NEWTON_MAX_ITER {
        iterations += 1;
        let w = &sums.w;
        let ts = -0.5 / beta[2];
        let jac = Matrix3::new(
            w[0],
            w[1],
            w[2],
            w[1],
            w[2],
            w[3],
            0.5 * w[2] + ts * w[0],
            0.5 * w[3] + ts * w[1],
            0.5 * w[4] + ts * w[2] + 2.0 * ts * ts * w[0],
        );
        let Some(step) = jac.lu().solve(&Vector3::new(-r[0], -r[1], -r[2])) else {
            break;
        };
        // Backtracking on the residual max-norm; a2 must stay negative.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [beta[0] + t * step[0], beta[1] + t * step[1], beta[2] + t * step[2]];
            if cand[2] < 0.0 && cand.iter().all(|x| x.is_finite()) {
                let cs = exponent_sums(&cand, &w_nodes, dw, mf);
                let cr = residual(&cand, &cs);
                let cn = max_norm(&cr);
                if cn < rnorm {
                    beta = cand;
                    sums = cs;
                    r = cr;
                    rnorm = cn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if rnorm <= NEWTON_TARGET {
            converged = true;
        } else if !accepted {
            // Stalled: fine at the rounding floor, otherwise a failure.
            converged = rnorm <= NEWTON_TOL;
            break;
        }
    }
    if !converged && rnorm <= NEWTON_TOL {
        converged = true;
    }

    if converged {
        // mf currently holds e_j for the last evaluated candidate; recompute to
        // be safe against a rejected trial overwriting it.
        exponent_sums(&beta, &w_nodes, dw, mf);
        let scale = p.rho / c;
        let theta_star = -0.5 * p.theta / beta[2];
        for (f, g) in mf.iter_mut().zip(mg.iter_mut()) {
            *f *= scale;
            *g = theta_star * *f;
        }
        let a2 = beta[2] / p.theta;
        let a1 = beta[1] / c - 2.0 * beta[2] * p.u / p.theta;
        let a0 = scale.ln() + beta[0] - beta[1] * p.u / c + beta[2] * p.u * p.u / p.theta;
        return Ok(NewtonReport {
            lagrange: [a0, a1, a2],
            theta_star,
            iterations,
            residual: rnorm,
            converged: true,
        });
    }

    // Fallback: sampled continuous Maxwellian, mass and energy restored exactly.
    let (cf, _) = continuous_maxwellian(p.rho, p.u, p.theta, grid);
    let mass: f64 = cf.iter().sum::<f64>() * grid.dv();
    if !(mass > 0.0) {
        return Err(Error::NonPhysicalState {
            cell,
            rho: p.rho,
            theta: p.theta,
        });
    }
    let scale = p.rho / mass;
    let mut kinetic = 0.0;
    for ((f, &src), &v) in mf.iter_mut().zip(&cf).zip(grid.nodes()) {
        *f = src * scale;
        kinetic += 0.5 * v * v * *f;
    }
    kinetic *= grid.dv();
    let theta_star = (target.en - kinetic) / p.rho;
    if !(theta_star > 0.0) {
        return Err(Error::NonPhysicalState {
            cell,
            rho: p.rho,
            theta: theta_star,
        });
    }
    for (g, &f) in mg.iter_mut().zip(mf.iter()) {
        *g = theta_star * f;
    }
    Ok(NewtonReport {
        lagrange: [
            (p.rho / (2.0 * std::f64::consts::PI * p.theta).sqrt()).ln() - p.u * p.u / (2.0 * p.theta),
            p.u / p.theta,
            -0.5 / p.theta,
        ],
        theta_star,
        iterations,
        residual: rnorm,
        converged: false,
    })
}

/// Relative moment mismatch between `(mf, mg)` and `target`: mass over `rho`,
/// momentum over `rho (|u| + sqrt(theta))`, energy over `E`.
pub fn moment_mismatch(mf: &[f64], mg: &[f64], target: &ConservedMoments, grid: &VelocityGrid) -> f64 {
    let m = crate::state::pair_moments(mf, mg, grid);
    let u = target.velocity();
    let theta = target.theta();
    let mom_scale = target.rho * (u.abs() + theta.sqrt());
    let e0 = ((m[0] - target.rho) / target.rho).abs();
    let e1 = ((m[1] - target.mom) / mom_scale).abs();
    let e2 = ((m[2] - target.en) / target.en).abs();
    e0.max(e1).max(e2)
}

/// Analytic equilibrium flux `(rho u, rho u^2 + rho theta, rho u (u^2/2 + 5 theta/2))`.
pub fn euler_flux(m: &ConservedMoments) -> [f64; 3] {
    let u = m.mom / m.rho;
    let theta = m.theta();
    [
        m.mom,
        m.mom * u + m.rho * theta,
        m.mom * (0.5 * u * u + 2.5 * theta),
    ]
}

/// Closed-form Maxwellian moments with the internal degrees of freedom folded
/// in: order 1 is `<v M>`, order `k >= 2` is `<v^{k-2} |v|^2 M>` where
/// `|v|^2 M` stands for `v^2 M_F + 2 M_G` in the reduced model.
///
/// Panics if `order` is not in `1..=4`.
pub fn maxwellian_raw_moments(rho: f64, u: f64, theta: f64, order: u8) -> f64 {
    match order {
        1 => rho * u,
        2 => rho * (u * u + 3.0 * theta),
        3 => rho * u * (u * u + 5.0 * theta),
        4 => rho * (u.powi(4) + 8.0 * u * u * theta + 5.0 * theta * theta),
        _ => panic!("maxwellian_raw_moments: order {order} not in 1..=4"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{pair_moments, GasModel, Primitive};

    fn fine_grid(u: f64, half_width: f64, n: usize) -> VelocityGrid {
        let dv = 2.0 * half_width / (n - 1) as f64;
        VelocityGrid::new(n, u - half_width, dv).unwrap()
    }

    #[test]
    fn continuous_is_even_on_symmetric_grid() {
        let grid = VelocityGrid::symmetric(40, 6.0).unwrap();
        let (mf, mg) = continuous_maxwellian(1.0, 0.0, 1.0, &grid);
        for j in 0..40 {
            assert_eq!(mf[j], mf[grid.mirror(j)]);
            assert_eq!(mg[j], mf[j]);
        }
    }

    #[test]
    fn continuous_peaks_at_drift_velocity() {
        let gas = GasModel::hydrogen();
        let theta = gas.r * 1e4;
        let grid = VelocityGrid::symmetric(40, 4.0 * (gas.r * 10064.0_f64).sqrt()).unwrap();
        let (mf, _) = continuous_maxwellian(1e-3, 200.0, theta, &grid);
        let peak = (0..40).max_by(|&a, &b| mf[a].total_cmp(&mf[b])).unwrap();
        let nearest = (0..40)
            .min_by(|&a, &b| (grid.nodes()[a] - 200.0).abs().total_cmp(&(grid.nodes()[b] - 200.0).abs()))
            .unwrap();
        assert_eq!(peak, nearest);
    }

    #[test]
    fn continuous_mass_quadrature() {
        // bounds 4 sqrt(R theta) are many thermal widths for dimensional theta
        let gas = GasModel::hydrogen();
        let theta = gas.r * 273.0;
        let vb = 4.0 * (gas.r * theta).sqrt();
        let grid = VelocityGrid::symmetric(400, vb).unwrap();
        let (mf, _) = continuous_maxwellian(1e-6, -900.0, theta, &grid);
        let mass: f64 = mf.iter().sum::<f64>() * grid.dv();
        assert!(((mass - 1e-6) / 1e-6).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn rest_state_on_symmetric_grid_has_no_drift_multiplier() {
        let grid = VelocityGrid::symmetric(40, 5.0).unwrap();
        let target = ConservedMoments::from_primitive(Primitive::new(1.0, 0.0, 1.0));
        let dm = discrete_maxwellian(&target, &grid).unwrap();
        assert!(dm.report.converged);
        assert!(dm.lagrange()[1].abs() < 1e-12, "{}", dm.lagrange()[1]);
    }

    #[test]
    fn shock_inflow_state_matches_to_tolerance() {
        let gas = GasModel::hydrogen();
        let t_w = 273.0 + 900.0 * 900.0 / (3.0 * gas.r);
        let grid = VelocityGrid::symmetric(40, 4.0 * (gas.r * t_w).sqrt()).unwrap();
        let target = ConservedMoments::from_primitive(Primitive::from_temperature(1e-6, -900.0, 273.0, &gas));
        let dm = discrete_maxwellian(&target, &grid).unwrap();
        assert!(dm.report.converged);
        assert!(moment_mismatch(&dm.mf, &dm.mg, &target, &grid) <= 1e-12);
        assert!(dm.mf.iter().all(|&x| x > 0.0));
        for (f, g) in dm.mf.iter().zip(&dm.mg) {
            assert!((g - dm.report.theta_star * f).abs() <= 1e-15 * g.abs());
        }
    }

    #[test]
    fn wide_grid_recovers_continuous_multipliers() {
        let (rho, u, theta) = (2.0, 0.7, 1.3_f64);
        let grid = fine_grid(u, 6.0 * theta.sqrt(), 60);
        let dm = discrete_maxwellian(&ConservedMoments::from_primitive(Primitive::new(rho, u, theta)), &grid).unwrap();
        let expected = [
            (rho / (2.0 * std::f64::consts::PI * theta).sqrt()).ln() - u * u / (2.0 * theta),
            u / theta,
            -0.5 / theta,
        ];
        for (a, e) in dm.lagrange().iter().zip(expected) {
            assert!((a - e).abs() <= 1e-6 * e.abs().max(1.0), "{a} vs {e}");
        }
    }

    #[test]
    fn under_resolved_cold_state_still_converges() {
        // blast-wave cold gas: thermal speed about a third of the grid step
        let gas = GasModel::hydrogen();
        let t_w = 1e4 + 200.0 * 200.0 / (3.0 * gas.r);
        let grid = VelocityGrid::symmetric(40, 4.0 * (gas.r * t_w).sqrt()).unwrap();
        let target = ConservedMoments::from_primitive(Primitive::from_temperature(1e-3, 0.0, 50.0, &gas));
        let dm = discrete_maxwellian(&target, &grid).unwrap();
        assert!(dm.report.converged, "{:?}", dm.report);
        assert!(dm.report.iterations <= NEWTON_MAX_ITER);
        assert!(moment_mismatch(&dm.mf, &dm.mg, &target, &grid) <= 1e-12);
    }

    #[test]
    fn unreachable_state_falls_back_and_flags() {
        // drift far outside the grid: no exponential fit, fallback is used
        let grid = VelocityGrid::symmetric(10, 1.0).unwrap();
        let target = ConservedMoments::from_primitive(Primitive::new(1.0, 5.0, 0.02));
        let dm = discrete_maxwellian(&target, &grid).unwrap();
        assert!(!dm.report.converged);
        let m = pair_moments(&dm.mf, &dm.mg, &grid);
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!((m[2] - target.en).abs() < 1e-12 * target.en);
        assert!(dm.report.theta_star > 0.0);
    }

    #[test]
    fn euler_flux_rest_state() {
        let m = ConservedMoments::from_primitive(Primitive::new(3.0, 0.0, 2.0));
        assert_eq!(euler_flux(&m), [0.0, 6.0, 0.0]);
        let gas = GasModel::hydrogen();
        let sod = ConservedMoments::from_primitive(Primitive::from_temperature(2e-5, 0.0, 273.15, &gas));
        let f = euler_flux(&sod);
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 2e-5 * gas.r * 273.15).abs() <= 1e-14 * f[1]);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn euler_flux_matches_discrete_moments() {
        let (rho, u, theta) = (0.8, -0.4, 0.9);
        let grid = fine_grid(0.0, 12.0, 200);
        let m = ConservedMoments::from_primitive(Primitive::new(rho, u, theta));
        let dm = discrete_maxwellian(&m, &grid).unwrap();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (j, &v) in grid.nodes().iter().enumerate() {
            a += v * dm.mf[j];
            b += v * v * dm.mf[j];
            c += v * (0.5 * v * v * dm.mf[j] + dm.mg[j]);
        }
        let dv = grid.dv();
        let f = euler_flux(&m);
        for (x, y) in [a * dv, b * dv, c * dv].iter().zip(f) {
            assert!((x - y).abs() <= 1e-8 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn raw_moments_closed_forms() {
        assert_eq!(maxwellian_raw_moments(2.0, 0.0, 1.5, 3), 0.0);
        assert_eq!(maxwellian_raw_moments(2.0, 0.0, 1.5, 4), 5.0 * 2.0 * 1.5 * 1.5);
    }

    #[test]
    fn raw_moments_match_reduced_pair_quadrature() {
        let (rho, u, theta) = (1.7, 0.55, 0.8);
        let grid = fine_grid(u, 14.0, 600);
        let (mf, mg) = continuous_maxwellian(rho, u, theta, &grid);
        let dv = grid.dv();
        let mut q = [0.0_f64; 4];
        for (j, &v) in grid.nodes().iter().enumerate() {
            let energy2 = v * v * mf[j] + 2.0 * mg[j];
            q[0] += v * mf[j] * dv;
            q[1] += energy2 * dv;
            q[2] += v * energy2 * dv;
            q[3] += v * v * energy2 * dv;
        }
        for order in 1..=4u8 {
            let exact = maxwellian_raw_moments(rho, u, theta, order);
            let got = q[order as usize - 1];
            assert!((got - exact).abs() <= 1e-8 * exact.abs(), "order {order}: {got} vs {exact}");
        }
    }

    #[test]
    #[should_panic]
    fn raw_moments_reject_order_five() {
        maxwellian_raw_moments(1.0, 0.0, 1.0, 5);
    }
}
