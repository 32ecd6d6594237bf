//! Exact solution of the Riemann problem for a polytropic gas, used as a
//! reference for the fluid limit. States use `theta = p / rho`.

use crate::error::{Error, Result};
use crate::state::Primitive;

/// Pressure and velocity between the two nonlinear waves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarState {
    pub p: f64,
    pub u: f64,
    /// `|f(p)|` at the returned root.
    pub residual: f64,
}

fn sound_speed(p: &Primitive, gamma: f64) -> f64 {
    (gamma * p.theta).sqrt()
}

/// Velocity jump across the wave facing state `k` when the star pressure is `p`,
/// and its derivative.
fn wave_function(p: f64, k: &Primitive, gamma: f64) -> (f64, f64) {
    let pk = k.pressure();
    let ck = sound_speed(k, gamma);
    if p > pk {
        let a = 2.0 / ((gamma + 1.0) * k.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * pk;
        let s = (a / (p + b)).sqrt();
        ((p - pk) * s, s * (1.0 - 0.5 * (p - pk) / (p + b)))
    } else {
        let e = (gamma - 1.0) / (2.0 * gamma);
        let r = (p / pk).powf(e);
        let d = (p / pk).powf(-(gamma + 1.0) / (2.0 * gamma)) / (k.rho * ck);
        (2.0 * ck / (gamma - 1.0) * (r - 1.0), d)
    }
}

/// Star-region pressure and velocity, solved to a relative tolerance of 1e-12.
pub fn star_state(left: &Primitive, right: &Primitive, gamma: f64) -> Result<StarState> {
    let (cl, cr) = (sound_speed(left, gamma), sound_speed(right, gamma));
    let du = right.u - left.u;
    if 2.0 * (cl + cr) / (gamma - 1.0) <= du {
        return Err(Error::Vacuum);
    }
    let f = |p: f64| {
        let (fl, dl) = wave_function(p, left, gamma);
        let (fr, dr) = wave_function(p, right, gamma);
        (fl + fr + du, dl + dr)
    };
    // two-rarefaction guess, exact when both waves are rarefactions
    let e = (gamma - 1.0) / (2.0 * gamma);
    let (pl, pr) = (left.pressure(), right.pressure());
    let mut p = ((cl + cr - 0.5 * (gamma - 1.0) * du) / (cl / pl.powf(e) + cr / pr.powf(e))).powf(1.0 / e);
    if !(p.is_finite() && p > 0.0) {
        p = 0.5 * (pl + pr);
    }
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let (val, der) = f(p);
        if val > 0.0 {
            hi = hi.min(p);
        } else {
            lo = lo.max(p);
        }
        let mut next = p - val / der;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * p };
        }
        let done = (next - p).abs() <= 1e-15 * p;
        p = next;
        if done {
            break;
        }
    }
    let (fl, _) = wave_function(p, left, gamma);
    let (fr, _) = wave_function(p, right, gamma);
    let u = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);
    let residual = (fl + fr + du).abs();
    Ok(StarState { p, u, residual })
}

/// Self-similar solution sampled at `xi = x / t`.
pub fn exact_riemann(left: &Primitive, right: &Primitive, gamma: f64, xi: &[f64]) -> Result<Vec<Primitive>> {
    let star = star_state(left, right, gamma)?;
    Ok(xi.iter().map(|&s| sample(left, right, gamma, &star, s)).collect())
}

fn sample(left: &Primitive, right: &Primitive, gamma: f64, star: &StarState, s: f64) -> Primitive {
    let gm = (gamma - 1.0) / (gamma + 1.0);
    let e = (gamma - 1.0) / (2.0 * gamma);
    let side_left = s <= star.u;
    let (k, sign) = if side_left { (left, -1.0) } else { (right, 1.0) };
    let pk = k.pressure();
    let ck = sound_speed(k, gamma);
    let from = |rho: f64, u: f64, p: f64| Primitive::new(rho, u, p / rho);
    if star.p > pk {
        // shock
        let speed = k.u + sign * ck * ((gamma + 1.0) / (2.0 * gamma) * star.p / pk + e).sqrt();
        if (sign < 0.0 && s <= speed) || (sign > 0.0 && s >= speed) {
            return *k;
        }
        let ratio = star.p / pk;
        let rho = k.rho * (ratio + gm) / (gm * ratio + 1.0);
        from(rho, star.u, star.p)
    } else {
        // rarefaction
        let rho_star = k.rho * (star.p / pk).powf(1.0 / gamma);
        let c_star = ck * (star.p / pk).powf(e);
        let head = k.u + sign * ck;
        let tail = star.u + sign * c_star;
        let outside = if sign < 0.0 { s <= head } else { s >= head };
        if outside {
            return *k;
        }
        let inside_star = if sign < 0.0 { s >= tail } else { s <= tail };
        if inside_star {
            return from(rho_star, star.u, star.p);
        }
        let u = 2.0 / (gamma + 1.0) * (-sign * ck + (gamma - 1.0) / 2.0 * k.u + s);
        let c =2.0 / (gamma + 1.0) * (ck - sign * (gamma - 1.0) / 2.0 * (k.u - s));
        let rho = k.rho * (c / ck).powf(2.0 / (gamma - 1.0));
        let p = pk * (c / ck).powf(2.0 * gamma / (gamma - 1.0));
        from(rho, u, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 5.0 / 3.0;

    #[test]
    fn identical_states_give_a_constant_profile() {
        let s = Primitive::new(1.3, 0.4, 2.0);
        let xi: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.2).collect();
        for p in exact_riemann(&s, &s, G, &xi).unwrap() {
            assert!((p.rho - s.rho).abs() < 1e-12 && (p.u - s.u).abs() < 1e-12 && (p.theta - s.theta).abs() < 1e-12);
        }
    }

    #[test]
    fn sod_star_pressure_lies_between_initial_pressures() {
        let r = 208.24;
        let l = Primitive::new(2e-5, 0.0, r * 273.15);
        let rr = Primitive::new(0.25e-5, 0.0, r * 218.4);
        let st = star_state(&l, &rr, G).unwrap();
        assert!(st.p > rr.pressure() && st.p < l.pressure());
        assert!(st.residual < 1e-12 * l.theta.sqrt());
        assert!(st.u > 0.0);
    }

    #[test]
    fn classic_sod_values() {
        // gamma = 1.4 reference values
        let l = Primitive::new(1.0, 0.0, 1.0);
        let r = Primitive::new(0.125, 0.0, 0.8);
        let st = star_state(&l, &r, 1.4).unwrap();
        assert!((st.p - 0.30313).abs() < 1e-5);
        assert!((st.u - 0.92745).abs() < 1e-5);
    }

    #[test]
    fn symmetric_collision_has_a_resting_contact() {
        let l = Primitive::new(1.0, 2.0, 1.0);
        let r = Primitive::new(1.0, -2.0, 1.0);
        let st = star_state(&l, &r, G).unwrap();
        assert!(st.u.abs() < 1e-12);
        let prof = exact_riemann(&l, &r, G, &[-1e-9, 1e-9]).unwrap();
        assert!((prof[0].rho - prof[1].rho).abs() < 1e-12);
    }

    #[test]
    fn vacuum_is_reported() {
        let l = Primitive::new(1.0, -10.0, 1.0);
        let r = Primitive::new(1.0, 10.0, 1.0);
        assert!(matches!(star_state(&l, &r, G), Err(Error::Vacuum)));
    }

    #[test]
    fn profile_is_continuous_through_rarefaction_edges() {
        let l = Primitive::new(1.0, 0.0, 1.0);
        let r = Primitive::new(0.125, 0.0, 0.8);
        let st = star_state(&l, &r, G).unwrap();
        let cl = (G * 1.0f64).sqrt();
        let c_star = cl * (st.p / 1.0).powf((G - 1.0) / (2.0 * G));
        for edge in [-cl, st.u - c_star] {
            let p = exact_riemann(&l, &r, G, &[edge - 1e-9, edge + 1e-9]).unwrap();
            assert!((p[0].rho - p[1].rho).abs() < 1e-7, "edge {edge}");
        }
    }
}
