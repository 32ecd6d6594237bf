//! Numerical fluxes: upwind-minmod fluxes for kinetic transport and a MUSCL
//! extension of the local Lax-Friedrichs flux for the macroscopic system.
//!
//! Interface `k` (0..=nx) sits between storage cells `NG - 1 + k` and `NG + k`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::maxwellian::euler_flux;
use crate::state::{primitive_of, ConservedMoments, NG};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KineticOrder {
    /// Plain upwinding.
    First,
    /// Upwinding plus the three-argument minmod slope.
    Second,
}

impl KineticOrder {
    /// Largest Courant number `max|v| dt / dx` for which the explicit
    /// transport keeps a non-negative field non-negative.
    pub fn cfl_limit(self) -> f64 {
        match self {
            KineticOrder::First => 1.0,
            KineticOrder::Second => 2.0 / 3.0,
        }
    }
}

/// Slope limiter `phi(chi)` of the macroscopic MUSCL flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limiter {
    /// `max(0, min(1, chi))`.
    Minmod,
    /// `(chi + |chi|) / (1 + |chi|)`.
    VanLeer,
    /// `phi = 0`: first-order local Lax-Friedrichs.
    FirstOrder,
}

impl Limiter {
    #[inline]
    pub fn apply(self, chi: f64) -> f64 {
        match self {
            Limiter::Minmod => chi.clamp(0.0, 1.0),
            Limiter::VanLeer => (chi + chi.abs()) / (1.0 + chi.abs()),
            Limiter::FirstOrder => 0.0,
        }
    }
}

/// Three-argument minmod: the smallest-magnitude argument when all share a
/// sign, zero otherwise.
#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Flux at the interface between cells `i` and `i + 1` for velocity `v`, given
/// the samples at `i - 1 ..= i + 2`.
///
/// For `v >= 0` the slope is `minmod(g_i - g_{i-1}, g_{i+1} - g_i, g_{i+2} - g_i)`;
/// for `v < 0` the stencil is mirrored about the interface. Mirroring keeps the
/// flux odd under `v -> -v` with reflected data, so walls carry no mass.
#[inline]
pub fn interface_flux(gm1: f64, g0: f64, g1: f64, g2: f64, v: f64, order: KineticOrder) -> f64 {
    if v >= 0.0 {
        let base = v * g0;
        match order {
            KineticOrder::First => base,
            KineticOrder::Second => base + 0.5 * v * minmod3(g0 - gm1, g1 - g0, g2 - g0),
        }
    } else {
        let base = v * g1;
        match order {
            KineticOrder::First => base,
            KineticOrder::Second => base - 0.5 * v * minmod3(g2 - g1, g1 - g0, g1 - gm1),
        }
    }
}

/// Interface fluxes of one scalar kinetic field sampled at a single velocity.
///
/// `column` holds one value per storage cell (ghosts included); the result
/// has `column.len() - 2 NG + 1` entries.
pub fn kinetic_flux(column: &[f64], v: f64, order: KineticOrder) -> Vec<f64> {
    let nx = column.len() - 2 * NG;
    (0..=nx)
        .map(|k| {
            let i = NG - 1 + k;
            interface_flux(column[i - 1], column[i], column[i + 1], column[i + 2], v, order)
        })
        .collect()
}

/// Interface fluxes of a cell-major field `field[s * nv + j]` for every node,
/// laid out `[interface][node]`.
pub fn kinetic_flux_field(field: &[f64], nodes: &[f64], order: KineticOrder) -> Vec<f64> {
    let nv = nodes.len();
    let ncells = field.len() / nv;
    let nx = ncells - 2 * NG;
    let mut out = vec![0.0; (nx + 1) * nv];
    for k in 0..=nx {
        let i = NG - 1 + k;
        let row = &mut out[k * nv..(k + 1) * nv];
        for (j, (o, &v)) in row.iter_mut().zip(nodes).enumerate() {
            *o = interface_flux(
                field[(i - 1) * nv + j],
                field[i * nv + j],
                field[(i + 1) * nv + j],
                field[(i + 2) * nv + j],
                v,
                order,
            );
        }
    }
    out
}

/// `max_i (|u_i| + sqrt(gamma theta_i))` over the given cells.
pub fn spectral_radius(moments: &[ConservedMoments], gamma: f64) -> Result<f64> {
    let mut alpha = 0.0_f64;
    for (s, m) in moments.iter().enumerate() {
        let p = primitive_of(m, s as isize - NG as isize)?;
        alpha = alpha.max(p.u.abs() + (gamma * p.theta).sqrt());
    }
    Ok(alpha)
}

#[inline]
fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// MUSCL Lax-Friedrichs interface fluxes of the total flux
/// `F(rho) + <v m g_K>`.
///
/// `gk_moments[s]` is `<v m g_K>` of storage cell `s`; `None` means `g_K = 0`.
/// The limiter ratios are taken componentwise and a zero denominator switches
/// the slope off for that component.
pub fn macro_flux(
    moments: &[ConservedMoments],
    gk_moments: Option<&[[f64; 3]]>,
    alpha: f64,
    limiter: Limiter,
) -> Vec<[f64; 3]> {
    let n = moments.len();
    let nx = n - 2 * NG;
    let ftot: Vec<[f64; 3]> = match gk_moments {
        None => moments.iter().map(euler_flux).collect(),
        Some(gm) => {
            assert_eq!(gm.len(), n, "kinetic moments not shaped to the macro field");
            moments
                .iter()
                .zip(gm)
                .map(|(m, g)| if *g == [0.0; 3] { euler_flux(m) } else { add3(euler_flux(m), *g) })
                .collect()
        }
    };
    let rho: Vec<[f64; 3]> = moments.iter().map(|m| m.to_array()).collect();

    let w = |s: usize, c: usize, sign: f64| ftot[s][c] + sign * alpha * rho[s][c];
    let slope = |lo: usize, c: usize, sign: f64| {
        // sigma at cell `lo`, ratio (w_lo - w_{lo-1}) / (w_{lo+1} - w_lo)
        let den = w(lo + 1, c, sign) - w(lo, c, sign);
        if den == 0.0 {
            return 0.0;
        }
        let num = w(lo, c, sign) - w(lo - 1, c, sign);
        den * limiter.apply(num / den)
    };

    let mut out = vec![[0.0; 3]; nx + 1];
    for (k, psi) in out.iter_mut().enumerate() {
        let i = NG - 1 + k;
        for c in 0..3 {
            let central = 0.5 * (ftot[i][c] + ftot[i + 1][c]);
            let diss = 0.5 * alpha * (rho[i + 1][c] - rho[i][c]);
            let corr = match limiter {
                Limiter::FirstOrder => 0.0,
                _ => 0.25 * (slope(i, c, 1.0) - slope(i + 1, c, -1.0)),
            };
            psi[c] = central - diss + corr;
        }
    }
    out
}
