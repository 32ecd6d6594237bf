//! Phase-space grids, field containers and the gas model shared by all solvers.
//!
//! Fields are stored cell-major with the velocity index innermost, and ghost
//! cells are kept inline: storage index `s` maps to interior cell `s - NG`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ghost cells on each side of the physical domain (second-order stencils).
pub const NG: usize = 2;

/// Uniform velocity grid `v_j = a + j dv`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityGrid {
    nodes: Vec<f64>,
    dv: f64,
    origin: f64,
}

impl VelocityGrid {
    pub fn new(n: usize, origin: f64, dv: f64) -> Result<Self> {
        if n < 2 || !(dv > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "velocity grid needs n >= 2 and dv > 0 (n = {n}, dv = {dv})"
            )));
        }
        let nodes = (0..n).map(|j| origin + j as f64 * dv).collect();
        Ok(Self { nodes, dv, origin })
    }

    /// Grid of `n` nodes spanning `[-v_b, v_b]`. Nodes are mirrored bitwise so
    /// that `v_{n-1-j} == -v_j` exactly.
    pub fn symmetric(n: usize, v_b: f64) -> Result<Self> {
        if n < 2 || !(v_b > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "symmetric velocity grid needs n >= 2 and v_b > 0 (n = {n}, v_b = {v_b})"
            )));
        }
        let dv = 2.0 * v_b / (n - 1) as f64;
        let mut nodes = vec![0.0; n];
        for j in 0..n.div_ceil(2) {
            let v = -v_b + j as f64 * dv;
            nodes[j] = v;
            nodes[n - 1 - j] = -v;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self {
            nodes,
            dv,
            origin: -v_b,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn max_speed(&self) -> f64 {
        self.nodes.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// True when `v -> -v` maps nodes onto nodes exactly.
    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|j| self.nodes[n - 1 - j] == -self.nodes[j])
    }

    /// Index of the node carrying `-v_j` (only meaningful on symmetric grids).
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        self.len() - 1 - j
    }
}

/// Uniform cell-centred grid on `[x_min, x_max]` with `NG` ghosts per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub nx: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
}

impl SpaceGrid {
    pub fn new(nx: usize, x_min: f64, x_max: f64) -> Result<Self> {
        let dx = (x_max - x_min) / nx as f64;
        if nx < 4 || !(dx > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "space grid needs nx >= 4 and x_max > x_min (nx = {nx}, [{x_min}, {x_max}])"
            )));
        }
        Ok(Self {
            nx,
            x_min,
            x_max,
            dx,
        })
    }

    pub fn n_ghost(&self) -> usize {
        NG
    }

    /// Cell count including ghosts.
    pub fn n_total(&self) -> usize {
        self.nx + 2 * NG
    }

    /// Storage indices of the interior cells.
    pub fn interior(&self) -> std::ops::Range<usize> {
        NG..NG + self.nx
    }

    /// Centre of interior cell `i` (0-based, without ghosts).
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }
}

/// Primitive variables `(rho, u, theta = R T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

impl Primitive {
    pub fn new(rho: f64, u: f64, theta: f64) -> Self {
        Self { rho, u, theta }
    }

    pub fn from_temperature(rho: f64, u: f64, temperature: f64, gas: &GasModel) -> Self {
        Self::new(rho, u, gas.r * temperature)
    }

    pub fn pressure(&self) -> f64 {
        self.rho * self.theta
    }

    pub fn temperature(&self, gas: &GasModel) -> f64 {
        self.theta / gas.r
    }
}

/// Conserved densities `(rho, rho u, E)` of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservedMoments {
    pub rho: f64,
    pub mom: f64,
    pub en: f64,
}

impl ConservedMoments {
    pub const ZERO: Self = Self {
        rho: 0.0,
        mom: 0.0,
        en: 0.0,
    };

    pub fn new(rho: f64, mom: f64, en: f64) -> Self {
        Self { rho, mom, en }
    }

    /// Assembles `(rho, rho u, rho (u^2/2 + 3 theta / 2))`.
    pub fn from_primitive(p: Primitive) -> Self {
        Self {
            rho: p.rho,
            mom: p.rho * p.u,
            en: p.rho * (0.5 * p.u * p.u + 1.5 * p.theta),
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.mom, self.en]
    }

    pub fn velocity(&self) -> f64 {
        self.mom / self.rho
    }

    /// `theta = (2/3)(E/rho - u^2/2)`, unchecked.
    pub fn theta(&self) -> f64 {
        let u = self.mom / self.rho;
        (2.0 / 3.0) * (self.en / self.rho - 0.5 * u * u)
    }

    pub fn is_admissible(&self) -> bool {
        self.rho > 0.0 && self.theta() > 0.0 && self.rho.is_finite() && self.en.is_finite()
    }
}

impl Add for ConservedMoments {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.rho + o.rho, self.mom + o.mom, self.en + o.en)
    }
}

impl Sub for ConservedMoments {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.rho - o.rho, self.mom - o.mom, self.en - o.en)
    }
}

impl Mul<f64> for ConservedMoments {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.rho * s, self.mom * s, self.en * s)
    }
}

impl Neg for ConservedMoments {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.rho, -self.mom, -self.en)
    }
}

/// Inverse of [`ConservedMoments::from_primitive`]; `cell` is only used for
/// error reporting.
pub fn primitive_of(m: &ConservedMoments, cell: isize) -> Result<Primitive> {
    let theta = m.theta();
    if !(m.rho > 0.0) || !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::NonPhysicalState {
            cell,
            rho: m.rho,
            theta,
        });
    }
    Ok(Primitive {
        rho: m.rho,
        u: m.mom / m.rho,
        theta,
    })
}

/// Pair of per-cell, per-velocity arrays `(F, G)` of the reduced model.
///
/// Used both for the full distribution and for the perturbation `g_K`, in
/// which case the components are `(g_F, g_G)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairField {
    nv: usize,
    ncells: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

pub type ReducedDistribution = PairField;
pub type PerturbationField = PairField;

impl PairField {
    pub fn zeros(ncells: usize, nv: usize) -> Self {
        Self {
            nv,
            ncells,
            f: vec![0.0; ncells * nv],
            g: vec![0.0; ncells * nv],
        }
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn ncells(&self) -> usize {
        self.ncells
    }

    #[inline]
    pub fn cell(&self, s: usize) -> (&[f64], &[f64]) {
        let r = s * self.nv..(s + 1) * self.nv;
        (&self.f[r.clone()], &self.g[r])
    }

    #[inline]
    pub fn cell_mut(&mut self, s: usize) -> (&mut [f64], &mut [f64]) {
        let r = s * self.nv..(s + 1) * self.nv;
        (&mut self.f[r.clone()], &mut self.g[r])
    }

    pub fn set_cell(&mut self, s: usize, f: &[f64], g: &[f64]) {
        let (cf, cg) = self.cell_mut(s);
        cf.copy_from_slice(f);
        cg.copy_from_slice(g);
    }

    pub fn clear_cell(&mut self, s: usize) {
        let (cf, cg) = self.cell_mut(s);
        cf.fill(0.0);
        cg.fill(0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.f
            .iter()
            .chain(self.g.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// `(sum F dv, sum v F dv, sum (v^2 F / 2 + G) dv)` for one cell's samples.
pub fn pair_moments(f: &[f64], g: &[f64], grid: &VelocityGrid) -> [f64; 3] {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for ((&fj, &gj), &v) in f.iter().zip(g).zip(grid.nodes()) {
        m0 += fj;
        m1 += v * fj;
        m2 += 0.5 * v * v * fj + gj;
    }
    let dv = grid.dv();
    [m0 * dv, m1 * dv, m2 * dv]
}

/// Conserved moments of cell `cell` (storage index) of `dist`.
///
/// Panics if `dist` is not shaped to `grid`.
pub fn moments_of(dist: &ReducedDistribution, grid: &VelocityGrid, cell: usize) -> ConservedMoments {
    assert_eq!(dist.nv(), grid.len(), "distribution not shaped to velocity grid");
    assert!(cell < dist.ncells(), "cell index out of range");
    let (f, g) = dist.cell(cell);
    ConservedMoments::from_array(pair_moments(f, g, grid))
}

/// Gas constants. Defaults are the hydrogen values used by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    /// Specific gas constant (J/kg/K).
    pub r: f64,
    /// Viscosity coefficient in `mu = c_mu * theta^omega`.
    pub c_mu: f64,
    pub omega: f64,
    /// Molecular diameter (m).
    pub sigma_c: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    pub gamma: f64,
}

impl GasModel {
    pub fn hydrogen() -> Self {
        Self {
            r: 208.24,
            c_mu: 1.99e-3,
            omega: 0.81,
            sigma_c: 2.92e-10,
            k_b: 1.380062e-23,
            gamma: 5.0 / 3.0,
        }
    }

    pub fn viscosity(&self, theta: f64) -> f64 {
        self.c_mu * theta.powf(self.omega)
    }

    /// `c_mu` for which `viscosity` equals the hard-sphere value
    /// `(5/16) k sqrt(T) / (sigma^2 sqrt(pi R))` at `t_ref`, i.e. the viscosity
    /// of the molecules behind the mean free path.
    pub fn hard_sphere_c_mu(&self, t_ref: f64) -> f64 {
        let mu = 5.0 / 16.0 * self.k_b * t_ref.sqrt() / (self.sigma_c * self.sigma_c * (std::f64::consts::PI * self.r).sqrt());
        mu / (self.r * t_ref).powf(self.omega)
    }
}

impl Default for GasModel {
    fn default() -> Self {
        Self::hydrogen()
    }
}

/// BGK relaxation frequency `nu = p / mu` with `mu = c_mu theta^omega`.
pub fn collision_frequency(m: &ConservedMoments, gas: &GasModel) -> f64 {
    let theta = m.theta();
    m.rho * theta / gas.viscosity(theta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionKind {
    /// Predicted / measured heat flux relative to the equilibrium energy flux.
    HeatFluxRatio,
    /// Local Knudsen number with a gradient-based reference length.
    LocalKnudsen,
}

/// Breakdown thresholds driving the transition function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub beta_thr: f64,
    pub beta_star: f64,
    pub eps_thr: f64,
    pub eps_star: f64,
    pub criterion: CriterionKind,
    /// Floor for `|F_3|` in units of `rho theta^{3/2}`.
    pub f3_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            beta_thr: 1e-3,
            beta_star: 1e-4,
            eps_thr: 0.05,
            eps_star: 0.005,
            criterion: CriterionKind::HeatFluxRatio,
            f3_floor: 1e-8,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_star > 0.0
            && self.beta_star <= self.beta_thr
            && self.eps_star > 0.0
            && self.eps_star <= self.eps_thr
            && self.f3_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("inconsistent thresholds {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Fluid,
    Buffer,
    Kinetic,
}

impl Regime {
    pub fn of(h: f64) -> Self {
        if h <= 0.0 {
            Regime::Fluid
        } else if h >= 1.0 {
            Regime::Kinetic
        } else {
            Regime::Buffer
        }
    }
}

/// Per-cell transition function `h` in `[0, 1]` with its regime tags.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionField {
    h: Vec<f64>,
    regime: Vec<Regime>,
}

impl TransitionField {
    pub fn fluid(nx: usize) -> Self {
        Self {
            h: vec![0.0; nx],
            regime: vec![Regime::Fluid; nx],
        }
    }

    /// Builds the field from raw values, clamping into `[0, 1]`.
    pub fn from_values(h: Vec<f64>) -> Self {
        let h: Vec<f64> = h.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        let regime = h.iter().map(|&x| Regime::of(x)).collect();
        Self { h, regime }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regime
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn set(&mut self, i: usize, h: f64) {
        let h = h.clamp(0.0, 1.0);
        self.h[i] = h;
        self.regime[i] = Regime::of(h);
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.h[i] > 0.0
    }

    pub fn active_count(&self) -> usize {
        self.h.iter().filter(|&&x| x > 0.0).count()
    }

    pub fn active_fraction(&self) -> f64 {
        self.active_count() as f64 / self.h.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_field_has_zero_moments_and_is_rejected() {
        let grid = VelocityGrid::symmetric(8, 3.0).unwrap();
        let d = PairField::zeros(1, 8);
        let m = moments_of(&d, &grid, 0);
        assert_eq!(m, ConservedMoments::ZERO);
        assert!(!m.is_admissible());
        assert!(matches!(primitive_of(&m, 0), Err(Error::NonPhysicalState { .. })));
    }

    #[test]
    fn moments_match_plain_accumulation() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let grid = VelocityGrid::new(40, -13.0, 0.65).unwrap();
        let mut d = PairField::zeros(3, 40);
        for x in d.f.iter_mut().chain(d.g.iter_mut()) {
            *x = rng.random_range(0.0..2.0);
        }
        for cell in 0..3 {
            let m = moments_of(&d, &grid, cell);
            // independent accumulation: per-term products with dv folded in
            let (f, g) = d.cell(cell);
            let mut oracle = [0.0_f64; 3];
            for j in 0..40 {
                let v = -13.0 + j as f64 * 0.65;
                oracle[0] += f[j] * 0.65;
                oracle[1] += v * f[j] * 0.65;
                oracle[2] += (0.5 * v * v * f[j] + g[j]) * 0.65;
            }
            for (a, b) in m.to_array().iter().zip(oracle) {
                assert!(((a - b) / b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn primitive_of_rest_state() {
        let p = primitive_of(&ConservedMoments::new(1.0, 0.0, 1.5), 0).unwrap();
        assert_eq!((p.rho, p.u, p.theta), (1.0, 0.0, 1.0));
    }

    #[test]
    fn primitive_of_sod_left_state() {
        let gas = GasModel::hydrogen();
        let m = ConservedMoments::from_primitive(Primitive::from_temperature(2e-5, 0.0, 273.15, &gas));
        let p = primitive_of(&m, 3).unwrap();
        assert!((p.theta - 208.24 * 273.15).abs() <= 1e-12 * p.theta);
    }

    #[test]
    fn primitive_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let rho = 10f64.powf(rng.random_range(-8.0..1.0));
            let theta = 10f64.powf(rng.random_range(2.0..7.0));
            let u = rng.random_range(-3.0..3.0) * theta.sqrt();
            let p = primitive_of(&ConservedMoments::from_primitive(Primitive::new(rho, u, theta)), 0).unwrap();
            assert!(((p.rho - rho) / rho).abs() < 1e-14);
            assert!((p.u - u).abs() < 1e-12 * theta.sqrt());
            assert!(((p.theta - theta) / theta).abs() < 1e-11);
        }
    }

    #[test]
    fn negative_temperature_reports_cell() {
        let m = ConservedMoments::new(1.0, 2.0, 1.0);
        match primitive_of(&m, 17) {
            Err(Error::NonPhysicalState { cell, .. }) => assert_eq!(cell, 17),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn collision_frequency_hydrogen_reference() {
        let gas = GasModel::hydrogen();
        let theta = 208.24 * 273.0;
        let m = ConservedMoments::from_primitive(Primitive::new(1e-6, 0.0, theta));
        let nu = collision_frequency(&m, &gas);
        let expected = (1e-6 * 208.24 * 273.0) / (1.99e-3 * (208.24_f64 * 273.0).powf(0.81));
        assert!(((nu - expected) / expected).abs() < 1e-12);
        let m2 = ConservedMoments::from_primitive(Primitive::new(2e-6, 0.0, theta));
        assert!((collision_frequency(&m2, &gas) / nu - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hard_sphere_viscosity_matches_mean_free_path() {
        let mut gas = GasModel::hydrogen();
        gas.c_mu = gas.hard_sphere_c_mu(273.0);
        let (rho, t) = (3e-6, 273.0);
        let theta = gas.r * t;
        let lambda = gas.k_b * t / (2f64.sqrt() * std::f64::consts::PI * rho * theta * gas.sigma_c.powi(2));
        let mu = 5.0 / 16.0 * rho * lambda * (2.0 * std::f64::consts::PI * theta).sqrt();
        assert!((gas.viscosity(theta) / mu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_grid_mirrors_exactly() {
        for n in [2, 5, 40, 41] {
            let g = VelocityGrid::symmetric(n, 1234.5).unwrap();
            assert!(g.is_symmetric());
            assert_eq!(g.max_speed(), 1234.5);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        }
        assert!(!VelocityGrid::new(4, -1.0, 0.7).unwrap().is_symmetric());
        assert!(VelocityGrid::new(1, 0.0, 1.0).is_err());
        assert!(SpaceGrid::new(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn transition_field_tags_follow_h() {
        let mut t = TransitionField::fluid(3);
        t.set(0, 1.0);
        t.set(1, 0.25);
        assert_eq!(t.regimes(), &[Regime::Kinetic, Regime::Buffer, Regime::Fluid]);
        t.set(2, 7.0);
        assert_eq!(t.get(2), 1.0);
        assert_eq!(t.active_count(), 3);
    }
}
