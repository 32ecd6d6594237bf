//! The six benchmark problems and their numerical setup.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{Boundaries, BoundaryKind};
use crate::error::{Error, Result};
use crate::state::{ConservedMoments, GasModel, Primitive, SpaceGrid, Thresholds, VelocityGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Shock1,
    Shock2,
    Sod1,
    Sod2,
    Blast1,
    Blast2,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::Shock1,
        ScenarioName::Shock2,
        ScenarioName::Sod1,
        ScenarioName::Sod2,
        ScenarioName::Blast1,
        ScenarioName::Blast2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Shock1 => "shock1",
            ScenarioName::Shock2 => "shock2",
            ScenarioName::Sod1 => "sod1",
            ScenarioName::Sod2 => "sod2",
            ScenarioName::Blast1 => "blast1",
            ScenarioName::Blast2 => "blast2",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Piecewise-constant initial data: `states[k]` holds on `x < breaks[k]`
/// (the last state extends to the right end).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseState {
    pub breaks: Vec<f64>,
    pub states: Vec<Primitive>,
}

impl PiecewiseState {
    pub fn at(&self, x: f64) -> Primitive {
        let k = self.breaks.iter().take_while(|&&b| x >= b).count();
        self.states[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub space: SpaceGrid,
    pub nv: usize,
    /// Velocity bound factor: `v_b = c1 sqrt(R T_W)`.
    pub c1: f64,
    /// Highest temperature reachable by converting all kinetic energy.
    pub t_wall: f64,
    pub gas: GasModel,
    pub initial: PiecewiseState,
    pub boundaries: Boundaries,
    pub t_final: f64,
    pub figure_times: Vec<f64>,
    pub thresholds: Thresholds,
}

impl Scenario {
    pub fn velocity_bound(&self) -> f64 {
        self.c1 * (self.gas.r * self.t_wall).sqrt()
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::symmetric(self.nv, self.velocity_bound())
    }

    /// Conserved state of every interior cell, sampled at cell centres.
    pub fn initial_moments(&self) -> Vec<ConservedMoments> {
        (0..self.space.nx)
            .map(|i| ConservedMoments::from_primitive(self.initial.at(self.space.center(i))))
            .collect()
    }

    /// Same problem on a different grid.
    pub fn with_resolution(mut self, nx: usize, nv: usize) -> Result<Self> {
        self.space = SpaceGrid::new(nx, self.space.x_min, self.space.x_max)?;
        if nv < 2 {
            return Err(Error::InvalidConfig("at least two velocity nodes are needed".into()));
        }
        self.nv = nv;
        Ok(self)
    }
}

/// `max (T + u^2 / (3 R))` over the given states.
pub fn wall_temperature(states: &[Primitive], gas: &GasModel) -> f64 {
    states
        .iter()
        .map(|p| p.temperature(gas) + p.u * p.u / (3.0 * gas.r))
        .fold(0.0, f64::max)
}

pub fn build_scenario(name: &str) -> Result<Scenario> {
    let name: ScenarioName = name.parse()?;
    let gas = GasModel::hydrogen();
    let prim = |rho: f64, u: f64, t: f64| Primitive::from_temperature(rho, u, t, &gas);
    let (x_min, x_max, initial, boundaries, t_final, figure_times) = match name {
        ScenarioName::Shock1 | ScenarioName::Shock2 => {
            let rho = if name == ScenarioName::Shock1 { 1e-6 } else { 1e-7 };
            let s = prim(rho, -900.0, 273.0);
            let inflow = BoundaryKind::FixedInflow(ConservedMoments::from_primitive(s));
            (
                -20.0,
                20.0,
                PiecewiseState { breaks: vec![], states: vec![s] },
                Boundaries::new(BoundaryKind::SpecularWall, inflow)?,
                0.04,
                vec![0.01, 0.02, 0.03, 0.04],
            )
        }
        ScenarioName::Sod1 | ScenarioName::Sod2 => {
            let (rl, rr) = if name == ScenarioName::Sod1 { (2e-5, 0.25e-5) } else { (5e-6, 0.75e-6) };
            (
                -20.0,
                20.0,
                PiecewiseState { breaks: vec![0.0], states: vec![prim(rl, 0.0, 273.15), prim(rr, 0.0, 218.4)] },
                Boundaries::new(BoundaryKind::Neumann, BoundaryKind::Neumann)?,
                0.024,
                vec![6e-3, 1.2e-2, 1.8e-2, 2.4e-2],
            )
        }
        ScenarioName::Blast1 | ScenarioName::Blast2 => {
            let rho = if name == ScenarioName::Blast1 { 1e-3 } else { 1e-4 };
            (
                0.0,
                1.0,
                PiecewiseState {
                    breaks: vec![0.1, 0.9],
                    states: vec![prim(rho, 200.0, 1e4), prim(rho, 0.0, 50.0), prim(rho, -200.0, 1e4)],
                },
                Boundaries::new(BoundaryKind::SpecularWall, BoundaryKind::SpecularWall)?,
                4e-4,
                vec![1e-4, 2e-4, 3e-4, 4e-4],
            )
        }
    };
    let t_wall = wall_temperature(&initial.states, &gas);
    Ok(Scenario {
        name,
        space: SpaceGrid::new(300, x_min, x_max)?,
        nv: 40,
        c1: 4.0,
        t_wall,
        gas,
        initial,
        boundaries,
        t_final,
        figure_times,
        thresholds: Thresholds::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shock_setup() {
        let s = build_scenario("shock1").unwrap();
        assert_eq!(s.boundaries.left, BoundaryKind::SpecularWall);
        let gas = GasModel::hydrogen();
        let inflow = ConservedMoments::from_primitive(Primitive::from_temperature(1e-6, -900.0, 273.0, &gas));
        assert_eq!(s.boundaries.right, BoundaryKind::FixedInflow(inflow));
        assert_eq!(s.t_final, 0.04);
        assert!((s.t_wall - (273.0 + 900.0 * 900.0 / (3.0 * 208.24))).abs() < 1e-9);
        assert_eq!((s.space.nx, s.nv), (300, 40));
        let m = s.initial_moments();
        assert!(m.iter().all(|x| *x == inflow));
        assert_eq!(build_scenario("shock2").unwrap().initial.states[0].rho, 1e-7);
    }

    #[test]
    fn sod_setup() {
        let s = build_scenario("sod1").unwrap();
        assert_eq!(s.boundaries.left, BoundaryKind::Neumann);
        assert_eq!(s.boundaries.right, BoundaryKind::Neumann);
        let m = s.initial_moments();
        assert_eq!(m[149].rho, 2e-5);
        assert_eq!(m[150].rho, 0.25e-5);
        assert!((s.t_wall - 273.15).abs() < 1e-12);
        let g = s.velocity_grid().unwrap();
        assert!((g.max_speed() - 4.0 * (208.24f64 * 273.15).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn blast_setup() {
        let s = build_scenario("blast1").unwrap();
        assert_eq!(s.boundaries.left, BoundaryKind::SpecularWall);
        assert_eq!(s.boundaries.right, BoundaryKind::SpecularWall);
        let m = s.initial_moments();
        let gas = s.gas;
        let t = |c: &ConservedMoments| c.theta() / gas.r;
        assert!((t(&m[29]) - 1e4).abs() < 1e-6 && m[29].mom > 0.0);
        assert!((t(&m[30]) - 50.0).abs() < 1e-9 && m[30].mom == 0.0);
        assert!((t(&m[269]) - 50.0).abs() < 1e-9);
        assert!((t(&m[270]) - 1e4).abs() < 1e-6 && m[270].mom < 0.0);
        assert_eq!(build_scenario("blast2").unwrap().initial.states[1].rho, 1e-4);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(build_scenario("sod3"), Err(Error::UnknownScenario(_))));
        for n in ScenarioName::ALL {
            assert_eq!(build_scenario(n.as_str()).unwrap().name, n);
        }
    }
}
