//! Ghost-cell filling. Every field carries [`NG`] ghost cells per side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxwellian::discrete_maxwellian;
use crate::state::{ConservedMoments, PairField, VelocityGrid, NG};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Specular reflection: mirrored cells with reversed velocity.
    SpecularWall,
    /// Ghosts pinned to a fixed equilibrium state.
    FixedInflow(ConservedMoments),
    /// Zero-gradient copy.
    Neumann,
}

/// What a kinetic pair field represents; decides the inflow ghost value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KineticRole {
    /// A non-equilibrium perturbation: zero at an equilibrium inflow.
    Perturbation,
    /// A full distribution or an equilibrium: the inflow Maxwellian.
    Distribution,
}

/// Pairs of (ghost, source) storage indices; the source is the mirror image
/// of the ghost about the boundary for walls and the nearest interior cell
/// otherwise.
fn ghost_map(ncells: usize, side: Side, mirror: bool) -> [(usize, usize); NG] {
    let nx = ncells - 2 * NG;
    let mut out = [(0, 0); NG];
    for (k, slot) in out.iter_mut().enumerate() {
        // k = 0 is the ghost next to the boundary
        *slot = match side {
            Side::Left => (NG - 1 - k, if mirror { NG + k } else { NG }),
            Side::Right => (NG + nx + k, if mirror { NG + nx - 1 - k } else { NG + nx - 1 }),
        };
    }
    out
}

pub fn fill_ghosts_macro(cells: &mut [ConservedMoments], side: Side, kind: &BoundaryKind) {
    match kind {
        BoundaryKind::SpecularWall => {
            for (gh, src) in ghost_map(cells.len(), side, true) {
                let m = cells[src];
                cells[gh] = ConservedMoments::new(m.rho, -m.mom, m.en);
            }
        }
        BoundaryKind::FixedInflow(state) => {
            for (gh, _) in ghost_map(cells.len(), side, false) {
                cells[gh] = *state;
            }
        }
        BoundaryKind::Neumann => {
            for (gh, src) in ghost_map(cells.len(), side, false) {
                cells[gh] = cells[src];
            }
        }
    }
}

pub fn fill_ghosts_kinetic(
    field: &mut PairField,
    side: Side,
    kind: &BoundaryKind,
    grid: &VelocityGrid,
    role: KineticRole,
) -> Result<()> {
    let nv = field.nv();
    match kind {
        BoundaryKind::SpecularWall => {
            if !grid.is_symmetric() {
                return Err(Error::AsymmetricGrid);
            }
            for (gh, src) in ghost_map(field.ncells(), side, true) {
                for j in 0..nv {
                    let r = src * nv + grid.mirror(j);
                    field.f[gh * nv + j] = field.f[r];
                    field.g[gh * nv + j] = field.g[r];
                }
            }
        }
        BoundaryKind::FixedInflow(state) => {
            let eq = match role {
                KineticRole::Perturbation => None,
                KineticRole::Distribution => Some(discrete_maxwellian(state, grid)?),
            };
            for (gh, _) in ghost_map(field.ncells(), side, false) {
                match &eq {
                    None => field.clear_cell(gh),
                    Some(dm) => field.set_cell(gh, &dm.mf, &dm.mg),
                }
            }
        }
        BoundaryKind::Neumann => {
            for (gh, src) in ghost_map(field.ncells(), side, false) {
                let (f, g) = field.cell(src);
                let (f, g) = (f.to_vec(), g.to_vec());
                field.set_cell(gh, &f, &g);
            }
        }
    }
    Ok(())
}

/// Boundary kinds of both ends of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl Boundaries {
    pub fn new(left: BoundaryKind, right: BoundaryKind) -> Result<Self> {
        for k in [&left, &right] {
            if let BoundaryKind::FixedInflow(m) = k {
                if !m.is_admissible() {
                    return Err(Error::InvalidConfig(format!("inadmissible inflow state {m:?}")));
                }
            }
        }
        Ok(Self { left, right })
    }

    pub fn has_wall(&self) -> bool {
        matches!(self.left, BoundaryKind::SpecularWall) || matches!(self.right, BoundaryKind::SpecularWall)
    }

    pub fn fill_macro(&self, cells: &mut [ConservedMoments]) {
        fill_ghosts_macro(cells, Side::Left, &self.left);
        fill_ghosts_macro(cells, Side::Right, &self.right);
    }

    pub fn fill_kinetic(&self, field: &mut PairField, grid: &VelocityGrid, role: KineticRole) -> Result<()> {
        fill_ghosts_kinetic(field, Side::Left, &self.left, grid, role)?;
        fill_ghosts_kinetic(field, Side::Right, &self.right, grid, role)
    }
}
