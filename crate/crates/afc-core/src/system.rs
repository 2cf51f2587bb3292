//! The edge system the solvers run on: mesh edges plus ghost nodes that
//! realize wall / inflow boundaries at the nodal level.
//!
//! A reflecting wall is closed by mirror extension: the boundary node gets
//! a ghost neighbor carrying the reflected state of its interior neighbor
//! and the mirrored edge geometry, and its effective mass doubles to the
//! interior value. Simulating the half domain with these ghosts reproduces
//! the mirror-symmetric solution of the doubled domain exactly. Inlets pin
//! the ghost to a prescribed exterior state; outlets use the one-sided
//! (do-nothing) form that the boundary rows of the operators already
//! provide.

use crate::error::SolverError;
use crate::mesh::{MeshTopology, NodeKind};
use crate::model::FluxModel;
use crate::Result;

/// Boundary condition for one end of a 1D domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideBc<const M: usize> {
    Wall,
    Inflow([f64; M]),
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition<const M: usize> {
    Periodic,
    Sides {
        left: SideBc<M>,
        right: SideBc<M>,
    },
}

/// How a ghost node obtains its state before each stage.
#[derive(Debug, Clone, Copy)]
pub enum GhostRule<const M: usize> {
    /// Reflected state of the mirror source node.
    Reflect { source: u32 },
    /// Prescribed exterior state.
    Fixed { state: [f64; M] },
}

#[derive(Debug, Clone, Copy)]
pub struct SysEdge<const D: usize> {
    pub i: u32,
    pub j: u32,
    pub c: [f64; D],
    pub c_norm: f64,
    /// Consistent mass entry, used by the Galerkin target flux.
    pub m_c: f64,
}

/// Extended system: `n_real` mesh nodes followed by ghost nodes. State
/// vectors carry `n_total` entries; only the real prefix is evolved.
pub struct EdgeSystem<const M: usize, const D: usize> {
    pub n_real: usize,
    pub n_total: usize,
    /// Effective masses used by the update (doubled at wall/inflow nodes).
    pub mass: Vec<f64>,
    /// Physical lumped masses of the real nodes (conservation, norms).
    pub mass_phys: Vec<f64>,
    pub edges: Vec<SysEdge<D>>,
    pub ghosts: Vec<(u32, GhostRule<M>)>,
    pub periodic: bool,
}

impl<const M: usize, const D: usize> EdgeSystem<M, D> {
    /// Assemble the system for a mesh and boundary condition. 2D meshes
    /// are periodic; 1D meshes may attach ghosts at tagged end nodes.
    pub fn build(mesh: &MeshTopology<D>, bc: &BoundaryCondition<M>) -> Result<Self> {
        let n_real = mesh.n_nodes;
        let mut edges: Vec<SysEdge<D>> = mesh
            .edges
            .iter()
            .map(|e| SysEdge {
                i: e.i,
                j: e.j,
                c: e.c,
                c_norm: crate::algebra::dir_norm(&e.c),
                m_c: e.m,
            })
            .collect();
        let mut mass = mesh.lumped_mass.clone();
        let mass_phys = mesh.lumped_mass.clone();
        let mut ghosts = Vec::new();

        match bc {
            BoundaryCondition::Periodic => {
                if !mesh.periodic {
                    return Err(SolverError::InvalidConfig(
                        "periodic boundary condition on a non-periodic mesh".into(),
                    ));
                }
            }
            BoundaryCondition::Sides { left, right } => {
                if mesh.periodic {
                    return Err(SolverError::InvalidConfig(
                        "side boundary conditions on a periodic mesh".into(),
                    ));
                }
                if D != 1 {
                    return Err(SolverError::InvalidConfig(
                        "side boundary conditions are 1D only".into(),
                    ));
                }
                let mut next_ghost = n_real as u32;
                // (boundary node, interior neighbor, side bc)
                let ends = [(0usize, 1usize, left), (n_real - 1, n_real - 2, right)];
                for (node, inner, side) in ends {
                    debug_assert!(mesh.node_kind[node] != NodeKind::Interior);
                    let rule = match side {
                        SideBc::Outflow => continue,
                        SideBc::Wall => GhostRule::Reflect {
                            source: inner as u32,
                        },
                        SideBc::Inflow(state) => GhostRule::Fixed { state: *state },
                    };
                    // mirrored geometry of the single interior edge at `node`
                    let e = mesh
                        .edges
                        .iter()
                        .find(|e| e.i as usize == node || e.j as usize == node)
                        .ok_or_else(|| SolverError::InvalidMesh("isolated boundary node".into()))?;
                    let c_inner: [f64; D] = if e.i as usize == node {
                        e.c
                    } else {
                        std::array::from_fn(|d| -e.c[d])
                    };
                    let ghost = next_ghost;
                    next_ghost += 1;
                    edges.push(SysEdge {
                        i: node as u32,
                        j: ghost,
                        c: std::array::from_fn(|d| -c_inner[d]),
                        c_norm: crate::algebra::dir_norm(&c_inner),
                        m_c: e.m,
                    });
                    ghosts.push((ghost, rule));
                    // boundary node becomes interior-like under mirror extension
                    mass[node] *= 2.0;
                }
            }
        }

        let n_total = n_real + ghosts.len();
        // ghost slots carry a copy of a real mass; never used in updates
        mass.resize(n_total, mass_phys[0]);
        Ok(Self {
            n_real,
            n_total,
            mass,
            mass_phys,
            edges,
            ghosts,
            periodic: matches!(bc, BoundaryCondition::Periodic),
        })
    }

    /// Synthetic system for tests: explicit nodes and edges, no ghosts.
    pub fn synthetic(mass: Vec<f64>, edges: Vec<SysEdge<D>>) -> Self {
        let n = mass.len();
        Self {
            n_real: n,
            n_total: n,
            mass: mass.clone(),
            mass_phys: mass,
            edges,
            ghosts: Vec::new(),
            periodic: true,
        }
    }

    /// Write ghost states derived from the current solution.
    pub fn refresh_ghosts<F: FluxModel<M, D>>(&self, model: &F, u: &mut [[f64; M]]) {
        for (ghost, rule) in &self.ghosts {
            let g = *ghost as usize;
            u[g] = match rule {
                GhostRule::Reflect { source } => model.reflect(&u[*source as usize]),
                GhostRule::Fixed { state } => *state,
            };
        }
    }

    /// Mirror per-node auxiliary data (e.g. low-order rates) into ghosts:
    /// reflected for walls, zero for pinned exterior states.
    pub fn refresh_ghost_rates<F: FluxModel<M, D>>(&self, model: &F, rates: &mut [[f64; M]]) {
        for (ghost, rule) in &self.ghosts {
            let g = *ghost as usize;
            rates[g] = match rule {
                GhostRule::Reflect { source } => model.reflect(&rates[*source as usize]),
                GhostRule::Fixed { .. } => [0.0; M],
            };
        }
    }

    /// Conserved totals `Σ m_i u_i` over the real nodes.
    pub fn conserved_totals(&self, u: &[[f64; M]]) -> [f64; M] {
        let mut tot = [0.0; M];
        for i in 0..self.n_real {
            for k in 0..M {
                tot[k] += self.mass_phys[i] * u[i][k];
            }
        }
        tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_line_mesh, BoundaryKind};
    use crate::model::ShallowWater;

    #[test]
    fn wall_ghosts_mirror_geometry_and_state() {
        let mesh = build_line_mesh(4, [0.0, 1.0], BoundaryKind::Wall).unwrap();
        let sys = EdgeSystem::<2, 1>::build(
            &mesh,
            &BoundaryCondition::Sides {
                left: SideBc::Wall,
                right: SideBc::Wall,
            },
        )
        .unwrap();
        assert_eq!(sys.n_real, 5);
        assert_eq!(sys.n_total, 7);
        // doubled boundary masses
        assert!((sys.mass[0] - 0.25).abs() < 1e-15);
        assert!((sys.mass[4] - 0.25).abs() < 1e-15);
        assert!((sys.mass_phys[0] - 0.125).abs() < 1e-15);

        let model = ShallowWater::new(1.0);
        let mut u = vec![[0.0f64; 2]; sys.n_total];
        for i in 0..5 {
            u[i] = [1.0 + i as f64, 0.3 * i as f64];
        }
        sys.refresh_ghosts(&model, &mut u);
        // left ghost mirrors node 1, right ghost mirrors node 3
        assert_eq!(u[5], model.reflect(&u[1]));
        assert_eq!(u[6], model.reflect(&u[3]));

        // ghost edge geometry mirrors the interior edge
        let ge = sys.edges.iter().find(|e| e.j == 5).unwrap();
        assert_eq!(ge.i, 0);
        assert!((ge.c[0] + 0.5).abs() < 1e-15);
        assert!((ge.m_c - 0.25 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn inflow_outflow_ghosts() {
        let mesh = build_line_mesh(4, [0.0, 1.0], BoundaryKind::InflowOutflow).unwrap();
        let sys = EdgeSystem::<2, 1>::build(
            &mesh,
            &BoundaryCondition::Sides {
                left: SideBc::Inflow([2.0, 1.0]),
                right: SideBc::Outflow,
            },
        )
        .unwrap();
        assert_eq!(sys.n_total, 6); // one ghost on the left only
        assert!((sys.mass[0] - 0.25).abs() < 1e-15); // doubled
        assert!((sys.mass[4] - 0.125).abs() < 1e-15); // do-nothing outlet keeps h/2

        let model = ShallowWater::new(1.0);
        let mut u = vec![[0.0f64; 2]; sys.n_total];
        sys.refresh_ghosts(&model, &mut u);
        assert_eq!(u[5], [2.0, 1.0]);
    }

    #[test]
    fn mismatched_bc_rejected() {
        let mesh = build_line_mesh(4, [0.0, 1.0], BoundaryKind::Periodic).unwrap();
        assert!(EdgeSystem::<2, 1>::build(
            &mesh,
            &BoundaryCondition::Sides {
                left: SideBc::Wall,
                right: SideBc::Wall,
            },
        )
        .is_err());
    }
}
