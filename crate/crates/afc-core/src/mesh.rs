//! Uniform P1 line meshes and Q1 tensor-product quad meshes together with
//! the algebraic operators the edge-based solvers consume: lumped masses
//! `m_i`, consistent mass entries `m_ij`, and discrete gradient vectors
//! `c_ij = ∫ φ_i ∇φ_j`.
//!
//! All operators are assembled from closed-form element matrices (exact
//! integration of products of hat / bilinear basis functions), so there is
//! no quadrature error to account for in the operator identities:
//!
//! * `Σ_j c_ij = 0` per node (partition of unity),
//! * `c_ji = -c_ij` for every stored edge,
//! * `m_i = Σ_j m_ij` (row sums of the consistent mass matrix).

use std::collections::HashMap;

use crate::error::SolverError;
use crate::Result;

/// Boundary treatment a line mesh is built for. Quads are periodic only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    /// Reflecting walls at both ends.
    Wall,
    /// Inlet on the left, outlet on the right.
    InflowOutflow,
    /// Outlet on both ends.
    Transmissive,
}

/// Per-node boundary tag. The mesh only classifies nodes; ghost-state
/// closures are applied by the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Wall,
    Inflow,
    Outflow,
}

/// One stored (undirected) edge with the gradient vector oriented `i → j`.
/// The reverse orientation is implied by antisymmetry.
#[derive(Debug, Clone, Copy)]
pub struct MeshEdge<const D: usize> {
    pub i: u32,
    pub j: u32,
    /// `c_ij = ∫ φ_i ∇φ_j` (volume/length units).
    pub c: [f64; D],
    /// Consistent mass entry `m_ij = ∫ φ_i φ_j`.
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct MeshTopology<const D: usize> {
    pub n_nodes: usize,
    pub coords: Vec<[f64; D]>,
    /// Lumped masses `m_i` (row sums of the consistent mass matrix).
    pub lumped_mass: Vec<f64>,
    /// Diagonal consistent mass entries `m_ii`.
    pub mass_diag: Vec<f64>,
    /// Diagonal gradient entries `c_ii` (zero except at non-periodic ends).
    pub c_diag: Vec<[f64; D]>,
    pub edges: Vec<MeshEdge<D>>,
    pub node_kind: Vec<NodeKind>,
    pub periodic: bool,
    /// Grid spacing per direction.
    pub spacing: [f64; D],
    /// Stencil adjacency (neighbors excluding self), CSR layout.
    adj_offsets: Vec<u32>,
    adj_targets: Vec<u32>,
}

impl<const D: usize> MeshTopology<D> {
    /// Stencil of node `i` excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let lo = self.adj_offsets[i] as usize;
        let hi = self.adj_offsets[i + 1] as usize;
        &self.adj_targets[lo..hi]
    }

    pub fn total_volume(&self) -> f64 {
        self.lumped_mass.iter().sum()
    }
}

/// Directed COO accumulator keyed `(i, j)`.
struct Assembler<const D: usize> {
    n: usize,
    // (c, m) per directed pair
    coo: HashMap<(u32, u32), ([f64; D], f64)>,
    mass_diag: Vec<f64>,
    lumped: Vec<f64>,
    c_diag: Vec<[f64; D]>,
}

impl<const D: usize> Assembler<D> {
    fn new(n: usize) -> Self {
        Self {
            n,
            coo: HashMap::new(),
            mass_diag: vec![0.0; n],
            lumped: vec![0.0; n],
            c_diag: vec![[0.0; D]; n],
        }
    }

    fn add(&mut self, i: u32, j: u32, c: [f64; D], m: f64) {
        if i == j {
            self.mass_diag[i as usize] += m;
            self.lumped[i as usize] += m;
            for d in 0..D {
                self.c_diag[i as usize][d] += c[d];
            }
            return;
        }
        self.lumped[i as usize] += m;
        let e = self.coo.entry((i, j)).or_insert(([0.0; D], 0.0));
        for d in 0..D {
            e.0[d] += c[d];
        }
        e.1 += m;
    }

    fn finish(
        self,
        coords: Vec<[f64; D]>,
        node_kind: Vec<NodeKind>,
        periodic: bool,
        spacing: [f64; D],
    ) -> Result<MeshTopology<D>> {
        let mut edges = Vec::with_capacity(self.coo.len() / 2);
        for (&(i, j), &(c, m)) in &self.coo {
            if i < j {
                let (cr, mr) = self.coo.get(&(j, i)).copied().ok_or_else(|| {
                    SolverError::InvalidMesh(format!("one-sided coupling {i}-{j}"))
                })?;
                for d in 0..D {
                    debug_assert!(
                        (c[d] + cr[d]).abs() <= 1e-14,
                        "gradient antisymmetry violated on edge ({i},{j})"
                    );
                }
                debug_assert!((m - mr).abs() <= 1e-14 * (1.0 + m.abs()));
                edges.push(MeshEdge { i, j, c, m });
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));

        let n = self.n;
        let mut degree = vec![0u32; n];
        for e in &edges {
            degree[e.i as usize] += 1;
            degree[e.j as usize] += 1;
        }
        let mut adj_offsets = vec![0u32; n + 1];
        for i in 0..n {
            adj_offsets[i + 1] = adj_offsets[i] + degree[i];
        }
        let mut cursor = adj_offsets.clone();
        let mut adj_targets = vec![0u32; adj_offsets[n] as usize];
        for e in &edges {
            adj_targets[cursor[e.i as usize] as usize] = e.j;
            cursor[e.i as usize] += 1;
            adj_targets[cursor[e.j as usize] as usize] = e.i;
            cursor[e.j as usize] += 1;
        }

        Ok(MeshTopology {
            n_nodes: n,
            coords,
            lumped_mass: self.lumped,
            mass_diag: self.mass_diag,
            c_diag: self.c_diag,
            edges,
            node_kind,
            periodic,
            spacing,
            adj_offsets,
            adj_targets,
        })
    }
}

/// Element matrices for one P1 cell of width `h`: `m_cell[a][b] = ∫ φ_a φ_b`
/// and `c_cell[a][b] = ∫ φ_a φ_b'` with local nodes `a, b ∈ {left, right}`.
fn p1_cell(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let c = [[-0.5, 0.5], [-0.5, 0.5]];
    (m, c)
}

/// Uniform P1 mesh of `n_cells` cells on `[a, b]`.
///
/// Periodic meshes identify the endpoint nodes and have `n_cells` nodes;
/// all other kinds keep `n_cells + 1` nodes and tag the two end nodes.
pub fn build_line_mesh(
    n_cells: usize,
    interval: [f64; 2],
    boundary: BoundaryKind,
) -> Result<MeshTopology<1>> {
    let [a, b] = interval;
    if n_cells < 2 {
        return Err(SolverError::InvalidMesh(format!(
            "need at least 2 cells, got {n_cells}"
        )));
    }
    if !(b > a) || !(b - a).is_finite() {
        return Err(SolverError::InvalidMesh(format!(
            "degenerate interval [{a}, {b}]"
        )));
    }
    let h = (b - a) / n_cells as f64;
    let periodic = boundary == BoundaryKind::Periodic;
    let n_nodes = if periodic { n_cells } else { n_cells + 1 };

    let coords: Vec<[f64; 1]> = (0..n_nodes).map(|i| [a + i as f64 * h]).collect();
    let mut node_kind = vec![NodeKind::Interior; n_nodes];
    if !periodic {
        let (left, right) = match boundary {
            BoundaryKind::Wall => (NodeKind::Wall, NodeKind::Wall),
            BoundaryKind::InflowOutflow => (NodeKind::Inflow, NodeKind::Outflow),
            BoundaryKind::Transmissive => (NodeKind::Outflow, NodeKind::Outflow),
            BoundaryKind::Periodic => unreachable!(),
        };
        node_kind[0] = left;
        node_kind[n_nodes - 1] = right;
    }

    let (mc, cc) = p1_cell(h);
    let mut asm = Assembler::<1>::new(n_nodes);
    for cell in 0..n_cells {
        let nodes = [cell as u32, ((cell + 1) % n_nodes) as u32];
        for (la, &ga) in nodes.iter().enumerate() {
            for (lb, &gb) in nodes.iter().enumerate() {
                asm.add(ga, gb, [cc[la][lb]], mc[la][lb]);
            }
        }
    }
    asm.finish(coords, node_kind, periodic, [h])
}

/// Uniform periodic Q1 mesh of `nx × ny` cells on `[a,b] × [c,d]`.
pub fn build_quad_mesh(
    nx: usize,
    ny: usize,
    rect: [[f64; 2]; 2],
    boundary: BoundaryKind,
) -> Result<MeshTopology<2>> {
    let [[a, b], [c, d]] = rect;
    if nx < 2 || ny < 2 {
        return Err(SolverError::InvalidMesh(format!(
            "need at least 2 cells per direction, got {nx}x{ny}"
        )));
    }
    if !(b > a) || !(d > c) {
        return Err(SolverError::InvalidMesh("non-positive extents".into()));
    }
    if boundary != BoundaryKind::Periodic {
        return Err(SolverError::InvalidMesh(
            "quad meshes support periodic boundaries only".into(),
        ));
    }
    let hx = (b - a) / nx as f64;
    let hy = (d - c) / ny as f64;
    let n_nodes = nx * ny;
    let id = |ix: usize, iy: usize| -> u32 { ((iy % ny) * nx + (ix % nx)) as u32 };

    let mut coords = Vec::with_capacity(n_nodes);
    for iy in 0..ny {
        for ix in 0..nx {
            coords.push([a + ix as f64 * hx, c + iy as f64 * hy]);
        }
    }

    let (mx, cx) = p1_cell(hx);
    let (my, cy) = p1_cell(hy);
    let mut asm = Assembler::<2>::new(n_nodes);
    // local corner (lx, ly) with lx, ly in {0, 1}
    for celly in 0..ny {
        for cellx in 0..nx {
            let corner = |lx: usize, ly: usize| id(cellx + lx, celly + ly);
            for ay in 0..2 {
                for ax in 0..2 {
                    let ga = corner(ax, ay);
                    for by in 0..2 {
                        for bx in 0..2 {
                            let gb = corner(bx, by);
                            let m = mx[ax][bx] * my[ay][by];
                            let cvec = [cx[ax][bx] * my[ay][by], mx[ax][bx] * cy[ay][by]];
                            asm.add(ga, gb, cvec, m);
                        }
                    }
                }
            }
        }
    }
    asm.finish(
        coords,
        vec![NodeKind::Interior; n_nodes],
        true,
        [hx, hy],
    )
}
