//! Discrete pencil `(K, M)` for the rescaled forms on `Omega^a` and
//! `Omega^b`, with Dirichlet conditions and the junction tie
//! `v^a(x', 0) = v^b(r x', 0)` eliminated by substitution.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::ThinParams;
use crate::mesh::{Cell, Mesh, NodeTags, Part};
use crate::scalar::Real;
use crate::sparse::{SparseSymmetric, TripletBuilder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("junction node {node} maps to {point:?}, outside the Omega^b surface mesh")]
    PointLocationFailure { node: usize, point: Vec<f64> },
    #[error("mass matrix row {row} is empty after constraint elimination")]
    SingularMass { row: usize },
    #[error("junction scale r = {0} outside (0, 1]")]
    BadScale(f64),
}

/// One junction tie: `u[slave] = sum_j w_j u[master_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tie<T> {
    pub slave: usize,
    pub masters: Vec<(usize, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet<T> {
    /// Nodes held at zero.
    pub dirichlet: Vec<usize>,
    pub ties: Vec<Tie<T>>,
}

/// Dirichlet nodes on the top of `Omega^a` and the lateral boundary of
/// `Omega^b`; every `JUNCTION_A` node tied to the interpolated `Omega^b`
/// surface trace at `r x'`.
pub fn build_constraints<T: Real>(mesh: &Mesh<T>, r: T) -> Result<ConstraintSet<T>, AssemblyError> {
    if !(r > T::zero() && r <= T::one()) {
        return Err(AssemblyError::BadScale(r.as_f64()));
    }
    let fixed = NodeTags::DIRICHLET_TOP | NodeTags::DIRICHLET_LATERAL_B;
    let dirichlet: Vec<usize> = (0..mesh.node_count()).filter(|&n| mesh.tags[n].intersects(fixed)).collect();
    let mut ties = Vec::new();
    for slave in mesh.nodes_tagged(NodeTags::JUNCTION_A) {
        if mesh.tags[slave].contains(NodeTags::DIRICHLET_TOP) {
            continue;
        }
        let point: Vec<T> = mesh.cross_coords(slave).iter().map(|&x| r * x).collect();
        let masters = mesh.surface_stencil(&point).ok_or_else(|| AssemblyError::PointLocationFailure {
            node: slave,
            point: point.iter().map(|v| v.as_f64()).collect(),
        })?;
        ties.push(Tie { slave, masters });
    }
    Ok(ConstraintSet { dirichlet, ties })
}

/// Map between free unknowns and mesh nodes: `u_full = T u_free`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap<T> {
    /// Node of each free unknown.
    pub free_nodes: Vec<usize>,
    /// Free index of each node, if the node is free.
    pub node_to_free: Vec<Option<usize>>,
    /// Row of `T` for each node: `(free index, weight)`.
    pub rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> DofMap<T> {
    pub fn new(node_count: usize, constraints: &ConstraintSet<T>) -> Self {
        let mut fixed = vec![false; node_count];
        let mut slave = vec![false; node_count];
        constraints.dirichlet.iter().for_each(|&n| fixed[n] = true);
        constraints.ties.iter().for_each(|t| slave[t.slave] = true);
        let mut node_to_free = vec![None; node_count];
        let mut free_nodes = Vec::new();
        for n in 0..node_count {
            if !fixed[n] && !slave[n] {
                node_to_free[n] = Some(free_nodes.len());
                free_nodes.push(n);
            }
        }
        let mut rows: Vec<Vec<(usize, T)>> =
            node_to_free.iter().map(|f| f.map(|i| vec![(i, T::one())]).unwrap_or_default()).collect();
        for tie in &constraints.ties {
            rows[tie.slave] =
                tie.masters.iter().filter_map(|&(m, w)| node_to_free[m].map(|i| (i, w))).collect();
        }
        Self { free_nodes, node_to_free, rows }
    }

    pub fn free_count(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    /// Nodal values `T x`.
    pub fn expand(&self, x: &[T]) -> Vec<T> {
        self.rows.iter().map(|row| row.iter().map(|&(i, w)| w * x[i]).sum()).collect()
    }

    /// `T^T A T`.
    pub fn reduce(&self, a: &SparseSymmetric<T>) -> SparseSymmetric<T> {
        let mut b = TripletBuilder::with_capacity(self.free_count(), a.nnz_lower() * 2);
        for i in 0..a.order() {
            let ti = &self.rows[i];
            if ti.is_empty() {
                continue;
            }
            for (j, v) in a.row(i) {
                let tj = &self.rows[j];
                if i == j {
                    // v * ti^T ti is symmetric: push its lower half once.
                    for &(p, wp) in ti {
                        for &(q, wq) in ti {
                            if p >= q {
                                b.push(p, q, v * wp * wq);
                            }
                        }
                    }
                } else {
                    // v * (ti^T tj + tj^T ti): pushing ti^T tj mirrors the transpose in.
                    for &(p, wp) in ti {
                        for &(q, wq) in tj {
                            let x = v * wp * wq;
                            b.push(p, q, if p == q { x + x } else { x });
                        }
                    }
                }
            }
        }
        b.build()
    }
}

/// Coefficients of the two forms on each part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormWeights<T> {
    pub a_cross: T,
    pub a_axial: T,
    pub a_mass: T,
    pub b_cross: T,
    pub b_axial: T,
    pub b_mass: T,
}

impl<T: Real> FormWeights<T> {
    pub fn new(params: &ThinParams<T>, dim: usize) -> Self {
        let w = params.volume_ratio(dim);
        Self {
            a_cross: T::one() / (params.r * params.r),
            a_axial: T::one(),
            a_mass: T::one(),
            b_cross: w,
            b_axial: w / (params.h * params.h),
            b_mass: w,
        }
    }

    /// `(cross-section diffusivity, axial diffusivity, mass weight)` on a part.
    pub fn for_part(&self, part: Part) -> (T, T, T) {
        match part {
            Part::A => (self.a_cross, self.a_axial, self.a_mass),
            Part::B => (self.b_cross, self.b_axial, self.b_mass),
        }
    }
}

/// Quadrature point of a cell with the Q1 basis evaluated there.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<T> {
    pub x: [T; 3],
    pub weight: T,
    pub values: [T; 8],
    pub grads: [[T; 3]; 8],
}

/// Two-point Gauss rule per axis on an axis-aligned cell.
pub fn cell_quadrature<T: Real>(cell: &Cell<T>, dim: usize) -> Vec<QuadPoint<T>> {
    let g = T::one() / T::lit(3.0).sqrt();
    let corners = Cell::<T>::corner_count(dim);
    let mut out = Vec::with_capacity(corners);
    for point in 0..corners {
        let mut x = [T::zero(); 3];
        let mut t = [T::zero(); 3];
        let mut weight = T::one();
        for a in 0..dim {
            let half = (cell.hi[a] - cell.lo[a]) / T::lit(2.0);
            let xi = if (point >> a) & 1 == 1 { g } else { -g };
            x[a] = cell.lo[a] + half * (T::one() + xi);
            t[a] = (T::one() + xi) / T::lit(2.0);
            weight *= half;
        }
        let mut values = [T::zero(); 8];
        let mut grads = [[T::zero(); 3]; 8];
        for c in 0..corners {
            let factor = |a: usize| if (c >> a) & 1 == 1 { t[a] } else { T::one() - t[a] };
            values[c] = (0..dim).map(factor).fold(T::one(), |p, f| p * f);
            for a in 0..dim {
                let sign = if (c >> a) & 1 == 1 { T::one() } else { -T::one() };
                let others = (0..dim).filter(|&b| b != a).map(factor).fold(T::one(), |p, f| p * f);
                grads[c][a] = sign * others / (cell.hi[a] - cell.lo[a]);
            }
        }
        out.push(QuadPoint { x, weight, values, grads });
    }
    out
}

/// Element stiffness and mass for per-axis diffusivities `kappa`.
pub fn element_matrices<T: Real>(cell: &Cell<T>, dim: usize, kappa: &[T; 3], mass: T) -> ([[T; 8]; 8], [[T; 8]; 8]) {
    let n = Cell::<T>::corner_count(dim);
    let mut ke = [[T::zero(); 8]; 8];
    let mut me = [[T::zero(); 8]; 8];
    for qp in cell_quadrature(cell, dim) {
        for i in 0..n {
            for j in 0..n {
                let mut k = T::zero();
                for a in 0..dim {
                    k += kappa[a] * qp.grads[i][a] * qp.grads[j][a];
                }
                ke[i][j] += qp.weight * k;
                me[i][j] += qp.weight * mass * qp.values[i] * qp.values[j];
            }
        }
    }
    (ke, me)
}

fn kappa_for<T: Real>(weights: &FormWeights<T>, part: Part, dim: usize) -> ([T; 3], T) {
    let (cross, axial, mass) = weights.for_part(part);
    let mut kappa = [cross; 3];
    kappa[dim - 1] = axial;
    (kappa, mass)
}

/// Unconstrained `(K, M)` over every mesh node (parts decoupled).
pub fn assemble_full<T: Real>(mesh: &Mesh<T>, weights: &FormWeights<T>) -> (SparseSymmetric<T>, SparseSymmetric<T>) {
    let dim = mesh.dim();
    let n = Cell::<T>::corner_count(dim);
    let chunk = 256;
    let parts: Vec<(TripletBuilder<T>, TripletBuilder<T>)> = mesh
        .cells
        .par_chunks(chunk)
        .map(|cells| {
            let cap = cells.len() * n * (n + 1) / 2;
            let mut kb = TripletBuilder::with_capacity(mesh.node_count(), cap);
            let mut mb = TripletBuilder::with_capacity(mesh.node_count(), cap);
            for cell in cells {
                let (kappa, mass) = kappa_for(weights, cell.part, dim);
                let (ke, me) = element_matrices(cell, dim, &kappa, mass);
                for i in 0..n {
                    for j in 0..=i {
                        kb.push(cell.nodes[i], cell.nodes[j], ke[i][j]);
                        mb.push(cell.nodes[i], cell.nodes[j], me[i][j]);
                    }
                }
            }
            (kb, mb)
        })
        .collect();
    let mut kb = TripletBuilder::new(mesh.node_count());
    let mut mb = TripletBuilder::new(mesh.node_count());
    for (k, m) in parts {
        kb.extend(k);
        mb.extend(m);
    }
    (kb.build(), mb.build())
}

/// Constrained pencil on the free unknowns.
#[derive(Debug, Clone)]
pub struct Pencil<T> {
    pub k: SparseSymmetric<T>,
    pub m: SparseSymmetric<T>,
    pub dofs: DofMap<T>,
    pub params: ThinParams<T>,
    pub dim: usize,
}

impl<T: Real> Pencil<T> {
    pub fn order(&self) -> usize {
        self.k.order()
    }

    /// Same pencil with both matrices multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self { k: self.k.scaled(factor), m: self.m.scaled(factor), ..self.clone() }
    }

    /// Debug listing of both matrices in coordinate format.
    pub fn to_coordinate_text(&self) -> String {
        format!("# K\n{}# M\n{}", self.k.to_coordinate_text(), self.m.to_coordinate_text())
    }
}

pub fn assemble_pencil<T: Real>(
    mesh: &Mesh<T>,
    params: &ThinParams<T>,
    constraints: &ConstraintSet<T>,
) -> Result<Pencil<T>, AssemblyError> {
    let dim = mesh.dim();
    let weights = FormWeights::new(params, dim);
    let (k_full, m_full) = assemble_full(mesh, &weights);
    let dofs = DofMap::new(mesh.node_count(), constraints);
    let k = dofs.reduce(&k_full);
    let m = dofs.reduce(&m_full);
    if let Some(row) = m.diagonal().iter().position(|&d| !(d > T::zero())) {
        return Err(AssemblyError::SingularMass { row });
    }
    Ok(Pencil { k, m, dofs, params: *params, dim })
}

/// Convenience: constraints plus pencil.
pub fn build_pencil<T: Real>(mesh: &Mesh<T>, params: &ThinParams<T>) -> Result<Pencil<T>, AssemblyError> {
    let constraints = build_constraints(mesh, params.r)?;
    assemble_pencil(mesh, params, &constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::geometry::{make_geometry, CrossSection};
    use crate::mesh::{make_mesh, Grading, Levels};

    fn interval_mesh(m: Levels) -> Mesh<f64> {
        let g = make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap();
        make_mesh(&g, m, Grading::none()).unwrap()
    }

    fn kron(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 4]; 4] {
        // Local index bit 0 selects axis 0, bit 1 axis 1.
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = a[i & 1][j & 1] * b[i >> 1][j >> 1];
            }
        }
        out
    }

    #[test]
    fn element_matrices_match_kronecker_closed_form() {
        let (wx, wy) = (0.3, 0.7);
        let cell = Cell { part: Part::A, nodes: [0; 8], lo: [0.1, -0.2, 0.0], hi: [0.1 + wx, -0.2 + wy, 0.0] };
        let k1 = |h: f64| [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let m1 = |h: f64| [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let (kx, ky, mu) = (2.5, 0.4, 1.7);
        let (ke, me) = element_matrices(&cell, 2, &[kx, ky, 0.0], mu);
        let kref_x = kron(&k1(wx), &m1(wy));
        let kref_y = kron(&m1(wx), &k1(wy));
        let mref = kron(&m1(wx), &m1(wy));
        for i in 0..4 {
            for j in 0..4 {
                assert!((ke[i][j] - (kx * kref_x[i][j] + ky * kref_y[i][j])).abs() < 1e-13);
                assert!((me[i][j] - mu * mref[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let mesh = interval_mesh(Levels { m_omega: 4, m_a: 3, m_b: 2 });
        let p = ThinParams::new(0.25, 0.25).unwrap();
        let (k, _) = assemble_full(&mesh, &FormWeights::new(&p, 2));
        let ones = vec![1.0; mesh.node_count()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn total_weighted_mass() {
        let mesh = interval_mesh(Levels { m_omega: 4, m_a: 4, m_b: 2 });
        let p = ThinParams::new(0.25, 0.25).unwrap();
        let (_, m) = assemble_full(&mesh, &FormWeights::new(&p, 2));
        let ones = vec![1.0; mesh.node_count()];
        assert!((m.bilinear(&ones, &ones) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tie_weights() {
        let mesh = interval_mesh(Levels { m_omega: 4, m_a: 2, m_b: 2 });
        let c = build_constraints(&mesh, 0.25).unwrap();
        for tie in &c.ties {
            let s: f64 = tie.masters.iter().map(|m| m.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(!c.dirichlet.contains(&tie.slave));
            let x = mesh.cross_coords(tie.slave)[0];
            if x == 0.0 {
                assert_eq!(tie.masters.len(), 1);
                assert_eq!(mesh.cross_coords(tie.masters[0].0)[0], 0.0);
            }
            if x == 0.5 {
                // 0.125 lies between surface nodes 0 and 0.5.
                let xs: Vec<f64> = tie.masters.iter().map(|m| mesh.cross_coords(m.0)[0]).collect();
                assert_eq!(xs, vec![0.0, 0.5]);
                assert!((tie.masters[0].1 - 0.75).abs() < 1e-15);
            }
        }
        // Constant 1 on the surface reproduces 1 at every slave.
        for tie in &c.ties {
            let v: f64 = tie.masters.iter().map(|m| m.1 * 1.0).sum();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_matches_dense_triple_product() {
        let mesh = interval_mesh(Levels { m_omega: 4, m_a: 2, m_b: 2 });
        let p = ThinParams::new(0.3, 0.2).unwrap();
        let c = build_constraints(&mesh, p.r).unwrap();
        let (k_full, _) = assemble_full(&mesh, &FormWeights::new(&p, 2));
        let dofs = DofMap::new(mesh.node_count(), &c);
        let mut t = dense::zeros::<f64>(mesh.node_count(), dofs.free_count());
        for (i, row) in dofs.rows.iter().enumerate() {
            for &(j, w) in row {
                t[i][j] = w;
            }
        }
        let reference = dense::matmul(&dense::transpose(&t), &dense::matmul(&k_full.to_dense(), &t));
        let reduced = dofs.reduce(&k_full).to_dense();
        for (ra, rb) in reduced.iter().zip(&reference) {
            for (a, b) in ra.iter().zip(rb) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pencil_is_symmetric_positive_definite() {
        let mesh = interval_mesh(Levels::uniform(4));
        let p = ThinParams::new(0.25, 0.25).unwrap();
        let pencil = build_pencil(&mesh, &p).unwrap();
        assert_eq!(pencil.k.order(), pencil.m.order());
        assert!(dense::cholesky(&pencil.k.to_dense()).is_some());
        assert!(dense::cholesky(&pencil.m.to_dense()).is_some());
        let text = pencil.to_coordinate_text();
        assert!(text.lines().filter(|l| !l.starts_with('#')).all(|l| l.split_whitespace().count() == 3));
    }

    #[test]
    fn rejects_bad_scale() {
        let mesh = interval_mesh(Levels::uniform(2));
        assert!(matches!(build_constraints(&mesh, 0.0), Err(AssemblyError::BadScale(_))));
    }
}
