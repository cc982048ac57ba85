//! Tensor-product meshes of the two rescaled parts
//! `Omega^a = omega x (0, 1)` and `Omega^b = omega x (-1, 0)`.
//!
//! Coordinates are stored as `[x'_1, x'_2, x_N]` for `N = 3` and
//! `[x', x_N, 0]` for `N = 2`, so the axial coordinate always sits at index
//! `dim - 1`. The two parts never share a node: the junction is imposed
//! later as a constraint.

use std::fmt::Write as _;

use bitflags::bitflags;
use thiserror::Error;

use crate::geometry::Geometry;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("level {name} must be at least 1")]
    BadLevel { name: &'static str },
    #[error("grading ratio {0} outside (0, 1]")]
    BadGrading(f64),
    #[error("degenerate cell of width {width:e} on axis {axis}")]
    DegenerateCell { axis: usize, width: f64 },
}

/// Smallest admissible cell width.
pub const MIN_CELL_WIDTH: f64 = 1e-14;

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct NodeTags: u8 {
        /// `x_N = 1` face of `Omega^a`.
        const DIRICHLET_TOP = 0b0001;
        /// `boundary(omega) x [-1, 0]`.
        const DIRICHLET_LATERAL_B = 0b0010;
        /// `Omega^a` nodes at `x_N = 0`.
        const JUNCTION_A = 0b0100;
        /// `Omega^b` nodes at `x_N = 0`.
        const JUNCTION_B_SURFACE = 0b1000;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    A,
    B,
}

/// Cell counts: per cross-section axis, axial in `Omega^a`, axial in `Omega^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Levels {
    pub m_omega: usize,
    pub m_a: usize,
    pub m_b: usize,
}

impl Levels {
    pub fn uniform(m: usize) -> Self {
        Self { m_omega: m, m_a: m, m_b: m }
    }
}

/// Geometric refinement of the `Omega^b` cross-section toward `0'`: each
/// origin-adjacent base cell of width `w` is split at `w * ratio^j`,
/// `j = 1..=origin_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading<T> {
    pub origin_cells: usize,
    pub ratio: T,
}

impl<T: Real> Grading<T> {
    pub fn none() -> Self {
        Self { origin_cells: 0, ratio: T::one() }
    }

    /// Fewest splits bringing a base width `base` down to at most `target`.
    pub fn reaching(base: T, target: T, ratio: T) -> Self {
        let mut origin_cells = 0;
        let mut w = base;
        if ratio < T::one() {
            while w > target && origin_cells < 200 {
                w = w * ratio;
                origin_cells += 1;
            }
        }
        Self { origin_cells, ratio }
    }
}

/// Node and cell layout of one part.
#[derive(Debug, Clone)]
pub struct PartGrid<T> {
    /// Coordinates along each axis in storage order (cross-section axes, then axial).
    pub axes: Vec<Vec<T>>,
    /// Global index of this part's first node.
    pub offset: usize,
}

impl<T: Real> PartGrid<T> {
    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    /// Global node index from per-axis indices (axis 0 fastest).
    pub fn node(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        let mut stride = 1;
        for (axis, &i) in self.axes.iter().zip(idx) {
            flat += i * stride;
            stride *= axis.len();
        }
        self.offset + flat
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| {
                let i = flat % a.len();
                flat /= a.len();
                i
            })
            .collect()
    }
}

/// Axis-aligned cell with tensor-ordered corners (bit `b` of the local index
/// selects the upper end of axis `b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T> {
    pub part: Part,
    pub nodes: [usize; 8],
    pub lo: [T; 3],
    pub hi: [T; 3],
}

impl<T: Real> Cell<T> {
    pub fn corner_count(dim: usize) -> usize {
        1 << dim
    }

    pub fn volume(&self, dim: usize) -> T {
        (0..dim).map(|a| self.hi[a] - self.lo[a]).fold(T::one(), |acc, w| acc * w)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub geometry: Geometry<T>,
    pub levels: Levels,
    pub grading: Grading<T>,
    pub part_a: PartGrid<T>,
    pub part_b: PartGrid<T>,
    pub coords: Vec<[T; 3]>,
    pub tags: Vec<NodeTags>,
    pub cells: Vec<Cell<T>>,
}

impl<T: Real> Mesh<T> {
    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn part_of(&self, node: usize) -> Part {
        if node < self.part_b.offset {
            Part::A
        } else {
            Part::B
        }
    }

    pub fn nodes_tagged(&self, tag: NodeTags) -> impl Iterator<Item = usize> + '_ {
        self.tags.iter().enumerate().filter(move |(_, t)| t.contains(tag)).map(|(i, _)| i)
    }

    /// Cross-section part `x'` of a node.
    pub fn cross_coords(&self, node: usize) -> &[T] {
        &self.coords[node][..self.dim() - 1]
    }

    pub fn axial_coord(&self, node: usize) -> T {
        self.coords[node][self.dim() - 1]
    }

    pub fn part_volume(&self, part: Part) -> T {
        let dim = self.dim();
        self.cells.iter().filter(|c| c.part == part).map(|c| c.volume(dim)).sum()
    }

    /// Smallest width of an `Omega^b` cross-section cell touching `0'`.
    pub fn origin_cell_width(&self) -> T {
        let dim = self.dim();
        self.part_b.axes[..dim - 1]
            .iter()
            .flat_map(|axis| axis.windows(2).filter(|w| w[0] == T::zero() || w[1] == T::zero()))
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min)
    }

    /// Interpolation stencil of the `Omega^b` surface trace at cross-section
    /// point `xp`: `JUNCTION_B_SURFACE` nodes with their (multi)linear
    /// weights. Zero weights are dropped. Returns `None` if `xp` lies
    /// outside the meshed cross-section.
    pub fn surface_stencil(&self, xp: &[T]) -> Option<Vec<(usize, T)>> {
        let dim = self.dim();
        let slack = T::lit(64.0) * T::epsilon();
        let mut per_axis = Vec::with_capacity(dim - 1);
        for (axis, &x) in self.part_b.axes[..dim - 1].iter().zip(xp) {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            let tol = slack * (hi - lo);
            if x < lo - tol || x > hi + tol {
                return None;
            }
            let x = x.max(lo).min(hi);
            // First index with axis[i] > x, clamped to a valid cell.
            let upper = axis.partition_point(|&v| v <= x).clamp(1, axis.len() - 1);
            let (x0, x1) = (axis[upper - 1], axis[upper]);
            let t = (x - x0) / (x1 - x0);
            per_axis.push([(upper - 1, T::one() - t), (upper, t)]);
        }
        let mut stencil = Vec::with_capacity(1 << (dim - 1));
        let surface_level = self.part_b.axes[dim - 1].len() - 1;
        for corner in 0..(1usize << (dim - 1)) {
            let mut idx = Vec::with_capacity(dim);
            let mut w = T::one();
            for (a, pair) in per_axis.iter().enumerate() {
                let (i, wi) = pair[(corner >> a) & 1];
                idx.push(i);
                w = w * wi;
            }
            if w == T::zero() {
                continue;
            }
            idx.push(surface_level);
            stencil.push((self.part_b.node(&idx), w));
        }
        Some(stencil)
    }

    /// Checks that every junction node maps into the `Omega^b` cross-section under `x' -> r x'`.
    pub fn junction_images_inside(&self, r: T) -> bool {
        self.nodes_tagged(NodeTags::JUNCTION_A).all(|n| {
            let scaled: Vec<T> = self.cross_coords(n).iter().map(|&x| r * x).collect();
            self.surface_stencil(&scaled).is_some()
        })
    }

    /// Plain-text listing: one `node` record per node, one `cell` record per cell.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dim = self.dim();
        let _ = writeln!(out, "# dim {dim} nodes {} cells {}", self.node_count(), self.cells.len());
        for (i, (x, t)) in self.coords.iter().zip(&self.tags).enumerate() {
            let part = match self.part_of(i) {
                Part::A => 'A',
                Part::B => 'B',
            };
            let coords: Vec<String> = x[..dim].iter().map(|v| format!("{:e}", v.as_f64())).collect();
            let _ = writeln!(out, "node {i} {part} {} tags={:#06b}", coords.join(" "), t.bits());
        }
        for (i, c) in self.cells.iter().enumerate() {
            let part = if c.part == Part::A { 'A' } else { 'B' };
            let nodes: Vec<String> = c.nodes[..Cell::<T>::corner_count(dim)].iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "cell {i} {part} {}", nodes.join(" "));
        }
        out
    }
}

/// Cross-section axis over `[lo, hi]` with `0` as a node, `m` cells split
/// between the two sides in proportion to their lengths (at least one per side).
fn cross_axis<T: Real>(lo: T, hi: T, m: usize, grading: Option<Grading<T>>) -> Vec<T> {
    let (left, right) = side_counts(lo, hi, m);
    let mut neg: Vec<T> = (0..=left).map(|i| lo * T::from_usize_lossy(left - i) / T::from_usize_lossy(left)).collect();
    let mut pos: Vec<T> = (0..=right).map(|i| hi * T::from_usize_lossy(i) / T::from_usize_lossy(right)).collect();
    if let Some(g) = grading {
        if g.ratio < T::one() && g.origin_cells > 0 {
            let refine = |w: T| -> Vec<T> { (1..=g.origin_cells).rev().map(|j| w * g.ratio.powi(j as i32)).collect() };
            // Positive side: 0, w r^k, ..., w r, w, ...
            let w = pos[1];
            let inner = refine(w);
            pos.splice(1..1, inner);
            // Negative side mirrored.
            let w = -neg[neg.len() - 2];
            let inner: Vec<T> = refine(w).into_iter().rev().map(|v| -v).collect();
            let at = neg.len() - 1;
            neg.splice(at..at, inner);
        }
    }
    neg.pop();
    neg.extend(pos);
    neg
}

fn side_counts<T: Real>(lo: T, hi: T, m: usize) -> (usize, usize) {
    let m = m.max(2);
    let left = ((T::from_usize_lossy(m) * (-lo) / (hi - lo)).round().to_usize().unwrap_or(1)).clamp(1, m - 1);
    (left, m - left)
}

/// Width of the narrowest origin-adjacent cross-section cell before grading.
pub fn ungraded_origin_width<T: Real>(geometry: &Geometry<T>, m_omega: usize) -> T {
    geometry
        .axis_bounds()
        .into_iter()
        .map(|(lo, hi)| {
            let (left, right) = side_counts(lo, hi, m_omega);
            (-lo / T::from_usize_lossy(left)).min(hi / T::from_usize_lossy(right))
        })
        .fold(T::infinity(), T::min)
}

fn uniform_axis<T: Real>(lo: T, hi: T, m: usize) -> Vec<T> {
    (0..=m).map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(m)).collect()
}

fn check_axis<T: Real>(axis: &[T], which: usize) -> Result<(), MeshError> {
    for w in axis.windows(2) {
        let width = w[1] - w[0];
        if !(width.as_f64() > MIN_CELL_WIDTH) {
            return Err(MeshError::DegenerateCell { axis: which, width: width.as_f64() });
        }
    }
    Ok(())
}

/// Builds the meshes of both parts with their tags.
pub fn make_mesh<T: Real>(geometry: &Geometry<T>, levels: Levels, grading: Grading<T>) -> Result<Mesh<T>, MeshError> {
    for (name, v) in [("m_omega", levels.m_omega), ("m_a", levels.m_a), ("m_b", levels.m_b)] {
        if v == 0 {
            return Err(MeshError::BadLevel { name });
        }
    }
    if !(grading.ratio > T::zero() && grading.ratio <= T::one()) {
        return Err(MeshError::BadGrading(grading.ratio.as_f64()));
    }
    let dim = geometry.dim();
    let bounds = geometry.axis_bounds();

    let mut axes_a: Vec<Vec<T>> = bounds.iter().map(|&(lo, hi)| cross_axis(lo, hi, levels.m_omega, None)).collect();
    axes_a.push(uniform_axis(T::zero(), T::one(), levels.m_a));
    let mut axes_b: Vec<Vec<T>> =
        bounds.iter().map(|&(lo, hi)| cross_axis(lo, hi, levels.m_omega, Some(grading))).collect();
    axes_b.push(uniform_axis(-T::one(), T::zero(), levels.m_b));
    for (i, axis) in axes_a.iter().chain(&axes_b).enumerate() {
        check_axis(axis, i % dim)?;
    }

    let part_a = PartGrid { axes: axes_a, offset: 0 };
    let part_b = PartGrid { axes: axes_b, offset: part_a.node_count() };
    let total = part_a.node_count() + part_b.node_count();
    let mut coords = Vec::with_capacity(total);
    let mut tags = Vec::with_capacity(total);

    for (part, grid) in [(Part::A, &part_a), (Part::B, &part_b)] {
        for flat in 0..grid.node_count() {
            let idx = grid.unflatten(flat);
            let mut x = [T::zero(); 3];
            for (a, &i) in idx.iter().enumerate() {
                x[a] = grid.axes[a][i];
            }
            let axial = idx[dim - 1];
            let last_axial = grid.axes[dim - 1].len() - 1;
            let mut t = NodeTags::empty();
            match part {
                Part::A => {
                    if axial == last_axial {
                        t |= NodeTags::DIRICHLET_TOP;
                    }
                    if axial == 0 {
                        t |= NodeTags::JUNCTION_A;
                    }
                }
                Part::B => {
                    let on_lateral = idx[..dim - 1]
                        .iter()
                        .zip(&grid.axes)
                        .any(|(&i, axis)| i == 0 || i == axis.len() - 1);
                    if on_lateral {
                        t |= NodeTags::DIRICHLET_LATERAL_B;
                    }
                    if axial == last_axial {
                        t |= NodeTags::JUNCTION_B_SURFACE;
                    }
                }
            }
            coords.push(x);
            tags.push(t);
        }
    }

    let mut cells = Vec::with_capacity(part_a.cell_count() + part_b.cell_count());
    for (part, grid) in [(Part::A, &part_a), (Part::B, &part_b)] {
        let counts: Vec<usize> = grid.axes.iter().map(|a| a.len() - 1).collect();
        let n_cells: usize = counts.iter().product();
        for flat in 0..n_cells {
            let mut rest = flat;
            let base: Vec<usize> = counts
                .iter()
                .map(|&c| {
                    let i = rest % c;
                    rest /= c;
                    i
                })
                .collect();
            let mut nodes = [0usize; 8];
            let mut idx = vec![0usize; dim];
            for (local, slot) in nodes.iter_mut().enumerate().take(1 << dim) {
                for a in 0..dim {
                    idx[a] = base[a] + ((local >> a) & 1);
                }
                *slot = grid.node(&idx);
            }
            let mut lo = [T::zero(); 3];
            let mut hi = [T::zero(); 3];
            for a in 0..dim {
                lo[a] = grid.axes[a][base[a]];
                hi[a] = grid.axes[a][base[a] + 1];
            }
            cells.push(Cell { part, nodes, lo, hi });
        }
    }

    Ok(Mesh { geometry: *geometry, levels, grading, part_a, part_b, coords, tags, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_geometry, CrossSection};

    fn unit_interval() -> Geometry<f64> {
        make_geometry(2, CrossSection::Interval { c: -1.0, d: 1.0 }).unwrap()
    }

    #[test]
    fn node_and_cell_counts() {
        let mesh = make_mesh(&unit_interval(), Levels { m_omega: 4, m_a: 4, m_b: 2 }, Grading::none()).unwrap();
        assert_eq!(mesh.part_a.node_count(), 25);
        assert_eq!(mesh.part_a.cell_count(), 16);
        assert_eq!(mesh.part_b.node_count(), 15);
        assert_eq!(mesh.part_b.cell_count(), 8);
        assert_eq!(mesh.cells.len(), 24);
    }

    #[test]
    fn top_nodes_are_dirichlet() {
        let mesh = make_mesh(&unit_interval(), Levels::uniform(3), Grading::none()).unwrap();
        for i in 0..mesh.node_count() {
            let top = mesh.part_of(i) == Part::A && mesh.axial_coord(i) == 1.0;
            assert_eq!(top, mesh.tags[i].contains(NodeTags::DIRICHLET_TOP));
        }
        assert_eq!(mesh.nodes_tagged(NodeTags::JUNCTION_A).count(), mesh.nodes_tagged(NodeTags::DIRICHLET_TOP).count());
    }

    #[test]
    fn grading_reaches_target_width() {
        // Base width 1/4, ratio 1/2, three splits: 1/32.
        let g = Grading { origin_cells: 3, ratio: 0.5 };
        let mesh = make_mesh(&unit_interval(), Levels::uniform(8), g).unwrap();
        assert!((mesh.origin_cell_width() - 1.0 / 32.0).abs() < 1e-15);
        let reach = Grading::reaching(0.25, 1.0 / 32.0, 0.5);
        assert_eq!(reach.origin_cells, 3);
    }

    #[test]
    fn part_volumes_sum_to_twice_measure() {
        let g3 = make_geometry(3, CrossSection::Rect { wx: 0.5, wy: 0.75 }).unwrap();
        for (geom, grading) in [
            (unit_interval(), Grading { origin_cells: 4, ratio: 0.5 }),
            (make_geometry(2, CrossSection::Interval { c: -1.0, d: 2.0 }).unwrap(), Grading { origin_cells: 2, ratio: 0.3 }),
            (g3, Grading { origin_cells: 2, ratio: 0.5 }),
        ] {
            let mesh = make_mesh(&geom, Levels { m_omega: 5, m_a: 3, m_b: 2 }, grading).unwrap();
            let total = mesh.part_volume(Part::A) + mesh.part_volume(Part::B);
            assert!((total - 2.0 * geom.measure()).abs() < 1e-12);
            assert!(mesh.cells.iter().all(|c| c.volume(geom.dim()) > 0.0));
        }
    }

    #[test]
    fn origin_is_a_node_and_parts_are_disjoint() {
        let geom = make_geometry(2, CrossSection::Interval { c: -1.0, d: 2.0 }).unwrap();
        let mesh = make_mesh(&geom, Levels { m_omega: 7, m_a: 2, m_b: 2 }, Grading::none()).unwrap();
        assert!(mesh.part_a.axes[0].contains(&0.0));
        assert!(mesh.part_b.axes[0].contains(&0.0));
        for c in &mesh.cells {
            for &n in &c.nodes[..4] {
                assert_eq!(mesh.part_of(n), c.part);
            }
        }
    }

    #[test]
    fn junction_images_inside_for_all_r() {
        let g3 = make_geometry(3, CrossSection::Rect { wx: 0.5, wy: 0.5 }).unwrap();
        let mesh = make_mesh(&g3, Levels::uniform(3), Grading { origin_cells: 2, ratio: 0.5 }).unwrap();
        for r in [1.0, 0.9, 0.5, 0.01, 1e-6] {
            assert!(mesh.junction_images_inside(r));
        }
    }

    #[test]
    fn surface_stencil_weights() {
        let mesh = make_mesh(&unit_interval(), Levels::uniform(4), Grading::none()).unwrap();
        let at_origin = mesh.surface_stencil(&[0.0]).unwrap();
        assert_eq!(at_origin.len(), 1);
        assert_eq!(at_origin[0].1, 1.0);
        assert_eq!(mesh.coords[at_origin[0].0][0], 0.0);
        let mid = mesh.surface_stencil(&[0.125]).unwrap();
        assert_eq!(mid.len(), 2);
        let sum: f64 = mid.iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(mid.iter().all(|&(n, _)| mesh.tags[n].contains(NodeTags::JUNCTION_B_SURFACE)));
        assert!(mesh.surface_stencil(&[1.5]).is_none());
    }

    #[test]
    fn rejects_bad_levels_and_degenerate_cells() {
        assert!(matches!(
            make_mesh(&unit_interval(), Levels { m_omega: 0, m_a: 1, m_b: 1 }, Grading::none()),
            Err(MeshError::BadLevel { name: "m_omega" })
        ));
        assert!(matches!(
            make_mesh(&unit_interval(), Levels::uniform(2), Grading { origin_cells: 1, ratio: 1.5 }),
            Err(MeshError::BadGrading(_))
        ));
        assert!(matches!(
            make_mesh(&unit_interval(), Levels::uniform(2), Grading { origin_cells: 60, ratio: 0.5 }),
            Err(MeshError::DegenerateCell { .. })
        ));
    }

    #[test]
    fn text_export_has_one_record_per_line() {
        let mesh = make_mesh(&unit_interval(), Levels::uniform(2), Grading::none()).unwrap();
        let text = mesh.to_text();
        let nodes = text.lines().filter(|l| l.starts_with("node ")).count();
        let cells = text.lines().filter(|l| l.starts_with("cell ")).count();
        assert_eq!(nodes, mesh.node_count());
        assert_eq!(cells, mesh.cells.len());
    }
}
