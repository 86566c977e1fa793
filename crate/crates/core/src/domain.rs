//! Structured cubic grids over a ball-with-holes domain: node
//! classification against the analytic geometry, Dirichlet boundary
//! data on a one-cell boundary band, and cut-cell volume quadrature.

use crate::qtensor::{self, QTensor, S_UNIT};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("director is not a unit vector at node {idx} (|v| = {norm})")]
    NotUnit { idx: usize, norm: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Ball of radius `outer_radius` centered at the origin with spherical
/// holes removed. The boundary has `1 + holes.len()` components.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub outer_radius: f64,
    /// Hole centers and radii.
    pub holes: Vec<([f64; 3], f64)>,
}

impl DomainSpec {
    pub fn ball(outer_radius: f64) -> Result<Self, DomainError> {
        Self::new(outer_radius, Vec::new())
    }

    pub fn new(outer_radius: f64, holes: Vec<([f64; 3], f64)>) -> Result<Self, DomainError> {
        if !(outer_radius > 0.0) {
            return Err(DomainError::InvalidDomain("outer radius must be positive".into()));
        }
        for (i, (c, r)) in holes.iter().enumerate() {
            if !(*r > 0.0) {
                return Err(DomainError::InvalidDomain(format!("hole {i} has nonpositive radius")));
            }
            let dist = norm3(c);
            if dist + r >= outer_radius {
                return Err(DomainError::InvalidDomain(format!(
                    "hole {i} is not strictly inside the outer ball"
                )));
            }
            for (j, (c2, r2)) in holes.iter().enumerate().take(i) {
                let d = norm3(&[c[0] - c2[0], c[1] - c2[1], c[2] - c2[2]]);
                if d <= r + r2 {
                    return Err(DomainError::InvalidDomain(format!("holes {j} and {i} overlap")));
                }
            }
        }
        Ok(DomainSpec {
            outer_radius,
            holes,
        })
    }

    /// Number of boundary components, `N = 1 + #holes`.
    pub fn boundary_components(&self) -> usize {
        1 + self.holes.len()
    }

    /// True when `N` is odd, the degree-parity hint for radial anchoring.
    pub fn hp3_hint(&self) -> bool {
        self.boundary_components() % 2 == 1
    }

    /// Signed distance to the domain boundary, positive inside.
    pub fn signed_distance(&self, x: &[f64; 3]) -> f64 {
        let mut d = self.outer_radius - norm3(x);
        for (c, r) in &self.holes {
            let dh = norm3(&[x[0] - c[0], x[1] - c[1], x[2] - c[2]]) - r;
            if dh < d {
                d = dh;
            }
        }
        d
    }

    /// Nearest boundary point together with the outward-from-material
    /// director used by radial anchoring: the outer normal on the outer
    /// sphere, the direction away from the hole center on hole walls.
    pub fn nearest_boundary(&self, x: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
        let rx = norm3(x);
        let mut best = (self.outer_radius - rx).abs();
        let mut dir = if rx > 1e-14 {
            [x[0] / rx, x[1] / rx, x[2] / rx]
        } else {
            [0.0, 0.0, 1.0]
        };
        let mut point = [
            dir[0] * self.outer_radius,
            dir[1] * self.outer_radius,
            dir[2] * self.outer_radius,
        ];
        for (c, r) in &self.holes {
            let v = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
            let nv = norm3(&v);
            let d = (nv - r).abs();
            if d < best {
                best = d;
                let n = if nv > 1e-14 {
                    [v[0] / nv, v[1] / nv, v[2] / nv]
                } else {
                    [0.0, 0.0, 1.0]
                };
                point = [c[0] + r * n[0], c[1] + r * n[1], c[2] + r * n[2]];
                dir = n;
            }
        }
        (point, dir)
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Node classification. Boundary nodes form a one-cell-thick band
/// carrying frozen Dirichlet values; every 6-neighbor of an Interior
/// node is Interior or Boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum NodeClass {
    Exterior = 0,
    Interior = 1,
    Boundary = 2,
}

/// Axis-aligned cubic grid with 3% padding around the outer ball.
#[derive(Debug)]
pub struct Grid {
    spec: DomainSpec,
    n: usize,
    h: f64,
    origin: [f64; 3],
    class: Vec<NodeClass>,
    weights: Vec<f64>,
    interior: Vec<u32>,
    boundary: Vec<u32>,
}

const PADDING: f64 = 1.0625;

/// Build the grid: classify nodes against the signed distance, collect
/// the boundary band, and precompute cut-cell volume weights.
pub fn build_grid(spec: &DomainSpec, n: usize) -> Result<Arc<Grid>, DomainError> {
    if n < 16 {
        return Err(DomainError::ResolutionTooCoarse(format!(
            "need at least 16 nodes per axis, got {n}"
        )));
    }
    let h = 2.0 * spec.outer_radius * PADDING / (n as f64 - 1.0);
    for (i, (c, r)) in spec.holes.iter().enumerate() {
        if 2.0 * r / h < 4.0 {
            return Err(DomainError::ResolutionTooCoarse(format!(
                "hole {i} spans fewer than 4 cells at n = {n}"
            )));
        }
        if spec.outer_radius - (norm3(c) + r) < 2.0 * h {
            return Err(DomainError::ResolutionTooCoarse(format!(
                "hole {i} clearance below 2 cells at n = {n}"
            )));
        }
    }
    let origin = [-spec.outer_radius * PADDING; 3];
    let total = n * n * n;

    let mut inside = vec![false; total];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let idx = ix + n * (iy + n * iz);
                let x = [
                    origin[0] + ix as f64 * h,
                    origin[1] + iy as f64 * h,
                    origin[2] + iz as f64 * h,
                ];
                inside[idx] = spec.signed_distance(&x) > 0.0;
            }
        }
    }
    let mut class = vec![NodeClass::Exterior; total];
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let idx = ix + n * (iy + n * iz);
                if !inside[idx] {
                    continue;
                }
                let mut banded = false;
                let check = |jx: isize, jy: isize, jz: isize| {
                    if jx < 0 || jy < 0 || jz < 0 {
                        return true;
                    }
                    let (jx, jy, jz) = (jx as usize, jy as usize, jz as usize);
                    if jx >= n || jy >= n || jz >= n {
                        return true;
                    }
                    !inside[jx + n * (jy + n * jz)]
                };
                let (x, y, z) = (ix as isize, iy as isize, iz as isize);
                for (dx, dy, dz) in [
                    (1, 0, 0),
                    (-1, 0, 0),
                    (0, 1, 0),
                    (0, -1, 0),
                    (0, 0, 1),
                    (0, 0, -1),
                ] {
                    if check(x + dx, y + dy, z + dz) {
                        banded = true;
                        break;
                    }
                }
                if banded {
                    class[idx] = NodeClass::Boundary;
                    boundary.push(idx as u32);
                } else {
                    class[idx] = NodeClass::Interior;
                    interior.push(idx as u32);
                }
            }
        }
    }

    let mut grid = Grid {
        spec: spec.clone(),
        n,
        h,
        origin,
        class,
        weights: Vec::new(),
        interior,
        boundary,
    };
    grid.weights = compute_weights(&grid);
    Ok(Arc::new(grid))
}

/// Per-node cut-cell volume weights: full `h^3` deep inside, a
/// subsampled clipped fraction where the node cell straddles the
/// boundary, zero on Exterior nodes.
fn compute_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h;
    let h3 = h * h * h;
    // Cell half-diagonal: beyond it the cell cannot straddle.
    let reach = 0.5 * h * 3f64.sqrt();
    const SUB: usize = 4;
    let mut weights = vec![0.0; n * n * n];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let idx = ix + n * (iy + n * iz);
                if grid.class[idx] == NodeClass::Exterior {
                    continue;
                }
                let x = grid.position(idx);
                let d = grid.spec.signed_distance(&x);
                if d >= reach {
                    weights[idx] = h3;
                    continue;
                }
                let mut hits = 0usize;
                for sz in 0..SUB {
                    for sy in 0..SUB {
                        for sx in 0..SUB {
                            let p = [
                                x[0] + ((sx as f64 + 0.5) / SUB as f64 - 0.5) * h,
                                x[1] + ((sy as f64 + 0.5) / SUB as f64 - 0.5) * h,
                                x[2] + ((sz as f64 + 0.5) / SUB as f64 - 0.5) * h,
                            ];
                            if grid.spec.signed_distance(&p) > 0.0 {
                                hits += 1;
                            }
                        }
                    }
                }
                weights[idx] = h3 * hits as f64 / (SUB * SUB * SUB) as f64;
            }
        }
    }
    weights
}

impl Grid {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        (idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n))
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.coords(idx);
        [
            self.origin[0] + ix as f64 * self.h,
            self.origin[1] + iy as f64 * self.h,
            self.origin[2] + iz as f64 * self.h,
        ]
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    /// Indices of Interior nodes in ascending order.
    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    /// Indices of Boundary-band nodes in ascending order.
    pub fn boundary_nodes(&self) -> &[u32] {
        &self.boundary
    }

    /// Strides to the +x, +y, +z neighbors.
    pub fn strides(&self) -> [usize; 3] {
        [1, self.n, self.n * self.n]
    }

    pub fn boundary_components(&self) -> usize {
        self.spec.boundary_components()
    }

    /// Quadrature weights; the sum over non-Exterior nodes approximates
    /// the domain volume to first order in the spacing.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nearest node index to a point (clamped to the array).
    pub fn nearest_node(&self, x: &[f64; 3]) -> usize {
        let mut id = [0usize; 3];
        for k in 0..3 {
            let t = ((x[k] - self.origin[k]) / self.h).round();
            id[k] = t.clamp(0.0, (self.n - 1) as f64) as usize;
        }
        self.index(id[0], id[1], id[2])
    }
}

/// Per-node cut-cell quadrature weights (precomputed at build time).
pub fn cell_volume_weights(grid: &Grid) -> Vec<f64> {
    grid.weights.to_vec()
}

/// A Q-tensor field on a grid. Boundary-band values are frozen Dirichlet
/// data; Exterior nodes carry the extended boundary value for
/// diagnostics only and never enter any energy.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Arc<Grid>,
    values: Vec<QTensor>,
}

impl TensorField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let nodes = grid.node_count();
        TensorField {
            grid,
            values: vec![QTensor::ZERO; nodes],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[QTensor] {
        &self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> &QTensor {
        &self.values[idx]
    }

    /// Overwrite the value at an Interior node.
    #[inline]
    pub fn set_interior(&mut self, idx: usize, q: QTensor) {
        debug_assert_eq!(self.grid.class(idx), NodeClass::Interior);
        self.values[idx] = q;
    }

    /// Overwrite all values (solver internals; boundary discipline is
    /// the caller's responsibility).
    pub(crate) fn values_mut(&mut self) -> &mut [QTensor] {
        &mut self.values
    }

    /// Swap the value buffers of two fields on the same grid.
    pub(crate) fn swap_values(&mut self, other: &mut TensorField) {
        debug_assert!(self.same_grid(other));
        std::mem::swap(&mut self.values, &mut other.values);
    }

    /// Initialize Interior nodes from a function of position.
    pub fn fill_interior(&mut self, f: impl Fn([f64; 3]) -> QTensor) {
        for &idx in self.grid.clone().interior_nodes() {
            self.values[idx as usize] = f(self.grid.position(idx as usize));
        }
    }

    pub fn same_grid(&self, other: &TensorField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.n == other.grid.n
                && self.grid.h == other.grid.h
                && self.grid.spec == other.grid.spec)
    }

    /// Min and max of |Q| over the closed domain (non-Exterior nodes).
    pub fn norm_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (idx, q) in self.values.iter().enumerate() {
            if self.grid.class(idx) == NodeClass::Exterior {
                continue;
            }
            let n = q.norm();
            lo = lo.min(n);
            hi = hi.max(n);
        }
        (lo, hi)
    }

    /// Largest deviation of |Q| from 1 over non-Exterior nodes.
    pub fn max_sphere_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (idx, q) in self.values.iter().enumerate() {
            if self.grid.class(idx) == NodeClass::Exterior {
                continue;
            }
            worst = worst.max((q.norm() - 1.0).abs());
        }
        worst
    }

    /// Normalize every non-Exterior node to unit norm; near-isotropic
    /// nodes fall back to the reference uniaxial tensor.
    pub fn normalize_all(&mut self) {
        for idx in 0..self.values.len() {
            if self.grid.class(idx) == NodeClass::Exterior {
                continue;
            }
            let q = self.values[idx];
            let n = q.norm();
            self.values[idx] = if n < 1e-8 {
                QTensor::basis(0)
            } else {
                q.scale(1.0 / n)
            };
        }
    }
}

/// Radial-anchoring Dirichlet data: on every boundary component the
/// director points along the local outward-from-material normal, and
/// the value is the unit positive uniaxial tensor
/// `sqrt(3/2) (n x n - I/3)`. Exterior nodes receive the extension by
/// nearest-point projection.
pub fn boundary_hedgehog(grid: &Arc<Grid>) -> TensorField {
    let mut field = TensorField::zeros(grid.clone());
    for idx in 0..grid.node_count() {
        match grid.class(idx) {
            NodeClass::Interior => {}
            NodeClass::Boundary | NodeClass::Exterior => {
                let x = grid.position(idx);
                let (_, dir) = grid.spec().nearest_boundary(&x);
                field.values[idx] = qtensor::uniaxial(dir, S_UNIT).expect("unit director");
            }
        }
    }
    field
}

/// Dirichlet data `sqrt(3/2) (v x v - I/3)` for a supplied director
/// field evaluated at the nearest boundary point.
pub fn boundary_uniaxial(
    grid: &Arc<Grid>,
    director: impl Fn([f64; 3]) -> [f64; 3],
) -> Result<TensorField, DomainError> {
    let mut field = TensorField::zeros(grid.clone());
    for idx in 0..grid.node_count() {
        match grid.class(idx) {
            NodeClass::Interior => {}
            NodeClass::Boundary | NodeClass::Exterior => {
                let x = grid.position(idx);
                let (point, _) = grid.spec().nearest_boundary(&x);
                let v = director(point);
                field.values[idx] = qtensor::uniaxial(v, S_UNIT).map_err(|_| {
                    DomainError::NotUnit {
                        idx,
                        norm: norm3(&v),
                    }
                })?;
            }
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtensor::biaxiality;

    #[test]
    fn ball_grid_counts_components() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 32).unwrap();
        assert_eq!(grid.boundary_components(), 1);
        assert!(!grid.interior_nodes().is_empty());
        assert!(!grid.boundary_nodes().is_empty());
    }

    #[test]
    fn holes_make_odd_component_counts() {
        let spec = DomainSpec::new(
            1.0,
            vec![([0.45, 0.0, 0.0], 0.2), ([-0.45, 0.0, 0.0], 0.2)],
        )
        .unwrap();
        assert_eq!(spec.boundary_components(), 3);
        assert!(spec.hp3_hint());
        let grid = build_grid(&spec, 48).unwrap();
        assert_eq!(grid.boundary_components(), 3);
    }

    #[test]
    fn overlapping_holes_rejected() {
        let err = DomainSpec::new(1.0, vec![([0.2, 0.0, 0.0], 0.2), ([0.4, 0.0, 0.0], 0.2)]);
        assert!(matches!(err, Err(DomainError::InvalidDomain(_))));
        let escape = DomainSpec::new(1.0, vec![([0.9, 0.0, 0.0], 0.2)]);
        assert!(matches!(escape, Err(DomainError::InvalidDomain(_))));
    }

    #[test]
    fn coarse_hole_rejected() {
        let spec = DomainSpec::new(1.0, vec![([0.0, 0.0, 0.0], 0.05)]).unwrap();
        assert!(matches!(
            build_grid(&spec, 16),
            Err(DomainError::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn interior_nodes_have_inside_stencils() {
        let spec = DomainSpec::new(1.0, vec![([0.0, 0.0, 0.0], 0.3)]).unwrap();
        let grid = build_grid(&spec, 40).unwrap();
        let [sx, sy, sz] = grid.strides();
        for &idx in grid.interior_nodes() {
            let idx = idx as usize;
            for nb in [idx + sx, idx - sx, idx + sy, idx - sy, idx + sz, idx - sz] {
                assert_ne!(grid.class(nb), NodeClass::Exterior);
            }
        }
    }

    #[test]
    fn classification_is_deterministic() {
        let spec = DomainSpec::new(1.0, vec![([0.3, 0.1, -0.2], 0.15)]).unwrap();
        let a = build_grid(&spec, 36).unwrap();
        let b = build_grid(&spec, 36).unwrap();
        assert_eq!(a.classes(), b.classes());
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn volume_quadrature_converges() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        let grid = build_grid(&spec, 64).unwrap();
        let vol = grid.domain_volume();
        assert!(
            (vol - exact).abs() / exact < 0.02,
            "n=64 volume {vol} vs {exact}"
        );
        // First order or better in h.
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let g = build_grid(&spec, n).unwrap();
            errs.push((g.domain_volume() - exact).abs());
        }
        assert!(errs[2] < errs[0], "errors {errs:?} not decreasing");
        assert!(errs[2] <= 0.6 * errs[0], "refinement gain too weak: {errs:?}");
    }

    #[test]
    fn interior_weight_is_full_cell() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 32).unwrap();
        let h3 = grid.spacing().powi(3);
        let center = grid.nearest_node(&[0.0, 0.0, 0.0]);
        assert_eq!(grid.weights()[center], h3);
    }

    #[test]
    fn hedgehog_boundary_is_vacuum_valued() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 32).unwrap();
        let field = boundary_hedgehog(&grid);
        for &idx in grid.boundary_nodes() {
            let q = field.value(idx as usize);
            assert!((q.norm() - 1.0).abs() < 1e-12);
            assert!((biaxiality(q).unwrap() - 1.0).abs() < 1e-12);
            assert!(crate::qtensor::potential_w(q) < 1e-12);
        }
        // Node nearest the north pole carries e0 (director k) up to the
        // O(h) off-axis tilt of the staircase node position.
        let idx = grid.nearest_node(&[0.0, 0.0, 1.0]);
        let q = field.value(idx);
        let e0 = QTensor::basis(0);
        assert!(q.sub(&e0).norm() < 0.2, "near-pole value {:?}", q);
        // Head-to-tail symmetry (n vs -n): exactly antipodal nodes carry
        // equal Q. The grid is centrally symmetric, so mirror indices sit
        // at exactly opposite positions.
        let n = grid.n();
        for &idx in grid.boundary_nodes() {
            let (ix, iy, iz) = grid.coords(idx as usize);
            let mirror = grid.index(n - 1 - ix, n - 1 - iy, n - 1 - iz);
            if grid.class(mirror) == NodeClass::Boundary {
                let d = field.value(idx as usize).sub(field.value(mirror)).norm();
                assert!(d < 1e-12, "antipodal mismatch {d}");
            }
        }
    }

    #[test]
    fn boundary_uniaxial_matches_hedgehog_for_normal_director() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 24).unwrap();
        let radial = boundary_uniaxial(&grid, |p| {
            let n = norm3(&p);
            [p[0] / n, p[1] / n, p[2] / n]
        })
        .unwrap();
        let hedgehog = boundary_hedgehog(&grid);
        for &idx in grid.boundary_nodes() {
            let d = radial.value(idx as usize).sub(hedgehog.value(idx as usize));
            assert!(d.norm() < 1e-12);
        }
        // Constant director k gives constant e0 on the band.
        let constant = boundary_uniaxial(&grid, |_| [0.0, 0.0, 1.0]).unwrap();
        for &idx in grid.boundary_nodes() {
            assert!(constant.value(idx as usize).sub(&QTensor::basis(0)).norm() < 1e-14);
        }
        assert!(boundary_uniaxial(&grid, |_| [0.0, 0.0, 1.5]).is_err());
    }
}
