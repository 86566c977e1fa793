//! Discrete energy functionals, Euler-Lagrange residuals, and the
//! interior monotonicity diagnostic.
//!
//! The Dirichlet part uses forward differences on cell edges, so the
//! exact gradient of the discrete energy at an Interior node is the
//! standard 7-point Laplacian plus weighted bulk terms; the residual
//! routines return exactly that gradient (scaled by `1/h^3`), which the
//! finite-difference oracles check to round-off.

use crate::domain::{NodeClass, TensorField};
use crate::qtensor::{self, QTensor};
use crate::util::chunked_sum;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("field is not unit-norm (max | |Q|-1 | = {violation:.3e})")]
    NotOnSphere { violation: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("ball of radius {radius} at {center:?} escapes the domain")]
    BallEscapesDomain { center: [f64; 3], radius: f64 },
}

/// Additive decomposition of a discrete energy value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `1/2 int |grad Q|^2`.
    pub dirichlet: f64,
    /// `lambda int W(Q)`.
    pub potential: f64,
    /// Norm penalty: `mu/4 int (1-|Q|^2)^2`, or `1/(4 eps^2) int ...` on
    /// the Ginzburg-Landau path.
    pub penalty: f64,
    /// `1/2 int |Q - Q_ref|^2` (Ginzburg-Landau anchor only).
    pub gl_anchor: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn close(dirichlet: f64, potential: f64, penalty: f64, gl_anchor: f64) -> Self {
        EnergyBreakdown {
            dirichlet,
            potential,
            penalty,
            gl_anchor,
            total: dirichlet + potential + penalty + gl_anchor,
        }
    }
}

/// Forward-difference Dirichlet energy `1/2 sum_edges h |dQ|^2` over
/// edges with both endpoints inside the closed domain. Summed per
/// z-slab with a fixed association order (deterministic under any
/// thread count).
fn dirichlet_energy(field: &TensorField) -> f64 {
    let grid = field.grid();
    let n = grid.n();
    let h = grid.spacing();
    let class = grid.classes();
    let values = field.values();
    let [sx, sy, sz] = grid.strides();
    crate::util::slab_sum(n, |iz| {
        let mut acc = 0.0;
        for iy in 0..n {
            let row = n * (iy + n * iz);
            for ix in 0..n {
                let idx = ix + row;
                if class[idx] == NodeClass::Exterior {
                    continue;
                }
                let here = &values[idx];
                if ix + 1 < n && class[idx + sx] != NodeClass::Exterior {
                    acc += values[idx + sx].sub(here).norm_sq();
                }
                if iy + 1 < n && class[idx + sy] != NodeClass::Exterior {
                    acc += values[idx + sy].sub(here).norm_sq();
                }
                if iz + 1 < n && class[idx + sz] != NodeClass::Exterior {
                    acc += values[idx + sz].sub(here).norm_sq();
                }
            }
        }
        0.5 * h * acc
    })
}

fn bulk_energy(field: &TensorField, f: impl Fn(&QTensor) -> f64 + Sync) -> f64 {
    let grid = field.grid();
    let n = grid.n();
    let weights = grid.weights();
    let values = field.values();
    crate::util::slab_sum(n, |iz| {
        let mut acc = 0.0;
        for k in iz * n * n..(iz + 1) * n * n {
            let w = weights[k];
            if w != 0.0 {
                acc += w * f(&values[k]);
            }
        }
        acc
    })
}

/// Sphere-constrained energy `E_lambda(Q) = int 1/2 |grad Q|^2 + lambda W(Q)`.
/// Fails unless the field is unit-norm on all non-Exterior nodes.
pub fn energy_constrained(field: &TensorField, lambda: f64) -> Result<EnergyBreakdown, EnergyError> {
    let violation = field.max_sphere_violation();
    if violation > 1e-6 {
        return Err(EnergyError::NotOnSphere { violation });
    }
    Ok(energy_constrained_unchecked(field, lambda))
}

pub(crate) fn energy_constrained_unchecked(field: &TensorField, lambda: f64) -> EnergyBreakdown {
    let dir = dirichlet_energy(field);
    let pot = lambda * bulk_energy(field, qtensor::potential_w);
    EnergyBreakdown::close(dir, pot, 0.0, 0.0)
}

/// Penalized energy `F_{lambda,mu}(Q) = int 1/2 |grad Q|^2 + lambda W(Q)
/// + mu/4 (1-|Q|^2)^2`.
pub fn energy_unconstrained(field: &TensorField, lambda: f64, mu: f64) -> EnergyBreakdown {
    let dir = dirichlet_energy(field);
    let pot = lambda * bulk_energy(field, qtensor::potential_w);
    let pen = 0.25
        * mu
        * bulk_energy(field, |q| {
            let d = 1.0 - q.norm_sq();
            d * d
        });
    EnergyBreakdown::close(dir, pot, pen, 0.0)
}

/// Ginzburg-Landau anchored energy
/// `GL_eps(Q_ref; Q) = E_lambda(Q) + 1/(4 eps^2) int (1-|Q|^2)^2 + 1/2 int |Q-Q_ref|^2`.
pub fn energy_gl(
    field: &TensorField,
    anchor: &TensorField,
    lambda: f64,
    epsilon: f64,
) -> Result<EnergyBreakdown, EnergyError> {
    if !field.same_grid(anchor) {
        return Err(EnergyError::GridMismatch);
    }
    let dir = dirichlet_energy(field);
    let pot = lambda * bulk_energy(field, qtensor::potential_w);
    let pen = bulk_energy(field, |q| {
        let d = 1.0 - q.norm_sq();
        d * d
    }) / (4.0 * epsilon * epsilon);
    let grid = field.grid();
    let weights = grid.weights();
    let fv = field.values();
    let av = anchor.values();
    let anchor_term = 0.5
        * chunked_sum(grid.node_count(), |idx| {
            let w = weights[idx];
            if w == 0.0 {
                0.0
            } else {
                w * fv[idx].sub(&av[idx]).norm_sq()
            }
        });
    Ok(EnergyBreakdown::close(dir, pot, pen, anchor_term))
}

/// Interior gradient of the discrete energy divided by `h^3`, packed in
/// the order of `grid.interior_nodes()`; no allocations.
fn assemble_residual_packed(
    field: &TensorField,
    out: &mut [QTensor],
    bulk: impl Fn(&QTensor) -> QTensor + Sync,
) {
    let grid = field.grid();
    let h = grid.spacing();
    let h2 = h * h;
    let h3 = h2 * h;
    let values = field.values();
    let weights = grid.weights();
    let [sx, sy, sz] = grid.strides();
    let interior = grid.interior_nodes();
    debug_assert_eq!(out.len(), interior.len());
    crate::util::par_fill(out, |k| {
        let idx = interior[k] as usize;
        let q = values[idx];
        // 7-point Laplacian; Interior stencils never touch Exterior nodes.
        let mut lap = q.scale(-6.0);
        lap = lap.add(&values[idx + sx]).add(&values[idx - sx]);
        lap = lap.add(&values[idx + sy]).add(&values[idx - sy]);
        lap = lap.add(&values[idx + sz]).add(&values[idx - sz]);
        let mut res = lap.scale(-1.0 / h2);
        res.axpy(weights[idx] / h3, &bulk(&q));
        res
    });
}

fn scatter_packed(field: &TensorField, packed: Vec<QTensor>) -> Vec<QTensor> {
    let grid = field.grid();
    let mut out = vec![QTensor::ZERO; grid.node_count()];
    for (k, &idx) in grid.interior_nodes().iter().enumerate() {
        out[idx as usize] = packed[k];
    }
    out
}

pub(crate) fn residual_unconstrained_packed(
    field: &TensorField,
    lambda: f64,
    mu: f64,
    out: &mut [QTensor],
) {
    assemble_residual_packed(field, out, move |q| {
        let mut b = qtensor::potential_grad(q).scale(lambda);
        b.axpy(-mu * (1.0 - q.norm_sq()), q);
        b
    });
}

pub(crate) fn residual_constrained_packed(field: &TensorField, lambda: f64, out: &mut [QTensor]) {
    assemble_residual_packed(field, out, move |q| qtensor::potential_grad(q).scale(lambda));
    let values = field.values();
    for (k, &idx) in field.grid().interior_nodes().iter().enumerate() {
        let q = values[idx as usize].normalized();
        out[k] = qtensor::tangent_project_unchecked(&q, &out[k]);
    }
}

pub(crate) fn residual_gl_packed(
    field: &TensorField,
    anchor: &TensorField,
    lambda: f64,
    epsilon: f64,
    out: &mut [QTensor],
) {
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    assemble_residual_packed(field, out, move |q| {
        let mut b = qtensor::potential_grad(q).scale(lambda);
        b.axpy(-inv_eps2 * (1.0 - q.norm_sq()), q);
        b
    });
    let grid = field.grid();
    let fv = field.values();
    let av = anchor.values();
    let weights = grid.weights();
    let h3 = grid.spacing().powi(3);
    for (k, &idx) in grid.interior_nodes().iter().enumerate() {
        let idx = idx as usize;
        let d = fv[idx].sub(&av[idx]);
        out[k].axpy(weights[idx] / h3, &d);
    }
}

/// Euler-Lagrange residual of the discrete `F_{lambda,mu}`:
/// `-lap_h Q + (w/h^3)(lambda grad W(Q) - mu (1-|Q|^2) Q)` per Interior
/// node (zero elsewhere). It is the exact gradient of the discrete
/// energy up to the `h^3` scaling.
pub fn residual_unconstrained(field: &TensorField, lambda: f64, mu: f64) -> Vec<QTensor> {
    let mut packed = vec![QTensor::ZERO; field.grid().interior_nodes().len()];
    residual_unconstrained_packed(field, lambda, mu, &mut packed);
    scatter_packed(field, packed)
}

/// Tangential Euler-Lagrange residual of the discrete constrained
/// energy: the projection of `-lap_h Q + (w/h^3) lambda grad W(Q)` onto
/// the tangent space at Q(node). Fails unless the field is unit-norm.
pub fn residual_constrained(field: &TensorField, lambda: f64) -> Result<Vec<QTensor>, EnergyError> {
    let violation = field.max_sphere_violation();
    if violation > 1e-6 {
        return Err(EnergyError::NotOnSphere { violation });
    }
    let mut packed = vec![QTensor::ZERO; field.grid().interior_nodes().len()];
    residual_constrained_packed(field, lambda, &mut packed);
    Ok(scatter_packed(field, packed))
}

/// Residual of the Ginzburg-Landau anchored energy.
pub fn residual_gl(
    field: &TensorField,
    anchor: &TensorField,
    lambda: f64,
    epsilon: f64,
) -> Vec<QTensor> {
    let mut packed = vec![QTensor::ZERO; field.grid().interior_nodes().len()];
    residual_gl_packed(field, anchor, lambda, epsilon, &mut packed);
    scatter_packed(field, packed)
}

/// `sqrt(sum h^3 |R(node)|^2)` over Interior nodes.
pub fn residual_l2(field: &TensorField, residual: &[QTensor]) -> f64 {
    let grid = field.grid();
    let h3 = grid.spacing().powi(3);
    let interior = grid.interior_nodes();
    chunked_sum(interior.len(), |k| h3 * residual[interior[k] as usize].norm_sq()).sqrt()
}

/// One row of the interior monotonicity scan.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityRow {
    pub radius: f64,
    /// `E_lambda(B_r(x0)) / r`.
    pub scaled_energy: f64,
    /// `int_{B_r \ B_prev} |x-x0|^{-1} |dQ/d|x-x0||^2` (0 on the first row).
    pub annulus_radial_term: f64,
    /// `int_{B_r} W(Q)`.
    pub potential_integral: f64,
}

#[derive(Debug, Clone)]
pub struct MonotonicityScan {
    pub center: [f64; 3],
    pub lambda: f64,
    pub rows: Vec<MonotonicityRow>,
}

impl MonotonicityScan {
    /// Largest violation of the scaled-energy monotonicity across
    /// consecutive radii, as a fraction of the local scaled energy.
    pub fn max_relative_decrease(&self) -> f64 {
        let mut worst = 0.0f64;
        for pair in self.rows.windows(2) {
            let drop = pair[0].scaled_energy - pair[1].scaled_energy;
            if drop > 0.0 {
                worst = worst.max(drop / pair[1].scaled_energy.max(1e-300));
            }
        }
        worst
    }

    /// Worst defect of the discrete monotonicity identity: each scaled
    /// energy difference must dominate the annulus radial term plus the
    /// potential term, up to `slack` relative to the local scaled energy.
    pub fn identity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for pair in self.rows.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            let lhs = hi.scaled_energy - lo.scaled_energy;
            // Trapezoid in t for 2 lambda int t^-2 E_W(t) dt.
            let pot = 2.0
                * self.lambda
                * 0.5
                * (lo.potential_integral / (lo.radius * lo.radius)
                    + hi.potential_integral / (hi.radius * hi.radius))
                * (hi.radius - lo.radius);
            let defect = (hi.annulus_radial_term + pot) - lhs;
            if defect > 0.0 {
                worst = worst.max(defect / hi.scaled_energy.max(1e-300));
            }
        }
        worst
    }
}

/// Scaled ball energies `E_lambda(B_r(x0))/r` over increasing radii,
/// with the radial-derivative annulus integrals of the monotonicity
/// identity. Densities use centered differences; ball quadrature uses
/// node-cell volume fractions.
pub fn monotonicity_scan(
    field: &TensorField,
    lambda: f64,
    center: [f64; 3],
    radii: &[f64],
) -> Result<MonotonicityScan, EnergyError> {
    let grid = field.grid();
    let h = grid.spacing();
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    if grid.spec().signed_distance(&center) < r_max + 2.0 * h {
        return Err(EnergyError::BallEscapesDomain {
            center,
            radius: r_max,
        });
    }
    let n = grid.node_count();
    let values = field.values();
    let class = grid.classes();
    let strides = grid.strides();

    // Nodal densities via centered differences (valid: all nodes within
    // r_max + h of the center are Interior by the distance check).
    let mut density = vec![0.0f64; n];
    let mut radial = vec![0.0f64; n];
    let mut potential = vec![0.0f64; n];
    for idx in 0..n {
        let x = grid.position(idx);
        let d = dist3(&x, &center);
        if d > r_max + h {
            continue;
        }
        if class[idx] == NodeClass::Exterior {
            continue;
        }
        let mut grad_sq = 0.0;
        let mut radial_vec = QTensor::ZERO;
        let rhat = if d > 1e-12 {
            [(x[0] - center[0]) / d, (x[1] - center[1]) / d, (x[2] - center[2]) / d]
        } else {
            [0.0, 0.0, 0.0]
        };
        for (dir, &s) in strides.iter().enumerate() {
            let dq = values[idx + s].sub(&values[idx - s]).scale(0.5 / h);
            grad_sq += dq.norm_sq();
            radial_vec.axpy(rhat[dir], &dq);
        }
        density[idx] = 0.5 * grad_sq + lambda * qtensor::potential_w(&values[idx]);
        potential[idx] = qtensor::potential_w(&values[idx]);
        radial[idx] = if d > 1e-12 {
            radial_vec.norm_sq() / d
        } else {
            0.0
        };
    }

    let mut rows = Vec::with_capacity(radii.len());
    let mut prev_r = 0.0f64;
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &r in &sorted {
        let mut energy = 0.0;
        let mut pot = 0.0;
        let mut annulus = 0.0;
        for idx in 0..n {
            let x = grid.position(idx);
            let d = dist3(&x, &center);
            if d > r + h {
                continue;
            }
            let frac = ball_cell_fraction(&x, h, &center, r);
            if frac == 0.0 {
                continue;
            }
            let vol = frac * h * h * h;
            energy += vol * density[idx];
            pot += vol * potential[idx];
            let frac_prev = ball_cell_fraction(&x, h, &center, prev_r);
            let shell = (frac - frac_prev).max(0.0) * h * h * h;
            annulus += shell * radial[idx];
        }
        rows.push(MonotonicityRow {
            radius: r,
            scaled_energy: energy / r,
            annulus_radial_term: annulus,
            potential_integral: pot,
        });
        prev_r = r;
    }
    Ok(MonotonicityScan {
        center,
        lambda,
        rows,
    })
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Fraction of the node cell inside the ball `B_r(center)`, subsampled.
fn ball_cell_fraction(x: &[f64; 3], h: f64, center: &[f64; 3], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let d = dist3(x, center);
    let reach = 0.5 * h * 3f64.sqrt();
    if d + reach <= r {
        return 1.0;
    }
    if d - reach >= r {
        return 0.0;
    }
    const SUB: usize = 4;
    let mut hits = 0usize;
    for sz in 0..SUB {
        for sy in 0..SUB {
            for sx in 0..SUB {
                let p = [
                    x[0] + ((sx as f64 + 0.5) / SUB as f64 - 0.5) * h,
                    x[1] + ((sy as f64 + 0.5) / SUB as f64 - 0.5) * h,
                    x[2] + ((sz as f64 + 0.5) / SUB as f64 - 0.5) * h,
                ];
                if dist3(&p, center) < r {
                    hits += 1;
                }
            }
        }
    }
    hits as f64 / (SUB * SUB * SUB) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{boundary_hedgehog, build_grid, DomainSpec};
    use crate::qtensor::{QTensor, SQRT_6, S_UNIT};

    fn constant_unit_field(n: usize, q: QTensor) -> TensorField {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, n).unwrap();
        let mut f = TensorField::zeros(grid);
        for v in f.values_mut() {
            *v = q;
        }
        f
    }

    #[test]
    fn constant_vacuum_field_has_zero_energy() {
        let f = constant_unit_field(24, QTensor::basis(0));
        let e = energy_constrained(&f, 1.0).unwrap();
        assert!(e.dirichlet.abs() < 1e-12);
        assert!(e.potential.abs() < 1e-10);
        assert_eq!(e.penalty, 0.0);
        assert_eq!(e.total, e.dirichlet + e.potential);
    }

    #[test]
    fn constant_maximal_biaxial_potential_value() {
        // Unit tensor with beta = 0: W = 1/(3 sqrt 6) times the volume.
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[b, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -b]];
        let q = crate::qtensor::from_matrix(&m, 1e-12).unwrap();
        let f = constant_unit_field(48, q);
        let lambda = 2.0;
        let e = energy_constrained(&f, lambda).unwrap();
        let vol = f.grid().domain_volume();
        let expect = lambda * vol / (3.0 * SQRT_6);
        assert!(
            (e.potential - expect).abs() / expect < 1e-12,
            "potential {} vs {}",
            e.potential,
            expect
        );
        let exact = lambda * (4.0 * std::f64::consts::PI / 3.0) / (3.0 * SQRT_6);
        assert!((e.potential - exact).abs() / exact < 0.02);
    }

    #[test]
    fn zero_field_energy_constants() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 32).unwrap();
        let f = TensorField::zeros(grid);
        let (lambda, mu) = (1.5, 3.0);
        let e = energy_unconstrained(&f, lambda, mu);
        let vol = f.grid().domain_volume();
        let expect_pot = lambda * vol / (12.0 * SQRT_6);
        let expect_pen = 0.25 * mu * vol;
        assert!((e.potential - expect_pot).abs() / expect_pot < 1e-12);
        assert!((e.penalty - expect_pen).abs() / expect_pen < 1e-12);
        // mu scaling doubles the penalty part only.
        let e2 = energy_unconstrained(&f, lambda, 2.0 * mu);
        assert!((e2.penalty - 2.0 * e.penalty).abs() < 1e-12 * e.penalty.abs());
        assert!((e2.potential - e.potential).abs() == 0.0);
    }

    #[test]
    fn unconstrained_matches_constrained_on_unit_fields() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 24).unwrap();
        let mut f = boundary_hedgehog(&grid);
        f.fill_interior(|x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().max(1e-9);
            crate::qtensor::uniaxial([x[0] / r, x[1] / r, x[2] / r], S_UNIT).unwrap()
        });
        let a = energy_constrained(&f, 0.7).unwrap();
        let b = energy_unconstrained(&f, 0.7, 5.0);
        assert_eq!(a.dirichlet, b.dirichlet);
        assert_eq!(a.potential, b.potential);
        // Unit-norm up to round-off: the penalty is quartically small.
        assert!(b.penalty < 1e-24);
    }

    #[test]
    fn gl_energy_parts() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 24).unwrap();
        let mut anchor = TensorField::zeros(grid.clone());
        for v in anchor.values_mut() {
            *v = QTensor::basis(0);
        }
        let q = anchor.clone();
        let e = energy_gl(&q, &anchor, 1.0, 0.1).unwrap();
        assert_eq!(e.gl_anchor, 0.0);
        assert_eq!(e.penalty, 0.0);
        // Halving epsilon quadruples the penalty part.
        let mut off = anchor.clone();
        for v in off.values_mut() {
            *v = v.scale(1.1);
        }
        let p1 = energy_gl(&off, &anchor, 1.0, 0.2).unwrap().penalty;
        let p2 = energy_gl(&off, &anchor, 1.0, 0.1).unwrap().penalty;
        assert!((p2 - 4.0 * p1).abs() < 1e-10 * p2);
        // Anchor at zero: gl_anchor = |Omega|/2 for a unit field.
        let zero = TensorField::zeros(grid.clone());
        let e0 = energy_gl(&anchor, &zero, 1.0, 0.1).unwrap();
        let vol = grid.domain_volume();
        assert!((e0.gl_anchor - 0.5 * vol).abs() < 1e-12 * vol);
    }

    #[test]
    fn residuals_vanish_on_critical_constants() {
        let spec = DomainSpec::ball(1.0).unwrap();
        let grid = build_grid(&spec, 24).unwrap();
        // Zero field: critical point of the bulk.
        let zero = TensorField::zeros(grid.clone());
        let res = residual_unconstrained(&zero, 1.0, 10.0);
        let l2 = residual_l2(&zero, &res);
        assert!(l2 < 1e-14, "zero-field residual {l2}");
        // Constant vacuum field with matching boundary: both residuals vanish.
        let mut f = TensorField::zeros(grid);
        for v in f.values_mut() {
            *v = QTensor::basis(0);
        }
        let res_u = residual_unconstrained(&f, 2.0, 7.0);
        assert!(residual_l2(&f, &res_u) < 1e-12);
        let res_c = residual_constrained(&f, 2.0).unwrap();
        assert!(residual_l2(&f, &res_c) < 1e-12);
    }

    #[test]
    fn hedgehog_dirichlet_energy_on_annulus() {
        // 1/2 int_{0.25<|x|<1} 6/|x|^2 = 12 pi (1 - 0.25), within 3% at n=96.
        let spec = DomainSpec::new(1.0, vec![([0.0, 0.0, 0.0], 0.25)]).unwrap();
        let grid = build_grid(&spec, 96).unwrap();
        let mut f = boundary_hedgehog(&grid);
        f.fill_interior(|x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            crate::qtensor::uniaxial([x[0] / r, x[1] / r, x[2] / r], S_UNIT).unwrap()
        });
        let e = energy_constrained(&f, 0.0).unwrap();
        let exact = 12.0 * std::f64::consts::PI * 0.75;
        assert!(
            (e.dirichlet - exact).abs() / exact < 0.03,
            "dirichlet {} vs {}",
            e.dirichlet,
            exact
        );
    }

    #[test]
    fn monotonicity_constant_field_closed_form() {
        // Constant field with W(c) > 0: ratio = lambda W(c) (4 pi/3) r^2.
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[b, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -b]];
        let q = crate::qtensor::from_matrix(&m, 1e-12).unwrap();
        let f = constant_unit_field(48, q);
        let lambda = 1.0;
        let w = crate::qtensor::potential_w(&q);
        let radii = [0.2, 0.4, 0.6];
        let scan = monotonicity_scan(&f, lambda, [0.0, 0.0, 0.0], &radii).unwrap();
        for row in &scan.rows {
            let expect = lambda * w * (4.0 * std::f64::consts::PI / 3.0) * row.radius * row.radius;
            assert!(
                (row.scaled_energy - expect).abs() / expect < 0.02,
                "r={} got {} expect {}",
                row.radius,
                row.scaled_energy,
                expect
            );
        }
        // Strictly increasing.
        assert!(scan.rows.windows(2).all(|p| p[1].scaled_energy > p[0].scaled_energy));
        assert_eq!(scan.max_relative_decrease(), 0.0);
    }

    #[test]
    fn monotonicity_ball_escape_rejected() {
        let f = constant_unit_field(24, QTensor::basis(0));
        let err = monotonicity_scan(&f, 1.0, [0.6, 0.0, 0.0], &[0.5]);
        assert!(matches!(err, Err(EnergyError::BallEscapesDomain { .. })));
    }
}
