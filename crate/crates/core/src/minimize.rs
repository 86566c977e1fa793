//! Descent drivers: projected gradient on the sphere constraint,
//! penalized descent with mu-continuation, and the Ginzburg-Landau
//! anchored approximation.
//!
//! All drivers share one engine: steepest descent with a
//! Barzilai-Borwein initial step and Armijo backtracking (factor 0.5,
//! c = 1e-4). Every accepted step strictly decreases the discrete
//! objective; the sphere-constrained path retracts by pointwise
//! normalization. A stalled line search halves the step cap once and
//! then fails loudly rather than report a non-converged field.

use crate::domain::TensorField;
use crate::energy::{self, EnergyBreakdown};
use crate::qtensor::{self, QTensor};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("line search stalled at iteration {iteration} (energy {energy:.6e})")]
    LineSearchStalled { iteration: usize, energy: f64 },
    #[error("initial field violates the unit-norm constraint by {violation:.3e}")]
    NotOnSphere { violation: f64 },
}

/// Options shared by all descent drivers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when residual L2 / sqrt(|Omega|) falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Amplitude of the seeded tangent noise added by the default
    /// initializer (0 disables).
    pub noise_amplitude: f64,
    pub seed: u64,
    /// Record every k-th energy value in the trace.
    pub trace_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-5,
            max_iters: 50_000,
            noise_amplitude: 0.1,
            seed: 0,
            trace_every: 1,
        }
    }
}

/// Outcome of a single descent run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    /// Raw residual L2 norm, `sqrt(sum h^3 |R|^2)`.
    pub residual_l2: f64,
    /// Residual scaled by `1/sqrt(|Omega|)`, the stopping quantity.
    pub residual_scaled: f64,
    /// Min/max of |Q| over the closed domain.
    pub min_norm: f64,
    pub max_norm: f64,
    /// `(iteration, objective)` samples; nonincreasing by construction.
    pub energy_trace: Vec<(usize, f64)>,
    /// Number of objective evaluations spent in line searches.
    pub objective_evals: usize,
    pub wall_seconds: f64,
}

enum Model<'a> {
    Constrained {
        lambda: f64,
    },
    Penalized {
        lambda: f64,
        mu: f64,
    },
    GinzburgLandau {
        lambda: f64,
        epsilon: f64,
        anchor: &'a TensorField,
    },
}

impl Model<'_> {
    fn objective(&self, field: &TensorField) -> f64 {
        match self {
            Model::Constrained { lambda } => {
                energy::energy_constrained_unchecked(field, *lambda).total
            }
            Model::Penalized { lambda, mu } => {
                energy::energy_unconstrained(field, *lambda, *mu).total
            }
            Model::GinzburgLandau {
                lambda,
                epsilon,
                anchor,
            } => energy::energy_gl(field, anchor, *lambda, *epsilon)
                .expect("anchor grid checked at entry")
                .total,
        }
    }

    fn breakdown(&self, field: &TensorField) -> EnergyBreakdown {
        match self {
            Model::Constrained { lambda } => energy::energy_constrained_unchecked(field, *lambda),
            Model::Penalized { lambda, mu } => energy::energy_unconstrained(field, *lambda, *mu),
            Model::GinzburgLandau {
                lambda,
                epsilon,
                anchor,
            } => energy::energy_gl(field, anchor, *lambda, *epsilon).expect("checked"),
        }
    }

    fn residual_packed(&self, field: &TensorField, out: &mut [QTensor]) {
        match self {
            Model::Constrained { lambda } => {
                energy::residual_constrained_packed(field, *lambda, out)
            }
            Model::Penalized { lambda, mu } => {
                energy::residual_unconstrained_packed(field, *lambda, *mu, out)
            }
            Model::GinzburgLandau {
                lambda,
                epsilon,
                anchor,
            } => energy::residual_gl_packed(field, anchor, *lambda, *epsilon, out),
        }
    }

    fn constrained(&self) -> bool {
        matches!(self, Model::Constrained { .. })
    }
}

fn now_seconds() -> f64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Shared descent engine. `field` enters with frozen boundary data and
/// leaves as the located critical point.
fn descend(
    field: &mut TensorField,
    model: &Model,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    let start = now_seconds();
    let grid = field.grid().clone();
    let h = grid.spacing();
    let h3 = h * h * h;
    let vol = grid.domain_volume();
    let interior: Vec<usize> = grid.interior_nodes().iter().map(|&i| i as usize).collect();
    let m = interior.len();

    let mut energy_now = model.objective(field);
    let mut trace = vec![(0usize, energy_now)];
    let mut grad = vec![QTensor::ZERO; m];
    model.residual_packed(field, &mut grad);
    let mut grad_sq = grad_norm_sq(&grad, h3);

    // Initial step on the inverse scale of the discrete Laplacian.
    let mut step = h * h / 12.0;
    let mut step_cap = 1.0;
    let mut halved_cap = false;
    let mut prev_vals = vec![QTensor::ZERO; m];
    let mut prev_grad = vec![QTensor::ZERO; m];
    let mut have_prev = false;

    let mut iterations = 0usize;
    let mut objective_evals = 0usize;
    let mut trial = field.clone();
    while iterations < opts.max_iters {
        let residual_scaled = (grad_sq.sqrt()) / vol.sqrt();
        if residual_scaled <= opts.tol {
            break;
        }

        // Barzilai-Borwein (second variant) step from the previous
        // accepted move, with a growth clamp so the monotone line
        // search rarely backtracks more than once or twice.
        if have_prev {
            let mut sy = 0.0;
            let mut yy = 0.0;
            for (k, &idx) in interior.iter().enumerate() {
                let s = field.values()[idx].sub(&prev_vals[k]);
                let y = grad[k].sub(&prev_grad[k]);
                sy += s.dot(&y);
                yy += y.norm_sq();
            }
            if sy > 0.0 && yy > 0.0 {
                step = (sy / yy).clamp(step / 8.0, step * 8.0).clamp(1e-13, step_cap);
            }
        }

        for (k, &idx) in interior.iter().enumerate() {
            prev_vals[k] = field.values()[idx];
        }
        prev_grad.copy_from_slice(&grad);
        have_prev = true;

        // Armijo backtracking on the true objective.
        let c_armijo = 1e-4;
        let mut tau = step.min(step_cap);
        let mut accepted = false;
        for _ in 0..60 {
            take_step(&mut trial, &prev_vals, &grad, &interior, tau, model.constrained());
            let trial_energy = model.objective(&trial);
            objective_evals += 1;
            if trial_energy <= energy_now - c_armijo * tau * grad_sq {
                field.swap_values(&mut trial);
                energy_now = trial_energy;
                accepted = true;
                break;
            }
            tau *= 0.5;
            if tau < 1e-16 {
                break;
            }
        }
        if !accepted {
            if !halved_cap {
                halved_cap = true;
                step_cap *= 0.5;
                step = (h * h / 12.0).min(step_cap);
                continue;
            }
            return Err(SolveError::LineSearchStalled {
                iteration: iterations,
                energy: energy_now,
            });
        }
        step = tau;
        iterations += 1;
        if iterations % opts.trace_every == 0 {
            trace.push((iterations, energy_now));
        }
        model.residual_packed(field, &mut grad);
        grad_sq = grad_norm_sq(&grad, h3);
    }

    let residual_l2 = grad_sq.sqrt();
    let (min_norm, max_norm) = field.norm_range();
    if trace.last().map(|&(i, _)| i) != Some(iterations) {
        trace.push((iterations, energy_now));
    }
    Ok(SolveReport {
        iterations,
        energy: model.breakdown(field),
        residual_l2,
        residual_scaled: residual_l2 / vol.sqrt(),
        min_norm,
        max_norm,
        energy_trace: trace,
        objective_evals,
        wall_seconds: now_seconds() - start,
    })
}

fn grad_norm_sq(grad: &[QTensor], h3: f64) -> f64 {
    let mut s = 0.0;
    for g in grad {
        s += g.norm_sq();
    }
    s * h3
}

/// Write `prev - tau * grad` over the interior of `trial` (boundary and
/// exterior values are already in place), retracting to the sphere when
/// requested. `prev` and `grad` are packed in interior order.
fn take_step(
    trial: &mut TensorField,
    prev: &[QTensor],
    grad: &[QTensor],
    interior: &[usize],
    tau: f64,
    retract: bool,
) {
    let vals = trial.values_mut();
    for (k, &idx) in interior.iter().enumerate() {
        let mut q = prev[k];
        q.axpy(-tau, &grad[k]);
        vals[idx] = if retract {
            let n = q.norm();
            if n > 1e-14 {
                q.scale(1.0 / n)
            } else {
                q
            }
        } else {
            q
        };
    }
}

/// Minimize the sphere-constrained energy `E_lambda` from `field0`
/// (unit-norm, boundary frozen) by projected gradient descent with
/// normalization retraction.
pub fn minimize_constrained(
    field0: &TensorField,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<(TensorField, SolveReport), SolveError> {
    let violation = field0.max_sphere_violation();
    if violation > 1e-6 {
        return Err(SolveError::NotOnSphere { violation });
    }
    let mut field = field0.clone();
    let report = descend(&mut field, &Model::Constrained { lambda }, opts)?;
    Ok((field, report))
}

/// Minimize the penalized energy `F_{lambda,mu}` from `field0`
/// (boundary frozen, unit-norm on the boundary band).
pub fn minimize_unconstrained(
    field0: &TensorField,
    lambda: f64,
    mu: f64,
    opts: &SolveOptions,
) -> Result<(TensorField, SolveReport), SolveError> {
    let mut field = field0.clone();
    let report = descend(&mut field, &Model::Penalized { lambda, mu }, opts)?;
    Ok((field, report))
}

/// One stage of a mu-continuation ladder.
#[derive(Debug, Clone)]
pub struct MuStage {
    pub mu: f64,
    pub field: TensorField,
    pub report: SolveReport,
    /// `mu int (1-|Q|^2)^2`, four times the penalty part.
    pub mu_penalty_integral: f64,
}

/// Penalized minimization over a strictly increasing mu ladder, each
/// stage warm-started from the previous one.
pub fn mu_continuation(
    field0: &TensorField,
    lambda: f64,
    mu_ladder: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<MuStage>, SolveError> {
    assert!(
        mu_ladder.windows(2).all(|p| p[1] > p[0]),
        "mu ladder must be strictly increasing"
    );
    let mut stages = Vec::with_capacity(mu_ladder.len());
    let mut current = field0.clone();
    for &mu in mu_ladder {
        let (field, report) = minimize_unconstrained(&current, lambda, mu, opts)?;
        current = field.clone();
        let mu_penalty_integral = 4.0 * report.energy.penalty;
        stages.push(MuStage {
            mu,
            field,
            report,
            mu_penalty_integral,
        });
    }
    Ok(stages)
}

/// One stage of a Ginzburg-Landau epsilon ladder.
#[derive(Debug, Clone)]
pub struct GlStage {
    pub epsilon: f64,
    pub field: TensorField,
    pub report: SolveReport,
    /// `||Q_eps - anchor||_{L^2}`.
    pub anchor_distance_l2: f64,
}

/// Minimize the anchored Ginzburg-Landau energy `GL_eps(anchor; .)` over
/// a decreasing epsilon ladder, warm-starting from the anchor.
pub fn minimize_gl(
    anchor: &TensorField,
    lambda: f64,
    eps_ladder: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<GlStage>, SolveError> {
    assert!(
        eps_ladder.windows(2).all(|p| p[1] < p[0]),
        "epsilon ladder must be strictly decreasing"
    );
    let violation = anchor.max_sphere_violation();
    if violation > 1e-6 {
        return Err(SolveError::NotOnSphere { violation });
    }
    let mut stages = Vec::with_capacity(eps_ladder.len());
    let mut current = anchor.clone();
    for &epsilon in eps_ladder {
        let mut field = current.clone();
        let report = descend(
            &mut field,
            &Model::GinzburgLandau {
                lambda,
                epsilon,
                anchor,
            },
            opts,
        )?;
        current = field.clone();
        let grid = field.grid();
        let weights = grid.weights();
        let dist = crate::util::chunked_sum(grid.node_count(), |idx| {
            let w = weights[idx];
            if w == 0.0 {
                0.0
            } else {
                w * field.values()[idx].sub(&anchor.values()[idx]).norm_sq()
            }
        })
        .sqrt();
        stages.push(GlStage {
            epsilon,
            field,
            report,
            anchor_distance_l2: dist,
        });
    }
    Ok(stages)
}

/// Discrete harmonic extension of the boundary data: the 7-point
/// Laplace system with Dirichlet values, solved by conjugate gradients
/// on the interior unknowns (a linear solve, so the descent drivers are
/// not involved). Stops when the residual L2 scaled by `1/sqrt(|Omega|)`
/// falls below `tol`.
pub fn harmonic_extension(bc: &TensorField, tol: f64, max_iters: usize) -> TensorField {
    let grid = bc.grid().clone();
    let interior: Vec<usize> = grid.interior_nodes().iter().map(|&i| i as usize).collect();
    let mut field = bc.clone();
    // Zero interior start.
    for &idx in &interior {
        field.values_mut()[idx] = QTensor::ZERO;
    }
    let h = grid.spacing();
    let h2 = h * h;
    let h3 = h2 * h;
    let vol = grid.domain_volume();
    let stop = tol * vol.sqrt() / h3.sqrt();

    // Map node -> interior slot for the stencil.
    let mut slot_of = vec![u32::MAX; grid.node_count()];
    for (k, &idx) in interior.iter().enumerate() {
        slot_of[idx] = k as u32;
    }
    let strides = grid.strides();
    let apply_a = |x: &[QTensor], out: &mut [QTensor], boundary: &TensorField| {
        for (k, &idx) in interior.iter().enumerate() {
            let center = x[k];
            let mut acc = center.scale(6.0);
            for &s in &strides {
                for nb in [idx + s, idx - s] {
                    let slot = slot_of[nb];
                    if slot != u32::MAX {
                        acc = acc.sub(&x[slot as usize]);
                    } else {
                        // Dirichlet neighbor contributes to the RHS via
                        // the boundary argument (zero when x is a CG
                        // direction).
                        acc = acc.sub(boundary.value(nb));
                    }
                }
            }
            out[k] = acc.scale(1.0 / h2);
        }
    };

    let zero_bc = TensorField::zeros(grid.clone());
    let m = interior.len();
    let mut x = vec![QTensor::ZERO; m];
    let mut r = vec![QTensor::ZERO; m];
    // r = b - A x0 with x0 = 0: apply to zero with the true boundary and
    // negate.
    apply_a(&x, &mut r, bc);
    for v in r.iter_mut() {
        *v = v.scale(-1.0);
    }
    let mut p = r.clone();
    let mut ap = vec![QTensor::ZERO; m];
    let dot = |a: &[QTensor], b: &[QTensor]| -> f64 {
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += x.dot(y);
        }
        s
    };
    let mut rr = dot(&r, &r);
    for _ in 0..max_iters {
        if rr.sqrt() <= stop {
            break;
        }
        apply_a(&p, &mut ap, &zero_bc);
        let alpha = rr / dot(&p, &ap).max(1e-300);
        for k in 0..m {
            x[k].axpy(alpha, &p[k]);
            r[k].axpy(-alpha, &ap[k]);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..m {
            let mut np = r[k];
            np.axpy(beta, &p[k]);
            p[k] = np;
        }
    }
    for (k, &idx) in interior.iter().enumerate() {
        field.values_mut()[idx] = x[k];
    }
    field
}

/// Trilinear prolongation of a (coarse) field onto a finer grid over
/// the same domain; boundary and exterior values are re-imposed from
/// `bc_fine`. A warm start for solvers at higher resolution.
pub fn prolong(coarse: &TensorField, bc_fine: &TensorField) -> TensorField {
    let mut fine = bc_fine.clone();
    let grid = fine.grid().clone();
    for &idx in grid.interior_nodes() {
        let idx = idx as usize;
        let p = grid.position(idx);
        fine.values_mut()[idx] = crate::topology::sample_field(coarse, &p);
    }
    fine
}

/// Default start for the constrained solver: normalized harmonic
/// extension of the boundary data plus seeded tangent noise. The noise
/// breaks the symmetry of saddle-point starts such as the constant-norm
/// hedgehog.
pub fn default_start_constrained(bc: &TensorField, opts: &SolveOptions) -> TensorField {
    let mut field = harmonic_extension(bc, 1e-8, 10_000);
    field.normalize_all();
    if opts.noise_amplitude > 0.0 {
        add_tangent_noise(&mut field, opts.noise_amplitude, opts.seed);
    }
    field
}

/// Add seeded random tangent noise of the given amplitude at every
/// Interior node, renormalizing afterwards. Deterministic in the seed.
pub fn add_tangent_noise(field: &mut TensorField, amplitude: f64, seed: u64) {
    let mut rng = crate::util::seeded_rng(seed);
    let grid = field.grid().clone();
    let vals = field.values_mut();
    for &idx in grid.interior_nodes() {
        let idx = idx as usize;
        let mut xi = [0.0; 5];
        for slot in xi.iter_mut() {
            *slot = rng.gen_range(-1.0..1.0);
        }
        let q = vals[idx].normalized();
        let noise = qtensor::tangent_project_unchecked(&q, &QTensor::new(xi));
        let mut out = q;
        out.axpy(amplitude, &noise);
        vals[idx] = out.normalized();
    }
}

/// Renormalize a penalized minimizer onto the sphere (for cross-solver
/// comparisons); boundary values are already unit-norm.
pub fn renormalized(field: &TensorField) -> TensorField {
    let mut out = field.clone();
    out.normalize_all();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{boundary_hedgehog, build_grid, DomainSpec};
    use crate::energy::{energy_constrained, residual_l2, residual_unconstrained};

    fn ball_grid(n: usize) -> std::sync::Arc<crate::domain::Grid> {
        build_grid(&DomainSpec::ball(1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn harmonic_extension_solves_laplace() {
        let grid = ball_grid(24);
        let bc = boundary_hedgehog(&grid);
        let field = harmonic_extension(&bc, 1e-8, 10_000);
        let res = residual_unconstrained(&field, 0.0, 0.0);
        let l2 = residual_l2(&field, &res);
        assert!(l2 < 1e-6, "residual {l2}");
        // Harmonic extension of degree-2 boundary data vanishes
        // quadratically at the center.
        let c = grid.nearest_node(&[0.0, 0.0, 0.0]);
        assert!(field.value(c).norm() < 0.02);
    }

    #[test]
    fn descent_reproduces_harmonic_extension_at_zero_couplings() {
        // mu = 0, lambda = 0 is a linear problem: the descent driver
        // must land on the same discrete harmonic extension.
        let grid = ball_grid(16);
        let bc = boundary_hedgehog(&grid);
        let reference = harmonic_extension(&bc, 1e-9, 10_000);
        let opts = SolveOptions {
            tol: 2e-7,
            max_iters: 30_000,
            noise_amplitude: 0.0,
            seed: 0,
            trace_every: 512,
        };
        let (field, report) = minimize_unconstrained(&bc, 0.0, 0.0, &opts).unwrap();
        let res = residual_unconstrained(&field, 0.0, 0.0);
        assert!(residual_l2(&field, &res) < 1e-6, "{}", report.residual_l2);
        let mut worst = 0.0f64;
        for (a, b) in field.values().iter().zip(reference.values()) {
            worst = worst.max(a.sub(b).norm());
        }
        assert!(worst < 1e-4, "solutions differ by {worst}");
    }

    #[test]
    fn constant_start_is_immediately_converged() {
        let grid = ball_grid(20);
        let mut f = crate::domain::TensorField::zeros(grid);
        for v in f.values_mut() {
            *v = crate::qtensor::QTensor::basis(0);
        }
        let (out, report) = minimize_constrained(&f, 1.0, &SolveOptions::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(out.max_sphere_violation() < 1e-12);
    }

    #[test]
    fn descent_decreases_energy_and_respects_constraint() {
        let grid = ball_grid(20);
        let bc = boundary_hedgehog(&grid);
        let opts = SolveOptions {
            tol: 1e-4,
            max_iters: 4000,
            noise_amplitude: 0.1,
            seed: 7,
            trace_every: 1,
        };
        let start = default_start_constrained(&bc, &opts);
        assert!(start.max_sphere_violation() < 1e-9);
        let e0 = energy_constrained(&start, 0.0).unwrap().total;
        let (field, report) = minimize_constrained(&start, 0.0, &opts).unwrap();
        assert!(report.energy.total <= e0);
        assert!(field.max_sphere_violation() <= 1e-9);
        // Energy trace nonincreasing.
        assert!(report
            .energy_trace
            .windows(2)
            .all(|p| p[1].1 <= p[0].1 + 1e-12));
        assert!(report.residual_scaled <= 1e-4);
    }

    #[test]
    fn determinism_bitwise_energy_trace() {
        let grid = ball_grid(16);
        let bc = boundary_hedgehog(&grid);
        let opts = SolveOptions {
            tol: 1e-3,
            max_iters: 300,
            noise_amplitude: 0.1,
            seed: 42,
            trace_every: 1,
        };
        let s1 = default_start_constrained(&bc, &opts);
        let s2 = default_start_constrained(&bc, &opts);
        let (_, r1) = minimize_constrained(&s1, 1.0, &opts).unwrap();
        let (_, r2) = minimize_constrained(&s2, 1.0, &opts).unwrap();
        assert_eq!(r1.energy_trace, r2.energy_trace);
    }

    #[test]
    fn penalized_final_energy_not_above_start() {
        let grid = ball_grid(16);
        let bc = boundary_hedgehog(&grid);
        let start = harmonic_extension(&bc, 1e-6, 10_000);
        let opts = SolveOptions {
            tol: 1e-4,
            max_iters: 3000,
            ..Default::default()
        };
        let e0 = crate::energy::energy_unconstrained(&start, 1.0, 20.0).total;
        let (_, report) = minimize_unconstrained(&start, 1.0, 20.0, &opts).unwrap();
        assert!(report.energy.total <= e0);
        assert!(report.max_norm <= 1.0 + 5.0 * start.grid().spacing().powi(2));
    }
}
