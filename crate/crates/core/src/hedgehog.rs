//! The radial hedgehog: its scalar profile as a two-point boundary
//! value problem, the assembled 3D field, and the explicit
//! second-variation instability machinery.
//!
//! Substituting `H(x) = s(r) (n x n - I/3)` with `n = x/|x|` into the
//! Euler-Lagrange equation of the penalized energy reduces it to the
//! scalar ODE
//!
//! ```text
//! s'' + (2/r) s' - (6/r^2) s + g(s) = 0,
//! g(s) = lambda (s^2/3 - sqrt(6) s^3 / 9) + mu s (1 - 2 s^2 / 3),
//! ```
//!
//! with `s(0) = 0` and `s(1) = sqrt(3/2)`. Both bulk terms vanish at
//! `s = sqrt(3/2)`, the vacuum value; the derived form is validated in
//! 3D through the residual of the assembled field. The profile is
//! solved by damped Newton on a central-difference discretization with
//! continuation in mu, cross-checked against a shooting integrator at
//! moderate stiffness.

use crate::domain::{Grid, NodeClass, TensorField};
use crate::energy;
use crate::qtensor::{self, QTensor, S_UNIT, SQRT_6};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HedgehogError {
    #[error("profile relaxation failed to converge (stage mu = {mu}, |F| = {residual:.3e})")]
    NoConvergence { mu: f64, residual: f64 },
    #[error("assembled hedgehog requires a hole-free ball domain")]
    DomainMismatch,
    #[error("radial profile does not vanish at r = 0 (value {value:.3e})")]
    SingularIntegrand { value: f64 },
    #[error("perturbation is not tangent (max |H : Phi| = {dot:.3e})")]
    NotTangent { dot: f64 },
}

/// Bulk force of the radial ODE.
fn bulk_g(s: f64, lambda: f64, mu: f64) -> f64 {
    lambda * (s * s / 3.0 - SQRT_6 * s * s * s / 9.0) + mu * s * (1.0 - 2.0 * s * s / 3.0)
}

fn bulk_g_prime(s: f64, lambda: f64, mu: f64) -> f64 {
    lambda * (2.0 * s / 3.0 - SQRT_6 * s * s / 3.0) + mu * (1.0 - 2.0 * s * s)
}

/// Sampled radial hedgehog profile on the uniform grid of [0, 1].
#[derive(Debug, Clone)]
pub struct HedgehogProfile {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    /// Sup-norm residual of the discretized ODE at the solution.
    pub max_residual: f64,
}

impl HedgehogProfile {
    /// Linear interpolation of s at radius `r` (clamped to [0, 1]).
    pub fn sample(&self, r: f64) -> f64 {
        let n = self.r.len();
        let t = r.clamp(0.0, 1.0) * (n as f64 - 1.0);
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        self.s[i] * (1.0 - frac) + self.s[i + 1] * frac
    }

    /// Smallest forward difference of consecutive samples.
    pub fn min_increment(&self) -> f64 {
        self.s
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solve the hedgehog profile BVP by damped Newton with mu-continuation.
pub fn solve_profile(lambda: f64, mu: f64, nr: usize) -> Result<HedgehogProfile, HedgehogError> {
    assert!(lambda > 0.0 && mu > 0.0, "profile needs lambda > 0, mu > 0");
    assert!(nr >= 256, "profile grid too coarse");
    let n = nr;
    let dr = 1.0 / (n as f64 - 1.0);
    let r: Vec<f64> = (0..n).map(|i| i as f64 * dr).collect();
    // Initial guess: linear rise to the vacuum value.
    let mut s: Vec<f64> = r.iter().map(|&ri| S_UNIT * ri).collect();
    s[n - 1] = S_UNIT;

    // Continuation ladder in mu keeps Newton in its basin for stiff
    // penalties.
    let mut ladder = Vec::new();
    let mut m = mu.min(10.0);
    while m < mu {
        ladder.push(m);
        m *= 4.0;
    }
    ladder.push(mu);

    for &stage_mu in &ladder {
        newton_relax(&mut s, &r, dr, lambda, stage_mu)?;
    }
    let max_residual = ode_residual_sup(&s, &r, dr, lambda, mu);
    Ok(HedgehogProfile {
        r,
        s,
        lambda,
        mu,
        max_residual,
    })
}

fn ode_residual(s: &[f64], r: &[f64], dr: f64, lambda: f64, mu: f64, i: usize) -> f64 {
    let lap = (s[i + 1] - 2.0 * s[i] + s[i - 1]) / (dr * dr);
    let adv = (s[i + 1] - s[i - 1]) / (2.0 * dr) * (2.0 / r[i]);
    lap + adv - 6.0 * s[i] / (r[i] * r[i]) + bulk_g(s[i], lambda, mu)
}

fn ode_residual_sup(s: &[f64], r: &[f64], dr: f64, lambda: f64, mu: f64) -> f64 {
    (1..s.len() - 1)
        .map(|i| ode_residual(s, r, dr, lambda, mu, i).abs())
        .fold(0.0, f64::max)
}

fn newton_relax(
    s: &mut [f64],
    r: &[f64],
    dr: f64,
    lambda: f64,
    mu: f64,
) -> Result<(), HedgehogError> {
    let n = s.len();
    let m = n - 2;
    let mut delta = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];

    let mut res_norm = ode_residual_sup(s, r, dr, lambda, mu);
    for _ in 0..100 {
        if res_norm < 1e-10 {
            return Ok(());
        }
        for i in 1..n - 1 {
            let k = i - 1;
            rhs[k] = -ode_residual(s, r, dr, lambda, mu, i);
            diag[k] = -2.0 / (dr * dr) - 6.0 / (r[i] * r[i]) + bulk_g_prime(s[i], lambda, mu);
            lower[k] = 1.0 / (dr * dr) - 1.0 / (r[i] * dr);
            upper[k] = 1.0 / (dr * dr) + 1.0 / (r[i] * dr);
        }
        let mut diag_work = diag.clone();
        let mut rhs_work = rhs.clone();
        thomas(&lower, &mut diag_work, &upper, &mut rhs_work, &mut delta);

        // Damped update: accept the longest step that reduces |F|.
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial: Vec<f64> = s.to_vec();
            for (k, d) in delta.iter().enumerate() {
                trial[k + 1] += alpha * d;
            }
            let trial_norm = ode_residual_sup(&trial, r, dr, lambda, mu);
            if trial_norm < res_norm {
                s.copy_from_slice(&trial);
                res_norm = trial_norm;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return Err(HedgehogError::NoConvergence {
                mu,
                residual: res_norm,
            });
        }
    }
    if res_norm < 1e-8 {
        Ok(())
    } else {
        Err(HedgehogError::NoConvergence {
            mu,
            residual: res_norm,
        })
    }
}

/// Tridiagonal solve (Thomas algorithm); `diag` and `rhs` are consumed.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64], out: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
    }
}

/// Independent shooting integrator for cross-validation at moderate mu:
/// integrate `s'' = 6 s / r^2 - (2/r) s' - g(s)` outward from
/// `s ~ a r^2` and bisect on `a` to hit `s(1) = sqrt(3/2)`.
pub fn shoot_profile(lambda: f64, mu: f64, nr: usize) -> Option<Vec<(f64, f64)>> {
    let integrate = |a: f64, mut record: Option<&mut Vec<(f64, f64)>>| -> f64 {
        let r0 = 1e-4;
        let mut r = r0;
        let mut s = a * r0 * r0;
        let mut ds = 2.0 * a * r0;
        let dr = (1.0 - r0) / (nr as f64);
        if let Some(v) = record.as_deref_mut() {
            v.push((r, s));
        }
        let rhs = |r: f64, s: f64, ds: f64| -> (f64, f64) {
            (ds, 6.0 * s / (r * r) - 2.0 * ds / r - bulk_g(s, lambda, mu))
        };
        for _ in 0..nr {
            // Classical RK4.
            let (k1s, k1d) = rhs(r, s, ds);
            let (k2s, k2d) = rhs(r + 0.5 * dr, s + 0.5 * dr * k1s, ds + 0.5 * dr * k1d);
            let (k3s, k3d) = rhs(r + 0.5 * dr, s + 0.5 * dr * k2s, ds + 0.5 * dr * k2d);
            let (k4s, k4d) = rhs(r + dr, s + dr * k3s, ds + dr * k3d);
            s += dr / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            ds += dr / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            r += dr;
            if !s.is_finite() || s.abs() > 1e6 {
                return f64::INFINITY;
            }
            if let Some(v) = record.as_deref_mut() {
                v.push((r, s));
            }
        }
        s - S_UNIT
    };
    // Bracket the initial curvature coefficient.
    let mut lo = 0.0;
    if integrate(lo, None) >= 0.0 {
        return None;
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while integrate(hi, None) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if integrate(mid, None) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut samples = Vec::with_capacity(nr + 1);
    integrate(0.5 * (lo + hi), Some(&mut samples));
    Some(samples)
}

/// Assemble `H(x) = s(|x|/R) (n x n - I/3)` on a hole-free ball grid.
/// Boundary-band and Exterior nodes receive the vacuum-valued radial
/// anchoring data.
pub fn assemble_field(
    profile: &HedgehogProfile,
    grid: &Arc<Grid>,
) -> Result<TensorField, HedgehogError> {
    if !grid.spec().holes.is_empty() {
        return Err(HedgehogError::DomainMismatch);
    }
    let radius = grid.spec().outer_radius;
    let mut field = TensorField::zeros(grid.clone());
    let vals = field.values_mut();
    for idx in 0..grid.node_count() {
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let q = if r < 1e-14 {
            QTensor::ZERO
        } else {
            let n = [x[0] / r, x[1] / r, x[2] / r];
            let s = match grid.class(idx) {
                NodeClass::Interior => profile.sample(r / radius),
                // Frozen anchoring data on the band and the extension
                // outside.
                NodeClass::Boundary | NodeClass::Exterior => S_UNIT,
            };
            qtensor::uniaxial(n, s).expect("unit director")
        };
        vals[idx] = q;
    }
    Ok(field)
}

/// Sample the constant-norm hedgehog `sqrt(3/2)(n x n - I/3)` on every
/// node (unit norm everywhere; the singular direction at the origin is
/// resolved along k).
pub fn constant_norm_hedgehog(grid: &Arc<Grid>) -> TensorField {
    let mut field = TensorField::zeros(grid.clone());
    let vals = field.values_mut();
    for idx in 0..grid.node_count() {
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let n = if r < 1e-14 {
            [0.0, 0.0, 1.0]
        } else {
            [x[0] / r, x[1] / r, x[2] / r]
        };
        vals[idx] = qtensor::uniaxial(n, S_UNIT).expect("unit director");
    }
    field
}

/// Radial profile samples with exact derivative values, on the uniform
/// grid of [0, 1] (odd sample count for Simpson quadrature).
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

impl RadialProfile {
    /// Sample `f` and its derivative `df` on `nr` points (rounded up to
    /// an odd count).
    pub fn from_fn(nr: usize, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let n = if nr % 2 == 0 { nr + 1 } else { nr };
        let dr = 1.0 / (n as f64 - 1.0);
        let r: Vec<f64> = (0..n).map(|i| i as f64 * dr).collect();
        let v = r.iter().map(|&x| f(x)).collect();
        let dv = r.iter().map(|&x| df(x)).collect();
        RadialProfile { r, v, dv }
    }

    pub fn sample(&self, r: f64) -> f64 {
        let n = self.r.len();
        let t = r.clamp(0.0, 1.0) * (n as f64 - 1.0);
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        self.v[i] * (1.0 - frac) + self.v[i + 1] * frac
    }
}

/// Composite Simpson quadrature over uniform samples.
fn simpson(values: impl Fn(usize) -> f64, n: usize, dr: f64) -> f64 {
    debug_assert!(n % 2 == 1);
    let mut acc = values(0) + values(n - 1);
    for i in 1..n - 1 {
        acc += values(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * dr / 3.0
}

/// Second variation of the Dirichlet energy at the constant-norm
/// hedgehog along `eta(r) vbar` for any unit direction vbar:
/// `(16 pi / 5) int_0^1 (eta'^2 r^2 - 3 eta^2) dr`. The value is
/// independent of the direction, which is therefore not a parameter.
pub fn second_var_radial(eta: &RadialProfile) -> Result<f64, HedgehogError> {
    if eta.v[0] != 0.0 {
        return Err(HedgehogError::SingularIntegrand { value: eta.v[0] });
    }
    let n = eta.r.len();
    let dr = eta.r[1] - eta.r[0];
    let deriv = simpson(|i| eta.dv[i] * eta.dv[i] * eta.r[i] * eta.r[i], n, dr);
    let mass = simpson(|i| eta.v[i] * eta.v[i], n, dr);
    Ok(16.0 * std::f64::consts::PI / 5.0 * (deriv - 3.0 * mass))
}

/// The Hardy-type destabilizing family
/// `eta_n(r) = [min(n r, r^{-1/2}) - 2]_+`, compactly supported in
/// `(2/n, 1/4]` for `n > 8`, with exact piecewise derivatives. The
/// second variation diverges to minus infinity as n grows.
pub fn eta_family(n: u32, nr: usize) -> RadialProfile {
    let nf = n as f64;
    RadialProfile::from_fn(
        nr,
        move |r| {
            if r <= 0.0 {
                return 0.0;
            }
            ((nf * r).min(1.0 / r.sqrt()) - 2.0).max(0.0)
        },
        move |r| {
            if r <= 0.0 {
                return 0.0;
            }
            let lin = nf * r;
            let pow = 1.0 / r.sqrt();
            if lin.min(pow) - 2.0 <= 0.0 {
                0.0
            } else if lin < pow {
                nf
            } else {
                -0.5 / (r * r.sqrt())
            }
        },
    )
}

/// Log-space bump `xi(r) = sqrt(a/r) sin^2(pi ln(r/a) / ln(b/a))` on
/// `(a, b)`: a smooth Hardy-critical profile whose Dirichlet second
/// variation is negative once `ln(b/a)` exceeds the critical length
/// `4 pi / sqrt(33)`.
#[derive(Debug, Clone, Copy)]
pub struct LogBump {
    pub a: f64,
    pub b: f64,
}

impl Default for LogBump {
    fn default() -> Self {
        // ln(b/a) = ln 16, comfortably past the threshold.
        LogBump { a: 0.025, b: 0.4 }
    }
}

impl LogBump {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        let l = (self.b / self.a).ln();
        let u = (r / self.a).ln() / l;
        let s = (std::f64::consts::PI * u).sin();
        (self.a / r).sqrt() * s * s
    }

    pub fn deriv(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        let l = (self.b / self.a).ln();
        let u = (r / self.a).ln() / l;
        let pi = std::f64::consts::PI;
        let s = (pi * u).sin();
        let env = (self.a / r).sqrt();
        env / r * (-0.5 * s * s + (pi / l) * (2.0 * pi * u).sin())
    }

    /// Rescaled profile `xi(r / delta)` sampled with exact derivatives.
    pub fn rescaled_profile(&self, delta: f64, nr: usize) -> RadialProfile {
        let bump = *self;
        RadialProfile::from_fn(
            nr,
            move |r| bump.eval(r / delta),
            move |r| bump.deriv(r / delta) / delta,
        )
    }
}

/// Assemble the tangential perturbation field
/// `Phi_T(x) = xi(|x|) (vbar - Hbar (Hbar : vbar))`, the tangential part
/// along the constant-norm hedgehog of `xi vbar`.
pub fn tangential_perturbation(
    grid: &Arc<Grid>,
    xi: &RadialProfile,
    vbar: &QTensor,
) -> TensorField {
    let mut field = TensorField::zeros(grid.clone());
    let radius = grid.spec().outer_radius;
    let vals = field.values_mut();
    for idx in 0..grid.node_count() {
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let xi_r = xi.sample(r / radius);
        if xi_r == 0.0 || r < 1e-14 {
            continue;
        }
        let n = [x[0] / r, x[1] / r, x[2] / r];
        let hbar = qtensor::uniaxial(n, S_UNIT).expect("unit director");
        let tangent = qtensor::tangent_project_unchecked(&hbar, vbar);
        vals[idx] = tangent.scale(xi_r);
    }
    field
}

/// The three quadrature pieces of the second variation.
#[derive(Debug, Clone, Copy)]
pub struct SecondVarTerms {
    /// `int |grad Phi_T|^2` (forward differences, matching the energy).
    pub gradient: f64,
    /// `lambda int D^2 W(H) Phi_T : Phi_T` plus the exact
    /// `2 mu (H:Phi_T)^2` term (zero for tangent perturbations).
    pub potential_hessian: f64,
    /// `mu int (|H|^2 - 1) |Phi_T|^2`.
    pub mu_term: f64,
}

impl SecondVarTerms {
    pub fn total(&self) -> f64 {
        self.gradient + self.potential_hessian + self.mu_term
    }
}

/// Second variation of the discrete penalized energy at a hedgehog
/// field along a tangent perturbation:
/// `F'' = int |grad Phi_T|^2 + lambda D^2W(H) Phi_T : Phi_T
///        + mu (2 (H:Phi_T)^2 + (|H|^2 - 1) |Phi_T|^2)`.
/// This is exactly the quadratic coefficient of the discrete
/// `F_{lambda,mu}(H + t Phi_T)`, which the finite-difference oracle
/// checks.
pub fn second_var_f(
    hedgehog: &TensorField,
    phi_t: &TensorField,
    lambda: f64,
    mu: f64,
) -> Result<f64, HedgehogError> {
    Ok(second_var_f_terms(hedgehog, phi_t, lambda, mu)?.total())
}

pub fn second_var_f_terms(
    hedgehog: &TensorField,
    phi_t: &TensorField,
    lambda: f64,
    mu: f64,
) -> Result<SecondVarTerms, HedgehogError> {
    if !hedgehog.same_grid(phi_t) {
        return Err(HedgehogError::DomainMismatch);
    }
    let grid = hedgehog.grid();
    // Tangency: Phi_T must annihilate H pointwise.
    let mut worst = 0.0f64;
    for (h, p) in hedgehog.values().iter().zip(phi_t.values()) {
        let dot = h.dot(p).abs();
        if dot > worst {
            worst = dot;
        }
    }
    if worst > 1e-9 {
        return Err(HedgehogError::NotTangent { dot: worst });
    }

    let n = grid.n();
    let h = grid.spacing();
    let class = grid.classes();
    let strides = grid.strides();
    let pv = phi_t.values();
    let hv = hedgehog.values();
    let gradient = crate::util::chunked_sum(grid.node_count(), |idx| {
        if class[idx] == NodeClass::Exterior {
            return 0.0;
        }
        let (ix, iy, iz) = grid.coords(idx);
        let mut acc = 0.0;
        for (d, &stride) in strides.iter().enumerate() {
            if [ix, iy, iz][d] + 1 >= n {
                continue;
            }
            let nb = idx + stride;
            if class[nb] == NodeClass::Exterior {
                continue;
            }
            acc += pv[nb].sub(&pv[idx]).norm_sq();
        }
        h * acc
    });
    let weights = grid.weights();
    let potential_hessian = crate::util::chunked_sum(grid.node_count(), |idx| {
        let w = weights[idx];
        if w == 0.0 {
            return 0.0;
        }
        let hq = hv[idx];
        let p = pv[idx];
        let dot = hq.dot(&p);
        w * (lambda * qtensor::hessian_w_raw(&hq, &p) + mu * 2.0 * dot * dot)
    });
    let mu_term = crate::util::chunked_sum(grid.node_count(), |idx| {
        let w = weights[idx];
        if w == 0.0 {
            return 0.0;
        }
        w * mu * (hv[idx].norm_sq() - 1.0) * pv[idx].norm_sq()
    });
    Ok(SecondVarTerms {
        gradient,
        potential_hessian,
        mu_term,
    })
}

/// One `(mu, delta)` entry of the instability sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepEntry {
    pub mu: f64,
    pub delta: f64,
    /// Second variation `F''_{lambda,mu}(Phi_T; H^mu)`.
    pub f_second: f64,
    /// `mu int (|H^mu|^2 - 1)|Phi_T|^2`, the penalty contribution.
    pub mu_term: f64,
    /// `-int |grad Hbar|^2 |Phi_T|^2 = -int (6/r^2) |Phi_T|^2`, the
    /// large-mu limit of `mu_term`.
    pub limit_term: f64,
}

/// Per-delta cross-check of the second-variation limit: the grid
/// quadrature of the Dirichlet second variation against the 1D radial
/// closed form, and the resulting limit value of `F''` as mu grows.
#[derive(Debug, Clone, Copy)]
pub struct SweepCrossCheck {
    pub delta: f64,
    /// 1D value `(16 pi/5) int (xi'^2 r^2 - 3 xi^2) dr` of the rescaled
    /// profile.
    pub e2_dirichlet_radial: f64,
    /// Grid quadrature `int |grad Phi_T|^2 - (6/r^2) |Phi_T|^2`.
    pub e2_dirichlet_grid: f64,
    /// `lambda int D^2 W(Hbar) Phi_T : Phi_T` on the grid.
    pub w_hessian_term: f64,
    /// Limit `E''_lambda = E''_0 + lambda (D^2 W term)` (grid route).
    pub e2_lambda_limit: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub lambda: f64,
    pub entries: Vec<SweepEntry>,
    pub cross_checks: Vec<SweepCrossCheck>,
    /// First (mu, delta) with strictly negative second variation, in
    /// ladder order.
    pub first_negative: Option<(f64, f64)>,
}

impl SweepReport {
    /// Delta with the most negative second variation at the largest mu.
    pub fn best_delta(&self) -> Option<f64> {
        let mu_max = self
            .entries
            .iter()
            .map(|e| e.mu)
            .fold(f64::NEG_INFINITY, f64::max);
        self.entries
            .iter()
            .filter(|e| e.mu == mu_max)
            .min_by(|a, b| a.f_second.total_cmp(&b.f_second))
            .map(|e| e.delta)
    }

    /// Entries at a fixed delta, ordered by mu.
    pub fn entries_at_delta(&self, delta: f64) -> Vec<&SweepEntry> {
        let mut v: Vec<&SweepEntry> = self.entries.iter().filter(|e| e.delta == delta).collect();
        v.sort_by(|a, b| a.mu.total_cmp(&b.mu));
        v
    }
}

/// Instability sweep: for each mu of the ladder, solve the hedgehog
/// profile, assemble it on an `n_grid` unit ball, and evaluate the
/// second variation along the rescaled tangential perturbations
/// `Phi_T = xi_delta (vbar - Hbar(Hbar:vbar))` for each delta.
pub fn instability_sweep(
    lambda: f64,
    mu_ladder: &[f64],
    delta_ladder: &[f64],
    n_grid: usize,
    bump: LogBump,
) -> Result<SweepReport, HedgehogError> {
    assert!(!mu_ladder.is_empty() && !delta_ladder.is_empty());
    let spec = crate::domain::DomainSpec::ball(1.0).expect("unit ball");
    let grid = crate::domain::build_grid(&spec, n_grid).expect("grid");
    let vbar = QTensor::basis(3);
    let nr_1d = 8193;

    // Per-delta perturbation fields and limit quadratures.
    let mut perturbations = Vec::new();
    let mut cross_checks = Vec::new();
    let hbar = constant_norm_hedgehog(&grid);
    for &delta in delta_ladder {
        let xi = bump.rescaled_profile(delta, nr_1d);
        let phi_t = tangential_perturbation(&grid, &xi, &vbar);
        let weights = grid.weights();
        let pv = phi_t.values();
        let grad_hbar_weighted = crate::util::chunked_sum(grid.node_count(), |idx| {
            let w = weights[idx];
            if w == 0.0 {
                return 0.0;
            }
            let x = grid.position(idx);
            let r2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).max(1e-30);
            w * 6.0 / r2 * pv[idx].norm_sq()
        });
        let terms = second_var_f_terms(&hbar, &phi_t, 1.0, 0.0)?;
        let e2_dirichlet_grid = terms.gradient - grad_hbar_weighted;
        let w_hessian_term = lambda * terms.potential_hessian;
        let e2_radial = second_var_radial(&xi)?;
        cross_checks.push(SweepCrossCheck {
            delta,
            e2_dirichlet_radial: e2_radial,
            e2_dirichlet_grid,
            w_hessian_term,
            e2_lambda_limit: e2_dirichlet_grid + w_hessian_term,
        });
        perturbations.push((delta, phi_t, grad_hbar_weighted));
    }

    let mut entries = Vec::new();
    let mut first_negative = None;
    for &mu in mu_ladder {
        let profile = solve_profile(lambda, mu, 4097)?;
        let hmu = assemble_field(&profile, &grid)?;
        for (delta, phi_t, grad_hbar_weighted) in &perturbations {
            let terms = second_var_f_terms(&hmu, phi_t, lambda, mu)?;
            let f_second = terms.total();
            if f_second < 0.0 && first_negative.is_none() {
                first_negative = Some((mu, *delta));
            }
            entries.push(SweepEntry {
                mu,
                delta: *delta,
                f_second,
                mu_term: terms.mu_term,
                limit_term: -grad_hbar_weighted,
            });
        }
    }
    Ok(SweepReport {
        lambda,
        entries,
        cross_checks,
        first_negative,
    })
}

/// 3D residual consistency of the derived ODE: sup norm of the
/// penalized Euler-Lagrange residual of the assembled field over
/// interior nodes in the annulus `r in (r_lo, r_hi)`.
pub fn assembled_residual_sup(
    profile: &HedgehogProfile,
    grid: &Arc<Grid>,
    r_lo: f64,
    r_hi: f64,
) -> Result<f64, HedgehogError> {
    let field = assemble_field(profile, grid)?;
    let res = energy::residual_unconstrained(&field, profile.lambda, profile.mu);
    let mut sup = 0.0f64;
    for &idx in grid.interior_nodes() {
        let idx = idx as usize;
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r < r_lo || r > r_hi {
            continue;
        }
        sup = sup.max(res[idx].norm());
    }
    Ok(sup)
}
