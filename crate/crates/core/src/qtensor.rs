//! Pointwise algebra of S0, the 5-dimensional space of traceless
//! symmetric 3x3 matrices.
//!
//! Tensors are stored as coefficients in the orthonormal basis
//!
//! ```text
//! e0 = sqrt(3/2) (k x k - I/3),   e1 = (i x k + k x i)/sqrt(2),
//! e2 = (j x k + k x j)/sqrt(2),   e3 = (i x i - j x j)/sqrt(2),
//! e4 = (i x j + j x i)/sqrt(2),
//! ```
//!
//! so that the Frobenius norm is the plain Euclidean norm of the five
//! coefficients and tracelessness/symmetry hold by construction. The
//! module provides the matrix invariants, the signed biaxiality, the
//! reduced quartic potential
//!
//! ```text
//! W(Q) = |Q|^4/(4 sqrt 6) - tr(Q^3)/3 + 1/(12 sqrt 6) >= 0
//! ```
//!
//! with its gradient and Hessians, a closed-form eigendecomposition with
//! a deterministic sign convention, and the physical-to-reduced
//! parameter map of the Lyuksyutov regime.

use thiserror::Error;

/// sqrt(6); the potential and biaxiality normalizations are built from it.
pub const SQRT_6: f64 = 2.449_489_742_783_178;
/// sqrt(3/2), the coefficient norm of a unit positive uniaxial tensor.
pub const S_UNIT: f64 = 1.224_744_871_391_589;
/// Norm threshold below which a tensor is treated as isotropic: the
/// biaxiality is 0-homogeneous and ill-conditioned near 0.
pub const ISO_TOL: f64 = 1e-7;
/// Unit-sphere tolerance shared by the sphere-constrained operations.
pub const SPHERE_TOL: f64 = 1e-9;
/// Default empirical constant for [`spectral_bound_gap`]; the value from
/// the max{2, ...} branch of the underlying spectral inequality.
pub const C_EMP_DEFAULT: f64 = 2.0;

/// Plain 3x3 matrix used for transient computations.
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QTensorError {
    #[error("matrix is not in S0 (asymmetry {asym:.3e}, trace {trace:.3e}, tol {tol:.3e})")]
    NotInS0 { asym: f64, trace: f64, tol: f64 },
    #[error("director is not a unit vector (|n| = {norm})")]
    NotUnit { norm: f64 },
    #[error("tensor norm {norm:.3e} below isotropic threshold {tol:.3e}")]
    IsotropicPoint { norm: f64, tol: f64 },
    #[error("parameters must be strictly positive")]
    BadParams,
    #[error("tensor is not on the unit sphere (|Q| = {norm})")]
    NotOnSphere { norm: f64 },
    #[error("direction is not unit tangent (T:Q = {dot:.3e}, |T| = {norm})")]
    NotTangent { dot: f64, norm: f64 },
}

/// A point value in S0, stored in the distinguished orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor {
    c: [f64; 5],
}

impl QTensor {
    pub const ZERO: QTensor = QTensor { c: [0.0; 5] };

    #[inline]
    pub fn new(c: [f64; 5]) -> Self {
        QTensor { c }
    }

    /// Basis tensor `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        QTensor { c }
    }

    #[inline]
    pub fn coeffs(&self) -> [f64; 5] {
        self.c
    }

    #[inline]
    pub fn dot(&self, other: &QTensor) -> f64 {
        self.c[0] * other.c[0]
            + self.c[1] * other.c[1]
            + self.c[2] * other.c[2]
            + self.c[3] * other.c[3]
            + self.c[4] * other.c[4]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(&self, t: f64) -> QTensor {
        QTensor {
            c: [
                t * self.c[0],
                t * self.c[1],
                t * self.c[2],
                t * self.c[3],
                t * self.c[4],
            ],
        }
    }

    #[inline]
    pub fn add(&self, other: &QTensor) -> QTensor {
        let mut c = self.c;
        for i in 0..5 {
            c[i] += other.c[i];
        }
        QTensor { c }
    }

    #[inline]
    pub fn sub(&self, other: &QTensor) -> QTensor {
        let mut c = self.c;
        for i in 0..5 {
            c[i] -= other.c[i];
        }
        QTensor { c }
    }

    /// Accumulate `t * other` in place.
    #[inline]
    pub fn axpy(&mut self, t: f64, other: &QTensor) {
        for i in 0..5 {
            self.c[i] += t * other.c[i];
        }
    }

    /// Reconstruct the symmetric traceless 3x3 matrix.
    pub fn to_matrix(&self) -> Mat3 {
        let [c0, c1, c2, c3, c4] = self.c;
        let a = 1.0 / SQRT_6;
        let b = std::f64::consts::FRAC_1_SQRT_2;
        [
            [-a * c0 + b * c3, b * c4, b * c1],
            [b * c4, -a * c0 - b * c3, b * c2],
            [b * c1, b * c2, 2.0 * a * c0],
        ]
    }

    pub fn normalized(&self) -> QTensor {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            self.scale(1.0 / n)
        }
    }
}

fn frobenius(m: &Mat3) -> f64 {
    m.iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn mat_trace(m: &Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

/// Project an already symmetric traceless matrix onto the basis. No
/// tolerance checks; use [`from_matrix`] for untrusted input.
pub(crate) fn coeffs_of_sym_traceless(m: &Mat3) -> QTensor {
    let a = 1.0 / SQRT_6;
    let b = std::f64::consts::FRAC_1_SQRT_2;
    QTensor::new([
        a * (2.0 * m[2][2] - m[0][0] - m[1][1]),
        2.0 * b * m[0][2],
        2.0 * b * m[1][2],
        b * (m[0][0] - m[1][1]),
        2.0 * b * m[0][1],
    ])
}

/// Project a 3x3 matrix onto S0. Fails when the symmetry defect or the
/// trace exceeds `tol`; otherwise the symmetric traceless part is kept.
pub fn from_matrix(m: &Mat3, tol: f64) -> Result<QTensor, QTensorError> {
    let mut asym = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            asym[i][j] = 0.5 * (m[i][j] - m[j][i]);
        }
    }
    let asym_norm = frobenius(&asym);
    let trace = mat_trace(m);
    if asym_norm > tol || trace.abs() > tol {
        return Err(QTensorError::NotInS0 {
            asym: asym_norm,
            trace,
            tol,
        });
    }
    let t3 = trace / 3.0;
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
        s[i][i] -= t3;
    }
    Ok(coeffs_of_sym_traceless(&s))
}

/// The uniaxial tensor `s (n x n - I/3)` for a unit director `n`. With
/// `s = sqrt(3/2)` the result has unit norm and biaxiality +1.
pub fn uniaxial(n: [f64; 3], s: f64) -> Result<QTensor, QTensorError> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(QTensorError::NotUnit { norm });
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = s * n[i] * n[j];
        }
        m[i][i] -= s / 3.0;
    }
    Ok(coeffs_of_sym_traceless(&m))
}

/// The pair `(tr Q^2, tr Q^3)`.
pub fn traces(q: &QTensor) -> (f64, f64) {
    let m = q.to_matrix();
    let m2 = mat_mul(&m, &m);
    let mut tr3 = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr3 += m2[i][k] * m[k][i];
        }
    }
    (q.norm_sq(), tr3)
}

/// Signed biaxiality `sqrt(6) tr(Q^3) / |Q|^3 in [-1, 1]`: +1 on the
/// positive uniaxial phase (minimal eigenvalue double), -1 on the
/// negative uniaxial phase, 0 at maximal biaxiality.
pub fn biaxiality(q: &QTensor) -> Result<f64, QTensorError> {
    let norm = q.norm();
    if norm < ISO_TOL {
        return Err(QTensorError::IsotropicPoint {
            norm,
            tol: ISO_TOL,
        });
    }
    let (_, tr3) = traces(q);
    Ok((SQRT_6 * tr3 / norm.powi(3)).clamp(-1.0, 1.0))
}

/// Positive root `s+ = (b^2 + sqrt(b^4 + 24 a^2 c^2)) / (4 c^2)` of the
/// characteristic equation `2 c^2 t^2 - b^2 t - 3 a^2 = 0`.
pub fn s_plus(a2: f64, b2: f64, c2: f64) -> Result<f64, QTensorError> {
    if a2 <= 0.0 || b2 <= 0.0 || c2 <= 0.0 {
        return Err(QTensorError::BadParams);
    }
    Ok((b2 + (b2 * b2 + 24.0 * a2 * c2).sqrt()) / (4.0 * c2))
}

/// Reduced energy parameters with physical provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Bulk coupling of the reduced potential, `sqrt(2/3) b^2 s+ / L`.
    pub lambda: f64,
    /// Norm penalty strength, `a^2 / L`.
    pub mu: f64,
    /// Ginzburg-Landau penalty length; only the GL path reads it.
    pub epsilon: Option<f64>,
    /// `(a^2, b^2, c^2, L)` when reduced from physical constants.
    pub physical: Option<[f64; 4]>,
}

impl EnergyParams {
    pub fn reduced(lambda: f64, mu: f64) -> Result<Self, QTensorError> {
        if !(lambda > 0.0) || !(mu >= 0.0) {
            return Err(QTensorError::BadParams);
        }
        Ok(EnergyParams {
            lambda,
            mu,
            epsilon: None,
            physical: None,
        })
    }
}

/// Reduce physical constants `(a^2, b^2, c^2, L)` to `(lambda, mu)` in
/// the Lyuksyutov normalization.
pub fn params_from_physical(
    a2: f64,
    b2: f64,
    c2: f64,
    l: f64,
) -> Result<EnergyParams, QTensorError> {
    if l <= 0.0 {
        return Err(QTensorError::BadParams);
    }
    let sp = s_plus(a2, b2, c2)?;
    Ok(EnergyParams {
        lambda: (2.0f64 / 3.0).sqrt() * b2 * sp / l,
        mu: a2 / l,
        epsilon: None,
        physical: Some([a2, b2, c2, l]),
    })
}

/// Reduced potential `W(Q) = |Q|^4/(4 sqrt 6) - tr(Q^3)/3 + 1/(12 sqrt 6)`.
/// Nonnegative, and zero exactly on the unit positive uniaxial manifold.
pub fn potential_w(q: &QTensor) -> f64 {
    let (tr2, tr3) = traces(q);
    let w = tr2 * tr2 / (4.0 * SQRT_6) - tr3 / 3.0 + 1.0 / (12.0 * SQRT_6);
    w.max(0.0)
}

/// Euclidean gradient `grad W = |Q|^2 Q / sqrt(6) - (Q^2 - |Q|^2 I / 3)`.
pub fn potential_grad(q: &QTensor) -> QTensor {
    let m = q.to_matrix();
    let m2 = mat_mul(&m, &m);
    let tr2 = q.norm_sq();
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = tr2 * m[i][j] / SQRT_6 - m2[i][j];
        }
        g[i][i] += tr2 / 3.0;
    }
    coeffs_of_sym_traceless(&g)
}

/// Tangential gradient of W along the unit sphere,
/// `grad_tan W(Q) = -(Q^2 - I/3 - tr(Q^3) Q)`. Vanishes on the vacuum
/// manifold of unit positive uniaxial tensors.
pub fn tangential_grad_w(q: &QTensor) -> Result<QTensor, QTensorError> {
    check_on_sphere(q)?;
    Ok(tangential_grad_w_unchecked(q))
}

pub(crate) fn tangential_grad_w_unchecked(q: &QTensor) -> QTensor {
    let m = q.to_matrix();
    let m2 = mat_mul(&m, &m);
    let mut tr3 = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr3 += m2[i][k] * m[k][i];
        }
    }
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = -(m2[i][j] - tr3 * m[i][j]);
        }
        g[i][i] += 1.0 / 3.0;
    }
    coeffs_of_sym_traceless(&g)
}

/// Raw quadratic form of the potential Hessian,
/// `D^2 W(Q) Psi : Psi = (2 (Q:Psi)^2 + |Q|^2 |Psi|^2) / sqrt(6) - 2 tr(Q Psi^2)`.
pub fn hessian_w_raw(q: &QTensor, psi: &QTensor) -> f64 {
    let qp = q.dot(psi);
    let mq = q.to_matrix();
    let mp = psi.to_matrix();
    let p2 = mat_mul(&mp, &mp);
    let tr_qp2 = mat_trace(&mat_mul(&mq, &p2));
    (2.0 * qp * qp + q.norm_sq() * psi.norm_sq()) / SQRT_6 - 2.0 * tr_qp2
}

/// Second derivative of `t -> W((Q + t Phi)/|Q + t Phi|)` at `t = 0` for
/// unit-norm `Q`; depends on `Phi` only through its tangential part.
pub fn hessian_w_tangential(q: &QTensor, phi: &QTensor) -> Result<f64, QTensorError> {
    check_on_sphere(q)?;
    let phi_t = tangent_project_unchecked(q, phi);
    // Curvature correction of the normalized path: the path second
    // derivative is -|Phi_T|^2 Q, and grad W : Q = 3 W(Q) on the sphere.
    let grad_dot_q = potential_grad(q).dot(q);
    Ok(hessian_w_raw(q, &phi_t) - grad_dot_q * phi_t.norm_sq())
}

/// Projection of `Phi` onto the tangent space of the unit sphere at `Q`:
/// `Phi_T = Phi - Q (Q : Phi)`.
pub fn tangent_project(q: &QTensor, phi: &QTensor) -> Result<QTensor, QTensorError> {
    check_on_sphere(q)?;
    Ok(tangent_project_unchecked(q, phi))
}

#[inline]
pub(crate) fn tangent_project_unchecked(q: &QTensor, phi: &QTensor) -> QTensor {
    let mut out = *phi;
    out.axpy(-q.dot(phi), q);
    out
}

/// Gap `2 tr(TQT) - 1/sqrt(6) - c_emp sqrt(W(Q))` of the spectral
/// inequality for unit `Q` and unit tangent `T`. Nonpositive values mean
/// the inequality holds with the supplied empirical constant; at
/// `W(Q) = 0` the bound `2 tr(TQT) <= 1/sqrt(6)` is exact.
pub fn spectral_bound_gap(q: &QTensor, t: &QTensor, c_emp: f64) -> Result<f64, QTensorError> {
    check_on_sphere(q)?;
    let dot = q.dot(t);
    let norm = t.norm();
    if dot.abs() > SPHERE_TOL || (norm - 1.0).abs() > SPHERE_TOL {
        return Err(QTensorError::NotTangent { dot, norm });
    }
    let mq = q.to_matrix();
    let mt = t.to_matrix();
    let t2 = mat_mul(&mt, &mt);
    let tr_tqt = mat_trace(&mat_mul(&mq, &t2));
    Ok(2.0 * tr_tqt - 1.0 / SQRT_6 - c_emp * potential_w(q).sqrt())
}

pub(crate) fn check_on_sphere(q: &QTensor) -> Result<(), QTensorError> {
    let norm = q.norm();
    if (norm - 1.0).abs() > SPHERE_TOL {
        return Err(QTensorError::NotOnSphere { norm });
    }
    Ok(())
}

/// Ordered eigendecomposition of a Q-tensor.
#[derive(Debug, Clone, Copy)]
pub struct Eigen {
    /// Eigenvalues in increasing order; they sum to zero.
    pub values: [f64; 3],
    /// Orthonormal eigenvectors, `vectors[k]` paired with `values[k]`,
    /// each with its first component of magnitude above 1e-9 positive.
    pub vectors: [[f64; 3]; 3],
}

fn v3_dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn v3_cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn v3_normalize(a: &[f64; 3]) -> [f64; 3] {
    let n = v3_dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn fix_sign(v: &mut [f64; 3]) {
    for x in v.iter() {
        if x.abs() > 1e-9 {
            if *x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Kernel direction of the (rank-deficient) matrix `m` via the largest
/// cross product of its rows.
fn null_direction(m: &Mat3) -> Option<[f64; 3]> {
    let c01 = v3_cross(&m[0], &m[1]);
    let c12 = v3_cross(&m[1], &m[2]);
    let c20 = v3_cross(&m[2], &m[0]);
    let pick = [c01, c12, c20]
        .into_iter()
        .max_by(|a, b| v3_dot(a, a).total_cmp(&v3_dot(b, b)))
        .unwrap();
    if v3_dot(&pick, &pick) < 1e-24 {
        None
    } else {
        Some(v3_normalize(&pick))
    }
}

/// Closed-form eigendecomposition (trigonometric eigenvalues, one
/// cross-product eigenvector for the most isolated eigenvalue, 2x2
/// deflation for the remaining pair). Deterministic for repeated
/// spectra.
pub fn eigen(q: &QTensor) -> Eigen {
    let norm = q.norm();
    if norm < 1e-300 {
        return Eigen {
            values: [0.0; 3],
            vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        };
    }
    let u = q.scale(1.0 / norm);
    let m = u.to_matrix();

    // Traceless: eigenvalues 2p cos(phi + 2 pi k / 3) with p = 1/sqrt(6)
    // for the normalized tensor.
    let p = (1.0f64 / 6.0).sqrt();
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = 2.0 * p * phi.cos();
    let lo = 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = -hi - lo;
    let mut vals = [lo, mid, hi];
    vals.sort_by(f64::total_cmp);

    // Eigenvector of the better-isolated extreme eigenvalue first.
    let iso_idx = if vals[1] - vals[0] >= vals[2] - vals[1] {
        0
    } else {
        2
    };
    let shifted = |lam: f64| -> Mat3 {
        let mut s = m;
        for (i, row) in s.iter_mut().enumerate() {
            row[i] -= lam;
        }
        s
    };
    let v_iso = null_direction(&shifted(vals[iso_idx])).unwrap_or_else(|| {
        // Fully degenerate spectrum can only be the zero tensor, handled
        // above; keep a stable fallback regardless.
        [1.0, 0.0, 0.0]
    });

    // Deflate to the plane orthogonal to v_iso and solve the 2x2 block.
    let seed = if v_iso[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u1 = v3_normalize(&v3_cross(&v_iso, &seed));
    let u2 = v3_cross(&v_iso, &u1);
    let au1 = apply(&m, &u1);
    let au2 = apply(&m, &u2);
    let b11 = v3_dot(&u1, &au1);
    let b12 = v3_dot(&u1, &au2);
    let b22 = v3_dot(&u2, &au2);
    let half_tr = 0.5 * (b11 + b22);
    let disc = (0.25 * (b11 - b22) * (b11 - b22) + b12 * b12).sqrt();
    let (lam_a, lam_b) = (half_tr - disc, half_tr + disc);
    // Rotation angle diagonalizing the 2x2 block.
    let theta = 0.5 * (2.0 * b12).atan2(b11 - b22);
    let (sin_t, cos_t) = theta.sin_cos();
    let w_a = [
        -sin_t * u1[0] + cos_t * u2[0],
        -sin_t * u1[1] + cos_t * u2[1],
        -sin_t * u1[2] + cos_t * u2[2],
    ];
    let w_b = [
        cos_t * u1[0] + sin_t * u2[0],
        cos_t * u1[1] + sin_t * u2[1],
        cos_t * u1[2] + sin_t * u2[2],
    ];
    // Pair each rotated frame vector with the closer Rayleigh quotient;
    // lam_a <= lam_b by construction.
    let rb = v3_dot(&w_b, &apply(&m, &w_b));
    let (v_a, v_b) = if (rb - lam_b).abs() <= (rb - lam_a).abs() {
        (w_a, w_b)
    } else {
        (w_b, w_a)
    };

    let mut pairs = [(vals[iso_idx], v_iso), (lam_a, v_a), (lam_b, v_b)];
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Restore the scale and the zero-sum property exactly.
    let mut values = [pairs[0].0, pairs[1].0, pairs[2].0];
    let mut vectors = [pairs[0].1, pairs[1].1, pairs[2].1];
    for v in values.iter_mut() {
        *v *= norm;
    }
    let drift = (values[0] + values[1] + values[2]) / 3.0;
    for v in values.iter_mut() {
        *v -= drift;
    }
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
    Eigen { values, vectors }
}

fn apply(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [v3_dot(&m[0], v), v3_dot(&m[1], v), v3_dot(&m[2], v)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn random_q(rng: &mut impl Rng, scale: f64) -> QTensor {
        let mut c = [0.0; 5];
        for x in c.iter_mut() {
            *x = rng.gen_range(-scale..scale);
        }
        QTensor::new(c)
    }

    fn random_unit_vec(rng: &mut impl Rng) -> [f64; 3] {
        loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n2 = v3_dot(&v, &v);
            if n2 > 1e-4 && n2 < 1.0 {
                let n = n2.sqrt();
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn from_matrix_basis_vector() {
        let m = QTensor::basis(0).to_matrix();
        let q = from_matrix(&m, 1e-12).unwrap();
        for (i, c) in q.coeffs().iter().enumerate() {
            approx(*c, if i == 0 { 1.0 } else { 0.0 }, 1e-15);
        }
        let z = from_matrix(&[[0.0; 3]; 3], 1e-12).unwrap();
        assert_eq!(z, QTensor::ZERO);
    }

    #[test]
    fn from_matrix_rejects_identity() {
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            from_matrix(&eye, 1e-9),
            Err(QTensorError::NotInS0 { .. })
        ));
    }

    #[test]
    fn round_trip_projection() {
        let mut rng = crate::util::seeded_rng(7);
        for _ in 0..200 {
            let q = random_q(&mut rng, 2.0);
            let back = from_matrix(&q.to_matrix(), 1e-9).unwrap();
            approx(back.sub(&q).norm(), 0.0, 1e-14);
            // |Q|^2 equals the Frobenius norm of the reconstruction.
            approx(frobenius(&q.to_matrix()), q.norm(), 1e-13);
            approx(mat_trace(&q.to_matrix()), 0.0, 1e-14);
        }
    }

    #[test]
    fn uniaxial_unit_is_e0_along_k() {
        let q = uniaxial([0.0, 0.0, 1.0], S_UNIT).unwrap();
        approx(q.sub(&QTensor::basis(0)).norm(), 0.0, 1e-15);
        let z = uniaxial([0.0, 0.0, 1.0], 0.0).unwrap();
        approx(z.norm(), 0.0, 0.0);
        assert!(uniaxial([0.0, 0.0, 1.1], 1.0).is_err());
        approx(biaxiality(&q).unwrap(), 1.0, 1e-14);
    }

    #[test]
    fn traces_on_reference_tensors() {
        let (t2, t3) = traces(&QTensor::basis(0));
        approx(t2, 1.0, 1e-15);
        approx(t3, 1.0 / SQRT_6, 1e-15);
        let (z2, z3) = traces(&QTensor::ZERO);
        assert_eq!((z2, z3), (0.0, 0.0));
        // diag(1/sqrt2, 0, -1/sqrt2): odd spectrum, tr Q^3 = 0.
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[b, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -b]];
        let q = from_matrix(&m, 1e-12).unwrap();
        let (s2, s3) = traces(&q);
        approx(s2, 1.0, 1e-15);
        approx(s3, 0.0, 1e-15);
        approx(biaxiality(&q).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn biaxiality_signs_and_homogeneity() {
        let n = [0.0, 0.0, 1.0];
        let plus = uniaxial(n, S_UNIT).unwrap();
        let minus = plus.scale(-1.0);
        approx(biaxiality(&plus).unwrap(), 1.0, 1e-14);
        approx(biaxiality(&minus).unwrap(), -1.0, 1e-14);
        let mut rng = crate::util::seeded_rng(11);
        for _ in 0..500 {
            let q = random_q(&mut rng, 1.5);
            if q.norm() < ISO_TOL {
                continue;
            }
            let beta = biaxiality(&q).unwrap();
            assert!((-1.0..=1.0).contains(&beta));
            approx(biaxiality(&q.scale(3.0)).unwrap(), beta, 1e-12);
            approx(biaxiality(&q.scale(-2.0)).unwrap(), -beta, 1e-12);
        }
        assert!(matches!(
            biaxiality(&QTensor::ZERO),
            Err(QTensorError::IsotropicPoint { .. })
        ));
    }

    #[test]
    fn s_plus_reference_values() {
        approx(s_plus(1.0, 1.0, 1.0).unwrap(), 1.5, 1e-15);
        // b^2 -> 0 limit: 2 t^2 = 3 a^2.
        approx(
            s_plus(3.0, 1e-14, 1.0).unwrap(),
            3.0 / std::f64::consts::SQRT_2,
            1e-7,
        );
        approx(s_plus(1e-300, 2.0, 1.0).unwrap(), 1.0, 1e-12);
        assert!(s_plus(-1.0, 1.0, 1.0).is_err());
        let mut rng = crate::util::seeded_rng(3);
        for _ in 0..1000 {
            let (a2, b2, c2) = (
                rng.gen_range(0.01..10.0),
                rng.gen_range(0.01..10.0),
                rng.gen_range(0.01..10.0),
            );
            let t = s_plus(a2, b2, c2).unwrap();
            let res = 2.0 * c2 * t * t - b2 * t - 3.0 * a2;
            let scale = (2.0 * c2 * t * t).abs() + (b2 * t).abs() + 3.0 * a2;
            assert!(res.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn params_from_physical_reference() {
        let p = params_from_physical(1.0, 1.0, 1.0, 1.0).unwrap();
        approx(p.lambda, (2.0f64 / 3.0).sqrt() * 1.5, 1e-15);
        approx(p.mu, 1.0, 1e-15);
        let p2 = params_from_physical(4.0, 1.0, 1.0, 1.0).unwrap();
        approx(p2.mu, 4.0, 1e-15);
        let p3 = params_from_physical(1.0, 1.0, 1.0, 2.0).unwrap();
        approx(p3.lambda, p.lambda / 2.0, 1e-15);
        approx(p3.mu, p.mu / 2.0, 1e-15);
    }

    #[test]
    fn potential_reference_values() {
        approx(potential_w(&QTensor::ZERO), 1.0 / (12.0 * SQRT_6), 1e-16);
        let vac = uniaxial([0.0, 0.0, 1.0], S_UNIT).unwrap();
        approx(potential_w(&vac), 0.0, 1e-15);
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[b, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -b]];
        let maxbiax = from_matrix(&m, 1e-12).unwrap();
        approx(potential_w(&maxbiax), 1.0 / (3.0 * SQRT_6), 1e-15);
        // Restriction to the sphere: W = (1 - beta)/(3 sqrt 6).
        let mut rng = crate::util::seeded_rng(19);
        for _ in 0..1000 {
            let q = random_q(&mut rng, 1.0).normalized();
            let beta = biaxiality(&q).unwrap();
            approx(potential_w(&q), (1.0 - beta) / (3.0 * SQRT_6), 1e-12);
        }
    }

    #[test]
    fn potential_grad_vanishes_on_vacuum() {
        let mut rng = crate::util::seeded_rng(23);
        for _ in 0..50 {
            let n = random_unit_vec(&mut rng);
            let vac = uniaxial(n, S_UNIT).unwrap();
            approx(potential_grad(&vac).norm(), 0.0, 1e-14);
        }
        approx(potential_grad(&QTensor::ZERO).norm(), 0.0, 0.0);
    }

    #[test]
    fn tangential_grad_reference_values() {
        let vac = uniaxial([0.0, 0.0, 1.0], S_UNIT).unwrap();
        approx(tangential_grad_w(&vac).unwrap().norm(), 0.0, 1e-14);
        let neg = vac.scale(-1.0);
        approx(tangential_grad_w(&neg).unwrap().norm(), 0.0, 1e-14);
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[b, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -b]];
        let q = from_matrix(&m, 1e-12).unwrap();
        let g = tangential_grad_w(&q).unwrap();
        approx(g.norm(), 1.0 / SQRT_6, 1e-14);
        approx(g.dot(&q), 0.0, 1e-14);
        assert!(tangential_grad_w(&q.scale(1.1)).is_err());
    }

    #[test]
    fn tangent_projection_basics() {
        let e0 = QTensor::basis(0);
        let e1 = QTensor::basis(1);
        approx(tangent_project(&e0, &e0).unwrap().norm(), 0.0, 0.0);
        approx(tangent_project(&e0, &e1).unwrap().sub(&e1).norm(), 0.0, 0.0);
        let s = e0.add(&e1);
        approx(tangent_project(&e0, &s).unwrap().sub(&e1).norm(), 0.0, 0.0);
        // Idempotent.
        let mut rng = crate::util::seeded_rng(5);
        for _ in 0..100 {
            let q = random_q(&mut rng, 1.0).normalized();
            let phi = random_q(&mut rng, 2.0);
            let p1 = tangent_project(&q, &phi).unwrap();
            let p2 = tangent_project(&q, &p1).unwrap();
            approx(p2.sub(&p1).norm(), 0.0, 1e-14);
            approx(p1.dot(&q), 0.0, 1e-14);
        }
    }

    #[test]
    fn hessian_reference_values() {
        approx(hessian_w_raw(&QTensor::ZERO, &QTensor::basis(1)), 0.0, 0.0);
        let e0 = QTensor::basis(0);
        let e1 = QTensor::basis(1);
        let e3 = QTensor::basis(3);
        // Quadratic scaling in Psi.
        let base = hessian_w_raw(&e0, &e1);
        approx(hessian_w_raw(&e0, &e1.scale(2.0)), 4.0 * base, 1e-14);
        // Tangential form at the vacuum: tr(e0 e1^2) = 1/(2 sqrt 6) and
        // tr(e0 e3^2) = -1/sqrt(6) by direct matrix products.
        approx(hessian_w_tangential(&e0, &e0).unwrap(), 0.0, 0.0);
        approx(hessian_w_tangential(&e0, &e1).unwrap(), 0.0, 1e-14);
        approx(
            hessian_w_tangential(&e0, &e3).unwrap(),
            3.0 / SQRT_6,
            1e-14,
        );
    }

    #[test]
    fn spectral_bound_reference_values() {
        let e0 = QTensor::basis(0);
        let e1 = QTensor::basis(1);
        let e3 = QTensor::basis(3);
        // Equality case at W = 0: 2 tr(e1 e0 e1) = 1/sqrt(6).
        let gap = spectral_bound_gap(&e0, &e1, C_EMP_DEFAULT).unwrap();
        approx(gap, 0.0, 1e-15);
        // 2 tr(e3 e0 e3) = -2/sqrt(6), far below the bound.
        let gap3 = spectral_bound_gap(&e0, &e3, C_EMP_DEFAULT).unwrap();
        approx(gap3, -3.0 / SQRT_6, 1e-14);
        let mix = e1.add(&e3).scale(std::f64::consts::FRAC_1_SQRT_2);
        assert!(spectral_bound_gap(&e0, &mix, C_EMP_DEFAULT).unwrap() <= 0.0);
        assert!(spectral_bound_gap(&e0, &e0, C_EMP_DEFAULT).is_err());
    }

    #[test]
    fn eigen_reference_values() {
        let d = eigen(&QTensor::basis(0));
        approx(d.values[0], -1.0 / SQRT_6, 1e-14);
        approx(d.values[1], -1.0 / SQRT_6, 1e-14);
        approx(d.values[2], 2.0 / SQRT_6, 1e-14);
        approx(d.vectors[2][2].abs(), 1.0, 1e-12);
        assert!(d.vectors[2][2] > 0.0 || d.vectors[2][0] > 0.0);
        let z = eigen(&QTensor::ZERO);
        assert_eq!(z.values, [0.0; 3]);
    }

    #[test]
    fn eigen_random_reconstruction() {
        let mut rng = crate::util::seeded_rng(41);
        for _ in 0..500 {
            let q = random_q(&mut rng, 2.0);
            let d = eigen(&q);
            let m = q.to_matrix();
            approx(d.values[0] + d.values[1] + d.values[2], 0.0, 1e-12);
            assert!(d.values[0] <= d.values[1] && d.values[1] <= d.values[2]);
            let scale = q.norm().max(1e-30);
            let mut recon = [[0.0; 3]; 3];
            for k in 0..3 {
                let v = d.vectors[k];
                let av = apply(&m, &v);
                let mut res = 0.0;
                for i in 0..3 {
                    res += (av[i] - d.values[k] * v[i]).powi(2);
                    for j in 0..3 {
                        recon[i][j] += d.values[k] * v[i] * v[j];
                    }
                }
                assert!(res.sqrt() <= 1e-10 * scale, "residual {}", res.sqrt());
                for l in (k + 1)..3 {
                    approx(v3_dot(&v, &d.vectors[l]), 0.0, 1e-12);
                }
            }
            let mut diff = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    diff += (recon[i][j] - m[i][j]).powi(2);
                }
            }
            assert!(diff.sqrt() <= 1e-10 * scale);
        }
    }

    #[test]
    fn eigen_unit_norm_bounds() {
        let mut rng = crate::util::seeded_rng(43);
        for _ in 0..2000 {
            let q = random_q(&mut rng, 1.0);
            if q.norm() < 1e-3 {
                continue;
            }
            let d = eigen(&q.normalized());
            assert!(d.values[2] > 0.0 && d.values[2] <= 2.0 / SQRT_6 + 1e-12);
            assert!(d.values[0] < 0.0 && d.values[0] >= -2.0 / SQRT_6 - 1e-12);
        }
    }

    #[test]
    fn eigen_deterministic_on_degenerate_spectra() {
        let vac = uniaxial([0.6, -0.8, 0.0], S_UNIT).unwrap();
        let a = eigen(&vac);
        let b = eigen(&vac);
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
        // Double minimal eigenvalue: the isolated max eigenvector is the
        // director up to sign.
        let v = a.vectors[2];
        approx(v3_dot(&v, &[0.6, -0.8, 0.0]).abs(), 1.0, 1e-12);
    }
}
