//! Numeric Hessians, symmetric eigendecomposition, condition numbers,
//! separability metrics and the 2D slice restriction matrix.

use crate::linalg::Matrix;
use crate::objectives::ObjectiveHandle;
use crate::util::{dot, fmt_f64, norm};
use crate::{Error, Result};

/// Finite-difference step for pendulum objectives.
pub const DEFAULT_STEP_PENDULUM: f64 = 1e-4;
/// Finite-difference step for analytic test functions.
pub const DEFAULT_STEP_ANALYTIC: f64 = 1e-5;
/// Relative eigenvalue threshold below which a matrix counts as singular.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Off-diagonal tolerance for the Jacobi eigensolver.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Condition number of a symmetric matrix, over absolute eigenvalues.
/// `kappa` is `f64::INFINITY` when the smallest eigenvalue magnitude falls
/// below `rank_tol` times the largest. Indefinite matrices (mixed-sign
/// eigenvalues) are reported rather than rejected, with the flag set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionNumber {
    pub kappa: f64,
    pub indefinite: bool,
}

/// Ratio of largest to smallest eigenvalue magnitude.
pub fn condition_number(eigenvalues: &[f64], rank_tol: f64) -> Result<ConditionNumber> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("condition_number: no eigenvalues"));
    }
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::undefined(
            "condition_number: all eigenvalues are zero",
        ));
    }
    let min_abs = eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let indefinite = eigenvalues.iter().any(|&v| v > 0.0) && eigenvalues.iter().any(|&v| v < 0.0);
    let kappa = if min_abs <= rank_tol * max_abs {
        f64::INFINITY
    } else {
        max_abs / min_abs
    };
    Ok(ConditionNumber { kappa, indefinite })
}

/// Eigendecomposition of a symmetric matrix: `values` ascending, `vectors`
/// holding the matching eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition. Rotations are applied until the largest
/// off-diagonal magnitude drops below `tol` (relative to the largest
/// diagonal magnitude, with an absolute floor for zero matrices).
pub fn jacobi_eigen(m: &Matrix, tol: f64) -> Result<Eigen> {
    if m.asymmetry() > 1e-9 {
        return Err(Error::invalid("jacobi_eigen: matrix is not symmetric"));
    }
    let n = m.dim();
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);

    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max(a.get(i, j).abs()));
    let threshold = tol * scale.max(f64::MIN_POSITIVE);

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                max_off = max_off.max(a.get(p, q).abs());
            }
        }
        if max_off <= threshold {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| {
                a.get(i, i)
                    .partial_cmp(&a.get(j, j))
                    .expect("eigenvalues are finite")
            });
            let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
            let mut vectors = Matrix::zeros(n);
            for (col, &src) in order.iter().enumerate() {
                for row in 0..n {
                    vectors.set(row, col, v.get(row, src));
                }
            }
            return Ok(Eigen { values, vectors });
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                    if theta < 0.0 { -t } else { t }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a.set(r, p, new_rp);
                    a.set(p, r, new_rp);
                    a.set(r, q, new_rq);
                    a.set(q, r, new_rq);
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp - s * (vrq + tau * vrp));
                    v.set(r, q, vrq + s * (vrp - tau * vrq));
                }
            }
        }
    }
    Err(Error::numeric(format!(
        "jacobi_eigen: no convergence after {MAX_JACOBI_SWEEPS} sweeps"
    )))
}

/// Second-order central-difference Hessian of `f` at `x`, symmetrized as
/// `(H + Hᵀ) / 2`. Returns a numeric failure if any probe point evaluates
/// non-finite.
pub fn numeric_hessian(f: &ObjectiveHandle, x: &[f64], h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::invalid("numeric_hessian: step size must be positive"));
    }
    let d = f.dimension();
    assert_eq!(x.len(), d, "numeric_hessian: point dimension mismatch");
    let eval = |point: &[f64]| -> Result<f64> {
        let value = f.evaluate(point, 0);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::numeric(format!(
                "objective evaluated non-finite at probe point {point:?}"
            )))
        }
    };

    let f0 = eval(x)?;
    let mut hess = Matrix::zeros(d);
    let mut probe = x.to_vec();
    for i in 0..d {
        probe[i] = x[i] + h;
        let f_plus = eval(&probe)?;
        probe[i] = x[i] - h;
        let f_minus = eval(&probe)?;
        probe[i] = x[i];
        hess.set(i, i, (f_plus - 2.0 * f0 + f_minus) / (h * h));

        for j in (i + 1)..d {
            probe[i] = x[i] + h;
            probe[j] = x[j] + h;
            let fpp = eval(&probe)?;
            probe[j] = x[j] - h;
            let fpm = eval(&probe)?;
            probe[i] = x[i] - h;
            probe[j] = x[j] + h;
            let fmp = eval(&probe)?;
            probe[j] = x[j] - h;
            let fmm = eval(&probe)?;
            probe[i] = x[i];
            probe[j] = x[j];
            let value = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess.set(i, j, value);
            hess.set(j, i, value);
        }
    }
    Ok(hess.symmetrized())
}

/// The 2x2 restriction matrix `A` of the first-`k` coordinate projection
/// onto the plane spanned by `u` and `v`:
/// `A = [[u_:k . u_:k, u_:k . v_:k], [v_:k . u_:k, v_:k . v_:k]]`.
pub fn slice_restriction_matrix(u: &[f64], v: &[f64], k: usize) -> Result<Matrix> {
    if u.len() != v.len() {
        return Err(Error::invalid("slice basis vectors differ in dimension"));
    }
    let d = u.len();
    if k == 0 || k > d {
        return Err(Error::invalid(format!(
            "slice_restriction_matrix: k must satisfy 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    check_orthogonal(u, v)?;
    let uu = dot(&u[..k], &u[..k]);
    let uv = dot(&u[..k], &v[..k]);
    let vv = dot(&v[..k], &v[..k]);
    Ok(Matrix::from_rows(&[vec![uu, uv], vec![uv, vv]]))
}

fn check_orthogonal(u: &[f64], v: &[f64]) -> Result<()> {
    let tol = 1e-10 * (norm(u) * norm(v)).max(1.0);
    if dot(u, v).abs() > tol {
        return Err(Error::invalid("slice basis vectors are not orthogonal"));
    }
    Ok(())
}

/// Restricts `f` to the plane `center + p1 u + p2 v` as a 2D objective.
pub fn plane_restriction(
    f: &ObjectiveHandle,
    center: &[f64],
    u: &[f64],
    v: &[f64],
) -> ObjectiveHandle {
    assert_eq!(center.len(), f.dimension());
    assert_eq!(u.len(), f.dimension());
    assert_eq!(v.len(), f.dimension());
    let f = f.clone();
    let center = center.to_vec();
    let u = u.to_vec();
    let v = v.to_vec();
    ObjectiveHandle::new(2, move |p, seed| {
        let x: Vec<f64> = center
            .iter()
            .zip(u.iter().zip(&v))
            .map(|(&c, (&ui, &vi))| c + p[0] * ui + p[1] * vi)
            .collect();
        f.evaluate(&x, seed)
    })
}

/// Condition number of `f` restricted to the slice plane: the 2x2
/// central-difference Hessian of `g(p) = f(center + p1 u + p2 v)` at the
/// plane origin, fed through [`condition_number`].
pub fn slice_condition_number(
    f: &ObjectiveHandle,
    center: &[f64],
    u: &[f64],
    v: &[f64],
    h: f64,
) -> Result<ConditionNumber> {
    check_orthogonal(u, v)?;
    let g = plane_restriction(f, center, u, v);
    let hess = numeric_hessian(&g, &[0.0, 0.0], h)?;
    let eigen = jacobi_eigen(&hess, DEFAULT_EIGEN_TOL)?;
    condition_number(&eigen.values, DEFAULT_RANK_TOL)
}

/// Fraction of the matrix's squared Frobenius mass held off the diagonal.
/// 0 for diagonal (fully separable) matrices, 1 when the diagonal is empty.
pub fn separability_index(m: &Matrix) -> Result<f64> {
    let n = m.dim();
    let mut off = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let sq = m.get(i, j) * m.get(i, j);
            total += sq;
            if i != j {
                off += sq;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::undefined("separability_index: zero matrix"));
    }
    Ok(off / total)
}

/// Conditioning summary of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct HessianReport {
    pub matrix: Matrix,
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    /// `f64::INFINITY` when rank-deficient at `rank_tol`.
    pub kappa: f64,
    pub indefinite: bool,
    pub separability_index: f64,
}

impl HessianReport {
    pub fn from_matrix(m: &Matrix, rank_tol: f64) -> Result<Self> {
        if m.asymmetry() > 1e-9 {
            return Err(Error::invalid("HessianReport: matrix is not symmetric"));
        }
        let sym = m.symmetrized();
        let eigen = jacobi_eigen(&sym, DEFAULT_EIGEN_TOL)?;
        let cond = condition_number(&eigen.values, rank_tol)?;
        let separability = separability_index(&sym)?;
        Ok(HessianReport {
            matrix: sym,
            eigenvalues: eigen.values,
            kappa: cond.kappa,
            indefinite: cond.indefinite,
            separability_index: separability,
        })
    }

    /// Numeric-Hessian report of an objective at a point.
    pub fn from_objective(
        f: &ObjectiveHandle,
        x: &[f64],
        h: f64,
        rank_tol: f64,
    ) -> Result<Self> {
        let hess = numeric_hessian(f, x, h)?;
        HessianReport::from_matrix(&hess, rank_tol)
    }

    /// Structured text document consumed by the CLI.
    pub fn to_document(&self) -> String {
        let eigenvalues = self
            .eigenvalues
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "dimension: {}\neigenvalues: {}\nkappa: {}\nindefinite: {}\nseparability_index: {}\n",
            self.matrix.dim(),
            eigenvalues,
            fmt_f64(self.kappa),
            self.indefinite,
            fmt_f64(self.separability_index),
        )
    }
}
