//! Matrix norms and proxes through the singular values.
//!
//! The low-rank inducing norms are unitarily invariant, so their values and
//! proxes on matrices are obtained by applying the vector versions to the
//! singular values and rotating back with the singular vectors.

use nalgebra::DMatrix;

use crate::error::{LrinError, Result};
use crate::gauges::{dual_norm_value, norm_value, MagnitudeProfile, NormSpec, ScaledNorm};
use crate::oracle::{Certificate, CERTIFICATE_TOL};
use crate::vec_prox::{prox_profile, CandidateSolution, SearchMode};

/// Singular values at or below this fraction of the largest are treated as
/// zero when counting rank.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-9;

/// Thin SVD `Z = U diag(sigma) V^T`, `sigma` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// n x q, orthonormal columns.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// m x q, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn new(z: &DMatrix<f64>) -> Result<Self> {
        check_finite(z)?;
        let (n, m) = z.shape();
        if n == 0 || m == 0 {
            return Err(LrinError::Empty);
        }
        // nalgebra's bidiagonal SVD mis-converges on some rank-deficient
        // inputs; faer's is used for the factorization instead.
        let zf = faer::Mat::<f64>::from_fn(n, m, |i, j| z[(i, j)]);
        let svd = zf
            .thin_svd()
            .map_err(|e| LrinError::Svd(format!("{n}x{m} input: {e:?}")))?;
        let (uf, vf, s) = (svd.U(), svd.V(), svd.S().column_vector());
        let q = n.min(m);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let sigma = order.iter().map(|&i| s[i].max(0.0)).collect();
        let u = DMatrix::from_fn(n, q, |row, k| uf[(row, order[k])]);
        let v = DMatrix::from_fn(m, q, |row, k| vf[(row, order[k])]);
        let out = SvdFactors { u, sigma, v };
        debug_assert!(out.orthonormality_error() <= 1e-10);
        Ok(out)
    }

    pub fn rank_dim(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(values) V^T`.
    pub fn compose(&self, values: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (k, &s) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.v.transpose()
    }

    /// `max(||U^T U - I||_max, ||V^T V - I||_max)`.
    pub fn orthonormality_error(&self) -> f64 {
        let q = self.sigma.len();
        let eye = DMatrix::<f64>::identity(q, q);
        let eu = (self.u.transpose() * &self.u - &eye).amax();
        let ev = (self.v.transpose() * &self.v - &eye).amax();
        eu.max(ev)
    }
}

fn check_finite(z: &DMatrix<f64>) -> Result<()> {
    if let Some((index, &value)) = z.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(LrinError::NonFinite { index, value });
    }
    Ok(())
}

pub fn singular_values(z: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(SvdFactors::new(z)?.sigma)
}

/// Count of singular values above `threshold * sigma_1`.
pub fn numerical_rank(sigma: &[f64], threshold: f64) -> usize {
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > threshold * top).count()
}

fn spec_for_shape(spec: &NormSpec, z: &DMatrix<f64>) -> Result<()> {
    let q = z.nrows().min(z.ncols());
    spec.check_dim(q).map_err(|_| {
        LrinError::Shape(format!(
            "r = {} exceeds min dimension {q} of a {}x{} matrix",
            spec.r,
            z.nrows(),
            z.ncols()
        ))
    })
}

pub fn matrix_norm_value(z: &DMatrix<f64>, spec: &NormSpec) -> Result<f64> {
    spec_for_shape(spec, z)?;
    norm_value(&MagnitudeProfile::new(&singular_values(z)?)?, spec)
}

pub fn matrix_dual_norm_value(z: &DMatrix<f64>, spec: &NormSpec) -> Result<f64> {
    spec_for_shape(spec, z)?;
    dual_norm_value(&MagnitudeProfile::new(&singular_values(z)?)?, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProxOutput {
    pub x: DMatrix<f64>,
    /// Singular values of `x`, non-increasing.
    pub sigma: Vec<f64>,
    pub numerical_rank: usize,
    pub candidate: CandidateSolution,
    pub candidate_solves: usize,
}

pub fn matrix_prox(z: &DMatrix<f64>, f: &ScaledNorm, mode: SearchMode) -> Result<MatrixProxOutput> {
    matrix_prox_with_threshold(z, f, mode, DEFAULT_RANK_THRESHOLD)
}

pub fn matrix_prox_with_threshold(
    z: &DMatrix<f64>,
    f: &ScaledNorm,
    mode: SearchMode,
    rank_threshold: f64,
) -> Result<MatrixProxOutput> {
    spec_for_shape(&f.spec, z)?;
    let svd = SvdFactors::new(z)?;
    let out = prox_profile(&MagnitudeProfile::new(&svd.sigma)?, f, mode)?;
    // The vector prox maps sorted non-negative input to sorted non-negative
    // output, so out.x is directly a list of singular values.
    debug_assert!(out.x.windows(2).all(|w| w[0] >= w[1]) && out.x.iter().all(|&s| s >= 0.0));
    Ok(MatrixProxOutput {
        x: svd.compose(&out.x),
        numerical_rank: numerical_rank(&out.x, rank_threshold),
        sigma: out.x,
        candidate: out.candidate,
        candidate_solves: out.candidate_solves,
    })
}

/// Matrix version of [`crate::oracle::certify_prox`], with fresh SVDs of `x`
/// and `z - x`.
pub fn certify_matrix_prox(
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    f: &ScaledNorm,
) -> Result<Certificate> {
    if z.shape() != x.shape() {
        return Err(LrinError::Shape("z and x differ in shape".into()));
    }
    let y = z - x;
    let dual = dual_norm_value(&MagnitudeProfile::new(&singular_values(&y)?)?, &f.spec)?;
    let nx = norm_value(&MagnitudeProfile::new(&singular_values(x)?)?, &f.spec)?;
    let pairing = y.dot(x);
    let (bound, target) = if f.squared {
        (f.gamma * nx, f.gamma * nx * nx)
    } else {
        (f.gamma, f.gamma * nx)
    };
    let dual_residual = (dual - bound).max(0.0);
    let alignment_residual = (pairing - target).abs();
    let scale = z.norm().max(1.0);
    // SVD round-off enters both residuals.
    let tol = 10.0 * CERTIFICATE_TOL;
    Ok(Certificate {
        dual_residual,
        alignment_residual,
        pass: dual_residual <= tol * scale && alignment_residual <= tol * scale * scale,
    })
}

/// Euclidean projection of `(z, t)` onto the epigraph `{(X, s) : N(X) <= s}`.
///
/// Outside the epigraph and its polar cone the projection is
/// `(prox_{lambda N}(z), t + lambda)` for the `lambda > 0` solving
/// `N(prox_{lambda N}(z)) = t + lambda`, found by bisection.
pub fn project_epigraph(z: &DMatrix<f64>, t: f64, spec: &NormSpec) -> Result<(DMatrix<f64>, f64)> {
    if !t.is_finite() {
        return Err(LrinError::InvalidParameter(format!(
            "t must be finite, got {t}"
        )));
    }
    spec_for_shape(spec, z)?;
    let svd = SvdFactors::new(z)?;
    let p = MagnitudeProfile::new(&svd.sigma)?;
    let n = norm_value(&p, spec)?;
    if n <= t {
        return Ok((z.clone(), t));
    }
    let g = dual_norm_value(&p, spec)?;
    if g <= -t {
        return Ok((DMatrix::zeros(z.nrows(), z.ncols()), 0.0));
    }
    let shrink = |lambda: f64| -> Result<Vec<f64>> {
        let f = ScaledNorm::new(*spec, lambda, false)?;
        Ok(prox_profile(&p, &f, SearchMode::BinarySearch)?.x)
    };
    // h(lambda) = N(prox) - t - lambda is decreasing, h(0) > 0 > h(g).
    let (mut lo, mut hi) = (0.0f64, g);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = shrink(mid)?;
        if norm_value(&MagnitudeProfile::new(&s)?, spec)? > t + mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let s = shrink(lambda)?;
    Ok((svd.compose(&s), t + lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauges::NormFlavor;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn svd_factors_reconstruct() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -3.0, 0.5, 4.0, 1.0]);
        let svd = SvdFactors::new(&z).unwrap();
        assert_eq!(svd.u.shape(), (3, 2));
        assert_eq!(svd.v.shape(), (2, 2));
        assert!(svd.sigma[0] >= svd.sigma[1]);
        assert!((svd.compose(&svd.sigma) - &z).norm() <= 1e-12);
        assert!(svd.orthonormality_error() <= 1e-12);
    }

    #[test]
    fn norm_of_diagonal() {
        let v = matrix_norm_value(&diag(&[2.0, 1.0, 1.0]), &NormSpec::frobenius(2).unwrap());
        assert!((v.unwrap() - 8f64.sqrt()).abs() <= 1e-14);
        let v = matrix_norm_value(&DMatrix::zeros(3, 4), &NormSpec::spectral(2).unwrap());
        assert_eq!(v.unwrap(), 0.0);
        assert!(matrix_norm_value(&DMatrix::zeros(2, 4), &NormSpec::spectral(3).unwrap()).is_err());
    }

    #[test]
    fn prox_of_rank_one() {
        let u = nalgebra::DVector::from_column_slice(&[0.6, 0.8, 0.0]);
        let v = nalgebra::DVector::from_column_slice(&[0.0, 1.0]);
        for s in [0.5, 1.0, 3.0] {
            let z = &u * v.transpose() * s;
            let f = ScaledNorm::new(NormSpec::frobenius(2).unwrap(), 1.0, false).unwrap();
            let out = matrix_prox(&z, &f, SearchMode::BinarySearch).unwrap();
            let expected = &z * (1.0 - 1.0 / s).max(0.0);
            assert!((out.x - expected).norm() <= 1e-12);
        }
    }

    #[test]
    fn prox_reports_rank() {
        let f = ScaledNorm::new(NormSpec::frobenius(1).unwrap(), 1.0, false).unwrap();
        let out = matrix_prox(&diag(&[3.0, 2.0, 0.5]), &f, SearchMode::Enumerate).unwrap();
        assert_eq!(out.sigma, vec![2.0, 1.0, 0.0]);
        assert_eq!(out.numerical_rank, 2);
        assert!(
            certify_matrix_prox(&diag(&[3.0, 2.0, 0.5]), &out.x, &f)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn epigraph_cases() {
        let spec = NormSpec::frobenius(1).unwrap();
        let z = diag(&[1.0, 0.5]);
        let (x, s) = project_epigraph(&z, 5.0, &spec).unwrap();
        assert_eq!((x, s), (z.clone(), 5.0));
        let (x, s) = project_epigraph(&DMatrix::zeros(2, 2), -1.0, &spec).unwrap();
        assert_eq!(x, DMatrix::zeros(2, 2));
        assert_eq!(s, 0.0);
        let (x, s) = project_epigraph(&diag(&[3.0, 0.0]), 0.0, &spec).unwrap();
        assert!((s - 1.5).abs() <= 1e-12);
        assert!((x - diag(&[1.5, 0.0])).norm() <= 1e-12);
        let spec = NormSpec::new(NormFlavor::SpectralR, 2).unwrap();
        let (x, s) = project_epigraph(&diag(&[4.0, 1.0]), 1.0, &spec).unwrap();
        let n = matrix_norm_value(&x, &spec).unwrap();
        assert!((n - s).abs() <= 1e-10);
    }

    #[test]
    fn rejects_non_finite() {
        let z = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(
            SvdFactors::new(&z),
            Err(LrinError::NonFinite { .. })
        ));
    }
}
