//! Least squares, symmetric eigendecomposition and the Gaussian Fréchet distance.

use super::{Matrix, NumericsError};
use serde::{Deserialize, Serialize};

/// Ordinary least squares solution together with its classical standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// `rss / (n - p)`.
    pub residual_variance: f64,
    pub rss: f64,
    pub df: usize,
}

const RANK_TOL: f64 = 1e-10;

/// Fits `y ≈ X β` by Householder QR. No intercept column is added.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<OlsFit, NumericsError> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if p == 0 || n <= p {
        return Err(NumericsError::Underdetermined { n, p });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }

    // Column-major working copy: Householder updates walk down columns.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut qty = y.to_vec();
    let mut r = Matrix::zeros(p, p);

    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(vi, ci)| vi * ci).sum();
                let f = 2.0 * dot / vnorm2;
                for (ci, vi) in col[k..].iter_mut().zip(&v) {
                    *ci -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&qty[k..]).map(|(vi, ci)| vi * ci).sum();
            let f = 2.0 * dot / vnorm2;
            for (ci, vi) in qty[k..].iter_mut().zip(&v) {
                *ci -= f * vi;
            }
        }
        for (j, col) in a.iter().enumerate().skip(k) {
            r[(k, j)] = col[k];
        }
    }

    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..p {
        if r[(i, i)].abs() <= RANK_TOL * max_diag || max_diag == 0.0 {
            return Err(NumericsError::RankDeficient { column: i });
        }
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[(i, j)] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[(i, i)];
    }
    let rss: f64 = qty[p..].iter().map(|v| v * v).sum();
    let df = n - p;
    let residual_variance = rss / df as f64;

    // diag((XᵀX)⁻¹) = squared row norms of R⁻¹.
    let rinv = upper_triangular_inverse(&r);
    let standard_errors = (0..p)
        .map(|j| {
            let d: f64 = (j..p).map(|k| rinv[(j, k)] * rinv[(j, k)]).sum();
            (residual_variance * d).sqrt()
        })
        .collect();

    Ok(OlsFit {
        coefficients: beta,
        standard_errors,
        residual_variance,
        rss,
        df,
    })
}

fn upper_triangular_inverse(r: &Matrix) -> Matrix {
    let p = r.rows();
    let mut inv = Matrix::zeros(p, p);
    for col in 0..p {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = ((i + 1)..=col).map(|k| r[(i, k)] * inv[(k, col)]).sum();
            inv[(i, col)] = (rhs - s) / r[(i, i)];
        }
    }
    inv
}

/// Prepends a column of ones.
pub fn with_intercept(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols() + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] })
}

/// Eigenvalues sorted descending and the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let d = self.values.len();
        let mut out = Matrix::zeros(d, d);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vik = self.vectors[(i, k)] * w;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out.symmetrize();
        out
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let scale = a.norm_inf().max(1.0);
    if a.asymmetry() > SYMMETRY_TOL * scale {
        return Err(NumericsError::Asymmetric(a.asymmetry()));
    }
    let d = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(d);

    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(SymEigen { values, vectors })
}

const PSD_TOL: f64 = 1e-8;

/// Symmetric square root of a PSD matrix. Eigenvalues in `[-1e-8, 0)` are clipped to zero.
pub fn psd_sqrt(a: &Matrix) -> Result<Matrix, NumericsError> {
    let eig = sym_eigen(a)?;
    if let Some(&min) = eig.values.last() {
        if min < -PSD_TOL {
            return Err(NumericsError::NotPsd(min));
        }
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Fréchet distance between `N(m1, c1)` and `N(m2, c2)`:
/// `‖m1 − m2‖² + tr(c1 + c2 − 2 (c1^{1/2} c2 c1^{1/2})^{1/2})`.
pub fn frechet_distance(
    m1: &[f64],
    c1: &Matrix,
    m2: &[f64],
    c2: &Matrix,
) -> Result<f64, NumericsError> {
    let d = m1.len();
    for (found, what) in [
        (m2.len(), "m2"),
        (c1.rows(), "c1"),
        (c1.cols(), "c1"),
        (c2.rows(), "c2"),
        (c2.cols(), "c2"),
    ] {
        if found != d {
            log::debug!("frechet_distance: {what} has dimension {found}, expected {d}");
            return Err(NumericsError::DimensionMismatch { expected: d, found });
        }
    }
    let mean_term: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let s1 = psd_sqrt(c1)?;
    // c2 must also be PSD; its root is not otherwise needed.
    let min2 = sym_eigen(c2)?.values.last().copied().unwrap_or(0.0);
    if min2 < -PSD_TOL {
        return Err(NumericsError::NotPsd(min2));
    }
    let mut inner = s1.matmul(c2).matmul(&s1);
    inner.symmetrize();
    let cross = psd_sqrt_clipped(&inner)?;
    let value = mean_term + c1.trace() + c2.trace() - 2.0 * cross.trace();
    Ok(if value < 0.0 { 0.0 } else { value })
}

// The product can pick up rounding negatives well below the PSD tolerance scale.
fn psd_sqrt_clipped(a: &Matrix) -> Result<Matrix, NumericsError> {
    let eig = sym_eigen(a)?;
    let scale = eig.values.first().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(&min) = eig.values.last() {
        if min < -PSD_TOL * scale {
            return Err(NumericsError::NotPsd(min));
        }
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Column means and unbiased (divisor `n − 1`) covariance of the rows of `x`.
pub fn mean_and_covariance(x: &Matrix) -> Result<(Vec<f64>, Matrix), NumericsError> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(NumericsError::TooFewRows(n));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = x.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((mean, cov))
}
