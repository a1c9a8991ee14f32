use crate::numerics::Matrix;

/// Column-major, centered and scaled copy of a design so that every
/// non-degenerate column has mean 0 and `(1/n)‖z‖² = 1`.
pub(crate) struct StandardizedDesign {
    pub n: usize,
    pub p: usize,
    columns: Vec<f64>,
    pub means: Vec<f64>,
    /// Zero for constant columns, which the solvers pin at zero.
    pub scales: Vec<f64>,
}

impl StandardizedDesign {
    pub fn new(x: &Matrix) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let mut columns = vec![0.0; n * p];
        let mut means = vec![0.0; p];
        let mut scales = vec![0.0; p];
        for j in 0..p {
            let col = &mut columns[j * n..(j + 1) * n];
            for (i, c) in col.iter_mut().enumerate() {
                *c = x[(i, j)];
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let ms = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = ms.sqrt();
            means[j] = mean;
            if sd > 1e-12 * mean.abs().max(1.0) {
                scales[j] = sd;
                for c in col.iter_mut() {
                    *c = (*c - mean) / sd;
                }
            } else {
                col.iter_mut().for_each(|c| *c = 0.0);
            }
        }
        Self {
            n,
            p,
            columns,
            means,
            scales,
        }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        self.scales[j] == 0.0
    }

    /// `(1/n) z_jᵀ v` for every column.
    pub fn correlations(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p).map(|j| dot(self.col(j), v) / self.n as f64).collect()
    }

    pub fn to_original(&self, beta_std: &[f64]) -> Vec<f64> {
        beta_std
            .iter()
            .zip(&self.scales)
            .map(|(&b, &s)| if s == 0.0 { 0.0 } else { b / s })
            .collect()
    }

    pub fn to_standardized(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().zip(&self.scales).map(|(&b, &s)| b * s).collect()
    }

    /// Intercept on the original scale for coefficients on the original scale.
    pub fn intercept(&self, center: f64, beta: &[f64]) -> f64 {
        center - self.means.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}
