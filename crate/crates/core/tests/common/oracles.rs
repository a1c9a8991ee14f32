//! Slow reference solvers used to cross-check the coordinate-descent fits.
//! Everything here works on plain `Vec<Vec<f64>>` rows so it shares no code with the library.
#![allow(dead_code)]

pub struct Problem {
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.rows.len()
    }
    pub fn p(&self) -> usize {
        self.rows[0].len()
    }

    /// Population sd of each column; the penalty weights.
    pub fn scales(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.p())
            .map(|j| {
                let m = self.rows.iter().map(|r| r[j]).sum::<f64>() / n;
                (self.rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect()
    }

    pub fn lasso_objective(&self, b0: f64, beta: &[f64], lambda: f64) -> f64 {
        let n = self.n() as f64;
        let rss: f64 = self
            .rows
            .iter()
            .zip(&self.y)
            .map(|(r, y)| {
                let f = b0 + r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
                (y - f).powi(2)
            })
            .sum();
        let pen: f64 = beta.iter().zip(self.scales()).map(|(b, s)| (b * s).abs()).sum();
        rss / (2.0 * n) + lambda * pen
    }

    pub fn logistic_objective(&self, b0: f64, beta: &[f64], lambda: f64) -> f64 {
        let n = self.n() as f64;
        let loss: f64 = self
            .rows
            .iter()
            .zip(&self.y)
            .map(|(r, y)| {
                let eta = b0 + r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
                // log(1 + e^eta) - y*eta, written to avoid overflow
                eta.max(0.0) + (-eta.abs()).exp().ln_1p() - y * eta
            })
            .sum();
        let pen: f64 = beta.iter().zip(self.scales()).map(|(b, s)| (b * s).abs()).sum();
        loss / n + lambda * pen
    }
}

/// Lasso via accelerated projected gradient on the split `β = u − v`, `u, v ≥ 0`,
/// over the centered and scaled design. Returns `(intercept, β)` on the original scale.
pub fn lasso_projected_gradient(pr: &Problem, lambda: f64, iters: usize) -> (f64, Vec<f64>) {
    let (n, p) = (pr.n(), pr.p());
    let nf = n as f64;
    let means: Vec<f64> = (0..p).map(|j| pr.rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let scales = pr.scales();
    let ybar = pr.y.iter().sum::<f64>() / nf;
    let z: Vec<Vec<f64>> = pr
        .rows
        .iter()
        .map(|r| (0..p).map(|j| if scales[j] > 0.0 { (r[j] - means[j]) / scales[j] } else { 0.0 }).collect())
        .collect();
    let yc: Vec<f64> = pr.y.iter().map(|v| v - ybar).collect();

    // Lipschitz constant of the split problem: 2·‖Z‖²/n, via power iteration.
    let mut w = vec![1.0; p];
    let mut l = 0.0;
    for _ in 0..200 {
        let zw: Vec<f64> = z.iter().map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
        let mut ztzw = vec![0.0; p];
        for (r, s) in z.iter().zip(&zw) {
            for j in 0..p {
                ztzw[j] += r[j] * s;
            }
        }
        let norm = ztzw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        l = norm / w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w = ztzw.iter().map(|v| v / norm).collect();
    }
    let step = 1.0 / (2.0 * l / nf).max(1e-12);

    let grad = |uv: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..p).map(|j| uv[j] - uv[p + j]).collect();
        let resid: Vec<f64> = z
            .iter()
            .zip(&yc)
            .map(|(r, y)| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() - y)
            .collect();
        let mut g = vec![0.0; p];
        for (r, e) in z.iter().zip(&resid) {
            for j in 0..p {
                g[j] += r[j] * e / nf;
            }
        }
        let mut out = vec![0.0; 2 * p];
        for j in 0..p {
            out[j] = g[j] + lambda;
            out[p + j] = -g[j] + lambda;
        }
        out
    };
    let split_obj = |uv: &[f64]| -> f64 {
        let beta: Vec<f64> = (0..p).map(|j| uv[j] - uv[p + j]).collect();
        let rss: f64 = z
            .iter()
            .zip(&yc)
            .map(|(r, y)| (y - r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).powi(2))
            .sum();
        rss / (2.0 * nf) + lambda * uv.iter().sum::<f64>()
    };

    let mut x = vec![0.0; 2 * p];
    let mut yk = x.clone();
    let mut t = 1.0f64;
    let mut last = f64::INFINITY;
    for _ in 0..iters {
        let g = grad(&yk);
        let next: Vec<f64> = yk.iter().zip(&g).map(|(a, b)| (a - step * b).max(0.0)).collect();
        let f = split_obj(&next);
        // adaptive restart keeps the momentum from overshooting
        let t_next = if f > last { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        let mom = if f > last { 0.0 } else { (t - 1.0) / t_next };
        yk = next.iter().zip(&x).map(|(a, b)| a + mom * (a - b)).collect();
        x = next;
        t = t_next;
        last = f;
    }
    let beta: Vec<f64> = (0..p)
        .map(|j| if scales[j] > 0.0 { (x[j] - x[p + j]) / scales[j] } else { 0.0 })
        .collect();
    let b0 = ybar - means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    (b0, beta)
}

/// Brute-force search over `(β₀, β)`: a coarse lattice, then repeated local lattices
/// around the incumbent with the spacing halved each round.
pub fn lattice_minimize(dim: usize, f: impl Fn(&[f64]) -> f64, half_width: f64, coarse: usize) -> (Vec<f64>, f64) {
    let mut best = vec![0.0; dim];
    let mut best_f = f(&best);
    let h0 = 2.0 * half_width / (coarse - 1) as f64;
    let mut idx = vec![0usize; dim];
    loop {
        let pt: Vec<f64> = idx.iter().map(|&i| -half_width + h0 * i as f64).collect();
        let v = f(&pt);
        if v < best_f {
            best_f = v;
            best = pt;
        }
        let mut k = 0;
        while k < dim {
            idx[k] += 1;
            if idx[k] < coarse {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dim {
            break;
        }
    }
    let mut h = h0;
    let offsets: Vec<f64> = vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
    while h > 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            let centre = best.clone();
            let mut local = vec![0usize; dim];
            loop {
                let pt: Vec<f64> = (0..dim).map(|d| centre[d] + offsets[local[d]] * h).collect();
                let v = f(&pt);
                if v < best_f - 1e-15 {
                    best_f = v;
                    best = pt;
                    improved = true;
                }
                let mut k = 0;
                while k < dim {
                    local[k] += 1;
                    if local[k] < offsets.len() {
                        break;
                    }
                    local[k] = 0;
                    k += 1;
                }
                if k == dim {
                    break;
                }
            }
        }
        h /= 2.0;
    }
    (best, best_f)
}
