use super::DiffusionError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Linear,
    Cosine,
}

pub const LINEAR_BETA_START: f64 = 1e-4;
pub const LINEAR_BETA_END: f64 = 0.2;
const COSINE_OFFSET: f64 = 0.008;
const COSINE_MAX_BETA: f64 = 0.999;

/// Variance schedule. Index `t − 1` holds step `t` for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    pub beta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: ScheduleKind, t_steps: usize) -> Result<Self, DiffusionError> {
        if t_steps < 2 {
            return Err(DiffusionError::InvalidConfig(format!("timesteps must be >= 2, got {t_steps}")));
        }
        let beta: Vec<f64> = match kind {
            ScheduleKind::Linear => {
                let step = (LINEAR_BETA_END - LINEAR_BETA_START) / (t_steps - 1) as f64;
                (0..t_steps).map(|i| LINEAR_BETA_START + step * i as f64).collect()
            }
            ScheduleKind::Cosine => {
                let f = |t: f64| {
                    let a = (t / t_steps as f64 + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * std::f64::consts::FRAC_PI_2;
                    a.cos().powi(2)
                };
                (1..=t_steps)
                    .map(|t| (1.0 - f(t as f64) / f((t - 1) as f64)).clamp(1e-8, COSINE_MAX_BETA))
                    .collect()
            }
        };
        let mut alpha_bar = Vec::with_capacity(t_steps);
        let mut acc = 1.0;
        for b in &beta {
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        let sched = Self { kind, beta, alpha_bar };
        if *sched.alpha_bar.last().expect("t_steps >= 2") >= 0.05 {
            return Err(DiffusionError::InvalidConfig(format!(
                "schedule with {t_steps} steps leaves alpha_bar_T = {} >= 0.05",
                sched.alpha_bar[t_steps - 1]
            )));
        }
        Ok(sched)
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_at(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha_at(&self, t: usize) -> f64 {
        1.0 - self.beta[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar_at(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    fn check_t(&self, t: usize) -> Result<(), DiffusionError> {
        if t == 0 || t > self.steps() {
            Err(DiffusionError::TimestepOutOfRange { t, steps: self.steps() })
        } else {
            Ok(())
        }
    }

    pub fn q_sample(&self, x0: &[f64], t: usize, eps: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        self.check_t(t)?;
        Ok(q_sample_with(x0, self.alpha_bar_at(t), eps))
    }

    pub fn q_sample_categorical(&self, probs: &[f64], t: usize) -> Result<Vec<f64>, DiffusionError> {
        self.check_t(t)?;
        q_sample_categorical_with(probs, self.alpha_bar_at(t))
    }
}

/// `√ᾱ·x0 + √(1−ᾱ)·ε`.
pub fn q_sample_with(x0: &[f64], alpha_bar: f64, eps: &[f64]) -> Vec<f64> {
    let (a, s) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(x, e)| a * x + s * e).collect()
}

/// `ᾱ·x0 + (1−ᾱ)/K`.
pub fn q_sample_categorical_with(probs: &[f64], alpha_bar: f64) -> Result<Vec<f64>, DiffusionError> {
    let k = probs.len();
    let total: f64 = probs.iter().sum();
    if k < 2 || (total - 1.0).abs() > 1e-9 || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(DiffusionError::NotAProbabilityVector);
    }
    let floor = (1.0 - alpha_bar) / k as f64;
    Ok(probs.iter().map(|p| alpha_bar * p + floor).collect())
}

/// Sinusoidal embedding of an integer timestep: `dim/2` sines followed by `dim/2` cosines.
pub fn time_embedding(t: usize, dim: usize, out: &mut [f64]) {
    let half = dim / 2;
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_defaults() {
        let s = NoiseSchedule::new(ScheduleKind::Linear, 100).unwrap();
        assert_eq!(s.beta_at(1), 1e-4);
        assert!((s.beta_at(100) - 0.2).abs() < 1e-15);
        assert!(s.alpha_bar_at(100) < 0.05);
    }

    #[test]
    fn alpha_bar_is_cumulative_product() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Cosine] {
            for steps in [50, 100, 200] {
                let s = NoiseSchedule::new(kind, steps).unwrap();
                let mut prod = 1.0;
                for t in 1..=steps {
                    prod *= 1.0 - s.beta_at(t);
                    assert!((s.alpha_bar_at(t) - prod).abs() < 1e-12);
                    assert!(s.beta_at(t) > 0.0 && s.beta_at(t) < 1.0);
                    assert!(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
                }
            }
        }
    }

    #[test]
    fn q_sample_reference() {
        let x = q_sample_with(&[2.0], 0.25, &[1.0]);
        assert!((x[0] - (1.0 + 0.75f64.sqrt())).abs() < 1e-15);
        assert_eq!(q_sample_with(&[2.0, -1.0], 1.0, &[0.3, 0.4]), vec![2.0, -1.0]);
        assert_eq!(q_sample_with(&[2.0, -1.0], 0.0, &[0.3, 0.4]), vec![0.3, 0.4]);
        let s = NoiseSchedule::new(ScheduleKind::Linear, 100).unwrap();
        assert!(s.q_sample(&[1.0], 0, &[0.0]).is_err());
        assert!(s.q_sample(&[1.0], 101, &[0.0]).is_err());
    }

    #[test]
    fn q_sample_categorical_reference() {
        assert_eq!(q_sample_categorical_with(&[1.0, 0.0], 0.5).unwrap(), vec![0.75, 0.25]);
        assert_eq!(q_sample_categorical_with(&[0.0, 1.0, 0.0], 1.0).unwrap(), vec![0.0, 1.0, 0.0]);
        let u = q_sample_categorical_with(&[0.0, 0.0, 1.0, 0.0], 0.0).unwrap();
        assert!(u.iter().all(|&v| v == 0.25));
        assert!(q_sample_categorical_with(&[0.5, 0.4], 0.5).is_err());
        assert!(q_sample_categorical_with(&[1.0], 0.5).is_err());
    }

    #[test]
    fn embedding_shape() {
        let mut e = vec![0.0; 32];
        time_embedding(0, 32, &mut e);
        assert!(e[..16].iter().all(|&v| v == 0.0));
        assert!(e[16..].iter().all(|&v| v == 1.0));
        time_embedding(7, 32, &mut e);
        assert!((e[0] - 7f64.sin()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn categorical_output_is_distribution(raw in proptest::collection::vec(0.0f64..1.0, 2..8), ab in 0.0f64..=1.0) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-3;
            let probs: Vec<f64> = raw.iter().map(|r| (r + 1e-3 / raw.len() as f64) / total).collect();
            let out = q_sample_categorical_with(&probs, ab).unwrap();
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
