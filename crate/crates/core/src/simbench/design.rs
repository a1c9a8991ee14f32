use super::SimError;
use crate::data::{ColumnKind, Dataset, Schema};
use crate::numerics::{psd_sqrt, sym_eigen, Matrix, StreamRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignKind {
    Iid,
    /// `Σ_ij = ρ^|i−j|`.
    Ar { rho: f64 },
    /// Consecutive blocks with a common within-block correlation, independent across blocks.
    BlockDiag { block_size: usize, within_corr: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub p: usize,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 {
            return Err(SimError::InvalidDesign("p must be positive".into()));
        }
        match self.kind {
            DesignKind::Iid => Ok(()),
            DesignKind::Ar { rho } if rho.abs() < 1.0 => Ok(()),
            DesignKind::Ar { rho } => Err(SimError::InvalidDesign(format!("|rho| = {} must be < 1", rho.abs()))),
            DesignKind::BlockDiag { block_size, within_corr } => {
                if block_size == 0 {
                    return Err(SimError::InvalidDesign("block_size must be positive".into()));
                }
                let lower = if block_size > 1 { -1.0 / (block_size as f64 - 1.0) } else { -1.0 };
                if within_corr > lower && within_corr < 1.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidDesign(format!(
                        "within_corr {within_corr} outside ({lower}, 1) for block size {block_size}"
                    )))
                }
            }
        }
    }
}

/// Population covariance of the design.
pub fn make_design(spec: &DesignSpec) -> Result<Matrix, SimError> {
    spec.validate()?;
    let p = spec.p;
    Ok(match spec.kind {
        DesignKind::Iid => Matrix::identity(p),
        DesignKind::Ar { rho } => Matrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs())),
        DesignKind::BlockDiag { block_size, within_corr } => Matrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else if i / block_size == j / block_size {
                within_corr
            } else {
                0.0
            }
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Linear,
    Logistic,
}

/// Ground-truth regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub design: DesignSpec,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub link: Link,
    pub support: Vec<usize>,
}

impl TrueModel {
    pub fn new(design: DesignSpec, beta: Vec<f64>, sigma: f64, link: Link) -> Result<Self, SimError> {
        design.validate()?;
        if beta.len() != design.p {
            return Err(SimError::InvalidModel(format!(
                "beta has length {}, design has p = {}",
                beta.len(),
                design.p
            )));
        }
        if !(sigma >= 0.0) {
            return Err(SimError::InvalidModel(format!("sigma {sigma} must be >= 0")));
        }
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Ok(Self {
            design,
            beta,
            sigma,
            link,
            support,
        })
    }

    pub fn schema(&self) -> Schema {
        let response = match self.link {
            Link::Linear => ColumnKind::Continuous,
            Link::Logistic => ColumnKind::Categorical { cardinality: 2 },
        };
        Schema::regression(self.design.p, response)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// i.i.d. design, five random ±2 coefficients with a small perturbation.
    IidS5,
    /// AR(0.9) design with ten leading ±2 coefficients.
    Ar10,
    /// Blocks of five at correlation 0.9, five leading ±2 coefficients.
    Block5,
    /// [`Scenario::Block5`] with Bernoulli outcomes.
    LogisticBlock5,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub n: usize,
    pub sigma: f64,
    /// Standard deviation of the perturbation added to the ±2 coefficients in `IidS5`.
    pub iid_perturbation_sd: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            n: 500,
            sigma: 1.0,
            iid_perturbation_sd: 0.1,
        }
    }
}

const AR10_BETA: [f64; 10] = [2.0, 2.0, -2.0, -2.0, -2.0, 2.0, 2.0, -2.0, -2.0, -2.0];
const BLOCK5_BETA: [f64; 5] = [2.0, 2.0, 2.0, -2.0, -2.0];

pub fn make_true_model(
    scenario: Scenario,
    p: usize,
    opts: &ScenarioOptions,
    rng: &mut StreamRng,
) -> Result<TrueModel, SimError> {
    let s = match scenario {
        Scenario::Ar10 => 10,
        _ => 5,
    };
    if p < s {
        return Err(SimError::InvalidModel(format!("p = {p} cannot hold {s} nonzero coefficients")));
    }
    let mut beta = vec![0.0; p];
    let (kind, link) = match scenario {
        Scenario::IidS5 => {
            let mut idx: Vec<usize> = (0..p).collect();
            rng.shuffle(&mut idx);
            for &j in &idx[..s] {
                let sign = if rng.bernoulli(0.5) { 2.0 } else { -2.0 };
                beta[j] = sign + opts.iid_perturbation_sd * rng.normal();
            }
            (DesignKind::Iid, Link::Linear)
        }
        Scenario::Ar10 => {
            beta[..10].copy_from_slice(&AR10_BETA);
            (DesignKind::Ar { rho: 0.9 }, Link::Linear)
        }
        Scenario::Block5 | Scenario::LogisticBlock5 => {
            beta[..5].copy_from_slice(&BLOCK5_BETA);
            let link = if scenario == Scenario::Block5 { Link::Linear } else { Link::Logistic };
            (
                DesignKind::BlockDiag {
                    block_size: 5,
                    within_corr: 0.9,
                },
                link,
            )
        }
    };
    TrueModel::new(DesignSpec { kind, n: opts.n, p }, beta, opts.sigma, link)
}

/// Rows of `N(0, Σ)` through the symmetric root of `Σ`.
pub fn sample_design(spec: &DesignSpec, n: usize, rng: &mut StreamRng) -> Result<Matrix, SimError> {
    let p = spec.p;
    let z = Matrix::from_fn(n, p, |_, _| rng.normal());
    match spec.kind {
        DesignKind::Iid => Ok(z),
        _ => {
            let root = psd_sqrt(&make_design(spec)?)?;
            Ok(z.matmul(&root))
        }
    }
}

pub fn sample_dataset(tm: &TrueModel, n: usize, rng: &mut StreamRng) -> Result<Dataset, SimError> {
    if n == 0 {
        return Err(SimError::InvalidModel("n must be >= 1".into()));
    }
    let x = sample_design(&tm.design, n, rng)?;
    let eta = x.matvec(&tm.beta);
    let y: Vec<f64> = match tm.link {
        Link::Linear => eta
            .into_iter()
            .map(|e| if tm.sigma == 0.0 { e } else { e + tm.sigma * rng.normal() })
            .collect(),
        Link::Logistic => eta
            .into_iter()
            .map(|e| if rng.uniform() < 1.0 / (1.0 + (-e).exp()) { 1.0 } else { 0.0 })
            .collect(),
    };
    let p = tm.design.p;
    let values = Matrix::from_fn(n, p + 1, |i, j| if j < p { x[(i, j)] } else { y[i] });
    Ok(Dataset::new(tm.schema(), values)?)
}

/// Smallest eigenvalue, for PD checks.
pub fn min_eigenvalue(a: &Matrix) -> Result<f64, SimError> {
    Ok(sym_eigen(a)?.values.last().copied().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{mean_and_covariance, RngStream};

    #[test]
    fn design_entries() {
        let ar = make_design(&DesignSpec { kind: DesignKind::Ar { rho: 0.9 }, n: 10, p: 5 }).unwrap();
        assert!((ar[(0, 1)] - 0.9).abs() < 1e-15);
        assert!((ar[(0, 2)] - 0.81).abs() < 1e-15);
        let block = make_design(&DesignSpec {
            kind: DesignKind::BlockDiag { block_size: 5, within_corr: 0.9 },
            n: 10,
            p: 10,
        })
        .unwrap();
        assert_eq!(block[(0, 1)], 0.9);
        assert_eq!(block[(0, 5)], 0.0);
        assert_eq!(block[(5, 9)], 0.9);
        let iid = make_design(&DesignSpec { kind: DesignKind::Iid, n: 10, p: 4 }).unwrap();
        assert_eq!(iid, Matrix::identity(4));
    }

    #[test]
    fn invalid_designs_rejected() {
        assert!(make_design(&DesignSpec { kind: DesignKind::Ar { rho: 1.0 }, n: 1, p: 3 }).is_err());
        assert!(make_design(&DesignSpec {
            kind: DesignKind::BlockDiag { block_size: 5, within_corr: -0.3 },
            n: 1,
            p: 10
        })
        .is_err());
    }

    #[test]
    fn designs_are_positive_definite() {
        let kinds = [
            DesignKind::Iid,
            DesignKind::Ar { rho: 0.9 },
            DesignKind::Ar { rho: -0.95 },
            DesignKind::BlockDiag { block_size: 5, within_corr: 0.9 },
            DesignKind::BlockDiag { block_size: 4, within_corr: -0.3 },
            DesignKind::BlockDiag { block_size: 3, within_corr: 0.999 },
        ];
        for kind in kinds {
            for p in [1, 7, 20, 50] {
                let s = make_design(&DesignSpec { kind, n: 1, p }).unwrap();
                assert_eq!(s.asymmetry(), 0.0);
                assert!(min_eigenvalue(&s).unwrap() >= 1e-8, "{kind:?} p={p}");
            }
        }
    }

    #[test]
    fn scenario_coefficients() {
        let mut rng = RngStream::new(1, 0).rng();
        let opts = ScenarioOptions::default();
        let ar = make_true_model(Scenario::Ar10, 20, &opts, &mut rng).unwrap();
        assert_eq!(&ar.beta[..10], &AR10_BETA);
        assert!(ar.beta[10..].iter().all(|&b| b == 0.0));
        let block = make_true_model(Scenario::Block5, 20, &opts, &mut rng).unwrap();
        assert_eq!(&block.beta[..5], &[2.0, 2.0, 2.0, -2.0, -2.0]);
        assert_eq!(block.support, vec![0, 1, 2, 3, 4]);
        let logit = make_true_model(Scenario::LogisticBlock5, 20, &opts, &mut rng).unwrap();
        assert_eq!(logit.link, Link::Logistic);
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, 0).rng();
            let iid = make_true_model(Scenario::IidS5, 30, &opts, &mut rng).unwrap();
            assert_eq!(iid.support.len(), 5);
            for &j in &iid.support {
                assert!((iid.beta[j].abs() - 2.0).abs() < 0.6);
            }
        }
        assert!(make_true_model(Scenario::Ar10, 9, &opts, &mut rng).is_err());
    }

    #[test]
    fn noiseless_linear_is_exact() {
        let mut rng = RngStream::new(2, 0).rng();
        let opts = ScenarioOptions { sigma: 0.0, ..Default::default() };
        let tm = make_true_model(Scenario::Block5, 12, &opts, &mut rng).unwrap();
        let d = sample_dataset(&tm, 40, &mut rng).unwrap();
        let xb = d.features().matvec(&tm.beta);
        assert_eq!(xb, d.response());
    }

    #[test]
    fn logistic_outputs_binary() {
        let mut rng = RngStream::new(3, 0).rng();
        let tm = make_true_model(Scenario::LogisticBlock5, 10, &ScenarioOptions::default(), &mut rng).unwrap();
        let d = sample_dataset(&tm, 200, &mut rng).unwrap();
        assert!(d.response().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn sample_covariance_matches_population() {
        let spec = DesignSpec { kind: DesignKind::Ar { rho: 0.9 }, n: 5000, p: 5 };
        let mut rng = RngStream::new(4, 0).rng();
        let x = sample_design(&spec, 5000, &mut rng).unwrap();
        let (_, cov) = mean_and_covariance(&x).unwrap();
        assert!(cov.max_abs_diff(&make_design(&spec).unwrap()) < 0.05);
    }
}
