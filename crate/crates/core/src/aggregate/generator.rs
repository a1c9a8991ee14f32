use super::AggregateError;
use crate::data::Dataset;
use crate::diffusion::DiffusionModel;
use crate::numerics::{RngStream, StreamRng};
use crate::simbench::{sample_dataset, GraphTruth, TrueModel};
use std::sync::Arc;

/// Anything that can draw synthetic datasets. Replicate `b` of a run with
/// base seed `s` draws from stream `(s, b)`.
pub trait ReplicateSource: Sync {
    /// Rows per replicate.
    fn n_syn(&self) -> usize;

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset, AggregateError>;

    fn generate_replicate(&self, b: usize, seed: u64) -> Result<Dataset, AggregateError> {
        self.sample(self.n_syn(), &mut RngStream::new(seed, b as u64).rng())
    }
}

#[derive(Debug, Clone)]
pub enum GeneratorKind {
    Diffusion(Arc<DiffusionModel>),
    /// Rows drawn with replacement from a source dataset.
    Bootstrap(Arc<Dataset>),
    /// Fresh draws from a known regression model.
    Oracle(TrueModel),
    /// Fresh draws from a known Gaussian graphical model.
    GraphOracle(GraphTruth),
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub n_syn: usize,
}

impl Generator {
    /// Synthetic sample size defaults to the training size.
    pub fn diffusion(model: Arc<DiffusionModel>) -> Self {
        let n_syn = model.n_train;
        Self {
            kind: GeneratorKind::Diffusion(model),
            n_syn,
        }
    }

    pub fn bootstrap(source: Arc<Dataset>) -> Self {
        let n_syn = source.n();
        Self {
            kind: GeneratorKind::Bootstrap(source),
            n_syn,
        }
    }

    pub fn oracle(model: TrueModel, n_syn: usize) -> Self {
        Self {
            kind: GeneratorKind::Oracle(model),
            n_syn,
        }
    }

    pub fn graph_oracle(truth: GraphTruth, n_syn: usize) -> Self {
        Self {
            kind: GeneratorKind::GraphOracle(truth),
            n_syn,
        }
    }

    pub fn with_n_syn(mut self, n_syn: usize) -> Self {
        self.n_syn = n_syn;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeneratorKind::Diffusion(_) => "diffusion",
            GeneratorKind::Bootstrap(_) => "bootstrap",
            GeneratorKind::Oracle(_) => "oracle",
            GeneratorKind::GraphOracle(_) => "graph_oracle",
        }
    }
}

impl ReplicateSource for Generator {
    fn n_syn(&self) -> usize {
        self.n_syn
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset, AggregateError> {
        if n == 0 {
            return Err(AggregateError::InvalidOptions("synthetic sample size must be >= 1".into()));
        }
        Ok(match &self.kind {
            GeneratorKind::Diffusion(m) => m.generate(n, rng)?,
            GeneratorKind::Bootstrap(d) => {
                if d.n() == 0 {
                    return Err(AggregateError::InvalidOptions("bootstrap source is empty".into()));
                }
                let rows: Vec<usize> = (0..n).map(|_| rng.index(d.n())).collect();
                d.select_rows(&rows)
            }
            GeneratorKind::Oracle(tm) => sample_dataset(tm, n, rng)?,
            GeneratorKind::GraphOracle(g) => g.sample(n, rng)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::numerics::Matrix;
    use crate::simbench::{make_true_model, Scenario, ScenarioOptions};

    #[test]
    fn bootstrap_of_single_row() {
        let schema = Schema::regression(2, crate::data::ColumnKind::Continuous);
        let d = Dataset::new(schema, Matrix::from_rows(&[vec![1.0, 2.0, 3.0]])).unwrap();
        let g = Generator::bootstrap(Arc::new(d)).with_n_syn(5);
        let r = g.generate_replicate(1, 7).unwrap();
        assert_eq!(r.n(), 5);
        for i in 0..5 {
            assert_eq!(r.values().row(i), &[1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn replicates_are_deterministic_and_distinct() {
        let mut rng = RngStream::new(0, 0).rng();
        let tm = make_true_model(Scenario::Block5, 10, &ScenarioOptions::default(), &mut rng).unwrap();
        let g = Generator::oracle(tm, 30);
        assert_eq!(g.generate_replicate(3, 11).unwrap(), g.generate_replicate(3, 11).unwrap());
        assert_ne!(g.generate_replicate(3, 11).unwrap(), g.generate_replicate(4, 11).unwrap());
    }

    #[test]
    fn noiseless_oracle() {
        let mut rng = RngStream::new(0, 0).rng();
        let opts = ScenarioOptions { sigma: 0.0, ..Default::default() };
        let tm = make_true_model(Scenario::Ar10, 12, &opts, &mut rng).unwrap();
        let g = Generator::oracle(tm.clone(), 25);
        let d = g.generate_replicate(1, 3).unwrap();
        assert_eq!(d.features().matvec(&tm.beta), d.response());
    }
}
