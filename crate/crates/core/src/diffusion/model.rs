use super::mlp::{Adam, DenoiserMlp};
use super::schedule::{time_embedding, NoiseSchedule, ScheduleKind};
use super::DiffusionError;
use crate::data::{destandardize, standardize, ColumnKind, Dataset, Schema, StandardizationStats};
use crate::numerics::{Matrix, RngStream, StreamRng};
use serde::{Deserialize, Serialize};

/// How categorical columns are diffused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoricalMode {
    /// Multinomial forward process with an `x̂₀`-parameterized reverse posterior.
    #[default]
    Multinomial,
    /// Gaussian diffusion of one-hot vectors, decoded by argmax.
    GaussianOnehot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub timesteps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub schedule: ScheduleKind,
    pub categorical_mode: CategoricalMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            timesteps: 100,
            epochs: 500,
            batch_size: 128,
            learning_rate: 1e-3,
            hidden_dims: vec![128, 128],
            embedding_dim: 32,
            schedule: ScheduleKind::Linear,
            categorical_mode: CategoricalMode::Multinomial,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DiffusionError> {
        let bad = |m: String| Err(DiffusionError::InvalidConfig(m));
        if self.epochs == 0 {
            return Err(DiffusionError::NoTraining);
        }
        if self.timesteps < 2 {
            return bad(format!("timesteps must be >= 2, got {}", self.timesteps));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return bad(format!("learning_rate {} outside (0, 1)", self.learning_rate));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return bad("hidden_dims must be nonempty and positive".into());
        }
        if self.embedding_dim < 2 || self.embedding_dim % 2 != 0 {
            return bad(format!("embedding_dim {} must be even and >= 2", self.embedding_dim));
        }
        Ok(())
    }
}

/// Placement of schema columns in the network's data block: Gaussian
/// coordinates first, then one block of logits per multinomial column.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub continuous: Vec<usize>,
    /// `(schema column, cardinality)`.
    pub categorical: Vec<(usize, usize)>,
    pub mode: CategoricalMode,
}

impl Layout {
    pub fn new(schema: &Schema, mode: CategoricalMode) -> Self {
        let mut continuous = Vec::new();
        let mut categorical = Vec::new();
        for (j, c) in schema.columns.iter().enumerate() {
            match c.kind {
                ColumnKind::Continuous => continuous.push(j),
                ColumnKind::Categorical { cardinality } => categorical.push((j, cardinality)),
            }
        }
        Self {
            continuous,
            categorical,
            mode,
        }
    }

    fn onehot_width(&self) -> usize {
        self.categorical.iter().map(|c| c.1).sum()
    }

    pub fn n_gauss(&self) -> usize {
        match self.mode {
            CategoricalMode::Multinomial => self.continuous.len(),
            CategoricalMode::GaussianOnehot => self.continuous.len() + self.onehot_width(),
        }
    }

    /// Multinomial columns, empty in Gaussian one-hot mode.
    pub fn multinomial(&self) -> &[(usize, usize)] {
        match self.mode {
            CategoricalMode::Multinomial => &self.categorical,
            CategoricalMode::GaussianOnehot => &[],
        }
    }

    pub fn data_dim(&self) -> usize {
        self.continuous.len() + self.onehot_width()
    }
}

/// One minibatch with its network inputs and denoising targets.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub rows: usize,
    /// `rows × input_dim`, row-major.
    pub input: Vec<f64>,
    /// `rows × n_gauss` noise targets.
    pub eps: Vec<f64>,
    /// `rows × cat_sizes.len()` clean category codes.
    pub targets: Vec<usize>,
    pub cat_sizes: Vec<usize>,
}

/// Mean over the batch of (mean squared ε error + mean cross-entropy over
/// categorical columns), and its gradient with respect to the network outputs.
pub fn batch_loss(out: &[f64], batch: &TrainBatch) -> (f64, Vec<f64>) {
    let rows = batch.rows;
    let n_gauss = if rows == 0 { 0 } else { batch.eps.len() / rows };
    let n_cat = batch.cat_sizes.len();
    let width = n_gauss + batch.cat_sizes.iter().sum::<usize>();
    let mut grad = vec![0.0; rows * width];
    let mut total = 0.0;
    let scale = 1.0 / rows as f64;
    for i in 0..rows {
        let o = &out[i * width..(i + 1) * width];
        let g = &mut grad[i * width..(i + 1) * width];
        if n_gauss > 0 {
            let e = &batch.eps[i * n_gauss..(i + 1) * n_gauss];
            let w = 1.0 / n_gauss as f64;
            for k in 0..n_gauss {
                let r = o[k] - e[k];
                total += w * r * r;
                g[k] = 2.0 * w * r * scale;
            }
        }
        let mut off = n_gauss;
        for (c, &k) in batch.cat_sizes.iter().enumerate() {
            let logits = &o[off..off + k];
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            let target = batch.targets[i * n_cat + c];
            let w = 1.0 / n_cat as f64;
            total += w * (m + z.ln() - logits[target]);
            for (q, l) in logits.iter().enumerate() {
                let p = (l - m).exp() / z;
                g[off + q] = w * scale * (p - if q == target { 1.0 } else { 0.0 });
            }
            off += k;
        }
    }
    (total * scale, grad)
}

/// Loss and flattened parameter gradient for one batch.
pub fn loss_and_grad(net: &DenoiserMlp, batch: &TrainBatch) -> (f64, Vec<f64>) {
    let (out, cache) = net.forward_cached(&batch.input, batch.rows);
    let (loss, d_out) = batch_loss(&out, batch);
    (loss, net.backward(&cache, d_out))
}

pub fn loss_only(net: &DenoiserMlp, batch: &TrainBatch) -> f64 {
    batch_loss(&net.forward(&batch.input, batch.rows), batch).0
}

/// Standardized training rows split into the Gaussian block and category codes.
struct Encoded {
    n: usize,
    gauss: Vec<f64>,
    codes: Vec<usize>,
}

fn encode(d: &Dataset, layout: &Layout) -> Encoded {
    let n = d.n();
    let ng = layout.n_gauss();
    let nm = layout.multinomial().len();
    let v = d.values();
    let mut gauss = vec![0.0; n * ng];
    let mut codes = vec![0; n * nm];
    for i in 0..n {
        let g = &mut gauss[i * ng..(i + 1) * ng];
        for (k, &j) in layout.continuous.iter().enumerate() {
            g[k] = v[(i, j)];
        }
        match layout.mode {
            CategoricalMode::GaussianOnehot => {
                let mut off = layout.continuous.len();
                for &(j, k) in &layout.categorical {
                    g[off + v[(i, j)] as usize] = 1.0;
                    off += k;
                }
            }
            CategoricalMode::Multinomial => {
                for (c, &(j, _)) in layout.categorical.iter().enumerate() {
                    codes[i * nm + c] = v[(i, j)] as usize;
                }
            }
        }
    }
    Encoded { n, gauss, codes }
}

fn sample_categorical(probs: &[f64], rng: &mut StreamRng) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.uniform() * total;
    for (q, &p) in probs.iter().enumerate() {
        if u < p {
            return q;
        }
        u -= p;
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionModel {
    pub config: TrainConfig,
    pub schema: Schema,
    pub stats: StandardizationStats,
    pub schedule: NoiseSchedule,
    pub net: DenoiserMlp,
    /// Mean loss of each epoch of the most recent training run.
    pub train_log: Vec<f64>,
    /// Rows in the most recent training set; the default synthetic sample size.
    pub n_train: usize,
}

const TRAIN_STREAM: u64 = 0x7472_6169_6e;

impl DiffusionModel {
    /// Fits a fresh model to `d`, jointly over features and response.
    pub fn train(d: &Dataset, cfg: &TrainConfig) -> Result<Self, DiffusionError> {
        cfg.validate()?;
        let schedule = NoiseSchedule::new(cfg.schedule, cfg.timesteps)?;
        let layout = Layout::new(d.schema(), cfg.categorical_mode);
        let mut dims = vec![layout.data_dim() + cfg.embedding_dim];
        dims.extend(&cfg.hidden_dims);
        dims.push(layout.data_dim());
        let mut rng = RngStream::new(cfg.seed, TRAIN_STREAM).rng();
        let net = DenoiserMlp::new(dims, &mut rng);
        let (std_data, stats) = standardize(d)?;
        let mut model = Self {
            config: cfg.clone(),
            schema: d.schema().clone(),
            stats,
            schedule,
            net,
            train_log: Vec::new(),
            n_train: d.n(),
        };
        model.train_log = model.fit(&std_data, cfg, &mut rng)?;
        Ok(model)
    }

    /// Continues training from this model's weights on `d`. Architecture,
    /// schedule and categorical mode are kept; `cfg` supplies the optimizer
    /// settings, epochs and seed. Standardization is recomputed from `d`.
    pub fn fine_tune(&self, d: &Dataset, cfg: &TrainConfig) -> Result<Self, DiffusionError> {
        cfg.validate()?;
        if d.schema() != &self.schema {
            return Err(DiffusionError::SchemaMismatch(format!(
                "model columns {:?}, data columns {:?}",
                self.schema.names(),
                d.schema().names()
            )));
        }
        let (std_data, stats) = standardize(d)?;
        let mut model = self.clone();
        model.stats = stats;
        model.n_train = d.n();
        model.config.epochs = cfg.epochs;
        model.config.batch_size = cfg.batch_size;
        model.config.learning_rate = cfg.learning_rate;
        model.config.seed = cfg.seed;
        let mut rng = RngStream::new(cfg.seed, TRAIN_STREAM).rng();
        model.train_log = model.fit(&std_data, cfg, &mut rng)?;
        Ok(model)
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(&self.schema, self.config.categorical_mode)
    }

    fn fit(&mut self, d: &Dataset, cfg: &TrainConfig, rng: &mut StreamRng) -> Result<Vec<f64>, DiffusionError> {
        let layout = self.layout();
        let data = encode(d, &layout);
        if data.n == 0 {
            return Err(DiffusionError::EmptyData);
        }
        let mut opt = Adam::new(self.net.param_count(), cfg.learning_rate);
        let mut order: Vec<usize> = (0..data.n).collect();
        let mut log = Vec::with_capacity(cfg.epochs);
        let mut over_streak = 0;
        for epoch in 0..cfg.epochs {
            // Linear annealing to zero over the run.
            opt.set_learning_rate(cfg.learning_rate * (1.0 - epoch as f64 / cfg.epochs as f64));
            rng.shuffle(&mut order);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let batch = self.make_batch(&layout, &data, chunk, rng);
                let (loss, grad) = loss_and_grad(&self.net, &batch);
                if !loss.is_finite() {
                    return Err(DiffusionError::Diverged { epoch, loss });
                }
                opt.update(&mut self.net, &grad);
                epoch_loss += loss * chunk.len() as f64;
            }
            let mean = epoch_loss / data.n as f64;
            if !mean.is_finite() {
                return Err(DiffusionError::Diverged { epoch, loss: mean });
            }
            if let Some(&first) = log.first() {
                if mean > 10.0 * first {
                    over_streak += 1;
                    if over_streak >= 20 {
                        return Err(DiffusionError::Diverged { epoch, loss: mean });
                    }
                } else {
                    over_streak = 0;
                }
            }
            log.push(mean);
            if epoch % 50 == 0 {
                log::debug!("epoch {epoch}: loss {mean:.6}");
            }
        }
        Ok(log)
    }

    fn make_batch(&self, layout: &Layout, data: &Encoded, rows: &[usize], rng: &mut StreamRng) -> TrainBatch {
        let ng = layout.n_gauss();
        let cats = layout.multinomial();
        let nm = cats.len();
        let emb = self.config.embedding_dim;
        let in_dim = self.net.input_dim();
        let b = rows.len();
        let mut input = vec![0.0; b * in_dim];
        let mut eps = vec![0.0; b * ng];
        let mut targets = vec![0; b * nm];
        let mut probs = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let t = 1 + rng.index(self.schedule.steps());
            let ab = self.schedule.alpha_bar_at(t);
            let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
            let x = &mut input[r * in_dim..(r + 1) * in_dim];
            for k in 0..ng {
                let e = rng.normal();
                eps[r * ng + k] = e;
                x[k] = sa * data.gauss[i * ng + k] + sn * e;
            }
            let mut off = ng;
            for (c, &(_, k)) in cats.iter().enumerate() {
                let code = data.codes[i * nm + c];
                targets[r * nm + c] = code;
                probs.clear();
                probs.extend((0..k).map(|q| ab * if q == code { 1.0 } else { 0.0 } + (1.0 - ab) / k as f64));
                x[off + sample_categorical(&probs, rng)] = 1.0;
                off += k;
            }
            time_embedding(t, emb, &mut x[in_dim - emb..]);
        }
        TrainBatch {
            rows: b,
            input,
            eps,
            targets,
            cat_sizes: cats.iter().map(|c| c.1).collect(),
        }
    }

    /// Ancestral sampling of `n_syn` rows, returned on the original scale.
    pub fn generate(&self, n_syn: usize, rng: &mut StreamRng) -> Result<Dataset, DiffusionError> {
        if n_syn == 0 {
            return Err(DiffusionError::InvalidConfig("n_syn must be >= 1".into()));
        }
        let layout = self.layout();
        let ng = layout.n_gauss();
        let cats = layout.multinomial();
        let emb = self.config.embedding_dim;
        let in_dim = self.net.input_dim();
        let out_dim = self.net.output_dim();
        let n = n_syn;
        let mut x: Vec<f64> = (0..n * ng).map(|_| rng.normal()).collect();
        let mut codes: Vec<usize> = (0..n * cats.len())
            .map(|c| rng.index(cats[c % cats.len()].1))
            .collect();
        let mut input = vec![0.0; n * in_dim];
        let mut embedding = vec![0.0; emb];
        let mut post = Vec::new();
        for t in (1..=self.schedule.steps()).rev() {
            time_embedding(t, emb, &mut embedding);
            input.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let row = &mut input[i * in_dim..(i + 1) * in_dim];
                row[..ng].copy_from_slice(&x[i * ng..(i + 1) * ng]);
                let mut off = ng;
                for (c, &(_, k)) in cats.iter().enumerate() {
                    row[off + codes[i * cats.len() + c]] = 1.0;
                    off += k;
                }
                row[in_dim - emb..].copy_from_slice(&embedding);
            }
            let out = self.net.forward(&input, n);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(DiffusionError::NonFiniteSample { step: t });
            }
            let beta = self.schedule.beta_at(t);
            let alpha = 1.0 - beta;
            let ab = self.schedule.alpha_bar_at(t);
            let ab_prev = self.schedule.alpha_bar_at(t - 1);
            let eps_coef = beta / (1.0 - ab).sqrt();
            let sd = if t > 1 {
                (beta * (1.0 - ab_prev) / (1.0 - ab)).sqrt()
            } else {
                0.0
            };
            for i in 0..n {
                let o = &out[i * out_dim..(i + 1) * out_dim];
                for k in 0..ng {
                    let xi = &mut x[i * ng + k];
                    let mean = (*xi - eps_coef * o[k]) / alpha.sqrt();
                    *xi = if t > 1 { mean + sd * rng.normal() } else { mean };
                }
                let mut off = ng;
                for (c, &(_, k)) in cats.iter().enumerate() {
                    let logits = &o[off..off + k];
                    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    post.clear();
                    post.extend(logits.iter().map(|l| (l - m).exp()));
                    let z: f64 = post.iter().sum();
                    post.iter_mut().for_each(|p| *p /= z);
                    if t > 1 {
                        // q(x_{t-1} | x_t, x̂₀) ∝ q(x_t | x_{t-1}) · q(x_{t-1} | x̂₀).
                        let cur = codes[i * cats.len() + c];
                        let kf = k as f64;
                        for (q, p) in post.iter_mut().enumerate() {
                            let fwd = alpha * if q == cur { 1.0 } else { 0.0 } + beta / kf;
                            *p = fwd * (ab_prev * *p + (1.0 - ab_prev) / kf);
                        }
                    }
                    codes[i * cats.len() + c] = sample_categorical(&post, rng);
                    off += k;
                }
            }
        }
        let width = self.schema.width();
        let mut values = Matrix::zeros(n, width);
        for i in 0..n {
            let g = &x[i * ng..(i + 1) * ng];
            for (k, &j) in layout.continuous.iter().enumerate() {
                values[(i, j)] = g[k];
            }
            match layout.mode {
                CategoricalMode::Multinomial => {
                    for (c, &(j, _)) in cats.iter().enumerate() {
                        values[(i, j)] = codes[i * cats.len() + c] as f64;
                    }
                }
                CategoricalMode::GaussianOnehot => {
                    let mut off = layout.continuous.len();
                    for &(j, k) in &layout.categorical {
                        let block = &g[off..off + k];
                        let arg = (0..k).fold(0, |best, q| if block[q] > block[best] { q } else { best });
                        values[(i, j)] = arg as f64;
                        off += k;
                    }
                }
            }
        }
        let standardized = Dataset::new(self.schema.clone(), values)?;
        Ok(destandardize(&standardized, &self.stats)?)
    }
}
