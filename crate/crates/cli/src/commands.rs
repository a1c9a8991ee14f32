use crate::config::{optional_path, required_path, FamilyChoice, GeneratorChoice, RunConfig};
use crate::error::CliError;
use crate::report::{envelope, Outputs};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use synthsel_core::aggregate::{
    run_graph_selection, run_inference, tune_selection, Candidate, Generator, GraphOptions, InferenceResult,
    LambdaMode, SelectionOptions,
};
use synthsel_core::data::{load_csv, Dataset, Schema};
use synthsel_core::diffusion::{load_checkpoint, write_checkpoint, DiffusionError, DiffusionModel, TrainConfig};
use synthsel_core::numerics::{mix_seed, RngStream};
use synthsel_core::selectors::{EbicOptions, Family};
use synthsel_core::simbench::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Generate,
    Select,
    Infer,
    Graph,
    Simulate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Generate => "generate",
            Command::Select => "select",
            Command::Infer => "infer",
            Command::Graph => "graph",
            Command::Simulate => "simulate",
        }
    }
}

pub struct Context {
    pub config: RunConfig,
    /// Directory that relative data paths are resolved against.
    pub base: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
}

/// Runs one command and returns the files it produced.
pub fn run(cmd: Command, ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Outputs::new(&ctx.out)?;
    match cmd {
        Command::Train => train(ctx, &mut out)?,
        Command::Generate => generate(ctx, &mut out)?,
        Command::Select => select(ctx, &mut out)?,
        Command::Infer => infer(ctx, &mut out)?,
        Command::Graph => graph(ctx, &mut out)?,
        Command::Simulate => simulate(ctx, &mut out)?,
    }
    out.commit()
}

fn load_data(ctx: &Context) -> Result<Dataset, CliError> {
    let d = &ctx.config.data;
    let schema = Schema::load(&required_path(&ctx.base, &d.schema, "data.schema")?)?;
    Ok(load_csv(&required_path(&ctx.base, &d.csv, "data.csv")?, &schema)?)
}

/// The training seed mixes the run seed with `diffusion.seed`.
fn train_config(ctx: &Context, base: &TrainConfig) -> TrainConfig {
    TrainConfig {
        seed: mix_seed(ctx.seed, base.seed),
        ..base.clone()
    }
}

#[derive(Serialize)]
struct TrainSummary {
    n_train: usize,
    parameters: usize,
    final_loss: Option<f64>,
    train_log: Vec<f64>,
}

fn train(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let data = load_data(ctx)?;
    let model = DiffusionModel::train(&data, &train_config(ctx, &ctx.config.diffusion))?;
    let mut buf = Vec::new();
    write_checkpoint(&model, &mut buf)?;
    out.write("checkpoint.json", &buf)?;
    let summary = TrainSummary {
        n_train: model.n_train,
        parameters: model.net.param_count(),
        final_loss: model.train_log.last().copied(),
        train_log: model.train_log.clone(),
    };
    out.write("train.json", envelope("train", &ctx.config, ctx.seed, &summary)?.as_bytes())?;
    Ok(())
}

fn generate(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let path = required_path(&ctx.base, &ctx.config.data.checkpoint, "data.checkpoint")?;
    let model = load_checkpoint(&path)?;
    let n = ctx.config.generate.n.unwrap_or(model.n_train);
    // Replicate streams start at 1, so a standalone draw uses stream 0.
    let syn = model.generate(n, &mut RngStream::new(ctx.seed, 0).rng())?;
    let mut buf = Vec::new();
    syn.write_csv(&mut buf)?;
    out.write("synthetic.csv", &buf)?;
    Ok(())
}

fn family(choice: FamilyChoice, d: &Dataset) -> Result<Family, CliError> {
    Ok(match choice {
        FamilyChoice::Linear => Family::Linear,
        FamilyChoice::Logistic => Family::Logistic,
        FamilyChoice::Auto => Family::for_dataset(d).map_err(|e| CliError::Config {
            key: "selection.family".into(),
            message: e.to_string(),
        })?,
    })
}

fn selection_options(ctx: &Context, d: &Dataset) -> Result<SelectionOptions, CliError> {
    let s = &ctx.config.selection;
    Ok(SelectionOptions {
        replicates: s.replicates,
        pi_thres: s.pi_thres.unwrap_or(s.thresholds[0]),
        family: family(s.family, d)?,
        ebic: EbicOptions {
            grid_size: s.grid_size,
            gamma: s.gamma,
            ..EbicOptions::default()
        },
        lambda: LambdaMode::Ebic,
    })
}

fn fmt_dims(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

/// Every (generator, synthetic size) combination the config asks for, with a readable name.
fn candidates(ctx: &Context, data: &Arc<Dataset>) -> Result<Vec<(String, Generator)>, CliError> {
    let cfg = &ctx.config;
    let s = &cfg.selection;
    let mut bases: Vec<(String, Generator)> = Vec::new();
    match s.generator {
        GeneratorChoice::Bootstrap => bases.push(("bootstrap".into(), Generator::bootstrap(data.clone()))),
        GeneratorChoice::Diffusion => {
            let checkpoint = optional_path(&ctx.base, &cfg.data.checkpoint);
            match checkpoint {
                Some(path) if cfg.diffusion_grid.is_empty() => {
                    let model = load_checkpoint(&path)?;
                    if model.schema != *data.schema() {
                        return Err(DiffusionError::SchemaMismatch(format!(
                            "checkpoint {} was trained on a different schema",
                            path.display()
                        ))
                        .into());
                    }
                    bases.push(("diffusion(checkpoint)".into(), Generator::diffusion(Arc::new(model))));
                }
                _ => {
                    let mut configs = vec![cfg.diffusion.clone()];
                    if !cfg.diffusion_grid.is_empty() {
                        configs = cfg.diffusion_grid.iter().map(|g| g.apply(&cfg.diffusion)).collect();
                    }
                    for tc in configs {
                        let name = format!(
                            "diffusion(epochs={},timesteps={},lr={},hidden={})",
                            tc.epochs,
                            tc.timesteps,
                            tc.learning_rate,
                            fmt_dims(&tc.hidden_dims)
                        );
                        log::info!("training {name}");
                        let model = DiffusionModel::train(data, &train_config(ctx, &tc))?;
                        bases.push((name, Generator::diffusion(Arc::new(model))));
                    }
                }
            }
        }
    }
    let sizes: Vec<Option<usize>> = if s.n_syn_grid.is_empty() {
        vec![s.n_syn]
    } else {
        s.n_syn_grid.iter().map(|&n| Some(n)).collect()
    };
    let mut out = Vec::new();
    for (name, g) in bases {
        for size in &sizes {
            let g = match size {
                Some(n) => g.clone().with_n_syn(*n),
                None => g.clone(),
            };
            out.push((format!("{name}[n_syn={}]", g.n_syn), g));
        }
    }
    Ok(out)
}

fn thresholds(ctx: &Context) -> Vec<f64> {
    let s = &ctx.config.selection;
    s.pi_thres.map_or_else(|| s.thresholds.clone(), |t| vec![t])
}

fn select(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let data = Arc::new(load_data(ctx)?);
    let opts = selection_options(ctx, &data)?;
    let cands = candidates(ctx, &data)?;
    let list: Vec<Candidate<'_>> = cands
        .iter()
        .map(|(name, g)| Candidate {
            name: name.clone(),
            source: g,
        })
        .collect();
    let result = tune_selection(&list, &thresholds(ctx), &data, &opts, ctx.seed)?;
    out.write("selection.json", envelope("select", &ctx.config, ctx.seed, &result)?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct InferReport<'a> {
    generator: &'a str,
    #[serde(flatten)]
    inference: InferenceResult,
}

fn infer(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let data = Arc::new(load_data(ctx)?);
    if !data.schema().response().is_continuous() {
        return Err(CliError::Config {
            key: "data.schema".into(),
            message: "inference needs a continuous response".into(),
        });
    }
    let cands = candidates(ctx, &data)?;
    // With several candidates, the one the selection tuning loop prefers is used.
    let chosen = if cands.len() == 1 {
        0
    } else {
        let opts = SelectionOptions {
            family: Family::Linear,
            ..selection_options(ctx, &data)?
        };
        let list: Vec<Candidate<'_>> = cands
            .iter()
            .map(|(name, g)| Candidate {
                name: name.clone(),
                source: g,
            })
            .collect();
        let tuned = tune_selection(&list, &thresholds(ctx), &data, &opts, ctx.seed)?;
        let name = tuned.generator.expect("tuning names its winner");
        cands.iter().position(|(n, _)| *n == name).expect("winner is a candidate")
    };
    let (name, g) = &cands[chosen];
    let inference = run_inference(g, ctx.config.selection.replicates, ctx.config.inference.alpha_level, ctx.seed)?;
    let report = InferReport {
        generator: name,
        inference,
    };
    out.write("inference.json", envelope("infer", &ctx.config, ctx.seed, &report)?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct GraphReport<'a> {
    generator: &'a str,
    nodes: Vec<String>,
    #[serde(flatten)]
    graph: synthsel_core::aggregate::GraphResult,
}

fn graph(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let data = Arc::new(load_data(ctx)?);
    let cands = candidates(ctx, &data)?;
    if cands.len() != 1 {
        return Err(CliError::Config {
            key: "diffusion_grid".into(),
            message: "graph selection takes a single generator; drop diffusion_grid and n_syn_grid".into(),
        });
    }
    let (name, g) = &cands[0];
    let opts = GraphOptions {
        replicates: ctx.config.selection.replicates,
        pi_thres: ctx.config.graph.pi_thres,
        rule: ctx.config.graph.rule,
        ebic: EbicOptions {
            grid_size: ctx.config.selection.grid_size,
            gamma: ctx.config.selection.gamma,
            ..EbicOptions::default()
        },
    };
    let result = run_graph_selection(g, &opts, ctx.seed)?;
    let report = GraphReport {
        generator: name,
        nodes: data.schema().names(),
        graph: result,
    };
    out.write("graph.json", envelope("graph", &ctx.config, ctx.seed, &report)?.as_bytes())?;
    Ok(())
}

fn simulate(ctx: &Context, out: &mut Outputs) -> Result<(), CliError> {
    let report = run_experiment(&ctx.config.simulate, ctx.seed)?;
    out.write("report.json", envelope("simulate", &ctx.config, ctx.seed, &report)?.as_bytes())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(|source| CliError::Io {
        path: Path::new("report.csv").to_path_buf(),
        source,
    })?;
    out.write("report.csv", &buf)?;
    Ok(())
}
