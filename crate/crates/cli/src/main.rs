//! `neuroplan` command-line entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use neuroplan::bench::{render_path_svg, run_benchmark, Algo, BenchSpec};
use neuroplan::cae::{train_cae, CaeSpec, DEFAULT_LAMBDA};
use neuroplan::datagen::{build_dataset, manifest_hash, workspace_cloud, Dataset, DatasetCounts, DatasetManifest, Scenario};
use neuroplan::deepsmp::{compute_n_limit, NeuralSampler};
use neuroplan::geometry::{Config, PointCloud, RobotModel, Workspace};
use neuroplan::neural::{EarlyStop, Mlp, TrainConfig};
use neuroplan::sampler::{make_training_pairs, train_sampler, SamplerSpec, DEFAULT_DROPOUT, DEFAULT_HIDDEN, DEFAULT_LATENT_NOISE};
use neuroplan::smp::{PlanResult, PlannerParams};
use neuroplan::{bench, cae, Error};

const EXIT_NO_PATH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "neuroplan", version, about = "Neural sampling-based motion planning")]
struct Cli {
    /// JSON file with one object per subcommand, e.g. {"plan": {"n": 5000}}.
    /// Flags override it; it overrides built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate workspaces, point clouds, expert paths and query pairs.
    GenData(GenDataArgs),
    /// Train the point-cloud autoencoder and save its encoder.
    TrainCae(TrainCaeArgs),
    /// Train the neural sampler on a dataset's expert paths.
    TrainSampler(TrainSamplerArgs),
    /// Solve one planning query.
    Plan(PlanArgs),
    /// Run a benchmark described by a JSON spec.
    Bench(BenchArgs),
    /// Draw a workspace and optionally a planned path as SVG.
    Render(RenderArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct GenDataArgs {
    /// s2D, c2D, c3D or rigid [default: s2D]
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Count preset: desk or full [default: desk]
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    train_workspaces: Option<usize>,
    #[arg(long)]
    unseen_workspaces: Option<usize>,
    /// Extra workspaces that only contribute point clouds.
    #[arg(long)]
    cloud_workspaces: Option<usize>,
    /// Expert paths per training workspace.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seen_pairs: Option<usize>,
    #[arg(long)]
    unseen_pairs: Option<usize>,
    /// Expert planner iteration budget [default: 30000]
    #[arg(long)]
    budget: Option<usize>,
    /// Waypoint spacing after pruning; off when absent.
    #[arg(long)]
    resample: Option<f64>,
    /// Shortcut expert paths [default: true]
    #[arg(long)]
    prune: Option<bool>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct TrainCaeArgs {
    /// Workspace dimension, 2 or 3.
    #[arg(long)]
    dim: Option<usize>,
    /// Directory of .f32bin clouds, or a dataset root.
    #[arg(long)]
    clouds: Option<PathBuf>,
    /// Encoder weight penalty [default: 1e-3]
    #[arg(long)]
    lambda: Option<f64>,
    /// Adagrad learning rate [default: 0.1]
    #[arg(long)]
    lr: Option<f64>,
    /// [default: 500]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 128]
    #[arg(long)]
    batch: Option<usize>,
    /// Stop when the loss improves less than 0.1% over 20 epochs [default: true]
    #[arg(long)]
    early_stop: Option<bool>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Encoder model file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Decoder model file; not written when absent.
    #[arg(long)]
    decoder_out: Option<PathBuf>,
    /// Loss curve CSV [default: <out>.loss.csv]
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct TrainSamplerArgs {
    /// point2, point3 or rigid2 [default: the dataset's robot]
    #[arg(long)]
    robot: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Encoder model; without it the sampler sees no workspace encoding.
    #[arg(long)]
    cae: Option<PathBuf>,
    /// Sampler model file. A <out>.meta.json sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Adagrad learning rate [default: 0.1]
    #[arg(long)]
    lr: Option<f64>,
    /// [default: 200]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    batch: Option<usize>,
    /// [default: true]
    #[arg(long)]
    early_stop: Option<bool>,
    /// Eleven comma-separated hidden widths [default: 1280,1024,896,768,512,384,256,128,64,64,32]
    #[arg(long)]
    hidden: Option<String>,
    /// [default: 0.5]
    #[arg(long)]
    dropout: Option<f64>,
    /// Predict a step from the current configuration [default: true]
    #[arg(long)]
    residual: Option<bool>,
    /// Uniform noise half-width on the standardised encoding while training [default: 1.0]
    #[arg(long)]
    latent_noise: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Loss curve CSV [default: <out>.loss.csv]
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct PlanArgs {
    /// rrtstar, informed, deepsmp or deepsmp-bi [default: rrtstar]
    #[arg(long)]
    algo: Option<String>,
    /// Workspace JSON file.
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// point2, point3 or rigid2 [default: point robot of the workspace dimension]
    #[arg(long)]
    robot: Option<String>,
    /// Comma-separated start configuration.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Comma-separated goal configuration.
    #[arg(long, allow_hyphen_values = true)]
    goal: Option<String>,
    /// Encoder model.
    #[arg(long)]
    cae: Option<PathBuf>,
    /// Sampler model.
    #[arg(long)]
    sampler: Option<PathBuf>,
    /// Point cloud to encode [default: regenerated from the workspace]
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Iteration budget [default: 10000]
    #[arg(long)]
    n: Option<usize>,
    /// Neural iterations, or AUTO to read it from the sampler's sidecar [default: AUTO]
    #[arg(long)]
    n_limit: Option<String>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Steering step [default: 0.5, 0.9 for rigid2]
    #[arg(long)]
    step: Option<f64>,
    /// Stop at the first solution [default: false]
    #[arg(long)]
    first: Option<bool>,
    /// Result JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG render of the result.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct BenchArgs {
    /// Benchmark spec JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Summary CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Markdown report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Raw trial records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Overrides the spec's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RenderArgs {
    /// Workspace JSON file.
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// Plan result JSON whose path is drawn.
    #[arg(long)]
    result: Option<PathBuf>,
    /// point2, point3 or rigid2 [default: point robot of the workspace dimension]
    #[arg(long)]
    robot: Option<String>,
    /// SVG file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Outcome<T> {
    v.clone().ok_or_else(|| usage(format!("--{flag} is required")))
}

/// Overlays the non-null fields of `top` onto `base`.
fn overlay(base: &mut Value, top: Value) {
    if let (Value::Object(b), Value::Object(t)) = (base, top) {
        for (k, v) in t {
            if !v.is_null() {
                b.insert(k, v);
            }
        }
    }
}

/// Resolves `defaults < config section < flags`.
fn resolve<T: Serialize + DeserializeOwned>(flags: &T, defaults: &T, config: Option<&Value>, section: &str) -> Outcome<T> {
    let json = |e: serde_json::Error| usage(format!("config: {e}"));
    let mut merged = serde_json::to_value(defaults).map_err(json)?;
    if let Some(section) = config.and_then(|c| c.get(section)) {
        let typed: T = serde_json::from_value(section.clone()).map_err(|e| usage(format!("config [{section}]: {e}")))?;
        overlay(&mut merged, serde_json::to_value(typed).map_err(json)?);
    }
    overlay(&mut merged, serde_json::to_value(flags).map_err(json)?);
    let resolved = serde_json::from_value(merged).map_err(json)?;
    info!("{section}: resolved config {}", serde_json::to_string(&resolved).map_err(json)?);
    Ok(resolved)
}

const SECTIONS: [&str; 6] = ["gen-data", "train-cae", "train-sampler", "plan", "bench", "render"];

fn load_config(path: &Path) -> Outcome<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let obj = v
        .as_object()
        .ok_or_else(|| usage(format!("{}: config must be a JSON object", path.display())))?;
    if let Some(k) = obj.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(usage(format!("{}: unknown config section {k:?}", path.display())));
    }
    Ok(v)
}

fn parse_config(text: &str, flag: &str) -> Outcome<Config> {
    let values: std::result::Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    values
        .map(Config)
        .map_err(|e| usage(format!("--{flag} {text:?}: {e}")))
}

fn robot_for(name: Option<&str>, ws: &Workspace) -> Outcome<RobotModel> {
    match name {
        Some(n) => Ok(RobotModel::parse(n)?),
        None if ws.dim == 3 => Ok(RobotModel::Point3),
        None => Ok(RobotModel::Point2),
    }
}

fn write_text(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn sidecar(model: &Path, suffix: &str) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn loss_csv(curve: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in curve.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

/// Written next to a sampler model as `<model>.meta.json`.
#[derive(Debug, Serialize, Deserialize)]
struct SamplerMeta {
    robot: RobotModel,
    spec: SamplerSpec,
    /// Longest training path, used by `--n-limit AUTO`.
    n_limit: usize,
    dataset_manifest: String,
}

fn gen_data(a: GenDataArgs, cfg: Option<&Value>) -> Outcome {
    let defaults = GenDataArgs {
        scenario: Some("s2D".into()),
        seed: Some(0),
        scale: Some("desk".into()),
        prune: Some(true),
        ..Default::default()
    };
    let a = resolve(&a, &defaults, cfg, "gen-data")?;
    let out = required(&a.out, "out")?;
    let scenario = Scenario::parse(a.scenario.as_deref().unwrap_or_default())?;
    let mut counts = match a.scale.as_deref() {
        Some("desk") => DatasetCounts::desk(),
        Some("full") => DatasetCounts::full(),
        other => return Err(usage(format!("--scale must be desk or full, got {other:?}"))),
    };
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut counts.train_workspaces, a.train_workspaces);
    set(&mut counts.unseen_workspaces, a.unseen_workspaces);
    set(&mut counts.cloud_only_workspaces, a.cloud_workspaces);
    set(&mut counts.paths_per_workspace, a.paths);
    set(&mut counts.seen_pairs_per_workspace, a.seen_pairs);
    set(&mut counts.unseen_pairs_per_workspace, a.unseen_pairs);
    let mut m = DatasetManifest::new(scenario, a.seed.unwrap_or_default(), counts);
    set(&mut m.expert.budget, a.budget);
    m.expert.resample = a.resample;
    m.expert.prune = a.prune.unwrap_or(true);
    build_dataset(&m, &out)?;
    println!("dataset {} manifest {}", out.display(), manifest_hash(&out)?);
    Ok(())
}

fn read_clouds(dir: &Path) -> Outcome<Vec<PointCloud>> {
    let dir = if dir.join("clouds").is_dir() { dir.join("clouds") } else { dir.to_path_buf() };
    let entries = fs::read_dir(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "f32bin"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Io(format!("{}: no .f32bin clouds", dir.display())));
    }
    Ok(files.iter().map(|f| PointCloud::load(f)).collect::<neuroplan::Result<_>>()?)
}

fn train_cae_cmd(a: TrainCaeArgs, cfg: Option<&Value>) -> Outcome {
    let defaults = TrainCaeArgs {
        lambda: Some(DEFAULT_LAMBDA),
        lr: Some(0.1),
        epochs: Some(500),
        batch: Some(128),
        early_stop: Some(true),
        seed: Some(0),
        ..Default::default()
    };
    let a = resolve(&a, &defaults, cfg, "train-cae")?;
    let dim = required(&a.dim, "dim")?;
    let out = required(&a.out, "out")?;
    let clouds = read_clouds(&required(&a.clouds, "clouds")?)?;
    let spec = CaeSpec::for_dim(dim)?.with_lambda(a.lambda.unwrap_or(DEFAULT_LAMBDA))?;
    let tc = TrainConfig {
        epochs: a.epochs.unwrap_or_default(),
        batch_size: a.batch.unwrap_or_default(),
        learning_rate: a.lr.unwrap_or_default(),
        seed: a.seed.unwrap_or_default(),
        early_stop: a.early_stop.unwrap_or(true).then(EarlyStop::default),
    };
    let r = train_cae(&spec, &clouds, &tc)?;
    r.encoder.save(&out)?;
    if let Some(d) = &a.decoder_out {
        r.decoder.save(d)?;
    }
    write_text(&a.loss_csv.clone().unwrap_or_else(|| sidecar(&out, ".loss.csv")), &loss_csv(&r.loss_curve))?;
    let refs: Vec<&PointCloud> = clouds.iter().collect();
    println!(
        "encoder {} latent {} epochs {} final loss {:.6} reconstruction mse {:.6}",
        out.display(),
        spec.latent_size,
        r.loss_curve.len(),
        r.loss_curve.last().copied().unwrap_or(f64::NAN),
        cae::reconstruction_mse(&r.encoder, &r.decoder, &refs)?
    );
    Ok(())
}

fn train_sampler_cmd(a: TrainSamplerArgs, cfg: Option<&Value>) -> Outcome {
    let defaults = TrainSamplerArgs {
        lr: Some(0.1),
        epochs: Some(200),
        batch: Some(256),
        early_stop: Some(true),
        hidden: Some(DEFAULT_HIDDEN.map(|w| w.to_string()).join(",")),
        dropout: Some(DEFAULT_DROPOUT),
        residual: Some(true),
        latent_noise: Some(DEFAULT_LATENT_NOISE),
        seed: Some(0),
        ..Default::default()
    };
    let a = resolve(&a, &defaults, cfg, "train-sampler")?;
    let root = required(&a.dataset, "dataset")?;
    let out = required(&a.out, "out")?;
    let ds = Dataset::load(&root)?;
    let robot = match a.robot.as_deref() {
        Some(r) => RobotModel::parse(r)?,
        None => ds.manifest.robot,
    };
    if robot != ds.manifest.robot {
        return Err(usage(format!(
            "--robot {} does not match the dataset robot {}",
            robot.name(),
            ds.manifest.robot.name()
        )));
    }
    let encoder = a.cae.as_deref().map(Mlp::load).transpose()?;
    let mut latents = std::collections::HashMap::new();
    for &seed in &ds.manifest.train_seeds {
        let z = match &encoder {
            Some(e) => cae::encode(e, &ds.cloud(seed)?)?,
            None => Vec::new(),
        };
        latents.insert(seed, z);
    }
    let hidden: Vec<usize> = a
        .hidden
        .as_deref()
        .unwrap_or_default()
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("--hidden: {e}")))?;
    let latent_size = latents.values().next().map_or(0, Vec::len);
    let mut spec = SamplerSpec::new(robot.config_dim(), latent_size)
        .with_hidden(hidden)?
        .with_residual(a.residual.unwrap_or(true))
        .with_latent_noise(a.latent_noise.unwrap_or(DEFAULT_LATENT_NOISE))?;
    spec.dropout = a.dropout.unwrap_or(DEFAULT_DROPOUT);
    let paths = ds.training_paths();
    let pairs = make_training_pairs(&paths, &latents, neuroplan::geometry::REGION_HALF_EXTENT)?;
    let tc = TrainConfig {
        epochs: a.epochs.unwrap_or_default(),
        batch_size: a.batch.unwrap_or_default(),
        learning_rate: a.lr.unwrap_or_default(),
        seed: a.seed.unwrap_or_default(),
        early_stop: a.early_stop.unwrap_or(true).then(EarlyStop::default),
    };
    let r = train_sampler(&spec, &pairs, &tc)?;
    r.model.save(&out)?;
    let meta = SamplerMeta {
        robot,
        spec,
        n_limit: compute_n_limit(&paths)?,
        dataset_manifest: manifest_hash(&root)?,
    };
    let meta_text = serde_json::to_string_pretty(&meta).map_err(Error::from)?;
    write_text(&sidecar(&out, ".meta.json"), &meta_text)?;
    write_text(&a.loss_csv.clone().unwrap_or_else(|| sidecar(&out, ".loss.csv")), &loss_csv(&r.loss_curve))?;
    println!(
        "sampler {} pairs {} epochs {} final loss {:.6} n_limit {}",
        out.display(),
        pairs.len(),
        r.loss_curve.len(),
        r.loss_curve.last().copied().unwrap_or(f64::NAN),
        meta.n_limit
    );
    Ok(())
}

fn read_meta(model: &Path) -> Outcome<SamplerMeta> {
    let path = sidecar(model, ".meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn plan_cmd(a: PlanArgs, cfg: Option<&Value>) -> Outcome<bool> {
    let defaults = PlanArgs {
        algo: Some("rrtstar".into()),
        n: Some(10_000),
        n_limit: Some("AUTO".into()),
        seed: Some(0),
        first: Some(false),
        ..Default::default()
    };
    let a = resolve(&a, &defaults, cfg, "plan")?;
    let algo = Algo::parse(a.algo.as_deref().unwrap_or_default())?;
    let ws = Workspace::load(&required(&a.workspace, "workspace")?)?;
    let robot = robot_for(a.robot.as_deref(), &ws)?;
    let start = parse_config(&required(&a.start, "start")?, "start")?;
    let goal = parse_config(&required(&a.goal, "goal")?, "goal")?;
    let mut params = PlannerParams::for_robot(&robot);
    params.max_iterations = a.n.unwrap_or_default();
    params.seed = a.seed.unwrap_or_default();
    params.stop_on_first = a.first.unwrap_or(false);
    if let Some(s) = a.step {
        params.step_size = s;
    }
    let problem = neuroplan::smp::Problem {
        workspace: &ws,
        robot,
        start: &start,
        goal: &goal,
    };
    let (neural, n_limit) = if algo.is_neural() {
        let model_path = a
            .sampler
            .clone()
            .ok_or_else(|| usage(format!("--sampler is required for {}", algo.name())))?;
        let model = Mlp::load(&model_path)?;
        let encoder = a.cae.as_deref().map(Mlp::load).transpose()?;
        let cloud = match (&encoder, &a.cloud) {
            (None, _) => None,
            (Some(_), Some(p)) => Some(PointCloud::load(p)?),
            (Some(_), None) => Some(workspace_cloud(&ws)?),
        };
        let n_limit = match a.n_limit.as_deref().unwrap_or("AUTO") {
            "AUTO" | "auto" => read_meta(&model_path)?.n_limit,
            k => k.parse().map_err(|e| usage(format!("--n-limit {k:?}: {e}")))?,
        };
        (Some(NeuralSampler::new(&model, encoder.as_ref(), cloud.as_ref())?), n_limit)
    } else {
        (None, 0)
    };
    info!("plan: algo={} robot={} n_limit={n_limit}", algo.name(), robot.name());
    let result = bench::run_algo(algo, &problem, &params, neural.as_ref(), n_limit)?;
    if let Some(out) = &a.out {
        result.save(out)?;
    }
    if let Some(svg) = &a.svg {
        render_path_svg(&ws, &robot, &result.path, Some(&start), Some(&goal), svg)?;
    }
    match result.cost {
        Some(c) => println!(
            "found cost {c:.6} waypoints {} iterations {} nodes {}",
            result.path.len(),
            result.iterations,
            result.nodes
        ),
        None => println!("no path after {} iterations", result.iterations),
    }
    Ok(result.found)
}

fn bench_cmd(a: BenchArgs, cfg: Option<&Value>) -> Outcome {
    let a = resolve(&a, &BenchArgs::default(), cfg, "bench")?;
    let mut spec = BenchSpec::load(&required(&a.spec, "spec")?)?;
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let (table, records) = run_benchmark(&spec)?;
    let csv = table.to_csv();
    match &a.out {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &a.report {
        write_text(p, &table.to_report())?;
    }
    if let Some(p) = &a.records {
        let mut lines = String::new();
        for r in &records {
            lines.push_str(&serde_json::to_string(r).map_err(Error::from)?);
            lines.push('\n');
        }
        write_text(p, &lines)?;
    }
    Ok(())
}

fn render_cmd(a: RenderArgs, cfg: Option<&Value>) -> Outcome {
    let a = resolve(&a, &RenderArgs::default(), cfg, "render")?;
    let ws = Workspace::load(&required(&a.workspace, "workspace")?)?;
    let robot = robot_for(a.robot.as_deref(), &ws)?;
    let out = required(&a.out, "out")?;
    let (path, start, goal) = match &a.result {
        Some(p) => {
            let r = PlanResult::load(p)?;
            if !r.found {
                warn!("{}: result has no path; drawing the workspace only", p.display());
            }
            let (s, g) = (r.path.first().cloned(), r.path.last().cloned());
            (r.path, s, g)
        }
        None => (Vec::new(), None, None),
    };
    render_path_svg(&ws, &robot, &path, start.as_ref(), goal.as_ref(), &out)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome<bool> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let cfg = config.as_ref();
    match cli.command {
        Command::GenData(a) => gen_data(a, cfg).map(|_| true),
        Command::TrainCae(a) => train_cae_cmd(a, cfg).map(|_| true),
        Command::TrainSampler(a) => train_sampler_cmd(a, cfg).map(|_| true),
        Command::Plan(a) => plan_cmd(a, cfg),
        Command::Bench(a) => bench_cmd(a, cfg).map(|_| true),
        Command::Render(a) => render_cmd(a, cfg).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NO_PATH),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
