//! Paired planner trials, summary tables and SVG renders.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Split};
use crate::deepsmp::{deepsmp_plan, deepsmp_plan_bidirectional, compute_n_limit, DeepSmpConfig, NeuralSampler};
use crate::error::{Error, Result};
use crate::geometry::{Config, RectFootprint, RobotModel, Workspace, REGION_HALF_EXTENT};
use crate::neural::Mlp;
use crate::parallel::worker_pool;
use crate::rng::derive_seed;
use crate::smp::{plan, InformedSampler, PlanResult, PlannerParams, Problem, UniformSampler};

const REFERENCE_STREAM: u64 = 20;
const TRIAL_STREAM: u64 = 21;

/// Published mean times for the simple 2D scenario on seen workspaces.
pub const CITED_REFERENCE: &str = "s2D seen: DeepSMP:RRT* 0.90 s, Informed-RRT* 9.61 s";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "rrtstar")]
    RrtStar,
    #[serde(rename = "informed")]
    Informed,
    #[serde(rename = "deepsmp")]
    DeepSmp,
    #[serde(rename = "deepsmp-bi")]
    DeepSmpBi,
}

impl Algo {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rrtstar" => Ok(Algo::RrtStar),
            "informed" => Ok(Algo::Informed),
            "deepsmp" => Ok(Algo::DeepSmp),
            "deepsmp-bi" => Ok(Algo::DeepSmpBi),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algo::RrtStar => "rrtstar",
            Algo::Informed => "informed",
            Algo::DeepSmp => "deepsmp",
            Algo::DeepSmpBi => "deepsmp-bi",
        }
    }

    pub fn is_neural(&self) -> bool {
        matches!(self, Algo::DeepSmp | Algo::DeepSmpBi)
    }
}

/// Runs one algorithm on one problem. Neural algorithms need `neural`.
pub fn run_algo(
    algo: Algo,
    problem: &Problem,
    params: &PlannerParams,
    neural: Option<&NeuralSampler>,
    n_limit: usize,
) -> Result<PlanResult> {
    let need = || Error::Config(format!("{} needs a trained sampler", algo.name()));
    match algo {
        Algo::RrtStar => plan(problem, &mut UniformSampler::default(), params),
        Algo::Informed => plan(problem, &mut InformedSampler::default(), params),
        Algo::DeepSmp => deepsmp_plan(problem, neural.ok_or_else(need)?, &DeepSmpConfig::new(*params, n_limit)),
        Algo::DeepSmpBi => {
            deepsmp_plan_bidirectional(problem, neural.ok_or_else(need)?, &DeepSmpConfig::new(*params, n_limit))
        }
    }
}

/// One query of a benchmark.
#[derive(Clone, Debug)]
pub struct BenchProblem {
    pub scenario: String,
    pub test_case: String,
    pub workspace: Workspace,
    pub robot: RobotModel,
    pub start: Config,
    pub goal: Config,
    /// Index into the sampler list handed to [`run_trials`].
    pub neural: Option<usize>,
}

impl BenchProblem {
    pub fn problem(&self) -> Problem<'_> {
        Problem {
            workspace: &self.workspace,
            robot: self.robot,
            start: &self.start,
            goal: &self.goal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub algorithms: Vec<Algo>,
    pub trials: usize,
    /// Planner settings; `max_iterations` is the per-trial cap and `seed`
    /// the master seed.
    pub params: PlannerParams,
    /// Reference runs get this many times the cap.
    pub reference_factor: usize,
    /// Trials stop once cost <= (1 + delta) x reference.
    pub delta: f64,
    pub n_limit: usize,
}

impl TrialSettings {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("benchmark needs at least one algorithm".into()));
        }
        if self.trials == 0 || self.reference_factor == 0 {
            return Err(Error::Config("trials and reference factor must be positive".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config("delta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub problem: usize,
    pub scenario: String,
    pub test_case: String,
    pub algo: Algo,
    pub trial: usize,
    pub seed: u64,
    pub threshold: f64,
    pub reached: bool,
    pub cost: Option<f64>,
    pub iterations: usize,
    pub first_solution: Option<usize>,
    pub wall_ms: f64,
    pub path: Vec<Config>,
}

/// Cost of a long uniform RRT* run on problem `index`, or `None` if it found
/// nothing.
pub fn reference_cost(p: &BenchProblem, index: usize, settings: &TrialSettings) -> Result<Option<f64>> {
    let mut params = settings.params;
    params.max_iterations = settings.params.max_iterations * settings.reference_factor;
    params.seed = derive_seed(settings.params.seed, REFERENCE_STREAM, index as u64);
    params.stop_cost = None;
    params.stop_on_first = false;
    Ok(plan(&p.problem(), &mut UniformSampler::default(), &params)?.cost)
}

/// Runs every problem x algorithm x trial. Trial `t` of a problem uses the
/// same seed for every algorithm. Results come back in job order regardless
/// of the worker count.
pub fn run_trials(problems: &[BenchProblem], samplers: &[NeuralSampler], settings: &TrialSettings) -> Result<Vec<TrialRecord>> {
    settings.validate()?;
    let mut gaps = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        p.problem().check()?;
        let needs = settings.algorithms.iter().any(Algo::is_neural);
        match p.neural {
            None if needs => gaps.push(format!("problem {i} has no sampler")),
            Some(k) if k >= samplers.len() => gaps.push(format!("problem {i} refers to missing sampler {k}")),
            _ => {}
        }
    }
    if !gaps.is_empty() {
        return Err(Error::Config(format!("missing benchmark inputs: {}", gaps.join("; "))));
    }
    let pool = worker_pool()?;
    pool.install(|| {
        let thresholds: Vec<f64> = problems
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(match reference_cost(p, i, settings)? {
                    Some(c) => (1.0 + settings.delta) * c,
                    None => {
                        warn!("problem {i}: reference run found no path; trials stop at the first solution");
                        f64::INFINITY
                    }
                })
            })
            .collect::<Result<_>>()?;
        let mut jobs = Vec::new();
        for i in 0..problems.len() {
            for &algo in &settings.algorithms {
                for t in 0..settings.trials {
                    jobs.push((i, algo, t));
                }
            }
        }
        jobs.par_iter()
            .map(|&(i, algo, t)| {
                let p = &problems[i];
                let mut params = settings.params;
                params.seed = derive_seed(settings.params.seed, TRIAL_STREAM, (i * settings.trials + t) as u64);
                params.stop_on_first = false;
                params.stop_cost = Some(thresholds[i]);
                let neural = p.neural.map(|k| &samplers[k]);
                let r = run_algo(algo, &p.problem(), &params, neural, settings.n_limit)?;
                Ok(TrialRecord {
                    problem: i,
                    scenario: p.scenario.clone(),
                    test_case: p.test_case.clone(),
                    algo,
                    trial: t,
                    seed: params.seed,
                    threshold: thresholds[i],
                    reached: r.cost.is_some_and(|c| c <= thresholds[i]),
                    cost: r.cost,
                    iterations: r.iterations,
                    first_solution: r.first_solution,
                    wall_ms: r.wall_ms,
                    path: r.path,
                })
            })
            .collect()
    })
}

/// Summary of one (scenario, test case, algorithm) group. Times in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub test_case: String,
    pub algo: Algo,
    pub trials: usize,
    pub t_mean: f64,
    pub t_max: f64,
    pub t_min: f64,
    /// Fraction of trials that reached the threshold.
    pub success: f64,
    /// Mean final cost over trials that found a path.
    pub mean_cost: Option<f64>,
    pub mean_iters: f64,
    pub median_iters: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRatio {
    pub scenario: String,
    pub test_case: String,
    pub numerator: Algo,
    pub denominator: Algo,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub ratios: Vec<TimeRatio>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Groups records by (scenario, test case, algorithm) in order of first
/// appearance and adds every pairwise mean-time ratio within a group.
pub fn aggregate(records: &[TrialRecord]) -> BenchTable {
    let mut keys: Vec<(String, String, Algo)> = Vec::new();
    for r in records {
        let k = (r.scenario.clone(), r.test_case.clone(), r.algo);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut rows = Vec::new();
    for (scenario, test_case, algo) in keys {
        let group: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.scenario == scenario && r.test_case == test_case && r.algo == algo)
            .collect();
        let n = group.len() as f64;
        let times: Vec<f64> = group.iter().map(|r| r.wall_ms / 1e3).collect();
        let costs: Vec<f64> = group.iter().filter_map(|r| r.cost).collect();
        let mut iters: Vec<f64> = group.iter().map(|r| r.iterations as f64).collect();
        rows.push(BenchRow {
            scenario,
            test_case,
            algo,
            trials: group.len(),
            t_mean: times.iter().sum::<f64>() / n,
            t_max: times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            t_min: times.iter().copied().fold(f64::INFINITY, f64::min),
            success: group.iter().filter(|r| r.reached).count() as f64 / n,
            mean_cost: (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64),
            mean_iters: iters.iter().sum::<f64>() / n,
            median_iters: median(&mut iters),
        });
    }
    let mut ratios = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a.scenario == b.scenario && a.test_case == b.test_case {
                ratios.push(TimeRatio {
                    scenario: a.scenario.clone(),
                    test_case: a.test_case.clone(),
                    numerator: a.algo,
                    denominator: b.algo,
                    ratio: a.t_mean / b.t_mean,
                });
            }
        }
    }
    BenchTable { rows, ratios }
}

pub const CSV_HEADER: &str = "scenario,test_case,algo,t_mean,t_max,t_min,success,mean_cost,mean_iters";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |c| format!("{c:.6}"))
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.4},{},{:.3}",
                r.scenario,
                r.test_case,
                r.algo.name(),
                r.t_mean,
                r.t_max,
                r.t_min,
                r.success,
                opt(r.mean_cost),
                r.mean_iters
            );
        }
        out
    }

    /// The CSV with the three time columns blanked.
    pub fn to_csv_untimed(&self) -> String {
        let mut blank = self.clone();
        for r in &mut blank.rows {
            r.t_mean = 0.0;
            r.t_max = 0.0;
            r.t_min = 0.0;
        }
        blank.to_csv()
    }

    pub fn to_report(&self) -> String {
        let mut out = String::from("# Benchmark report\n\n");
        out.push_str("| scenario | test case | algorithm | trials | t_mean (s) | t_max (s) | t_min (s) | success | mean cost | mean iters | median iters |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.2} | {} | {:.1} | {:.1} |",
                r.scenario,
                r.test_case,
                r.algo.name(),
                r.trials,
                r.t_mean,
                r.t_max,
                r.t_min,
                r.success,
                r.mean_cost.map_or_else(|| "-".into(), |c| format!("{c:.3}")),
                r.mean_iters,
                r.median_iters
            );
        }
        if !self.ratios.is_empty() {
            out.push_str("\n## Mean-time ratios\n\n| scenario | test case | ratio | value |\n|---|---|---|---|\n");
            for q in &self.ratios {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} / {} | {:.4} |",
                    q.scenario,
                    q.test_case,
                    q.numerator.name(),
                    q.denominator.name(),
                    q.ratio
                );
            }
        }
        let _ = write!(out, "\nPublished reference, mean time to a near-optimal path: {CITED_REFERENCE}.\n");
        out
    }
}

/// Benchmark description read by the `bench` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub dataset: PathBuf,
    #[serde(default)]
    pub cae: Option<PathBuf>,
    #[serde(default)]
    pub sampler: Option<PathBuf>,
    pub algorithms: Vec<Algo>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_cases")]
    pub test_cases: Vec<Split>,
    /// Queries used per workspace; all when absent.
    #[serde(default)]
    pub pairs_per_workspace: Option<usize>,
    #[serde(default = "default_cap")]
    pub max_iterations: usize,
    #[serde(default = "default_factor")]
    pub reference_factor: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Longest training path when absent.
    #[serde(default)]
    pub n_limit: Option<usize>,
    #[serde(default)]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    20
}
fn default_cases() -> Vec<Split> {
    vec![Split::Seen, Split::Unseen]
}
fn default_cap() -> usize {
    10_000
}
fn default_factor() -> usize {
    10
}
fn default_delta() -> f64 {
    0.05
}

impl BenchSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn case_name(s: Split) -> &'static str {
    match s {
        Split::Seen => "seen",
        Split::Unseen => "unseen",
    }
}

/// Loads the dataset and models named by `spec`, runs the trials and
/// aggregates them.
pub fn run_benchmark(spec: &BenchSpec) -> Result<(BenchTable, Vec<TrialRecord>)> {
    let ds = Dataset::load(&spec.dataset)?;
    let robot = ds.manifest.robot;
    let needs_neural = spec.algorithms.iter().any(Algo::is_neural);
    let mut gaps = Vec::new();
    if needs_neural && spec.sampler.is_none() {
        gaps.push("sampler model");
    }
    if !gaps.is_empty() {
        return Err(Error::Config(format!("missing benchmark inputs: {}", gaps.join(", "))));
    }
    let sampler = spec.sampler.as_deref().map(Mlp::load).transpose()?;
    let encoder = spec.cae.as_deref().map(Mlp::load).transpose()?;
    let n_limit = match spec.n_limit {
        Some(k) => k,
        None if needs_neural => compute_n_limit(&ds.training_paths())?,
        None => 0,
    };
    let mut params = PlannerParams::for_robot(&robot);
    params.max_iterations = spec.max_iterations;
    params.seed = spec.seed;
    if let Some(s) = spec.step_size {
        params.step_size = s;
    }
    let mut problems = Vec::new();
    let mut samplers = Vec::new();
    for &case in &spec.test_cases {
        let seeds = match case {
            Split::Seen => &ds.manifest.train_seeds,
            Split::Unseen => &ds.manifest.unseen_seeds,
        };
        for &seed in seeds {
            let ws = &ds.workspaces[&seed];
            let neural = match &sampler {
                Some(m) => {
                    let cloud = ds.cloud(seed)?;
                    samplers.push(NeuralSampler::new(m, encoder.as_ref(), Some(&cloud))?);
                    Some(samplers.len() - 1)
                }
                None => None,
            };
            let pairs = &ds.pairs[&seed].pairs;
            let take = spec.pairs_per_workspace.unwrap_or(pairs.len()).min(pairs.len());
            for sg in &pairs[..take] {
                problems.push(BenchProblem {
                    scenario: ds.manifest.scenario.name().to_string(),
                    test_case: case_name(case).to_string(),
                    workspace: ws.clone(),
                    robot,
                    start: sg.start.clone(),
                    goal: sg.goal.clone(),
                    neural,
                });
            }
        }
    }
    let settings = TrialSettings {
        algorithms: spec.algorithms.clone(),
        trials: spec.trials,
        params,
        reference_factor: spec.reference_factor,
        delta: spec.delta,
        n_limit,
    };
    info!(
        "bench: problems={} algorithms={:?} trials={} cap={} n_limit={} seed={}",
        problems.len(),
        spec.algorithms,
        spec.trials,
        spec.max_iterations,
        n_limit,
        spec.seed
    );
    let records = run_trials(&problems, &samplers, &settings)?;
    Ok((aggregate(&records), records))
}

const PX_PER_UNIT: f64 = 10.0;
const PANEL: f64 = 2.0 * REGION_HALF_EXTENT * PX_PER_UNIT;
const GAP: f64 = 20.0;

fn px(v: f64) -> String {
    format!("{:.2}", (v + REGION_HALF_EXTENT) * PX_PER_UNIT)
}

fn py(v: f64) -> String {
    format!("{:.2}", (REGION_HALF_EXTENT - v) * PX_PER_UNIT)
}

/// SVG text for a workspace with an optional path. 3D workspaces are drawn
/// as xy, xz and yz projections side by side.
pub fn path_svg(ws: &Workspace, robot: &RobotModel, path: &[Config], start: Option<&Config>, goal: Option<&Config>) -> String {
    let panels: Vec<(usize, usize)> = if ws.dim == 3 { vec![(0, 1), (0, 2), (1, 2)] } else { vec![(0, 1)] };
    let width = panels.len() as f64 * PANEL + (panels.len() - 1) as f64 * GAP;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL:.0}" viewBox="0 0 {width:.0} {PANEL:.0}">"#
    );
    for (k, &(a, b)) in panels.iter().enumerate() {
        let dx = k as f64 * (PANEL + GAP);
        let _ = writeln!(s, r#"<g class="panel" transform="translate({dx:.0},0)">"#);
        let _ = writeln!(
            s,
            r#"<rect class="region" x="0" y="0" width="{PANEL:.0}" height="{PANEL:.0}" fill="white" stroke="black"/>"#
        );
        for o in &ws.obstacles {
            let _ = writeln!(
                s,
                r##"<rect class="obstacle" x="{}" y="{}" width="{:.2}" height="{:.2}" fill="#555"/>"##,
                px(o.lower(a)),
                py(o.upper(b)),
                2.0 * o.half_extents[a] * PX_PER_UNIT,
                2.0 * o.half_extents[b] * PX_PER_UNIT
            );
        }
        if let RobotModel::Rigid2 { length, width } = robot {
            for q in path {
                let f = RectFootprint::at(q.as_slice(), *length, *width);
                let pts: Vec<String> = f.corners().iter().map(|c| format!("{},{}", px(c[0]), py(c[1]))).collect();
                let _ = writeln!(
                    s,
                    r##"<polygon class="robot" points="{}" fill="none" stroke="#39c"/>"##,
                    pts.join(" ")
                );
            }
        }
        if path.len() > 1 {
            let pts: Vec<String> = path.iter().map(|q| format!("{},{}", px(q.0[a]), py(q.0[b]))).collect();
            let _ = writeln!(
                s,
                r##"<polyline class="path" points="{}" fill="none" stroke="#d22" stroke-width="2"/>"##,
                pts.join(" ")
            );
        }
        for (class, colour, q) in [("start", "#2a2", start), ("goal", "#22d", goal)] {
            if let Some(q) = q {
                let _ = writeln!(
                    s,
                    r#"<circle class="{class}" cx="{}" cy="{}" r="5" fill="{colour}"/>"#,
                    px(q.0[a]),
                    py(q.0[b])
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_path_svg(
    ws: &Workspace,
    robot: &RobotModel,
    path: &[Config],
    start: Option<&Config>,
    goal: Option<&Config>,
    out: &Path,
) -> Result<()> {
    std::fs::write(out, path_svg(ws, robot, path, start, goal)).map_err(|e| Error::io(out, e))
}
