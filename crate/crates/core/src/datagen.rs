//! Random workspaces, start/goal pairs, RRT* expert demonstrations and the
//! on-disk dataset built from them.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! manifest.json
//! workspaces/ws_<seed>.json
//! clouds/ws_<seed>.f32bin
//! paths/ws_<seed>/path_<k>.json
//! pairs/ws_<seed>.json
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    is_motion_free, sample_point_cloud, AabbObstacle, Config, MotionValidator, PointCloud, RobotModel, Workspace,
    CLOUD_SIZE, REGION_HALF_EXTENT,
};
use crate::parallel::worker_pool;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::TrainingPath;
use crate::smp::{plan, uniform_config, PlannerParams, Problem, UniformSampler};

pub const MANIFEST_VERSION: u32 = 1;
pub const PLACEMENT_ATTEMPTS: usize = 10_000;
/// Minimum start-goal separation, a quarter of the region side.
pub const MIN_SEPARATION: f64 = 0.5 * REGION_HALF_EXTENT;

const TRAIN_STREAM: u64 = 1;
const UNSEEN_STREAM: u64 = 2;
const CLOUD_ONLY_STREAM: u64 = 3;
const PATH_STREAM: u64 = 10;
const SEEN_PAIR_STREAM: u64 = 11;
const UNSEEN_PAIR_STREAM: u64 = 12;
const CLOUD_STREAM: u64 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "s2D")]
    Simple2D,
    #[serde(rename = "c2D")]
    Complex2D,
    #[serde(rename = "c3D")]
    Complex3D,
    #[serde(rename = "rigid")]
    Rigid,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "s2D" | "s2d" => Ok(Scenario::Simple2D),
            "c2D" | "c2d" => Ok(Scenario::Complex2D),
            "c3D" | "c3d" => Ok(Scenario::Complex3D),
            "rigid" => Ok(Scenario::Rigid),
            other => Err(Error::InvalidArgument(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Simple2D => "s2D",
            Scenario::Complex2D => "c2D",
            Scenario::Complex3D => "c3D",
            Scenario::Rigid => "rigid",
        }
    }

    pub fn robot(&self) -> RobotModel {
        match self {
            Scenario::Simple2D | Scenario::Complex2D => RobotModel::Point2,
            Scenario::Complex3D => RobotModel::Point3,
            Scenario::Rigid => RobotModel::rigid2(),
        }
    }

    pub fn dim(&self) -> usize {
        self.robot().workspace_dim()
    }

    pub fn default_obstacles(&self) -> ObstacleSpec {
        match self {
            Scenario::Simple2D | Scenario::Rigid => ObstacleSpec::fixed(7, 5.0),
            Scenario::Complex2D => ObstacleSpec::fixed(10, 5.0),
            Scenario::Complex3D => ObstacleSpec {
                count: 10,
                min_side: 5.0,
                max_side: 10.0,
            },
        }
    }
}

/// Block count and side range; every side is drawn independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub count: usize,
    pub min_side: f64,
    pub max_side: f64,
}

impl ObstacleSpec {
    pub fn fixed(count: usize, side: f64) -> Self {
        ObstacleSpec {
            count,
            min_side: side,
            max_side: side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_side > 0.0 && self.min_side <= self.max_side && self.max_side < 2.0 * REGION_HALF_EXTENT) {
            return Err(Error::InvalidArgument(format!(
                "obstacle sides must satisfy 0 < {} <= {} < {}",
                self.min_side,
                self.max_side,
                2.0 * REGION_HALF_EXTENT
            )));
        }
        Ok(())
    }
}

pub fn generate_workspace(scenario: Scenario, seed: u64) -> Result<Workspace> {
    generate_workspace_with(scenario.dim(), &scenario.default_obstacles(), seed)
}

/// Places non-overlapping blocks uniformly inside the region.
pub fn generate_workspace_with(dim: usize, spec: &ObstacleSpec, seed: u64) -> Result<Workspace> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut obstacles: Vec<AabbObstacle> = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while obstacles.len() < spec.count {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(Error::Generation(format!(
                "placed only {} of {} blocks after {PLACEMENT_ATTEMPTS} attempts",
                obstacles.len(),
                spec.count
            )));
        }
        let half: Vec<f64> = (0..dim)
            .map(|_| 0.5 * rng.gen_range(spec.min_side..=spec.max_side))
            .collect();
        let center: Vec<f64> = half
            .iter()
            .map(|h| rng.gen_range(-REGION_HALF_EXTENT + h..=REGION_HALF_EXTENT - h))
            .collect();
        let candidate = AabbObstacle::new(center, half)?;
        if obstacles.iter().all(|o| !o.intersects(&candidate)) {
            obstacles.push(candidate);
        }
    }
    Workspace::new(dim, obstacles, seed)
}

/// Random free start and goal at least [`MIN_SEPARATION`] apart in position.
pub fn sample_start_goal(ws: &Workspace, robot: &RobotModel, seed: u64) -> Result<(Config, Config)> {
    let v = MotionValidator::new(ws, *robot, robot.default_resolution())?;
    let mut rng = rng_from_seed(seed);
    let d = robot.config_dim();
    let pos = robot.workspace_dim();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let s = uniform_config(d, &mut rng);
        let g = uniform_config(d, &mut rng);
        let sep = crate::geometry::distance(&s.0[..pos], &g.0[..pos]);
        if sep >= MIN_SEPARATION && v.config_free(s.as_slice()) && v.config_free(g.as_slice()) {
            return Ok((s, g));
        }
    }
    Err(Error::Generation(format!(
        "no free start/goal pair after {PLACEMENT_ATTEMPTS} attempts"
    )))
}

/// How expert demonstrations are produced and post-processed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertParams {
    pub budget: usize,
    pub step_size: f64,
    pub goal_radius: f64,
    /// Drop waypoints whose removal keeps the motion free.
    pub prune: bool,
    /// After pruning, re-insert waypoints so no segment exceeds this length.
    pub resample: Option<f64>,
}

impl ExpertParams {
    pub fn for_robot(robot: &RobotModel) -> Self {
        let p = PlannerParams::for_robot(robot);
        ExpertParams {
            budget: 30_000,
            step_size: p.step_size,
            goal_radius: p.goal_radius,
            prune: true,
            resample: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidArgument("expert budget must be positive".into()));
        }
        if self.resample.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("resample spacing must be positive".into()));
        }
        Ok(())
    }
}

/// Greedy shortcutting: from each kept waypoint jump to the farthest later
/// waypoint reachable by a free straight motion.
pub fn prune_path(path: &[Config], validator: &MotionValidator) -> Vec<Config> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0].clone()];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !validator.motion_free(path[i].as_slice(), path[j].as_slice()) {
            j -= 1;
        }
        out.push(path[j].clone());
        i = j;
    }
    out
}

/// Splits every segment into equal pieces no longer than `spacing`.
pub fn resample_path(path: &[Config], spacing: f64) -> Vec<Config> {
    let Some(first) = path.first() else {
        return Vec::new();
    };
    let mut out = vec![first.clone()];
    for w in path.windows(2) {
        let pieces = (w[0].distance(&w[1]) / spacing).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            let q = if k == pieces {
                w[1].0.clone()
            } else {
                w[0].0.iter().zip(&w[1].0).map(|(a, b)| a + t * (b - a)).collect()
            };
            out.push(Config(q));
        }
    }
    out
}

/// Runs RRT* with the expert budget and post-processes the result. The goal
/// itself is appended when it is reachable from the last waypoint. Returns
/// `None` when no path was found.
pub fn generate_expert_path(
    ws: &Workspace,
    robot: &RobotModel,
    start: &Config,
    goal: &Config,
    expert: &ExpertParams,
    seed: u64,
) -> Result<Option<TrainingPath>> {
    expert.validate()?;
    let mut params = PlannerParams::for_robot(robot);
    params.max_iterations = expert.budget;
    params.step_size = expert.step_size;
    params.goal_radius = expert.goal_radius;
    params.seed = seed;
    let problem = Problem {
        workspace: ws,
        robot: *robot,
        start,
        goal,
    };
    let result = plan(&problem, &mut UniformSampler::default(), &params)?;
    if !result.found {
        debug!("expert planner found no path in workspace {} (seed {seed})", ws.seed);
        return Ok(None);
    }
    let v = MotionValidator::new(ws, *robot, params.resolution)?;
    let mut path = result.path;
    let last = path.last().unwrap();
    if last != goal && v.motion_free(last.as_slice(), goal.as_slice()) {
        path.push(goal.clone());
    }
    if expert.prune {
        path = prune_path(&path, &v);
    }
    if let Some(s) = expert.resample {
        path = resample_path(&path, s);
    }
    Ok(Some(TrainingPath {
        workspace_seed: ws.seed,
        path,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub train_workspaces: usize,
    pub unseen_workspaces: usize,
    /// Extra workspaces that only contribute point clouds.
    pub cloud_only_workspaces: usize,
    pub paths_per_workspace: usize,
    pub seen_pairs_per_workspace: usize,
    pub unseen_pairs_per_workspace: usize,
}

impl DatasetCounts {
    /// 10 training workspaces with 200 paths and 50 fresh pairs each, plus 2
    /// unseen workspaces with 100 pairs each.
    pub fn desk() -> Self {
        DatasetCounts {
            train_workspaces: 10,
            unseen_workspaces: 2,
            cloud_only_workspaces: 0,
            paths_per_workspace: 200,
            seen_pairs_per_workspace: 50,
            unseen_pairs_per_workspace: 100,
        }
    }

    /// 100 training workspaces with 4000 paths each and 10 unseen workspaces
    /// with 2000 pairs each.
    pub fn full() -> Self {
        DatasetCounts {
            train_workspaces: 100,
            unseen_workspaces: 10,
            cloud_only_workspaces: 0,
            paths_per_workspace: 4000,
            seen_pairs_per_workspace: 2000,
            unseen_pairs_per_workspace: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub scenario: Scenario,
    pub robot: RobotModel,
    pub obstacles: ObstacleSpec,
    pub master_seed: u64,
    pub counts: DatasetCounts,
    pub train_seeds: Vec<u64>,
    pub unseen_seeds: Vec<u64>,
    pub cloud_only_seeds: Vec<u64>,
    pub cloud_size: usize,
    pub min_separation: f64,
    pub expert: ExpertParams,
}

impl DatasetManifest {
    pub fn new(scenario: Scenario, master_seed: u64, counts: DatasetCounts) -> Self {
        let seeds = |stream, n| (0..n as u64).map(|i| derive_seed(master_seed, stream, i)).collect();
        let robot = scenario.robot();
        DatasetManifest {
            version: MANIFEST_VERSION,
            scenario,
            robot,
            obstacles: scenario.default_obstacles(),
            master_seed,
            counts,
            train_seeds: seeds(TRAIN_STREAM, counts.train_workspaces),
            unseen_seeds: seeds(UNSEEN_STREAM, counts.unseen_workspaces),
            cloud_only_seeds: seeds(CLOUD_ONLY_STREAM, counts.cloud_only_workspaces),
            cloud_size: CLOUD_SIZE,
            min_separation: MIN_SEPARATION,
            expert: ExpertParams::for_robot(&robot),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MANIFEST_VERSION,
            });
        }
        self.robot.validate()?;
        if self.robot.workspace_dim() != self.scenario.dim() {
            return Err(Error::Config(format!(
                "robot {} does not fit scenario {}",
                self.robot.name(),
                self.scenario.name()
            )));
        }
        self.obstacles.validate()?;
        self.expert.validate()?;
        let c = &self.counts;
        if c.train_workspaces == 0 || c.paths_per_workspace == 0 || self.cloud_size == 0 {
            return Err(Error::Config("dataset counts must be positive".into()));
        }
        let lists = [
            ("train", &self.train_seeds, c.train_workspaces),
            ("unseen", &self.unseen_seeds, c.unseen_workspaces),
            ("cloud-only", &self.cloud_only_seeds, c.cloud_only_workspaces),
        ];
        for (name, seeds, n) in lists {
            if seeds.len() != n {
                return Err(Error::Config(format!("{name} seed list has {} entries, counts say {n}", seeds.len())));
            }
        }
        check_split(&self.train_seeds, &self.unseen_seeds, &self.cloud_only_seeds)
    }

    /// Every workspace seed in the dataset, training first.
    pub fn all_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        self.train_seeds
            .iter()
            .chain(&self.unseen_seeds)
            .chain(&self.cloud_only_seeds)
            .copied()
    }
}

/// Errors when any seed repeats within or across the three splits.
pub fn check_split(train: &[u64], unseen: &[u64], cloud_only: &[u64]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (name, seeds) in [("train", train), ("unseen", unseen), ("cloud-only", cloud_only)] {
        for s in seeds {
            if !seen.insert(*s) {
                return Err(Error::Split(format!("workspace seed {s} in the {name} split is not unique")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartGoal {
    pub start: Config,
    pub goal: Config,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Seen,
    Unseen,
}

/// Test queries for one workspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub workspace_seed: u64,
    pub split: Split,
    pub pairs: Vec<StartGoal>,
}

pub fn workspace_file(root: &Path, seed: u64) -> PathBuf {
    root.join("workspaces").join(format!("ws_{seed}.json"))
}

pub fn cloud_file(root: &Path, seed: u64) -> PathBuf {
    root.join("clouds").join(format!("ws_{seed}.f32bin"))
}

pub fn path_dir(root: &Path, seed: u64) -> PathBuf {
    root.join("paths").join(format!("ws_{seed}"))
}

pub fn pairs_file(root: &Path, seed: u64) -> PathBuf {
    root.join("pairs").join(format!("ws_{seed}.json"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn cloud_seed(workspace_seed: u64) -> u64 {
    derive_seed(workspace_seed, CLOUD_STREAM, 0)
}

/// The point cloud a dataset stores for `ws`.
pub fn workspace_cloud(ws: &Workspace) -> Result<PointCloud> {
    sample_point_cloud(ws, CLOUD_SIZE, cloud_seed(ws.seed))
}

fn sample_pairs(ws: &Workspace, robot: &RobotModel, stream: u64, n: usize) -> Result<Vec<StartGoal>> {
    (0..n as u64)
        .map(|k| {
            let (start, goal) = sample_start_goal(ws, robot, derive_seed(ws.seed, stream, k))?;
            Ok(StartGoal { start, goal })
        })
        .collect()
}

/// Expert paths for one workspace; unsolved queries are skipped and replaced
/// by fresh ones until `n` paths exist.
fn expert_paths(ws: &Workspace, m: &DatasetManifest) -> Result<Vec<TrainingPath>> {
    let n = m.counts.paths_per_workspace;
    let max_attempts = 4 * n + 16;
    let mut out = Vec::with_capacity(n);
    let mut attempt = 0u64;
    while out.len() < n {
        if attempt as usize >= max_attempts {
            return Err(Error::Generation(format!(
                "workspace {}: only {} of {n} expert paths after {max_attempts} queries",
                ws.seed,
                out.len()
            )));
        }
        let seed = derive_seed(ws.seed, PATH_STREAM, attempt);
        attempt += 1;
        let (s, g) = sample_start_goal(ws, &m.robot, seed)?;
        match generate_expert_path(ws, &m.robot, &s, &g, &m.expert, seed)? {
            Some(p) => out.push(p),
            None => warn!("workspace {}: expert query {} unsolved, skipped", ws.seed, attempt - 1),
        }
    }
    Ok(out)
}

fn build_workspace(root: &Path, m: &DatasetManifest, seed: u64, role: Split, cloud_only: bool) -> Result<()> {
    let ws = generate_workspace_with(m.scenario.dim(), &m.obstacles, seed)?;
    ws.save(&workspace_file(root, seed))?;
    sample_point_cloud(&ws, m.cloud_size, cloud_seed(seed))?.save(&cloud_file(root, seed))?;
    if cloud_only {
        return Ok(());
    }
    let (stream, n) = match role {
        Split::Seen => (SEEN_PAIR_STREAM, m.counts.seen_pairs_per_workspace),
        Split::Unseen => (UNSEEN_PAIR_STREAM, m.counts.unseen_pairs_per_workspace),
    };
    let pairs = PairSet {
        workspace_seed: seed,
        split: role,
        pairs: sample_pairs(&ws, &m.robot, stream, n)?,
    };
    write_json(&pairs_file(root, seed), &pairs)?;
    if role == Split::Seen {
        let dir = path_dir(root, seed);
        create_dir(&dir)?;
        for (k, p) in expert_paths(&ws, m)?.iter().enumerate() {
            write_json(&dir.join(format!("path_{k}.json")), p)?;
        }
    }
    info!("workspace {seed} done");
    Ok(())
}

/// Writes the whole dataset described by `m` under `root`. Workspaces are
/// generated in parallel; each derives its randomness from its own seed.
pub fn build_dataset(m: &DatasetManifest, root: &Path) -> Result<()> {
    m.validate()?;
    for sub in ["workspaces", "clouds", "paths", "pairs"] {
        create_dir(&root.join(sub))?;
    }
    let mut jobs: Vec<(u64, Split, bool)> = Vec::new();
    jobs.extend(m.train_seeds.iter().map(|&s| (s, Split::Seen, false)));
    jobs.extend(m.unseen_seeds.iter().map(|&s| (s, Split::Unseen, false)));
    jobs.extend(m.cloud_only_seeds.iter().map(|&s| (s, Split::Seen, true)));
    info!(
        "gen-data: scenario={} workspaces={} paths/ws={} budget={} master_seed={}",
        m.scenario.name(),
        jobs.len(),
        m.counts.paths_per_workspace,
        m.expert.budget,
        m.master_seed
    );
    let pool = worker_pool()?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, role, cloud_only)| build_workspace(root, m, seed, role, cloud_only))
            .collect::<Result<Vec<()>>>()
    })?;
    let manifest_path = root.join("manifest.json");
    fs::write(&manifest_path, m.to_json()?).map_err(|e| Error::io(&manifest_path, e))
}

/// SHA-256 of the manifest file, hex encoded.
pub fn manifest_hash(root: &Path) -> Result<String> {
    let path = root.join("manifest.json");
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// SHA-256 over every file of a directory tree, visited in sorted order,
/// covering relative paths and contents.
pub fn tree_hash(root: &Path) -> Result<String> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, &mut files)?;
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(root).unwrap_or(&f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A dataset read back from disk.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub workspaces: BTreeMap<u64, Workspace>,
    pub paths: BTreeMap<u64, Vec<TrainingPath>>,
    pub pairs: BTreeMap<u64, PairSet>,
}

impl Dataset {
    /// Loads and re-checks the split, the counts and the feasibility of every
    /// stored path.
    pub fn load(root: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(&root.join("manifest.json"))?;
        let mut workspaces = BTreeMap::new();
        for seed in manifest.all_seeds() {
            let ws = Workspace::load(&workspace_file(root, seed))?;
            if ws.seed != seed {
                return Err(Error::Format(format!("workspace file for seed {seed} holds seed {}", ws.seed)));
            }
            workspaces.insert(seed, ws);
        }
        let mut paths = BTreeMap::new();
        let mut pairs = BTreeMap::new();
        let robot = manifest.robot;
        let res = robot.default_resolution();
        for (&seed, role) in manifest
            .train_seeds
            .iter()
            .map(|s| (s, Split::Seen))
            .chain(manifest.unseen_seeds.iter().map(|s| (s, Split::Unseen)))
        {
            let set: PairSet = read_json(&pairs_file(root, seed))?;
            let want = match role {
                Split::Seen => manifest.counts.seen_pairs_per_workspace,
                Split::Unseen => manifest.counts.unseen_pairs_per_workspace,
            };
            if set.workspace_seed != seed || set.split != role || set.pairs.len() != want {
                return Err(Error::Format(format!("pair file for workspace {seed} does not match the manifest")));
            }
            pairs.insert(seed, set);
            if role == Split::Unseen {
                continue;
            }
            let ws = &workspaces[&seed];
            let mut list = Vec::with_capacity(manifest.counts.paths_per_workspace);
            for k in 0..manifest.counts.paths_per_workspace {
                let tp: TrainingPath = read_json(&path_dir(root, seed).join(format!("path_{k}.json")))?;
                if tp.workspace_seed != seed || tp.path.len() < 2 {
                    return Err(Error::Format(format!("path {k} of workspace {seed} is malformed")));
                }
                for w in tp.path.windows(2) {
                    if !is_motion_free(ws, &robot, &w[0], &w[1], res)? {
                        return Err(Error::Format(format!("path {k} of workspace {seed} is in collision")));
                    }
                }
                list.push(tp);
            }
            paths.insert(seed, list);
        }
        Ok(Dataset {
            root: root.to_path_buf(),
            manifest,
            workspaces,
            paths,
            pairs,
        })
    }

    pub fn cloud(&self, seed: u64) -> Result<PointCloud> {
        PointCloud::load(&cloud_file(&self.root, seed))
    }

    /// All training paths, workspace by workspace.
    pub fn training_paths(&self) -> Vec<TrainingPath> {
        self.paths.values().flatten().cloned().collect()
    }
}
