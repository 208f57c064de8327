//! RRT* with rewiring, pluggable sample sources and the informed baseline.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{distance, Config, MotionValidator, RobotModel, Workspace, REGION_HALF_EXTENT};
use crate::rng::rng_from_seed;

const NONE: usize = usize::MAX;

/// Dense bucket grid over the operating region.
#[derive(Clone, Debug)]
struct Grid {
    dim: usize,
    cell: f64,
    per_axis: usize,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn new(dim: usize) -> Self {
        let cell = if dim <= 2 { 1.0 } else { 2.0 };
        let per_axis = (2.0 * REGION_HALF_EXTENT / cell).ceil() as usize;
        Grid {
            dim,
            cell,
            per_axis,
            cells: vec![Vec::new(); per_axis.pow(dim as u32)],
        }
    }

    fn coord(&self, x: f64) -> usize {
        let c = ((x + REGION_HALF_EXTENT) / self.cell).floor();
        c.clamp(0.0, (self.per_axis - 1) as f64) as usize
    }

    fn coords(&self, p: &[f64]) -> [usize; 3] {
        let mut c = [0; 3];
        for k in 0..self.dim {
            c[k] = self.coord(p[k]);
        }
        c
    }

    fn index(&self, c: &[usize; 3]) -> usize {
        (0..self.dim).rev().fold(0, |acc, k| acc * self.per_axis + c[k])
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        let i = self.index(&self.coords(p));
        self.cells[i].push(id as u32);
    }

    /// Visits every cell in the inclusive coordinate box `lo..=hi`, skipping
    /// those strictly inside `skip` when given.
    fn visit_box(&self, lo: [usize; 3], hi: [usize; 3], skip: Option<([usize; 3], [usize; 3])>, mut f: impl FnMut(u32)) {
        let mut c = lo;
        loop {
            let inner = skip.is_some_and(|(a, b)| (0..self.dim).all(|k| c[k] >= a[k] && c[k] <= b[k]));
            if !inner {
                for &id in &self.cells[self.index(&c)] {
                    f(id);
                }
            }
            let mut k = 0;
            loop {
                if k == self.dim {
                    return;
                }
                if c[k] < hi[k] {
                    c[k] += 1;
                    break;
                }
                c[k] = lo[k];
                k += 1;
            }
        }
    }
}

/// Search tree rooted at the start configuration.
#[derive(Clone, Debug)]
pub struct Tree {
    dim: usize,
    points: Vec<f64>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
    grid: Grid,
}

impl Tree {
    pub fn new(root: &Config) -> Self {
        let dim = root.dim();
        let mut t = Tree {
            dim,
            points: Vec::new(),
            parent: Vec::new(),
            cost: Vec::new(),
            children: Vec::new(),
            grid: Grid::new(dim),
        };
        t.push(root.as_slice(), NONE, 0.0);
        t
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (self.parent[i] != NONE).then_some(self.parent[i])
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    fn push(&mut self, p: &[f64], parent: usize, cost: f64) -> usize {
        let id = self.len();
        self.points.extend_from_slice(p);
        self.parent.push(parent);
        self.cost.push(cost);
        self.children.push(Vec::new());
        if parent != NONE {
            self.children[parent].push(id);
        }
        self.grid.insert(p, id);
        id
    }

    /// Closest node to `q`; ties go to the lowest index.
    pub fn nearest(&self, q: &[f64]) -> usize {
        let g = &self.grid;
        let c = g.coords(q);
        let mut best = (f64::INFINITY, NONE);
        let consider = |best: &mut (f64, usize), id: u32| {
            let d = distance(self.point(id as usize), q);
            if d < best.0 || (d == best.0 && (id as usize) < best.1) {
                *best = (d, id as usize);
            }
        };
        let mut prev: Option<([usize; 3], [usize; 3])> = None;
        for r in 0..g.per_axis {
            let mut lo = [0; 3];
            let mut hi = [0; 3];
            for k in 0..g.dim {
                lo[k] = c[k].saturating_sub(r);
                hi[k] = (c[k] + r).min(g.per_axis - 1);
            }
            g.visit_box(lo, hi, prev, |id| consider(&mut best, id));
            prev = Some((lo, hi));
            // Anything not yet visited lies outside the box lo..=hi.
            let full = (0..g.dim).all(|k| lo[k] == 0 && hi[k] == g.per_axis - 1);
            if full {
                break;
            }
            let mut bound = f64::INFINITY;
            for k in 0..g.dim {
                if lo[k] > 0 {
                    bound = bound.min(q[k] - (lo[k] as f64 * g.cell - REGION_HALF_EXTENT));
                }
                if hi[k] < g.per_axis - 1 {
                    bound = bound.min((hi[k] + 1) as f64 * g.cell - REGION_HALF_EXTENT - q[k]);
                }
            }
            if best.0 <= bound {
                break;
            }
        }
        best.1
    }

    /// Every node within `radius` of `q`, in index order.
    pub fn near(&self, q: &[f64], radius: f64) -> Vec<usize> {
        let g = &self.grid;
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for k in 0..g.dim {
            lo[k] = g.coord(q[k] - radius);
            hi[k] = g.coord(q[k] + radius);
        }
        let mut out = Vec::new();
        g.visit_box(lo, hi, None, |id| {
            if distance(self.point(id as usize), q) <= radius {
                out.push(id as usize);
            }
        });
        out.sort_unstable();
        out
    }

    /// Moves `node` under `new_parent` and refreshes the costs of its subtree.
    fn reparent(&mut self, node: usize, new_parent: usize) -> Vec<usize> {
        let old = self.parent[node];
        self.children[old].retain(|&c| c != node);
        self.parent[node] = new_parent;
        self.children[new_parent].push(node);
        let mut touched = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let p = self.parent[n];
            self.cost[n] = self.cost[p] + distance(self.point(p), self.point(n));
            touched.push(n);
            stack.extend_from_slice(&self.children[n]);
        }
        touched
    }

    /// Configurations from the root to node `i`.
    pub fn path_to(&self, i: usize) -> Vec<Config> {
        let mut out = Vec::new();
        let mut n = i;
        while n != NONE {
            out.push(Config::new(self.point(n)));
            n = self.parent[n];
        }
        out.reverse();
        out
    }

    fn check_node(&self, i: usize) -> bool {
        match self.parent(i) {
            None => i == 0 && self.cost[i] == 0.0,
            Some(p) => {
                let want = self.cost[p] + distance(self.point(p), self.point(i));
                (self.cost[i] - want).abs() <= 1e-9 * want.max(1.0) && self.children[p].contains(&i)
            }
        }
    }

    /// Checks acyclicity, child lists and cost consistency over the whole tree.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.is_empty() || self.parent[0] != NONE {
            return Err("root missing".into());
        }
        for i in 0..self.len() {
            if !self.check_node(i) {
                return Err(format!("node {i} has inconsistent parent or cost"));
            }
            let mut n = i;
            let mut hops = 0;
            while n != NONE {
                n = self.parent[n];
                hops += 1;
                if hops > self.len() {
                    return Err(format!("cycle through node {i}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub step_size: f64,
    /// Multiplier on the theoretical RRT* radius constant.
    pub gamma: f64,
    pub goal_radius: f64,
    pub max_iterations: usize,
    /// Edge collision resolution.
    pub resolution: f64,
    /// Cap on the near radius in units of `step_size`.
    pub radius_steps: f64,
    pub seed: u64,
    /// Stop as soon as the best cost drops to this value.
    pub stop_cost: Option<f64>,
    pub stop_on_first: bool,
}

pub const DEFAULT_GAMMA: f64 = 1.6;
pub const DEFAULT_GOAL_RADIUS: f64 = 1.0;
pub const DEFAULT_RADIUS_STEPS: f64 = 50.0;
pub const DEFAULT_GOAL_BIAS: f64 = 0.05;

impl PlannerParams {
    /// Desk-scale settings: step 0.5 for point robots, 0.9 for the rigid body.
    pub fn for_robot(robot: &RobotModel) -> Self {
        let step_size = match robot {
            RobotModel::Rigid2 { .. } => 0.9,
            _ => 0.5,
        };
        PlannerParams {
            step_size,
            gamma: DEFAULT_GAMMA,
            goal_radius: DEFAULT_GOAL_RADIUS,
            max_iterations: 10_000,
            resolution: robot.default_resolution(),
            radius_steps: DEFAULT_RADIUS_STEPS,
            seed: 0,
            stop_cost: None,
            stop_on_first: false,
        }
    }

    /// The reference step sizes: 0.01 for point robots, 0.9 for the rigid body.
    pub fn reference(robot: &RobotModel) -> Self {
        let mut p = Self::for_robot(robot);
        if !matches!(robot, RobotModel::Rigid2 { .. }) {
            p.step_size = 0.01;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step size", self.step_size),
            ("gamma", self.gamma),
            ("goal radius", self.goal_radius),
            ("resolution", self.resolution),
            ("radius cap", self.radius_steps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => {
            let mut v = [2.0, PI];
            for k in 3..=d {
                let next = v[0] * 2.0 * PI / k as f64;
                v = [v[1], next];
            }
            v[1]
        }
    }
}

/// Near-ball radius for a tree of `n` nodes in `d` dimensions:
/// `min(gamma · γ* · (ln n / n)^(1/d), radius_steps · step_size)` where
/// `γ* = 2 (1 + 1/d)^(1/d) (μ / ζ_d)^(1/d)` and `μ` is the region volume.
pub fn near_radius(n: usize, d: usize, params: &PlannerParams) -> f64 {
    let n = n.max(2) as f64;
    let df = d as f64;
    let mu = (2.0 * REGION_HALF_EXTENT).powi(d as i32);
    let gamma_star = 2.0 * (1.0 + 1.0 / df).powf(1.0 / df) * (mu / unit_ball_volume(d)).powf(1.0 / df);
    let r = params.gamma * gamma_star * (n.ln() / n).powf(1.0 / df);
    r.min(params.radius_steps * params.step_size)
}

/// Point at most `step` from `from` on the segment towards `to`.
pub fn steer(from: &[f64], to: &[f64], step: f64) -> Vec<f64> {
    let d = distance(from, to);
    if d <= step {
        return to.to_vec();
    }
    let t = step / d;
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// One RRT* iteration. Returns the new node, or `None` when the sample was
/// rejected and the tree is unchanged.
pub fn rrt_star_step(tree: &mut Tree, x_rand: &[f64], params: &PlannerParams, validator: &MotionValidator) -> Option<usize> {
    let nearest = tree.nearest(x_rand);
    let x_new = steer(tree.point(nearest), x_rand, params.step_size);
    if x_new.as_slice() == tree.point(nearest) || !validator.motion_free(tree.point(nearest), &x_new) {
        return None;
    }
    let radius = near_radius(tree.len() + 1, tree.dim(), params);
    let near = tree.near(&x_new, radius);

    let nearest_cost = tree.cost(nearest) + distance(tree.point(nearest), &x_new);
    let mut candidates: Vec<(f64, usize)> = near
        .iter()
        .filter(|&&i| i != nearest)
        .map(|&i| (tree.cost(i) + distance(tree.point(i), &x_new), i))
        .filter(|&(c, _)| c < nearest_cost)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (cost, parent) = candidates
        .into_iter()
        .find(|&(_, i)| validator.motion_free(tree.point(i), &x_new))
        .unwrap_or((nearest_cost, nearest));
    let new = tree.push(&x_new, parent, cost);
    debug_assert!(tree.check_node(new));

    for &j in &near {
        if j == parent {
            continue;
        }
        let via = tree.cost(new) + distance(tree.point(new), tree.point(j));
        if via < tree.cost(j) && validator.motion_free(tree.point(new), tree.point(j)) {
            let touched = tree.reparent(j, new);
            debug_assert!(touched.iter().all(|&t| tree.check_node(t)));
        }
    }
    Some(new)
}

/// What produced a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleKind {
    Uniform,
    GoalBias,
    Informed,
    Neural,
}

/// Planner state visible to a sample source.
#[derive(Clone, Copy, Debug)]
pub struct SampleContext<'a> {
    pub iteration: usize,
    pub best_cost: f64,
    pub start: &'a Config,
    pub goal: &'a Config,
    pub goal_radius: f64,
}

pub trait SampleSource {
    /// Name echoed in results: `rrtstar`, `informed`, `deepsmp`, ...
    fn kind(&self) -> &'static str;

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn rand::RngCore) -> Result<(Config, SampleKind)>;
}

pub fn uniform_config(dim: usize, rng: &mut (impl Rng + ?Sized)) -> Config {
    Config((0..dim).map(|_| rng.gen_range(-REGION_HALF_EXTENT..=REGION_HALF_EXTENT)).collect())
}

/// Uniform over the region, returning the goal itself with probability
/// `goal_bias`.
#[derive(Clone, Copy, Debug)]
pub struct UniformSampler {
    pub goal_bias: f64,
}

impl Default for UniformSampler {
    fn default() -> Self {
        UniformSampler {
            goal_bias: DEFAULT_GOAL_BIAS,
        }
    }
}

impl UniformSampler {
    pub fn draw(&self, goal: &Config, rng: &mut (impl Rng + ?Sized)) -> (Config, SampleKind) {
        if rng.gen::<f64>() < self.goal_bias {
            (goal.clone(), SampleKind::GoalBias)
        } else {
            (uniform_config(goal.dim(), rng), SampleKind::Uniform)
        }
    }
}

impl SampleSource for UniformSampler {
    fn kind(&self) -> &'static str {
        "rrtstar"
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn rand::RngCore) -> Result<(Config, SampleKind)> {
        Ok(self.draw(ctx.goal, rng))
    }
}

fn in_region(p: &[f64]) -> bool {
    p.iter().all(|x| x.abs() <= REGION_HALF_EXTENT)
}

/// Uniform sample from the intersection of the region with the prolate
/// hyperspheroid whose foci are `start` and `goal` and whose transverse
/// diameter is `best_cost`. An infinite cost falls back to the whole region.
pub fn informed_sampler(best_cost: f64, start: &Config, goal: &Config, rng: &mut (impl Rng + ?Sized)) -> Result<Config> {
    let d = start.dim();
    check_dim(d, goal.dim())?;
    if !best_cost.is_finite() {
        return Ok(uniform_config(d, rng));
    }
    let focal = start.distance(goal);
    let c = best_cost.max(focal);
    let major = 0.5 * c;
    let minor = 0.5 * (c * c - focal * focal).max(0.0).sqrt();
    let centre: Vec<f64> = start.0.iter().zip(&goal.0).map(|(a, b)| 0.5 * (a + b)).collect();

    let ellipse_volume = unit_ball_volume(d) * major * minor.powi(d as i32 - 1);
    let region_volume = (2.0 * REGION_HALF_EXTENT).powi(d as i32);
    if ellipse_volume >= region_volume {
        loop {
            let s = uniform_config(d, rng);
            if s.distance(start) + s.distance(goal) <= c {
                return Ok(s);
            }
        }
    }

    // Householder reflection taking e1 onto the focal axis.
    let axis: Vec<f64> = if focal > 0.0 {
        goal.0.iter().zip(&start.0).map(|(g, s)| (g - s) / focal).collect()
    } else {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    };
    let mut v = axis.iter().map(|a| -a).collect::<Vec<_>>();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    loop {
        let ball = loop {
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if b.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                break b;
            }
        };
        let mut y: Vec<f64> = ball.iter().enumerate().map(|(k, b)| b * if k == 0 { major } else { minor }).collect();
        if vv > 1e-24 {
            let dot: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
            for (yk, vk) in y.iter_mut().zip(&v) {
                *yk -= 2.0 * dot / vv * vk;
            }
        }
        let s: Vec<f64> = y.iter().zip(&centre).map(|(a, b)| a + b).collect();
        if in_region(&s) {
            return Ok(Config(s));
        }
    }
}

/// Informed-RRT* sampling: uniform with goal bias until a solution exists,
/// then the informed set of the best cost plus the goal radius.
#[derive(Clone, Copy, Debug, Default)]
pub struct InformedSampler {
    pub uniform: UniformSampler,
}

impl SampleSource for InformedSampler {
    fn kind(&self) -> &'static str {
        "informed"
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn rand::RngCore) -> Result<(Config, SampleKind)> {
        if !ctx.best_cost.is_finite() {
            return Ok(self.uniform.draw(ctx.goal, rng));
        }
        // Any cheaper path ends somewhere in the goal ball, so it lies in the
        // ellipse around the goal centre widened by the ball radius.
        let s = informed_sampler(ctx.best_cost + ctx.goal_radius, ctx.start, ctx.goal, rng)?;
        Ok((s, SampleKind::Informed))
    }
}

/// A start and goal in one workspace.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub workspace: &'a Workspace,
    pub robot: RobotModel,
    pub start: &'a Config,
    pub goal: &'a Config,
}

impl Problem<'_> {
    pub fn validator(&self, resolution: f64) -> Result<MotionValidator<'_>> {
        MotionValidator::new(self.workspace, self.robot, resolution)
    }

    /// Errors unless both endpoints have the robot's dimension and are free.
    pub fn check(&self) -> Result<()> {
        let d = self.robot.config_dim();
        check_dim(d, self.start.dim())?;
        check_dim(d, self.goal.dim())?;
        let v = self.validator(self.robot.default_resolution())?;
        if !v.config_free(self.start.as_slice()) || !v.config_free(self.goal.as_slice()) {
            return Err(Error::InvalidProblem);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub found: bool,
    pub cost: Option<f64>,
    pub path: Vec<Config>,
    pub iterations: usize,
    pub nodes: usize,
    pub wall_ms: f64,
    pub sampler_kind: String,
    pub seed: u64,
    /// Iteration (1-based) at which a first solution appeared.
    #[serde(skip)]
    pub first_solution: Option<usize>,
    /// `(iteration, best cost)` each time the best cost improved.
    #[serde(skip)]
    pub cost_trace: Vec<(usize, f64)>,
    /// Kind of every sample drawn, in order.
    #[serde(skip)]
    pub samples: Vec<SampleKind>,
}

impl PlanResult {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Runs RRT* for up to `params.max_iterations` samples drawn from `source`
/// and returns the cheapest path into the goal ball.
pub fn plan(problem: &Problem, source: &mut dyn SampleSource, params: &PlannerParams) -> Result<PlanResult> {
    params.validate()?;
    problem.check()?;
    let t0 = Instant::now();
    let validator = problem.validator(params.resolution)?;
    let mut rng = rng_from_seed(params.seed);
    let mut tree = Tree::new(problem.start);
    let mut result = PlanResult {
        sampler_kind: source.kind().to_string(),
        seed: params.seed,
        ..PlanResult::default()
    };

    let in_goal = |p: &[f64]| distance(p, problem.goal.as_slice()) <= params.goal_radius;
    let mut goal_nodes: Vec<usize> = Vec::new();
    let mut best = (f64::INFINITY, NONE);
    if in_goal(problem.start.as_slice()) {
        goal_nodes.push(0);
        best = (0.0, 0);
        result.first_solution = Some(0);
        result.cost_trace.push((0, 0.0));
    }

    let mut it = 0;
    while it < params.max_iterations {
        let stop_now = best.1 != NONE
            && (params.stop_on_first || params.stop_cost.is_some_and(|t| best.0 <= t));
        if stop_now {
            break;
        }
        let ctx = SampleContext {
            iteration: it,
            best_cost: best.0,
            start: problem.start,
            goal: problem.goal,
            goal_radius: params.goal_radius,
        };
        let (x_rand, kind) = source.sample(&ctx, &mut rng)?;
        check_dim(tree.dim(), x_rand.dim())?;
        result.samples.push(kind);
        it += 1;
        if let Some(new) = rrt_star_step(&mut tree, x_rand.as_slice(), params, &validator) {
            if in_goal(tree.point(new)) {
                goal_nodes.push(new);
            }
        }
        let mut cur = (f64::INFINITY, NONE);
        for &g in &goal_nodes {
            if tree.cost(g) < cur.0 {
                cur = (tree.cost(g), g);
            }
        }
        if cur.0 < best.0 {
            if best.1 == NONE {
                result.first_solution = Some(it);
            }
            result.cost_trace.push((it, cur.0));
        }
        best = cur;
    }

    debug_assert!(tree.check_invariants().is_ok());
    result.iterations = it;
    result.nodes = tree.len();
    if best.1 != NONE {
        result.found = true;
        result.cost = Some(best.0);
        result.path = tree.path_to(best.1);
    }
    result.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}
