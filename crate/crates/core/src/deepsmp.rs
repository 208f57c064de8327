//! The DeepSMP planner: neural sampling for the first `n_limit` iterations,
//! uniform sampling afterwards, both feeding the same RRT* tree.

use serde::{Deserialize, Serialize};

use crate::cae::encode;
use crate::error::{Error, Result};
use crate::geometry::{Config, PointCloud};
use crate::neural::{Mlp, Mode};
use crate::rng::{derive_seed, rng_from_seed, PlanRng};
use crate::sampler::{next_sample, TrainingPath};
use crate::smp::{plan, PlanResult, PlannerParams, Problem, SampleContext, SampleKind, SampleSource, UniformSampler};

const NEURAL_STREAM: u64 = 0x6e65_7572;

/// Frozen sampler plus the workspace encoding it is conditioned on.
#[derive(Clone, Debug)]
pub struct NeuralSampler {
    model: Mlp,
    latent: Vec<f64>,
}

impl NeuralSampler {
    /// The encoder and cloud are required exactly when the sampler expects a
    /// workspace encoding.
    pub fn new(sampler: &Mlp, encoder: Option<&Mlp>, cloud: Option<&PointCloud>) -> Result<Self> {
        let d = sampler.output_size();
        let latent_size = sampler
            .input_size()
            .checked_sub(2 * d)
            .ok_or_else(|| Error::Config("sampler input narrower than two configurations".into()))?;
        let latent = if latent_size == 0 {
            Vec::new()
        } else {
            let (enc, pc) = match (encoder, cloud) {
                (Some(e), Some(c)) => (e, c),
                (None, _) => return Err(Error::Config("sampler needs an encoder model".into())),
                (_, None) => return Err(Error::Config("sampler needs the workspace point cloud".into())),
            };
            if enc.output_size() != latent_size {
                return Err(Error::Config(format!(
                    "encoder produces {} features, sampler expects {latent_size}",
                    enc.output_size()
                )));
            }
            encode(enc, pc)?
        };
        Ok(Self::with_latent(sampler, latent))
    }

    pub fn with_latent(sampler: &Mlp, latent: Vec<f64>) -> Self {
        NeuralSampler {
            model: sampler.clone().with_mode(Mode::EvalStochastic),
            latent,
        }
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn latent(&self) -> &[f64] {
        &self.latent
    }

    pub fn config_dim(&self) -> usize {
        self.model.output_size()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepSmpConfig {
    /// Planner settings; `max_iterations` is the total budget `n`.
    pub params: PlannerParams,
    pub n_limit: usize,
    /// Lifts the `n_limit <= n / 2` rule.
    pub allow_long_neural_phase: bool,
}

impl DeepSmpConfig {
    pub fn new(params: PlannerParams, n_limit: usize) -> Self {
        DeepSmpConfig {
            params,
            n_limit,
            allow_long_neural_phase: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.params.max_iterations;
        if self.n_limit == 0 {
            return Ok(());
        }
        if self.n_limit >= n {
            return Err(Error::InvalidArgument(format!("n_limit {} must be below n = {n}", self.n_limit)));
        }
        if !self.allow_long_neural_phase && self.n_limit > n / 2 {
            return Err(Error::InvalidArgument(format!(
                "n_limit {} exceeds half of n = {n}",
                self.n_limit
            )));
        }
        Ok(())
    }
}

/// One neural proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralStep {
    pub iteration: usize,
    /// 0 for the start-to-goal stream, 1 for the reverse stream.
    pub stream: usize,
    pub input: Config,
    pub output: Config,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeuralTrace {
    pub steps: Vec<NeuralStep>,
}

struct Stream {
    current: Config,
    origin: Config,
    target: Config,
}

struct HybridSource<'a> {
    neural: &'a NeuralSampler,
    n_limit: usize,
    uniform: UniformSampler,
    rng: PlanRng,
    streams: Vec<Stream>,
    kind: &'static str,
    trace: NeuralTrace,
}

impl SampleSource for HybridSource<'_> {
    fn kind(&self) -> &'static str {
        self.kind
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn rand::RngCore) -> Result<(Config, SampleKind)> {
        if ctx.iteration >= self.n_limit {
            return Ok(self.uniform.draw(ctx.goal, rng));
        }
        let k = ctx.iteration % self.streams.len();
        let s = &mut self.streams[k];
        let x = next_sample(&self.neural.model, &self.neural.latent, &s.current, &s.target, &mut self.rng)?;
        self.trace.steps.push(NeuralStep {
            iteration: ctx.iteration,
            stream: k,
            input: s.current.clone(),
            output: x.clone(),
        });
        s.current = if x.distance(&s.target) <= ctx.goal_radius {
            s.origin.clone()
        } else {
            x.clone()
        };
        Ok((x, SampleKind::Neural))
    }
}

fn run(problem: &Problem, neural: &NeuralSampler, cfg: &DeepSmpConfig, bidirectional: bool) -> Result<(PlanResult, NeuralTrace)> {
    cfg.validate()?;
    if neural.config_dim() != problem.robot.config_dim() {
        return Err(Error::Config(format!(
            "sampler outputs {} coordinates, robot {} needs {}",
            neural.config_dim(),
            problem.robot.name(),
            problem.robot.config_dim()
        )));
    }
    let forward = Stream {
        current: problem.start.clone(),
        origin: problem.start.clone(),
        target: problem.goal.clone(),
    };
    let mut streams = vec![forward];
    if bidirectional {
        streams.push(Stream {
            current: problem.goal.clone(),
            origin: problem.goal.clone(),
            target: problem.start.clone(),
        });
    }
    let mut source = HybridSource {
        neural,
        n_limit: cfg.n_limit,
        uniform: UniformSampler::default(),
        rng: rng_from_seed(derive_seed(cfg.params.seed, NEURAL_STREAM, 0)),
        streams,
        kind: if bidirectional { "deepsmp-bi" } else { "deepsmp" },
        trace: NeuralTrace::default(),
    };
    let result = plan(problem, &mut source, &cfg.params)?;
    Ok((result, source.trace))
}

/// Neural samples chained from the start towards the goal, reset to the
/// start whenever one lands in the goal ball; uniform samples once
/// `n_limit` iterations have passed.
pub fn deepsmp_plan(problem: &Problem, neural: &NeuralSampler, cfg: &DeepSmpConfig) -> Result<PlanResult> {
    Ok(run(problem, neural, cfg, false)?.0)
}

pub fn deepsmp_plan_traced(problem: &Problem, neural: &NeuralSampler, cfg: &DeepSmpConfig) -> Result<(PlanResult, NeuralTrace)> {
    run(problem, neural, cfg, false)
}

/// As [`deepsmp_plan`] with a second neural stream running from the goal
/// towards the start; the two streams alternate every iteration.
pub fn deepsmp_plan_bidirectional(problem: &Problem, neural: &NeuralSampler, cfg: &DeepSmpConfig) -> Result<PlanResult> {
    Ok(run(problem, neural, cfg, true)?.0)
}

pub fn deepsmp_plan_bidirectional_traced(
    problem: &Problem,
    neural: &NeuralSampler,
    cfg: &DeepSmpConfig,
) -> Result<(PlanResult, NeuralTrace)> {
    run(problem, neural, cfg, true)
}

/// Node count of the longest training path.
pub fn compute_n_limit(paths: &[TrainingPath]) -> Result<usize> {
    paths
        .iter()
        .map(|p| p.path.len())
        .max()
        .ok_or_else(|| Error::InvalidArgument("no training paths".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AabbObstacle, RobotModel, Workspace};
    use crate::sampler::SamplerSpec;

    fn model(latent: usize, seed: u64) -> Mlp {
        SamplerSpec::new(2, latent).with_hidden(vec![16; 11]).unwrap().build(seed).unwrap()
    }

    fn params(n: usize, seed: u64) -> PlannerParams {
        let mut p = PlannerParams::for_robot(&RobotModel::Point2);
        p.max_iterations = n;
        p.seed = seed;
        p
    }

    fn strip(mut r: PlanResult) -> PlanResult {
        r.wall_ms = 0.0;
        r.sampler_kind.clear();
        r
    }

    #[test]
    fn zero_limit_matches_plain_rrt_star() {
        let wall = AabbObstacle::new(vec![0.0, 0.0], vec![1.0, 10.0]).unwrap();
        let ws = Workspace::new(2, vec![wall], 0).unwrap();
        let (s, g) = (Config::new([-10.0, 0.0]), Config::new([10.0, 0.0]));
        let pr = Problem { workspace: &ws, robot: RobotModel::Point2, start: &s, goal: &g };
        let ns = NeuralSampler::with_latent(&model(0, 1), vec![]);
        for seed in 0..3 {
            let p = params(1500, seed);
            let cfg = DeepSmpConfig::new(p, 0);
            let plain = plan(&pr, &mut UniformSampler::default(), &p).unwrap();
            let uni = deepsmp_plan(&pr, &ns, &cfg).unwrap();
            let bi = deepsmp_plan_bidirectional(&pr, &ns, &cfg).unwrap();
            assert_eq!(uni.sampler_kind, "deepsmp");
            assert_eq!(bi.sampler_kind, "deepsmp-bi");
            assert_eq!(strip(plain.clone()), strip(uni));
            assert_eq!(strip(plain), strip(bi));
        }
    }

    #[test]
    fn phase_boundary_and_goal_reset() {
        let ws = Workspace::empty(2).unwrap();
        let (s, g) = (Config::new([-5.0, 0.0]), Config::new([5.0, 0.0]));
        let pr = Problem { workspace: &ws, robot: RobotModel::Point2, start: &s, goal: &g };
        let ns = NeuralSampler::with_latent(&model(0, 2), vec![]);
        let mut p = params(400, 3);
        // A wide goal ball so random outputs land in it now and then.
        p.goal_radius = 12.0;
        p.stop_on_first = false;
        let cfg = DeepSmpConfig::new(p, 150);
        for bidirectional in [false, true] {
            let (r, trace) = run(&pr, &ns, &cfg, bidirectional).unwrap();
            assert_eq!(r.iterations, 400);
            assert!(r.samples[..150].iter().all(|k| *k == SampleKind::Neural));
            assert!(r.samples[150..].iter().all(|k| *k != SampleKind::Neural));
            assert_eq!(trace.steps.len(), 150);
            let streams = if bidirectional { 2 } else { 1 };
            let ends = |k: usize| if k == 0 { (&s, &g) } else { (&g, &s) };
            let mut resets = 0;
            for k in 0..streams {
                let steps: Vec<&NeuralStep> = trace.steps.iter().filter(|st| st.stream == k).collect();
                let (o, t) = ends(k);
                assert_eq!(&steps[0].input, o);
                for w in steps.windows(2) {
                    if w[0].output.distance(t) <= p.goal_radius {
                        assert_eq!(&w[1].input, o);
                        resets += 1;
                    } else {
                        assert_eq!(w[1].input, w[0].output);
                    }
                }
            }
            assert!(resets > 0);
            assert!(trace.steps.iter().all(|st| st.output.0.iter().all(|v| v.abs() <= 20.0)));
        }
    }

    #[test]
    fn config_rules() {
        let p = params(1000, 0);
        assert!(DeepSmpConfig::new(p, 0).validate().is_ok());
        assert!(DeepSmpConfig::new(p, 500).validate().is_ok());
        assert!(DeepSmpConfig::new(p, 501).validate().is_err());
        let mut relaxed = DeepSmpConfig::new(p, 900);
        relaxed.allow_long_neural_phase = true;
        assert!(relaxed.validate().is_ok());
        relaxed.n_limit = 1000;
        assert!(relaxed.validate().is_err());
    }

    #[test]
    fn missing_inputs_are_config_errors() {
        let m = model(3, 0);
        assert!(matches!(NeuralSampler::new(&m, None, None), Err(Error::Config(_))));
        assert!(NeuralSampler::new(&model(0, 0), None, None).is_ok());
        let ns = NeuralSampler::with_latent(&m, vec![0.0; 3]);
        let ws = Workspace::empty(3).unwrap();
        let (s, g) = (Config::new([0.0, 0.0, 0.0]), Config::new([5.0, 0.0, 0.0]));
        let pr = Problem { workspace: &ws, robot: RobotModel::Point3, start: &s, goal: &g };
        assert!(matches!(deepsmp_plan(&pr, &ns, &DeepSmpConfig::new(params(10, 0), 0)), Err(Error::Config(_))));
    }

    #[test]
    fn n_limit_is_longest_path() {
        let path = |n: usize| TrainingPath {
            workspace_seed: 0,
            path: (0..n).map(|i| Config::new([i as f64, 0.0])).collect(),
        };
        assert_eq!(compute_n_limit(&[path(3), path(7), path(5)]).unwrap(), 7);
        assert_eq!(compute_n_limit(&[path(2)]).unwrap(), 2);
        assert!(compute_n_limit(&[]).is_err());
    }
}
