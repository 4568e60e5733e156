//! Shared controller types, configuration and the seeded randomness contract.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::halton::SplineDegree;

/// Deterministic, serializable random stream.
pub type RngStream = ChaCha8Rng;

/// Returns the random stream identified by `(seed, stream_id)`.
///
/// ChaCha8 is counter based, so streams are reproducible on every platform and
/// distinct stream ids never overlap.
pub fn seeded_rng(seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream id for the noise batch of `plan` at controller `iteration`.
pub fn noise_stream_id(iteration: u64, plan: usize) -> u64 {
    (iteration << 20) | (plan as u64 & 0xF_FFFF)
}

/// `sum_t gamma^t * c_t`.
pub fn discounted_cost(step_costs: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("discount {gamma} outside [0, 1]")));
    }
    let mut total = 0.0;
    let mut discount = 1.0;
    for &c in step_costs {
        if !c.is_finite() {
            return Err(Error::NonFinite("step cost"));
        }
        total += discount * c;
        discount *= gamma;
    }
    Ok(total)
}

/// Bounds on the importance-sampling normalizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBounds {
    pub lower: f64,
    pub upper: f64,
}

impl EtaBounds {
    pub fn for_samples(samples: usize) -> Self {
        EtaBounds {
            lower: 0.05 * samples as f64,
            upper: 0.10 * samples as f64,
        }
    }

    pub fn contains(&self, eta: f64) -> bool {
        eta >= self.lower && eta <= self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EtaBounds {
            lower: self.lower * factor,
            upper: self.upper * factor,
        }
    }
}

fn default_gamma() -> f64 {
    0.95
}
fn default_alpha() -> f64 {
    0.8
}
fn default_beta() -> f64 {
    1.0
}
fn default_num_plans() -> usize {
    1
}
fn default_samples() -> usize {
    100
}
fn default_horizon() -> usize {
    20
}
fn default_dt() -> f64 {
    0.04
}
fn default_max_temp_iters() -> usize {
    100
}
fn default_penalty() -> f64 {
    1e6
}
fn default_knots() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Initial number of plan slots. The plan interface decides the live count.
    #[serde(default = "default_num_plans")]
    pub num_plans: usize,
    #[serde(default = "default_samples")]
    pub samples_per_plan: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_alpha")]
    pub alpha_u: f64,
    #[serde(default = "default_beta")]
    pub beta_init: f64,
    /// Defaults to `[0.05 K, 0.10 K]` when absent.
    #[serde(default)]
    pub eta_bounds: Option<EtaBounds>,
    #[serde(default)]
    pub noise_scale: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_temp_iters")]
    pub max_temp_iters: usize,
    /// Cost assigned to rollouts that produce a non-finite state.
    #[serde(default = "default_penalty")]
    pub rollout_penalty: f64,
    #[serde(default = "default_knots")]
    pub num_knots: usize,
    #[serde(default)]
    pub spline_degree: SplineDegree,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            num_plans: default_num_plans(),
            samples_per_plan: default_samples(),
            horizon: default_horizon(),
            dt: default_dt(),
            gamma: default_gamma(),
            alpha_u: default_alpha(),
            beta_init: default_beta(),
            eta_bounds: None,
            noise_scale: vec![0.5, 0.5],
            seed: 0,
            max_temp_iters: default_max_temp_iters(),
            rollout_penalty: default_penalty(),
            num_knots: default_knots(),
            spline_degree: SplineDegree::default(),
        }
    }
}

impl ControllerConfig {
    pub fn eta_bounds(&self) -> EtaBounds {
        self.eta_bounds
            .unwrap_or_else(|| EtaBounds::for_samples(self.samples_per_plan))
    }

    pub fn control_dim(&self) -> usize {
        self.noise_scale.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_plans == 0 || self.samples_per_plan == 0 || self.horizon == 0 {
            return Err(Error::config("N, K and T must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.alpha_u) {
            return Err(Error::config("alpha_u must lie in [0, 1]"));
        }
        if !(self.beta_init > 0.0 && self.beta_init.is_finite()) {
            return Err(Error::config("beta_init must be positive"));
        }
        let b = self.eta_bounds();
        let nk = (self.num_plans * self.samples_per_plan) as f64;
        if !(b.lower > 0.0 && b.lower < b.upper && b.upper <= nk) {
            return Err(Error::config(format!(
                "eta bounds [{}, {}] must satisfy 0 < lower < upper <= N*K = {nk}",
                b.lower, b.upper
            )));
        }
        if self.noise_scale.is_empty() || self.noise_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::config("noise_scale must be non-empty and positive"));
        }
        if self.max_temp_iters == 0 {
            return Err(Error::config("max_temp_iters must be positive"));
        }
        if self.num_knots < 2 || self.num_knots > self.horizon {
            return Err(Error::config("num_knots must lie in [2, T]"));
        }
        Ok(())
    }
}

/// A `T x d_u` control sequence stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    horizon: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ControlSequence {
    pub fn zeros(horizon: usize, dim: usize) -> Self {
        ControlSequence {
            horizon,
            dim,
            data: vec![0.0; horizon * dim],
        }
    }

    pub fn constant(horizon: usize, value: &[f64]) -> Self {
        let mut data = Vec::with_capacity(horizon * value.len());
        for _ in 0..horizon {
            data.extend_from_slice(value);
        }
        ControlSequence {
            horizon,
            dim: value.len(),
            data,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("ragged control rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control sequence"));
        }
        Ok(ControlSequence {
            horizon: rows.len(),
            dim,
            data,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.dim + d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &ControlSequence) -> bool {
        self.horizon == other.horizon && self.dim == other.dim
    }
}

/// Sampled sequences of one controller iteration together with their costs.
///
/// Sample `k` of plan `i` lives at index `i * K + k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RolloutBatch {
    pub samples_per_plan: usize,
    pub sequences: Vec<ControlSequence>,
    /// Tracked keypoint (robot or end effector) after every step.
    pub trajectories: Vec<Vec<[f64; 3]>>,
    /// Row-major `N*K x T`.
    pub step_costs: Vec<f64>,
    pub total_costs: Vec<f64>,
    /// Samples whose rollout produced a non-finite state.
    pub penalized: Vec<usize>,
}

impl RolloutBatch {
    pub fn num_plans(&self) -> usize {
        self.sequences.len() / self.samples_per_plan.max(1)
    }

    pub fn horizon(&self) -> usize {
        self.sequences.first().map(|s| s.horizon()).unwrap_or(0)
    }

    /// Index range of plan `i`'s samples.
    pub fn plan_range(&self, plan: usize) -> std::ops::Range<usize> {
        plan * self.samples_per_plan..(plan + 1) * self.samples_per_plan
    }

    pub fn step_cost_row(&self, sample: usize) -> &[f64] {
        let t = self.horizon();
        &self.step_costs[sample * t..(sample + 1) * t]
    }
}

/// Controller state of one alternative plan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanModeSlot {
    pub plan_index: usize,
    pub mean: ControlSequence,
    pub beta: f64,
    pub eta: f64,
    pub rho: f64,
    pub cost_spec: CostSpec,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn discounted_cost_examples() {
        assert_eq!(discounted_cost(&[1.0, 1.0, 1.0], 1.0).unwrap(), 3.0);
        assert_eq!(discounted_cost(&[1.0, 1.0, 1.0], 0.0).unwrap(), 1.0);
        assert_eq!(discounted_cost(&[2.0, 4.0, 8.0], 0.5).unwrap(), 6.0);
    }

    #[test]
    fn discounted_cost_rejects_non_finite() {
        assert!(discounted_cost(&[1.0, f64::NAN], 0.9).is_err());
        assert!(discounted_cost(&[1.0, f64::INFINITY], 0.9).is_err());
        assert!(discounted_cost(&[1.0], 1.5).is_err());
    }

    #[test]
    fn rng_is_deterministic() {
        let mut a = seeded_rng(42, 0);
        let mut b = seeded_rng(42, 0);
        for _ in 0..100 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn rng_streams_differ() {
        // Golden first draws.
        let first0 = seeded_rng(42, 0).random::<u64>();
        let first1 = seeded_rng(42, 1).random::<u64>();
        assert_ne!(first0, first1);
        assert_eq!(first0, GOLDEN_42_0);
        assert_eq!(first1, GOLDEN_42_1);
    }

    const GOLDEN_42_0: u64 = 12578764544318200737;
    const GOLDEN_42_1: u64 = 13222472167927179408;

    #[test]
    fn rng_state_round_trips() {
        let mut rng = seeded_rng(42, 0);
        for _ in 0..37 {
            rng.random::<f64>();
        }
        let saved = serde_json::to_string(&rng).unwrap();
        let mut restored: RngStream = serde_json::from_str(&saved).unwrap();
        for _ in 0..50 {
            assert_eq!(rng.random::<u64>(), restored.random::<u64>());
        }
    }

    #[test]
    fn default_eta_bounds() {
        let cfg = ControllerConfig::default();
        let b = cfg.eta_bounds();
        assert_eq!(b.lower, 5.0);
        assert_eq!(b.upper, 10.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_eta_bounds() {
        let cfg = ControllerConfig {
            eta_bounds: Some(EtaBounds {
                lower: 10.0,
                upper: 5.0,
            }),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ControllerConfig {
            eta_bounds: Some(EtaBounds {
                lower: 10.0,
                upper: 500.0,
            }),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn control_sequence_rows() {
        let s = ControlSequence::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.horizon(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert!(ControlSequence::from_rows(&[vec![1.0], vec![f64::NAN]]).is_err());
        assert!(ControlSequence::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn discounted_cost_is_linear(
                costs in proptest::collection::vec(0.0f64..100.0, 1..30),
                gamma in 0.0f64..=1.0,
                a in 0.0f64..10.0,
            ) {
                let base = discounted_cost(&costs, gamma).unwrap();
                let scaled: Vec<f64> = costs.iter().map(|c| a * c).collect();
                let s = discounted_cost(&scaled, gamma).unwrap();
                prop_assert!((s - a * base).abs() <= 1e-9 * (1.0 + s.abs()));
            }
        }
    }
}
