//! Flow-matching sampling and losses over pluggable velocity fields.
//!
//! Continuous states are `[slots, steps, 2]` tensors integrated with forward
//! Euler; discrete states are token sequences evolved by a categorical Markov
//! chain whose per-token transition distributions come from the field. The
//! two can be co-generated, each reading the joint state at the start of
//! every step.
//!
//! Randomness is drawn from one counter-based stream per token index, so a
//! coupled sampler whose field ignores the continuous part consumes exactly
//! the same draws as the discrete-only sampler.

use ndarray::{Array2, Array3, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::FlowError;
use crate::geometry::Pose2;
use crate::seed::stream;

/// Maximum robots per object.
pub const B_MAX: usize = 3;
pub const DEFAULT_HORIZON: usize = 16;
pub const DEFAULT_STEPS: usize = 100;
/// Allowed deviation of a transition distribution's total mass from 1.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;
/// Probability floor applied before taking logs in the cross-entropy.
pub const CE_FLOOR: f64 = 1e-30;

pub type ContinuousState = Array3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    Mask,
    /// Pixel coordinate in `1..=w`.
    Value(u16),
}

impl Token {
    /// Category index: 0 is the mask, `k` is `Value(k)`.
    pub fn category(self) -> usize {
        match self {
            Token::Mask => 0,
            Token::Value(k) => k as usize,
        }
    }

    pub fn from_category(c: usize) -> Token {
        if c == 0 {
            Token::Mask
        } else {
            Token::Value(c as u16)
        }
    }
}

pub type DiscreteState = Vec<Token>;

/// The mask-base discrete state: `2·B_MAX` mask tokens.
pub fn mask_state() -> DiscreteState {
    vec![Token::Mask; 2 * B_MAX]
}

/// Policy conditioning: object image, requested transform, robot budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub image: Array2<u8>,
    pub transform: Pose2,
    pub budget: usize,
}

impl Condition {
    pub fn new(image: Array2<u8>, transform: Pose2, budget: usize) -> Self {
        Self { image, transform, budget }
    }

    /// An all-empty `w×w` image with identity transform and full budget.
    pub fn blank(w: usize) -> Self {
        Self::new(Array2::zeros((w, w)), Pose2::IDENTITY, B_MAX)
    }
}

pub trait ContinuousVelocity {
    fn velocity(&self, t: f64, x: &ContinuousState, k: &[Token], cond: &Condition) -> ContinuousState;
}

pub trait DiscreteVelocity {
    /// Number of categories, mask included (`w + 1`).
    fn categories(&self) -> usize;
    /// One probability vector over categories per token.
    fn transition(&self, t: f64, x: &ContinuousState, k: &[Token], cond: &Condition) -> Vec<Vec<f64>>;
}

fn check_time(t: f64) -> Result<(), FlowError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(FlowError::TimeOutOfRange(t))
    }
}

/// `(x1 − x0)·t + x0`.
pub fn interp_continuous(x0: &ContinuousState, x1: &ContinuousState, t: f64) -> Result<ContinuousState, FlowError> {
    check_time(t)?;
    if x0.shape() != x1.shape() {
        return Err(FlowError::Shape(format!("{:?} vs {:?}", x0.shape(), x1.shape())));
    }
    let mut out = x0.clone();
    Zip::from(&mut out).and(x1).for_each(|a, &b| *a += (b - *a) * t);
    Ok(out)
}

/// Each token takes `k1`'s value with probability `t`, else `k0`'s.
pub fn interp_discrete<R: Rng + ?Sized>(k0: &[Token], k1: &[Token], t: f64, rng: &mut R) -> Result<DiscreteState, FlowError> {
    check_time(t)?;
    if k0.len() != k1.len() {
        return Err(FlowError::Shape(format!("{} vs {} tokens", k0.len(), k1.len())));
    }
    Ok(k0
        .iter()
        .zip(k1)
        .map(|(&a, &b)| if rng.random::<f64>() < t { b } else { a })
        .collect())
}

fn euler_update<F: ContinuousVelocity + ?Sized>(
    field: &F,
    t: f64,
    dt: f64,
    x: &ContinuousState,
    k: &[Token],
    cond: &Condition,
) -> Result<ContinuousState, FlowError> {
    let v = field.velocity(t, x, k, cond);
    if v.shape() != x.shape() {
        return Err(FlowError::Shape(format!("velocity {:?} for state {:?}", v.shape(), x.shape())));
    }
    if v.iter().any(|a| !a.is_finite()) {
        return Err(FlowError::NonFiniteVelocity);
    }
    let mut next = x.clone();
    Zip::from(&mut next).and(&v).for_each(|a, &b| *a += b * dt);
    Ok(next)
}

struct TokenStreams(Vec<ChaCha8Rng>);

impl TokenStreams {
    fn new(seed: u64, n: usize) -> Self {
        Self((0..n as u64).map(|i| stream(seed, i)).collect())
    }
}

fn markov_update<F: DiscreteVelocity + ?Sized>(
    field: &F,
    t: f64,
    x: &ContinuousState,
    k: &[Token],
    cond: &Condition,
    streams: &mut TokenStreams,
) -> Result<DiscreteState, FlowError> {
    let dists = field.transition(t, x, k, cond);
    if dists.len() != k.len() {
        return Err(FlowError::Shape(format!("{} distributions for {} tokens", dists.len(), k.len())));
    }
    let cats = field.categories();
    let mut out = Vec::with_capacity(k.len());
    for (index, (p, rng)) in dists.iter().zip(streams.0.iter_mut()).enumerate() {
        let sum: f64 = p.iter().sum();
        if p.len() != cats || !sum.is_finite() || (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE || p.iter().any(|&q| q < 0.0) {
            return Err(FlowError::InvalidDistribution { index, sum });
        }
        let u: f64 = rng.random::<f64>() * sum;
        let mut acc = 0.0;
        let mut pick = None;
        for (c, &q) in p.iter().enumerate() {
            acc += q;
            if q > 0.0 && u < acc {
                pick = Some(c);
                break;
            }
        }
        // Rounding can leave `u` just past the accumulated mass; fall back to
        // the last category with support.
        let c = pick.unwrap_or_else(|| p.iter().rposition(|&q| q > 0.0).unwrap_or(0));
        out.push(Token::from_category(c));
    }
    Ok(out)
}

fn check_steps(steps: usize) -> Result<f64, FlowError> {
    if steps == 0 {
        Err(FlowError::ZeroSteps)
    } else {
        Ok(1.0 / steps as f64)
    }
}

/// Forward Euler from t=0 to 1. The field sees an all-mask token sequence.
pub fn sample_continuous<F: ContinuousVelocity + ?Sized>(
    field: &F,
    x0: &ContinuousState,
    steps: usize,
    cond: &Condition,
) -> Result<ContinuousState, FlowError> {
    let dt = check_steps(steps)?;
    let k = mask_state();
    let mut x = x0.clone();
    for n in 0..steps {
        x = euler_update(field, n as f64 * dt, dt, &x, &k, cond)?;
    }
    Ok(x)
}

/// Categorical Markov chain over `steps` transitions. The field sees an
/// empty continuous tensor.
pub fn sample_discrete<F: DiscreteVelocity + ?Sized>(
    field: &F,
    k0: &[Token],
    steps: usize,
    seed: u64,
    cond: &Condition,
) -> Result<DiscreteState, FlowError> {
    let dt = check_steps(steps)?;
    let x = ContinuousState::zeros((0, 0, 2));
    let mut streams = TokenStreams::new(seed, k0.len());
    let mut k = k0.to_vec();
    for n in 0..steps {
        k = markov_update(field, n as f64 * dt, &x, &k, cond, &mut streams)?;
    }
    Ok(k)
}

/// Joint generation: both updates read the state at the start of the step.
pub fn cogenerate<F: ContinuousVelocity + DiscreteVelocity + ?Sized>(
    field: &F,
    x0: &ContinuousState,
    k0: &[Token],
    steps: usize,
    seed: u64,
    cond: &Condition,
) -> Result<(ContinuousState, DiscreteState), FlowError> {
    let dt = check_steps(steps)?;
    let mut streams = TokenStreams::new(seed, k0.len());
    let mut x = x0.clone();
    let mut k = k0.to_vec();
    for n in 0..steps {
        let t = n as f64 * dt;
        let next_x = euler_update(field, t, dt, &x, &k, cond)?;
        let next_k = markov_update(field, t, &x, &k, cond, &mut streams)?;
        x = next_x;
        k = next_k;
    }
    Ok((x, k))
}

/// Mean squared error between predicted velocity and `x1 − x0`.
pub fn fm_loss_continuous(pred: &ContinuousState, x0: &ContinuousState, x1: &ContinuousState) -> Result<f64, FlowError> {
    if pred.shape() != x0.shape() || x0.shape() != x1.shape() {
        return Err(FlowError::Shape(format!(
            "{:?}, {:?}, {:?}",
            pred.shape(),
            x0.shape(),
            x1.shape()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    Zip::from(pred).and(x0).and(x1).for_each(|&p, &a, &b| {
        let d = p - (b - a);
        acc += d * d;
    });
    Ok(acc / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    pub value: f64,
    /// Tokens whose target probability fell below `CE_FLOOR`.
    pub clamped: usize,
}

/// Σ over tokens of −ln p(target).
pub fn fm_loss_discrete(pred: &[Vec<f64>], target: &[Token]) -> Result<CrossEntropy, FlowError> {
    if pred.len() != target.len() {
        return Err(FlowError::Shape(format!("{} distributions for {} targets", pred.len(), target.len())));
    }
    let mut value = 0.0;
    let mut clamped = 0;
    for (p, t) in pred.iter().zip(target) {
        let c = t.category();
        let q = *p.get(c).ok_or(FlowError::InvalidToken(c as u16))?;
        if q < CE_FLOOR {
            clamped += 1;
        }
        value -= q.max(CE_FLOOR).ln();
    }
    // −ln 1 is −0.0; report a clean zero.
    Ok(CrossEntropy { value: value.max(0.0), clamped })
}

/// Σ_j max(0, generated_j − allocated_j).
pub fn budget_loss(generated: &[usize], allocated: &[usize]) -> Result<f64, FlowError> {
    if generated.len() != allocated.len() {
        return Err(FlowError::Shape(format!("{} vs {} budgets", generated.len(), allocated.len())));
    }
    Ok(generated
        .iter()
        .zip(allocated)
        .map(|(&g, &a)| g.saturating_sub(a))
        .sum::<usize>() as f64)
}
