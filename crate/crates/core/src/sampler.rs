//! Hug as a Metropolis–Hastings kernel for a target density `exp(l(x))`.
//!
//! The log density `l` is supplied as a single-constraint [`ConstraintMap`]:
//! Hug reflects on the level sets of `l`. With an isotropic Gaussian velocity
//! the velocity terms of the acceptance ratio cancel because reflections keep
//! `||v||` fixed, so `log r = l(x_K) - l(x_0)`.
//!
//! Hug alone only moves within (a neighbourhood of) a level set. Chains can
//! interleave a plain symmetric random-walk Metropolis move to change level;
//! that move is a generic stand-in, not a specific level-jumping kernel.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::constraint::ConstraintMap;
use crate::error::{check_len, HugError, Result};
use crate::hug::{hug_trajectory, HugParams, HugStepper, PhaseState};
use crate::Vector;

/// `v ~ N(0, sigma^2 I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityDistribution {
    pub sigma: f64,
}

impl VelocityDistribution {
    pub fn isotropic(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(HugError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(VelocityDistribution { sigma })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| self.sigma * rng.sample::<f64, _>(StandardNormal))
    }

    /// Log density up to an additive constant. Symmetric in `v`.
    pub fn log_density(&self, v: &Vector) -> f64 {
        -0.5 * v.norm_squared() / (self.sigma * self.sigma)
    }
}

/// Full acceptance log-ratio `l(x_K) - l(x_0) + log q(v_K) - log q(v_0)`.
pub fn log_ratio_general<M: ConstraintMap + ?Sized>(
    target: &M,
    start: &PhaseState,
    end: &PhaseState,
    q: &VelocityDistribution,
) -> f64 {
    target.value(&end.x)[0] - target.value(&start.x)[0] + q.log_density(&end.v) - q.log_density(&start.v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutcome {
    /// Chain state after the accept/reject step.
    pub x: Vector,
    pub accepted: bool,
    pub log_r: f64,
    /// The proposal hit singular geometry and was rejected.
    pub failed: bool,
    /// Largest `|l(x_k) - l(x_0)|` along the proposal.
    pub level_drift: f64,
    /// `||x_0 - x'||` after re-running Hug from `(x_K, -v_K)`, when requested.
    pub reversibility_error: Option<f64>,
}

fn check_target<M: ConstraintMap + ?Sized>(target: &M) -> Result<()> {
    if target.dim_m() != 1 {
        return Err(HugError::InvalidParameter(format!(
            "a log density is a single constraint, got m = {}",
            target.dim_m()
        )));
    }
    Ok(())
}

/// One Hug Metropolis–Hastings transition from `x`.
pub fn hug_kernel<M, R>(
    target: &M,
    x: &Vector,
    params: HugParams,
    q: &VelocityDistribution,
    rng: &mut R,
    check_reversibility: bool,
) -> Result<KernelOutcome>
where
    M: ConstraintMap + ?Sized,
    R: Rng + ?Sized,
{
    check_target(target)?;
    check_len("x", target.dim_n(), x.len())?;
    let v0 = q.sample(rng, x.len());
    let u: f64 = rng.random();
    let l0 = target.value(x)[0];

    let mut drift = 0.0_f64;
    let mut end = PhaseState::new(x.clone(), v0.clone());
    for rec in HugStepper::new(target, end.clone(), params)? {
        match rec {
            Ok(rec) => {
                drift = drift.max((target.value(&rec.state.x)[0] - l0).abs());
                end = rec.state;
            }
            Err(e) if e.is_singular() => {
                return Ok(KernelOutcome {
                    x: x.clone(),
                    accepted: false,
                    log_r: f64::NEG_INFINITY,
                    failed: true,
                    level_drift: drift,
                    reversibility_error: None,
                });
            }
            Err(e) => return Err(e),
        }
    }

    // velocity terms cancel: ||v_K|| = ||v_0||
    let log_r = target.value(&end.x)[0] - l0;
    let reversibility_error = if check_reversibility {
        let back = hug_trajectory(target, &end.flipped(), params)?;
        Some((&back.last().x - x).norm())
    } else {
        None
    };
    let accepted = log_r >= 0.0 || u.ln() < log_r;
    Ok(KernelOutcome {
        x: if accepted { end.x } else { x.clone() },
        accepted,
        log_r,
        failed: false,
        level_drift: drift,
        reversibility_error,
    })
}

/// Symmetric Gaussian random-walk Metropolis step with scale `scale`.
pub fn random_walk_step<M, R>(target: &M, x: &Vector, scale: f64, rng: &mut R) -> (Vector, bool)
where
    M: ConstraintMap + ?Sized,
    R: Rng + ?Sized,
{
    let prop = x + Vector::from_fn(x.len(), |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let log_r = target.value(&prop)[0] - target.value(x)[0];
    let u: f64 = rng.random();
    if log_r >= 0.0 || u.ln() < log_r {
        (prop, true)
    } else {
        (x.clone(), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub params: HugParams,
    pub velocity: VelocityDistribution,
    /// Scale of an interleaved random-walk move; `None` runs Hug only.
    pub random_walk: Option<f64>,
    pub check_reversibility: bool,
}

impl ChainConfig {
    pub fn new(params: HugParams, velocity: VelocityDistribution) -> Self {
        ChainConfig {
            params,
            velocity,
            random_walk: None,
            check_reversibility: false,
        }
    }

    pub fn with_random_walk(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(HugError::InvalidParameter(format!(
                "random-walk scale must be positive, got {scale}"
            )));
        }
        self.random_walk = Some(scale);
        Ok(self)
    }

    pub fn with_reversibility_check(mut self, on: bool) -> Self {
        self.check_reversibility = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainRecord {
    /// Chain state after each iteration.
    pub states: Vec<Vector>,
    pub accept_flags: Vec<bool>,
    pub log_r: Vec<f64>,
    pub failures: usize,
    pub random_walk_accepts: usize,
    pub max_level_drift: f64,
    pub max_reversibility_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub iterations: usize,
    pub acceptance_rate: f64,
    pub hug_failures: usize,
    pub random_walk_acceptance_rate: Option<f64>,
    pub mean: Vec<f64>,
    pub second_moments: Vec<f64>,
    pub max_level_drift: f64,
}

impl ChainRecord {
    pub fn acceptance_rate(&self) -> f64 {
        if self.accept_flags.is_empty() {
            return 0.0;
        }
        self.accept_flags.iter().filter(|&&a| a).count() as f64 / self.accept_flags.len() as f64
    }

    /// Per-coordinate `E[x_i^2]` over the recorded states after `burn_in`.
    pub fn second_moments(&self, burn_in: usize) -> Vec<f64> {
        self.coordinate_mean(burn_in, |c| c * c)
    }

    pub fn mean(&self, burn_in: usize) -> Vec<f64> {
        self.coordinate_mean(burn_in, |c| c)
    }

    fn coordinate_mean(&self, burn_in: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let kept = &self.states[burn_in.min(self.states.len())..];
        let n = self.states.first().map(|s| s.len()).unwrap_or(0);
        let mut acc = vec![0.0; n];
        for s in kept {
            for (a, c) in acc.iter_mut().zip(s.iter()) {
                *a += g(*c);
            }
        }
        let count = kept.len().max(1) as f64;
        acc.into_iter().map(|a| a / count).collect()
    }

    pub fn summary(&self, config: &ChainConfig) -> ChainSummary {
        let iters = self.states.len();
        ChainSummary {
            iterations: iters,
            acceptance_rate: self.acceptance_rate(),
            hug_failures: self.failures,
            random_walk_acceptance_rate: config
                .random_walk
                .map(|_| self.random_walk_accepts as f64 / iters.max(1) as f64),
            mean: self.mean(0),
            second_moments: self.second_moments(0),
            max_level_drift: self.max_level_drift,
        }
    }

    /// Columns `iteration,x_1..x_n,accepted,log_r`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states.first().map(|s| s.len()).unwrap_or(0);
        writeln!(out, "#schema=hug-chain/1")?;
        let mut header = vec!["iteration".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("accepted".into());
        header.push("log_r".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, ((s, a), l)) in self.states.iter().zip(&self.accept_flags).zip(&self.log_r).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(s.iter().map(|c| c.to_string()));
            row.push(u8::from(*a).to_string());
            row.push(l.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Random stream for one iteration of one chain.
pub fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

/// Run a chain of `iterations` transitions. Each iteration draws from its own
/// stream of the seeded generator, so a chain is reproducible from its seed.
/// Failed proposals are counted as rejections and never stop the chain.
pub fn run_chain<M: ConstraintMap + ?Sized>(
    target: &M,
    config: &ChainConfig,
    x_init: &Vector,
    iterations: usize,
    seed: u64,
) -> Result<ChainRecord> {
    check_target(target)?;
    check_len("x_init", target.dim_n(), x_init.len())?;
    let mut rec = ChainRecord {
        states: Vec::with_capacity(iterations),
        accept_flags: Vec::with_capacity(iterations),
        log_r: Vec::with_capacity(iterations),
        ..Default::default()
    };
    let mut x = x_init.clone();
    for it in 0..iterations {
        let mut rng = iteration_rng(seed, it as u64);
        match hug_kernel(target, &x, config.params, &config.velocity, &mut rng, config.check_reversibility) {
            Ok(out) => {
                rec.failures += usize::from(out.failed);
                rec.max_level_drift = rec.max_level_drift.max(out.level_drift);
                if let Some(e) = out.reversibility_error {
                    rec.max_reversibility_error = Some(rec.max_reversibility_error.unwrap_or(0.0).max(e));
                }
                rec.accept_flags.push(out.accepted);
                rec.log_r.push(out.log_r);
                x = out.x;
            }
            Err(_) => {
                rec.failures += 1;
                rec.accept_flags.push(false);
                rec.log_r.push(f64::NAN);
            }
        }
        if let Some(scale) = config.random_walk {
            let (next, acc) = random_walk_step(target, &x, scale, &mut rng);
            rec.random_walk_accepts += usize::from(acc);
            x = next;
        }
        rec.states.push(x.clone());
    }
    Ok(rec)
}

/// Independent chains, one per seed, run in parallel.
pub fn run_chains<M: ConstraintMap + ?Sized>(
    target: &M,
    config: &ChainConfig,
    x_init: &Vector,
    iterations: usize,
    seeds: &[u64],
) -> Result<Vec<ChainRecord>> {
    seeds
        .par_iter()
        .map(|&s| run_chain(target, config, x_init, iterations, s))
        .collect()
}
