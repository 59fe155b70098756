//! Hug timestepping.
//!
//! One step from `(x, v)`:
//!
//! ```text
//! x_half = x + (delta/2) v
//! v'     = (I - 2 N(x_half)) v
//! x'     = x_half + (delta/2) v'
//! ```
//!
//! The map is explicit, volume preserving and time reversible, keeps `||v||`
//! fixed, and keeps the iterates close to the level set of the starting point.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintMap;
use crate::error::{check_len, HugError, Result};
use crate::projector::NormalFrame;
use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vector,
    pub v: Vector,
}

impl PhaseState {
    pub fn new(x: Vector, v: Vector) -> Self {
        PhaseState { x, v }
    }

    pub fn from_slices(x: &[f64], v: &[f64]) -> Self {
        PhaseState {
            x: Vector::from_column_slice(x),
            v: Vector::from_column_slice(v),
        }
    }

    /// Same position, reversed velocity.
    pub fn flipped(&self) -> Self {
        PhaseState {
            x: self.x.clone(),
            v: -&self.v,
        }
    }

    pub(crate) fn check<M: ConstraintMap + ?Sized>(&self, map: &M) -> Result<()> {
        check_len("x", map.dim_n(), self.x.len())?;
        check_len("v", map.dim_n(), self.v.len())
    }
}

/// Stepsize and number of steps.
///
/// `steps = 0` is accepted as the degenerate no-op trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HugParams {
    pub delta: f64,
    pub steps: usize,
}

impl HugParams {
    pub fn new(delta: f64, steps: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(HugError::InvalidParameter(format!(
                "stepsize must be positive and finite, got {delta}"
            )));
        }
        Ok(HugParams { delta, steps })
    }
}

/// One step of Hug, returning the new state and the halfway point.
pub fn hug_step<M: ConstraintMap + ?Sized>(
    map: &M,
    state: &PhaseState,
    delta: f64,
) -> Result<(PhaseState, Vector)> {
    state.check(map)?;
    let half = 0.5 * delta;
    let halfway = &state.x + &state.v * half;
    let frame = NormalFrame::at(map, &halfway)?;
    let v_next = frame.reflect(&state.v);
    let x_next = &halfway + &v_next * half;
    Ok((PhaseState::new(x_next, v_next), halfway))
}

/// The one-step map `Psi_delta(x, v) = (x', v')`.
pub fn psi_map<M: ConstraintMap + ?Sized>(
    map: &M,
    state: &PhaseState,
    delta: f64,
) -> Result<PhaseState> {
    hug_step(map, state, delta).map(|(s, _)| s)
}

/// One recorded step of a streaming trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the state reached, `1..=K`.
    pub k: usize,
    pub state: PhaseState,
    /// `x_{k - 1/2}`.
    pub halfway: Vector,
}

/// Streaming Hug trajectory; yields `K` steps without storing them.
pub struct HugStepper<'a, M: ConstraintMap + ?Sized> {
    map: &'a M,
    state: PhaseState,
    delta: f64,
    k: usize,
    steps: usize,
    failed: bool,
}

impl<'a, M: ConstraintMap + ?Sized> HugStepper<'a, M> {
    pub fn new(map: &'a M, init: PhaseState, params: HugParams) -> Result<Self> {
        init.check(map)?;
        Ok(HugStepper {
            map,
            state: init,
            delta: params.delta,
            k: 0,
            steps: params.steps,
            failed: false,
        })
    }

    pub fn state(&self) -> &PhaseState {
        &self.state
    }
}

impl<M: ConstraintMap + ?Sized> Iterator for HugStepper<'_, M> {
    type Item = Result<StepRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.k >= self.steps {
            return None;
        }
        match hug_step(self.map, &self.state, self.delta) {
            Ok((next, halfway)) => {
                self.k += 1;
                self.state = next;
                Some(Ok(StepRecord {
                    k: self.k,
                    state: self.state.clone(),
                    halfway,
                }))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e.at_step(self.k)))
            }
        }
    }
}

/// Per-state diagnostics recorded while stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDiagnostics {
    pub vnorm: f64,
    pub f: Vector,
    /// `(||x_{k-1/2} - x_{k-1}||, ||x_k - x_{k-1/2}||)` for the step that
    /// produced state `k`; `None` for the initial state.
    pub segments: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub delta: f64,
    /// `x_0 .. x_K` with their velocities.
    pub states: Vec<PhaseState>,
    /// `x_{1/2} .. x_{K-1/2}`.
    pub halfway: Vec<Vector>,
    pub diagnostics: Vec<StateDiagnostics>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.halfway.len()
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Largest `|f_i(x_k) - f_i(x_0)|` over the trajectory.
    pub fn max_level_drift(&self) -> f64 {
        let f0 = &self.diagnostics[0].f;
        self.diagnostics
            .iter()
            .map(|d| (&d.f - f0).amax())
            .fold(0.0, f64::max)
    }

    /// Columns `k,t,x_1..x_n,v_1..v_n,f_1..f_m,vnorm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states[0].x.len();
        let m = self.diagnostics[0].f.len();
        writeln!(out, "#schema=hug-trajectory/1")?;
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=n).map(|i| format!("v_{i}")));
        header.extend((1..=m).map(|i| format!("f_{i}")));
        header.push("vnorm".into());
        writeln!(out, "{}", header.join(","))?;
        for (k, (s, d)) in self.states.iter().zip(&self.diagnostics).enumerate() {
            let mut row = vec![k.to_string(), (k as f64 * self.delta).to_string()];
            row.extend(s.x.iter().map(|c| c.to_string()));
            row.extend(s.v.iter().map(|c| c.to_string()));
            row.extend(d.f.iter().map(|c| c.to_string()));
            row.push(d.vnorm.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Halfway points: columns `k,t,x_1..x_n` with `t = (k + 1/2) delta`.
    pub fn write_halfway_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states[0].x.len();
        writeln!(out, "#schema=hug-halfway/1")?;
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (k, h) in self.halfway.iter().enumerate() {
            let mut row = vec![k.to_string(), ((k as f64 + 0.5) * self.delta).to_string()];
            row.extend(h.iter().map(|c| c.to_string()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Run `K` Hug steps, recording states, halfway points and diagnostics.
pub fn hug_trajectory<M: ConstraintMap + ?Sized>(
    map: &M,
    init: &PhaseState,
    params: HugParams,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(params.steps + 1);
    let mut halfway = Vec::with_capacity(params.steps);
    let mut diagnostics = Vec::with_capacity(params.steps + 1);
    diagnostics.push(StateDiagnostics {
        vnorm: init.v.norm(),
        f: map.eval_f(&init.x)?,
        segments: None,
    });
    states.push(init.clone());
    for rec in HugStepper::new(map, init.clone(), params)? {
        let rec = rec?;
        let prev = &states[rec.k - 1].x;
        diagnostics.push(StateDiagnostics {
            vnorm: rec.state.v.norm(),
            f: map.value(&rec.state.x),
            segments: Some(((&rec.halfway - prev).norm(), (&rec.state.x - &rec.halfway).norm())),
        });
        states.push(rec.state);
        halfway.push(rec.halfway);
    }
    Ok(Trajectory {
        delta: params.delta,
        states,
        halfway,
        diagnostics,
    })
}

/// Upper bound on `||f(x_K) - f(x_0)||` when `||H|| <= beta` and `H` is
/// `gamma`-Lipschitz:
/// `(delta^2 / 12) ||v_0||^2 (3 beta + gamma (K - 1) delta ||v_0||)`.
pub fn deviation_bound(beta: f64, gamma: f64, v0norm: f64, params: HugParams) -> Result<f64> {
    for (name, val) in [("beta", beta), ("gamma", gamma), ("||v0||", v0norm)] {
        if !(val >= 0.0) {
            return Err(HugError::InvalidParameter(format!(
                "{name} must be non-negative, got {val}"
            )));
        }
    }
    let d = params.delta;
    let k_minus_1 = params.steps.saturating_sub(1) as f64;
    Ok(d * d / 12.0 * v0norm * v0norm * (3.0 * beta + gamma * k_minus_1 * d * v0norm))
}
