//! The continuous system approximated by Hug and the machinery that measures
//! how well Hug approximates it.
//!
//! With `v_par = T(x) v`, `v_perp = N(x) v` and `d = v_par - v_perp`:
//!
//! ```text
//! dx/dt = T(x) v
//! dv/dt = N'_par(x)[d] v_perp - N'_perp(x)[d] v_par
//! ```
//!
//! Hug does not approximate `v(k delta)` directly: its normal component flips
//! sign every step, so iterates are compared with the embedded values
//! `X_k = x(k delta)`, `V_k = v_par(k delta) + (-1)^k v_perp(k delta)`.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::constraint::ConstraintMap;
use crate::error::{HugError, Result};
use crate::hug::{hug_trajectory, HugParams, PhaseState};
use crate::linalg::fit_order;
use crate::projector::ProjectorBundle;
use crate::{Matrix, Vector};

/// Tangential and normal parts of a velocity at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySplit {
    pub v_par: Vector,
    pub v_perp: Vector,
}

impl VelocitySplit {
    pub fn new(bundle: &ProjectorBundle, v: &Vector) -> Self {
        VelocitySplit {
            v_par: &bundle.tangent * v,
            v_perp: &bundle.normal * v,
        }
    }
}

struct FieldParts {
    split: VelocitySplit,
    perp: Matrix,
}

fn field_parts<M: ConstraintMap + ?Sized>(map: &M, state: &PhaseState) -> Result<(ProjectorBundle, FieldParts)> {
    state.check(map)?;
    let bundle = ProjectorBundle::build(map, &state.x)?;
    let split = VelocitySplit::new(&bundle, &state.v);
    let d = &split.v_par - &split.v_perp;
    let perp = bundle.nprime_perp(map, &d)?;
    Ok((bundle, FieldParts { split, perp }))
}

/// Right-hand side `(dx/dt, dv/dt)` in the simplified form that uses the
/// kernel structure of the projector derivatives.
pub fn vector_field<M: ConstraintMap + ?Sized>(map: &M, state: &PhaseState) -> Result<(Vector, Vector)> {
    let (_, FieldParts { split, perp }) = field_parts(map, state)?;
    let dv = perp.transpose() * &split.v_perp - &perp * &split.v_par;
    Ok((split.v_par, dv))
}

/// Same field written as `(N'_par[d] - N'_perp[d]) v`.
pub fn vector_field_unsimplified<M: ConstraintMap + ?Sized>(
    map: &M,
    state: &PhaseState,
) -> Result<(Vector, Vector)> {
    let (bundle, FieldParts { perp, .. }) = field_parts(map, state)?;
    let dv = (perp.transpose() - &perp) * &state.v;
    Ok((&bundle.tangent * &state.v, dv))
}

/// Time derivatives of `v_par` and `v_perp` along a solution:
///
/// ```text
/// d v_par / dt  = -N'_par[v_perp] v_perp - N'_perp[v_par] v_par
/// d v_perp / dt =  N'_par[v_par] v_perp + N'_perp[v_perp] v_par
/// ```
pub fn component_fields<M: ConstraintMap + ?Sized>(
    map: &M,
    state: &PhaseState,
) -> Result<(Vector, Vector)> {
    state.check(map)?;
    let bundle = ProjectorBundle::build(map, &state.x)?;
    let VelocitySplit { v_par, v_perp } = VelocitySplit::new(&bundle, &state.v);
    let perp_of_par = bundle.nprime_perp(map, &v_par)?;
    let perp_of_perp = bundle.nprime_perp(map, &v_perp)?;
    let dv_par = -(perp_of_perp.transpose() * &v_perp) - &perp_of_par * &v_par;
    let dv_perp = perp_of_par.transpose() * &v_perp + &perp_of_perp * &v_par;
    Ok((dv_par, dv_perp))
}

fn rk4_step<M: ConstraintMap + ?Sized>(map: &M, s: &PhaseState, h: f64) -> Result<PhaseState> {
    let shift = |s: &PhaseState, k: &(Vector, Vector), c: f64| {
        PhaseState::new(&s.x + &k.0 * c, &s.v + &k.1 * c)
    };
    let k1 = vector_field(map, s)?;
    let k2 = vector_field(map, &shift(s, &k1, 0.5 * h))?;
    let k3 = vector_field(map, &shift(s, &k2, 0.5 * h))?;
    let k4 = vector_field(map, &shift(s, &k3, h))?;
    let w = h / 6.0;
    Ok(PhaseState::new(
        &s.x + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * w,
        &s.v + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * w,
    ))
}

/// States of a reference solution at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
}

impl DenseSolution {
    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("solution holds the initial state")
    }
}

/// Fixed-step classical RK4 with a step-halving self check.
///
/// Between consecutive output times the interval is split into
/// `ceil(length * substeps_per_unit)` equal substeps, so every output time is
/// hit exactly. With the self check on, the solve is repeated at twice the
/// substep count and must agree to `tolerance` at every output time; the finer
/// solution is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSolver {
    pub substeps_per_unit: usize,
    pub self_check: bool,
    pub tolerance: f64,
}

impl Default for ReferenceSolver {
    fn default() -> Self {
        ReferenceSolver {
            substeps_per_unit: 2048,
            self_check: true,
            tolerance: 1e-10,
        }
    }
}

impl ReferenceSolver {
    pub fn new(substeps_per_unit: usize) -> Result<Self> {
        if substeps_per_unit == 0 {
            return Err(HugError::InvalidParameter("substeps_per_unit must be positive".into()));
        }
        Ok(ReferenceSolver {
            substeps_per_unit,
            ..Default::default()
        })
    }

    /// Solve from `t = 0` and report the state at each of `times`
    /// (non-decreasing, starting at or after 0).
    pub fn solve_at<M: ConstraintMap + ?Sized>(
        &self,
        map: &M,
        init: &PhaseState,
        times: &[f64],
    ) -> Result<DenseSolution> {
        init.check(map)?;
        let mut prev = 0.0;
        for &t in times {
            if !(t >= prev) || !t.is_finite() {
                return Err(HugError::InvalidParameter(
                    "output times must be finite, non-negative and non-decreasing".into(),
                ));
            }
            prev = t;
        }
        let coarse = integrate(map, init, times, self.substeps_per_unit)?;
        if !self.self_check {
            return Ok(DenseSolution {
                times: times.to_vec(),
                states: coarse,
            });
        }
        let fine = integrate(map, init, times, 2 * self.substeps_per_unit)?;
        let change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (&a.x - &b.x).amax().max((&a.v - &b.v).amax()))
            .fold(0.0, f64::max);
        if change >= self.tolerance {
            return Err(HugError::Accuracy {
                change,
                substeps_per_unit: self.substeps_per_unit,
            });
        }
        Ok(DenseSolution {
            times: times.to_vec(),
            states: fine,
        })
    }

    /// Solve on `[0, t_end]` with output at every substep.
    pub fn solve<M: ConstraintMap + ?Sized>(
        &self,
        map: &M,
        init: &PhaseState,
        t_end: f64,
    ) -> Result<DenseSolution> {
        if !(t_end >= 0.0) {
            return Err(HugError::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
        }
        let steps = ((t_end * self.substeps_per_unit as f64).ceil() as usize).max(1);
        let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        self.solve_at(map, init, &times)
    }
}

/// Convenience wrapper: RK4 on `[0, t_end]` with the self check enabled.
pub fn reference_solve<M: ConstraintMap + ?Sized>(
    map: &M,
    init: &PhaseState,
    t_end: f64,
    substeps_per_unit: usize,
) -> Result<DenseSolution> {
    ReferenceSolver::new(substeps_per_unit)?.solve(map, init, t_end)
}

fn integrate<M: ConstraintMap + ?Sized>(
    map: &M,
    init: &PhaseState,
    times: &[f64],
    substeps_per_unit: usize,
) -> Result<Vec<PhaseState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = init.clone();
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let sub = ((span * substeps_per_unit as f64).ceil() as usize).max(1);
            let h = span / sub as f64;
            for _ in 0..sub {
                state = rk4_step(map, &state, h)?;
            }
        }
        t = target;
        out.push(state.clone());
    }
    Ok(out)
}

/// Exact solution values on the grid `t_k = k delta`, with the normal part of
/// the velocity carrying the factor `(-1)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedReference {
    pub delta: f64,
    pub x: Vec<Vector>,
    pub v: Vec<Vector>,
}

impl EmbeddedReference {
    /// Build from a solution sampled at exactly `t_k = k delta`.
    pub fn from_solution<M: ConstraintMap + ?Sized>(
        map: &M,
        solution: &DenseSolution,
        delta: f64,
    ) -> Result<Self> {
        let mut x = Vec::with_capacity(solution.states.len());
        let mut v = Vec::with_capacity(solution.states.len());
        for (k, (t, s)) in solution.times.iter().zip(&solution.states).enumerate() {
            let expected = k as f64 * delta;
            if (t - expected).abs() > 1e-12 * expected.max(1.0) {
                return Err(HugError::GridMismatch(format!(
                    "sample {k} at t = {t}, expected {expected}"
                )));
            }
            let bundle = ProjectorBundle::build(map, &s.x)?;
            let split = VelocitySplit::new(&bundle, &s.v);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            x.push(s.x.clone());
            v.push(split.v_par + split.v_perp * sign);
        }
        Ok(EmbeddedReference { delta, x, v })
    }

    pub fn compute<M: ConstraintMap + ?Sized>(
        map: &M,
        init: &PhaseState,
        delta: f64,
        steps: usize,
        solver: &ReferenceSolver,
    ) -> Result<Self> {
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * delta).collect();
        let sol = solver.solve_at(map, init, &times)?;
        Self::from_solution(map, &sol, delta)
    }

    pub fn steps(&self) -> usize {
        self.x.len().saturating_sub(1)
    }
}

/// Residuals left by the embedded exact values in the eliminated-form update.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `X_{k+1} - X_k - delta T(X_k + delta/2 V_k) V_k`
    pub sigma: Vector,
    /// `V_{k+1} - (I - 2 N(X_k + delta/2 V_k)) V_k`
    pub tau: Vector,
}

/// `sigma_{k+1}, tau_{k+1}` for `k = 0 .. K-1`.
pub fn truncation_residuals<M: ConstraintMap + ?Sized>(
    map: &M,
    reference: &EmbeddedReference,
    delta: f64,
) -> Result<Vec<Residual>> {
    if (reference.delta - delta).abs() > 1e-15 * delta.abs().max(1.0) {
        return Err(HugError::GridMismatch(format!(
            "reference built with delta = {}, asked for {delta}",
            reference.delta
        )));
    }
    (0..reference.steps())
        .map(|k| {
            let (xk, vk) = (&reference.x[k], &reference.v[k]);
            let mid = xk + vk * (0.5 * delta);
            let bundle = ProjectorBundle::build(map, &mid).map_err(|e| e.at_step(k))?;
            let sigma = &reference.x[k + 1] - xk - &bundle.tangent * vk * delta;
            let tau = &reference.v[k + 1] - (vk - &bundle.normal * vk * 2.0);
            Ok(Residual { sigma, tau })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub one_step_x_err: f64,
    pub two_step_x_err: f64,
    pub global_x_err: f64,
    pub global_v_err: f64,
    /// `||x_K - x(T)||` at the final time.
    pub final_x_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub one_step_order: Option<f64>,
    pub two_step_order: Option<f64>,
    pub global_x_order: Option<f64>,
    pub global_v_order: Option<f64>,
    pub final_x_order: Option<f64>,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#schema=hug-convergence/1")?;
        writeln!(out, "delta,one_step_x_err,two_step_x_err,global_x_err,global_v_err,final_x_err")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.delta, r.one_step_x_err, r.two_step_x_err, r.global_x_err, r.global_v_err, r.final_x_err
            )?;
        }
        let s = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_else(|| "nan".into());
        writeln!(
            out,
            "slope,{},{},{},{},{}",
            s(self.one_step_order),
            s(self.two_step_order),
            s(self.global_x_order),
            s(self.global_v_order),
            s(self.final_x_order)
        )
    }
}

fn steps_for(t_end: f64, delta: f64) -> Result<usize> {
    let k = t_end / delta;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-9 * k.max(1.0) {
        return Err(HugError::GridMismatch(format!(
            "t_end = {t_end} is not a multiple of delta = {delta}"
        )));
    }
    Ok(rounded as usize)
}

/// Compare Hug with the embedded exact solution on `[0, t_end]` for each
/// stepsize and fit log-log slopes. `t_end` must be a multiple of every delta
/// and at least `2 delta`.
pub fn convergence_study<M: ConstraintMap + ?Sized>(
    map: &M,
    init: &PhaseState,
    t_end: f64,
    deltas: &[f64],
    solver: &ReferenceSolver,
) -> Result<ConvergenceTable> {
    if deltas.is_empty() {
        return Err(HugError::EmptySample);
    }
    let rows: Vec<ConvergenceRow> = deltas
        .par_iter()
        .map(|&delta| {
            let steps = steps_for(t_end, delta)?;
            if steps < 2 {
                return Err(HugError::InvalidParameter(format!(
                    "t_end = {t_end} must cover at least two steps of {delta}"
                )));
            }
            let params = HugParams::new(delta, steps)?;
            let traj = hug_trajectory(map, init, params)?;
            let reference = EmbeddedReference::compute(map, init, delta, steps, solver)?;
            let x_err = |k: usize| (&traj.states[k].x - &reference.x[k]).norm();
            let v_err = |k: usize| (&traj.states[k].v - &reference.v[k]).norm();
            Ok(ConvergenceRow {
                delta,
                one_step_x_err: x_err(1),
                two_step_x_err: x_err(2),
                global_x_err: (0..=steps).map(x_err).fold(0.0, f64::max),
                global_v_err: (0..=steps).map(v_err).fold(0.0, f64::max),
                final_x_err: x_err(steps),
            })
        })
        .collect::<Result<_>>()?;
    let order = |f: fn(&ConvergenceRow) -> f64| {
        fit_order(&rows.iter().map(|r| (r.delta, f(r))).collect::<Vec<_>>())
    };
    Ok(ConvergenceTable {
        one_step_order: order(|r| r.one_step_x_err),
        two_step_order: order(|r| r.two_step_x_err),
        global_x_order: order(|r| r.global_x_err),
        global_v_order: order(|r| r.global_v_err),
        final_x_order: order(|r| r.final_x_err),
        rows,
    })
}

/// Local error of the composed map `Psi_delta o Psi_delta` in `x`, measured
/// against the reference at `t = 2 delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleStepStudy {
    pub errors: Vec<(f64, f64)>,
    pub order: Option<f64>,
}

pub fn double_step_consistency<M: ConstraintMap + ?Sized>(
    map: &M,
    init: &PhaseState,
    deltas: &[f64],
    solver: &ReferenceSolver,
) -> Result<DoubleStepStudy> {
    if deltas.is_empty() {
        return Err(HugError::EmptySample);
    }
    let errors: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&delta| {
            let traj = hug_trajectory(map, init, HugParams::new(delta, 2)?)?;
            let sol = solver.solve_at(map, init, &[2.0 * delta])?;
            Ok((delta, (&traj.states[2].x - &sol.states[0].x).norm()))
        })
        .collect::<Result<_>>()?;
    let order = fit_order(&errors);
    Ok(DoubleStepStudy { errors, order })
}
