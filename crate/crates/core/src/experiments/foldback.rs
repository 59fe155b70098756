//! Fold-back of a Hug trajectory on the ellipse `x1^2 + 4 x2^2 = 1`.

use std::io::{self, Write};

use serde::Serialize;

use crate::constraint::Quadric;
use crate::ellipse::{sign_changes, tangential_speed, EllipseModel, Motion, ReducedState};
use crate::error::Result;
use crate::hug::{hug_trajectory, HugParams, PhaseState, Trajectory};
use crate::ode::{DenseSolution, ReferenceSolver};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_STEPS: usize = 14;
/// Output points of the overlaid reference arc per unit time.
const ARC_POINTS_PER_UNIT: usize = 100;

pub fn map() -> Quadric {
    Quadric::diagonal(&[-1.0, -4.0]).expect("valid preset")
}

pub fn model() -> EllipseModel {
    EllipseModel::new(1.0, 4.0, 2f64.sqrt()).expect("valid preset")
}

pub fn initial_state() -> PhaseState {
    PhaseState::from_slices(&[1.0, 0.0], &[1.75f64.sqrt(), 0.5])
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldbackSummary {
    pub delta: f64,
    pub steps: usize,
    pub phi0: f64,
    pub p0: f64,
    pub kappa: f64,
    pub motion: Motion,
    pub turning_points: Option<(f64, f64)>,
    pub p_sign_changes: usize,
    pub sup_distance: f64,
    pub return_distance: f64,
}

#[derive(Debug, Clone)]
pub struct FoldbackReport {
    pub summary: FoldbackSummary,
    pub hug: Trajectory,
    /// Tangential speed of each Hug state.
    pub hug_p: Vec<f64>,
    /// Reference solution at the Hug times `k delta`, `k = 0..=K`.
    pub reference: Vec<PhaseState>,
    pub arc: DenseSolution,
}

pub fn run_foldback(delta: f64, steps: usize, solver: &ReferenceSolver) -> Result<FoldbackReport> {
    let map = map();
    let model = model();
    let init = initial_state();
    let (reduced, _) = model.to_reduced(&init)?;
    let motion = model.classify(reduced)?;
    let turning_points = match motion {
        Motion::Libration => Some(model.libration_turning_points(reduced)?),
        _ => None,
    };

    let hug = hug_trajectory(&map, &init, HugParams::new(delta, steps)?)?;
    let hug_p: Vec<f64> = hug.states.iter().map(|s| tangential_speed(&model, s)).collect();

    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * delta).collect();
    let mut reference = vec![init.clone()];
    if steps > 0 {
        reference.extend(solver.solve_at(&map, &init, &times)?.states);
    }
    let t_end = steps as f64 * delta;
    let arc_n = ((t_end * ARC_POINTS_PER_UNIT as f64).ceil() as usize).max(1);
    let arc_times: Vec<f64> = (1..=arc_n).map(|i| t_end * i as f64 / arc_n as f64).collect();
    let mut arc = DenseSolution { times: vec![0.0], states: vec![init.clone()] };
    if steps > 0 {
        let sol = solver.solve_at(&map, &init, &arc_times)?;
        arc.times.extend(sol.times);
        arc.states.extend(sol.states);
    }

    let sup_distance = hug
        .states
        .iter()
        .zip(&reference)
        .map(|(h, r)| (&h.x - &r.x).norm())
        .fold(0.0, f64::max);
    let summary = FoldbackSummary {
        delta,
        steps,
        phi0: reduced.phi,
        p0: reduced.p,
        kappa: model.kappa(reduced),
        motion,
        turning_points,
        p_sign_changes: sign_changes(hug_p.iter().copied()),
        sup_distance,
        return_distance: (&hug.last().x - &init.x).norm(),
    };
    Ok(FoldbackReport { summary, hug, hug_p, reference, arc })
}

impl FoldbackReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#schema=hug-foldback/1")?;
        writeln!(out, "k,t,x_1,x_2,v_1,v_2,p,ref_x_1,ref_x_2,ref_v_1,ref_v_2")?;
        for (k, ((s, r), p)) in self.hug.states.iter().zip(&self.reference).zip(&self.hug_p).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                k,
                k as f64 * self.hug.delta,
                s.x[0],
                s.x[1],
                s.v[0],
                s.v[1],
                p,
                r.x[0],
                r.x[1],
                r.v[0],
                r.v[1]
            )?;
        }
        Ok(())
    }

    pub fn write_arc_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let model = model();
        writeln!(out, "#schema=hug-foldback-arc/1")?;
        writeln!(out, "t,x_1,x_2,v_1,v_2,p")?;
        for (t, s) in self.arc.times.iter().zip(&self.arc.states) {
            let p = tangential_speed(&model, s);
            writeln!(out, "{},{},{},{},{},{}", t, s.x[0], s.x[1], s.v[0], s.v[1], p)?;
        }
        Ok(())
    }
}

/// Reduced state of the preset, for callers that work in the phase plane.
pub fn initial_reduced() -> ReducedState {
    ReducedState::new(0.0, 0.5)
}
