//! Phase-plane trajectories of the reduced ellipse system on a grid of
//! initial conditions.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::ellipse::{sign_changes, EllipseModel, Motion, ReducedState};
use crate::error::{HugError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortraitGrid {
    pub phi_points: usize,
    pub p_points: usize,
    pub t_end: f64,
    pub steps: usize,
    /// Keep every `stride`-th integration point in the output.
    pub stride: usize,
}

impl Default for PortraitGrid {
    fn default() -> Self {
        PortraitGrid { phi_points: 12, p_points: 8, t_end: 20.0, steps: 4000, stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitTrack {
    pub index: usize,
    pub init: ReducedState,
    pub motion: Motion,
    pub p_sign_changes: usize,
    pub points: Vec<(f64, ReducedState)>,
}

/// Initial conditions: `phi0` spans `[-pi, pi]` and `p0` spans `[-c, c]`,
/// both endpoints included. The default sizes keep every grid point off the
/// separatrices of the preset model.
pub fn grid_points(model: &EllipseModel, grid: &PortraitGrid) -> Vec<ReducedState> {
    let lin = |lo: f64, hi: f64, n: usize, i: usize| {
        if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }
    };
    let mut out = Vec::with_capacity(grid.phi_points * grid.p_points);
    for i in 0..grid.phi_points {
        for j in 0..grid.p_points {
            out.push(ReducedState::new(
                lin(-PI, PI, grid.phi_points, i),
                lin(-model.c, model.c, grid.p_points, j),
            ));
        }
    }
    out
}

pub fn phase_portrait(model: &EllipseModel, grid: &PortraitGrid) -> Result<Vec<PortraitTrack>> {
    if grid.phi_points == 0 || grid.p_points == 0 || grid.steps == 0 || grid.stride == 0 {
        return Err(HugError::InvalidParameter("portrait grid sizes must be positive".into()));
    }
    grid_points(model, grid)
        .into_par_iter()
        .enumerate()
        .map(|(index, init)| {
            let path = model.integrate(init, grid.t_end, grid.steps)?;
            let p_sign_changes = sign_changes(path.iter().map(|(_, s)| s.p));
            let last = path.len() - 1;
            let points = path
                .into_iter()
                .enumerate()
                .filter(|(i, _)| i % grid.stride == 0 || *i == last)
                .map(|(_, pt)| pt)
                .collect();
            Ok(PortraitTrack { index, init, motion: model.classify(init)?, p_sign_changes, points })
        })
        .collect()
}

pub fn write_portrait_csv<W: Write>(tracks: &[PortraitTrack], mut out: W) -> io::Result<()> {
    writeln!(out, "#schema=hug-phase-portrait/1")?;
    writeln!(out, "track,phi0,p0,label,t,phi,p")?;
    for tr in tracks {
        for (t, s) in &tr.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                tr.index,
                tr.init.phi,
                tr.init.p,
                tr.motion.as_str(),
                t,
                s.phi,
                s.p
            )?;
        }
    }
    Ok(())
}
