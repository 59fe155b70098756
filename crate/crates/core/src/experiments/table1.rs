//! One- and two-step errors of Hug for `f = -x1^2 - 4 x2^2`, started from
//! `x0 = (cos 1, sin(1)/2)`, `v0 = (0, 1)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::constraint::Quadric;
use crate::error::Result;
use crate::hug::{hug_trajectory, HugParams, PhaseState};
use crate::linalg::fit_order;
use crate::ode::ReferenceSolver;

/// Published `(delta, ||x1 - x(delta)||, ||x2 - x(2 delta)||)`.
pub const PUBLISHED: [(f64, f64, f64); 5] = [
    (1.0 / 16.0, 4.23e-4, 4.87e-5),
    (1.0 / 32.0, 1.15e-4, 6.56e-6),
    (1.0 / 64.0, 3.00e-4, 8.50e-7),
    (1.0 / 128.0, 7.62e-6, 1.08e-7),
    (1.0 / 256.0, 1.93e-6, 1.36e-8),
];

/// The published one-step value at `delta = 1/64` breaks the surrounding
/// `O(delta^2)` trend by a factor of ten and is treated as a misprint.
pub fn is_suspect_cell(delta: f64, column: usize) -> bool {
    column == 1 && (delta - 1.0 / 64.0).abs() < 1e-15
}

pub fn map() -> Quadric {
    Quadric::diagonal(&[-1.0, -4.0]).expect("valid preset")
}

pub fn initial_state() -> PhaseState {
    PhaseState::from_slices(&[1f64.cos(), 0.5 * 1f64.sin()], &[0.0, 1.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub delta: f64,
    pub one_step: f64,
    pub two_step: f64,
    pub published_one_step: f64,
    pub published_two_step: f64,
    pub one_step_suspect: bool,
}

impl Table1Row {
    pub fn rel_err_one_step(&self) -> f64 {
        (self.one_step - self.published_one_step).abs() / self.published_one_step
    }

    pub fn rel_err_two_step(&self) -> f64 {
        (self.two_step - self.published_two_step).abs() / self.published_two_step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub one_step_order: Option<f64>,
    pub two_step_order: Option<f64>,
}

pub fn run_table1(solver: &ReferenceSolver) -> Result<Table1> {
    let map = map();
    let init = initial_state();
    let rows: Vec<Table1Row> = PUBLISHED
        .par_iter()
        .map(|&(delta, p1, p2)| {
            let traj = hug_trajectory(&map, &init, HugParams::new(delta, 2)?)?;
            let sol = solver.solve_at(&map, &init, &[delta, 2.0 * delta])?;
            Ok(Table1Row {
                delta,
                one_step: (&traj.states[1].x - &sol.states[0].x).norm(),
                two_step: (&traj.states[2].x - &sol.states[1].x).norm(),
                published_one_step: p1,
                published_two_step: p2,
                one_step_suspect: is_suspect_cell(delta, 1),
            })
        })
        .collect::<Result<_>>()?;
    let one: Vec<_> = rows.iter().map(|r| (r.delta, r.one_step)).collect();
    let two: Vec<_> = rows.iter().map(|r| (r.delta, r.two_step)).collect();
    Ok(Table1 {
        one_step_order: fit_order(&one),
        two_step_order: fit_order(&two),
        rows,
    })
}

impl Table1 {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#schema=hug-table1/1")?;
        writeln!(
            out,
            "delta,one_step_x_err,two_step_x_err,published_one_step,published_two_step,flag"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.delta,
                r.one_step,
                r.two_step,
                r.published_one_step,
                r.published_two_step,
                if r.one_step_suspect { "published_one_step_suspect" } else { "" }
            )?;
        }
        Ok(())
    }
}
