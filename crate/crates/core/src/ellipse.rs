//! Reduced phase-plane model for `f(x) = -a x1^2 - b x2^2` on the level
//! `f = -1`.
//!
//! The ellipse is parameterised by `x = (a^{-1/2} cos phi, b^{-1/2} sin phi)`,
//! the velocity by its tangential and normal components
//! `v = p t(phi) + n n(phi)` with `p^2 + n^2 = c^2` constant. The dynamics
//! reduce to
//!
//! ```text
//! dphi/dt = sqrt(ab) mu^{-1/2} p
//! dp/dt   = (1/2) sqrt(ab) (a - b) mu^{-3/2} sin(2 phi) (c^2 - p^2)
//! mu      = a cos^2 phi + b sin^2 phi
//! ```
//!
//! Separating variables gives `dp/dphi = -(1/2) mu'(phi) (c^2 - p^2) / (mu p)`,
//! whose first integral is `kappa = (c^2 - p^2) / mu(phi)`. Since `p` can only
//! vanish where `mu(phi) = c^2 / kappa`, trajectories with
//! `kappa * max(a, b) < c^2` rotate and those with `kappa * max(a, b) > c^2`
//! librate between two turning angles.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{HugError, Result};
use crate::hug::PhaseState;
use crate::Vector;

/// Relative tolerance used to call a state separatrix.
pub const SEPARATRIX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseModel {
    pub a: f64,
    pub b: f64,
    /// Speed `||v||`.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedState {
    pub phi: f64,
    pub p: f64,
}

impl ReducedState {
    pub fn new(phi: f64, p: f64) -> Self {
        ReducedState { phi, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Motion {
    Rotation,
    Libration,
    Separatrix,
}

impl Motion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Motion::Rotation => "rotation",
            Motion::Libration => "libration",
            Motion::Separatrix => "separatrix",
        }
    }
}

impl EllipseModel {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(HugError::InvalidParameter(format!(
                "ellipse coefficients must be positive, got a = {a}, b = {b}"
            )));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(HugError::InvalidParameter(format!("speed must be >= 0, got {c}")));
        }
        Ok(EllipseModel { a, b, c })
    }

    pub fn mu(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        self.a * c * c + self.b * s * s
    }

    /// Unit tangent `t(phi)`, oriented so that `p > 0` means `phi` increases.
    pub fn tangent(&self, phi: f64) -> [f64; 2] {
        let (s, c) = phi.sin_cos();
        let r = self.mu(phi).sqrt();
        [-self.b.sqrt() * s / r, self.a.sqrt() * c / r]
    }

    /// Outward unit normal `n(phi)`.
    pub fn normal(&self, phi: f64) -> [f64; 2] {
        let (s, c) = phi.sin_cos();
        let r = self.mu(phi).sqrt();
        [self.a.sqrt() * c / r, self.b.sqrt() * s / r]
    }

    pub fn position(&self, phi: f64) -> [f64; 2] {
        [phi.cos() / self.a.sqrt(), phi.sin() / self.b.sqrt()]
    }

    fn check_strip(&self, p: f64) -> Result<()> {
        if p.abs() > self.c * (1.0 + 1e-12) {
            return Err(HugError::Domain(format!(
                "|p| = {} exceeds the speed c = {}",
                p.abs(),
                self.c
            )));
        }
        Ok(())
    }

    pub fn reduced_field(&self, state: ReducedState) -> Result<(f64, f64)> {
        self.check_strip(state.p)?;
        Ok(self.field_unchecked(state))
    }

    fn field_unchecked(&self, state: ReducedState) -> (f64, f64) {
        let mu = self.mu(state.phi);
        let sab = (self.a * self.b).sqrt();
        let dphi = sab * state.p / mu.sqrt();
        let rem = (self.c * self.c - state.p * state.p).max(0.0);
        let dp = 0.5 * sab * (self.a - self.b) * (2.0 * state.phi).sin() * rem / mu.powf(1.5);
        (dphi, dp)
    }

    /// The first integral `(c^2 - p^2) / mu(phi)`.
    pub fn kappa(&self, state: ReducedState) -> f64 {
        (self.c * self.c - state.p * state.p) / self.mu(state.phi)
    }

    /// Map a state on the level `f = -1` to `(phi, p)` and the normal speed `n`.
    pub fn to_reduced(&self, state: &PhaseState) -> Result<(ReducedState, f64)> {
        if state.x.len() != 2 || state.v.len() != 2 {
            return Err(HugError::DimensionMismatch {
                what: "planar state",
                expected: 2,
                got: state.x.len().max(state.v.len()),
            });
        }
        let (x1, x2) = (state.x[0], state.x[1]);
        let level = -self.a * x1 * x1 - self.b * x2 * x2;
        if (level + 1.0).abs() > 1e-10 {
            return Err(HugError::Domain(format!("f(x) = {level}, expected -1")));
        }
        let phi = (self.b.sqrt() * x2).atan2(self.a.sqrt() * x1);
        let t = self.tangent(phi);
        let nv = self.normal(phi);
        let p = state.v[0] * t[0] + state.v[1] * t[1];
        let n = state.v[0] * nv[0] + state.v[1] * nv[1];
        Ok((ReducedState { phi, p }, n))
    }

    /// Inverse of [`to_reduced`](Self::to_reduced); `n = n_sign * sqrt(c^2 - p^2)`.
    pub fn from_reduced(&self, state: ReducedState, n_sign: f64) -> Result<PhaseState> {
        self.check_strip(state.p)?;
        let n = n_sign.signum() * (self.c * self.c - state.p * state.p).max(0.0).sqrt();
        let t = self.tangent(state.phi);
        let nv = self.normal(state.phi);
        let x = self.position(state.phi);
        Ok(PhaseState::new(
            Vector::from_column_slice(&x),
            Vector::from_column_slice(&[state.p * t[0] + n * nv[0], state.p * t[1] + n * nv[1]]),
        ))
    }

    pub fn classify(&self, state: ReducedState) -> Result<Motion> {
        self.check_strip(state.p)?;
        let c2 = self.c * self.c;
        let reach = self.kappa(state) * self.a.max(self.b);
        if (reach - c2).abs() <= SEPARATRIX_TOLERANCE * c2.max(reach) {
            Ok(Motion::Separatrix)
        } else if reach < c2 {
            Ok(Motion::Rotation)
        } else {
            Ok(Motion::Libration)
        }
    }

    /// Angle of the centre the state librates around: multiples of `pi` when
    /// `b > a`, shifted by `pi/2` when `a > b`.
    fn centre(&self, phi: f64) -> f64 {
        let offset = if self.b > self.a { 0.0 } else { FRAC_PI_2 };
        offset + ((phi - offset) / PI).round() * PI
    }

    /// `(phi_min, phi_max)` bracketing the centre of a librating state.
    pub fn libration_turning_points(&self, state: ReducedState) -> Result<(f64, f64)> {
        if self.classify(state)? != Motion::Libration {
            return Err(HugError::NotLibrating);
        }
        // around the centre mu = mu_min + |b - a| sin^2(psi)
        let mu_min = self.a.min(self.b);
        let target = self.c * self.c / self.kappa(state);
        let s2 = ((target - mu_min) / (self.a - self.b).abs()).clamp(0.0, 1.0);
        let half_width = s2.sqrt().asin();
        let centre = self.centre(state.phi);
        Ok((centre - half_width, centre + half_width))
    }

    /// Fixed-step RK4 on the reduced system; returns `steps + 1` samples.
    pub fn integrate(&self, init: ReducedState, t_end: f64, steps: usize) -> Result<Vec<(f64, ReducedState)>> {
        self.check_strip(init.p)?;
        if steps == 0 || !(t_end >= 0.0) {
            return Err(HugError::InvalidParameter(
                "need t_end >= 0 and at least one step".into(),
            ));
        }
        let h = t_end / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let mut s = init;
        out.push((0.0, s));
        let shift = |s: ReducedState, k: (f64, f64), c: f64| {
            // the strip lines are invariant; clamp roundoff excursions back onto them
            let p = (s.p + c * k.1).clamp(-self.c, self.c);
            ReducedState::new(s.phi + c * k.0, p)
        };
        for i in 1..=steps {
            let k1 = self.field_unchecked(s);
            let k2 = self.field_unchecked(shift(s, k1, 0.5 * h));
            let k3 = self.field_unchecked(shift(s, k2, 0.5 * h));
            let k4 = self.field_unchecked(shift(s, k3, h));
            let k = (
                (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) / 6.0,
                (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) / 6.0,
            );
            s = shift(s, k, h);
            out.push((i as f64 * h, s));
        }
        Ok(out)
    }
}

/// Number of sign changes in a sequence, ignoring exact zeros.
pub fn sign_changes<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Tangential speed of an arbitrary planar state, using the angle of `x`
/// in the ellipse parameterisation (exact for states on the level set).
pub fn tangential_speed(model: &EllipseModel, state: &PhaseState) -> f64 {
    let phi = (model.b.sqrt() * state.x[1]).atan2(model.a.sqrt() * state.x[0]);
    let t = model.tangent(phi);
    state.v[0] * t[0] + state.v[1] * t[1]
}
