//! Maximal excursion of Hug trajectories on ellipsoids `x^T A x = 1` from
//! uniformly random unit initial velocities.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintMap, Quadric};
use crate::error::{HugError, Result};
use crate::hug::{HugParams, HugStepper, PhaseState};
use crate::projector::ProjectorBundle;
use crate::sampler::iteration_rng;
use crate::Vector;

/// Normal components of the four showcase velocities.
pub const SHOWCASE_NORMAL_SPEEDS: [f64; 4] = [0.2023, 0.5673, 0.6647, 0.7357];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidConfig {
    pub diag: Vec<f64>,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub steps: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl EllipsoidConfig {
    pub fn preset(n: usize) -> Result<Self> {
        let diag = match n {
            3 => vec![1.0, 4.0, 3.0],
            6 => vec![1.0, 4.0, 3.0, 5.0, 1.0, 10.0],
            _ => {
                return Err(HugError::InvalidParameter(format!(
                    "ellipsoid presets exist for n = 3 and n = 6, got {n}"
                )))
            }
        };
        let mut x0 = vec![0.0; n];
        x0[0] = 1.0;
        Ok(EllipsoidConfig { diag, x0, delta: 0.01, steps: 1000, replicates: 1000, seed: 0 })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn map(&self) -> Result<Quadric> {
        Quadric::diagonal(&self.diag)
    }

    pub fn params(&self) -> Result<HugParams> {
        HugParams::new(self.delta, self.steps)
    }
}

/// `v` uniform on the unit sphere, by normalising a standard Gaussian.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let g = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// `max_{0 <= k <= K} ||x_k - x_0||`.
pub fn d_max<M: ConstraintMap + ?Sized>(map: &M, init: &PhaseState, params: HugParams) -> Result<f64> {
    let mut best = 0.0_f64;
    for rec in HugStepper::new(map, init.clone(), params)? {
        best = best.max((&rec?.state.x - &init.x).norm());
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub normal_speed: f64,
    /// `None` when the trajectory met a singular Jacobian.
    pub d_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidStudyResult {
    pub config: EllipsoidConfig,
    /// Sorted by replicate index.
    pub replicates: Vec<ReplicateResult>,
}

pub fn run_ellipsoid(config: &EllipsoidConfig) -> Result<EllipsoidStudyResult> {
    let map = config.map()?;
    let params = config.params()?;
    let x0 = Vector::from_column_slice(&config.x0);
    if config.x0.len() != config.dim() {
        return Err(HugError::DimensionMismatch {
            what: "x0",
            expected: config.dim(),
            got: config.x0.len(),
        });
    }
    let bundle = ProjectorBundle::build(&map, &x0)?;
    let mut replicates: Vec<ReplicateResult> = (0..config.replicates)
        .into_par_iter()
        .map(|index| {
            let mut rng = iteration_rng(config.seed, index as u64);
            let v = uniform_sphere(&mut rng, config.dim());
            let normal_speed = (&bundle.normal * &v).norm();
            let d = d_max(&map, &PhaseState::new(x0.clone(), v), params);
            match d {
                Ok(d) => Ok(ReplicateResult { index, normal_speed, d_max: Some(d) }),
                Err(e) if e.is_singular() => Ok(ReplicateResult { index, normal_speed, d_max: None }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    replicates.sort_by_key(|r| r.index);
    Ok(EllipsoidStudyResult { config: config.clone(), replicates })
}

/// Unit velocity at `x0` with normal speed `s` and tangential part along the
/// tangent projection of `direction`.
pub fn showcase_velocity<M: ConstraintMap + ?Sized>(
    map: &M,
    x0: &Vector,
    s: f64,
    direction: &Vector,
) -> Result<Vector> {
    if !(0.0..=1.0).contains(&s) {
        return Err(HugError::InvalidParameter(format!("normal speed must lie in [0, 1], got {s}")));
    }
    let bundle = ProjectorBundle::build(map, x0)?;
    let t = &bundle.tangent * direction;
    let tn = t.norm();
    if tn < 1e-12 {
        return Err(HugError::InvalidParameter("direction has no tangential component".into()));
    }
    // unit normal oriented along the gradient
    let g = map.jac(x0).row(0).transpose();
    let n = g.normalize();
    Ok(n * s + t * ((1.0 - s * s).sqrt() / tn))
}

/// `d_max` for each showcase normal speed.
pub fn showcase(config: &EllipsoidConfig, direction: &Vector) -> Result<Vec<(f64, f64)>> {
    let map = config.map()?;
    let params = config.params()?;
    let x0 = Vector::from_column_slice(&config.x0);
    SHOWCASE_NORMAL_SPEEDS
        .par_iter()
        .map(|&s| {
            let v = showcase_velocity(&map, &x0, s, direction)?;
            Ok((s, d_max(&map, &PhaseState::new(x0.clone(), v), params)?))
        })
        .collect()
}

/// Empirical distribution function over a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(HugError::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(HugError::Domain("ECDF sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: values })
    }

    /// Fraction of the sample `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= t) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Step points `(value, F(value))`, one per distinct value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = (i + 1) as f64 / n,
                _ => out.push((v, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(HugError::EmptySample);
    }
    let rx = ranks(pairs.iter().map(|p| p.0).collect());
    let ry = ranks(pairs.iter().map(|p| p.1).collect());
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(HugError::Domain("rank correlation of a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(values: Vec<f64>) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the mean of their positions
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

impl EllipsoidStudyResult {
    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.d_max.is_none()).count()
    }

    /// `(||v_perp(0)||, d_max)` of the successful replicates.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.replicates.iter().filter_map(|r| r.d_max.map(|d| (r.normal_speed, d))).collect()
    }

    pub fn rank_correlation(&self) -> Result<f64> {
        spearman(&self.pairs())
    }

    /// ECDF of `d_max / max_i d_max`.
    pub fn ecdf(&self) -> Result<Ecdf> {
        let d: Vec<f64> = self.pairs().into_iter().map(|p| p.1).collect();
        let sup = d.iter().copied().fold(0.0, f64::max);
        if sup <= 0.0 {
            return Ecdf::new(d);
        }
        Ecdf::new(d.into_iter().map(|v| v / sup).collect())
    }

    pub fn write_scatter_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#schema=hug-ellipsoid-scatter/1")?;
        writeln!(out, "replicate,normal_speed,d_max,failed")?;
        for r in &self.replicates {
            match r.d_max {
                Some(d) => writeln!(out, "{},{},{},0", r.index, r.normal_speed, d)?,
                None => writeln!(out, "{},{},,1", r.index, r.normal_speed)?,
            }
        }
        Ok(())
    }

    pub fn write_ecdf_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#schema=hug-ellipsoid-ecdf/1")?;
        writeln!(out, "d_max_fraction,ecdf")?;
        if let Ok(e) = self.ecdf() {
            for (v, f) in e.steps() {
                writeln!(out, "{},{}", v, f)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_endpoints_and_monotone() {
        let e = Ecdf::new(vec![0.3, 0.1, 0.5, 0.1, 1.0]).unwrap();
        assert_eq!(e.eval(0.05), 0.0);
        assert_eq!(e.eval(1.0), 1.0);
        assert_eq!(e.eval(0.1), 0.4);
        let steps = e.steps();
        assert_eq!(steps.len(), 4);
        assert!(steps.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(steps.last().unwrap().1, 1.0);
        assert!(Ecdf::new(vec![]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let up: Vec<_> = (0..10).map(|i| (i as f64, (i as f64).exp())).collect();
        assert!((spearman(&up).unwrap() - 1.0).abs() < 1e-12);
        let down: Vec<_> = (0..10).map(|i| (i as f64, -(i as f64).powi(3))).collect();
        assert!((spearman(&down).unwrap() + 1.0).abs() < 1e-12);
        // ties: x ranks (1, 2.5, 2.5, 4), y ranks (1, 2, 3, 4)
        let tied = [(1.0, 1.0), (2.0, 2.0), (2.0, 3.0), (3.0, 4.0)];
        let rho = spearman(&tied).unwrap();
        let expect = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((rho - expect).abs() < 1e-12);
        assert!(spearman(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn uniform_sphere_is_unit() {
        let mut rng = iteration_rng(3, 0);
        for _ in 0..100 {
            assert!((uniform_sphere(&mut rng, 5).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn showcase_velocity_splits_as_requested() {
        let cfg = EllipsoidConfig::preset(3).unwrap();
        let map = cfg.map().unwrap();
        let x0 = Vector::from_column_slice(&cfg.x0);
        let v = showcase_velocity(&map, &x0, 0.6, &Vector::from_column_slice(&[5.0, 1.0, 1.0])).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!((v[0] - 0.6).abs() < 1e-14);
        assert!((v[1] - v[2]).abs() < 1e-14);
        assert!(showcase_velocity(&map, &x0, 0.5, &Vector::from_column_slice(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn study_is_deterministic_and_sorted() {
        let mut cfg = EllipsoidConfig::preset(3).unwrap();
        cfg.steps = 20;
        cfg.replicates = 40;
        cfg.seed = 11;
        let a = run_ellipsoid(&cfg).unwrap();
        let b = run_ellipsoid(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.replicates.iter().enumerate().all(|(i, r)| r.index == i));
        assert!(a.pairs().iter().all(|&(s, d)| (0.0..=1.0).contains(&s) && d >= 0.0));
        let mut buf = Vec::new();
        a.write_scatter_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("#schema=hug-ellipsoid-scatter/1\n"));
    }

    #[test]
    fn presets() {
        assert_eq!(EllipsoidConfig::preset(6).unwrap().dim(), 6);
        assert!(EllipsoidConfig::preset(4).is_err());
    }
}
