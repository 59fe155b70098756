use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use hug_core::constraint::{ConstraintMap, Quadric};
use hug_core::ellipse::EllipseModel;
use hug_core::experiments::ellipsoid::{self, EllipsoidConfig};
use hug_core::experiments::portrait::{self, PortraitGrid};
use hug_core::experiments::{foldback, sphere_tail_probability, table1};
use hug_core::hug::{HugParams, PhaseState};
use hug_core::ode::{convergence_study, double_step_consistency, ReferenceSolver};
use hug_core::sampler::{run_chains, ChainConfig, VelocityDistribution};
use hug_core::Vector;
use serde_json::{json, Value};

use crate::config::{ConstraintKind, Experiment, ExperimentConfig};
use crate::CliError;

const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
const DESK_REPLICATES: usize = 1000;
const DESK_STEPS: usize = 1000;
const FULL_REPLICATES: usize = 10_000;
const FULL_STEPS: usize = 10_000;

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Output<'_> {
    fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

pub fn run(exp: Experiment, mut cfg: ExperimentConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    let started = Instant::now();
    let mut output = Output { dir: out, files: Vec::new() };
    let report = match exp {
        Experiment::Table1 => run_table1(&mut cfg, &mut output)?,
        Experiment::Convergence => run_convergence(&mut cfg, &mut output)?,
        Experiment::PhasePortrait => run_portrait(&mut cfg, &mut output)?,
        Experiment::Foldback => run_foldback(&mut cfg, &mut output)?,
        Experiment::Ellipsoid => run_ellipsoid(&mut cfg, &mut output)?,
        Experiment::Ecdf => run_ecdf(&mut cfg, &mut output)?,
        Experiment::SphereTail => run_sphere_tail(&mut cfg, &mut output)?,
        Experiment::Chain => run_chain(&mut cfg, &mut output)?,
    };
    output.json(&format!("{}_summary.json", exp.name().replace('-', "_")), &report)?;
    let mut echo = serde_json::to_value(&cfg).map_err(io::Error::from)?;
    if let Value::Object(map) = &mut echo {
        map.retain(|_, v| !v.is_null());
    }
    let manifest = json!({
        "experiment": exp.name(),
        "config": echo,
        "seed": cfg.seed,
        "code_version": CODE_VERSION,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "files": output.files,
    });
    let mut w = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn solver(substeps: Option<usize>) -> Result<ReferenceSolver, CliError> {
    Ok(match substeps {
        Some(s) => ReferenceSolver::new(s)?,
        None => ReferenceSolver::default(),
    })
}

fn run_table1(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let table = table1::run_table1(&solver(cfg.substeps)?)?;
    out.write("table1.csv", |w| table.write_csv(w))?;
    for r in &table.rows {
        println!(
            "delta = 1/{:<4} one-step {:.3e} (published {:.2e}){}  two-step {:.3e} (published {:.2e})",
            (1.0 / r.delta).round(),
            r.one_step,
            r.published_one_step,
            if r.one_step_suspect { " [published value suspect]" } else { "" },
            r.two_step,
            r.published_two_step
        );
    }
    Ok(serde_json::to_value(&table).map_err(io::Error::from)?)
}

fn require_state(
    cfg: &ExperimentConfig,
    map: &dyn ConstraintMap,
    default: Option<PhaseState>,
) -> Result<PhaseState, CliError> {
    match (&cfg.x0, &cfg.v0, default) {
        (Some(x), Some(v), _) => Ok(PhaseState::from_slices(x, v)),
        (None, None, Some(d)) => Ok(d),
        _ => Err(CliError::Config(format!(
            "`x0` and `v0` (length {}) are required with a custom constraint",
            map.dim_n()
        ))),
    }
}

fn run_convergence(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let (map, default): (Box<dyn ConstraintMap>, _) = match &cfg.constraint {
        Some(spec) => (spec.build()?, None),
        None => (Box::new(table1::map()), Some(table1::initial_state())),
    };
    let init = require_state(cfg, map.as_ref(), default)?;
    let t_end = *cfg.t_end.get_or_insert(1.0);
    let deltas = cfg
        .deltas
        .get_or_insert_with(|| table1::PUBLISHED.iter().map(|r| r.0).collect())
        .clone();
    let solver = solver(cfg.substeps)?;
    let table = convergence_study(map.as_ref(), &init, t_end, &deltas, &solver)?;
    let double = double_step_consistency(map.as_ref(), &init, &deltas, &solver)?;
    out.write("convergence.csv", |w| table.write_csv(w))?;
    println!(
        "orders: one-step {:?}, two-step {:?}, global x {:?}, global v {:?}, final x {:?}",
        table.one_step_order, table.two_step_order, table.global_x_order, table.global_v_order, table.final_x_order
    );
    Ok(json!({
        "one_step_order": table.one_step_order,
        "two_step_order": table.two_step_order,
        "global_x_order": table.global_x_order,
        "global_v_order": table.global_v_order,
        "final_x_order": table.final_x_order,
        "double_step_order": double.order,
    }))
}

fn run_portrait(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let model = EllipseModel::new(
        *cfg.a.get_or_insert(1.0),
        *cfg.b.get_or_insert(4.0),
        *cfg.c.get_or_insert(2f64.sqrt()),
    )?;
    let d = PortraitGrid::default();
    let grid = PortraitGrid {
        phi_points: *cfg.phi_points.get_or_insert(d.phi_points),
        p_points: *cfg.p_points.get_or_insert(d.p_points),
        t_end: *cfg.t_end.get_or_insert(d.t_end),
        steps: *cfg.steps.get_or_insert(d.steps),
        stride: d.stride,
    };
    let tracks = portrait::phase_portrait(&model, &grid)?;
    out.write("phase_portrait.csv", |w| portrait::write_portrait_csv(&tracks, w))?;
    let count = |m| tracks.iter().filter(|t| t.motion == m).count();
    use hug_core::ellipse::Motion;
    Ok(json!({
        "tracks": tracks.len(),
        "rotation": count(Motion::Rotation),
        "libration": count(Motion::Libration),
        "separatrix": count(Motion::Separatrix),
    }))
}

fn run_foldback(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let delta = *cfg.delta.get_or_insert(foldback::DEFAULT_DELTA);
    let steps = *cfg.steps.get_or_insert(foldback::DEFAULT_STEPS);
    let report = foldback::run_foldback(delta, steps, &solver(cfg.substeps)?)?;
    out.write("foldback.csv", |w| report.write_csv(w))?;
    out.write("foldback_arc.csv", |w| report.write_arc_csv(w))?;
    let s = &report.summary;
    println!("classification: {}", s.motion.as_str());
    if let Some((lo, hi)) = s.turning_points {
        println!("turning angles: {lo:.6} .. {hi:.6}");
    }
    println!(
        "p sign changes: {}, sup distance to reference: {:.3e}, |x_K - x_0|: {:.3e}",
        s.p_sign_changes, s.sup_distance, s.return_distance
    );
    Ok(serde_json::to_value(s).map_err(io::Error::from)?)
}

fn scale(cfg: &mut ExperimentConfig) -> (usize, usize) {
    let full = *cfg.full_scale.get_or_insert(false);
    let (r, k) = if full { (FULL_REPLICATES, FULL_STEPS) } else { (DESK_REPLICATES, DESK_STEPS) };
    (*cfg.replicates.get_or_insert(r), *cfg.steps.get_or_insert(k))
}

fn ellipsoid_config(cfg: &mut ExperimentConfig) -> Result<EllipsoidConfig, CliError> {
    let (replicates, steps) = scale(cfg);
    let mut ec = match &cfg.constraint {
        None => EllipsoidConfig::preset(*cfg.dim.get_or_insert(3))?,
        Some(spec) => {
            if cfg.dim.is_some() {
                return Err(CliError::Config("give either `dim` or `constraint`, not both".into()));
            }
            let diag = match (spec.kind, &spec.diagonal, spec.negate) {
                (ConstraintKind::Quadric, Some(d), false) => d.clone(),
                _ => {
                    return Err(CliError::Config(
                        "ellipsoid constraint must be a non-negated diagonal quadric".into(),
                    ))
                }
            };
            let x0 = cfg
                .x0
                .clone()
                .ok_or_else(|| CliError::Config("`x0` is required with a custom ellipsoid".into()))?;
            EllipsoidConfig { diag, x0, delta: 0.01, steps, replicates, seed: 0 }
        }
    };
    ec.delta = *cfg.delta.get_or_insert(ec.delta);
    ec.steps = steps;
    ec.replicates = replicates;
    ec.seed = *cfg.seed.get_or_insert(0);
    Ok(ec)
}

fn ecdf_summary(result: &ellipsoid::EllipsoidStudyResult) -> Result<Value, CliError> {
    let ecdf = result.ecdf()?;
    let n = ecdf.sorted().len() as f64;
    let mean = ecdf.mean();
    let var = ecdf.sorted().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(json!({
        "replicates": result.replicates.len(),
        "failures": result.failures(),
        "ecdf_mean": mean,
        "ecdf_mean_std_error": (var / n).sqrt(),
    }))
}

fn run_ellipsoid(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ec = ellipsoid_config(cfg)?;
    let result = ellipsoid::run_ellipsoid(&ec)?;
    out.write("ellipsoid_scatter.csv", |w| result.write_scatter_csv(w))?;
    out.write("ellipsoid_ecdf.csv", |w| result.write_ecdf_csv(w))?;
    let mut summary = ecdf_summary(&result)?;
    let rho = result.rank_correlation()?;
    summary["rank_correlation"] = json!(rho);
    println!("n = {}, K = {}, replicates = {}: rank correlation {rho:.4}", ec.dim(), ec.steps, ec.replicates);
    if cfg.constraint.is_none() {
        let showcase = ellipsoid::showcase(&ec, &Vector::repeat(ec.dim(), 1.0))?;
        for (s, d) in &showcase {
            println!("showcase |v_perp(0)| = {s}: d_max = {d:.4}");
        }
        summary["showcase"] = json!(showcase);
    }
    Ok(summary)
}

fn run_ecdf(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let dims = cfg.dims.get_or_insert_with(|| vec![3, 6]).clone();
    let mut per_dim = serde_json::Map::new();
    for n in dims {
        let mut sub = ExperimentConfig { dim: Some(n), ..cfg.clone() };
        let ec = ellipsoid_config(&mut sub)?;
        cfg.seed = sub.seed;
        cfg.delta = sub.delta;
        cfg.steps = sub.steps;
        cfg.replicates = sub.replicates;
        cfg.full_scale = sub.full_scale;
        let result = ellipsoid::run_ellipsoid(&ec)?;
        out.write(&format!("ecdf_n{n}.csv"), |w| result.write_ecdf_csv(w))?;
        let summary = ecdf_summary(&result)?;
        println!("n = {n}: mean d_max fraction {:.4}", summary["ecdf_mean"].as_f64().unwrap_or(f64::NAN));
        per_dim.insert(format!("n{n}"), summary);
    }
    Ok(Value::Object(per_dim))
}

fn run_sphere_tail(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let hs = cfg.h.get_or_insert_with(|| (0..=20).map(|i| i as f64 / 20.0).collect()).clone();
    let ns = cfg.n.get_or_insert_with(|| vec![2, 3, 6, 10, 50]).clone();
    let mut rows = Vec::new();
    for &n in &ns {
        for &h in &hs {
            rows.push((n, h, sphere_tail_probability(h, n)?));
        }
    }
    out.write("sphere_tail.csv", |w| {
        writeln!(w, "#schema=hug-sphere-tail/1")?;
        writeln!(w, "n,h,probability")?;
        for (n, h, p) in &rows {
            writeln!(w, "{n},{h},{p}")?;
        }
        Ok(())
    })?;
    if rows.len() == 1 {
        println!("{}", rows[0].2);
    }
    Ok(json!({ "evaluations": rows.len() }))
}

fn run_chain(cfg: &mut ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let (target, default_x0): (Box<dyn ConstraintMap>, Option<Vec<f64>>) = match &cfg.constraint {
        Some(spec) => (spec.build()?, None),
        None => (
            Box::new(Quadric::diagonal(&[-1.0, -4.0])?),
            Some(vec![0.5, 0.2]),
        ),
    };
    let x0 = match (&cfg.x0, default_x0) {
        (Some(x), _) => x.clone(),
        (None, Some(d)) => d,
        (None, None) => return Err(CliError::Config("`x0` is required with a custom target".into())),
    };
    cfg.x0 = Some(x0.clone());
    let params = HugParams::new(*cfg.delta.get_or_insert(0.1), *cfg.steps.get_or_insert(10))?;
    let q = VelocityDistribution::isotropic(*cfg.sigma.get_or_insert(1.0))?;
    let mut config = ChainConfig::new(params, q)
        .with_reversibility_check(*cfg.reversibility_check.get_or_insert(false));
    if let Some(s) = cfg.random_walk {
        config = config.with_random_walk(s)?;
    }
    let iterations = *cfg.iterations.get_or_insert(10_000);
    let seeds = match (&cfg.seeds, cfg.seed) {
        (Some(s), None) => s.clone(),
        (None, s) => vec![s.unwrap_or(0)],
        (Some(_), Some(_)) => return Err(CliError::Config("give either `seed` or `seeds`".into())),
    };
    cfg.seeds = Some(seeds.clone());
    let records = run_chains(target.as_ref(), &config, &Vector::from_column_slice(&x0), iterations, &seeds)?;
    let mut summaries = Vec::new();
    for (seed, rec) in seeds.iter().zip(&records) {
        out.write(&format!("chain_seed{seed}.csv"), |w| rec.write_csv(w))?;
        let s = rec.summary(&config);
        println!(
            "seed {seed}: acceptance {:.4}, failures {}, second moments {:?}",
            s.acceptance_rate, s.hug_failures, s.second_moments
        );
        summaries.push(json!({ "seed": seed, "summary": s }));
    }
    Ok(Value::Array(summaries))
}
