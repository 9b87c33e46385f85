use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::output::{render_csv, write_file, Header};
use crate::harness::record::{Diagnostics, ResultRecord, Scalar, SdValues};
use crate::harness::verify::{self, VerifyReport};
use crate::propagator::PostSelection;
use crate::steepest::{sd_distribution, sd_mean_momentum, sd_weak_momentum, SdConfig};
use crate::tptd::{arrival_time_momentum, arrival_time_momentum_on};
use crate::weak::{analyze, analyze_on, Analysis};

const SD_NOTE: &str = "steepest-descent overlay assumes x >> a and a Gaussian-dominated transmitted packet";

fn run_analysis(cfg: &ExperimentConfig) -> Result<Analysis> {
    cfg.validate()?;
    let system = cfg.system();
    if let Some(w) = system.state.far_field_warning() {
        log::warn!("{w}");
    }
    let sel = PostSelection::new(cfg.x, &system, cfg.grid.margin)?;
    analyze(&sel, &system, &cfg.grid)
}

fn header(command: &str, cfg: &ExperimentConfig, a: &Analysis) -> Header {
    let mut h = Header::new(command, cfg);
    let d = Diagnostics::of(a, far_field_notes(cfg));
    h.push("t_max", d.t_max)
        .push("time_samples", d.time_samples)
        .push("momentum_panels", d.momentum_panels)
        .push("momentum_window", format!("[{}, {}]", d.p_lo, d.p_hi))
        .push("normalization", a.distribution.normalization)
        .push("tail_mass", d.tail_mass)
        .push("tail_slope", d.tail_slope)
        .push("masked_mass", d.masked_mass)
        .push("reflected_overlap_ratio", d.reflected_overlap_ratio)
        .push("sd_cutoff", SD_NOTE)
        .push("diagnostics", if d.notes.is_empty() { "none".into() } else { d.notes.join("; ") });
    h
}

fn far_field_notes(cfg: &ExperimentConfig) -> Vec<String> {
    cfg.state.far_field_warning().into_iter().collect()
}

/// Transition path time distribution with its steepest-descent overlay.
pub fn cmd_fig1(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let a = run_analysis(cfg)?;
    let sd = SdConfig::new(&cfg.system(), cfg.x);
    let d = &a.distribution;
    let rows: Vec<Vec<f64>> = (0..d.grid.samples)
        .map(|i| {
            let t = d.grid.time(i);
            vec![t, d.density[i], sd_distribution(&sd, t)]
        })
        .collect();
    let text = render_csv(&header("fig1", cfg, &a), &["t", "P_exact", "P_SD"], &rows);
    write_file(out_dir, &format!("{}_fig1.csv", cfg.name), &text)
}

/// Deviation of the weak momentum from its time average, exact and
/// steepest-descent, plus both imaginary parts.
pub fn cmd_fig2(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let a = run_analysis(cfg)?;
    let sd = SdConfig::new(&cfg.system(), cfg.x);
    let sd_mean = sd_mean_momentum(&sd);
    let mean = a.summary.mean_p;
    let rows: Vec<Vec<f64>> = (0..a.series.grid.samples)
        .map(|i| {
            let t = a.series.grid.time(i);
            let pw_sd = sd_weak_momentum(&sd, t);
            let (re, im) = if a.series.valid[i] {
                (a.series.p_weak[i].re - mean, a.series.p_weak[i].im)
            } else {
                (f64::NAN, f64::NAN)
            };
            vec![t, re, pw_sd.re - sd_mean, im, pw_sd.im]
        })
        .collect();
    let mut h = header("fig2", cfg, &a);
    h.push("mean_p_exact", mean).push("mean_p_sd", sd_mean);
    let text = render_csv(
        &h,
        &["t", "re_dpw_exact", "re_dpw_sd", "im_pw_exact", "im_pw_sd"],
        &rows,
    );
    write_file(out_dir, &format!("{}_fig2.csv", cfg.name), &text)
}

/// Headline numbers, each paired with its value at doubled resolution.
pub fn table_record(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let mut timings = BTreeMap::new();
    let clock = Instant::now();
    let base = run_analysis(cfg)?;
    timings.insert("analysis".to_string(), clock.elapsed().as_secs_f64());

    let system = cfg.system();
    let sel = PostSelection::new(cfg.x, &system, cfg.grid.margin)?;
    let doubled_controls = cfg.grid.doubled();
    let clock = Instant::now();
    let doubled = analyze_on(
        &sel,
        base.scan.grid.refined(),
        &base.scan.momentum.doubled(),
        &system,
        &doubled_controls,
    )?;
    timings.insert("analysis_doubled".to_string(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let arrival = arrival_time_momentum(cfg.x, cfg.grid.delta_x, &system, &cfg.grid)?;
    timings.insert("arrival".to_string(), clock.elapsed().as_secs_f64());
    let clock = Instant::now();
    let arrival_grid = crate::tptd::TimeGrid::new(arrival.t_max, cfg.grid.time_samples)?.refined();
    let arrival_momentum =
        crate::propagator::build_momentum_grid(&system.state, &system.params, &cfg.grid)?.doubled();
    let arrival_doubled = arrival_time_momentum_on(
        cfg.x,
        cfg.grid.delta_x,
        arrival_grid,
        &arrival_momentum,
        &system,
        &doubled_controls,
    )?;
    timings.insert("arrival_doubled".to_string(), clock.elapsed().as_secs_f64());

    let sd = SdValues::compute(&SdConfig::new(&system, cfg.x), &base.scan.grid)?;
    let (s, t) = (&base.summary, &doubled.summary);
    let resolution: BTreeMap<String, Scalar> = [
        ("mean_p", s.mean_p, t.mean_p),
        ("std_p", s.std_p(), t.std_p()),
        ("var_p", s.var_p, t.var_p),
        ("mean_h", s.mean_h, t.mean_h),
        ("var_h", s.var_h, t.var_h),
        ("mean_t", s.mean_t, t.mean_t),
        ("var_t", s.var_t, t.var_t),
        ("product_stddev", s.product_stddev, t.product_stddev),
        ("product_second_moment", s.product_second_moment, t.product_second_moment),
        ("variance_product", s.variance_product(), t.variance_product()),
        ("commutator_im", s.commutator.im, t.commutator.im),
        ("normalization", base.distribution.normalization, doubled.distribution.normalization),
        ("arrival_momentum", arrival.momentum, arrival_doubled.momentum),
    ]
    .into_iter()
    .map(|(k, a, b)| (k.to_string(), Scalar::new(a, b)))
    .collect();

    Ok(ResultRecord {
        experiment: cfg.name.clone(),
        config_sha256: cfg.hash(),
        config: cfg.clone(),
        normalization: base.distribution.normalization,
        summary: base.summary,
        arrival,
        steepest_descent: sd,
        resolution,
        diagnostics: Diagnostics::of(&base, far_field_notes(cfg)),
        timings_seconds: timings,
    })
}

/// Writes `<name>_table.json`. With `resolution_check`, a drift above 1e-8
/// on any headline scalar is an error.
pub fn cmd_table(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    resolution_check: bool,
) -> Result<(ResultRecord, PathBuf)> {
    let record = table_record(cfg)?;
    let path = write_file(
        out_dir,
        &format!("{}_table.json", cfg.name),
        &serde_json::to_string_pretty(&record)?,
    )?;
    if resolution_check {
        let (name, drift) = record.max_drift();
        if drift > RESOLUTION_TOLERANCE {
            return Err(Error::Resolution(format!(
                "{name} changes by {drift:.3e} (relative) at doubled resolution, above {RESOLUTION_TOLERANCE:e}"
            )));
        }
    }
    Ok((record, path))
}

pub const RESOLUTION_TOLERANCE: f64 = 1e-8;

pub fn verify_report(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let base = run_analysis(cfg)?;
    let system = cfg.system();
    let sel = PostSelection::new(cfg.x, &system, cfg.grid.margin)?;
    let doubled = analyze_on(
        &sel,
        base.scan.grid.refined(),
        &base.scan.momentum.doubled(),
        &system,
        &cfg.grid.doubled(),
    )?;
    let mut checks = vec![verify::unitarity(&base, &system)?];
    checks.extend(verify::normalization(&base, &cfg.grid));
    checks.push(verify::free_particle_oracle(&system, cfg.x, &cfg.grid)?);
    checks.push(verify::weak_momentum_identity(&base, &system, &cfg.grid)?);
    checks.extend(verify::derivative_routes(&base, &system)?);
    checks.extend(verify::uncertainty(&base));
    checks.push(verify::grid_convergence(&base, &doubled));
    if system.barrier.is_free() {
        checks.extend(verify::spatial_average(&system, cfg.x, &cfg.grid)?);
    }
    Ok(VerifyReport { experiment: cfg.name.clone(), config_sha256: cfg.hash(), checks })
}

/// Runs the invariant suite and writes `<name>_verify.json`.
pub fn cmd_verify(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(VerifyReport, PathBuf)> {
    let report = verify_report(cfg)?;
    let path = write_file(
        out_dir,
        &format!("{}_verify.json", cfg.name),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok((report, path))
}

/// One table record per width parameter plus a summary CSV.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    gammas: &[f64],
    out_dir: &Path,
) -> Result<(Vec<ResultRecord>, PathBuf)> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig(vec!["sweep needs at least one gamma".into()]));
    }
    let mut records = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let mut point = cfg.with_gamma(g);
        point.name = format!("{}_gamma{g:e}", cfg.name);
        log::info!("sweep point gamma = {g}");
        let (record, _) = cmd_table(&point, out_dir, false)?;
        records.push(record);
    }
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let (s, sd) = (&r.summary, &r.steepest_descent);
            vec![
                r.config.state.gamma,
                s.mean_p,
                s.std_p(),
                sd.std_p,
                s.mean_t,
                s.var_t,
                sd.var_t,
                s.mean_h,
                s.var_h,
                sd.var_h,
                s.variance_product(),
                sd.uncertainty_product,
                r.arrival.momentum,
                sd.arrival_momentum,
                r.max_drift().1,
            ]
        })
        .collect();
    let mut h = Header::new("sweep", cfg);
    h.push("gammas", format!("{gammas:?}"));
    for r in &records {
        h.push(
            &format!("t_max[gamma={:e}]", r.config.state.gamma),
            format!(
                "{} (tail mass {:.3e}, slope {:.3})",
                r.diagnostics.t_max, r.diagnostics.tail_mass, r.diagnostics.tail_slope
            ),
        );
    }
    h.push("sd_cutoff", SD_NOTE);
    let text = render_csv(
        &h,
        &[
            "gamma",
            "mean_p",
            "std_p",
            "std_p_sd",
            "mean_t",
            "var_t",
            "var_t_sd",
            "mean_h",
            "var_h",
            "var_h_sd",
            "variance_product",
            "variance_product_sd",
            "arrival_p",
            "arrival_p_sd",
            "max_drift",
        ],
        &rows,
    );
    let path = write_file(out_dir, &format!("{}_sweep.csv", cfg.name), &text)?;
    Ok((records, path))
}
