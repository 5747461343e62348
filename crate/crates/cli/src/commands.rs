//! Subcommand implementations. Each run writes into one output directory
//! and finishes with a manifest listing every file and its digest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bigjump_core::asymptotics::{closed_form_for, per_epoch_series_grid, report_from_tail, ruin_asymptotic_eval, ValidationReport};
use bigjump_core::mc::map_chunks;
use bigjump_core::mrv_claims::{mu_limit, MuMethod};
use bigjump_core::rare_sets::from_ruin_set;
use bigjump_core::risk_engine::{simulate, ModelBundle, Regime};
use bigjump_core::rng::StreamFamily;
use bigjump_core::tail_laws::{
    class_diagnostics, default_x_window, hill_estimate, karamata_lower_estimate, log_grid, matuszewska_estimate, ClassThresholds,
    Survival, TailLaw, DEFAULT_V_GRID, KARAMATA_V_GRID,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, long_format, OutputDir, RunManifest, Table, Versions, MANIFEST_NAME};

pub const REPORT_HEADER: [&str; 9] = ["x", "n", "p_hat", "ci_low", "ci_high", "p_series", "p_closed", "ratio_emp_series", "ratio_emp_closed"];
pub const RUIN_HEADER: [&str; 12] = [
    "x",
    "n",
    "p_hat",
    "ci_low",
    "ci_high",
    "psi_hat",
    "psi_ci_low",
    "psi_ci_high",
    "psi_series",
    "psi_closed",
    "ratio_psi_series",
    "ratio_psi_closed",
];

/// Files and manifest of a finished run, plus a console summary.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: String,
}

pub fn resolve_workers(cfg: &ExperimentConfig) -> usize {
    cfg.mc.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(pool.install(f))
}

fn finish(cfg: &ExperimentConfig, command: &str, mut out: OutputDir, started: Instant, workers: usize, diagnostics: serde_json::Value, summary: String) -> Result<RunOutcome, CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_digest: cfg.digest(),
        seed: cfg.mc.seed,
        samples: cfg.mc.samples,
        workers,
        versions: Versions::default(),
        wall_time_s: started.elapsed().as_secs_f64(),
        diagnostics,
        files: out.files().to_vec(),
    };
    out.write_json(MANIFEST_NAME, &manifest)?;
    Ok(RunOutcome { dir: out.root().to_path_buf(), manifest, summary })
}

fn moment_guard(bundle: &ModelBundle) -> serde_json::Value {
    match bundle.regime {
        Regime::Theorem41 { p, j_plus } => json!({ "p": p, "j_plus": j_plus, "weight_moment_p": bundle.weight_moment(p).ok() }),
        _ => serde_json::Value::Null,
    }
}

pub fn report_table(report: &ValidationReport) -> Table {
    let mut t = Table::new(&REPORT_HEADER);
    for r in &report.rows {
        t.push(vec![
            fmt_f64(r.x),
            r.emp.n.to_string(),
            fmt_f64(r.emp.p_hat),
            fmt_f64(r.emp.ci_low),
            fmt_f64(r.emp.ci_high),
            fmt_f64(r.p_series),
            fmt_opt(r.p_closed),
            fmt_f64(r.ratio_emp_series),
            fmt_opt(r.ratio_emp_closed),
        ]);
    }
    t
}

/// Empirical tail of `D(∞)` against the per-epoch series and closed form.
pub fn run_tail(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let bundle = cfg.bundle()?;
    let set = cfg.rare_set()?;
    let grid = cfg.mc.x_grid.resolve()?;
    let workers = resolve_workers(cfg);
    let mc = &cfg.mc;
    let report = in_pool(workers, || -> Result<ValidationReport, CliError> {
        let tail = simulate(&bundle, &set, &grid, mc.samples, &mc.truncation, mc.seed, None)?.tail;
        Ok(report_from_tail(&bundle, &set, tail, &mc.series, mc.seed)?)
    })??;

    let mut out = OutputDir::create(&cfg.output_dir())?;
    if cfg.outputs.formats.contains(&Format::Csv) {
        out.write("tail_report.csv", &report_table(&report).render())?;
        let rows = &report.rows;
        out.write(
            "tail_plot.csv",
            &long_format(
                &grid,
                &[
                    ("p_hat", rows.iter().map(|r| Some(r.emp.p_hat)).collect()),
                    ("p_series", rows.iter().map(|r| Some(r.p_series)).collect()),
                    ("p_closed", rows.iter().map(|r| r.p_closed).collect()),
                    ("ratio_emp_series", rows.iter().map(|r| Some(r.ratio_emp_series)).collect()),
                    ("ratio_emp_closed", rows.iter().map(|r| r.ratio_emp_closed).collect()),
                ],
            ),
        )?;
    }
    if cfg.outputs.formats.contains(&Format::Json) {
        out.write_json("tail_report.json", &report)?;
    }
    let diagnostics = json!({
        "truncation": report.tail,
        "series_epochs": report.series_epochs,
        "series_coarse": report.series_coarse,
        "closed_form": report.closed_form,
        "starved_x": report.rows.iter().filter(|r| r.starved).map(|r| r.x).collect::<Vec<_>>(),
        "moment_guard": moment_guard(&bundle),
    });
    let mut summary = String::from("x  p_hat  p_series  ratio\n");
    for r in &report.rows {
        summary.push_str(&format!("{:.6e}  {:.4e}  {:.4e}  {:.4}\n", r.x, r.emp.p_hat, r.p_series, r.ratio_emp_series));
    }
    finish(cfg, "tail", out, started, workers, diagnostics, summary)
}

/// Infinite-horizon ruin probabilities next to the tail of `D(∞)` on the same paths.
pub fn run_ruin(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let bundle = cfg.bundle()?;
    let (premium, ruin) = cfg.premiums()?;
    let set = from_ruin_set(&ruin);
    let grid = cfg.mc.x_grid.resolve()?;
    let workers = resolve_workers(cfg);
    let mc = &cfg.mc;
    let (res, series) = in_pool(workers, || -> Result<_, CliError> {
        let res = simulate(&bundle, &set, &grid, mc.samples, &mc.truncation, mc.seed, Some(&premium))?;
        let series = per_epoch_series_grid(&bundle, &set, &grid, &mc.series, mc.seed)?;
        Ok((res, series))
    })??;
    let closed = closed_form_for(&bundle, &set)?;
    let psi = res.ruin.as_ref().expect("premiums were given");

    let mut table = Table::new(&RUIN_HEADER);
    let mut closed_values = Vec::with_capacity(grid.len());
    for (j, &x) in grid.iter().enumerate() {
        let p = &res.tail.points[j];
        let q = &psi[j];
        let c = closed.as_ref().map(|c| ruin_asymptotic_eval(c, x)).transpose()?;
        closed_values.push(c);
        table.push(vec![
            fmt_f64(x),
            p.n.to_string(),
            fmt_f64(p.p_hat),
            fmt_f64(p.ci_low),
            fmt_f64(p.ci_high),
            fmt_f64(q.p_hat),
            fmt_f64(q.ci_low),
            fmt_f64(q.ci_high),
            fmt_f64(series[j].value),
            fmt_opt(c),
            fmt_f64(q.p_hat / series[j].value),
            fmt_opt(c.map(|c| q.p_hat / c)),
        ]);
    }
    let mut out = OutputDir::create(&cfg.output_dir())?;
    if cfg.outputs.formats.contains(&Format::Csv) {
        out.write("ruin_report.csv", &table.render())?;
        out.write(
            "ruin_plot.csv",
            &long_format(
                &grid,
                &[
                    ("p_hat", res.tail.points.iter().map(|p| Some(p.p_hat)).collect()),
                    ("psi_hat", psi.iter().map(|p| Some(p.p_hat)).collect()),
                    ("psi_series", series.iter().map(|s| Some(s.value)).collect()),
                    ("psi_closed", closed_values.clone()),
                    ("ratio_psi_series", psi.iter().zip(&series).map(|(p, s)| Some(p.p_hat / s.value)).collect()),
                ],
            ),
        )?;
    }
    if cfg.outputs.formats.contains(&Format::Json) {
        out.write_json("ruin_report.json", &json!({ "tail": res.tail, "psi": psi, "series": series, "closed_form": closed }))?;
    }
    let diagnostics = json!({
        "truncation": res.tail.diagnostics,
        "ruin_set": set.label(),
        "premium_rates": premium.rates,
        "series_epochs": series.first().map(|s| s.truncated_at),
        "series_coarse": series.iter().any(|s| s.coarse),
        "closed_form": closed,
        "moment_guard": moment_guard(&bundle),
    });
    let mut summary = String::from("x  p_hat  psi_hat  psi_series\n");
    for (j, x) in grid.iter().enumerate() {
        summary.push_str(&format!("{x:.6e}  {:.4e}  {:.4e}  {:.4e}\n", res.tail.points[j].p_hat, psi[j].p_hat, series[j].value));
    }
    finish(cfg, "ruin", out, started, workers, diagnostics, summary)
}

/// Survival function of a sample.
struct EmpiricalSurvival {
    sorted: Vec<f64>,
}

impl Survival for EmpiricalSurvival {
    fn tail(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|v| *v <= x);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }
}

fn read_sample(path: &Path, column: usize) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.split(',').nth(column).map(str::trim).ok_or_else(|| CliError::Schema(format!("{}:{}: no column {column}", path.display(), i + 1)))?;
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
            Ok(v) => return Err(CliError::Schema(format!("{}:{}: claim sizes must be finite and non-negative, got {v}", path.display(), i + 1))),
            Err(_) if i == 0 => {} // header
            Err(_) => return Err(CliError::Schema(format!("{}:{}: not a number: {field:?}", path.display(), i + 1))),
        }
    }
    if values.is_empty() {
        return Err(CliError::Schema(format!("{}: no values", path.display())));
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
struct IndexReport {
    source: String,
    n: usize,
    hill_k: usize,
    hill: bigjump_core::tail_laws::IndexEstimate,
    x_window: [f64; 2],
    matuszewska: Option<bigjump_core::tail_laws::MatuszewskaEstimate>,
    karamata_k_minus: Option<bigjump_core::tail_laws::IndexEstimate>,
    classes: Option<bigjump_core::tail_laws::ClassReport>,
    in_a_star: Option<bool>,
    analytic: Option<bigjump_core::tail_laws::AnalyticIndexes>,
    notes: Vec<String>,
}

/// Hill, Matuszewska and Karamata estimates for a catalog law or a sample file.
pub fn run_index(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let section = cfg.index.as_ref().ok_or_else(|| CliError::schema("index", "section is required"))?;
    let workers = resolve_workers(cfg);
    let mut notes = Vec::new();
    let report = match (&section.law, &section.sample_file) {
        (Some(law), None) => {
            law.validate()?;
            let n = cfg.mc.samples;
            let family = StreamFamily::new(cfg.mc.seed).fork(0x696e_6478);
            let sample: Vec<f64> = in_pool(workers, || {
                map_chunks(n, |r| r.map(|i| law.sample(&mut family.path(i))).collect::<Vec<_>>()).into_iter().flatten().collect()
            })?;
            let k = section.hill_k.unwrap_or((sample.len() / 100).max(1));
            let window = match section.x_window {
                Some([lo, hi]) => log_grid(lo, hi, 32),
                None => default_x_window(),
            };
            let mat = matuszewska_estimate(law, &DEFAULT_V_GRID, &window).map_err(|e| notes.push(format!("matuszewska: {e}"))).ok();
            let kar = karamata_lower_estimate(law, &KARAMATA_V_GRID, &window).map_err(|e| notes.push(format!("karamata: {e}"))).ok();
            let classes = class_diagnostics(law, ClassThresholds::default()).map_err(|e| notes.push(format!("classes: {e}"))).ok();
            let in_a_star = classes.as_ref().map(|c| c.in_a_star == bigjump_core::tail_laws::Verdict::Yes);
            IndexReport {
                source: format!("{law:?}"),
                n: sample.len(),
                hill_k: k,
                hill: hill_estimate(&sample, k)?,
                x_window: [window[0], *window.last().unwrap()],
                matuszewska: mat,
                karamata_k_minus: kar,
                classes,
                in_a_star,
                analytic: law.analytic_indexes(),
                notes,
            }
        }
        (None, Some(path)) => {
            let mut sample = read_sample(path, section.column)?;
            let k = section.hill_k.unwrap_or((sample.len() / 100).max(1));
            let hill = hill_estimate(&sample, k)?;
            sample.sort_by(f64::total_cmp);
            let n = sample.len();
            let [lo, hi] = section.x_window.unwrap_or([sample[n / 2], sample[n.saturating_sub(100).max(n / 2)]]);
            let emp = EmpiricalSurvival { sorted: sample };
            let (mat, kar) = if lo > 0.0 && hi > lo {
                let window = log_grid(lo, hi, 32);
                (
                    matuszewska_estimate(&emp, &DEFAULT_V_GRID, &window).map_err(|e| notes.push(format!("matuszewska: {e}"))).ok(),
                    karamata_lower_estimate(&emp, &KARAMATA_V_GRID, &window).map_err(|e| notes.push(format!("karamata: {e}"))).ok(),
                )
            } else {
                notes.push(format!("empirical x-window [{lo}, {hi}] is degenerate; Matuszewska and Karamata skipped"));
                (None, None)
            };
            IndexReport {
                source: path.display().to_string(),
                n,
                hill_k: k,
                hill,
                x_window: [lo, hi],
                matuszewska: mat,
                karamata_k_minus: kar,
                classes: None,
                in_a_star: None,
                analytic: None,
                notes,
            }
        }
        _ => return Err(CliError::schema("index", "give exactly one of `law` and `sample_file`")),
    };
    let mut out = OutputDir::create(&cfg.output_dir())?;
    out.write_json("index_report.json", &report)?;
    let summary = format!(
        "hill = {:.4} (k = {}), J+ = {}, J- = {}, K- = {}, in A* = {}\n",
        report.hill.value,
        report.hill_k,
        report.matuszewska.as_ref().map_or("n/a".into(), |m| format!("{:.4} ({:?})", m.j_plus.value, m.j_plus.status)),
        report.matuszewska.as_ref().map_or("n/a".into(), |m| format!("{:.4} ({:?})", m.j_minus.value, m.j_minus.status)),
        report.karamata_k_minus.as_ref().map_or("n/a".into(), |k| format!("{:.4}", k.value)),
        report.in_a_star.map_or("n/a".into(), |b| b.to_string()),
    );
    finish(cfg, "index", out, started, workers, json!({ "notes": report.notes }), summary)
}

/// Rare-set geometry: supporting directions, validity checks and `μ(A)`.
pub fn run_geometry(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let set = cfg.rare_set()?;
    let validation = set.validate();
    let workers = resolve_workers(cfg);
    let claims = match (&cfg.claims, cfg.dependence.comonotone_claims()) {
        (_, Some(c)) => Some(c),
        (c, None) => c.clone(),
    };
    let mut notes = Vec::new();
    let mu = match claims.as_ref().filter(|c| c.mrv_structure().is_some()) {
        Some(model) => {
            let method = match model.radial() {
                Some(TailLaw::Pareto { .. }) => MuMethod::Analytic,
                _ => MuMethod::Empirical { x_ref: 1e3, n: cfg.mc.samples, seed: cfg.mc.seed },
            };
            in_pool(workers, || mu_limit(model, &set, method))?.map_err(|e| notes.push(format!("mu: {e}"))).ok()
        }
        None => {
            notes.push("no MRV claim model: mu(A) not evaluated".into());
            None
        }
    };
    let directions: Vec<&[f64]> = set.directions().iter().map(|d| d.coords()).collect();
    let report = json!({
        "label": set.label(),
        "dimension": set.dim(),
        "directions": directions,
        "validation": { "passed": validation.passed, "failures": validation.failures },
        "mu": mu,
        "notes": notes,
    });
    let mut out = OutputDir::create(&cfg.output_dir())?;
    out.write_json("geometry.json", &report)?;
    let mut summary = format!("{} (dimension {})\n", set.label(), set.dim());
    for d in &directions {
        summary.push_str(&format!("  direction {d:?}\n"));
    }
    summary.push_str(&format!("  valid: {}\n", validation.passed));
    if let Some(m) = &mu {
        summary.push_str(&format!("  mu(A) = {:.6}\n", m.value));
    }
    finish(cfg, "geometry", out, started, workers, json!({ "notes": notes }), summary)
}
