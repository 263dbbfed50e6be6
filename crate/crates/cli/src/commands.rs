use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use swapsim::config::{Preset, RunConfig};
use swapsim::io::{
    read_counts_csv, write_counts_csv, write_events_ndjson, write_fourfolds_csv, Manifest,
};
use swapsim::photonics::{random_walk_phase, ONE_WAVELENGTH_PER_400S};
use swapsim::pipeline::{
    count_tables, postselect_fourfold, run_experiment, spacelike_audit, ScheduleEntry,
};
use swapsim::qstate::AnalyzerAngle;
use swapsim::rng::{substream, Stream};
use swapsim::stats::{
    allan_variance, chsh as chsh_of, chsh_from_tables, correlation, fidelity_from_correlation,
    loglog_slope, simulate_lhv, ChshResult, ChshSettings, CorrelationEstimate, CountTable,
};
use swapsim::Error;

use crate::output::{csv_table, emit, fmt, json_doc, short_hash, write_file};
use crate::{Format, PresetArg, RunArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    /// 2 configuration, 3 insufficient data, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 4,
            CliError::Core(e) => match e {
                Error::Io(_) => 4,
                Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => 4,
                Error::Csv(_)
                | Error::EmptyCounts
                | Error::SettingsMismatch(_)
                | Error::UndefinedInversion { .. }
                | Error::InsufficientData(_)
                | Error::UnmatchedRecord(_) => 3,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Config(msg.into()))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| config_error(format!("bad {what} value {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(config_error(format!("{what} must be finite")))
            }
        })
        .collect()
}

fn preset(p: PresetArg) -> Preset {
    match p {
        PresetArg::Ideal => Preset::Ideal,
        PresetArg::Paper => Preset::Paper,
        PresetArg::Delayed => Preset::Delayed,
    }
}

pub fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json(&fs::read_to_string(path)?)?,
        None => RunConfig::preset(preset(args.preset), args.seed.unwrap_or(1))?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn chsh_settings(text: &str) -> Result<ChshSettings, CliError> {
    match parse_list(text, "setting")?[..] {
        [a1, a2, b1, b2] => Ok(ChshSettings::new(a1, a2, b1, b2)),
        _ => Err(config_error("--settings needs four angles a1,a2,b1,b2")),
    }
}

pub struct SimulationOutcome {
    pub manifest: Manifest,
    pub tables: Vec<CountTable>,
    pub fourfolds: usize,
    pub spacelike_fraction: f64,
}

/// Runs one configuration end to end and writes the three artifacts into
/// `dir`.
pub fn simulate_into(cfg: &RunConfig, dir: &Path) -> Result<SimulationOutcome, CliError> {
    let log = run_experiment(&cfg.to_experiment()?)?;
    let records = postselect_fourfold(&log, cfg.coincidence_window)?;
    let settings: Vec<_> = cfg.schedule.iter().map(ScheduleEntry::setting).collect();
    let tables = count_tables(&records, &settings);
    let manifest = Manifest::new(cfg.seed, cfg.statistics_hash());
    fs::create_dir_all(dir)?;
    write_events_ndjson(
        BufWriter::new(File::create(dir.join("events.ndjson"))?),
        &log,
        &manifest,
    )?;
    write_fourfolds_csv(
        BufWriter::new(File::create(dir.join("fourfolds.csv"))?),
        &records,
        &manifest,
    )?;
    write_counts_csv(
        BufWriter::new(File::create(dir.join("counts.csv"))?),
        &tables,
        Some(&manifest),
    )?;
    fs::write(dir.join("config.json"), cfg.to_json())?;
    Ok(SimulationOutcome {
        manifest,
        fourfolds: records.len(),
        spacelike_fraction: spacelike_audit(&records, &cfg.geometry)?.fraction_spacelike,
        tables,
    })
}

#[derive(Serialize)]
struct TableRow {
    phi0_deg: f64,
    phi3_deg: f64,
    total: u64,
    e: Option<f64>,
    sigma_e: Option<f64>,
}

fn table_rows(tables: &[CountTable]) -> Vec<TableRow> {
    tables
        .iter()
        .map(|t| {
            let est = correlation(t).ok();
            TableRow {
                phi0_deg: t.phi0.degrees(),
                phi3_deg: t.phi3.degrees(),
                total: t.total(),
                e: est.map(|e| e.e),
                sigma_e: est.map(|e| e.sigma_e),
            }
        })
        .collect()
}

fn table_csv(manifest: &Manifest, rows: &[TableRow]) -> Result<Vec<u8>, CliError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.phi0_deg),
                fmt(r.phi3_deg),
                r.total.to_string(),
                r.e.map(fmt).unwrap_or_default(),
                r.sigma_e.map(fmt).unwrap_or_default(),
            ]
        })
        .collect();
    csv_table(
        manifest,
        &["phi0_deg", "phi3_deg", "total", "E", "sigma_E"],
        &body,
    )
}

pub fn simulate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let outcome = simulate_into(&cfg, &cfg.output_dir)?;
    eprintln!(
        "{} fourfolds in {} settings; space-like fraction {}",
        outcome.fourfolds,
        outcome.tables.len(),
        outcome.spacelike_fraction
    );
    let rows = table_rows(&outcome.tables);
    let bytes = match args.format {
        Format::Csv => table_csv(&outcome.manifest, &rows)?,
        Format::Json => json_doc(
            &outcome.manifest,
            &serde_json::json!({
                "output_dir": cfg.output_dir,
                "fourfolds": outcome.fourfolds,
                "spacelike_fraction": outcome.spacelike_fraction,
                "settings": rows,
            }),
        )?,
    };
    emit(None, "", &bytes)
}

#[derive(Serialize)]
struct ChshReport {
    s: f64,
    sigma_s: f64,
    significance: f64,
    settings_deg: [f64; 4],
    correlations: Vec<CorrelationRow>,
}

#[derive(Serialize)]
struct CorrelationRow {
    phi0_deg: f64,
    phi3_deg: f64,
    e: f64,
    sigma_e: f64,
    total: u64,
}

fn chsh_report(result: &ChshResult, estimates: &[CorrelationEstimate]) -> ChshReport {
    let st = result.settings;
    ChshReport {
        s: result.s,
        sigma_s: result.sigma_s,
        significance: result.significance,
        settings_deg: [st.a1, st.a2, st.b1, st.b2].map(AnalyzerAngle::degrees),
        correlations: estimates
            .iter()
            .map(|e| CorrelationRow {
                phi0_deg: e.phi0.degrees(),
                phi3_deg: e.phi3.degrees(),
                e: e.e,
                sigma_e: e.sigma_e,
                total: e.total_counts,
            })
            .collect(),
    }
}

fn print_chsh_table(report: &ChshReport) {
    eprintln!(
        "{:>8} {:>8} {:>8} {:>9} {:>8}",
        "phi0", "phi3", "N", "E", "sigma_E"
    );
    for c in &report.correlations {
        let n = if c.total == 0 {
            "-".to_string()
        } else {
            c.total.to_string()
        };
        eprintln!(
            "{:>8} {:>8} {:>8} {:>+9.4} {:>8.4}",
            c.phi0_deg, c.phi3_deg, n, c.e, c.sigma_e
        );
    }
    eprintln!(
        "S = {:.4} ± {:.4}  ({:.2} standard deviations above 2)",
        report.s, report.sigma_s, report.significance
    );
}

fn chsh_bytes(
    manifest: &Manifest,
    report: &ChshReport,
    format: Format,
) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => json_doc(manifest, report),
        Format::Csv => csv_table(
            manifest,
            &["S", "sigma_S", "significance"],
            &[vec![
                fmt(report.s),
                fmt(report.sigma_s),
                fmt(report.significance),
            ]],
        ),
    }
}

fn chsh_file(format: Format) -> &'static str {
    match format {
        Format::Json => "chsh.json",
        Format::Csv => "chsh.csv",
    }
}

/// CHSH over count tables, also returning the per-setting estimates.
fn evaluate_chsh(tables: &[CountTable], settings: ChshSettings) -> Result<ChshReport, CliError> {
    let result = chsh_from_tables(tables, settings)?;
    let mut estimates = Vec::new();
    for (a, b) in settings.pairs() {
        if let Some(t) = tables.iter().find(|t| t.same_setting(a, b)) {
            estimates.push(correlation(t)?);
        }
    }
    Ok(chsh_report(&result, &estimates))
}

pub fn chsh(
    counts: &Path,
    settings: &str,
    out: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let settings = chsh_settings(settings)?;
    let bytes = fs::read(counts)?;
    let tables = read_counts_csv(&bytes[..])?;
    let manifest = std::str::from_utf8(&bytes)
        .ok()
        .and_then(|text| text.lines().next())
        .and_then(Manifest::parse_comment_line)
        .unwrap_or_else(|| Manifest::new(0, short_hash(&bytes)));
    let report = evaluate_chsh(&tables, settings)?;
    print_chsh_table(&report);
    emit(
        out,
        chsh_file(format),
        &chsh_bytes(&manifest, &report, format)?,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityPoint {
    pub phi_deg: f64,
    pub f: f64,
    pub sigma_f: f64,
    pub total: u64,
}

/// Simulates `φ0 = φ3` at every angle and inverts each correlation into a
/// fidelity. Angles without counts or with an undefined inversion are
/// skipped with a warning.
pub fn fidelity_points(
    cfg: &RunConfig,
    angles: &[f64],
    duration: f64,
) -> Result<(Manifest, Vec<FidelityPoint>), CliError> {
    let mut scan = cfg.clone();
    scan.schedule = angles
        .iter()
        .map(|a| ScheduleEntry::new(*a, *a, duration))
        .collect();
    let log = run_experiment(&scan.to_experiment()?)?;
    let records = postselect_fourfold(&log, scan.coincidence_window)?;
    let settings: Vec<_> = scan.schedule.iter().map(ScheduleEntry::setting).collect();
    let mut points = Vec::new();
    for t in count_tables(&records, &settings) {
        let fit = correlation(&t).and_then(|e| fidelity_from_correlation(&e));
        match fit {
            Ok(f) => points.push(FidelityPoint {
                phi_deg: t.phi0.degrees(),
                f: f.f,
                sigma_f: f.sigma_f,
                total: t.total(),
            }),
            Err(e) => eprintln!("warning: skipping {}°: {e}", t.phi0.degrees()),
        }
    }
    Ok((Manifest::new(scan.seed, scan.statistics_hash()), points))
}

fn fidelity_rows(points: &[FidelityPoint], label: Option<&str>) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            let mut row: Vec<String> = label.map(str::to_string).into_iter().collect();
            row.extend([
                fmt(p.phi_deg),
                fmt(p.f),
                fmt(p.sigma_f),
                p.total.to_string(),
            ]);
            row
        })
        .collect()
}

pub fn fidelity_scan(args: &RunArgs, angles: &str, duration: Option<f64>) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let angles = parse_list(angles, "angle")?;
    let duration = duration.unwrap_or(cfg.schedule[0].duration_s);
    let (manifest, points) = fidelity_points(&cfg, &angles, duration)?;
    if points.is_empty() {
        return Err(Error::InsufficientData("no angle produced a fidelity estimate".into()).into());
    }
    let (name, bytes) = match args.format {
        Format::Csv => (
            "fidelity_scan.csv",
            csv_table(
                &manifest,
                &["phi_deg", "F", "sigma_F", "total"],
                &fidelity_rows(&points, None),
            )?,
        ),
        Format::Json => (
            "fidelity_scan.json",
            json_doc(&manifest, &serde_json::json!({ "points": points }))?,
        ),
    };
    emit(args.out.as_deref(), name, &bytes)
}

pub struct AllanArgs {
    pub sigma: Option<f64>,
    pub duration: f64,
    pub dt: f64,
    pub taus: String,
    pub realizations: u64,
    pub seed: u64,
}

#[derive(Serialize)]
struct AllanReport {
    sigma_rad_per_sqrt_s: f64,
    duration_s: f64,
    sample_interval_s: f64,
    realizations: u64,
    taus_s: Vec<f64>,
    adev_rad: Vec<f64>,
    loglog_slope: Option<f64>,
}

fn allan_report(args: &AllanArgs) -> Result<(Manifest, AllanReport), CliError> {
    let sigma = args.sigma.unwrap_or(ONE_WAVELENGTH_PER_400S);
    let taus = parse_list(&args.taus, "tau")?;
    if args.realizations == 0 {
        return Err(config_error("--realizations must be at least 1"));
    }
    let mut avar = vec![0.0; taus.len()];
    for r in 0..args.realizations {
        let mut rng = substream(args.seed, Stream::Phase, r);
        let drift = random_walk_phase(sigma, args.dt, args.duration, &mut rng)?;
        let series = allan_variance(&drift, &taus)?;
        for (acc, v) in avar.iter_mut().zip(series.avar) {
            *acc += v / args.realizations as f64;
        }
    }
    let adev: Vec<f64> = avar.iter().map(|v| v.sqrt()).collect();
    let slope = if taus.len() >= 2 && adev.iter().all(|a| *a > 0.0) {
        Some(loglog_slope(&taus, &adev))
    } else {
        None
    };
    let key = format!(
        "allan sigma={sigma} duration={} dt={} taus={:?}",
        args.duration, args.dt, taus
    );
    Ok((
        Manifest::new(args.seed, short_hash(key.as_bytes())),
        AllanReport {
            sigma_rad_per_sqrt_s: sigma,
            duration_s: args.duration,
            sample_interval_s: args.dt,
            realizations: args.realizations,
            taus_s: taus,
            adev_rad: adev,
            loglog_slope: slope,
        },
    ))
}

fn allan_bytes(
    manifest: &Manifest,
    report: &AllanReport,
    format: Format,
) -> Result<(&'static str, Vec<u8>), CliError> {
    Ok(match format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .taus_s
                .iter()
                .zip(&report.adev_rad)
                .map(|(t, a)| vec![fmt(*t), fmt(*a), fmt(a / (2.0 * std::f64::consts::PI))])
                .collect();
            (
                "allan.csv",
                csv_table(manifest, &["tau_s", "adev_rad", "adev_wavelengths"], &rows)?,
            )
        }
        Format::Json => ("allan.json", json_doc(manifest, report)?),
    })
}

pub fn allan(args: &AllanArgs, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let (manifest, report) = allan_report(args)?;
    if let Some(s) = report.loglog_slope {
        eprintln!("log-log slope {s:.3}");
    }
    let (name, bytes) = allan_bytes(&manifest, &report, format)?;
    emit(out, name, &bytes)
}

#[derive(Serialize)]
struct LhvRun {
    run: u64,
    s: f64,
    sigma_s: f64,
    significance: f64,
    above_bound: bool,
}

pub fn lhv_test(
    events: u64,
    runs: u64,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    if events == 0 || runs == 0 {
        return Err(config_error("--events and --runs must be positive"));
    }
    let settings = ChshSettings::canonical();
    let manifest = Manifest::new(
        seed,
        short_hash(format!("lhv events={events} runs={runs}").as_bytes()),
    );
    let mut rows = Vec::new();
    for run in 0..runs {
        let mut rng = substream(seed, Stream::Lhv, run);
        let tables = simulate_lhv(&settings, events, &mut rng);
        let r = chsh_from_tables(&tables, settings)?;
        if run == 0 {
            if let Some(dir) = out {
                let mut buf = Vec::new();
                write_counts_csv(&mut buf, &tables, Some(&manifest))?;
                write_file(dir, "lhv_counts.csv", &buf)?;
            }
        }
        rows.push(LhvRun {
            run,
            s: r.s,
            sigma_s: r.sigma_s,
            significance: r.significance,
            above_bound: r.s > 2.0 + 3.0 * r.sigma_s,
        });
    }
    let max_s = rows.iter().map(|r| r.s).fold(f64::NEG_INFINITY, f64::max);
    let above = rows.iter().filter(|r| r.above_bound).count();
    eprintln!(
        "{runs} runs of {events} events per setting: max S = {max_s:.4}; {above} above 2 + 3 sigma"
    );
    let (name, bytes) = match format {
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.run.to_string(),
                        fmt(r.s),
                        fmt(r.sigma_s),
                        fmt(r.significance),
                        r.above_bound.to_string(),
                    ]
                })
                .collect();
            (
                "lhv_runs.csv",
                csv_table(
                    &manifest,
                    &["run", "S", "sigma_S", "significance", "above_bound"],
                    &body,
                )?,
            )
        }
        Format::Json => (
            "lhv_runs.json",
            json_doc(
                &manifest,
                &serde_json::json!({ "max_s": max_s, "runs": rows }),
            )?,
        ),
    };
    emit(out, name, &bytes)
}

#[derive(Serialize)]
struct PaperSummary {
    published: ChshReport,
    simulated: ChshReport,
    simulated_fourfolds: usize,
    delayed: ChshReport,
    counts_identical_with_delay: bool,
    spacelike_fraction: f64,
    spacelike_fraction_delayed: f64,
    fidelity_min: Option<FidelityPoint>,
    fidelity_max: Option<FidelityPoint>,
    allan_slope: Option<f64>,
}

pub fn reproduce_paper(seed: u64, out: &Path, format: Format) -> Result<(), CliError> {
    let e = CorrelationEstimate::external;
    let published = [
        e(-0.628, 0.046, 0.0, 22.5),
        e(0.677, 0.042, 0.0, 67.5),
        e(-0.541, 0.045, 45.0, 22.5),
        e(-0.575, 0.047, 45.0, 67.5),
    ];
    let published = chsh_report(&chsh_of(&published)?, &published);
    let settings = ChshSettings::canonical();

    let paper = RunConfig::preset(Preset::Paper, seed)?;
    let delayed = RunConfig::preset(Preset::Delayed, seed)?;
    let prompt_dir: PathBuf = out.join("paper");
    let delayed_dir: PathBuf = out.join("delayed");
    let a = simulate_into(&paper, &prompt_dir)?;
    let b = simulate_into(&delayed, &delayed_dir)?;
    let identical =
        fs::read(prompt_dir.join("counts.csv"))? == fs::read(delayed_dir.join("counts.csv"))?;
    let simulated = evaluate_chsh(&a.tables, settings)?;
    let delayed_report = evaluate_chsh(&b.tables, settings)?;
    write_file(
        &prompt_dir,
        "chsh.json",
        &json_doc(&a.manifest, &simulated)?,
    )?;
    write_file(
        &delayed_dir,
        "chsh.json",
        &json_doc(&b.manifest, &delayed_report)?,
    )?;

    let angles: Vec<f64> = (0..12).map(|k| 15.0 * k as f64).collect();
    let (m_scan, prompt_points) = fidelity_points(&paper, &angles, paper.schedule[0].duration_s)?;
    let (_, delayed_points) = fidelity_points(&delayed, &angles, delayed.schedule[0].duration_s)?;
    let mut rows = fidelity_rows(&prompt_points, Some("paper"));
    rows.extend(fidelity_rows(&delayed_points, Some("delayed")));
    write_file(
        out,
        "fidelity_scan.csv",
        &csv_table(
            &m_scan,
            &["preset", "phi_deg", "F", "sigma_F", "total"],
            &rows,
        )?,
    )?;

    let (m_allan, allan) = allan_report(&AllanArgs {
        sigma: None,
        duration: 36_000.0,
        dt: 1.0,
        taus: "1,2,5,10,20,50,100,200,500,1000,2000,5000,10000".into(),
        realizations: 1,
        seed,
    })?;
    let (name, bytes) = allan_bytes(&m_allan, &allan, Format::Csv)?;
    write_file(out, name, &bytes)?;

    let by_f = |a: &&FidelityPoint, b: &&FidelityPoint| a.f.total_cmp(&b.f);
    let summary = PaperSummary {
        fidelity_min: prompt_points.iter().min_by(by_f).cloned(),
        fidelity_max: prompt_points.iter().max_by(by_f).cloned(),
        published,
        simulated,
        simulated_fourfolds: a.fourfolds,
        delayed: delayed_report,
        counts_identical_with_delay: identical,
        spacelike_fraction: a.spacelike_fraction,
        spacelike_fraction_delayed: b.spacelike_fraction,
        allan_slope: allan.loglog_slope,
    };
    let manifest = Manifest::new(seed, paper.statistics_hash());
    write_file(out, "summary.json", &json_doc(&manifest, &summary)?)?;

    eprintln!("published correlations:");
    print_chsh_table(&summary.published);
    eprintln!("simulated ({} fourfolds):", summary.simulated_fourfolds);
    print_chsh_table(&summary.simulated);
    eprintln!(
        "delayed choice: counts identical = {}, space-like fraction {} → {}",
        identical, a.spacelike_fraction, b.spacelike_fraction
    );
    let bytes = match format {
        Format::Json => json_doc(&manifest, &summary)?,
        Format::Csv => {
            let kv = |k: &str, v: String| vec![k.to_string(), v];
            let mut rows = vec![
                kv("published_S", fmt(summary.published.s)),
                kv("published_sigma_S", fmt(summary.published.sigma_s)),
                kv(
                    "published_significance",
                    fmt(summary.published.significance),
                ),
                kv("simulated_S", fmt(summary.simulated.s)),
                kv("simulated_sigma_S", fmt(summary.simulated.sigma_s)),
                kv(
                    "simulated_significance",
                    fmt(summary.simulated.significance),
                ),
                kv(
                    "simulated_fourfolds",
                    summary.simulated_fourfolds.to_string(),
                ),
                kv("counts_identical_with_delay", identical.to_string()),
                kv("spacelike_fraction", fmt(a.spacelike_fraction)),
                kv("spacelike_fraction_delayed", fmt(b.spacelike_fraction)),
            ];
            if let Some(s) = summary.allan_slope {
                rows.push(kv("allan_slope", fmt(s)));
            }
            csv_table(&manifest, &["quantity", "value"], &rows)?
        }
    };
    std::io::stdout().write_all(&bytes)?;
    Ok(())
}
