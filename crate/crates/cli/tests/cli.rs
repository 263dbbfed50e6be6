use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use swapsim::io::read_counts_csv;
use swapsim::qstate::{joint_probabilities, singlet_correlation, werner};
use swapsim::stats::{correlation, ChshSettings, CountTable};
use tempfile::TempDir;

fn swapsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swapsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = swapsim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    swapsim(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Body rows of a CSV with a manifest comment, split on commas.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn short_config(dir: &Path, preset: &str, duration: f64) -> std::path::PathBuf {
    let seed_dir = dir.join(format!("seed-{preset}"));
    ok(&["simulate", "--preset", preset, "--out", p(&seed_dir)]);
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(seed_dir.join("config.json")).unwrap()).unwrap();
    for e in cfg["schedule"].as_array_mut().unwrap() {
        e["duration_s"] = duration.into();
    }
    let path = dir.join(format!("{preset}-{duration}.json"));
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = short_config(dir.path(), "ideal", 1e-4);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--seed",
        "9",
        "--out",
        p(&a),
    ]);
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--seed",
        "9",
        "--out",
        p(&b),
    ]);
    for name in ["counts.csv", "fourfolds.csv", "events.ndjson"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
        assert!(
            x.starts_with(b"# swapsim") || x.starts_with(b"{\"manifest\""),
            "{name}"
        );
    }
    assert!(String::from_utf8(fs::read(a.join("counts.csv")).unwrap())
        .unwrap()
        .contains("seed=9"));
}

fn counts(dir: &Path) -> Vec<CountTable> {
    read_counts_csv(&fs::read(dir.join("counts.csv")).unwrap()[..]).unwrap()
}

#[test]
fn ideal_preset_matches_singlet_predictions() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "simulate",
        "--preset",
        "ideal",
        "--seed",
        "3",
        "--out",
        p(dir.path()),
    ]);
    for t in counts(dir.path()) {
        let est = correlation(&t).unwrap();
        let want = singlet_correlation(t.phi0, t.phi3);
        let sigma = ((1.0 - want * want) / t.total() as f64).sqrt();
        assert!((est.e - want).abs() <= 3.0 * sigma, "{} vs {want}", est.e);
    }
}

#[test]
fn paper_preset_gives_about_104_per_setting() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&[
        "simulate",
        "--preset",
        "paper",
        "--seed",
        "4",
        "--out",
        p(dir.path()),
        "--format",
        "json",
    ]);
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["manifest"]["seed"], 4);
    assert_eq!(summary["spacelike_fraction"], 1.0);
    for t in counts(dir.path()) {
        assert!((t.total() as f64 - 104.0).abs() <= 31.0, "{}", t.total());
    }
}

fn write_counts(path: &Path, rows: &[(f64, f64, [u64; 4])]) {
    let mut text = String::from("phi0_deg,phi3_deg,n_pp,n_pm,n_mp,n_mm\n");
    for (a, b, n) in rows {
        text += &format!("{a},{b},{},{},{},{}\n", n[0], n[1], n[2], n[3]);
    }
    fs::write(path, text).unwrap();
}

#[test]
fn chsh_on_published_correlations() {
    let dir = TempDir::new().unwrap();
    let published: [(f64, f64, f64, f64); 4] = [
        (0.0, 22.5, -0.628, 0.046),
        (0.0, 67.5, 0.677, 0.042),
        (45.0, 22.5, -0.541, 0.045),
        (45.0, 67.5, -0.575, 0.047),
    ];
    // totals chosen so the multinomial error reproduces each quoted error
    let rows: Vec<(f64, f64, [u64; 4])> = published
        .iter()
        .map(|&(a, b, e, s)| {
            let n = ((1.0 - e * e) / (s * s)).round();
            let same = (n * (1.0 + e) / 2.0).round() as u64;
            let diff = n as u64 - same;
            (a, b, [same / 2, diff / 2, diff - diff / 2, same - same / 2])
        })
        .collect();
    let path = dir.path().join("published.csv");
    write_counts(&path, &rows);
    let report: Value = serde_json::from_str(&ok(&["chsh", p(&path), "--format", "json"])).unwrap();
    let s = report["s"].as_f64().unwrap();
    let sig = report["significance"].as_f64().unwrap();
    assert!((s - 2.421).abs() < 0.01, "{s}");
    assert!((sig - 4.6).abs() < 0.2, "{sig}");
    assert_eq!(report["manifest"]["seed"], 0);

    let csv = ok(&["chsh", p(&path)]);
    assert_eq!(rows_header(&csv), "S,sigma_S,significance");
}

fn rows_header(text: &str) -> &str {
    text.lines().find(|l| !l.starts_with('#')).unwrap()
}

#[test]
fn chsh_on_ideal_analytic_counts() {
    let dir = TempDir::new().unwrap();
    let rho = werner(1.0, 0, 3).unwrap();
    let rows: Vec<(f64, f64, [u64; 4])> = ChshSettings::canonical()
        .pairs()
        .iter()
        .map(|&(a, b)| {
            let probs = joint_probabilities(&rho, a, b).unwrap();
            (
                a.degrees(),
                b.degrees(),
                probs.map(|q| (q * 1e6).round() as u64),
            )
        })
        .collect();
    let path = dir.path().join("ideal.csv");
    write_counts(&path, &rows);
    let report: Value = serde_json::from_str(&ok(&["chsh", p(&path), "--format", "json"])).unwrap();
    assert!((report["s"].as_f64().unwrap() - 2.0 * SQRT_2).abs() < 1e-5);
}

#[test]
fn chsh_on_local_counts_stays_below_bound() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&[
        "lhv-test",
        "--runs",
        "20",
        "--events",
        "10000",
        "--out",
        p(dir.path()),
    ]);
    assert!(stdout.is_empty());
    let runs = fs::read_to_string(dir.path().join("lhv_runs.csv")).unwrap();
    assert_eq!(rows(&runs).len(), 20);
    assert!(rows(&runs).iter().all(|r| r[4] == "false"));
    let report: Value = serde_json::from_str(&ok(&[
        "chsh",
        p(&dir.path().join("lhv_counts.csv")),
        "--format",
        "json",
    ]))
    .unwrap();
    let (s, sigma) = (
        report["s"].as_f64().unwrap(),
        report["sigma_s"].as_f64().unwrap(),
    );
    assert!(s <= 2.0 + 3.0 * sigma, "{s}");
}

#[test]
fn chsh_missing_setting_is_insufficient_data() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("three.csv");
    write_counts(
        &path,
        &[
            (0.0, 22.5, [5, 40, 40, 5]),
            (0.0, 67.5, [40, 5, 5, 40]),
            (45.0, 22.5, [5, 40, 40, 5]),
        ],
    );
    assert_eq!(code(&["chsh", p(&path)]), 3);
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version": 1, "seed": 1}"#).unwrap();
    assert_eq!(code(&["simulate", "--config", p(&bad)]), 2);
    assert_eq!(code(&["chsh", p(&dir.path().join("absent.csv"))]), 4);
    assert_eq!(code(&["chsh", p(&bad), "--settings", "0,45,22.5"]), 2);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = short_config(dir.path(), "ideal", 1e-5);
    assert_eq!(
        code(&[
            "simulate",
            "--config",
            p(&cfg),
            "--out",
            p(&blocker.join("sub"))
        ]),
        4
    );
    assert_eq!(code(&["allan", "--duration", "100", "--taus", "10,50"]), 3);

    let mut both: Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    both["delay"] = 0.0.into();
    let both_path = dir.path().join("both.json");
    fs::write(&both_path, both.to_string()).unwrap();
    assert_eq!(code(&["simulate", "--config", p(&both_path)]), 2);
}

fn scan(dir: &Path, preset: &str, angles: &str, duration: &str) -> Vec<(f64, f64, f64)> {
    let out = dir.join(format!("scan-{preset}-{duration}"));
    ok(&[
        "fidelity-scan",
        "--preset",
        preset,
        "--seed",
        "5",
        "--angles",
        angles,
        "--duration",
        duration,
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(out.join("fidelity_scan.csv")).unwrap();
    assert_eq!(rows_header(&text), "phi_deg,F,sigma_F,total");
    rows(&text)
        .iter()
        .map(|r| {
            (
                r[0].parse().unwrap(),
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn fidelity_scan_ideal_is_unity() {
    let dir = TempDir::new().unwrap();
    for (_, f, sigma) in scan(dir.path(), "ideal", "0,30,45,60,90", "1e-4") {
        assert!((f - 1.0).abs() <= 3.0 * sigma + 1e-12, "{f}");
    }
}

#[test]
fn fidelity_scan_dips_at_diagonal_and_ignores_delay() {
    let dir = TempDir::new().unwrap();
    let points = scan(dir.path(), "paper", "0,45,90", "400000");
    let [(_, f0, s0), (_, f45, s45), (_, f90, s90)] = points[..] else {
        panic!("{points:?}");
    };
    assert!(
        f45 >= 0.84 - 3.0 * s45 && f45 <= 0.84 + 3.0 * s45 + 0.01,
        "F(45) = {f45} ± {s45}"
    );
    assert!(
        f0 - f45 > 3.0 * (s0 * s0 + s45 * s45).sqrt(),
        "{f0} vs {f45}"
    );
    assert!(
        f90 - f45 > 3.0 * (s90 * s90 + s45 * s45).sqrt(),
        "{f90} vs {f45}"
    );

    let a = fs::read(dir.path().join("scan-paper-16000/fidelity_scan.csv"));
    assert!(a.is_err());
    scan(dir.path(), "paper", "0,22.5,45,67.5,90", "16000");
    scan(dir.path(), "delayed", "0,22.5,45,67.5,90", "16000");
    let prompt = fs::read(dir.path().join("scan-paper-16000/fidelity_scan.csv")).unwrap();
    let delayed = fs::read(dir.path().join("scan-delayed-16000/fidelity_scan.csv")).unwrap();
    assert_eq!(prompt, delayed);
}

fn allan_rows(args: &[&str]) -> Vec<(f64, f64)> {
    rows(&ok(args))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect()
}

#[test]
fn allan_zero_sigma_is_flat() {
    let rows = allan_rows(&[
        "allan",
        "--sigma",
        "0",
        "--duration",
        "1000",
        "--taus",
        "1,10,100",
    ]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|(_, a)| *a == 0.0));
}

#[test]
fn allan_calibrated_walk() {
    let rows = allan_rows(&[
        "allan",
        "--duration",
        "4000",
        "--taus",
        "10,20,50,100,200,400,1000",
        "--realizations",
        "200",
    ]);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    let slope = swapsim::stats::loglog_slope(&x, &y);
    assert!((slope - 0.5).abs() <= 0.1, "{slope}");
    // one-wavelength-per-400 s walk: adev(400 s) = 2π/√3 rad
    let at_400 = rows.iter().find(|(t, _)| *t == 400.0).unwrap().1;
    assert!(
        (at_400 / (2.0 * PI / 3f64.sqrt()) - 1.0).abs() < 0.1,
        "{at_400}"
    );
}

#[test]
fn paper_noise_violates_at_paper_scale_counts() {
    let dir = TempDir::new().unwrap();
    // ≈290 fourfolds per setting, the totals implied by the quoted ±0.042–0.047
    let cfg = short_config(dir.path(), "paper", 44_600.0);
    let out = dir.path().join("run");
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--seed",
        "12",
        "--out",
        p(&out),
    ]);
    let report: Value = serde_json::from_str(&ok(&[
        "chsh",
        p(&out.join("counts.csv")),
        "--format",
        "json",
    ]))
    .unwrap();
    let s = report["s"].as_f64().unwrap();
    assert!(s > 2.0 && s < 2.0 * SQRT_2, "{s}");
    assert!(report["significance"].as_f64().unwrap() > 3.0, "{report}");
    assert_eq!(report["manifest"]["seed"], 12);
}

#[test]
fn reproduce_paper_writes_everything() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&[
        "reproduce-paper",
        "--seed",
        "2",
        "--out",
        p(dir.path()),
        "--format",
        "json",
    ]);
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert!((summary["published"]["s"].as_f64().unwrap() - 2.421).abs() < 1e-9);
    assert_eq!(summary["counts_identical_with_delay"], true);
    assert_eq!(summary["spacelike_fraction"], 1.0);
    assert_eq!(summary["spacelike_fraction_delayed"], 0.0);
    for f in [
        "summary.json",
        "fidelity_scan.csv",
        "allan.csv",
        "paper/counts.csv",
        "delayed/counts.csv",
        "paper/events.ndjson",
        "delayed/fourfolds.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
