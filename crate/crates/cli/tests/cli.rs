use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use asymphot_cli::config::{config_from_metadata, parse_config, preset, serialize_config};
use asymphot_cli::scenario::run_scenario;
use asymphot_cli::table::render_csv;
use asymphot_cli::CliError;

fn asymphot(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymphot"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "\
scenario = custom
structure.r = 0.2
grid.count = 41
sweep.param = length
sweep.values = 9.5, 10, 10.5
";

#[test]
fn scenarios_lists_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = asymphot(&["scenarios"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "@flat-spdc",
        "@ppln-counter",
        "@bragg-sfwm",
        "@bragg-sfwm-caption",
    ] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn run_writes_named_tables_and_sweep_writes_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out = asymphot(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("custom_spectrum.csv").exists());
    assert!(dir.path().join("custom_sweep.csv").exists());

    let only = dir.path().join("only");
    let out = asymphot(&["sweep", cfg.to_str().unwrap()], &only);
    assert!(out.status.success());
    let names: Vec<_> = fs::read_dir(&only)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names, vec!["custom_sweep.csv"]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown.conf",
            "scenario = custom\nstructure.colour = red\n",
            "unknown key",
        ),
        ("syntax.conf", "scenario = custom\nnot a pair\n", "line 2"),
        (
            "invalid.conf",
            "scenario = custom\nstructure.length_um = -3\n",
            "structure.length_um",
        ),
    ];
    for (file, text, needle) in cases {
        let path = dir.path().join(file);
        fs::write(&path, text).unwrap();
        let out = asymphot(&["run", path.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(1), "{file}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{file}: {err}");
    }
    let out = asymphot(&["run", "@no-such-preset"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = asymphot(&["run", "/nonexistent/file.conf"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = asymphot(&["sweep", "@bragg-sfwm"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = asymphot(&["--threads", "0", "run", "@flat-spdc"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let err = CliError::Model {
        context: "total rate".into(),
        source: asymphot::Error::Numerical("did not converge".into()),
    };
    assert_eq!(err.exit_code(), 2);
    let err = CliError::Model {
        context: "structure".into(),
        source: asymphot::Error::Config("bad".into()),
    };
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn flags_end_up_in_the_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out = asymphot(
        &[
            "--no-normalize",
            "--dispersion-convention",
            "verbatim-paper",
            "run",
            cfg.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("custom_spectrum.csv")).unwrap();
    assert!(csv.contains("# config: output.normalize = false\n"));
    assert!(csv.contains("# config: modes.convention = verbatim-paper\n"));
    let recovered = config_from_metadata(&csv).unwrap();
    assert!(!recovered.output.normalize);

    let bad = asymphot(
        &["--dispersion-convention", "other", "run", "@flat-spdc"],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn metadata_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    assert!(asymphot(&["run", cfg.to_str().unwrap()], dir.path())
        .status
        .success());
    let first = fs::read_to_string(dir.path().join("custom_sweep.csv")).unwrap();

    let recovered = config_from_metadata(&first).unwrap();
    assert_eq!(recovered, parse_config(SMALL).unwrap());
    let again = dir.path().join("again");
    fs::create_dir(&again).unwrap();
    let doc = again.join("from_metadata.conf");
    fs::write(&doc, serialize_config(&recovered)).unwrap();
    assert!(asymphot(&["run", doc.to_str().unwrap()], &again)
        .status
        .success());
    let second = fs::read_to_string(again.join("custom_sweep.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn csv_layout() {
    let cfg = parse_config(SMALL).unwrap();
    let tables = run_scenario(&cfg).unwrap();
    let csv = render_csv(&tables[0]);
    let mut lines = csv.lines();
    let meta: Vec<&str> = lines.by_ref().take_while(|l| l.starts_with('#')).collect();
    assert!(meta
        .iter()
        .any(|l| l.starts_with("# normalization: S_RR raw_max = ")));
    assert!(meta.iter().any(|l| l.starts_with("# convergence: ")));
    assert!(meta.iter().any(|l| *l == "# singular: none"));
    let header_at = csv.lines().position(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        csv.lines().nth(header_at).unwrap(),
        "k1_rad_per_um,S_RR,S_LL,S_RL+LR"
    );
    let rows: Vec<&str> = csv.lines().skip(header_at + 1).collect();
    assert_eq!(rows.len(), 41);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        for f in fields {
            let (mantissa, exp) = f.split_once('e').unwrap();
            assert_eq!(mantissa.trim_start_matches('-').len(), 13, "{f}");
            assert!(exp.starts_with('+') || exp.starts_with('-'));
            f.parse::<f64>().unwrap();
        }
    }
    assert!(!csv.contains('\r'));
    let normalized = tables[0].column("S_RR").unwrap();
    let max = normalized.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    assert_eq!(max, 1.0);
}

#[test]
fn preset_run_matches_library_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("bragg-sfwm").unwrap();
    cfg.grid.count = 101;
    cfg.transmission.count = 20;
    let path = dir.path().join("b.conf");
    fs::write(&path, serialize_config(&cfg)).unwrap();
    assert!(asymphot(&["run", path.to_str().unwrap()], dir.path())
        .status
        .success());
    let tables = run_scenario(&cfg).unwrap();
    for t in &tables {
        let file = dir.path().join(format!("bragg-sfwm_{}.csv", t.kind));
        assert_eq!(fs::read_to_string(file).unwrap(), render_csv(t));
    }
}
