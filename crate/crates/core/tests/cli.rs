use std::path::Path;
use std::process::{Command, Output};

use ratsim::config::PAPER_600;
use ratsim::{run_sweep, Sweep};

fn ratsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn report_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn check_exit_codes() {
    let out = ratsim(&["check", "--preset", "paper_600"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("satisfied = true"));

    let dir = tempfile::tempdir().unwrap();
    let untested = PAPER_600.replace("pi_a = 0.0028", "pi_a = 0");
    let path = write_cfg(dir.path(), "untested.cfg", &untested);
    let out = ratsim(&["check", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("satisfied = false"));

    let missing: String = PAPER_600
        .lines()
        .filter(|l| !l.starts_with("n ="))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = write_cfg(dir.path(), "missing.cfg", &missing);
    let out = ratsim(&["check", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('n'));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), "bad.cfg", "f_v = 1\nc_m = abc\n");
    let out = ratsim(&["check", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let path = write_cfg(
        dir.path(),
        "unknown.cfg",
        &format!("{PAPER_600}\nbogus = 1\n"),
    );
    assert_eq!(ratsim(&["check", "--config", &path]).status.code(), Some(1));
    assert_eq!(
        ratsim(&["check", "--config", "/nonexistent/x.cfg"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ratsim(&["check", "--preset", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(ratsim(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn sweep_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = ratsim(&[
        "sweep",
        "--c-m",
        "0.139",
        "--at",
        "498",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,c_off,min_pi_a_percent,feasible"));
    assert!(text.lines().any(|l| l == "10,498.00,0.279116,1"), "{text}");
    assert_eq!(text.lines().count(), 1 + 4 * 65);

    let spec = Sweep {
        extra_c_off: vec![498.0],
        ..Sweep::with_defaults(0.139)
    };
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(rows.len(), text.lines().count() - 1);
    for (line, row) in text.lines().skip(1).zip(&rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<u32>().unwrap(), row.n);
        assert!(
            (cols[1].parse::<f64>().unwrap() - row.c_off).abs() <= 0.005,
            "{line}"
        );
        let pct: f64 = cols[2].parse().unwrap();
        let internal = row.min_pi_a * 100.0;
        assert!(
            (pct - internal).abs() <= 5e-6 * internal,
            "{line} vs {internal}"
        );
    }

    let out = ratsim(&["sweep", "--points", "2"]);
    assert_eq!(stdout(&out).lines().count(), 1 + 2 * 4);
    let out = ratsim(&["sweep", "--points", "2", "--n", "3,7,9"]);
    assert_eq!(stdout(&out).lines().count(), 1 + 2 * 3);

    let out = ratsim(&["sweep", "--c-m", "0", "--linear", "--points", "5"]);
    assert!(stdout(&out)
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("0")));

    let out = ratsim(&["sweep", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cost_conversion() {
    let out = ratsim(&["cost", "--monthly", "600"]);
    let text = stdout(&out);
    assert_eq!(report_value(&text, "epochs_per_month"), "4320");
    assert_eq!(report_value(&text, "c_m"), "0.138889");

    let text = stdout(&ratsim(&["cost", "--monthly", "200", "--c-off", "498"]));
    assert_eq!(report_value(&text, "c_m"), "0.046296");
    assert_eq!(report_value(&text, "challenge_period_epochs"), "10756.8");

    assert_eq!(
        report_value(&stdout(&ratsim(&["cost", "--monthly", "432"])), "c_m"),
        "0.100000"
    );
    assert_eq!(ratsim(&["cost", "--monthly", "-5"]).status.code(), Some(1));
    assert_eq!(
        ratsim(&["cost", "--epoch-minutes", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let out = ratsim(&[
        "simulate",
        "--preset",
        "paper_600",
        "--epochs",
        "200000",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for key in ["z_u_v", "z_u_p", "table_z_u_v", "table_z_u_p"] {
        let z: f64 = report_value(&text, key).parse().unwrap();
        assert!(z.abs() <= 3.0, "{key} = {z}");
    }
    let csv = std::fs::read_to_string(csv).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 22);

    let fraud = PAPER_600.replace("pi_p = 1", "pi_p = 0");
    let path = write_cfg(dir.path(), "fraud.cfg", &fraud);
    let out = ratsim(&[
        "simulate", "--config", &path, "--epochs", "20000", "--model", "evasion",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report_value(&stdout(&out), "trigger_rate"), "0");

    let out = ratsim(&[
        "simulate",
        "--preset",
        "paper_600",
        "--reward-split",
        "nope",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |log: &str| {
        let log = dir.path().join(log);
        let out = ratsim(&[
            "simulate",
            "--preset",
            "paper_200",
            "--epochs",
            "5000",
            "--seed",
            "9",
            "--out",
            log.to_str().unwrap(),
        ]);
        (out.stdout, std::fs::read(log).unwrap())
    };
    let (a, log_a) = run("a.tsv");
    let (b, log_b) = run("b.tsv");
    assert_eq!(a, b);
    assert_eq!(log_a, log_b);
    assert_eq!(String::from_utf8(log_a).unwrap().lines().count(), 5000);
}

#[test]
fn equilibrium_listing() {
    let dir = tempfile::tempdir().unwrap();
    let strict = PAPER_600
        .replace("c_m = 0.138889", "c_m = 0.1")
        .replace("pi_a = 0.0028", "pi_a = 0.01")
        .replace("c_off = 498", "c_off = 500")
        .replace("d_v = 498", "d_v = 500");
    let path = write_cfg(dir.path(), "strict.cfg", &strict);
    let listings: Vec<String> = ["baseline", "evasion"]
        .iter()
        .map(|m| {
            let out = ratsim(&[
                "equilibrium",
                "--config",
                &path,
                "--model",
                m,
                "--resolution",
                "51",
            ]);
            assert_eq!(out.status.code(), Some(0));
            stdout(&out)
        })
        .collect();
    for text in &listings {
        assert!(text.contains("ideal_profile = equilibrium"));
        assert!(
            text.lines().any(|l| l.starts_with("1\t1\tpure_ideal\t")),
            "{text}"
        );
    }

    let costly = strict.replace("c_m = 0.1", "c_m = 0.6");
    let path = write_cfg(dir.path(), "costly.cfg", &costly);
    let text = stdout(&ratsim(&[
        "equilibrium",
        "--config",
        &path,
        "--resolution",
        "51",
    ]));
    assert!(text.contains("ideal_profile = rejected"));
    assert!(!text.lines().any(|l| l.starts_with("1\t1\t")), "{text}");
}
