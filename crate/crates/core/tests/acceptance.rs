//! End-to-end acceptance run: every experiment at its default resolution,
//! one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::io::Write;

use capmod::experiments::{
    cmd_ahlfors, cmd_build, cmd_calibrate, cmd_decay, cmd_duality, cmd_llc, cmd_quotient, cmd_report, oracle_gate,
    Criterion, ExperimentConfig, ExperimentReport, Status,
};

const SQUARE_BAND: (f64, f64) = (0.95, 1.05);
const SQUARE_SECONDS: f64 = 60.0;
const ORACLE_RELATIVE: f64 = 1e-6;
const AHLFORS_BOUNDS: (f64, f64) = (1.0 / 4096.0, 280.0);
const DECAY_FINEST: f64 = 1e-2;
const DUALITY_CUMULATIVE: f64 = 1.5;
const QUOTIENT_SMALL: f64 = 1e-2;

/// Writes to the stderr handle directly so the lines survive output capture.
fn line(text: String) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn num(v: &serde_json::Value, path: &[&str]) -> f64 {
    let mut v = v;
    for k in path {
        v = &v[*k];
    }
    v.as_f64().unwrap_or_else(|| panic!("missing number at {path:?}"))
}

/// Pinned checks on the saved numbers, independent of the assertion flags.
fn recheck(report: &ExperimentReport) -> Vec<(Criterion, bool, String)> {
    let r = &report.results;
    match report.experiment.as_str() {
        "calibrate" => {
            let v = num(r, &["unit_square", "value"]);
            let s = num(r, &["unit_square", "seconds"]);
            let e = num(r, &["oracle", "max_relative_error"]);
            vec![
                (
                    Criterion::Calibration,
                    (SQUARE_BAND.0..=SQUARE_BAND.1).contains(&v) && s <= SQUARE_SECONDS,
                    format!("Mod_2 = {v:.6} in {s:.1} s"),
                ),
                (Criterion::OracleEquivalence, e <= ORACLE_RELATIVE, format!("max relative error {e:.2e}")),
            ]
        }
        "ahlfors" => {
            let (lo, hi) = (num(r, &["min_ratio_inner"]), num(r, &["max_ratio_outer"]));
            vec![(
                Criterion::AhlforsRegularity,
                lo >= AHLFORS_BOUNDS.0 && hi <= AHLFORS_BOUNDS.1,
                format!("ratios in [{lo:.4}, {hi:.4}]"),
            )]
        }
        "decay" => {
            let f = num(r, &["finest"]);
            vec![(Criterion::ModulusDecay, f < DECAY_FINEST, format!("finest modulus {f:.3e}"))]
        }
        "duality" => {
            let g = num(r, &["cumulative_growth"]);
            vec![(Criterion::DualityTrend, g >= DUALITY_CUMULATIVE, format!("cumulative growth {g:.3}"))]
        }
        "quotient" => {
            let (a, b) = (num(r, &["e_family", "value_x"]), num(r, &["e_family", "value_quotient"]));
            let same = r["away"]["identical"].as_bool() == Some(true);
            vec![(
                Criterion::QuotientInvariance,
                same && a < QUOTIENT_SMALL && b < QUOTIENT_SMALL,
                format!("away identical {same}, E-family {a:.3e} / {b:.3e}"),
            )]
        }
        _ => Vec::new(),
    }
}

#[test]
fn acceptance() {
    let gate = oracle_gate();
    line(format!("{} oracle gate", if gate.is_ok() { "PASS" } else { "FAIL" }));
    let cases = gate.expect("oracle corpus must pass before the acceptance run");
    assert!(!cases.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { output_dir: dir.path().to_path_buf(), ..Default::default() };
    let runs = [cmd_build, cmd_calibrate, cmd_ahlfors, cmd_llc, cmd_decay, cmd_duality, cmd_quotient];
    let mut extra: BTreeMap<Criterion, Vec<(bool, String)>> = BTreeMap::new();
    for run in runs {
        let report = run(&cfg).expect("experiment runs to completion");
        for (c, ok, detail) in recheck(&report) {
            extra.entry(c).or_default().push((ok, detail));
        }
    }

    let consolidated = cmd_report(&cfg).unwrap();
    assert!(consolidated.missing.is_empty(), "{:?}", consolidated.missing);
    let mut failed = Vec::new();
    for c in &consolidated.criteria {
        let checks = extra.get(&c.criterion).map(Vec::as_slice).unwrap_or(&[]);
        let ok = c.status == Status::Pass && checks.iter().all(|(ok, _)| *ok);
        let detail: Vec<String> = c
            .assertions
            .iter()
            .filter(|(_, a)| !ok || !a.passed)
            .map(|(_, a)| format!("{}: {}", a.name, a.detail))
            .chain(checks.iter().map(|(_, d)| d.clone()))
            .collect();
        line(format!("{} {} [{}]", if ok { "PASS" } else { "FAIL" }, c.criterion, detail.join("; ")));
        if !ok {
            failed.push(c.criterion.to_string());
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
