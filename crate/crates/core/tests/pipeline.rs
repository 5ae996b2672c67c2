use std::path::PathBuf;

use jrcsim::channel::TargetKind;
use jrcsim::estimator::Hypothesis;
use jrcsim::config::RunConfig;
use jrcsim::detector::StatMode;
use jrcsim::io::{read_sample_grid_bin, write_sample_grid_bin};
use jrcsim::montecarlo::{roc_sweep, run_trial, synthesize_trial, TrialOptions};
use jrcsim::plot::read_roc_csv;

fn cfg(overrides: &[&str]) -> RunConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(None, &o).unwrap()
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let file = RunConfig::load(Some(&path), &[]).unwrap();
    assert_eq!(file, RunConfig::default());
    assert_eq!(file.hash(), RunConfig::default().hash());
}

#[test]
fn large_cfo_is_detected_at_high_snr() {
    let c = cfg(&[
        "montecarlo.f_cfo_hz=100000",
        "montecarlo.snr_db=[30.0]",
        "montecarlo.genie=[false]",
        "montecarlo.n_trials=100",
    ]);
    let sweep = roc_sweep(&c.ofdm_config().unwrap(), &c.roc_request().unwrap(), 0).unwrap();
    let curve = &sweep.curves[0];
    assert_eq!(sweep.invalid[0], 0);
    assert!(curve.p_d_at(0.1) >= 0.95, "P_D = {}", curve.p_d_at(0.1));
}

#[test]
fn noiseless_decisions_follow_truth_for_large_cfo() {
    // the genie knows the adversary's CFO on both hypotheses
    for (kind, expect) in [("false", Hypothesis::H0FalseTarget), ("real", Hypothesis::H1RealTarget)] {
        let c = cfg(&[
            &format!("scenario.kind={kind}"),
            "scenario.snr_db=inf",
            if kind == "false" { "scenario.f_cfo_hz=50000" } else { "scenario.f_cfo_hz=0" },
        ]);
        let sc = c.scenario().unwrap();
        let ofdm = c.ofdm_config().unwrap();
        for opts in [TrialOptions::estimated(StatMode::Amplitude), TrialOptions { genie_cfo: Some(50e3), mode: StatMode::Amplitude }] {
            let rec = run_trial(&ofdm, &sc, &opts).unwrap();
            assert!(rec.is_valid(), "{:?}", rec.error);
            assert_eq!(rec.decision(0.0), Some(expect), "{kind} genie={}", opts.genie_cfo.is_some());
        }
    }
}

#[test]
fn sample_grid_survives_binary_round_trip() {
    let c = cfg(&["scenario.snr_db=5"]);
    let sig = synthesize_trial(&c.ofdm_config().unwrap(), &c.scenario().unwrap()).unwrap();
    let mut buf = Vec::new();
    write_sample_grid_bin(&sig.grid, &mut buf).unwrap();
    let back = read_sample_grid_bin(buf.as_slice()).unwrap();
    assert_eq!(back.y, sig.grid.y);
    assert_eq!(back.sigma2, sig.grid.sigma2);
}

#[test]
fn roc_csv_parses_back() {
    let c = cfg(&["montecarlo.n_trials=30", "montecarlo.gamma_count=7"]);
    let sweep = roc_sweep(&c.ofdm_config().unwrap(), &c.roc_request().unwrap(), 1).unwrap();
    let mut buf = Vec::new();
    jrcsim::montecarlo::write_roc_csv(&sweep.curves, &mut buf).unwrap();
    let rows = read_roc_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), sweep.curves.len() * 7);
    assert!(matches!(c.target_kind().unwrap(), TargetKind::FalseTarget));
}
