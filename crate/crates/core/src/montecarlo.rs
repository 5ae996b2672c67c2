//! Trial orchestration and ROC estimation.
//!
//! A trial runs scenario → channel → range-Doppler preprocessing → LS fits →
//! GLRT. The statistic is stored once per trial; every threshold of the sweep
//! is then a pure comparison on the cached values.
//!
//! Seeds: trial `i` on side `s` (0 = false targets, 1 = real targets) uses
//! `split_seed(split_seed(master, s), i)`, and the frame, fading and noise
//! streams of that trial are `split_seed(trial, 0..3)`. The trial seed does
//! not depend on the SNR or on the genie flag, so all curves of a sweep share
//! their random draws.
//!
//! Thresholds are compared against `T/σ²`, the statistic normalised by the
//! injected noise variance, so one threshold grid serves every SNR.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_awgn, draw_channel_gain, path_loss_gain, synth_echo_fast, ChannelGain, SampleGrid, Scenario, TargetKind,
};
use crate::detector::{decide, glrt_statistic, synth_templates, StatMode};
use crate::error::{Error, Result};
use crate::estimator::{
    build_design_matrices, estimate_h0, estimate_h1, estimate_with_known_cfo, DesignMatrices, Estimates,
    Hypothesis, ObservationVector,
};
use crate::rdmap::{extract_peak_observations, fast_time_dft, remove_known_symbols, FreqGrid};
use crate::waveform::{generate_frame, FrameSymbols, OfdmConfig};

/// Two-sided 95% standard normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `parent + (stream + 1)·φ`.
pub fn split_seed(parent: u64, stream: u64) -> u64 {
    let mut z = parent.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` on the false-target (`side = 0`) or real-target
/// (`side = 1`) half of a sweep.
pub fn trial_seed(master: u64, side: u64, index: u64) -> u64 {
    split_seed(split_seed(master, side), index)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// CFO handed to the false-target fit instead of estimating it.
    pub genie_cfo: Option<f64>,
    pub mode: StatMode,
}

impl TrialOptions {
    pub fn estimated(mode: StatMode) -> TrialOptions {
        TrialOptions { genie_cfo: None, mode }
    }

    /// Genie that knows the scenario's own CFO.
    pub fn genie_for(scenario: &Scenario, mode: StatMode) -> TrialOptions {
        TrialOptions {
            genie_cfo: Some(scenario.f_cfo),
            mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: Scenario,
    pub truth: Hypothesis,
    pub genie: bool,
    pub est0: Option<Estimates>,
    pub est1: Option<Estimates>,
    /// Raw GLRT statistic.
    pub t_stat: Option<f64>,
    /// Noise variance of the grid; 0 when noiseless.
    pub sigma2: f64,
    /// Pipeline failure, if any; such trials are excluded from the rates.
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn is_valid(&self) -> bool {
        self.t_stat.is_some()
    }

    /// `T/σ²`, or `T` itself for a noiseless trial.
    pub fn score(&self) -> Option<f64> {
        self.t_stat.map(|t| normalized_score(t, self.sigma2))
    }

    /// Decision at threshold `gamma_prime` on [`TrialRecord::score`].
    pub fn decision(&self, gamma_prime: f64) -> Option<Hypothesis> {
        let mode = StatMode::default();
        self.score().map(|s| decide(s, gamma_prime, mode).decision)
    }
}

fn normalized_score(t: f64, sigma2: f64) -> f64 {
    if sigma2 > 0.0 {
        t / sigma2
    } else {
        t
    }
}

fn truth_of(kind: TargetKind) -> Hypothesis {
    match kind {
        TargetKind::FalseTarget => Hypothesis::H0FalseTarget,
        TargetKind::RealTarget => Hypothesis::H1RealTarget,
    }
}

/// Everything a trial produces before the hypothesis fits.
struct Front {
    z: Vec<Complex64>,
    obs: ObservationVector,
    sigma2: f64,
}

/// The signals of one trial, up to the symbol-free frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSignals {
    pub frame: FrameSymbols,
    pub gain: ChannelGain,
    pub grid: SampleGrid,
    pub freq: FreqGrid,
}

/// Frame, channel and noise of a trial, drawn from the scenario's seed.
pub fn synthesize_trial(cfg: &OfdmConfig, scenario: &Scenario) -> Result<TrialSignals> {
    scenario.validate()?;
    let seed = scenario.seed;
    let frame = generate_frame(cfg, split_seed(seed, 0));
    let big_g = path_loss_gain(cfg.wavelength(), scenario.sigma_rcs, scenario.r0)?;
    let gain = draw_channel_gain(big_g, scenario, cfg, split_seed(seed, 1))?;
    let clean = synth_echo_fast(cfg, scenario, &frame, &gain)?;
    let grid = add_awgn(&clean, scenario.snr_db, split_seed(seed, 2))?;
    let freq = remove_known_symbols(&fast_time_dft(&grid, cfg)?, &frame)?;
    Ok(TrialSignals { frame, gain, grid, freq })
}

fn front_end(cfg: &OfdmConfig, scenario: &Scenario) -> Result<Front> {
    let sig = synthesize_trial(cfg, scenario)?;
    let peaks = extract_peak_observations(&sig.freq, cfg)?;
    Ok(Front {
        z: sig.freq.vectorize(),
        obs: ObservationVector::from_peaks(&peaks)?,
        sigma2: sig.grid.sigma2,
    })
}

fn back_end(cfg: &OfdmConfig, dm: &DesignMatrices, front: &Front, opts: &TrialOptions) -> Result<(Estimates, Estimates, f64)> {
    let est0 = match opts.genie_cfo {
        Some(f_cfo) => estimate_with_known_cfo(&front.obs, dm, f_cfo)?,
        None => estimate_h0(&front.obs, dm)?,
    };
    let est1 = estimate_h1(&front.obs, dm)?;
    let tp = synth_templates(cfg, &est0, &est1)?;
    let t = glrt_statistic(&front.z, &tp, opts.mode)?;
    Ok((est0, est1, t))
}

fn record(scenario: &Scenario, genie: bool, sigma2: f64, outcome: Result<(Estimates, Estimates, f64)>) -> TrialRecord {
    let mut rec = TrialRecord {
        scenario: scenario.clone(),
        truth: truth_of(scenario.kind),
        genie,
        est0: None,
        est1: None,
        t_stat: None,
        sigma2,
        error: None,
    };
    match outcome {
        Ok((e0, e1, t)) => {
            rec.est0 = Some(e0);
            rec.est1 = Some(e1);
            rec.t_stat = Some(t);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Runs one full trial. Pipeline failures are captured in the record rather
/// than returned; only an invalid configuration is an error.
pub fn run_trial(cfg: &OfdmConfig, scenario: &Scenario, opts: &TrialOptions) -> Result<TrialRecord> {
    scenario.validate()?;
    let dm = build_design_matrices(cfg)?;
    Ok(match front_end(cfg, scenario) {
        Ok(front) => {
            let out = back_end(cfg, &dm, &front, opts);
            record(scenario, opts.genie_cfo.is_some(), front.sigma2, out)
        }
        Err(e) => record(scenario, opts.genie_cfo.is_some(), 0.0, Err(e)),
    })
}

/// Wilson score interval for `k` successes out of `n`; `(0, 1)` when `n = 0`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// `−∞`, `n` negative log-spaced values, `0`, `n` positive ones, `+∞`, in
/// ascending order, with `n = (count − 3) / 2`.
pub fn default_gamma_grid(min_abs: f64, max_abs: f64, count: usize) -> Result<Vec<f64>> {
    if count < 3 || count % 2 == 0 {
        return Err(Error::Config(format!("gamma count must be odd and >= 3, got {count}")));
    }
    if !(min_abs.is_finite() && min_abs > 0.0 && max_abs.is_finite() && max_abs >= min_abs) {
        return Err(Error::Config(format!(
            "gamma range must satisfy 0 < min <= max, got [{min_abs}, {max_abs}]"
        )));
    }
    let n = (count - 3) / 2;
    let positive: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![min_abs],
        _ => {
            let (lo, hi) = (min_abs.ln(), max_abs.ln());
            (0..n)
                .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    };
    let mut grid = Vec::with_capacity(count);
    grid.push(f64::NEG_INFINITY);
    grid.extend(positive.iter().rev().map(|g| -g));
    grid.push(0.0);
    grid.extend(positive.iter().copied());
    grid.push(f64::INFINITY);
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub p_fa: f64,
    pub p_d: f64,
    pub p_fa_lo: f64,
    pub p_fa_hi: f64,
    pub p_d_lo: f64,
    pub p_d_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub snr_db: f64,
    pub genie: bool,
    pub config_hash: String,
    /// Trials requested per side.
    pub n_trials: usize,
    pub n_valid_h0: usize,
    pub n_valid_h1: usize,
    /// Sorted by ascending `gamma`.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Builds a curve from the scores of false-target and real-target
    /// trials. `gamma_grid` is sorted before use.
    pub fn from_scores(
        snr_db: f64,
        genie: bool,
        config_hash: &str,
        n_trials: usize,
        h0_scores: &[f64],
        h1_scores: &[f64],
        gamma_grid: &[f64],
    ) -> RocCurve {
        let mut grid = gamma_grid.to_vec();
        grid.sort_by(f64::total_cmp);
        let (n0, n1) = (h0_scores.len(), h1_scores.len());
        let points = grid
            .iter()
            .map(|&gamma| {
                let fa = h0_scores.iter().filter(|&&s| s > gamma).count();
                let det = h1_scores.iter().filter(|&&s| s > gamma).count();
                let (p_fa_lo, p_fa_hi) = wilson_interval(fa, n0, WILSON_Z);
                let (p_d_lo, p_d_hi) = wilson_interval(det, n1, WILSON_Z);
                RocPoint {
                    gamma,
                    p_fa: if n0 > 0 { fa as f64 / n0 as f64 } else { 0.0 },
                    p_d: if n1 > 0 { det as f64 / n1 as f64 } else { 0.0 },
                    p_fa_lo,
                    p_fa_hi,
                    p_d_lo,
                    p_d_hi,
                }
            })
            .collect();
        RocCurve {
            snr_db,
            genie,
            config_hash: config_hash.to_string(),
            n_trials,
            n_valid_h0: n0,
            n_valid_h1: n1,
            points,
        }
    }

    /// Detection probability at false-alarm rate `p_fa`, interpolated
    /// linearly between the sampled points. Where several points share a
    /// false-alarm rate the largest detection rate is used.
    pub fn p_d_at(&self, p_fa: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.p_fa, p.p_d)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        pts.dedup_by(|later, earlier| later.0 == earlier.0);
        match pts.iter().position(|&(x, _)| x >= p_fa) {
            None => pts.last().map_or(0.0, |p| p.1),
            Some(0) => pts[0].1,
            Some(i) => {
                let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
                y0 + (y1 - y0) * (p_fa - x0) / (x1 - x0)
            }
        }
    }
}

/// A full ROC experiment: both sides of the test at each SNR, with and
/// without the CFO genie.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocRequest {
    /// Range of both targets, m.
    pub r0: f64,
    /// Radial velocity of both targets, m/s.
    pub v: f64,
    /// CFO of the false targets, Hz. The genie knows this value and uses it
    /// for the false-target fit on every trial.
    pub f_cfo: f64,
    pub sigma_rcs: f64,
    pub intra_symbol_cfo: bool,
    pub snr_db: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Trials per side.
    pub n_trials: usize,
    /// Genie settings to evaluate, in output order.
    pub genie: Vec<bool>,
    pub mode: StatMode,
    pub master_seed: u64,
    pub config_hash: String,
}

impl RocRequest {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("montecarlo.n_trials must be at least 1".into()));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| g.is_nan()) {
            return Err(Error::Config("gamma grid must be non-empty and free of NaN".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("at least one SNR is required".into()));
        }
        if self.genie.is_empty() {
            return Err(Error::Config("at least one genie setting is required".into()));
        }
        self.scenario(TargetKind::FalseTarget, self.snr_db[0], 0).validate()?;
        self.scenario(TargetKind::RealTarget, self.snr_db[0], 0).validate()
    }

    pub fn scenario(&self, kind: TargetKind, snr_db: f64, seed: u64) -> Scenario {
        Scenario {
            kind,
            r0: self.r0,
            v: self.v,
            f_cfo: match kind {
                TargetKind::FalseTarget => self.f_cfo,
                TargetKind::RealTarget => 0.0,
            },
            sigma_rcs: self.sigma_rcs,
            snr_db,
            seed,
            intra_symbol_cfo: self.intra_symbol_cfo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocSweep {
    /// One curve per `(snr, genie)`, SNR-major in request order.
    pub curves: Vec<RocCurve>,
    /// Failed trials per curve, same order as `curves`.
    pub invalid: Vec<usize>,
}

/// Runs the whole experiment on `workers` threads (`0` = all cores). Output
/// is identical for any worker count.
pub fn roc_sweep(cfg: &OfdmConfig, req: &RocRequest, workers: usize) -> Result<RocSweep> {
    req.validate()?;
    let dm = build_design_matrices(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;

    let mut curves = Vec::new();
    let mut invalid = Vec::new();
    for &snr in &req.snr_db {
        let jobs: Vec<(TargetKind, u64)> = [TargetKind::FalseTarget, TargetKind::RealTarget]
            .into_iter()
            .enumerate()
            .flat_map(|(side, kind)| (0..req.n_trials as u64).map(move |i| (kind, trial_seed(req.master_seed, side as u64, i))))
            .collect();
        // one score per genie setting, None for a failed trial
        let scores: Vec<(TargetKind, Vec<Option<f64>>)> = pool.install(|| {
            jobs.par_iter()
                .map(|&(kind, seed)| {
                    let scenario = req.scenario(kind, snr, seed);
                    let per_genie = match front_end(cfg, &scenario) {
                        Ok(front) => req
                            .genie
                            .iter()
                            .map(|&g| {
                                let opts = TrialOptions {
                                    genie_cfo: g.then_some(req.f_cfo),
                                    mode: req.mode,
                                };
                                back_end(cfg, &dm, &front, &opts)
                                    .ok()
                                    .map(|(_, _, t)| normalized_score(t, front.sigma2))
                            })
                            .collect(),
                        Err(_) => vec![None; req.genie.len()],
                    };
                    (kind, per_genie)
                })
                .collect()
        });
        for (gi, &genie) in req.genie.iter().enumerate() {
            let mut h0 = Vec::with_capacity(req.n_trials);
            let mut h1 = Vec::with_capacity(req.n_trials);
            let mut failed = 0;
            for (kind, per) in &scores {
                match (kind, per[gi]) {
                    (TargetKind::FalseTarget, Some(s)) => h0.push(s),
                    (TargetKind::RealTarget, Some(s)) => h1.push(s),
                    (_, None) => failed += 1,
                }
            }
            curves.push(RocCurve::from_scores(
                snr,
                genie,
                &req.config_hash,
                req.n_trials,
                &h0,
                &h1,
                &req.gamma_grid,
            ));
            invalid.push(failed);
        }
    }
    Ok(RocSweep { curves, invalid })
}

pub const ROC_CSV_HEADER: [&str; 10] = [
    "snr_db", "genie", "gamma", "p_fa", "p_d", "p_fa_lo", "p_fa_hi", "p_d_lo", "p_d_hi", "n_trials",
];

/// Writes every curve as rows of the ROC CSV schema.
pub fn write_roc_csv<W: std::io::Write>(curves: &[RocCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROC_CSV_HEADER).map_err(csv_err)?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.snr_db.to_string(),
                c.genie.to_string(),
                p.gamma.to_string(),
                p.p_fa.to_string(),
                p.p_d.to_string(),
                p.p_fa_lo.to_string(),
                p.p_fa_hi.to_string(),
                p.p_d_lo.to_string(),
                p.p_d_hi.to_string(),
                c.n_trials.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::OfdmParams;
    use proptest::prelude::*;

    fn cfg() -> OfdmConfig {
        OfdmConfig::build(&OfdmParams::default()).unwrap()
    }

    fn scenario(kind: TargetKind, f_cfo: f64, snr_db: f64) -> Scenario {
        Scenario {
            kind,
            r0: 100.0,
            v: 10.0,
            f_cfo,
            sigma_rcs: 1.0,
            snr_db,
            seed: 7,
            intra_symbol_cfo: false,
        }
    }

    fn request(n_trials: usize, f_cfo: f64) -> RocRequest {
        RocRequest {
            r0: 100.0,
            v: 10.0,
            f_cfo,
            sigma_rcs: 1.0,
            intra_symbol_cfo: false,
            snr_db: vec![9.0],
            gamma_grid: default_gamma_grid(1e-2, 1e4, 21).unwrap(),
            n_trials,
            genie: vec![false, true],
            mode: StatMode::Amplitude,
            master_seed: 11,
            config_hash: "test".into(),
        }
    }

    #[test]
    fn split_seed_reference_values() {
        // SplitMix64 seeded with 0 yields 0xE220A8397B1DCDAF first
        assert_eq!(split_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(trial_seed(1, 0, 0), trial_seed(1, 1, 0));
        assert_ne!(trial_seed(1, 0, 0), trial_seed(1, 0, 1));
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = cfg();
        let sc = scenario(TargetKind::FalseTarget, 10e3, 9.0);
        let opts = TrialOptions::estimated(StatMode::Amplitude);
        let a = run_trial(&cfg, &sc, &opts).unwrap();
        let b = run_trial(&cfg, &sc, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.is_valid());
        assert_eq!(a.truth, Hypothesis::H0FalseTarget);
    }

    #[test]
    fn noiseless_false_target_with_genie_is_a_perfect_match() {
        let cfg = cfg();
        let sc = scenario(TargetKind::FalseTarget, 10e3, f64::INFINITY);
        let rec = run_trial(&cfg, &sc, &TrialOptions::genie_for(&sc, StatMode::Amplitude)).unwrap();
        let est0 = rec.est0.as_ref().unwrap();
        assert_eq!(est0.f_cfo_hat, Some(10e3));
        assert!((est0.v_hat - 10.0).abs() < 1e-2, "{}", est0.v_hat);
        assert_eq!(rec.sigma2, 0.0);
        assert_eq!(rec.decision(0.0), Some(Hypothesis::H0FalseTarget), "{:?}", rec.t_stat);
    }

    #[test]
    fn noiseless_real_target_is_accepted() {
        let cfg = cfg();
        let sc = scenario(TargetKind::RealTarget, 0.0, f64::INFINITY);
        let rec = run_trial(&cfg, &sc, &TrialOptions::estimated(StatMode::Amplitude)).unwrap();
        assert_eq!(rec.decision(0.0), Some(Hypothesis::H1RealTarget), "{:?}", rec.t_stat);
    }

    #[test]
    fn invalid_scenario_is_an_error() {
        let cfg = cfg();
        let sc = scenario(TargetKind::RealTarget, 5.0, 9.0);
        assert!(matches!(
            run_trial(&cfg, &sc, &TrialOptions::estimated(StatMode::Amplitude)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn wilson_reference_values() {
        // 8/10 successes, z = 1.96: [0.4902, 0.9433]
        let (lo, hi) = wilson_interval(8, 10, WILSON_Z);
        assert!((lo - 0.4902).abs() < 1e-4 && (hi - 0.9433).abs() < 1e-4, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 0, WILSON_Z), (0.0, 1.0));
        let (lo, hi) = wilson_interval(0, 50, WILSON_Z);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn gamma_grid_shape() {
        let g = default_gamma_grid(1e-2, 1e4, 81).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g[0], f64::NEG_INFINITY);
        assert_eq!(g[40], 0.0);
        assert_eq!(g[80], f64::INFINITY);
        assert!((g[41] - 1e-2).abs() < 1e-15 && (g[79] - 1e4).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(default_gamma_grid(1.0, 2.0, 4).is_err());
        assert!(default_gamma_grid(0.0, 2.0, 5).is_err());
        assert_eq!(default_gamma_grid(1.0, 2.0, 3).unwrap().len(), 3);
    }

    #[test]
    fn curve_endpoints_and_interpolation() {
        let grid = [f64::NEG_INFINITY, 0.0, f64::INFINITY];
        let c = RocCurve::from_scores(9.0, false, "h", 4, &[-1.0, -1.0, 1.0, 1.0], &[1.0, 1.0, 1.0, -1.0], &grid);
        assert_eq!((c.points[0].p_fa, c.points[0].p_d), (1.0, 1.0));
        assert_eq!((c.points[1].p_fa, c.points[1].p_d), (0.5, 0.75));
        assert_eq!((c.points[2].p_fa, c.points[2].p_d), (0.0, 0.0));
        assert!((c.p_d_at(0.25) - 0.375).abs() < 1e-12);
        assert!((c.p_d_at(0.75) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let cfg = cfg();
        let req = request(6, 10e3);
        let serial = roc_sweep(&cfg, &req, 1).unwrap();
        let parallel = roc_sweep(&cfg, &req, 4).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.curves.len(), 2);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_roc_csv(&serial.curves, &mut a).unwrap();
        write_roc_csv(&parallel.curves, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("snr_db,genie,gamma,p_fa,p_d,p_fa_lo,p_fa_hi,p_d_lo,p_d_hi,n_trials\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 21);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(matches!(roc_sweep(&cfg(), &request(0, 10e3), 1), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn curves_are_monotone(
            h0 in prop::collection::vec(-50.0f64..50.0, 1..40),
            h1 in prop::collection::vec(-50.0f64..50.0, 1..40),
        ) {
            let grid = default_gamma_grid(1e-1, 1e2, 21).unwrap();
            let c = RocCurve::from_scores(0.0, false, "", h0.len(), &h0, &h1, &grid);
            for w in c.points.windows(2) {
                prop_assert!(w[0].p_fa >= w[1].p_fa && w[0].p_d >= w[1].p_d);
            }
            for p in &c.points {
                prop_assert!(p.p_fa_lo <= p.p_fa && p.p_fa <= p.p_fa_hi);
                prop_assert!(p.p_d_lo <= p.p_d && p.p_d <= p.p_d_hi);
            }
        }
    }
}
