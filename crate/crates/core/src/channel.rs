//! Received-signal synthesis for a reflecting target or a re-transmitting
//! adversary.
//!
//! Both synthesizers evaluate the sampled slow-time/fast-time baseband model
//!
//! ```text
//! y[m,n] = h'/√N Σ_k X[k,m] exp(j2π kΔf (n/f_s − 2R₀/c + (2v/c) m T_N))
//!                         · exp(j2π ((f_c + f_cfo)(2v/c) m T_N + f_cfo (n/f_s + m T_N)))
//! ```
//!
//! with `f_cfo = 0` for a real target. Doppler is applied per subcarrier and
//! `v > 0` means the target is closing (delay shrinking over the CPI).
//!
//! The fast-time CFO term `f_cfo n/f_s` breaks subcarrier orthogonality and
//! leaks data-dependent inter-carrier interference into every bin. It is
//! only synthesized when [`Scenario::intra_symbol_cfo`] is set; by default
//! the CFO, like the Doppler, is treated as constant within a symbol.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{scatter_to_bins, Dft, FrameSymbols, OfdmConfig, SPEED_OF_LIGHT};

/// Residual CFO of a false target when none is configured, Hz.
pub const DEFAULT_FALSE_TARGET_CFO: f64 = 10e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    RealTarget,
    FalseTarget,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::RealTarget => "real",
            TargetKind::FalseTarget => "false",
        })
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "real_target" => Ok(TargetKind::RealTarget),
            "false" | "false_target" => Ok(TargetKind::FalseTarget),
            other => Err(Error::Config(format!(
                "unknown target kind '{other}' (expected real or false)"
            ))),
        }
    }
}

/// Ground truth of one trial.
///
/// For a false target `r0` is the equivalent range of the total delay,
/// including the adversary's processing latency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: TargetKind,
    pub r0: f64,
    pub v: f64,
    pub f_cfo: f64,
    pub sigma_rcs: f64,
    /// Post-channel SNR; `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    pub seed: u64,
    /// Keep the `f_cfo n/f_s` phase ramp inside each symbol.
    #[serde(default)]
    pub intra_symbol_cfo: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.kind == TargetKind::RealTarget && self.f_cfo != 0.0 {
            return Err(Error::Config(format!(
                "a real target carries no CFO, got f_cfo = {} Hz",
                self.f_cfo
            )));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(Error::Config(format!("r0 must be positive, got {}", self.r0)));
        }
        if !(self.sigma_rcs.is_finite() && self.sigma_rcs > 0.0) {
            return Err(Error::Config(format!(
                "sigma_rcs must be positive, got {}",
                self.sigma_rcs
            )));
        }
        if !self.v.is_finite() || !self.f_cfo.is_finite() {
            return Err(Error::Config("v and f_cfo must be finite".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db must be a number or +inf, got {}", self.snr_db)));
        }
        Ok(())
    }

    pub fn round_trip_delay(&self) -> f64 {
        2.0 * self.r0 / SPEED_OF_LIGHT
    }
}

/// Complex channel gain, constant over the CPI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelGain {
    /// Unit-variance Rayleigh fading sample.
    pub g: Complex64,
    /// Large-scale power gain.
    pub big_g: f64,
    /// `g √G` times the constant carrier phase of the nominal delay.
    pub h_eff: Complex64,
}

impl ChannelGain {
    /// A deterministic gain, mostly for tests.
    pub fn fixed(h_eff: Complex64) -> ChannelGain {
        ChannelGain {
            g: h_eff / h_eff.norm().max(f64::MIN_POSITIVE),
            big_g: h_eff.norm_sqr(),
            h_eff,
        }
    }
}

/// Slow-time × fast-time samples `y[[m, n]]` and the noise variance that was
/// injected into them (0 when noiseless).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    pub y: Array2<Complex64>,
    pub sigma2: f64,
}

impl SampleGrid {
    pub fn energy(&self) -> f64 {
        self.y.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.y.len() as f64
    }
}

/// `e^{j2π c}`, with `c` reduced modulo one cycle first so that large phase
/// accumulations keep full precision.
#[inline]
pub(crate) fn cis_cycles(cycles: f64) -> Complex64 {
    let frac = cycles - cycles.floor();
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

/// Free-space radar gain `λ² σ / (64 π³ R⁴)`.
pub fn path_loss_gain(lambda_m: f64, sigma_rcs: f64, r0: f64) -> Result<f64> {
    if r0 == 0.0 {
        return Err(Error::Singularity("path loss diverges at r0 = 0".into()));
    }
    for (name, value) in [("lambda", lambda_m), ("sigma_rcs", sigma_rcs), ("r0", r0)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {value}")));
        }
    }
    Ok(lambda_m.powi(2) * sigma_rcs / (64.0 * PI.powi(3) * r0.powi(4)))
}

/// Draws the Rayleigh fading sample and folds in the large-scale gain and the
/// constant phase `e^{-j2π(f_c + f_cfo) 2R₀/c}`.
pub fn draw_channel_gain(big_g: f64, scenario: &Scenario, cfg: &OfdmConfig, seed: u64) -> Result<ChannelGain> {
    if !(big_g.is_finite() && big_g >= 0.0) {
        return Err(Error::Config(format!("large-scale gain must be >= 0, got {big_g}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");
    let g = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    let phase = cis_cycles(-(cfg.f_c + scenario.f_cfo) * scenario.round_trip_delay());
    Ok(ChannelGain {
        g,
        big_g,
        h_eff: g * big_g.sqrt() * phase,
    })
}

fn check_dims(cfg: &OfdmConfig, frame: &FrameSymbols) -> Result<()> {
    if frame.x.dim() != (cfg.k_active, cfg.m_symbols) {
        return Err(Error::Dimension(format!(
            "frame is {:?}, config expects ({}, {})",
            frame.x.dim(),
            cfg.k_active,
            cfg.m_symbols
        )));
    }
    Ok(())
}

/// Direct evaluation of the echo model; `f_cfo = 0` gives the real-target
/// model through the very same arithmetic.
fn synth_direct(cfg: &OfdmConfig, scenario: &Scenario, f_cfo: f64, frame: &FrameSymbols, gain: &ChannelGain) -> Result<SampleGrid> {
    check_dims(cfg, frame)?;
    let tau0 = scenario.round_trip_delay();
    let beta = 2.0 * scenario.v / SPEED_OF_LIGHT;
    let scale = gain.h_eff / (cfg.n_fft as f64).sqrt();
    let mut y = Array2::zeros((cfg.m_symbols, cfg.n_fft));
    for m in 0..cfg.m_symbols {
        let t_m = m as f64 * cfg.t_sym;
        for n in 0..cfg.n_fft {
            let t_n = n as f64 / cfg.f_s;
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, &k) in cfg.subcarriers().iter().enumerate() {
                let f_k = k as f64 * cfg.delta_f;
                acc += frame.x[[p, m]] * cis_cycles(f_k * (t_n - tau0 + beta * t_m));
            }
            let fast = if scenario.intra_symbol_cfo { f_cfo * t_n } else { 0.0 };
            let common = (cfg.f_c + f_cfo) * beta * t_m + f_cfo * t_m + fast;
            y[[m, n]] = scale * acc * cis_cycles(common);
        }
    }
    Ok(SampleGrid { y, sigma2: 0.0 })
}

/// Noiseless echo of an adversarial re-transmission with residual CFO.
pub fn synth_false_target(cfg: &OfdmConfig, scenario: &Scenario, frame: &FrameSymbols, gain: &ChannelGain) -> Result<SampleGrid> {
    if scenario.kind != TargetKind::FalseTarget {
        return Err(Error::Usage("synth_false_target needs a false-target scenario".into()));
    }
    synth_direct(cfg, scenario, scenario.f_cfo, frame, gain)
}

/// Noiseless echo of a physical reflector (no CFO).
pub fn synth_real_target(cfg: &OfdmConfig, scenario: &Scenario, frame: &FrameSymbols, gain: &ChannelGain) -> Result<SampleGrid> {
    if scenario.kind != TargetKind::RealTarget {
        return Err(Error::Usage("synth_real_target needs a real-target scenario".into()));
    }
    synth_direct(cfg, scenario, 0.0, frame, gain)
}

/// IDFT-based evaluation of the same model, used inside Monte Carlo loops.
///
/// Per symbol the subcarrier-dependent phase is applied in the frequency
/// domain, one inverse DFT produces the fast-time tones, and the
/// CFO/Doppler terms common to all subcarriers are applied per sample.
pub fn synth_echo_fast(cfg: &OfdmConfig, scenario: &Scenario, frame: &FrameSymbols, gain: &ChannelGain) -> Result<SampleGrid> {
    check_dims(cfg, frame)?;
    let f_cfo = match scenario.kind {
        TargetKind::FalseTarget => scenario.f_cfo,
        TargetKind::RealTarget => 0.0,
    };
    let tau0 = scenario.round_trip_delay();
    let beta = 2.0 * scenario.v / SPEED_OF_LIGHT;
    let dft = Dft::new(cfg.n_fft);
    let mut y = Array2::zeros((cfg.m_symbols, cfg.n_fft));
    let mut shifted = frame.x.clone();
    for m in 0..cfg.m_symbols {
        let t_m = m as f64 * cfg.t_sym;
        for (p, &k) in cfg.subcarriers().iter().enumerate() {
            shifted[[p, m]] *= cis_cycles(k as f64 * cfg.delta_f * (beta * t_m - tau0));
        }
        let mut bins = scatter_to_bins(cfg, &shifted, m);
        dft.inverse(&mut bins);
        let slow = (cfg.f_c + f_cfo) * beta * t_m + f_cfo * t_m;
        for (n, v) in bins.into_iter().enumerate() {
            let fast = if scenario.intra_symbol_cfo { f_cfo * n as f64 / cfg.f_s } else { 0.0 };
            y[[m, n]] = gain.h_eff * v * cis_cycles(slow + fast);
        }
    }
    Ok(SampleGrid { y, sigma2: 0.0 })
}

/// Adds circular complex Gaussian noise with `σ² = mean|y|² / 10^(snr/10)`.
///
/// `snr_db = +inf` returns the grid untouched.
pub fn add_awgn(grid: &SampleGrid, snr_db: f64, seed: u64) -> Result<SampleGrid> {
    if snr_db == f64::INFINITY {
        return Ok(SampleGrid {
            y: grid.y.clone(),
            sigma2: 0.0,
        });
    }
    if !snr_db.is_finite() {
        return Err(Error::Calibration(format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let power = grid.mean_power();
    if !(power > 0.0) {
        return Err(Error::Calibration("signal grid has zero energy, SNR is undefined".into()));
    }
    let sigma2 = power / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = grid
        .y
        .mapv(|v| v + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)));
    Ok(SampleGrid { y, sigma2 })
}
