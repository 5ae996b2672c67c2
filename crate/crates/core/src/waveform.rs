//! OFDM frame synthesis and the DFT conventions shared by the whole crate.
//!
//! Conventions:
//!
//! - forward DFT uses `e^{-j2πnk/N}`, inverse uses `e^{+j2πnk/N}`;
//! - both directions carry a `1/√N` factor, so the pair is unitary and the
//!   modulator output is `x[n] = (1/√N) Σ_k X[k] e^{j2πnk/N}`;
//! - a subcarrier is identified by its signed offset `k` (frequency `kΔf`),
//!   and lands in DFT bin `k mod N`.
//!
//! No cyclic prefix is generated: the round-trip delay is assumed shorter than
//! the CP, which makes the CP transparent to the slow-time/fast-time model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::SampleGrid;
use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum ratio between subcarrier spacing and the largest Doppler shift.
pub const DOPPLER_SPACING_RATIO: f64 = 10.0;

/// Unit-modulus symbol alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Bpsk,
    Qpsk,
    Psk8,
}

impl Constellation {
    pub fn order(self) -> usize {
        match self {
            Constellation::Bpsk => 2,
            Constellation::Qpsk => 4,
            Constellation::Psk8 => 8,
        }
    }

    /// Symbol `i` of the alphabet. QPSK points sit on the diagonals,
    /// `(±1 ± j)/√2`.
    pub fn point(self, i: usize) -> Complex64 {
        let order = self.order();
        let offset = match self {
            Constellation::Qpsk => PI / 4.0,
            _ => 0.0,
        };
        Complex64::from_polar(1.0, offset + 2.0 * PI * (i % order) as f64 / order as f64)
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constellation::Bpsk => "bpsk",
            Constellation::Qpsk => "qpsk",
            Constellation::Psk8 => "8psk",
        })
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Constellation::Bpsk),
            "qpsk" => Ok(Constellation::Qpsk),
            "8psk" | "psk8" => Ok(Constellation::Psk8),
            other => Err(Error::Config(format!(
                "unknown constellation '{other}' (expected bpsk, qpsk or 8psk)"
            ))),
        }
    }
}

/// Placement of the active subcarriers in the DFT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubcarrierLayout {
    /// Offsets `0..k_active`, i.e. subcarrier frequencies `kΔf` with `k ≥ 0`.
    Contiguous,
    /// 802.11-style offsets `-K/2..=-1, 1..=K/2` around a nulled DC bin.
    Ieee80211,
}

impl fmt::Display for SubcarrierLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubcarrierLayout::Contiguous => "contiguous",
            SubcarrierLayout::Ieee80211 => "ieee80211",
        })
    }
}

impl FromStr for SubcarrierLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contiguous" => Ok(SubcarrierLayout::Contiguous),
            "ieee80211" | "802.11" => Ok(SubcarrierLayout::Ieee80211),
            other => Err(Error::Config(format!(
                "unknown subcarrier layout '{other}' (expected contiguous or ieee80211)"
            ))),
        }
    }
}

/// Raw, unvalidated waveform parameters. Defaults are the 20 MHz 802.11
/// operating point: 64-point DFT, 52 used subcarriers, 12 pilots,
/// Δf = 312.5 kHz, f_c = 5 GHz, 10 symbols per CPI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub n_fft: usize,
    pub k_active: usize,
    pub n_pilot: usize,
    pub delta_f: f64,
    pub f_c: f64,
    /// Optional explicit sampling rate; must equal `n_fft · delta_f`.
    pub f_s: Option<f64>,
    pub m_symbols: usize,
    pub zero_pad: usize,
    pub peak_refine_tol: f64,
    pub constellation: Constellation,
    pub layout: SubcarrierLayout,
    /// Largest closing speed the radar must handle, m/s. Only used to check
    /// that the subcarrier spacing dwarfs the Doppler shift.
    pub v_max: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        OfdmParams {
            n_fft: 64,
            k_active: 52,
            n_pilot: 12,
            delta_f: 312.5e3,
            f_c: 5e9,
            f_s: None,
            m_symbols: 10,
            zero_pad: 16,
            peak_refine_tol: 1e-6,
            constellation: Constellation::Qpsk,
            layout: SubcarrierLayout::Contiguous,
            v_max: 100.0,
        }
    }
}

/// Validated waveform and radar constants.
///
/// Only obtainable through [`OfdmConfig::build`], so the derived fields are
/// always consistent: `f_s = n_fft · delta_f` and `t_sym = 1 / delta_f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OfdmConfig {
    pub n_fft: usize,
    pub k_active: usize,
    pub n_pilot: usize,
    pub delta_f: f64,
    pub f_c: f64,
    pub f_s: f64,
    pub t_sym: f64,
    pub m_symbols: usize,
    pub zero_pad: usize,
    pub peak_refine_tol: f64,
    pub constellation: Constellation,
    pub layout: SubcarrierLayout,
    pub v_max: f64,
    subcarriers: Vec<i64>,
    pilots: Vec<usize>,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {value}")))
    }
}

fn nonzero(name: &str, value: usize) -> Result<()> {
    if value > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be a positive integer")))
    }
}

impl OfdmConfig {
    /// Validates `raw` and fills the derived fields.
    pub fn build(raw: &OfdmParams) -> Result<OfdmConfig> {
        positive("delta_f", raw.delta_f)?;
        positive("f_c", raw.f_c)?;
        nonzero("n_fft", raw.n_fft)?;
        nonzero("k_active", raw.k_active)?;
        nonzero("m_symbols", raw.m_symbols)?;
        nonzero("zero_pad", raw.zero_pad)?;
        if !(raw.peak_refine_tol > 0.0 && raw.peak_refine_tol < 1.0) {
            return Err(Error::Config(format!(
                "peak_refine_tol must lie in (0, 1), got {}",
                raw.peak_refine_tol
            )));
        }
        if raw.k_active > raw.n_fft {
            return Err(Error::Config(format!(
                "k_active ({}) exceeds n_fft ({})",
                raw.k_active, raw.n_fft
            )));
        }
        if raw.n_pilot > raw.k_active {
            return Err(Error::Config(format!(
                "n_pilot ({}) exceeds k_active ({})",
                raw.n_pilot, raw.k_active
            )));
        }
        if !(raw.v_max.is_finite() && raw.v_max >= 0.0) {
            return Err(Error::Config(format!("v_max must be non-negative, got {}", raw.v_max)));
        }

        let f_s = raw.n_fft as f64 * raw.delta_f;
        if let Some(given) = raw.f_s {
            if (given - f_s).abs() > 1e-12 * f_s {
                return Err(Error::Config(format!(
                    "f_s ({given}) must equal n_fft * delta_f ({f_s})"
                )));
            }
        }

        let subcarriers = subcarrier_offsets(raw.layout, raw.k_active, raw.n_fft)?;

        let max_doppler = two_way_doppler(raw.v_max, raw.f_c);
        if raw.delta_f < DOPPLER_SPACING_RATIO * max_doppler {
            return Err(Error::Config(format!(
                "subcarrier spacing {} Hz is less than {}x the maximum Doppler shift {:.1} Hz (v_max = {} m/s)",
                raw.delta_f, DOPPLER_SPACING_RATIO, max_doppler, raw.v_max
            )));
        }

        Ok(OfdmConfig {
            n_fft: raw.n_fft,
            k_active: raw.k_active,
            n_pilot: raw.n_pilot,
            delta_f: raw.delta_f,
            f_c: raw.f_c,
            f_s,
            t_sym: 1.0 / raw.delta_f,
            m_symbols: raw.m_symbols,
            zero_pad: raw.zero_pad,
            peak_refine_tol: raw.peak_refine_tol,
            constellation: raw.constellation,
            layout: raw.layout,
            v_max: raw.v_max,
            pilots: pilot_positions(raw.k_active, raw.n_pilot),
            subcarriers,
        })
    }

    /// Signed offsets of the active subcarriers, in storage order.
    pub fn subcarriers(&self) -> &[i64] {
        &self.subcarriers
    }

    /// Storage positions (indices into [`Self::subcarriers`]) holding pilots.
    pub fn pilots(&self) -> &[usize] {
        &self.pilots
    }

    /// DFT bin of the active subcarrier at storage position `p`.
    pub fn bin(&self, p: usize) -> usize {
        self.subcarriers[p].rem_euclid(self.n_fft as i64) as usize
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Two-way Doppler shift `2 v f_c / c` of the carrier.
    pub fn doppler_hz(&self, v: f64) -> f64 {
        two_way_doppler(v, self.f_c)
    }

    /// Range resolution `c / (2 N Δf)` for a given subcarrier count.
    pub fn range_resolution(&self, n_subcarriers: usize) -> f64 {
        SPEED_OF_LIGHT / (2.0 * n_subcarriers as f64 * self.delta_f)
    }

    /// Velocity resolution `c / (2 M T_N f_c)`.
    pub fn velocity_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.m_symbols as f64 * self.t_sym * self.f_c)
    }
}

fn two_way_doppler(v: f64, f_c: f64) -> f64 {
    2.0 * v * f_c / SPEED_OF_LIGHT
}

fn subcarrier_offsets(layout: SubcarrierLayout, k_active: usize, n_fft: usize) -> Result<Vec<i64>> {
    match layout {
        SubcarrierLayout::Contiguous => Ok((0..k_active as i64).collect()),
        SubcarrierLayout::Ieee80211 => {
            if k_active % 2 != 0 || k_active >= n_fft {
                return Err(Error::Config(format!(
                    "ieee80211 layout needs an even k_active below n_fft, got {k_active} of {n_fft}"
                )));
            }
            let half = (k_active / 2) as i64;
            Ok((-half..=-1).chain(1..=half).collect())
        }
    }
}

/// Pilots are spread evenly over the active set: pilot `i` sits at storage
/// position `floor((2i + 1) K / (2 P))`.
fn pilot_positions(k_active: usize, n_pilot: usize) -> Vec<usize> {
    (0..n_pilot)
        .map(|i| (2 * i + 1) * k_active / (2 * n_pilot))
        .collect()
}

/// 802.11 pilot polarity sequence (scrambler `x^7 + x^4 + 1`, all-ones seed).
fn pilot_polarity(symbol: usize) -> f64 {
    let mut state: u8 = 0x7f;
    let mut bit = 0;
    for _ in 0..=(symbol % 127) {
        bit = ((state >> 6) ^ (state >> 3)) & 1;
        state = ((state << 1) | bit) & 0x7f;
    }
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

const PILOT_BASE: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// Known transmitted symbols, `x[[p, m]]` for active position `p` and
/// OFDM symbol `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSymbols {
    pub x: Array2<Complex64>,
    pub constellation: Constellation,
}

/// Draws a frame: BPSK pilots at the configured positions, uniformly random
/// constellation points elsewhere. Pure function of `(cfg, seed)`.
pub fn generate_frame(cfg: &OfdmConfig, seed: u64) -> FrameSymbols {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = cfg.constellation.order();
    let mut x = Array2::zeros((cfg.k_active, cfg.m_symbols));
    for m in 0..cfg.m_symbols {
        let polarity = pilot_polarity(m);
        let mut next_pilot = 0;
        for p in 0..cfg.k_active {
            x[[p, m]] = if cfg.pilots().get(next_pilot) == Some(&p) {
                let v = PILOT_BASE[next_pilot % PILOT_BASE.len()] * polarity;
                next_pilot += 1;
                Complex64::new(v, 0.0)
            } else {
                cfg.constellation.point(rng.random_range(0..order))
            };
        }
    }
    FrameSymbols {
        x,
        constellation: cfg.constellation,
    }
}

/// Cached FFT plans for one transform length, with the unitary scaling.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(len: usize) -> Dft {
        let mut planner = FftPlanner::new();
        Dft {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unitary forward DFT.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let scale = 1.0 / (self.len as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place unitary inverse DFT.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / (self.len as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place unnormalised forward sum `Σ_n x[n] e^{-j2πnk/L}`.
    pub fn forward_raw(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// In-place unnormalised inverse sum `Σ_k X[k] e^{+j2πnk/L}`.
    pub fn inverse_raw(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

/// Places the active-subcarrier column `m` of `symbols` into an `n_fft`-long
/// bin vector.
pub(crate) fn scatter_to_bins(cfg: &OfdmConfig, symbols: &Array2<Complex64>, m: usize) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
    for p in 0..cfg.k_active {
        bins[cfg.bin(p)] = symbols[[p, m]];
    }
    bins
}

/// OFDM modulation: one unitary IDFT per symbol, giving an
/// `m_symbols × n_fft` noiseless grid.
pub fn idft_modulate(frame: &FrameSymbols, cfg: &OfdmConfig) -> Result<SampleGrid> {
    if frame.x.dim() != (cfg.k_active, cfg.m_symbols) {
        return Err(Error::Dimension(format!(
            "frame is {:?}, config expects ({}, {})",
            frame.x.dim(),
            cfg.k_active,
            cfg.m_symbols
        )));
    }
    let dft = Dft::new(cfg.n_fft);
    let mut y = Array2::zeros((cfg.m_symbols, cfg.n_fft));
    for m in 0..cfg.m_symbols {
        let mut bins = scatter_to_bins(cfg, &frame.x, m);
        dft.inverse(&mut bins);
        y.row_mut(m).iter_mut().zip(bins).for_each(|(dst, v)| *dst = v);
    }
    Ok(SampleGrid { y, sigma2: 0.0 })
}
