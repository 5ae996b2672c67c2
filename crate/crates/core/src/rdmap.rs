//! Receiver preprocessing: fast-time DFT, removal of the known symbols, the
//! zero-padded range-Doppler map, and per-row/per-column peak observations.
//!
//! After symbol removal a single target leaves
//! `Ỹ[k,m] ∝ exp(j2π f_D,k m T_N) · exp(−j2π kΔf τ_m)`, so
//!
//! - for each symbol `m` the k-direction spectrum peaks at the delay `τ_m`;
//! - for each subcarrier `k` the m-direction spectrum peaks at `f_D,k`.
//!
//! Delays are reported as positive numbers in `[0, 1/Δf)`, Doppler
//! frequencies in `[−1/(2T_N), 1/(2T_N))`. Grid peaks are refined by
//! golden-section search on the continuous periodogram, because at typical
//! CPI lengths the Doppler bin is two orders of magnitude wider than the
//! shifts of interest.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{cis_cycles, SampleGrid};
use crate::error::{Error, Result};
use crate::waveform::{Dft, FrameSymbols, OfdmConfig, SPEED_OF_LIGHT};

/// Smallest symbol modulus accepted as a divisor.
pub const DIVISION_GUARD: f64 = 1e-6;

/// Symbol-free observations `Ỹ[[p, m]]` over active positions × symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqGrid {
    pub y_tilde: Array2<Complex64>,
}

impl FreqGrid {
    /// Flattens as `z[p + m K]`.
    pub fn vectorize(&self) -> Vec<Complex64> {
        let (k, m) = self.y_tilde.dim();
        let mut z = Vec::with_capacity(k * m);
        for col in 0..m {
            z.extend(self.y_tilde.column(col).iter().copied());
        }
        z
    }
}

/// Magnitude of the zero-padded 2-D transform, `magnitudes[[delay, doppler]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeDopplerMap {
    pub magnitudes: Array2<f64>,
    /// Delay of each row, s, ascending from 0.
    pub delay_axis: Vec<f64>,
    /// Doppler of each column, Hz, ascending from `−1/(2T_N)`.
    pub doppler_axis: Vec<f64>,
    pub delay_bin: f64,
    pub doppler_bin: f64,
    pub zero_pad: usize,
}

impl RangeDopplerMap {
    /// Row and column of the largest magnitude.
    pub fn peak(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_val = f64::NEG_INFINITY;
        for ((i, j), &v) in self.magnitudes.indexed_iter() {
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
        best
    }
}

/// Grid-resolution target estimate from the classic same-Doppler processing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaselineEstimate {
    pub delay: f64,
    pub doppler: f64,
    pub r0: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakObservations {
    /// One delay per symbol, s.
    pub delay_obs: Vec<f64>,
    /// One Doppler frequency per active subcarrier, Hz.
    pub dopp_obs: Vec<f64>,
}

/// Per-symbol forward DFT, restricted to the active subcarriers. Output is
/// indexed `[[p, m]]`.
pub fn fast_time_dft(grid: &SampleGrid, cfg: &OfdmConfig) -> Result<Array2<Complex64>> {
    if grid.y.dim() != (cfg.m_symbols, cfg.n_fft) {
        return Err(Error::Dimension(format!(
            "sample grid is {:?}, config expects ({}, {})",
            grid.y.dim(),
            cfg.m_symbols,
            cfg.n_fft
        )));
    }
    let dft = Dft::new(cfg.n_fft);
    let mut out = Array2::zeros((cfg.k_active, cfg.m_symbols));
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.n_fft];
    for m in 0..cfg.m_symbols {
        buf.iter_mut().zip(grid.y.row(m)).for_each(|(b, v)| *b = *v);
        dft.forward(&mut buf);
        for p in 0..cfg.k_active {
            out[[p, m]] = buf[cfg.bin(p)];
        }
    }
    Ok(out)
}

/// `Ỹ[k,m] = Y[k,m] / X[k,m]`.
pub fn remove_known_symbols(y_f: &Array2<Complex64>, frame: &FrameSymbols) -> Result<FreqGrid> {
    if y_f.dim() != frame.x.dim() {
        return Err(Error::Dimension(format!(
            "spectrum is {:?}, frame is {:?}",
            y_f.dim(),
            frame.x.dim()
        )));
    }
    if let Some(((k, m), x)) = frame.x.indexed_iter().find(|(_, x)| x.norm() < DIVISION_GUARD) {
        return Err(Error::DivisionGuard { k, m, modulus: x.norm() });
    }
    Ok(FreqGrid {
        y_tilde: y_f / &frame.x,
    })
}

fn check_freq_grid(fg: &FreqGrid, cfg: &OfdmConfig) -> Result<()> {
    if fg.y_tilde.dim() != (cfg.k_active, cfg.m_symbols) {
        return Err(Error::Dimension(format!(
            "frequency grid is {:?}, config expects ({}, {})",
            fg.y_tilde.dim(),
            cfg.k_active,
            cfg.m_symbols
        )));
    }
    Ok(())
}

/// Zero-padded k-direction transform of every symbol:
/// `out[[i, m]] = Σ_k Ỹ[k,m] e^{+j2π k i / L}`, `L = n_fft · zero_pad`.
fn delay_profiles(fg: &FreqGrid, cfg: &OfdmConfig) -> Array2<Complex64> {
    let len = cfg.n_fft * cfg.zero_pad;
    let dft = Dft::new(len);
    let mut out = Array2::zeros((len, cfg.m_symbols));
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..cfg.m_symbols {
        buf.fill(Complex64::new(0.0, 0.0));
        for (p, &k) in cfg.subcarriers().iter().enumerate() {
            buf[k.rem_euclid(len as i64) as usize] = fg.y_tilde[[p, m]];
        }
        dft.inverse_raw(&mut buf);
        out.column_mut(m).iter_mut().zip(&buf).for_each(|(d, v)| *d = *v);
    }
    out
}

/// Zero-padded m-direction transform of one sequence, returned with the
/// zero frequency in the middle.
fn doppler_spectrum(dft: &Dft, seq: impl Iterator<Item = Complex64>) -> Vec<Complex64> {
    let len = dft.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (b, v) in buf.iter_mut().zip(seq) {
        *b = v;
    }
    dft.forward_raw(&mut buf);
    buf.rotate_right(len / 2);
    buf
}

/// 2-D zero-padded transform over (k, m).
pub fn range_doppler_map(fg: &FreqGrid, cfg: &OfdmConfig) -> Result<RangeDopplerMap> {
    check_freq_grid(fg, cfg)?;
    let delay_len = cfg.n_fft * cfg.zero_pad;
    let dopp_len = cfg.m_symbols * cfg.zero_pad;
    let profiles = delay_profiles(fg, cfg);
    let dft = Dft::new(dopp_len);
    let mut magnitudes = Array2::zeros((delay_len, dopp_len));
    for i in 0..delay_len {
        let spec = doppler_spectrum(&dft, profiles.row(i).iter().copied());
        magnitudes.row_mut(i).iter_mut().zip(spec).for_each(|(d, v)| *d = v.norm());
    }
    let delay_bin = 1.0 / (delay_len as f64 * cfg.delta_f);
    let doppler_bin = 1.0 / (dopp_len as f64 * cfg.t_sym);
    let half = (dopp_len / 2) as f64;
    Ok(RangeDopplerMap {
        magnitudes,
        delay_axis: (0..delay_len).map(|i| i as f64 * delay_bin).collect(),
        doppler_axis: (0..dopp_len).map(|j| (j as f64 - half) * doppler_bin).collect(),
        delay_bin,
        doppler_bin,
        zero_pad: cfg.zero_pad,
    })
}

/// Classic estimate: take the global map peak as (2R₀/c, f_c 2v/c).
pub fn baseline_estimate(map: &RangeDopplerMap, cfg: &OfdmConfig) -> BaselineEstimate {
    let (i, j) = map.peak();
    let delay = map.delay_axis[i];
    let doppler = map.doppler_axis[j];
    BaselineEstimate {
        delay,
        doppler,
        r0: delay * SPEED_OF_LIGHT / 2.0,
        v: doppler * SPEED_OF_LIGHT / (2.0 * cfg.f_c),
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
}

/// Refined per-symbol delays and per-subcarrier Doppler frequencies.
pub fn extract_peak_observations(fg: &FreqGrid, cfg: &OfdmConfig) -> Result<PeakObservations> {
    check_freq_grid(fg, cfg)?;
    if fg.y_tilde.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::NoPeak("frequency grid is identically zero".into()));
    }

    let delay_period = 1.0 / cfg.delta_f;
    let delay_len = cfg.n_fft * cfg.zero_pad;
    let delay_step = delay_period / delay_len as f64;
    let profiles = delay_profiles(fg, cfg);
    let offsets: Vec<f64> = cfg.subcarriers().iter().map(|&k| k as f64 * cfg.delta_f).collect();

    let mut delay_obs = Vec::with_capacity(cfg.m_symbols);
    for m in 0..cfg.m_symbols {
        let (i, peak) = argmax(profiles.column(m).iter().map(|v| v.norm_sqr())).expect("non-empty");
        if peak == 0.0 {
            return Err(Error::NoPeak(format!("symbol {m} carries no energy")));
        }
        let column = fg.y_tilde.column(m);
        let power = |tau: f64| {
            column
                .iter()
                .zip(&offsets)
                .map(|(y, f_k)| y * cis_cycles(f_k * tau))
                .sum::<Complex64>()
                .norm_sqr()
        };
        let centre = i as f64 * delay_step;
        let tau = golden_max(
            power,
            centre - delay_step,
            centre + delay_step,
            cfg.peak_refine_tol * delay_period,
        );
        delay_obs.push(tau.rem_euclid(delay_period));
    }

    let dopp_period = 1.0 / cfg.t_sym;
    let dopp_len = cfg.m_symbols * cfg.zero_pad;
    let dopp_step = dopp_period / dopp_len as f64;
    let dft = Dft::new(dopp_len);
    let half = (dopp_len / 2) as f64;
    let times: Vec<f64> = (0..cfg.m_symbols).map(|m| m as f64 * cfg.t_sym).collect();

    let mut dopp_obs = Vec::with_capacity(cfg.k_active);
    for p in 0..cfg.k_active {
        let row = fg.y_tilde.row(p);
        let spec = doppler_spectrum(&dft, row.iter().copied());
        let (j, peak) = argmax(spec.iter().map(|v| v.norm_sqr())).expect("non-empty");
        if peak == 0.0 {
            return Err(Error::NoPeak(format!("subcarrier position {p} carries no energy")));
        }
        let power = |f: f64| {
            row.iter()
                .zip(&times)
                .map(|(y, t)| y * cis_cycles(-f * t))
                .sum::<Complex64>()
                .norm_sqr()
        };
        let centre = (j as f64 - half) * dopp_step;
        let f = golden_max(
            power,
            centre - dopp_step,
            centre + dopp_step,
            cfg.peak_refine_tol * dopp_period,
        );
        dopp_obs.push((f + 0.5 * dopp_period).rem_euclid(dopp_period) - 0.5 * dopp_period);
    }

    Ok(PeakObservations { delay_obs, dopp_obs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synth_false_target, synth_real_target, ChannelGain, Scenario, TargetKind};
    use crate::waveform::{generate_frame, idft_modulate, Constellation, OfdmParams};
    use std::f64::consts::PI;

    fn cfg() -> OfdmConfig {
        OfdmConfig::build(&OfdmParams::default()).unwrap()
    }

    fn freq_grid(cfg: &OfdmConfig, kind: TargetKind, r0: f64, v: f64, f_cfo: f64) -> (FrameSymbols, FreqGrid) {
        let frame = generate_frame(cfg, 31);
        let sc = Scenario {
            kind,
            r0,
            v,
            f_cfo,
            sigma_rcs: 1.0,
            snr_db: f64::INFINITY,
            seed: 0,
            intra_symbol_cfo: false,
        };
        let gain = ChannelGain::fixed(Complex64::new(1.0, 0.0));
        let grid = match kind {
            TargetKind::RealTarget => synth_real_target(cfg, &sc, &frame, &gain),
            TargetKind::FalseTarget => synth_false_target(cfg, &sc, &frame, &gain),
        }
        .unwrap();
        let fg = remove_known_symbols(&fast_time_dft(&grid, cfg).unwrap(), &frame).unwrap();
        (frame, fg)
    }

    #[test]
    fn dft_undoes_modulation() {
        let cfg = cfg();
        let frame = generate_frame(&cfg, 2);
        let y = fast_time_dft(&idft_modulate(&frame, &cfg).unwrap(), &cfg).unwrap();
        let err = (&y - &frame.x).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn zero_grid_transforms_to_zero() {
        let cfg = cfg();
        let grid = SampleGrid {
            y: Array2::zeros((10, 64)),
            sigma2: 0.0,
        };
        assert!(fast_time_dft(&grid, &cfg).unwrap().iter().all(|v| v.norm() == 0.0));
        let wrong = SampleGrid {
            y: Array2::zeros((10, 32)),
            sigma2: 0.0,
        };
        assert!(matches!(fast_time_dft(&wrong, &cfg), Err(Error::Dimension(_))));
    }

    #[test]
    fn delay_leaves_linear_phase_across_subcarriers() {
        let cfg = cfg();
        let (frame, _) = freq_grid(&cfg, TargetKind::RealTarget, 100.0, 0.0, 0.0);
        let tau = 2.0 * 100.0 / SPEED_OF_LIGHT;
        let sc = Scenario {
            kind: TargetKind::RealTarget,
            r0: 100.0,
            v: 0.0,
            f_cfo: 0.0,
            sigma_rcs: 1.0,
            snr_db: f64::INFINITY,
            seed: 0,
            intra_symbol_cfo: false,
        };
        let grid = synth_real_target(&cfg, &sc, &frame, &ChannelGain::fixed(Complex64::new(1.0, 0.0))).unwrap();
        let y = fast_time_dft(&grid, &cfg).unwrap();
        for ((p, m), v) in y.indexed_iter() {
            let k = cfg.subcarriers()[p] as f64;
            let expect = Complex64::from_polar(1.0, -2.0 * PI * k * cfg.delta_f * tau);
            assert!((v / frame.x[[p, m]] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn symbol_removal() {
        let cfg = cfg();
        let frame = generate_frame(&cfg, 3);
        let ones = FrameSymbols {
            x: Array2::from_elem((52, 10), Complex64::new(1.0, 0.0)),
            constellation: Constellation::Bpsk,
        };
        assert_eq!(remove_known_symbols(&frame.x, &ones).unwrap().y_tilde, frame.x);
        let fg = remove_known_symbols(&frame.x, &frame).unwrap();
        let back = &fg.y_tilde * &frame.x;
        assert!((&back - &frame.x).iter().all(|v| v.norm() < 1e-15));

        let mut bad = frame.clone();
        bad.x[[4, 2]] = Complex64::new(1e-9, 0.0);
        assert!(matches!(
            remove_known_symbols(&frame.x, &bad),
            Err(Error::DivisionGuard { k: 4, m: 2, .. })
        ));
    }

    #[test]
    fn noiseless_echo_has_flat_magnitude() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::RealTarget, 100.0, 10.0, 0.0);
        assert!(fg.y_tilde.iter().all(|v| (v.norm() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn map_peak_sits_at_round_trip_delay() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::RealTarget, 100.0, 0.0, 0.0);
        let map = range_doppler_map(&fg, &cfg).unwrap();
        assert_eq!(map.delay_axis.len(), 1024);
        assert_eq!(map.doppler_axis.len(), 160);
        assert!((map.delay_bin - 3.125e-9).abs() < 1e-20);
        let (i, j) = map.peak();
        assert_eq!(i, 213);
        assert_eq!(map.doppler_axis[j], 0.0);
        assert!(map.magnitudes.iter().all(|&v| v >= 0.0));

        let base = baseline_estimate(&map, &cfg);
        assert!((base.r0 - 100.0).abs() < map.delay_bin * SPEED_OF_LIGHT / 2.0);
    }

    #[test]
    fn map_is_phase_invariant() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::FalseTarget, 70.0, 15.0, 4e3);
        let rot = FreqGrid {
            y_tilde: fg.y_tilde.mapv(|v| v * Complex64::from_polar(1.0, 1.234)),
        };
        let a = range_doppler_map(&fg, &cfg).unwrap();
        let b = range_doppler_map(&rot, &cfg).unwrap();
        let err = (&a.magnitudes - &b.magnitudes).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn false_target_has_one_delay_lobe_per_symbol() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::FalseTarget, 100.0, 10.0, 10e3);
        let profiles = delay_profiles(&fg, &cfg);
        let expected = (2.0 * 100.0 / SPEED_OF_LIGHT / 3.125e-9).round() as usize;
        for m in 0..cfg.m_symbols {
            let (i, _) = argmax(profiles.column(m).iter().map(|v| v.norm())).unwrap();
            assert!((i as i64 - expected as i64).abs() <= 1, "symbol {m}: bin {i}");
        }
    }

    #[test]
    fn delay_observations_converge_to_truth() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::RealTarget, 100.0, 0.0, 0.0);
        let obs = extract_peak_observations(&fg, &cfg).unwrap();
        let tau = 2.0 * 100.0 / SPEED_OF_LIGHT;
        assert_eq!(obs.delay_obs.len(), 10);
        for d in &obs.delay_obs {
            assert!((d - 666.667e-9).abs() <= 0.5e-9, "{d}");
            assert!((d - tau).abs() <= 0.01e-9, "{d}");
        }
        for f in &obs.dopp_obs {
            assert!(f.abs() <= 1.0, "{f}");
        }
    }

    #[test]
    fn doppler_observations_carry_cfo() {
        let cfg = cfg();
        let (_, fg) = freq_grid(&cfg, TargetKind::FalseTarget, 100.0, 0.0, 10e3);
        let obs = extract_peak_observations(&fg, &cfg).unwrap();
        assert_eq!(obs.dopp_obs.len(), 52);
        for f in &obs.dopp_obs {
            assert!((f - 10e3).abs() <= 1.0, "{f}");
        }
    }

    #[test]
    fn intra_symbol_cfo_leaks_data_dependent_interference() {
        let cfg = cfg();
        let mut frame = generate_frame(&cfg, 31);
        let sc = Scenario {
            kind: TargetKind::FalseTarget,
            r0: 100.0,
            v: 0.0,
            f_cfo: 10e3,
            sigma_rcs: 1.0,
            snr_db: f64::INFINITY,
            seed: 0,
            intra_symbol_cfo: true,
        };
        let gain = ChannelGain::fixed(Complex64::new(1.0, 0.0));
        let mut worst = Vec::new();
        for constant in [false, true] {
            if constant {
                frame.x.fill(Complex64::new(1.0, 0.0));
            }
            let grid = synth_false_target(&cfg, &sc, &frame, &gain).unwrap();
            let fg = remove_known_symbols(&fast_time_dft(&grid, &cfg).unwrap(), &frame).unwrap();
            let obs = extract_peak_observations(&fg, &cfg).unwrap();
            worst.push(obs.dopp_obs.iter().map(|f| (f - 10e3).abs()).fold(0.0, f64::max));
        }
        // random data: ICI varies from symbol to symbol and biases the peak
        assert!(worst[0] > 10.0 && worst[0] < 2e3, "{}", worst[0]);
        // repeated symbols: ICI is a constant per bin and drops out
        assert!(worst[1] < 1.0, "{}", worst[1]);
    }

    #[test]
    fn refinement_error_shrinks_with_zero_padding() {
        let mut last = f64::INFINITY;
        for zp in [1, 2, 4, 8, 16] {
            let cfg = OfdmConfig::build(&OfdmParams {
                zero_pad: zp,
                ..OfdmParams::default()
            })
            .unwrap();
            let (_, fg) = freq_grid(&cfg, TargetKind::FalseTarget, 100.0, 0.0, 10e3);
            let obs = extract_peak_observations(&fg, &cfg).unwrap();
            let err = obs.dopp_obs.iter().map(|f| (f - 10e3).abs()).fold(0.0, f64::max);
            let floor = 4.0 * cfg.peak_refine_tol / cfg.t_sym;
            assert!(err <= last.max(floor), "zero_pad {zp}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn zero_grid_has_no_peak() {
        let cfg = cfg();
        let fg = FreqGrid {
            y_tilde: Array2::zeros((52, 10)),
        };
        assert!(matches!(extract_peak_observations(&fg, &cfg), Err(Error::NoPeak(_))));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_max(|x| -(x - 0.3).powi(2), -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn ieee_layout_recovers_delay() {
        let cfg = OfdmConfig::build(&OfdmParams {
            layout: crate::waveform::SubcarrierLayout::Ieee80211,
            ..OfdmParams::default()
        })
        .unwrap();
        let (_, fg) = freq_grid(&cfg, TargetKind::RealTarget, 100.0, 20.0, 0.0);
        let obs = extract_peak_observations(&fg, &cfg).unwrap();
        let tau = 2.0 * 100.0 / SPEED_OF_LIGHT;
        assert!(obs.delay_obs.iter().all(|d| (d - tau).abs() < 0.05e-9));
    }
}
