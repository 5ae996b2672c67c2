//! GLRT between the false-target and real-target templates.
//!
//! Each hypothesis yields a unit-norm template of the symbol-free grid,
//! rebuilt from its LS estimates. Larger statistics favour the real target.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::cis_cycles;
use crate::error::{Error, Result};
use crate::estimator::{Estimates, Hypothesis};
use crate::waveform::{OfdmConfig, SPEED_OF_LIGHT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatMode {
    /// `Re(u₁ᴴz) − Re(u₀ᴴz)`: assumes a known, real, positive gain.
    RealPart,
    /// `|u₁ᴴz|² − |u₀ᴴz|²`: complex gain maximised out per hypothesis.
    #[default]
    Amplitude,
}

impl fmt::Display for StatMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatMode::RealPart => "real_part",
            StatMode::Amplitude => "amplitude",
        })
    }
}

impl FromStr for StatMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real_part" => Ok(StatMode::RealPart),
            "amplitude" => Ok(StatMode::Amplitude),
            other => Err(Error::Config(format!(
                "unknown statistic '{other}' (expected amplitude or real_part)"
            ))),
        }
    }
}

/// Unit-norm templates, ordered like [`crate::rdmap::FreqGrid::vectorize`].
#[derive(Clone, Debug, PartialEq)]
pub struct TemplatePair {
    pub u0: Vec<Complex64>,
    pub u1: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlrtOutcome {
    pub t_stat: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
    pub mode: StatMode,
}

/// Noise-free symbol-free grid for the given parameters, unit modulus per
/// entry, flattened as `z[p + m K]`:
///
/// `exp(j2π((f_c + f_cfo)(2v/c) + f_cfo) m T_N) · exp(−j2π kΔf 2R₀/c) · exp(j2π kΔf (2v/c) m T_N)`
pub fn signal_template(cfg: &OfdmConfig, r0: f64, v: f64, f_cfo: f64) -> Vec<Complex64> {
    let beta = 2.0 * v / SPEED_OF_LIGHT;
    let tau0 = 2.0 * r0 / SPEED_OF_LIGHT;
    let mut out = Vec::with_capacity(cfg.k_active * cfg.m_symbols);
    for m in 0..cfg.m_symbols {
        let t_m = m as f64 * cfg.t_sym;
        let slow = ((cfg.f_c + f_cfo) * beta + f_cfo) * t_m;
        for &k in cfg.subcarriers() {
            let f_k = k as f64 * cfg.delta_f;
            out.push(cis_cycles(slow - f_k * tau0 + f_k * beta * t_m));
        }
    }
    out
}

fn normalized(mut u: Vec<Complex64>) -> Vec<Complex64> {
    let norm = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        u.iter_mut().for_each(|v| *v /= norm);
    }
    u
}

/// Builds `u₀` from the false-target estimates and `u₁` from the real-target
/// estimates.
pub fn synth_templates(cfg: &OfdmConfig, est0: &Estimates, est1: &Estimates) -> Result<TemplatePair> {
    let f_cfo = est0
        .f_cfo_hat
        .ok_or_else(|| Error::Usage("false-target estimates must carry a CFO".into()))?;
    if est1.f_cfo_hat.is_some() {
        return Err(Error::Usage("real-target estimates must not carry a CFO".into()));
    }
    Ok(TemplatePair {
        u0: normalized(signal_template(cfg, est0.r0_hat, est0.v_hat, f_cfo)),
        u1: normalized(signal_template(cfg, est1.r0_hat, est1.v_hat, 0.0)),
    })
}

fn inner(u: &[Complex64], z: &[Complex64]) -> Complex64 {
    u.iter().zip(z).map(|(a, b)| a.conj() * b).sum()
}

pub fn glrt_statistic(z: &[Complex64], tp: &TemplatePair, mode: StatMode) -> Result<f64> {
    if z.len() != tp.u0.len() || z.len() != tp.u1.len() {
        return Err(Error::Dimension(format!(
            "data has {} entries, templates have {} and {}",
            z.len(),
            tp.u0.len(),
            tp.u1.len()
        )));
    }
    let c0 = inner(&tp.u0, z);
    let c1 = inner(&tp.u1, z);
    Ok(match mode {
        StatMode::RealPart => c1.re - c0.re,
        StatMode::Amplitude => c1.norm_sqr() - c0.norm_sqr(),
    })
}

/// Real target iff `t_stat > gamma_prime`.
pub fn decide(t_stat: f64, gamma_prime: f64, mode: StatMode) -> GlrtOutcome {
    let decision = if t_stat > gamma_prime {
        Hypothesis::H1RealTarget
    } else {
        Hypothesis::H0FalseTarget
    };
    GlrtOutcome {
        t_stat,
        threshold: gamma_prime,
        decision,
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::OfdmParams;

    fn cfg() -> OfdmConfig {
        OfdmConfig::build(&OfdmParams::default()).unwrap()
    }

    fn est(h: Hypothesis, r0: f64, v: f64, f_cfo: Option<f64>) -> Estimates {
        Estimates {
            hypothesis: h,
            r0_hat: r0,
            v_hat: v,
            f_cfo_hat: f_cfo,
            residual_norm: 0.0,
            condition: 1.0,
        }
    }

    #[test]
    fn identical_estimates_give_identical_templates() {
        let cfg = cfg();
        let tp = synth_templates(
            &cfg,
            &est(Hypothesis::H0FalseTarget, 100.0, 10.0, Some(0.0)),
            &est(Hypothesis::H1RealTarget, 100.0, 10.0, None),
        )
        .unwrap();
        assert_eq!(tp.u0, tp.u1);
        let z: Vec<Complex64> = (0..520).map(|i| Complex64::new(i as f64, -0.5)).collect();
        for mode in [StatMode::Amplitude, StatMode::RealPart] {
            assert_eq!(glrt_statistic(&z, &tp, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_parameters_give_flat_template() {
        let cfg = cfg();
        let tp = synth_templates(
            &cfg,
            &est(Hypothesis::H0FalseTarget, 0.0, 0.0, Some(0.0)),
            &est(Hypothesis::H1RealTarget, 0.0, 0.0, None),
        )
        .unwrap();
        let c = 1.0 / 520f64.sqrt();
        assert!(tp.u0.iter().all(|v| (v - Complex64::new(c, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn exact_template_matches_data_perfectly() {
        let cfg = cfg();
        let h = Complex64::new(0.3, -1.1);
        let z: Vec<Complex64> = signal_template(&cfg, 100.0, 10.0, 10e3).into_iter().map(|v| v * h).collect();
        let tp = synth_templates(
            &cfg,
            &est(Hypothesis::H0FalseTarget, 100.0, 10.0, Some(10e3)),
            &est(Hypothesis::H1RealTarget, 100.0, 10.0, None),
        )
        .unwrap();
        let znorm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((inner(&tp.u0, &z).norm() - znorm).abs() < 1e-9 * znorm);
        assert!(inner(&tp.u1, &z).norm() < znorm);
    }

    #[test]
    fn orthogonal_templates() {
        let u0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let u1 = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)];
        let tp = TemplatePair { u0: u0.clone(), u1: u1.clone() };
        let a = Complex64::new(1.5, -2.0);
        let z1: Vec<Complex64> = u1.iter().map(|v| v * a).collect();
        let z0: Vec<Complex64> = u0.iter().map(|v| v * a).collect();
        assert!((glrt_statistic(&z1, &tp, StatMode::Amplitude).unwrap() - a.norm_sqr()).abs() < 1e-12);
        assert!((glrt_statistic(&z0, &tp, StatMode::Amplitude).unwrap() + a.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn template_preconditions() {
        let cfg = cfg();
        let e0 = est(Hypothesis::H0FalseTarget, 1.0, 1.0, Some(1.0));
        let e1 = est(Hypothesis::H1RealTarget, 1.0, 1.0, None);
        assert!(synth_templates(&cfg, &e1, &e1).is_err());
        assert!(synth_templates(&cfg, &e0, &e0).is_err());
        let tp = synth_templates(&cfg, &e0, &e1).unwrap();
        assert!(matches!(glrt_statistic(&[Complex64::new(1.0, 0.0)], &tp, StatMode::Amplitude), Err(Error::Dimension(_))));
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0.5, 0.0, StatMode::Amplitude).decision, Hypothesis::H1RealTarget);
        assert_eq!(decide(-0.5, 0.0, StatMode::Amplitude).decision, Hypothesis::H0FalseTarget);
        assert_eq!(decide(-1e300, f64::NEG_INFINITY, StatMode::Amplitude).decision, Hypothesis::H1RealTarget);
        assert_eq!(decide(1e300, f64::INFINITY, StatMode::Amplitude).decision, Hypothesis::H0FalseTarget);
    }

    #[test]
    fn amplitude_statistic_invariances() {
        let cfg = cfg();
        let tp = synth_templates(
            &cfg,
            &est(Hypothesis::H0FalseTarget, 100.0, 12.0, Some(3e3)),
            &est(Hypothesis::H1RealTarget, 101.0, 100.0, None),
        )
        .unwrap();
        let z: Vec<Complex64> = signal_template(&cfg, 100.0, 11.0, 1e3)
            .into_iter()
            .enumerate()
            .map(|(i, v)| v + Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()) * 0.1)
            .collect();
        let t = glrt_statistic(&z, &tp, StatMode::Amplitude).unwrap();
        let rot: Vec<Complex64> = z.iter().map(|v| v * Complex64::from_polar(1.0, 2.1)).collect();
        let t_rot = glrt_statistic(&rot, &tp, StatMode::Amplitude).unwrap();
        assert!((t - t_rot).abs() <= 1e-12 * t.abs().max(1.0));
        let scaled: Vec<Complex64> = z.iter().map(|v| v * 3.0).collect();
        let t_scaled = glrt_statistic(&scaled, &tp, StatMode::Amplitude).unwrap();
        assert!((t_scaled - 9.0 * t).abs() <= 1e-9 * t.abs());
        assert_eq!(decide(t, 0.0, StatMode::Amplitude).decision, decide(t_scaled, 0.0, StatMode::Amplitude).decision);
        // the real-part statistic flips under a half-turn of the gain
        let flipped: Vec<Complex64> = z.iter().map(|v| -v).collect();
        let p = glrt_statistic(&z, &tp, StatMode::RealPart).unwrap();
        let pf = glrt_statistic(&flipped, &tp, StatMode::RealPart).unwrap();
        assert!((p + pf).abs() < 1e-12);
    }
}
