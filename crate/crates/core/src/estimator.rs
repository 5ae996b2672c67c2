//! Joint least-squares fit of range, velocity and CFO to the peak
//! observations.
//!
//! The merged observation vector stacks the `M` per-symbol delays on top of
//! the `K` per-subcarrier Doppler frequencies:
//!
//! ```text
//! delay[m]   = 2R₀/c − (2v/c) m T_N
//! doppler[k] = (2v/c)(f_c + kΔf) + f_cfo
//! ```
//!
//! The Doppler rows drop the bilinear `(2v/c) f_cfo` term (below 1 mHz for
//! |v| ≤ 100 m/s and |f_cfo| ≤ 100 kHz), which keeps both hypotheses linear:
//! `f = a₁ f_cfo + A₂ [R₀, v]ᵀ` for a false target and `f = A₂ [R₀, v]ᵀ`
//! for a real one.
//!
//! At 802.11 scales the delay rows barely constrain `v` (the slope is about
//! 2e-14 s per m/s per symbol), so velocity comes almost entirely from the
//! Doppler rows. In the false-target model `v` and `f_cfo` are then separated
//! only by the spread of `(f_c + kΔf)` across the band, which is a fraction of
//! a percent of `f_c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rdmap::PeakObservations;
use crate::waveform::{OfdmConfig, SPEED_OF_LIGHT};

/// Largest accepted condition number of the column-scaled design.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// The echo is an adversarial re-transmission (CFO present).
    #[serde(rename = "H0_false_target")]
    H0FalseTarget,
    /// The echo comes from a physical reflector.
    #[serde(rename = "H1_real_target")]
    H1RealTarget,
}

/// `[delay_obs (M, seconds); dopp_obs (K, Hz)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    pub f: Vec<f64>,
    pub m_symbols: usize,
}

impl ObservationVector {
    pub fn from_peaks(peaks: &PeakObservations) -> Result<ObservationVector> {
        let f: Vec<f64> = peaks.delay_obs.iter().chain(&peaks.dopp_obs).copied().collect();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("peak observations must be finite".into()));
        }
        Ok(ObservationVector {
            f,
            m_symbols: peaks.delay_obs.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Observations predicted by the model for given parameters. With
/// `cross_term` the bilinear `(2v/c) f_cfo` contribution is included, which
/// is what the channel actually produces.
pub fn model_observations(cfg: &OfdmConfig, r0: f64, v: f64, f_cfo: f64, cross_term: bool) -> ObservationVector {
    let beta = 2.0 * v / SPEED_OF_LIGHT;
    let delays = (0..cfg.m_symbols).map(|m| 2.0 * r0 / SPEED_OF_LIGHT - beta * m as f64 * cfg.t_sym);
    let cross = if cross_term { beta * f_cfo } else { 0.0 };
    let dopplers = cfg
        .subcarriers()
        .iter()
        .map(|&k| beta * (cfg.f_c + k as f64 * cfg.delta_f) + f_cfo + cross);
    ObservationVector {
        f: delays.chain(dopplers).collect(),
        m_symbols: cfg.m_symbols,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrices {
    /// CFO column: zeros on delay rows, ones on Doppler rows.
    pub a1: DVector<f64>,
    /// `[R₀, v]` columns.
    pub a2: DMatrix<f64>,
    pub m_symbols: usize,
    pub k_active: usize,
}

impl DesignMatrices {
    /// `[A2 | a1]`, i.e. columns `[R₀, v, f_cfo]`.
    ///
    /// The delay-only `R₀` column comes first so that the first Householder
    /// reflection never mixes Hz-scale Doppler rows into the second-scale
    /// delay rows.
    pub fn full(&self) -> DMatrix<f64> {
        let rows = self.a2.nrows();
        let mut out = DMatrix::zeros(rows, 3);
        out.view_mut((0, 0), (rows, 2)).copy_from(&self.a2);
        out.set_column(2, &self.a1);
        out
    }
}

pub fn build_design_matrices(cfg: &OfdmConfig) -> Result<DesignMatrices> {
    let (m, k) = (cfg.m_symbols, cfg.k_active);
    if m < 2 || k < 2 {
        return Err(Error::RankDeficient(format!(
            "need at least 2 symbols and 2 subcarriers, got M = {m}, K = {k}"
        )));
    }
    let rows = m + k;
    let two_over_c = 2.0 / SPEED_OF_LIGHT;
    let mut a1 = DVector::zeros(rows);
    let mut a2 = DMatrix::zeros(rows, 2);
    for i in 0..m {
        a2[(i, 0)] = two_over_c;
        a2[(i, 1)] = -two_over_c * i as f64 * cfg.t_sym;
    }
    for (p, &sub) in cfg.subcarriers().iter().enumerate() {
        a1[m + p] = 1.0;
        a2[(m + p, 1)] = two_over_c * (cfg.f_c + sub as f64 * cfg.delta_f);
    }
    Ok(DesignMatrices {
        a1,
        a2,
        m_symbols: m,
        k_active: k,
    })
}

/// LS parameter estimates under one hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub hypothesis: Hypothesis,
    pub r0_hat: f64,
    pub v_hat: f64,
    /// Present only for the false-target fit.
    pub f_cfo_hat: Option<f64>,
    pub residual_norm: f64,
    /// Condition number of the column-scaled design that was solved.
    pub condition: f64,
}

pub(crate) struct LsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub condition: f64,
}

/// Column-scaled Householder QR least squares, `min ‖W^{1/2}(b − A x)‖`.
pub(crate) fn solve_ls(a: &DMatrix<f64>, b: &DVector<f64>, weights: Option<&[f64]>) -> Result<LsSolution> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows, observation has {}",
            a.nrows(),
            b.len()
        )));
    }
    let mut a = a.clone();
    let mut b = b.clone();
    if let Some(w) = weights {
        if w.len() != b.len() {
            return Err(Error::Dimension(format!("{} weights for {} observations", w.len(), b.len())));
        }
        for (i, &wi) in w.iter().enumerate() {
            if !(wi.is_finite() && wi > 0.0) {
                return Err(Error::Config(format!("weight {i} must be positive, got {wi}")));
            }
            let s = wi.sqrt();
            a.row_mut(i).scale_mut(s);
            b[i] *= s;
        }
    }

    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::RankDeficient(format!("design column {j} is zero")));
    }
    let mut scaled = a.clone();
    for (j, n) in norms.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*n);
    }

    let qr = scaled.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let qtb = qr.q().transpose() * &b;
    let mut x = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::IllConditioned { condition })?;
    for (j, n) in norms.iter().enumerate() {
        x[j] /= n;
    }
    let residual_norm = (&b - &a * &x).norm();
    Ok(LsSolution {
        x,
        residual_norm,
        condition,
    })
}

fn check_len(obs: &ObservationVector, dm: &DesignMatrices) -> Result<()> {
    if obs.len() != dm.a2.nrows() || obs.m_symbols != dm.m_symbols {
        return Err(Error::Dimension(format!(
            "observation vector has {} entries ({} delays), design expects {} ({} delays)",
            obs.len(),
            obs.m_symbols,
            dm.a2.nrows(),
            dm.m_symbols
        )));
    }
    Ok(())
}

/// LS fit under `hypothesis`, optionally with per-row weights.
pub fn estimate(obs: &ObservationVector, dm: &DesignMatrices, hypothesis: Hypothesis, weights: Option<&[f64]>) -> Result<Estimates> {
    check_len(obs, dm)?;
    let b = DVector::from_column_slice(&obs.f);
    match hypothesis {
        Hypothesis::H0FalseTarget => {
            let sol = solve_ls(&dm.full(), &b, weights)?;
            Ok(Estimates {
                hypothesis,
                r0_hat: sol.x[0],
                v_hat: sol.x[1],
                f_cfo_hat: Some(sol.x[2]),
                residual_norm: sol.residual_norm,
                condition: sol.condition,
            })
        }
        Hypothesis::H1RealTarget => {
            let sol = solve_ls(&dm.a2, &b, weights)?;
            Ok(Estimates {
                hypothesis,
                f_cfo_hat: None,
                r0_hat: sol.x[0],
                v_hat: sol.x[1],
                residual_norm: sol.residual_norm,
                condition: sol.condition,
            })
        }
    }
}

/// Three-parameter fit `(f_cfo, R₀, v)`.
pub fn estimate_h0(obs: &ObservationVector, dm: &DesignMatrices) -> Result<Estimates> {
    estimate(obs, dm, Hypothesis::H0FalseTarget, None)
}

/// Two-parameter fit `(R₀, v)` without CFO.
pub fn estimate_h1(obs: &ObservationVector, dm: &DesignMatrices) -> Result<Estimates> {
    estimate(obs, dm, Hypothesis::H1RealTarget, None)
}

/// False-target fit with the CFO supplied externally: `(R₀, v)` are fitted
/// to `f − a₁ f_cfo`.
pub fn estimate_with_known_cfo(obs: &ObservationVector, dm: &DesignMatrices, f_cfo: f64) -> Result<Estimates> {
    check_len(obs, dm)?;
    let b = DVector::from_column_slice(&obs.f) - &dm.a1 * f_cfo;
    let sol = solve_ls(&dm.a2, &b, None)?;
    Ok(Estimates {
        hypothesis: Hypothesis::H0FalseTarget,
        f_cfo_hat: Some(f_cfo),
        r0_hat: sol.x[0],
        v_hat: sol.x[1],
        residual_norm: sol.residual_norm,
        condition: sol.condition,
    })
}
