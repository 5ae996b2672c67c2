//! Run configuration.
//!
//! A TOML document with one table per section; every key can also be given
//! on the command line in dotted form (`--set scenario.snr_db=13`). Physical
//! quantities carry their unit in the key name. Resolution order, later
//! wins: built-in defaults, config file, `--set` overrides, dedicated flags.
//! Unknown keys are rejected.
//!
//! ```toml
//! [ofdm]
//! n_fft = 64
//! k_active = 52
//! n_pilot = 12
//! delta_f_hz = 312500.0
//! f_c_hz = 5e9
//! m_symbols = 10
//! constellation = "qpsk"      # bpsk | qpsk | 8psk
//! layout = "contiguous"       # contiguous | ieee80211
//! v_max_mps = 100.0
//!
//! [rdmap]
//! zero_pad = 16
//! peak_refine_tol = 1e-6
//!
//! [scenario]
//! kind = "false"              # false | real
//! r0_m = 100.0
//! v_mps = 10.0
//! f_cfo_hz = 10000.0          # false targets only
//! sigma_rcs_m2 = 1.0
//! snr_db = 13.0               # inf = noiseless
//! intra_symbol_cfo = false
//!
//! [detector]
//! mode = "amplitude"          # amplitude | real_part
//! gamma = 0.0
//!
//! [montecarlo]
//! n_trials = 2000
//! snr_db = [9.0, 13.0]
//! genie = [false, true]
//! gamma_min = 1e-4
//! gamma_max = 1e2
//! gamma_count = 81
//!
//! [run]
//! seed = 1
//! workers = 0                 # 0 = all cores
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{Scenario, TargetKind, DEFAULT_FALSE_TARGET_CFO};
use crate::detector::StatMode;
use crate::error::{Error, Result};
use crate::montecarlo::{default_gamma_grid, RocRequest};
use crate::waveform::{Constellation, OfdmConfig, OfdmParams, SubcarrierLayout};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmSection {
    pub n_fft: usize,
    pub k_active: usize,
    pub n_pilot: usize,
    pub delta_f_hz: f64,
    pub f_c_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_s_hz: Option<f64>,
    pub m_symbols: usize,
    pub constellation: String,
    pub layout: String,
    pub v_max_mps: f64,
}

impl Default for OfdmSection {
    fn default() -> Self {
        let p = OfdmParams::default();
        OfdmSection {
            n_fft: p.n_fft,
            k_active: p.k_active,
            n_pilot: p.n_pilot,
            delta_f_hz: p.delta_f,
            f_c_hz: p.f_c,
            f_s_hz: p.f_s,
            m_symbols: p.m_symbols,
            constellation: p.constellation.to_string(),
            layout: p.layout.to_string(),
            v_max_mps: p.v_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdmapSection {
    pub zero_pad: usize,
    pub peak_refine_tol: f64,
}

impl Default for RdmapSection {
    fn default() -> Self {
        let p = OfdmParams::default();
        RdmapSection {
            zero_pad: p.zero_pad,
            peak_refine_tol: p.peak_refine_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: String,
    pub r0_m: f64,
    pub v_mps: f64,
    /// Defaults to 10 kHz for a false target and 0 for a real one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_cfo_hz: Option<f64>,
    pub sigma_rcs_m2: f64,
    pub snr_db: f64,
    pub intra_symbol_cfo: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            kind: TargetKind::FalseTarget.to_string(),
            r0_m: 100.0,
            v_mps: 10.0,
            f_cfo_hz: None,
            sigma_rcs_m2: 1.0,
            snr_db: 13.0,
            intra_symbol_cfo: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub mode: String,
    /// Threshold on `T/σ²` for single trials.
    pub gamma: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            mode: StatMode::default().to_string(),
            gamma: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    /// Trials per side and SNR.
    pub n_trials: usize,
    pub snr_db: Vec<f64>,
    pub genie: Vec<bool>,
    /// False-target CFO of the sweep; falls back to the scenario's when the
    /// scenario is a false target, else to 10 kHz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_cfo_hz: Option<f64>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_count: usize,
    /// Explicit threshold list; replaces the generated grid when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            n_trials: 2000,
            snr_db: vec![9.0, 13.0],
            genie: vec![false, true],
            f_cfo_hz: None,
            gamma_min: 1e-4,
            gamma_max: 1e2,
            gamma_count: 81,
            gamma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads for sweeps; 0 uses every core. Does not affect results.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 1, workers: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ofdm: OfdmSection,
    pub rdmap: RdmapSection,
    pub scenario: ScenarioSection,
    pub detector: DetectorSection,
    pub montecarlo: MonteCarloSection,
    pub run: RunSection,
}

/// Keys whose values are names; their overrides are never parsed as TOML,
/// so `scenario.kind=false` stays a string.
const NAME_KEYS: [&str; 4] = ["ofdm.constellation", "ofdm.layout", "scenario.kind", "detector.mode"];

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string so that `scenario.kind=real` works unquoted.
fn parse_value(key: &str, raw: &str) -> toml::Value {
    let raw = raw.trim();
    if NAME_KEYS.contains(&key) {
        return toml::Value::String(raw.trim_matches('"').to_string());
    }
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies one `section.key=value` override to a document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override '{assignment}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() != 2 || path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key '{key}' must look like section.key")));
    }
    let section = doc
        .entry(path[0])
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let table = section
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("'{}' is not a section", path[0])))?;
    table.insert(path[1].to_string(), parse_value(key.trim(), value));
    Ok(())
}

impl RunConfig {
    /// Parses a TOML document, rejecting unknown sections and keys.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        Self::from_table(parse_table(text)?)
    }

    fn from_table(table: toml::Table) -> Result<RunConfig> {
        RunConfig::deserialize(table).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Loads `path` (TOML, or a run manifest written by the CLI) if given,
    /// then applies the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("config not found: {}: {e}", p.display())))?;
                if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                    let manifest: serde_json::Value = serde_json::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    let inner = manifest
                        .get("config_toml")
                        .and_then(|v| v.as_str())
                        .ok_or_else(|| Error::Config(format!("{}: not a run manifest", p.display())))?;
                    parse_table(inner)?
                } else {
                    parse_table(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg = Self::from_table(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A copy with one `section.key=value` override applied and validated.
    pub fn with_override(&self, assignment: &str) -> Result<RunConfig> {
        let mut doc = parse_table(&self.to_toml())?;
        apply_override(&mut doc, assignment)?;
        let cfg = Self::from_table(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the resolved configuration, ignoring the worker count.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.workers = 0;
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        self.ofdm_config()?;
        self.scenario()?.validate()?;
        self.mode()?;
        if self.detector.gamma.is_nan() {
            return Err(Error::Config("detector.gamma must not be NaN".into()));
        }
        self.roc_request()?.validate()
    }

    pub fn ofdm_params(&self) -> Result<OfdmParams> {
        Ok(OfdmParams {
            n_fft: self.ofdm.n_fft,
            k_active: self.ofdm.k_active,
            n_pilot: self.ofdm.n_pilot,
            delta_f: self.ofdm.delta_f_hz,
            f_c: self.ofdm.f_c_hz,
            f_s: self.ofdm.f_s_hz,
            m_symbols: self.ofdm.m_symbols,
            zero_pad: self.rdmap.zero_pad,
            peak_refine_tol: self.rdmap.peak_refine_tol,
            constellation: self.ofdm.constellation.parse::<Constellation>()?,
            layout: self.ofdm.layout.parse::<SubcarrierLayout>()?,
            v_max: self.ofdm.v_max_mps,
        })
    }

    pub fn ofdm_config(&self) -> Result<OfdmConfig> {
        OfdmConfig::build(&self.ofdm_params()?)
    }

    pub fn mode(&self) -> Result<StatMode> {
        self.detector.mode.parse()
    }

    pub fn target_kind(&self) -> Result<TargetKind> {
        self.scenario.kind.parse()
    }

    /// The single-trial scenario, seeded with `run.seed`.
    pub fn scenario(&self) -> Result<Scenario> {
        let kind = self.target_kind()?;
        let f_cfo = match (kind, self.scenario.f_cfo_hz) {
            (_, Some(f)) => f,
            (TargetKind::FalseTarget, None) => DEFAULT_FALSE_TARGET_CFO,
            (TargetKind::RealTarget, None) => 0.0,
        };
        Ok(Scenario {
            kind,
            r0: self.scenario.r0_m,
            v: self.scenario.v_mps,
            f_cfo,
            sigma_rcs: self.scenario.sigma_rcs_m2,
            snr_db: self.scenario.snr_db,
            seed: self.run.seed,
            intra_symbol_cfo: self.scenario.intra_symbol_cfo,
        })
    }

    pub fn gamma_grid(&self) -> Result<Vec<f64>> {
        match &self.montecarlo.gamma {
            Some(list) => Ok(list.clone()),
            None => default_gamma_grid(
                self.montecarlo.gamma_min,
                self.montecarlo.gamma_max,
                self.montecarlo.gamma_count,
            ),
        }
    }

    pub fn roc_request(&self) -> Result<RocRequest> {
        let f_cfo = match (self.montecarlo.f_cfo_hz, self.target_kind()?) {
            (Some(f), _) => f,
            (None, TargetKind::FalseTarget) => self.scenario()?.f_cfo,
            (None, TargetKind::RealTarget) => DEFAULT_FALSE_TARGET_CFO,
        };
        Ok(RocRequest {
            r0: self.scenario.r0_m,
            v: self.scenario.v_mps,
            f_cfo,
            sigma_rcs: self.scenario.sigma_rcs_m2,
            intra_symbol_cfo: self.scenario.intra_symbol_cfo,
            snr_db: self.montecarlo.snr_db.clone(),
            gamma_grid: self.gamma_grid()?,
            n_trials: self.montecarlo.n_trials,
            genie: self.montecarlo.genie.clone(),
            mode: self.mode()?,
            master_seed: self.run.seed,
            config_hash: self.hash(),
        })
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::Config(e.message().to_string()))
}
