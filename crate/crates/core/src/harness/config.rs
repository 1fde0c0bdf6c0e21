//! Simulation configuration: JSON schema and validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::clipping::{build_profile, ClippingProfile};
use crate::code::{derive_params, CodeParams};
use crate::error::{Error, Result};

/// Built-in candidate CR grid for optimization presets, in dB.
///
/// The reference experiments used 19 candidates without listing them; this
/// grid is a stand-in, not canonical.
pub const CANDIDATE_CR_PRESET: &[f64] = &[
    -300.0, -30.0, -28.0, -26.0, -24.0, -22.0, -20.0, -18.0, -16.0, -14.0, -12.0, -10.0, -8.0,
    -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 300.0,
];

/// Code geometry inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub b: usize,
    pub l: usize,
    pub r: f64,
}

impl CodeSpec {
    pub fn params(&self) -> Result<CodeParams> {
        derive_params(self.b, self.l, self.r)
    }
}

/// Where the clipping profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProfileSource {
    /// No clipping (identity with unit scale).
    Unclipped,
    /// One threshold for all symbols.
    Regular { cr_db: f64 },
    /// Explicit thresholds and fractions.
    Irregular { cr_db: Vec<f64>, lambda: Vec<f64> },
    /// Optimize the fractions per simulated SNR over these candidates.
    Optimize { candidate_cr_db: Vec<f64> },
}

impl ProfileSource {
    /// Builds the profile when it does not depend on the SNR.
    pub fn fixed_profile(&self, m: usize) -> Result<Option<ClippingProfile>> {
        match self {
            ProfileSource::Unclipped => Ok(Some(ClippingProfile::unclipped(m)?)),
            ProfileSource::Regular { cr_db } => Ok(Some(ClippingProfile::regular(*cr_db, m)?)),
            ProfileSource::Irregular { cr_db, lambda } => {
                Ok(Some(build_profile(cr_db, lambda, m)?))
            }
            ProfileSource::Optimize { .. } => Ok(None),
        }
    }
}

/// Adaptive stopping policy for one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialPolicy {
    pub min_trials: usize,
    pub max_trials: usize,
    pub target_section_errors: usize,
}

impl Default for TrialPolicy {
    fn default() -> Self {
        Self {
            min_trials: 8,
            max_trials: 10_000,
            target_section_errors: 50,
        }
    }
}

/// Transfer-table settings used when the profile source is `optimize`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub v_min: f64,
    pub v_points: usize,
    pub declip_samples: usize,
    pub demod_sections: usize,
    pub tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            v_min: 1e-6,
            v_points: 100,
            declip_samples: 200_000,
            demod_sections: 200_000,
            tol: 1e-6,
        }
    }
}

/// Output file locations (CLI flags take precedence).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

fn default_max_iters() -> usize {
    120
}

/// Full sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: CodeSpec,
    pub profile: ProfileSource,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub trials: TrialPolicy,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub output: OutputSpec,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db list is empty".into()));
        }
        if self.trials.min_trials < 1 {
            return Err(Error::Config("min_trials must be at least 1".into()));
        }
        if self.trials.max_trials < self.trials.min_trials {
            return Err(Error::Config("max_trials below min_trials".into()));
        }
        if self.trials.target_section_errors < 1 {
            return Err(Error::Config("target_section_errors must be at least 1".into()));
        }
        self.code.params()?;
        if let ProfileSource::Optimize { candidate_cr_db } = &self.profile {
            if candidate_cr_db.is_empty() {
                return Err(Error::Config("optimize needs candidate CRs".into()));
            }
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON, for provenance fields.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in text.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> SimConfig {
        SimConfig {
            code: CodeSpec {
                b: 16,
                l: 64,
                r: 0.5,
            },
            profile: ProfileSource::Irregular {
                cr_db: vec![-300.0, -13.0],
                lambda: vec![0.25, 0.75],
            },
            snr_db: vec![2.0, 2.5],
            trials: TrialPolicy::default(),
            max_iters: 60,
            seed: 7,
            optimizer: OptimizerSettings::default(),
            output: OutputSpec::default(),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = sample_config();
        let text = cfg.to_json();
        let back = SimConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let text = r#"{
            "code": {"b": 16, "l": 64, "r": 0.5},
            "profile": {"type": "regular", "cr_db": -13.0},
            "snr_db": [2.0]
        }"#;
        let cfg = SimConfig::from_json(text).unwrap();
        assert_eq!(cfg.max_iters, 120);
        assert_eq!(cfg.trials.target_section_errors, 50);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SimConfig::from_json("{").is_err());
        let mut cfg = sample_config();
        cfg.snr_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = sample_config();
        cfg.trials.max_trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = sample_config();
        cfg.code.b = 17;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn profile_sources_build() {
        let m = 96;
        assert!(ProfileSource::Unclipped.fixed_profile(m).unwrap().is_some());
        let p = ProfileSource::Regular { cr_db: -13.0 }
            .fixed_profile(m)
            .unwrap()
            .unwrap();
        assert_eq!(p.num_groups(), 1);
        let p = ProfileSource::Optimize {
            candidate_cr_db: vec![-13.0],
        }
        .fixed_profile(m)
        .unwrap();
        assert!(p.is_none());
    }
}
