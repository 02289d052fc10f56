//! Run configuration: defaults, TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use place_core::certify::DEFAULT_ALPHA;
use place_core::linear::DEFAULT_C_GRID;
use place_core::protocol::{
    AuditConfig, EvalConfig, SelectConfig, TauRule, DEFAULT_CROSSING_PAIRS, DEFAULT_FOLDS,
    DEFAULT_N_MAX,
};
use place_core::stats::SelectionRule;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run depends on. Written next to every output so a run can
/// be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// TU-format dataset directory.
    pub dataset: Option<PathBuf>,
    /// Descriptor sets, each a `+`-joined list such as `degree+hks:10`.
    pub descriptors: Vec<String>,
    pub tau_rule: TauRule,
    pub n_scales: usize,
    pub n_max: usize,
    pub folds: usize,
    /// Cross-validation repetitions.
    pub seeds: Vec<u64>,
    /// Seed for pair sampling and the crossing rule outside cross-validation.
    pub seed: u64,
    pub alpha: f64,
    pub c_grid: Vec<f64>,
    pub rule: SelectionRule,
    pub audit_pairs: usize,
    pub crossing_pairs: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            descriptors: vec!["degree".into()],
            tau_rule: TauRule::Proxy,
            n_scales: 5,
            n_max: DEFAULT_N_MAX,
            folds: DEFAULT_FOLDS,
            seeds: (0..5).collect(),
            seed: 0,
            alpha: DEFAULT_ALPHA,
            c_grid: DEFAULT_C_GRID.to_vec(),
            rule: SelectionRule::Mah,
            audit_pairs: 2000,
            crossing_pairs: DEFAULT_CROSSING_PAIRS,
            out: None,
        }
    }
}

/// Flag values that override the configuration when present.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub descriptors: Option<Vec<String>>,
    pub tau_rule: Option<TauRule>,
    pub n_scales: Option<usize>,
    pub n_max: Option<usize>,
    pub folds: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub rule: Option<SelectionRule>,
    pub audit_pairs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        take!(
            descriptors,
            tau_rule,
            n_scales,
            n_max,
            folds,
            seeds,
            seed,
            alpha,
            c_grid,
            rule,
            audit_pairs
        );
        if o.dataset.is_some() {
            self.dataset = o.dataset;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(m.into()));
        if self.n_scales == 0 {
            return bad("n_scales must be at least 1");
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return bad("c_grid must hold positive finite values");
        }
        if self.descriptors.is_empty() {
            return bad("at least one descriptor set is required");
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<&Path, CliError> {
        self.dataset.as_deref().ok_or_else(|| {
            CliError::Usage(
                "no dataset given (positional argument or `dataset` in the config file)".into(),
            )
        })
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            n_scales: self.n_scales,
            tau: self.tau_rule,
            n_folds: self.folds,
            seeds: self.seeds.clone(),
            alpha: self.alpha,
            c_grid: self.c_grid.clone(),
            crossing_pairs: self.crossing_pairs,
        }
    }

    pub fn audit_config(&self) -> AuditConfig {
        AuditConfig {
            n_scales: self.n_scales,
            tau: self.tau_rule,
            n_pairs: self.audit_pairs,
            seed: self.seed,
            crossing_pairs: self.crossing_pairs,
        }
    }

    pub fn select_config(&self) -> SelectConfig {
        SelectConfig {
            n_max: self.n_max,
            n_scales: self.n_scales,
            tau: self.tau_rule,
            rule: self.rule,
            seed: self.seed,
        }
    }
}

/// File-system friendly name for a descriptor set.
pub fn set_dir_name(set: &str) -> String {
    set.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_overrides() {
        let text = "descriptors = [\"degree+hks:10\"]\ntau_rule = \"crossing\"\nseeds = [7]\n";
        let mut c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.tau_rule, TauRule::Crossing);
        assert_eq!(c.seeds, vec![7]);
        assert_eq!(c.n_max, DEFAULT_N_MAX);
        c.apply(Overrides {
            n_scales: Some(3),
            ..Default::default()
        });
        assert_eq!(c.n_scales, 3);
        assert_eq!(c.descriptors, vec!["degree+hks:10".to_string()]);
        let back: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("n_scale = 3").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let c = RunConfig {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            folds: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn set_names() {
        assert_eq!(set_dir_name("degree+hks:10"), "degree+hks_10");
        assert_eq!(set_dir_name("file:/a/b.txt"), "file__a_b.txt");
    }
}
