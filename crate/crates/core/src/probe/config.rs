use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pls::DEFAULT_COMPONENTS;
use crate::qda::DEFAULT_REG;
use crate::tensor::sampling::{DEFAULT_TRAIN, DEFAULT_VAL};
use crate::vip::DEFAULT_TOP_K;

pub const DEFAULT_SWEEP_SIZE: usize = 50;
pub const DEFAULT_COMPOSITE_N: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// PLS components per projection.
    pub components: usize,
    pub n_train: usize,
    pub n_val: usize,
    /// Neurons/channels kept by the VIP-restricted probes.
    pub top_k_units: usize,
    /// Neurons evaluated individually per layer.
    pub sweep_size: usize,
    /// Images averaged per composite.
    pub composite_n: usize,
    pub qda_reg: f64,
    pub scale_features: bool,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            n_train: DEFAULT_TRAIN,
            n_val: DEFAULT_VAL,
            top_k_units: DEFAULT_TOP_K,
            sweep_size: DEFAULT_SWEEP_SIZE,
            composite_n: DEFAULT_COMPOSITE_N,
            qda_reg: DEFAULT_REG,
            scale_features: true,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("components", self.components),
            ("n_train", self.n_train),
            ("n_val", self.n_val),
            ("top_k_units", self.top_k_units),
            ("sweep_size", self.sweep_size),
            ("composite_n", self.composite_n),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Parameter(format!("{name} must be >= 1")));
            }
        }
        if !self.n_train.is_multiple_of(2) || !self.n_val.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "n_train and n_val must be even (got {} and {})",
                self.n_train, self.n_val
            )));
        }
        if self.n_train < 4 {
            return Err(Error::Parameter("n_train must be at least 4".into()));
        }
        if !(self.qda_reg >= 0.0) {
            return Err(Error::Parameter(format!("qda_reg must be >= 0, got {}", self.qda_reg)));
        }
        Ok(())
    }
}
