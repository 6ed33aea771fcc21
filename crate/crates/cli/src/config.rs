//! Resolved run configuration: JSON file merged with command-line flags
//! (flags win), echoed into every output together with its hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use outstat_core::outpdf::{ChannelModel, SystemDims};
use outstat_core::sampling::InputScheme;

/// Everything a run needs; serialized into output headers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: String,
    pub scheme: String,
    pub m: usize,
    pub n: usize,
    pub b: usize,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub kappa: f64,
    pub h: f64,
    pub alpha: f64,
    pub omega: f64,
    pub interferers: usize,
    pub theta: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "rayleigh".into(),
            scheme: "gaussian".into(),
            m: 1,
            n: 1,
            b: 2,
            snr_start_db: 0.0,
            snr_stop_db: 20.0,
            snr_step_db: 5.0,
            kappa: 1.0,
            h: 2.0,
            alpha: 3.0,
            omega: 1.0,
            interferers: 2,
            theta: 1.0,
            mc_samples: 10_000,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn channel_model(&self) -> Result<ChannelModel, String> {
        match self.model.as_str() {
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            "rician" => Ok(ChannelModel::Rician { kappa: self.kappa, h: self.h }),
            "lms" => Ok(ChannelModel::Lms { alpha: self.alpha, omega: self.omega }),
            "il-rayleigh" => Ok(ChannelModel::IlRayleigh {
                interferers: self.interferers,
                omega: self.omega,
            }),
            "il-rician" => Ok(ChannelModel::IlRician {
                interferers: self.interferers,
                kappa: self.kappa,
                h: self.h,
                theta: self.theta,
            }),
            other => Err(format!(
                "unknown model '{other}' (expected rayleigh, rician, lms, il-rayleigh, il-rician)"
            )),
        }
    }

    pub fn input_scheme(&self) -> Result<InputScheme, String> {
        match self.scheme.as_str() {
            "gaussian" => Ok(InputScheme::IidGaussian),
            "ustm" => Ok(InputScheme::Ustm),
            "bstm" => Ok(InputScheme::Bstm),
            other => Err(format!(
                "unknown scheme '{other}' (expected gaussian, ustm, bstm)"
            )),
        }
    }

    pub fn dims_at_db(&self, snr_db: f64) -> outstat_core::Result<SystemDims> {
        SystemDims::new(self.m, self.n, self.b, 10f64.powf(snr_db / 10.0))
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        if self.snr_step_db <= 0.0 || self.snr_stop_db < self.snr_start_db {
            return vec![self.snr_start_db];
        }
        let mut grid = Vec::new();
        let mut v = self.snr_start_db;
        while v <= self.snr_stop_db + 1e-9 {
            grid.push(v);
            v += self.snr_step_db;
        }
        grid
    }

    /// Short content hash of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::new();
        for byte in digest.iter().take(6) {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn echo_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
