use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{KernelFamily, KernelSpec, OptimizerOptions};
use crate::rng::{RandomStream, StreamKey};
use crate::signal::{generate_t1, generate_t2, FilterSpec, FirSystem, InputOptions, NoiseSpec};

/// How the true systems are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum SystemType {
    T1,
    T2,
    Explicit { theta0: Vec<f64> },
}

/// One data collection: the input filter `c_u / (1 - a q⁻¹)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Collection {
    pub a: f64,
    pub cu2: f64,
}

impl Collection {
    pub fn filter(&self) -> Result<FilterSpec> {
        FilterSpec::second_order_cu2(self.a, self.cu2)
    }
}

pub const DEFAULT_A: [f64; 3] = [0.05, 0.7, 0.95];
pub const T1_CU2: [f64; 3] = [0.02, 0.1, 0.5];
pub const T2_CU2: [f64; 3] = [1.0, 10.0, 100.0];

/// The 3 × 3 grid of `(a, c_u²)` used for each system type.
pub fn default_collections(system_type: &SystemType) -> Vec<Collection> {
    let cu2 = match system_type {
        SystemType::T2 => T2_CU2,
        _ => T1_CU2,
    };
    DEFAULT_A
        .iter()
        .flat_map(|&a| cu2.iter().map(move |&cu2| Collection { a, cu2 }))
        .collect()
}

fn default_order() -> usize {
    20
}

fn default_samples() -> usize {
    1000
}

fn default_records() -> usize {
    2000
}

fn default_systems() -> usize {
    10
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::gaussian(1.0).expect("unit variance is valid")
}

fn default_stem() -> String {
    "mc".to_string()
}

fn default_system_type() -> SystemType {
    SystemType::T1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    #[serde(default = "default_system_type")]
    pub system_type: SystemType,
    /// FIR order.
    #[serde(default = "default_order")]
    pub n: usize,
    /// Samples per record.
    #[serde(rename = "N", default = "default_samples")]
    pub samples: usize,
    /// Empty means the default grid for `system_type`.
    #[serde(default)]
    pub collections: Vec<Collection>,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "default_records")]
    pub records: usize,
    #[serde(default = "default_systems")]
    pub systems: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub input: InputOptions,
    /// Evaluate the expansion identities on every record.
    #[serde(default)]
    pub check_expansion: bool,
    /// File stem for `<stem>_records.csv` and `<stem>_aggregate.json`.
    #[serde(default = "default_stem")]
    pub output_stem: String,
}

impl ExperimentConfig {
    pub fn new(kernel: KernelFamily, system_type: SystemType) -> Self {
        Self {
            kernel: KernelSpec::new(kernel),
            system_type,
            n: default_order(),
            samples: default_samples(),
            collections: Vec::new(),
            noise: default_noise(),
            records: default_records(),
            systems: default_systems(),
            master_seed: 0,
            optimizer: OptimizerOptions::default(),
            input: InputOptions::default(),
            check_expansion: false,
            output_stem: default_stem(),
        }
    }

    /// Fills the collection grid and checks every invariant.
    pub fn resolved(mut self) -> Result<Self> {
        if self.collections.is_empty() {
            self.collections = default_collections(&self.system_type);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.kernel.validate()?;
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.samples <= self.n {
            return bad(format!(
                "N must exceed n, got N = {}, n = {}",
                self.samples, self.n
            ));
        }
        if self.records == 0 {
            return bad("records must be >= 1".into());
        }
        if self.records > u32::MAX as usize {
            return bad(format!("records must be < 2^32, got {}", self.records));
        }
        if self.systems == 0 || self.systems >= 1 << 20 {
            return bad(format!(
                "systems must be in [1, 2^20), got {}",
                self.systems
            ));
        }
        if let SystemType::Explicit { theta0 } = &self.system_type {
            if theta0.len() != self.n {
                return bad(format!(
                    "system_type.theta0 has length {}, n = {}",
                    theta0.len(),
                    self.n
                ));
            }
            if theta0.iter().any(|x| !x.is_finite()) {
                return bad("system_type.theta0 must be finite".into());
            }
        }
        if self.collections.len() > 256 {
            return bad(format!(
                "at most 256 collections, got {}",
                self.collections.len()
            ));
        }
        for (i, c) in self.collections.iter().enumerate() {
            c.filter()
                .map_err(|e| Error::InvalidConfig(format!("collections[{i}]: {e}")))?;
            if self.collections[..i].contains(c) {
                return bad(format!("collections[{i}] duplicates an earlier entry"));
            }
        }
        if self.output_stem.is_empty() || self.output_stem.contains(['/', '\\']) {
            return bad(format!(
                "output_stem must be a plain file stem, got {:?}",
                self.output_stem
            ));
        }
        Ok(())
    }

    /// True system `s`, drawn from its own stream.
    pub fn system(&self, s: usize) -> Result<FirSystem> {
        let mut rng = RandomStream::derive(self.master_seed, StreamKey::system(s as u32));
        match &self.system_type {
            SystemType::T1 => Ok(generate_t1(self.n, &mut rng)),
            SystemType::T2 => Ok(generate_t2(self.n, &mut rng)),
            SystemType::Explicit { theta0 } => FirSystem::new(theta0.clone(), "explicit"),
        }
    }
}
