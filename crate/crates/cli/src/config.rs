//! Experiment configuration files and code assembly.
//!
//! Configs are strict JSON: a `version` field, no unknown fields, and
//! per-architecture validation, so a typo in an experiment file fails
//! before any compute is spent.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use polarcat_core::arch::{AugmentedCode, LocalGlobalCode};
use polarcat_core::density::{de_construct, ChannelModel, DensityGrid};
use polarcat_core::formats::{read_json, read_profile, FORMAT_VERSION};
use polarcat_core::polar::{CodeProfile, SystematicProfile};
use polarcat_core::sim::{CodeUnderTest, DecodeMode};

/// Which concatenation an experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Single,
    Augmented,
    LocalGlobal,
}

/// Design channel for code construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Bec { erasure_prob: f64 },
    Awgn { ebn0_db: f64, rate: f64 },
}

impl ChannelSpec {
    pub fn model(&self) -> Result<ChannelModel> {
        let model = match *self {
            ChannelSpec::Bec { erasure_prob } => ChannelModel::Bec { erasure_prob },
            ChannelSpec::Awgn { ebn0_db, rate } => ChannelModel::awgn_from_ebn0_db(ebn0_db, rate)?,
        };
        model.validate()?;
        Ok(model)
    }

    /// Same channel family at a different operating point (AWGN only).
    pub fn at_ebn0(&self, ebn0_db: f64) -> Result<ChannelSpec> {
        match *self {
            ChannelSpec::Awgn { rate, .. } => Ok(ChannelSpec::Awgn { ebn0_db, rate }),
            ChannelSpec::Bec { .. } => {
                bail!("an E_b/N_0 override applies only to AWGN design channels")
            }
        }
    }
}

/// One experiment: architecture, design channel, and code dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub architecture: Architecture,
    pub channel: ChannelSpec,
    /// log2 length of the (or each) inner code.
    pub inner_n: u32,
    /// Information bits of the inner code (single: the code dimension;
    /// augmented: K_1; unused for local-global).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_k: Option<usize>,
    /// log2 length of the outer code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_n: Option<u32>,
    /// Outer information bits (K_0, or K_a for local-global).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_k: Option<usize>,
    /// Per-block local information bits for local-global codes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_k: Option<Vec<usize>>,
    /// Designed outer profile artifact, relative to the workdir. When
    /// absent the conventional DE design on the config channel is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_profile: Option<PathBuf>,
    /// BP iteration budget for decoding.
    #[serde(default = "default_bp_iterations")]
    pub bp_iterations: u32,
}

fn default_bp_iterations() -> u32 {
    100
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: ExperimentConfig = read_json(path)
            .with_context(|| format!("reading experiment config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            bail!(
                "unsupported config version {}, this tool reads {FORMAT_VERSION}",
                self.version
            );
        }
        if self.bp_iterations == 0 {
            bail!("bp_iterations must be positive");
        }
        match self.architecture {
            Architecture::Single => {
                if self.inner_k.is_none() {
                    bail!("single architecture needs inner_k");
                }
                if self.outer_n.is_some() || self.outer_k.is_some() || self.local_k.is_some() {
                    bail!("single architecture takes no outer code fields");
                }
            }
            Architecture::Augmented => {
                if self.outer_n.is_none() || self.outer_k.is_none() || self.inner_k.is_none() {
                    bail!("augmented architecture needs outer_n, outer_k, and inner_k");
                }
                if self.local_k.is_some() {
                    bail!("local_k applies only to local-global codes");
                }
            }
            Architecture::LocalGlobal => {
                if self.outer_n.is_none() || self.outer_k.is_none() || self.local_k.is_none() {
                    bail!("local-global architecture needs outer_n, outer_k, and local_k");
                }
                if self.inner_k.is_some() {
                    bail!("inner_k applies only to single and augmented codes");
                }
            }
        }
        Ok(())
    }

    pub fn outer_n(&self) -> Result<u32> {
        self.outer_n.context("config has no outer code")
    }

    pub fn outer_k(&self) -> Result<usize> {
        self.outer_k.context("config has no outer code")
    }

    /// Full-length reliability carrier for the inner code, constructed by
    /// DE on the design channel.
    pub fn inner_order(&self) -> Result<CodeProfile> {
        let model = self.channel.model()?;
        let metrics = de_construct(&model, self.inner_n, DensityGrid::default_grid())?;
        Ok(CodeProfile::from_error_metrics(
            self.inner_n,
            1usize << self.inner_n,
            metrics.values(),
        )?)
    }

    /// The outer code base profile plus the label of the method that
    /// designed it ("de" when derived from the config channel).
    pub fn outer_base(&self, workdir: &Path) -> Result<(CodeProfile, String)> {
        let n0 = self.outer_n()?;
        let k0 = self.outer_k()?;
        if let Some(rel) = &self.outer_profile {
            let path = workdir.join(rel);
            let (profile, provenance) = read_profile(&path)
                .with_context(|| format!("reading outer profile {}", path.display()))?;
            if profile.n() != n0 || profile.k() != k0 {
                bail!(
                    "outer profile is ({}, {}), config expects (2^{n0}, {k0})",
                    profile.block_len(),
                    profile.k()
                );
            }
            let label = provenance
                .map(|p| p.method)
                .unwrap_or_else(|| "file".into());
            Ok((profile, label))
        } else {
            let model = self.channel.model()?;
            let metrics = de_construct(&model, n0, DensityGrid::default_grid())?;
            Ok((
                CodeProfile::from_error_metrics(n0, k0, metrics.values())?,
                "de".into(),
            ))
        }
    }

    pub fn assemble_augmented(&self, workdir: &Path) -> Result<(AugmentedCode, String)> {
        let (outer, label) = self.outer_base(workdir)?;
        let inner_order = self.inner_order()?;
        let k1 = self
            .inner_k
            .context("augmented architecture needs inner_k")?;
        Ok((AugmentedCode::assemble(outer, &inner_order, k1)?, label))
    }

    pub fn assemble_local_global(&self, workdir: &Path) -> Result<(LocalGlobalCode, String)> {
        let (outer, label) = self.outer_base(workdir)?;
        let inner_order = self.inner_order()?;
        let local_k = self
            .local_k
            .as_ref()
            .context("local-global architecture needs local_k")?;
        let code = LocalGlobalCode::assemble(SystematicProfile::new(outer), &inner_order, local_k)?;
        Ok((code, label))
    }

    /// Assembles the simulated code for a decode mode; returns the code
    /// and the design-method label for result rows.
    pub fn build_code(&self, workdir: &Path, mode: DecodeMode) -> Result<(CodeUnderTest, String)> {
        match self.architecture {
            Architecture::Single => {
                if mode != DecodeMode::Single {
                    bail!("a single code only supports --mode single");
                }
                let k = self.inner_k.context("single architecture needs inner_k")?;
                let order = self.inner_order()?;
                let profile = CodeProfile::from_reliability_order(
                    self.inner_n,
                    k,
                    order.reliability_order().to_vec(),
                )?;
                Ok((CodeUnderTest::Single(profile), "none".into()))
            }
            Architecture::Augmented => {
                if mode != DecodeMode::Global {
                    bail!("an augmented code only supports --mode global");
                }
                let (code, label) = self.assemble_augmented(workdir)?;
                Ok((CodeUnderTest::Augmented(code), label))
            }
            Architecture::LocalGlobal => {
                if mode == DecodeMode::Single {
                    bail!("a local-global code supports --mode local or global");
                }
                let (code, label) = self.assemble_local_global(workdir)?;
                Ok((CodeUnderTest::LocalGlobal { code, mode }, label))
            }
        }
    }
}
