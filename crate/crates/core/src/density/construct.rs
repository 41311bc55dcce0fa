//! Channel densities and bit-channel constructions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::convolve::{check_convolve, var_convolve};
use super::grid::{DensityGrid, QuantizedDensity};
use super::DensityError;

/// Maximum polarization depth for full density evolution.
pub const MAX_DE_DEPTH: u32 = 12;

/// Memoryless symmetric channel under the all-zero codeword assumption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// BPSK over AWGN; LLRs are Gaussian with mean 2/sigma^2 and variance
    /// 4/sigma^2.
    AwgnBpsk { noise_variance: f64 },
    /// Binary erasure channel; LLRs are 0 (erased) or +infinity (known).
    Bec { erasure_prob: f64 },
}

impl ChannelModel {
    /// AWGN model from an E_b/N_0 operating point at the given code rate:
    /// sigma^2 = 1 / (2 R 10^(dB/10)).
    pub fn awgn_from_ebn0_db(ebn0_db: f64, rate: f64) -> Result<Self, DensityError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(DensityError::InvalidChannel(format!(
                "rate {rate} outside (0, 1]"
            )));
        }
        if !ebn0_db.is_finite() {
            return Err(DensityError::InvalidChannel(format!(
                "E_b/N_0 {ebn0_db} dB is not finite"
            )));
        }
        let noise_variance = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
        Ok(Self::AwgnBpsk { noise_variance })
    }

    pub fn validate(&self) -> Result<(), DensityError> {
        match *self {
            Self::AwgnBpsk { noise_variance } => {
                if !noise_variance.is_finite() || noise_variance <= 0.0 {
                    return Err(DensityError::InvalidChannel(format!(
                        "noise variance {noise_variance} must be positive and finite"
                    )));
                }
            }
            Self::Bec { erasure_prob } => {
                if !(0.0..=1.0).contains(&erasure_prob) {
                    return Err(DensityError::InvalidChannel(format!(
                        "erasure probability {erasure_prob} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Samples the receiver LLR for one transmitted bit.
    ///
    /// BPSK maps bit 0 to +1 and bit 1 to -1, so a correct observation has
    /// positive LLR. BEC outputs are exact {0, +/-clamp} values; AWGN
    /// outputs are 2y/sigma^2, clamped to the grid range so that decoder
    /// and density-evolution saturation behave identically.
    pub fn sample_llr_for_bit<R: Rng + ?Sized>(&self, bit: u8, rng: &mut R) -> f64 {
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        match *self {
            Self::AwgnBpsk { noise_variance } => {
                let y = sign + noise_variance.sqrt() * standard_normal(rng);
                (2.0 * y / noise_variance).clamp(-LLR_CLAMP, LLR_CLAMP)
            }
            Self::Bec { erasure_prob } => {
                if rng.gen::<f64>() < erasure_prob {
                    0.0
                } else {
                    sign * LLR_CLAMP
                }
            }
        }
    }
}

/// Decoder-side LLR magnitude cap, matching the default grid range.
pub const LLR_CLAMP: f64 = 40.0;

/// Standard normal draw via the Box-Muller transform.
///
/// Two uniforms per draw is slightly wasteful but keeps the sample stream
/// a pure function of the RNG state, which the reproducibility guarantees
/// rely on.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Per-bit-channel error probabilities P(A_i), index i-1 at slot i-1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErrorProfile {
    values: Vec<f64>,
}

impl ErrorProfile {
    pub fn new(values: Vec<f64>) -> Result<Self, DensityError> {
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0 + 1e-9).contains(&v) {
                return Err(DensityError::InvalidProfileValue {
                    index: i + 1,
                    value: v,
                });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Quantized LLR density seen at the channel output.
pub fn channel_density(
    model: &ChannelModel,
    grid: DensityGrid,
) -> Result<QuantizedDensity, DensityError> {
    model.validate()?;
    match *model {
        ChannelModel::Bec { erasure_prob } => QuantizedDensity::bec_style(grid, erasure_prob),
        ChannelModel::AwgnBpsk { noise_variance } => {
            let mean = 2.0 / noise_variance;
            let std_dev = 2.0 / noise_variance.sqrt();
            let normal = Normal::new(mean, std_dev)
                .map_err(|e| DensityError::InvalidChannel(e.to_string()))?;
            let bins = grid.bins();
            let half = grid.step() / 2.0;
            let mut mass = vec![0.0; bins];
            // Interior bins integrate one cell; the endpoint bins absorb
            // the tails.
            let mut lower_cdf = normal.cdf(grid.value(0) + half);
            mass[0] = lower_cdf;
            for (i, slot) in mass.iter_mut().enumerate().take(bins - 1).skip(1) {
                let upper_cdf = normal.cdf(grid.value(i) + half);
                *slot = (upper_cdf - lower_cdf).max(0.0);
                lower_cdf = upper_cdf;
            }
            mass[bins - 1] = (1.0 - lower_cdf).max(0.0);
            let sum: f64 = mass.iter().sum();
            for m in &mut mass {
                *m /= sum;
            }
            QuantizedDensity::new(grid, mass)
        }
    }
}

fn check_depth(n: u32) -> Result<(), DensityError> {
    if n > MAX_DE_DEPTH {
        return Err(DensityError::DepthTooLarge {
            got: n,
            max: MAX_DE_DEPTH,
        });
    }
    Ok(())
}

fn de_recurse(d: &QuantizedDensity, depth: u32, out: &mut Vec<f64>) -> Result<(), DensityError> {
    if depth == 0 {
        out.push(d.error_prob());
        return Ok(());
    }
    de_recurse(&check_convolve(d, d)?, depth - 1, out)?;
    de_recurse(&var_convolve(d, d)?, depth - 1, out)
}

/// Stationary density evolution: P(A_i) for all 2^n bit-channels of a
/// polar code over `model`.
///
/// The recursion splits each node density into its check and variable
/// descendants; the check branch is taken first, so outputs arrive in
/// natural bit-channel order (index 1 is the fully check-degraded
/// channel).
pub fn de_construct(
    model: &ChannelModel,
    n: u32,
    grid: DensityGrid,
) -> Result<ErrorProfile, DensityError> {
    check_depth(n)?;
    let root = channel_density(model, grid)?;
    let mut out = Vec::with_capacity(1 << n);
    de_recurse(&root, n, &mut out)?;
    ErrorProfile::new(out)
}

fn bhattacharyya_recurse(erased: f64, known: f64, depth: u32, out: &mut Vec<f64>) {
    if depth == 0 {
        out.push(erased);
        return;
    }
    // The two-term bookkeeping mirrors the quantized evolution of an
    // erasure-style density (mass at zero plus mass at saturation), term
    // order included, so the BEC reduction of de_construct reproduces
    // these values bit for bit.
    bhattacharyya_recurse(
        (erased * erased + erased * known) + known * erased,
        known * known,
        depth - 1,
        out,
    );
    bhattacharyya_recurse(
        erased * erased,
        (erased * known + known * erased) + known * known,
        depth - 1,
        out,
    );
}

/// Exact Bhattacharyya recursion on the BEC: Z -> {2Z - Z^2, Z^2} down n
/// levels; returns Z_i per bit-channel.
///
/// Note the convention gap against [`de_construct`]: an erased bit is a
/// coin flip, so DE's error probability is Z_i / 2.
pub fn bhattacharyya_construct(erasure_prob: f64, n: u32) -> Result<ErrorProfile, DensityError> {
    if !(0.0..=1.0).contains(&erasure_prob) {
        return Err(DensityError::InvalidChannel(format!(
            "erasure probability {erasure_prob} outside [0, 1]"
        )));
    }
    let mut out = Vec::with_capacity(1 << n);
    bhattacharyya_recurse(erasure_prob, 1.0 - erasure_prob, n, &mut out);
    ErrorProfile::new(out)
}

fn nde_recurse(initials: &[QuantizedDensity]) -> Result<Vec<QuantizedDensity>, DensityError> {
    if initials.len() == 1 {
        return Ok(vec![initials[0].clone()]);
    }
    // Natural-order split: even observed positions feed one half-code,
    // odd positions the other, and bit-channel k of each half combines
    // into bit-channels 2k (check) and 2k+1 (variable).
    let even: Vec<QuantizedDensity> = initials.iter().step_by(2).cloned().collect();
    let odd: Vec<QuantizedDensity> = initials.iter().skip(1).step_by(2).cloned().collect();
    let even_channels = nde_recurse(&even)?;
    let odd_channels = nde_recurse(&odd)?;
    let mut out = Vec::with_capacity(initials.len());
    for (e, o) in even_channels.iter().zip(odd_channels.iter()) {
        out.push(check_convolve(e, o)?);
        out.push(var_convolve(e, o)?);
    }
    Ok(out)
}

/// Nonstationary density evolution: bit-channel error probabilities when
/// each observed position starts from its own density.
///
/// `initials[k]` is the density at observed position k+1; exactly 2^n0
/// densities on a common grid are required.
pub fn nde_sweep(initials: &[QuantizedDensity], n0: u32) -> Result<ErrorProfile, DensityError> {
    check_depth(n0)?;
    let expected = 1usize << n0;
    if initials.len() != expected {
        return Err(DensityError::WrongInitialCount {
            got: initials.len(),
            expected,
        });
    }
    let grid = initials[0].grid();
    if initials.iter().any(|d| d.grid() != grid) {
        return Err(DensityError::GridMismatch);
    }
    let channels = nde_recurse(initials)?;
    ErrorProfile::new(channels.iter().map(|d| d.error_prob()).collect())
}
