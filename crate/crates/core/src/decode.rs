//! Successive-cancellation and belief-propagation decoding.
//!
//! All decoders share LLR conventions with the density engine: positive
//! means bit 0, magnitudes are clamped to the quantization range, and BEC
//! inputs are exact {0, +/-clamp} values so that message passing reduces
//! to erasure peeling, resolvable bit for resolvable bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitVector;
use crate::density::{
    boxplus, ChannelModel, DensityError, DensityGrid, ErrorProfile, QuantizedDensity, LLR_CLAMP,
};
use crate::polar::{encode, CodeProfile, PolarError};

/// Largest block admitted by the genie-aided bit-channel simulator.
pub const MAX_GENIE_BLOCK: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("input has {got} LLRs, the code expects {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("{got} LLR blocks supplied for {expected} inner codes")]
    BlockCountMismatch { got: usize, expected: usize },
    #[error("block length {got} exceeds the genie-simulation limit {max}")]
    BlockTooLarge { got: usize, max: usize },
    #[error("invalid connection map: {0}")]
    BadConnection(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Polar(#[from] PolarError),
}

/// Hard decision with ties resolved to bit 0, so a pinned frozen position
/// can never flip.
fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

fn clamp_llr(value: f64) -> f64 {
    value.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Successive-cancellation decoding.
///
/// Returns the message estimate; re-encode it for the codeword estimate.
pub fn sc_decode(llrs: &[f64], profile: &CodeProfile) -> Result<BitVector, DecodeError> {
    if llrs.len() != profile.block_len() {
        return Err(DecodeError::LengthMismatch {
            got: llrs.len(),
            expected: profile.block_len(),
        });
    }
    let frozen = profile.frozen_mask();
    let mut message = Vec::with_capacity(llrs.len());
    sc_recurse(llrs, &frozen, &mut message);
    Ok(BitVector::new(message).expect("decisions are bits"))
}

/// One SC split: combine the half-offset channel pairs, decode the first
/// half of the message over the combined channels, cancel its re-encoded
/// contribution, then decode the second half. Returns the re-encoded
/// codeword of the decoded block.
fn sc_recurse(llrs: &[f64], frozen: &[bool], message: &mut Vec<u8>) -> Vec<u8> {
    if llrs.len() == 1 {
        let bit = if frozen[0] { 0 } else { hard_bit(llrs[0]) };
        message.push(bit);
        return vec![bit];
    }
    let half = llrs.len() / 2;
    let upper: Vec<f64> = (0..half)
        .map(|j| boxplus(llrs[j], llrs[j + half]))
        .collect();
    let first = sc_recurse(&upper, &frozen[..half], message);
    let lower: Vec<f64> = (0..half)
        .map(|j| llrs[j + half] + if first[j] == 1 { -llrs[j] } else { llrs[j] })
        .collect();
    let second = sc_recurse(&lower, &frozen[half..], message);
    let mut codeword = Vec::with_capacity(llrs.len());
    for j in 0..half {
        codeword.push(first[j] ^ second[j]);
    }
    codeword.extend_from_slice(&second);
    codeword
}

/// Estimates per-position bit-channel error rates by genie-aided
/// successive cancellation: the all-zero codeword is transmitted and every
/// decision is corrected before later bits are decoded, so each position
/// sees its true synthesized channel. An exact-zero decision LLR counts as
/// half an error, matching the erasure convention of the analytic
/// constructions.
pub fn genie_aided_bitchannel_sim(
    n: u32,
    model: &ChannelModel,
    frames: u64,
    seed: u64,
) -> Result<ErrorProfile, DecodeError> {
    model.validate()?;
    let len = 1usize << n;
    if len > MAX_GENIE_BLOCK {
        return Err(DecodeError::BlockTooLarge {
            got: len,
            max: MAX_GENIE_BLOCK,
        });
    }
    if frames == 0 {
        return Err(DecodeError::BadParameter("frames must be positive".into()));
    }
    let mut errors = vec![0.0f64; len];
    let mut llrs = vec![0.0f64; len];
    let mut leaf_llrs = Vec::with_capacity(len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for frame in 0..frames {
        rng.set_stream(frame);
        rng.set_word_pos(0);
        for llr in &mut llrs {
            *llr = model.sample_llr_for_bit(0, &mut rng);
        }
        leaf_llrs.clear();
        genie_recurse(&llrs, &mut leaf_llrs);
        for (err, &llr) in errors.iter_mut().zip(&leaf_llrs) {
            if llr < 0.0 {
                *err += 1.0;
            } else if llr == 0.0 {
                *err += 0.5;
            }
        }
    }
    let total = frames as f64;
    Ok(ErrorProfile::new(
        errors.into_iter().map(|e| e / total).collect(),
    )?)
}

/// SC recursion with every decision pinned to the transmitted zeros;
/// pushes each position's decision LLR in index order.
fn genie_recurse(llrs: &[f64], leaf_llrs: &mut Vec<f64>) {
    if llrs.len() == 1 {
        leaf_llrs.push(llrs[0]);
        return;
    }
    let half = llrs.len() / 2;
    let upper: Vec<f64> = (0..half)
        .map(|j| boxplus(llrs[j], llrs[j + half]))
        .collect();
    genie_recurse(&upper, leaf_llrs);
    let lower: Vec<f64> = (0..half).map(|j| llrs[j] + llrs[j + half]).collect();
    genie_recurse(&lower, leaf_llrs);
}

/// Flooding belief-propagation state over the encoder factor graph.
///
/// Messages live on the N x (n+1) variable lattice. `left` row l holds the
/// belief flowing toward the message side into stage l+1; `right` row l
/// the belief flowing toward the channel side into stage l+1. Row 0 of
/// `left` is the channel intrinsic; row n of `right` is the message-side
/// prior, pinned to +clamp on frozen positions.
#[derive(Clone, Debug)]
pub struct BpDecoder {
    n: u32,
    len: usize,
    frozen: Vec<bool>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl BpDecoder {
    pub fn new(profile: &CodeProfile) -> Self {
        let len = profile.block_len();
        let rows = profile.n() as usize + 1;
        let mut decoder = Self {
            n: profile.n(),
            len,
            frozen: profile.frozen_mask(),
            left: vec![0.0; rows * len],
            right: vec![0.0; rows * len],
        };
        decoder.clear();
        decoder
    }

    pub fn block_len(&self) -> usize {
        self.len
    }

    /// Zeroes all messages and re-pins the frozen priors.
    pub fn clear(&mut self) {
        self.left.fill(0.0);
        self.right.fill(0.0);
        let priors = &mut self.right[self.n as usize * self.len..];
        for (prior, &frozen) in priors.iter_mut().zip(&self.frozen) {
            *prior = if frozen { LLR_CLAMP } else { 0.0 };
        }
    }

    /// Starts a new frame from channel LLRs.
    pub fn reset(&mut self, llrs: &[f64]) -> Result<(), DecodeError> {
        if llrs.len() != self.len {
            return Err(DecodeError::LengthMismatch {
                got: llrs.len(),
                expected: self.len,
            });
        }
        self.clear();
        for (slot, &llr) in self.left.iter_mut().zip(llrs) {
            *slot = clamp_llr(llr);
        }
        Ok(())
    }

    /// Channel-side intrinsic override, for grafted connections. 1-based.
    pub fn set_intrinsic(&mut self, index1: usize, value: f64) {
        self.left[index1 - 1] = clamp_llr(value);
    }

    /// Message-side prior override; only unfrozen positions may be retuned.
    pub fn set_message_prior(&mut self, index1: usize, value: f64) {
        debug_assert!(!self.frozen[index1 - 1], "frozen priors are pinned");
        self.right[self.n as usize * self.len + index1 - 1] = clamp_llr(value);
    }

    /// Leftward belief emitted at a message position (prior excluded).
    pub fn message_left(&self, index1: usize) -> f64 {
        self.left[self.n as usize * self.len + index1 - 1]
    }

    /// Rightward belief emitted at a channel position (intrinsic excluded).
    pub fn observed_extrinsic(&self, index1: usize) -> f64 {
        self.right[index1 - 1]
    }

    /// Total beliefs at the message stage, index order.
    pub fn message_totals(&self) -> Vec<f64> {
        let row = self.n as usize * self.len;
        (0..self.len)
            .map(|k| self.left[row + k] + self.right[row + k])
            .collect()
    }

    /// Total beliefs at the channel stage, index order.
    pub fn observed_totals(&self) -> Vec<f64> {
        (0..self.len)
            .map(|k| self.left[k] + self.right[k])
            .collect()
    }

    pub fn hard_message(&self) -> BitVector {
        let bits = self.message_totals().iter().map(|&t| hard_bit(t)).collect();
        BitVector::new(bits).expect("decisions are bits")
    }

    pub fn hard_observed(&self) -> BitVector {
        let bits = self
            .observed_totals()
            .iter()
            .map(|&t| hard_bit(t))
            .collect();
        BitVector::new(bits).expect("decisions are bits")
    }

    /// Early-stopping test: the re-encoded message matches the
    /// channel-side hard decisions.
    pub fn is_consistent(&self) -> bool {
        let codeword = encode(&self.hard_message(), self.n).expect("length is 2^n");
        codeword == self.hard_observed()
    }

    /// One flooding iteration: channel-to-message sweep, then back.
    pub fn iterate(&mut self) {
        self.pass_right_to_left();
        self.pass_left_to_right();
    }

    /// Propagates beliefs from the channel stage to the message stage,
    /// one transition at a time so fresh values feed the next stage.
    pub fn pass_right_to_left(&mut self) {
        let len = self.len;
        for t in 1..=self.n as usize {
            let stride = 1usize << (self.n as usize - t);
            let (tail, head) = self.left.split_at_mut(t * len);
            let prev = &tail[(t - 1) * len..];
            let cur = &mut head[..len];
            let right_row = &self.right[t * len..(t + 1) * len];
            let mut base = 0;
            while base < len {
                for upper in base..base + stride {
                    let lower = upper + stride;
                    let lu = prev[upper];
                    let ll = prev[lower];
                    let ru = right_row[upper];
                    let rl = right_row[lower];
                    cur[upper] = boxplus(lu, ll + rl);
                    cur[lower] = clamp_llr(boxplus(lu, ru) + ll);
                }
                base += 2 * stride;
            }
        }
    }

    /// Propagates beliefs from the message stage back to the channel
    /// stage.
    pub fn pass_left_to_right(&mut self) {
        let len = self.len;
        for t in (1..=self.n as usize).rev() {
            let stride = 1usize << (self.n as usize - t);
            let (tail, head) = self.right.split_at_mut(t * len);
            let cur = &mut tail[(t - 1) * len..];
            let next = &head[..len];
            let left_row = &self.left[(t - 1) * len..t * len];
            let mut base = 0;
            while base < len {
                for upper in base..base + stride {
                    let lower = upper + stride;
                    let lu = left_row[upper];
                    let ll = left_row[lower];
                    let ru = next[upper];
                    let rl = next[lower];
                    cur[upper] = boxplus(ru, ll + rl);
                    cur[lower] = clamp_llr(boxplus(ru, lu) + rl);
                }
                base += 2 * stride;
            }
        }
    }
}

/// Decisions from a belief-propagation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpOutcome {
    /// Message-stage hard decisions, frozen zeros included.
    pub message: BitVector,
    /// Re-encoded codeword estimate.
    pub codeword: BitVector,
    /// Whether the early-stopping consistency test passed.
    pub converged: bool,
    /// Iterations actually run.
    pub iterations: u32,
}

/// Belief-propagation decoding of a single polar code. Runs flooding
/// iterations until the re-encoded hard decisions agree with the
/// channel-side hard decisions or the budget runs out.
pub fn bp_decode(
    llrs: &[f64],
    profile: &CodeProfile,
    max_iterations: u32,
) -> Result<BpOutcome, DecodeError> {
    if max_iterations == 0 {
        return Err(DecodeError::BadParameter(
            "max_iterations must be positive".into(),
        ));
    }
    let mut decoder = BpDecoder::new(profile);
    decoder.reset(llrs)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        decoder.iterate();
        iterations += 1;
        if decoder.is_consistent() {
            converged = true;
            break;
        }
    }
    let message = decoder.hard_message();
    let codeword = encode(&message, decoder.n)?;
    Ok(BpOutcome {
        message,
        codeword,
        converged,
        iterations,
    })
}

/// One edge of a connection map: the outer codeword position carries the
/// same bit as the inner message position. Both indices 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerLink {
    pub outer_position: usize,
    pub inner_position: usize,
}

/// Joint factor graph of an outer polar code grafted onto semipolarized
/// message positions of one or more inner polar codes.
///
/// The inner profiles are decoding profiles: linked positions must be
/// unfrozen there, since they carry outer bits rather than fixed zeros.
/// Every outer codeword position must be linked exactly once.
#[derive(Clone, Debug)]
pub struct ConcatenatedGraph {
    outer: CodeProfile,
    inners: Vec<CodeProfile>,
    links: Vec<Vec<InnerLink>>,
}

impl ConcatenatedGraph {
    pub fn new(
        outer: CodeProfile,
        inners: Vec<CodeProfile>,
        links: Vec<Vec<InnerLink>>,
    ) -> Result<Self, DecodeError> {
        if links.len() != inners.len() {
            return Err(DecodeError::BadConnection(format!(
                "{} link groups for {} inner codes",
                links.len(),
                inners.len()
            )));
        }
        let mut outer_used = vec![false; outer.block_len()];
        for (m, (inner, group)) in inners.iter().zip(&links).enumerate() {
            let mut inner_used = vec![false; inner.block_len()];
            for link in group {
                let p = link.outer_position;
                let h = link.inner_position;
                if p == 0 || p > outer.block_len() {
                    return Err(DecodeError::BadConnection(format!(
                        "outer position {p} out of range"
                    )));
                }
                if outer_used[p - 1] {
                    return Err(DecodeError::BadConnection(format!(
                        "outer position {p} linked twice"
                    )));
                }
                outer_used[p - 1] = true;
                if h == 0 || h > inner.block_len() {
                    return Err(DecodeError::BadConnection(format!(
                        "inner code {} position {h} out of range",
                        m + 1
                    )));
                }
                if inner_used[h - 1] {
                    return Err(DecodeError::BadConnection(format!(
                        "inner code {} position {h} linked twice",
                        m + 1
                    )));
                }
                inner_used[h - 1] = true;
                if inner.is_frozen(h) {
                    return Err(DecodeError::BadConnection(format!(
                        "inner code {} position {h} is frozen",
                        m + 1
                    )));
                }
            }
        }
        if let Some(p) = outer_used.iter().position(|&used| !used) {
            return Err(DecodeError::BadConnection(format!(
                "outer position {} is not linked to any inner code",
                p + 1
            )));
        }
        Ok(Self {
            outer,
            inners,
            links,
        })
    }

    pub fn outer(&self) -> &CodeProfile {
        &self.outer
    }

    pub fn inners(&self) -> &[CodeProfile] {
        &self.inners
    }

    pub fn links(&self) -> &[Vec<InnerLink>] {
        &self.links
    }
}

/// Decisions from a joint inner/outer belief-propagation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatenatedBpOutcome {
    /// Outer message-stage hard decisions.
    pub outer_message: BitVector,
    /// Per-inner message-stage hard decisions.
    pub inner_messages: Vec<BitVector>,
    /// Per-inner re-encoded codeword estimates.
    pub inner_codewords: Vec<BitVector>,
    /// Whether every code passed its consistency test.
    pub converged: bool,
    /// Global iterations actually run.
    pub iterations: u32,
}

/// Joint BP over inner codes and a grafted outer code.
///
/// Each global iteration sweeps inner channel-to-message, grafts the
/// leftward inner beliefs as outer channel intrinsics, sweeps the outer
/// code both ways, installs the outer extrinsics as inner message priors,
/// and finishes with the inner message-to-channel sweep. Early stopping
/// requires every code in the ensemble to pass its re-encoding check. The
/// outer code has no channel observations of its own.
pub fn bp_decode_concatenated(
    graph: &ConcatenatedGraph,
    block_llrs: &[Vec<f64>],
    max_iterations: u32,
) -> Result<ConcatenatedBpOutcome, DecodeError> {
    if max_iterations == 0 {
        return Err(DecodeError::BadParameter(
            "max_iterations must be positive".into(),
        ));
    }
    if block_llrs.len() != graph.inners().len() {
        return Err(DecodeError::BlockCountMismatch {
            got: block_llrs.len(),
            expected: graph.inners().len(),
        });
    }
    let mut inner_decoders: Vec<BpDecoder> = graph.inners().iter().map(BpDecoder::new).collect();
    for (decoder, llrs) in inner_decoders.iter_mut().zip(block_llrs) {
        decoder.reset(llrs)?;
    }
    let mut outer_decoder = BpDecoder::new(graph.outer());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        for decoder in &mut inner_decoders {
            decoder.pass_right_to_left();
        }
        for (decoder, group) in inner_decoders.iter().zip(graph.links()) {
            for link in group {
                outer_decoder.set_intrinsic(
                    link.outer_position,
                    decoder.message_left(link.inner_position),
                );
            }
        }
        outer_decoder.pass_right_to_left();
        outer_decoder.pass_left_to_right();
        for (decoder, group) in inner_decoders.iter_mut().zip(graph.links()) {
            for link in group {
                decoder.set_message_prior(
                    link.inner_position,
                    outer_decoder.observed_extrinsic(link.outer_position),
                );
            }
        }
        for decoder in &mut inner_decoders {
            decoder.pass_left_to_right();
        }
        iterations += 1;
        if outer_decoder.is_consistent() && inner_decoders.iter().all(BpDecoder::is_consistent) {
            converged = true;
            break;
        }
    }
    let inner_messages: Vec<BitVector> =
        inner_decoders.iter().map(BpDecoder::hard_message).collect();
    let inner_codewords = inner_messages
        .iter()
        .zip(graph.inners())
        .map(|(message, profile)| encode(message, profile.n()).expect("length is 2^n"))
        .collect();
    Ok(ConcatenatedBpOutcome {
        outer_message: outer_decoder.hard_message(),
        inner_messages,
        inner_codewords,
        converged,
        iterations,
    })
}

/// Empirical LLR histograms observed at selected message positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalHistogramSet {
    /// Message positions the histograms belong to, 1-based ascending.
    pub positions: Vec<usize>,
    /// One normalized histogram per position, over the shared grid.
    pub histograms: Vec<QuantizedDensity>,
    /// Frames accumulated into every histogram.
    pub sample_count: u64,
    /// BP iterations run before sampling the leftward messages.
    pub bp_iterations: u32,
}

/// Collects histograms of the leftward LLRs an inner code emits at
/// selected message positions after a fixed number of standalone BP
/// iterations under all-zero transmission. These densities seed the
/// nonstationary outer-code analysis.
#[allow(clippy::too_many_arguments)]
pub fn collect_empirical_llrs(
    profile: &CodeProfile,
    positions: &[usize],
    model: &ChannelModel,
    grid: &DensityGrid,
    bp_iterations: u32,
    frames: u64,
    seed: u64,
) -> Result<EmpiricalHistogramSet, DecodeError> {
    model.validate()?;
    if bp_iterations == 0 {
        return Err(DecodeError::BadParameter(
            "bp_iterations must be positive".into(),
        ));
    }
    if frames == 0 {
        return Err(DecodeError::BadParameter("frames must be positive".into()));
    }
    if positions.is_empty() {
        return Err(DecodeError::BadParameter("no positions to observe".into()));
    }
    for pair in positions.windows(2) {
        if pair[0] >= pair[1] {
            return Err(DecodeError::BadParameter(
                "positions must be strictly ascending".into(),
            ));
        }
    }
    for &p in positions {
        if p == 0 || p > profile.block_len() {
            return Err(DecodeError::BadParameter(format!(
                "position {p} out of range"
            )));
        }
        if profile.is_frozen(p) {
            return Err(DecodeError::BadParameter(format!(
                "position {p} is frozen and emits no information"
            )));
        }
    }
    let mut counts = vec![vec![0u64; grid.bins()]; positions.len()];
    let mut decoder = BpDecoder::new(profile);
    let mut llrs = vec![0.0f64; profile.block_len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for frame in 0..frames {
        rng.set_stream(frame);
        rng.set_word_pos(0);
        for llr in &mut llrs {
            *llr = model.sample_llr_for_bit(0, &mut rng);
        }
        decoder.reset(&llrs)?;
        for _ in 0..bp_iterations {
            decoder.iterate();
        }
        for (slot, &p) in positions.iter().enumerate() {
            counts[slot][grid.bin_of(decoder.message_left(p))] += 1;
        }
    }
    let total = frames as f64;
    let histograms = counts
        .into_iter()
        .map(|column| {
            QuantizedDensity::new(
                *grid,
                column.into_iter().map(|c| c as f64 / total).collect(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmpiricalHistogramSet {
        positions: positions.to_vec(),
        histograms,
        sample_count: frames,
        bp_iterations,
    })
}
