//! Concatenated code architectures.
//!
//! Two assemblies are provided. An *augmented* code grafts a small outer
//! polar code onto the semipolarized bit-channels of one inner polar code,
//! protecting positions that are neither reliably good nor hopeless. A
//! *local-global* code splits a systematic outer codeword across several
//! inner codes, so each block decodes its own payload locally while a
//! global pass exploits the outer constraints across blocks.

use thiserror::Error;

use crate::bits::BitVector;
use crate::decode::{bp_decode, bp_decode_concatenated, ConcatenatedGraph, DecodeError, InnerLink};
use crate::polar::{encode, systematic_encode, CodeProfile, PolarError, SystematicProfile};

#[derive(Debug, Error, PartialEq)]
pub enum ArchError {
    #[error("{what}: got {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid architecture: {0}")]
    Invalid(String),
    #[error("block index {index} out of range 1..={max}")]
    BlockOutOfRange { index: usize, max: usize },
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Pairings of outer codeword positions with inner message positions,
/// grouped per inner code.
///
/// Within each group both coordinates are strictly ascending, so the map
/// respects natural ordering on every subset it connects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionMap {
    groups: Vec<Vec<InnerLink>>,
}

impl ConnectionMap {
    pub fn new(groups: Vec<Vec<InnerLink>>) -> Result<Self, ArchError> {
        for (m, group) in groups.iter().enumerate() {
            for pair in group.windows(2) {
                if pair[0].outer_position >= pair[1].outer_position
                    || pair[0].inner_position >= pair[1].inner_position
                {
                    return Err(ArchError::Invalid(format!(
                        "connection group {} is not order-preserving",
                        m + 1
                    )));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<InnerLink>] {
        &self.groups
    }

    /// Finds the (inner code, inner position) pair carrying an outer
    /// codeword position, if any.
    pub fn locate(&self, outer_position: usize) -> Option<(usize, usize)> {
        for (m, group) in self.groups.iter().enumerate() {
            for link in group {
                if link.outer_position == outer_position {
                    return Some((m + 1, link.inner_position));
                }
            }
        }
        None
    }
}

/// The `count` next-best positions after the top `k_info`, in the
/// profile's reliability order. Returned ascending.
pub fn select_semipolarized(
    inner: &CodeProfile,
    k_info: usize,
    count: usize,
) -> Result<Vec<usize>, ArchError> {
    if k_info + count > inner.block_len() {
        return Err(ArchError::Invalid(format!(
            "{k_info} info + {count} semipolarized positions exceed block length {}",
            inner.block_len()
        )));
    }
    let mut picked: Vec<usize> = inner.reliability_order()[k_info..k_info + count].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Pairs the i-th listed outer position with the i-th smallest
/// semipolarized index.
pub fn natural_connection(
    outer_positions: &[usize],
    semipolarized: &[usize],
) -> Result<Vec<InnerLink>, ArchError> {
    if outer_positions.len() != semipolarized.len() {
        return Err(ArchError::LengthMismatch {
            what: "connection sides",
            got: outer_positions.len(),
            expected: semipolarized.len(),
        });
    }
    let mut inner_sorted = semipolarized.to_vec();
    inner_sorted.sort_unstable();
    Ok(outer_positions
        .iter()
        .zip(inner_sorted)
        .map(|(&outer_position, inner_position)| InnerLink {
            outer_position,
            inner_position,
        })
        .collect())
}

/// Assignment of outer codeword positions to inner codes: which carry
/// systematic (information) bits and which carry parity, per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterAssignment {
    /// Per inner code: outer systematic positions it hosts, ascending.
    pub info_positions: Vec<Vec<usize>>,
    /// Per inner code: outer parity positions it hosts, ascending.
    pub parity_positions: Vec<Vec<usize>>,
}

impl OuterAssignment {
    /// All outer positions hosted by inner code `m` (1-based), ascending.
    pub fn hosted(&self, m: usize) -> Vec<usize> {
        let mut all = self.info_positions[m - 1].clone();
        all.extend_from_slice(&self.parity_positions[m - 1]);
        all.sort_unstable();
        all
    }
}

/// Two-block crossing split of a rate-1/2 systematic outer code.
///
/// The systematic positions are halved in natural order: the first half
/// rides on inner code 2 and the second half on inner code 1, while the
/// parity positions go the opposite way. Crossing the halves keeps each
/// inner block's hosted set contiguous in reliability terms, which is
/// what makes small designed swaps stay within one block.
pub fn example1_connection(
    outer: &SystematicProfile,
    inner_semipolarized: &[Vec<usize>],
) -> Result<(OuterAssignment, ConnectionMap), ArchError> {
    if inner_semipolarized.len() != 2 {
        return Err(ArchError::Invalid(format!(
            "the crossing split is defined for 2 inner codes, got {}",
            inner_semipolarized.len()
        )));
    }
    let base = outer.base();
    let n0 = base.block_len();
    let info = outer.systematic_positions();
    if 2 * info.len() != n0 {
        return Err(ArchError::Invalid(format!(
            "the crossing split needs a rate-1/2 outer code, got {}/{n0}",
            info.len()
        )));
    }
    let parity = base.frozen();
    let half = info.len() / 2;
    if 2 * half != info.len() || inner_semipolarized.iter().any(|s| s.len() != n0 / 2) {
        return Err(ArchError::Invalid(
            "outer positions do not split evenly across the two blocks".into(),
        ));
    }
    let assignment = OuterAssignment {
        info_positions: vec![info[half..].to_vec(), info[..half].to_vec()],
        parity_positions: vec![parity[..half].to_vec(), parity[half..].to_vec()],
    };
    let groups = (1..=2)
        .map(|m| natural_connection(&assignment.hosted(m), &inner_semipolarized[m - 1]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((assignment, ConnectionMap::new(groups)?))
}

/// An outer polar code grafted onto the semipolarized bit-channels of a
/// single inner polar code.
#[derive(Clone, Debug)]
pub struct AugmentedCode {
    outer: CodeProfile,
    inner_decode: CodeProfile,
    info_positions: Vec<usize>,
    semipolarized: Vec<usize>,
    map: ConnectionMap,
    graph: ConcatenatedGraph,
}

impl AugmentedCode {
    /// Assembles from an outer profile, an inner reliability carrier, and
    /// the inner information count. The top `k1` inner positions carry
    /// fresh information; the next N_0 carry the outer codeword.
    pub fn assemble(
        outer: CodeProfile,
        inner_order: &CodeProfile,
        k1: usize,
    ) -> Result<Self, ArchError> {
        let n0 = outer.block_len();
        let semipolarized = select_semipolarized(inner_order, k1, n0)?;
        let mut info_positions: Vec<usize> = inner_order.reliability_order()[..k1].to_vec();
        info_positions.sort_unstable();
        let inner_decode = CodeProfile::from_reliability_order(
            inner_order.n(),
            k1 + n0,
            inner_order.reliability_order().to_vec(),
        )?;
        let outer_positions: Vec<usize> = (1..=n0).collect();
        let map = ConnectionMap::new(vec![natural_connection(&outer_positions, &semipolarized)?])?;
        let graph = ConcatenatedGraph::new(
            outer.clone(),
            vec![inner_decode.clone()],
            map.groups().to_vec(),
        )?;
        Ok(Self {
            outer,
            inner_decode,
            info_positions,
            semipolarized,
            map,
            graph,
        })
    }

    pub fn outer(&self) -> &CodeProfile {
        &self.outer
    }

    /// Inner profile as the decoder sees it: info and semipolarized
    /// positions unfrozen.
    pub fn inner_decode_profile(&self) -> &CodeProfile {
        &self.inner_decode
    }

    /// Inner positions carrying fresh information, ascending.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Inner positions carrying the outer codeword, ascending.
    pub fn semipolarized(&self) -> &[usize] {
        &self.semipolarized
    }

    pub fn map(&self) -> &ConnectionMap {
        &self.map
    }

    pub fn block_len(&self) -> usize {
        self.inner_decode.block_len()
    }

    pub fn outer_info_len(&self) -> usize {
        self.outer.k()
    }

    pub fn inner_info_len(&self) -> usize {
        self.info_positions.len()
    }

    /// Overall rate (K_0 + K_1) / N_1.
    pub fn rate(&self) -> f64 {
        (self.outer.k() + self.info_positions.len()) as f64 / self.block_len() as f64
    }

    /// Encodes outer information plus inner information into one inner
    /// codeword.
    pub fn encode(
        &self,
        outer_info: &BitVector,
        inner_info: &BitVector,
    ) -> Result<BitVector, ArchError> {
        if outer_info.len() != self.outer.k() {
            return Err(ArchError::LengthMismatch {
                what: "outer information",
                got: outer_info.len(),
                expected: self.outer.k(),
            });
        }
        if inner_info.len() != self.info_positions.len() {
            return Err(ArchError::LengthMismatch {
                what: "inner information",
                got: inner_info.len(),
                expected: self.info_positions.len(),
            });
        }
        let outer_u = self.outer.scatter_info(outer_info)?;
        let outer_codeword = encode(&outer_u, self.outer.n())?;
        let mut inner_u = BitVector::zeros(self.block_len());
        for link in &self.map.groups()[0] {
            inner_u.set(link.inner_position, outer_codeword.get(link.outer_position));
        }
        for (j, &pos) in self.info_positions.iter().enumerate() {
            inner_u.set(pos, inner_info.as_slice()[j]);
        }
        Ok(encode(&inner_u, self.inner_decode.n())?)
    }

    /// Joint BP decoding; returns both information estimates.
    pub fn decode_global(
        &self,
        llrs: &[f64],
        max_iterations: u32,
    ) -> Result<AugmentedDecision, ArchError> {
        let outcome = bp_decode_concatenated(
            &self.graph,
            std::slice::from_ref(&llrs.to_vec()),
            max_iterations,
        )?;
        let outer_info = self.outer.gather_info(&outcome.outer_message)?;
        let inner_bits = self
            .info_positions
            .iter()
            .map(|&pos| outcome.inner_messages[0].get(pos))
            .collect();
        let inner_info = BitVector::new(inner_bits).expect("decisions are bits");
        Ok(AugmentedDecision {
            outer_info,
            inner_info,
            converged: outcome.converged,
            iterations: outcome.iterations,
        })
    }
}

/// Information estimates from augmented global decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedDecision {
    pub outer_info: BitVector,
    pub inner_info: BitVector,
    pub converged: bool,
    pub iterations: u32,
}

/// A systematic outer code spread across M equal-length inner polar
/// codes, decodable per block or jointly.
#[derive(Clone, Debug)]
pub struct LocalGlobalCode {
    outer: SystematicProfile,
    inner_decodes: Vec<CodeProfile>,
    info_positions: Vec<Vec<usize>>,
    semipolarized: Vec<Vec<usize>>,
    assignment: OuterAssignment,
    map: ConnectionMap,
    graph: ConcatenatedGraph,
}

impl LocalGlobalCode {
    /// Assembles from a systematic outer profile, a shared inner
    /// reliability carrier, and per-block local information counts.
    /// Currently limited to the two-block crossing split.
    pub fn assemble(
        outer: SystematicProfile,
        inner_order: &CodeProfile,
        local_info_counts: &[usize],
    ) -> Result<Self, ArchError> {
        let blocks = local_info_counts.len();
        if blocks != 2 {
            return Err(ArchError::Invalid(format!(
                "local-global assembly supports exactly 2 inner codes, got {blocks}"
            )));
        }
        let n0 = outer.base().block_len();
        if !n0.is_multiple_of(blocks) {
            return Err(ArchError::Invalid(format!(
                "outer length {n0} does not divide across {blocks} blocks"
            )));
        }
        let hosted = n0 / blocks;
        let mut inner_decodes = Vec::with_capacity(blocks);
        let mut info_positions = Vec::with_capacity(blocks);
        let mut semipolarized = Vec::with_capacity(blocks);
        for &k_b in local_info_counts {
            semipolarized.push(select_semipolarized(inner_order, k_b, hosted)?);
            let mut info: Vec<usize> = inner_order.reliability_order()[..k_b].to_vec();
            info.sort_unstable();
            info_positions.push(info);
            inner_decodes.push(CodeProfile::from_reliability_order(
                inner_order.n(),
                k_b + hosted,
                inner_order.reliability_order().to_vec(),
            )?);
        }
        let (assignment, map) = example1_connection(&outer, &semipolarized)?;
        let graph = ConcatenatedGraph::new(
            outer.base().clone(),
            inner_decodes.clone(),
            map.groups().to_vec(),
        )?;
        Ok(Self {
            outer,
            inner_decodes,
            info_positions,
            semipolarized,
            assignment,
            map,
            graph,
        })
    }

    pub fn blocks(&self) -> usize {
        self.inner_decodes.len()
    }

    pub fn outer(&self) -> &SystematicProfile {
        &self.outer
    }

    pub fn inner_decode_profile(&self, m: usize) -> &CodeProfile {
        &self.inner_decodes[m - 1]
    }

    pub fn info_positions(&self, m: usize) -> &[usize] {
        &self.info_positions[m - 1]
    }

    pub fn semipolarized(&self, m: usize) -> &[usize] {
        &self.semipolarized[m - 1]
    }

    pub fn assignment(&self) -> &OuterAssignment {
        &self.assignment
    }

    pub fn map(&self) -> &ConnectionMap {
        &self.map
    }

    pub fn block_len(&self) -> usize {
        self.inner_decodes[0].block_len()
    }

    pub fn global_info_len(&self) -> usize {
        self.outer.base().k()
    }

    pub fn local_info_len(&self, m: usize) -> usize {
        self.info_positions[m - 1].len()
    }

    /// Overall rate (K_a + sum K_b) / (M N).
    pub fn rate(&self) -> f64 {
        let info: usize =
            self.global_info_len() + self.info_positions.iter().map(Vec::len).sum::<usize>();
        info as f64 / (self.blocks() * self.block_len()) as f64
    }

    /// Encodes global plus per-block local information into M inner
    /// codewords.
    pub fn encode(
        &self,
        global_info: &BitVector,
        local_infos: &[BitVector],
    ) -> Result<Vec<BitVector>, ArchError> {
        if global_info.len() != self.global_info_len() {
            return Err(ArchError::LengthMismatch {
                what: "global information",
                got: global_info.len(),
                expected: self.global_info_len(),
            });
        }
        if local_infos.len() != self.blocks() {
            return Err(ArchError::LengthMismatch {
                what: "local information blocks",
                got: local_infos.len(),
                expected: self.blocks(),
            });
        }
        let systematic = systematic_encode(global_info, &self.outer)?;
        let mut codewords = Vec::with_capacity(self.blocks());
        for (m, local) in local_infos.iter().enumerate() {
            if local.len() != self.info_positions[m].len() {
                return Err(ArchError::LengthMismatch {
                    what: "local information",
                    got: local.len(),
                    expected: self.info_positions[m].len(),
                });
            }
            let mut inner_u = BitVector::zeros(self.block_len());
            for link in &self.map.groups()[m] {
                inner_u.set(
                    link.inner_position,
                    systematic.codeword.get(link.outer_position),
                );
            }
            for (j, &pos) in self.info_positions[m].iter().enumerate() {
                inner_u.set(pos, local.as_slice()[j]);
            }
            codewords.push(encode(&inner_u, self.inner_decodes[m].n())?);
        }
        Ok(codewords)
    }

    /// Standalone BP on one inner block. The hosted outer parity
    /// positions decode as unknowns and are discarded; the returned
    /// global part covers only this block's systematic outer positions.
    pub fn decode_local(
        &self,
        m: usize,
        llrs: &[f64],
        max_iterations: u32,
    ) -> Result<LocalDecision, ArchError> {
        if m == 0 || m > self.blocks() {
            return Err(ArchError::BlockOutOfRange {
                index: m,
                max: self.blocks(),
            });
        }
        let outcome = bp_decode(llrs, &self.inner_decodes[m - 1], max_iterations)?;
        let local_bits = self.info_positions[m - 1]
            .iter()
            .map(|&pos| outcome.message.get(pos))
            .collect();
        let global_bits = self.map.groups()[m - 1]
            .iter()
            .filter(|link| self.assignment.info_positions[m - 1].contains(&link.outer_position))
            .map(|link| outcome.message.get(link.inner_position))
            .collect();
        Ok(LocalDecision {
            local_info: BitVector::new(local_bits).expect("decisions are bits"),
            global_part: BitVector::new(global_bits).expect("decisions are bits"),
            converged: outcome.converged,
            iterations: outcome.iterations,
        })
    }

    /// Joint BP across all blocks and the outer code.
    pub fn decode_global(
        &self,
        block_llrs: &[Vec<f64>],
        max_iterations: u32,
    ) -> Result<LocalGlobalDecision, ArchError> {
        let outcome = bp_decode_concatenated(&self.graph, block_llrs, max_iterations)?;
        let outer_codeword = encode(&outcome.outer_message, self.outer.base().n())?;
        let global_bits = self
            .outer
            .systematic_positions()
            .iter()
            .map(|&pos| outer_codeword.get(pos))
            .collect();
        let local_infos = self
            .info_positions
            .iter()
            .enumerate()
            .map(|(m, positions)| {
                let bits = positions
                    .iter()
                    .map(|&pos| outcome.inner_messages[m].get(pos))
                    .collect();
                BitVector::new(bits).expect("decisions are bits")
            })
            .collect();
        Ok(LocalGlobalDecision {
            global_info: BitVector::new(global_bits).expect("decisions are bits"),
            local_infos,
            converged: outcome.converged,
            iterations: outcome.iterations,
        })
    }
}

/// Information estimates from decoding one inner block on its own.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecision {
    /// This block's local information bits.
    pub local_info: BitVector,
    /// The systematic outer bits hosted by this block, ascending by outer
    /// position.
    pub global_part: BitVector,
    pub converged: bool,
    pub iterations: u32,
}

/// Information estimates from joint decoding of all blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalGlobalDecision {
    pub global_info: BitVector,
    pub local_infos: Vec<BitVector>,
    pub converged: bool,
    pub iterations: u32,
}
