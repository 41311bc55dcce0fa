//! GF(2) polar encoding primitives.
//!
//! The generator is the n-th Kronecker power of the 2x2 kernel
//! F = [1 0; 1 1], taken in natural index order: no bit-reversal
//! permutation is applied anywhere. Row i (1-based) of F^{(x)n} has a one
//! in column j exactly when the bit pattern of j-1 is a submask of i-1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitVector;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum PolarError {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("length mismatch: got {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("systematic encoding did not reach a fixed point")]
    NoFixedPoint,
}

/// A polar code's length, frozen/unfrozen sets, and reliability ordering.
///
/// All indices are 1-based. `unfrozen` is sorted ascending and equals the
/// first K entries of `reliability_order` as a set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeProfile {
    n: u32,
    block_len: usize,
    unfrozen: Vec<usize>,
    reliability_order: Vec<usize>,
}

impl CodeProfile {
    /// Builds a profile from a reliability order (most reliable first).
    ///
    /// The unfrozen set becomes the first `k` entries of `order`.
    pub fn from_reliability_order(n: u32, k: usize, order: Vec<usize>) -> Result<Self, PolarError> {
        let block_len = 1usize << n;
        if order.len() != block_len {
            return Err(PolarError::LengthMismatch {
                got: order.len(),
                expected: block_len,
            });
        }
        let mut seen = vec![false; block_len + 1];
        for &q in &order {
            if q == 0 || q > block_len || seen[q] {
                return Err(PolarError::InvalidProfile(format!(
                    "reliability order is not a permutation of 1..={block_len}"
                )));
            }
            seen[q] = true;
        }
        if k == 0 || k > block_len {
            return Err(PolarError::InvalidProfile(format!(
                "unfrozen size {k} out of range 1..={block_len}"
            )));
        }
        let mut unfrozen: Vec<usize> = order[..k].to_vec();
        unfrozen.sort_unstable();
        Ok(Self {
            n,
            block_len,
            unfrozen,
            reliability_order: order,
        })
    }

    /// Builds a profile from per-index error probabilities (smaller is more
    /// reliable). Ties break toward the lower index.
    pub fn from_error_metrics(n: u32, k: usize, error_prob: &[f64]) -> Result<Self, PolarError> {
        let block_len = 1usize << n;
        if error_prob.len() != block_len {
            return Err(PolarError::LengthMismatch {
                got: error_prob.len(),
                expected: block_len,
            });
        }
        let mut order: Vec<usize> = (1..=block_len).collect();
        order.sort_by(|&a, &b| {
            error_prob[a - 1]
                .partial_cmp(&error_prob[b - 1])
                .expect("error metrics must not be NaN")
                .then(a.cmp(&b))
        });
        Self::from_reliability_order(n, k, order)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Block length N = 2^n.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of unfrozen (information) positions.
    pub fn k(&self) -> usize {
        self.unfrozen.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.block_len as f64
    }

    /// Unfrozen indices, 1-based, sorted ascending.
    pub fn unfrozen(&self) -> &[usize] {
        &self.unfrozen
    }

    /// Frozen indices, 1-based, sorted ascending.
    pub fn frozen(&self) -> Vec<usize> {
        let mut mask = vec![true; self.block_len + 1];
        for &a in &self.unfrozen {
            mask[a] = false;
        }
        (1..=self.block_len).filter(|&i| mask[i]).collect()
    }

    /// Reliability order, most reliable first.
    pub fn reliability_order(&self) -> &[usize] {
        &self.reliability_order
    }

    pub fn is_frozen(&self, index1: usize) -> bool {
        self.unfrozen.binary_search(&index1).is_err()
    }

    /// Frozen mask indexed 0-based.
    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.block_len];
        for &a in &self.unfrozen {
            mask[a - 1] = false;
        }
        mask
    }

    /// Places information bits on the unfrozen positions (ascending index
    /// order) and zeros elsewhere.
    pub fn scatter_info(&self, info: &BitVector) -> Result<BitVector, PolarError> {
        if info.len() != self.k() {
            return Err(PolarError::LengthMismatch {
                got: info.len(),
                expected: self.k(),
            });
        }
        let mut u = BitVector::zeros(self.block_len);
        for (j, &pos) in self.unfrozen.iter().enumerate() {
            u.set(pos, info.as_slice()[j]);
        }
        Ok(u)
    }

    /// Reads the unfrozen positions of `u` in ascending index order.
    pub fn gather_info(&self, u: &BitVector) -> Result<BitVector, PolarError> {
        if u.len() != self.block_len {
            return Err(PolarError::LengthMismatch {
                got: u.len(),
                expected: self.block_len,
            });
        }
        let bits = self.unfrozen.iter().map(|&pos| u.get(pos)).collect();
        BitVector::new(bits).map_err(|_| PolarError::InvalidProfile("empty info".into()))
    }
}

/// A profile together with the systematic placement set B.
///
/// The systematic positions are fixed to B = A (the unfrozen set).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystematicProfile {
    base: CodeProfile,
}

impl SystematicProfile {
    pub fn new(base: CodeProfile) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &CodeProfile {
        &self.base
    }

    /// Systematic positions B = A, 1-based, sorted ascending.
    pub fn systematic_positions(&self) -> &[usize] {
        self.base.unfrozen()
    }
}

/// Row i (1-based) of F^{(x)n} by the Kronecker bit-product rule.
pub fn generator_row(i: usize, n: u32) -> Result<BitVector, PolarError> {
    let len = 1usize << n;
    if i == 0 || i > len {
        return Err(PolarError::IndexOutOfRange { index: i, max: len });
    }
    let row_mask = i - 1;
    let bits = (0..len)
        .map(|col| if col & !row_mask == 0 { 1u8 } else { 0u8 })
        .collect();
    Ok(BitVector::new(bits).expect("len > 0"))
}

/// Hamming weight of `generator_row(i, n)`, i.e. 2^popcount(i-1).
pub fn row_weight(i: usize, n: u32) -> Result<usize, PolarError> {
    let len = 1usize << n;
    if i == 0 || i > len {
        return Err(PolarError::IndexOutOfRange { index: i, max: len });
    }
    Ok(1usize << (i - 1).count_ones())
}

/// 1-based support of `generator_row(i, n)` without materializing the row.
pub fn row_support(i: usize, n: u32) -> Result<Vec<usize>, PolarError> {
    let len = 1usize << n;
    if i == 0 || i > len {
        return Err(PolarError::IndexOutOfRange { index: i, max: len });
    }
    let row_mask = i - 1;
    // Enumerate submasks of row_mask in increasing numeric order.
    let mut support: Vec<usize> = (0..len)
        .filter(|col| col & !row_mask == 0)
        .map(|col| col + 1)
        .collect();
    support.sort_unstable();
    Ok(support)
}

/// In-place butterfly transform computing x = u F^{(x)n}.
///
/// The stride-2^s stage XORs the upper index of each pair with the lower,
/// which realizes the zeta transform over superset bit patterns. Stage
/// order does not affect the result.
pub fn transform_in_place(bits: &mut [u8]) {
    let len = bits.len();
    debug_assert!(len.is_power_of_two());
    let mut stride = 1;
    while stride < len {
        let block = stride << 1;
        for start in (0..len).step_by(block) {
            for offset in 0..stride {
                bits[start + offset] ^= bits[start + offset + stride];
            }
        }
        stride = block;
    }
}

/// Non-systematic polar encoding x = u F^{(x)n} in O(N log N).
pub fn encode(u: &BitVector, n: u32) -> Result<BitVector, PolarError> {
    let len = 1usize << n;
    if u.len() != len {
        return Err(PolarError::LengthMismatch {
            got: u.len(),
            expected: len,
        });
    }
    let mut out = u.clone();
    transform_in_place(out.as_mut_slice());
    Ok(out)
}

/// Result of systematic encoding: the codeword and the message word that
/// generates it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystematicCodeword {
    /// Codeword x with x restricted to B equal to the information bits.
    pub codeword: BitVector,
    /// Message word u with u = 0 on the frozen set and x = uG.
    pub message: BitVector,
}

/// Systematic encoding by the double-encode fixed-point method.
///
/// Starting from x with x_B = info and zeros elsewhere, each pass computes
/// u = xG, zeros u on the frozen set, re-encodes, and restores x_B = info.
/// The error operator drops strictly in submask popcount per pass, so at
/// most n+1 passes are needed.
pub fn systematic_encode(
    info: &BitVector,
    profile: &SystematicProfile,
) -> Result<SystematicCodeword, PolarError> {
    let base = profile.base();
    let n = base.n();
    let block_len = base.block_len();
    if info.len() != base.k() {
        return Err(PolarError::LengthMismatch {
            got: info.len(),
            expected: base.k(),
        });
    }
    let positions = profile.systematic_positions();
    let frozen_mask = base.frozen_mask();

    let mut x = BitVector::zeros(block_len);
    for (j, &pos) in positions.iter().enumerate() {
        x.set(pos, info.as_slice()[j]);
    }

    for _pass in 0..=(n + 1) {
        let mut u = encode(&x, n)?;
        for (idx, frozen) in frozen_mask.iter().enumerate() {
            if *frozen {
                u.as_mut_slice()[idx] = 0;
            }
        }
        let re = encode(&u, n)?;
        let mut fixed = true;
        for (j, &pos) in positions.iter().enumerate() {
            if re.get(pos) != info.as_slice()[j] {
                fixed = false;
                break;
            }
        }
        x = re;
        for (j, &pos) in positions.iter().enumerate() {
            x.set(pos, info.as_slice()[j]);
        }
        if fixed {
            return Ok(SystematicCodeword {
                codeword: x,
                message: u,
            });
        }
    }
    Err(PolarError::NoFixedPoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Independent oracle: row i of F^{(x)n} via the block recursion
    /// G^{n+1} = [G^n 0; G^n G^n].
    fn generator_row_block_recursion(i: usize, n: u32) -> Vec<u8> {
        if n == 0 {
            return vec![1u8];
        }
        let half = 1usize << (n - 1);
        if i <= half {
            let mut row = generator_row_block_recursion(i, n - 1);
            row.extend(std::iter::repeat_n(0u8, half));
            row
        } else {
            let mut row = generator_row_block_recursion(i - half, n - 1);
            let copy = row.clone();
            row.extend(copy);
            row
        }
    }

    fn bec_half_profile_n2() -> SystematicProfile {
        // BEC(0.5) top-2 of N=4: Z = {0.9375, 0.5625, 0.4375, 0.0625}.
        let profile = CodeProfile::from_reliability_order(2, 2, vec![4, 3, 2, 1]).unwrap();
        SystematicProfile::new(profile)
    }

    #[test]
    fn generator_row_examples() {
        assert_eq!(generator_row(8, 3).unwrap().to_string(), "11111111");
        assert_eq!(generator_row(2, 3).unwrap().to_string(), "11000000");
        assert_eq!(generator_row(6, 3).unwrap().to_string(), "11001100");
        assert!(matches!(
            generator_row(9, 3),
            Err(PolarError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            generator_row(0, 3),
            Err(PolarError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn generator_row_matches_block_recursion_up_to_n10() {
        for n in 0..=10u32 {
            for i in 1..=(1usize << n) {
                let direct = generator_row(i, n).unwrap();
                let oracle = generator_row_block_recursion(i, n);
                assert_eq!(direct.as_slice(), &oracle[..], "row {i}, n {n}");
            }
        }
    }

    #[test]
    fn row_weight_examples_and_consistency() {
        assert_eq!(row_weight(1, 3).unwrap(), 1);
        assert_eq!(row_weight(8, 3).unwrap(), 8);
        assert_eq!(row_weight(6, 3).unwrap(), 4);
        for n in 0..=10u32 {
            for i in 1..=(1usize << n) {
                assert_eq!(
                    row_weight(i, n).unwrap(),
                    generator_row(i, n).unwrap().weight()
                );
                assert_eq!(
                    row_support(i, n).unwrap(),
                    generator_row(i, n).unwrap().support()
                );
            }
        }
    }

    #[test]
    fn encode_selects_last_row() {
        let u = BitVector::from_str01("00000001").unwrap();
        assert_eq!(encode(&u, 3).unwrap().to_string(), "11111111");
        let zero = BitVector::zeros(8);
        assert_eq!(encode(&zero, 3).unwrap(), zero);
    }

    #[test]
    fn encode_is_involutive() {
        let mut rng = StdRng::seed_from_u64(17);
        for n in 1..=9u32 {
            let len = 1usize << n;
            let bits: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
            let u = BitVector::new(bits).unwrap();
            let once = encode(&u, n).unwrap();
            let twice = encode(&once, n).unwrap();
            assert_eq!(twice, u, "n = {n}");
        }
    }

    #[test]
    fn encode_matches_row_combination() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 4u32;
            let len = 1usize << n;
            let bits: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
            let u = BitVector::new(bits.clone()).unwrap();
            let mut expect = vec![0u8; len];
            for (idx, &b) in bits.iter().enumerate() {
                if b == 1 {
                    let row = generator_row(idx + 1, n).unwrap();
                    for (e, r) in expect.iter_mut().zip(row.iter()) {
                        *e ^= r;
                    }
                }
            }
            assert_eq!(encode(&u, n).unwrap().as_slice(), &expect[..]);
        }
    }

    #[test]
    fn systematic_zero_maps_to_zero() {
        let profile = bec_half_profile_n2();
        let info = BitVector::zeros(2);
        let out = systematic_encode(&info, &profile).unwrap();
        assert_eq!(out.codeword, BitVector::zeros(4));
        assert_eq!(out.message, BitVector::zeros(4));
    }

    #[test]
    fn systematic_hand_solved_n4() {
        // A = B = {2, 4}, info = (1, 1): solving the 2x2 GF(2) system gives
        // u = (0, 0, 0, 1) and x = 1111.
        let profile = bec_half_profile_n2();
        let info = BitVector::from_str01("11").unwrap();
        let out = systematic_encode(&info, &profile).unwrap();
        assert_eq!(out.codeword.to_string(), "1111");
        assert_eq!(out.message.to_string(), "0001");
    }

    #[test]
    fn systematic_consistency_random_profiles() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..40 {
            let n = rng.gen_range(1..=6u32);
            let len = 1usize << n;
            let k = rng.gen_range(1..=len);
            let mut order: Vec<usize> = (1..=len).collect();
            for i in (1..len).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let profile =
                SystematicProfile::new(CodeProfile::from_reliability_order(n, k, order).unwrap());
            let info_bits: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
            let info = BitVector::new(info_bits.clone()).unwrap();
            let out = systematic_encode(&info, &profile).unwrap();
            // Codeword carries the info verbatim on B.
            for (j, &pos) in profile.systematic_positions().iter().enumerate() {
                assert_eq!(out.codeword.get(pos), info_bits[j]);
            }
            // Message word is zero on the frozen set and re-encodes to x.
            for &f in &profile.base().frozen() {
                assert_eq!(out.message.get(f), 0);
            }
            assert_eq!(encode(&out.message, n).unwrap(), out.codeword);
        }
    }

    #[test]
    fn profile_invariants() {
        let p = CodeProfile::from_reliability_order(3, 4, vec![8, 7, 6, 4, 5, 3, 2, 1]).unwrap();
        assert_eq!(p.unfrozen(), &[4, 6, 7, 8]);
        assert_eq!(p.frozen(), vec![1, 2, 3, 5]);
        assert_eq!(p.block_len(), 8);
        assert!(p.is_frozen(5));
        assert!(!p.is_frozen(4));
        // Not a permutation.
        assert!(CodeProfile::from_reliability_order(2, 2, vec![1, 1, 2, 3]).is_err());
        // Ties break toward the lower index.
        let metrics = [0.5, 0.25, 0.25, 0.1];
        let p = CodeProfile::from_error_metrics(2, 2, &metrics).unwrap();
        assert_eq!(p.reliability_order(), &[4, 2, 3, 1]);
        assert_eq!(p.unfrozen(), &[2, 4]);
    }
}
