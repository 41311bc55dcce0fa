//! Binary vectors over GF(2).

use std::fmt;

use thiserror::Error;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum BitError {
    #[error("bit vector must be non-empty")]
    Empty,
    #[error("non-binary symbol {value} at position {index}")]
    NonBinary { index: usize, value: u8 },
    #[error("length mismatch: got {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// A non-empty vector of binary symbols in {0, 1}.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<u8>,
}

impl BitVector {
    /// Validates that `bits` is non-empty and strictly binary.
    pub fn new(bits: Vec<u8>) -> Result<Self, BitError> {
        if bits.is_empty() {
            return Err(BitError::Empty);
        }
        for (index, &value) in bits.iter().enumerate() {
            if value > 1 {
                return Err(BitError::NonBinary { index, value });
            }
        }
        Ok(Self { bits })
    }

    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "bit vector must be non-empty");
        Self {
            bits: vec![0u8; len],
        }
    }

    /// Builds a vector from a string of '0'/'1' characters. Test helper.
    pub fn from_str01(s: &str) -> Result<Self, BitError> {
        let bits = s
            .bytes()
            .map(|b| match b {
                b'0' => 0u8,
                b'1' => 1u8,
                other => other,
            })
            .collect();
        Self::new(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.bits
    }

    /// Bit at 1-based index.
    pub fn get(&self, index1: usize) -> u8 {
        self.bits[index1 - 1]
    }

    /// Sets the bit at 1-based index.
    pub fn set(&mut self, index1: usize, value: u8) {
        debug_assert!(value <= 1);
        self.bits[index1 - 1] = value;
    }

    /// 1-based indices of the nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a ^= b;
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u8> {
        self.bits.iter()
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
