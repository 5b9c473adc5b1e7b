//! Fixed-length binary genomes.
//!
//! A [`BitMask`] encodes either a feature subset (length k) or an instance
//! subset (length n) as a dense bit vector, giving cheap popcount and
//! Hamming distance for the engines.

use std::fmt;

use rand::Rng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense fixed-length bit vector. Unused tail bits of the last word are
/// always zero so popcount and equality can work word-wise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    len: usize,
    words: Vec<u64>,
}

impl BitMask {
    pub fn zeros(len: usize) -> Self {
        BitMask {
            len,
            words: vec![0u64; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut mask = BitMask::zeros(len);
        for i in 0..len {
            mask.set(i, true);
        }
        mask
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut mask = BitMask::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            mask.set(i, b);
        }
        mask
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut mask = BitMask::zeros(len);
        for &i in indices {
            mask.set(i, true);
        }
        mask
    }

    /// Parse a string of '0'/'1' characters, most significant position first.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut mask = BitMask::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => mask.set(i, true),
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "invalid bit character `{c}` in mask string"
                    )))
                }
            }
        }
        Ok(mask)
    }

    /// Draw each bit independently with probability `p`.
    pub fn random<R: Rng>(len: usize, p: f64, rng: &mut R) -> Self {
        let mut mask = BitMask::zeros(len);
        for i in 0..len {
            if rng.gen::<f64>() < p {
                mask.set(i, true);
            }
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i >> 6] |= 1u64 << (i & 63);
        } else {
            self.words[i >> 6] &= !(1u64 << (i & 63));
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.set(i, !self.get(i));
    }

    /// Number of set bits.
    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the two masks differ.
    pub fn hamming(&self, other: &BitMask) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::MaskLength {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Indices of set bits, ascending.
    pub fn ones_indices(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Indices where the two masks disagree, ascending. Lengths must match.
    pub fn diff_indices(&self, other: &BitMask) -> Result<Vec<usize>> {
        if self.len != other.len {
            return Err(Error::MaskLength {
                expected: self.len,
                got: other.len,
            });
        }
        Ok((0..self.len).filter(|&i| self.get(i) != other.get(i)).collect())
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMask({})", self.to_bitstring())
    }
}

impl fmt::Display for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for BitMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

struct BitMaskVisitor;

impl Visitor<'_> for BitMaskVisitor {
    type Value = BitMask;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a string of '0' and '1' characters")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<BitMask, E> {
        BitMask::from_bitstring(v).map_err(|e| E::custom(e.to_string()))
    }
}

impl<'de> Deserialize<'de> for BitMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        deserializer.deserialize_str(BitMaskVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn popcount_boundaries() {
        assert_eq!(BitMask::zeros(77).popcount(), 0);
        assert_eq!(BitMask::ones(77).popcount(), 77);
        assert_eq!(BitMask::from_bitstring("1011").unwrap().popcount(), 3);
    }

    #[test]
    fn hamming_boundaries() {
        let a = BitMask::from_bitstring("1100").unwrap();
        let b = BitMask::from_bitstring("0110").unwrap();
        assert_eq!(a.hamming(&a).unwrap(), 0);
        assert_eq!(a.hamming(&b).unwrap(), 2);
        let full = BitMask::ones(130);
        let none = BitMask::zeros(130);
        assert_eq!(full.hamming(&none).unwrap(), 130);
    }

    #[test]
    fn hamming_length_mismatch() {
        let a = BitMask::zeros(4);
        let b = BitMask::zeros(5);
        assert!(matches!(a.hamming(&b), Err(Error::MaskLength { .. })));
    }

    #[test]
    fn bitstring_round_trip() {
        let s = "10110010101";
        let mask = BitMask::from_bitstring(s).unwrap();
        assert_eq!(mask.to_bitstring(), s);
        assert_eq!(mask.ones_indices(), vec![0, 2, 3, 6, 8, 10]);
    }

    #[test]
    fn random_is_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(BitMask::random(100, 0.5, &mut r1), BitMask::random(100, 0.5, &mut r2));
    }

    #[test]
    fn serde_round_trip() {
        let mask = BitMask::from_bitstring("0101100").unwrap();
        let json = serde_json::to_string(&mask).unwrap();
        assert_eq!(json, "\"0101100\"");
        let back: BitMask = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mask);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn mask_strategy() -> impl Strategy<Value = BitMask> {
            proptest::collection::vec(any::<bool>(), 1..300).prop_map(|b| BitMask::from_bools(&b))
        }

        proptest! {
            #[test]
            fn hamming_to_zeros_is_popcount(mask in mask_strategy()) {
                let zeros = BitMask::zeros(mask.len());
                prop_assert_eq!(mask.hamming(&zeros).unwrap(), mask.popcount());
                prop_assert_eq!(mask.hamming(&mask).unwrap(), 0);
            }

            #[test]
            fn popcount_splits_across_complement(mask in mask_strategy()) {
                let mut complement = mask.clone();
                for i in 0..mask.len() {
                    complement.flip(i);
                }
                prop_assert_eq!(mask.popcount() + complement.popcount(), mask.len());
                prop_assert_eq!(mask.hamming(&complement).unwrap(), mask.len());
            }

            #[test]
            fn bitstring_round_trips(mask in mask_strategy()) {
                let back = BitMask::from_bitstring(&mask.to_bitstring()).unwrap();
                prop_assert_eq!(back, mask);
            }
        }
    }
}
