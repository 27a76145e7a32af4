//! Finite Cantor addresses with an implicit all-zero tail.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{LaaksoError, Result};
use crate::rational::{pow3, Rational};

/// Bit `i` (1-based) chooses between the sub-cells `K_{a0}` and `K_{a1}`.
///
/// Two addresses are equal when they agree after zero-padding to a common
/// depth, so `"10"` and `"1"` name the same Cantor point.
#[derive(Clone, Default)]
pub struct CantorAddress {
    bits: Vec<bool>,
}

impl CantorAddress {
    pub fn new(bits: Vec<bool>) -> Self {
        CantorAddress { bits }
    }

    pub fn zeros(depth: usize) -> Self {
        CantorAddress {
            bits: vec![false; depth],
        }
    }

    /// Address whose `i`-th bit (from the most significant) is bit `depth - i` of `code`.
    pub fn from_code(code: u64, depth: usize) -> Self {
        let bits = (0..depth)
            .map(|i| (code >> (depth - 1 - i)) & 1 == 1)
            .collect();
        CantorAddress { bits }
    }

    /// Inverse of [`from_code`](Self::from_code); bits beyond `depth` must be zero.
    pub fn code(&self, depth: usize) -> Option<u64> {
        if self.bits.iter().skip(depth).any(|&b| b) || depth > 63 {
            return None;
        }
        let mut c = 0u64;
        for level in 1..=depth {
            c = (c << 1) | u64::from(self.bit(level as u32));
        }
        Some(c)
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(LaaksoError::Parse(format!(
                    "address must be a 0/1 string, got {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(CantorAddress::new)
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    /// Depth after dropping trailing zeros.
    pub fn significant_depth(&self) -> usize {
        self.bits.iter().rposition(|&b| b).map_or(0, |i| i + 1)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bit at 1-based `level`; zero beyond the stored depth.
    pub fn bit(&self, level: u32) -> bool {
        level >= 1 && self.bits.get(level as usize - 1).copied().unwrap_or(false)
    }

    pub fn with_bit(&self, level: u32, value: bool) -> Self {
        assert!(level >= 1, "levels are 1-based");
        let mut bits = self.bits.clone();
        let idx = level as usize - 1;
        if idx >= bits.len() {
            if !value {
                return CantorAddress { bits };
            }
            bits.resize(idx + 1, false);
        }
        bits[idx] = value;
        CantorAddress { bits }
    }

    /// Toggles bit `level`, i.e. the effect of one jump through a level-`level` wormhole.
    pub fn flipped(&self, level: u32) -> Self {
        self.with_bit(level, !self.bit(level))
    }

    pub fn flipped_all(&self, levels: &[u32]) -> Self {
        levels.iter().fold(self.clone(), |a, &l| a.flipped(l))
    }

    pub fn trimmed(&self) -> Self {
        CantorAddress {
            bits: self.bits[..self.significant_depth()].to_vec(),
        }
    }

    /// Pads with zeros up to `depth` (never truncates).
    pub fn padded(&self, depth: usize) -> Self {
        let mut bits = self.bits.clone();
        if bits.len() < depth {
            bits.resize(depth, false);
        }
        CantorAddress { bits }
    }

    /// Levels at which the two addresses differ after zero-padding, increasing.
    pub fn differing_levels(&self, other: &CantorAddress) -> Vec<u32> {
        let depth = self.depth().max(other.depth());
        (1..=depth as u32)
            .filter(|&l| self.bit(l) != other.bit(l))
            .collect()
    }

    /// The Cantor coordinate `sum 2 * bit_i / 3^i`.
    pub fn value(&self) -> Rational {
        let depth = self.depth() as u32;
        let mut num = BigInt::zero();
        for level in 1..=depth {
            num *= 3;
            if self.bit(level) {
                num += 2;
            }
        }
        Rational::new(num, pow3(depth))
    }
}

impl PartialEq for CantorAddress {
    fn eq(&self, other: &Self) -> bool {
        self.differing_levels(other).is_empty()
    }
}

impl Eq for CantorAddress {}

impl Hash for CantorAddress {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits[..self.significant_depth()].hash(state);
    }
}

impl Ord for CantorAddress {
    /// Lexicographic on the padded strings, which is also the order of the
    /// Cantor coordinates.
    fn cmp(&self, other: &Self) -> Ordering {
        let depth = self.depth().max(other.depth()) as u32;
        for level in 1..=depth {
            match self.bit(level).cmp(&other.bit(level)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for CantorAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CantorAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CantorAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn padding_equality() {
        let a = CantorAddress::parse("10").unwrap();
        let b = CantorAddress::parse("1").unwrap();
        assert_eq!(a, b);
        assert!(a.differing_levels(&b).is_empty());
        assert_ne!(a, CantorAddress::parse("11").unwrap());
    }

    #[test]
    fn flip_toggles_single_level() {
        let a = CantorAddress::parse("0").unwrap();
        let f = a.flipped(3);
        assert_eq!(f.to_string(), "001");
        assert_eq!(a.differing_levels(&f), vec![3]);
        // toggling bit n shifts the Cantor coordinate by exactly 2/3^n
        assert_eq!(f.value() - a.value(), rat(2, 27));
    }

    #[test]
    fn codes_round_trip() {
        for code in 0..8 {
            let a = CantorAddress::from_code(code, 3);
            assert_eq!(a.code(3), Some(code));
        }
        assert_eq!(CantorAddress::parse("0001").unwrap().code(3), None);
        assert!(CantorAddress::parse("012").is_err());
    }

    #[test]
    fn order_matches_coordinate() {
        let a = CantorAddress::parse("01").unwrap();
        let b = CantorAddress::parse("1").unwrap();
        assert!(a < b);
        assert!(a.value() < b.value());
    }
}
