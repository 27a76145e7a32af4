//! Wormhole levels `J_n = { k/3^n : 0 < k < 3^n, k mod 3 != 0 }` and the
//! one-sided gaps `D_n^+(t)`, `D_n^-(t)` to the nearest level element.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LaaksoError, Result};
use crate::interval::HeightInterval;
use crate::rational::{is_unit_interval, pow3, ExtRational, Rational};

/// Vertical direction along a line of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> i32 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }

    pub fn reversed(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// One height of `J_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WormholeLevel {
    order: u32,
    height: Rational,
}

impl WormholeLevel {
    pub fn new(order: u32, height: Rational) -> Result<Self> {
        if order == 0 || !is_level_height(&height, order) {
            return Err(LaaksoError::InvalidLevel(format!(
                "{height} is not in J_{order}"
            )));
        }
        Ok(WormholeLevel { order, height })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn height(&self) -> &Rational {
        &self.height
    }
}

fn not_multiple_of_3(k: &BigInt) -> bool {
    !k.mod_floor(&BigInt::from(3)).is_zero()
}

fn at(k: BigInt, n: u32) -> Rational {
    Rational::new(k, pow3(n))
}

/// True if `h` lies in `J_n`.
pub fn is_level_height(h: &Rational, n: u32) -> bool {
    wormhole_order(h) == Some(n)
}

/// The unique `n` with `h` in `J_n`, if any.
pub fn wormhole_order(h: &Rational) -> Option<u32> {
    if !h.is_positive() || *h >= Rational::one() {
        return None;
    }
    let mut d = h.denom().clone();
    let three = BigInt::from(3);
    let mut n = 0u32;
    while d > BigInt::one() {
        let (q, r) = d.div_rem(&three);
        if !r.is_zero() {
            return None;
        }
        d = q;
        n += 1;
    }
    (n >= 1).then_some(n)
}

/// Smallest element of `J_n` that is `>= t`.
pub fn level_at_or_above(t: &Rational, n: u32) -> Option<Rational> {
    let scaled = t * Rational::from_integer(pow3(n));
    let mut k = scaled.ceil().to_integer();
    if k < BigInt::one() {
        k = BigInt::one();
    }
    if !not_multiple_of_3(&k) {
        k += 1;
    }
    (k < pow3(n)).then(|| at(k, n))
}

/// Largest element of `J_n` that is `<= t`.
pub fn level_at_or_below(t: &Rational, n: u32) -> Option<Rational> {
    let top = pow3(n) - 1;
    let scaled = t * Rational::from_integer(pow3(n));
    let mut k = scaled.floor().to_integer();
    if k > top {
        k = top;
    }
    if !not_multiple_of_3(&k) {
        k -= 1;
    }
    (k >= BigInt::one()).then(|| at(k, n))
}

/// Smallest element of `J_n` strictly above `t`.
pub fn level_above(t: &Rational, n: u32) -> Option<Rational> {
    let scaled = t * Rational::from_integer(pow3(n));
    let mut k = scaled.floor().to_integer() + 1;
    if k < BigInt::one() {
        k = BigInt::one();
    }
    if !not_multiple_of_3(&k) {
        k += 1;
    }
    (k < pow3(n)).then(|| at(k, n))
}

/// Largest element of `J_n` strictly below `t`.
pub fn level_below(t: &Rational, n: u32) -> Option<Rational> {
    let top = pow3(n) - 1;
    let scaled = t * Rational::from_integer(pow3(n));
    let mut k = scaled.ceil().to_integer() - 1;
    if k > top {
        k = top;
    }
    if !not_multiple_of_3(&k) {
        k -= 1;
    }
    (k >= BigInt::one()).then(|| at(k, n))
}

/// True if `J_n` meets the closed interval `[lo, hi]`.
pub fn level_meets(n: u32, lo: &Rational, hi: &Rational) -> bool {
    level_at_or_above(lo, n).is_some_and(|h| &h <= hi)
}

/// `D_n^+(t)` or `D_n^-(t)` for any `t` in `[0,1]`; infinite when no element
/// of `J_n` lies strictly on that side.
pub fn gap(t: &Rational, n: u32, direction: Direction) -> ExtRational {
    match direction {
        Direction::Up => level_above(t, n).map(|h| h - t).into(),
        Direction::Down => level_below(t, n).map(|h| t - h).into(),
    }
}

/// Both one-sided gaps `(D_n^+(t), D_n^-(t))`.
pub fn gaps(t: &Rational, n: u32) -> (ExtRational, ExtRational) {
    (gap(t, n, Direction::Up), gap(t, n, Direction::Down))
}

/// Heights of `J_n` inside `window`, increasing.
pub fn enumerate_wormhole_heights(n: u32, window: &HeightInterval) -> Result<Vec<Rational>> {
    if n == 0 {
        return Err(LaaksoError::InvalidLevel("levels start at 1".into()));
    }
    let mut out = Vec::new();
    let mut cur = level_at_or_above(window.lo(), n);
    while let Some(h) = cur {
        if &h > window.hi() {
            break;
        }
        cur = level_above(&h, n);
        out.push(h);
    }
    Ok(out)
}

/// `D_n^{+/-}(t)` for `t` strictly inside `(0,1)`.
pub fn nearest_wormhole_gap(t: &Rational, n: u32, direction: Direction) -> Result<ExtRational> {
    if n == 0 {
        return Err(LaaksoError::InvalidLevel("levels start at 1".into()));
    }
    if !t.is_positive() || *t >= Rational::one() {
        return Err(LaaksoError::OutOfRange(format!(
            "height {t} is not in (0,1)"
        )));
    }
    Ok(gap(t, n, direction))
}

/// Finite-depth verdict on membership of a height in `S_{C,N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "level", rename_all = "kebab-case")]
pub enum SVerdict {
    /// The ratio bound held at every probed level.
    Consistent,
    /// The ratio bound fails (or a gap is infinite) at this level.
    ViolatedAt(u32),
}

/// Checks `1/C <= D_n^+(t) / D_n^-(t) <= C` for every `n` in `start..=depth`.
pub fn s_membership_probe(t: &Rational, c: &Rational, start: u32, depth: u32) -> Result<SVerdict> {
    if !t.is_positive() || *t >= Rational::one() {
        return Err(LaaksoError::OutOfRange(format!(
            "height {t} is not in (0,1)"
        )));
    }
    if *c < Rational::one() {
        return Err(LaaksoError::OutOfRange(format!("ratio constant {c} < 1")));
    }
    if start == 0 || depth < start {
        return Err(LaaksoError::InvalidLevel(format!(
            "need 1 <= N <= depth, got N={start}, depth={depth}"
        )));
    }
    for n in start..=depth {
        let (up, down) = gaps(t, n);
        let (Some(up), Some(down)) = (up.into_finite(), down.into_finite()) else {
            return Ok(SVerdict::ViolatedAt(n));
        };
        let ratio = up / down;
        if ratio > *c || ratio * c < Rational::one() {
            return Ok(SVerdict::ViolatedAt(n));
        }
    }
    Ok(SVerdict::Consistent)
}

pub(crate) fn check_height(h: &Rational) -> Result<()> {
    if is_unit_interval(h) {
        Ok(())
    } else {
        Err(LaaksoError::OutOfRange(format!(
            "height {h} is not in [0,1]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn window(a: Rational, b: Rational) -> HeightInterval {
        HeightInterval::new(a, b).unwrap()
    }

    #[test]
    fn enumerates_levels() {
        let unit = HeightInterval::unit();
        assert_eq!(
            enumerate_wormhole_heights(1, &unit).unwrap(),
            vec![rat(1, 3), rat(2, 3)]
        );
        let j2: Vec<_> = [1, 2, 4, 5, 7, 8].iter().map(|&k| rat(k, 9)).collect();
        assert_eq!(enumerate_wormhole_heights(2, &unit).unwrap(), j2);
        assert_eq!(
            enumerate_wormhole_heights(2, &window(rat(1, 3), rat(2, 3))).unwrap(),
            vec![rat(4, 9), rat(5, 9)]
        );
        for n in 1..=6 {
            let all = enumerate_wormhole_heights(n, &unit).unwrap();
            assert_eq!(all.len(), 2 * 3usize.pow(n - 1));
        }
    }

    #[test]
    fn rejects_reversed_window() {
        assert!(HeightInterval::new(rat(2, 3), rat(1, 3)).is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(wormhole_order(&rat(1, 3)), Some(1));
        assert_eq!(wormhole_order(&rat(5, 9)), Some(2));
        assert_eq!(wormhole_order(&rat(1, 2)), None);
        assert_eq!(wormhole_order(&int(0)), None);
        assert_eq!(wormhole_order(&int(1)), None);
        assert_eq!(wormhole_order(&rat(3, 9)), Some(1));
    }

    #[test]
    fn gap_examples() {
        let up = nearest_wormhole_gap(&rat(1, 2), 1, Direction::Up).unwrap();
        assert_eq!(up, ExtRational::Finite(rat(1, 6)));
        let down = nearest_wormhole_gap(&rat(1, 2), 2, Direction::Down).unwrap();
        assert_eq!(down, ExtRational::Finite(rat(1, 18)));
        let none = nearest_wormhole_gap(&rat(1, 4), 1, Direction::Down).unwrap();
        assert_eq!(none, ExtRational::Infinity);
        assert!(nearest_wormhole_gap(&int(0), 1, Direction::Up).is_err());
        assert!(nearest_wormhole_gap(&int(1), 1, Direction::Up).is_err());
    }

    #[test]
    fn gaps_are_strict() {
        // 1/3 is itself in J_1, so D_1^+(1/3) reaches 2/3
        assert_eq!(
            gap(&rat(1, 3), 1, Direction::Up),
            ExtRational::Finite(rat(1, 3))
        );
        assert_eq!(gap(&rat(1, 3), 1, Direction::Down), ExtRational::Infinity);
        assert_eq!(level_at_or_above(&rat(1, 3), 1), Some(rat(1, 3)));
        assert_eq!(level_at_or_below(&int(1), 2), Some(rat(8, 9)));
        assert_eq!(level_at_or_above(&int(0), 2), Some(rat(1, 9)));
    }

    #[test]
    fn probe_examples() {
        let v = s_membership_probe(&rat(1, 3), &int(2), 2, 12).unwrap();
        assert_eq!(v, SVerdict::Consistent);
        let v = s_membership_probe(&rat(1, 2), &int(1), 1, 8).unwrap();
        assert_eq!(v, SVerdict::Consistent);
    }
}
