use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::witness::{build_prop36_function, ext_ratio, ThetaSchedule};
use super::Construction;
use crate::error::{LaaksoError, Result};
use crate::point::LaaksoPoint;
use crate::rational::{inv_pow3, pow3, serde_rational, ExtRational, Rational};
use crate::wormhole::{
    gap, gaps, level_at_or_above, level_at_or_below, s_membership_probe, Direction, SVerdict,
};

/// `D_n^+(t) / D_n^-(t)`, infinite when only the upper gap is infinite.
pub fn gap_ratio(t: &Rational, n: u32) -> ExtRational {
    let (up, down) = gaps(t, n);
    ext_ratio(&up, &down)
}

/// One sampled height `s` in a hole with its two gaps at the hole's level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleCheck {
    #[serde(with = "serde_rational")]
    pub s: Rational,
    #[serde(with = "serde_rational")]
    pub d_minus: Rational,
    #[serde(with = "serde_rational")]
    pub d_plus: Rational,
    /// `d_minus <= lambda/3^n`.
    pub below_ok: bool,
    /// `d_plus >= (1 - lambda)/3^n`.
    pub above_ok: bool,
    /// `d_plus / d_minus > C`.
    pub ratio_ok: bool,
}

/// A hole `(t, t + lambda/3^n)` in `S_{C,N}` near `t0`, within `delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PorosityWitness {
    #[serde(with = "serde_rational")]
    pub c: Rational,
    pub n_start: u32,
    #[serde(with = "serde_rational")]
    pub t0: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    pub level: u32,
    #[serde(with = "serde_rational")]
    pub hole_left: Rational,
    #[serde(with = "serde_rational")]
    pub hole_width: Rational,
    pub checks: Vec<HoleCheck>,
}

impl PorosityWitness {
    pub fn hole_right(&self) -> Rational {
        &self.hole_left + &self.hole_width
    }

    /// `(1 - lambda)/lambda > C`, `|t - t0| < 2/3^n < delta`, and every sample certified.
    pub fn certified(&self) -> bool {
        let two_scale = inv_pow3(self.level) * Rational::from_integer(2.into());
        let lam_ok = (Rational::one() - &self.lambda) / &self.lambda > self.c;
        let near = (&self.hole_left - &self.t0).abs() < two_scale && two_scale < self.delta;
        lam_ok
            && near
            && self.level > self.n_start
            && self
                .checks
                .iter()
                .all(|c| c.below_ok && c.above_ok && c.ratio_ok)
    }
}

/// Builds the hole for `S_{C,N}` near `t0` and certifies `samples` evenly
/// spaced heights inside it.
///
/// `lambda = 1/(C+2)`, so `(1 - lambda)/lambda = C + 1`. The level is the
/// least `n > N` with `2/3^n < delta`, and `t` is the element of `J_n`
/// nearest to `t0` (lower one on ties).
pub fn porosity_witness_for_s(
    c: &Rational,
    n_start: u32,
    t0: &Rational,
    delta: &Rational,
    samples: usize,
) -> Result<PorosityWitness> {
    if *c <= Rational::one() {
        return Err(LaaksoError::OutOfRange(format!("C must exceed 1, got {c}")));
    }
    if n_start == 0 {
        return Err(LaaksoError::InvalidLevel("N must be positive".into()));
    }
    if !t0.is_positive() || *t0 >= Rational::one() {
        return Err(LaaksoError::OutOfRange(format!("t0 = {t0} not in (0,1)")));
    }
    if !delta.is_positive() {
        return Err(LaaksoError::OutOfRange(format!(
            "delta = {delta} must be positive"
        )));
    }
    let lambda = Rational::one() / (c + Rational::from_integer(2.into()));
    let two = Rational::from_integer(2.into());
    let mut n = n_start + 1;
    while &two * inv_pow3(n) >= *delta {
        n += 1;
    }
    let below = level_at_or_below(t0, n);
    let above = level_at_or_above(t0, n);
    let t = match (below, above) {
        (Some(b), Some(a)) => {
            if t0 - &b <= &a - t0 {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => unreachable!("J_n is nonempty"),
    };
    let scale = inv_pow3(n);
    let width = &lambda * &scale;
    let denom = Rational::from_integer(BigInt::from(samples as u64 + 1));
    let checks = (1..=samples as u64)
        .map(|i| {
            let s = &t + &width * Rational::from_integer(BigInt::from(i)) / &denom;
            let d_minus = gap(&s, n, Direction::Down)
                .into_finite()
                .expect("t lies below s");
            let d_plus = gap(&s, n, Direction::Up)
                .into_finite()
                .unwrap_or_else(Rational::one);
            HoleCheck {
                below_ok: d_minus <= width,
                above_ok: d_plus >= (Rational::one() - &lambda) * &scale,
                ratio_ok: &d_plus / &d_minus > *c,
                s,
                d_minus,
                d_plus,
            }
        })
        .collect();
    Ok(PorosityWitness {
        c: c.clone(),
        n_start,
        t0: t0.clone(),
        delta: delta.clone(),
        lambda,
        level: n,
        hole_left: t,
        hole_width: width,
        checks,
    })
}

/// Exponents `2^k`, `k = 1..=terms`, of the engineered ternary digits.
pub fn engineered_levels(terms: u32) -> Vec<u32> {
    (1..=terms).map(|k| 1u32 << k).collect()
}

/// `1 - (sum_k 2/3^(2^k) + 1/(2 * 3^(2^(terms+1))))`.
///
/// At each level `n = 2^k` the nearest level-`n` wormhole above is within
/// about `2/3^(2^(k+1))` while the one below is about `2/3^n` away, so the
/// ratio `D_n^- / D_n^+` grows without bound over the engineered levels.
/// The tail term keeps the height off every `J_n` up to level `2^(terms+1)`.
pub fn engineered_non_s_height(terms: u32) -> Rational {
    let mut s = Rational::zero();
    for a in engineered_levels(terms) {
        s += inv_pow3(a) * Rational::from_integer(2.into());
    }
    let tail = 1u32 << (terms + 1);
    s += Rational::new(BigInt::one(), pow3(tail) * BigInt::from(2));
    Rational::one() - s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum MVerdict {
    /// The gap ratios stayed within `C` at every probed level.
    InMConsistent { depth: u32 },
    /// Ratio bound failed at `level`; `witness` has a maximal directional
    /// derivative at the point but quotient `1/2` along its jump points.
    NotInM {
        level: u32,
        #[serde(with = "serde_rational")]
        quotient: Rational,
        witness: Box<Construction>,
    },
}

/// Finite-depth classification of `x` against `M = h^{-1}(S)`.
pub fn m_membership_verdict(
    x: &LaaksoPoint,
    c: &Rational,
    n_start: u32,
    depth: u32,
) -> Result<MVerdict> {
    let x = x.canonicalize();
    let t = x.height();
    let level = match s_membership_probe(t, c, n_start, depth)? {
        SVerdict::Consistent => return Ok(MVerdict::InMConsistent { depth }),
        SVerdict::ViolatedAt(n) => n,
    };
    // orientation from the first violating level where both gaps are finite
    let sigma = (level..=depth)
        .find_map(|n| match gaps(t, n) {
            (ExtRational::Finite(up), ExtRational::Finite(down)) if up != down => {
                let r = &up / &down;
                (r > *c || &r * c < Rational::one()).then_some(if up < down { 1 } else { -1 })
            }
            _ => None,
        })
        .unwrap_or_else(|| {
            if gap(t, level, Direction::Up).is_finite() {
                1
            } else {
                -1
            }
        });
    let schedule = ThetaSchedule::select(t, sigma, level, depth)?;
    let witness = build_prop36_function(&x, &schedule)?;
    let (lo, hi) = witness
        .witness_quotient_range()
        .expect("schedules are nonempty");
    if lo != hi {
        return Err(LaaksoError::Verification(format!(
            "witness quotients range over [{lo}, {hi}]"
        )));
    }
    Ok(MVerdict::NotInM {
        level,
        quotient: lo,
        witness: Box::new(witness),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::CantorAddress;
    use crate::point::pt;
    use crate::rational::{int, rat};

    #[test]
    fn example_hole() {
        let w = porosity_witness_for_s(&int(2), 1, &rat(1, 3), &rat(1, 10), 200).unwrap();
        assert!(w.level >= 3);
        assert_eq!(w.lambda, rat(1, 4));
        assert!(w.certified());
        assert!((&w.hole_left - rat(1, 3)).abs() < inv_pow3(w.level) * int(2));
    }

    #[test]
    fn hole_rejections() {
        assert!(porosity_witness_for_s(&int(1), 1, &rat(1, 3), &rat(1, 10), 5).is_err());
        assert!(porosity_witness_for_s(&int(2), 1, &int(0), &rat(1, 10), 5).is_err());
        assert!(porosity_witness_for_s(&int(2), 1, &rat(1, 2), &int(0), 5).is_err());
    }

    #[test]
    fn engineered_ratios_grow() {
        let t = engineered_non_s_height(4);
        let mut last = Rational::zero();
        for n in engineered_levels(4) {
            let (up, down) = gaps(&t, n);
            let r = down.into_finite().unwrap() / up.into_finite().unwrap();
            assert!(r > last, "level {n}");
            last = r;
        }
        assert!(last > int(1_000_000));
    }

    #[test]
    fn membership_verdicts() {
        for depth in 2..8 {
            assert_eq!(
                m_membership_verdict(&pt("1/3:0"), &int(2), 2, depth).unwrap(),
                MVerdict::InMConsistent { depth }
            );
        }
        let x = LaaksoPoint::new(
            engineered_non_s_height(3),
            CantorAddress::parse("01").unwrap(),
        )
        .unwrap();
        let mut first = None;
        for depth in 2..=12 {
            match m_membership_verdict(&x, &int(2), 2, depth).unwrap() {
                MVerdict::NotInM { quotient, .. } => {
                    assert_eq!(quotient, rat(1, 2));
                    first.get_or_insert(depth);
                }
                MVerdict::InMConsistent { .. } => {
                    assert!(first.is_none(), "verdict not monotone at {depth}")
                }
            }
        }
        assert_eq!(first, Some(2));
    }
}
