//! Explicit Lipschitz functions witnessing non-differentiability, their
//! McShane extensions, and porosity certificates for the set `S`.

mod porosity;
mod witness;

pub use porosity::{
    engineered_levels, engineered_non_s_height, gap_ratio, m_membership_verdict,
    porosity_witness_for_s, HoleCheck, MVerdict, PorosityWitness,
};
pub use witness::{
    build_lemma31_function, build_prop36_function, build_prop36_one_sided, ThetaSchedule,
};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::address::CantorAddress;
use crate::calculus::PointFunction;
use crate::error::{LaaksoError, Result};
use crate::metric::distance;
use crate::par::{self, Exec};
use crate::point::LaaksoPoint;
use crate::rational::{abs, serde_rational, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub point: LaaksoPoint,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

/// Finitely many values with a declared Lipschitz bound; evaluates
/// elsewhere by McShane extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    samples: Vec<Sample>,
    #[serde(with = "serde_rational")]
    lip_bound: Rational,
}

impl SampledFunction {
    /// Sorted by point; repeated points must carry equal values.
    pub fn new(samples: Vec<(LaaksoPoint, Rational)>, lip_bound: Rational) -> Result<Self> {
        if samples.is_empty() {
            return Err(LaaksoError::Empty("samples"));
        }
        if lip_bound.is_negative() {
            return Err(LaaksoError::OutOfRange(format!(
                "negative Lipschitz bound {lip_bound}"
            )));
        }
        let mut samples: Vec<Sample> = samples
            .into_iter()
            .map(|(point, value)| Sample { point, value })
            .collect();
        samples.sort_by(|a, b| a.point.cmp(&b.point));
        let mut out: Vec<Sample> = Vec::with_capacity(samples.len());
        for s in samples {
            match out.last() {
                Some(last) if last.point == s.point => {
                    if last.value != s.value {
                        return Err(LaaksoError::Verification(format!(
                            "conflicting values {} and {} at {}",
                            last.value, s.value, s.point
                        )));
                    }
                }
                _ => out.push(s),
            }
        }
        Ok(SampledFunction {
            samples: out,
            lip_bound,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn lip_bound(&self) -> &Rational {
        &self.lip_bound
    }

    pub fn value_at(&self, p: &LaaksoPoint) -> Option<&Rational> {
        self.samples
            .binary_search_by(|s| s.point.cmp(p))
            .ok()
            .map(|i| &self.samples[i].value)
    }

    /// Largest `|f(a) - f(b)| / d(a, b)` over all sample pairs.
    pub fn pairwise_lipschitz(&self, exec: Exec) -> PairwiseReport {
        let pairs = par::index_pairs(self.samples.len());
        let ratios = par::map(exec, &pairs, |&(i, j)| {
            let (a, b) = (&self.samples[i], &self.samples[j]);
            abs(&(&a.value - &b.value)) / distance(&a.point, &b.point)
        });
        let mut best: Option<(Rational, usize)> = None;
        for (k, r) in ratios.into_iter().enumerate() {
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, k));
            }
        }
        let (max_ratio, worst) = match best {
            Some((r, k)) => {
                let (i, j) = pairs[k];
                (
                    r,
                    Some((self.samples[i].point.clone(), self.samples[j].point.clone())),
                )
            }
            None => (Rational::zero(), None),
        };
        PairwiseReport {
            within_bound: max_ratio <= self.lip_bound,
            max_ratio,
            worst_pair: worst,
            pairs: pairs.len(),
        }
    }
}

/// `min_a f(a) + L d(z, a)` over the samples of `f`.
pub fn mcshane_extend(f: &SampledFunction, z: &LaaksoPoint) -> Rational {
    f.samples
        .iter()
        .map(|s| &s.value + &f.lip_bound * distance(z, &s.point))
        .min()
        .expect("sampled functions are nonempty")
}

impl PointFunction for SampledFunction {
    fn eval(&self, x: &LaaksoPoint) -> Rational {
        mcshane_extend(self, x)
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(self.lip_bound.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseReport {
    #[serde(with = "serde_rational")]
    pub max_ratio: Rational,
    pub worst_pair: Option<(LaaksoPoint, LaaksoPoint)>,
    pub pairs: usize,
    pub within_bound: bool,
}

/// A point reached from the center by one jump, with its prescribed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpWitness {
    pub level: u32,
    pub point: LaaksoPoint,
    #[serde(with = "serde_rational")]
    pub value: Rational,
    #[serde(with = "serde_rational")]
    pub distance: Rational,
}

impl JumpWitness {
    /// `(f(y) - f(x)) / d(y, x)` with `f(x) = 0`.
    pub fn quotient(&self) -> Rational {
        &self.value / &self.distance
    }
}

/// `phi = theta` on offsets `s` in `[lo, hi)` below the center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
    #[serde(with = "serde_rational")]
    pub theta: Rational,
}

/// Closed form of a construction along the line(s) through its center.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LineRule {
    /// `f = 0` on every line through the center.
    Zero {
        #[serde(skip)]
        addresses: Vec<CantorAddress>,
    },
    /// `f[x1 + sigma s, x2] = integral of phi over [0, s]`, `phi = 1` for `s >= 0`.
    Integral {
        #[serde(skip)]
        address: CantorAddress,
        sigma: i8,
        #[serde(with = "serde_rational")]
        near: Rational,
        bands: Vec<Band>,
    },
}

/// One of the explicit witness functions, with its defining data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    pub center: LaaksoPoint,
    pub rule: LineRule,
    pub witnesses: Vec<JumpWitness>,
    pub function: SampledFunction,
}

impl Construction {
    /// Closed-form value at height `t` on the center line, when `t` lies in the construction's domain.
    pub fn line_value(&self, t: &Rational) -> Option<Rational> {
        let x1 = self.center.height();
        match &self.rule {
            LineRule::Zero { .. } => Some(Rational::zero()),
            LineRule::Integral {
                sigma, near, bands, ..
            } => {
                let s = (t - x1) * Rational::from_integer((*sigma).into());
                if s > *near || bands.first().is_some_and(|b| s < b.lo) {
                    return None;
                }
                if !s.is_negative() {
                    return Some(s);
                }
                let mut v = Rational::zero();
                for b in bands {
                    let lo = if s > b.lo { s.clone() } else { b.lo.clone() };
                    if lo < b.hi {
                        v -= &b.theta * (&b.hi - lo);
                    }
                }
                Some(v)
            }
        }
    }

    fn on_line(&self, z: &LaaksoPoint) -> bool {
        let reps = z.representatives();
        match &self.rule {
            LineRule::Zero { addresses } => addresses.iter().any(|a| reps.contains(a)),
            LineRule::Integral { address, .. } => reps.contains(address),
        }
    }

    /// Smallest and largest witness quotient.
    pub fn witness_quotient_range(&self) -> Option<(Rational, Rational)> {
        let qs: Vec<Rational> = self.witnesses.iter().map(JumpWitness::quotient).collect();
        Some((qs.iter().min()?.clone(), qs.iter().max()?.clone()))
    }

    pub fn witness_points(&self) -> Vec<LaaksoPoint> {
        self.witnesses.iter().map(|w| w.point.clone()).collect()
    }
}

impl PointFunction for Construction {
    /// Closed form on the center line, prescribed values at samples, McShane extension elsewhere.
    fn eval(&self, z: &LaaksoPoint) -> Rational {
        if self.on_line(z) {
            if let Some(v) = self.line_value(z.height()) {
                return v;
            }
        }
        if let Some(v) = self.function.value_at(z) {
            return v.clone();
        }
        mcshane_extend(&self.function, z)
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(self.function.lip_bound.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::pt;
    use crate::rational::{int, rat};

    #[test]
    fn mcshane_agrees_on_samples_and_is_monotone() {
        let f = SampledFunction::new(
            vec![
                (pt("0:0"), int(0)),
                (pt("1/2:1"), rat(1, 2)),
                (pt("1:0"), int(1)),
            ],
            int(1),
        )
        .unwrap();
        assert!(f.pairwise_lipschitz(Exec::Sequential).within_bound);
        for s in f.samples() {
            assert_eq!(mcshane_extend(&f, &s.point), s.value);
        }
        let z = pt("1/3:11");
        let more = SampledFunction::new(
            f.samples()
                .iter()
                .map(|s| (s.point.clone(), s.value.clone()))
                .chain([(pt("1/3:0"), int(0))])
                .collect(),
            int(1),
        )
        .unwrap();
        assert!(mcshane_extend(&more, &z) <= mcshane_extend(&f, &z));
    }

    #[test]
    fn sample_validation() {
        assert!(SampledFunction::new(vec![], int(1)).is_err());
        assert!(
            SampledFunction::new(vec![(pt("1/3:0"), int(0)), (pt("1/3:1"), int(1))], int(1))
                .is_err()
        );
        let f = SampledFunction::new(vec![(pt("1/3:0"), int(0)), (pt("1/3:1"), int(0))], int(1))
            .unwrap();
        assert_eq!(f.samples().len(), 1);
    }

    #[test]
    fn zero_extension_is_distance_to_samples() {
        let f =
            SampledFunction::new(vec![(pt("0:0"), int(0)), (pt("1:11"), int(0))], int(1)).unwrap();
        let z = pt("1/2:01");
        let expected = distance(&z, &pt("0:0")).min(distance(&z, &pt("1:11")));
        assert_eq!(mcshane_extend(&f, &z), expected);
    }
}
