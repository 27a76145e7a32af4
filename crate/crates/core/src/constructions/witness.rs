use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{Band, Construction, JumpWitness, LineRule, SampledFunction};
use crate::address::CantorAddress;
use crate::error::{LaaksoError, Result};
use crate::metric::distance;
use crate::point::LaaksoPoint;
use crate::rational::{inv_pow3, serde_rational_vec, ExtRational, Rational};
use crate::wormhole::gaps;

fn line_heights(x1: &Rational, offsets: impl IntoIterator<Item = Rational>) -> BTreeSet<Rational> {
    let mut hs: BTreeSet<Rational> = [Rational::zero(), Rational::one(), x1.clone()]
        .into_iter()
        .collect();
    for o in offsets {
        let t = x1 + o;
        if !t.is_negative() && t <= Rational::one() {
            hs.insert(t);
        }
    }
    hs
}

fn jump_witness(
    x: &LaaksoPoint,
    level: u32,
    value: Rational,
    expected_distance: &Rational,
) -> Result<JumpWitness> {
    let point = x.with_address(x.address().flipped(level));
    let d = distance(x, &point);
    if &d != expected_distance {
        return Err(LaaksoError::Verification(format!(
            "d(x, y_{level}) = {d}, expected {expected_distance}"
        )));
    }
    Ok(JumpWitness {
        level,
        point,
        value,
        distance: d,
    })
}

/// The function that vanishes on the line(s) through `x` and equals
/// `min(D_n^+, D_n^-)` at the point `y_n` reached by one level-`n` jump,
/// for `n` in `n_start..=k_max`.
///
/// Its directional derivative at `x` is `0`, yet every `y_n` has quotient
/// `1/2`. When `x` is a wormhole both lines through it carry `f = 0`. At
/// heights `0` and `1` only one gap is finite and the construction is one-sided.
pub fn build_lemma31_function(x: &LaaksoPoint, n_start: u32, k_max: u32) -> Result<Construction> {
    let x = x.canonicalize();
    let x1 = x.height();
    if n_start == 0 || n_start > k_max {
        return Err(LaaksoError::Infeasible(format!(
            "empty level range {n_start}..={k_max}"
        )));
    }
    if let Some(m) = x.wormhole_order().filter(|&m| n_start <= m) {
        return Err(LaaksoError::Infeasible(format!(
            "x is a wormhole of level {m}; levels must start above it"
        )));
    }
    let mut offsets = Vec::new();
    let mut witnesses = Vec::new();
    for n in n_start..=k_max {
        let (up, down) = gaps(x1, n);
        let near = up.clone().min(down.clone());
        let Some(value) = near.into_finite() else {
            return Err(LaaksoError::Infeasible(format!(
                "no level-{n} wormhole on either side of {x1}"
            )));
        };
        offsets.extend(up.into_finite());
        offsets.extend(down.into_finite().map(|d| -d));
        offsets.push(inv_pow3(n));
        offsets.push(-inv_pow3(n));
        let d = &value * Rational::from_integer(2.into());
        witnesses.push(jump_witness(&x, n, value, &d)?);
    }
    let addresses = x.representatives();
    let mut samples = Vec::new();
    for t in line_heights(x1, offsets) {
        for a in &addresses {
            samples.push((LaaksoPoint::new(t.clone(), a.clone())?, Rational::zero()));
        }
    }
    samples.extend(witnesses.iter().map(|w| (w.point.clone(), w.value.clone())));
    let function = SampledFunction::new(samples, Rational::one())?;
    Ok(Construction {
        center: x,
        rule: LineRule::Zero { addresses },
        witnesses,
        function,
    })
}

/// Levels `n_k` and weights `theta_k` for the band construction.
///
/// `sigma = +1` puts the short gaps above the center (`D^+ << D^-`);
/// `sigma = -1` is the mirror image. `near[k]` and `far[k]` are the short
/// and long gaps at level `n_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSchedule {
    #[serde(with = "crate::rational::serde_rational")]
    pub center: Rational,
    pub sigma: i8,
    pub levels: Vec<u32>,
    #[serde(with = "serde_rational_vec")]
    pub theta: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub near: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub far: Vec<Rational>,
    /// Set when no level met the thinning conditions and a single level was used instead.
    pub fallback: bool,
}

fn oriented_gaps(t: &Rational, n: u32, sigma: i8) -> Option<(Rational, Rational)> {
    let (up, down) = gaps(t, n);
    let (near, far) = if sigma > 0 { (up, down) } else { (down, up) };
    Some((near.into_finite()?, far.into_finite()?))
}

impl ThetaSchedule {
    /// Greedy choice of levels in `from..=to` satisfying
    /// `2 near_k / far_k < 1/n_k` and `2 far_{k+1} / far_k < 1/n_k`, with
    /// both gap sequences strictly decreasing. `theta_k` defaults to the
    /// largest admissible value.
    pub fn select(center: &Rational, sigma: i8, from: u32, to: u32) -> Result<ThetaSchedule> {
        if sigma != 1 && sigma != -1 {
            return Err(LaaksoError::OutOfRange(format!(
                "orientation must be +1 or -1, got {sigma}"
            )));
        }
        let mut levels: Vec<u32> = Vec::new();
        let (mut near, mut far): (Vec<Rational>, Vec<Rational>) = (Vec::new(), Vec::new());
        for n in from.max(1)..=to {
            let Some((dn, df)) = oriented_gaps(center, n, sigma) else {
                continue;
            };
            let nk = Rational::from_integer(n.into());
            if &dn * Rational::from_integer(2.into()) * &nk >= df {
                continue;
            }
            if let (Some(&prev), Some(pn), Some(pf)) = (levels.last(), near.last(), far.last()) {
                let prev = Rational::from_integer(prev.into());
                if &dn >= pn || &df >= pf || &df * Rational::from_integer(2.into()) * prev >= *pf {
                    continue;
                }
            }
            levels.push(n);
            near.push(dn);
            far.push(df);
        }
        let mut fallback = false;
        if levels.is_empty() {
            // the level where the short gap is relatively shortest
            let best = (from.max(1)..=to)
                .filter_map(|n| {
                    oriented_gaps(center, n, sigma).map(|(dn, df)| (&df / &dn, n, dn, df))
                })
                .filter(|(r, ..)| *r > Rational::one())
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            let Some((_, n, dn, df)) = best else {
                return Err(LaaksoError::Infeasible(format!(
                    "no level in {from}..={to} has a shorter gap on the chosen side of {center}"
                )));
            };
            levels.push(n);
            near.push(dn);
            far.push(df);
            fallback = true;
        }
        let mut s = ThetaSchedule {
            center: center.clone(),
            sigma,
            levels,
            theta: Vec::new(),
            near,
            far,
            fallback,
        };
        s.theta = (0..s.levels.len()).map(|k| s.theta_bound(k)).collect();
        Ok(s)
    }

    /// Same levels, caller-chosen weights.
    pub fn with_theta(mut self, theta: Vec<Rational>) -> Result<ThetaSchedule> {
        if theta.len() != self.levels.len() {
            return Err(LaaksoError::OutOfRange(format!(
                "{} weights for {} levels",
                theta.len(),
                self.levels.len()
            )));
        }
        self.theta = theta;
        self.check()?;
        Ok(self)
    }

    /// The far gap one band further in, `0` after the last band.
    fn next_far(&self, k: usize) -> Rational {
        self.far.get(k + 1).cloned().unwrap_or_else(Rational::zero)
    }

    /// `(1 - (near_k + far_{k+1}) / far_k) / (1 - far_{k+1} / far_k)`.
    pub fn theta_bound(&self, k: usize) -> Rational {
        let fk = &self.far[k];
        let next = self.next_far(k);
        let num = Rational::one() - (&self.near[k] + &next) / fk;
        let den = Rational::one() - &next / fk;
        num / den
    }

    /// Whether the level sequence meets the thinning conditions.
    pub fn thinning_holds(&self) -> bool {
        let two = Rational::from_integer(2.into());
        (0..self.levels.len()).all(|k| {
            let inv_n = Rational::new(1.into(), self.levels[k].into());
            let near_ok = &two * &self.near[k] / &self.far[k] < inv_n;
            let next_ok =
                k + 1 == self.levels.len() || &two * &self.far[k + 1] / &self.far[k] < inv_n;
            near_ok && next_ok
        })
    }

    /// Exact check of `0 < theta_k < 1`, `theta_k <= theta_bound(k)` and of
    /// the gaps against the center.
    pub fn check(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LaaksoError::Infeasible(
                "levels must be nonempty and increasing".into(),
            ));
        }
        for (k, &n) in self.levels.iter().enumerate() {
            let fresh = oriented_gaps(&self.center, n, self.sigma);
            if fresh.as_ref() != Some(&(self.near[k].clone(), self.far[k].clone())) {
                return Err(LaaksoError::Infeasible(format!(
                    "stored gaps at level {n} do not match the center"
                )));
            }
            if self.near[k] >= self.far[k] {
                return Err(LaaksoError::Infeasible(format!(
                    "level {n}: short gap is not the shorter one"
                )));
            }
            let th = &self.theta[k];
            if !th.is_positive() || *th >= Rational::one() || *th > self.theta_bound(k) {
                return Err(LaaksoError::Infeasible(format!(
                    "theta at level {n} is {th}, bound is {}",
                    self.theta_bound(k)
                )));
            }
        }
        Ok(())
    }

    pub fn min_theta(&self) -> Rational {
        self.theta
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(Rational::one)
    }
}

/// The band function at a non-wormhole center: slope `1` on the short
/// side, slope `theta_k` on the `k`-th band of the long side, and value
/// `near_k` at the point `y_{n_k}` reached by one level-`n_k` jump.
///
/// With `sigma = +1` the directional derivative is `1`; the mirror image
/// has derivative `-1`. Either way it is maximal for a 1-Lipschitz function
/// while every `y_{n_k}` has quotient `1/2`.
pub fn build_prop36_function(x: &LaaksoPoint, schedule: &ThetaSchedule) -> Result<Construction> {
    if let Some(n) = x.wormhole_order() {
        return Err(LaaksoError::Infeasible(format!(
            "center is a wormhole of level {n}"
        )));
    }
    if &schedule.center != x.height() {
        return Err(LaaksoError::Infeasible(format!(
            "schedule built for {}, center is at {}",
            schedule.center,
            x.height()
        )));
    }
    schedule.check()?;
    let x1 = x.height();
    let sig = Rational::from_integer(schedule.sigma.into());
    let bands: Vec<Band> = (0..schedule.levels.len())
        .map(|k| Band {
            lo: -schedule.far[k].clone(),
            hi: -schedule.next_far(k),
            theta: schedule.theta[k].clone(),
        })
        .collect();
    let address: CantorAddress = x.address().clone();
    let near0 = schedule.near[0].clone();
    let mut offsets: Vec<Rational> = Vec::new();
    for k in 0..schedule.levels.len() {
        offsets.push(schedule.near[k].clone());
        offsets.push(-schedule.far[k].clone());
    }
    let far0 = schedule.far[0].clone();
    for j in 1..=schedule.levels.last().copied().unwrap_or(1) + 2 {
        for o in [inv_pow3(j), -inv_pow3(j)] {
            if o <= near0 && o >= -far0.clone() {
                offsets.push(o);
            }
        }
    }
    let mut construction = Construction {
        center: x.clone(),
        rule: LineRule::Integral {
            address: address.clone(),
            sigma: schedule.sigma,
            near: near0,
            bands,
        },
        witnesses: Vec::new(),
        function: SampledFunction::new(vec![(x.clone(), Rational::zero())], Rational::one())?,
    };
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    for o in offsets {
        let t = x1 + &sig * o;
        if seen.insert(t.clone()) {
            let v = construction
                .line_value(&t)
                .expect("offset inside the construction domain");
            samples.push((LaaksoPoint::new(t, address.clone())?, v));
        }
    }
    for (k, &n) in schedule.levels.iter().enumerate() {
        let d = &schedule.near[k] * Rational::from_integer(2.into());
        construction
            .witnesses
            .push(jump_witness(x, n, schedule.near[k].clone(), &d)?);
    }
    samples.extend(
        construction
            .witnesses
            .iter()
            .map(|w| (w.point.clone(), w.value.clone())),
    );
    construction.function = SampledFunction::new(samples, Rational::one())?;
    Ok(construction)
}

/// The band construction at height `0` or `1`, where only one side exists.
///
/// There is no long side, so no bands: `f` grows with slope `1` away from
/// the end along the line through `x`, and `y_n` (one level-`n` jump) gets
/// the value `D_n = 1/3^n`, the gap on the open side.
pub fn build_prop36_one_sided(x: &LaaksoPoint, from: u32, to: u32) -> Result<Construction> {
    let x1 = x.height();
    let sigma: i8 = if x1.is_zero() {
        1
    } else if x1.is_one() {
        -1
    } else {
        return Err(LaaksoError::Infeasible(format!(
            "one-sided construction needs height 0 or 1, got {x1}"
        )));
    };
    if from == 0 || from > to {
        return Err(LaaksoError::Infeasible(format!(
            "empty level range {from}..={to}"
        )));
    }
    let sig = Rational::from_integer(sigma.into());
    let address = x.address().clone();
    let construction = Construction {
        center: x.clone(),
        rule: LineRule::Integral {
            address: address.clone(),
            sigma,
            near: Rational::one(),
            bands: Vec::new(),
        },
        witnesses: Vec::new(),
        function: SampledFunction::new(vec![(x.clone(), Rational::zero())], Rational::one())?,
    };
    let mut witnesses = Vec::new();
    let mut offsets: BTreeSet<Rational> = [Rational::zero(), Rational::one()].into_iter().collect();
    for n in from..=to {
        let near = inv_pow3(n);
        witnesses.push(jump_witness(
            x,
            n,
            near.clone(),
            &(&near * Rational::from_integer(2.into())),
        )?);
        offsets.insert(near);
        offsets.insert(inv_pow3(n + 1));
    }
    let mut samples = Vec::new();
    for o in offsets {
        let t = x1 + &sig * &o;
        samples.push((LaaksoPoint::new(t, address.clone())?, o));
    }
    samples.extend(
        witnesses
            .iter()
            .map(|w: &JumpWitness| (w.point.clone(), w.value.clone())),
    );
    let function = SampledFunction::new(samples, Rational::one())?;
    Ok(Construction {
        witnesses,
        function,
        ..construction
    })
}

/// `+inf` guard for ratios of gaps.
pub(super) fn ext_ratio(a: &ExtRational, b: &ExtRational) -> ExtRational {
    match (a.finite(), b.finite()) {
        (Some(a), Some(b)) => ExtRational::Finite(a / b),
        (None, Some(_)) => ExtRational::Infinity,
        (Some(_), None) => ExtRational::Finite(Rational::zero()),
        (None, None) => ExtRational::Finite(Rational::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{
        difference_quotient, directional_derivative, triadic_schedule, PointFunction,
    };
    use crate::constructions::engineered_non_s_height;
    use crate::par::Exec;
    use crate::point::pt;
    use crate::rational::{abs, int, rat};

    #[test]
    fn zero_witness_at_generic_point() {
        let x = pt("1/5:01");
        let c = build_lemma31_function(&x, 1, 8).unwrap();
        assert_eq!(c.witnesses.len(), 8);
        assert_eq!(c.witness_quotient_range(), Some((rat(1, 2), rat(1, 2))));
        assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
        let r = directional_derivative(&c, &x, &triadic_schedule(2, 8), &int(0)).unwrap();
        assert_eq!(r.value(), Some(&int(0)));
    }

    #[test]
    fn zero_witness_at_wormhole_and_ends() {
        let x = pt("1/3:1");
        assert!(build_lemma31_function(&x, 1, 4).is_err());
        let c = build_lemma31_function(&x, 2, 6).unwrap();
        assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
        let r = directional_derivative(&c, &x, &triadic_schedule(2, 7), &int(0)).unwrap();
        assert_eq!(r.value(), Some(&int(0)));
        // one-sided at the bottom of the space
        let c = build_lemma31_function(&pt("0:0"), 1, 5).unwrap();
        assert_eq!(c.witness_quotient_range(), Some((rat(1, 2), rat(1, 2))));
        assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
        assert!(build_lemma31_function(&x, 5, 4).is_err());
    }

    #[test]
    fn band_witness_on_engineered_height() {
        let t = engineered_non_s_height(3);
        let x = LaaksoPoint::new(t.clone(), CantorAddress::parse("0").unwrap()).unwrap();
        let sched = ThetaSchedule::select(&t, 1, 2, 16).unwrap();
        assert!(!sched.fallback);
        assert!(sched.thinning_holds());
        assert_eq!(sched.levels, vec![2, 4, 8]);
        let c = build_prop36_function(&x, &sched).unwrap();
        assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
        assert_eq!(c.witness_quotient_range(), Some((rat(1, 2), rat(1, 2))));
        for j in 3..12 {
            assert_eq!(difference_quotient(&c, &x, &inv_pow3(j)).unwrap(), int(1));
        }
        let tol = int(1) - sched.min_theta();
        let r = directional_derivative(&c, &x, &triadic_schedule(3, 12), &tol).unwrap();
        assert!(abs(&(r.value().unwrap() - int(1))) <= tol);
        // f(u_k) = near_k = f(y_k)
        for (k, w) in c.witnesses.iter().enumerate() {
            let u = x.at_height(x.height() + &sched.near[k]).unwrap();
            assert_eq!(c.eval(&u), w.value);
        }
        // d(y_l, y_k) = 2 near_l for k > l
        for l in 0..c.witnesses.len() {
            for k in l + 1..c.witnesses.len() {
                let d = distance(&c.witnesses[l].point, &c.witnesses[k].point);
                assert_eq!(d, &sched.near[l] * int(2));
            }
        }
    }

    #[test]
    fn band_witness_mirror_and_rejections() {
        let t = int(1) - engineered_non_s_height(3);
        let x = LaaksoPoint::new(t.clone(), CantorAddress::parse("1").unwrap()).unwrap();
        let sched = ThetaSchedule::select(&t, -1, 2, 16).unwrap();
        let c = build_prop36_function(&x, &sched).unwrap();
        assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
        assert_eq!(
            difference_quotient(&c, &x, &-inv_pow3(10)).unwrap(),
            int(-1)
        );
        let q = difference_quotient(&c, &x, &inv_pow3(10)).unwrap();
        assert!(q >= int(-1) && q <= -sched.min_theta());
        let bad = sched.clone().with_theta(vec![int(1); sched.levels.len()]);
        assert!(bad.is_err());
        assert!(build_prop36_function(&pt("1/3:0"), &sched).is_err());
    }

    #[test]
    fn band_witness_at_the_ends() {
        for (x, sign) in [(pt("0:01"), 1), (pt("1:1"), -1)] {
            let c = build_prop36_one_sided(&x, 1, 8).unwrap();
            assert!(c.function.pairwise_lipschitz(Exec::Sequential).within_bound);
            assert_eq!(c.witness_quotient_range(), Some((rat(1, 2), rat(1, 2))));
            for j in 1..12 {
                let step = inv_pow3(j) * int(sign);
                assert_eq!(difference_quotient(&c, &x, &step).unwrap(), int(sign));
            }
        }
        assert!(build_prop36_one_sided(&pt("1/2:0"), 1, 4).is_err());
        assert!(build_prop36_one_sided(&pt("0:0"), 3, 2).is_err());
    }
}
