//! Difference quotients, directional derivatives and differentiability probes.
//!
//! Along a vertical line the only available direction is the height, so the
//! directional derivative is the limit of `(f[x1 + t, x2] - f[x1, x2]) / t`.
//! At a wormhole of order `n` the two lines through the point give two
//! branch derivatives `f_L` (canonical representative, bit `n` clear) and
//! `f_R` (bit `n` set), and `f_I` exists when both exist and agree.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{LaaksoError, Result};
use crate::metric::distance;
use crate::par::{self, Exec};
use crate::point::LaaksoPoint;
use crate::rational::{
    abs, inv_pow3, rat, serde_opt_rational, serde_rational, serde_rational_vec, Rational,
};

/// A real function on `F` with exact rational values.
///
/// Implementations must respect wormhole identification, i.e. give the same
/// value on every representative of a point.
pub trait PointFunction: Sync {
    fn eval(&self, x: &LaaksoPoint) -> Rational;

    /// Declared Lipschitz bound, if known.
    fn lip_bound(&self) -> Option<Rational> {
        None
    }
}

impl<F: PointFunction + ?Sized> PointFunction for &F {
    fn eval(&self, x: &LaaksoPoint) -> Rational {
        (**self).eval(x)
    }

    fn lip_bound(&self) -> Option<Rational> {
        (**self).lip_bound()
    }
}

/// The height projection `h`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Height;

impl PointFunction for Height {
    fn eval(&self, x: &LaaksoPoint) -> Rational {
        x.height().clone()
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(Rational::one())
    }
}

#[derive(Debug, Clone)]
pub struct Constant(pub Rational);

impl PointFunction for Constant {
    fn eval(&self, _: &LaaksoPoint) -> Rational {
        self.0.clone()
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(Rational::zero())
    }
}

/// `d_p = d(p, .)`.
#[derive(Debug, Clone)]
pub struct DistanceTo(pub LaaksoPoint);

impl PointFunction for DistanceTo {
    fn eval(&self, x: &LaaksoPoint) -> Rational {
        distance(&self.0, x)
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(Rational::one())
    }
}

/// `alpha * f + beta * g`.
pub struct Combination<F, G> {
    pub alpha: Rational,
    pub f: F,
    pub beta: Rational,
    pub g: G,
}

impl<F: PointFunction, G: PointFunction> PointFunction for Combination<F, G> {
    fn eval(&self, x: &LaaksoPoint) -> Rational {
        &self.alpha * self.f.eval(x) + &self.beta * self.g.eval(x)
    }

    fn lip_bound(&self) -> Option<Rational> {
        Some(abs(&self.alpha) * self.f.lip_bound()? + abs(&self.beta) * self.g.lip_bound()?)
    }
}

/// `(f[x1 + t, x2] - f[x1, x2]) / t` with the address of `x` held fixed.
pub fn difference_quotient<F: PointFunction + ?Sized>(
    f: &F,
    x: &LaaksoPoint,
    t: &Rational,
) -> Result<Rational> {
    if t.is_zero() {
        return Err(LaaksoError::OutOfRange("step must be nonzero".into()));
    }
    let moved = x.at_height(x.height() + t).map_err(|_| {
        LaaksoError::OutOfRange(format!("step {t} leaves [0,1] from height {}", x.height()))
    })?;
    Ok((f.eval(&moved) - f.eval(x)) / t)
}

/// Steps `1/3^k` for `k` in `k0..=k1`, decreasing.
pub fn triadic_schedule(k0: u32, k1: u32) -> Vec<Rational> {
    (k0..=k1).map(inv_pow3).collect()
}

/// Default tolerance for functions without a rational closed form.
pub fn default_real_tolerance() -> Rational {
    rat(1, 1_000_000)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum DerivativeVerdict {
    Exists {
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    Split {
        #[serde(with = "serde_rational")]
        left: Rational,
        #[serde(with = "serde_rational")]
        right: Rational,
    },
    Divergent,
}

/// Outcome of [`directional_derivative`].
///
/// Away from wormholes `left_limit`/`right_limit` are the one-sided estimates
/// from negative/positive steps; at a wormhole they are the branch estimates
/// `f_L` and `f_R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub point: LaaksoPoint,
    #[serde(with = "serde_opt_rational")]
    pub left_limit: Option<Rational>,
    #[serde(with = "serde_opt_rational")]
    pub right_limit: Option<Rational>,
    #[serde(flatten)]
    pub verdict: DerivativeVerdict,
    #[serde(with = "serde_rational_vec")]
    pub scales: Vec<Rational>,
}

impl DerivativeReport {
    pub fn value(&self) -> Option<&Rational> {
        match &self.verdict {
            DerivativeVerdict::Exists { value } => Some(value),
            _ => None,
        }
    }
}

/// Midrange of `qs` when they all lie within `tol` of it.
fn converged(qs: &[Rational], tol: &Rational) -> Option<Rational> {
    let lo = qs.iter().min()?;
    let hi = qs.iter().max()?;
    (hi - lo <= tol * Rational::from_integer(2.into()))
        .then(|| (lo + hi) / Rational::from_integer(2.into()))
}

fn side_quotients<F: PointFunction + ?Sized>(
    f: &F,
    x: &LaaksoPoint,
    schedule: &[Rational],
    sign: i32,
) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    for s in schedule {
        let t = if sign < 0 { -s.clone() } else { s.clone() };
        let h = x.height() + &t;
        if h.is_negative() || h > Rational::one() {
            continue;
        }
        out.push(difference_quotient(f, x, &t)?);
    }
    Ok(out)
}

/// Estimates `f_I(x)` (or the pair `f_L`, `f_R` at a wormhole) from the
/// quotients at `+-s` for every `s` in `schedule`.
///
/// `exists(v)` is returned when every probed quotient lies within `tol` of a
/// common `v`; `split` when each side converges on its own but the limits
/// differ; `divergent` otherwise. Steps leaving `[0,1]` are skipped, which
/// makes the estimate one-sided at heights 0 and 1.
pub fn directional_derivative<F: PointFunction + ?Sized>(
    f: &F,
    x: &LaaksoPoint,
    schedule: &[Rational],
    tol: &Rational,
) -> Result<DerivativeReport> {
    if schedule.is_empty() {
        return Err(LaaksoError::Empty("step schedule"));
    }
    if schedule.iter().any(|s| !s.is_positive()) {
        return Err(LaaksoError::OutOfRange(
            "schedule steps must be positive".into(),
        ));
    }
    let (left, right) = if let Some(n) = x.wormhole_order() {
        let canon = x.canonicalize();
        let flipped = canon.with_address(canon.address().flipped(n));
        let branch = |p: &LaaksoPoint| -> Result<Vec<Rational>> {
            let mut qs = side_quotients(f, p, schedule, -1)?;
            qs.extend(side_quotients(f, p, schedule, 1)?);
            Ok(qs)
        };
        (branch(&canon)?, branch(&flipped)?)
    } else {
        (
            side_quotients(f, x, schedule, -1)?,
            side_quotients(f, x, schedule, 1)?,
        )
    };
    let all: Vec<Rational> = left.iter().chain(&right).cloned().collect();
    let left_limit = converged(&left, tol);
    let right_limit = converged(&right, tol);
    let verdict = if let Some(value) = converged(&all, tol) {
        DerivativeVerdict::Exists { value }
    } else {
        match (&left_limit, &right_limit) {
            (Some(l), Some(r)) => DerivativeVerdict::Split {
                left: l.clone(),
                right: r.clone(),
            },
            _ => DerivativeVerdict::Divergent,
        }
    };
    Ok(DerivativeReport {
        point: x.clone(),
        left_limit,
        right_limit,
        verdict,
        scales: schedule.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    #[serde(with = "serde_rational")]
    pub sup_ratio: Rational,
    pub worst_witness: LaaksoPoint,
}

/// `max |f(y) - f(x) - D (h(y) - h(x))| / d(y, x)` over the pool.
///
/// Ties are broken towards the smallest witness in point order.
pub fn differentiability_probe<F: PointFunction + ?Sized>(
    f: &F,
    x: &LaaksoPoint,
    candidate: &Rational,
    pool: &[LaaksoPoint],
    exec: Exec,
) -> Result<ProbeReport> {
    if pool.is_empty() {
        return Err(LaaksoError::Empty("witness pool"));
    }
    let fx = f.eval(x);
    let ratios = par::map(exec, pool, |y| {
        let d = distance(x, y);
        if d.is_zero() {
            return None;
        }
        Some(abs(&(f.eval(y) - &fx - candidate * (y.height() - x.height()))) / d)
    });
    let mut best: Option<(Rational, &LaaksoPoint)> = None;
    for (r, y) in ratios.into_iter().zip(pool) {
        let r = r.ok_or(LaaksoError::SamePoint)?;
        best = match best {
            Some((br, by)) if br > r || (br == r && by <= y) => Some((br, by)),
            _ => Some((r, y)),
        };
    }
    let (sup_ratio, worst) = best.expect("pool is nonempty");
    Ok(ProbeReport {
        sup_ratio,
        worst_witness: worst.clone(),
    })
}

/// Every point with address depth at most `depth` and height on the grid
/// `x1 + i/3^(j+1)`, `|i| <= 3`, lying at positive distance at most `1/3^j`
/// from `x`.
pub fn shell_pool(x: &LaaksoPoint, j: u32, depth: usize) -> Vec<LaaksoPoint> {
    let radius = inv_pow3(j);
    let step = inv_pow3(j + 1);
    let depth = depth.max(x.address().significant_depth());
    let mut pool = Vec::new();
    for i in -3i64..=3 {
        let h = x.height() + &step * Rational::from_integer(i.into());
        if h.is_negative() || h > Rational::one() {
            continue;
        }
        for code in 0..(1u64 << depth) {
            let y = LaaksoPoint::new(
                h.clone(),
                crate::address::CantorAddress::from_code(code, depth),
            )
            .expect("height checked");
            let d = distance(x, &y);
            if d.is_positive() && d <= radius {
                pool.push(y);
            }
        }
    }
    pool.sort();
    pool.dedup();
    pool
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    #[serde(with = "serde_rational")]
    pub sup_quotients: Rational,
    #[serde(with = "serde_rational")]
    pub sup_derivatives: Rational,
    /// Whether `sup_derivatives <= sup_quotients + tol`.
    pub consistent: bool,
}

/// Compares `sup |f(x) - f(y)| / d(x, y)` over `pairs` with `sup |f_I|` over
/// the `points` where the directional derivative exists.
pub fn lipschitz_supremum_check<F: PointFunction + ?Sized>(
    f: &F,
    points: &[LaaksoPoint],
    pairs: &[(LaaksoPoint, LaaksoPoint)],
    schedule: &[Rational],
    tol: &Rational,
    exec: Exec,
) -> Result<LipschitzReport> {
    if points.is_empty() && pairs.is_empty() {
        return Err(LaaksoError::Empty("samples"));
    }
    let quotients = par::map(exec, pairs, |(a, b)| {
        let d = distance(a, b);
        (!d.is_zero()).then(|| abs(&(f.eval(a) - f.eval(b))) / d)
    });
    let sup_quotients = quotients
        .into_iter()
        .flatten()
        .max()
        .unwrap_or_else(Rational::zero);
    let derivs = par::map(exec, points, |x| {
        directional_derivative(f, x, schedule, tol)
    });
    let mut sup_derivatives = Rational::zero();
    for r in derivs {
        if let Some(v) = r?.value() {
            sup_derivatives = sup_derivatives.max(abs(v));
        }
    }
    let consistent = sup_derivatives <= &sup_quotients + tol;
    Ok(LipschitzReport {
        sup_quotients,
        sup_derivatives,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::pt;
    use crate::rational::int;

    #[test]
    fn quotient_examples() {
        let x = pt("1/5:01");
        assert_eq!(
            difference_quotient(&Height, &x, &rat(1, 7)).unwrap(),
            int(1)
        );
        assert_eq!(
            difference_quotient(&Constant(int(3)), &x, &rat(-1, 7)).unwrap(),
            int(0)
        );
        let dp = DistanceTo(x.clone());
        assert_eq!(difference_quotient(&dp, &x, &rat(1, 81)).unwrap(), int(1));
        assert!(difference_quotient(&Height, &x, &int(1)).is_err());
        assert!(difference_quotient(&Height, &x, &int(0)).is_err());
    }

    #[test]
    fn height_derivative_exists_everywhere() {
        let sched = triadic_schedule(2, 6);
        for s in ["0:0", "1:1", "1/3:0", "1/3:1", "2/9:10", "1/5:0"] {
            let r = directional_derivative(&Height, &pt(s), &sched, &int(0)).unwrap();
            assert_eq!(
                r.verdict,
                DerivativeVerdict::Exists { value: int(1) },
                "{s}"
            );
        }
    }

    #[test]
    fn distance_function_splits_at_its_center() {
        let p = pt("1/2:0");
        let r =
            directional_derivative(&DistanceTo(p.clone()), &p, &triadic_schedule(3, 6), &int(0))
                .unwrap();
        assert_eq!(
            r.verdict,
            DerivativeVerdict::Split {
                left: int(-1),
                right: int(1)
            }
        );
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["verdict"], "split");
        assert_eq!(json["left"], "-1");
    }

    #[test]
    fn probe_and_lipschitz_on_height() {
        let x = pt("1/5:01");
        let pool = shell_pool(&x, 2, 2);
        assert!(!pool.is_empty());
        let rep = differentiability_probe(&Height, &x, &int(1), &pool, Exec::Sequential).unwrap();
        assert_eq!(rep.sup_ratio, int(0));
        assert!(differentiability_probe(&Height, &x, &int(1), &[], Exec::Sequential).is_err());
        assert!(differentiability_probe(
            &Height,
            &x,
            &int(1),
            std::slice::from_ref(&x),
            Exec::Sequential
        )
        .is_err());

        let pts = vec![pt("1/5:0"), pt("1/2:1"), pt("2/3:01")];
        let pairs: Vec<_> = par::index_pairs(pts.len())
            .into_iter()
            .map(|(i, j)| (pts[i].clone(), pts[j].clone()))
            .collect();
        let sched = triadic_schedule(2, 5);
        let rep =
            lipschitz_supremum_check(&Height, &pts, &pairs, &sched, &int(0), Exec::Sequential)
                .unwrap();
        assert!(rep.sup_quotients <= int(1));
        assert_eq!(rep.sup_derivatives, int(1));
        let rep = lipschitz_supremum_check(
            &Constant(int(2)),
            &pts,
            &pairs,
            &sched,
            &int(0),
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!((rep.sup_quotients, rep.sup_derivatives), (int(0), int(0)));
    }
}
