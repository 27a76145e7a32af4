//! Exact distances and geodesics.
//!
//! A path between two points must jump an odd number of times at every level
//! where their canonical addresses differ, and a level-`i` jump is only
//! possible at a height of `J_i`. A geodesic therefore sweeps a height
//! interval `[a, b]` containing both endpoint heights and meeting every
//! required `J_i`; its length is `2b - 2a - |h(x) - h(y)|`.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::address::CantorAddress;
use crate::error::{LaaksoError, Result};
use crate::interval::HeightInterval;
use crate::point::LaaksoPoint;
use crate::rational::Rational;
use crate::wormhole::{
    level_above, level_at_or_above, level_at_or_below, level_below, level_meets, Direction,
};

pub type EndingDirection = Direction;

/// Levels at which every connecting path must jump an odd number of times.
pub fn required_levels(x: &LaaksoPoint, y: &LaaksoPoint) -> BTreeSet<u32> {
    let (x, y) = (x.canonicalize(), y.canonicalize());
    x.address()
        .differing_levels(y.address())
        .into_iter()
        .collect()
}

fn ordered<'a>(x: &'a LaaksoPoint, y: &'a LaaksoPoint) -> (&'a Rational, &'a Rational) {
    if x.height() <= y.height() {
        (x.height(), y.height())
    } else {
        (y.height(), x.height())
    }
}

/// A level that `[lo, hi]` does not already serve, with its nearest
/// elements below `lo` and above `hi`.
struct Constraint {
    below: Option<Rational>,
    above: Option<Rational>,
}

fn intervals_for_levels(
    lo: &Rational,
    hi: &Rational,
    levels: &BTreeSet<u32>,
) -> Vec<HeightInterval> {
    let constraints: Vec<Constraint> = levels
        .iter()
        .filter(|&&n| !level_meets(n, lo, hi))
        .map(|&n| Constraint {
            below: level_below(lo, n),
            above: level_above(hi, n),
        })
        .collect();

    let mut lower_ends: Vec<Rational> =
        constraints.iter().filter_map(|c| c.below.clone()).collect();
    lower_ends.push(lo.clone());
    lower_ends.sort();
    lower_ends.dedup();

    let mut best: Option<Rational> = None;
    let mut found: Vec<(Rational, Rational)> = Vec::new();
    for a in lower_ends {
        let mut b = hi.clone();
        let mut feasible = true;
        for c in &constraints {
            if c.below.as_ref().is_some_and(|d| *d >= a) {
                continue;
            }
            match &c.above {
                Some(u) if *u > b => b = u.clone(),
                Some(_) => {}
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        let len = &b - &a;
        match &best {
            Some(l) if len > *l => {}
            Some(l) if len == *l => found.push((a, b)),
            _ => {
                best = Some(len);
                found.clear();
                found.push((a, b));
            }
        }
    }
    found.sort();
    found.dedup();
    found
        .into_iter()
        .map(|(a, b)| HeightInterval::new(a, b).expect("candidate interval lies in [0,1]"))
        .collect()
}

/// Every height interval of minimum length that contains both heights and
/// meets `J_i` for each required level `i`.
pub fn minimal_height_intervals(x: &LaaksoPoint, y: &LaaksoPoint) -> Vec<HeightInterval> {
    let (lo, hi) = ordered(x, y);
    let found = intervals_for_levels(lo, hi, &required_levels(x, y));
    assert!(
        !found.is_empty(),
        "[0,1] meets every level, so a minimal interval exists"
    );
    found
}

fn distance_from_interval(x: &LaaksoPoint, y: &LaaksoPoint, iv: &HeightInterval) -> Rational {
    let two = Rational::from_integer(2.into());
    two * iv.length() - (x.height() - y.height()).abs()
}

/// Exact distance `d(x, y)`.
pub fn distance(x: &LaaksoPoint, y: &LaaksoPoint) -> Rational {
    let iv = &minimal_height_intervals(x, y)[0];
    distance_from_interval(x, y, iv)
}

/// One step of a geodesic: a vertical segment or a zero-length wormhole jump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStep {
    Segment {
        from: Rational,
        to: Rational,
        address: CantorAddress,
        direction: Direction,
    },
    Jump {
        level: u32,
        at: Rational,
    },
}

/// A geodesic as alternating vertical segments and wormhole jumps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeodesicPath {
    steps: Vec<PathStep>,
}

impl GeodesicPath {
    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn length(&self) -> Rational {
        self.steps
            .iter()
            .map(|s| match s {
                PathStep::Segment { from, to, .. } => (to - from).abs(),
                PathStep::Jump { .. } => Rational::zero(),
            })
            .sum()
    }

    pub fn jumps(&self) -> Vec<(u32, Rational)> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                PathStep::Jump { level, at } => Some((*level, at.clone())),
                PathStep::Segment { .. } => None,
            })
            .collect()
    }

    pub fn segment_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, PathStep::Segment { .. }))
            .count()
    }

    /// Direction of the last vertical segment.
    pub fn ending(&self) -> Option<Direction> {
        self.steps.iter().rev().find_map(|s| match s {
            PathStep::Segment { direction, .. } => Some(*direction),
            PathStep::Jump { .. } => None,
        })
    }

    /// Number of direction changes in the height trace.
    pub fn turns(&self) -> usize {
        let dirs: Vec<Direction> = self
            .steps
            .iter()
            .filter_map(|s| match s {
                PathStep::Segment { direction, .. } => Some(*direction),
                PathStep::Jump { .. } => None,
            })
            .collect();
        dirs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Checks the structural invariants: segments chain, each jump sits in
    /// its level and flips exactly that bit, and the path runs from `x` to `y`.
    pub fn validate(&self, x: &LaaksoPoint, y: &LaaksoPoint) -> Result<()> {
        let bad = |m: String| Err(LaaksoError::Verification(m));
        let mut height = x.height().clone();
        let mut address = x.canonicalize().address().clone();
        for step in &self.steps {
            match step {
                PathStep::Segment {
                    from,
                    to,
                    address: a,
                    direction,
                } => {
                    if *from != height || *a != address {
                        return bad(format!("segment {from}->{to} does not continue the path"));
                    }
                    let want = if to > from {
                        Direction::Up
                    } else {
                        Direction::Down
                    };
                    if from == to || want != *direction {
                        return bad(format!("segment {from}->{to} has wrong direction"));
                    }
                    height = to.clone();
                }
                PathStep::Jump { level, at } => {
                    if *at != height || crate::wormhole::wormhole_order(at) != Some(*level) {
                        return bad(format!("jump of level {level} at {at} is not a wormhole"));
                    }
                    address = address.flipped(*level);
                }
            }
        }
        let end = LaaksoPoint::new(height, address)?;
        if end != *y {
            return bad(format!("path ends at {end}, expected {y}"));
        }
        Ok(())
    }

    fn reversed(self) -> GeodesicPath {
        let steps = self
            .steps
            .into_iter()
            .rev()
            .map(|s| match s {
                PathStep::Segment {
                    from,
                    to,
                    address,
                    direction,
                } => PathStep::Segment {
                    from: to,
                    to: from,
                    address,
                    direction: direction.reversed(),
                },
                j => j,
            })
            .collect();
        GeodesicPath { steps }
    }
}

impl Serialize for GeodesicPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Seg {
            seg: [String; 2],
            bits: String,
        }
        #[derive(Serialize)]
        struct Jump {
            jump: u32,
            at: String,
        }
        let mut seq = s.serialize_seq(Some(self.steps.len()))?;
        for step in &self.steps {
            match step {
                PathStep::Segment {
                    from, to, address, ..
                } => seq.serialize_element(&Seg {
                    seg: [from.to_string(), to.to_string()],
                    bits: address.to_string(),
                })?,
                PathStep::Jump { level, at } => seq.serialize_element(&Jump {
                    jump: *level,
                    at: at.to_string(),
                })?,
            }
        }
        seq.end()
    }
}

/// First height of `J_n` met along the trace `start -> a -> b -> end`,
/// together with its arc-length position.
fn first_opportunity(
    n: u32,
    start: &Rational,
    a: &Rational,
    b: &Rational,
    end: &Rational,
) -> Option<(Rational, Rational)> {
    if let Some(h) = level_at_or_below(start, n).filter(|h| h >= a) {
        let pos = start - &h;
        return Some((h, pos));
    }
    let leg1 = start - a;
    if let Some(h) = level_at_or_above(a, n).filter(|h| h <= b) {
        let pos = &leg1 + (&h - a);
        return Some((h, pos));
    }
    let leg2 = &leg1 + (b - a);
    level_at_or_below(b, n).filter(|h| h >= end).map(|h| {
        let pos = &leg2 + (b - &h);
        (h, pos)
    })
}

fn synthesize_from_lower(
    lower: &LaaksoPoint,
    upper: &LaaksoPoint,
    iv: &HeightInterval,
) -> GeodesicPath {
    let (a, b) = (iv.lo(), iv.hi());
    let (start, end) = (lower.height(), upper.height());
    let mut jumps: Vec<(Rational, Rational, u32)> = required_levels(lower, upper)
        .into_iter()
        .map(|n| {
            let (h, pos) = first_opportunity(n, start, a, b, end)
                .expect("interval serves every required level");
            (pos, h, n)
        })
        .collect();
    jumps.sort();

    let legs = [
        (start.clone(), a.clone(), Direction::Down),
        (a.clone(), b.clone(), Direction::Up),
        (b.clone(), end.clone(), Direction::Down),
    ];
    let mut steps = Vec::new();
    let mut address = lower.canonicalize().address().clone();
    let mut pending = jumps.into_iter().peekable();
    let mut pos = Rational::zero();
    for (from, to, direction) in legs {
        let leg_end = &pos + (&to - &from).abs();
        let mut cur = from.clone();
        while let Some((jpos, h, n)) = pending.peek().cloned() {
            if jpos > leg_end {
                break;
            }
            pending.next();
            if h != cur {
                steps.push(PathStep::Segment {
                    from: cur.clone(),
                    to: h.clone(),
                    address: address.clone(),
                    direction,
                });
                cur = h.clone();
            }
            steps.push(PathStep::Jump { level: n, at: h });
            address = address.flipped(n);
        }
        if cur != to {
            steps.push(PathStep::Segment {
                from: cur,
                to: to.clone(),
                address: address.clone(),
                direction,
            });
        }
        pos = leg_end;
    }
    GeodesicPath { steps }
}

/// A geodesic from `x` to `y` sweeping `interval`, jumping each required
/// level at its first opportunity along the trace read from the lower endpoint.
pub fn synthesize_geodesic(
    x: &LaaksoPoint,
    y: &LaaksoPoint,
    interval: &HeightInterval,
) -> Result<GeodesicPath> {
    if !minimal_height_intervals(x, y).contains(interval) {
        return Err(LaaksoError::NotMinimal {
            a: interval.lo().to_string(),
            b: interval.hi().to_string(),
        });
    }
    if x.height() <= y.height() {
        Ok(synthesize_from_lower(x, y, interval))
    } else {
        Ok(synthesize_from_lower(y, x, interval).reversed())
    }
}

/// One geodesic per minimal height interval.
pub fn geodesics(x: &LaaksoPoint, y: &LaaksoPoint) -> Vec<(HeightInterval, GeodesicPath)> {
    minimal_height_intervals(x, y)
        .into_iter()
        .map(|iv| {
            let g = synthesize_geodesic(x, y, &iv).expect("interval is minimal");
            (iv, g)
        })
        .collect()
}

/// Final direction of travel into `q` for a geodesic from `p` sweeping `[a, b]`.
fn ending_for(hp: &Rational, hq: &Rational, a: &Rational, b: &Rational) -> Vec<Direction> {
    use std::cmp::Ordering::*;
    match hp.cmp(hq) {
        // p -> a -> b -> q
        Less => vec![if b > hq {
            Direction::Down
        } else {
            Direction::Up
        }],
        // p -> b -> a -> q
        Greater => vec![if a < hq {
            Direction::Up
        } else {
            Direction::Down
        }],
        // both sweeps are geodesics when the endpoints share a height
        Equal => {
            let first = if b > hq {
                Direction::Down
            } else {
                Direction::Up
            };
            let second = if a < hq {
                Direction::Up
            } else {
                Direction::Down
            };
            vec![first, second]
        }
    }
}

/// Directions in which geodesics from `p` can arrive at `q`.
pub fn geodesic_endings(p: &LaaksoPoint, q: &LaaksoPoint) -> Result<BTreeSet<EndingDirection>> {
    if p == q {
        return Err(LaaksoError::SamePoint);
    }
    Ok(minimal_height_intervals(p, q)
        .iter()
        .flat_map(|iv| ending_for(p.height(), q.height(), iv.lo(), iv.hi()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::pt;
    use crate::rational::{int, rat};

    fn iv(a: Rational, b: Rational) -> HeightInterval {
        HeightInterval::new(a, b).unwrap()
    }

    #[test]
    fn required_level_examples() {
        assert_eq!(
            required_levels(&pt("1/2:0"), &pt("1/2:1")),
            BTreeSet::from([1])
        );
        assert_eq!(
            required_levels(&pt("1/4:00"), &pt("1/4:11")),
            BTreeSet::from([1, 2])
        );
        assert!(required_levels(&pt("1/2:10"), &pt("1/2:1")).is_empty());
    }

    #[test]
    fn interval_examples() {
        assert_eq!(
            minimal_height_intervals(&pt("1/2:0"), &pt("1/2:1")),
            vec![iv(rat(1, 3), rat(1, 2)), iv(rat(1, 2), rat(2, 3))]
        );
        assert_eq!(
            minimal_height_intervals(&pt("1/2:0"), &pt("2/3:1")),
            vec![iv(rat(1, 2), rat(2, 3))]
        );
        assert_eq!(
            minimal_height_intervals(&pt("1/5:01"), &pt("1/5:01")),
            vec![HeightInterval::point(rat(1, 5))]
        );
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt("1/2:0"), &pt("1/2:1")), rat(1, 3));
        assert_eq!(distance(&pt("1/2:0"), &pt("2/3:1")), rat(1, 6));
        assert_eq!(distance(&pt("1/2:0"), &pt("1/2:0")), int(0));
        // identified wormhole representatives
        assert_eq!(distance(&pt("1/3:0"), &pt("1/3:1")), int(0));
        // height 0 sees J_1 only at 1/3
        assert_eq!(distance(&pt("0:0"), &pt("0:1")), rat(2, 3));
    }

    #[test]
    fn geodesic_examples() {
        let (x, y) = (pt("1/2:0"), pt("1/2:1"));
        let up = synthesize_geodesic(&x, &y, &iv(rat(1, 2), rat(2, 3))).unwrap();
        assert_eq!(
            serde_json::to_string(&up).unwrap(),
            r#"[{"seg":["1/2","2/3"],"bits":"0"},{"jump":1,"at":"2/3"},{"seg":["2/3","1/2"],"bits":"1"}]"#
        );
        assert_eq!(up.length(), rat(1, 3));
        up.validate(&x, &y).unwrap();
        let down = synthesize_geodesic(&x, &y, &iv(rat(1, 3), rat(1, 2))).unwrap();
        assert_eq!(
            serde_json::to_string(&down).unwrap(),
            r#"[{"seg":["1/2","1/3"],"bits":"0"},{"jump":1,"at":"1/3"},{"seg":["1/3","1/2"],"bits":"1"}]"#
        );
        let empty = synthesize_geodesic(&x, &x, &HeightInterval::point(rat(1, 2))).unwrap();
        assert!(empty.steps().is_empty());
        assert_eq!(empty.length(), int(0));
        assert!(synthesize_geodesic(&x, &y, &iv(rat(1, 3), rat(2, 3))).is_err());
    }

    #[test]
    fn reversed_geodesic_runs_from_x() {
        let (x, y) = (pt("8/9:011"), pt("1/10:1"));
        for (iv, g) in geodesics(&x, &y) {
            g.validate(&x, &y).unwrap();
            assert_eq!(g.length(), distance(&x, &y), "interval {iv}");
            assert!(g.turns() <= 2);
        }
    }

    #[test]
    fn ending_examples() {
        let p = pt("1/2:0");
        assert_eq!(
            geodesic_endings(&p, &pt("1/2:1")).unwrap(),
            BTreeSet::from([Direction::Up, Direction::Down])
        );
        assert_eq!(
            geodesic_endings(&p, &pt("2/3:1")).unwrap(),
            BTreeSet::from([Direction::Up])
        );
        assert_eq!(
            geodesic_endings(&p, &pt("1/3:1")).unwrap(),
            BTreeSet::from([Direction::Down])
        );
        assert_eq!(geodesic_endings(&p, &p), Err(LaaksoError::SamePoint));
    }
}
