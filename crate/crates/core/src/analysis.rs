//! Profiles of `d_p` along vertical lines and the closed-form kink tables.
//!
//! Along a vertical line `t -> d_p([t, z])` is piecewise linear with slopes
//! `+-1`. [`profile_dp_on_line`] recovers the pieces exactly: candidate
//! breakpoints come from the gap formulas, and each stretch between
//! candidates is proven linear by the identity `|d(v) - d(u)| = v - u`
//! (vertical moves are 1-Lipschitz, so equality forces linearity). Stretches
//! that fail are split at the unique peak or valley the endpoint values
//! allow, or bisected.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::address::CantorAddress;
use crate::error::{LaaksoError, Result};
use crate::metric::distance;
use crate::par::{self, Exec};
use crate::point::LaaksoPoint;
use crate::rational::{abs, int, serde_rational, to_f64, ExtRational, Rational};
use crate::wormhole::{enumerate_wormhole_heights, gaps};
use crate::HeightInterval;

const MAX_SUBDIVISION: u32 = 8;
/// Levels above this contribute only formula candidates, not all of `J_n`.
const CANDIDATE_LEVEL_CAP: u32 = 5;
pub const MAX_CENSUS_LEVEL: u32 = 12;

/// Which family of lines a [`VerticalLine`] belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LineLabel {
    V0,
    VN(u32),
    VDelta(Vec<u32>),
}

impl LineLabel {
    /// Jump levels separating the line from `p`.
    pub fn levels(&self) -> Vec<u32> {
        match self {
            LineLabel::V0 => Vec::new(),
            LineLabel::VN(n) => vec![*n],
            LineLabel::VDelta(ls) => ls.clone(),
        }
    }

    pub fn from_levels(levels: &[u32]) -> LineLabel {
        match levels {
            [] => LineLabel::V0,
            [n] => LineLabel::VN(*n),
            ls => LineLabel::VDelta(ls.to_vec()),
        }
    }
}

impl fmt::Display for LineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineLabel::V0 => write!(f, "V0"),
            LineLabel::VN(n) => write!(f, "V{n}"),
            LineLabel::VDelta(ls) => {
                let ls: Vec<String> = ls.iter().map(u32::to_string).collect();
                write!(f, "VD{}", ls.join(","))
            }
        }
    }
}

impl Serialize for LineLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn serialize_address<S: Serializer>(
    a: &CantorAddress,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(a)
}

/// A line `{[t, z] : t in [0,1]}` reached from `p` by the jumps in `label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerticalLine {
    #[serde(serialize_with = "serialize_address")]
    pub base_address: CantorAddress,
    pub label: LineLabel,
}

impl VerticalLine {
    pub fn point_at(&self, t: Rational) -> Result<LaaksoPoint> {
        LaaksoPoint::new(t, self.base_address.clone())
    }
}

impl fmt::Display for VerticalLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[z={}]", self.label, self.base_address)
    }
}

fn check_levels(p: &LaaksoPoint, levels: &[u32]) -> Result<()> {
    if levels.first() == Some(&0) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LaaksoError::InvalidLevel(format!(
            "levels must be positive and increasing, got {levels:?}"
        )));
    }
    if let Some(w) = p.wormhole_order().filter(|w| levels.contains(w)) {
        return Err(LaaksoError::InvalidLevel(format!(
            "p is a wormhole of level {w}; that level has no line"
        )));
    }
    Ok(())
}

/// The lines of `V_label^p`: one per representative of `p`, so two when `p` is a wormhole.
pub fn lines(p: &LaaksoPoint, label: &LineLabel) -> Result<Vec<VerticalLine>> {
    let levels = label.levels();
    check_levels(p, &levels)?;
    Ok(p.representatives()
        .into_iter()
        .map(|a| VerticalLine {
            base_address: a.flipped_all(&levels),
            label: label.clone(),
        })
        .collect())
}

fn check_line(p: &LaaksoPoint, line: &VerticalLine) -> Result<()> {
    let levels = line.label.levels();
    check_levels(p, &levels)?;
    let fits = p
        .representatives()
        .iter()
        .any(|a| a.differing_levels(&line.base_address) == levels);
    if fits {
        Ok(())
    } else {
        Err(LaaksoError::InvalidLevel(format!(
            "address {} is not on {} for p = {}",
            line.base_address,
            line.label,
            p.to_spec()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KinkType {
    /// Slopes `+1` then `-1`.
    Peak,
    /// Slopes `-1` then `+1`.
    Valley,
}

impl fmt::Display for KinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KinkType::Peak => "peak",
            KinkType::Valley => "valley",
        })
    }
}

/// `d_p(t) = slope * t + offset` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Piece {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
    pub slope: i8,
    #[serde(with = "serde_rational")]
    pub offset: Rational,
}

impl Piece {
    pub fn value_at(&self, t: &Rational) -> Rational {
        Rational::from_integer(self.slope.into()) * t + &self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Kink {
    #[serde(with = "serde_rational")]
    pub height: Rational,
    pub left_slope: i8,
    pub right_slope: i8,
}

impl Kink {
    pub fn kind(&self) -> KinkType {
        if self.left_slope > 0 {
            KinkType::Peak
        } else {
            KinkType::Valley
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KinkProfile {
    pub line: VerticalLine,
    pub pieces: Vec<Piece>,
    pub kinks: Vec<Kink>,
}

impl KinkProfile {
    pub fn kink_heights(&self) -> Vec<Rational> {
        self.kinks.iter().map(|k| k.height.clone()).collect()
    }

    pub fn kink_at(&self, t: &Rational) -> Option<&Kink> {
        self.kinks.iter().find(|k| &k.height == t)
    }

    /// Exact value of the profile at `t`.
    pub fn value_at(&self, t: &Rational) -> Option<Rational> {
        self.pieces
            .iter()
            .find(|pc| &pc.lo <= t && t <= &pc.hi)
            .map(|pc| pc.value_at(t))
    }

    /// Plot of the profile with kinks marked, as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (480.0, 300.0, 30.0);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for pc in &self.pieces {
            if pts.is_empty() {
                pts.push((to_f64(&pc.lo), to_f64(&pc.value_at(&pc.lo))));
            }
            pts.push((to_f64(&pc.hi), to_f64(&pc.value_at(&pc.hi))));
        }
        let ymax = pts.iter().map(|p| p.1).fold(0.0f64, f64::max).max(1e-9);
        let sx = |t: f64| pad + t * (w - 2.0 * pad);
        let sy = |v: f64| h - pad - v / ymax * (h - 2.0 * pad);
        let poly: Vec<String> = pts
            .iter()
            .map(|(t, v)| format!("{:.2},{:.2}", sx(*t), sy(*v)))
            .collect();
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        s.push_str(&format!("<title>d_p along {}</title>\n", self.line));
        s.push_str(&format!(
            "<line x1=\"{pad}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#888\"/>\n",
            y = h - pad,
            x2 = w - pad
        ));
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            poly.join(" ")
        ));
        for k in &self.kinks {
            let t = to_f64(&k.height);
            let v = self.value_at(&k.height).map(|v| to_f64(&v)).unwrap_or(0.0);
            let color = match k.kind() {
                KinkType::Peak => "#c0392b",
                KinkType::Valley => "#27ae60",
            };
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"><title>{} {}</title></circle>\n",
                sx(t),
                sy(v),
                k.height,
                k.kind()
            ));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn finite(e: &ExtRational) -> Option<&Rational> {
    e.finite()
}

/// Heights where a breakpoint is plausible: `0`, `1`, `p1`, the gap
/// endpoints `p1 +- D_i^{+-}` and their differences, and the level sets of
/// the involved (low) levels.
fn candidate_heights(p1: &Rational, levels: &[u32]) -> Vec<Rational> {
    let mut c: BTreeSet<Rational> = [Rational::zero(), Rational::one(), p1.clone()]
        .into_iter()
        .collect();
    let mut offsets = Vec::new();
    for &n in levels {
        let (up, down) = gaps(p1, n);
        if let Some(u) = finite(&up) {
            offsets.push(u.clone());
        }
        if let Some(d) = finite(&down) {
            offsets.push(-d.clone());
        }
        if let (Some(u), Some(d)) = (finite(&up), finite(&down)) {
            offsets.push(u - d);
        }
        if n <= CANDIDATE_LEVEL_CAP {
            c.extend(
                enumerate_wormhole_heights(n, &HeightInterval::unit()).expect("level is positive"),
            );
        }
    }
    for o in offsets {
        let t = p1 + o;
        if !t.is_negative() && t <= Rational::one() {
            c.insert(t);
        }
    }
    c.into_iter().collect()
}

struct Segment {
    lo: Rational,
    hi: Rational,
    slope: i8,
    offset: Rational,
}

fn linear(u: &Rational, fu: &Rational, v: &Rational, fv: &Rational) -> Option<Segment> {
    let rise = fv - fu;
    (abs(&rise) == v - u).then(|| {
        let slope: i8 = if rise.is_positive() { 1 } else { -1 };
        let offset = fu - Rational::from_integer(slope.into()) * u;
        Segment {
            lo: u.clone(),
            hi: v.clone(),
            slope,
            offset,
        }
    })
}

fn resolve(
    f: &dyn Fn(&Rational) -> Rational,
    (u, fu): (&Rational, &Rational),
    (v, fv): (&Rational, &Rational),
    depth: u32,
    out: &mut Vec<Segment>,
) -> Result<()> {
    if let Some(s) = linear(u, fu, v, fv) {
        out.push(s);
        return Ok(());
    }
    if depth >= MAX_SUBDIVISION {
        return Err(LaaksoError::Verification(format!(
            "no linear piece found on [{u}, {v}]"
        )));
    }
    let two = int(2);
    let peak = (fv - fu + u + v) / &two;
    let valley = (fu - fv + u + v) / &two;
    for t in [peak, valley] {
        if &t <= u || &t >= v {
            continue;
        }
        let ft = f(&t);
        if let (Some(a), Some(b)) = (linear(u, fu, &t, &ft), linear(&t, &ft, v, fv)) {
            out.push(a);
            out.push(b);
            return Ok(());
        }
    }
    let mid = (u + v) / &two;
    let fm = f(&mid);
    resolve(f, (u, fu), (&mid, &fm), depth + 1, out)?;
    resolve(f, (&mid, &fm), (v, fv), depth + 1, out)
}

/// Exact piecewise-linear profile of `t -> d_p([t, z])` on `[0,1]`.
pub fn profile_dp_on_line(p: &LaaksoPoint, line: &VerticalLine) -> Result<KinkProfile> {
    check_line(p, line)?;
    let p = p.canonicalize();
    let mut levels: BTreeSet<u32> = line.label.levels().into_iter().collect();
    levels.extend(p.wormhole_order());
    let levels: Vec<u32> = levels.into_iter().collect();
    let f = |t: &Rational| {
        distance(
            &p,
            &line
                .point_at(t.clone())
                .expect("candidate heights lie in [0,1]"),
        )
    };
    let cands = candidate_heights(p.height(), &levels);
    let values: Vec<Rational> = cands.iter().map(f).collect();
    let mut segs = Vec::new();
    for i in 1..cands.len() {
        resolve(
            &f,
            (&cands[i - 1], &values[i - 1]),
            (&cands[i], &values[i]),
            0,
            &mut segs,
        )?;
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut kinks = Vec::new();
    for s in segs {
        match pieces.last_mut() {
            Some(last) if last.slope == s.slope => last.hi = s.hi,
            Some(last) => {
                kinks.push(Kink {
                    height: s.lo.clone(),
                    left_slope: last.slope,
                    right_slope: s.slope,
                });
                pieces.push(Piece {
                    lo: s.lo,
                    hi: s.hi,
                    slope: s.slope,
                    offset: s.offset,
                });
            }
            None => pieces.push(Piece {
                lo: s.lo,
                hi: s.hi,
                slope: s.slope,
                offset: s.offset,
            }),
        }
    }
    Ok(KinkProfile {
        line: line.clone(),
        pieces,
        kinks,
    })
}

/// Which side of `p1` has no wormhole of the lower level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenSide {
    Below,
    Above,
}

/// Branch of the case analysis that produced an expected kink list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KinkBranch {
    V0,
    /// Only `D_N^+` is finite.
    VnAboveOnly,
    /// Only `D_N^-` is finite.
    VnBelowOnly,
    VnBoth,
    /// All four gaps finite, `D_M^- < D_N^-` and `D_M^+ < D_N^+`.
    DeltaA,
    /// All four finite, `D_M^- < D_N^-` and `D_N^+ < D_M^+`.
    DeltaB,
    /// All four finite, `D_N^- < D_M^-` and `D_M^+ < D_N^+`.
    DeltaC,
    /// Neither level has a wormhole on the open side.
    DeltaBothOpen(OpenSide),
    /// Only level `N` is open and its closed-side gap is the larger one.
    DeltaNOpenNFar(OpenSide),
    /// Only level `N` is open and level `M` reaches further on the closed side.
    DeltaNOpenMFar(OpenSide),
}

impl KinkBranch {
    /// Every branch reachable on a two-level line.
    pub fn delta_branches() -> Vec<KinkBranch> {
        let mut v = vec![KinkBranch::DeltaA, KinkBranch::DeltaB, KinkBranch::DeltaC];
        for side in [OpenSide::Below, OpenSide::Above] {
            v.push(KinkBranch::DeltaBothOpen(side));
            v.push(KinkBranch::DeltaNOpenNFar(side));
            v.push(KinkBranch::DeltaNOpenMFar(side));
        }
        v
    }

    pub fn vn_branches() -> Vec<KinkBranch> {
        vec![
            KinkBranch::VnAboveOnly,
            KinkBranch::VnBelowOnly,
            KinkBranch::VnBoth,
        ]
    }
}

impl fmt::Display for KinkBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &OpenSide| match s {
            OpenSide::Below => "below",
            OpenSide::Above => "above",
        };
        match self {
            KinkBranch::V0 => write!(f, "v0"),
            KinkBranch::VnAboveOnly => write!(f, "vn-above-only"),
            KinkBranch::VnBelowOnly => write!(f, "vn-below-only"),
            KinkBranch::VnBoth => write!(f, "vn-both"),
            KinkBranch::DeltaA => write!(f, "delta-a"),
            KinkBranch::DeltaB => write!(f, "delta-b"),
            KinkBranch::DeltaC => write!(f, "delta-c"),
            KinkBranch::DeltaBothOpen(s) => write!(f, "delta-both-open-{}", side(s)),
            KinkBranch::DeltaNOpenNFar(s) => write!(f, "delta-n-open-n-far-{}", side(s)),
            KinkBranch::DeltaNOpenMFar(s) => write!(f, "delta-n-open-m-far-{}", side(s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectedKinks {
    pub branch: KinkBranch,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub heights: Vec<Rational>,
}

fn vn_kinks(p1: &Rational, up: &ExtRational, down: &ExtRational) -> (KinkBranch, Vec<Rational>) {
    match (finite(up), finite(down)) {
        (Some(u), Some(d)) => (KinkBranch::VnBoth, vec![p1 - d, p1 + u - d, p1 + u]),
        (Some(u), None) => (KinkBranch::VnAboveOnly, vec![p1 + u]),
        (None, Some(d)) => (KinkBranch::VnBelowOnly, vec![p1 - d]),
        (None, None) => {
            unreachable!("every level has a wormhole on some side of an interior height")
        }
    }
}

/// Closed-form kink heights for `p` on a `V0`, `V_N` or two-level line.
///
/// Heights at the ends `0` and `1` are dropped: a profile has no two-sided
/// slope there.
pub fn expected_kinks(p: &LaaksoPoint, line: &VerticalLine) -> Result<ExpectedKinks> {
    check_line(p, line)?;
    let p1 = p.height();
    let (branch, mut hs) = match line.label.levels().as_slice() {
        [] => (KinkBranch::V0, vec![p1.clone()]),
        [n] => {
            let (up, down) = gaps(p1, *n);
            vn_kinks(p1, &up, &down)
        }
        [n, m] => delta_kinks(p1, *n, *m)?,
        ls => return Err(LaaksoError::TooManyLevels(ls.len())),
    };
    hs.retain(|t| t.is_positive() && *t < Rational::one());
    hs.sort();
    hs.dedup();
    Ok(ExpectedKinks {
        branch,
        heights: hs,
    })
}

fn delta_kinks(p1: &Rational, n: u32, m: u32) -> Result<(KinkBranch, Vec<Rational>)> {
    let (nu, nd) = gaps(p1, n);
    let (mu, md) = gaps(p1, m);
    let all = (finite(&nu), finite(&nd), finite(&mu), finite(&md));
    if let (Some(nu), Some(nd), Some(mu), Some(md)) = all {
        let cn = nu - nd;
        let cm = mu - md;
        return Ok(match (md < nd, nu < mu) {
            (true, false) => {
                let (_, hs) = vn_kinks(
                    p1,
                    &ExtRational::Finite(nu.clone()),
                    &ExtRational::Finite(nd.clone()),
                );
                (KinkBranch::DeltaA, hs)
            }
            (true, true) | (false, false) => {
                let branch = if md < nd {
                    KinkBranch::DeltaB
                } else {
                    KinkBranch::DeltaC
                };
                let hs = vec![
                    p1 - nd,
                    p1 + &cn,
                    p1 - md,
                    p1.clone(),
                    p1 + nu,
                    p1 + &cm,
                    p1 + mu,
                ];
                (branch, hs)
            }
            (false, true) => {
                return Err(LaaksoError::Verification(format!(
                    "level {m} gaps enclose level {n} gaps at {p1}, which cannot happen"
                )))
            }
        });
    }
    // One side lacks a level-N wormhole; mirror so the open side is below.
    let (side, sign, near_n, open_n, near_m, open_m) = if !nd.is_finite() || !md.is_finite() {
        (OpenSide::Below, 1, nu, nd, mu, md)
    } else {
        (OpenSide::Above, -1, nd, nu, md, mu)
    };
    let s = Rational::from_integer(sign.into());
    let at = |o: Rational| p1 + &s * o;
    let (Some(dn), Some(dm)) = (near_n.into_finite(), near_m.into_finite()) else {
        return Err(LaaksoError::Verification(format!(
            "levels {n},{m} open on both sides at {p1}"
        )));
    };
    Ok(match (open_n.is_finite(), open_m.into_finite()) {
        (false, None) => (KinkBranch::DeltaBothOpen(side), vec![at(dn.max(dm))]),
        (false, Some(om)) if dn > dm => {
            let _ = om;
            (KinkBranch::DeltaNOpenNFar(side), vec![at(dn)])
        }
        (false, Some(om)) => {
            let hs = vec![at(-om.clone()), p1.clone(), at(dn), at(&dm - &om), at(dm)];
            (KinkBranch::DeltaNOpenMFar(side), hs)
        }
        (true, _) => {
            return Err(LaaksoError::Verification(format!(
                "level {m} open but level {n} closed at {p1}, which cannot happen"
            )))
        }
    })
}

/// `d_p` at `[t, p2 + Delta]` for all of `levels` and for the first two only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParallelValues {
    #[serde(with = "serde_rational")]
    pub value_full: Rational,
    #[serde(with = "serde_rational")]
    pub value_two_level: Rational,
}

pub fn parallel_reduction(p: &LaaksoPoint, levels: &[u32], t: &Rational) -> Result<ParallelValues> {
    if levels.len() < 3 {
        return Err(LaaksoError::InvalidLevel(format!(
            "need at least three levels, got {levels:?}"
        )));
    }
    check_levels(p, levels)?;
    let p = p.canonicalize();
    let full = p.address().flipped_all(levels);
    let two = p.address().flipped_all(&levels[..2]);
    let at = |a: CantorAddress| LaaksoPoint::new(t.clone(), a).map(|x| distance(&p, &x));
    Ok(ParallelValues {
        value_full: at(full)?,
        value_two_level: at(two)?,
    })
}

/// Every line of `V0`, `V_N` and two-level `V_Delta` with levels up to `max_level`.
pub fn census_lines(p: &LaaksoPoint, max_level: u32) -> Result<Vec<VerticalLine>> {
    let skip = p.wormhole_order();
    let levels: Vec<u32> = (1..=max_level).filter(|l| Some(*l) != skip).collect();
    let mut labels = vec![LineLabel::V0];
    labels.extend(levels.iter().map(|&n| LineLabel::VN(n)));
    for (i, &n) in levels.iter().enumerate() {
        labels.extend(
            levels[i + 1..]
                .iter()
                .map(|&m| LineLabel::VDelta(vec![n, m])),
        );
    }
    let mut out = Vec::new();
    for l in &labels {
        out.extend(lines(p, l)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusEntry {
    #[serde(with = "serde_rational")]
    pub height: Rational,
    /// First line (in census order) whose closed form predicts this height.
    pub source_line: String,
    /// Type of the profiled kink on the source line; `None` if the profile has none there.
    pub kink_type: Option<KinkType>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub entries: Vec<CensusEntry>,
    #[serde(skip)]
    pub profiles: Vec<KinkProfile>,
    #[serde(skip)]
    pub expected: Vec<ExpectedKinks>,
}

impl Census {
    pub fn heights(&self) -> Vec<Rational> {
        self.entries.iter().map(|e| e.height.clone()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("height,source_line,kink_type\n");
        for e in &self.entries {
            let kind = e
                .kink_type
                .map_or("unconfirmed".to_string(), |k| k.to_string());
            s.push_str(&format!("{},{},{}\n", e.height, e.source_line, kind));
        }
        s
    }
}

/// Kink heights of `d_p` over all lines with jump levels up to `max_level`.
pub fn nondiff_height_census(p: &LaaksoPoint, max_level: u32, exec: Exec) -> Result<Census> {
    if max_level == 0 || max_level > MAX_CENSUS_LEVEL {
        return Err(LaaksoError::OutOfRange(format!(
            "max_level {max_level} outside 1..={MAX_CENSUS_LEVEL}"
        )));
    }
    let p = p.canonicalize();
    let lines = census_lines(&p, max_level)?;
    let results = par::map(exec, &lines, |l| -> Result<(ExpectedKinks, KinkProfile)> {
        Ok((expected_kinks(&p, l)?, profile_dp_on_line(&p, l)?))
    });
    let mut entries: Vec<CensusEntry> = Vec::new();
    let mut seen = BTreeSet::new();
    let (mut profiles, mut expected) = (Vec::new(), Vec::new());
    for r in results {
        let (exp, prof) = r?;
        for h in &exp.heights {
            if seen.insert(h.clone()) {
                entries.push(CensusEntry {
                    height: h.clone(),
                    source_line: prof.line.to_string(),
                    kink_type: prof.kink_at(h).map(Kink::kind),
                });
            }
        }
        profiles.push(prof);
        expected.push(exp);
    }
    entries.sort_by(|a, b| a.height.cmp(&b.height));
    Ok(Census {
        entries,
        profiles,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::pt;
    use crate::rational::rat;

    fn line(p: &LaaksoPoint, label: LineLabel) -> VerticalLine {
        lines(p, &label).unwrap().remove(0)
    }

    #[test]
    fn v0_single_valley() {
        let p = pt("1/2:0");
        let prof = profile_dp_on_line(&p, &line(&p, LineLabel::V0)).unwrap();
        assert_eq!(
            prof.kinks,
            vec![Kink {
                height: rat(1, 2),
                left_slope: -1,
                right_slope: 1
            }]
        );
        assert_eq!(
            expected_kinks(&p, &prof.line).unwrap().heights,
            vec![rat(1, 2)]
        );
    }

    #[test]
    fn v1_three_kinks() {
        let p = pt("1/2:0");
        let l = line(&p, LineLabel::VN(1));
        assert_eq!(l.base_address.to_string(), "1");
        let prof = profile_dp_on_line(&p, &l).unwrap();
        assert_eq!(prof.kink_heights(), vec![rat(1, 3), rat(1, 2), rat(2, 3)]);
        let kinds: Vec<_> = prof.kinks.iter().map(Kink::kind).collect();
        assert_eq!(
            kinds,
            vec![KinkType::Valley, KinkType::Peak, KinkType::Valley]
        );
        let exp = expected_kinks(&p, &l).unwrap();
        assert_eq!(exp.branch, KinkBranch::VnBoth);
        assert_eq!(exp.heights, prof.kink_heights());
    }

    #[test]
    fn pieces_tile_the_unit_interval() {
        let p = pt("5/81:010");
        for label in [
            LineLabel::V0,
            LineLabel::VN(2),
            LineLabel::VDelta(vec![1, 3]),
        ] {
            let prof = profile_dp_on_line(&p, &line(&p, label)).unwrap();
            assert_eq!(prof.pieces.first().unwrap().lo, int(0));
            assert_eq!(prof.pieces.last().unwrap().hi, int(1));
            for w in prof.pieces.windows(2) {
                assert_eq!(w[0].hi, w[1].lo);
                assert_eq!(w[0].value_at(&w[0].hi), w[1].value_at(&w[1].lo));
                assert_ne!(w[0].slope, w[1].slope);
            }
        }
    }

    #[test]
    fn delta_case_b_has_seven_kinks() {
        let mut hit = false;
        for k in 1..81 {
            let p = LaaksoPoint::new(rat(k, 81), CantorAddress::zeros(3)).unwrap();
            if p.is_wormhole() && [1, 2].contains(&p.wormhole_order().unwrap()) {
                continue;
            }
            let l = line(&p, LineLabel::VDelta(vec![1, 2]));
            let exp = expected_kinks(&p, &l).unwrap();
            if exp.branch == KinkBranch::DeltaB {
                let prof = profile_dp_on_line(&p, &l).unwrap();
                assert_eq!(exp.heights.len(), 7);
                assert_eq!(prof.kink_heights(), exp.heights, "p1 = {}", p.height());
                hit = true;
            }
        }
        assert!(hit);
    }

    #[test]
    fn rejects_three_levels_and_bad_lines() {
        let p = pt("1/2:0");
        let l = line(&p, LineLabel::VDelta(vec![1, 2, 3]));
        assert!(matches!(
            expected_kinks(&p, &l),
            Err(LaaksoError::TooManyLevels(3))
        ));
        let bogus = VerticalLine {
            base_address: CantorAddress::parse("11").unwrap(),
            label: LineLabel::VN(1),
        };
        assert!(profile_dp_on_line(&p, &bogus).is_err());
        assert!(lines(&pt("1/3:0"), &LineLabel::VN(1)).is_err());
        assert_eq!(lines(&pt("1/3:0"), &LineLabel::VN(2)).unwrap().len(), 2);
    }

    #[test]
    fn parallel_values_agree() {
        let p = pt("7/81:01");
        let v = parallel_reduction(&p, &[1, 2, 3], p.height()).unwrap();
        assert_eq!(v.value_full, v.value_two_level);
        assert!(parallel_reduction(&p, &[1, 2], p.height()).is_err());
    }

    #[test]
    fn census_level_one() {
        let c = nondiff_height_census(&pt("1/2:0"), 1, Exec::Sequential).unwrap();
        assert_eq!(c.heights(), vec![rat(1, 3), rat(1, 2), rat(2, 3)]);
        assert!(c.entries.iter().all(|e| e.kink_type.is_some()));
        assert!(c
            .to_csv()
            .starts_with("height,source_line,kink_type\n1/3,V1[z=1],valley\n"));
    }

    #[test]
    fn svg_marks_kinks() {
        let p = pt("1/2:0");
        let prof = profile_dp_on_line(&p, &line(&p, LineLabel::VN(1))).unwrap();
        let svg = prof.to_svg();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
