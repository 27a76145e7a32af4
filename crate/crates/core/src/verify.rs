//! Self-checks behind `laakso verify` and the acceptance tests.
//!
//! Each suite runs a batch of exact checks at a configurable scale and
//! returns one [`CheckRow`] per check. Rows carry the acceptance criterion
//! they belong to and a `key=value` detail string with exact values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::address::CantorAddress;
use crate::analysis::{
    expected_kinks, lines, nondiff_height_census, parallel_reduction, profile_dp_on_line,
    KinkBranch, KinkProfile, KinkType, LineLabel,
};
use crate::calculus::{
    difference_quotient, directional_derivative, triadic_schedule, PointFunction,
};
use crate::constructions::{
    build_lemma31_function, build_prop36_function, build_prop36_one_sided, engineered_non_s_height,
    porosity_witness_for_s, Construction, ThetaSchedule,
};
use crate::error::{LaaksoError, Result};
use crate::metric::{distance, geodesic_endings, geodesics, minimal_height_intervals};
use crate::oracle::{
    ball_measure, build_level_graph, graph_distance, regularity_scan, MAX_RESOLUTION,
};
use crate::par::{self, Exec};
use crate::point::LaaksoPoint;
use crate::rational::{inv_pow3, rat, Rational};
use crate::sampling::{
    random_address, random_height, random_interior_point, random_point, rng, SeededRng,
};
use crate::wormhole::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Oracle,
    Kinks,
    Constructions,
    Porosity,
    Regularity,
    Parallel,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Oracle,
        Suite::Kinks,
        Suite::Constructions,
        Suite::Porosity,
        Suite::Regularity,
        Suite::Parallel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Kinks => "kinks",
            Suite::Constructions => "constructions",
            Suite::Porosity => "porosity",
            Suite::Regularity => "regularity",
            Suite::Parallel => "parallel",
        }
    }

    /// What `depth` means for the suite, and its default.
    ///
    /// oracle: graph resolution for the all-pairs check (random pairs use one more);
    /// kinks: highest jump level; constructions: deepest construction level;
    /// porosity: largest `N`; regularity: graph resolution; parallel: census level.
    pub fn default_depth(self) -> u32 {
        match self {
            Suite::Oracle => 2,
            Suite::Kinks => 4,
            Suite::Constructions => 8,
            Suite::Porosity => 4,
            Suite::Regularity => 6,
            Suite::Parallel => 3,
        }
    }

    fn depth_range(self) -> (u32, u32) {
        match self {
            Suite::Oracle => (1, MAX_RESOLUTION),
            Suite::Kinks => (2, 6),
            Suite::Constructions => (4, 16),
            Suite::Porosity => (1, 12),
            Suite::Regularity => (5, MAX_RESOLUTION),
            Suite::Parallel => (1, 5),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = LaaksoError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| LaaksoError::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub depth: Option<u32>,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            depth: None,
            seed: 7,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckRow {
    pub criterion: Option<u8>,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

fn row(
    criterion: impl Into<Option<u8>>,
    check: &str,
    passed: bool,
    detail: impl Into<String>,
) -> CheckRow {
    CheckRow {
        criterion: criterion.into(),
        check: check.to_string(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub depth: u32,
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CheckRow> {
        self.rows.iter().filter(|r| !r.passed).collect()
    }

    /// Rows belonging to acceptance criterion `c`.
    pub fn criterion(&self, c: u8) -> Vec<&CheckRow> {
        self.rows
            .iter()
            .filter(|r| r.criterion == Some(c))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,criterion,check,passed,detail\n");
        for r in &self.rows {
            let crit = r.criterion.map_or(String::new(), |c| c.to_string());
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.suite,
                crit,
                r.check,
                if r.passed { "pass" } else { "fail" },
                r.detail.replace(',', ";")
            ));
        }
        s
    }
}

/// Runs one suite. Errors only for an out-of-range depth; failed checks are rows.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let depth = cfg.depth.unwrap_or(suite.default_depth());
    let (lo, hi) = suite.depth_range();
    if depth < lo || depth > hi {
        return Err(LaaksoError::OutOfRange(format!(
            "depth {depth} for suite {suite} outside {lo}..={hi}"
        )));
    }
    let rows = match suite {
        Suite::Oracle => oracle_suite(depth, cfg),
        Suite::Kinks => kinks_suite(depth, cfg),
        Suite::Constructions => constructions_suite(depth, cfg),
        Suite::Porosity => porosity_suite(depth, cfg),
        Suite::Regularity => regularity_suite(depth, cfg),
        Suite::Parallel => parallel_suite(depth, cfg),
    };
    Ok(SuiteReport {
        suite,
        depth,
        seed: cfg.seed,
        rows,
    })
}

fn error_row(criterion: impl Into<Option<u8>>, check: &str, e: &LaaksoError) -> CheckRow {
    row(criterion, check, false, format!("error={e}"))
}

// ---------------------------------------------------------------- oracle

fn oracle_suite(m: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    match build_level_graph(m) {
        Ok(g) => {
            let n = g.vertex_count();
            let per_source = par::map_range(cfg.exec, n, |i| {
                let dist = g.distances_from(i);
                let pi = g.vertex_point(i);
                (i + 1..n)
                    .filter(|&j| g.units_to_rational(dist[j]) != distance(&pi, &g.vertex_point(j)))
                    .count()
            });
            let bad: usize = per_source.iter().sum();
            let pairs = n * (n - 1) / 2;
            rows.push(row(
                1,
                "all-pairs",
                bad == 0,
                format!("m={m} vertices={n} pairs={pairs} mismatches={bad}"),
            ));
        }
        Err(e) => rows.push(error_row(1, "all-pairs", &e)),
    }
    let m2 = (m + 1).min(MAX_RESOLUTION);
    match build_level_graph(m2) {
        Ok(g) => {
            let mut r = rng(cfg.seed);
            let n = g.vertex_count();
            let pairs: Vec<(usize, usize)> = (0..500)
                .map(|_| (r.gen_range(0..n), r.gen_range(0..n)))
                .collect();
            let bad = par::map(cfg.exec, &pairs, |&(i, j)| {
                let (x, y) = (g.vertex_point(i), g.vertex_point(j));
                graph_distance(&g, &x, &y).map_or(true, |d| d != distance(&x, &y))
            })
            .into_iter()
            .filter(|b| *b)
            .count();
            rows.push(row(
                1,
                "random-pairs",
                bad == 0,
                format!("m={m2} pairs=500 mismatches={bad}"),
            ));
        }
        Err(e) => rows.push(error_row(1, "random-pairs", &e)),
    }
    rows.extend(geodesic_checks(cfg));
    rows
}

#[derive(Default)]
struct GeodesicTally {
    pairs: usize,
    unequal_intervals: usize,
    formula_mismatch: usize,
    geodesics: usize,
    bad_length: usize,
    invalid: usize,
    jump_bound_applicable: usize,
    jump_bound_violations: usize,
    max_low_jumps: usize,
}

/// Minimal-interval law and the low-level jump bound on random pairs.
fn geodesic_checks(cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut r = rng(cfg.seed ^ 0x9e37);
    let pairs: Vec<(LaaksoPoint, LaaksoPoint)> = (0..1000)
        .map(|_| {
            let (dx, dy) = (r.gen_range(0..=4), r.gen_range(0..=4));
            (random_point(&mut r, dx, 162), random_point(&mut r, dy, 162))
        })
        .collect();
    let per_pair = par::map(cfg.exec, &pairs, |(x, y)| {
        let mut t = GeodesicTally {
            pairs: 1,
            ..Default::default()
        };
        let d = distance(x, y);
        let ivs = minimal_height_intervals(x, y);
        if ivs.iter().any(|iv| iv.length() != ivs[0].length()) {
            t.unequal_intervals += 1;
        }
        let dh = (x.height() - y.height()).abs();
        if ivs
            .iter()
            .any(|iv| iv.length() * Rational::from_integer(2.into()) - &dh != d)
        {
            t.formula_mismatch += 1;
        }
        // N with 1/3^N <= d < 1/3^(N-1), when 0 < d < 1
        let n = (d.is_positive() && d < Rational::one())
            .then(|| (1..).find(|&n| inv_pow3(n) <= d).unwrap());
        for (_, g) in geodesics(x, y) {
            t.geodesics += 1;
            if g.length() != d {
                t.bad_length += 1;
            }
            if g.validate(x, y).is_err() {
                t.invalid += 1;
            }
            if let Some(n) = n {
                t.jump_bound_applicable += 1;
                let low: BTreeSet<(u32, Rational)> =
                    g.jumps().into_iter().filter(|(l, _)| *l < n).collect();
                t.max_low_jumps = t.max_low_jumps.max(low.len());
                if low.len() > 1 {
                    t.jump_bound_violations += 1;
                }
            }
        }
        t
    });
    let mut t = GeodesicTally::default();
    for p in per_pair {
        t.pairs += p.pairs;
        t.unequal_intervals += p.unequal_intervals;
        t.formula_mismatch += p.formula_mismatch;
        t.geodesics += p.geodesics;
        t.bad_length += p.bad_length;
        t.invalid += p.invalid;
        t.jump_bound_applicable += p.jump_bound_applicable;
        t.jump_bound_violations += p.jump_bound_violations;
        t.max_low_jumps = t.max_low_jumps.max(p.max_low_jumps);
    }
    vec![
        row(
            2,
            "interval-lengths",
            t.unequal_intervals == 0 && t.formula_mismatch == 0,
            format!(
                "pairs={} unequal={} formula_mismatches={}",
                t.pairs, t.unequal_intervals, t.formula_mismatch
            ),
        ),
        row(
            2,
            "geodesic-lengths",
            t.bad_length == 0 && t.invalid == 0 && t.geodesics >= t.pairs,
            format!(
                "geodesics={} wrong_length={} invalid={}",
                t.geodesics, t.bad_length, t.invalid
            ),
        ),
        row(
            12,
            "low-level-jumps",
            t.jump_bound_violations == 0 && t.jump_bound_applicable > 0,
            format!(
                "geodesics={} applicable={} violations={} max_low_level_jumps={}",
                t.geodesics, t.jump_bound_applicable, t.jump_bound_violations, t.max_low_jumps
            ),
        ),
    ]
}

// ---------------------------------------------------------------- kinks

fn profile_d(p: &LaaksoPoint, profile: &KinkProfile, t: &Rational) -> Rational {
    distance(
        p,
        &profile
            .line
            .point_at(t.clone())
            .expect("probe heights lie in [0,1]"),
    )
}

/// Outcome of checking every kink of a profile directly against the metric.
#[derive(Default)]
struct KinkCheck {
    peaks: usize,
    valleys: usize,
    failures: Vec<String>,
}

/// Peaks need geodesics arriving both upward and downward and quotients
/// `-1` on both sides; valleys need quotients `+1` on both sides.
fn check_kinks(p: &LaaksoPoint, profile: &KinkProfile, out: &mut KinkCheck) {
    let ks = &profile.kinks;
    for (i, k) in ks.iter().enumerate() {
        let lo = if i == 0 {
            Rational::zero()
        } else {
            ks[i - 1].height.clone()
        };
        let hi = ks
            .get(i + 1)
            .map_or_else(Rational::one, |n| n.height.clone());
        let s = (&k.height - &lo).min(&hi - &k.height) / Rational::from_integer(2.into());
        let at = profile_d(p, profile, &k.height);
        let left = (profile_d(p, profile, &(&k.height - &s)) - &at) / &s;
        let right = (profile_d(p, profile, &(&k.height + &s)) - &at) / &s;
        let ok = match k.kind() {
            KinkType::Peak => {
                out.peaks += 1;
                let q = profile
                    .line
                    .point_at(k.height.clone())
                    .expect("kink heights lie in [0,1]");
                let endings = geodesic_endings(p, &q).unwrap_or_default();
                endings == BTreeSet::from([Direction::Up, Direction::Down])
                    && left == -Rational::one()
                    && right == left
            }
            KinkType::Valley => {
                out.valleys += 1;
                left == Rational::one() && right == left
            }
        };
        if !ok {
            out.failures.push(format!("{}@{}", profile.line, k.height));
        }
    }
}

fn sorted(mut v: Vec<Rational>) -> Vec<Rational> {
    v.sort();
    v
}

fn first_failure(v: &[String]) -> String {
    v.first().map_or(String::new(), |f| format!(" first={f}"))
}

fn kinks_suite(depth: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let mut r = rng(cfg.seed ^ 0x51);
    let mut profiled: Vec<(LaaksoPoint, KinkProfile)> = Vec::new();

    // single kink at h(p) on V0
    let pts: Vec<LaaksoPoint> = (0..20)
        .map(|_| random_interior_point(&mut r, 5, 486).canonicalize())
        .collect();
    let v0 = par::map(cfg.exec, &pts, |p| -> Result<Vec<KinkProfile>> {
        lines(p, &LineLabel::V0)?
            .iter()
            .map(|l| profile_dp_on_line(p, l))
            .collect()
    });
    let (mut bad, mut count) = (Vec::new(), 0);
    for (p, res) in pts.iter().zip(v0) {
        match res {
            Ok(profiles) => {
                for prof in profiles {
                    count += 1;
                    let ok = matches!(prof.kinks.as_slice(),
                        [k] if &k.height == p.height() && k.left_slope == -1 && k.right_slope == 1);
                    if !ok {
                        bad.push(p.to_spec());
                    }
                    profiled.push((p.clone(), prof));
                }
            }
            Err(e) => bad.push(format!("{}:{e}", p.to_spec())),
        }
    }
    rows.push(row(
        3,
        "v0-single-kink",
        bad.is_empty(),
        format!(
            "points=20 lines={count} failures={}{}",
            bad.len(),
            first_failure(&bad)
        ),
    ));

    // closed-form V_N kink sets
    let pts: Vec<LaaksoPoint> = (0..50)
        .map(|_| random_interior_point(&mut r, 5, 486).canonicalize())
        .collect();
    let jobs: Vec<(LaaksoPoint, LineLabel)> = pts
        .iter()
        .flat_map(|p| {
            (1..=depth.min(4))
                .filter(move |n| Some(*n) != p.wormhole_order())
                .map(move |n| (p.clone(), LineLabel::VN(n)))
        })
        .collect();
    let (res, tally) = compare_lines(&jobs, cfg.exec, &mut profiled);
    let hits: Vec<String> = KinkBranch::vn_branches()
        .iter()
        .map(|b| format!("{b}={}", tally.get(b).copied().unwrap_or(0)))
        .collect();
    rows.push(row(
        4,
        "vn-closed-form",
        res.failures.is_empty(),
        format!(
            "points=50 lines={} mismatches={} {}{}",
            res.lines,
            res.failures.len(),
            hits.join(" "),
            first_failure(&res.failures)
        ),
    ));

    // two-level lines over an engineered pool
    let jobs = delta_pool(&mut r, depth.min(4));
    let (res, tally) = compare_lines(&jobs, cfg.exec, &mut profiled);
    rows.push(row(
        5,
        "vdelta-closed-form",
        res.failures.is_empty(),
        format!(
            "lines={} mismatches={} sizes={:?}{}",
            res.lines,
            res.failures.len(),
            res.sizes,
            first_failure(&res.failures)
        ),
    ));
    for b in KinkBranch::delta_branches() {
        let hit = tally.get(&b).copied().unwrap_or(0);
        rows.push(row(
            5,
            &format!("branch-{b}"),
            hit > 0,
            format!("hits={hit}"),
        ));
    }

    // lines with three or more levels reduce to their first two
    let triples: Vec<(LaaksoPoint, Vec<u32>, Rational)> = (0..1000)
        .map(|_| {
            let p = random_point(&mut r, 6, 486).canonicalize();
            let mut pool: Vec<u32> = (1..=6).filter(|l| Some(*l) != p.wormhole_order()).collect();
            pool.shuffle(&mut r);
            let k = r.gen_range(3..=4);
            let mut levels = pool[..k].to_vec();
            levels.sort();
            (p, levels, random_height(&mut r, 486, 0, 486))
        })
        .collect();
    let bad: Vec<String> = par::map(
        cfg.exec,
        &triples,
        |(p, levels, t)| match parallel_reduction(p, levels, t) {
            Ok(v) if v.value_full == v.value_two_level => None,
            Ok(v) => Some(format!(
                "{}:{levels:?}@{t}:{}!={}",
                p.to_spec(),
                v.value_full,
                v.value_two_level
            )),
            Err(e) => Some(format!("{}:{e}", p.to_spec())),
        },
    )
    .into_iter()
    .flatten()
    .collect();
    rows.push(row(
        6,
        "parallel-lines",
        bad.is_empty(),
        format!(
            "triples=1000 mismatches={}{}",
            bad.len(),
            first_failure(&bad)
        ),
    ));

    // every kink found above, checked against the metric directly
    let checks = par::map(cfg.exec, &profiled, |(p, prof)| {
        let mut c = KinkCheck::default();
        check_kinks(p, prof, &mut c);
        c
    });
    let mut all = KinkCheck::default();
    for c in checks {
        all.peaks += c.peaks;
        all.valleys += c.valleys;
        all.failures.extend(c.failures);
    }
    rows.push(row(
        7,
        "kink-geodesics",
        all.failures.is_empty() && all.peaks > 0 && all.valleys > 0,
        format!(
            "peaks={} valleys={} failures={}{}",
            all.peaks,
            all.valleys,
            all.failures.len(),
            first_failure(&all.failures)
        ),
    ));

    rows.extend(census_checks(&mut r, depth.min(4), cfg.exec));
    rows
}

#[derive(Default)]
struct LineComparison {
    lines: usize,
    failures: Vec<String>,
    sizes: BTreeSet<usize>,
}

/// Profiles every line of every job and compares its kinks with the closed form.
fn compare_lines(
    jobs: &[(LaaksoPoint, LineLabel)],
    exec: Exec,
    profiled: &mut Vec<(LaaksoPoint, KinkProfile)>,
) -> (LineComparison, BTreeMap<KinkBranch, usize>) {
    let results = par::map(
        exec,
        jobs,
        |(p, label)| -> Result<Vec<(KinkBranch, Vec<Rational>, KinkProfile)>> {
            lines(p, label)?
                .iter()
                .map(|l| {
                    let e = expected_kinks(p, l)?;
                    Ok((e.branch, e.heights, profile_dp_on_line(p, l)?))
                })
                .collect()
        },
    );
    let mut out = LineComparison::default();
    let mut tally = BTreeMap::new();
    for ((p, label), res) in jobs.iter().zip(results) {
        match res {
            Ok(items) => {
                for (branch, heights, prof) in items {
                    out.lines += 1;
                    *tally.entry(branch).or_insert(0) += 1;
                    out.sizes.insert(heights.len());
                    if sorted(heights) != prof.kink_heights() {
                        out.failures.push(format!("{}:{}", p.to_spec(), prof.line));
                    }
                    profiled.push((p.clone(), prof));
                }
            }
            Err(e) => out.failures.push(format!("{}:{label}:{e}", p.to_spec())),
        }
    }
    (out, tally)
}

/// Up to four lines per two-level branch, drawn from every height `k/243`
/// and every level pair up to `max_level`.
fn delta_pool(r: &mut SeededRng, max_level: u32) -> Vec<(LaaksoPoint, LineLabel)> {
    let mut by_branch: BTreeMap<KinkBranch, Vec<(LaaksoPoint, LineLabel)>> = BTreeMap::new();
    for k in 1..243i64 {
        let p = LaaksoPoint::new(rat(k, 243), random_address(r, 5))
            .expect("interior height")
            .canonicalize();
        for n in 1..max_level {
            for m in n + 1..=max_level {
                let label = LineLabel::VDelta(vec![n, m]);
                let Ok(ls) = lines(&p, &label) else { continue };
                if let Ok(e) = expected_kinks(&p, &ls[0]) {
                    by_branch
                        .entry(e.branch)
                        .or_default()
                        .push((p.clone(), label));
                }
            }
        }
    }
    let mut pool = Vec::new();
    for (_, mut v) in by_branch {
        v.shuffle(r);
        pool.extend(v.into_iter().take(4));
    }
    pool
}

fn census_checks(r: &mut SeededRng, max_level: u32, exec: Exec) -> Vec<CheckRow> {
    let pts: Vec<LaaksoPoint> = (0..4)
        .map(|_| random_interior_point(r, 5, 243).canonicalize())
        .collect();
    let probes: Vec<Rational> = (0..10).map(|_| random_height(r, 1000, 1, 999)).collect();
    let step = inv_pow3(16);
    let mut rows = Vec::new();
    let (mut entries, mut unconfirmed, mut stray, mut mismatched, mut probed) = (0, 0, 0, 0, 0);
    let mut failures = Vec::new();
    for p in &pts {
        let census = match nondiff_height_census(p, max_level, exec) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{}:{e}", p.to_spec()));
                continue;
            }
        };
        entries += census.entries.len();
        unconfirmed += census
            .entries
            .iter()
            .filter(|e| e.kink_type.is_none())
            .count();
        let heights: BTreeSet<Rational> = census.heights().into_iter().collect();
        for prof in &census.profiles {
            stray += prof
                .kinks
                .iter()
                .filter(|k| !heights.contains(&k.height))
                .count();
            for t in probes.iter().filter(|t| !heights.contains(t)) {
                probed += 1;
                let at = profile_d(p, prof, t);
                let up = profile_d(p, prof, &(t + &step)) - &at;
                let down = &at - profile_d(p, prof, &(t - &step));
                if up != down || up.abs() != step {
                    mismatched += 1;
                    failures.push(format!("{}:{}@{t}", p.to_spec(), prof.line));
                }
            }
        }
    }
    rows.push(row(
        13,
        "census",
        failures.is_empty() && unconfirmed == 0 && stray == 0 && entries > 0,
        format!(
            "points={} max_level={max_level} heights={entries} unconfirmed={unconfirmed} unlisted_kinks={stray} probes={probed} slope_mismatches={mismatched}{}",
            pts.len(),
            first_failure(&failures)
        ),
    ));
    rows
}

// ---------------------------------------------------------------- constructions

fn witness_quotients(c: &Construction) -> Vec<Rational> {
    let fx = c.eval(&c.center);
    c.witnesses
        .iter()
        .map(|w| (c.eval(&w.point) - &fx) / distance(&c.center, &w.point))
        .collect()
}

fn constructions_suite(depth: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let mut r = rng(cfg.seed ^ 0x31);
    let half = rat(1, 2);

    let mut centers = vec![
        LaaksoPoint::parse("1/3:1").expect("literal"),
        LaaksoPoint::parse("0:0").expect("literal"),
    ];
    centers.extend((0..8).map(|_| random_interior_point(&mut r, 3, 486).canonicalize()));
    let results = par::map(
        cfg.exec,
        &centers,
        |x| -> Result<(Rational, Vec<Rational>, bool, usize)> {
            let start = x.wormhole_order().map_or(1, |w| w + 1);
            let c = build_lemma31_function(x, start, depth)?;
            let d = directional_derivative(
                &c,
                x,
                &triadic_schedule(start + 1, depth + 4),
                &Rational::zero(),
            )?;
            let value = d
                .value()
                .cloned()
                .unwrap_or_else(|| Rational::from_integer((-1).into()));
            let pw = c.function.pairwise_lipschitz(Exec::Sequential);
            Ok((value, witness_quotients(&c), pw.within_bound, pw.pairs))
        },
    );
    let (mut deriv_bad, mut quot_bad, mut lip_bad, mut witnesses, mut pairs) = (0, 0, 0, 0, 0);
    let mut errors = Vec::new();
    for (x, res) in centers.iter().zip(results) {
        match res {
            Ok((v, qs, lip, n)) => {
                deriv_bad += usize::from(!v.is_zero());
                witnesses += qs.len();
                quot_bad += qs.iter().filter(|q| **q != half).count();
                lip_bad += usize::from(!lip);
                pairs += n;
            }
            Err(e) => errors.push(format!("{}:{e}", x.to_spec())),
        }
    }
    rows.push(row(
        8,
        "zero-derivative",
        deriv_bad == 0 && errors.is_empty(),
        format!(
            "centers={} nonzero={deriv_bad}{}",
            centers.len(),
            first_failure(&errors)
        ),
    ));
    rows.push(row(
        8,
        "half-quotients",
        quot_bad == 0 && witnesses > 0,
        format!("witnesses={witnesses} not_half={quot_bad}"),
    ));
    rows.push(row(
        8,
        "lipschitz",
        lip_bad == 0 && errors.is_empty(),
        format!("sample_pairs={pairs} over_bound={lip_bad}"),
    ));

    for (name, x, sigma) in band_witness_centers() {
        rows.extend(band_witness_rows(&name, &x, sigma, depth));
    }
    for (name, x) in [("end0", "0:01"), ("end1", "1:1")] {
        rows.extend(one_sided_rows(
            name,
            &LaaksoPoint::parse(x).expect("literal"),
            depth,
        ));
    }
    rows
}

/// The construction at height 0 or 1, which has only the short side.
fn one_sided_rows(name: &str, x: &LaaksoPoint, depth: u32) -> Vec<CheckRow> {
    let check = |s: &str| format!("{name}-{s}");
    let c = match build_prop36_one_sided(x, 1, depth) {
        Ok(c) => c,
        Err(e) => return vec![error_row(9, &check("build"), &e)],
    };
    let sig = if x.height().is_zero() {
        Rational::one()
    } else {
        -Rational::one()
    };
    let upper: Vec<Rational> = (1..=depth + 2)
        .filter_map(|j| difference_quotient(&c, x, &(&sig * inv_pow3(j))).ok())
        .collect();
    let qs = witness_quotients(&c);
    let pw = c.function.pairwise_lipschitz(Exec::Sequential);
    vec![
        row(
            9,
            &check("upper-quotient"),
            upper.len() == depth as usize + 2 && upper.iter().all(|q| *q == sig),
            format!("steps={} values={}", upper.len(), dedup_join(&upper)),
        ),
        row(
            9,
            &check("half-quotients"),
            !qs.is_empty() && qs.iter().all(|q| *q == rat(1, 2)),
            format!("witnesses={} values={}", qs.len(), dedup_join(&qs)),
        ),
        row(
            9,
            &check("lipschitz"),
            pw.within_bound,
            format!("sample_pairs={} max_ratio={}", pw.pairs, pw.max_ratio),
        ),
    ]
}

fn band_witness_centers() -> Vec<(String, LaaksoPoint, i8)> {
    let mut v = Vec::new();
    for terms in [2, 3] {
        let h = engineered_non_s_height(terms);
        let addr = CantorAddress::parse("01").expect("literal");
        v.push((
            format!("engineered{terms}"),
            LaaksoPoint::new(h.clone(), addr.clone()).expect("interior"),
            1,
        ));
        v.push((
            format!("mirror{terms}"),
            LaaksoPoint::new(Rational::one() - h, addr).expect("interior"),
            -1,
        ));
    }
    v
}

fn band_witness_rows(name: &str, x: &LaaksoPoint, sigma: i8, depth: u32) -> Vec<CheckRow> {
    let check = |s: &str| format!("{name}-{s}");
    let schedule = match ThetaSchedule::select(x.height(), sigma, 1, depth) {
        Ok(s) => s,
        Err(e) => return vec![error_row(9, &check("schedule"), &e)],
    };
    let c = match build_prop36_function(x, &schedule) {
        Ok(c) => c,
        Err(e) => return vec![error_row(9, &check("build"), &e)],
    };
    let mut rows = Vec::new();
    let theta_ok = schedule.check().is_ok()
        && (0..schedule.levels.len()).all(|k| schedule.theta[k] == schedule.theta_bound(k))
        && (schedule.fallback || schedule.thinning_holds());
    rows.push(row(
        9,
        &check("theta-schedule"),
        theta_ok,
        format!(
            "levels={:?} min_theta={} fallback={}",
            schedule.levels,
            schedule.min_theta(),
            schedule.fallback
        ),
    ));

    // quotients on the short side are exactly +-1
    let sig = Rational::from_integer(sigma.into());
    let near0 = &schedule.near[0];
    let mut upper = Vec::new();
    for j in 0..8 {
        match difference_quotient(&c, x, &(&sig * near0 * inv_pow3(j))) {
            Ok(q) => upper.push(q),
            Err(e) => return vec![error_row(9, &check("upper-quotient"), &e)],
        }
    }
    rows.push(row(
        9,
        &check("upper-quotient"),
        upper.iter().all(|q| q == &sig),
        format!("steps=8 sigma={sigma} values={}", dedup_join(&upper)),
    ));

    // quotients on the long side lie between min theta and 1
    let far0 = &schedule.far[0];
    let mut lower = Vec::new();
    for j in 0..8 {
        if let Ok(q) = difference_quotient(&c, x, &(-&sig * far0 * inv_pow3(j))) {
            lower.push(&q * &sig);
        }
    }
    let lo = schedule.min_theta();
    rows.push(row(
        9,
        &check("lower-quotient"),
        !lower.is_empty() && lower.iter().all(|q| *q >= lo && *q <= Rational::one()),
        format!(
            "steps={} min={} max={}",
            lower.len(),
            lower.iter().min().cloned().unwrap_or_default(),
            lower.iter().max().cloned().unwrap_or_default()
        ),
    ));

    let qs = witness_quotients(&c);
    rows.push(row(
        9,
        &check("half-quotients"),
        !qs.is_empty() && qs.iter().all(|q| *q == rat(1, 2)),
        format!("witnesses={} values={}", qs.len(), dedup_join(&qs)),
    ));

    // f(u_k) = near_k = f(y_k) and d(y_l, y_k) = 2 near_l for k > l
    let mut structural = true;
    for (k, w) in c.witnesses.iter().enumerate() {
        let u = x
            .with_address(x.address().clone())
            .at_height(x.height() + &sig * &schedule.near[k]);
        structural &=
            u.is_ok_and(|u| c.eval(&u) == schedule.near[k]) && c.eval(&w.point) == schedule.near[k];
        for (l, v) in c.witnesses.iter().enumerate().take(k) {
            structural &= distance(&v.point, &w.point)
                == &schedule.near[l] * Rational::from_integer(2.into());
        }
    }
    rows.push(row(
        9,
        &check("jump-structure"),
        structural,
        format!("witnesses={}", c.witnesses.len()),
    ));

    let pw = c.function.pairwise_lipschitz(Exec::Sequential);
    rows.push(row(
        9,
        &check("lipschitz"),
        pw.within_bound,
        format!("sample_pairs={} max_ratio={}", pw.pairs, pw.max_ratio),
    ));
    rows
}

fn dedup_join(v: &[Rational]) -> String {
    let set: BTreeSet<&Rational> = v.iter().collect();
    set.into_iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

// ---------------------------------------------------------------- porosity

fn porosity_suite(max_n: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut r = rng(cfg.seed ^ 0x38);
    let params: Vec<(Rational, u32, Rational, Rational)> = (0..20)
        .map(|_| {
            let c = Rational::one() + rat(r.gen_range(1..=20), r.gen_range(1..=5));
            let n = r.gen_range(1..=max_n);
            let t0 = random_height(&mut r, 1000, 1, 999);
            let delta = rat(1, r.gen_range(2..=100));
            (c, n, t0, delta)
        })
        .collect();
    let results = par::map(cfg.exec, &params, |(c, n, t0, delta)| {
        porosity_witness_for_s(c, *n, t0, delta, 1000)
    });
    let mut rows = Vec::new();
    let (mut certified, mut samples) = (0, 0);
    let mut failures = Vec::new();
    let mut levels = BTreeSet::new();
    for ((c, n, t0, delta), res) in params.iter().zip(results) {
        match res {
            Ok(w) => {
                samples += w.checks.len();
                levels.insert(w.level);
                if w.certified() && w.checks.len() == 1000 {
                    certified += 1;
                } else {
                    failures.push(format!("C={c} N={n} t0={t0} delta={delta}"));
                }
            }
            Err(e) => failures.push(format!("C={c} N={n} t0={t0}:{e}")),
        }
    }
    rows.push(row(
        10,
        "holes",
        failures.is_empty(),
        format!(
            "holes={} certified={certified} samples={samples} levels={:?}{}",
            params.len(),
            levels,
            first_failure(&failures)
        ),
    ));
    rows
}

// ---------------------------------------------------------------- regularity

fn regularity_suite(m: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let radii = vec![rat(1, 9), rat(1, 27), rat(1, 81)];
    match regularity_scan(m, 20, &radii, cfg.seed, cfg.exec) {
        Ok(table) => {
            let spread = table.spread().unwrap_or(f64::INFINITY);
            rows.push(row(
                11,
                "spread",
                spread <= 100.0,
                format!(
                    "m={m} centers=20 rows={} spread={spread:.6}",
                    table.rows.len()
                ),
            ));
        }
        Err(e) => rows.push(error_row(11, "spread", &e)),
    }
    let total =
        build_level_graph(m).and_then(|g| ball_measure(&g, &g.vertex_point(0), &Rational::one()));
    match total {
        Ok(est) => rows.push(row(
            11,
            "total-mass",
            est.mass.is_one(),
            format!("m={m} mass={}", est.mass),
        )),
        Err(e) => rows.push(error_row(11, "total-mass", &e)),
    }
    rows
}

// ---------------------------------------------------------------- parallel

/// Sequential and parallel execution must give identical output.
fn parallel_suite(depth: u32, cfg: &VerifyConfig) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let mut r = rng(cfg.seed ^ 0x77);
    let pts: Vec<LaaksoPoint> = (0..3)
        .map(|_| random_interior_point(&mut r, 4, 243))
        .collect();
    let census = |exec| -> Result<Vec<String>> {
        pts.iter()
            .map(|p| nondiff_height_census(p, depth, exec).map(|c| c.to_csv()))
            .collect()
    };
    rows.push(same_row(
        "census",
        census(Exec::Sequential),
        census(Exec::Parallel),
    ));

    let scan =
        |exec| regularity_scan(4, 8, &[rat(1, 9), rat(1, 27)], cfg.seed, exec).map(|t| t.to_csv());
    rows.push(same_row(
        "regularity-scan",
        scan(Exec::Sequential),
        scan(Exec::Parallel),
    ));

    let lip = |exec| -> Result<String> {
        let c = build_lemma31_function(&LaaksoPoint::parse("1/5:01")?, 1, 6)?;
        let p = c.function.pairwise_lipschitz(exec);
        Ok(format!("{} {} {:?}", p.max_ratio, p.pairs, p.worst_pair))
    };
    rows.push(same_row(
        "pairwise-lipschitz",
        lip(Exec::Sequential),
        lip(Exec::Parallel),
    ));

    let pairs: Vec<(LaaksoPoint, LaaksoPoint)> = (0..200)
        .map(|_| (random_point(&mut r, 4, 162), random_point(&mut r, 4, 162)))
        .collect();
    let dists =
        |exec| -> Result<Vec<Rational>> { Ok(par::map(exec, &pairs, |(x, y)| distance(x, y))) };
    rows.push(same_row(
        "distances",
        dists(Exec::Sequential),
        dists(Exec::Parallel),
    ));
    rows
}

fn same_row<T: PartialEq>(name: &str, seq: Result<T>, par: Result<T>) -> CheckRow {
    match (seq, par) {
        (Ok(a), Ok(b)) => row(None, name, a == b, format!("identical={}", a == b)),
        (Err(e), _) | (_, Err(e)) => error_row(None, name, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn depth_is_range_checked() {
        let cfg = VerifyConfig {
            depth: Some(0),
            ..Default::default()
        };
        assert!(run_suite(Suite::Oracle, &cfg).is_err());
        let cfg = VerifyConfig {
            depth: Some(3),
            ..Default::default()
        };
        assert!(run_suite(Suite::Regularity, &cfg).is_err());
    }

    #[test]
    fn small_oracle_run() {
        let cfg = VerifyConfig {
            depth: Some(1),
            ..Default::default()
        };
        let rep = run_suite(Suite::Oracle, &cfg).unwrap();
        assert!(rep.passed(), "{}", rep.to_csv());
        assert!(rep
            .to_csv()
            .starts_with("suite,criterion,check,passed,detail\noracle,1,all-pairs,pass,m=1"));
    }
}
