//! One pass/fail line per acceptance criterion, built from the verify suites.

use std::collections::BTreeMap;
use std::time::Instant;

use laakso::verify::{run_suite, CheckRow, Suite, VerifyConfig};

const CRITERIA: [(u8, &str); 13] = [
    (1, "metric matches the graph oracle"),
    (2, "minimal intervals and geodesic lengths"),
    (3, "V0 profiles have one valley at h(p)"),
    (4, "V_N kink sets match the closed form"),
    (5, "two-level kink sets match, every branch reached"),
    (6, "lines with 3+ levels reduce to two"),
    (7, "peaks have double geodesics, valleys unit quotients"),
    (8, "zero-derivative witness function"),
    (9, "maximal-derivative witness function"),
    (10, "porosity holes certified"),
    (11, "ball mass ratios and total mass"),
    (12, "at most one low-level jump per geodesic"),
    (13, "height census confirmed"),
];

#[test]
fn acceptance() {
    let cfg = VerifyConfig::default();
    let mut by_criterion: BTreeMap<u8, Vec<CheckRow>> = BTreeMap::new();
    let mut timings = Vec::new();
    for suite in Suite::ALL {
        let start = Instant::now();
        let report = run_suite(suite, &cfg).expect("default depths are valid");
        timings.push((suite, start.elapsed().as_secs_f64()));
        for r in report.rows {
            if let Some(c) = r.criterion {
                by_criterion.entry(c).or_default().push(r);
            } else {
                assert!(r.passed, "{suite} {}: {}", r.check, r.detail);
            }
        }
    }
    let oracle_secs = timings
        .iter()
        .find(|(s, _)| *s == Suite::Oracle)
        .map(|t| t.1)
        .unwrap();

    let mut failed = Vec::new();
    for (c, title) in CRITERIA {
        let rows = by_criterion.remove(&c).unwrap_or_default();
        let mut ok = !rows.is_empty() && rows.iter().all(|r| r.passed);
        if c == 1 {
            ok &= oracle_secs < 60.0;
        }
        println!(
            "criterion {c:>2} {}: {title}",
            if ok { "PASS" } else { "FAIL" }
        );
        for r in &rows {
            println!(
                "    {} {}: {}",
                if r.passed { "ok  " } else { "FAIL" },
                r.check,
                r.detail
            );
        }
        if !ok {
            failed.push(c);
        }
    }
    for (s, secs) in timings {
        println!("suite {s} took {secs:.2}s");
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
