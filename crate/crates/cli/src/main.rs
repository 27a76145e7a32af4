use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use laakso::analysis::{
    expected_kinks, lines, nondiff_height_census, parallel_reduction, profile_dp_on_line,
    KinkProfile, LineLabel, VerticalLine,
};
use laakso::calculus::{
    differentiability_probe, directional_derivative, shell_pool, triadic_schedule, DistanceTo,
    Height, PointFunction,
};
use laakso::constructions::{build_lemma31_function, m_membership_verdict, porosity_witness_for_s};
use laakso::metric::geodesics;
use laakso::oracle::{build_level_graph, regularity_scan, MAX_RESOLUTION};
use laakso::rational::{parse_rational, Rational};
use laakso::verify::{run_suite, Suite, VerifyConfig};
use laakso::{distance, CantorAddress, Exec, LaaksoError, LaaksoPoint};
use serde_json::{json, Value};

/// Exact distances, kink profiles and witness constructions on Laakso space.
///
/// Points are written `h:bits` with `h` an exact rational such as `1/2` and
/// `bits` the Cantor address as a 0/1 string (`1/2:01`). Exit status is 0 on
/// success, 1 when a check fails and 2 for usage errors. The environment
/// variable LAAKSO_MAX_DEPTH caps depth-like parameters.
#[derive(Parser)]
#[command(name = "laakso", version)]
struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Distance, minimal height intervals and one geodesic per interval (JSON).
    Distance {
        #[arg(long)]
        x: LaaksoPoint,
        #[arg(long)]
        y: LaaksoPoint,
    },
    /// Profile of d_p along a vertical line, with kinks checked against the closed form.
    ///
    /// Line specs: `v0`, `vN:<N>` or `v<N>`, `v<N>:<bits>` to pick the line
    /// with that address, and `vD:<N>,<M>` for two-level lines.
    Profile {
        #[arg(long)]
        p: LaaksoPoint,
        #[arg(long)]
        line: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Heights where d_p fails to be differentiable along lines with jump levels up to MAX_LEVEL.
    ///
    /// CSV columns: height,source_line,kink_type.
    Census {
        #[arg(long)]
        p: LaaksoPoint,
        #[arg(long, default_value_t = 4)]
        max_level: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compare d_p on a line with three or more jump levels against the line with only the first two.
    Reduce {
        #[arg(long)]
        p: LaaksoPoint,
        /// Increasing levels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<u32>,
        #[arg(long, value_parser = rational)]
        t: Rational,
    },
    /// A certified hole in S_{C,N} near t0 (JSON).
    Porosity {
        #[arg(long, value_parser = rational)]
        c: Rational,
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = rational)]
        t0: Rational,
        #[arg(long, value_parser = rational)]
        delta: Rational,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Finite-depth membership of x in the set where every Lipschitz function is differentiable.
    Membership {
        #[arg(long)]
        x: LaaksoPoint,
        #[arg(long, value_parser = rational)]
        c: Rational,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 12)]
        depth: u32,
    },
    /// Directional derivative of a test function at x from triadic difference quotients.
    ///
    /// Functions: `height`, `dist:<point>`, `zero-witness` (the function with derivative 0 at x but quotient 1/2 along jumps).
    Probe {
        #[arg(long)]
        x: LaaksoPoint,
        #[arg(long, default_value = "height")]
        function: String,
        #[arg(long, default_value_t = 2)]
        k0: u32,
        #[arg(long, default_value_t = 10)]
        k1: u32,
        #[arg(long, value_parser = rational, default_value = "0")]
        tol: Rational,
        /// Also report sup |f(y) - f(x) - D (h(y) - h(x))| / d(x, y) over a shell of points.
        #[arg(long, value_parser = rational)]
        candidate: Option<Rational>,
        #[arg(long, default_value_t = 3)]
        shell: u32,
    },
    /// Ball-mass ratios mass/r^Q over seeded random centers.
    ///
    /// CSV columns: center_h,center_bits,r,mass,ratio,m.
    Scan {
        #[arg(long, default_value_t = 6)]
        m: u32,
        #[arg(long, default_value_t = 20)]
        sample: usize,
        #[arg(long, value_delimiter = ',', value_parser = rational, default_value = "1/9,1/27,1/81")]
        radii: Vec<Rational>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// The level-m graph used as a distance oracle.
    ///
    /// CSV columns: from_h,from_bits,to_h,to_bits,weight.
    Graph {
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run an acceptance suite and print one CSV row per check.
    ///
    /// CSV columns: suite,criterion,check,passed,detail.
    Verify {
        suite: String,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<LaaksoError> for Failure {
    fn from(e: LaaksoError) -> Self {
        match e {
            LaaksoError::Verification(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn max_depth() -> Result<Option<u32>, Failure> {
    match std::env::var("LAAKSO_MAX_DEPTH") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::Usage(format!(
                "LAAKSO_MAX_DEPTH must be a nonnegative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn capped(name: &str, value: u32) -> Result<u32, Failure> {
    match max_depth()? {
        Some(cap) if value > cap => Err(Failure::Usage(format!(
            "{name} = {value} exceeds LAAKSO_MAX_DEPTH = {cap}"
        ))),
        _ => Ok(value),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("library types serialize")
}

struct LineSpec {
    label: LineLabel,
    address: Option<CantorAddress>,
}

fn parse_line_spec(s: &str) -> Result<LineSpec, Failure> {
    let bad = || {
        Failure::Usage(format!(
            "bad line spec {s:?}; expected v0, vN:<N>, v<N>[:<bits>] or vD:<N>,<M>"
        ))
    };
    let level = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let spec = s.trim().to_ascii_lowercase();
    if spec == "v0" {
        return Ok(LineSpec {
            label: LineLabel::V0,
            address: None,
        });
    }
    if let Some(rest) = spec.strip_prefix("vd:") {
        let levels = rest
            .split(',')
            .map(level)
            .collect::<Result<Vec<u32>, _>>()?;
        if levels.len() > 2 {
            return Err(Failure::Usage(format!(
                "line spec {s:?} has {} levels; lines with three or more levels carry the same values as \
                 their first two, use `laakso reduce --levels {rest}`",
                levels.len()
            )));
        }
        if levels.len() != 2 {
            return Err(bad());
        }
        return Ok(LineSpec {
            label: LineLabel::VDelta(levels),
            address: None,
        });
    }
    if let Some(rest) = spec.strip_prefix("vn:") {
        return Ok(LineSpec {
            label: LineLabel::VN(level(rest)?),
            address: None,
        });
    }
    let rest = spec.strip_prefix('v').ok_or_else(bad)?;
    let (n, bits) = match rest.split_once(':') {
        Some((n, b)) => (n, Some(CantorAddress::parse(b).map_err(|_| bad())?)),
        None => (rest, None),
    };
    let n = level(n)?;
    let label = if n == 0 {
        LineLabel::V0
    } else {
        LineLabel::VN(n)
    };
    Ok(LineSpec {
        label,
        address: bits,
    })
}

fn select_lines(p: &LaaksoPoint, spec: &LineSpec) -> Result<Vec<VerticalLine>, Failure> {
    let all = lines(p, &spec.label)?;
    match &spec.address {
        None => Ok(all),
        Some(z) => {
            let hit: Vec<VerticalLine> = all.into_iter().filter(|l| &l.base_address == z).collect();
            if hit.is_empty() {
                Err(Failure::Usage(format!(
                    "no line of {} through address {z} for p = {}",
                    spec.label,
                    p.to_spec()
                )))
            } else {
                Ok(hit)
            }
        }
    }
}

fn profile_json(
    p: &LaaksoPoint,
    prof: &KinkProfile,
    line: &VerticalLine,
) -> Result<(Value, bool), Failure> {
    let exp = expected_kinks(p, line)?;
    let mut want = exp.heights.clone();
    want.sort();
    let pass = want == prof.kink_heights();
    let kinks: Vec<Value> = prof
        .kinks
        .iter()
        .map(|k| {
            json!({
                "height": k.height.to_string(),
                "left_slope": k.left_slope,
                "right_slope": k.right_slope,
                "type": k.kind().to_string(),
            })
        })
        .collect();
    let v = json!({
        "line": line.to_string(),
        "kinks": kinks,
        "expected": to_value(&exp),
        "pass": pass,
    });
    Ok((v, pass))
}

fn cmd_profile(p: &LaaksoPoint, line: &str, format: Format) -> Outcome {
    let spec = parse_line_spec(line)?;
    let chosen = select_lines(p, &spec)?;
    let mut entries = Vec::new();
    let mut all_pass = true;
    let mut svgs = Vec::new();
    for l in &chosen {
        let prof = profile_dp_on_line(p, l)?;
        let (v, pass) = profile_json(p, &prof, l)?;
        all_pass &= pass;
        entries.push(v);
        svgs.push(prof.to_svg());
    }
    match format {
        Format::Json => Ok((
            pretty(&json!({ "p": p, "lines": entries, "pass": all_pass })),
            all_pass,
        )),
        Format::Svg if svgs.len() == 1 => Ok((svgs.remove(0), all_pass)),
        Format::Svg => Err(Failure::Usage(format!(
            "{} lines match; pick one with v<N>:<bits> for SVG output",
            svgs.len()
        ))),
        Format::Csv => Err(Failure::Usage("profile supports json and svg".into())),
    }
}

fn cmd_probe(
    x: &LaaksoPoint,
    function: &str,
    (k0, k1): (u32, u32),
    tol: &Rational,
    candidate: Option<&Rational>,
    shell: u32,
    exec: Exec,
) -> Outcome {
    if k0 == 0 || k0 > k1 {
        return Err(Failure::Usage(format!(
            "need 1 <= k0 <= k1, got k0={k0} k1={k1}"
        )));
    }
    let k1 = capped("k1", k1)?;
    let f: Box<dyn PointFunction> = match function {
        "height" => Box::new(Height),
        "zero-witness" => {
            let start = x.wormhole_order().map_or(1, |w| w + 1);
            Box::new(build_lemma31_function(x, start, k1.max(start))?)
        }
        other => match other.strip_prefix("dist:") {
            Some(q) => Box::new(DistanceTo(LaaksoPoint::parse(q)?)),
            None => {
                return Err(Failure::Usage(format!(
                    "unknown function {other:?}; use height, dist:<point> or zero-witness"
                )))
            }
        },
    };
    let report = directional_derivative(&*f, x, &triadic_schedule(k0, k1), tol)?;
    let mut out = json!({ "function": function, "derivative": to_value(&report) });
    if let Some(d) = candidate {
        let pool = shell_pool(x, shell, 4);
        let probe = differentiability_probe(&*f, x, d, &pool, exec)?;
        out["probe"] = json!({ "candidate": d.to_string(), "shell": shell, "pool": pool.len(), "result": to_value(&probe) });
    }
    Ok((pretty(&out), true))
}

fn run(cli: &Cli) -> Outcome {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    match &cli.command {
        Command::Distance { x, y } => {
            let d = distance(x, y);
            let (intervals, paths): (Vec<_>, Vec<_>) = geodesics(x, y).into_iter().unzip();
            let v = json!({
                "x": x,
                "y": y,
                "distance": d.to_string(),
                "intervals": to_value(&intervals),
                "geodesics": to_value(&paths),
            });
            Ok((pretty(&v), true))
        }
        Command::Profile { p, line, format } => cmd_profile(p, line, *format),
        Command::Census {
            p,
            max_level,
            format,
        } => {
            let census = nondiff_height_census(p, capped("max-level", *max_level)?, exec)?;
            let pass = census.entries.iter().all(|e| e.kink_type.is_some());
            match format {
                Format::Csv => Ok((census.to_csv(), pass)),
                Format::Json => Ok((
                    pretty(
                        &json!({ "p": p, "max_level": max_level, "entries": to_value(&census.entries), "pass": pass }),
                    ),
                    pass,
                )),
                Format::Svg => Err(Failure::Usage("census supports json and csv".into())),
            }
        }
        Command::Reduce { p, levels, t } => {
            let v = parallel_reduction(p, levels, t)?;
            let equal = v.value_full == v.value_two_level;
            let out = json!({ "p": p, "levels": levels, "t": t.to_string(), "values": to_value(&v), "equal": equal });
            Ok((pretty(&out), equal))
        }
        Command::Porosity {
            c,
            n,
            t0,
            delta,
            samples,
        } => {
            let w = porosity_witness_for_s(c, *n, t0, delta, *samples)?;
            let ok = w.certified();
            let mut v = to_value(&w);
            v["hole_right"] = json!(w.hole_right().to_string());
            v["certified"] = json!(ok);
            Ok((pretty(&v), ok))
        }
        Command::Membership { x, c, n, depth } => {
            let verdict = m_membership_verdict(x, c, *n, capped("depth", *depth)?)?;
            Ok((
                pretty(
                    &json!({ "x": x, "c": c.to_string(), "n": n, "result": to_value(&verdict) }),
                ),
                true,
            ))
        }
        Command::Probe {
            x,
            function,
            k0,
            k1,
            tol,
            candidate,
            shell,
        } => cmd_probe(
            x,
            function,
            (*k0, *k1),
            tol,
            candidate.as_ref(),
            *shell,
            exec,
        ),
        Command::Scan {
            m,
            sample,
            radii,
            seed,
            format,
        } => {
            let table = regularity_scan(capped("m", *m)?, *sample, radii, *seed, exec)?;
            match format {
                Format::Csv => Ok((table.to_csv(), true)),
                Format::Json => {
                    let spread = table.spread().map(|s| format!("{s:.6}"));
                    Ok((
                        pretty(&json!({ "rows": to_value(&table.rows), "spread_ratio": spread })),
                        true,
                    ))
                }
                Format::Svg => Err(Failure::Usage("scan supports csv and json".into())),
            }
        }
        Command::Graph { m, format } => {
            if *m > MAX_RESOLUTION {
                return Err(Failure::Usage(format!("m = {m} exceeds {MAX_RESOLUTION}")));
            }
            let g = build_level_graph(capped("m", *m)?)?;
            let edges = g.edges();
            match format {
                Format::Csv => {
                    let mut s = String::from("from_h,from_bits,to_h,to_bits,weight\n");
                    for e in &edges {
                        let (a, b) = (&e.from, &e.to);
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            a.height(),
                            a.address(),
                            b.height(),
                            b.address(),
                            e.weight
                        ));
                    }
                    Ok((s, true))
                }
                Format::Json => {
                    let zero: Vec<String> = g
                        .zero_edge_heights()
                        .iter()
                        .map(ToString::to_string)
                        .collect();
                    let v = json!({
                        "m": g.m(),
                        "vertices": g.vertex_count(),
                        "edges": edges.len(),
                        "zero_edges": g.zero_edge_count(),
                        "zero_edge_heights": zero,
                    });
                    Ok((pretty(&v), true))
                }
                Format::Svg => Err(Failure::Usage("graph supports json and csv".into())),
            }
        }
        Command::Verify { suite, depth, seed } => {
            let suite: Suite = suite.parse().map_err(|_| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Failure::Usage(format!(
                    "unknown suite {suite:?}; expected one of {}",
                    names.join(", ")
                ))
            })?;
            let depth = depth.map(|d| capped("depth", d)).transpose()?;
            let report = run_suite(
                suite,
                &VerifyConfig {
                    depth,
                    seed: *seed,
                    exec,
                },
            )?;
            Ok((report.to_csv(), report.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, pass)) => {
            if let Some(path) = &cli.out {
                if let Err(e) = fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
    }
}
