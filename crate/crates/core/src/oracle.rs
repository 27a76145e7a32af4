//! Level-`m` graph discretization of Laakso space.
//!
//! Vertices are the pairs `(k/3^m, a)` with `a` a depth-`m` address. Vertical
//! edges join consecutive heights at equal address; wormhole edges of weight
//! zero join `a` and `a` with bit `n` toggled at every height of `J_n`,
//! `n <= m`. Shortest paths here give an independent check of
//! [`metric::distance`](crate::metric::distance), and counting cells inside
//! balls gives a product-measure estimate for Ahlfors regularity scans.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::address::CantorAddress;
use crate::error::{LaaksoError, Result};
use crate::par::{self, Exec};
use crate::point::LaaksoPoint;
use crate::rational::{inv_pow3, pow3, serde_rational, to_f64, Rational};
use crate::wormhole::wormhole_order;

pub const MAX_RESOLUTION: u32 = 8;

/// Hausdorff dimension `Q = 1 + ln 2 / ln 3`.
pub fn q_dimension() -> f64 {
    1.0 + 2f64.ln() / 3f64.ln()
}

#[derive(Debug, Clone)]
pub struct LevelGraph {
    m: u32,
    heights: usize,
    width: usize,
    /// Wormhole order of `k/3^m` when it is at most `m`.
    zero_level: Vec<Option<u32>>,
}

/// One edge of the debug export; weights are in units of `1/3^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: LaaksoPoint,
    pub to: LaaksoPoint,
    pub weight: u64,
}

impl LevelGraph {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        self.heights * self.width
    }

    fn index(&self, k: usize, code: usize) -> usize {
        k * self.width + code
    }

    fn split(&self, v: usize) -> (usize, usize) {
        (v / self.width, v % self.width)
    }

    fn level_mask(&self, n: u32) -> usize {
        1 << (self.m - n)
    }

    pub fn vertex_point(&self, v: usize) -> LaaksoPoint {
        let (k, code) = self.split(v);
        let h = Rational::new(BigInt::from(k), pow3(self.m));
        LaaksoPoint::new(h, CantorAddress::from_code(code as u64, self.m as usize))
            .expect("grid heights lie in [0,1]")
    }

    /// Vertex for `p`, if its height is a multiple of `1/3^m` and its address has depth at most `m`.
    pub fn vertex_of(&self, p: &LaaksoPoint) -> Result<usize> {
        let scaled = p.height() * Rational::from_integer(pow3(self.m));
        let not_rep = || LaaksoError::NotRepresentable(p.to_spec());
        if !scaled.is_integer() {
            return Err(not_rep());
        }
        let k = scaled.to_integer().to_usize().ok_or_else(not_rep)?;
        let code = p.address().code(self.m as usize).ok_or_else(not_rep)? as usize;
        Ok(self.index(k, code))
    }

    fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize, u64)) {
        let (k, code) = self.split(v);
        if k > 0 {
            f(self.index(k - 1, code), 1);
        }
        if k + 1 < self.heights {
            f(self.index(k + 1, code), 1);
        }
        if let Some(n) = self.zero_level[k] {
            f(self.index(k, code ^ self.level_mask(n)), 0);
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for v in 0..self.vertex_count() {
            self.for_each_neighbor(v, |w, weight| {
                if v < w {
                    out.push(Edge {
                        from: self.vertex_point(v),
                        to: self.vertex_point(w),
                        weight,
                    });
                }
            });
        }
        out
    }

    /// Number of weight-zero (identification) edges.
    pub fn zero_edge_count(&self) -> usize {
        self.zero_level.iter().filter(|l| l.is_some()).count() * self.width / 2
    }

    /// Heights carrying identification edges.
    pub fn zero_edge_heights(&self) -> Vec<Rational> {
        self.zero_level
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_some())
            .map(|(k, _)| Rational::new(BigInt::from(k), pow3(self.m)))
            .collect()
    }

    /// Single-source shortest paths in units of `1/3^m`.
    pub fn distances_from(&self, source: usize) -> Vec<u64> {
        let mut dist = vec![u64::MAX; self.vertex_count()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            self.for_each_neighbor(v, |w, weight| {
                let nd = d + weight;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Reverse((nd, w)));
                }
            });
        }
        dist
    }

    pub fn units_to_rational(&self, units: u64) -> Rational {
        Rational::new(BigInt::from(units), pow3(self.m))
    }
}

/// Builds the level-`m` graph, `1 <= m <= 8`.
pub fn build_level_graph(m: u32) -> Result<LevelGraph> {
    if m == 0 || m > MAX_RESOLUTION {
        return Err(LaaksoError::OutOfRange(format!(
            "resolution m={m} outside 1..={MAX_RESOLUTION}"
        )));
    }
    let heights = 3usize.pow(m) + 1;
    let zero_level = (0..heights)
        .map(|k| wormhole_order(&Rational::new(BigInt::from(k), pow3(m))).filter(|&n| n <= m))
        .collect();
    Ok(LevelGraph {
        m,
        heights,
        width: 1 << m,
        zero_level,
    })
}

/// Exact shortest-path distance between two representable points.
pub fn graph_distance(g: &LevelGraph, x: &LaaksoPoint, y: &LaaksoPoint) -> Result<Rational> {
    let (vx, vy) = (g.vertex_of(x)?, g.vertex_of(y)?);
    Ok(g.units_to_rational(g.distances_from(vx)[vy]))
}

/// Product-measure mass of a ball, from cell counting at resolution `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub center: LaaksoPoint,
    #[serde(with = "serde_rational")]
    pub radius: Rational,
    pub m: u32,
    #[serde(with = "serde_rational")]
    pub mass: Rational,
    /// `mass / radius^Q`, floating point, for reporting only.
    pub ratio: f64,
}

fn mass_within(g: &LevelGraph, dist: &[u64], radius: &Rational) -> Rational {
    // cell (k, a) is represented by its lower-left vertex; k < 3^m
    let limit = (radius * Rational::from_integer(pow3(g.m)))
        .floor()
        .to_integer();
    let limit = limit.to_u64().unwrap_or(u64::MAX);
    let cells = (g.heights - 1) * g.width;
    let inside = dist[..cells].iter().filter(|&&d| d <= limit).count();
    Rational::new(BigInt::from(inside), pow3(g.m) * (BigInt::one() << g.m))
}

fn estimate(
    g: &LevelGraph,
    center: &LaaksoPoint,
    dist: &[u64],
    radius: &Rational,
) -> MeasureEstimate {
    let mass = mass_within(g, dist, radius);
    let ratio = to_f64(&mass) / to_f64(radius).powf(q_dimension());
    MeasureEstimate {
        center: center.clone(),
        radius: radius.clone(),
        m: g.m,
        mass,
        ratio,
    }
}

/// Mass of the closed ball `B(center, r)` counted over level-`m` cells.
///
/// Radii from `1/3^m` up to `1` are accepted; `r = 1` covers the whole space.
pub fn ball_measure(g: &LevelGraph, center: &LaaksoPoint, r: &Rational) -> Result<MeasureEstimate> {
    if *r < inv_pow3(g.m) || *r > Rational::one() {
        return Err(LaaksoError::OutOfRange(format!(
            "radius {r} outside [1/3^{}, 1]",
            g.m
        )));
    }
    let v = g.vertex_of(center)?;
    let dist = g.distances_from(v);
    Ok(estimate(g, center, &dist, r))
}

/// Ratios `mass / r^Q` over random centers and a list of radii.
#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<MeasureEstimate>,
}

impl ScanTable {
    /// `max ratio / min ratio`, `None` for an empty table.
    pub fn spread(&self) -> Option<f64> {
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::NAN, f64::max);
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::NAN, f64::min);
        (!self.rows.is_empty()).then(|| max / min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("center_h,center_bits,r,mass,ratio,m\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.6},{}\n",
                r.center.height(),
                r.center.address(),
                r.radius,
                r.mass,
                r.ratio,
                r.m
            ));
        }
        s
    }
}

/// Random representable centers drawn with a seeded generator.
pub fn random_centers(g: &LevelGraph, count: usize, seed: u64) -> Vec<LaaksoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<LaaksoPoint> = (0..count)
        .map(|_| {
            let k = rng.gen_range(0..g.heights);
            let code = rng.gen_range(0..g.width);
            g.vertex_point(g.index(k, code))
        })
        .collect();
    centers.sort();
    centers
}

/// Ball-mass ratios for `sample` seeded random centers and every radius.
///
/// Radii must lie in `[1/3^(m-1), 1/3]`; rows are sorted by center then radius.
pub fn regularity_scan(
    m: u32,
    sample: usize,
    radii: &[Rational],
    seed: u64,
    exec: Exec,
) -> Result<ScanTable> {
    let g = build_level_graph(m)?;
    let (lo, hi) = (inv_pow3(m - 1), inv_pow3(1));
    if let Some(r) = radii.iter().find(|r| **r < lo || **r > hi) {
        return Err(LaaksoError::OutOfRange(format!(
            "radius {r} outside [{lo}, {hi}]"
        )));
    }
    if radii.is_empty() {
        return Ok(ScanTable { rows: Vec::new() });
    }
    let mut radii = radii.to_vec();
    radii.sort();
    let centers = random_centers(&g, sample, seed);
    let rows = par::map(exec, &centers, |c| {
        let dist = g.distances_from(g.vertex_of(c).expect("centers are grid vertices"));
        radii
            .iter()
            .map(|r| estimate(&g, c, &dist, r))
            .collect::<Vec<_>>()
    });
    Ok(ScanTable {
        rows: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::distance;
    use crate::point::pt;
    use crate::rational::{int, rat};

    #[test]
    fn vertex_counts() {
        assert_eq!(build_level_graph(1).unwrap().vertex_count(), 8);
        assert_eq!(build_level_graph(2).unwrap().vertex_count(), 40);
        assert_eq!(build_level_graph(3).unwrap().vertex_count(), 224);
        assert!(build_level_graph(0).is_err());
        assert!(build_level_graph(9).is_err());
    }

    #[test]
    fn zero_edges_sit_on_wormholes() {
        let g = build_level_graph(1).unwrap();
        assert_eq!(g.zero_edge_heights(), vec![rat(1, 3), rat(2, 3)]);
        let g = build_level_graph(2).unwrap();
        let hs = g.zero_edge_heights();
        assert_eq!(hs.len(), 8);
        assert!(hs.iter().all(|h| wormhole_order(h).is_some()));
        // each of the 8 heights pairs up 4 addresses
        assert_eq!(g.zero_edge_count(), 16);
        assert_eq!(g.edges().iter().filter(|e| e.weight == 0).count(), 16);
    }

    #[test]
    fn graph_distance_examples() {
        let g3 = build_level_graph(3).unwrap();
        assert!(matches!(
            graph_distance(&g3, &pt("1/2:0"), &pt("0:0")),
            Err(LaaksoError::NotRepresentable(_))
        ));
        let g1 = build_level_graph(1).unwrap();
        assert_eq!(
            graph_distance(&g1, &pt("1/3:0"), &pt("1/3:1")).unwrap(),
            int(0)
        );
        let g2 = build_level_graph(2).unwrap();
        let (x, y) = (pt("4/9:00"), pt("4/9:11"));
        assert_eq!(graph_distance(&g2, &x, &y).unwrap(), distance(&x, &y));
    }

    #[test]
    fn full_ball_has_unit_mass() {
        let g = build_level_graph(3).unwrap();
        for c in ["0:000", "1/3:000", "13/27:101", "1:111"] {
            let est = ball_measure(&g, &pt(c), &int(1)).unwrap();
            assert_eq!(est.mass, int(1), "center {c}");
        }
        assert!(ball_measure(&g, &pt("0:0"), &rat(1, 81)).is_err());
    }

    #[test]
    fn scan_shapes() {
        let t = regularity_scan(4, 3, &[], 1, Exec::Sequential).unwrap();
        assert!(t.rows.is_empty());
        assert!(t.spread().is_none());
        let t = regularity_scan(4, 3, &[rat(1, 9), rat(1, 27)], 1, Exec::Sequential).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert!(t
            .to_csv()
            .starts_with("center_h,center_bits,r,mass,ratio,m\n"));
        assert!(regularity_scan(4, 3, &[rat(1, 81)], 1, Exec::Sequential).is_err());
    }
}
