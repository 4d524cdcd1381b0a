//! Exact oracles, instance generators and measurement harness.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::{CanonicalCube, GridConfig};
use crate::diagram::Amwvd;
use crate::error::{Error, Result};
use crate::geom::{weighted_distance, SiteSet, MAX_DIM};
use crate::refine::{classify_cube, is_far_enough, start_cube, CoreRegion, Verdict};

/// Exact weighted nearest neighbour, lowest rank on ties.
pub fn brute_nn(sites: &SiteSet, p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for s in sites.iter() {
        let dv = weighted_distance(p, s);
        if dv < best.1 {
            best = (s.index, dv);
        }
    }
    best
}

/// Cube budget of [`brute_refinement_oracle`].
pub const ORACLE_BUDGET: usize = 1_000_000;

/// Breadth-first refinement with plain splitting only.
pub fn brute_refinement_oracle(
    core: &CoreRegion,
    eps_a: f64,
    grid: &GridConfig,
) -> Result<Vec<CanonicalCube>> {
    let start = match start_cube(core, grid) {
        Ok(c) => c,
        Err(Error::EmptyOverlap) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut memo: HashMap<CanonicalCube, Verdict> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    let mut processed = 0usize;
    while let Some(c) = queue.pop_front() {
        processed += 1;
        if processed > ORACLE_BUDGET {
            return Err(Error::BudgetExceeded(ORACLE_BUDGET));
        }
        let v = *memo
            .entry(c)
            .or_insert_with(|| classify_cube(core, grid, &c));
        match v {
            Verdict::Outside => {}
            Verdict::Inside => out.push(c),
            Verdict::Boundary => {
                if is_far_enough(core, grid, &c, eps_a) {
                    out.push(c);
                } else if c.level >= grid.frac_bits {
                    return Err(Error::RefinementDepthExceeded {
                        core: core.apex_index,
                        max_level: grid.frac_bits,
                    });
                } else {
                    queue.extend(c.children());
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Distribution of site weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    AllEqual,
    /// Uniform on `[1, W]`.
    Uniform(f64),
    /// Half the sites weigh 1, the rest `W`.
    TwoClass(f64),
}

impl std::fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightLaw::AllEqual => write!(f, "equal"),
            WeightLaw::Uniform(w) => write!(f, "uniform:{w}"),
            WeightLaw::TwoClass(w) => write!(f, "two-class:{w}"),
        }
    }
}

impl std::str::FromStr for WeightLaw {
    type Err = Error;

    /// `equal`, `uniform[:W]` or `two-class[:W]`; `W` defaults to 4.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let w = match arg {
            None => 4.0,
            Some(a) => a
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad weight bound {a:?}")))?,
        };
        if !(w.is_finite() && w >= 1.0) {
            return Err(Error::Parse(format!("weight bound must be >= 1, got {w}")));
        }
        match name {
            "equal" | "all-equal" if arg.is_none() => Ok(WeightLaw::AllEqual),
            "uniform" => Ok(WeightLaw::Uniform(w)),
            "two-class" => Ok(WeightLaw::TwoClass(w)),
            _ => Err(Error::Parse(format!("unknown weight law {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub d: usize,
    pub seed: u64,
    pub law: WeightLaw,
    /// Sites in generation order.
    pub points: Vec<(Vec<f64>, f64)>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn sites(&self) -> Result<SiteSet> {
        SiteSet::new(self.d, self.points.clone())
    }
}

/// Sites uniform in the unit cube with weights drawn from `law`.
pub fn gen_instance(n: usize, d: usize, law: WeightLaw, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|k| {
            let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let w = match law {
                WeightLaw::AllEqual => 1.0,
                WeightLaw::Uniform(hi) => 1.0 + rng.random::<f64>() * (hi - 1.0),
                WeightLaw::TwoClass(hi) => {
                    if k % 2 == 0 {
                        1.0
                    } else {
                        hi
                    }
                }
            };
            (c, w)
        })
        .collect();
    Ok(Instance {
        d,
        seed,
        law,
        points,
    })
}

/// `d_label / d_exact` with `0/0 := 1`.
pub fn ratio(label_distance: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if label_distance == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        label_distance / exact
    }
}

/// One checked query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub point: Vec<f64>,
    pub label: usize,
    pub exact_label: usize,
    pub ratio: f64,
    pub comparisons: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub seed: u64,
    pub queries: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Counts of ratios in buckets `[1, 1+w), [1+w, 1+2w), …` with `w = eps/8`; the last bucket is open.
    pub histogram: Vec<usize>,
    pub max_comparisons: u32,
    pub records: Vec<QueryRecord>,
}

impl RatioReport {
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "queries={}", self.queries);
        let _ = writeln!(s, "max_ratio={:.12}", self.max_ratio);
        let _ = writeln!(s, "mean_ratio={:.12}", self.mean_ratio);
        let _ = writeln!(s, "max_comparisons={}", self.max_comparisons);
        let _ = writeln!(
            s,
            "histogram={}",
            self.histogram
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        s
    }

    /// `x1,…,xd,label,exact_label,ratio` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if let Some(first) = self.records.first() {
            let cols: Vec<String> = (0..first.point.len()).map(|k| format!("x{k}")).collect();
            let _ = writeln!(s, "{},label,exact_label,ratio", cols.join(","));
        }
        for r in &self.records {
            let pts: Vec<String> = r.point.iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(s, "{},{},{},{:.17e}", pts.join(","), r.label, r.exact_label, r.ratio);
        }
        s
    }
}

/// Checks the diagram at the given points against [`brute_nn`].
pub fn check_points(dgm: &Amwvd, points: &[Vec<f64>], seed: u64) -> Result<RatioReport> {
    let eps = dgm.params.eps;
    let buckets = 9;
    let mut histogram = vec![0usize; buckets];
    let mut records = Vec::with_capacity(points.len());
    let (mut max_ratio, mut sum, mut max_cmp) = (1.0f64, 0.0, 0u32);
    for p in points {
        let q = dgm.query(p)?;
        let (exact_label, exact) = brute_nn(&dgm.sites, p);
        let r = ratio(q.distance, exact);
        max_ratio = max_ratio.max(r);
        sum += r;
        max_cmp = max_cmp.max(q.comparisons);
        let b = (((r - 1.0) / (eps / 8.0)).floor().max(0.0) as usize).min(buckets - 1);
        histogram[b] += 1;
        records.push(QueryRecord {
            point: p.clone(),
            label: q.label,
            exact_label,
            ratio: r,
            comparisons: q.comparisons,
        });
    }
    Ok(RatioReport {
        seed,
        queries: points.len(),
        max_ratio,
        mean_ratio: if points.is_empty() {
            1.0
        } else {
            sum / points.len() as f64
        },
        histogram,
        max_comparisons: max_cmp,
        records,
    })
}

/// Uniform points in the site bounding box inflated by 1.5 about its centre.
pub fn uniform_queries(sites: &SiteSet, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let (lo, hi) = sites.bounding_box();
    let d = sites.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half: Vec<f64> = (0..d)
        .map(|k| 0.75 * (hi[k] - lo[k]).max(1e-9))
        .collect();
    let mid: Vec<f64> = (0..d).map(|k| 0.5 * (lo[k] + hi[k])).collect();
    (0..m)
        .map(|_| {
            (0..d)
                .map(|k| mid[k] + half[k] * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect()
}

/// Corners of randomly chosen non-root cells, nudged just inside the cell.
pub fn corner_queries(dgm: &Amwvd, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let nodes = dgm.tree.nodes();
    let d = dgm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if nodes.len() <= 1 {
        return uniform_queries(&dgm.sites, m, seed);
    }
    (0..m)
        .map(|_| {
            let node = &nodes[rng.random_range(1..nodes.len())];
            let (lo, hi) = dgm.grid.cube_box(&node.cube);
            let side = dgm.grid.cube_side(node.cube.level);
            let corner: u32 = rng.random_range(0..(1u32 << d));
            (0..d)
                .map(|k| {
                    let nudge = side * 1e-6 * rng.random::<f64>();
                    if corner >> k & 1 == 1 {
                        hi[k] - nudge
                    } else {
                        lo[k] + nudge
                    }
                })
                .collect()
        })
        .collect()
}

/// `m` uniform queries in the inflated bounding box, checked against the oracle.
pub fn ratio_check(dgm: &Amwvd, m: usize, seed: u64) -> Result<RatioReport> {
    check_points(dgm, &uniform_queries(&dgm.sites, m, seed), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, BuildOptions, CoverMode};
    use crate::geom::derive_params;

    #[test]
    fn brute_nn_examples() {
        let s = SiteSet::new(2, vec![(vec![0.0, 0.0], 1.0), (vec![10.0, 0.0], 10.0)]).unwrap();
        assert_eq!(brute_nn(&s, &[2.0, 0.0]).0, 2);
        assert_eq!(brute_nn(&s, &[0.0, 0.0]), (1, 0.0));
    }

    #[test]
    fn generator_examples() {
        let a = gen_instance(3, 2, WeightLaw::AllEqual, 1).unwrap();
        assert!(a.points.iter().all(|(_, w)| *w == 1.0));
        assert_eq!(a, gen_instance(3, 2, WeightLaw::AllEqual, 1).unwrap());
        let b = gen_instance(10_000, 2, WeightLaw::Uniform(4.0), 2).unwrap();
        assert!(b.points.iter().all(|(_, w)| (1.0..=4.0).contains(w)));
        assert!(gen_instance(0, 2, WeightLaw::AllEqual, 1).is_err());
    }

    #[test]
    fn weight_law_parsing() {
        assert_eq!("equal".parse::<WeightLaw>().unwrap(), WeightLaw::AllEqual);
        assert_eq!("uniform".parse::<WeightLaw>().unwrap(), WeightLaw::Uniform(4.0));
        assert_eq!("two-class:8".parse::<WeightLaw>().unwrap(), WeightLaw::TwoClass(8.0));
        assert!("uniform:0.5".parse::<WeightLaw>().is_err());
        assert!("gauss".parse::<WeightLaw>().is_err());
    }

    #[test]
    fn single_site_ratios_are_one() {
        let s = SiteSet::new(2, vec![(vec![0.5, 0.5], 1.0)]).unwrap();
        let p = derive_params(0.25).unwrap();
        let dgm = build_diagram(s, CoverMode::Full, &p, &BuildOptions::default()).unwrap();
        let r = ratio_check(&dgm, 100, 3).unwrap();
        assert_eq!(r.max_ratio, 1.0);
    }
}
