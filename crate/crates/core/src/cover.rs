//! Reduction of each partner set `B_i = {i+1, …, n}` to a small cover `A_i`
//! using a semi-separated pair decomposition and angular cones.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{dist, gamma_of, make_ball, ApproxParams, SiteSet, MAX_DIM};

/// One pair `(X, Y)` of site ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePair {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub diam_x: f64,
    pub diam_y: f64,
    pub max_x: usize,
    pub max_y: usize,
}

impl SitePair {
    pub fn new(sites: &SiteSet, mut x: Vec<usize>, mut y: Vec<usize>) -> Self {
        x.sort_unstable();
        y.sort_unstable();
        Self {
            diam_x: diameter(sites, &x),
            diam_y: diameter(sites, &y),
            max_x: *x.last().expect("non-empty side"),
            max_y: *y.last().expect("non-empty side"),
            x,
            y,
        }
    }

    /// `(L, H, ell, h)`: the side whose maximum rank is smaller comes first.
    pub fn light_heavy(&self) -> (&[usize], &[usize], usize, usize) {
        if self.max_x < self.max_y {
            (&self.x, &self.y, self.max_x, self.max_y)
        } else {
            (&self.y, &self.x, self.max_y, self.max_x)
        }
    }

    fn light_heavy_diams(&self) -> (f64, f64) {
        if self.max_x < self.max_y {
            (self.diam_x, self.diam_y)
        } else {
            (self.diam_y, self.diam_x)
        }
    }
}

fn diameter(sites: &SiteSet, idx: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, &p) in idx.iter().enumerate() {
        for &q in &idx[a + 1..] {
            best = best.max(dist(&sites.site(p).coords, &sites.site(q).coords));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDecomposition {
    pub pairs: Vec<SitePair>,
    pub sigma: f64,
}

impl PairDecomposition {
    /// `Σ (|X| + |Y|)`.
    pub fn weight(&self) -> usize {
        self.pairs.iter().map(|p| p.x.len() + p.y.len()).sum()
    }
}

struct SplitNode {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    members: Vec<usize>,
    children: Option<(usize, usize)>,
}

impl SplitNode {
    fn diag(&self, d: usize) -> f64 {
        (0..d)
            .map(|k| (self.hi[k] - self.lo[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn box_gap(a: &SplitNode, b: &SplitNode, d: usize) -> f64 {
    (0..d)
        .map(|k| {
            let g = (a.lo[k] - b.hi[k]).max(b.lo[k] - a.hi[k]).max(0.0);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

fn build_split_tree(sites: &SiteSet, members: Vec<usize>, nodes: &mut Vec<SplitNode>) -> usize {
    let d = sites.dim();
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for &m in &members {
        let c = &sites.site(m).coords;
        for k in 0..d {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let id = nodes.len();
    nodes.push(SplitNode {
        lo,
        hi,
        members: members.clone(),
        children: None,
    });
    if members.len() == 1 {
        return id;
    }
    let axis = (0..d)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
        .unwrap();
    let (left, right): (Vec<usize>, Vec<usize>) = if hi[axis] > lo[axis] {
        let mid = 0.5 * (lo[axis] + hi[axis]);
        members.iter().partition(|&&m| sites.site(m).coords[axis] < mid)
    } else {
        let half = members.len() / 2;
        (members[..half].to_vec(), members[half..].to_vec())
    };
    let l = build_split_tree(sites, left, nodes);
    let r = build_split_tree(sites, right, nodes);
    nodes[id].children = Some((l, r));
    id
}

/// Pair decomposition satisfying `min(diam X, diam Y) · σ ≤ dist(X, Y)` for
/// every pair, covering every unordered site pair exactly once.
///
/// Built from a fair-split tree: sibling subtrees are paired recursively,
/// splitting the node with the larger bounding-box diagonal until the
/// bounding boxes certify the separation.
pub fn build_sspd(sites: &SiteSet, sigma: f64) -> Result<PairDecomposition> {
    if sites.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if !(sigma > 1.0) {
        return Err(Error::OutOfRange(sigma));
    }
    let d = sites.dim();
    let mut nodes = Vec::new();
    build_split_tree(sites, (1..=sites.len()).collect(), &mut nodes);
    let mut pairs = Vec::new();
    let mut work: Vec<(usize, usize)> = nodes
        .iter()
        .filter_map(|n| n.children)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    while let Some((u, v)) = work.pop() {
        let (nu, nv) = (&nodes[u], &nodes[v]);
        let (du, dv) = (nu.diag(d), nv.diag(d));
        if du.min(dv) * sigma <= box_gap(nu, nv, d) {
            pairs.push(SitePair::new(sites, nu.members.clone(), nv.members.clone()));
            continue;
        }
        let split_u = match (nu.children, nv.children) {
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(_), Some(_)) => du >= dv,
            (None, None) => unreachable!("two singletons are always separated"),
        };
        if split_u {
            let (a, b) = nu.children.unwrap();
            work.push((b, v));
            work.push((a, v));
        } else {
            let (a, b) = nv.children.unwrap();
            work.push((u, b));
            work.push((u, a));
        }
    }
    Ok(PairDecomposition { pairs, sigma })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SspdReport {
    /// Unordered rank pairs not separated by any pair.
    pub uncovered: Vec<(usize, usize)>,
    /// Indices of pairs violating the separation inequality.
    pub separation: Vec<usize>,
    pub weight: usize,
}

impl SspdReport {
    pub fn is_valid(&self) -> bool {
        self.uncovered.is_empty() && self.separation.is_empty()
    }
}

/// Brute-force coverage and exact separation check.
pub fn validate_sspd(pd: &PairDecomposition, sites: &SiteSet, sigma: f64) -> SspdReport {
    let n = sites.len();
    let mut seen = vec![false; n * n];
    let mut report = SspdReport {
        weight: pd.weight(),
        ..Default::default()
    };
    for (idx, p) in pd.pairs.iter().enumerate() {
        let mut gap = f64::INFINITY;
        for &a in &p.x {
            for &b in &p.y {
                let (lo, hi) = (a.min(b), a.max(b));
                seen[(lo - 1) * n + (hi - 1)] = true;
                gap = gap.min(dist(&sites.site(a).coords, &sites.site(b).coords));
            }
        }
        let dx = diameter(sites, &p.x);
        let dy = diameter(sites, &p.y);
        if dx.min(dy) * sigma > gap * (1.0 + 1e-12) {
            report.separation.push(idx);
        }
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if !seen[(a - 1) * n + (b - 1)] {
                report.uncovered.push((a, b));
            }
        }
    }
    report
}

/// Partition of directions into cones by hyperspherical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGrid {
    pub d: usize,
    /// Half-width of the interval on each angular coordinate.
    pub beta_eff: f64,
    counts: Vec<u64>,
}

impl ConeGrid {
    /// Cones in which any two directions are at most `beta` apart.
    pub fn new(d: usize, beta: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        Self::with_half_width(d, beta / (2.0 * ((d - 1) as f64).sqrt()))
    }

    pub fn with_half_width(d: usize, beta_eff: f64) -> Result<Self> {
        if !(beta_eff > 0.0 && beta_eff.is_finite()) {
            return Err(Error::OutOfRange(beta_eff));
        }
        let w = 2.0 * beta_eff;
        let mut counts: Vec<u64> = (0..d - 2)
            .map(|_| (std::f64::consts::PI / w).ceil() as u64)
            .collect();
        counts.push((std::f64::consts::TAU / w).ceil() as u64);
        Ok(Self {
            d,
            beta_eff,
            counts,
        })
    }

    pub fn cone_count(&self) -> u64 {
        self.counts.iter().product()
    }

    /// Angular coordinates of `v`: polar angles in `[0, π]`, then the azimuth in `[0, 2π)`.
    pub fn angles(&self, v: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut out = Vec::with_capacity(d - 1);
        for k in 0..d - 2 {
            let rest: f64 = v[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            out.push(rest.atan2(v[k]));
        }
        let mut phi = v[d - 1].atan2(v[d - 2]);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        if phi >= std::f64::consts::TAU {
            phi = 0.0;
        }
        out.push(phi);
        out
    }

    pub fn cone_index(&self, apex: &[f64], target: &[f64]) -> Result<u64> {
        let v: Vec<f64> = target.iter().zip(apex).map(|(t, a)| t - a).collect();
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::CoincidentPoints);
        }
        let w = 2.0 * self.beta_eff;
        let mut id = 0u64;
        for (angle, &count) in self.angles(&v).iter().zip(&self.counts) {
            let slot = ((angle / w).floor() as u64).min(count - 1);
            id = id * count + slot;
        }
        Ok(id)
    }
}

/// Candidate partner `j` of some apex with its ball's near and far extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeEntry {
    pub partner: usize,
    pub t_star: f64,
    pub t_dagger: f64,
}

impl ConeEntry {
    pub fn diameter(&self) -> f64 {
        self.t_star + self.t_dagger
    }
}

/// Interval of `t` in a layout starting at `a` with step `len`; the first
/// interval is closed at `a`.
fn interval_of(t: f64, a: f64, len: f64) -> u64 {
    let q = ((t - a) / len).ceil();
    if q <= 1.0 {
        0
    } else {
        q as u64 - 1
    }
}

/// Keeps, per interval of `t*` values, the entry of minimum diameter.
/// Returns champions in interval order.
pub fn scan_cone_entries(entries: &[ConeEntry], eps_c: f64) -> Vec<ConeEntry> {
    let Some(a) = entries.iter().map(|e| e.t_star).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    let b = entries.iter().map(|e| e.t_dagger).fold(f64::INFINITY, f64::min);
    let len = a * eps_c / 2.0;
    let mut champions: BTreeMap<u64, ConeEntry> = BTreeMap::new();
    for e in entries {
        if e.t_star > b {
            continue;
        }
        let k = interval_of(e.t_star, a, len);
        champions
            .entry(k)
            .and_modify(|c| {
                if e.diameter() < c.diameter() {
                    *c = *e;
                }
            })
            .or_insert(*e);
    }
    champions.into_values().collect()
}

/// Entry for apex `i` and partner `j` using `γ = max(w_j/w_i, 1+ε_S)`.
fn entry(sites: &SiteSet, i: usize, j: usize, eps_s: f64) -> Result<ConeEntry> {
    let (si, sj) = (sites.site(i), sites.site(j));
    let ball = make_ball(si, sj, gamma_of(si.weight, sj.weight, eps_s))?;
    Ok(ConeEntry {
        partner: j,
        t_star: ball.t_star,
        t_dagger: ball.t_dagger,
    })
}

/// Scan of partners of `i` lying in one cone; returns the kept partners.
pub fn scan_cone_sites(
    sites: &SiteSet,
    i: usize,
    partners: &[usize],
    eps_c: f64,
    eps_s: f64,
) -> Result<Vec<usize>> {
    let entries = partners
        .iter()
        .map(|&j| entry(sites, i, j, eps_s))
        .collect::<Result<Vec<_>>>()?;
    Ok(scan_cone_entries(&entries, eps_c)
        .into_iter()
        .map(|e| e.partner)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSet {
    pub i: usize,
    /// Sorted partner ranks, all `> i`.
    pub partners: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CoverBuild {
    /// One entry per rank `1..n`.
    pub covers: Vec<CoverSet>,
    pub pair_count: usize,
    pub pair_weight: usize,
    /// Largest number of champions kept in a single cone of a single site.
    pub max_cone_size: usize,
}

#[derive(Default)]
struct ConeSlot {
    a: f64,
    b: f64,
    champions: BTreeMap<u64, ConeEntry>,
}

pub fn build_covers(sites: &SiteSet, params: &ApproxParams) -> Result<CoverBuild> {
    let n = sites.len();
    if n < 2 {
        return Ok(CoverBuild {
            covers: Vec::new(),
            pair_count: 0,
            pair_weight: 0,
            max_cone_size: 0,
        });
    }
    let pd = build_sspd(sites, params.sigma)?;
    build_covers_with(sites, params, &pd)
}

/// Cover construction on a given pair decomposition.
pub fn build_covers_with(
    sites: &SiteSet,
    params: &ApproxParams,
    pd: &PairDecomposition,
) -> Result<CoverBuild> {
    let n = sites.len();
    let grid = ConeGrid::new(sites.dim(), params.beta)?;
    let coincide = |a: usize, b: usize| sites.site(a).coords == sites.site(b).coords;

    // Pass 1: thin out each heavy set.
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(pd.pairs.len());
    for pair in &pd.pairs {
        let (_, heavy, ell, h) = pair.light_heavy();
        let (diam_l, diam_h) = pair.light_heavy_diams();
        let mut cand = vec![ell, h];
        if diam_h > diam_l {
            let mut cones: BTreeMap<u64, Vec<ConeEntry>> = BTreeMap::new();
            for &j in heavy {
                if coincide(ell, j) {
                    continue;
                }
                let cone = grid.cone_index(&sites.site(ell).coords, &sites.site(j).coords)?;
                cones.entry(cone).or_default().push(entry(sites, ell, j, params.eps_s)?);
            }
            for entries in cones.values() {
                cand.extend(scan_cone_entries(entries, params.eps_c).iter().map(|e| e.partner));
            }
        }
        cand.sort_unstable();
        cand.dedup();
        candidates.push(cand);
    }

    let mut tables: Vec<BTreeMap<u64, ConeSlot>> = (0..=n).map(|_| BTreeMap::new()).collect();
    let visit = |f: &mut dyn FnMut(usize, usize) -> Result<()>| -> Result<()> {
        for (pair, cand) in pd.pairs.iter().zip(&candidates) {
            for &i in pair.x.iter().chain(&pair.y) {
                for &m in cand {
                    if m > i && !coincide(i, m) {
                        f(i, m)?;
                    }
                }
            }
        }
        Ok(())
    };

    // Pass 2: interval bounds per cone.
    visit(&mut |i, m| {
        let cone = grid.cone_index(&sites.site(i).coords, &sites.site(m).coords)?;
        let e = entry(sites, i, m, params.eps_s)?;
        let slot = tables[i].entry(cone).or_insert(ConeSlot {
            a: f64::INFINITY,
            b: f64::INFINITY,
            champions: BTreeMap::new(),
        });
        slot.a = slot.a.min(e.t_star);
        slot.b = slot.b.min(e.t_dagger);
        Ok(())
    })?;

    // Pass 3: minimum-diameter champion per interval.
    visit(&mut |i, m| {
        let cone = grid.cone_index(&sites.site(i).coords, &sites.site(m).coords)?;
        let e = entry(sites, i, m, params.eps_s)?;
        let slot = tables[i].get_mut(&cone).expect("initialised in pass 2");
        if e.t_star > slot.b {
            return Ok(());
        }
        let k = interval_of(e.t_star, slot.a, slot.a * params.eps_c / 2.0);
        slot.champions
            .entry(k)
            .and_modify(|c| {
                if e.diameter() < c.diameter() {
                    *c = e;
                }
            })
            .or_insert(e);
        Ok(())
    })?;

    let mut max_cone_size = 0;
    let covers = (1..n)
        .map(|i| {
            let mut partners: Vec<usize> = Vec::new();
            for slot in tables[i].values() {
                max_cone_size = max_cone_size.max(slot.champions.len());
                partners.extend(slot.champions.values().map(|e| e.partner));
            }
            partners.sort_unstable();
            partners.dedup();
            CoverSet { i, partners }
        })
        .collect();
    Ok(CoverBuild {
        covers,
        pair_count: pd.pairs.len(),
        pair_weight: pd.weight(),
        max_cone_size,
    })
}

/// Upper bound on champions per cone: `ceil(4/(ε_C ε_S)) + 2`.
pub fn cone_cap(params: &ApproxParams) -> usize {
    (4.0 / (params.eps_c * params.eps_s)).ceil() as usize + 2
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpotcheckReport {
    pub samples: usize,
    /// `(direction index, partner)` pairs whose enlarged ball misses the sampled point.
    pub violations: Vec<(usize, usize)>,
    /// Partners with `γ/α ≤ 1`; their check degenerates to a halfspace or ball complement.
    pub degenerate: Vec<usize>,
}

/// Samples boundary points of `core(A_i)` by shooting rays from `s_i` and checks them
/// against every `α`-enlarged ball of `B_i`.
pub fn cover_spotcheck(
    sites: &SiteSet,
    i: usize,
    a_i: &[usize],
    b_i: &[usize],
    alpha: f64,
    eps_s: f64,
    samples: usize,
    seed: u64,
) -> Result<SpotcheckReport> {
    if !(alpha >= 1.0) {
        return Err(Error::OutOfRange(alpha));
    }
    let d = sites.dim();
    let si = sites.site(i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let gammas: Vec<(usize, f64)> = b_i
        .iter()
        .filter(|&&k| sites.site(k).coords != si.coords)
        .map(|&k| (k, gamma_of(si.weight, sites.site(k).weight, eps_s) / alpha))
        .collect();
    let mut report = SpotcheckReport {
        samples,
        degenerate: gammas.iter().filter(|(_, g)| *g <= 1.0).map(|(k, _)| *k).collect(),
        ..Default::default()
    };
    let balls = a_i
        .iter()
        .filter(|&&k| sites.site(k).coords != si.coords)
        .map(|&k| {
            let sk = sites.site(k);
            make_ball(si, sk, gamma_of(si.weight, sk.weight, eps_s))
        })
        .collect::<Result<Vec<_>>>()?;
    let far = b_i
        .iter()
        .map(|&k| dist(&si.coords, &sites.site(k).coords))
        .fold(0.0, f64::max)
        * 1e3
        + 1.0;
    for s in 0..samples {
        let u = random_direction(&mut rng, d);
        let mut t = far;
        for b in &balls {
            let w: Vec<f64> = (0..d).map(|k| si.coords[k] - b.center[k]).collect();
            let bb: f64 = (0..d).map(|k| u[k] * w[k]).sum();
            let cc: f64 = w.iter().map(|x| x * x).sum::<f64>() - b.radius * b.radius;
            let disc = (bb * bb - cc).max(0.0);
            t = t.min(-bb + disc.sqrt());
        }
        let p: Vec<f64> = (0..d).map(|k| si.coords[k] + t * u[k]).collect();
        let to_apex = dist(&p, &si.coords);
        for &(k, g) in &gammas {
            if g * to_apex > dist(&p, &sites.site(k).coords) * (1.0 + 1e-9) {
                report.violations.push((s, k));
            }
        }
    }
    Ok(report)
}

pub(crate) fn random_direction(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::derive_params;

    fn random_sites(n: usize, d: usize, seed: u64) -> SiteSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                (c, rng.random_range(1.0..4.0))
            })
            .collect();
        SiteSet::new(d, input).unwrap()
    }

    #[test]
    fn sspd_two_sites() {
        let s = SiteSet::new(2, vec![(vec![0.0, 0.0], 1.0), (vec![1.0, 0.0], 2.0)]).unwrap();
        let pd = build_sspd(&s, 4.0).unwrap();
        assert_eq!(pd.pairs.len(), 1);
        assert_eq!((pd.pairs[0].x.clone(), pd.pairs[0].y.clone()), (vec![1], vec![2]));
    }

    #[test]
    fn sspd_collinear_example() {
        let s = SiteSet::new(
            2,
            vec![
                (vec![0.0, 0.0], 1.0),
                (vec![1.0, 0.0], 1.0),
                (vec![100.0, 0.0], 1.0),
            ],
        )
        .unwrap();
        let pd = build_sspd(&s, 2.0).unwrap();
        assert!(validate_sspd(&pd, &s, 2.0).is_valid());
        assert!(pd.pairs.iter().any(|p| {
            let mut sides = [p.x.clone(), p.y.clone()];
            sides.sort();
            sides == [vec![1, 2], vec![3]]
        }));
    }

    #[test]
    fn sspd_random_valid() {
        let s = random_sites(200, 2, 3);
        let pd = build_sspd(&s, 10.0).unwrap();
        assert!(validate_sspd(&pd, &s, 10.0).is_valid());
    }

    #[test]
    fn sspd_validator_flags_faults() {
        let s = random_sites(30, 2, 4);
        let mut pd = build_sspd(&s, 4.0).unwrap();
        let r = validate_sspd(&pd, &s, 40.0 * 1e3);
        assert!(!r.separation.is_empty());
        let victim = pd
            .pairs
            .iter()
            .position(|p| p.x.len() == 1 && p.y.len() == 1)
            .unwrap();
        pd.pairs.remove(victim);
        assert_eq!(validate_sspd(&pd, &s, 4.0).uncovered.len(), 1);
    }

    #[test]
    fn cone_index_conventions() {
        let g = ConeGrid::with_half_width(2, std::f64::consts::PI / 8.0).unwrap();
        assert_eq!(g.cone_index(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0);
        assert_eq!(g.cone_index(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::CoincidentPoints));
        let g = ConeGrid::with_half_width(2, 0.1).unwrap();
        let a = g.cone_index(&[0.0, 0.0], &[1.0f64.cos(), 1.0f64.sin()]).unwrap();
        let b = g.cone_index(&[0.0, 0.0], &[1.01f64.cos(), 1.01f64.sin()]).unwrap();
        assert!(a.abs_diff(b) <= 1);
    }

    #[test]
    fn scan_examples() {
        let e = |partner, t_star: f64, diam: f64| ConeEntry {
            partner,
            t_star,
            t_dagger: diam - t_star,
        };
        let kept = scan_cone_entries(&[e(1, 1.0, 4.0), e(2, 1.1, 3.5), e(3, 1.3, 5.0)], 0.4);
        let ids: Vec<usize> = kept.iter().map(|c| c.partner).collect();
        assert_eq!(ids, vec![2, 3]);
        assert!(scan_cone_entries(&[], 0.4).is_empty());
    }

    #[test]
    fn covers_small_cases() {
        let p = derive_params(0.25).unwrap();
        let s = SiteSet::new(2, vec![(vec![0.0, 0.0], 1.0), (vec![1.0, 0.0], 2.0)]).unwrap();
        let c = build_covers(&s, &p).unwrap();
        assert_eq!(c.covers, vec![CoverSet { i: 1, partners: vec![2] }]);

        let ray: Vec<(Vec<f64>, f64)> = (0..30).map(|k| (vec![k as f64 * 0.7 + 0.1 * (k * k) as f64, 0.0], 1.0)).collect();
        let s = SiteSet::new(2, ray).unwrap();
        let c = build_covers(&s, &p).unwrap();
        assert!(c.covers[0].partners.len() <= cone_cap(&p));
    }

    #[test]
    fn spotcheck_trivial_cases() {
        let p = derive_params(0.25).unwrap();
        let s = random_sites(20, 2, 9);
        let b: Vec<usize> = (2..=20).collect();
        let r = cover_spotcheck(&s, 1, &b, &b, 1.0, p.eps_s, 200, 1).unwrap();
        assert!(r.violations.is_empty());
        let r = cover_spotcheck(&s, 1, &[], &b, 1.0, p.eps_s, 50, 1).unwrap();
        assert!(!r.violations.is_empty());
    }
}
