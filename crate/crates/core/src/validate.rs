//! Invariant checks and the named validation suites.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cover::{
    build_covers, build_sspd, cone_cap, cover_spotcheck, validate_sspd, PairDecomposition,
    SitePair,
};
use crate::cube::{CanonicalCube, DuplicatePolicy, GridConfig};
use crate::diagram::{build_diagram, core_for, BuildOptions, CoverMode, Covers};
use crate::error::{Error, Result};
use crate::geom::{derive_params, dist, SiteSet};
use crate::io::dump;
use crate::oracle::{brute_refinement_oracle, check_points, corner_queries, ratio_check};
use crate::refine::{
    axis_projection, core_fatness_radii, is_far_enough, refine_core, CoreRegion,
    RefinementOutput, Verdict,
};

/// Emitted cubes whose parent was not a non-halting `Boundary` cube.
pub fn minimality_violations(
    core: &CoreRegion,
    grid: &GridConfig,
    eps_a: f64,
    out: &RefinementOutput,
) -> Vec<CanonicalCube> {
    out.cubes
        .iter()
        .filter(|c| Some(**c) != out.start)
        .filter(|c| {
            let Some(parent) = c.parent() else {
                return true;
            };
            out.verdicts.get(&parent) != Some(&Verdict::Boundary)
                || is_far_enough(core, grid, &parent, eps_a)
        })
        .copied()
        .collect()
}

/// Whether `p` lies in one of `cubes`.
pub fn covered_by(grid: &GridConfig, cubes: &HashSet<CanonicalCube>, p: &[f64]) -> bool {
    let Ok(fixed) = grid.fixed(p) else {
        return false;
    };
    let leaf = grid.leaf_cube(fixed);
    (0..=grid.frac_bits).any(|level| cubes.contains(&leaf.ancestor(level)))
}

/// Samples interior points of the core (within the root) and returns those
/// not covered by `cubes`.
pub fn coverage_misses(
    core: &CoreRegion,
    grid: &GridConfig,
    cubes: &[CanonicalCube],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = core.dim();
    let set: HashSet<CanonicalCube> = cubes.iter().copied().collect();
    let ext = match axis_projection(core, grid, &grid.root()) {
        Ok(e) => e,
        Err(Error::EmptyOverlap) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strictly_inside = |p: &[f64]| {
        core.balls
            .iter()
            .all(|b| dist(p, &b.center) <= b.radius * (1.0 - 1e-9))
            && core.clip.as_ref().is_none_or(|c| {
                (0..d).all(|k| p[k] >= c.lo[k] && p[k] <= c.hi[k])
            })
    };
    let mut misses = Vec::new();
    let mut taken = 0;
    let mut tries = 0usize;
    while taken < samples && tries < samples * 10_000 {
        tries += 1;
        let p: Vec<f64> = ext
            .iter()
            .map(|&(a, b)| if b > a { rng.random_range(a..=b) } else { a })
            .collect();
        if !strictly_inside(&p) {
            continue;
        }
        taken += 1;
        if !covered_by(grid, &set, &p) {
            misses.push(p);
        }
    }
    Ok(misses)
}

/// Samples points of the emitted cubes; a point outside the core must lie in
/// a `Boundary` cube that satisfies the distance halting condition.
pub fn closeness_violations(
    core: &CoreRegion,
    grid: &GridConfig,
    eps_a: f64,
    out: &RefinementOutput,
    samples: usize,
    seed: u64,
) -> usize {
    if out.cubes.is_empty() {
        return 0;
    }
    let d = core.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let c = out.cubes[rng.random_range(0..out.cubes.len())];
        let (lo, hi) = grid.cube_box(&c);
        let p: Vec<f64> = (0..d).map(|k| rng.random_range(lo[k]..=hi[k])).collect();
        if core.contains(&p) {
            continue;
        }
        let ok = out.verdicts.get(&c) == Some(&Verdict::Boundary)
            && is_far_enough(core, grid, &c, eps_a);
        if !ok {
            bad += 1;
        }
    }
    bad
}

/// Largest apex-to-cube-corner distance over the emitted cubes, relative to `r1_bound`.
pub fn max_reach_ratio(core: &CoreRegion, grid: &GridConfig, cubes: &[CanonicalCube]) -> f64 {
    let Ok((_, r1)) = core_fatness_radii(core) else {
        return 0.0;
    };
    let d = core.dim();
    cubes
        .iter()
        .map(|c| {
            let (lo, hi) = grid.cube_box(c);
            (0..d)
                .map(|k| {
                    let f = (core.apex[k] - lo[k]).abs().max((core.apex[k] - hi[k]).abs());
                    f * f
                })
                .sum::<f64>()
                .sqrt()
                / r1
        })
        .fold(0.0, f64::max)
}

/// Decomposition into all singleton pairs.
pub fn singleton_sspd(sites: &SiteSet, sigma: f64) -> PairDecomposition {
    let n = sites.len();
    let pairs = (1..=n)
        .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
        .map(|(a, b)| SitePair::new(sites, vec![a], vec![b]))
        .collect();
    PairDecomposition { pairs, sigma }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Refine,
    Sspd,
    Cover,
    E2e,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "refine" => Suite::Refine,
            "sspd" => Suite::Sspd,
            "cover" => Suite::Cover,
            "e2e" => Suite::E2e,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub eps: f64,
    pub seed: u64,
    pub frac_bits: u32,
    pub threads: Option<usize>,
    /// Resolve duplicate cubes by maximum label instead of minimum.
    pub fault: bool,
    pub queries: usize,
    pub directions: usize,
    /// Cores examined by the refine suite.
    pub max_cores: usize,
    pub samples: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            eps: 0.25,
            seed: 1,
            frac_bits: crate::cube::DEFAULT_FRAC_BITS,
            threads: None,
            fault: false,
            queries: 10_000,
            directions: 1_000,
            max_cores: 20,
            samples: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}.{} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.detail
        )
    }
}

fn line(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> CheckLine {
    CheckLine {
        suite,
        name: name.into(),
        passed,
        detail,
    }
}

pub fn run_suite(sites: &SiteSet, suite: Suite, opts: &ValidateOptions) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Sspd {
        out.extend(sspd_suite(sites, opts)?);
    }
    if all || suite == Suite::Refine {
        out.extend(refine_suite(sites, opts)?);
    }
    if all || suite == Suite::Cover {
        out.extend(cover_suite(sites, opts)?);
    }
    if all || suite == Suite::E2e {
        out.extend(e2e_suite(sites, opts)?);
    }
    Ok(out)
}

fn sspd_suite(sites: &SiteSet, opts: &ValidateOptions) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    if sites.len() < 2 {
        out.push(line("sspd", "trivial", true, "n<2".into()));
        return Ok(out);
    }
    let params = derive_params(opts.eps)?;
    for sigma in [4.0, params.sigma] {
        let pd = build_sspd(sites, sigma)?;
        let r = validate_sspd(&pd, sites, sigma);
        out.push(line(
            "sspd",
            format!("build_sigma_{sigma}"),
            r.is_valid(),
            format!(
                "pairs={} weight={} uncovered={} separation={}",
                pd.pairs.len(),
                r.weight,
                r.uncovered.len(),
                r.separation.len()
            ),
        ));
    }
    if sites.len() <= 64 {
        let pd = singleton_sspd(sites, params.sigma);
        let r = validate_sspd(&pd, sites, params.sigma);
        out.push(line(
            "sspd",
            "singleton_fallback",
            r.is_valid(),
            format!("pairs={}", pd.pairs.len()),
        ));
    }
    Ok(out)
}

fn refine_suite(sites: &SiteSet, opts: &ValidateOptions) -> Result<Vec<CheckLine>> {
    let params = derive_params(opts.eps)?;
    let grid = GridConfig::for_sites(sites, opts.frac_bits)?;
    let n = sites.len();
    let mut out = Vec::new();
    if n < 2 {
        out.push(line("refine", "trivial", true, "n<2".into()));
        return Ok(out);
    }
    let step = ((n - 1) as f64 / opts.max_cores.max(1) as f64).max(1.0);
    let mut chosen: Vec<usize> = (0..opts.max_cores)
        .map(|k| 1 + (k as f64 * step) as usize)
        .filter(|&i| i < n)
        .collect();
    chosen.dedup();
    let (mut oracle_bad, mut split_bad, mut minimal_bad, mut cover_bad, mut close_bad) =
        (0, 0, 0, 0, 0);
    let mut reach: f64 = 0.0;
    let mut examined = 0;
    for &i in &chosen {
        let core = core_for(sites, &Covers::Full, i, &params)?;
        if core.balls.is_empty() {
            continue;
        }
        examined += 1;
        let res = refine_core(&core, params.eps_a, &grid)?;
        match brute_refinement_oracle(&core, params.eps_a, &grid) {
            Ok(o) if o == res.cubes => {}
            _ => oracle_bad += 1,
        }
        if res.total_splits() > 2 * res.cubes.len() {
            split_bad += 1;
        }
        minimal_bad += minimality_violations(&core, &grid, params.eps_a, &res).len();
        cover_bad += coverage_misses(&core, &grid, &res.cubes, opts.samples, opts.seed)?.len();
        close_bad +=
            closeness_violations(&core, &grid, params.eps_a, &res, opts.samples, opts.seed);
        reach = reach.max(max_reach_ratio(&core, &grid, &res.cubes));
    }
    let reach_bound = 1.0 + (sites.dim() as f64).sqrt() * params.eps_a;
    out.push(line("refine", "oracle_equality", oracle_bad == 0, format!("cores={examined} mismatches={oracle_bad}")));
    out.push(line("refine", "split_accounting", split_bad == 0, format!("violations={split_bad}")));
    out.push(line("refine", "minimality", minimal_bad == 0, format!("violations={minimal_bad}")));
    out.push(line("refine", "coverage", cover_bad == 0, format!("misses={cover_bad}")));
    out.push(line("refine", "closeness", close_bad == 0, format!("violations={close_bad}")));
    out.push(line(
        "refine",
        "reach",
        reach <= reach_bound,
        format!("max_reach_over_r1={reach:.6} bound={reach_bound:.6}"),
    ));
    Ok(out)
}

fn cover_suite(sites: &SiteSet, opts: &ValidateOptions) -> Result<Vec<CheckLine>> {
    let params = derive_params(opts.eps)?;
    let n = sites.len();
    let mut out = Vec::new();
    if n < 2 {
        out.push(line("cover", "trivial", true, "n<2".into()));
        return Ok(out);
    }
    let cb = build_covers(sites, &params)?;
    let alpha = params.cover_alpha();
    let mut violations = 0;
    let mut degenerate = 0;
    for c in &cb.covers {
        let b: Vec<usize> = (c.i + 1..=n).collect();
        let r = cover_spotcheck(
            sites,
            c.i,
            &c.partners,
            &b,
            alpha,
            params.eps_s,
            opts.directions,
            opts.seed,
        )?;
        violations += r.violations.len();
        degenerate += r.degenerate.len();
    }
    out.push(line(
        "cover",
        "spotcheck",
        violations == 0,
        format!("alpha={alpha:.6} violations={violations} degenerate_partners={degenerate}"),
    ));
    let cap = cone_cap(&params);
    out.push(line(
        "cover",
        "cone_cap",
        cb.max_cone_size <= cap,
        format!("max_cone_size={} cap={cap}", cb.max_cone_size),
    ));
    let max_cover = cb.covers.iter().map(|c| c.partners.len()).max().unwrap_or(0);
    let c_const = max_cover as f64 * opts.eps.powi(sites.dim() as i32 + 1);
    out.push(line(
        "cover",
        "size",
        cb.covers.iter().all(|c| c.partners.iter().all(|&j| j > c.i)),
        format!("max_cover={max_cover} C={c_const:.6}"),
    ));
    Ok(out)
}

fn e2e_suite(sites: &SiteSet, opts: &ValidateOptions) -> Result<Vec<CheckLine>> {
    let params = derive_params(opts.eps)?;
    let build_opts = BuildOptions {
        frac_bits: opts.frac_bits,
        threads: opts.threads,
        policy: if opts.fault {
            DuplicatePolicy::MaxLabel
        } else {
            DuplicatePolicy::MinLabel
        },
    };
    let mut out = Vec::new();
    for mode in [CoverMode::Full, CoverMode::Reduced] {
        let dgm = build_diagram(sites.clone(), mode, &params, &build_opts)?;
        let r = ratio_check(&dgm, opts.queries, opts.seed)?;
        let c = check_points(
            &dgm,
            &corner_queries(&dgm, opts.queries / 10, opts.seed ^ 0x5eed),
            opts.seed,
        )?;
        let worst = r.max_ratio.max(c.max_ratio);
        out.push(line(
            "e2e",
            format!("ratio_{mode}"),
            worst <= 1.0 + opts.eps,
            format!(
                "max_uniform={:.9} max_corner={:.9} mean={:.9} bound={}",
                r.max_ratio,
                c.max_ratio,
                r.mean_ratio,
                1.0 + opts.eps
            ),
        ));
        if mode == CoverMode::Full {
            let again = build_diagram(
                sites.clone(),
                mode,
                &params,
                &BuildOptions {
                    threads: Some(1),
                    ..build_opts
                },
            )?;
            out.push(line(
                "e2e",
                "determinism",
                dump(&again) == dump(&dgm),
                format!("cells={}", dgm.cell_count()),
            ));
        }
    }
    Ok(out)
}
