//! Assembly of the approximate weighted Voronoi diagram from refined cores,
//! and point queries against it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::cover::{build_covers, CoverBuild, CoverSet};
use crate::cube::{
    CanonicalCube, CompressedQuadTree, DuplicatePolicy, GridConfig, DEFAULT_FRAC_BITS,
};
use crate::error::{Error, Result};
use crate::geom::{weighted_distance, ApproxParams, SiteSet};
use crate::refine::{refine_core, CoreRegion, RefinementOutput};

/// Which partner sets define each core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverMode {
    /// Every heavier site.
    Full,
    /// Covers from the pair-decomposition reduction.
    #[default]
    Reduced,
}

impl std::fmt::Display for CoverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoverMode::Full => "full",
            CoverMode::Reduced => "reduced",
        })
    }
}

impl std::str::FromStr for CoverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CoverMode::Full),
            "reduced" => Ok(CoverMode::Reduced),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Explicit partner sets, or all heavier sites.
#[derive(Debug, Clone, PartialEq)]
pub enum Covers {
    Full,
    Reduced(Vec<CoverSet>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub frac_bits: u32,
    /// Worker cap for per-core refinement; `None` uses the global pool.
    pub threads: Option<usize>,
    pub policy: DuplicatePolicy,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            frac_bits: DEFAULT_FRAC_BITS,
            threads: None,
            policy: DuplicatePolicy::MinLabel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreStats {
    pub i: usize,
    pub partners: usize,
    pub cubes: usize,
    pub type_one_splits: usize,
    pub type_two_splits: usize,
    /// Set when the site coincides with a heavier one and its core is a single point.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSummary {
    pub pairs: usize,
    pub pair_weight: usize,
    pub max_cover: usize,
    pub mean_cover: f64,
    pub max_cone_size: usize,
}

#[derive(Debug, Clone)]
pub struct Amwvd {
    pub sites: SiteSet,
    pub params: ApproxParams,
    pub grid: GridConfig,
    pub mode: CoverMode,
    pub tree: CompressedQuadTree,
    pub core_stats: Vec<CoreStats>,
    pub cover_summary: Option<CoverSummary>,
    pub build_seconds: f64,
}

/// Answer to a point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    /// Rank of the site labelling the cell.
    pub label: usize,
    pub distance: f64,
    pub comparisons: u32,
}

/// Builds the diagram with covers chosen by `mode`.
pub fn build_diagram(
    sites: SiteSet,
    mode: CoverMode,
    params: &ApproxParams,
    opts: &BuildOptions,
) -> Result<Amwvd> {
    let started = Instant::now();
    let (covers, summary) = match mode {
        CoverMode::Full => (Covers::Full, None),
        CoverMode::Reduced => {
            let cb = build_covers(&sites, params)?;
            let summary = summarize_covers(&cb);
            (Covers::Reduced(cb.covers), Some(summary))
        }
    };
    let mut diagram = build_diagram_with(sites, &covers, params, opts)?;
    diagram.cover_summary = summary;
    diagram.build_seconds = started.elapsed().as_secs_f64();
    Ok(diagram)
}

fn summarize_covers(cb: &CoverBuild) -> CoverSummary {
    let sizes: Vec<usize> = cb.covers.iter().map(|c| c.partners.len()).collect();
    CoverSummary {
        pairs: cb.pair_count,
        pair_weight: cb.pair_weight,
        max_cover: sizes.iter().copied().max().unwrap_or(0),
        mean_cover: if sizes.is_empty() {
            0.0
        } else {
            sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
        },
        max_cone_size: cb.max_cone_size,
    }
}

/// Ranks `i` that share their location with some heavier site.
fn shadowed_sites(sites: &SiteSet) -> Vec<bool> {
    let mut last: HashMap<Vec<u64>, usize> = HashMap::new();
    for s in sites.iter() {
        last.insert(s.coords.iter().map(|x| (x + 0.0).to_bits()).collect(), s.index);
    }
    sites
        .iter()
        .map(|s| {
            let key: Vec<u64> = s.coords.iter().map(|x| (x + 0.0).to_bits()).collect();
            last[&key] > s.index
        })
        .collect()
}

/// Core region of site `i` for the given covers.
pub fn core_for(
    sites: &SiteSet,
    covers: &Covers,
    i: usize,
    params: &ApproxParams,
) -> Result<CoreRegion> {
    let partners: Vec<usize> = match covers {
        Covers::Full => (i + 1..=sites.len()).collect(),
        Covers::Reduced(sets) => sets
            .iter()
            .find(|c| c.i == i)
            .map(|c| c.partners.clone())
            .unwrap_or_default(),
    };
    let si = &sites.site(i).coords;
    let partners: Vec<usize> = partners
        .into_iter()
        .filter(|&j| &sites.site(j).coords != si)
        .collect();
    CoreRegion::for_site(sites, i, &partners, params.eps_s)
}

/// Builds the diagram from explicit covers.
pub fn build_diagram_with(
    sites: SiteSet,
    covers: &Covers,
    params: &ApproxParams,
    opts: &BuildOptions,
) -> Result<Amwvd> {
    let started = Instant::now();
    let n = sites.len();
    let d = sites.dim();
    let grid = GridConfig::for_sites(&sites, opts.frac_bits)?;
    let shadowed = shadowed_sites(&sites);

    let refine_one = |i: usize| -> Result<(CoreStats, Vec<CanonicalCube>)> {
        if shadowed[i - 1] {
            return Ok((
                CoreStats {
                    i,
                    partners: 0,
                    cubes: 0,
                    type_one_splits: 0,
                    type_two_splits: 0,
                    skipped: true,
                },
                Vec::new(),
            ));
        }
        let core = core_for(&sites, covers, i, params)?;
        let out: RefinementOutput = if core.balls.is_empty() {
            // No constraint: the core is all of space.
            RefinementOutput {
                cubes: vec![grid.root()],
                ..Default::default()
            }
        } else {
            refine_core(&core, params.eps_a, &grid)?
        };
        Ok((
            CoreStats {
                i,
                partners: core.balls.len(),
                cubes: out.cubes.len(),
                type_one_splits: out.type_one_splits,
                type_two_splits: out.type_two_splits,
                skipped: false,
            },
            out.cubes,
        ))
    };
    let run = || -> Vec<Result<(CoreStats, Vec<CanonicalCube>)>> {
        (1..n).into_par_iter().map(refine_one).collect()
    };
    let results = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(run),
        None => run(),
    };

    let mut core_stats = Vec::with_capacity(n.saturating_sub(1));
    let mut labelled: Vec<(CanonicalCube, u32)> = vec![(grid.root(), n as u32)];
    for r in results {
        let (stats, cubes) = r?;
        labelled.extend(cubes.into_iter().map(|c| (c, stats.i as u32)));
        core_stats.push(stats);
    }
    let mut tree = CompressedQuadTree::build_with(d, grid.frac_bits, labelled, opts.policy)?;
    tree.propagate_labels(n as u32);
    Ok(Amwvd {
        sites,
        params: *params,
        grid,
        mode: match covers {
            Covers::Full => CoverMode::Full,
            Covers::Reduced(_) => CoverMode::Reduced,
        },
        tree,
        core_stats,
        cover_summary: None,
        build_seconds: started.elapsed().as_secs_f64(),
    })
}

impl Amwvd {
    pub fn dim(&self) -> usize {
        self.sites.dim()
    }

    /// Label and weighted distance for `p`; points outside the root are clamped onto it.
    pub fn query(&self, p: &[f64]) -> Result<QueryResult> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        let loc = self.tree.locate_fixed(self.grid.fixed_clamped(p));
        let label = loc.label as usize;
        Ok(QueryResult {
            label,
            distance: weighted_distance(p, self.sites.site(label)),
            comparisons: loc.comparisons,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.tree.node_count()
    }

    pub fn total_cubes(&self) -> usize {
        self.core_stats.iter().map(|c| c.cubes).sum()
    }

    /// `key=value` lines in a fixed order. Timing is included only on request.
    pub fn stats_report(&self, with_timing: bool) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("n", self.sites.len().to_string());
        kv("d", self.dim().to_string());
        kv("mode", self.mode.to_string());
        kv("eps", p.eps.to_string());
        kv("eps_a", p.eps_a.to_string());
        kv("eps_s", p.eps_s.to_string());
        kv("eps_c", p.eps_c.to_string());
        kv("eps_r", p.eps_r.to_string());
        kv("eps_t", p.eps_t.to_string());
        kv("beta", p.beta.to_string());
        kv("sigma", p.sigma.to_string());
        kv("frac_bits", self.grid.frac_bits.to_string());
        let refined: Vec<&CoreStats> = self.core_stats.iter().filter(|c| !c.skipped).collect();
        kv("cores_refined", refined.len().to_string());
        kv(
            "cores_skipped",
            (self.core_stats.len() - refined.len()).to_string(),
        );
        kv("sum_cubes", self.total_cubes().to_string());
        kv(
            "max_cubes",
            refined.iter().map(|c| c.cubes).max().unwrap_or(0).to_string(),
        );
        let mut hist: std::collections::BTreeMap<u32, usize> = Default::default();
        for c in &refined {
            *hist.entry(usize::BITS - c.cubes.leading_zeros()).or_default() += 1;
        }
        kv(
            "cubes_histogram_log2",
            hist.iter()
                .map(|(b, c)| format!("{b}:{c}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "type_one_splits",
            refined.iter().map(|c| c.type_one_splits).sum::<usize>().to_string(),
        );
        kv(
            "type_two_splits",
            refined.iter().map(|c| c.type_two_splits).sum::<usize>().to_string(),
        );
        kv("cells", self.cell_count().to_string());
        kv("intervals", self.tree.interval_count().to_string());
        kv("depth", self.tree.depth().to_string());
        if let Some(c) = &self.cover_summary {
            kv("pairs", c.pairs.to_string());
            kv("pair_weight", c.pair_weight.to_string());
            kv("max_cover", c.max_cover.to_string());
            kv("mean_cover", format!("{:.4}", c.mean_cover));
            kv("max_cone_size", c.max_cone_size.to_string());
        }
        if with_timing {
            kv("build_seconds", format!("{:.6}", self.build_seconds));
        }
        s
    }
}
