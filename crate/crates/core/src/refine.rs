//! Adaptive refinement of a core (intersection of Apollonian balls sharing an
//! apex) into canonical cubes.
//!
//! A cube is emitted when it lies inside the core, or when it meets the core
//! boundary and is small relative to its distance from the apex. Runs of
//! splits that leave a single child alive are collapsed by zooming straight to
//! the smallest canonical cube around the remaining overlap.

use std::collections::HashMap;

use crate::cube::{CanonicalCube, GridConfig};
use crate::error::{Error, Result};
use crate::faces::Region;
use crate::geom::{EffectiveBall, SiteSet, MAX_DIM};

/// Axis-aligned box in instance coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Intersection of balls `ball(i, j)` for a fixed apex `i`, optionally clipped by a box.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreRegion {
    pub apex_index: usize,
    pub apex: Vec<f64>,
    pub balls: Vec<EffectiveBall>,
    pub clip: Option<Aabb>,
}

impl CoreRegion {
    pub fn new(
        apex_index: usize,
        apex: Vec<f64>,
        balls: Vec<EffectiveBall>,
        clip: Option<Aabb>,
    ) -> Result<Self> {
        for b in &balls {
            if b.i != apex_index {
                return Err(Error::IndexOrder { i: b.i, j: b.j });
            }
            if b.center.len() != apex.len() {
                return Err(Error::DimensionMismatch {
                    expected: apex.len(),
                    found: b.center.len(),
                });
            }
            if !(b.gamma > 1.0) {
                return Err(Error::DegenerateGamma(b.gamma));
            }
        }
        if let Some(c) = &clip {
            if c.lo.len() != apex.len() || c.hi.len() != apex.len() {
                return Err(Error::DimensionMismatch {
                    expected: apex.len(),
                    found: c.lo.len(),
                });
            }
        }
        Ok(Self {
            apex_index,
            apex,
            balls,
            clip,
        })
    }

    /// Core of site `i` against the given partners (all ranks `> i`), using
    /// effective weights floored at `1 + eps_s`.
    pub fn for_site(sites: &SiteSet, i: usize, partners: &[usize], eps_s: f64) -> Result<Self> {
        let si = sites.site(i);
        let balls = partners
            .iter()
            .map(|&j| {
                if j <= i {
                    return Err(Error::IndexOrder { i, j });
                }
                let sj = sites.site(j);
                let gamma = crate::geom::gamma_of(si.weight, sj.weight, eps_s);
                crate::geom::make_ball(si, sj, gamma)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(i, si.coords.clone(), balls, None)
    }

    pub fn dim(&self) -> usize {
        self.apex.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if let Some(c) = &self.clip {
            if (0..self.dim()).any(|k| p[k] < c.lo[k] || p[k] > c.hi[k]) {
                return false;
            }
        }
        self.balls.iter().all(|b| b.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Inside,
    Outside,
    Boundary,
}

#[derive(Debug, Clone, Default)]
pub struct RefinementOutput {
    /// Emitted cubes in z-order.
    pub cubes: Vec<CanonicalCube>,
    pub type_one_splits: usize,
    pub type_two_splits: usize,
    /// Verdict of every cube visited, including zoom-chain cubes.
    pub verdicts: HashMap<CanonicalCube, Verdict>,
    pub start: Option<CanonicalCube>,
}

impl RefinementOutput {
    pub fn total_splits(&self) -> usize {
        self.type_one_splits + self.type_two_splits
    }
}

/// `(r2, r1_bound)`: inscribed radius at the apex and the far extent of the ball attaining it.
pub fn core_fatness_radii(core: &CoreRegion) -> Result<(f64, f64)> {
    let best = core
        .balls
        .iter()
        .min_by(|a, b| a.t_star.total_cmp(&b.t_star))
        .ok_or(Error::EmptyBallList)?;
    Ok((best.t_star, best.t_dagger))
}

/// Box intersected with the clip box, or `None` if they do not meet.
fn clipped_box(core: &CoreRegion, lo: &[f64], hi: &[f64]) -> Option<([f64; MAX_DIM], [f64; MAX_DIM])> {
    let d = core.dim();
    let mut l = [0.0; MAX_DIM];
    let mut h = [0.0; MAX_DIM];
    for k in 0..d {
        l[k] = lo[k];
        h[k] = hi[k];
        if let Some(c) = &core.clip {
            l[k] = l[k].max(c.lo[k]);
            h[k] = h[k].min(c.hi[k]);
        }
        if l[k] > h[k] {
            return None;
        }
    }
    Some((l, h))
}

fn near_far_sq(c: &[f64], lo: &[f64], hi: &[f64], d: usize) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..d {
        let q = c[k].clamp(lo[k], hi[k]);
        near += (q - c[k]) * (q - c[k]);
        let f = (c[k] - lo[k]).abs().max((c[k] - hi[k]).abs());
        far += f * f;
    }
    (near, far)
}

/// Euclidean distance from `p` to the closed box.
pub fn point_box_distance(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    near_far_sq(p, lo, hi, p.len()).0.sqrt()
}

pub fn classify_cube(core: &CoreRegion, grid: &GridConfig, cube: &CanonicalCube) -> Verdict {
    let (lo, hi) = grid.cube_box(cube);
    classify_box(core, &lo[..core.dim()], &hi[..core.dim()])
}

/// Classifies the closed box `[lo, hi]` against the core. `Outside` is
/// returned only with a proof of disjointness.
pub fn classify_box(core: &CoreRegion, lo: &[f64], hi: &[f64]) -> Verdict {
    let d = core.dim();
    let Some((blo, bhi)) = clipped_box(core, lo, hi) else {
        return Verdict::Outside;
    };
    let within_clip = core
        .clip
        .as_ref()
        .is_none_or(|c| (0..d).all(|k| lo[k] >= c.lo[k] && hi[k] <= c.hi[k]));
    let mut active: Vec<&EffectiveBall> = Vec::new();
    for b in &core.balls {
        let (near, _) = near_far_sq(&b.center, &blo[..d], &bhi[..d], d);
        let r2 = b.radius * b.radius;
        if near > r2 * (1.0 + 1e-12) {
            return Verdict::Outside;
        }
        let (_, far) = near_far_sq(&b.center, lo, hi, d);
        if far > r2 {
            active.push(b);
        }
    }
    if active.is_empty() {
        return if within_clip {
            Verdict::Inside
        } else {
            Verdict::Boundary
        };
    }
    let spheres: Vec<(&[f64], f64)> = active.iter().map(|b| (&b.center[..], b.radius)).collect();
    if let Some(v) = projection_probe(d, &blo, &bhi, &spheres) {
        return v;
    }
    let region = Region::new(d, &blo[..d], &bhi[..d], &spheres);
    if region.witness().is_some() {
        Verdict::Boundary
    } else {
        Verdict::Outside
    }
}

/// Cyclic projections between the box and the balls. Returns `Boundary` on
/// finding a common point, `Outside` on a valid separating certificate, and
/// `None` if inconclusive.
fn projection_probe(
    d: usize,
    lo: &[f64; MAX_DIM],
    hi: &[f64; MAX_DIM],
    spheres: &[(&[f64], f64)],
) -> Option<Verdict> {
    // Work relative to the box centre.
    let mut mid = [0.0; MAX_DIM];
    let mut l = [0.0; MAX_DIM];
    let mut h = [0.0; MAX_DIM];
    let mut extent: f64 = 0.0;
    for k in 0..d {
        mid[k] = 0.5 * (lo[k] + hi[k]);
        l[k] = lo[k] - mid[k];
        h[k] = hi[k] - mid[k];
        extent = extent.max(hi[k] - lo[k]);
    }
    let balls: Vec<([f64; MAX_DIM], f64)> = spheres
        .iter()
        .map(|(c, r)| {
            let mut cc = [0.0; MAX_DIM];
            for k in 0..d {
                cc[k] = c[k] - mid[k];
            }
            (cc, *r)
        })
        .collect();
    let scale = balls
        .iter()
        .map(|(c, r)| norm(c, d) + r)
        .fold(extent, f64::max);
    let tol = 1e-9 * extent + 32.0 * f64::EPSILON * scale;
    let box_radius = norm(&h, d);

    let mut x = [0.0f64; MAX_DIM];
    let mut us = vec![[0.0; MAX_DIM]; balls.len()];
    for _ in 0..64 {
        let start = x;
        let mut ub = [0.0; MAX_DIM];
        for k in 0..d {
            let p = x[k].clamp(l[k], h[k]);
            ub[k] = x[k] - p;
            x[k] = p;
        }
        for (a, (c, r)) in balls.iter().enumerate() {
            let mut v = [0.0; MAX_DIM];
            for k in 0..d {
                v[k] = x[k] - c[k];
            }
            let n = norm(&v, d);
            let mut u = [0.0; MAX_DIM];
            if n > *r {
                for k in 0..d {
                    let p = c[k] + v[k] * (r / n);
                    u[k] = x[k] - p;
                    x[k] = p;
                }
            }
            us[a] = u;
        }
        let in_box = (0..d).all(|k| x[k] >= l[k] - tol && x[k] <= h[k] + tol);
        let in_balls = balls.iter().all(|(c, r)| {
            let mut s = 0.0;
            for k in 0..d {
                s += (x[k] - c[k]) * (x[k] - c[k]);
            }
            s <= (r + tol) * (r + tol)
        });
        if in_box && in_balls {
            return Some(Verdict::Boundary);
        }
        // Farkas certificate from this cycle's displacement vectors.
        let mut ubp = ub;
        for k in 0..d {
            ubp[k] -= start[k] - x[k];
        }
        let mut total = 0.0;
        let mut err = 0.0;
        let mut resid = ubp;
        for k in 0..d {
            total += (ubp[k] * l[k]).max(ubp[k] * h[k]);
        }
        err += norm(&ubp, d) * box_radius;
        for ((c, r), u) in balls.iter().zip(&us) {
            let un = norm(u, d);
            total += dot(c, u, d) + r * un;
            err += un * (norm(c, d) + r);
            for k in 0..d {
                resid[k] += u[k];
            }
        }
        let slack = 64.0 * f64::EPSILON * err + norm(&resid, d) * box_radius;
        if total < -slack {
            return Some(Verdict::Outside);
        }
    }
    None
}

fn dot(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], d: usize) -> f64 {
    (0..d).map(|k| a[k] * b[k]).sum()
}

fn norm(a: &[f64; MAX_DIM], d: usize) -> f64 {
    dot(a, a, d).sqrt()
}

/// Region of `core ∩ box` as a face-enumeration problem, or `None` when a
/// single ball or the clip box already rules it out.
fn overlap_region(core: &CoreRegion, lo: &[f64], hi: &[f64]) -> Option<Region> {
    let d = core.dim();
    let (blo, bhi) = clipped_box(core, lo, hi)?;
    let mut spheres: Vec<(&[f64], f64)> = Vec::new();
    for b in &core.balls {
        let (near, far) = near_far_sq(&b.center, &blo[..d], &bhi[..d], d);
        let r2 = b.radius * b.radius;
        if near > r2 * (1.0 + 1e-12) {
            return None;
        }
        if far > r2 {
            spheres.push((&b.center[..], b.radius));
        }
    }
    Some(Region::new(d, &blo[..d], &bhi[..d], &spheres))
}

/// Per-axis `[min, max]` of `core ∩ cube`.
pub fn axis_projection(
    core: &CoreRegion,
    grid: &GridConfig,
    cube: &CanonicalCube,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = grid.cube_box(cube);
    let d = core.dim();
    overlap_region(core, &lo[..d], &hi[..d])
        .and_then(|r| r.extents())
        .ok_or(Error::EmptyOverlap)
}

/// Smallest canonical cube inside `cube` that contains `core ∩ cube`.
pub fn zoom_in(core: &CoreRegion, grid: &GridConfig, cube: &CanonicalCube) -> Result<CanonicalCube> {
    let d = core.dim();
    let (lo, hi) = grid.cube_box(cube);
    let region = overlap_region(core, &lo[..d], &hi[..d]).ok_or(Error::EmptyOverlap)?;
    let ext = region.extents().ok_or(Error::EmptyOverlap)?;
    let pad = 8.0 * region.tol();
    let shift = grid.frac_bits - cube.level;
    let scale = (grid.frac_bits as f64).exp2() / grid.side;
    let mut a = [0u64; MAX_DIM];
    let mut b = [0u64; MAX_DIM];
    for k in 0..d {
        let first = cube.anchor()[k] << shift;
        let last = first + ((1u64 << shift) - 1);
        let to_fixed = |v: f64| -> u64 {
            let t = ((v - grid.origin[k]) * scale).floor();
            if t <= first as f64 {
                first
            } else if t >= last as f64 {
                last
            } else {
                t as u64
            }
        };
        a[k] = to_fixed(ext[k].0 - pad);
        b[k] = to_fixed(ext[k].1 + pad);
    }
    let z = grid.leaf_cube(a).lca(&grid.leaf_cube(b));
    debug_assert!(cube.contains(&z));
    Ok(z)
}

/// Smallest canonical cube covering the bounding box of `B(apex, r1_bound)`
/// (intersected with the clip box and the root).
pub fn start_cube(core: &CoreRegion, grid: &GridConfig) -> Result<CanonicalCube> {
    let d = core.dim();
    let (rlo, rhi) = grid.cube_box(&grid.root());
    let mut lo: Vec<f64> = rlo[..d].to_vec();
    let mut hi: Vec<f64> = rhi[..d].to_vec();
    if !core.balls.is_empty() {
        let (_, r1) = core_fatness_radii(core)?;
        let r = r1 * (1.0 + 1e-9);
        for k in 0..d {
            lo[k] = lo[k].max(core.apex[k] - r);
            hi[k] = hi[k].min(core.apex[k] + r);
        }
    }
    if let Some(c) = &core.clip {
        for k in 0..d {
            lo[k] = lo[k].max(c.lo[k]);
            hi[k] = hi[k].min(c.hi[k]);
        }
    }
    if (0..d).any(|k| lo[k] > hi[k]) {
        return Err(Error::EmptyOverlap);
    }
    let a = grid.fixed_clamped(&lo);
    let b = grid.fixed_clamped(&hi);
    Ok(grid.leaf_cube(a).lca(&grid.leaf_cube(b)))
}

/// Halting condition 3: side at most `eps_a` times the apex-to-cube distance.
pub fn is_far_enough(core: &CoreRegion, grid: &GridConfig, cube: &CanonicalCube, eps_a: f64) -> bool {
    let d = core.dim();
    let (lo, hi) = grid.cube_box(cube);
    grid.cube_side(cube.level) <= eps_a * point_box_distance(&core.apex, &lo[..d], &hi[..d])
}

struct Refiner<'a> {
    core: &'a CoreRegion,
    grid: &'a GridConfig,
    eps_a: f64,
    out: RefinementOutput,
}

impl Refiner<'_> {
    fn classify(&mut self, c: CanonicalCube) -> Verdict {
        let v = classify_cube(self.core, self.grid, &c);
        self.out.verdicts.insert(c, v);
        v
    }

    fn depth_error(&self) -> Error {
        Error::RefinementDepthExceeded {
            core: self.core.apex_index,
            max_level: self.grid.frac_bits,
        }
    }

    fn run(mut self) -> Result<RefinementOutput> {
        let start = match start_cube(self.core, self.grid) {
            Ok(c) => c,
            Err(Error::EmptyOverlap) => return Ok(self.out),
            Err(e) => return Err(e),
        };
        self.out.start = Some(start);
        let v = self.classify(start);
        let mut stack = vec![(start, v)];
        while let Some((cube, verdict)) = stack.pop() {
            match verdict {
                Verdict::Outside => {}
                Verdict::Inside => self.out.cubes.push(cube),
                Verdict::Boundary => {
                    if is_far_enough(self.core, self.grid, &cube, self.eps_a) {
                        self.out.cubes.push(cube);
                        continue;
                    }
                    if cube.level >= self.grid.frac_bits {
                        return Err(self.depth_error());
                    }
                    let kids: Vec<(CanonicalCube, Verdict)> = cube
                        .children()
                        .collect::<Vec<_>>()
                        .into_iter()
                        .map(|c| (c, self.classify(c)))
                        .filter(|(_, v)| *v != Verdict::Outside)
                        .collect();
                    if kids.len() == 1 {
                        self.out.type_one_splits += 1;
                        let (c1, v1) = kids[0];
                        stack.push(self.zoom_chain(c1, v1)?);
                    } else {
                        self.out.type_two_splits += 1;
                        stack.extend(kids.into_iter().rev());
                    }
                }
            }
        }
        self.out.cubes.sort();
        Ok(self.out)
    }

    /// Descends from the lone surviving child `c1` to the zoom target,
    /// recording the verdicts plain splitting would produce along the way.
    fn zoom_chain(&mut self, c1: CanonicalCube, v1: Verdict) -> Result<(CanonicalCube, Verdict)> {
        if v1 != Verdict::Boundary {
            return Ok((c1, v1));
        }
        let target = match zoom_in(self.core, self.grid, &c1) {
            Ok(z) => z,
            Err(Error::EmptyOverlap) => c1,
            Err(e) => return Err(e),
        };
        let mut cur = c1;
        while cur != target {
            if is_far_enough(self.core, self.grid, &cur, self.eps_a) {
                return Ok((cur, Verdict::Boundary));
            }
            if cur.level >= self.grid.frac_bits {
                return Err(self.depth_error());
            }
            let next = target.ancestor(cur.level + 1);
            for ch in cur.children() {
                if ch != next {
                    self.out.verdicts.insert(ch, Verdict::Outside);
                }
            }
            if next == target {
                break;
            }
            self.out.verdicts.insert(next, Verdict::Boundary);
            cur = next;
        }
        let v = self.classify(target);
        Ok((target, v))
    }
}

pub fn refine_core(core: &CoreRegion, eps_a: f64, grid: &GridConfig) -> Result<RefinementOutput> {
    if !(eps_a > 0.0 && eps_a < 1.0) {
        return Err(Error::OutOfRange(eps_a));
    }
    if core.dim() != grid.d {
        return Err(Error::DimensionMismatch {
            expected: grid.d,
            found: core.dim(),
        });
    }
    Refiner {
        core,
        grid,
        eps_a,
        out: RefinementOutput::default(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ball_from_coords;

    fn disc(center: &[f64], r: f64) -> EffectiveBall {
        // gamma = 2, apex at distance r/2 from center towards -x.
        let gamma = 2.0;
        let dist = r * (gamma - 1.0 / gamma);
        let shift = 1.0 / (gamma * gamma - 1.0);
        let mut a = center.to_vec();
        a[0] += dist * shift;
        let mut b = a.clone();
        b[0] += dist;
        ball_from_coords(1, &a, 2, &b, gamma).unwrap()
    }

    fn core_of(balls: Vec<EffectiveBall>) -> CoreRegion {
        let apex = balls[0].center.iter().zip(&balls[0].axis).map(|(c, u)| c + u / 3.0).collect();
        CoreRegion::new(1, apex, balls, None).unwrap()
    }

    #[test]
    fn classify_examples() {
        let core = core_of(vec![disc(&[0.0, 0.0], 2.0)]);
        assert_eq!(classify_box(&core, &[-0.5, -0.5], &[0.5, 0.5]), Verdict::Inside);
        assert_eq!(classify_box(&core, &[3.0, 3.0], &[4.0, 4.0]), Verdict::Outside);
        assert_eq!(classify_box(&core, &[1.5, -0.5], &[2.5, 0.5]), Verdict::Boundary);
    }

    #[test]
    fn classify_needs_certificate() {
        // Two discs whose lens misses a box that each disc meets.
        let core = core_of(vec![disc(&[-1.0, 0.0], 1.5), disc(&[1.0, 0.0], 1.5)]);
        assert_eq!(classify_box(&core, &[-0.1, 1.2], &[0.1, 1.4]), Verdict::Outside);
        assert_eq!(classify_box(&core, &[-0.1, 1.0], &[0.1, 1.2]), Verdict::Boundary);
    }

    #[test]
    fn projection_examples() {
        let grid = GridConfig::new(2, 20, vec![-8.0, -8.0], 16.0).unwrap();
        let core = core_of(vec![disc(&[0.0, 0.0], 2.0)]);
        let e = axis_projection(&core, &grid, &grid.root()).unwrap();
        assert!((e[0].0 + 2.0).abs() < 1e-9 && (e[0].1 - 2.0).abs() < 1e-9);

        let core = core_of(vec![disc(&[0.0, 0.0], 1.0), disc(&[1.0, 0.0], 1.0)]);
        let e = axis_projection(&core, &grid, &grid.root()).unwrap();
        assert!(e[0].0.abs() < 1e-9 && (e[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zoom_spanning_centre_is_identity() {
        let grid = GridConfig::new(2, 20, vec![-8.0, -8.0], 16.0).unwrap();
        let core = core_of(vec![disc(&[0.0, 0.0], 2.0)]);
        assert_eq!(zoom_in(&core, &grid, &grid.root()).unwrap(), grid.root());
    }

    #[test]
    fn zoom_far_corner() {
        let grid = GridConfig::new(2, 40, vec![0.0, 0.0], 1.0).unwrap();
        // Disc clipping the top-right corner of the root by about 1e-3.
        let r = 1.0;
        let c = [1.0 + r / 2f64.sqrt() - 1e-3, 1.0 + r / 2f64.sqrt() - 1e-3];
        let core = core_of(vec![disc(&c, r)]);
        let e = axis_projection(&core, &grid, &grid.root()).unwrap();
        let span = (e[0].1 - e[0].0).max(e[1].1 - e[1].0);
        let z = zoom_in(&core, &grid, &grid.root()).unwrap();
        assert!(grid.cube_side(z.level) <= 2.0 * span + 1e-12);
    }

    #[test]
    fn fatness_examples() {
        let b = ball_from_coords(1, &[0.0, 0.0], 2, &[3.0, 0.0], 2.0).unwrap();
        assert!((b.t_star - 1.0).abs() < 1e-12);
        let core = CoreRegion::new(1, vec![0.0, 0.0], vec![b], None).unwrap();
        let (r2, r1) = core_fatness_radii(&core).unwrap();
        assert!((r2 - 1.0).abs() < 1e-12 && (r1 - 3.0).abs() < 1e-12);

        let b = ball_from_coords(1, &[0.0, 0.0], 2, &[1.0, 0.0], 1.1).unwrap();
        let core = CoreRegion::new(1, vec![0.0, 0.0], vec![b], None).unwrap();
        let (r2, r1) = core_fatness_radii(&core).unwrap();
        assert!((r1 / r2 - 21.0).abs() < 1e-9 && r1 / r2 <= 30.0);

        let empty = CoreRegion::new(1, vec![0.0, 0.0], vec![], None).unwrap();
        assert_eq!(core_fatness_radii(&empty), Err(Error::EmptyBallList));
    }

    #[test]
    fn refine_single_ball_covers_and_counts() {
        let grid = GridConfig::new(2, 48, vec![-4.0, -4.0], 8.0).unwrap();
        let b = ball_from_coords(1, &[0.0, 0.0], 2, &[1.0, 0.3], 1.5).unwrap();
        let core = CoreRegion::new(1, vec![0.0, 0.0], vec![b], None).unwrap();
        let out = refine_core(&core, 0.25, &grid).unwrap();
        assert!(!out.cubes.is_empty());
        assert!(out.total_splits() <= 2 * out.cubes.len());
        assert!(out.type_one_splits <= out.type_two_splits + 1);
        for w in out.cubes.windows(2) {
            assert!(!w[0].contains(&w[1]) && !w[1].contains(&w[0]));
        }
    }
}
