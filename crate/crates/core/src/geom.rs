//! Weighted sites, Apollonian balls with effective weights, and the
//! tolerance budget that splits a target `eps` over the pipeline stages.
//!
//! Sites are always kept sorted by ascending weight and addressed by their
//! 1-based rank in that order. For ranks `i < j` the ball of the pair is the
//! region where `s_i` is at least `gamma` times closer than `s_j`:
//! `gamma * |p - s_i| <= |p - s_j|`, with `gamma = max(w_j / w_i, 1 + eps_S)`.

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// Relative tolerance used for floating-point geometric predicates.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub coords: Vec<f64>,
    pub weight: f64,
    /// 1-based rank after sorting by weight.
    pub index: usize,
}

/// An immutable, weight-sorted collection of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    d: usize,
    sites: Vec<Site>,
    /// `original[k]` is the 0-based input position of the site with rank `k + 1`.
    original: Vec<usize>,
}

impl SiteSet {
    /// Ingest `(coords, weight)` pairs; stable-sorts by weight so ties keep input order.
    pub fn new(d: usize, input: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if input.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (coords, w) in &input {
            if coords.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: coords.len(),
                });
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidWeight(*w));
            }
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
        }
        let mut order: Vec<usize> = (0..input.len()).collect();
        order.sort_by(|&a, &b| input[a].1.total_cmp(&input[b].1));
        let sites = order
            .iter()
            .enumerate()
            .map(|(rank, &k)| Site {
                coords: input[k].0.clone(),
                weight: input[k].1,
                index: rank + 1,
            })
            .collect();
        Ok(Self {
            d,
            sites,
            original: order,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Site by 1-based rank.
    pub fn site(&self, index: usize) -> &Site {
        &self.sites[index - 1]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn as_slice(&self) -> &[Site] {
        &self.sites
    }

    /// Input position (0-based) of the site with the given rank.
    pub fn original_position(&self, index: usize) -> usize {
        self.original[index - 1]
    }

    /// Axis-aligned bounding box `(lo, hi)` of the site coordinates.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for s in &self.sites {
            for k in 0..self.d {
                lo[k] = lo[k].min(s.coords[k]);
                hi[k] = hi[k].max(s.coords[k]);
            }
        }
        (lo, hi)
    }
}

/// Apollonian ball of the ordered pair `(i, j)`, `i < j`, with apex `s_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveBall {
    pub i: usize,
    pub j: usize,
    pub gamma: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Distance from `s_i` to the surface towards `s_j`.
    pub t_star: f64,
    /// Distance from `s_i` to the surface away from `s_j`.
    pub t_dagger: f64,
    /// `s_j - s_i`.
    pub axis: Vec<f64>,
    /// `|s_j - s_i|^2`.
    pub dist_sq: f64,
}

impl EffectiveBall {
    pub fn contains(&self, p: &[f64]) -> bool {
        dist_sq(p, &self.center) <= self.radius * self.radius * (1.0 + REL_TOL)
    }

    pub fn diameter(&self) -> f64 {
        self.t_star + self.t_dagger
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `max(w_j / w_i, 1 + eps_S)` for ranks `i < j`.
pub fn effective_weight(sites: &SiteSet, i: usize, j: usize, eps_s: f64) -> Result<f64> {
    if i >= j {
        return Err(Error::IndexOrder { i, j });
    }
    Ok(gamma_of(sites.site(i).weight, sites.site(j).weight, eps_s))
}

/// Effective weight from raw weights; callers guarantee `w_i <= w_j` when it matters.
pub fn gamma_of(w_i: f64, w_j: f64, eps_s: f64) -> f64 {
    (w_j / w_i).max(1.0 + eps_s)
}

pub fn make_ball(s_i: &Site, s_j: &Site, gamma: f64) -> Result<EffectiveBall> {
    ball_from_coords(s_i.index, &s_i.coords, s_j.index, &s_j.coords, gamma)
}

pub(crate) fn ball_from_coords(
    i: usize,
    a: &[f64],
    j: usize,
    b: &[f64],
    gamma: f64,
) -> Result<EffectiveBall> {
    if !(gamma > 1.0) {
        return Err(Error::DegenerateGamma(gamma));
    }
    let axis: Vec<f64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
    let dist_sq: f64 = axis.iter().map(|v| v * v).sum();
    if dist_sq == 0.0 {
        return Err(Error::DegenerateSites { i, j });
    }
    let dist = dist_sq.sqrt();
    let shift = 1.0 / (gamma * gamma - 1.0);
    Ok(EffectiveBall {
        i,
        j,
        gamma,
        center: a.iter().zip(&axis).map(|(x, u)| x - u * shift).collect(),
        radius: dist / (gamma - 1.0 / gamma),
        t_star: dist / (gamma + 1.0),
        t_dagger: dist / (gamma - 1.0),
        axis,
        dist_sq,
    })
}

/// `|p - s| / w`.
pub fn weighted_distance(p: &[f64], s: &Site) -> f64 {
    dist(p, &s.coords) / s.weight
}

/// Containment test for balls whose partners lie on a common ray from the apex.
///
/// Decides `a.t* <= b.t*` and `a.t† <= b.t†` on squared quantities, so no
/// square roots are taken.
pub fn same_ray_dominates(a: &EffectiveBall, b: &EffectiveBall) -> Result<bool> {
    let dot: f64 = a.axis.iter().zip(&b.axis).map(|(x, y)| x * y).sum();
    if dot <= 0.0 || dot * dot < a.dist_sq * b.dist_sq * (1.0 - 1e-9) {
        return Err(Error::NotOnCommonRay);
    }
    Ok(dominates_sq(a.dist_sq, a.gamma, b.dist_sq, b.gamma))
}

/// `(D_a/(g_a+1) <= D_b/(g_b+1)) && (D_a/(g_a-1) <= D_b/(g_b-1))` given squared distances.
pub(crate) fn dominates_sq(da_sq: f64, ga: f64, db_sq: f64, gb: f64) -> bool {
    let slack = 1.0 + REL_TOL;
    let star = da_sq * (gb + 1.0) * (gb + 1.0) <= db_sq * (ga + 1.0) * (ga + 1.0) * slack;
    let dagger = da_sq * (gb - 1.0) * (gb - 1.0) <= db_sq * (ga - 1.0) * (ga - 1.0) * slack;
    star && dagger
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub eps: f64,
    pub eps_a: f64,
    pub eps_s: f64,
    pub eps_c: f64,
    pub eps_t: f64,
    pub eps_r: f64,
    /// Cone angle budget in radians.
    pub beta: f64,
    /// Pair decomposition separation factor.
    pub sigma: f64,
}

impl ApproxParams {
    /// Product of all component factors; must not exceed `1 + eps`.
    pub fn budget_product(&self) -> f64 {
        (1.0 + self.eps_a)
            * (1.0 + self.eps_s)
            * (1.0 + self.eps_t)
            * (1.0 + self.eps_r).powi(2)
            * (1.0 + self.eps_c).powi(2)
    }

    pub fn is_consistent(&self) -> bool {
        self.budget_product() <= 1.0 + self.eps
            && self.eps_r.max(self.eps_t).max(self.eps_c) < self.eps_s
            && self.sigma >= (2.0 / self.eps_r).max(1.0 + 2.0 / self.eps_t)
    }

    /// Enlargement factor by which reduced covers may exceed the full core.
    pub fn cover_alpha(&self) -> f64 {
        (1.0 + self.eps) / (1.0 + self.eps_a)
    }
}

/// Fixed split `eps_S = eps/8`, `eps_A = eps_C = eps_R = eps_T = eps/16`.
pub fn derive_params(eps: f64) -> Result<ApproxParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(eps));
    }
    let small = eps / 16.0;
    let p = ApproxParams {
        eps,
        eps_a: small,
        eps_s: eps / 8.0,
        eps_c: small,
        eps_t: small,
        eps_r: small,
        beta: 2.0 * small,
        sigma: (2.0 / small).max(1.0 + 2.0 / small),
    };
    debug_assert!(p.is_consistent());
    if !p.is_consistent() {
        return Err(Error::OutOfRange(eps));
    }
    Ok(p)
}

/// Ball containing all points with radius at most twice the optimum.
///
/// Returns the better of two enclosing balls: one centred at the first point
/// (radius at most the diameter, hence at most twice optimal) and one centred
/// at the bounding-box centre.
pub fn min_enclosing_ball_approx(points: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let d = first.len();
    let radius_from = |c: &[f64]| points.iter().map(|p| dist(p, c)).fold(0.0, f64::max);
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let r_first = radius_from(first);
    let r_mid = radius_from(&mid);
    if r_mid < r_first {
        Ok((mid, r_mid))
    } else {
        Ok((first.clone(), r_first))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(coords: &[f64], weight: f64, index: usize) -> Site {
        Site {
            coords: coords.to_vec(),
            weight,
            index,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn effective_weight_examples() {
        let s = SiteSet::new(
            2,
            vec![
                (vec![0.0, 0.0], 1.0),
                (vec![1.0, 0.0], 2.0),
                (vec![2.0, 0.0], 1.0),
                (vec![3.0, 0.0], 4.0),
                (vec![4.0, 0.0], 4.2),
            ],
        )
        .unwrap();
        // ranks: 1:(0,0,w1) 2:(2,0,w1) 3:(1,0,w2) 4:(3,0,w4) 5:(4,0,w4.2)
        assert!(close(effective_weight(&s, 1, 3, 0.1).unwrap(), 2.0));
        assert!(close(effective_weight(&s, 1, 2, 0.1).unwrap(), 1.1));
        assert!(close(effective_weight(&s, 4, 5, 0.1).unwrap(), 1.1));
        assert_eq!(
            effective_weight(&s, 3, 3, 0.1),
            Err(Error::IndexOrder { i: 3, j: 3 })
        );
    }

    #[test]
    fn ingestion_sorts_stably() {
        let s = SiteSet::new(
            2,
            vec![
                (vec![0.0, 0.0], 3.0),
                (vec![1.0, 0.0], 1.0),
                (vec![2.0, 0.0], 3.0),
            ],
        )
        .unwrap();
        assert_eq!(s.site(1).coords, vec![1.0, 0.0]);
        assert_eq!(s.site(2).coords, vec![0.0, 0.0]);
        assert_eq!(s.site(3).coords, vec![2.0, 0.0]);
        assert_eq!(s.original_position(2), 0);
        assert!(matches!(
            SiteSet::new(2, vec![(vec![0.0, 0.0], 0.0)]),
            Err(Error::InvalidWeight(_))
        ));
    }

    #[test]
    fn make_ball_closed_forms() {
        let b = make_ball(&site(&[0.0, 0.0], 1.0, 1), &site(&[3.0, 0.0], 2.0, 2), 2.0).unwrap();
        assert!(close(b.t_star, 1.0) && close(b.t_dagger, 3.0));
        assert!(close(b.center[0], -1.0) && close(b.center[1], 0.0));
        assert!(close(b.radius, 2.0));

        let b = make_ball(&site(&[0.0, 0.0], 1.0, 1), &site(&[2.1, 0.0], 1.0, 2), 1.1).unwrap();
        assert!((b.t_star - 1.0).abs() < 1e-12 && (b.t_dagger - 21.0).abs() < 1e-9);
        assert!((b.center[0] + 10.0).abs() < 1e-9 && (b.radius - 11.0).abs() < 1e-9);

        let b = make_ball(&site(&[0.0, 0.0], 1.0, 1), &site(&[0.0, 3.0], 2.0, 2), 2.0).unwrap();
        assert!(close(b.center[0], 0.0) && close(b.center[1], -1.0) && close(b.radius, 2.0));
    }

    #[test]
    fn make_ball_errors() {
        let a = site(&[0.0, 0.0], 1.0, 1);
        let b = site(&[0.0, 0.0], 2.0, 2);
        assert_eq!(
            make_ball(&a, &b, 2.0),
            Err(Error::DegenerateSites { i: 1, j: 2 })
        );
        let c = site(&[1.0, 0.0], 2.0, 2);
        assert_eq!(make_ball(&a, &c, 1.0), Err(Error::DegenerateGamma(1.0)));
    }

    #[test]
    fn weighted_distance_examples() {
        assert!(close(weighted_distance(&[3.0, 4.0], &site(&[0.0, 0.0], 2.0, 1)), 2.5));
        assert_eq!(weighted_distance(&[1.0, 1.0], &site(&[1.0, 1.0], 2.0, 1)), 0.0);
        assert!(close(weighted_distance(&[1.0, 0.0], &site(&[0.0, 0.0], 0.5, 1)), 2.0));
    }

    fn collinear_ball(t_star: f64, t_dagger: f64) -> EffectiveBall {
        // Invert t* = D/(g+1), t† = D/(g-1).
        let gamma = (t_dagger + t_star) / (t_dagger - t_star);
        let dist = t_star * (gamma + 1.0);
        make_ball(&site(&[0.0, 0.0], 1.0, 1), &site(&[dist, 0.0], gamma, 2), gamma).unwrap()
    }

    #[test]
    fn same_ray_dominance_examples() {
        let b13 = collinear_ball(1.0, 3.0);
        let b121 = collinear_ball(1.0, 21.0);
        let b23 = collinear_ball(2.0, 3.0);
        assert!(same_ray_dominates(&b13, &b121).unwrap());
        assert!(same_ray_dominates(&b13, &b13).unwrap());
        assert!(!same_ray_dominates(&b121, &b23).unwrap());
        let off = make_ball(&site(&[0.0, 0.0], 1.0, 1), &site(&[0.0, 3.0], 2.0, 2), 2.0).unwrap();
        assert_eq!(same_ray_dominates(&b13, &off), Err(Error::NotOnCommonRay));
    }

    #[test]
    fn derive_params_examples() {
        let p = derive_params(0.16).unwrap();
        assert!(close(p.eps_s, 0.02));
        for v in [p.eps_a, p.eps_c, p.eps_r, p.eps_t] {
            assert!(close(v, 0.01));
        }
        assert!(close(p.beta, 0.02));
        assert!((p.sigma - 201.0).abs() < 1e-9);
        // eps_A, eps_T, eps_R^2, eps_C^2: six factors of 1.01.
        assert!((p.budget_product() - 1.01f64.powi(6) * 1.02).abs() < 1e-9);
        assert!(p.budget_product() <= 1.16);
        assert_eq!(derive_params(1.5), Err(Error::OutOfRange(1.5)));
        assert_eq!(derive_params(0.0), Err(Error::OutOfRange(0.0)));
    }

    #[test]
    fn min_enclosing_ball_examples() {
        let (c, r) = min_enclosing_ball_approx(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!((c, r), (vec![0.0, 0.0], 0.0));
        let (_, r) = min_enclosing_ball_approx(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!((1.0..=2.0).contains(&r));
        assert_eq!(min_enclosing_ball_approx(&[]), Err(Error::EmptyInput));
    }
}
