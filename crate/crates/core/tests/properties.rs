use std::cmp::Ordering;
use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use awvd::cover::{build_sspd, scan_cone_sites};
use awvd::cube::{CanonicalCube, GridConfig, DEFAULT_FRAC_BITS};
use awvd::diagram::{build_diagram, BuildOptions, CoverMode};
use awvd::geom::{derive_params, dist, gamma_of, make_ball, same_ray_dominates, SiteSet};
use awvd::io::{dump, load};
use awvd::oracle::brute_nn;
use awvd::refine::{classify_cube, refine_core, CoreRegion, Verdict};
use awvd::validate::coverage_misses;

/// Interleaved Morton key of the anchor lifted to `deep`, x bit first.
fn morton_key(c: &CanonicalCube, deep: u32) -> u128 {
    let d = c.dim();
    let mut key = 0u128;
    for bit in (0..deep).rev() {
        for k in 0..d {
            let a = c.anchor()[k] << (deep - c.level);
            key = (key << 1) | ((a >> bit) & 1) as u128;
        }
    }
    key
}

fn cube_strategy(d: usize) -> impl Strategy<Value = CanonicalCube> {
    (0u32..=18).prop_flat_map(move |level| {
        proptest::collection::vec(0u64..(1u64 << level), d)
            .prop_map(move |a| CanonicalCube::new(level, &a))
    })
}

fn site_strategy(d: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    proptest::collection::vec(
        (proptest::collection::vec(-10.0f64..10.0, d), 1.0f64..4.0),
        n,
    )
}

fn random_core(d: usize, k: usize, seed: u64) -> (CoreRegion, GridConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![((0..d).map(|_| rng.random::<f64>()).collect::<Vec<_>>(), 1.0)];
    for _ in 0..k {
        let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        pts.push((c, rng.random_range(1.0..4.0)));
    }
    let sites = SiteSet::new(d, pts).unwrap();
    let grid = GridConfig::for_sites(&sites, DEFAULT_FRAC_BITS).unwrap();
    let partners: Vec<usize> = (2..=k + 1).collect();
    (CoreRegion::for_site(&sites, 1, &partners, 0.1).unwrap(), grid)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn z_order_matches_interleaving(d in 1usize..=3, pair in (0u64..u64::MAX)) {
        let mut rng = ChaCha8Rng::seed_from_u64(pair);
        let mut pick = || {
            let level = rng.random_range(0..=18u32);
            let a: Vec<u64> = (0..d).map(|_| rng.random_range(0..1u64 << level)).collect();
            CanonicalCube::new(level, &a)
        };
        let (a, b) = (pick(), pick());
        let deep = a.level.max(b.level);
        let expected = morton_key(&a, deep)
            .cmp(&morton_key(&b, deep))
            .then(a.level.cmp(&b.level));
        prop_assert_eq!(a.cmp(&b), expected);
    }

    #[test]
    fn ancestors_precede_and_contain(c in cube_strategy(2)) {
        for level in 0..=c.level {
            let up = c.ancestor(level);
            prop_assert!(up.contains(&c));
            prop_assert!(up <= c);
        }
        for child in c.children() {
            prop_assert!(c.contains(&child));
            prop_assert!(!child.contains(&c));
            prop_assert_eq!(child.parent(), Some(c));
        }
    }

    #[test]
    fn lca_is_smallest_common_ancestor(a in cube_strategy(3), b in cube_strategy(3)) {
        let l = a.lca(&b);
        prop_assert!(l.contains(&a) && l.contains(&b));
        prop_assert!(l.children().all(|c| !(c.contains(&a) && c.contains(&b))));
    }

    #[test]
    fn z_successor_is_next_at_level(c in cube_strategy(2)) {
        if let Some(s) = c.z_successor() {
            prop_assert_eq!(s.level, c.level);
            prop_assert_eq!(morton_key(&s, c.level), morton_key(&c, c.level) + 1);
        } else {
            prop_assert_eq!(morton_key(&c, c.level), (1u128 << (2 * c.level)) - 1);
        }
    }

    #[test]
    fn sspd_covers_each_pair_once(pts in site_strategy(2, 2..40), sigma in 2.0f64..30.0) {
        let sites = SiteSet::new(2, pts).unwrap();
        let n = sites.len();
        let pd = build_sspd(&sites, sigma).unwrap();
        let mut seen = vec![0u32; n * n];
        for p in &pd.pairs {
            let coords = |ix: &[usize]| ix.iter().map(|&k| sites.site(k).coords.clone()).collect::<Vec<_>>();
            let (xs, ys) = (coords(&p.x), coords(&p.y));
            let diam = |v: &[Vec<f64>]| v.iter().flat_map(|a| v.iter().map(move |b| dist(a, b))).fold(0.0, f64::max);
            let gap = xs.iter().flat_map(|a| ys.iter().map(move |b| dist(a, b))).fold(f64::INFINITY, f64::min);
            prop_assert!(diam(&xs).min(diam(&ys)) * sigma <= gap * (1.0 + 1e-9));
            for &x in &p.x {
                for &y in &p.y {
                    let (u, v) = (x.min(y), x.max(y));
                    seen[(u - 1) * n + (v - 1)] += 1;
                }
            }
        }
        for u in 1..=n {
            for v in u + 1..=n {
                if sites.site(u).coords != sites.site(v).coords {
                    prop_assert_eq!(seen[(u - 1) * n + (v - 1)], 1, "pair ({}, {})", u, v);
                }
            }
        }
    }

    #[test]
    fn scan_on_common_ray_keeps_extent(
        partners in proptest::collection::vec((0.1f64..20.0, 1.05f64..6.0), 1..30),
        eps_c in 0.01f64..0.5,
    ) {
        let mut pts = vec![(vec![0.0, 0.0], 1.0)];
        pts.extend(partners.iter().map(|&(x, w)| (vec![x, 0.0], w)));
        let sites = SiteSet::new(2, pts).unwrap();
        let apex = (1..=sites.len()).find(|&k| sites.site(k).coords == [0.0, 0.0]).unwrap();
        let others: Vec<usize> = (1..=sites.len())
            .filter(|&k| k != apex && sites.site(k).coords != [0.0, 0.0])
            .collect();
        prop_assume!(!others.is_empty());
        let eps_s = 0.05;
        let ext = |j: usize| {
            let (si, sj) = (sites.site(apex), sites.site(j));
            let b = make_ball(si, sj, gamma_of(si.weight, sj.weight, eps_s)).unwrap();
            (b.t_star, b.t_dagger)
        };
        let kept = scan_cone_sites(&sites, apex, &others, eps_c, eps_s).unwrap();
        prop_assert!(!kept.is_empty());
        prop_assert!(kept.iter().all(|k| others.contains(k)));
        let a = others.iter().map(|&j| ext(j).0).fold(f64::INFINITY, f64::min);
        let b = others.iter().map(|&j| ext(j).1).fold(f64::INFINITY, f64::min);
        let ka = kept.iter().map(|&j| ext(j).0).fold(f64::INFINITY, f64::min);
        let kb = kept.iter().map(|&j| ext(j).1).fold(f64::INFINITY, f64::min);
        let slack = 1.0 + 1e-12;
        prop_assert!(ka <= a * (1.0 + eps_c / 2.0) * slack);
        prop_assert!(kb <= (b + a * eps_c / 2.0) * slack);
    }

    #[test]
    fn ball_surface_hits_axis_points(
        a in proptest::collection::vec(-5.0f64..5.0, 3),
        b in proptest::collection::vec(-5.0f64..5.0, 3),
        gamma in 1.01f64..10.0,
    ) {
        prop_assume!(dist(&a, &b) > 1e-3);
        let sites = SiteSet::new(3, vec![(a, 1.0), (b, 2.0)]).unwrap();
        let ball = make_ball(sites.site(1), sites.site(2), gamma).unwrap();
        let s = &sites.site(1).coords;
        let dd = dist(s, &sites.site(2).coords);
        let near: Vec<f64> = (0..3).map(|k| s[k] + ball.t_star * ball.axis[k] / dd).collect();
        let far: Vec<f64> = (0..3).map(|k| s[k] - ball.t_dagger * ball.axis[k] / dd).collect();
        prop_assert!((dist(&near, &ball.center) - ball.radius).abs() <= 1e-9 * ball.radius);
        prop_assert!((dist(&far, &ball.center) - ball.radius).abs() <= 1e-9 * ball.radius);
    }

    #[test]
    fn heavier_gamma_shrinks_ball(g1 in 1.01f64..5.0, dg in 0.0f64..5.0, x in 0.1f64..10.0) {
        let sites = SiteSet::new(2, vec![(vec![0.0, 0.0], 1.0), (vec![x, 0.0], 2.0)]).unwrap();
        let small = make_ball(sites.site(1), sites.site(2), g1 + dg).unwrap();
        let big = make_ball(sites.site(1), sites.site(2), g1).unwrap();
        prop_assert!(small.t_star <= big.t_star * (1.0 + 1e-12));
        prop_assert!(small.t_dagger <= big.t_dagger * (1.0 + 1e-12));
        prop_assert!(same_ray_dominates(&small, &big).unwrap());
    }

    #[test]
    fn derived_params_are_consistent(eps in 1e-4f64..0.9999) {
        let p = derive_params(eps).unwrap();
        prop_assert!(p.is_consistent());
        prop_assert!(p.budget_product() <= 1.0 + eps);
        prop_assert!(p.eps_r.max(p.eps_t).max(p.eps_c) < p.eps_s);
    }

    #[test]
    fn brute_nn_matches_direct_scan(pts in site_strategy(3, 1..30), q in proptest::collection::vec(-15.0f64..15.0, 3)) {
        let sites = SiteSet::new(3, pts.clone()).unwrap();
        let (label, best) = brute_nn(&sites, &q);
        let direct = pts
            .iter()
            .map(|(c, w)| c.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / w)
            .fold(f64::INFINITY, f64::min);
        prop_assert!((best - direct).abs() <= 1e-12 * direct.max(1.0));
        let s = sites.site(label);
        prop_assert!((dist(&s.coords, &q) / s.weight - best).abs() <= 1e-12 * best.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn classify_is_sound(d in 2usize..=3, k in 1usize..6, seed in any::<u64>(), level in 1u32..7) {
        let (core, grid) = random_core(d, k, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let apex_fixed = grid.fixed_clamped(&core.apex);
        let mut anchor: Vec<u64> = apex_fixed[..d].iter().map(|a| a >> (grid.frac_bits - level)).collect();
        for a in anchor.iter_mut() {
            let wiggle = rng.random_range(0..3u64);
            *a = (*a + wiggle).saturating_sub(1).min((1u64 << level) - 1);
        }
        let cube = CanonicalCube::new(level, &anchor);
        let verdict = classify_cube(&core, &grid, &cube);
        let (lo, hi) = grid.cube_box(&cube);
        for _ in 0..300 {
            let p: Vec<f64> = (0..d).map(|i| rng.random_range(lo[i]..hi[i])).collect();
            match verdict {
                Verdict::Inside => prop_assert!(core.contains(&p)),
                Verdict::Outside => prop_assert!(!core.contains(&p)),
                Verdict::Boundary => {}
            }
        }
    }

    #[test]
    fn refinement_covers_core(d in 2usize..=3, k in 1usize..6, seed in any::<u64>()) {
        let (core, grid) = random_core(d, k, seed);
        let out = refine_core(&core, 0.5, &grid).unwrap();
        let unique: HashSet<_> = out.cubes.iter().collect();
        prop_assert_eq!(unique.len(), out.cubes.len());
        for (x, y) in out.cubes.iter().zip(out.cubes.iter().skip(1)) {
            prop_assert_eq!(x.cmp(y), Ordering::Less);
            prop_assert!(!x.contains(y));
        }
        let misses = coverage_misses(&core, &grid, &out.cubes, 500, seed).unwrap();
        prop_assert!(misses.is_empty(), "{} uncovered samples", misses.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dump_round_trip(pts in site_strategy(2, 1..8), eps in 0.3f64..0.9) {
        let sites = SiteSet::new(2, pts).unwrap();
        let params = derive_params(eps).unwrap();
        let dgm = build_diagram(sites, CoverMode::Reduced, &params, &BuildOptions::default()).unwrap();
        let text = dump(&dgm);
        let back = load(&text).unwrap();
        prop_assert_eq!(dump(&back), text);
        let (lo, hi) = dgm.sites.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(eps.to_bits());
        for _ in 0..50 {
            let q: Vec<f64> = (0..2).map(|k| rng.random_range(lo[k] - 1.0..hi[k] + 1.0)).collect();
            prop_assert_eq!(back.query(&q).unwrap(), dgm.query(&q).unwrap());
        }
    }
}
