//! Brute-force face enumeration for regions `box ∩ ball_1 ∩ … ∩ ball_k`.
//!
//! Every extreme point of such a region lies on a face cut out by at most `d`
//! constraint surfaces. For each subset of constraints we intersect the
//! surfaces (a sphere restricted to an affine flat, or a box vertex), take
//! the candidate extreme points of that face, and keep those that satisfy all
//! constraints. The region is empty iff no candidate survives.
//!
//! All arithmetic is done relative to the box centre.

use crate::geom::MAX_DIM;

type Vector = [f64; MAX_DIM];

#[derive(Debug, Clone)]
pub(crate) struct Region {
    d: usize,
    shift: Vector,
    lo: Vector,
    hi: Vector,
    spheres: Vec<(Vector, f64)>,
    tol: f64,
}

#[derive(Clone, Copy)]
enum Row {
    Sphere(usize),
    Plane { axis: usize, value: f64 },
}

impl Region {
    /// `lo..hi` is the box; `spheres` are `(center, radius)` in instance coordinates.
    pub(crate) fn new(d: usize, lo: &[f64], hi: &[f64], spheres: &[(&[f64], f64)]) -> Self {
        let mut shift = [0.0; MAX_DIM];
        let mut l = [0.0; MAX_DIM];
        let mut h = [0.0; MAX_DIM];
        let mut extent: f64 = 0.0;
        for k in 0..d {
            shift[k] = 0.5 * (lo[k] + hi[k]);
            l[k] = lo[k] - shift[k];
            h[k] = hi[k] - shift[k];
            extent = extent.max(hi[k] - lo[k]);
        }
        let spheres: Vec<(Vector, f64)> = spheres
            .iter()
            .map(|(c, r)| {
                let mut cc = [0.0; MAX_DIM];
                for k in 0..d {
                    cc[k] = c[k] - shift[k];
                }
                (cc, *r)
            })
            .collect();
        let scale = spheres
            .iter()
            .map(|(c, r)| norm(c, d) + r)
            .fold(extent, f64::max);
        Self {
            d,
            shift,
            lo: l,
            hi: h,
            spheres,
            tol: (1e-9 * extent + 32.0 * f64::EPSILON * scale).max(f64::MIN_POSITIVE),
        }
    }

    /// Absolute feasibility tolerance.
    pub(crate) fn tol(&self) -> f64 {
        self.tol
    }

    fn feasible(&self, x: &Vector) -> bool {
        for k in 0..self.d {
            if x[k] < self.lo[k] - self.tol || x[k] > self.hi[k] + self.tol {
                return false;
            }
        }
        self.spheres.iter().all(|(c, r)| {
            let mut s = 0.0;
            for k in 0..self.d {
                s += (x[k] - c[k]) * (x[k] - c[k]);
            }
            let lim = r + self.tol;
            s <= lim * lim
        })
    }

    fn rows(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = (0..self.spheres.len()).map(Row::Sphere).collect();
        for axis in 0..self.d {
            rows.push(Row::Plane {
                axis,
                value: self.lo[axis],
            });
            rows.push(Row::Plane {
                axis,
                value: self.hi[axis],
            });
        }
        rows
    }

    /// Calls `visit` with every candidate point (box-centred coordinates)
    /// until it returns `true`.
    fn candidates(&self, visit: &mut dyn FnMut(&Vector) -> bool) {
        let rows = self.rows();
        let mut chosen: Vec<usize> = Vec::with_capacity(self.d);
        self.subsets(&rows, 0, &mut chosen, visit);
    }

    fn subsets(
        &self,
        rows: &[Row],
        from: usize,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&Vector) -> bool,
    ) -> bool {
        for idx in from..rows.len() {
            if let Row::Plane { axis, .. } = rows[idx] {
                let clash = chosen
                    .iter()
                    .any(|&c| matches!(rows[c], Row::Plane { axis: a, .. } if a == axis));
                if clash {
                    continue;
                }
            }
            chosen.push(idx);
            if self.face_candidates(rows, chosen, visit) {
                return true;
            }
            if chosen.len() < self.d && self.subsets(rows, idx + 1, chosen, visit) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn face_candidates(
        &self,
        rows: &[Row],
        chosen: &[usize],
        visit: &mut dyn FnMut(&Vector) -> bool,
    ) -> bool {
        let d = self.d;
        let mut sphere_ids = chosen.iter().filter_map(|&c| match rows[c] {
            Row::Sphere(s) => Some(s),
            Row::Plane { .. } => None,
        });
        let Some(first) = sphere_ids.next() else {
            if chosen.len() != d {
                return false;
            }
            let mut x = [0.0; MAX_DIM];
            for &c in chosen {
                if let Row::Plane { axis, value } = rows[c] {
                    x[axis] = value;
                }
            }
            return visit(&x);
        };
        let (c0, r0) = self.spheres[first];
        let p0: f64 = (0..d).map(|k| c0[k] * c0[k]).sum::<f64>() - r0 * r0;

        // Linear system M x = h describing the flat.
        let mut m: Vec<Vector> = Vec::with_capacity(d);
        let mut h: Vec<f64> = Vec::with_capacity(d);
        for &c in chosen {
            match rows[c] {
                Row::Sphere(s) if s == first => {}
                Row::Sphere(s) => {
                    let (cb, rb) = self.spheres[s];
                    let mut row = [0.0; MAX_DIM];
                    for k in 0..d {
                        row[k] = 2.0 * (cb[k] - c0[k]);
                    }
                    let pb: f64 = (0..d).map(|k| cb[k] * cb[k]).sum::<f64>() - rb * rb;
                    m.push(row);
                    h.push(pb - p0);
                }
                Row::Plane { axis, value } => {
                    let mut row = [0.0; MAX_DIM];
                    row[axis] = 1.0;
                    m.push(row);
                    h.push(value);
                }
            }
        }
        let rank = m.len();
        let Some(gram) = Gram::new(&m, d) else {
            return false;
        };
        // x0 = c0 + M^T G^-1 (h - M c0)
        let mut resid = [0.0; MAX_DIM];
        for a in 0..rank {
            resid[a] = h[a] - dot(&m[a], &c0, d);
        }
        let y = gram.solve(&resid);
        let mut x0 = c0;
        for a in 0..rank {
            for k in 0..d {
                x0[k] += m[a][k] * y[a];
            }
        }
        let off: f64 = (0..d).map(|k| (x0[k] - c0[k]) * (x0[k] - c0[k])).sum();
        let rho_sq = r0 * r0 - off;
        if rho_sq < -1e-12 * r0 * r0 - self.tol * self.tol {
            return false;
        }
        let rho = rho_sq.max(0.0).sqrt();
        let project = |g: &Vector| -> Vector {
            let mut mg = [0.0; MAX_DIM];
            for a in 0..rank {
                mg[a] = dot(&m[a], g, d);
            }
            let z = gram.solve(&mg);
            let mut out = *g;
            for a in 0..rank {
                for k in 0..d {
                    out[k] -= m[a][k] * z[a];
                }
            }
            out
        };
        let free = d - rank;
        if free == 1 {
            let mut best = [0.0; MAX_DIM];
            let mut best_norm = 0.0;
            for axis in 0..d {
                let mut e = [0.0; MAX_DIM];
                e[axis] = 1.0;
                let v = project(&e);
                let n = norm(&v, d);
                if n > best_norm {
                    best_norm = n;
                    best = v;
                }
            }
            if best_norm <= 1e-12 {
                return false;
            }
            for sign in [1.0, -1.0] {
                let mut x = x0;
                for k in 0..d {
                    x[k] += sign * rho * best[k] / best_norm;
                }
                if visit(&x) {
                    return true;
                }
            }
            return false;
        }
        // Lexicographic extreme point for each signed axis objective.
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                let mut chosen_dir = None;
                for step in 0..d {
                    let k = (axis + step) % d;
                    let mut g = [0.0; MAX_DIM];
                    g[k] = if step == 0 { sign } else { 1.0 };
                    let v = project(&g);
                    let n = norm(&v, d);
                    if n > 1e-12 {
                        chosen_dir = Some((v, n));
                        break;
                    }
                }
                let Some((v, n)) = chosen_dir else {
                    continue;
                };
                let mut x = x0;
                for k in 0..d {
                    x[k] += rho * v[k] / n;
                }
                if visit(&x) {
                    return true;
                }
            }
        }
        false
    }

    /// Some point of the region (instance coordinates), or `None` if empty.
    pub(crate) fn witness(&self) -> Option<Vec<f64>> {
        let mut found = None;
        self.candidates(&mut |x| {
            if self.feasible(x) {
                found = Some(*x);
                true
            } else {
                false
            }
        });
        found.map(|x| (0..self.d).map(|k| x[k] + self.shift[k]).collect())
    }

    /// Per-axis `[min, max]` of the region (instance coordinates), or `None` if empty.
    pub(crate) fn extents(&self) -> Option<Vec<(f64, f64)>> {
        let d = self.d;
        let mut lo = [f64::INFINITY; MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; MAX_DIM];
        let mut any = false;
        self.candidates(&mut |x| {
            if self.feasible(x) {
                any = true;
                for k in 0..d {
                    lo[k] = lo[k].min(x[k]);
                    hi[k] = hi[k].max(x[k]);
                }
            }
            false
        });
        any.then(|| {
            (0..d)
                .map(|k| {
                    (
                        lo[k].max(self.lo[k]) + self.shift[k],
                        hi[k].min(self.hi[k]) + self.shift[k],
                    )
                })
                .collect()
        })
    }
}

fn dot(a: &Vector, b: &Vector, d: usize) -> f64 {
    (0..d).map(|k| a[k] * b[k]).sum()
}

fn norm(a: &Vector, d: usize) -> f64 {
    dot(a, a, d).sqrt()
}

/// LU-factored `M M^T` for at most `MAX_DIM` rows.
struct Gram {
    n: usize,
    lu: [[f64; MAX_DIM]; MAX_DIM],
    perm: [usize; MAX_DIM],
}

impl Gram {
    fn new(m: &[Vector], d: usize) -> Option<Self> {
        let n = m.len();
        let mut lu = [[0.0; MAX_DIM]; MAX_DIM];
        let mut scale: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                lu[a][b] = dot(&m[a], &m[b], d);
                scale = scale.max(lu[a][b].abs());
            }
        }
        let mut perm = [0, 1, 2, 3];
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| lu[a][col].abs().total_cmp(&lu[b][col].abs()))
                .unwrap();
            if lu[piv][col].abs() <= 1e-12 * scale {
                return None;
            }
            lu.swap(col, piv);
            perm.swap(col, piv);
            for r in col + 1..n {
                let f = lu[r][col] / lu[col][col];
                lu[r][col] = f;
                for c in col + 1..n {
                    lu[r][c] -= f * lu[col][c];
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    fn solve(&self, rhs: &Vector) -> Vector {
        let n = self.n;
        let mut y = [0.0; MAX_DIM];
        for r in 0..n {
            let mut s = rhs[self.perm[r]];
            for c in 0..r {
                s -= self.lu[r][c] * y[c];
            }
            y[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.lu[r][c] * y[c];
            }
            y[r] = s / self.lu[r][r];
        }
        y
    }
}
