//! Canonical cubes on a fixed-point grid, z-order, compressed quadtrees and
//! point location.
//!
//! Coordinates are normalised into a root cube and snapped to `frac_bits`
//! fractional bits. A cube at `level` has side `2^-level` (root-relative) and
//! integer anchor in `[0, 2^level)` per axis. The z-order is DFS pre-order on
//! the cube hierarchy; among siblings the x-axis bit is most significant.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geom::{SiteSet, MAX_DIM};

/// Largest supported number of fractional bits.
pub const MAX_FRAC_BITS: u32 = 60;
pub const DEFAULT_FRAC_BITS: u32 = 48;

/// Affine map from instance coordinates into the root cube, plus the depth limit.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub d: usize,
    pub frac_bits: u32,
    /// Lower corner of the root cube in instance coordinates.
    pub origin: Vec<f64>,
    /// Side length of the root cube in instance units.
    pub side: f64,
}

impl GridConfig {
    pub fn new(d: usize, frac_bits: u32, origin: Vec<f64>, side: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if origin.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: origin.len(),
            });
        }
        if !(1..=MAX_FRAC_BITS).contains(&frac_bits) {
            return Err(Error::Parse(format!(
                "frac_bits must lie in [1, {MAX_FRAC_BITS}], got {frac_bits}"
            )));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Parse(format!("invalid root side {side}")));
        }
        Ok(Self {
            d,
            frac_bits,
            origin,
            side,
        })
    }

    /// Root cube centred on the bounding box of the sites, with power-of-two
    /// side at least four times the bounding-box diameter.
    pub fn for_sites(sites: &SiteSet, frac_bits: u32) -> Result<Self> {
        let (lo, hi) = sites.bounding_box();
        let diam = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        let target = if diam > 0.0 { 4.0 * diam } else { 1.0 };
        let side = 2f64.powi(target.log2().ceil() as i32);
        let origin = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| 0.5 * (a + b) - 0.5 * side)
            .collect();
        Self::new(sites.dim(), frac_bits, origin, side)
    }

    pub fn root(&self) -> CanonicalCube {
        CanonicalCube::root(self.d)
    }

    /// Side length in instance units of a cube at `level`.
    pub fn cube_side(&self, level: u32) -> f64 {
        self.side * 2f64.powi(-(level as i32))
    }

    /// Axis-aligned extent `[lo, hi]` of a cube in instance coordinates.
    pub fn cube_box(&self, c: &CanonicalCube) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let w = self.cube_side(c.level);
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..self.d {
            lo[k] = self.origin[k] + c.anchor[k] as f64 * w;
            hi[k] = lo[k] + w;
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        2f64.powi(self.frac_bits as i32)
    }

    /// Fixed-point coordinates (`frac_bits` bits) of a point inside the root.
    pub fn fixed(&self, p: &[f64]) -> Result<[u64; MAX_DIM]> {
        let limit = 1u64 << self.frac_bits;
        let scale = self.scale();
        let mut out = [0u64; MAX_DIM];
        for k in 0..self.d {
            let u = (p[k] - self.origin[k]) / self.side * scale;
            if !(u >= 0.0 && u < limit as f64) {
                return Err(Error::OutOfRoot);
            }
            out[k] = (u.floor() as u64).min(limit - 1);
        }
        Ok(out)
    }

    /// Fixed-point coordinates after clamping the point into the root cube.
    pub fn fixed_clamped(&self, p: &[f64]) -> [u64; MAX_DIM] {
        let limit = 1u64 << self.frac_bits;
        let scale = self.scale();
        let mut out = [0u64; MAX_DIM];
        for k in 0..self.d {
            let u = (p[k] - self.origin[k]) / self.side * scale;
            out[k] = if u.is_nan() || u <= 0.0 {
                0
            } else if u >= (limit - 1) as f64 {
                limit - 1
            } else {
                u.floor() as u64
            };
        }
        out
    }

    /// The level-`frac_bits` cube holding a fixed-point coordinate.
    pub fn leaf_cube(&self, fixed: [u64; MAX_DIM]) -> CanonicalCube {
        CanonicalCube {
            level: self.frac_bits,
            d: self.d as u8,
            anchor: fixed,
        }
    }

    /// Unique cube at `level` whose half-open extent contains `p`.
    pub fn cube_containing(&self, p: &[f64], level: u32) -> Result<CanonicalCube> {
        if level > self.frac_bits {
            return Err(Error::CubeOutsideRoot);
        }
        let f = self.fixed(p)?;
        Ok(self.leaf_cube(f).ancestor(level))
    }

    /// Smallest canonical cube containing both points.
    pub fn smallest_cube_covering(&self, p: &[f64], q: &[f64]) -> Result<CanonicalCube> {
        let a = self.leaf_cube(self.fixed(p)?);
        let b = self.leaf_cube(self.fixed(q)?);
        Ok(a.lca(&b))
    }

    pub fn contains_cube(&self, c: &CanonicalCube) -> bool {
        c.d as usize == self.d && c.level <= self.frac_bits && c.is_valid()
    }
}

/// Dyadic cube `prod_k [anchor_k, anchor_k + 1) * 2^-level` in root-normalised units.
///
/// `Ord` is the z-order: ancestors precede descendants, disjoint cubes are
/// ordered by the Morton order of their anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalCube {
    pub level: u32,
    pub d: u8,
    pub anchor: [u64; MAX_DIM],
}

impl CanonicalCube {
    pub fn root(d: usize) -> Self {
        Self {
            level: 0,
            d: d as u8,
            anchor: [0; MAX_DIM],
        }
    }

    pub fn new(level: u32, anchor: &[u64]) -> Self {
        let mut a = [0u64; MAX_DIM];
        a[..anchor.len()].copy_from_slice(anchor);
        Self {
            level,
            d: anchor.len() as u8,
            anchor: a,
        }
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn anchor(&self) -> &[u64] {
        &self.anchor[..self.d as usize]
    }

    pub fn is_valid(&self) -> bool {
        self.level < 64 && self.anchor().iter().all(|&a| a >> self.level == 0)
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: u32) -> Self {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        let mut out = *self;
        out.level = level;
        for a in out.anchor.iter_mut().take(self.dim()) {
            *a >>= shift;
        }
        out
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| self.ancestor(self.level - 1))
    }

    /// True if `other` is this cube or one of its descendants.
    pub fn contains(&self, other: &Self) -> bool {
        other.level >= self.level && other.ancestor(self.level).anchor == self.anchor
    }

    /// Children in z-order (x bit most significant).
    pub fn children(&self) -> impl Iterator<Item = CanonicalCube> + '_ {
        let d = self.dim();
        (0..1usize << d).map(move |t| self.child(t))
    }

    /// Child number `t` in z-order.
    pub fn child(&self, t: usize) -> Self {
        let d = self.dim();
        let mut out = *self;
        out.level += 1;
        for k in 0..d {
            out.anchor[k] = (self.anchor[k] << 1) | ((t >> (d - 1 - k)) & 1) as u64;
        }
        out
    }

    /// Smallest cube containing both (lowest common ancestor).
    pub fn lca(&self, other: &Self) -> Self {
        let deep = self.level.max(other.level);
        let mut spread = 0u64;
        for k in 0..self.dim() {
            let a = self.anchor[k] << (deep - self.level);
            let b = other.anchor[k] << (deep - other.level);
            spread |= a ^ b;
        }
        let bits = 64 - spread.leading_zeros();
        let level = self.level.min(other.level).min(deep - bits);
        self.ancestor(level)
    }

    /// Z-order successor at the same level, `None` past the last cube of the level.
    pub fn z_successor(&self) -> Option<Self> {
        let d = self.dim();
        let mut out = *self;
        for bit in 0..self.level {
            for k in (0..d).rev() {
                let mask = 1u64 << bit;
                if out.anchor[k] & mask == 0 {
                    out.anchor[k] |= mask;
                    return Some(out);
                }
                out.anchor[k] &= !mask;
            }
        }
        None
    }

    /// Anchor scaled to a finer level (the lower corner at that resolution).
    fn lifted(&self, level: u32) -> [u64; MAX_DIM] {
        let mut out = self.anchor;
        for a in out.iter_mut().take(self.dim()) {
            *a <<= level - self.level;
        }
        out
    }
}

/// Morton comparison of two integer vectors without materialising the interleaving.
fn morton_cmp(a: &[u64; MAX_DIM], b: &[u64; MAX_DIM], d: usize) -> Ordering {
    // msb(x) < msb(y)
    let less_msb = |x: u64, y: u64| x < y && x < (x ^ y);
    let mut dim = 0;
    let mut best = a[0] ^ b[0];
    for k in 1..d {
        let x = a[k] ^ b[k];
        // Strict: earlier axes win ties, they are more significant in each bit group.
        if less_msb(best, x) {
            dim = k;
            best = x;
        }
    }
    a[dim].cmp(&b[dim])
}

/// Total z-order on cubes of the same dimension.
pub fn z_compare(a: &CanonicalCube, b: &CanonicalCube) -> Ordering {
    let deep = a.level.max(b.level);
    morton_cmp(&a.lifted(deep), &b.lifted(deep), a.dim()).then(a.level.cmp(&b.level))
}

impl Ord for CanonicalCube {
    fn cmp(&self, other: &Self) -> Ordering {
        z_compare(self, other)
    }
}

impl PartialOrd for CanonicalCube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub cube: CanonicalCube,
    pub label: Option<u32>,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
}

/// How duplicate cubes are resolved during construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    MinLabel,
    /// Fault injection: keep the largest label instead.
    MaxLabel,
}

/// Compressed quadtree with nodes stored in z-order (DFS pre-order).
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedQuadTree {
    d: usize,
    max_level: u32,
    nodes: Vec<Node>,
    /// Sorted starts of the z-order intervals each owned by one node's cell.
    cells: Vec<(CanonicalCube, u32)>,
}

/// Result of a point location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub label: u32,
    pub node: u32,
    pub comparisons: u32,
}

impl CompressedQuadTree {
    /// Builds the tree from labelled cubes at depth at most `max_level`.
    ///
    /// Duplicates keep the minimum label. The result is not yet propagated.
    pub fn build(d: usize, max_level: u32, cubes: Vec<(CanonicalCube, u32)>) -> Result<Self> {
        Self::build_with(d, max_level, cubes, DuplicatePolicy::MinLabel)
    }

    pub fn build_with(
        d: usize,
        max_level: u32,
        mut cubes: Vec<(CanonicalCube, u32)>,
        policy: DuplicatePolicy,
    ) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (c, _) in &cubes {
            if c.dim() != d || c.level > max_level || !c.is_valid() {
                return Err(Error::CubeOutsideRoot);
            }
        }
        cubes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut unique: Vec<(CanonicalCube, u32)> = Vec::with_capacity(cubes.len());
        for (c, l) in cubes {
            match unique.last_mut() {
                Some(last) if last.0 == c => {
                    if policy == DuplicatePolicy::MaxLabel {
                        last.1 = l;
                    }
                }
                _ => unique.push((c, l)),
            }
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(2 * unique.len());
        let mut top_level: Vec<u32> = Vec::new();
        let mut stack: Vec<u32> = Vec::new();
        for (c, label) in unique {
            while let Some(&t) = stack.last() {
                if nodes[t as usize].cube.contains(&c) {
                    break;
                }
                stack.pop();
            }
            let id = nodes.len() as u32;
            nodes.push(Node {
                cube: c,
                label: Some(label),
                parent: None,
                children: Vec::new(),
            });
            let parent = stack.last().copied();
            let siblings = match parent {
                Some(p) => &nodes[p as usize].children,
                None => &top_level,
            };
            let merge = siblings.last().copied().and_then(|last| {
                let lca = nodes[last as usize].cube.lca(&c);
                let strictly_inside = match parent {
                    Some(p) => lca != nodes[p as usize].cube,
                    None => true,
                };
                strictly_inside.then_some((last, lca))
            });
            match merge {
                Some((last, lca)) => {
                    let mid = nodes.len() as u32;
                    nodes.push(Node {
                        cube: lca,
                        label: None,
                        parent,
                        children: vec![last, id],
                    });
                    nodes[last as usize].parent = Some(mid);
                    nodes[id as usize].parent = Some(mid);
                    let slot = match parent {
                        Some(p) => nodes[p as usize].children.last_mut(),
                        None => top_level.last_mut(),
                    };
                    *slot.expect("sibling exists") = mid;
                    stack.push(mid);
                }
                None => {
                    nodes[id as usize].parent = parent;
                    match parent {
                        Some(p) => nodes[p as usize].children.push(id),
                        None => top_level.push(id),
                    }
                }
            }
            stack.push(id);
        }
        debug_assert_eq!(top_level.len(), 1);
        let mut tree = Self {
            d,
            max_level,
            nodes: Vec::new(),
            cells: Vec::new(),
        };
        tree.nodes = renumber_preorder(nodes, top_level[0]);
        tree.rebuild_cells();
        Ok(tree)
    }

    /// Rebuilds a tree from its nodes listed in pre-order with their labels,
    /// as produced by iterating [`Self::nodes`].
    pub fn from_preorder(
        d: usize,
        max_level: u32,
        entries: Vec<(CanonicalCube, Option<u32>)>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(entries.len());
        let mut stack: Vec<u32> = Vec::new();
        for (k, (cube, label)) in entries.into_iter().enumerate() {
            if cube.dim() != d || cube.level > max_level || !cube.is_valid() {
                return Err(Error::CubeOutsideRoot);
            }
            while let Some(&t) = stack.last() {
                let outer = nodes[t as usize].cube;
                if outer.level < cube.level && outer.contains(&cube) {
                    break;
                }
                stack.pop();
            }
            let parent = stack.last().copied();
            match parent {
                Some(p) => {
                    if let Some(&prev) = nodes[p as usize].children.last() {
                        if z_compare(&nodes[prev as usize].cube, &cube) != Ordering::Less {
                            return Err(Error::Parse("cells are not in z-order".into()));
                        }
                    }
                    nodes[p as usize].children.push(k as u32);
                }
                None if k > 0 => return Err(Error::Parse("cells have more than one root".into())),
                None => {}
            }
            nodes.push(Node {
                cube,
                label,
                parent,
                children: Vec::new(),
            });
            stack.push(k as u32);
        }
        let mut tree = Self {
            d,
            max_level,
            nodes,
            cells: Vec::new(),
        };
        tree.rebuild_cells();
        Ok(tree)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interval_count(&self) -> usize {
        self.cells.len()
    }

    /// Maximum number of edges on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut best = 0;
        for (k, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                depth[k] = depth[p as usize] + 1;
                best = best.max(depth[k]);
            }
        }
        best
    }

    /// Top-down pass: a child that is unlabelled or carries a larger label than
    /// its parent takes the parent's label. The root is compared to `root_label`.
    pub fn propagate_labels(&mut self, root_label: u32) {
        // Pre-order storage means parents are visited before children.
        for k in 0..self.nodes.len() {
            let bound = match self.nodes[k].parent {
                Some(p) => self.nodes[p as usize].label.expect("parent labelled"),
                None => root_label,
            };
            let node = &mut self.nodes[k];
            if node.label.is_none_or(|l| l > bound) {
                node.label = Some(bound);
            }
        }
    }

    fn rebuild_cells(&mut self) {
        let mut cells: Vec<(CanonicalCube, u32)> = Vec::with_capacity(2 * self.nodes.len());
        let top = self.max_level;
        let push = |cells: &mut Vec<(CanonicalCube, u32)>, key: CanonicalCube, node: u32| {
            if let Some(last) = cells.last_mut() {
                if last.0 == key {
                    last.1 = node;
                    return;
                }
            }
            cells.push((key, node));
        };
        // Iterative DFS; on leaving a child, resume the parent's interval.
        enum Step {
            Enter(u32),
            Resume { parent: u32, after: u32 },
        }
        let mut work = vec![Step::Enter(0)];
        while let Some(step) = work.pop() {
            match step {
                Step::Enter(id) => {
                    let node = &self.nodes[id as usize];
                    let start = CanonicalCube {
                        level: top,
                        d: node.cube.d,
                        anchor: node.cube.lifted(top),
                    };
                    push(&mut cells, start, id);
                    for &ch in node.children.iter().rev() {
                        work.push(Step::Resume {
                            parent: id,
                            after: ch,
                        });
                        work.push(Step::Enter(ch));
                    }
                }
                Step::Resume { parent, after } => {
                    let child = self.nodes[after as usize].cube;
                    if let Some(next) = child.z_successor() {
                        if self.nodes[parent as usize].cube.contains(&next) {
                            let key = CanonicalCube {
                                level: top,
                                d: next.d,
                                anchor: next.lifted(top),
                            };
                            push(&mut cells, key, parent);
                        }
                    }
                }
            }
        }
        self.cells = cells;
    }

    /// Locates the smallest cell containing the level-`max_level` cube `key`.
    pub fn locate_key(&self, key: &CanonicalCube) -> Location {
        let mut lo = 0usize;
        let mut hi = self.cells.len();
        let mut comparisons = 0u32;
        // Find the last interval start <= key.
        while lo < hi {
            let mid = (lo + hi) / 2;
            comparisons += 1;
            if z_compare(&self.cells[mid].0, key) != Ordering::Greater {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let node = if lo == 0 { 0 } else { self.cells[lo - 1].1 };
        Location {
            label: self.nodes[node as usize].label.unwrap_or(0),
            node,
            comparisons,
        }
    }

    /// Point location for a point given in fixed-point grid coordinates.
    pub fn locate_fixed(&self, fixed: [u64; MAX_DIM]) -> Location {
        let key = CanonicalCube {
            level: self.max_level,
            d: self.d as u8,
            anchor: fixed,
        };
        self.locate_key(&key)
    }

    /// Reference point location by scanning every node.
    pub fn locate_linear(&self, fixed: [u64; MAX_DIM]) -> u32 {
        let key = CanonicalCube {
            level: self.max_level,
            d: self.d as u8,
            anchor: fixed,
        };
        let mut best: Option<u32> = None;
        for (k, n) in self.nodes.iter().enumerate() {
            if n.cube.contains(&key)
                && best.is_none_or(|b| self.nodes[b as usize].cube.level < n.cube.level)
            {
                best = Some(k as u32);
            }
        }
        best.unwrap_or(0)
    }
}

fn renumber_preorder(nodes: Vec<Node>, root: u32) -> Vec<Node> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        order.push(id);
        for &c in nodes[id as usize].children.iter().rev() {
            stack.push(c);
        }
    }
    let mut new_id = vec![u32::MAX; nodes.len()];
    for (k, &old) in order.iter().enumerate() {
        new_id[old as usize] = k as u32;
    }
    order
        .iter()
        .map(|&old| {
            let n = &nodes[old as usize];
            Node {
                cube: n.cube,
                label: n.label,
                parent: if old == root {
                    None
                } else {
                    n.parent.map(|p| new_id[p as usize])
                },
                children: n.children.iter().map(|&c| new_id[c as usize]).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(frac_bits: u32) -> GridConfig {
        GridConfig::new(2, frac_bits, vec![0.0, 0.0], 1.0).unwrap()
    }

    fn cube(level: u32, anchor: &[u64]) -> CanonicalCube {
        CanonicalCube::new(level, anchor)
    }

    #[test]
    fn cube_containing_examples() {
        let g = unit_grid(20);
        assert_eq!(g.cube_containing(&[0.3, 0.3], 1).unwrap(), cube(1, &[0, 0]));
        assert_eq!(g.cube_containing(&[0.5, 0.5], 1).unwrap(), cube(1, &[1, 1]));
        assert_eq!(g.cube_containing(&[0.3, 0.7], 2).unwrap(), cube(2, &[1, 2]));
        assert_eq!(g.cube_containing(&[1.2, 0.7], 2), Err(Error::OutOfRoot));
    }

    #[test]
    fn smallest_cube_covering_examples() {
        let g = unit_grid(20);
        assert_eq!(
            g.smallest_cube_covering(&[0.26, 0.26], &[0.4, 0.4]).unwrap(),
            cube(2, &[1, 1])
        );
        assert_eq!(
            g.smallest_cube_covering(&[0.3, 0.3], &[0.6, 0.6]).unwrap(),
            cube(0, &[0, 0])
        );
        assert_eq!(
            g.smallest_cube_covering(&[0.1, 0.1], &[0.1, 0.1]).unwrap(),
            g.cube_containing(&[0.1, 0.1], 20).unwrap()
        );
    }

    #[test]
    fn z_compare_examples() {
        let root = cube(0, &[0, 0]);
        let a = cube(1, &[0, 0]);
        let b = cube(1, &[1, 0]);
        assert_eq!(z_compare(&root, &a), Ordering::Less);
        assert_eq!(z_compare(&a, &b), Ordering::Less);
        assert_eq!(z_compare(&a, &a), Ordering::Equal);
        // x bit most significant: (0,1) precedes (1,0).
        assert_eq!(z_compare(&cube(1, &[0, 1]), &b), Ordering::Less);
    }

    /// DFS pre-order enumeration of every cube down to `depth`.
    fn preorder(c: CanonicalCube, depth: u32, out: &mut Vec<CanonicalCube>) {
        out.push(c);
        if c.level < depth {
            for ch in c.children() {
                preorder(ch, depth, out);
            }
        }
    }

    #[test]
    fn z_order_matches_recursive_preorder() {
        for d in 2..=3 {
            let mut seq = Vec::new();
            preorder(CanonicalCube::root(d), 3, &mut seq);
            let mut sorted = seq.clone();
            sorted.sort();
            assert_eq!(seq, sorted, "d={d}");
        }
    }

    #[test]
    fn z_successor_walks_the_level() {
        let mut seq = Vec::new();
        preorder(CanonicalCube::root(3), 2, &mut seq);
        let level2: Vec<_> = seq.into_iter().filter(|c| c.level == 2).collect();
        for w in level2.windows(2) {
            assert_eq!(w[0].z_successor(), Some(w[1]));
        }
        assert_eq!(level2.last().unwrap().z_successor(), None);
    }

    #[test]
    fn lca_is_smallest_common_cube() {
        let a = cube(3, &[1, 2]);
        let b = cube(3, &[1, 3]);
        assert_eq!(a.lca(&b), cube(2, &[0, 1]));
        assert_eq!(a.lca(&a), a);
        let p = cube(1, &[0, 0]);
        assert_eq!(p.lca(&a), p);
        assert_eq!(cube(2, &[3, 3]).lca(&a), cube(0, &[0, 0]));
    }

    #[test]
    fn build_single_and_duplicates() {
        let t = CompressedQuadTree::build(2, 10, vec![(cube(0, &[0, 0]), 5)]).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.nodes()[0].label, Some(5));

        let c = cube(2, &[1, 1]);
        let t = CompressedQuadTree::build(2, 10, vec![(c, 7), (c, 3), (cube(0, &[0, 0]), 9)])
            .unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.nodes()[1].label, Some(3));
    }

    #[test]
    fn propagation_rules() {
        let root = cube(0, &[0, 0]);
        let mut t = CompressedQuadTree::build(
            2,
            10,
            vec![(root, 9), (cube(1, &[0, 0]), 3), (cube(2, &[0, 0]), 5), (cube(2, &[1, 1]), 2)],
        )
        .unwrap();
        // Add an unlabelled compression node scenario separately below.
        t.propagate_labels(9);
        let label_of = |c: CanonicalCube| {
            t.nodes().iter().find(|n| n.cube == c).unwrap().label.unwrap()
        };
        assert_eq!(label_of(root), 9);
        assert_eq!(label_of(cube(1, &[0, 0])), 3);
        assert_eq!(label_of(cube(2, &[0, 0])), 3);
        assert_eq!(label_of(cube(2, &[1, 1])), 2);

        let mut t = CompressedQuadTree::build(
            2,
            10,
            vec![(root, 9), (cube(3, &[0, 0]), 4), (cube(3, &[1, 1]), 6)],
        )
        .unwrap();
        t.propagate_labels(9);
        let lca = t.nodes().iter().find(|n| n.cube == cube(2, &[0, 0])).unwrap();
        assert_eq!(lca.label, Some(9));
        assert!(t.nodes().iter().all(|n| n.label.is_some()));
    }

    #[test]
    fn locate_examples() {
        let g = unit_grid(16);
        let mut t = CompressedQuadTree::build(2, 16, vec![(g.root(), 4)]).unwrap();
        t.propagate_labels(4);
        assert_eq!(t.locate_fixed(g.fixed(&[0.7, 0.2]).unwrap()).label, 4);

        let mut t = CompressedQuadTree::build(
            2,
            16,
            vec![(g.root(), 4), (cube(1, &[1, 0]), 2), (cube(3, &[7, 0]), 1)],
        )
        .unwrap();
        t.propagate_labels(4);
        assert_eq!(t.locate_fixed(g.fixed(&[0.6, 0.3]).unwrap()).label, 2);
        assert_eq!(t.locate_fixed(g.fixed(&[0.9, 0.05]).unwrap()).label, 1);
        assert_eq!(t.locate_fixed(g.fixed(&[0.2, 0.9]).unwrap()).label, 4);
    }
}
