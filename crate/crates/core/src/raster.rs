//! Binary rasters: thinning, connected components, boundary tracing and the
//! Euclidean distance transform.
//!
//! Pixel `(x, y)` covers the square `[x, x+1] × [y, y+1]` in vertex
//! coordinates, with `y` growing downwards as in image files.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Point2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

/// Neighbour offsets in ring order starting north, clockwise:
/// N, NE, E, SE, S, SW, W, NW.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Parses rows of `#` (set) and anything else (clear). Handy for tests.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        Self::from_fn(width, height, |x, y| rows[y].as_bytes().get(x) == Some(&b'#'))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.bits[y * self.width + x]
    }

    /// Out-of-bounds reads as clear.
    pub fn get_i(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        let i = self.index(x, y);
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Indices of set pixels in raster order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        let mut r = [false; 8];
        for (k, (dx, dy)) in RING.iter().enumerate() {
            r[k] = self.get_i(x as i64 + dx, y as i64 + dy);
        }
        r
    }

    /// Number of set 8-neighbours.
    pub fn neighbors8(&self, x: usize, y: usize) -> usize {
        self.ring(x, y).iter().filter(|b| **b).count()
    }

    pub fn and(&self, other: &Bitmap) -> Bitmap {
        Bitmap {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        }
    }

    /// True where `self` is set and `other` is not.
    pub fn is_subset_of(&self, other: &Bitmap) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// Zhang–Suen deletion test for one sub-iteration.
fn zs_deletable(r: &[bool; 8], first: bool) -> bool {
    let b = r.iter().filter(|v| **v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let transitions = (0..8).filter(|&k| !r[k] && r[(k + 1) % 8]).count();
    if transitions != 1 {
        return false;
    }
    let (n, e, s, w) = (r[0], r[2], r[4], r[6]);
    if first {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

/// Set neighbours of a ring stay 8-connected among themselves without the
/// centre pixel.
fn ring_connected(r: &[bool; 8]) -> bool {
    let mut parent = [0usize, 1, 2, 3, 4, 5, 6, 7];
    fn find(p: &mut [usize; 8], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let join = |a: usize, b: usize, p: &mut [usize; 8]| {
        let (ra, rb) = (find(p, a), find(p, b));
        p[ra] = rb;
    };
    for k in 0..8 {
        if r[k] && r[(k + 1) % 8] {
            join(k, (k + 1) % 8, &mut parent);
        }
    }
    // Orthogonal neighbours two steps apart touch diagonally.
    for k in [0, 2, 4, 6] {
        if r[k] && r[(k + 2) % 8] {
            join(k, (k + 2) % 8, &mut parent);
        }
    }
    let mut root = None;
    for k in 0..8 {
        if r[k] {
            let f = find(&mut parent, k);
            match root {
                None => root = Some(f),
                Some(x) if x != f => return false,
                _ => {}
            }
        }
    }
    true
}

/// Corner pixels of 4-connected staircases: removing them leaves an
/// 8-connected line one pixel wide.
fn staircase_deletable(r: &[bool; 8]) -> bool {
    let b = r.iter().filter(|v| **v).count();
    if !(2..=3).contains(&b) {
        return false;
    }
    let corner = [0usize, 2, 4, 6].iter().any(|&k| r[k] && r[(k + 2) % 8]);
    corner && ring_connected(r)
}

/// Iterative morphological thinning to a one-pixel-wide, 8-connected
/// skeleton. Zhang–Suen sub-iterations alternate with a staircase clean-up
/// pass until nothing changes, so the result is a fixed point of every pass
/// and thinning it again is a no-op.
pub fn thin(mask: &Bitmap) -> Bitmap {
    let mut img = mask.clone();
    let (w, h) = (img.width, img.height);
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for first in [true, false] {
            doomed.clear();
            for y in 0..h {
                for x in 0..w {
                    if img.get(x, y) && zs_deletable(&img.ring(x, y), first) {
                        doomed.push(img.index(x, y));
                    }
                }
            }
            // Candidates come from the snapshot, but each is rechecked
            // against the current image so small blobs never vanish.
            for &i in &doomed {
                let (x, y) = img.coords(i);
                if zs_deletable(&img.ring(x, y), first) {
                    img.bits[i] = false;
                    changed = true;
                }
            }
        }
        // Sequential, so each decision sees earlier removals.
        for y in 0..h {
            for x in 0..w {
                if img.get(x, y) && staircase_deletable(&img.ring(x, y)) {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Component labels for the set pixels (`u32::MAX` elsewhere), numbered in
/// raster order of each component's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<u32>,
    pub count: usize,
}

impl Components {
    pub fn label(&self, i: usize) -> Option<usize> {
        let l = self.labels[i];
        (l != u32::MAX).then_some(l as usize)
    }

    /// Pixel indices per component, each in raster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != u32::MAX {
                out[l as usize].push(i);
            }
        }
        out
    }
}

pub fn components(img: &Bitmap, conn: Connectivity) -> Components {
    let (w, h) = (img.width as i64, img.height as i64);
    let mut labels = vec![u32::MAX; img.bits.len()];
    let mut count = 0u32;
    let mut stack = Vec::new();
    let steps: &[(i64, i64)] = match conn {
        Connectivity::Four => &[(0, -1), (1, 0), (0, 1), (-1, 0)],
        Connectivity::Eight => &RING,
    };
    for start in 0..img.bits.len() {
        if !img.bits[start] || labels[start] != u32::MAX {
            continue;
        }
        labels[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % img.width) as i64, (i / img.width) as i64);
            for (dx, dy) in steps {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if img.bits[j] && labels[j] == u32::MAX {
                    labels[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    Components {
        labels,
        count: count as usize,
    }
}

/// Offset applied to traced vertices towards the inside of the traced set,
/// so rings that pinch at a pixel corner stay simple.
pub const TRACE_INSET: f64 = 1e-3;

/// Traces the outer boundary of a pixel set along pixel edges, keeping the
/// set on the right (clockwise on screen). `start` must be the set's first
/// pixel in raster order. Returns the corner vertices in vertex coordinates,
/// each pulled [`TRACE_INSET`] towards the set.
pub fn trace_boundary(in_set: impl Fn(i64, i64) -> bool, start: (i64, i64), conn: Connectivity) -> Vec<Point2> {
    // Directions E, S, W, N in image coordinates; right turn is +1.
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let pixel_at = |v: (i64, i64), q: (i64, i64)| {
        // Pixel touching vertex v in quadrant q (components ±1).
        in_set(v.0 + (q.0 - 1) / 2, v.1 + (q.1 - 1) / 2)
    };
    let origin = start;
    let mut v = origin;
    let mut d = 0usize;
    let mut corners = Vec::new();
    loop {
        let (dx, dy) = DIRS[d];
        v = (v.0 + dx, v.1 + dy);
        let right = DIRS[(d + 1) % 4];
        let left = DIRS[(d + 3) % 4];
        let r = pixel_at(v, (dx + right.0, dy + right.1));
        let l = pixel_at(v, (dx + left.0, dy + left.1));
        let nd = match conn {
            Connectivity::Four => {
                if !r {
                    (d + 1) % 4
                } else if l {
                    (d + 3) % 4
                } else {
                    d
                }
            }
            Connectivity::Eight => {
                if l {
                    (d + 3) % 4
                } else if r {
                    d
                } else {
                    (d + 1) % 4
                }
            }
        };
        if nd != d {
            // Inward normal of a direction is its right-hand side.
            let (a, b) = (DIRS[(d + 1) % 4], DIRS[(nd + 1) % 4]);
            corners.push(Point2::new(
                v.0 as f64 + TRACE_INSET * (a.0 + b.0) as f64,
                v.1 as f64 + TRACE_INSET * (a.1 + b.1) as f64,
            ));
        }
        d = nd;
        if v == origin && d == 0 {
            break;
        }
    }
    // The start vertex is a corner (turning from N to E) and was pushed last;
    // rotate it to the front for a stable ordering.
    if let Some(last) = corners.pop() {
        corners.insert(0, last);
    }
    corners
}

/// Euclidean distance from every set pixel to the nearest clear pixel, with
/// everything outside the raster counting as clear. Clear pixels get 0.
pub fn distance_transform(img: &Bitmap) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let inf = 1e20;
    let mut f = vec![0.0; w * h];
    for (i, b) in img.bits.iter().enumerate() {
        if *b {
            f[i] = inf;
        }
    }
    // Columns, with the virtual clear border at -1 and h.
    let mut col = vec![0.0; h + 2];
    let mut out = vec![0.0; h + 2];
    for x in 0..w {
        col[0] = 0.0;
        col[h + 1] = 0.0;
        for y in 0..h {
            col[y + 1] = f[y * w + x];
        }
        edt_1d(&col, &mut out);
        for y in 0..h {
            f[y * w + x] = out[y + 1];
        }
    }
    let mut row = vec![0.0; w + 2];
    let mut out = vec![0.0; w + 2];
    for y in 0..h {
        row[0] = 0.0;
        row[w + 1] = 0.0;
        row[1..w + 1].copy_from_slice(&f[y * w..(y + 1) * w]);
        edt_1d(&row, &mut out);
        for x in 0..w {
            f[y * w + x] = crate::math::sqrt(out[x + 1]);
        }
    }
    f
}

/// Lower envelope of parabolas (Felzenszwalb–Huttenlocher): squared
/// distance transform of a sampled function.
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let inter = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64)
    };
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let diff = q as f64 - v[k] as f64;
        *dq = diff * diff + f[v[k]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;
    use alloc::format;
    use alloc::string::String;
    use proptest::prelude::*;

    fn ascii(img: &Bitmap) -> String {
        let mut s = String::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                s.push(if img.get(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    fn endpoints_and_junctions(img: &Bitmap) -> (usize, usize) {
        let (mut ends, mut junctions) = (0, 0);
        for i in img.ones() {
            let (x, y) = img.coords(i);
            match img.neighbors8(x, y) {
                1 => ends += 1,
                n if n >= 3 => junctions += 1,
                _ => {}
            }
        }
        (ends, junctions)
    }

    #[test]
    fn thin_row_is_unchanged() {
        let row = Bitmap::from_ascii(&["..........", ".########.", ".........."]);
        assert_eq!(thin(&row), row);
    }

    #[test]
    fn rectangle_thins_to_connected_path() {
        let rect = Bitmap::from_fn(30, 12, |x, y| (2..28).contains(&x) && (2..10).contains(&y));
        let s = thin(&rect);
        assert!(s.count() > 10, "{}", ascii(&s));
        assert!(s.is_subset_of(&rect));
        assert_eq!(components(&s, Connectivity::Eight).count, 1);
        for i in s.ones() {
            let (x, y) = s.coords(i);
            assert!(s.neighbors8(x, y) >= 1);
        }
        assert_eq!(thin(&s), s);
    }

    #[test]
    fn plus_has_one_junction_cluster() {
        let plus = Bitmap::from_fn(15, 15, |x, y| (6..9).contains(&x) || (6..9).contains(&y));
        let s = thin(&plus);
        let junction_px = Bitmap::from_fn(15, 15, |x, y| s.get(x, y) && s.neighbors8(x, y) >= 3);
        assert_eq!(components(&junction_px, Connectivity::Eight).count, 1, "{}", ascii(&s));
        let (ends, _) = endpoints_and_junctions(&s);
        assert_eq!(ends, 4, "{}", ascii(&s));
    }

    #[test]
    fn diagonal_band_becomes_one_pixel_wide() {
        let band = Bitmap::from_fn(20, 20, |x, y| (x as i64 - y as i64).abs() <= 1 && x > 1 && x < 18);
        let s = thin(&band);
        let (ends, junctions) = endpoints_and_junctions(&s);
        assert_eq!(junctions, 0, "{}", ascii(&s));
        assert_eq!(ends, 2, "{}", ascii(&s));
    }

    #[test]
    fn empty_mask_gives_empty_skeleton() {
        assert!(thin(&Bitmap::new(5, 5)).is_empty());
    }

    #[test]
    fn component_counts() {
        let img = Bitmap::from_ascii(&["##..#", "##..#", ".....", "#.#.."]);
        assert_eq!(components(&img, Connectivity::Four).count, 4);
        let diag = Bitmap::from_ascii(&["#.", ".#"]);
        assert_eq!(components(&diag, Connectivity::Four).count, 2);
        assert_eq!(components(&diag, Connectivity::Eight).count, 1);
        let c = components(&img, Connectivity::Four);
        assert_eq!(c.members()[0], vec![0, 1, 5, 6]);
    }

    #[test]
    fn trace_rectangle() {
        let img = Bitmap::from_fn(6, 5, |x, y| (1..4).contains(&x) && (1..3).contains(&y));
        let ring = trace_boundary(|x, y| img.get_i(x, y), (1, 1), Connectivity::Four);
        assert_eq!(ring.len(), 4);
        let e = TRACE_INSET;
        assert!(ring[0].dist(Point2::new(1.0 + e, 1.0 + e)) < 1e-12);
        // Clockwise on screen is negative signed area with y down.
        assert!((signed_area(&ring).abs() - (3.0 - 2.0 * e) * (2.0 - 2.0 * e)).abs() < 1e-9);
    }

    #[test]
    fn trace_l_shape_and_pinch() {
        let l = Bitmap::from_ascii(&["#..", "#..", "###"]);
        let ring = trace_boundary(|x, y| l.get_i(x, y), (0, 0), Connectivity::Four);
        assert_eq!(ring.len(), 6);
        assert!((signed_area(&ring).abs() - 5.0).abs() < 0.05);

        // Two blocks touching at a corner, joined around the side: the
        // outer ring passes the pinch vertex twice but stays simple.
        let pinch = Bitmap::from_ascii(&["##.", "#.#", "###"]);
        let ring = trace_boundary(|x, y| pinch.get_i(x, y), (0, 0), Connectivity::Four);
        assert!(crate::geometry::ring_is_simple(&ring), "{ring:?}");
        assert!((signed_area(&ring).abs() - 7.0).abs() < 0.05);
    }

    #[test]
    fn trace_eight_connected_joins_diagonals() {
        let diag = Bitmap::from_ascii(&["#.", ".#"]);
        let ring = trace_boundary(|x, y| diag.get_i(x, y), (0, 0), Connectivity::Eight);
        assert!((signed_area(&ring).abs() - 2.0).abs() < 0.01, "{ring:?}");
    }

    #[test]
    fn distance_transform_examples() {
        let img = Bitmap::from_fn(7, 7, |x, y| (1..6).contains(&x) && (1..6).contains(&y));
        let d = distance_transform(&img);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[img.index(1, 1)], 1.0);
        assert_eq!(d[img.index(3, 3)], 3.0);
        assert_eq!(d[img.index(2, 3)], 2.0);
        // Border counts as clear.
        let full = Bitmap::from_fn(3, 1, |_, _| true);
        assert_eq!(distance_transform(&full), vec![1.0, 1.0, 1.0]);
    }

    fn brute_distance(img: &Bitmap, x: usize, y: usize) -> f64 {
        if !img.get(x, y) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let (w, h) = (img.width() as i64, img.height() as i64);
        for yy in -1..=h {
            for xx in -1..=w {
                if !img.get_i(xx, yy) {
                    let dx = (xx - x as i64) as f64;
                    let dy = (yy - y as i64) as f64;
                    best = best.min(crate::math::sqrt(dx * dx + dy * dy));
                }
            }
        }
        best
    }

    fn arb_mask() -> impl Strategy<Value = Bitmap> {
        (4usize..14, 4usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.7), w * h)
                .prop_map(move |bits| Bitmap::from_fn(w, h, |x, y| bits[y * w + x]))
        })
    }

    proptest! {
        #[test]
        fn thinning_is_idempotent_and_inside(m in arb_mask()) {
            let s = thin(&m);
            prop_assert!(s.is_subset_of(&m));
            prop_assert_eq!(thin(&s), s.clone(), "\n{}", ascii(&s));
        }

        #[test]
        fn thinning_keeps_component_count(m in arb_mask()) {
            let before = components(&m, Connectivity::Eight);
            let after = components(&thin(&m), Connectivity::Eight);
            prop_assert_eq!(after.count, before.count, "{}", ascii(&m));
        }

        #[test]
        fn distance_matches_brute_force(m in arb_mask()) {
            let d = distance_transform(&m);
            for y in 0..m.height() {
                for x in 0..m.width() {
                    let b = brute_distance(&m, x, y);
                    prop_assert!((d[m.index(x, y)] - b).abs() < 1e-9, "({x},{y}) {} vs {b}", d[m.index(x, y)]);
                }
            }
        }

        #[test]
        fn traced_area_matches_pixel_count(m in arb_mask()) {
            let c = components(&m, Connectivity::Four);
            for members in c.members() {
                let inside = |x: i64, y: i64| {
                    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height()
                        && c.labels[m.index(x as usize, y as usize)] == c.labels[members[0]]
                };
                let (x0, y0) = m.coords(members[0]);
                let ring = trace_boundary(inside, (x0 as i64, y0 as i64), Connectivity::Four);
                prop_assert!(crate::geometry::ring_is_simple(&ring));
                // Holes are not subtracted by the outer ring, so the traced
                // area is at least the pixel count.
                let a = signed_area(&ring).abs();
                prop_assert!(a >= members.len() as f64 - 0.01 * ring.len() as f64, "{a} {}", members.len());
            }
        }
    }

    #[test]
    fn ascii_helper_formats() {
        let s = ascii(&Bitmap::from_ascii(&["#.", ".#"]));
        assert_eq!(s, format!("#.\n.#\n"));
    }
}
