//! Static 2D k-d tree over local coordinates.

use crate::geo::LocalCoord;

const LEAF_SIZE: usize = 8;

/// Balanced k-d tree, immutable once built.
///
/// The tree is implicit: `order` is a permutation of point indices such that
/// for every range `[lo, hi)` the element at `mid = (lo + hi) / 2` splits the
/// range on axis `depth % 2`, with everything left of it `<=` and everything
/// right of it `>=` on that axis.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<LocalCoord>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn build(points: &[LocalCoord]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build_range(points, &mut order, 0);
        KdTree {
            points: points.to_vec(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> LocalCoord {
        self.points[index]
    }

    pub fn points(&self) -> &[LocalCoord] {
        &self.points
    }

    /// Indices of all points within `radius` (inclusive) of `center`, ascending.
    pub fn range_query(&self, center: LocalCoord, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_range(center, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }

    /// Calls `visit` for every point within `radius` of `center`, in tree order.
    pub fn for_each_in_range(&self, center: LocalCoord, radius: f64, mut visit: impl FnMut(usize)) {
        if radius < 0.0 || self.points.is_empty() {
            return;
        }
        self.visit(0, self.order.len(), 0, center, radius, radius * radius, &mut |i| {
            visit(i);
            true
        });
    }

    /// Counts points within `radius` of `center`, stopping early at `cap`.
    pub fn count_in_range(&self, center: LocalCoord, radius: f64, cap: usize) -> usize {
        if radius < 0.0 || self.points.is_empty() || cap == 0 {
            return 0;
        }
        let mut n = 0;
        self.visit(0, self.order.len(), 0, center, radius, radius * radius, &mut |_| {
            n += 1;
            n < cap
        });
        n
    }

    // Returns false once `visit` asked to stop.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        center: LocalCoord,
        radius: f64,
        radius_sq: f64,
        visit: &mut impl FnMut(usize) -> bool,
    ) -> bool {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                if self.points[i].distance_sq(&center) <= radius_sq && !visit(i) {
                    return false;
                }
            }
            return true;
        }
        let mid = (lo + hi) / 2;
        let pivot = self.points[self.order[mid]];
        let (c, s) = if depth % 2 == 0 {
            (center.x, pivot.x)
        } else {
            (center.y, pivot.y)
        };
        if pivot.distance_sq(&center) <= radius_sq && !visit(self.order[mid]) {
            return false;
        }
        if c - radius <= s && !self.visit(lo, mid, depth + 1, center, radius, radius_sq, visit) {
            return false;
        }
        if c + radius >= s && !self.visit(mid + 1, hi, depth + 1, center, radius, radius_sq, visit) {
            return false;
        }
        true
    }
}

fn build_range(points: &[LocalCoord], order: &mut [usize], depth: usize) {
    if order.len() <= LEAF_SIZE {
        return;
    }
    let mid = order.len() / 2;
    if depth % 2 == 0 {
        order.select_nth_unstable_by(mid, |&a, &b| points[a].x.total_cmp(&points[b].x));
    } else {
        order.select_nth_unstable_by(mid, |&a, &b| points[a].y.total_cmp(&points[b].y));
    }
    let (left, rest) = order.split_at_mut(mid);
    build_range(points, left, depth + 1);
    build_range(points, &mut rest[1..], depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_scan(points: &[LocalCoord], c: LocalCoord, r: f64) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| points[i].distance_sq(&c) <= r * r)
            .collect()
    }

    #[test]
    fn empty_and_single() {
        let t = KdTree::build(&[]);
        assert_eq!(t.len(), 0);
        assert!(t.range_query(LocalCoord::new(0.0, 0.0), 10.0).is_empty());
        let p = LocalCoord::new(3.0, -4.0);
        let t = KdTree::build(&[p]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.range_query(p, 0.0), vec![0]);
    }

    #[test]
    fn zero_radius_returns_duplicates() {
        let p = LocalCoord::new(1.0, 1.0);
        let mut pts = vec![p, p, LocalCoord::new(1.0, 1.5)];
        pts.extend((0..30).map(|i| LocalCoord::new(i as f64 * 3.0, 7.0)));
        let t = KdTree::build(&pts);
        assert_eq!(t.range_query(p, 0.0), vec![0, 1]);
    }

    #[test]
    fn far_query_is_empty() {
        let pts: Vec<_> = (0..50).map(|i| LocalCoord::new(i as f64, 0.0)).collect();
        let t = KdTree::build(&pts);
        assert!(t.range_query(LocalCoord::new(500.0, 500.0), 0.5).is_empty());
    }

    #[test]
    fn thousand_points_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..1000)
            .map(|_| LocalCoord::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)))
            .collect();
        let t = KdTree::build(&pts);
        for _ in 0..300 {
            let c = LocalCoord::new(rng.random_range(-20.0..520.0), rng.random_range(-20.0..520.0));
            let r = rng.random_range(0.0..60.0);
            assert_eq!(t.range_query(c, r), linear_scan(&pts, c, r));
        }
        // radius 20 specifically
        for &p in pts.iter().take(100) {
            assert_eq!(t.range_query(p, 20.0), linear_scan(&pts, p, 20.0));
        }
    }

    #[test]
    fn count_caps() {
        let pts: Vec<_> = (0..100).map(|i| LocalCoord::new(i as f64 * 0.1, 0.0)).collect();
        let t = KdTree::build(&pts);
        assert_eq!(t.count_in_range(LocalCoord::new(5.0, 0.0), 100.0, 7), 7);
        assert_eq!(t.count_in_range(LocalCoord::new(5.0, 0.0), 100.0, 1000), 100);
    }

    proptest! {
        #[test]
        fn range_query_matches_scan(
            raw in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 0..200),
            cx in -120.0f64..120.0, cy in -120.0f64..120.0, r in 0.0f64..80.0,
        ) {
            // quantize to provoke ties on the split axis
            let pts: Vec<_> = raw.iter().map(|&(x, y)| LocalCoord::new(x.round(), y.round())).collect();
            let t = KdTree::build(&pts);
            let c = LocalCoord::new(cx, cy);
            prop_assert_eq!(t.range_query(c, r), linear_scan(&pts, c, r));
        }
    }
}
