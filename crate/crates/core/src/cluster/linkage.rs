//! Distance-threshold (single-linkage) grouping.

use super::kdtree::KdTree;
use crate::geo::LocalCoord;

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so group order is stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Transitive closure of "within `threshold` of each other".
///
/// Groups are ordered by their smallest member; members are ascending.
pub fn single_linkage_groups(points: &[LocalCoord], threshold: f64) -> Vec<Vec<usize>> {
    let tree = KdTree::build(points);
    let mut sets = DisjointSet::new(points.len());
    for (i, &p) in points.iter().enumerate() {
        tree.for_each_in_range(p, threshold, |j| {
            if j > i {
                sets.union(i, j);
            }
        });
    }
    let mut slot = vec![usize::MAX; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..points.len() {
        let root = sets.find(i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

pub fn centroid(points: &[LocalCoord], members: &[usize]) -> LocalCoord {
    let n = members.len() as f64;
    let (sx, sy) = members
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &i| (sx + points[i].x, sy + points[i].y));
    LocalCoord::new(sx / n, sy / n)
}

/// Replaces every single-linkage group by its centroid.
pub fn merge_by_distance(points: &[LocalCoord], threshold: f64) -> Vec<LocalCoord> {
    single_linkage_groups(points, threshold)
        .iter()
        .map(|g| centroid(points, g))
        .collect()
}

/// A merged location and the original inputs folded into it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedPoint {
    pub position: LocalCoord,
    pub weight: f64,
    pub members: Vec<usize>,
}

/// Weighted single-linkage merging repeated until no two outputs are within
/// `threshold`. Positions are weight-averaged.
pub fn merge_until_separated(points: &[LocalCoord], weights: &[f64], threshold: f64) -> Vec<MergedPoint> {
    assert_eq!(points.len(), weights.len());
    let mut current: Vec<MergedPoint> = points
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (&p, &w))| MergedPoint {
            position: p,
            weight: w,
            members: vec![i],
        })
        .collect();
    loop {
        let positions: Vec<LocalCoord> = current.iter().map(|m| m.position).collect();
        let groups = single_linkage_groups(&positions, threshold);
        if groups.len() == current.len() {
            return current;
        }
        current = groups
            .iter()
            .map(|g| {
                let weight: f64 = g.iter().map(|&i| current[i].weight).sum();
                let (sx, sy) = g.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                    let m = &current[i];
                    (sx + m.position.x * m.weight, sy + m.position.y * m.weight)
                });
                let mut members: Vec<usize> = g.iter().flat_map(|&i| current[i].members.clone()).collect();
                members.sort_unstable();
                MergedPoint {
                    position: LocalCoord::new(sx / weight, sy / weight),
                    weight,
                    members,
                }
            })
            .collect();
    }
}
