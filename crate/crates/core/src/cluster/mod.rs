//! Clustering and spatial indexing shared by every detection stage.

mod dbscan;
mod kdtree;
mod linkage;

pub use dbscan::{cluster_count, dbscan, dbscan_with_index, ClusterLabel};
pub use kdtree::KdTree;
pub use linkage::{centroid, merge_by_distance, merge_until_separated, single_linkage_groups, MergedPoint};

use crate::geo::LocalCoord;

/// Builds the spatial index used for radius queries.
pub fn build_index(points: &[LocalCoord]) -> KdTree {
    KdTree::build(points)
}

/// Indices of points within `radius` of `center`, ascending.
pub fn range_query(index: &KdTree, center: LocalCoord, radius: f64) -> Vec<usize> {
    index.range_query(center, radius)
}
