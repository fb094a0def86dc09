//! Polyline measurement and resampling helpers.

use crate::geo::LocalCoord;

pub fn length(points: &[LocalCoord]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// A resampled point with its fractional vertex position in the source
/// polyline (`2.25` lies a quarter of the way from vertex 2 to vertex 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub point: LocalCoord,
    pub source: f64,
}

/// Samples `points` every `spacing` metres of arc length.
///
/// The first and last vertices are kept exactly; the last gap may be shorter
/// than `spacing`.
pub fn resample_by_arc(points: &[LocalCoord], spacing: f64) -> Vec<Sample> {
    assert!(spacing > 0.0);
    match points.len() {
        0 => return Vec::new(),
        1 => {
            return vec![Sample {
                point: points[0],
                source: 0.0,
            }]
        }
        _ => {}
    }
    let total = length(points);
    let tol = 1e-9 * total.max(1.0);
    let mut out = Vec::with_capacity((total / spacing) as usize + 2);
    let mut seg = 0usize;
    let mut seg_start = 0.0; // arc length at points[seg]
    let mut k = 0usize;
    loop {
        let target = k as f64 * spacing;
        if target >= total - tol {
            break;
        }
        let mut seg_len = points[seg].distance(&points[seg + 1]);
        while seg_start + seg_len < target && seg + 2 < points.len() {
            seg_start += seg_len;
            seg += 1;
            seg_len = points[seg].distance(&points[seg + 1]);
        }
        let t = if seg_len > 0.0 {
            ((target - seg_start) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(Sample {
            point: points[seg].lerp(&points[seg + 1], t),
            source: seg as f64 + t,
        });
        k += 1;
    }
    let last = points.len() - 1;
    out.push(Sample {
        point: points[last],
        source: last as f64,
    });
    out
}

/// Walks along `points` emitting vertices exactly `spacing` apart in straight
/// line distance. Endpoints are kept; the final gap may be shorter.
pub fn resample_equidistant(points: &[LocalCoord], spacing: f64) -> Vec<LocalCoord> {
    assert!(spacing > 0.0);
    if points.len() < 2 {
        return points.to_vec();
    }
    let r2 = spacing * spacing;
    let mut out = vec![points[0]];
    let mut centre = points[0];
    let mut seg = 0usize;
    let mut t0 = 0.0;
    while seg + 1 < points.len() {
        let a = points[seg];
        let b = points[seg + 1];
        if b.distance_sq(&centre) < r2 {
            seg += 1;
            t0 = 0.0;
            continue;
        }
        // exit of the segment a + t (b - a) from the circle around `centre`
        let vx = b.x - a.x;
        let vy = b.y - a.y;
        let wx = a.x - centre.x;
        let wy = a.y - centre.y;
        let qa = vx * vx + vy * vy;
        let qb = 2.0 * (wx * vx + wy * vy);
        let qc = wx * wx + wy * wy - r2;
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
        let t = ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(t0, 1.0);
        let p = a.lerp(&b, t);
        out.push(p);
        centre = p;
        t0 = t;
    }
    let end = points[points.len() - 1];
    let last = out[out.len() - 1];
    if last.distance(&end) > 1e-9 * spacing {
        out.push(end);
    } else {
        let n = out.len();
        out[n - 1] = end;
    }
    out
}

pub fn point_segment_distance(p: LocalCoord, a: LocalCoord, b: LocalCoord) -> f64 {
    let vx = b.x - a.x;
    let vy = b.y - a.y;
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.distance(&a.lerp(&b, t))
}

pub fn distance_to_polyline(p: LocalCoord, line: &[LocalCoord]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => p.distance(&line[0]),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Inserts vertices so that no gap exceeds `step`.
pub fn densify(points: &[LocalCoord], step: f64) -> Vec<LocalCoord> {
    let mut out = Vec::new();
    for w in points.windows(2) {
        let n = (w[0].distance(&w[1]) / step).ceil().max(1.0) as usize;
        for k in 0..n {
            out.push(w[0].lerp(&w[1], k as f64 / n as f64));
        }
    }
    if let Some(&last) = points.last() {
        out.push(last);
    }
    out
}

/// Symmetric Hausdorff distance between two polylines (vertices densified to 0.5 m).
pub fn hausdorff(a: &[LocalCoord], b: &[LocalCoord]) -> f64 {
    let directed = |from: &[LocalCoord], to: &[LocalCoord]| {
        densify(from, 0.5)
            .iter()
            .map(|&p| distance_to_polyline(p, to))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
