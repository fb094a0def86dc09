//! Precision and recall of detected intersections against labelled ones.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{to_local, GeoCoord, LocalCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStrategy {
    /// Closest pairs first, one-to-one.
    #[default]
    Greedy,
    /// Maximum number of pairs, then minimum total distance.
    Hungarian,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// `(predicted index, actual index, distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_predicted: Vec<usize>,
    pub unmatched_actual: Vec<usize>,
}

impl Matching {
    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_predicted.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_actual.len()
    }
}

pub fn match_points(predicted: &[LocalCoord], actual: &[LocalCoord], tolerance: f64, strategy: MatchStrategy) -> Matching {
    let pairs = match strategy {
        MatchStrategy::Greedy => greedy(predicted, actual, tolerance),
        MatchStrategy::Hungarian => hungarian_pairs(predicted, actual, tolerance),
    };
    let mut used_p = vec![false; predicted.len()];
    let mut used_a = vec![false; actual.len()];
    for &(i, j, _) in &pairs {
        used_p[i] = true;
        used_a[j] = true;
    }
    Matching {
        pairs,
        unmatched_predicted: (0..predicted.len()).filter(|&i| !used_p[i]).collect(),
        unmatched_actual: (0..actual.len()).filter(|&j| !used_a[j]).collect(),
    }
}

fn greedy(predicted: &[LocalCoord], actual: &[LocalCoord], tolerance: f64) -> Vec<(usize, usize, f64)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, a) in actual.iter().enumerate() {
            let d = p.distance(a);
            if d <= tolerance {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_a = vec![false; actual.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in cand {
        if !used_p[i] && !used_a[j] {
            used_p[i] = true;
            used_a[j] = true;
            pairs.push((i, j, d));
        }
    }
    pairs
}

fn hungarian_pairs(predicted: &[LocalCoord], actual: &[LocalCoord], tolerance: f64) -> Vec<(usize, usize, f64)> {
    let n = predicted.len().max(actual.len());
    if predicted.is_empty() || actual.is_empty() {
        return Vec::new();
    }
    // out-of-tolerance pairs cost more than any feasible full assignment of
    // in-tolerance pairs, so the number of matches is maximised first
    let big = (tolerance.max(1.0) + 1.0) * (n as f64 + 1.0);
    let mut cost = vec![vec![big; n]; n];
    for (i, p) in predicted.iter().enumerate() {
        for (j, a) in actual.iter().enumerate() {
            let d = p.distance(a);
            if d <= tolerance {
                cost[i][j] = d;
            }
        }
    }
    let assignment = hungarian(&cost);
    let mut pairs: Vec<(usize, usize, f64)> = assignment
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < predicted.len() && j < actual.len())
        .map(|(i, j)| (i, j, predicted[i].distance(&actual[j])))
        .filter(|&(_, _, d)| d <= tolerance)
        .collect();
    pairs.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)));
    pairs
}

/// Minimum-cost perfect assignment on a square matrix; returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // potentials and matching with 1-based sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tolerance: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// No predictions: precision is reported as 0.
    pub precision_undefined: bool,
    /// No labels: recall is reported as 0.
    pub recall_undefined: bool,
}

impl PrPoint {
    pub fn from_matching(tolerance: f64, m: &Matching) -> Self {
        let (tp, fp, fn_) = (m.tp(), m.fp(), m.fn_());
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        PrPoint {
            tolerance,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            tp,
            fp,
            fn_,
            precision_undefined: tp + fp == 0,
            recall_undefined: tp + fn_ == 0,
        }
    }
}

pub fn pr_curve(
    predicted: &[LocalCoord],
    actual: &[LocalCoord],
    tolerances: &[f64],
    strategy: MatchStrategy,
) -> Result<Vec<PrPoint>> {
    if tolerances.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("tolerances must be strictly increasing".into()));
    }
    if tolerances.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidInput("tolerances must be non-negative".into()));
    }
    Ok(tolerances
        .par_iter()
        .map(|&t| PrPoint::from_matching(t, &match_points(predicted, actual, t, strategy)))
        .collect())
}

pub fn write_pr_csv<W: Write>(curve: &[PrPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tolerance_m", "precision", "recall", "tp", "fp", "fn"])?;
    for p in curve {
        w.write_record([
            format_number(p.tolerance),
            format!("{:.6}", p.precision),
            format!("{:.6}", p.recall),
            p.tp.to_string(),
            p.fp.to_string(),
            p.fn_.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<pr csv>", e))?;
    Ok(())
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Ground-truth intersection positions in either frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Local(Vec<LocalCoord>),
    Geo(Vec<GeoCoord>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Local(v) => v.len(),
            Labels::Geo(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positions in the local frame anchored at `origin`.
    pub fn to_local(&self, origin: Option<GeoCoord>) -> Result<Vec<LocalCoord>> {
        match self {
            Labels::Local(v) => Ok(v.clone()),
            Labels::Geo(v) => {
                let o = origin.ok_or_else(|| {
                    Error::FrameMismatch("labels are lat/lon but the graph carries no geographic origin".into())
                })?;
                Ok(v.iter().map(|&g| to_local(g, o)).collect())
            }
        }
    }
}

/// Reads a label CSV with columns `x,y` or `lat,lon`.
pub fn read_labels<R: Read>(input: R) -> Result<Labels> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (kind, a, b) = match (col("x"), col("y"), col("lat"), col("lon")) {
        (Some(x), Some(y), _, _) => (0, x, y),
        (_, _, Some(la), Some(lo)) => (1, la, lo),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "label file needs columns x,y or lat,lon".into(),
            })
        }
    };
    let mut pairs = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad number in column {}", i + 1),
                })
        };
        pairs.push((get(a)?, get(b)?));
    }
    if kind == 0 {
        Ok(Labels::Local(pairs.into_iter().map(|(x, y)| LocalCoord::new(x, y)).collect()))
    } else {
        let geo: Vec<GeoCoord> = pairs.into_iter().map(|(la, lo)| GeoCoord::new(la, lo)).collect();
        if let Some(bad) = geo.iter().find(|g| !g.is_in_range()) {
            return Err(Error::FrameMismatch(format!(
                "label ({}, {}) is not a valid latitude/longitude; metric labels need x,y columns",
                bad.lat, bad.lon
            )));
        }
        Ok(Labels::Geo(geo))
    }
}

pub fn write_labels<W: Write>(labels: &Labels, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match labels {
        Labels::Local(v) => {
            w.write_record(["x", "y"])?;
            for p in v {
                w.write_record([format!("{:.3}", p.x), format!("{:.3}", p.y)])?;
            }
        }
        Labels::Geo(v) => {
            w.write_record(["lat", "lon"])?;
            for g in v {
                w.write_record([format!("{:.8}", g.lat), format!("{:.8}", g.lon)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

/// Even-odd rule; points on the boundary may fall either way.
pub fn point_in_polygon(p: LocalCoord, polygon: &[LocalCoord]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn within_polygon(points: &[LocalCoord], polygon: &[LocalCoord]) -> Vec<LocalCoord> {
    points.iter().copied().filter(|p| point_in_polygon(*p, polygon)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<LocalCoord> {
        v.iter().map(|&(x, y)| LocalCoord::new(x, y)).collect()
    }

    #[test]
    fn identical_sets() {
        let a = pts(&[(0.0, 0.0), (50.0, 10.0), (-30.0, 80.0)]);
        for s in [MatchStrategy::Greedy, MatchStrategy::Hungarian] {
            let m = match_points(&a, &a, 0.0, s);
            assert_eq!((m.tp(), m.fp(), m.fn_()), (3, 0, 0));
        }
    }

    #[test]
    fn half_precision_full_recall() {
        let m = match_points(&pts(&[(0.0, 0.0), (100.0, 0.0)]), &pts(&[(2.0, 0.0)]), 10.0, MatchStrategy::Greedy);
        let p = PrPoint::from_matching(10.0, &m);
        assert_eq!((p.tp, p.fp, p.fn_), (1, 1, 0));
        assert_eq!((p.precision, p.recall), (0.5, 1.0));
    }

    #[test]
    fn empty_predictions_flagged() {
        let m = match_points(&[], &pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), 10.0, MatchStrategy::Greedy);
        let p = PrPoint::from_matching(10.0, &m);
        assert_eq!((p.precision, p.recall), (0.0, 0.0));
        assert!(p.precision_undefined);
        assert!(!p.recall_undefined);
    }

    #[test]
    fn zero_tolerance_disjoint() {
        let c = pr_curve(&pts(&[(0.0, 0.0)]), &pts(&[(1.0, 0.0)]), &[0.0], MatchStrategy::Greedy).unwrap();
        assert_eq!((c[0].precision, c[0].recall), (0.0, 0.0));
    }

    #[test]
    fn hungarian_beats_greedy_on_count() {
        // greedy takes the 1 m pair and strands the other two
        let p = pts(&[(0.0, 0.0), (10.0, 0.0)]);
        let a = pts(&[(9.0, 0.0), (19.0, 0.0)]);
        assert_eq!(match_points(&p, &a, 9.5, MatchStrategy::Greedy).tp(), 1);
        assert_eq!(match_points(&p, &a, 9.5, MatchStrategy::Hungarian).tp(), 2);
    }

    #[test]
    fn hungarian_small_matrix() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn csv_and_labels() {
        let c = pr_curve(&pts(&[(0.0, 0.0)]), &pts(&[(0.0, 0.0)]), &[10.0, 20.0, 30.0, 40.0, 50.0], MatchStrategy::Greedy).unwrap();
        let mut buf = Vec::new();
        write_pr_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("tolerance_m,precision,recall,tp,fp,fn\n10,1.000000,1.000000,1,0,0\n"));

        let l = read_labels("x,y\n1.5,2\n-3,4\n".as_bytes()).unwrap();
        assert_eq!(l, Labels::Local(pts(&[(1.5, 2.0), (-3.0, 4.0)])));
        let g = read_labels("lat,lon\n59.9,10.7\n".as_bytes()).unwrap();
        assert!(matches!(g.to_local(None), Err(Error::FrameMismatch(_))));
        assert!(matches!(read_labels("lat,lon\n512.0,10.7\n".as_bytes()), Err(Error::FrameMismatch(_))));
        let mut buf = Vec::new();
        write_labels(&g, &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn polygon_filter() {
        let square = pts(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let inside = within_polygon(&pts(&[(5.0, 5.0), (15.0, 5.0), (-1.0, 3.0)]), &square);
        assert_eq!(inside, pts(&[(5.0, 5.0)]));
    }

    fn cloud() -> impl Strategy<Value = Vec<LocalCoord>> {
        prop::collection::vec((-200.0f64..200.0, -200.0f64..200.0), 0..25)
            .prop_map(|v| v.into_iter().map(|(x, y)| LocalCoord::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn counts_consistent_and_symmetric(p in cloud(), a in cloud(), t in 0.0f64..80.0) {
            for s in [MatchStrategy::Greedy, MatchStrategy::Hungarian] {
                let m = match_points(&p, &a, t, s);
                prop_assert_eq!(m.tp() + m.fn_(), a.len());
                prop_assert_eq!(m.tp() + m.fp(), p.len());
                prop_assert!(m.pairs.iter().all(|&(_, _, d)| d <= t));
                let r = match_points(&a, &p, t, s);
                prop_assert_eq!(r.tp(), m.tp());
                prop_assert_eq!(r.fp(), m.fn_());
                prop_assert_eq!(r.fn_(), m.fp());
            }
        }

        #[test]
        fn curve_is_monotone(p in cloud(), a in cloud(), steps in prop::collection::vec(0.1f64..20.0, 1..8)) {
            let mut tol = Vec::new();
            let mut acc = 0.0;
            for s in steps { acc += s; tol.push(acc); }
            for s in [MatchStrategy::Greedy, MatchStrategy::Hungarian] {
                let c = pr_curve(&p, &a, &tol, s).unwrap();
                for w in c.windows(2) {
                    prop_assert!(w[0].precision <= w[1].precision);
                    prop_assert!(w[0].recall <= w[1].recall);
                }
            }
        }

        #[test]
        fn hungarian_never_matches_fewer(p in cloud(), a in cloud(), t in 0.0f64..80.0) {
            let g = match_points(&p, &a, t, MatchStrategy::Greedy).tp();
            let h = match_points(&p, &a, t, MatchStrategy::Hungarian).tp();
            prop_assert!(h >= g);
        }
    }
}
