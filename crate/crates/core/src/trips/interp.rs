use super::{GpsUpdate, PreprocessParams, Trip};
use crate::geo::{GeoCoord, LocalCoord};
use crate::polyline::{resample_by_arc, Sample};
use crate::spline::BSpline;

/// Dense curve samples per resampling interval when a spline is evaluated.
const SPLINE_OVERSAMPLING: f64 = 8.0;

/// Resamples the trip every `interp_spacing_m` metres of arc length along a
/// spline of degree `spline_degree` through its local coordinates.
///
/// Timestamps, speeds and geographic positions of the new fixes are linearly
/// interpolated between the source fixes they fall between.
pub fn interpolate_trip(mut trip: Trip, p: &PreprocessParams) -> Trip {
    if trip.updates.len() < 2 {
        return trip;
    }
    let points = trip.local_points();
    let mut degree = p.spline_degree;
    if degree > 1 && points.len() < degree + 1 {
        log::warn!(
            "trip {}: {} points cannot carry a degree {degree} spline, using linear interpolation",
            trip.trip_id,
            points.len()
        );
        degree = 1;
    }

    let samples = if degree == 1 {
        resample_by_arc(&points, p.interp_spacing_m)
    } else {
        match spline_samples(&points, degree, p.interp_spacing_m) {
            Some(s) => s,
            None => {
                log::warn!("trip {}: spline fit failed, using linear interpolation", trip.trip_id);
                resample_by_arc(&points, p.interp_spacing_m)
            }
        }
    };

    let src = &trip.updates;
    let last = src.len() - 1;
    let mut out: Vec<GpsUpdate> = samples
        .iter()
        .map(|s| {
            let k = (s.source.floor() as usize).min(last.saturating_sub(1));
            let f = (s.source - k as f64).clamp(0.0, 1.0);
            let (a, b) = (&src[k], &src[k + 1]);
            GpsUpdate {
                timestamp: a.timestamp + f * (b.timestamp - a.timestamp),
                geo: GeoCoord::new(a.geo.lat + f * (b.geo.lat - a.geo.lat), a.geo.lon + f * (b.geo.lon - a.geo.lon)),
                local: s.point,
                speed_kmh: a.speed_kmh + f * (b.speed_kmh - a.speed_kmh),
                raw_heading_deg: None,
            }
        })
        .collect();
    out[0] = src[0].clone();
    let n = out.len();
    out[n - 1] = src[last].clone();
    trip.updates = out;
    trip
}

/// Arc-length samples of an interpolating spline, with `source` expressed in
/// the vertex positions of `points`.
fn spline_samples(points: &[LocalCoord], degree: usize, spacing: f64) -> Option<Vec<Sample>> {
    let spline = BSpline::interpolate(points, degree)?;
    let params = spline.params();
    let step = spacing / SPLINE_OVERSAMPLING;
    let mut dense = Vec::new();
    let mut dense_source = Vec::new();
    for k in 0..points.len() - 1 {
        let m = (points[k].distance(&points[k + 1]) / step).ceil().max(1.0) as usize;
        for j in 0..m {
            let f = j as f64 / m as f64;
            dense.push(spline.evaluate(params[k] + f * (params[k + 1] - params[k])));
            dense_source.push(k as f64 + f);
        }
    }
    dense[0] = points[0];
    dense.push(points[points.len() - 1]);
    dense_source.push((points.len() - 1) as f64);

    let samples = resample_by_arc(&dense, spacing)
        .into_iter()
        .map(|s| {
            let k = (s.source.floor() as usize).min(dense.len() - 2);
            let f = s.source - k as f64;
            Sample {
                point: s.point,
                source: dense_source[k] + f * (dense_source[k + 1] - dense_source[k]),
            }
        })
        .collect();
    Some(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{to_geo, GeoCoord};
    use crate::polyline::length;
    use proptest::prelude::*;

    const ORIGIN: GeoCoord = GeoCoord { lat: 59.9, lon: 10.5 };

    fn trip_through(points: &[LocalCoord]) -> Trip {
        let mut t = Trip::new("i");
        let mut time = 0.0;
        for (i, &pt) in points.iter().enumerate() {
            if i > 0 {
                time += points[i - 1].distance(&pt) / 2.5;
            }
            let mut u = GpsUpdate::new(time, to_geo(pt, ORIGIN), 9.0);
            u.local = pt;
            t.updates.push(u);
        }
        t
    }

    fn spacings(t: &Trip) -> Vec<f64> {
        t.updates.windows(2).map(|w| w[0].local.distance(&w[1].local)).collect()
    }

    #[test]
    fn straight_hundred_metres() {
        let t = trip_through(&[LocalCoord::new(0.0, 0.0), LocalCoord::new(100.0, 0.0)]);
        let out = interpolate_trip(t, &PreprocessParams::default());
        assert_eq!(out.updates.len(), 21);
        for d in spacings(&out) {
            assert!((d - 5.0).abs() < 1e-9);
        }
        // time scales with arc length
        assert!((out.updates[10].timestamp - 20.0).abs() < 1e-9);
    }

    #[test]
    fn two_point_trip_keeps_endpoints() {
        let pts = [LocalCoord::new(3.0, 4.0), LocalCoord::new(30.0, 40.0)];
        let t = trip_through(&pts);
        let out = interpolate_trip(t.clone(), &PreprocessParams::default());
        assert_eq!(out.updates[0], t.updates[0]);
        assert_eq!(out.updates.last(), t.updates.last());
        assert_eq!(out.updates.len(), 10);
    }

    #[test]
    fn l_shape_corner_preserved() {
        let corner = LocalCoord::new(50.0, 0.0);
        let pts = [LocalCoord::new(0.0, 0.0), corner, LocalCoord::new(50.0, 50.0)];
        let out = interpolate_trip(trip_through(&pts), &PreprocessParams::default());
        assert_eq!(out.updates.len(), 21);
        // oracle: walk the legs in 5 m arc steps by hand
        let mut expected = Vec::new();
        for k in 0..=20 {
            let s = 5.0 * k as f64;
            expected.push(if s <= 50.0 { LocalCoord::new(s, 0.0) } else { LocalCoord::new(50.0, s - 50.0) });
        }
        for (u, e) in out.updates.iter().zip(&expected) {
            assert!(u.local.distance(e) < 1e-9);
        }
        let nearest = out.updates.iter().map(|u| u.local.distance(&corner)).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 5.0);
    }

    #[test]
    fn cubic_spline_keeps_spacing() {
        let pts: Vec<_> = (0..15)
            .map(|i| {
                let a = i as f64 * 0.15;
                LocalCoord::new(200.0 * a.cos(), 200.0 * a.sin())
            })
            .collect();
        let p = PreprocessParams {
            spline_degree: 3,
            ..Default::default()
        };
        let out = interpolate_trip(trip_through(&pts), &p);
        let s = spacings(&out);
        for d in &s[..s.len() - 1] {
            assert!((d - 5.0).abs() < 0.5, "{d}");
        }
        let ts: Vec<f64> = out.updates.iter().map(|u| u.timestamp).collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spline_degree_falls_back_on_short_trip() {
        let pts = [LocalCoord::new(0.0, 0.0), LocalCoord::new(20.0, 0.0), LocalCoord::new(20.0, 20.0)];
        let p = PreprocessParams {
            spline_degree: 3,
            ..Default::default()
        };
        let out = interpolate_trip(trip_through(&pts), &p);
        assert_eq!(out.updates.len(), 9);
    }

    fn walk() -> impl Strategy<Value = Vec<LocalCoord>> {
        prop::collection::vec((20.0f64..80.0, -0.78f64..0.78), 1..15).prop_map(|steps| {
            let mut pts = vec![LocalCoord::new(0.0, 0.0)];
            let mut heading = 0.0f64;
            for (len, turn) in steps {
                heading += turn;
                let last = *pts.last().unwrap();
                pts.push(LocalCoord::new(last.x + len * heading.cos(), last.y + len * heading.sin()));
            }
            pts
        })
    }

    proptest! {
        #[test]
        fn interior_spacing_within_ten_percent(pts in walk()) {
            let out = interpolate_trip(trip_through(&pts), &PreprocessParams::default());
            let s = spacings(&out);
            for d in &s[..s.len() - 1] {
                prop_assert!((d - 5.0).abs() <= 0.5, "spacing {}", d);
            }
        }

        #[test]
        fn linear_preserves_length(pts in walk()) {
            let out = interpolate_trip(trip_through(&pts), &PreprocessParams::default());
            let before = length(&pts);
            let after = length(&out.local_points());
            prop_assert!((after - before).abs() <= 0.02 * before);
        }
    }
}
