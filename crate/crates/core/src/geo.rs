//! Geographic and local metric coordinates, headings.
//!
//! The local frame is built from two independent great-circle distances: `x`
//! runs along the origin's parallel and `y` along its meridian, each signed by
//! the coordinate difference. At construction-site scale this is within a few
//! centimetres of any proper projection and it inverts exactly.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    pub lat: f64,
    pub lon: f64,
}

impl GeoCoord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_in_range(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Metres east (`x`) and north (`y`) of a dataset origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalCoord {
    pub x: f64,
    pub y: f64,
}

impl LocalCoord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &LocalCoord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &LocalCoord) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Linear interpolation, `t = 0` gives `self`.
    pub fn lerp(&self, other: &LocalCoord, t: f64) -> LocalCoord {
        LocalCoord::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Direction of travel in radians, counterclockwise from east, in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Heading(f64);

impl Heading {
    /// Wraps any finite angle into `[0, 2π)`.
    pub fn from_radians(phi: f64) -> Self {
        let mut wrapped = phi.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if wrapped >= TAU {
            wrapped = 0.0;
        }
        Heading(wrapped)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Heading folded into `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormalizedHeading(f64);

impl NormalizedHeading {
    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Great-circle distance in metres between two coordinates.
pub fn haversine_distance(a: GeoCoord, b: GeoCoord) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    let c = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    EARTH_RADIUS_M * c
}

/// Projects `p` into the metric frame anchored at `origin`.
pub fn to_local(p: GeoCoord, origin: GeoCoord) -> LocalCoord {
    let along_parallel = haversine_distance(origin, GeoCoord::new(origin.lat, p.lon));
    let along_meridian = haversine_distance(origin, GeoCoord::new(p.lat, origin.lon));
    LocalCoord::new(
        along_parallel.copysign(p.lon - origin.lon),
        along_meridian.copysign(p.lat - origin.lat),
    )
}

/// Inverse of [`to_local`].
pub fn to_geo(p: LocalCoord, origin: GeoCoord) -> GeoCoord {
    let dlat = (p.y / EARTH_RADIUS_M).to_degrees();
    let cos_lat = origin.lat.to_radians().cos();
    let s = ((p.x.abs() / (2.0 * EARTH_RADIUS_M)).sin() / cos_lat).clamp(-1.0, 1.0);
    let dlon = (2.0 * s.asin()).to_degrees().copysign(p.x);
    GeoCoord::new(origin.lat + dlat, origin.lon + dlon)
}

/// Direction of the step `a -> b`.
pub fn heading_between(a: LocalCoord, b: LocalCoord) -> Result<Heading> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateStep { x: a.x, y: a.y });
    }
    Ok(Heading::from_radians(dy.atan2(dx)))
}

/// Folds a heading onto `[0, π]` by mirroring the lower half-plane.
pub fn normalize_heading(phi: Heading) -> NormalizedHeading {
    let v = phi.radians();
    if v <= PI {
        NormalizedHeading(v)
    } else {
        NormalizedHeading(TAU - v)
    }
}

/// Orientation of the line a heading travels along, in `[0, π)`.
///
/// Unlike [`normalize_heading`] this maps opposite directions of travel to the
/// same value, at the price of a wraparound at `0 ≡ π`.
pub fn axial_heading(phi: Heading) -> NormalizedHeading {
    let mut v = phi.radians() % PI;
    if v >= PI {
        v = 0.0;
    }
    NormalizedHeading(v)
}

/// Smallest difference between two line orientations, in `[0, π/2]`.
pub fn axial_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    // R·Δλ with Δλ = 1° in radians
    const ONE_DEGREE_ARC: f64 = EARTH_RADIUS_M * PI / 180.0;

    #[test]
    fn haversine_identity_and_closed_forms() {
        let p = GeoCoord::new(10.0, 20.0);
        assert_eq!(haversine_distance(p, p), 0.0);
        assert!((ONE_DEGREE_ARC - 111_194.9).abs() < 0.1);
        let eq = haversine_distance(GeoCoord::new(0.0, 0.0), GeoCoord::new(0.0, 1.0));
        let mer = haversine_distance(GeoCoord::new(0.0, 0.0), GeoCoord::new(1.0, 0.0));
        assert!((eq - 111_194.9).abs() < 0.1, "{eq}");
        assert!((mer - 111_194.9).abs() < 0.1, "{mer}");
    }

    #[test]
    fn to_local_axes() {
        let origin = GeoCoord::new(0.0, 0.0);
        assert_eq!(to_local(origin, origin), LocalCoord::new(0.0, 0.0));
        let expected = ONE_DEGREE_ARC * 0.001;
        let east = to_local(GeoCoord::new(0.0, 0.001), origin);
        assert!((east.x - expected).abs() < 0.01 && east.y == 0.0);
        assert!((east.x - 111.19).abs() < 0.01);
        let north = to_local(GeoCoord::new(0.001, 0.0), origin);
        assert!((north.y - expected).abs() < 0.01 && north.x == 0.0);
    }

    #[test]
    fn to_local_round_trip_near_origin() {
        let origin = GeoCoord::new(59.85, 10.35);
        for (dx, dy) in [(0.0, 0.0), (1234.5, -20.25), (-800.0, 4500.0)] {
            let p = LocalCoord::new(dx, dy);
            let back = to_local(to_geo(p, origin), origin);
            assert!(back.distance(&p) < 1e-6, "{p:?} -> {back:?}");
        }
    }

    #[test]
    fn heading_examples() {
        let o = LocalCoord::new(0.0, 0.0);
        assert_eq!(heading_between(o, LocalCoord::new(1.0, 0.0)).unwrap().radians(), 0.0);
        let north = heading_between(o, LocalCoord::new(0.0, 1.0)).unwrap().radians();
        assert!((north - FRAC_PI_2).abs() < 1e-12);
        let sw = heading_between(o, LocalCoord::new(-1.0, -1.0)).unwrap().radians();
        assert!((sw - 5.0 * PI / 4.0).abs() < 1e-12);
        assert!(matches!(heading_between(o, o), Err(Error::DegenerateStep { .. })));
    }

    #[test]
    fn normalize_examples() {
        let n = |v: f64| normalize_heading(Heading::from_radians(v)).radians();
        assert_eq!(n(FRAC_PI_2), FRAC_PI_2);
        assert!((n(3.0 * FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(n(PI), PI);
    }

    #[test]
    fn axial_folds_opposites() {
        let a = axial_heading(Heading::from_radians(0.3)).radians();
        let b = axial_heading(Heading::from_radians(0.3 + PI)).radians();
        assert!((a - b).abs() < 1e-12);
        assert!((axial_difference(0.05, PI - 0.05) - 0.1).abs() < 1e-12);
        assert!((axial_difference(0.0, FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn heading_wraps_tiny_negative() {
        let h = Heading::from_radians(-1e-18);
        assert!(h.radians() < TAU);
    }

    fn coord() -> impl Strategy<Value = GeoCoord> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(lat, lon)| GeoCoord::new(lat, lon))
    }

    proptest! {
        #[test]
        fn haversine_symmetric(a in coord(), b in coord()) {
            prop_assert_eq!(haversine_distance(a, b), haversine_distance(b, a));
            prop_assert!(haversine_distance(a, b) >= 0.0);
        }

        #[test]
        fn haversine_triangle(a in coord(), b in coord(), c in coord()) {
            let ab = haversine_distance(a, b);
            let bc = haversine_distance(b, c);
            let ac = haversine_distance(a, c);
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
        }

        #[test]
        fn normalize_symmetric(phi in 1e-9f64..(TAU - 1e-9)) {
            let a = normalize_heading(Heading::from_radians(phi)).radians();
            let b = normalize_heading(Heading::from_radians(TAU - phi)).radians();
            prop_assert!((0.0..=PI).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn to_local_monotone(lat in 40.0f64..70.0, lon in -20.0f64..20.0,
                             d1 in 0.0f64..0.05, d2 in 0.0f64..0.05) {
            let origin = GeoCoord::new(lat, lon);
            let lo = d1.min(d2);
            let hi = d1.max(d2);
            let a = to_local(GeoCoord::new(lat + lo, lon + lo), origin);
            let b = to_local(GeoCoord::new(lat + hi, lon + hi), origin);
            prop_assert!(a.x <= b.x && a.y <= b.y);
        }
    }
}
