//! Run configuration, read from TOML. Every section is optional; missing keys
//! take their defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action_nodes::ActionParams;
use crate::error::{Error, Result};
use crate::geo::GeoCoord;
use crate::heading_grid::HeadingFold;
use crate::intersections::{Annulus, CandidateParams, ThresholdUnit, ValidationParams};
use crate::roads::{RepresentativeMode, RoadParams};
use crate::synth::{SiteParams, TripModel, DEFAULT_ORIGIN};
use crate::trips::PreprocessParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub preprocess: PreprocessSection,
    pub heading_grid: HeadingGridSection,
    pub candidates: CandidatesSection,
    pub validation: ValidationSection,
    pub action_nodes: ActionNodesSection,
    pub roads: RoadsSection,
    pub run: RunSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub endpoint_trim_m: f64,
    pub spline_degree: usize,
    pub interp_spacing_m: f64,
    pub min_points: usize,
    pub gap_time_s: f64,
    pub gap_distance_m: f64,
    pub gap_turn_deg: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            endpoint_trim_m: 100.0,
            spline_degree: 1,
            interp_spacing_m: 5.0,
            min_points: 10,
            gap_time_s: 300.0,
            gap_distance_m: 2000.0,
            gap_turn_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadingGridSection {
    pub cell_size_m: f64,
    pub heading_fold: HeadingFold,
}

impl Default for HeadingGridSection {
    fn default() -> Self {
        HeadingGridSection {
            cell_size_m: 5.0,
            heading_fold: HeadingFold::Axial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CandidatesSection {
    pub delta_phi_thr: f64,
    pub delta_phi_thr_unit: ThresholdUnit,
    pub neighbor_radius_m: f64,
    pub merge_distance_m: f64,
}

impl Default for CandidatesSection {
    fn default() -> Self {
        CandidatesSection {
            delta_phi_thr: 1.4,
            delta_phi_thr_unit: ThresholdUnit::Native,
            neighbor_radius_m: 20.0,
            merge_distance_m: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusEntry {
    pub radius_m: f64,
    pub width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub radii: Vec<RadiusEntry>,
    pub max_points: usize,
    pub eps_passing_m: f64,
    pub min_passing: usize,
    pub d_passing_m: f64,
    pub d_ext_clust_m: f64,
    pub n_ext_clust: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            radii: vec![
                RadiusEntry {
                    radius_m: 30.0,
                    width_m: 25.0,
                },
                RadiusEntry {
                    radius_m: 100.0,
                    width_m: 25.0,
                },
            ],
            max_points: 1000,
            eps_passing_m: 12.0,
            min_passing: 5,
            d_passing_m: 15.0,
            d_ext_clust_m: 20.0,
            n_ext_clust: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionNodesSection {
    pub merge_distance_m: f64,
    pub dropoff_eps_m: f64,
    pub dropoff_min_samples: usize,
    pub trim_fraction: f64,
}

impl Default for ActionNodesSection {
    fn default() -> Self {
        ActionNodesSection {
            merge_distance_m: 100.0,
            dropoff_eps_m: 15.0,
            dropoff_min_samples: 5,
            trim_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadsSection {
    pub d_node_m: f64,
    pub eps_road_m: f64,
    pub min_road: usize,
    pub trim_margin_m: f64,
    pub representative: RepresentativeMode,
    pub prune_covered_dead_ends: bool,
}

impl Default for RoadsSection {
    fn default() -> Self {
        RoadsSection {
            d_node_m: 30.0,
            eps_road_m: 15.0,
            min_road: 5,
            trim_margin_m: 0.0,
            representative: RepresentativeMode::SmallestTripId,
            prune_covered_dead_ends: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub site: SiteParams,
    pub trips: TripModel,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            origin_lat: DEFAULT_ORIGIN.lat,
            origin_lon: DEFAULT_ORIGIN.lon,
            site: SiteParams::default(),
            trips: TripModel::default(),
        }
    }
}

impl SynthSection {
    pub fn origin(&self) -> GeoCoord {
        GeoCoord::new(self.origin_lat, self.origin_lon)
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.heading_grid.cell_size_m <= 0.0 || !self.heading_grid.cell_size_m.is_finite() {
            return Err(Error::Config("heading_grid.cell_size_m must be positive".into()));
        }
        self.preprocess().validate()?;
        self.candidates().validate()?;
        self.validation().validate()?;
        self.action_nodes().validate()?;
        self.roads().validate()?;
        if !GeoCoord::new(self.synth.origin_lat, self.synth.origin_lon).is_in_range() {
            return Err(Error::Config("synth origin is not a valid lat/lon".into()));
        }
        self.synth.site.validate(2.0 * self.candidates.merge_distance_m)?;
        self.synth.trips.validate()
    }

    pub fn preprocess(&self) -> PreprocessParams {
        let s = &self.preprocess;
        PreprocessParams {
            endpoint_trim_m: s.endpoint_trim_m,
            spline_degree: s.spline_degree,
            interp_spacing_m: s.interp_spacing_m,
            min_points: s.min_points,
            gap_time_s: s.gap_time_s,
            gap_distance_m: s.gap_distance_m,
            gap_turn_rad: s.gap_turn_deg.to_radians(),
        }
    }

    pub fn candidates(&self) -> CandidateParams {
        let s = &self.candidates;
        CandidateParams {
            delta_phi_thr: match s.delta_phi_thr_unit {
                ThresholdUnit::Native => s.delta_phi_thr,
                ThresholdUnit::Deg => s.delta_phi_thr.to_radians(),
            },
            neighbor_radius: s.neighbor_radius_m,
            merge_distance: s.merge_distance_m,
        }
    }

    pub fn validation(&self) -> ValidationParams {
        let s = &self.validation;
        ValidationParams {
            radii: s
                .radii
                .iter()
                .map(|r| Annulus {
                    radius: r.radius_m,
                    width: r.width_m,
                })
                .collect(),
            eps_passing: s.eps_passing_m,
            min_passing: s.min_passing,
            d_passing: s.d_passing_m,
            d_ext_clust: s.d_ext_clust_m,
            n_ext_clust: s.n_ext_clust,
            n_max_val: s.max_points,
            seed: self.run.seed,
        }
    }

    pub fn action_nodes(&self) -> ActionParams {
        let s = &self.action_nodes;
        ActionParams {
            merge_distance: s.merge_distance_m,
            dropoff_eps: s.dropoff_eps_m,
            dropoff_min_samples: s.dropoff_min_samples,
            trim_fraction: s.trim_fraction,
        }
    }

    pub fn roads(&self) -> RoadParams {
        let s = &self.roads;
        RoadParams {
            d_node: s.d_node_m,
            eps_road: s.eps_road_m,
            min_road: s.min_road,
            trim_margin: s.trim_margin_m,
            representative: s.representative,
            prune_covered_dead_ends: s.prune_covered_dead_ends,
            spacing: self.preprocess.interp_spacing_m,
            seed: self.run.seed,
        }
    }
}
