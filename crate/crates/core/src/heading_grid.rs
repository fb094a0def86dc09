//! Grid of median travel directions and the directional dissimilarity field
//! derived from it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::{axial_difference, axial_heading, heading_between, normalize_heading, LocalCoord};
use crate::trips::Trip;

/// How a step direction in `[0, 2π)` is folded so that both travel directions
/// along a road count as one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadingFold {
    /// `φ mod π`, compared on the circle of circumference π. Opposite
    /// directions map to the same value.
    #[default]
    Axial,
    /// `φ` if `φ ≤ π`, else `2π − φ`, compared as plain numbers. Mirrors
    /// directions about the x axis; opposite directions do not coincide
    /// unless they are vertical.
    Reflect,
}

impl HeadingFold {
    pub fn fold(self, phi: f64) -> f64 {
        let h = crate::geo::Heading::from_radians(phi);
        match self {
            HeadingFold::Axial => axial_heading(h).radians(),
            HeadingFold::Reflect => normalize_heading(h).radians(),
        }
    }

    pub fn difference(self, a: f64, b: f64) -> f64 {
        match self {
            HeadingFold::Axial => axial_difference(a, b),
            HeadingFold::Reflect => (a - b).abs(),
        }
    }

    /// Median of folded headings; consumes and sorts `values`.
    pub fn median(self, values: &mut [f64]) -> f64 {
        values.sort_by(f64::total_cmp);
        match self {
            HeadingFold::Reflect => sorted_median(values),
            HeadingFold::Axial => axial_median(values),
        }
    }
}

fn sorted_median(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of sorted values on the circle `[0, π)`: the circle is cut at its
/// widest empty gap and the ordinary median taken along the unrolled arc.
fn axial_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let mut start = 0;
    let mut widest = sorted[0] + PI - sorted[n - 1];
    for i in 0..n - 1 {
        let gap = sorted[i + 1] - sorted[i];
        if gap > widest {
            widest = gap;
            start = i + 1;
        }
    }
    let unrolled: Vec<f64> = (0..n)
        .map(|k| {
            let idx = (start + k) % n;
            if idx < start {
                sorted[idx] + PI
            } else {
                sorted[idx]
            }
        })
        .collect();
    let m = sorted_median(&unrolled) % PI;
    if m >= PI {
        0.0
    } else {
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub median_phi: f64,
    pub count: usize,
}

pub type CellIndex = (u32, u32);

/// Sparse grid of square cells; only cells that received a heading are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingGrid {
    /// Lower-left corner of cell `(0, 0)`.
    pub origin: LocalCoord,
    pub cell_size: f64,
    pub fold: HeadingFold,
    pub cells: BTreeMap<CellIndex, CellStats>,
}

impl HeadingGrid {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_center(&self, (i, j): CellIndex) -> LocalCoord {
        LocalCoord::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, p: LocalCoord) -> Option<CellIndex> {
        let i = ((p.x - self.origin.x) / self.cell_size).floor();
        let j = ((p.y - self.origin.y) / self.cell_size).floor();
        (i >= 0.0 && j >= 0.0 && i <= u32::MAX as f64 && j <= u32::MAX as f64).then_some((i as u32, j as u32))
    }

    pub fn get(&self, cell: CellIndex) -> Option<&CellStats> {
        self.cells.get(&cell)
    }
}

/// Bins the folded direction of every step of every trip into the cell that
/// holds the step's start point and keeps the per-cell median.
pub fn build_grid(trips: &[Trip], cell_size: f64, fold: HeadingFold) -> HeadingGrid {
    assert!(cell_size > 0.0);
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    for u in trips.iter().flat_map(|t| &t.updates) {
        min_x = min_x.min(u.local.x);
        min_y = min_y.min(u.local.y);
    }
    let origin = if min_x.is_finite() {
        LocalCoord::new((min_x / cell_size).floor() * cell_size, (min_y / cell_size).floor() * cell_size)
    } else {
        LocalCoord::default()
    };
    let mut grid = HeadingGrid {
        origin,
        cell_size,
        fold,
        cells: BTreeMap::new(),
    };
    if trips.is_empty() {
        return grid;
    }

    let partial: Vec<BTreeMap<CellIndex, Vec<f64>>> = trips
        .par_iter()
        .map(|trip| {
            let mut bins: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
            for w in trip.updates.windows(2) {
                let Ok(h) = heading_between(w[0].local, w[1].local) else {
                    continue;
                };
                if let Some(cell) = grid.cell_of(w[0].local) {
                    bins.entry(cell).or_default().push(fold.fold(h.radians()));
                }
            }
            bins
        })
        .collect();
    let mut merged: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
    for bins in partial {
        for (cell, mut v) in bins {
            merged.entry(cell).or_default().append(&mut v);
        }
    }
    let cells: Vec<(CellIndex, CellStats)> = merged
        .into_par_iter()
        .map(|(cell, mut v)| {
            let count = v.len();
            (
                cell,
                CellStats {
                    median_phi: fold.median(&mut v),
                    count,
                },
            )
        })
        .collect();
    grid.cells = cells.into_iter().collect();
    grid
}

/// Root of the summed squared median differences between each cell and
/// every data-bearing cell whose centre lies within `neighbor_radius`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DissimilarityField {
    pub values: BTreeMap<CellIndex, f64>,
}

impl DissimilarityField {
    pub fn get(&self, cell: CellIndex) -> Option<f64> {
        self.values.get(&cell).copied()
    }

    pub fn max(&self) -> f64 {
        self.values.values().copied().fold(0.0, f64::max)
    }
}

/// Integer cell offsets whose centres lie within `radius` of the origin cell's
/// centre, excluding the cell itself.
pub fn neighbor_offsets(cell_size: f64, radius: f64) -> Vec<(i64, i64)> {
    let reach = (radius / cell_size).floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            if (di, dj) == (0, 0) {
                continue;
            }
            let d2 = ((di * di + dj * dj) as f64) * cell_size * cell_size;
            if d2 <= r2 * (1.0 + 1e-12) {
                out.push((di, dj));
            }
        }
    }
    out
}

pub fn dissimilarity(grid: &HeadingGrid, neighbor_radius: f64) -> DissimilarityField {
    let offsets = neighbor_offsets(grid.cell_size, neighbor_radius);
    let cells: Vec<(&CellIndex, &CellStats)> = grid.cells.iter().collect();
    let values: Vec<(CellIndex, f64)> = cells
        .par_iter()
        .map(|&(&(i, j), stats)| {
            let mut sum = 0.0;
            for &(di, dj) in &offsets {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni > u32::MAX as i64 || nj > u32::MAX as i64 {
                    continue;
                }
                if let Some(other) = grid.cells.get(&(ni as u32, nj as u32)) {
                    let d = grid.fold.difference(stats.median_phi, other.median_phi);
                    sum += d * d;
                }
            }
            ((i, j), sum.sqrt())
        })
        .collect();
    DissimilarityField {
        values: values.into_iter().collect(),
    }
}

/// Writes `i,j,cx,cy,median_phi,count,delta_phi` rows for every stored cell.
pub fn write_grid_csv<W: Write>(grid: &HeadingGrid, field: &DissimilarityField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "cx", "cy", "median_phi", "count", "delta_phi"])?;
    for (&cell, stats) in &grid.cells {
        let c = grid.cell_center(cell);
        let delta = field.get(cell).unwrap_or(0.0);
        w.write_record([
            cell.0.to_string(),
            cell.1.to_string(),
            format!("{:.3}", c.x),
            format!("{:.3}", c.y),
            format!("{:.6}", stats.median_phi),
            stats.count.to_string(),
            format!("{delta:.6}"),
        ])?;
    }
    w.flush().map_err(|e| crate::Error::io("<grid csv>", e))?;
    Ok(())
}
