//! Interpolating B-splines with chord-length parameters and averaged knots.

use crate::geo::LocalCoord;

#[derive(Debug, Clone)]
pub struct BSpline {
    degree: usize,
    knots: Vec<f64>,
    control: Vec<LocalCoord>,
    params: Vec<f64>,
}

impl BSpline {
    /// Fits a curve of the given degree passing through every point.
    ///
    /// Returns `None` when there are too few distinct points for the degree.
    pub fn interpolate(points: &[LocalCoord], degree: usize) -> Option<BSpline> {
        let n = points.len();
        if degree == 0 || n < degree + 1 {
            return None;
        }
        let mut params = Vec::with_capacity(n);
        params.push(0.0);
        for w in points.windows(2) {
            let d = w[0].distance(&w[1]);
            if d == 0.0 {
                return None;
            }
            params.push(params[params.len() - 1] + d);
        }
        let total = params[n - 1];
        for u in params.iter_mut() {
            *u /= total;
        }
        params[n - 1] = 1.0;

        let p = degree;
        let mut knots = vec![0.0; p + 1];
        for j in 1..n - p {
            knots.push(params[j..j + p].iter().sum::<f64>() / p as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, p + 1));

        // Collocation matrix is banded with half-width p; Gaussian elimination
        // without pivoting is stable for it.
        let width = 2 * p + 1;
        let mut band = vec![0.0; n * width];
        let idx = |row: usize, col: usize| row * width + (col + p - row);
        for (row, &u) in params.iter().enumerate() {
            let span = find_span(&knots, n, p, u);
            let basis = basis_functions(&knots, span, p, u);
            for (k, b) in basis.iter().enumerate() {
                let col = span - p + k;
                if col + p >= row && col <= row + p {
                    band[idx(row, col)] = *b;
                }
            }
        }
        let mut rhs: Vec<LocalCoord> = points.to_vec();
        for j in 0..n {
            let pivot = band[idx(j, j)];
            if pivot.abs() < 1e-14 {
                return None;
            }
            for r in j + 1..(j + p + 1).min(n) {
                let factor = band[idx(r, j)] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for c in j..(j + p + 1).min(n) {
                    band[idx(r, c)] -= factor * band[idx(j, c)];
                }
                let pj = rhs[j];
                rhs[r].x -= factor * pj.x;
                rhs[r].y -= factor * pj.y;
            }
        }
        let mut control = vec![LocalCoord::default(); n];
        for j in (0..n).rev() {
            let mut acc = rhs[j];
            for c in j + 1..(j + p + 1).min(n) {
                acc.x -= band[idx(j, c)] * control[c].x;
                acc.y -= band[idx(j, c)] * control[c].y;
            }
            let pivot = band[idx(j, j)];
            control[j] = LocalCoord::new(acc.x / pivot, acc.y / pivot);
        }
        Some(BSpline {
            degree,
            knots,
            control,
            params,
        })
    }

    /// Parameter value at which the curve passes through input point `k`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn evaluate(&self, u: f64) -> LocalCoord {
        let n = self.control.len();
        let p = self.degree;
        let u = u.clamp(0.0, 1.0);
        let span = find_span(&self.knots, n, p, u);
        let basis = basis_functions(&self.knots, span, p, u);
        let mut out = LocalCoord::default();
        for (k, b) in basis.iter().enumerate() {
            let c = self.control[span - p + k];
            out.x += b * c.x;
            out.y += b * c.y;
        }
        out
    }
}

fn find_span(knots: &[f64], n: usize, p: usize, u: f64) -> usize {
    if u >= knots[n] {
        return n - 1;
    }
    // knots[span] <= u < knots[span + 1]
    let mut lo = p;
    let mut hi = n;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn basis_functions(knots: &[f64], span: usize, p: usize, u: f64) -> Vec<f64> {
    let mut basis = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    basis[0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { basis[r] / denom };
            basis[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        basis[j] = saved;
    }
    basis
}
