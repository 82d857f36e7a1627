//! Clamped B-spline bases on `[0, 1]` and projection of sampled curves onto them.
//!
//! Basis indices are zero-based throughout. Evaluation uses the Cox–de Boor
//! recursion with half-open knot spans `[k_i, k_{i+1})`, except that the last
//! span is closed so that `t = 1` is covered.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    degree: usize,
    count: usize,
    knots: Vec<f64>,
    supports: Vec<Interval>,
}

impl SplineBasis {
    /// Clamped uniform basis with `count - degree - 1` equally spaced interior knots.
    pub fn new(count: usize, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidConfig("spline degree must be at least 1".into()));
        }
        if count < degree + 1 {
            return Err(Error::InvalidConfig(format!(
                "a degree-{degree} basis needs at least {} functions, got {count}",
                degree + 1
            )));
        }
        let interior = count - degree - 1;
        let mut knots = Vec::with_capacity(count + degree + 1);
        knots.extend(std::iter::repeat_n(0.0, degree + 1));
        knots.extend((1..=interior).map(|k| k as f64 / (interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));

        let supports = (0..count)
            .map(|j| Interval::new(knots[j], knots[j + degree + 1]))
            .collect();
        Ok(Self {
            degree,
            count,
            knots,
            supports,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn supports(&self) -> &[Interval] {
        &self.supports
    }

    pub fn support(&self, j: usize) -> Interval {
        self.supports[j]
    }

    /// Index `k` of the knot span containing `t`, with `degree <= k < count`.
    fn span(&self, t: f64) -> usize {
        let p = self.degree;
        let last = self.count - 1;
        if t >= 1.0 {
            return last;
        }
        // First knot strictly greater than t, minus one.
        let upper = self.knots[p..=self.count].partition_point(|&k| k <= t) + p;
        (upper - 1).clamp(p, last)
    }

    /// Values of the `degree + 1` functions that are nonzero on the span of `t`,
    /// along with the index of the first of them.
    fn nonzero_at(&self, t: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let k = self.span(t);
        let mut values = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        values[0] = 1.0;
        for r in 1..=p {
            left[r] = t - self.knots[k + 1 - r];
            right[r] = self.knots[k + r] - t;
            let mut saved = 0.0;
            for s in 0..r {
                let temp = values[s] / (right[s + 1] + left[r - s]);
                values[s] = saved + right[s + 1] * temp;
                saved = left[r - s] * temp;
            }
            values[r] = saved;
        }
        (k - p, values)
    }

    /// `B_j(t)`.
    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        check_unit(t)?;
        if j >= self.count {
            return Err(Error::InvalidConfig(format!(
                "basis index {j} out of range for {} functions",
                self.count
            )));
        }
        let (first, values) = self.nonzero_at(t);
        Ok(if (first..first + values.len()).contains(&j) {
            values[j - first]
        } else {
            0.0
        })
    }

    /// All basis values at `t`, length `count`.
    pub fn eval_all(&self, t: f64) -> Result<Vec<f64>> {
        check_unit(t)?;
        let mut out = vec![0.0; self.count];
        let (first, values) = self.nonzero_at(t);
        out[first..first + values.len()].copy_from_slice(&values);
        Ok(out)
    }

    /// Design matrix with rows indexed by grid point and columns by basis function.
    pub fn design(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(points.len(), self.count);
        for (row, &t) in points.iter().enumerate() {
            check_unit(t)?;
            let (first, values) = self.nonzero_at(t);
            for (offset, v) in values.into_iter().enumerate() {
                m[(row, first + offset)] = v;
            }
        }
        Ok(m)
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain { value: t })
    }
}

/// Strictly increasing observation points in `[0, 1]`, shared by every curve of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Data(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(&t) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Domain { value: t });
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!(
                "grid is not strictly increasing at position {}",
                i + 1
            )));
        }
        Ok(Self(points))
    }

    /// `len` equally spaced points from 0 to 1 inclusive.
    pub fn uniform(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Data(format!("a grid needs at least 2 points, got {len}")));
        }
        let step = 1.0 / (len - 1) as f64;
        let mut points: Vec<f64> = (0..len).map(|i| i as f64 * step).collect();
        points[len - 1] = 1.0;
        Ok(Self(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Trapezoidal-rule weights on the grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let p = &self.0;
        let n = p.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (p[i + 1] - p[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(grid: Grid) -> Self {
        grid.0
    }
}

/// Curves sampled on a common grid, one curve per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    grid: Grid,
    values: DMatrix<f64>,
}

impl CurveSet {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::Data(format!(
                "curves have {} samples but the grid has {} points",
                values.ncols(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_rows(grid: Grid, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != grid.len()) {
            return Err(Error::Data(format!(
                "curve {i} has {} samples but the grid has {} points",
                row.len(),
                grid.len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), grid.len(), |i, l| rows[i][l]);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Subset of curves by row index.
    pub fn select(&self, rows: &[usize]) -> CurveSet {
        let values = self.values.select_rows(rows.iter());
        CurveSet {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Spline features `x_ij ≈ ∫ X_i(t) B_j(t) dt`, by the trapezoidal rule on the
/// curves' grid. Output has one row per curve and one column per basis function.
pub fn project(curves: &CurveSet, basis: &SplineBasis) -> Result<DMatrix<f64>> {
    let design = basis.design(curves.grid().points())?;
    let weights = DVector::from_vec(curves.grid().trapezoid_weights());
    let mut weighted = design;
    for (mut row, w) in weighted.row_iter_mut().zip(weights.iter()) {
        row *= *w;
    }
    Ok(curves.values() * weighted)
}

/// Replace each curve by its least-squares fit in the span of `basis`,
/// evaluated back on the grid.
pub fn denoise(curves: &CurveSet, basis: &SplineBasis) -> Result<CurveSet> {
    let grid = curves.grid();
    if grid.len() < basis.count() {
        return Err(Error::Conditioning(format!(
            "{} grid points cannot determine {} spline coefficients",
            grid.len(),
            basis.count()
        )));
    }
    let design = basis.design(grid.points())?;
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::Conditioning(format!(
            "spline design is rank deficient (singular values {smin:e} .. {smax:e})"
        )));
    }
    // coefficients: J × n, one column per curve
    let rhs = curves.values().transpose();
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    let fitted = (design * coef).transpose();
    CurveSet::new(grid.clone(), fitted)
}
