//! Shared data model: the sampling grid, the observed aggregates, the known
//! weights and the component curves, plus the forward aggregation operator.
//!
//! All matrices are `nalgebra::DMatrix<f64>`, which stores column-major, so
//! each sample (a column) is contiguous in memory.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::shrinkage::NoiseScale;

/// Relative tolerance on the grid spacing.
pub const GRID_SPACING_RTOL: f64 = 1e-9;

/// The M equally spaced domain points at which every curve is observed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    points: Vec<f64>,
}

impl SampleGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {m}")));
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                what: "grid",
                row: i,
                col: 0,
                value: points[i],
            });
        }
        let step = (points[m - 1] - points[0]) / (m - 1) as f64;
        if step <= 0.0 {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            let d = w[1] - w[0];
            if d <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "points must be strictly increasing (index {})",
                    i + 1
                )));
            }
            if (d - step).abs() > GRID_SPACING_RTOL * step {
                return Err(Error::InvalidGrid(format!(
                    "points are not equally spaced: gap {d} at index {} vs mean spacing {step}",
                    i + 1
                )));
            }
        }
        Ok(Self { points })
    }

    /// `m` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self> {
        if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidGrid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {m}")));
        }
        let span = b - a;
        let denom = (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + span * i as f64 / denom).collect();
        points[m - 1] = b;
        Self::new(points)
    }

    /// The default grid `1, 2, ..., m` used when no domain values are given.
    pub fn index(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

fn check_finite(what: &'static str, m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what,
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

macro_rules! matrix_newtype {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            values: DMatrix<f64>,
        }

        impl $name {
            /// Wraps `values`, rejecting non-finite entries.
            pub fn new(values: DMatrix<f64>) -> Result<Self> {
                check_finite($what, &values)?;
                Ok(Self { values })
            }

            pub fn values(&self) -> &DMatrix<f64> {
                &self.values
            }

            pub fn into_inner(self) -> DMatrix<f64> {
                self.values
            }

            pub fn nrows(&self) -> usize {
                self.values.nrows()
            }

            pub fn ncols(&self) -> usize {
                self.values.ncols()
            }
        }
    };
}

matrix_newtype!(
    /// Observed aggregated curves, M rows by N samples.
    AggregatedSamples,
    "data"
);
matrix_newtype!(
    /// Known aggregation weights, L components by N samples.
    WeightMatrix,
    "weights"
);
matrix_newtype!(
    /// Component curves on the grid, M rows by L components.
    ComponentCurves,
    "curves"
);

impl WeightMatrix {
    /// Positions of non-positive weights. These are legal but unusual.
    pub fn non_positive_entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for c in 0..self.values.ncols() {
            for r in 0..self.values.nrows() {
                if self.values[(r, c)] <= 0.0 {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// What a calibration run used and observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Human-readable basis description, e.g. `wavelets(daub10, J0=0)`.
    pub basis: String,
    /// Noise scale used by the wavelet path.
    pub noise: Option<NoiseScale>,
    /// Named shrinkage hyperparameters and thresholds, in a stable order.
    pub parameters: Vec<(String, f64)>,
    /// Condition number of the linear system that was solved.
    pub condition_number: f64,
}

impl Diagnostics {
    /// Flattens to `key=value` pairs in a stable order.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![("basis".to_string(), self.basis.clone())];
        if let Some(noise) = &self.noise {
            kv.push(("sigma_hat".into(), format!("{:.17e}", noise.sigma_hat)));
            kv.push(("sigma_provenance".into(), noise.provenance.as_str().into()));
        }
        for (k, v) in &self.parameters {
            kv.push((k.clone(), format!("{v:.17e}")));
        }
        kv.push(("condition_number".into(), format!("{:.17e}", self.condition_number)));
        kv
    }
}

/// Estimated component curves plus run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub curves: ComponentCurves,
    pub diagnostics: Diagnostics,
}

/// A problem whose pieces have been checked against each other.
#[derive(Debug, Clone, Copy)]
pub struct CheckedProblem<'a> {
    pub data: &'a AggregatedSamples,
    pub weights: &'a WeightMatrix,
    pub grid: &'a SampleGrid,
}

/// Checks that data rows match the grid and data columns match the weight
/// columns. Finiteness is already guaranteed by the constructors.
pub fn validate_problem<'a>(
    data: &'a AggregatedSamples,
    weights: &'a WeightMatrix,
    grid: &'a SampleGrid,
) -> Result<CheckedProblem<'a>> {
    if data.nrows() != grid.len() {
        return Err(Error::DimensionMismatch {
            axis: "data rows vs grid length",
            expected: grid.len(),
            found: data.nrows(),
        });
    }
    if data.ncols() != weights.ncols() {
        return Err(Error::DimensionMismatch {
            axis: "data columns vs weight columns",
            expected: data.ncols(),
            found: weights.ncols(),
        });
    }
    if weights.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            axis: "weight rows (components)",
            expected: 1,
            found: 0,
        });
    }
    let negative = weights.non_positive_entries();
    if !negative.is_empty() {
        log::warn!(
            "{} non-positive weight entries (first at {:?}); proceeding",
            negative.len(),
            negative[0]
        );
    }
    Ok(CheckedProblem { data, weights, grid })
}

/// The noiseless aggregate `sum_l weights[l] * curves[.., l]`.
pub fn aggregate_curve(curves: &ComponentCurves, weights: &[f64]) -> Result<DVector<f64>> {
    if weights.len() != curves.ncols() {
        return Err(Error::DimensionMismatch {
            axis: "weight count vs component count",
            expected: curves.ncols(),
            found: weights.len(),
        });
    }
    let w = DVector::from_column_slice(weights);
    Ok(curves.values() * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(m: usize, n: usize, l: usize, nw: usize) -> (AggregatedSamples, WeightMatrix, SampleGrid) {
        (
            AggregatedSamples::new(DMatrix::from_fn(m, n, |r, c| (r + c) as f64)).unwrap(),
            WeightMatrix::new(DMatrix::from_element(l, nw, 0.5)).unwrap(),
            SampleGrid::uniform(0.0, 1.0, m).unwrap(),
        )
    }

    #[test]
    fn consistent_shapes_accepted() {
        let (d, w, g) = problem(4, 3, 2, 3);
        let checked = validate_problem(&d, &w, &g).unwrap();
        assert_eq!(checked.data, &d);
        assert_eq!(checked.weights, &w);
    }

    #[test]
    fn column_mismatch_rejected() {
        let (d, w, g) = problem(4, 3, 2, 2);
        match validate_problem(&d, &w, &g) {
            Err(Error::DimensionMismatch {
                axis,
                expected: 3,
                found: 2,
            }) => assert!(axis.contains("columns")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn row_mismatch_rejected() {
        let (d, w, _) = problem(4, 3, 2, 3);
        let g = SampleGrid::uniform(0.0, 1.0, 5).unwrap();
        assert!(matches!(
            validate_problem(&d, &w, &g),
            Err(Error::DimensionMismatch {
                expected: 5,
                found: 4,
                ..
            })
        ));
    }

    #[test]
    fn non_finite_reported_with_coordinates() {
        let mut m = DMatrix::from_element(4, 3, 1.0);
        m[(2, 1)] = f64::NAN;
        match AggregatedSamples::new(m) {
            Err(Error::NonFinite { row: 2, col: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_rejects_uneven_and_decreasing() {
        assert!(SampleGrid::new(vec![0.0, 1.0, 3.0]).is_err());
        assert!(SampleGrid::new(vec![1.0, 0.0]).is_err());
        assert!(SampleGrid::new(vec![1.0]).is_err());
        assert!(SampleGrid::new(vec![0.0, 0.1, 0.2, 0.30000000000000004]).is_ok());
    }

    #[test]
    fn uniform_grid_hits_zero_on_simulation_defaults() {
        let g = SampleGrid::uniform(-1.0, 2.0, 1024).unwrap();
        assert_eq!(g.start(), -1.0);
        assert_eq!(g.end(), 2.0);
        assert_eq!(g.points()[341], 0.0);
    }

    #[test]
    fn aggregate_selects_and_nulls() {
        let c = ComponentCurves::new(DMatrix::from_row_slice(3, 2, &[1., 4., 2., 5., 3., 6.])).unwrap();
        assert_eq!(aggregate_curve(&c, &[1.0, 0.0]).unwrap().as_slice(), &[1., 2., 3.]);
        assert_eq!(aggregate_curve(&c, &[0.0, 0.0]).unwrap().as_slice(), &[0., 0., 0.]);
        assert!(aggregate_curve(&c, &[0.7]).is_err());
    }

    #[test]
    fn aggregate_point_value() {
        let c = ComponentCurves::new(DMatrix::from_row_slice(1, 2, &[0.0, -2.0])).unwrap();
        let v = aggregate_curve(&c, &[0.7, 0.3]).unwrap();
        assert!((v[0] + 0.6).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn aggregate_is_linear_in_weights(
                vals in proptest::collection::vec(-10.0f64..10.0, 15),
                w1 in proptest::collection::vec(-5.0f64..5.0, 3),
                w2 in proptest::collection::vec(-5.0f64..5.0, 3),
                a in -3.0f64..3.0,
                b in -3.0f64..3.0,
            ) {
                let c = ComponentCurves::new(DMatrix::from_column_slice(5, 3, &vals)).unwrap();
                let combo: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
                let lhs = aggregate_curve(&c, &combo).unwrap();
                let rhs = aggregate_curve(&c, &w1).unwrap() * a + aggregate_curve(&c, &w2).unwrap() * b;
                let scale = 1.0 + rhs.amax();
                prop_assert!((lhs - rhs).amax() <= 1e-12 * scale);
            }

            #[test]
            fn validate_is_idempotent(m in 2usize..6, n in 1usize..5, l in 1usize..3) {
                let (d, w, g) = problem(m, n, l, n);
                let first = validate_problem(&d, &w, &g).unwrap();
                let second = validate_problem(first.data, first.weights, first.grid).unwrap();
                prop_assert_eq!(second.data, &d);
                prop_assert_eq!(second.grid, &g);
            }
        }
    }
}
