//! Clamped uniform B-spline bases and the stacked least-squares design.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, LstsqSolution};
use crate::model::{SampleGrid, WeightMatrix};

/// Cubic.
pub const DEFAULT_ORDER: usize = 4;

/// Knot sequence of a clamped B-spline basis with `count` functions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    order: usize,
    count: usize,
}

impl KnotVector {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions K.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Index `s` of the knot interval `[knots[s], knots[s+1])` holding `t`;
    /// the right end maps to the last non-empty interval.
    fn span(&self, t: f64) -> usize {
        let last = self.count - 1;
        if t >= self.knots[self.count] {
            return last;
        }
        let (mut lo, mut hi) = (self.order - 1, self.count);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values of the `order` basis functions that are nonzero at `t`, which
    /// are `B_{s-order+1} .. B_s` for the returned span `s`.
    fn local_values(&self, t: f64) -> (usize, Vec<f64>) {
        let s = self.span(t);
        let degree = self.order - 1;
        let u = &self.knots;
        let mut values = vec![0.0; self.order];
        let mut left = vec![0.0; self.order];
        let mut right = vec![0.0; self.order];
        values[0] = 1.0;
        for j in 1..=degree {
            left[j] = t - u[s + 1 - j];
            right[j] = u[s + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        (s, values)
    }
}

/// `order` copies of `a`, `count - order` equally spaced interior knots,
/// `order` copies of `b`.
pub fn make_knots(a: f64, b: f64, count: usize, order: usize) -> Result<KnotVector> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::InvalidParameter {
            name: "knot span",
            reason: format!("need finite a < b, got [{a}, {b}]"),
        });
    }
    if order == 0 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "must be at least 1".into(),
        });
    }
    if count < order {
        return Err(Error::InvalidParameter {
            name: "n_functions",
            reason: format!("need at least order = {order} basis functions, got {count}"),
        });
    }
    let interior = count - order;
    let mut knots = Vec::with_capacity(count + order);
    knots.extend(std::iter::repeat_n(a, order));
    let pieces = (interior + 1) as f64;
    knots.extend((1..=interior).map(|i| a + (b - a) * i as f64 / pieces));
    knots.extend(std::iter::repeat_n(b, order));
    Ok(KnotVector { knots, order, count })
}

/// Basis values on a grid, M rows by K columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    values: DMatrix<f64>,
}

impl BasisMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn from_values(values: DMatrix<f64>) -> Self {
        Self { values }
    }
}

/// Evaluates every basis function at every grid point.
pub fn basis_matrix(grid: &SampleGrid, knots: &KnotVector) -> Result<BasisMatrix> {
    let (a, b) = (knots.start(), knots.end());
    let mut values = DMatrix::zeros(grid.len(), knots.count());
    for (m, &t) in grid.points().iter().enumerate() {
        if t < a || t > b {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("point {t} at index {m} lies outside the knot span [{a}, {b}]"),
            });
        }
        let (s, local) = knots.local_values(t);
        let first = s + 1 - knots.order();
        for (i, v) in local.into_iter().enumerate() {
            values[(m, first + i)] = v;
        }
    }
    Ok(BasisMatrix { values })
}

/// The stacked `(N*M) x (L*K)` system matrix: row `n*M + m`, column
/// `k*L + l` holds `y[l, n] * B_k(t_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    components: usize,
    functions: usize,
}

impl DesignMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn functions(&self) -> usize {
        self.functions
    }
}

pub fn build_design(basis: &BasisMatrix, weights: &WeightMatrix) -> DesignMatrix {
    let b = basis.values();
    let y = weights.values();
    let (m_len, k_len) = b.shape();
    let (l_len, n_len) = y.shape();
    let mut values = DMatrix::zeros(n_len * m_len, l_len * k_len);
    for k in 0..k_len {
        for l in 0..l_len {
            let mut col = values.column_mut(k * l_len + l);
            for n in 0..n_len {
                let w = y[(l, n)];
                for m in 0..m_len {
                    col[n * m_len + m] = w * b[(m, k)];
                }
            }
        }
    }
    DesignMatrix {
        values,
        components: l_len,
        functions: k_len,
    }
}

/// Least-squares coefficients `theta` (index `k*L + l`) for the stacked
/// response, with an optional ridge penalty `ridge * ||theta||^2`.
pub fn solve_least_squares(design: &DesignMatrix, response: &DVector<f64>, ridge: f64) -> Result<LstsqSolution> {
    lstsq(design.values(), response, ridge, "spline design")
}
