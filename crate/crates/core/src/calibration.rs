//! End-to-end estimators: wavelet shrinkage plus least squares, B-spline
//! least squares, and the inverse problem of recovering weights.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{lstsq, solve_symmetric};
use crate::model::{
    validate_problem, AggregatedSamples, CalibrationResult, ComponentCurves, Diagnostics, SampleGrid, WeightMatrix,
};
use crate::shrinkage::{estimate_sigma, Method, NoiseScale, ShrinkageSpec, Shrinker};
use crate::splines::{basis_matrix, build_design, make_knots, solve_least_squares, DEFAULT_ORDER};
use crate::wavelet::{dwt, dyadic_depth, idwt, make_filter, WaveletDecomposition};

/// Diagonal loading of `y y^T` when the singular flag is set.
pub const SINGULAR_RIDGE: f64 = 1e-10;

/// Wavelet family used when none is requested.
pub const DEFAULT_WAVELET: &str = "daub10";

/// Wavelet calibration with a full pyramid (J0 = 0).
pub fn calibrate_wavelets(
    data: &AggregatedSamples,
    weights: &WeightMatrix,
    grid: &SampleGrid,
    filter_name: &str,
    spec: &ShrinkageSpec,
    singular: bool,
) -> Result<CalibrationResult> {
    calibrate_wavelets_at_level(data, weights, grid, filter_name, spec, singular, 0)
}

/// Wavelet calibration stopping the pyramid at level `coarsest`.
///
/// Each sample is transformed, its detail coefficients shrunk, and the
/// coefficient matrix regressed on the weights:
/// `Gamma = delta(D) y^T (y y^T + s I)^{-1}`, with `s` = [`SINGULAR_RIDGE`]
/// when `singular` is set and 0 otherwise. Curves are the inverse
/// transforms of the columns of `Gamma`.
pub fn calibrate_wavelets_at_level(
    data: &AggregatedSamples,
    weights: &WeightMatrix,
    grid: &SampleGrid,
    filter_name: &str,
    spec: &ShrinkageSpec,
    singular: bool,
    coarsest: usize,
) -> Result<CalibrationResult> {
    validate_problem(data, weights, grid)?;
    spec.validate()?;
    let filter = make_filter(filter_name)?;
    let m = data.nrows();
    let depth = dyadic_depth(m)?;
    if coarsest >= depth {
        return Err(Error::LevelOutOfRange { j0: coarsest, depth });
    }
    let values = data.values();
    let n = values.ncols();

    let decomps: Vec<WaveletDecomposition> = (0..n)
        .into_par_iter()
        .map(|c| dwt(values.column(c).as_slice(), &filter, coarsest))
        .collect::<Result<_>>()?;

    let noise = match spec.sigma {
        Some(s) => NoiseScale::user_supplied(s),
        None if spec.pooled_sigma => {
            let pooled: Vec<f64> = decomps.iter().flat_map(|d| d.finest().iter().copied()).collect();
            estimate_sigma(&pooled)?
        }
        None => estimate_sigma(decomps[0].finest())?,
    };

    let shrinker = Shrinker::new(spec, noise, &filter)?;
    let outcomes = decomps
        .par_iter()
        .enumerate()
        .map(|(c, d)| shrinker.apply(d, c as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut shrunk = DMatrix::zeros(m, n);
    for (c, o) in outcomes.iter().enumerate() {
        shrunk.set_column(c, &DVector::from_vec(o.decomposition.to_flat()));
    }

    let y = weights.values();
    let l = y.nrows();
    let ridge = if singular { SINGULAR_RIDGE } else { 0.0 };
    let gram = y * y.transpose() + DMatrix::identity(l, l) * ridge;
    let rhs = y * shrunk.transpose();
    let (gamma_t, condition) = solve_symmetric(
        &gram,
        &rhs,
        singular,
        "y y^T",
        "weights are rank deficient; pass the singular flag to add 1e-10 to the diagonal",
    )?;

    let curves: Vec<Vec<f64>> = (0..l)
        .into_par_iter()
        .map(|c| {
            let flat: Vec<f64> = gamma_t.row(c).iter().copied().collect();
            idwt(&WaveletDecomposition::from_flat(&flat, coarsest)?, &filter)
        })
        .collect::<Result<_>>()?;
    let alpha = DMatrix::from_fn(m, l, |r, c| curves[c][r]);

    let mut parameters = Vec::new();
    if spec.method == Method::Bayesian {
        parameters.push(("tau".to_string(), spec.tau));
    }
    if spec.method == Method::Probability {
        parameters.push(("alpha_prob".to_string(), spec.alpha_prob));
    }
    for (i, j) in (coarsest..depth).enumerate() {
        let settings = outcomes.iter().map(|o| o.levels[i]);
        let masses: Vec<f64> = settings.clone().filter_map(|s| s.mass).collect();
        let thresholds: Vec<f64> = settings.filter_map(|s| s.threshold).collect();
        for (name, vals) in [("p", masses), ("threshold", thresholds)] {
            if vals.is_empty() {
                continue;
            }
            if vals.iter().all(|&v| v == vals[0]) {
                parameters.push((format!("{name}_level_{j}"), vals[0]));
            } else {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                parameters.push((format!("mean_{name}_level_{j}"), mean));
            }
        }
    }
    parameters.push(("ridge".to_string(), ridge));

    let mut basis = format!(
        "wavelets(filter={}, J0={coarsest}, method={}",
        filter.family(),
        spec.method.as_str()
    );
    if spec.method == Method::Bayesian {
        basis.push_str(if spec.mc {
            ", integrator=monte_carlo"
        } else {
            ", integrator=gauss_hermite"
        });
    } else {
        basis.push_str(&format!(", type={}", spec.rule_type.as_str()));
    }
    basis.push(')');

    Ok(CalibrationResult {
        curves: ComponentCurves::new(alpha)?,
        diagnostics: Diagnostics {
            basis,
            noise: Some(noise),
            parameters,
            condition_number: condition,
        },
    })
}

/// Cubic B-spline calibration with `n_functions` basis functions over the
/// grid span.
pub fn calibrate_splines(
    data: &AggregatedSamples,
    weights: &WeightMatrix,
    grid: &SampleGrid,
    n_functions: usize,
) -> Result<CalibrationResult> {
    validate_problem(data, weights, grid)?;
    let knots = make_knots(grid.start(), grid.end(), n_functions, DEFAULT_ORDER)?;
    let basis = basis_matrix(grid, &knots)?;
    let design = build_design(&basis, weights);
    let response = DVector::from_column_slice(data.values().as_slice());
    let solution = solve_least_squares(&design, &response, 0.0)?;

    let l = weights.nrows();
    // theta index k*L + l, so the flat vector is a column-major L x K matrix
    let theta = DMatrix::from_column_slice(l, n_functions, solution.coefficients.as_slice());
    let alpha = basis.values() * theta.transpose();

    Ok(CalibrationResult {
        curves: ComponentCurves::new(alpha)?,
        diagnostics: Diagnostics {
            basis: format!("bspline(order={DEFAULT_ORDER}, n_functions={n_functions})"),
            noise: None,
            parameters: vec![("n_functions".to_string(), n_functions as f64)],
            condition_number: solution.condition,
        },
    })
}

/// Least-squares weights `w` minimizing `||curves w - sample||`.
pub fn estimate_weights(sample: &[f64], curves: &ComponentCurves) -> Result<Vec<f64>> {
    if sample.len() != curves.nrows() {
        return Err(Error::DimensionMismatch {
            axis: "sample length vs curve rows",
            expected: curves.nrows(),
            found: sample.len(),
        });
    }
    if let Some(i) = sample.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "sample",
            row: i,
            col: 0,
            value: sample[i],
        });
    }
    let b = DVector::from_column_slice(sample);
    match lstsq(curves.values(), &b, 0.0, "component curves") {
        Ok(sol) => Ok(sol.coefficients.iter().copied().collect()),
        Err(Error::Singular { condition, .. }) => Err(Error::RankDeficient { condition }),
        Err(e) => Err(e),
    }
}
