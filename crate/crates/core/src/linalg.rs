//! Dense least-squares solves backed by nalgebra factorizations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal condition number below which a system is treated as singular.
pub const RCOND_TOL: f64 = 1e-13;

/// Least-squares solution and the condition number of the solved system.
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: DVector<f64>,
    pub condition: f64,
}

fn condition_from_singular_values(sv: &DVector<f64>) -> f64 {
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Minimizes `||a x - b||^2 + ridge ||x||^2` by Householder QR of the
/// (ridge-augmented) matrix. The condition number is that of `R`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64, context: &'static str) -> Result<LstsqSolution> {
    let (rows, cols) = a.shape();
    if b.len() != rows {
        return Err(Error::DimensionMismatch {
            axis: "response length vs design rows",
            expected: rows,
            found: b.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "ridge",
            reason: format!("must be nonnegative, got {ridge}"),
        });
    }
    if cols == 0 {
        return Err(Error::EmptyInput("lstsq"));
    }
    let (a, b) = if ridge > 0.0 {
        let mut aug = DMatrix::zeros(rows + cols, cols);
        aug.view_mut((0, 0), (rows, cols)).copy_from(a);
        aug.view_mut((rows, 0), (cols, cols)).fill_diagonal(ridge.sqrt());
        let mut rhs = DVector::zeros(rows + cols);
        rhs.rows_mut(0, rows).copy_from(b);
        (aug, rhs)
    } else {
        (a.clone(), b.clone())
    };
    if a.nrows() < cols {
        return Err(Error::Singular {
            context,
            condition: f64::INFINITY,
            hint: "fewer equations than unknowns; increase the rank or set a ridge",
        });
    }
    let qr = a.qr();
    let r = qr.r();
    let condition = condition_from_singular_values(&r.singular_values());
    if !(condition.is_finite() && 1.0 / condition > RCOND_TOL) {
        return Err(Error::Singular {
            context,
            condition,
            hint: "the system is rank deficient; increase the rank or set a ridge",
        });
    }
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, cols).into_owned();
    let coefficients = r.solve_upper_triangular(&rhs).ok_or(Error::Singular {
        context,
        condition,
        hint: "zero pivot in triangular solve",
    })?;
    Ok(LstsqSolution {
        coefficients,
        condition,
    })
}

/// Solves `g x = rhs` for symmetric `g` (columns of `rhs` are independent
/// right-hand sides). Returns the solution and the condition number of `g`.
/// When `allow_ill_conditioned` is false, near-singular `g` is an error.
pub fn solve_symmetric(
    g: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    allow_ill_conditioned: bool,
    context: &'static str,
    hint: &'static str,
) -> Result<(DMatrix<f64>, f64)> {
    let eig = g.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !allow_ill_conditioned && !(condition.is_finite() && 1.0 / condition > RCOND_TOL) {
        return Err(Error::Singular {
            context,
            condition,
            hint,
        });
    }
    let solution = match g.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => g.clone().lu().solve(rhs).ok_or(Error::Singular {
            context,
            condition,
            hint,
        })?,
    };
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular {
            context,
            condition,
            hint,
        });
    }
    Ok((solution, condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_system() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let sol = lstsq(&DMatrix::identity(3, 3), &b, 0.0, "test").unwrap();
        assert!((sol.coefficients - &b).amax() < 1e-15);
        assert!((sol.condition - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_system_recovered() {
        let a = random(30, 5, 1);
        let x = DVector::from_vec(vec![1.0, -1.0, 2.0, 0.5, 3.0]);
        let sol = lstsq(&a, &(&a * &x), 0.0, "test").unwrap();
        assert!((sol.coefficients - x).amax() < 1e-12);
    }

    #[test]
    fn ridge_matches_regularized_normal_equations() {
        let a = random(12, 4, 2);
        let b = DVector::from_fn(12, |i, _| i as f64);
        let ridge = 0.3;
        let sol = lstsq(&a, &b, ridge, "test").unwrap();
        let lhs = a.transpose() * &a + DMatrix::identity(4, 4) * ridge;
        let expected = lhs.lu().solve(&(a.transpose() * &b)).unwrap();
        assert!((sol.coefficients - expected).amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_rejected_unless_ridge() {
        let mut a = random(10, 3, 3);
        let c0 = a.column(0).into_owned();
        a.set_column(2, &c0);
        let b = DVector::from_element(10, 1.0);
        assert!(matches!(lstsq(&a, &b, 0.0, "test"), Err(Error::Singular { .. })));
        assert!(lstsq(&a, &b, 1e-6, "test").is_ok());
        assert!(matches!(
            lstsq(&random(2, 3, 4), &DVector::zeros(2), 0.0, "t"),
            Err(Error::Singular { .. })
        ));
        assert!(lstsq(&a, &DVector::zeros(3), 0.0, "t").is_err());
    }

    #[test]
    fn symmetric_solve_flags() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        let rhs = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(solve_symmetric(&g, &rhs, false, "t", "h").is_err());
        let reg = &g + DMatrix::identity(2, 2) * 1e-10;
        let (x, cond) = solve_symmetric(&reg, &rhs, true, "t", "h").unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(cond > 1e9);
    }
}
