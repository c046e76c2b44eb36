use super::csr::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned iterate.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive-definite `a`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution> {
    cg_solve_from(a, b, None, tol, max_iter)
}

/// As [`cg_solve`], starting from `guess` when given.
pub fn cg_solve_from(
    a: &CsrMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cg: matrix {}x{}, rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let b_max = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !b_max.is_finite() || b.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(
            "cg: non-finite right-hand side".into(),
        ));
    }
    if b_max == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    // Power-of-two rescaling keeps squared norms finite and is exact.
    let scale = power_of_two_scale(b_max);
    if scale != 1.0 {
        let b: Vec<f64> = b.iter().map(|v| v / scale).collect();
        let guess = guess.map(|g| g.iter().map(|v| v / scale).collect::<Vec<_>>());
        let mut sol = cg_solve_from(a, &b, guess.as_deref(), tol, max_iter)?;
        sol.x.iter_mut().for_each(|v| *v *= scale);
        return Ok(sol);
    }
    let b_norm = norm2(b);

    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = guess.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut r: Vec<f64> = b.iter().zip(a.matvec(&x)).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();

    let mut iterations = 0;
    let mut rel = norm2(&r) / b_norm;
    while rel > tol || rel.is_nan() {
        if iterations == max_iter {
            return Err(Error::NoConvergence {
                solver: "conjugate gradients",
                iterations,
                residual: rel,
                history,
            });
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0 && pap.is_finite()) {
            return Err(Error::NoConvergence {
                solver: "conjugate gradients (matrix not positive definite)",
                iterations,
                residual: rel,
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm2(&r) / b_norm;
        history.push(rel);
        if rel <= tol {
            // Guard against drift of the recursive residual.
            let true_r: Vec<f64> = b.iter().zip(a.matvec(&x)).map(|(bi, ai)| bi - ai).collect();
            rel = norm2(&true_r) / b_norm;
            if rel <= tol {
                break;
            }
            r = true_r;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Ok(CgSolution {
        x,
        iterations,
        residual: rel,
    })
}

/// `1` for moderate magnitudes, otherwise a power of two near `max_abs`.
fn power_of_two_scale(max_abs: f64) -> f64 {
    if (1e-100..=1e100).contains(&max_abs) {
        1.0
    } else {
        2f64.powi(max_abs.log2().round() as i32)
    }
}
