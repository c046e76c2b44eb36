use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use super::csr::{norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Block system `[A B^T; B 0] [u; p] = [f; g]` with prescribed values on a
/// subset of the `u` unknowns.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// Velocity block, symmetric.
    pub a: CsrMatrix,
    /// Constraint block, one row per multiplier unknown.
    pub b: CsrMatrix,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    /// `(dof, value)` pairs eliminated symmetrically.
    pub dirichlet: Vec<(usize, f64)>,
    /// Multiplier unknown fixed to zero, for systems whose `p` is only
    /// determined up to a constant.
    pub pressure_pin: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Joint relative residual of both block rows over the free unknowns.
    pub residual: f64,
    /// `||B u - g||` relative to `|| |B| |u| ||`.
    pub divergence_residual: f64,
    pub refinement_steps: usize,
}

const MAX_REFINEMENT: usize = 3;

/// Solves a [`SaddleSystem`] by sparse LU of the reduced indefinite matrix,
/// followed by iterative refinement until the joint residual is below `tol`.
pub fn saddle_solve(sys: &SaddleSystem, tol: f64) -> Result<SaddleSolution> {
    let nu = sys.a.nrows();
    let np = sys.b.nrows();
    if sys.a.ncols() != nu || sys.b.ncols() != nu || sys.rhs_u.len() != nu || sys.rhs_p.len() != np
    {
        return Err(Error::DimensionMismatch(format!(
            "saddle system: A {}x{}, B {}x{}, rhs {} / {}",
            nu,
            sys.a.ncols(),
            np,
            sys.b.ncols(),
            sys.rhs_u.len(),
            sys.rhs_p.len()
        )));
    }

    let mut u_fixed = vec![None; nu];
    for &(d, v) in &sys.dirichlet {
        if d >= nu {
            return Err(Error::DimensionMismatch(format!(
                "dirichlet dof {d} >= {nu}"
            )));
        }
        u_fixed[d] = Some(v);
    }

    // Unknown numbering of the reduced system: free velocities, then
    // multipliers without the pinned one.
    let mut u_map = vec![usize::MAX; nu];
    let mut n = 0;
    for (i, fixed) in u_fixed.iter().enumerate() {
        if fixed.is_none() {
            u_map[i] = n;
            n += 1;
        }
    }
    let mut p_map = vec![usize::MAX; np];
    for (i, slot) in p_map.iter_mut().enumerate() {
        if sys.pressure_pin != Some(i) {
            *slot = n;
            n += 1;
        }
    }

    let mut u = vec![0.0; nu];
    for (i, fixed) in u_fixed.iter().enumerate() {
        if let Some(v) = fixed {
            u[i] = *v;
        }
    }
    let mut p = vec![0.0; np];

    let mut trip = Vec::with_capacity(sys.a.nnz() + 2 * sys.b.nnz());
    for (i, j, v) in sys.a.triplets() {
        if u_map[i] != usize::MAX && u_map[j] != usize::MAX {
            trip.push(Triplet::new(u_map[i], u_map[j], v));
        }
    }
    for (i, j, v) in sys.b.triplets() {
        if p_map[i] != usize::MAX && u_map[j] != usize::MAX {
            trip.push(Triplet::new(p_map[i], u_map[j], v));
            trip.push(Triplet::new(u_map[j], p_map[i], v));
        }
    }

    let residual_of = |u: &[f64], p: &[f64]| -> (Vec<f64>, f64) {
        let au = sys.a.matvec(u);
        let btp = sys.b.transpose_matvec(p);
        let bu = sys.b.matvec(u);
        let mut r = vec![0.0; n];
        for i in 0..nu {
            if u_map[i] != usize::MAX {
                r[u_map[i]] = sys.rhs_u[i] - au[i] - btp[i];
            }
        }
        for i in 0..np {
            if p_map[i] != usize::MAX {
                r[p_map[i]] = sys.rhs_p[i] - bu[i];
            }
        }
        let norm = norm2(&r);
        (r, norm)
    };

    // Reference scale: the lifted right-hand side at u = u_D, p = 0.
    let (_, rhs_norm) = residual_of(&u, &p);
    if rhs_norm == 0.0 {
        let divergence_residual = divergence_residual(sys, &u);
        return Ok(SaddleSolution {
            u,
            p,
            residual: 0.0,
            divergence_residual,
            refinement_steps: 0,
        });
    }

    if n == 0 {
        return Err(Error::InvalidArgument(
            "saddle system has no free unknowns".into(),
        ));
    }
    let kkt = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    // Sequential factorization keeps results bit-reproducible.
    faer::set_global_parallelism(faer::Par::Seq);
    let lu = kkt
        .sp_lu()
        .map_err(|e| Error::Factorization(e.to_string()))?;

    let mut history = Vec::new();
    let mut steps = 0;
    let mut rel = 1.0;
    let (mut r, _) = residual_of(&u, &p);
    loop {
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(rhs.as_mut());
        for i in 0..nu {
            if u_map[i] != usize::MAX {
                u[i] += rhs[(u_map[i], 0)];
            }
        }
        for i in 0..np {
            if p_map[i] != usize::MAX {
                p[i] += rhs[(p_map[i], 0)];
            }
        }
        let (r_new, r_norm) = residual_of(&u, &p);
        let prev = rel;
        rel = r_norm / rhs_norm;
        history.push(rel);
        r = r_new;
        if !rel.is_finite() {
            return Err(Error::NoConvergence {
                solver: "saddle-point LU",
                iterations: steps + 1,
                residual: rel,
                history,
            });
        }
        // Refinement only helps while it still reduces the residual.
        if rel <= tol * 1e-3 || steps == MAX_REFINEMENT || (steps > 0 && rel > 0.5 * prev) {
            break;
        }
        steps += 1;
    }
    if rel > tol {
        return Err(Error::NoConvergence {
            solver: "saddle-point LU",
            iterations: steps + 1,
            residual: rel,
            history,
        });
    }

    let divergence_residual = divergence_residual(sys, &u);
    Ok(SaddleSolution {
        u,
        p,
        residual: rel,
        divergence_residual,
        refinement_steps: steps,
    })
}

fn divergence_residual(sys: &SaddleSystem, u: &[f64]) -> f64 {
    let bu = sys.b.matvec(u);
    let r: Vec<f64> = bu.iter().zip(&sys.rhs_p).map(|(a, b)| a - b).collect();
    let abs_u: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    let scale: Vec<f64> = (0..sys.b.nrows())
        .map(|i| {
            let (cols, vals) = sys.b.row(i);
            cols.iter()
                .zip(vals)
                .map(|(&j, v)| v.abs() * abs_u[j])
                .sum::<f64>()
                + sys.rhs_p[i].abs()
        })
        .collect();
    let s = norm2(&scale);
    if s == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / s
    }
}
