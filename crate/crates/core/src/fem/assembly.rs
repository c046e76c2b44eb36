//! Global operators for the Stokes and phase-field weak forms.
//!
//! Assembly loops over elements in index order and sums duplicates in that
//! order, so every matrix is reproducible bit for bit.

use super::space::{p2_values, FeSpace};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Consistent P1 mass matrix, exact element formula `|T|/12 (1 + delta_ij)`.
pub fn assemble_p1_mass(space: &FeSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.element_areas()[t];
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { a / 6.0 } else { a / 12.0 };
                trip.push((tri[i], tri[j], m));
            }
        }
    }
    CsrMatrix::from_triplets(space.n_p1(), space.n_p1(), &trip)
}

/// P1 stiffness `(grad phi_i, grad phi_j)`, without physical scaling.
pub fn assemble_p1_stiffness(space: &FeSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.element_areas()[t];
        let g = space.bary_grads(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], a * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
    }
    CsrMatrix::from_triplets(space.n_p1(), space.n_p1(), &trip)
}

/// P1 mass weighted by `weight(element, quadrature_point)`, integrated with
/// the space's rule. Negative weights are rejected.
pub fn assemble_weighted_p1_mass(
    space: &FeSpace,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<CsrMatrix> {
    let mesh = space.mesh();
    let rule = space.rule();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut local = [[0.0; 3]; 3];
        for (q, bary) in rule.points().iter().enumerate() {
            let w = checked_weight(weight(t, q), t, q)? * space.quad_weight(t, q);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * (bary[i] * bary[j]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_p1(), space.n_p1(), &trip))
}

/// Load vector `(g, phi_i)` for a function given at quadrature points.
pub fn assemble_p1_load(space: &FeSpace, g: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let mut out = vec![0.0; space.n_p1()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (q, bary) in space.rule().points().iter().enumerate() {
            let w = g(t, q) * space.quad_weight(t, q);
            for i in 0..3 {
                out[tri[i]] += w * bary[i];
            }
        }
    }
    out
}

/// Vector Laplacian `(grad u, grad w)` on P2, block-diagonal over the two
/// components.
pub fn assemble_p2_vector_stiffness(space: &FeSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let rule = space.rule();
    let n2 = space.n_p2();
    let mut trip = Vec::with_capacity(72 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let dofs = space.p2_element_dofs(t);
        let mut local = [[0.0; 6]; 6];
        for (q, bary) in rule.points().iter().enumerate() {
            let w = space.quad_weight(t, q);
            let g = space.p2_grads(t, bary);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        push_vector_block(&mut trip, &dofs, &local, n2);
    }
    CsrMatrix::from_triplets(2 * n2, 2 * n2, &trip)
}

/// Vector P2 mass weighted by `weight(element, quadrature_point)`.
pub fn assemble_weighted_p2_vector_mass(
    space: &FeSpace,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<CsrMatrix> {
    let mesh = space.mesh();
    let rule = space.rule();
    let n2 = space.n_p2();
    let basis: Vec<[f64; 6]> = rule.points().iter().map(p2_values).collect();
    let mut trip = Vec::with_capacity(72 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let dofs = space.p2_element_dofs(t);
        let mut local = [[0.0; 6]; 6];
        for (q, n) in basis.iter().enumerate() {
            let w = checked_weight(weight(t, q), t, q)? * space.quad_weight(t, q);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * (n[i] * n[j]);
                }
            }
        }
        push_vector_block(&mut trip, &dofs, &local, n2);
    }
    Ok(CsrMatrix::from_triplets(2 * n2, 2 * n2, &trip))
}

/// Unweighted vector P2 mass.
pub fn assemble_p2_vector_mass(space: &FeSpace) -> CsrMatrix {
    assemble_weighted_p2_vector_mass(space, |_, _| 1.0).expect("unit weight is nonnegative")
}

/// Divergence `(div u, q)`: rows are P1 pressure dofs, columns the two-component P2 velocity.
pub fn assemble_divergence(space: &FeSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let rule = space.rule();
    let n2 = space.n_p2();
    let mut trip = Vec::with_capacity(36 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let dofs = space.p2_element_dofs(t);
        let mut local = [[[0.0; 6]; 3]; 2];
        for (q, bary) in rule.points().iter().enumerate() {
            let w = space.quad_weight(t, q);
            let g = space.p2_grads(t, bary);
            for i in 0..3 {
                for j in 0..6 {
                    local[0][i][j] += w * bary[i] * g[j][0];
                    local[1][i][j] += w * bary[i] * g[j][1];
                }
            }
        }
        for (c, block) in local.iter().enumerate() {
            for i in 0..3 {
                for j in 0..6 {
                    trip.push((tri[i], c * n2 + dofs[j], block[i][j]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.n_p1(), 2 * n2, &trip)
}

fn push_vector_block(
    trip: &mut Vec<(usize, usize, f64)>,
    dofs: &[usize; 6],
    local: &[[f64; 6]; 6],
    n2: usize,
) {
    for c in 0..2 {
        let off = c * n2;
        for i in 0..6 {
            for j in 0..6 {
                trip.push((off + dofs[i], off + dofs[j], local[i][j]));
            }
        }
    }
}

fn checked_weight(w: f64, element: usize, point: usize) -> Result<f64> {
    if w >= 0.0 {
        Ok(w)
    } else {
        Err(Error::NegativeWeight {
            element,
            point,
            value: w,
        })
    }
}
