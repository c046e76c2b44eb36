//! Moving nodal data between the linear (phase, pressure) and quadratic
//! (velocity) spaces on the same mesh.

use super::space::FeSpace;
use crate::error::{Error, Result};

/// Interpolates a P1 field onto the scalar P2 dofs. Vertex values are
/// copied and each edge midpoint takes the mean of its endpoints, which is
/// exact for P1 functions.
pub fn p1_to_p2_interpolate(space: &FeSpace, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != space.n_p1() {
        return Err(Error::DimensionMismatch(format!(
            "P1 field has {} values, mesh has {} vertices",
            phi.len(),
            space.n_p1()
        )));
    }
    let mut out = phi.to_vec();
    out.extend(
        space
            .mesh()
            .edges()
            .iter()
            .map(|&[a, b]| 0.5 * (phi[a] + phi[b])),
    );
    Ok(out)
}

/// Restricts a scalar P2 field to its vertex values.
pub fn p2_to_p1_project(space: &FeSpace, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != space.n_p2() {
        return Err(Error::DimensionMismatch(format!(
            "P2 field has {} values, space has {}",
            field.len(),
            space.n_p2()
        )));
    }
    Ok(field[..space.n_p1()].to_vec())
}

/// Velocity vectors at mesh vertices.
pub fn velocity_at_vertices(space: &FeSpace, u: &[f64]) -> Result<Vec<[f64; 2]>> {
    let n2 = space.n_p2();
    if u.len() != 2 * n2 {
        return Err(Error::DimensionMismatch(format!(
            "velocity has {} values, expected {}",
            u.len(),
            2 * n2
        )));
    }
    Ok((0..space.n_p1()).map(|v| [u[v], u[n2 + v]]).collect())
}
