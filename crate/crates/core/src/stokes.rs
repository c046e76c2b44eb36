//! Brinkman-penalized Stokes state equation on Taylor-Hood elements.
//!
//! The discrete problem is
//!
//! ```text
//! (grad u, grad w) + (alpha(phi) u, w) - (p, div w) = 0
//!                                  (div u, q)      = 0
//! ```
//!
//! with `u = g` on inflow edges and `u = 0` on walls. Outflow edges carry
//! the natural do-nothing condition, which also fixes the pressure level.

use std::sync::Arc;

use log::warn;

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_divergence, assemble_p2_vector_stiffness, assemble_weighted_p2_vector_mass, FeSpace,
    ScalarFieldP1, ScalarPressureP1, VectorFieldP2,
};
use crate::linalg::{saddle_solve, CsrMatrix, SaddleSystem, DEFAULT_TOL};
use crate::mesh::{BoundaryTag, Point};

/// Prescribed inflow velocity as a function of position.
pub type InflowFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;

/// Brinkman coefficient `alpha0 (1 - phi)^2`.
pub fn alpha(phi: f64, alpha0: f64) -> f64 {
    alpha0 * (1.0 - phi) * (1.0 - phi)
}

/// Brinkman coefficient at every quadrature point, element-major.
pub fn brinkman_weight(space: &FeSpace, phi: &[f64], alpha0: f64, coupling: Coupling) -> Vec<f64> {
    match coupling {
        Coupling::Quadrature => space
            .p1_at_quadrature(phi)
            .into_iter()
            .map(|v| alpha(v, alpha0))
            .collect(),
        Coupling::Nodal => {
            let nodal: Vec<f64> = phi.iter().map(|&v| alpha(v, alpha0)).collect();
            space.p1_at_quadrature(&nodal)
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub velocity: VectorFieldP2,
    pub pressure: ScalarPressureP1,
    pub residual: f64,
    pub divergence_residual: f64,
}

/// Reusable pieces of the state solve: operators that do not depend on
/// the phase field and the Dirichlet data.
#[derive(Clone)]
pub struct StateSolver {
    stiffness: CsrMatrix,
    divergence: CsrMatrix,
    dirichlet: Vec<(usize, f64)>,
    pressure_pin: Option<usize>,
    alpha0: f64,
    coupling: Coupling,
    tol: f64,
}

impl std::fmt::Debug for StateSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StateSolver")
            .field("dirichlet_dofs", &self.dirichlet.len())
            .field("pressure_pin", &self.pressure_pin)
            .field("alpha0", &self.alpha0)
            .field("coupling", &self.coupling)
            .finish()
    }
}

impl StateSolver {
    pub fn new(
        space: &FeSpace,
        inflow: Option<Arc<InflowFn>>,
        alpha0: f64,
        coupling: Coupling,
    ) -> Result<Self> {
        if !(alpha0 >= 0.0 && alpha0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha0 must be nonnegative, got {alpha0}"
            )));
        }
        let mesh = space.mesh();
        if inflow.is_some() && !mesh.has_tag(BoundaryTag::Inflow) {
            return Err(Error::Config(
                "inflow data given but no boundary edge is tagged Inflow".into(),
            ));
        }
        let dirichlet = dirichlet_values(space, inflow.as_deref());
        let pressure_pin = if mesh.has_tag(BoundaryTag::Outflow) {
            None
        } else {
            Some(0)
        };
        Ok(Self {
            stiffness: assemble_p2_vector_stiffness(space),
            divergence: assemble_divergence(space),
            dirichlet,
            pressure_pin,
            alpha0,
            coupling,
            tol: DEFAULT_TOL,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn divergence(&self) -> &CsrMatrix {
        &self.divergence
    }

    pub fn dirichlet(&self) -> &[(usize, f64)] {
        &self.dirichlet
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// Velocity block `A + M_alpha(phi)` of the state system.
    pub fn velocity_operator(&self, space: &FeSpace, phi: &[f64]) -> Result<CsrMatrix> {
        let weight = brinkman_weight(space, phi, self.alpha0, self.coupling);
        let nq = space.rule().len();
        let mass = assemble_weighted_p2_vector_mass(space, |t, q| weight[t * nq + q])?;
        CsrMatrix::linear_combination(&[(1.0, &self.stiffness), (1.0, &mass)])
    }

    pub fn solve(&self, space: &FeSpace, phi: &ScalarFieldP1) -> Result<StateSolution> {
        if phi.len() != space.n_p1() {
            return Err(Error::DimensionMismatch(format!(
                "phase field has {} values, expected {}",
                phi.len(),
                space.n_p1()
            )));
        }
        let a = self.velocity_operator(space, phi)?;
        let n_u = a.nrows();
        let sys = SaddleSystem {
            a,
            b: self.divergence.clone(),
            rhs_u: vec![0.0; n_u],
            rhs_p: vec![0.0; space.n_p1()],
            dirichlet: self.dirichlet.clone(),
            pressure_pin: self.pressure_pin,
        };
        let sol = saddle_solve(&sys, self.tol)?;
        // The system is solved with multiplier +p against B = (div u, q);
        // the physical pressure enters the momentum equation as -(p, div w).
        let pressure = sol.p.iter().map(|v| -v).collect();
        Ok(StateSolution {
            velocity: VectorFieldP2(sol.u),
            pressure: ScalarPressureP1(pressure),
            residual: sol.residual,
            divergence_residual: sol.divergence_residual,
        })
    }

    /// `1/2 (grad u, grad u)`.
    pub fn dissipation_energy(&self, u: &VectorFieldP2) -> f64 {
        0.5 * self.stiffness.quadratic_form(u)
    }

    pub fn penalization_energy(
        &self,
        space: &FeSpace,
        u: &VectorFieldP2,
        phi: &ScalarFieldP1,
    ) -> f64 {
        penalization_energy(space, u, phi, self.alpha0, self.coupling)
    }
}

/// Solves the state equation once for the given phase field.
pub fn solve_state(
    space: &FeSpace,
    phi: &ScalarFieldP1,
    inflow: Option<Arc<InflowFn>>,
    alpha0: f64,
    coupling: Coupling,
) -> Result<StateSolution> {
    StateSolver::new(space, inflow, alpha0, coupling)?.solve(space, phi)
}

/// `1/2 (grad u, grad u)` assembled from scratch.
pub fn dissipation_energy(space: &FeSpace, u: &VectorFieldP2) -> f64 {
    0.5 * assemble_p2_vector_stiffness(space).quadratic_form(u)
}

/// `1/2 (alpha(phi) u, u)` with the Brinkman coefficient sampled per `coupling`.
pub fn penalization_energy(
    space: &FeSpace,
    u: &VectorFieldP2,
    phi: &ScalarFieldP1,
    alpha0: f64,
    coupling: Coupling,
) -> f64 {
    let weight = brinkman_weight(space, phi, alpha0, coupling);
    let speed = space.speed_squared_at_quadrature(u);
    let nq = space.rule().len();
    let mut total = 0.0;
    for t in 0..space.mesh().n_triangles() {
        for q in 0..nq {
            total += space.quad_weight(t, q) * weight[t * nq + q] * speed[t * nq + q];
        }
    }
    0.5 * total
}

fn dirichlet_values(space: &FeSpace, inflow: Option<&InflowFn>) -> Vec<(usize, f64)> {
    let n2 = space.n_p2();
    let coords = space.p2().coords();
    let mut value: Vec<Option<[f64; 2]>> = vec![None; n2];
    for &d in space.p2().boundary_dofs(BoundaryTag::Wall) {
        value[d] = Some([0.0, 0.0]);
    }
    for &d in space.p2().boundary_dofs(BoundaryTag::Inflow) {
        let g = inflow.map(|f| f(coords[d])).unwrap_or([0.0, 0.0]);
        match value[d] {
            Some(_) if g[0].abs().max(g[1].abs()) > 1e-14 => {
                warn!(
                    "inflow profile is {:?} at wall corner {:?}; using no-slip",
                    g, coords[d]
                );
            }
            _ => value[d] = Some(g),
        }
    }
    let mut out = Vec::new();
    for c in 0..2 {
        for (d, v) in value.iter().enumerate() {
            if let Some(v) = v {
                out.push((c * n2 + d, v[c]));
            }
        }
    }
    out
}
