//! Allen–Cahn step, cut-off and the interface energy.
//!
//! One pseudo-time step solves the linear SPD system
//!
//! ```text
//! [(1/dt) M + S D + eps*eta K + (alpha0/2) W] phi*
//!     = (1/dt) M phi_k + S D phi_k
//!       + (-(eta/eps) f(phi_k) + alpha0 |u|^2 (1 - phi_k/2) - lambda, psi)
//! ```
//!
//! where `W` is the mass weighted by `|u|^2` and `D` is the mass used for the
//! stabilizer. How `D`, `W` and the nonlinear loads are discretized depends on
//! the [`Coupling`].

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_p1_load, assemble_p1_mass, assemble_p1_stiffness, assemble_weighted_p1_mass, FeSpace,
    ScalarFieldP1, VectorFieldP2,
};
use crate::linalg::{cg_solve_from, CsrMatrix};

/// Double-well potential `phi^2 (phi - 1)^2 / 4`, continued quadratically
/// outside `[0, 1]`.
pub fn double_well(v: f64) -> f64 {
    if v > 1.0 {
        0.25 * (v - 1.0) * (v - 1.0)
    } else if v < 0.0 {
        0.25 * v * v
    } else {
        0.25 * v * v * (v - 1.0) * (v - 1.0)
    }
}

/// Derivative of [`double_well`]. Its own derivative is bounded by 1/2.
pub fn double_well_derivative(v: f64) -> f64 {
    if v > 1.0 {
        0.5 * (v - 1.0)
    } else if v < 0.0 {
        0.5 * v
    } else {
        v * (v - 1.0) * (v - 0.5)
    }
}

/// Nodal clamp into `[0, 1]`.
pub fn cutoff(phi: &ScalarFieldP1) -> ScalarFieldP1 {
    let mut out = phi.clone();
    cutoff_in_place(&mut out);
    out
}

pub fn cutoff_in_place(phi: &mut [f64]) {
    for v in phi.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Smallest stabilizer for which the semi-implicit step is energy stable.
pub fn min_stabilizer(eps: f64, eta: f64) -> f64 {
    eta / (4.0 * eps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub eps: f64,
    pub eta: f64,
    pub dt: f64,
    pub stab: f64,
    pub alpha0: f64,
}

impl PhaseParams {
    /// Parameters with the minimal stable stabilizer.
    pub fn new(eps: f64, eta: f64, dt: f64, alpha0: f64) -> Result<Self> {
        for (name, v) in [("eps", eps), ("eta", eta), ("dt", dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(alpha0 >= 0.0 && alpha0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha0 must be nonnegative, got {alpha0}"
            )));
        }
        Ok(Self {
            eps,
            eta,
            dt,
            stab: min_stabilizer(eps, eta),
            alpha0,
        })
    }

    /// Replaces the stabilizer. Values below `eta / (4 eps)` are rejected
    /// unless `allow_unstable` is set.
    pub fn with_stabilizer(mut self, stab: f64, allow_unstable: bool) -> Result<Self> {
        if !(stab >= 0.0 && stab.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "stabilizer must be nonnegative, got {stab}"
            )));
        }
        let min = min_stabilizer(self.eps, self.eta);
        if stab < min && !allow_unstable {
            return Err(Error::InvalidArgument(format!(
                "stabilizer {stab} is below eta/(4 eps) = {min}; the step is not energy stable"
            )));
        }
        self.stab = stab;
        Ok(self)
    }

    pub fn is_stable(&self) -> bool {
        self.stab >= min_stabilizer(self.eps, self.eta)
    }
}

/// Phase-independent P1 operators.
#[derive(Debug, Clone)]
pub struct PhaseOperators {
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    lumped: Vec<f64>,
    /// Off-diagonal stiffness couplings `(i, j, -K_ij)` with `i < j`.
    edges: Vec<(usize, usize, f64)>,
}

impl PhaseOperators {
    pub fn new(space: &FeSpace) -> Self {
        let mass = assemble_p1_mass(space);
        let stiffness = assemble_p1_stiffness(space);
        let lumped = mass.row_sums();
        let edges = stiffness
            .triplets()
            .filter(|&(i, j, v)| i < j && v != 0.0)
            .map(|(i, j, v)| (i, j, -v))
            .collect();
        Self {
            mass,
            stiffness,
            lumped,
            edges,
        }
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn lumped(&self) -> &[f64] {
        &self.lumped
    }

    /// `phi^T K phi`, evaluated as `sum_{i<j} -K_ij (phi_i - phi_j)^2`.
    ///
    /// Rows of `K` sum to zero, so this is the same quadratic form. Written
    /// as a sum of edge differences it cannot grow under the cut-off when all
    /// couplings are nonnegative, even in floating point.
    pub fn dirichlet_energy(&self, phi: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, w)| {
                let d = phi[i] - phi[j];
                w * d * d
            })
            .sum()
    }

    /// True when no off-diagonal stiffness entry is positive.
    pub fn has_nonnegative_couplings(&self) -> bool {
        self.edges.iter().all(|e| e.2 >= 0.0)
    }

    /// `int phi`.
    pub fn volume(&self, phi: &[f64]) -> f64 {
        self.lumped.iter().zip(phi).map(|(m, v)| m * v).sum()
    }
}

/// `int F(phi)`, nodal or at quadrature points.
pub fn well_integral(
    space: &FeSpace,
    ops: &PhaseOperators,
    phi: &[f64],
    coupling: Coupling,
) -> f64 {
    match coupling {
        Coupling::Nodal => ops
            .lumped
            .iter()
            .zip(phi)
            .map(|(m, &v)| m * double_well(v))
            .sum(),
        Coupling::Quadrature => {
            let vals = space.p1_at_quadrature(phi);
            let nq = space.rule().len();
            let mut total = 0.0;
            for t in 0..space.mesh().n_triangles() {
                for q in 0..nq {
                    total += space.quad_weight(t, q) * double_well(vals[t * nq + q]);
                }
            }
            total
        }
    }
}

/// `int eps/2 |grad phi|^2 + F(phi)/eps`.
pub fn ginzburg_landau_energy(
    space: &FeSpace,
    ops: &PhaseOperators,
    phi: &[f64],
    eps: f64,
    coupling: Coupling,
) -> f64 {
    0.5 * eps * ops.dirichlet_energy(phi) + well_integral(space, ops, phi, coupling) / eps
}

/// `int phi - beta V0`.
pub fn volume_misfit(ops: &PhaseOperators, phi: &[f64], beta: f64, v0: f64) -> f64 {
    ops.volume(phi) - beta * v0
}

#[derive(Debug, Clone)]
enum SpeedData {
    Nodal(Vec<f64>),
    Quadrature(Vec<f64>),
}

/// The Allen–Cahn system for a fixed velocity. The matrix does not depend
/// on the phase field or the multiplier, so it is built once per state solve.
#[derive(Debug, Clone)]
pub struct AllenCahnSystem {
    params: PhaseParams,
    matrix: CsrMatrix,
    speed: SpeedData,
    tol: f64,
}

#[derive(Debug, Clone)]
pub struct AllenCahnStep {
    pub phi: ScalarFieldP1,
    pub iterations: usize,
    pub residual: f64,
}

impl AllenCahnSystem {
    pub fn new(
        space: &FeSpace,
        ops: &PhaseOperators,
        params: PhaseParams,
        coupling: Coupling,
        u: Option<&VectorFieldP2>,
    ) -> Result<Self> {
        if let Some(u) = u {
            if u.len() != 2 * space.n_p2() {
                return Err(Error::DimensionMismatch(format!(
                    "velocity has {} values, expected {}",
                    u.len(),
                    2 * space.n_p2()
                )));
            }
        }
        let n = space.n_p1();
        let speed_q = match u {
            Some(u) => space.speed_squared_at_quadrature(u),
            None => vec![0.0; space.mesh().n_triangles() * space.rule().len()],
        };
        let nq = space.rule().len();
        let inv_dt = 1.0 / params.dt;
        let gradient = ops.stiffness.scaled(params.eps * params.eta);
        let (matrix, speed) = match coupling {
            Coupling::Nodal => {
                let s = assemble_p1_load(space, |t, q| speed_q[t * nq + q]);
                let diag: Vec<f64> = (0..n)
                    .map(|i| params.stab * ops.lumped[i] + 0.5 * params.alpha0 * s[i])
                    .collect();
                let d = CsrMatrix::from_diagonal(&diag);
                let m = CsrMatrix::linear_combination(&[
                    (inv_dt, &ops.mass),
                    (1.0, &gradient),
                    (1.0, &d),
                ])?;
                (m, SpeedData::Nodal(s))
            }
            Coupling::Quadrature => {
                let w = assemble_weighted_p1_mass(space, |t, q| speed_q[t * nq + q])?;
                let m = CsrMatrix::linear_combination(&[
                    (inv_dt + params.stab, &ops.mass),
                    (1.0, &gradient),
                    (0.5 * params.alpha0, &w),
                ])?;
                (m, SpeedData::Quadrature(speed_q))
            }
        };
        Ok(Self {
            params,
            matrix,
            speed,
            tol: 1e-12,
        })
    }

    /// Relative residual target for the CG solve.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &PhaseParams {
        &self.params
    }

    pub fn rhs(
        &self,
        space: &FeSpace,
        ops: &PhaseOperators,
        phi_k: &[f64],
        lambda: f64,
    ) -> Vec<f64> {
        let p = &self.params;
        let inv_dt = 1.0 / p.dt;
        let well = p.eta / p.eps;
        match &self.speed {
            SpeedData::Nodal(s) => {
                let mut rhs = ops.mass.matvec(phi_k);
                for (i, r) in rhs.iter_mut().enumerate() {
                    let v = phi_k[i];
                    let m = ops.lumped[i];
                    *r = inv_dt * *r + p.stab * m * v - well * m * double_well_derivative(v)
                        + p.alpha0 * s[i] * (1.0 - 0.5 * v)
                        - lambda * m;
                }
                rhs
            }
            SpeedData::Quadrature(speed) => {
                let nq = space.rule().len();
                let vals = space.p1_at_quadrature(phi_k);
                let load = assemble_p1_load(space, |t, q| {
                    let k = t * nq + q;
                    let v = vals[k];
                    -well * double_well_derivative(v) + p.alpha0 * speed[k] * (1.0 - 0.5 * v)
                        - lambda
                });
                let mut rhs = ops.mass.matvec(phi_k);
                for (r, l) in rhs.iter_mut().zip(load) {
                    *r = (inv_dt + p.stab) * *r + l;
                }
                rhs
            }
        }
    }

    /// One semi-implicit step from `phi_k` with multiplier `lambda`.
    pub fn step(
        &self,
        space: &FeSpace,
        ops: &PhaseOperators,
        phi_k: &ScalarFieldP1,
        lambda: f64,
    ) -> Result<AllenCahnStep> {
        if phi_k.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "phase field has {} values, expected {}",
                phi_k.len(),
                self.matrix.nrows()
            )));
        }
        let rhs = self.rhs(space, ops, phi_k, lambda);
        let max_iter = 10 * rhs.len() + 100;
        let sol = cg_solve_from(&self.matrix, &rhs, Some(phi_k), self.tol, max_iter)?;
        Ok(AllenCahnStep {
            phi: ScalarFieldP1(sol.x),
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }
}

/// Builds the system and takes a single step.
pub fn allen_cahn_step(
    space: &FeSpace,
    ops: &PhaseOperators,
    phi_k: &ScalarFieldP1,
    u: Option<&VectorFieldP2>,
    lambda: f64,
    params: PhaseParams,
    coupling: Coupling,
) -> Result<ScalarFieldP1> {
    Ok(AllenCahnSystem::new(space, ops, params, coupling, u)?
        .step(space, ops, phi_k, lambda)?
        .phi)
}
