//! Phase-field shape optimization for Stokes flow.
//!
//! A fluid region is described by a phase field `phi` in `[0, 1]` on a
//! rectangular design domain. Material with `phi < 1` is penalized by a
//! Brinkman term, and the layout is improved by alternating a Taylor–Hood
//! Stokes solve with stabilized Allen–Cahn steps, a nodal cut-off and a
//! Lagrange multiplier update for the volume constraint. The Lagrangian is
//! recomputed after every stage and checked for decay while the run goes.
//!
//! ```no_run
//! use flowshape::app::case_diffuser;
//! use flowshape::{FeSpace, Optimizer, RunConfig};
//!
//! let case = case_diffuser();
//! let space = FeSpace::new(case.mesh(32, 32)?);
//! let config = RunConfig { beta: case.beta, ..RunConfig::default() };
//! let report = Optimizer::new(&space, case.inflow(), config)?.run(&case.initial_phase(&space))?;
//! println!("final energy {:?}", report.final_energy());
//! # Ok::<(), flowshape::Error>(())
//! ```

pub mod app;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod optimizer;
pub mod phasefield;
pub mod stokes;

pub use coupling::Coupling;
pub use error::{Error, Result};
pub use fem::{FeSpace, ScalarFieldP1, ScalarPressureP1, VectorFieldP2};
pub use mesh::{BoundaryTag, Point, TriMesh};
pub use optimizer::{
    run_optimization, update_lambda, DecayPolicy, EnergyBreakdown, Optimizer, RunConfig, RunReport,
    Stage,
};
pub use phasefield::{PhaseOperators, PhaseParams};
pub use stokes::{solve_state, StateSolution, StateSolver};
