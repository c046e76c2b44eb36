//! Outer/inner optimization loop with a live energy ledger.
//!
//! Each outer iteration solves the state equation once and then performs
//! `inner` rounds of Allen–Cahn step, cut-off and multiplier update. After
//! every stage the Lagrangian
//!
//! ```text
//! L(phi, u, lambda) = 1/2 |grad u|^2 + 1/2 (alpha(phi) u, u)
//!                     + eta J_eps(phi) + lambda (int phi - beta V0)
//! ```
//! is recomputed from the fields and compared with the previous stage.
//!
//! The multiplier step never lets `lambda J_v` grow across a cut-off. When
//! the volume misfit stays positive this drives `lambda` down without bound,
//! so a non-finite energy or multiplier halts the run (see
//! [`RunReport::diverged`]).

use std::fmt;
use std::sync::Arc;

use log::{debug, info};

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::fem::{FeSpace, ScalarFieldP1, ScalarPressureP1, VectorFieldP2};
use crate::linalg::DEFAULT_TOL;
use crate::phasefield::{
    cutoff, ginzburg_landau_energy, AllenCahnSystem, PhaseOperators, PhaseParams,
};
use crate::stokes::{brinkman_weight, InflowFn, StateSolution, StateSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    AfterStokes,
    AfterAllenCahn,
    AfterCutoff,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::AfterStokes => "stokes",
            Stage::AfterAllenCahn => "allen_cahn",
            Stage::AfterCutoff => "cutoff",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayPolicy {
    /// Stop with [`Error::EnergyIncrease`] at the first violation.
    Abort,
    /// Keep going and collect violations in the report.
    Record,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub outer: usize,
    pub inner: usize,
    pub eps: f64,
    pub eta: f64,
    pub dt: f64,
    /// Stabilizer; `None` means `eta / (4 eps)`.
    pub stab: Option<f64>,
    pub alpha0: f64,
    pub beta: f64,
    pub beta0: f64,
    pub lambda0: f64,
    pub allow_unstable: bool,
    pub coupling: Coupling,
    /// Feed the multiplier from the start of the outer iteration to every
    /// inner step instead of the latest one.
    pub lambda_frozen_per_outer: bool,
    /// Relative plateau threshold; `None` always runs `outer` iterations.
    pub stop_tol: Option<f64>,
    pub stop_window: usize,
    /// Relative slack for the stage-to-stage energy comparison.
    pub slack: f64,
    pub policy: DecayPolicy,
    pub stokes_tol: f64,
    pub cg_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            outer: 30,
            inner: 10,
            eps: 0.01,
            eta: 0.01,
            dt: 1.0,
            stab: None,
            alpha0: 1e4,
            beta: 0.5,
            beta0: 1.0,
            lambda0: 0.0,
            allow_unstable: false,
            coupling: Coupling::Nodal,
            lambda_frozen_per_outer: false,
            stop_tol: Some(1e-8),
            stop_window: 3,
            slack: 1e-8,
            policy: DecayPolicy::Abort,
            stokes_tol: DEFAULT_TOL,
            cg_tol: 1e-12,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<PhaseParams> {
        if self.outer == 0 || self.inner == 0 {
            return Err(Error::InvalidArgument(
                "outer and inner iteration counts must be at least 1".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta0 must be positive, got {}",
                self.beta0
            )));
        }
        if !self.lambda0.is_finite() {
            return Err(Error::InvalidArgument("lambda0 must be finite".into()));
        }
        if self.slack.is_nan() || self.slack < 0.0 {
            return Err(Error::InvalidArgument("slack must be nonnegative".into()));
        }
        let p = PhaseParams::new(self.eps, self.eta, self.dt, self.alpha0)?;
        match self.stab {
            Some(s) => p.with_stabilizer(s, self.allow_unstable),
            None => Ok(p),
        }
    }
}

/// One row of the energy ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub outer: usize,
    /// 0 for the state solve, `1..=inner` for the inner stages.
    pub inner: usize,
    pub stage: Stage,
    pub total: f64,
    pub dissipation: f64,
    pub penalization: f64,
    /// `eta * J_eps`.
    pub interface: f64,
    pub lambda: f64,
    pub volume_misfit: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl EnergyBreakdown {
    pub fn volume_term(&self) -> f64 {
        self.lambda * self.volume_misfit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaBranch {
    /// The cut-off did not raise the volume; the fixed step is used.
    Fixed,
    /// The cut-off raised the volume; the step may be enlarged.
    Adjusted,
    /// The constraint is met exactly; the multiplier is kept.
    Satisfied,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaUpdate {
    pub lambda: f64,
    pub step: f64,
    pub branch: LambdaBranch,
}

/// Multiplier update after a cut-off.
///
/// `misfit_star` and `misfit_plus` are the volume misfits before and after
/// the cut-off. The step is `max(beta0, lambda (misfit_plus - misfit_star) / misfit_plus^2)`,
/// the smallest step not below `beta0` for which
/// `lambda' misfit_plus <= lambda misfit_star`. The result is then nudged
/// by a few ulps where needed so the inequality also holds as evaluated.
pub fn update_lambda(lambda: f64, misfit_star: f64, misfit_plus: f64, beta0: f64) -> LambdaUpdate {
    if misfit_plus == 0.0 {
        return LambdaUpdate {
            lambda,
            step: 0.0,
            branch: LambdaBranch::Satisfied,
        };
    }
    let branch = if misfit_star >= misfit_plus {
        LambdaBranch::Fixed
    } else {
        LambdaBranch::Adjusted
    };
    let needed = lambda * (misfit_plus - misfit_star) / (misfit_plus * misfit_plus);
    let step = beta0.max(needed);
    let bound = lambda * misfit_star;
    let mut next = lambda - step * misfit_plus;
    // Rounding can leave the product a few ulps above the bound.
    for _ in 0..64 {
        if next * misfit_plus <= bound {
            break;
        }
        next = if misfit_plus > 0.0 {
            next.next_down()
        } else {
            next.next_up()
        };
    }
    LambdaUpdate {
        lambda: next,
        step,
        branch,
    }
}

/// Which inequality a check covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Total energy across the state solve.
    StateSolve,
    /// Total energy across an Allen–Cahn step.
    AllenCahn,
    /// Total energy across cut-off and multiplier update.
    Cutoff,
    /// `phi^T K phi` across the cut-off.
    Gradient,
    /// Penalization energy across the cut-off.
    Penalization,
    /// Double-well integral across the cut-off.
    Well,
    /// `lambda' J_v(phi+) <= lambda J_v(phi*)`.
    Multiplier,
    /// Nodal values in `[0, 1]` after the cut-off.
    Bounds,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::StateSolve => "state solve",
            CheckKind::AllenCahn => "Allen-Cahn step",
            CheckKind::Cutoff => "cut-off and multiplier update",
            CheckKind::Gradient => "gradient energy under cut-off",
            CheckKind::Penalization => "penalization energy under cut-off",
            CheckKind::Well => "double-well energy under cut-off",
            CheckKind::Multiplier => "multiplier update",
            CheckKind::Bounds => "cut-off bounds",
        }
    }
}

/// A failed check together with the fields on both sides of it.
#[derive(Clone)]
pub struct DecayViolation {
    pub kind: CheckKind,
    pub outer: usize,
    pub inner: usize,
    pub before: f64,
    pub after: f64,
    pub allowed: f64,
    pub lambda: f64,
    pub phi_before: ScalarFieldP1,
    pub phi_after: ScalarFieldP1,
    pub velocity: Option<VectorFieldP2>,
}

impl fmt::Debug for DecayViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecayViolation")
            .field("kind", &self.kind)
            .field("outer", &self.outer)
            .field("inner", &self.inner)
            .field("before", &self.before)
            .field("after", &self.after)
            .field("allowed", &self.allowed)
            .field("lambda", &self.lambda)
            .field("nodes", &self.phi_before.len())
            .finish_non_exhaustive()
    }
}

impl DecayViolation {
    pub fn excess(&self) -> f64 {
        self.after - self.before
    }

    pub fn summary(&self) -> String {
        format!(
            "{} (outer {}, inner {}): {:e} -> {:e}, increase {:e} exceeds {:e}",
            self.kind.as_str(),
            self.outer,
            self.inner,
            self.before,
            self.after,
            self.excess(),
            self.allowed
        )
    }
}

/// Quantities around one cut-off.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffRecord {
    pub outer: usize,
    pub inner: usize,
    pub gradient_before: f64,
    pub gradient_after: f64,
    pub penalization_before: f64,
    pub penalization_after: f64,
    pub well_before: f64,
    pub well_after: f64,
    pub lambda_before: f64,
    pub misfit_star: f64,
    pub misfit_plus: f64,
    pub update: LambdaUpdate,
    pub phi_min: f64,
    pub phi_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub outer: usize,
    pub residual: f64,
    pub divergence_residual: f64,
}

/// A stage-to-stage energy comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub kind: CheckKind,
    pub outer: usize,
    pub inner: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub history: Vec<EnergyBreakdown>,
    pub transitions: Vec<Transition>,
    pub cutoffs: Vec<CutoffRecord>,
    pub states: Vec<StateRecord>,
    pub violations: Vec<DecayViolation>,
    pub outer_completed: usize,
    pub stopped_early: bool,
    /// `(outer, inner)` where a non-finite multiplier or energy halted a
    /// run under [`DecayPolicy::Record`].
    pub diverged: Option<(usize, usize)>,
    pub phi: ScalarFieldP1,
    pub velocity: VectorFieldP2,
    pub pressure: ScalarPressureP1,
    pub lambda: f64,
}

impl RunReport {
    pub fn final_energy(&self) -> Option<f64> {
        self.history.last().map(|r| r.total)
    }

    /// Total energy at the last stage of each completed outer iteration.
    pub fn outer_energies(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, row) in self.history.iter().enumerate() {
            let last = self
                .history
                .get(i + 1)
                .is_none_or(|next| next.outer != row.outer);
            if last {
                out.push(row.total);
            }
        }
        out
    }
}

/// Receives ledger rows and per-iteration fields while the run progresses.
pub trait Observer {
    fn stage(&mut self, _row: &EnergyBreakdown) -> Result<()> {
        Ok(())
    }

    fn outer_done(
        &mut self,
        _outer: usize,
        _phi: &ScalarFieldP1,
        _state: &StateSolution,
    ) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {}

/// Velocity-dependent pieces of the energy, cached per state solve.
struct StateEnergy {
    dissipation: f64,
    speed: Vec<f64>,
}

pub struct Optimizer<'a> {
    space: &'a FeSpace,
    ops: PhaseOperators,
    solver: StateSolver,
    params: PhaseParams,
    config: RunConfig,
    v0: f64,
    structured: bool,
}

impl<'a> Optimizer<'a> {
    pub fn new(
        space: &'a FeSpace,
        inflow: Option<Arc<InflowFn>>,
        config: RunConfig,
    ) -> Result<Self> {
        let params = config.validate()?;
        if !params.is_stable() {
            log::warn!(
                "stabilizer {} is below eta/(4 eps); decay is not guaranteed",
                params.stab
            );
        }
        let solver = StateSolver::new(space, inflow, config.alpha0, config.coupling)?
            .with_tolerance(config.stokes_tol);
        let ops = PhaseOperators::new(space);
        let structured = ops.has_nonnegative_couplings();
        Ok(Self {
            space,
            v0: space.mesh().total_area(),
            ops,
            solver,
            params,
            config,
            structured,
        })
    }

    pub fn operators(&self) -> &PhaseOperators {
        &self.ops
    }

    pub fn params(&self) -> &PhaseParams {
        &self.params
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn volume_misfit(&self, phi: &[f64]) -> f64 {
        self.ops.volume(phi) - self.config.beta * self.v0
    }

    fn state_energy(&self, u: &VectorFieldP2) -> StateEnergy {
        StateEnergy {
            dissipation: self.solver.dissipation_energy(u),
            speed: self.space.speed_squared_at_quadrature(u),
        }
    }

    fn penalization(&self, st: &StateEnergy, phi: &[f64]) -> f64 {
        let weight = brinkman_weight(self.space, phi, self.config.alpha0, self.config.coupling);
        let nq = self.space.rule().len();
        let mut total = 0.0;
        for t in 0..self.space.mesh().n_triangles() {
            for q in 0..nq {
                let k = t * nq + q;
                total += self.space.quad_weight(t, q) * weight[k] * st.speed[k];
            }
        }
        0.5 * total
    }

    fn breakdown(
        &self,
        st: &StateEnergy,
        phi: &ScalarFieldP1,
        lambda: f64,
        at: (usize, usize, Stage),
    ) -> EnergyBreakdown {
        let penalization = self.penalization(st, phi);
        let interface = self.params.eta
            * ginzburg_landau_energy(
                self.space,
                &self.ops,
                phi,
                self.params.eps,
                self.config.coupling,
            );
        let volume_misfit = self.volume_misfit(phi);
        EnergyBreakdown {
            outer: at.0,
            inner: at.1,
            stage: at.2,
            total: st.dissipation + penalization + interface + lambda * volume_misfit,
            dissipation: st.dissipation,
            penalization,
            interface,
            lambda,
            volume_misfit,
            phi_min: phi.min(),
            phi_max: phi.max(),
        }
    }

    /// Runs from `phi0` without an observer.
    pub fn run(&self, phi0: &ScalarFieldP1) -> Result<RunReport> {
        self.run_with(phi0, &mut ())
    }

    pub fn run_with(&self, phi0: &ScalarFieldP1, observer: &mut dyn Observer) -> Result<RunReport> {
        let cfg = &self.config;
        if phi0.len() != self.space.n_p1() {
            return Err(Error::DimensionMismatch(format!(
                "initial phase field has {} values, expected {}",
                phi0.len(),
                self.space.n_p1()
            )));
        }
        if phi0.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "initial phase field must lie in [0, 1]".into(),
            ));
        }

        let mut run = RunState {
            policy: cfg.policy,
            report: RunReport {
                history: Vec::new(),
                transitions: Vec::new(),
                cutoffs: Vec::new(),
                states: Vec::new(),
                violations: Vec::new(),
                outer_completed: 0,
                stopped_early: false,
                diverged: None,
                phi: phi0.clone(),
                velocity: VectorFieldP2::default(),
                pressure: ScalarPressureP1::default(),
                lambda: cfg.lambda0,
            },
        };
        let mut phi = phi0.clone();
        let mut lambda = cfg.lambda0;
        let mut prev_u: Option<VectorFieldP2> = None;
        let mut plateau = 0usize;
        let mut last_outer_energy: Option<f64> = None;

        'outer: for n in 0..cfg.outer {
            let lambda_outer = lambda;
            let state = self
                .solver
                .solve(self.space, &phi)
                .map_err(|e| e.in_context(format!("state solve at outer iteration {n}")))?;
            run.report.states.push(StateRecord {
                outer: n,
                residual: state.residual,
                divergence_residual: state.divergence_residual,
            });
            let st = self.state_energy(&state.velocity);
            let row = self.breakdown(&st, &phi, lambda, (n, 0, Stage::AfterStokes));
            if !row.total.is_finite() {
                run.halt((n, 0), "energy after the state solve")?;
                break 'outer;
            }
            if let Some(prev) = run.report.history.last() {
                let before = prev.total;
                run.energy_check(
                    CheckKind::StateSolve,
                    (n, 0),
                    before,
                    row.total,
                    cfg.slack,
                    lambda,
                    (&phi, &phi),
                    prev_u.as_ref(),
                )?;
            }
            run.push(row, observer)?;

            let ac = AllenCahnSystem::new(
                self.space,
                &self.ops,
                self.params,
                cfg.coupling,
                Some(&state.velocity),
            )
            .map_err(|e| e.in_context(format!("Allen-Cahn assembly at outer iteration {n}")))?
            .with_tolerance(cfg.cg_tol);

            for k in 1..=cfg.inner {
                let lambda_ac = if cfg.lambda_frozen_per_outer {
                    lambda_outer
                } else {
                    lambda
                };
                let step = ac
                    .step(self.space, &self.ops, &phi, lambda_ac)
                    .map_err(|e| {
                        e.in_context(format!("Allen-Cahn solve at outer {n}, inner {k}"))
                    })?;
                let star = step.phi;
                let before = run
                    .report
                    .history
                    .last()
                    .map(|r| r.total)
                    .unwrap_or(f64::NAN);
                let row_star = self.breakdown(&st, &star, lambda, (n, k, Stage::AfterAllenCahn));
                if !row_star.total.is_finite() {
                    run.halt((n, k), "energy after the Allen-Cahn step")?;
                    break 'outer;
                }
                run.energy_check(
                    CheckKind::AllenCahn,
                    (n, k),
                    before,
                    row_star.total,
                    cfg.slack,
                    lambda,
                    (&phi, &star),
                    Some(&state.velocity),
                )?;

                let plus = cutoff(&star);
                let (lo, hi) = (plus.min(), plus.max());
                if !(lo >= 0.0 && hi <= 1.0) {
                    run.violation(DecayViolation {
                        kind: CheckKind::Bounds,
                        outer: n,
                        inner: k,
                        before: lo,
                        after: hi,
                        allowed: 0.0,
                        lambda,
                        phi_before: star.clone(),
                        phi_after: plus.clone(),
                        velocity: None,
                    })?;
                }

                let grad = (
                    self.ops.dirichlet_energy(&star),
                    self.ops.dirichlet_energy(&plus),
                );
                let pen = (row_star.penalization, self.penalization(&st, &plus));
                let well = (
                    crate::phasefield::well_integral(self.space, &self.ops, &star, cfg.coupling),
                    crate::phasefield::well_integral(self.space, &self.ops, &plus, cfg.coupling),
                );
                let fields = (&star, &plus);
                if self.structured {
                    run.bound_check(CheckKind::Gradient, (n, k), grad, 1e-12, lambda, fields)?;
                } else if grad.1 > grad.0 + 1e-12 {
                    debug!(
                        "gradient energy rose under cut-off on a general mesh: {:e}",
                        grad.1 - grad.0
                    );
                }
                run.bound_check(
                    CheckKind::Penalization,
                    (n, k),
                    pen,
                    cfg.slack * pen.0.abs(),
                    lambda,
                    fields,
                )?;
                run.bound_check(
                    CheckKind::Well,
                    (n, k),
                    well,
                    cfg.slack * well.0.abs(),
                    lambda,
                    fields,
                )?;

                let misfit_star = row_star.volume_misfit;
                let misfit_plus = self.volume_misfit(&plus);
                let update = update_lambda(lambda, misfit_star, misfit_plus, cfg.beta0);
                if !(update.lambda * misfit_plus).is_finite() {
                    run.halt((n, k), "multiplier")?;
                    break 'outer;
                }
                run.bound_check(
                    CheckKind::Multiplier,
                    (n, k),
                    (lambda * misfit_star, update.lambda * misfit_plus),
                    1e-12,
                    lambda,
                    fields,
                )?;
                run.report.cutoffs.push(CutoffRecord {
                    outer: n,
                    inner: k,
                    gradient_before: grad.0,
                    gradient_after: grad.1,
                    penalization_before: pen.0,
                    penalization_after: pen.1,
                    well_before: well.0,
                    well_after: well.1,
                    lambda_before: lambda,
                    misfit_star,
                    misfit_plus,
                    update,
                    phi_min: lo,
                    phi_max: hi,
                });
                run.push(row_star, observer)?;

                let lambda_star = lambda;
                lambda = update.lambda;
                let row_plus = self.breakdown(&st, &plus, lambda, (n, k, Stage::AfterCutoff));
                let before = run
                    .report
                    .history
                    .last()
                    .map(|r| r.total)
                    .unwrap_or(f64::NAN);
                run.energy_check(
                    CheckKind::Cutoff,
                    (n, k),
                    before,
                    row_plus.total,
                    cfg.slack,
                    lambda_star,
                    (&star, &plus),
                    Some(&state.velocity),
                )?;
                run.push(row_plus, observer)?;
                phi = plus;
            }

            observer.outer_done(n, &phi, &state)?;
            run.report.outer_completed = n + 1;
            let energy = run.report.history.last().map(|r| r.total).unwrap_or(0.0);
            info!(
                "outer {n}: L = {energy:.10e}, lambda = {lambda:.6e}, J_v = {:.3e}",
                self.volume_misfit(&phi)
            );
            run.report.velocity = state.velocity.clone();
            run.report.pressure = state.pressure;
            prev_u = Some(state.velocity);

            if let (Some(tol), Some(prev)) = (cfg.stop_tol, last_outer_energy) {
                let rel = (energy - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
                plateau = if rel < tol { plateau + 1 } else { 0 };
                if plateau >= cfg.stop_window {
                    info!("energy plateau reached after {} outer iterations", n + 1);
                    run.report.stopped_early = n + 1 < cfg.outer;
                    break;
                }
            }
            last_outer_energy = Some(energy);
        }

        run.report.phi = phi;
        run.report.lambda = lambda;
        Ok(run.report)
    }
}

struct RunState {
    policy: DecayPolicy,
    report: RunReport,
}

impl RunState {
    fn push(&mut self, row: EnergyBreakdown, observer: &mut dyn Observer) -> Result<()> {
        observer.stage(&row)?;
        self.report.history.push(row);
        Ok(())
    }

    fn halt(&mut self, at: (usize, usize), quantity: &'static str) -> Result<()> {
        log::error!("non-finite {quantity} at outer {}, inner {}", at.0, at.1);
        match self.policy {
            DecayPolicy::Abort => Err(Error::Diverged {
                outer: at.0,
                inner: at.1,
                quantity,
            }),
            DecayPolicy::Record => {
                self.report.diverged = Some(at);
                Ok(())
            }
        }
    }

    fn violation(&mut self, v: DecayViolation) -> Result<()> {
        log::error!("{}", v.summary());
        match self.policy {
            DecayPolicy::Abort => Err(Error::EnergyIncrease(Box::new(v))),
            DecayPolicy::Record => {
                self.report.violations.push(v);
                Ok(())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn energy_check(
        &mut self,
        kind: CheckKind,
        at: (usize, usize),
        before: f64,
        after: f64,
        slack: f64,
        lambda: f64,
        fields: (&ScalarFieldP1, &ScalarFieldP1),
        velocity: Option<&VectorFieldP2>,
    ) -> Result<()> {
        self.report.transitions.push(Transition {
            kind,
            outer: at.0,
            inner: at.1,
            before,
            after,
        });
        let allowed = slack * before.abs();
        if after <= before + allowed {
            return Ok(());
        }
        self.violation(DecayViolation {
            kind,
            outer: at.0,
            inner: at.1,
            before,
            after,
            allowed,
            lambda,
            phi_before: fields.0.clone(),
            phi_after: fields.1.clone(),
            velocity: velocity.cloned(),
        })
    }

    fn bound_check(
        &mut self,
        kind: CheckKind,
        at: (usize, usize),
        values: (f64, f64),
        allowed: f64,
        lambda: f64,
        fields: (&ScalarFieldP1, &ScalarFieldP1),
    ) -> Result<()> {
        if values.1 <= values.0 + allowed {
            return Ok(());
        }
        self.violation(DecayViolation {
            kind,
            outer: at.0,
            inner: at.1,
            before: values.0,
            after: values.1,
            allowed,
            lambda,
            phi_before: fields.0.clone(),
            phi_after: fields.1.clone(),
            velocity: None,
        })
    }
}

/// Builds an [`Optimizer`] and runs it once.
pub fn run_optimization(
    space: &FeSpace,
    inflow: Option<Arc<InflowFn>>,
    phi0: &ScalarFieldP1,
    config: RunConfig,
) -> Result<RunReport> {
    Optimizer::new(space, inflow, config)?.run(phi0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryRule, BoundaryTag, EdgeRegion, Side, TriMesh};
    use crate::phasefield::double_well;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn multiplier_fixed_step() {
        let up = update_lambda(0.5, 0.2, 0.1, 1.0);
        assert_eq!(up.branch, LambdaBranch::Fixed);
        assert!((up.lambda - 0.4).abs() < 1e-15);
    }

    #[test]
    fn multiplier_satisfied_constraint() {
        let up = update_lambda(0.7, 0.3, 0.0, 1.0);
        assert_eq!(up.branch, LambdaBranch::Satisfied);
        assert_eq!(up.lambda, 0.7);
    }

    #[test]
    fn multiplier_enlarged_step() {
        let (lambda, star, plus) = (2.0, 0.05, 0.1);
        let up = update_lambda(lambda, star, plus, 1.0);
        assert_eq!(up.branch, LambdaBranch::Adjusted);
        assert!((up.step - 10.0).abs() < 1e-12);
        assert!((up.lambda - 1.0).abs() < 1e-12);
        assert!(up.lambda * plus <= lambda * star + 1e-12);
    }

    #[test]
    fn multiplier_negative_lambda_with_shrinking_volume() {
        // With lambda < 0 the plain step would break the inequality.
        let (lambda, star, plus) = (-1.0, 0.3, 0.1);
        let fixed = lambda - 1.0 * plus;
        assert!(fixed * plus > lambda * star);
        let up = update_lambda(lambda, star, plus, 1.0);
        assert_eq!(up.branch, LambdaBranch::Fixed);
        assert!(up.step > 1.0);
        assert!(up.lambda * plus <= lambda * star + 1e-12);
    }

    proptest! {
        #[test]
        fn multiplier_inequality_holds(
            lambda in -50.0f64..50.0,
            star in -1.0f64..1.0,
            plus in -1.0f64..1.0,
            beta0 in 0.01f64..10.0,
        ) {
            prop_assume!(plus.abs() > 1e-6);
            let up = update_lambda(lambda, star, plus, beta0);
            prop_assert!(up.step >= beta0);
            prop_assert!(up.lambda * plus <= lambda * star);
        }

        #[test]
        fn multiplier_inequality_is_exact_at_large_magnitudes(
            mantissa in -10.0f64..-0.1,
            exponent in 0i32..250,
            star in 0.2f64..0.5,
            plus in 0.01f64..0.2,
        ) {
            let lambda = mantissa * 10f64.powi(exponent);
            let up = update_lambda(lambda, star, plus, 1.0);
            prop_assert!(up.lambda * plus <= lambda * star);
        }
    }

    #[test]
    fn non_finite_energy_halts_the_run() {
        let space = channel(2);
        let inflow: Arc<InflowFn> = Arc::new(|p| [4.0 * p[1] * (1.0 - p[1]), 0.0]);
        let phi0 = ScalarFieldP1::constant(space.n_p1(), 0.5);
        let config = RunConfig {
            outer: 3,
            inner: 2,
            lambda0: -1e300,
            ..RunConfig::default()
        };
        let err =
            run_optimization(&space, Some(inflow.clone()), &phi0, config.clone()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Diverged {
                    outer: 0,
                    inner: 1,
                    ..
                }
            ),
            "{err}"
        );

        let record = RunConfig {
            policy: DecayPolicy::Record,
            ..config
        };
        let report = run_optimization(&space, Some(inflow), &phi0, record).unwrap();
        assert_eq!(report.diverged, Some((0, 1)));
        assert_eq!(report.outer_completed, 0);
        assert!(report.history.iter().all(|r| r.total.is_finite()));
    }

    fn channel(n: usize) -> FeSpace {
        let mesh = TriMesh::rectangle(n, n, 1.0, 1.0)
            .unwrap()
            .tag_boundaries(&[
                BoundaryRule::new(
                    EdgeRegion::Segment {
                        side: Side::Left,
                        from: 0.0,
                        to: 1.0,
                    },
                    BoundaryTag::Inflow,
                ),
                BoundaryRule::new(
                    EdgeRegion::Segment {
                        side: Side::Right,
                        from: 0.25,
                        to: 0.75,
                    },
                    BoundaryTag::Outflow,
                ),
                BoundaryRule::new(EdgeRegion::Any, BoundaryTag::Wall),
            ])
            .unwrap();
        FeSpace::new(mesh)
    }

    #[test]
    fn degenerate_run_keeps_uniform_state() {
        let space = channel(2);
        let beta = 0.4;
        let config = RunConfig {
            outer: 1,
            inner: 1,
            beta,
            ..RunConfig::default()
        };
        let phi0 = ScalarFieldP1::constant(space.n_p1(), beta);
        let report = run_optimization(&space, None, &phi0, config.clone()).unwrap();
        assert!(report.velocity.iter().all(|v| *v == 0.0));
        let first = report.phi[0];
        assert!(report.phi.iter().all(|v| (v - first).abs() < 1e-12));
        let expected = config.eta * double_well(beta) / config.eps;
        let initial = &report.history[0];
        assert!((initial.total - expected).abs() < 1e-12);
        assert_eq!(report.history.len(), 3);
        assert_eq!(initial.lambda, 0.0);
    }

    #[test]
    fn small_random_run_decays_at_every_stage() {
        let space = channel(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let phi0 = ScalarFieldP1((0..space.n_p1()).map(|_| rng.random::<f64>()).collect());
        let inflow: Arc<InflowFn> = Arc::new(|p| [4.0 * p[1] * (1.0 - p[1]), 0.0]);
        let config = RunConfig {
            outer: 2,
            inner: 1,
            policy: DecayPolicy::Record,
            ..RunConfig::default()
        };
        let report = run_optimization(&space, Some(inflow), &phi0, config).unwrap();
        assert!(report.violations.is_empty());
        assert_eq!(report.history.len(), 2 * 3);
        let stages: Vec<Stage> = report.history.iter().take(3).map(|r| r.stage).collect();
        assert_eq!(
            stages,
            [
                Stage::AfterStokes,
                Stage::AfterAllenCahn,
                Stage::AfterCutoff
            ]
        );
        for t in &report.transitions {
            assert!(t.after <= t.before + 1e-8 * t.before.abs(), "{t:?}");
        }
        for row in &report.history {
            let sum = row.dissipation + row.penalization + row.interface + row.volume_term();
            assert!((row.total - sum).abs() <= 1e-12 * row.total.abs().max(1.0));
        }
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let space = channel(3);
        let phi0 = ScalarFieldP1((0..space.n_p1()).map(|i| (i % 3) as f64 / 2.0).collect());
        let inflow: Arc<InflowFn> = Arc::new(|p| [4.0 * p[1] * (1.0 - p[1]), 0.0]);
        let config = RunConfig {
            outer: 3,
            inner: 2,
            ..RunConfig::default()
        };
        let a = run_optimization(&space, Some(inflow.clone()), &phi0, config.clone()).unwrap();
        let b = run_optimization(&space, Some(inflow), &phi0, config).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            RunConfig {
                outer: 0,
                ..RunConfig::default()
            },
            RunConfig {
                beta: 1.5,
                ..RunConfig::default()
            },
            RunConfig {
                beta0: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                stab: Some(0.0),
                ..RunConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let ok = RunConfig {
            stab: Some(0.0),
            allow_unstable: true,
            ..RunConfig::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn initial_field_out_of_range_is_rejected() {
        let space = channel(2);
        let phi0 = ScalarFieldP1::constant(space.n_p1(), 1.5);
        assert!(run_optimization(&space, None, &phi0, RunConfig::default()).is_err());
    }
}
