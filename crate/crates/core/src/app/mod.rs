//! Benchmark cases, settings and file output shared by the command line tool.

mod cases;
mod config;
mod output;

use std::path::{Path, PathBuf};

use log::info;

pub use cases::{
    case_by_name, case_bypass, case_diffuser, case_pipe_bend, case_rugby, CaseSpec, InitialPhase,
    Port, Region, CASE_NAMES,
};
pub use config::Settings;
pub use output::{write_history_csv, write_vtk, HISTORY_HEADER};

use crate::error::{Error, Result};
use crate::fem::{velocity_at_vertices, FeSpace, ScalarFieldP1, VectorFieldP2};
use crate::mesh::TriMesh;
use crate::optimizer::{EnergyBreakdown, Observer, Optimizer, RunReport};
use crate::stokes::StateSolution;

/// Exit status for a failed run: 2 for bad input, 3 for solver failures,
/// 4 when an energy check fails.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::EnergyIncrease(_) => 4,
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::UntaggedEdge { .. }
        | Error::Io { .. } => 2,
        _ => 3,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub case: CaseSpec,
    pub mesh: TriMesh,
    pub report: RunReport,
    pub history_path: PathBuf,
    pub vtk_paths: Vec<PathBuf>,
}

struct FileObserver<'a> {
    space: &'a FeSpace,
    out_dir: &'a Path,
    every: usize,
    rows: Vec<EnergyBreakdown>,
    written: Vec<PathBuf>,
}

impl Observer for FileObserver<'_> {
    fn stage(&mut self, row: &EnergyBreakdown) -> Result<()> {
        self.rows.push(row.clone());
        Ok(())
    }

    fn outer_done(
        &mut self,
        outer: usize,
        phi: &ScalarFieldP1,
        state: &StateSolution,
    ) -> Result<()> {
        if self.every > 0 && (outer + 1).is_multiple_of(self.every) {
            let path = self.out_dir.join(format!("field_{:04}.vtk", outer + 1));
            write_fields(
                self.space,
                phi,
                Some(&state.velocity),
                Some(&state.pressure),
                &path,
            )?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn write_fields(
    space: &FeSpace,
    phi: &[f64],
    velocity: Option<&VectorFieldP2>,
    pressure: Option<&[f64]>,
    path: &Path,
) -> Result<()> {
    let n = space.n_p1();
    let u = match velocity {
        Some(u) if !u.is_empty() => velocity_at_vertices(space, u)?,
        _ => vec![[0.0, 0.0]; n],
    };
    let zeros = vec![0.0; n];
    let p = match pressure {
        Some(p) if !p.is_empty() => p,
        _ => &zeros,
    };
    write_vtk(space.mesh(), phi, &u, p, path)
}

/// Resolves the case, runs it and writes `history.csv` plus VTK fields into
/// the output directory. On an energy-check failure the fields on both
/// sides of the failed stage are written as `violation_before.vtk` and
/// `violation_after.vtk` before the error is returned.
pub fn execute(settings: &Settings) -> Result<RunOutcome> {
    let mut case = case_by_name(&settings.case)?;
    if let Some(beta) = settings.beta {
        case.beta = beta;
    }
    if let Some(seed) = settings.seed {
        if let InitialPhase::Random { seed: s } = &mut case.initial {
            *s = seed;
        }
    }
    let nx = settings.nx.unwrap_or(case.nx);
    let ny = settings.ny.unwrap_or(case.ny);
    let mut config = settings.run.clone();
    config.beta = case.beta;

    let mesh = case.mesh(nx, ny)?;
    let space = FeSpace::new(mesh.clone());
    let phi0 = case.initial_phase(&space);
    let optimizer = Optimizer::new(&space, case.inflow(), config)?;

    let out_dir = settings.out_dir.as_path();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    info!(
        "case {} on {nx} x {ny} cells, beta = {}, output in {}",
        case.name,
        case.beta,
        out_dir.display()
    );

    let mut observer = FileObserver {
        space: &space,
        out_dir,
        every: settings.vtk_every,
        rows: Vec::new(),
        written: Vec::new(),
    };
    let result = optimizer.run_with(&phi0, &mut observer);
    let history_path = out_dir.join("history.csv");
    write_history_csv(&observer.rows, &history_path)?;

    let report = match result {
        Ok(report) => report,
        Err(err) => {
            if let Error::EnergyIncrease(v) = err.root() {
                let before = out_dir.join("violation_before.vtk");
                let after = out_dir.join("violation_after.vtk");
                write_fields(&space, &v.phi_before, v.velocity.as_ref(), None, &before)?;
                write_fields(&space, &v.phi_after, v.velocity.as_ref(), None, &after)?;
            }
            return Err(err);
        }
    };

    let mut vtk_paths = observer.written;
    let last = out_dir.join("field_final.vtk");
    write_fields(
        &space,
        &report.phi,
        Some(&report.velocity),
        Some(&report.pressure),
        &last,
    )?;
    vtk_paths.push(last);

    Ok(RunOutcome {
        case,
        mesh,
        report,
        history_path,
        vtk_paths,
    })
}
