//! Built-in benchmark geometries.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{FeSpace, ScalarFieldP1};
use crate::mesh::{BoundaryRule, BoundaryTag, EdgeRegion, Point, Side, TriMesh};
use crate::phasefield::PhaseOperators;
use crate::stokes::InflowFn;

/// A tagged stretch of one side of the domain. Inflow ports carry a
/// parabolic normal profile with maximum `peak` at the port centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port {
    pub tag: BoundaryTag,
    pub side: Side,
    pub from: f64,
    pub to: f64,
    pub peak: f64,
}

impl Port {
    pub fn inflow(side: Side, from: f64, to: f64, peak: f64) -> Self {
        Self {
            tag: BoundaryTag::Inflow,
            side,
            from,
            to,
            peak,
        }
    }

    pub fn outflow(side: Side, from: f64, to: f64) -> Self {
        Self {
            tag: BoundaryTag::Outflow,
            side,
            from,
            to,
            peak: 0.0,
        }
    }

    /// Speed `peak * 4 t (1 - t)` at tangential coordinate `s`, zero outside the port.
    pub fn profile(&self, s: f64) -> f64 {
        let t = (s - self.from) / (self.to - self.from);
        if (0.0..=1.0).contains(&t) {
            self.peak * 4.0 * t * (1.0 - t)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Circle { center: Point, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        const TOL: f64 = 1e-12;
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                p[0] >= x0 - TOL && p[0] <= x1 + TOL && p[1] >= y0 - TOL && p[1] <= y1 + TOL
            }
            Region::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius + TOL
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhase {
    /// `background` everywhere, overwritten by each region's value in order.
    Indicator {
        background: f64,
        regions: Vec<(Region, f64)>,
    },
    /// Uniform random nodal values rescaled to the target volume.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub name: String,
    pub width: f64,
    pub height: f64,
    /// Ports are matched before the remaining boundary becomes wall.
    pub ports: Vec<Port>,
    pub beta: f64,
    pub initial: InitialPhase,
    pub nx: usize,
    pub ny: usize,
}

pub const CASE_NAMES: [&str; 4] = ["diffuser", "rugby", "pipe_bend", "bypass"];

/// Looks up a built-in case; `-` and `_` are interchangeable.
pub fn case_by_name(name: &str) -> Result<CaseSpec> {
    match name.to_ascii_lowercase().replace('-', "_").as_str() {
        "diffuser" => Ok(case_diffuser()),
        "rugby" => Ok(case_rugby()),
        "pipe_bend" | "pipebend" => Ok(case_pipe_bend()),
        "bypass" => Ok(case_bypass()),
        _ => Err(Error::Config(format!(
            "unknown case '{name}' (available: {})",
            CASE_NAMES.join(", ")
        ))),
    }
}

/// Unit square, full parabolic inlet on the left, outlet in the middle
/// third of the right side.
pub fn case_diffuser() -> CaseSpec {
    let third = 1.0 / 3.0;
    CaseSpec {
        name: "diffuser".into(),
        width: 1.0,
        height: 1.0,
        ports: vec![
            Port::inflow(Side::Left, 0.0, 1.0, 1.0),
            Port::outflow(Side::Right, third, 2.0 * third),
        ],
        beta: 0.5,
        initial: InitialPhase::Indicator {
            background: 0.0,
            regions: vec![
                (
                    Region::Rect {
                        x0: 0.0,
                        x1: 0.25,
                        y0: 0.0,
                        y1: 1.0,
                    },
                    1.0,
                ),
                (
                    Region::Rect {
                        x0: 0.0,
                        x1: 1.0,
                        y0: third,
                        y1: 2.0 * third,
                    },
                    1.0,
                ),
            ],
        },
        nx: 64,
        ny: 64,
    }
}

/// Flow past a square obstacle in `[0, 1] x [0, 1.5]`, bottom to top.
pub fn case_rugby() -> CaseSpec {
    CaseSpec {
        name: "rugby".into(),
        width: 1.0,
        height: 1.5,
        ports: vec![
            Port::inflow(Side::Bottom, 0.0, 1.0, 1.0),
            Port::outflow(Side::Top, 0.0, 1.0),
        ],
        beta: 0.1189,
        initial: InitialPhase::Indicator {
            background: 1.0,
            regions: vec![(
                Region::Rect {
                    x0: 0.3,
                    x1: 0.7,
                    y0: 0.2,
                    y1: 0.6,
                },
                0.0,
            )],
        },
        nx: 48,
        ny: 72,
    }
}

/// Unit square with an inlet high on the left and an outlet on the right
/// of the bottom side, initialised with sixteen circular holes.
pub fn case_pipe_bend() -> CaseSpec {
    let mut regions = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let center = [0.125 + 0.25 * i as f64, 0.125 + 0.25 * j as f64];
            regions.push((
                Region::Circle {
                    center,
                    radius: 0.12,
                },
                0.0,
            ));
        }
    }
    CaseSpec {
        name: "pipe_bend".into(),
        width: 1.0,
        height: 1.0,
        ports: vec![
            Port::inflow(Side::Left, 0.7, 0.9, 1.0),
            Port::outflow(Side::Bottom, 0.7, 0.9),
        ],
        beta: 0.2762,
        initial: InitialPhase::Indicator {
            background: 1.0,
            regions,
        },
        nx: 64,
        ny: 64,
    }
}

/// Two inlets on the left and two outlets on the right of a 1.5 x 1 box,
/// started from a random field.
pub fn case_bypass() -> CaseSpec {
    CaseSpec {
        name: "bypass".into(),
        width: 1.5,
        height: 1.0,
        ports: vec![
            Port::inflow(Side::Left, 0.1, 0.3, 1.0),
            Port::inflow(Side::Left, 0.7, 0.9, 1.0),
            Port::outflow(Side::Right, 0.1, 0.3),
            Port::outflow(Side::Right, 0.7, 0.9),
        ],
        beta: 0.2777,
        initial: InitialPhase::Random { seed: 42 },
        nx: 96,
        ny: 64,
    }
}

impl CaseSpec {
    /// Domain area.
    pub fn v0(&self) -> f64 {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        for port in &self.ports {
            let len = match port.side {
                Side::Left | Side::Right => self.height,
                Side::Bottom | Side::Top => self.width,
            };
            if !(0.0 <= port.from && port.from < port.to && port.to <= len) {
                return Err(Error::Config(format!(
                    "port [{}, {}] does not fit on the {:?} side",
                    port.from, port.to, port.side
                )));
            }
        }
        if let InitialPhase::Indicator {
            background,
            regions,
        } = &self.initial
        {
            let bad = std::iter::once(*background)
                .chain(regions.iter().map(|r| r.1))
                .any(|v| !(0.0..=1.0).contains(&v));
            if bad {
                return Err(Error::Config(
                    "initial indicator values must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Tagged mesh with `nx` x `ny` cells.
    pub fn mesh(&self, nx: usize, ny: usize) -> Result<TriMesh> {
        self.validate()?;
        let mut rules: Vec<BoundaryRule> = self
            .ports
            .iter()
            .map(|p| {
                BoundaryRule::new(
                    EdgeRegion::Segment {
                        side: p.side,
                        from: p.from,
                        to: p.to,
                    },
                    p.tag,
                )
            })
            .collect();
        rules.push(BoundaryRule::new(EdgeRegion::Any, BoundaryTag::Wall));
        TriMesh::rectangle(nx, ny, self.width, self.height)?.tag_boundaries(&rules)
    }

    fn on_side(&self, side: Side, p: Point) -> bool {
        let tol = 1e-12 * self.width.max(self.height);
        match side {
            Side::Left => p[0].abs() <= tol,
            Side::Right => (p[0] - self.width).abs() <= tol,
            Side::Bottom => p[1].abs() <= tol,
            Side::Top => (p[1] - self.height).abs() <= tol,
        }
    }

    /// Velocity on the inflow ports.
    pub fn inflow_velocity(&self, p: Point) -> [f64; 2] {
        for port in self.ports.iter().filter(|p| p.tag == BoundaryTag::Inflow) {
            if self.on_side(port.side, p) {
                let s = port.side.tangential(p);
                let speed = port.profile(s);
                if speed != 0.0 {
                    let n = port.side.inward_normal();
                    return [speed * n[0], speed * n[1]];
                }
            }
        }
        [0.0, 0.0]
    }

    pub fn inflow(&self) -> Option<Arc<InflowFn>> {
        if !self.ports.iter().any(|p| p.tag == BoundaryTag::Inflow) {
            return None;
        }
        let spec = self.clone();
        Some(Arc::new(move |p| spec.inflow_velocity(p)))
    }

    /// Nodal initial phase field on `space`.
    pub fn initial_phase(&self, space: &FeSpace) -> ScalarFieldP1 {
        let verts = space.mesh().vertices();
        match &self.initial {
            InitialPhase::Indicator {
                background,
                regions,
            } => ScalarFieldP1(
                verts
                    .iter()
                    .map(|&p| {
                        regions
                            .iter()
                            .rev()
                            .find(|(r, _)| r.contains(p))
                            .map_or(*background, |r| r.1)
                    })
                    .collect(),
            ),
            InitialPhase::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let raw: Vec<f64> = (0..verts.len()).map(|_| rng.random::<f64>()).collect();
                let ops = PhaseOperators::new(space);
                let scale = self.beta * self.v0() / ops.volume(&raw);
                ScalarFieldP1(
                    raw.into_iter()
                        .map(|v| (v * scale).clamp(0.0, 1.0))
                        .collect(),
                )
            }
        }
    }
}
