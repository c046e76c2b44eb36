use std::sync::Arc;

use flowshape::mesh::{BoundaryRule, BoundaryTag, EdgeRegion, Side};
use flowshape::stokes::{penalization_energy, InflowFn};
use flowshape::{solve_state, Coupling, FeSpace, ScalarFieldP1, TriMesh};

fn channel(nx: usize, ny: usize) -> FeSpace {
    let rules = [
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
                from: 0.0,
                to: 1.0,
            },
            BoundaryTag::Outflow,
        ),
        BoundaryRule::new(EdgeRegion::Any, BoundaryTag::Wall),
    ];
    FeSpace::new(
        TriMesh::rectangle(nx, ny, 1.0, 1.0)
            .unwrap()
            .tag_boundaries(&rules)
            .unwrap(),
    )
}

fn parabola() -> Arc<InflowFn> {
    Arc::new(|p| [4.0 * p[1] * (1.0 - p[1]), 0.0])
}

/// Flux of the horizontal velocity through `x = 1`; composite Simpson on
/// the P2 nodes is exact for piecewise quadratics.
fn outflow_flux(space: &FeSpace, u: &[f64]) -> f64 {
    let mut nodes: Vec<(f64, f64)> = space
        .p2()
        .coords()
        .iter()
        .enumerate()
        .filter(|(_, p)| (p[0] - 1.0).abs() < 1e-12)
        .map(|(d, p)| (p[1], u[d]))
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes
        .windows(3)
        .step_by(2)
        .map(|w| (w[2].0 - w[0].0) / 6.0 * (w[0].1 + 4.0 * w[1].1 + w[2].1))
        .sum()
}

#[test]
fn poiseuille_is_exact_on_several_meshes() {
    for (nx, ny) in [(1, 1), (3, 2), (5, 7)] {
        let space = channel(nx, ny);
        let phi = ScalarFieldP1::constant(space.n_p1(), 1.0);
        let sol = solve_state(&space, &phi, Some(parabola()), 1e4, Coupling::Nodal).unwrap();
        let n2 = space.n_p2();
        for (d, p) in space.p2().coords().iter().enumerate() {
            assert!(
                (sol.velocity[d] - 4.0 * p[1] * (1.0 - p[1])).abs() < 1e-10,
                "{nx}x{ny} at {p:?}"
            );
            assert!(sol.velocity[n2 + d].abs() < 1e-10);
        }
        for (v, p) in space.mesh().vertices().iter().enumerate() {
            assert!(
                (sol.pressure[v] - 8.0 * (1.0 - p[0])).abs() < 1e-8,
                "{nx}x{ny} pressure at {p:?}"
            );
        }
        assert!(sol.divergence_residual < 1e-10);
    }
}

#[test]
fn obstacle_conserves_flux() {
    // Constants lie in the pressure space, so the discrete flow is exactly
    // mass-conserving even around a penalized block.
    let space = channel(12, 12);
    let phi = ScalarFieldP1(
        space
            .mesh()
            .vertices()
            .iter()
            .map(|p| {
                if (0.4..=0.6).contains(&p[0]) && (0.2..=0.7).contains(&p[1]) {
                    0.0
                } else {
                    1.0
                }
            })
            .collect(),
    );
    for coupling in [Coupling::Nodal, Coupling::Quadrature] {
        let sol = solve_state(&space, &phi, Some(parabola()), 1e4, coupling).unwrap();
        let flux = outflow_flux(&space, &sol.velocity);
        assert!((flux - 2.0 / 3.0).abs() < 1e-9, "{coupling:?}: flux {flux}");
    }
}

#[test]
fn penalized_flow_decreases_with_alpha0() {
    // Minimizers of E_a(u) = 1/2 |grad u|^2 + a/2 (w u, u) over the same
    // affine space satisfy (w u_a2, u_a2) <= (w u_a1, u_a1) for a2 > a1.
    let space = channel(12, 12);
    let inside = |p: &[f64; 2]| (0.4..=0.6).contains(&p[0]) && (0.2..=0.7).contains(&p[1]);
    let phi = ScalarFieldP1(
        space
            .mesh()
            .vertices()
            .iter()
            .map(|p| if inside(p) { 0.0 } else { 1.0 })
            .collect(),
    );
    for coupling in [Coupling::Nodal, Coupling::Quadrature] {
        let mut last = f64::INFINITY;
        for alpha0 in [1e1, 1e2, 1e3, 1e4, 1e5] {
            let sol = solve_state(&space, &phi, Some(parabola()), alpha0, coupling).unwrap();
            let weighted =
                penalization_energy(&space, &sol.velocity, &phi, alpha0, coupling) / alpha0;
            assert!(
                weighted <= last * (1.0 + 1e-10),
                "{coupling:?}, alpha0 {alpha0}: {weighted} after {last}"
            );
            last = weighted;
        }
        assert!(last < 1e-4, "{coupling:?}: {last}");
    }
}
