//! Dense reference assembly built from scratch: collapsed Gauss–Legendre
//! quadrature on each triangle and a P2 basis obtained by inverting the
//! monomial Vandermonde matrix in physical coordinates.

#![allow(dead_code)]

use flowshape::mesh::Point;
use flowshape::{FeSpace, TriMesh};
use nalgebra::{DMatrix, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out
}

/// Points `(xi, eta)` and weights on the reference triangle, exact for
/// polynomials of degree `2n - 2`.
pub fn triangle_rule(n: usize) -> Vec<([f64; 2], f64)> {
    let gl = gauss_legendre(n);
    let mut out = Vec::new();
    for &(s, ws) in &gl {
        for &(t, wt) in &gl {
            out.push(([s, t * (1.0 - s)], ws * wt * (1.0 - s)));
        }
    }
    out
}

pub struct Element {
    pub v: [Point; 3],
    pub det: f64,
    /// Monomial coefficients of the six P2 basis functions in element dof order.
    pub p2: Matrix6<f64>,
}

fn monomials(p: Point) -> Vector6<f64> {
    Vector6::new(1.0, p[0], p[1], p[0] * p[0], p[0] * p[1], p[1] * p[1])
}

impl Element {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let v = mesh.triangles()[t].map(|i| mesh.vertices()[i]);
        let det =
            (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let nodes = [
            v[0],
            v[1],
            v[2],
            mid(v[1], v[2]),
            mid(v[2], v[0]),
            mid(v[0], v[1]),
        ];
        let mut vand = Matrix6::zeros();
        for (r, p) in nodes.iter().enumerate() {
            vand.set_row(r, &monomials(*p).transpose());
        }
        let p2 = vand.try_inverse().expect("P2 nodes are unisolvent");
        Self { v, det, p2 }
    }

    pub fn point(&self, xi: [f64; 2]) -> Point {
        let v = &self.v;
        [
            v[0][0] + xi[0] * (v[1][0] - v[0][0]) + xi[1] * (v[2][0] - v[0][0]),
            v[0][1] + xi[0] * (v[1][1] - v[0][1]) + xi[1] * (v[2][1] - v[0][1]),
        ]
    }

    pub fn p1(&self, xi: [f64; 2]) -> [f64; 3] {
        [1.0 - xi[0] - xi[1], xi[0], xi[1]]
    }

    pub fn p1_grads(&self) -> [[f64; 2]; 3] {
        let v = &self.v;
        let d = self.det;
        [
            [(v[1][1] - v[2][1]) / d, (v[2][0] - v[1][0]) / d],
            [(v[2][1] - v[0][1]) / d, (v[0][0] - v[2][0]) / d],
            [(v[0][1] - v[1][1]) / d, (v[1][0] - v[0][0]) / d],
        ]
    }

    pub fn p2(&self, p: Point) -> [f64; 6] {
        let m = monomials(p);
        std::array::from_fn(|k| self.p2.column(k).dot(&m))
    }

    pub fn p2_grads(&self, p: Point) -> [[f64; 2]; 6] {
        let dx = Vector6::new(0.0, 1.0, 0.0, 2.0 * p[0], p[1], 0.0);
        let dy = Vector6::new(0.0, 0.0, 1.0, 0.0, p[0], 2.0 * p[1]);
        std::array::from_fn(|k| [self.p2.column(k).dot(&dx), self.p2.column(k).dot(&dy)])
    }
}

pub const ORDER: usize = 8;

/// The six operator types, assembled densely.
pub struct Reference {
    pub p1_mass: DMatrix<f64>,
    pub p1_stiffness: DMatrix<f64>,
    pub p1_weighted_mass: DMatrix<f64>,
    pub p2_stiffness: DMatrix<f64>,
    pub p2_weighted_mass: DMatrix<f64>,
    pub divergence: DMatrix<f64>,
}

/// `p1_weight` and `p2_weight` receive the element, its barycentric
/// coordinates and the physical point.
pub fn reference_operators(
    space: &FeSpace,
    p1_weight: &dyn Fn(usize, [f64; 3], Point) -> f64,
    p2_weight: &dyn Fn(usize, [f64; 3], Point) -> f64,
) -> Reference {
    let mesh = space.mesh();
    let n1 = space.n_p1();
    let n2 = space.n_p2();
    let rule = triangle_rule(ORDER);
    let mut r = Reference {
        p1_mass: DMatrix::zeros(n1, n1),
        p1_stiffness: DMatrix::zeros(n1, n1),
        p1_weighted_mass: DMatrix::zeros(n1, n1),
        p2_stiffness: DMatrix::zeros(2 * n2, 2 * n2),
        p2_weighted_mass: DMatrix::zeros(2 * n2, 2 * n2),
        divergence: DMatrix::zeros(n1, 2 * n2),
    };
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let vdofs = mesh.triangles()[t];
        let edofs = space.p2_element_dofs(t);
        let g1 = el.p1_grads();
        for &(xi, w) in &rule {
            let w = w * el.det.abs();
            let x = el.point(xi);
            let l = el.p1(xi);
            let n = el.p2(x);
            let dn = el.p2_grads(x);
            let w1 = p1_weight(t, l, x);
            let w2 = p2_weight(t, l, x);
            for i in 0..3 {
                for j in 0..3 {
                    r.p1_mass[(vdofs[i], vdofs[j])] += w * l[i] * l[j];
                    r.p1_stiffness[(vdofs[i], vdofs[j])] +=
                        w * (g1[i][0] * g1[j][0] + g1[i][1] * g1[j][1]);
                    r.p1_weighted_mass[(vdofs[i], vdofs[j])] += w * w1 * l[i] * l[j];
                }
                for j in 0..6 {
                    for (c, d) in dn[j].iter().enumerate() {
                        r.divergence[(vdofs[i], c * n2 + edofs[j])] += w * l[i] * d;
                    }
                }
            }
            for i in 0..6 {
                for j in 0..6 {
                    let k = w * (dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1]);
                    let m = w * w2 * n[i] * n[j];
                    for c in 0..2 {
                        r.p2_stiffness[(c * n2 + edofs[i], c * n2 + edofs[j])] += k;
                        r.p2_weighted_mass[(c * n2 + edofs[i], c * n2 + edofs[j])] += m;
                    }
                }
            }
        }
    }
    r
}

/// Largest entrywise difference between a sparse operator and its reference.
pub fn max_deviation(a: &flowshape::linalg::CsrMatrix, b: &DMatrix<f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let dense = a.to_dense();
    let mut worst: f64 = 0.0;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            worst = worst.max((dense[i][j] - b[(i, j)]).abs());
        }
    }
    worst
}

/// Seeded uniform samples in `[0, 1)` for test fields.
pub fn sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub struct OracleCheck {
    pub mesh: String,
    pub deviations: [(&'static str, f64); 6],
}

/// Compares all six library operators against the reference on `mesh`.
/// The P1 weight is `|u_h|^2` and the P2 weight `alpha0 (1 - phi_h)^2`
/// for sampled fields.
pub fn compare_operators(mesh: TriMesh, label: &str, seed: u64) -> OracleCheck {
    use flowshape::fem::*;
    let space = FeSpace::new(mesh);
    let n2 = space.n_p2();
    let phi = sample(space.n_p1(), seed);
    let u: Vec<f64> = sample(2 * n2, seed + 1)
        .iter()
        .map(|v| 2.0 * v - 1.0)
        .collect();
    let alpha0 = 3.0;

    let nq = space.rule().len();
    let phi_q = space.p1_at_quadrature(&phi);
    let speed_q = space.speed_squared_at_quadrature(&u);

    let mesh = space.mesh();
    let speed_ref = |t: usize, _l: [f64; 3], x: Point| {
        let el = Element::new(mesh, t);
        let n = el.p2(x);
        let dofs = space.p2_element_dofs(t);
        let ux: f64 = (0..6).map(|k| n[k] * u[dofs[k]]).sum();
        let uy: f64 = (0..6).map(|k| n[k] * u[n2 + dofs[k]]).sum();
        ux * ux + uy * uy
    };
    let alpha_ref = |t: usize, l: [f64; 3], _x: Point| {
        let tri = mesh.triangles()[t];
        let v = l[0] * phi[tri[0]] + l[1] * phi[tri[1]] + l[2] * phi[tri[2]];
        alpha0 * (1.0 - v) * (1.0 - v)
    };
    let r = reference_operators(&space, &speed_ref, &alpha_ref);

    let w1 = assemble_weighted_p1_mass(&space, |t, q| speed_q[t * nq + q]).unwrap();
    let w2 = assemble_weighted_p2_vector_mass(&space, |t, q| {
        let v = phi_q[t * nq + q];
        alpha0 * (1.0 - v) * (1.0 - v)
    })
    .unwrap();
    OracleCheck {
        mesh: label.to_string(),
        deviations: [
            (
                "P1 mass",
                max_deviation(&assemble_p1_mass(&space), &r.p1_mass),
            ),
            (
                "P1 stiffness",
                max_deviation(&assemble_p1_stiffness(&space), &r.p1_stiffness),
            ),
            (
                "P1 mass weighted by |u|^2",
                max_deviation(&w1, &r.p1_weighted_mass),
            ),
            (
                "P2 vector stiffness",
                max_deviation(&assemble_p2_vector_stiffness(&space), &r.p2_stiffness),
            ),
            (
                "P2 vector mass weighted by alpha",
                max_deviation(&w2, &r.p2_weighted_mass),
            ),
            (
                "divergence",
                max_deviation(&assemble_divergence(&space), &r.divergence),
            ),
        ],
    }
}

/// Meshes used for the operator comparison: structured rectangles up to
/// 4 x 4 cells plus a small unstructured patch.
pub fn oracle_meshes() -> Vec<(String, TriMesh)> {
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push((
            format!("{n}x{n} unit square"),
            TriMesh::rectangle(n, n, 1.0, 1.0).unwrap(),
        ));
    }
    out.push((
        "3x2 on 1.5 x 1".into(),
        TriMesh::rectangle(3, 2, 1.5, 1.0).unwrap(),
    ));
    out.push((
        "2x4 on 1 x 1.5".into(),
        TriMesh::rectangle(2, 4, 1.0, 1.5).unwrap(),
    ));
    let verts = vec![[0.2, 0.0], [1.2, 0.0], [0.5, 0.8], [1.4, 1.1], [0.0, 1.0]];
    let tris = vec![[0, 1, 2], [1, 3, 2], [0, 2, 4]];
    out.push((
        "unstructured patch".into(),
        TriMesh::from_triangles(verts, tris).unwrap(),
    ));
    out
}
