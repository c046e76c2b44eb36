use super::quadrature::QuadratureRule;
use crate::mesh::{BoundaryTag, Point, TriMesh};

/// Linear Lagrange dofs: one per vertex.
#[derive(Debug, Clone)]
pub struct DofMapP1 {
    n_dofs: usize,
    boundary: [Vec<usize>; 3],
}

impl DofMapP1 {
    pub fn new(mesh: &TriMesh) -> Self {
        Self {
            n_dofs: mesh.n_vertices(),
            boundary: BoundaryTag::ALL.map(|tag| mesh.boundary_vertices(tag)),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Vertices on edges tagged `tag`. A corner vertex belongs to every
    /// tag its two edges carry.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary[tag_slot(tag)]
    }
}

/// Quadratic Lagrange dofs per component: vertices first, then edge midpoints.
#[derive(Debug, Clone)]
pub struct DofMapP2 {
    n_vertices: usize,
    coords: Vec<Point>,
    boundary: [Vec<usize>; 3],
}

impl DofMapP2 {
    pub fn new(mesh: &TriMesh) -> Self {
        let n_vertices = mesh.n_vertices();
        let mut coords = mesh.vertices().to_vec();
        coords.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e)));
        let boundary = BoundaryTag::ALL.map(|tag| {
            let mut dofs: Vec<usize> = mesh
                .boundary_edges()
                .iter()
                .filter(|b| b.tag == tag)
                .flat_map(|b| [b.vertices[0], b.vertices[1], n_vertices + b.edge])
                .collect();
            dofs.sort_unstable();
            dofs.dedup();
            dofs
        });
        Self {
            n_vertices,
            coords,
            boundary,
        }
    }

    /// Scalar dofs per velocity component.
    pub fn n_scalar(&self) -> usize {
        self.coords.len()
    }

    /// Dofs of the two-component field.
    pub fn n_total(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn n_vertex_dofs(&self) -> usize {
        self.n_vertices
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary[tag_slot(tag)]
    }
}

fn tag_slot(tag: BoundaryTag) -> usize {
    match tag {
        BoundaryTag::Inflow => 0,
        BoundaryTag::Wall => 1,
        BoundaryTag::Outflow => 2,
    }
}

/// Mesh, dof maps and quadrature bundled for assembly.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: TriMesh,
    p1: DofMapP1,
    p2: DofMapP2,
    rule: QuadratureRule,
    /// Constant barycentric gradients per element.
    bary_grads: Vec<[[f64; 2]; 3]>,
}

impl FeSpace {
    pub fn new(mesh: TriMesh) -> Self {
        Self::with_rule(mesh, QuadratureRule::default())
    }

    pub fn with_rule(mesh: TriMesh, rule: QuadratureRule) -> Self {
        let bary_grads = (0..mesh.n_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
                let two_area = 2.0 * mesh.element_areas()[t];
                [
                    [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
                    [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
                    [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
                ]
            })
            .collect();
        Self {
            p1: DofMapP1::new(&mesh),
            p2: DofMapP2::new(&mesh),
            mesh,
            rule,
            bary_grads,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn p1(&self) -> &DofMapP1 {
        &self.p1
    }

    pub fn p2(&self) -> &DofMapP2 {
        &self.p2
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn n_p1(&self) -> usize {
        self.p1.n_dofs()
    }

    pub fn n_p2(&self) -> usize {
        self.p2.n_scalar()
    }

    pub fn bary_grads(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.bary_grads[t]
    }

    /// Scalar P2 dofs of element `t`: three vertices then the three edges,
    /// edge `k` opposite local vertex `k`.
    pub fn p2_element_dofs(&self, t: usize) -> [usize; 6] {
        let v = self.mesh.triangles()[t];
        let e = self.mesh.triangle_edges()[t];
        let nv = self.p2.n_vertex_dofs();
        [v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Physical weight of quadrature point `q` on element `t`.
    pub fn quad_weight(&self, t: usize, q: usize) -> f64 {
        2.0 * self.mesh.element_areas()[t] * self.rule.weights()[q]
    }

    /// Gradients of the six P2 basis functions on element `t` at `bary`.
    pub fn p2_grads(&self, t: usize, bary: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.bary_grads[t];
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * bary[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            out[3 + k] = [
                4.0 * (bary[a] * g[b][0] + bary[b] * g[a][0]),
                4.0 * (bary[a] * g[b][1] + bary[b] * g[a][1]),
            ];
        }
        out
    }

    /// Value of a P1 field at every quadrature point, element-major.
    pub fn p1_at_quadrature(&self, phi: &[f64]) -> Vec<f64> {
        let nq = self.rule.len();
        let mut out = Vec::with_capacity(self.mesh.n_triangles() * nq);
        for tri in self.mesh.triangles() {
            for p in self.rule.points() {
                out.push(p[0] * phi[tri[0]] + p[1] * phi[tri[1]] + p[2] * phi[tri[2]]);
            }
        }
        out
    }

    /// `|u|^2` of a P2 vector field at every quadrature point, element-major.
    pub fn speed_squared_at_quadrature(&self, u: &[f64]) -> Vec<f64> {
        let n2 = self.n_p2();
        let nq = self.rule.len();
        let basis: Vec<[f64; 6]> = self.rule.points().iter().map(p2_values).collect();
        let mut out = Vec::with_capacity(self.mesh.n_triangles() * nq);
        for t in 0..self.mesh.n_triangles() {
            let dofs = self.p2_element_dofs(t);
            for n in &basis {
                let mut ux = 0.0;
                let mut uy = 0.0;
                for (k, &d) in dofs.iter().enumerate() {
                    ux += n[k] * u[d];
                    uy += n[k] * u[n2 + d];
                }
                out.push(ux * ux + uy * uy);
            }
        }
        out
    }
}

/// P2 basis values at barycentric `bary`, ordered as [`FeSpace::p2_element_dofs`].
pub fn p2_values(bary: &[f64; 3]) -> [f64; 6] {
    let l = bary;
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        let mesh = TriMesh::rectangle(3, 2, 1.0, 1.0).unwrap();
        let space = FeSpace::new(mesh.clone());
        assert_eq!(space.n_p1(), mesh.n_vertices());
        assert_eq!(space.n_p2(), mesh.n_vertices() + mesh.n_edges());
        // Structured P2 grid: (2nx+1)(2ny+1) nodes.
        assert_eq!(space.n_p2(), 7 * 5);
    }

    #[test]
    fn p2_basis_partition_of_unity_and_nodality() {
        let pts = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        for (i, p) in pts.iter().enumerate() {
            let v = p2_values(p);
            for (j, vj) in v.iter().enumerate() {
                assert_eq!(*vj, if i == j { 1.0 } else { 0.0 });
            }
        }
        let s: f64 = p2_values(&[0.2, 0.3, 0.5]).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn p2_dof_coordinates_match_element_nodes() {
        let mesh = TriMesh::rectangle(2, 2, 1.0, 1.0).unwrap();
        let space = FeSpace::new(mesh);
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        for t in 0..space.mesh().n_triangles() {
            for (k, d) in space.p2_element_dofs(t).into_iter().enumerate() {
                let p = space.mesh().map_point(t, &nodes[k]);
                assert_eq!(p, space.p2().coords()[d]);
            }
        }
    }
}
