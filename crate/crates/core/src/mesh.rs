//! Structured triangular meshes of rectangular design domains.
//!
//! Every rectangular cell is split along its bottom-left to top-right
//! diagonal into two right triangles whose legs are parallel to the axes.
//! Local vertex 0 of each triangle sits at the right angle, so the affine
//! map from the reference triangle `(0,0),(1,0),(0,1)` has orthogonal
//! columns and the element gradient norm carries no cross term.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary segment classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Inflow,
    Wall,
    Outflow,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] =
        [BoundaryTag::Inflow, BoundaryTag::Wall, BoundaryTag::Outflow];
}

/// A boundary edge: global edge index, its endpoints and its tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Side of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Unit normal pointing into the domain.
    pub fn inward_normal(self) -> Point {
        match self {
            Side::Left => [1.0, 0.0],
            Side::Right => [-1.0, 0.0],
            Side::Bottom => [0.0, 1.0],
            Side::Top => [0.0, -1.0],
        }
    }

    /// Coordinate that varies along this side.
    pub fn tangential(self, p: Point) -> f64 {
        match self {
            Side::Left | Side::Right => p[1],
            Side::Bottom | Side::Top => p[0],
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }
}

/// Region of the boundary selected by a tagging rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRegion {
    /// Matches every boundary edge.
    Any,
    /// Edges on `side` whose midpoint's tangential coordinate lies in `[from, to]`.
    Segment { side: Side, from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRule {
    pub region: EdgeRegion,
    pub tag: BoundaryTag,
}

impl BoundaryRule {
    pub fn new(region: EdgeRegion, tag: BoundaryTag) -> Self {
        Self { region, tag }
    }
}

/// Conforming triangulation with cached geometry.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    /// Edge `k` of a triangle is opposite its local vertex `k`.
    triangle_edges: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    boundary_edges: Vec<BoundaryEdge>,
    areas: Vec<f64>,
    jacobians: Vec<[[f64; 2]; 2]>,
    width: f64,
    height: f64,
}

impl TriMesh {
    /// Structured `nx` x `ny` mesh of `[0, width] x [0, height]`. All
    /// boundary edges start out tagged [`BoundaryTag::Wall`].
    pub fn rectangle(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "cell counts must be positive, got {nx} x {ny}"
            )));
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "domain dimensions must be positive, got {width} x {height}"
            )));
        }

        let hx = width / nx as f64;
        let hy = height / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            // Pin the last row/column to the exact extent.
            let y = if j == ny { height } else { j as f64 * hy };
            for i in 0..=nx {
                let x = if i == nx { width } else { i as f64 * hx };
                vertices.push([x, y]);
            }
        }

        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p00 = id(i, j);
                let p10 = id(i + 1, j);
                let p11 = id(i + 1, j + 1);
                let p01 = id(i, j + 1);
                // Right angle first, counter-clockwise.
                triangles.push([p10, p11, p00]);
                triangles.push([p01, p00, p11]);
            }
        }

        Self::from_parts(vertices, triangles, width, height)
    }

    /// General triangulation from vertex coordinates and counter-clockwise
    /// triangles. Boundary edges start out tagged [`BoundaryTag::Wall`];
    /// segment rules refer to the bounding box anchored at the origin.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.iter().any(|p| p[0] < 0.0 || p[1] < 0.0) {
            return Err(Error::InvalidArgument(
                "vertex coordinates must be nonnegative".into(),
            ));
        }
        if let Some(bad) = triangles.iter().flatten().find(|&&v| v >= vertices.len()) {
            return Err(Error::InvalidArgument(format!(
                "vertex index {bad} out of range"
            )));
        }
        let width = vertices.iter().fold(0.0f64, |m, p| m.max(p[0]));
        let height = vertices.iter().fold(0.0f64, |m, p| m.max(p[1]));
        Self::from_parts(vertices, triangles, width, height)
    }

    fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        width: f64,
        height: f64,
    ) -> Result<Self> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut jacobians = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.is_nan() || det <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} has non-positive signed area {}",
                    0.5 * det
                )));
            }
            areas.push(0.5 * det);
            jacobians.push(jac);
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_count: Vec<u8> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[e] += 1;
                *slot = e;
            }
            triangle_edges.push(local);
        }

        if let Some(e) = edge_count.iter().position(|&c| c > 2) {
            return Err(Error::InvalidArgument(format!(
                "edge {:?} is shared by {} triangles",
                edges[e], edge_count[e]
            )));
        }

        let boundary_edges = edges
            .iter()
            .zip(&edge_count)
            .enumerate()
            .filter(|(_, (_, &c))| c == 1)
            .map(|(e, (&vertices, _))| BoundaryEdge {
                edge: e,
                vertices,
                tag: BoundaryTag::Wall,
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            triangle_edges,
            edges,
            boundary_edges,
            areas,
            jacobians,
            width,
            height,
        })
    }

    /// Re-tags every boundary edge by the first matching rule.
    pub fn tag_boundaries(mut self, rules: &[BoundaryRule]) -> Result<Self> {
        let tol = 1e-10 * self.width.max(self.height);
        for be in &mut self.boundary_edges {
            let a = self.vertices[be.vertices[0]];
            let b = self.vertices[be.vertices[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let tag = rules
                .iter()
                .find(|r| region_contains(r.region, a, b, self.width, self.height, tol))
                .map(|r| r.tag);
            match tag {
                Some(tag) => be.tag = tag,
                None => {
                    return Err(Error::UntaggedEdge {
                        x: mid[0],
                        y: mid[1],
                    })
                }
            }
        }
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn element_areas(&self) -> &[f64] {
        &self.areas
    }

    /// Jacobian of the map from the reference triangle to triangle `t`;
    /// columns are the edge vectors leaving local vertex 0.
    pub fn jacobian(&self, t: usize) -> [[f64; 2]; 2] {
        self.jacobians[t]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn domain_area(&self) -> f64 {
        self.width * self.height
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].map(|v| self.vertices[v]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Physical point for barycentric coordinates on triangle `t`.
    pub fn map_point(&self, t: usize, bary: &[f64; 3]) -> Point {
        let tri = self.triangles[t];
        let mut p = [0.0; 2];
        for k in 0..3 {
            let v = self.vertices[tri[k]];
            p[0] += bary[k] * v[0];
            p[1] += bary[k] * v[1];
        }
        p
    }

    /// Whether the reference map of triangle `t` has a diagonal metric
    /// `J^T J`, i.e. the legs at local vertex 0 are orthogonal.
    pub fn has_diagonal_metric(&self, t: usize) -> bool {
        let j = self.jacobians[t];
        let cross = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let scale =
            (j[0][0].powi(2) + j[1][0].powi(2)).sqrt() * (j[0][1].powi(2) + j[1][1].powi(2)).sqrt();
        cross.abs() <= 1e-12 * scale
    }

    /// Interior edges must be shared by exactly two triangles, boundary edges by one.
    pub fn check_conformity(&self) -> Result<()> {
        let mut count = vec![0u8; self.edges.len()];
        for te in &self.triangle_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        let boundary: std::collections::HashSet<usize> =
            self.boundary_edges.iter().map(|b| b.edge).collect();
        for (e, &c) in count.iter().enumerate() {
            let expected = if boundary.contains(&e) { 1 } else { 2 };
            if c != expected {
                return Err(Error::InvalidArgument(format!(
                    "edge {:?} has multiplicity {c}, expected {expected}",
                    self.edges[e]
                )));
            }
        }
        Ok(())
    }

    /// Vertices lying on at least one boundary edge carrying `tag`.
    pub fn boundary_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|b| b.tag == tag)
            .flat_map(|b| b.vertices)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary_edges.iter().any(|b| b.tag == tag)
    }
}

fn region_contains(
    region: EdgeRegion,
    a: Point,
    b: Point,
    width: f64,
    height: f64,
    tol: f64,
) -> bool {
    match region {
        EdgeRegion::Any => true,
        EdgeRegion::Segment { side, from, to } => {
            let on_side = |p: Point| match side {
                Side::Left => p[0].abs() <= tol,
                Side::Right => (p[0] - width).abs() <= tol,
                Side::Bottom => p[1].abs() <= tol,
                Side::Top => (p[1] - height).abs() <= tol,
            };
            if !(on_side(a) && on_side(b)) {
                return false;
            }
            let mid = 0.5 * (side.tangential(a) + side.tangential(b));
            mid >= from - tol && mid <= to + tol
        }
    }
}
