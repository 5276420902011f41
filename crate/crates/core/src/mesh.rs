//! Conforming triangulations of rectangles with globally oriented edges.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Every grid cell is split along the lower-left to upper-right diagonal.
    #[default]
    LowerLeftToUpperRight,
    /// Every grid cell is split along the upper-left to lower-right diagonal.
    UpperLeftToLowerRight,
}

/// A triangle's reference to one of its edges.
///
/// `sign` is +1 when the counterclockwise traversal of the triangle runs
/// along the edge's global orientation (lower vertex index to higher).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef {
    pub index: usize,
    pub sign: i8,
}

/// Triangulation of a planar polygonal domain.
///
/// Triangles are stored counterclockwise. Local edge `i` of a triangle is the
/// edge opposite its local vertex `i`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[EdgeRef; 3]>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    boundary_tags: Vec<Option<BoundaryTag>>,
}

impl Mesh {
    /// Builds a mesh from vertices and counterclockwise triangles. All
    /// boundary edges are tagged Dirichlet.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(&vertices, tri);
            if !(area > 0.0) {
                return Err(Error::Geometry(format!("triangle {t} has signed area {area:e}")));
            }
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut refs = [EdgeRef { index: 0, sign: 1 }; 3];
            for (i, r) in refs.iter_mut().enumerate() {
                let from = tri[(i + 1) % 3];
                let to = tri[(i + 2) % 3];
                let key = [from.min(to), from.max(to)];
                let index = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[index];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else if slot[1].is_none() {
                    slot[1] = Some(t);
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "edge {key:?} shared by more than two triangles"
                    )));
                }
                *r = EdgeRef { index, sign: if from < to { 1 } else { -1 } };
            }
            triangle_edges.push(refs);
        }
        let boundary_tags = edge_triangles
            .iter()
            .map(|s| s[1].is_none().then_some(BoundaryTag::Dirichlet))
            .collect();

        Ok(Self { vertices, triangles, edges, triangle_edges, edge_triangles, boundary_tags })
    }

    /// Uniform `nx` by `ny` grid on `[x0, x1] x [y0, y1]`, each cell split in two.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, diagonal: Diagonal) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("subdivision count must be positive".into()));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidArgument("empty rectangle".into()));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = x0 + (x1 - x0) * i as f64 / nx as f64;
                let y = y0 + (y1 - y0) * j as f64 / ny as f64;
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| i + j * (nx + 1);
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                match diagonal {
                    Diagonal::LowerLeftToUpperRight => {
                        triangles.push([a, b, c]);
                        triangles.push([a, c, d]);
                    }
                    Diagonal::UpperLeftToLowerRight => {
                        triangles.push([a, b, d]);
                        triangles.push([b, c, d]);
                    }
                }
            }
        }
        Self::from_triangles(vertices, triangles)
    }

    /// Uniform mesh of the unit square with `n` cells per side.
    pub fn unit_square(n: usize, diagonal: Diagonal) -> Result<Self> {
        Self::rectangle(0.0, 1.0, 0.0, 1.0, n, n, diagonal)
    }

    /// Regular refinement: every triangle is split into four through its edge midpoints.
    pub fn refine(&self) -> Result<Self> {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for e in &self.edges {
            let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (tri, refs) in self.triangles.iter().zip(&self.triangle_edges) {
            let m = [nv + refs[0].index, nv + refs[1].index, nv + refs[2].index];
            triangles.push([tri[0], m[2], m[1]]);
            triangles.push([m[2], tri[1], m[0]]);
            triangles.push([m[1], m[0], tri[2]]);
            triangles.push([m[0], m[1], m[2]]);
        }
        let mut fine = Self::from_triangles(vertices, triangles)?;
        // Child boundary edges join a coarse vertex to the midpoint of their parent.
        for (e, edge) in fine.edges.iter().enumerate() {
            if fine.boundary_tags[e].is_some() {
                let parent = edge[1] - nv;
                fine.boundary_tags[e] = self.boundary_tags[parent];
            }
        }
        Ok(fine)
    }

    /// Retags boundary edges by a predicate on the edge midpoint.
    pub fn tag_boundary<F: Fn(Point) -> BoundaryTag>(&mut self, tag: F) {
        for e in 0..self.edges.len() {
            if self.boundary_tags[e].is_some() {
                self.boundary_tags[e] = Some(tag(self.edge_midpoint(e)));
            }
        }
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

    pub fn triangle_edges(&self) -> &[[EdgeRef; 3]] {
        &self.triangle_edges
    }

    pub fn edge_triangles(&self) -> &[[Option<usize>; 2]] {
        &self.edge_triangles
    }

    pub fn boundary_tag(&self, edge: usize) -> Option<BoundaryTag> {
        self.boundary_tags[edge]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Mesh parameter h: the longest edge over all triangles.
    pub fn diameter(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Checks orientation, edge sharing and the Euler relation for a simply
    /// connected domain.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::Geometry(format!("triangle {t} is not counterclockwise")));
            }
        }
        for (e, slots) in self.edge_triangles.iter().enumerate() {
            if let [Some(a), Some(b)] = *slots {
                let sa = self.incidence_sign(a, e);
                let sb = self.incidence_sign(b, e);
                if sa == sb {
                    return Err(Error::Geometry(format!("interior edge {e} traversed twice in one direction")));
                }
            }
        }
        let euler = self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64;
        if euler != 1 {
            return Err(Error::Geometry(format!("Euler characteristic {euler}, expected 1")));
        }
        Ok(())
    }

    fn incidence_sign(&self, t: usize, e: usize) -> i8 {
        self.triangle_edges[t].iter().find(|r| r.index == e).map_or(0, |r| r.sign)
    }

    /// Plain-text dump: a `V E T` count line, vertex coordinates, then triangles.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.num_vertices(), self.num_edges(), self.num_triangles())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn signed_area(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}
