//! Finite regions of the square lattice.
//!
//! Faces are unit squares with integer centers. Vertex `(i, j)` sits at the
//! lower-left corner of the face in grid column `i`, row `j`. Every edge has a
//! canonical direction: east for horizontal edges, north for vertical ones.
//! Looking along the canonical direction, `left` is the face to the north of a
//! horizontal edge and to the west of a vertical edge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type FaceId = usize;
pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Box { width: usize, height: usize },
    /// Faces `x in [-half_width, half_width]`, `y in [0, height]`.
    Strip { half_width: usize, height: usize },
    /// Wraps along x.
    Cylinder { circumference: usize, height: usize },
    Torus { size: usize },
    /// `Λ_outer \ Λ_inner` with `Λ_r` the faces at sup-distance at most `r`
    /// from the central face.
    Annulus { inner: usize, outer: usize },
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Box { width, height } => write!(f, "box({width},{height})"),
            Shape::Strip { half_width, height } => write!(f, "strip({half_width},{height})"),
            Shape::Cylinder { circumference, height } => {
                write!(f, "cylinder({circumference},{height})")
            }
            Shape::Torus { size } => write!(f, "torus({size},{size})"),
            Shape::Annulus { inner, outer } => write!(f, "annulus({inner},{outer})"),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("shape `{s}` lacks `(`")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("shape `{s}` lacks `)`")));
        }
        let name = &s[..open];
        let args: Vec<usize> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad dimension `{a}` in `{s}`")))
            })
            .collect::<Result<_>>()?;
        let two = |args: &[usize]| -> Result<(usize, usize)> {
            match args {
                [a, b] => Ok((*a, *b)),
                _ => Err(Error::Parse(format!("`{s}` takes two dimensions"))),
            }
        };
        match name {
            "box" => two(&args).map(|(width, height)| Shape::Box { width, height }),
            "strip" => two(&args).map(|(half_width, height)| Shape::Strip { half_width, height }),
            "cylinder" => two(&args).map(|(circumference, height)| Shape::Cylinder {
                circumference,
                height,
            }),
            "torus" => match args[..] {
                [n] => Ok(Shape::Torus { size: n }),
                [n, m] if n == m => Ok(Shape::Torus { size: n }),
                _ => Err(Error::Parse(format!("`{s}`: only square tori are supported"))),
            },
            "annulus" => two(&args).map(|(inner, outer)| Shape::Annulus { inner, outer }),
            _ => Err(Error::Parse(format!("unknown shape `{name}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(x: i64) -> Parity {
        if x.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn offset(self) -> i64 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjacency {
    /// Faces sharing an edge.
    Edge,
    /// Faces sharing at least a vertex: the four edge neighbours and the four
    /// diagonal ones. Dual to `Edge` for planar crossings.
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

#[derive(Clone, Debug)]
pub struct Face {
    pub col: usize,
    pub row: usize,
    pub center: (i64, i64),
    pub parity: Parity,
    /// Edge neighbours in the order E, N, W, S.
    pub nbrs: [Option<FaceId>; 4],
    /// Diagonal neighbours in the order NE, NW, SW, SE.
    pub diag: [Option<FaceId>; 4],
    /// Corner vertices in the order SW, SE, NE, NW.
    pub corners: [VertexId; 4],
    /// Bounding edges in the order S, E, N, W.
    pub edges: [EdgeId; 4],
    pub boundary: bool,
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub col: usize,
    pub row: usize,
    /// Incident edges in the order W, E, S, N.
    pub edges: [Option<EdgeId>; 4],
    /// Incident faces in the order NE, NW, SW, SE.
    pub faces: [Option<FaceId>; 4],
    pub interior: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub kind: EdgeKind,
    pub col: usize,
    pub row: usize,
    pub tail: VertexId,
    pub head: VertexId,
    pub left: Option<FaceId>,
    pub right: Option<FaceId>,
}

impl Edge {
    /// Both sides are faces of the domain.
    pub fn is_active(&self) -> bool {
        self.left.is_some() && self.right.is_some()
    }
}

/// The four faces and four edges around one vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaquette {
    pub vertex: VertexId,
    pub faces: [FaceId; 4],
    pub edges: [EdgeId; 4],
}

#[derive(Clone, Debug)]
pub struct Domain {
    shape: Shape,
    cols: usize,
    rows: usize,
    wrap_x: bool,
    wrap_y: bool,
    origin: (i64, i64),
    faces: Vec<Face>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    face_grid: Vec<Option<FaceId>>,
    boundary_faces: Vec<FaceId>,
}

impl Domain {
    pub fn new(shape: Shape) -> Result<Domain> {
        let (cols, rows, wrap_x, wrap_y, origin) = match shape {
            Shape::Box { width, height } => (width, height, false, false, (0, 0)),
            Shape::Strip { half_width, height } => {
                (2 * half_width + 1, height + 1, false, false, (half_width as i64, 0))
            }
            Shape::Cylinder { circumference, height } => {
                if circumference % 2 != 0 {
                    return Err(Error::InvalidDomain(format!(
                        "cylinder circumference {circumference} is odd; wrapped axes need even length"
                    )));
                }
                (circumference, height, true, false, (0, 0))
            }
            Shape::Torus { size } => {
                if size % 2 != 0 {
                    return Err(Error::InvalidDomain(format!(
                        "torus size {size} is odd; wrapped axes need even length"
                    )));
                }
                (size, size, true, true, (0, 0))
            }
            Shape::Annulus { inner, outer } => {
                if inner >= outer {
                    return Err(Error::InvalidDomain(format!(
                        "annulus radii must satisfy inner < outer, got ({inner},{outer})"
                    )));
                }
                let side = 2 * outer + 1;
                (side, side, false, false, (outer as i64, outer as i64))
            }
        };
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidDomain(format!("{shape}: dimensions must be >= 1")));
        }
        let mut dom = Domain {
            shape,
            cols,
            rows,
            wrap_x,
            wrap_y,
            origin,
            faces: Vec::new(),
            vertices: Vec::new(),
            edges: Vec::new(),
            face_grid: vec![None; cols * rows],
            boundary_faces: Vec::new(),
        };
        dom.build();
        dom.validate()?;
        Ok(dom)
    }

    fn in_mask(&self, col: usize, row: usize) -> bool {
        match self.shape {
            Shape::Annulus { inner, .. } => {
                let cx = col as i64 - self.origin.0;
                let cy = row as i64 - self.origin.1;
                cx.abs().max(cy.abs()) > inner as i64
            }
            _ => true,
        }
    }

    fn grid_face(&self, col: i64, row: i64) -> Option<FaceId> {
        let c = self.wrap_coord(col, self.cols, self.wrap_x)?;
        let r = self.wrap_coord(row, self.rows, self.wrap_y)?;
        self.face_grid[r * self.cols + c]
    }

    fn wrap_coord(&self, x: i64, n: usize, wrap: bool) -> Option<usize> {
        if wrap {
            Some(x.rem_euclid(n as i64) as usize)
        } else if x < 0 || x >= n as i64 {
            None
        } else {
            Some(x as usize)
        }
    }

    fn build(&mut self) {
        for row in 0..self.rows {
            for col in 0..self.cols {
                if self.in_mask(col, row) {
                    let id = self.faces.len();
                    self.face_grid[row * self.cols + col] = Some(id);
                    let center = (col as i64 - self.origin.0, row as i64 - self.origin.1);
                    self.faces.push(Face {
                        col,
                        row,
                        center,
                        parity: Parity::of(center.0 + center.1),
                        nbrs: [None; 4],
                        diag: [None; 4],
                        corners: [0; 4],
                        edges: [0; 4],
                        boundary: false,
                    });
                }
            }
        }

        let vcols = if self.wrap_x { self.cols } else { self.cols + 1 };
        let vrows = if self.wrap_y { self.rows } else { self.rows + 1 };
        let mut vertex_grid = vec![None; vcols * vrows];
        for j in 0..vrows {
            for i in 0..vcols {
                let (ii, jj) = (i as i64, j as i64);
                let faces = [
                    self.grid_face(ii, jj),
                    self.grid_face(ii - 1, jj),
                    self.grid_face(ii - 1, jj - 1),
                    self.grid_face(ii, jj - 1),
                ];
                if faces.iter().any(Option::is_some) {
                    vertex_grid[j * vcols + i] = Some(self.vertices.len());
                    self.vertices.push(Vertex {
                        col: i,
                        row: j,
                        edges: [None; 4],
                        faces,
                        interior: faces.iter().all(Option::is_some),
                    });
                }
            }
        }
        let vertex_at = |i: i64, j: i64| -> Option<VertexId> {
            let i = if self.wrap_x { i.rem_euclid(vcols as i64) } else { i };
            let j = if self.wrap_y { j.rem_euclid(vrows as i64) } else { j };
            if i < 0 || j < 0 || i >= vcols as i64 || j >= vrows as i64 {
                None
            } else {
                vertex_grid[j as usize * vcols + i as usize]
            }
        };

        let mut h_grid = vec![None; self.cols * vrows];
        let mut v_grid = vec![None; vcols * self.rows];
        let mut edges = Vec::new();
        for j in 0..vrows {
            for i in 0..self.cols {
                let (ii, jj) = (i as i64, j as i64);
                let left = self.grid_face(ii, jj);
                let right = self.grid_face(ii, jj - 1);
                if left.is_some() || right.is_some() {
                    h_grid[j * self.cols + i] = Some(edges.len());
                    edges.push(Edge {
                        kind: EdgeKind::Horizontal,
                        col: i,
                        row: j,
                        tail: vertex_at(ii, jj).expect("edge endpoint"),
                        head: vertex_at(ii + 1, jj).expect("edge endpoint"),
                        left,
                        right,
                    });
                }
            }
        }
        for j in 0..self.rows {
            for i in 0..vcols {
                let (ii, jj) = (i as i64, j as i64);
                let left = self.grid_face(ii - 1, jj);
                let right = self.grid_face(ii, jj);
                if left.is_some() || right.is_some() {
                    v_grid[j * vcols + i] = Some(edges.len());
                    edges.push(Edge {
                        kind: EdgeKind::Vertical,
                        col: i,
                        row: j,
                        tail: vertex_at(ii, jj).expect("edge endpoint"),
                        head: vertex_at(ii, jj + 1).expect("edge endpoint"),
                        left,
                        right,
                    });
                }
            }
        }
        self.edges = edges;

        let h_at = |i: i64, j: i64| -> Option<EdgeId> {
            let i = if self.wrap_x { i.rem_euclid(self.cols as i64) } else { i };
            let j = if self.wrap_y { j.rem_euclid(vrows as i64) } else { j };
            if i < 0 || j < 0 || i >= self.cols as i64 || j >= vrows as i64 {
                None
            } else {
                h_grid[j as usize * self.cols + i as usize]
            }
        };
        let v_at = |i: i64, j: i64| -> Option<EdgeId> {
            let i = if self.wrap_x { i.rem_euclid(vcols as i64) } else { i };
            let j = if self.wrap_y { j.rem_euclid(self.rows as i64) } else { j };
            if i < 0 || j < 0 || i >= vcols as i64 || j >= self.rows as i64 {
                None
            } else {
                v_grid[j as usize * vcols + i as usize]
            }
        };
        for v in self.vertices.iter_mut() {
            let (i, j) = (v.col as i64, v.row as i64);
            v.edges = [h_at(i - 1, j), h_at(i, j), v_at(i, j - 1), v_at(i, j)];
        }

        for id in 0..self.faces.len() {
            let (c, r) = (self.faces[id].col as i64, self.faces[id].row as i64);
            let nbrs = [
                self.grid_face(c + 1, r),
                self.grid_face(c, r + 1),
                self.grid_face(c - 1, r),
                self.grid_face(c, r - 1),
            ];
            let diag = [
                self.grid_face(c + 1, r + 1),
                self.grid_face(c - 1, r + 1),
                self.grid_face(c - 1, r - 1),
                self.grid_face(c + 1, r - 1),
            ];
            let corners = [
                vertex_at(c, r).expect("corner"),
                vertex_at(c + 1, r).expect("corner"),
                vertex_at(c + 1, r + 1).expect("corner"),
                vertex_at(c, r + 1).expect("corner"),
            ];
            let edges = [
                h_at(c, r).expect("side"),
                v_at(c + 1, r).expect("side"),
                h_at(c, r + 1).expect("side"),
                v_at(c, r).expect("side"),
            ];
            let face = &mut self.faces[id];
            face.nbrs = nbrs;
            face.diag = diag;
            face.corners = corners;
            face.edges = edges;
            face.boundary = nbrs.iter().any(Option::is_none);
        }
        self.boundary_faces = (0..self.faces.len()).filter(|&f| self.faces[f].boundary).collect();
    }

    fn validate(&self) -> Result<()> {
        for (id, v) in self.vertices.iter().enumerate() {
            if v.interior && v.edges.iter().any(Option::is_none) {
                return Err(Error::InvalidDomain(format!("interior vertex {id} has degree < 4")));
            }
        }
        for (id, e) in self.edges.iter().enumerate() {
            if e.left.is_none() && e.right.is_none() {
                return Err(Error::InvalidDomain(format!("edge {id} touches no face")));
            }
        }
        for f in &self.faces {
            for g in f.nbrs.iter().flatten() {
                if self.faces[*g].parity == f.parity {
                    return Err(Error::InvalidDomain(format!(
                        "adjacent faces at {:?} and {:?} share a parity",
                        f.center, self.faces[*g].center
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn wraps(&self) -> (bool, bool) {
        (self.wrap_x, self.wrap_y)
    }

    pub fn is_wrapped(&self) -> bool {
        self.wrap_x || self.wrap_y
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> &Face {
        &self.faces[f]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_faces(&self) -> &[FaceId] {
        &self.boundary_faces
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).filter(move |&v| self.vertices[v].interior)
    }

    pub fn active_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].is_active())
    }

    /// Face at grid position `(col, row)`, wrapping where the domain wraps.
    pub fn face_at(&self, col: i64, row: i64) -> Option<FaceId> {
        self.grid_face(col, row)
    }

    /// Face whose center has the given (origin-relative) coordinates.
    pub fn face_by_center(&self, x: i64, y: i64) -> Option<FaceId> {
        self.grid_face(x + self.origin.0, y + self.origin.1)
    }

    /// The face nearest the geometric middle of the grid.
    pub fn central_face(&self) -> Option<FaceId> {
        self.grid_face((self.cols / 2) as i64, (self.rows / 2) as i64)
    }

    pub fn neighbors(&self, f: FaceId, mode: Adjacency) -> Vec<FaceId> {
        let face = &self.faces[f];
        let mut out: Vec<FaceId> = face.nbrs.iter().flatten().copied().collect();
        if mode == Adjacency::X {
            out.extend(face.diag.iter().flatten().copied());
        }
        out.retain(|&g| g != f);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn plaquette(&self, v: VertexId) -> Option<Plaquette> {
        let vx = &self.vertices[v];
        if !vx.interior {
            return None;
        }
        Some(Plaquette {
            vertex: v,
            faces: vx.faces.map(|f| f.expect("interior vertex")),
            edges: vx.edges.map(|e| e.expect("interior vertex")),
        })
    }

    /// Graph distance between faces under edge adjacency, from `src` to all.
    pub fn face_distances(&self, src: FaceId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.faces.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(f) = queue.pop_front() {
            let d = dist[f].unwrap();
            for g in self.faces[f].nbrs.iter().flatten() {
                if dist[*g].is_none() {
                    dist[*g] = Some(d + 1);
                    queue.push_back(*g);
                }
            }
        }
        dist
    }

    /// Sup-norm distance of a face center from the domain's central face.
    pub fn sup_radius(&self, f: FaceId) -> i64 {
        let (cx, cy) = self.faces[f].center;
        let (ox, oy) = self.central_offset();
        (cx - ox).abs().max((cy - oy).abs())
    }

    fn central_offset(&self) -> (i64, i64) {
        let c = (self.cols / 2) as i64 - self.origin.0;
        let r = (self.rows / 2) as i64 - self.origin.1;
        (c, r)
    }

    /// Faces in the first or last grid column / row, by side name.
    pub fn side(&self, side: Side) -> Vec<FaceId> {
        (0..self.faces.len())
            .filter(|&f| {
                let face = &self.faces[f];
                match side {
                    Side::Left => face.col == 0,
                    Side::Right => face.col + 1 == self.cols,
                    Side::Bottom => face.row == 0,
                    Side::Top => face.row + 1 == self.rows,
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Side> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            _ => Err(Error::Parse(format!("unknown side `{s}`"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        };
        f.write_str(s)
    }
}
