//! Triangle meshes of planar domains: built-in generators for the unit square
//! and the disk, plus a plain-text mesh format.
//!
//! The text format is
//!
//! ```text
//! nv nt nb
//! x y            (nv lines)
//! i j k          (nt lines, 0-based node indices)
//! b0 b1 ...      (nb boundary node indices, any whitespace)
//! ```

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Sorted, duplicate-free.
    pub boundary_nodes: Vec<usize>,
}

/// Relative area floor below which a triangle counts as degenerate.
pub const AREA_FLOOR: f64 = 1e-14;

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds a mesh and checks its invariants.
    pub fn new(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, boundary_nodes: Vec<usize>) -> Result<Self> {
        let boundary_nodes: Vec<usize> = boundary_nodes
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mesh = Self {
            nodes,
            triangles,
            boundary_nodes,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest triangle edge.
    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(p, q)| dist(self.nodes[p], self.nodes[q]))
            .fold(0.0, f64::max)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_nodes.binary_search(&node).is_ok()
    }

    fn bounding_box_area(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (hi[0] - lo[0]) * (hi[1] - lo[1])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if let Some(&b) = self.boundary_nodes.iter().find(|&&b| b >= n) {
            return Err(Error::InvalidMesh(format!("boundary node {b} out of range")));
        }
        if self.nodes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        let floor = AREA_FLOOR * self.bounding_box_area();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing node")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle { index: t, area: 0.0 });
            }
            let area = self.triangle_area(t);
            if area <= floor {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
            for (p, q) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                if let Some(other) = directed.insert((p, q), t) {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({p}, {q}) used with the same orientation by triangles {other} and {t}"
                    )));
                }
            }
        }
        // With no repeated directed edge, each undirected edge has at most two
        // triangles and they are consistently oriented.
        Ok(())
    }

    /// Nodes lying on edges that belong to exactly one triangle.
    pub fn topological_boundary(&self) -> Vec<usize> {
        let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &[a, b, c] in &self.triangles {
            directed.extend([(a, b), (b, c), (c, a)]);
        }
        let mut out = BTreeSet::new();
        for &(p, q) in &directed {
            if !directed.contains(&(q, p)) {
                out.insert(p);
                out.insert(q);
            }
        }
        out.into_iter().collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary_nodes.len()
        )?;
        for p in &self.nodes {
            writeln!(w, "{:e} {:e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        let b: Vec<String> = self.boundary_nodes.iter().map(usize::to_string).collect();
        writeln!(w, "{}", b.join(" "))
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(k, l)| l.split_whitespace().map(move |t| (k + 1, t)));
    let mut last_line = 1;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        let tok = tokens.next().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: last_line,
            msg: format!("unexpected end of file while reading {what}"),
        })?;
        last_line = tok.0;
        Ok(tok)
    };
    fn num<T: std::str::FromStr>(path: &Path, (line, s): (usize, &str), what: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("invalid {what} `{s}`"),
        })
    }

    let nv: usize = num(path, next("header")?, "node count")?;
    let nt: usize = num(path, next("header")?, "triangle count")?;
    let nb: usize = num(path, next("header")?, "boundary count")?;
    let mut nodes = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = num(path, next("node")?, "coordinate")?;
        let y = num(path, next("node")?, "coordinate")?;
        nodes.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = num(path, next("triangle")?, "node index")?;
        }
        triangles.push(t);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        boundary.push(num(path, next("boundary list")?, "node index")?);
    }
    if let Some((line, tok)) = tokens.next() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("trailing data `{tok}`"),
        });
    }
    if boundary.iter().collect::<BTreeSet<_>>().len() != boundary.len() {
        return Err(Error::InvalidMesh("repeated boundary node".into()));
    }
    Mesh::new(nodes, triangles, boundary)
}

/// Structured triangulation of `[0,1]²` with mesh width `2^-level`; every
/// cell is cut along its lower-left to upper-right diagonal.
pub fn generate_square_mesh(level: u32) -> Mesh {
    assert!(level >= 1, "square mesh level must be at least 1");
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 * h, j as f64 * h]);
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(id(i, j));
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh {
        nodes,
        triangles,
        boundary_nodes: boundary,
    }
}

pub const DISK_RADIUS: f64 = 0.5;

/// Target node spacing as a fraction of the requested maximum edge length.
const DISK_SPACING: f64 = 0.62;

struct Ring {
    first: usize,
    count: usize,
    /// Increasing modulo 2π, starting at the ring rotation.
    angles: Vec<f64>,
}

/// Triangulation of the disk of radius 0.5 around the origin whose longest
/// edge does not exceed `2^-level`.
///
/// Nodes sit on concentric rings; every ring gets its own random rotation and
/// every node a small angular and radial perturbation, so meshes for
/// different levels are not nested. The result is made Delaunay by edge
/// flips. Deterministic for a given level.
pub fn generate_disk_mesh(level: u32) -> Mesh {
    assert!(level >= 2, "disk mesh level must be at least 2");
    let hmax = 0.5f64.powi(level as i32);
    let spacing = DISK_SPACING * hmax;
    let n_rings = (DISK_RADIUS / spacing).ceil() as usize;
    let dr = DISK_RADIUS / n_rings as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x00d1_5c00 + u64::from(level));

    let mut nodes: Vec<Point> = vec![[0.0, 0.0]];
    let mut rings = vec![Ring {
        first: 0,
        count: 1,
        angles: vec![0.0],
    }];
    for k in 1..=n_rings {
        let outer = k == n_rings;
        let base_r = dr * k as f64;
        let count = ((2.0 * PI * base_r / spacing).ceil() as usize).max(6);
        let step = 2.0 * PI / count as f64;
        let rotation = rng.random::<f64>() * step;
        let first = nodes.len();
        let mut angles = Vec::with_capacity(count);
        for m in 0..count {
            let theta = rotation + step * (m as f64 + 0.15 * (rng.random::<f64>() - 0.5));
            let r = if outer {
                DISK_RADIUS
            } else {
                base_r + 0.1 * dr * (rng.random::<f64>() - 0.5)
            };
            angles.push(theta);
            nodes.push([r * theta.cos(), r * theta.sin()]);
        }
        rings.push(Ring {
            first,
            count,
            angles,
        });
    }

    let mut triangles = Vec::new();
    let Ring { first, count, .. } = rings[1];
    for m in 0..count {
        triangles.push([0, first + m, first + (m + 1) % count]);
    }
    for k in 1..n_rings {
        stitch_rings(&rings[k], &rings[k + 1], &mut triangles);
    }
    for t in &mut triangles {
        if signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    delaunay_flips(&nodes, &mut triangles);

    let Ring { first, count, .. } = rings[n_rings];
    Mesh {
        nodes,
        triangles,
        boundary_nodes: (first..first + count).collect(),
    }
}

/// Triangulates the annulus between two rings by advancing along whichever
/// ring has the angularly closer next node.
fn stitch_rings(inner: &Ring, outer: &Ring, out: &mut Vec<[usize; 3]>) {
    let two_pi = 2.0 * PI;
    let (na, nb) = (inner.count, outer.count);
    let a0 = inner.angles[0];
    // Angles relative to the first inner node, in [0, 2π).
    let rel = |t: f64| (t - a0).rem_euclid(two_pi);
    let circ = |t: f64| {
        let r = rel(t);
        r.min(two_pi - r)
    };
    let start = (0..nb)
        .min_by(|&p, &q| circ(outer.angles[p]).total_cmp(&circ(outer.angles[q])))
        .unwrap();
    let b0 = {
        let r = rel(outer.angles[start]);
        if r > PI {
            r - two_pi
        } else {
            r
        }
    };
    let a = |i: usize| {
        if i == na {
            two_pi
        } else {
            rel(inner.angles[i])
        }
    };
    let b = |j: usize| {
        if j == nb {
            b0 + two_pi
        } else {
            b0 + (outer.angles[(start + j) % nb] - outer.angles[start]).rem_euclid(two_pi)
        }
    };
    let node_a = |i: usize| inner.first + i % na;
    let node_b = |j: usize| outer.first + (start + j) % nb;

    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let advance_inner = j == nb || (i < na && a(i + 1) < b(j + 1));
        if advance_inner {
            out.push([node_a(i), node_b(j), node_a(i + 1)]);
            i += 1;
        } else {
            out.push([node_a(i), node_b(j), node_b(j + 1)]);
            j += 1;
        }
    }
}

fn cot_at(apex: Point, p: Point, q: Point) -> f64 {
    let u = [p[0] - apex[0], p[1] - apex[1]];
    let v = [q[0] - apex[0], q[1] - apex[1]];
    let dot = u[0] * v[0] + u[1] * v[1];
    let cross = (u[0] * v[1] - u[1] * v[0]).abs();
    dot / cross
}

/// Lawson flips until every interior edge satisfies `cot α + cot β ≥ 0`,
/// which is both the Delaunay condition and non-positivity of the P1
/// stiffness coupling across that edge.
fn delaunay_flips(nodes: &[Point], triangles: &mut [[usize; 3]]) {
    for _sweep in 0..200 {
        let mut owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                owner.insert((tri[k], tri[(k + 1) % 3]), (t, tri[(k + 2) % 3]));
            }
        }
        let mut touched = vec![false; triangles.len()];
        let mut flips = 0;
        let edges: Vec<_> = owner.iter().map(|(&e, &o)| (e, o)).collect();
        let mut edges = edges;
        edges.sort_unstable_by_key(|&(e, _)| e);
        for ((a, b), (t1, c)) in edges {
            if a > b {
                continue;
            }
            let Some(&(t2, d)) = owner.get(&(b, a)) else {
                continue;
            };
            if touched[t1] || touched[t2] {
                continue;
            }
            let (pa, pb, pc, pd) = (nodes[a], nodes[b], nodes[c], nodes[d]);
            if cot_at(pc, pa, pb) + cot_at(pd, pa, pb) >= -1e-12 {
                continue;
            }
            // Quad a, d, b, c is counter-clockwise; new diagonal c-d.
            if signed_area(pa, pd, pc) <= 0.0 || signed_area(pd, pb, pc) <= 0.0 {
                continue;
            }
            triangles[t1] = [a, d, c];
            triangles[t2] = [d, b, c];
            touched[t1] = true;
            touched[t2] = true;
            flips += 1;
        }
        if flips == 0 {
            return;
        }
    }
}
