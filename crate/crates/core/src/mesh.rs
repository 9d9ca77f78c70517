//! Strip-aligned structured triangulations of the unit square.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One of the three vertical strips `[0,x₀)`, `[x₀,x₀+w)`, `[x₀+w,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strip {
    Left,
    Middle,
    Right,
}

impl Strip {
    /// 1-based index as used in the mesh dump format.
    pub fn index(self) -> usize {
        match self {
            Strip::Left => 1,
            Strip::Middle => 2,
            Strip::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Strip::Left),
            2 => Some(Strip::Middle),
            3 => Some(Strip::Right),
            _ => None,
        }
    }
}

/// Position of the middle strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGeometry {
    x0: f64,
    w: f64,
}

impl StripGeometry {
    pub fn new(x0: f64, w: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(Error::Geometry(format!("strip width must be positive, got {w}")));
        }
        if !(x0 > 0.0) {
            return Err(Error::Geometry(format!("x0 must be positive, got {x0}")));
        }
        if !(x0 + w < 1.0) {
            return Err(Error::Geometry(format!(
                "middle strip [{x0}, {}) must end before x = 1",
                x0 + w
            )));
        }
        Ok(Self { x0, w })
    }

    /// Middle strip of width `w` centred at `x = 0.5`.
    pub fn centered(w: f64) -> Result<Self> {
        Self::new((1.0 - w) / 2.0, w)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    /// Strip containing abscissa `x`; strips are closed on the left.
    pub fn strip_of(&self, x: f64) -> Strip {
        if x < self.x0 {
            Strip::Left
        } else if x < self.x0 + self.w {
            Strip::Middle
        } else {
            Strip::Right
        }
    }

    fn segments(&self) -> [(f64, f64, Strip); 3] {
        let x1 = self.x0 + self.w;
        [
            (0.0, self.x0, Strip::Left),
            (self.x0, x1, Strip::Middle),
            (x1, 1.0, Strip::Right),
        ]
    }
}

/// Conforming triangulation of `[0,1]²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point2D>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_node: Vec<bool>,
    pub strip_of_element: Vec<Strip>,
}

fn on_boundary(p: &Point2D) -> bool {
    p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0
}

/// Number of cells of width at most `h` covering a segment of length `len`.
fn cell_count(len: f64, h: f64) -> usize {
    // The relative slack keeps 0.4 / 0.08 = 5.000000000000001 at five cells.
    let raw = len / h;
    ((raw * (1.0 - 1e-12)).ceil() as usize).max(1)
}

fn subdivide(a: f64, b: f64, cells: usize) -> impl Iterator<Item = f64> {
    (0..cells).map(move |i| a + (b - a) * i as f64 / cells as f64)
}

pub fn build_strip_mesh(geom: &StripGeometry, target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::Argument(format!(
            "target mesh width must be positive, got {target_h}"
        )));
    }
    let mut xs = Vec::new();
    let mut column_strip = Vec::new();
    for (a, b, strip) in geom.segments() {
        let cells = cell_count(b - a, target_h);
        xs.extend(subdivide(a, b, cells));
        column_strip.extend(std::iter::repeat_n(strip, cells));
    }
    xs.push(1.0);
    let ny = cell_count(1.0, target_h);
    let mut ys: Vec<f64> = subdivide(0.0, 1.0, ny).collect();
    ys.push(1.0);

    let nxn = xs.len();
    let nodes: Vec<Point2D> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point2D::new(x, y)))
        .collect();
    let boundary_node = nodes.iter().map(on_boundary).collect();

    let mut triangles = Vec::with_capacity(2 * (nxn - 1) * ny);
    let mut strip_of_element = Vec::with_capacity(triangles.capacity());
    for j in 0..ny {
        for (i, &strip) in column_strip.iter().enumerate() {
            let ll = j * nxn + i;
            let lr = ll + 1;
            let ul = ll + nxn;
            let ur = ul + 1;
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
            strip_of_element.push(strip);
            strip_of_element.push(strip);
        }
    }
    Ok(Mesh {
        nodes,
        triangles,
        boundary_node,
        strip_of_element,
    })
}

/// Splits every triangle into four by its edge midpoints.
///
/// Nodes of the result are renumbered row by row (by `y`, then `x`), which
/// keeps the assembled matrices narrowly banded.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<Point2D>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (p, q) = (nodes[key.0], nodes[key.1]);
            nodes.push(Point2D::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)));
            nodes.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut strip_of_element = Vec::with_capacity(4 * mesh.triangles.len());
    for (&[a, b, c], &strip) in mesh.triangles.iter().zip(&mesh.strip_of_element) {
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        strip_of_element.extend([strip; 4]);
    }

    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| {
        nodes[i]
            .y
            .total_cmp(&nodes[j].y)
            .then(nodes[i].x.total_cmp(&nodes[j].x))
    });
    let mut new_index = vec![0; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let nodes: Vec<Point2D> = order.iter().map(|&i| nodes[i]).collect();
    for t in &mut triangles {
        t.iter_mut().for_each(|v| *v = new_index[*v]);
    }
    let boundary_node = nodes.iter().map(on_boundary).collect();
    Mesh {
        nodes,
        triangles,
        boundary_node,
        strip_of_element,
    }
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, element: usize) -> [Point2D; 3] {
        self.triangles[element].map(|v| self.nodes[v])
    }

    /// Signed area, positive for counterclockwise vertices.
    pub fn signed_area(&self, element: usize) -> f64 {
        let [a, b, c] = self.vertices(element);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
    }

    pub fn centroid(&self, element: usize) -> Point2D {
        let [a, b, c] = self.vertices(element);
        Point2D::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Longest edge of an element.
    pub fn element_size(&self, element: usize) -> f64 {
        let [a, b, c] = self.vertices(element);
        a.distance(&b).max(b.distance(&c)).max(c.distance(&a))
    }

    /// Verifies the structural invariants: index ranges, positive areas,
    /// exact tiling, boundary flags, and strip alignment for `geom`.
    pub fn validate(&self, geom: Option<&StripGeometry>) -> Result<()> {
        let n = self.nodes.len();
        if self.boundary_node.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: self.boundary_node.len(),
            });
        }
        if self.strip_of_element.len() != self.triangles.len() {
            return Err(Error::Dimension {
                expected: self.triangles.len(),
                found: self.strip_of_element.len(),
            });
        }
        for (i, p) in self.nodes.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(Error::Argument(format!("node {i} lies outside the unit square")));
            }
            if self.boundary_node[i] != on_boundary(p) {
                return Err(Error::Argument(format!("boundary flag of node {i} is wrong")));
            }
        }
        let mut total = 0.0;
        for (e, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Argument(format!("element {e} references a missing node")));
            }
            let area = self.signed_area(e);
            if !(area > 0.0) {
                return Err(Error::Argument(format!(
                    "element {e} has non-positive area {area:e}"
                )));
            }
            total += area;
            if let Some(g) = geom {
                let strip = g.strip_of(self.centroid(e).x);
                if strip != self.strip_of_element[e] {
                    return Err(Error::Argument(format!("element {e} has wrong strip tag")));
                }
                // vertices may sit on the strip's right edge, which belongs to
                // the next strip, so test the closed interval
                let (lo, hi) = match strip {
                    Strip::Left => (0.0, g.x0),
                    Strip::Middle => (g.x0, g.x0 + g.w),
                    Strip::Right => (g.x0 + g.w, 1.0),
                };
                if self.vertices(e).iter().any(|p| p.x < lo || p.x > hi) {
                    return Err(Error::Argument(format!("element {e} straddles a strip boundary")));
                }
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("elements cover area {total}, not 1")));
        }
        Ok(())
    }

    /// Plain-text dump: a `nodes triangles` count line, then one
    /// `x y boundary_flag` line per node and one `i j k strip` line per
    /// triangle.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.nodes.len(), self.triangles.len());
        for (p, &b) in self.nodes.iter().zip(&self.boundary_node) {
            let _ = writeln!(out, "{:e} {:e} {}", p.x, p.y, u8::from(b));
        }
        for (t, s) in self.triangles.iter().zip(&self.strip_of_element) {
            let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], s.index());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Argument(format!("malformed mesh dump: {what}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("count line")))
            .collect::<Result<_>>()?;
        let [n_nodes, n_tris] = header[..] else {
            return Err(bad("count line"));
        };
        let mut mesh = Mesh {
            nodes: Vec::with_capacity(n_nodes),
            triangles: Vec::with_capacity(n_tris),
            boundary_node: Vec::with_capacity(n_nodes),
            strip_of_element: Vec::with_capacity(n_tris),
        };
        for _ in 0..n_nodes {
            let line = lines.next().ok_or_else(|| bad("missing node line"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let [x, y, flag] = f[..] else {
                return Err(bad(line));
            };
            mesh.nodes.push(Point2D::new(
                x.parse().map_err(|_| bad(line))?,
                y.parse().map_err(|_| bad(line))?,
            ));
            mesh.boundary_node.push(match flag {
                "0" => false,
                "1" => true,
                _ => return Err(bad(line)),
            });
        }
        for _ in 0..n_tris {
            let line = lines.next().ok_or_else(|| bad("missing triangle line"))?;
            let f: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(line)))
                .collect::<Result<_>>()?;
            let [i, j, k, s] = f[..] else {
                return Err(bad(line));
            };
            mesh.triangles.push([i, j, k]);
            mesh.strip_of_element
                .push(Strip::from_index(s).ok_or_else(|| bad(line))?);
        }
        Ok(mesh)
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Smallest and largest element size (longest edge) over the mesh.
pub fn mesh_width_stats(mesh: &Mesh) -> (f64, f64) {
    (0..mesh.element_count())
        .map(|e| mesh.element_size(e))
        .fold((f64::INFINITY, 0.0), |(lo, hi), h| (lo.min(h), hi.max(h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> StripGeometry {
        StripGeometry::new(0.4, 0.2).unwrap()
    }

    #[test]
    fn cell_counts_follow_ceiling_rule() {
        let m = build_strip_mesh(&geom(), 0.2).unwrap();
        assert_eq!(m.element_count(), 50);
        assert_eq!(m.node_count(), 36);
        m.validate(Some(&geom())).unwrap();
    }

    #[test]
    fn coarsest_mesh_is_all_boundary() {
        let m = build_strip_mesh(&geom(), 1.0).unwrap();
        assert_eq!(m.element_count(), 6);
        assert_eq!(m.node_count(), 8);
        assert!(m.boundary_node.iter().all(|&b| b));
    }

    #[test]
    fn rounding_in_segment_ratio_does_not_add_cells() {
        // 0.4 / 0.08 evaluates to 5.000000000000001
        let m = build_strip_mesh(&geom(), 0.08).unwrap();
        // columns: 5 + 3 + 5, rows: 13
        assert_eq!(m.element_count(), 2 * 13 * 13);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(matches!(StripGeometry::new(0.0, 0.2), Err(Error::Geometry(_))));
        assert!(matches!(StripGeometry::new(0.5, 0.5), Err(Error::Geometry(_))));
        assert!(matches!(StripGeometry::new(0.5, 0.0), Err(Error::Geometry(_))));
        assert!(matches!(StripGeometry::new(0.5, -0.1), Err(Error::Geometry(_))));
    }

    #[test]
    fn nonpositive_width_is_an_argument_error() {
        assert!(matches!(build_strip_mesh(&geom(), 0.0), Err(Error::Argument(_))));
        assert!(matches!(build_strip_mesh(&geom(), -1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn centered_geometry() {
        let g = StripGeometry::centered(0.02).unwrap();
        assert!((g.x0() - 0.49).abs() < 1e-15);
    }

    #[test]
    fn strip_predicate_is_left_closed() {
        let g = geom();
        assert_eq!(g.strip_of(0.0), Strip::Left);
        assert_eq!(g.strip_of(0.4), Strip::Middle);
        assert_eq!(g.strip_of(g.x0() + g.width()), Strip::Right);
        assert_eq!(g.strip_of(0.599), Strip::Middle);
        assert_eq!(g.strip_of(1.0), Strip::Right);
    }

    #[test]
    fn refinement_quadruples_and_preserves_area() {
        let m = build_strip_mesh(&geom(), 1.0).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.element_count(), 24);
        r.validate(Some(&geom())).unwrap();
        let rr = refine_uniform(&r);
        assert_eq!(rr.element_count(), 96);
        rr.validate(Some(&geom())).unwrap();
    }

    #[test]
    fn children_inherit_middle_strip() {
        let g = geom();
        let r = refine_uniform(&build_strip_mesh(&g, 0.2).unwrap());
        for e in 0..r.element_count() {
            let c = r.centroid(e);
            let brute = if c.x < 0.4 {
                Strip::Left
            } else if c.x < 0.6 {
                Strip::Middle
            } else {
                Strip::Right
            };
            assert_eq!(r.strip_of_element[e], brute);
        }
    }

    #[test]
    fn single_right_triangle_width() {
        let m = Mesh {
            nodes: vec![Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0), Point2D::new(0.0, 1.0)],
            triangles: vec![[0, 1, 2]],
            boundary_node: vec![true; 3],
            strip_of_element: vec![Strip::Left],
        };
        let (lo, hi) = mesh_width_stats(&m);
        assert!((lo - 2f64.sqrt()).abs() < 1e-15 && (hi - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_square_cells() {
        // x0 = 0.25, w = 0.5, h = 0.25: every cell is a 0.25 square
        let g = StripGeometry::new(0.25, 0.5).unwrap();
        let (lo, hi) = mesh_width_stats(&build_strip_mesh(&g, 0.25).unwrap());
        let s = 0.25 * 2f64.sqrt();
        assert!((lo - s).abs() < 1e-15 && (hi - s).abs() < 1e-15);
    }

    #[test]
    fn max_width_matches_exhaustive_edge_scan() {
        let m = build_strip_mesh(&geom(), 0.2).unwrap();
        let mut brute: f64 = 0.0;
        for t in &m.triangles {
            for a in 0..3 {
                for b in 0..3 {
                    brute = brute.max(m.nodes[t[a]].distance(&m.nodes[t[b]]));
                }
            }
        }
        assert_eq!(mesh_width_stats(&m).1, brute);
    }

    #[test]
    fn text_dump_round_trip() {
        let m = refine_uniform(&build_strip_mesh(&geom(), 0.5).unwrap());
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(Mesh::from_text("2 0\n0 0 1\n").is_err());
    }
}
