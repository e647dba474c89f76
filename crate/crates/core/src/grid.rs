//! Uniform Cartesian grids and the logically rectangular sphere grid.
//!
//! The sphere grid covers the computational rectangle `[-3, 1] x [-1, 1]`.
//! The right square `[-1, 1]^2` maps through the disk map onto the upper
//! hemisphere; the left square is reflected (`xc -> -2 - xc`) and mapped onto
//! the lower hemisphere. With the reflection the two squares share the
//! column `xc = -1`, the columns `xc = 1` and `xc = -3` coincide (periodic in
//! `i`), and the top and bottom rows fold onto themselves: cell `(i, ny-1)`
//! borders cell `(nx-1-i, ny-1)` across the top edge, likewise at the bottom.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use crate::equations::{add3, cross, dot, norm, normalize, scale, sub3};
use crate::error::{Error, Result};
use crate::flux::Frame;
use crate::state::State;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 || !(x_right > x_left) {
            return Err(Error::config(format!(
                "invalid 1D grid [{x_left}, {x_right}] with {n_cells} cells"
            )));
        }
        Ok(Grid1D {
            x_left,
            x_right,
            n_cells,
            dx: (x_right - x_left) / n_cells as f64,
        })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.dx
    }

    /// Position of interface `i - 1/2`.
    pub fn interface(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::config(format!(
                "invalid 2D grid {x:?} x {y:?} with {nx} x {ny} cells"
            )));
        }
        Ok(Grid2D {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
            dx: (x.1 - x.0) / nx as f64,
            dy: (y.1 - y.0) / ny as f64,
        })
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 0.5) * self.dx,
            self.y_min + (j as f64 + 0.5) * self.dy,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
}

/// Map the square `[-1, 1]^2` onto the closed unit disk.
pub fn map_disk(xc: f64, yc: f64) -> (f64, f64) {
    let d = xc.abs().max(yc.abs());
    if d == 0.0 {
        return (0.0, 0.0);
    }
    // Right sector |yc| <= xc; the others are reflections/rotations of it.
    let sector = |b: f64| {
        let dd = d * FRAC_1_SQRT_2;
        let yp = b * dd / d;
        let xp = dd - (1.0 - dd * dd).sqrt() + (1.0 - yp * yp).sqrt();
        (xp, yp)
    };
    if yc.abs() <= xc {
        sector(yc)
    } else if yc.abs() <= -xc {
        let (a, b) = sector(yc);
        (-a, b)
    } else if xc.abs() <= yc {
        let (a, b) = sector(xc);
        (b, a)
    } else {
        let (a, b) = sector(xc);
        (b, -a)
    }
}

/// Map the rectangle `[-3, 1] x [-1, 1]` onto the unit sphere.
pub fn map_sphere(xc: f64, yc: f64) -> [f64; 3] {
    let (upper, x) = if xc >= -1.0 { (true, xc) } else { (false, -2.0 - xc) };
    let (xp, yp) = map_disk(x, yc);
    let on_rim = x.abs() == 1.0 || yc.abs() == 1.0;
    let z = if on_rim {
        0.0
    } else {
        (1.0 - xp * xp - yp * yp).max(0.0).sqrt()
    };
    [xp, yp, if upper { z } else { -z }]
}

/// Which of a cell's four faces an edge is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    West,
    East,
    South,
    North,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Cell the normal points away from.
    pub left: usize,
    pub right: usize,
    pub left_face: Face,
    pub right_face: Face,
    /// Great-circle length (scaled by the radius).
    pub length: f64,
    pub frame: Frame,
}

#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub nx: usize,
    pub ny: usize,
    pub radius: f64,
    /// Unit-sphere nodes, `(nx + 1) * (ny + 1)`, row-major with `i` fastest.
    pub vertices: Vec<[f64; 3]>,
    /// Unit-sphere cell centers, `nx * ny`.
    pub cell_center: Vec<[f64; 3]>,
    pub cell_area: Vec<f64>,
    pub edges: Vec<Edge>,
    /// Per cell: `(edge index, +1.0 if the cell is the edge's left cell else -1.0)`.
    pub cell_edges: Vec<[(usize, f64); 4]>,
    /// Per cell: sum over its edges of `length * outward normal`.
    pub normal_sum: Vec<[f64; 3]>,
    /// Per cell: area over the longest edge, the CFL length scale.
    pub cfl_length: Vec<f64>,
    /// Coriolis parameter `2 omega z / a` per cell for unit rotation rate.
    pub coriolis_f: Vec<f64>,
}

fn great_circle(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Spherical excess of a unit-sphere triangle via l'Huilier's theorem.
fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (x, y, z) = (great_circle(b, c), great_circle(a, c), great_circle(a, b));
    let s = 0.5 * (x + y + z);
    let prod = (0.5 * s).tan()
        * (0.5 * (s - x)).tan().max(0.0)
        * (0.5 * (s - y)).tan().max(0.0)
        * (0.5 * (s - z)).tan().max(0.0);
    4.0 * prod.max(0.0).sqrt().atan()
}

/// Sub-cells per direction for centroids and cell averages.
const CENTROID_SUB: usize = 8;

fn node_x(nx: usize, i: usize) -> f64 {
    if i == nx / 2 {
        -1.0
    } else {
        -3.0 + i as f64 * 4.0 / nx as f64
    }
}

fn node_y(ny: usize, j: usize) -> f64 {
    -1.0 + j as f64 * 2.0 / ny as f64
}

/// Cell `(i, j)` split into `sub x sub` quads in computational space: the
/// unit-sphere midpoint and the unit-sphere area of each.
fn sub_quads(nx: usize, ny: usize, i: usize, j: usize, sub: usize) -> Vec<([f64; 3], f64)> {
    let (x0, x1) = (node_x(nx, i), node_x(nx, i + 1));
    let (y0, y1) = (node_y(ny, j), node_y(ny, j + 1));
    let p = |a: usize, b: usize| {
        let x = x0 + (x1 - x0) * a as f64 / sub as f64;
        let y = y0 + (y1 - y0) * b as f64 / sub as f64;
        map_sphere(x, y)
    };
    let mut out = Vec::with_capacity(sub * sub);
    for b in 0..sub {
        for a in 0..sub {
            let (pa, pb, pc, pd) = (p(a, b), p(a + 1, b), p(a + 1, b + 1), p(a, b + 1));
            let w = triangle_area(pa, pb, pc) + triangle_area(pa, pc, pd);
            out.push((normalize(add3(add3(pa, pb), add3(pc, pd))), w));
        }
    }
    out
}

impl SphereGrid {
    /// Area average of `f` over cell `c` by midpoint quadrature on sub-quads.
    pub fn cell_average(&self, c: usize, f: impl Fn([f64; 3]) -> State) -> State {
        let (i, j) = (c % self.nx, c / self.nx);
        let mut sum = State::ZERO;
        let mut area = 0.0;
        for (p, w) in sub_quads(self.nx, self.ny, i, j, CENTROID_SUB) {
            sum = sum + f(p) * w;
            area += w;
        }
        sum * (1.0 / area)
    }

    pub fn build(nx: usize, ny: usize, radius: f64) -> Result<SphereGrid> {
        if nx < 4 || nx % 2 != 0 || ny < 2 {
            return Err(Error::config(format!(
                "sphere grid needs nx >= 4 even and ny >= 2, got {nx} x {ny}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::config("sphere radius must be positive"));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(map_sphere(node_x(nx, i), node_y(ny, j)));
            }
        }
        let v = |i: usize, j: usize| vertices[j * (nx + 1) + i];

        // Area-weighted centroid. Next to the equator the map stretches cells
        // strongly in z, so the image of the computational midpoint is far
        // from the centroid there.
        let centroid = |i: usize, j: usize| {
            let mut sum = [0.0; 3];
            for (p, w) in sub_quads(nx, ny, i, j, CENTROID_SUB) {
                sum = add3(sum, scale(p, w));
            }
            normalize(sum)
        };
        let ncell = nx * ny;
        let mut cell_center = Vec::with_capacity(ncell);
        let mut cell_area = Vec::with_capacity(ncell);
        let r2 = radius * radius;
        for j in 0..ny {
            for i in 0..nx {
                cell_center.push(centroid(i, j));
                let (a, b, c, d) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
                let area = (triangle_area(a, b, c) + triangle_area(a, c, d)) * r2;
                if !(area >= 1e-14 * r2) {
                    return Err(Error::Geometry(format!(
                        "degenerate sphere cell {} (i={i}, j={j}) with area {area:e}",
                        j * nx + i
                    )));
                }
                cell_area.push(area);
            }
        }

        let cell = |i: usize, j: usize| j * nx + i;
        let mut edges = Vec::new();
        let mut push_edge = |left: usize, right: usize, lf: Face, rf: Face, a: [f64; 3], b: [f64; 3]| {
            let mid = normalize(add3(a, b));
            let chord = sub3(b, a);
            let t = normalize(sub3(chord, scale(mid, dot(chord, mid))));
            let mut frame = Frame {
                n: cross(t, mid),
                t,
                r: mid,
            };
            if dot(frame.n, sub3(mid, cell_center[left])) < 0.0 {
                frame.n = scale(frame.n, -1.0);
                frame.t = scale(frame.t, -1.0);
            }
            edges.push(Edge {
                left,
                right,
                left_face: lf,
                right_face: rf,
                length: great_circle(a, b) * radius,
                frame,
            });
        };

        // Edges along node columns; column 0 and column nx are the same seam.
        for j in 0..ny {
            for i in 0..nx {
                let left = cell((i + nx - 1) % nx, j);
                push_edge(left, cell(i, j), Face::East, Face::West, v(i, j), v(i, j + 1));
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                push_edge(cell(i, j - 1), cell(i, j), Face::North, Face::South, v(i, j), v(i + 1, j));
            }
        }
        for i in 0..nx / 2 {
            let mirror = nx - 1 - i;
            push_edge(cell(i, 0), cell(mirror, 0), Face::South, Face::South, v(i, 0), v(i + 1, 0));
            push_edge(
                cell(i, ny - 1),
                cell(mirror, ny - 1),
                Face::North,
                Face::North,
                v(i, ny),
                v(i + 1, ny),
            );
        }

        let mut slots: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4); ncell];
        for (e, edge) in edges.iter().enumerate() {
            slots[edge.left].push((e, 1.0));
            slots[edge.right].push((e, -1.0));
        }
        let mut cell_edges = Vec::with_capacity(ncell);
        let mut normal_sum = Vec::with_capacity(ncell);
        let mut cfl_length = Vec::with_capacity(ncell);
        for (c, s) in slots.iter().enumerate() {
            if s.len() != 4 {
                return Err(Error::Geometry(format!("cell {c} has {} edges", s.len())));
            }
            let mut sum = [0.0; 3];
            let mut longest = 0.0_f64;
            for &(e, sign) in s {
                let edge = &edges[e];
                sum = add3(sum, scale(edge.frame.n, sign * edge.length));
                longest = longest.max(edge.length);
            }
            cell_edges.push([s[0], s[1], s[2], s[3]]);
            normal_sum.push(sum);
            cfl_length.push(cell_area[c] / longest);
        }
        let coriolis_f = cell_center.iter().map(|p| 2.0 * p[2]).collect();

        Ok(SphereGrid {
            nx,
            ny,
            radius,
            vertices,
            cell_center,
            cell_area,
            edges,
            cell_edges,
            normal_sum,
            cfl_length,
            coriolis_f,
        })
    }

    pub fn ncells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell center scaled to the sphere radius.
    pub fn center_point(&self, c: usize) -> [f64; 3] {
        scale(self.cell_center[c], self.radius)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }

    /// Neighbor of cell `(i, j)` in index space, following the seams.
    /// `i` may run past either end (periodic); `j` may run up to `ny` cells
    /// past either end (folded).
    pub fn wrap_index(&self, i: isize, j: isize) -> (usize, usize) {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let mut i = i.rem_euclid(nx);
        let mut j = j;
        if j >= ny {
            j = 2 * ny - 1 - j;
            i = nx - 1 - i;
        } else if j < 0 {
            j = -1 - j;
            i = nx - 1 - i;
        }
        (i as usize, j as usize)
    }
}

#[derive(Clone, Debug)]
pub enum Grid {
    Line(Grid1D),
    Plane(Grid2D),
    Sphere(Arc<SphereGrid>),
}

impl Grid {
    /// Cell counts `(nx, ny)`; `ny = 1` for 1D grids.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Grid::Line(g) => (g.n_cells, 1),
            Grid::Plane(g) => (g.nx, g.ny),
            Grid::Sphere(g) => (g.nx, g.ny),
        }
    }

    pub fn ndim(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            _ => 2,
        }
    }

    pub fn ncells(&self) -> usize {
        let (nx, ny) = self.dims();
        nx * ny
    }

    /// Area (length in 1D) of cell `c`.
    pub fn cell_area(&self, c: usize) -> f64 {
        match self {
            Grid::Line(g) => g.dx,
            Grid::Plane(g) => g.cell_area(),
            Grid::Sphere(g) => g.cell_area[c],
        }
    }

    pub fn summary(&self) -> GridSummary {
        match self {
            Grid::Line(g) => GridSummary {
                kind: "line",
                nx: g.n_cells,
                ny: 1,
                min_area: g.dx,
                max_area: g.dx,
                min_edge: g.dx,
                max_edge: g.dx,
            },
            Grid::Plane(g) => GridSummary {
                kind: "plane",
                nx: g.nx,
                ny: g.ny,
                min_area: g.cell_area(),
                max_area: g.cell_area(),
                min_edge: g.dx.min(g.dy),
                max_edge: g.dx.max(g.dy),
            },
            Grid::Sphere(g) => {
                let (min_area, max_area) = min_max(g.cell_area.iter().copied());
                let (min_edge, max_edge) = min_max(g.edges.iter().map(|e| e.length));
                GridSummary {
                    kind: "sphere",
                    nx: g.nx,
                    ny: g.ny,
                    min_area,
                    max_area,
                    min_edge,
                    max_edge,
                }
            }
        }
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSummary {
    pub kind: &'static str,
    pub nx: usize,
    pub ny: usize,
    pub min_area: f64,
    pub max_area: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

impl fmt::Display for GridSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grid: {} {} x {} ({} cells)", self.kind, self.nx, self.ny, self.nx * self.ny)?;
        writeln!(f, "cell area: min {:.6e} max {:.6e}", self.min_area, self.max_area)?;
        write!(f, "edge length: min {:.6e} max {:.6e}", self.min_edge, self.max_edge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid1d_geometry() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.center(0), 0.125);
        assert_eq!(g.interface(4), 1.0);
        assert!(Grid1D::new(1.0, 0.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn disk_anchor_points() {
        let (x, y) = map_disk(1.0, 0.0);
        assert!((x - 1.0).abs() < 1e-15 && y.abs() < 1e-15);
        let (x, y) = map_disk(1.0, 1.0);
        let h = 2.0_f64.sqrt() / 2.0;
        assert!((x - h).abs() < 1e-15 && (y - h).abs() < 1e-15);
        assert_eq!(map_disk(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn disk_boundary_lands_on_unit_circle() {
        for k in 0..=40 {
            let s = -1.0 + k as f64 / 20.0;
            for (x, y) in [(1.0, s), (-1.0, s), (s, 1.0), (s, -1.0)] {
                let (xp, yp) = map_disk(x, y);
                assert!((xp.hypot(yp) - 1.0).abs() < 1e-12, "({x}, {y})");
            }
        }
    }

    #[test]
    fn disk_sectors_are_symmetric() {
        let (x, y) = map_disk(0.7, 0.3);
        assert_eq!(map_disk(-0.7, 0.3), (-x, y));
        assert_eq!(map_disk(0.3, 0.7), (y, x));
        assert_eq!(map_disk(0.3, -0.7), (y, -x));
    }

    #[test]
    fn sphere_anchor_points() {
        assert_eq!(map_sphere(0.0, 0.0), [0.0, 0.0, 1.0]);
        let p = map_sphere(1.0, 0.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2] == 0.0);
        assert_eq!(map_sphere(-2.0, 0.0), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn seams_coincide() {
        for k in 0..=10 {
            let y = -1.0 + k as f64 * 0.2;
            assert_eq!(map_sphere(1.0, y), map_sphere(-3.0, y));
            let a = map_sphere(-1.0, y);
            let b = map_disk(-1.0, y);
            assert_eq!((a[0], a[1]), b);
        }
    }

    #[test]
    fn coarse_sphere_is_eight_octants() {
        let g = SphereGrid::build(4, 2, 1.0).unwrap();
        assert!((g.total_area() - 4.0 * PI).abs() < 1e-3);
        for a in &g.cell_area {
            assert!((a - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_invariants() {
        let g = SphereGrid::build(16, 8, 1.0).unwrap();
        for v in g.vertices.iter().chain(&g.cell_center) {
            assert!((norm(*v) - 1.0).abs() < 1e-12);
        }
        for e in &g.edges {
            e.frame.check(1e-12).unwrap();
            let f = e.frame;
            assert!((norm(cross(f.t, f.r)) - 1.0).abs() < 1e-12);
        }
        assert!((g.total_area() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn shared_edges_have_matching_endpoints() {
        // Every edge must be the same physical arc seen from both cells.
        let (nx, ny) = (12, 6);
        let g = SphereGrid::build(nx, ny, 1.0).unwrap();
        let v = |i: usize, j: usize| g.vertices[j * (nx + 1) + i];
        let corners = |c: usize, face: Face| {
            let (i, j) = (c % nx, c / nx);
            match face {
                Face::West => (v(i, j), v(i, j + 1)),
                Face::East => (v(i + 1, j), v(i + 1, j + 1)),
                Face::South => (v(i, j), v(i + 1, j)),
                Face::North => (v(i, j + 1), v(i + 1, j + 1)),
            }
        };
        let close = |a: [f64; 3], b: [f64; 3]| norm(sub3(a, b)) < 1e-12;
        for e in &g.edges {
            let (a, b) = corners(e.left, e.left_face);
            let (c, d) = corners(e.right, e.right_face);
            assert!(
                (close(a, c) && close(b, d)) || (close(a, d) && close(b, c)),
                "edge {} -> {} does not match",
                e.left,
                e.right
            );
            // outward normal of the right cell is the negated frame normal
            let to_right = sub3(g.cell_center[e.right], g.cell_center[e.left]);
            assert!(dot(e.frame.n, to_right) > 0.0);
        }
    }

    #[test]
    fn wrap_index_follows_folds() {
        let g = SphereGrid::build(8, 4, 1.0).unwrap();
        assert_eq!(g.wrap_index(-1, 2), (7, 2));
        assert_eq!(g.wrap_index(8, 2), (0, 2));
        assert_eq!(g.wrap_index(1, 4), (6, 3));
        assert_eq!(g.wrap_index(1, 5), (6, 2));
        assert_eq!(g.wrap_index(2, -1), (5, 0));
        assert_eq!(g.wrap_index(2, -2), (5, 1));
    }

    #[test]
    fn bad_sphere_dimensions() {
        assert!(SphereGrid::build(5, 4, 1.0).is_err());
        assert!(SphereGrid::build(2, 4, 1.0).is_err());
        assert!(SphereGrid::build(8, 1, 1.0).is_err());
    }

    #[test]
    fn summary_prints() {
        let g = Grid::Sphere(Arc::new(SphereGrid::build(8, 4, 1.0).unwrap()));
        let s = g.summary().to_string();
        assert!(s.contains("sphere 8 x 4"));
        assert!(s.contains("edge length"));
    }
}
