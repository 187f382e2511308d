//! Staggered grid with two interleaved lattices and the sparse difference
//! operators acting between them.
//!
//! Points are addressed by doubled integer indices `(p, q)` so that
//! `x = x0 + p·dx/2`. Centers have `p, q` even, corners `p, q` odd; the
//! interface lattice K^I holds the points with `p + q` odd: x-faces
//! `(x_{i+1/2}, y_j)` with `p` odd and y-faces `(x_i, y_{j+1/2})` with `q`
//! odd.
//!
//! Storage order: K^I lists x-faces row-major (q outer, p inner), then
//! y-faces row-major. K^C lists centers row-major, then corners row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Bounded,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wall {
    Left,
    Right,
    Bottom,
    Top,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::Left, Wall::Right, Wall::Bottom, Wall::Top];

    pub fn index(self) -> usize {
        match self {
            Wall::Left => 0,
            Wall::Right => 1,
            Wall::Bottom => 2,
            Wall::Top => 3,
        }
    }

    /// Axis of the outward normal (0 = x, 1 = y).
    pub fn axis(self) -> usize {
        match self {
            Wall::Left | Wall::Right => 0,
            Wall::Bottom | Wall::Top => 1,
        }
    }

    pub fn normal(self) -> [f64; 2] {
        match self {
            Wall::Left => [-1.0, 0.0],
            Wall::Right => [1.0, 0.0],
            Wall::Bottom => [0.0, -1.0],
            Wall::Top => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    Center,
    Corner,
    XFace,
    YFace,
}

/// An interface point lying on the domain boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryRow {
    pub row: usize,
    pub wall: Wall,
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct StaggeredGrid {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
    pub topology: Topology,
    pub dx: f64,
    pub dy: f64,
    pub dzeta: f64,
    /// Number of distinct doubled indices per axis.
    pub np: usize,
    pub nq: usize,
    pub i_points: Vec<(usize, usize)>,
    pub c_points: Vec<(usize, usize)>,
    pub n_centers: usize,
    pub n_xfaces: usize,
    i_lookup: Vec<usize>,
    c_lookup: Vec<usize>,
    pub boundary_rows: Vec<BoundaryRow>,
    /// Quadrature weight (dimensionless, multiply by Δζ) per K^C point.
    pub c_weight: Vec<f64>,
    /// Quadrature weight per K^I point.
    pub i_weight: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl StaggeredGrid {
    pub fn new(nx: usize, ny: usize, domain: Rect, topology: Topology) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::Config(format!("grid needs at least 3 nodes per axis, got {nx}x{ny}")));
        }
        let lx = domain.x1 - domain.x0;
        let ly = domain.y1 - domain.y0;
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::Config("degenerate domain".into()));
        }
        let (dx, dy, np, nq) = match topology {
            Topology::Bounded => (lx / (nx - 1) as f64, ly / (ny - 1) as f64, 2 * nx - 1, 2 * ny - 1),
            Topology::Periodic => (lx / nx as f64, ly / ny as f64, 2 * nx, 2 * ny),
        };
        let mut i_points = Vec::new();
        let mut c_points = Vec::new();
        for q in (0..nq).step_by(2) {
            for p in (1..np).step_by(2) {
                i_points.push((p, q));
            }
        }
        let n_xfaces = i_points.len();
        for q in (1..nq).step_by(2) {
            for p in (0..np).step_by(2) {
                i_points.push((p, q));
            }
        }
        for q in (0..nq).step_by(2) {
            for p in (0..np).step_by(2) {
                c_points.push((p, q));
            }
        }
        let n_centers = c_points.len();
        for q in (1..nq).step_by(2) {
            for p in (1..np).step_by(2) {
                c_points.push((p, q));
            }
        }
        let mut i_lookup = vec![NONE; np * nq];
        let mut c_lookup = vec![NONE; np * nq];
        for (k, &(p, q)) in i_points.iter().enumerate() {
            i_lookup[q * np + p] = k;
        }
        for (k, &(p, q)) in c_points.iter().enumerate() {
            c_lookup[q * np + p] = k;
        }
        let mut grid = StaggeredGrid {
            nx,
            ny,
            domain,
            topology,
            dx,
            dy,
            dzeta: dx * dy,
            np,
            nq,
            i_points,
            c_points,
            n_centers,
            n_xfaces,
            i_lookup,
            c_lookup,
            boundary_rows: Vec::new(),
            c_weight: Vec::new(),
            i_weight: Vec::new(),
        };
        grid.c_weight = (0..grid.n_c()).map(|k| grid.trapezoid(grid.c_points[k])).collect();
        grid.i_weight = (0..grid.n_i()).map(|k| grid.trapezoid(grid.i_points[k])).collect();
        if topology == Topology::Bounded {
            for k in 0..grid.n_i() {
                if let Some(wall) = grid.wall_of_i(k) {
                    grid.boundary_rows.push(BoundaryRow { row: k, wall, normal: wall.normal() });
                }
            }
        }
        Ok(grid)
    }

    fn trapezoid(&self, (p, q): (usize, usize)) -> f64 {
        if self.topology == Topology::Periodic {
            return 1.0;
        }
        let fx = if p == 0 || p == self.np - 1 { 0.5 } else { 1.0 };
        let fy = if q == 0 || q == self.nq - 1 { 0.5 } else { 1.0 };
        fx * fy
    }

    pub fn n_i(&self) -> usize {
        self.i_points.len()
    }

    pub fn n_c(&self) -> usize {
        self.c_points.len()
    }

    pub fn idx_i(&self, p: usize, q: usize) -> Option<usize> {
        if p >= self.np || q >= self.nq {
            return None;
        }
        let k = self.i_lookup[q * self.np + p];
        (k != NONE).then_some(k)
    }

    pub fn idx_c(&self, p: usize, q: usize) -> Option<usize> {
        if p >= self.np || q >= self.nq {
            return None;
        }
        let k = self.c_lookup[q * self.np + p];
        (k != NONE).then_some(k)
    }

    pub fn coord(&self, (p, q): (usize, usize)) -> (f64, f64) {
        (
            self.domain.x0 + p as f64 * 0.5 * self.dx,
            self.domain.y0 + q as f64 * 0.5 * self.dy,
        )
    }

    pub fn coord_i(&self, k: usize) -> (f64, f64) {
        self.coord(self.i_points[k])
    }

    pub fn coord_c(&self, k: usize) -> (f64, f64) {
        self.coord(self.c_points[k])
    }

    pub fn kind_i(&self, k: usize) -> Lattice {
        if k < self.n_xfaces {
            Lattice::XFace
        } else {
            Lattice::YFace
        }
    }

    pub fn kind_c(&self, k: usize) -> Lattice {
        if k < self.n_centers {
            Lattice::Center
        } else {
            Lattice::Corner
        }
    }

    pub fn spacing(&self, v: usize) -> f64 {
        if v == 0 {
            self.dx
        } else {
            self.dy
        }
    }

    /// Walls a point lies on (empty for periodic grids).
    pub fn walls_of(&self, (p, q): (usize, usize)) -> Vec<Wall> {
        let mut w = Vec::new();
        if self.topology == Topology::Periodic {
            return w;
        }
        if p == 0 {
            w.push(Wall::Left);
        }
        if p == self.np - 1 {
            w.push(Wall::Right);
        }
        if q == 0 {
            w.push(Wall::Bottom);
        }
        if q == self.nq - 1 {
            w.push(Wall::Top);
        }
        w
    }

    pub fn walls_of_c(&self, k: usize) -> Vec<Wall> {
        self.walls_of(self.c_points[k])
    }

    fn wall_of_i(&self, k: usize) -> Option<Wall> {
        // An interface point touches at most one wall.
        self.walls_of(self.i_points[k]).first().copied()
    }

    /// The two wall centers adjacent to a boundary interface row, along the wall.
    pub fn row_wall_centers(&self, row: usize, wall: Wall) -> [usize; 2] {
        let (p, q) = self.i_points[row];
        match wall.axis() {
            0 => [self.idx_c(p, q - 1).unwrap(), self.idx_c(p, q + 1).unwrap()],
            _ => [self.idx_c(p - 1, q).unwrap(), self.idx_c(p + 1, q).unwrap()],
        }
    }

    /// Boundary interface rows adjacent to a K^C point (used to average the
    /// boundary consistency value onto wall centers).
    pub fn adjacent_boundary_rows(&self, k: usize) -> Vec<usize> {
        let (p, q) = self.c_points[k];
        let mut out = Vec::new();
        let cand = [
            (p as i64 - 1, q as i64),
            (p as i64 + 1, q as i64),
            (p as i64, q as i64 - 1),
            (p as i64, q as i64 + 1),
        ];
        for (a, b) in cand {
            if a < 0 || b < 0 {
                continue;
            }
            if let Some(r) = self.idx_i(a as usize, b as usize) {
                if self.wall_of_i(r).is_some() {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Row index of each boundary row in `boundary_rows`, or `None`.
    pub fn boundary_position(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.n_i()];
        for (b, br) in self.boundary_rows.iter().enumerate() {
            pos[br.row] = Some(b);
        }
        pos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallKind {
    /// Wall values imposed; ghost layer mirrors through the wall value.
    Dirichlet,
    /// Even reflection of scalars, odd reflection of normal fluxes.
    Reflective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Periodic,
    /// Per-wall closure in `Wall::index` order.
    Walls([WallKind; 4]),
}

impl Closure {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Closure::Periodic),
            "dirichlet-ghost" => Ok(Closure::Walls([WallKind::Dirichlet; 4])),
            "reflective" => Ok(Closure::Walls([WallKind::Reflective; 4])),
            other => Err(Error::Config(format!("unknown closure '{other}'"))),
        }
    }

    fn wall(&self, w: Wall) -> WallKind {
        match self {
            Closure::Periodic => WallKind::Dirichlet,
            Closure::Walls(k) => k[w.index()],
        }
    }
}

/// Difference operators; index `[v]` selects the axis.
#[derive(Debug, Clone)]
pub struct DiffOps {
    /// D⁺_v on K^I.
    pub dp: [Csr; 2],
    /// D⁻_v on K^I.
    pub dm: [Csr; 2],
    /// Wide centered difference D^c_v on K^I.
    pub dc: [Csr; 2],
    /// δ⁰_v, K^C scalars to K^I.
    pub grad0: [Csr; 2],
    /// D⁰_v, K^I fields to K^C.
    pub div0: [Csr; 2],
}

struct Resolver<'a> {
    g: &'a StaggeredGrid,
    closure: Closure,
}

impl Resolver<'_> {
    fn shift(&self, (p, q): (usize, usize), v: usize, s: i64) -> (i64, i64) {
        if v == 0 {
            (p as i64 + s, q as i64)
        } else {
            (p as i64, q as i64 + s)
        }
    }

    fn wrap(&self, (a, b): (i64, i64)) -> (usize, usize) {
        let np = self.g.np as i64;
        let nq = self.g.nq as i64;
        (a.rem_euclid(np) as usize, b.rem_euclid(nq) as usize)
    }

    fn in_range(&self, (a, b): (i64, i64)) -> bool {
        a >= 0 && b >= 0 && (a as usize) < self.g.np && (b as usize) < self.g.nq
    }

    /// Wall crossed and mirrored index for an out-of-range access along v.
    fn mirror(&self, (a, b): (i64, i64), v: usize) -> (Wall, (usize, usize)) {
        let pmax = self.g.np as i64 - 1;
        let qmax = self.g.nq as i64 - 1;
        if v == 0 {
            if a < 0 {
                (Wall::Left, ((-a) as usize, b as usize))
            } else {
                (Wall::Right, ((2 * pmax - a) as usize, b as usize))
            }
        } else if b < 0 {
            (Wall::Bottom, (a as usize, (-b) as usize))
        } else {
            (Wall::Top, (a as usize, (2 * qmax - b) as usize))
        }
    }

    /// K^C value seen from an interface point stepping one half-cell along v.
    fn c_access(&self, from: (usize, usize), v: usize, s: i64) -> Vec<(usize, f64)> {
        let t = self.shift(from, v, s);
        if self.closure == Closure::Periodic {
            let (a, b) = self.wrap(t);
            return vec![(self.g.idx_c(a, b).unwrap(), 1.0)];
        }
        if self.in_range(t) {
            return vec![(self.g.idx_c(t.0 as usize, t.1 as usize).unwrap(), 1.0)];
        }
        let (wall, m) = self.mirror(t, v);
        let mirror = self.g.idx_c(m.0, m.1).unwrap();
        match self.closure.wall(wall) {
            WallKind::Reflective => vec![(mirror, 1.0)],
            WallKind::Dirichlet => {
                // 2·u_wall − u_mirror, u_wall the mean of the two wall
                // centers flanking the interface point.
                let (p, q) = from;
                let (c1, c2) = if v == 0 {
                    (self.g.idx_c(p, q - 1).unwrap(), self.g.idx_c(p, q + 1).unwrap())
                } else {
                    (self.g.idx_c(p - 1, q).unwrap(), self.g.idx_c(p + 1, q).unwrap())
                };
                vec![(c1, 1.0), (c2, 1.0), (mirror, -1.0)]
            }
        }
    }

    /// K^I value seen from a K^C point stepping one half-cell along v.
    fn i_access_from_c(&self, from: (usize, usize), v: usize, s: i64) -> Vec<(usize, f64)> {
        let t = self.shift(from, v, s);
        if self.closure == Closure::Periodic {
            let (a, b) = self.wrap(t);
            return vec![(self.g.idx_i(a, b).unwrap(), 1.0)];
        }
        if self.in_range(t) {
            return vec![(self.g.idx_i(t.0 as usize, t.1 as usize).unwrap(), 1.0)];
        }
        let (wall, m) = self.mirror(t, v);
        let mirror = self.g.idx_i(m.0, m.1).unwrap();
        match self.closure.wall(wall) {
            WallKind::Reflective => vec![(mirror, -1.0)],
            WallKind::Dirichlet => vec![(mirror, 1.0)],
        }
    }

    /// K^I value seen from a K^I point stepping one full cell along v;
    /// outside the domain the nearest same-lattice point is copied.
    fn i_access(&self, from: (usize, usize), v: usize, s: i64) -> usize {
        let mut t = self.shift(from, v, 2 * s);
        if self.closure == Closure::Periodic {
            let (a, b) = self.wrap(t);
            return self.g.idx_i(a, b).unwrap();
        }
        let (pmax, qmax) = (self.g.np as i64 - 1, self.g.nq as i64 - 1);
        while t.0 < 0 {
            t.0 += 2;
        }
        while t.0 > pmax {
            t.0 -= 2;
        }
        while t.1 < 0 {
            t.1 += 2;
        }
        while t.1 > qmax {
            t.1 -= 2;
        }
        self.g.idx_i(t.0 as usize, t.1 as usize).unwrap()
    }
}

impl DiffOps {
    pub fn new(grid: &StaggeredGrid, closure: Closure) -> Result<Self> {
        match (grid.topology, closure) {
            (Topology::Periodic, Closure::Periodic) | (Topology::Bounded, Closure::Walls(_)) => {}
            _ => {
                return Err(Error::Config(
                    "closure does not match grid topology (periodic closure needs a periodic grid)".into(),
                ))
            }
        }
        let r = Resolver { g: grid, closure };
        let ni = grid.n_i();
        let nc = grid.n_c();
        let build = |v: usize| {
            let h = grid.spacing(v);
            let mut dp = Vec::with_capacity(ni);
            let mut dm = Vec::with_capacity(ni);
            let mut dc = Vec::with_capacity(ni);
            let mut g0 = Vec::with_capacity(ni);
            for k in 0..ni {
                let pt = grid.i_points[k];
                let up = r.i_access(pt, v, 1);
                let dn = r.i_access(pt, v, -1);
                dp.push(vec![(up, 1.0 / h), (k, -1.0 / h)]);
                dm.push(vec![(k, 1.0 / h), (dn, -1.0 / h)]);
                dc.push(vec![(up, 0.5 / h), (dn, -0.5 / h)]);
                let mut row: Vec<(usize, f64)> =
                    r.c_access(pt, v, 1).into_iter().map(|(c, a)| (c, a / h)).collect();
                row.extend(r.c_access(pt, v, -1).into_iter().map(|(c, a)| (c, -a / h)));
                g0.push(row);
            }
            let mut d0 = Vec::with_capacity(nc);
            for k in 0..nc {
                let pt = grid.c_points[k];
                let mut row: Vec<(usize, f64)> =
                    r.i_access_from_c(pt, v, 1).into_iter().map(|(c, a)| (c, a / h)).collect();
                row.extend(r.i_access_from_c(pt, v, -1).into_iter().map(|(c, a)| (c, -a / h)));
                d0.push(row);
            }
            (
                Csr::from_rows(ni, dp),
                Csr::from_rows(ni, dm),
                Csr::from_rows(ni, dc),
                Csr::from_rows(nc, g0),
                Csr::from_rows(ni, d0),
            )
        };
        let (dpx, dmx, dcx, gx, dx) = build(0);
        let (dpy, dmy, dcy, gy, dy) = build(1);
        Ok(DiffOps {
            dp: [dpx, dpy],
            dm: [dmx, dmy],
            dc: [dcx, dcy],
            grad0: [gx, gy],
            div0: [dx, dy],
        })
    }
}
