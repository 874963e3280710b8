use super::grid::{graded_nodes, Grading};
use super::quadrature::{GAUSS3, TRI6};
use super::warp::{sphere_area, WarpProfile};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Circle,
    Disc,
    FlatTorus,
    RadialBall,
    WarpedProduct,
    TriangleMesh,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Interval => "interval",
            DomainKind::Circle => "circle",
            DomainKind::Disc => "disc",
            DomainKind::FlatTorus => "flat_torus",
            DomainKind::RadialBall => "radial_ball",
            DomainKind::WarpedProduct => "warped_product",
            DomainKind::TriangleMesh => "triangle_mesh",
        }
    }

    /// Kinds whose mesh is a 1-D reduction in a single coordinate.
    pub fn is_one_dimensional(self) -> bool {
        matches!(
            self,
            DomainKind::Interval | DomainKind::Circle | DomainKind::RadialBall | DomainKind::WarpedProduct
        )
    }

    /// Kinds described by a radial or axial coordinate with spherical slices.
    pub fn is_reduced(self) -> bool {
        matches!(self, DomainKind::RadialBall | DomainKind::WarpedProduct)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(s) => s.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Serializable description of a domain, as accepted by [`build_domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainDescriptor {
    Interval {
        #[serde(default)]
        a: f64,
        #[serde(default = "default_one")]
        b: f64,
        n: usize,
        #[serde(default)]
        grading: Grading,
    },
    Circle {
        #[serde(default = "default_two_pi")]
        length: f64,
        n: usize,
    },
    Disc {
        #[serde(default = "default_one")]
        radius: f64,
        rings: usize,
        sectors: usize,
        #[serde(default)]
        grading: Grading,
    },
    FlatTorus {
        #[serde(default = "default_one")]
        lx: f64,
        #[serde(default = "default_one")]
        ly: f64,
        nx: usize,
        ny: usize,
        #[serde(default)]
        grading_x: Grading,
        #[serde(default)]
        grading_y: Grading,
    },
    RadialBall {
        dimension: usize,
        #[serde(default = "default_one")]
        radius: f64,
        n: usize,
        #[serde(default)]
        mode: usize,
        #[serde(default)]
        grading: Grading,
    },
    WarpedProduct {
        dimension: usize,
        profile: WarpProfile,
        n: usize,
        #[serde(default)]
        mode: usize,
        #[serde(default)]
        grading: Grading,
    },
    /// Triangle mesh read from an OFF file. Relative paths resolve against
    /// the process working directory.
    OffMesh { path: String },
}

fn default_one() -> f64 {
    1.0
}

fn default_two_pi() -> f64 {
    2.0 * PI
}

impl DomainDescriptor {
    /// Same descriptor with a different angular mode (reduced kinds only).
    pub fn with_mode(&self, l: usize) -> DomainDescriptor {
        let mut d = self.clone();
        match &mut d {
            DomainDescriptor::RadialBall { mode, .. } | DomainDescriptor::WarpedProduct { mode, .. } => *mode = l,
            _ => {}
        }
        d
    }

    /// Appends mandatory grid points (radial or axial coordinate).
    pub fn with_breakpoints(&self, pts: &[f64]) -> DomainDescriptor {
        let mut d = self.clone();
        match &mut d {
            DomainDescriptor::Interval { grading, .. }
            | DomainDescriptor::Disc { grading, .. }
            | DomainDescriptor::RadialBall { grading, .. }
            | DomainDescriptor::WarpedProduct { grading, .. } => grading.breakpoints.extend_from_slice(pts),
            _ => {}
        }
        d
    }
}

/// A discretized manifold-with-density carrier.
///
/// Nodes are stored in ℝ³ so that triangle meshes of embedded surfaces can
/// be ingested; 1-D kinds use only the first coordinate and planar kinds the
/// first two.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    dimension: usize,
    nodes: Vec<[f64; 3]>,
    cells: Cells,
    boundary_nodes: Vec<usize>,
    angular_mode: usize,
    warp: Option<WarpProfile>,
    period: Option<[f64; 2]>,
    conformal: Option<Vec<f64>>,
    node_weights: Vec<f64>,
    volume: f64,
}

/// Geometry of one 1-D cell: left coordinate and length.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentGeom {
    pub x0: f64,
    pub len: f64,
}

/// Geometry of one triangle: area and basis-gradient inner products
/// `D_aᵀ G⁻¹ D_b` (the P1 stiffness per unit area).
#[derive(Debug, Clone, Copy)]
pub(crate) struct TriangleGeom {
    pub area: f64,
    pub grad: [[f64; 3]; 3],
}

impl Domain {
    fn finish(mut self) -> Result<Self> {
        self.node_weights = self.compute_node_weights()?;
        self.volume = self.node_weights.iter().sum();
        if !(self.volume > 0.0) {
            return Err(Error::InvalidDescriptor("domain has zero volume".into()));
        }
        Ok(self)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn angular_mode(&self) -> usize {
        self.angular_mode
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn warp(&self) -> Option<&WarpProfile> {
        self.warp.as_ref()
    }

    pub fn period(&self) -> Option<[f64; 2]> {
        self.period
    }

    pub fn conformal_factor(&self) -> Option<&[f64]> {
        self.conformal.as_deref()
    }

    /// Lumped weights `c_k = ∫ φ_k v_g`; they sum to the volume and give
    /// exact integrals of nodal-linear fields.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Coordinate used by radial families: |x| on planar kinds, the 1-D
    /// coordinate otherwise.
    pub fn radial_coordinate(&self, node: usize) -> f64 {
        let p = self.nodes[node];
        match self.kind {
            DomainKind::Disc | DomainKind::TriangleMesh | DomainKind::FlatTorus => p[0].hypot(p[1]),
            _ => p[0],
        }
    }

    /// Same domain with another angular mode. Only valid on reduced kinds.
    pub fn with_angular_mode(&self, l: usize) -> Result<Domain> {
        if l > 0 && !self.kind.is_reduced() {
            return Err(Error::InvalidDescriptor(format!(
                "angular mode {l} requires a radial or warped domain"
            )));
        }
        let mut d = self.clone();
        d.angular_mode = l;
        Ok(d)
    }

    /// Nodes where the warp vanishes (poles of a reduced model).
    pub fn pole_nodes(&self) -> Vec<usize> {
        match &self.warp {
            Some(w) => (0..self.nodes.len()).filter(|&i| w.eval(self.nodes[i][0]) == 0.0).collect(),
            None => vec![],
        }
    }

    /// Geometric measure weight at a 1-D coordinate: `|S^{n−1}| γ^{n−1}` on
    /// reduced kinds, 1 on flat 1-D kinds.
    pub(crate) fn measure_weight(&self, x: f64) -> f64 {
        match &self.warp {
            Some(w) => sphere_area(self.dimension) * w.eval(x).powi(self.dimension as i32 - 1),
            None => 1.0,
        }
    }

    /// Warp γ at a 1-D coordinate (1 for flat kinds).
    pub(crate) fn warp_at(&self, x: f64) -> f64 {
        self.warp.as_ref().map_or(1.0, |w| w.eval(x))
    }

    pub(crate) fn segment_geom(&self, seg: [usize; 2]) -> SegmentGeom {
        let x0 = self.nodes[seg[0]][0];
        let mut len = self.nodes[seg[1]][0] - x0;
        if let Some([l, _]) = self.period {
            if len <= 0.0 {
                len += l;
            }
        }
        SegmentGeom { x0, len }
    }

    pub(crate) fn triangle_geom(&self, tri: [usize; 3]) -> Result<TriangleGeom> {
        let p0 = self.nodes[tri[0]];
        let rel = |q: [f64; 3]| -> [f64; 3] {
            let mut d = [q[0] - p0[0], q[1] - p0[1], q[2] - p0[2]];
            if let Some(per) = self.period {
                for a in 0..2 {
                    if per[a] > 0.0 {
                        if d[a] > per[a] / 2.0 {
                            d[a] -= per[a];
                        } else if d[a] < -per[a] / 2.0 {
                            d[a] += per[a];
                        }
                    }
                }
            }
            d
        };
        let e1 = rel(self.nodes[tri[1]]);
        let e2 = rel(self.nodes[tri[2]]);
        let d = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let (g11, g12, g22) = (d(e1, e1), d(e1, e2), d(e2, e2));
        let det = g11 * g22 - g12 * g12;
        if !(det > 1e-300) {
            return Err(Error::InvalidDescriptor(format!("degenerate triangle {tri:?}")));
        }
        let area = 0.5 * det.sqrt();
        let inv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
        let dphi = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut grad = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let (da, db) = (dphi[a], dphi[b]);
                grad[a][b] = da[0] * (inv[0][0] * db[0] + inv[0][1] * db[1])
                    + da[1] * (inv[1][0] * db[0] + inv[1][1] * db[1]);
            }
        }
        Ok(TriangleGeom { area, grad })
    }

    fn compute_node_weights(&self) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.nodes.len()];
        match &self.cells {
            Cells::Segments(segs) => {
                for &s in segs {
                    let g = self.segment_geom(s);
                    for &(xi, w) in GAUSS3.iter() {
                        let wq = w * g.len * self.measure_weight(g.x0 + xi * g.len);
                        c[s[0]] += wq * (1.0 - xi);
                        c[s[1]] += wq * xi;
                    }
                }
            }
            Cells::Triangles(tris) => {
                for &t in tris {
                    let g = self.triangle_geom(t)?;
                    for &(bary, w) in TRI6.iter() {
                        let conf = match &self.conformal {
                            Some(f) => (0..3).map(|a| bary[a] * f[t[a]]).sum(),
                            None => 1.0,
                        };
                        for a in 0..3 {
                            c[t[a]] += g.area * w * conf * bary[a];
                        }
                    }
                }
            }
        }
        Ok(c)
    }

    /// Integral of a nodal-linear field against the volume measure.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.node_weights.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Multiplies the 2-D mass measure by a positive nodal factor.
    ///
    /// In two dimensions the Dirichlet energy is conformally invariant, so
    /// the stiffness form is untouched and only the volume form changes.
    pub fn conformal_rescale_2d(&self, factor: &[f64]) -> Result<Domain> {
        if self.dimension != 2 || !matches!(self.cells, Cells::Triangles(_)) {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        if factor.len() != self.nodes.len() {
            return Err(Error::Shape {
                expected: self.nodes.len(),
                got: factor.len(),
            });
        }
        if factor.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidDensity("conformal factor must be positive".into()));
        }
        let mut d = self.clone();
        d.conformal = Some(match &self.conformal {
            Some(old) => old.iter().zip(factor).map(|(a, b)| a * b).collect(),
            None => factor.to_vec(),
        });
        d.finish()
    }
}

/// Builds a domain from its descriptor. OFF descriptors must be resolved by
/// the caller with [`parse_off`].
pub fn build_domain(desc: &DomainDescriptor) -> Result<Domain> {
    match desc {
        DomainDescriptor::Interval { a, b, n, grading } => interval(*a, *b, *n, grading),
        DomainDescriptor::Circle { length, n } => circle(*length, *n),
        DomainDescriptor::Disc {
            radius,
            rings,
            sectors,
            grading,
        } => disc(*radius, *rings, *sectors, grading),
        DomainDescriptor::FlatTorus {
            lx,
            ly,
            nx,
            ny,
            grading_x,
            grading_y,
        } => flat_torus(*lx, *ly, *nx, *ny, grading_x, grading_y),
        DomainDescriptor::RadialBall {
            dimension,
            radius,
            n,
            mode,
            grading,
        } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidDescriptor("radius must be positive".into()));
            }
            warped(*dimension, WarpProfile::Radial { radius: *radius }, *n, *mode, grading, DomainKind::RadialBall)
        }
        DomainDescriptor::WarpedProduct {
            dimension,
            profile,
            n,
            mode,
            grading,
        } => warped(*dimension, profile.clone(), *n, *mode, grading, DomainKind::WarpedProduct),
        DomainDescriptor::OffMesh { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidDescriptor(format!("cannot read OFF mesh `{path}`: {e}")))?;
            parse_off(&text).map_err(|e| e.context(format!("OFF mesh `{path}`")))
        }
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidDescriptor(format!("resolution {n} is below the minimum of 4")));
    }
    Ok(())
}

fn check_monotone(x: &[f64]) -> Result<()> {
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidDescriptor("grid is not strictly increasing".into()));
    }
    Ok(())
}

fn empty(kind: DomainKind, dimension: usize) -> Domain {
    Domain {
        kind,
        dimension,
        nodes: vec![],
        cells: Cells::Segments(vec![]),
        boundary_nodes: vec![],
        angular_mode: 0,
        warp: None,
        period: None,
        conformal: None,
        node_weights: vec![],
        volume: 0.0,
    }
}

pub fn interval(a: f64, b: f64, n: usize, grading: &Grading) -> Result<Domain> {
    check_resolution(n)?;
    let x = graded_nodes(a, b, n, grading)?;
    check_monotone(&x)?;
    let m = x.len();
    let mut d = empty(DomainKind::Interval, 1);
    d.nodes = x.iter().map(|&v| [v, 0.0, 0.0]).collect();
    d.cells = Cells::Segments((0..m - 1).map(|i| [i, i + 1]).collect());
    d.boundary_nodes = vec![0, m - 1];
    d.finish()
}

pub fn circle(length: f64, n: usize) -> Result<Domain> {
    check_resolution(n)?;
    if !(length > 0.0) {
        return Err(Error::InvalidDescriptor("circle length must be positive".into()));
    }
    let mut d = empty(DomainKind::Circle, 1);
    d.nodes = (0..n).map(|i| [length * i as f64 / n as f64, 0.0, 0.0]).collect();
    d.cells = Cells::Segments((0..n).map(|i| [i, (i + 1) % n]).collect());
    d.period = Some([length, 0.0]);
    d.finish()
}

/// Structured polar mesh: a center node plus rings of `sectors` nodes at
/// aligned angles. Every quad between rings is split along the same
/// rotational diagonal, so the mesh is invariant under rotation by 2π/S
/// and rotation-degenerate eigenpairs stay exactly degenerate.
pub fn disc(radius: f64, rings: usize, sectors: usize, grading: &Grading) -> Result<Domain> {
    check_resolution(rings)?;
    if sectors < 6 {
        return Err(Error::InvalidDescriptor("disc needs at least 6 sectors".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidDescriptor("radius must be positive".into()));
    }
    let mut g = grading.clone();
    if g.factor.is_some() && g.focus.is_empty() {
        g.focus.push(0.0);
    }
    let r = graded_nodes(0.0, radius, rings, &g)?;
    check_monotone(&r)?;
    let m = r.len() - 1;
    let s = sectors;
    let mut nodes = vec![[0.0, 0.0, 0.0]];
    for &ri in &r[1..] {
        for j in 0..s {
            let th = 2.0 * PI * j as f64 / s as f64;
            nodes.push([ri * th.cos(), ri * th.sin(), 0.0]);
        }
    }
    let idx = |ring: usize, j: usize| 1 + (ring - 1) * s + (j % s);
    let mut tris = Vec::with_capacity(s * (2 * m - 1));
    for j in 0..s {
        tris.push([0, idx(1, j), idx(1, j + 1)]);
    }
    for ring in 1..m {
        for j in 0..s {
            let (a, b, c, dd) = (idx(ring, j), idx(ring + 1, j), idx(ring + 1, j + 1), idx(ring, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, dd]);
        }
    }
    let mut d = empty(DomainKind::Disc, 2);
    d.nodes = nodes;
    d.cells = Cells::Triangles(tris);
    d.boundary_nodes = (0..s).map(|j| idx(m, j)).collect();
    d.finish()
}

/// Periodic grid on `[0, lx) × [0, ly)` split into right triangles along
/// the (i, j)–(i+1, j+1) diagonal.
pub fn flat_torus(lx: f64, ly: f64, nx: usize, ny: usize, gx: &Grading, gy: &Grading) -> Result<Domain> {
    check_resolution(nx)?;
    check_resolution(ny)?;
    if !(lx > 0.0 && ly > 0.0) {
        return Err(Error::InvalidDescriptor("torus side lengths must be positive".into()));
    }
    let mut x = graded_nodes(0.0, lx, nx, gx)?;
    let mut y = graded_nodes(0.0, ly, ny, gy)?;
    x.pop();
    y.pop();
    let (mx, my) = (x.len(), y.len());
    let mut d = empty(DomainKind::FlatTorus, 2);
    d.nodes = (0..my)
        .flat_map(|j| x.iter().map(move |&xi| (xi, j)))
        .map(|(xi, j)| [xi, y[j], 0.0])
        .collect();
    let id = |i: usize, j: usize| (i % mx) + mx * (j % my);
    let mut tris = Vec::with_capacity(2 * mx * my);
    for j in 0..my {
        for i in 0..mx {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    d.cells = Cells::Triangles(tris);
    d.period = Some([lx, ly]);
    d.finish()
}

fn warped(
    dimension: usize,
    profile: WarpProfile,
    n: usize,
    mode: usize,
    grading: &Grading,
    kind: DomainKind,
) -> Result<Domain> {
    check_resolution(n)?;
    if dimension < 2 {
        return Err(Error::InvalidDescriptor("reduced models need dimension ≥ 2".into()));
    }
    profile.validate()?;
    let (t0, t1) = profile.range();
    let mut g = grading.clone();
    g.breakpoints.extend(profile.knots());
    if kind == DomainKind::RadialBall && g.factor.is_some() && g.focus.is_empty() {
        g.focus.push(0.0);
    }
    let t = graded_nodes(t0, t1, n, &g)?;
    check_monotone(&t)?;
    let m = t.len();
    let mut d = empty(kind, dimension);
    d.nodes = t.iter().map(|&v| [v, 0.0, 0.0]).collect();
    d.cells = Cells::Segments((0..m - 1).map(|i| [i, i + 1]).collect());
    d.boundary_nodes = [0, m - 1]
        .into_iter()
        .filter(|&i| profile.eval(t[i]) > 0.0)
        .collect();
    d.angular_mode = mode;
    d.warp = Some(profile);
    d.finish()
}

/// Parses an ASCII OFF triangle mesh. Polygonal faces are fan-triangulated.
/// A vertex set lying in the plane z = 0 yields a planar mesh.
pub fn parse_off(text: &str) -> Result<Domain> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| Error::MeshParse {
        line,
        message: message.to_string(),
    };
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let mut rest_of_header: Vec<&str> = header.split_whitespace().collect();
    if rest_of_header.first() != Some(&"OFF") {
        return Err(err(hline, "missing OFF header"));
    }
    rest_of_header.remove(0);
    let (cline, counts): (usize, Vec<&str>) = if rest_of_header.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| err(hline, "missing counts line"))?;
        (l, c.split_whitespace().collect())
    } else {
        (hline, rest_of_header)
    };
    let parse_usize = |s: &str, line: usize| s.parse::<usize>().map_err(|_| err(line, "expected an integer"));
    if counts.len() < 2 {
        return Err(err(cline, "counts line needs vertex and face counts"));
    }
    let nv = parse_usize(counts[0], cline)?;
    let nf = parse_usize(counts[1], cline)?;
    let mut nodes = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| err(cline, "too few vertex lines"))?;
        let v: Vec<f64> = s
            .split_whitespace()
            .take(3)
            .map(|x| x.parse::<f64>().map_err(|_| err(l, "expected a coordinate")))
            .collect::<Result<_>>()?;
        if v.len() < 2 {
            return Err(err(l, "vertex needs at least two coordinates"));
        }
        nodes.push([v[0], v[1], v.get(2).copied().unwrap_or(0.0)]);
    }
    let mut tris = Vec::new();
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| err(cline, "too few face lines"))?;
        let f: Vec<usize> = s.split_whitespace().map(|x| parse_usize(x, l)).collect::<Result<_>>()?;
        let k = *f.first().ok_or_else(|| err(l, "empty face"))?;
        if k < 3 || f.len() < k + 1 {
            return Err(err(l, "face needs at least three vertex indices"));
        }
        let ids = &f[1..=k];
        if ids.iter().any(|&i| i >= nv) {
            return Err(err(l, "vertex index out of range"));
        }
        for j in 1..k - 1 {
            tris.push([ids[0], ids[j], ids[j + 1]]);
        }
    }
    if tris.is_empty() {
        return Err(err(cline, "mesh has no faces"));
    }
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in &tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut boundary: Vec<usize> = edge_count
        .iter()
        .filter(|(_, &c)| c == 1)
        .flat_map(|(&(a, b), _)| [a, b])
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    let mut d = empty(DomainKind::TriangleMesh, 2);
    d.nodes = nodes;
    d.cells = Cells::Triangles(tris);
    d.boundary_nodes = boundary;
    d.finish()
}

/// Writes a triangle domain as OFF text (planar coordinates keep z = 0).
pub fn write_off(domain: &Domain) -> Result<String> {
    let Cells::Triangles(tris) = domain.cells() else {
        return Err(Error::UnsupportedDimension(domain.dimension()));
    };
    let mut s = format!("OFF\n{} {} 0\n", domain.n_nodes(), tris.len());
    for p in domain.nodes() {
        s.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    for t in tris {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_of_basic_domains() {
        let d = interval(0.0, 1.0, 100, &Grading::uniform()).unwrap();
        assert!((d.volume() - 1.0).abs() < 1e-12);
        let c = circle(2.0 * PI, 128).unwrap();
        assert!((c.volume() - 2.0 * PI).abs() < 1e-12);
        assert!(c.boundary_nodes().is_empty());
        let r = build_domain(&DomainDescriptor::RadialBall {
            dimension: 2,
            radius: 1.0,
            n: 200,
            mode: 0,
            grading: Grading::uniform(),
        })
        .unwrap();
        assert!((r.volume() - PI).abs() < 1e-12 * PI);
        let r3 = build_domain(&DomainDescriptor::RadialBall {
            dimension: 3,
            radius: 2.0,
            n: 50,
            mode: 0,
            grading: Grading::uniform(),
        })
        .unwrap();
        assert!((r3.volume() - 32.0 * PI / 3.0).abs() < 1e-12 * r3.volume());
    }

    #[test]
    fn torus_and_disc_areas() {
        let t = flat_torus(1.0, 2.0, 8, 6, &Grading::uniform(), &Grading::uniform()).unwrap();
        assert!((t.volume() - 2.0).abs() < 1e-12);
        assert!(t.boundary_nodes().is_empty());
        let d = disc(1.0, 8, 16, &Grading::uniform()).unwrap();
        let polygon = 0.5 * 16.0 * (2.0 * PI / 16.0).sin();
        assert!((d.volume() - polygon).abs() < 1e-12);
        assert_eq!(d.boundary_nodes().len(), 16);
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!(interval(0.0, 1.0, 2, &Grading::uniform()).is_err());
        assert!(circle(-1.0, 10).is_err());
        let bad = WarpProfile::Samples {
            t: vec![0.0, 2.0, 1.0],
            gamma: vec![1.0, 1.0, 1.0],
        };
        assert!(build_domain(&DomainDescriptor::WarpedProduct {
            dimension: 2,
            profile: bad,
            n: 10,
            mode: 0,
            grading: Grading::uniform()
        })
        .is_err());
    }

    #[test]
    fn off_roundtrip() {
        let d = disc(1.0, 4, 8, &Grading::uniform()).unwrap();
        let text = write_off(&d).unwrap();
        let e = parse_off(&text).unwrap();
        assert_eq!(e.n_nodes(), d.n_nodes());
        assert!((e.volume() - d.volume()).abs() < 1e-12);
        assert_eq!(e.boundary_nodes().len(), 8);
    }

    #[test]
    fn off_errors_carry_line_numbers() {
        let e = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n").unwrap_err();
        assert_eq!(
            e,
            Error::MeshParse {
                line: 6,
                message: "vertex index out of range".into()
            }
        );
        assert!(matches!(parse_off("PLY\n"), Err(Error::MeshParse { line: 1, .. })));
    }

    #[test]
    fn conformal_rescale_scales_volume() {
        let d = disc(1.0, 6, 12, &Grading::uniform()).unwrap();
        let f = vec![4.0; d.n_nodes()];
        let e = d.conformal_rescale_2d(&f).unwrap();
        assert!((e.volume() - 4.0 * d.volume()).abs() < 1e-12);
        let r = circle(1.0, 8).unwrap();
        assert_eq!(r.conformal_rescale_2d(&[1.0; 8]).unwrap_err(), Error::UnsupportedDimension(1));
    }
}
