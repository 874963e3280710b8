//! Weighted Cheeger constants
//! `h_{ρ,σ} = inf { |∂D ∖ ∂M|_σ / |D|_ρ : |D|_σ ≤ ½|M|_σ }`.
//!
//! On 1-D carriers (intervals, circles, radial and warped models) the scan
//! is exhaustive over sets bounded by grid nodes. A union of disjoint
//! intervals has ratio `ΣP_i / ΣV_i ≥ min_i P_i/V_i` and each piece inherits
//! the volume constraint, so single intervals (arcs on a circle) already
//! realize the minimum over unions of any number of components. On 2-D
//! meshes only upper bounds are available: level-set sweeps of a function
//! and families of geodesic balls.

use crate::discretize::{assemble_mass, Cells, DensityField, Domain, DomainKind, GAUSS3};
use crate::eigen::{solve_forms, SolveOptions};
use crate::error::{Error, Result};
use crate::BoundaryCondition;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheegerMethod {
    Scan1d {
        #[serde(default = "default_components")]
        max_components: usize,
    },
    /// Level sets of `function` (default: the first eigenvector).
    Sweep {
        #[serde(default)]
        function: Option<Vec<f64>>,
    },
    CandidateBalls { centers: Vec<Vec<f64>>, radii: Vec<f64> },
}

fn default_components() -> usize {
    2
}

impl CheegerMethod {
    pub fn scan() -> Self {
        CheegerMethod::Scan1d { max_components: 2 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheegerMethod::Scan1d { .. } => "scan_1d",
            CheegerMethod::Sweep { .. } => "sweep",
            CheegerMethod::CandidateBalls { .. } => "candidate_balls",
        }
    }
}

/// Description of the optimal cut found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CutWitness {
    /// Cells between sorted positions `start` and `end` of the 1-D node
    /// order; on a circle the range may wrap around.
    Interval { start: usize, end: usize, a: f64, b: f64 },
    /// Node set `{f ≤ level}` (or its complement when `upper` is set).
    LevelSet { level: f64, upper: bool, nodes: Vec<usize> },
    Ball { center: Vec<f64>, radius: f64, nodes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerEstimate {
    pub value: f64,
    pub witness: CutWitness,
    pub method: String,
    /// Exact for the discrete candidate class (only the 1-D scan).
    pub certified: bool,
    pub perimeter: f64,
    pub volume_rho: f64,
    pub volume_sigma: f64,
    pub total_sigma: f64,
}

pub fn cheeger_constant(
    domain: &Domain,
    rho: &DensityField,
    sigma: &DensityField,
    method: &CheegerMethod,
) -> Result<CheegerEstimate> {
    for f in [rho, sigma] {
        if f.values().len() != domain.n_nodes() {
            return Err(Error::Shape {
                expected: domain.n_nodes(),
                got: f.values().len(),
            });
        }
    }
    match method {
        CheegerMethod::Scan1d { max_components } => {
            if *max_components == 0 {
                return Err(Error::InvalidParameter("max_components must be at least 1".into()));
            }
            let line = Line::new(domain, rho.values(), sigma.values())?;
            line.scan()
        }
        CheegerMethod::Sweep { function } => {
            let f = match function {
                Some(f) => {
                    if f.len() != domain.n_nodes() {
                        return Err(Error::Shape {
                            expected: domain.n_nodes(),
                            got: f.len(),
                        });
                    }
                    f.clone()
                }
                None => {
                    let forms = crate::assemble(domain, rho, sigma, &BoundaryCondition::Neumann)?;
                    let s = solve_forms(&forms, &SolveOptions::count(1))?;
                    forms.expand(&s.vectors[1])
                }
            };
            NodeSets::new(domain, rho.values(), sigma.values())?.sweep(&f)
        }
        CheegerMethod::CandidateBalls { centers, radii } => {
            NodeSets::new(domain, rho.values(), sigma.values())?.balls(domain, centers, radii)
        }
    }
}

/// Recomputes (perimeter, ρ-volume, σ-volume) of a witness.
pub fn witness_measures(
    domain: &Domain,
    rho: &DensityField,
    sigma: &DensityField,
    witness: &CutWitness,
) -> Result<(f64, f64, f64)> {
    match witness {
        CutWitness::Interval { start, end, .. } => {
            let line = Line::new(domain, rho.values(), sigma.values())?;
            Ok(line.measures(*start, *end))
        }
        CutWitness::LevelSet { nodes, .. } | CutWitness::Ball { nodes, .. } => {
            let sets = NodeSets::new(domain, rho.values(), sigma.values())?;
            let mut inside = vec![false; domain.n_nodes()];
            nodes.iter().for_each(|&i| inside[i] = true);
            Ok(sets.measures(&inside))
        }
    }
}

/// 1-D carrier in sorted node order with prefix sums of cell masses.
struct Line {
    x: Vec<f64>,
    periodic: bool,
    /// Prefix sums over cells: `cum[k] = Σ_{c<k} ∫_c ρ w`.
    cum_rho: Vec<f64>,
    cum_sigma: Vec<f64>,
    /// Perimeter weight of a cut at each sorted node (0 on ∂M).
    cut: Vec<f64>,
}

impl Line {
    fn new(domain: &Domain, rho: &[f64], sigma: &[f64]) -> Result<Line> {
        if !domain.kind().is_one_dimensional() {
            return Err(Error::Unsupported(format!(
                "scan_1d needs a 1-D or radial domain, got {}",
                domain.kind().name()
            )));
        }
        let Cells::Segments(_) = domain.cells() else {
            return Err(Error::Unsupported("scan_1d needs segment cells".into()));
        };
        let n = domain.n_nodes();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| domain.nodes()[a][0].total_cmp(&domain.nodes()[b][0]));
        let x: Vec<f64> = order.iter().map(|&i| domain.nodes()[i][0]).collect();
        let periodic = domain.kind() == DomainKind::Circle;
        let cells = if periodic { n } else { n - 1 };
        let mut on_boundary = vec![false; n];
        domain.boundary_nodes().iter().for_each(|&i| on_boundary[i] = true);
        let len_of = |c: usize| {
            if c + 1 < n {
                x[c + 1] - x[c]
            } else {
                domain.period().map_or(0.0, |p| p[0]) - x[n - 1] + x[0]
            }
        };
        let integral = |f: &[f64], c: usize| {
            let (i, j) = (order[c], order[(c + 1) % n]);
            let len = len_of(c);
            GAUSS3
                .iter()
                .map(|&(xi, w)| {
                    let v = (1.0 - xi) * f[i] + xi * f[j];
                    w * len * v * domain.measure_weight(x[c] + xi * len)
                })
                .sum::<f64>()
        };
        let mut cum_rho = vec![0.0; cells + 1];
        let mut cum_sigma = vec![0.0; cells + 1];
        for c in 0..cells {
            cum_rho[c + 1] = cum_rho[c] + integral(rho, c);
            cum_sigma[c + 1] = cum_sigma[c] + integral(sigma, c);
        }
        let cut = order
            .iter()
            .enumerate()
            .map(|(k, &i)| if on_boundary[i] { 0.0 } else { sigma[i] * domain.measure_weight(x[k]) })
            .collect();
        Ok(Line {
            x,
            periodic,
            cum_rho,
            cum_sigma,
            cut,
        })
    }

    fn cells(&self) -> usize {
        self.cum_rho.len() - 1
    }

    /// Measures of the cell range starting at node `start` and ending at
    /// node `end` (wrapping on a circle).
    fn measures(&self, start: usize, end: usize) -> (f64, f64, f64) {
        let nc = self.cells();
        let (vr, vs) = if end > start {
            (
                self.cum_rho[end] - self.cum_rho[start],
                self.cum_sigma[end] - self.cum_sigma[start],
            )
        } else {
            (
                self.cum_rho[nc] - self.cum_rho[start] + self.cum_rho[end],
                self.cum_sigma[nc] - self.cum_sigma[start] + self.cum_sigma[end],
            )
        };
        let n = self.x.len();
        (self.cut[start % n] + self.cut[end % n], vr, vs)
    }

    fn scan(&self) -> Result<CheegerEstimate> {
        let n = self.x.len();
        let nc = self.cells();
        let total_sigma = self.cum_sigma[nc];
        let half = 0.5 * total_sigma * (1.0 + 1e-12);
        // best (ratio, start, end) for each start, then a deterministic min
        let per_start: Vec<Option<(f64, usize, usize)>> = (0..n)
            .into_par_iter()
            .map(|s| {
                let mut best: Option<(f64, usize, usize)> = None;
                let ends: Box<dyn Iterator<Item = usize>> = if self.periodic {
                    Box::new((1..n).map(move |d| (s + d) % n))
                } else {
                    Box::new(s + 1..n)
                };
                for e in ends {
                    let (p, vr, vs) = self.measures(s, e);
                    if vs > half || !(vr > 0.0) {
                        continue;
                    }
                    let r = p / vr;
                    if best.is_none_or(|b| r < b.0) {
                        best = Some((r, s, e));
                    }
                }
                best
            })
            .collect();
        let best = per_start
            .into_iter()
            .flatten()
            .fold(None::<(f64, usize, usize)>, |acc, c| match acc {
                Some(a) if a.0 <= c.0 => Some(a),
                _ => Some(c),
            })
            .ok_or(Error::NoFeasibleCut)?;
        let (value, start, end) = best;
        let (perimeter, volume_rho, volume_sigma) = self.measures(start, end);
        Ok(CheegerEstimate {
            value,
            witness: CutWitness::Interval {
                start,
                end,
                a: self.x[start],
                b: self.x[end % n],
            },
            method: "scan_1d".into(),
            certified: true,
            perimeter,
            volume_rho,
            volume_sigma,
            total_sigma,
        })
    }
}

/// Boundary element of a node-set cut.
#[derive(Debug, Clone, Copy)]
enum Piece {
    /// 1-D cell: cutting it costs `w`.
    Edge([usize; 2], f64),
    /// Triangle: when vertex `a` is alone on its side the interface is the
    /// segment joining the midpoints of the two cut edges, of length half
    /// the opposite edge; `w[a]` is that length times σ at its midpoint.
    Tri([usize; 3], [f64; 3]),
}

impl Piece {
    fn nodes(&self) -> &[usize] {
        match self {
            Piece::Edge(v, _) => v,
            Piece::Tri(v, _) => v,
        }
    }

    fn cost(&self, inside: &[bool]) -> f64 {
        match *self {
            Piece::Edge([i, j], w) => {
                if inside[i] != inside[j] {
                    w
                } else {
                    0.0
                }
            }
            Piece::Tri(v, w) => {
                let s = [inside[v[0]], inside[v[1]], inside[v[2]]];
                (0..3)
                    .find(|&a| s[a] != s[(a + 1) % 3] && s[a] != s[(a + 2) % 3])
                    .map_or(0.0, |a| w[a])
            }
        }
    }
}

/// Node-set cuts with lumped volumes `(M(ρ)·1)_i` and interface perimeters.
struct NodeSets {
    vol_rho: Vec<f64>,
    vol_sigma: Vec<f64>,
    pieces: Vec<Piece>,
}

impl NodeSets {
    fn new(domain: &Domain, rho: &[f64], sigma: &[f64]) -> Result<NodeSets> {
        let lump = |f: &[f64]| -> Result<Vec<f64>> {
            let m = assemble_mass(domain, f)?;
            Ok(m.mul_vec(&vec![1.0; domain.n_nodes()]))
        };
        let vol_rho = lump(rho)?;
        let vol_sigma = lump(sigma)?;
        let nodes = domain.nodes();
        let pieces = match domain.cells() {
            Cells::Segments(segs) => segs
                .iter()
                .map(|&[i, j]| {
                    let mid = 0.5 * (nodes[i][0] + nodes[j][0]);
                    let w = if domain.kind() == DomainKind::Circle { 1.0 } else { domain.measure_weight(mid) };
                    Piece::Edge([i, j], 0.5 * (sigma[i] + sigma[j]) * w)
                })
                .collect(),
            Cells::Triangles(tris) => {
                let period = domain.period();
                let len = |i: usize, j: usize| {
                    let mut len2 = 0.0;
                    for k in 0..3 {
                        let mut d = nodes[i][k] - nodes[j][k];
                        if let (Some(p), true) = (period, k < 2) {
                            d -= p[k] * (d / p[k]).round();
                        }
                        len2 += d * d;
                    }
                    len2.sqrt()
                };
                tris.iter()
                    .map(|&t| {
                        let mut w = [0.0; 3];
                        for a in 0..3 {
                            let (b, c) = (t[(a + 1) % 3], t[(a + 2) % 3]);
                            let s_mid = (2.0 * sigma[t[a]] + sigma[b] + sigma[c]) / 4.0;
                            w[a] = 0.5 * len(b, c) * s_mid;
                        }
                        Piece::Tri(t, w)
                    })
                    .collect()
            }
        };
        Ok(NodeSets {
            vol_rho,
            vol_sigma,
            pieces,
        })
    }

    fn measures(&self, inside: &[bool]) -> (f64, f64, f64) {
        let p: f64 = self.pieces.iter().map(|q| q.cost(inside)).sum();
        let mut vr = 0.0;
        let mut vs = 0.0;
        for (k, &b) in inside.iter().enumerate() {
            if b {
                vr += self.vol_rho[k];
                vs += self.vol_sigma[k];
            }
        }
        (p, vr, vs)
    }

    fn total_sigma(&self) -> f64 {
        self.vol_sigma.iter().sum()
    }

    fn sweep(&self, f: &[f64]) -> Result<CheegerEstimate> {
        let n = f.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (q, piece) in self.pieces.iter().enumerate() {
            for &i in piece.nodes() {
                incident[i].push(q);
            }
        }
        let total_s = self.total_sigma();
        let total_r: f64 = self.vol_rho.iter().sum();
        let half = 0.5 * total_s * (1.0 + 1e-12);
        let mut inside = vec![false; n];
        let (mut p, mut vr, mut vs) = (0.0, 0.0, 0.0);
        // (ratio, σ-volume, position, upper)
        let mut best: Option<(f64, f64, usize, bool)> = None;
        let mut consider = |cand: (f64, f64, usize, bool)| {
            let better = match best {
                None => true,
                Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
            };
            if better {
                best = Some(cand);
            }
        };
        for (pos, &k) in order.iter().enumerate().take(n - 1) {
            for &q in &incident[k] {
                p -= self.pieces[q].cost(&inside);
            }
            inside[k] = true;
            for &q in &incident[k] {
                p += self.pieces[q].cost(&inside);
            }
            vr += self.vol_rho[k];
            vs += self.vol_sigma[k];
            if vs <= half && vr > 0.0 {
                consider((p / vr, vs, pos, false));
            }
            let (ur, us) = (total_r - vr, total_s - vs);
            if us <= half && ur > 0.0 {
                consider((p / ur, us, pos, true));
            }
        }
        let (value, _, pos, upper) = best.ok_or(Error::NoFeasibleCut)?;
        let nodes: Vec<usize> = if upper { order[pos + 1..].to_vec() } else { order[..=pos].to_vec() };
        let mut mask = vec![false; n];
        nodes.iter().for_each(|&i| mask[i] = true);
        let (perimeter, volume_rho, volume_sigma) = self.measures(&mask);
        let mut nodes = nodes;
        nodes.sort_unstable();
        Ok(CheegerEstimate {
            value,
            witness: CutWitness::LevelSet {
                level: f[order[pos]],
                upper,
                nodes,
            },
            method: "sweep".into(),
            certified: false,
            perimeter,
            volume_rho,
            volume_sigma,
            total_sigma: total_s,
        })
    }

    fn balls(&self, domain: &Domain, centers: &[Vec<f64>], radii: &[f64]) -> Result<CheegerEstimate> {
        if centers.is_empty() || radii.is_empty() {
            return Err(Error::InvalidParameter("candidate_balls needs centers and radii".into()));
        }
        let half = 0.5 * self.total_sigma() * (1.0 + 1e-12);
        let mut best: Option<(f64, Vec<f64>, f64, Vec<bool>)> = None;
        for c in centers {
            let d: Vec<f64> = (0..domain.n_nodes())
                .map(|i| crate::densities::distance(domain, i, c))
                .collect::<Result<_>>()?;
            for &r in radii {
                let inside: Vec<bool> = d.iter().map(|&x| x <= r).collect();
                let (p, vr, vs) = self.measures(&inside);
                if vs > half || !(vr > 0.0) {
                    continue;
                }
                let ratio = p / vr;
                if best.as_ref().is_none_or(|b| ratio < b.0) {
                    best = Some((ratio, c.clone(), r, inside));
                }
            }
        }
        let (value, center, radius, inside) = best.ok_or(Error::NoFeasibleCut)?;
        let (perimeter, volume_rho, volume_sigma) = self.measures(&inside);
        Ok(CheegerEstimate {
            value,
            witness: CutWitness::Ball {
                center,
                radius,
                nodes: (0..inside.len()).filter(|&i| inside[i]).collect(),
            },
            method: "candidate_balls".into(),
            certified: false,
            perimeter,
            volume_rho,
            volume_sigma,
            total_sigma: self.total_sigma(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{circle, disc, interval, Grading};
    use std::f64::consts::PI;

    fn ones(d: &Domain) -> DensityField {
        DensityField::constant(d, 1.0).unwrap()
    }

    #[test]
    fn unit_interval_cuts_at_the_midpoint() {
        let d = interval(0.0, 1.0, 100, &Grading::uniform()).unwrap();
        let h = cheeger_constant(&d, &ones(&d), &ones(&d), &CheegerMethod::scan()).unwrap();
        assert!((h.value - 2.0).abs() < 1e-12);
        let CutWitness::Interval { a, b, .. } = h.witness else { panic!() };
        assert!((a - 0.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn circle_cut_is_a_half_arc() {
        let d = circle(2.0 * PI, 128).unwrap();
        let h = cheeger_constant(&d, &ones(&d), &ones(&d), &CheegerMethod::scan()).unwrap();
        assert!((h.value - 2.0 / PI).abs() < 1e-10, "{}", h.value);
        assert!((h.volume_sigma - PI).abs() < 1e-10);
    }

    /// Brute force over unions of two disjoint node intervals.
    fn two_component_oracle(d: &Domain, rho: &DensityField, sigma: &DensityField) -> f64 {
        let line = Line::new(d, rho.values(), sigma.values()).unwrap();
        let n = line.x.len();
        let half = 0.5 * line.cum_sigma[line.cells()] * (1.0 + 1e-12);
        let mut best = f64::INFINITY;
        for s1 in 0..n {
            for e1 in s1 + 1..n {
                let (p1, r1, v1) = line.measures(s1, e1);
                for s2 in e1 + 1..n {
                    for e2 in s2 + 1..n {
                        let (p2, r2, v2) = line.measures(s2, e2);
                        if v1 + v2 <= half {
                            best = best.min((p1 + p2) / (r1 + r2));
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn two_components_never_beat_one() {
        let d = interval(0.0, 1.0, 24, &Grading::uniform()).unwrap();
        let rho = DensityField::from_fn(&d, |p| 1.0 + 8.0 * (p[0] - 0.3).powi(2)).unwrap();
        let sigma = DensityField::from_fn(&d, |p| 0.2 + p[0]).unwrap();
        let h = cheeger_constant(&d, &rho, &sigma, &CheegerMethod::scan()).unwrap();
        assert!(h.value <= two_component_oracle(&d, &rho, &sigma) + 1e-12);
    }

    #[test]
    fn witness_recomputes_value() {
        let d = interval(0.0, 2.0, 60, &Grading::uniform()).unwrap();
        let rho = DensityField::from_fn(&d, |p| 1.0 + p[0]).unwrap();
        let h = cheeger_constant(&d, &rho, &ones(&d), &CheegerMethod::scan()).unwrap();
        let (p, vr, vs) = witness_measures(&d, &rho, &ones(&d), &h.witness).unwrap();
        assert!((p / vr - h.value).abs() <= 1e-12 * h.value);
        assert!(vs <= 0.5 * h.total_sigma * (1.0 + 1e-12));
    }

    #[test]
    fn disc_rejects_scan_but_sweeps() {
        let d = disc(1.0, 10, 24, &Grading::uniform()).unwrap();
        let e = cheeger_constant(&d, &ones(&d), &ones(&d), &CheegerMethod::scan()).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
        let h = cheeger_constant(&d, &ones(&d), &ones(&d), &CheegerMethod::Sweep { function: None }).unwrap();
        // a straight chord through the centre has ratio 2/(π/2) ≈ 1.27
        assert!(h.value > 1.0 && h.value < 1.6, "{}", h.value);
        assert!(h.volume_sigma <= 0.5 * h.total_sigma * (1.0 + 1e-12));
    }

    #[test]
    fn balls_need_a_feasible_radius() {
        let d = disc(1.0, 10, 24, &Grading::uniform()).unwrap();
        let m = CheegerMethod::CandidateBalls {
            centers: vec![vec![0.0, 0.0]],
            radii: vec![0.95],
        };
        assert!(matches!(cheeger_constant(&d, &ones(&d), &ones(&d), &m), Err(Error::NoFeasibleCut)));
    }
}
