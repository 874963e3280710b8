//! The harmonic-extension form
//! `Q₀(u) = ∫_{M₀}|∇u|² + ∫_{M∖M₀}|∇H(u)|²` against the ρ-mass on M₀, and
//! the convergence of `μ_k(ρ_ε, 1)` to its eigenvalues γ_k when the density
//! is driven to zero outside M₀.
//!
//! Discretely Q₀ is the Schur complement of the full stiffness with the
//! exterior nodes eliminated. Small problems form it explicitly. Larger ones
//! solve the full pencil `K u = γ M̃ u` with the mass `M̃` vanishing on the
//! exterior: the iterates `(K + τM̃)⁻¹M̃v` satisfy the exterior rows of
//! `Ku = 0`, so they are harmonic extensions and the finite eigenvalues of
//! the singular pencil are exactly the γ_k.

use crate::discretize::{assemble_mass, assemble_stiffness, Cells, DensityField, Domain};
use crate::eigen::{solve_pencil, SolveOptions, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, EnvelopeCholesky, LaplacianForm};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Node partition M = M₀ ∪ Γ ∪ exterior. `inner` and `interface` together
/// are the nodes of the closed set M₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub inner_nodes: Vec<usize>,
    pub exterior_nodes: Vec<usize>,
    pub interface_nodes: Vec<usize>,
}

fn cell_lists(domain: &Domain) -> Vec<Vec<usize>> {
    match domain.cells() {
        Cells::Segments(s) => s.iter().map(|c| c.to_vec()).collect(),
        Cells::Triangles(t) => t.iter().map(|c| c.to_vec()).collect(),
    }
}

impl Partition {
    /// Builds the partition from a membership mask of the closed set M₀.
    /// Interface nodes are members sharing a cell with a non-member.
    pub fn from_mask(domain: &Domain, in_m0: &[bool]) -> Result<Partition> {
        let n = domain.n_nodes();
        if in_m0.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: in_m0.len(),
            });
        }
        let mut interface = vec![false; n];
        for cell in cell_lists(domain) {
            if cell.iter().any(|&i| !in_m0[i]) {
                for &i in &cell {
                    if in_m0[i] {
                        interface[i] = true;
                    }
                }
            }
        }
        let part = Partition {
            inner_nodes: (0..n).filter(|&i| in_m0[i] && !interface[i]).collect(),
            interface_nodes: (0..n).filter(|&i| interface[i]).collect(),
            exterior_nodes: (0..n).filter(|&i| !in_m0[i]).collect(),
        };
        part.validate(domain)?;
        Ok(part)
    }

    pub fn from_predicate(domain: &Domain, f: impl Fn(&[f64; 3]) -> bool) -> Result<Partition> {
        let mask: Vec<bool> = domain.nodes().iter().map(f).collect();
        Partition::from_mask(domain, &mask)
    }

    /// Nodes of the closed set M₀, ascending.
    pub fn m0_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.inner_nodes.iter().chain(&self.interface_nodes).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn m0_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        self.inner_nodes.iter().chain(&self.interface_nodes).for_each(|&i| m[i] = true);
        m
    }

    /// Checks that the sets partition the nodes, that M₀ is connected through
    /// its own cells, and that every exterior component reaches Γ.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let n = domain.n_nodes();
        let mut seen = vec![0u8; n];
        for &i in self.inner_nodes.iter().chain(&self.exterior_nodes).chain(&self.interface_nodes) {
            if i >= n {
                return Err(Error::InvalidPartition(format!("node {i} out of range")));
            }
            seen[i] += 1;
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidPartition("node sets must partition the mesh".into()));
        }
        let m0 = self.m0_mask(n);
        if !m0.iter().any(|&b| b) {
            return Err(Error::InvalidPartition("M₀ is empty".into()));
        }
        let cells = cell_lists(domain);
        let mut adj = vec![Vec::new(); n];
        for cell in &cells {
            let inside = cell.iter().all(|&i| m0[i]);
            for &a in cell {
                for &b in cell {
                    if a != b && (inside || (!m0[a] || !m0[b])) {
                        adj[a].push(b);
                    }
                }
            }
        }
        // connectivity of M₀ through cells contained in M₀
        let comp = |start: usize, allowed: &dyn Fn(usize, usize) -> bool| {
            let mut mark = vec![false; n];
            let mut q = VecDeque::from([start]);
            mark[start] = true;
            while let Some(i) = q.pop_front() {
                for &j in &adj[i] {
                    if !mark[j] && allowed(i, j) {
                        mark[j] = true;
                        q.push_back(j);
                    }
                }
            }
            mark
        };
        let first = (0..n).find(|&i| m0[i]).unwrap();
        let reach = comp(first, &|i, j| m0[i] && m0[j]);
        if (0..n).any(|i| m0[i] && !reach[i]) {
            return Err(Error::InvalidPartition("M₀ is disconnected".into()));
        }
        if !self.exterior_nodes.is_empty() {
            let touches: Vec<bool> = (0..n).map(|i| !m0[i] && adj[i].iter().any(|&j| m0[j])).collect();
            let mut done = vec![false; n];
            for &e in &self.exterior_nodes {
                if done[e] {
                    continue;
                }
                let c = comp(e, &|_, j| !m0[j]);
                let mut ok = false;
                for i in 0..n {
                    if c[i] {
                        done[i] = true;
                        ok |= touches[i];
                    }
                }
                if !ok {
                    return Err(Error::DegenerateExterior);
                }
            }
        }
        Ok(())
    }
}

/// Unknown counts up to which the Schur complement is formed densely.
pub const DENSE_SCHUR_LIMIT: usize = 600;

/// γ₀ ≤ … ≤ γ_count of `S u = γ M₀(ρ) u`. Vectors are indexed by
/// [`Partition::m0_nodes`].
pub fn gamma_spectrum(domain: &Domain, part: &Partition, rho: &DensityField, count: usize) -> Result<Spectrum> {
    let opts = SolveOptions::count(count);
    gamma_spectrum_with(domain, part, rho, &opts)
}

pub fn gamma_spectrum_with(
    domain: &Domain,
    part: &Partition,
    rho: &DensityField,
    opts: &SolveOptions,
) -> Result<Spectrum> {
    part.validate(domain)?;
    let n = domain.n_nodes();
    let ones = vec![1.0; n];
    let stiff = assemble_stiffness(domain, &ones)?;
    let mask = part.m0_mask(n);
    // ρ extended by zero is the ε → 0 limit of the density used in the
    // convergence sweep, so the limit pencil matches node for node.
    let rho0: Vec<f64> = rho.values().iter().zip(&mask).map(|(&r, &m)| if m { r } else { 0.0 }).collect();
    let mass_full = assemble_mass(domain, &rho0)?;
    let m0 = part.m0_nodes();
    if part.exterior_nodes.is_empty() {
        let mass = assemble_mass(domain, rho.values())?;
        return solve_pencil(&stiff, &stiff.to_csr(), &mass, opts, &[]);
    }
    if n <= DENSE_SCHUR_LIMIT {
        // Exterior nodes next to M₀ still carry mass through the
        // interpolated density; only massless nodes are eliminated.
        let (keep, drop): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mass_full.get(i, i) > 0.0);
        let s = dense_schur(&stiff.to_csr(), &keep, &drop)?;
        let s_csr = CsrMatrix::from_dense(&s);
        let form = LaplacianForm::new(keep.len(), vec![], vec![0.0; keep.len()], Some(s_csr.clone()));
        let mass = mass_full.submatrix(&keep);
        let dense_opts = SolveOptions {
            dense_threshold: usize::MAX,
            ..opts.clone()
        };
        let sp = solve_pencil(&form, &s_csr, &mass, &dense_opts, &[])?;
        let mut at = vec![usize::MAX; n];
        keep.iter().enumerate().for_each(|(a, &i)| at[i] = a);
        return Ok(Spectrum {
            vectors: sp.vectors.iter().map(|v| m0.iter().map(|&i| v[at[i]]).collect()).collect(),
            ..sp
        });
    }
    let singular = SolveOptions {
        singular_mass: true,
        ..opts.clone()
    };
    let full = solve_pencil(&stiff, &stiff.to_csr(), &mass_full, &singular, &[])?;
    Ok(Spectrum {
        vectors: full.vectors.iter().map(|v| m0.iter().map(|&i| v[i]).collect()).collect(),
        ..full
    })
}

/// `K₀₀ − K₀ₑ K_ee⁻¹ Kₑ₀` as dense rows over `keep`.
fn dense_schur(k: &CsrMatrix, keep: &[usize], ext: &[usize]) -> Result<Vec<Vec<f64>>> {
    let kee = CsrMatrix::from_triplets(ext.len(), k.block(ext, ext));
    let chol = EnvelopeCholesky::factor(&kee).ok_or(Error::DegenerateExterior)?;
    let mut s: Vec<Vec<f64>> = keep.iter().map(|&i| keep.iter().map(|&j| k.get(i, j)).collect()).collect();
    let mut pos = vec![usize::MAX; k.n()];
    ext.iter().enumerate().for_each(|(a, &i)| pos[i] = a);
    for (b, &j) in keep.iter().enumerate() {
        let mut col = vec![0.0; ext.len()];
        for (i, v) in k.row(j) {
            if pos[i] != usize::MAX {
                col[pos[i]] = v;
            }
        }
        if col.iter().all(|&v| v == 0.0) {
            continue;
        }
        let x = chol.solve(&col);
        for (a, &i) in keep.iter().enumerate() {
            let mut acc = 0.0;
            for (e, v) in k.row(i) {
                if pos[e] != usize::MAX {
                    acc += v * x[pos[e]];
                }
            }
            s[a][b] -= acc;
        }
    }
    // symmetrize away roundoff
    for a in 0..keep.len() {
        for b in 0..a {
            let m = 0.5 * (s[a][b] + s[b][a]);
            s[a][b] = m;
            s[b][a] = m;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRhoRow {
    pub eps: f64,
    /// μ₁ … μ_count of the (ρ_ε, 1) problem.
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rel_err: Vec<f64>,
}

/// Density equal to ρ on the closed set M₀ and ε elsewhere.
pub fn zero_outside(domain: &Domain, part: &Partition, rho: &DensityField, eps: f64) -> Result<DensityField> {
    let mask = part.m0_mask(domain.n_nodes());
    let v = rho
        .values()
        .iter()
        .zip(&mask)
        .map(|(&r, &m)| if m { r } else { eps })
        .collect();
    DensityField::new(domain, v)
}

pub fn zerorho_convergence(
    domain: &Domain,
    part: &Partition,
    rho: &DensityField,
    eps_list: &[f64],
    count: usize,
) -> Result<Vec<ZeroRhoRow>> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps list must be positive and decreasing".into()));
    }
    let gamma = gamma_spectrum(domain, part, rho, count)?.values[1..].to_vec();
    let one = DensityField::constant(domain, 1.0)?;
    let bc = crate::BoundaryCondition::Neumann;
    eps_list
        .iter()
        .map(|&eps| {
            let r = zero_outside(domain, part, rho, eps)?;
            let forms = crate::assemble(domain, &r, &one, &bc)?;
            let s = crate::eigen::solve_forms(&forms, &SolveOptions::count(count))?;
            let mu = s.values[1..].to_vec();
            let rel_err = mu.iter().zip(&gamma).map(|(m, g)| (m - g).abs() / g.abs()).collect();
            Ok(ZeroRhoRow {
                eps,
                mu,
                gamma: gamma.clone(),
                rel_err,
            })
        })
        .collect()
}

/// True when every error column is nonincreasing up to a relative slack.
pub fn errors_nonincreasing(rows: &[ZeroRhoRow], slack: f64) -> bool {
    rows.windows(2)
        .all(|w| w[1].rel_err.iter().zip(&w[0].rel_err).all(|(b, a)| *b <= a * (1.0 + slack)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{interval, Grading};
    use crate::eigen::solve_forms;
    use std::f64::consts::PI;

    fn half(n: usize) -> (Domain, Partition) {
        let d = interval(0.0, 1.0, n, &Grading::uniform()).unwrap();
        let p = Partition::from_predicate(&d, |x| x[0] <= 0.5 + 1e-12).unwrap();
        (d, p)
    }

    #[test]
    fn half_interval_reduces_to_neumann_on_the_half() {
        // The interface cells keep part of their weight in the limit mass,
        // an O(h) shift, so the mesh is finer than the sweep tests use.
        let (d, p) = half(2000);
        assert_eq!(p.interface_nodes.len(), 1);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let g = gamma_spectrum(&d, &p, &one, 2).unwrap();
        assert!((g.values[1] / (4.0 * PI * PI) - 1.0).abs() < 2e-3, "{}", g.values[1]);
    }

    #[test]
    fn dense_and_singular_mass_routes_agree() {
        let (d, p) = half(1200);
        let (ds, ps) = half(500);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let ones = DensityField::constant(&ds, 1.0).unwrap();
        let big = gamma_spectrum(&d, &p, &one, 3).unwrap();
        let small = gamma_spectrum(&ds, &ps, &ones, 3).unwrap();
        for k in 1..=3 {
            let exact = (2.0 * PI * k as f64).powi(2);
            assert!((big.values[k] / exact - 1.0).abs() < 2e-3);
            assert!((small.values[k] / exact - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn empty_exterior_gives_the_neumann_spectrum() {
        let d = interval(0.0, 1.0, 50, &Grading::uniform()).unwrap();
        let p = Partition::from_predicate(&d, |_| true).unwrap();
        let rho = DensityField::from_fn(&d, |x| 1.0 + x[0]).unwrap();
        let g = gamma_spectrum(&d, &p, &rho, 2).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let f = crate::assemble(&d, &rho, &one, &crate::BoundaryCondition::Neumann).unwrap();
        let s = solve_forms(&f, &SolveOptions::count(2)).unwrap();
        assert_eq!(g.values, s.values);
    }

    #[test]
    fn mass_scaling_divides_gamma() {
        let (d, p) = half(100);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let three = DensityField::constant(&d, 3.0).unwrap();
        let a = gamma_spectrum(&d, &p, &one, 1).unwrap();
        let b = gamma_spectrum(&d, &p, &three, 1).unwrap();
        assert!((a.values[1] / b.values[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn disconnected_m0_is_rejected() {
        let d = interval(0.0, 1.0, 40, &Grading::uniform()).unwrap();
        let e = Partition::from_predicate(&d, |x| x[0] < 0.2 || x[0] > 0.8).unwrap_err();
        assert!(matches!(e, Error::InvalidPartition(_)));
    }

    #[test]
    fn interval_convergence_is_monotone() {
        let (d, p) = half(400);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let rows = zerorho_convergence(&d, &p, &one, &[1e-1, 1e-2, 1e-3, 1e-4], 3).unwrap();
        assert!(errors_nonincreasing(&rows, 0.1));
        assert!(rows.last().unwrap().rel_err[0] < 0.01);
    }
}
