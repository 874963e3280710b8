use super::domain::{Cells, Domain};
use super::quadrature::{GAUSS3, TRI6};
use super::warp::angular_eigenvalue;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LaplacianForm};
use serde::{Deserialize, Serialize};

/// Per-node positive weights (ρ or σ) with their cached mean `⨍ φ v_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    values: Vec<f64>,
    mean: f64,
}

impl DensityField {
    pub fn new(domain: &Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_nodes() {
            return Err(Error::Shape {
                expected: domain.n_nodes(),
                got: values.len(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDensity(format!("value {v} at node {i} is not positive")));
        }
        let mean = domain.integrate(&values) / domain.volume();
        Ok(DensityField { values, mean })
    }

    pub fn constant(domain: &Domain, c: f64) -> Result<Self> {
        Self::new(domain, vec![c; domain.n_nodes()])
    }

    pub fn from_fn(domain: &Domain, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        Self::new(domain, domain.nodes().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidDensity(format!("scale factor {c} is not positive")));
        }
        Ok(DensityField {
            values: self.values.iter().map(|v| c * v).collect(),
            mean: c * self.mean,
        })
    }

    /// Rescales to mean one; the pointwise ratio to the input is constant.
    pub fn normalize_mean(&self, domain: &Domain) -> Result<Self> {
        let mean = domain.integrate(&self.values) / domain.volume();
        let out = DensityField::new(domain, self.values.iter().map(|v| v / mean).collect())?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Neumann,
    Dirichlet,
    /// Dirichlet on the listed nodes, natural elsewhere.
    Mixed(Vec<usize>),
}

/// Stiffness and mass forms restricted to the free degrees of freedom.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub stiffness: LaplacianForm,
    pub k: CsrMatrix,
    pub mass: CsrMatrix,
    pub bc: BoundaryCondition,
    pub mode: usize,
    /// Node index of each free degree of freedom.
    pub dofs: Vec<usize>,
    pub n_nodes: usize,
}

impl AssembledForms {
    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    /// Lifts a dof vector to all nodes, with zeros on constrained nodes.
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        for (&node, &v) in self.dofs.iter().zip(u) {
            out[node] = v;
        }
        out
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&i| full[i]).collect()
    }

    pub fn scaled(&self, ck: f64, cm: f64) -> AssembledForms {
        let mut f = self.clone();
        f.stiffness = self.stiffness.scaled(ck);
        f.k = self.k.scaled(ck);
        f.mass = self.mass.scaled(cm);
        f
    }
}

fn check_field(domain: &Domain, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.len() != domain.n_nodes() {
        return Err(Error::Shape {
            expected: domain.n_nodes(),
            got: values.len(),
        });
    }
    let bad = values
        .iter()
        .any(|v| !v.is_finite() || if allow_zero { *v < 0.0 } else { *v <= 0.0 });
    if bad {
        return Err(Error::InvalidDensity("density values must be positive and finite".into()));
    }
    Ok(())
}

/// Consistent mass `M_ij = ∫ ρ φ_i φ_j v_g` on all nodes. Nonnegative
/// values are accepted so that masked masses can be formed.
pub fn assemble_mass(domain: &Domain, rho: &[f64]) -> Result<CsrMatrix> {
    mass_on_cells(domain, rho, |_| true)
}

/// Mass form integrated only over cells whose vertices all lie in `keep`
/// (a node mask); rows of other nodes may be empty.
pub fn assemble_mass_masked(domain: &Domain, rho: &[f64], keep: &[bool]) -> Result<CsrMatrix> {
    if keep.len() != domain.n_nodes() {
        return Err(Error::Shape {
            expected: domain.n_nodes(),
            got: keep.len(),
        });
    }
    mass_on_cells(domain, rho, |cell| cell.iter().all(|&i| keep[i]))
}

fn mass_on_cells(domain: &Domain, rho: &[f64], include: impl Fn(&[usize]) -> bool) -> Result<CsrMatrix> {
    check_field(domain, rho, true)?;
    let mut t = Vec::new();
    match domain.cells() {
        Cells::Segments(segs) => {
            for &s in segs {
                if !include(&s) {
                    continue;
                }
                let g = domain.segment_geom(s);
                let mut m = [[0.0; 2]; 2];
                for &(xi, w) in GAUSS3.iter() {
                    let phi = [1.0 - xi, xi];
                    let r = phi[0] * rho[s[0]] + phi[1] * rho[s[1]];
                    let wq = w * g.len * domain.measure_weight(g.x0 + xi * g.len) * r;
                    for a in 0..2 {
                        for b in 0..2 {
                            m[a][b] += wq * phi[a] * phi[b];
                        }
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        t.push((s[a], s[b], m[a][b]));
                    }
                }
            }
        }
        Cells::Triangles(tris) => {
            let conf = domain.conformal_factor();
            for &tri in tris {
                if !include(&tri) {
                    continue;
                }
                let g = domain.triangle_geom(tri)?;
                let mut m = [[0.0; 3]; 3];
                for &(bary, w) in TRI6.iter() {
                    // The product ρ·c is interpolated as one nodal field, so a
                    // density proportional to 1/c yields an exactly scaled mass.
                    let rc: f64 = (0..3)
                        .map(|a| bary[a] * rho[tri[a]] * conf.map_or(1.0, |f| f[tri[a]]))
                        .sum();
                    let wq = g.area * w * rc;
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] += wq * bary[a] * bary[b];
                        }
                    }
                }
                for a in 0..3 {
                    for b in 0..3 {
                        t.push((tri[a], tri[b], m[a][b]));
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(domain.n_nodes(), t))
}

/// Stiffness `∫ σ (∇φ_i·∇φ_j + ℓ(ℓ+n−2)γ⁻² φ_i φ_j) v_g` on all nodes in
/// difference form.
pub fn assemble_stiffness(domain: &Domain, sigma: &[f64]) -> Result<LaplacianForm> {
    check_field(domain, sigma, true)?;
    let n = domain.n_nodes();
    let mut edges = Vec::new();
    let mut pot = Vec::new();
    let ang = angular_eigenvalue(domain.angular_mode(), domain.dimension());
    match domain.cells() {
        Cells::Segments(segs) => {
            for &s in segs {
                let g = domain.segment_geom(s);
                let mut w_edge = 0.0;
                let mut p = [[0.0; 2]; 2];
                for &(xi, w) in GAUSS3.iter() {
                    let phi = [1.0 - xi, xi];
                    let x = g.x0 + xi * g.len;
                    let sg = phi[0] * sigma[s[0]] + phi[1] * sigma[s[1]];
                    let wq = w * g.len * domain.measure_weight(x) * sg;
                    w_edge += wq / (g.len * g.len);
                    if ang > 0.0 {
                        let gamma = domain.warp_at(x);
                        for a in 0..2 {
                            for b in 0..2 {
                                p[a][b] += wq * ang / (gamma * gamma) * phi[a] * phi[b];
                            }
                        }
                    }
                }
                edges.push((s[0], s[1], w_edge));
                if ang > 0.0 {
                    for a in 0..2 {
                        for b in 0..2 {
                            pot.push((s[a], s[b], p[a][b]));
                        }
                    }
                }
            }
        }
        Cells::Triangles(tris) => {
            for &tri in tris {
                let g = domain.triangle_geom(tri)?;
                let sbar = (sigma[tri[0]] + sigma[tri[1]] + sigma[tri[2]]) / 3.0;
                for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                    edges.push((tri[a], tri[b], -sbar * g.area * g.grad[a][b]));
                }
            }
        }
    }
    let potential = if pot.is_empty() {
        None
    } else {
        Some(CsrMatrix::from_triplets(n, pot))
    };
    Ok(LaplacianForm::new(n, edges, vec![0.0; n], potential))
}

/// Nodes eliminated by the boundary condition (plus poles for ℓ ≥ 1).
pub fn constrained_nodes(domain: &Domain, bc: &BoundaryCondition) -> Result<Vec<usize>> {
    let mut fixed: Vec<usize> = match bc {
        BoundaryCondition::Neumann => vec![],
        BoundaryCondition::Dirichlet => {
            if domain.boundary_nodes().is_empty() {
                return Err(Error::InvalidDescriptor(
                    "Dirichlet condition on a domain without boundary".into(),
                ));
            }
            domain.boundary_nodes().to_vec()
        }
        BoundaryCondition::Mixed(nodes) => {
            if nodes.is_empty() {
                return Err(Error::InvalidDescriptor("mixed condition needs constrained nodes".into()));
            }
            if let Some(&bad) = nodes.iter().find(|&&i| i >= domain.n_nodes()) {
                return Err(Error::InvalidDescriptor(format!("constrained node {bad} out of range")));
            }
            nodes.clone()
        }
    };
    if domain.angular_mode() > 0 {
        fixed.extend(domain.pole_nodes());
    }
    fixed.sort_unstable();
    fixed.dedup();
    Ok(fixed)
}

/// Assembles the (ρ, σ) forms and eliminates constrained rows and columns.
pub fn assemble(
    domain: &Domain,
    rho: &DensityField,
    sigma: &DensityField,
    bc: &BoundaryCondition,
) -> Result<AssembledForms> {
    assemble_raw(domain, rho.values(), sigma.values(), bc)
}

/// Same as [`assemble`] on raw nodal arrays (nonnegative values allowed).
pub fn assemble_raw(
    domain: &Domain,
    rho: &[f64],
    sigma: &[f64],
    bc: &BoundaryCondition,
) -> Result<AssembledForms> {
    let mass_full = assemble_mass(domain, rho)?;
    let stiff_full = assemble_stiffness(domain, sigma)?;
    let fixed = constrained_nodes(domain, bc)?;
    let mut is_fixed = vec![false; domain.n_nodes()];
    for &i in &fixed {
        is_fixed[i] = true;
    }
    let dofs: Vec<usize> = (0..domain.n_nodes()).filter(|&i| !is_fixed[i]).collect();
    if dofs.is_empty() {
        return Err(Error::InvalidDescriptor("no free degrees of freedom remain".into()));
    }
    let (stiffness, mass) = if fixed.is_empty() {
        (stiff_full, mass_full)
    } else {
        (stiff_full.restrict(&dofs), mass_full.submatrix(&dofs))
    };
    let k = stiffness.to_csr();
    Ok(AssembledForms {
        stiffness,
        k,
        mass,
        bc: bc.clone(),
        mode: domain.angular_mode(),
        dofs,
        n_nodes: domain.n_nodes(),
    })
}

/// `∂(uᵀM(ρ)u)/∂ρ_k = ∫ φ_k u² v_g` for a nodal vector `u` on all nodes.
pub fn mass_sensitivity(domain: &Domain, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; domain.n_nodes()];
    match domain.cells() {
        Cells::Segments(segs) => {
            for &s in segs {
                let g = domain.segment_geom(s);
                for &(xi, w) in GAUSS3.iter() {
                    let phi = [1.0 - xi, xi];
                    let uq = phi[0] * u[s[0]] + phi[1] * u[s[1]];
                    let wq = w * g.len * domain.measure_weight(g.x0 + xi * g.len) * uq * uq;
                    out[s[0]] += wq * phi[0];
                    out[s[1]] += wq * phi[1];
                }
            }
        }
        Cells::Triangles(tris) => {
            let conf = domain.conformal_factor();
            for &tri in tris {
                let Ok(g) = domain.triangle_geom(tri) else { continue };
                for &(bary, w) in TRI6.iter() {
                    let uq: f64 = (0..3).map(|a| bary[a] * u[tri[a]]).sum();
                    for a in 0..3 {
                        let c = conf.map_or(1.0, |f| f[tri[a]]);
                        out[tri[a]] += g.area * w * c * uq * uq * bary[a];
                    }
                }
            }
        }
    }
    out
}

/// `∂(uᵀK(σ)u)/∂σ_k = ∫ φ_k (|∇u|² + ℓ(ℓ+n−2)γ⁻² u²) v_g`.
pub fn stiffness_sensitivity(domain: &Domain, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; domain.n_nodes()];
    let ang = angular_eigenvalue(domain.angular_mode(), domain.dimension());
    match domain.cells() {
        Cells::Segments(segs) => {
            for &s in segs {
                let g = domain.segment_geom(s);
                let du = (u[s[1]] - u[s[0]]) / g.len;
                for &(xi, w) in GAUSS3.iter() {
                    let phi = [1.0 - xi, xi];
                    let x = g.x0 + xi * g.len;
                    let mut integrand = du * du;
                    if ang > 0.0 {
                        let uq = phi[0] * u[s[0]] + phi[1] * u[s[1]];
                        let gamma = domain.warp_at(x);
                        integrand += ang * uq * uq / (gamma * gamma);
                    }
                    let wq = w * g.len * domain.measure_weight(x) * integrand;
                    out[s[0]] += wq * phi[0];
                    out[s[1]] += wq * phi[1];
                }
            }
        }
        Cells::Triangles(tris) => {
            for &tri in tris {
                let Ok(g) = domain.triangle_geom(tri) else { continue };
                let uu = [u[tri[0]], u[tri[1]], u[tri[2]]];
                let mut grad2 = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        grad2 += uu[a] * g.grad[a][b] * uu[b];
                    }
                }
                // σ is linear, so ∫ φ_k σ-weight of a constant integrand is area/3.
                for &node in &tri {
                    out[node] += g.area * grad2 / 3.0;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::domain::{circle, disc, interval};
    use super::super::grid::Grading;
    use super::*;

    #[test]
    fn two_cell_interval_stiffness() {
        let d = interval(0.0, 1.0, 4, &Grading::uniform()).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let f = assemble(&d, &one, &one, &BoundaryCondition::Neumann).unwrap();
        assert_eq!(f.k.get(0, 0), 4.0);
        assert_eq!(f.k.get(1, 1), 8.0);
        assert_eq!(f.k.get(0, 1), -4.0);
        assert!(f.k.mul_vec(&[1.0; 5]).iter().all(|v| *v == 0.0));
        assert!((f.mass.quad_form(&[1.0; 5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_is_linear() {
        let d = disc(1.0, 5, 12, &Grading::uniform()).unwrap();
        let rho = DensityField::from_fn(&d, |p| 1.0 + p[0] * p[0]).unwrap();
        let sig = DensityField::from_fn(&d, |p| 2.0 + p[1]).unwrap();
        let f = assemble(&d, &rho, &sig, &BoundaryCondition::Neumann).unwrap();
        let g = assemble(&d, &rho.scaled(3.0).unwrap(), &sig.scaled(3.0).unwrap(), &BoundaryCondition::Neumann)
            .unwrap();
        let u: Vec<f64> = (0..d.n_nodes()).map(|i| (i as f64 * 0.37).sin()).collect();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(g.mass.quad_form(&u), 3.0 * f.mass.quad_form(&u)) < 1e-14);
        assert!(rel(g.stiffness.energy(&u), 3.0 * f.stiffness.energy(&u)) < 1e-14);
    }

    #[test]
    fn rejects_bad_fields() {
        let d = circle(1.0, 8).unwrap();
        assert!(matches!(DensityField::new(&d, vec![1.0; 7]), Err(Error::Shape { .. })));
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        assert!(matches!(DensityField::new(&d, v), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn normalize_mean_is_idempotent() {
        let d = interval(0.0, 2.0, 10, &Grading::uniform()).unwrap();
        let f = DensityField::from_fn(&d, |p| 1.0 + p[0]).unwrap();
        let g = f.normalize_mean(&d).unwrap();
        assert!((g.mean() - 1.0).abs() < 1e-14);
        let h = g.normalize_mean(&d).unwrap();
        for (a, b) in g.values().iter().zip(h.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let d = disc(1.0, 4, 8, &Grading::uniform()).unwrap();
        let rho = DensityField::from_fn(&d, |p| 1.0 + 0.3 * p[0]).unwrap();
        let u: Vec<f64> = (0..d.n_nodes()).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let s = mass_sensitivity(&d, &u);
        let ds = stiffness_sensitivity(&d, &u);
        let k = 7;
        let mut r2 = rho.values().to_vec();
        r2[k] += 1.0;
        let m1 = assemble_mass(&d, rho.values()).unwrap().quad_form(&u);
        let m2 = assemble_mass(&d, &r2).unwrap().quad_form(&u);
        assert!(((m2 - m1) - s[k]).abs() < 1e-12);
        let e1 = assemble_stiffness(&d, rho.values()).unwrap().energy(&u);
        let e2 = assemble_stiffness(&d, &r2).unwrap().energy(&u);
        assert!(((e2 - e1) - ds[k]).abs() < 1e-10);
    }
}
