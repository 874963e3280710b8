//! Conformal renormalization to the round sphere.
//!
//! A planar domain is lifted to S² by inverse stereographic projection,
//! then moved by a conformal automorphism of S² so that the ρ-weighted
//! barycenter of the image is the origin. The three coordinate functions
//! of the centered map are then admissible trial functions for μ₁(ρ, 1).
//!
//! Discretely the coordinates are nodal interpolants ψ_j, and the centering
//! masses are the row sums `(M(ρ)·1)_i`, so `1ᵀM(ρ)ψ_j = 0` holds exactly
//! at convergence and the trial bound dominates the discrete μ₁.

use crate::discretize::{assemble_mass, assemble_stiffness, DensityField, Domain, DomainKind};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point3 = [f64; 3];

fn dot3(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &Point3) -> f64 {
    dot3(a, a).sqrt()
}

/// Inverse stereographic projection scaled by `t`:
/// `φ_t(z) = (2tz, t²|z|² − 1) / (t²|z|² + 1)`.
pub fn stereographic(z: [f64; 2], t: f64) -> Point3 {
    let r2 = t * t * (z[0] * z[0] + z[1] * z[1]);
    let d = r2 + 1.0;
    [2.0 * t * z[0] / d, 2.0 * t * z[1] / d, (r2 - 1.0) / d]
}

/// Node images on S²: planar meshes are lifted with `t = 1`, meshes already
/// lying on the unit sphere are taken as they are.
pub fn lift_to_sphere(domain: &Domain) -> Result<Vec<Point3>> {
    if domain.dimension() != 2 {
        return Err(Error::UnsupportedDimension(domain.dimension()));
    }
    let nodes = domain.nodes();
    match domain.kind() {
        DomainKind::Disc => Ok(nodes.iter().map(|p| stereographic([p[0], p[1]], 1.0)).collect()),
        DomainKind::TriangleMesh => {
            if nodes.iter().all(|p| p[2].abs() < 1e-12) {
                Ok(nodes.iter().map(|p| stereographic([p[0], p[1]], 1.0)).collect())
            } else if nodes.iter().all(|p| (norm3(p) - 1.0).abs() < 1e-9) {
                Ok(nodes.iter().map(|p| {
                    let r = norm3(p);
                    [p[0] / r, p[1] / r, p[2] / r]
                }).collect())
            } else {
                Err(Error::Unsupported("mesh is neither planar nor on the unit sphere".into()))
            }
        }
        k => Err(Error::Unsupported(format!("no conformal lift for {}", k.name()))),
    }
}

/// Conformal automorphism `x ↦ (−ξ) ⊕ x` of S², where
/// `a ⊕ x = ((2 + 2⟨a,x⟩) a + (1 − |a|²) x) / (1 + 2⟨a,x⟩ + |a|²)` on the
/// sphere. Moving ξ toward a point p pushes the sphere away from p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub xi: Point3,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap { xi: [0.0; 3] }
    }

    pub fn new(xi: Point3) -> Result<Self> {
        if !(norm3(&xi) < 1.0) {
            return Err(Error::InvalidParameter("Möbius parameter must lie in the open unit ball".into()));
        }
        Ok(MobiusMap { xi })
    }

    pub fn apply(&self, x: &Point3) -> Point3 {
        let a = [-self.xi[0], -self.xi[1], -self.xi[2]];
        let ax = dot3(&a, x);
        let a2 = dot3(&a, &a);
        let x2 = dot3(x, x);
        let d = 1.0 + 2.0 * ax + a2 * x2;
        let ca = (1.0 + 2.0 * ax + x2) / d;
        let cx = (1.0 - a2) / d;
        [ca * a[0] + cx * x[0], ca * a[1] + cx * x[1], ca * a[2] + cx * x[2]]
    }
}

/// Mass-weighted barycenter of the image points.
pub fn barycenter(map: &MobiusMap, points: &[Point3], masses: &[f64]) -> Point3 {
    let mut b = [0.0; 3];
    let mut total = 0.0;
    for (p, &m) in points.iter().zip(masses) {
        let q = map.apply(p);
        for k in 0..3 {
            b[k] += m * q[k];
        }
        total += m;
    }
    b.map(|v| v / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub map: MobiusMap,
    pub residual: f64,
    pub iterations: usize,
    /// Barycenter norm after each accepted step (nonincreasing).
    pub history: Vec<f64>,
}

pub const CENTERING_MAX_ITER: usize = 5000;

/// Damped fixed-point iteration `ξ ← ξ + s·b(ξ)`, started at half the
/// initial barycenter, with step halving whenever |b| fails to decrease.
pub fn center_measure(points: &[Point3], masses: &[f64], tol: f64) -> Result<Centering> {
    if points.len() != masses.len() {
        return Err(Error::Shape {
            expected: points.len(),
            got: masses.len(),
        });
    }
    if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) || !masses.iter().any(|&m| m > 0.0) {
        return Err(Error::InvalidParameter("centering masses must be nonnegative with positive total".into()));
    }
    let support: Vec<&Point3> = points.iter().zip(masses).filter(|(_, &m)| m > 0.0).map(|(p, _)| p).collect();
    let distinct = support.iter().any(|p| {
        let q = support[0];
        (p[0] - q[0]).abs() + (p[1] - q[1]).abs() + (p[2] - q[2]).abs() > 1e-12
    });
    if !distinct {
        return Err(Error::NoCentering("measure is concentrated at a single point".into()));
    }
    // An atom carrying more than half the mass pins the barycenter away from
    // the origin for every conformal map. Exactly half is admissible only
    // when the remainder is one atom that can be sent to the antipode.
    let total: f64 = masses.iter().sum();
    let same = |p: &Point3, q: &Point3| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() + (q[2] - p[2]).abs() <= 1e-12;
    let mut distinct_points: Vec<&Point3> = Vec::new();
    for p in &support {
        if !distinct_points.iter().any(|q| same(p, q)) {
            distinct_points.push(p);
        }
    }
    for p in &distinct_points {
        let atom: f64 = points.iter().zip(masses).filter(|(q, _)| same(p, q)).map(|(_, &m)| m).sum();
        let half = 0.5 * total;
        if atom > half * (1.0 + 1e-12) || (atom >= half * (1.0 - 1e-12) && distinct_points.len() > 2) {
            return Err(Error::NoCentering(format!(
                "an atom carries {:.3} of the total mass",
                atom / total
            )));
        }
    }
    let bary = |xi: Point3| barycenter(&MobiusMap { xi }, points, masses);
    let project = |mut xi: Point3| {
        let r = norm3(&xi);
        let cap = 1.0 - 1e-12;
        if r >= cap {
            xi = xi.map(|v| v * cap / r);
        }
        xi
    };
    let b0 = bary([0.0; 3]);
    let mut xi = [0.0; 3];
    let mut b = b0;
    let start = project(b0.map(|v| 0.5 * v));
    let bs = bary(start);
    if norm3(&bs) < norm3(&b0) {
        xi = start;
        b = bs;
    }
    let mut history = vec![norm3(&b)];
    let mut step = 1.0;
    let mut iterations = 0;
    while norm3(&b) > tol {
        if iterations >= CENTERING_MAX_ITER || step < 1e-14 {
            return Err(Error::CenteringFailure { best_norm: norm3(&b) });
        }
        iterations += 1;
        let trial = project([xi[0] + step * b[0], xi[1] + step * b[1], xi[2] + step * b[2]]);
        let bt = bary(trial);
        if norm3(&bt) < norm3(&b) {
            xi = trial;
            b = bt;
            history.push(norm3(&b));
            step = (step * 1.5).min(64.0);
        } else {
            step *= 0.5;
        }
    }
    Ok(Centering {
        map: MobiusMap { xi },
        residual: norm3(&b),
        iterations,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerschBound {
    /// `Σ_j ψ_jᵀKψ_j / Σ_j ψ_jᵀM(ρ)ψ_j` for the centered coordinates.
    pub bound: f64,
    /// `bound · ⨍ρ`, comparable with the analytic cap.
    pub normalized_bound: f64,
    /// `2·|S²| / |M| = 8π/|M|`: the cap on μ₁(ρ,1)·⨍ρ.
    pub cap: f64,
    /// The cap multiplied back by `|M| / ∫ρ`, a bound on μ₁(ρ,1) itself.
    pub cap_unnormalized: f64,
    pub centering: Centering,
}

pub const CENTERING_TOL: f64 = 1e-10;

pub fn hersch_trial_bound(domain: &Domain, rho: &DensityField) -> Result<HerschBound> {
    let points = lift_to_sphere(domain)?;
    let mass = assemble_mass(domain, rho.values())?;
    let masses = mass.mul_vec(&vec![1.0; domain.n_nodes()]);
    let centering = center_measure(&points, &masses, CENTERING_TOL)?;
    let k = assemble_stiffness(domain, &vec![1.0; domain.n_nodes()])?;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..3 {
        let psi: Vec<f64> = points.iter().map(|p| centering.map.apply(p)[j]).collect();
        num += k.energy(&psi);
        den += mass.quad_form(&psi);
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateTrial);
    }
    let bound = num / den;
    let total = domain.integrate(rho.values());
    let vol = domain.volume();
    let cap = 8.0 * PI / vol;
    Ok(HerschBound {
        bound,
        normalized_bound: bound * total / vol,
        cap,
        cap_unnormalized: cap * vol / total,
        centering,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{disc, Grading};

    #[test]
    fn lift_lands_on_sphere() {
        assert_eq!(stereographic([0.0, 0.0], 1.0), [0.0, 0.0, -1.0]);
        assert_eq!(stereographic([0.0, 0.0], 10.0), [0.0, 0.0, -1.0]);
        let e = stereographic([0.6, 0.8], 1.0);
        assert!(e[2].abs() < 1e-15);
        let d = disc(1.0, 6, 12, &Grading::uniform()).unwrap();
        for p in lift_to_sphere(&d).unwrap() {
            assert!((norm3(&p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mobius_maps_sphere_to_sphere() {
        let m = MobiusMap::new([0.3, -0.5, 0.6]).unwrap();
        for k in 0..50 {
            let th = 0.37 * k as f64;
            let ph = 0.11 * k as f64;
            let x = [th.cos() * ph.sin(), th.sin() * ph.sin(), ph.cos()];
            assert!((norm3(&m.apply(&x)) - 1.0).abs() < 1e-10);
            assert_eq!(MobiusMap::identity().apply(&x), x);
        }
    }

    #[test]
    fn antipodal_pair_is_already_centered() {
        let c = center_measure(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], &[1.0, 1.0], 1e-12).unwrap();
        assert!(norm3(&c.map.xi) < 1e-14);
    }

    #[test]
    fn unequal_masses_on_axes_get_centered() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let masses = [1.5, 1.0, 1.0];
        let c = center_measure(&pts, &masses, 1e-10).unwrap();
        assert!(norm3(&barycenter(&c.map, &pts, &masses)) <= 1e-10);
        assert!(c.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn half_mass_atom_has_no_centering() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let e = center_measure(&pts, &[2.0, 1.0, 1.0], 1e-10).unwrap_err();
        assert!(matches!(e, Error::NoCentering(_)));
    }

    #[test]
    fn dirac_measure_cannot_be_centered() {
        let e = center_measure(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], &[1.0, 3.0], 1e-10).unwrap_err();
        assert!(matches!(e, Error::NoCentering(_)));
    }

    #[test]
    fn bound_on_the_flat_disc_dominates_mu1() {
        let d = disc(1.0, 16, 48, &Grading::uniform()).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let h = hersch_trial_bound(&d, &one).unwrap();
        let f = crate::assemble(&d, &one, &one, &crate::BoundaryCondition::Neumann).unwrap();
        let mu1 = crate::solve_lowest(&f, 1, 1e-10).unwrap().values[1];
        assert!(h.bound >= mu1, "{} < {}", h.bound, mu1);
        assert!(h.normalized_bound <= 8.0 * 1.02, "{}", h.normalized_bound);
        assert!((h.cap - 8.0 * PI / d.volume()).abs() < 1e-12 && h.cap < 8.1);
    }
}
