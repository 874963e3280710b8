//! Full spectra of radial and warped-product models.
//!
//! Separation of variables turns the problem on a rotationally symmetric
//! manifold into one 1-D problem per spherical-harmonic degree ℓ, each
//! eigenvalue of degree ℓ appearing with the multiplicity of the degree-ℓ
//! harmonics. Eigenvalues increase with ℓ, so modes are added until the
//! lowest eigenvalue of the next degree exceeds everything already kept.

use crate::discretize::{assemble, harmonic_multiplicity, AssembledForms, BoundaryCondition, DensityField, Domain};
use crate::eigen::{solve_forms, SolveOptions, Spectrum};
use crate::error::Result;

/// Upper limit on the angular degree explored.
pub const MAX_DEGREE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalValue {
    pub value: f64,
    pub residual: f64,
    /// Angular degree ℓ.
    pub degree: usize,
    /// Position inside the degree-ℓ spectrum.
    pub index: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    /// Distinct eigenvalues, ascending, with their multiplicities.
    pub entries: Vec<ModalValue>,
    /// The solved spectrum of every degree that was needed.
    pub modes: Vec<(usize, Spectrum)>,
}

impl ModalSpectrum {
    /// Eigenvalues repeated according to multiplicity, truncated to
    /// `count + 1` entries (indices 0..=count).
    pub fn values(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count + 1);
        for e in &self.entries {
            for _ in 0..e.multiplicity {
                if out.len() > count {
                    return out;
                }
                out.push(e.value);
            }
        }
        out
    }

    /// The entry that carries the k-th eigenvalue (counted with multiplicity).
    pub fn entry_at(&self, k: usize) -> Option<&ModalValue> {
        let mut seen = 0;
        for e in &self.entries {
            seen += e.multiplicity;
            if k < seen {
                return Some(e);
            }
        }
        None
    }

    pub fn spectrum_of(&self, degree: usize) -> Option<&Spectrum> {
        self.modes.iter().find(|(l, _)| *l == degree).map(|(_, s)| s)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Assembles the forms of a single angular degree.
pub fn mode_forms(
    domain: &Domain,
    degree: usize,
    rho: &DensityField,
    sigma: &DensityField,
    bc: &BoundaryCondition,
) -> Result<AssembledForms> {
    let d = domain.with_angular_mode(degree)?;
    assemble(&d, rho, sigma, bc)
}

/// Eigenvalues 0..=`opts.count` counted with multiplicity. On kinds without
/// angular reduction this is a single solve with multiplicity one.
pub fn solve_modal(
    domain: &Domain,
    rho: &DensityField,
    sigma: &DensityField,
    bc: &BoundaryCondition,
    opts: &SolveOptions,
) -> Result<ModalSpectrum> {
    let count = opts.count;
    let mut entries: Vec<ModalValue> = Vec::new();
    let mut modes = Vec::new();
    let reduced = domain.kind().is_reduced();
    let n = domain.dimension();
    for degree in 0..=MAX_DEGREE {
        let mult = if reduced { harmonic_multiplicity(degree, n) } else { 1 };
        if mult == 0 {
            break;
        }
        // kth value with multiplicity among what is kept so far
        let threshold = kth(&entries, count);
        let forms = mode_forms(domain, degree, rho, sigma, bc)?;
        let want = count.min(forms.n().saturating_sub(1));
        let spec = solve_forms(&forms, &SolveOptions { count: want, ..opts.clone() })?;
        if let Some(t) = threshold {
            if spec.values[0] > t * (1.0 + 1e-9) {
                break;
            }
        }
        for (i, (&v, &r)) in spec.values.iter().zip(&spec.residuals).enumerate() {
            entries.push(ModalValue {
                value: v,
                residual: r,
                degree,
                index: i,
                multiplicity: mult,
            });
        }
        entries.sort_by(|a, b| a.value.total_cmp(&b.value));
        modes.push((degree, spec));
        if !reduced {
            break;
        }
    }
    // keep only what is needed to cover indices 0..=count
    let mut kept = Vec::new();
    let mut seen = 0;
    for e in entries {
        if seen > count {
            break;
        }
        seen += e.multiplicity;
        kept.push(e);
    }
    Ok(ModalSpectrum { entries: kept, modes })
}

fn kth(entries: &[ModalValue], k: usize) -> Option<f64> {
    let mut seen = 0;
    for e in entries {
        seen += e.multiplicity;
        if k < seen {
            return Some(e.value);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_domain, DomainDescriptor, Grading};

    fn unit_ball(n: usize, cells: usize) -> Domain {
        build_domain(&DomainDescriptor::RadialBall {
            dimension: n,
            radius: 1.0,
            n: cells,
            mode: 0,
            grading: Grading::uniform(),
        })
        .unwrap()
    }

    #[test]
    fn neumann_disc_first_value_is_a_double_degree_one_value() {
        let d = unit_ball(2, 400);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let s = solve_modal(&d, &one, &one, &BoundaryCondition::Neumann, &SolveOptions::count(3)).unwrap();
        let v = s.values(3);
        assert_eq!(v.len(), 4);
        assert!(v[0].abs() < 1e-8);
        assert!((v[1] - 3.389_95).abs() < 2e-3, "{v:?}");
        assert_eq!(v[1], v[2]);
        assert_eq!(s.entry_at(1).unwrap().degree, 1);
        // j'_{2,1}² ≈ 9.3284
        assert!((v[3] - 9.3284).abs() < 5e-3, "{v:?}");
    }

    #[test]
    fn three_ball_degree_one_has_multiplicity_three() {
        let d = unit_ball(3, 300);
        let one = DensityField::constant(&d, 1.0).unwrap();
        let s = solve_modal(&d, &one, &one, &BoundaryCondition::Neumann, &SolveOptions::count(3)).unwrap();
        let e = s.entry_at(1).unwrap();
        assert_eq!((e.degree, e.multiplicity), (1, 3));
        // first root of (j_1)' is 2.0816 so μ₁ = 4.3330
        assert!((e.value - 4.3330).abs() < 2e-3, "{}", e.value);
    }
}
