//! Fixtures shared by the benchmarks.

use specweights_core::discretize::Grading;
use specweights_core::{build_domain, DensityField, Domain, DomainDescriptor};

pub fn interval(n: usize) -> Domain {
    build_domain(&DomainDescriptor::Interval {
        a: 0.0,
        b: 1.0,
        n,
        grading: Grading::uniform(),
    })
    .expect("valid interval")
}

pub fn torus(n: usize) -> Domain {
    build_domain(&DomainDescriptor::FlatTorus {
        lx: 1.0,
        ly: 1.0,
        nx: n,
        ny: n,
        grading_x: Grading::uniform(),
        grading_y: Grading::uniform(),
    })
    .expect("valid torus")
}

pub fn disc(rings: usize, sectors: usize) -> Domain {
    build_domain(&DomainDescriptor::Disc {
        radius: 1.0,
        rings,
        sectors,
        grading: Grading::uniform(),
    })
    .expect("valid disc")
}

/// A smooth non-constant density, so benchmarks do not hit any
/// constant-coefficient shortcut.
pub fn bumpy(domain: &Domain) -> DensityField {
    DensityField::from_fn(domain, |p| 1.5 + (3.0 * p[0]).sin() * (2.0 * p[1]).cos()).expect("positive field")
}
