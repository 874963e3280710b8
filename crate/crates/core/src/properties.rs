//! Randomized checks of invariants that hold for every input, not just the
//! fixtures used elsewhere.

use crate::certify::fit_loglog;
use crate::densities::seeded_random_density;
use crate::discretize::{build_domain, Domain, DomainDescriptor, Grading};
use crate::extremal::project_mean_one;
use crate::table::format_number;
use crate::{assemble, solve_lowest, BoundaryCondition, DensityField};
use proptest::prelude::*;

fn interval(n: usize) -> Domain {
    build_domain(&DomainDescriptor::Interval {
        a: 0.0,
        b: 1.0,
        n,
        grading: Grading::uniform(),
    })
    .unwrap()
}

fn circle(n: usize) -> Domain {
    build_domain(&DomainDescriptor::Circle { length: 1.0, n }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normalized_fields_have_unit_mean_and_are_idempotent(seed in any::<u64>(), amp in 0.1f64..3.0) {
        let d = interval(64);
        let f = seeded_random_density(&d, seed, 3, amp).unwrap();
        prop_assert!((f.mean() - 1.0).abs() < 1e-12);
        let g = f.scaled(7.5).unwrap().normalize_mean(&d).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn eigenvalues_scale_inversely_with_rho_and_linearly_with_sigma(
        seed in any::<u64>(), c in 0.01f64..100.0
    ) {
        let d = circle(48);
        let rho = seeded_random_density(&d, seed, 2, 1.0).unwrap();
        let sigma = seeded_random_density(&d, seed.wrapping_add(1), 2, 1.0).unwrap();
        let bc = BoundaryCondition::Neumann;
        let base = solve_lowest(&assemble(&d, &rho, &sigma, &bc).unwrap(), 3, 1e-10).unwrap();
        let heavy = solve_lowest(&assemble(&d, &rho.scaled(c).unwrap(), &sigma, &bc).unwrap(), 3, 1e-10).unwrap();
        let stiff = solve_lowest(&assemble(&d, &rho, &sigma.scaled(c).unwrap(), &bc).unwrap(), 3, 1e-10).unwrap();
        for k in 1..=3 {
            prop_assert!((heavy.values[k] * c / base.values[k] - 1.0).abs() < 1e-7);
            prop_assert!((stiff.values[k] / (c * base.values[k]) - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn constants_are_in_the_neumann_kernel(seed in any::<u64>()) {
        let d = interval(40);
        let sigma = seeded_random_density(&d, seed, 3, 2.0).unwrap();
        let rho = DensityField::constant(&d, 1.0).unwrap();
        let f = assemble(&d, &rho, &sigma, &BoundaryCondition::Neumann).unwrap();
        let ones = vec![1.0; f.k.n()];
        let ku = f.k.mul_vec(&ones);
        let scale = f.k.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(ku.iter().all(|v| v.abs() <= 1e-12 * scale));
    }

    #[test]
    fn projection_is_feasible(v in proptest::collection::vec(-2.0f64..5.0, 65), floor in 1e-6f64..0.5) {
        let d = interval(64);
        let p = project_mean_one(&d, &v, floor).unwrap();
        prop_assert!(p.iter().all(|x| *x >= floor * (1.0 - 1e-12)));
        let mean = d.integrate(&p) / d.volume();
        prop_assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loglog_fit_recovers_exact_power_laws(slope in -3.0f64..3.0, c in 0.01f64..100.0) {
        let x = [0.2, 0.1, 0.05, 0.02];
        let y: Vec<f64> = x.iter().map(|e: &f64| c * e.powf(slope)).collect();
        let fit = fit_loglog(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
    }

    #[test]
    fn table_numbers_keep_twelve_significant_digits(v in prop::num::f64::NORMAL) {
        let back: f64 = format_number(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-12 * v.abs());
    }
}
