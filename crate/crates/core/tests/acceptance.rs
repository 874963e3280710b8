//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Every criterion is computed twice; the second pass only feeds the
//! determinism check, which compares the CSV bytes of both passes.

use specweights_core::certify::*;
use specweights_core::discretize::{BoundaryCondition, DomainDescriptor, Grading};
use specweights_core::modal::solve_modal;
use specweights_core::table::csv_bytes;
use specweights_core::{build_domain, DensityField, SolveOptions};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

/// One computation whose CSV must be reproducible.
struct Artifact {
    label: String,
    csv: Vec<u8>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn certificate(cert: &Certificate, art: &mut Vec<Artifact>) -> (CertificateReport, Duration) {
    let t = Instant::now();
    let r = run_certificate(cert, SEED).unwrap_or_else(|e| panic!("{} failed to run: {e}", cert.kind()));
    let dt = t.elapsed();
    art.push(Artifact {
        label: cert.kind().to_string(),
        csv: csv_bytes(&r.rows).expect("csv"),
    });
    (r, dt)
}

fn value_of(r: &CertificateReport, check: &str) -> f64 {
    r.check_named(check).map_or(f64::NAN, |c| c.value)
}

fn failing(r: &CertificateReport) -> String {
    let f: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("{} = {:.4} vs {:.4}", c.name, c.value, c.bound))
        .collect();
    if f.is_empty() {
        "none".into()
    } else {
        f.join("; ")
    }
}

fn baseline(art: &mut Vec<Artifact>) -> Outcome {
    let solve = |desc: DomainDescriptor, bc: BoundaryCondition, count: usize| {
        let d = build_domain(&desc).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        solve_modal(&d, &one, &one, &bc, &SolveOptions::count(count)).unwrap()
    };
    let t = Instant::now();
    let interval = solve(
        DomainDescriptor::Interval {
            a: 0.0,
            b: 1.0,
            n: 400,
            grading: Grading::uniform(),
        },
        BoundaryCondition::Neumann,
        1,
    );
    let t_interval = t.elapsed();
    let circle = solve(
        DomainDescriptor::Circle {
            length: 2.0 * PI,
            n: 400,
        },
        BoundaryCondition::Neumann,
        2,
    );
    let disc = solve(
        DomainDescriptor::RadialBall {
            dimension: 2,
            radius: 1.0,
            n: 400,
            mode: 0,
            grading: Grading::uniform(),
        },
        BoundaryCondition::Dirichlet,
        0,
    );
    let torus = solve(
        DomainDescriptor::FlatTorus {
            lx: 1.0,
            ly: 1.0,
            nx: 32,
            ny: 32,
            grading_x: Grading::uniform(),
            grading_y: Grading::uniform(),
        },
        BoundaryCondition::Neumann,
        1,
    );
    let mu = |s: &specweights_core::modal::ModalSpectrum, k: usize| s.entry_at(k).unwrap().value;
    let e = [
        rel(mu(&interval, 1), PI * PI),
        rel(mu(&circle, 1), 1.0),
        rel(mu(&circle, 2), 1.0),
        rel(mu(&disc, 0), 5.7832),
        rel(mu(&torus, 1), 4.0 * PI * PI),
    ];
    let rows: Vec<SweepRow> = [(&interval, 1), (&circle, 1), (&circle, 2), (&disc, 0), (&torus, 1)]
        .iter()
        .enumerate()
        .map(|(i, (s, k))| {
            let v = s.entry_at(*k).unwrap();
            SweepRow {
                param: i as f64,
                k: *k,
                value: v.value,
                residual: v.residual,
                extra: Default::default(),
            }
        })
        .collect();
    art.push(Artifact {
        label: "baseline".into(),
        csv: csv_bytes(&rows).unwrap(),
    });
    let pass = e[0] < 1e-3 && e[1] < 1e-3 && e[2] < 1e-3 && e[3] < 5e-3 && e[4] < 5e-3 && t_interval < Duration::from_secs(1);
    Outcome {
        pass,
        detail: format!(
            "interval {:.2e} (<1e-3, {:.0} ms < 1 s), circle {:.2e}/{:.2e} (<1e-3), disc Dirichlet {:.2e} (<5e-3), torus {:.2e} (<5e-3)",
            e[0],
            t_interval.as_secs_f64() * 1e3,
            e[1],
            e[2],
            e[3],
            e[4]
        ),
    }
}

fn run_all(art: &mut Vec<Artifact>) -> Vec<(u32, &'static str, Outcome)> {
    let mut out = Vec::new();
    out.push((1, "baseline spectra", baseline(art)));

    let (r, dt) = certificate(&Certificate::default_for("cheeger_lower").unwrap(), art);
    let cases = r.checks.len();
    out.push((
        2,
        "Cheeger lower bound",
        Outcome {
            pass: r.passed() && cases >= 8 && dt < Duration::from_secs(30),
            detail: format!(
                "{cases} instances, {} violations, min margin {:.3e}, {:.1} s (< 30 s)",
                r.checks.iter().filter(|c| !c.holds).count(),
                r.margin,
                dt.as_secs_f64()
            ),
        },
    ));

    let mut parts = Vec::new();
    let mut all = true;
    for (kind, tol) in [("muinf_decay_i", 0.25), ("muinf_decay_ii", 0.25), ("muinf_decay_iii", 0.5)] {
        let (r, dt) = certificate(&Certificate::default_for(kind).unwrap(), art);
        let ok = r.passed() && dt < Duration::from_secs(60);
        all &= ok;
        parts.push(format!(
            "{kind}: slope {:.3} vs {:.3} ± {tol} {} ({:.1} s)",
            r.quantities["slope"],
            r.quantities["expected_slope"],
            if ok { "ok" } else { "FAIL" },
            dt.as_secs_f64()
        ));
    }
    out.push((
        3,
        "concentration decay slopes",
        Outcome {
            pass: all,
            detail: parts.join("; "),
        },
    ));

    let (ri, _) = certificate(&Certificate::default_for("buser_fail_i").unwrap(), art);
    let (rii, _) = certificate(&Certificate::default_for("buser_fail_ii").unwrap(), art);
    out.push((
        4,
        "Buser-type counterexamples",
        Outcome {
            pass: ri.passed() && rii.passed(),
            detail: format!(
                "(i) {} checks, margin {:.3e}, failing: {}; (ii) {} checks, margin {:.3e}, failing: {}",
                ri.checks.len(),
                ri.margin,
                failing(&ri),
                rii.checks.len(),
                rii.margin,
                failing(&rii)
            ),
        },
    ));

    let (zi, _) = certificate(&Certificate::default_for("zerorho_conv").unwrap(), art);
    let disc = Certificate::ZerorhoConv(ZeroRhoConfig {
        domain: DomainDescriptor::Disc {
            radius: 1.0,
            rings: 24,
            sectors: 48,
            grading: Grading::uniform().with_breakpoints([0.5]),
        },
        region: Region::Ball {
            center: vec![0.0, 0.0],
            radius: 0.5,
        },
        oracle: None,
        ..Default::default()
    });
    let (zd, _) = certificate(&disc, art);
    out.push((
        5,
        "zero-density convergence",
        Outcome {
            pass: zi.passed() && zd.passed(),
            detail: format!(
                "interval err vs 4π² {:.3e} (< 1e-2), disc err vs Schur {:.3e} (< 1e-2), worst error growth {:.3}/{:.3} (≤ 1.1)",
                value_of(&zi, "final_rel_err_vs_oracle"),
                value_of(&zd, "final_rel_err_vs_schur"),
                zi.quantities["worst_error_growth"],
                zd.quantities["worst_error_growth"]
            ),
        },
    ));

    let (p, dt_p) = certificate(&Certificate::default_for("planar_sharp").unwrap(), art);
    let six = [
        "hemisphere_rel_err",
        "concentrated_lower",
        "concentrated_upper",
        "hersch_bound_over_mu1",
    ];
    out.push((
        6,
        "planar sharp value",
        Outcome {
            pass: six.iter().all(|n| p.check_named(n).is_some_and(|c| c.holds)) && p.quantities["hersch_violations"] == 0.0,
            detail: format!(
                "t=1 rel err {:.3e} (< 1e-2), t=30 value {:.4} in [{:.2}, {:.2}], Hersch violations {} of 20",
                value_of(&p, "hemisphere_rel_err"),
                value_of(&p, "concentrated_lower"),
                8.0 * 0.97,
                8.0 * 1.02,
                p.quantities["hersch_violations"]
            ),
        },
    ));

    let (h, dt_h) = certificate(&Certificate::default_for("homogeneous_eq").unwrap(), art);
    let disc_ok = ["optimizer_lower", "optimizer_le_cap"]
        .iter()
        .all(|n| p.check_named(n).is_some_and(|c| c.holds));
    let budget = Duration::from_secs(600);
    out.push((
        7,
        "extremal equalities",
        Outcome {
            pass: h.passed() && disc_ok && dt_h < budget && dt_p < budget,
            detail: format!(
                "torus rho {:.4}, sigma {:.4} in [{:.4}, {:.4}] ({:.1} s); disc optimizer {:.4} in [{:.2}, {:.2}] ({:.1} s incl. criterion 6)",
                h.quantities["rho_best"],
                h.quantities["sigma_best"],
                4.0 * PI * PI * 0.95,
                4.0 * PI * PI * 1.01,
                dt_h.as_secs_f64(),
                p.quantities["optimized_mu1"],
                8.0 * 0.95,
                8.0 * 1.02,
                dt_p.as_secs_f64()
            ),
        },
    ));

    let (k, _) = certificate(&Certificate::default_for("kroger_trend").unwrap(), art);
    out.push((
        8,
        "normalized eigenvalue boundedness",
        Outcome {
            pass: k.passed(),
            detail: format!("{} sequences, worst max/min ratio {:.3} (≤ 10)", k.checks.len(), k.quantities["worst_ratio"]),
        },
    ));

    let (c, _) = certificate(&Certificate::default_for("infsup_sigma_decay").unwrap(), art);
    let (s, _) = certificate(&Certificate::default_for("small_big").unwrap(), art);
    out.push((
        9,
        "capped-cylinder decay and small/big",
        Outcome {
            pass: c.passed() && s.passed(),
            detail: format!(
                "optimized decay slope {:.3} (≥ 0.75), monotone {}; λ₁ drop {:.2}x (≥ 10), min μ₁(1,σ) margin {:.3e}",
                c.quantities["slope"],
                c.check_named("monotone_decay").is_some_and(|x| x.holds),
                s.quantities["lambda1_drop"],
                s.margin
            ),
        },
    ));
    out
}

fn main() {
    let mut first = Vec::new();
    let mut results = run_all(&mut first);
    let mut second = Vec::new();
    run_all(&mut second);
    let mismatched: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.label != b.label || a.csv != b.csv)
        .map(|(a, _)| a.label.as_str())
        .collect();
    results.push((
        10,
        "determinism",
        Outcome {
            pass: mismatched.is_empty() && first.len() == second.len(),
            detail: format!(
                "{} CSV artifacts compared byte for byte, mismatches: {}",
                first.len(),
                if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
            ),
        },
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
