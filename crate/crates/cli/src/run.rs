//! Command execution. Each command returns its table and JSON summary; the
//! caller decides where they go.

use serde_json::{json, Value};
use specweights_core::certify::{family_domain, FieldSpec};
use specweights_core::cheeger::{cheeger_constant, CheegerMethod};
use specweights_core::config::{Command, FamilyRole, FamilySweep};
use specweights_core::densities::{make_density_detailed, seeded_random_density, FamilySpec};
use specweights_core::extremal::maximize_mu1;
use specweights_core::modal::solve_modal;
use specweights_core::{build_domain, run_certificate, DensityField, Domain, Error, Result, RunConfig, SweepRow};

pub struct Outcome {
    /// File stem for the artifacts.
    pub name: String,
    pub x_label: &'static str,
    pub rows: Vec<SweepRow>,
    pub report: Value,
}

fn row(param: f64, k: usize, value: f64, residual: f64) -> SweepRow {
    SweepRow {
        param,
        k,
        value,
        residual,
        extra: Default::default(),
    }
}

fn field(domain: &Domain, spec: &Option<FieldSpec>) -> Result<DensityField> {
    match spec {
        Some(s) => s.build(domain),
        None => DensityField::constant(domain, 1.0),
    }
}

/// Stem used for artifacts even when the run fails before producing any.
pub fn artifact_name(cfg: &RunConfig, command: Command) -> String {
    match (command, &cfg.certificate) {
        (Command::Certify, Some(c)) => c.kind().to_string(),
        _ => command.name().to_string(),
    }
}

pub fn execute(cfg: &RunConfig, command: Command, seed: Option<u64>) -> Result<Outcome> {
    let name = artifact_name(cfg, command);
    match command {
        Command::Solve => solve(cfg, name),
        Command::Cheeger => cheeger(cfg, name),
        Command::Family => family(cfg, name),
        Command::Certify => certify(cfg, name, seed.unwrap_or(0)),
        Command::Optimize => optimize(cfg, name, seed.expect("validated: optimize has a seed")),
    }
}

fn domain(cfg: &RunConfig) -> Result<Domain> {
    build_domain(cfg.domain.as_ref().expect("validated: domain present"))
}

fn solve(cfg: &RunConfig, name: String) -> Result<Outcome> {
    let d = domain(cfg)?;
    let rho = field(&d, &cfg.rho)?;
    let sigma = field(&d, &cfg.sigma)?;
    let s = solve_modal(&d, &rho, &sigma, &cfg.boundary, &cfg.solver)?;
    let rows: Vec<SweepRow> = s
        .entries
        .iter()
        .take(cfg.solver.count + 1)
        .enumerate()
        .map(|(k, e)| {
            let mut r = row(0.0, k, e.value, e.residual);
            r.extra.insert("degree".into(), e.degree as f64);
            r.extra.insert("multiplicity".into(), e.multiplicity as f64);
            r
        })
        .collect();
    let report = json!({
        "nodes": d.n_nodes(),
        "volume": d.volume(),
        "max_residual": s.max_residual(),
        "values": rows.iter().map(|r| r.value).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        name,
        x_label: "k",
        rows,
        report,
    })
}

/// Sweep points of a family section: each ε, or the spec as written.
fn family_points(f: &FamilySweep) -> Vec<(f64, FamilySpec)> {
    if f.eps.is_empty() {
        vec![(f.spec.eps().unwrap_or(0.0), f.spec.clone())]
    } else {
        f.eps.iter().map(|&e| (e, f.spec.with_eps(e))).collect()
    }
}

/// Domain and (ρ, σ) for one family sweep point, plus the family's
/// normalization constant when it has one.
fn family_fields(cfg: &RunConfig, f: &FamilySweep, spec: &FamilySpec) -> Result<(Domain, DensityField, DensityField, Option<f64>)> {
    let d = family_domain(cfg.domain.as_ref().expect("validated"), spec)?;
    let ff = make_density_detailed(&d, spec)?;
    let (rho, sigma) = match f.role {
        FamilyRole::Rho => (ff.field, field(&d, &cfg.sigma)?),
        FamilyRole::Sigma => (field(&d, &cfg.rho)?, ff.field),
        FamilyRole::Both => (ff.field.clone(), ff.field),
    };
    Ok((d, rho, sigma, ff.constant))
}

fn cheeger(cfg: &RunConfig, name: String) -> Result<Outcome> {
    let method = cfg.cheeger.clone().unwrap_or_else(CheegerMethod::scan);
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mut push = |param: f64, d: &Domain, rho: &DensityField, sigma: &DensityField| -> Result<()> {
        let h = cheeger_constant(d, rho, sigma, &method)?;
        let mut r = row(param, 0, h.value, f64::NAN);
        r.extra.insert("perimeter".into(), h.perimeter);
        r.extra.insert("volume_rho".into(), h.volume_rho);
        r.extra.insert("volume_sigma".into(), h.volume_sigma);
        r.extra.insert("certified".into(), if h.certified { 1.0 } else { 0.0 });
        rows.push(r);
        estimates.push(serde_json::to_value(&h).unwrap_or(Value::Null));
        Ok(())
    };
    match &cfg.family {
        Some(f) => {
            for (e, spec) in family_points(f) {
                let (d, rho, sigma, _) = family_fields(cfg, f, &spec).map_err(|err| err.context(format!("eps = {e}")))?;
                push(e, &d, &rho, &sigma).map_err(|err| err.context(format!("eps = {e}")))?;
            }
        }
        None => {
            let d = domain(cfg)?;
            push(0.0, &d, &field(&d, &cfg.rho)?, &field(&d, &cfg.sigma)?)?;
        }
    }
    Ok(Outcome {
        name,
        x_label: "eps",
        rows,
        report: json!({ "estimates": estimates }),
    })
}

fn family(cfg: &RunConfig, name: String) -> Result<Outcome> {
    use rayon::prelude::*;
    let f = cfg.family.as_ref().expect("validated: family present");
    let points = family_points(f);
    let results: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|(e, spec)| {
            let run = || -> Result<Vec<SweepRow>> {
                let (d, rho, sigma, constant) = family_fields(cfg, f, spec)?;
                let s = solve_modal(&d, &rho, &sigma, &cfg.boundary, &cfg.solver)?;
                let first = usize::from(matches!(cfg.boundary, specweights_core::BoundaryCondition::Neumann));
                Ok((first..=cfg.solver.count)
                    .filter_map(|k| s.entry_at(k).map(|v| (k, v)))
                    .map(|(k, v)| {
                        let mut r = row(*e, k, v.value, v.residual);
                        r.extra.insert("mean_rho".into(), rho.mean());
                        r.extra.insert("mean_sigma".into(), sigma.mean());
                        if let Some(c) = constant {
                            r.extra.insert("constant".into(), c);
                        }
                        r
                    })
                    .collect())
            };
            run().map_err(|err| err.context(format!("eps = {e}")))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    Ok(Outcome {
        name,
        x_label: "eps",
        report: json!({ "family": f.spec.name(), "points": points.len() }),
        rows,
    })
}

fn certify(cfg: &RunConfig, name: String, seed: u64) -> Result<Outcome> {
    let cert = cfg.certificate.as_ref().expect("validated: certificate present");
    let report = run_certificate(cert, seed)?;
    let rows = report.rows.clone();
    let mut value = serde_json::to_value(&report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    value["seed"] = json!(seed);
    Ok(Outcome {
        name,
        x_label: "sweep parameter",
        rows,
        report: value,
    })
}

fn optimize(cfg: &RunConfig, name: String, seed: u64) -> Result<Outcome> {
    let d = domain(cfg)?;
    let sec = cfg.optimize.as_ref().expect("validated: optimize present");
    let start = if sec.start_amplitude > 0.0 {
        Some(seeded_random_density(&d, seed, sec.start_modes, sec.start_amplitude)?)
    } else {
        None
    };
    let r = maximize_mu1(&d, sec.target, &sec.options, start.as_ref())?;
    let rows = r
        .history
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let mut x = row(i as f64, 1, h.value, f64::NAN);
            x.extra.insert("step".into(), h.step);
            x.extra.insert("cluster".into(), h.cluster as f64);
            x
        })
        .collect();
    let report = json!({
        "seed": seed,
        "target": sec.target,
        "best_value": r.best_value,
        "converged": r.converged,
        "floor_contact": r.floor_contact,
        "iterations": r.history.len() - 1,
        "best_field": r.best_field.values(),
    });
    Ok(Outcome {
        name,
        x_label: "iteration",
        rows,
        report,
    })
}
