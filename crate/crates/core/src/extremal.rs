//! Projected ascent on μ₁(ρ,1) over {⨍ρ = 1} or on μ₁(1,σ) over {⨍σ = 1}.
//!
//! Every accepted iterate is a feasible density, so the best value found is
//! a certified lower bound for the corresponding extremal eigenvalue.
//!
//! The derivative of a simple eigenvalue with respect to a nodal density
//! value is `−μ ∂(uᵀMu)/∂ρ_k` or `∂(uᵀKu)/∂σ_k` for the M-normalized
//! eigenvector `u`. At a multiple eigenvalue μ₁ is only directionally
//! differentiable; the derivative fields of the cluster members are averaged
//! and steps are accepted only if μ₁ strictly increases.
//!
//! On radial and warped models μ₁ is the smaller of the second ℓ = 0 value
//! and the first ℓ = 1 value (values grow with ℓ), and the density is
//! automatically restricted to the radial class.

use crate::discretize::{
    assemble, harmonic_multiplicity, mass_sensitivity, stiffness_sensitivity, AssembledForms, BoundaryCondition,
    DensityField, Domain,
};
use crate::eigen::{solve_forms_warm, SolveOptions};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Rho,
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    pub max_iter: usize,
    /// Lower bound on density values.
    pub floor: f64,
    /// First trial step, in units of the mean density.
    pub initial_step: f64,
    /// Give up when no ascent step of at least this size is found.
    pub min_step: f64,
    /// Relative gap under which eigenvalues are treated as one cluster.
    pub cluster_tol: f64,
    /// Eigenpairs computed per solve (must exceed the expected multiplicity).
    pub count: usize,
    /// Stop once the relative gain over `patience` accepted steps is below this.
    pub gain_tol: f64,
    pub patience: usize,
    pub solver: SolveOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            max_iter: 200,
            floor: 1e-6,
            initial_step: 0.25,
            min_step: 1e-8,
            cluster_tol: 1e-3,
            count: 6,
            gain_tol: 1e-7,
            patience: 20,
            solver: SolveOptions {
                tol: 1e-8,
                // warm-started Krylov beats the dense route across iterations
                dense_threshold: 64,
                ..SolveOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub value: f64,
    pub step: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_field: DensityField,
    pub best_value: f64,
    pub history: Vec<HistoryEntry>,
    pub converged: bool,
    /// Smallest value of the best field relative to the floor; values close
    /// to one flag a maximizing sequence that degenerates.
    pub floor_contact: f64,
}

/// One eigenpair candidate for μ₁, lifted to all nodes.
struct Candidate {
    value: f64,
    degree: usize,
    vector: Vec<f64>,
}

struct Evaluation {
    value: f64,
    cluster: Vec<Candidate>,
    /// Warm-start vectors per solved degree.
    starts: Vec<Vec<Vec<f64>>>,
}

struct Model<'a> {
    domain: &'a Domain,
    target: Target,
    opts: &'a OptimizeOptions,
    /// Domains carrying the needed angular modes.
    modes: Vec<Domain>,
}

impl<'a> Model<'a> {
    fn new(domain: &'a Domain, target: Target, opts: &'a OptimizeOptions) -> Result<Self> {
        let reduced = domain.kind().is_reduced();
        let mut modes = vec![domain.with_angular_mode(0)?];
        if reduced && harmonic_multiplicity(1, domain.dimension()) > 0 {
            modes.push(domain.with_angular_mode(1)?);
        }
        Ok(Model {
            domain,
            target,
            opts,
            modes,
        })
    }

    fn forms(&self, mode: &Domain, field: &DensityField, one: &DensityField) -> Result<AssembledForms> {
        let bc = BoundaryCondition::Neumann;
        match self.target {
            Target::Rho => assemble(mode, field, one, &bc),
            Target::Sigma => assemble(mode, one, field, &bc),
        }
    }

    fn evaluate(&self, field: &DensityField, warm: Option<&[Vec<Vec<f64>>]>) -> Result<Evaluation> {
        let one = DensityField::constant(self.domain, 1.0)?;
        let mut cands = Vec::new();
        let mut starts = Vec::new();
        for (degree, mode) in self.modes.iter().enumerate() {
            let forms = self.forms(mode, field, &one)?;
            let count = if degree == 0 { self.opts.count } else { self.opts.count.saturating_sub(1).max(1) };
            let count = count.min(forms.n().saturating_sub(1));
            let solver = SolveOptions {
                count,
                ..self.opts.solver.clone()
            };
            let start = warm.and_then(|w| w.get(degree)).map_or(&[][..], |v| v.as_slice());
            let s = solve_forms_warm(&forms, &solver, start)?;
            let first = if degree == 0 { 1 } else { 0 };
            for (&v, u) in s.values.iter().zip(&s.vectors).skip(first) {
                cands.push(Candidate {
                    value: v,
                    degree,
                    vector: forms.expand(u),
                });
            }
            starts.push(s.vectors);
        }
        cands.sort_by(|a, b| a.value.total_cmp(&b.value));
        let value = cands.first().ok_or(Error::InvalidDescriptor("no eigenvalue above μ₀".into()))?.value;
        let tol = self.opts.cluster_tol * value.abs().max(f64::MIN_POSITIVE);
        let cluster: Vec<Candidate> = cands.into_iter().take_while(|c| c.value - value <= tol).collect();
        Ok(Evaluation { value, cluster, starts })
    }

    /// Derivative of each eigenvalue branch in the cluster with respect to
    /// nodal density values.
    fn branch_gradients(&self, eval: &Evaluation) -> Vec<Vec<f64>> {
        eval.cluster
            .iter()
            .map(|c| {
                let mode = &self.modes[c.degree];
                match self.target {
                    Target::Rho => mass_sensitivity(mode, &c.vector).into_iter().map(|v| -c.value * v).collect(),
                    Target::Sigma => stiffness_sensitivity(mode, &c.vector),
                }
            })
            .collect()
    }
}

/// Ascent direction for the smallest of several eigenvalue branches.
///
/// Each gradient is mapped to the tangent space of `{⨍f = 1}` in the metric
/// `H = diag(w/f)`, and the direction is the minimum-norm point of the
/// convex hull of those representatives. By the optimality conditions of
/// that point every branch increases at rate at least `‖d‖²` along it, so a
/// crossing of branches is not mistaken for a stationary point.
fn ascent_direction(weights: &[f64], field: &[f64], grads: &[Vec<f64>]) -> Vec<f64> {
    let total: f64 = weights.iter().zip(field).map(|(w, f)| w * f).sum();
    let reps: Vec<Vec<f64>> = grads
        .iter()
        .map(|g| {
            let c = g.iter().zip(field).map(|(g, f)| g * f).sum::<f64>() / total;
            g.iter()
                .zip(weights)
                .zip(field)
                .map(|((g, w), f)| if *w > 0.0 { f * (g / w - c) } else { 0.0 })
                .collect()
        })
        .collect();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(weights.iter().zip(field))
            .map(|((x, y), (w, f))| if *f > 0.0 { w / f * x * y } else { 0.0 })
            .sum()
    };
    let k = reps.len();
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| ip(&reps[i], &reps[j])).collect()).collect();
    // Frank–Wolfe with exact line search on the simplex.
    let mut lam = vec![1.0 / k as f64; k];
    for _ in 0..1000 {
        let grad: Vec<f64> = (0..k).map(|i| (0..k).map(|j| gram[i][j] * lam[j]).sum()).collect();
        let (vertex, _) = grad
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
        let cur: f64 = lam.iter().zip(&grad).map(|(l, g)| l * g).sum();
        let gap = cur - grad[vertex];
        if gap <= 1e-14 * cur.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        // minimize |(1−t)x + t e_v|² over t ∈ [0,1]
        let vv = gram[vertex][vertex];
        let denom = cur - 2.0 * grad[vertex] + vv;
        let t = if denom > 0.0 { (gap / denom).clamp(0.0, 1.0) } else { 1.0 };
        lam.iter_mut().for_each(|l| *l *= 1.0 - t);
        lam[vertex] += t;
    }
    let n = field.len();
    let mut d = vec![0.0; n];
    for (l, r) in lam.iter().zip(&reps) {
        for (di, ri) in d.iter_mut().zip(r) {
            *di += l * ri;
        }
    }
    d
}

/// Shift-and-clip projection onto `{⨍f = 1, f ≥ floor}`: finds λ with
/// `⨍ max(v − λ, floor) = 1` by bisection.
pub fn project_mean_one(domain: &Domain, v: &[f64], floor: f64) -> Result<Vec<f64>> {
    let w = domain.node_weights();
    let vol = domain.volume();
    if floor >= 1.0 {
        return Err(Error::InvalidParameter("floor must be below the mean".into()));
    }
    let mean = |lam: f64| v.iter().zip(w).map(|(x, c)| c * (x - lam).max(floor)).sum::<f64>() / vol;
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    // mean(lo) ≥ 1 ≥ mean(hi)
    let mut lo = vmin - 1.0;
    let mut hi = vmax - floor;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let lam = 0.5 * (lo + hi);
    let mut out: Vec<f64> = v.iter().map(|x| (x - lam).max(floor)).collect();
    // remove the last bisection residue exactly by scaling the free part
    let m = out.iter().zip(w).map(|(x, c)| c * x).sum::<f64>() / vol;
    if (m - 1.0).abs() > 1e-13 {
        let fixed: f64 = out.iter().zip(w).filter(|(x, _)| **x <= floor).map(|(x, c)| c * x).sum::<f64>() / vol;
        let free = m - fixed;
        if free > 0.0 {
            let s = (1.0 - fixed) / free;
            out.iter_mut().filter(|x| **x > floor).for_each(|x| *x = (*x * s).max(floor));
        }
    }
    Ok(out)
}

pub fn maximize_mu1(
    domain: &Domain,
    target: Target,
    opts: &OptimizeOptions,
    initial: Option<&DensityField>,
) -> Result<OptimizationResult> {
    if !(opts.floor > 0.0) || !(opts.initial_step > 0.0) || opts.count < 2 {
        return Err(Error::InvalidParameter(
            "optimizer needs floor > 0, initial_step > 0 and count ≥ 2".into(),
        ));
    }
    let model = Model::new(domain, target, opts)?;
    let start = match initial {
        Some(f) => f.clone(),
        None => DensityField::constant(domain, 1.0)?,
    };
    let mut field = DensityField::new(domain, project_mean_one(domain, start.values(), opts.floor)?)?;
    let mut eval = model.evaluate(&field, None)?;
    let mut history = vec![HistoryEntry {
        value: eval.value,
        step: 0.0,
        cluster: eval.cluster.len(),
    }];
    let mut step = opts.initial_step;
    let mut converged = false;
    let w = domain.node_weights();
    let mut accepted: Vec<f64> = vec![eval.value];
    for _ in 0..opts.max_iter {
        let grads = model.branch_gradients(&eval);
        let dir = ascent_direction(w, field.values(), &grads);
        let scale = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            converged = true;
            break;
        }
        let mut moved = false;
        while step >= opts.min_step {
            let trial: Vec<f64> = field.values().iter().zip(&dir).map(|(f, d)| f + step * d / scale).collect();
            let trial = DensityField::new(domain, project_mean_one(domain, &trial, opts.floor)?)?;
            // a trial the solver cannot certify is treated like a failed step
            let te = match model.evaluate(&trial, Some(&eval.starts)) {
                Ok(te) => te,
                Err(Error::Convergence { .. }) => {
                    step *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if te.value > eval.value {
                field = trial;
                eval = te;
                history.push(HistoryEntry {
                    value: eval.value,
                    step,
                    cluster: eval.cluster.len(),
                });
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        accepted.push(eval.value);
        if accepted.len() > opts.patience {
            let old = accepted[accepted.len() - 1 - opts.patience];
            if (eval.value - old) <= opts.gain_tol * eval.value.abs() {
                converged = true;
                break;
            }
        }
    }
    // re-verify the certificate from scratch
    let check = model.evaluate(&field, None)?;
    let floor_contact = field.min() / opts.floor;
    Ok(OptimizationResult {
        best_value: check.value,
        best_field: field,
        history,
        converged,
        floor_contact,
    })
}

/// μ₁ of the (ρ,1) or (1,σ) problem for a given field, with the same
/// mode handling as the optimizer.
pub fn mu1_of(domain: &Domain, target: Target, field: &DensityField, opts: &OptimizeOptions) -> Result<f64> {
    Ok(Model::new(domain, target, opts)?.evaluate(field, None)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{interval, Grading};

    #[test]
    fn projection_hits_mean_one_and_floor() {
        let d = interval(0.0, 2.0, 40, &Grading::uniform()).unwrap();
        let v: Vec<f64> = d.nodes().iter().map(|p| 3.0 * p[0] - 2.0).collect();
        let f = project_mean_one(&d, &v, 1e-3).unwrap();
        let mean = d.integrate(&f) / d.volume();
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(f.iter().all(|&x| x >= 1e-3));
        let again = project_mean_one(&d, &f, 1e-3).unwrap();
        for (a, b) in f.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_iterations_certify_the_constant_density() {
        let d = interval(0.0, 1.0, 200, &Grading::uniform()).unwrap();
        let opts = OptimizeOptions {
            max_iter: 0,
            ..Default::default()
        };
        let r = maximize_mu1(&d, Target::Rho, &opts, None).unwrap();
        assert!((r.best_value / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn history_is_nondecreasing_and_value_reproducible() {
        let d = interval(0.0, 1.0, 120, &Grading::uniform()).unwrap();
        let init = DensityField::from_fn(&d, |p| 1.0 + 0.8 * (6.0 * p[0]).sin()).unwrap();
        let opts = OptimizeOptions {
            max_iter: 15,
            ..Default::default()
        };
        for target in [Target::Rho, Target::Sigma] {
            let r = maximize_mu1(&d, target, &opts, Some(&init)).unwrap();
            assert!(r.history.windows(2).all(|w| w[1].value > w[0].value));
            let again = mu1_of(&d, target, &r.best_field, &opts).unwrap();
            assert!((again - r.best_value).abs() <= 1e-9 * r.best_value);
            assert!((r.best_field.mean() - 1.0).abs() < 1e-10);
            assert!(r.history.len() > 1, "{target:?} made no progress");
        }
    }
}
