//! Lowest eigenpairs of the symmetric pencil `K u = μ M u`.
//!
//! Small problems go through a dense Cholesky reduction. Larger ones use a
//! restarted block Krylov method on the shift-inverted operator
//! `(K + τM)⁻¹M` with Rayleigh–Ritz projections computed from the
//! difference-form stiffness, so tiny eigenvalues keep their relative
//! accuracy even when the densities span many orders of magnitude.

use crate::discretize::AssembledForms;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, CsrMatrix, EnvelopeCholesky, LaplacianForm};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Highest index requested; `count + 1` pairs are returned.
    pub count: usize,
    pub tol: f64,
    pub seed: u64,
    /// Cap on shift-inverted operator applications.
    pub max_applications: usize,
    /// Problems with at most this many unknowns are solved densely.
    pub dense_threshold: usize,
    /// Relative gap below which neighbouring eigenvalues share a cluster.
    pub cluster_tol: f64,
    /// Allow a semidefinite mass (masked densities); forces the Krylov path.
    pub singular_mass: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            count: 1,
            tol: 1e-8,
            seed: 0x5eed,
            max_applications: 10_000,
            dense_threshold: 600,
            cluster_tol: 1e-6,
            singular_mass: false,
        }
    }
}

impl SolveOptions {
    pub fn count(count: usize) -> Self {
        SolveOptions {
            count,
            ..Default::default()
        }
    }
}

/// Lowest eigenpairs with M-orthonormal vectors (in dof space).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub clusters: Vec<Vec<usize>>,
}

impl Spectrum {
    /// Indices sharing a cluster with eigenvalue `i`.
    pub fn cluster_of(&self, i: usize) -> &[usize] {
        self.clusters
            .iter()
            .find(|c| c.contains(&i))
            .map(|c| c.as_slice())
            .unwrap_or(&[])
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Lowest `count + 1` eigenpairs with default options.
pub fn solve_lowest(forms: &AssembledForms, count: usize, tol: f64) -> Result<Spectrum> {
    let opts = SolveOptions {
        count,
        tol,
        ..Default::default()
    };
    solve_forms(forms, &opts)
}

pub fn solve_forms(forms: &AssembledForms, opts: &SolveOptions) -> Result<Spectrum> {
    solve_pencil(&forms.stiffness, &forms.k, &forms.mass, opts, &[])
}

/// Same as [`solve_forms`], seeding the Krylov block with `start` vectors.
pub fn solve_forms_warm(forms: &AssembledForms, opts: &SolveOptions, start: &[Vec<f64>]) -> Result<Spectrum> {
    solve_pencil(&forms.stiffness, &forms.k, &forms.mass, opts, start)
}

/// `uᵀKu / uᵀMu` on dof vectors.
pub fn rayleigh_quotient(forms: &AssembledForms, u: &[f64]) -> Result<f64> {
    if u.len() != forms.n() {
        return Err(Error::Shape {
            expected: forms.n(),
            got: u.len(),
        });
    }
    let m = forms.mass.quad_form(u);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::DegenerateTrial);
    }
    Ok(forms.stiffness.energy(u) / m)
}

pub fn solve_pencil(
    stiffness: &LaplacianForm,
    k: &CsrMatrix,
    m: &CsrMatrix,
    opts: &SolveOptions,
    start: &[Vec<f64>],
) -> Result<Spectrum> {
    let n = m.n();
    if n == 0 {
        return Err(Error::InvalidMass);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let want = (opts.count + 1).min(n);
    if n <= opts.dense_threshold && !opts.singular_mass {
        let dense = dense_solve(stiffness, k, m, want, opts)?;
        let scale = dense.values[want - 1].abs();
        let floor = RoundoffFloor::new(k, m);
        let ok = dense
            .residuals
            .iter()
            .zip(&dense.values)
            .zip(&dense.vectors)
            .all(|((r, v), u)| converged(*r, *v, scale, floor.at(m, u, *v), opts.tol));
        if ok || n <= want + 2 {
            return Ok(dense);
        }
        return krylov_solve(stiffness, k, m, opts, &dense.vectors);
    }
    krylov_solve(stiffness, k, m, opts, start)
}

fn finish(stiffness: &LaplacianForm, m: &CsrMatrix, mut vecs: Vec<Vec<f64>>, opts: &SolveOptions) -> Spectrum {
    let mut pairs: Vec<(f64, Vec<f64>)> = vecs
        .drain(..)
        .map(|mut u| {
            let mm = m.quad_form(&u).max(f64::MIN_POSITIVE);
            let s = 1.0 / mm.sqrt();
            u.iter_mut().for_each(|x| *x *= s);
            let imax = u
                .iter()
                .enumerate()
                .fold((0usize, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 * (1.0 + 1e-9) { (i, x.abs()) } else { acc })
                .0;
            if u[imax] < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
            (stiffness.energy(&u), u)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vectors: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(u, &mu)| residual(stiffness, m, u, mu))
        .collect();
    let scale = values.last().map_or(0.0, |v| v.abs());
    let clusters = cluster(&values, opts.cluster_tol, 1e-12 * scale);
    Spectrum {
        values,
        vectors,
        residuals,
        clusters,
    }
}

/// Smallest residual that floating point can certify for a pair: a small
/// multiple of machine precision times `(‖K‖ + |μ|‖M‖)‖u‖ / ‖Mu‖`.
struct RoundoffFloor {
    k_norm: f64,
    m_norm: f64,
}

impl RoundoffFloor {
    fn new(k: &CsrMatrix, m: &CsrMatrix) -> Self {
        let row_max = |a: &CsrMatrix| (0..a.n()).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        RoundoffFloor {
            k_norm: row_max(k),
            m_norm: row_max(m),
        }
    }

    fn at(&self, m: &CsrMatrix, u: &[f64], mu: f64) -> f64 {
        let mu_norm = norm(&m.mul_vec(u)).max(f64::MIN_POSITIVE);
        1e3 * f64::EPSILON * (self.k_norm + mu.abs() * self.m_norm) * norm(u) / mu_norm
    }
}

/// Scale-aware test: the residual is measured against the larger of the
/// pair's own value and the top requested value, so a near-zero eigenvalue
/// does not demand an unattainable relative accuracy.
fn converged(r: f64, mu: f64, scale: f64, floor: f64, tol: f64) -> bool {
    r <= tol * mu.abs().max(scale).max(f64::MIN_POSITIVE) + floor
}

fn residual(stiffness: &LaplacianForm, m: &CsrMatrix, u: &[f64], mu: f64) -> f64 {
    let ku = stiffness.apply(u);
    let mu_vec = m.mul_vec(u);
    let r: Vec<f64> = ku.iter().zip(&mu_vec).map(|(a, b)| a - mu * b).collect();
    norm(&r) / norm(&mu_vec).max(f64::MIN_POSITIVE)
}

/// Groups sorted values whose relative gap is below `tol`.
pub fn cluster(values: &[f64], tol: f64, floor: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if {
                let prev = values[*c.last().unwrap()];
                (v - prev).abs() <= tol * v.abs().max(prev.abs()) + floor
            } =>
            {
                c.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out
}

fn dense_solve(
    stiffness: &LaplacianForm,
    k: &CsrMatrix,
    m: &CsrMatrix,
    want: usize,
    opts: &SolveOptions,
) -> Result<Spectrum> {
    let kd = k.to_dense();
    let md = m.to_dense();
    let chol = nalgebra::Cholesky::new(md).ok_or(Error::InvalidMass)?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&kd).ok_or(Error::InvalidMass)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(Error::InvalidMass)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut vecs = Vec::with_capacity(want);
    for &j in order.iter().take(want) {
        let y = eig.eigenvectors.column(j).into_owned();
        let u = l.tr_solve_lower_triangular(&y).ok_or(Error::InvalidMass)?;
        vecs.push(u.iter().copied().collect());
    }
    Ok(finish(stiffness, m, vecs, opts))
}

struct Basis {
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl Basis {
    /// M-orthonormalizes `y` against the basis (two Gram–Schmidt passes)
    /// and appends it unless it is numerically dependent.
    fn push(&mut self, m: &CsrMatrix, mut y: Vec<f64>) -> bool {
        let mut my = m.mul_vec(&y);
        let n0 = dot(&y, &my).max(0.0).sqrt();
        if !(n0 > 0.0) || !n0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for (vj, mvj) in self.v.iter().zip(&self.mv) {
                let c = dot(vj, &my);
                axpy(-c, vj, &mut y);
                axpy(-c, mvj, &mut my);
            }
        }
        my = m.mul_vec(&y);
        let nrm = dot(&y, &my).max(0.0).sqrt();
        if !(nrm > 1e-10 * n0) {
            return false;
        }
        y.iter_mut().for_each(|x| *x /= nrm);
        my.iter_mut().for_each(|x| *x /= nrm);
        self.v.push(y);
        self.mv.push(my);
        true
    }
}

fn krylov_solve(
    stiffness: &LaplacianForm,
    k: &CsrMatrix,
    m: &CsrMatrix,
    opts: &SolveOptions,
    start: &[Vec<f64>],
) -> Result<Spectrum> {
    let n = m.n();
    let want = (opts.count + 1).min(n);
    let guard = 2 + want / 2;
    let b = (want + guard).min(n);
    const STEPS: usize = 5;

    let floor = RoundoffFloor::new(k, m);
    let (tk, tm) = (k.trace(), m.trace());
    if !(tm > 0.0) {
        return Err(Error::InvalidMass);
    }
    let base = if tk > 0.0 { tk / tm } else { 1.0 };
    let mut tau = 1e-8 * base;
    let factor = loop {
        if let Some(f) = EnvelopeCholesky::factor(&k.add_scaled(m, tau)) {
            break f;
        }
        tau *= 100.0;
        if tau > base {
            return Err(Error::InvalidMass);
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = start.iter().filter(|s| s.len() == n).take(b).cloned().collect();
    while block.len() < b {
        block.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }

    let mut applications = 0usize;
    let mut best = f64::INFINITY;
    loop {
        let mut basis = Basis { v: vec![], mv: vec![] };
        let mut last: Vec<usize> = Vec::new();
        for x in block.drain(..) {
            if basis.push(m, x) {
                last.push(basis.v.len() - 1);
            }
        }
        for _ in 1..STEPS {
            let mut next = Vec::new();
            for &j in &last {
                let y = factor.solve(&basis.mv[j]);
                applications += 1;
                if basis.push(m, y) {
                    next.push(basis.v.len() - 1);
                }
            }
            if next.is_empty() {
                break;
            }
            last = next;
        }
        let dim = basis.v.len();
        if dim < want {
            // Saturated basis on a tiny problem: refill with random vectors.
            for _ in dim..want {
                let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                basis.push(m, r);
            }
        }
        let dim = basis.v.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut g = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let hij = stiffness.bilinear(&basis.v[i], &basis.v[j]);
                let gij = dot(&basis.v[i], &basis.mv[j]);
                h[(i, j)] = hij;
                h[(j, i)] = hij;
                g[(i, j)] = gij;
                g[(j, i)] = gij;
            }
        }
        let (theta, y) = small_generalized(h, g)?;
        let mut ritz: Vec<(f64, Vec<f64>)> = Vec::with_capacity(b.min(dim));
        for (idx, &t) in theta.iter().enumerate().take(b.min(dim)) {
            let mut u = vec![0.0; n];
            for (c, v) in y.column(idx).iter().zip(&basis.v) {
                axpy(*c, v, &mut u);
            }
            ritz.push((t, u));
        }
        let scale = ritz[want - 1].0.abs();
        let mut worst: f64 = 0.0;
        let mut done = true;
        for (t, u) in ritz.iter().take(want) {
            let r = residual(stiffness, m, u, *t);
            worst = worst.max(r / t.abs().max(scale).max(f64::MIN_POSITIVE));
            done &= converged(r, *t, scale, floor.at(m, u, *t), opts.tol);
        }
        best = best.min(worst);
        if done {
            let vecs = ritz.into_iter().take(want).map(|p| p.1).collect();
            return Ok(finish(stiffness, m, vecs, opts));
        }
        if applications >= opts.max_applications {
            return Err(Error::Convergence {
                iterations: applications,
                best_residual: best,
            });
        }
        block = ritz.into_iter().map(|p| p.1).collect();
    }
}

/// Solves `H y = θ G y` for a small dense SPD `G`; ascending order.
fn small_generalized(h: DMatrix<f64>, g: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = h.nrows();
    let chol = nalgebra::Cholesky::new(g).ok_or(Error::InvalidMass)?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&h).ok_or(Error::InvalidMass)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(Error::InvalidMass)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut y = DMatrix::<f64>::zeros(dim, dim);
    let mut theta = Vec::with_capacity(dim);
    for (col, &j) in order.iter().enumerate() {
        let z = eig.eigenvectors.column(j).into_owned();
        let w = l.tr_solve_lower_triangular(&z).ok_or(Error::InvalidMass)?;
        y.set_column(col, &w);
        theta.push(eig.eigenvalues[j]);
    }
    Ok((theta, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, circle, interval, BoundaryCondition, DensityField, Grading};

    #[test]
    fn two_by_two_closed_form() {
        let form = LaplacianForm::new(2, vec![(0, 1, 1.0)], vec![0.0, 0.0], None);
        let m = CsrMatrix::identity(2);
        let s = solve_pencil(&form, &form.to_csr(), &m, &SolveOptions::count(1), &[]).unwrap();
        assert!(s.values[0].abs() < 1e-14);
        assert!((s.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dense_and_krylov_agree() {
        let d = interval(0.0, 1.0, 300, &Grading::uniform()).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let rho = DensityField::from_fn(&d, |p| 1.0 + 5.0 * p[0] * p[0]).unwrap();
        let f = assemble(&d, &rho, &one, &BoundaryCondition::Neumann).unwrap();
        let a = solve_forms(&f, &SolveOptions::count(4)).unwrap();
        let b = solve_forms(
            &f,
            &SolveOptions {
                count: 4,
                dense_threshold: 0,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values).skip(1) {
            assert!((x - y).abs() < 1e-9 * y, "{x} vs {y}");
        }
        assert!(b.values[0].abs() < 1e-8 * b.values[4]);
    }

    #[test]
    fn circle_pairs_form_a_cluster() {
        let d = circle(2.0 * std::f64::consts::PI, 256).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let f = assemble(&d, &one, &one, &BoundaryCondition::Neumann).unwrap();
        let s = solve_lowest(&f, 2, 1e-8).unwrap();
        assert!((s.values[1] - 1.0).abs() < 1e-3);
        assert_eq!(s.cluster_of(1), &[1, 2]);
    }

    #[test]
    fn degenerate_trial_is_rejected() {
        let d = interval(0.0, 1.0, 8, &Grading::uniform()).unwrap();
        let one = DensityField::constant(&d, 1.0).unwrap();
        let f = assemble(&d, &one, &one, &BoundaryCondition::Neumann).unwrap();
        assert_eq!(rayleigh_quotient(&f, &[0.0; 9]), Err(Error::DegenerateTrial));
        assert!(rayleigh_quotient(&f, &[1.0; 9]).unwrap().abs() < 1e-15);
    }
}
