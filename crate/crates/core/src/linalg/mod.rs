//! Sparse storage, an RCM-ordered envelope Cholesky, and the difference-form
//! stiffness representation used for accurate energies.

mod cholesky;
mod csr;

pub use cholesky::{rcm_ordering, EnvelopeCholesky};
pub use csr::CsrMatrix;

/// A symmetric positive semidefinite form stored as
/// `uᵀAu = Σ_edges w_ij (u_i − u_j)² + Σ_i d_i u_i² + uᵀPu`.
///
/// Storing the gradient part by edge weights keeps `A·1 = 0` exact and
/// avoids cancellation when evaluating tiny energies of nearly constant
/// vectors, which is what the extreme density families produce.
#[derive(Debug, Clone)]
pub struct LaplacianForm {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    diag: Vec<f64>,
    potential: Option<CsrMatrix>,
}

impl LaplacianForm {
    /// `edges` holds (i, j, w) with i ≠ j; duplicates are merged.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        diag: Vec<f64>,
        potential: Option<CsrMatrix>,
    ) -> Self {
        assert_eq!(diag.len(), n);
        let mut e: Vec<(usize, usize, f64)> = edges
            .into_iter()
            .filter(|&(i, j, _)| i != j)
            .map(|(i, j, w)| if i < j { (i, j, w) } else { (j, i, w) })
            .collect();
        e.sort_unstable_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (i, j, w) in e {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => merged.push((i, j, w)),
            }
        }
        if let Some(p) = &potential {
            assert_eq!(p.n(), n);
        }
        LaplacianForm {
            n,
            edges: merged,
            diag,
            potential,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn potential(&self) -> Option<&CsrMatrix> {
        self.potential.as_ref()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diag.iter().zip(u).map(|(d, x)| d * x).collect();
        for &(i, j, w) in &self.edges {
            let f = w * (u[i] - u[j]);
            y[i] += f;
            y[j] -= f;
        }
        if let Some(p) = &self.potential {
            for (yi, pi) in y.iter_mut().zip(p.mul_vec(u)) {
                *yi += pi;
            }
        }
        y
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut e: f64 = self.edges.iter().map(|&(i, j, w)| w * (u[i] - u[j]).powi(2)).sum();
        e += self.diag.iter().zip(u).map(|(d, x)| d * x * x).sum::<f64>();
        if let Some(p) = &self.potential {
            e += p.quad_form(u);
        }
        e
    }

    /// Bilinear form `uᵀAv`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut e: f64 = self
            .edges
            .iter()
            .map(|&(i, j, w)| w * (u[i] - u[j]) * (v[i] - v[j]))
            .sum();
        e += self.diag.iter().enumerate().map(|(i, d)| d * u[i] * v[i]).sum::<f64>();
        if let Some(p) = &self.potential {
            e += dot(u, &p.mul_vec(v));
        }
        e
    }

    pub fn scaled(&self, c: f64) -> Self {
        LaplacianForm {
            n: self.n,
            edges: self.edges.iter().map(|&(i, j, w)| (i, j, c * w)).collect(),
            diag: self.diag.iter().map(|d| c * d).collect(),
            potential: self.potential.as_ref().map(|p| p.scaled(c)),
        }
    }

    /// Restriction to the index set `keep`: edges to dropped nodes become
    /// diagonal leaks (the dropped values are pinned at zero).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut diag: Vec<f64> = keep.iter().map(|&i| self.diag[i]).collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(i, j, w) in &self.edges {
            match (map[i], map[j]) {
                (usize::MAX, usize::MAX) => {}
                (a, usize::MAX) => diag[a] += w,
                (usize::MAX, b) => diag[b] += w,
                (a, b) => edges.push((a, b, w)),
            }
        }
        let potential = self.potential.as_ref().map(|p| p.submatrix(keep));
        LaplacianForm::new(keep.len(), edges, diag, potential)
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(4 * self.edges.len() + self.n);
        for (i, &d) in self.diag.iter().enumerate() {
            t.push((i, i, d));
        }
        for &(i, j, w) in &self.edges {
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        }
        if let Some(p) = &self.potential {
            t.extend(p.triplets());
        }
        CsrMatrix::from_triplets(self.n, t)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + c·x`.
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_form() -> LaplacianForm {
        LaplacianForm::new(3, vec![(0, 1, 2.0), (2, 1, 1.0)], vec![0.0, 0.0, 0.5], None)
    }

    #[test]
    fn apply_matches_csr() {
        let f = path_form();
        let k = f.to_csr();
        let u = [0.3, -1.2, 2.0];
        let a = f.apply(&u);
        let b = k.mul_vec(&u);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((f.energy(&u) - k.quad_form(&u)).abs() < 1e-13);
        assert!((f.bilinear(&u, &u) - f.energy(&u)).abs() < 1e-13);
    }

    #[test]
    fn restriction_leaks_to_diagonal() {
        let f = path_form().restrict(&[0, 2]);
        assert_eq!(f.n(), 2);
        assert!(f.edges().is_empty());
        assert_eq!(f.diag(), &[2.0, 1.5]);
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let f = LaplacianForm::new(3, vec![(0, 1, 1e8), (1, 2, 1e-8)], vec![0.0; 3], None);
        assert_eq!(f.apply(&[7.0, 7.0, 7.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(f.energy(&[7.0, 7.0, 7.0]), 0.0);
    }
}
