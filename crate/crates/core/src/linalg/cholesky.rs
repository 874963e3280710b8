use super::CsrMatrix;
use std::collections::VecDeque;

/// Reverse Cuthill–McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // Start each component from a pseudo-peripheral node: the
        // unvisited node of minimum degree, refined by one BFS sweep.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = farthest_node(adj, start, &visited);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn farthest_node(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> usize {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if !blocked[w] && dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    // Among the farthest level prefer the lowest degree for a tight envelope.
    let far = dist[last];
    (0..adj.len())
        .filter(|&i| dist[i] == far)
        .min_by_key(|&i| (adj[i].len(), i))
        .unwrap_or(last)
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ` of a sparse SPD matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    /// `first[i]`: first stored column of row `i` (permuted indices).
    first: Vec<usize>,
    /// Offsets into `data` for each row; row `i` stores columns first[i]..=i.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a`. Returns `None` when a pivot is not positive.
    pub fn factor(a: &CsrMatrix) -> Option<Self> {
        let n = a.n();
        let perm = rcm_ordering(&a.adjacency());
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    data[offset[i] + (j - first[i])] += v;
                }
            }
        }
        // Row-oriented factorization: L[i][j] for j in first[i]..=i.
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[offset[i] + (j - fi)];
                if k0 < j {
                    let ri = &data[offset[i] + (k0 - fi)..offset[i] + (j - fi)];
                    let rj = &data[offset[j] + (k0 - fj)..offset[j] + (j - fj)];
                    s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    data[offset[i] + (i - fi)] = s.sqrt();
                } else {
                    data[offset[i] + (j - fi)] = s / data[offset[j] + (j - fj)];
                }
            }
        }
        Some(EnvelopeCholesky {
            n,
            perm,
            first,
            offset,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // Forward: L y = b.
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        // Backward: Lᵀ x = y (column sweep over rows of L).
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap2d(nx: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i + nx * j;
        let mut t = Vec::new();
        for j in 0..nx {
            for i in 0..nx {
                t.push((idx(i, j), idx(i, j), 4.1));
                if i + 1 < nx {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < nx {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(nx * nx, t)
    }

    #[test]
    fn solves_grid_laplacian() {
        let a = lap2d(9);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..81).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let b = a.mul_vec(&x_true);
        let x = f.solve(&b);
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn rejects_indefinite() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(EnvelopeCholesky::factor(&a).is_none());
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = lap2d(5);
        let mut p = rcm_ordering(&a.adjacency());
        p.sort();
        assert_eq!(p, (0..25).collect::<Vec<_>>());
    }
}
