//! Minimal sparse toolkit: COO→CSR assembly, reverse Cuthill–McKee
//! ordering, and a banded Cholesky factorization for the SPD systems
//! produced by the time stepper.
//!
//! Determinism matters throughout: CSR construction folds duplicate
//! entries in insertion order, so transposed entry pairs assembled in the
//! same element loop stay bitwise symmetric.

use crate::error::{Error, Result};

/// Coordinate-format accumulator used during assembly.
#[derive(Debug, Clone)]
pub struct CooMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(n: usize) -> Self {
        CooMatrix {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Sorts entries by (row, col) with a stable sort and folds duplicates
    /// in their original insertion order.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&k| (self.entries[k].0, self.entries[k].1));

        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = self.entries[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
    }

    pub fn mul_vec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// xᵀ A y with Neumaier-compensated accumulation; used by diagnostics
    /// and tests where tight absolute tolerances apply.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let term = x[i] * v * y[*c];
                let t = sum + term;
                comp += if sum.abs() >= term.abs() {
                    (sum - t) + term
                } else {
                    (term - t) + sum
                };
                sum = t;
            }
        }
        sum + comp
    }

    /// Largest |a_ij − a_ji|; zero means bitwise symmetry.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(*c, i)).abs());
            }
        }
        worst
    }

    /// Linear combination Σ coefᵢ·Aᵢ over matrices of equal size; patterns
    /// are merged.
    pub fn scaled_sum(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        assert!(!terms.is_empty());
        let n = terms[0].1.n;
        let mut coo = CooMatrix::new(n);
        for &(coef, m) in terms {
            assert_eq!(m.n, n);
            for i in 0..n {
                let (cols, vals) = m.row(i);
                for (c, v) in cols.iter().zip(vals) {
                    coo.push(i, *c, coef * v);
                }
            }
        }
        coo.to_csr()
    }
}

/// Reverse Cuthill–McKee ordering of the (assumed structurally symmetric)
/// pattern. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = visited.to_vec();
        let mut levels = vec![vec![start]];
        seen[start] = true;
        loop {
            let mut next = Vec::new();
            for &u in levels.last().unwrap() {
                for &v in a.row(u).0 {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    };

    while order.len() < n {
        // deterministic seed: unvisited node of minimum (degree, index)
        let mut start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        // pseudo-peripheral refinement
        let mut ecc = 0;
        loop {
            let levels = bfs_levels(start, &visited);
            if levels.len() <= ecc + 1 {
                break;
            }
            ecc = levels.len() - 1;
            start = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&i| (degree[i], i))
                .unwrap();
        }

        let component_base = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = component_base;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = a
                .row(u)
                .0
                .iter()
                .copied()
                .filter(|&v| !visited[v])
                .collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    order.push(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Banded Cholesky factorization `P A Pᵀ = L Lᵀ` with an RCM permutation.
///
/// Fails with a solver error if the matrix is not positive definite.
#[derive(Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>, // band[i*(bw+1) + k] = L[i, i-k], k = 0..=bw
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        let mut bw = 0usize;
        for i in 0..n {
            for &j in a.row(i).0 {
                let (pi, pj) = (inv_perm[i], inv_perm[j]);
                bw = bw.max(pi.abs_diff(pj));
            }
        }

        let stride = bw + 1;
        let mut band = vec![0.0f64; n * stride];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv_perm[i], inv_perm[*c]);
                if pj <= pi {
                    band[pi * stride + (pi - pj)] = *v;
                }
            }
        }

        // in-place row-oriented Cholesky on the band
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = band[i * stride + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= band[i * stride + (i - k)] * band[j * stride + (j - k)];
                }
                if j < i {
                    band[i * stride + (i - j)] = sum / band[j * stride];
                } else {
                    if !(sum > 0.0) {
                        return Err(Error::Solver {
                            step: i,
                            message: format!("matrix not positive definite (pivot {sum})"),
                        });
                    }
                    band[i * stride] = sum.sqrt();
                }
            }
        }

        Ok(BandCholesky {
            n,
            bw,
            band,
            perm,
            inv_perm,
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let stride = self.bw + 1;
        let mut y: Vec<f64> = (0..self.n).map(|new| b[self.perm[new]]).collect();
        // forward: L y = P b
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut sum = y[i];
            for j in lo..i {
                sum -= self.band[i * stride + (i - j)] * y[j];
            }
            y[i] = sum / self.band[i * stride];
        }
        // backward: Lᵀ z = y
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut sum = y[i];
            for j in i + 1..=hi {
                sum -= self.band[j * stride + (j - i)] * y[j];
            }
            y[i] = sum / self.band[i * stride];
        }
        (0..self.n).map(|old| y[self.inv_perm[old]]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Dense Gaussian elimination with partial pivoting; test oracle.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, piv);
            x.swap(k, piv);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= m[i][j] * x[j];
            }
            x[i] = s / m[i][i];
        }
        x
    }

    fn random_spd(n: usize, seed: u64) -> (Vec<Vec<f64>>, CsrMatrix) {
        let mut state = seed;
        let mut g = vec![vec![0.0; n]; n];
        for r in g.iter_mut() {
            for v in r.iter_mut() {
                *v = splitmix(&mut state) - 0.5;
            }
        }
        // A = GᵀG + I, sparsified pattern kept dense here (small n)
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[k][i] * g[k][j];
                }
                a[i][j] = s + if i == j { 1.0 } else { 0.0 };
            }
        }
        let mut coo = CooMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                coo.push(i, j, a[i][j]);
            }
        }
        (a, coo.to_csr())
    }

    #[test]
    fn coo_folds_duplicates_in_order() {
        let mut coo = CooMatrix::new(2);
        coo.push(0, 0, 1.0);
        coo.push(0, 1, 2.0);
        coo.push(0, 0, 3.0);
        let csr = coo.to_csr();
        assert_eq!(csr.get(0, 0), 4.0);
        assert_eq!(csr.get(0, 1), 2.0);
        assert_eq!(csr.get(1, 1), 0.0);
        assert_eq!(csr.nnz(), 2);
    }

    #[test]
    fn band_cholesky_matches_dense_oracle() {
        for seed in 0..5u64 {
            let n = 24;
            let (a_dense, a) = random_spd(n, 1000 + seed);
            let chol = BandCholesky::factor(&a).unwrap();
            let mut state = seed;
            let b: Vec<f64> = (0..n).map(|_| splitmix(&mut state) - 0.5).collect();
            let x = chol.solve(&b);
            let x_ref = dense_solve(&a_dense, &b);
            for i in 0..n {
                assert!(
                    (x[i] - x_ref[i]).abs() < 1e-9,
                    "component {i}: {} vs {}",
                    x[i],
                    x_ref[i]
                );
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut coo = CooMatrix::new(2);
        coo.push(0, 0, 1.0);
        coo.push(1, 1, -1.0);
        let err = BandCholesky::factor(&coo.to_csr()).unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_path() {
        // path graph 0-1-2-...-n with indices scrambled by a fixed pattern
        let n = 40;
        let scramble = |i: usize| (i * 17) % n;
        let mut coo = CooMatrix::new(n);
        for i in 0..n {
            coo.push(scramble(i), scramble(i), 2.0);
        }
        for i in 0..n - 1 {
            coo.push(scramble(i), scramble(i + 1), -1.0);
            coo.push(scramble(i + 1), scramble(i), -1.0);
        }
        let a = coo.to_csr();
        let chol = BandCholesky::factor(&a).unwrap();
        assert!(chol.bandwidth() <= 2, "bandwidth {}", chol.bandwidth());
    }

    #[test]
    fn quadratic_form_matches_mul() {
        let (_, a) = random_spd(12, 7);
        let mut state = 3u64;
        let x: Vec<f64> = (0..12).map(|_| splitmix(&mut state)).collect();
        let y: Vec<f64> = (0..12).map(|_| splitmix(&mut state)).collect();
        let ay = a.mul_vec_alloc(&y);
        let direct: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
        assert!((a.quadratic_form(&x, &y) - direct).abs() < 1e-12);
    }
}
