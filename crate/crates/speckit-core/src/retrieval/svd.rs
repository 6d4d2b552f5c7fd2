//! Deterministic truncated SVD for sparse TF-IDF matrices.
//!
//! The top-`dim` right singular directions of a sparse matrix `A` are the
//! dominant eigenvectors of `AᵀA`. They are computed by orthogonal (block
//! power) iteration from a deterministically seeded start basis, followed by
//! a Rayleigh-Ritz step whose small symmetric eigenproblem is solved with
//! cyclic Jacobi rotations. Every step is plain `f64` arithmetic in a fixed
//! order, so identical input produces bit-identical output.

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, cols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(col, value) in row {
                debug_assert!(col < cols);
                col_idx.push(col);
                values.push(value);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `out[rows x k] = A * q` where `q` is `cols x k`, both row-major.
    pub fn mul_dense(&self, q: &[f64], k: usize, out: &mut [f64]) {
        out.fill(0.0);
        for row in 0..self.rows {
            let acc = &mut out[row * k..(row + 1) * k];
            for nz in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[nz];
                let value = self.values[nz];
                let qrow = &q[col * k..(col + 1) * k];
                for (a, b) in acc.iter_mut().zip(qrow) {
                    *a += value * b;
                }
            }
        }
    }

    /// `out[cols x k] = Aᵀ * p` where `p` is `rows x k`, both row-major.
    pub fn tmul_dense(&self, p: &[f64], k: usize, out: &mut [f64]) {
        out.fill(0.0);
        for row in 0..self.rows {
            let prow = &p[row * k..(row + 1) * k];
            for nz in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[nz];
                let value = self.values[nz];
                let acc = &mut out[col * k..(col + 1) * k];
                for (a, b) in acc.iter_mut().zip(prow) {
                    *a += value * b;
                }
            }
        }
    }

    /// `out[rows] = A * v` for a single `cols`-vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|row| {
                (self.row_ptr[row]..self.row_ptr[row + 1])
                    .map(|nz| self.values[nz] * v[self.col_idx[nz]])
                    .sum()
            })
            .collect()
    }
}

/// Result of the truncated factorization `A ≈ U Σ Vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `cols x dim` row-major right singular vectors (the projection basis).
    pub basis: Vec<f64>,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    pub dim: usize,
}

const MAX_POWER_ITERATIONS: usize = 300;
const CONVERGENCE_TOL: f64 = 1e-13;

/// Compute the top-`dim` right singular directions of `a`.
///
/// `dim` must not exceed `min(a.rows, a.cols)`; rank-deficient inputs are
/// fine (trailing singular values come out as 0 with zeroed basis columns).
pub fn truncated_svd(a: &SparseMatrix, dim: usize) -> TruncatedSvd {
    assert!(dim >= 1 && dim <= a.rows.min(a.cols), "dim out of range");
    let cols = a.cols;

    let mut q = seeded_matrix(cols, dim);
    orthonormalize_columns(&mut q, cols, dim);

    let mut product = vec![0.0; a.rows * dim];
    let mut z = vec![0.0; cols * dim];
    let mut previous = vec![0.0; dim];

    for iteration in 0..MAX_POWER_ITERATIONS {
        a.mul_dense(&q, dim, &mut product);
        a.tmul_dense(&product, dim, &mut z);

        // Eigenvalue estimates for AᵀA along the current basis.
        let mut estimates = vec![0.0; dim];
        for (j, estimate) in estimates.iter_mut().enumerate() {
            let mut sum = 0.0;
            for row in 0..cols {
                sum += q[row * dim + j] * z[row * dim + j];
            }
            *estimate = sum;
        }

        q.copy_from_slice(&z);
        orthonormalize_columns(&mut q, cols, dim);

        let converged = estimates
            .iter()
            .zip(&previous)
            .all(|(now, before)| (now - before).abs() <= CONVERGENCE_TOL * now.abs().max(1.0));
        previous = estimates;
        if converged && iteration >= 2 {
            break;
        }
    }

    // Rayleigh-Ritz: diagonalize (AQ)ᵀ(AQ) to rotate Q into singular
    // directions and read off the squared singular values.
    a.mul_dense(&q, dim, &mut product);
    let mut small = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let mut sum = 0.0;
            for row in 0..a.rows {
                sum += product[row * dim + i] * product[row * dim + j];
            }
            small[i * dim + j] = sum;
            small[j * dim + i] = sum;
        }
    }
    let (eigenvalues, rotation) = jacobi_eigen(&small, dim);

    let mut basis = vec![0.0; cols * dim];
    for row in 0..cols {
        for j in 0..dim {
            let mut sum = 0.0;
            for l in 0..dim {
                sum += q[row * dim + l] * rotation[l * dim + j];
            }
            basis[row * dim + j] = sum;
        }
    }
    let singular_values: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();

    TruncatedSvd {
        basis,
        singular_values,
        dim,
    }
}

/// Modified Gram-Schmidt over the columns of an `n x k` row-major matrix,
/// with one re-orthogonalization pass. A column that collapses to zero
/// (rank deficiency) is replaced by a fresh deterministic direction; if
/// that also collapses it is zeroed.
fn orthonormalize_columns(m: &mut [f64], n: usize, k: usize) {
    for j in 0..k {
        for _pass in 0..2 {
            for prev in 0..j {
                let mut dot = 0.0;
                for row in 0..n {
                    dot += m[row * k + j] * m[row * k + prev];
                }
                for row in 0..n {
                    m[row * k + j] -= dot * m[row * k + prev];
                }
            }
        }
        let mut norm = 0.0;
        for row in 0..n {
            norm += m[row * k + j] * m[row * k + j];
        }
        norm = norm.sqrt();
        if norm > 1e-12 {
            for row in 0..n {
                m[row * k + j] /= norm;
            }
            continue;
        }

        // Deterministic replacement direction, orthogonalized once.
        let mut state = 0x5ee1_d00d_u64.wrapping_add(j as u64);
        for row in 0..n {
            m[row * k + j] = splitmix64(&mut state) - 0.5;
        }
        for prev in 0..j {
            let mut dot = 0.0;
            for row in 0..n {
                dot += m[row * k + j] * m[row * k + prev];
            }
            for row in 0..n {
                m[row * k + j] -= dot * m[row * k + prev];
            }
        }
        let mut norm2 = 0.0;
        for row in 0..n {
            norm2 += m[row * k + j] * m[row * k + j];
        }
        norm2 = norm2.sqrt();
        for row in 0..n {
            m[row * k + j] = if norm2 > 1e-12 {
                m[row * k + j] / norm2
            } else {
                0.0
            };
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n x n` matrix.
/// Returns eigenvalues (descending) and the matching eigenvector matrix
/// (columns are eigenvectors).
pub fn jacobi_eigen(symmetric: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = symmetric.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    order.sort_by(|&x, &y| eigenvalues[y].total_cmp(&eigenvalues[x]));

    let sorted_values: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut sorted_vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            sorted_vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (sorted_values, sorted_vectors)
}

fn splitmix64(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn seeded_matrix(n: usize, k: usize) -> Vec<f64> {
    let mut state = 0x0123_4567_89ab_cdef_u64;
    (0..n * k).map(|_| splitmix64(&mut state) - 0.5).collect()
}
