//! Dense latent-semantic scoring: log-scaled TF-IDF vectors folded into the
//! truncated-SVD basis, compared by cosine.

/// Smoothed inverse document frequency: `ln((1 + n)/(1 + df)) + 1`, always
/// finite and >= 1.
pub fn tfidf_idf(n: usize, df: usize) -> f64 {
    (((1 + n) as f64) / ((1 + df) as f64)).ln() + 1.0
}

/// Log-scaled term weight: `(1 + ln(tf)) * idf` for `tf > 0`.
pub fn tfidf_weight(tf: u32, idf: f64) -> f64 {
    if tf == 0 {
        0.0
    } else {
        (1.0 + (tf as f64).ln()) * idf
    }
}

/// Fold a sparse TF-IDF vector into the `vocab x dim` basis.
pub fn project(sparse: &[(usize, f64)], basis: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for &(term, weight) in sparse {
        let row = &basis[term * dim..(term + 1) * dim];
        for (acc, b) in out.iter_mut().zip(row) {
            *acc += weight * b;
        }
    }
    out
}

/// Cosine similarity; 0 when either vector is (numerically) zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a <= 1e-24 || norm_b <= 1e-24 {
        return 0.0;
    }
    dot / (norm_a.sqrt() * norm_b.sqrt())
}
