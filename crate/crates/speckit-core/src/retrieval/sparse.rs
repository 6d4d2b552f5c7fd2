//! BM25 term scoring.
//!
//! The idf uses the non-negative variant `ln(1 + (N - df + 0.5)/(df + 0.5))`
//! so index weights are always finite and >= 0.

/// BM25 inverse document frequency for a term with document frequency `df`
/// in a corpus of `n` chunks.
pub fn bm25_idf(n: usize, df: usize) -> f64 {
    let n = n as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Contribution of one term occurring `tf` times in a chunk of `chunk_len`
/// tokens.
pub fn bm25_term_score(tf: u32, chunk_len: u32, avg_len: f64, k1: f64, b: f64, idf: f64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = tf as f64;
    let length_norm = 1.0 - b + b * (chunk_len as f64 / avg_len);
    idf * tf * (k1 + 1.0) / (tf + k1 * length_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_is_finite_and_non_negative() {
        for n in 1..20 {
            for df in 1..=n {
                let idf = bm25_idf(n, df);
                assert!(idf.is_finite() && idf >= 0.0, "idf({n},{df}) = {idf}");
            }
        }
    }

    #[test]
    fn absent_term_scores_zero() {
        assert_eq!(bm25_term_score(0, 10, 10.0, 1.2, 0.75, 1.0), 0.0);
    }

    #[test]
    fn average_length_chunk_reduces_to_plain_saturation() {
        // len == avg makes the length normalizer 1, so tf=1 gives
        // idf * (k1+1) / (1 + k1).
        let score = bm25_term_score(1, 4, 4.0, 1.2, 0.75, 1.0);
        assert!((score - 1.0).abs() < 1e-12);
    }
}
