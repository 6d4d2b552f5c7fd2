//! The hybrid index: inverted postings for BM25 plus a truncated-SVD
//! latent model over TF-IDF vectors, behind one retrieval surface.
//!
//! After `build_index` the structure is immutable and safe to query from
//! multiple threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::{ComponentSpace, SpecComponent};

use super::citation::render_citation;
use super::dense::{cosine, project, tfidf_idf, tfidf_weight};
use super::sparse::{bm25_idf, bm25_term_score};
use super::svd::{truncated_svd, SparseMatrix};
use super::tokenize::tokenize;
use super::{
    hybrid_score, min_max_normalize, EvidenceItem, EvidenceSet, RetrievalConfig, RetrievalError,
    ScoreBreakdown,
};

pub struct HybridIndex {
    config: RetrievalConfig,
    chunks: Vec<SpecComponent>,
    vocab: Vec<String>,
    term_ids: HashMap<String, usize>,
    postings: Vec<Vec<(u32, u32)>>,
    chunk_lens: Vec<u32>,
    avg_len: f64,
    dense_idf: Vec<f64>,
    basis: Vec<f64>,
    singular_values: Vec<f64>,
    dim: usize,
    projected: Vec<f64>,
    id_to_idx: HashMap<String, usize>,
    query_counter: AtomicU64,
}

/// Build the hybrid index over the components of `space` that pass the
/// config's kind filter.
pub fn build_index(
    space: &ComponentSpace,
    config: &RetrievalConfig,
) -> Result<HybridIndex, RetrievalError> {
    config.validate()?;
    let chunks: Vec<SpecComponent> = space
        .components
        .iter()
        .filter(|c| config.kinds.contains(&c.kind))
        .cloned()
        .collect();
    if chunks.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }

    let tokenized: Vec<Vec<String>> = chunks.iter().map(|c| tokenize(&c.content)).collect();
    let vocab: Vec<String> = tokenized
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    if vocab.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let term_ids: HashMap<String, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();

    let mut postings: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vocab.len()];
    let mut chunk_lens: Vec<u32> = Vec::with_capacity(chunks.len());
    let mut tfidf_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(chunks.len());
    let mut counts_per_chunk: Vec<BTreeMap<usize, u32>> = Vec::with_capacity(chunks.len());

    for tokens in &tokenized {
        chunk_lens.push(tokens.len() as u32);
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for token in tokens {
            *counts.entry(term_ids[token]).or_insert(0) += 1;
        }
        counts_per_chunk.push(counts);
    }
    for (chunk_idx, counts) in counts_per_chunk.iter().enumerate() {
        for (&term, &tf) in counts {
            postings[term].push((chunk_idx as u32, tf));
        }
    }
    let avg_len = chunk_lens.iter().map(|&l| l as f64).sum::<f64>() / chunk_lens.len() as f64;

    let dense_idf: Vec<f64> = postings
        .iter()
        .map(|p| tfidf_idf(chunks.len(), p.len()))
        .collect();
    debug_assert!(dense_idf.iter().all(|idf| idf.is_finite() && *idf >= 0.0));

    for counts in &counts_per_chunk {
        let mut row: Vec<(usize, f64)> = counts
            .iter()
            .map(|(&term, &tf)| (term, tfidf_weight(tf, dense_idf[term])))
            .collect();
        let norm: f64 = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in row.iter_mut() {
                *w /= norm;
            }
        }
        tfidf_rows.push(row);
    }

    let dim = config.svd_dim.resolve(chunks.len().min(vocab.len()))?;
    let matrix = SparseMatrix::from_rows(tfidf_rows.clone(), vocab.len());
    let svd = truncated_svd(&matrix, dim);

    let mut projected = Vec::with_capacity(chunks.len() * dim);
    for row in &tfidf_rows {
        projected.extend(project(row, &svd.basis, dim));
    }

    let mut id_to_idx = HashMap::with_capacity(chunks.len());
    for (idx, chunk) in chunks.iter().enumerate() {
        if id_to_idx.insert(chunk.component_id.clone(), idx).is_some() {
            return Err(RetrievalError::InvalidConfig(format!(
                "duplicate component id {:?}",
                chunk.component_id
            )));
        }
    }

    Ok(HybridIndex {
        config: config.clone(),
        chunks,
        vocab,
        term_ids,
        postings,
        chunk_lens,
        avg_len,
        dense_idf,
        basis: svd.basis,
        singular_values: svd.singular_values,
        dim,
        projected,
        id_to_idx,
        query_counter: AtomicU64::new(0),
    })
}

impl HybridIndex {
    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn chunks(&self) -> &[SpecComponent] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn dense_idf(&self) -> &[f64] {
        &self.dense_idf
    }

    /// Row-major `vocab x dim` projection basis.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn svd_dim(&self) -> usize {
        self.dim
    }

    pub fn projected_vector(&self, chunk_idx: usize) -> &[f64] {
        &self.projected[chunk_idx * self.dim..(chunk_idx + 1) * self.dim]
    }

    pub fn chunk_len(&self, chunk_idx: usize) -> u32 {
        self.chunk_lens[chunk_idx]
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.term_ids
            .get(term)
            .map(|&t| self.postings[t].len())
            .unwrap_or(0)
    }

    /// Number of retrieve() calls served by this index.
    pub fn query_count(&self) -> u64 {
        self.query_counter.load(Ordering::Relaxed)
    }

    fn chunk_index(&self, component_id: &str) -> Result<usize, RetrievalError> {
        self.id_to_idx
            .get(component_id)
            .copied()
            .ok_or_else(|| RetrievalError::UnknownChunk(component_id.to_string()))
    }

    /// BM25 score of a chunk against pre-tokenized query tokens. Duplicate
    /// query tokens count once (set semantics).
    pub fn sparse_score(
        &self,
        query_tokens: &[String],
        component_id: &str,
    ) -> Result<f64, RetrievalError> {
        let chunk = self.chunk_index(component_id)?;
        let unique: BTreeSet<&String> = query_tokens.iter().collect();
        let mut score = 0.0;
        for token in unique {
            let Some(&term) = self.term_ids.get(token.as_str()) else {
                continue;
            };
            let postings = &self.postings[term];
            let Ok(at) = postings.binary_search_by_key(&(chunk as u32), |&(c, _)| c) else {
                continue;
            };
            let idf = bm25_idf(self.chunks.len(), postings.len());
            score += bm25_term_score(
                postings[at].1,
                self.chunk_lens[chunk],
                self.avg_len,
                self.config.bm25_k1,
                self.config.bm25_b,
                idf,
            );
        }
        Ok(score)
    }

    /// Cosine similarity of the projected query and chunk vectors; 0 when
    /// either projection is the zero vector.
    pub fn dense_score(&self, query: &str, component_id: &str) -> Result<f64, RetrievalError> {
        let chunk = self.chunk_index(component_id)?;
        let q = self.project_query(query);
        Ok(cosine(&q, self.projected_vector(chunk)))
    }

    /// Project query text into the latent space (the same fold-in as chunks).
    pub fn project_query(&self, query: &str) -> Vec<f64> {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for token in tokenize(query) {
            if let Some(&term) = self.term_ids.get(&token) {
                *counts.entry(term).or_insert(0) += 1;
            }
        }
        let sparse: Vec<(usize, f64)> = counts
            .iter()
            .map(|(&term, &tf)| (term, tfidf_weight(tf, self.dense_idf[term])))
            .collect();
        project(&sparse, &self.basis, self.dim)
    }

    /// Top-k retrieval under the index's configured `k` and `alpha`.
    pub fn retrieve(&self, query: &str) -> Result<EvidenceSet, RetrievalError> {
        self.retrieve_with(query, self.config.k, self.config.alpha)
    }

    /// Top-k retrieval with query-time `k` and `alpha` overrides.
    ///
    /// Scores every chunk, min-max normalizes the sparse and dense score
    /// vectors per query, fuses them, and returns the stable top-k (ties
    /// broken by component id ascending).
    pub fn retrieve_with(
        &self,
        query: &str,
        k: usize,
        alpha: f64,
    ) -> Result<EvidenceSet, RetrievalError> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(RetrievalError::OutOfRangeInput {
                name: "alpha",
                value: alpha,
            });
        }
        if k == 0 {
            return Err(RetrievalError::InvalidConfig("k must be >= 1".to_string()));
        }
        let query_tokens = tokenize(query);
        if query_tokens.is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        self.query_counter.fetch_add(1, Ordering::Relaxed);

        let n = self.chunks.len();
        let mut sparse_raw = vec![0.0; n];
        let unique: BTreeSet<&String> = query_tokens.iter().collect();
        for token in unique {
            let Some(&term) = self.term_ids.get(token.as_str()) else {
                continue;
            };
            let postings = &self.postings[term];
            let idf = bm25_idf(n, postings.len());
            for &(chunk, tf) in postings {
                sparse_raw[chunk as usize] += bm25_term_score(
                    tf,
                    self.chunk_lens[chunk as usize],
                    self.avg_len,
                    self.config.bm25_k1,
                    self.config.bm25_b,
                    idf,
                );
            }
        }

        let q_proj = self.project_query(query);
        let dense_raw: Vec<f64> = (0..n)
            .map(|chunk| cosine(&q_proj, self.projected_vector(chunk)))
            .collect();

        let sparse_norm = min_max_normalize(&sparse_raw);
        let dense_norm = min_max_normalize(&dense_raw);

        let mut order: Vec<usize> = (0..n).collect();
        let fused: Vec<f64> = (0..n)
            .map(|i| {
                hybrid_score(sparse_norm[i], dense_norm[i], alpha)
                    .expect("normalized scores lie in [0, 1]")
            })
            .collect();
        order.sort_by(|&a, &b| {
            fused[b].total_cmp(&fused[a]).then_with(|| {
                self.chunks[a]
                    .component_id
                    .cmp(&self.chunks[b].component_id)
            })
        });
        order.truncate(k);

        let items: Vec<EvidenceItem> = order
            .into_iter()
            .map(|i| EvidenceItem {
                component_id: self.chunks[i].component_id.clone(),
                label: render_citation(&self.chunks[i]),
                content: self.chunks[i].content.clone(),
                score: ScoreBreakdown {
                    sparse_raw: sparse_raw[i],
                    dense_raw: dense_raw[i],
                    sparse_norm: sparse_norm[i],
                    dense_norm: dense_norm[i],
                    fused: fused[i],
                },
            })
            .collect();
        let m = items.len();
        Ok(EvidenceSet {
            query: query.to_string(),
            items,
            m,
        })
    }

    /// Persist as `chunks.jsonl`, `sparse.bin`, `dense.bin`, `config.json`.
    /// The build is deterministic, so identical inputs produce
    /// byte-identical directories.
    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source: std::io::Error| RetrievalError::Io {
                path: path.clone(),
                source,
            }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let chunks_path = dir.join("chunks.jsonl");
        let mut chunk_lines = String::new();
        for chunk in &self.chunks {
            chunk_lines.push_str(&serde_json::to_string(chunk).expect("component serializes"));
            chunk_lines.push('\n');
        }
        fs::write(&chunks_path, chunk_lines).map_err(io_err(&chunks_path))?;

        let config_path = dir.join("config.json");
        let config_body = serde_json::to_string_pretty(&self.config).expect("config serializes");
        fs::write(&config_path, config_body).map_err(io_err(&config_path))?;

        // sparse.bin, little-endian:
        //   magic "SKSP", version u32, n_chunks u64, n_terms u64, avg_len f64,
        //   chunk_lens: n_chunks x u32,
        //   per term: term_len u32, utf-8 bytes, postings_len u64,
        //             postings: (chunk u32, tf u32) x postings_len
        let mut sparse = Vec::new();
        sparse.extend_from_slice(b"SKSP");
        push_u32(&mut sparse, 1);
        push_u64(&mut sparse, self.chunks.len() as u64);
        push_u64(&mut sparse, self.vocab.len() as u64);
        push_f64(&mut sparse, self.avg_len);
        for &len in &self.chunk_lens {
            push_u32(&mut sparse, len);
        }
        for (term, postings) in self.vocab.iter().zip(&self.postings) {
            push_u32(&mut sparse, term.len() as u32);
            sparse.extend_from_slice(term.as_bytes());
            push_u64(&mut sparse, postings.len() as u64);
            for &(chunk, tf) in postings {
                push_u32(&mut sparse, chunk);
                push_u32(&mut sparse, tf);
            }
        }
        let sparse_path = dir.join("sparse.bin");
        fs::write(&sparse_path, sparse).map_err(io_err(&sparse_path))?;

        // dense.bin, little-endian:
        //   magic "SKDN", version u32, n_terms u64, dim u64, n_chunks u64,
        //   idf: n_terms x f64, singular_values: dim x f64,
        //   basis: (n_terms * dim) x f64 row-major,
        //   projected: (n_chunks * dim) x f64 row-major
        let mut dense = Vec::new();
        dense.extend_from_slice(b"SKDN");
        push_u32(&mut dense, 1);
        push_u64(&mut dense, self.vocab.len() as u64);
        push_u64(&mut dense, self.dim as u64);
        push_u64(&mut dense, self.chunks.len() as u64);
        for &idf in &self.dense_idf {
            push_f64(&mut dense, idf);
        }
        for &sv in &self.singular_values {
            push_f64(&mut dense, sv);
        }
        for &b in &self.basis {
            push_f64(&mut dense, b);
        }
        for &p in &self.projected {
            push_f64(&mut dense, p);
        }
        let dense_path = dir.join("dense.bin");
        fs::write(&dense_path, dense).map_err(io_err(&dense_path))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, RetrievalError> {
        let config_path = dir.join("config.json");
        let config_raw = fs::read_to_string(&config_path).map_err(|source| RetrievalError::Io {
            path: config_path.clone(),
            source,
        })?;
        let config: RetrievalConfig =
            serde_json::from_str(&config_raw).map_err(|err| RetrievalError::Malformed {
                path: config_path.clone(),
                detail: err.to_string(),
            })?;

        let chunks_path = dir.join("chunks.jsonl");
        let chunks_raw = fs::read_to_string(&chunks_path).map_err(|source| RetrievalError::Io {
            path: chunks_path.clone(),
            source,
        })?;
        let mut chunks = Vec::new();
        for (line_no, line) in chunks_raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let chunk: SpecComponent =
                serde_json::from_str(line).map_err(|err| RetrievalError::Malformed {
                    path: chunks_path.clone(),
                    detail: format!("line {}: {err}", line_no + 1),
                })?;
            chunks.push(chunk);
        }

        let sparse_path = dir.join("sparse.bin");
        let sparse_raw = fs::read(&sparse_path).map_err(|source| RetrievalError::Io {
            path: sparse_path.clone(),
            source,
        })?;
        let mut r = Reader::new(&sparse_raw, &sparse_path);
        r.expect_magic(b"SKSP")?;
        let _version = r.u32()?;
        let n_chunks = r.u64()? as usize;
        let n_terms = r.u64()? as usize;
        let avg_len = r.f64()?;
        if n_chunks != chunks.len() {
            return Err(RetrievalError::Malformed {
                path: sparse_path.clone(),
                detail: format!(
                    "chunk count {n_chunks} does not match chunks.jsonl ({})",
                    chunks.len()
                ),
            });
        }
        let mut chunk_lens = Vec::with_capacity(n_chunks);
        for _ in 0..n_chunks {
            chunk_lens.push(r.u32()?);
        }
        let mut vocab = Vec::with_capacity(n_terms);
        let mut postings = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let term_len = r.u32()? as usize;
            vocab.push(r.string(term_len)?);
            let postings_len = r.u64()? as usize;
            let mut list = Vec::with_capacity(postings_len);
            for _ in 0..postings_len {
                let chunk = r.u32()?;
                let tf = r.u32()?;
                list.push((chunk, tf));
            }
            postings.push(list);
        }

        let dense_path = dir.join("dense.bin");
        let dense_raw = fs::read(&dense_path).map_err(|source| RetrievalError::Io {
            path: dense_path.clone(),
            source,
        })?;
        let mut r = Reader::new(&dense_raw, &dense_path);
        r.expect_magic(b"SKDN")?;
        let _version = r.u32()?;
        let dense_terms = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let dense_chunks = r.u64()? as usize;
        if dense_terms != n_terms || dense_chunks != n_chunks {
            return Err(RetrievalError::Malformed {
                path: dense_path.clone(),
                detail: "dense.bin shape disagrees with sparse.bin".to_string(),
            });
        }
        let mut dense_idf = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            dense_idf.push(r.f64()?);
        }
        let mut singular_values = Vec::with_capacity(dim);
        for _ in 0..dim {
            singular_values.push(r.f64()?);
        }
        let mut basis = Vec::with_capacity(n_terms * dim);
        for _ in 0..n_terms * dim {
            basis.push(r.f64()?);
        }
        let mut projected = Vec::with_capacity(n_chunks * dim);
        for _ in 0..n_chunks * dim {
            projected.push(r.f64()?);
        }

        let term_ids: HashMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut id_to_idx = HashMap::with_capacity(chunks.len());
        for (idx, chunk) in chunks.iter().enumerate() {
            id_to_idx.insert(chunk.component_id.clone(), idx);
        }

        Ok(HybridIndex {
            config,
            chunks,
            vocab,
            term_ids,
            postings,
            chunk_lens,
            avg_len,
            dense_idf,
            basis,
            singular_values,
            dim,
            projected,
            id_to_idx,
            query_counter: AtomicU64::new(0),
        })
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], path: &'a Path) -> Self {
        Self { data, at: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        if self.at + n > self.data.len() {
            return Err(RetrievalError::Malformed {
                path: self.path.to_path_buf(),
                detail: format!("unexpected end of file at offset {}", self.at),
            });
        }
        let slice = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<(), RetrievalError> {
        let got = self.take(4)?;
        if got != magic {
            return Err(RetrievalError::Malformed {
                path: self.path.to_path_buf(),
                detail: format!("bad magic {got:?}"),
            });
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, RetrievalError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, RetrievalError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, n: usize) -> Result<String, RetrievalError> {
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| RetrievalError::Malformed {
            path: self.path.to_path_buf(),
            detail: "vocabulary term is not valid UTF-8".to_string(),
        })
    }
}
