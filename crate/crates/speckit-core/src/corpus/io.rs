//! Corpus directory loading.
//!
//! Layout: `corpus/<spec_id>/document.txt` plus optional sidecar region
//! files `corpus/<spec_id>/tables/<n>.txt` and
//! `corpus/<spec_id>/figures/<n>.txt`. A sidecar starts with a `key: value`
//! header block terminated by a blank line; the `clause` key names the
//! clause the region belongs to, and everything after the blank line is the
//! raw region payload.

use std::fs;
use std::path::{Path, PathBuf};

use super::{normalize_document, CorpusError, NormalizeConfig, NormalizedDocument};

/// Read every specification under `dir` into normalized documents, with
/// table and figure regions attached to their clauses. Directories are
/// processed in sorted order and region files in numeric order, so the
/// result is deterministic.
pub fn read_corpus_dir(
    dir: &Path,
    cfg: &NormalizeConfig,
) -> Result<Vec<NormalizedDocument>, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::Layout {
            path: dir.to_path_buf(),
            detail: "corpus directory does not exist".to_string(),
        });
    }
    let mut spec_dirs: Vec<PathBuf> = read_dir_sorted(dir)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    spec_dirs.sort();
    if spec_dirs.is_empty() {
        return Err(CorpusError::Layout {
            path: dir.to_path_buf(),
            detail: "corpus directory contains no specification directories".to_string(),
        });
    }

    let mut documents = Vec::with_capacity(spec_dirs.len());
    for spec_dir in spec_dirs {
        let spec_id = spec_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CorpusError::Layout {
                path: spec_dir.clone(),
                detail: "specification directory name is not valid UTF-8".to_string(),
            })?
            .to_string();
        let document_path = spec_dir.join("document.txt");
        if !document_path.is_file() {
            return Err(CorpusError::Layout {
                path: document_path,
                detail: "missing document.txt".to_string(),
            });
        }
        let raw = fs::read(&document_path).map_err(|source| CorpusError::Io {
            path: document_path.clone(),
            source,
        })?;
        let mut doc = normalize_document(&raw, &spec_id, cfg)?;
        attach_regions(&mut doc, &spec_dir.join("tables"), RegionKind::Table)?;
        attach_regions(&mut doc, &spec_dir.join("figures"), RegionKind::Figure)?;
        documents.push(doc);
    }
    Ok(documents)
}

enum RegionKind {
    Table,
    Figure,
}

fn attach_regions(
    doc: &mut NormalizedDocument,
    dir: &Path,
    kind: RegionKind,
) -> Result<(), CorpusError> {
    if !dir.is_dir() {
        return Ok(());
    }
    let mut files: Vec<PathBuf> = read_dir_sorted(dir)?
        .into_iter()
        .filter(|p| p.is_file())
        .collect();
    // Numeric filename order when possible, lexicographic otherwise.
    files.sort_by_key(|p| {
        let stem = p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        (stem.parse::<u64>().ok(), stem)
    });
    for file in files {
        let raw = fs::read_to_string(&file).map_err(|source| CorpusError::Io {
            path: file.clone(),
            source,
        })?;
        let (clause_id, payload) = parse_sidecar(&raw).map_err(|detail| CorpusError::Layout {
            path: file.clone(),
            detail,
        })?;
        let clause = doc
            .clause_mut(&clause_id)
            .ok_or_else(|| CorpusError::Layout {
                path: file.clone(),
                detail: format!("region cites unknown clause {clause_id:?}"),
            })?;
        match kind {
            RegionKind::Table => clause.table_regions.push(payload),
            RegionKind::Figure => clause.figure_regions.push(payload),
        }
    }
    Ok(())
}

/// Split a sidecar file into its `clause` header value and payload.
fn parse_sidecar(raw: &str) -> Result<(String, String), String> {
    let mut clause_id: Option<String> = None;
    let mut lines = raw.lines();
    for line in lines.by_ref() {
        let line = line.trim_end();
        if line.trim().is_empty() {
            break;
        }
        match line.split_once(':') {
            Some((key, value)) if key.trim() == "clause" => {
                clause_id = Some(value.trim().to_string());
            }
            Some(_) => {} // other header keys are allowed and ignored
            None => return Err(format!("malformed header line {line:?}")),
        }
    }
    let clause_id = clause_id.ok_or("sidecar header is missing the clause key")?;
    let payload: String = lines.collect::<Vec<_>>().join("\n").trim().to_string();
    if payload.is_empty() {
        return Err("sidecar has no payload after the header".to_string());
    }
    Ok((clause_id, payload))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, content: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
    }

    #[test]
    fn loads_documents_and_attaches_regions() {
        let dir = tempfile::tempdir().unwrap();
        let spec = dir.path().join("TS 24.501");
        write(
            &spec.join("document.txt"),
            "5.1 General\nBody text here.\n9.11.3 IEs\nIE text.",
        );
        write(
            &spec.join("tables/1.txt"),
            "clause: 9.11.3\ncaption: Table 9.11.3.20\n\nTable 9.11.3.20: payload | cells",
        );
        let docs = read_corpus_dir(dir.path(), &NormalizeConfig::default()).unwrap();
        assert_eq!(docs.len(), 1);
        let clause = docs[0].clause("9.11.3").unwrap();
        assert_eq!(clause.table_regions.len(), 1);
        assert!(clause.table_regions[0].contains("payload"));
    }

    #[test]
    fn missing_document_is_a_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("TS 1")).unwrap();
        let err = read_corpus_dir(dir.path(), &NormalizeConfig::default());
        assert!(matches!(err, Err(CorpusError::Layout { .. })));
    }

    #[test]
    fn region_citing_unknown_clause_is_a_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        let spec = dir.path().join("TS 1");
        write(&spec.join("document.txt"), "5.1 General\nBody.");
        write(&spec.join("tables/1.txt"), "clause: 9.9\n\npayload");
        let err = read_corpus_dir(dir.path(), &NormalizeConfig::default());
        assert!(matches!(err, Err(CorpusError::Layout { .. })));
    }

    #[test]
    fn empty_corpus_dir_is_a_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_corpus_dir(dir.path(), &NormalizeConfig::default());
        assert!(matches!(err, Err(CorpusError::Layout { .. })));
    }
}
