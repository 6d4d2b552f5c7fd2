//! Append-only graph store: `kg/<spec_id>/<clause_id>.json`, one file per
//! clause graph, field names exactly as in [`SpecGraph`].

use std::fs;
use std::path::{Path, PathBuf};

use super::{GraphError, SpecGraph};

pub fn graph_path(store_dir: &Path, spec_id: &str, clause_id: &str) -> PathBuf {
    store_dir.join(spec_id).join(format!("{clause_id}.json"))
}

pub fn save_graph(store_dir: &Path, graph: &SpecGraph) -> Result<PathBuf, GraphError> {
    let (spec_id, clause_id) = split_graph_id(graph)?;
    let path = graph_path(store_dir, &spec_id, &clause_id);
    let parent = path.parent().expect("graph path has a parent");
    fs::create_dir_all(parent).map_err(|source| GraphError::Io {
        path: parent.to_path_buf(),
        source,
    })?;
    let body = serde_json::to_string_pretty(graph).expect("graph serializes");
    fs::write(&path, body).map_err(|source| GraphError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn load_graph(
    store_dir: &Path,
    spec_id: &str,
    clause_id: &str,
) -> Result<SpecGraph, GraphError> {
    let path = graph_path(store_dir, spec_id, clause_id);
    let raw = fs::read_to_string(&path).map_err(|source| GraphError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|err| GraphError::Malformed {
        path,
        detail: err.to_string(),
    })
}

/// Every stored graph under `store_dir`, in sorted path order.
pub fn list_graphs(store_dir: &Path) -> Result<Vec<SpecGraph>, GraphError> {
    let mut paths: Vec<PathBuf> = Vec::new();
    if store_dir.is_dir() {
        let spec_dirs = fs::read_dir(store_dir).map_err(|source| GraphError::Io {
            path: store_dir.to_path_buf(),
            source,
        })?;
        for spec_dir in spec_dirs.filter_map(Result::ok) {
            if !spec_dir.path().is_dir() {
                continue;
            }
            let files = fs::read_dir(spec_dir.path()).map_err(|source| GraphError::Io {
                path: spec_dir.path(),
                source,
            })?;
            for file in files.filter_map(Result::ok) {
                let path = file.path();
                if path.extension().is_some_and(|e| e == "json") {
                    paths.push(path);
                }
            }
        }
    }
    paths.sort();
    let mut graphs = Vec::with_capacity(paths.len());
    for path in paths {
        let raw = fs::read_to_string(&path).map_err(|source| GraphError::Io {
            path: path.clone(),
            source,
        })?;
        graphs.push(
            serde_json::from_str(&raw).map_err(|err| GraphError::Malformed {
                path,
                detail: err.to_string(),
            })?,
        );
    }
    Ok(graphs)
}

fn split_graph_id(graph: &SpecGraph) -> Result<(String, String), GraphError> {
    graph
        .graph_id
        .split_once('/')
        .map(|(spec, clause)| (spec.to_string(), clause.to_string()))
        .ok_or_else(|| GraphError::Malformed {
            path: PathBuf::from(&graph.graph_id),
            detail: "graph_id is not of the form spec_id/clause_id".to_string(),
        })
}
