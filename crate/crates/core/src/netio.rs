//! Edge-list ingestion, largest strongly connected component, checksums
//! and the flat `key = value` config format.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scc::scc_decompose;

/// A parsed edge list. `ids[k]` is the original id of node `k`; ids are
/// assigned in ascending original-id order.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub graph: DirectedGraph,
    pub ids: Vec<u64>,
    /// Non-comment lines read, before duplicate merging.
    pub lines: usize,
}

pub fn load_edgelist(path: &Path, directed: bool) -> Result<EdgeList> {
    let file = File::open(path)?;
    parse_edgelist(BufReader::new(file), path, directed)
}

/// Parses SNAP-style `src dst` lines; `#` starts a comment line.
pub fn parse_edgelist<R: BufRead>(reader: R, path: &Path, directed: bool) -> Result<EdgeList> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message,
        };
        let mut fields = t.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected two node ids, got '{t}'")));
        };
        let a: u64 = a
            .parse()
            .map_err(|_| parse_err(format!("bad node id '{a}'")))?;
        let b: u64 = b
            .parse()
            .map_err(|_| parse_err(format!("bad node id '{b}'")))?;
        raw.push((a, b));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph(path.to_path_buf()));
    }
    let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let edges = raw.iter().map(|(a, b)| (index[a], index[b]));
    let graph = if directed {
        DirectedGraph::from_edges(ids.len(), edges)?
    } else {
        DirectedGraph::undirected(ids.len(), edges)?
    };
    Ok(EdgeList {
        graph,
        ids,
        lines: raw.len(),
    })
}

/// Induced subgraph on the largest strongly connected component, with the
/// input index of every kept node. Ties go to the component holding the
/// smallest node index (and so the smallest original id).
pub fn largest_scc(graph: &DirectedGraph) -> (DirectedGraph, Vec<usize>) {
    let d = scc_decompose(graph);
    let best = d
        .components()
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])));
    match best {
        None => (DirectedGraph::empty(0), Vec::new()),
        Some(nodes) => (graph.induced_subgraph(nodes), nodes.clone()),
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn verify_checksum(path: &Path, expected: &str) -> Result<()> {
    let actual = sha256_file(path)?;
    if actual.eq_ignore_ascii_case(expected.trim()) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "checksum mismatch for {}: expected {}, found {actual}",
            path.display(),
            expected.trim()
        )))
    }
}

/// Public datasets with their download locations.
#[derive(Debug, Clone, Copy)]
pub struct Dataset {
    pub name: &'static str,
    pub url: &'static str,
    pub file: &'static str,
    pub directed: bool,
}

pub const DATASETS: [Dataset; 3] = [
    Dataset {
        name: "wiki-Vote",
        url: "https://snap.stanford.edu/data/wiki-Vote.txt.gz",
        file: "wiki-Vote.txt",
        directed: true,
    },
    Dataset {
        name: "ca-GrQc",
        url: "https://snap.stanford.edu/data/ca-GrQc.txt.gz",
        file: "ca-GrQc.txt",
        directed: false,
    },
    Dataset {
        name: "ego-Facebook",
        url: "https://snap.stanford.edu/data/facebook_combined.txt.gz",
        file: "facebook_combined.txt",
        directed: false,
    },
];

pub fn dataset(name: &str) -> Option<Dataset> {
    DATASETS
        .iter()
        .copied()
        .find(|d| d.name.eq_ignore_ascii_case(name))
}

pub fn download_instructions(dir: &Path) -> String {
    let mut s = String::from("Datasets are not bundled. Fetch and unpack them with:\n\n");
    for d in DATASETS {
        s.push_str(&format!(
            "  curl -L {} | gunzip > {}\n",
            d.url,
            dir.join(d.file).display()
        ));
    }
    s.push_str("\nThen run `kronmix ingest --path <file> [--directed] [--sha256 <hex>]`.\n");
    s
}

/// Reads `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are lower-cased with `-` folded to `_`.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (key, value) = t.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key = value",
                path.display(),
                k + 1
            ))
        })?;
        map.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(map)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, directed: bool) -> Result<EdgeList> {
        parse_edgelist(text.as_bytes(), Path::new("mem"), directed)
    }

    #[test]
    fn two_cycle_is_one_component() {
        let e = parse("0 1\n1 0\n", true).unwrap();
        assert_eq!((e.graph.node_count(), e.graph.edge_count()), (2, 2));
        assert_eq!(scc_decompose(&e.graph).component_count(), 1);
    }

    #[test]
    fn comments_only_is_empty() {
        assert!(matches!(
            parse("# a\n# b\n", true),
            Err(Error::EmptyGraph(_))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("# c\n1 2\n3 x\n", true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("1 2 3\n", true).is_err());
    }

    #[test]
    fn ids_remap_in_ascending_order_and_merge_duplicates() {
        let e = parse("30\t10\n10 20\n30 10\n", true).unwrap();
        assert_eq!(e.ids, vec![10, 20, 30]);
        assert_eq!(e.graph.edge_count(), 2);
        assert!(e.graph.has_edge(2, 0) && e.graph.has_edge(0, 1));
        assert_eq!(e.lines, 3);
        let u = parse("5 7\n", false).unwrap();
        assert!(u.graph.has_edge(0, 1) && u.graph.has_edge(1, 0));
    }

    #[test]
    fn largest_scc_tie_break_and_identity() {
        let g = DirectedGraph::from_edges(5, [(3, 4), (4, 3), (0, 1), (1, 0), (1, 2)]).unwrap();
        let (sub, map) = largest_scc(&g);
        assert_eq!(map, vec![0, 1]);
        assert_eq!(sub.edge_count(), 2);
        let cyc = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let (sub, map) = largest_scc(&cyc);
        assert_eq!(map, vec![0, 1, 2]);
        assert_eq!(sub.edge_count(), 3);
    }

    #[test]
    fn config_lines() {
        let m = parse_config("# x\nAgents = cycle:n=5\n\nsweep-start=3\n", Path::new("c")).unwrap();
        assert_eq!(m["agents"], "cycle:n=5");
        assert_eq!(m["sweep_start"], "3");
        assert!(parse_config("oops\n", Path::new("c")).is_err());
    }
}
