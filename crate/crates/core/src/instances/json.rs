//! JSON instance files.
//!
//! ```json
//! {"type": "hypergraph", "n": 3, "num_vertices": 3, "edges": [[0,1],[0,2],[1,2]], "v": [...], "x": [...]}
//! {"type": "knapsack", "n": 3, "a": [0.6, 0.5, 0.4], "v": [1, 1, 1], "x": [...]}
//! {"type": "kcspip", "n": 2, "m": 1, "k": 1, "columns": [[[0, 0.6]], [[0, 0.3]]], "v": [1, 1]}
//! {"type": "digraph", "n": 3, "out": [[1], [2], [0]]}
//! ```
//!
//! `n` is always the ground-set size (edges for a hypergraph, items
//! otherwise). All indices are 0-based.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{check_len, Digraph, FractionalPoint, Hypergraph, KcsInstance, KnapsackInstance};
use super::Instance;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Raw {
    Hypergraph {
        n: usize,
        num_vertices: usize,
        edges: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Vec<f64>>,
    },
    Knapsack {
        n: usize,
        a: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Vec<f64>>,
    },
    Kcspip {
        n: usize,
        m: usize,
        k: usize,
        columns: Vec<Vec<(usize, f64)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Vec<f64>>,
    },
    Digraph {
        n: usize,
        out: Vec<Vec<usize>>,
    },
}

/// Contents of an instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Instance { instance: Instance, x: Option<FractionalPoint> },
    Digraph(Digraph),
}

impl Document {
    pub fn instance(instance: Instance, x: Option<FractionalPoint>) -> Self {
        Self::Instance { instance, x }
    }
}

fn point(x: Option<Vec<f64>>, n: usize) -> Result<Option<FractionalPoint>> {
    x.map(|x| {
        check_len(x.len(), n)?;
        FractionalPoint::new(x)
    })
    .transpose()
}

fn values_or_ones(v: Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    let v = v.unwrap_or_else(|| vec![1.0; n]);
    check_len(v.len(), n)?;
    Ok(v)
}

impl TryFrom<Raw> for Document {
    type Error = Error;
    fn try_from(raw: Raw) -> Result<Self> {
        Ok(match raw {
            Raw::Hypergraph { n, num_vertices, edges, v, x } => {
                check_len(edges.len(), n)?;
                let mut h = Hypergraph::new(num_vertices, edges)?;
                if let Some(v) = v {
                    h = h.with_weights(v)?;
                }
                Document::instance(Instance::Hypergraph(h), point(x, n)?)
            }
            Raw::Knapsack { n, a, v, x } => {
                check_len(a.len(), n)?;
                let inst = KnapsackInstance::new(a, values_or_ones(v, n)?)?;
                Document::instance(Instance::Knapsack(inst), point(x, n)?)
            }
            Raw::Kcspip { n, m, k, columns, v, x } => {
                check_len(columns.len(), n)?;
                let inst = KcsInstance::new(m, k, columns, values_or_ones(v, n)?)?;
                Document::instance(Instance::Kcs(inst), point(x, n)?)
            }
            Raw::Digraph { n, out } => {
                check_len(out.len(), n)?;
                Document::Digraph(Digraph::from_out_lists(out)?)
            }
        })
    }
}

impl From<&Document> for Raw {
    fn from(doc: &Document) -> Raw {
        match doc {
            Document::Digraph(g) => Raw::Digraph { n: g.num_vertices(), out: g.out_lists().to_vec() },
            Document::Instance { instance, x } => {
                let x = x.as_ref().map(|x| x.coords().to_vec());
                match instance {
                    Instance::Hypergraph(h) => Raw::Hypergraph {
                        n: h.num_edges(),
                        num_vertices: h.num_vertices(),
                        edges: h.edges().to_vec(),
                        v: h.weights().map(<[f64]>::to_vec),
                        x,
                    },
                    Instance::Knapsack(k) => Raw::Knapsack {
                        n: k.len(),
                        a: k.sizes().to_vec(),
                        v: Some(k.values().to_vec()),
                        x,
                    },
                    Instance::Kcs(k) => Raw::Kcspip {
                        n: k.num_items(),
                        m: k.num_constraints(),
                        k: k.sparsity(),
                        columns: k.columns().to_vec(),
                        v: Some(k.values().to_vec()),
                        x,
                    },
                }
            }
        }
    }
}

pub fn to_json_string(doc: &Document) -> String {
    serde_json::to_string_pretty(&Raw::from(doc)).expect("instance documents always serialize")
}

pub fn from_json_str(s: &str) -> Result<Document> {
    let raw: Raw = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    Document::try_from(raw)
}

pub fn read_document(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    from_json_str(&text)
}

pub fn write_document(path: &Path, doc: &Document) -> Result<()> {
    let mut text = to_json_string(doc);
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::generators::{gen_circulant_tournament, gen_kcs_str, gen_projective_plane};
    use crate::instances::random::random_knapsack;
    use crate::randkit::RngStream;

    fn roundtrip(doc: &Document) {
        let s = to_json_string(doc);
        let back = from_json_str(&s).unwrap();
        assert_eq!(&back, doc);
    }

    #[test]
    fn roundtrips_bit_exactly() {
        roundtrip(&Document::instance(
            Instance::Hypergraph(gen_projective_plane(2).unwrap()),
            Some(FractionalPoint::uniform(7, 1.0 / 3.0).unwrap()),
        ));
        let (k, x) = gen_kcs_str(3, 0.01).unwrap();
        roundtrip(&Document::instance(Instance::Kcs(k), Some(x)));
        let mut r = RngStream::root(1);
        for _ in 0..20 {
            let (k, x) = random_knapsack(7, 0.0, 1.0, &mut r).unwrap();
            roundtrip(&Document::instance(Instance::Knapsack(k), Some(x)));
        }
        roundtrip(&Document::Digraph(gen_circulant_tournament(3).unwrap()));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(from_json_str("{"), Err(Error::Format(_))));
        assert!(from_json_str(r#"{"type":"knapsack","n":2,"a":[0.5]}"#).is_err());
        assert!(from_json_str(r#"{"type":"knapsack","n":1,"a":[0.5],"bogus":1}"#).is_err());
        assert!(from_json_str(r#"{"type":"knapsack","n":1,"a":[0.5],"x":[2.0]}"#).is_err());
        let ok = from_json_str(r#"{"type":"knapsack","n":1,"a":[0.5]}"#).unwrap();
        match ok {
            Document::Instance { instance: Instance::Knapsack(k), x: None } => {
                assert_eq!(k.values(), &[1.0])
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
