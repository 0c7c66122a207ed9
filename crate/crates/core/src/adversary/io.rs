//! JSON tree files. Coordinates and ratios are strings, never floats.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tree::{Branch, LeafInfo, Matcher, Node, StrategyTree, TreeError};
use crate::pos::{CoordError, Scale};
use crate::ratio::Ratio;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed tree file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad scale: {0}")]
    Scale(CoordError),
    #[error("node {node:?}: {source}")]
    Coord {
        node: String,
        #[source]
        source: CoordError,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    scale: i64,
    root: String,
    nodes: BTreeMap<String, NodeFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeFile {
    Give {
        pos: String,
        branches: Vec<BranchFile>,
    },
    Volley {
        points: Vec<String>,
        leaf: LeafFile,
    },
    Leaf {
        leaf: LeafFile,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    #[serde(rename = "match")]
    matcher: MatchFile,
    child: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MatchFile {
    Open(String),
    Assign(String),
    Otherwise,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafFile {
    tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expect: Option<Ratio>,
}

impl From<&LeafInfo> for LeafFile {
    fn from(l: &LeafInfo) -> Self {
        LeafFile {
            tag: l.tag.clone(),
            expect: l.expected_min_ratio,
        }
    }
}

impl From<LeafFile> for LeafInfo {
    fn from(l: LeafFile) -> Self {
        LeafInfo {
            tag: l.tag,
            expected_min_ratio: l.expect,
        }
    }
}

/// Parses and validates a tree file.
pub fn load_tree(text: &str) -> Result<StrategyTree, LoadError> {
    let file: TreeFile = serde_json::from_str(text)?;
    let scale = Scale::new(file.scale).map_err(LoadError::Scale)?;
    let mut nodes = BTreeMap::new();
    for (id, node) in file.nodes {
        let coord = |t: &str| {
            scale.parse(t).map_err(|source| LoadError::Coord {
                node: id.clone(),
                source,
            })
        };
        let node = match node {
            NodeFile::Give { pos, branches } => Node::Give {
                pos: coord(&pos)?,
                branches: branches
                    .into_iter()
                    .map(|b| Branch {
                        matcher: match b.matcher {
                            MatchFile::Open(l) => Matcher::OpenAs(l),
                            MatchFile::Assign(l) => Matcher::AssignTo(l),
                            MatchFile::Otherwise => Matcher::Otherwise,
                        },
                        child: b.child,
                    })
                    .collect(),
            },
            NodeFile::Volley { points, leaf } => Node::Volley {
                points: points.iter().map(|p| coord(p)).collect::<Result<_, _>>()?,
                leaf: leaf.into(),
            },
            NodeFile::Leaf { leaf } => Node::Leaf(leaf.into()),
        };
        nodes.insert(id, node);
    }
    let tree = StrategyTree {
        scale,
        root: file.root,
        nodes,
    };
    tree.validate()?;
    Ok(tree)
}

pub fn save_tree(tree: &StrategyTree) -> String {
    let scale = tree.scale;
    let nodes = tree
        .nodes
        .iter()
        .map(|(id, node)| {
            let n = match node {
                Node::Give { pos, branches } => NodeFile::Give {
                    pos: scale.format(*pos),
                    branches: branches
                        .iter()
                        .map(|b| BranchFile {
                            matcher: match &b.matcher {
                                Matcher::OpenAs(l) => MatchFile::Open(l.clone()),
                                Matcher::AssignTo(l) => MatchFile::Assign(l.clone()),
                                Matcher::Otherwise => MatchFile::Otherwise,
                            },
                            child: b.child.clone(),
                        })
                        .collect(),
                },
                Node::Volley { points, leaf } => NodeFile::Volley {
                    points: points.iter().map(|p| scale.format(*p)).collect(),
                    leaf: leaf.into(),
                },
                Node::Leaf(leaf) => NodeFile::Leaf { leaf: leaf.into() },
            };
            (id.clone(), n)
        })
        .collect();
    let file = TreeFile {
        scale: scale.unit(),
        root: tree.root.clone(),
        nodes,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("tree files serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::builtin::builtin_kk13;
    use crate::pos::CoordError;

    #[test]
    fn builtin_round_trips() {
        let t = builtin_kk13();
        let text = save_tree(&t);
        assert_eq!(load_tree(&text).unwrap(), t);
        assert!(text.contains(r#""match": "otherwise""#));
        assert!(text.contains(r#""open": "H""#));
        assert!(text.contains(r#""expect": "13/8""#));
    }

    #[test]
    fn unbound_label_reported_at_node() {
        let text = r#"{"scale":10,"root":"a","nodes":{
            "a":{"kind":"give","pos":"0","branches":[{"match":{"open":"X"},"child":"b"}]},
            "b":{"kind":"give","pos":"1","branches":[{"match":{"assign":"Z"},"child":"c"},{"match":"otherwise","child":"c"}]},
            "c":{"kind":"leaf","leaf":{"tag":"c"}}}}"#;
        match load_tree(text) {
            Err(LoadError::Tree(TreeError::UnboundLabel { node, label })) => {
                assert_eq!(node, "b");
                assert_eq!(label, "Z");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn off_grid_rejected() {
        let text = r#"{"scale":10,"root":"a","nodes":{
            "a":{"kind":"give","pos":"3.14","branches":[{"match":"otherwise","child":"c"}]},
            "c":{"kind":"leaf","leaf":{"tag":"c"}}}}"#;
        match load_tree(text) {
            Err(LoadError::Coord {
                node,
                source: CoordError::OffGrid { .. },
            }) => assert_eq!(node, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycles_and_missing_children_rejected() {
        let cyc = r#"{"scale":1,"root":"a","nodes":{
            "a":{"kind":"give","pos":"0","branches":[{"match":"otherwise","child":"b"}]},
            "b":{"kind":"give","pos":"5","branches":[{"match":"otherwise","child":"a"}]}}}"#;
        assert!(matches!(
            load_tree(cyc),
            Err(LoadError::Tree(TreeError::Cycle { .. }))
        ));
        let missing = r#"{"scale":1,"root":"a","nodes":{
            "a":{"kind":"give","pos":"0","branches":[{"match":"otherwise","child":"zz"}]}}}"#;
        assert!(matches!(
            load_tree(missing),
            Err(LoadError::Tree(TreeError::MissingChild { .. }))
        ));
        let rebound = r#"{"scale":1,"root":"a","nodes":{
            "a":{"kind":"give","pos":"0","branches":[{"match":{"open":"X"},"child":"b"}]},
            "b":{"kind":"give","pos":"5","branches":[{"match":{"open":"X"},"child":"c"}]},
            "c":{"kind":"leaf","leaf":{"tag":"c"}}}}"#;
        assert!(matches!(
            load_tree(rebound),
            Err(LoadError::Tree(TreeError::Rebound { .. }))
        ));
        assert!(matches!(load_tree("{"), Err(LoadError::Json(_))));
    }
}
