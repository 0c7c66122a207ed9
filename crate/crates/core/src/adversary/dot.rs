//! Graphviz rendering of strategy trees.

use std::fmt::Write;

use super::tree::{Node, StrategyTree};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One graph node per tree node; terminals are boxes carrying their tag and
/// expected ratio, and edges carry their matcher.
pub fn export_dot(tree: &StrategyTree) -> String {
    let scale = tree.scale;
    let mut order = tree.node_order();
    order.extend(
        tree.nodes
            .keys()
            .filter(|id| !order.contains(id))
            .cloned()
            .collect::<Vec<_>>(),
    );

    let mut out = String::from("digraph strategy {\n  node [fontname=\"monospace\"];\n");
    for id in &order {
        let label = match &tree.nodes[id] {
            Node::Give { pos, .. } => format!("{id}\\ngive {}", scale.format(*pos)),
            Node::Volley { points, leaf } => {
                let pts: Vec<String> = points.iter().map(|p| scale.format(*p)).collect();
                let expect = leaf
                    .expected_min_ratio
                    .map_or("?".to_string(), |r| r.to_string());
                format!("{}\\nvolley {}\\nexpect {expect}", leaf.tag, pts.join(", "))
            }
            Node::Leaf(leaf) => {
                let expect = leaf
                    .expected_min_ratio
                    .map_or("?".to_string(), |r| r.to_string());
                format!("{}\\nexpect {expect}", leaf.tag)
            }
        };
        let shape = if tree.nodes[id].is_terminal() {
            "box"
        } else {
            "ellipse"
        };
        let _ = writeln!(
            out,
            "  \"{}\" [shape={shape}, label=\"{}\"];",
            escape(id),
            escape(&label)
        );
    }
    for id in &order {
        if let Node::Give { branches, .. } = &tree.nodes[id] {
            for b in branches {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    escape(id),
                    escape(&b.child),
                    escape(&b.matcher.to_string())
                );
            }
        }
    }
    out.push_str("}\n");
    out
}
