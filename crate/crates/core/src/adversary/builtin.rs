//! The 13/8 lower-bound adversary for one-dimensional online unit
//! clustering, with scale 10.
//!
//! The main line gives 3, 4, 5, 6, 2, 1, 0, 2.5, 7, 8, 8.5, 9, 10, 11, 9.5,
//! 12, 13 and names the algorithm's clusters D, E, F, B, A, C, G, H, J, I, K
//! and L as they appear. Every deviation from the main line ends at a leaf
//! whose ratio is at least 13/8; the four terminal volleys after points 8.5,
//! 9.5 and 13 are where the bound is tight or nearly so.

use std::collections::BTreeMap;

use super::tree::{Branch, LeafInfo, Matcher, Node, NodeId, StrategyTree, ANONYMOUS};
use crate::pos::Scale;
use crate::ratio::Ratio;

pub const BUILTIN_KK13: &str = "builtin:kk13";

struct Builder {
    scale: Scale,
    nodes: BTreeMap<NodeId, Node>,
}

fn open(label: &str, child: &str) -> Branch {
    Branch {
        matcher: Matcher::OpenAs(label.to_string()),
        child: child.to_string(),
    }
}

fn assign(label: &str, child: &str) -> Branch {
    Branch {
        matcher: Matcher::AssignTo(label.to_string()),
        child: child.to_string(),
    }
}

fn otherwise(child: &str) -> Branch {
    Branch {
        matcher: Matcher::Otherwise,
        child: child.to_string(),
    }
}

fn info(tag: &str, num: u64, den: u64) -> LeafInfo {
    LeafInfo {
        tag: tag.to_string(),
        expected_min_ratio: Some(Ratio::new(num, den).expect("positive denominator")),
    }
}

impl Builder {
    fn give(&mut self, id: &str, pos: &str, branches: Vec<Branch>) {
        let pos = self
            .scale
            .parse(pos)
            .expect("builtin coordinates are on the grid");
        self.nodes
            .insert(id.to_string(), Node::Give { pos, branches });
    }

    fn volley(&mut self, id: &str, points: &[&str], leaf: LeafInfo) {
        let points = points
            .iter()
            .map(|p| {
                self.scale
                    .parse(p)
                    .expect("builtin coordinates are on the grid")
            })
            .collect();
        self.nodes
            .insert(id.to_string(), Node::Volley { points, leaf });
    }

    fn leaf(&mut self, id: &str, leaf: LeafInfo) {
        self.nodes.insert(id.to_string(), Node::Leaf(leaf));
    }
}

pub fn builtin_kk13() -> StrategyTree {
    let mut b = Builder {
        scale: Scale::default(),
        nodes: BTreeMap::new(),
    };

    b.give("n1", "3", vec![open("D", "n2")]);
    b.give("n2", "4", vec![assign("D", "n3"), open(ANONYMOUS, "L1")]);
    b.leaf("L1", info("L1", 2, 1));

    b.give("n3", "5", vec![open("E", "n4")]);
    b.give("n4", "6", vec![open("F", "n5"), assign("E", "L2")]);
    b.volley("L2", &["2.5", "4.5", "6.5"], info("L2", 5, 3));

    b.give("n5", "2", vec![open("B", "n6")]);
    b.give("n6", "1", vec![assign("B", "n7"), open(ANONYMOUS, "L3")]);
    b.leaf("L3", info("L3", 5, 3));

    b.give("n7", "0", vec![open("A", "n8")]);
    b.give("n8", "2.5", vec![open("C", "n9")]);
    b.give("n9", "7", vec![assign("F", "n10"), open(ANONYMOUS, "L4")]);
    b.leaf("L4", info("L4", 7, 4));

    b.give("n10", "8", vec![open("G", "n11")]);
    b.give("n11", "8.5", vec![open("H", "n12"), assign("G", "L5")]);
    b.volley("L5", &["4.5", "5.6", "7.4", "9.5"], info("L5", 10, 6));

    // Assigning G here is feasible too; the adversary continues exactly as
    // for H.
    b.give(
        "n12",
        "9",
        vec![assign("H", "n13"), open(ANONYMOUS, "L6"), otherwise("n13")],
    );
    b.leaf("L6", info("L6", 9, 5));

    b.give("n13", "10", vec![open("J", "n14")]);
    b.give("n14", "11", vec![assign("J", "n15"), open(ANONYMOUS, "L7")]);
    b.leaf("L7", info("L7", 10, 6));

    b.give("n15", "9.5", vec![open("I", "n16"), assign("H", "L8")]);
    b.volley(
        "L8",
        &["4.5", "5.6", "7.2", "8.3", "9.7", "11.5"],
        info("L8", 13, 8),
    );

    b.give("n16", "12", vec![open("K", "n17")]);
    b.give("n17", "13", vec![assign("K", "L9"), open("L", "L10")]);
    b.volley("L9", &["11.5", "14"], info("L9", 13, 8));
    b.volley("L10", &["4.5", "5.6"], info("L10", 13, 8));

    StrategyTree {
        scale: b.scale,
        root: "n1".to_string(),
        nodes: b.nodes,
    }
}
