//! The verifier against a naive enumeration of every decision sequence.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{enumerate, pts, random_tree};
use unit_cluster::adversary::{builtin_kk13, replay_path, LeafInfo, Node, StrategyTree};
use unit_cluster::verifier::{parse_witness, verify, Verdict, VerificationReport, VerifyOptions};
use unit_cluster::Ratio;

fn r(n: u64, d: u64) -> Ratio {
    Ratio::new(n, d).unwrap()
}

fn plain() -> VerifyOptions {
    VerifyOptions {
        prune: false,
        dedup: false,
        ..VerifyOptions::default()
    }
}

fn leaf_minima(report: &VerificationReport) -> BTreeMap<String, Ratio> {
    report
        .leaves
        .iter()
        .map(|l| (l.node.clone(), l.min_ratio))
        .collect()
}

fn gap_set(report: &VerificationReport) -> BTreeSet<(String, unit_cluster::Decision)> {
    report
        .gaps
        .iter()
        .map(|g| (g.node.clone(), g.decision))
        .collect()
}

fn check_against_oracle(tree: &StrategyTree) {
    let oracle = enumerate(tree);
    let target = r(1, 1);
    let bare = verify(tree, target, plain()).unwrap();
    assert_eq!(leaf_minima(&bare), oracle.leaf_min);
    assert_eq!(bare.overall_min_ratio, oracle.overall_min);
    assert_eq!(gap_set(&bare), oracle.gaps);
    assert_eq!(bare.stats.paths, oracle.paths);

    let full = verify(tree, target, VerifyOptions::default()).unwrap();
    assert_eq!(full.to_json(false), bare.to_json(false));
    let parallel = verify(
        tree,
        target,
        VerifyOptions {
            jobs: 4,
            ..VerifyOptions::default()
        },
    )
    .unwrap();
    assert_eq!(parallel.to_json(true), full.to_json(true));

    if let Some(w) = &bare.witness {
        let trace = replay_path(tree, &w.steps).unwrap();
        assert_eq!((trace.on_cost(), trace.opt_cost()), (w.on_cost, w.opt_cost));
        assert_eq!(trace.final_ratio(), Some(w.ratio));
    }
}

#[test]
fn builtin_matches_naive_enumeration() {
    let tree = builtin_kk13();
    let oracle = enumerate(&tree);
    assert_eq!(oracle.overall_min, Some(r(13, 8)));
    assert!(oracle.gaps.is_empty());
    check_against_oracle(&tree);
}

#[test]
fn random_trees_match_naive_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut with_gaps = 0;
    for _ in 0..300 {
        let tree = random_tree(&mut rng, 4);
        tree.validate().unwrap();
        if !enumerate(&tree).gaps.is_empty() {
            with_gaps += 1;
        }
        check_against_oracle(&tree);
    }
    assert!(with_gaps > 0, "generator should exercise incomplete trees");
}

#[test]
fn truncated_l9_volley_fails() {
    let mut tree = builtin_kk13();
    let l9 = tree
        .nodes
        .iter()
        .find(|(_, n)| n.leaf_info().is_some_and(|l| l.tag == "L9"))
        .map(|(id, _)| id.clone())
        .unwrap();
    let Node::Volley { points, .. } = tree.nodes.get_mut(&l9).unwrap() else {
        panic!("L9 is a volley");
    };
    *points = pts(&["11.5"]);
    let report = verify(&tree, r(13, 8), VerifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Failed);
    let w = report.witness.unwrap();
    assert_eq!(w.tag, "L9");
    assert_eq!(w.ratio, r(3, 2));
}

#[test]
fn tampered_annotation_is_reported() {
    let mut tree = builtin_kk13();
    for node in tree.nodes.values_mut() {
        if let Node::Volley { leaf, .. } | Node::Leaf(leaf) = node {
            if leaf.tag == "L4" {
                *leaf = LeafInfo {
                    tag: "L4".into(),
                    expected_min_ratio: Some(r(2, 1)),
                };
            }
        }
    }
    let report = verify(&tree, r(13, 8), VerifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Verified);
    let bad: Vec<_> = unit_cluster::verifier::leaf_stats(&report)
        .into_iter()
        .filter(|s| s.status == unit_cluster::verifier::LeafStatus::Mismatch)
        .map(|s| s.tag)
        .collect();
    assert_eq!(bad, vec!["L4".to_string()]);
}

#[test]
fn witness_survives_report_round_trip() {
    let tree = builtin_kk13();
    let report = verify(&tree, r(5, 3), VerifyOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Failed);
    let steps = parse_witness(&report.to_json(true)).unwrap().unwrap();
    let w = report.witness.as_ref().unwrap();
    assert_eq!(&steps, &w.steps);
    let trace = replay_path(&tree, &steps).unwrap();
    assert_eq!((trace.on_cost(), trace.opt_cost()), (13, 8));
    assert_eq!(trace.leaf.as_deref(), Some(w.tag.as_str()));
}
