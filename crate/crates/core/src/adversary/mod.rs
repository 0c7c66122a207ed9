//! Adaptive adversaries encoded as strategy trees.

pub mod builtin;
pub mod dot;
pub mod io;
pub mod play;
pub mod tree;

pub use builtin::{builtin_kk13, BUILTIN_KK13};
pub use dot::export_dot;
pub use io::{load_tree, save_tree, LoadError};
pub use play::{play, replay_path, PlayError};
pub use tree::{Branch, LeafInfo, Matcher, Node, NodeId, StrategyTree, TreeError};
