//! Structured Signal Temporal Logic toolkit.
//!
//! Formulas are trees ([`ast::StlNode`]) exchanged as JSON. Around them the
//! crate provides monitoring over discrete traces ([`semantics`]),
//! tolerance-aware tree matching and accuracy metrics ([`matcher`]), four
//! deterministic computation tools ([`tools`]), transcript parsing and
//! stage checks for tool-augmented rollouts ([`rollout`]), outcome and
//! process rewards with group-relative advantages ([`reward`]), dataset
//! handling ([`bench`]) and a command-line front end ([`cli`]).
//!
//! ```
//! use stlforge::ast::parse_stl_json;
//! use stlforge::matcher::{tree_match, MatchConfig};
//!
//! let reference = parse_stl_json(
//!     r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Rightaction":"altitude>3048.0"}}"#,
//! ).unwrap();
//! let predicted = parse_stl_json(
//!     r#"{"STL":{"Operation":"Finally","Time":[0,1800.05],"Rightaction":"altitude>3048.04"}}"#,
//! ).unwrap();
//! assert!(tree_match(&predicted, &reference, &MatchConfig::default()).exact);
//! ```

pub mod ast;
pub mod bench;
pub mod cli;
pub mod matcher;
pub mod reward;
pub mod rollout;
pub mod semantics;
pub mod tools;

pub use ast::{canonicalize, parse_stl_json, serialize_stl_json, Interval, Operator, Predicate, SchemaError, StlNode};
pub use matcher::{tree_match, tree_match_json, MatchConfig, MatchScore};
pub use reward::{group_advantages, process_rewards, score_group, score_outcome, token_labels, RewardConfig, RewardReport};
pub use rollout::{parse_rollout, Reference, Rollout};
pub use semantics::{satisfies, Trace};
