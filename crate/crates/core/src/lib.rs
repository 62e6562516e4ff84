//! Generalized random graphs with i.i.d. random vertex weights.
//!
//! Vertex `i` carries a weight `W_i > 0`; with `L_n = Σ W_i`, each pair
//! `{i, j}` is joined independently with probability
//! `W_i W_j / (L_n + W_i W_j)`. This crate samples such graphs, and checks
//! by simulation how the total edge count `E_n` behaves for large `n`:
//!
//! * `E_n / n → EW / 2` when `EW < ∞` ([`limits::run_lln`]);
//! * `(2E_n − nEW)/√(n(2EW + Var W)) → N(0,1)` when `EW² < ∞`
//!   ([`limits::run_theorem1`]);
//! * `(2E_n − nEW)/a_n` has the same stable limit as `(L_n − nEW)/a_n`
//!   when `W` is regularly varying with index `α ∈ (1,2)`
//!   ([`limits::run_theorem2`]);
//! * the remainder terms of the characteristic-function argument shrink with
//!   `n` ([`limits::proof_audit`]).
//!
//! ```
//! use grg_core::graph::sample_graph_fast;
//! use grg_core::weights::{sample_weights, WeightModel};
//!
//! let model: WeightModel = "pareto:alpha=1.5,xm=1".parse()?;
//! let weights = sample_weights(&model, 10_000, 7)?;
//! let g = sample_graph_fast(&weights, 8)?;
//! assert_eq!(g.degrees.iter().map(|&d| d as u64).sum::<u64>(), 2 * g.edge_count);
//! # Ok::<(), grg_core::Error>(())
//! ```
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod error;
pub mod graph;
pub mod limits;
pub mod quadrature;
pub mod report;
pub mod seed;
pub mod stable;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};

// The guide chapters are doc-tested so their listings stay in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/theorems.md")]
    mod theorems {}
    #[doc = include_str!("../../../book/src/stable.md")]
    mod stable {}
    #[doc = include_str!("../../../book/src/audit.md")]
    mod audit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
