//! Many-sorted hybrid polyadic modal logic and Matching Logic: model
//! checking, Hilbert proof checking and the translations between models
//! and formulas of the two logics.

pub mod bridge;
pub mod cli;
pub mod fixtures;
pub mod gen;
pub mod matching;
pub mod proof;
pub mod semantics;
pub mod soundness;
pub mod syntax;
pub mod textio;
