//! Parser, effect-tracking type checker, interpreter and model generator
//! for the Widget calculus.

pub mod diag;
pub mod dispatch;
pub mod eval;
pub mod externals;
pub mod harness;
pub mod modelgen;
pub mod runtime;
pub mod syntax;
pub mod typecheck;
pub mod types;
