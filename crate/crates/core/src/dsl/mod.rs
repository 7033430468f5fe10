//! The defining-function language: expressions, `.cdl` experiment files,
//! and evaluation over pluggable value algebras.

pub mod ast;
pub mod config;
pub mod eval;
pub mod lexer;
pub mod parser;

pub use ast::{BinOp, Expr, UnOp, Var};
pub use config::{parse_config, CloudSpec, ExperimentConfig, GridSpec, ScalingMode, Tolerances};
pub use eval::{eval, Bindings, ExprValue};
pub use parser::parse_expr;
