//! Proof-annotation synthesis for loop-manipulating Verus programs.
//!
//! The pipeline splits a function into segments around its loops, asks a
//! language model for segment interfaces and loop proofs, adds invariants
//! that follow from read/write-set analysis, checks candidates with an
//! external verifier and feeds diagnostics back for a bounded number of
//! repair rounds before handing the segment to a human.

pub mod access;
pub mod backend;
pub mod bench;
pub mod config;
pub mod generate;
pub mod human;
pub mod pipeline;
pub mod prompting;
pub mod report;
pub mod segmenter;
pub mod source_model;
pub mod verifier;

pub use source_model::{
    extract_identifiers, parse_function, print_function, Block, Expr, FunctionAst, LineSpan,
    LoopId, Param, ParseError, SourceProgram, SpecExpr, Stmt, StmtKind,
};
