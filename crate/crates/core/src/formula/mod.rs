//! Formula parsing, printing, evaluation, and reference rewriting.

mod ast;
mod eval;
mod parse;
mod rewrite;

pub use ast::{format_number, print_formula, BinOp, ErrorKind, Expr, UnOp};
pub use eval::{compare_values, evaluate_workbook, truthy, CmpOp, Value, ValueGrid};
pub use parse::{parse_formula, FormulaError};
pub use rewrite::rewrite_references;
