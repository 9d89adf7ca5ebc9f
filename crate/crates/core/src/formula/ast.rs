//! Formula expression tree and its canonical text form.

use std::fmt;

use serde::Serialize;

use crate::workbook::addr::CellCoord;

/// Evaluation error kinds, printed and parsed in their `#...!` spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorKind {
    Div0,
    Ref,
    Name,
    Value,
    Cycle,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Div0 => "#DIV/0!",
            ErrorKind::Ref => "#REF!",
            ErrorKind::Name => "#NAME?",
            ErrorKind::Value => "#VALUE!",
            ErrorKind::Cycle => "#CYCLE!",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "#DIV/0!" => Some(ErrorKind::Div0),
            "#REF!" => Some(ErrorKind::Ref),
            "#NAME?" => Some(ErrorKind::Name),
            "#VALUE!" => Some(ErrorKind::Value),
            "#CYCLE!" => Some(ErrorKind::Cycle),
            _ => None,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    /// Canonical spelling. Equality always prints as `=`.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Concat => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Concat => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

const UNARY_PRECEDENCE: u8 = 7;

/// A parsed formula expression (everything after the leading `=`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(ErrorKind),
    CellRef {
        sheet: Option<String>,
        coord: CellCoord,
    },
    RangeRef {
        sheet: Option<String>,
        start: CellCoord,
        end: CellCoord,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Unary { .. } => UNARY_PRECEDENCE,
            _ => u8::MAX,
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            Expr::Number(n) => out.push_str(&format_number(*n)),
            Expr::Text(s) => write_quoted(out, s),
            Expr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
            Expr::Error(kind) => out.push_str(kind.as_str()),
            Expr::CellRef { sheet, coord } => {
                write_sheet_prefix(out, sheet.as_deref());
                out.push_str(&coord.to_a1());
            }
            Expr::RangeRef { sheet, start, end } => {
                write_sheet_prefix(out, sheet.as_deref());
                out.push_str(&start.to_a1());
                out.push(':');
                out.push_str(&end.to_a1());
            }
            Expr::Call { name, args } => {
                out.push_str(name);
                out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    arg.write(out);
                }
                out.push(')');
            }
            Expr::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                self.write_child(out, lhs, prec, false);
                out.push_str(op.symbol());
                self.write_child(out, rhs, prec, true);
            }
            Expr::Unary { op, operand } => {
                out.push(match op {
                    UnOp::Neg => '-',
                    UnOp::Not => '!',
                });
                if operand.precedence() < UNARY_PRECEDENCE {
                    out.push('(');
                    operand.write(out);
                    out.push(')');
                } else {
                    operand.write(out);
                }
            }
        }
    }

    fn write_child(&self, out: &mut String, child: &Expr, parent_prec: u8, is_right: bool) {
        // Left association: the right child needs parens at equal precedence.
        let needs = child.precedence() < parent_prec
            || (is_right && child.precedence() == parent_prec);
        if needs {
            out.push('(');
            child.write(out);
            out.push(')');
        } else {
            child.write(out);
        }
    }
}

/// Render a number the way cells display it: shortest text that parses back
/// to the same `f64`, integers without a decimal point.
pub fn format_number(n: f64) -> String {
    format!("{n}")
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
}

fn write_sheet_prefix(out: &mut String, sheet: Option<&str>) {
    let Some(name) = sheet else { return };
    if bare_name_ok(name) {
        out.push_str(name);
    } else {
        out.push('\'');
        for ch in name.chars() {
            if ch == '\'' {
                out.push('\'');
            }
            out.push(ch);
        }
        out.push('\'');
    }
    out.push('!');
}

/// A sheet name can be written without quotes when it is identifier-shaped
/// and cannot be confused with a cell address or boolean literal.
pub(crate) fn bare_name_ok(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    if !head_ok || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    if CellCoord::parse_a1(name).is_ok() {
        return false;
    }
    !name.eq_ignore_ascii_case("true") && !name.eq_ignore_ascii_case("false")
}

/// Print a formula as canonical text, including the leading `=`.
pub fn print_formula(expr: &Expr) -> String {
    let mut out = String::from("=");
    expr.write(&mut out);
    out
}
