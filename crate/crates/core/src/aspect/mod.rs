//! The aspect language: named pointcuts selecting worksheet/range/cell join
//! points, plus positioned advice bodies with `#{...}` interpolation and
//! optional `when { ... }` guards.
//!
//! ```text
//! aspect BorderlineCase
//! finalmark: select sheet{*}.column{*}.cell{*}
//! around finalmark {
//!   #{cell.result>=4.8&&cell.result<5?5:cell.value}
//! } when {
//!   cell.column[0].value="Final Mark"
//! }
//! end
//! ```

mod parse;
mod print;
mod validate;

pub use parse::{parse_aspect, parse_aspects, AspectParseError};
pub use print::print_aspect;
pub use validate::{validate, Diagnostic};

use crate::formula::CmpOp;
use crate::workbook::CellCoord;

/// A parsed aspect: ordered pointcuts and ordered advice. Advice order is
/// semantic — it drives weave precedence.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectDef {
    pub name: String,
    pub pointcuts: Vec<Pointcut>,
    pub advice: Vec<Advice>,
}

impl AspectDef {
    pub fn pointcut(&self, name: &str) -> Option<&Pointcut> {
        self.pointcuts.iter().find(|p| p.name == name)
    }
}

/// What kind of join point a pointcut selects, derived from which patterns
/// it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Sheet,
    Range,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pointcut {
    pub name: String,
    pub sheet: SheetPat,
    pub range: Option<RangePat>,
    pub cell: Option<CellPat>,
    /// Source line, for diagnostics.
    pub line: usize,
}

impl Pointcut {
    pub fn target_kind(&self) -> TargetKind {
        if self.cell.is_some() {
            TargetKind::Cell
        } else if self.range.is_some() {
            TargetKind::Range
        } else {
            TargetKind::Sheet
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SheetPat {
    Any,
    /// `sheet{name <cmp> "..."}`
    Name(CmpOp, String),
    /// `sheet{number <cmp> N}`, 1-based position.
    Number(CmpOp, i64),
}

/// Keyword a range pattern was written with; it is also the variable name
/// the pattern binds for advice expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKeyword {
    Range,
    Column,
    Row,
}

impl RangeKeyword {
    pub fn as_str(self) -> &'static str {
        match self {
            RangeKeyword::Range => "range",
            RangeKeyword::Column => "column",
            RangeKeyword::Row => "row",
        }
    }
}

/// Axis selected by an index range pattern such as `row{2}` or
/// `range{row=2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangePat {
    pub keyword: RangeKeyword,
    pub sel: RangeSel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RangeSel {
    Any,
    /// `range{name <cmp> "A2:C3"}`; a single address means a 1x1 rect.
    Name(CmpOp, String),
    /// 1-based used-row/column index selector: `row{2}`, `row{>=2}`,
    /// `range{row=2}`, `range{column=1}`.
    Index { axis: Axis, cmp: CmpOp, n: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellPat {
    Any,
    /// `cell{name <cmp> "E4"}`
    Name(CmpOp, String),
    /// `cell{match = "regex"}` over the cell's stored content text.
    Match(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Left,
    Above,
    Right,
    Below,
    Around,
    Before,
    After,
}

impl Position {
    pub fn as_str(self) -> &'static str {
        match self {
            Position::Left => "left",
            Position::Above => "above",
            Position::Right => "right",
            Position::Below => "below",
            Position::Around => "around",
            Position::Before => "before",
            Position::After => "after",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub name: Option<String>,
    pub position: Position,
    pub pointcut: String,
    pub body: AdviceBody,
    pub guard: Option<AspectExpr>,
    /// Source line, for diagnostics.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdviceBody {
    /// Raw cell content with interpolation.
    Template(Template),
    /// `A1 = "content"; B2 = "content"` — a block of cells addressed
    /// relative to A1.
    CellList(Vec<(CellCoord, Template)>),
    /// `copy <sheet name>` — duplicate an existing worksheet.
    CopySheet(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Template {
    pub segments: Vec<Segment>,
}

impl Template {
    pub fn literal(text: impl Into<String>) -> Self {
        Template {
            segments: vec![Segment::Literal(text.into())],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Literal(String),
    Interp(AspectExpr),
}

/// Expressions usable in guards and interpolations: attribute paths,
/// literals, comparisons, boolean connectives, and (in interpolations only)
/// the ternary conditional.
#[derive(Debug, Clone, PartialEq)]
pub enum AspectExpr {
    Number(f64),
    Str(String),
    Bool(bool),
    Path(AttrPath),
    Compare {
        op: CmpOp,
        lhs: Box<AspectExpr>,
        rhs: Box<AspectExpr>,
    },
    And(Box<AspectExpr>, Box<AspectExpr>),
    Or(Box<AspectExpr>, Box<AspectExpr>),
    Not(Box<AspectExpr>),
    Ternary {
        cond: Box<AspectExpr>,
        then: Box<AspectExpr>,
        otherwise: Box<AspectExpr>,
    },
}

/// `cell.column[0].value` — a dotted attribute path with optional indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrPath {
    pub segments: Vec<PathSeg>,
}

impl AttrPath {
    pub fn root(&self) -> &PathSeg {
        &self.segments[0]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            out.push_str(&seg.name);
            if let Some(idx) = seg.index {
                out.push_str(&format!("[{idx}]"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSeg {
    pub name: String,
    pub index: Option<u32>,
}
