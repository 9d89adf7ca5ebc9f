//! Join-point matching: enumerate what a pointcut selects in a workbook
//! snapshot, bind the variables advice expressions can read, and evaluate
//! guards and interpolation templates against the evaluated grid.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::aspect::{
    AspectExpr, Axis, CellPat, Pointcut, RangeKeyword, RangeSel, Segment, SheetPat, Template,
};
use crate::formula::{compare_values, format_number, truthy, CmpOp, ErrorKind, Value, ValueGrid};
use crate::workbook::addr::{CellAddr, CellCoord, RangeKind, RangeRect};
use crate::workbook::{CellContent, Workbook};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("variable {0:?} is not bound at this join point")]
    Unbound(String),
    #[error("cannot resolve attribute path {0:?}")]
    BadPath(String),
    #[error("index {index} is outside {rect} in {path:?}")]
    IndexOutOfBounds {
        path: String,
        index: u32,
        rect: String,
    },
    #[error("interpolation produced {0}")]
    InterpolationError(ErrorKind),
    #[error("interpolated content does not parse: {0}")]
    BadContent(#[from] crate::formula::FormulaError),
}

/// A matched program point.
#[derive(Debug, Clone, PartialEq)]
pub enum JoinPoint {
    Sheet {
        sheet: usize,
    },
    Range(RangeRect),
    Cell {
        addr: CellAddr,
        /// The rect the pointcut's range pattern selected around this cell.
        enclosing: Option<RangeRect>,
    },
}

impl JoinPoint {
    pub fn sheet_index(&self) -> usize {
        match self {
            JoinPoint::Sheet { sheet } => *sheet,
            JoinPoint::Range(rect) => rect.sheet,
            JoinPoint::Cell { addr, .. } => addr.sheet,
        }
    }

    pub fn describe(&self, wb: &Workbook) -> String {
        match self {
            JoinPoint::Sheet { sheet } => format!("sheet {}", wb.sheet(*sheet).name),
            JoinPoint::Range(rect) => format!("{}!{}", wb.sheet(rect.sheet).name, rect.name()),
            JoinPoint::Cell { addr, .. } => {
                format!("{}!{}", wb.sheet(addr.sheet).name, addr.coord.to_a1())
            }
        }
    }
}

/// Everything advice expressions can see at one join point: the snapshot,
/// its grid, and the bound variables.
#[derive(Debug, Clone)]
pub struct BindingEnv<'a> {
    wb: &'a Workbook,
    grid: &'a ValueGrid,
    sheet: usize,
    range: Option<(RangeKeyword, RangeRect)>,
    cell: Option<CellAddr>,
    /// Around-advice composition: content replacements earlier advice in the
    /// same aspect produced. `cell.value` reads through this; `cell.result`
    /// deliberately does not.
    overlay: Option<&'a BTreeMap<CellAddr, CellContent>>,
}

impl<'a> BindingEnv<'a> {
    pub fn sheet_index(&self) -> usize {
        self.sheet
    }

    pub fn cell_addr(&self) -> Option<CellAddr> {
        self.cell
    }

    pub fn range_binding(&self) -> Option<(RangeKeyword, RangeRect)> {
        self.range
    }

    pub fn with_overlay(&self, overlay: &'a BTreeMap<CellAddr, CellContent>) -> Self {
        let mut env = self.clone();
        env.overlay = Some(overlay);
        env
    }

    /// Bound variables, rendered for match listings.
    pub fn describe(&self) -> String {
        let mut parts = vec![format!("sheet={}", self.wb.sheet(self.sheet).name)];
        if let Some((kw, rect)) = &self.range {
            parts.push(format!("{}={}", kw.as_str(), rect.name()));
        }
        if let Some(addr) = self.cell {
            parts.push(format!("cell={}", addr.coord.to_a1()));
        }
        parts.join(" ")
    }

    fn content_at(&self, addr: CellAddr) -> Option<CellContent> {
        if let Some(overlay) = self.overlay {
            if let Some(content) = overlay.get(&addr) {
                return if content.is_empty() {
                    None
                } else {
                    Some(content.clone())
                };
            }
        }
        self.wb.sheet(addr.sheet).get(addr.coord).cloned()
    }
}

/// Enumerate the join points a pointcut selects, in deterministic order:
/// sheets ascending, rects in reading order, cells row-major within each.
pub fn enumerate_join_points<'a>(
    wb: &'a Workbook,
    grid: &'a ValueGrid,
    pc: &Pointcut,
) -> Vec<(JoinPoint, BindingEnv<'a>)> {
    let mut out = Vec::new();
    for sheet_idx in 0..wb.sheet_count() {
        if !sheet_matches(wb, sheet_idx, &pc.sheet) {
            continue;
        }
        let base = BindingEnv {
            wb,
            grid,
            sheet: sheet_idx,
            range: None,
            cell: None,
            overlay: None,
        };
        match (&pc.range, &pc.cell) {
            (None, None) => out.push((JoinPoint::Sheet { sheet: sheet_idx }, base)),
            (range_pat, Some(cell_pat)) => {
                let rects: Vec<Option<RangeRect>> = match range_pat {
                    None => vec![None],
                    Some(pat) => select_rects(wb, sheet_idx, pat)
                        .into_iter()
                        .map(Some)
                        .collect(),
                };
                for rect in rects {
                    for coord in select_cells(wb, sheet_idx, rect, cell_pat) {
                        let addr = CellAddr::new(sheet_idx, coord);
                        let mut env = base.clone();
                        env.range = rect.map(|r| (range_pat.as_ref().unwrap().keyword, r));
                        env.cell = Some(addr);
                        out.push((
                            JoinPoint::Cell {
                                addr,
                                enclosing: rect,
                            },
                            env,
                        ));
                    }
                }
            }
            (Some(pat), None) => {
                for rect in select_rects(wb, sheet_idx, pat) {
                    let mut env = base.clone();
                    env.range = Some((pat.keyword, rect));
                    out.push((JoinPoint::Range(rect), env));
                }
            }
        }
    }
    out
}

fn sheet_matches(wb: &Workbook, sheet_idx: usize, pat: &SheetPat) -> bool {
    match pat {
        SheetPat::Any => true,
        SheetPat::Name(cmp, want) => {
            let name = Value::Text(wb.sheet(sheet_idx).name.clone());
            compare_values(*cmp, &name, &Value::Text(want.clone())) == Value::Bool(true)
        }
        SheetPat::Number(cmp, want) => {
            // Sheet positions are 1-based.
            let pos = Value::Number(sheet_idx as f64 + 1.0);
            compare_values(*cmp, &pos, &Value::Number(*want as f64)) == Value::Bool(true)
        }
    }
}

fn keyword_kind(keyword: RangeKeyword) -> RangeKind {
    match keyword {
        RangeKeyword::Range => RangeKind::Range,
        RangeKeyword::Column => RangeKind::Column,
        RangeKeyword::Row => RangeKind::Row,
    }
}

/// Rects a range pattern selects on one sheet.
///
/// Wildcards enumerate the used region: each used column for `column{*}`,
/// each used row for `row{*}`, and the whole used region for `range{*}`.
/// An exact name yields exactly that rect. Ordered name comparison filters a
/// candidate universe — row/column slices for those keywords, every sub-rect
/// of the used region for `range` (small sheets only; this is quadratic in
/// the region area). Index selectors pick used rows/columns by 1-based
/// position.
fn select_rects(wb: &Workbook, sheet_idx: usize, pat: &crate::aspect::RangePat) -> Vec<RangeRect> {
    let kind = keyword_kind(pat.keyword);
    let region = wb.sheet(sheet_idx).used_region();

    let row_slices = |min: CellCoord, max: CellCoord| -> Vec<RangeRect> {
        (min.row..=max.row)
            .filter_map(|row| {
                RangeRect::new(
                    sheet_idx,
                    CellCoord { row, col: min.col },
                    CellCoord { row, col: max.col },
                    kind,
                )
                .ok()
            })
            .collect()
    };
    let col_slices = |min: CellCoord, max: CellCoord| -> Vec<RangeRect> {
        (min.col..=max.col)
            .filter_map(|col| {
                RangeRect::new(
                    sheet_idx,
                    CellCoord { row: min.row, col },
                    CellCoord { row: max.row, col },
                    kind,
                )
                .ok()
            })
            .collect()
    };

    match &pat.sel {
        RangeSel::Any => {
            let Some((min, max)) = region else {
                return Vec::new();
            };
            match pat.keyword {
                RangeKeyword::Column => col_slices(min, max),
                RangeKeyword::Row => row_slices(min, max),
                RangeKeyword::Range => RangeRect::new(sheet_idx, min, max, kind)
                    .into_iter()
                    .collect(),
            }
        }
        RangeSel::Name(CmpOp::Eq, text) => RangeRect::parse_name(sheet_idx, text, kind)
            .into_iter()
            .collect(),
        RangeSel::Name(cmp, text) => {
            let Some((min, max)) = region else {
                return Vec::new();
            };
            let universe = match pat.keyword {
                RangeKeyword::Column => col_slices(min, max),
                RangeKeyword::Row => row_slices(min, max),
                RangeKeyword::Range => sub_rects(sheet_idx, min, max),
            };
            universe
                .into_iter()
                .filter(|rect| {
                    compare_values(
                        *cmp,
                        &Value::Text(rect.name()),
                        &Value::Text(text.clone()),
                    ) == Value::Bool(true)
                })
                .collect()
        }
        RangeSel::Index { axis, cmp, n } => {
            let Some((min, max)) = region else {
                return Vec::new();
            };
            let slices = match axis {
                Axis::Row => row_slices(min, max),
                Axis::Col => col_slices(min, max),
            };
            slices
                .into_iter()
                .enumerate()
                .filter(|(i, _)| {
                    compare_values(
                        *cmp,
                        &Value::Number(*i as f64 + 1.0),
                        &Value::Number(*n as f64),
                    ) == Value::Bool(true)
                })
                .map(|(_, r)| r)
                .collect()
        }
    }
}

fn sub_rects(sheet_idx: usize, min: CellCoord, max: CellCoord) -> Vec<RangeRect> {
    let mut out = Vec::new();
    for r1 in min.row..=max.row {
        for c1 in min.col..=max.col {
            for r2 in r1..=max.row {
                for c2 in c1..=max.col {
                    out.push(RangeRect {
                        sheet: sheet_idx,
                        start: CellCoord { row: r1, col: c1 },
                        end: CellCoord { row: r2, col: c2 },
                        kind: RangeKind::Range,
                    });
                }
            }
        }
    }
    out
}

/// Cells a cell pattern selects, inside a rect or the whole used region.
/// Wildcards and ordered comparisons see only stored (non-empty) cells; an
/// exact `name` may address an empty cell.
fn select_cells(
    wb: &Workbook,
    sheet_idx: usize,
    rect: Option<RangeRect>,
    pat: &CellPat,
) -> Vec<CellCoord> {
    let sheet = wb.sheet(sheet_idx);
    let within = |coord: CellCoord| rect.is_none_or(|r| r.contains(coord));

    match pat {
        CellPat::Any => sheet
            .cells()
            .map(|(c, _)| c)
            .filter(|c| within(*c))
            .collect(),
        CellPat::Name(CmpOp::Eq, text) => match CellCoord::parse_a1(text) {
            Ok(coord) if within(coord) => vec![coord],
            _ => Vec::new(),
        },
        CellPat::Name(cmp, text) => sheet
            .cells()
            .map(|(c, _)| c)
            .filter(|c| within(*c))
            .filter(|c| {
                compare_values(*cmp, &Value::Text(c.to_a1()), &Value::Text(text.clone()))
                    == Value::Bool(true)
            })
            .collect(),
        CellPat::Match(pattern) => {
            let Ok(re) = regex::Regex::new(pattern) else {
                return Vec::new();
            };
            sheet
                .cells()
                .filter(|(c, content)| within(*c) && re.is_match(&content.value_text()))
                .map(|(c, _)| c)
                .collect()
        }
    }
}

const CELL_ATTRS: &[&str] = &["name", "value", "result", "row", "column"];

/// Resolve an attribute path like `cell.result` or `column[0].value`.
pub fn resolve_attribute(env: &BindingEnv, path: &crate::aspect::AttrPath) -> Result<Value, MatchError> {
    let text = path.to_text();
    let segs = &path.segments;
    let root = &segs[0];

    // Range variable bound by the pointcut's range pattern keyword.
    if let Some((keyword, rect)) = &env.range {
        if root.name == keyword.as_str() {
            return resolve_range_var(env, *rect, segs, &text);
        }
    }

    match root.name.as_str() {
        "sheet" => {
            if root.index.is_some() || segs.len() != 2 || segs[1].index.is_some() {
                return Err(MatchError::BadPath(text));
            }
            match segs[1].name.as_str() {
                "name" => Ok(Value::Text(env.wb.sheet(env.sheet).name.clone())),
                "number" => Ok(Value::Number(env.sheet as f64 + 1.0)),
                _ => Err(MatchError::BadPath(text)),
            }
        }
        "cell" => {
            let Some(addr) = env.cell else {
                return Err(MatchError::Unbound("cell".into()));
            };
            if root.index.is_some() {
                return Err(MatchError::BadPath(text));
            }
            if segs.len() == 2 && segs[1].index.is_none() {
                return cell_attr(env, addr, &segs[1].name, &text);
            }
            // Navigation through the cell's row/column rect:
            // cell.column[i].<attr>, cell.row[i].<attr>.
            if segs.len() == 3 && segs[1].index.is_some() && segs[2].index.is_none() {
                let rect = match segs[1].name.as_str() {
                    "column" => enclosing_column(env, addr),
                    "row" => enclosing_row(env, addr),
                    _ => return Err(MatchError::BadPath(text)),
                };
                let idx = segs[1].index.unwrap();
                let Some(coord) = rect.nth_cell(idx as usize) else {
                    return Err(MatchError::IndexOutOfBounds {
                        path: text,
                        index: idx,
                        rect: rect.name(),
                    });
                };
                return cell_attr(env, CellAddr::new(addr.sheet, coord), &segs[2].name, &text);
            }
            Err(MatchError::BadPath(text))
        }
        other => Err(MatchError::Unbound(other.to_string())),
    }
}

fn resolve_range_var(
    env: &BindingEnv,
    rect: RangeRect,
    segs: &[crate::aspect::PathSeg],
    text: &str,
) -> Result<Value, MatchError> {
    let root = &segs[0];
    match root.index {
        None => {
            if segs.len() == 2 && segs[1].name == "name" && segs[1].index.is_none() {
                Ok(Value::Text(rect.name()))
            } else {
                Err(MatchError::BadPath(text.to_string()))
            }
        }
        Some(idx) => {
            // range[i].<attr>: the i-th cell of the rect in reading order.
            let Some(coord) = rect.nth_cell(idx as usize) else {
                return Err(MatchError::IndexOutOfBounds {
                    path: text.to_string(),
                    index: idx,
                    rect: rect.name(),
                });
            };
            if segs.len() != 2 || segs[1].index.is_some() {
                return Err(MatchError::BadPath(text.to_string()));
            }
            cell_attr(env, CellAddr::new(rect.sheet, coord), &segs[1].name, text)
        }
    }
}

fn cell_attr(
    env: &BindingEnv,
    addr: CellAddr,
    attr: &str,
    path_text: &str,
) -> Result<Value, MatchError> {
    if !CELL_ATTRS.contains(&attr) {
        return Err(MatchError::BadPath(path_text.to_string()));
    }
    Ok(match attr {
        "name" => Value::Text(addr.coord.to_a1()),
        "value" => Value::Text(
            env.content_at(addr)
                .map(|c| c.value_text())
                .unwrap_or_default(),
        ),
        "result" => env.grid.scalar(addr),
        "row" => Value::Number(addr.coord.row as f64),
        "column" => Value::Number(addr.coord.col as f64),
        _ => unreachable!(),
    })
}

fn enclosing_column(env: &BindingEnv, addr: CellAddr) -> RangeRect {
    if let Some((RangeKeyword::Column, rect)) = env.range {
        if rect.contains(addr.coord) {
            return rect;
        }
    }
    synthesized_slice(env, addr, Axis::Col)
}

fn enclosing_row(env: &BindingEnv, addr: CellAddr) -> RangeRect {
    if let Some((RangeKeyword::Row, rect)) = env.range {
        if rect.contains(addr.coord) {
            return rect;
        }
    }
    synthesized_slice(env, addr, Axis::Row)
}

/// Without a matching range binding, a cell's row/column is the used-region
/// slice through the cell.
fn synthesized_slice(env: &BindingEnv, addr: CellAddr, axis: Axis) -> RangeRect {
    let (min, max) = env
        .wb
        .sheet(addr.sheet)
        .used_region()
        .unwrap_or((addr.coord, addr.coord));
    let (start, end, kind) = match axis {
        Axis::Col => (
            CellCoord {
                row: min.row.min(addr.coord.row),
                col: addr.coord.col,
            },
            CellCoord {
                row: max.row.max(addr.coord.row),
                col: addr.coord.col,
            },
            RangeKind::Column,
        ),
        Axis::Row => (
            CellCoord {
                row: addr.coord.row,
                col: min.col.min(addr.coord.col),
            },
            CellCoord {
                row: addr.coord.row,
                col: max.col.max(addr.coord.col),
            },
            RangeKind::Row,
        ),
    };
    RangeRect {
        sheet: addr.sheet,
        start,
        end,
        kind,
    }
}

/// Evaluate an advice expression to a value. Value-level errors flow as
/// error values; unbound variables and bad paths are hard errors.
pub fn eval_expr(env: &BindingEnv, expr: &AspectExpr) -> Result<Value, MatchError> {
    Ok(match expr {
        AspectExpr::Number(n) => Value::Number(*n),
        AspectExpr::Str(s) => Value::Text(s.clone()),
        AspectExpr::Bool(b) => Value::Bool(*b),
        AspectExpr::Path(path) => resolve_attribute(env, path)?,
        AspectExpr::Compare { op, lhs, rhs } => {
            let l = eval_expr(env, lhs)?;
            let r = eval_expr(env, rhs)?;
            compare_values(*op, &l, &r)
        }
        AspectExpr::And(lhs, rhs) | AspectExpr::Or(lhs, rhs) => {
            let l = eval_expr(env, lhs)?;
            let r = eval_expr(env, rhs)?;
            if let Value::Error(k) = l {
                return Ok(Value::Error(k));
            }
            if let Value::Error(k) = r {
                return Ok(Value::Error(k));
            }
            let lb = match truthy(&l) {
                Ok(b) => b,
                Err(k) => return Ok(Value::Error(k)),
            };
            let rb = match truthy(&r) {
                Ok(b) => b,
                Err(k) => return Ok(Value::Error(k)),
            };
            Value::Bool(if matches!(expr, AspectExpr::And(..)) {
                lb && rb
            } else {
                lb || rb
            })
        }
        AspectExpr::Not(operand) => {
            let v = eval_expr(env, operand)?;
            match truthy(&v) {
                Ok(b) => Value::Bool(!b),
                Err(k) => Value::Error(k),
            }
        }
        AspectExpr::Ternary {
            cond,
            then,
            otherwise,
        } => {
            let c = eval_expr(env, cond)?;
            // A condition that cannot act as a boolean (a text value, or an
            // error such as comparing text with a number) selects the else
            // branch, mirroring how guard errors make advice not apply.
            match truthy(&c) {
                Ok(true) => eval_expr(env, then)?,
                Ok(false) | Err(_) => eval_expr(env, otherwise)?,
            }
        }
    })
}

/// How a guard came out: errors make the advice silently not apply and are
/// counted in the weave report.
#[derive(Debug, Clone, PartialEq)]
pub enum GuardOutcome {
    Pass,
    Fail,
    Error(String),
}

pub fn eval_guard(env: &BindingEnv, guard: &AspectExpr) -> GuardOutcome {
    match eval_expr(env, guard) {
        Err(e) => GuardOutcome::Error(e.to_string()),
        Ok(Value::Bool(true)) => GuardOutcome::Pass,
        Ok(Value::Bool(false)) => GuardOutcome::Fail,
        Ok(Value::Error(k)) => GuardOutcome::Error(k.as_str().to_string()),
        Ok(other) => GuardOutcome::Error(format!(
            "guard evaluated to {} instead of a boolean",
            other.display_text()
        )),
    }
}

/// Evaluate a template to cell content: interpolations render into the
/// literal text, and the result is read like a workbook-file cell payload.
pub fn eval_template(env: &BindingEnv, template: &Template) -> Result<CellContent, MatchError> {
    let mut text = String::new();
    for seg in &template.segments {
        match seg {
            Segment::Literal(lit) => text.push_str(lit),
            Segment::Interp(expr) => match eval_expr(env, expr)? {
                Value::Error(k) => return Err(MatchError::InterpolationError(k)),
                Value::Number(n) => text.push_str(&format_number(n)),
                Value::Text(s) => text.push_str(&s),
                Value::Bool(b) => text.push_str(if b { "true" } else { "false" }),
            },
        }
    }
    Ok(CellContent::parse(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::parse_aspect;
    use crate::formula::evaluate_workbook;
    use crate::workbook::{load_workbook, parse_a1};

    const FIXTURE: &str = "\
sheet Grades
A1: Name
B1: Exam 1
C1: Exam 2
D1: Essay
E1: Final Mark
A2: Alice
B2: 5.2
C2: 4.5
D2: 5.0
E2: =AVERAGE(B2:D2)
";

    fn fixture() -> (Workbook, ValueGrid) {
        let wb = load_workbook(FIXTURE).unwrap();
        let grid = evaluate_workbook(&wb);
        (wb, grid)
    }

    fn pointcut(src: &str) -> Pointcut {
        let full = format!("aspect T\np: select {src}\naround p {{ x }}\nend");
        parse_aspect(&full).unwrap().pointcuts.remove(0)
    }

    #[test]
    fn empty_workbook_matches_nothing() {
        let wb = Workbook::new();
        let grid = evaluate_workbook(&wb);
        for pat in ["sheet{*}", "sheet{*}.cell{*}", "sheet{*}.column{*}.cell{*}"] {
            assert!(enumerate_join_points(&wb, &grid, &pointcut(pat)).is_empty());
        }
    }

    #[test]
    fn column_wildcard_enumerates_used_columns() {
        let (wb, grid) = fixture();
        let pc = pointcut("sheet{*}.column{*}");
        let points = enumerate_join_points(&wb, &grid, &pc);
        let names: Vec<String> = points
            .iter()
            .map(|(jp, _)| match jp {
                JoinPoint::Range(rect) => rect.name(),
                _ => panic!("expected range join points"),
            })
            .collect();
        assert_eq!(names, ["A1:A2", "B1:B2", "C1:C2", "D1:D2", "E1:E2"]);
    }

    #[test]
    fn column_cells_bind_both_variables() {
        let (wb, grid) = fixture();
        let pc = pointcut("sheet{*}.column{*}.cell{*}");
        let points = enumerate_join_points(&wb, &grid, &pc);
        // 10 stored cells, one join point each, grouped per column.
        assert_eq!(points.len(), 10);
        let first = &points[0];
        assert_eq!(first.1.describe(), "sheet=Grades column=A1:A2 cell=A1");
        let in_e = points
            .iter()
            .filter(|(jp, _)| matches!(jp, JoinPoint::Cell { addr, .. } if addr.coord.col == 4))
            .count();
        assert_eq!(in_e, 2);
    }

    #[test]
    fn sheet_number_selects_second_sheet() {
        let mut text = String::from("sheet One\nA1: 1\n\nsheet Two\nA1: 2\n\nsheet Three\nA1: 3\n");
        text.push('\n');
        let wb = load_workbook(&text).unwrap();
        let grid = evaluate_workbook(&wb);
        let points = enumerate_join_points(&wb, &grid, &pointcut("sheet{number=2}"));
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].0.describe(&wb), "sheet Two");
    }

    #[test]
    fn explicit_name_may_address_empty_cell() {
        let (wb, grid) = fixture();
        let points = enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.cell{name=\"X9\"}"));
        assert_eq!(points.len(), 1);
        let points = enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.cell{*}"));
        assert_eq!(points.len(), 10);
    }

    #[test]
    fn match_pattern_selects_formula_cells() {
        let (wb, grid) = fixture();
        let points =
            enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.cell{match=\"^=AVERAGE\"}"));
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].0.describe(&wb), "Grades!E2");
    }

    #[test]
    fn range_name_exact_and_row_index() {
        let (wb, grid) = fixture();
        let points =
            enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.range{name=\"A2:C3\"}"));
        assert_eq!(points.len(), 1);
        assert!(matches!(&points[0].0, JoinPoint::Range(r) if r.name() == "A2:C3"));

        let points =
            enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.range{row=1}.cell{*}"));
        let names: Vec<String> = points
            .iter()
            .map(|(jp, _)| match jp {
                JoinPoint::Cell { addr, .. } => addr.coord.to_a1(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(names, ["A1", "B1", "C1", "D1", "E1"]);
    }

    #[test]
    fn monotone_filtering() {
        let (wb, grid) = fixture();
        let all = enumerate_join_points(&wb, &grid, &pointcut("sheet{*}.cell{*}"));
        let named = enumerate_join_points(&wb, &grid, &pointcut("sheet{name=\"Grades\"}.cell{*}"));
        assert_eq!(all.len(), named.len());
        let none = enumerate_join_points(&wb, &grid, &pointcut("sheet{name=\"Other\"}.cell{*}"));
        assert!(none.is_empty());
    }

    fn env_for<'a>(
        wb: &'a Workbook,
        grid: &'a ValueGrid,
        pattern: &str,
        a1: &str,
    ) -> BindingEnv<'a> {
        let pc = pointcut(pattern);
        let coord = parse_a1(a1).unwrap();
        enumerate_join_points(wb, grid, &pc)
            .into_iter()
            .find(|(jp, _)| matches!(jp, JoinPoint::Cell { addr, .. } if addr.coord == coord))
            .unwrap_or_else(|| panic!("no join point at {a1}"))
            .1
    }

    fn path(text: &str) -> crate::aspect::AttrPath {
        let src = format!("aspect T\np: select sheet{{*}}.column{{*}}.cell{{*}}\naround p {{ #{{{text}}} }}\nend");
        let aspect = parse_aspect(&src).unwrap();
        let crate::aspect::AdviceBody::Template(tpl) = &aspect.advice[0].body else {
            panic!()
        };
        let Segment::Interp(AspectExpr::Path(p)) = &tpl.segments[0] else {
            panic!("not a path: {text}")
        };
        p.clone()
    }

    #[test]
    fn attribute_resolution_table() {
        let (wb, grid) = fixture();
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E2");
        assert_eq!(
            resolve_attribute(&env, &path("cell.name")).unwrap(),
            Value::Text("E2".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.value")).unwrap(),
            Value::Text("=AVERAGE(B2:D2)".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.result")).unwrap(),
            Value::Number((5.2 + 4.5 + 5.0) / 3.0)
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.row")).unwrap(),
            Value::Number(1.0)
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.column")).unwrap(),
            Value::Number(4.0)
        );
        assert_eq!(
            resolve_attribute(&env, &path("column[0].value")).unwrap(),
            Value::Text("Final Mark".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.column[0].value")).unwrap(),
            Value::Text("Final Mark".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("column.name")).unwrap(),
            Value::Text("E1:E2".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("sheet.name")).unwrap(),
            Value::Text("Grades".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("sheet.number")).unwrap(),
            Value::Number(1.0)
        );
    }

    #[test]
    fn cell_navigation_without_column_binding() {
        let (wb, grid) = fixture();
        let env = env_for(&wb, &grid, "sheet{*}.cell{*}", "E2");
        // No column pattern: the enclosing column is synthesized from the
        // used region.
        assert_eq!(
            resolve_attribute(&env, &path("cell.column[0].value")).unwrap(),
            Value::Text("Final Mark".into())
        );
        assert_eq!(
            resolve_attribute(&env, &path("cell.row[0].value")).unwrap(),
            Value::Text("Alice".into())
        );
        let err = resolve_attribute(&env, &path("column[0].value")).unwrap_err();
        assert!(matches!(err, MatchError::Unbound(v) if v == "column"));
    }

    #[test]
    fn resolution_errors() {
        let (wb, grid) = fixture();
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "B2");
        assert!(matches!(
            resolve_attribute(&env, &path("row.name")),
            Err(MatchError::Unbound(v)) if v == "row"
        ));
        assert!(matches!(
            resolve_attribute(&env, &path("column[9].value")),
            Err(MatchError::IndexOutOfBounds { .. })
        ));
        assert!(matches!(
            resolve_attribute(&env, &path("cell.banana")),
            Err(MatchError::BadPath(_))
        ));
    }

    fn guard_expr(src: &str) -> AspectExpr {
        let full = format!(
            "aspect T\np: select sheet{{*}}.column{{*}}.cell{{*}}\naround p {{ x }} when {{ {src} }}\nend"
        );
        parse_aspect(&full).unwrap().advice.remove(0).guard.unwrap()
    }

    #[test]
    fn guards_on_fixture() {
        let (wb, grid) = fixture();
        let final_mark = guard_expr("cell.column[0].value = \"Final Mark\"");
        let env_e2 = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E2");
        assert_eq!(eval_guard(&env_e2, &final_mark), GuardOutcome::Pass);
        let env_b2 = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "B2");
        assert_eq!(eval_guard(&env_b2, &final_mark), GuardOutcome::Fail);

        let header_only = guard_expr("cell.row <> 0");
        let env_e1 = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E1");
        assert_eq!(eval_guard(&env_e1, &header_only), GuardOutcome::Fail);
        assert_eq!(eval_guard(&env_e2, &header_only), GuardOutcome::Pass);

        // Ordered comparison of a text result errors, and the error demotes.
        let numeric = guard_expr("cell.result >= 4.8");
        let env_a1 = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "A1");
        assert!(matches!(eval_guard(&env_a1, &numeric), GuardOutcome::Error(_)));
    }

    fn template(src: &str) -> Template {
        let full =
            format!("aspect T\np: select sheet{{*}}.range{{name=\"C1:C20\"}}.cell{{*}}\nbelow p {{ {src} }}\nend");
        let aspect = parse_aspect(&full).unwrap();
        let crate::aspect::AdviceBody::Template(tpl) = aspect.advice.into_iter().next().unwrap().body
        else {
            panic!()
        };
        tpl
    }

    #[test]
    fn template_interpolation_renders_range_name() {
        let wb = load_workbook("sheet S\nC1: 1\nC20: 2\n").unwrap();
        let grid = evaluate_workbook(&wb);
        let pc = pointcut("sheet{*}.range{name=\"C1:C20\"}");
        let (_, env) = enumerate_join_points(&wb, &grid, &pc).remove(0);
        let content = eval_template(&env, &template("=SUM(#{range.name})")).unwrap();
        assert_eq!(content.value_text(), "=SUM(C1:C20)");
    }

    #[test]
    fn template_plain_text() {
        let (wb, grid) = fixture();
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E1");
        let content = eval_template(&env, &Template::literal("ECTS Mark")).unwrap();
        assert_eq!(content, CellContent::Text("ECTS Mark".into()));
    }

    #[test]
    fn borderline_ternary_template() {
        let src = "#{cell.result >= 4.8 && cell.result < 5 ? 5 : cell.value}";
        let (wb, grid) = fixture();
        // E2 averages 4.9ish: replaced by the constant 5.
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E2");
        let tpl = template(src);
        assert_eq!(eval_template(&env, &tpl).unwrap(), CellContent::Number(5.0));
        // B2 holds 5.2: outside the window, keeps its own content.
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "B2");
        assert_eq!(eval_template(&env, &tpl).unwrap(), CellContent::Number(5.2));
        // E1 holds text: the errored condition selects the else branch.
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E1");
        assert_eq!(
            eval_template(&env, &tpl).unwrap(),
            CellContent::Text("Final Mark".into())
        );
    }

    #[test]
    fn guard_evaluation_reads_overlay_for_value() {
        let (wb, grid) = fixture();
        let env = env_for(&wb, &grid, "sheet{*}.column{*}.cell{*}", "E2");
        let mut overlay = BTreeMap::new();
        overlay.insert(
            CellAddr::new(0, parse_a1("E2").unwrap()),
            CellContent::Number(5.0),
        );
        let env2 = env.with_overlay(&overlay);
        assert_eq!(
            resolve_attribute(&env2, &path("cell.value")).unwrap(),
            Value::Text("5".into())
        );
        // cell.result still reads the snapshot grid.
        assert_eq!(
            resolve_attribute(&env2, &path("cell.result")).unwrap(),
            Value::Number((5.2 + 4.5 + 5.0) / 3.0)
        );
    }
}
