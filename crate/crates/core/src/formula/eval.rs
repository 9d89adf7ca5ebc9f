//! Workbook evaluation: dependency extraction, cycle detection, and
//! topologically ordered formula computation.
//!
//! Every stored cell gets a [`Value`]. Literal cells map to their literal;
//! formula cells are computed with their dependencies first. Cells on a
//! reference cycle become `#CYCLE!`, and because every operation propagates
//! error operands, so does everything that reads them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::ast::{format_number, BinOp, ErrorKind, Expr, UnOp};
use crate::workbook::addr::{CellAddr, CellCoord};
use crate::workbook::{CellContent, Workbook};

/// A computed cell value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Value {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(ErrorKind),
}

impl Value {
    /// Wrap an arithmetic result, turning overflow into `#VALUE!`.
    pub fn number(n: f64) -> Value {
        if n.is_finite() {
            Value::Number(n)
        } else {
            Value::Error(ErrorKind::Value)
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Value::Error(_))
    }

    /// Display form: shortest round-trip numbers, bare text, `true`/`false`,
    /// `#...!` errors.
    pub fn display_text(&self) -> String {
        match self {
            Value::Number(n) => format_number(*n),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => if *b { "true" } else { "false" }.to_string(),
            Value::Error(kind) => kind.as_str().to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_text())
    }
}

/// Comparison operators shared by formulas and the aspect language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Compare two values. Numbers compare by value, texts lexicographically,
/// booleans by equality only. Mixed types are unequal under `=`/`<>` and a
/// `#VALUE!` error under ordered comparison. Error operands win, left first.
pub fn compare_values(op: CmpOp, lhs: &Value, rhs: &Value) -> Value {
    if let Value::Error(k) = lhs {
        return Value::Error(*k);
    }
    if let Value::Error(k) = rhs {
        return Value::Error(*k);
    }
    let ordering = match (lhs, rhs) {
        (Value::Number(a), Value::Number(b)) => a.partial_cmp(b),
        (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
        (Value::Bool(a), Value::Bool(b)) => match op {
            CmpOp::Eq => return Value::Bool(a == b),
            CmpOp::Ne => return Value::Bool(a != b),
            _ => None,
        },
        _ => match op {
            CmpOp::Eq => return Value::Bool(false),
            CmpOp::Ne => return Value::Bool(true),
            _ => None,
        },
    };
    match ordering {
        Some(ord) => Value::Bool(match op {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        }),
        None => Value::Error(ErrorKind::Value),
    }
}

/// Condition coercion: booleans as-is, nonzero numbers are true, anything
/// else is a `#VALUE!` error (error operands keep their kind).
pub fn truthy(v: &Value) -> Result<bool, ErrorKind> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Number(n) => Ok(*n != 0.0),
        Value::Error(k) => Err(*k),
        Value::Text(_) => Err(ErrorKind::Value),
    }
}

fn as_number(v: &Value) -> Result<f64, ErrorKind> {
    match v {
        Value::Number(n) => Ok(*n),
        Value::Error(k) => Err(*k),
        _ => Err(ErrorKind::Value),
    }
}

/// Evaluated values for every stored cell of a workbook snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValueGrid {
    values: BTreeMap<CellAddr, Value>,
}

impl ValueGrid {
    pub fn get(&self, addr: CellAddr) -> Option<&Value> {
        self.values.get(&addr)
    }

    /// Scalar read: absent (empty) cells read as the number zero.
    pub fn scalar(&self, addr: CellAddr) -> Value {
        self.values
            .get(&addr)
            .cloned()
            .unwrap_or(Value::Number(0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellAddr, &Value)> {
        self.values.iter().map(|(a, v)| (*a, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluate a whole workbook. Never fails: every problem becomes an error
/// value in the grid.
pub fn evaluate_workbook(wb: &Workbook) -> ValueGrid {
    let mut values: BTreeMap<CellAddr, Value> = BTreeMap::new();
    let mut formula_cells: Vec<(CellAddr, &Expr)> = Vec::new();

    for (sheet_idx, sheet) in wb.sheets().iter().enumerate() {
        for (coord, content) in sheet.cells() {
            let addr = CellAddr::new(sheet_idx, coord);
            match content {
                CellContent::Number(n) => {
                    values.insert(addr, Value::Number(*n));
                }
                CellContent::Text(s) => {
                    values.insert(addr, Value::Text(s.clone()));
                }
                CellContent::Bool(b) => {
                    values.insert(addr, Value::Bool(*b));
                }
                CellContent::Formula { ast, .. } => formula_cells.push((addr, ast)),
                CellContent::Empty => unreachable!("sheets never store empty cells"),
            }
        }
    }

    let index_of: HashMap<CellAddr, usize> = formula_cells
        .iter()
        .enumerate()
        .map(|(i, (addr, _))| (*addr, i))
        .collect();

    // Dependency edges formula -> referenced formula cells. Literal values
    // are already known so only formula-to-formula edges order evaluation.
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); formula_cells.len()];
    for (i, (addr, ast)) in formula_cells.iter().enumerate() {
        collect_refs(wb, addr.sheet, ast, &mut |target| {
            if let Some(&j) = index_of.get(&target) {
                deps[i].push(j);
            }
        });
    }

    // Tarjan pops strongly connected components dependencies-first, so
    // walking its output evaluates each formula after everything it reads.
    let sccs = tarjan(&deps);
    let ctx = EvalCtx { wb };
    for scc in sccs {
        let cyclic = scc.len() > 1 || deps[scc[0]].contains(&scc[0]);
        if cyclic {
            for &i in &scc {
                values.insert(formula_cells[i].0, Value::Error(ErrorKind::Cycle));
            }
        } else {
            let (addr, ast) = formula_cells[scc[0]];
            let value = ctx.eval(addr.sheet, ast, &values);
            values.insert(addr, value);
        }
    }

    ValueGrid { values }
}

/// Call `visit` with every stored cell the expression references, including
/// every stored cell inside referenced ranges.
fn collect_refs(wb: &Workbook, ctx_sheet: usize, expr: &Expr, visit: &mut dyn FnMut(CellAddr)) {
    match expr {
        Expr::CellRef { sheet, coord } => {
            if let Some(idx) = resolve_sheet(wb, ctx_sheet, sheet.as_deref()) {
                if wb.sheet(idx).get(*coord).is_some() {
                    visit(CellAddr::new(idx, *coord));
                }
            }
        }
        Expr::RangeRef { sheet, start, end } => {
            if let Some(idx) = resolve_sheet(wb, ctx_sheet, sheet.as_deref()) {
                for (coord, _) in stored_in_rect(wb, idx, *start, *end) {
                    visit(CellAddr::new(idx, coord));
                }
            }
        }
        Expr::Call { args, .. } => {
            for arg in args {
                collect_refs(wb, ctx_sheet, arg, visit);
            }
        }
        Expr::Binary { lhs, rhs, .. } => {
            collect_refs(wb, ctx_sheet, lhs, visit);
            collect_refs(wb, ctx_sheet, rhs, visit);
        }
        Expr::Unary { operand, .. } => collect_refs(wb, ctx_sheet, operand, visit),
        _ => {}
    }
}

fn resolve_sheet(wb: &Workbook, ctx_sheet: usize, name: Option<&str>) -> Option<usize> {
    match name {
        None => Some(ctx_sheet),
        Some(n) => wb.sheet_index(n),
    }
}

/// Stored cells inside a rect, in reading order.
fn stored_in_rect(
    wb: &Workbook,
    sheet: usize,
    start: CellCoord,
    end: CellCoord,
) -> Vec<(CellCoord, &CellContent)> {
    wb.sheet(sheet)
        .cells()
        .filter(|(c, _)| {
            c.row >= start.row && c.row <= end.row && c.col >= start.col && c.col <= end.col
        })
        .collect()
}

/// Iterative Tarjan SCC; components are emitted dependencies-first.
fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();

    // frame: (node, next child position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Either a plain value or the cells of a reference, for functions that
/// treat cell emptiness specially.
enum Operand {
    Scalar(Value),
    /// `None` entries are empty cells inside a referenced range.
    Cells(Vec<Option<Value>>),
}

struct EvalCtx<'a> {
    wb: &'a Workbook,
}

impl<'a> EvalCtx<'a> {
    fn eval(&self, ctx_sheet: usize, expr: &Expr, values: &BTreeMap<CellAddr, Value>) -> Value {
        match expr {
            Expr::Number(n) => Value::Number(*n),
            Expr::Text(s) => Value::Text(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Error(kind) => Value::Error(*kind),
            Expr::CellRef { sheet, coord } => {
                let Some(idx) = resolve_sheet(self.wb, ctx_sheet, sheet.as_deref()) else {
                    return Value::Error(ErrorKind::Ref);
                };
                if self.wb.sheet(idx).get(*coord).is_some() {
                    values
                        .get(&CellAddr::new(idx, *coord))
                        .cloned()
                        .unwrap_or(Value::Error(ErrorKind::Value))
                } else {
                    Value::Number(0.0)
                }
            }
            // A bare range is not a scalar.
            Expr::RangeRef { .. } => Value::Error(ErrorKind::Value),
            Expr::Call { name, args } => self.eval_call(ctx_sheet, name, args, values),
            Expr::Binary { op, lhs, rhs } => {
                let a = self.eval(ctx_sheet, lhs, values);
                let b = self.eval(ctx_sheet, rhs, values);
                eval_binary(*op, &a, &b)
            }
            Expr::Unary { op, operand } => {
                let v = self.eval(ctx_sheet, operand, values);
                match op {
                    UnOp::Neg => match as_number(&v) {
                        Ok(n) => Value::number(-n),
                        Err(k) => Value::Error(k),
                    },
                    UnOp::Not => match truthy(&v) {
                        Ok(b) => Value::Bool(!b),
                        Err(k) => Value::Error(k),
                    },
                }
            }
        }
    }

    fn eval_operand(
        &self,
        ctx_sheet: usize,
        expr: &Expr,
        values: &BTreeMap<CellAddr, Value>,
    ) -> Operand {
        match expr {
            Expr::CellRef { sheet, coord } => {
                let Some(idx) = resolve_sheet(self.wb, ctx_sheet, sheet.as_deref()) else {
                    return Operand::Scalar(Value::Error(ErrorKind::Ref));
                };
                if self.wb.sheet(idx).get(*coord).is_some() {
                    let v = values
                        .get(&CellAddr::new(idx, *coord))
                        .cloned()
                        .unwrap_or(Value::Error(ErrorKind::Value));
                    Operand::Cells(vec![Some(v)])
                } else {
                    Operand::Cells(vec![None])
                }
            }
            Expr::RangeRef { sheet, start, end } => {
                let Some(idx) = resolve_sheet(self.wb, ctx_sheet, sheet.as_deref()) else {
                    return Operand::Scalar(Value::Error(ErrorKind::Ref));
                };
                let cells = stored_in_rect(self.wb, idx, *start, *end)
                    .into_iter()
                    .map(|(coord, _)| {
                        Some(
                            values
                                .get(&CellAddr::new(idx, coord))
                                .cloned()
                                .unwrap_or(Value::Error(ErrorKind::Value)),
                        )
                    })
                    .collect();
                Operand::Cells(cells)
            }
            other => Operand::Scalar(self.eval(ctx_sheet, other, values)),
        }
    }

    fn eval_call(
        &self,
        ctx_sheet: usize,
        name: &str,
        args: &[Expr],
        values: &BTreeMap<CellAddr, Value>,
    ) -> Value {
        match name {
            "SUM" => {
                let mut total = 0.0f64;
                for arg in args {
                    match self.eval_operand(ctx_sheet, arg, values) {
                        Operand::Scalar(v) => match as_number(&v) {
                            Ok(n) => total += n,
                            Err(k) => return Value::Error(k),
                        },
                        Operand::Cells(cells) => {
                            for cell in cells.into_iter().flatten() {
                                match as_number(&cell) {
                                    Ok(n) => total += n,
                                    Err(k) => return Value::Error(k),
                                }
                            }
                        }
                    }
                }
                Value::number(total)
            }
            "AVERAGE" => {
                let mut total = 0.0f64;
                let mut count = 0u64;
                for arg in args {
                    match self.eval_operand(ctx_sheet, arg, values) {
                        Operand::Scalar(v) => match as_number(&v) {
                            Ok(n) => {
                                total += n;
                                count += 1;
                            }
                            Err(k) => return Value::Error(k),
                        },
                        Operand::Cells(cells) => {
                            // Mean of numeric cells: empty and non-numeric
                            // cells are skipped, error cells propagate.
                            for cell in cells.into_iter().flatten() {
                                match cell {
                                    Value::Number(n) => {
                                        total += n;
                                        count += 1;
                                    }
                                    Value::Error(k) => return Value::Error(k),
                                    _ => {}
                                }
                            }
                        }
                    }
                }
                if count == 0 {
                    Value::Error(ErrorKind::Div0)
                } else {
                    Value::number(total / count as f64)
                }
            }
            "IF" => {
                if args.len() != 3 {
                    return Value::Error(ErrorKind::Value);
                }
                let vals: Vec<Value> = args
                    .iter()
                    .map(|a| self.eval(ctx_sheet, a, values))
                    .collect();
                // Strict evaluation: errors in any operand win, left first.
                for v in &vals {
                    if let Value::Error(k) = v {
                        return Value::Error(*k);
                    }
                }
                match truthy(&vals[0]) {
                    Ok(true) => vals[1].clone(),
                    Ok(false) => vals[2].clone(),
                    Err(k) => Value::Error(k),
                }
            }
            "AND" | "OR" => {
                if args.is_empty() {
                    return Value::Error(ErrorKind::Value);
                }
                let vals: Vec<Value> = args
                    .iter()
                    .map(|a| self.eval(ctx_sheet, a, values))
                    .collect();
                for v in &vals {
                    if let Value::Error(k) = v {
                        return Value::Error(*k);
                    }
                }
                let mut acc = name == "AND";
                for v in &vals {
                    match truthy(v) {
                        Ok(b) => {
                            if name == "AND" {
                                acc = acc && b;
                            } else {
                                acc = acc || b;
                            }
                        }
                        Err(k) => return Value::Error(k),
                    }
                }
                Value::Bool(acc)
            }
            "NOT" => {
                if args.len() != 1 {
                    return Value::Error(ErrorKind::Value);
                }
                let v = self.eval(ctx_sheet, &args[0], values);
                match truthy(&v) {
                    Ok(b) => Value::Bool(!b),
                    Err(k) => Value::Error(k),
                }
            }
            _ => Value::Error(ErrorKind::Name),
        }
    }
}

fn eval_binary(op: BinOp, lhs: &Value, rhs: &Value) -> Value {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
            let a = match as_number(lhs) {
                Ok(n) => n,
                Err(k) => return Value::Error(k),
            };
            let b = match as_number(rhs) {
                Ok(n) => n,
                Err(k) => return Value::Error(k),
            };
            match op {
                BinOp::Add => Value::number(a + b),
                BinOp::Sub => Value::number(a - b),
                BinOp::Mul => Value::number(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Value::Error(ErrorKind::Div0)
                    } else {
                        Value::number(a / b)
                    }
                }
                _ => unreachable!(),
            }
        }
        BinOp::Concat => {
            if let Value::Error(k) = lhs {
                return Value::Error(*k);
            }
            if let Value::Error(k) = rhs {
                return Value::Error(*k);
            }
            Value::Text(format!("{}{}", lhs.display_text(), rhs.display_text()))
        }
        BinOp::Eq => compare_values(CmpOp::Eq, lhs, rhs),
        BinOp::Ne => compare_values(CmpOp::Ne, lhs, rhs),
        BinOp::Lt => compare_values(CmpOp::Lt, lhs, rhs),
        BinOp::Le => compare_values(CmpOp::Le, lhs, rhs),
        BinOp::Gt => compare_values(CmpOp::Gt, lhs, rhs),
        BinOp::Ge => compare_values(CmpOp::Ge, lhs, rhs),
        BinOp::And | BinOp::Or => {
            if let Value::Error(k) = lhs {
                return Value::Error(*k);
            }
            if let Value::Error(k) = rhs {
                return Value::Error(*k);
            }
            let a = match truthy(lhs) {
                Ok(b) => b,
                Err(k) => return Value::Error(k),
            };
            let b = match truthy(rhs) {
                Ok(b) => b,
                Err(k) => return Value::Error(k),
            };
            Value::Bool(if op == BinOp::And { a && b } else { a || b })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workbook::{load_workbook, parse_a1};

    fn grid_of(text: &str) -> (Workbook, ValueGrid) {
        let wb = load_workbook(text).unwrap();
        let grid = evaluate_workbook(&wb);
        (wb, grid)
    }

    fn at(grid: &ValueGrid, sheet: usize, a1: &str) -> Value {
        grid.scalar(CellAddr::new(sheet, parse_a1(a1).unwrap()))
    }

    #[test]
    fn literals_only() {
        let (_, grid) = grid_of("sheet S\nA1: 1\nB1: x\nC1: true\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Number(1.0));
        assert_eq!(at(&grid, 0, "B1"), Value::Text("x".into()));
        assert_eq!(at(&grid, 0, "C1"), Value::Bool(true));
    }

    #[test]
    fn average_of_student_row() {
        let (_, grid) = grid_of(
            "sheet S\nB2: 5.2\nC2: 4.5\nD2: 5.0\nE2: =AVERAGE(B2:D2)\n",
        );
        assert_eq!(at(&grid, 0, "E2"), Value::Number((5.2 + 4.5 + 5.0) / 3.0));
    }

    #[test]
    fn two_cell_cycle() {
        let (_, grid) = grid_of("sheet S\nA1: =B1\nB1: =A1\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Error(ErrorKind::Cycle));
        assert_eq!(at(&grid, 0, "B1"), Value::Error(ErrorKind::Cycle));
    }

    #[test]
    fn self_cycle_and_dependent() {
        let (_, grid) = grid_of("sheet S\nA1: =A1\nB1: =A1+1\nC1: =5\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Error(ErrorKind::Cycle));
        assert_eq!(at(&grid, 0, "B1"), Value::Error(ErrorKind::Cycle));
        assert_eq!(at(&grid, 0, "C1"), Value::Number(5.0));
    }

    #[test]
    fn cycle_through_range() {
        let (_, grid) = grid_of("sheet S\nA1: =SUM(B1:B2)\nB2: =A1\nB1: 1\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Error(ErrorKind::Cycle));
        assert_eq!(at(&grid, 0, "B2"), Value::Error(ErrorKind::Cycle));
        assert_eq!(at(&grid, 0, "B1"), Value::Number(1.0));
    }

    #[test]
    fn empty_cells_in_arithmetic_and_average() {
        let (_, grid) = grid_of("sheet S\nA1: =Z9+1\nB1: =AVERAGE(Y1:Y3)\nC1: 2\nD1: =AVERAGE(C1,Y1:Y3)\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Number(1.0));
        assert_eq!(at(&grid, 0, "B1"), Value::Error(ErrorKind::Div0));
        assert_eq!(at(&grid, 0, "D1"), Value::Number(2.0));
    }

    #[test]
    fn sum_rejects_text_cells() {
        let (_, grid) = grid_of("sheet S\nA1: label\nA2: 3\nB1: =SUM(A1:A2)\n");
        assert_eq!(at(&grid, 0, "B1"), Value::Error(ErrorKind::Value));
    }

    #[test]
    fn average_skips_text_cells() {
        let (_, grid) = grid_of("sheet S\nA1: label\nA2: 3\nA3: 5\nB1: =AVERAGE(A1:A3)\n");
        assert_eq!(at(&grid, 0, "B1"), Value::Number(4.0));
    }

    #[test]
    fn division_by_zero() {
        let (_, grid) = grid_of("sheet S\nA1: =1/0\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Error(ErrorKind::Div0));
    }

    #[test]
    fn unknown_function_is_name_error() {
        let (_, grid) = grid_of("sheet S\nA1: =FROBNICATE(1)\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Error(ErrorKind::Name));
    }

    #[test]
    fn comparisons_and_logic() {
        let (_, grid) = grid_of(
            "sheet S\nA1: =1<2\nA2: =\"a\"<\"b\"\nA3: =1=\"1\"\nA4: =1<\"1\"\nA5: =1<2 && 2<3\nA6: =NOT(FALSE)\nA7: =IF(4.9>=4.8,5,0)\n",
        );
        assert_eq!(at(&grid, 0, "A1"), Value::Bool(true));
        assert_eq!(at(&grid, 0, "A2"), Value::Bool(true));
        assert_eq!(at(&grid, 0, "A3"), Value::Bool(false));
        assert_eq!(at(&grid, 0, "A4"), Value::Error(ErrorKind::Value));
        assert_eq!(at(&grid, 0, "A5"), Value::Bool(true));
        assert_eq!(at(&grid, 0, "A6"), Value::Bool(true));
        assert_eq!(at(&grid, 0, "A7"), Value::Number(5.0));
    }

    #[test]
    fn error_propagates_left_to_right() {
        let (_, grid) = grid_of("sheet S\nA1: =1/0\nB1: =\"x\"+A1\nC1: =A1+\"x\"\n");
        // lhs text fails first in B1; in C1 the #DIV/0! from A1 wins.
        assert_eq!(at(&grid, 0, "B1"), Value::Error(ErrorKind::Value));
        assert_eq!(at(&grid, 0, "C1"), Value::Error(ErrorKind::Div0));
    }

    #[test]
    fn cross_sheet_reference() {
        let (_, grid) = grid_of("sheet One\nA1: 7\n\nsheet Two\nA1: =One!A1*2\nB1: =Nowhere!A1\n");
        assert_eq!(at(&grid, 1, "A1"), Value::Number(14.0));
        assert_eq!(at(&grid, 1, "B1"), Value::Error(ErrorKind::Ref));
    }

    #[test]
    fn concat_renders_values() {
        let (_, grid) = grid_of("sheet S\nA1: =1&\"x\"&TRUE\n");
        assert_eq!(at(&grid, 0, "A1"), Value::Text("1xtrue".into()));
    }

    #[test]
    fn storage_order_does_not_matter() {
        let a = grid_of("sheet S\nA1: =B1+1\nB1: =C1*2\nC1: 10\n").1;
        let b = grid_of("sheet S\nC1: 10\nB1: =C1*2\nA1: =B1+1\n").1;
        let av: Vec<(CellAddr, Value)> = a.iter().map(|(k, v)| (k, v.clone())).collect();
        let bv: Vec<(CellAddr, Value)> = b.iter().map(|(k, v)| (k, v.clone())).collect();
        assert_eq!(av, bv);
        assert_eq!(at(&a, 0, "A1"), Value::Number(21.0));
    }
}
