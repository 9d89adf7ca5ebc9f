//! Reference rewriting, used by structural edits to keep formulas pointing
//! at the content they pointed at before cells moved.

use super::ast::{ErrorKind, Expr};
use crate::workbook::addr::CellCoord;

/// Map every cell and range-endpoint reference through `map`. Unqualified
/// references belong to `ctx_sheet`; named references resolve through
/// `sheet_names` (unknown names are left alone). A range whose mapped
/// endpoints no longer form a rectangle collapses to a `#REF!` literal.
pub fn rewrite_references(
    expr: &Expr,
    ctx_sheet: usize,
    sheet_names: &[String],
    map: &dyn Fn(usize, CellCoord) -> CellCoord,
) -> Expr {
    match expr {
        Expr::CellRef { sheet, coord } => {
            let idx = match sheet {
                None => Some(ctx_sheet),
                Some(name) => sheet_names.iter().position(|n| n == name),
            };
            match idx {
                Some(idx) => Expr::CellRef {
                    sheet: sheet.clone(),
                    coord: map(idx, *coord),
                },
                None => expr.clone(),
            }
        }
        Expr::RangeRef { sheet, start, end } => {
            let idx = match sheet {
                None => Some(ctx_sheet),
                Some(name) => sheet_names.iter().position(|n| n == name),
            };
            match idx {
                Some(idx) => {
                    let ns = map(idx, *start);
                    let ne = map(idx, *end);
                    if ns.row > ne.row || ns.col > ne.col {
                        Expr::Error(ErrorKind::Ref)
                    } else {
                        Expr::RangeRef {
                            sheet: sheet.clone(),
                            start: ns,
                            end: ne,
                        }
                    }
                }
                None => expr.clone(),
            }
        }
        Expr::Call { name, args } => Expr::Call {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| rewrite_references(a, ctx_sheet, sheet_names, map))
                .collect(),
        },
        Expr::Binary { op, lhs, rhs } => Expr::Binary {
            op: *op,
            lhs: Box::new(rewrite_references(lhs, ctx_sheet, sheet_names, map)),
            rhs: Box::new(rewrite_references(rhs, ctx_sheet, sheet_names, map)),
        },
        Expr::Unary { op, operand } => Expr::Unary {
            op: *op,
            operand: Box::new(rewrite_references(operand, ctx_sheet, sheet_names, map)),
        },
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::ast::print_formula;
    use super::super::parse::parse_formula;
    use super::*;
    use crate::workbook::parse_a1;

    fn rewrite(text: &str, map: impl Fn(usize, CellCoord) -> CellCoord) -> String {
        let ast = parse_formula(text).unwrap();
        let names = vec!["S".to_string()];
        print_formula(&rewrite_references(&ast, 0, &names, &map))
    }

    #[test]
    fn identity_map_is_identity() {
        let src = "=AVERAGE(B2:D2)+E2*2";
        assert_eq!(rewrite(src, |_, c| c), src);
    }

    #[test]
    fn maps_single_cell() {
        let e2 = parse_a1("E2").unwrap();
        let f2 = parse_a1("F2").unwrap();
        assert_eq!(
            rewrite("=E2*2", |_, c| if c == e2 { f2 } else { c }),
            "=F2*2"
        );
    }

    #[test]
    fn shifts_whole_range() {
        // Everything in row 2 from column B rightward moves one column.
        assert_eq!(
            rewrite("=AVERAGE(B2:D2)", |_, c| {
                if c.row == 1 && c.col >= 1 {
                    CellCoord::new(c.col + 1, c.row)
                } else {
                    c
                }
            }),
            "=AVERAGE(C2:E2)"
        );
    }

    #[test]
    fn non_rectangular_result_becomes_ref_error() {
        // Only the top endpoint of a one-column range moves right.
        let c1 = parse_a1("C1").unwrap();
        let d1 = parse_a1("D1").unwrap();
        assert_eq!(
            rewrite("=SUM(C1:C20)", |_, c| if c == c1 { d1 } else { c }),
            "=SUM(#REF!)"
        );
    }

    #[test]
    fn unknown_sheet_left_alone() {
        assert_eq!(
            rewrite("=Mystery!A1", |_, c| CellCoord::new(c.col + 1, c.row)),
            "=Mystery!A1"
        );
    }
}
