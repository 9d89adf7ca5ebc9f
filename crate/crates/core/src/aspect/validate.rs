//! Static checks on parsed aspects: advice/join-point compatibility, body
//! forms, pattern well-formedness, and variable binding in expressions.

use std::fmt;

use super::{
    AdviceBody, AspectDef, AspectExpr, Axis, CellPat, Pointcut, Position, RangeKeyword, RangeSel,
    Segment, TargetKind, Template,
};
use crate::workbook::addr::{CellCoord, RangeKind, RangeRect};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Check an aspect and return every problem found. An empty list means the
/// aspect is safe to weave.
pub fn validate(aspect: &AspectDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for pc in &aspect.pointcuts {
        check_pointcut(pc, &mut out);
    }

    for (ordinal, adv) in aspect.advice.iter().enumerate() {
        let label = adv
            .name
            .clone()
            .unwrap_or_else(|| format!("advice #{}", ordinal + 1));
        let Some(pc) = aspect.pointcut(&adv.pointcut) else {
            out.push(Diagnostic {
                line: adv.line,
                message: format!("{label} references unknown pointcut {:?}", adv.pointcut),
            });
            continue;
        };
        let target = pc.target_kind();

        match adv.position {
            Position::Before | Position::After => {
                if target != TargetKind::Sheet {
                    out.push(Diagnostic {
                        line: adv.line,
                        message: format!(
                            "{label}: before/after apply only to worksheets; pointcut {:?} selects {}",
                            pc.name,
                            target_name(target)
                        ),
                    });
                }
            }
            Position::Left | Position::Above | Position::Right | Position::Below => {
                if target == TargetKind::Sheet {
                    out.push(Diagnostic {
                        line: adv.line,
                        message: format!(
                            "{label}: left/above/right/below apply to ranges and cells, not worksheets"
                        ),
                    });
                }
            }
            Position::Around => {}
        }

        match (&adv.body, target) {
            (AdviceBody::CellList(_), TargetKind::Cell) => out.push(Diagnostic {
                line: adv.line,
                message: format!("{label}: cell advice takes a single template body, not a cell list"),
            }),
            (AdviceBody::CopySheet(_), t) if t != TargetKind::Sheet => out.push(Diagnostic {
                line: adv.line,
                message: format!("{label}: 'copy' bodies apply only to worksheet pointcuts"),
            }),
            (AdviceBody::Template(_), TargetKind::Sheet) => out.push(Diagnostic {
                line: adv.line,
                message: format!(
                    "{label}: worksheet advice needs a cell list or 'copy' body, not a template"
                ),
            }),
            _ => {}
        }

        let bound = bound_vars(pc);
        match &adv.body {
            AdviceBody::Template(tpl) => {
                check_template(tpl, &bound, adv.line, &label, &mut out)
            }
            AdviceBody::CellList(cells) => {
                for (_, tpl) in cells {
                    check_template(tpl, &bound, adv.line, &label, &mut out);
                }
            }
            AdviceBody::CopySheet(_) => {}
        }
        if let Some(guard) = &adv.guard {
            check_expr(guard, &bound, adv.line, &label, &mut out);
        }
    }

    out
}

fn target_name(kind: TargetKind) -> &'static str {
    match kind {
        TargetKind::Sheet => "worksheets",
        TargetKind::Range => "ranges",
        TargetKind::Cell => "cells",
    }
}

fn check_pointcut(pc: &Pointcut, out: &mut Vec<Diagnostic>) {
    if let Some(range) = &pc.range {
        match &range.sel {
            RangeSel::Name(_, text) => {
                let kind = match range.keyword {
                    RangeKeyword::Range => RangeKind::Range,
                    RangeKeyword::Column => RangeKind::Column,
                    RangeKeyword::Row => RangeKind::Row,
                };
                if let Err(e) = RangeRect::parse_name(0, text, kind) {
                    out.push(Diagnostic {
                        line: pc.line,
                        message: format!(
                            "pointcut {:?}: {} pattern name {:?} is not usable: {e}",
                            pc.name,
                            range.keyword.as_str(),
                            text
                        ),
                    });
                }
            }
            RangeSel::Index { axis, .. } => {
                let mismatch = matches!(
                    (range.keyword, axis),
                    (RangeKeyword::Row, Axis::Col) | (RangeKeyword::Column, Axis::Row)
                );
                if mismatch {
                    out.push(Diagnostic {
                        line: pc.line,
                        message: format!(
                            "pointcut {:?}: index axis does not match the {} keyword",
                            pc.name,
                            range.keyword.as_str()
                        ),
                    });
                }
            }
            RangeSel::Any => {}
        }
    }
    if let Some(CellPat::Name(_, text)) = &pc.cell {
        if let Err(e) = CellCoord::parse_a1(text) {
            out.push(Diagnostic {
                line: pc.line,
                message: format!("pointcut {:?}: cell name pattern: {e}", pc.name),
            });
        }
    }
    if let Some(CellPat::Match(re)) = &pc.cell {
        if let Err(e) = regex::Regex::new(re) {
            out.push(Diagnostic {
                line: pc.line,
                message: format!("pointcut {:?}: bad match pattern: {e}", pc.name),
            });
        }
    }
}

/// Variables an advice expression may mention, given its pointcut.
fn bound_vars(pc: &Pointcut) -> Vec<&'static str> {
    let mut vars = vec!["sheet"];
    if let Some(range) = &pc.range {
        vars.push(range.keyword.as_str());
    }
    if pc.cell.is_some() {
        vars.push("cell");
    }
    vars
}

fn check_template(
    tpl: &Template,
    bound: &[&str],
    line: usize,
    label: &str,
    out: &mut Vec<Diagnostic>,
) {
    for seg in &tpl.segments {
        if let Segment::Interp(expr) = seg {
            check_expr(expr, bound, line, label, out);
        }
    }
}

fn check_expr(
    expr: &AspectExpr,
    bound: &[&str],
    line: usize,
    label: &str,
    out: &mut Vec<Diagnostic>,
) {
    match expr {
        AspectExpr::Path(path) => {
            let root = &path.root().name;
            if !bound.contains(&root.as_str()) {
                out.push(Diagnostic {
                    line,
                    message: format!(
                        "{label}: variable {root:?} is not bound by the pointcut (bound here: {})",
                        bound.join(", ")
                    ),
                });
            }
        }
        AspectExpr::Compare { lhs, rhs, .. } => {
            check_expr(lhs, bound, line, label, out);
            check_expr(rhs, bound, line, label, out);
        }
        AspectExpr::And(l, r) | AspectExpr::Or(l, r) => {
            check_expr(l, bound, line, label, out);
            check_expr(r, bound, line, label, out);
        }
        AspectExpr::Not(e) => check_expr(e, bound, line, label, out),
        AspectExpr::Ternary {
            cond,
            then,
            otherwise,
        } => {
            check_expr(cond, bound, line, label, out);
            check_expr(then, bound, line, label, out);
            check_expr(otherwise, bound, line, label, out);
        }
        AspectExpr::Number(_) | AspectExpr::Str(_) | AspectExpr::Bool(_) => {}
    }
}
