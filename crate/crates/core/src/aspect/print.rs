//! Canonical pretty-printer. `parse(print(a))` is structurally equal to `a`
//! for any parsed aspect: keyword synonyms normalize to `sheet`, `==` prints
//! as `=`, and template bodies keep their (trimmed) content verbatim.

use super::{
    Advice, AdviceBody, AspectDef, AspectExpr, Axis, CellPat, RangeKeyword, RangePat, RangeSel,
    Segment, SheetPat, Template,
};
use crate::formula::CmpOp;

pub fn print_aspect(aspect: &AspectDef) -> String {
    let mut out = String::new();
    out.push_str("aspect ");
    push_name(&mut out, &aspect.name);
    out.push('\n');
    for pc in &aspect.pointcuts {
        push_name(&mut out, &pc.name);
        out.push_str(": select ");
        push_sheet_pat(&mut out, &pc.sheet);
        if let Some(range) = &pc.range {
            out.push('.');
            push_range_pat(&mut out, range);
        }
        if let Some(cell) = &pc.cell {
            out.push('.');
            push_cell_pat(&mut out, cell);
        }
        out.push('\n');
    }
    for adv in &aspect.advice {
        push_advice(&mut out, adv);
    }
    out.push_str("end\n");
    out
}

fn is_bare_word(name: &str) -> bool {
    let mut chars = name.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !super::parse::is_reserved(name)
}

fn push_name(out: &mut String, name: &str) {
    if is_bare_word(name) {
        out.push_str(name);
    } else {
        push_string_lit(out, name);
    }
}

fn push_string_lit(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '#' => out.push_str("\\#"),
            _ => out.push(ch),
        }
    }
    out.push('"');
}

fn push_sheet_pat(out: &mut String, pat: &SheetPat) {
    out.push_str("sheet{");
    match pat {
        SheetPat::Any => out.push('*'),
        SheetPat::Name(cmp, s) => {
            out.push_str("name");
            out.push_str(cmp.symbol());
            push_string_lit(out, s);
        }
        SheetPat::Number(cmp, n) => {
            out.push_str("number");
            out.push_str(cmp.symbol());
            out.push_str(&n.to_string());
        }
    }
    out.push('}');
}

fn push_range_pat(out: &mut String, pat: &RangePat) {
    out.push_str(pat.keyword.as_str());
    out.push('{');
    match &pat.sel {
        RangeSel::Any => out.push('*'),
        RangeSel::Name(cmp, s) => {
            out.push_str("name");
            out.push_str(cmp.symbol());
            push_string_lit(out, s);
        }
        RangeSel::Index { axis, cmp, n } => {
            let implied = matches!(
                (pat.keyword, axis),
                (RangeKeyword::Row, Axis::Row) | (RangeKeyword::Column, Axis::Col)
            );
            if implied {
                // `row{2}` / `row{>=2}`
                if *cmp != CmpOp::Eq {
                    out.push_str(cmp.symbol());
                }
            } else {
                out.push_str(match axis {
                    Axis::Row => "row",
                    Axis::Col => "column",
                });
                out.push_str(cmp.symbol());
            }
            out.push_str(&n.to_string());
        }
    }
    out.push('}');
}

fn push_cell_pat(out: &mut String, pat: &CellPat) {
    out.push_str("cell{");
    match pat {
        CellPat::Any => out.push('*'),
        CellPat::Name(cmp, s) => {
            out.push_str("name");
            out.push_str(cmp.symbol());
            push_string_lit(out, s);
        }
        CellPat::Match(re) => {
            out.push_str("match=");
            push_string_lit(out, re);
        }
    }
    out.push('}');
}

fn push_advice(out: &mut String, adv: &Advice) {
    if let Some(name) = &adv.name {
        push_name(out, name);
        out.push_str(": ");
    }
    out.push_str(adv.position.as_str());
    out.push(' ');
    push_name(out, &adv.pointcut);
    out.push_str(" {");
    match &adv.body {
        AdviceBody::Template(tpl) => {
            out.push(' ');
            push_template_raw(out, tpl);
            out.push(' ');
        }
        AdviceBody::CellList(cells) => {
            out.push(' ');
            for (i, (coord, tpl)) in cells.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                out.push_str(&coord.to_a1());
                out.push('=');
                out.push('"');
                push_template_in_string(out, tpl);
                out.push('"');
            }
            out.push(' ');
        }
        AdviceBody::CopySheet(name) => {
            out.push_str(" copy ");
            out.push_str(name);
            out.push(' ');
        }
    }
    out.push('}');
    if let Some(guard) = &adv.guard {
        out.push_str(" when { ");
        push_expr(out, guard, 0);
        out.push_str(" }");
    }
    out.push('\n');
}

fn push_template_raw(out: &mut String, tpl: &Template) {
    for seg in &tpl.segments {
        match seg {
            Segment::Literal(text) => out.push_str(text),
            Segment::Interp(expr) => {
                out.push_str("#{");
                push_expr(out, expr, 0);
                out.push('}');
            }
        }
    }
}

/// Inside a quoted cell-list string every segment is escaped, so the parser
/// decodes back to exactly these segments.
fn push_template_in_string(out: &mut String, tpl: &Template) {
    for seg in &tpl.segments {
        match seg {
            Segment::Literal(text) => {
                for ch in text.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '#' => out.push_str("\\#"),
                        _ => out.push(ch),
                    }
                }
            }
            Segment::Interp(expr) => {
                out.push_str("#{");
                let mut plain = String::new();
                push_expr(&mut plain, expr, 0);
                for ch in plain.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '#' => out.push_str("\\#"),
                        _ => out.push(ch),
                    }
                }
                out.push('}');
            }
        }
    }
}

// Binding strength: ternary 0, || 1, && 2, ! 3, comparison 4, atoms 5.
fn expr_prec(expr: &AspectExpr) -> u8 {
    match expr {
        AspectExpr::Ternary { .. } => 0,
        AspectExpr::Or(..) => 1,
        AspectExpr::And(..) => 2,
        AspectExpr::Not(..) => 3,
        AspectExpr::Compare { .. } => 4,
        _ => 5,
    }
}

fn push_expr(out: &mut String, expr: &AspectExpr, min_prec: u8) {
    let prec = expr_prec(expr);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match expr {
        AspectExpr::Number(n) => out.push_str(&crate::formula::format_number(*n)),
        AspectExpr::Str(s) => push_string_lit(out, s),
        AspectExpr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        AspectExpr::Path(path) => out.push_str(&path.to_text()),
        AspectExpr::Compare { op, lhs, rhs } => {
            push_expr(out, lhs, 5);
            out.push_str(op.symbol());
            push_expr(out, rhs, 5);
        }
        AspectExpr::And(lhs, rhs) => {
            push_expr(out, lhs, 2);
            out.push_str("&&");
            push_expr(out, rhs, 3);
        }
        AspectExpr::Or(lhs, rhs) => {
            push_expr(out, lhs, 1);
            out.push_str("||");
            push_expr(out, rhs, 2);
        }
        AspectExpr::Not(operand) => {
            out.push('!');
            push_expr(out, operand, 3);
        }
        AspectExpr::Ternary {
            cond,
            then,
            otherwise,
        } => {
            push_expr(out, cond, 1);
            out.push('?');
            push_expr(out, then, 0);
            out.push(':');
            push_expr(out, otherwise, 0);
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_aspect;
    use super::*;

    fn fixpoint(src: &str) {
        let once = parse_aspect(src).unwrap();
        let printed = print_aspect(&once);
        let again = parse_aspect(&printed).unwrap_or_else(|e| {
            panic!("canonical text failed to reparse: {e}\n---\n{printed}")
        });
        assert_eq!(once, again, "print is not a fixpoint:\n{printed}");
        // And printing is idempotent from there.
        assert_eq!(printed, print_aspect(&again));
    }

    #[test]
    fn borderline_aspect_roundtrips() {
        fixpoint(
            r#"aspect BorderlineCase
finalmark : select sheet{*}.column{*}.cell{*}
around finalmark {
    #{cell.result >= 4.8 && cell.result < 5 ? 5 : cell.value}
  } when {
    cell.column[0].value = "Final Mark"
  }
end
"#,
        );
    }

    #[test]
    fn worksheet_prints_as_sheet() {
        let a = parse_aspect(
            "aspect A\np: select worksheet{number=2}\naround p { copy Sheet1 }\nend",
        )
        .unwrap();
        let printed = print_aspect(&a);
        assert!(printed.contains("sheet{number=2}"), "{printed}");
        assert!(!printed.contains("worksheet"), "{printed}");
        fixpoint(&printed);
    }

    #[test]
    fn minimal_around_layout_is_deterministic() {
        let a = parse_aspect("aspect A\np: select sheet{*}.cell{*}\naround p { x }\nend").unwrap();
        assert_eq!(
            print_aspect(&a),
            "aspect A\np: select sheet{*}.cell{*}\naround p { x }\nend\n"
        );
    }

    #[test]
    fn pattern_forms_roundtrip() {
        fixpoint("aspect A\np: select sheet{name<>\"S\"}.range{name=\"A2:C3\"}.cell{match=\"^=AVERAGE\"}\nq: select sheet{*}.row{2}\nr: select sheet{*}.range{row>=1}\nleft p { v }\nend");
    }

    #[test]
    fn expression_parens_roundtrip() {
        fixpoint(
            "aspect A\np: select sheet{*}.cell{*}\naround p { #{(cell.row = 0 || cell.row = 1) && !(cell.column[0].value = \"x\") ? \"yes\" : cell.value} }\nend",
        );
    }

    #[test]
    fn cell_list_escapes_roundtrip() {
        fixpoint(
            "aspect A\np: select sheet{*}\nbefore p { A1=\"plain\"; B2=\"quote \\\" and \\# here\"; C3=\"=SUM(#{sheet.number})\" }\nend",
        );
    }

    #[test]
    fn named_advice_roundtrip() {
        fixpoint("aspect A\np: select sheet{*}.cell{*}\nmyfix: around p { 0 } when { cell.row = 0 }\nend");
    }
}
