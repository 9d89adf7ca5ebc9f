//! Invariants that are about not falling over: parsers never panic and
//! always report positions, error values poison exactly their dependents,
//! and woven content never re-triggers the aspect that made it.

use proptest::prelude::*;

use sheetweave::aspect::parse_aspect;
use sheetweave::formula::{evaluate_workbook, parse_formula, Value};
use sheetweave::weaver::weave;
use sheetweave::workbook::{load_workbook, parse_a1, CellAddr, CellContent};

proptest! {
    #[test]
    fn aspect_parser_never_panics(input in "\\PC{0,120}") {
        let _ = parse_aspect(&input);
    }

    #[test]
    fn formula_parser_never_panics(input in "=?\\PC{0,80}") {
        let _ = parse_formula(&input);
    }

    #[test]
    fn workbook_loader_never_panics(input in "\\PC{0,200}") {
        let _ = load_workbook(&input);
    }

    #[test]
    fn aspect_errors_carry_positions(input in "aspect [a-z]{1,5}\n[a-z{}*.: ]{0,40}") {
        if let Err(e) = parse_aspect(&input) {
            prop_assert!(e.line >= 1);
            prop_assert!(e.col >= 1);
        }
    }
}

/// Poisoning one input cell with an error turns exactly its transitive
/// dependents into errors and leaves everything else byte-identical.
#[test]
fn error_poisoning_is_exact() {
    let clean = load_workbook(
        "sheet S\n\
         A1: 10\n\
         B1: 2\n\
         C1: =A1+B1\n\
         D1: =C1*2\n\
         E1: =SUM(A1:B1)\n\
         F1: =B1-1\n\
         G1: =IF(F1>0,1,2)\n\
         H1: hello\n",
    )
    .unwrap();
    let mut poisoned = clean.clone();
    poisoned
        .sheet_mut(0)
        .set(parse_a1("A1").unwrap(), CellContent::parse("=1/0").unwrap());

    let before = evaluate_workbook(&clean);
    let after = evaluate_workbook(&poisoned);
    let value = |grid: &sheetweave::formula::ValueGrid, a1: &str| {
        grid.scalar(CellAddr::new(0, parse_a1(a1).unwrap()))
    };

    // A1 and everything reading it (directly or through C1/E1) is an error.
    for a1 in ["A1", "C1", "D1", "E1"] {
        assert!(value(&after, a1).is_error(), "{a1} should be poisoned");
    }
    // Cells that never read A1 keep their exact values.
    for a1 in ["B1", "F1", "G1", "H1"] {
        assert_eq!(value(&before, a1), value(&after, a1), "{a1} must be untouched");
    }
}

/// Snapshot semantics: cells an aspect inserts are not matched by that same
/// aspect, even when they would satisfy its own pointcut.
#[test]
fn woven_content_does_not_self_trigger() {
    let wb = load_workbook("sheet S\nA1: xray\nB1: other\nC1: xenon\n").unwrap();
    let aspect = parse_aspect(
        "aspect Echo\nxs: select sheet{*}.cell{match=\"^x\"}\nright xs { xcopy }\nend",
    )
    .unwrap();
    let (out, report) = weave(&wb, &[aspect]).unwrap();
    // Two snapshot matches produced exactly two inserted cells; the inserted
    // "xcopy" cells match the pattern but were never woven against.
    assert_eq!(report.aspects[0].advice[0].matches, 2);
    assert_eq!(report.aspects[0].advice[0].applied, 2);
    assert_eq!(out.sheet(0).cell_count(), 5);
    let texts: Vec<String> = out.sheet(0).cells().map(|(_, c)| c.value_text()).collect();
    assert_eq!(texts, ["xray", "xcopy", "other", "xenon", "xcopy"]);

    // Weaving the output again doubles the copies: growth is per weave call,
    // never within one.
    let aspect = parse_aspect(
        "aspect Echo\nxs: select sheet{*}.cell{match=\"^x\"}\nright xs { xcopy }\nend",
    )
    .unwrap();
    let (again, _) = weave(&out, &[aspect]).unwrap();
    assert_eq!(again.sheet(0).cell_count(), 9);
}

/// The evaluated grid never changes just because evaluation ran twice, and
/// values are plain data (grid equality is value equality).
#[test]
fn evaluation_is_stable() {
    let wb = load_workbook("sheet S\nA1: 1\nB1: =A1+1\nC1: =SUM(A1:B1)\n").unwrap();
    let first = evaluate_workbook(&wb);
    let second = evaluate_workbook(&wb);
    assert_eq!(first, second);
    assert_eq!(
        first.scalar(CellAddr::new(0, parse_a1("C1").unwrap())),
        Value::Number(3.0)
    );
}
