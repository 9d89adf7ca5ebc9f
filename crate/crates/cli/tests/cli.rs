//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn scratch_dir() -> PathBuf {
    static NEXT: AtomicU32 = AtomicU32::new(0);
    let dir = std::env::temp_dir().join(format!(
        "sheetweave-cli-{}-{}",
        std::process::id(),
        NEXT.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn sheetweave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sheetweave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn weave_adjusts_marks_and_adds_ects_column() {
    let dir = scratch_dir();
    let out_path = dir.join("woven.wbk");
    let output = sheetweave(&[
        "weave",
        fixture("grading.wbk").to_str().unwrap(),
        fixture("borderline.aspect").to_str().unwrap(),
        fixture("add_ects.aspect").to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
        "--diff",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let woven = fs::read_to_string(&out_path).unwrap();
    assert!(woven.contains("E3: 5\n"), "woven file:\n{woven}");
    assert!(woven.contains("F1: ECTS Mark"));
    assert!(woven.contains("F3: =IF(E3<=10&&E3>=9.5"));

    let text = stdout(&output);
    assert!(text.contains("aspect BorderlineCase"), "{text}");
    assert!(text.contains("~ Grades!E3: =AVERAGE(B3:D3) -> 5"), "{text}");
    assert!(text.contains("+ Grades!F1: ECTS Mark"), "{text}");
}

#[test]
fn weave_without_aspects_is_usage_error() {
    let dir = scratch_dir();
    let output = sheetweave(&[
        "weave",
        fixture("grading.wbk").to_str().unwrap(),
        "-o",
        dir.join("out.wbk").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
}

#[test]
fn weave_reports_guard_errors_but_succeeds() {
    let dir = scratch_dir();
    let aspect = dir.join("numeric_guard.aspect");
    fs::write(
        &aspect,
        "aspect NumericOnly\nall: select sheet{*}.cell{*}\naround all { 0 } when { cell.result >= 4.8 }\nend\n",
    )
    .unwrap();
    let output = sheetweave(&[
        "weave",
        fixture("grading.wbk").to_str().unwrap(),
        aspect.to_str().unwrap(),
        "-o",
        dir.join("out.wbk").to_str().unwrap(),
        "--report-format",
        "json",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    // Text headers like "Name" hit the ordered comparison and error out of
    // the guard; the weave still succeeds and counts them.
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let guard_errors = json["aspects"][0]["advice"][0]["guard_errors"]
        .as_u64()
        .unwrap();
    assert!(guard_errors > 0, "{text}");
}

#[test]
fn eval_prints_aligned_values() {
    let dir = scratch_dir();
    let wbk = dir.join("one.wbk");
    fs::write(
        &wbk,
        "sheet S\nB2: 4.9\nC2: 4.9\nD2: 4.9\nE2: =AVERAGE(B2:D2)\n",
    )
    .unwrap();
    let output = sheetweave(&["eval", wbk.to_str().unwrap()]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("sheet S"), "{text}");
    assert!(text.contains("4.9"), "{text}");
    // Four columns of 4.9: the average column too.
    assert_eq!(text.matches("4.9").count(), 4, "{text}");
}

#[test]
fn eval_renders_cycle_errors() {
    let dir = scratch_dir();
    let wbk = dir.join("cycle.wbk");
    fs::write(&wbk, "sheet S\nA1: =B1\nB1: =A1\n").unwrap();
    let output = sheetweave(&["eval", wbk.to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(stdout(&output).matches("#CYCLE!").count(), 2);
}

#[test]
fn eval_empty_workbook_prints_nothing() {
    let dir = scratch_dir();
    let wbk = dir.join("empty.wbk");
    fs::write(&wbk, "").unwrap();
    let output = sheetweave(&["eval", wbk.to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(stdout(&output), "");
}

#[test]
fn match_lists_join_points_per_pointcut() {
    let output = sheetweave(&[
        "match",
        fixture("grading.wbk").to_str().unwrap(),
        fixture("borderline.aspect").to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    // One line per stored cell (25), each showing its column binding.
    assert!(text.contains("finalmark: 25 matches"), "{text}");
    assert!(text.contains("Grades!E3 [sheet=Grades column=E1:E5 cell=E3]"), "{text}");
}

#[test]
fn match_reports_zero_matches() {
    let dir = scratch_dir();
    let aspect = dir.join("second.aspect");
    fs::write(
        &aspect,
        "aspect Second\nsecond: select sheet{number=2}\naround second { copy Grades }\nend\n",
    )
    .unwrap();
    let output = sheetweave(&[
        "match",
        fixture("grading.wbk").to_str().unwrap(),
        aspect.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(stdout(&output).contains("second: 0 matches"));
}

#[test]
fn match_regex_selects_formula_cells() {
    let dir = scratch_dir();
    let aspect = dir.join("avg.aspect");
    fs::write(
        &aspect,
        "aspect Avg\nformulas: select sheet{*}.cell{match=\"^=AVERAGE\"}\naround formulas { #{cell.value} }\nend\n",
    )
    .unwrap();
    let output = sheetweave(&[
        "match",
        fixture("grading.wbk").to_str().unwrap(),
        aspect.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("formulas: 4 matches"), "{text}");
    for a1 in ["E2", "E3", "E4", "E5"] {
        assert!(text.contains(&format!("Grades!{a1}")), "{text}");
    }
}

#[test]
fn check_accepts_bundled_and_rejects_bad_aspects() {
    let ok = sheetweave(&["check", fixture("borderline.aspect").to_str().unwrap()]);
    assert!(ok.status.success(), "{}", stderr(&ok));

    let dir = scratch_dir();
    let bad_position = dir.join("left_on_sheet.aspect");
    fs::write(
        &bad_position,
        "aspect Bad\nsheets: select sheet{*}\nleft sheets { A1=\"x\" }\nend\n",
    )
    .unwrap();
    let output = sheetweave(&["check", bad_position.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("ranges and cells"));

    let unknown = dir.join("unknown_pointcut.aspect");
    fs::write(
        &unknown,
        "aspect Bad\np: select sheet{*}.cell{*}\naround missing { x }\nend\n",
    )
    .unwrap();
    let output = sheetweave(&["check", unknown.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("unknown pointcut"));
}

#[test]
fn csv_import_builds_one_sheet() {
    let dir = scratch_dir();
    let csv = dir.join("marks.csv");
    fs::write(&csv, "Name,Mark\nAlice,\"5.0\"\nBob,=1+1\n").unwrap();
    let output = sheetweave(&["eval", csv.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("sheet marks"), "{text}");
    assert!(text.contains("Alice"), "{text}");
    assert!(text.contains('2'), "{text}");
}

#[test]
fn weave_error_exits_one() {
    let dir = scratch_dir();
    let aspect = dir.join("broken.aspect");
    fs::write(&aspect, "aspect Broken\np: select sheet{*\nend\n").unwrap();
    let output = sheetweave(&[
        "weave",
        fixture("grading.wbk").to_str().unwrap(),
        aspect.to_str().unwrap(),
        "-o",
        dir.join("out.wbk").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("syntax error"), "{}", stderr(&output));
}
