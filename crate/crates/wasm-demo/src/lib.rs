//! Browser bindings for the weaver: three string-in/JSON-out operations the
//! demo page calls. All logic lives in plain functions so it runs (and is
//! tested) natively; the `wasm_bindgen` exports are thin wrappers.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sheetweave::aspect::parse_aspects;
use sheetweave::formula::{evaluate_workbook, Value};
use sheetweave::matcher::enumerate_join_points;
use sheetweave::weaver::weave;
use sheetweave::workbook::{load_workbook, save_workbook, CellAddr, CellCoord, Workbook};

#[derive(Serialize)]
struct GridCell {
    a1: String,
    value: String,
    content: String,
    kind: &'static str,
}

#[derive(Serialize)]
struct SheetGrid {
    name: String,
    first_row: u32,
    first_col: u32,
    columns: Vec<String>,
    rows: Vec<Vec<Option<GridCell>>>,
}

#[derive(Serialize)]
struct DiffEntry {
    op: char,
    sheet: String,
    a1: String,
    old: Option<String>,
    new: Option<String>,
}

fn grids_of(wb: &Workbook) -> Vec<SheetGrid> {
    let grid = evaluate_workbook(wb);
    wb.sheets()
        .iter()
        .enumerate()
        .map(|(sheet_idx, sheet)| {
            let Some((min, max)) = sheet.used_region() else {
                return SheetGrid {
                    name: sheet.name.clone(),
                    first_row: 0,
                    first_col: 0,
                    columns: Vec::new(),
                    rows: Vec::new(),
                };
            };
            let columns = (min.col..=max.col)
                .map(|col| {
                    let a1 = CellCoord { row: 0, col }.to_a1();
                    a1[..a1.len() - 1].to_string()
                })
                .collect();
            let rows = (min.row..=max.row)
                .map(|row| {
                    (min.col..=max.col)
                        .map(|col| {
                            let coord = CellCoord { row, col };
                            sheet.get(coord).map(|content| {
                                let value = grid.scalar(CellAddr::new(sheet_idx, coord));
                                GridCell {
                                    a1: coord.to_a1(),
                                    value: value.display_text(),
                                    content: content.value_text(),
                                    kind: match value {
                                        Value::Number(_) => "number",
                                        Value::Text(_) => "text",
                                        Value::Bool(_) => "bool",
                                        Value::Error(_) => "error",
                                    },
                                }
                            })
                        })
                        .collect()
                })
                .collect();
            SheetGrid {
                name: sheet.name.clone(),
                first_row: min.row,
                first_col: min.col,
                columns,
                rows,
            }
        })
        .collect()
}

fn diff_of(before: &Workbook, after: &Workbook) -> Vec<DiffEntry> {
    let mut out = Vec::new();
    for sheet_after in after.sheets() {
        let name = &sheet_after.name;
        let old_sheet = before.sheet_index(name).map(|i| before.sheet(i));
        let mut coords: Vec<CellCoord> = sheet_after.cells().map(|(c, _)| c).collect();
        if let Some(old) = old_sheet {
            coords.extend(old.cells().map(|(c, _)| c));
        }
        coords.sort();
        coords.dedup();
        for coord in coords {
            let old = old_sheet.and_then(|s| s.get(coord));
            let new = sheet_after.get(coord);
            let entry = match (old, new) {
                (None, Some(n)) => Some(('+', None, Some(n.value_text()))),
                (Some(o), None) => Some(('-', Some(o.value_text()), None)),
                (Some(o), Some(n)) if o != n => {
                    Some(('~', Some(o.value_text()), Some(n.value_text())))
                }
                _ => None,
            };
            if let Some((op, old, new)) = entry {
                out.push(DiffEntry {
                    op,
                    sheet: name.clone(),
                    a1: coord.to_a1(),
                    old,
                    new,
                });
            }
        }
    }
    out
}

pub fn evaluate_json(workbook_text: &str) -> Result<String, String> {
    let wb = load_workbook(workbook_text).map_err(|e| e.to_string())?;
    serde_json::to_string(&grids_of(&wb)).map_err(|e| e.to_string())
}

pub fn weave_json(workbook_text: &str, aspects_text: &str) -> Result<String, String> {
    let wb = load_workbook(workbook_text).map_err(|e| e.to_string())?;
    let aspects = parse_aspects(aspects_text).map_err(|e| e.to_string())?;
    let (woven, report) = weave(&wb, &aspects).map_err(|e| e.to_string())?;

    #[derive(Serialize)]
    struct WeaveOut {
        woven_wbk: String,
        report_text: String,
        report: serde_json::Value,
        before: Vec<SheetGrid>,
        after: Vec<SheetGrid>,
        diff: Vec<DiffEntry>,
    }
    let out = WeaveOut {
        woven_wbk: save_workbook(&woven),
        report_text: report.to_text(),
        report: serde_json::from_str(&report.to_json()).map_err(|e| e.to_string())?,
        before: grids_of(&wb),
        after: grids_of(&woven),
        diff: diff_of(&wb, &woven),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

pub fn match_json(workbook_text: &str, aspects_text: &str) -> Result<String, String> {
    let wb = load_workbook(workbook_text).map_err(|e| e.to_string())?;
    let aspects = parse_aspects(aspects_text).map_err(|e| e.to_string())?;
    let grid = evaluate_workbook(&wb);

    #[derive(Serialize)]
    struct PointcutOut {
        name: String,
        matches: Vec<MatchOut>,
    }
    #[derive(Serialize)]
    struct MatchOut {
        join_point: String,
        bindings: String,
    }
    #[derive(Serialize)]
    struct AspectOut {
        aspect: String,
        pointcuts: Vec<PointcutOut>,
    }

    let out: Vec<AspectOut> = aspects
        .iter()
        .map(|aspect| AspectOut {
            aspect: aspect.name.clone(),
            pointcuts: aspect
                .pointcuts
                .iter()
                .map(|pc| PointcutOut {
                    name: pc.name.clone(),
                    matches: enumerate_join_points(&wb, &grid, pc)
                        .into_iter()
                        .map(|(jp, env)| MatchOut {
                            join_point: jp.describe(&wb),
                            bindings: env.describe(),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn evaluate(workbook_text: &str) -> Result<String, JsError> {
    evaluate_json(workbook_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn weave_workbook(workbook_text: &str, aspects_text: &str) -> Result<String, JsError> {
    weave_json(workbook_text, aspects_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn match_points(workbook_text: &str, aspects_text: &str) -> Result<String, JsError> {
    match_json(workbook_text, aspects_text).map_err(|e| JsError::new(&e))
}
