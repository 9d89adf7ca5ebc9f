//! The plain-text workbook format.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! sheet Grades
//! A1: Name
//! B1: Exam 1
//! E2: =AVERAGE(B2:D2)
//! A4: "5.0"
//! ```
//!
//! `sheet <name>` starts a sheet (name is the rest of the line, trimmed).
//! A cell line is `<A1>: <content>` with content read by
//! [`CellContent::parse`]. Saving is deterministic: sheets in order, cells
//! row-major, ambiguous text quoted — so `load(save(wb))` reproduces `wb`
//! and a second save is byte-identical.

use thiserror::Error;

use super::{CellContent, Workbook, Worksheet};
use crate::workbook::addr::CellCoord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct WbkError {
    pub line: usize,
    pub message: String,
}

impl WbkError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        WbkError {
            line,
            message: message.into(),
        }
    }
}

pub fn load_workbook(text: &str) -> Result<Workbook, WbkError> {
    let mut wb = Workbook::new();
    let mut current: Option<usize> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("sheet ") {
            let name = rest.trim();
            if name.is_empty() {
                return Err(WbkError::new(line_no, "sheet name must not be empty"));
            }
            if wb.sheet_index(name).is_some() {
                return Err(WbkError::new(
                    line_no,
                    format!("duplicate sheet name {name:?}"),
                ));
            }
            wb.push_sheet(Worksheet::new(name))
                .map_err(|e| WbkError::new(line_no, e.to_string()))?;
            current = Some(wb.sheet_count() - 1);
            continue;
        }
        if line == "sheet" {
            return Err(WbkError::new(line_no, "sheet name must not be empty"));
        }

        let Some((addr_part, content_part)) = line.split_once(':') else {
            return Err(WbkError::new(
                line_no,
                format!("expected 'sheet <name>' or '<A1>: <content>', found {line:?}"),
            ));
        };
        let coord = CellCoord::parse_a1(addr_part.trim())
            .map_err(|e| WbkError::new(line_no, e.to_string()))?;
        let Some(sheet_idx) = current else {
            return Err(WbkError::new(
                line_no,
                "cell line before any 'sheet <name>' line",
            ));
        };
        let content_text = content_part.trim();
        let content = CellContent::parse(content_text).map_err(|e| {
            WbkError::new(
                line_no,
                format!(
                    "sheet {:?}, cell {}: {}",
                    wb.sheet(sheet_idx).name,
                    coord.to_a1(),
                    e
                ),
            )
        })?;
        if content.is_empty() {
            return Err(WbkError::new(
                line_no,
                format!(
                    "cell {} has no content; write \"\" for empty text",
                    coord.to_a1()
                ),
            ));
        }
        let sheet = wb.sheet_mut(sheet_idx);
        if sheet.get(coord).is_some() {
            return Err(WbkError::new(
                line_no,
                format!("duplicate cell {} in sheet {:?}", coord.to_a1(), sheet.name),
            ));
        }
        sheet.set(coord, content);
    }
    Ok(wb)
}

pub fn save_workbook(wb: &Workbook) -> String {
    let mut out = String::new();
    for (i, sheet) in wb.sheets().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("sheet ");
        out.push_str(&sheet.name);
        out.push('\n');
        for (coord, content) in sheet.cells() {
            out.push_str(&coord.to_a1());
            out.push_str(": ");
            out.push_str(&content.to_wbk_text());
            out.push('\n');
        }
    }
    out
}
