//! Spreadsheet data model: sparse worksheets of literals and formulas,
//! plain-text persistence, and the structural edit primitives the weaver
//! builds on. All edits are pure: they return a new [`Workbook`] and leave
//! the input value untouched.

pub mod addr;
mod wbk;

use std::collections::BTreeMap;

use thiserror::Error;

pub use addr::{format_a1, parse_a1, AddrError, CellAddr, CellCoord, RangeKind, RangeRect};
pub use wbk::{load_workbook, save_workbook, WbkError};

use crate::formula::{self, format_number, print_formula, Expr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkbookError {
    #[error("duplicate sheet name {0:?}")]
    DuplicateSheet(String),
    #[error("sheet index {index} out of range for {count} sheets")]
    SheetIndex { index: usize, count: usize },
    #[error("sheet name must not be empty")]
    EmptySheetName,
}

/// What one cell holds. `Empty` never appears in a stored sheet; it exists
/// so edits can express "clear this cell" and padding.
#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Empty,
    Number(f64),
    Text(String),
    Bool(bool),
    Formula { source: String, ast: Expr },
}

impl CellContent {
    /// Build a formula cell from an AST; the stored source is the canonical
    /// printed form.
    pub fn formula(ast: Expr) -> Self {
        CellContent::Formula {
            source: print_formula(&ast),
            ast,
        }
    }

    /// Parse cell content text the way the workbook file format does:
    /// `=` starts a formula, `true`/`false` are booleans, a decimal literal
    /// is a number, `"..."` is quoted text, anything else is bare text.
    /// An empty string is the empty content.
    pub fn parse(text: &str) -> Result<Self, formula::FormulaError> {
        if text.is_empty() {
            return Ok(CellContent::Empty);
        }
        if text.starts_with('=') {
            let ast = formula::parse_formula(text)?;
            return Ok(CellContent::formula(ast));
        }
        if text == "true" {
            return Ok(CellContent::Bool(true));
        }
        if text == "false" {
            return Ok(CellContent::Bool(false));
        }
        if let Ok(n) = text.parse::<f64>() {
            if n.is_finite() {
                return Ok(CellContent::Number(n));
            }
        }
        if text.starts_with('"') {
            return parse_quoted_text(text);
        }
        Ok(CellContent::Text(text.to_string()))
    }

    /// Content as the text a cell "shows" when inspected: formulas keep
    /// their leading `=`, text is unquoted, booleans are `true`/`false`.
    pub fn value_text(&self) -> String {
        match self {
            CellContent::Empty => String::new(),
            CellContent::Number(n) => format_number(*n),
            CellContent::Text(s) => s.clone(),
            CellContent::Bool(b) => if *b { "true" } else { "false" }.to_string(),
            CellContent::Formula { source, .. } => source.clone(),
        }
    }

    /// Content as a workbook-file cell line payload. Text is quoted whenever
    /// reading it back bare would produce something else.
    pub fn to_wbk_text(&self) -> String {
        match self {
            CellContent::Text(s) if text_needs_quoting(s) => {
                let mut out = String::with_capacity(s.len() + 2);
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        _ => out.push(ch),
                    }
                }
                out.push('"');
                out
            }
            other => other.value_text(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CellContent::Empty)
    }
}

fn text_needs_quoting(s: &str) -> bool {
    s.is_empty()
        || s.trim() != s
        || s.contains('\n')
        || s.starts_with('=')
        || s.starts_with('"')
        || s == "true"
        || s == "false"
        || s.parse::<f64>().map(|n| n.is_finite()).unwrap_or(false)
}

fn parse_quoted_text(text: &str) -> Result<CellContent, formula::FormulaError> {
    let err = |offset: usize, message: &str| formula::FormulaError {
        offset,
        message: message.to_string(),
    };
    let bytes = text.as_bytes();
    let mut out = String::new();
    let mut pos = 1;
    loop {
        match bytes.get(pos) {
            None => return Err(err(pos, "unterminated quoted text")),
            Some(b'"') => {
                pos += 1;
                if pos != bytes.len() {
                    return Err(err(pos, "unexpected characters after closing quote"));
                }
                return Ok(CellContent::Text(out));
            }
            Some(b'\\') => {
                match bytes.get(pos + 1) {
                    Some(b'"') => out.push('"'),
                    Some(b'\\') => out.push('\\'),
                    Some(b'n') => out.push('\n'),
                    _ => return Err(err(pos, "unknown escape; expected \\\" \\\\ or \\n")),
                }
                pos += 2;
            }
            Some(_) => {
                let ch = text[pos..].chars().next().unwrap();
                out.push(ch);
                pos += ch.len_utf8();
            }
        }
    }
}

/// One named sheet: a sparse map from coordinates to non-empty content.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Worksheet {
    pub name: String,
    cells: BTreeMap<CellCoord, CellContent>,
}

impl Worksheet {
    pub fn new(name: impl Into<String>) -> Self {
        Worksheet {
            name: name.into(),
            cells: BTreeMap::new(),
        }
    }

    pub fn get(&self, coord: CellCoord) -> Option<&CellContent> {
        self.cells.get(&coord)
    }

    /// Store content at a coordinate; empty content clears the cell, so no
    /// stored cell is ever `Empty`.
    pub fn set(&mut self, coord: CellCoord, content: CellContent) {
        if content.is_empty() {
            self.cells.remove(&coord);
        } else {
            self.cells.insert(coord, content);
        }
    }

    /// Stored cells in reading order (row-major).
    pub fn cells(&self) -> impl Iterator<Item = (CellCoord, &CellContent)> {
        self.cells.iter().map(|(c, v)| (*c, v))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Bounding rectangle of the stored cells, if any.
    pub fn used_region(&self) -> Option<(CellCoord, CellCoord)> {
        let mut iter = self.cells.keys();
        let first = *iter.next()?;
        let mut min = first;
        let mut max = first;
        for c in self.cells.keys() {
            min.row = min.row.min(c.row);
            min.col = min.col.min(c.col);
            max.row = max.row.max(c.row);
            max.col = max.col.max(c.col);
        }
        Some((min, max))
    }
}

/// Which way `insert_cell_shift` pushes existing cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDir {
    /// Shift the insertion row's cells at/after the column one step right.
    Right,
    /// Shift the insertion column's cells at/below the row one step down.
    Down,
}

/// An ordered list of uniquely named worksheets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workbook {
    sheets: Vec<Worksheet>,
}

impl Workbook {
    pub fn new() -> Self {
        Workbook::default()
    }

    pub fn sheets(&self) -> &[Worksheet] {
        &self.sheets
    }

    pub fn sheet(&self, index: usize) -> &Worksheet {
        &self.sheets[index]
    }

    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name == name)
    }

    pub fn sheet_count(&self) -> usize {
        self.sheets.len()
    }

    /// Append a sheet, enforcing name uniqueness.
    pub fn push_sheet(&mut self, sheet: Worksheet) -> Result<(), WorkbookError> {
        if sheet.name.is_empty() {
            return Err(WorkbookError::EmptySheetName);
        }
        if self.sheet_index(&sheet.name).is_some() {
            return Err(WorkbookError::DuplicateSheet(sheet.name));
        }
        self.sheets.push(sheet);
        Ok(())
    }

    /// Mutable access for loaders and tests; callers keep names unique.
    pub fn sheet_mut(&mut self, index: usize) -> &mut Worksheet {
        &mut self.sheets[index]
    }

    /// Insert content at `at`, shifting existing cells away to make room.
    /// For `Right` every stored cell in `at`'s row with column >= `at`'s
    /// moves one column right; `Down` is the symmetric column-local shift.
    /// Every formula in the workbook is rewritten so its references keep
    /// tracking the content they pointed at.
    pub fn insert_cell_shift(&self, at: CellAddr, dir: ShiftDir, content: CellContent) -> Workbook {
        let mut wb = self.clone();
        let sheet = &mut wb.sheets[at.sheet];
        let coord = at.coord;

        let moved: Vec<(CellCoord, CellContent)> = match dir {
            ShiftDir::Right => sheet
                .cells
                .range(
                    CellCoord {
                        row: coord.row,
                        col: coord.col,
                    }..=CellCoord {
                        row: coord.row,
                        col: u32::MAX,
                    },
                )
                .map(|(c, v)| (*c, v.clone()))
                .collect(),
            ShiftDir::Down => sheet
                .cells
                .iter()
                .filter(|(c, _)| c.col == coord.col && c.row >= coord.row)
                .map(|(c, v)| (*c, v.clone()))
                .collect(),
        };
        for (c, _) in &moved {
            sheet.cells.remove(c);
        }
        for (c, v) in moved {
            let dest = match dir {
                ShiftDir::Right => CellCoord {
                    row: c.row,
                    col: c.col + 1,
                },
                ShiftDir::Down => CellCoord {
                    row: c.row + 1,
                    col: c.col,
                },
            };
            sheet.cells.insert(dest, v);
        }

        let map = move |sheet_idx: usize, c: CellCoord| -> CellCoord {
            if sheet_idx != at.sheet {
                return c;
            }
            match dir {
                ShiftDir::Right if c.row == coord.row && c.col >= coord.col => CellCoord {
                    row: c.row,
                    col: c.col + 1,
                },
                ShiftDir::Down if c.col == coord.col && c.row >= coord.row => CellCoord {
                    row: c.row + 1,
                    col: c.col,
                },
                _ => c,
            }
        };
        wb.rewrite_all_formulas(&map);

        wb.sheets[at.sheet].set(coord, content);
        wb
    }

    /// Insert a sheet at `index`, shifting later sheets. Formula references
    /// use sheet names, so none need rewriting.
    pub fn insert_sheet_at(&self, index: usize, sheet: Worksheet) -> Result<Workbook, WorkbookError> {
        if index > self.sheets.len() {
            return Err(WorkbookError::SheetIndex {
                index,
                count: self.sheets.len(),
            });
        }
        if sheet.name.is_empty() {
            return Err(WorkbookError::EmptySheetName);
        }
        if self.sheet_index(&sheet.name).is_some() {
            return Err(WorkbookError::DuplicateSheet(sheet.name));
        }
        let mut wb = self.clone();
        wb.sheets.insert(index, sheet);
        Ok(wb)
    }

    /// Replace the sheet at `index` wholesale (same position, possibly a new
    /// name); the name must not collide with any other sheet.
    pub fn replace_sheet_at(
        &self,
        index: usize,
        sheet: Worksheet,
    ) -> Result<Workbook, WorkbookError> {
        if index >= self.sheets.len() {
            return Err(WorkbookError::SheetIndex {
                index,
                count: self.sheets.len(),
            });
        }
        if sheet.name.is_empty() {
            return Err(WorkbookError::EmptySheetName);
        }
        if let Some(existing) = self.sheet_index(&sheet.name) {
            if existing != index {
                return Err(WorkbookError::DuplicateSheet(sheet.name));
            }
        }
        let mut wb = self.clone();
        wb.sheets[index] = sheet;
        Ok(wb)
    }

    fn rewrite_all_formulas(&mut self, map: &dyn Fn(usize, CellCoord) -> CellCoord) {
        let names: Vec<String> = self.sheets.iter().map(|s| s.name.clone()).collect();
        for (idx, sheet) in self.sheets.iter_mut().enumerate() {
            for content in sheet.cells.values_mut() {
                if let CellContent::Formula { ast, .. } = content {
                    let rewritten = formula::rewrite_references(ast, idx, &names, map);
                    if rewritten != *ast {
                        *content = CellContent::formula(rewritten);
                    }
                }
            }
        }
    }
}
