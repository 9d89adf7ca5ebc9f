//! A1 addressing: coordinates, sheet-qualified addresses, rectangular ranges.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Largest 0-based column accepted from text input ("XFD").
pub const MAX_COL: u32 = 16_383;
/// Largest 0-based row accepted from text input.
pub const MAX_ROW: u32 = 1_048_575;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddrError {
    #[error("malformed cell address {0:?}")]
    Malformed(String),
    #[error("cell address {0:?} is out of bounds")]
    OutOfBounds(String),
    #[error("malformed range {0:?}")]
    MalformedRange(String),
}

/// A 0-based (column, row) coordinate within one sheet.
///
/// Ordering is reading order: row first, then column, so sorted iteration
/// over a `BTreeMap<CellCoord, _>` walks the grid row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellCoord {
    pub row: u32,
    pub col: u32,
}

impl CellCoord {
    pub fn new(col: u32, row: u32) -> Self {
        CellCoord { row, col }
    }

    /// Parse an A1-style address, case-insensitively. Rejects leading zeros
    /// in the row part and addresses beyond [`MAX_COL`]/[`MAX_ROW`].
    pub fn parse_a1(text: &str) -> Result<Self, AddrError> {
        let bytes = text.as_bytes();
        let letters = bytes
            .iter()
            .take_while(|b| b.is_ascii_alphabetic())
            .count();
        if letters == 0 || letters == bytes.len() {
            return Err(AddrError::Malformed(text.to_string()));
        }
        let (col_part, row_part) = text.split_at(letters);
        if !row_part.bytes().all(|b| b.is_ascii_digit()) || row_part.starts_with('0') {
            return Err(AddrError::Malformed(text.to_string()));
        }
        // Bijective base-26: A=1 .. Z=26, then minus one for a 0-based column.
        let mut col: u64 = 0;
        for b in col_part.bytes() {
            let d = (b.to_ascii_uppercase() - b'A' + 1) as u64;
            col = col * 26 + d;
            if col > MAX_COL as u64 + 1 {
                return Err(AddrError::OutOfBounds(text.to_string()));
            }
        }
        let row: u64 = row_part
            .parse()
            .map_err(|_| AddrError::OutOfBounds(text.to_string()))?;
        if row > MAX_ROW as u64 + 1 {
            return Err(AddrError::OutOfBounds(text.to_string()));
        }
        Ok(CellCoord {
            col: (col - 1) as u32,
            row: (row - 1) as u32,
        })
    }

    /// Format as canonical A1 text (uppercase letters, 1-based row).
    pub fn to_a1(self) -> String {
        let mut letters = Vec::new();
        let mut n = self.col as u64 + 1;
        while n > 0 {
            let rem = ((n - 1) % 26) as u8;
            letters.push(b'A' + rem);
            n = (n - 1) / 26;
        }
        letters.reverse();
        format!(
            "{}{}",
            String::from_utf8(letters).unwrap(),
            self.row as u64 + 1
        )
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_a1())
    }
}

/// Parse an A1 address into a sheet-less coordinate.
pub fn parse_a1(text: &str) -> Result<CellCoord, AddrError> {
    CellCoord::parse_a1(text)
}

/// Format a sheet-less coordinate as canonical A1 text.
pub fn format_a1(coord: CellCoord) -> String {
    coord.to_a1()
}

/// A cell address qualified with its 0-based sheet index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellAddr {
    pub sheet: usize,
    pub coord: CellCoord,
}

impl CellAddr {
    pub fn new(sheet: usize, coord: CellCoord) -> Self {
        CellAddr { sheet, coord }
    }
}

/// Shape tag for a rectangular range, mirroring the three range pattern
/// keywords of the aspect language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RangeKind {
    Range,
    Column,
    Row,
}

/// A rectangular, inclusive cell range on one sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RangeRect {
    pub sheet: usize,
    /// Top-left corner.
    pub start: CellCoord,
    /// Bottom-right corner (inclusive).
    pub end: CellCoord,
    pub kind: RangeKind,
}

impl RangeRect {
    /// Build a rect, normalizing corner order. Column/row kinds must be one
    /// cell wide/tall respectively; violations are reported as malformed.
    pub fn new(
        sheet: usize,
        a: CellCoord,
        b: CellCoord,
        kind: RangeKind,
    ) -> Result<Self, AddrError> {
        let start = CellCoord {
            row: a.row.min(b.row),
            col: a.col.min(b.col),
        };
        let end = CellCoord {
            row: a.row.max(b.row),
            col: a.col.max(b.col),
        };
        let rect = RangeRect {
            sheet,
            start,
            end,
            kind,
        };
        match kind {
            RangeKind::Column if rect.width() != 1 => {
                Err(AddrError::MalformedRange(rect.name()))
            }
            RangeKind::Row if rect.height() != 1 => Err(AddrError::MalformedRange(rect.name())),
            _ => Ok(rect),
        }
    }

    pub fn width(&self) -> u32 {
        self.end.col - self.start.col + 1
    }

    pub fn height(&self) -> u32 {
        self.end.row - self.start.row + 1
    }

    pub fn contains(&self, coord: CellCoord) -> bool {
        coord.row >= self.start.row
            && coord.row <= self.end.row
            && coord.col >= self.start.col
            && coord.col <= self.end.col
    }

    /// Cells of the rect in reading order (row-major, top-left first).
    pub fn cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        let (start, end) = (self.start, self.end);
        (start.row..=end.row)
            .flat_map(move |row| (start.col..=end.col).map(move |col| CellCoord { row, col }))
    }

    /// The i-th cell in reading order, if within bounds.
    pub fn nth_cell(&self, i: usize) -> Option<CellCoord> {
        let total = self.width() as u64 * self.height() as u64;
        if (i as u64) >= total {
            return None;
        }
        let w = self.width() as u64;
        let row = self.start.row + (i as u64 / w) as u32;
        let col = self.start.col + (i as u64 % w) as u32;
        Some(CellCoord { row, col })
    }

    /// Canonical name: a single address for 1x1 rects, `A2:C3` otherwise.
    pub fn name(&self) -> String {
        if self.start == self.end {
            self.start.to_a1()
        } else {
            format!("{}:{}", self.start.to_a1(), self.end.to_a1())
        }
    }

    /// Parse `A2:C3` or a single address (treated as 1x1) into a rect.
    pub fn parse_name(sheet: usize, text: &str, kind: RangeKind) -> Result<Self, AddrError> {
        match text.split_once(':') {
            Some((a, b)) => {
                let a = CellCoord::parse_a1(a.trim())?;
                let b = CellCoord::parse_a1(b.trim())?;
                RangeRect::new(sheet, a, b, kind)
            }
            None => {
                let c = CellCoord::parse_a1(text.trim())?;
                RangeRect::new(sheet, c, c, kind)
            }
        }
    }
}
