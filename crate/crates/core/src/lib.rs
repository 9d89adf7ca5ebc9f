//! Aspect-oriented programming for spreadsheets.
//!
//! A spreadsheet here is a [`workbook::Workbook`]: an ordered list of named
//! worksheets, each a sparse grid of literals and formulas. Crosscutting
//! concerns (a grading policy, an export column, a debug sheet) are written
//! as *aspects* in a small pointcut/advice language ([`aspect`]) instead of
//! being edited into the sheet. The [`matcher`] enumerates the worksheet,
//! range and cell join points a pointcut selects, and the [`weaver`] applies
//! the advice to a copy of the workbook, leaving the original untouched.
//! Because advice can read computed cell results, weaving is dynamic: it runs
//! on top of the [`formula`] evaluation engine.
//!
//! The pipeline, end to end:
//!
//! ```text
//! workbook.wbk ──load──► Workbook ──evaluate──► ValueGrid
//!                            │                     │
//! rules.aspect ──parse──► AspectDef ──match/plan──► WeavePlan ──apply──► woven Workbook
//! ```

pub mod aspect;
pub mod formula;
pub mod matcher;
pub mod weaver;
pub mod workbook;
