//! The weaver: match each advice against a workbook snapshot, order the
//! resulting edits, and apply them to a copy. The input workbook is never
//! modified — deactivating aspects is just weaving with fewer of them.
//!
//! Ordering rules:
//! - advice run in declaration order over the snapshot; insertions made by
//!   one advice never create matches for the same aspect (snapshot
//!   semantics);
//! - around advice on the same cell compose in declaration order: later
//!   advice see the earlier result as `cell.value`, while `cell.result`
//!   stays the snapshot evaluation;
//! - same-side insertions at one join point stack so that earlier-declared
//!   advice ends up outermost (farther from the join point), which makes a
//!   before-flavored side apply earlier declarations first and an
//!   after-flavored side execute them last.
//!
//! Aspects compose sequentially: each one matches the output of the
//! previous, so order between aspects is observable.

#![allow(clippy::result_large_err)]

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::aspect::{validate, AdviceBody, AspectDef, Diagnostic, Position, Template};
use crate::formula::{evaluate_workbook, ValueGrid};
use crate::matcher::{
    enumerate_join_points, eval_guard, eval_template, GuardOutcome, JoinPoint, MatchError,
};
use crate::workbook::addr::{CellAddr, CellCoord, RangeRect};
use crate::workbook::{CellContent, ShiftDir, Workbook, Worksheet};

#[derive(Debug, Error)]
pub enum WeaveError {
    #[error("aspect {aspect:?} failed validation:\n{}", render_diagnostics(.diagnostics))]
    InvalidAspect {
        aspect: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{provenance}: {source}")]
    Template {
        provenance: Provenance,
        source: MatchError,
    },
    #[error("{provenance}: advice body is {got} cells {axis} but the join point allows {want}")]
    BlockTooBig {
        provenance: Provenance,
        axis: &'static str,
        got: u32,
        want: u32,
    },
    #[error("{provenance}: no sheet named {name:?} to copy")]
    CopySourceMissing {
        provenance: Provenance,
        name: String,
    },
    #[error("{provenance}: earlier advice tore the join point apart; its rows/columns no longer shift together")]
    TornRange { provenance: Provenance },
    #[error("plan is inconsistent with the workbook: {0}")]
    Inconsistent(String),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Where an action came from: enough to reproduce the report and to blame
/// a specific advice in error messages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub aspect: String,
    /// 1-based position of the advice in its aspect.
    pub advice_ordinal: usize,
    pub position: &'static str,
    pub join_point: String,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "aspect {:?} advice #{} ({} at {})",
            self.aspect, self.advice_ordinal, self.position, self.join_point
        )
    }
}

/// Which side of a join point an insertion lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Above,
    Right,
    Below,
}

/// One structural edit. Coordinates are in the workbook state produced by
/// all earlier actions of the same plan, so application is plain replay.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    ReplaceCell {
        addr: CellAddr,
        content: CellContent,
    },
    InsertCell {
        /// The join point's location at application time.
        at: CellAddr,
        side: Side,
        content: CellContent,
    },
    InsertRangeBlock {
        rect: RangeRect,
        side: Side,
        block: Vec<Vec<CellContent>>,
    },
    InsertSheet {
        index: usize,
        sheet: Worksheet,
    },
    ReplaceSheet {
        index: usize,
        sheet: Worksheet,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeaveAction {
    pub kind: ActionKind,
    /// Sheet name the target index must have at application time; guards
    /// against applying a plan to the wrong workbook.
    pub expected_sheet: Option<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default)]
pub struct WeavePlan {
    pub actions: Vec<WeaveAction>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdviceReport {
    pub ordinal: usize,
    pub name: Option<String>,
    pub position: &'static str,
    pub pointcut: String,
    pub matches: usize,
    pub guard_passed: usize,
    pub guard_failed: usize,
    pub guard_errors: usize,
    /// Actions emitted (identity replacements are elided).
    pub applied: usize,
    /// Guard failures plus elided identity replacements.
    pub skipped: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub guard_error_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectReport {
    pub aspect: String,
    pub advice: Vec<AdviceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalSummary {
    pub sheets: usize,
    pub cells: usize,
    pub error_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeaveReport {
    pub aspects: Vec<AspectReport>,
    pub final_state: FinalSummary,
}

impl WeaveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for aspect in &self.aspects {
            out.push_str(&format!("aspect {}\n", aspect.aspect));
            for adv in &aspect.advice {
                let name = adv
                    .name
                    .as_ref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "  #{} {} {}{}: {} matched, {} passed, {} failed, {} guard errors, {} applied, {} skipped\n",
                    adv.ordinal,
                    adv.position,
                    adv.pointcut,
                    name,
                    adv.matches,
                    adv.guard_passed,
                    adv.guard_failed,
                    adv.guard_errors,
                    adv.applied,
                    adv.skipped,
                ));
            }
        }
        out.push_str(&format!(
            "final: {} sheets, {} cells, {} error cells\n",
            self.final_state.sheets, self.final_state.cells, self.final_state.error_cells
        ));
        out
    }
}

/// Coordinate bookkeeping: every edit the planner has already scheduled,
/// replayed over snapshot coordinates to find where content sits now.
#[derive(Debug, Default)]
struct Displacements {
    events: Vec<Event>,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    /// Cells in `row` of `sheet` at columns >= `from` move right by `delta`.
    ShiftRight {
        sheet: usize,
        row: u32,
        from: u32,
        delta: u32,
    },
    /// Cells in `col` of `sheet` at rows >= `from` move down by `delta`.
    ShiftDown {
        sheet: usize,
        col: u32,
        from: u32,
        delta: u32,
    },
    /// A sheet was inserted at `index`; later sheets moved up one slot.
    SheetInsert { index: usize },
}

impl Displacements {
    fn current_addr(&self, snapshot: CellAddr) -> CellAddr {
        let mut sheet = snapshot.sheet;
        let mut coord = snapshot.coord;
        for event in &self.events {
            match *event {
                Event::ShiftRight {
                    sheet: s,
                    row,
                    from,
                    delta,
                } => {
                    if sheet == s && coord.row == row && coord.col >= from {
                        coord.col += delta;
                    }
                }
                Event::ShiftDown {
                    sheet: s,
                    col,
                    from,
                    delta,
                } => {
                    if sheet == s && coord.col == col && coord.row >= from {
                        coord.row += delta;
                    }
                }
                Event::SheetInsert { index } => {
                    if sheet >= index {
                        sheet += 1;
                    }
                }
            }
        }
        CellAddr::new(sheet, coord)
    }

    fn current_sheet(&self, snapshot_sheet: usize) -> usize {
        let mut sheet = snapshot_sheet;
        for event in &self.events {
            if let Event::SheetInsert { index } = event {
                if sheet >= *index {
                    sheet += 1;
                }
            }
        }
        sheet
    }

    /// Map a whole rect; fails if earlier edits displaced its rows or
    /// columns unevenly (it is no longer one rectangle).
    fn current_rect(&self, rect: RangeRect) -> Option<RangeRect> {
        let start = self.current_addr(CellAddr::new(rect.sheet, rect.start));
        let end = self.current_addr(CellAddr::new(rect.sheet, rect.end));
        let mapped = RangeRect {
            sheet: start.sheet,
            start: start.coord,
            end: end.coord,
            kind: rect.kind,
        };
        if mapped.width() != rect.width() || mapped.height() != rect.height() {
            return None;
        }
        // Every corner row/column must have moved consistently.
        for row in rect.start.row..=rect.end.row {
            let left = self.current_addr(CellAddr::new(
                rect.sheet,
                CellCoord {
                    row,
                    col: rect.start.col,
                },
            ));
            if left.coord.col != mapped.start.col
                || left.coord.row != mapped.start.row + (row - rect.start.row)
            {
                return None;
            }
        }
        for col in rect.start.col..=rect.end.col {
            let top = self.current_addr(CellAddr::new(
                rect.sheet,
                CellCoord {
                    row: rect.start.row,
                    col,
                },
            ));
            if top.coord.row != mapped.start.row
                || top.coord.col != mapped.start.col + (col - rect.start.col)
            {
                return None;
            }
        }
        Some(mapped)
    }
}

/// Where a cell insertion physically lands: the shifted-in address and the
/// direction existing content moves.
fn insertion_point(at: CellAddr, side: Side) -> (CellAddr, ShiftDir) {
    match side {
        Side::Left => (at, ShiftDir::Right),
        Side::Right => (
            CellAddr::new(
                at.sheet,
                CellCoord {
                    row: at.coord.row,
                    col: at.coord.col + 1,
                },
            ),
            ShiftDir::Right,
        ),
        Side::Above => (at, ShiftDir::Down),
        Side::Below => (
            CellAddr::new(
                at.sheet,
                CellCoord {
                    row: at.coord.row + 1,
                    col: at.coord.col,
                },
            ),
            ShiftDir::Down,
        ),
    }
}

fn side_of(position: Position) -> Option<Side> {
    match position {
        Position::Left => Some(Side::Left),
        Position::Above => Some(Side::Above),
        Position::Right => Some(Side::Right),
        Position::Below => Some(Side::Below),
        _ => None,
    }
}

/// Plan one aspect against a snapshot and its evaluated grid. Join points
/// come from the snapshot only; coordinates in the emitted actions account
/// for the plan's own earlier insertions.
pub fn plan_aspect(
    wb: &Workbook,
    grid: &ValueGrid,
    aspect: &AspectDef,
) -> Result<(WeavePlan, AspectReport), WeaveError> {
    let mut plan = WeavePlan::default();
    let mut reports = Vec::new();
    let mut tracker = Displacements::default();
    // Around composition state, keyed by snapshot address.
    let mut overlay: BTreeMap<CellAddr, CellContent> = BTreeMap::new();
    // Sheet names as they will be after this plan, for conflict-free naming.
    let mut names: Vec<String> = wb.sheets().iter().map(|s| s.name.clone()).collect();
    // Current index of each planned sheet rename (for expected-name checks).
    let mut renamed: BTreeMap<usize, String> = BTreeMap::new();

    for (idx, advice) in aspect.advice.iter().enumerate() {
        let ordinal = idx + 1;
        let mut report = AdviceReport {
            ordinal,
            name: advice.name.clone(),
            position: advice.position.as_str(),
            pointcut: advice.pointcut.clone(),
            matches: 0,
            guard_passed: 0,
            guard_failed: 0,
            guard_errors: 0,
            applied: 0,
            skipped: 0,
            guard_error_messages: Vec::new(),
        };
        let Some(pc) = aspect.pointcut(&advice.pointcut) else {
            return Err(WeaveError::InvalidAspect {
                aspect: aspect.name.clone(),
                diagnostics: vec![Diagnostic {
                    line: advice.line,
                    message: format!("unknown pointcut {:?}", advice.pointcut),
                }],
            });
        };

        let points = enumerate_join_points(wb, grid, pc);
        report.matches = points.len();

        for (jp, env) in points {
            let provenance = Provenance {
                aspect: aspect.name.clone(),
                advice_ordinal: ordinal,
                position: advice.position.as_str(),
                join_point: jp.describe(wb),
            };

            let guard_outcome = advice
                .guard
                .as_ref()
                .map(|guard| eval_guard(&env.with_overlay(&overlay), guard));
            match guard_outcome {
                None => report.guard_passed += 1,
                Some(outcome) => match outcome {
                    GuardOutcome::Pass => report.guard_passed += 1,
                    GuardOutcome::Fail => {
                        report.guard_failed += 1;
                        report.skipped += 1;
                        continue;
                    }
                    GuardOutcome::Error(message) => {
                        report.guard_errors += 1;
                        report.guard_error_messages.push(format!(
                            "{}: {}",
                            provenance.join_point, message
                        ));
                        continue;
                    }
                },
            }

            let emitted = plan_advice_at(
                wb,
                advice,
                &jp,
                &env,
                provenance,
                &mut tracker,
                &mut overlay,
                &mut names,
                &mut renamed,
                &mut plan,
            )?;
            if emitted == 0 {
                report.skipped += 1;
            } else {
                report.applied += emitted;
            }
        }
        reports.push(report);
    }

    Ok((
        plan,
        AspectReport {
            aspect: aspect.name.clone(),
            advice: reports,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn plan_advice_at(
    wb: &Workbook,
    advice: &crate::aspect::Advice,
    jp: &JoinPoint,
    env: &crate::matcher::BindingEnv,
    provenance: Provenance,
    tracker: &mut Displacements,
    overlay: &mut BTreeMap<CellAddr, CellContent>,
    names: &mut Vec<String>,
    renamed: &mut BTreeMap<usize, String>,
    plan: &mut WeavePlan,
) -> Result<usize, WeaveError> {
    let expected_name = |tracker: &Displacements, snapshot_sheet: usize| -> Option<String> {
        let current = tracker.current_sheet(snapshot_sheet);
        Some(
            renamed
                .get(&current)
                .cloned()
                .unwrap_or_else(|| wb.sheet(snapshot_sheet).name.clone()),
        )
    };

    match (advice.position, jp) {
        (Position::Around, JoinPoint::Cell { addr, .. }) => {
            let AdviceBody::Template(tpl) = &advice.body else {
                return Err(invalid_body(&provenance));
            };
            let content = eval_template(&env.with_overlay(overlay), tpl).map_err(|source| {
                WeaveError::Template {
                    provenance: provenance.clone(),
                    source,
                }
            })?;
            let current = overlay
                .get(addr)
                .cloned()
                .or_else(|| wb.sheet(addr.sheet).get(addr.coord).cloned())
                .unwrap_or(CellContent::Empty);
            if content == current {
                return Ok(0);
            }
            overlay.insert(*addr, content.clone());
            let expected = expected_name(tracker, addr.sheet);
            plan.actions.push(WeaveAction {
                kind: ActionKind::ReplaceCell {
                    addr: tracker.current_addr(*addr),
                    content,
                },
                expected_sheet: expected,
                provenance,
            });
            Ok(1)
        }
        (Position::Around, JoinPoint::Range(rect)) => {
            let block = body_block(advice, &env.with_overlay(overlay), &provenance)?;
            fit_block(&block, rect.height(), rect.width(), &provenance)?;
            let padded = pad_block(block, rect.height(), rect.width());
            let mut emitted = 0usize;
            for (i, coord) in rect.cells().enumerate() {
                let content = padded[i / rect.width() as usize][i % rect.width() as usize].clone();
                let addr = CellAddr::new(rect.sheet, coord);
                let current = overlay
                    .get(&addr)
                    .cloned()
                    .or_else(|| wb.sheet(addr.sheet).get(coord).cloned())
                    .unwrap_or(CellContent::Empty);
                if content == current {
                    continue;
                }
                overlay.insert(addr, content.clone());
                let expected = expected_name(tracker, addr.sheet);
                plan.actions.push(WeaveAction {
                    kind: ActionKind::ReplaceCell {
                        addr: tracker.current_addr(addr),
                        content,
                    },
                    expected_sheet: expected,
                    provenance: provenance.clone(),
                });
                emitted += 1;
            }
            Ok(emitted)
        }
        (Position::Around, JoinPoint::Sheet { sheet }) => {
            let current_index = tracker.current_sheet(*sheet);
            let old_name = renamed
                .get(&current_index)
                .cloned()
                .unwrap_or_else(|| wb.sheet(*sheet).name.clone());
            let replacement =
                build_sheet(wb, advice, &env.with_overlay(overlay), &provenance, Some(&old_name))?;
            let mut sheet_value = replacement;
            // Resolve name conflicts against every other current name.
            let conflict = |candidate: &str, names: &[String]| {
                names
                    .iter()
                    .enumerate()
                    .any(|(i, n)| n == candidate && i != current_index)
            };
            if conflict(&sheet_value.name, names) {
                let base = sheet_value.name.clone();
                let mut candidate = format!("{base}-woven");
                let mut k = 2;
                while conflict(&candidate, names) {
                    candidate = format!("{base}-woven{k}");
                    k += 1;
                }
                sheet_value.name = candidate;
            }
            names[current_index] = sheet_value.name.clone();
            renamed.insert(current_index, sheet_value.name.clone());
            plan.actions.push(WeaveAction {
                kind: ActionKind::ReplaceSheet {
                    index: current_index,
                    sheet: sheet_value,
                },
                expected_sheet: Some(old_name),
                provenance,
            });
            Ok(1)
        }
        (Position::Before | Position::After, JoinPoint::Sheet { sheet }) => {
            let mut new_sheet =
                build_sheet(wb, advice, &env.with_overlay(overlay), &provenance, None)?;
            if new_sheet.name.is_empty() {
                new_sheet.name = advice.name.clone().unwrap_or_else(|| {
                    format!(
                        "{}-{}-{}",
                        provenance.aspect, provenance.position, provenance.advice_ordinal
                    )
                });
            }
            if names.contains(&new_sheet.name) {
                let base = new_sheet.name.clone();
                let mut k = 2;
                let mut candidate = format!("{base}-{k}");
                while names.contains(&candidate) {
                    k += 1;
                    candidate = format!("{base}-{k}");
                }
                new_sheet.name = candidate;
            }
            let current = tracker.current_sheet(*sheet);
            let index = if advice.position == Position::Before {
                current
            } else {
                current + 1
            };
            names.insert(index, new_sheet.name.clone());
            tracker.events.push(Event::SheetInsert { index });
            plan.actions.push(WeaveAction {
                kind: ActionKind::InsertSheet {
                    index,
                    sheet: new_sheet,
                },
                expected_sheet: None,
                provenance,
            });
            Ok(1)
        }
        (position, JoinPoint::Cell { addr, .. }) => {
            let side = side_of(position).ok_or_else(|| invalid_body(&provenance))?;
            let AdviceBody::Template(tpl) = &advice.body else {
                return Err(invalid_body(&provenance));
            };
            let content = eval_template(&env.with_overlay(overlay), tpl).map_err(|source| {
                WeaveError::Template {
                    provenance: provenance.clone(),
                    source,
                }
            })?;
            let at = tracker.current_addr(*addr);
            let (point, dir) = insertion_point(at, side);
            tracker.events.push(match dir {
                ShiftDir::Right => Event::ShiftRight {
                    sheet: point.sheet,
                    row: point.coord.row,
                    from: point.coord.col,
                    delta: 1,
                },
                ShiftDir::Down => Event::ShiftDown {
                    sheet: point.sheet,
                    col: point.coord.col,
                    from: point.coord.row,
                    delta: 1,
                },
            });
            let expected = expected_name(tracker, addr.sheet);
            plan.actions.push(WeaveAction {
                kind: ActionKind::InsertCell { at, side, content },
                expected_sheet: expected,
                provenance,
            });
            Ok(1)
        }
        (position, JoinPoint::Range(rect)) => {
            let side = side_of(position).ok_or_else(|| invalid_body(&provenance))?;
            let block = body_block(advice, &env.with_overlay(overlay), &provenance)?;
            // Insertions alongside a rect must span it: left/right blocks
            // match its height, above/below blocks match its width.
            let (block, width, height) = match side {
                Side::Left | Side::Right => {
                    fit_block(&block, rect.height(), u32::MAX, &provenance)?;
                    let w = block_width(&block);
                    (pad_block(block, rect.height(), w), w, rect.height())
                }
                Side::Above | Side::Below => {
                    fit_block(&block, u32::MAX, rect.width(), &provenance)?;
                    let h = block.len() as u32;
                    (pad_block(block, h, rect.width()), rect.width(), h)
                }
            };
            let current = tracker
                .current_rect(*rect)
                .ok_or_else(|| WeaveError::TornRange {
                    provenance: provenance.clone(),
                })?;
            match side {
                Side::Left | Side::Right => {
                    for r in 0..height {
                        let row = current.start.row + r;
                        let from = if side == Side::Left {
                            current.start.col
                        } else {
                            current.end.col + 1
                        };
                        tracker.events.push(Event::ShiftRight {
                            sheet: current.sheet,
                            row,
                            from,
                            delta: width,
                        });
                    }
                }
                Side::Above | Side::Below => {
                    for c in 0..width {
                        let col = current.start.col + c;
                        let from = if side == Side::Above {
                            current.start.row
                        } else {
                            current.end.row + 1
                        };
                        tracker.events.push(Event::ShiftDown {
                            sheet: current.sheet,
                            col,
                            from,
                            delta: height,
                        });
                    }
                }
            }
            let expected = expected_name(tracker, rect.sheet);
            plan.actions.push(WeaveAction {
                kind: ActionKind::InsertRangeBlock {
                    rect: current,
                    side,
                    block,
                },
                expected_sheet: expected,
                provenance,
            });
            Ok(1)
        }
        (_, JoinPoint::Sheet { .. }) => Err(invalid_body(&provenance)),
    }
}

fn invalid_body(provenance: &Provenance) -> WeaveError {
    // Validation rejects these combinations up front; reaching here means
    // the caller skipped validation.
    WeaveError::Inconsistent(format!(
        "{provenance}: advice position and join point kind do not fit"
    ))
}

/// Evaluate an advice body into a rectangular block of contents. Cell-list
/// addresses are relative to A1; a plain template is a 1x1 block.
fn body_block(
    advice: &crate::aspect::Advice,
    env: &crate::matcher::BindingEnv,
    provenance: &Provenance,
) -> Result<Vec<Vec<CellContent>>, WeaveError> {
    let eval = |tpl: &Template| {
        eval_template(env, tpl).map_err(|source| WeaveError::Template {
            provenance: provenance.clone(),
            source,
        })
    };
    match &advice.body {
        AdviceBody::Template(tpl) => Ok(vec![vec![eval(tpl)?]]),
        AdviceBody::CellList(cells) => {
            let height = cells.iter().map(|(c, _)| c.row + 1).max().unwrap_or(0);
            let width = cells.iter().map(|(c, _)| c.col + 1).max().unwrap_or(0);
            let mut block =
                vec![vec![CellContent::Empty; width as usize]; height as usize];
            for (coord, tpl) in cells {
                block[coord.row as usize][coord.col as usize] = eval(tpl)?;
            }
            Ok(block)
        }
        AdviceBody::CopySheet(_) => Err(invalid_body(provenance)),
    }
}

fn block_width(block: &[Vec<CellContent>]) -> u32 {
    block.iter().map(|row| row.len() as u32).max().unwrap_or(0)
}

fn fit_block(
    block: &[Vec<CellContent>],
    max_height: u32,
    max_width: u32,
    provenance: &Provenance,
) -> Result<(), WeaveError> {
    let height = block.len() as u32;
    let width = block_width(block);
    if height > max_height {
        return Err(WeaveError::BlockTooBig {
            provenance: provenance.clone(),
            axis: "tall",
            got: height,
            want: max_height,
        });
    }
    if width > max_width {
        return Err(WeaveError::BlockTooBig {
            provenance: provenance.clone(),
            axis: "wide",
            got: width,
            want: max_width,
        });
    }
    Ok(())
}

/// Pad a ragged block with empty cells to exactly height x width.
fn pad_block(
    mut block: Vec<Vec<CellContent>>,
    height: u32,
    width: u32,
) -> Vec<Vec<CellContent>> {
    for row in &mut block {
        row.resize(width as usize, CellContent::Empty);
    }
    block.resize(height as usize, vec![CellContent::Empty; width as usize]);
    block
}

/// Build a worksheet from a sheet-advice body: either the listed cells or a
/// copy of an existing sheet. `keep_name` carries the replaced sheet's name
/// for around advice with a cell-list body.
fn build_sheet(
    wb: &Workbook,
    advice: &crate::aspect::Advice,
    env: &crate::matcher::BindingEnv,
    provenance: &Provenance,
    keep_name: Option<&str>,
) -> Result<Worksheet, WeaveError> {
    match &advice.body {
        AdviceBody::CellList(cells) => {
            let mut sheet = Worksheet::new(keep_name.unwrap_or_default());
            for (coord, tpl) in cells {
                let content =
                    eval_template(env, tpl).map_err(|source| WeaveError::Template {
                        provenance: provenance.clone(),
                        source,
                    })?;
                sheet.set(*coord, content);
            }
            Ok(sheet)
        }
        AdviceBody::CopySheet(name) => {
            let Some(index) = wb.sheet_index(name) else {
                return Err(WeaveError::CopySourceMissing {
                    provenance: provenance.clone(),
                    name: name.clone(),
                });
            };
            Ok(wb.sheet(index).clone())
        }
        AdviceBody::Template(_) => Err(invalid_body(provenance)),
    }
}

/// Apply a plan built from this workbook snapshot. Returns a new workbook;
/// the input is untouched.
pub fn apply_plan(wb: &Workbook, plan: &WeavePlan) -> Result<Workbook, WeaveError> {
    let mut out = wb.clone();
    for action in &plan.actions {
        if let Some(expected) = &action.expected_sheet {
            let index = match &action.kind {
                ActionKind::ReplaceCell { addr, .. } | ActionKind::InsertCell { at: addr, .. } => {
                    addr.sheet
                }
                ActionKind::InsertRangeBlock { rect, .. } => rect.sheet,
                ActionKind::InsertSheet { index, .. } | ActionKind::ReplaceSheet { index, .. } => {
                    *index
                }
            };
            let found = out.sheets().get(index).map(|s| s.name.as_str());
            if found != Some(expected.as_str()) {
                return Err(WeaveError::Inconsistent(format!(
                    "{}: expected sheet {:?} at index {}, found {:?}",
                    action.provenance,
                    expected,
                    index,
                    found.unwrap_or("<none>")
                )));
            }
        }
        out = apply_action(out, action)?;
    }
    Ok(out)
}

fn apply_action(mut wb: Workbook, action: &WeaveAction) -> Result<Workbook, WeaveError> {
    match &action.kind {
        ActionKind::ReplaceCell { addr, content } => {
            wb.sheet_mut(addr.sheet).set(addr.coord, content.clone());
            Ok(wb)
        }
        ActionKind::InsertCell { at, side, content } => {
            let (point, dir) = insertion_point(*at, *side);
            Ok(wb.insert_cell_shift(point, dir, content.clone()))
        }
        ActionKind::InsertRangeBlock { rect, side, block } => {
            let mut cur = wb;
            match side {
                Side::Left | Side::Right => {
                    for (i, row_cells) in block.iter().enumerate() {
                        let row = rect.start.row + i as u32;
                        for (k, content) in row_cells.iter().enumerate() {
                            let col = if *side == Side::Left {
                                rect.start.col + k as u32
                            } else {
                                rect.end.col + 1 + k as u32
                            };
                            cur = cur.insert_cell_shift(
                                CellAddr::new(rect.sheet, CellCoord { row, col }),
                                ShiftDir::Right,
                                content.clone(),
                            );
                        }
                    }
                }
                Side::Above | Side::Below => {
                    for (i, row_cells) in block.iter().enumerate() {
                        for (j, content) in row_cells.iter().enumerate() {
                            let row = if *side == Side::Above {
                                rect.start.row + i as u32
                            } else {
                                rect.end.row + 1 + i as u32
                            };
                            let col = rect.start.col + j as u32;
                            cur = cur.insert_cell_shift(
                                CellAddr::new(rect.sheet, CellCoord { row, col }),
                                ShiftDir::Down,
                                content.clone(),
                            );
                        }
                    }
                }
            }
            Ok(cur)
        }
        ActionKind::InsertSheet { index, sheet } => wb
            .insert_sheet_at(*index, sheet.clone())
            .map_err(|e| WeaveError::Inconsistent(e.to_string())),
        ActionKind::ReplaceSheet { index, sheet } => wb
            .replace_sheet_at(*index, sheet.clone())
            .map_err(|e| WeaveError::Inconsistent(e.to_string())),
    }
}

/// Weave aspects into a workbook, in order, each against the output of the
/// previous. Returns the woven workbook and a per-advice report; the input
/// workbook is never modified.
pub fn weave(wb: &Workbook, aspects: &[AspectDef]) -> Result<(Workbook, WeaveReport), WeaveError> {
    for aspect in aspects {
        let diagnostics = validate(aspect);
        if !diagnostics.is_empty() {
            return Err(WeaveError::InvalidAspect {
                aspect: aspect.name.clone(),
                diagnostics,
            });
        }
    }

    let mut current = wb.clone();
    let mut reports = Vec::new();
    for aspect in aspects {
        let grid = evaluate_workbook(&current);
        let (plan, report) = plan_aspect(&current, &grid, aspect)?;
        current = apply_plan(&current, &plan)?;
        reports.push(report);
    }

    let final_grid = evaluate_workbook(&current);
    let summary = FinalSummary {
        sheets: current.sheet_count(),
        cells: final_grid.len(),
        error_cells: final_grid.iter().filter(|(_, v)| v.is_error()).count(),
    };
    Ok((
        current,
        WeaveReport {
            aspects: reports,
            final_state: summary,
        },
    ))
}
