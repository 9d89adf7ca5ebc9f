//! Aspect source parser.
//!
//! Hand-rolled scanner with three sub-languages: the pointcut/advice
//! structure, expression syntax for guards and interpolations, and raw
//! template bodies where everything between `{` and the matching `}` is
//! cell content except `#{...}` interpolations.
//!
//! Accepted beyond the core grammar: `worksheet` as a synonym for `sheet`
//! (canonicalized to `sheet`), `=` alongside `==` for equality, `//` line
//! comments outside template bodies, index range selectors (`row{2}`,
//! `range{row=2}`), and a `copy <sheet>` body form for duplicating a sheet.

use thiserror::Error;

use super::{
    Advice, AdviceBody, AspectDef, AspectExpr, AttrPath, Axis, CellPat, PathSeg, Pointcut,
    Position, RangeKeyword, RangePat, RangeSel, Segment, SheetPat, Template,
};
use crate::formula::CmpOp;
use crate::workbook::CellCoord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("aspect syntax error at line {line}, column {col}: {message}")]
pub struct AspectParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

const POSITIONS: &[(&str, Position)] = &[
    ("left", Position::Left),
    ("above", Position::Above),
    ("right", Position::Right),
    ("below", Position::Below),
    ("around", Position::Around),
    ("before", Position::Before),
    ("after", Position::After),
];

fn position_of(word: &str) -> Option<Position> {
    POSITIONS
        .iter()
        .find(|(w, _)| *w == word)
        .map(|(_, p)| *p)
}

const RESERVED: &[&str] = &[
    "aspect", "end", "select", "when", "sheet", "worksheet", "range", "column", "row", "cell",
    "name", "number", "match", "copy", "left", "above", "right", "below", "around", "before",
    "after", "true", "false",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.peek()?;
        self.pos += ch.len_utf8();
        Some(ch)
    }

    fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    /// Skip whitespace and `//` comments.
    fn skip_trivia(&mut self) {
        loop {
            let before = self.pos;
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            if self.rest().starts_with("//") {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            }
            if self.pos == before {
                return;
            }
        }
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> AspectParseError {
        let upto = &self.src[..pos.min(self.src.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.chars().rev().take_while(|&c| c != '\n').count() + 1;
        AspectParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> AspectParseError {
        self.error_at(self.pos, message)
    }

    fn line_at(&self, pos: usize) -> usize {
        self.src[..pos.min(self.src.len())].matches('\n').count() + 1
    }

    fn word(&mut self) -> Option<String> {
        let start = self.pos;
        let first = self.peek()?;
        if !(first.is_ascii_alphabetic() || first == '_') {
            return None;
        }
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.bump();
        }
        Some(self.src[start..self.pos].to_string())
    }

    fn expect_word(&mut self, expected: &str) -> Result<(), AspectParseError> {
        self.skip_trivia();
        let at = self.pos;
        match self.word() {
            Some(w) if w == expected => Ok(()),
            Some(w) => Err(self.error_at(at, format!("expected {expected:?}, found {w:?}"))),
            None => Err(self.error_at(at, format!("expected {expected:?}"))),
        }
    }

    fn expect_char(&mut self, expected: char) -> Result<(), AspectParseError> {
        self.skip_trivia();
        if self.eat(expected) {
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {expected:?}, found {:?}",
                self.peek().map(String::from).unwrap_or_default()
            )))
        }
    }

    /// Quoted string with `\"`, `\\`, `\n` escapes.
    fn string_lit(&mut self) -> Result<String, AspectParseError> {
        let start = self.pos;
        if !self.eat('"') {
            return Err(self.error("expected a quoted string"));
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error_at(start, "unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('#') => out.push('#'),
                    _ => {
                        return Err(
                            self.error("unknown escape; expected \\\" \\\\ \\n or \\#")
                        )
                    }
                },
                Some(ch) => out.push(ch),
            }
        }
    }

    fn number_lit(&mut self) -> Result<f64, AspectParseError> {
        let start = self.pos;
        self.eat('-');
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.eat('.') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .ok()
            .filter(|n| n.is_finite())
            .ok_or_else(|| self.error_at(start, format!("invalid number {text:?}")))
    }

    fn integer_lit(&mut self) -> Result<i64, AspectParseError> {
        let start = self.pos;
        self.eat('-');
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        self.src[start..self.pos]
            .parse::<i64>()
            .map_err(|_| self.error_at(start, "expected an integer"))
    }

    fn comparator(&mut self) -> Result<CmpOp, AspectParseError> {
        self.skip_trivia();
        if self.eat_str("==") {
            Ok(CmpOp::Eq)
        } else if self.eat_str("<>") {
            Ok(CmpOp::Ne)
        } else if self.eat_str("<=") {
            Ok(CmpOp::Le)
        } else if self.eat_str(">=") {
            Ok(CmpOp::Ge)
        } else if self.eat('=') {
            Ok(CmpOp::Eq)
        } else if self.eat('<') {
            Ok(CmpOp::Lt)
        } else if self.eat('>') {
            Ok(CmpOp::Gt)
        } else {
            Err(self.error("expected a comparator (= == <> < <= > >=)"))
        }
    }

    fn peek_comparator(&self) -> bool {
        matches!(self.peek(), Some('=' | '<' | '>'))
    }
}

/// Parse a source file containing exactly one aspect.
pub fn parse_aspect(src: &str) -> Result<AspectDef, AspectParseError> {
    let mut scanner = Scanner::new(src);
    let aspect = parse_one(&mut scanner)?;
    scanner.skip_trivia();
    if scanner.peek().is_some() {
        return Err(scanner.error("unexpected content after 'end'"));
    }
    Ok(aspect)
}

/// Parse a source file containing one or more aspects.
pub fn parse_aspects(src: &str) -> Result<Vec<AspectDef>, AspectParseError> {
    let mut scanner = Scanner::new(src);
    let mut out = Vec::new();
    loop {
        scanner.skip_trivia();
        if scanner.peek().is_none() {
            return Ok(out);
        }
        out.push(parse_one(&mut scanner)?);
    }
}

fn parse_one(s: &mut Scanner) -> Result<AspectDef, AspectParseError> {
    s.expect_word("aspect")?;
    s.skip_trivia();
    let name = parse_name(s)?;

    let mut pointcuts: Vec<Pointcut> = Vec::new();
    let mut advice: Vec<Advice> = Vec::new();
    loop {
        s.skip_trivia();
        let at = s.pos;
        let Some(word) = s.word() else {
            return Err(s.error("expected a pointcut, advice, or 'end'"));
        };
        if word == "end" {
            break;
        }

        if position_of(&word).is_some() {
            advice.push(parse_advice(s, None, &word, at)?);
            continue;
        }

        // A named entry: `name : select ...` or `name : <position> ...`.
        if RESERVED.contains(&word.as_str()) {
            return Err(s.error_at(at, format!("{word:?} is a reserved word")));
        }
        s.expect_char(':')?;
        s.skip_trivia();
        let kw_at = s.pos;
        let Some(kw) = s.word() else {
            return Err(s.error("expected 'select' or an advice position"));
        };
        if kw == "select" {
            if !advice.is_empty() {
                return Err(s.error_at(at, "pointcuts must be declared before advice"));
            }
            if pointcuts.iter().any(|p| p.name == word) {
                return Err(s.error_at(at, format!("duplicate pointcut name {word:?}")));
            }
            let line = s.line_at(at);
            pointcuts.push(parse_pointcut(s, word, line)?);
        } else if position_of(&kw).is_some() {
            advice.push(parse_advice(s, Some(word), &kw, at)?);
        } else {
            return Err(s.error_at(
                kw_at,
                format!("expected 'select' or an advice position, found {kw:?}"),
            ));
        }
    }

    if pointcuts.is_empty() {
        return Err(s.error("an aspect needs at least one pointcut"));
    }
    if advice.is_empty() {
        return Err(s.error("an aspect needs at least one advice"));
    }
    Ok(AspectDef {
        name,
        pointcuts,
        advice,
    })
}

fn parse_name(s: &mut Scanner) -> Result<String, AspectParseError> {
    s.skip_trivia();
    if s.peek() == Some('"') {
        return s.string_lit();
    }
    let at = s.pos;
    match s.word() {
        Some(w) if RESERVED.contains(&w.as_str()) => {
            Err(s.error_at(at, format!("{w:?} is a reserved word")))
        }
        Some(w) => Ok(w),
        None => Err(s.error("expected an aspect name")),
    }
}

fn parse_pointcut(s: &mut Scanner, name: String, line: usize) -> Result<Pointcut, AspectParseError> {
    s.skip_trivia();
    let at = s.pos;
    let Some(kw) = s.word() else {
        return Err(s.error("expected 'sheet'"));
    };
    if kw != "sheet" && kw != "worksheet" {
        return Err(s.error_at(at, format!("a pointcut starts with 'sheet', found {kw:?}")));
    }
    let sheet = parse_sheet_pat(s)?;

    let mut range = None;
    let mut cell = None;
    while {
        s.skip_trivia();
        s.eat('.')
    } {
        s.skip_trivia();
        let at = s.pos;
        let Some(part) = s.word() else {
            return Err(s.error("expected 'range', 'column', 'row', or 'cell'"));
        };
        match part.as_str() {
            "range" | "column" | "row" => {
                if range.is_some() || cell.is_some() {
                    return Err(s.error_at(at, "range pattern must come right after the sheet"));
                }
                let keyword = match part.as_str() {
                    "range" => RangeKeyword::Range,
                    "column" => RangeKeyword::Column,
                    _ => RangeKeyword::Row,
                };
                range = Some(parse_range_pat(s, keyword)?);
            }
            "cell" => {
                if cell.is_some() {
                    return Err(s.error_at(at, "duplicate cell pattern"));
                }
                cell = Some(parse_cell_pat(s)?);
            }
            other => {
                return Err(s.error_at(
                    at,
                    format!("expected 'range', 'column', 'row', or 'cell', found {other:?}"),
                ))
            }
        }
    }

    Ok(Pointcut {
        name,
        sheet,
        range,
        cell,
        line,
    })
}

fn parse_sheet_pat(s: &mut Scanner) -> Result<SheetPat, AspectParseError> {
    s.expect_char('{')?;
    s.skip_trivia();
    let pat = if s.eat('*') {
        SheetPat::Any
    } else {
        let at = s.pos;
        match s.word().as_deref() {
            Some("name") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                SheetPat::Name(cmp, s.string_lit()?)
            }
            Some("number") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                SheetPat::Number(cmp, s.integer_lit()?)
            }
            _ => return Err(s.error_at(at, "expected '*', 'name', or 'number'")),
        }
    };
    s.expect_char('}')?;
    Ok(pat)
}

fn parse_range_pat(s: &mut Scanner, keyword: RangeKeyword) -> Result<RangePat, AspectParseError> {
    s.expect_char('{')?;
    s.skip_trivia();
    let sel = if s.eat('*') {
        RangeSel::Any
    } else if s.peek_comparator() || s.peek().is_some_and(|c| c.is_ascii_digit() || c == '-') {
        // Bare index selector: `row{2}` or `row{>=2}`.
        let axis = match keyword {
            RangeKeyword::Row => Axis::Row,
            RangeKeyword::Column => Axis::Col,
            RangeKeyword::Range => {
                return Err(s.error(
                    "an index inside range{...} needs an axis: use range{row=N} or range{column=N}",
                ))
            }
        };
        let cmp = if s.peek_comparator() {
            s.comparator()?
        } else {
            CmpOp::Eq
        };
        s.skip_trivia();
        RangeSel::Index {
            axis,
            cmp,
            n: s.integer_lit()?,
        }
    } else {
        let at = s.pos;
        match s.word().as_deref() {
            Some("name") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                RangeSel::Name(cmp, s.string_lit()?)
            }
            Some("row") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                RangeSel::Index {
                    axis: Axis::Row,
                    cmp,
                    n: s.integer_lit()?,
                }
            }
            Some("column") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                RangeSel::Index {
                    axis: Axis::Col,
                    cmp,
                    n: s.integer_lit()?,
                }
            }
            _ => {
                return Err(s.error_at(
                    at,
                    "expected '*', 'name', 'row', 'column', or an index",
                ))
            }
        }
    };
    s.expect_char('}')?;
    Ok(RangePat { keyword, sel })
}

fn parse_cell_pat(s: &mut Scanner) -> Result<CellPat, AspectParseError> {
    s.expect_char('{')?;
    s.skip_trivia();
    let pat = if s.eat('*') {
        CellPat::Any
    } else {
        let at = s.pos;
        match s.word().as_deref() {
            Some("name") => {
                let cmp = s.comparator()?;
                s.skip_trivia();
                CellPat::Name(cmp, s.string_lit()?)
            }
            Some("match") => {
                let cmp_at = s.pos;
                let cmp = s.comparator()?;
                if cmp != CmpOp::Eq {
                    return Err(s.error_at(cmp_at, "match patterns support only '=' comparison"));
                }
                s.skip_trivia();
                CellPat::Match(s.string_lit()?)
            }
            _ => return Err(s.error_at(at, "expected '*', 'name', or 'match'")),
        }
    };
    s.expect_char('}')?;
    Ok(pat)
}

fn parse_advice(
    s: &mut Scanner,
    name: Option<String>,
    position_word: &str,
    start: usize,
) -> Result<Advice, AspectParseError> {
    let position = position_of(position_word)
        .ok_or_else(|| s.error_at(start, format!("unknown advice position {position_word:?}")))?;
    s.skip_trivia();
    let at = s.pos;
    let Some(pointcut) = s.word() else {
        return Err(s.error("expected a pointcut name"));
    };
    if RESERVED.contains(&pointcut.as_str()) {
        return Err(s.error_at(at, format!("{pointcut:?} is a reserved word")));
    }
    s.expect_char('{')?;
    let body = parse_body(s)?;

    let guard = {
        s.skip_trivia();
        let save = s.pos;
        match s.word().as_deref() {
            Some("when") => {
                s.expect_char('{')?;
                s.skip_trivia();
                let guard = parse_guard(s)?;
                s.expect_char('}')?;
                Some(guard)
            }
            _ => {
                s.pos = save;
                None
            }
        }
    };

    Ok(Advice {
        name,
        position,
        pointcut,
        body,
        guard,
        line: s.line_at(start),
    })
}

/// Decide among the three body forms by looking just past the opening brace.
fn parse_body(s: &mut Scanner) -> Result<AdviceBody, AspectParseError> {
    let save = s.pos;
    s.skip_trivia();

    // `copy <sheet name>` duplicates a worksheet.
    let probe = s.pos;
    if let Some(word) = s.word() {
        if word == "copy" && s.peek().is_some_and(char::is_whitespace) {
            let name_start = s.pos;
            let mut depth = 0usize;
            loop {
                match s.peek() {
                    None => return Err(s.error_at(save, "unterminated advice body")),
                    Some('{') => depth += 1,
                    Some('}') if depth == 0 => break,
                    Some('}') => depth -= 1,
                    _ => {}
                }
                s.bump();
            }
            let name = s.src[name_start..s.pos].trim().to_string();
            s.bump(); // closing brace
            if name.is_empty() {
                return Err(s.error_at(probe, "'copy' needs a sheet name"));
            }
            return Ok(AdviceBody::CopySheet(name));
        }
    }
    s.pos = save;

    if probe_cell_list(s) {
        return parse_cell_list(s);
    }
    let template = scan_template(s, Terminator::CloseBrace)?;
    Ok(AdviceBody::Template(trim_template(template)))
}

/// A cell list entry looks like `A1 = "..."`; anything else is a template.
fn probe_cell_list(s: &mut Scanner) -> bool {
    let save = s.pos;
    s.skip_trivia();
    let looks = s
        .word()
        .filter(|w| CellCoord::parse_a1(w).is_ok())
        .is_some()
        && {
            s.skip_trivia();
            s.eat('=')
        }
        && {
            s.skip_trivia();
            s.peek() == Some('"')
        };
    s.pos = save;
    looks
}

fn parse_cell_list(s: &mut Scanner) -> Result<AdviceBody, AspectParseError> {
    let mut entries = Vec::new();
    loop {
        s.skip_trivia();
        let at = s.pos;
        let Some(word) = s.word() else {
            return Err(s.error("expected a cell address"));
        };
        let coord = CellCoord::parse_a1(&word)
            .map_err(|e| s.error_at(at, format!("bad cell address in cell list: {e}")))?;
        s.expect_char('=')?;
        s.skip_trivia();
        if s.peek() != Some('"') {
            return Err(s.error("expected a quoted string for the cell content"));
        }
        s.bump();
        let template = scan_template(s, Terminator::Quote)?;
        entries.push((coord, template));
        s.skip_trivia();
        if s.eat(';') {
            continue;
        }
        s.expect_char('}')?;
        return Ok(AdviceBody::CellList(entries));
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Terminator {
    /// Raw body: ends at the matching `}`; braces nest; no escapes.
    CloseBrace,
    /// Quoted cell-list string: ends at an unescaped `"`; escape sequences
    /// `\" \\ \n \#` apply; braces are plain text.
    Quote,
}

fn scan_template(s: &mut Scanner, term: Terminator) -> Result<Template, AspectParseError> {
    let start = s.pos;
    let mut segments = Vec::new();
    let mut literal = String::new();
    let mut depth = 0usize;
    loop {
        match s.peek() {
            None => {
                return Err(s.error_at(start, "unterminated advice body"));
            }
            Some('}') if term == Terminator::CloseBrace => {
                if depth == 0 {
                    s.bump();
                    break;
                }
                depth -= 1;
                literal.push('}');
                s.bump();
            }
            Some('{') if term == Terminator::CloseBrace => {
                depth += 1;
                literal.push('{');
                s.bump();
            }
            Some('"') if term == Terminator::Quote => {
                s.bump();
                break;
            }
            Some('\\') if term == Terminator::Quote => {
                s.bump();
                match s.bump() {
                    Some('"') => literal.push('"'),
                    Some('\\') => literal.push('\\'),
                    Some('n') => literal.push('\n'),
                    Some('#') => literal.push('#'),
                    _ => {
                        return Err(s.error("unknown escape; expected \\\" \\\\ \\n or \\#"));
                    }
                }
            }
            Some('#') if s.rest().starts_with("#{") => {
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                s.pos += 2;
                let expr = match term {
                    Terminator::CloseBrace => {
                        let expr = parse_expr(s, true)?;
                        s.skip_trivia();
                        if !s.eat('}') {
                            return Err(s.error("expected '}' to close the interpolation"));
                        }
                        expr
                    }
                    Terminator::Quote => parse_interp_in_string(s)?,
                };
                segments.push(Segment::Interp(expr));
            }
            Some(ch) => {
                literal.push(ch);
                s.bump();
            }
        }
    }
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    Ok(Template { segments })
}

/// Inside a quoted cell-list string, decode the interpolation span (its
/// string literals arrive escaped as `\"..\"`) and parse it standalone.
/// Decoding tracks two escape levels: the outer string's backslashes and,
/// once decoded, the expression's own string syntax.
fn parse_interp_in_string(s: &mut Scanner) -> Result<AspectExpr, AspectParseError> {
    let start = s.pos;
    let mut decoded = String::new();
    let mut in_inner_string = false;
    let mut expr_escape = false;
    loop {
        match s.peek() {
            None => return Err(s.error_at(start, "unterminated interpolation")),
            Some('}') if !in_inner_string => {
                s.bump();
                break;
            }
            Some('\\') => {
                s.bump();
                let ch = match s.bump() {
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some('n') => '\n',
                    Some('#') => '#',
                    _ => return Err(s.error("unknown escape in interpolation")),
                };
                if in_inner_string {
                    if expr_escape {
                        expr_escape = false;
                    } else if ch == '\\' {
                        expr_escape = true;
                    } else if ch == '"' {
                        in_inner_string = false;
                    }
                } else if ch == '"' {
                    in_inner_string = true;
                }
                decoded.push(ch);
            }
            Some('"') => {
                return Err(s.error_at(
                    start,
                    "unterminated interpolation (string literals inside it use \\\")",
                ))
            }
            Some(ch) => {
                decoded.push(ch);
                s.bump();
            }
        }
    }
    let mut sub = Scanner::new(&decoded);
    let expr = parse_expr(&mut sub, true).map_err(|e| {
        s.error_at(start, format!("in interpolation: {}", e.message))
    })?;
    sub.skip_trivia();
    if sub.peek().is_some() {
        return Err(s.error_at(start, "unexpected content after interpolation expression"));
    }
    Ok(expr)
}

fn trim_template(mut template: Template) -> Template {
    if let Some(Segment::Literal(first)) = template.segments.first_mut() {
        *first = first.trim_start().to_string();
    }
    if let Some(Segment::Literal(last)) = template.segments.last_mut() {
        *last = last.trim_end().to_string();
    }
    template
        .segments
        .retain(|seg| !matches!(seg, Segment::Literal(s) if s.is_empty()));
    template
}

/// Guards are boolean expressions: a comparison, `&&`, `||`, or `!` at the
/// root; no ternary anywhere.
fn parse_guard(s: &mut Scanner) -> Result<AspectExpr, AspectParseError> {
    let at = s.pos;
    let expr = parse_expr(s, false)?;
    match expr {
        AspectExpr::Compare { .. }
        | AspectExpr::And(..)
        | AspectExpr::Or(..)
        | AspectExpr::Not(..) => Ok(expr),
        _ => Err(s.error_at(
            at,
            "a guard must be a boolean expression (comparison, &&, ||, or !)",
        )),
    }
}

fn parse_expr(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    let cond = parse_or(s, allow_ternary)?;
    s.skip_trivia();
    if allow_ternary && s.eat('?') {
        let then = parse_expr(s, true)?;
        s.skip_trivia();
        if !s.eat(':') {
            return Err(s.error("expected ':' in conditional expression"));
        }
        let otherwise = parse_expr(s, true)?;
        return Ok(AspectExpr::Ternary {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        });
    }
    Ok(cond)
}

fn parse_or(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    let mut lhs = parse_and(s, allow_ternary)?;
    loop {
        s.skip_trivia();
        if s.eat_str("||") {
            let rhs = parse_and(s, allow_ternary)?;
            lhs = AspectExpr::Or(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_and(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    let mut lhs = parse_not(s, allow_ternary)?;
    loop {
        s.skip_trivia();
        if s.eat_str("&&") {
            let rhs = parse_not(s, allow_ternary)?;
            lhs = AspectExpr::And(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_not(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    s.skip_trivia();
    if s.eat('!') {
        let operand = parse_not(s, allow_ternary)?;
        return Ok(AspectExpr::Not(Box::new(operand)));
    }
    parse_comparison(s, allow_ternary)
}

fn parse_comparison(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    let lhs = parse_operand(s, allow_ternary)?;
    s.skip_trivia();
    // Don't confuse `=` with the first half of `==`; both mean equality.
    if s.peek_comparator() {
        let op = s.comparator()?;
        let rhs = parse_operand(s, allow_ternary)?;
        return Ok(AspectExpr::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        });
    }
    Ok(lhs)
}

fn parse_operand(s: &mut Scanner, allow_ternary: bool) -> Result<AspectExpr, AspectParseError> {
    s.skip_trivia();
    match s.peek() {
        Some('(') => {
            s.bump();
            let inner = parse_expr(s, allow_ternary)?;
            s.skip_trivia();
            if !s.eat(')') {
                return Err(s.error("expected ')'"));
            }
            Ok(inner)
        }
        Some('"') => Ok(AspectExpr::Str(s.string_lit()?)),
        Some(c) if c.is_ascii_digit() || c == '-' || c == '.' => {
            Ok(AspectExpr::Number(s.number_lit()?))
        }
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            let word = s.word().unwrap();
            if word == "true" {
                return Ok(AspectExpr::Bool(true));
            }
            if word == "false" {
                return Ok(AspectExpr::Bool(false));
            }
            parse_path(s, word)
        }
        _ => Err(s.error("expected a value, attribute path, or '('")),
    }
}

fn parse_path(s: &mut Scanner, first: String) -> Result<AspectExpr, AspectParseError> {
    // `worksheet` is a synonym for `sheet`, in paths too.
    let root = if first == "worksheet" {
        "sheet".to_string()
    } else {
        first
    };
    let mut segments = vec![PathSeg {
        name: root,
        index: parse_index(s)?,
    }];
    loop {
        s.skip_trivia();
        if !s.eat('.') {
            break;
        }
        s.skip_trivia();
        let Some(name) = s.word() else {
            return Err(s.error("expected an attribute name after '.'"));
        };
        segments.push(PathSeg {
            name,
            index: parse_index(s)?,
        });
    }
    Ok(AspectExpr::Path(AttrPath { segments }))
}

fn parse_index(s: &mut Scanner) -> Result<Option<u32>, AspectParseError> {
    s.skip_trivia();
    if !s.eat('[') {
        return Ok(None);
    }
    s.skip_trivia();
    let at = s.pos;
    let n = s.integer_lit()?;
    let idx = u32::try_from(n).map_err(|_| s.error_at(at, "index must not be negative"))?;
    s.skip_trivia();
    if !s.eat(']') {
        return Err(s.error("expected ']'"));
    }
    Ok(Some(idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BORDERLINE_SRC: &str = r#"aspect BorderlineCase
finalmark : select sheet{*}.column{*}.cell{*}
around finalmark {
    #{cell.result >= 4.8 && cell.result < 5 ? 5 : cell.value}
  } when {
    cell.column[0].value = "Final Mark"
  }
end
"#;

    #[test]
    fn parses_borderline_aspect() {
        let aspect = parse_aspect(BORDERLINE_SRC).unwrap();
        assert_eq!(aspect.name, "BorderlineCase");
        assert_eq!(aspect.pointcuts.len(), 1);
        let pc = &aspect.pointcuts[0];
        assert_eq!(pc.name, "finalmark");
        assert_eq!(pc.sheet, SheetPat::Any);
        assert_eq!(
            pc.range,
            Some(RangePat {
                keyword: RangeKeyword::Column,
                sel: RangeSel::Any,
            })
        );
        assert_eq!(pc.cell, Some(CellPat::Any));

        assert_eq!(aspect.advice.len(), 1);
        let adv = &aspect.advice[0];
        assert_eq!(adv.position, Position::Around);
        assert_eq!(adv.pointcut, "finalmark");
        let AdviceBody::Template(tpl) = &adv.body else {
            panic!("expected a template body");
        };
        assert_eq!(tpl.segments.len(), 1);
        let Segment::Interp(AspectExpr::Ternary { cond, .. }) = &tpl.segments[0] else {
            panic!("expected a ternary interpolation, got {:?}", tpl.segments[0]);
        };
        assert!(matches!(**cond, AspectExpr::And(..)));

        let guard = adv.guard.as_ref().expect("guard present");
        let AspectExpr::Compare { op, lhs, rhs } = guard else {
            panic!("guard should be a comparison");
        };
        assert_eq!(*op, CmpOp::Eq);
        let AspectExpr::Path(path) = &**lhs else {
            panic!("guard lhs should be a path");
        };
        assert_eq!(path.to_text(), "cell.column[0].value");
        assert_eq!(**rhs, AspectExpr::Str("Final Mark".into()));
    }

    #[test]
    fn advice_required() {
        let err = parse_aspect("aspect E\np: select sheet{*}\nend\n").unwrap_err();
        assert!(err.message.contains("at least one advice"), "{err}");
    }

    #[test]
    fn pointcut_required() {
        // With no pointcut, the advice position word is not `select`.
        let err = parse_aspect("aspect E\nleft p { x }\nend\n").unwrap_err();
        assert!(err.message.contains("at least one pointcut"), "{err}");
    }

    #[test]
    fn worksheet_synonym_and_number_pattern() {
        let a =
            parse_aspect("aspect A\np: select worksheet{number=2}\naround p { copy Sheet1 }\nend")
                .unwrap();
        assert_eq!(a.pointcuts[0].sheet, SheetPat::Number(CmpOp::Eq, 2));
        assert_eq!(a.advice[0].body, AdviceBody::CopySheet("Sheet1".into()));
    }

    #[test]
    fn range_index_selectors() {
        let a = parse_aspect(
            "aspect A\np: select sheet{*}.range{row=1}.cell{*}\nq: select sheet{*}.row{2}\nr: select sheet{*}.column{>=3}\naround p { x }\nend",
        )
        .unwrap();
        assert_eq!(
            a.pointcuts[0].range.as_ref().unwrap().sel,
            RangeSel::Index {
                axis: Axis::Row,
                cmp: CmpOp::Eq,
                n: 1
            }
        );
        assert_eq!(a.pointcuts[0].range.as_ref().unwrap().keyword, RangeKeyword::Range);
        assert_eq!(
            a.pointcuts[1].range.as_ref().unwrap().sel,
            RangeSel::Index {
                axis: Axis::Row,
                cmp: CmpOp::Eq,
                n: 2
            }
        );
        assert_eq!(
            a.pointcuts[2].range.as_ref().unwrap().sel,
            RangeSel::Index {
                axis: Axis::Col,
                cmp: CmpOp::Ge,
                n: 3
            }
        );
    }

    #[test]
    fn cell_list_bodies() {
        let a = parse_aspect(
            "aspect A\np: select sheet{*}\nbefore p { A1=\"Title\"; B2=\"=SUM(#{sheet.number})\" }\nend",
        )
        .unwrap();
        let AdviceBody::CellList(cells) = &a.advice[0].body else {
            panic!("expected cell list");
        };
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].0, CellCoord::parse_a1("A1").unwrap());
        assert_eq!(cells[0].1, Template::literal("Title"));
        // "=SUM(" + interpolation + ")"
        assert_eq!(cells[1].1.segments.len(), 3);
    }

    #[test]
    fn cell_list_string_with_escaped_inner_string() {
        let a = parse_aspect(
            "aspect A\np: select sheet{*}\nbefore p { A1=\"#{cell.value = \\\"x\\\" ? 1 : 2}\" }\nend",
        )
        .unwrap();
        let AdviceBody::CellList(cells) = &a.advice[0].body else {
            panic!("expected cell list");
        };
        let Segment::Interp(AspectExpr::Ternary { cond, .. }) = &cells[0].1.segments[0] else {
            panic!("expected ternary");
        };
        let AspectExpr::Compare { rhs, .. } = &**cond else {
            panic!("expected comparison");
        };
        assert_eq!(**rhs, AspectExpr::Str("x".into()));
    }

    #[test]
    fn template_keeps_interior_whitespace() {
        let a = parse_aspect("aspect A\np: select sheet{*}.cell{*}\naround p {  ECTS Mark  }\nend")
            .unwrap();
        assert_eq!(
            a.advice[0].body,
            AdviceBody::Template(Template::literal("ECTS Mark"))
        );
    }

    #[test]
    fn guard_must_be_boolean() {
        let err = parse_aspect(
            "aspect A\np: select sheet{*}.cell{*}\naround p { x } when { cell.name }\nend",
        )
        .unwrap_err();
        assert!(err.message.contains("boolean"), "{err}");
        let err = parse_aspect(
            "aspect A\np: select sheet{*}.cell{*}\naround p { x } when { cell.row = 0 ? 1 : 2 }\nend",
        )
        .unwrap_err();
        assert!(err.line >= 3, "{err}");
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_aspect("aspect A\np: select shoot{*}\nleft p { x }\nend").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.col > 1);
        let err = parse_aspect("aspect A\np: select sheet{*}.cell{*}\nleft p { #{cell.name ").unwrap_err();
        assert!(err.message.contains("expected"), "{err}");
    }

    #[test]
    fn comments_are_skipped_outside_bodies() {
        let a = parse_aspect(
            "// header\naspect A // name\np: select sheet{*}.cell{*} // all cells\naround p { // not a comment }\nend",
        )
        .unwrap();
        // The body is raw text: the comment marker is content there.
        assert_eq!(
            a.advice[0].body,
            AdviceBody::Template(Template::literal("// not a comment"))
        );
    }

    #[test]
    fn multiple_aspects_per_source() {
        let src = "aspect A\np: select sheet{*}\naround p { copy X }\nend\naspect B\nq: select sheet{*}\nafter q { A1=\"1\" }\nend\n";
        let all = parse_aspects(src).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].name, "B");
        assert!(parse_aspect(src).is_err());
    }
}
