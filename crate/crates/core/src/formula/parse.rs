//! Recursive descent parser for formula text.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! formula    --> "=" or_expr
//! or_expr    --> and_expr ( "||" and_expr )*
//! and_expr   --> comparison ( "&&" comparison )*
//! comparison --> concat ( ("=" | "==" | "<>" | "<" | "<=" | ">" | ">=") concat )*
//! concat     --> additive ( "&" additive )*
//! additive   --> term ( ("+" | "-") term )*
//! term       --> unary ( ("*" | "/") unary )*
//! unary      --> ("-" | "!") unary | primary
//! primary    --> NUMBER | STRING | TRUE | FALSE | ERROR | reference
//!              | IDENT "(" args? ")" | "(" or_expr ")"
//! reference  --> (sheet "!")? CELL (":" CELL)?
//! ```
//!
//! `=` and `==` both mean equality; the printer always emits `=`.

use thiserror::Error;

use super::ast::{BinOp, ErrorKind, Expr, UnOp};
use crate::workbook::addr::CellCoord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("formula syntax error at offset {offset}: {message}")]
pub struct FormulaError {
    /// Byte offset into the formula source (including the leading `=`).
    pub offset: usize,
    pub message: String,
}

impl FormulaError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        FormulaError {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Text(String),
    Ident(String),
    QuotedSheet(String),
    ErrorLit(ErrorKind),
    Plus,
    Minus,
    Star,
    Slash,
    Ampersand,
    AndAnd,
    OrOr,
    Bang,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    Comma,
    Colon,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Result<(Token, usize), FormulaError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((Token::End, start));
        }
        let b = self.bytes[self.pos];
        let two = self.src.get(self.pos..self.pos + 2);
        let tok = match b {
            b'&' if two == Some("&&") => {
                self.pos += 2;
                Token::AndAnd
            }
            b'|' if two == Some("||") => {
                self.pos += 2;
                Token::OrOr
            }
            b'<' if two == Some("<=") => {
                self.pos += 2;
                Token::Le
            }
            b'<' if two == Some("<>") => {
                self.pos += 2;
                Token::Ne
            }
            b'>' if two == Some(">=") => {
                self.pos += 2;
                Token::Ge
            }
            b'=' if two == Some("==") => {
                self.pos += 2;
                Token::Eq
            }
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'&' => {
                self.pos += 1;
                Token::Ampersand
            }
            b'!' => {
                self.pos += 1;
                Token::Bang
            }
            b'=' => {
                self.pos += 1;
                Token::Eq
            }
            b'<' => {
                self.pos += 1;
                Token::Lt
            }
            b'>' => {
                self.pos += 1;
                Token::Gt
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b',' => {
                self.pos += 1;
                Token::Comma
            }
            b':' => {
                self.pos += 1;
                Token::Colon
            }
            b'"' => self.lex_string()?,
            b'\'' => self.lex_quoted_sheet()?,
            b'#' => self.lex_error_literal()?,
            b'0'..=b'9' | b'.' => self.lex_number()?,
            _ if b.is_ascii_alphabetic() || b == b'_' => self.lex_ident(),
            _ => {
                return Err(FormulaError::new(
                    start,
                    format!("unexpected character {:?}", self.src[start..].chars().next().unwrap()),
                ))
            }
        };
        Ok((tok, start))
    }

    fn lex_string(&mut self) -> Result<Token, FormulaError> {
        let start = self.pos;
        self.pos += 1; // opening quote
        let mut out = String::new();
        loop {
            let Some(&b) = self.bytes.get(self.pos) else {
                return Err(FormulaError::new(start, "unterminated string literal"));
            };
            match b {
                b'"' => {
                    self.pos += 1;
                    return Ok(Token::Text(out));
                }
                b'\\' => {
                    let esc = self.bytes.get(self.pos + 1).copied();
                    match esc {
                        Some(b'"') => out.push('"'),
                        Some(b'\\') => out.push('\\'),
                        Some(b'n') => out.push('\n'),
                        _ => {
                            return Err(FormulaError::new(
                                self.pos,
                                "unknown escape; expected \\\" \\\\ or \\n",
                            ))
                        }
                    }
                    self.pos += 2;
                }
                _ => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    out.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
    }

    fn lex_quoted_sheet(&mut self) -> Result<Token, FormulaError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(&b) = self.bytes.get(self.pos) else {
                return Err(FormulaError::new(start, "unterminated sheet name"));
            };
            if b == b'\'' {
                if self.bytes.get(self.pos + 1) == Some(&b'\'') {
                    out.push('\'');
                    self.pos += 2;
                } else {
                    self.pos += 1;
                    return Ok(Token::QuotedSheet(out));
                }
            } else {
                let ch = self.src[self.pos..].chars().next().unwrap();
                out.push(ch);
                self.pos += ch.len_utf8();
            }
        }
    }

    fn lex_error_literal(&mut self) -> Result<Token, FormulaError> {
        let start = self.pos;
        for kind in [
            ErrorKind::Div0,
            ErrorKind::Ref,
            ErrorKind::Name,
            ErrorKind::Value,
            ErrorKind::Cycle,
        ] {
            let text = kind.as_str();
            if self.src[start..].starts_with(text) {
                self.pos += text.len();
                return Ok(Token::ErrorLit(kind));
            }
        }
        Err(FormulaError::new(start, "unknown error literal"))
    }

    fn lex_number(&mut self) -> Result<Token, FormulaError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self
                .bytes
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_digit())
            {
                self.pos += 1;
            }
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let mut probe = self.pos + 1;
            if matches!(self.bytes.get(probe), Some(b'+') | Some(b'-')) {
                probe += 1;
            }
            if self.bytes.get(probe).is_some_and(|b| b.is_ascii_digit()) {
                self.pos = probe;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit())
                {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| FormulaError::new(start, format!("invalid number {text:?}")))?;
        if !value.is_finite() {
            return Err(FormulaError::new(start, format!("number {text:?} overflows")));
        }
        Ok(Token::Number(value))
    }

    fn lex_ident(&mut self) -> Token {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        Token::Ident(self.src[start..self.pos].to_string())
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, FormulaError> {
        let mut lexer = Lexer::new(src);
        let (current, offset) = lexer.next_token()?;
        Ok(Parser {
            lexer,
            current,
            offset,
        })
    }

    fn advance(&mut self) -> Result<(), FormulaError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.current = tok;
        self.offset = offset;
        Ok(())
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), FormulaError> {
        if self.current == tok {
            self.advance()
        } else {
            Err(FormulaError::new(
                self.offset,
                format!("expected {what}, found {:?}", self.current),
            ))
        }
    }

    fn parse_or(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_and()?;
        while self.current == Token::OrOr {
            self.advance()?;
            let rhs = self.parse_and()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_comparison()?;
        while self.current == Token::AndAnd {
            self.advance()?;
            let rhs = self.parse_comparison()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_comparison(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_concat()?;
        loop {
            let op = match self.current {
                Token::Eq => BinOp::Eq,
                Token::Ne => BinOp::Ne,
                Token::Lt => BinOp::Lt,
                Token::Le => BinOp::Le,
                Token::Gt => BinOp::Gt,
                Token::Ge => BinOp::Ge,
                _ => break,
            };
            self.advance()?;
            let rhs = self.parse_concat()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_concat(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_additive()?;
        while self.current == Token::Ampersand {
            self.advance()?;
            let rhs = self.parse_additive()?;
            lhs = binary(BinOp::Concat, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_additive(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.current {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance()?;
            let rhs = self.parse_term()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.current {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => break,
            };
            self.advance()?;
            let rhs = self.parse_unary()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, FormulaError> {
        let op = match self.current {
            Token::Minus => Some(UnOp::Neg),
            Token::Bang => Some(UnOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            self.advance()?;
            let operand = self.parse_unary()?;
            return Ok(Expr::Unary {
                op,
                operand: Box::new(operand),
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, FormulaError> {
        match self.current.clone() {
            Token::Number(n) => {
                self.advance()?;
                Ok(Expr::Number(n))
            }
            Token::Text(s) => {
                self.advance()?;
                Ok(Expr::Text(s))
            }
            Token::ErrorLit(kind) => {
                self.advance()?;
                Ok(Expr::Error(kind))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.parse_or()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::QuotedSheet(name) => {
                self.advance()?;
                self.expect(Token::Bang, "'!' after sheet name")?;
                self.parse_reference(Some(name))
            }
            Token::Ident(word) => {
                self.advance()?;
                if self.current == Token::LParen {
                    return self.parse_call(word);
                }
                if self.current == Token::Bang {
                    self.advance()?;
                    return self.parse_reference(Some(word));
                }
                if word.eq_ignore_ascii_case("true") {
                    return Ok(Expr::Bool(true));
                }
                if word.eq_ignore_ascii_case("false") {
                    return Ok(Expr::Bool(false));
                }
                self.reference_from_word(None, &word)
            }
            other => Err(FormulaError::new(
                self.offset,
                format!("expected a value, reference, function, or '(': found {other:?}"),
            )),
        }
    }

    fn parse_call(&mut self, name: String) -> Result<Expr, FormulaError> {
        self.expect(Token::LParen, "'('")?;
        let mut args = Vec::new();
        if self.current != Token::RParen {
            loop {
                args.push(self.parse_or()?);
                if self.current == Token::Comma {
                    self.advance()?;
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RParen, "')' to close argument list")?;
        Ok(Expr::Call {
            name: name.to_ascii_uppercase(),
            args,
        })
    }

    /// Parse the `A1` or `A1:B2` part after an optional sheet prefix.
    fn parse_reference(&mut self, sheet: Option<String>) -> Result<Expr, FormulaError> {
        let word = match self.current.clone() {
            Token::Ident(word) => word,
            other => {
                return Err(FormulaError::new(
                    self.offset,
                    format!("expected a cell address after '!', found {other:?}"),
                ))
            }
        };
        self.advance()?;
        self.reference_from_word(sheet, &word)
    }

    fn reference_from_word(
        &mut self,
        sheet: Option<String>,
        word: &str,
    ) -> Result<Expr, FormulaError> {
        let coord = CellCoord::parse_a1(word).map_err(|_| {
            FormulaError::new(
                self.offset,
                format!("unknown name {word:?}; expected a cell address or function call"),
            )
        })?;
        if self.current == Token::Colon {
            self.advance()?;
            let end_word = match self.current.clone() {
                Token::Ident(w) => w,
                other => {
                    return Err(FormulaError::new(
                        self.offset,
                        format!("expected a cell address after ':', found {other:?}"),
                    ))
                }
            };
            let end = CellCoord::parse_a1(&end_word).map_err(|_| {
                FormulaError::new(self.offset, format!("malformed cell address {end_word:?}"))
            })?;
            self.advance()?;
            // Normalize corners so start is always top-left.
            let start = CellCoord {
                row: coord.row.min(end.row),
                col: coord.col.min(end.col),
            };
            let stop = CellCoord {
                row: coord.row.max(end.row),
                col: coord.col.max(end.col),
            };
            return Ok(Expr::RangeRef {
                sheet,
                start,
                end: stop,
            });
        }
        Ok(Expr::CellRef { sheet, coord })
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::Binary {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
    }
}

/// Parse formula text. The text must begin with `=`.
pub fn parse_formula(text: &str) -> Result<Expr, FormulaError> {
    let rest = text
        .strip_prefix('=')
        .ok_or_else(|| FormulaError::new(0, "formula must start with '='"))?;
    let mut parser = Parser::new(rest)?;
    let expr = parser.parse_or()?;
    if parser.current != Token::End {
        return Err(FormulaError::new(
            parser.offset + 1,
            format!("unexpected trailing input: {:?}", parser.current),
        ));
    }
    Ok(expr)
}
