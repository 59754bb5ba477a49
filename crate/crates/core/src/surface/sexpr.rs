use std::fmt;

use thiserror::Error;

use crate::store::quote_string;
use crate::truth::{format_ratio, parse_ratio, Ratio};

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum SExprKind {
    Symbol(String),
    Str(String),
    Num(Ratio),
    List(Vec<SExpr>),
}

/// A parsed expression. Equality ignores positions.
#[derive(Debug, Clone)]
pub struct SExpr {
    pub kind: SExprKind,
    pub pos: Pos,
}

impl PartialEq for SExprKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SExprKind::Symbol(a), SExprKind::Symbol(b)) | (SExprKind::Str(a), SExprKind::Str(b)) => a == b,
            (SExprKind::Num(a), SExprKind::Num(b)) => a == b,
            (SExprKind::List(a), SExprKind::List(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for SExprKind {}

impl PartialEq for SExpr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for SExpr {}

impl SExpr {
    pub fn symbol(s: impl Into<String>) -> Self {
        Self::at(SExprKind::Symbol(s.into()), Pos::default())
    }

    pub fn string(s: impl Into<String>) -> Self {
        Self::at(SExprKind::Str(s.into()), Pos::default())
    }

    pub fn num(r: Ratio) -> Self {
        Self::at(SExprKind::Num(r), Pos::default())
    }

    pub fn list(items: Vec<SExpr>) -> Self {
        Self::at(SExprKind::List(items), Pos::default())
    }

    pub fn at(kind: SExprKind, pos: Pos) -> Self {
        Self { kind, pos }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&Ratio> {
        match &self.kind {
            SExprKind::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a nonempty list.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SExprKind::Symbol(s) => f.write_str(s),
            SExprKind::Str(s) => f.write_str(&quote_string(s)),
            SExprKind::Num(r) => f.write_str(&format_ratio(r)),
            SExprKind::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

/// Deeper input is rejected rather than risking the stack in later recursive passes.
pub const MAX_DEPTH: usize = 256;

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn string(&mut self, start: Pos) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            let here = self.pos;
            match self.bump() {
                None => {
                    return Err(ParseError {
                        pos: self.pos,
                        message: format!("unterminated string starting at {start}"),
                    })
                }
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some(c) => {
                        return Err(ParseError {
                            pos: here,
                            message: format!("unknown escape `\\{c}`"),
                        })
                    }
                    None => {
                        return Err(ParseError {
                            pos: self.pos,
                            message: "expected escape character, found end of input".into(),
                        })
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn bare(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }
}

fn looks_numeric(tok: &str) -> bool {
    let body = tok.strip_prefix('-').unwrap_or(tok);
    body.starts_with(|c: char| c.is_ascii_digit())
}

/// Parses a whole input into its top-level expressions.
pub fn parse(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut top = Vec::new();
    // open lists: (start position, items so far)
    let mut stack: Vec<(Pos, Vec<SExpr>)> = Vec::new();
    loop {
        lx.skip_trivia();
        let start = lx.pos;
        let Some(c) = lx.peek() else {
            if let Some((open, _)) = stack.last() {
                return Err(ParseError {
                    pos: start,
                    message: format!("expected `)` to close the list opened at {open}, found end of input"),
                });
            }
            return Ok(top);
        };
        let done = match c {
            '(' => {
                lx.bump();
                if stack.len() == MAX_DEPTH {
                    return Err(ParseError {
                        pos: start,
                        message: format!("nesting deeper than {MAX_DEPTH} levels"),
                    });
                }
                stack.push((start, Vec::new()));
                continue;
            }
            ')' => {
                lx.bump();
                let Some((open, items)) = stack.pop() else {
                    return Err(ParseError {
                        pos: start,
                        message: "unexpected `)`".into(),
                    });
                };
                SExpr::at(SExprKind::List(items), open)
            }
            '"' => {
                lx.bump();
                SExpr::at(SExprKind::Str(lx.string(start)?), start)
            }
            _ => {
                let tok = lx.bare();
                if looks_numeric(&tok) {
                    let r = parse_ratio(&tok).map_err(|e| ParseError {
                        pos: start,
                        message: format!("expected a rational number, found `{tok}` ({e})"),
                    })?;
                    SExpr::at(SExprKind::Num(r), start)
                } else {
                    SExpr::at(SExprKind::Symbol(tok), start)
                }
            }
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(done),
            None => top.push(done),
        }
    }
}

/// [`parse`] over raw bytes; invalid UTF-8 is reported with its position.
pub fn parse_bytes(bytes: &[u8]) -> Result<Vec<SExpr>, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = valid.matches('\n').count() + 1;
            let col = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(ParseError {
                pos: Pos { line, col },
                message: "invalid UTF-8".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::ratio;

    #[test]
    fn nested_lists() {
        let got = parse("(Inheritance (Concept \"cat\") (Concept \"animal\"))").unwrap();
        assert_eq!(got.len(), 1);
        let items = got[0].as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("Inheritance"));
        assert_eq!(items[1].as_list().unwrap()[1].as_str(), Some("cat"));
        assert_eq!(items[2].pos, Pos { line: 1, col: 30 });
    }

    #[test]
    fn rationals() {
        let got = parse("(choice 1/2 a b) 0.25 -3 7").unwrap();
        assert_eq!(got[0].as_list().unwrap()[1].as_num(), Some(&ratio(1, 2)));
        assert_eq!(got[1].as_num(), Some(&ratio(1, 4)));
        assert_eq!(got[2].as_num(), Some(&ratio(-3, 1)));
        assert_eq!(got[3].as_num(), Some(&ratio(7, 1)));
        assert!(parse("1/0").is_err());
        assert!(parse("12abc").is_err());
        assert_eq!(parse("-").unwrap()[0].as_symbol(), Some("-"));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("(unclosed").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 10 });
        assert!(e.message.contains("end of input"));
        let e = parse("(a)\n  )").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
        let e = parse("\"abc").unwrap_err();
        assert!(e.message.contains("unterminated"));
        let e = parse("\"a\\q\"").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 3 });
        assert_eq!(parse_bytes(b"ab\n c\xff").unwrap_err().pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn comments_and_escapes() {
        let got = parse("# a comment\n(a \"x\\\"y\\n\") # trailing\n").unwrap();
        assert_eq!(got[0].as_list().unwrap()[1].as_str(), Some("x\"y\n"));
        assert_eq!(got[0].to_string(), "(a \"x\\\"y\\n\")");
        assert_eq!(parse("a#b").unwrap()[0].as_symbol(), Some("a#b"));
    }

    #[test]
    fn print_parse_identity() {
        let text = "(Rule (premises (Inheritance $x $y)) (tv 9/10 1/2) \"q\" *)";
        let once = parse(text).unwrap();
        let printed: Vec<String> = once.iter().map(ToString::to_string).collect();
        assert_eq!(printed.join(" "), text);
        assert_eq!(parse(&printed.join(" ")).unwrap(), once);
    }

    #[test]
    fn depth_limit() {
        let deep = "(".repeat(MAX_DEPTH + 1);
        assert!(parse(&deep).unwrap_err().message.contains("nesting"));
        let ok = format!("{}{}", "(".repeat(MAX_DEPTH), ")".repeat(MAX_DEPTH));
        assert!(parse(&ok).is_ok());
    }
}
