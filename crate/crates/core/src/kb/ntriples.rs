//! Parser for the N-Triples subset accepted by the loader: IRIs in angle
//! brackets, quoted literals with an optional `@lang` tag or `^^<datatype>`
//! (the datatype is discarded), `#` comments. Blank nodes are rejected.

use super::{Iri, Literal, Term, Triple};

#[derive(Debug, PartialEq)]
pub enum ParsedLine {
    Empty,
    Triple(Triple),
}

/// Parses one line. Errors carry a human-readable message; the caller adds the line number.
pub fn parse_line(line: &str) -> Result<ParsedLine, String> {
    let mut cur = Cursor { src: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(ParsedLine::Empty);
    }
    let subject = cur.iri().map_err(|e| format!("subject: {e}"))?;
    cur.skip_ws();
    let predicate = cur.iri().map_err(|e| format!("predicate: {e}"))?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri().map_err(|e| format!("object: {e}"))?),
        Some('"') => Term::Literal(cur.literal()?),
        Some('_') => return Err("blank nodes are not supported".into()),
        Some(c) => return Err(format!("unexpected character {c:?} in object position")),
        None => return Err("missing object".into()),
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err("expected terminating '.'".into());
    }
    cur.bump();
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err("trailing content after '.'".into());
    }
    Ok(ParsedLine::Triple(Triple::new(subject, predicate, object)))
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.bump();
        }
    }

    fn iri(&mut self) -> Result<Iri, String> {
        match self.peek() {
            Some('<') => {}
            Some('_') => return Err("blank nodes are not supported".into()),
            _ => return Err("expected '<'".into()),
        }
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c == ' ' || c == '\t' => return Err("whitespace inside IRI".into()),
                Some(_) => {}
                None => return Err("unterminated IRI".into()),
            }
        }
        let raw = &self.src[start..self.pos - 1];
        Iri::new(raw).map_err(|_| format!("invalid IRI <{raw}>"))
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump();
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => text.push(self.escape()?),
                Some(c) => text.push(c),
                None => return Err("unterminated literal".into()),
            }
        }
        let mut lang = None;
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.bump();
                }
                if self.pos == start {
                    return Err("empty language tag".into());
                }
                lang = Some(self.src[start..self.pos].to_string());
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err("expected '^^' before datatype".into());
                }
                self.iri().map_err(|e| format!("datatype: {e}"))?;
            }
            _ => {}
        }
        Ok(Literal { text, lang })
    }

    fn escape(&mut self) -> Result<char, String> {
        match self.bump() {
            Some('t') => Ok('\t'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('b') => Ok('\u{8}'),
            Some('f') => Ok('\u{c}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.hex_escape(4),
            Some('U') => self.hex_escape(8),
            other => Err(format!("bad escape {other:?}")),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, String> {
        let end = self.pos + digits;
        let hex = self
            .src
            .get(self.pos..end)
            .ok_or_else(|| "truncated unicode escape".to_string())?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| "bad unicode escape".to_string())?;
        self.pos = end;
        char::from_u32(code).ok_or_else(|| "invalid code point".to_string())
    }
}
