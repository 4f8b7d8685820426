//! Parser for fractional-part expressions such as `1/2`, `0.6`, `pi/7`,
//! `5*pi/32` or `-pi/4+1`.
//!
//! ```text
//! expr     := decimal | int "/" int | int | pi_term [("+" | "-") int ["/" int]]
//! pi_term  := ["-"] [int "*"] "pi" ["/" int]
//! ```

use std::fmt;

use wscs_rdf::SymbolicFraction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsParseError {
    pub expr: String,
    /// Byte offset of the offending character.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for EpsParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid eps expression `{}` at column {}: {}",
            self.expr,
            self.position + 1,
            self.message
        )
    }
}

impl std::error::Error for EpsParseError {}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, pos: usize, message: impl Into<String>) -> Result<T, EpsParseError> {
        Err(EpsParseError { expr: self.src.to_string(), position: pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(w) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn uint(&mut self, what: &str) -> Result<u64, EpsParseError> {
        self.skip_ws();
        let at = self.pos;
        let d = self.digits();
        if d.is_empty() {
            return self.err(at, format!("expected {what}"));
        }
        match d.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.err(at, format!("{what} `{d}` is too large")),
        }
    }

    fn denominator(&mut self) -> Result<u64, EpsParseError> {
        self.skip_ws();
        let at = self.pos;
        let v = self.uint("denominator")?;
        if v == 0 {
            return self.err(at, "zero denominator");
        }
        Ok(v)
    }

    fn finish(&mut self) -> Result<(), EpsParseError> {
        self.skip_ws();
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(self.pos, format!("unexpected `{c}`")),
        }
    }
}

fn to_i64(c: &Cursor<'_>, at: usize, v: u64) -> Result<i64, EpsParseError> {
    i64::try_from(v).or_else(|_| c.err(at, "coefficient is too large"))
}

pub fn parse_eps(expr: &str) -> Result<SymbolicFraction, EpsParseError> {
    let mut c = Cursor { src: expr, pos: 0 };
    c.skip_ws();
    if c.peek().is_none() {
        return c.err(0, "empty expression");
    }
    let start = c.pos;
    let negative = c.eat('-');
    let mut coeff = 1u64;
    let coeff_at = c.pos;
    let lead = c.digits();

    if !lead.is_empty() {
        if c.eat('.') {
            if negative {
                return c.err(start, "eps must lie in [0, 1)");
            }
            let frac = c.digits();
            if frac.is_empty() {
                return c.err(c.pos, "expected digits after `.`");
            }
            let end = c.pos;
            c.finish()?;
            let text = &expr[coeff_at..end];
            let value: f64 = text.parse().or_else(|_| c.err(coeff_at, "malformed decimal"))?;
            return SymbolicFraction::decimal(value).or_else(|e| c.err(coeff_at, e.to_string()));
        }
        coeff = lead.parse().or_else(|_| c.err(coeff_at, "integer is too large"))?;
        if !c.eat('*') {
            if negative {
                return c.err(start, "eps must lie in [0, 1)");
            }
            let den = if c.eat('/') { c.denominator()? } else { 1 };
            c.finish()?;
            return SymbolicFraction::rational(coeff, den).or_else(|e| c.err(coeff_at, e.to_string()));
        }
    }

    let pi_at = {
        c.skip_ws();
        c.pos
    };
    if !c.eat_word("pi") {
        return c.err(pi_at, if lead.is_empty() { "expected a number or `pi`" } else { "expected `pi` after `*`" });
    }
    let pi_den = if c.eat('/') { c.denominator()? } else { 1 };
    let mut pi_num = to_i64(&c, coeff_at, coeff)?;
    if negative {
        pi_num = -pi_num;
    }

    let (mut rat_num, mut rat_den) = (0i64, 1u64);
    c.skip_ws();
    let sign_at = c.pos;
    let sign = if c.eat('+') {
        Some(1)
    } else if c.eat('-') {
        Some(-1)
    } else {
        None
    };
    if let Some(s) = sign {
        c.skip_ws();
        let at = c.pos;
        let v = c.uint("integer")?;
        rat_num = s * to_i64(&c, at, v)?;
        rat_den = if c.eat('/') { c.denominator()? } else { 1 };
    }
    c.finish()?;
    let at = if sign.is_some() { sign_at } else { start };
    SymbolicFraction::irrational(pi_num, pi_den, rat_num, rat_den).or_else(|e| c.err(at, e.to_string()))
}
