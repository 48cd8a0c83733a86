//! Parser for coefficient expressions:
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := number | ('sin'|'cos') '(' int ',' int ',' int ')'
//! ```
//!
//! `sin(k1,k2,w)` stands for sin(2π(k1 x1 + k2 x2 + w t)).

use super::{CoefficientField, Product, Trig, WaveTerm};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.pos, format!("expected '{c}'")))
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() {
            let b = bytes[end];
            let exp_sign = (b == b'-' || b == b'+')
                && end > start
                && matches!(bytes[end - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        if end == start {
            return Err(err(start, "expected a number"));
        }
        let v = self.src[start..end]
            .parse::<f64>()
            .map_err(|_| err(start, format!("bad number '{}'", &self.src[start..end])))?;
        self.pos = end;
        Ok(v)
    }

    fn integer(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        let mut neg = false;
        if self.eat('-') {
            neg = true;
        } else {
            self.eat('+');
        }
        self.skip_ws();
        let digits_start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(err(start, "expected an integer"));
        }
        let v: i32 = self.src[digits_start..self.pos]
            .parse()
            .map_err(|_| err(start, "integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    fn factor(&mut self) -> Result<Factor> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Factor::Number(self.number()?)),
            Some(_) => {
                let rest = &self.src[self.pos..];
                let kind = if rest.starts_with("sin") {
                    Trig::Sin
                } else if rest.starts_with("cos") {
                    Trig::Cos
                } else {
                    return Err(err(self.pos, "expected a number, sin(..) or cos(..)"));
                };
                self.pos += 3;
                self.expect('(')?;
                let k1 = self.integer()?;
                self.expect(',')?;
                let k2 = self.integer()?;
                self.expect(',')?;
                let w = self.integer()?;
                self.expect(')')?;
                Ok(Factor::Wave(WaveTerm { amplitude: 1.0, kind, k: [k1, k2], omega: w }))
            }
            None => Err(err(self.pos, "unexpected end of expression")),
        }
    }

    fn term(&mut self, sign: f64, constant: &mut f64, terms: &mut Vec<Product>) -> Result<()> {
        let mut coeff = sign;
        let mut waves = Vec::new();
        loop {
            match self.factor()? {
                Factor::Number(v) => coeff *= v,
                Factor::Wave(w) => waves.push(w),
            }
            if !self.eat('*') {
                break;
            }
        }
        if waves.is_empty() {
            *constant += coeff;
        } else {
            terms.push(Product::new(coeff, waves));
        }
        Ok(())
    }
}

enum Factor {
    Number(f64),
    Wave(WaveTerm),
}

/// Parses a coefficient expression; the result must be bounded away from zero.
pub fn parse_expression(src: &str) -> Result<CoefficientField> {
    let mut p = Parser { src, pos: 0 };
    let mut constant = 0.0;
    let mut terms = Vec::new();
    let mut sign = if p.eat('-') {
        -1.0
    } else {
        p.eat('+');
        1.0
    };
    loop {
        p.term(sign, &mut constant, &mut terms)?;
        if p.eat('+') {
            sign = 1.0;
        } else if p.eat('-') {
            sign = -1.0;
        } else {
            break;
        }
    }
    if p.peek().is_some() {
        return Err(err(p.pos, "trailing input"));
    }
    CoefficientField::new(constant, terms)
}
