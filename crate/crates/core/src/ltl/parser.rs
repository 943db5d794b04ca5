//! Recursive-descent parser for the concrete LTL grammar.
//!
//! Precedence, tightest first: `!` `X` `F` `G`; `U` `W` `R` `M`
//! (right-associative); `&&`; `||`; `->` (right-associative); `<->`.

use super::Formula;
use crate::error::{syntax, Result};
use crate::lts::is_action_name;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    Next,
    Finally,
    Globally,
    Until,
    WeakUntil,
    Release,
    StrongRelease,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let three: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, len) = if three == "<->" {
            (Tok::Iff, 3)
        } else if two == "&&" {
            (Tok::And, 2)
        } else if two == "||" {
            (Tok::Or, 2)
        } else if two == "->" {
            (Tok::Implies, 2)
        } else {
            match c {
                '!' | '¬' => (Tok::Not, 1),
                '□' => (Tok::Globally, 1),
                '◯' | '○' => (Tok::Next, 1),
                '∧' => (Tok::And, 1),
                '∨' => (Tok::Or, 1),
                '→' => (Tok::Implies, 1),
                '↔' => (Tok::Iff, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < chars.len()
                        && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '.')
                    {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "true" => Tok::True,
                        "false" => Tok::False,
                        "X" => Tok::Next,
                        "F" => Tok::Finally,
                        "G" => Tok::Globally,
                        "U" => Tok::Until,
                        "W" => Tok::WeakUntil,
                        "R" => Tok::Release,
                        "M" => Tok::StrongRelease,
                        w if is_action_name(w) => Tok::Ident(word.clone()),
                        _ => return Err(syntax(1, col, format!("invalid atom `{word}`"))),
                    };
                    (tok, j - i)
                }
                _ => {
                    return Err(syntax(1, col, format!("unknown operator `{c}`")))
                }
            }
        };
        out.push((tok, col));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            lhs = Formula::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.binary_temporal()?;
        while self.eat(&Tok::And) {
            lhs = Formula::and(lhs, self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        let ctor: fn(Box<Formula>, Box<Formula>) -> Formula = match self.peek() {
            Some(Tok::Until) => Formula::Until,
            Some(Tok::WeakUntil) => Formula::WeakUntil,
            Some(Tok::Release) => Formula::Release,
            Some(Tok::StrongRelease) => Formula::StrongRelease,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.binary_temporal()?;
        Ok(ctor(Box::new(lhs), Box::new(rhs)))
    }

    fn unary(&mut self) -> Result<Formula> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(1, col, "unexpected end of formula"));
        };
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::Next => Ok(Formula::next(self.unary()?)),
            Tok::Finally => Ok(Formula::finally(self.unary()?)),
            Tok::Globally => Ok(Formula::globally(self.unary()?)),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(a) => Ok(Formula::Atom(a)),
            Tok::LParen => {
                let inner = self.iff()?;
                if !self.eat(&Tok::RParen) {
                    return Err(syntax(1, self.col(), "expected `)`"));
                }
                Ok(inner)
            }
            t => Err(syntax(1, col, format!("unexpected token {t:?}"))),
        }
    }
}

/// Parses an LTL formula.
pub fn parse_ltl(source: &str) -> Result<Formula> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: source.chars().count() + 1,
    };
    let f = p.iff()?;
    if p.pos != p.toks.len() {
        return Err(syntax(1, p.col(), "trailing input"));
    }
    Ok(f)
}
