//! Model formulas: `Y ~ x1 + x2 + x1:x2 + x1^2`.
//!
//! `:` multiplies predictors, `^k` raises to a power (k <= 3), and
//! `quad(a, b, ...)` expands to the complete quadratic in its arguments.
//! A leading `0 +` (or a trailing `- 1`) drops the intercept.

use condreg_core::terms::full_quadratic;
use condreg_core::{ModelSpec, Term};

use crate::error::{CliError, CliResult};

/// Highest total degree of a single term.
pub const MAX_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(u32),
    Tilde,
    Plus,
    Minus,
    Colon,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn tokenize(src: &str) -> CliResult<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let single = match c {
            '~' => Some(Tok::Tilde),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            ':' => Some(Tok::Colon),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if is_name_char(c) {
            let start = i;
            while i < chars.len() && is_name_char(chars[i].1) {
                i += 1;
            }
            let word: String = chars[start..i].iter().map(|(_, c)| c).collect();
            if word.chars().all(|c| c.is_ascii_digit()) {
                let v = word.parse().map_err(|_| err(format!("number '{word}' out of range at column {}", pos + 1)))?;
                out.push((pos, Tok::Int(v)));
            } else if word.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(err(format!("name '{word}' must not start with a digit (column {})", pos + 1)));
            } else {
                out.push((pos, Tok::Name(word)));
            }
        } else {
            return Err(err(format!("unexpected character '{c}' at column {}", pos + 1)));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p) + 1
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> CliResult<()> {
        let col = self.column();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(err(format!("expected {what} at column {col}"))),
        }
    }

    fn name(&mut self) -> CliResult<String> {
        let col = self.column();
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            _ => Err(err(format!("expected a predictor name at column {col}"))),
        }
    }

    fn factor(&mut self) -> CliResult<(String, u32)> {
        let name = self.name()?;
        if self.peek() == Some(&Tok::Caret) {
            self.next();
            let col = self.column();
            match self.next() {
                Some(Tok::Int(k)) if (1..=MAX_DEGREE).contains(&k) => Ok((name, k)),
                Some(Tok::Int(k)) => Err(err(format!("power {k} on '{name}' outside 1..={MAX_DEGREE}"))),
                _ => Err(err(format!("expected an integer power at column {col}"))),
            }
        } else {
            Ok((name, 1))
        }
    }

    /// One `+`-separated item: several terms for `quad(...)`, else one.
    fn item(&mut self) -> CliResult<Vec<Term>> {
        if let (Some(Tok::Name(n)), Some((_, Tok::LParen))) = (self.peek(), self.toks.get(self.at + 1)) {
            if n != "quad" {
                return Err(err(format!("unknown function '{n}' (only quad is supported)")));
            }
            self.at += 2;
            let mut args = vec![self.name()?];
            while self.peek() == Some(&Tok::Comma) {
                self.next();
                args.push(self.name()?);
            }
            self.expect(Tok::RParen, "')'")?;
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let spec = full_quadratic("_", &refs).map_err(|e| err(format!("quad: {e}")))?;
            return Ok(spec.terms().to_vec());
        }
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::Colon) {
            self.next();
            factors.push(self.factor()?);
        }
        let term = Term::new(factors).map_err(|e| err(e.to_string()))?;
        if term.degree() > MAX_DEGREE {
            return Err(err(format!("term '{term}' has degree {} (max {MAX_DEGREE})", term.degree())));
        }
        Ok(vec![term])
    }
}

pub fn parse(src: &str) -> CliResult<ModelSpec> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, end: src.len() };
    let response = p.name()?;
    p.expect(Tok::Tilde, "'~'")?;

    let mut intercept = true;
    let mut terms: Vec<Term> = Vec::new();
    let mut first = true;
    loop {
        if !first {
            match p.peek() {
                None => break,
                Some(Tok::Plus) => {
                    p.next();
                }
                Some(Tok::Minus) => {
                    p.next();
                    let col = p.column();
                    match p.next() {
                        Some(Tok::Int(1)) => {
                            intercept = false;
                            continue;
                        }
                        _ => return Err(err(format!("only '- 1' may be subtracted (column {col})"))),
                    }
                }
                Some(_) => return Err(err(format!("expected '+' at column {}", p.column()))),
            }
        }
        first = false;
        match p.peek() {
            Some(Tok::Int(0)) => {
                p.next();
                intercept = false;
            }
            Some(Tok::Int(1)) => {
                p.next();
            }
            Some(Tok::Int(k)) => return Err(err(format!("unexpected number {k} at column {}", p.column()))),
            None => return Err(err("formula ends where a term was expected")),
            _ => terms.extend(p.item()?),
        }
    }

    for t in &terms {
        if t.contains(&response) {
            return Err(err(format!("response '{response}' appears in term '{t}'")));
        }
    }
    ModelSpec::new(response, intercept, terms).map_err(|e| match e {
        condreg_core::Error::DuplicateTerm(t) => err(format!("duplicate term '{t}'")),
        other => err(other.to_string()),
    })
}

/// Canonical text; `parse(&print(s))` reproduces `s`.
pub fn print(spec: &ModelSpec) -> String {
    let mut parts: Vec<String> = Vec::new();
    if !spec.intercept {
        parts.push("0".into());
    } else if spec.terms().is_empty() {
        parts.push("1".into());
    }
    parts.extend(spec.terms().iter().map(Term::to_string));
    format!("{} ~ {}", spec.response, parts.join(" + "))
}

/// Comma-separated predictor list, e.g. `x1,x2`.
pub fn parse_list(src: &str) -> CliResult<Vec<String>> {
    let names: Vec<String> = src.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|n| n.is_empty() || !n.chars().all(is_name_char)) {
        return Err(err(format!("invalid name list '{src}'")));
    }
    Ok(names)
}

/// A single term such as `x1:x2` or `x1^2`.
pub fn parse_term(src: &str) -> CliResult<Term> {
    let spec = parse(&format!("_ ~ 0 + {src}"))?;
    match spec.terms() {
        [t] => Ok(t.clone()),
        _ => Err(err(format!("'{src}' is not a single term"))),
    }
}
