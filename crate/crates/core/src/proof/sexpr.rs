//! Text format for derivations:
//!
//! ```text
//! (S4 :phi "Pa(x)" (<premise>) (<premise>) :concl "G1; G2 |- lhs ~~ rhs")
//! ```
//!
//! Assumptions are separated by `;`. A `;` outside a string starts a comment
//! running to the end of the line.

use num_bigint::BigUint;
use thiserror::Error;

use super::{Judgement, ProofTree, Rule, Term};
use crate::syntax::{parse_core, parse_mso, parse_step, print_mso, Context, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofParseError {
    #[error("proof syntax at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("judgement '{text}': {msg}")]
    Judgement { text: String, msg: String },
}

fn syntax<T>(offset: usize, msg: impl Into<String>) -> Result<T, ProofParseError> {
    Err(ProofParseError::Syntax { offset, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Str(String),
    Atom(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ProofParseError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some((i, c)) = it.next() {
        match c {
            c if c.is_whitespace() => {}
            ';' => {
                for (_, d) in it.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            '(' => out.push((Tok::Open, i)),
            ')' => out.push((Tok::Close, i)),
            '"' => {
                let mut s = String::new();
                loop {
                    match it.next() {
                        None => return syntax(i, "unterminated string"),
                        Some((_, '"')) => break,
                        Some((j, '\\')) => match it.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            Some((_, 'n')) => s.push('\n'),
                            _ => return syntax(j, "bad escape"),
                        },
                        Some((_, d)) => s.push(d),
                    }
                }
                out.push((Tok::Str(s), i));
            }
            _ => {
                let mut s = String::from(c);
                while let Some(&(_, d)) = it.peek() {
                    if d.is_whitespace() || matches!(d, '(' | ')' | '"' | ';') {
                        break;
                    }
                    s.push(d);
                    it.next();
                }
                out.push((Tok::Atom(s), i));
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    ctx: &'a Context,
}

impl Reader<'_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn node(&mut self) -> Result<ProofTree, ProofParseError> {
        let at = self.offset();
        if self.next() != Some(Tok::Open) {
            return syntax(at, "expected '('");
        }
        let at = self.offset();
        let rule = match self.next() {
            Some(Tok::Atom(a)) => Rule::from_name(&a).ok_or(()).or_else(|_| syntax(at, format!("unknown rule '{a}'")))?,
            _ => return syntax(at, "expected a rule name"),
        };
        let mut premises = Vec::new();
        let (mut phi, mut var, mut l, mut concl) = (None, None, None, None);
        loop {
            let at = self.offset();
            match self.toks.get(self.pos).map(|t| t.0.clone()) {
                Some(Tok::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Open) => premises.push(self.node()?),
                Some(Tok::Atom(k)) if k.starts_with(':') => {
                    self.pos += 1;
                    let vat = self.offset();
                    let value = match self.next() {
                        Some(Tok::Str(s)) | Some(Tok::Atom(s)) => s,
                        _ => return syntax(vat, format!("missing value for {k}")),
                    };
                    match k.as_str() {
                        ":phi" => {
                            phi = Some(parse_mso(&value, self.ctx).or_else(|e| syntax(vat, format!(":phi: {e}")))?)
                        }
                        ":var" => var = Some(Var::from_name(&value).ok_or(()).or_else(|_| syntax(vat, "bad :var"))?),
                        ":l" => l = Some(value.parse::<BigUint>().or_else(|_| syntax(vat, "bad :l"))?),
                        ":concl" => concl = Some(parse_judgement(&value, self.ctx)?),
                        _ => return syntax(at, format!("unknown keyword {k}")),
                    }
                }
                None => return syntax(at, "unexpected end of input"),
                Some(_) => return syntax(at, "unexpected token"),
            }
        }
        let concl = concl.ok_or(()).or_else(|_| syntax(at, format!("{rule} node without :concl")))?;
        Ok(ProofTree { rule, phi, var, l, premises, concl })
    }
}

pub fn parse_proof(text: &str, ctx: &Context) -> Result<ProofTree, ProofParseError> {
    let mut r = Reader { toks: lex(text)?, pos: 0, end: text.len(), ctx };
    let p = r.node()?;
    if r.pos < r.toks.len() {
        return syntax(r.offset(), "trailing input after the proof");
    }
    Ok(p)
}

/// `G1; G2 |- lhs ~~ rhs`; both sides are read as step formulas if
/// possible, otherwise as core formulas.
pub fn parse_judgement(text: &str, ctx: &Context) -> Result<Judgement, ProofParseError> {
    let err = |msg: String| ProofParseError::Judgement { text: text.to_string(), msg };
    let (g, eq) = text.split_once("|-").ok_or_else(|| err("missing '|-'".into()))?;
    let (l, r) = eq.split_once("~~").ok_or_else(|| err("missing '~~'".into()))?;
    let mut gamma = Vec::new();
    for part in g.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        gamma.push(parse_mso(part, ctx).map_err(|e| err(e.to_string()))?);
    }
    let (lhs, rhs) = match (parse_step(l, ctx), parse_step(r, ctx)) {
        (Ok(a), Ok(b)) => (Term::Step(a), Term::Step(b)),
        _ => match (parse_core(l, ctx), parse_core(r, ctx)) {
            (Ok(a), Ok(b)) => (Term::Core(a), Term::Core(b)),
            (Err(e), _) | (_, Err(e)) => return Err(err(e.to_string())),
        },
    };
    Ok(Judgement::new(gamma, lhs, rhs))
}

fn quote(s: &str) -> String {
    let mut out = String::from('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print_proof(p: &ProofTree, ctx: &Context) -> String {
    let mut out = String::new();
    print_node(p, ctx, 0, &mut out);
    out.push('\n');
    out
}

fn print_node(p: &ProofTree, ctx: &Context, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    out.push_str(&pad);
    out.push('(');
    out.push_str(p.rule.name());
    if let Some(phi) = &p.phi {
        out.push_str(" :phi ");
        out.push_str(&quote(&print_mso(phi, ctx)));
    }
    if let Some(v) = &p.var {
        out.push_str(&format!(" :var {v}"));
    }
    if let Some(l) = &p.l {
        out.push_str(&format!(" :l {l}"));
    }
    for q in &p.premises {
        out.push('\n');
        print_node(q, ctx, depth + 1, out);
    }
    if !p.premises.is_empty() {
        out.push('\n');
        out.push_str(&pad);
        out.push(' ');
    }
    out.push_str(" :concl ");
    out.push_str(&quote(&p.concl.print(ctx)));
    out.push(')');
}
