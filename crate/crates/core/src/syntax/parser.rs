//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! formula := "T" | Rel "(" [term ("," term)*] ")" | "(" formula "&" formula ")"
//!          | "<>" formula | "A" var "." formula
//! ```
//!
//! `⊤`, `∧`, `◇` and `∀` are accepted for `T`, `&`, `<>` and `A`. Term
//! identifiers that are declared constants, or that start with `c`, denote
//! constants; every other lowercase identifier is a variable.

use super::{Formula, Signature, SyntaxError, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Top,
    Forall,
    Diamond,
    And,
    LParen,
    RParen,
    Comma,
    Dot,
    Ident(String),
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '#'
}

pub(crate) fn is_term_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(ident_char)
}

pub(crate) fn is_relation_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase()) && chars.all(ident_char) && s != "A" && s != "T"
}

/// Classifies a bare term identifier without a signature.
pub(crate) fn classify_term(s: &str) -> Result<Term, SyntaxError> {
    if !is_term_ident(s) {
        return Err(SyntaxError::Parse {
            pos: 0,
            message: format!("`{s}` is not a term"),
        });
    }
    Ok(if s.starts_with('c') {
        Term::Const(s.to_string())
    } else {
        Term::Var(s.to_string())
    })
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        let tok = match c {
            '⊤' => Tok::Top,
            '∀' => Tok::Forall,
            '◇' => Tok::Diamond,
            '&' | '∧' => Tok::And,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '<' => {
                it.next();
                match it.peek() {
                    Some(&(_, '>')) => Tok::Diamond,
                    _ => {
                        return Err(SyntaxError::Parse {
                            pos,
                            message: "expected `<>`".into(),
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = pos;
                while let Some(&(i, c)) = it.peek() {
                    if !ident_char(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    it.next();
                }
                let word = &text[pos..end];
                out.push((
                    pos,
                    match word {
                        "T" => Tok::Top,
                        "A" => Tok::Forall,
                        _ => Tok::Ident(word.to_string()),
                    },
                ));
                continue;
            }
            other => {
                return Err(SyntaxError::Parse {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        it.next();
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    sig: Option<&'a Signature>,
    /// Arities seen so far, for consistency when no signature is given.
    seen: Signature,
    binders: Vec<String>,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Top) => Ok(Formula::Top),
            Some(Tok::Diamond) => Ok(Formula::diamond(self.formula()?)),
            Some(Tok::Forall) => {
                let var_pos = self.pos();
                let var = match self.next() {
                    Some(Tok::Ident(v)) => v,
                    _ => {
                        return Err(SyntaxError::Parse {
                            pos: var_pos,
                            message: "expected a variable after the quantifier".into(),
                        })
                    }
                };
                if !is_term_ident(&var) || var.starts_with('c') || self.sig.is_some_and(|s| s.constants.contains(&var))
                {
                    return Err(SyntaxError::Parse {
                        pos: var_pos,
                        message: format!("`{var}` cannot be bound: not a variable"),
                    });
                }
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                self.binders.push(var.clone());
                let body = self.formula();
                self.binders.pop();
                Ok(Formula::forall(var, body?))
            }
            Some(Tok::LParen) => {
                let left = self.formula()?;
                self.expect(Tok::And, "`&`")?;
                let right = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Formula::and(left, right))
            }
            Some(Tok::Ident(name)) if is_relation_ident(&name) => self.atom(name, pos),
            Some(Tok::Ident(name)) => Err(SyntaxError::Parse {
                pos,
                message: format!("`{name}` is not a relation symbol"),
            }),
            Some(_) => Err(SyntaxError::Parse {
                pos,
                message: "expected a formula".into(),
            }),
            None => Err(SyntaxError::Parse {
                pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn atom(&mut self, name: String, pos: usize) -> Result<Formula, SyntaxError> {
        self.expect(Tok::LParen, "`(` after the relation symbol")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Some(Tok::Comma) => self.at += 1,
                    _ => break,
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let expected = match self.sig {
            Some(sig) => match sig.relations.get(&name) {
                Some(&n) => Some(n),
                None => return Err(SyntaxError::UnknownSymbol { name, pos }),
            },
            None => self.seen.relations.get(&name).copied(),
        };
        match expected {
            Some(n) if n != args.len() => Err(SyntaxError::ArityMismatch {
                symbol: name,
                expected: n,
                found: args.len(),
            }),
            _ => {
                self.seen.relations.insert(name.clone(), args.len());
                Ok(Formula::Rel(name, args))
            }
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let pos = self.pos();
        let name = match self.next() {
            Some(Tok::Ident(n)) if is_term_ident(&n) => n,
            _ => {
                return Err(SyntaxError::Parse {
                    pos,
                    message: "expected a term".into(),
                })
            }
        };
        if self.binders.contains(&name) {
            return Ok(Term::Var(name));
        }
        if let Some(sig) = self.sig {
            if sig.constants.contains(&name) {
                return Ok(Term::Const(name));
            }
            if name.starts_with('c') {
                return Err(SyntaxError::UnknownSymbol { name, pos });
            }
            return Ok(Term::Var(name));
        }
        classify_term(&name)
    }
}

fn run(text: &str, sig: Option<&Signature>) -> Result<Formula, SyntaxError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
        sig,
        seen: Signature::new(),
        binders: Vec::new(),
    };
    let f = p.formula()?;
    if p.at < p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

/// Parses `text` against `sig`: every constant and relation must be declared
/// and used at its declared arity.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, SyntaxError> {
    run(text, Some(sig))
}

/// Parses `text` without a signature; identifiers starting with `c` are
/// constants and relation arities only need to be used consistently.
pub fn parse_formula_lenient(text: &str) -> Result<Formula, SyntaxError> {
    run(text, None)
}
