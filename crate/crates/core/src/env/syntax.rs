//! Lexer and recursive-descent parser for the canonical text forms.
//!
//! Whitespace is insignificant on input; the `Display` impls emit the one
//! canonical spelling, so `parse(format(x)) == x` and `format(parse(s)) == s`
//! for canonical `s`.

use thiserror::Error;

use super::{Entry, Equation, Obligation, ProofScript, Tactic, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct SyntaxError {
    pub pos: usize,
    pub msg: String,
}

impl SyntaxError {
    fn new(pos: usize, msg: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Turnstile,
    Equals,
}

impl Token {
    pub fn text(&self) -> &str {
        match self {
            Token::Ident(s) => s,
            Token::LParen => "(",
            Token::RParen => ")",
            Token::Comma => ",",
            Token::Semi => ";",
            Token::Colon => ":",
            Token::Turnstile => "|-",
            Token::Equals => "=",
        }
    }
}

pub(crate) const RESERVED: [&str; 5] = ["Zero", "Succ", "Plus", "Var", "forall"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Splits text into tokens, each paired with its starting byte offset.
pub fn lex(text: &str) -> Result<Vec<(Token, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            b';' => Token::Semi,
            b':' => Token::Colon,
            b'=' => Token::Equals,
            b'|' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    out.push((Token::Turnstile, i));
                    i += 2;
                    continue;
                }
                return Err(SyntaxError::new(i, "expected `|-`"));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                out.push((Token::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError::new(i, format!("unexpected character {ch:?}")));
            }
        };
        out.push((tok, i));
        i += 1;
    }
    Ok(out)
}

pub(crate) struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    idx: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: &'a [(Token, usize)], end: usize) -> Self {
        Parser {
            tokens,
            idx: 0,
            end,
        }
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end, |t| t.1)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.idx).map(|t| &t.0);
        self.idx += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), SyntaxError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if *t == want => Ok(()),
            Some(t) => Err(SyntaxError::new(
                pos,
                format!("expected `{}`, found `{}`", want.text(), t.text()),
            )),
            None => Err(SyntaxError::new(
                pos,
                format!("expected `{}`, found end of input", want.text()),
            )),
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Ident(s)) => Ok(s.clone()),
            Some(t) => Err(SyntaxError::new(
                pos,
                format!("expected identifier, found `{}`", t.text()),
            )),
            None => Err(SyntaxError::new(pos, "expected identifier, found end of input")),
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        let pos = self.pos();
        let s = self.ident()?;
        if RESERVED.contains(&s.as_str()) {
            return Err(SyntaxError::new(pos, format!("`{s}` is reserved")));
        }
        Ok(s)
    }

    pub(crate) fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(SyntaxError::new(
                self.pos(),
                format!("unexpected trailing `{}`", t.text()),
            )),
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term, SyntaxError> {
        let pos = self.pos();
        let head = self.ident()?;
        match head.as_str() {
            "Zero" => Ok(Term::Zero),
            "Succ" => {
                self.expect(Token::LParen)?;
                let t = self.term()?;
                self.expect(Token::RParen)?;
                Ok(Term::succ(t))
            }
            "Plus" => {
                self.expect(Token::LParen)?;
                let l = self.term()?;
                self.expect(Token::Comma)?;
                let r = self.term()?;
                self.expect(Token::RParen)?;
                Ok(Term::plus(l, r))
            }
            "Var" => {
                self.expect(Token::LParen)?;
                let n = self.name()?;
                self.expect(Token::RParen)?;
                Ok(Term::Var(n))
            }
            other => Err(SyntaxError::new(
                pos,
                format!("unknown term constructor `{other}`"),
            )),
        }
    }

    fn equation(&mut self) -> Result<Equation, SyntaxError> {
        let lhs = self.term()?;
        self.expect(Token::Equals)?;
        let rhs = self.term()?;
        Ok(Equation { lhs, rhs })
    }

    pub(crate) fn obligation(&mut self) -> Result<Obligation, SyntaxError> {
        let start = self.pos();
        let mut binders = Vec::new();
        if self.peek() == Some(&Token::Ident("forall".into())) {
            self.bump();
            while let Some(Token::Ident(_)) = self.peek() {
                binders.push(self.name()?);
            }
            if binders.is_empty() {
                return Err(SyntaxError::new(self.pos(), "`forall` needs at least one binder"));
            }
            self.expect(Token::Comma)?;
        }
        let mut context = Vec::new();
        if self.peek() != Some(&Token::Turnstile) {
            loop {
                let name = self.name()?;
                let entry = if self.peek() == Some(&Token::Colon) {
                    self.bump();
                    Entry::Hyp(self.equation()?)
                } else {
                    Entry::Var
                };
                context.push((name, entry));
                if self.peek() == Some(&Token::Semi) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::Turnstile)?;
        let goal = self.equation()?;
        Obligation::new(binders, context, goal).map_err(|e| SyntaxError::new(start, e.to_string()))
    }

    fn tactic(&mut self) -> Result<Tactic, SyntaxError> {
        let pos = self.pos();
        let head = self.ident()?;
        let takes_arg = matches!(head.as_str(), "induction" | "rewrite");
        let arg = if takes_arg { Some(self.name()?) } else { None };
        Tactic::from_parts(&head, arg).map_err(|msg| SyntaxError::new(pos, msg))
    }

    pub(crate) fn script(&mut self) -> Result<ProofScript, SyntaxError> {
        let mut steps = Vec::new();
        if self.peek().is_none() {
            return Ok(ProofScript::new(steps));
        }
        loop {
            steps.push(self.tactic()?);
            if self.peek() == Some(&Token::Semi) {
                self.bump();
            } else {
                break;
            }
        }
        Ok(ProofScript::new(steps))
    }
}

fn parse_with<T>(
    text: &str,
    f: impl FnOnce(&mut Parser<'_>) -> Result<T, SyntaxError>,
) -> Result<T, SyntaxError> {
    let tokens = lex(text)?;
    let mut p = Parser::new(&tokens, text.len());
    let v = f(&mut p)?;
    p.finish()?;
    Ok(v)
}

pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    parse_with(text, |p| p.term())
}

pub fn parse_obligation(text: &str) -> Result<Obligation, SyntaxError> {
    parse_with(text, |p| p.obligation())
}

pub fn parse_tactic(text: &str) -> Result<Tactic, SyntaxError> {
    parse_with(text, |p| p.tactic())
}

pub fn parse_script(text: &str) -> Result<ProofScript, SyntaxError> {
    parse_with(text, |p| p.script())
}

/// Rebuilds an obligation from a bare token stream (positions are synthetic).
pub fn obligation_from_tokens(tokens: &[Token]) -> Result<Obligation, SyntaxError> {
    let positioned: Vec<(Token, usize)> = tokens.iter().cloned().zip(0..).collect();
    let mut p = Parser::new(&positioned, tokens.len());
    let ob = p.obligation()?;
    p.finish()?;
    Ok(ob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_examples() {
        assert_eq!(parse_term("Zero").unwrap(), Term::Zero);
        assert_eq!(parse_term("Succ(Zero)").unwrap(), Term::succ(Term::Zero));
        assert_eq!(
            parse_term("Plus(Var(n),Zero)").unwrap(),
            Term::plus(Term::var("n"), Term::Zero)
        );
    }

    #[test]
    fn syntax_error_positions() {
        let e = parse_term("Succ(Zero").unwrap_err();
        assert_eq!(e.pos, 9);
        let e = parse_term("Plus(Zero Zero)").unwrap_err();
        assert_eq!(e.pos, 10);
        let e = parse_term("Succ(Zero))").unwrap_err();
        assert_eq!(e.pos, 10);
        assert!(parse_term("Var(Zero)").is_err());
        assert!(parse_term("Foo").is_err());
        assert!(parse_term("").is_err());
        assert!(parse_term("Succ(#)").is_err());
    }

    #[test]
    fn whitespace_is_insignificant() {
        let t = parse_term(" Plus ( Var(n) , Succ( Zero ) ) ").unwrap();
        assert_eq!(t.to_string(), "Plus(Var(n),Succ(Zero))");
    }

    #[test]
    fn obligation_forms() {
        for text in [
            "|- Zero = Zero",
            "forall n, |- Plus(Var(n),Zero) = Var(n)",
            "forall n m, |- Plus(Var(n),Succ(Var(m))) = Succ(Plus(Var(n),Var(m)))",
            "n'; IH_n: Plus(Var(n'),Zero) = Var(n') |- Plus(Succ(Var(n')),Zero) = Succ(Var(n'))",
        ] {
            let ob = parse_obligation(text).unwrap();
            assert_eq!(ob.to_string(), text);
        }
    }

    #[test]
    fn unbound_variable_rejected() {
        let e = parse_obligation("|- Var(n) = Var(n)").unwrap_err();
        assert!(e.msg.contains("unbound"), "{e}");
        assert!(parse_obligation("forall n n, |- Zero = Zero").is_err());
        assert!(parse_obligation("forall , |- Zero = Zero").is_err());
    }

    #[test]
    fn scripts() {
        let s = parse_script("intros; induction n; simpl; reflexivity").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.to_string(), "intros; induction n; simpl; reflexivity");
        assert!(parse_script("").unwrap().is_empty());
        assert!(parse_script("intros;").is_err());
        assert!(parse_script("induction").is_err());
        assert!(parse_script("simpl n").is_err());
        assert!(parse_script("auto").is_err());
    }

    #[test]
    fn token_stream_rebuild() {
        let text = "n; IH: Plus(Var(n),Zero) = Var(n) |- Succ(Var(n)) = Succ(Var(n))";
        let toks: Vec<Token> = lex(text).unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(obligation_from_tokens(&toks).unwrap().to_string(), text);
    }
}
