use std::collections::HashSet;

use super::{Component, ProgramIR, SendTarget, Statement, TaintError, Visibility, EXTERNAL};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Eq,
    LParen,
    RParen,
    Comma,
    LBrace,
    RBrace,
    /// Statement separator: newline or `;`.
    Sep,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$')
}

fn lex(text: &str) -> Result<Vec<Token>, TaintError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(ci, c)) = chars.peek() {
            let column = line[..ci].chars().count() + 1;
            let simple = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    chars.next();
                    continue;
                }
                '=' => Some(Tok::Eq),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                ';' => Some(Tok::Sep),
                _ => None,
            };
            if let Some(tok) = simple {
                chars.next();
                out.push(Token {
                    tok,
                    line: line_no,
                    column,
                });
                continue;
            }
            if !is_ident_start(c) {
                return Err(TaintError::Syntax {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            }
            let mut ident = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                ident.push(c);
                chars.next();
            }
            out.push(Token {
                tok: Tok::Ident(ident),
                line: line_no,
                column,
            });
        }
        out.push(Token {
            tok: Tok::Sep,
            line: line_no,
            column: line.chars().count() + 1,
        });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_tok(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn error_here(&self, message: impl Into<String>) -> TaintError {
        let (line, column) = match self.peek() {
            Some(t) => (t.line, t.column),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.column + 1))
                .unwrap_or((1, 1)),
        };
        TaintError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek_tok(0), Some(Tok::Sep)) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), TaintError> {
        if self.peek_tok(0) == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, TaintError> {
        match self.peek_tok(0) {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), TaintError> {
        match self.peek_tok(0) {
            Some(Tok::Ident(name)) if name == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(format!("expected `{kw}`"))),
        }
    }

    /// `(v1, v2, ...)` with at least one variable.
    fn args(&mut self) -> Result<Vec<String>, TaintError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.ident("variable name")?];
        while self.peek_tok(0) == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.ident("variable name")?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn end_of_statement(&mut self) -> Result<(), TaintError> {
        match self.peek_tok(0) {
            Some(Tok::Sep) => {
                self.skip_separators();
                Ok(())
            }
            Some(Tok::RBrace) => Ok(()),
            _ => Err(self.error_here("expected end of statement")),
        }
    }

    fn statement(&mut self) -> Result<Statement, TaintError> {
        if self.peek_tok(1) == Some(&Tok::Eq) {
            let dest = self.ident("variable name")?;
            self.pos += 1;
            let op = self.ident("`source`, `assign` or `recv`")?;
            return match op.as_str() {
                "source" => {
                    let api = self.ident("api name")?;
                    Ok(Statement::SourceCall { dest, api })
                }
                "assign" => {
                    let srcs = self.args()?;
                    Ok(Statement::Assign { dest, srcs })
                }
                "recv" => Ok(Statement::IccRecv { dest }),
                _ => {
                    self.pos -= 1;
                    Err(self.error_here(format!("unknown operation `{op}`")))
                }
            };
        }
        let head = self.ident("statement")?;
        match head.as_str() {
            "sink" => {
                let api = self.ident("api name")?;
                let args = self.args()?;
                Ok(Statement::SinkCall { api, args })
            }
            "send" => {
                let target = self.ident("send target")?;
                let target = if target == EXTERNAL {
                    SendTarget::External
                } else {
                    SendTarget::Component(target)
                };
                let args = self.args()?;
                Ok(Statement::IccSend { target, args })
            }
            _ => {
                self.pos -= 1;
                Err(self.error_here(format!("unknown statement `{head}`")))
            }
        }
    }

    fn component(&mut self, seen: &mut HashSet<String>) -> Result<Component, TaintError> {
        self.keyword("component")?;
        let line = self.peek().map(|t| t.line).unwrap_or(0);
        let name = self.ident("component name")?;
        if name == EXTERNAL {
            self.pos -= 1;
            return Err(self.error_here(format!("`{EXTERNAL}` is reserved")));
        }
        if !seen.insert(name.clone()) {
            return Err(TaintError::DuplicateComponent { name, line });
        }
        let visibility = match self.ident("`public` or `private`")?.as_str() {
            "public" => Visibility::Public,
            "private" => Visibility::Private,
            other => {
                self.pos -= 1;
                return Err(
                    self.error_here(format!("expected `public` or `private`, found `{other}`"))
                );
            }
        };
        self.skip_separators();
        self.expect(Tok::LBrace, "`{`")?;
        self.skip_separators();

        let mut statements = Vec::new();
        let mut defined: HashSet<String> = HashSet::new();
        while self.peek_tok(0) != Some(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err(self.error_here("unterminated component, expected `}`"));
            }
            let line = self.peek().map(|t| t.line).unwrap_or(0);
            let stmt = self.statement()?;
            for used in stmt.uses() {
                if !defined.contains(used) {
                    return Err(TaintError::UndefinedVariable {
                        component: name.clone(),
                        variable: used.clone(),
                        line,
                    });
                }
            }
            if let Some(dest) = stmt.defines() {
                if !defined.insert(dest.to_string()) {
                    return Err(TaintError::RedefinedVariable {
                        component: name.clone(),
                        variable: dest.to_string(),
                        line,
                    });
                }
            }
            statements.push(stmt);
            self.end_of_statement()?;
        }
        self.pos += 1;
        Ok(Component {
            name,
            visibility,
            statements,
        })
    }
}

/// Parse IR text into a program. Send targets are not checked here; see
/// [`resolve_icc`](super::resolve_icc).
pub fn parse_program(text: &str) -> Result<ProgramIR, TaintError> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let mut seen = HashSet::new();
    let mut components = Vec::new();
    parser.skip_separators();
    while parser.peek().is_some() {
        components.push(parser.component(&mut seen)?);
        match parser.peek_tok(0) {
            None | Some(Tok::Sep) => parser.skip_separators(),
            Some(_) => return Err(parser.error_here("expected newline after `}`")),
        }
    }
    Ok(ProgramIR { components })
}
