use super::span::{ParseError, SourceSpan};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TokenKind {
    Ident(String),
    /// `name'`
    Primed(String),
    /// `@name`
    OidLit(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Dot,
    DotDot,
    Arrow,
    EqEq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl TokenKind {
    /// Short description for error messages.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{}`", s),
            TokenKind::Primed(s) => format!("`{}'`", s),
            TokenKind::OidLit(s) => format!("`@{}`", s),
            TokenKind::Int(n) => format!("`{}`", n),
            TokenKind::Str(s) => format!("\"{}\"", s),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::DotDot => "`..`".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::Ne => "`!=`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Bang => "`!`".into(),
            TokenKind::AndAnd => "`&&`".into(),
            TokenKind::OrOr => "`||`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

/// Tokenize. Comments run from `--` to end of line; input is UTF-8.
pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let start = SourceSpan::point(line, col);
        let c = match chars.peek().copied() {
            None => {
                tokens.push(Token {
                    kind: TokenKind::Eof,
                    span: start,
                });
                return Ok(tokens);
            }
            Some(c) => c,
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' {
            bump!();
            match chars.peek() {
                Some('-') => {
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        bump!();
                    }
                    continue;
                }
                Some('>') => {
                    bump!();
                    tokens.push(Token {
                        kind: TokenKind::Arrow,
                        span: start.to(SourceSpan::point(line, col)),
                    });
                    continue;
                }
                _ => {
                    tokens.push(Token {
                        kind: TokenKind::Minus,
                        span: start,
                    });
                    continue;
                }
            }
        }
        if c.is_ascii_digit() {
            let mut n: i64 = 0;
            while let Some(&d) = chars.peek() {
                if let Some(digit) = d.to_digit(10) {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(digit as i64))
                        .ok_or_else(|| ParseError {
                            span: start,
                            expected: "an integer literal in range".into(),
                            found: "a longer number".into(),
                        })?;
                    bump!();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Int(n),
                span: start.to(SourceSpan::point(line, col)),
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    name.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            let kind = if chars.peek() == Some(&'\'') {
                bump!();
                TokenKind::Primed(name)
            } else {
                TokenKind::Ident(name)
            };
            tokens.push(Token {
                kind,
                span: start.to(SourceSpan::point(line, col)),
            });
            continue;
        }
        if c == '@' {
            bump!();
            let mut name = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    name.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            if name.is_empty() {
                return Err(ParseError {
                    span: start,
                    expected: "an object name after `@`".into(),
                    found: chars
                        .peek()
                        .map(|c| c.to_string())
                        .unwrap_or_else(|| "end of input".into()),
                });
            }
            tokens.push(Token {
                kind: TokenKind::OidLit(name),
                span: start.to(SourceSpan::point(line, col)),
            });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    None | Some('\n') => {
                        return Err(ParseError {
                            span: start,
                            expected: "a closing `\"`".into(),
                            found: "end of line".into(),
                        })
                    }
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str(s),
                span: start.to(SourceSpan::point(line, col)),
            });
            continue;
        }
        bump!();
        let two = |chars: &mut std::iter::Peekable<std::str::Chars>, follow: char| -> bool {
            chars.peek() == Some(&follow)
        };
        let kind = match c {
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            ':' => TokenKind::Colon,
            ';' => TokenKind::Semi,
            ',' => TokenKind::Comma,
            '.' => {
                if two(&mut chars, '.') {
                    bump!();
                    TokenKind::DotDot
                } else {
                    TokenKind::Dot
                }
            }
            '=' => {
                if two(&mut chars, '=') {
                    bump!();
                    TokenKind::EqEq
                } else {
                    return Err(ParseError {
                        span: start,
                        expected: "`==`".into(),
                        found: "`=`".into(),
                    });
                }
            }
            '!' => {
                if two(&mut chars, '=') {
                    bump!();
                    TokenKind::Ne
                } else {
                    TokenKind::Bang
                }
            }
            '<' => {
                if two(&mut chars, '=') {
                    bump!();
                    TokenKind::Le
                } else {
                    TokenKind::Lt
                }
            }
            '>' => {
                if two(&mut chars, '=') {
                    bump!();
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            '+' => TokenKind::Plus,
            '*' => TokenKind::Star,
            '&' => {
                if two(&mut chars, '&') {
                    bump!();
                    TokenKind::AndAnd
                } else {
                    return Err(ParseError {
                        span: start,
                        expected: "`&&`".into(),
                        found: "`&`".into(),
                    });
                }
            }
            '|' => {
                if two(&mut chars, '|') {
                    bump!();
                    TokenKind::OrOr
                } else {
                    return Err(ParseError {
                        span: start,
                        expected: "`||`".into(),
                        found: "`|`".into(),
                    });
                }
            }
            other => {
                return Err(ParseError {
                    span: start,
                    expected: "a token".into(),
                    found: format!("`{}`", other),
                })
            }
        };
        tokens.push(Token {
            kind,
            span: start.to(SourceSpan::point(line, col)),
        });
    }
}
