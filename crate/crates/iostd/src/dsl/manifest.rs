//! Manifest files describe a reproducible run: which behavior files to
//! load, the object instances, the script, the scheduler, and bounds.
//! They share the lexer and value syntax of behavior files.

use crate::kernel::{MessageKind, ObjectId, Value};

use super::lexer::{lex, Token, TokenKind};
use super::span::ParseError;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ObjectDecl {
    pub id: String,
    pub behavior: String,
    pub pool: u32,
    /// Initial-state selector: one value per attribute.
    pub attrs: Vec<(String, Value)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InjectDecl {
    pub at: usize,
    pub kind: MessageKind,
    pub target: String,
    pub service: String,
    pub args: Vec<Value>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchedulerDecl {
    Random,
    RoundRobin,
    Exhaustive,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PolicyDecl {
    Reject,
    Havoc,
}

/// Parsed manifest, prior to loading the referenced behavior files.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ManifestDoc {
    pub specs: Vec<String>,
    pub objects: Vec<ObjectDecl>,
    pub scheduler: SchedulerDecl,
    pub seed: u64,
    pub policy: PolicyDecl,
    pub bound: Option<usize>,
    pub exttags: u32,
    pub injections: Vec<InjectDecl>,
    pub stop_steps: Option<usize>,
}

impl Default for ManifestDoc {
    fn default() -> Self {
        ManifestDoc {
            specs: Vec::new(),
            objects: Vec::new(),
            scheduler: SchedulerDecl::Random,
            seed: 0,
            policy: PolicyDecl::Reject,
            bound: None,
            exttags: 1,
            injections: Vec::new(),
            stop_steps: None,
        }
    }
}

struct P {
    tokens: Vec<Token>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.peek().span,
            expected: expected.into(),
            found: self.peek().kind.describe(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            self.err(kind.describe())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == kw => {
                self.advance();
                Ok(())
            }
            _ => self.err(format!("`{}`", kw)),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == kw => {
                self.advance();
                true
            }
            _ => false,
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.err(what),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64, ParseError> {
        let neg = if self.peek().kind == TokenKind::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(if neg { -n } else { n })
            }
            _ => self.err(what),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Int(_) | TokenKind::Minus => Ok(Value::Int(self.int("a value")?)),
            TokenKind::OidLit(name) => {
                self.advance();
                Ok(Value::Obj(ObjectId::new(name)))
            }
            TokenKind::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => Ok(Value::Enum(name)),
                }
            }
            _ => self.err("a value"),
        }
    }
}

/// Parse a manifest file.
pub fn parse_manifest(text: &str) -> Result<ManifestDoc, Vec<ParseError>> {
    parse_inner(text).map_err(|e| vec![e])
}

fn parse_inner(text: &str) -> Result<ManifestDoc, ParseError> {
    let mut p = P {
        tokens: lex(text)?,
        pos: 0,
    };
    let mut doc = ManifestDoc::default();

    p.expect_kw("manifest")?;
    p.expect(TokenKind::LBrace)?;
    loop {
        if p.peek().kind == TokenKind::RBrace {
            p.advance();
            break;
        }
        if p.eat_kw("spec") {
            match p.peek().kind.clone() {
                TokenKind::Str(path) => {
                    p.advance();
                    doc.specs.push(path);
                }
                _ => return p.err("a quoted path"),
            }
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("object") {
            let id = p.ident("an object name")?;
            p.expect(TokenKind::Colon)?;
            let behavior = p.ident("a behavior name")?;
            p.expect(TokenKind::LBrace)?;
            let mut pool = 1u32;
            let mut attrs = Vec::new();
            loop {
                if p.peek().kind == TokenKind::RBrace {
                    p.advance();
                    break;
                }
                if p.eat_kw("pool") {
                    pool = p.int("a pool size")? as u32;
                    p.expect(TokenKind::Semi)?;
                    continue;
                }
                if p.eat_kw("attrs") {
                    p.expect(TokenKind::LBrace)?;
                    if p.peek().kind != TokenKind::RBrace {
                        loop {
                            let name = p.ident("an attribute name")?;
                            p.expect(TokenKind::Colon)?;
                            let value = p.value()?;
                            attrs.push((name, value));
                            if p.peek().kind != TokenKind::Comma {
                                break;
                            }
                            p.advance();
                        }
                    }
                    p.expect(TokenKind::RBrace)?;
                    continue;
                }
                return p.err("`pool`, `attrs`, or `}`");
            }
            doc.objects.push(ObjectDecl {
                id,
                behavior,
                pool,
                attrs,
            });
            continue;
        }
        if p.eat_kw("scheduler") {
            doc.scheduler = if p.eat_kw("random") {
                SchedulerDecl::Random
            } else if p.eat_kw("roundrobin") {
                SchedulerDecl::RoundRobin
            } else if p.eat_kw("exhaustive") {
                SchedulerDecl::Exhaustive
            } else {
                return p.err("`random`, `roundrobin`, or `exhaustive`");
            };
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("seed") {
            doc.seed = p.int("a seed")? as u64;
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("policy") {
            doc.policy = if p.eat_kw("reject") {
                PolicyDecl::Reject
            } else if p.eat_kw("havoc") {
                PolicyDecl::Havoc
            } else {
                return p.err("`reject` or `havoc`");
            };
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("bound") {
            doc.bound = Some(p.int("a bound")? as usize);
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("exttags") {
            doc.exttags = p.int("a tag count")? as u32;
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("stop") {
            p.expect_kw("steps")?;
            doc.stop_steps = Some(p.int("a step budget")? as usize);
            p.expect(TokenKind::Semi)?;
            continue;
        }
        if p.eat_kw("inject") {
            p.expect_kw("at")?;
            let at = p.int("a step index")? as usize;
            let kind = if p.eat_kw("seq") {
                MessageKind::SequCall
            } else if p.eat_kw("conc") {
                MessageKind::ConcCall
            } else if p.eat_kw("ret") {
                MessageKind::Ret
            } else {
                return p.err("`seq`, `conc`, or `ret`");
            };
            let target = p.ident("a target object")?;
            p.expect(TokenKind::Dot)?;
            let service = p.ident("a service name")?;
            p.expect(TokenKind::LParen)?;
            let mut args = Vec::new();
            if p.peek().kind != TokenKind::RParen {
                loop {
                    args.push(p.value()?);
                    if p.peek().kind != TokenKind::Comma {
                        break;
                    }
                    p.advance();
                }
            }
            p.expect(TokenKind::RParen)?;
            p.expect(TokenKind::Semi)?;
            doc.injections.push(InjectDecl {
                at,
                kind,
                target,
                service,
                args,
            });
            continue;
        }
        return p.err("a manifest entry or `}`");
    }
    Ok(doc)
}
