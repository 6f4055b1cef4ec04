use crate::kernel::Value;
use crate::spec::{
    BehaviorDescription, BinOp, Binder, Callable, DiagramState, DiagramTransition, Domain, Expr,
    OutputKind, OutputTemplate, Pattern, ServiceStd, VarDecl,
};

use super::lexer::{lex, Token, TokenKind};
use super::span::ParseError;

/// Signal that an error was recorded and the parser has resynchronized.
struct Recover;

type Parsed<T> = Result<T, Recover>;

pub(super) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
}

impl Parser {
    pub(super) fn new(text: &str) -> Result<Parser, Vec<ParseError>> {
        let tokens = lex(text).map_err(|e| vec![e])?;
        Ok(Parser {
            tokens,
            pos: 0,
            errors: Vec::new(),
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&mut self, expected: impl Into<String>) -> Recover {
        let tok = self.peek().clone();
        self.errors.push(ParseError {
            span: tok.span,
            expected: expected.into(),
            found: tok.kind.describe(),
        });
        Recover
    }

    fn expect(&mut self, kind: TokenKind) -> Parsed<Token> {
        if self.at(&kind) {
            Ok(self.advance())
        } else {
            Err(self.error(kind.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Parsed<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("`{}`", kw)))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Parsed<String> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.error(what)),
        }
    }

    /// Skip to just past the next `;`, or stop before a closing `}` /
    /// end of input, so that one bad statement costs one error.
    fn recover_statement(&mut self) {
        loop {
            match &self.peek().kind {
                TokenKind::Semi => {
                    self.advance();
                    return;
                }
                TokenKind::RBrace | TokenKind::Eof => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    /// Skip past the matching `}` of a block whose `{` was consumed.
    fn recover_block(&mut self) {
        let mut depth = 1usize;
        loop {
            match &self.peek().kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => {
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                TokenKind::Eof => return,
                _ => {}
            }
            self.advance();
        }
    }

    // ---- expressions ----------------------------------------------------

    fn expr(&mut self) -> Parsed<Expr> {
        self.expr_or()
    }

    fn expr_or(&mut self) -> Parsed<Expr> {
        let mut e = self.expr_and()?;
        while self.eat(&TokenKind::OrOr) {
            let r = self.expr_and()?;
            e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_and(&mut self) -> Parsed<Expr> {
        let mut e = self.expr_cmp()?;
        while self.eat(&TokenKind::AndAnd) {
            let r = self.expr_cmp()?;
            e = Expr::Bin(BinOp::And, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_cmp(&mut self) -> Parsed<Expr> {
        let e = self.expr_add()?;
        let op = match &self.peek().kind {
            TokenKind::EqEq => Some(BinOp::Eq),
            TokenKind::Ne => Some(BinOp::Ne),
            TokenKind::Le => Some(BinOp::Le),
            TokenKind::Ge => Some(BinOp::Ge),
            TokenKind::Lt => Some(BinOp::Lt),
            TokenKind::Gt => Some(BinOp::Gt),
            _ => None,
        };
        match op {
            None => Ok(e),
            Some(op) => {
                self.advance();
                let r = self.expr_add()?;
                Ok(Expr::Bin(op, Box::new(e), Box::new(r)))
            }
        }
    }

    fn expr_add(&mut self) -> Parsed<Expr> {
        let mut e = self.expr_mul()?;
        loop {
            let op = match &self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let r = self.expr_mul()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_mul(&mut self) -> Parsed<Expr> {
        let mut e = self.expr_unary()?;
        while self.eat(&TokenKind::Star) {
            let r = self.expr_unary()?;
            e = Expr::Bin(BinOp::Mul, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_unary(&mut self) -> Parsed<Expr> {
        if self.eat(&TokenKind::Bang) {
            let e = self.expr_unary()?;
            return Ok(Expr::Not(Box::new(e)));
        }
        self.expr_atom()
    }

    fn expr_atom(&mut self) -> Parsed<Expr> {
        let kind = self.peek().kind.clone();
        match kind {
            TokenKind::Int(n) => {
                self.advance();
                Ok(Expr::Lit(Value::Int(n)))
            }
            TokenKind::Minus => {
                self.advance();
                match self.peek().kind.clone() {
                    TokenKind::Int(n) => {
                        self.advance();
                        Ok(Expr::Lit(Value::Int(-n)))
                    }
                    _ => Err(self.error("an integer after `-`")),
                }
            }
            TokenKind::OidLit(name) => {
                self.advance();
                Ok(Expr::Lit(Value::Obj(crate::kernel::ObjectId::new(name))))
            }
            TokenKind::Primed(name) => {
                self.advance();
                Ok(Expr::Primed(name))
            }
            TokenKind::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "true" => Ok(Expr::Lit(Value::Bool(true))),
                    "false" => Ok(Expr::Lit(Value::Bool(false))),
                    _ => Ok(Expr::Var(name)),
                }
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            _ => Err(self.error("an expression")),
        }
    }

    // ---- domains and declarations ---------------------------------------

    fn domain(&mut self) -> Parsed<Domain> {
        if self.eat_kw("bool") {
            return Ok(Domain::Bool);
        }
        if self.eat_kw("int") {
            let lo = self.int_bound()?;
            self.expect(TokenKind::DotDot)?;
            let hi = self.int_bound()?;
            return Ok(Domain::Int { lo, hi });
        }
        if self.eat_kw("enum") {
            let names = self.ident_set()?;
            return Ok(Domain::Enum(names));
        }
        if self.eat_kw("oid") {
            let names = self.ident_set()?;
            return Ok(Domain::Obj(
                names
                    .into_iter()
                    .map(crate::kernel::ObjectId::new)
                    .collect(),
            ));
        }
        Err(self.error("a domain (`bool`, `int lo..hi`, `enum {...}`, or `oid {...}`)"))
    }

    fn int_bound(&mut self) -> Parsed<i64> {
        let neg = self.eat(&TokenKind::Minus);
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error("an integer bound")),
        }
    }

    fn ident_set(&mut self) -> Parsed<Vec<String>> {
        self.expect(TokenKind::LBrace)?;
        let mut names = Vec::new();
        if !self.at(&TokenKind::RBrace) {
            loop {
                names.push(self.expect_ident("a name")?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(names)
    }

    fn var_decl(&mut self) -> Parsed<VarDecl> {
        let name = self.expect_ident("a variable name")?;
        self.expect(TokenKind::Colon)?;
        let domain = self.domain()?;
        Ok(VarDecl { name, domain })
    }

    // ---- behavior --------------------------------------------------------

    pub(super) fn behavior(mut self) -> Result<BehaviorDescription, Vec<ParseError>> {
        let beh = self.behavior_inner();
        match beh {
            Ok(beh) if self.errors.is_empty() => Ok(beh),
            _ => Err(self.errors),
        }
    }

    fn behavior_inner(&mut self) -> Parsed<BehaviorDescription> {
        self.expect_kw("behavior")?;
        let name = self.expect_ident("a behavior name")?;
        self.expect(TokenKind::LBrace)?;

        let mut attributes = Vec::new();
        let mut init = Expr::lit_true();
        let mut services = Vec::new();

        loop {
            if self.eat(&TokenKind::RBrace) {
                break;
            }
            if self.at(&TokenKind::Eof) {
                self.error("`}` closing the behavior");
                break;
            }
            if self.eat_kw("attributes") {
                if self.expect(TokenKind::LBrace).is_err() {
                    self.recover_statement();
                    continue;
                }
                while !self.eat(&TokenKind::RBrace) {
                    if self.at(&TokenKind::Eof) {
                        self.error("`}` closing attributes");
                        break;
                    }
                    match self.var_decl() {
                        Ok(decl) => {
                            attributes.push(decl);
                            if self.expect(TokenKind::Semi).is_err() {
                                self.recover_statement();
                            }
                        }
                        Err(Recover) => self.recover_statement(),
                    }
                }
                continue;
            }
            if self.eat_kw("init") {
                if self.expect(TokenKind::LBrace).is_err() {
                    self.recover_statement();
                    continue;
                }
                match self.expr() {
                    Ok(e) => {
                        init = e;
                        if self.expect(TokenKind::RBrace).is_err() {
                            self.recover_block();
                        }
                    }
                    Err(Recover) => self.recover_block(),
                }
                continue;
            }
            if self.eat_kw("service") {
                if let Ok(svc) = self.service() {
                    services.push(svc)
                }
                continue;
            }
            self.error("`attributes`, `init`, `service`, or `}`");
            self.advance();
        }

        let mut beh = BehaviorDescription {
            name,
            attributes,
            init,
            services,
        };
        resolve_enum_literals(&mut beh);
        Ok(beh)
    }

    fn service(&mut self) -> Parsed<ServiceStd> {
        let name = self.expect_ident("a service name")?;
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                params.push(self.var_decl()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        let callable = if self.eat_kw("callable") {
            if self.eat_kw("seq") {
                Callable::Seq
            } else if self.eat_kw("conc") {
                Callable::Conc
            } else if self.eat_kw("both") {
                Callable::Both
            } else {
                return Err(self.error("`seq`, `conc`, or `both`"));
            }
        } else {
            Callable::Both
        };
        self.expect(TokenKind::LBrace)?;

        let mut locals = Vec::new();
        let mut states = Vec::new();
        let mut initial = Vec::new();
        let mut exclusions: Vec<(String, Vec<String>)> = Vec::new();
        let mut transitions = Vec::new();

        loop {
            if self.eat(&TokenKind::RBrace) {
                break;
            }
            if self.at(&TokenKind::Eof) {
                self.error("`}` closing the service");
                break;
            }
            if self.eat_kw("locals") {
                if self.expect(TokenKind::LBrace).is_err() {
                    self.recover_statement();
                    continue;
                }
                while !self.eat(&TokenKind::RBrace) {
                    if self.at(&TokenKind::Eof) {
                        break;
                    }
                    match self.var_decl() {
                        Ok(decl) => {
                            locals.push(decl);
                            if self.expect(TokenKind::Semi).is_err() {
                                self.recover_statement();
                            }
                        }
                        Err(Recover) => self.recover_statement(),
                    }
                }
                continue;
            }
            if self.eat_kw("states") {
                if self.expect(TokenKind::LBrace).is_err() {
                    self.recover_statement();
                    continue;
                }
                while !self.eat(&TokenKind::RBrace) {
                    if self.at(&TokenKind::Eof) {
                        break;
                    }
                    match self.diagram_state() {
                        Ok(st) => states.push(st),
                        Err(Recover) => self.recover_statement(),
                    }
                }
                continue;
            }
            if self.eat_kw("initial") {
                while let Ok(name) = self.expect_ident("a state name") {
                    initial.push(name);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                if self.expect(TokenKind::Semi).is_err() {
                    self.recover_statement();
                }
                continue;
            }
            if self.eat_kw("exclusions") {
                if self.expect(TokenKind::LBrace).is_err() {
                    self.recover_statement();
                    continue;
                }
                while !self.eat(&TokenKind::RBrace) {
                    if self.at(&TokenKind::Eof) {
                        break;
                    }
                    match self.exclusion_entry() {
                        Ok(entry) => exclusions.push(entry),
                        Err(Recover) => self.recover_statement(),
                    }
                }
                continue;
            }
            if self.eat_kw("trans") {
                if let Ok(t) = self.transition() {
                    transitions.push(t)
                }
                continue;
            }
            self.error("`locals`, `states`, `initial`, `exclusions`, `trans`, or `}`");
            self.advance();
        }

        // Attach exclusion sets to their states.
        let end_span = self.peek().span;
        for (state_name, services) in exclusions {
            match states.iter_mut().find(|s| s.name == state_name) {
                Some(state) => state.exclusions = services,
                None => {
                    self.errors.push(ParseError {
                        span: end_span,
                        expected: format!("a declared state for exclusions (`{}`)", state_name),
                        found: "no such state".into(),
                    });
                }
            }
        }

        let svc = ServiceStd {
            name,
            callable,
            params,
            locals,
            states,
            initial,
            transitions,
        };

        // Purely syntactic invariants a successful parse guarantees:
        // a nonempty initial set and declared transition endpoints.
        if svc.initial.is_empty() {
            self.errors.push(ParseError {
                span: end_span,
                expected: format!("an `initial` clause in service `{}`", svc.name),
                found: "none".into(),
            });
        }
        for name in &svc.initial {
            if svc.state(name).is_none() {
                self.errors.push(ParseError {
                    span: end_span,
                    expected: format!("a declared initial state in `{}`", svc.name),
                    found: format!("`{}`", name),
                });
            }
        }
        for t in &svc.transitions {
            for endpoint in [&t.from, &t.to] {
                if svc.state(endpoint).is_none() {
                    self.errors.push(ParseError {
                        span: end_span,
                        expected: format!("a declared state in `{}`", svc.name),
                        found: format!("`{}`", endpoint),
                    });
                }
            }
        }

        Ok(svc)
    }

    fn diagram_state(&mut self) -> Parsed<DiagramState> {
        let name = self.expect_ident("a state name")?;
        self.expect(TokenKind::Colon)?;
        let label = self.expr()?;
        self.expect(TokenKind::Semi)?;
        Ok(DiagramState {
            name,
            label,
            exclusions: Vec::new(),
        })
    }

    fn exclusion_entry(&mut self) -> Parsed<(String, Vec<String>)> {
        let state = self.expect_ident("a state name")?;
        self.expect(TokenKind::Colon)?;
        self.expect(TokenKind::LBracket)?;
        let mut services = Vec::new();
        if !self.at(&TokenKind::RBracket) {
            loop {
                services.push(self.expect_ident("a service name")?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RBracket)?;
        self.expect(TokenKind::Semi)?;
        Ok((state, services))
    }

    fn transition(&mut self) -> Parsed<DiagramTransition> {
        let from = self.expect_ident("a source state")?;
        self.expect(TokenKind::Arrow)?;
        let to = self.expect_ident("a target state")?;
        self.expect(TokenKind::LBrace)?;

        let mut pattern = None;
        let mut pre = Expr::lit_true();
        let mut post = Expr::lit_true();
        let mut outputs = Vec::new();

        loop {
            if self.eat(&TokenKind::RBrace) {
                break;
            }
            if self.at(&TokenKind::Eof) {
                self.error("`}` closing the transition");
                break;
            }
            if self.eat_kw("when") {
                match self.pattern() {
                    Ok(p) => {
                        pattern = Some(p);
                        if self.expect(TokenKind::Semi).is_err() {
                            self.recover_statement();
                        }
                    }
                    Err(Recover) => self.recover_statement(),
                }
                continue;
            }
            if self.eat_kw("pre") {
                match self.expr() {
                    Ok(e) => {
                        pre = e;
                        if self.expect(TokenKind::Semi).is_err() {
                            self.recover_statement();
                        }
                    }
                    Err(Recover) => self.recover_statement(),
                }
                continue;
            }
            if self.eat_kw("post") {
                match self.expr() {
                    Ok(e) => {
                        post = e;
                        if self.expect(TokenKind::Semi).is_err() {
                            self.recover_statement();
                        }
                    }
                    Err(Recover) => self.recover_statement(),
                }
                continue;
            }
            if self.eat_kw("out") {
                match self.output() {
                    Ok(o) => {
                        outputs.push(o);
                        if self.expect(TokenKind::Semi).is_err() {
                            self.recover_statement();
                        }
                    }
                    Err(Recover) => self.recover_statement(),
                }
                continue;
            }
            self.error("`when`, `pre`, `post`, `out`, or `}`");
            self.advance();
        }

        let pattern = match pattern {
            Some(p) => p,
            None => {
                self.error("a `when` clause in the transition");
                Pattern {
                    name: String::new(),
                    binders: Vec::new(),
                    sender: None,
                }
            }
        };
        Ok(DiagramTransition {
            from,
            pattern,
            pre,
            to,
            outputs,
            post,
        })
    }

    fn pattern(&mut self) -> Parsed<Pattern> {
        let name = self.expect_ident("a message name")?;
        self.expect(TokenKind::LParen)?;
        let mut binders = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                let bname = self.expect_ident("a binder")?;
                let domain = if self.eat(&TokenKind::Colon) {
                    Some(self.domain()?)
                } else {
                    None
                };
                binders.push(Binder {
                    name: bname,
                    domain,
                });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        let sender = if self.eat_kw("from") {
            Some(self.expect_ident("a sender binder")?)
        } else {
            None
        };
        Ok(Pattern {
            name,
            binders,
            sender,
        })
    }

    fn output(&mut self) -> Parsed<OutputTemplate> {
        let target = self.expr()?;
        self.expect(TokenKind::Dot)?;
        let message = self.expect_ident("a message name")?;
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        let marker = self.expect_ident("`seq` or `conc`")?;
        let kind = match (marker.as_str(), message == crate::kernel::RET_NAME) {
            ("seq", true) => OutputKind::Ret,
            ("seq", false) => OutputKind::Seq,
            ("conc", _) => OutputKind::Conc,
            _ => return Err(self.error("`seq` or `conc`")),
        };
        Ok(OutputTemplate {
            target,
            message,
            args,
            kind,
        })
    }
}

/// Rewrite bare variable references that name a declared enum constant
/// into enum literals. Declared variable names take precedence.
fn resolve_enum_literals(beh: &mut BehaviorDescription) {
    let constants = beh.enum_constants();
    let mut declared: std::collections::BTreeSet<String> =
        beh.attributes.iter().map(|a| a.name.clone()).collect();
    for svc in &beh.services {
        declared.extend(svc.params.iter().map(|p| p.name.clone()));
        declared.extend(svc.locals.iter().map(|l| l.name.clone()));
        for t in &svc.transitions {
            declared.extend(t.pattern.binders.iter().map(|b| b.name.clone()));
            declared.extend(t.pattern.sender.iter().cloned());
        }
    }
    declared.insert("self".into());
    declared.insert(crate::spec::SENDER_NAME.into());

    fn rewrite(
        e: &mut Expr,
        constants: &std::collections::BTreeSet<String>,
        declared: &std::collections::BTreeSet<String>,
    ) {
        match e {
            Expr::Var(name) if constants.contains(name) && !declared.contains(name) => {
                *e = Expr::Lit(Value::Enum(name.clone()));
            }
            Expr::Not(inner) => rewrite(inner, constants, declared),
            Expr::Bin(_, l, r) => {
                rewrite(l, constants, declared);
                rewrite(r, constants, declared);
            }
            _ => {}
        }
    }

    let mut init = std::mem::replace(&mut beh.init, Expr::lit_true());
    rewrite(&mut init, &constants, &declared);
    beh.init = init;
    for svc in &mut beh.services {
        for st in &mut svc.states {
            rewrite(&mut st.label, &constants, &declared);
        }
        for t in &mut svc.transitions {
            rewrite(&mut t.pre, &constants, &declared);
            rewrite(&mut t.post, &constants, &declared);
            for o in &mut t.outputs {
                rewrite(&mut o.target, &constants, &declared);
                for a in &mut o.args {
                    rewrite(a, &constants, &declared);
                }
            }
        }
    }
}
