//! Recursive-descent parser for the supported Java subset.
//!
//! Covers compilation units, classes, interfaces, enums and records, method
//! and field declarations, all statement forms including try-with-resources
//! and arrow switches, and the full expression grammar with lambdas, method
//! references, casts and anonymous classes. Generic arguments are parsed and
//! kept only as text. A source that is just a list of methods or statements is
//! accepted as the body of an implicit class.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

const MODIFIERS: [&str; 13] = [
    "public", "protected", "private", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "sealed", "default",
];

const PRIMITIVES: [&str; 9] = ["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

const RESERVED: [&str; 30] = [
    "if", "else", "while", "do", "for", "try", "catch", "finally", "throw", "return", "break",
    "continue", "switch", "case", "new", "class", "interface", "enum", "instanceof", "synchronized",
    "assert", "throws", "extends", "implements", "import", "package", "true", "false", "null", "default",
];

type PResult<T> = Result<T, ParseError>;

pub fn parse_compilation_unit(src: &str) -> PResult<CompilationUnit> {
    let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
    p.compilation_unit()
}

/// Parses a standalone expression; used by tests and tooling.
pub fn parse_expression(src: &str) -> PResult<Expr> {
    let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.error("trailing input after expression"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    // ----- token helpers -------------------------------------------------

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn start(&self) -> usize {
        self.peek().start
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn is(&self, p: &str) -> bool {
        self.peek().is_punct(p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.peek().is_ident(kw)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().ident() {
            Some(name) if !RESERVED.contains(&name) => {
                let name = name.to_string();
                self.bump();
                Ok(name)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let found = match &self.peek().kind {
            TokenKind::Eof => "end of input".to_string(),
            _ => format!("`{}`", &self.src[self.peek().start..self.peek().end]),
        };
        ParseError::at(self.src, self.start(), format!("{}, found {found}", msg.into()))
    }

    /// Runs `f`, rewinding on failure.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let save = self.pos;
        let r = f(self);
        if r.is_err() {
            self.pos = save;
        }
        r
    }

    /// `>` tokens that touch form `>>`, `>=` and friends.
    fn adjacent(&self, n: usize) -> bool {
        self.peek_at(n).end == self.peek_at(n + 1).start
    }

    // ----- compilation unit ----------------------------------------------

    fn compilation_unit(&mut self) -> PResult<CompilationUnit> {
        let mut package = None;
        if self.is_kw("package") || (self.is("@") && self.package_after_annotations()) {
            self.skip_annotations()?;
            self.expect_kw("package")?;
            package = Some(self.qualified_name()?);
            self.expect(";")?;
        }
        let mut imports = Vec::new();
        while self.eat_kw("import") {
            let is_static = self.eat_kw("static");
            let mut path = self.ident()?;
            let mut wildcard = false;
            while self.eat(".") {
                if self.eat("*") {
                    wildcard = true;
                    break;
                }
                path.push('.');
                path.push_str(&self.ident()?);
            }
            self.expect(";")?;
            imports.push(Import { path, is_static, wildcard });
        }

        let mut types = Vec::new();
        let mut loose = TypeDecl { name: String::new(), extends: None, members: Vec::new() };
        let mut loose_stmts: Vec<Stmt> = Vec::new();
        let loose_start = self.start();
        while !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            let save = self.pos;
            match self.member("") {
                Ok(Some(Member::Type(t))) if loose.members.is_empty() && loose_stmts.is_empty() => types.push(t),
                Ok(Some(Member::Type(t))) => loose.members.push(Member::Type(t)),
                // a loose declaration reads as a local variable of the snippet
                Ok(Some(Member::Field { ty, vars })) => loose_stmts.push(Stmt {
                    kind: StmtKind::LocalVar { ty, vars },
                    span: self.toks[save].start..self.prev_end(),
                }),
                Ok(Some(m)) => loose.members.push(m),
                Ok(None) => {}
                Err(member_err) => {
                    let member_pos = member_err.offset;
                    self.pos = save;
                    match self.block_stmt() {
                        Ok(s) => loose_stmts.push(s),
                        Err(stmt_err) => {
                            return Err(if stmt_err.offset >= member_pos { stmt_err } else { member_err });
                        }
                    }
                }
            }
        }
        if !loose_stmts.is_empty() {
            let span = loose_start..self.prev_end();
            loose.members.push(Member::Initializer(Block { stmts: loose_stmts, span }));
        }
        if !loose.members.is_empty() {
            types.insert(0, loose);
        }
        Ok(CompilationUnit { package, imports, types })
    }

    fn package_after_annotations(&mut self) -> bool {
        let save = self.pos;
        let ok = self.skip_annotations().is_ok() && self.is_kw("package");
        self.pos = save;
        ok
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.is(".") && self.peek_at(1).ident().is_some() {
            self.bump();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn skip_annotations(&mut self) -> PResult<()> {
        while self.is("@") && !self.peek_at(1).is_ident("interface") {
            self.bump();
            self.qualified_name()?;
            if self.is("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1;
        while depth > 0 {
            if self.at_eof() {
                return Err(self.error(format!("unbalanced `{open}`")));
            }
            let t = self.bump();
            if t.is_punct(open) {
                depth += 1;
            } else if t.is_punct(close) {
                depth -= 1;
            }
        }
        Ok(())
    }

    fn modifiers(&mut self) -> PResult<()> {
        loop {
            if self.is("@") && !self.peek_at(1).is_ident("interface") {
                self.skip_annotations()?;
            } else if let Some(m) = self.peek().ident() {
                if MODIFIERS.contains(&m) && !(m == "default" && (self.peek_at(1).is_punct(":") || self.peek_at(1).is_punct("->"))) {
                    // `synchronized (x) {}` is a statement, not a modifier
                    if m == "synchronized" && self.peek_at(1).is_punct("(") {
                        return Ok(());
                    }
                    self.bump();
                } else if m == "non" && self.peek_at(1).is_punct("-") && self.peek_at(2).is_ident("sealed") {
                    self.bump();
                    self.bump();
                    self.bump();
                } else {
                    return Ok(());
                }
            } else {
                return Ok(());
            }
        }
    }

    fn at_type_decl(&self) -> bool {
        self.is_kw("class")
            || self.is_kw("interface")
            || self.is_kw("enum")
            || (self.is("@") && self.peek_at(1).is_ident("interface"))
            || (self.is_kw("record") && self.peek_at(1).ident().is_some() && (self.peek_at(2).is_punct("(") || self.peek_at(2).is_punct("<")))
    }

    // ----- declarations --------------------------------------------------

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        let kind = if self.eat("@") {
            self.expect_kw("interface")?;
            "interface"
        } else {
            match self.bump().ident() {
                Some("class") => "class",
                Some("interface") => "interface",
                Some("enum") => "enum",
                Some("record") => "record",
                _ => return Err(self.error("expected type declaration")),
            }
        };
        let name = self.ident()?;
        if self.is("<") {
            self.skip_type_params()?;
        }
        let mut members = Vec::new();
        if kind == "record" {
            let params = self.params()?;
            for p in params {
                members.push(Member::Field {
                    ty: p.ty,
                    vars: vec![VarDecl { name: p.name, dims: 0, init: None }],
                });
            }
        }
        let mut extends = None;
        loop {
            if self.eat_kw("extends") {
                let first = self.type_ref()?;
                if kind == "class" {
                    extends = Some(first);
                }
                while self.eat(",") {
                    self.type_ref()?;
                }
            } else if self.eat_kw("implements") || self.eat_kw("permits") {
                self.type_ref()?;
                while self.eat(",") {
                    self.type_ref()?;
                }
            } else {
                break;
            }
        }
        self.expect("{")?;
        if kind == "enum" {
            self.enum_constants(&mut members)?;
        }
        while !self.eat("}") {
            if self.at_eof() {
                return Err(self.error("unterminated type body"));
            }
            if let Some(m) = self.member(&name)? {
                members.push(m);
            }
        }
        Ok(TypeDecl { name, extends, members })
    }

    fn enum_constants(&mut self, members: &mut Vec<Member>) -> PResult<()> {
        loop {
            self.skip_annotations()?;
            if self.is(";") || self.is("}") {
                break;
            }
            let start = self.start();
            let name = self.ident()?;
            let args = if self.is("(") { self.args()? } else { Vec::new() };
            let body = if self.is("{") { Some(self.class_body()?) } else { None };
            let span = start..self.prev_end();
            members.push(Member::Field {
                ty: TypeRef::simple(""),
                vars: vec![VarDecl {
                    name,
                    dims: 0,
                    init: Some(Expr {
                        kind: ExprKind::New { ty: TypeRef::simple(""), args, body, outer: None },
                        span,
                    }),
                }],
            });
            if !self.eat(",") {
                break;
            }
        }
        self.eat(";");
        Ok(())
    }

    fn class_body(&mut self) -> PResult<Vec<Member>> {
        self.expect("{")?;
        let mut members = Vec::new();
        while !self.eat("}") {
            if self.at_eof() {
                return Err(self.error("unterminated class body"));
            }
            if let Some(m) = self.member("")? {
                members.push(m);
            }
        }
        Ok(members)
    }

    fn skip_type_params(&mut self) -> PResult<()> {
        self.expect("<")?;
        let mut depth = 1;
        while depth > 0 {
            if self.at_eof() {
                return Err(self.error("unterminated type parameters"));
            }
            let t = self.bump();
            if t.is_punct("<") {
                depth += 1;
            } else if t.is_punct(">") {
                depth -= 1;
            }
        }
        Ok(())
    }

    fn member(&mut self, class_name: &str) -> PResult<Option<Member>> {
        if self.eat(";") {
            return Ok(None);
        }
        let start = self.start();
        self.modifiers()?;
        if self.is("{") {
            return Ok(Some(Member::Initializer(self.block()?)));
        }
        if self.at_type_decl() {
            return Ok(Some(Member::Type(self.type_decl()?)));
        }
        if self.is("<") {
            self.skip_type_params()?;
        }
        // constructor: `Name(` or compact record constructor `Name {`
        if let Some(name) = self.peek().ident() {
            let name = name.to_string();
            let ctor_like = self.peek_at(1).is_punct("(")
                || (!class_name.is_empty() && name == class_name && self.peek_at(1).is_punct("{"));
            if ctor_like && !PRIMITIVES.contains(&name.as_str()) {
                self.bump();
                let params = if self.is("(") { self.params()? } else { Vec::new() };
                let throws = self.throws_clause()?;
                let body = Some(self.block()?);
                return Ok(Some(Member::Method(MethodDecl {
                    name,
                    constructor: true,
                    params,
                    throws,
                    body,
                    span: start..self.prev_end(),
                })));
            }
        }
        let ty = self.type_ref()?;
        let name = self.ident()?;
        if self.is("(") {
            let params = self.params()?;
            while self.is("[") {
                self.bump();
                self.expect("]")?;
            }
            let throws = self.throws_clause()?;
            let body = if self.eat(";") {
                None
            } else if self.eat_kw("default") {
                self.var_init()?;
                self.expect(";")?;
                None
            } else {
                Some(self.block()?)
            };
            return Ok(Some(Member::Method(MethodDecl {
                name,
                constructor: false,
                params,
                throws,
                body,
                span: start..self.prev_end(),
            })));
        }
        let vars = self.declarators(name)?;
        self.expect(";")?;
        Ok(Some(Member::Field { ty, vars }))
    }

    fn throws_clause(&mut self) -> PResult<Vec<TypeRef>> {
        let mut out = Vec::new();
        if self.eat_kw("throws") {
            out.push(self.type_ref()?);
            while self.eat(",") {
                out.push(self.type_ref()?);
            }
        }
        Ok(out)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.modifiers()?;
            let mut ty = self.type_ref()?;
            self.skip_annotations()?;
            if self.eat("...") {
                ty.array_dims += 1;
                ty.text.push_str("...");
            }
            if self.eat_kw("this") {
                // receiver parameter
            } else {
                let name = self.ident()?;
                while self.is("[") {
                    self.bump();
                    self.expect("]")?;
                    ty.array_dims += 1;
                }
                params.push(Param { ty, name });
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(params)
    }

    fn declarators(&mut self, first: String) -> PResult<Vec<VarDecl>> {
        let mut vars = Vec::new();
        let mut name = first;
        loop {
            let mut dims = 0;
            while self.is("[") {
                self.bump();
                self.expect("]")?;
                dims += 1;
            }
            let init = if self.eat("=") { Some(self.var_init()?) } else { None };
            vars.push(VarDecl { name, dims, init });
            if !self.eat(",") {
                break;
            }
            name = self.ident()?;
        }
        Ok(vars)
    }

    fn var_init(&mut self) -> PResult<Expr> {
        if self.is("{") {
            let start = self.start();
            let items = self.array_init_items()?;
            return Ok(Expr { kind: ExprKind::ArrayInit(items), span: start..self.prev_end() });
        }
        self.expr()
    }

    fn array_init_items(&mut self) -> PResult<Vec<Expr>> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.eat("}") {
            items.push(self.var_init()?);
            if !self.eat(",") {
                self.expect("}")?;
                break;
            }
        }
        Ok(items)
    }

    // ----- types ---------------------------------------------------------

    fn type_ref(&mut self) -> PResult<TypeRef> {
        let start = self.start();
        let mut ty = self.type_no_dims()?;
        loop {
            self.skip_annotations()?;
            if self.is("[") && self.peek_at(1).is_punct("]") {
                self.bump();
                self.bump();
                ty.array_dims += 1;
            } else {
                break;
            }
        }
        ty.text = self.src[start..self.prev_end()].to_string();
        Ok(ty)
    }

    fn type_no_dims(&mut self) -> PResult<TypeRef> {
        self.skip_annotations()?;
        let start = self.start();
        let first = match self.peek().ident() {
            Some(p) if PRIMITIVES.contains(&p) => {
                let p = p.to_string();
                self.bump();
                return Ok(TypeRef { name: p.clone(), array_dims: 0, text: p });
            }
            _ => self.ident()?,
        };
        let mut name = first;
        loop {
            if self.is("<") {
                self.type_args()?;
            }
            if self.is(".") && self.peek_at(1).ident().is_some_and(|n| !RESERVED.contains(&n)) {
                self.bump();
                self.skip_annotations()?;
                name.push('.');
                name.push_str(&self.ident()?);
            } else {
                break;
            }
        }
        Ok(TypeRef { name, array_dims: 0, text: self.src[start..self.prev_end()].to_string() })
    }

    fn type_args(&mut self) -> PResult<()> {
        self.expect("<")?;
        if self.eat(">") {
            return Ok(());
        }
        loop {
            self.skip_annotations()?;
            if self.eat("?") {
                if self.eat_kw("extends") || self.eat_kw("super") {
                    self.type_ref()?;
                    while self.eat("&") {
                        self.type_ref()?;
                    }
                }
            } else {
                self.type_ref()?;
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(">")
    }

    // ----- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let start = self.start();
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.eat("}") {
            if self.at_eof() {
                return Err(self.error("expected `}`"));
            }
            stmts.push(self.block_stmt()?);
        }
        Ok(Block { stmts, span: start..self.prev_end() })
    }

    fn block_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        // local class or record
        let save = self.pos;
        self.modifiers()?;
        if self.at_type_decl() {
            let t = self.type_decl()?;
            return Ok(Stmt { kind: StmtKind::LocalClass(t), span: start..self.prev_end() });
        }
        self.pos = save;

        if let Ok((ty, first)) = self.attempt(|p| p.local_var_head()) {
            let vars = self.declarators(first)?;
            self.expect(";")?;
            return Ok(Stmt { kind: StmtKind::LocalVar { ty, vars }, span: start..self.prev_end() });
        }
        self.stmt()
    }

    /// `[final] Type name` followed by a declarator continuation.
    fn local_var_head(&mut self) -> PResult<(TypeRef, String)> {
        self.modifiers()?;
        let ty = self.type_ref()?;
        let name = self.ident()?;
        if self.is("=") || self.is(";") || self.is(",") || self.is("[") || self.is(":") {
            Ok((ty, name))
        } else {
            Err(self.error("not a declaration"))
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let kind = self.stmt_kind()?;
        Ok(Stmt { kind, span: start..self.prev_end() })
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    fn stmt_kind(&mut self) -> PResult<StmtKind> {
        if self.is("{") {
            return Ok(StmtKind::Block(self.block()?));
        }
        if self.eat(";") {
            return Ok(StmtKind::Empty);
        }
        let kw = self.peek().ident().map(str::to_string);
        match kw.as_deref() {
            Some("if") => {
                self.bump();
                let cond = self.paren_expr()?;
                let then = Box::new(self.stmt()?);
                let otherwise = if self.eat_kw("else") { Some(Box::new(self.stmt()?)) } else { None };
                Ok(StmtKind::If { cond, then, otherwise })
            }
            Some("while") => {
                self.bump();
                let cond = self.paren_expr()?;
                let body = Box::new(self.stmt()?);
                Ok(StmtKind::While { cond, body })
            }
            Some("do") => {
                self.bump();
                let body = Box::new(self.stmt()?);
                self.expect_kw("while")?;
                let cond = self.paren_expr()?;
                self.expect(";")?;
                Ok(StmtKind::DoWhile { body, cond })
            }
            Some("for") => {
                self.bump();
                self.for_stmt()
            }
            Some("try") => {
                self.bump();
                self.try_stmt()
            }
            Some("throw") => {
                self.bump();
                let e = self.expr()?;
                self.expect(";")?;
                Ok(StmtKind::Throw(e))
            }
            Some("return") => {
                self.bump();
                let e = if self.is(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                Ok(StmtKind::Return(e))
            }
            Some("break") | Some("continue") => {
                self.bump();
                if self.peek().ident().is_some() {
                    self.bump();
                }
                self.expect(";")?;
                Ok(if kw.as_deref() == Some("break") { StmtKind::Break } else { StmtKind::Continue })
            }
            Some("yield") if !self.peek_at(1).is_punct("=") && !self.peek_at(1).is_punct(".") && !self.peek_at(1).is_punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(";")?;
                Ok(StmtKind::Yield(e))
            }
            Some("switch") => {
                self.bump();
                let selector = self.paren_expr()?;
                let cases = self.switch_body()?;
                Ok(StmtKind::Switch { selector, cases })
            }
            Some("synchronized") => {
                self.bump();
                let lock = self.paren_expr()?;
                let body = self.block()?;
                Ok(StmtKind::Synchronized { lock, body })
            }
            Some("assert") => {
                self.bump();
                let cond = self.expr()?;
                let message = if self.eat(":") { Some(self.expr()?) } else { None };
                self.expect(";")?;
                Ok(StmtKind::Assert { cond, message })
            }
            Some("this") | Some("super") if self.peek_at(1).is_punct("(") => {
                self.bump();
                let args = self.args()?;
                self.expect(";")?;
                Ok(StmtKind::CtorCall { args })
            }
            Some(label) if self.peek_at(1).is_punct(":") && !RESERVED.contains(&label) => {
                let label = label.to_string();
                self.bump();
                self.bump();
                let body = Box::new(self.stmt()?);
                Ok(StmtKind::Labeled { label, body })
            }
            Some("else") | Some("catch") | Some("finally") | Some("case") => {
                Err(self.error("unexpected keyword"))
            }
            _ => {
                let e = self.expr()?;
                self.expect(";")?;
                Ok(StmtKind::Expr(e))
            }
        }
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.expect("(")?;
        if let Ok((ty, name)) = self.attempt(|p| {
            p.modifiers()?;
            let ty = p.type_ref()?;
            let name = p.ident()?;
            p.expect(":")?;
            Ok((ty, name))
        }) {
            let iterable = self.expr()?;
            self.expect(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(StmtKind::ForEach { ty, name, iterable, body });
        }
        let mut init = Vec::new();
        if !self.is(";") {
            let start = self.start();
            if let Ok((ty, first)) = self.attempt(|p| p.local_var_head()) {
                let vars = self.declarators(first)?;
                init.push(Stmt { kind: StmtKind::LocalVar { ty, vars }, span: start..self.prev_end() });
            } else {
                loop {
                    let s = self.start();
                    let e = self.expr()?;
                    init.push(Stmt { kind: StmtKind::Expr(e), span: s..self.prev_end() });
                    if !self.eat(",") {
                        break;
                    }
                }
            }
        }
        self.expect(";")?;
        let cond = if self.is(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let mut update = Vec::new();
        if !self.is(")") {
            loop {
                update.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = Box::new(self.stmt()?);
        Ok(StmtKind::For { init, cond, update, body })
    }

    fn try_stmt(&mut self) -> PResult<StmtKind> {
        let mut resources = Vec::new();
        if self.eat("(") {
            while !self.eat(")") {
                let decl = self.attempt(|p| {
                    p.modifiers()?;
                    let ty = p.type_ref()?;
                    let name = p.ident()?;
                    p.expect("=")?;
                    Ok((ty, name))
                });
                match decl {
                    Ok((ty, name)) => {
                        let init = self.expr()?;
                        resources.push(Resource::Decl { ty, name, init });
                    }
                    Err(_) => resources.push(Resource::Expr(self.expr()?)),
                }
                if !self.eat(";") {
                    self.expect(")")?;
                    break;
                }
            }
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat_kw("catch") {
            self.expect("(")?;
            self.modifiers()?;
            let mut types = vec![self.type_ref()?];
            while self.eat("|") {
                types.push(self.type_ref()?);
            }
            let name = self.ident()?;
            self.expect(")")?;
            let body = self.block()?;
            catches.push(CatchClause { types, name, body });
        }
        let finally = if self.eat_kw("finally") { Some(self.block()?) } else { None };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return Err(self.error("`try` without `catch` or `finally`"));
        }
        Ok(StmtKind::Try { resources, body, catches, finally })
    }

    fn switch_body(&mut self) -> PResult<Vec<SwitchCase>> {
        self.expect("{")?;
        let mut cases = Vec::new();
        while !self.eat("}") {
            if self.at_eof() {
                return Err(self.error("unterminated switch"));
            }
            let mut labels = Vec::new();
            if self.eat_kw("default") {
            } else {
                self.expect_kw("case")?;
                loop {
                    if self.eat_kw("default") {
                        break;
                    }
                    labels.push(self.ternary()?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            let mut body = Vec::new();
            if self.eat("->") {
                let start = self.start();
                if self.is("{") {
                    body.push(Stmt { kind: StmtKind::Block(self.block()?), span: start..self.prev_end() });
                } else if self.is_kw("throw") {
                    body.push(self.stmt()?);
                } else {
                    let e = self.expr()?;
                    self.expect(";")?;
                    body.push(Stmt { kind: StmtKind::Expr(e), span: start..self.prev_end() });
                }
            } else {
                self.expect(":")?;
                while !(self.is_kw("case") || self.is_kw("default") && (self.peek_at(1).is_punct(":") || self.peek_at(1).is_punct("->")) || self.is("}")) {
                    if self.at_eof() {
                        return Err(self.error("unterminated switch"));
                    }
                    body.push(self.block_stmt()?);
                }
            }
            cases.push(SwitchCase { labels, body });
        }
        Ok(cases)
    }

    // ----- expressions ---------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        if self.lambda_ahead() {
            return self.lambda();
        }
        let start = self.start();
        let lhs = self.ternary()?;
        if let Some((op, n)) = self.assign_op() {
            for _ in 0..n {
                self.bump();
            }
            let value = self.expr()?;
            return Ok(Expr {
                kind: ExprKind::Assign { op, target: Box::new(lhs), value: Box::new(value) },
                span: start..self.prev_end(),
            });
        }
        Ok(lhs)
    }

    fn assign_op(&self) -> Option<(&'static str, usize)> {
        if let TokenKind::Punct(p) = self.peek().kind {
            match p {
                "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" => return Some((p, 1)),
                ">" if self.peek_at(1).is_punct(">") && self.adjacent(0) => {
                    if self.peek_at(2).is_punct("=") && self.adjacent(1) {
                        return Some((">>=", 3));
                    }
                    if self.peek_at(2).is_punct(">") && self.adjacent(1) && self.peek_at(3).is_punct("=") && self.adjacent(2) {
                        return Some((">>>=", 4));
                    }
                }
                _ => {}
            }
        }
        None
    }

    fn lambda_ahead(&self) -> bool {
        if self.peek().ident().is_some() && self.peek_at(1).is_punct("->") {
            return true;
        }
        if !self.is("(") {
            return false;
        }
        let mut depth = 0;
        let mut i = self.pos;
        while i < self.toks.len() {
            let t = &self.toks[i];
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
                if depth == 0 {
                    return self.toks.get(i + 1).is_some_and(|n| n.is_punct("->"));
                }
            } else if t.kind == TokenKind::Eof || t.is_punct(";") || t.is_punct("{") {
                return false;
            }
            i += 1;
        }
        false
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut params = Vec::new();
        if self.peek().ident().is_some() && self.peek_at(1).is_punct("->") {
            params.push((None, self.ident()?));
        } else {
            self.expect("(")?;
            while !self.eat(")") {
                if self.peek().ident().is_some() && (self.peek_at(1).is_punct(",") || self.peek_at(1).is_punct(")")) {
                    params.push((None, self.ident()?));
                } else {
                    self.modifiers()?;
                    let mut ty = self.type_ref()?;
                    if self.eat("...") {
                        ty.array_dims += 1;
                    }
                    let name = self.ident()?;
                    params.push((Some(ty), name));
                }
                if !self.eat(",") {
                    self.expect(")")?;
                    break;
                }
            }
        }
        self.expect("->")?;
        let body = if self.is("{") {
            LambdaBody::Block(self.block()?)
        } else {
            LambdaBody::Expr(Box::new(self.expr()?))
        };
        Ok(Expr { kind: ExprKind::Lambda { params, body }, span: start..self.prev_end() })
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let cond = self.binary(1)?;
        if self.eat("?") {
            let then = self.expr()?;
            self.expect(":")?;
            let otherwise = if self.lambda_ahead() { self.lambda()? } else { self.ternary()? };
            return Ok(Expr {
                kind: ExprKind::Conditional {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                },
                span: start..self.prev_end(),
            });
        }
        Ok(cond)
    }

    /// Binary operator at the cursor: (operator, precedence, token count).
    fn binary_op(&self) -> Option<(&'static str, u8, usize)> {
        let t = self.peek();
        if t.is_ident("instanceof") {
            return Some(("instanceof", 7, 1));
        }
        let TokenKind::Punct(p) = t.kind else {
            return None;
        };
        Some(match p {
            "||" => ("||", 1, 1),
            "&&" => ("&&", 2, 1),
            "|" => ("|", 3, 1),
            "^" => ("^", 4, 1),
            "&" => ("&", 5, 1),
            "==" => ("==", 6, 1),
            "!=" => ("!=", 6, 1),
            "<" => ("<", 7, 1),
            "<=" => ("<=", 7, 1),
            "<<" => ("<<", 8, 1),
            "+" => ("+", 9, 1),
            "-" => ("-", 9, 1),
            "*" => ("*", 10, 1),
            "/" => ("/", 10, 1),
            "%" => ("%", 10, 1),
            ">" => {
                if self.peek_at(1).is_punct("=") && self.adjacent(0) {
                    // `>=`, unless this is `>>=` which assign_op owns
                    (">=", 7, 2)
                } else if self.peek_at(1).is_punct(">") && self.adjacent(0) {
                    if self.peek_at(2).is_punct(">") && self.adjacent(1) {
                        if self.peek_at(3).is_punct("=") && self.adjacent(2) {
                            return None;
                        }
                        (">>>", 8, 3)
                    } else if self.peek_at(2).is_punct("=") && self.adjacent(1) {
                        return None;
                    } else {
                        (">>", 8, 2)
                    }
                } else {
                    (">", 7, 1)
                }
            }
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.unary()?;
        while let Some((op, prec, n)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            for _ in 0..n {
                self.bump();
            }
            if op == "instanceof" {
                self.eat_kw("final");
                let ty = self.type_ref()?;
                let binding = match self.peek().ident() {
                    Some(b) if !RESERVED.contains(&b) => {
                        let b = b.to_string();
                        self.bump();
                        Some(b)
                    }
                    _ => None,
                };
                lhs = Expr {
                    kind: ExprKind::InstanceOf { expr: Box::new(lhs), ty, binding },
                    span: start..self.prev_end(),
                };
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span: start..self.prev_end(),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.start();
        if let TokenKind::Punct(p) = self.peek().kind {
            if matches!(p, "+" | "-" | "++" | "--" | "!" | "~") {
                self.bump();
                let operand = self.unary()?;
                return Ok(Expr {
                    kind: ExprKind::Unary { op: p, operand: Box::new(operand) },
                    span: start..self.prev_end(),
                });
            }
            if p == "(" {
                if let Ok(cast) = self.attempt(|s| s.cast()) {
                    return Ok(cast);
                }
            }
        }
        let e = self.primary()?;
        self.selectors(e, start)
    }

    fn cast(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect("(")?;
        let ty = self.type_ref()?;
        while self.eat("&") {
            self.type_ref()?;
        }
        self.expect(")")?;
        let primitive = PRIMITIVES.contains(&ty.name.as_str()) && ty.array_dims == 0;
        let next = self.peek();
        let starts_operand = match &next.kind {
            TokenKind::Ident(n) => !matches!(n.as_str(), "instanceof"),
            TokenKind::Int(_) | TokenKind::Float(_) | TokenKind::Char(_) | TokenKind::Str(_) => true,
            TokenKind::Punct(p) => matches!(*p, "(" | "!" | "~") || (primitive && matches!(*p, "+" | "-" | "++" | "--")),
            TokenKind::Eof => false,
        };
        if !starts_operand {
            return Err(self.error("not a cast"));
        }
        let operand = if self.lambda_ahead() { self.lambda()? } else { self.unary()? };
        Ok(Expr { kind: ExprKind::Cast { ty, expr: Box::new(operand) }, span: start..self.prev_end() })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let t = self.peek().clone();
        let kind = match &t.kind {
            TokenKind::Int(_) => {
                self.bump();
                ExprKind::Literal(Literal::Int)
            }
            TokenKind::Float(_) => {
                self.bump();
                ExprKind::Literal(Literal::Float)
            }
            TokenKind::Char(_) => {
                self.bump();
                ExprKind::Literal(Literal::Char)
            }
            TokenKind::Str(_) => {
                self.bump();
                ExprKind::Literal(Literal::Str)
            }
            TokenKind::Punct("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect(")")?;
                ExprKind::Paren(Box::new(inner))
            }
            TokenKind::Ident(name) => match name.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Literal(Literal::Bool)
                }
                "null" => {
                    self.bump();
                    ExprKind::Literal(Literal::Null)
                }
                "this" => {
                    self.bump();
                    if self.is("(") {
                        return Err(self.error("constructor invocation outside a constructor body"));
                    }
                    ExprKind::This
                }
                "super" => {
                    self.bump();
                    ExprKind::Super
                }
                "new" => return self.creator(None, start),
                "switch" => {
                    self.bump();
                    let selector = self.paren_expr()?;
                    let cases = self.switch_body()?;
                    ExprKind::Switch { selector: Box::new(selector), cases }
                }
                p if PRIMITIVES.contains(&p) => {
                    let ty = self.type_ref()?;
                    if self.eat("::") {
                        let target = Expr { kind: ExprKind::TypeExpr(ty), span: start..self.prev_end() };
                        let name = if self.eat_kw("new") { "new".to_string() } else { self.ident()? };
                        ExprKind::MethodRef { target: Box::new(target), name }
                    } else {
                        self.expect(".")?;
                        self.expect_kw("class")?;
                        ExprKind::ClassLit(ty)
                    }
                }
                n if RESERVED.contains(&n) => return Err(self.error("expected expression")),
                _ => {
                    let name = name.clone();
                    self.bump();
                    if self.is("(") {
                        let name_span = t.start..t.end;
                        let args = self.args()?;
                        ExprKind::Call(Call { target: None, name, name_span, args })
                    } else {
                        ExprKind::Name(name)
                    }
                }
            },
            _ => return Err(self.error("expected expression")),
        };
        Ok(Expr { kind, span: start..self.prev_end() })
    }

    fn creator(&mut self, outer: Option<Box<Expr>>, start: usize) -> PResult<Expr> {
        self.expect_kw("new")?;
        if self.is("<") {
            self.type_args()?;
        }
        let ty = self.type_no_dims()?;
        if self.is("[") {
            let mut ty = ty;
            let mut dims = Vec::new();
            while self.is("[") {
                self.bump();
                if self.eat("]") {
                    ty.array_dims += 1;
                } else {
                    dims.push(self.expr()?);
                    self.expect("]")?;
                    ty.array_dims += 1;
                }
            }
            let init = if self.is("{") { Some(self.array_init_items()?) } else { None };
            return Ok(Expr { kind: ExprKind::NewArray { ty, dims, init }, span: start..self.prev_end() });
        }
        let args = self.args()?;
        let body = if self.is("{") { Some(self.class_body()?) } else { None };
        Ok(Expr { kind: ExprKind::New { ty, args, body, outer }, span: start..self.prev_end() })
    }

    fn selectors(&mut self, mut e: Expr, start: usize) -> PResult<Expr> {
        loop {
            if self.is(".") {
                self.bump();
                if self.is_kw("new") {
                    e = self.creator(Some(Box::new(e)), start)?;
                    continue;
                }
                if self.eat_kw("class") {
                    let ty = TypeRef::simple(&dotted(&e).unwrap_or_default());
                    e = Expr { kind: ExprKind::ClassLit(ty), span: start..self.prev_end() };
                    continue;
                }
                if self.eat_kw("this") {
                    e = Expr { kind: ExprKind::This, span: start..self.prev_end() };
                    continue;
                }
                if self.is("<") {
                    self.type_args()?;
                }
                let name_tok = self.peek().clone();
                let name = if self.eat_kw("super") { "super".to_string() } else { self.ident()? };
                if self.is("(") {
                    let args = self.args()?;
                    e = Expr {
                        kind: ExprKind::Call(Call {
                            target: Some(Box::new(e)),
                            name,
                            name_span: name_tok.start..name_tok.end,
                            args,
                        }),
                        span: start..self.prev_end(),
                    };
                } else {
                    e = Expr { kind: ExprKind::FieldAccess { target: Box::new(e), name }, span: start..self.prev_end() };
                }
            } else if self.is("[") {
                if self.peek_at(1).is_punct("]") {
                    let mut ty = TypeRef::simple(&dotted(&e).ok_or_else(|| self.error("array type expected"))?);
                    while self.is("[") && self.peek_at(1).is_punct("]") {
                        self.bump();
                        self.bump();
                        ty.array_dims += 1;
                    }
                    if self.eat("::") {
                        let target = Expr { kind: ExprKind::TypeExpr(ty), span: start..self.prev_end() };
                        let name = if self.eat_kw("new") { "new".to_string() } else { self.ident()? };
                        e = Expr { kind: ExprKind::MethodRef { target: Box::new(target), name }, span: start..self.prev_end() };
                    } else {
                        self.expect(".")?;
                        self.expect_kw("class")?;
                        e = Expr { kind: ExprKind::ClassLit(ty), span: start..self.prev_end() };
                    }
                    continue;
                }
                self.bump();
                let index = self.expr()?;
                self.expect("]")?;
                e = Expr { kind: ExprKind::Index { target: Box::new(e), index: Box::new(index) }, span: start..self.prev_end() };
            } else if self.is("::") {
                self.bump();
                let name = if self.eat_kw("new") { "new".to_string() } else { self.ident()? };
                e = Expr { kind: ExprKind::MethodRef { target: Box::new(e), name }, span: start..self.prev_end() };
            } else if self.is("++") || self.is("--") {
                let op = if self.is("++") { "post++" } else { "post--" };
                self.bump();
                e = Expr { kind: ExprKind::Unary { op, operand: Box::new(e) }, span: start..self.prev_end() };
            } else {
                return Ok(e);
            }
        }
    }
}

/// `a.b.C` for name and field-access chains.
pub fn dotted(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Name(n) => Some(n.clone()),
        ExprKind::FieldAccess { target, name } => dotted(target).map(|t| format!("{t}.{name}")),
        _ => None,
    }
}
