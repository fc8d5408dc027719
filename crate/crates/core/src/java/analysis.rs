//! Call-site extraction, resolution against the knowledge base, per-exception
//! handling status and the four-way quality label.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::parser::{dotted, parse_compilation_unit};
use super::ParseError;
use crate::kb::{simple_name, ExceptionHierarchy, ExceptionSpec, KnowledgeBase, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Unresolved,
    Resolved(String),
    Ambiguous(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub simple_name: String,
    pub arity: usize,
    /// Declared type of the receiver when statically visible, else empty.
    pub receiver_hint: String,
    pub span: Range<usize>,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HandlingStatus {
    Unhandled,
    GuardedThrow,
    CaughtExact,
    CaughtSupertype,
    DeclaredThrows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityLabel {
    IncompleteExceptionHandling,
    IncorrectExceptionHandling,
    AbuseOfTryCatch,
    GoodPractice,
}

impl QualityLabel {
    pub const ALL: [QualityLabel; 4] = [
        QualityLabel::IncompleteExceptionHandling,
        QualityLabel::IncorrectExceptionHandling,
        QualityLabel::AbuseOfTryCatch,
        QualityLabel::GoodPractice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::IncompleteExceptionHandling => "IncompleteExceptionHandling",
            QualityLabel::IncorrectExceptionHandling => "IncorrectExceptionHandling",
            QualityLabel::AbuseOfTryCatch => "AbuseOfTryCatch",
            QualityLabel::GoodPractice => "GoodPractice",
        }
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnhandledException {
    pub fqn: String,
    pub exception: String,
    pub condition: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no resolved call site has documented exceptions")]
    NoRelevantApis,
    #[error("call `{0}` is not resolved")]
    UnresolvedCall(String),
    #[error("call `{0}` does not belong to this source")]
    UnknownCallSite(String),
}

#[derive(Debug, Clone, Default)]
struct Imports {
    package: Option<String>,
    /// Simple name to full path.
    explicit: HashMap<String, String>,
    wildcards: Vec<String>,
    /// Statically imported member name to declaring type.
    static_members: HashMap<String, String>,
}

#[derive(Debug, Clone)]
struct Guard {
    exception: String,
    idents: BTreeSet<String>,
    line: usize,
}

#[derive(Debug, Clone)]
struct CallInfo {
    site: CallSite,
    name_at: usize,
    arg_hints: Vec<String>,
    idents: BTreeSet<String>,
    catches: Vec<String>,
    guards: Vec<Guard>,
    throws: Vec<String>,
}

/// A parsed source plus everything the analysis needs to know about each call.
#[derive(Debug, Clone)]
pub struct SourceContext {
    source: String,
    imports: Imports,
    calls: Vec<CallInfo>,
}

impl SourceContext {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let unit = parse_compilation_unit(source)?;
        let mut imports = Imports { package: unit.package.clone(), ..Imports::default() };
        for imp in &unit.imports {
            match (imp.is_static, imp.wildcard) {
                (false, false) => {
                    imports.explicit.insert(simple_name(&imp.path).to_string(), imp.path.clone());
                }
                (false, true) => imports.wildcards.push(imp.path.clone()),
                (true, false) => {
                    if let Some((ty, member)) = imp.path.rsplit_once('.') {
                        imports.static_members.insert(member.to_string(), ty.to_string());
                    }
                }
                (true, true) => {}
            }
        }
        let mut w = Walker {
            src: source,
            imports: &imports,
            classes: Vec::new(),
            scopes: Vec::new(),
            catches: Vec::new(),
            guards: Vec::new(),
            throws: Vec::new(),
            calls: Vec::new(),
        };
        for td in &unit.types {
            w.walk_type(td, false);
        }
        let mut calls = w.calls;
        calls.sort_by_key(|c| c.name_at);
        Ok(Self { source: source.to_string(), imports, calls })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Call sites in source order, unresolved.
    pub fn call_sites(&self) -> Vec<CallSite> {
        self.calls.iter().map(|c| c.site.clone()).collect()
    }

    fn info(&self, call: &CallSite) -> Option<&CallInfo> {
        self.calls
            .iter()
            .find(|c| c.site.span == call.span && c.site.simple_name == call.simple_name)
    }

    fn line_of(&self, offset: usize) -> usize {
        self.source[..offset.min(self.source.len())].matches('\n').count() + 1
    }
}

#[derive(Debug, Clone, Default)]
struct ClassScope {
    name: String,
    extends: Option<String>,
    fields: HashMap<String, String>,
    methods: HashSet<String>,
}

struct Walker<'a> {
    src: &'a str,
    imports: &'a Imports,
    classes: Vec<ClassScope>,
    scopes: Vec<HashMap<String, String>>,
    catches: Vec<String>,
    guards: Vec<Guard>,
    throws: Vec<String>,
    calls: Vec<CallInfo>,
}

impl Walker<'_> {
    /// `nested` types (local or anonymous) inherit the enclosing handling context.
    fn walk_type(&mut self, td: &TypeDecl, nested: bool) {
        self.walk_members(&td.name, td.extends.as_ref().map(|t| t.name.clone()), &td.members, nested);
    }

    fn walk_members(&mut self, name: &str, extends: Option<String>, members: &[Member], nested: bool) {
        let mut scope = ClassScope { name: name.to_string(), extends, ..ClassScope::default() };
        for m in members {
            match m {
                Member::Field { ty, vars } => {
                    for v in vars {
                        scope.fields.insert(v.name.clone(), with_dims(&ty.hint(), v.dims));
                    }
                }
                Member::Method(md) if !md.constructor => {
                    scope.methods.insert(md.name.clone());
                }
                _ => {}
            }
        }
        self.classes.push(scope);
        let saved_scopes = if nested { None } else { Some(std::mem::take(&mut self.scopes)) };
        for m in members {
            match m {
                Member::Field { ty, vars } => {
                    for v in vars {
                        if let Some(init) = &v.init {
                            self.walk_expr(init);
                        }
                        let _ = ty;
                    }
                }
                Member::Method(md) => {
                    let saved_throws = self.throws.clone();
                    if !nested {
                        self.throws.clear();
                    }
                    self.throws.extend(md.throws.iter().map(|t| t.name.clone()));
                    self.scopes.push(md.params.iter().map(|p| (p.name.clone(), p.ty.hint())).collect());
                    if let Some(body) = &md.body {
                        self.walk_block(body);
                    }
                    self.scopes.pop();
                    self.throws = saved_throws;
                }
                Member::Initializer(b) => self.walk_block(b),
                Member::Type(t) => self.walk_type(t, nested),
            }
        }
        if let Some(s) = saved_scopes {
            self.scopes = s;
        }
        self.classes.pop();
    }

    fn declare(&mut self, name: &str, hint: String) {
        if self.scopes.is_empty() {
            self.scopes.push(HashMap::new());
        }
        self.scopes.last_mut().expect("scope").insert(name.to_string(), hint);
    }

    fn lookup_var(&self, name: &str) -> Option<&String> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.classes.iter().rev().find_map(|c| c.fields.get(name)))
    }

    fn walk_block(&mut self, b: &Block) {
        self.scopes.push(HashMap::new());
        self.walk_stmts(&b.stmts);
        self.scopes.pop();
    }

    fn walk_stmts(&mut self, stmts: &[Stmt]) {
        let mark = self.guards.len();
        for s in stmts {
            self.walk_stmt(s);
            if let StmtKind::If { cond, then, otherwise } = &s.kind {
                let idents = idents_of(cond);
                let line = line_at(self.src, s.span.start);
                for exc in thrown_by(then).into_iter().chain(otherwise.iter().flat_map(|o| thrown_by(o))) {
                    self.guards.push(Guard { exception: exc, idents: idents.clone(), line });
                }
            }
        }
        self.guards.truncate(mark);
    }

    fn walk_branch(&mut self, s: &Stmt, guards_from: Option<&Stmt>, cond: &Expr) {
        let mark = self.guards.len();
        if let Some(other) = guards_from {
            let line = line_at(self.src, other.span.start);
            for exc in thrown_by(other) {
                self.guards.push(Guard { exception: exc, idents: idents_of(cond), line });
            }
        }
        self.scopes.push(HashMap::new());
        self.walk_stmt(s);
        self.scopes.pop();
        self.guards.truncate(mark);
    }

    fn walk_stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Block(b) => self.walk_block(b),
            StmtKind::LocalVar { ty, vars } => {
                for v in vars {
                    let mut hint = with_dims(&ty.hint(), v.dims);
                    if let Some(init) = &v.init {
                        self.walk_expr(init);
                        if ty.is_var() {
                            hint = self.expr_hint(init);
                        }
                    }
                    self.declare(&v.name, hint);
                }
            }
            StmtKind::LocalClass(td) => self.walk_type(td, true),
            StmtKind::Expr(e) | StmtKind::Throw(e) | StmtKind::Yield(e) => self.walk_expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.walk_expr(e);
                }
            }
            StmtKind::If { cond, then, otherwise } => {
                self.walk_expr(cond);
                self.walk_branch(then, otherwise.as_deref(), cond);
                if let Some(o) = otherwise {
                    self.walk_branch(o, Some(then), cond);
                }
            }
            StmtKind::While { cond, body } => {
                self.walk_expr(cond);
                self.walk_nested(body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.walk_nested(body);
                self.walk_expr(cond);
            }
            StmtKind::For { init, cond, update, body } => {
                self.scopes.push(HashMap::new());
                for s in init {
                    self.walk_stmt(s);
                }
                if let Some(c) = cond {
                    self.walk_expr(c);
                }
                for u in update {
                    self.walk_expr(u);
                }
                self.walk_nested(body);
                self.scopes.pop();
            }
            StmtKind::ForEach { ty, name, iterable, body } => {
                self.walk_expr(iterable);
                let hint = if ty.is_var() {
                    self.expr_hint(iterable).strip_suffix("[]").map(str::to_string).unwrap_or_default()
                } else {
                    ty.hint()
                };
                self.scopes.push(HashMap::new());
                self.declare(name, hint);
                self.walk_nested(body);
                self.scopes.pop();
            }
            StmtKind::Try { resources, body, catches, finally } => {
                let mark = self.catches.len();
                self.catches.extend(catches.iter().flat_map(|c| c.types.iter().map(|t| t.name.clone())));
                self.scopes.push(HashMap::new());
                for r in resources {
                    match r {
                        Resource::Decl { ty, name, init } => {
                            self.walk_expr(init);
                            let hint = if ty.is_var() { self.expr_hint(init) } else { ty.hint() };
                            self.declare(name, hint);
                        }
                        Resource::Expr(e) => self.walk_expr(e),
                    }
                }
                self.walk_block(body);
                self.scopes.pop();
                self.catches.truncate(mark);
                for c in catches {
                    self.scopes.push(HashMap::new());
                    let hint = if c.types.len() == 1 { c.types[0].hint() } else { String::new() };
                    self.declare(&c.name, hint);
                    self.walk_block(&c.body);
                    self.scopes.pop();
                }
                if let Some(f) = finally {
                    self.walk_block(f);
                }
            }
            StmtKind::Switch { selector, cases } => {
                self.walk_expr(selector);
                self.walk_cases(cases);
            }
            StmtKind::Synchronized { lock, body } => {
                self.walk_expr(lock);
                self.walk_block(body);
            }
            StmtKind::Labeled { body, .. } => self.walk_stmt(body),
            StmtKind::Assert { cond, message } => {
                self.walk_expr(cond);
                if let Some(m) = message {
                    self.walk_expr(m);
                }
            }
            StmtKind::CtorCall { args } => {
                for a in args {
                    self.walk_expr(a);
                }
            }
            StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
        }
    }

    fn walk_nested(&mut self, s: &Stmt) {
        self.scopes.push(HashMap::new());
        self.walk_stmt(s);
        self.scopes.pop();
    }

    fn walk_cases(&mut self, cases: &[SwitchCase]) {
        self.scopes.push(HashMap::new());
        for c in cases {
            for l in &c.labels {
                self.walk_expr(l);
            }
            self.walk_stmts(&c.body);
        }
        self.scopes.pop();
    }

    fn walk_expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Call(c) => {
                let receiver_hint = match &c.target {
                    Some(t) => self.expr_hint(t),
                    None => self.unqualified_hint(&c.name),
                };
                let mut idents = BTreeSet::new();
                if let Some(t) = &c.target {
                    idents.extend(idents_of(t));
                }
                for a in &c.args {
                    idents.extend(idents_of(a));
                }
                let arg_hints = c.args.iter().map(|a| self.arg_hint(a)).collect();
                self.calls.push(CallInfo {
                    site: CallSite {
                        simple_name: c.name.clone(),
                        arity: c.args.len(),
                        receiver_hint,
                        span: e.span.clone(),
                        resolution: Resolution::Unresolved,
                    },
                    name_at: c.name_span.start,
                    arg_hints,
                    idents,
                    catches: self.catches.clone(),
                    guards: self.guards.clone(),
                    throws: self.throws.clone(),
                });
                if let Some(t) = &c.target {
                    self.walk_expr(t);
                }
                for a in &c.args {
                    self.walk_expr(a);
                }
            }
            ExprKind::New { ty, args, body, outer } => {
                if let Some(o) = outer {
                    self.walk_expr(o);
                }
                for a in args {
                    self.walk_expr(a);
                }
                if let Some(members) = body {
                    self.walk_members(&ty.name, Some(ty.name.clone()), members, true);
                }
            }
            ExprKind::NewArray { dims, init, .. } => {
                for d in dims {
                    self.walk_expr(d);
                }
                for i in init.iter().flatten() {
                    self.walk_expr(i);
                }
            }
            ExprKind::ArrayInit(items) => {
                for i in items {
                    self.walk_expr(i);
                }
            }
            ExprKind::FieldAccess { target, .. } => self.walk_expr(target),
            ExprKind::Index { target, index } => {
                self.walk_expr(target);
                self.walk_expr(index);
            }
            ExprKind::Unary { operand, .. } => self.walk_expr(operand),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.walk_expr(lhs);
                self.walk_expr(rhs);
            }
            ExprKind::Assign { target, value, .. } => {
                self.walk_expr(target);
                self.walk_expr(value);
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                self.walk_expr(cond);
                self.walk_expr(then);
                self.walk_expr(otherwise);
            }
            ExprKind::Cast { expr, .. } | ExprKind::Paren(expr) => self.walk_expr(expr),
            ExprKind::InstanceOf { expr, ty, binding } => {
                self.walk_expr(expr);
                if let Some(b) = binding {
                    self.declare(b, ty.hint());
                }
            }
            ExprKind::Lambda { params, body } => {
                self.scopes.push(
                    params
                        .iter()
                        .map(|(ty, n)| (n.clone(), ty.as_ref().map(TypeRef::hint).unwrap_or_default()))
                        .collect(),
                );
                match body {
                    LambdaBody::Expr(e) => self.walk_expr(e),
                    LambdaBody::Block(b) => self.walk_block(b),
                }
                self.scopes.pop();
            }
            ExprKind::MethodRef { target, .. } => self.walk_expr(target),
            ExprKind::Switch { selector, cases } => {
                self.walk_expr(selector);
                self.walk_cases(cases);
            }
            ExprKind::Literal(_)
            | ExprKind::Name(_)
            | ExprKind::This
            | ExprKind::Super
            | ExprKind::ClassLit(_)
            | ExprKind::TypeExpr(_) => {}
        }
    }

    fn expr_hint(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Name(n) => {
                if let Some(h) = self.lookup_var(n) {
                    h.clone()
                } else if self.imports.explicit.contains_key(n) || starts_upper(n) {
                    n.clone()
                } else {
                    String::new()
                }
            }
            ExprKind::FieldAccess { target, name } => {
                if matches!(target.kind, ExprKind::This) {
                    return self
                        .classes
                        .last()
                        .and_then(|c| c.fields.get(name))
                        .cloned()
                        .unwrap_or_default();
                }
                match dotted(e) {
                    Some(d) => {
                        let root = d.split('.').next().unwrap_or_default();
                        if self.lookup_var(root).is_none() && starts_upper(name) {
                            d
                        } else {
                            String::new()
                        }
                    }
                    None => String::new(),
                }
            }
            ExprKind::This => self.classes.last().map(|c| c.name.clone()).unwrap_or_default(),
            ExprKind::Super => self
                .classes
                .last()
                .and_then(|c| c.extends.clone())
                .unwrap_or_default(),
            ExprKind::New { ty, .. } => ty.name.clone(),
            ExprKind::NewArray { ty, .. } => ty.hint(),
            ExprKind::Literal(Literal::Str) => "String".to_string(),
            ExprKind::Cast { ty, .. } => ty.hint(),
            ExprKind::Paren(inner) => self.expr_hint(inner),
            ExprKind::Index { target, .. } => self
                .expr_hint(target)
                .strip_suffix("[]")
                .map(str::to_string)
                .unwrap_or_default(),
            ExprKind::Assign { target, .. } => self.expr_hint(target),
            _ => String::new(),
        }
    }

    fn arg_hint(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Literal(Literal::Int) => "int".into(),
            ExprKind::Literal(Literal::Float) => "double".into(),
            ExprKind::Literal(Literal::Char) => "char".into(),
            ExprKind::Literal(Literal::Bool) => "boolean".into(),
            ExprKind::Literal(Literal::Null) => String::new(),
            _ => self.expr_hint(e),
        }
    }

    fn unqualified_hint(&self, name: &str) -> String {
        if let Some(c) = self.classes.iter().rev().find(|c| c.methods.contains(name)) {
            return c.name.clone();
        }
        if let Some(ty) = self.imports.static_members.get(name) {
            return ty.clone();
        }
        match self.classes.last() {
            Some(c) => c.extends.clone().unwrap_or_else(|| c.name.clone()),
            None => String::new(),
        }
    }
}

fn with_dims(hint: &str, dims: usize) -> String {
    let mut s = hint.to_string();
    for _ in 0..dims {
        s.push_str("[]");
    }
    s
}

fn starts_upper(s: &str) -> bool {
    s.starts_with(|c: char| c.is_uppercase())
}

fn line_at(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Exception types thrown with `throw new X(..)` directly by this statement
/// or at the top level of this block.
fn thrown_by(s: &Stmt) -> Vec<String> {
    let throw_type = |s: &Stmt| match &s.kind {
        StmtKind::Throw(Expr { kind: ExprKind::New { ty, .. }, .. }) => Some(ty.name.clone()),
        _ => None,
    };
    match &s.kind {
        StmtKind::Block(b) => b.stmts.iter().filter_map(throw_type).collect(),
        _ => throw_type(s).into_iter().collect(),
    }
}

/// Identifiers read by an expression, used to relate a guard to a call.
fn idents_of(e: &Expr) -> BTreeSet<String> {
    fn go(e: &Expr, out: &mut BTreeSet<String>) {
        match &e.kind {
            ExprKind::Name(n) => {
                out.insert(n.clone());
            }
            ExprKind::FieldAccess { target, name } => {
                if matches!(target.kind, ExprKind::This) {
                    out.insert(name.clone());
                }
                go(target, out);
            }
            ExprKind::Call(c) => {
                if let Some(t) = &c.target {
                    go(t, out);
                }
                c.args.iter().for_each(|a| go(a, out));
            }
            ExprKind::Index { target, index } => {
                go(target, out);
                go(index, out);
            }
            ExprKind::Unary { operand, .. } => go(operand, out),
            ExprKind::Binary { lhs, rhs, .. } => {
                go(lhs, out);
                go(rhs, out);
            }
            ExprKind::Assign { target, value, .. } => {
                go(target, out);
                go(value, out);
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                go(cond, out);
                go(then, out);
                go(otherwise, out);
            }
            ExprKind::Cast { expr, .. } | ExprKind::Paren(expr) | ExprKind::InstanceOf { expr, .. } => go(expr, out),
            ExprKind::New { args, .. } => args.iter().for_each(|a| go(a, out)),
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut out);
    out
}

/// Every method invocation in source order, constructor calls excluded.
pub fn extract_invocations(source: &str) -> Result<Vec<CallSite>, ParseError> {
    Ok(SourceContext::parse(source)?.call_sites())
}

fn is_type_var(t: &str) -> bool {
    !t.is_empty() && t.len() <= 2 && t.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

const PRIMITIVE_WIDENING: [(&str, &[&str]); 6] = [
    ("byte", &["short", "int", "long", "float", "double"]),
    ("short", &["int", "long", "float", "double"]),
    ("char", &["int", "long", "float", "double"]),
    ("int", &["long", "float", "double"]),
    ("long", &["float", "double"]),
    ("float", &["double"]),
];

const BOXES: [(&str, &str); 8] = [
    ("boolean", "Boolean"),
    ("byte", "Byte"),
    ("short", "Short"),
    ("char", "Character"),
    ("int", "Integer"),
    ("long", "Long"),
    ("float", "Float"),
    ("double", "Double"),
];

/// Whether an argument of (hinted) type `arg` may be passed to parameter `param`.
/// Unknown or unrelated reference types are assumed compatible.
fn arg_compatible(param: &str, arg: &str) -> bool {
    if arg.is_empty() || param.ends_with("...") {
        return true;
    }
    let p = simple_name(param);
    let a = simple_name(arg);
    if p == a || is_type_var(p) || p == "Object" {
        return true;
    }
    let primitive = |t: &str| BOXES.iter().any(|(prim, _)| *prim == t);
    if primitive(a) {
        if BOXES.iter().any(|(prim, boxed)| *prim == a && *boxed == p) {
            return true;
        }
        return PRIMITIVE_WIDENING.iter().any(|(from, to)| *from == a && to.contains(&p));
    }
    if a == "String" {
        return matches!(p, "CharSequence" | "Comparable" | "Serializable");
    }
    !primitive(p)
}

/// Resolves a call site against the knowledge base by name, arity, receiver
/// type and imports.
pub fn resolve(call: &CallSite, ctx: &SourceContext, kb: &KnowledgeBase) -> CallSite {
    let mut out = call.clone();
    let mut cands: Vec<&crate::kb::ApiEntry> = kb.candidates(&call.simple_name, call.arity).collect();
    let hint = call.receiver_hint.as_str();
    let imports = &ctx.imports;
    if !hint.is_empty() {
        let first = hint.split('.').next().unwrap_or(hint);
        if let Some(path) = imports.explicit.get(hint) {
            cands.retain(|c| &c.declaring_type == path);
        } else if hint.contains('.') && !starts_upper(first) {
            cands.retain(|c| c.declaring_type == hint);
        } else {
            let suffix = format!(".{hint}");
            cands.retain(|c| c.declaring_type == hint || c.declaring_type.ends_with(&suffix));
            if cands.len() > 1 {
                let mut pkgs: Vec<&str> = imports.wildcards.iter().map(String::as_str).collect();
                pkgs.push("java.lang");
                if let Some(p) = &imports.package {
                    pkgs.push(p);
                }
                let narrowed: Vec<_> = cands
                    .iter()
                    .copied()
                    .filter(|c| pkgs.iter().any(|p| c.declaring_type == format!("{p}.{hint}")))
                    .collect();
                if !narrowed.is_empty() {
                    cands = narrowed;
                }
            }
        }
    }
    if cands.len() > 1 {
        if let Some(info) = ctx.info(call) {
            let narrowed: Vec<_> = cands
                .iter()
                .copied()
                .filter(|c| {
                    let Ok(sig) = Signature::parse(&c.fqn) else { return true };
                    sig.param_types()
                        .iter()
                        .zip(&info.arg_hints)
                        .all(|(p, a)| arg_compatible(p, a))
                })
                .collect();
            if !narrowed.is_empty() {
                cands = narrowed;
            }
        }
    }
    out.resolution = match cands.as_slice() {
        [] => Resolution::Unresolved,
        [one] => Resolution::Resolved(one.fqn.clone()),
        many => Resolution::Ambiguous(many.iter().map(|c| c.fqn.clone()).collect()),
    };
    out
}

fn status_of(info: &CallInfo, spec: &ExceptionSpec, h: &ExceptionHierarchy) -> (HandlingStatus, Option<usize>) {
    if let Some(i) = info.guards.iter().position(|g| h.same(&g.exception, &spec.exception)) {
        return (HandlingStatus::GuardedThrow, Some(i));
    }
    if info.catches.iter().any(|c| h.same(c, &spec.exception)) {
        return (HandlingStatus::CaughtExact, None);
    }
    if info.catches.iter().any(|c| h.is_strict_subtype(&spec.exception, c)) {
        return (HandlingStatus::CaughtSupertype, None);
    }
    if info.throws.iter().any(|t| h.is_subtype(&spec.exception, t)) {
        return (HandlingStatus::DeclaredThrows, None);
    }
    (HandlingStatus::Unhandled, None)
}

/// Handling status of one documented exception at one resolved call site.
pub fn detect_handling(
    ctx: &SourceContext,
    call: &CallSite,
    spec: &ExceptionSpec,
    h: &ExceptionHierarchy,
) -> Result<HandlingStatus, AnalysisError> {
    if !matches!(call.resolution, Resolution::Resolved(_)) {
        return Err(AnalysisError::UnresolvedCall(call.simple_name.clone()));
    }
    let info = ctx
        .info(call)
        .ok_or_else(|| AnalysisError::UnknownCallSite(call.simple_name.clone()))?;
    Ok(status_of(info, spec, h).0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusRecord {
    pub fqn: String,
    pub exception: String,
    pub status: HandlingStatus,
    pub span: Range<usize>,
    #[serde(skip)]
    pub guardable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSummary {
    pub name: String,
    pub arity: usize,
    pub receiver_hint: String,
    pub span: Range<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<String>,
}

/// Full analyzer output for one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// `None` when no resolved call site has documented exceptions.
    pub label: Option<QualityLabel>,
    pub unhandled: Vec<UnhandledException>,
    pub statuses: Vec<StatusRecord>,
    pub ambiguous: Vec<SiteSummary>,
    pub unresolved: Vec<SiteSummary>,
    pub warnings: Vec<String>,
}

fn label_for(statuses: &[StatusRecord]) -> Option<QualityLabel> {
    if statuses.is_empty() {
        return None;
    }
    let any = |f: &dyn Fn(&StatusRecord) -> bool| statuses.iter().any(f);
    Some(if any(&|s| s.status == HandlingStatus::Unhandled) {
        QualityLabel::IncompleteExceptionHandling
    } else if any(&|s| s.status == HandlingStatus::CaughtSupertype) {
        QualityLabel::IncorrectExceptionHandling
    } else if any(&|s| s.status == HandlingStatus::CaughtExact && s.guardable) {
        QualityLabel::AbuseOfTryCatch
    } else {
        QualityLabel::GoodPractice
    })
}

pub fn analyze(source: &str, kb: &KnowledgeBase) -> Result<AnalysisReport, ParseError> {
    let ctx = SourceContext::parse(source)?;
    Ok(analyze_context(&ctx, kb))
}

pub fn analyze_context(ctx: &SourceContext, kb: &KnowledgeBase) -> AnalysisReport {
    let h = kb.hierarchy();
    let mut report = AnalysisReport {
        label: None,
        unhandled: Vec::new(),
        statuses: Vec::new(),
        ambiguous: Vec::new(),
        unresolved: Vec::new(),
        warnings: Vec::new(),
    };
    let mut seen = HashSet::new();
    for info in &ctx.calls {
        let site = resolve(&info.site, ctx, kb);
        let summary = |candidates: Vec<String>| SiteSummary {
            name: site.simple_name.clone(),
            arity: site.arity,
            receiver_hint: site.receiver_hint.clone(),
            span: site.span.clone(),
            candidates,
        };
        match &site.resolution {
            Resolution::Unresolved => report.unresolved.push(summary(Vec::new())),
            Resolution::Ambiguous(c) => report.ambiguous.push(summary(c.clone())),
            Resolution::Resolved(fqn) => {
                for spec in kb.lookup(fqn) {
                    let (status, guard) = status_of(info, spec, h);
                    if let Some(g) = guard.map(|i| &info.guards[i]) {
                        if g.idents.is_disjoint(&info.idents) {
                            report.warnings.push(format!(
                                "guard on line {} throwing {} shares no variables with the call to {} on line {}",
                                g.line,
                                g.exception,
                                fqn,
                                ctx.line_of(site.span.start)
                            ));
                        }
                    }
                    if status == HandlingStatus::Unhandled && seen.insert((fqn.clone(), spec.exception.clone())) {
                        report.unhandled.push(UnhandledException {
                            fqn: fqn.clone(),
                            exception: spec.exception.clone(),
                            condition: spec.condition.clone(),
                        });
                    }
                    report.statuses.push(StatusRecord {
                        fqn: fqn.clone(),
                        exception: spec.exception.clone(),
                        status,
                        span: site.span.clone(),
                        guardable: spec.guardable,
                    });
                }
            }
        }
    }
    report.label = label_for(&report.statuses);
    report
}

/// Unhandled (API, exception) pairs, deduplicated, in source order.
pub fn collect_unhandled(source: &str, kb: &KnowledgeBase) -> Result<Vec<UnhandledException>, ParseError> {
    Ok(analyze(source, kb)?.unhandled)
}

pub fn classify_quality(source: &str, kb: &KnowledgeBase) -> Result<QualityLabel, AnalysisError> {
    analyze(source, kb)?.label.ok_or(AnalysisError::NoRelevantApis)
}
