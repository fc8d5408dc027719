//! Syntax tree for the supported Java subset. Only what the exception
//! analysis needs is kept; generic arguments survive as text on [`TypeRef`].

pub type Span = std::ops::Range<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct CompilationUnit {
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub types: Vec<TypeDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: String,
    pub is_static: bool,
    pub wildcard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDecl {
    /// Empty for the implicit wrapper around top-level members.
    pub name: String,
    pub extends: Option<TypeRef>,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Method(MethodDecl),
    Field { ty: TypeRef, vars: Vec<VarDecl> },
    Initializer(Block),
    Type(TypeDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub constructor: bool,
    pub params: Vec<Param>,
    pub throws: Vec<TypeRef>,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRef {
    /// Dotted name without generic arguments, e.g. `java.util.Vector`.
    pub name: String,
    pub array_dims: usize,
    /// Full source text, generic arguments included.
    pub text: String,
}

impl TypeRef {
    pub fn simple(name: &str) -> Self {
        Self { name: name.to_string(), array_dims: 0, text: name.to_string() }
    }

    pub fn is_var(&self) -> bool {
        self.name == "var" && self.array_dims == 0
    }

    /// Name used as a receiver hint: arrays keep their brackets.
    pub fn hint(&self) -> String {
        let mut s = self.name.clone();
        for _ in 0..self.array_dims {
            s.push_str("[]");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub dims: usize,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Block),
    LocalVar { ty: TypeRef, vars: Vec<VarDecl> },
    LocalClass(TypeDecl),
    Expr(Expr),
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: Vec<Stmt>, cond: Option<Expr>, update: Vec<Expr>, body: Box<Stmt> },
    ForEach { ty: TypeRef, name: String, iterable: Expr, body: Box<Stmt> },
    Try { resources: Vec<Resource>, body: Block, catches: Vec<CatchClause>, finally: Option<Block> },
    Throw(Expr),
    Return(Option<Expr>),
    Break,
    Continue,
    Yield(Expr),
    Switch { selector: Expr, cases: Vec<SwitchCase> },
    Synchronized { lock: Expr, body: Block },
    Labeled { label: String, body: Box<Stmt> },
    Assert { cond: Expr, message: Option<Expr> },
    /// `this(...)` or `super(...)` at the top of a constructor.
    CtorCall { args: Vec<Expr> },
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resource {
    Decl { ty: TypeRef, name: String, init: Expr },
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatchClause {
    pub types: Vec<TypeRef>,
    pub name: String,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCase {
    /// Empty for `default`.
    pub labels: Vec<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int,
    Float,
    Char,
    Str,
    Bool,
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Name(String),
    This,
    Super,
    FieldAccess { target: Box<Expr>, name: String },
    Call(Call),
    New { ty: TypeRef, args: Vec<Expr>, body: Option<Vec<Member>>, outer: Option<Box<Expr>> },
    NewArray { ty: TypeRef, dims: Vec<Expr>, init: Option<Vec<Expr>> },
    ArrayInit(Vec<Expr>),
    Index { target: Box<Expr>, index: Box<Expr> },
    Unary { op: &'static str, operand: Box<Expr> },
    Binary { op: &'static str, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: &'static str, target: Box<Expr>, value: Box<Expr> },
    Conditional { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
    InstanceOf { expr: Box<Expr>, ty: TypeRef, binding: Option<String> },
    Lambda { params: Vec<(Option<TypeRef>, String)>, body: LambdaBody },
    MethodRef { target: Box<Expr>, name: String },
    ClassLit(TypeRef),
    TypeExpr(TypeRef),
    Switch { selector: Box<Expr>, cases: Vec<SwitchCase> },
    Paren(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaBody {
    Expr(Box<Expr>),
    Block(Block),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub target: Option<Box<Expr>>,
    pub name: String,
    pub name_span: Span,
    pub args: Vec<Expr>,
}
