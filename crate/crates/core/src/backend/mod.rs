//! The code-construction interface every backend implements.
//!
//! Stream machinery never looks inside a [`CodeVal`]; it only combines them
//! through a [`Backend`]. A backend decides what a code value *is*: an
//! evaluable tree ([`crate::interp`]), a C syntax tree ([`crate::cgen`]), or
//! a constant-tracking wrapper over another backend ([`crate::peval`]).
//!
//! Statements and expressions share one representation: a statement is a
//! code value of type [`SemType::Unit`]. There is no operation that builds a
//! call, so no backend can emit one.

mod probe;
pub(crate) mod semantics;

use std::any::Any;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use probe::TypeProbe;
pub use semantics::{eval_arith, eval_cmp, ArithFault};

/// Element type of an array. Arrays nest exactly one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElemType {
    Int,
    Float,
}

impl ElemType {
    pub fn sem(self) -> SemType {
        match self {
            ElemType::Int => SemType::Int,
            ElemType::Float => SemType::Float,
        }
    }
}

/// The semantic type carried by every code value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SemType {
    Int,
    Bool,
    Float,
    Unit,
    Arr(ElemType),
}

impl SemType {
    pub fn is_numeric(self) -> bool {
        matches!(self, SemType::Int | SemType::Float)
    }

    /// Types a stream element or a state variable may have.
    pub fn is_scalar(self) -> bool {
        matches!(self, SemType::Int | SemType::Float | SemType::Bool)
    }

    pub fn elem(self) -> Option<SemType> {
        match self {
            SemType::Arr(e) => Some(e.sem()),
            _ => None,
        }
    }

    /// The zero value used for state declared ahead of its real initialization.
    pub fn default_lit(self) -> Option<Lit> {
        match self {
            SemType::Int => Some(Lit::Int(0)),
            SemType::Bool => Some(Lit::Bool(false)),
            SemType::Float => Some(Lit::Float(0.0)),
            SemType::Unit => Some(Lit::Unit),
            SemType::Arr(_) => None,
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemType::Int => f.write_str("int"),
            SemType::Bool => f.write_str("bool"),
            SemType::Float => f.write_str("float"),
            SemType::Unit => f.write_str("unit"),
            SemType::Arr(ElemType::Int) => f.write_str("int array"),
            SemType::Arr(ElemType::Float) => f.write_str("float array"),
        }
    }
}

/// A constant that can be embedded in code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lit {
    Int(i32),
    Bool(bool),
    Float(f64),
    Unit,
}

impl Lit {
    pub fn typ(self) -> SemType {
        match self {
            Lit::Int(_) => SemType::Int,
            Lit::Bool(_) => SemType::Bool,
            Lit::Float(_) => SemType::Float,
            Lit::Unit => SemType::Unit,
        }
    }

    pub fn as_int(self) -> Option<i32> {
        match self {
            Lit::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Lit::Bool(v) => Some(v),
            _ => None,
        }
    }

    /// Bitwise identity; distinguishes `0.0` from `-0.0`.
    pub fn same(self, other: Lit) -> bool {
        match (self, other) {
            (Lit::Float(a), Lit::Float(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

impl From<i32> for Lit {
    fn from(v: i32) -> Self {
        Lit::Int(v)
    }
}

impl From<bool> for Lit {
    fn from(v: bool) -> Self {
        Lit::Bool(v)
    }
}

impl From<f64> for Lit {
    fn from(v: f64) -> Self {
        Lit::Float(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Identity of one backend instance. Code values remember which backend
/// built them; handing one to another backend is an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BackendId(u64);

impl BackendId {
    /// Owner of the values built during type probing. Treated as a wildcard
    /// when stream owners are merged.
    pub const PROBE: BackendId = BackendId(0);

    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        BackendId(NEXT.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A binder introduced by `new_var`, `letb`, `for_` or a function parameter.
///
/// Symbols are unique for the life of the process; printable names are
/// assigned per unit when code is rendered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u64);

impl Sym {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        Sym(NEXT.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error("type error in `{op}`: expected {expected}, found {found}")]
    TypeMismatch {
        op: &'static str,
        expected: String,
        found: SemType,
    },
    #[error("`%` is only defined on int operands, found {0}")]
    ModOnFloat(SemType),
    #[error("code value built by backend {found} was given to backend {expected}")]
    BackendMix { expected: BackendId, found: BackendId },
    #[error("unit `{unit}` refers to {sym}, which is not bound inside it")]
    Unbound { unit: String, sym: Sym },
    #[error("arity mismatch in {what}: expected {expected}, found {found}")]
    Arity {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid name `{0}`")]
    BadName(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("stream already consumed")]
    StreamConsumed,
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Code = Result<CodeVal, CodeError>;

/// An opaque handle to a fragment of target code.
#[derive(Clone)]
pub struct CodeVal {
    typ: SemType,
    owner: BackendId,
    pure: bool,
    atomic: bool,
    konst: Option<Lit>,
    node: Arc<dyn Any + Send + Sync>,
}

impl CodeVal {
    /// A pure, non-atomic code value carrying a backend-specific payload.
    pub fn new<T: Any + Send + Sync>(owner: BackendId, typ: SemType, node: T) -> Self {
        CodeVal {
            typ,
            owner,
            pure: true,
            atomic: false,
            konst: None,
            node: Arc::new(node),
        }
    }

    /// Marks the value as having effects when evaluated.
    pub fn with_effects(mut self) -> Self {
        self.pure = false;
        self
    }

    /// Marks the value as safe to duplicate: a literal or an immutable name.
    pub fn with_atomic(mut self) -> Self {
        self.atomic = true;
        self
    }

    pub fn with_const(mut self, lit: Lit) -> Self {
        self.konst = Some(lit);
        self
    }

    pub fn typ(&self) -> SemType {
        self.typ
    }

    pub fn owner(&self) -> BackendId {
        self.owner
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub fn is_atomic(&self) -> bool {
        self.atomic
    }

    /// The statically known value, if any.
    pub fn as_const(&self) -> Option<Lit> {
        self.konst
    }

    pub fn node<T: Any>(&self) -> Option<&T> {
        self.node.downcast_ref::<T>()
    }
}

impl fmt::Debug for CodeVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodeVal")
            .field("typ", &self.typ)
            .field("owner", &self.owner)
            .field("konst", &self.konst)
            .finish()
    }
}

/// A mutable state cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarRef {
    typ: SemType,
    sym: Sym,
    owner: BackendId,
}

impl VarRef {
    pub fn new(owner: BackendId, typ: SemType, sym: Sym) -> Self {
        VarRef { typ, sym, owner }
    }

    pub fn typ(&self) -> SemType {
        self.typ
    }

    pub fn sym(&self) -> Sym {
        self.sym
    }

    pub fn owner(&self) -> BackendId {
        self.owner
    }

    /// The same cell, as seen through another backend. Used by wrappers.
    pub fn reowned(&self, owner: BackendId) -> VarRef {
        VarRef {
            owner,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub typ: SemType,
    pub sym: Sym,
}

/// A complete generated function.
#[derive(Clone, Debug)]
pub struct EmitUnit {
    name: String,
    params: Vec<Param>,
    body: CodeVal,
}

impl EmitUnit {
    pub fn new(name: &str, params: Vec<Param>, body: CodeVal) -> Result<Self, CodeError> {
        check_signature(name, params.iter().map(|p| (p.name.as_str(), p.typ)))?;
        Ok(EmitUnit {
            name: name.to_string(),
            params,
            body,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn body(&self) -> &CodeVal {
        &self.body
    }

    pub fn ret(&self) -> SemType {
        self.body.typ()
    }

    /// The backend that built the body.
    pub fn owner(&self) -> BackendId {
        self.body.owner()
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
    "main",
];

/// Names the C renderer reserves for generated locals: `v_N`, `t_N`, `i_N`.
fn is_generated_name(name: &str) -> bool {
    let mut parts = name.splitn(2, '_');
    matches!(parts.next(), Some("v" | "t" | "i"))
        && parts
            .next()
            .is_some_and(|n| !n.is_empty() && n.bytes().all(|c| c.is_ascii_digit()))
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Validates a function name and its parameter list against the C naming
/// rules used by the renderer. Shared by every backend's `make_fun`.
pub fn check_signature<'a>(
    name: &str,
    params: impl Iterator<Item = (&'a str, SemType)> + Clone,
) -> Result<(), CodeError> {
    let ok = |n: &str| is_identifier(n) && !C_KEYWORDS.contains(&n) && !is_generated_name(n);
    if !ok(name) {
        return Err(CodeError::BadName(name.to_string()));
    }
    let mut seen: Vec<String> = vec![name.to_string()];
    for (p, typ) in params {
        if !ok(p) || typ == SemType::Unit {
            return Err(CodeError::BadName(p.to_string()));
        }
        let mut names = vec![p.to_string()];
        if matches!(typ, SemType::Arr(_)) {
            names.push(format!("{p}_len"));
        }
        for n in names {
            if seen.contains(&n) {
                return Err(CodeError::BadName(n));
            }
            seen.push(n);
        }
    }
    Ok(())
}

pub(crate) fn expect_type(op: &'static str, expected: SemType, v: &CodeVal) -> Result<(), CodeError> {
    if v.typ() == expected {
        Ok(())
    } else {
        Err(CodeError::TypeMismatch {
            op,
            expected: expected.to_string(),
            found: v.typ(),
        })
    }
}

pub(crate) fn expect_owner(owner: BackendId, v: &CodeVal) -> Result<(), CodeError> {
    if v.owner() == owner {
        Ok(())
    } else {
        Err(CodeError::BackendMix {
            expected: owner,
            found: v.owner(),
        })
    }
}

pub(crate) fn expect_var_owner(owner: BackendId, v: &VarRef) -> Result<(), CodeError> {
    if v.owner() == owner {
        Ok(())
    } else {
        Err(CodeError::BackendMix {
            expected: owner,
            found: v.owner(),
        })
    }
}

/// A body builder passed to binding constructs.
pub type Scope<'a, T> = &'a mut dyn FnMut(&T) -> Code;

/// The typed code-construction interface.
///
/// Binding forms (`new_var`, `letb`, `for_`, `make_fun`) take the scope of
/// the new name as a builder, so a name can only be used where it is bound.
pub trait Backend: Send + Sync {
    fn id(&self) -> BackendId;

    /// Short human-readable name, e.g. `c` or `peval(interp)`.
    fn name(&self) -> String;

    fn lit(&self, v: Lit) -> Code;

    /// Truncating integer division; `%` takes the sign of the dividend.
    fn arith(&self, op: ArithOp, a: &CodeVal, b: &CodeVal) -> Code;

    fn cmp(&self, op: CmpOp, a: &CodeVal, b: &CodeVal) -> Code;

    /// Short-circuit conjunction.
    fn and(&self, a: &CodeVal, b: &CodeVal) -> Code;

    /// Short-circuit disjunction.
    fn or(&self, a: &CodeVal, b: &CodeVal) -> Code;

    fn not(&self, a: &CodeVal) -> Code;

    /// Conditional expression; only the chosen branch is evaluated.
    fn cond(&self, c: &CodeVal, a: &CodeVal, b: &CodeVal) -> Code;

    /// Declares a mutable cell initialized to `init`, visible inside `body`.
    fn new_var(&self, init: &CodeVal, body: Scope<'_, VarRef>) -> Code;

    fn read(&self, v: &VarRef) -> Code;

    fn write(&self, v: &VarRef, x: &CodeVal) -> Code;

    fn if_(&self, c: &CodeVal, then: &CodeVal, els: Option<&CodeVal>) -> Code;

    fn while_(&self, guard: &CodeVal, body: &CodeVal) -> Code;

    /// Counted loop over `lo..=hi`; `hi` is evaluated once.
    fn for_(&self, lo: &CodeVal, hi: &CodeVal, body: Scope<'_, CodeVal>) -> Code;

    fn arr_len(&self, a: &CodeVal) -> Code;

    fn arr_get(&self, a: &CodeVal, i: &CodeVal) -> Code;

    fn arr_set(&self, a: &CodeVal, i: &CodeVal, x: &CodeVal) -> Code;

    /// Runs `a`, then yields `b`.
    fn seq(&self, a: &CodeVal, b: &CodeVal) -> Code;

    /// Names the value of `x` once; `body` sees an immutable local.
    fn letb(&self, x: &CodeVal, body: Scope<'_, CodeVal>) -> Code;

    fn make_fun(
        &self,
        name: &str,
        params: &[(&str, SemType)],
        body: &mut dyn FnMut(&[CodeVal]) -> Code,
    ) -> Result<EmitUnit, CodeError>;
}

/// Shorthands over the core interface.
impl dyn Backend + '_ {
    pub fn int(&self, v: i32) -> Code {
        self.lit(Lit::Int(v))
    }

    pub fn bool(&self, v: bool) -> Code {
        self.lit(Lit::Bool(v))
    }

    pub fn float(&self, v: f64) -> Code {
        self.lit(Lit::Float(v))
    }

    pub fn nop(&self) -> Code {
        self.lit(Lit::Unit)
    }

    pub fn add(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.arith(ArithOp::Add, a, b)
    }

    pub fn sub(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.arith(ArithOp::Sub, a, b)
    }

    pub fn mul(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.arith(ArithOp::Mul, a, b)
    }

    pub fn div(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.arith(ArithOp::Div, a, b)
    }

    pub fn rem(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.arith(ArithOp::Mod, a, b)
    }

    pub fn lt(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Lt, a, b)
    }

    pub fn le(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Le, a, b)
    }

    pub fn gt(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Gt, a, b)
    }

    pub fn ge(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Ge, a, b)
    }

    pub fn eq(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Eq, a, b)
    }

    pub fn ne(&self, a: &CodeVal, b: &CodeVal) -> Code {
        self.cmp(CmpOp::Ne, a, b)
    }

    /// `v := v + 1`
    pub fn incr(&self, v: &VarRef) -> Code {
        let one = self.int(1)?;
        let next = self.add(&self.read(v)?, &one)?;
        self.write(v, &next)
    }

    /// `v := v - 1`
    pub fn decr(&self, v: &VarRef) -> Code {
        let one = self.int(1)?;
        let next = self.sub(&self.read(v)?, &one)?;
        self.write(v, &next)
    }

    /// Runs the statements in order; the empty sequence is a no-op.
    pub fn seq_all(&self, stmts: &[CodeVal]) -> Code {
        match stmts.split_last() {
            None => self.nop(),
            Some((last, init)) => init
                .iter()
                .rev()
                .try_fold(last.clone(), |acc, s| self.seq(s, &acc)),
        }
    }

    /// Conjunction of all guards; `None` when the list is empty.
    pub fn and_all(&self, guards: &[CodeVal]) -> Result<Option<CodeVal>, CodeError> {
        let mut it = guards.iter();
        let Some(first) = it.next() else {
            return Ok(None);
        };
        it.try_fold(first.clone(), |acc, g| self.and(&acc, g)).map(Some)
    }
}
