//! Pipeline descriptions: a small text format for whole pipelines, with a
//! JSON mirror, a checker and a compiler to any backend.
//!
//! ```text
//! pipeline ex2() =
//!   iota(1)
//!   |> map(e * e)
//!   |> filter(e % 17 > 7)
//!   |> take(10)
//!   |> sum
//! ```
//!
//! The grammar is in `docs/pipeline-format.md`.

mod build;
mod check;
mod json;
mod lexer;
mod parser;
mod print;

use std::fmt;

use thiserror::Error;

use crate::backend::SemType;

pub use build::{
    build_drain_unit, build_unit, compile_to_c, compile_to_c_plain, drain, evaluate, PipelineError, DRAIN_OUT,
};
pub use check::{check, Checked};
pub use json::{from_json, to_json};
pub use parser::{parse_expr, parse_pipeline};
pub use print::print_pipeline;

/// Format version written by the printer and accepted by the parser.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    UnknownOp(String),
    UnknownName(String),
    Type,
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    Duplicate(String),
    Version(u32),
}

/// A located error in a pipeline description.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {msg}")]
pub struct Diagnostic {
    pub pos: Pos,
    pub kind: DiagKind,
    pub msg: String,
}

impl Diagnostic {
    pub(crate) fn new(pos: Pos, kind: DiagKind, msg: impl Into<String>) -> Self {
        Diagnostic {
            pos,
            kind,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamType {
    Int,
    IntArray,
    DoubleArray,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Int => "int",
            ParamType::IntArray => "int_array",
            ParamType::DoubleArray => "double_array",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "int" => Some(ParamType::Int),
            "int_array" => Some(ParamType::IntArray),
            "double_array" => Some(ParamType::DoubleArray),
            _ => None,
        }
    }

    pub fn sem(self) -> SemType {
        use crate::backend::ElemType;
        match self {
            ParamType::Int => SemType::Int,
            ParamType::IntArray => SemType::Arr(ElemType::Int),
            ParamType::DoubleArray => SemType::Arr(ElemType::Float),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; all binary operators associate to the left.
    pub fn prec(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::And,
        BinOp::Or,
    ];
}

/// An action expression. Positions are ignored by `==`.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Int(i32),
    Float(f64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Unary(o, a), Unary(p, b)) => o == p && a == b,
            (Binary(o, a1, a2), Binary(p, b1, b2)) => o == p && a1 == b1 && a2 == b2,
            (Cond(a1, a2, a3), Cond(b1, b2, b3)) => a1 == b1 && a2 == b2 && a3 == b3,
            _ => false,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            pos: Pos::default(),
        }
    }

    pub fn int(v: i32) -> Self {
        Expr::new(ExprKind::Int(v))
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(name.to_string()))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print_expr(self))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub ty: ParamType,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Iota(Expr),
    OfArr(String),
    /// `lo` up to, not including, `hi`.
    Range(Expr, Expr),
    ZipWith {
        f: Expr,
        left: Box<Chain>,
        right: Box<Chain>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Map(Expr),
    Filter(Expr),
    Take(Expr),
    TakeWhile(Expr),
    Drop(Expr),
    DropWhile(Expr),
    /// The inner chain sees the outer element as `var`.
    FlatMap {
        var: String,
        body: Box<Chain>,
    },
    /// State `s` starts at `init`; each element emits `out` and moves the
    /// state to `next`, both computed from the old state.
    MapAccum {
        init: Expr,
        next: Expr,
        out: Expr,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Map(_) => "map",
            Op::Filter(_) => "filter",
            Op::Take(_) => "take",
            Op::TakeWhile(_) => "take_while",
            Op::Drop(_) => "drop",
            Op::DropWhile(_) => "drop_while",
            Op::FlatMap { .. } => "flat_map",
            Op::MapAccum { .. } => "map_accum",
        }
    }
}

pub const OP_NAMES: &[&str] = &[
    "map",
    "filter",
    "take",
    "take_while",
    "drop",
    "drop_while",
    "flat_map",
    "map_accum",
];

pub const SOURCE_NAMES: &[&str] = &["iota", "of_arr", "range", "zip_with"];

pub const SINK_NAMES: &[&str] = &["sum", "fold", "iter_count"];

/// Names bound inside actions; never usable as parameter or binder names.
pub const RESERVED: &[&str] = &["e", "x", "y", "acc", "s", "true", "false"];

/// An operation with the position of its name.
#[derive(Clone, Debug)]
pub struct Step {
    pub op: Op,
    pub pos: Pos,
}

impl PartialEq for Step {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op
    }
}

impl From<Op> for Step {
    fn from(op: Op) -> Self {
        Step {
            op,
            pos: Pos::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub source: Source,
    pub ops: Vec<Step>,
    pub pos: Pos,
}

impl PartialEq for Chain {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.ops == other.ops
    }
}

impl Chain {
    pub fn new(source: Source, ops: Vec<Op>) -> Self {
        Chain {
            source,
            ops: ops.into_iter().map(Step::from).collect(),
            pos: Pos::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sink {
    Sum,
    Fold { init: Expr, step: Expr },
    IterCount,
}

/// A whole pipeline: a stream chain and the sink that consumes it.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineDesc {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub chain: Chain,
    pub sink: Sink,
}
