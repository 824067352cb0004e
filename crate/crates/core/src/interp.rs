//! A backend that evaluates code in-process.
//!
//! This is the semantic oracle for everything else: it models C integer
//! semantics exactly and traps where C would be undefined (out-of-bounds
//! indexing, division by zero, reads of undeclared cells).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::backend::{eval_arith, eval_cmp, ArithFault, CodeVal, EmitUnit, Lit, Param, SemType, Sym};
use crate::ir::{delegate_backend, Kind, Node, TreeBackend, N};

/// The evaluating backend.
///
/// [`eval_unit`] also accepts units built by the C backend or by a partial
/// evaluator over either, since they share one code-tree representation.
pub struct Interp(TreeBackend);

impl Default for Interp {
    fn default() -> Self {
        Self::new()
    }
}

impl Interp {
    pub fn new() -> Self {
        Interp(TreeBackend::new("interp"))
    }
}

delegate_backend!(Interp);

/// A runtime value.
#[derive(Clone, Debug)]
pub enum Value {
    Int(i32),
    Bool(bool),
    Float(f64),
    Unit,
    Arr(Arc<Vec<Value>>),
}

impl Value {
    pub fn int_array(xs: &[i32]) -> Value {
        Value::Arr(Arc::new(xs.iter().map(|&x| Value::Int(x)).collect()))
    }

    pub fn float_array(xs: &[f64]) -> Value {
        Value::Arr(Arc::new(xs.iter().map(|&x| Value::Float(x)).collect()))
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Value]> {
        match self {
            Value::Arr(xs) => Some(xs),
            _ => None,
        }
    }

    /// Whether the value inhabits `typ`.
    pub fn has_type(&self, typ: SemType) -> bool {
        match (self, typ) {
            (Value::Int(_), SemType::Int)
            | (Value::Bool(_), SemType::Bool)
            | (Value::Float(_), SemType::Float)
            | (Value::Unit, SemType::Unit) => true,
            (Value::Arr(xs), SemType::Arr(e)) => xs.iter().all(|x| x.has_type(e.sem())),
            _ => false,
        }
    }

    fn lit(&self) -> Option<Lit> {
        match self {
            Value::Int(v) => Some(Lit::Int(*v)),
            Value::Bool(v) => Some(Lit::Bool(*v)),
            Value::Float(v) => Some(Lit::Float(*v)),
            Value::Unit => Some(Lit::Unit),
            Value::Arr(_) => None,
        }
    }
}

impl From<Lit> for Value {
    fn from(l: Lit) -> Self {
        match l {
            Lit::Int(v) => Value::Int(v),
            Lit::Bool(v) => Value::Bool(v),
            Lit::Float(v) => Value::Float(v),
            Lit::Unit => Value::Unit,
        }
    }
}

/// Floats compare bitwise, so `NaN == NaN` and `0.0 != -0.0`.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Unit, Value::Unit) => true,
            (Value::Arr(a), Value::Arr(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Unit => f.write_str("()"),
            Value::Arr(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrapKind {
    #[error("unit body is not an evaluable code tree")]
    WrongBackend,
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("index {index} out of bounds for array of length {len}")]
    IndexOutOfBounds { index: i32, len: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("read of undeclared cell {0}")]
    Uninitialized(Sym),
    #[error("fuel exhausted after {0} loop steps")]
    OutOfFuel(u64),
    #[error("malformed code: {0}")]
    Malformed(String),
}

/// A hard evaluation error, with the chain of constructs it occurred in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trap {
    pub kind: TrapKind,
    /// Innermost construct first.
    pub path: Vec<&'static str>,
}

impl Trap {
    fn new(kind: TrapKind) -> Self {
        Trap {
            kind,
            path: Vec::new(),
        }
    }

    fn within(mut self, what: &'static str) -> Self {
        self.path.push(what);
        self
    }
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.path.is_empty() {
            let path: Vec<&str> = self.path.iter().rev().copied().collect();
            write!(f, " (in {})", path.join(" > "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Trap {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectOp {
    Declare,
    Read,
    Write,
}

/// One access to a mutable cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub sym: Sym,
    pub op: EffectOp,
}

/// Evaluation settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Maximum number of loop-body executions before trapping.
    pub fuel: Option<u64>,
    /// Record every access to a mutable cell.
    pub trace: bool,
}

/// Everything an evaluation produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub value: Value,
    /// Number of loop-body executions, over all loops.
    pub steps: u64,
    /// Parameter values after the call; arrays reflect `arr_set` writes.
    pub args: Vec<Value>,
    pub trace: Vec<Event>,
}

struct Machine {
    env: HashMap<Sym, Value>,
    steps: u64,
    fuel: Option<u64>,
    trace: Option<Vec<Event>>,
}

impl Machine {
    fn new(opts: &RunOptions) -> Self {
        Machine {
            env: HashMap::new(),
            steps: 0,
            fuel: opts.fuel,
            trace: opts.trace.then(Vec::new),
        }
    }

    fn record(&mut self, sym: Sym, op: EffectOp) {
        if let Some(t) = &mut self.trace {
            t.push(Event { sym, op });
        }
    }

    fn tick(&mut self) -> Result<(), Trap> {
        self.steps += 1;
        match self.fuel {
            Some(f) if self.steps > f => Err(Trap::new(TrapKind::OutOfFuel(f))),
            _ => Ok(()),
        }
    }

    fn lookup(&self, sym: Sym) -> Result<&Value, Trap> {
        self.env
            .get(&sym)
            .ok_or_else(|| Trap::new(TrapKind::Uninitialized(sym)))
    }

    fn scalar(&mut self, n: &Node) -> Result<Lit, Trap> {
        let v = self.eval(n)?;
        v.lit()
            .ok_or_else(|| Trap::new(TrapKind::Malformed("expected a scalar".into())))
    }

    fn boolean(&mut self, n: &Node) -> Result<bool, Trap> {
        match self.eval(n)? {
            Value::Bool(b) => Ok(b),
            _ => Err(Trap::new(TrapKind::Malformed("expected a bool".into()))),
        }
    }

    fn index(&mut self, n: &Node) -> Result<i32, Trap> {
        match self.eval(n)? {
            Value::Int(i) => Ok(i),
            _ => Err(Trap::new(TrapKind::Malformed("expected an int".into()))),
        }
    }

    fn eval(&mut self, n: &Node) -> Result<Value, Trap> {
        match &n.kind {
            Kind::Lit(l) => Ok(Value::from(*l)),
            Kind::Local(s) => self.lookup(*s).cloned(),
            Kind::Read(s) => {
                self.record(*s, EffectOp::Read);
                self.lookup(*s).cloned()
            }
            Kind::Arith(op, a, b) => {
                let x = self.scalar(a)?;
                let y = self.scalar(b)?;
                eval_arith(*op, x, y)
                    .map(Value::from)
                    .map_err(|ArithFault::DivisionByZero| {
                        Trap::new(TrapKind::DivisionByZero).within(op.symbol())
                    })
            }
            Kind::Cmp(op, a, b) => {
                let x = self.scalar(a)?;
                let y = self.scalar(b)?;
                Ok(Value::Bool(eval_cmp(*op, x, y)))
            }
            Kind::And(a, b) => Ok(Value::Bool(self.boolean(a)? && self.boolean(b)?)),
            Kind::Or(a, b) => Ok(Value::Bool(self.boolean(a)? || self.boolean(b)?)),
            Kind::Not(a) => Ok(Value::Bool(!self.boolean(a)?)),
            Kind::Cond(c, a, b) => {
                if self.boolean(c)? {
                    self.eval(a)
                } else {
                    self.eval(b)
                }
            }
            Kind::NewVar { sym, init, body } => {
                let v = self.eval(init)?;
                self.record(*sym, EffectOp::Declare);
                self.env.insert(*sym, v);
                self.eval(body)
            }
            Kind::Write(sym, x) => {
                let v = self.eval(x).map_err(|t| t.within("write"))?;
                if !self.env.contains_key(sym) {
                    return Err(Trap::new(TrapKind::Uninitialized(*sym)).within("write"));
                }
                self.record(*sym, EffectOp::Write);
                self.env.insert(*sym, v);
                Ok(Value::Unit)
            }
            Kind::Let { sym, init, body } => {
                let v = self.eval(init).map_err(|t| t.within("letb"))?;
                self.env.insert(*sym, v);
                self.eval(body)
            }
            Kind::If(c, t, e) => {
                if self.boolean(c).map_err(|t| t.within("if"))? {
                    self.eval(t).map_err(|t| t.within("if"))
                } else if let Some(e) = e {
                    self.eval(e).map_err(|t| t.within("else"))
                } else {
                    Ok(Value::Unit)
                }
            }
            Kind::While(g, b) => {
                while self.boolean(g).map_err(|t| t.within("while guard"))? {
                    self.tick().map_err(|t| t.within("while"))?;
                    self.eval(b).map_err(|t| t.within("while"))?;
                }
                Ok(Value::Unit)
            }
            Kind::For { sym, lo, hi, body } => {
                let lo = self.index(lo).map_err(|t| t.within("for bound"))?;
                let hi = self.index(hi).map_err(|t| t.within("for bound"))?;
                for i in i64::from(lo)..=i64::from(hi) {
                    self.tick().map_err(|t| t.within("for"))?;
                    self.env.insert(*sym, Value::Int(i as i32));
                    self.eval(body).map_err(|t| t.within("for"))?;
                }
                Ok(Value::Unit)
            }
            Kind::ArrLen(a) => match self.eval(a)? {
                Value::Arr(xs) => Ok(Value::Int(xs.len() as i32)),
                _ => Err(Trap::new(TrapKind::Malformed("expected an array".into()))),
            },
            Kind::ArrGet(a, i) => {
                let arr = self.eval(a)?;
                let idx = self.index(i)?;
                let Value::Arr(xs) = arr else {
                    return Err(Trap::new(TrapKind::Malformed("expected an array".into())));
                };
                usize::try_from(idx)
                    .ok()
                    .and_then(|k| xs.get(k).cloned())
                    .ok_or_else(|| {
                        Trap::new(TrapKind::IndexOutOfBounds {
                            index: idx,
                            len: xs.len(),
                        })
                        .within("arr_get")
                    })
            }
            Kind::ArrSet(sym, i, x) => {
                let idx = self.index(i)?;
                let v = self.eval(x)?;
                let Some(Value::Arr(xs)) = self.env.get_mut(sym) else {
                    return Err(Trap::new(TrapKind::Uninitialized(*sym)).within("arr_set"));
                };
                let len = xs.len();
                let slot = usize::try_from(idx).ok().filter(|k| *k < len).ok_or_else(|| {
                    Trap::new(TrapKind::IndexOutOfBounds { index: idx, len }).within("arr_set")
                })?;
                Arc::make_mut(xs)[slot] = v;
                Ok(Value::Unit)
            }
            Kind::Seq(a, b) => {
                self.eval(a)?;
                self.eval(b)
            }
        }
    }
}

fn unit_root(u: &EmitUnit) -> Result<&N, Trap> {
    u.body()
        .node::<N>()
        .ok_or_else(|| Trap::new(TrapKind::WrongBackend))
}

fn bind_args(m: &mut Machine, params: &[Param], args: &[Value]) -> Result<(), Trap> {
    if params.len() != args.len() {
        return Err(Trap::new(TrapKind::BadArgs(format!(
            "expected {} arguments, got {}",
            params.len(),
            args.len()
        ))));
    }
    for (p, a) in params.iter().zip(args) {
        if !a.has_type(p.typ) {
            return Err(Trap::new(TrapKind::BadArgs(format!(
                "argument `{}` should be {}, got {a}",
                p.name, p.typ
            ))));
        }
        m.env.insert(p.sym, a.clone());
    }
    Ok(())
}

/// Evaluates a unit with full control over fuel and tracing.
pub fn run(u: &EmitUnit, args: &[Value], opts: &RunOptions) -> Result<Outcome, Trap> {
    let root = unit_root(u)?;
    let mut m = Machine::new(opts);
    bind_args(&mut m, u.params(), args)?;
    let value = m.eval(root).map_err(|t| t.within("unit"))?;
    let args = u
        .params()
        .iter()
        .map(|p| m.env.get(&p.sym).cloned().unwrap_or(Value::Unit))
        .collect();
    Ok(Outcome {
        value,
        steps: m.steps,
        args,
        trace: m.trace.unwrap_or_default(),
    })
}

pub fn eval_unit(u: &EmitUnit, args: &[Value]) -> Result<Value, Trap> {
    run(u, args, &RunOptions::default()).map(|o| o.value)
}

/// Evaluates and counts loop-body executions, trapping past `fuel` steps.
pub fn eval_count(u: &EmitUnit, args: &[Value], fuel: u64) -> Result<(Value, u64), Trap> {
    let opts = RunOptions {
        fuel: Some(fuel),
        trace: false,
    };
    run(u, args, &opts).map(|o| (o.value, o.steps))
}

/// Evaluates a closed code value outside any unit, returning its value and
/// the cell accesses it performed.
pub fn eval_code(code: &CodeVal) -> Result<(Value, Vec<Event>), Trap> {
    let root = code
        .node::<N>()
        .ok_or_else(|| Trap::new(TrapKind::WrongBackend))?;
    let mut m = Machine::new(&RunOptions {
        fuel: None,
        trace: true,
    });
    let v = m.eval(root)?;
    Ok((v, m.trace.unwrap_or_default()))
}
