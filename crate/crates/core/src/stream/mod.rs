//! The fusion engine.
//!
//! A [`StreamRep`] exists only while code is being generated. It records the
//! state a pipeline needs, how elements are produced, and the transforms
//! applied to them. Driving it runs all of that symbolically and leaves a
//! single loop nest in the target code; nothing of the stream survives.
//!
//! Elements travel as bundles: fixed-arity slices of code values. Zipping
//! concatenates bundles instead of building pairs.

mod gen;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::backend::{Backend, BackendId, Code, CodeError, CodeVal, SemType, VarRef};

pub use gen::Linearized;

/// Names one piece of stream state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StateKey(u64);

impl StateKey {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        StateKey(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone)]
enum Binding {
    Var(VarRef),
    Val(CodeVal),
    Pull(Arc<Linearized>),
}

struct EnvNode {
    key: StateKey,
    binding: Binding,
    next: Env,
}

/// The state in scope while a stream generates code.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

impl Env {
    fn bind(&self, key: StateKey, binding: Binding) -> Env {
        Env(Some(Arc::new(EnvNode {
            key,
            binding,
            next: self.clone(),
        })))
    }

    fn lookup(&self, key: StateKey) -> Result<&Binding, CodeError> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.key == key {
                return Ok(&node.binding);
            }
            cur = &node.next.0;
        }
        Err(CodeError::Internal(format!(
            "stream state {key:?} is not in scope"
        )))
    }

    /// The mutable cell behind a state key.
    pub fn var(&self, key: StateKey) -> Result<&VarRef, CodeError> {
        match self.lookup(key)? {
            Binding::Var(v) => Ok(v),
            _ => Err(CodeError::Internal(format!("stream state {key:?} is not a cell"))),
        }
    }

    /// The current value of a state key.
    pub fn val(&self, b: &dyn Backend, key: StateKey) -> Code {
        match self.lookup(key)? {
            Binding::Var(v) => b.read(v),
            Binding::Val(x) => Ok(x.clone()),
            Binding::Pull(_) => Err(CodeError::Internal(format!(
                "stream state {key:?} is a pulled stream"
            ))),
        }
    }

    fn pull(&self, key: StateKey) -> Result<&Linearized, CodeError> {
        match self.lookup(key)? {
            Binding::Pull(p) => Ok(p),
            _ => Err(CodeError::Internal(format!("stream state {key:?} is not pulled"))),
        }
    }
}

/// Receives one element bundle; returns the statement that consumes it.
pub type Emit<'a> = &'a mut dyn FnMut(&[CodeVal]) -> Code;

pub type ExprFn = Arc<dyn Fn(&dyn Backend, &Env) -> Code + Send + Sync>;
pub type StepFn = Arc<dyn Fn(&dyn Backend, &Env, Emit<'_>) -> Code + Send + Sync>;
pub type BodyFn = Arc<dyn Fn(&dyn Backend, &Env, &CodeVal, Emit<'_>) -> Code + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&dyn Backend, &Env, &[CodeVal]) -> Result<Vec<CodeVal>, CodeError> + Send + Sync>;
pub type CpsFn = Arc<dyn Fn(&dyn Backend, &Env, &[CodeVal], Emit<'_>) -> Code + Send + Sync>;
pub type FlatFn = Arc<dyn Fn(&dyn Backend, &Env, &[CodeVal]) -> Result<StreamRep, CodeError> + Send + Sync>;

/// A constant expression.
pub fn expr(v: CodeVal) -> ExprFn {
    Arc::new(move |_, _| Ok(v.clone()))
}

#[derive(Clone)]
pub(crate) enum Producer {
    /// Indices `0..=bound`, with the bound evaluated once.
    Counted { bound: ExprFn, body: BodyFn },
    /// Steps while every guard holds. No guards means forever.
    Guarded { guards: Vec<ExprFn>, step: StepFn },
}

#[derive(Clone)]
pub(crate) enum Transform {
    Map {
        f: MapFn,
        out: Vec<SemType>,
    },
    /// Emits zero or one element per input.
    Filter {
        f: CpsFn,
    },
    /// Emits exactly one element per input, except on the step where it
    /// also makes one of the stream's guards false.
    Tap {
        f: CpsFn,
        out: Vec<SemType>,
    },
    Flat {
        inner: FlatFn,
        guards: Vec<ExprFn>,
        out: Vec<SemType>,
    },
}

/// A stream that can be taken out once, from behind a shared reference.
pub(crate) struct Once<T>(Mutex<Option<T>>);

impl<T> Once<T> {
    pub(crate) fn new(x: T) -> Self {
        Once(Mutex::new(Some(x)))
    }

    pub(crate) fn take(&self) -> Result<T, CodeError> {
        self.0
            .lock()
            .map_err(|_| CodeError::Internal("poisoned stream cell".into()))?
            .take()
            .ok_or(CodeError::StreamConsumed)
    }
}

pub(crate) enum InitKind {
    Var(ExprFn),
    /// Evaluated once; never written.
    Let(ExprFn),
    /// Another stream, pulled one element at a time.
    Pull(Once<StreamRep>),
}

pub(crate) struct Init {
    key: StateKey,
    typ: SemType,
    kind: InitKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linearity {
    /// Each step emits one element, or ends the stream.
    Linear,
    Nonlinear,
}

/// A stream under construction.
///
/// Every operation takes the stream by value, so a stream can be consumed
/// only once.
pub struct StreamRep {
    inits: Vec<Init>,
    producer: Producer,
    ptypes: Vec<SemType>,
    transforms: Vec<Transform>,
    owner: Option<BackendId>,
}

fn merge_owner(a: Option<BackendId>, b: Option<BackendId>) -> Result<Option<BackendId>, CodeError> {
    let real = |o: Option<BackendId>| o.filter(|id| *id != BackendId::PROBE);
    match (real(a), real(b)) {
        (Some(x), Some(y)) if x != y => Err(CodeError::BackendMix {
            expected: x,
            found: y,
        }),
        (x, y) => Ok(x.or(y)),
    }
}

fn check_arity(what: &'static str, expected: usize, found: usize) -> Result<(), CodeError> {
    if expected == found {
        Ok(())
    } else {
        Err(CodeError::Arity {
            what,
            expected,
            found,
        })
    }
}

impl StreamRep {
    /// A stream over indices `0..=bound`; `body` emits one bundle per index.
    pub fn counted(types: Vec<SemType>, bound: ExprFn, body: BodyFn) -> Self {
        StreamRep {
            inits: Vec::new(),
            producer: Producer::Counted { bound, body },
            ptypes: types,
            transforms: Vec::new(),
            owner: None,
        }
    }

    /// A stream that steps while all `guards` hold; `step` emits one bundle.
    pub fn guarded(types: Vec<SemType>, guards: Vec<ExprFn>, step: StepFn) -> Self {
        StreamRep {
            inits: Vec::new(),
            producer: Producer::Guarded { guards, step },
            ptypes: types,
            transforms: Vec::new(),
            owner: None,
        }
    }

    /// Adds a state cell, declared before the loop.
    pub fn with_var(mut self, typ: SemType, init: ExprFn) -> (Self, StateKey) {
        let key = StateKey::fresh();
        self.inits.push(Init {
            key,
            typ,
            kind: InitKind::Var(init),
        });
        (self, key)
    }

    /// Like [`with_var`](Self::with_var), under a key chosen in advance.
    pub fn with_var_at(mut self, key: StateKey, typ: SemType, init: ExprFn) -> Self {
        self.inits.push(Init {
            key,
            typ,
            kind: InitKind::Var(init),
        });
        self
    }

    /// Adds a value computed once before the loop.
    pub fn with_let(mut self, typ: SemType, init: ExprFn) -> (Self, StateKey) {
        let key = StateKey::fresh();
        self.inits.push(Init {
            key,
            typ,
            kind: InitKind::Let(init),
        });
        (self, key)
    }

    /// Records that the stream captured code built by `owner`.
    pub fn claim(mut self, v: &CodeVal) -> Result<Self, CodeError> {
        self.owner = merge_owner(self.owner, Some(v.owner()))?;
        Ok(self)
    }

    pub fn owner(&self) -> Option<BackendId> {
        self.owner
    }

    /// Element types of the bundles the stream emits.
    pub fn types(&self) -> &[SemType] {
        self.types_before(self.transforms.len())
    }

    fn types_before(&self, j: usize) -> &[SemType] {
        for t in self.transforms[..j].iter().rev() {
            match t {
                Transform::Map { out, .. } | Transform::Tap { out, .. } | Transform::Flat { out, .. } => {
                    return out
                }
                Transform::Filter { .. } => {}
            }
        }
        &self.ptypes
    }

    pub fn linearity(&self) -> Linearity {
        let nonlinear = self
            .transforms
            .iter()
            .any(|t| matches!(t, Transform::Filter { .. } | Transform::Flat { .. }));
        if nonlinear {
            Linearity::Nonlinear
        } else {
            Linearity::Linear
        }
    }

    pub fn is_counted(&self) -> bool {
        matches!(self.producer, Producer::Counted { .. })
    }

    fn prepend(&mut self, typ: SemType, kind: InitKind) -> StateKey {
        let key = StateKey::fresh();
        self.inits.insert(0, Init { key, typ, kind });
        key
    }

    /// Turns a counted producer into a guarded one over an index cell.
    fn make_guarded(&mut self) {
        let Producer::Counted { bound, body } = &self.producer else {
            return;
        };
        let (bound, body) = (bound.clone(), body.clone());
        let hi = StateKey::fresh();
        let idx = StateKey::fresh();
        self.inits.push(Init {
            key: hi,
            typ: SemType::Int,
            kind: InitKind::Let(bound),
        });
        self.inits.push(Init {
            key: idx,
            typ: SemType::Int,
            kind: InitKind::Var(Arc::new(|b, _| b.int(0))),
        });
        let guard: ExprFn = Arc::new(move |b, env| b.le(&env.val(b, idx)?, &env.val(b, hi)?));
        let step: StepFn = Arc::new(move |b, env, k| {
            let iv = env.var(idx)?;
            b.letb(&b.read(iv)?, &mut |i| {
                b.seq(&b.incr(iv)?, &body(b, env, i, &mut *k)?)
            })
        });
        self.producer = Producer::Guarded {
            guards: vec![guard],
            step,
        };
    }

    /// Stops the stream, including any inner streams, once `g` is false.
    pub fn add_guard(&mut self, g: ExprFn) {
        self.make_guarded();
        if let Producer::Guarded { guards, .. } = &mut self.producer {
            guards.push(g.clone());
        }
        for t in &mut self.transforms {
            if let Transform::Flat { guards, .. } = t {
                guards.push(g.clone());
            }
        }
    }

    pub fn map_raw(mut self, out: Vec<SemType>, f: MapFn) -> Self {
        self.transforms.push(Transform::Map { f, out });
        self
    }

    /// `f` must invoke its continuation at most once on every path.
    pub fn filter_raw(mut self, f: CpsFn) -> Self {
        self.transforms.push(Transform::Filter { f });
        self
    }

    /// `f` must invoke its continuation exactly once on every path, except
    /// where it also falsifies a guard of this stream.
    pub fn tap_raw(mut self, out: Vec<SemType>, f: CpsFn) -> Self {
        self.transforms.push(Transform::Tap { f, out });
        self
    }

    pub fn flat_map_raw(mut self, out: Vec<SemType>, inner: FlatFn) -> Self {
        self.transforms.push(Transform::Flat {
            inner,
            guards: Vec::new(),
            out,
        });
        self
    }

    /// At most `n` elements. The counter is decremented where elements are
    /// emitted.
    pub fn take_raw(mut self, n: ExprFn) -> Self {
        let c = self.prepend(SemType::Int, InitKind::Var(n));
        self.add_guard(Arc::new(move |b, env| b.gt(&env.val(b, c)?, &b.int(0)?)));
        let out = self.types().to_vec();
        self.tap_raw(
            out,
            Arc::new(move |b, env, x, k| b.seq(&b.decr(env.var(c)?)?, &k(x)?)),
        )
    }

    pub fn drop_raw(mut self, n: ExprFn) -> Self {
        let c = self.prepend(SemType::Int, InitKind::Var(n));
        self.filter_raw(Arc::new(move |b, env, x, k| {
            let cv = env.var(c)?;
            let pos = b.gt(&b.read(cv)?, &b.int(0)?)?;
            b.if_(&pos, &b.decr(cv)?, Some(&k(x)?))
        }))
    }

    pub fn take_while_raw(mut self, p: ExprOver) -> Self {
        let live = self.prepend(SemType::Bool, InitKind::Var(Arc::new(|b, _| b.bool(true))));
        self.add_guard(Arc::new(move |b, env| env.val(b, live)));
        let out = self.types().to_vec();
        self.tap_raw(
            out,
            Arc::new(move |b, env, x, k| {
                let stop = b.write(env.var(live)?, &b.bool(false)?)?;
                b.if_(&p(b, env, x)?, &k(x)?, Some(&stop))
            }),
        )
    }

    pub fn drop_while_raw(mut self, p: ExprOver) -> Self {
        let dropping = self.prepend(SemType::Bool, InitKind::Var(Arc::new(|b, _| b.bool(true))));
        self.filter_raw(Arc::new(move |b, env, x, k| {
            let d = env.var(dropping)?;
            let skip = b.and(&b.read(d)?, &p(b, env, x)?)?;
            let pass = b.seq(&b.write(d, &b.bool(false)?)?, &k(x)?)?;
            b.if_(&skip, &b.nop()?, Some(&pass))
        }))
    }

    /// A running state: `step(state, x)` gives the next state and the
    /// element to emit, both computed from the old state.
    pub fn map_accum_raw(mut self, init: ExprFn, state: SemType, out: Vec<SemType>, step: AccumFn) -> Self {
        let st = self.prepend(state, InitKind::Var(init));
        let arity = out.len();
        self.tap_raw(
            out,
            Arc::new(move |b, env, x, k| {
                let sv = env.var(st)?;
                let (next, ys) = step(b, env, &b.read(sv)?, x)?;
                check_arity("map_accum output", arity, ys.len())?;
                b.letb(&next, &mut |n| {
                    gen::bind_atoms(b, &ys, &mut |ys| b.seq(&b.write(sv, n)?, &k(ys)?))
                })
            }),
        )
    }

    /// Pairs elements positionally; bundles concatenate, left first.
    pub fn zip_raw(self, other: StreamRep) -> Result<StreamRep, CodeError> {
        let owner = merge_owner(self.owner, other.owner)?;
        let mut z = gen::zip(self, other)?;
        z.owner = owner;
        Ok(z)
    }

    /// Generates the whole loop nest, handing each element to `consume`.
    pub fn drive(self, b: &dyn Backend, consume: Emit<'_>) -> Code {
        merge_owner(self.owner, Some(b.id()))?;
        gen::drive(b, self, &Env::default(), consume)
    }

    /// Generates the stream in pulled form: state for it is declared, then
    /// `body` builds code that may run [`Linearized::advance`] repeatedly.
    pub fn linearize(self, b: &dyn Backend, body: &mut dyn FnMut(&Linearized) -> Code) -> Code {
        merge_owner(self.owner, Some(b.id()))?;
        let key = StateKey::fresh();
        gen::bind_pull(b, self, key, &Env::default(), false, &mut |env, _| {
            body(env.pull(key)?)
        })
    }
}

/// An expression over the element bundle.
pub type ExprOver = Arc<dyn Fn(&dyn Backend, &Env, &[CodeVal]) -> Code + Send + Sync>;

pub type AccumFn = Arc<
    dyn Fn(&dyn Backend, &Env, &CodeVal, &[CodeVal]) -> Result<(CodeVal, Vec<CodeVal>), CodeError>
        + Send
        + Sync,
>;
