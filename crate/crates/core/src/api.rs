//! Declarative stream combinators over scalar elements.
//!
//! ```
//! use fusilli::api::CStream;
//! use fusilli::backend::{Backend, SemType};
//! use fusilli::interp::{eval_unit, Interp, Value};
//!
//! let b = Interp::new();
//! let b: &dyn Backend = &b;
//! let unit = b
//!     .make_fun("ex", &[], &mut |_| {
//!         CStream::iota(&b.int(1)?)?
//!             .map(|b, e| b.mul(e, e))?
//!             .take(&b.int(3)?)?
//!             .sum(b)
//!     })
//!     .unwrap();
//! assert_eq!(eval_unit(&unit, &[]).unwrap(), Value::Int(14));
//! ```

use std::sync::Arc;

use crate::backend::{expect_type, Backend, Code, CodeError, CodeVal, SemType, TypeProbe, VarRef};
use crate::stream::{expr, Once, StreamRep};

pub use crate::stream::{Emit, Env, Linearity, Linearized, StateKey};

/// A unary semantic action.
pub type Action1 = Arc<dyn Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync>;
/// A binary semantic action.
pub type Action2 = Arc<dyn Fn(&dyn Backend, &CodeVal, &CodeVal) -> Code + Send + Sync>;
/// A stateful action: `(state, elem)` to `(next state, output)`.
pub type AccumAction =
    Arc<dyn Fn(&dyn Backend, &CodeVal, &CodeVal) -> Result<(CodeVal, CodeVal), CodeError> + Send + Sync>;
/// Builds the inner stream of a `flat_map` from an outer element.
pub type InnerFn = Arc<dyn Fn(&dyn Backend, &CodeVal) -> Result<CStream, CodeError> + Send + Sync>;

/// A stream of one scalar type. Every operation consumes the stream, so
/// using one twice does not compile:
///
/// ```compile_fail
/// # use fusilli::{api::CStream, interp::Interp, backend::Backend};
/// let b = Interp::new();
/// let b: &dyn Backend = &b;
/// let s = CStream::iota(&b.int(0).unwrap()).unwrap();
/// let a = s.take(&b.int(3).unwrap()).unwrap();
/// let c = s.take(&b.int(4).unwrap()).unwrap();
/// ```
pub struct CStream {
    rep: StreamRep,
    typ: SemType,
}

fn probe1(f: &Action1, x: SemType) -> Result<SemType, CodeError> {
    Ok(f(&TypeProbe, &TypeProbe::placeholder(x))?.typ())
}

fn probe2(f: &Action2, x: SemType, y: SemType) -> Result<SemType, CodeError> {
    Ok(f(&TypeProbe, &TypeProbe::placeholder(x), &TypeProbe::placeholder(y))?.typ())
}

fn scalar(op: &'static str, t: SemType) -> Result<SemType, CodeError> {
    if t.is_scalar() && t != SemType::Unit {
        Ok(t)
    } else {
        Err(CodeError::TypeMismatch {
            op,
            expected: "a scalar element".into(),
            found: t,
        })
    }
}

impl CStream {
    /// Wraps a raw stream of arity one.
    pub fn from_rep(rep: StreamRep) -> Result<Self, CodeError> {
        match rep.types() {
            [t] => Ok(CStream {
                typ: scalar("from_rep", *t)?,
                rep,
            }),
            ts => Err(CodeError::Arity {
                what: "stream bundle",
                expected: 1,
                found: ts.len(),
            }),
        }
    }

    pub fn into_rep(self) -> StreamRep {
        self.rep
    }

    pub fn elem_type(&self) -> SemType {
        self.typ
    }

    pub fn linearity(&self) -> Linearity {
        self.rep.linearity()
    }

    /// `start, start+1, ...` without end.
    pub fn iota(start: &CodeVal) -> Result<Self, CodeError> {
        expect_type("iota", SemType::Int, start)?;
        let key = StateKey::fresh();
        let rep = StreamRep::guarded(
            vec![SemType::Int],
            Vec::new(),
            Arc::new(move |b, env, k| {
                let v = env.var(key)?;
                b.letb(&b.read(v)?, &mut |t| {
                    b.seq(&b.incr(v)?, &k(std::slice::from_ref(t))?)
                })
            }),
        )
        .with_var_at(key, SemType::Int, expr(start.clone()))
        .claim(start)?;
        Self::from_rep(rep)
    }

    /// The elements of an array parameter, in order.
    pub fn of_arr(a: &CodeVal) -> Result<Self, CodeError> {
        let elem = a.typ().elem().ok_or(CodeError::TypeMismatch {
            op: "of_arr",
            expected: "an array".into(),
            found: a.typ(),
        })?;
        let (a1, a2) = (a.clone(), a.clone());
        let rep = StreamRep::counted(
            vec![elem],
            Arc::new(move |b, _| b.sub(&b.arr_len(&a1)?, &b.int(1)?)),
            Arc::new(move |b, _, i, k| b.letb(&b.arr_get(&a2, i)?, &mut |x| k(std::slice::from_ref(x)))),
        )
        .claim(a)?;
        Self::from_rep(rep)
    }

    /// `lo, lo+1, ..., hi-1`.
    pub fn range(lo: &CodeVal, hi: &CodeVal) -> Result<Self, CodeError> {
        expect_type("range", SemType::Int, lo)?;
        expect_type("range", SemType::Int, hi)?;
        let (lo1, hi1, lo2) = (lo.clone(), hi.clone(), lo.clone());
        let from_zero = lo.as_const().and_then(|l| l.as_int()) == Some(0);
        let rep = StreamRep::counted(
            vec![SemType::Int],
            Arc::new(move |b, _| {
                let n = b.sub(&hi1, &lo1)?;
                b.sub(&n, &b.int(1)?)
            }),
            Arc::new(move |b, _, i, k| {
                if from_zero {
                    k(std::slice::from_ref(i))
                } else {
                    b.letb(&b.add(&lo2, i)?, &mut |x| k(std::slice::from_ref(x)))
                }
            }),
        )
        .claim(lo)?
        .claim(hi)?;
        Self::from_rep(rep)
    }

    pub fn map(
        self,
        f: impl Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let f: Action1 = Arc::new(f);
        let out = scalar("map", probe1(&f, self.typ)?)?;
        let rep = self
            .rep
            .map_raw(vec![out], Arc::new(move |b, _, x| Ok(vec![f(b, &x[0])?])));
        Ok(CStream { rep, typ: out })
    }

    pub fn filter(
        self,
        p: impl Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let p: Action1 = Arc::new(p);
        predicate("filter", &p, self.typ)?;
        let rep = self
            .rep
            .filter_raw(Arc::new(move |b, _, x, k| b.if_(&p(b, &x[0])?, &k(x)?, None)));
        Ok(CStream { rep, typ: self.typ })
    }

    /// The first `n` elements.
    pub fn take(self, n: &CodeVal) -> Result<Self, CodeError> {
        expect_type("take", SemType::Int, n)?;
        let rep = self.rep.claim(n)?.take_raw(expr(n.clone()));
        Ok(CStream { rep, typ: self.typ })
    }

    /// All but the first `n` elements.
    pub fn drop(self, n: &CodeVal) -> Result<Self, CodeError> {
        expect_type("drop", SemType::Int, n)?;
        let rep = self.rep.claim(n)?.drop_raw(expr(n.clone()));
        Ok(CStream { rep, typ: self.typ })
    }

    /// The longest prefix whose elements satisfy `p`.
    pub fn take_while(
        self,
        p: impl Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let p: Action1 = Arc::new(p);
        predicate("take_while", &p, self.typ)?;
        let rep = self.rep.take_while_raw(Arc::new(move |b, _, x| p(b, &x[0])));
        Ok(CStream { rep, typ: self.typ })
    }

    /// Everything from the first element that fails `p` on.
    pub fn drop_while(
        self,
        p: impl Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let p: Action1 = Arc::new(p);
        predicate("drop_while", &p, self.typ)?;
        let rep = self.rep.drop_while_raw(Arc::new(move |b, _, x| p(b, &x[0])));
        Ok(CStream { rep, typ: self.typ })
    }

    /// Replaces each element by the stream `g` builds from it.
    pub fn flat_map(
        self,
        g: impl Fn(&dyn Backend, &CodeVal) -> Result<CStream, CodeError> + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let g: InnerFn = Arc::new(g);
        let out = g(&TypeProbe, &TypeProbe::placeholder(self.typ))?.typ;
        let rep = self
            .rep
            .flat_map_raw(vec![out], Arc::new(move |b, _, x| Ok(g(b, &x[0])?.rep)));
        Ok(CStream { rep, typ: out })
    }

    /// Pairs up elements by position and combines them with `f`. The stream
    /// ends with the shorter input.
    pub fn zip_with(
        self,
        other: CStream,
        f: impl Fn(&dyn Backend, &CodeVal, &CodeVal) -> Code + Send + Sync + 'static,
    ) -> Result<Self, CodeError> {
        let f: Action2 = Arc::new(f);
        let out = scalar("zip_with", probe2(&f, self.typ, other.typ)?)?;
        let rep = self
            .rep
            .zip_raw(other.rep)?
            .map_raw(vec![out], Arc::new(move |b, _, x| Ok(vec![f(b, &x[0], &x[1])?])));
        Ok(CStream { rep, typ: out })
    }

    /// Threads a state through the stream: `step(state, e)` gives the next
    /// state and the element to emit.
    pub fn map_accum(
        self,
        init: &CodeVal,
        step: impl Fn(&dyn Backend, &CodeVal, &CodeVal) -> Result<(CodeVal, CodeVal), CodeError>
            + Send
            + Sync
            + 'static,
    ) -> Result<Self, CodeError> {
        let step: AccumAction = Arc::new(step);
        let st = scalar("map_accum", init.typ())?;
        let (next, y) = step(
            &TypeProbe,
            &TypeProbe::placeholder(st),
            &TypeProbe::placeholder(self.typ),
        )?;
        expect_type("map_accum state", st, &next)?;
        let out = scalar("map_accum", y.typ())?;
        let rep = self.rep.claim(init)?.map_accum_raw(
            expr(init.clone()),
            st,
            vec![out],
            Arc::new(move |b, _, s, x| {
                let (next, y) = step(b, s, &x[0])?;
                Ok((next, vec![y]))
            }),
        );
        Ok(CStream { rep, typ: out })
    }

    /// Drains the stream into an accumulator and yields its final value.
    pub fn fold(
        self,
        b: &dyn Backend,
        init: &CodeVal,
        step: impl Fn(&dyn Backend, &CodeVal, &CodeVal) -> Code,
    ) -> Code {
        let rep = Once::new(self.rep);
        b.new_var(init, &mut |acc| {
            let lp = rep
                .take()?
                .drive(b, &mut |x| b.write(acc, &step(b, &b.read(acc)?, &x[0])?))?;
            b.seq(&lp, &b.read(acc)?)
        })
    }

    pub fn sum(self, b: &dyn Backend) -> Code {
        let zero = b.lit(self.typ.default_lit().ok_or(CodeError::TypeMismatch {
            op: "sum",
            expected: "a numeric element".into(),
            found: self.typ,
        })?)?;
        self.fold(b, &zero, |b, acc, e| b.add(acc, e))
    }

    /// Number of elements.
    pub fn count(self, b: &dyn Backend) -> Code {
        self.fold(b, &b.int(0)?, |b, acc, _| b.add(acc, &b.int(1)?))
    }

    /// Drains the stream, running `consume` on each element.
    pub fn iter(self, b: &dyn Backend, consume: impl Fn(&dyn Backend, &CodeVal) -> Code) -> Code {
        self.rep.drive(b, &mut |x| consume(b, &x[0]))
    }

    /// Stores elements into `out` until it is full, then yields how many
    /// were stored.
    pub fn collect_into(self, b: &dyn Backend, out: &CodeVal) -> Code {
        let elem = out.typ().elem();
        if elem != Some(self.typ) {
            return Err(CodeError::TypeMismatch {
                op: "collect_into",
                expected: format!("{} array", self.typ),
                found: out.typ(),
            });
        }
        let s = Once::new(self.take(&b.arr_len(out)?)?);
        b.new_var(&b.int(0)?, &mut |n: &VarRef| {
            let lp = s
                .take()?
                .iter(b, |b, x| b.seq(&b.arr_set(out, &b.read(n)?, x)?, &b.incr(n)?))?;
            b.seq(&lp, &b.read(n)?)
        })
    }
}

fn predicate(op: &'static str, p: &Action1, t: SemType) -> Result<(), CodeError> {
    match probe1(p, t)? {
        SemType::Bool => Ok(()),
        found => Err(CodeError::TypeMismatch {
            op,
            expected: "a bool predicate".into(),
            found,
        }),
    }
}
