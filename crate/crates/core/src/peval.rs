//! Online partial evaluation over any backend.
//!
//! [`Peval`] forwards every construction to the wrapped backend after
//! folding constants and dropping trivial redexes. Knowledge flows only
//! through pure operations; a read of a mutable cell is never known.

use crate::backend::{
    eval_arith, eval_cmp, expect_owner, expect_var_owner, ArithOp, Backend, BackendId, CmpOp, Code,
    CodeError, CodeVal, EmitUnit, Lit, Scope, SemType, VarRef,
};

struct PVal {
    residual: CodeVal,
    /// For `not(x)`: the operand, so that `not(not x)` folds to `x`.
    negated: Option<CodeVal>,
}

/// A backend that partially evaluates, then delegates to `B`.
pub struct Peval<B> {
    id: BackendId,
    inner: B,
}

/// Wraps a backend in a partial evaluator.
pub fn wrap<B: Backend>(inner: B) -> Peval<B> {
    Peval {
        id: BackendId::fresh(),
        inner,
    }
}

impl<B: Backend> Peval<B> {
    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn lift(&self, r: CodeVal, known: Option<Lit>) -> CodeVal {
        let mut v = CodeVal::new(
            self.id,
            r.typ(),
            PVal {
                residual: r.clone(),
                negated: None,
            },
        );
        if !r.is_pure() {
            v = v.with_effects();
        }
        if r.is_atomic() {
            v = v.with_atomic();
        }
        match known {
            Some(k) => v.with_const(k),
            None => v,
        }
    }

    fn res<'a>(&self, v: &'a CodeVal) -> Result<&'a CodeVal, CodeError> {
        expect_owner(self.id, v)?;
        v.node::<PVal>()
            .map(|p| &p.residual)
            .ok_or_else(|| CodeError::Internal("foreign payload in partial evaluator".into()))
    }

    fn var_in(&self, v: &VarRef) -> Result<VarRef, CodeError> {
        expect_var_owner(self.id, v)?;
        Ok(v.reowned(self.inner.id()))
    }

    fn known(&self, l: Lit) -> Code {
        Ok(self.lift(self.inner.lit(l)?, Some(l)))
    }

    fn pass(&self, r: Code) -> Code {
        Ok(self.lift(r?, None))
    }

    fn is_nop(v: &CodeVal) -> bool {
        v.as_const() == Some(Lit::Unit)
    }
}

impl<B: Backend> Backend for Peval<B> {
    fn id(&self) -> BackendId {
        self.id
    }

    fn name(&self) -> String {
        format!("peval({})", self.inner.name())
    }

    fn lit(&self, v: Lit) -> Code {
        self.known(v)
    }

    fn arith(&self, op: ArithOp, a: &CodeVal, b: &CodeVal) -> Code {
        let (ra, rb) = (self.res(a)?, self.res(b)?);
        // Type-check through the inner backend before any rewriting.
        let built = self.inner.arith(op, ra, rb)?;
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Ok(r) = eval_arith(op, x, y) {
                return self.known(r);
            }
        }
        if a.typ() == SemType::Int {
            let is = |v: &CodeVal, n: i32| v.as_const() == Some(Lit::Int(n));
            match op {
                ArithOp::Add if is(b, 0) => return Ok(a.clone()),
                ArithOp::Add if is(a, 0) => return Ok(b.clone()),
                ArithOp::Sub if is(b, 0) => return Ok(a.clone()),
                ArithOp::Mul | ArithOp::Div if is(b, 1) => return Ok(a.clone()),
                ArithOp::Mul if is(a, 1) => return Ok(b.clone()),
                ArithOp::Mul if is(b, 0) && a.is_pure() => return self.known(Lit::Int(0)),
                ArithOp::Mul if is(a, 0) && b.is_pure() => return self.known(Lit::Int(0)),
                _ => {}
            }
        }
        Ok(self.lift(built, None))
    }

    fn cmp(&self, op: CmpOp, a: &CodeVal, b: &CodeVal) -> Code {
        let (ra, rb) = (self.res(a)?, self.res(b)?);
        let built = self.inner.cmp(op, ra, rb)?;
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return self.known(Lit::Bool(eval_cmp(op, x, y)));
        }
        Ok(self.lift(built, None))
    }

    fn and(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let built = self.inner.and(self.res(a)?, self.res(b)?)?;
        match (a.as_const(), b.as_const()) {
            (Some(Lit::Bool(true)), _) => Ok(b.clone()),
            (Some(Lit::Bool(false)), _) => self.known(Lit::Bool(false)),
            (_, Some(Lit::Bool(true))) => Ok(a.clone()),
            (_, Some(Lit::Bool(false))) if a.is_pure() => self.known(Lit::Bool(false)),
            _ => Ok(self.lift(built, None)),
        }
    }

    fn or(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let built = self.inner.or(self.res(a)?, self.res(b)?)?;
        match (a.as_const(), b.as_const()) {
            (Some(Lit::Bool(false)), _) => Ok(b.clone()),
            (Some(Lit::Bool(true)), _) => self.known(Lit::Bool(true)),
            (_, Some(Lit::Bool(false))) => Ok(a.clone()),
            (_, Some(Lit::Bool(true))) if a.is_pure() => self.known(Lit::Bool(true)),
            _ => Ok(self.lift(built, None)),
        }
    }

    fn not(&self, a: &CodeVal) -> Code {
        let built = self.inner.not(self.res(a)?)?;
        if let Some(Lit::Bool(x)) = a.as_const() {
            return self.known(Lit::Bool(!x));
        }
        if let Some(inner) = a.node::<PVal>().and_then(|p| p.negated.clone()) {
            return Ok(inner);
        }
        let mut v = self.lift(built, None);
        let payload = PVal {
            residual: self.res(&v)?.clone(),
            negated: Some(a.clone()),
        };
        let pure = v.is_pure();
        v = CodeVal::new(self.id, SemType::Bool, payload);
        Ok(if pure { v } else { v.with_effects() })
    }

    fn cond(&self, c: &CodeVal, a: &CodeVal, b: &CodeVal) -> Code {
        let built = self.inner.cond(self.res(c)?, self.res(a)?, self.res(b)?)?;
        match c.as_const() {
            Some(Lit::Bool(true)) => Ok(a.clone()),
            Some(Lit::Bool(false)) => Ok(b.clone()),
            _ => Ok(self.lift(built, None)),
        }
    }

    fn new_var(&self, init: &CodeVal, body: Scope<'_, VarRef>) -> Code {
        let ri = self.res(init)?;
        let id = self.id;
        let r = self.inner.new_var(ri, &mut |v| {
            let b = body(&v.reowned(id))?;
            self.res(&b).cloned()
        });
        self.pass(r)
    }

    fn read(&self, v: &VarRef) -> Code {
        self.pass(self.inner.read(&self.var_in(v)?))
    }

    fn write(&self, v: &VarRef, x: &CodeVal) -> Code {
        self.pass(self.inner.write(&self.var_in(v)?, self.res(x)?))
    }

    fn if_(&self, c: &CodeVal, then: &CodeVal, els: Option<&CodeVal>) -> Code {
        let re = els.map(|e| self.res(e)).transpose()?;
        let built = self.inner.if_(self.res(c)?, self.res(then)?, re)?;
        match c.as_const() {
            Some(Lit::Bool(true)) => Ok(then.clone()),
            Some(Lit::Bool(false)) => match els {
                Some(e) => Ok(e.clone()),
                None => self.known(Lit::Unit),
            },
            _ if Self::is_nop(then) && els.is_none_or(Self::is_nop) && c.is_pure() => self.known(Lit::Unit),
            _ => Ok(self.lift(built, None)),
        }
    }

    fn while_(&self, guard: &CodeVal, body: &CodeVal) -> Code {
        let built = self.inner.while_(self.res(guard)?, self.res(body)?)?;
        match guard.as_const() {
            Some(Lit::Bool(false)) => self.known(Lit::Unit),
            _ => Ok(self.lift(built, None)),
        }
    }

    fn for_(&self, lo: &CodeVal, hi: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        let (rl, rh) = (self.res(lo)?, self.res(hi)?);
        let r = self.inner.for_(rl, rh, &mut |i| {
            let b = body(&self.lift(i.clone(), None))?;
            self.res(&b).cloned()
        })?;
        if let (Some(Lit::Int(l)), Some(Lit::Int(h))) = (lo.as_const(), hi.as_const()) {
            if h < l {
                return self.known(Lit::Unit);
            }
        }
        Ok(self.lift(r, None))
    }

    fn arr_len(&self, a: &CodeVal) -> Code {
        self.pass(self.inner.arr_len(self.res(a)?))
    }

    fn arr_get(&self, a: &CodeVal, i: &CodeVal) -> Code {
        self.pass(self.inner.arr_get(self.res(a)?, self.res(i)?))
    }

    fn arr_set(&self, a: &CodeVal, i: &CodeVal, x: &CodeVal) -> Code {
        self.pass(self.inner.arr_set(self.res(a)?, self.res(i)?, self.res(x)?))
    }

    fn seq(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let built = self.inner.seq(self.res(a)?, self.res(b)?)?;
        if Self::is_nop(a) {
            return Ok(b.clone());
        }
        if Self::is_nop(b) {
            return Ok(a.clone());
        }
        Ok(self.lift(built, None))
    }

    fn letb(&self, x: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        if x.as_const().is_some() || x.is_atomic() {
            return body(x);
        }
        let rx = self.res(x)?;
        let r = self.inner.letb(rx, &mut |t| {
            let b = body(&self.lift(t.clone(), None))?;
            self.res(&b).cloned()
        });
        self.pass(r)
    }

    fn make_fun(
        &self,
        name: &str,
        params: &[(&str, SemType)],
        body: &mut dyn FnMut(&[CodeVal]) -> Code,
    ) -> Result<EmitUnit, CodeError> {
        self.inner.make_fun(name, params, &mut |args| {
            let lifted: Vec<CodeVal> = args.iter().map(|a| self.lift(a.clone(), None)).collect();
            let b = body(&lifted)?;
            self.res(&b).cloned()
        })
    }
}
