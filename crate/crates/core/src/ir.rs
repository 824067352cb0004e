//! The code tree built by the tree backends.

use std::sync::Arc;

use crate::backend::semantics::{arith_type, bool_type, cmp_type, cond_type, expect_array, expect_scalar};
use crate::backend::{
    check_signature, expect_owner, expect_type, expect_var_owner, ArithOp, Backend, BackendId, CmpOp, Code,
    CodeError, CodeVal, EmitUnit, Lit, Param, Scope, SemType, Sym, VarRef,
};

pub(crate) type N = Arc<Node>;

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) typ: SemType,
    pub(crate) kind: Kind,
}

#[derive(Debug)]
pub(crate) enum Kind {
    Lit(Lit),
    /// Parameter, `letb` name or loop index.
    Local(Sym),
    Read(Sym),
    Arith(ArithOp, N, N),
    Cmp(CmpOp, N, N),
    And(N, N),
    Or(N, N),
    Not(N),
    Cond(N, N, N),
    NewVar {
        sym: Sym,
        init: N,
        body: N,
    },
    Write(Sym, N),
    Let {
        sym: Sym,
        init: N,
        body: N,
    },
    If(N, N, Option<N>),
    While(N, N),
    For {
        sym: Sym,
        lo: N,
        hi: N,
        body: N,
    },
    ArrLen(N),
    ArrGet(N, N),
    ArrSet(Sym, N, N),
    Seq(N, N),
}

/// Builds checked code trees. Shared by the evaluating and the C backends.
pub(crate) struct TreeBackend {
    id: BackendId,
    name: &'static str,
}

impl TreeBackend {
    pub(crate) fn new(name: &'static str) -> Self {
        TreeBackend {
            id: BackendId::fresh(),
            name,
        }
    }

    fn node<'a>(&self, v: &'a CodeVal) -> Result<&'a N, CodeError> {
        expect_owner(self.id, v)?;
        v.node::<N>()
            .ok_or_else(|| CodeError::Internal("foreign payload in interpreter value".into()))
    }

    fn mk(&self, typ: SemType, kind: Kind) -> CodeVal {
        CodeVal::new(self.id, typ, Arc::new(Node { typ, kind }))
    }
}

fn purity(v: CodeVal, pure: bool) -> CodeVal {
    if pure {
        v
    } else {
        v.with_effects()
    }
}

impl Backend for TreeBackend {
    fn id(&self) -> BackendId {
        self.id
    }

    fn name(&self) -> String {
        self.name.into()
    }

    fn lit(&self, v: Lit) -> Code {
        Ok(self.mk(v.typ(), Kind::Lit(v)).with_atomic().with_const(v))
    }

    fn arith(&self, op: ArithOp, a: &CodeVal, b: &CodeVal) -> Code {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let t = arith_type(op, a, b)?;
        let v = self.mk(t, Kind::Arith(op, na.clone(), nb.clone()));
        Ok(purity(v, a.is_pure() && b.is_pure()))
    }

    fn cmp(&self, op: CmpOp, a: &CodeVal, b: &CodeVal) -> Code {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let t = cmp_type(op, a, b)?;
        let v = self.mk(t, Kind::Cmp(op, na.clone(), nb.clone()));
        Ok(purity(v, a.is_pure() && b.is_pure()))
    }

    fn and(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let t = bool_type("&&", &[a, b])?;
        Ok(purity(
            self.mk(t, Kind::And(na.clone(), nb.clone())),
            a.is_pure() && b.is_pure(),
        ))
    }

    fn or(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let t = bool_type("||", &[a, b])?;
        Ok(purity(
            self.mk(t, Kind::Or(na.clone(), nb.clone())),
            a.is_pure() && b.is_pure(),
        ))
    }

    fn not(&self, a: &CodeVal) -> Code {
        let na = self.node(a)?;
        let t = bool_type("!", &[a])?;
        Ok(purity(self.mk(t, Kind::Not(na.clone())), a.is_pure()))
    }

    fn cond(&self, c: &CodeVal, a: &CodeVal, b: &CodeVal) -> Code {
        let (nc, na, nb) = (self.node(c)?, self.node(a)?, self.node(b)?);
        let t = cond_type(c, a, b)?;
        let v = self.mk(t, Kind::Cond(nc.clone(), na.clone(), nb.clone()));
        Ok(purity(v, c.is_pure() && a.is_pure() && b.is_pure()))
    }

    fn new_var(&self, init: &CodeVal, body: Scope<'_, VarRef>) -> Code {
        let ni = self.node(init)?.clone();
        expect_scalar("new_var", init)?;
        let var = VarRef::new(self.id, init.typ(), Sym::fresh());
        let b = body(&var)?;
        let nb = self.node(&b)?.clone();
        Ok(self
            .mk(
                b.typ(),
                Kind::NewVar {
                    sym: var.sym(),
                    init: ni,
                    body: nb,
                },
            )
            .with_effects())
    }

    fn read(&self, v: &VarRef) -> Code {
        expect_var_owner(self.id, v)?;
        Ok(self.mk(v.typ(), Kind::Read(v.sym())))
    }

    fn write(&self, v: &VarRef, x: &CodeVal) -> Code {
        expect_var_owner(self.id, v)?;
        let nx = self.node(x)?;
        expect_type("write", v.typ(), x)?;
        Ok(self
            .mk(SemType::Unit, Kind::Write(v.sym(), nx.clone()))
            .with_effects())
    }

    fn if_(&self, c: &CodeVal, then: &CodeVal, els: Option<&CodeVal>) -> Code {
        let (nc, nt) = (self.node(c)?, self.node(then)?);
        let ne = els.map(|e| self.node(e)).transpose()?;
        expect_type("if", SemType::Bool, c)?;
        expect_type("if", SemType::Unit, then)?;
        if let Some(e) = els {
            expect_type("if", SemType::Unit, e)?;
        }
        Ok(self
            .mk(SemType::Unit, Kind::If(nc.clone(), nt.clone(), ne.cloned()))
            .with_effects())
    }

    fn while_(&self, guard: &CodeVal, body: &CodeVal) -> Code {
        let (ng, nb) = (self.node(guard)?, self.node(body)?);
        expect_type("while", SemType::Bool, guard)?;
        expect_type("while", SemType::Unit, body)?;
        Ok(self
            .mk(SemType::Unit, Kind::While(ng.clone(), nb.clone()))
            .with_effects())
    }

    fn for_(&self, lo: &CodeVal, hi: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        let (nl, nh) = (self.node(lo)?.clone(), self.node(hi)?.clone());
        expect_type("for", SemType::Int, lo)?;
        expect_type("for", SemType::Int, hi)?;
        let sym = Sym::fresh();
        let idx = self.mk(SemType::Int, Kind::Local(sym)).with_atomic();
        let b = body(&idx)?;
        let nb = self.node(&b)?.clone();
        expect_type("for", SemType::Unit, &b)?;
        Ok(self
            .mk(
                SemType::Unit,
                Kind::For {
                    sym,
                    lo: nl,
                    hi: nh,
                    body: nb,
                },
            )
            .with_effects())
    }

    fn arr_len(&self, a: &CodeVal) -> Code {
        let na = self.node(a)?;
        expect_array("arr_len", a)?;
        Ok(self.mk(SemType::Int, Kind::ArrLen(na.clone())))
    }

    fn arr_get(&self, a: &CodeVal, i: &CodeVal) -> Code {
        let (na, ni) = (self.node(a)?, self.node(i)?);
        let elem = expect_array("arr_get", a)?;
        expect_type("arr_get", SemType::Int, i)?;
        Ok(purity(
            self.mk(elem, Kind::ArrGet(na.clone(), ni.clone())),
            i.is_pure(),
        ))
    }

    fn arr_set(&self, a: &CodeVal, i: &CodeVal, x: &CodeVal) -> Code {
        let (na, ni, nx) = (self.node(a)?, self.node(i)?, self.node(x)?);
        let elem = expect_array("arr_set", a)?;
        expect_type("arr_set", SemType::Int, i)?;
        expect_type("arr_set", elem, x)?;
        let Kind::Local(sym) = na.kind else {
            return Err(CodeError::Unsupported(
                "arr_set target must be an array parameter".into(),
            ));
        };
        Ok(self
            .mk(SemType::Unit, Kind::ArrSet(sym, ni.clone(), nx.clone()))
            .with_effects())
    }

    fn seq(&self, a: &CodeVal, b: &CodeVal) -> Code {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        expect_type("seq", SemType::Unit, a)?;
        let v = self.mk(b.typ(), Kind::Seq(na.clone(), nb.clone()));
        Ok(purity(v, a.is_pure() && b.is_pure()))
    }

    fn letb(&self, x: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        let nx = self.node(x)?.clone();
        expect_scalar("letb", x)?;
        let sym = Sym::fresh();
        let local = self.mk(x.typ(), Kind::Local(sym)).with_atomic();
        let b = body(&local)?;
        let nb = self.node(&b)?.clone();
        let pure = x.is_pure() && b.is_pure();
        Ok(purity(
            self.mk(
                b.typ(),
                Kind::Let {
                    sym,
                    init: nx,
                    body: nb,
                },
            ),
            pure,
        ))
    }

    fn make_fun(
        &self,
        name: &str,
        params: &[(&str, SemType)],
        body: &mut dyn FnMut(&[CodeVal]) -> Code,
    ) -> Result<EmitUnit, CodeError> {
        check_signature(name, params.iter().copied())?;
        let ps: Vec<Param> = params
            .iter()
            .map(|(n, t)| Param {
                name: n.to_string(),
                typ: *t,
                sym: Sym::fresh(),
            })
            .collect();
        let args: Vec<CodeVal> = ps
            .iter()
            .map(|p| self.mk(p.typ, Kind::Local(p.sym)).with_atomic())
            .collect();
        let b = body(&args)?;
        let nb = self.node(&b)?;
        let mut scope: Vec<(Sym, bool)> = ps.iter().map(|p| (p.sym, false)).collect();
        validate(nb, &mut scope, name)?;
        EmitUnit::new(name, ps, b)
    }
}

/// Full-tree revalidation: every node's recorded type agrees with its
/// operands and every symbol is bound where it is used.
pub(crate) fn validate(n: &Node, scope: &mut Vec<(Sym, bool)>, unit: &str) -> Result<(), CodeError> {
    let unbound = |sym: Sym| CodeError::Unbound {
        unit: unit.to_string(),
        sym,
    };
    let bad = |what: &str| CodeError::Internal(format!("ill-typed {what} node in `{unit}`"));
    let is_var = |scope: &Vec<(Sym, bool)>, s: Sym| scope.iter().rev().find(|(x, _)| *x == s).map(|p| p.1);
    match &n.kind {
        Kind::Lit(l) => {
            if l.typ() != n.typ {
                return Err(bad("literal"));
            }
        }
        Kind::Local(s) => {
            if is_var(scope, *s) != Some(false) {
                return Err(unbound(*s));
            }
        }
        Kind::Read(s) => {
            if is_var(scope, *s) != Some(true) {
                return Err(unbound(*s));
            }
        }
        Kind::Arith(op, a, b) => {
            validate(a, scope, unit)?;
            validate(b, scope, unit)?;
            let ok = a.typ == b.typ
                && a.typ == n.typ
                && n.typ.is_numeric()
                && (*op != ArithOp::Mod || n.typ == SemType::Int);
            if !ok {
                return Err(bad("arith"));
            }
        }
        Kind::Cmp(_, a, b) => {
            validate(a, scope, unit)?;
            validate(b, scope, unit)?;
            if a.typ != b.typ || !a.typ.is_numeric() || n.typ != SemType::Bool {
                return Err(bad("cmp"));
            }
        }
        Kind::And(a, b) | Kind::Or(a, b) => {
            validate(a, scope, unit)?;
            validate(b, scope, unit)?;
            if [a.typ, b.typ, n.typ].iter().any(|t| *t != SemType::Bool) {
                return Err(bad("logic"));
            }
        }
        Kind::Not(a) => {
            validate(a, scope, unit)?;
            if a.typ != SemType::Bool || n.typ != SemType::Bool {
                return Err(bad("not"));
            }
        }
        Kind::Cond(c, a, b) => {
            validate(c, scope, unit)?;
            validate(a, scope, unit)?;
            validate(b, scope, unit)?;
            if c.typ != SemType::Bool || a.typ != b.typ || a.typ != n.typ {
                return Err(bad("cond"));
            }
        }
        Kind::NewVar { sym, init, body } | Kind::Let { sym, init, body } => {
            let mutable = matches!(n.kind, Kind::NewVar { .. });
            validate(init, scope, unit)?;
            if !init.typ.is_scalar() || body.typ != n.typ {
                return Err(bad("binding"));
            }
            scope.push((*sym, mutable));
            let r = validate(body, scope, unit);
            scope.pop();
            r?;
        }
        Kind::Write(s, x) => {
            validate(x, scope, unit)?;
            if is_var(scope, *s) != Some(true) {
                return Err(unbound(*s));
            }
            if n.typ != SemType::Unit {
                return Err(bad("write"));
            }
        }
        Kind::If(c, t, e) => {
            validate(c, scope, unit)?;
            validate(t, scope, unit)?;
            if let Some(e) = e {
                validate(e, scope, unit)?;
                if e.typ != SemType::Unit {
                    return Err(bad("if"));
                }
            }
            if c.typ != SemType::Bool || t.typ != SemType::Unit {
                return Err(bad("if"));
            }
        }
        Kind::While(g, b) => {
            validate(g, scope, unit)?;
            validate(b, scope, unit)?;
            if g.typ != SemType::Bool || b.typ != SemType::Unit {
                return Err(bad("while"));
            }
        }
        Kind::For { sym, lo, hi, body } => {
            validate(lo, scope, unit)?;
            validate(hi, scope, unit)?;
            scope.push((*sym, false));
            let r = validate(body, scope, unit);
            scope.pop();
            r?;
            if lo.typ != SemType::Int || hi.typ != SemType::Int || body.typ != SemType::Unit {
                return Err(bad("for"));
            }
        }
        Kind::ArrLen(a) => {
            validate(a, scope, unit)?;
            if a.typ.elem().is_none() || n.typ != SemType::Int {
                return Err(bad("arr_len"));
            }
        }
        Kind::ArrGet(a, i) => {
            validate(a, scope, unit)?;
            validate(i, scope, unit)?;
            if a.typ.elem() != Some(n.typ) || i.typ != SemType::Int {
                return Err(bad("arr_get"));
            }
        }
        Kind::ArrSet(s, i, x) => {
            validate(i, scope, unit)?;
            validate(x, scope, unit)?;
            if is_var(scope, *s) != Some(false) {
                return Err(unbound(*s));
            }
            if i.typ != SemType::Int || !x.typ.is_scalar() {
                return Err(bad("arr_set"));
            }
        }
        Kind::Seq(a, b) => {
            validate(a, scope, unit)?;
            validate(b, scope, unit)?;
            if a.typ != SemType::Unit || b.typ != n.typ {
                return Err(bad("seq"));
            }
        }
    }
    Ok(())
}

/// Revalidates a finished unit built by a tree backend.
pub(crate) fn validate_unit(u: &EmitUnit) -> Result<&N, CodeError> {
    let root = u
        .body()
        .node::<N>()
        .ok_or_else(|| CodeError::Internal(format!("unit `{}` is not a code tree", u.name())))?;
    let mut scope: Vec<(Sym, bool)> = u.params().iter().map(|p| (p.sym, false)).collect();
    validate(root, &mut scope, u.name())?;
    Ok(root)
}

/// Implements [`Backend`] for a newtype over [`TreeBackend`].
macro_rules! delegate_backend {
    ($t:ty) => {
        impl $crate::backend::Backend for $t {
            fn id(&self) -> $crate::backend::BackendId {
                self.0.id()
            }
            fn name(&self) -> String {
                self.0.name()
            }
            fn lit(&self, v: $crate::backend::Lit) -> $crate::backend::Code {
                self.0.lit(v)
            }
            fn arith(
                &self,
                op: $crate::backend::ArithOp,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.arith(op, a, b)
            }
            fn cmp(
                &self,
                op: $crate::backend::CmpOp,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.cmp(op, a, b)
            }
            fn and(
                &self,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.and(a, b)
            }
            fn or(
                &self,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.or(a, b)
            }
            fn not(&self, a: &$crate::backend::CodeVal) -> $crate::backend::Code {
                self.0.not(a)
            }
            fn cond(
                &self,
                c: &$crate::backend::CodeVal,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.cond(c, a, b)
            }
            fn new_var(
                &self,
                init: &$crate::backend::CodeVal,
                body: $crate::backend::Scope<'_, $crate::backend::VarRef>,
            ) -> $crate::backend::Code {
                self.0.new_var(init, body)
            }
            fn read(&self, v: &$crate::backend::VarRef) -> $crate::backend::Code {
                self.0.read(v)
            }
            fn write(
                &self,
                v: &$crate::backend::VarRef,
                x: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.write(v, x)
            }
            fn if_(
                &self,
                c: &$crate::backend::CodeVal,
                then: &$crate::backend::CodeVal,
                els: Option<&$crate::backend::CodeVal>,
            ) -> $crate::backend::Code {
                self.0.if_(c, then, els)
            }
            fn while_(
                &self,
                guard: &$crate::backend::CodeVal,
                body: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.while_(guard, body)
            }
            fn for_(
                &self,
                lo: &$crate::backend::CodeVal,
                hi: &$crate::backend::CodeVal,
                body: $crate::backend::Scope<'_, $crate::backend::CodeVal>,
            ) -> $crate::backend::Code {
                self.0.for_(lo, hi, body)
            }
            fn arr_len(&self, a: &$crate::backend::CodeVal) -> $crate::backend::Code {
                self.0.arr_len(a)
            }
            fn arr_get(
                &self,
                a: &$crate::backend::CodeVal,
                i: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.arr_get(a, i)
            }
            fn arr_set(
                &self,
                a: &$crate::backend::CodeVal,
                i: &$crate::backend::CodeVal,
                x: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.arr_set(a, i, x)
            }
            fn seq(
                &self,
                a: &$crate::backend::CodeVal,
                b: &$crate::backend::CodeVal,
            ) -> $crate::backend::Code {
                self.0.seq(a, b)
            }
            fn letb(
                &self,
                x: &$crate::backend::CodeVal,
                body: $crate::backend::Scope<'_, $crate::backend::CodeVal>,
            ) -> $crate::backend::Code {
                self.0.letb(x, body)
            }
            fn make_fun(
                &self,
                name: &str,
                params: &[(&str, $crate::backend::SemType)],
                body: &mut dyn FnMut(&[$crate::backend::CodeVal]) -> $crate::backend::Code,
            ) -> Result<$crate::backend::EmitUnit, $crate::backend::CodeError> {
                self.0.make_fun(name, params, body)
            }
        }
    };
}
pub(crate) use delegate_backend;
