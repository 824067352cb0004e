//! A backend that builds nothing and only computes types.
//!
//! Stream combinators run user actions through it once, at construction, to
//! learn the element type they produce. It accepts code values from any
//! backend so that actions capturing real parameters can still be probed.

use super::semantics::{arith_type, bool_type, cmp_type, cond_type, expect_array, expect_scalar};
use super::{
    check_signature, expect_type, ArithOp, Backend, BackendId, CmpOp, Code, CodeError, CodeVal, EmitUnit,
    Lit, Param, Scope, SemType, Sym, VarRef,
};

pub(crate) struct TypeProbe;

impl TypeProbe {
    fn val(typ: SemType) -> CodeVal {
        CodeVal::new(BackendId::PROBE, typ, ())
    }

    /// A placeholder of the given type, standing for an unknown element.
    pub(crate) fn placeholder(typ: SemType) -> CodeVal {
        Self::val(typ).with_atomic()
    }
}

impl Backend for TypeProbe {
    fn id(&self) -> BackendId {
        BackendId::PROBE
    }

    fn name(&self) -> String {
        "probe".into()
    }

    fn lit(&self, v: Lit) -> Code {
        Ok(Self::val(v.typ()).with_atomic().with_const(v))
    }

    fn arith(&self, op: ArithOp, a: &CodeVal, b: &CodeVal) -> Code {
        Ok(Self::val(arith_type(op, a, b)?))
    }

    fn cmp(&self, op: CmpOp, a: &CodeVal, b: &CodeVal) -> Code {
        Ok(Self::val(cmp_type(op, a, b)?))
    }

    fn and(&self, a: &CodeVal, b: &CodeVal) -> Code {
        Ok(Self::val(bool_type("&&", &[a, b])?))
    }

    fn or(&self, a: &CodeVal, b: &CodeVal) -> Code {
        Ok(Self::val(bool_type("||", &[a, b])?))
    }

    fn not(&self, a: &CodeVal) -> Code {
        Ok(Self::val(bool_type("!", &[a])?))
    }

    fn cond(&self, c: &CodeVal, a: &CodeVal, b: &CodeVal) -> Code {
        Ok(Self::val(cond_type(c, a, b)?))
    }

    fn new_var(&self, init: &CodeVal, body: Scope<'_, VarRef>) -> Code {
        expect_scalar("new_var", init)?;
        body(&VarRef::new(BackendId::PROBE, init.typ(), Sym::fresh()))
    }

    fn read(&self, v: &VarRef) -> Code {
        Ok(Self::val(v.typ()))
    }

    fn write(&self, v: &VarRef, x: &CodeVal) -> Code {
        expect_type("write", v.typ(), x)?;
        Ok(Self::val(SemType::Unit))
    }

    fn if_(&self, c: &CodeVal, then: &CodeVal, els: Option<&CodeVal>) -> Code {
        expect_type("if", SemType::Bool, c)?;
        expect_type("if", SemType::Unit, then)?;
        if let Some(e) = els {
            expect_type("if", SemType::Unit, e)?;
        }
        Ok(Self::val(SemType::Unit))
    }

    fn while_(&self, guard: &CodeVal, body: &CodeVal) -> Code {
        expect_type("while", SemType::Bool, guard)?;
        expect_type("while", SemType::Unit, body)?;
        Ok(Self::val(SemType::Unit))
    }

    fn for_(&self, lo: &CodeVal, hi: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        expect_type("for", SemType::Int, lo)?;
        expect_type("for", SemType::Int, hi)?;
        let b = body(&Self::placeholder(SemType::Int))?;
        expect_type("for", SemType::Unit, &b)?;
        Ok(Self::val(SemType::Unit))
    }

    fn arr_len(&self, a: &CodeVal) -> Code {
        expect_array("arr_len", a)?;
        Ok(Self::val(SemType::Int))
    }

    fn arr_get(&self, a: &CodeVal, i: &CodeVal) -> Code {
        let elem = expect_array("arr_get", a)?;
        expect_type("arr_get", SemType::Int, i)?;
        Ok(Self::val(elem))
    }

    fn arr_set(&self, a: &CodeVal, i: &CodeVal, x: &CodeVal) -> Code {
        let elem = expect_array("arr_set", a)?;
        expect_type("arr_set", SemType::Int, i)?;
        expect_type("arr_set", elem, x)?;
        Ok(Self::val(SemType::Unit))
    }

    fn seq(&self, a: &CodeVal, b: &CodeVal) -> Code {
        expect_type("seq", SemType::Unit, a)?;
        Ok(Self::val(b.typ()))
    }

    fn letb(&self, x: &CodeVal, body: Scope<'_, CodeVal>) -> Code {
        expect_scalar("letb", x)?;
        body(&Self::placeholder(x.typ()))
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
        let args: Vec<CodeVal> = ps.iter().map(|p| Self::placeholder(p.typ)).collect();
        EmitUnit::new(name, ps, body(&args)?)
    }
}
