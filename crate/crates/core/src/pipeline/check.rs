use super::{
    BinOp, Chain, DiagKind, Diagnostic, Expr, ExprKind, Op, PipelineDesc, Pos, Sink, Source, UnOp, RESERVED,
};
use crate::backend::{check_signature, SemType};

/// A description that passed [`check`], with its result type.
#[derive(Clone, Debug)]
pub struct Checked {
    pub desc: PipelineDesc,
    /// Element type of the stream reaching the sink.
    pub elem: SemType,
    pub ret: SemType,
}

type CResult<T> = Result<T, Diagnostic>;

fn type_err(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(pos, DiagKind::Type, msg)
}

/// Names visible to an action, innermost last.
#[derive(Clone, Default)]
struct Scope(Vec<(String, SemType)>);

impl Scope {
    fn with(&self, name: &str, t: SemType) -> Scope {
        let mut s = self.clone();
        s.0.push((name.to_string(), t));
        s
    }

    fn get(&self, name: &str) -> Option<SemType> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, t)| *t)
    }
}

fn expr_type(e: &Expr, sc: &Scope) -> CResult<SemType> {
    match &e.kind {
        ExprKind::Int(_) => Ok(SemType::Int),
        ExprKind::Float(_) => Ok(SemType::Float),
        ExprKind::Bool(_) => Ok(SemType::Bool),
        ExprKind::Var(n) => match sc.get(n) {
            Some(SemType::Arr(_)) => Err(type_err(
                e.pos,
                format!("array `{n}` can only be streamed with of_arr"),
            )),
            Some(t) => Ok(t),
            None => Err(Diagnostic::new(
                e.pos,
                DiagKind::UnknownName(n.clone()),
                format!("`{n}` is not defined here"),
            )),
        },
        ExprKind::Unary(UnOp::Not, a) => {
            want(a, sc, SemType::Bool, "operand of `!`")?;
            Ok(SemType::Bool)
        }
        ExprKind::Unary(UnOp::Neg, a) => {
            let t = expr_type(a, sc)?;
            if t.is_numeric() {
                Ok(t)
            } else {
                Err(type_err(a.pos, format!("cannot negate a {t}")))
            }
        }
        ExprKind::Binary(op, a, b) => {
            let sym = op.symbol();
            if matches!(op, BinOp::And | BinOp::Or) {
                want(a, sc, SemType::Bool, &format!("operand of `{sym}`"))?;
                want(b, sc, SemType::Bool, &format!("operand of `{sym}`"))?;
                return Ok(SemType::Bool);
            }
            let ta = expr_type(a, sc)?;
            let tb = expr_type(b, sc)?;
            if !ta.is_numeric() {
                return Err(type_err(a.pos, format!("`{sym}` needs numbers, found {ta}")));
            }
            if ta != tb {
                return Err(type_err(
                    e.pos,
                    format!("operands of `{sym}` differ: {ta} and {tb}"),
                ));
            }
            match op {
                BinOp::Rem if ta != SemType::Int => {
                    Err(type_err(e.pos, format!("`%` needs int operands, found {ta}")))
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => Ok(ta),
                _ => Ok(SemType::Bool),
            }
        }
        ExprKind::Cond(c, a, b) => {
            want(c, sc, SemType::Bool, "condition of `?:`")?;
            let ta = expr_type(a, sc)?;
            let tb = expr_type(b, sc)?;
            if ta == tb {
                Ok(ta)
            } else {
                Err(type_err(b.pos, format!("branches of `?:` differ: {ta} and {tb}")))
            }
        }
    }
}

fn want(e: &Expr, sc: &Scope, t: SemType, what: &str) -> CResult<()> {
    let found = expr_type(e, sc)?;
    if found == t {
        Ok(())
    } else {
        Err(type_err(e.pos, format!("{what} must be {t}, found {found}")))
    }
}

fn source_type(src: &Source, pos: Pos, sc: &Scope) -> CResult<SemType> {
    match src {
        Source::Iota(e) => {
            want(e, sc, SemType::Int, "start of iota")?;
            Ok(SemType::Int)
        }
        Source::Range(lo, hi) => {
            want(lo, sc, SemType::Int, "start of range")?;
            want(hi, sc, SemType::Int, "end of range")?;
            Ok(SemType::Int)
        }
        Source::OfArr(a) => match sc.get(a) {
            Some(SemType::Arr(el)) => Ok(el.sem()),
            Some(t) => Err(type_err(
                pos,
                format!("of_arr needs an array parameter, `{a}` is {t}"),
            )),
            None => Err(Diagnostic::new(
                pos,
                DiagKind::UnknownName(a.clone()),
                format!("`{a}` is not a parameter"),
            )),
        },
        Source::ZipWith { f, left, right } => {
            let tx = chain_type(left, sc)?;
            let ty = chain_type(right, sc)?;
            element(f, &sc.with("x", tx).with("y", ty), "zip_with function")
        }
    }
}

/// A scalar-valued action.
fn element(e: &Expr, sc: &Scope, what: &str) -> CResult<SemType> {
    let t = expr_type(e, sc)?;
    if t.is_scalar() {
        Ok(t)
    } else {
        Err(type_err(e.pos, format!("{what} must give a scalar, found {t}")))
    }
}

fn chain_type(c: &Chain, sc: &Scope) -> CResult<SemType> {
    let mut t = source_type(&c.source, c.pos, sc)?;
    for step in &c.ops {
        let with_e = sc.with("e", t);
        t = match &step.op {
            Op::Map(f) => element(f, &with_e, "map function")?,
            Op::Filter(p) | Op::TakeWhile(p) | Op::DropWhile(p) => {
                want(
                    p,
                    &with_e,
                    SemType::Bool,
                    &format!("{} predicate", step.op.name()),
                )?;
                t
            }
            Op::Take(n) | Op::Drop(n) => {
                want(n, sc, SemType::Int, &format!("count of {}", step.op.name()))?;
                t
            }
            Op::FlatMap { var, body } => {
                if RESERVED.contains(&var.as_str()) {
                    return Err(type_err(step.pos, format!("`{var}` is reserved")));
                }
                if sc.get(var).is_some() {
                    return Err(Diagnostic::new(
                        step.pos,
                        DiagKind::Duplicate(var.clone()),
                        format!("`{var}` is already defined"),
                    ));
                }
                chain_type(body, &sc.with(var, t))?
            }
            Op::MapAccum { init, next, out } => {
                let st = element(init, sc, "initial state")?;
                let inner = with_e.with("s", st);
                let tn = expr_type(next, &inner)?;
                if tn != st {
                    return Err(type_err(
                        next.pos,
                        format!("next state must be {st} like the initial state, found {tn}"),
                    ));
                }
                element(out, &inner, "map_accum output")?
            }
        };
    }
    Ok(t)
}

/// Resolves names and types; the error points at the offending text.
pub fn check(d: &PipelineDesc) -> CResult<Checked> {
    let mut sc = Scope::default();
    for p in &d.params {
        if RESERVED.contains(&p.name.as_str()) {
            return Err(type_err(
                Pos::default(),
                format!("parameter name `{}` is reserved", p.name),
            ));
        }
        sc = sc.with(&p.name, p.ty.sem());
    }
    check_signature(&d.name, d.params.iter().map(|p| (p.name.as_str(), p.ty.sem())))
        .map_err(|e| Diagnostic::new(Pos::default(), DiagKind::Duplicate(e.to_string()), e.to_string()))?;
    let elem = chain_type(&d.chain, &sc)?;
    let ret = match &d.sink {
        Sink::Sum => {
            if !elem.is_numeric() {
                return Err(type_err(
                    d.chain.pos,
                    format!("sum needs numbers, the stream has {elem}"),
                ));
            }
            elem
        }
        Sink::IterCount => SemType::Int,
        Sink::Fold { init, step } => {
            let ta = element(init, &sc, "fold initial value")?;
            let sc = sc.with("e", elem).with("acc", ta);
            let ts = expr_type(step, &sc)?;
            if ts != ta {
                return Err(type_err(
                    step.pos,
                    format!("fold step must be {ta} like the initial value, found {ts}"),
                ));
            }
            ta
        }
    };
    Ok(Checked {
        desc: d.clone(),
        elem,
        ret,
    })
}
