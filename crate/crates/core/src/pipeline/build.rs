use std::sync::Arc;

use thiserror::Error;

use super::{check, BinOp, Chain, Diagnostic, Expr, ExprKind, Op, PipelineDesc, Sink, Source, UnOp};
use crate::api::CStream;
use crate::backend::{ArithOp, Backend, CmpOp, Code, CodeError, CodeVal, ElemType, EmitUnit, SemType};
use crate::cgen::{render, CBackend, CSrc};
use crate::interp::{self, Interp, RunOptions, Trap, Value};
use crate::peval::wrap;

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Invalid(#[from] Diagnostic),
    #[error("code generation failed: {0}")]
    Code(#[from] CodeError),
    #[error("evaluation failed: {0}")]
    Trap(#[from] Trap),
}

/// Values bound to names while generating code for actions.
#[derive(Clone, Default)]
struct Vals(Arc<Vec<(String, CodeVal)>>);

impl Vals {
    fn with(&self, name: &str, v: &CodeVal) -> Vals {
        let mut xs = (*self.0).clone();
        xs.push((name.to_string(), v.clone()));
        Vals(Arc::new(xs))
    }

    fn get(&self, name: &str) -> Result<&CodeVal, CodeError> {
        self.0
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| CodeError::Internal(format!("unbound name `{name}`")))
    }
}

fn gen(b: &dyn Backend, e: &Expr, sc: &Vals) -> Code {
    match &e.kind {
        ExprKind::Int(v) => b.int(*v),
        ExprKind::Float(v) => b.float(*v),
        ExprKind::Bool(v) => b.bool(*v),
        ExprKind::Var(n) => Ok(sc.get(n)?.clone()),
        ExprKind::Unary(UnOp::Not, a) => b.not(&gen(b, a, sc)?),
        ExprKind::Unary(UnOp::Neg, a) => {
            let x = gen(b, a, sc)?;
            let m = if x.typ() == SemType::Float {
                b.float(-1.0)?
            } else {
                b.int(-1)?
            };
            b.mul(&m, &x)
        }
        ExprKind::Binary(op, x, y) => {
            let (x, y) = (gen(b, x, sc)?, gen(b, y, sc)?);
            match op {
                BinOp::And => b.and(&x, &y),
                BinOp::Or => b.or(&x, &y),
                BinOp::Add => b.arith(ArithOp::Add, &x, &y),
                BinOp::Sub => b.arith(ArithOp::Sub, &x, &y),
                BinOp::Mul => b.arith(ArithOp::Mul, &x, &y),
                BinOp::Div => b.arith(ArithOp::Div, &x, &y),
                BinOp::Rem => b.arith(ArithOp::Mod, &x, &y),
                BinOp::Lt => b.cmp(CmpOp::Lt, &x, &y),
                BinOp::Le => b.cmp(CmpOp::Le, &x, &y),
                BinOp::Gt => b.cmp(CmpOp::Gt, &x, &y),
                BinOp::Ge => b.cmp(CmpOp::Ge, &x, &y),
                BinOp::Eq => b.cmp(CmpOp::Eq, &x, &y),
                BinOp::Ne => b.cmp(CmpOp::Ne, &x, &y),
            }
        }
        ExprKind::Cond(c, x, y) => b.cond(&gen(b, c, sc)?, &gen(b, x, sc)?, &gen(b, y, sc)?),
    }
}

fn action1(
    e: &Expr,
    sc: &Vals,
    name: &'static str,
) -> impl Fn(&dyn Backend, &CodeVal) -> Code + Send + Sync + 'static {
    let (e, sc) = (e.clone(), sc.clone());
    move |b, v| gen(b, &e, &sc.with(name, v))
}

fn gen_chain(b: &dyn Backend, c: &Chain, sc: &Vals) -> Result<CStream, CodeError> {
    let mut s = match &c.source {
        Source::Iota(e) => CStream::iota(&gen(b, e, sc)?)?,
        Source::OfArr(a) => CStream::of_arr(sc.get(a)?)?,
        Source::Range(lo, hi) => CStream::range(&gen(b, lo, sc)?, &gen(b, hi, sc)?)?,
        Source::ZipWith { f, left, right } => {
            let l = gen_chain(b, left, sc)?;
            let r = gen_chain(b, right, sc)?;
            let (f, sc) = (f.clone(), sc.clone());
            l.zip_with(r, move |b, x, y| gen(b, &f, &sc.with("x", x).with("y", y)))?
        }
    };
    for step in &c.ops {
        s = match &step.op {
            Op::Map(f) => s.map(action1(f, sc, "e"))?,
            Op::Filter(p) => s.filter(action1(p, sc, "e"))?,
            Op::TakeWhile(p) => s.take_while(action1(p, sc, "e"))?,
            Op::DropWhile(p) => s.drop_while(action1(p, sc, "e"))?,
            Op::Take(n) => s.take(&gen(b, n, sc)?)?,
            Op::Drop(n) => s.drop(&gen(b, n, sc)?)?,
            Op::FlatMap { var, body } => {
                let (var, body, sc) = (var.clone(), body.clone(), sc.clone());
                s.flat_map(move |b, x| gen_chain(b, &body, &sc.with(&var, x)))?
            }
            Op::MapAccum { init, next, out } => {
                let init = gen(b, init, sc)?;
                let (next, out, sc) = (next.clone(), out.clone(), sc.clone());
                s.map_accum(&init, move |b, st, x| {
                    let sc = sc.with("e", x).with("s", st);
                    Ok((gen(b, &next, &sc)?, gen(b, &out, &sc)?))
                })?
            }
        };
    }
    Ok(s)
}

/// Checks a description and builds its function over `b`.
pub fn build_unit(b: &dyn Backend, d: &PipelineDesc) -> Result<EmitUnit, PipelineError> {
    check(d)?;
    let params: Vec<(&str, SemType)> = d.params.iter().map(|p| (p.name.as_str(), p.ty.sem())).collect();
    let unit = b.make_fun(&d.name, &params, &mut |args| {
        let mut sc = Vals::default();
        for (p, a) in d.params.iter().zip(args) {
            sc = sc.with(&p.name, a);
        }
        let s = gen_chain(b, &d.chain, &sc)?;
        match &d.sink {
            Sink::Sum => s.sum(b),
            Sink::IterCount => s.count(b),
            Sink::Fold { init, step } => {
                let init = gen(b, init, &sc)?;
                s.fold(b, &init, |b, acc, e| {
                    gen(b, step, &sc.with("e", e).with("acc", acc))
                })
            }
        }
    })?;
    Ok(unit)
}

/// Name of the output array parameter added by [`build_drain_unit`].
pub const DRAIN_OUT: &str = "drain_out";

/// Builds a function that stores the elements reaching the sink into an
/// extra array parameter, until it is full, and returns how many it stored.
/// The sink itself is ignored.
pub fn build_drain_unit(b: &dyn Backend, d: &PipelineDesc) -> Result<EmitUnit, PipelineError> {
    let checked = check(d)?;
    let elem = match checked.elem {
        SemType::Int => ElemType::Int,
        SemType::Float => ElemType::Float,
        t => return Err(CodeError::Unsupported(format!("cannot store a stream of {t}")).into()),
    };
    let mut params: Vec<(&str, SemType)> = d.params.iter().map(|p| (p.name.as_str(), p.ty.sem())).collect();
    params.push((DRAIN_OUT, SemType::Arr(elem)));
    let unit = b.make_fun(&d.name, &params, &mut |args| {
        let mut sc = Vals::default();
        for (p, a) in d.params.iter().zip(args) {
            sc = sc.with(&p.name, a);
        }
        gen_chain(b, &d.chain, &sc)?.collect_into(b, &args[d.params.len()])
    })?;
    Ok(unit)
}

/// The first `cap` elements reaching the sink, under the interpreter.
pub fn drain(d: &PipelineDesc, args: &[Value], cap: usize) -> Result<Vec<Value>, PipelineError> {
    let b = Interp::new();
    let u = build_drain_unit(&b, d)?;
    let zero = match u.params().last().map(|p| p.typ) {
        Some(SemType::Arr(ElemType::Float)) => Value::float_array(&vec![0.0; cap]),
        _ => Value::int_array(&vec![0; cap]),
    };
    let mut all = args.to_vec();
    all.push(zero);
    let o = interp::run(&u, &all, &RunOptions::default())?;
    let n = o.value.as_int().unwrap_or(0) as usize;
    let out = o.args.last().and_then(|v| v.as_array()).unwrap_or(&[]);
    Ok(out[..n.min(out.len())].to_vec())
}

/// Compiles to one C function named after the pipeline, with partial
/// evaluation.
pub fn compile_to_c(d: &PipelineDesc) -> Result<CSrc, PipelineError> {
    let b = wrap(CBackend::new());
    Ok(render(&build_unit(&b, d)?)?)
}

/// As [`compile_to_c`] without partial evaluation.
pub fn compile_to_c_plain(d: &PipelineDesc) -> Result<CSrc, PipelineError> {
    let b = CBackend::new();
    Ok(render(&build_unit(&b, d)?)?)
}

/// Runs a description under the interpreter.
pub fn evaluate(d: &PipelineDesc, args: &[Value]) -> Result<Value, PipelineError> {
    let b = Interp::new();
    let u = build_unit(&b, d)?;
    Ok(interp::eval_unit(&u, args)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::parse_pipeline;

    const EX2: &str = "pipeline ex2() = iota(1) |> map(e * e) |> filter(e % 17 > 7) |> take(10) |> sum";

    #[test]
    fn ex2_runs_and_compiles() {
        let d = parse_pipeline(EX2).unwrap();
        assert_eq!(evaluate(&d, &[]).unwrap(), Value::Int(853));
        let c = compile_to_c(&d).unwrap();
        assert_eq!(c.fn_name, "ex2");
        assert_eq!(c, compile_to_c_plain(&d).unwrap());
        assert_eq!(c, compile_to_c(&d).unwrap());
    }

    #[test]
    fn run_length_decoding() {
        let d = parse_pipeline(
            "pipeline rld(p: int_array) =\n  of_arr(p)\n  |> flat_map(v => range(0, v % 256) |> map(v / 256))\n  |> fold(0, acc * 10 + e)",
        )
        .unwrap();
        let packed = [7 * 256 + 3, 9 * 256 + 2];
        assert_eq!(
            evaluate(&d, &[Value::int_array(&packed)]).unwrap(),
            Value::Int(77799)
        );
    }

    #[test]
    fn drains() {
        let d = parse_pipeline(
            "pipeline rld(p: int_array) =\n  of_arr(p)\n  |> flat_map(v => range(0, v % 256) |> map(v / 256))\n  |> sum",
        )
        .unwrap();
        let got = drain(&d, &[Value::int_array(&[7 * 256 + 3, 9 * 256 + 2])], 16).unwrap();
        assert_eq!(got, [7, 7, 7, 9, 9].map(Value::Int));
        let got = drain(&d, &[Value::int_array(&[7 * 256 + 3, 9 * 256 + 2])], 4).unwrap();
        assert_eq!(got, [7, 7, 7, 9].map(Value::Int));
    }

    #[test]
    fn negation_and_floats() {
        let d = parse_pipeline(
            "pipeline f(a: double_array) = of_arr(a) |> map(-e) |> map_accum(0.0, s + e, s) |> sum",
        )
        .unwrap();
        // states 0, -1, -3 emitted before each update
        let v = evaluate(&d, &[Value::float_array(&[1.0, 2.0, 4.0])]).unwrap();
        assert_eq!(v, Value::Float(-4.0));
    }
}
