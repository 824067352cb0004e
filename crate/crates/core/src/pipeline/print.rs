use std::fmt::Write;

use super::{Chain, Expr, ExprKind, Op, PipelineDesc, Sink, Source, UnOp, FORMAT_VERSION};

const COND: u8 = 0;
const UNARY: u8 = 7;
const ATOM: u8 = 8;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Cond(..) => COND,
        ExprKind::Binary(op, ..) => op.prec(),
        ExprKind::Unary(..) => UNARY,
        _ => ATOM,
    }
}

fn child(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Float(v) => write!(out, "{v:?}").unwrap(),
        ExprKind::Bool(v) => write!(out, "{v}").unwrap(),
        ExprKind::Var(s) => out.push_str(s),
        ExprKind::Unary(op, a) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            });
            // `-(5)` stays a negation; `-5` would read back as a literal.
            let literal = matches!(a.kind, ExprKind::Int(_) | ExprKind::Float(_));
            child(out, a, prec(a) <= UNARY || literal);
        }
        ExprKind::Binary(op, a, b) => {
            child(out, a, prec(a) < op.prec());
            write!(out, " {} ", op.symbol()).unwrap();
            child(out, b, prec(b) <= op.prec());
        }
        ExprKind::Cond(c, a, b) => {
            child(out, c, prec(c) == COND);
            out.push_str(" ? ");
            expr(out, a);
            out.push_str(" : ");
            expr(out, b);
        }
    }
}

/// Renders an action expression with minimal parentheses.
pub(super) fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

fn chain(out: &mut String, c: &Chain, sep: &str) {
    match &c.source {
        Source::Iota(e) => write!(out, "iota({e})").unwrap(),
        Source::OfArr(a) => write!(out, "of_arr({a})").unwrap(),
        Source::Range(lo, hi) => write!(out, "range({lo}, {hi})").unwrap(),
        Source::ZipWith { f, left, right } => {
            write!(out, "zip_with({f}, ").unwrap();
            chain(out, left, " ");
            out.push_str(", ");
            chain(out, right, " ");
            out.push(')');
        }
    }
    for step in &c.ops {
        out.push_str(sep);
        out.push_str("|> ");
        match &step.op {
            Op::Map(e) => write!(out, "map({e})"),
            Op::Filter(e) => write!(out, "filter({e})"),
            Op::Take(e) => write!(out, "take({e})"),
            Op::TakeWhile(e) => write!(out, "take_while({e})"),
            Op::Drop(e) => write!(out, "drop({e})"),
            Op::DropWhile(e) => write!(out, "drop_while({e})"),
            Op::FlatMap { var, body } => {
                write!(out, "flat_map({var} => ").unwrap();
                chain(out, body, " ");
                write!(out, ")")
            }
            Op::MapAccum { init, next, out: o } => write!(out, "map_accum({init}, {next}, {o})"),
        }
        .unwrap();
    }
}

/// Renders a description in the text format; parsing the result gives back
/// an equal description.
pub fn print_pipeline(d: &PipelineDesc) -> String {
    let mut out = format!("version {FORMAT_VERSION}\npipeline {}(", d.name);
    let params: Vec<String> = d
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty.keyword()))
        .collect();
    out.push_str(&params.join(", "));
    out.push_str(") =\n  ");
    chain(&mut out, &d.chain, "\n  ");
    out.push_str("\n  |> ");
    match &d.sink {
        Sink::Sum => out.push_str("sum"),
        Sink::IterCount => out.push_str("iter_count"),
        Sink::Fold { init, step } => write!(out, "fold({init}, {step})").unwrap(),
    }
    out.push('\n');
    out
}
