//! JSON mirror of the text format. Action expressions stay strings in the
//! text syntax.

use serde::{Deserialize, Serialize};

use super::{
    parse_expr, Chain, DiagKind, Diagnostic, Expr, Op, ParamDecl, ParamType, PipelineDesc, Pos, Sink, Source,
    Step,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JParam {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum JSource {
    Iota {
        start: String,
    },
    OfArr {
        param: String,
    },
    Range {
        lo: String,
        hi: String,
    },
    ZipWith {
        f: String,
        left: Box<JChain>,
        right: Box<JChain>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
enum JOp {
    Map { f: String },
    Filter { p: String },
    Take { n: String },
    TakeWhile { p: String },
    Drop { n: String },
    DropWhile { p: String },
    FlatMap { var: String, body: Box<JChain> },
    MapAccum { init: String, next: String, out: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JChain {
    source: JSource,
    #[serde(default)]
    ops: Vec<JOp>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum JSink {
    Sum,
    Fold { init: String, step: String },
    IterCount,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JDesc {
    name: String,
    #[serde(default)]
    params: Vec<JParam>,
    source: JSource,
    #[serde(default)]
    ops: Vec<JOp>,
    sink: JSink,
}

fn expr(path: &str, text: &str) -> Result<Expr, Diagnostic> {
    parse_expr(text).map_err(|d| Diagnostic {
        msg: format!("in {path}: {}", d.msg),
        ..d
    })
}

fn chain(path: &str, source: &JSource, ops: &[JOp]) -> Result<Chain, Diagnostic> {
    let source = match source {
        JSource::Iota { start } => Source::Iota(expr(&format!("{path}.source.start"), start)?),
        JSource::OfArr { param } => Source::OfArr(param.clone()),
        JSource::Range { lo, hi } => Source::Range(
            expr(&format!("{path}.source.lo"), lo)?,
            expr(&format!("{path}.source.hi"), hi)?,
        ),
        JSource::ZipWith { f, left, right } => Source::ZipWith {
            f: expr(&format!("{path}.source.f"), f)?,
            left: Box::new(chain(&format!("{path}.source.left"), &left.source, &left.ops)?),
            right: Box::new(chain(&format!("{path}.source.right"), &right.source, &right.ops)?),
        },
    };
    let mut steps = Vec::new();
    for (k, op) in ops.iter().enumerate() {
        let at = |field: &str| format!("{path}.ops[{k}].{field}");
        let op = match op {
            JOp::Map { f } => Op::Map(expr(&at("f"), f)?),
            JOp::Filter { p } => Op::Filter(expr(&at("p"), p)?),
            JOp::Take { n } => Op::Take(expr(&at("n"), n)?),
            JOp::TakeWhile { p } => Op::TakeWhile(expr(&at("p"), p)?),
            JOp::Drop { n } => Op::Drop(expr(&at("n"), n)?),
            JOp::DropWhile { p } => Op::DropWhile(expr(&at("p"), p)?),
            JOp::FlatMap { var, body } => Op::FlatMap {
                var: var.clone(),
                body: Box::new(chain(&at("body"), &body.source, &body.ops)?),
            },
            JOp::MapAccum { init, next, out } => Op::MapAccum {
                init: expr(&at("init"), init)?,
                next: expr(&at("next"), next)?,
                out: expr(&at("out"), out)?,
            },
        };
        steps.push(Step::from(op));
    }
    Ok(Chain {
        source,
        ops: steps,
        pos: Pos::default(),
    })
}

/// Reads the JSON form. Positions in diagnostics for JSON syntax refer to
/// the JSON text; for action expressions, to the expression string named
/// in the message.
pub fn from_json(text: &str) -> Result<PipelineDesc, Diagnostic> {
    let j: JDesc = serde_json::from_str(text).map_err(|e| {
        Diagnostic::new(
            Pos {
                line: e.line() as u32,
                col: e.column() as u32,
            },
            DiagKind::Syntax,
            e.to_string(),
        )
    })?;
    let mut params = Vec::new();
    for p in &j.params {
        let ty = ParamType::from_keyword(&p.ty).ok_or_else(|| {
            Diagnostic::new(
                Pos::default(),
                DiagKind::Type,
                format!("parameter `{}` has unknown type `{}`", p.name, p.ty),
            )
        })?;
        params.push(ParamDecl {
            name: p.name.clone(),
            ty,
        });
    }
    let sink = match &j.sink {
        JSink::Sum => Sink::Sum,
        JSink::IterCount => Sink::IterCount,
        JSink::Fold { init, step } => Sink::Fold {
            init: expr("sink.init", init)?,
            step: expr("sink.step", step)?,
        },
    };
    Ok(PipelineDesc {
        name: j.name,
        params,
        chain: chain("pipeline", &j.source, &j.ops)?,
        sink,
    })
}

fn jchain(c: &Chain) -> JChain {
    let s = |e: &Expr| e.to_string();
    let source = match &c.source {
        Source::Iota(e) => JSource::Iota { start: s(e) },
        Source::OfArr(a) => JSource::OfArr { param: a.clone() },
        Source::Range(lo, hi) => JSource::Range { lo: s(lo), hi: s(hi) },
        Source::ZipWith { f, left, right } => JSource::ZipWith {
            f: s(f),
            left: Box::new(jchain(left)),
            right: Box::new(jchain(right)),
        },
    };
    let ops = c
        .ops
        .iter()
        .map(|st| match &st.op {
            Op::Map(f) => JOp::Map { f: s(f) },
            Op::Filter(p) => JOp::Filter { p: s(p) },
            Op::Take(n) => JOp::Take { n: s(n) },
            Op::TakeWhile(p) => JOp::TakeWhile { p: s(p) },
            Op::Drop(n) => JOp::Drop { n: s(n) },
            Op::DropWhile(p) => JOp::DropWhile { p: s(p) },
            Op::FlatMap { var, body } => JOp::FlatMap {
                var: var.clone(),
                body: Box::new(jchain(body)),
            },
            Op::MapAccum { init, next, out } => JOp::MapAccum {
                init: s(init),
                next: s(next),
                out: s(out),
            },
        })
        .collect();
    JChain { source, ops }
}

/// Writes the JSON form.
pub fn to_json(d: &PipelineDesc) -> String {
    let JChain { source, ops } = jchain(&d.chain);
    let j = JDesc {
        name: d.name.clone(),
        params: d
            .params
            .iter()
            .map(|p| JParam {
                name: p.name.clone(),
                ty: p.ty.keyword().into(),
            })
            .collect(),
        source,
        ops,
        sink: match &d.sink {
            Sink::Sum => JSink::Sum,
            Sink::IterCount => JSink::IterCount,
            Sink::Fold { init, step } => JSink::Fold {
                init: init.to_string(),
                step: step.to_string(),
            },
        },
    };
    serde_json::to_string_pretty(&j).expect("descriptions always serialize")
}
