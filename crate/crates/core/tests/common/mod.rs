//! Random pipelines and a naive list model to judge them by.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::rc::Rc;

use fusilli::interp::Value;
use fusilli::pipeline::{
    parse_expr, BinOp, Chain, Expr, ExprKind, Op, ParamDecl, ParamType, PipelineDesc, Sink, Source, UnOp,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_DEPTH: u32 = 4;
pub const MAX_LEN: usize = 8;

const INT_ARRAYS: [&str; 3] = ["a", "b", "c"];
const FLOAT_ARRAYS: [&str; 2] = ["d", "g"];

const MAP_INT: &[&str] = &[
    "e + 1",
    "e * 2",
    "e - 7",
    "e * e",
    "-e",
    "e / 3",
    "e % 5",
    "e > 0 ? e : -e",
    "e * 3 + {o}",
    "{o} - e",
    "(e + {o}) % 7",
    "e / -2",
];
const MAP_FLOAT: &[&str] = &[
    "e * 0.5",
    "e + 1.25",
    "e - e * e",
    "-e",
    "e * {o}",
    "e > 0.0 ? e : 0.0 - e",
    "e / 4.0",
];
const PRED_INT: &[&str] = &[
    "e > 0",
    "e % 2 == 0",
    "e < 10",
    "e != 3",
    "e >= -50 && e <= 80",
    "!(e == 1)",
    "e % 3 != 1 || e > 20",
    "e > {o}",
];
const PRED_FLOAT: &[&str] = &["e > 0.0", "e < 2.5", "e != 1.0", "e <= {o}"];
const TAKE: &[&str] = &["1", "2", "3", "4", "6", "8", "k", "{o} % 4"];
const DROP: &[&str] = &["0", "1", "2", "k / 3", "{o} % 3"];
const WHILE_TAKE_INT: &[&str] = &["e != 3", "e > -90", "e < 95", "!(e == 1)", "e < {o} * 10"];
const WHILE_DROP_INT: &[&str] = &["e < -50", "e % 2 == 0", "e == 1", "e > 90", "e < {o}"];
const WHILE_TAKE_FLOAT: &[&str] = &["e > -90.0", "e < 95.0", "e != 3.5"];
const WHILE_DROP_FLOAT: &[&str] = &["e < -50.0", "e > 90.0", "e == 1.25"];
const ZIP_INT: &[&str] = &["x + y", "x * y", "x - y", "x > y ? x : y", "x * 3 + y", "y"];
const ZIP_FLOAT: &[&str] = &["x + y", "x * y", "x - y"];
const ACC_INIT_INT: &[&str] = &["0", "1", "-3", "{o}"];
const ACC_NEXT_INT: &[&str] = &["s + e", "s * 2 - e", "e", "s + 1", "s > e ? s : e"];
const ACC_OUT_INT: &[&str] = &["s", "e + s", "s * e", "e - s", "e"];
const ACC_INIT_FLOAT: &[&str] = &["0.0", "1.5"];
const ACC_NEXT_FLOAT: &[&str] = &["s + e", "s * 0.5 + e"];
const ACC_OUT_FLOAT: &[&str] = &["s", "e - s", "e * s"];
const FOLD_INT: &[&str] = &["acc + e", "acc * 3 + e", "acc > e ? acc : e", "acc - e * 2"];
const FOLD_FLOAT: &[&str] = &["acc + e", "acc * 0.5 + e"];

/// Builds random pipelines from a seed.
pub struct Gen {
    rng: ChaCha8Rng,
    float: bool,
    next_var: u32,
    used: BTreeSet<&'static str>,
}

impl Gen {
    fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            float: false,
            next_var: 0,
            used: BTreeSet::new(),
        }
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    /// Fills `{o}` with an outer variable, `k` or a literal.
    fn expr(&mut self, template: &str, outer: &[String]) -> Expr {
        let mut text = template.to_string();
        while text.contains("{o}") {
            let o = match self.rng.gen_range(0..4) {
                0 | 1 if !outer.is_empty() => outer.choose(&mut self.rng).unwrap().clone(),
                2 if !self.float => {
                    self.used.insert("k");
                    "k".into()
                }
                _ if self.float => "1.5".into(),
                _ => self.rng.gen_range(-20..=20).to_string(),
            };
            text = text.replacen("{o}", &o, 1);
        }
        if text.split(|c: char| !c.is_alphanumeric()).any(|w| w == "k") {
            self.used.insert("k");
        }
        parse_expr(&text).unwrap_or_else(|d| panic!("pool expression `{text}`: {d}"))
    }

    fn array(&mut self) -> String {
        let name = if self.float {
            *FLOAT_ARRAYS.choose(&mut self.rng).unwrap()
        } else {
            *INT_ARRAYS.choose(&mut self.rng).unwrap()
        };
        self.used.insert(name);
        name.to_string()
    }

    fn source(&mut self, depth: u32, outer: &[String]) -> (Source, Vec<Op>) {
        let roll = self.rng.gen_range(0..100);
        if depth > 0 && roll < 20 {
            let f = self.pick(if self.float { ZIP_FLOAT } else { ZIP_INT });
            let f = self.expr(f, &[]);
            let left = self.chain(depth - 1, outer);
            let right = self.chain(depth - 1, outer);
            return (
                Source::ZipWith {
                    f,
                    left: Box::new(left),
                    right: Box::new(right),
                },
                Vec::new(),
            );
        }
        if self.float || roll < 65 {
            return (Source::OfArr(self.array()), Vec::new());
        }
        if roll < 90 {
            let start = if self.rng.gen_bool(0.3) && !outer.is_empty() {
                self.expr("{o}", outer)
            } else {
                Expr::int(self.rng.gen_range(-100..=100))
            };
            let n = if self.rng.gen_bool(0.2) {
                self.expr("k", outer)
            } else {
                Expr::int(self.rng.gen_range(1..=MAX_LEN as i32))
            };
            return (Source::Iota(start), vec![Op::Take(n)]);
        }
        let (lo, hi) = *[("0", "{o} % 5"), ("{o}", "{o} + 3"), ("-2", "3")]
            .choose(&mut self.rng)
            .unwrap();
        (
            Source::Range(self.expr(lo, outer), self.expr(hi, outer)),
            Vec::new(),
        )
    }

    fn op(&mut self, depth: u32, outer: &[String]) -> Op {
        let fl = self.float;
        loop {
            let op = match self.rng.gen_range(0..100) {
                0..=24 => Op::Map(self.action(MAP_INT, MAP_FLOAT, outer)),
                25..=39 => Op::Filter(self.action(PRED_INT, PRED_FLOAT, outer)),
                40..=49 => Op::Take(self.count(TAKE, outer)),
                50..=57 => Op::TakeWhile(self.action(WHILE_TAKE_INT, WHILE_TAKE_FLOAT, outer)),
                58..=65 => Op::Drop(self.count(DROP, outer)),
                66..=73 => Op::DropWhile(self.action(WHILE_DROP_INT, WHILE_DROP_FLOAT, outer)),
                74..=87 if depth > 0 => {
                    self.next_var += 1;
                    let var = format!("v{}", self.next_var);
                    let mut inner = outer.to_vec();
                    inner.push(var.clone());
                    let body = self.chain(depth - 1, &inner);
                    Op::FlatMap {
                        var,
                        body: Box::new(body),
                    }
                }
                88..=99 => {
                    let (i, n, o) = if fl {
                        (ACC_INIT_FLOAT, ACC_NEXT_FLOAT, ACC_OUT_FLOAT)
                    } else {
                        (ACC_INIT_INT, ACC_NEXT_INT, ACC_OUT_INT)
                    };
                    let (i, n, o) = (self.pick(i), self.pick(n), self.pick(o));
                    Op::MapAccum {
                        init: self.expr(i, outer),
                        next: self.expr(n, outer),
                        out: self.expr(o, outer),
                    }
                }
                _ => continue,
            };
            return op;
        }
    }

    fn action(&mut self, int: &[&str], float: &[&str], outer: &[String]) -> Expr {
        let t = self.pick(if self.float { float } else { int });
        self.expr(t, outer)
    }

    fn count(&mut self, pool: &[&str], outer: &[String]) -> Expr {
        let c = self.pick(pool);
        if self.float && c.contains("{o}") {
            return Expr::int(2);
        }
        self.expr(c, outer)
    }

    fn chain(&mut self, depth: u32, outer: &[String]) -> Chain {
        let (source, mut ops) = self.source(depth, outer);
        for _ in 0..self.rng.gen_range(0..=3) {
            ops.push(self.op(depth, outer));
        }
        Chain::new(source, ops)
    }

    fn sink(&mut self) -> Sink {
        match self.rng.gen_range(0..10) {
            0..=3 => Sink::Sum,
            4..=5 => Sink::IterCount,
            _ => {
                let (init, step) = if self.float {
                    (self.pick(&["0.0", "1.0"]), self.pick(FOLD_FLOAT))
                } else {
                    (self.pick(&["0", "7", "{o}"]), self.pick(FOLD_INT))
                };
                Sink::Fold {
                    init: self.expr(init, &[]),
                    step: self.expr(step, &[]),
                }
            }
        }
    }
}

/// A random pipeline, fully determined by `seed`.
pub fn pipeline(seed: u64) -> PipelineDesc {
    let mut g = Gen::new(seed);
    g.float = g.rng.gen_bool(0.15);
    let depth = g.rng.gen_range(0..=MAX_DEPTH);
    let chain = g.chain(depth, &[]);
    let sink = g.sink();
    let mut params = Vec::new();
    for name in ["a", "b", "c", "d", "g", "k"] {
        if g.used.contains(name) {
            let ty = match name {
                "a" | "b" | "c" => ParamType::IntArray,
                "d" | "g" => ParamType::DoubleArray,
                _ => ParamType::Int,
            };
            params.push(ParamDecl {
                name: name.into(),
                ty,
            });
        }
    }
    PipelineDesc {
        name: format!("p{seed}"),
        params,
        chain,
        sink,
    }
}

/// Random arguments for `d`: arrays of at most [`MAX_LEN`] elements with
/// ints in `-100..=100` and quarter-step doubles; `k` in `-2..=10`, mostly
/// positive.
pub fn args(d: &PipelineDesc, seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    d.params
        .iter()
        .map(|p| {
            let len = if rng.gen_bool(0.1) {
                0
            } else {
                rng.gen_range(1..=MAX_LEN)
            };
            match p.ty {
                ParamType::Int if rng.gen_bool(0.1) => Value::Int(rng.gen_range(-2..=0)),
                ParamType::Int => Value::Int(rng.gen_range(1..=10)),
                ParamType::IntArray => {
                    Value::int_array(&(0..len).map(|_| rng.gen_range(-100..=100)).collect::<Vec<_>>())
                }
                ParamType::DoubleArray => Value::float_array(
                    &(0..len)
                        .map(|_| rng.gen_range(-400..=400) as f64 / 4.0)
                        .collect::<Vec<_>>(),
                ),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum V {
    I(i32),
    F(f64),
    B(bool),
}

impl V {
    pub fn to_value(self) -> Value {
        match self {
            V::I(i) => Value::Int(i),
            V::F(x) => Value::Float(x),
            V::B(b) => Value::Bool(b),
        }
    }

    fn int(self) -> i32 {
        match self {
            V::I(i) => i,
            other => panic!("expected int, got {other:?}"),
        }
    }

    fn bool(self) -> bool {
        match self {
            V::B(b) => b,
            other => panic!("expected bool, got {other:?}"),
        }
    }
}

type Env = Rc<Vec<(String, V)>>;

fn bind(env: &Env, name: &str, v: V) -> Env {
    let mut e = (**env).clone();
    e.push((name.to_string(), v));
    Rc::new(e)
}

/// Expression semantics: 32-bit wrapping, truncating division.
pub fn eval_expr(e: &Expr, env: &[(String, V)]) -> V {
    use V::*;
    match &e.kind {
        ExprKind::Int(i) => I(*i),
        ExprKind::Float(x) => F(*x),
        ExprKind::Bool(b) => B(*b),
        ExprKind::Var(n) => env
            .iter()
            .rev()
            .find(|(m, _)| m == n)
            .map(|(_, v)| *v)
            .expect("bound"),
        ExprKind::Unary(UnOp::Not, a) => B(!eval_expr(a, env).bool()),
        ExprKind::Unary(UnOp::Neg, a) => match eval_expr(a, env) {
            I(i) => I(i.wrapping_neg()),
            F(x) => F(-x),
            B(_) => unreachable!(),
        },
        ExprKind::Cond(c, a, b) => {
            if eval_expr(c, env).bool() {
                eval_expr(a, env)
            } else {
                eval_expr(b, env)
            }
        }
        ExprKind::Binary(op, a, b) => {
            let (a, b) = (eval_expr(a, env), eval_expr(b, env));
            match (op, a, b) {
                (BinOp::And, B(x), B(y)) => B(x && y),
                (BinOp::Or, B(x), B(y)) => B(x || y),
                (BinOp::Add, I(x), I(y)) => I(x.wrapping_add(y)),
                (BinOp::Sub, I(x), I(y)) => I(x.wrapping_sub(y)),
                (BinOp::Mul, I(x), I(y)) => I(x.wrapping_mul(y)),
                (BinOp::Div, I(x), I(y)) => I(x.wrapping_div(y)),
                (BinOp::Rem, I(x), I(y)) => I(x.wrapping_rem(y)),
                (BinOp::Add, F(x), F(y)) => F(x + y),
                (BinOp::Sub, F(x), F(y)) => F(x - y),
                (BinOp::Mul, F(x), F(y)) => F(x * y),
                (BinOp::Div, F(x), F(y)) => F(x / y),
                (op, I(x), I(y)) => B(compare(*op, x.cmp(&y))),
                (op, F(x), F(y)) => B(compare(*op, x.partial_cmp(&y).expect("no NaN"))),
                other => panic!("ill-typed {other:?}"),
            }
        }
    }
}

fn compare(op: BinOp, o: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        BinOp::Lt => o == Less,
        BinOp::Le => o != Greater,
        BinOp::Gt => o == Greater,
        BinOp::Ge => o != Less,
        BinOp::Eq => o == Equal,
        BinOp::Ne => o != Equal,
        _ => unreachable!(),
    }
}

fn to_vs(v: &Value) -> Vec<V> {
    v.as_array()
        .expect("array")
        .iter()
        .map(|x| match x {
            Value::Int(i) => V::I(*i),
            Value::Float(f) => V::F(*f),
            other => panic!("{other:?}"),
        })
        .collect()
}

type Stream = Box<dyn Iterator<Item = V>>;

fn chain_ref(c: &Chain, env: &Env, arrays: &Rc<Vec<(String, Vec<V>)>>) -> Stream {
    let mut s: Stream = match &c.source {
        Source::Iota(start) => {
            let start = eval_expr(start, env).int();
            Box::new(std::iter::successors(Some(start), |i| Some(i.wrapping_add(1))).map(V::I))
        }
        Source::Range(lo, hi) => {
            let (lo, hi) = (eval_expr(lo, env).int(), eval_expr(hi, env).int());
            Box::new((lo..hi).map(V::I))
        }
        Source::OfArr(name) => {
            let xs = arrays
                .iter()
                .find(|(n, _)| n == name)
                .expect("array arg")
                .1
                .clone();
            Box::new(xs.into_iter())
        }
        Source::ZipWith { f, left, right } => {
            let (f, env) = (f.clone(), env.clone());
            let l = chain_ref(left, &env, arrays);
            let r = chain_ref(right, &env, arrays);
            Box::new(
                l.zip(r)
                    .map(move |(x, y)| eval_expr(&f, &bind(&bind(&env, "x", x), "y", y))),
            )
        }
    };
    for step in &c.ops {
        let env = env.clone();
        s = match step.op.clone() {
            Op::Map(f) => Box::new(s.map(move |x| eval_expr(&f, &bind(&env, "e", x)))),
            Op::Filter(p) => Box::new(s.filter(move |x| eval_expr(&p, &bind(&env, "e", *x)).bool())),
            Op::TakeWhile(p) => Box::new(s.take_while(move |x| eval_expr(&p, &bind(&env, "e", *x)).bool())),
            Op::DropWhile(p) => Box::new(s.skip_while(move |x| eval_expr(&p, &bind(&env, "e", *x)).bool())),
            Op::Take(n) => Box::new(s.take(eval_expr(&n, &env).int().max(0) as usize)),
            Op::Drop(n) => Box::new(s.skip(eval_expr(&n, &env).int().max(0) as usize)),
            Op::FlatMap { var, body } => {
                let arrays = arrays.clone();
                Box::new(s.flat_map(move |x| chain_ref(&body, &bind(&env, &var, x), &arrays)))
            }
            Op::MapAccum { init, next, out } => {
                let mut st = eval_expr(&init, &env);
                Box::new(s.map(move |x| {
                    let sc = bind(&bind(&env, "e", x), "s", st);
                    let o = eval_expr(&out, &sc);
                    st = eval_expr(&next, &sc);
                    o
                }))
            }
        };
    }
    s
}

type Arrays = Rc<Vec<(String, Vec<V>)>>;

fn scalars_and_arrays(d: &PipelineDesc, args: &[Value]) -> (Env, Arrays) {
    let mut env = Vec::new();
    let mut arrays = Vec::new();
    for (p, a) in d.params.iter().zip(args) {
        match p.ty {
            ParamType::Int => env.push((p.name.clone(), V::I(a.as_int().unwrap()))),
            _ => arrays.push((p.name.clone(), to_vs(a))),
        }
    }
    (Rc::new(env), Rc::new(arrays))
}

/// The elements reaching the sink, stopping after `cap`.
pub fn reference_drain(d: &PipelineDesc, args: &[Value], cap: usize) -> Vec<Value> {
    let (env, arrays) = scalars_and_arrays(d, args);
    chain_ref(&d.chain, &env, &arrays)
        .take(cap)
        .map(V::to_value)
        .collect()
}

/// The sink's result.
pub fn reference_result(d: &PipelineDesc, args: &[Value]) -> Value {
    let (env, arrays) = scalars_and_arrays(d, args);
    let xs = chain_ref(&d.chain, &env, &arrays);
    let float = d.params.iter().any(|p| p.ty == ParamType::DoubleArray);
    match &d.sink {
        Sink::Sum => {
            let zero = if float { V::F(0.0) } else { V::I(0) };
            xs.fold(zero, |acc, x| match (acc, x) {
                (V::I(a), V::I(b)) => V::I(a.wrapping_add(b)),
                (V::F(a), V::F(b)) => V::F(a + b),
                other => panic!("{other:?}"),
            })
            .to_value()
        }
        Sink::IterCount => Value::Int(xs.fold(0i32, |n, _| n.wrapping_add(1))),
        Sink::Fold { init, step } => xs
            .fold(eval_expr(init, &env), |acc, x| {
                eval_expr(step, &bind(&bind(&env, "e", x), "acc", acc))
            })
            .to_value(),
    }
}

/// Length of the reference stream, stopping at `cap`.
pub fn reference_len(d: &PipelineDesc, args: &[Value], cap: usize) -> usize {
    reference_drain(d, args, cap).len()
}

/// Flags for conformance builds, on top of the required ones.
pub const CONFORMANCE_CFLAGS: &str = "-O2 -Wall -Wextra -Wpedantic -Werror";

pub struct Case {
    pub desc: PipelineDesc,
    pub arg_sets: Vec<Vec<Value>>,
}

fn c_array(name: &str, ty: ParamType, v: &Value) -> (String, String) {
    let xs = v.as_array().unwrap();
    let (ty, items): (&str, Vec<String>) = match ty {
        ParamType::DoubleArray => (
            "double",
            xs.iter()
                .map(|x| format!("{:?}", x.as_float().unwrap()))
                .collect(),
        ),
        _ => (
            "int",
            xs.iter().map(|x| x.as_int().unwrap().to_string()).collect(),
        ),
    };
    let body = if items.is_empty() {
        "0".to_string()
    } else {
        items.join(", ")
    };
    (
        format!("static const {ty} {name}[] = {{{body}}};\n"),
        xs.len().to_string(),
    )
}

/// A program calling the partially evaluated kernel and the plain one on
/// every argument set, printing both results per line.
pub fn conformance_program(case: &Case) -> String {
    use fusilli::pipeline::{compile_to_c, compile_to_c_plain};
    let d = &case.desc;
    let plain_desc = PipelineDesc {
        name: format!("{}_plain", d.name),
        ..d.clone()
    };
    let fast = compile_to_c(d).unwrap();
    let plain = compile_to_c_plain(&plain_desc).unwrap();
    let float = fast.signature.starts_with("double");
    let fmt = if float { "%.17g" } else { "%d" };
    let mut s = format!("#include <stdio.h>\n\n{}\n{}\n", fast.text, plain.text);
    let mut calls = String::new();
    for (k, args) in case.arg_sets.iter().enumerate() {
        let mut actual = Vec::new();
        for (p, v) in d.params.iter().zip(args) {
            match p.ty {
                ParamType::Int => actual.push(v.as_int().unwrap().to_string()),
                _ => {
                    let name = format!("{}_{k}", p.name);
                    let (decl, len) = c_array(&name, p.ty, v);
                    s.push_str(&decl);
                    actual.push(name);
                    actual.push(len);
                }
            }
        }
        let actual = actual.join(", ");
        calls.push_str(&format!(
            "  printf(\"{fmt} {fmt}\\n\", {}({actual}), {}({actual}));\n",
            d.name, plain_desc.name
        ));
    }
    format!("{s}\nint main(void)\n{{\n{calls}  return 0;\n}}\n")
}

fn same(text: &str, want: &Value) -> bool {
    match want {
        Value::Int(i) => text.parse::<i32>() == Ok(*i),
        Value::Float(x) => text
            .parse::<f64>()
            .map(|g| g.to_bits() == x.to_bits())
            .unwrap_or(false),
        _ => false,
    }
}

/// Compiles and runs each case, comparing against the interpreter.
/// Returns one message per disagreement or failed build.
pub fn run_conformance(cc: &fusilli::cc::CcConfig, cases: &[Case]) -> Vec<String> {
    let dir = tempfile::tempdir().unwrap();
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(2)
        .min(8);
    let chunk = cases.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| {
                let dir = dir.path();
                scope.spawn(move || {
                    part.iter()
                        .flat_map(|c| conform_one(cc, dir, c))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

fn conform_one(cc: &fusilli::cc::CcConfig, dir: &std::path::Path, case: &Case) -> Vec<String> {
    let d = &case.desc;
    let src = dir.join(format!("{}.c", d.name));
    let exe = dir.join(&d.name);
    std::fs::write(&src, conformance_program(case)).unwrap();
    if let Err(e) = cc.build_exe(&src, &exe, &[]) {
        return vec![format!(
            "{}: {e}\n{}",
            d.name,
            fusilli::pipeline::print_pipeline(d)
        )];
    }
    let out = std::process::Command::new(&exe).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    if !out.status.success() || lines.len() != case.arg_sets.len() {
        return vec![format!("{}: run failed: {}", d.name, out.status)];
    }
    let mut errs = Vec::new();
    for (args, line) in case.arg_sets.iter().zip(lines) {
        let want = fusilli::pipeline::evaluate(d, args).unwrap();
        let (fast, plain) = line.split_once(' ').unwrap();
        if !same(fast, &want) || !same(plain, &want) {
            errs.push(format!(
                "{}: C gave {fast} (plain {plain}), interpreter {want:?} on {args:?}\n{}",
                d.name,
                fusilli::pipeline::print_pipeline(d)
            ));
        }
    }
    errs
}

/// The first `n` corpus pipelines with `sets` argument sets each.
pub fn cases(n: u64, sets: u64) -> Vec<Case> {
    (0..n)
        .map(|seed| {
            let desc = pipeline(seed);
            let arg_sets = (0..sets).map(|k| args(&desc, seed * 1000 + k)).collect();
            Case { desc, arg_sets }
        })
        .collect()
}

/// C tokens: words, and every other non-blank character on its own.
/// Multi-character operators split, which is harmless for comparison.
pub fn c_tokens(text: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' || (ch == '.' && !word.is_empty()) {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            toks.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            toks.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        toks.push(word);
    }
    toks
}

const C_WORDS: &[&str] = &[
    "int", "double", "const", "void", "while", "for", "if", "else", "return",
];

/// Tokens with every identifier replaced by its first-occurrence index.
pub fn alpha_tokens(text: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    c_tokens(text)
        .into_iter()
        .map(|t| {
            let ident =
                t.starts_with(|c: char| c.is_alphabetic() || c == '_') && !C_WORDS.contains(&t.as_str());
            if !ident {
                return t;
            }
            let k = names.iter().position(|n| *n == t).unwrap_or_else(|| {
                names.push(t.clone());
                names.len() - 1
            });
            format!("#{k}")
        })
        .collect()
}

/// Token count of emitted C, leaving out the `(void)p;` lines that mark
/// parameters the code no longer uses.
pub fn size_without_unused_markers(text: &str) -> usize {
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| {
            let l = l.trim();
            !(l.starts_with("(void)")
                && l.ends_with(';')
                && l[6..l.len() - 1].chars().all(|c| c.is_alphanumeric() || c == '_'))
        })
        .collect();
    fusilli::fusion_scan::token_count(&kept.join("\n")).unwrap()
}
