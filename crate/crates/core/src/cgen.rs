//! A backend that renders code trees as C99 source.
//!
//! Output compiles cleanly under `-std=c99 -Wall -Wextra -Wpedantic -Werror`:
//! unused locals are removed, unused parameters are voided, and every nested
//! operator is parenthesized. Rendering is a pure function of the unit.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::backend::{CodeError, EmitUnit, Lit, SemType, Sym};
use crate::ir::{delegate_backend, validate_unit, Kind, Node, TreeBackend};

/// The C-emitting backend.
pub struct CBackend(TreeBackend);

impl Default for CBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl CBackend {
    pub fn new() -> Self {
        CBackend(TreeBackend::new("c"))
    }
}

delegate_backend!(CBackend);

/// A rendered translation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSrc {
    pub text: String,
    pub fn_name: String,
    /// The function prototype without a trailing semicolon.
    pub signature: String,
}

#[derive(Debug, Clone)]
enum Expr {
    Lit(String),
    /// Immutable name: parameter, `const` local or loop index.
    Name(String),
    /// Mutable local.
    Var(String),
    Bin(&'static str, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Index(String, Box<Expr>),
}

impl Expr {
    fn stable(&self) -> bool {
        matches!(self, Expr::Lit(_) | Expr::Name(_))
    }

    fn bin(op: &'static str, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    fn names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Name(n) | Expr::Var(n) => out.push(n),
            Expr::Bin(_, a, b) => {
                a.names(out);
                b.names(out);
            }
            Expr::Not(a) => a.names(out),
            Expr::Cond(c, a, b) => {
                c.names(out);
                a.names(out);
                b.names(out);
            }
            Expr::Index(arr, i) => {
                out.push(arr);
                i.names(out);
            }
        }
    }

    fn render(&self, top: bool) -> String {
        let wrap = |s: String| if top { s } else { format!("({s})") };
        match self {
            Expr::Lit(s) | Expr::Name(s) | Expr::Var(s) => s.clone(),
            Expr::Bin(op, a, b) => wrap(format!("{} {op} {}", a.render(false), b.render(false))),
            Expr::Not(a) => wrap(format!("!{}", a.render(false))),
            Expr::Cond(c, a, b) => wrap(format!(
                "{} ? {} : {}",
                c.render(false),
                a.render(false),
                b.render(false)
            )),
            Expr::Index(arr, i) => format!("{arr}[{}]", i.render(true)),
        }
    }
}

#[derive(Debug, Clone)]
enum Stmt {
    Decl {
        ty: &'static str,
        name: String,
        init: Expr,
        konst: bool,
    },
    Assign(String, Expr),
    Store(String, Expr, Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    While(Expr, Vec<Stmt>),
    For {
        idx: String,
        lo: Expr,
        hi: Expr,
        body: Vec<Stmt>,
    },
    Break,
}

fn ctype(t: SemType) -> Result<&'static str, CodeError> {
    match t {
        SemType::Int | SemType::Bool => Ok("int"),
        SemType::Float => Ok("double"),
        _ => Err(CodeError::Internal(format!("no C local of type {t}"))),
    }
}

fn lit_expr(l: Lit) -> Result<Expr, CodeError> {
    let s = match l {
        Lit::Int(i32::MIN) => "(-2147483647 - 1)".to_string(),
        Lit::Int(v) if v < 0 => format!("({v})"),
        Lit::Int(v) => v.to_string(),
        Lit::Bool(b) => if b { "1" } else { "0" }.to_string(),
        Lit::Float(f) if !f.is_finite() => {
            return Err(CodeError::Unsupported(format!(
                "float constant {f} has no C literal"
            )))
        }
        Lit::Float(f) if f.is_sign_negative() => format!("({f:?})"),
        Lit::Float(f) => format!("{f:?}"),
        Lit::Unit => return Err(CodeError::Internal("unit constant in expression".into())),
    };
    Ok(Expr::Lit(s))
}

struct Lower {
    names: HashMap<Sym, String>,
    counter: u32,
}

impl Lower {
    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}_{}", self.counter)
    }

    fn name(&self, sym: Sym) -> Result<String, CodeError> {
        self.names
            .get(&sym)
            .cloned()
            .ok_or_else(|| CodeError::Internal(format!("{sym} has no C name")))
    }

    fn scoped<T>(
        &mut self,
        sym: Sym,
        name: String,
        f: impl FnOnce(&mut Self) -> Result<T, CodeError>,
    ) -> Result<T, CodeError> {
        let old = self.names.insert(sym, name);
        let r = f(self);
        match old {
            Some(o) => self.names.insert(sym, o),
            None => self.names.remove(&sym),
        };
        r
    }

    fn array(&self, n: &Node) -> Result<String, CodeError> {
        match n.kind {
            Kind::Local(s) => self.name(s),
            _ => Err(CodeError::Unsupported(
                "arrays must be function parameters".into(),
            )),
        }
    }

    fn block(&mut self, n: &Node) -> Result<Vec<Stmt>, CodeError> {
        let mut out = Vec::new();
        self.stmt(n, &mut out)?;
        Ok(out)
    }

    /// Lowers two operands evaluated left to right. If the right one needs
    /// statements, the left one is saved first so those cannot affect it.
    fn operands(&mut self, a: &Node, b: &Node, out: &mut Vec<Stmt>) -> Result<(Expr, Expr), CodeError> {
        let mut x = self.value(a, out)?;
        let mark = out.len();
        let y = self.value(b, out)?;
        if out.len() > mark && !x.stable() {
            let t = self.fresh("t");
            out.insert(
                mark,
                Stmt::Decl {
                    ty: ctype(a.typ)?,
                    name: t.clone(),
                    init: x,
                    konst: true,
                },
            );
            x = Expr::Name(t);
        }
        Ok((x, y))
    }

    fn value(&mut self, n: &Node, out: &mut Vec<Stmt>) -> Result<Expr, CodeError> {
        match &n.kind {
            Kind::Lit(l) => lit_expr(*l),
            Kind::Local(s) => Ok(Expr::Name(self.name(*s)?)),
            Kind::Read(s) => Ok(Expr::Var(self.name(*s)?)),
            Kind::Arith(op, a, b) => {
                let (x, y) = self.operands(a, b, out)?;
                Ok(Expr::bin(op.symbol(), x, y))
            }
            Kind::Cmp(op, a, b) => {
                let (x, y) = self.operands(a, b, out)?;
                Ok(Expr::bin(op.symbol(), x, y))
            }
            Kind::And(a, b) | Kind::Or(a, b) => {
                let is_and = matches!(n.kind, Kind::And(..));
                let x = self.value(a, out)?;
                let mut side = Vec::new();
                let y = self.value(b, &mut side)?;
                if side.is_empty() {
                    return Ok(Expr::bin(if is_and { "&&" } else { "||" }, x, y));
                }
                let v = self.fresh("v");
                out.push(Stmt::Decl {
                    ty: "int",
                    name: v.clone(),
                    init: x,
                    konst: false,
                });
                side.push(Stmt::Assign(v.clone(), y));
                let test = if is_and {
                    Expr::Var(v.clone())
                } else {
                    Expr::Not(Box::new(Expr::Var(v.clone())))
                };
                out.push(Stmt::If(test, side, Vec::new()));
                Ok(Expr::Var(v))
            }
            Kind::Not(a) => Ok(Expr::Not(Box::new(self.value(a, out)?))),
            Kind::Cond(c, a, b) => {
                let xc = self.value(c, out)?;
                let (mut sa, mut sb) = (Vec::new(), Vec::new());
                let xa = self.value(a, &mut sa)?;
                let xb = self.value(b, &mut sb)?;
                if sa.is_empty() && sb.is_empty() {
                    return Ok(Expr::Cond(Box::new(xc), Box::new(xa), Box::new(xb)));
                }
                let v = self.fresh("v");
                let zero = n
                    .typ
                    .default_lit()
                    .ok_or_else(|| CodeError::Internal("conditional of non-scalar type".into()))?;
                out.push(Stmt::Decl {
                    ty: ctype(n.typ)?,
                    name: v.clone(),
                    init: lit_expr(zero)?,
                    konst: false,
                });
                sa.push(Stmt::Assign(v.clone(), xa));
                sb.push(Stmt::Assign(v.clone(), xb));
                out.push(Stmt::If(xc, sa, sb));
                Ok(Expr::Var(v))
            }
            Kind::ArrLen(a) => Ok(Expr::Name(format!("{}_len", self.array(a)?))),
            Kind::ArrGet(a, i) => {
                let arr = self.array(a)?;
                Ok(Expr::Index(arr, Box::new(self.value(i, out)?)))
            }
            Kind::NewVar { sym, init, body } => {
                let e = self.value(init, out)?;
                let v = self.fresh("v");
                out.push(Stmt::Decl {
                    ty: ctype(init.typ)?,
                    name: v.clone(),
                    init: e,
                    konst: false,
                });
                self.scoped(*sym, v, |l| l.value(body, out))
            }
            Kind::Let { sym, init, body } => {
                let e = self.value(init, out)?;
                let t = self.fresh("t");
                out.push(Stmt::Decl {
                    ty: ctype(init.typ)?,
                    name: t.clone(),
                    init: e,
                    konst: true,
                });
                self.scoped(*sym, t, |l| l.value(body, out))
            }
            Kind::Seq(a, b) => {
                self.stmt(a, out)?;
                self.value(b, out)
            }
            _ => Err(CodeError::Internal("statement used as an expression".into())),
        }
    }

    fn stmt(&mut self, n: &Node, out: &mut Vec<Stmt>) -> Result<(), CodeError> {
        match &n.kind {
            Kind::Lit(Lit::Unit) => Ok(()),
            Kind::NewVar { sym, init, body } => {
                let e = self.value(init, out)?;
                let v = self.fresh("v");
                out.push(Stmt::Decl {
                    ty: ctype(init.typ)?,
                    name: v.clone(),
                    init: e,
                    konst: false,
                });
                self.scoped(*sym, v, |l| l.stmt(body, out))
            }
            Kind::Let { sym, init, body } => {
                let e = self.value(init, out)?;
                let t = self.fresh("t");
                out.push(Stmt::Decl {
                    ty: ctype(init.typ)?,
                    name: t.clone(),
                    init: e,
                    konst: true,
                });
                self.scoped(*sym, t, |l| l.stmt(body, out))
            }
            Kind::Seq(a, b) => {
                self.stmt(a, out)?;
                self.stmt(b, out)
            }
            Kind::Write(sym, x) => {
                let e = self.value(x, out)?;
                out.push(Stmt::Assign(self.name(*sym)?, e));
                Ok(())
            }
            Kind::If(c, t, e) => {
                let xc = self.value(c, out)?;
                let bt = self.block(t)?;
                let be = match e {
                    Some(e) => self.block(e)?,
                    None => Vec::new(),
                };
                match (bt.is_empty(), be.is_empty()) {
                    (true, true) => {}
                    (true, false) => out.push(Stmt::If(Expr::Not(Box::new(xc)), be, Vec::new())),
                    _ => out.push(Stmt::If(xc, bt, be)),
                }
                Ok(())
            }
            Kind::While(g, b) => {
                let mut pre = Vec::new();
                let xg = self.value(g, &mut pre)?;
                let body = self.block(b)?;
                if pre.is_empty() {
                    out.push(Stmt::While(xg, body));
                } else {
                    pre.push(Stmt::If(Expr::Not(Box::new(xg)), vec![Stmt::Break], Vec::new()));
                    pre.extend(body);
                    out.push(Stmt::While(Expr::Lit("1".into()), pre));
                }
                Ok(())
            }
            Kind::For { sym, lo, hi, body } => {
                let (xl, mut xh) = self.operands(lo, hi, out)?;
                if !xh.stable() {
                    let t = self.fresh("t");
                    out.push(Stmt::Decl {
                        ty: "int",
                        name: t.clone(),
                        init: xh,
                        konst: true,
                    });
                    xh = Expr::Name(t);
                }
                let idx = self.fresh("i");
                let body = self.scoped(*sym, idx.clone(), |l| l.block(body))?;
                out.push(Stmt::For {
                    idx,
                    lo: xl,
                    hi: xh,
                    body,
                });
                Ok(())
            }
            Kind::ArrSet(sym, i, x) => {
                let (ei, ex) = self.operands(i, x, out)?;
                out.push(Stmt::Store(self.name(*sym)?, ei, ex));
                Ok(())
            }
            _ => Err(CodeError::Internal(format!(
                "expression of type {} used as a statement",
                n.typ
            ))),
        }
    }
}

/// Counts uses of every name. A variable's own name on the right of its
/// assignment does not count, so write-only cells are found dead.
fn count_uses<'a>(stmts: &'a [Stmt], uses: &mut HashMap<&'a str, usize>) {
    let add = |e: &'a Expr, skip: Option<&str>, uses: &mut HashMap<&'a str, usize>| {
        let mut ns = Vec::new();
        e.names(&mut ns);
        for n in ns {
            if Some(n) != skip {
                *uses.entry(n).or_default() += 1;
            }
        }
    };
    for s in stmts {
        match s {
            Stmt::Decl { init, .. } => add(init, None, uses),
            Stmt::Assign(v, e) => add(e, Some(v), uses),
            Stmt::Store(arr, i, x) => {
                *uses.entry(arr.as_str()).or_default() += 1;
                add(i, None, uses);
                add(x, None, uses);
            }
            Stmt::If(c, t, e) => {
                add(c, None, uses);
                count_uses(t, uses);
                count_uses(e, uses);
            }
            Stmt::While(g, b) => {
                add(g, None, uses);
                count_uses(b, uses);
            }
            Stmt::For { lo, hi, body, .. } => {
                add(lo, None, uses);
                add(hi, None, uses);
                count_uses(body, uses);
            }
            Stmt::Break => {}
        }
    }
}

fn remove_dead(stmts: Vec<Stmt>, dead: &HashSet<String>) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        match s {
            Stmt::Decl { ref name, .. } | Stmt::Assign(ref name, _) if dead.contains(name) => {}
            Stmt::If(c, t, e) => {
                let (t, e) = (remove_dead(t, dead), remove_dead(e, dead));
                match (t.is_empty(), e.is_empty()) {
                    (true, true) => {}
                    (true, false) => out.push(Stmt::If(Expr::Not(Box::new(c)), e, Vec::new())),
                    _ => out.push(Stmt::If(c, t, e)),
                }
            }
            Stmt::While(g, b) => out.push(Stmt::While(g, remove_dead(b, dead))),
            Stmt::For { idx, lo, hi, body } => out.push(Stmt::For {
                idx,
                lo,
                hi,
                body: remove_dead(body, dead),
            }),
            s => out.push(s),
        }
    }
    out
}

fn declared(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        match s {
            Stmt::Decl { name, .. } => out.push(name.clone()),
            Stmt::If(_, t, e) => {
                declared(t, out);
                declared(e, out);
            }
            Stmt::While(_, b) | Stmt::For { body: b, .. } => declared(b, out),
            _ => {}
        }
    }
}

/// Removes locals that are never read, until none remain.
fn eliminate_dead(mut stmts: Vec<Stmt>, ret: Option<&Expr>) -> Vec<Stmt> {
    loop {
        let mut uses = HashMap::new();
        count_uses(&stmts, &mut uses);
        let mut ret_names = Vec::new();
        if let Some(r) = ret {
            r.names(&mut ret_names);
        }
        for n in ret_names {
            *uses.entry(n).or_default() += 1;
        }
        let mut decls = Vec::new();
        declared(&stmts, &mut decls);
        let dead: HashSet<String> = decls
            .into_iter()
            .filter(|d| !uses.contains_key(d.as_str()))
            .collect();
        if dead.is_empty() {
            return stmts;
        }
        stmts = remove_dead(stmts, &dead);
    }
}

fn print_stmts(stmts: &[Stmt], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for s in stmts {
        match s {
            Stmt::Decl {
                ty,
                name,
                init,
                konst,
            } => {
                let q = if *konst { "const " } else { "" };
                let _ = writeln!(out, "{pad}{q}{ty} {name} = {};", init.render(true));
            }
            Stmt::Assign(v, e) => {
                let step = match e {
                    Expr::Bin(op @ ("+" | "-"), a, b)
                        if matches!(&**a, Expr::Var(n) if n == v)
                            && matches!(&**b, Expr::Lit(l) if l == "1") =>
                    {
                        Some(if *op == "+" { "++" } else { "--" })
                    }
                    _ => None,
                };
                match step {
                    Some(op) => {
                        let _ = writeln!(out, "{pad}{v}{op};");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{v} = {};", e.render(true));
                    }
                }
            }
            Stmt::Store(arr, i, x) => {
                let _ = writeln!(out, "{pad}{arr}[{}] = {};", i.render(true), x.render(true));
            }
            Stmt::If(c, t, e) => {
                let _ = writeln!(out, "{pad}if ({}) {{", c.render(true));
                print_stmts(t, depth + 1, out);
                if e.is_empty() {
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    let _ = writeln!(out, "{pad}}} else {{");
                    print_stmts(e, depth + 1, out);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            Stmt::While(g, b) => {
                let _ = writeln!(out, "{pad}while ({}) {{", g.render(true));
                print_stmts(b, depth + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::For { idx, lo, hi, body } => {
                let _ = writeln!(
                    out,
                    "{pad}for (int {idx} = {}; {idx} <= {}; {idx}++) {{",
                    lo.render(true),
                    hi.render(true)
                );
                print_stmts(body, depth + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::Break => {
                let _ = writeln!(out, "{pad}break;");
            }
        }
    }
}

fn stores(stmts: &[Stmt], out: &mut HashSet<String>) {
    for s in stmts {
        match s {
            Stmt::Store(arr, ..) => {
                out.insert(arr.clone());
            }
            Stmt::If(_, t, e) => {
                stores(t, out);
                stores(e, out);
            }
            Stmt::While(_, b) | Stmt::For { body: b, .. } => stores(b, out),
            _ => {}
        }
    }
}

/// Renders a unit built by any tree backend as a C translation unit.
pub fn render(u: &EmitUnit) -> Result<CSrc, CodeError> {
    let root = validate_unit(u)?;
    let mut low = Lower {
        names: u.params().iter().map(|p| (p.sym, p.name.clone())).collect(),
        counter: 0,
    };
    let mut body = Vec::new();
    let ret = if u.ret() == SemType::Unit {
        low.stmt(root, &mut body)?;
        None
    } else {
        Some(low.value(root, &mut body)?)
    };
    let body = eliminate_dead(body, ret.as_ref());

    let mut written = HashSet::new();
    stores(&body, &mut written);
    let mut uses = HashMap::new();
    count_uses(&body, &mut uses);
    let mut ret_names = Vec::new();
    if let Some(r) = &ret {
        r.names(&mut ret_names);
    }

    let mut params = Vec::new();
    let mut unused = Vec::new();
    let is_used = |n: &str| uses.contains_key(n) || ret_names.contains(&n);
    for p in u.params() {
        let names = match p.typ {
            SemType::Arr(e) => {
                let q = if written.contains(&p.name) { "" } else { "const " };
                let ty = ctype(e.sem())?;
                params.push(format!("{q}{ty} *{}", p.name));
                params.push(format!("int {}_len", p.name));
                vec![p.name.clone(), format!("{}_len", p.name)]
            }
            t => {
                params.push(format!("{} {}", ctype(t)?, p.name));
                vec![p.name.clone()]
            }
        };
        unused.extend(names.into_iter().filter(|n| !is_used(n)));
    }
    let ret_ty = match u.ret() {
        SemType::Unit => "void",
        t => ctype(t)?,
    };
    let plist = if params.is_empty() {
        "void".to_string()
    } else {
        params.join(", ")
    };
    let signature = format!("{ret_ty} {}({plist})", u.name());

    let mut text = format!("{signature}\n{{\n");
    for n in &unused {
        let _ = writeln!(text, "  (void){n};");
    }
    print_stmts(&body, 1, &mut text);
    if let Some(r) = ret {
        let _ = writeln!(text, "  return {};", r.render(true));
    }
    text.push_str("}\n");
    Ok(CSrc {
        text,
        fn_name: u.name().to_string(),
        signature,
    })
}
