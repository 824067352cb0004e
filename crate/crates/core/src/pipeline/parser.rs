use super::lexer::{lex, Tok};
use super::{
    BinOp, Chain, DiagKind, Diagnostic, Expr, ExprKind, Op, ParamDecl, ParamType, PipelineDesc, Pos, Sink,
    Source, Step, UnOp, FORMAT_VERSION, OP_NAMES, RESERVED, SINK_NAMES, SOURCE_NAMES,
};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

/// Parses a pipeline description. Names and types are not checked; see
/// [`check`](super::check).
pub fn parse_pipeline(text: &str) -> PResult<PipelineDesc> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let d = p.pipeline()?;
    p.expect_eof()?;
    Ok(d)
}

/// Parses one action expression.
pub fn parse_expr(text: &str) -> PResult<Expr> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

fn syntax(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(pos, DiagKind::Syntax, msg)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat(p) {
            Ok(pos)
        } else {
            Err(syntax(
                pos,
                format!("expected `{p}`, found {}", self.peek().describe()),
            ))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(syntax(
                self.pos(),
                format!("unexpected {} after the end", t.describe()),
            )),
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.bump() {
            (Tok::Ident(s), pos) => Ok((s, pos)),
            (t, pos) => Err(syntax(pos, format!("expected {what}, found {}", t.describe()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        let (s, pos) = self.ident(&format!("`{kw}`"))?;
        if s == kw {
            Ok(())
        } else {
            Err(syntax(pos, format!("expected `{kw}`, found `{s}`")))
        }
    }

    fn pipeline(&mut self) -> PResult<PipelineDesc> {
        if matches!(self.peek(), Tok::Ident(s) if s == "version") {
            self.bump();
            let pos = self.pos();
            let v = match self.bump().0 {
                Tok::Int(s) => s.parse::<u32>().ok(),
                _ => None,
            };
            match v {
                Some(FORMAT_VERSION) => {}
                Some(v) => {
                    return Err(Diagnostic::new(
                        pos,
                        DiagKind::Version(v),
                        format!("unsupported format version {v}; this build reads {FORMAT_VERSION}"),
                    ))
                }
                None => return Err(syntax(pos, "expected a version number")),
            }
        }
        self.keyword("pipeline")?;
        let (name, _) = self.ident("a pipeline name")?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let (pname, ppos) = self.ident("a parameter name")?;
                self.expect(":")?;
                let (tname, tpos) = self.ident("a parameter type")?;
                let ty = ParamType::from_keyword(&tname).ok_or_else(|| {
                    Diagnostic::new(
                        tpos,
                        DiagKind::Type,
                        format!("unknown parameter type `{tname}`; expected int, int_array or double_array"),
                    )
                })?;
                if params.iter().any(|p: &ParamDecl| p.name == pname) {
                    return Err(Diagnostic::new(
                        ppos,
                        DiagKind::Duplicate(pname.clone()),
                        format!("parameter `{pname}` is declared twice"),
                    ));
                }
                params.push(ParamDecl { name: pname, ty });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect("=")?;
        let chain = self.chain(true)?;
        self.expect("|>")?;
        let sink = self.sink()?;
        Ok(PipelineDesc {
            name,
            params,
            chain,
            sink,
        })
    }

    /// Reads a source and its operations. At top level the chain stops
    /// before a sink.
    fn chain(&mut self, top: bool) -> PResult<Chain> {
        let pos = self.pos();
        let source = self.source()?;
        let mut ops = Vec::new();
        while self.is_punct("|>") {
            if let Tok::Ident(s) = self.peek_at(1) {
                if SINK_NAMES.contains(&s.as_str()) {
                    if top {
                        break;
                    }
                    let at = self.toks[self.at + 1].1;
                    return Err(syntax(at, format!("sink `{s}` can only end the whole pipeline")));
                }
            }
            self.bump();
            ops.push(self.op()?);
        }
        Ok(Chain { source, ops, pos })
    }

    fn args_start(&mut self, name: &str) -> PResult<()> {
        if self.is_punct("(") {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `(` after `{name}`")))
        }
    }

    /// Closes an argument list, reporting extra arguments as an arity error.
    fn args_end(&mut self, name: &str, expected: usize, open: Pos) -> PResult<()> {
        if self.eat(")") {
            return Ok(());
        }
        if self.is_punct(",") {
            let mut found = expected;
            while self.eat(",") {
                self.skip_arg()?;
                found += 1;
            }
            return Err(Diagnostic::new(
                open,
                DiagKind::Arity {
                    op: name.into(),
                    expected,
                    found,
                },
                format!("`{name}` takes {expected} argument(s), found {found}"),
            ));
        }
        Err(syntax(
            self.pos(),
            format!("expected `)`, found {}", self.peek().describe()),
        ))
    }

    fn skip_arg(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return Err(syntax(self.pos(), "unclosed `(`")),
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") if depth == 0 => return Ok(()),
                Tok::Punct(")") => depth -= 1,
                Tok::Punct(",") if depth == 0 => return Ok(()),
                _ => {}
            }
            self.bump();
        }
    }

    /// Reads the argument at `idx`, or reports too few arguments.
    fn arg<T>(
        &mut self,
        name: &str,
        idx: usize,
        expected: usize,
        open: Pos,
        read: impl FnOnce(&mut Self) -> PResult<T>,
    ) -> PResult<T> {
        if idx > 0 && !self.eat(",") || self.is_punct(")") {
            return Err(Diagnostic::new(
                open,
                DiagKind::Arity {
                    op: name.into(),
                    expected,
                    found: idx,
                },
                format!("`{name}` takes {expected} argument(s), found {idx}"),
            ));
        }
        read(self)
    }

    fn source(&mut self) -> PResult<Source> {
        let (name, pos) = self.ident("a stream source")?;
        if !SOURCE_NAMES.contains(&name.as_str()) {
            let msg = if OP_NAMES.contains(&name.as_str()) {
                format!("`{name}` needs a stream before it; expected one of iota, of_arr, range, zip_with")
            } else {
                format!("unknown stream source `{name}`")
            };
            return Err(Diagnostic::new(pos, DiagKind::UnknownOp(name), msg));
        }
        self.args_start(&name)?;
        let n = name.as_str();
        let src = match n {
            "iota" => {
                let e = self.arg(n, 0, 1, pos, |p| p.expr())?;
                self.args_end(n, 1, pos)?;
                Source::Iota(e)
            }
            "of_arr" => {
                let (a, _) = self.arg(n, 0, 1, pos, |p| p.ident("an array parameter"))?;
                self.args_end(n, 1, pos)?;
                Source::OfArr(a)
            }
            "range" => {
                let lo = self.arg(n, 0, 2, pos, |p| p.expr())?;
                let hi = self.arg(n, 1, 2, pos, |p| p.expr())?;
                self.args_end(n, 2, pos)?;
                Source::Range(lo, hi)
            }
            _ => {
                let f = self.arg(n, 0, 3, pos, |p| p.expr())?;
                let left = self.arg(n, 1, 3, pos, |p| p.chain(false))?;
                let right = self.arg(n, 2, 3, pos, |p| p.chain(false))?;
                self.args_end(n, 3, pos)?;
                Source::ZipWith {
                    f,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
        };
        Ok(src)
    }

    fn op(&mut self) -> PResult<Step> {
        let (name, pos) = self.ident("an operation")?;
        if !OP_NAMES.contains(&name.as_str()) {
            let msg = if SOURCE_NAMES.contains(&name.as_str()) {
                format!("`{name}` starts a stream and cannot follow `|>`")
            } else {
                format!(
                    "unknown operation `{name}`; expected one of {}",
                    OP_NAMES.join(", ")
                )
            };
            return Err(Diagnostic::new(pos, DiagKind::UnknownOp(name), msg));
        }
        self.args_start(&name)?;
        let n = name.as_str();
        let one = |p: &mut Self| -> PResult<Expr> {
            let e = p.arg(n, 0, 1, pos, |p| p.expr())?;
            p.args_end(n, 1, pos)?;
            Ok(e)
        };
        let op = match n {
            "map" => Op::Map(one(self)?),
            "filter" => Op::Filter(one(self)?),
            "take" => Op::Take(one(self)?),
            "take_while" => Op::TakeWhile(one(self)?),
            "drop" => Op::Drop(one(self)?),
            "drop_while" => Op::DropWhile(one(self)?),
            "flat_map" => {
                let (var, body) = self.arg(n, 0, 1, pos, |p| {
                    let (var, vpos) = p.ident("a name for the outer element")?;
                    if RESERVED.contains(&var.as_str()) {
                        return Err(syntax(
                            vpos,
                            format!("`{var}` is reserved and cannot name the outer element"),
                        ));
                    }
                    p.expect("=>")?;
                    Ok((var, p.chain(false)?))
                })?;
                self.args_end(n, 1, pos)?;
                Op::FlatMap {
                    var,
                    body: Box::new(body),
                }
            }
            _ => {
                let init = self.arg(n, 0, 3, pos, |p| p.expr())?;
                let next = self.arg(n, 1, 3, pos, |p| p.expr())?;
                let out = self.arg(n, 2, 3, pos, |p| p.expr())?;
                self.args_end(n, 3, pos)?;
                Op::MapAccum { init, next, out }
            }
        };
        Ok(Step { op, pos })
    }

    fn sink(&mut self) -> PResult<Sink> {
        let (name, pos) = self.ident("a sink")?;
        match name.as_str() {
            "sum" => Ok(Sink::Sum),
            "iter_count" => Ok(Sink::IterCount),
            "fold" => {
                self.args_start("fold")?;
                let init = self.arg("fold", 0, 2, pos, |p| p.expr())?;
                let step = self.arg("fold", 1, 2, pos, |p| p.expr())?;
                self.args_end("fold", 2, pos)?;
                Ok(Sink::Fold { init, step })
            }
            _ => {
                let msg = if OP_NAMES.contains(&name.as_str()) {
                    format!("`{name}` cannot end a pipeline; expected a sink: sum, fold or iter_count")
                } else {
                    format!("unknown sink `{name}`; expected sum, fold or iter_count")
                };
                Err(Diagnostic::new(pos, DiagKind::UnknownOp(name), msg))
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let c = self.binary(1)?;
        if !self.is_punct("?") {
            return Ok(c);
        }
        let pos = c.pos;
        self.bump();
        let a = self.expr()?;
        self.expect(":")?;
        let b = self.expr()?;
        Ok(Expr {
            kind: ExprKind::Cond(Box::new(c), Box::new(a), Box::new(b)),
            pos,
        })
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        BinOp::ALL.into_iter().find(|op| op.symbol() == *p)
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop().filter(|op| op.prec() >= min) {
            let pos = self.pos();
            self.bump();
            let rhs = self.binary(op.prec() + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat("!") {
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Not, Box::new(e)),
                pos,
            });
        }
        if self.eat("-") {
            // A literal right after the sign is a negative literal.
            match self.peek().clone() {
                Tok::Int(s) => {
                    self.bump();
                    let v = parse_int(&format!("-{s}"), pos)?;
                    return Ok(Expr {
                        kind: ExprKind::Int(v),
                        pos,
                    });
                }
                Tok::Float(v) => {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Float(-v),
                        pos,
                    });
                }
                _ => {}
            }
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Neg, Box::new(e)),
                pos,
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let (tok, pos) = self.bump();
        let kind = match tok {
            Tok::Int(s) => ExprKind::Int(parse_int(&s, pos)?),
            Tok::Float(v) => ExprKind::Float(v),
            Tok::Ident(s) if s == "true" => ExprKind::Bool(true),
            Tok::Ident(s) if s == "false" => ExprKind::Bool(false),
            Tok::Ident(s) => ExprKind::Var(s),
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                return Ok(e);
            }
            t => {
                return Err(syntax(
                    pos,
                    format!("expected an expression, found {}", t.describe()),
                ))
            }
        };
        Ok(Expr { kind, pos })
    }
}

fn parse_int(s: &str, pos: Pos) -> PResult<i32> {
    s.parse()
        .map_err(|_| syntax(pos, format!("integer literal {s} does not fit in 32 bits")))
}
