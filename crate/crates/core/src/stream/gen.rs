//! Code generation for streams: direct driving, zipping, and linearization.

use std::sync::Arc;

use super::{
    check_arity, Binding, Emit, Env, ExprFn, Init, InitKind, Linearity, Once, Producer, StateKey, StreamRep,
    Transform,
};
use crate::backend::{Backend, Code, CodeError, CodeVal, SemType, VarRef};

/// A stream in pulled form.
///
/// Running `advance` either stores the next element in `holders` and sets
/// `has_elem`, or sets `done`.
pub struct Linearized {
    pub has_elem: VarRef,
    pub done: VarRef,
    pub holders: Vec<VarRef>,
    pub advance: CodeVal,
}

type StepFn = Box<dyn FnOnce(&dyn Backend, Emit<'_>) -> Code>;

/// One step of a stream, as a state machine.
struct Machine {
    guard: Option<CodeVal>,
    step: StepFn,
    /// Re-initializes the machine's state; empty unless it was deferred.
    reset: Vec<CodeVal>,
}

/// Names every non-atomic value so later uses do not recompute it.
pub(super) fn bind_atoms(b: &dyn Backend, xs: &[CodeVal], k: Emit<'_>) -> Code {
    fn go(b: &dyn Backend, done: &mut Vec<CodeVal>, rest: &[CodeVal], k: Emit<'_>) -> Code {
        let Some((x, rest)) = rest.split_first() else {
            return k(done);
        };
        if x.is_atomic() {
            done.push(x.clone());
            let r = go(b, done, rest, k);
            done.pop();
            r
        } else {
            b.letb(x, &mut |t| {
                done.push(t.clone());
                let r = go(b, done, rest, &mut *k);
                done.pop();
                r
            })
        }
    }
    go(b, &mut Vec::with_capacity(xs.len()), xs, k)
}

fn guard_of(b: &dyn Backend, guards: &[ExprFn], env: &Env) -> Result<Option<CodeVal>, CodeError> {
    let gs = guards.iter().map(|g| g(b, env)).collect::<Result<Vec<_>, _>>()?;
    b.and_all(&gs)
}

fn declare_holders(b: &dyn Backend, types: &[SemType], k: &mut dyn FnMut(&[VarRef]) -> Code) -> Code {
    fn go(
        b: &dyn Backend,
        done: &mut Vec<VarRef>,
        rest: &[SemType],
        k: &mut dyn FnMut(&[VarRef]) -> Code,
    ) -> Code {
        let Some((t, rest)) = rest.split_first() else {
            return k(done);
        };
        let zero = t
            .default_lit()
            .ok_or_else(|| CodeError::Internal(format!("no stream element of type {t}")))?;
        b.new_var(&b.lit(zero)?, &mut |v| {
            done.push(v.clone());
            let r = go(b, done, rest, &mut *k);
            done.pop();
            r
        })
    }
    go(b, &mut Vec::new(), types, k)
}

/// Runs `x` through the transforms, then hands it to `k`.
pub(super) fn apply(b: &dyn Backend, ts: &[Transform], env: &Env, x: &[CodeVal], k: Emit<'_>) -> Code {
    let Some((t, rest)) = ts.split_first() else {
        return k(x);
    };
    match t {
        Transform::Map { f, out } => {
            let ys = f(b, env, x)?;
            check_arity("map output", out.len(), ys.len())?;
            bind_atoms(b, &ys, &mut |ys| apply(b, rest, env, ys, &mut *k))
        }
        Transform::Filter { f } | Transform::Tap { f, .. } => {
            f(b, env, x, &mut |y| apply(b, rest, env, y, &mut *k))
        }
        Transform::Flat { inner, guards, out } => {
            let mut s = inner(b, env, x)?;
            check_inner(&s, out)?;
            for g in guards {
                s.add_guard(g.clone());
            }
            drive(b, s, env, &mut |y| apply(b, rest, env, y, &mut *k))
        }
    }
}

fn check_inner(s: &StreamRep, out: &[SemType]) -> Result<(), CodeError> {
    if s.types() == out {
        Ok(())
    } else {
        Err(CodeError::TypeMismatch {
            op: "flat_map",
            expected: format!("{out:?}"),
            found: s.types().first().copied().unwrap_or(SemType::Unit),
        })
    }
}

/// Declares the state in `inits`, then continues with it in scope.
///
/// When `deferred`, cells start at zero and the statements that give them
/// their real initial values are collected instead of run.
fn bind_inits(
    b: &dyn Backend,
    inits: &[Init],
    env: &Env,
    deferred: bool,
    resets: Vec<CodeVal>,
    k: &mut dyn FnMut(&Env, Vec<CodeVal>) -> Code,
) -> Code {
    let Some((init, rest)) = inits.split_first() else {
        return k(env, resets);
    };
    let key = init.key;
    let deferred_var = |x: CodeVal, k: &mut dyn FnMut(&Env, Vec<CodeVal>) -> Code| {
        let zero = init
            .typ
            .default_lit()
            .ok_or_else(|| CodeError::Internal(format!("no stream state of type {}", init.typ)))?;
        b.new_var(&b.lit(zero)?, &mut |v| {
            let mut r = resets.clone();
            r.push(b.write(v, &x)?);
            bind_inits(b, rest, &env.bind(key, Binding::Var(v.clone())), true, r, &mut *k)
        })
    };
    match &init.kind {
        InitKind::Var(e) => {
            let x = e(b, env)?;
            if deferred {
                deferred_var(x, k)
            } else {
                b.new_var(&x, &mut |v| {
                    let env = env.bind(key, Binding::Var(v.clone()));
                    bind_inits(b, rest, &env, false, resets.clone(), &mut *k)
                })
            }
        }
        InitKind::Let(e) => {
            let x = e(b, env)?;
            if x.as_const().is_some() || (!deferred && x.is_atomic()) {
                let env = env.bind(key, Binding::Val(x));
                bind_inits(b, rest, &env, deferred, resets, k)
            } else if deferred {
                deferred_var(x, k)
            } else {
                b.letb(&x, &mut |t| {
                    let env = env.bind(key, Binding::Val(t.clone()));
                    bind_inits(b, rest, &env, false, resets.clone(), &mut *k)
                })
            }
        }
        InitKind::Pull(s) => bind_pull(b, s.take()?, key, env, deferred, &mut |env, more| {
            let mut r = resets.clone();
            r.extend(more);
            bind_inits(b, rest, env, deferred, r, &mut *k)
        }),
    }
}

/// Drives a stream as a loop nest in the current scope.
pub(super) fn drive(b: &dyn Backend, s: StreamRep, env: &Env, k: Emit<'_>) -> Code {
    let StreamRep {
        inits,
        producer,
        transforms,
        ..
    } = s;
    bind_inits(b, &inits, env, false, Vec::new(), &mut |env, _| match &producer {
        Producer::Counted { bound, body } => {
            let hi = bound(b, env)?;
            let lo = b.int(0)?;
            b.for_(&lo, &hi, &mut |i| {
                body(b, env, i, &mut |x| apply(b, &transforms, env, x, &mut *k))
            })
        }
        Producer::Guarded { guards, step } => {
            let guard = match guard_of(b, guards, env)? {
                Some(g) => g,
                None => b.bool(true)?,
            };
            let body = step(b, env, &mut |x| apply(b, &transforms, env, x, &mut *k))?;
            b.while_(&guard, &body)
        }
    })
}

/// Declares the state of `s` and builds the state machine for one step.
///
/// Each nested stream becomes an `in_inner` flag plus holders for the
/// element that created it; its own state is declared once, up front, and
/// re-initialized whenever a new outer element arrives.
fn unfold(
    b: &dyn Backend,
    mut s: StreamRep,
    env: &Env,
    deferred: bool,
    k: &mut dyn FnMut(&Env, Machine) -> Code,
) -> Code {
    s.make_guarded();
    let Producer::Guarded { guards, step } = s.producer.clone() else {
        return Err(CodeError::Internal("producer was not made guarded".into()));
    };
    let split = s
        .transforms
        .iter()
        .position(|t| matches!(t, Transform::Flat { .. }));
    let inits = std::mem::take(&mut s.inits);
    bind_inits(b, &inits, env, deferred, Vec::new(), &mut |env1, resets| {
        let guard = guard_of(b, &guards, env1)?;
        let Some(j) = split else {
            let (step, ts, envc) = (step.clone(), s.transforms.clone(), env1.clone());
            let run = Box::new(move |b: &dyn Backend, kk: Emit<'_>| {
                step(b, &envc, &mut |x| apply(b, &ts, &envc, x, &mut *kk))
            });
            return k(
                env1,
                Machine {
                    guard,
                    step: run,
                    reset: resets,
                },
            );
        };
        let Transform::Flat {
            inner,
            guards: fguards,
            out,
        } = &s.transforms[j]
        else {
            return Err(CodeError::Internal("split is not at a flat_map".into()));
        };
        let in_types = s.types_before(j).to_vec();
        let prefix = s.transforms[..j].to_vec();
        let suffix = s.transforms[j + 1..].to_vec();
        b.new_var(&b.bool(false)?, &mut |in_inner| {
            declare_holders(b, &in_types, &mut |holders| {
                let xs = holders.iter().map(|h| b.read(h)).collect::<Result<Vec<_>, _>>()?;
                let mut si = inner(b, env1, &xs)?;
                check_inner(&si, out)?;
                for g in fguards {
                    si.add_guard(g.clone());
                }
                si.transforms.extend(suffix.iter().cloned());
                unfold(b, si, env1, true, &mut |env2, m_in| {
                    let mut reset = resets.clone();
                    if deferred {
                        reset.push(b.write(in_inner, &b.bool(false)?)?);
                    }
                    let guard = match &guard {
                        Some(g) => Some(b.or(&b.read(in_inner)?, g)?),
                        None => None,
                    };
                    let (step, prefix, envo) = (step.clone(), prefix.clone(), env1.clone());
                    let (flag, hs) = (in_inner.clone(), holders.to_vec());
                    let Machine {
                        guard: g_in,
                        step: step_in,
                        reset: reset_in,
                    } = m_in;
                    let run = Box::new(move |b: &dyn Backend, kk: Emit<'_>| {
                        let stepped = step_in(b, &mut *kk)?;
                        let inner_code = match g_in {
                            Some(g) => {
                                let leave = b.write(&flag, &b.bool(false)?)?;
                                b.if_(&g, &stepped, Some(&leave))?
                            }
                            None => stepped,
                        };
                        let outer_code = step(b, &envo, &mut |x| {
                            apply(b, &prefix, &envo, x, &mut |y| {
                                let mut ss = Vec::with_capacity(hs.len() + reset_in.len() + 1);
                                for (h, v) in hs.iter().zip(y) {
                                    ss.push(b.write(h, v)?);
                                }
                                ss.extend(reset_in.iter().cloned());
                                ss.push(b.write(&flag, &b.bool(true)?)?);
                                b.seq_all(&ss)
                            })
                        })?;
                        b.if_(&b.read(&flag)?, &inner_code, Some(&outer_code))
                    });
                    k(
                        env2,
                        Machine {
                            guard,
                            step: run,
                            reset,
                        },
                    )
                })
            })
        })
    })
}

/// Declares the pulled form of `s` under `key`.
pub(super) fn bind_pull(
    b: &dyn Backend,
    s: StreamRep,
    key: StateKey,
    env: &Env,
    deferred: bool,
    k: &mut dyn FnMut(&Env, Vec<CodeVal>) -> Code,
) -> Code {
    let types = s.types().to_vec();
    let s = Once::new(s);
    b.new_var(&b.bool(false)?, &mut |has| {
        b.new_var(&b.bool(false)?, &mut |done| {
            declare_holders(b, &types, &mut |holders| {
                unfold(b, s.take()?, env, deferred, &mut |env1, m| {
                    let Machine { guard, step, reset } = m;
                    let stepped = step(b, &mut |x| {
                        let mut ss = Vec::with_capacity(holders.len() + 1);
                        for (h, v) in holders.iter().zip(x) {
                            ss.push(b.write(h, v)?);
                        }
                        ss.push(b.write(has, &b.bool(true)?)?);
                        b.seq_all(&ss)
                    })?;
                    let body = match guard {
                        Some(g) => b.if_(&g, &stepped, Some(&b.write(done, &b.bool(true)?)?))?,
                        None => stepped,
                    };
                    let more = b.and(&b.not(&b.read(has)?)?, &b.not(&b.read(done)?)?)?;
                    let advance = b.seq(&b.write(has, &b.bool(false)?)?, &b.while_(&more, &body)?)?;
                    let lin = Linearized {
                        has_elem: has.clone(),
                        done: done.clone(),
                        holders: holders.to_vec(),
                        advance,
                    };
                    let mut reset = reset;
                    if deferred {
                        reset.push(b.write(has, &b.bool(false)?)?);
                        reset.push(b.write(done, &b.bool(false)?)?);
                    }
                    k(&env1.bind(key, Binding::Pull(Arc::new(lin))), reset)
                })
            })
        })
    })
}

pub(super) fn zip(mut s1: StreamRep, mut s2: StreamRep) -> Result<StreamRep, CodeError> {
    let types: Vec<SemType> = [s1.types(), s2.types()].concat();
    let linear = (s1.linearity(), s2.linearity());
    if linear == (Linearity::Linear, Linearity::Linear) {
        if s1.is_counted() && s2.is_counted() {
            return Ok(zip_counted(s1, s2, types));
        }
        s1.make_guarded();
        s2.make_guarded();
        let (Producer::Guarded { guards: g1, step: p1 }, Producer::Guarded { guards: g2, step: p2 }) =
            (s1.producer.clone(), s2.producer.clone())
        else {
            return Err(CodeError::Internal("producers were not made guarded".into()));
        };
        let (t1, t2) = (s1.transforms, s2.transforms);
        let step: super::StepFn = Arc::new(move |b, env, k| {
            p1(b, env, &mut |x| {
                apply(b, &t1, env, x, &mut |x| {
                    let x = x.to_vec();
                    p2(b, env, &mut |y| {
                        apply(b, &t2, env, y, &mut |y| k(&[x.as_slice(), y].concat()))
                    })
                })
            })
        });
        let mut inits = s1.inits;
        inits.extend(s2.inits);
        return Ok(StreamRep {
            inits,
            producer: Producer::Guarded {
                guards: [g1, g2].concat(),
                step,
            },
            ptypes: types,
            transforms: Vec::new(),
            owner: None,
        });
    }

    // One side is pulled element by element from inside the other's loop.
    // Ties go to pulling the right side.
    let pull_left = linear == (Linearity::Nonlinear, Linearity::Linear);
    let (mut driver, pulled) = if pull_left { (s2, s1) } else { (s1, s2) };
    let key = StateKey::fresh();
    driver.inits.push(Init {
        key,
        typ: SemType::Unit,
        kind: InitKind::Pull(Once::new(pulled)),
    });
    driver.add_guard(Arc::new(move |b, env| b.not(&b.read(&env.pull(key)?.done)?)));
    Ok(driver.tap_raw(
        types,
        Arc::new(move |b, env, x, k| {
            let p = env.pull(key)?;
            let held = p
                .holders
                .iter()
                .map(|h| b.read(h))
                .collect::<Result<Vec<_>, _>>()?;
            let x = x.to_vec();
            let emit = bind_atoms(b, &held, &mut |held| {
                if pull_left {
                    k(&[held, x.as_slice()].concat())
                } else {
                    k(&[x.as_slice(), held].concat())
                }
            })?;
            let when = b.if_(&b.read(&p.has_elem)?, &emit, None)?;
            b.seq(&p.advance, &when)
        }),
    ))
}

/// Two counted, linear streams: one loop up to the smaller bound.
fn zip_counted(s1: StreamRep, s2: StreamRep, types: Vec<SemType>) -> StreamRep {
    let (Producer::Counted { bound: b1, body: f1 }, Producer::Counted { bound: b2, body: f2 }) =
        (s1.producer, s2.producer)
    else {
        unreachable!("zip_counted requires counted producers")
    };
    let (h1, h2) = (StateKey::fresh(), StateKey::fresh());
    let mut inits = s1.inits;
    inits.extend(s2.inits);
    inits.push(Init {
        key: h1,
        typ: SemType::Int,
        kind: InitKind::Let(b1),
    });
    inits.push(Init {
        key: h2,
        typ: SemType::Int,
        kind: InitKind::Let(b2),
    });
    let bound: ExprFn = Arc::new(move |b, env| {
        let (x, y) = (env.val(b, h1)?, env.val(b, h2)?);
        b.cond(&b.lt(&x, &y)?, &x, &y)
    });
    let (t1, t2) = (s1.transforms, s2.transforms);
    let body: super::BodyFn = Arc::new(move |b, env, i, k| {
        f1(b, env, i, &mut |x| {
            apply(b, &t1, env, x, &mut |x| {
                let x = x.to_vec();
                f2(b, env, i, &mut |y| {
                    apply(b, &t2, env, y, &mut |y| k(&[x.as_slice(), y].concat()))
                })
            })
        })
    });
    StreamRep {
        inits,
        producer: Producer::Counted { bound, body },
        ptypes: types,
        transforms: Vec::new(),
        owner: None,
    }
}
