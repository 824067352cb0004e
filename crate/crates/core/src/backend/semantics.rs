//! Typing rules and C evaluation semantics shared by all backends.
//!
//! Integers are 32-bit two's complement with wrapping overflow; division
//! truncates toward zero and the remainder takes the sign of the dividend.

use super::{expect_type, ArithOp, CmpOp, CodeError, CodeVal, Lit, SemType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithFault {
    DivisionByZero,
}

pub(crate) fn arith_type(op: ArithOp, a: &CodeVal, b: &CodeVal) -> Result<SemType, CodeError> {
    let t = a.typ();
    if !t.is_numeric() {
        return Err(CodeError::TypeMismatch {
            op: op.symbol(),
            expected: "int or float".into(),
            found: t,
        });
    }
    expect_type(op.symbol(), t, b)?;
    if op == ArithOp::Mod && t != SemType::Int {
        return Err(CodeError::ModOnFloat(t));
    }
    Ok(t)
}

pub(crate) fn cmp_type(op: CmpOp, a: &CodeVal, b: &CodeVal) -> Result<SemType, CodeError> {
    let t = a.typ();
    if !t.is_numeric() {
        return Err(CodeError::TypeMismatch {
            op: op.symbol(),
            expected: "int or float".into(),
            found: t,
        });
    }
    expect_type(op.symbol(), t, b)?;
    Ok(SemType::Bool)
}

pub(crate) fn bool_type(op: &'static str, args: &[&CodeVal]) -> Result<SemType, CodeError> {
    for a in args {
        expect_type(op, SemType::Bool, a)?;
    }
    Ok(SemType::Bool)
}

pub(crate) fn cond_type(c: &CodeVal, a: &CodeVal, b: &CodeVal) -> Result<SemType, CodeError> {
    expect_type("?:", SemType::Bool, c)?;
    expect_type("?:", a.typ(), b)?;
    Ok(a.typ())
}

pub(crate) fn expect_scalar(op: &'static str, v: &CodeVal) -> Result<(), CodeError> {
    if v.typ().is_scalar() {
        Ok(())
    } else {
        Err(CodeError::TypeMismatch {
            op,
            expected: "int, float or bool".into(),
            found: v.typ(),
        })
    }
}

pub(crate) fn expect_array(op: &'static str, v: &CodeVal) -> Result<SemType, CodeError> {
    v.typ().elem().ok_or_else(|| CodeError::TypeMismatch {
        op,
        expected: "array".into(),
        found: v.typ(),
    })
}

/// Evaluates an arithmetic operation on constants of the same numeric type.
pub fn eval_arith(op: ArithOp, a: Lit, b: Lit) -> Result<Lit, ArithFault> {
    match (a, b) {
        (Lit::Int(x), Lit::Int(y)) => {
            let r = match op {
                ArithOp::Add => x.wrapping_add(y),
                ArithOp::Sub => x.wrapping_sub(y),
                ArithOp::Mul => x.wrapping_mul(y),
                ArithOp::Div => {
                    if y == 0 {
                        return Err(ArithFault::DivisionByZero);
                    }
                    x.wrapping_div(y)
                }
                ArithOp::Mod => {
                    if y == 0 {
                        return Err(ArithFault::DivisionByZero);
                    }
                    x.wrapping_rem(y)
                }
            };
            Ok(Lit::Int(r))
        }
        (Lit::Float(x), Lit::Float(y)) => {
            let r = match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
                ArithOp::Mod => unreachable!("rejected by arith_type"),
            };
            Ok(Lit::Float(r))
        }
        _ => unreachable!("operands checked by arith_type"),
    }
}

pub fn eval_cmp(op: CmpOp, a: Lit, b: Lit) -> bool {
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Lit::Int(x), Lit::Int(y)) => Some(x.cmp(&y)),
        (Lit::Float(x), Lit::Float(y)) => x.partial_cmp(&y),
        _ => unreachable!("operands checked by cmp_type"),
    };
    match (op, ord) {
        (CmpOp::Ne, None) => true,
        (_, None) => false,
        (CmpOp::Lt, Some(o)) => o == Ordering::Less,
        (CmpOp::Le, Some(o)) => o != Ordering::Greater,
        (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
        (CmpOp::Ge, Some(o)) => o != Ordering::Less,
        (CmpOp::Eq, Some(o)) => o == Ordering::Equal,
        (CmpOp::Ne, Some(o)) => o != Ordering::Equal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remainder_truncates_toward_zero() {
        // C: -7 % 3 == -1, -7 / 3 == -2
        assert_eq!(
            eval_arith(ArithOp::Mod, Lit::Int(-7), Lit::Int(3)),
            Ok(Lit::Int(-7i32.wrapping_rem(3)))
        );
        assert_eq!(
            eval_arith(ArithOp::Mod, Lit::Int(-7), Lit::Int(3)),
            Ok(Lit::Int(-1))
        );
        assert_eq!(
            eval_arith(ArithOp::Div, Lit::Int(-7), Lit::Int(3)),
            Ok(Lit::Int(-2))
        );
        assert_eq!(
            eval_arith(ArithOp::Mod, Lit::Int(7), Lit::Int(-3)),
            Ok(Lit::Int(1))
        );
    }

    #[test]
    fn overflow_wraps() {
        assert_eq!(
            eval_arith(ArithOp::Add, Lit::Int(i32::MAX), Lit::Int(1)),
            Ok(Lit::Int(i32::MIN))
        );
        assert_eq!(
            eval_arith(ArithOp::Div, Lit::Int(i32::MIN), Lit::Int(-1)),
            Ok(Lit::Int(i32::MIN))
        );
    }

    #[test]
    fn division_by_zero_faults() {
        assert_eq!(
            eval_arith(ArithOp::Div, Lit::Int(1), Lit::Int(0)),
            Err(ArithFault::DivisionByZero)
        );
        assert_eq!(
            eval_arith(ArithOp::Mod, Lit::Int(1), Lit::Int(0)),
            Err(ArithFault::DivisionByZero)
        );
    }

    #[test]
    fn nan_compares_unordered() {
        let nan = Lit::Float(f64::NAN);
        assert!(!eval_cmp(CmpOp::Eq, nan, nan));
        assert!(eval_cmp(CmpOp::Ne, nan, nan));
        assert!(!eval_cmp(CmpOp::Lt, nan, Lit::Float(0.0)));
    }
}
