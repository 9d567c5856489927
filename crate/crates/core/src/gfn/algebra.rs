//! Differential-algebra operations on ε-nets.

use std::sync::Arc;

use super::net::EpsilonNet;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Expression over operand nets. Derivative nodes are evaluated by asking the
/// subexpression for one more jet order, so Leibniz bookkeeping is implicit.
#[derive(Debug, Clone, PartialEq)]
pub enum NetExpr {
    Operand(usize),
    Constant(f64),
    Add(Box<NetExpr>, Box<NetExpr>),
    Mul(Box<NetExpr>, Box<NetExpr>),
    Scale(f64, Box<NetExpr>),
    Partial(usize, Box<NetExpr>),
}

impl NetExpr {
    pub fn op(i: usize) -> Self {
        NetExpr::Operand(i)
    }

    pub fn add(self, rhs: NetExpr) -> Self {
        NetExpr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: NetExpr) -> Self {
        self.add(rhs.scale(-1.0))
    }

    pub fn mul(self, rhs: NetExpr) -> Self {
        NetExpr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn scale(self, s: f64) -> Self {
        NetExpr::Scale(s, Box::new(self))
    }

    pub fn partial(self, axis: usize) -> Self {
        NetExpr::Partial(axis, Box::new(self))
    }

    /// Highest jet order the expression supports given operand orders.
    fn available_order(&self, operands: &[EpsilonNet]) -> Result<Option<usize>> {
        Ok(match self {
            NetExpr::Operand(i) => {
                let net = operands
                    .get(*i)
                    .ok_or_else(|| Error::InvalidArgument(format!("operand {i} not supplied")))?;
                Some(net.max_order())
            }
            NetExpr::Constant(_) => None,
            NetExpr::Add(a, b) | NetExpr::Mul(a, b) => {
                match (a.available_order(operands)?, b.available_order(operands)?) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }
            }
            NetExpr::Scale(_, a) => a.available_order(operands)?,
            NetExpr::Partial(_, a) => match a.available_order(operands)? {
                Some(0) => {
                    return Err(Error::UnsupportedOrder {
                        label: "derivative operand".into(),
                        requested: 1,
                        available: 0,
                    })
                }
                Some(k) if k == usize::MAX => Some(k),
                Some(k) => Some(k - 1),
                None => None,
            },
        })
    }

    fn check_axes(&self, dim: usize) -> Result<()> {
        match self {
            NetExpr::Partial(axis, a) => {
                if *axis >= dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: axis + 1 });
                }
                a.check_axes(dim)
            }
            NetExpr::Add(a, b) | NetExpr::Mul(a, b) => {
                a.check_axes(dim)?;
                b.check_axes(dim)
            }
            NetExpr::Scale(_, a) => a.check_axes(dim),
            _ => Ok(()),
        }
    }

    fn eval(&self, operands: &[EpsilonNet], eps: f64, point: &[f64], order: usize) -> Result<Jet> {
        Ok(match self {
            NetExpr::Operand(i) => operands[*i].jet(eps, point, order)?,
            NetExpr::Constant(c) => Jet::constant(point.len(), order, *c),
            NetExpr::Add(a, b) => a.eval(operands, eps, point, order)? + b.eval(operands, eps, point, order)?,
            NetExpr::Mul(a, b) => a.eval(operands, eps, point, order)? * b.eval(operands, eps, point, order)?,
            NetExpr::Scale(s, a) => a.eval(operands, eps, point, order)?.scale(*s),
            NetExpr::Partial(axis, a) => {
                a.eval(operands, eps, point, order + 1)?.derivative(*axis).expect("order ≥ 1")
            }
        })
    }
}

/// Compiles an expression over operand nets into a new net that evaluates
/// the expression per ε from the operands' jets.
pub fn net_algebra(expr: &NetExpr, operands: &[EpsilonNet]) -> Result<EpsilonNet> {
    let dim = operands
        .first()
        .map(EpsilonNet::dim)
        .ok_or_else(|| Error::InvalidArgument("net_algebra needs at least one operand".into()))?;
    if let Some(bad) = operands.iter().find(|n| n.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    expr.check_axes(dim)?;
    let max_order = expr.available_order(operands)?.unwrap_or(usize::MAX);
    let ops: Arc<[EpsilonNet]> = operands.to_vec().into();
    let e = expr.clone();
    let label = format!("expr[{}]", operands.iter().map(EpsilonNet::label).collect::<Vec<_>>().join(", "));
    Ok(EpsilonNet::new(dim, max_order, label, move |eps, p, order| {
        e.eval(&ops, eps, p, order).expect("orders validated at construction")
    }))
}

impl EpsilonNet {
    pub fn add(&self, other: &EpsilonNet) -> Result<EpsilonNet> {
        net_algebra(&NetExpr::op(0).add(NetExpr::op(1)), &[self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &EpsilonNet) -> Result<EpsilonNet> {
        net_algebra(&NetExpr::op(0).sub(NetExpr::op(1)), &[self.clone(), other.clone()])
    }

    pub fn mul(&self, other: &EpsilonNet) -> Result<EpsilonNet> {
        net_algebra(&NetExpr::op(0).mul(NetExpr::op(1)), &[self.clone(), other.clone()])
    }

    pub fn scale(&self, s: f64) -> Result<EpsilonNet> {
        net_algebra(&NetExpr::op(0).scale(s), std::slice::from_ref(self))
    }

    pub fn partial(&self, axis: usize) -> Result<EpsilonNet> {
        net_algebra(&NetExpr::op(0).partial(axis), std::slice::from_ref(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfn::net::{embed_smooth, SmoothField, UNBOUNDED_ORDER};
    use approx::assert_abs_diff_eq;

    fn square() -> EpsilonNet {
        embed_smooth(&SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "x²", |x| &x[0] * &x[0]))
    }

    #[test]
    fn derivative_of_square() {
        let d = square().partial(0).unwrap();
        for x in [-1.0, 0.0, 2.5] {
            assert_abs_diff_eq!(d.value(0.3, &[x]).unwrap(), 2.0 * x);
        }
    }

    #[test]
    fn cancellation_is_exact() {
        let n = square();
        let z = net_algebra(&NetExpr::op(0).add(NetExpr::op(0).scale(-1.0)), &[n]).unwrap();
        assert_eq!(z.value(0.1, &[1.3]).unwrap(), 0.0);
        assert_eq!(z.evaluate(0.1, &[1.3], &[2]).unwrap(), 0.0);
    }

    #[test]
    fn product_rule_through_jets() {
        // ∂x (x² · sin x) = 2x sin x + x² cos x
        let s = embed_smooth(&SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "sin", |x| x[0].sin()));
        let e = NetExpr::op(0).mul(NetExpr::op(1)).partial(0);
        let net = net_algebra(&e, &[square(), s]).unwrap();
        let x: f64 = 0.7;
        assert_abs_diff_eq!(net.value(0.5, &[x]).unwrap(), 2.0 * x * x.sin() + x * x * x.cos(), epsilon = 1e-14);
    }

    #[test]
    fn jet_exhaustion_and_dimension_errors() {
        let lin = embed_smooth(&SmoothField::from_jet_fn(1, 1, "x", |x| x[0].clone()));
        let e = NetExpr::op(0).partial(0).partial(0);
        assert!(matches!(net_algebra(&e, &[lin.clone()]), Err(Error::UnsupportedOrder { .. })));
        let once = lin.partial(0).unwrap();
        assert_eq!(once.max_order(), 0);
        let two_d = EpsilonNet::constant(2, 1.0);
        assert!(matches!(lin.add(&two_d), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(lin.partial(1), Err(Error::DimensionMismatch { .. })));
    }
}
