use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Jet order reported by closed-form fields with derivatives of every order.
pub const UNBOUNDED_ORDER: usize = usize::MAX;

type NetFn = dyn Fn(f64, &[f64], usize) -> Jet + Send + Sync;
type FieldFn = dyn Fn(&[f64], usize) -> Jet + Send + Sync;

/// A smooth classical field with analytic jets.
#[derive(Clone)]
pub struct SmoothField {
    dim: usize,
    max_order: usize,
    label: String,
    eval: Arc<FieldFn>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothField({}, dim={}, order≤{})", self.label, self.dim, self.max_order)
    }
}

impl SmoothField {
    /// `eval(point, order)` must return a jet of exactly `order`.
    pub fn new(
        dim: usize,
        max_order: usize,
        label: impl Into<String>,
        eval: impl Fn(&[f64], usize) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self { dim, max_order, label: label.into(), eval: Arc::new(eval) }
    }

    /// Field written in terms of coordinate jets, e.g. `|x| &x[0] * &x[0]`.
    pub fn from_jet_fn(
        dim: usize,
        max_order: usize,
        label: impl Into<String>,
        f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, max_order, label, move |p, order| f(&Jet::variables(p, order)))
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new(dim, UNBOUNDED_ORDER, format!("{value}"), move |_, order| Jet::constant(dim, order, value))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        check_point(self.dim, point)?;
        check_order(&self.label, order, self.max_order)?;
        Ok((self.eval)(point, order))
    }

    pub fn partial(&self, point: &[f64], alpha: &[usize]) -> Result<f64> {
        check_len(self.dim, alpha.len())?;
        let order = alpha.iter().sum();
        let j = self.jet(point, order)?;
        Ok(j.partial(alpha).expect("order checked"))
    }
}

/// Representative `(u_ε)_ε` of a generalized function: a family of smooth
/// fields indexed by `ε ∈ (0, 1]`, evaluated through analytic jets.
#[derive(Clone)]
pub struct EpsilonNet {
    dim: usize,
    max_order: usize,
    label: String,
    eps_independent: bool,
    eval: Arc<NetFn>,
}

impl fmt::Debug for EpsilonNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EpsilonNet({}, dim={}, order≤{})", self.label, self.dim, self.max_order)
    }
}

impl EpsilonNet {
    /// `eval(ε, point, order)` must return a jet of exactly `order`.
    pub fn new(
        dim: usize,
        max_order: usize,
        label: impl Into<String>,
        eval: impl Fn(f64, &[f64], usize) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self { dim, max_order, label: label.into(), eps_independent: false, eval: Arc::new(eval) }
    }

    pub fn from_jet_fn(
        dim: usize,
        max_order: usize,
        label: impl Into<String>,
        f: impl Fn(f64, &[Jet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, max_order, label, move |eps, p, order| f(eps, &Jet::variables(p, order)))
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        embed_smooth(&SmoothField::constant(dim, value))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True for embedded classical fields.
    pub fn is_eps_independent(&self) -> bool {
        self.eps_independent
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn jet(&self, eps: f64, point: &[f64], order: usize) -> Result<Jet> {
        check_eps(eps)?;
        check_point(self.dim, point)?;
        check_order(&self.label, order, self.max_order)?;
        Ok((self.eval)(eps, point, order))
    }

    pub fn value(&self, eps: f64, point: &[f64]) -> Result<f64> {
        Ok(self.jet(eps, point, 0)?.value())
    }

    /// `∂^α u_ε(point)`.
    pub fn evaluate(&self, eps: f64, point: &[f64], alpha: &[usize]) -> Result<f64> {
        check_len(self.dim, alpha.len())?;
        let j = self.jet(eps, point, alpha.iter().sum())?;
        Ok(j.partial(alpha).expect("order checked"))
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}

pub(crate) fn check_point(dim: usize, p: &[f64]) -> Result<()> {
    check_len(dim, p.len())
}

pub(crate) fn check_len(dim: usize, len: usize) -> Result<()> {
    if len == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: dim, found: len })
    }
}

pub(crate) fn check_order(label: &str, requested: usize, available: usize) -> Result<()> {
    if requested <= available {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder { label: label.to_string(), requested, available })
    }
}

/// The constant embedding `σ(f) = cl[(f)_ε]`.
pub fn embed_smooth(f: &SmoothField) -> EpsilonNet {
    let field = f.clone();
    EpsilonNet {
        dim: f.dim,
        max_order: f.max_order,
        label: format!("σ({})", f.label),
        eps_independent: true,
        eval: Arc::new(move |_, p, order| (field.eval)(p, order)),
    }
}

/// `∂^α u_ε(point)` for a single representative.
pub fn evaluate_jet(net: &EpsilonNet, eps: f64, point: &[f64], alpha: &[usize]) -> Result<f64> {
    net.evaluate(eps, point, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> SmoothField {
        SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "x²", |x| &x[0] * &x[0])
    }

    #[test]
    fn embedded_square() {
        let net = embed_smooth(&square());
        for eps in [1.0, 0.3, 1e-4] {
            assert_abs_diff_eq!(net.evaluate(eps, &[1.7], &[2]).unwrap(), 2.0);
            assert_abs_diff_eq!(net.evaluate(eps, &[1.7], &[1]).unwrap(), 3.4, epsilon = 1e-15);
        }
        assert!(net.is_eps_independent());
    }

    #[test]
    fn embedded_constant() {
        let net = EpsilonNet::constant(3, -2.5);
        assert_eq!(net.value(0.01, &[1.0, 2.0, 3.0]).unwrap(), -2.5);
        assert_eq!(net.evaluate(0.01, &[1.0, 2.0, 3.0], &[0, 1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn cube_first_derivative() {
        let cube = SmoothField::from_jet_fn(1, UNBOUNDED_ORDER, "x³", |x| x[0].powi(3));
        assert_abs_diff_eq!(evaluate_jet(&embed_smooth(&cube), 0.5, &[2.0], &[1]).unwrap(), 12.0);
    }

    #[test]
    fn order_and_range_errors() {
        let f = SmoothField::from_jet_fn(1, 2, "limited", |x| x[0].clone());
        let net = embed_smooth(&f);
        assert!(matches!(net.evaluate(0.5, &[0.0], &[3]), Err(Error::UnsupportedOrder { .. })));
        assert!(matches!(net.value(0.0, &[0.0]), Err(Error::EpsilonOutOfRange(_))));
        assert!(matches!(net.value(1.5, &[0.0]), Err(Error::EpsilonOutOfRange(_))));
        assert!(matches!(net.value(0.5, &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }
}
