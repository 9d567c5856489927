//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] of dimension `n` and order `k` stores the Taylor coefficients
//! `c_α = ∂^α f(p) / α!` of a function at a point `p` for every multi-index
//! with `|α| ≤ k`. Sums, products and composition with univariate functions
//! are exact up to the truncation order, which is what lets every derived
//! quantity (inverse metric, Christoffel symbols, curvature) carry analytic
//! derivatives without finite differences.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

/// Coefficient bookkeeping shared by all jets of a given `(dim, order)`.
pub(crate) struct JetLayout {
    dim: usize,
    order: usize,
    indices: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    factorial: Vec<f64>,
    /// `(i, j, k)`: the product of coefficients `i` and `j` lands in `k`.
    products: Vec<(u32, u32, u32)>,
    /// Per axis: `(dst in order-1 layout, src, factor)`.
    derivatives: Vec<Vec<(u32, u32, f64)>>,
}

impl fmt::Debug for JetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetLayout(dim={}, order={})", self.dim, self.order)
    }
}

fn enumerate_degree(dim: usize, degree: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(prefix: &mut Vec<usize>, remaining_axes: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if remaining_axes == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(prefix, remaining_axes - 1, remaining - first, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(dim), dim, degree, out);
}

impl JetLayout {
    fn build(dim: usize, order: usize) -> Self {
        assert!(dim > 0, "jets need at least one variable");
        let mut indices = Vec::new();
        for d in 0..=order {
            enumerate_degree(dim, d, &mut indices);
        }
        let lookup: HashMap<Vec<usize>, usize> =
            indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let degree: Vec<usize> = indices.iter().map(|a| a.iter().sum()).collect();
        let factorial = indices
            .iter()
            .map(|a| a.iter().map(|&k| factorial(k)).product())
            .collect();

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, lookup[&sum] as u32));
            }
        }

        let mut derivatives = Vec::with_capacity(dim);
        if order > 0 {
            let lower = layout(dim, order - 1);
            for axis in 0..dim {
                let mut map = Vec::new();
                for (dst, beta) in lower.indices.iter().enumerate() {
                    let mut alpha = beta.clone();
                    alpha[axis] += 1;
                    map.push((dst as u32, lookup[&alpha] as u32, alpha[axis] as f64));
                }
                derivatives.push(map);
            }
        }

        Self { dim, order, indices, lookup, factorial, products, derivatives }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

type LayoutCache = RwLock<HashMap<(usize, usize), Arc<JetLayout>>>;

pub(crate) fn layout(dim: usize, order: usize) -> Arc<JetLayout> {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(l) = cache.read().expect("jet layout cache poisoned").get(&(dim, order)) {
        return Arc::clone(l);
    }
    let built = Arc::new(JetLayout::build(dim, order));
    let mut w = cache.write().expect("jet layout cache poisoned");
    Arc::clone(w.entry((dim, order)).or_insert(built))
}

/// Number of multi-indices with `|α| ≤ order` in `dim` variables.
pub fn jet_len(dim: usize, order: usize) -> usize {
    layout(dim, order).len()
}

/// All multi-indices of total order `≤ order`, graded by total order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    layout(dim, order).indices.clone()
}

/// Truncated Taylor polynomial at a point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn zero(dim: usize, order: usize) -> Self {
        let layout = layout(dim, order);
        let coeffs = vec![0.0; layout.len()];
        Self { layout, coeffs }
    }

    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        let mut j = Self::zero(dim, order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_axis` expanded at a point where it equals `value`.
    pub fn variable(dim: usize, order: usize, value: f64, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let mut j = Self::constant(dim, order, value);
        if order > 0 {
            let mut e = vec![0; dim];
            e[axis] = 1;
            let idx = j.layout.lookup[&e];
            j.coeffs[idx] = 1.0;
        }
        j
    }

    /// Coordinate jets for every axis at `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let dim = point.len();
        point.iter().enumerate().map(|(axis, &x)| Self::variable(dim, order, x, axis)).collect()
    }

    /// Builds a jet from partial derivatives `∂^α f` listed in the order of
    /// [`multi_indices`].
    pub fn from_partials(dim: usize, order: usize, partials: &[f64]) -> Self {
        let layout = layout(dim, order);
        assert_eq!(partials.len(), layout.len(), "partials do not match jet layout");
        let coeffs = partials.iter().zip(&layout.factorial).map(|(d, f)| d / f).collect();
        Self { layout, coeffs }
    }

    /// One-variable jet from derivatives `f, f', f'', ...` at a point.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty());
        let order = derivs.len() - 1;
        let layout = layout(1, order);
        let coeffs = derivs.iter().enumerate().map(|(k, d)| d / factorial(k)).collect();
        Self { layout, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `∂^α f / α!`; zero beyond the truncation order.
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        assert_eq!(alpha.len(), self.dim());
        self.layout.lookup.get(alpha).map_or(0.0, |&i| self.coeffs[i])
    }

    /// The partial derivative `∂^α f`, or `None` when `|α|` exceeds the order.
    pub fn partial(&self, alpha: &[usize]) -> Option<f64> {
        assert_eq!(alpha.len(), self.dim());
        self.layout.lookup.get(alpha).map(|&i| self.coeffs[i] * self.layout.factorial[i])
    }

    /// First partial derivative along `axis` (requires order ≥ 1).
    pub fn gradient_component(&self, axis: usize) -> Option<f64> {
        let mut e = vec![0; self.dim()];
        e[axis] = 1;
        self.partial(&e)
    }

    /// Derivative along `axis`, one order lower. `None` for order-0 jets.
    pub fn derivative(&self, axis: usize) -> Option<Jet> {
        if self.order() == 0 {
            return None;
        }
        let lower = layout(self.dim(), self.order() - 1);
        let mut coeffs = vec![0.0; lower.len()];
        for &(dst, src, factor) in &self.layout.derivatives[axis] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Some(Jet { layout: lower, coeffs })
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.dim(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { layout: Arc::clone(&self.layout), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `g ∘ self` for a univariate `g` given its derivatives at `self.value()`
    /// (`derivs[k] = g^(k)`, at least `order + 1` entries).
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        assert!(derivs.len() > order, "compose needs {} derivatives", order + 1);
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut out = Jet::constant(self.dim(), order, derivs[0]);
        let mut power = Jet::constant(self.dim(), order, 1.0);
        let mut kfact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = &power * &nil;
            kfact *= k as f64;
            if *d != 0.0 {
                out.axpy(d / kfact, &power);
            }
        }
        out
    }

    fn axpy(&mut self, a: f64, x: &Jet) {
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * xc;
        }
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut d = 1.0 / a;
        for k in 0..=self.order() {
            derivs.push(d);
            d *= -((k + 1) as f64) / a;
        }
        self.compose(&derivs)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(self.dim(), self.order(), 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut coef = 1.0;
        let mut expo = 0.5;
        for _ in 0..=self.order() {
            derivs.push(coef * a.powf(expo));
            coef *= expo;
            expo -= 1.0;
        }
        self.compose(&derivs)
    }

    fn binary(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim(), rhs.dim(), "jet dimension mismatch");
        let (a, b) = if self.order() == rhs.order() {
            (self.clone(), rhs)
        } else {
            let order = self.order().min(rhs.order());
            return self.truncate(order).binary(&rhs.truncate(order), f);
        };
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(*x, *y)).collect();
        Jet { layout: a.layout, coeffs }
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.binary(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.binary(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim(), rhs.dim(), "jet dimension mismatch");
        if self.order() != rhs.order() {
            let order = self.order().min(rhs.order());
            return &self.truncate(order) * &rhs.truncate(order);
        }
        let mut coeffs = vec![0.0; self.coeffs.len()];
        if self.layout.order == 0 {
            coeffs[0] = self.coeffs[0] * rhs.coeffs[0];
        } else {
            for &(i, j, k) in &self.layout.products {
                coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
            }
        }
        Jet { layout: Arc::clone(&self.layout), coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}
