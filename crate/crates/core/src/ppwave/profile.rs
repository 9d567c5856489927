use crate::error::{Error, Result};
use crate::gfn::{SmoothField, UNBOUNDED_ORDER};
use crate::jet::Jet;

/// Highest total degree accepted for profile polynomials.
pub const MAX_PROFILE_DEGREE: u32 = 6;

/// Wave profile `f(x, y) = Σ c·x^i·y^j` on the transverse plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFunction {
    label: String,
    terms: Vec<(u32, u32, f64)>,
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| f64::from(n - i)).product()
}

impl ProfileFunction {
    /// Polynomial from `(i, j, c)` terms; repeated monomials are summed.
    pub fn polynomial(label: impl Into<String>, terms: &[(u32, u32, f64)]) -> Result<Self> {
        let mut merged: Vec<(u32, u32, f64)> = Vec::new();
        for &(i, j, c) in terms {
            if i + j > MAX_PROFILE_DEGREE {
                return Err(Error::InvalidArgument(format!(
                    "profile term x^{i} y^{j} exceeds total degree {MAX_PROFILE_DEGREE}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("profile coefficient of x^{i} y^{j} is not finite")));
            }
            match merged.iter_mut().find(|t| t.0 == i && t.1 == j) {
                Some(t) => t.2 += c,
                None => merged.push((i, j, c)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        merged.sort_by_key(|t| (t.0 + t.1, t.0));
        Ok(Self { label: label.into(), terms: merged })
    }

    pub fn zero() -> Self {
        Self { label: "0".into(), terms: Vec::new() }
    }

    /// `x² − y²`, the plane wave.
    pub fn quadrupole() -> Self {
        Self::polynomial("x²-y²", &[(2, 0, 1.0), (0, 2, -1.0)]).expect("valid")
    }

    /// `x² + y²`.
    pub fn axisymmetric() -> Self {
        Self::polynomial("x²+y²", &[(2, 0, 1.0), (0, 2, 1.0)]).expect("valid")
    }

    /// `a·x + b·y`.
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        Self::polynomial(format!("{a}x+{b}y"), &[(1, 0, a), (0, 1, b)])
    }

    /// `x·y`.
    pub fn cross() -> Self {
        Self::polynomial("xy", &[(1, 1, 1.0)]).expect("valid")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `∂_x^a ∂_y^b f(x, y)`.
    pub fn partial(&self, a: u32, b: u32, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.0 >= a && t.1 >= b)
            .map(|&(i, j, c)| c * falling(i, a) * falling(j, b) * x.powi((i - a) as i32) * y.powi((j - b) as i32))
            .sum()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(0, 0, x, y)
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [self.partial(1, 0, x, y), self.partial(0, 1, x, y)]
    }

    /// `[[f_xx, f_xy], [f_xy, f_yy]]`.
    pub fn hessian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let xy = self.partial(1, 1, x, y);
        [[self.partial(2, 0, x, y), xy], [xy, self.partial(0, 2, x, y)]]
    }

    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.partial(2, 0, x, y) + self.partial(0, 2, x, y)
    }

    /// `f(x, y)` for coordinate jets `x`, `y`.
    pub fn jet(&self, x: &Jet, y: &Jet) -> Jet {
        let mut acc = Jet::zero(x.dim(), x.order());
        for &(i, j, c) in &self.terms {
            acc = acc + (&x.powi(i) * &y.powi(j)).scale(c);
        }
        acc
    }

    /// `f` as a smooth field on the `(x, y)` plane.
    pub fn field(&self) -> SmoothField {
        let me = self.clone();
        SmoothField::from_jet_fn(2, UNBOUNDED_ORDER, self.label.clone(), move |p| me.jet(&p[0], &p[1]))
    }
}
