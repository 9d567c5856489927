//! Curvature of a metric net, evaluated lazily at points.
//!
//! Convention: `R(X, Y)Z = D_[X,Y] Z − [D_X, D_Y] Z`, stored as
//! `riemann[a][b][c][d]`, the `d`-component of `R(∂_a, ∂_b)∂_c`:
//!
//! `R_abc^d = ∂_b Γ^d_ac − ∂_a Γ^d_bc + Γ^d_be Γ^e_ac − Γ^d_ae Γ^e_bc`.
//!
//! Ricci contracts the second slot with the output, `Ric_ac = R_abc^b`,
//! which makes the unit 2-sphere have scalar curvature `+2`.

use crate::error::{Error, Result};
use crate::gfn::net::check_order;
use crate::gfn::EpsilonNet;
use crate::jet::Jet;

use super::connection::{christoffel, gamma_index, ChristoffelField};
use super::metric::{invert_jets, MetricNet};

pub fn riemann_index(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

/// Curvature jets at one point.
#[derive(Debug, Clone)]
pub struct CurvatureJets {
    pub riemann: Vec<Jet>,
    pub ricci: Vec<Jet>,
    pub scalar: Jet,
    pub einstein: Vec<Jet>,
}

/// Residuals of the pointwise tensor identities, each a max-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `|Γ^k_ij − Γ^k_ji|`.
    pub christoffel_asymmetry: f64,
    /// `|Ric_ab − Ric_ba|`.
    pub ricci_asymmetry: f64,
    /// `|R_abc^d + R_bca^d + R_cab^d|`.
    pub first_bianchi: f64,
    /// `|∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|`.
    pub metric_compatibility: f64,
}

/// Riemann tensor of a metric net and, once completed, its contractions.
#[derive(Debug, Clone)]
pub struct CurvatureFields {
    gamma: ChristoffelField,
    max_order: usize,
    completed: bool,
}

/// Riemann part of the curvature.
pub fn riemann(metric: &MetricNet) -> Result<CurvatureFields> {
    check_order(metric.label(), 2, metric.max_order())?;
    let gamma = christoffel(metric)?;
    let max_order = gamma.max_order().saturating_sub(1);
    Ok(CurvatureFields { gamma, max_order, completed: false })
}

/// Adds Ricci, scalar and Einstein contractions.
pub fn ricci_scalar_einstein(curv: &CurvatureFields, metric: &MetricNet) -> Result<CurvatureFields> {
    if metric.label() != curv.metric().label() || metric.dim() != curv.dim() {
        return Err(Error::InvalidArgument(format!(
            "curvature of {} cannot be contracted with {}",
            curv.metric().label(),
            metric.label()
        )));
    }
    Ok(CurvatureFields { completed: true, ..curv.clone() })
}

impl CurvatureFields {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn metric(&self) -> &MetricNet {
        self.gamma.metric()
    }

    pub fn christoffel(&self) -> &ChristoffelField {
        &self.gamma
    }

    pub fn is_completed(&self) -> bool {
        self.completed
    }

    fn require_completed(&self) -> Result<()> {
        if self.completed {
            Ok(())
        } else {
            Err(Error::InvalidArgument("Ricci contractions not computed; call ricci_scalar_einstein".into()))
        }
    }

    /// All `n⁴` Riemann components, indexed by [`riemann_index`].
    pub fn riemann_jets(&self, eps: f64, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order("Riemann", order, self.max_order)?;
        let n = self.dim();
        let g = self.gamma.jets(eps, point, order + 1)?;
        let gl: Vec<Jet> = g.iter().map(|j| j.truncate(order)).collect();
        let dgamma = |axis: usize, d: usize, a: usize, c: usize| {
            g[gamma_index(n, d, a, c)].derivative(axis).expect("order ≥ 1")
        };
        let mut out = vec![Jet::zero(n, order); n * n * n * n];
        for a in 0..n {
            for b in a + 1..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgamma(b, d, a, c) - dgamma(a, d, b, c);
                        for e in 0..n {
                            r = r + &gl[gamma_index(n, d, b, e)] * &gl[gamma_index(n, e, a, c)]
                                - &gl[gamma_index(n, d, a, e)] * &gl[gamma_index(n, e, b, c)];
                        }
                        out[riemann_index(n, b, a, c, d)] = -r.clone();
                        out[riemann_index(n, a, b, c, d)] = r;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Riemann, Ricci, scalar and Einstein jets in one pass.
    pub fn jets(&self, eps: f64, point: &[f64], order: usize) -> Result<CurvatureJets> {
        self.require_completed()?;
        let n = self.dim();
        let riemann = self.riemann_jets(eps, point, order)?;
        let g = self.metric().jets(eps, point, order)?;
        let ginv = invert_jets(n, &g)?;
        let mut ricci = Vec::with_capacity(n * n);
        for a in 0..n {
            for c in 0..n {
                let mut acc = Jet::zero(n, order);
                for b in 0..n {
                    acc = acc + &riemann[riemann_index(n, a, b, c, b)];
                }
                ricci.push(acc);
            }
        }
        let mut scalar = Jet::zero(n, order);
        for (gi, r) in ginv.iter().zip(&ricci) {
            scalar = scalar + gi * r;
        }
        let einstein = ricci.iter().zip(&g).map(|(r, gab)| r - &(&scalar * gab).scale(0.5)).collect();
        Ok(CurvatureJets { riemann, ricci, scalar, einstein })
    }

    /// Symmetry, first Bianchi and metric-compatibility residuals at a point.
    pub fn identity_residuals(&self, eps: f64, point: &[f64]) -> Result<IdentityResiduals> {
        let n = self.dim();
        let j = self.jets(eps, point, 0)?;
        let gamma = self.gamma.values(eps, point)?;
        let g = self.metric().jets(eps, point, 1)?;
        let r: Vec<f64> = j.riemann.iter().map(Jet::value).collect();
        let mut out =
            IdentityResiduals { christoffel_asymmetry: 0.0, ricci_asymmetry: 0.0, first_bianchi: 0.0, metric_compatibility: 0.0 };
        for a in 0..n {
            for b in 0..n {
                out.ricci_asymmetry = out.ricci_asymmetry.max((j.ricci[a * n + b].value() - j.ricci[b * n + a].value()).abs());
                for c in 0..n {
                    out.christoffel_asymmetry = out
                        .christoffel_asymmetry
                        .max((gamma[gamma_index(n, a, b, c)] - gamma[gamma_index(n, a, c, b)]).abs());
                    for d in 0..n {
                        let cyc = r[riemann_index(n, a, b, c, d)] + r[riemann_index(n, b, c, a, d)] + r[riemann_index(n, c, a, b, d)];
                        out.first_bianchi = out.first_bianchi.max(cyc.abs());
                    }
                }
            }
        }
        let mut alpha = vec![0usize; n];
        for k in 0..n {
            alpha[k] = 1;
            for i in 0..n {
                for jj in 0..n {
                    let mut v = g[i * n + jj].partial(&alpha).unwrap_or(f64::NAN);
                    for l in 0..n {
                        v -= gamma[gamma_index(n, l, k, i)] * g[l * n + jj].value()
                            + gamma[gamma_index(n, l, k, jj)] * g[i * n + l].value();
                    }
                    out.metric_compatibility = out.metric_compatibility.max(v.abs());
                }
            }
            alpha[k] = 0;
        }
        Ok(out)
    }

    fn net(&self, label: String, pick: impl Fn(CurvatureJets) -> Jet + Send + Sync + 'static) -> EpsilonNet {
        let me = self.clone();
        let n = self.dim();
        EpsilonNet::new(n, self.max_order, label, move |eps, p, order| match me.jets(eps, p, order) {
            Ok(j) => pick(j),
            Err(_) => Jet::constant(n, order, f64::NAN),
        })
    }

    pub fn riemann_component(&self, a: usize, b: usize, c: usize, d: usize) -> EpsilonNet {
        let me = self.clone();
        let n = self.dim();
        let label = format!("R_{a}{b}{c}^{d}[{}]", self.metric().label());
        EpsilonNet::new(n, self.max_order, label, move |eps, p, order| match me.riemann_jets(eps, p, order) {
            Ok(mut j) => j.swap_remove(riemann_index(n, a, b, c, d)),
            Err(_) => Jet::constant(n, order, f64::NAN),
        })
    }

    pub fn ricci_component(&self, a: usize, b: usize) -> Result<EpsilonNet> {
        self.require_completed()?;
        let n = self.dim();
        Ok(self.net(format!("Ric_{a}{b}[{}]", self.metric().label()), move |mut j| j.ricci.swap_remove(a * n + b)))
    }

    pub fn scalar(&self) -> Result<EpsilonNet> {
        self.require_completed()?;
        Ok(self.net(format!("R[{}]", self.metric().label()), |j| j.scalar))
    }

    pub fn einstein_component(&self, a: usize, b: usize) -> Result<EpsilonNet> {
        self.require_completed()?;
        let n = self.dim();
        Ok(self.net(format!("G_{a}{b}[{}]", self.metric().label()), move |mut j| j.einstein.swap_remove(a * n + b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::AdmissibilityCertificate;
    use crate::gfn::CompactBox;
    use approx::assert_abs_diff_eq;

    fn cert(n: usize) -> AdmissibilityCertificate {
        AdmissibilityCertificate { m: 0.0, region: CompactBox::cube(n, 1.0).unwrap() }
    }

    fn sphere() -> MetricNet {
        MetricNet::from_jet_fn(2, usize::MAX, "S²", "Riemannian", |_, x| {
            let o = x[0].order();
            let s = x[0].sin();
            vec![Jet::constant(2, o, 1.0), Jet::zero(2, o), &s * &s]
        })
        .assume_certificate(cert(2))
    }

    #[test]
    fn sphere_scalar_is_plus_two() {
        let g = sphere();
        let c = ricci_scalar_einstein(&riemann(&g).unwrap(), &g).unwrap();
        for theta in [0.3, 1.0, 2.5] {
            let j = c.jets(0.1, &[theta, 0.7], 0).unwrap();
            assert_abs_diff_eq!(j.scalar.value(), 2.0, epsilon = 1e-12);
            let gv = g.values(0.1, &[theta, 0.7]).unwrap();
            for k in 0..4 {
                assert_abs_diff_eq!(j.ricci[k].value(), gv[(k / 2, k % 2)], epsilon = 1e-12);
                assert_abs_diff_eq!(j.einstein[k].value(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn contractions_require_completion() {
        let g = sphere();
        let r = riemann(&g).unwrap();
        assert!(r.scalar().is_err());
        assert!(r.jets(0.1, &[1.0, 0.0], 0).is_err());
        assert!(r.riemann_jets(0.1, &[1.0, 0.0], 0).is_ok());
    }

    #[test]
    fn flat_space_is_flat() {
        let g = MetricNet::minkowski(3).assume_certificate(cert(3));
        let c = ricci_scalar_einstein(&riemann(&g).unwrap(), &g).unwrap();
        let j = c.jets(0.2, &[0.1, 0.2, 0.3], 1).unwrap();
        assert!(j.riemann.iter().chain(&j.ricci).all(|r| r.coeffs().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn sphere_satisfies_identities() {
        let g = sphere();
        let c = ricci_scalar_einstein(&riemann(&g).unwrap(), &g).unwrap();
        let r = c.identity_residuals(0.1, &[0.8, -0.3]).unwrap();
        assert_eq!(r.christoffel_asymmetry, 0.0);
        assert!(r.ricci_asymmetry < 1e-14 && r.first_bianchi < 1e-14 && r.metric_compatibility < 1e-14, "{r:?}");
    }
}
