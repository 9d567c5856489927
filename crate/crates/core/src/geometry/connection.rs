use crate::error::{Error, Result};
use crate::gfn::net::check_order;
use crate::gfn::EpsilonNet;
use crate::jet::Jet;

use super::metric::{invert_jets, MetricNet};

/// Levi-Civita symbols `Γ^k_ij` of a metric net, evaluated on demand.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    metric: MetricNet,
    max_order: usize,
}

/// Index of `Γ^k_ij` in the flat `n³` layout.
pub fn gamma_index(n: usize, k: usize, i: usize, j: usize) -> usize {
    (k * n + i) * n + j
}

/// `Γ^k_ij = ½ g^{km}(∂_i g_jm + ∂_j g_im − ∂_m g_ij)`.
pub fn christoffel(metric: &MetricNet) -> Result<ChristoffelField> {
    if metric.is_contravariant() {
        return Err(Error::InvalidArgument("Christoffel symbols need the covariant metric".into()));
    }
    if metric.certificate().is_none() {
        return Err(Error::NotAdmissible(format!("{}: no admissibility certificate", metric.label())));
    }
    check_order(metric.label(), 1, metric.max_order())?;
    Ok(ChristoffelField { metric: metric.clone(), max_order: metric.max_order().saturating_sub(1) })
}

impl ChristoffelField {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn metric(&self) -> &MetricNet {
        &self.metric
    }

    /// All `n³` symbols as jets of `order`, indexed by [`gamma_index`].
    pub fn jets(&self, eps: f64, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(&format!("Γ[{}]", self.metric.label()), order, self.max_order)?;
        let n = self.dim();
        let g = self.metric.jets(eps, point, order + 1)?;
        let ginv = invert_jets(n, &g.iter().map(|j| j.truncate(order)).collect::<Vec<_>>())?;
        // dg[(a*n + b)*n + c] = ∂_a g_bc
        let mut dg = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for gj in &g {
                dg.push(gj.derivative(a).expect("order ≥ 1"));
            }
        }
        let d = |a: usize, b: usize, c: usize| &dg[(a * n + b) * n + c];
        let mut out = vec![Jet::zero(n, order); n * n * n];
        for i in 0..n {
            for j in i..n {
                let lower: Vec<Jet> = (0..n).map(|m| (d(i, j, m) + d(j, i, m) - d(m, i, j)).scale(0.5)).collect();
                for k in 0..n {
                    let mut acc = Jet::zero(n, order);
                    for (m, l) in lower.iter().enumerate() {
                        let gkm = &ginv[k * n + m];
                        if gkm.coeffs().iter().any(|c| *c != 0.0) {
                            acc = acc + gkm * l;
                        }
                    }
                    out[gamma_index(n, k, j, i)] = acc.clone();
                    out[gamma_index(n, k, i, j)] = acc;
                }
            }
        }
        Ok(out)
    }

    /// Values of all symbols.
    pub fn values(&self, eps: f64, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets(eps, point, 0)?.iter().map(Jet::value).collect())
    }

    /// `Γ^k_ij` as a standalone net.
    pub fn component(&self, k: usize, i: usize, j: usize) -> EpsilonNet {
        let me = self.clone();
        let n = self.dim();
        let label = format!("Γ^{k}_{i}{j}[{}]", self.metric.label());
        EpsilonNet::new(n, self.max_order, label, move |eps, p, order| match me.jets(eps, p, order) {
            Ok(mut jets) => jets.swap_remove(gamma_index(n, k, i, j)),
            Err(_) => Jet::constant(n, order, f64::NAN),
        })
    }
}

/// `(D_Ξ H)^k = Ξ^i (∂_i H^k + Γ^k_ij H^j)`.
pub fn covariant_derivative(xi: &[EpsilonNet], h: &[EpsilonNet], gamma: &ChristoffelField) -> Result<Vec<EpsilonNet>> {
    let n = gamma.dim();
    for v in [xi, h] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        if let Some(bad) = v.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
    }
    let h_order = h.iter().map(EpsilonNet::max_order).min().unwrap_or(0);
    check_order("covariant derivative operand", 1, h_order)?;
    let max_order = xi
        .iter()
        .map(EpsilonNet::max_order)
        .min()
        .unwrap_or(0)
        .min(h_order - 1)
        .min(gamma.max_order());
    let out = (0..n)
        .map(|k| {
            let (xi, h, gamma) = (xi.to_vec(), h.to_vec(), gamma.clone());
            EpsilonNet::new(n, max_order, format!("(D_Ξ H)^{k}"), move |eps, p, order| {
                let eval = || -> Result<Jet> {
                    let g = gamma.jets(eps, p, order)?;
                    let hj = h.iter().map(|c| c.jet(eps, p, order + 1)).collect::<Result<Vec<_>>>()?;
                    let mut acc = Jet::zero(n, order);
                    for i in 0..n {
                        let xi_i = xi[i].jet(eps, p, order)?;
                        let mut inner = hj[k].derivative(i).expect("order + 1 ≥ 1");
                        for (j, hjj) in hj.iter().enumerate() {
                            inner = inner + &g[gamma_index(n, k, i, j)] * &hjj.truncate(order);
                        }
                        acc = acc + &xi_i * &inner;
                    }
                    Ok(acc)
                };
                eval().unwrap_or_else(|_| Jet::constant(n, order, f64::NAN))
            })
        })
        .collect();
    Ok(out)
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

    fn polar() -> MetricNet {
        MetricNet::from_jet_fn(2, usize::MAX, "polar", "Riemannian", |_, x| {
            let o = x[0].order();
            vec![Jet::constant(2, o, 1.0), Jet::zero(2, o), &x[0] * &x[0]]
        })
        .assume_certificate(cert(2))
    }

    #[test]
    fn flat_metric_has_vanishing_symbols() {
        let g = MetricNet::minkowski(4).assume_certificate(cert(4));
        let c = christoffel(&g).unwrap();
        assert!(c.values(0.1, &[0.1, 0.2, 0.3, 0.4]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn polar_symbols_match_closed_form() {
        let c = christoffel(&polar()).unwrap();
        let x = 1.7;
        let v = c.values(0.5, &[x, 0.3]).unwrap();
        assert_abs_diff_eq!(v[gamma_index(2, 0, 1, 1)], -x, epsilon = 1e-14);
        assert_abs_diff_eq!(v[gamma_index(2, 1, 0, 1)], 1.0 / x, epsilon = 1e-14);
        assert_abs_diff_eq!(v[gamma_index(2, 1, 1, 0)], 1.0 / x, epsilon = 1e-14);
        assert_abs_diff_eq!(v[gamma_index(2, 0, 0, 0)], 0.0);
    }

    #[test]
    fn refuses_uncertified_metric() {
        let g = MetricNet::minkowski(2);
        assert!(matches!(christoffel(&g), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn flat_covariant_derivative_is_directional() {
        let g = MetricNet::minkowski(2).assume_certificate(cert(2));
        let c = christoffel(&g).unwrap();
        let xi = vec![EpsilonNet::constant(2, 1.0), EpsilonNet::constant(2, 2.0)];
        let h = vec![
            EpsilonNet::from_jet_fn(2, usize::MAX, "h0", |_, x| &x[0] * &x[1]),
            EpsilonNet::from_jet_fn(2, usize::MAX, "h1", |_, x| x[0].sin()),
        ];
        let d = covariant_derivative(&xi, &h, &c).unwrap();
        let p = [0.3, -0.4];
        assert_abs_diff_eq!(d[0].value(0.2, &p).unwrap(), p[1] + 2.0 * p[0], epsilon = 1e-14);
        assert_abs_diff_eq!(d[1].value(0.2, &p).unwrap(), p[0].cos(), epsilon = 1e-14);
    }
}
