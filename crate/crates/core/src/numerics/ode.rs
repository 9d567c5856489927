//! Dormand–Prince 5(4) with dense output.

use crate::error::Result;

/// First-order system `y' = F(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Largest step allowed when a step starts at `(t, y)`.
    fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
    /// Times the integrator must land on exactly (kinks in the right-hand side).
    pub breakpoints: Vec<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            min_step: 1e-14,
            max_steps: 200_000,
            breakpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    StepUnderflow { t: f64, h: f64 },
    MaxSteps { t: f64 },
    RhsFailure { t: f64, message: String },
}

#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

/// Piecewise quartic dense output over all accepted steps.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    steps: Vec<DenseStep>,
    t_start: f64,
    y_start: Vec<f64>,
    pub termination: Termination,
    pub accepted: usize,
    pub rejected: usize,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    /// Last time covered by the dense output.
    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(self.t_start, |s| s.t0 + s.h)
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn dim(&self) -> usize {
        self.y_start.len()
    }

    /// Step end points (including the start time).
    pub fn mesh(&self) -> Vec<f64> {
        std::iter::once(self.t_start).chain(self.steps.iter().map(|s| s.t0 + s.h)).collect()
    }

    /// Dense state at `t`, clamped to the covered interval.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.steps.is_empty() || t <= self.t_start {
            out.copy_from_slice(&self.y_start);
            return;
        }
        let idx = self.steps.partition_point(|s| s.t0 + s.h < t).min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            let r = &s.rcont;
            *o = r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
    }

    pub fn final_state(&self) -> Vec<f64> {
        self.eval(self.t_end())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates from `t0` to `t1 > t0`. Failures inside the integration
/// (step underflow, step budget, right-hand-side errors) end the run early
/// and are reported in [`DenseSolution::termination`] with the partial
/// trajectory intact.
pub fn integrate(sys: &impl OdeSystem, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> DenseSolution {
    let n = sys.dim();
    assert_eq!(y0.len(), n, "initial state has wrong dimension");
    assert!(t1 >= t0, "integration runs forward in time");
    let mut sol = DenseSolution {
        steps: Vec::new(),
        t_start: t0,
        y_start: y0.to_vec(),
        termination: Termination::Completed,
        accepted: 0,
        rejected: 0,
    };
    if t1 == t0 {
        return sol;
    }
    let mut stops: Vec<f64> = opts.breakpoints.iter().copied().filter(|&b| b > t0 && b < t1).collect();
    stops.push(t1);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut h = opts.initial_step.unwrap_or(0.0);
    let mut stop_idx = 0;
    let mut need_k1 = true;

    macro_rules! eval {
        ($tt:expr, $yy:expr, $out:expr) => {
            if let Err(e) = sys.rhs($tt, $yy, $out) {
                sol.termination = Termination::RhsFailure { t: $tt, message: e.to_string() };
                return sol;
            }
        };
    }

    while stop_idx < stops.len() {
        let target = stops[stop_idx];
        if need_k1 {
            eval!(t, &y, &mut k[0]);
            need_k1 = false;
            if h <= 0.0 {
                h = initial_step(&y, &k[0], opts, target - t);
            }
        }
        if sol.accepted + sol.rejected >= opts.max_steps {
            sol.termination = Termination::MaxSteps { t };
            return sol;
        }
        let cap = sys.max_step(t, &y);
        let mut hs = h.min(cap).min(target - t);
        let lands = hs >= target - t || target - t - hs < 1e-12 * (1.0 + target.abs());
        if lands {
            hs = target - t;
        }
        if hs < opts.min_step && !lands {
            sol.termination = Termination::StepUnderflow { t, h: hs };
            return sol;
        }

        for i in 0..n {
            ytmp[i] = y[i] + hs * A21 * k[0][i];
        }
        eval!(t + C2 * hs, &ytmp, &mut k[1]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
        }
        eval!(t + C3 * hs, &ytmp, &mut k[2]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        eval!(t + C4 * hs, &ytmp, &mut k[3]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        eval!(t + C5 * hs, &ytmp, &mut k[4]);
        for i in 0..n {
            ytmp[i] = y[i]
                + hs * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        eval!(t + hs, &ytmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        eval!(t + hs, &ynew, &mut k[6]);

        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            sol.rejected += 1;
            h = hs * 0.2;
            continue;
        }

        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
        if err <= 1.0 {
            let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = hs * k[0][i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - hs * k[6][i] - bspl;
                rcont[4][i] = hs
                    * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            }
            sol.steps.push(DenseStep { t0: t, h: hs, rcont });
            sol.accepted += 1;
            t = if lands { target } else { t + hs };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            // The step proposal keeps growing from the accepted size, not the capped one.
            h = if lands { h.max(hs * fac) } else { hs * fac };
            if lands {
                stop_idx += 1;
                need_k1 = true;
            }
        } else {
            sol.rejected += 1;
            h = hs * fac.min(1.0);
        }
    }
    sol
}

fn initial_step(y: &[f64], f0: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
    h.min(span).max(opts.min_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = integrate(&Oscillator, 0.0, &[1.0, 0.0], 10.0, &OdeOptions::default());
        assert!(sol.completed());
        for &t in &[0.37, 2.5, 7.77, 10.0] {
            let y = sol.eval(t);
            assert_abs_diff_eq!(y[0], f64::cos(t), epsilon = 1e-8);
            assert_abs_diff_eq!(y[1], -f64::sin(t), epsilon = 1e-8);
        }
    }

    struct Capped;
    impl OdeSystem for Capped {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, _y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = 1.0;
            Ok(())
        }
        fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
            0.01
        }
    }

    #[test]
    fn step_cap_and_breakpoints_are_honoured() {
        let opts = OdeOptions { breakpoints: vec![0.123], ..Default::default() };
        let sol = integrate(&Capped, 0.0, &[0.0], 1.0, &opts);
        let mesh = sol.mesh();
        assert!(mesh.windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-15));
        assert!(mesh.iter().any(|&t| t == 0.123));
        assert_abs_diff_eq!(sol.final_state()[0], 1.0, epsilon = 1e-13);
    }

    struct Blowup;
    impl OdeSystem for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[0] * y[0];
            Ok(())
        }
    }

    #[test]
    fn singularity_gives_partial_trajectory() {
        let sol = integrate(&Blowup, 0.0, &[1.0], 2.0, &OdeOptions::default());
        assert!(!sol.completed());
        assert!(sol.t_end() < 1.0 && sol.t_end() > 0.99);
    }
}
