use crate::error::{Error, Result};

/// Axis-aligned compact box `∏ [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl CompactBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidBox(format!("axis {i}: need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.contains_with_slack(p, 0.0)
    }

    pub fn contains_with_slack(&self, p: &[f64], slack: f64) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| *x >= l - slack && *x <= u + slack)
    }
}

/// Strictly decreasing sequence of regularization parameters in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSchedule(Vec<f64>);

impl EpsSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        for (i, e) in values.iter().enumerate() {
            if !(*e > 0.0 && *e <= 1.0) {
                return Err(Error::InvalidSchedule(format!("entry {i} = {e} is outside (0, 1]")));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(format!("entries {i} and {} are not strictly decreasing", i + 1)));
        }
        Ok(Self(values))
    }

    /// `ε_k = 2^{-k}` for `k = k_min..=k_max`.
    pub fn dyadic(k_min: u32, k_max: u32) -> Result<Self> {
        Self::new((k_min..=k_max).map(|k| 2f64.powi(-(k as i32))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        *self.0.last().expect("nonempty")
    }

    /// The trailing entries (used for tail-only diagnostics).
    pub fn tail(&self, n: usize) -> Self {
        let start = self.0.len().saturating_sub(n);
        Self(self.0[start..].to_vec())
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self::dyadic(3, 12).expect("valid default schedule")
    }
}

/// Where an ε-net has ε-scale structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    /// The hyperplane `x_axis = center`.
    Hyperplane { axis: usize, center: f64 },
    /// A point; refines every axis around its coordinates.
    Point(Vec<f64>),
}

impl Feature {
    fn centers_on(&self, axis: usize) -> Option<f64> {
        match self {
            Feature::Hyperplane { axis: a, center } if *a == axis => Some(*center),
            Feature::Point(p) => p.get(axis).copied(),
            _ => None,
        }
    }
}

/// Tensor-grid sampling: uniform cells of width `box/base_cells`, refined to
/// spacing `≤ refine_spacing·ε` within `refine_halfwidth·ε` of every feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub base_cells: usize,
    pub features: Vec<Feature>,
    pub refine_spacing: f64,
    pub refine_halfwidth: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { base_cells: 64, features: Vec::new(), refine_spacing: 0.25, refine_halfwidth: 2.0 }
    }
}

impl SamplingPlan {
    pub fn with_cells(base_cells: usize) -> Self {
        Self { base_cells, ..Self::default() }
    }

    pub fn with_features(mut self, features: Vec<Feature>) -> Self {
        self.features = features;
        self
    }

    pub fn axis_nodes(&self, bx: &CompactBox, axis: usize, eps: f64) -> Vec<f64> {
        let (lo, hi) = (bx.lower()[axis], bx.upper()[axis]);
        let cells = self.base_cells.max(1);
        let mut nodes: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
        let step = self.refine_spacing * eps;
        let half = (self.refine_halfwidth / self.refine_spacing).ceil() as i64;
        for f in &self.features {
            if let Some(c) = f.centers_on(axis) {
                for i in -half..=half {
                    let x = c + i as f64 * step;
                    if x >= lo && x <= hi {
                        nodes.push(x);
                    }
                }
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        nodes
    }

    /// Every grid point of the tensor grid at this ε.
    pub fn grid(&self, bx: &CompactBox, eps: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..bx.dim()).map(|a| self.axis_nodes(bx, a, eps)).collect();
        let mut out = vec![Vec::with_capacity(bx.dim())];
        for nodes in &axes {
            let mut next = Vec::with_capacity(out.len() * nodes.len());
            for prefix in &out {
                for &x in nodes {
                    let mut p = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}
