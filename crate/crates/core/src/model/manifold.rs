use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::poly::Poly;

/// Closed axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::input("box bounds must be non-empty and of equal length"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !l.is_finite() || !h.is_finite() || l >= h)
        {
            return Err(Error::input("box needs finite bounds with lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(m: usize) -> Self {
        Self {
            lo: vec![0.0; m],
            hi: vec![1.0; m],
        }
    }

    /// Box with the given centre and per-axis half-width.
    pub fn centered(center: &[f64], half_width: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Longest side.
    pub fn diam(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// Concentric box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        Self {
            lo: c.iter().zip(&self.lo).map(|(c, l)| c - factor * (c - l)).collect(),
            hi: c.iter().zip(&self.hi).map(|(c, h)| c + factor * (h - c)).collect(),
        }
    }

    pub fn intersect(&self, other: &DomainBox) -> Option<DomainBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        DomainBox::new(lo, hi).ok()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
            .collect()
    }

    /// Tensor grid with `per_axis` points per axis, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                (0..per_axis)
                    .map(|i| l + (h - l) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::with_capacity(self.dim())];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// The built-in Monge charts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// `x ↦ (x, x², …, xⁿ)`.
    Veronese { n: usize },
    /// `x ↦ (x, p_2(x), …, p_n(x))` for user polynomials.
    Curve { extra: Vec<Poly> },
    /// `(x₁, x₂) ↦ (x₁, x₂, √(1 − x₁² − x₂²))`.
    SpherePatch,
    /// `(x₁, x₂) ↦ (x₁, x₂, x₁² + x₂²)`.
    Paraboloid,
    /// `x ↦ x` on `ℝ^m`.
    Identity { m: usize },
}

impl ManifoldKind {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Veronese { n } => (1, *n),
            Self::Curve { extra } => (1, 1 + extra.len()),
            Self::SpherePatch | Self::Paraboloid => (2, 3),
            Self::Identity { m } => (*m, *m),
        }
    }
}

/// Value and Jacobian of the chart at a point (`gradient[i][j] = ∂f_i/∂x_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    pub value: Vec<f64>,
    pub gradient: Vec<Vec<f64>>,
}

/// A Monge parameterisation `f : U ⊂ ℝ^m → ℝ^n` with `f_i(x) = x_i` for `i ≤ m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MongeManifold {
    kind: ManifoldKind,
    domain: DomainBox,
    c0: f64,
}

impl MongeManifold {
    /// Builds the chart and certifies `C0` by dense grid sampling.
    pub fn new(kind: ManifoldKind, domain: DomainBox) -> Result<Self> {
        let (m, n) = kind.dims();
        if n < m || m == 0 {
            return Err(Error::input(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
        }
        if let ManifoldKind::Veronese { n } = kind {
            if n == 0 {
                return Err(Error::input("Veronese curve needs n ≥ 1"));
            }
        }
        if domain.dim() != m {
            return Err(Error::input(format!(
                "domain has dimension {}, chart needs {m}",
                domain.dim()
            )));
        }
        if kind == ManifoldKind::SpherePatch {
            let r2 = |a: f64, b: f64| a.max(-a).max(b.max(-b)).powi(2);
            let worst = r2(domain.lo[0], domain.hi[0]) + r2(domain.lo[1], domain.hi[1]);
            if worst >= 1.0 {
                return Err(Error::domain("sphere patch domain must lie inside the open unit disk"));
            }
        }
        let mut manifold = Self { kind, domain, c0: 0.0 };
        manifold.c0 = manifold.certify_c0();
        Ok(manifold)
    }

    pub fn veronese(n: usize, domain: DomainBox) -> Result<Self> {
        Self::new(ManifoldKind::Veronese { n }, domain)
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.kind.dims().0
    }

    pub fn n(&self) -> usize {
        self.kind.dims().1
    }

    /// Grid-certified bound on `|f|`, `|∇f|` and `|Hessian f|` over `U`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn eval(&self, x: &[f64]) -> Result<ManifoldPoint> {
        self.check_point(x)?;
        let mut value = vec![0.0; self.n()];
        self.value_into(x, &mut value);
        let gradient = (0..self.n()).map(|i| self.gradient_row(i, x)).collect();
        Ok(ManifoldPoint { value, gradient })
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.m() {
            return Err(Error::input(format!(
                "point has dimension {}, chart needs {}",
                x.len(),
                self.m()
            )));
        }
        if !self.domain.contains(x) {
            return Err(Error::domain(format!("point {x:?} lies outside U")));
        }
        if self.kind == ManifoldKind::SpherePatch && x[0] * x[0] + x[1] * x[1] >= 1.0 {
            return Err(Error::domain("sphere patch needs x₁² + x₂² < 1"));
        }
        Ok(())
    }

    /// Writes `f(x)` into `out`; the point is not validated.
    pub fn value_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.m();
        out[..m].copy_from_slice(&x[..m]);
        match &self.kind {
            ManifoldKind::Veronese { n } => {
                let mut p = x[0];
                for slot in out.iter_mut().take(*n).skip(1) {
                    p *= x[0];
                    *slot = p;
                }
            }
            ManifoldKind::Curve { extra } => {
                for (slot, poly) in out[1..].iter_mut().zip(extra) {
                    *slot = poly.eval(x[0]);
                }
            }
            ManifoldKind::SpherePatch => {
                out[2] = (1.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
            }
            ManifoldKind::Paraboloid => {
                out[2] = x[0] * x[0] + x[1] * x[1];
            }
            ManifoldKind::Identity { .. } => {}
        }
    }

    /// `∇f_i(x)`, an `m`-vector.
    pub fn gradient_row(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut row = vec![0.0; m];
        if i < m {
            row[i] = 1.0;
            return row;
        }
        match &self.kind {
            ManifoldKind::Veronese { .. } => {
                let k = (i + 1) as i32;
                row[0] = k as f64 * x[0].powi(k - 1);
            }
            ManifoldKind::Curve { extra } => row[0] = extra[i - 1].d1(x[0]),
            ManifoldKind::SpherePatch => {
                let s = (1.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
                row[0] = -x[0] / s;
                row[1] = -x[1] / s;
            }
            ManifoldKind::Paraboloid => {
                row[0] = 2.0 * x[0];
                row[1] = 2.0 * x[1];
            }
            ManifoldKind::Identity { .. } => unreachable!("identity has no extra components"),
        }
        row
    }

    /// Hessian of `f_i` at `x`, an `m × m` matrix.
    pub fn hessian(&self, i: usize, x: &[f64]) -> Vec<Vec<f64>> {
        let m = self.m();
        let mut h = vec![vec![0.0; m]; m];
        if i < m {
            return h;
        }
        match &self.kind {
            ManifoldKind::Veronese { .. } => {
                let k = (i + 1) as i32;
                h[0][0] = (k * (k - 1)) as f64 * x[0].powi(k - 2);
            }
            ManifoldKind::Curve { extra } => h[0][0] = extra[i - 1].d2(x[0]),
            ManifoldKind::SpherePatch => {
                let s2 = 1.0 - x[0] * x[0] - x[1] * x[1];
                let s3 = s2 * s2.sqrt();
                h[0][0] = -(1.0 - x[1] * x[1]) / s3;
                h[1][1] = -(1.0 - x[0] * x[0]) / s3;
                h[0][1] = -x[0] * x[1] / s3;
                h[1][0] = h[0][1];
            }
            ManifoldKind::Paraboloid => {
                h[0][0] = 2.0;
                h[1][1] = 2.0;
            }
            ManifoldKind::Identity { .. } => unreachable!("identity has no extra components"),
        }
        h
    }

    /// Largest absolute second derivative of any component at `x`.
    pub fn max_second_derivative(&self, x: &[f64]) -> f64 {
        (self.m()..self.n())
            .flat_map(|i| self.hessian(i, x).into_iter().flatten())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn certify_c0(&self) -> f64 {
        let per_axis = certification_points(self.m());
        let mut value = vec![0.0; self.n()];
        let mut bound: f64 = 0.0;
        for x in self.domain.grid(per_axis) {
            self.value_into(&x, &mut value);
            bound = value.iter().fold(bound, |acc, v| acc.max(v.abs()));
            for i in self.m()..self.n() {
                bound = self.gradient_row(i, &x).iter().fold(bound, |acc, v| acc.max(v.abs()));
            }
            bound = bound.max(self.max_second_derivative(&x));
            // Identity components contribute |∇f_i| = 1.
            bound = bound.max(1.0);
        }
        bound
    }
}

/// Grid points per axis for sup certification: pitch ≤ diam/1024 in 1-D,
/// coarser in higher dimensions to keep the cost bounded.
pub(crate) fn certification_points(m: usize) -> usize {
    match m {
        1 | 2 => 1025,
        3 => 129,
        _ => 33,
    }
}
