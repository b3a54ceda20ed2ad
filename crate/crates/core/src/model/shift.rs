use serde::Serialize;

use crate::model::manifold::DomainBox;
use crate::model::poly::Poly;

/// Inhomogeneous shift `θ : U → ℝ`.
///
/// Polynomial shifts depend on `x₁` only, which covers the constant case and
/// the `θ(x) = x^{n+1}` shift on Veronese curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shift {
    Constant { value: f64 },
    Poly { poly: Poly },
}

impl Shift {
    pub fn zero() -> Self {
        Shift::Constant { value: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        Shift::Constant { value }
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        Shift::Poly { poly: Poly(coeffs) }
    }

    /// `θ(x) = x₁^{n+1}`.
    pub fn next_power(n: usize) -> Self {
        Shift::Poly {
            poly: Poly::monomial(n + 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Shift::Constant { value } => *value == 0.0,
            Shift::Poly { poly } => poly.0.iter().all(|c| *c == 0.0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Shift::Constant { value } => *value,
            Shift::Poly { poly } => poly.eval(x[0]),
        }
    }

    /// `∂θ/∂x₁`; all other partials vanish.
    pub fn d1(&self, x: &[f64]) -> f64 {
        match self {
            Shift::Constant { .. } => 0.0,
            Shift::Poly { poly } => poly.d1(x[0]),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[0] = self.d1(x);
        g
    }

    pub fn d11(&self, x: &[f64]) -> f64 {
        match self {
            Shift::Constant { .. } => 0.0,
            Shift::Poly { poly } => poly.d2(x[0]),
        }
    }

    /// Grid sup of `|θ|`, `|∇θ|`, `|Hessian θ|` over the box.
    pub fn c0(&self, domain: &DomainBox) -> f64 {
        let per_axis = crate::model::manifold::certification_points(1);
        let lo = domain.lo[0];
        let hi = domain.hi[0];
        (0..per_axis)
            .map(|i| {
                let mut x = domain.lo.clone();
                x[0] = lo + (hi - lo) * i as f64 / (per_axis - 1) as f64;
                self.eval(&x).abs().max(self.d1(&x).abs()).max(self.d11(&x).abs())
            })
            .fold(0.0, f64::max)
    }
}
