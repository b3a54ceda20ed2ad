use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::weights::QuasinormWeights;

/// Named constants of the divergence-side construction, all derived from
/// `C0`, `δ`, `m`, `n` and `v₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionConstants {
    pub m: usize,
    pub n: usize,
    pub v1: f64,
    pub c0: f64,
    pub delta: f64,
    /// `√((n+1)·m·C0)`, the gradient threshold splitting `A¹`/`A²`.
    pub c1: f64,
    /// `δ^{−n}`.
    pub c2: f64,
    /// `(n+3)²·C0·C2`.
    pub c3: f64,
    /// `(n+1)·C0·max{C3, (n+1)·C2}`.
    pub c4: f64,
    /// `(2·m·C4)^{−1}`.
    pub p: f64,
    /// `(n+1)·C2`.
    pub kappa1: f64,
}

pub const DEFAULT_DELTA: f64 = 0.5;

impl ConstructionConstants {
    pub fn new(m: usize, n: usize, c0: f64, delta: f64, v1: f64) -> Result<Self> {
        if m == 0 || n < m {
            return Err(Error::input(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::input(format!("C0 must be positive, got {c0}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(v1.is_finite() && v1 > 0.0) {
            return Err(Error::input(format!("v1 must be positive, got {v1}")));
        }
        let (mf, nf) = (m as f64, n as f64);
        let c1 = ((nf + 1.0) * mf * c0).sqrt();
        let c2 = delta.powi(-(n as i32));
        let c3 = (nf + 3.0).powi(2) * c0 * c2;
        let c4 = (nf + 1.0) * c0 * c3.max((nf + 1.0) * c2);
        let p = 1.0 / (2.0 * mf * c4);
        let kappa1 = (nf + 1.0) * c2;
        Ok(Self {
            m,
            n,
            v1,
            c0,
            delta,
            c1,
            c2,
            c3,
            c4,
            p,
            kappa1,
        })
    }

    /// `ρ(r) = κ₁·r^{−n−v₁}`.
    pub fn rho(&self, r: f64) -> f64 {
        self.kappa1 * r.powf(-(self.n as f64 + self.v1))
    }

    /// `ρ(2^t)` computed through `exp2` so dyadic ratios stay exact.
    pub fn rho_dyadic(&self, t: i32) -> f64 {
        self.kappa1 * (-(self.n as f64 + self.v1) * t as f64).exp2()
    }

    /// Contraction factor `λ = 2^{−n−v₁}` of `ρ` along dyadic radii.
    pub fn lambda(&self) -> f64 {
        (-(self.n as f64 + self.v1)).exp2()
    }

    /// Largest admissible diameter of the neighbourhood `U₀`:
    /// `(2·n·m·(n+1)·C0·δ^{−n})^{−1}`.
    pub fn u0_diameter(&self) -> f64 {
        let (mf, nf) = (self.m as f64, self.n as f64);
        1.0 / (2.0 * nf * mf * (nf + 1.0) * self.c0 * self.c2)
    }

    /// `κ₀` such that `β_F = κ₀·H_v(F) ≤ Q` for every constructed `F`.
    ///
    /// From `|a₁| ≤ C3·Q^{v₁}` and `|a_j| ≤ (n+1)·C2·Q^{v_j}` (`j ≥ 2`).
    pub fn kappa0(&self, weights: &QuasinormWeights) -> f64 {
        let nf = self.n as f64;
        let mut worst = self.c3.powf(1.0 / weights.get(0));
        for j in 1..weights.n() {
            worst = worst.max(((nf + 1.0) * self.c2).powf(1.0 / weights.get(j)));
        }
        1.0 / worst
    }

    /// `κ₀*` such that `κ₀*·Q ≤ β_F`, valid once `Q^{v₁} ≥ 2·C0`.
    ///
    /// From `|∂₁(F+θ)(x)| ≥ Q^{v₁}` and
    /// `|∂₁(F+θ)| ≤ (1 + (n−1)·C0)·max|a_i| + C0`.
    pub fn kappa0_star(&self, weights: &QuasinormWeights) -> f64 {
        let spread = 2.0 * (1.0 + (self.n as f64 - 1.0) * self.c0);
        self.kappa0(weights) * spread.powf(-1.0 / self.v1)
    }
}

/// Volume of the unit ball in `ℝ^m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / m as f64 * unit_ball_volume(m - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_veronese_plane_curve() {
        // m = 1, n = 2, C0 = 2, δ = 1/2.
        let k = ConstructionConstants::new(1, 2, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(k.c2, 4.0);
        assert_eq!(k.c3, 200.0);
        assert_eq!(k.c4, 3.0 * 2.0 * 200.0);
        assert_eq!(k.p, 1.0 / 2400.0);
        assert_eq!(k.kappa1, 12.0);
        assert!((k.c1 - 6f64.sqrt()).abs() < 1e-15);
        assert!((k.u0_diameter() - 1.0 / 96.0).abs() < 1e-15);
        assert!(k.p > 0.0 && k.p < 1.0 && k.kappa1 > 1.0);
    }

    #[test]
    fn rho_contracts_dyadically() {
        let k = ConstructionConstants::new(1, 2, 2.0, 0.5, 1.0).unwrap();
        for t in 1..=40 {
            let ratio = k.rho_dyadic(t + 1) / k.rho_dyadic(t);
            assert_eq!(ratio, k.lambda());
            assert!(k.rho_dyadic(t + 1) < k.rho_dyadic(t));
        }
        assert!((k.rho(8.0) - 12.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(ConstructionConstants::new(1, 2, 2.0, 1.0, 1.0).is_err());
        assert!(ConstructionConstants::new(1, 2, 2.0, 0.0, 1.0).is_err());
        assert!(ConstructionConstants::new(2, 1, 2.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
