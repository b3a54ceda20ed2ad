//! Convergence/divergence classification of the Groshev-type sums
//! `Σ Ψ(a)` and `Σ |a|(Ψ(a)/|a|)^{s+1−m}` over dyadic quasinorm blocks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ApproxFunction, MultivariableApproxFunction, QuasinormWeights};

/// Blocks `(2^k, 2^{k+1}]` for `k` in this range.
pub const FIRST_BLOCK: i32 = -1;
pub const LAST_BLOCK: i32 = 59;
/// Blocks up to this index are counted exactly.
pub const EXACT_BLOCKS: i32 = 12;

const EXPONENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriterionKind {
    ConvergencePart,
    DivergencePart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub kind: CriterionKind,
    pub verdict: Verdict,
    /// `(k, block sum)` pairs.
    pub blocks: Vec<(i32, f64)>,
    pub rationale: String,
}

impl CriterionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Number of `a ∈ ℤⁿ∖{0}` with `2^k < |a|_v ≤ 2^{k+1}`: exact for small `k`,
/// `c·2^{kn}` beyond with `c` taken from the last exact block.
pub fn block_counts(v: &QuasinormWeights) -> Result<Vec<(i32, f64)>> {
    let n = v.n() as i32;
    let exact = |k: i32| -> Result<f64> {
        let upper = v.limits(2f64.powi(k + 1))?;
        let lower = v.limits(2f64.powi(k))?;
        let prod = |l: &[i64]| l.iter().map(|&x| (2 * x + 1) as f64).product::<f64>();
        Ok(prod(&upper) - prod(&lower))
    };
    let c = exact(EXACT_BLOCKS)? / 2f64.powi(EXACT_BLOCKS * n);
    (FIRST_BLOCK..=LAST_BLOCK)
        .map(|k| {
            let count = if k <= EXACT_BLOCKS {
                exact(k)?
            } else {
                c * 2f64.powi(k * n)
            };
            Ok((k, count))
        })
        .collect()
}

fn block_midpoint(k: i32) -> f64 {
    2f64.powf(k as f64 + 0.5)
}

/// Classifies `Σ_{a≠0} Ψ(a)`.
pub fn classify_convergence_sum(psi: &MultivariableApproxFunction) -> Result<CriterionReport> {
    let n = psi.n() as f64;
    let blocks: Vec<(i32, f64)> = block_counts(&psi.weights)?
        .into_iter()
        .map(|(k, count)| (k, count * psi.at_height(block_midpoint(k))))
        .collect();
    let (verdict, rationale) = match &psi.psi {
        ApproxFunction::PowerLaw { tau, .. } => {
            if *tau > n {
                (
                    Verdict::Converges,
                    format!("power law with tau = {tau} > n = {n}: block k is ≍ 2^(k(n−tau))"),
                )
            } else {
                (
                    Verdict::Diverges,
                    format!("power law with tau = {tau} ≤ n = {n}: block sums do not decay"),
                )
            }
        }
        ApproxFunction::PowerLog { tau, beta } => {
            if *tau > n + EXPONENT_TOLERANCE {
                (Verdict::Converges, format!("tau = {tau} > n = {n}"))
            } else if (*tau - n).abs() <= EXPONENT_TOLERANCE {
                if *beta < -1.0 {
                    (
                        Verdict::Converges,
                        format!("tau = n and block k is ≍ k^{beta} with beta < −1"),
                    )
                } else {
                    (
                        Verdict::Diverges,
                        format!("tau = n and block k is ≍ k^{beta} with beta ≥ −1"),
                    )
                }
            } else {
                (Verdict::Diverges, format!("tau = {tau} < n = {n}"))
            }
        }
        ApproxFunction::Table(_) => (
            Verdict::Undecided,
            "tabulated psi has no analytic tail; block sums reported without a verdict".to_string(),
        ),
    };
    Ok(CriterionReport {
        kind: CriterionKind::ConvergencePart,
        verdict,
        blocks,
        rationale,
    })
}

/// Block exponent `E = n + v₁ − (τ + v₁)(s + 1 − m)` of the divergence sum
/// for `ψ(t) = t^{−τ}`: block `k` contributes `≍ 2^{kE}`.
pub fn divergence_exponent(n: usize, m: usize, v1: f64, tau: f64, s: f64) -> f64 {
    n as f64 + v1 - (tau + v1) * (s + 1.0 - m as f64)
}

/// Classifies `Σ_{a≠0} |a| (Ψ(a)/|a|)^{s+1−m}`.
pub fn classify_divergence_sum(psi: &MultivariableApproxFunction, m: usize, s: f64) -> Result<CriterionReport> {
    let n = psi.n();
    if m == 0 || m > n {
        return Err(Error::input(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    if !(s > m as f64 - 1.0) {
        return Err(Error::input(format!("need s > m − 1 = {}, got s = {s}", m - 1)));
    }
    let v1 = psi.weights.max();
    let power = s + 1.0 - m as f64;
    let blocks: Vec<(i32, f64)> = block_counts(&psi.weights)?
        .into_iter()
        .map(|(k, count)| {
            let mid = block_midpoint(k);
            let norm = mid.powf(v1);
            (k, count * norm * (psi.at_height(mid) / norm).powf(power))
        })
        .collect();
    let analytic = |tau: f64, beta: f64| {
        let e = divergence_exponent(n, m, v1, tau, s);
        if e > EXPONENT_TOLERANCE {
            (Verdict::Diverges, format!("block exponent {e} > 0"))
        } else if e < -EXPONENT_TOLERANCE {
            (Verdict::Converges, format!("block exponent {e} < 0"))
        } else if beta * power >= -1.0 {
            (
                Verdict::Diverges,
                format!(
                    "block exponent 0 with logarithmic factor k^{} (harmonic or slower)",
                    beta * power
                ),
            )
        } else {
            (
                Verdict::Converges,
                format!("block exponent 0 with logarithmic factor k^{}", beta * power),
            )
        }
    };
    let (verdict, rationale) = match &psi.psi {
        ApproxFunction::PowerLaw { tau, .. } => analytic(*tau, 0.0),
        ApproxFunction::PowerLog { tau, beta } => analytic(*tau, *beta),
        ApproxFunction::Table(_) => (
            Verdict::Undecided,
            "tabulated psi has no analytic tail; block sums reported without a verdict".to_string(),
        ),
    };
    Ok(CriterionReport {
        kind: CriterionKind::DivergencePart,
        verdict,
        blocks,
        rationale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalExponent {
    pub value: f64,
    pub warning: Option<String>,
}

/// `m − 1 + (n+1)/(τ+1)`; the dimension bound is only claimed for `τ ≥ n`.
pub fn critical_exponent(m: usize, n: usize, tau: f64) -> CriticalExponent {
    let value = m as f64 - 1.0 + (n as f64 + 1.0) / (tau + 1.0);
    let warning =
        (tau < n as f64).then(|| format!("tau = {tau} < n = {n}: the dimension bound is stated only for tau ≥ n"));
    CriticalExponent { value, warning }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(n: usize, tau: f64) -> MultivariableApproxFunction {
        MultivariableApproxFunction::new(ApproxFunction::power_law(tau).unwrap(), QuasinormWeights::uniform(n))
    }

    #[test]
    fn convergence_examples() {
        assert_eq!(
            classify_convergence_sum(&power(2, 3.0)).unwrap().verdict,
            Verdict::Converges
        );
        assert_eq!(
            classify_convergence_sum(&power(2, 2.0)).unwrap().verdict,
            Verdict::Diverges
        );

        let plog = MultivariableApproxFunction::new(
            ApproxFunction::power_log(3.0, -2.0).unwrap(),
            QuasinormWeights::uniform(3),
        );
        let report = classify_convergence_sum(&plog).unwrap();
        assert_eq!(report.verdict, Verdict::Converges);
        // Block sums decay like k^{-2}: k²·sum stays within a bounded band.
        let scaled: Vec<f64> = report
            .blocks
            .iter()
            .filter(|(k, _)| (10..=40).contains(k))
            .map(|(k, s)| s * (*k as f64).powi(2))
            .collect();
        let (lo, hi) = scaled
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(hi / lo < 4.0, "{lo} {hi}");
    }

    #[test]
    fn divergence_examples() {
        let boundary = classify_divergence_sum(&power(2, 3.0), 1, 0.75).unwrap();
        assert_eq!(boundary.verdict, Verdict::Diverges);
        let tail: Vec<f64> = boundary
            .blocks
            .iter()
            .filter(|(k, _)| (1..=40).contains(k))
            .map(|b| b.1)
            .collect();
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(hi / lo < 2.0, "boundary blocks stay flat: {lo} {hi}");

        assert_eq!(
            classify_divergence_sum(&power(2, 3.0), 1, 0.8).unwrap().verdict,
            Verdict::Converges
        );
        assert_eq!(
            classify_divergence_sum(&power(3, 4.0), 2, 1.7).unwrap().verdict,
            Verdict::Diverges
        );
        assert!(classify_divergence_sum(&power(3, 4.0), 2, 1.0).is_err());
    }

    #[test]
    fn critical_examples() {
        assert_eq!(critical_exponent(1, 2, 3.0).value, 0.75);
        assert_eq!(critical_exponent(2, 3, 3.0).value, 2.0);
        assert_eq!(critical_exponent(1, 2, 5.0).value, 0.5);
        assert!(critical_exponent(1, 2, 1.0).warning.is_some());
        assert!(critical_exponent(1, 2, 2.0).warning.is_none());
    }

    #[test]
    fn exact_counts_match_box_formula() {
        let v = QuasinormWeights::new(vec![1.5, 0.5]).unwrap();
        let counts = block_counts(&v).unwrap();
        // Block k = 0 is (1, 2]: 14 vectors up to 2 minus 8 up to 1.
        assert_eq!(counts.iter().find(|(k, _)| *k == 0).unwrap().1, 14.0 - 8.0);
        assert!(counts.iter().all(|(_, c)| *c >= 0.0));
    }

    #[test]
    fn json_shape() {
        let json = classify_convergence_sum(&power(2, 3.0)).unwrap().to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["kind"], "ConvergencePart");
        assert_eq!(value["verdict"], "Converges");
        assert!(value["blocks"][0].is_array());
        assert!(value["rationale"].is_string());
    }
}
