use crate::error::{Error, Result};

/// Absolute tolerance on `Σ v_i = n`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Exponent weights `v` of the quasinorm `|y|_v = max |y_i|^{1/v_i}`.
///
/// Weights are kept in the caller's coordinate order so that they stay
/// aligned with the Monge components of a manifold. The permutation that
/// sorts them into non-increasing order is recorded on construction;
/// operations that need `v_1 = max v_i` check [`is_canonical`](Self::is_canonical).
#[derive(Debug, Clone, PartialEq)]
pub struct QuasinormWeights {
    v: Vec<f64>,
    perm: Vec<usize>,
}

impl QuasinormWeights {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::input("weights must be non-empty"));
        }
        if let Some(bad) = v.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::input(format!("weights must be positive, got {bad}")));
        }
        let n = v.len() as f64;
        let sum: f64 = v.iter().sum();
        if (sum - n).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::input(format!("weights must sum to n = {n}, got {sum}")));
        }
        let mut perm: Vec<usize> = (0..v.len()).collect();
        perm.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
        Ok(Self { v, perm })
    }

    /// The weights `(1, …, 1)`, for which `|·|_v` is the supremum norm.
    pub fn uniform(n: usize) -> Self {
        Self {
            v: vec![1.0; n],
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }

    pub fn get(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn max(&self) -> f64 {
        self.v[self.perm[0]]
    }

    /// Permutation with `v[perm[0]] ≥ v[perm[1]] ≥ …`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// True when the first coordinate already carries the largest weight.
    pub fn is_canonical(&self) -> bool {
        self.v[0] >= self.max()
    }

    /// Weights reordered non-increasingly together with the permutation used.
    pub fn canonical(&self) -> (QuasinormWeights, Vec<usize>) {
        let v = self.perm.iter().map(|&i| self.v[i]).collect();
        (
            Self {
                v,
                perm: (0..self.n()).collect(),
            },
            self.perm.clone(),
        )
    }

    /// Reorders a coordinate tuple with the recorded permutation.
    pub fn permute<T: Clone>(&self, a: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| a[i].clone()).collect()
    }

    pub fn quasinorm(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.n() {
            return Err(Error::input(format!(
                "tuple has length {}, weights have length {}",
                a.len(),
                self.n()
            )));
        }
        Ok(self.quasinorm_unchecked(a.iter().copied()))
    }

    /// Quasinorm of an integer vector; lengths must already agree.
    pub fn height(&self, a: &[i64]) -> f64 {
        debug_assert_eq!(a.len(), self.n());
        self.quasinorm_unchecked(a.iter().map(|&x| x as f64))
    }

    fn quasinorm_unchecked(&self, a: impl Iterator<Item = f64>) -> f64 {
        a.zip(&self.v)
            .map(|(x, w)| {
                let x = x.abs();
                if x == 0.0 {
                    0.0
                } else if *w == 1.0 {
                    x
                } else {
                    x.powf(1.0 / w)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Per-coordinate integer limits `⌊Q^{v_i}⌋`, so that an integer vector
    /// has `|a|_v ≤ Q` iff `|a_i| ≤ L_i` for every `i`.
    ///
    /// A relative guard of 1e-12 absorbs `powf` rounding when `Q^{v_i}` is an
    /// integer in exact arithmetic (e.g. `8^{2/3}`).
    pub fn limits(&self, q: f64) -> Result<Vec<i64>> {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::input(format!("height bound must be non-negative, got {q}")));
        }
        self.v
            .iter()
            .map(|&w| {
                let raw = q.powf(w);
                let guarded = (raw * (1.0 + 1e-12)).floor();
                if !guarded.is_finite() || guarded > MAX_COORDINATE_LIMIT as f64 {
                    Err(Error::capacity(format!(
                        "Q^v = {raw:e} exceeds the coordinate limit {MAX_COORDINATE_LIMIT}"
                    )))
                } else {
                    Ok(guarded as i64)
                }
            })
            .collect()
    }
}

/// Largest per-coordinate bound accepted by enumeration.
pub const MAX_COORDINATE_LIMIT: i64 = 1 << 40;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sums_and_signs() {
        assert!(QuasinormWeights::new(vec![1.0, 1.5]).is_err());
        assert!(QuasinormWeights::new(vec![2.5, -0.5]).is_err());
        assert!(QuasinormWeights::new(vec![]).is_err());
        assert!(QuasinormWeights::new(vec![1.5, 0.5]).is_ok());
    }

    #[test]
    fn quasinorm_examples() {
        let v = QuasinormWeights::new(vec![1.2, 0.9, 0.9]).unwrap();
        assert_eq!(v.quasinorm(&[1.0, 1.0, 1.0]).unwrap(), 1.0);

        let sup = QuasinormWeights::uniform(3);
        assert_eq!(sup.quasinorm(&[2.0, -3.0, 1.0]).unwrap(), 3.0);

        let v = QuasinormWeights::new(vec![1.5, 0.5]).unwrap();
        let q = v.quasinorm(&[8.0, 2.0]).unwrap();
        assert!((q - 4.0).abs() < 1e-12);
        assert!(v.quasinorm(&[1.0]).is_err());
    }

    #[test]
    fn limits_survive_rounding() {
        let v = QuasinormWeights::new(vec![2.0 / 3.0, 4.0 / 3.0]).unwrap();
        assert_eq!(v.limits(8.0).unwrap(), vec![4, 16]);
        let v = QuasinormWeights::new(vec![1.5, 0.5]).unwrap();
        assert_eq!(v.limits(2.0).unwrap(), vec![2, 1]);
        assert!(v.limits(1e30).is_err());
    }

    #[test]
    fn permutation_sorts_descending() {
        let v = QuasinormWeights::new(vec![0.5, 1.5]).unwrap();
        assert!(!v.is_canonical());
        assert_eq!(v.permutation(), &[1, 0]);
        let (c, perm) = v.canonical();
        assert_eq!(c.as_slice(), &[1.5, 0.5]);
        assert_eq!(v.permute(&[10, 20]), vec![20, 10]);
        assert_eq!(perm, vec![1, 0]);
        assert!(c.is_canonical());
        assert_eq!(v.max(), 1.5);
    }
}
