use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{dirichlet_member, HeightBox};
use crate::model::{ConstructionConstants, MongeManifold, QuasinormWeights, ResonantFunction, Shift};

/// Largest number of lattice points scanned when searching the dilated body.
pub const MAX_BODY_POINTS: u128 = 50_000_000;

/// One numerically checked inequality `value ≤ limit` (or `≥` for lower bounds).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
}

impl Bound {
    fn upper(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            holds: value <= limit,
        }
    }

    fn lower(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            holds: value >= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Postconditions {
    pub value_bound: Bound,
    pub derivative_lower: Bound,
    pub derivative_upper: Bound,
    pub coefficients: Vec<Bound>,
    pub leading_coefficient: Bound,
    pub height_upper: Bound,
    pub height_lower: Bound,
    /// `|∂₁(F+θ)(x)| > p·|∇(F+θ)(x)|` at the construction point.
    pub gradient_dominance: Bound,
}

impl Postconditions {
    pub fn all(&self) -> impl Iterator<Item = &Bound> {
        [&self.value_bound, &self.derivative_lower, &self.derivative_upper]
            .into_iter()
            .chain(self.coefficients.iter())
            .chain([
                &self.leading_coefficient,
                &self.height_upper,
                &self.height_lower,
                &self.gradient_dominance,
            ])
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.all().filter(|b| !b.holds).map(|b| b.name).collect()
    }

    pub fn all_hold(&self) -> bool {
        self.all().all(|b| b.holds)
    }
}

/// The output of the successive-minima construction at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    pub x: Vec<f64>,
    pub q: f64,
    pub resonant: ResonantFunction,
    /// The `n+1` independent vectors `(a_{j,0}, …, a_{j,n})`.
    pub basis: Vec<Vec<i64>>,
    pub eta: Vec<f64>,
    pub t: Vec<i64>,
    pub height: f64,
    pub beta: f64,
    pub kappa0: f64,
    pub kappa0_star: f64,
    pub postconditions: Postconditions,
}

/// Builds `F = Σ t_j F_j` near `x` from `n+1` independent short vectors of the
/// `C₂`-dilated body `{|F(x)| ≤ C₂Q^{−n}, |a_i| ≤ C₂Q^{v_i}}`.
///
/// Requires `x ∉ Φ_v(Q, δ)` and `v₁ = max v_i`.
pub fn successive_minima_construct(
    x: &[f64],
    manifold: &MongeManifold,
    theta: &Shift,
    q: f64,
    consts: &ConstructionConstants,
    v: &QuasinormWeights,
) -> Result<Construction> {
    let n = manifold.n();
    if v.n() != n || consts.n != n || consts.m != manifold.m() {
        return Err(Error::input("weights, constants and manifold disagree on dimensions"));
    }
    if !v.is_canonical() {
        return Err(Error::input(
            "the construction needs v₁ = max v_i; reorder the chart so the first weight is largest",
        ));
    }
    if !(q > 1.0) {
        return Err(Error::input(format!("Q must exceed 1, got {q}")));
    }
    manifold.check_point(x)?;
    if consts.delta >= 1.0 {
        return Err(Error::Precondition("Φ_v(Q, δ) is everything when δ ≥ 1".into()));
    }
    if let Some(w) = dirichlet_member(x, manifold, q, consts.delta, v)? {
        return Err(Error::Precondition(format!(
            "x lies in Φ_v(Q, δ): a = {:?} has error {:e}",
            w.a, w.err
        )));
    }

    let mut y = vec![0.0; n];
    manifold.value_into(x, &mut y);
    let d1f: Vec<f64> = (0..n).map(|i| manifold.gradient_row(i, x)[0]).collect();

    let basis = independent_short_vectors(&y, q, consts.c2, v)?;

    let form_value = |b: &[i64]| b[0] as f64 + (0..n).map(|i| b[i + 1] as f64 * y[i]).sum::<f64>();
    let form_d1 = |b: &[i64]| (0..n).map(|i| b[i + 1] as f64 * d1f[i]).sum::<f64>();

    let size = n + 1;
    let mut matrix = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    let v1 = v.get(0);
    let q_v1 = q.powf(v1);
    let sum_abs_d1: f64 = basis.iter().map(|b| form_d1(b).abs()).sum();
    for (j, b) in basis.iter().enumerate() {
        matrix[0][j] = form_value(b);
        if size > 1 {
            matrix[1][j] = form_d1(b);
        }
        for k in 2..size {
            matrix[k][j] = b[k] as f64;
        }
    }
    rhs[0] = -theta.eval(x);
    if size > 1 {
        rhs[1] = q_v1 + sum_abs_d1 - theta.d1(x);
    }
    let eta = solve(&matrix, &rhs)?;

    let t: Vec<i64> = eta.iter().map(|e| e.floor() as i64).collect();
    let mut coeffs = vec![0i128; size];
    for (tj, b) in t.iter().zip(&basis) {
        for (c, bk) in coeffs.iter_mut().zip(b) {
            *c += *tj as i128 * *bk as i128;
        }
    }
    let coeffs: Vec<i64> = coeffs
        .into_iter()
        .map(|c| i64::try_from(c).map_err(|_| Error::capacity("coefficient overflow")))
        .collect::<Result<_>>()?;
    let resonant = ResonantFunction::new(coeffs[1..].to_vec(), coeffs[0])
        .map_err(|_| Error::Construction("rounded combination vanished".into()))?;

    let nf = n as f64;
    let value = resonant.value(manifold, theta, x).abs();
    let grad = resonant.gradient(manifold, theta, x);
    let deriv = grad[0].abs();
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();

    let kappa0 = consts.kappa0(v);
    let kappa0_star = consts.kappa0_star(v);
    let height = resonant.height(v);
    let beta = kappa0 * height;
    let coefficients = (1..n)
        .map(|j| {
            Bound::upper(
                "coefficient",
                resonant.a[j].abs() as f64,
                (nf + 1.0) * consts.c2 * q.powf(v.get(j)),
            )
        })
        .collect();

    let postconditions = Postconditions {
        value_bound: Bound::upper("value", value, (nf + 1.0) * consts.c2 * q.powf(-nf)),
        derivative_lower: Bound::lower("derivative_lower", deriv, q_v1),
        derivative_upper: Bound::upper("derivative_upper", deriv, (2.0 * nf * consts.c0 + 1.0) * q_v1),
        coefficients,
        leading_coefficient: Bound::upper("leading_coefficient", resonant.a[0].abs() as f64, consts.c3 * q_v1),
        height_upper: Bound::upper("height_upper", beta, q),
        height_lower: Bound::lower("height_lower", beta, kappa0_star * q),
        gradient_dominance: Bound {
            name: "gradient_dominance",
            value: deriv,
            limit: consts.p * grad_norm,
            holds: deriv > consts.p * grad_norm,
        },
    };

    Ok(Construction {
        x: x.to_vec(),
        q,
        resonant,
        basis,
        eta,
        t,
        height,
        beta,
        kappa0,
        kappa0_star,
        postconditions,
    })
}

/// Greedy selection of `n+1` independent vectors `(a₀, a)` in order of the
/// body gauge `max(|F(x)|Q^n, |a_i|/Q^{v_i})`, which realizes the successive
/// minima of the body.
fn independent_short_vectors(y: &[f64], q: f64, c2: f64, v: &QuasinormWeights) -> Result<Vec<Vec<i64>>> {
    let n = y.len();
    let value_cap = c2 * q.powf(-(n as f64));
    let hb = HeightBox::new(c2.powf(1.0 / v.max()) * q, v)?;
    // Coordinate caps are C₂Q^{v_i}, not (C₂^{1/v₁}Q)^{v_i}; filter explicitly.
    let caps: Vec<f64> = (0..n).map(|i| c2 * q.powf(v.get(i))).collect();
    if hb.count()? > MAX_BODY_POINTS {
        return Err(Error::capacity(format!(
            "dilated body has {} points, limit {MAX_BODY_POINTS}",
            hb.count()?
        )));
    }
    let scales: Vec<f64> = (0..n).map(|i| q.powf(v.get(i))).collect();
    let qn = q.powi(n as i32);
    let mut candidates: Vec<(f64, Vec<i64>)> = Vec::new();
    hb.visit(|a| {
        let first = a.iter().find(|&&c| c != 0).copied().unwrap_or(0);
        if first < 0 {
            return;
        }
        if a.iter().zip(&caps).any(|(&c, cap)| c.abs() as f64 > *cap) {
            return;
        }
        let s: f64 = a.iter().zip(y).map(|(&c, yi)| c as f64 * yi).sum();
        let lo = (-s - value_cap).ceil() as i64;
        let hi = (-s + value_cap).floor() as i64;
        for a0 in lo..=hi {
            let f = (a0 as f64 + s).abs();
            if f > value_cap {
                continue;
            }
            let gauge = a
                .iter()
                .zip(&scales)
                .map(|(&c, sc)| c.abs() as f64 / sc)
                .fold(f * qn, f64::max);
            let mut vec = Vec::with_capacity(n + 1);
            vec.push(a0);
            vec.extend_from_slice(a);
            candidates.push((gauge, vec));
        }
    });
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(n + 1);
    for (_, cand) in candidates {
        chosen.push(cand);
        if integer_rank(&chosen) < chosen.len() {
            chosen.pop();
        } else if chosen.len() == n + 1 {
            return Ok(chosen);
        }
    }
    Err(Error::Construction(format!(
        "found only {} independent vectors in the C₂-dilated body",
        chosen.len()
    )))
}

/// Rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..m.len() {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Gaussian elimination with row equilibration and partial pivoting.
/// A relative residual above `1e-8` is reported as a construction error.
fn solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let size = rhs.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    for (row, bi) in a.iter_mut().zip(b.iter_mut()) {
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::Construction("zero row in the linear system".into()));
        }
        row.iter_mut().for_each(|v| *v /= scale);
        *bi /= scale;
    }
    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col] == 0.0 {
            return Err(Error::Construction("singular linear system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (head, tail) = a.split_at_mut(col + 1);
        let pivot_row = &head[col];
        for (r, row) in tail.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            if factor != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
                b[col + 1 + r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; size];
    for r in (0..size).rev() {
        let s: f64 = (r + 1..size).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    let norm = rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let residual = matrix
        .iter()
        .zip(rhs)
        .map(|(row, bi)| (row.iter().zip(&x).map(|(m, xi)| m * xi).sum::<f64>() - bi).abs())
        .fold(0.0f64, f64::max);
    if !x.iter().all(|v| v.is_finite()) || residual > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Construction(format!(
            "linear system residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{combined_c0, DomainBox};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_is_exact() {
        assert_eq!(integer_rank(&[vec![1, 2, 3], vec![2, 4, 6]]), 1);
        assert_eq!(integer_rank(&[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]]), 3);
        assert_eq!(integer_rank(&[vec![0, 0], vec![0, 3]]), 1);
        assert_eq!(integer_rank(&[vec![2, 4, 1], vec![1, 2, 0], vec![3, 6, 1]]), 2);
    }

    #[test]
    fn solves_small_systems() {
        let x = solve(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]).is_err());
    }

    fn setup(n: usize, theta: Shift) -> (MongeManifold, Shift, ConstructionConstants, QuasinormWeights) {
        let curve = MongeManifold::veronese(n, DomainBox::unit(1)).unwrap();
        let v = QuasinormWeights::uniform(n);
        let k = ConstructionConstants::new(1, n, combined_c0(&curve, &theta), 0.5, 1.0).unwrap();
        (curve, theta, k, v)
    }

    #[test]
    fn veronese_constructions_meet_postconditions() {
        let (curve, theta, k, v) = setup(2, Shift::constant(0.3));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut built = 0;
        while built < 10 {
            let x = [rng.random::<f64>()];
            match successive_minima_construct(&x, &curve, &theta, 8.0, &k, &v) {
                Ok(c) => {
                    assert_eq!(integer_rank(&c.basis), 3);
                    assert!(c.postconditions.value_bound.holds);
                    assert!(c.postconditions.derivative_lower.holds);
                    assert!(c.postconditions.coefficients.iter().all(|b| b.holds));
                    assert!(c.postconditions.gradient_dominance.holds);
                    built += 1;
                }
                Err(Error::Precondition(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn line_reduces_to_two_by_two() {
        let (curve, theta, k, v) = setup(1, Shift::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = loop {
            let x = [rng.random::<f64>()];
            match successive_minima_construct(&x, &curve, &theta, 8.0, &k, &v) {
                Ok(c) => break c,
                Err(Error::Precondition(_)) => continue,
                Err(e) => panic!("{e}"),
            }
        };
        assert_eq!(c.basis.len(), 2);
        assert!(c.postconditions.derivative_lower.holds);
    }

    #[test]
    fn rejects_dirichlet_points() {
        let (curve, theta, _, v) = setup(2, Shift::zero());
        let k = ConstructionConstants::new(1, 2, 2.0, 0.5, 1.0).unwrap();
        let err = successive_minima_construct(&[0.5], &curve, &theta, 8.0, &k, &v).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let wide = ConstructionConstants::new(1, 2, 2.0, 0.999, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = [rng.random::<f64>()];
            let _ = successive_minima_construct(&x, &curve, &theta, 8.0, &wide, &v);
        }
    }
}
