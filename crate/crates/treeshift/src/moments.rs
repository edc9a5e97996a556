//! Stieltjes positivity of moment-sequence prefixes.
//!
//! A prefix `t_0..t_N` is necessary evidence only: the verdict is always
//! "up to order N". Exact prefixes are decided exactly: leading principal
//! minors by fraction-free elimination with early exit, and a complete
//! symmetric-elimination decision when a leading minor vanishes. Floating
//! prefixes fall back to an eigenvalue check.

use crate::error::{Error, Result};
use crate::scalar::{ExtReal, Scalar};
use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

/// Prefix `t_0..t_N` of a candidate moment sequence; entries nonnegative.
#[derive(Clone, Debug, Serialize)]
pub struct MomentPrefix {
    values: Vec<Scalar>,
}

impl MomentPrefix {
    pub fn new(values: Vec<Scalar>) -> Result<MomentPrefix> {
        if values.is_empty() {
            return Err(Error::InvalidInput("moment prefix needs at least t_0".into()));
        }
        for (n, v) in values.iter().enumerate() {
            if v.is_negative() {
                return Err(Error::InvalidInput(format!("moment t_{n} = {v} is negative")));
            }
        }
        Ok(MomentPrefix { values })
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn get(&self, n: usize) -> &Scalar {
        &self.values[n]
    }

    pub fn is_exact(&self) -> bool {
        self.values.iter().all(Scalar::is_exact)
    }

    /// Drops `t_0`, yielding the shifted prefix `t_1..t_N`.
    pub fn shifted(&self) -> Option<MomentPrefix> {
        if self.values.len() < 2 {
            None
        } else {
            Some(MomentPrefix { values: self.values[1..].to_vec() })
        }
    }
}

/// Outcome of one Hankel positivity test. `NotPsd` names a principal
/// submatrix (row = column indices into the Hankel matrix) whose
/// determinant is negative; it can be re-checked by cofactor expansion.
#[derive(Clone, Debug, Serialize)]
pub enum HankelVerdict {
    Psd { size: usize },
    NotPsd { rows: Vec<usize>, value: Scalar },
}

impl HankelVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, HankelVerdict::Psd { .. })
    }
}

/// Largest square Hankel matrix `H[k][l] = t_{k+l+shift}` that fits.
pub fn hankel_matrix(t: &MomentPrefix, shift: usize) -> Result<Vec<Vec<Scalar>>> {
    if t.order() < shift {
        return Err(Error::InvalidInput(format!(
            "prefix of order {} cannot form a shift-{shift} Hankel matrix",
            t.order()
        )));
    }
    let size = (t.order() - shift) / 2 + 1;
    Ok((0..size)
        .map(|k| (0..size).map(|l| t.get(k + l + shift).clone()).collect())
        .collect())
}

pub fn hankel_check(t: &MomentPrefix, shift: usize, tol: f64) -> Result<HankelVerdict> {
    let h = hankel_matrix(t, shift)?;
    if t.is_exact() {
        Ok(hankel_check_exact(&h))
    } else {
        Ok(hankel_check_float(&h, tol))
    }
}

fn hankel_check_exact(h: &[Vec<Scalar>]) -> HankelVerdict {
    let m: Vec<Vec<BigRational>> = h
        .iter()
        .map(|row| row.iter().map(|s| s.as_exact().expect("exact matrix").clone()).collect())
        .collect();
    let n = m.len();
    let mut saw_zero = false;
    for k in 1..=n {
        let d = det_rational(&submatrix(&m, &(0..k).collect::<Vec<_>>()));
        if d.is_negative() {
            return HankelVerdict::NotPsd {
                rows: (0..k).collect(),
                value: Scalar::Exact(d),
            };
        }
        if d.is_zero() {
            saw_zero = true;
        }
    }
    if !saw_zero {
        return HankelVerdict::Psd { size: n };
    }
    // A vanishing leading minor leaves positive semidefiniteness
    // undecided; fall through to the complete symmetric elimination.
    match psd_decide(&m) {
        None => HankelVerdict::Psd { size: n },
        Some(rows) => {
            let d = det_rational(&submatrix(&m, &rows));
            HankelVerdict::NotPsd { rows, value: Scalar::Exact(d) }
        }
    }
}

fn hankel_check_float(h: &[Vec<Scalar>], tol: f64) -> HankelVerdict {
    let n = h.len();
    let m = DMatrix::from_fn(n, n, |i, j| h[i][j].to_f64());
    let eigs = m.symmetric_eigenvalues();
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_diag = (0..n).map(|i| h[i][i].to_f64()).fold(0.0f64, f64::max);
    if min_eig >= -tol * max_diag.max(1.0) {
        HankelVerdict::Psd { size: n }
    } else {
        HankelVerdict::NotPsd { rows: (0..n).collect(), value: Scalar::from_f64(min_eig) }
    }
}

fn submatrix(m: &[Vec<BigRational>], rows: &[usize]) -> Vec<Vec<BigRational>> {
    rows.iter().map(|&i| rows.iter().map(|&j| m[i][j].clone()).collect()).collect()
}

/// Determinant by fraction-free (Bareiss) elimination after clearing
/// denominators; row swaps handle zero pivots.
fn det_rational(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    if n == 0 {
        return BigRational::one();
    }
    let mut denom = BigInt::one();
    for row in m {
        for x in row {
            denom = num::integer::lcm(denom, x.denom().clone());
        }
    }
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|x| x.numer() * (&denom / x.denom())).collect())
        .collect();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigRational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det_scaled = a[n - 1][n - 1].clone() * BigInt::from(sign);
    BigRational::new(det_scaled, num::pow::pow(denom, n))
}

/// Complete exact PSD decision for a symmetric rational matrix.
///
/// Pivots on positive diagonal entries, skips rows that vanish entirely,
/// and stops at the first certificate of indefiniteness: a negative
/// diagonal entry or a zero diagonal entry with a nonzero off-diagonal
/// mate. Returns `None` when PSD, otherwise the row set of a principal
/// submatrix with negative determinant.
fn psd_decide(m: &[Vec<BigRational>]) -> Option<Vec<usize>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut pivots: Vec<usize> = Vec::new();
    while let Some(&j) = active.first() {
        let d = a[j][j].clone();
        if d.is_negative() {
            let mut rows = pivots.clone();
            rows.push(j);
            rows.sort_unstable();
            return Some(rows);
        }
        if d.is_zero() {
            if let Some(&l) = active.iter().skip(1).find(|&&l| !a[j][l].is_zero()) {
                let mut rows = pivots.clone();
                rows.push(j);
                rows.push(l);
                rows.sort_unstable();
                return Some(rows);
            }
            active.remove(0);
            continue;
        }
        for ri in 1..active.len() {
            for ci in 1..active.len() {
                let (r, c) = (active[ri], active[ci]);
                let v = &a[r][c] - &(&a[r][j] * &a[j][c]) / &d;
                a[r][c] = v;
            }
        }
        pivots.push(j);
        active.remove(0);
    }
    None
}

/// Determinant of the principal submatrix of `h` on `rows`, by direct
/// cofactor expansion. This is the independent re-check oracle for
/// `NotPsd` witnesses, deliberately distinct from the Bareiss route.
pub fn principal_minor_cofactor(h: &[Vec<Scalar>], rows: &[usize]) -> Scalar {
    let sub: Vec<Vec<Scalar>> =
        rows.iter().map(|&i| rows.iter().map(|&j| h[i][j].clone()).collect()).collect();
    det_cofactor(&sub)
}

fn det_cofactor(m: &[Vec<Scalar>]) -> Scalar {
    let n = m.len();
    if n == 0 {
        return Scalar::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = Scalar::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Scalar>> = (1..n)
            .map(|i| (0..n).filter(|&c| c != j).map(|c| m[i][c].clone()).collect())
            .collect();
        let term = &m[0][j] * &det_cofactor(&minor);
        det = if j % 2 == 0 { &det + &term } else { &det - &term };
    }
    det
}

#[derive(Clone, Debug, Serialize)]
pub struct StieltjesReport {
    pub order: usize,
    pub shift0: HankelVerdict,
    pub shift1: Option<HankelVerdict>,
    pub pass: bool,
}

/// Tests positivity of both Hankel ladders. A pass is necessary evidence
/// only, reported "up to order N".
pub fn is_stieltjes_prefix(t: &MomentPrefix, tol: f64) -> Result<StieltjesReport> {
    let shift0 = hankel_check(t, 0, tol)?;
    let shift1 = if t.order() >= 1 { Some(hankel_check(t, 1, tol)?) } else { None };
    let pass = shift0.passed() && shift1.as_ref().is_none_or(HankelVerdict::passed);
    Ok(StieltjesReport { order: t.order(), shift0, shift1, pass })
}

/// Terms `t_n^(-1/(2n))` of the quasi-analyticity series, `inf` for
/// vanishing moments.
pub fn carleman_terms(t: &MomentPrefix) -> Vec<ExtReal> {
    (1..=t.order())
        .map(|n| {
            let tn = t.get(n);
            if tn.is_zero() {
                ExtReal::Infinite
            } else {
                ExtReal::Finite(Scalar::from_f64((-tn.ln_f64() / (2.0 * n as f64)).exp()))
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub enum DivergenceReason {
    /// `supp mu` is contained in `[0, M]`, so `t_n <= t_0 M^n` and the
    /// series terms are bounded below by `M^(-1/2) t_0^(-1/(2n))`.
    SupportBound { bound: Scalar },
    /// Per-vertex squared weight sums are bounded by `M`, so the same
    /// growth bound applies through the norm recursion.
    WeightSumBound { bound: Scalar },
}

#[derive(Clone, Debug, Serialize)]
pub enum DivergenceVerdict {
    Certified(DivergenceReason),
    Unknown(String),
}

impl DivergenceVerdict {
    pub fn certified(&self) -> bool {
        matches!(self, DivergenceVerdict::Certified(_))
    }
}

fn growth_bounded(t: &MomentPrefix, base: &Scalar, bound: &Scalar) -> bool {
    let mut cap = base.clone();
    for n in 0..=t.order() {
        if n > 0 {
            cap = &cap * bound;
        }
        let tn = t.get(n);
        let ok = if tn.is_exact() && cap.is_exact() {
            *tn <= cap
        } else {
            tn.to_f64() <= cap.to_f64() * (1.0 + 1e-12) + 1e-300
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Conservative divergence certificate for the quasi-analyticity series.
/// `Unknown` is always a legal answer: finitely many terms never prove
/// divergence on their own, so certification requires a support bound or
/// a caller-asserted weight-sum bound consistent with the prefix.
pub fn divergence_certificate(
    t: &MomentPrefix,
    support_bound: Option<&Scalar>,
    weight_sum_bound: Option<&Scalar>,
) -> DivergenceVerdict {
    if let Some(m) = support_bound {
        if m.is_positive() && growth_bounded(t, t.get(0), m) {
            return DivergenceVerdict::Certified(DivergenceReason::SupportBound { bound: m.clone() });
        }
    }
    if let Some(m) = weight_sum_bound {
        if m.is_positive() && growth_bounded(t, &Scalar::one(), m) {
            return DivergenceVerdict::Certified(DivergenceReason::WeightSumBound { bound: m.clone() });
        }
    }
    DivergenceVerdict::Unknown("no growth bound available for the series terms".into())
}

/// `sup_n t_n^2 / t_{2n+1}`: a certified lower bound for the integral of
/// `1/s` against every representing measure of the prefix. `Infinite`
/// when some `t_{2n+1}` vanishes while `t_n` does not.
pub fn theta_lower_bound(t: &MomentPrefix) -> Result<ExtReal> {
    if !t.get(0).is_positive() {
        return Err(Error::InvalidInput("theta lower bound needs t_0 > 0".into()));
    }
    let mut best = ExtReal::zero();
    let mut n = 0;
    while 2 * n < t.order() {
        let num = t.get(n);
        let den = t.get(2 * n + 1);
        if den.is_zero() {
            if num.is_positive() {
                return Ok(ExtReal::Infinite);
            }
        } else {
            best = best.max(ExtReal::Finite(&(num * num) / den));
        }
        n += 1;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix(values: &[i64]) -> MomentPrefix {
        MomentPrefix::new(values.iter().map(|&v| Scalar::from_int(v)).collect()).unwrap()
    }

    fn ratio_prefix(values: &[(i64, i64)]) -> MomentPrefix {
        MomentPrefix::new(values.iter().map(|&(p, q)| Scalar::ratio(p, q)).collect()).unwrap()
    }

    #[test]
    fn hankel_ones_is_psd() {
        let v = hankel_check(&prefix(&[1, 1, 1, 1, 1]), 0, 1e-9).unwrap();
        assert!(matches!(v, HankelVerdict::Psd { size: 3 }));
    }

    #[test]
    fn hankel_counterexample_minor() {
        let v = hankel_check(&prefix(&[1, 1, 4, 4, 4]), 0, 1e-9).unwrap();
        match v {
            HankelVerdict::NotPsd { rows, value } => {
                assert_eq!(rows, vec![0, 1, 2]);
                assert_eq!(value, Scalar::from_int(-36));
            }
            _ => panic!("expected NotPsd"),
        }
    }

    #[test]
    fn hankel_shift_one() {
        let v = hankel_check(&prefix(&[1, 4, 16]), 1, 1e-9).unwrap();
        assert!(v.passed());
    }

    #[test]
    fn witness_recheck_by_cofactor() {
        let t = prefix(&[1, 1, 4, 4, 4]);
        let h = hankel_matrix(&t, 0).unwrap();
        assert_eq!(principal_minor_cofactor(&h, &[0, 1, 2]), Scalar::from_int(-36));
    }

    #[test]
    fn stieltjes_prefix_examples() {
        let u = ratio_prefix(&[(1, 1), (1, 2), (1, 3), (1, 4), (1, 5)]);
        assert!(is_stieltjes_prefix(&u, 0.0).unwrap().pass);

        assert!(!is_stieltjes_prefix(&prefix(&[1, 1, 4, 4, 4]), 0.0).unwrap().pass);

        assert!(is_stieltjes_prefix(&prefix(&[1]), 0.0).unwrap().pass);
    }

    #[test]
    fn semidefinite_boundary_cases() {
        // delta_4 moments: rank-one Hankels with vanishing leading minors
        let t = prefix(&[1, 4, 16, 64, 256]);
        assert!(is_stieltjes_prefix(&t, 0.0).unwrap().pass);
        // all-zero tail
        assert!(is_stieltjes_prefix(&prefix(&[1, 0, 0, 0]), 0.0).unwrap().pass);
        // zero diagonal with nonzero mate: (0, 1, 0) gives H = [[0,1],[1,0]]
        let v = hankel_check(&prefix(&[0, 1, 0]), 0, 1e-9).unwrap();
        match v {
            HankelVerdict::NotPsd { rows, value } => {
                assert_eq!(rows, vec![0, 1]);
                assert_eq!(value, Scalar::from_int(-1));
            }
            _ => panic!("expected NotPsd"),
        }
    }

    #[test]
    fn float_prefix_uses_eigenvalue_path() {
        let t = MomentPrefix::new(vec![
            Scalar::from_f64(1.0),
            Scalar::from_f64(1.0),
            Scalar::from_f64(4.0),
            Scalar::from_f64(4.0),
            Scalar::from_f64(4.0),
        ])
        .unwrap();
        assert!(!hankel_check(&t, 0, 1e-9).unwrap().passed());
        let ok = MomentPrefix::new(vec![
            Scalar::from_f64(1.0),
            Scalar::from_f64(0.5),
            Scalar::from_f64(1.0 / 3.0),
        ])
        .unwrap();
        assert!(hankel_check(&ok, 0, 1e-9).unwrap().passed());
    }

    #[test]
    fn carleman_term_examples() {
        let ones = prefix(&[1, 1, 1, 1]);
        for term in carleman_terms(&ones) {
            assert_eq!(term, ExtReal::Finite(Scalar::from_f64(1.0)));
        }
        let geo = prefix(&[1, 4, 16, 64]);
        for term in carleman_terms(&geo) {
            assert!((term.to_f64() - 0.5).abs() < 1e-12);
        }
        let rec = ratio_prefix(&[(1, 1), (1, 2), (1, 3)]);
        for term in carleman_terms(&rec) {
            assert!(term.to_f64() >= 1.0);
        }
    }

    #[test]
    fn divergence_certificate_examples() {
        let ones = prefix(&[1, 1, 1, 1]);
        assert!(divergence_certificate(&ones, Some(&Scalar::one()), None).certified());

        let factorial_sq = MomentPrefix::new(
            (0..6)
                .map(|n: i64| {
                    let f: i64 = (1..=n).product::<i64>().max(1);
                    Scalar::from_int(f * f)
                })
                .collect(),
        )
        .unwrap();
        assert!(!divergence_certificate(&factorial_sq, None, None).certified());

        let geo = prefix(&[1, 4, 16, 64]);
        assert!(divergence_certificate(&geo, Some(&Scalar::from_int(4)), None).certified());
        // a claimed bound contradicted by the prefix is rejected
        assert!(!divergence_certificate(&geo, Some(&Scalar::from_int(2)), None).certified());
    }

    #[test]
    fn theta_lower_bound_examples() {
        let d4 = prefix(&[1, 4, 16, 64, 256]);
        assert_eq!(theta_lower_bound(&d4).unwrap(), ExtReal::Finite(Scalar::ratio(1, 4)));

        let d1 = prefix(&[1, 1, 1, 1]);
        assert_eq!(theta_lower_bound(&d1).unwrap(), ExtReal::Finite(Scalar::one()));

        // uniform[0,1] moments: the ratio t_n^2/t_{2n+1} = 2/(n+1) peaks at n = 0
        let u = ratio_prefix(&[
            (1, 1),
            (1, 2),
            (1, 3),
            (1, 4),
            (1, 5),
            (1, 6),
            (1, 7),
            (1, 8),
            (1, 9),
            (1, 10),
            (1, 11),
        ]);
        assert_eq!(theta_lower_bound(&u).unwrap(), ExtReal::Finite(Scalar::from_int(2)));

        // vanishing odd moment with positive t_n forces an infinite bound
        let z = prefix(&[1, 0, 0]);
        assert_eq!(theta_lower_bound(&z).unwrap(), ExtReal::Infinite);
    }
}
