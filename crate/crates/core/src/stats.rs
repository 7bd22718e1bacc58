//! Seed-level aggregation, paired nonparametric statistics and
//! classification metrics.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// z quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (n − 1 denominator); 0 when `n == 1`.
    pub std: T,
    /// `1.96 · std / √n`.
    pub ci_half: T,
}

impl<T: Scalar> Summary<T> {
    /// `false` when `n == 1` and the reported std is a placeholder.
    pub fn std_defined(&self) -> bool {
        self.n >= 2
    }
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::of_usize(values.len())
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_std<T: Scalar>(values: &[T]) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let m = mean(values);
    let ss: T = values.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / T::of_usize(values.len() - 1)).sqrt()
}

/// z-based 95% CI half-width for a given std and n.
pub fn ci_half_width<T: Scalar>(std: T, n: usize) -> T {
    T::of(Z95) * std / T::of_usize(n).sqrt()
}

pub fn summarize<T: Scalar>(values: &[T]) -> Result<Summary<T>> {
    if values.is_empty() {
        return Err(Error::Degenerate("summary of an empty list"));
    }
    let std = sample_std(values);
    Ok(Summary { n: values.len(), mean: mean(values), std, ci_half: ci_half_width(std, values.len()) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Two-sided exact p-value.
    pub p: f64,
    pub non_ties: usize,
    pub positives: usize,
    /// Every difference was exactly zero (p reported as 1).
    pub all_ties: bool,
}

/// Two-sided exact binomial sign test; exact-zero differences are dropped.
pub fn sign_test_exact<T: Scalar>(diffs: &[T]) -> Result<SignTest> {
    if diffs.is_empty() {
        return Err(Error::Degenerate("sign test on an empty list"));
    }
    let positives = diffs.iter().filter(|&&d| d > T::zero()).count();
    let negatives = diffs.iter().filter(|&&d| d < T::zero()).count();
    let m = positives + negatives;
    if m == 0 {
        return Ok(SignTest { p: 1.0, non_ties: 0, positives: 0, all_ties: true });
    }
    let k = positives.min(negatives);
    let tail = binomial_half_cdf(m, k);
    Ok(SignTest { p: (2.0 * tail).min(1.0), non_ties: m, positives, all_ties: false })
}

/// `P(X ≤ k)` for `X ~ Binomial(m, 1/2)`.
fn binomial_half_cdf(m: usize, k: usize) -> f64 {
    if m <= 120 {
        let mut c: u128 = 1;
        let mut acc: u128 = 0;
        for i in 0..=k {
            if i > 0 {
                c = c * (m - i + 1) as u128 / i as u128;
            }
            acc += c;
        }
        acc as f64 / 2f64.powi(m as i32)
    } else {
        // log-space for large m
        let ln_half_m = -(m as f64) * std::f64::consts::LN_2;
        let mut ln_c = 0.0;
        let mut acc = 0.0;
        for i in 0..=k {
            if i > 0 {
                ln_c += ((m - i + 1) as f64).ln() - (i as f64).ln();
            }
            acc += (ln_c + ln_half_m).exp();
        }
        acc
    }
}

/// Paired effect size `mean(d) / std(d)`.
pub fn cohens_dz<T: Scalar>(diffs: &[T]) -> Result<T> {
    if diffs.len() < 2 {
        return Err(Error::Degenerate("d_z needs at least two differences"));
    }
    let sd = sample_std(diffs);
    if sd == T::zero() {
        return Err(Error::Degenerate("d_z with zero-variance differences"));
    }
    Ok(mean(diffs) / sd)
}

/// `(#{a_i > b_j} − #{a_i < b_j}) / (|a|·|b|)` over all cross pairs.
pub fn cliffs_delta<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("Cliff's delta of an empty group"));
    }
    let mut sorted_b = b.to_vec();
    sorted_b.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let mut score: i64 = 0;
    for &x in a {
        let below = sorted_b.partition_point(|&v| v < x);
        let not_above = sorted_b.partition_point(|&v| v <= x);
        let above = sorted_b.len() - not_above;
        score += below as i64 - above as i64;
    }
    Ok(T::of(score as f64) / T::of_usize(a.len() * b.len()))
}

/// Paired comparison of two seed-matched result lists (`diff = treatment − control`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedResult<T> {
    pub n_pairs: usize,
    pub n_nonties: usize,
    pub mean_diff: T,
    pub sign_p: f64,
    /// `None` when the differences have zero variance.
    pub dz: Option<T>,
    /// Group-wise Cliff's delta of treatment vs control.
    pub cliffs_delta: T,
    pub ci_half: T,
}

pub fn paired<T: Scalar>(treatment: &[T], control: &[T]) -> Result<PairedResult<T>> {
    if treatment.len() != control.len() {
        return Err(Error::DimensionMismatch { expected: treatment.len(), actual: control.len() });
    }
    let diffs: Vec<T> = treatment.iter().zip(control).map(|(&t, &c)| t - c).collect();
    let s = summarize(&diffs)?;
    let sign = sign_test_exact(&diffs)?;
    Ok(PairedResult {
        n_pairs: diffs.len(),
        n_nonties: sign.non_ties,
        mean_diff: s.mean,
        sign_p: sign.p,
        dz: cohens_dz(&diffs).ok(),
        cliffs_delta: cliffs_delta(treatment, control)?,
        ci_half: s.ci_half,
    })
}

fn check_labels(truth: &[usize], predicted: &[usize], classes: usize) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: predicted.len() });
    }
    if let Some(&label) = truth.iter().chain(predicted).find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    Ok(())
}

/// Raw counts: `counts[true][predicted]`.
pub fn confusion_counts(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Vec<Vec<u64>>> {
    check_labels(truth, predicted, classes)?;
    let mut m = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        m[t][p] += 1;
    }
    Ok(m)
}

/// Row-normalized confusion matrix; rows of absent classes are zero.
pub fn confusion_matrix<T: Scalar>(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Matrix<T>> {
    let counts = confusion_counts(truth, predicted, classes)?;
    let mut out = Matrix::zeros(classes, classes);
    for (t, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            continue;
        }
        for (p, &c) in row.iter().enumerate() {
            out.set(t, p, T::of(c as f64) / T::of(total as f64));
        }
    }
    Ok(out)
}

/// Macro F1 and the per-class F1 vector (F1 = 0 when precision + recall = 0).
pub fn macro_f1<T: Scalar>(truth: &[usize], predicted: &[usize], classes: usize) -> Result<(T, Vec<T>)> {
    let counts = confusion_counts(truth, predicted, classes)?;
    let per_class: Vec<T> = (0..classes)
        .map(|c| {
            let tp = counts[c][c] as f64;
            let fp = (0..classes).filter(|&t| t != c).map(|t| counts[t][c]).sum::<u64>() as f64;
            let fn_ = (0..classes).filter(|&p| p != c).map(|p| counts[c][p]).sum::<u64>() as f64;
            let denom = 2.0 * tp + fp + fn_;
            T::of(if denom == 0.0 { 0.0 } else { 2.0 * tp / denom })
        })
        .collect();
    let macro_ = per_class.iter().copied().sum::<T>() / T::of_usize(classes.max(1));
    Ok((macro_, per_class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detrng::StreamState;

    #[test]
    fn summary_ci_reproduces_printed_values() {
        assert!((ci_half_width(5.77f64, 9) - 3.77).abs() < 0.005);
        assert!((ci_half_width(4.75f64, 5) - 4.17).abs() < 0.02);
        let s = summarize(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((s.std, s.ci_half), (0.0, 0.0));
        let one = summarize(&[4.0]).unwrap();
        assert!(!one.std_defined());
        assert!(summarize::<f64>(&[]).is_err());
    }

    #[test]
    fn sign_test_values() {
        let p = sign_test_exact(&[1.0; 9]).unwrap();
        assert_eq!(p.p, 0.00390625);
        let p = sign_test_exact(&[1.0, 2.0, 0.5, -1.0, -0.2]).unwrap();
        assert_eq!(p.p, 1.0);
        let ties = sign_test_exact(&[0.0, 0.0]).unwrap();
        assert!(ties.all_ties && ties.p == 1.0);
        // ties dropped: 8 positive of 8 non-ties
        let mut d = vec![1.0; 8];
        d.push(0.0);
        let t = sign_test_exact(&d).unwrap();
        assert_eq!((t.non_ties, t.p), (8, 2.0 / 256.0));
    }

    #[test]
    fn sign_test_symmetric_and_monotone() {
        for m in 1..30usize {
            let mut prev = 0.0;
            for k in 0..=m / 2 {
                let diffs: Vec<f64> = (0..m).map(|i| if i < k { 1.0 } else { -1.0 }).collect();
                let neg: Vec<f64> = diffs.iter().map(|d| -d).collect();
                let p = sign_test_exact(&diffs).unwrap().p;
                assert_eq!(p, sign_test_exact(&neg).unwrap().p);
                assert!(p > 0.0 && p <= 1.0);
                assert!(p >= prev);
                prev = p;
            }
        }
        // the log-space branch agrees with the exact branch at the boundary region
        assert!((binomial_half_cdf(120, 50) - binomial_half_cdf_float(120, 50)).abs() < 1e-12);
        assert!(binomial_half_cdf(300, 150) > 0.5);
    }

    fn binomial_half_cdf_float(m: usize, k: usize) -> f64 {
        let mut pmf = vec![0.0; m + 1];
        pmf[0] = 1.0;
        for _ in 0..m {
            for i in (1..=m).rev() {
                pmf[i] = 0.5 * (pmf[i] + pmf[i - 1]);
            }
            pmf[0] *= 0.5;
        }
        pmf[..=k].iter().sum()
    }

    #[test]
    fn dz_cases() {
        assert!((cohens_dz(&[2.0f64, 4.0, 6.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((cohens_dz(&[-2.0f64, -4.0, -6.0]).unwrap() + 2.0).abs() < 1e-15);
        assert!(cohens_dz(&[1.0, 1.0]).is_err());
        assert!(cohens_dz(&[1.0]).is_err());
    }

    fn brute_cliff(a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0i64;
        for &x in a {
            for &y in b {
                if x > y {
                    s += 1;
                } else if x < y {
                    s -= 1;
                }
            }
        }
        s as f64 / (a.len() * b.len()) as f64
    }

    fn brute_dz(d: &[f64]) -> f64 {
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        m / v.sqrt()
    }

    #[test]
    fn effect_sizes_match_brute_force() {
        let mut s = StreamState::new(31);
        for trial in 0..50 {
            let na = 2 + trial % 9;
            let nb = 1 + trial % 7;
            // coarse values to force ties
            let a: Vec<f64> = (0..na).map(|_| (s.next_uniform() * 8.0).floor()).collect();
            let b: Vec<f64> = (0..nb).map(|_| (s.next_uniform() * 8.0).floor()).collect();
            assert!((cliffs_delta(&a, &b).unwrap() - brute_cliff(&a, &b)).abs() < 1e-12);
            let d: Vec<f64> = (0..na).map(|_| s.next_uniform() * 10.0 - 3.0).collect();
            assert!((cohens_dz(&d).unwrap() - brute_dz(&d)).abs() < 1e-12);
        }
        assert_eq!(cliffs_delta(&[5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 0.0);
        assert!(cliffs_delta::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn paired_summary() {
        let on = [80.0, 85.0, 78.0, 90.0, 83.0];
        let off = [95.0, 96.0, 94.0, 95.5, 96.5];
        let r = paired(&off, &on).unwrap();
        assert_eq!(r.n_pairs, 5);
        assert_eq!(r.sign_p, 0.0625);
        assert_eq!(r.cliffs_delta, 1.0);
        assert!(r.mean_diff > 10.0);
        assert!(paired(&on, &off[..3]).is_err());
    }

    #[test]
    fn confusion_cases() {
        let t = [0, 1, 2, 1];
        let m: Matrix<f64> = confusion_matrix(&t, &t, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let m: Matrix<f64> = confusion_matrix(&[1, 1, 1], &[0, 1, 1], 3).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
        assert!((m.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(confusion_matrix::<f64>(&[3], &[0], 3).is_err());
        assert!(confusion_matrix::<f64>(&[0, 1], &[0], 3).is_err());
    }

    #[test]
    fn confusion_and_f1_match_counting_oracle() {
        let mut s = StreamState::new(77);
        let truth: Vec<usize> = (0..500).map(|_| s.below(5)).collect();
        let pred: Vec<usize> = truth.iter().map(|&t| if s.next_uniform() < 0.7 { t } else { s.below(5) }).collect();
        let m: Matrix<f64> = confusion_matrix(&truth, &pred, 5).unwrap();
        for c in 0..5 {
            let row_total = truth.iter().filter(|&&t| t == c).count() as f64;
            for p in 0..5 {
                let n = truth.iter().zip(&pred).filter(|(&a, &b)| a == c && b == p).count() as f64;
                assert_eq!(m.get(c, p), n / row_total);
            }
            assert!((m.row(c).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let (macro_, per) = macro_f1::<f64>(&truth, &pred, 5).unwrap();
        let mut acc = 0.0;
        for c in 0..5 {
            let tp = truth.iter().zip(&pred).filter(|(&a, &b)| a == c && b == c).count() as f64;
            let pp = pred.iter().filter(|&&b| b == c).count() as f64;
            let ap = truth.iter().filter(|&&a| a == c).count() as f64;
            let (prec, rec) = (tp / pp, tp / ap);
            let f1 = 2.0 * prec * rec / (prec + rec);
            assert!((per[c] - f1).abs() < 1e-12);
            acc += f1;
        }
        assert!((macro_ - acc / 5.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_closed_forms() {
        let t = [0, 1, 2, 0];
        assert_eq!(macro_f1::<f64>(&t, &t, 3).unwrap().0, 1.0);
        let (m, per) = macro_f1::<f64>(&[0, 0, 1, 1], &[0, 0, 0, 0], 2).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(per[1], 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn summary_permutation_invariant(mut v in proptest::collection::vec(0.0f64..100.0, 1..20), seed in any::<u64>()) {
                let a = summarize(&v).unwrap();
                StreamState::new(seed).shuffle_in_place(&mut v);
                let b = summarize(&v).unwrap();
                prop_assert!((a.mean - b.mean).abs() < 1e-9);
                prop_assert!((a.std - b.std).abs() < 1e-9);
                prop_assert!(a.std >= 0.0);
            }

            #[test]
            fn cliff_bounded_antisymmetric(a in proptest::collection::vec(0u8..10, 1..15), b in proptest::collection::vec(0u8..10, 1..15)) {
                let a: Vec<f64> = a.into_iter().map(f64::from).collect();
                let b: Vec<f64> = b.into_iter().map(f64::from).collect();
                let d = cliffs_delta(&a, &b).unwrap();
                prop_assert!((-1.0..=1.0).contains(&d));
                prop_assert!((d + cliffs_delta(&b, &a).unwrap()).abs() < 1e-15);
            }

            #[test]
            fn macro_f1_in_unit_interval(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
                let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
                let (m, _) = macro_f1::<f64>(&t, &p, 4).unwrap();
                prop_assert!((0.0..=1.0).contains(&m));
            }
        }
    }
}
