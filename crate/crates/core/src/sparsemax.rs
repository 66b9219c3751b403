//! Euclidean projection onto the probability simplex.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Threshold `tau` and support size `k` of the simplex projection of `z`.
///
/// Scores are visited in descending order, ties broken by lower index.
/// `k` is the largest `k` with `1 + k * z_(k) > sum_{j<=k} z_(j)`.
pub fn threshold(z: &[f64]) -> Result<(f64, usize)> {
    if z.is_empty() {
        return Err(Error::Empty("sparsemax input"));
    }
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));

    let mut cumsum = 0.0;
    let mut support_sum = 0.0;
    let mut k = 0;
    for (rank, &i) in order.iter().enumerate() {
        cumsum += z[i];
        let r = (rank + 1) as f64;
        if 1.0 + r * z[i] > cumsum {
            k = rank + 1;
            support_sum = cumsum;
        }
    }
    // k >= 1 always: for rank 0 the condition reads 1 + z > z.
    Ok(((support_sum - 1.0) / k as f64, k))
}

/// `max(z_i - tau, 0)`: the sparsemax distribution of `z`.
pub fn sparsemax(z: &[f64]) -> Result<Vec<f64>> {
    let (tau, _) = threshold(z)?;
    Ok(z.iter().map(|&v| (v - tau).max(0.0)).collect())
}

/// Non-zero entries of `sparsemax(z)` as `(index, weight)`, in index order.
pub fn sparsemax_support(z: &[f64]) -> Result<Vec<(usize, f64)>> {
    let (tau, k) = threshold(z)?;
    let mut out = Vec::with_capacity(k);
    for (i, &v) in z.iter().enumerate() {
        let w = v - tau;
        if w > 0.0 {
            out.push((i, w));
        }
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn singleton_is_one() {
        for x in [-3.0, 0.0, 0.25, 1e6] {
            assert_eq!(sparsemax(&[x]).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn worked_examples() {
        assert_eq!(oracle::project(&[2.0, 1.0, 0.1]), vec![1.0, 0.0, 0.0]);
        assert_eq!(sparsemax(&[2.0, 1.0, 0.1]).unwrap(), vec![1.0, 0.0, 0.0]);

        let expected = oracle::project(&[1.0, 0.9]);
        assert!(close(&expected, &[0.55, 0.45], 1e-12));
        let (tau, k) = threshold(&[1.0, 0.9]).unwrap();
        assert!((tau - 0.45).abs() < 1e-12);
        assert_eq!(k, 2);
        assert!(close(&sparsemax(&[1.0, 0.9]).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn ties_are_uniform() {
        assert_eq!(sparsemax(&[0.8, 0.8]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(sparsemax_support(&[0.9, -0.5]).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(sparsemax(&[]).is_err());
        assert_eq!(sparsemax(&[0.0, f64::NAN]).unwrap_err(), Error::NonFiniteInput(1));
        assert!(sparsemax(&[f64::INFINITY]).is_err());
    }

    fn scores() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 1..=12)
    }

    proptest! {
        #[test]
        fn matches_oracle(z in scores()) {
            prop_assert!(close(&sparsemax(&z).unwrap(), &oracle::project(&z), 1e-8));
        }

        #[test]
        fn output_on_simplex(z in scores()) {
            let p = sparsemax(&z).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn idempotent_on_simplex(z in scores()) {
            let p = sparsemax(&z).unwrap();
            prop_assert!(close(&sparsemax(&p).unwrap(), &p, 1e-12));
        }

        #[test]
        fn shift_invariant(z in scores(), c in -5.0f64..5.0) {
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            prop_assert!(close(&sparsemax(&shifted).unwrap(), &sparsemax(&z).unwrap(), 1e-9));
        }

        #[test]
        fn permutation_equivariant(z in scores(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..z.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&i| z[i]).collect();
            let p = sparsemax(&z).unwrap();
            let q = sparsemax(&permuted).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                prop_assert!((q[j] - p[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn scaling_keeps_argmax(z in scores(), scale in 1.0f64..50.0) {
            let top = (0..z.len()).max_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a))).unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| v * scale).collect();
            let support = sparsemax_support(&scaled).unwrap();
            prop_assert!(support.iter().any(|&(i, _)| i == top));
        }
    }
}
