//! Dense symmetric linear algebra: blocked Cholesky factorization with jitter
//! escalation and triangular solves. Desk scale only (a few thousand rows);
//! everything is f64 and single-threaded for determinism.

use ndarray::{linalg::general_mat_mul, s, Array2};

use crate::error::DckError;
use crate::Result;

const BLOCK: usize = 96;

/// Unblocked lower Cholesky on a small in-place view. Returns the pivot index
/// that failed, if any.
fn cholesky_unblocked(a: &mut ndarray::ArrayViewMut2<f64>) -> std::result::Result<(), usize> {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = v / d;
        }
    }
    Ok(())
}

/// In-place blocked lower Cholesky; on success the lower triangle of `a`
/// holds L (the strict upper triangle is left untouched).
pub fn cholesky_in_place(a: &mut Array2<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(DckError::shape("cholesky requires a square matrix"));
    }
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        // Diagonal block.
        {
            let mut diag = a.slice_mut(s![k..k + kb, k..k + kb]);
            cholesky_unblocked(&mut diag)
                .map_err(|j| DckError::numeric(format!("cholesky failed at pivot {}", k + j)))?;
        }
        if k + kb < n {
            // Panel solve: A[k+kb.., k..k+kb] <- A[..] * L_kk^{-T}.
            let (diag, mut panel) = {
                let (top, bottom) = a.view_mut().split_at(ndarray::Axis(0), k + kb);
                (
                    top.slice_move(s![k..k + kb, k..k + kb]),
                    bottom.slice_move(s![.., k..k + kb]),
                )
            };
            for mut row in panel.rows_mut() {
                for j in 0..kb {
                    let mut v = row[j];
                    for t in 0..j {
                        v -= row[t] * diag[[j, t]];
                    }
                    row[j] = v / diag[[j, j]];
                }
            }
            // Trailing update on the lower triangle, tile by tile:
            // A[i, j] -= P_i P_j^T for tile rows i >= j.
            let mut jt = k + kb;
            while jt < n {
                let jb = BLOCK.min(n - jt);
                let mut it = jt;
                while it < n {
                    let ib = BLOCK.min(n - it);
                    let pi = a.slice(s![it..it + ib, k..k + kb]).to_owned();
                    let pj = a.slice(s![jt..jt + jb, k..k + kb]).to_owned();
                    let mut target = a.slice_mut(s![it..it + ib, jt..jt + jb]);
                    general_mat_mul(-1.0, &pi, &pj.t(), 1.0, &mut target);
                    it += ib;
                }
                jt += jb;
            }
        }
        k += kb;
    }
    Ok(())
}

/// Cholesky with escalating diagonal jitter.
///
/// `assemble` rebuilds the matrix for each attempt. The first attempt uses no
/// jitter; afterwards lambda * mean(diag) is added to the diagonal with lambda
/// escalating from 1e-10 to 1e-4 by factors of 10. Returns the factor and the
/// jitter that succeeded.
pub fn cholesky_with_jitter(assemble: &dyn Fn() -> Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let mut lambda = 0.0;
    loop {
        let mut a = assemble();
        let n = a.nrows();
        if lambda > 0.0 {
            let mean_diag = (0..n).map(|i| a[[i, i]]).sum::<f64>() / n as f64;
            let bump = lambda * mean_diag;
            for i in 0..n {
                a[[i, i]] += bump;
            }
        }
        match cholesky_in_place(&mut a) {
            Ok(()) => return Ok((a, lambda)),
            Err(_) if lambda < 1e-4 => {
                lambda = if lambda == 0.0 { 1e-10 } else { lambda * 10.0 };
            }
            Err(_) => return Err(DckError::NotPositiveDefinite(lambda)),
        }
    }
}

/// Solves L x = b in place (forward substitution, lower triangular L).
pub fn solve_lower(l: &Array2<f64>, b: &mut [f64]) {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let mut v = b[i];
        let row = l.row(i);
        for k in 0..i {
            v -= row[k] * b[k];
        }
        b[i] = v / row[i];
    }
}

/// Solves L^T x = b in place (backward substitution with the lower factor).
pub fn solve_lower_transpose(l: &Array2<f64>, b: &mut [f64]) {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= l[[k, i]] * b[k];
        }
        b[i] = v / l[[i, i]];
    }
}

/// Solves (L L^T) x = b, overwriting b with x.
pub fn solve_cholesky(l: &Array2<f64>, b: &mut [f64]) {
    solve_lower(l, b);
    solve_lower_transpose(l, b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn spd_random(n: usize, seed: u64) -> Array2<f64> {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let mut a = m.dot(&m.t());
        for i in 0..n {
            a[[i, i]] += n as f64;
        }
        a
    }

    #[test]
    fn factor_matches_three_by_three_hand_case() {
        let mut a = arr2(&[[4.0, 2.0, 2.0], [2.0, 5.0, 3.0], [2.0, 3.0, 6.0]]);
        cholesky_in_place(&mut a).unwrap();
        // L L^T must reproduce the original lower triangle.
        let l = arr2(&[
            [a[[0, 0]], 0.0, 0.0],
            [a[[1, 0]], a[[1, 1]], 0.0],
            [a[[2, 0]], a[[2, 1]], a[[2, 2]]],
        ]);
        let back = l.dot(&l.t());
        let orig = arr2(&[[4.0, 2.0, 2.0], [2.0, 5.0, 3.0], [2.0, 3.0, 6.0]]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[[i, j]] - orig[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blocked_factor_roundtrips_solves() {
        // Size straddling several blocks.
        let n = 257;
        let a = spd_random(n, 9);
        let mut l = a.clone();
        cholesky_in_place(&mut l).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[[i, j]] * x_true[j];
            }
        }
        solve_cholesky(&l, &mut b);
        for i in 0..n {
            assert!(
                (b[i] - x_true[i]).abs() < 1e-8,
                "solve mismatch at {i}: {} vs {}",
                b[i],
                x_true[i]
            );
        }
    }

    #[test]
    fn jitter_rescues_near_singular() {
        // Two identical rows: singular without jitter.
        let base = arr2(&[[1.0, 1.0, 0.3], [1.0, 1.0, 0.3], [0.3, 0.3, 1.0]]);
        let (l, jitter) = cholesky_with_jitter(&|| base.clone()).unwrap();
        assert!(jitter > 0.0);
        assert!(l[[0, 0]] > 0.0);
    }

    #[test]
    fn hopeless_matrix_reports_failure() {
        let bad = arr2(&[[1.0, 2.0], [2.0, 1.0]]); // eigenvalue -1, jitter <= 1e-4 cannot fix
        match cholesky_with_jitter(&|| bad.clone()) {
            Err(DckError::NotPositiveDefinite(_)) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }
}
