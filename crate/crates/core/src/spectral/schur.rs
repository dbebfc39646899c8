//! Dense complex Schur decomposition for small matrices.
//!
//! Householder reduction to Hessenberg form followed by explicit
//! single-shift QR iteration with Givens rotations, accumulating the
//! unitary similarity so eigenvectors can be recovered from the
//! triangular factor by back-substitution. Intended for the N <= 64
//! matrices of this crate; correctness over performance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// `A = Q T Q^H` with `T` upper triangular. Returns `(T, Q)`.
pub fn complex_schur(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut t = a.clone();
    let mut q = DMatrix::<C64>::identity(n, n);
    if n <= 1 {
        return Ok((t, q));
    }
    hessenberg(&mut t, &mut q);
    qr_iterate(&mut t, &mut q)?;
    // clean the strict lower triangle (holds converged noise)
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((t, q))
}

/// Eigenvalues and right eigenvectors (unit Euclidean norm, unordered).
pub fn eigen(a: &DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    // split into connected components first: exact off-diagonal zeros are
    // common here (the decoupled antisymmetric state) and the split keeps
    // their eigenvalues exact instead of dragging them through QR
    let comps = components(a);
    if comps.len() > 1 {
        let mut values = vec![C64::new(0.0, 0.0); n];
        let mut vectors = DMatrix::<C64>::zeros(n, n);
        for comp in comps {
            let m = comp.len();
            let mut sub = DMatrix::<C64>::zeros(m, m);
            for (i, &gi) in comp.iter().enumerate() {
                for (j, &gj) in comp.iter().enumerate() {
                    sub[(i, j)] = a[(gi, gj)];
                }
            }
            let (vals, vecs) = eigen_dense(&sub)?;
            for (i, &gi) in comp.iter().enumerate() {
                values[gi] = vals[i];
                for (j, &gj) in comp.iter().enumerate() {
                    vectors[(gj, gi)] = vecs[(j, i)];
                }
            }
        }
        return Ok((values, vectors));
    }
    eigen_dense(a)
}

fn eigen_dense(a: &DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    let (t, q) = complex_schur(a)?;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = t.map(|x| x.norm()).max().max(1e-300);
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let y = triangular_eigenvector(&t, k, scale);
        let mut v = &q * y;
        let norm = v.map(|x| x.norm_sqr()).sum().sqrt();
        v /= C64::new(norm, 0.0);
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Connected components of the nonzero pattern, treating entries below a
/// deflation-sized threshold as zero.
fn components(a: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if seen[j] {
                    continue;
                }
                let link = a[(i, j)].norm() + a[(j, i)].norm();
                let tol = f64::EPSILON * (a[(i, i)].norm() + a[(j, j)].norm());
                if link > tol {
                    seen[j] = true;
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

fn hessenberg(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let n = t.nrows();
    for col in 0..n.saturating_sub(2) {
        // Householder vector annihilating t[col+2.., col]
        let m = n - col - 1;
        let mut x = DVector::<C64>::zeros(m);
        for i in 0..m {
            x[i] = t[(col + 1 + i, col)];
        }
        let xnorm = x.map(|c| c.norm_sqr()).sum().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0].norm() == 0.0 {
            C64::new(-xnorm, 0.0)
        } else {
            -x[0] / x[0].norm() * xnorm
        };
        let mut u = x;
        u[0] -= alpha;
        let unorm_sq = u.map(|c| c.norm_sqr()).sum();
        if unorm_sq == 0.0 {
            continue;
        }
        let tau = 2.0 / unorm_sq;
        // t <- P t P with P = I - tau u u^H acting on rows/cols col+1..
        // left: rows col+1.., all columns
        for j in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..m {
                dot += u[i].conj() * t[(col + 1 + i, j)];
            }
            dot *= tau;
            for i in 0..m {
                let d = dot * u[i];
                t[(col + 1 + i, j)] -= d;
            }
        }
        // right: columns col+1.., all rows
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in 0..m {
                dot += t[(i, col + 1 + j)] * u[j];
            }
            dot *= tau;
            for j in 0..m {
                let d = dot * u[j].conj();
                t[(i, col + 1 + j)] -= d;
            }
        }
        // accumulate q <- q P
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in 0..m {
                dot += q[(i, col + 1 + j)] * u[j];
            }
            dot *= tau;
            for j in 0..m {
                let d = dot * u[j].conj();
                q[(i, col + 1 + j)] -= d;
            }
        }
    }
}

/// Complex Givens rotation `[c, s; -conj(s), c]` with real `c` zeroing `b`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let r = (na * na + nb * nb).sqrt();
    if na == 0.0 {
        // rotate b straight into the pivot
        (0.0, b.conj() / nb)
    } else {
        let c = na / r;
        let s = (a / na) * b.conj() / r;
        (c, s)
    }
}

fn qr_iterate(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>) -> Result<()> {
    let n = t.nrows();
    let mut hi = n - 1;
    let mut sweeps_this_block = 0usize;
    loop {
        // deflate converged subdiagonal entries
        while hi > 0 {
            let s = t[(hi - 1, hi - 1)].norm() + t[(hi, hi)].norm();
            let tol = f64::EPSILON * s.max(f64::EPSILON);
            if t[(hi, hi - 1)].norm() <= tol {
                t[(hi, hi - 1)] = C64::new(0.0, 0.0);
                hi -= 1;
                sweeps_this_block = 0;
            } else {
                break;
            }
        }
        if hi == 0 {
            return Ok(());
        }
        // find the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let s = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            let tol = f64::EPSILON * s.max(f64::EPSILON);
            if t[(lo, lo - 1)].norm() <= tol {
                t[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        sweeps_this_block += 1;
        if sweeps_this_block > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::NumericalFailure);
        }
        // Wilkinson shift from the trailing 2x2, exceptional shift on
        // stagnation
        let shift = if sweeps_this_block % 12 == 0 {
            t[(hi, hi)] + C64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                t[(hi - 1, hi - 1)],
                t[(hi - 1, hi)],
                t[(hi, hi - 1)],
                t[(hi, hi)],
            )
        };
        qr_step(t, q, lo, hi, shift);
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    // eigenvalue of [[a, b], [c, d]] closest to d
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit-shift QR step on the Hessenberg block [lo, hi].
fn qr_step(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>, lo: usize, hi: usize, shift: C64) {
    let n = t.nrows();
    for i in lo..=hi {
        t[(i, i)] -= shift;
    }
    // QR factor via rotations on adjacent row pairs
    let mut rots = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (c, s) = givens(t[(i, i)], t[(i + 1, i)]);
        // rows i, i+1 over columns i..n
        for j in i..n {
            let a = t[(i, j)];
            let b = t[(i + 1, j)];
            t[(i, j)] = C64::new(c, 0.0) * a + s * b;
            t[(i + 1, j)] = -s.conj() * a + C64::new(c, 0.0) * b;
        }
        t[(i + 1, i)] = C64::new(0.0, 0.0);
        rots.push((c, s));
    }
    // RQ: apply the adjoint rotations from the right, in order
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let i = lo + idx;
        for r in 0..(i + 2).min(n) {
            let a = t[(r, i)];
            let b = t[(r, i + 1)];
            t[(r, i)] = a * C64::new(c, 0.0) + b * s.conj();
            t[(r, i + 1)] = -a * s + b * C64::new(c, 0.0);
        }
        for r in 0..n {
            let a = q[(r, i)];
            let b = q[(r, i + 1)];
            q[(r, i)] = a * C64::new(c, 0.0) + b * s.conj();
            q[(r, i + 1)] = -a * s + b * C64::new(c, 0.0);
        }
    }
    for i in lo..=hi {
        t[(i, i)] += shift;
    }
}

/// Eigenvector of the upper triangular `t` for the eigenvalue at `t[k,k]`,
/// by back-substitution with protected tiny pivots.
fn triangular_eigenvector(t: &DMatrix<C64>, k: usize, scale: f64) -> DVector<C64> {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let mut y = DVector::<C64>::zeros(n);
    y[k] = C64::new(1.0, 0.0);
    let floor = f64::EPSILON * scale;
    for i in (0..k).rev() {
        let mut rhs = C64::new(0.0, 0.0);
        for j in i + 1..=k {
            rhs += t[(i, j)] * y[j];
        }
        let mut d = t[(i, i)] - lambda;
        if d.norm() < floor {
            d = C64::new(floor, 0.0);
        }
        y[i] = -rhs / d;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(a: &DMatrix<C64>, vals: &[C64], vecs: &DMatrix<C64>) -> f64 {
        let scale = a.map(|x| x.norm()).max().max(1.0);
        let mut worst: f64 = 0.0;
        for (k, &z) in vals.iter().enumerate() {
            let v = vecs.column(k).clone_owned();
            let r = a * &v - v * z;
            worst = worst.max(r.map(|x| x.norm()).max() / scale);
        }
        worst
    }

    #[test]
    fn diagonal_matrix_is_exact() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-0.5, -0.25),
            C64::new(2.0, 1.0),
        ]));
        let (vals, vecs) = eigen(&a).unwrap();
        let mut re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![-0.5, 1.0, 2.0]);
        assert!(residual(&a, &vals, &vecs) < 1e-14);
    }

    #[test]
    fn known_2x2_complex_symmetric() {
        // [[0, i], [i, 0]] has eigenvalues +-i
        let i = C64::new(0.0, 1.0);
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), i, i, C64::new(0.0, 0.0)]);
        let (vals, vecs) = eigen(&a).unwrap();
        let mut im: Vec<f64> = vals.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
        assert!(residual(&a, &vals, &vecs) < 1e-13);
    }

    #[test]
    fn trace_is_conserved() {
        let a = DMatrix::from_fn(6, 6, |i, j| {
            C64::new(
                ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5,
                ((i * 5 + j * 2) % 13) as f64 / 13.0 - 0.4,
            )
        });
        let (vals, _) = eigen(&a).unwrap();
        let tr: C64 = (0..6).map(|i| a[(i, i)]).sum();
        let sum: C64 = vals.iter().sum();
        assert!((tr - sum).norm() < 1e-12);
    }

    #[test]
    fn defective_jordan_block_still_returns() {
        // [[0, 1], [0, 0]]: defective, eigenvalue 0 twice
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let (vals, _) = eigen(&a).unwrap();
        assert!(vals.iter().all(|z| z.norm() < 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_complex_symmetric_eigen(seed in 0u64..1000) {
            // deterministic pseudo-random complex symmetric matrix
            let n = 3 + (seed % 6) as usize;
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let mut a = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let z = C64::new(next(), next());
                    a[(i, j)] = z;
                    a[(j, i)] = z;
                }
            }
            let (vals, vecs) = eigen(&a).unwrap();
            prop_assert!(residual(&a, &vals, &vecs) < 1e-9);
            let tr: C64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: C64 = vals.iter().sum();
            prop_assert!((tr - sum).norm() < 1e-10 * (1.0 + tr.norm()));
        }
    }
}
