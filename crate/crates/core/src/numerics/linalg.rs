use super::{Mat, NumericsError};

/// Relative pivot floor below which a dense system is declared singular.
const SINGULAR_PIVOT: f64 = 1e-12;
/// Symmetry tolerance accepted before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Cholesky pivots must exceed this for strict positive definiteness.
pub const PD_PIVOT: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;
const ZERO_COLUMN_TOL: f64 = 1e-14;

/// Solves `a · x = rhs` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve_dense(a: &Mat, rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = a.rows();
    if !a.is_square() || rhs.len() != n {
        return Err(NumericsError::DimensionMismatch {
            context: "dense solve",
            expected: n,
            found: rhs.len(),
        });
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row_slice(i).to_vec()).collect();
    let mut b = rhs.to_vec();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty pivot range");
        if m[pivot_row][col].abs() <= SINGULAR_PIVOT * scale {
            return Err(NumericsError::SingularSystem);
        }
        m.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / m[i][i];
    }
    Ok(x)
}

/// Numerical rank by elimination with full pivoting.
///
/// A pivot counts when it exceeds `tol` times the largest entry of `a`.
#[allow(clippy::needless_range_loop)]
pub fn rank(a: &Mat, tol: f64) -> usize {
    let (r, c) = (a.rows(), a.cols());
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = (0..r).map(|i| a.row_slice(i).to_vec()).collect();
    let mut rank = 0;
    for step in 0..r.min(c) {
        let mut best = (step, step, 0.0_f64);
        for (i, row) in m.iter().enumerate().skip(step) {
            for (j, v) in row.iter().enumerate().skip(step) {
                if v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 <= tol * scale {
            break;
        }
        m.swap(step, best.0);
        for row in m.iter_mut() {
            row.swap(step, best.1);
        }
        for i in (step + 1)..r {
            let factor = m[i][step] / m[step][step];
            for j in step..c {
                m[i][j] -= factor * m[step][j];
            }
        }
        rank += 1;
    }
    rank
}

/// Left pseudo-inverse of a nonzero column: `bᵀ / (bᵀb)`.
pub fn left_pinv_col(b: &Mat) -> Result<Mat, NumericsError> {
    if b.cols() != 1 {
        return Err(NumericsError::DimensionMismatch {
            context: "left_pinv_col expects a column",
            expected: 1,
            found: b.cols(),
        });
    }
    let gram: f64 = b.as_slice().iter().map(|v| v * v).sum();
    if gram.sqrt() < ZERO_COLUMN_TOL {
        return Err(NumericsError::ZeroColumn);
    }
    Ok(Mat::row(
        &b.as_slice().iter().map(|v| v / gram).collect::<Vec<_>>(),
    ))
}

/// Solves the continuous Lyapunov equation `AᵀP + PA = −Q`.
///
/// The equation is vectorized column-major as
/// `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = −vec(Q)` and solved densely, followed by one
/// round of iterative refinement. The result is symmetrized.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat, NumericsError> {
    let n = a.rows();
    if !a.is_square() || q.rows() != n || q.cols() != n {
        return Err(NumericsError::DimensionMismatch {
            context: "lyapunov operands",
            expected: n,
            found: q.rows(),
        });
    }
    if q.asymmetry() > SYMMETRY_TOL {
        return Err(NumericsError::NotSymmetric {
            asymmetry: q.asymmetry(),
        });
    }

    let nn = n * n;
    let mut k = Mat::zeros(nn, nn);
    // vec index of P[i][j] (column-major) is j*n + i.
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for m in 0..n {
                // (AᵀP)[i][j] = Σ_m A[m][i] P[m][j]
                k[(row, j * n + m)] += a[(m, i)];
                // (PA)[i][j] = Σ_m P[i][m] A[m][j]
                k[(row, m * n + i)] += a[(m, j)];
            }
        }
    }
    let rhs: Vec<f64> = (0..nn).map(|idx| -q[(idx % n, idx / n)]).collect();

    let mut x = solve_dense(&k, &rhs)?;
    let residual: Vec<f64> = k
        .mul_vec(&x)
        .iter()
        .zip(&rhs)
        .map(|(kx, r)| r - kx)
        .collect();
    let correction = solve_dense(&k, &residual)?;
    for (xi, ci) in x.iter_mut().zip(&correction) {
        *xi += ci;
    }

    let mut p = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = x[j * n + i];
        }
    }
    if !p.is_finite() {
        return Err(NumericsError::SingularSystem);
    }
    Ok(p.symmetrized())
}

/// `AᵀP + PA + Q`, the Lyapunov residual matrix.
pub fn lyapunov_residual(a: &Mat, p: &Mat, q: &Mat) -> Mat {
    let at = a.transpose();
    &(&(&at * p) + &(p * a)) + q
}

fn check_symmetric(m: &Mat) -> Result<Mat, NumericsError> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(NumericsError::NotSymmetric { asymmetry: asym });
    }
    Ok(m.symmetrized())
}

/// Strict positive definiteness by Cholesky: every pivot must exceed 1e-12.
pub fn is_positive_definite(m: &Mat) -> Result<bool, NumericsError> {
    let s = check_symmetric(m)?;
    let n = s.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let pivot = s[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if pivot.is_nan() || pivot <= PD_PIVOT {
            return Ok(false);
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let v = s[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = v / d;
        }
    }
    Ok(true)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn eig_symmetric(m: &Mat) -> Result<Vec<f64>, NumericsError> {
    let mut a = check_symmetric(m)?;
    let n = a.rows();
    let tol = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);

    let off_norm = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) >= tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericsError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle that annihilates a[p][q].
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plant_a() -> Mat {
        Mat::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -3.0]])
    }

    #[test]
    fn dense_solve_small_system() {
        let a = Mat::from_rows(&[[0.0, 2.0], [1.0, 1.0]]);
        let x = solve_dense(&a, &[4.0, 3.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-15);
        let singular = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(
            solve_dense(&singular, &[1.0, 1.0]),
            Err(NumericsError::SingularSystem)
        );
    }

    #[test]
    fn rank_detects_deficiency() {
        assert_eq!(rank(&Mat::identity(3), 1e-9), 3);
        let m = Mat::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 0.0]]);
        assert_eq!(rank(&m, 1e-9), 2);
        assert_eq!(rank(&Mat::zeros(2, 2), 1e-9), 0);
    }

    #[test]
    fn lyapunov_scalar() {
        let p = solve_lyapunov(&Mat::from_rows(&[[-1.0]]), &Mat::from_rows(&[[2.0]])).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_marginal_is_singular() {
        assert_eq!(
            solve_lyapunov(&Mat::from_rows(&[[0.0]]), &Mat::from_rows(&[[1.0]])),
            Err(NumericsError::SingularSystem)
        );
        let double_integrator = Mat::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(
            solve_lyapunov(&double_integrator, &Mat::identity(2)),
            Err(NumericsError::SingularSystem)
        );
    }

    #[test]
    fn lyapunov_plant_residual_and_symmetry() {
        let a = plant_a();
        let q = Mat::identity(3);
        let p = solve_lyapunov(&a, &q).unwrap();
        assert!(lyapunov_residual(&a, &p, &q).max_abs() <= 1e-10);
        assert_eq!(p.asymmetry(), 0.0);
        assert!(is_positive_definite(&p).unwrap());
    }

    #[test]
    fn pd_simple_cases() {
        assert!(is_positive_definite(&Mat::identity(3)).unwrap());
        assert!(!is_positive_definite(&Mat::diag(&[1.0, 0.0])).unwrap());
        assert!(!is_positive_definite(&Mat::diag(&[1.0, -1.0])).unwrap());
        let asym = Mat::from_rows(&[[1.0, 0.0], [1e-6, 1.0]]);
        assert!(matches!(
            is_positive_definite(&asym),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eig_known_spectra() {
        assert_eq!(
            eig_symmetric(&Mat::diag(&[3.0, 1.0, 2.0])).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let e = eig_symmetric(&Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_of_lyapunov_solution_positive() {
        let p = solve_lyapunov(&plant_a(), &Mat::identity(3)).unwrap();
        assert!(eig_symmetric(&p).unwrap().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn left_pinv_cases() {
        assert_eq!(
            left_pinv_col(&Mat::column(&[0.0, 0.0, 1.0])).unwrap(),
            Mat::row(&[0.0, 0.0, 1.0])
        );
        assert_eq!(
            left_pinv_col(&Mat::column(&[0.0, 0.0, 2.0])).unwrap(),
            Mat::row(&[0.0, 0.0, 0.5])
        );
        assert_eq!(
            left_pinv_col(&Mat::column(&[1.0; 4])).unwrap(),
            Mat::row(&[0.25; 4])
        );
        assert_eq!(
            left_pinv_col(&Mat::column(&[0.0, 0.0])),
            Err(NumericsError::ZeroColumn)
        );
    }
}
