//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `j * x = b`.
pub fn min_norm_solve(j: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DVector::zeros(j.ncols());
    }
    svd.solve(b, smax * 1e-10).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// Singular values (descending) and right singular vectors as columns,
/// always returning a full `ncols x ncols` basis.
pub fn full_right_svd(j: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = j.ncols();
    let m = if j.nrows() < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (j.nrows(), n)).copy_from(j);
        padded
    } else {
        j.clone()
    };
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let mut values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &vt.row(i).transpose());
    }
    values.resize(n, 0.0);
    (values, v)
}

/// Numerical rank with relative threshold.
pub fn rank(j: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (s, _) = full_right_svd(j);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Orthonormal basis of the `dim`-dimensional approximate kernel of `j`
/// (right singular vectors of the `dim` smallest singular values).
pub fn kernel_frame(j: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let n = j.ncols();
    let (_, v) = full_right_svd(j);
    v.columns(n - dim, dim).into_owned()
}

/// Square root of the Gram determinant of the columns of `g`
/// (the k-volume of the parallelotope they span).
pub fn gram_volume(g: &DMatrix<f64>) -> f64 {
    let gram = g.transpose() * g;
    let d = gram.determinant();
    if d <= 0.0 {
        0.0
    } else {
        d.sqrt()
    }
}

/// Modified Gram-Schmidt; drops columns that become numerically dependent.
pub fn orthonormalize(cols: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        for u in &out {
            let d = u.dot(&v);
            v -= u * d;
        }
        let n = v.norm();
        if n > 1e-12 * c.norm().max(1e-300) {
            out.push(v / n);
        }
    }
    out
}

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

/// Ordinary least squares fit `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0, 0.0);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_plane_constraint() {
        // z = 0 in R^3
        let j = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        let k = kernel_frame(&j, 2);
        for c in 0..2 {
            assert!(k[(2, c)].abs() < 1e-12);
            assert!((k.column(c).norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(rank(&j, 1e-10), 1);
    }

    #[test]
    fn min_norm_step_is_orthogonal_projection() {
        let j = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0]);
        let x = min_norm_solve(&j, &b);
        assert!((x[2] - 1.0).abs() < 1e-12 && x[0].abs() < 1e-12 && x[1].abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.5 * v).collect();
        let (a, b, r2) = linear_fit(&x, &y);
        assert!((a - 1.5).abs() < 1e-12 && (b + 0.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
