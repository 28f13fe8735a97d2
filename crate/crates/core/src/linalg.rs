//! Small dense linear-algebra helpers shared by the hand-written networks.

/// out = W x, with W stored row-major as rows x cols.
pub fn matvec(w: &[f64], x: &[f64], out: &mut [f64], rows: usize, cols: usize) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        out[r] = dot(row, x);
    }
}

/// out += W^T y, with W stored row-major as rows x cols.
pub fn matvec_transpose_acc(w: &[f64], y: &[f64], out: &mut [f64], rows: usize, cols: usize) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let yr = y[r];
        for c in 0..cols {
            out[c] += row[c] * yr;
        }
    }
}

/// gW += dy x^T (outer product accumulate), gW row-major rows x cols.
pub fn outer_acc(gw: &mut [f64], dy: &[f64], x: &[f64], rows: usize, cols: usize) {
    debug_assert_eq!(gw.len(), rows * cols);
    debug_assert_eq!(dy.len(), rows);
    debug_assert_eq!(x.len(), cols);
    for r in 0..rows {
        let row = &mut gw[r * cols..(r + 1) * cols];
        let d = dy[r];
        for c in 0..cols {
            row[c] += d * x[c];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// In-place stable softmax.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_hand_computation() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let x = [1.0, 0.5, -1.0];
        let mut out = [0.0; 2];
        matvec(&w, &x, &mut out, 2, 3);
        assert_eq!(out, [-1.0, 0.5]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut v = [1.0, 2.0, 3.0];
        softmax_in_place(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v[2] > v[1] && v[1] > v[0]);
    }
}
