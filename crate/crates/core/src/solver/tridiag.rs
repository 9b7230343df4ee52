//! Thomas algorithm and its periodic (Sherman-Morrison) variant.

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Cyclic system: `lower[0]` couples `x[0]` to `x[n-1]` and `upper[n-1]`
/// couples `x[n-1]` to `x[0]`. Requires `n >= 3`.
pub fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    solve(lower, &d, upper, rhs);
    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = alpha;
    solve(lower, &d, upper, &mut z);
    let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] -= fact * z[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64], cyclic: bool) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                } else if cyclic {
                    s += lower[0] * x[n - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                } else if cyclic {
                    s += upper[n - 1] * x[0];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_plain_and_cyclic() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.4 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        for cyclic in [false, true] {
            let mut b = apply(&lower, &diag, &upper, &x, cyclic);
            if cyclic {
                solve_cyclic(&lower, &diag, &upper, &mut b);
            } else {
                solve(&lower, &diag, &upper, &mut b);
            }
            for (a, e) in b.iter().zip(&x) {
                assert!((a - e).abs() < 1e-13);
            }
        }
    }
}
