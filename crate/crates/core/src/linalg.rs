//! Small dense helpers shared by several modules.

use crate::{Matrix, Vector};
use nalgebra::SymmetricEigen;

/// Central-difference Jacobian of `f` at `x` with step `h`.
pub fn fd_jacobian<F>(f: F, x: &Vector, h: f64) -> Matrix
where
    F: Fn(&Vector) -> Vector,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.clone();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        cols.push((fp - fm) / (2.0 * h));
    }
    Matrix::from_columns(&cols)
}

/// Operator norm `sup ||S[u, w]||` over unit `u`, `w` of a symmetric bilinear
/// map `R^n x R^n -> R^m` given by its component matrices.
///
/// Exact for `m = 1` (largest absolute eigenvalue). For `m > 1` an
/// alternating-maximisation estimate from several deterministic starts; it is
/// a lower bound that is tight in practice for small `n`.
pub fn bilinear_norm(components: &[Matrix]) -> f64 {
    let sym: Vec<Matrix> = components
        .iter()
        .map(|a| (a + a.transpose()) * 0.5)
        .collect();
    match sym.len() {
        0 => 0.0,
        1 => SymmetricEigen::new(sym[0].clone())
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.abs())),
        _ => alternating_norm(&sym),
    }
}

fn alternating_norm(sym: &[Matrix]) -> f64 {
    let n = sym[0].nrows();
    let apply = |u: &Vector| -> Matrix {
        // rows u^T A_i
        let rows: Vec<_> = sym.iter().map(|a| (a * u).transpose()).collect();
        Matrix::from_rows(&rows)
    };
    let top_right_singular = |m: &Matrix| -> (f64, Vector) {
        let gram = m.transpose() * m;
        let eig = SymmetricEigen::new(gram);
        let (idx, val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc });
        (val.max(0.0).sqrt(), eig.eigenvectors.column(idx).into_owned())
    };

    let mut starts: Vec<Vector> = Vec::new();
    for a in sym {
        let eig = SymmetricEigen::new(a.clone());
        for k in 0..n {
            starts.push(eig.eigenvectors.column(k).into_owned());
        }
    }
    let mut best = 0.0_f64;
    for mut u in starts {
        let mut last = -1.0;
        for _ in 0..100 {
            let (s, w) = top_right_singular(&apply(&u));
            let (s2, u2) = top_right_singular(&apply(&w));
            u = u2;
            best = best.max(s).max(s2);
            if (s2 - last).abs() <= 1e-14 * s2.max(1.0) {
                break;
            }
            last = s2;
        }
    }
    best
}

/// Least-squares slope of `log(err)` against `log(delta)`.
///
/// Points with `err < 1e-12` sit on the roundoff floor and are dropped.
/// Returns `None` when fewer than two usable points remain.
pub fn fit_order(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e >= 1e-12 && e.is_finite())
        .map(|(d, e)| (d.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_order_recovers_power_law() {
        let pts: Vec<_> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&d: &f64| (d, 3.0 * d.powi(2)))
            .collect();
        assert!((fit_order(&pts).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_order_drops_roundoff_floor() {
        let pts = [(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 1e-14)];
        assert!((fit_order(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_order(&[(0.1, 1e-15), (0.05, 1e-16)]).is_none());
    }

    #[test]
    fn bilinear_norm_single_component_is_spectral_radius() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![-2.0, -8.0]));
        assert!((bilinear_norm(&[a]) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_norm_two_components() {
        // S[u,w] = (u1 w1, u2 w2): sup over unit vectors is 1.
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.0]));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![0.0, 1.0]));
        assert!((bilinear_norm(&[a.clone(), b]) - 1.0).abs() < 1e-10);
        // identical components: sqrt(2) * spectral norm
        assert!((bilinear_norm(&[a.clone(), a]) - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn fd_jacobian_of_linear_map_is_exact() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let x = Vector::from_vec(vec![0.3, -0.2, 1.1]);
        let j = fd_jacobian(|y| &a * y, &x, 1e-3);
        assert!((j - a).amax() < 1e-10);
    }
}
