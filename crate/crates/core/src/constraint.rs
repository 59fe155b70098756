//! Constraint maps `f : R^n -> R^m`.
//!
//! A map supplies its value, its `m x n` Jacobian `J(x)` and its second
//! derivative as a symmetric bilinear form `H(x)[u, w]` whose `i`-th component
//! is `u^T (hess f_i)(x) w`. The level sets `{y : f(y) = f(x)}` are the
//! manifolds Hug moves along.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, HugError, Result};
use crate::linalg::{bilinear_norm, fd_jacobian};
use crate::{Matrix, Vector};

/// A smooth map `f : R^n -> R^m` with `0 < m < n`.
///
/// Implementors provide the unchecked `value`, `jac` and `hess`; callers
/// normally go through the dimension-checked [`eval_f`](Self::eval_f),
/// [`jacobian`](Self::jacobian) and [`hessian_bilinear`](Self::hessian_bilinear).
pub trait ConstraintMap: Send + Sync {
    fn dim_n(&self) -> usize;
    fn dim_m(&self) -> usize;

    fn value(&self, x: &Vector) -> Vector;
    fn jac(&self, x: &Vector) -> Matrix;
    fn hess(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector;

    /// The `m x n` matrix of the linear map `z -> H(x)[w, z]`.
    fn hess_partial(&self, x: &Vector, w: &Vector) -> Matrix {
        let n = self.dim_n();
        let cols: Vec<Vector> = (0..n)
            .map(|j| self.hess(x, w, &Vector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 })))
            .collect();
        Matrix::from_columns(&cols)
    }

    /// Per-component Hessian matrices `hess f_i(x)`, each `n x n`.
    fn hessian_matrices(&self, x: &Vector) -> Vec<Matrix> {
        let n = self.dim_n();
        let m = self.dim_m();
        let mut out = vec![Matrix::zeros(n, n); m];
        for j in 0..n {
            let ej = unit(n, j);
            let rows = self.hess_partial(x, &ej);
            for (i, mat) in out.iter_mut().enumerate() {
                for k in 0..n {
                    mat[(j, k)] = rows[(i, k)];
                }
            }
        }
        out
    }

    fn eval_f(&self, x: &Vector) -> Result<Vector> {
        check_len("x", self.dim_n(), x.len())?;
        Ok(self.value(x))
    }

    fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        check_len("x", self.dim_n(), x.len())?;
        Ok(self.jac(x))
    }

    fn hessian_bilinear(&self, x: &Vector, u: &Vector, w: &Vector) -> Result<Vector> {
        let n = self.dim_n();
        check_len("x", n, x.len())?;
        check_len("u", n, u.len())?;
        check_len("w", n, w.len())?;
        Ok(self.hess(x, u, w))
    }
}

pub(crate) fn unit(n: usize, j: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[j] = 1.0;
    e
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(HugError::InvalidParameter(format!(
            "ambient dimension must be at least 2, got {n}"
        )));
    }
    if m == 0 || m >= n {
        return Err(HugError::InvalidParameter(format!(
            "constraint count must satisfy 0 < m < n, got m = {m}, n = {n}"
        )));
    }
    Ok(())
}

/// `f_i(x) = x^T A_i x` with symmetric `A_i`.
///
/// Negated components are expressed by negating the matrix, e.g.
/// `Quadric::diagonal(&[-1.0, -4.0])` is `f = -x1^2 - 4 x2^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    mats: Vec<Matrix>,
}

impl Quadric {
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        let n = mats.first().map(|a| a.nrows()).unwrap_or(0);
        check_dims(n, mats.len())?;
        for a in &mats {
            if a.nrows() != n || a.ncols() != n {
                return Err(HugError::InvalidParameter(
                    "all coefficient matrices must be n x n".into(),
                ));
            }
            let asym = (a - a.transpose()).amax();
            if asym > 1e-12 * a.amax().max(1.0) {
                return Err(HugError::InvalidParameter(
                    "coefficient matrices must be symmetric".into(),
                ));
            }
        }
        Ok(Quadric { mats })
    }

    /// Single constraint `f(x) = sum_i d_i x_i^2`.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(vec![Matrix::from_diagonal(&Vector::from_column_slice(diag))])
    }

    /// `f(x) = ||x||^2` in `R^n`.
    pub fn sphere(n: usize) -> Result<Self> {
        Self::new(vec![Matrix::identity(n, n)])
    }

    /// Flip the sign of component `i`.
    pub fn negate_component(mut self, i: usize) -> Result<Self> {
        let m = self.mats.len();
        let a = self.mats.get_mut(i).ok_or_else(|| {
            HugError::InvalidParameter(format!("component {i} out of range for m = {m}"))
        })?;
        *a = -a.clone();
        Ok(self)
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.mats
    }
}

impl ConstraintMap for Quadric {
    fn dim_n(&self) -> usize {
        self.mats[0].nrows()
    }

    fn dim_m(&self) -> usize {
        self.mats.len()
    }

    fn value(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.mats.len(), self.mats.iter().map(|a| x.dot(&(a * x))))
    }

    fn jac(&self, x: &Vector) -> Matrix {
        let rows: Vec<_> = self.mats.iter().map(|a| (a * x).transpose() * 2.0).collect();
        Matrix::from_rows(&rows)
    }

    fn hess(&self, _x: &Vector, u: &Vector, w: &Vector) -> Vector {
        Vector::from_iterator(
            self.mats.len(),
            self.mats.iter().map(|a| 2.0 * u.dot(&(a * w))),
        )
    }

    fn hess_partial(&self, _x: &Vector, w: &Vector) -> Matrix {
        let rows: Vec<_> = self.mats.iter().map(|a| (a * w).transpose() * 2.0).collect();
        Matrix::from_rows(&rows)
    }

    fn hessian_matrices(&self, _x: &Vector) -> Vec<Matrix> {
        self.mats.iter().map(|a| a * 2.0).collect()
    }
}

/// Affine map `f(x) = A x + b`; its level sets are flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    a: Matrix,
    b: Vector,
}

impl Linear {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        check_dims(a.ncols(), a.nrows())?;
        check_len("b", a.nrows(), b.len())?;
        Ok(Linear { a, b })
    }
}

impl ConstraintMap for Linear {
    fn dim_n(&self) -> usize {
        self.a.ncols()
    }

    fn dim_m(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }

    fn jac(&self, _x: &Vector) -> Matrix {
        self.a.clone()
    }

    fn hess(&self, _x: &Vector, _u: &Vector, _w: &Vector) -> Vector {
        Vector::zeros(self.a.nrows())
    }

    fn hess_partial(&self, _x: &Vector, _w: &Vector) -> Matrix {
        Matrix::zeros(self.a.nrows(), self.a.ncols())
    }
}

/// Non-quadratic test map `f_i(x) = sum_j c_ij sin(x_j) + x^T A_i x`.
///
/// Its Hessian `2 A_i - diag(c_ij sin x_j)` varies with `x`, so it exercises
/// the Lipschitz constant of `H` (zero for every quadric).
#[derive(Debug, Clone, PartialEq)]
pub struct SineQuadric {
    coeffs: Vec<Vector>,
    mats: Vec<Matrix>,
}

impl SineQuadric {
    pub fn new(coeffs: Vec<Vector>, mats: Vec<Matrix>) -> Result<Self> {
        if coeffs.len() != mats.len() {
            return Err(HugError::InvalidParameter(
                "need one coefficient vector per matrix".into(),
            ));
        }
        let quad = Quadric::new(mats)?;
        let n = quad.dim_n();
        for c in &coeffs {
            check_len("sine coefficients", n, c.len())?;
        }
        Ok(SineQuadric {
            coeffs,
            mats: quad.mats,
        })
    }

    /// Upper bound on `sup ||H(x) - H(y)|| / ||x - y||`, namely
    /// `sqrt(sum_i max_j c_ij^2)`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.amax().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl ConstraintMap for SineQuadric {
    fn dim_n(&self) -> usize {
        self.mats[0].nrows()
    }

    fn dim_m(&self) -> usize {
        self.mats.len()
    }

    fn value(&self, x: &Vector) -> Vector {
        let s = x.map(f64::sin);
        Vector::from_iterator(
            self.mats.len(),
            self.coeffs
                .iter()
                .zip(&self.mats)
                .map(|(c, a)| c.dot(&s) + x.dot(&(a * x))),
        )
    }

    fn jac(&self, x: &Vector) -> Matrix {
        let cs = x.map(f64::cos);
        let rows: Vec<_> = self
            .coeffs
            .iter()
            .zip(&self.mats)
            .map(|(c, a)| (c.component_mul(&cs) + a * x * 2.0).transpose())
            .collect();
        Matrix::from_rows(&rows)
    }

    fn hess(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        let s = x.map(f64::sin);
        let uw = u.component_mul(w);
        Vector::from_iterator(
            self.mats.len(),
            self.coeffs
                .iter()
                .zip(&self.mats)
                .map(|(c, a)| 2.0 * u.dot(&(a * w)) - c.component_mul(&s).dot(&uw)),
        )
    }

    fn hess_partial(&self, x: &Vector, w: &Vector) -> Matrix {
        let s = x.map(f64::sin);
        let rows: Vec<_> = self
            .coeffs
            .iter()
            .zip(&self.mats)
            .map(|(c, a)| (a * w * 2.0 - c.component_mul(&s).component_mul(w)).transpose())
            .collect();
        Matrix::from_rows(&rows)
    }
}

type EvalFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type JacFn = dyn Fn(&Vector) -> Matrix + Send + Sync;
type HessFn = dyn Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync;

/// User-supplied map. Missing derivatives fall back to central differences
/// with step `h = 1e-5 * max(1, ||x||)`.
#[derive(Clone)]
pub struct CustomMap {
    n: usize,
    m: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    hess: Option<Arc<HessFn>>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMap")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("analytic_jac", &self.jac.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .finish()
    }
}

impl CustomMap {
    pub fn new<F>(n: usize, m: usize, eval: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        check_dims(n, m)?;
        Ok(CustomMap {
            n,
            m,
            eval: Arc::new(eval),
            jac: None,
            hess: None,
        })
    }

    pub fn with_jacobian<F>(mut self, jac: F) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_hessian<F>(mut self, hess: F) -> Self
    where
        F: Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(hess));
        self
    }

    fn fd_step(x: &Vector) -> f64 {
        1e-5 * x.norm().max(1.0)
    }
}

impl ConstraintMap for CustomMap {
    fn dim_n(&self) -> usize {
        self.n
    }

    fn dim_m(&self) -> usize {
        self.m
    }

    fn value(&self, x: &Vector) -> Vector {
        (self.eval)(x)
    }

    fn jac(&self, x: &Vector) -> Matrix {
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian(|y| (self.eval)(y), x, Self::fd_step(x)),
        }
    }

    fn hess(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        if let Some(h) = &self.hess {
            return h(x, u, w);
        }
        let (nu, nw) = (u.norm(), w.norm());
        if nu == 0.0 || nw == 0.0 {
            return Vector::zeros(self.m);
        }
        let (uh, wh) = (u / nu, w / nw);
        let scaled = match &self.jac {
            // difference of the analytic Jacobian along w
            Some(j) => {
                let h = Self::fd_step(x);
                (j(&(x + &wh * h)) - j(&(x - &wh * h))) * &uh / (2.0 * h)
            }
            // four-point second difference; a larger step keeps roundoff at bay
            None => {
                let h = 1e-4 * x.norm().max(1.0);
                let f = |a: f64, b: f64| (self.eval)(&(x + &uh * a + &wh * b));
                (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
            }
        };
        scaled * (nu * nw)
    }
}

/// Empirical estimates of `beta = sup ||H(x)||` and of the Lipschitz constant
/// `gamma` of `x -> H(x)` over a finite sample of points.
///
/// These are estimates (lower bounds of the true suprema over the region the
/// points cover), not certified bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianNormEstimate {
    pub beta: f64,
    pub gamma: f64,
}

pub fn hessian_operator_norm_bounds<M: ConstraintMap + ?Sized>(
    map: &M,
    sample_points: &[Vector],
) -> Result<HessianNormEstimate> {
    if sample_points.is_empty() {
        return Err(HugError::EmptySample);
    }
    for p in sample_points {
        check_len("sample point", map.dim_n(), p.len())?;
    }
    let hessians: Vec<Vec<Matrix>> = sample_points
        .iter()
        .map(|x| map.hessian_matrices(x))
        .collect();
    let beta = hessians
        .iter()
        .map(|h| bilinear_norm(h))
        .fold(0.0, f64::max);

    let mut gamma = 0.0_f64;
    for i in 0..hessians.len() {
        for j in (i + 1)..hessians.len() {
            let dist = (&sample_points[i] - &sample_points[j]).norm();
            if dist <= 1e-12 {
                continue;
            }
            let diff: Vec<Matrix> = hessians[i]
                .iter()
                .zip(&hessians[j])
                .map(|(a, b)| a - b)
                .collect();
            gamma = gamma.max(bilinear_norm(&diff) / dist);
        }
    }
    Ok(HessianNormEstimate { beta, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| rng.random_range(-1.5..1.5))
    }

    fn sine_map() -> SineQuadric {
        SineQuadric::new(
            vec![v(&[0.7, -0.4, 0.3])],
            vec![Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 1.5])],
        )
        .unwrap()
    }

    fn builtins() -> Vec<Box<dyn ConstraintMap>> {
        vec![
            Box::new(Quadric::diagonal(&[-1.0, -4.0]).unwrap()),
            Box::new(Quadric::sphere(3).unwrap()),
            Box::new(
                Quadric::new(vec![
                    Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, -0.3, 0.0, -0.3, 3.0]),
                    Matrix::identity(3, 3),
                ])
                .unwrap(),
            ),
            Box::new(sine_map()),
        ]
    }

    #[test]
    fn eval_examples() {
        let q = Quadric::diagonal(&[-1.0, -4.0]).unwrap();
        assert_eq!(q.eval_f(&v(&[1.0, 0.0])).unwrap(), v(&[-1.0]));
        assert!(matches!(
            q.eval_f(&v(&[1.0, 0.0, 0.0])),
            Err(HugError::DimensionMismatch { expected: 2, got: 3, .. })
        ));
        let s = Quadric::sphere(4).unwrap();
        assert_eq!(s.eval_f(&Vector::zeros(4)).unwrap(), v(&[0.0]));
    }

    #[test]
    fn jacobian_examples() {
        let q = Quadric::diagonal(&[-1.0, -4.0]).unwrap();
        assert_eq!(q.jacobian(&v(&[1.0, 0.0])).unwrap(), Matrix::from_row_slice(1, 2, &[-2.0, 0.0]));
        let s = Quadric::sphere(3).unwrap();
        assert_eq!(
            s.jacobian(&v(&[1.0, 2.0, 3.0])).unwrap(),
            Matrix::from_row_slice(1, 3, &[2.0, 4.0, 6.0])
        );
        assert!(s.jacobian(&v(&[1.0])).is_err());
    }

    #[test]
    fn hessian_examples() {
        let q = Quadric::diagonal(&[-1.0, -4.0]).unwrap();
        let x = v(&[0.3, 0.1]);
        assert_eq!(q.hessian_bilinear(&x, &v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), v(&[-2.0]));
        for map in builtins() {
            let n = map.dim_n();
            let x = Vector::from_element(n, 0.4);
            let h = map.hessian_bilinear(&x, &Vector::zeros(n), &Vector::from_element(n, 1.0)).unwrap();
            assert_eq!(h, Vector::zeros(map.dim_m()));
        }
        assert!(q.hessian_bilinear(&x, &v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn hessian_symmetric_and_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (idx, map) in builtins().iter().enumerate() {
            let n = map.dim_n();
            for _ in 0..100 {
                let x = random_vec(&mut rng, n);
                let u = random_vec(&mut rng, n);
                let u2 = random_vec(&mut rng, n);
                let w = random_vec(&mut rng, n);
                let a: f64 = rng.random_range(-2.0..2.0);
                let huw = map.hess(&x, &u, &w);
                let hwu = map.hess(&x, &w, &u);
                let asym = (&huw - &hwu).amax();
                if idx < 3 {
                    // quadrics: 2 u^T A w with symmetric A, identical up to dot-product ordering
                    assert!(asym <= 1e-14 * huw.amax().max(1.0), "asym {asym}");
                } else {
                    assert!(asym <= 1e-12, "asym {asym}");
                }
                let lhs = map.hess(&x, &(&u * a + &u2), &w);
                let rhs = huw * a + map.hess(&x, &u2, &w);
                assert!((lhs - rhs).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn quadric_derivatives_closed_form() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        let q = Quadric::new(vec![a.clone()]).unwrap();
        let x = v(&[0.3, -1.2]);
        let row = (&a * &x).transpose() * 2.0;
        assert!((q.jac(&x) - row).amax() < 1e-15);
        let u = v(&[1.0, 2.0]);
        let w = v(&[-0.5, 0.25]);
        assert!((q.hess(&x, &u, &w)[0] - 2.0 * u.dot(&(&a * &w))).abs() < 1e-15);
        assert_eq!(q.hess(&x, &u, &w), q.hess(&v(&[9.0, 9.0]), &u, &w));
    }

    #[test]
    fn analytic_jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for map in builtins() {
            let n = map.dim_n();
            for _ in 0..20 {
                let x = random_vec(&mut rng, n);
                let fd = fd_jacobian(|y| map.value(y), &x, 1e-5);
                assert!((fd - map.jac(&x)).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn analytic_hessian_matches_four_point_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for map in builtins() {
            let n = map.dim_n();
            for _ in 0..20 {
                let x = random_vec(&mut rng, n);
                let u = random_vec(&mut rng, n).normalize();
                let w = random_vec(&mut rng, n).normalize();
                let h = 1e-3;
                let f = |a: f64, b: f64| map.value(&(&x + &u * a + &w * b));
                let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                assert!((fd - map.hess(&x, &u, &w)).amax() < 1e-5);
            }
        }
    }

    #[test]
    fn finite_difference_errors_decay_at_second_order() {
        // Non-quadratic map so the truncation term is nonzero.
        let map = sine_map();
        let x = v(&[0.4, -0.9, 1.3]);
        let u = v(&[0.0, 0.6, 0.8]);
        let w = v(&[0.0, 1.0, 0.0]);
        let mut jac_err = Vec::new();
        let mut hess_err = Vec::new();
        for &h in &[1e-3, 1e-4, 1e-5] {
            let fd = fd_jacobian(|y| map.value(y), &x, h);
            jac_err.push((h, (fd - map.jac(&x)).amax()));
            let fdh = (map.jac(&(&x + &w * h)) - map.jac(&(&x - &w * h))) * &u / (2.0 * h);
            hess_err.push((h, (fdh - map.hess(&x, &u, &w)).amax()));
        }
        // From 1e-3 to 1e-4 the truncation term dominates: factor ~100.
        for errs in [&jac_err, &hess_err] {
            let ratio = errs[0].1 / errs[1].1;
            assert!(ratio > 50.0 && ratio < 200.0, "ratio {ratio} from {errs:?}");
            assert!(errs[2].1 < 1e-8);
        }
    }

    #[test]
    fn custom_map_fallbacks_agree_with_analytic() {
        let reference = sine_map();
        let r2 = reference.clone();
        let plain = CustomMap::new(3, 1, move |x| r2.value(x)).unwrap();
        let r3 = reference.clone();
        let r4 = reference.clone();
        let with_jac = CustomMap::new(3, 1, move |x| r3.value(x))
            .unwrap()
            .with_jacobian(move |x| r4.jac(x));
        let x = v(&[0.2, 0.5, -0.7]);
        let u = v(&[1.0, -2.0, 0.5]);
        let w = v(&[0.3, 0.3, 1.0]);
        assert!((plain.jac(&x) - reference.jac(&x)).amax() < 1e-8);
        assert!((plain.hess(&x, &u, &w) - reference.hess(&x, &u, &w)).amax() < 1e-5);
        assert!((with_jac.hess(&x, &u, &w) - reference.hess(&x, &u, &w)).amax() < 1e-8);
        assert_eq!(plain.hess(&x, &Vector::zeros(3), &w), Vector::zeros(1));
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        assert!(Quadric::diagonal(&[1.0]).is_err());
        assert!(Quadric::new(vec![Matrix::identity(2, 2), Matrix::identity(2, 2)]).is_err());
        assert!(Quadric::new(vec![Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])]).is_err());
        assert!(CustomMap::new(3, 0, |x: &Vector| x.clone()).is_err());
        assert!(Linear::new(Matrix::zeros(1, 3), Vector::zeros(2)).is_err());
    }

    #[test]
    fn norm_estimates() {
        let q = Quadric::diagonal(&[-1.0, -4.0]).unwrap();
        let pts = vec![v(&[1.0, 0.0]), v(&[0.0, 0.5]), v(&[0.3, -0.2])];
        let est = hessian_operator_norm_bounds(&q, &pts).unwrap();
        assert!((est.beta - 8.0).abs() < 1e-12);
        assert_eq!(est.gamma, 0.0);

        let lin = Linear::new(Matrix::from_row_slice(1, 2, &[1.0, 2.0]), v(&[0.0])).unwrap();
        let est = hessian_operator_norm_bounds(&lin, &pts).unwrap();
        assert_eq!(est, HessianNormEstimate { beta: 0.0, gamma: 0.0 });

        assert_eq!(hessian_operator_norm_bounds(&q, &[]), Err(HugError::EmptySample));
    }

    #[test]
    fn sine_gamma_estimate_below_analytic_bound() {
        let map = sine_map();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vector> = (0..40).map(|_| random_vec(&mut rng, 3)).collect();
        let est = hessian_operator_norm_bounds(&map, &pts).unwrap();
        assert!(est.gamma > 0.0);
        assert!(est.gamma <= map.lipschitz_bound() + 1e-12);
        // ||2A|| <= beta_est <= ||2A|| + max|c|
        let two_a = bilinear_norm(&[map.mats[0].clone() * 2.0]);
        assert!(est.beta <= two_a + 0.7 + 1e-12);
        assert!(est.beta >= two_a - 0.7 - 1e-12);
    }
}
