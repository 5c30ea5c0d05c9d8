//! Dense LU factorization with partial pivoting, generic over the scalar so
//! the same code backs the fast `Complex64` paths (resolvent grids, inverse
//! iteration) and the high-precision [`BigComplex`] paths (determinant
//! identity checks, characteristic polynomials).

use num_complex::Complex64;

use crate::bignum::BigComplex;

pub trait Scalar: Clone + Send + Sync {
    fn s_add(&self, o: &Self) -> Self;
    fn s_sub(&self, o: &Self) -> Self;
    fn s_mul(&self, o: &Self) -> Self;
    fn s_div(&self, o: &Self) -> Self;
    fn s_neg(&self) -> Self;
    fn s_conj(&self) -> Self;
    fn s_zero_like(&self) -> Self;
    fn s_one_like(&self) -> Self;
    /// Approximate magnitude used only for pivot selection.
    fn pivot_mag(&self) -> f64;
    fn s_is_zero(&self) -> bool;
    /// |z|^2 as f64 (saturating); used for norms of O(1) vectors.
    fn mag_sq(&self) -> f64;
    fn s_scale_f64(&self, x: f64) -> Self;
}

impl Scalar for Complex64 {
    fn s_add(&self, o: &Self) -> Self {
        self + o
    }
    fn s_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn s_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn s_div(&self, o: &Self) -> Self {
        self / o
    }
    fn s_neg(&self) -> Self {
        -self
    }
    fn s_conj(&self) -> Self {
        self.conj()
    }
    fn s_zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn s_one_like(&self) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn pivot_mag(&self) -> f64 {
        self.re.abs() + self.im.abs()
    }
    fn s_is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn mag_sq(&self) -> f64 {
        self.norm_sqr()
    }
    fn s_scale_f64(&self, x: f64) -> Self {
        self * x
    }
}

impl Scalar for BigComplex {
    fn s_add(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn s_sub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn s_mul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn s_div(&self, o: &Self) -> Self {
        self.div(o)
    }
    fn s_neg(&self) -> Self {
        self.neg()
    }
    fn s_conj(&self) -> Self {
        self.conj()
    }
    fn s_zero_like(&self) -> Self {
        BigComplex::zero(self.prec())
    }
    fn s_one_like(&self) -> Self {
        BigComplex::one(self.prec())
    }
    fn pivot_mag(&self) -> f64 {
        let r = crate::bignum::real_to_f64(self.re());
        let i = crate::bignum::real_to_f64(self.im());
        r.abs() + i.abs()
    }
    fn s_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn mag_sq(&self) -> f64 {
        let r = crate::bignum::real_to_f64(self.re());
        let i = crate::bignum::real_to_f64(self.im());
        r * r + i * i
    }
    fn s_scale_f64(&self, x: f64) -> Self {
        self.scale_f64(x)
    }
}

/// Row-major dense matrix.
pub type Mat<S> = Vec<Vec<S>>;

/// LU decomposition P*A = L*U stored compactly.
pub struct Lu<S> {
    pub lu: Mat<S>,
    pub perm: Vec<usize>,
    pub parity: i32,
    /// Column at which elimination hit an exactly-zero pivot, if any.
    pub singular_at: Option<usize>,
}

pub fn lu_factor<S: Scalar>(mut a: Mat<S>) -> Lu<S> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut parity = 1i32;
    let mut singular_at = None;
    for k in 0..n {
        let mut best = k;
        let mut best_mag = a[k][k].pivot_mag();
        for r in (k + 1)..n {
            let m = a[r][k].pivot_mag();
            if m > best_mag {
                best_mag = m;
                best = r;
            }
        }
        if best != k {
            a.swap(k, best);
            perm.swap(k, best);
            parity = -parity;
        }
        if a[k][k].s_is_zero() {
            if singular_at.is_none() {
                singular_at = Some(k);
            }
            continue;
        }
        let pivot = a[k][k].clone();
        for r in (k + 1)..n {
            if a[r][k].s_is_zero() {
                continue;
            }
            let factor = a[r][k].s_div(&pivot);
            for c in (k + 1)..n {
                let t = factor.s_mul(&a[k][c]);
                a[r][c] = a[r][c].s_sub(&t);
            }
            a[r][k] = factor;
        }
    }
    Lu {
        lu: a,
        perm,
        parity,
        singular_at,
    }
}

impl<S: Scalar> Lu<S> {
    pub fn det(&self) -> S {
        let n = self.lu.len();
        if n == 0 {
            panic!("determinant of empty matrix");
        }
        let mut d = self.lu[0][0].s_one_like();
        for k in 0..n {
            d = d.s_mul(&self.lu[k][k]);
        }
        if self.parity < 0 {
            d = d.s_neg();
        }
        d
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.len();
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for k in 0..n {
            for c in 0..k {
                let t = self.lu[k][c].s_mul(&x[c]);
                x[k] = x[k].s_sub(&t);
            }
        }
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                let t = self.lu[k][c].s_mul(&x[c]);
                x[k] = x[k].s_sub(&t);
            }
            x[k] = x[k].s_div(&self.lu[k][k]);
        }
        x
    }

    /// Solve A^H x = b using the factorization of A.
    ///
    /// With P A = L U we have A^H = U^H L^H P, so x = P^T (L^H)^-H-step...
    /// concretely: solve U^H y = b (forward), L^H w = y (backward), then
    /// undo the row permutation.
    pub fn solve_adjoint(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.len();
        let mut y: Vec<S> = b.to_vec();
        // U^H is lower triangular with conjugated diagonal.
        for k in 0..n {
            for c in 0..k {
                let t = self.lu[c][k].s_conj().s_mul(&y[c]);
                y[k] = y[k].s_sub(&t);
            }
            y[k] = y[k].s_div(&self.lu[k][k].s_conj());
        }
        // L^H is upper triangular with unit diagonal.
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                let t = self.lu[c][k].s_conj().s_mul(&y[c]);
                y[k] = y[k].s_sub(&t);
            }
        }
        let mut x = vec![y[0].s_zero_like(); n];
        for k in 0..n {
            x[self.perm[k]] = y[k].clone();
        }
        x
    }
}

pub fn mat_vec<S: Scalar>(a: &Mat<S>, v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| {
            let mut acc = row[0].s_zero_like();
            for (x, y) in row.iter().zip(v.iter()) {
                acc = acc.s_add(&x.s_mul(y));
            }
            acc
        })
        .collect()
}
