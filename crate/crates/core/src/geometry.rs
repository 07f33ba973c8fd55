//! The weighted projection geometry behind the correction factors: the
//! matrices `Z = X (X'WX)^-1 X'` and `Z2 = X2 (X2'WX2)^-1 X2'`, their
//! Hadamard powers, the auxiliary regression of the tested columns on the
//! nuisance block, and the lambda-based diagonal vectors built from the
//! link and variance derivative chains.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{Mat, Qr};
use crate::link::Link;
use crate::scalar::Scalar;

/// Projection bundle evaluated at one weight vector.
///
/// Hadamard powers are computed on first use and cached; the bundle is
/// immutable afterwards, so concurrent readers are fine.
#[derive(Debug)]
pub struct ZBundle<T> {
    n: usize,
    p: usize,
    q: usize,
    z: Mat<T>,
    z2: Mat<T>,
    /// `Z - Z2`.
    dz: Mat<T>,
    /// `X1 - X2 A`, the weighted residual of the tested columns.
    r: Mat<T>,
    /// Coefficients of the weighted regression of `X1` on `X2`.
    a: Mat<T>,
    zd: Vec<T>,
    z2d: Vec<T>,
    dzd: Vec<T>,
    z_h2: OnceLock<Mat<T>>,
    z_h3: OnceLock<Mat<T>>,
    z2_h2: OnceLock<Mat<T>>,
    z2_h3: OnceLock<Mat<T>>,
    dz_h2: OnceLock<Mat<T>>,
    dz_h3: OnceLock<Mat<T>>,
}

impl<T: Scalar> ZBundle<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn z(&self) -> &Mat<T> {
        &self.z
    }

    pub fn z2(&self) -> &Mat<T> {
        &self.z2
    }

    /// `Z - Z2`.
    pub fn dz(&self) -> &Mat<T> {
        &self.dz
    }

    pub fn r(&self) -> &Mat<T> {
        &self.r
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }

    /// Diagonal of `Z`.
    pub fn zd(&self) -> &[T] {
        &self.zd
    }

    /// Diagonal of `Z2`.
    pub fn z2d(&self) -> &[T] {
        &self.z2d
    }

    /// Diagonal of `Z - Z2`.
    pub fn dzd(&self) -> &[T] {
        &self.dzd
    }

    pub fn z_had2(&self) -> &Mat<T> {
        self.z_h2.get_or_init(|| self.z.hadamard(&self.z))
    }

    pub fn z_had3(&self) -> &Mat<T> {
        self.z_h3.get_or_init(|| self.z_had2().hadamard(&self.z))
    }

    pub fn z2_had2(&self) -> &Mat<T> {
        self.z2_h2.get_or_init(|| self.z2.hadamard(&self.z2))
    }

    pub fn z2_had3(&self) -> &Mat<T> {
        self.z2_h3.get_or_init(|| self.z2_had2().hadamard(&self.z2))
    }

    pub fn dz_had2(&self) -> &Mat<T> {
        self.dz_h2.get_or_init(|| self.dz.hadamard(&self.dz))
    }

    pub fn dz_had3(&self) -> &Mat<T> {
        self.dz_h3.get_or_init(|| self.dz_had2().hadamard(&self.dz))
    }
}

/// Build the projection bundle for the column partition induced by
/// `tested`, at weights `w`.
///
/// When every column is tested (`q = p`) the nuisance projection `Z2` is the
/// zero matrix and the auxiliary regression is empty.
pub fn build_zbundle<T: Scalar>(x: &Mat<T>, tested: &[usize], w: &[T]) -> Result<ZBundle<T>> {
    let n = x.rows();
    let p = x.cols();
    let q = tested.len();
    if w.len() != n {
        return Err(Error::Domain(format!(
            "{} weights for {n} observations",
            w.len()
        )));
    }
    if w.iter().any(|&wl| !(wl > T::zero())) {
        return Err(Error::Domain("weights must be strictly positive".into()));
    }
    let nuisance: Vec<usize> = (0..p).filter(|j| !tested.contains(j)).collect();
    if nuisance.len() + q != p {
        return Err(Error::Domain("tested indices out of range or repeated".into()));
    }

    let sw: Vec<T> = w.iter().map(|&v| v.sqrt()).collect();
    let x1 = x.select_cols(tested);
    let x2 = x.select_cols(&nuisance);

    let z = weighted_projection(x, &sw)?;
    let (z2, a, r) = if nuisance.is_empty() {
        (Mat::zeros(n, n), Mat::zeros(0, q), x1.clone())
    } else {
        let z2 = weighted_projection(&x2, &sw)?;
        let qr2 = Qr::new(&x2.scale_rows(&sw));
        let a = qr2
            .solve_mat(&x1.scale_rows(&sw))
            .map_err(|_| Error::Singular("X2' W X2 is singular".into()))?;
        let r = x1.sub(&x2.matmul(&a));
        (z2, a, r)
    };

    let dz = z.sub(&z2);
    let zd = z.diag();
    let z2d = z2.diag();
    let dzd = dz.diag();
    Ok(ZBundle {
        n,
        p,
        q,
        z,
        z2,
        dz,
        r,
        a,
        zd,
        z2d,
        dzd,
        z_h2: OnceLock::new(),
        z_h3: OnceLock::new(),
        z2_h2: OnceLock::new(),
        z2_h3: OnceLock::new(),
        dz_h2: OnceLock::new(),
        dz_h3: OnceLock::new(),
    })
}

/// `M (M'M)^-1 M'` for `M = W^(1/2) X`, computed from the thin orthogonal
/// factor and rescaled back: `Z = W^(-1/2) Q Q' W^(-1/2)`.
fn weighted_projection<T: Scalar>(x: &Mat<T>, sw: &[T]) -> Result<Mat<T>> {
    let qr = Qr::new(&x.scale_rows(sw));
    if !qr.is_full_rank() {
        return Err(Error::Singular("weighted design is rank deficient".into()));
    }
    let q = qr.thin_q();
    let n = x.rows();
    let k = x.cols();
    Ok(Mat::from_fn(n, n, |l, c| {
        let mut s = T::zero();
        for m in 0..k {
            s += q.get(l, m) * q.get(c, m);
        }
        s / (sw[l] * sw[c])
    }))
}

/// The diagonal vectors of the correction-factor algebra. All eleven are
/// per-observation scalars built from the variance function and the first
/// three derivatives of the inverse link.
#[derive(Debug, Clone)]
pub struct LambdaDiagonals<T> {
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub lambda1: Vec<T>,
    pub lambda2: Vec<T>,
    pub lambda3: Vec<T>,
    pub lambda4: Vec<T>,
    pub lambda5: Vec<T>,
    pub t: Vec<T>,
    pub d: Vec<T>,
    pub e: Vec<T>,
    pub b: Vec<T>,
    pub h: Vec<T>,
    pub m: Vec<T>,
}

impl<T: Scalar> LambdaDiagonals<T> {
    /// `f + g` elementwise.
    pub fn f_plus_g(&self) -> Vec<T> {
        self.f.iter().zip(&self.g).map(|(&a, &b)| a + b).collect()
    }

    /// `f + 2g` elementwise.
    pub fn f_plus_2g(&self) -> Vec<T> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(&a, &b)| a + T::real(2.0) * b)
            .collect()
    }

    /// `f - g` elementwise.
    pub fn f_minus_g(&self) -> Vec<T> {
        self.f.iter().zip(&self.g).map(|(&a, &b)| a - b).collect()
    }
}

/// Evaluate the lambda diagonals at a linear predictor.
pub fn lambda_diagonals<T: Scalar>(
    family: Family,
    link: Link,
    eta: &[T],
) -> Result<LambdaDiagonals<T>> {
    let n = eta.len();
    let mut out = LambdaDiagonals {
        f: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        lambda1: Vec::with_capacity(n),
        lambda2: Vec::with_capacity(n),
        lambda3: Vec::with_capacity(n),
        lambda4: Vec::with_capacity(n),
        lambda5: Vec::with_capacity(n),
        t: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
    };
    for (l, &e) in eta.iter().enumerate() {
        let c = link
            .chain(e)
            .map_err(|err| Error::Domain(format!("observation {}: {err}", l + 1)))?;
        if !family.valid_mean(c.mu) {
            return Err(Error::Domain(format!(
                "observation {}: mean {} outside the {} domain",
                l + 1,
                c.mu,
                family.name()
            )));
        }
        let (v, dv, d2v) = family.variance(c.mu)?;
        let v2 = v * v;
        let d1sq = c.d1.sq();

        let f = c.d1 * c.d2 / v;
        let g = f - dv * c.d1 * d1sq / v2;
        let l1 = dv * d1sq * c.d2 / v2;
        let l2 = c.d2.sq() / v;
        let l3 = c.d1 * c.d3 / v;
        let l4 = dv.sq() * d1sq.sq() / (v2 * v);
        let l5 = d2v * d1sq.sq() / v2;

        let c2 = T::real(2.0);
        let c3 = T::real(3.0);
        let c4 = T::real(4.0);
        out.f.push(f);
        out.g.push(g);
        out.lambda1.push(l1);
        out.lambda2.push(l2);
        out.lambda3.push(l3);
        out.lambda4.push(l4);
        out.lambda5.push(l5);
        out.t
            .push(-T::real(9.0) * l1 + c3 * l2 + c3 * l3 + c4 * l4 - c2 * l5);
        out.d
            .push(-T::real(5.0) * l1 + c2 * l2 + c2 * l3 + c2 * l4 - l5);
        out.e
            .push(-T::real(12.0) * l1 + c3 * l2 + c4 * l3 + T::real(6.0) * l4 - c3 * l5);
        out.b.push(l3 + l4);
        out.h.push(l1 + l5);
        out.m.push(-c4 * l1 + l2 + c2 * l4 - l5);
    }
    Ok(out)
}
