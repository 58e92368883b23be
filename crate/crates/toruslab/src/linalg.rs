//! Small dense linear algebra for lattice work: column-major matrices, exact
//! integer transforms, Gram–Schmidt, floating LLL with transform tracking,
//! and Fincke–Pohst style enumeration (shortest vectors and closest points).
//!
//! Everything here targets dimensions up to ~8; clarity and robustness win
//! over asymptotics.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

/// Dense column-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let nc = cols.len();
        let nr = if nc == 0 { 0 } else { cols[0].len() };
        let mut m = Mat::zeros(nr, nc);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nr, "ragged columns");
            m.data[j * nr..(j + 1) * nr].copy_from_slice(c);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.col(j).to_vec()).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            let col = self.col(j);
            let vj = v[j];
            for i in 0..self.rows {
                out[i] += col[i] * vj;
            }
        }
        out
    }

    pub fn matvec_i(&self, v: &[i64]) -> Vec<f64> {
        let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        self.matvec(&vf)
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let v = self.matvec(rhs.col(j));
            out.col_mut(j).copy_from_slice(&v);
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    /// LU decomposition with partial pivoting; returns (lu, perm, sign) or
    /// None if singular to working precision.
    fn lu(&self) -> Option<(Mat, Vec<usize>, f64)> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in (k + 1)..n {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, t);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a.get(k, k);
            for i in (k + 1)..n {
                let f = a.get(i, k) / pivot;
                a.set(i, k, f);
                for j in (k + 1)..n {
                    let v = a.get(i, j) - f * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            None => 0.0,
            Some((lu, _, sign)) => {
                let mut d = sign;
                for i in 0..self.rows {
                    d *= lu.get(i, i);
                }
                d
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[perm[i]];
            for j in 0..i {
                s -= lu.get(i, j) * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= lu.get(i, j) * x[j];
            }
            let d = lu.get(i, i);
            if d == 0.0 {
                return None;
            }
            x[i] = s / d;
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat> {
        let n = self.rows;
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let x = self.solve(&e)?;
            out.col_mut(j).copy_from_slice(&x);
        }
        Some(out)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Dense column-major integer matrix (exact transforms).
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i64>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[i64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn matvec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0i64; self.rows];
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[i] += self.get(i, j) * v[j];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &IMat) -> IMat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = IMat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for i in 0..self.rows {
                let mut s: i128 = 0;
                for k in 0..self.cols {
                    s += self.get(i, k) as i128 * rhs.get(k, j) as i128;
                }
                out.set(i, j, i64::try_from(s).expect("integer transform overflow"));
            }
        }
        out
    }

    pub fn to_mat(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                m.set(i, j, self.get(i, j) as f64);
            }
        }
        m
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det_exact(&self) -> i128 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<i128> = self.data.iter().map(|&v| v as i128).collect();
        let idx = |r: usize, c: usize| c * n + r;
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[idx(k, k)] == 0 {
                let mut p = None;
                for i in (k + 1)..n {
                    if a[idx(i, k)] != 0 {
                        p = Some(i);
                        break;
                    }
                }
                let p = match p {
                    None => return 0,
                    Some(p) => p,
                };
                for j in 0..n {
                    a.swap(idx(k, j), idx(p, j));
                }
                sign = -sign;
            }
            for i in (k + 1)..n {
                for j in (k + 1)..n {
                    let v = a[idx(i, j)] * a[idx(k, k)] - a[idx(i, k)] * a[idx(k, j)];
                    a[idx(i, j)] = v / prev;
                }
                a[idx(i, k)] = 0;
            }
            prev = a[idx(k, k)];
        }
        sign * a[idx(n - 1, n - 1)]
    }

    /// Exact inverse for matrices with determinant +-1.
    pub fn unimodular_inverse(&self) -> Result<IMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let det = self.det_exact();
        if det != 1 && det != -1 {
            return Err(Error::reduction(format!(
                "matrix is not unimodular (det = {det})"
            )));
        }
        let mut inv = IMat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                // cofactor C_ji for the (j, i) entry of the inverse
                let minor = self.minor(j, i);
                let c = minor.det_exact();
                let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                let v = s as i128 * c * det; // det is +-1 so this divides exactly
                inv.set(i, j, i64::try_from(v).expect("inverse overflow"));
            }
        }
        Ok(inv)
    }

    fn minor(&self, row: usize, col: usize) -> IMat {
        let n = self.rows;
        let mut m = IMat::zeros(n - 1, n - 1);
        let mut ci = 0;
        for i in 0..n {
            if i == row {
                continue;
            }
            let mut cj = 0;
            for j in 0..n {
                if j == col {
                    continue;
                }
                m.set(ci, cj, self.get(i, j));
                cj += 1;
            }
            ci += 1;
        }
        m
    }
}

/// Gram–Schmidt data of a list of column vectors.
pub struct Gso {
    pub bstar: Vec<Vec<f64>>,
    /// mu[i][j] = <b_i, b*_j> / |b*_j|^2 for j < i
    pub mu: Vec<Vec<f64>>,
    pub norms2: Vec<f64>,
}

pub fn gram_schmidt(cols: &[Vec<f64>]) -> Gso {
    let n = cols.len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms2 = vec![0.0; n];
    for i in 0..n {
        let mut v = cols[i].clone();
        for j in 0..i {
            let m = if norms2[j] > 0.0 {
                dot(&cols[i], &bstar[j]) / norms2[j]
            } else {
                0.0
            };
            mu[i][j] = m;
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= m * bk;
            }
        }
        norms2[i] = norm2(&v);
        bstar.push(v);
    }
    Gso { bstar, mu, norms2 }
}

/// Floating LLL reduction with delta = 0.99. Returns the reduced basis and the
/// unimodular transform U with `reduced = basis * U`.
pub fn lll_reduce(basis: &Mat) -> Result<(Mat, IMat)> {
    let n = basis.cols;
    let mut cols = basis.columns();
    let mut u = IMat::identity(n);
    let delta = 0.99;
    let mut gso = gram_schmidt(&cols);
    let mut k = 1usize;
    let mut steps = 0u64;
    while k < n {
        steps += 1;
        if steps > 200_000 {
            return Err(Error::reduction("LLL failed to terminate"));
        }
        // size-reduce column k against previous ones
        for j in (0..k).rev() {
            let q = gso.mu[k][j].round();
            if q != 0.0 {
                let qi = q as i64;
                for r in 0..cols[k].len() {
                    let t = q * cols[j][r];
                    cols[k][r] -= t;
                }
                for r in 0..n {
                    let t = qi
                        .checked_mul(u.get(r, j))
                        .expect("LLL transform overflow");
                    u.set(r, k, u.get(r, k) - t);
                }
                gso = gram_schmidt(&cols);
            }
        }
        let lhs = gso.norms2[k];
        let rhs = (delta - gso.mu[k][k - 1] * gso.mu[k][k - 1]) * gso.norms2[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            for r in 0..n {
                let t = u.get(r, k);
                u.set(r, k, u.get(r, k - 1));
                u.set(r, k - 1, t);
            }
            gso = gram_schmidt(&cols);
            k = k.max(2) - 1;
        }
    }
    Ok((Mat::from_columns(&cols), u))
}

/// All nonzero integer coefficient vectors `x` with |basis * x| <= bound.
/// Both sign representatives are returned. Coefficients refer to the columns
/// of `basis`.
pub fn enumerate_short(basis: &Mat, bound: f64) -> Vec<(Vec<i64>, f64)> {
    let cols = basis.columns();
    let n = cols.len();
    if n == 0 {
        return Vec::new();
    }
    let gso = gram_schmidt(&cols);
    let c = bound * bound * (1.0 + 1e-9) + 1e-300;
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    enumerate_rec(&gso, n, c, &mut x, n, 0.0, &mut out);
    out.retain(|(v, _)| v.iter().any(|&a| a != 0));
    // deterministic order
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn enumerate_rec(
    gso: &Gso,
    n: usize,
    c: f64,
    x: &mut Vec<i64>,
    level: usize,
    partial: f64,
    out: &mut Vec<(Vec<i64>, f64)>,
) {
    if level == 0 {
        out.push((x.clone(), partial));
        return;
    }
    let i = level - 1;
    // center_i = sum_{j > i} mu[j][i] * x_j
    let mut center = 0.0;
    for j in (i + 1)..n {
        center += gso.mu[j][i] * x[j] as f64;
    }
    let bi = gso.norms2[i];
    if bi <= 0.0 {
        // degenerate direction: only x_i forced so that the combination stays
        // inside the span; treat as zero contribution
        x[i] = 0;
        enumerate_rec(gso, n, c, x, i, partial, out);
        return;
    }
    let slack = ((c - partial) / bi).max(0.0).sqrt();
    let lo = (-center - slack).ceil() as i64;
    let hi = (-center + slack).floor() as i64;
    for xi in lo..=hi {
        x[i] = xi;
        let t = xi as f64 + center;
        let add = bi * t * t;
        if partial + add <= c {
            enumerate_rec(gso, n, c, x, i, partial + add, out);
        }
    }
    x[i] = 0;
}

/// All integer combinations u minimizing |sum u_i cols_i - target| (ties kept
/// within `tie_tol` of the optimum). Returns (coefficients, squared distance).
pub fn closest_points(cols: &[Vec<f64>], target: &[f64], tie_tol: f64) -> Vec<(Vec<i64>, f64)> {
    let m = cols.len();
    if m == 0 {
        return vec![(Vec::new(), norm2(target))];
    }
    let gso = gram_schmidt(cols);
    // decompose target on the GSO frame
    let mut tau = vec![0.0; m];
    let mut resid = target.to_vec();
    for j in 0..m {
        if gso.norms2[j] > 0.0 {
            tau[j] = dot(target, &gso.bstar[j]) / gso.norms2[j];
        }
    }
    for j in 0..m {
        for (rk, bk) in resid.iter_mut().zip(&gso.bstar[j]) {
            *rk -= tau[j] * bk;
        }
    }
    let perp2 = norm2(&resid);

    // Babai nearest-plane gives the initial radius
    let mut xb = vec![0i64; m];
    let mut proj2 = 0.0;
    for i in (0..m).rev() {
        let mut center = 0.0;
        for j in (i + 1)..m {
            center += gso.mu[j][i] * xb[j] as f64;
        }
        let y = tau[i] - center;
        xb[i] = y.round() as i64;
        let t = xb[i] as f64 - y;
        proj2 += gso.norms2[i] * t * t;
    }
    let mut best = proj2;
    let mut out: Vec<(Vec<i64>, f64)> = Vec::new();
    let cbound = best * (1.0 + 1e-9) + tie_tol;
    let mut x = vec![0i64; m];
    cvp_rec(
        &gso, m, cbound, &tau, &mut x, m, 0.0, &mut best, tie_tol, &mut out,
    );
    out.retain(|(_, d)| *d <= best + tie_tol);
    for e in &mut out {
        e.1 += perp2;
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[allow(clippy::too_many_arguments)]
fn cvp_rec(
    gso: &Gso,
    m: usize,
    cbound: f64,
    tau: &[f64],
    x: &mut Vec<i64>,
    level: usize,
    partial: f64,
    best: &mut f64,
    tie_tol: f64,
    out: &mut Vec<(Vec<i64>, f64)>,
) {
    if level == 0 {
        if partial < *best {
            *best = partial;
        }
        out.push((x.clone(), partial));
        return;
    }
    let i = level - 1;
    let mut center = 0.0;
    for j in (i + 1)..m {
        center += gso.mu[j][i] * x[j] as f64;
    }
    let y = tau[i] - center;
    let bi = gso.norms2[i];
    if bi <= 0.0 {
        x[i] = 0;
        cvp_rec(gso, m, cbound, tau, x, i, partial, best, tie_tol, out);
        return;
    }
    let budget = (cbound.min(*best + tie_tol) - partial).max(0.0);
    let slack = (budget / bi).sqrt();
    let lo = (y - slack).ceil() as i64;
    let hi = (y + slack).floor() as i64;
    for xi in lo..=hi {
        x[i] = xi;
        let t = xi as f64 - y;
        let add = bi * t * t;
        if partial + add <= *best + tie_tol {
            cvp_rec(gso, m, cbound, tau, x, i, partial + add, best, tie_tol, out);
        }
    }
    x[i] = 0;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off < 1e-30 * (1.0 + a.frobenius()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

fn xgcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a.abs(), a.signum(), 0);
    }
    let (g, x1, y1) = xgcd(b, a.rem_euclid(b));
    (g, y1, x1 - (a.div_euclid(b)) * y1)
}

/// Completes a primitive integer vector to a unimodular matrix whose first
/// column equals the vector.
pub fn unimodular_completion(c: &[i64]) -> Result<IMat> {
    let n = c.len();
    let mut v = c.to_vec();
    let mut u = IMat::identity(n);
    // apply inverse elementary operations to u on the right while reducing v
    let pivot = v
        .iter()
        .position(|&a| a != 0)
        .ok_or_else(|| Error::domain("cannot complete the zero vector"))?;
    for j in 0..n {
        if j == pivot || v[j] == 0 {
            continue;
        }
        let a = v[pivot];
        let b = v[j];
        let (g, s, t) = xgcd(a, b);
        // op on coordinates (pivot, j): [[s, t], [-b/g, a/g]] has det 1
        let (ag, bg) = (a / g, b / g);
        v[pivot] = g;
        v[j] = 0;
        // u <- u * E^{-1}, E^{-1} = [[a/g, -t], [b/g, s]]
        for r in 0..n {
            let up = u.get(r, pivot);
            let uj = u.get(r, j);
            u.set(r, pivot, ag * up + bg * uj);
            u.set(r, j, -t * up + s * uj);
        }
    }
    if v[pivot].abs() != 1 {
        return Err(Error::domain("vector is not primitive"));
    }
    if v[pivot] == -1 {
        for r in 0..n {
            let t = u.get(r, pivot);
            u.set(r, pivot, -t);
        }
    }
    if pivot != 0 {
        for r in 0..n {
            let t = u.get(r, 0);
            u.set(r, 0, u.get(r, pivot));
            u.set(r, pivot, t);
        }
    }
    debug_assert_eq!(u.col(0), c);
    Ok(u)
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &a| {
        let mut x = g.abs();
        let mut y = a.abs();
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x
    })
}
