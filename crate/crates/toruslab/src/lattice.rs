//! The space of unimodular lattices: shear and diagonal-flow matrices, the
//! lattice L(N, alpha) encoding a translation vector, the greedy short
//! reduced basis e_1..e_n, primitive-vector enumeration, resonant-harmonic
//! extraction and approximate Haar sampling.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    closest_points, dot, enumerate_short, gcd_slice, gram_schmidt, lll_reduce, norm,
    unimodular_completion, IMat, Mat,
};
use crate::rng::{sample_rng, uniform_torus};

/// A lattice in R^n of covolume 1, described by the columns of `basis`.
#[derive(Clone, Debug)]
pub struct UnimodularLattice {
    n: usize,
    basis: Mat,
}

impl UnimodularLattice {
    /// Builds a lattice from a basis matrix, rescaling so |det| = 1.
    pub fn new(basis: Mat) -> Result<Self> {
        let n = basis.rows;
        if n == 0 || basis.cols != n {
            return Err(Error::validation("basis must be square"));
        }
        let det = basis.det().abs();
        if !det.is_finite() || det < 1e-300 {
            return Err(Error::validation("basis is singular"));
        }
        let scale = det.powf(-1.0 / n as f64);
        let basis = basis.scale(scale);
        Ok(UnimodularLattice { n, basis })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Lattice vector with the given integer coordinates.
    pub fn vector(&self, coords: &[i64]) -> Vec<f64> {
        self.basis.matvec_i(coords)
    }

    /// Row-major nested arrays (the JSON wire format).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.basis.get(i, j)).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("row-major matrix must be square"));
        }
        let mut m = Mat::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        UnimodularLattice::new(m)
    }
}

/// The unipotent shear with last row (alpha_1, ..., alpha_d, 1).
pub fn shear(alpha: &[f64]) -> Mat {
    let n = alpha.len() + 1;
    let mut m = Mat::identity(n);
    for (j, &a) in alpha.iter().enumerate() {
        m.set(n - 1, j, a);
    }
    m
}

/// The diagonal flow diag(e^{-T/d}, ..., e^{-T/d}, e^T) on dimension d + 1.
pub fn diagonal_flow(t: f64, dim: usize) -> Result<Mat> {
    if dim < 2 {
        return Err(Error::validation("diagonal flow needs dimension >= 2"));
    }
    let d = (dim - 1) as f64;
    let mut m = Mat::identity(dim);
    let contr = (-t / d).exp();
    for i in 0..dim - 1 {
        m.set(i, i, contr);
    }
    m.set(dim - 1, dim - 1, t.exp());
    Ok(m)
}

/// L(N, alpha) = g_{ln N} Lambda_alpha Z^{d+1}.
pub fn dani_lattice(n_steps: u64, alpha: &[f64]) -> Result<UnimodularLattice> {
    if n_steps < 1 {
        return Err(Error::validation("N must be at least 1"));
    }
    let dim = alpha.len() + 1;
    let g = diagonal_flow((n_steps as f64).ln(), dim)?;
    let basis = g.matmul(&shear(alpha));
    UnimodularLattice::new(basis)
}

// ---------------------------------------------------------------------------
// Greedy reduced basis
// ---------------------------------------------------------------------------

/// The greedy short basis: e_1 is a shortest nonzero vector; e_i minimizes the
/// full length among lattice vectors whose projection to the orthocomplement
/// of span(e_1..e_{i-1}) is nonzero and shortest. The integer matrix `coeffs`
/// expresses each e_i in the input basis (column i) and has determinant +-1.
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    pub vectors: Vec<Vec<f64>>,
    pub coeffs: IMat,
}

impl ReducedBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

const TIE_TOL: f64 = 1e-9;

fn canonical_sign(v: &[f64]) -> f64 {
    let scale = norm(v);
    for &c in v {
        if c.abs() > TIE_TOL * scale {
            return if c > 0.0 { 1.0 } else { -1.0 };
        }
    }
    1.0
}

/// Lexicographic comparison with tolerance; `true` when a > b.
fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    let scale = norm(a).max(norm(b)).max(1.0);
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > TIE_TOL * scale {
            return x > y;
        }
    }
    false
}

struct Candidate {
    proj2: f64,
    full2: f64,
    vec: Vec<f64>,
    coeffs_work: Vec<i64>,
}

fn better(a: &Candidate, b: &Candidate, scale2: f64) -> bool {
    let t = TIE_TOL * scale2.max(1e-30);
    if a.proj2 < b.proj2 - t {
        return true;
    }
    if a.proj2 > b.proj2 + t {
        return false;
    }
    if a.full2 < b.full2 - t {
        return true;
    }
    if a.full2 > b.full2 + t {
        return false;
    }
    lex_greater(&a.vec, &b.vec)
}

/// Computes the greedy reduced basis with enumeration certificates. Errors on
/// degenerate or hopelessly ill-conditioned bases.
pub fn reduced_basis(lat: &UnimodularLattice) -> Result<ReducedBasis> {
    let n = lat.n;
    let inv = lat
        .basis
        .inverse()
        .ok_or_else(|| Error::reduction("basis not invertible"))?;
    if lat.basis.frobenius() * inv.frobenius() > 1e12 {
        return Err(Error::reduction("basis condition number exceeds 1e12"));
    }
    let (work0, u0) = lll_reduce(&lat.basis)?;
    let mut work = work0.columns();
    let mut trans = u0;

    for i in 0..n {
        let chosen = if i == 0 {
            let bound = work.iter().map(|c| norm(c)).fold(f64::INFINITY, f64::min);
            let cands = enumerate_short(&Mat::from_columns(&work), bound * (1.0 + 1e-9));
            if cands.is_empty() {
                return Err(Error::reduction("no short vectors found"));
            }
            let min2 = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let mut best: Option<Candidate> = None;
            for (coef, n2) in cands {
                if n2 > min2 * (1.0 + TIE_TOL) + TIE_TOL * min2.max(1e-30) {
                    continue;
                }
                let mut v = mat_comb(&work, &coef, 0);
                let s = canonical_sign(&v);
                let coef: Vec<i64> = coef.iter().map(|&c| (s as i64) * c).collect();
                for x in &mut v {
                    *x *= s;
                }
                let cand = Candidate {
                    proj2: n2,
                    full2: n2,
                    vec: v,
                    coeffs_work: coef,
                };
                if best.as_ref().map_or(true, |b| better(&cand, b, min2)) {
                    best = Some(cand);
                }
            }
            best.unwrap()
        } else {
            // orthonormal frame of span(e_1..e_{i-1})
            let gso = gram_schmidt(&work[..i].to_vec());
            let frame: Vec<Vec<f64>> = gso
                .bstar
                .iter()
                .zip(&gso.norms2)
                .map(|(b, &n2)| b.iter().map(|x| x / n2.sqrt()).collect())
                .collect();
            let project = |v: &[f64]| -> Vec<f64> {
                let mut p = v.to_vec();
                for f in &frame {
                    let c = dot(&p, f);
                    for (pk, fk) in p.iter_mut().zip(f) {
                        *pk -= c * fk;
                    }
                }
                p
            };
            let proj_cols: Vec<Vec<f64>> = work[i..].iter().map(|w| project(w)).collect();
            let (proj_red, uq) = lll_reduce(&Mat::from_columns(&proj_cols))?;
            let bound = (0..proj_red.cols)
                .map(|j| norm(proj_red.col(j)))
                .fold(f64::INFINITY, f64::min);
            let cands = enumerate_short(&proj_red, bound * (1.0 + 1e-9));
            let min2 = cands
                .iter()
                .map(|c| c.1)
                .filter(|&v| v > 1e-18)
                .fold(f64::INFINITY, f64::min);
            if !min2.is_finite() {
                return Err(Error::reduction("projected lattice degenerate"));
            }
            let mut best: Option<Candidate> = None;
            for (cq, p2) in cands {
                if p2 <= 1e-18 || p2 > min2 * (1.0 + TIE_TOL) + TIE_TOL * min2.max(1e-30) {
                    continue;
                }
                // coefficients on work[i..]
                let cw = uq.matvec(&cq);
                let v0 = mat_comb(&work, &cw, i);
                let target: Vec<f64> = v0.iter().map(|x| -x).collect();
                let sols = closest_points(&work[..i].to_vec(), &target, TIE_TOL);
                let best_full = sols.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                for (tcoef, full2) in sols {
                    if full2 > best_full + TIE_TOL * best_full.max(1.0) {
                        continue;
                    }
                    let mut v = v0.clone();
                    for (j, &tj) in tcoef.iter().enumerate() {
                        for (vk, wk) in v.iter_mut().zip(&work[j]) {
                            *vk += tj as f64 * wk;
                        }
                    }
                    let s = canonical_sign(&v);
                    let mut coeffs_work = vec![0i64; n];
                    for (j, &tj) in tcoef.iter().enumerate() {
                        coeffs_work[j] = tj;
                    }
                    for (j, &cj) in cw.iter().enumerate() {
                        coeffs_work[i + j] = cj;
                    }
                    if s < 0.0 {
                        for c in &mut coeffs_work {
                            *c = -*c;
                        }
                        for x in &mut v {
                            *x = -*x;
                        }
                    }
                    let cand = Candidate {
                        proj2: p2,
                        full2,
                        vec: v,
                        coeffs_work,
                    };
                    if best.as_ref().map_or(true, |b| better(&cand, b, min2)) {
                        best = Some(cand);
                    }
                }
            }
            best.ok_or_else(|| Error::reduction("no admissible vector at step"))?
        };

        // install `chosen` as working column i while keeping the basis property
        let quotient_part = chosen.coeffs_work[i..].to_vec();
        if gcd_slice(&quotient_part) != 1 {
            return Err(Error::reduction("chosen vector not primitive in quotient"));
        }
        let tq = unimodular_completion(&quotient_part)?;
        let m = n - i;
        // work[i..] <- work[i..] * tq, same for transform columns
        let old_cols: Vec<Vec<f64>> = work[i..].to_vec();
        for a in 0..m {
            let mut nc = vec![0.0; n];
            for b in 0..m {
                let f = tq.get(b, a) as f64;
                if f != 0.0 {
                    for (x, y) in nc.iter_mut().zip(&old_cols[b]) {
                        *x += f * y;
                    }
                }
            }
            work[i + a] = nc;
        }
        let old_t: Vec<Vec<i64>> = (i..n).map(|c| trans.col(c).to_vec()).collect();
        for a in 0..m {
            for r in 0..n {
                let mut s: i128 = 0;
                for (b, col) in old_t.iter().enumerate() {
                    s += tq.get(b, a) as i128 * col[r] as i128;
                }
                trans.set(r, i + a, i64::try_from(s).expect("transform overflow"));
            }
        }
        // add the e_1..e_{i-1} part
        for j in 0..i {
            let tj = chosen.coeffs_work[j];
            if tj != 0 {
                for r in 0..n {
                    let add = tj as f64 * work[j][r];
                    work[i][r] += add;
                }
                for r in 0..n {
                    let v = trans.get(r, i) + tj * trans.get(r, j);
                    trans.set(r, i, v);
                }
            }
        }
        if dot(&work[i], &chosen.vec) < 0.0 {
            for r in 0..n {
                let v = work[i][r];
                work[i][r] = -v;
                trans.set(r, i, -trans.get(r, i));
            }
        }
    }

    let det = trans.det_exact();
    if det != 1 && det != -1 {
        return Err(Error::reduction(format!(
            "transform not unimodular (det = {det})"
        )));
    }
    // recompute the vectors from the input basis for float consistency
    let vectors: Vec<Vec<f64>> = (0..n).map(|i| lat.basis.matvec_i(trans.col(i))).collect();
    Ok(ReducedBasis {
        vectors,
        coeffs: trans,
    })
}

fn mat_comb(cols: &[Vec<f64>], coef: &[i64], offset: usize) -> Vec<f64> {
    let n = cols[0].len();
    let mut v = vec![0.0; n];
    for (j, &c) in coef.iter().enumerate() {
        if c != 0 {
            for (vk, wk) in v.iter_mut().zip(&cols[offset + j]) {
                *vk += c as f64 * wk;
            }
        }
    }
    v
}

/// Independent re-certification of a reduced basis by enumeration: e_1 is a
/// shortest vector, each e_i has the shortest nonzero projection and minimal
/// full length in its projection class, and the coefficients are unimodular.
pub fn certify_reduced_basis(lat: &UnimodularLattice, rb: &ReducedBasis) -> Result<()> {
    let n = lat.n;
    let det = rb.coeffs.det_exact();
    if det != 1 && det != -1 {
        return Err(Error::reduction(format!("coeffs det = {det}")));
    }
    for i in 0..n {
        let recon = lat.basis.matvec_i(rb.coeffs.col(i));
        let diff: Vec<f64> = recon
            .iter()
            .zip(&rb.vectors[i])
            .map(|(a, b)| a - b)
            .collect();
        if norm(&diff) > 1e-9 * (1.0 + norm(&rb.vectors[i])) {
            return Err(Error::reduction("coefficients do not reproduce vectors"));
        }
    }
    let (red, _) = lll_reduce(&lat.basis)?;
    let e1n = norm(&rb.vectors[0]);
    for (_, n2) in enumerate_short(&red, e1n * (1.0 + 1e-9)) {
        if n2.sqrt() < e1n - 1e-9 {
            return Err(Error::reduction("found vector shorter than e_1"));
        }
    }
    for i in 1..n {
        let gso = gram_schmidt(&rb.vectors[..i].to_vec());
        let frame: Vec<Vec<f64>> = gso
            .bstar
            .iter()
            .zip(&gso.norms2)
            .map(|(b, &n2)| b.iter().map(|x| x / n2.sqrt()).collect())
            .collect();
        let project = |v: &[f64]| -> Vec<f64> {
            let mut p = v.to_vec();
            for f in &frame {
                let c = dot(&p, f);
                for (pk, fk) in p.iter_mut().zip(f) {
                    *pk -= c * fk;
                }
            }
            p
        };
        let pi = norm(&project(&rb.vectors[i]));
        let proj_cols: Vec<Vec<f64>> = rb.vectors[i..].iter().map(|w| project(w)).collect();
        let (proj_red, uq) = lll_reduce(&Mat::from_columns(&proj_cols))?;
        for (cq, p2) in enumerate_short(&proj_red, pi * (1.0 + 1e-9)) {
            if p2 > 1e-18 && p2.sqrt() < pi - 1e-9 {
                return Err(Error::reduction(format!(
                    "shorter projection than e_{} exists",
                    i + 1
                )));
            }
            // same projection class: check no shorter lift than |e_i|
            if p2 > 1e-18 && (p2.sqrt() - pi).abs() <= 1e-9 {
                let cw = uq.matvec(&cq);
                let v0 = mat_comb(&rb.vectors, &cw, i);
                let target: Vec<f64> = v0.iter().map(|x| -x).collect();
                let sols = closest_points(&rb.vectors[..i].to_vec(), &target, TIE_TOL);
                for (_, full2) in sols {
                    if full2.sqrt() < norm(&rb.vectors[i]) - 1e-9 {
                        return Err(Error::reduction(format!(
                            "shorter lift than e_{} exists",
                            i + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Primitive vectors and lattice points
// ---------------------------------------------------------------------------

/// A primitive integer vector: coprime entries, first nonzero entry positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PrimitiveVector {
    pub m: Vec<i64>,
}

impl PrimitiveVector {
    /// Canonicalizes an arbitrary nonzero integer vector: divides by the gcd
    /// and fixes the sign. Returns the multiplicity that was factored out.
    pub fn from_vector(v: &[i64]) -> Result<(Self, u32)> {
        let g = gcd_slice(v);
        if g == 0 {
            return Err(Error::domain("zero vector is not primitive"));
        }
        let mut m: Vec<i64> = v.iter().map(|&c| c / g).collect();
        if m.iter().find(|&&c| c != 0).copied().unwrap_or(1) < 0 {
            for c in &mut m {
                *c = -*c;
            }
        }
        Ok((PrimitiveVector { m }, g as u32))
    }
}

/// All primitive vectors of Z^n with sup-norm at most `max_norm`, in a fixed
/// deterministic (lexicographic) order. One representative per +-pair.
pub fn primitive_vectors(n: usize, max_norm: i64) -> Vec<PrimitiveVector> {
    assert!(n >= 1);
    assert!(max_norm >= 0);
    let mut out = Vec::new();
    if max_norm == 0 {
        return out;
    }
    let mut m = vec![-max_norm; n];
    loop {
        let first_nonzero = m.iter().find(|&&c| c != 0);
        if let Some(&f) = first_nonzero {
            if f > 0 && gcd_slice(&m) == 1 {
                out.push(PrimitiveVector { m: m.clone() });
            }
        }
        // odometer increment
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if m[i] < max_norm {
                m[i] += 1;
                for c in m.iter_mut().skip(i + 1) {
                    *c = -max_norm;
                }
                break;
            }
        }
    }
}

/// Splits the lattice vector sum m_i e_i into its first n-1 coordinates X,
/// last coordinate Z, and R = |X|.
pub fn lattice_point_of(m: &[i64], rb: &ReducedBasis) -> (Vec<f64>, f64, f64) {
    let n = rb.dim();
    assert_eq!(m.len(), n);
    let mut v = vec![0.0; n];
    for (j, &c) in m.iter().enumerate() {
        if c != 0 {
            for (vk, ek) in v.iter_mut().zip(&rb.vectors[j]) {
                *vk += c as f64 * ek;
            }
        }
    }
    let z = v[n - 1];
    v.truncate(n - 1);
    let r = norm(&v);
    (v, z, r)
}

// ---------------------------------------------------------------------------
// Resonant harmonics
// ---------------------------------------------------------------------------

/// A resonant Fourier harmonic of L(N, alpha): the frequency k with its
/// completing integer k_last, the primitive coefficient vector m of the
/// corresponding lattice vector in the reduced basis (multiplicity factored
/// out), and the cusp coordinates (X, Z, R) of the full vector.
#[derive(Clone, Debug)]
pub struct ResonantHarmonic {
    pub k: Vec<i64>,
    pub k_last: i64,
    pub m: Vec<i64>,
    pub multiplicity: u32,
    pub x: Vec<f64>,
    pub z: f64,
    pub r: f64,
}

/// Output of [`resonant_set`]: the harmonics plus the reduced basis they are
/// expressed in.
#[derive(Clone, Debug)]
pub struct ResonantSet {
    pub n_steps: u64,
    pub alpha: Vec<f64>,
    pub eps: f64,
    pub harmonics: Vec<ResonantHarmonic>,
    pub reduced: ReducedBasis,
}

impl ResonantSet {
    /// CSV dump with columns k..., k_last, m..., X..., Z, R.
    pub fn to_csv(&self) -> String {
        let d = self.alpha.len();
        let mut header = Vec::new();
        for i in 1..=d {
            header.push(format!("k{i}"));
        }
        header.push("k_last".into());
        for i in 1..=d + 1 {
            header.push(format!("m{i}"));
        }
        for i in 1..=d {
            header.push(format!("x{i}"));
        }
        header.push("z".into());
        header.push("r".into());
        let mut out = header.join(",");
        out.push('\n');
        for h in &self.harmonics {
            let mut row: Vec<String> = h.k.iter().map(|v| v.to_string()).collect();
            row.push(h.k_last.to_string());
            row.extend(h.m.iter().map(|v| v.to_string()));
            row.extend(h.x.iter().map(|v| v.to_string()));
            row.push(h.z.to_string());
            row.push(h.r.to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// The completing integer: the unique k_last with -1/2 < (k, alpha) + k_last <= 1/2.
pub fn canonical_k_last(k_dot_alpha: f64) -> i64 {
    -((k_dot_alpha - 0.5).ceil()) as i64
}

/// Window and resonance predicate of the resonant set, shared between the
/// lattice-coordinate enumeration and the brute-force scan so the two agree
/// bit for bit. Returns (k_last, X, Z, R) when k qualifies.
pub fn resonance_check(
    n_steps: u64,
    eps: f64,
    alpha: &[f64],
    k: &[i64],
) -> Option<(i64, Vec<f64>, f64, f64)> {
    let d = alpha.len();
    let nf = n_steps as f64;
    let df = d as f64;
    let k2: f64 = k.iter().map(|&v| (v as f64) * (v as f64)).sum();
    if k2 == 0.0 {
        return None;
    }
    let kmin2 = eps.powf((df + 4.0) / (df - 1.0)) * nf.powf(2.0 / df);
    let kmax2 = nf.powf(2.0 / df) / eps;
    if !(k2 > kmin2 && k2 < kmax2) {
        return None;
    }
    let kdota = k
        .iter()
        .zip(alpha)
        .map(|(&ki, &ai)| ki as f64 * ai)
        .sum::<f64>();
    let k_last = canonical_k_last(kdota);
    let frac = kdota + k_last as f64;
    let lhs = k2.powf((df + 1.0) / 4.0) * frac.abs();
    let rhs = eps.powf(-df / 4.0) * nf.powf(-(df - 1.0) / (2.0 * df));
    if !(lhs < rhs) {
        return None;
    }
    let ninv = nf.powf(-1.0 / df);
    let x: Vec<f64> = k.iter().map(|&ki| ki as f64 * ninv).collect();
    let z = nf * frac;
    let r = k2.sqrt() * ninv;
    Some((k_last, x, z, r))
}

/// Enumerates the resonant set of L(N, alpha) in lattice coordinates: short
/// vectors of an anisotropically rescaled copy of the lattice propose
/// candidate frequencies, and the shared predicate decides membership. Every
/// harmonic is returned with its (X, Z, R) image and its primitive coefficient
/// vector in the reduced basis.
pub fn resonant_set(n_steps: u64, alpha: &[f64], eps: f64) -> Result<ResonantSet> {
    let d = alpha.len();
    if d < 2 {
        return Err(Error::domain("resonant set needs d >= 2"));
    }
    if n_steps < 2 {
        return Err(Error::domain("resonant set needs N >= 2"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1)"));
    }
    let df = d as f64;
    let lat = dani_lattice(n_steps, alpha)?;
    let reduced = reduced_basis(&lat)?;
    let cinv = reduced.coeffs.unimodular_inverse()?;

    // cusp box in (X, Z) coordinates
    let rmax = (1.0 / eps).sqrt();
    let rmin2 = eps.powf((df + 4.0) / (df - 1.0));
    let zmax = eps.powf(-df / 4.0) / rmin2.powf((df + 1.0) / 4.0);
    let squeeze = rmax / zmax;
    let n = d + 1;
    let mut scaled = lat.basis.clone();
    for j in 0..n {
        let v = scaled.get(n - 1, j) * squeeze;
        scaled.set(n - 1, j, v);
    }
    let (scaled_red, u) = lll_reduce(&scaled)?;
    let bound = (2.0f64).sqrt() * rmax * (1.0 + 1e-9);
    let mut harmonics = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (coef, _) in enumerate_short(&scaled_red, bound) {
        let kvec = u.matvec(&coef);
        let k = &kvec[..d];
        if !seen.insert(k.to_vec()) {
            continue;
        }
        if let Some((k_last, x, z, r)) = resonance_check(n_steps, eps, alpha, k) {
            let mut full = k.to_vec();
            full.push(k_last);
            let mcoef = cinv.matvec(&full);
            let (prim, mult) = PrimitiveVector::from_vector(&mcoef)?;
            harmonics.push(ResonantHarmonic {
                k: k.to_vec(),
                k_last,
                m: prim.m,
                multiplicity: mult,
                x,
                z,
                r,
            });
        }
    }
    harmonics.sort_by(|a, b| a.k.cmp(&b.k));
    // definition recheck: the basis-change must reproduce the vector. The
    // basis product cancels from ~N |k| down to O(1), so the tolerance must
    // follow the cancellation scale, not the result.
    for h in &harmonics {
        let mut full = h.k.clone();
        full.push(h.k_last);
        let via_k = lat.basis.matvec_i(&full);
        let mcoef: Vec<i64> = h.m.iter().map(|&c| c * h.multiplicity as i64).collect();
        // sign of the primitive representative may be flipped
        let via_m = reduced_comb(&reduced, &mcoef);
        let dp: Vec<f64> = via_k.iter().zip(&via_m).map(|(a, b)| a - b).collect();
        let dm: Vec<f64> = via_k.iter().zip(&via_m).map(|(a, b)| a + b).collect();
        let kmax = full.iter().map(|c| c.abs()).max().unwrap_or(0) as f64;
        let tol = 1e-9 * (1.0 + norm(&via_k)) + 1e-14 * n_steps as f64 * (1.0 + kmax);
        if norm(&dp).min(norm(&dm)) > tol {
            return Err(Error::reduction("resonant coefficient mismatch"));
        }
    }
    Ok(ResonantSet {
        n_steps,
        alpha: alpha.to_vec(),
        eps,
        harmonics,
        reduced,
    })
}

fn reduced_comb(rb: &ReducedBasis, m: &[i64]) -> Vec<f64> {
    let n = rb.dim();
    let mut v = vec![0.0; n];
    for (j, &c) in m.iter().enumerate() {
        if c != 0 {
            for (vk, ek) in v.iter_mut().zip(&rb.vectors[j]) {
                *vk += c as f64 * ek;
            }
        }
    }
    v
}

/// Brute-force scan over the full frequency window (the oracle for
/// [`resonant_set`]); returns the qualifying k sorted lexicographically.
pub fn resonant_set_scan(n_steps: u64, alpha: &[f64], eps: f64) -> Result<Vec<Vec<i64>>> {
    let d = alpha.len();
    if d < 2 || n_steps < 2 || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("bad scan parameters"));
    }
    let nf = n_steps as f64;
    let kmax = (nf.powf(2.0 / d as f64) / eps).sqrt().floor() as i64 + 1;
    let mut out = Vec::new();
    let mut k = vec![-kmax; d];
    loop {
        if resonance_check(n_steps, eps, alpha, &k).is_some() {
            out.push(k.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            if k[i] < kmax {
                k[i] += 1;
                for c in k.iter_mut().skip(i + 1) {
                    *c = -kmax;
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Haar sampling and equidistribution
// ---------------------------------------------------------------------------

/// Sampling method for the (approximate) Haar measure.
#[derive(Clone, Copy, Debug)]
pub enum HaarMethod {
    /// L(N_haar, alpha) with alpha uniform on the torus. By equidistribution
    /// of expanding horospheres the reduced-basis statistics converge to Haar
    /// as N_haar grows; the bias at the default 1e6 is controlled by the
    /// Siegel-mean and self-consistency tests.
    Horospherical { n_haar: u64 },
}

impl Default for HaarMethod {
    fn default() -> Self {
        HaarMethod::Horospherical { n_haar: 1_000_000 }
    }
}

/// Draws an approximately Haar-random unimodular lattice of dimension n.
pub fn haar_sample(
    n: usize,
    rng: &mut ChaCha8Rng,
    method: HaarMethod,
) -> Result<UnimodularLattice> {
    if n < 2 {
        return Err(Error::validation("lattice dimension must be at least 2"));
    }
    match method {
        HaarMethod::Horospherical { n_haar } => {
            let alpha = uniform_torus(rng, n - 1);
            dani_lattice(n_haar, &alpha)
        }
    }
}

/// Number of nonzero lattice vectors inside the closed ball of a given
/// radius. Both sign representatives count.
pub fn siegel_count(lat: &UnimodularLattice, radius: f64) -> Result<usize> {
    let (red, _) = lll_reduce(&lat.basis)?;
    Ok(enumerate_short(&red, radius).len())
}

/// Length of a shortest nonzero vector, certified by enumeration.
pub fn shortest_vector_length(lat: &UnimodularLattice) -> Result<f64> {
    let (red, _) = lll_reduce(&lat.basis)?;
    let bound = (0..red.cols)
        .map(|j| norm(red.col(j)))
        .fold(f64::INFINITY, f64::min);
    let min2 = enumerate_short(&red, bound * (1.0 + 1e-9))
        .into_iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min);
    Ok(min2.sqrt())
}

/// One row of an equidistribution table: the Monte Carlo mean of an
/// observable of (reduced basis, alpha) at a given N.
#[derive(Clone, Debug)]
pub struct EquidistRow {
    pub n_steps: u64,
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo means of a bounded observable of the reduced basis of
/// L(N, alpha) over uniform alpha, for each N in the list.
pub fn equidistribution_check<F>(
    d: usize,
    n_list: &[u64],
    observable: F,
    samples: u64,
    seed: u64,
) -> Result<Vec<EquidistRow>>
where
    F: Fn(&ReducedBasis, &[f64]) -> f64 + Sync,
{
    if d < 1 {
        return Err(Error::validation("d must be at least 1"));
    }
    let mut rows = Vec::new();
    for (ni, &n_steps) in n_list.iter().enumerate() {
        let vals: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, ((ni as u64) << 32) | i);
                // resample on the measure-zero reduction failures
                for _ in 0..64 {
                    let alpha = uniform_torus(&mut rng, d);
                    if let Ok(lat) = dani_lattice(n_steps, &alpha) {
                        if let Ok(rb) = reduced_basis(&lat) {
                            return observable(&rb, &alpha);
                        }
                    }
                }
                f64::NAN
            })
            .collect();
        if vals.iter().any(|v| v.is_nan()) {
            return Err(Error::reduction("persistent reduction failure"));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        rows.push(EquidistRow {
            n_steps,
            mean,
            std_err: (var / n).sqrt(),
        });
    }
    Ok(rows)
}
