//! Orbit discrepancies: exact counting for discrete translations and the
//! one-dimensional rotation, Fourier-window and resonant approximations,
//! occupation times of linear flows, lattice points in slanted cylinders,
//! geodesic ball times, and the Monte Carlo samplers producing empirical
//! CDFs of the normalized quantities.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex_body::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::lattice::{
    canonical_k_last, dani_lattice, resonant_set, shortest_vector_length,
    ReducedBasis, ResonantSet,
};
use crate::linalg::{dot, norm, norm2, Mat};
use crate::numeric::{ball_volume, cospi, sinpi, sinpi_over, wrap_half, Dd};
use crate::rng::{sample_rng, uniform_torus};
use crate::stats::EmpiricalCdf;

/// Threshold on the shortest vector of L(N, alpha) below which a sample is
/// flagged (reported, never discarded).
pub const SHORT_LATTICE_FLAG: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Discrete translations
// ---------------------------------------------------------------------------

/// One translation-orbit experiment: the orbit x, x+alpha, ... of length N on
/// the torus against the body scaled by r N^{-gamma}.
#[derive(Clone, Debug)]
pub struct TranslationOrbitSpec {
    pub body: ConvexBody,
    pub r: f64,
    pub alpha: Vec<f64>,
    pub x: Vec<f64>,
    pub n_steps: u64,
    pub gamma: f64,
}

impl TranslationOrbitSpec {
    pub fn new(
        body: ConvexBody,
        r: f64,
        alpha: Vec<f64>,
        x: Vec<f64>,
        n_steps: u64,
        gamma: f64,
    ) -> Result<Self> {
        let d = body.dim();
        if alpha.len() != d || x.len() != d {
            return Err(Error::validation("alpha/x dimension mismatch"));
        }
        if r <= 0.0 {
            return Err(Error::validation("r must be positive"));
        }
        if !(0.0..1.0 / d as f64).contains(&gamma) {
            return Err(Error::validation("gamma must satisfy 0 <= gamma < 1/d"));
        }
        let spec = TranslationOrbitSpec {
            body,
            r,
            alpha,
            x,
            n_steps,
            gamma,
        };
        let s = spec.effective_scale();
        if !spec.body.fits_in_unit_cube(s) {
            return Err(Error::validation(format!(
                "body scaled by {s} does not fit inside the unit cube"
            )));
        }
        Ok(spec)
    }

    /// r N^{-gamma}, the scale actually applied to the body.
    pub fn effective_scale(&self) -> f64 {
        if self.gamma == 0.0 {
            self.r
        } else {
            self.r * (self.n_steps as f64).powf(-self.gamma)
        }
    }

    /// Denominator of the normalized discrepancy:
    /// r^{(d-1)/2} N^{(d-1)(1-gamma d)/(2d)}.
    pub fn normalization(&self) -> f64 {
        let d = self.body.dim() as f64;
        let nf = self.n_steps as f64;
        self.r.powf((d - 1.0) / 2.0) * nf.powf((d - 1.0) / (2.0 * d) * (1.0 - self.gamma * d))
    }
}

/// Exact visit count of the orbit to the scaled body, minus N Vol.
pub fn discrepancy_direct(spec: &TranslationOrbitSpec) -> f64 {
    let s = spec.effective_scale();
    let count = count_orbit_visits(&spec.body, s, &spec.alpha, &spec.x, spec.n_steps);
    let vol = spec.body.volume() * s.powi(spec.body.dim() as i32);
    count as f64 - spec.n_steps as f64 * vol
}

/// Normalized discrepancy per the limit-law scaling.
pub fn normalized_discrepancy(spec: &TranslationOrbitSpec) -> f64 {
    if spec.n_steps == 0 {
        return 0.0;
    }
    discrepancy_direct(spec) / spec.normalization()
}

/// Counts n in [0, N) with x + n alpha in (body scaled by s) mod Z^d. The
/// point is folded to the representative nearest the body center; membership
/// within 1e-12 of the boundary is settled in double-double arithmetic.
fn count_orbit_visits(body: &ConvexBody, s: f64, alpha: &[f64], x: &[f64], n_steps: u64) -> u64 {
    let d = body.dim();
    let xc: Vec<f64> = x.iter().zip(body.center()).map(|(a, c)| a - c).collect();
    // coordinate shifts needed when the body leaves the centered half-cube
    let mut shifts: Vec<Vec<f64>> = vec![vec![0.0]; d];
    let mut e = vec![0.0; d];
    for i in 0..d {
        e[i] = 1.0;
        let wp = body.support_centered(&e).unwrap();
        e[i] = -1.0;
        let wm = body.support_centered(&e).unwrap();
        e[i] = 0.0;
        if s * wp > 0.5 {
            shifts[i].push(1.0);
        }
        if s * wm > 0.5 {
            shifts[i].push(-1.0);
        }
    }
    let simple = shifts.iter().all(|v| v.len() == 1);
    let s2 = s * s;
    let mut count = 0u64;
    let mut delta = vec![0.0; d];
    for n in 0..n_steps {
        let nf = n as f64;
        for i in 0..d {
            delta[i] = wrap_half(xc[i] + nf * alpha[i]);
        }
        let inside = if simple {
            point_in_scaled(body, s, s2, &delta, nf, &xc, alpha)
        } else {
            // try every admissible integer shift of the representative
            let mut hit = false;
            let mut idx = vec![0usize; d];
            'outer: loop {
                let mut p = delta.clone();
                for i in 0..d {
                    p[i] += shifts[i][idx[i]];
                }
                if point_in_scaled(body, s, s2, &p, nf, &xc, alpha) {
                    hit = true;
                    break;
                }
                let mut i = d;
                loop {
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                    if idx[i] + 1 < shifts[i].len() {
                        idx[i] += 1;
                        for j in idx.iter_mut().skip(i + 1) {
                            *j = 0;
                        }
                        break;
                    }
                }
            }
            hit
        };
        if inside {
            count += 1;
        }
    }
    count
}

fn point_in_scaled(
    body: &ConvexBody,
    s: f64,
    s2: f64,
    delta: &[f64],
    nf: f64,
    xc: &[f64],
    alpha: &[f64],
) -> bool {
    match body.kind() {
        BodyKind::Ball => {
            let q = norm2(delta);
            if (q - s2).abs() < 2.0 * s * 1e-12 {
                return recheck_quadratic(None, s, nf, xc, alpha);
            }
            q <= s2
        }
        BodyKind::Ellipsoid { .. } => {
            let a = body.sigma_inverse().unwrap();
            let q = dot(delta, &a.matvec(delta));
            if (q - s2).abs() < 2.0 * s * 1e-12 {
                return recheck_quadratic(Some(a), s, nf, xc, alpha);
            }
            q <= s2
        }
        BodyKind::SupportPerturbation { .. } => {
            let y: Vec<f64> = delta.iter().map(|v| v / s).collect();
            body.separation(&y) >= -1e-12
        }
    }
}

/// Double-double recomputation of the wrapped point and of the quadratic
/// gauge for membership decisions within 1e-12 of the boundary.
fn recheck_quadratic(sigma_inv: Option<&Mat>, s: f64, nf: f64, xc: &[f64], alpha: &[f64]) -> bool {
    let d = xc.len();
    let mut dd: Vec<Dd> = Vec::with_capacity(d);
    for i in 0..d {
        let t = Dd::from(xc[i]).add(Dd::from(nf).mul_f64(alpha[i]));
        dd.push(t.wrap_half());
    }
    let mut q = Dd::from(0.0);
    match sigma_inv {
        None => {
            for v in &dd {
                q = q.add(v.mul(*v));
            }
        }
        Some(a) => {
            for i in 0..d {
                for j in 0..d {
                    q = q.add(dd[i].mul(dd[j]).mul_f64(a.get(i, j)));
                }
            }
        }
    }
    let s2 = Dd::from(s).mul_f64(s);
    q.sub(s2).value() <= 0.0
}

// ---------------------------------------------------------------------------
// Fourier approximations
// ---------------------------------------------------------------------------

/// Which truncation of the Fourier series to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierMode {
    /// All frequencies with 0 < |k|^2 < N^{2/d} / eps.
    FullWindow,
    /// Only the resonant harmonics (small divisors) of L(N, alpha).
    Resonant,
}

/// Fourier-series approximation of the normalized discrepancy built from the
/// stationary-phase coefficient asymptotics.
pub fn fourier_discrepancy(
    spec: &TranslationOrbitSpec,
    mode: FourierMode,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1)"));
    }
    let d = spec.body.dim();
    let nf = spec.n_steps as f64;
    match mode {
        FourierMode::FullWindow => {
            let kmax2 = nf.powf(2.0 / d as f64) / eps;
            let kmax = kmax2.sqrt().floor() as i64 + 1;
            let mut total = 0.0;
            let mut k = vec![-kmax; d];
            loop {
                let k2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
                if k2 > 0.0 && k2 < kmax2 {
                    total += window_term(spec, &k)?;
                }
                let mut i = d;
                loop {
                    if i == 0 {
                        return Ok(total);
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
        FourierMode::Resonant => {
            let set = resonant_set(spec.n_steps, &spec.alpha, eps)?;
            let ks: Vec<Vec<i64>> = set.harmonics.iter().map(|h| h.k.clone()).collect();
            fourier_g_sum(spec, &ks)
        }
    }
}

/// One term of the full-window sum: the Dirichlet kernel against the
/// coefficient asymptotics, already carrying the limit normalization.
fn window_term(spec: &TranslationOrbitSpec, k: &[i64]) -> Result<f64> {
    let d = spec.body.dim() as f64;
    let nf = spec.n_steps as f64;
    let s = spec.effective_scale();
    let fc = spec.body.fourier_coeff_asymptotic(k, s)?;
    let kdota = k
        .iter()
        .zip(&spec.alpha)
        .map(|(&ki, &ai)| ki as f64 * ai)
        .sum::<f64>();
    let frac = kdota + canonical_k_last(kdota) as f64;
    let kx = k
        .iter()
        .zip(spec.x.iter().zip(spec.body.center()))
        .map(|(&ki, (&xi, &ci))| ki as f64 * (xi - ci))
        .sum::<f64>();
    let ratio = if frac.abs() < 1e-15 {
        nf
    } else {
        sinpi(nf * frac) / sinpi(frac)
    };
    let num = fc.magnitude_plus * sinpi(2.0 * (fc.phase_plus + kx) + (nf - 1.0) * frac)
        + fc.magnitude_minus * sinpi(2.0 * (fc.phase_minus - kx) - (nf - 1.0) * frac);
    let gamma_scale = nf.powf((d - 1.0) * spec.gamma / 2.0);
    Ok(gamma_scale * num * ratio / nf.powf((d - 1.0) / (2.0 * d)))
}

/// Resonant-form sum over an explicit list of frequencies: the Dirichlet
/// denominator sin(pi {k, alpha}) replaced by pi {k, alpha}.
pub fn fourier_g_sum(spec: &TranslationOrbitSpec, ks: &[Vec<i64>]) -> Result<f64> {
    let d = spec.body.dim() as f64;
    let nf = spec.n_steps as f64;
    let s = spec.effective_scale();
    let gamma_scale = nf.powf((d - 1.0) * spec.gamma / 2.0);
    let mut total = 0.0;
    for k in ks {
        let fc = spec.body.fourier_coeff_asymptotic(k, s)?;
        let kdota = k
            .iter()
            .zip(&spec.alpha)
            .map(|(&ki, &ai)| ki as f64 * ai)
            .sum::<f64>();
        let frac = kdota + canonical_k_last(kdota) as f64;
        let kx = k
            .iter()
            .zip(spec.x.iter().zip(spec.body.center()))
            .map(|(&ki, (&xi, &ci))| ki as f64 * (xi - ci))
            .sum::<f64>();
        let ratio = if frac.abs() < 1e-300 {
            nf
        } else {
            sinpi(nf * frac) / (std::f64::consts::PI * frac)
        };
        let num = fc.magnitude_plus * sinpi(2.0 * (fc.phase_plus + kx) + (nf - 1.0) * frac)
            + fc.magnitude_minus * sinpi(2.0 * (fc.phase_minus - kx) - (nf - 1.0) * frac);
        total += gamma_scale * num * ratio / nf.powf((d - 1.0) / (2.0 * d));
    }
    Ok(total)
}

/// gamma_j(alpha, N, x) = N^{1/d} (e_{j,1} x_1 + ... + e_{j,d} x_d).
pub fn gamma_vector(rb: &ReducedBasis, x: &[f64], n_steps: u64) -> Vec<f64> {
    let n = rb.dim();
    let d = n - 1;
    let n1d = (n_steps as f64).powf(1.0 / d as f64);
    rb.vectors.iter().map(|e| n1d * dot(&e[..d], x)).collect()
}

/// The finite-N bridge to the limit law: 2 sum_p sum_m q(r, alpha, x, N, m, p)
/// over the primitive coefficient vectors m of the resonant set, p <= p_max.
pub fn resonant_q_sum(spec: &TranslationOrbitSpec, eps: f64, p_max: u32) -> Result<f64> {
    if !spec.body.is_symmetric() {
        return Err(Error::domain("the q-sum is defined for symmetric bodies"));
    }
    let set = resonant_set(spec.n_steps, &spec.alpha, eps)?;
    resonant_q_sum_over(spec, &set, p_max)
}

/// Same as [`resonant_q_sum`] but reusing an already-computed resonant set.
pub fn resonant_q_sum_over(
    spec: &TranslationOrbitSpec,
    set: &ResonantSet,
    p_max: u32,
) -> Result<f64> {
    let d = spec.body.dim();
    let df = d as f64;
    let nf = spec.n_steps as f64;
    let n1d = nf.powf(1.0 / df);
    let s = spec.effective_scale();
    let c8 = (df - 1.0) / 8.0;
    let xeff: Vec<f64> = spec
        .x
        .iter()
        .zip(spec.body.center())
        .map(|(a, c)| a - c)
        .collect();
    let gamma = gamma_vector(&set.reduced, &xeff, spec.n_steps);
    let prims: std::collections::BTreeSet<Vec<i64>> =
        set.harmonics.iter().map(|h| h.m.clone()).collect();
    let ninv = nf.powf(-1.0 / df);
    let mut total = 0.0;
    for m in &prims {
        // (X, Z, R) of the primitive vector through the canonical frequency
        // route (numerically aligned with the resonance predicate; the
        // basis-product route loses ~1e-9 of Z to cancellation)
        let kvec = set.reduced.coeffs.matvec(m);
        let kdota = kvec[..d]
            .iter()
            .zip(&spec.alpha)
            .map(|(&ki, &ai)| ki as f64 * ai)
            .sum::<f64>();
        let xm: Vec<f64> = kvec[..d].iter().map(|&ki| ki as f64 * ninv).collect();
        let zm = nf * (kdota + canonical_k_last(kdota) as f64);
        let rm = norm(&xm);
        if rm < 1e-12 {
            continue;
        }
        let u: Vec<f64> = xm.iter().map(|v| v / rm).collect();
        let kinv = spec.body.curvature_at_normal(&u)?.powf(-0.5);
        let pxm = spec.body.support_centered(&xm)?;
        let mgamma = m
            .iter()
            .zip(&gamma)
            .map(|(&mi, g)| mi as f64 * g)
            .sum::<f64>();
        let rden = rm.powf((df + 1.0) / 2.0);
        for p in 1..=p_max {
            let pf = p as f64;
            let osc = sinpi(2.0 * (s * n1d * pf * pxm - c8));
            let cosarg = cospi(2.0 * pf * mgamma + pf * (nf - 1.0) / nf * zm);
            let term =
                kinv * osc * cosarg * sinpi_over(pf, zm) / (rden * pf.powf((df + 3.0) / 2.0));
            total += term;
        }
    }
    let gamma_scale = nf.powf((df - 1.0) * spec.gamma / 2.0);
    Ok(2.0 * gamma_scale * total / (std::f64::consts::PI * std::f64::consts::PI))
}

// ---------------------------------------------------------------------------
// The one-dimensional rotation
// ---------------------------------------------------------------------------

/// Kesten's discrepancy: visits of the circle rotation to [0, r] minus N r.
pub fn kesten_discrepancy(r: f64, x: f64, alpha: f64, n_steps: u64) -> f64 {
    let mut count = 0u64;
    for n in 0..n_steps {
        let u = x + n as f64 * alpha;
        let u = u - u.floor();
        if u <= r {
            count += 1;
        }
    }
    count as f64 - n_steps as f64 * r
}

// ---------------------------------------------------------------------------
// Continuous flows
// ---------------------------------------------------------------------------

/// One linear-flow experiment: occupation of the scaled body along x + t v,
/// t in [0, T], on the torus.
#[derive(Clone, Debug)]
pub struct FlowOrbitSpec {
    pub body: ConvexBody,
    pub r: f64,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub t_total: f64,
}

impl FlowOrbitSpec {
    pub fn new(body: ConvexBody, r: f64, v: Vec<f64>, x: Vec<f64>, t_total: f64) -> Result<Self> {
        let d = body.dim();
        if v.len() != d || x.len() != d {
            return Err(Error::validation("v/x dimension mismatch"));
        }
        if norm(&v) == 0.0 {
            return Err(Error::validation("velocity must be nonzero"));
        }
        if r <= 0.0 || t_total < 0.0 {
            return Err(Error::validation("need r > 0 and T >= 0"));
        }
        if !body.fits_in_unit_cube(r) {
            return Err(Error::validation("scaled body does not fit the unit cube"));
        }
        Ok(FlowOrbitSpec {
            body,
            r,
            v,
            x,
            t_total,
        })
    }
}

/// Exact occupation time of the flow in the scaled body: entry/exit times are
/// solved per integer translate (quadratically for balls and ellipsoids, by
/// bracketing and bisection for perturbed bodies). Translates are enumerated
/// along the segment with an owner rule so each is handled exactly once, in a
/// fixed order.
pub fn flow_time_in_body(spec: &FlowOrbitSpec) -> Result<f64> {
    let d = spec.body.dim();
    let t_total = spec.t_total;
    if t_total == 0.0 {
        return Ok(0.0);
    }
    let w0: Vec<f64> = spec
        .x
        .iter()
        .zip(spec.body.center())
        .map(|(a, c)| a - c)
        .collect();
    let speed = norm(&spec.v);
    let circ = spec.r * spec.body.circumradius() + 1e-9;
    let arclen = speed * t_total;
    let steps = arclen.ceil().max(1.0) as i64;
    let u: Vec<f64> = spec.v.iter().map(|vi| vi / speed).collect();

    let quad: Option<(Mat, f64)> = match spec.body.kind() {
        BodyKind::Ball => Some((Mat::identity(d), spec.r * spec.r)),
        BodyKind::Ellipsoid { .. } => {
            Some((spec.body.sigma_inverse().unwrap().clone(), spec.r * spec.r))
        }
        BodyKind::SupportPerturbation { .. } => None,
    };

    let mut occupied = 0.0;
    let mut idx = vec![0i64; d];
    for step in 0..steps {
        let s0 = step as f64;
        let s1 = (s0 + 1.0).min(arclen);
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for i in 0..d {
            let a = w0[i] + s0 * u[i];
            let b = w0[i] + s1 * u[i];
            lo[i] = (a.min(b) - circ).floor() as i64;
            hi[i] = (a.max(b) + circ).ceil() as i64;
        }
        idx.copy_from_slice(&lo);
        'box_iter: loop {
            // owner rule: a translate belongs to the step containing its
            // closest segment parameter
            let tstar = {
                let mut num = 0.0;
                for i in 0..d {
                    num += (idx[i] as f64 - w0[i]) * spec.v[i];
                }
                (num / (speed * speed)).clamp(0.0, t_total)
            };
            let owner = ((tstar * speed).floor() as i64).min(steps - 1).max(0);
            if owner == step {
                let mut dist2 = 0.0;
                for i in 0..d {
                    let q = w0[i] + tstar * spec.v[i] - idx[i] as f64;
                    dist2 += q * q;
                }
                if dist2 <= circ * circ {
                    occupied += translate_time(spec, &w0, &idx, quad.as_ref())?;
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    break 'box_iter;
                }
                i -= 1;
                if idx[i] < hi[i] {
                    idx[i] += 1;
                    for j in i + 1..d {
                        idx[j] = lo[j];
                    }
                    break;
                }
            }
        }
    }
    Ok(occupied)
}

/// Time spent inside one integer translate of the scaled body.
fn translate_time(
    spec: &FlowOrbitSpec,
    w0: &[f64],
    n: &[i64],
    quad: Option<&(Mat, f64)>,
) -> Result<f64> {
    let d = spec.body.dim();
    let delta: Vec<f64> = (0..d).map(|i| w0[i] - n[i] as f64).collect();
    match quad {
        Some((a, r2)) => {
            let av = a.matvec(&spec.v);
            let qa = dot(&spec.v, &av);
            let qb = 2.0 * dot(&delta, &av);
            let qc = dot(&delta, &a.matvec(&delta)) - r2;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc <= 0.0 {
                return Ok(0.0);
            }
            let sq = disc.sqrt();
            let t1 = (-qb - sq) / (2.0 * qa);
            let t2 = (-qb + sq) / (2.0 * qa);
            Ok((t2.min(spec.t_total) - t1.max(0.0)).max(0.0))
        }
        None => {
            // perturbed body: bracket the gauge sign changes, then bisect
            let speed = norm(&spec.v);
            let circ = spec.r * spec.body.circumradius() + 1e-9;
            let qa = speed * speed;
            let qb = 2.0 * dot(&delta, &spec.v);
            let qc = norm2(&delta) - circ * circ;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc <= 0.0 {
                return Ok(0.0);
            }
            let sq = disc.sqrt();
            let t_lo = ((-qb - sq) / (2.0 * qa)).max(0.0);
            let t_hi = ((-qb + sq) / (2.0 * qa)).min(spec.t_total);
            if t_hi <= t_lo {
                return Ok(0.0);
            }
            let g = |t: f64| -> f64 {
                let y: Vec<f64> = (0..d)
                    .map(|i| (delta[i] + t * spec.v[i]) / spec.r)
                    .collect();
                spec.body.separation(&y)
            };
            let dt = (spec.r * spec.body.inradius() / (2.0 * speed)).min(t_hi - t_lo);
            let mut ts = Vec::new();
            let mut t = t_lo;
            while t < t_hi {
                ts.push(t);
                t += dt;
            }
            ts.push(t_hi);
            let mut occupied = 0.0;
            let mut prev_t = ts[0];
            let mut prev_g = g(prev_t);
            let mut inside_since = if prev_g >= 0.0 { Some(prev_t) } else { None };
            for &tk in &ts[1..] {
                let gk = g(tk);
                if (gk >= 0.0) != (prev_g >= 0.0) {
                    let mut a = prev_t;
                    let mut b = tk;
                    for _ in 0..100 {
                        let mid = 0.5 * (a + b);
                        if (g(mid) >= 0.0) == (prev_g >= 0.0) {
                            a = mid;
                        } else {
                            b = mid;
                        }
                        if b - a < 1e-12 {
                            break;
                        }
                    }
                    let root = 0.5 * (a + b);
                    if prev_g >= 0.0 {
                        occupied += root - inside_since.take().unwrap_or(root);
                    } else {
                        inside_since = Some(root);
                    }
                }
                prev_t = tk;
                prev_g = gk;
            }
            if let Some(since) = inside_since {
                occupied += t_hi - since;
            }
            Ok(occupied)
        }
    }
}

/// Occupation time minus T Vol of the scaled body.
pub fn flow_discrepancy(spec: &FlowOrbitSpec) -> Result<f64> {
    let vol = spec.body.volume() * spec.r.powi(spec.body.dim() as i32);
    Ok(flow_time_in_body(spec)? - spec.t_total * vol)
}

/// Flow discrepancy with the dimension-dependent normalization: none for
/// d = 2, r^{(d-1)/2} T^{(d-3)/(2(d-1))} for d >= 4. The d = 3 case obeys a
/// different scaling and is rejected.
pub fn normalized_flow_discrepancy(spec: &FlowOrbitSpec) -> Result<f64> {
    let d = spec.body.dim();
    match d {
        0 | 1 => Err(Error::validation("flows need d >= 2")),
        2 => flow_discrepancy(spec),
        3 => Err(Error::unsupported(
            "the d = 3 flow obeys a logarithmic (Cauchy) scaling; not implemented here",
        )),
        _ => {
            let df = d as f64;
            let denom = spec.r.powf((df - 1.0) / 2.0)
                * spec.t_total.powf((df - 3.0) / (2.0 * (df - 1.0)));
            Ok(flow_discrepancy(spec)? / denom)
        }
    }
}

// ---------------------------------------------------------------------------
// Slanted cylinders
// ---------------------------------------------------------------------------

/// Counts integer points within distance r of the segment y + t v, t in
/// [0, T] (a capsule), and returns the count together with count minus the
/// exact capsule volume (cylinder part plus two half-balls).
pub fn cylinder_count(y: &[f64], v: &[f64], r: f64, t_total: f64) -> Result<(u64, f64)> {
    let n = y.len();
    if v.len() != n {
        return Err(Error::validation("y/v dimension mismatch"));
    }
    if norm(v) == 0.0 || r <= 0.0 || t_total < 0.0 {
        return Err(Error::validation("need |v| > 0, r > 0, T >= 0"));
    }
    let speed = norm(v);
    let arclen = speed * t_total;
    let steps = arclen.ceil().max(1.0) as i64;
    let u: Vec<f64> = v.iter().map(|vi| vi / speed).collect();
    let reach = r + 1e-9;
    let mut count = 0u64;
    let mut idx = vec![0i64; n];
    for step in 0..steps {
        let s0 = step as f64;
        let s1 = (s0 + 1.0).min(arclen);
        let mut lo = vec![0i64; n];
        let mut hi = vec![0i64; n];
        for i in 0..n {
            let a = y[i] + s0 * u[i];
            let b = y[i] + s1 * u[i];
            lo[i] = (a.min(b) - reach).floor() as i64;
            hi[i] = (a.max(b) + reach).ceil() as i64;
        }
        idx.copy_from_slice(&lo);
        'box_iter: loop {
            let tstar = {
                let mut num = 0.0;
                for i in 0..n {
                    num += (idx[i] as f64 - y[i]) * v[i];
                }
                (num / (speed * speed)).clamp(0.0, t_total)
            };
            let owner = ((tstar * speed).floor() as i64).min(steps - 1).max(0);
            if owner == step {
                let mut dist2 = 0.0;
                for i in 0..n {
                    let q = y[i] + tstar * v[i] - idx[i] as f64;
                    dist2 += q * q;
                }
                if dist2 <= r * r {
                    count += 1;
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break 'box_iter;
                }
                i -= 1;
                if idx[i] < hi[i] {
                    idx[i] += 1;
                    for j in i + 1..n {
                        idx[j] = lo[j];
                    }
                    break;
                }
            }
        }
    }
    let volume = arclen * ball_volume(n - 1, r) + ball_volume(n, r);
    Ok((count, count as f64 - volume))
}

/// Brute-force capsule count over the full bounding box (test oracle).
pub fn cylinder_count_bruteforce(y: &[f64], v: &[f64], r: f64, t_total: f64) -> Result<u64> {
    let n = y.len();
    if v.len() != n || norm(v) == 0.0 || r <= 0.0 {
        return Err(Error::validation("bad capsule parameters"));
    }
    let speed2 = norm2(v);
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for i in 0..n {
        let a = y[i];
        let b = y[i] + t_total * v[i];
        lo[i] = (a.min(b) - r - 1e-9).floor() as i64;
        hi[i] = (a.max(b) + r + 1e-9).ceil() as i64;
    }
    let mut count = 0u64;
    let mut idx = lo.clone();
    loop {
        let mut num = 0.0;
        for i in 0..n {
            num += (idx[i] as f64 - y[i]) * v[i];
        }
        let t = (num / speed2).clamp(0.0, t_total);
        let mut dist2 = 0.0;
        for i in 0..n {
            let q = y[i] + t * v[i] - idx[i] as f64;
            dist2 += q * q;
        }
        if dist2 <= r * r {
            count += 1;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(count);
            }
            i -= 1;
            if idx[i] < hi[i] {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = lo[j];
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random geodesics
// ---------------------------------------------------------------------------

/// Occupation data of a geodesic in the ball B(y, r).
#[derive(Clone, Copy, Debug)]
pub struct GeodesicObservation {
    pub occupation: f64,
    pub raw: f64,
    pub normalized: f64,
}

/// Time the geodesic x + t v spends in B(y, r) over [0, T], its deviation
/// from Vol B(y, r) T, and the normalized value
/// |v|^{(d+1)/(2(d-1))} (tau - Vol T) / (r^{(d-1)/2} T^{(d-3)/(2(d-1))}).
pub fn geodesic_ball_time(
    r: f64,
    v: &[f64],
    x: &[f64],
    y: &[f64],
    t_total: f64,
) -> Result<GeodesicObservation> {
    let d = x.len();
    if d < 2 {
        return Err(Error::validation("geodesics need d >= 2"));
    }
    if d == 3 {
        return Err(Error::unsupported(
            "the d = 3 geodesic law is not covered by this normalization",
        ));
    }
    if r >= (d as f64).sqrt() / 2.0 {
        return Err(Error::domain("ball radius must stay below sqrt(d)/2"));
    }
    let body = ConvexBody::ball_at(d, y.to_vec())?;
    let spec = FlowOrbitSpec::new(body, r, v.to_vec(), x.to_vec(), t_total)?;
    let occupation = flow_time_in_body(&spec)?;
    let raw = occupation - ball_volume(d, r) * t_total;
    let df = d as f64;
    let normalized = if d == 2 {
        raw
    } else {
        norm(v).powf((df + 1.0) / (2.0 * (df - 1.0))) * raw
            / (r.powf((df - 1.0) / 2.0) * t_total.powf((df - 3.0) / (2.0 * (df - 1.0))))
    };
    Ok(GeodesicObservation {
        occupation,
        raw,
        normalized,
    })
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Compactly supported velocity densities staying away from the origin.
#[derive(Clone, Debug, Serialize)]
pub enum DirectionDensity {
    /// Uniform direction on the sphere, speed uniform in [speed_min, speed_max].
    IsotropicShell { speed_min: f64, speed_max: f64 },
    /// Componentwise uniform in a box (anisotropic; the box must avoid 0).
    BoxOffset { low: Vec<f64>, high: Vec<f64> },
}

impl DirectionDensity {
    pub fn sample(&self, rng: &mut impl Rng, d: usize) -> Vec<f64> {
        match self {
            DirectionDensity::IsotropicShell {
                speed_min,
                speed_max,
            } => loop {
                let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
                let n = norm(&g);
                if n > 1e-9 {
                    let speed = speed_min + (speed_max - speed_min) * rng.gen::<f64>();
                    return g.iter().map(|v| v / n * speed).collect();
                }
            },
            DirectionDensity::BoxOffset { low, high } => (0..d)
                .map(|i| low[i] + (high[i] - low[i]) * rng.gen::<f64>())
                .collect(),
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Marsaglia polar method
    loop {
        let u = 2.0 * rng.gen::<f64>() - 1.0;
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// One sampled orbit row of a CSV dump. For flow experiments the `alpha`
/// columns hold the velocity.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSampleRow {
    pub sample_id: u64,
    pub r: f64,
    pub alpha: Vec<f64>,
    pub x: Vec<f64>,
    pub raw_discrepancy: f64,
    pub normalized: f64,
}

/// Sampler output: the rows, the flagged sample ids (short lattice vectors),
/// a config echo and the seed.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSampleDump {
    pub schema_version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub flagged: Vec<u64>,
    pub rows: Vec<OrbitSampleRow>,
}

impl OrbitSampleDump {
    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |r| r.alpha.len());
        let dx = self.rows.first().map_or(0, |r| r.x.len());
        let mut header = vec!["sample_id".to_string(), "r".to_string()];
        for i in 1..=d {
            header.push(format!("alpha{i}"));
        }
        for i in 1..=dx {
            header.push(format!("x{i}"));
        }
        header.push("raw_discrepancy".into());
        header.push("normalized".into());
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![row.sample_id.to_string(), row.r.to_string()];
            cells.extend(row.alpha.iter().map(|v| v.to_string()));
            cells.extend(row.x.iter().map(|v| v.to_string()));
            cells.push(row.raw_discrepancy.to_string());
            cells.push(row.normalized.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "samples": self.rows.len(),
            "flagged": self.flagged.len(),
            "flagged_ids": self.flagged,
        })
    }
}

/// Configuration of the translation-orbit sampler.
#[derive(Clone, Debug)]
pub struct TranslationSamplerConfig {
    pub body: ConvexBody,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma: f64,
    pub n_steps: u64,
    pub samples: u64,
    pub seed: u64,
}

/// ECDF of the normalized discrepancy over i.i.d. uniform (r, alpha, x).
/// Samples whose lattice L(N, alpha) has a vector shorter than 1e-3 are
/// flagged in the dump but kept.
pub fn sample_translation_ecdf(
    cfg: &TranslationSamplerConfig,
) -> Result<(EmpiricalCdf, OrbitSampleDump)> {
    if cfg.samples == 0 {
        return Err(Error::validation("need at least one sample"));
    }
    if !(cfg.r_min > 0.0 && cfg.r_max >= cfg.r_min) {
        return Err(Error::validation("bad r range"));
    }
    let d = cfg.body.dim();
    // validate the worst-case scale up front
    TranslationOrbitSpec::new(
        cfg.body.clone(),
        cfg.r_max,
        vec![0.0; d],
        vec![0.0; d],
        cfg.n_steps,
        cfg.gamma,
    )?;
    let rows: Vec<(OrbitSampleRow, bool)> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let r = cfg.r_min + (cfg.r_max - cfg.r_min) * rng.gen::<f64>();
            let alpha = uniform_torus(&mut rng, d);
            let x = uniform_torus(&mut rng, d);
            let spec = TranslationOrbitSpec {
                body: cfg.body.clone(),
                r,
                alpha: alpha.clone(),
                x: x.clone(),
                n_steps: cfg.n_steps,
                gamma: cfg.gamma,
            };
            let raw = discrepancy_direct(&spec);
            let normalized = raw / spec.normalization();
            let flagged = dani_lattice(cfg.n_steps.max(1), &alpha)
                .and_then(|lat| shortest_vector_length(&lat))
                .map(|len| len < SHORT_LATTICE_FLAG)
                .unwrap_or(true);
            (
                OrbitSampleRow {
                    sample_id: i,
                    r,
                    alpha,
                    x,
                    raw_discrepancy: raw,
                    normalized,
                },
                flagged,
            )
        })
        .collect();
    let flagged: Vec<u64> = rows
        .iter()
        .filter(|(_, f)| *f)
        .map(|(r, _)| r.sample_id)
        .collect();
    let values: Vec<f64> = rows.iter().map(|(r, _)| r.normalized).collect();
    let dump = OrbitSampleDump {
        schema_version: crate::SCHEMA_VERSION,
        kind: "translation".into(),
        config: serde_json::json!({
            "body": cfg.body.to_descriptor(),
            "r_min": cfg.r_min,
            "r_max": cfg.r_max,
            "gamma": cfg.gamma,
            "n_steps": cfg.n_steps,
            "samples": cfg.samples,
        }),
        seed: cfg.seed,
        flagged,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    };
    Ok((EmpiricalCdf::new(values)?, dump))
}

/// Configuration of the one-dimensional rotation sampler.
#[derive(Clone, Debug, Serialize)]
pub struct KestenSamplerConfig {
    pub r: f64,
    pub n_steps: u64,
    pub samples: u64,
    pub seed: u64,
}

/// ECDF of D_N / ln N over uniform (x, alpha).
pub fn sample_kesten_ecdf(cfg: &KestenSamplerConfig) -> Result<(EmpiricalCdf, OrbitSampleDump)> {
    if !(cfg.r > 0.0 && cfg.r < 1.0) {
        return Err(Error::domain("r must lie in (0, 1)"));
    }
    if cfg.samples == 0 || cfg.n_steps < 2 {
        return Err(Error::validation("need samples >= 1 and N >= 2"));
    }
    let logn = (cfg.n_steps as f64).ln();
    let rows: Vec<OrbitSampleRow> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let x: f64 = rng.gen();
            let alpha: f64 = rng.gen();
            let raw = kesten_discrepancy(cfg.r, x, alpha, cfg.n_steps);
            OrbitSampleRow {
                sample_id: i,
                r: cfg.r,
                alpha: vec![alpha],
                x: vec![x],
                raw_discrepancy: raw,
                normalized: raw / logn,
            }
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let dump = OrbitSampleDump {
        schema_version: crate::SCHEMA_VERSION,
        kind: "kesten".into(),
        config: serde_json::json!({
            "r": cfg.r,
            "n_steps": cfg.n_steps,
            "samples": cfg.samples,
        }),
        seed: cfg.seed,
        flagged: Vec::new(),
        rows,
    };
    Ok((EmpiricalCdf::new(values)?, dump))
}

/// Configuration of the continuous-flow sampler. For d = 2 the scale r is
/// held at r_max and the raw discrepancy is recorded (the d = 2 law needs no
/// normalization); for d >= 4 the scale is uniform in [r_min, r_max] and
/// values are normalized.
#[derive(Clone, Debug)]
pub struct FlowSamplerConfig {
    pub body: ConvexBody,
    pub r_min: f64,
    pub r_max: f64,
    pub t_total: f64,
    pub samples: u64,
    pub seed: u64,
    pub density: DirectionDensity,
}

pub fn sample_flow_ecdf(cfg: &FlowSamplerConfig) -> Result<(EmpiricalCdf, OrbitSampleDump)> {
    let d = cfg.body.dim();
    if d == 3 {
        return Err(Error::unsupported(
            "the d = 3 flow obeys a logarithmic (Cauchy) scaling; not implemented here",
        ));
    }
    if d < 2 {
        return Err(Error::validation("flows need d >= 2"));
    }
    if cfg.samples == 0 {
        return Err(Error::validation("need at least one sample"));
    }
    let rows: Vec<Result<OrbitSampleRow>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let r = if d == 2 {
                cfg.r_max
            } else {
                cfg.r_min + (cfg.r_max - cfg.r_min) * rng.gen::<f64>()
            };
            let v = cfg.density.sample(&mut rng, d);
            let x = uniform_torus(&mut rng, d);
            let spec = FlowOrbitSpec::new(cfg.body.clone(), r, v.clone(), x.clone(), cfg.t_total)?;
            let raw = flow_discrepancy(&spec)?;
            let normalized = normalized_flow_discrepancy(&spec)?;
            Ok(OrbitSampleRow {
                sample_id: i,
                r,
                alpha: v,
                x,
                raw_discrepancy: raw,
                normalized,
            })
        })
        .collect();
    let rows: Vec<OrbitSampleRow> = rows.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let dump = OrbitSampleDump {
        schema_version: crate::SCHEMA_VERSION,
        kind: "flow".into(),
        config: serde_json::json!({
            "body": cfg.body.to_descriptor(),
            "r_min": cfg.r_min,
            "r_max": cfg.r_max,
            "t_total": cfg.t_total,
            "samples": cfg.samples,
            "density": serde_json::to_value(&cfg.density).unwrap(),
        }),
        seed: cfg.seed,
        flagged: Vec::new(),
        rows,
    };
    Ok((EmpiricalCdf::new(values)?, dump))
}

/// Configuration of the random-geodesic sampler (fixed target ball center y).
#[derive(Clone, Debug)]
pub struct GeodesicSamplerConfig {
    pub d: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub y: Vec<f64>,
    pub t_total: f64,
    pub samples: u64,
    pub seed: u64,
    pub density: DirectionDensity,
}

pub fn sample_geodesic_ecdf(
    cfg: &GeodesicSamplerConfig,
) -> Result<(EmpiricalCdf, OrbitSampleDump)> {
    if cfg.d == 3 {
        return Err(Error::unsupported("d = 3 geodesics are not covered"));
    }
    if cfg.samples == 0 {
        return Err(Error::validation("need at least one sample"));
    }
    let rows: Vec<Result<OrbitSampleRow>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let r = cfg.r_min + (cfg.r_max - cfg.r_min) * rng.gen::<f64>();
            let v = cfg.density.sample(&mut rng, cfg.d);
            let x = uniform_torus(&mut rng, cfg.d);
            let obs = geodesic_ball_time(r, &v, &x, &cfg.y, cfg.t_total)?;
            Ok(OrbitSampleRow {
                sample_id: i,
                r,
                alpha: v,
                x,
                raw_discrepancy: obs.raw,
                normalized: obs.normalized,
            })
        })
        .collect();
    let rows: Vec<OrbitSampleRow> = rows.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let dump = OrbitSampleDump {
        schema_version: crate::SCHEMA_VERSION,
        kind: "geodesic".into(),
        config: serde_json::json!({
            "d": cfg.d,
            "r_min": cfg.r_min,
            "r_max": cfg.r_max,
            "y": cfg.y,
            "t_total": cfg.t_total,
            "samples": cfg.samples,
        }),
        seed: cfg.seed,
        flagged: Vec::new(),
        rows,
    };
    Ok((EmpiricalCdf::new(values)?, dump))
}

/// Configuration of the slanted-cylinder sampler: y = (x, 0), v = (alpha, 1).
#[derive(Clone, Debug, Serialize)]
pub struct CylinderSamplerConfig {
    pub d: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub t_total: f64,
    pub samples: u64,
    pub seed: u64,
}

pub fn sample_cylinder_ecdf(
    cfg: &CylinderSamplerConfig,
) -> Result<(EmpiricalCdf, OrbitSampleDump)> {
    if cfg.samples == 0 || cfg.d == 0 {
        return Err(Error::validation("need samples >= 1 and d >= 1"));
    }
    let df = cfg.d as f64;
    let rows: Vec<Result<OrbitSampleRow>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let r = cfg.r_min + (cfg.r_max - cfg.r_min) * rng.gen::<f64>();
            let alpha = uniform_torus(&mut rng, cfg.d);
            let x = uniform_torus(&mut rng, cfg.d);
            let mut y = x.clone();
            y.push(0.0);
            let mut v = alpha.clone();
            v.push(1.0);
            let (_, disc) = cylinder_count(&y, &v, r, cfg.t_total)?;
            let normalized =
                disc / (r.powf((df - 1.0) / 2.0) * cfg.t_total.powf((df - 1.0) / (2.0 * df)));
            Ok(OrbitSampleRow {
                sample_id: i,
                r,
                alpha,
                x,
                raw_discrepancy: disc,
                normalized,
            })
        })
        .collect();
    let rows: Vec<OrbitSampleRow> = rows.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let dump = OrbitSampleDump {
        schema_version: crate::SCHEMA_VERSION,
        kind: "cylinder".into(),
        config: serde_json::json!({
            "d": cfg.d,
            "r_min": cfg.r_min,
            "r_max": cfg.r_max,
            "t_total": cfg.t_total,
            "samples": cfg.samples,
        }),
        seed: cfg.seed,
        flagged: Vec::new(),
        rows,
    };
    Ok((EmpiricalCdf::new(values)?, dump))
}
