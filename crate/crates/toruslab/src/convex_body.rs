//! Strictly convex bodies: balls, ellipsoids and trigonometric support
//! perturbations (the latter in dimension 2). A body supplies its support
//! function P, the gaussian curvature K of its boundary, exact volume,
//! membership tests, and the stationary-phase asymptotics of the Fourier
//! coefficients of its indicator function.
//!
//! The reference shape is always centered at the origin; `center` translates
//! it. Scaling by `r` is the homothety centered at the origin applied to the
//! reference shape, followed by the translation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm2, sym_eigenvalues, Mat};
use crate::numeric::{adaptive_simpson, ball_volume, bessel_j0, sin2pi, sinpi};

/// One term of a trigonometric support perturbation in dimension 2:
/// amplitude * cos(harmonic * theta + phase) added to the support function on
/// the unit circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub harmonic: u32,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    /// Unit ball reference shape.
    Ball,
    /// {x : x^T Sigma^{-1} x <= 1} with Sigma symmetric positive definite;
    /// support function sqrt(t^T Sigma t).
    Ellipsoid { sigma: Mat },
    /// Base ellipsoid plus a finite trigonometric perturbation of the support
    /// function (dimension 2 only).
    SupportPerturbation { sigma: Mat, terms: Vec<HarmonicTerm> },
}

/// A strictly convex body. Immutable after construction; all operations are
/// pure and safe to share across threads.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    d: usize,
    kind: BodyKind,
    center: Vec<f64>,
    symmetric: bool,
    sigma_inv: Option<Mat>,
    volume_ref: f64,
    circumradius: f64,
    inradius: f64,
    min_curvature: f64,
}

const CURVATURE_GRID: usize = 1000;
const CURVATURE_FLOOR: f64 = 1e-3;

impl ConvexBody {
    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::ball_at(d, vec![0.0; d])
    }

    pub fn ball_at(d: usize, center: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("dimension must be at least 1"));
        }
        if center.len() != d {
            return Err(Error::validation("center dimension mismatch"));
        }
        Ok(ConvexBody {
            d,
            kind: BodyKind::Ball,
            center,
            symmetric: true,
            sigma_inv: None,
            volume_ref: ball_volume(d, 1.0),
            circumradius: 1.0,
            inradius: 1.0,
            min_curvature: 1.0,
        })
    }

    pub fn ellipsoid(sigma: Mat, center: Vec<f64>) -> Result<Self> {
        let d = sigma.rows;
        if d == 0 || sigma.cols != d {
            return Err(Error::validation("shape matrix must be square"));
        }
        if center.len() != d {
            return Err(Error::validation("center dimension mismatch"));
        }
        for i in 0..d {
            for j in 0..d {
                if (sigma.get(i, j) - sigma.get(j, i)).abs() > 1e-12 {
                    return Err(Error::validation("shape matrix must be symmetric"));
                }
            }
        }
        let eig = sym_eigenvalues(&sigma);
        if eig[0] <= 0.0 {
            return Err(Error::validation("shape matrix must be positive definite"));
        }
        let sigma_inv = sigma
            .inverse()
            .ok_or_else(|| Error::validation("shape matrix is singular"))?;
        let det: f64 = eig.iter().product();
        // min curvature of the ellipsoid boundary: attained where the two
        // largest radii of curvature meet; bound it on a grid instead of
        // special-casing axes
        let body = ConvexBody {
            d,
            kind: BodyKind::Ellipsoid { sigma },
            center,
            symmetric: true,
            sigma_inv: Some(sigma_inv),
            volume_ref: ball_volume(d, 1.0) * det.sqrt(),
            circumradius: eig[d - 1].sqrt(),
            inradius: eig[0].sqrt(),
            min_curvature: 0.0,
        };
        let min_curvature = body.grid_min_curvature();
        Ok(ConvexBody {
            min_curvature,
            ..body
        })
    }

    /// Base ellipsoid plus trigonometric support perturbation, d = 2. The
    /// construction is rejected unless the curvature stays above 1e-3 on a
    /// 1000-point grid, so strict convexity is certified.
    pub fn support_perturbation(
        sigma: Mat,
        terms: Vec<HarmonicTerm>,
        center: Vec<f64>,
    ) -> Result<Self> {
        if sigma.rows != 2 || sigma.cols != 2 {
            return Err(Error::unsupported(
                "support perturbations are implemented for d = 2",
            ));
        }
        if center.len() != 2 {
            return Err(Error::validation("center dimension mismatch"));
        }
        let eig = sym_eigenvalues(&sigma);
        if eig[0] <= 0.0 || (sigma.get(0, 1) - sigma.get(1, 0)).abs() > 1e-12 {
            return Err(Error::validation(
                "base shape matrix must be symmetric positive definite",
            ));
        }
        let sigma_inv = sigma.inverse().unwrap();
        let symmetric = terms.iter().all(|t| t.harmonic % 2 == 0);
        let mut body = ConvexBody {
            d: 2,
            kind: BodyKind::SupportPerturbation { sigma, terms },
            center,
            symmetric,
            sigma_inv: Some(sigma_inv),
            volume_ref: 0.0,
            circumradius: 0.0,
            inradius: 0.0,
            min_curvature: 0.0,
        };
        // certify positivity of the support and of the curvature
        let mut min_p = f64::INFINITY;
        let mut max_b = 0.0f64;
        for i in 0..CURVATURE_GRID {
            let th = 2.0 * std::f64::consts::PI * i as f64 / CURVATURE_GRID as f64;
            let (p, _, _) = body.circle_support(th);
            min_p = min_p.min(p);
            let bpt = body.boundary_point_theta(th);
            let centered = [bpt[0] - body.center[0], bpt[1] - body.center[1]];
            max_b = max_b.max(norm(&centered));
        }
        if min_p <= 0.0 {
            return Err(Error::validation(
                "perturbation too large: support function not positive",
            ));
        }
        let min_curvature = body.grid_min_curvature();
        if min_curvature <= CURVATURE_FLOOR {
            return Err(Error::validation(format!(
                "perturbation too large: estimated min curvature {min_curvature:.3e} <= {CURVATURE_FLOOR:.0e}"
            )));
        }
        body.min_curvature = min_curvature;
        body.inradius = min_p;
        body.circumradius = max_b * (1.0 + 1e-9);
        body.volume_ref = body.perturbation_area();
        if body.symmetric {
            // grid check of P(t) = P(-t)
            for i in 0..CURVATURE_GRID {
                let th = 2.0 * std::f64::consts::PI * i as f64 / CURVATURE_GRID as f64;
                let (p1, _, _) = body.circle_support(th);
                let (p2, _, _) = body.circle_support(th + std::f64::consts::PI);
                if (p1 - p2).abs() > 1e-12 {
                    return Err(Error::validation("even harmonics but asymmetric support"));
                }
            }
        }
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Largest distance from the center to the boundary of the reference body.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Smallest distance from the center to a supporting hyperplane.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn min_curvature(&self) -> f64 {
        self.min_curvature
    }

    /// Inverse shape matrix (balls and ellipsoids; None for perturbations
    /// whose gauge is not quadratic).
    pub fn sigma_inverse(&self) -> Option<&Mat> {
        self.sigma_inv.as_ref()
    }

    fn grid_min_curvature(&self) -> f64 {
        let mut min_k = f64::INFINITY;
        match self.d {
            2 => {
                for i in 0..CURVATURE_GRID {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / CURVATURE_GRID as f64;
                    let xi = [th.cos(), th.sin()];
                    // a degenerate direction certifies nothing: count it as flat
                    min_k = min_k.min(self.curvature_at_normal(&xi).unwrap_or(0.0));
                }
            }
            _ => {
                // deterministic low-discrepancy-ish sweep of the sphere
                let golden = 0.618_033_988_749_894_9_f64;
                let mut state = 0.37_f64;
                for _ in 0..CURVATURE_GRID {
                    let mut xi: Vec<f64> = Vec::with_capacity(self.d);
                    for j in 0..self.d {
                        state = (state + golden * (j + 1) as f64).fract();
                        xi.push(2.0 * state - 1.0 + 1e-3);
                    }
                    let n = norm(&xi);
                    if n < 1e-9 {
                        continue;
                    }
                    for v in &mut xi {
                        *v /= n;
                    }
                    min_k = min_k.min(self.curvature_at_normal(&xi).unwrap_or(0.0));
                }
            }
        }
        min_k
    }

    /// Support function of the centered reference shape.
    pub fn support_centered(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.d {
            return Err(Error::domain("direction dimension mismatch"));
        }
        let n2 = norm2(t);
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::domain("support function undefined at t = 0"));
        }
        Ok(match &self.kind {
            BodyKind::Ball => n2.sqrt(),
            BodyKind::Ellipsoid { sigma } => dot(t, &sigma.matvec(t)).sqrt(),
            BodyKind::SupportPerturbation { .. } => {
                let r = n2.sqrt();
                let th = t[1].atan2(t[0]);
                let (p, _, _) = self.circle_support(th);
                r * p
            }
        })
    }

    /// Support function P(t) = sup over the body of (t, x); includes the
    /// center term (center, t).
    pub fn support(&self, t: &[f64]) -> Result<f64> {
        Ok(self.support_centered(t)? + dot(&self.center, t))
    }

    /// Support value, first and second derivative of P restricted to the unit
    /// circle (d = 2, centered shape).
    fn circle_support(&self, theta: f64) -> (f64, f64, f64) {
        match &self.kind {
            BodyKind::Ball => (1.0, 0.0, 0.0),
            BodyKind::Ellipsoid { sigma } => ellipse_support(sigma, theta),
            BodyKind::SupportPerturbation { sigma, terms } => {
                let (e, e1, e2) = ellipse_support(sigma, theta);
                let mut h = 0.0;
                let mut h1 = 0.0;
                let mut h2 = 0.0;
                for t in terms {
                    let j = t.harmonic as f64;
                    let arg = j * theta + t.phase;
                    h += t.amplitude * arg.cos();
                    h1 -= t.amplitude * j * arg.sin();
                    h2 -= t.amplitude * j * j * arg.cos();
                }
                (e + h, e1 + h1, e2 + h2)
            }
        }
    }

    /// Gaussian curvature of the boundary at the point with outer normal xi.
    pub fn curvature_at_normal(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.d {
            return Err(Error::domain("normal dimension mismatch"));
        }
        let n = norm(xi);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("normal must be a unit vector, |xi| = {n}")));
        }
        match &self.kind {
            BodyKind::Ball => Ok(1.0),
            BodyKind::Ellipsoid { sigma } => {
                // Hessian of sqrt(t' S t) restricted to the tangent space
                let q = dot(xi, &sigma.matvec(xi));
                let sq = q.sqrt();
                let sxi = sigma.matvec(xi);
                let frame = tangent_frame(xi);
                let m = frame.len();
                let mut h = Mat::zeros(m, m);
                for a in 0..m {
                    let sta = sigma.matvec(&frame[a]);
                    for b in 0..m {
                        let v = dot(&frame[b], &sta) / sq
                            - dot(&frame[a], &sxi) * dot(&frame[b], &sxi) / (q * sq);
                        h.set(a, b, v);
                    }
                }
                let det = h.det();
                if det <= 0.0 {
                    return Err(Error::domain("degenerate curvature"));
                }
                Ok(1.0 / det)
            }
            BodyKind::SupportPerturbation { .. } => {
                let th = xi[1].atan2(xi[0]);
                let (p, _, p2) = self.circle_support(th);
                let rho = p + p2;
                if rho <= 0.0 {
                    return Err(Error::domain("degenerate curvature"));
                }
                Ok(1.0 / rho)
            }
        }
    }

    /// Curvature by central finite differences of the support function with
    /// the given step (the generic fallback; also the test oracle for the
    /// analytic paths).
    pub fn curvature_fd(&self, xi: &[f64], step: f64) -> Result<f64> {
        if (norm(xi) - 1.0).abs() > 1e-9 {
            return Err(Error::domain("normal must be a unit vector"));
        }
        let frame = tangent_frame(xi);
        let m = frame.len();
        let p0 = self.support_centered(xi)?;
        let mut h = Mat::zeros(m, m);
        let shift = |signs: &[(f64, usize)]| -> Result<f64> {
            let mut t = xi.to_vec();
            for &(s, a) in signs {
                for (ti, fi) in t.iter_mut().zip(&frame[a]) {
                    *ti += s * step * fi;
                }
            }
            self.support_centered(&t)
        };
        for a in 0..m {
            let pp = shift(&[(1.0, a)])?;
            let pm = shift(&[(-1.0, a)])?;
            h.set(a, a, (pp - 2.0 * p0 + pm) / (step * step));
            for b in (a + 1)..m {
                let v = (shift(&[(1.0, a), (1.0, b)])? - shift(&[(1.0, a), (-1.0, b)])?
                    - shift(&[(-1.0, a), (1.0, b)])?
                    + shift(&[(-1.0, a), (-1.0, b)])?)
                    / (4.0 * step * step);
                h.set(a, b, v);
                h.set(b, a, v);
            }
        }
        let det = h.det();
        if det <= 0.0 {
            return Err(Error::domain("degenerate curvature"));
        }
        Ok(1.0 / det)
    }

    /// Volume of the reference body (exact for balls and ellipsoids,
    /// quadrature of the support parametrization for perturbations).
    pub fn volume(&self) -> f64 {
        self.volume_ref
    }

    fn perturbation_area(&self) -> f64 {
        // area = 1/2 \int (P^2 - P'^2) dtheta; the integrand is analytic and
        // periodic so the trapezoid rule converges geometrically
        let m = 1 << 13;
        let mut acc = 0.0;
        for i in 0..m {
            let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let (p, p1, _) = self.circle_support(th);
            acc += p * p - p1 * p1;
        }
        0.5 * acc * 2.0 * std::f64::consts::PI / m as f64
    }

    /// Membership x in rC (closed): the reference shape is scaled by r about
    /// the origin then translated by the center.
    pub fn contains(&self, r: f64, x: &[f64]) -> Result<bool> {
        if r <= 0.0 {
            return Err(Error::domain("scale must be positive"));
        }
        if x.len() != self.d {
            return Err(Error::domain("point dimension mismatch"));
        }
        let y: Vec<f64> = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) / r)
            .collect();
        Ok(match &self.kind {
            BodyKind::Ball => norm2(&y) <= 1.0,
            BodyKind::Ellipsoid { .. } => {
                let a = self.sigma_inv.as_ref().unwrap();
                dot(&y, &a.matvec(&y)) <= 1.0
            }
            BodyKind::SupportPerturbation { .. } => self.separation(&y) >= -1e-12,
        })
    }

    /// min over unit normals of P(u) - (u, y); nonnegative iff y lies in the
    /// centered reference body. Grid scan plus local golden-section refine.
    pub fn separation(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(self.d, 2);
        let grid = 512;
        let f = |th: f64| {
            let (p, _, _) = self.circle_support(th);
            p - y[0] * th.cos() - y[1] * th.sin()
        };
        let mut best_i = 0;
        let mut best = f64::INFINITY;
        for i in 0..grid {
            let th = 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
            let v = f(th);
            if v < best {
                best = v;
                best_i = i;
            }
        }
        let step = 2.0 * std::f64::consts::PI / grid as f64;
        let mut a = (best_i as f64 - 1.0) * step;
        let mut b = (best_i as f64 + 1.0) * step;
        let phi = 0.618_033_988_749_894_9;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..60 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            }
        }
        best.min(f1).min(f2)
    }

    /// Boundary point with outer normal angle theta (d = 2), center included.
    pub fn boundary_point_theta(&self, theta: f64) -> Vec<f64> {
        debug_assert_eq!(self.d, 2);
        let (p, p1, _) = self.circle_support(theta);
        let (c, s) = (theta.cos(), theta.sin());
        vec![
            p * c - p1 * s + self.center[0],
            p * s + p1 * c + self.center[1],
        ]
    }

    /// True if the reference body scaled by `scale` fits inside the unit cube
    /// (extent at most 1 along every coordinate axis).
    pub fn fits_in_unit_cube(&self, scale: f64) -> bool {
        let mut e = vec![0.0; self.d];
        for i in 0..self.d {
            e[i] = 1.0;
            let wp = self.support_centered(&e).unwrap();
            e[i] = -1.0;
            let wm = self.support_centered(&e).unwrap();
            e[i] = 0.0;
            if scale * (wp + wm) > 1.0 + 1e-12 {
                return false;
            }
        }
        true
    }

    /// Stationary-phase asymptotics of the Fourier coefficient of the
    /// indicator of the body scaled by `r` (centered shape; a nonzero center
    /// shifts the orbit point instead).
    pub fn fourier_coeff_asymptotic(&self, k: &[i64], r: f64) -> Result<FourierCoeffAsym> {
        if k.iter().all(|&v| v == 0) {
            return Err(Error::domain("Fourier asymptotics undefined at k = 0"));
        }
        if r <= 0.0 {
            return Err(Error::domain("scale must be positive"));
        }
        let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let kn = norm(&kf);
        let u: Vec<f64> = kf.iter().map(|v| v / kn).collect();
        let mu: Vec<f64> = u.iter().map(|v| -v).collect();
        let kinv_p = self.curvature_at_normal(&u)?.powf(-0.5);
        let kinv_m = self.curvature_at_normal(&mu)?.powf(-0.5);
        let fall = kn.powf(-((self.d + 1) as f64) / 2.0);
        let c8 = (self.d as f64 - 1.0) / 8.0;
        let p_plus = self.support_centered(&kf)?;
        let p_minus = self.support_centered(&kf.iter().map(|v| -v).collect::<Vec<_>>())?;
        Ok(FourierCoeffAsym {
            k: k.to_vec(),
            magnitude_plus: kinv_p * fall / (2.0 * std::f64::consts::PI),
            magnitude_minus: kinv_m * fall / (2.0 * std::f64::consts::PI),
            phase_plus: r * p_plus - c8,
            phase_minus: r * p_minus - c8,
            symmetric: self.symmetric,
        })
    }
}

/// Decomposed leading Fourier asymptotics of the indicator of a scaled body:
/// magnitudes carry the K^{-1/2} |k|^{-(d+1)/2} prefactors and the phases are
/// r P(+-k) - (d-1)/8.
#[derive(Clone, Debug)]
pub struct FourierCoeffAsym {
    pub k: Vec<i64>,
    pub magnitude_plus: f64,
    pub magnitude_minus: f64,
    pub phase_plus: f64,
    pub phase_minus: f64,
    pub symmetric: bool,
}

impl FourierCoeffAsym {
    /// d_k(r) in the symmetric single-cosine form (1/pi prefactor).
    pub fn d_k(&self) -> Result<f64> {
        if !self.symmetric {
            return Err(Error::domain(
                "single-term coefficient only exists for symmetric bodies",
            ));
        }
        Ok(2.0 * self.magnitude_plus * sin2pi(self.phase_plus))
    }

    /// d_k(r, x) in the general two-phase form; `k_dot_x` is (k, x).
    pub fn d_k_at(&self, k_dot_x: f64) -> f64 {
        self.magnitude_plus * sin2pi(self.phase_plus + k_dot_x)
            + self.magnitude_minus * sin2pi(self.phase_minus - k_dot_x)
    }
}

/// Exact Fourier coefficient of the indicator of the radius-r ball, as an
/// oracle for the asymptotics. d = 1 and 3 are elementary; d = 2 integrates
/// the radial Bessel kernel by adaptive quadrature (absolute error ~1e-11).
pub fn fourier_coeff_exact_ball(d: usize, r: f64, k: &[i64]) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain("scale must be positive"));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::unsupported(format!(
            "exact ball coefficients implemented for d in 1..=3, got {d}"
        )));
    }
    if k.len() != d {
        return Err(Error::domain("frequency dimension mismatch"));
    }
    let kn = norm(&k.iter().map(|&v| v as f64).collect::<Vec<_>>());
    if kn == 0.0 {
        return Ok(ball_volume(d, r));
    }
    Ok(match d {
        1 => sinpi(2.0 * r * kn) / (std::f64::consts::PI * kn),
        2 => {
            let omega = 2.0 * std::f64::consts::PI * kn;
            adaptive_simpson(
                &|s: f64| 2.0 * std::f64::consts::PI * s * bessel_j0(omega * s),
                0.0,
                r,
                1e-11,
            )
        }
        3 => {
            let z = 2.0 * std::f64::consts::PI * r * kn;
            (z.sin() - z * z.cos()) / (2.0 * std::f64::consts::PI.powi(2) * kn.powi(3))
        }
        _ => unreachable!(),
    })
}

/// The ellipsoid section of the slanted cylinder around direction (alpha, 1):
/// C_alpha = { y : (|alpha|^2 + 1) |y|^2 - (alpha, y)^2 <= |alpha|^2 + 1 },
/// i.e. the ellipsoid with shape matrix I + alpha alpha^T.
pub fn slanted_cylinder_section(alpha: &[f64]) -> Result<ConvexBody> {
    let d = alpha.len();
    if d == 0 {
        return Err(Error::domain("alpha must be nonempty"));
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("alpha must be finite"));
    }
    let mut sigma = Mat::identity(d);
    for i in 0..d {
        for j in 0..d {
            sigma.set(i, j, sigma.get(i, j) + alpha[i] * alpha[j]);
        }
    }
    ConvexBody::ellipsoid(sigma, vec![0.0; d])
}

/// Support value, derivative and second derivative of sqrt(t' S t) restricted
/// to the unit circle (d = 2).
fn ellipse_support(sigma: &Mat, theta: f64) -> (f64, f64, f64) {
    let a = sigma.get(0, 0);
    let b = sigma.get(0, 1);
    let c = sigma.get(1, 1);
    let (s2, c2) = (2.0 * theta).sin_cos();
    let g = 0.5 * (a + c) + 0.5 * (a - c) * c2 + b * s2;
    let g1 = -(a - c) * s2 + 2.0 * b * c2;
    let g2 = -2.0 * (a - c) * c2 - 4.0 * b * s2;
    let e = g.sqrt();
    let e1 = g1 / (2.0 * e);
    let e2 = g2 / (2.0 * e) - g1 * g1 / (4.0 * g * e);
    (e, e1, e2)
}

/// Orthonormal basis of the orthogonal complement of xi.
fn tangent_frame(xi: &[f64]) -> Vec<Vec<f64>> {
    let d = xi.len();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    // skip the coordinate axis most aligned with xi
    let skip = xi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    for a in 0..d {
        if a == skip {
            continue;
        }
        let mut v = vec![0.0; d];
        v[a] = 1.0;
        let proj = dot(&v, xi);
        for (vi, xii) in v.iter_mut().zip(xi) {
            *vi -= proj * xii;
        }
        for f in &frame {
            let p = dot(&v, f);
            for (vi, fi) in v.iter_mut().zip(f) {
                *vi -= p * fi;
            }
        }
        let n = norm(&v);
        for vi in &mut v {
            *vi /= n;
        }
        frame.push(v);
    }
    frame
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// JSON body descriptor: {kind, d, params, center}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyDescriptor {
    pub kind: String,
    pub d: usize,
    pub params: serde_json::Value,
    pub center: Vec<f64>,
}

impl ConvexBody {
    pub fn to_descriptor(&self) -> BodyDescriptor {
        let (kind, params) = match &self.kind {
            BodyKind::Ball => ("ball".to_string(), serde_json::json!({})),
            BodyKind::Ellipsoid { sigma } => (
                "ellipsoid".to_string(),
                serde_json::json!({ "sigma": mat_to_rows(sigma) }),
            ),
            BodyKind::SupportPerturbation { sigma, terms } => (
                "support_perturbation".to_string(),
                serde_json::json!({ "sigma": mat_to_rows(sigma), "terms": terms }),
            ),
        };
        BodyDescriptor {
            kind,
            d: self.d,
            params,
            center: self.center.clone(),
        }
    }

    pub fn from_descriptor(desc: &BodyDescriptor) -> Result<ConvexBody> {
        match desc.kind.as_str() {
            "ball" => ConvexBody::ball_at(desc.d, desc.center.clone()),
            "ellipsoid" => {
                let sigma = rows_to_mat(desc.d, &desc.params)?;
                ConvexBody::ellipsoid(sigma, desc.center.clone())
            }
            "support_perturbation" => {
                let sigma = rows_to_mat(desc.d, &desc.params)?;
                let terms: Vec<HarmonicTerm> = serde_json::from_value(
                    desc.params
                        .get("terms")
                        .cloned()
                        .unwrap_or(serde_json::json!([])),
                )
                .map_err(|e| Error::validation(format!("bad perturbation terms: {e}")))?;
                ConvexBody::support_perturbation(sigma, terms, desc.center.clone())
            }
            other => Err(Error::validation(format!("unknown body kind '{other}'"))),
        }
    }
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j)).collect())
        .collect()
}

fn rows_to_mat(d: usize, params: &serde_json::Value) -> Result<Mat> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(
        params
            .get("sigma")
            .cloned()
            .ok_or_else(|| Error::validation("missing 'sigma'"))?,
    )
    .map_err(|e| Error::validation(format!("bad 'sigma': {e}")))?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::validation("'sigma' has wrong shape"));
    }
    let mut m = Mat::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}
