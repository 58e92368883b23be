//! Shared numerical kernels: exactly-reduced trigonometry, Bessel functions,
//! adaptive quadrature, ball volumes and a small double-double arithmetic used
//! for boundary rechecks.

use std::f64::consts::PI;

/// sin(pi * x) with exact argument reduction: returns exactly 0.0 for integer
/// `x`, which several series evaluations rely on (integer last coordinates
/// must kill their terms exactly, not up to rounding).
pub fn sinpi(x: f64) -> f64 {
    if !x.is_finite() || x.abs() > 4.5e15 {
        // beyond this scale the integer part is not representable anyway
        return (PI * x).sin();
    }
    let n = x.round();
    let y = x - n; // in [-0.5, 0.5]
    let s = (PI * y).sin();
    if (n as i64) & 1 == 0 {
        s
    } else {
        -s
    }
}

/// cos(pi * x) with the same reduction as [`sinpi`].
pub fn cospi(x: f64) -> f64 {
    if !x.is_finite() || x.abs() > 4.5e15 {
        return (PI * x).cos();
    }
    let n = x.round();
    let y = x - n;
    let c = (PI * y).cos();
    if (n as i64) & 1 == 0 {
        c
    } else {
        -c
    }
}

/// sin(2 * pi * x).
pub fn sin2pi(x: f64) -> f64 {
    sinpi(2.0 * x)
}

/// cos(2 * pi * x).
pub fn cos2pi(x: f64) -> f64 {
    cospi(2.0 * x)
}

/// sin(pi * a * z) / z with the removable singularity at z = 0 evaluated as
/// its limit pi * a.
pub fn sinpi_over(a: f64, z: f64) -> f64 {
    if z.abs() < 1e-12 {
        PI * a
    } else {
        sinpi(a * z) / z
    }
}

/// Folds a real number into [-0.5, 0.5).
pub fn wrap_half(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

/// Fractional part in [0, 1).
pub fn fract01(t: f64) -> f64 {
    t - t.floor()
}

/// Volume of the d-dimensional Euclidean ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    // V_d = V_{d-2} * 2 pi / d, V_0 = 1, V_1 = 2
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 0 } else { 1 };
    while k < d {
        k += 2;
        v *= 2.0 * PI / k as f64;
    }
    v * r.powi(d as i32)
}

// ---------------------------------------------------------------------------
// Bessel functions J0, J1
// ---------------------------------------------------------------------------

/// Bessel function J0. Power series below z = 12, Hankel asymptotics above;
/// agrees with the integral representation to ~1e-12 over the tested range.
pub fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    if z <= 12.0 {
        j0_series(z)
    } else {
        hankel(0, z)
    }
}

/// Bessel function J1 (odd in z).
pub fn bessel_j1(z: f64) -> f64 {
    let s = if z < 0.0 { -1.0 } else { 1.0 };
    let z = z.abs();
    if z <= 12.0 {
        s * j1_series(z)
    } else {
        s * hankel(1, z)
    }
}

fn j0_series(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

fn j1_series(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 0.5 * z;
    let mut sum = term;
    for k in 1..200 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// Hankel large-argument expansion for J_nu, nu in {0, 1}.
fn hankel(nu: u32, z: f64) -> f64 {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let mut p = 1.0;
    let mut q = (mu - 1.0) / (8.0 * z);
    let mut term_p = 1.0;
    let mut term_q = q;
    // a_k(mu) recursions; truncate before terms start growing
    let mut k = 1u32;
    loop {
        // next factor for P (even index 2k) and Q (odd index 2k+1)
        let f1 = mu - ((4 * k - 3) as f64).powi(2);
        let f2 = mu - ((4 * k - 1) as f64).powi(2);
        term_p *= -f1 * f2 / ((2 * k * (2 * k - 1)) as f64 * 64.0 * z * z);
        let f3 = mu - ((4 * k + 1) as f64).powi(2);
        term_q *= -f2 * f3 / ((2 * k * (2 * k + 1)) as f64 * 64.0 * z * z);
        if term_p.abs() < 1e-17 && term_q.abs() < 1e-17 {
            break;
        }
        p += term_p;
        q += term_q;
        k += 1;
        if k > 12 {
            break;
        }
    }
    let chi = z - (0.5 * nu as f64 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// J_nu(z) by trapezoid quadrature of (1/pi) * \int_0^pi cos(nu t - z sin t) dt.
/// Exponentially convergent in the node count; used as an independent oracle
/// for the series/asymptotic path.
pub fn bessel_j_quadrature(nu: u32, z: f64) -> f64 {
    let m = (4.0 * z.abs()).ceil() as usize + 60;
    let h = PI / m as f64;
    // endpoint values carry weight 1/2
    let f = |t: f64| (nu as f64 * t - z * t.sin()).cos();
    let mut acc = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        acc += f(i as f64 * h);
    }
    acc * h / PI
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, 54)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let lm = 0.5 * (a + c);
    let rm = 0.5 * (c + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (c - a) / 6.0 * (fa + 4.0 * flm + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, c, fa, fc, flm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, c, b, fc, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

// ---------------------------------------------------------------------------
// Double-double helpers (for membership rechecks near the body boundary)
// ---------------------------------------------------------------------------

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2; enough precision to settle
/// membership decisions that fall within 1e-12 of the boundary.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, x: f64) -> Dd {
        self.mul(Dd::from(x))
    }

    /// Fractional part folded into [-0.5, 0.5).
    pub fn wrap_half(self) -> Dd {
        let n = (self.hi + 0.5).floor();
        self.sub(Dd::from(n))
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}
