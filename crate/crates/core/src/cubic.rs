//! Real roots of a u^3 + b u^2 + c u + d = 0.
//!
//! [`real_roots`] is the closed-form route: the sign-preserving cube root
//! gives the lone real root, and the trigonometric form gives three real
//! roots without touching complex arithmetic. [`real_roots_oracle`] finds
//! the same roots by bisection between the critical points and exists to
//! cross-check the closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CubicCoeffs {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn delta0(&self) -> f64 {
        self.b * self.b - 3.0 * self.a * self.c
    }

    pub fn delta1(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d
    }

    pub fn eval(&self, u: f64) -> f64 {
        ((self.a * u + self.b) * u + self.c) * u + self.d
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    fn check(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cubic coefficients"));
        }
        if self.a == 0.0 {
            return Err(Error::NotCubic);
        }
        Ok(())
    }
}

/// Which closed-form expression produced the roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicBranch {
    /// C+ != 0 and one real root.
    SinglePlus,
    /// C+ != 0 and three real roots (trigonometric form).
    ThreeReal,
    /// C+ = 0, C- != 0 and one real root.
    SingleMinus,
    /// C+ = C- = 0: a triple root at -b / 3a.
    Triple,
}

/// Real roots in the order the closed form produces them, with multiplicity.
pub fn real_roots(c: &CubicCoeffs) -> Result<Vec<f64>> {
    real_roots_with_branch(c).map(|(r, _)| r)
}

pub fn real_roots_with_branch(c: &CubicCoeffs) -> Result<(Vec<f64>, CubicBranch)> {
    c.check()?;
    let (a, b) = (c.a, c.b);
    let d0 = c.delta0();
    let d1 = c.delta1();
    let disc = d1 * d1 - 4.0 * d0 * d0 * d0;

    if disc > 0.0 {
        let sq = disc.sqrt();
        // Q+ Q- = d0^3, so take the larger-magnitude one directly and
        // recover the other by division to avoid cancellation.
        let (q_plus, q_minus) = if d1 >= 0.0 {
            let qp = 0.5 * (d1 + sq);
            (qp, d0 * d0 * d0 / qp)
        } else {
            let qm = 0.5 * (d1 - sq);
            (d0 * d0 * d0 / qm, qm)
        };
        let c_plus = q_plus.cbrt();
        if c_plus != 0.0 {
            let u = -(b + c_plus + d0 / c_plus) / (3.0 * a);
            return Ok((vec![u], CubicBranch::SinglePlus));
        }
        let c_minus = q_minus.cbrt();
        if c_minus != 0.0 {
            let u = -(b + c_minus + d0 / c_minus) / (3.0 * a);
            return Ok((vec![u], CubicBranch::SingleMinus));
        }
        return Ok((vec![-b / (3.0 * a)], CubicBranch::Triple));
    }

    // Here |C+|^2 = d0, so C+ vanishes only when d0 = 0 (and then d1 = 0).
    if d0 > 0.0 {
        let theta = ((-disc).sqrt().atan2(d1)) / 3.0;
        let r = 2.0 * d0.sqrt();
        let tau = 2.0 * std::f64::consts::FRAC_PI_3;
        let u0 = -(b + r * theta.cos()) / (3.0 * a);
        let u1 = -(b + r * (theta + tau).cos()) / (3.0 * a);
        let u2 = -(b + r * (theta - tau).cos()) / (3.0 * a);
        return Ok((vec![u0, u1, u2], CubicBranch::ThreeReal));
    }

    let w = -b / (3.0 * a);
    Ok((vec![w, w, w], CubicBranch::Triple))
}

/// Real roots by bracketing and bisection, sorted ascending, with
/// multiplicity. Independent of the closed form.
pub fn real_roots_oracle(c: &CubicCoeffs) -> Result<Vec<f64>> {
    c.check()?;
    // Monic form u^3 + p u^2 + q u + r.
    let (p, q, r) = (c.b / c.a, c.c / c.a, c.d / c.a);
    let f = |u: f64| ((u + p) * u + q) * u + r;
    let bound = 1.0 + p.abs().max(q.abs()).max(r.abs());
    let scale = 1.0 + p.abs().max(q.abs()).max(r.abs());
    let zero_tol = 1e-13 * scale;

    // f' = 3u^2 + 2pu + q
    let disc = p * p - 3.0 * q;
    if disc <= 1e-14 * (p * p).max(q.abs()).max(1e-300) {
        let infl = -p / 3.0;
        if disc.abs() <= 1e-14 * (p * p).max(q.abs()).max(1e-300) && f(infl).abs() <= zero_tol {
            return Ok(vec![infl; 3]);
        }
        return Ok(vec![bisect(&f, -bound, bound)]);
    }
    let s = disc.sqrt();
    // Stable roots of the derivative.
    let sgn = if p >= 0.0 { 1.0 } else { -1.0 };
    let t = -(p + sgn * s);
    let mut c1 = t / 3.0;
    let mut c2 = q / t;
    if c1 > c2 {
        std::mem::swap(&mut c1, &mut c2);
    }
    let (f1, f2) = (f(c1), f(c2));
    let local_tol = zero_tol * (1.0 + c1.abs().max(c2.abs())).powi(3);

    if f1.abs() <= local_tol {
        let other = bisect(&f, c2, bound.max(c2 + 1.0));
        return Ok(sorted(vec![c1, c1, other]));
    }
    if f2.abs() <= local_tol {
        let other = bisect(&f, (-bound).min(c1 - 1.0), c1);
        return Ok(sorted(vec![other, c2, c2]));
    }
    if f1 > 0.0 && f2 < 0.0 {
        let lo = bisect(&f, (-bound).min(c1 - 1.0), c1);
        let mid = bisect(&f, c1, c2);
        let hi = bisect(&f, c2, bound.max(c2 + 1.0));
        return Ok(vec![lo, mid, hi]);
    }
    if f2 > 0.0 {
        Ok(vec![bisect(&f, (-bound).min(c1 - 1.0), c1)])
    } else {
        Ok(vec![bisect(&f, c2, bound.max(c2 + 1.0))])
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Bisection on a bracket [lo, hi] with a sign change (or a zero endpoint).
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
