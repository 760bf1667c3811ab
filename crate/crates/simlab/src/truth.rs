//! Closed-form c.d.f.s of `e_i - e_j` for the simulated error laws.

use crate::design::ErrorLaw;
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// C.d.f. of the difference of two independent errors drawn from `law`.
pub fn true_f0(law: ErrorLaw) -> fn(f64) -> f64 {
    match law {
        // the difference of two standard Gumbel variables is standard logistic
        ErrorLaw::ExtremeValue => logistic_cdf,
        ErrorLaw::Normal => normal_difference_cdf,
        ErrorLaw::Logistic => logistic_difference_cdf,
    }
}

pub fn logistic_cdf(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `N(0, pi^2/3)`.
pub fn normal_difference_cdf(t: f64) -> f64 {
    let sd = (PI * PI / 3.0).sqrt();
    0.5 * erfc(-t / (sd * SQRT_2))
}

/// Difference of two logistic variables with scale `1/sqrt(2)`.
pub fn logistic_difference_cdf(t: f64) -> f64 {
    let u = t * SQRT_2;
    if u < 0.0 {
        return 1.0 - standard_logistic_difference(-u);
    }
    standard_logistic_difference(u)
}

/// `(1 - (1 + u) e^-u) / (1 - e^-u)^2` for `u >= 0`.
fn standard_logistic_difference(u: f64) -> f64 {
    if u < 1e-2 {
        let u2 = u * u;
        return 0.5 + u * (1.0 / 6.0 - u2 * (1.0 / 180.0 - u2 * (1.0 / 5040.0 - u2 / 151_200.0)));
    }
    let e = (-u).exp();
    let d = -(-u).exp_m1();
    (1.0 - (1.0 + u) * e) / (d * d)
}

/// Generalized inverse `inf { t : f(t) >= p }` of a continuous c.d.f. by bisection.
pub fn quantile(f: impl Fn(f64) -> f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (-64.0, 64.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    hi
}
