//! Special functions: spherical Bessel families, Riccati phases, Laguerre polynomials.

use std::f64::consts::{FRAC_PI_2, PI};

const SERIES_CUTOFF: f64 = 1e-3;
const MILLER_PAD: usize = 30;
const RESCALE_AT: f64 = 1e200;

/// Fills `out[l]` with j_l(x) for l = 0..out.len().
pub fn spherical_j_all(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let lmax = n - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        let mut lead = 1.0;
        for (l, slot) in out.iter_mut().enumerate() {
            if l > 0 {
                lead *= x / (2 * l + 1) as f64;
            }
            let a = (2 * l + 3) as f64;
            let b = (2 * l + 5) as f64;
            *slot = lead * (1.0 - x2 / (2.0 * a) + x2 * x2 / (8.0 * a * b));
        }
        return;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if x > lmax as f64 {
        out[0] = j0;
        if lmax >= 1 {
            out[1] = j1;
        }
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return;
    }
    // Miller: downward from a start order well above both lmax and x.
    let start = lmax.max(x.ceil() as usize) + MILLER_PAD;
    let mut upper = 0.0;
    let mut current = 1e-300;
    for l in (1..=start).rev() {
        let lower = (2 * l + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        if current.abs() > RESCALE_AT {
            current /= RESCALE_AT;
            upper /= RESCALE_AT;
            for v in out.iter_mut() {
                *v /= RESCALE_AT;
            }
        }
        if l - 1 <= lmax {
            out[l - 1] = current;
        }
    }
    // current = unnormalized j0, out[1] = unnormalized j1
    let scale = if j0.abs() >= j1.abs() || lmax == 0 {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
}

pub fn spherical_j(l: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; l + 1];
    spherical_j_all(x, &mut buf);
    buf[l]
}

/// Fills `out[l]` with y_l(x) for l = 0..out.len(); x > 0.
pub fn spherical_y_all(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if n > 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for l in 1..n.saturating_sub(1) {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
}

pub fn spherical_y(l: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; l + 1];
    spherical_y_all(x, &mut buf);
    buf[l]
}

/// Riccati functions (x j_l(x), x y_l(x)).
pub fn riccati(l: usize, x: f64) -> (f64, f64) {
    (x * spherical_j(l, x), x * spherical_y(l, x))
}

fn hankel_poly_arg(l: usize, x: f64) -> f64 {
    // Q_l(x) = Σ_k (l+k)!/(k!(l-k)!) (i/(2x))^k
    let mut coeff = 1.0;
    let mut re = 0.0;
    let mut im = 0.0;
    let t = 1.0 / (2.0 * x);
    let mut pow = 1.0;
    for k in 0..=l {
        let term = coeff * pow;
        match k % 4 {
            0 => re += term,
            1 => im += term,
            2 => re -= term,
            _ => im -= term,
        }
        coeff *= ((l + k + 1) * (l - k)) as f64 / (k + 1) as f64;
        pow *= t;
    }
    im.atan2(re)
}

/// Continuous phase θ(x) of the free regular Riccati solution:
/// x j_l(x) = M(x) sin θ(x), −x y_l(x) = M(x) cos θ(x), with θ(0⁺) = 0.
pub fn free_phase(l: usize, x: f64) -> f64 {
    if l == 0 {
        return x;
    }
    let lf = l as f64;
    let mut xx = x.max(4.0 * lf * lf + 10.0);
    let mut arg = hankel_poly_arg(l, xx);
    while xx > x {
        xx = (xx * 0.97).max(x);
        let raw = hankel_poly_arg(l, xx);
        let turns = ((arg - raw) / (2.0 * PI)).round();
        arg = raw + turns * 2.0 * PI;
    }
    x - lf * FRAC_PI_2 + arg
}

/// Generalized Laguerre polynomial L_n^(a)(z).
pub fn laguerre(n: usize, a: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - z) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}
