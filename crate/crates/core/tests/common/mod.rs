//! Shared oracles for the integration tests: quadrature routes to the
//! non-local operator that are independent of the grid discretization, plus
//! small statistical helpers. Everything here is test-side only.
#![allow(dead_code)]

use levy_rosmac::fpe::DensityGrid;
use levy_rosmac::model::State;
use levy_rosmac::stable::levy_constant;
use std::f64::consts::PI;

/// Composite Simpson rule with n (even) intervals.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Direct quadrature of the truncated-domain jump operator
/// sigma^alpha c(1,alpha) int_0^inf (p~(x+u) + p~(x-u) - 2 p(x)) u^(-1-alpha) du
/// with p~ = p inside [lo, hi] and 0 outside, evaluated at an interior x.
///
/// The singular end is handled by a second-order Taylor zone below `delta`;
/// the rest is integrated over dyadic segments split additionally at the
/// two boundary-kink distances, with the constant tail beyond the farther
/// boundary in closed form.
pub fn nonlocal_oracle<F: Fn(f64) -> f64>(
    p: F,
    x: f64,
    alpha: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let c = levy_constant(alpha).unwrap();
    let sa = sigma.powf(alpha);
    let px = p(x);
    let p_trunc = |z: f64| if (lo..=hi).contains(&z) { p(z) } else { 0.0 };

    let delta = 1e-6f64;
    let fd = 1e-4;
    let pdd = (p(x + fd) + p(x - fd) - 2.0 * px) / (fd * fd);
    let near = pdd * delta.powf(2.0 - alpha) / (2.0 - alpha);

    let g = |u: f64| (p_trunc(x + u) + p_trunc(x - u) - 2.0 * px) * u.powf(-1.0 - alpha);
    let d_hi = hi - x;
    let d_lo = x - lo;
    let r = d_hi.max(d_lo);

    let mut pts = vec![delta];
    let mut t = delta;
    while t < r {
        t *= 2.0;
        pts.push(t.min(r));
    }
    for kink in [d_hi, d_lo] {
        if kink > delta && kink < r {
            pts.push(kink);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut far = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            far += composite_simpson(&g, w[0], w[1], 128);
        }
    }
    let tail = -2.0 * px * r.powf(-alpha) / alpha;
    sa * c * (near + far + tail)
}

/// Fourier route for the operator acting on an (untruncated) Gaussian
/// p(z) = exp(-(z-x0)^2 / (2 s^2)): the generator has symbol -|xi|^alpha, so
/// A p(x) = -sigma^alpha s sqrt(2/pi) int_0^inf xi^alpha e^(-s^2 xi^2 / 2) cos(xi (x-x0)) dxi.
/// The substitution xi = t^2 removes the derivative singularity at 0.
pub fn gaussian_spectral_oracle(x: f64, x0: f64, s: f64, alpha: f64, sigma: f64) -> f64 {
    let dx = x - x0;
    let integrand = |t: f64| {
        let xi = t * t;
        2.0 * t * xi.powf(alpha) * (-0.5 * s * s * xi * xi).exp() * (xi * dx).cos()
    };
    let upper = (16.0 / s).sqrt();
    let integral = composite_simpson(&integrand, 0.0, upper, 8192);
    -sigma.powf(alpha) * s * (2.0 / PI).sqrt() * integral
}

/// Two-sample Kolmogorov-Smirnov statistic (sorts in place).
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Normalized 2-D histogram of endpoints over the given grid geometry,
/// endpoints clamped into the domain.
pub fn histogram_density(
    points: &[State],
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
) -> DensityGrid {
    let mut grid = DensityGrid::uniform(x_min, x_max, y_min, y_max, nx, ny);
    grid.values.iter_mut().for_each(|v| *v = 0.0);
    let hx = grid.hx();
    let hy = grid.hy();
    for s in points {
        let i = (((s.x - x_min) / hx).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let j = (((s.y - y_min) / hy).floor() as isize).clamp(0, ny as isize - 1) as usize;
        grid.values[j * nx + i] += 1.0;
    }
    let norm = 1.0 / (points.len() as f64 * hx * hy);
    grid.values.iter_mut().for_each(|v| *v *= norm);
    grid
}

/// L1 distance between two densities on identical grids.
pub fn l1_distance(a: &DensityGrid, b: &DensityGrid) -> f64 {
    assert_eq!(a.nx, b.nx);
    assert_eq!(a.ny, b.ny);
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.hx()
        * a.hy()
}
