//! Numerical integration: adaptive Gauss-Kronrod and sampled-grid rules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive G7/K15 quadrature: bisect the interval with the largest error
/// estimate until the total estimate is below `max(abs_tol, rel_tol*|I|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Integral {
    const MAX_INTERVALS: usize = 20_000;
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || pieces.len() >= MAX_INTERVALS {
            return Integral {
                value: total,
                error: err,
                evaluations,
            };
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Interval cannot be split further in floating point.
            let total: f64 = pieces.iter().map(|p| p.2).sum::<f64>();
            return Integral {
                value: total + gk15(&f, lo, hi).0,
                error: err,
                evaluations,
            };
        }
        let left = gk15(&f, lo, mid);
        let right = gk15(&f, mid, hi);
        evaluations += 30;
        pieces.push((lo, mid, left.0, left.1));
        pieces.push((mid, hi, right.0, right.1));
    }
}

/// Composite Simpson rule over uniformly spaced samples `y[0..=n]` with
/// spacing `h`. Falls back to Simpson 3/8 on the last three intervals when
/// the number of intervals is odd.
pub fn simpson_uniform(y: &[f64], h: f64) -> f64 {
    let n = y.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ => {
            let even_end = if n % 2 == 0 { n } else { n - 3 };
            let mut total = 0.0;
            if even_end > 0 {
                let mut s = y[0] + y[even_end];
                for (i, v) in y.iter().enumerate().take(even_end).skip(1) {
                    s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
                }
                total += h / 3.0 * s;
            }
            if n % 2 == 1 {
                let k = even_end;
                total += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
            }
            total
        }
    }
}

/// Trapezoid rule over arbitrary abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Exact integral of the piecewise-linear interpolant of `(x, g)` against
/// `cos(w t + p)`. Stays accurate when `w` is far above the sampling rate.
pub fn linear_times_cos(x: &[f64], g: &[f64], w: f64, p: f64) -> f64 {
    if w == 0.0 {
        return trapezoid(x, g) * p.cos();
    }
    let mut total = 0.0;
    for (xs, gs) in x.windows(2).zip(g.windows(2)) {
        let (a, b) = (xs[0], xs[1]);
        let h = b - a;
        if h <= 0.0 {
            continue;
        }
        let slope = (gs[1] - gs[0]) / h;
        // int (g0 + slope (t-a)) cos(w t + p) dt
        let sa = (w * a + p).sin();
        let sb = (w * b + p).sin();
        let ca = (w * a + p).cos();
        let cb = (w * b + p).cos();
        total += (gs[1] * sb - gs[0] * sa) / w + slope * (cb - ca) / (w * w);
    }
    total
}

/// Exact integral of the piecewise-linear interpolant of `(x, g)` against
/// `sin(w t + p)`.
pub fn linear_times_sin(x: &[f64], g: &[f64], w: f64, p: f64) -> f64 {
    linear_times_cos(x, g, w, p - std::f64::consts::FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_polynomials_and_oscillatory() {
        let r = integrate_adaptive(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 0.0);
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
        let r = integrate_adaptive(|x| (40.0 * x).cos() * (-x * x).exp(), -3.0, 3.0, 1e-12, 0.0);
        // sqrt(pi) exp(-400) at infinity is ~0; tail beyond 3 is e^-9 scale
        let exact = PI.sqrt() * (-400.0f64).exp();
        assert!((r.value - exact).abs() < 1e-4, "{}", r.value);
        let r = integrate_adaptive(|x| (13.0 * x).sin().powi(2), 0.0, PI, 1e-12, 0.0);
        assert!((r.value - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_even_and_odd() {
        let n = 10;
        let h = 1.0 / n as f64;
        let y: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&y, h) - 0.25).abs() < 1e-14);
        let n = 9;
        let h = 1.0 / n as f64;
        let y: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&y, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn filon_linear_is_exact() {
        let x = [0.0, 0.3, 1.0];
        let g = [1.0, 1.6, 3.0]; // 1 + 2t
        let w = 1e4;
        let exact = {
            let f = |t: f64| (1.0 + 2.0 * t) * (w * t).sin() / w + 2.0 * (w * t).cos() / (w * w);
            f(1.0) - f(0.0)
        };
        assert!((linear_times_cos(&x, &g, w, 0.0) - exact).abs() < 1e-15);
    }
}
