//! Local polynomial interpolation on (possibly non-uniform) nodes.

/// Index range of `width` consecutive nodes centered on `i`, clipped to `0..len`.
pub fn stencil(i: usize, len: usize, width: usize) -> std::ops::Range<usize> {
    let width = width.min(len);
    let half = width / 2;
    let start = i.saturating_sub(half).min(len - width);
    start..start + width
}

/// Derivative at `x0` of the Lagrange interpolant through `(xs, ys)`.
pub fn lagrange_derivative(x0: f64, xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        let mut dj = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut term = 1.0 / (xs[j] - xs[k]);
            for m in 0..n {
                if m != j && m != k {
                    term *= (x0 - xs[m]) / (xs[j] - xs[m]);
                }
            }
            dj += term;
        }
        total += dj * ys[j];
    }
    total
}

pub fn lagrange_value(x0: f64, xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        let mut l = 1.0;
        for m in 0..n {
            if m != j {
                l *= (x0 - xs[m]) / (xs[j] - xs[m]);
            }
        }
        total += l * ys[j];
    }
    total
}

/// Fourth-order derivative estimates at every node (5-point stencils).
pub fn derivative_at_nodes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let r = stencil(i, xs.len(), 5);
            lagrange_derivative(xs[i], &xs[r.clone()], &ys[r])
        })
        .collect()
}

/// Running integral of the piecewise-cubic interpolant of `(xs, ys)`,
/// starting at 0 on the first node.
pub fn cumulative_integral(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    let mut out = Vec::with_capacity(xs.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        let (a, b) = (xs[i], xs[i + 1]);
        let r = if xs.len() >= 4 {
            // nodes i-1..=i+2 clipped
            let start = i.saturating_sub(1).min(xs.len() - 4);
            start..start + 4
        } else {
            0..xs.len()
        };
        let (sx, sy) = (&xs[r.clone()], &ys[r]);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        acc += h * (lagrange_value(c - G * h, sx, sy) + lagrange_value(c + G * h, sx, sy));
        out.push(acc);
    }
    out
}
