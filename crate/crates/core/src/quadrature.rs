//! Small interpolation, differentiation and quadrature kernels on
//! (possibly nonuniform) sample points.

/// Lagrange basis weights at `x` for the nodes `xs`.
pub fn lagrange_weights(xs: &[f64], x: f64, out: &mut [f64]) {
    debug_assert_eq!(xs.len(), out.len());
    for (i, w) in out.iter_mut().enumerate() {
        let mut p = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j != i {
                p *= (x - xj) / (xs[i] - xj);
            }
        }
        *w = p;
    }
}

/// Weights of the derivative at `x` of the interpolating polynomial through `xs`.
pub fn derivative_weights(xs: &[f64], x: f64, out: &mut [f64]) {
    let n = xs.len();
    debug_assert_eq!(n, out.len());
    for i in 0..n {
        let mut denom = 1.0;
        for j in 0..n {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        // d/dx Π_{j≠i}(x − x_j) = Σ_k Π_{j≠i,k}(x − x_j)
        let mut num = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut p = 1.0;
            for j in 0..n {
                if j != i && j != k {
                    p *= x - xs[j];
                }
            }
            num += p;
        }
        out[i] = num / denom;
    }
}

/// Composite Simpson rule on `[a, b]` with `panels` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Integral of tabulated values on nonuniform nodes: Simpson on pairs of
/// panels (exact for quadratics), a quadratic fit for a leftover panel,
/// trapezoid when fewer than three nodes exist.
pub fn integrate_samples(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len();
    debug_assert_eq!(n, ys.len());
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (ts[1] - ts[0]) * (ys[0] + ys[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        total += simpson_pair(&ts[i..i + 3], &ys[i..i + 3]);
        i += 2;
    }
    if i + 1 < n {
        // one panel left: integrate the quadratic through the last three nodes over it
        total += quadratic_panel(&ts[n - 3..], &ys[n - 3..]);
    }
    total
}

fn simpson_pair(t: &[f64], y: &[f64]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let h = h0 + h1;
    h / 6.0
        * (y[0] * (2.0 - h1 / h0) + y[1] * h * h / (h0 * h1) + y[2] * (2.0 - h0 / h1))
}

/// Integral over `[t[1], t[2]]` of the quadratic through the three nodes.
fn quadratic_panel(t: &[f64], y: &[f64]) -> f64 {
    let (a, b) = (t[1], t[2]);
    // exact for quadratics: 3-point Gauss–Legendre on [a, b]
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let r = (0.6f64).sqrt();
    let nodes = [mid - half * r, mid, mid + half * r];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut w = [0.0; 3];
    let mut s = 0.0;
    for (x, wq) in nodes.iter().zip(weights) {
        lagrange_weights(t, *x, &mut w);
        s += wq * (w[0] * y[0] + w[1] * y[1] + w[2] * y[2]);
    }
    s * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_is_exact_for_cubics() {
        let xs = [0.0, 0.3, 0.45, 1.0];
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let mut w = [0.0; 4];
        lagrange_weights(&xs, 0.7, &mut w);
        let v: f64 = xs.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
        assert!((v - f(0.7)).abs() < 1e-14);
    }

    #[test]
    fn derivative_weights_exact_for_quartics() {
        let xs = [0.0, 0.1, 0.25, 0.3, 0.42];
        let f = |x: f64| x.powi(4) - x * x + 3.0;
        let df = |x: f64| 4.0 * x.powi(3) - 2.0 * x;
        let mut w = [0.0; 5];
        derivative_weights(&xs, 0.25, &mut w);
        let d: f64 = xs.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
        assert!((d - df(0.25)).abs() < 1e-11);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nonuniform_samples_exact_for_quadratics() {
        let ts = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t * t + 1.0).collect();
        assert!((integrate_samples(&ts, &ys) - 2.0).abs() < 1e-14);
        let ts = [0.0, 0.2, 0.5, 1.0];
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t * t + 1.0).collect();
        assert!((integrate_samples(&ts, &ys) - 2.0).abs() < 1e-14);
    }
}
