//! Fixed-step integration and quadrature helpers shared by the geometry code.

use nalgebra::SVector;

/// One classical fourth-order Runge–Kutta step for `y' = f(t, y)`.
///
/// The right-hand side is fallible so geometric evaluators can abort the
/// integration (chart singularities, leaving the domain) mid-step.
pub fn rk4_step<const N: usize, E, F>(f: &mut F, t: f64, y: &SVector<f64, N>, h: f64) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Composite Simpson rule on a uniform grid with spacing `h`.
///
/// An odd number of panels is closed with Simpson's 3/8 rule on the last
/// three panels. Two samples fall back to the trapezoid rule.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let panels = n - 1;
            let (simpson_end, tail) = if panels.is_multiple_of(2) {
                (n - 1, None)
            } else {
                (n - 4, Some(n - 4))
            };
            let mut acc = 0.0;
            let mut i = 0;
            while i + 2 <= simpson_end {
                acc += values[i] + 4.0 * values[i + 1] + values[i + 2];
                i += 2;
            }
            let mut total = acc * h / 3.0;
            if let Some(j) = tail {
                total += 3.0 * h / 8.0 * (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
            }
            total
        }
    }
}

/// Composite Simpson rule on an arbitrary increasing grid.
///
/// Each pair of panels is integrated exactly for quadratics; a trailing odd
/// panel uses the quadratic through the last three nodes.
pub fn simpson_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        total += parabola_pair(x[i], x[i + 1], x[i + 2], y[i], y[i + 1], y[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // last single panel [x[n-2], x[n-1]] from the parabola through the last three nodes
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let (y0, y1, y2) = (y[n - 3], y[n - 2], y[n - 1]);
        total += parabola_integral(x0, x1, x2, y0, y1, y2, x1, x2);
    }
    total
}

fn parabola_pair(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    if h0 <= 0.0 || h1 <= 0.0 {
        return 0.5 * h0 * (y0 + y1) + 0.5 * h1 * (y1 + y2);
    }
    let hs = h0 + h1;
    hs / 6.0 * (y0 * (2.0 - h1 / h0) + y1 * hs * hs / (h0 * h1) + y2 * (2.0 - h0 / h1))
}

#[allow(clippy::too_many_arguments)]
fn parabola_integral(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, a: f64, b: f64) -> f64 {
    // Lagrange basis integrated exactly over [a, b]
    let prim = |x: f64, xa: f64, xb: f64| x * x * x / 3.0 - (xa + xb) * x * x / 2.0 + xa * xb * x;
    let l0 = (prim(b, x1, x2) - prim(a, x1, x2)) / ((x0 - x1) * (x0 - x2));
    let l1 = (prim(b, x0, x2) - prim(a, x0, x2)) / ((x1 - x0) * (x1 - x2));
    let l2 = (prim(b, x0, x1) - prim(a, x0, x1)) / ((x2 - x0) * (x2 - x1));
    y0 * l0 + y1 * l1 + y2 * l2
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_rec(&mut f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Brent's derivative-free minimizer on `[a, b]`. Returns `(x_min, f(x_min))`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    type Field = dyn FnMut(f64, &Vector2<f64>) -> Result<Vector2<f64>, ()>;

    #[test]
    fn rk4_harmonic_oscillator_is_fourth_order() {
        let mut f = |_t: f64, y: &Vector2<f64>| -> Result<Vector2<f64>, ()> { Ok(Vector2::new(y[1], -y[0])) };
        let run = |n: usize, f: &mut Field| {
            let h = 1.0 / n as f64;
            let mut y = Vector2::new(0.0, 1.0);
            let mut g = |t: f64, y: &Vector2<f64>| f(t, y);
            for i in 0..n {
                y = rk4_step(&mut g, i as f64 * h, &y, h).unwrap();
            }
            (y[0] - 1f64.sin()).abs()
        };
        let e1 = run(20, &mut f);
        let e2 = run(40, &mut f);
        let order = (e1 / e2).log2();
        assert!(order > 3.8 && order < 4.2, "order {order}");
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.1;
        for n in [3usize, 4, 5, 8, 11] {
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            let exact = ((n - 1) as f64 * h).powi(4) / 4.0;
            assert!((simpson_uniform(&vals, h) - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn nonuniform_simpson_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.35, 0.4, 0.9, 1.0, 1.7];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        let exact = 1.7f64.powi(3) - 0.5 * 1.7 * 1.7 + 2.0 * 1.7;
        assert!((simpson_nonuniform(&x, &y) - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_simpson_matches_closed_form() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn brent_finds_parabola_vertex() {
        let (x, fx) = brent_minimize(|x| (x - 0.3).powi(2) + 1.0, -2.0, 3.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-14);
    }
}
