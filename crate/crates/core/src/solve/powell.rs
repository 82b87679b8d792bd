//! Powell's conjugate-direction method with Brent line searches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618034;
const CGOLD: f64 = 0.381_966_0;
const GROW_LIMIT: f64 = 110.0;
const MAX_BRACKET_STEPS: usize = 50;
const MAX_BRENT_ITER: usize = 500;
// Stand-in for non-finite objective values so the interpolation stays finite.
const BAD_VALUE: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowellConfig {
    /// Terminate once an iteration moves `x` by less than this (max norm).
    pub tolx: f64,
    /// Relative objective tolerance per iteration.
    pub ftol: f64,
    pub max_iter: usize,
    /// Largest Euclidean move a single line search may make; `None` leaves
    /// the bracket unbounded.
    pub max_step: Option<f64>,
}

impl Default for PowellConfig {
    fn default() -> Self {
        Self { tolx: 1e-5, ftol: 1e-8, max_iter: 200, max_step: Some(0.5) }
    }
}

impl PowellConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolx > 0.0 && self.ftol > 0.0) {
            return Err(Error::InvalidArgument("Powell tolerances must be positive".into()));
        }
        if self.max_step.is_some_and(|m| !(m > 0.0)) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowellResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub n_iter: usize,
    /// False when `max_iter` was reached first.
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    n: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.n += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            BAD_VALUE
        }
    }
}

/// Minimises `f` from `x0`.
///
/// Each iteration line-minimises along every direction of the set, then
/// tries the extrapolated point `2x − x_prev` and, when Powell's test
/// passes, replaces the direction of largest decrease with the net
/// displacement.
pub fn powell_minimize<F>(f: F, x0: &[f64], cfg: &PowellConfig) -> Result<PowellResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    if n == 0 || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("start point must be finite and non-empty".into()));
    }
    let mut fun = Counted { f, n: 0 };
    let mut x = x0.to_vec();
    let mut fval = fun.eval(&x);
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let line_tol = cfg.tolx * 100.0;
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);
    let mut x_prev = x.clone();
    let mut iter = 0;
    // whether `dirs` is still the coordinate basis
    let mut fresh = true;
    let converged = loop {
        let fx = fval;
        let mut big_ind = 0;
        let mut delta = 0.0;
        for (i, d) in dirs.iter().enumerate() {
            let f_before = fval;
            let (fnew, xnew, _) = line_search(&mut fun, &x, d, fval, line_tol, max_step);
            fval = fnew;
            x = xnew;
            if f_before - fval > delta {
                delta = f_before - fval;
                big_ind = i;
            }
        }
        iter += 1;
        let moved = x.iter().zip(&x_prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let stalled = 2.0 * (fx - fval) <= cfg.ftol * (fx.abs() + fval.abs()) + 1e-20 || moved < cfg.tolx;
        if stalled && fresh {
            break true;
        }
        if iter >= cfg.max_iter {
            break false;
        }
        if stalled {
            // a degenerate direction set can crawl; confirm with a clean basis
            for (i, d) in dirs.iter_mut().enumerate() {
                d.iter_mut().enumerate().for_each(|(k, v)| *v = (k == i) as u8 as f64);
            }
            fresh = true;
            x_prev.clone_from(&x);
            continue;
        }
        let disp: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
        let extrap: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| 2.0 * a - b).collect();
        x_prev.clone_from(&x);
        let fx2 = fun.eval(&extrap);
        if fx > fx2 {
            let mut t = 2.0 * (fx + fx2 - 2.0 * fval);
            let tmp = fx - fval - delta;
            t *= tmp * tmp;
            let tmp = fx - fx2;
            t -= delta * tmp * tmp;
            if t < 0.0 {
                let (fnew, xnew, step) = line_search(&mut fun, &x, &disp, fval, line_tol, max_step);
                fval = fnew;
                x = xnew;
                if let Some(step) = step {
                    dirs[big_ind] = dirs[n - 1].clone();
                    let norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
                    dirs[n - 1] = step.iter().map(|v| v / norm).collect();
                    fresh = false;
                }
            }
        }
    };
    let n_evals = fun.n;
    Ok(PowellResult { x, f: fval, n_evals, n_iter: iter, converged })
}

/// Minimises along `d` from `x`. Returns the new value, point and the
/// realised step `α·d` (`None` when `α = 0` or `d = 0`).
fn line_search<F: FnMut(&[f64]) -> f64>(
    fun: &mut Counted<F>,
    x: &[f64],
    d: &[f64],
    f0: f64,
    tol: f64,
    max_step: f64,
) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (f0, x.to_vec(), None);
    }
    let max_alpha = max_step / norm;
    let point = |a: f64| -> Vec<f64> { x.iter().zip(d).map(|(xi, di)| xi + a * di).collect() };
    let mut g = |a: f64| {
        if a.abs() > max_alpha {
            return BAD_VALUE;
        }
        let p = point(a);
        fun.eval(&p)
    };
    let (alpha, fa) = brent(&mut g, f0, tol);
    if !(fa < f0) || alpha == 0.0 {
        return (f0, x.to_vec(), None);
    }
    let step: Vec<f64> = d.iter().map(|v| v * alpha).collect();
    (fa, point(alpha), Some(step))
}

/// Bracket from `(0, 1)`: returns `(xa, xb, xc, fa, fb, fc)` with `fb` the
/// lowest value seen.
fn bracket<G: FnMut(f64) -> f64>(g: &mut G, f0: f64) -> (f64, f64, f64, f64, f64, f64) {
    let (mut xa, mut xb) = (0.0, 1.0);
    let (mut fa, mut fb) = (f0, g(xb));
    if fb > fa {
        std::mem::swap(&mut xa, &mut xb);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut xc = xb + GOLDEN * (xb - xa);
    let mut fc = g(xc);
    let mut steps = 0;
    while fc < fb {
        if steps >= MAX_BRACKET_STEPS {
            break;
        }
        steps += 1;
        let tmp1 = (xb - xa) * (fb - fc);
        let tmp2 = (xb - xc) * (fb - fa);
        let val = tmp2 - tmp1;
        let denom = 2.0 * val.abs().max(1e-21).copysign(val);
        let mut w = xb - ((xb - xc) * tmp2 - (xb - xa) * tmp1) / denom;
        let wlim = xb + GROW_LIMIT * (xc - xb);
        let mut fw;
        if (w - xc) * (xb - w) > 0.0 {
            fw = g(w);
            if fw < fc {
                return (xb, w, xc, fb, fw, fc);
            } else if fw > fb {
                return (xa, xb, w, fa, fb, fw);
            }
            w = xc + GOLDEN * (xc - xb);
            fw = g(w);
        } else if (w - wlim) * (wlim - xc) >= 0.0 {
            w = wlim;
            fw = g(w);
        } else if (w - wlim) * (xc - w) > 0.0 {
            fw = g(w);
            if fw < fc {
                xb = xc;
                xc = w;
                w = xc + GOLDEN * (xc - xb);
                fb = fc;
                fc = fw;
                fw = g(w);
            }
        } else {
            w = xc + GOLDEN * (xc - xb);
            fw = g(w);
        }
        xa = xb;
        xb = xc;
        xc = w;
        fa = fb;
        fb = fc;
        fc = fw;
    }
    (xa, xb, xc, fa, fb, fc)
}

/// Brent's parabolic/golden-section minimiser on a bracketed interval.
/// Returns the abscissa and value of the best point found.
fn brent<G: FnMut(f64) -> f64>(g: &mut G, f0: f64, tol: f64) -> (f64, f64) {
    let (xa, xb, xc, _fa, fb, fc) = bracket(g, f0);
    if fc < fb {
        // bracketing gave up while still descending
        return (xc, fc);
    }
    let (mut a, mut b) = if xa < xc { (xa, xc) } else { (xc, xa) };
    let (mut x, mut w, mut v) = (xb, xb, xb);
    let (mut fx, mut fw, mut fv) = (fb, fb, fb);
    let mut deltax: f64 = 0.0;
    let mut rat: f64 = 0.0;
    for _ in 0..MAX_BRENT_ITER {
        let tol1 = tol * x.abs() + 1e-11;
        let tol2 = 2.0 * tol1;
        let xmid = 0.5 * (a + b);
        if (x - xmid).abs() < tol2 - 0.5 * (b - a) {
            break;
        }
        if deltax.abs() <= tol1 {
            deltax = if x >= xmid { a - x } else { b - x };
            rat = CGOLD * deltax;
        } else {
            let tmp1 = (x - w) * (fx - fv);
            let mut tmp2 = (x - v) * (fx - fw);
            let mut p = (x - v) * tmp2 - (x - w) * tmp1;
            tmp2 = 2.0 * (tmp2 - tmp1);
            if tmp2 > 0.0 {
                p = -p;
            }
            tmp2 = tmp2.abs();
            let dx_temp = deltax;
            deltax = rat;
            if p > tmp2 * (a - x) && p < tmp2 * (b - x) && p.abs() < (0.5 * tmp2 * dx_temp).abs() {
                rat = p / tmp2;
                let u = x + rat;
                if (u - a) < tol2 || (b - u) < tol2 {
                    rat = if xmid - x >= 0.0 { tol1 } else { -tol1 };
                }
            } else {
                deltax = if x >= xmid { a - x } else { b - x };
                rat = CGOLD * deltax;
            }
        }
        let u = if rat.abs() < tol1 { x + tol1.copysign(rat) } else { x + rat };
        let fu = g(u);
        if fu > fx {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        } else {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        }
    }
    if f0 <= fx {
        (0.0, f0)
    } else {
        (x, fx)
    }
}
