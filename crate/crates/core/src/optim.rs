//! Unconstrained minimization: BFGS with a backtracking line search, falling
//! back to Nelder-Mead when the line search cannot make progress.

#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Convergence when the gradient's max-norm drops below this.
    pub grad_tol: f64,
    /// Iteration budget of each Nelder-Mead fallback run.
    pub simplex_iter: usize,
    /// Max-norm cap on steps taken before curvature information exists.
    pub max_fresh_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            simplex_iter: 400,
            max_fresh_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub fallbacks: usize,
}

impl OptimResult {
    pub fn grad_norm(&self) -> f64 {
        max_norm(&self.gradient)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and gradient at a point.
///
/// Non-finite values are treated as infeasible and rejected by the line
/// search.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut flat = 0;
    let mut fallbacks = 0;
    let mut iter = 0;

    if !fx.is_finite() {
        return OptimResult {
            x,
            value: fx,
            gradient: g,
            iterations: 0,
            converged: false,
            fallbacks,
        };
    }

    while iter < opts.max_iter {
        if max_norm(&g) < opts.grad_tol {
            break;
        }
        iter += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        if fresh {
            // Unscaled steepest descent: keep the first step short.
            let m = max_norm(&d);
            if m > opts.max_fresh_step {
                let k = opts.max_fresh_step / m;
                d.iter_mut().for_each(|v| *v *= k);
                slope *= k;
            }
        }

        match line_search(&mut f, &x, fx, slope, &d) {
            Some((step, x_new, f_new, g_new)) => {
                let s: Vec<f64> = d.iter().map(|v| v * step).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    if fresh {
                        // scale the initial inverse Hessian by s'y / y'y
                        let scale = sy / dot(&y, &y);
                        for (i, row) in hinv.iter_mut().enumerate() {
                            row[i] = scale;
                        }
                    }
                    bfgs_update(&mut hinv, &s, &y, sy);
                    fresh = false;
                }
                let progress = fx - f_new;
                x = x_new;
                fx = f_new;
                g = g_new;
                if progress.abs() <= f64::EPSILON * fx.abs().max(1.0) {
                    flat += 1;
                    if flat >= 10 {
                        // value flat to machine precision for many steps
                        break;
                    }
                } else {
                    flat = 0;
                }
            }
            None => {
                fallbacks += 1;
                let (x_nm, f_nm) = nelder_mead(
                    |p| f(p).0,
                    &x,
                    fx,
                    opts.simplex_iter,
                );
                if f_nm < fx - 1e-12 * fx.abs().max(1.0) {
                    x = x_nm;
                    let (v, gr) = f(&x);
                    fx = v;
                    g = gr;
                    hinv = identity(n);
                    fresh = true;
                } else {
                    break;
                }
                if fallbacks > 5 {
                    break;
                }
            }
        }
    }

    OptimResult {
        converged: max_norm(&g) < opts.grad_tol,
        x,
        value: fx,
        gradient: g,
        iterations: iter,
        fallbacks,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn bfgs_update(hinv: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            hinv[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

type LineSearchStep = (f64, Vec<f64>, f64, Vec<f64>);

/// Backtracking Armijo search. When the unit step is accepted but too short
/// for the weak curvature condition the step is doubled while the value keeps
/// improving, so the BFGS update stays positive definite.
///
/// Close to the optimum the decrease in value drowns in rounding error; a step
/// whose value is unchanged to within that noise is then accepted when the
/// directional derivative shows it lands near the minimum along `d`.
fn line_search<F>(f: &mut F, x: &[f64], fx: f64, slope: f64, d: &[f64]) -> Option<LineSearchStep>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let trial = |f: &mut F, step: f64| {
        let xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + step * b).collect();
        let (fv, gv) = f(&xn);
        (xn, fv, gv)
    };

    let noise = 1e-13 * fx.abs().max(1.0);
    let accept = |step: f64, fv: f64, gv: &[f64]| {
        if !fv.is_finite() {
            return false;
        }
        if fv <= fx + C1 * step * slope {
            return true;
        }
        let dd = dot(gv, d);
        fv <= fx + noise && dd >= C2 * slope && dd <= (1.0 - 2.0 * C1) * -slope
    };
    let mut step = 1.0;
    let (mut xn, mut fv, mut gv) = trial(f, step);
    while !accept(step, fv, &gv) {
        step *= 0.5;
        if step < 1e-20 {
            return None;
        }
        (xn, fv, gv) = trial(f, step);
    }
    if step == 1.0 {
        for _ in 0..10 {
            if dot(&gv, d) >= C2 * slope {
                break;
            }
            let bigger = 2.0 * step;
            let (x2, f2, g2) = trial(f, bigger);
            if !(f2.is_finite() && f2 <= fx + C1 * bigger * slope && f2 < fv) {
                break;
            }
            (step, xn, fv, gv) = (bigger, x2, f2, g2);
        }
    }
    Some((step, xn, fv, gv))
}

/// Nelder-Mead simplex search started around `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], f0: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |f: &mut F, p: &[f64]| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1e-3 { 0.05 * p[i] } else { 0.05 };
        let v = eval(&mut f, &p);
        simplex.push((p, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-14 * best.abs().max(1e-300) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xw = simplex[n].0.clone();
        let xr = along(1.0, &xw);
        let fr = eval(&mut f, &xr);
        if fr < simplex[0].1 {
            let xe = along(2.0, &xw);
            let fe = eval(&mut f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5, &xw);
                let fc = eval(&mut f, &xc);
                (xc, fc)
            } else {
                let xc = along(-0.5, &xw);
                let fc = eval(&mut f, &xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        p.0[j] = x_best[j] + 0.5 * (p.0[j] - x_best[j]);
                    }
                    p.1 = eval(&mut f, &p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (v, g)
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &OptimOptions::default());
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn bfgs_quadratic_exact() {
        let f = |x: &[f64]| {
            let v = 3.0 * (x[0] - 2.0).powi(2) + 0.5 * (x[1] + 1.0).powi(2) + x[0] * x[1];
            (v, vec![6.0 * (x[0] - 2.0) + x[1], (x[1] + 1.0) + x[0]])
        };
        let r = minimize(f, &[0.0, 0.0], &OptimOptions::default());
        // stationary point of the quadratic: solve [[6,1],[1,1]] x = [12,-1]
        assert!(r.converged);
        assert!((r.x[0] - 2.6).abs() < 1e-6 && (r.x[1] + 3.6).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_finds_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let (x, v) = nelder_mead(f, &[0.0, 0.0], 5.0, 2000);
        assert!(v < 1e-10 && (x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // log barrier: infinite outside x > 0
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                (f64::NAN, vec![f64::NAN])
            } else {
                (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]])
            }
        };
        let r = minimize(f, &[5.0], &OptimOptions::default());
        assert!(r.converged && (r.x[0] - 1.0).abs() < 1e-6);
    }
}
