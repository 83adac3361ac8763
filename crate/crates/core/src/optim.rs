//! Projected gradient descent on the probability simplex.

use crate::error::{Error, Result};

/// Euclidean projection onto `{w >= 0, sum w = 1}` (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct PgOptions {
    /// Stop when `|w - P(w - grad)|_inf` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub sigma: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions {
            tol: 1e-10,
            max_iter: 20_000,
            sigma: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PgOutcome {
    pub weights: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn stationarity(w: &[f64], g: &[f64]) -> f64 {
    let step: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = project_to_simplex(&step);
    w.iter()
        .zip(&p)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

/// True when the first-order decrease predicted by a unit step is below
/// the rounding level of `f`, so no line search can make progress.
fn at_precision_limit(w: &[f64], g: &[f64], f: f64) -> bool {
    let step: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = project_to_simplex(&step);
    let dec: f64 = g.iter().zip(p.iter().zip(w)).map(|(gi, (a, b))| gi * (a - b)).sum();
    dec.abs() <= 1e3 * f64::EPSILON * (1.0 + f.abs())
}

/// Minimise `f` over the simplex from `start`: spectral (Barzilai-Borwein)
/// projected gradient with Armijo backtracking along the projected direction.
///
/// `fg` returns the objective and its gradient.
pub fn projected_gradient<F>(fg: F, start: &[f64], opts: &PgOptions) -> Result<PgOutcome>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut w = project_to_simplex(start);
    let (mut f, mut g) = fg(&w);
    let mut alpha = 1.0;
    let mut residual = stationarity(&w, &g);
    for it in 0..opts.max_iter {
        if residual <= opts.tol {
            return Ok(PgOutcome {
                weights: w,
                value: f,
                residual,
                iterations: it,
            });
        }
        let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let d: Vec<f64> = project_to_simplex(&trial)
            .iter()
            .zip(&w)
            .map(|(a, b)| a - b)
            .collect();
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let wn: Vec<f64> = w.iter().zip(&d).map(|(a, b)| (a + lambda * b).max(0.0)).collect();
            let (fn_, gn) = fg(&wn);
            if fn_ <= f + opts.sigma * lambda * slope {
                accepted = Some((wn, fn_, gn));
                break;
            }
            lambda *= 0.5;
        }
        let Some((wn, fn_, gn)) = accepted else {
            if at_precision_limit(&w, &g, f) {
                return Ok(PgOutcome {
                    weights: w,
                    value: f,
                    residual,
                    iterations: it,
                });
            }
            return Err(Error::NoConvergence {
                what: "projected gradient (line search stalled)",
                residual,
            });
        };
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..w.len() {
            let si = wn[i] - w[i];
            ss += si * si;
            sy += si * (gn[i] - g[i]);
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e3 };
        w = wn;
        f = fn_;
        g = gn;
        residual = stationarity(&w, &g);
    }
    if residual <= opts.tol || at_precision_limit(&w, &g, f) {
        Ok(PgOutcome {
            weights: w,
            value: f,
            residual,
            iterations: opts.max_iter,
        })
    } else {
        Err(Error::NoConvergence {
            what: "projected gradient",
            residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[0.5, 0.5, 0.5]);
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.3, -0.4, 0.9]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn quadratic_on_simplex() {
        // min |w - c|^2 over the simplex equals the projection of c.
        let c = [0.9, 0.4, -0.2];
        let fg = |w: &[f64]| {
            let f = w.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = w.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect();
            (f, g)
        };
        let out = projected_gradient(fg, &[1.0 / 3.0; 3], &PgOptions::default()).unwrap();
        let want = project_to_simplex(&c);
        for (a, b) in out.weights.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let fg = |w: &[f64]| (w[0], vec![1.0, 0.0]);
        let opts = PgOptions {
            max_iter: 0,
            ..PgOptions::default()
        };
        assert!(matches!(
            projected_gradient(fg, &[1.0, 0.0], &opts),
            Err(Error::NoConvergence { .. })
        ));
    }
}
