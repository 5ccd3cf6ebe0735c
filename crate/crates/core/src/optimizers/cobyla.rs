//! Derivative-free trust-region descent on linear interpolation models.
//!
//! Keeps `dim + 1` interpolation points, fits the affine model through them,
//! and steps to the model minimiser on the trust-region sphere. The radius
//! only shrinks, from `rho_begin` to `rho_end`.

use nalgebra::{DMatrix, DVector};

use super::{Bounds, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CobylaParams {
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for CobylaParams {
    fn default() -> Self {
        Self {
            rho_begin: 1.0,
            rho_end: 1e-4,
        }
    }
}

/// Minimises from `x0` until the radius reaches `rho_end` or the budget
/// runs out. Returns the best point seen.
pub fn cobyla_style(eval: &mut Evaluator<'_>, bounds: &Bounds, x0: &[f64], params: CobylaParams) -> (f64, Vec<f64>) {
    let dim = x0.len();
    let mut rho = params.rho_begin;
    let mut x = x0.to_vec();
    bounds.clip(&mut x);
    if eval.exhausted() {
        return (f64::INFINITY, x);
    }
    let fx = eval.eval(&x);
    let mut points = vec![(x, fx)];
    if !rebuild(eval, bounds, &mut points, rho) {
        return best(&points);
    }

    while rho >= params.rho_end && !eval.exhausted() {
        points.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (xb, fb) = points[0].clone();
        let grad = match model_gradient(&points) {
            Some(g) => g,
            None => {
                points.truncate(1);
                if !rebuild(eval, bounds, &mut points, rho) {
                    break;
                }
                continue;
            }
        };
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            rho *= 0.5;
            points.truncate(1);
            if !rebuild(eval, bounds, &mut points, rho) {
                break;
            }
            continue;
        }
        let mut trial: Vec<f64> = (0..dim).map(|i| xb[i] - rho * grad[i] / gnorm).collect();
        bounds.clip(&mut trial);
        let predicted: f64 = (0..dim).map(|i| grad[i] * (xb[i] - trial[i])).sum();
        if predicted <= 0.0 {
            // Every descent direction points out of the box.
            rho *= 0.5;
            points.truncate(1);
            if !rebuild(eval, bounds, &mut points, rho) {
                break;
            }
            continue;
        }
        let ft = eval.eval(&trial);
        let ratio = (fb - ft) / predicted;
        if ft < fb {
            // Drop the point farthest from the new centre.
            let far = farthest(&points, &trial);
            points[far] = (trial, ft);
            if ratio < 0.1 {
                rho *= 0.5;
            }
        } else {
            rho *= 0.5;
            points.truncate(1);
            if rho >= params.rho_end && !rebuild(eval, bounds, &mut points, rho) {
                break;
            }
        }
    }
    best(&points)
}

/// Refills `points` to a fresh axis simplex of radius `rho` around `points[0]`.
fn rebuild(eval: &mut Evaluator<'_>, bounds: &Bounds, points: &mut Vec<(Vec<f64>, f64)>, rho: f64) -> bool {
    let base = points[0].0.clone();
    for i in 0..base.len() {
        if eval.exhausted() {
            return false;
        }
        let mut y = base.clone();
        y[i] += rho;
        if y[i] > bounds.upper[i] {
            y[i] = base[i] - rho;
        }
        bounds.clip(&mut y);
        let fy = eval.eval(&y);
        points.push((y, fy));
    }
    true
}

fn model_gradient(points: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let dim = points[0].0.len();
    if points.len() < dim + 1 {
        return None;
    }
    let (x0, f0) = &points[0];
    let d = DMatrix::from_fn(dim, dim, |r, c| points[r + 1].0[c] - x0[c]);
    let df = DVector::from_fn(dim, |r, _| points[r + 1].1 - f0);
    let g = d.lu().solve(&df)?;
    if g.iter().all(|v| v.is_finite()) {
        Some(g.iter().copied().collect())
    } else {
        None
    }
}

fn farthest(points: &[(Vec<f64>, f64)], centre: &[f64]) -> usize {
    (1..points.len())
        .max_by(|&a, &b| {
            let da: f64 = points[a].0.iter().zip(centre).map(|(x, y)| (x - y).powi(2)).sum();
            let db: f64 = points[b].0.iter().zip(centre).map(|(x, y)| (x - y).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

fn best(points: &[(Vec<f64>, f64)]) -> (f64, Vec<f64>) {
    points
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, f)| (*f, x.clone()))
        .expect("at least one point")
}
