//! Bounded Nelder-Mead simplex descent.

use super::{Bounds, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadParams {
    pub max_evals: usize,
    pub xatol: f64,
    pub fatol: f64,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        Self {
            max_evals: 1000,
            xatol: 1e-4,
            fatol: 1e-4,
        }
    }
}

/// Minimises from `x0`, clipping every vertex into `bounds`. Stops at
/// `max_evals` or when the evaluator runs dry. Returns the best vertex.
pub fn nelder_mead(
    eval: &mut Evaluator<'_>,
    bounds: &Bounds,
    x0: &[f64],
    params: NelderMeadParams,
) -> (f64, Vec<f64>) {
    let dim = x0.len();
    let limit = params.max_evals.min(eval.remaining());
    let mut calls = 0usize;
    let mut f = |x: &[f64], calls: &mut usize| {
        *calls += 1;
        eval.eval(x)
    };

    let mut start = x0.to_vec();
    bounds.clip(&mut start);
    if limit == 0 {
        return (f64::INFINITY, start);
    }
    let mut simplex: Vec<Vec<f64>> = vec![start.clone()];
    for i in 0..dim {
        let mut y = start.clone();
        y[i] = if y[i] != 0.0 { 1.05 * y[i] } else { 0.00025 };
        bounds.clip(&mut y);
        if y[i] == start[i] {
            // Pinned against a bound: step inward instead.
            y[i] = if start[i] >= bounds.upper[i] {
                start[i] - 0.05 * (bounds.upper[i] - bounds.lower[i])
            } else {
                start[i] + 0.00025
            };
            bounds.clip(&mut y);
        }
        simplex.push(y);
    }
    let mut values = Vec::with_capacity(dim + 1);
    for v in &simplex {
        if calls >= limit {
            break;
        }
        values.push(f(v, &mut calls));
    }
    if values.len() < simplex.len() {
        return best_of(&simplex[..values.len()], &values);
    }

    let (rho, chi, psi, sigma) = (1.0, 2.0, 0.5, 0.5);
    while calls < limit {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread_x = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = values[1..]
            .iter()
            .map(|v| (v - values[0]).abs())
            .fold(0.0, f64::max);
        if spread_x <= params.xatol && spread_f <= params.fatol {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + t * (simplex[dim][j] - centroid[j]))
                .collect();
            bounds.clip(&mut p);
            p
        };

        let xr = along(-rho);
        let fr = f(&xr, &mut calls);
        let mut shrink = false;
        if fr < values[0] {
            if calls >= limit {
                simplex[dim] = xr;
                values[dim] = fr;
                break;
            }
            let xe = along(-rho * chi);
            let fe = f(&xe, &mut calls);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
        } else if calls >= limit {
            break;
        } else if fr < values[dim] {
            let xc = along(-psi * rho);
            let fc = f(&xc, &mut calls);
            if fc <= fr {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                shrink = true;
            }
        } else {
            let xcc = along(psi);
            let fcc = f(&xcc, &mut calls);
            if fcc < values[dim] {
                simplex[dim] = xcc;
                values[dim] = fcc;
            } else {
                shrink = true;
            }
        }
        if shrink {
            for i in 1..=dim {
                if calls >= limit {
                    break;
                }
                let mut p: Vec<f64> = (0..dim)
                    .map(|j| simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j]))
                    .collect();
                bounds.clip(&mut p);
                values[i] = f(&p, &mut calls);
                simplex[i] = p;
            }
        }
    }
    best_of(&simplex, &values)
}

fn best_of(simplex: &[Vec<f64>], values: &[f64]) -> (f64, Vec<f64>) {
    let i = (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    (values[i], simplex[i].clone())
}
