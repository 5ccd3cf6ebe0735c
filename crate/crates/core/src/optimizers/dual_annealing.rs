//! Generalized simulated annealing with a simplex local search.
//!
//! Follows the usual visiting-distribution / acceptance formulation with a
//! restart once the temperature falls below a fixed fraction of its start.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use super::nelder_mead::{nelder_mead, NelderMeadParams};
use super::{Bounds, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DaParams {
    pub visit: f64,
    pub accept: f64,
    pub initial_temp: f64,
    pub restart_temp_ratio: f64,
    pub max_iter: usize,
    pub local_search: bool,
}

impl Default for DaParams {
    fn default() -> Self {
        Self {
            visit: 2.62,
            accept: -5.0,
            initial_temp: 5230.0,
            restart_temp_ratio: 2e-5,
            max_iter: 1000,
            local_search: true,
        }
    }
}

const TAIL_LIMIT: f64 = 1e8;
const MIN_VISIT_BOUND: f64 = 1e-10;

struct Visiting {
    qv: f64,
    factor4_p: f64,
    factor6: f64,
}

impl Visiting {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) * 2f64.ln() / (qv - 1.0)).exp();
        let factor4_p = PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let factor6 = PI * (1.0 - factor5) / (PI * (1.0 - factor5)).sin() / ln_gamma(d1).exp();
        Self {
            qv,
            factor4_p,
            factor6,
        }
    }

    /// Heavy-tailed step of the visiting distribution.
    fn draw<R: Rng + ?Sized>(&self, temperature: f64, rng: &mut R) -> f64 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let qv = self.qv;
        let factor1 = (temperature.ln() / (qv - 1.0)).exp();
        let factor4 = self.factor4_p * factor1;
        let x = x * (-(qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - qv)).exp();
        let den = ((qv - 1.0) * y.abs().ln() / (3.0 - qv)).exp();
        x / den
    }

    fn clip_tail<R: Rng + ?Sized>(v: f64, rng: &mut R) -> f64 {
        if v > TAIL_LIMIT {
            TAIL_LIMIT * rng.random::<f64>()
        } else if v < -TAIL_LIMIT {
            -TAIL_LIMIT * rng.random::<f64>()
        } else {
            v
        }
    }

    fn wrap(v: f64, lo: f64, hi: f64) -> f64 {
        let range = hi - lo;
        let b = (v - lo) % range + range;
        let mut out = b % range + lo;
        if (out - lo).abs() < MIN_VISIT_BOUND {
            out += MIN_VISIT_BOUND;
        }
        out
    }

    /// All coordinates move for the first `dim` steps of a chain, then one
    /// coordinate at a time.
    fn visit<R: Rng + ?Sized>(&self, x: &[f64], step: usize, temperature: f64, bounds: &Bounds, rng: &mut R) -> Vec<f64> {
        let dim = x.len();
        let mut out = x.to_vec();
        if step < dim {
            let visits: Vec<f64> = (0..dim).map(|_| self.draw(temperature, rng)).collect();
            let upper: f64 = rng.random();
            let lower: f64 = rng.random();
            for i in 0..dim {
                let v = if visits[i] > TAIL_LIMIT {
                    TAIL_LIMIT * upper
                } else if visits[i] < -TAIL_LIMIT {
                    -TAIL_LIMIT * lower
                } else {
                    visits[i]
                };
                out[i] = Self::wrap(v + x[i], bounds.lower[i], bounds.upper[i]);
            }
        } else {
            let i = step - dim;
            let v = Self::clip_tail(self.draw(temperature, rng), rng);
            out[i] = Self::wrap(v + x[i], bounds.lower[i], bounds.upper[i]);
        }
        out
    }
}

struct State {
    current: Vec<f64>,
    current_e: f64,
    best: Vec<f64>,
    best_e: f64,
}

struct Chain {
    emin: f64,
    xmin: Vec<f64>,
    not_improved: usize,
    not_improved_max: usize,
    temperature_step: f64,
    improved: bool,
}

/// Runs until the evaluator's cap is hit or the iteration limit is reached.
/// Local searches are capped by the remaining budget, so the cap is never
/// exceeded.
pub fn dual_annealing<R: Rng + ?Sized>(
    eval: &mut Evaluator<'_>,
    bounds: &Bounds,
    x0: Option<&[f64]>,
    params: DaParams,
    rng: &mut R,
) {
    let dim = bounds.dim();
    if dim == 0 || eval.exhausted() {
        return;
    }
    let visiting = Visiting::new(params.visit);
    let qa = params.accept;
    let restart_temp = params.initial_temp * params.restart_temp_ratio;
    let ls_max = (6 * dim).clamp(100, 1000);
    let k_factor = 100 * dim;

    let uniform_point = |rng: &mut R| -> Vec<f64> {
        (0..dim)
            .map(|i| rng.random_range(bounds.lower[i]..=bounds.upper[i]))
            .collect()
    };

    let mut start = match x0 {
        Some(x) => {
            let mut x = x.to_vec();
            bounds.clip(&mut x);
            x
        }
        None => uniform_point(rng),
    };
    let mut e0 = eval.eval(&start);
    let mut tries = 0;
    while !e0.is_finite() && tries < 1000 && !eval.exhausted() {
        start = uniform_point(rng);
        e0 = eval.eval(&start);
        tries += 1;
    }
    if eval.exhausted() {
        return;
    }
    let mut st = State {
        current: start.clone(),
        current_e: e0,
        best: start,
        best_e: e0,
    };
    let mut chain = Chain {
        emin: st.current_e,
        xmin: st.current.clone(),
        not_improved: 0,
        not_improved_max: 1000,
        temperature_step: 0.0,
        improved: true,
    };

    let t1 = ((params.visit - 1.0) * 2f64.ln()).exp() - 1.0;
    let mut iteration = 0usize;
    'outer: loop {
        for i in 0..params.max_iter {
            let s = i as f64 + 2.0;
            let t2 = ((params.visit - 1.0) * s.ln()).exp() - 1.0;
            let temperature = params.initial_temp * t1 / t2;
            if iteration >= params.max_iter {
                break 'outer;
            }
            if temperature < restart_temp {
                let x = uniform_point(rng);
                let e = eval.eval(&x);
                st.current = x;
                st.current_e = e;
                if eval.exhausted() {
                    break 'outer;
                }
                continue 'outer;
            }

            // Strategy chain.
            chain.temperature_step = temperature / (i as f64 + 1.0);
            chain.not_improved += 1;
            for j in 0..2 * dim {
                if j == 0 {
                    chain.improved = i == 0;
                }
                let xv = visiting.visit(&st.current, j, temperature, bounds, rng);
                let e = eval.eval(&xv);
                if e < st.current_e {
                    st.current = xv.clone();
                    st.current_e = e;
                    if e < st.best_e {
                        st.best = xv;
                        st.best_e = e;
                        chain.improved = true;
                        chain.not_improved = 0;
                    }
                } else {
                    let r: f64 = rng.random();
                    let pqv_temp = 1.0 - (1.0 - qa) * (e - st.current_e) / chain.temperature_step;
                    let pqv = if pqv_temp <= 0.0 {
                        0.0
                    } else {
                        (pqv_temp.ln() / (1.0 - qa)).exp()
                    };
                    if r <= pqv {
                        st.current = xv;
                        st.current_e = e;
                        chain.xmin = st.current.clone();
                    }
                    if chain.not_improved >= chain.not_improved_max
                        && (j == 0 || st.current_e < chain.emin)
                    {
                        chain.emin = st.current_e;
                        chain.xmin = st.current.clone();
                    }
                }
                if eval.exhausted() {
                    break 'outer;
                }
            }

            if params.local_search {
                let nm = |eval: &mut Evaluator<'_>, x: &[f64]| {
                    nelder_mead(
                        eval,
                        bounds,
                        x,
                        NelderMeadParams {
                            max_evals: ls_max,
                            ..Default::default()
                        },
                    )
                };
                if chain.improved {
                    let (e, x) = nm(eval, &st.best.clone());
                    if e < st.best_e {
                        chain.not_improved = 0;
                        st.best = x.clone();
                        st.best_e = e;
                        st.current = x;
                        st.current_e = e;
                    }
                    if eval.exhausted() {
                        break 'outer;
                    }
                }
                let mut do_ls = false;
                if k_factor < 90 * dim {
                    let pls = (k_factor as f64 * (st.best_e - st.current_e) / chain.temperature_step).exp();
                    do_ls = pls >= rng.random::<f64>();
                }
                if chain.not_improved >= chain.not_improved_max {
                    do_ls = true;
                }
                if do_ls {
                    let (e, x) = nm(eval, &chain.xmin.clone());
                    chain.xmin = x.clone();
                    chain.emin = e;
                    chain.not_improved = 0;
                    chain.not_improved_max = dim;
                    if e < st.best_e {
                        st.best = x.clone();
                        st.best_e = e;
                        st.current = x;
                        st.current_e = e;
                    }
                    if eval.exhausted() {
                        break 'outer;
                    }
                }
            }
            iteration += 1;
        }
        if iteration >= params.max_iter {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_bounds() {
        for v in [-30.0, -0.1, 0.0, 3.0, 6.3, 100.0] {
            let w = Visiting::wrap(v, 0.0, std::f64::consts::TAU);
            assert!((0.0..=std::f64::consts::TAU).contains(&w), "{v} -> {w}");
        }
    }
}
