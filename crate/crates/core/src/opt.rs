//! Derivative-free maximization: random restarts plus Nelder-Mead refinement.
//!
//! Restarts run in parallel with per-restart seeds and results merge
//! deterministically by (value, restart index), so a fixed seed yields a
//! fixed answer regardless of thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::linalg::{eig_hermitian, C64, Operator};
use crate::qobj::{gauss, seeded_rng};

/// Search configuration. `budget` is the total objective-evaluation budget,
/// split evenly across restarts.
#[derive(Clone, Copy, Debug)]
pub struct SearchCfg {
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl SearchCfg {
    pub fn new(budget: usize, seed: u64) -> Self {
        let restarts = (budget as f64).sqrt().ceil() as usize;
        SearchCfg {
            budget,
            restarts: restarts.clamp(1, 24),
            seed,
            parallel: true,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }
}

/// Best point found and its objective value.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Maximize `f` over `R^dim`, optionally seeding some restarts with warm
/// starts (used to chain searches so a larger search provably contains a
/// smaller one's optimum).
pub fn maximize<F>(dim: usize, f: F, cfg: &SearchCfg, warm: &[Vec<f64>]) -> SearchResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        let value = f(&[]);
        return SearchResult { x: vec![], value, evals: 1 };
    }
    let restarts = cfg.restarts.max(warm.len()).max(1);
    let per_restart = (cfg.budget / restarts).max(dim + 2);
    let run_one = |r: usize| -> (f64, usize, Vec<f64>, usize) {
        let mut rng = seeded_rng(cfg.seed.wrapping_add(r as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let start: Vec<f64> = if r < warm.len() {
            warm[r].clone()
        } else {
            (0..dim).map(|_| gauss(&mut rng)).collect()
        };
        let (x, value, evals) = nelder_mead(&f, &start, per_restart, &mut rng);
        (value, r, x, evals)
    };
    let mut results: Vec<(f64, usize, Vec<f64>, usize)> = if cfg.parallel {
        (0..restarts).into_par_iter().map(run_one).collect()
    } else {
        (0..restarts).map(run_one).collect()
    };
    // deterministic merge: best value, ties to the lowest restart index
    results.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let evals = results.iter().map(|r| r.3).sum();
    let best = results.into_iter().next().unwrap();
    SearchResult { x: best.2, value: best.0, evals }
}

/// Standard Nelder-Mead on `-f` (we maximize). Returns (best x, best value,
/// evaluations used).
fn nelder_mead<F>(f: &F, start: &[f64], max_evals: usize, rng: &mut impl Rng) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };
    // initial simplex around the start point
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = start.to_vec();
    let f0 = eval(&v0, &mut evals);
    simplex.push((v0, f0));
    for i in 0..n {
        let mut v = start.to_vec();
        let step = 0.25 + 0.05 * gauss(rng).abs();
        v[i] += step;
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }
    let (alpha, gamma, rho_c, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals + 4 < max_evals {
        // descending by value: best first (maximization)
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let spread = simplex[0].1 - simplex[n].1;
        if spread.abs() < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let refl: Vec<f64> = (0..n).map(|j| centroid[j] + alpha * (centroid[j] - worst.0[j])).collect();
        let f_refl = eval(&refl, &mut evals);
        if f_refl > simplex[0].1 {
            let exp: Vec<f64> = (0..n).map(|j| centroid[j] + gamma * (refl[j] - centroid[j])).collect();
            let f_exp = eval(&exp, &mut evals);
            simplex[n] = if f_exp > f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl > simplex[n - 1].1 {
            simplex[n] = (refl, f_refl);
        } else {
            let con: Vec<f64> = (0..n).map(|j| centroid[j] + rho_c * (worst.0[j] - centroid[j])).collect();
            let f_con = eval(&con, &mut evals);
            if f_con > worst.1 {
                simplex[n] = (con, f_con);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for k in 1..=n {
                    let v: Vec<f64> = (0..n).map(|j| best[j] + sigma * (simplex[k].0[j] - best[j])).collect();
                    let fv = eval(&v, &mut evals);
                    simplex[k] = (v, fv);
                    if evals >= max_evals {
                        break;
                    }
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    (simplex[0].0.clone(), simplex[0].1, evals)
}

// ---------------------------------------------------------------------------
// Parametrizations used by the search layers
// ---------------------------------------------------------------------------

/// Number of real parameters for a pure state on dimension `d`.
pub fn pure_param_len(d: usize) -> usize {
    2 * d
}

/// Map `2d` reals to a normalized ket.
pub fn params_to_pure(params: &[f64], d: usize) -> DVector<C64> {
    assert_eq!(params.len(), 2 * d);
    let mut v = DVector::from_fn(d, |i, _| C64::new(params[2 * i], params[2 * i + 1]));
    let n = v.norm();
    if n < 1e-12 {
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    v / C64::new(n, 0.0)
}

/// Number of real parameters for a unitary on dimension `d`.
pub fn unitary_param_len(d: usize) -> usize {
    d * d
}

/// Map `d^2` reals to a unitary via the exponential of a Hermitian generator.
pub fn params_to_unitary(params: &[f64], d: usize) -> DMatrix<C64> {
    assert_eq!(params.len(), d * d);
    let mut h = DMatrix::<C64>::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        h[(i, i)] = C64::new(params[idx], 0.0);
        idx += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let re = params[idx];
            let im = params[idx + 1];
            idx += 2;
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
        }
    }
    let op = Operator::from_matrix(h).unwrap();
    let spec = eig_hermitian(&op).expect("generator hermitian by construction");
    // U = V diag(exp(i lambda)) V^dag
    let n = d;
    let mut u = DMatrix::<C64>::zeros(n, n);
    for (k, &lam) in spec.values.iter().enumerate() {
        let phase = C64::new(lam.cos(), lam.sin());
        let col = spec.vectors.column(k);
        for j in 0..n {
            let cj = col[j].conj() * phase;
            for i in 0..n {
                u[(i, j)] += col[i] * cj;
            }
        }
    }
    u
}

/// Number of real parameters for a `d_in -> d_out (x) d_env` isometry.
pub fn isometry_param_len(d_in: usize, d_out: usize, d_env: usize) -> usize {
    let n = d_out * d_env;
    assert!(n >= d_in);
    n * n
}

/// Map parameters to an isometry (first `d_in` columns of a unitary).
pub fn params_to_isometry(params: &[f64], d_in: usize, d_out: usize, d_env: usize) -> DMatrix<C64> {
    let n = d_out * d_env;
    let u = params_to_unitary(params, n);
    u.columns(0, d_in).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_maximum() {
        let f = |x: &[f64]| -(x[0] - 1.5).powi(2) - (x[1] + 0.5).powi(2);
        let res = maximize(2, f, &SearchCfg::new(2000, 7), &[]);
        assert!((res.x[0] - 1.5).abs() < 1e-4, "{:?}", res);
        assert!((res.x[1] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn deterministic_under_seed() {
        let f = |x: &[f64]| -(x[0].powi(2)) - (x[1] - 2.0).powi(2) + (3.0 * x[0]).sin();
        let a = maximize(2, f, &SearchCfg::new(1500, 9), &[]);
        let b = maximize(2, f, &SearchCfg::new(1500, 9), &[]);
        assert_eq!(a.x, b.x);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn warm_start_is_respected() {
        // objective with a narrow global optimum the random starts will miss
        let f = |x: &[f64]| -1e4 * (x[0] - 77.0).powi(2);
        let res = maximize(1, f, &SearchCfg::new(200, 3), &[vec![77.0]]);
        assert!(res.value > -1e-6);
    }

    #[test]
    fn unitary_parametrization_is_unitary() {
        let mut rng = seeded_rng(5);
        let params: Vec<f64> = (0..unitary_param_len(3)).map(|_| gauss(&mut rng)).collect();
        let u = params_to_unitary(&params, 3);
        let err = (u.adjoint() * &u - DMatrix::<C64>::identity(3, 3)).norm();
        assert!(err < 1e-10, "unitarity defect {err}");
    }

    #[test]
    fn isometry_parametrization_is_isometric() {
        let mut rng = seeded_rng(6);
        let params: Vec<f64> = (0..isometry_param_len(2, 2, 2)).map(|_| gauss(&mut rng)).collect();
        let v = params_to_isometry(&params, 2, 2, 2);
        let err = (v.adjoint() * &v - DMatrix::<C64>::identity(2, 2)).norm();
        assert!(err < 1e-10);
    }
}

/// Number of real parameters for a full-rank mixed state on dimension `d`.
pub fn mixed_param_len(d: usize) -> usize {
    2 * d * d
}

/// Map `2d^2` reals to a density operator via the Ginibre form `GG^dag / tr`.
pub fn params_to_mixed(params: &[f64], dims: &[usize]) -> Operator {
    let d: usize = dims.iter().product();
    assert_eq!(params.len(), 2 * d * d);
    let g = DMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        C64::new(params[k], params[k + 1])
    });
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    if tr < 1e-12 {
        m = DMatrix::identity(d, d);
        return Operator::new(m * C64::new(1.0 / d as f64, 0.0), dims.to_vec()).unwrap();
    }
    Operator::new(m * C64::new(1.0 / tr, 0.0), dims.to_vec()).unwrap()
}

/// Parameters that reproduce a given pure state under [`params_to_mixed`]
/// (used to warm-start mixed searches at pure optima).
pub fn mixed_params_from_pure(v: &DVector<C64>) -> Vec<f64> {
    let d = v.len();
    let mut p = vec![0.0; 2 * d * d];
    for i in 0..d {
        p[2 * (i * d)] = v[i].re;
        p[2 * (i * d) + 1] = v[i].im;
    }
    p
}
