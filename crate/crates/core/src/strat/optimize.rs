//! Parametrized search over a strategy class: random restarts plus
//! simplex refinement over pure input states and Stinespring-isometry slot
//! fillers.

use serde::{Deserialize, Serialize};

use crate::linalg::trace_norm;
use crate::opt::{
    isometry_param_len, maximize, params_to_isometry, params_to_pure, pure_param_len, SearchCfg,
};
use crate::qobj::{Channel, State, Superchannel};
use crate::{Error, Result};

use super::{
    build_outputs, errors_of, nested_order, ErrorSpec, Frag, OptTrace, StrategyClass,
    StrategyDescriptor,
};

/// What the search minimizes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum Objective {
    /// Prior-weighted average error (closed-form Helstrom inside the loop).
    Prior(f64),
    /// Type-II error at fixed type-I budget (SDP per evaluation; costly).
    TypeI(f64),
}

/// Search configuration for [`optimize_strategy`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptCfg {
    /// Total objective evaluations.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Reference dimension carried by slot channels / input states.
    pub ref_dim: usize,
    /// Memory dimension of adaptive classes.
    pub mem_dim: usize,
    /// Stinespring environment dimension of searched channels (1 = unitary).
    pub env_dim: usize,
    pub parallel: bool,
}

impl OptCfg {
    pub fn new(budget: usize, seed: u64) -> Self {
        OptCfg {
            budget,
            restarts: (budget as f64).sqrt().ceil().clamp(1.0, 16.0) as usize,
            seed,
            ref_dim: 2,
            mem_dim: 2,
            env_dim: 1,
            parallel: true,
        }
    }

    pub fn with_ref_dim(mut self, r: usize) -> Self {
        self.ref_dim = r.max(1);
        self
    }

    pub fn with_env_dim(mut self, e: usize) -> Self {
        self.env_dim = e.max(1);
        self
    }

    pub fn with_mem_dim(mut self, m: usize) -> Self {
        self.mem_dim = m.max(1);
        self
    }

    pub fn with_restarts(mut self, r: usize) -> Self {
        self.restarts = r.max(1);
        self
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }
}

struct Cursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> &'a [f64] {
        let out = &self.data[self.pos..self.pos + len];
        self.pos += len;
        out
    }
}

fn channel_param_len(d_in: usize, d_out: usize, env: usize) -> usize {
    // environment large enough for an isometry to exist
    let env = env.max(d_in.div_ceil(d_out));
    isometry_param_len(d_in, d_out, env)
}

fn params_to_channel(cur: &mut Cursor, d_in: usize, d_out: usize, env: usize) -> Channel {
    let env = env.max(d_in.div_ceil(d_out));
    let p = cur.take(isometry_param_len(d_in, d_out, env));
    let v = params_to_isometry(p, d_in, d_out, env);
    Channel::from_isometry(&v, d_out, env).expect("isometry channel")
}

fn params_to_state(cur: &mut Cursor, dims: &[usize]) -> State {
    let d: usize = dims.iter().product();
    let p = cur.take(pure_param_len(d));
    let v = params_to_pure(p, d);
    State::pure(&v, dims).expect("pure state")
}

/// Parameter count and decoder for one strategy class at fixed wire sizes.
fn layout(
    class: StrategyClass,
    theta: &Superchannel,
    n: usize,
    cfg: &OptCfg,
) -> Result<(usize, Box<dyn Fn(&[f64]) -> StrategyDescriptor + Sync>)> {
    let (c, a, b, d) = (theta.dim_c(), theta.dim_a(), theta.dim_b(), theta.dim_d());
    let (r, m, env) = (cfg.ref_dim, cfg.mem_dim, cfg.env_dim);
    match class {
        StrategyClass::Product => {
            let len = pure_param_len(c * r) + channel_param_len(a * r, b * r, env);
            let dims = vec![c, r];
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let rho = params_to_state(&mut cur, &dims);
                let slot = params_to_channel(&mut cur, a * r, b * r, env);
                StrategyDescriptor::Product { n, rho, slot }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::ParallelProdChannels => {
            let cdim = c.pow(n as u32) * r.pow(n as u32);
            let len = pure_param_len(cdim) + channel_param_len(a * r, b * r, env);
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let mut dims = vec![c; n];
                dims.extend(vec![r; n]);
                dims.push(1);
                let rho = params_to_state(&mut cur, &dims);
                let slot = params_to_channel(&mut cur, a * r, b * r, env);
                StrategyDescriptor::ParallelProdChannels { n, rho, slot, idle_dim: 1 }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::ParallelProdStates => {
            let an = a.pow(n as u32);
            let bn = b.pow(n as u32);
            let len = n * pure_param_len(c)
                + pure_param_len(r)
                + channel_param_len(an * r, bn * r, env);
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let rhos: Vec<State> = (0..n).map(|_| params_to_state(&mut cur, &[c])).collect();
                let anc = params_to_state(&mut cur, &[r]);
                let slot = params_to_channel(&mut cur, an * r, bn * r, env);
                StrategyDescriptor::ParallelProdStates { n, rhos, anc, slot }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::ParallelFull => {
            let an = a.pow(n as u32);
            let bn = b.pow(n as u32);
            let len = pure_param_len(c.pow(n as u32) * r) + channel_param_len(an * r, bn * r, env);
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let mut dims = vec![c; n];
                dims.push(r);
                let rho = params_to_state(&mut cur, &dims);
                let slot = params_to_channel(&mut cur, an * r, bn * r, env);
                StrategyDescriptor::ParallelFull { n, rho, slot }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::SuccessiveAdaptive => {
            let len = pure_param_len(c * r * m)
                + channel_param_len(a * r, b * r, env)
                + (n - 1) * channel_param_len(d * r * m, c * r * m, env);
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let rho = params_to_state(&mut cur, &[c, r, m]);
                let slot = params_to_channel(&mut cur, a * r, b * r, env);
                let adapters = (1..n)
                    .map(|_| params_to_channel(&mut cur, d * r * m, c * r * m, env))
                    .collect();
                StrategyDescriptor::SuccessiveAdaptive { n, rho, slot, adapters }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::NestedAdaptive => {
            let len = pure_param_len(c * m)
                + channel_param_len(a * m, b * m, env)
                + (n - 1) * (channel_param_len(a * m, c * m, env) + channel_param_len(d * m, b * m, env));
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let rho = params_to_state(&mut cur, &[c, m]);
                let inner = params_to_channel(&mut cur, a * m, b * m, env);
                let mut pre = Vec::with_capacity(n - 1);
                let mut post = Vec::with_capacity(n - 1);
                for _ in 1..n {
                    pre.push(params_to_channel(&mut cur, a * m, c * m, env));
                    post.push(params_to_channel(&mut cur, d * m, b * m, env));
                }
                StrategyDescriptor::NestedAdaptive { n, rho, inner, pre, post }
            };
            Ok((len, Box::new(dec)))
        }
        StrategyClass::GeneralAdaptive => {
            let order = nested_order(n);
            let mut len = pure_param_len(c * m);
            let mut shapes = Vec::new();
            for t in 0..2 * n - 1 {
                let open_now = match order[t] {
                    Frag::Pre(_) => a,
                    Frag::Post(_) => d,
                };
                let open_next = match order[t + 1] {
                    Frag::Pre(_) => c,
                    Frag::Post(_) => b,
                };
                shapes.push((open_now * m, open_next * m));
                len += channel_param_len(open_now * m, open_next * m, env);
            }
            let dec = move |p: &[f64]| {
                let mut cur = Cursor { data: p, pos: 0 };
                let rho = params_to_state(&mut cur, &[c, m]);
                let adapters = shapes
                    .iter()
                    .map(|&(di, do_)| params_to_channel(&mut cur, di, do_, env))
                    .collect();
                StrategyDescriptor::GeneralAdaptive { n, rho, order: nested_order(n), adapters }
            };
            Ok((len, Box::new(dec)))
        }
    }
}

/// Search the given class for the strategy minimizing the objective. The
/// returned error is achieved by an explicit strategy, hence an upper bound
/// on the class optimum (equivalently, a certified lower bound on the class's
/// distinguishing power). Deterministic under a fixed seed.
pub fn optimize_strategy(
    class: StrategyClass,
    theta1: &Superchannel,
    theta2: &Superchannel,
    n: usize,
    objective: Objective,
    cfg: &OptCfg,
) -> Result<(StrategyDescriptor, DiscriminationResultExt)> {
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    if !theta1.same_signature(theta2) {
        return Err(Error::dim("superchannel signatures differ"));
    }
    let (len, decode) = layout(class, theta1, n, cfg)?;
    let score = |p: &[f64]| -> f64 {
        let desc = decode(p);
        let Ok((o1, o2)) = build_outputs(&desc, theta1, theta2) else {
            return f64::NEG_INFINITY;
        };
        match objective {
            Objective::Prior(pr) => {
                let delta = o1.op().scale(pr).sub(&o2.op().scale(1.0 - pr)).unwrap();
                let err = 0.5 * (1.0 - trace_norm(&delta));
                -err
            }
            Objective::TypeI(eps) => match errors_of(&(o1, o2), ErrorSpec::TypeI(eps)) {
                Ok(r) => -r.beta,
                Err(_) => f64::NEG_INFINITY,
            },
        }
    };
    let search_cfg = SearchCfg {
        budget: cfg.budget,
        restarts: cfg.restarts,
        seed: cfg.seed,
        parallel: cfg.parallel,
    };
    let found = maximize(len, score, &search_cfg, &[]);
    let desc = decode(&found.x);
    let outputs = build_outputs(&desc, theta1, theta2)?;
    let spec = match objective {
        Objective::Prior(p) => ErrorSpec::Prior(p),
        Objective::TypeI(e) => ErrorSpec::TypeI(e),
    };
    let mut res = errors_of(&outputs, spec)?;
    res.trace = OptTrace {
        restarts: search_cfg.restarts,
        evals: found.evals,
        best: -found.value,
        seed: cfg.seed,
    };
    Ok((desc, DiscriminationResultExt { result: res, outputs }))
}

/// Optimizer result bundling the error record with the realized output pair.
#[derive(Clone, Debug)]
pub struct DiscriminationResultExt {
    pub result: super::DiscriminationResult,
    pub outputs: (State, State),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qobj::{random_channel, seeded_rng, CombWires};
    use crate::sdp::superchannel_discrimination;
    use crate::zoo::make_replacer;

    #[test]
    fn identical_superchannels_stay_at_half() {
        let mut rng = seeded_rng(41);
        let e = random_channel(2, 4, &mut rng).unwrap();
        let d = random_channel(4, 2, &mut rng).unwrap();
        let th = Superchannel::from_parts(
            e,
            d,
            CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 },
        )
        .unwrap();
        let cfg = OptCfg::new(300, 1).with_restarts(3);
        let (_, ext) = optimize_strategy(
            StrategyClass::Product,
            &th,
            &th,
            1,
            Objective::Prior(0.5),
            &cfg,
        )
        .unwrap();
        assert!((ext.result.average_error(0.5) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn optimizer_is_seed_deterministic() {
        let mut rng = seeded_rng(42);
        let r1 = random_channel(2, 2, &mut rng).unwrap();
        let r2 = random_channel(2, 2, &mut rng).unwrap();
        let th1 = make_replacer(&r1).unwrap();
        let th2 = make_replacer(&r2).unwrap();
        let cfg = OptCfg::new(400, 7).with_restarts(4);
        let a = optimize_strategy(StrategyClass::Product, &th1, &th2, 1, Objective::Prior(0.5), &cfg)
            .unwrap();
        let b = optimize_strategy(StrategyClass::Product, &th1, &th2, 1, Objective::Prior(0.5), &cfg)
            .unwrap();
        assert_eq!(a.1.result.average_error(0.5), b.1.result.average_error(0.5));
    }

    #[test]
    fn replacer_product_search_approaches_tester_sdp() {
        let mut rng = seeded_rng(43);
        let r1 = random_channel(2, 2, &mut rng).unwrap();
        let r2 = random_channel(2, 2, &mut rng).unwrap();
        let th1 = make_replacer(&r1).unwrap();
        let th2 = make_replacer(&r2).unwrap();
        let (sdp_err, _) = superchannel_discrimination(&th1, &th2, 0.5).unwrap();
        let cfg = OptCfg::new(6000, 11).with_restarts(8);
        let (_, ext) = optimize_strategy(
            StrategyClass::Product,
            &th1,
            &th2,
            1,
            Objective::Prior(0.5),
            &cfg,
        )
        .unwrap();
        let err = ext.result.average_error(0.5);
        assert!(err >= sdp_err - 1e-9, "explicit strategy beats the SDP");
        assert!(err - sdp_err < 5e-3, "search error {err} vs sdp {sdp_err}");
    }
}
