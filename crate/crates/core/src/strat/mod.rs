//! Discrimination strategy classes: constructing output-state pairs, error
//! curves and operational rate estimates.
//!
//! Every class ultimately produces a pair of output states (one per
//! hypothesis) by exact channel composition; no sampling is involved. Output
//! subsystems are returned in a canonical order documented per class (final
//! outputs `D_1..D_n` first, then any surviving reference/memory wires, with
//! trivial wires squeezed).

mod embed;
pub(crate) mod engine;
mod optimize;

pub use embed::*;
pub use optimize::*;

use serde::{Deserialize, Serialize};

use crate::linalg::Operator;
use crate::qobj::{tensor, Channel, State, Superchannel};
use crate::sdp::{dh_epsilon_witness, min_error};
use crate::tol::ZERO_PROB;
use crate::{Error, Result};
use engine::Reg;

const OPEN: u64 = 0;
const MEM: u64 = 1;
const OUT_BASE: u64 = 100;
const REF_BASE: u64 = 200;
const SLOT_S: u64 = 300;
const JOINT_REF: u64 = 999;

fn out_tag(i: usize) -> u64 {
    OUT_BASE + i as u64
}

fn ref_tag(i: usize) -> u64 {
    REF_BASE + i as u64
}

fn s_tag(i: usize) -> u64 {
    SLOT_S + i as u64
}

/// A fragment of a decomposed superchannel use: the pre-processing channel
/// `E` or the post-processing channel `D` of use `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frag {
    Pre(usize),
    Post(usize),
}

/// Strategy class tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyClass {
    Product,
    ParallelProdChannels,
    ParallelProdStates,
    ParallelFull,
    SuccessiveAdaptive,
    NestedAdaptive,
    GeneralAdaptive,
}

/// A fully specified discrimination strategy.
///
/// Wire conventions (`c,a,b,d` are the superchannel wire dims, `r` reference
/// dims, `m` memory dims):
///
/// - `Product`: `rho` on `[C, R]`, `slot: [A, R] -> [B, R]`; each of the `n`
///   copies uses its own copy of both.
/// - `ParallelProdChannels`: `rho` on `[C_1..C_n, R_1..R_n, R_idle]`, one
///   `slot: [A, R] -> [B, R]` applied per copy.
/// - `ParallelProdStates`: product inputs `rhos` (each on `C`), ancilla `anc`
///   on the joint slot's reference, `slot: [A_1..A_n, R] -> [B_1..B_n, R]`.
/// - `ParallelFull`: joint `rho` on `[C_1..C_n, R]`, joint slot as above.
/// - `SuccessiveAdaptive`: `rho` on `[C, R, M]`, one `slot: [A, R] -> [B, R]`
///   reused every round, adapters `[D, R, M] -> [C, R, M]` between rounds.
/// - `NestedAdaptive`: recursion `N_1 = Theta(inner)`,
///   `N_{i+1} = Theta(pre_i . N_i . post-side)`: `inner: [A, M_1] -> [B, M_1']`,
///   `pre_i: [A, M_{i+1}] -> [C, M_i]`, `post_i: [D, M_i'] -> [B, M_{i+1}']`,
///   `rho` on `[C, M_n]`.
/// - `GeneralAdaptive`: an order word over the `2n` fragments with each
///   `Pre(j)` preceding `Post(j)`, `2n-1` adapters acting on the open wire
///   plus memory (never on the side wires `S`), `rho` on `[C, M]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum StrategyDescriptor {
    Product {
        n: usize,
        rho: State,
        slot: Channel,
    },
    ParallelProdChannels {
        n: usize,
        rho: State,
        slot: Channel,
        idle_dim: usize,
    },
    ParallelProdStates {
        n: usize,
        rhos: Vec<State>,
        anc: State,
        slot: Channel,
    },
    ParallelFull {
        n: usize,
        rho: State,
        slot: Channel,
    },
    SuccessiveAdaptive {
        n: usize,
        rho: State,
        slot: Channel,
        adapters: Vec<Channel>,
    },
    NestedAdaptive {
        n: usize,
        rho: State,
        inner: Channel,
        pre: Vec<Channel>,
        post: Vec<Channel>,
    },
    GeneralAdaptive {
        n: usize,
        rho: State,
        order: Vec<Frag>,
        adapters: Vec<Channel>,
    },
}

impl StrategyDescriptor {
    pub fn class(&self) -> StrategyClass {
        match self {
            StrategyDescriptor::Product { .. } => StrategyClass::Product,
            StrategyDescriptor::ParallelProdChannels { .. } => StrategyClass::ParallelProdChannels,
            StrategyDescriptor::ParallelProdStates { .. } => StrategyClass::ParallelProdStates,
            StrategyDescriptor::ParallelFull { .. } => StrategyClass::ParallelFull,
            StrategyDescriptor::SuccessiveAdaptive { .. } => StrategyClass::SuccessiveAdaptive,
            StrategyDescriptor::NestedAdaptive { .. } => StrategyClass::NestedAdaptive,
            StrategyDescriptor::GeneralAdaptive { .. } => StrategyClass::GeneralAdaptive,
        }
    }

    pub fn copies(&self) -> usize {
        match self {
            StrategyDescriptor::Product { n, .. }
            | StrategyDescriptor::ParallelProdChannels { n, .. }
            | StrategyDescriptor::ParallelProdStates { n, .. }
            | StrategyDescriptor::ParallelFull { n, .. }
            | StrategyDescriptor::SuccessiveAdaptive { n, .. }
            | StrategyDescriptor::NestedAdaptive { n, .. }
            | StrategyDescriptor::GeneralAdaptive { n, .. } => *n,
        }
    }
}

/// Validate a general-adaptive order word: each fragment exactly once,
/// `Pre(j)` before `Post(j)`.
pub fn validate_order(order: &[Frag], n: usize) -> Result<()> {
    let mut seen_pre = vec![false; n];
    let mut seen_post = vec![false; n];
    if order.len() != 2 * n {
        return Err(Error::arg(format!("order word length {} != 2n = {}", order.len(), 2 * n)));
    }
    for f in order {
        match *f {
            Frag::Pre(j) => {
                if j >= n || seen_pre[j] {
                    return Err(Error::arg(format!("fragment Pre({j}) out of range or repeated")));
                }
                seen_pre[j] = true;
            }
            Frag::Post(j) => {
                if j >= n || seen_post[j] {
                    return Err(Error::arg(format!("fragment Post({j}) out of range or repeated")));
                }
                if !seen_pre[j] {
                    return Err(Error::arg(format!("Post({j}) before Pre({j})")));
                }
                seen_post[j] = true;
            }
        }
    }
    Ok(())
}

/// The nested-adaptive order word `E_n .. E_1 D_1 .. D_n`.
pub fn nested_order(n: usize) -> Vec<Frag> {
    let mut order = Vec::with_capacity(2 * n);
    for j in (0..n).rev() {
        order.push(Frag::Pre(j));
    }
    for j in 0..n {
        order.push(Frag::Post(j));
    }
    order
}

/// The successive order word `E_1 D_1 E_2 D_2 ..`.
pub fn successive_order(n: usize) -> Vec<Frag> {
    let mut order = Vec::with_capacity(2 * n);
    for j in 0..n {
        order.push(Frag::Pre(j));
        order.push(Frag::Post(j));
    }
    order
}

fn run_general(
    theta: &Superchannel,
    rho: &State,
    order: &[Frag],
    adapters: &[Channel],
    n: usize,
) -> Result<State> {
    validate_order(order, n)?;
    if adapters.len() != 2 * n - 1 {
        return Err(Error::arg(format!(
            "expected {} adapters, got {}",
            2 * n - 1,
            adapters.len()
        )));
    }
    let (c, a, b, d, s) = (
        theta.dim_c(),
        theta.dim_a(),
        theta.dim_b(),
        theta.dim_d(),
        theta.dim_s(),
    );
    if rho.op().dims().first() != Some(&c) {
        return Err(Error::dim("input state's first wire must be C"));
    }
    let mem: usize = rho.op().dims()[1..].iter().product::<usize>().max(1);
    let op = rho.op().clone().with_dims(vec![c, mem])?;
    let mut reg = Reg::new(op, vec![OPEN, MEM])?;
    for (t, frag) in order.iter().enumerate() {
        match *frag {
            Frag::Pre(j) => {
                reg.apply(theta.pre(), &[OPEN], &[(OPEN, a), (s_tag(j), s)])?;
            }
            Frag::Post(j) => {
                reg.apply(theta.post(), &[OPEN, s_tag(j)], &[(OPEN, d)])?;
            }
        }
        if t + 1 < order.len() {
            let adapter = &adapters[t];
            let open_dim = reg.dim_of(OPEN).unwrap();
            let mem_dim = reg.dim_of(MEM).unwrap();
            if adapter.dim_in() != open_dim * mem_dim {
                return Err(Error::dim(format!(
                    "adapter {t} input {} vs open x mem {}",
                    adapter.dim_in(),
                    open_dim * mem_dim
                )));
            }
            let next_open = match order[t + 1] {
                Frag::Pre(_) => c,
                Frag::Post(_) => b,
            };
            if adapter.dim_out() % next_open != 0 {
                return Err(Error::dim(format!(
                    "adapter {t} output {} not divisible by next open wire {}",
                    adapter.dim_out(),
                    next_open
                )));
            }
            let new_mem = adapter.dim_out() / next_open;
            reg.apply(adapter, &[OPEN, MEM], &[(OPEN, next_open), (MEM, new_mem)])?;
        }
    }
    reg.sort_to(&[OPEN, MEM])?;
    reg.squeeze();
    State::new_sub(reg.op().clone())
}

fn run_parallel_joint(
    theta: &Superchannel,
    rho: &State,
    slot: &Channel,
    n: usize,
) -> Result<State> {
    let (c, a, b, d, s) = (
        theta.dim_c(),
        theta.dim_a(),
        theta.dim_b(),
        theta.dim_d(),
        theta.dim_s(),
    );
    let total: usize = rho.op().dims().iter().product();
    let r = total / c.pow(n as u32);
    if slot.dim_in() != a.pow(n as u32) * r || slot.dim_out() != b.pow(n as u32) * r {
        return Err(Error::dim("joint slot dims do not match wires"));
    }
    let mut dims = vec![c; n];
    dims.push(r);
    let op = rho.op().clone().with_dims(dims)?;
    let mut tags: Vec<u64> = (0..n).map(out_tag).collect();
    tags.push(JOINT_REF);
    let mut reg = Reg::new(op, tags)?;
    for i in 0..n {
        reg.apply(theta.pre(), &[out_tag(i)], &[(out_tag(i), a), (s_tag(i), s)])?;
    }
    let mut slot_in: Vec<u64> = (0..n).map(out_tag).collect();
    slot_in.push(JOINT_REF);
    let mut slot_out: Vec<(u64, usize)> = (0..n).map(|i| (out_tag(i), b)).collect();
    slot_out.push((JOINT_REF, r));
    reg.apply(slot, &slot_in, &slot_out)?;
    for i in 0..n {
        reg.apply(theta.post(), &[out_tag(i), s_tag(i)], &[(out_tag(i), d)])?;
    }
    let mut order: Vec<u64> = (0..n).map(out_tag).collect();
    order.push(JOINT_REF);
    reg.sort_to(&order)?;
    reg.squeeze();
    State::new_sub(reg.op().clone())
}

/// Push a state on `[C, R]` through one use of the superchannel acting on a
/// slot channel `[A, R] -> [B, R]`, without building the composed channel's
/// Choi. Output on `[D, R]`.
pub fn push_single_use(theta: &Superchannel, slot: &Channel, rho: &State) -> Result<State> {
    let (c, a, b, d, s) = (
        theta.dim_c(),
        theta.dim_a(),
        theta.dim_b(),
        theta.dim_d(),
        theta.dim_s(),
    );
    let total: usize = rho.op().dims().iter().product();
    if total % c != 0 {
        return Err(Error::dim("state must start with the C wire"));
    }
    let r = total / c;
    if slot.dim_in() != a * r || slot.dim_out() != b * r {
        return Err(Error::dim(format!(
            "slot is {}->{}, expected {}->{}",
            slot.dim_in(),
            slot.dim_out(),
            a * r,
            b * r
        )));
    }
    let op = rho.op().clone().with_dims(vec![c, r])?;
    let mut reg = Reg::new(op, vec![OPEN, JOINT_REF])?;
    reg.apply(theta.pre(), &[OPEN], &[(OPEN, a), (s_tag(0), s)])?;
    reg.apply(slot, &[OPEN, JOINT_REF], &[(OPEN, b), (JOINT_REF, r)])?;
    reg.apply(theta.post(), &[OPEN, s_tag(0)], &[(OPEN, d)])?;
    reg.sort_to(&[OPEN, JOINT_REF])?;
    State::new_sub(reg.op().clone())
}

/// Push a state on `[C, R]` through a full k-comb with the given slot
/// channels (each `[A_i, R] -> [B_i, R]`). Output on `[D, R]`.
pub fn push_comb_use(comb: &crate::qobj::Comb, slots: &[Channel], rho: &State) -> Result<State> {
    let w = comb.wires();
    let k = comb.k();
    if slots.len() + 1 != k {
        return Err(Error::arg(format!("expected {} slot channels", k - 1)));
    }
    let total: usize = rho.op().dims().iter().product();
    let r = total / w.c;
    let op = rho.op().clone().with_dims(vec![w.c, r])?;
    let mut reg = Reg::new(op, vec![OPEN, JOINT_REF])?;
    for (i, comp) in comb.components().iter().enumerate() {
        if i == 0 {
            reg.apply(comp, &[OPEN], &[(OPEN, w.a[0]), (s_tag(0), w.s[0])])?;
        } else if i == k - 1 {
            reg.apply(comp, &[OPEN, s_tag(i - 1)], &[(OPEN, w.d)])?;
        } else {
            reg.apply(comp, &[OPEN, s_tag(i - 1)], &[(OPEN, w.a[i]), (s_tag(i), w.s[i])])?;
        }
        if i < k - 1 {
            let slot = &slots[i];
            if slot.dim_in() != w.a[i] * r || slot.dim_out() != w.b[i] * r {
                return Err(Error::dim(format!("slot {i} dims")));
            }
            reg.apply(slot, &[OPEN, JOINT_REF], &[(OPEN, w.b[i]), (JOINT_REF, r)])?;
        }
    }
    reg.sort_to(&[OPEN, JOINT_REF])?;
    State::new_sub(reg.op().clone())
}

fn run_one(theta: &Superchannel, desc: &StrategyDescriptor) -> Result<State> {
    match desc {
        StrategyDescriptor::Product { n, rho, slot } => {
            let r = slot.dim_in() / theta.dim_a();
            let single = push_single_use(theta, slot, rho)?;
            // kron the copies, then sort to [D_1..D_n, R_1..R_n]
            let mut op = single.op().clone().with_dims(vec![theta.dim_d(), r])?;
            let mut tags = vec![out_tag(0), ref_tag(0)];
            let mut acc = op.clone();
            for i in 1..*n {
                acc = crate::linalg::kron(&acc, &op);
                tags.push(out_tag(i));
                tags.push(ref_tag(i));
            }
            op = acc;
            let mut reg = Reg::new(op, tags)?;
            let mut order: Vec<u64> = (0..*n).map(out_tag).collect();
            order.extend((0..*n).map(ref_tag));
            reg.sort_to(&order)?;
            reg.squeeze();
            State::new_sub(reg.op().clone())
        }
        StrategyDescriptor::ParallelProdChannels { n, rho, slot, idle_dim } => {
            let r = slot.dim_in() / theta.dim_a();
            let g = theta.apply_to(slot, r)?;
            let (c, d) = (theta.dim_c(), theta.dim_d());
            let mut dims = vec![c; *n];
            dims.extend(vec![r; *n]);
            dims.push(*idle_dim);
            let op = rho.op().clone().with_dims(dims)?;
            let mut tags: Vec<u64> = (0..*n).map(out_tag).collect();
            tags.extend((0..*n).map(ref_tag));
            tags.push(JOINT_REF);
            let mut reg = Reg::new(op, tags)?;
            for i in 0..*n {
                reg.apply(&g, &[out_tag(i), ref_tag(i)], &[(out_tag(i), d), (ref_tag(i), r)])?;
            }
            let mut order: Vec<u64> = (0..*n).map(out_tag).collect();
            order.extend((0..*n).map(ref_tag));
            order.push(JOINT_REF);
            reg.sort_to(&order)?;
            reg.squeeze();
            State::new_sub(reg.op().clone())
        }
        StrategyDescriptor::ParallelProdStates { n, rhos, anc, slot } => {
            if rhos.len() != *n {
                return Err(Error::arg("need one input state per copy"));
            }
            let mut acc = rhos[0].op().clone();
            for r in &rhos[1..] {
                acc = crate::linalg::kron(&acc, r.op());
            }
            acc = crate::linalg::kron(&acc, anc.op());
            let joint = State::new_sub(acc)?;
            run_parallel_joint(theta, &joint, slot, *n)
        }
        StrategyDescriptor::ParallelFull { n, rho, slot } => run_parallel_joint(theta, rho, slot, *n),
        StrategyDescriptor::SuccessiveAdaptive { n, rho, slot, adapters } => {
            if adapters.len() + 1 != *n {
                return Err(Error::arg(format!("need {} adapters, got {}", n - 1, adapters.len())));
            }
            let r = slot.dim_in() / theta.dim_a();
            let mem_total: usize = rho.op().dims()[1..].iter().product::<usize>().max(1);
            if mem_total % r != 0 {
                return Err(Error::dim("state memory must contain the slot reference"));
            }
            let extra = mem_total / r;
            // lower to the general executor: slot acts on [A, R] inside the
            // memory [R, M]; adapters act on everything
            let slot_big = tensor(slot, &Channel::identity(extra))?;
            let mut lowered: Vec<Channel> = Vec::with_capacity(2 * n - 1);
            for i in 0..*n {
                lowered.push(slot_big.clone());
                if i + 1 < *n {
                    let f = &adapters[i];
                    if f.dim_in() != theta.dim_d() * mem_total || f.dim_out() != theta.dim_c() * mem_total {
                        return Err(Error::dim(format!("adapter {i} dims")));
                    }
                    lowered.push(f.clone());
                }
            }
            run_general(theta, rho, &successive_order(*n), &lowered, *n)
        }
        StrategyDescriptor::NestedAdaptive { n, rho, inner, pre, post } => {
            if pre.len() + 1 != *n || post.len() + 1 != *n {
                return Err(Error::arg(format!("need {} pre/post channels", n - 1)));
            }
            // lower to the general order E_n..E_1 D_1..D_n with adapters
            // pre_{n-1},..,pre_1, inner, post_1,..,post_{n-1}
            let mut adapters: Vec<Channel> = Vec::with_capacity(2 * n - 1);
            for p in pre.iter().rev() {
                adapters.push(p.clone());
            }
            adapters.push(inner.clone());
            for p in post.iter() {
                adapters.push(p.clone());
            }
            run_general(theta, rho, &nested_order(*n), &adapters, *n)
        }
        StrategyDescriptor::GeneralAdaptive { n, rho, order, adapters } => {
            run_general(theta, rho, order, adapters, *n)
        }
    }
}

/// Build the pair of final states under the two hypotheses by exact channel
/// composition.
pub fn build_outputs(
    desc: &StrategyDescriptor,
    theta1: &Superchannel,
    theta2: &Superchannel,
) -> Result<(State, State)> {
    if !theta1.same_signature(theta2) {
        return Err(Error::dim("superchannel signatures differ"));
    }
    let out1 = run_one(theta1, desc)?;
    let out2 = run_one(theta2, desc)?;
    Ok((out1, out2))
}

/// How to evaluate the errors of an output pair.
#[derive(Clone, Debug)]
pub enum ErrorSpec<'a> {
    /// Fixed binary measurement: `Q` accepts the first hypothesis.
    Measurement(&'a Operator),
    /// Minimize the type-II error subject to `alpha <= eps` (optimal test).
    TypeI(f64),
    /// Minimize the prior-weighted average error (Helstrom).
    Prior(f64),
}

/// Record of an optimizer run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OptTrace {
    pub restarts: usize,
    pub evals: usize,
    pub best: f64,
    pub seed: u64,
}

/// Errors of a strategy together with the measurement that produced them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscriminationResult {
    pub alpha: f64,
    pub beta: f64,
    pub measurement: Option<Operator>,
    pub trace: OptTrace,
}

impl DiscriminationResult {
    pub fn average_error(&self, p: f64) -> f64 {
        p * self.alpha + (1.0 - p) * self.beta
    }
}

/// Errors of an output pair for a given measurement policy.
pub fn errors_of(outputs: &(State, State), spec: ErrorSpec) -> Result<DiscriminationResult> {
    let (rho1, rho2) = outputs;
    match spec {
        ErrorSpec::Measurement(q) => {
            let alpha = 1.0 - q.pair_re(rho1.op())?;
            let beta = q.pair_re(rho2.op())?;
            Ok(DiscriminationResult {
                alpha: alpha.clamp(0.0, 1.0),
                beta: beta.clamp(0.0, 1.0),
                measurement: Some(q.clone()),
                trace: OptTrace::default(),
            })
        }
        ErrorSpec::TypeI(eps) => {
            let (bits, q) = dh_epsilon_witness(rho1, rho2, eps)?;
            let beta = if bits.is_infinite() { 0.0 } else { 2f64.powf(-bits) };
            let alpha = (1.0 - q.pair_re(rho1.op())?).clamp(0.0, 1.0);
            Ok(DiscriminationResult {
                alpha,
                beta,
                measurement: Some(q),
                trace: OptTrace::default(),
            })
        }
        ErrorSpec::Prior(p) => {
            let (_, q) = min_error(p, rho1, rho2)?;
            let alpha = (1.0 - q.pair_re(rho1.op())?).clamp(0.0, 1.0);
            let beta = q.pair_re(rho2.op())?.clamp(0.0, 1.0);
            Ok(DiscriminationResult {
                alpha,
                beta,
                measurement: Some(q),
                trace: OptTrace::default(),
            })
        }
    }
}

/// A point of a rate curve; `infinite` marks a zero error probability.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub rate: f64,
    pub infinite: bool,
}

fn rate_of(n: usize, p: f64) -> RatePoint {
    if p <= ZERO_PROB {
        RatePoint { n, rate: f64::INFINITY, infinite: true }
    } else {
        RatePoint { n, rate: -p.log2() / n as f64, infinite: false }
    }
}

/// Stein-setting rate curve `-(1/n) log2 beta_n`.
pub fn zeta_hat(results: &[(usize, DiscriminationResult)]) -> Vec<RatePoint> {
    results.iter().map(|(n, r)| rate_of(*n, r.beta)).collect()
}

/// Symmetric-setting rate curve `-(1/n) log2 (p alpha_n + (1-p) beta_n)`.
pub fn xi_hat(p: f64, results: &[(usize, DiscriminationResult)]) -> Vec<RatePoint> {
    results.iter().map(|(n, r)| rate_of(*n, r.average_error(p))).collect()
}

/// Strong-converse-exponent curve `-(1/n) log2 (1 - alpha_n)` under the
/// constraint `beta_n <= 2^{-rn}`.
pub fn h_hat(r: f64, results: &[(usize, DiscriminationResult)]) -> Result<Vec<RatePoint>> {
    for (n, res) in results {
        let cap = 2f64.powf(-r * *n as f64);
        if res.beta > cap + 1e-9 {
            return Err(Error::arg(format!(
                "beta_{} = {} violates the 2^(-rn) = {} constraint",
                n, res.beta, cap
            )));
        }
    }
    Ok(results.iter().map(|(n, res)| rate_of(*n, 1.0 - res.alpha)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, kron};
    use crate::qobj::{
        identity_superchannel, random_channel, random_state, seeded_rng, CombWires, State,
    };
    use approx::assert_abs_diff_eq;

    fn random_superchannel(seed: u64) -> Superchannel {
        let mut rng = seeded_rng(seed);
        let e = random_channel(2, 4, &mut rng).unwrap();
        let d = random_channel(4, 2, &mut rng).unwrap();
        Superchannel::from_parts(
            e,
            d,
            CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 },
        )
        .unwrap()
    }

    fn product_descriptor(n: usize, seed: u64, r: usize) -> StrategyDescriptor {
        let mut rng = seeded_rng(seed);
        StrategyDescriptor::Product {
            n,
            rho: random_state(2 * r, 2, &mut rng).map(|s| {
                State::new(s.op().clone().with_dims(vec![2, r]).unwrap()).unwrap()
            })
            .unwrap(),
            slot: random_channel(2 * r, 2 * r, &mut rng).unwrap(),
        }
    }

    #[test]
    fn single_copy_classes_collapse() {
        let th1 = random_superchannel(1);
        let th2 = random_superchannel(2);
        let mut rng = seeded_rng(3);
        let rho = random_state(2, 2, &mut rng).unwrap();
        let slot = random_channel(2, 2, &mut rng).unwrap();
        // n = 1 with trivial references: all classes produce Theta(N)(rho)
        let descs = vec![
            StrategyDescriptor::Product { n: 1, rho: rho.clone(), slot: slot.clone() },
            StrategyDescriptor::ParallelProdChannels {
                n: 1,
                rho: rho.clone(),
                slot: slot.clone(),
                idle_dim: 1,
            },
            StrategyDescriptor::ParallelProdStates {
                n: 1,
                rhos: vec![rho.clone()],
                anc: State::maximally_mixed(1),
                slot: slot.clone(),
            },
            StrategyDescriptor::ParallelFull { n: 1, rho: rho.clone(), slot: slot.clone() },
            StrategyDescriptor::SuccessiveAdaptive {
                n: 1,
                rho: rho.clone(),
                slot: slot.clone(),
                adapters: vec![],
            },
            StrategyDescriptor::NestedAdaptive {
                n: 1,
                rho: rho.clone(),
                inner: slot.clone(),
                pre: vec![],
                post: vec![],
            },
            StrategyDescriptor::GeneralAdaptive {
                n: 1,
                rho: rho.clone(),
                order: vec![Frag::Pre(0), Frag::Post(0)],
                adapters: vec![slot.clone()],
            },
        ];
        let expect1 = th1.apply_to(&slot, 1).unwrap().apply(&rho).unwrap();
        let expect2 = th2.apply_to(&slot, 1).unwrap().apply(&rho).unwrap();
        for desc in &descs {
            let (o1, o2) = build_outputs(desc, &th1, &th2).unwrap();
            assert!(
                o1.op().sub(expect1.op()).unwrap().frobenius_norm() < 1e-10,
                "{:?}",
                desc.class()
            );
            assert!(o2.op().sub(expect2.op()).unwrap().frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn identical_superchannels_give_identical_outputs() {
        let th = random_superchannel(5);
        let desc = product_descriptor(2, 7, 2);
        let (o1, o2) = build_outputs(&desc, &th, &th).unwrap();
        assert!(o1.op().sub(o2.op()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn product_outputs_are_tensor_powers() {
        let th1 = random_superchannel(8);
        let th2 = random_superchannel(9);
        let desc = product_descriptor(2, 10, 1);
        let (o1, _) = build_outputs(&desc, &th1, &th2).unwrap();
        if let StrategyDescriptor::Product { rho, slot, .. } = &desc {
            let single = th1.apply_to(slot, 1).unwrap().apply(rho).unwrap();
            let expect = kron(single.op(), single.op());
            assert!(o1.op().sub(&expect.with_dims(o1.op().dims().to_vec()).unwrap()).unwrap().frobenius_norm() < 1e-11);
        } else {
            unreachable!()
        }
    }

    #[test]
    fn errors_of_equal_outputs() {
        let rho = State::maximally_mixed(2);
        let res = errors_of(&(rho.clone(), rho), ErrorSpec::Prior(0.5)).unwrap();
        assert_abs_diff_eq!(res.average_error(0.5), 0.5, epsilon = 1e-7);
    }

    #[test]
    fn errors_of_orthogonal_outputs() {
        let pair = (State::basis(2, 0), State::basis(2, 1));
        let res = errors_of(&pair, ErrorSpec::Prior(0.5)).unwrap();
        assert!(res.alpha < 1e-7 && res.beta < 1e-7);
        let res = errors_of(&pair, ErrorSpec::TypeI(0.05)).unwrap();
        assert!(res.beta < 1e-9);
    }

    #[test]
    fn errors_of_fixed_measurement_traces() {
        let q = Operator::from_ket(&basis_ket(2, 0), &[2]).unwrap();
        let pair = (State::maximally_mixed(2), State::basis(2, 0));
        let res = errors_of(&pair, ErrorSpec::Measurement(&q)).unwrap();
        assert_abs_diff_eq!(res.alpha, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(res.beta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn optimal_measurement_beats_explicit() {
        let mut rng = seeded_rng(11);
        let pair = (
            random_state(2, 2, &mut rng).unwrap(),
            random_state(2, 2, &mut rng).unwrap(),
        );
        let best = errors_of(&pair, ErrorSpec::Prior(0.4)).unwrap().average_error(0.4);
        for _ in 0..5 {
            let q = crate::linalg::mat_fn(&crate::qobj::random_density(2, 2, &mut rng), |l| l.min(1.0), false)
                .unwrap();
            let res = errors_of(&pair, ErrorSpec::Measurement(&q)).unwrap();
            assert!(res.average_error(0.4) >= best - 1e-7);
        }
    }

    #[test]
    fn measured_kl_obeys_data_processing() {
        // the binary distribution of any measurement never beats the state
        // relative entropy
        let th1 = random_superchannel(12);
        let th2 = random_superchannel(13);
        let desc = product_descriptor(2, 14, 1);
        let outputs = build_outputs(&desc, &th1, &th2).unwrap();
        let d = crate::dvg::rel_entropy(&outputs.0, &outputs.1).unwrap().value;
        let res = errors_of(&outputs, ErrorSpec::Prior(0.5)).unwrap();
        let kl = crate::dvg::binary_dkl(1.0 - res.alpha, res.beta);
        assert!(kl <= d + 1e-8, "measured {kl} vs state {d}");
    }

    #[test]
    fn zeta_hat_flags() {
        let mk = |beta: f64| DiscriminationResult {
            alpha: 0.1,
            beta,
            measurement: None,
            trace: OptTrace::default(),
        };
        let curve = zeta_hat(&[(1, mk(0.25)), (2, mk(0.0))]);
        assert_abs_diff_eq!(curve[0].rate, 2.0, epsilon = 1e-12);
        assert!(curve[1].infinite);
        let theta = identity_superchannel(2);
        let _ = theta;
    }

    #[test]
    fn h_hat_enforces_beta_cap() {
        let mk = |alpha: f64, beta: f64| DiscriminationResult {
            alpha,
            beta,
            measurement: None,
            trace: OptTrace::default(),
        };
        assert!(h_hat(1.0, &[(2, mk(0.3, 0.5))]).is_err());
        let ok = h_hat(1.0, &[(2, mk(0.3, 0.2))]).unwrap();
        assert_abs_diff_eq!(ok[0].rate, -(0.7f64).log2() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn order_word_validation() {
        assert!(validate_order(&nested_order(3), 3).is_ok());
        assert!(validate_order(&successive_order(2), 2).is_ok());
        assert!(validate_order(&[Frag::Post(0), Frag::Pre(0)], 1).is_err());
        assert!(validate_order(&[Frag::Pre(0), Frag::Pre(0)], 1).is_err());
    }

    #[test]
    fn braided_order_runs() {
        // E1 E2 D1 D2 with memory shuffling via identity adapters
        let th1 = random_superchannel(15);
        let th2 = random_superchannel(16);
        let order = vec![Frag::Pre(0), Frag::Pre(1), Frag::Post(0), Frag::Post(1)];
        // open/mem wire sizes along the braid (c=b=d=2, mem starts at 2):
        // after E1 open=2(A); adapter1: [A,M]->[C,M'] ...
        let mut rng = seeded_rng(17);
        let adapters = vec![
            random_channel(4, 4, &mut rng).unwrap(), // [A1, M2] -> [C2, M2]
            random_channel(4, 4, &mut rng).unwrap(), // [A2, M] -> [B1, M]
            random_channel(4, 4, &mut rng).unwrap(), // [D1, M] -> [B2, M]
        ];
        let rho = State::maximally_mixed(4);
        let rho = State::new(rho.op().clone().with_dims(vec![2, 2]).unwrap()).unwrap();
        let desc = StrategyDescriptor::GeneralAdaptive { n: 2, rho, order, adapters };
        let (o1, o2) = build_outputs(&desc, &th1, &th2).unwrap();
        assert_eq!(o1.op().dim(), 4);
        let res = errors_of(&(o1, o2), ErrorSpec::Prior(0.5)).unwrap();
        assert!(res.average_error(0.5) <= 0.5 + 1e-9);
    }
}
