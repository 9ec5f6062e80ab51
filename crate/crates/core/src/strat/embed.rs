//! Canonical embeddings between strategy classes.
//!
//! Each embedding maps a descriptor to one of a strictly larger class with
//! exactly the same output states. Since classes return their outputs in
//! class-specific wire orders, an embedding also carries the dims/permutation
//! that map the larger class's raw output back to the smaller class's
//! canonical order.

use crate::linalg::{kron, permute_systems};
use crate::qobj::{tensor, Channel, State, Superchannel};
use crate::{Error, Result};

use super::{nested_order, successive_order, StrategyDescriptor};

/// An embedded descriptor plus the output-wire adjustment that aligns the
/// larger class's output with the original class's output.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub desc: StrategyDescriptor,
    /// Subsystem dims of the larger class's raw output.
    pub out_dims: Vec<usize>,
    /// Permutation (new position -> old position) aligning raw output wires
    /// with the original class's canonical order.
    pub out_perm: Vec<usize>,
}

impl Embedding {
    fn trivial(desc: StrategyDescriptor) -> Self {
        Embedding {
            desc,
            out_dims: vec![],
            out_perm: vec![],
        }
    }

    /// Map the larger class's output into the original class's wire order.
    pub fn align(&self, out: &State) -> Result<State> {
        if self.out_perm.is_empty() {
            return Ok(out.clone());
        }
        let op = out.op().clone().with_dims(self.out_dims.clone())?;
        State::new_sub(permute_systems(&op, &self.out_perm)?)
    }
}

/// `product -> parallel_prod_channels`: the same per-copy state and slot
/// channel, with the joint input being the tensor power reordered to
/// `[C_1..C_n, R_1..R_n]`.
pub fn embed_product_in_parallel_channels(
    desc: &StrategyDescriptor,
    theta: &Superchannel,
) -> Result<Embedding> {
    let StrategyDescriptor::Product { n, rho, slot } = desc else {
        return Err(Error::arg("expected a product descriptor"));
    };
    let (n, c) = (*n, theta.dim_c());
    let r = slot.dim_in() / theta.dim_a();
    let mut acc = rho.op().clone().with_dims(vec![c, r])?;
    let single = acc.clone();
    for _ in 1..n {
        acc = kron(&acc, &single);
    }
    // [(C R)^n] -> [C_1..C_n, R_1..R_n]
    let mut perm = Vec::with_capacity(2 * n);
    for i in 0..n {
        perm.push(2 * i);
    }
    for i in 0..n {
        perm.push(2 * i + 1);
    }
    let joint = permute_systems(&acc, &perm)?;
    Ok(Embedding::trivial(StrategyDescriptor::ParallelProdChannels {
        n,
        rho: State::new(joint)?,
        slot: slot.clone(),
        idle_dim: 1,
    }))
}

/// `parallel_prod_channels -> parallel_full`: the joint slot is the tensor
/// power of the per-copy slot (plus identity on the idle reference), rewired
/// to `[A_1..A_n, R_1..R_n x idle]`.
pub fn embed_parallel_channels_in_full(
    desc: &StrategyDescriptor,
    theta: &Superchannel,
) -> Result<Embedding> {
    let StrategyDescriptor::ParallelProdChannels { n, rho, slot, idle_dim } = desc else {
        return Err(Error::arg("expected a parallel_prod_channels descriptor"));
    };
    let (n, a, b) = (*n, theta.dim_a(), theta.dim_b());
    let r = slot.dim_in() / a;
    let mut joint = slot.clone();
    for _ in 1..n {
        joint = tensor(&joint, slot)?;
    }
    joint = tensor(&joint, &Channel::identity(*idle_dim))?;
    // joint acts on interleaved wires [(A R)^n, idle]; the full-class slot
    // wants gathered wires [A^n, R^n, idle]:
    //   full = gather_out . joint . scatter_in
    let scatter: Vec<usize> = {
        // new interleaved position <- old gathered position
        let mut p = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            p.push(i);
            p.push(n + i);
        }
        p.push(2 * n);
        p
    };
    let gather: Vec<usize> = {
        // new gathered position <- old interleaved position
        let mut p = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            p.push(2 * i);
        }
        for i in 0..n {
            p.push(2 * i + 1);
        }
        p.push(2 * n);
        p
    };
    let gathered_in: Vec<usize> = {
        let mut v = vec![a; n];
        v.extend(vec![r; n]);
        v.push(*idle_dim);
        v
    };
    let interleaved_out: Vec<usize> = {
        let mut v = Vec::new();
        for _ in 0..n {
            v.push(b);
            v.push(r);
        }
        v.push(*idle_dim);
        v
    };
    let scatter_in = Channel::permutation(&gathered_in, &scatter)?;
    let gather_out = Channel::permutation(&interleaved_out, &gather)?;
    let full_slot = scatter_in.then(&joint)?.then(&gather_out)?;
    Ok(Embedding::trivial(StrategyDescriptor::ParallelFull {
        n,
        rho: rho.clone(),
        slot: full_slot,
    }))
}

/// `parallel_prod_states -> parallel_full`: the joint state is the product of
/// the inputs and the slot ancilla.
pub fn embed_parallel_states_in_full(desc: &StrategyDescriptor) -> Result<Embedding> {
    let StrategyDescriptor::ParallelProdStates { n, rhos, anc, slot } = desc else {
        return Err(Error::arg("expected a parallel_prod_states descriptor"));
    };
    let mut acc = rhos[0].op().clone();
    for r in &rhos[1..] {
        acc = kron(&acc, r.op());
    }
    acc = kron(&acc, anc.op());
    Ok(Embedding::trivial(StrategyDescriptor::ParallelFull {
        n: *n,
        rho: State::new(acc)?,
        slot: slot.clone(),
    }))
}

/// `parallel_full -> nested_adaptive`: the swap construction. The innermost
/// slot is the joint channel; the pre/post channels are wire permutations
/// that park the outer uses' slot wires in memory while the joint channel
/// runs once at the core.
pub fn embed_parallel_full_in_nested(
    desc: &StrategyDescriptor,
    theta: &Superchannel,
) -> Result<Embedding> {
    let StrategyDescriptor::ParallelFull { n, rho, slot } = desc else {
        return Err(Error::arg("expected a parallel_full descriptor"));
    };
    let n = *n;
    let (c, a, b, d) = (theta.dim_c(), theta.dim_a(), theta.dim_b(), theta.dim_d());
    let r = slot.dim_in() / a.pow(n as u32);

    // input reordered to [C_{n-1}, C_{n-2}..C_0, R]
    let mut in_dims = vec![c; n];
    in_dims.push(r);
    let rho_op = rho.op().clone().with_dims(in_dims)?;
    let mut perm: Vec<usize> = (0..n).rev().collect();
    perm.push(n);
    let rho_nested = State::new(permute_systems(&rho_op, &perm)?)?;

    // pre[k]: [A_{k+1}, C_k..C_0, A_{k+2}..A_{n-1}, R]
    //      -> [C_k, C_{k-1}..C_0, A_{k+1}, A_{k+2}..A_{n-1}, R]
    let mut pre = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let mut dims = vec![a];
        dims.extend(vec![c; k + 1]);
        dims.extend(vec![a; n - 2 - k]);
        dims.push(r);
        let len = dims.len();
        let mut p: Vec<usize> = Vec::with_capacity(len);
        for i in 1..=k + 1 {
            p.push(i);
        }
        p.push(0);
        for i in k + 2..len {
            p.push(i);
        }
        pre.push(Channel::permutation(&dims, &p)?);
    }

    // inner slot: the joint channel, open wire A_0 first (natural order)
    let inner = slot.clone();

    // post[k]: [D_k, B_{k+1}, B_{k+2}..B_{n-1}, D_{k-1}..D_0, R]
    //       -> [B_{k+1}, B_{k+2}..B_{n-1}, D_k, D_{k-1}..D_0, R]
    let mut post = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let n_bs = n - 1 - k;
        let mut dims = vec![d];
        dims.extend(vec![b; n_bs]);
        dims.extend(vec![d; k]);
        dims.push(r);
        let len = dims.len();
        let mut p: Vec<usize> = Vec::with_capacity(len);
        for i in 1..=n_bs {
            p.push(i);
        }
        p.push(0);
        for i in n_bs + 1..len {
            p.push(i);
        }
        post.push(Channel::permutation(&dims, &p)?);
    }

    // raw nested output: [D_{n-1}, D_{n-2}..D_0, R]; canonical parallel order
    // is [D_0..D_{n-1}, R]
    let mut out_dims = vec![d; n];
    out_dims.push(r);
    let mut out_perm: Vec<usize> = (0..n).rev().collect();
    out_perm.push(n);
    // squeeze trivial reference wire to match build_outputs
    if r == 1 {
        out_dims.pop();
        out_perm.pop();
    }
    Ok(Embedding {
        desc: StrategyDescriptor::NestedAdaptive {
            n,
            rho: rho_nested,
            inner,
            pre,
            post,
        },
        out_dims,
        out_perm,
    })
}

/// `nested_adaptive -> general_adaptive`: the order word `E_n..E_1 D_1..D_n`
/// with the pre/inner/post channels as the interleaved adapters.
pub fn embed_nested_in_general(desc: &StrategyDescriptor) -> Result<Embedding> {
    let StrategyDescriptor::NestedAdaptive { n, rho, inner, pre, post } = desc else {
        return Err(Error::arg("expected a nested_adaptive descriptor"));
    };
    let mut adapters: Vec<Channel> = Vec::with_capacity(2 * n - 1);
    for p in pre.iter().rev() {
        adapters.push(p.clone());
    }
    adapters.push(inner.clone());
    for p in post.iter() {
        adapters.push(p.clone());
    }
    Ok(Embedding::trivial(StrategyDescriptor::GeneralAdaptive {
        n: *n,
        rho: rho.clone(),
        order: nested_order(*n),
        adapters,
    }))
}

/// `successive_adaptive -> general_adaptive`: the order word
/// `E_1 D_1 E_2 D_2 ..` with the slot channel (padded with identity on the
/// non-reference memory) between each `E_j`/`D_j` pair.
pub fn embed_successive_in_general(
    desc: &StrategyDescriptor,
    theta: &Superchannel,
) -> Result<Embedding> {
    let StrategyDescriptor::SuccessiveAdaptive { n, rho, slot, adapters } = desc else {
        return Err(Error::arg("expected a successive_adaptive descriptor"));
    };
    let r = slot.dim_in() / theta.dim_a();
    let mem_total: usize = rho.op().dims()[1..].iter().product::<usize>().max(1);
    let extra = mem_total / r;
    let slot_big = tensor(slot, &Channel::identity(extra))?;
    let mut lowered: Vec<Channel> = Vec::with_capacity(2 * n - 1);
    for i in 0..*n {
        lowered.push(slot_big.clone());
        if i + 1 < *n {
            lowered.push(adapters[i].clone());
        }
    }
    Ok(Embedding::trivial(StrategyDescriptor::GeneralAdaptive {
        n: *n,
        rho: rho.clone(),
        order: successive_order(*n),
        adapters: lowered,
    }))
}

/// Output-state equality of an original descriptor and its embedding, within
/// `tol` (Frobenius).
pub fn embedding_outputs_match(
    original: &StrategyDescriptor,
    embedding: &Embedding,
    theta1: &Superchannel,
    theta2: &Superchannel,
    tol: f64,
) -> Result<bool> {
    let (a1, a2) = super::build_outputs(original, theta1, theta2)?;
    let (b1, b2) = super::build_outputs(&embedding.desc, theta1, theta2)?;
    let b1 = embedding.align(&b1)?;
    let b2 = embedding.align(&b2)?;
    let d1 = a1.op().sub(&b1.op().clone().with_dims(a1.op().dims().to_vec())?)?;
    let d2 = a2.op().sub(&b2.op().clone().with_dims(a2.op().dims().to_vec())?)?;
    Ok(d1.frobenius_norm() <= tol && d2.frobenius_norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qobj::{random_channel, random_state, seeded_rng, CombWires};

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

    #[test]
    fn product_to_parallel_channels_exact() {
        let th1 = random_superchannel(21);
        let th2 = random_superchannel(22);
        let mut rng = seeded_rng(23);
        let rho = crate::qobj::State::new(
            crate::qobj::random_density(4, 2, &mut rng).with_dims(vec![2, 2]).unwrap(),
        )
        .unwrap();
        let slot = random_channel(4, 4, &mut rng).unwrap();
        let desc = StrategyDescriptor::Product { n: 2, rho, slot };
        let emb = embed_product_in_parallel_channels(&desc, &th1).unwrap();
        assert!(embedding_outputs_match(&desc, &emb, &th1, &th2, 1e-10).unwrap());
    }

    #[test]
    fn parallel_full_to_nested_exact() {
        let th1 = random_superchannel(24);
        let th2 = random_superchannel(25);
        let mut rng = seeded_rng(26);
        for n in [1usize, 2] {
            let r = 2usize;
            let cdim = 2usize.pow(n as u32) * r;
            let rho = random_state(cdim, cdim.min(3), &mut rng).unwrap();
            let mut dims = vec![2; n];
            dims.push(r);
            let rho = crate::qobj::State::new(rho.op().clone().with_dims(dims).unwrap()).unwrap();
            let slot = random_channel(2usize.pow(n as u32) * r, 2usize.pow(n as u32) * r, &mut rng).unwrap();
            let desc = StrategyDescriptor::ParallelFull { n, rho, slot };
            let emb = embed_parallel_full_in_nested(&desc, &th1).unwrap();
            assert!(
                embedding_outputs_match(&desc, &emb, &th1, &th2, 1e-10).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn parallel_channels_to_full_exact() {
        let th1 = random_superchannel(27);
        let th2 = random_superchannel(28);
        let mut rng = seeded_rng(29);
        let r = 2usize;
        // state on [C1, C2, R1, R2, idle=1]
        let rho = random_state(16, 3, &mut rng).unwrap();
        let rho = crate::qobj::State::new(rho.op().clone().with_dims(vec![2, 2, r, r, 1]).unwrap()).unwrap();
        let slot = random_channel(2 * r, 2 * r, &mut rng).unwrap();
        let desc = StrategyDescriptor::ParallelProdChannels { n: 2, rho, slot, idle_dim: 1 };
        let emb = embed_parallel_channels_in_full(&desc, &th1).unwrap();
        assert!(embedding_outputs_match(&desc, &emb, &th1, &th2, 1e-10).unwrap());
    }

    #[test]
    fn nested_to_general_exact() {
        let th1 = random_superchannel(30);
        let th2 = random_superchannel(31);
        let mut rng = seeded_rng(32);
        let m = 2usize;
        let rho = random_state(2 * m, 2, &mut rng).unwrap();
        let rho = crate::qobj::State::new(rho.op().clone().with_dims(vec![2, m]).unwrap()).unwrap();
        let desc = StrategyDescriptor::NestedAdaptive {
            n: 2,
            rho,
            inner: random_channel(2 * m, 2 * m, &mut rng).unwrap(),
            pre: vec![random_channel(2 * m, 2 * m, &mut rng).unwrap()],
            post: vec![random_channel(2 * m, 2 * m, &mut rng).unwrap()],
        };
        let emb = embed_nested_in_general(&desc).unwrap();
        assert!(embedding_outputs_match(&desc, &emb, &th1, &th2, 1e-11).unwrap());
    }

    #[test]
    fn successive_to_general_exact() {
        let th1 = random_superchannel(33);
        let th2 = random_superchannel(34);
        let mut rng = seeded_rng(35);
        let (r, m) = (2usize, 2usize);
        let rho = random_state(2 * r * m, 2, &mut rng).unwrap();
        let rho = crate::qobj::State::new(rho.op().clone().with_dims(vec![2, r, m]).unwrap()).unwrap();
        let desc = StrategyDescriptor::SuccessiveAdaptive {
            n: 2,
            rho,
            slot: random_channel(2 * r, 2 * r, &mut rng).unwrap(),
            adapters: vec![random_channel(2 * r * m, 2 * r * m, &mut rng).unwrap()],
        };
        let emb = embed_successive_in_general(&desc, &th1).unwrap();
        assert!(embedding_outputs_match(&desc, &emb, &th1, &th2, 1e-11).unwrap());
    }
}
