//! States, channels, combs, superchannels and their classical counterparts.
//!
//! Channels are stored as Choi operators with the convention
//! `J(N) = sum_ij |i><j| (x) N(|i><j|)` on systems `[in, out]`, so a CPTP map
//! satisfies `tr_out J = I_in`. Choi operators are unique, which keeps channel
//! equality and SDP interfacing simple; Kraus decompositions are cached on the
//! side where a constructor provides one.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    basis_ket, eig_hermitian, kron, partial_trace, partial_transpose, permute_systems, C64,
    Operator,
};
use crate::tol::{EIG_CLIP, NORM_TOL, TABLE_TOL, TP_TOL};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// A (possibly subnormalized) density operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct State {
    op: Operator,
    normalized: bool,
}

impl State {
    pub fn new(op: Operator) -> Result<Self> {
        Self::build(op, true)
    }

    /// Subnormalized state (trace may be below one).
    pub fn new_sub(op: Operator) -> Result<Self> {
        Self::build(op, false)
    }

    fn build(op: Operator, require_normalized: bool) -> Result<Self> {
        let op = op.hermitize()?;
        let spec = eig_hermitian(&op)?;
        if spec.min() < -EIG_CLIP {
            return Err(Error::NotPsd { min_eig: spec.min() });
        }
        let tr = op.trace_re();
        if tr > 1.0 + NORM_TOL {
            return Err(Error::arg(format!("state trace {tr} exceeds one")));
        }
        let normalized = (tr - 1.0).abs() <= NORM_TOL;
        if require_normalized && !normalized {
            return Err(Error::arg(format!("state trace {tr} is not one")));
        }
        Ok(State { op, normalized })
    }

    pub fn pure(v: &DVector<C64>, dims: &[usize]) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::arg("zero ket"));
        }
        let scaled = v / C64::new(n, 0.0);
        State::new(Operator::from_ket(&scaled, dims)?)
    }

    pub fn basis(d: usize, i: usize) -> Self {
        State::new(Operator::from_ket(&basis_ket(d, i), &[d]).unwrap()).unwrap()
    }

    pub fn maximally_mixed(d: usize) -> Self {
        State::new(Operator::identity(&[d]).scale(1.0 / d as f64)).unwrap()
    }

    /// Classical distribution embedded as a diagonal state.
    pub fn from_distribution(p: &[f64]) -> Result<Self> {
        State::new(Operator::from_diag(p, &[p.len()])?)
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn purity(&self) -> f64 {
        self.op.matmul(&self.op).unwrap().trace_re()
    }
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

/// A completely positive trace-preserving map stored as a Choi operator.
#[derive(Debug, Serialize, Deserialize)]
pub struct Channel {
    choi: Operator,
    dim_in: usize,
    dim_out: usize,
    #[serde(skip)]
    kraus: OnceLock<Vec<DMatrix<C64>>>,
}

impl Clone for Channel {
    fn clone(&self) -> Self {
        let kraus = OnceLock::new();
        if let Some(k) = self.kraus.get() {
            let _ = kraus.set(k.clone());
        }
        Channel {
            choi: self.choi.clone(),
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus,
        }
    }
}

impl Channel {
    /// Validate and wrap a Choi operator (systems `[in, out]`).
    pub fn from_choi(choi: Operator, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.dim() != dim_in * dim_out {
            return Err(Error::dim(format!(
                "choi dim {} vs {}x{}",
                choi.dim(),
                dim_in,
                dim_out
            )));
        }
        let choi = choi.hermitize()?.with_dims(vec![dim_in, dim_out])?;
        let spec = eig_hermitian(&choi)?;
        let scale = spec.max().abs().max(1.0);
        if spec.min() < -TP_TOL * scale {
            return Err(Error::NotPsd { min_eig: spec.min() });
        }
        let ch = Channel {
            choi,
            dim_in,
            dim_out,
            kraus: OnceLock::new(),
        };
        let res = ch.tp_residual()?;
        if res > TP_TOL * (dim_in as f64) {
            return Err(Error::arg(format!("not trace preserving, residual {res:.3e}")));
        }
        Ok(ch)
    }

    /// Wrap without the PSD/TP checks. For internally composed results that
    /// are valid by construction up to roundoff.
    pub(crate) fn from_choi_unchecked(choi: Operator, dim_in: usize, dim_out: usize) -> Self {
        let choi = choi.with_dims(vec![dim_in, dim_out]).expect("choi dims");
        Channel {
            choi,
            dim_in,
            dim_out,
            kraus: OnceLock::new(),
        }
    }

    pub fn from_kraus(kraus: &[DMatrix<C64>], dim_in: usize, dim_out: usize) -> Result<Self> {
        if kraus.is_empty() || kraus.iter().any(|k| k.nrows() != dim_out || k.ncols() != dim_in) {
            return Err(Error::dim("kraus operator shapes"));
        }
        let d = dim_in * dim_out;
        let mut mat = DMatrix::<C64>::zeros(d, d);
        for k in kraus {
            // |J> = sum_i |i> (x) K|i>
            for i in 0..dim_in {
                for j in 0..dim_in {
                    for a in 0..dim_out {
                        for b in 0..dim_out {
                            mat[(i * dim_out + a, j * dim_out + b)] += k[(a, i)] * k[(b, j)].conj();
                        }
                    }
                }
            }
        }
        // complete positivity holds by construction; only trace preservation
        // needs checking
        let choi = Operator::new(mat, vec![dim_in, dim_out])?.hermitize()?;
        let ch = Channel {
            choi,
            dim_in,
            dim_out,
            kraus: OnceLock::new(),
        };
        let res = ch.tp_residual()?;
        if res > TP_TOL * (dim_in as f64) {
            return Err(Error::arg(format!("not trace preserving, residual {res:.3e}")));
        }
        let _ = ch.kraus.set(kraus.to_vec());
        Ok(ch)
    }

    /// Stinespring isometry `V: in -> out (x) env`, rows indexed `(out, env)`
    /// row-major.
    pub fn from_isometry(v: &DMatrix<C64>, dim_out: usize, dim_env: usize) -> Result<Self> {
        let dim_in = v.ncols();
        if v.nrows() != dim_out * dim_env {
            return Err(Error::dim("isometry shape"));
        }
        let mut kraus = Vec::with_capacity(dim_env);
        for e in 0..dim_env {
            let mut k = DMatrix::<C64>::zeros(dim_out, dim_in);
            for o in 0..dim_out {
                for i in 0..dim_in {
                    k[(o, i)] = v[(o * dim_env + e, i)];
                }
            }
            kraus.push(k);
        }
        Channel::from_kraus(&kraus, dim_in, dim_out)
    }

    pub fn identity(d: usize) -> Self {
        let u = DMatrix::<C64>::identity(d, d);
        Channel::from_kraus(&[u], d, d).unwrap()
    }

    pub fn unitary(u: &DMatrix<C64>) -> Result<Self> {
        let d = u.nrows();
        Channel::from_kraus(&[u.clone()], d, d)
    }

    /// Channel permuting subsystems of its input.
    pub fn permutation(dims: &[usize], perm: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        let mut u = DMatrix::<C64>::zeros(d, d);
        // basis vector |x> maps to |perm applied x>
        let id = Operator::identity(dims);
        let permuted = permute_systems(&id, perm)?;
        let _ = permuted; // dims only; build the permutation matrix directly
        let strides_old = {
            let mut s = vec![1usize; dims.len()];
            for i in (0..dims.len().saturating_sub(1)).rev() {
                s[i] = s[i + 1] * dims[i + 1];
            }
            s
        };
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let k = dims.len();
        let mut multi = vec![0usize; k];
        for new_idx in 0..d {
            let mut rem = new_idx;
            for i in (0..k).rev() {
                multi[i] = rem % new_dims[i];
                rem /= new_dims[i];
            }
            let mut old = 0usize;
            for p in 0..k {
                old += multi[p] * strides_old[perm[p]];
            }
            u[(new_idx, old)] = C64::new(1.0, 0.0);
        }
        Channel::from_kraus(&[u], d, d)
    }

    /// Replace the input with the fixed output `tau`.
    pub fn replacer(dim_in: usize, tau: &State) -> Self {
        let choi = kron(&Operator::identity(&[dim_in]), tau.op());
        Channel::from_choi_unchecked(choi, dim_in, tau.dim())
    }

    /// Prepare `tau` from a trivial input.
    pub fn prepare(tau: &State) -> Self {
        Channel::replacer(1, tau)
    }

    /// Trace out the input (trivial output).
    pub fn trace_out(dim_in: usize) -> Self {
        let choi = Operator::identity(&[dim_in]).with_dims(vec![dim_in, 1]).unwrap();
        Channel::from_choi_unchecked(choi, dim_in, 1)
    }

    pub fn depolarizing(d: usize, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::arg("lambda outside [0,1]"));
        }
        let id_choi = Channel::identity(d).choi.clone();
        let mix = kron(&Operator::identity(&[d]), &Operator::identity(&[d]).scale(1.0 / d as f64));
        let choi = id_choi.scale(1.0 - lambda).add(&mix.scale(lambda))?;
        Channel::from_choi(choi, d, d)
    }

    /// Qubit phase flip `rho -> (1-lambda) rho + lambda Z rho Z`.
    pub fn dephasing(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::arg("lambda outside [0,1]"));
        }
        let k0 = DMatrix::<C64>::identity(2, 2) * C64::new((1.0 - lambda).sqrt(), 0.0);
        let mut z = DMatrix::<C64>::identity(2, 2);
        z[(1, 1)] = C64::new(-1.0, 0.0);
        let k1 = z * C64::new(lambda.sqrt(), 0.0);
        Channel::from_kraus(&[k0, k1], 2, 2)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &Operator {
        &self.choi
    }

    /// `||tr_out J - I_in||_F`.
    pub fn tp_residual(&self) -> Result<f64> {
        let marginal = partial_trace(&self.choi, &[0])?;
        Ok(marginal.sub(&Operator::identity(&[self.dim_in]))?.frobenius_norm())
    }

    /// Kraus operators, computed from the Choi spectrum when no constructor
    /// supplied them.
    pub fn kraus(&self) -> &Vec<DMatrix<C64>> {
        self.kraus.get_or_init(|| {
            let spec = eig_hermitian(&self.choi).expect("choi hermitian");
            let mut ops = Vec::new();
            for (k, &lam) in spec.values.iter().enumerate() {
                if lam <= EIG_CLIP {
                    continue;
                }
                let col = spec.vectors.column(k);
                let mut m = DMatrix::<C64>::zeros(self.dim_out, self.dim_in);
                for i in 0..self.dim_in {
                    for a in 0..self.dim_out {
                        m[(a, i)] = col[i * self.dim_out + a] * C64::new(lam.sqrt(), 0.0);
                    }
                }
                ops.push(m);
            }
            ops
        })
    }

    /// Apply to a density operator.
    pub fn apply_op(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.dim_in {
            return Err(Error::dim(format!("state dim {} vs channel input {}", rho.dim(), self.dim_in)));
        }
        let kraus = self.kraus();
        let mut out = DMatrix::<C64>::zeros(self.dim_out, self.dim_out);
        for k in kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        Operator::new(out, vec![self.dim_out])
    }

    pub fn apply(&self, rho: &State) -> Result<State> {
        let out = self.apply_op(rho.op())?;
        State::build(out, false)
    }

    /// `after . self` as a new channel.
    pub fn then(&self, after: &Channel) -> Result<Channel> {
        compose(after, self)
    }

    /// Choi-level equality within `tol` (Frobenius).
    pub fn choi_eq(&self, other: &Channel, tol: f64) -> bool {
        self.dim_in == other.dim_in
            && self.dim_out == other.dim_out
            && self.choi.sub(&other.choi).map(|d| d.frobenius_norm() <= tol).unwrap_or(false)
    }
}

/// `compose(S, N) = S . N` (first `N`, then `S`).
pub fn compose(after: &Channel, before: &Channel) -> Result<Channel> {
    if before.dim_out != after.dim_in {
        return Err(Error::dim(format!(
            "compose: {} -> {} then {} -> {}",
            before.dim_in, before.dim_out, after.dim_in, after.dim_out
        )));
    }
    // fast path: both sides carry kraus decompositions of modest size
    if let (Some(k1), Some(k2)) = (before.kraus.get(), after.kraus.get()) {
        if k1.len() * k2.len() <= 1024 {
            let kraus: Vec<DMatrix<C64>> = k2.iter().flat_map(|b| k1.iter().map(move |a| b * a)).collect();
            return Channel::from_kraus(&kraus, before.dim_in, after.dim_out);
        }
    }
    let x = Wired::new(before.choi.clone(), vec![0, 1]);
    let y = Wired::new(after.choi.clone(), vec![1, 2]);
    let linked = link(&x, &y)?;
    debug_assert_eq!(linked.labels, vec![0, 2]);
    Ok(Channel::from_choi_unchecked(linked.op, before.dim_in, after.dim_out))
}

/// Parallel composition `N (x) M`.
pub fn tensor(n: &Channel, m: &Channel) -> Result<Channel> {
    // kron gives systems [inN, outN, inM, outM]; reorder to [inN, inM, outN, outM]
    let joint = kron(&n.choi, &m.choi);
    let reordered = permute_systems(&joint, &[0, 2, 1, 3])?;
    let choi = reordered.with_dims(vec![n.dim_in * m.dim_in, n.dim_out * m.dim_out])?;
    let ch = Channel::from_choi_unchecked(choi, n.dim_in * m.dim_in, n.dim_out * m.dim_out);
    // carry kraus operators through so downstream applications never need a
    // spectral factorization of the joint Choi
    if let (Some(k1), Some(k2)) = (n.kraus.get(), m.kraus.get()) {
        if k1.len() * k2.len() <= 512 {
            let kraus: Vec<DMatrix<C64>> = k1
                .iter()
                .flat_map(|x| k2.iter().map(move |y| x.kronecker(y)))
                .collect();
            let _ = ch.kraus.set(kraus);
        }
    }
    Ok(ch)
}

/// `N (x) id_r`.
pub fn with_reference(n: &Channel, r: usize) -> Result<Channel> {
    if r == 1 {
        return Ok(n.clone());
    }
    tensor(n, &Channel::identity(r))
}

/// Free-function alias mirroring the operation list.
pub fn apply(n: &Channel, rho: &State) -> Result<State> {
    n.apply(rho)
}

/// Choi operator of a map given by Kraus operators.
pub fn choi_of(kraus: &[DMatrix<C64>], dim_in: usize, dim_out: usize) -> Result<Channel> {
    Channel::from_kraus(kraus, dim_in, dim_out)
}

// ---------------------------------------------------------------------------
// Wire-labeled operators and the link product
// ---------------------------------------------------------------------------

/// Operator whose subsystems carry wire labels, used for comb contraction.
#[derive(Clone, Debug)]
pub(crate) struct Wired {
    pub op: Operator,
    pub labels: Vec<u32>,
}

impl Wired {
    pub fn new(op: Operator, labels: Vec<u32>) -> Self {
        assert_eq!(op.dims().len(), labels.len());
        Wired { op, labels }
    }
}

/// Link product: contract `x` and `y` over their shared wire labels
/// (`tr_shared[(X (x) I)(Y^{T_shared} (x) I)]`). Result wires: the non-shared
/// labels of `x` followed by those of `y`.
pub(crate) fn link(x: &Wired, y: &Wired) -> Result<Wired> {
    let shared: Vec<u32> = x.labels.iter().copied().filter(|l| y.labels.contains(l)).collect();
    for l in &shared {
        let dx = x.op.dims()[x.labels.iter().position(|a| a == l).unwrap()];
        let dy = y.op.dims()[y.labels.iter().position(|a| a == l).unwrap()];
        if dx != dy {
            return Err(Error::dim(format!("wire {l} has dims {dx} vs {dy}")));
        }
    }
    let x_only: Vec<u32> = x.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
    let y_only: Vec<u32> = y.labels.iter().copied().filter(|l| !shared.contains(l)).collect();

    // union ordering: x's labels then y-only labels
    let union: Vec<u32> = x.labels.iter().copied().chain(y_only.iter().copied()).collect();
    let dim_of = |l: u32| -> usize {
        if let Some(p) = x.labels.iter().position(|&a| a == l) {
            x.op.dims()[p]
        } else {
            y.op.dims()[y.labels.iter().position(|&a| a == l).unwrap()]
        }
    };

    let x_ext = if y_only.is_empty() {
        x.op.clone()
    } else {
        let pad: Vec<usize> = y_only.iter().map(|&l| dim_of(l)).collect();
        kron(&x.op, &Operator::identity(&pad))
    };

    let shared_pos_y: Vec<usize> = y
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| shared.contains(l))
        .map(|(i, _)| i)
        .collect();
    let yt = if shared_pos_y.is_empty() {
        y.op.clone()
    } else {
        partial_transpose(&y.op, &shared_pos_y)?
    };
    let y_ext = if x_only.is_empty() {
        yt
    } else {
        let pad: Vec<usize> = x_only.iter().map(|&l| dim_of(l)).collect();
        kron(&yt, &Operator::identity(&pad))
    };
    let y_labels_ext: Vec<u32> = y.labels.iter().copied().chain(x_only.iter().copied()).collect();
    let perm: Vec<usize> = union
        .iter()
        .map(|l| y_labels_ext.iter().position(|a| a == l).unwrap())
        .collect();
    let y_aligned = permute_systems(&y_ext, &perm)?;

    let prod = x_ext.matmul(&y_aligned)?;
    let keep: Vec<usize> = union
        .iter()
        .enumerate()
        .filter(|(_, l)| !shared.contains(l))
        .map(|(i, _)| i)
        .collect();
    let out_labels: Vec<u32> = keep.iter().map(|&i| union[i]).collect();
    let traced = partial_trace(&prod, &keep)?;
    Ok(Wired::new(traced, if out_labels.is_empty() { vec![0] } else { out_labels }))
}

// ---------------------------------------------------------------------------
// Combs and superchannels
// ---------------------------------------------------------------------------

/// Wire dimensions of a k-comb: `C -> (A_1 S_1)`, slots `A_i -> B_i`,
/// memories `S_i`, final output `D`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombWires {
    pub c: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub s: Vec<usize>,
    pub d: usize,
}

impl CombWires {
    pub fn slots(&self) -> usize {
        self.a.len()
    }
}

/// Ordered list of component channels forming a quantum comb.
///
/// Component `0` maps `C -> A_1 (x) S_1`, component `i` maps
/// `B_i (x) S_i -> A_{i+1} (x) S_{i+1}` and the last maps
/// `B_{k-1} (x) S_{k-1} -> D`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comb {
    components: Vec<Channel>,
    wires: CombWires,
}

impl Comb {
    pub fn new(components: Vec<Channel>, wires: CombWires) -> Result<Self> {
        let k = components.len();
        if k == 0 {
            return Err(Error::arg("comb needs at least one component"));
        }
        let slots = k - 1;
        if wires.a.len() != slots || wires.b.len() != slots || wires.s.len() != slots {
            return Err(Error::dim("wire lists must have k-1 entries"));
        }
        for (i, comp) in components.iter().enumerate() {
            let want_in = if i == 0 { wires.c } else { wires.b[i - 1] * wires.s[i - 1] };
            let want_out = if i == k - 1 { wires.d } else { wires.a[i] * wires.s[i] };
            if comp.dim_in() != want_in || comp.dim_out() != want_out {
                return Err(Error::dim(format!(
                    "component {i} is {}->{} but wires require {}->{}",
                    comp.dim_in(),
                    comp.dim_out(),
                    want_in,
                    want_out
                )));
            }
        }
        Ok(Comb { components, wires })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn wires(&self) -> &CombWires {
        &self.wires
    }

    pub fn components(&self) -> &[Channel] {
        &self.components
    }

    /// The m-comb made of the first `m` components. For `m < k` the final
    /// output is the composite wire `A_m (x) S_m`.
    pub fn prefix(&self, m: usize) -> Result<Comb> {
        if m == 0 || m > self.k() {
            return Err(Error::arg(format!("prefix length {m} out of range")));
        }
        let components = self.components[..m].to_vec();
        let slots = m - 1;
        let wires = CombWires {
            c: self.wires.c,
            a: self.wires.a[..slots].to_vec(),
            b: self.wires.b[..slots].to_vec(),
            s: self.wires.s[..slots].to_vec(),
            d: if m == self.k() {
                self.wires.d
            } else {
                self.wires.a[m - 1] * self.wires.s[m - 1]
            },
        };
        Comb::new(components, wires)
    }

    /// Insert `k-1` channels into the slots and return the resulting channel
    /// from `C (x) R` to `D (x) R`. Each inserted channel must map
    /// `A_i (x) R -> B_i (x) R`; the reference `R` is threaded through all of
    /// them and untouched by the comb.
    pub fn apply_channels(&self, inputs: &[Channel], ref_dim: usize) -> Result<Channel> {
        for (i, ins) in inputs.iter().enumerate() {
            if i < self.wires.a.len()
                && (ins.dim_in() != self.wires.a[i] * ref_dim
                    || ins.dim_out() != self.wires.b[i] * ref_dim)
            {
                return Err(Error::dim(format!(
                    "slot {i} channel is {}->{}, wires require {}->{}",
                    ins.dim_in(),
                    ins.dim_out(),
                    self.wires.a[i] * ref_dim,
                    self.wires.b[i] * ref_dim
                )));
            }
        }
        self.apply_channels_general(inputs)
    }

    /// Like [`Comb::apply_channels`], but each slot channel may carry its own
    /// reference whose dimension changes across the slot: slot `i` maps
    /// `A_i (x) R_i -> B_i (x) R_i'`, with `R_i'` handed to the next slot.
    /// Reference dimensions are inferred from the slot channel dimensions.
    pub fn apply_channels_general(&self, inputs: &[Channel]) -> Result<Channel> {
        let slots = self.k() - 1;
        if inputs.len() != slots {
            return Err(Error::arg(format!("expected {} slot channels, got {}", slots, inputs.len())));
        }
        let mut refs_in = Vec::with_capacity(slots);
        let mut refs_out = Vec::with_capacity(slots);
        for (i, ins) in inputs.iter().enumerate() {
            let (a, b) = (self.wires.a[i], self.wires.b[i]);
            if ins.dim_in() % a != 0 || ins.dim_out() % b != 0 {
                return Err(Error::dim(format!("slot {i} dims not multiples of wire dims")));
            }
            refs_in.push(ins.dim_in() / a);
            refs_out.push(ins.dim_out() / b);
        }
        for i in 1..slots {
            if refs_in[i] != refs_out[i - 1] {
                return Err(Error::dim(format!(
                    "slot {} reference {} does not match previous output reference {}",
                    i,
                    refs_in[i],
                    refs_out[i - 1]
                )));
            }
        }
        let r0 = if slots == 0 { 1 } else { refs_in[0] };
        let mut current = with_reference(&self.components[0], r0)?;
        for i in 0..slots {
            let (a, s, b) = (self.wires.a[i], self.wires.s[i], self.wires.b[i]);
            let (ri, ro) = (refs_in[i], refs_out[i]);
            // [A, S, R] -> [A, R, S]
            let p1 = Channel::permutation(&[a, s, ri], &[0, 2, 1])?;
            let g = tensor(&inputs[i], &Channel::identity(s))?;
            // [B, R', S] -> [B, S, R']
            let p2 = Channel::permutation(&[b, ro, s], &[0, 2, 1])?;
            let next = with_reference(&self.components[i + 1], ro)?;
            current = current.then(&p1)?.then(&g)?.then(&p2)?.then(&next)?;
        }
        Ok(current)
    }

    /// Process Choi operator on wires `[C, A_1, B_1, ..., A_{k-1}, B_{k-1}, D]`
    /// with the internal memories contracted away. Two combs act identically
    /// on all slot fillers (with arbitrary references) iff these agree.
    pub fn process_choi(&self) -> Result<Operator> {
        // wire labels: c=0, a_i=3i+1, b_i=3i+2, s_i=3i+3, d = 3k+1
        let k = self.k();
        let lab_c = 0u32;
        let lab_a = |i: usize| (3 * i + 1) as u32;
        let lab_b = |i: usize| (3 * i + 2) as u32;
        let lab_s = |i: usize| (3 * i + 3) as u32;
        let lab_d = (3 * k + 1) as u32;

        let mut acc: Option<Wired> = None;
        for (i, comp) in self.components.iter().enumerate() {
            let choi = comp.choi().clone();
            let (in_labels, in_dims): (Vec<u32>, Vec<usize>) = if i == 0 {
                (vec![lab_c], vec![self.wires.c])
            } else {
                (vec![lab_b(i - 1), lab_s(i - 1)], vec![self.wires.b[i - 1], self.wires.s[i - 1]])
            };
            let (out_labels, out_dims): (Vec<u32>, Vec<usize>) = if i == k - 1 {
                (vec![lab_d], vec![self.wires.d])
            } else {
                (vec![lab_a(i), lab_s(i)], vec![self.wires.a[i], self.wires.s[i]])
            };
            let mut dims = in_dims;
            dims.extend(out_dims);
            let op = choi.with_dims(dims)?;
            let mut labels = in_labels;
            labels.extend(out_labels);
            let w = Wired::new(op, labels);
            acc = Some(match acc {
                None => w,
                Some(prev) => link(&prev, &w)?,
            });
        }
        let acc = acc.unwrap();
        // order wires canonically: C, A_1, B_1, ..., D
        let mut want: Vec<u32> = vec![lab_c];
        for i in 0..k - 1 {
            want.push(lab_a(i));
            want.push(lab_b(i));
        }
        want.push(lab_d);
        let perm: Vec<usize> = want
            .iter()
            .map(|l| acc.labels.iter().position(|a| a == l).unwrap())
            .collect();
        permute_systems(&acc.op, &perm)
    }
}

/// A 2-comb with named decomposition `(E: C -> A (x) S, D: B (x) S -> D)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Superchannel {
    comb: Comb,
}

impl Superchannel {
    pub fn from_parts(pre: Channel, post: Channel, wires: CombWires) -> Result<Self> {
        if wires.slots() != 1 {
            return Err(Error::dim("superchannel wires must describe one slot"));
        }
        let comb = Comb::new(vec![pre, post], wires)?;
        Ok(Superchannel { comb })
    }

    pub fn from_comb(comb: Comb) -> Result<Self> {
        if comb.k() != 2 {
            return Err(Error::dim(format!("superchannel needs k=2, got {}", comb.k())));
        }
        Ok(Superchannel { comb })
    }

    pub fn comb(&self) -> &Comb {
        &self.comb
    }

    /// Pre-processing channel `E: C -> A (x) S`.
    pub fn pre(&self) -> &Channel {
        &self.comb.components[0]
    }

    /// Post-processing channel `D: B (x) S -> D`.
    pub fn post(&self) -> &Channel {
        &self.comb.components[1]
    }

    pub fn dim_c(&self) -> usize {
        self.comb.wires.c
    }

    pub fn dim_a(&self) -> usize {
        self.comb.wires.a[0]
    }

    pub fn dim_b(&self) -> usize {
        self.comb.wires.b[0]
    }

    pub fn dim_s(&self) -> usize {
        self.comb.wires.s[0]
    }

    pub fn dim_d(&self) -> usize {
        self.comb.wires.d
    }

    /// Act on a slot channel `N: A (x) R -> B (x) R`.
    pub fn apply_to(&self, n: &Channel, ref_dim: usize) -> Result<Channel> {
        self.comb.apply_channels(std::slice::from_ref(n), ref_dim)
    }

    /// Act on a slot channel whose reference changes dimension across the
    /// slot, `N: A (x) R -> B (x) R'`.
    pub fn apply_to_general(&self, n: &Channel) -> Result<Channel> {
        self.comb.apply_channels_general(std::slice::from_ref(n))
    }

    /// Process Choi on `[C, A, B, D]`.
    pub fn process_choi(&self) -> Result<Operator> {
        self.comb.process_choi()
    }

    /// Equality of action on all slot channels (with references), decided on
    /// process Choi operators.
    pub fn action_eq(&self, other: &Superchannel, tol: f64) -> bool {
        match (self.process_choi(), other.process_choi()) {
            (Ok(a), Ok(b)) => a.sub(&b).map(|d| d.frobenius_norm() <= tol).unwrap_or(false),
            _ => false,
        }
    }

    pub fn same_signature(&self, other: &Superchannel) -> bool {
        self.dim_c() == other.dim_c()
            && self.dim_a() == other.dim_a()
            && self.dim_b() == other.dim_b()
            && self.dim_d() == other.dim_d()
    }
}

// ---------------------------------------------------------------------------
// Classical superchannels
// ---------------------------------------------------------------------------

/// Alphabet sizes of a classical superchannel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub c: usize,
    pub a: usize,
    pub s: usize,
    pub b: usize,
    pub d: usize,
}

/// A pair of conditional probability tables `e(a,s|c)` and `d(d|b,s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalSuperchannel {
    /// `e[c][a][s] = e(a,s|c)`
    pub e: Vec<Vec<Vec<f64>>>,
    /// `d[b][s][dd] = d(dd|b,s)`
    pub d: Vec<Vec<Vec<f64>>>,
    pub alphabets: Alphabets,
}

/// A classical channel table `n[a][b] = n(b|a)`.
pub type ClassicalChannel = Vec<Vec<f64>>;

impl ClassicalSuperchannel {
    pub fn new(e: Vec<Vec<Vec<f64>>>, d: Vec<Vec<Vec<f64>>>, alphabets: Alphabets) -> Result<Self> {
        let al = alphabets;
        if e.len() != al.c || e.iter().any(|t| t.len() != al.a || t.iter().any(|r| r.len() != al.s)) {
            return Err(Error::dim("e table shape"));
        }
        if d.len() != al.b || d.iter().any(|t| t.len() != al.s || t.iter().any(|r| r.len() != al.d)) {
            return Err(Error::dim("d table shape"));
        }
        for c in 0..al.c {
            let mut sum = 0.0;
            for a in 0..al.a {
                for s in 0..al.s {
                    let v = e[c][a][s];
                    if v < -TABLE_TOL {
                        return Err(Error::arg("negative e entry"));
                    }
                    sum += v;
                }
            }
            if (sum - 1.0).abs() > TABLE_TOL * (al.a * al.s) as f64 {
                return Err(Error::arg(format!("e(.|{c}) sums to {sum}")));
            }
        }
        for b in 0..al.b {
            for s in 0..al.s {
                let sum: f64 = d[b][s].iter().sum();
                if d[b][s].iter().any(|&v| v < -TABLE_TOL) {
                    return Err(Error::arg("negative d entry"));
                }
                if (sum - 1.0).abs() > TABLE_TOL * al.d as f64 {
                    return Err(Error::arg(format!("d(.|{b},{s}) sums to {sum}")));
                }
            }
        }
        Ok(ClassicalSuperchannel { e, d, alphabets })
    }

    /// The identity superchannel on a given alphabet (trivial side channel,
    /// `a = c`, `d = b`).
    pub fn identity(n: usize) -> Self {
        let mut e = vec![vec![vec![0.0; 1]; n]; n];
        for c in 0..n {
            e[c][c][0] = 1.0;
        }
        let mut d = vec![vec![vec![0.0; n]; 1]; n];
        for b in 0..n {
            d[b][0][b] = 1.0;
        }
        ClassicalSuperchannel::new(e, d, Alphabets { c: n, a: n, s: 1, b: n, d: n }).unwrap()
    }
}

/// `m(d|c) = sum_{a,b,s} d(d|b,s) n(b|a) e(a,s|c)` applied to the input
/// distribution `p`.
pub fn classical_apply(theta: &ClassicalSuperchannel, n: &ClassicalChannel, p: &[f64]) -> Result<Vec<f64>> {
    let al = theta.alphabets;
    if n.len() != al.a || n.iter().any(|r| r.len() != al.b) {
        return Err(Error::dim("classical channel table shape"));
    }
    if p.len() != al.c {
        return Err(Error::dim("input distribution length"));
    }
    let mut out = vec![0.0; al.d];
    for c in 0..al.c {
        if p[c] == 0.0 {
            continue;
        }
        for a in 0..al.a {
            for s in 0..al.s {
                let w = theta.e[c][a][s] * p[c];
                if w == 0.0 {
                    continue;
                }
                for b in 0..al.b {
                    let wb = w * n[a][b];
                    if wb == 0.0 {
                        continue;
                    }
                    for dd in 0..al.d {
                        out[dd] += wb * theta.d[b][s][dd];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Embed a classical channel table as a quantum channel with diagonal Choi.
pub fn embed_classical_channel(n: &ClassicalChannel) -> Result<Channel> {
    let na = n.len();
    if na == 0 {
        return Err(Error::dim("empty table"));
    }
    let nb = n[0].len();
    let mut diag = vec![0.0; na * nb];
    for a in 0..na {
        for b in 0..nb {
            diag[a * nb + b] = n[a][b];
        }
    }
    Channel::from_choi(Operator::from_diag(&diag, &[na, nb])?, na, nb)
}

/// Embed a classical superchannel as a quantum superchannel with diagonal
/// component Chois. Its action on embedded channels and diagonal states
/// matches [`classical_apply`].
pub fn embed_classical(theta: &ClassicalSuperchannel) -> Result<Superchannel> {
    let al = theta.alphabets;
    // E: C -> A (x) S
    let mut ediag = vec![0.0; al.c * al.a * al.s];
    for c in 0..al.c {
        for a in 0..al.a {
            for s in 0..al.s {
                ediag[c * al.a * al.s + a * al.s + s] = theta.e[c][a][s];
            }
        }
    }
    let e = Channel::from_choi(
        Operator::from_diag(&ediag, &[al.c, al.a * al.s])?,
        al.c,
        al.a * al.s,
    )?;
    // D: B (x) S -> D
    let mut ddiag = vec![0.0; al.b * al.s * al.d];
    for b in 0..al.b {
        for s in 0..al.s {
            for dd in 0..al.d {
                ddiag[(b * al.s + s) * al.d + dd] = theta.d[b][s][dd];
            }
        }
    }
    let dch = Channel::from_choi(
        Operator::from_diag(&ddiag, &[al.b * al.s, al.d])?,
        al.b * al.s,
        al.d,
    )?;
    Superchannel::from_parts(
        e,
        dch,
        CombWires { c: al.c, a: vec![al.a], b: vec![al.b], s: vec![al.s], d: al.d },
    )
}

// ---------------------------------------------------------------------------
// Random sampling (seedable, no global RNG)
// ---------------------------------------------------------------------------

/// Deterministic RNG for reproducible sampling.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn rand_unit(rng: &mut impl Rng) -> f64 {
    rng.random::<f64>()
}

/// Standard normal via Box-Muller.
pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(gauss(rng), gauss(rng)))
}

/// Random Hermitian matrix with entries of unit scale.
pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> Operator {
    let g = ginibre(d, d, rng);
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    Operator::from_matrix(h).unwrap()
}

/// Random density operator of the given rank (Ginibre ensemble).
pub fn random_density(d: usize, rank: usize, rng: &mut impl Rng) -> Operator {
    assert!(rank >= 1 && rank <= d);
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Operator::from_matrix(m * C64::new(1.0 / tr, 0.0)).unwrap()
}

pub fn random_state(d: usize, rank: usize, rng: &mut impl Rng) -> Result<State> {
    if rank == 0 || rank > d {
        return Err(Error::arg(format!("rank {rank} out of range for dim {d}")));
    }
    State::new(random_density(d, rank, rng))
}

pub fn random_pure(d: usize, rng: &mut impl Rng) -> DVector<C64> {
    let v = DVector::from_fn(d, |_, _| C64::new(gauss(rng), gauss(rng)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Haar unitary via QR of a Ginibre matrix with phase fixing.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let r = qr.r().clone_owned();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() < 1e-300 { C64::new(1.0, 0.0) } else { rjj / rjj.norm() };
        for i in 0..d {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}

/// Haar isometry `d_in -> d_out` (`d_out >= d_in`): first columns of a Haar
/// unitary.
pub fn random_isometry(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Result<DMatrix<C64>> {
    if d_out < d_in {
        return Err(Error::arg(format!("isometry needs d_out >= d_in, got {d_in}->{d_out}")));
    }
    let u = random_unitary(d_out, rng);
    Ok(u.columns(0, d_in).into_owned())
}

/// Random channel via Stinespring dilation with environment dimension
/// `d_in * d_out`.
pub fn random_channel(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Result<Channel> {
    if d_in == 0 || d_out == 0 {
        return Err(Error::arg("zero dimension"));
    }
    let d_env = d_in * d_out;
    let v = random_isometry(d_in, d_out * d_env, rng)?;
    Channel::from_isometry(&v, d_out, d_env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = seeded_rng(1);
        let rho = random_state(3, 2, &mut rng).unwrap();
        let id = Channel::identity(3);
        let out = id.apply(&rho).unwrap();
        assert!(out.op().sub(rho.op()).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let mut rng = seeded_rng(2);
        let n = random_channel(2, 3, &mut rng).unwrap();
        let left = compose(&Channel::identity(3), &n).unwrap();
        let right = compose(&n, &Channel::identity(2)).unwrap();
        assert!(left.choi_eq(&n, 1e-12));
        assert!(right.choi_eq(&n, 1e-12));
    }

    #[test]
    fn depolarizing_sends_basis_to_mixed() {
        // kraus-sum oracle: fully depolarizing output is I/2 regardless of input
        let dep = Channel::depolarizing(2, 1.0).unwrap();
        let out = dep.apply(&State::basis(2, 0)).unwrap();
        let half = Operator::identity(&[2]).scale(0.5);
        assert!(out.op().sub(&half).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn compose_matches_kraus_oracle() {
        let mut rng = seeded_rng(3);
        let n = random_channel(2, 2, &mut rng).unwrap();
        let m = random_channel(2, 2, &mut rng).unwrap();
        let composed = compose(&m, &n).unwrap();
        // oracle: sequential kraus application on a basis of inputs
        for i in 0..2 {
            for j in 0..2 {
                let mut mat = DMatrix::<C64>::zeros(2, 2);
                mat[(i, j)] = C64::new(1.0, 0.0);
                let x = Operator::from_matrix(mat).unwrap();
                let via_choi = composed.apply_op_linear(&x);
                let step = m.apply_op_linear(&n.apply_op_linear(&x));
                assert!(via_choi.sub(&step).unwrap().frobenius_norm() < 1e-11);
            }
        }
    }

    #[test]
    fn tensor_acts_factorwise() {
        let mut rng = seeded_rng(4);
        let n = random_channel(2, 2, &mut rng).unwrap();
        let m = random_channel(2, 2, &mut rng).unwrap();
        let nm = tensor(&n, &m).unwrap();
        let ra = random_density(2, 2, &mut rng);
        let rb = random_density(2, 1, &mut rng);
        let joint = crate::linalg::kron(&ra, &rb);
        let out = nm.apply_op(&joint.with_dims(vec![4]).unwrap()).unwrap();
        let expect = crate::linalg::kron(&n.apply_op(&ra).unwrap(), &m.apply_op(&rb).unwrap());
        assert!(out.sub(&expect.with_dims(vec![4]).unwrap()).unwrap().frobenius_norm() < 1e-11);
    }

    #[test]
    fn random_channel_is_cptp() {
        let mut rng = seeded_rng(5);
        for _ in 0..20 {
            let n = random_channel(2, 2, &mut rng).unwrap();
            assert!(n.tp_residual().unwrap() < 1e-9);
            let spec = eig_hermitian(n.choi()).unwrap();
            assert!(spec.min() > -1e-10);
        }
    }

    #[test]
    fn random_state_rank_one_is_pure() {
        let mut rng = seeded_rng(6);
        let rho = random_state(2, 1, &mut rng).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let a = random_channel(2, 2, &mut seeded_rng(42)).unwrap();
        let b = random_channel(2, 2, &mut seeded_rng(42)).unwrap();
        assert!(a.choi_eq(&b, 0.0));
    }

    #[test]
    fn comb_of_identities_is_identity() {
        let theta = identity_superchannel(2);
        let out = theta.apply_to(&Channel::identity(2), 1).unwrap();
        assert!(out.choi_eq(&Channel::identity(2), 1e-10));
    }

    #[test]
    fn comb_apply_matches_sequential_composition_oracle() {
        // 2-comb of two fixed qubit channels with a pauli-x conjugation slot
        let mut rng = seeded_rng(7);
        let e = random_channel(2, 4, &mut rng).unwrap(); // C -> A(2) S(2)
        let d = random_channel(4, 2, &mut rng).unwrap(); // B(2) S(2) -> D
        let theta = Superchannel::from_parts(
            e.clone(),
            d.clone(),
            CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 },
        )
        .unwrap();
        let mut x = DMatrix::<C64>::zeros(2, 2);
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        let slot = Channel::unitary(&x).unwrap();
        let got = theta.apply_to(&slot, 1).unwrap();
        // oracle: explicit composition D . (X (x) id_S) . E
        let mid = tensor(&slot, &Channel::identity(2)).unwrap();
        let expect = e.then(&mid).unwrap().then(&d).unwrap();
        assert!(got.choi_eq(&expect, 1e-10));
    }

    #[test]
    fn comb_prefix_recombines() {
        let mut rng = seeded_rng(8);
        // 3-comb with qubit wires and qubit memories
        let n1 = random_channel(2, 4, &mut rng).unwrap();
        let n2 = random_channel(4, 4, &mut rng).unwrap();
        let n3 = random_channel(4, 2, &mut rng).unwrap();
        let comb = Comb::new(
            vec![n1.clone(), n2.clone(), n3.clone()],
            CombWires { c: 2, a: vec![2, 2], b: vec![2, 2], s: vec![2, 2], d: 2 },
        )
        .unwrap();
        assert_eq!(comb.prefix(3).unwrap().k(), 3);
        let p1 = comb.prefix(1).unwrap();
        assert_eq!(p1.k(), 1);
        assert!(p1.components()[0].choi_eq(&n1, 0.0));

        // prefix(2) recombined with the tail reproduces the full comb's action
        let p2 = comb.prefix(2).unwrap();
        let mut rng2 = seeded_rng(9);
        let s1 = random_channel(2, 2, &mut rng2).unwrap();
        let s2 = random_channel(2, 2, &mut rng2).unwrap();
        let full = comb.apply_channels(&[s1.clone(), s2.clone()], 1).unwrap();
        // apply prefix with first slot, then feed through slot 2 and the tail
        let head = p2.apply_channels(std::slice::from_ref(&s1), 1).unwrap(); // C -> A2 (x) S2
        let mid = tensor(&s2, &Channel::identity(2)).unwrap(); // A2 S2 -> B2 S2
        let rebuilt = head.then(&mid).unwrap().then(&n3).unwrap();
        assert!(rebuilt.choi_eq(&full, 1e-10));
    }

    #[test]
    fn process_choi_detects_equal_action() {
        let mut rng = seeded_rng(10);
        let e = random_channel(2, 4, &mut rng).unwrap();
        let d = random_channel(4, 2, &mut rng).unwrap();
        let w = CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 };
        let t1 = Superchannel::from_parts(e.clone(), d.clone(), w.clone()).unwrap();
        // same action, different decomposition: push a unitary through S
        let u = random_unitary(2, &mut rng);
        let us = tensor(&Channel::identity(2), &Channel::unitary(&u).unwrap()).unwrap();
        let ud = tensor(&Channel::identity(2), &Channel::unitary(&u.adjoint()).unwrap()).unwrap();
        let e2 = e.then(&us).unwrap();
        let d2 = ud.then(&d).unwrap();
        let t2 = Superchannel::from_parts(e2, d2, w).unwrap();
        assert!(t1.action_eq(&t2, 1e-9));
    }

    #[test]
    fn classical_apply_identity() {
        let theta = ClassicalSuperchannel::identity(2);
        let n = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = vec![0.3, 0.7];
        let out = classical_apply(&theta, &n, &p).unwrap();
        assert_abs_diff_eq!(out[0], 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], 0.7, epsilon = 1e-14);
    }

    #[test]
    fn classical_apply_uniform_post() {
        // d table that outputs uniform regardless of input
        let mut theta = ClassicalSuperchannel::identity(2);
        for b in 0..2 {
            theta.d[b][0] = vec![0.5, 0.5];
        }
        let n = vec![vec![0.2, 0.8], vec![0.9, 0.1]];
        let out = classical_apply(&theta, &n, &[0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn classical_apply_matches_triple_sum_oracle() {
        let mut rng = seeded_rng(11);
        let theta = crate::zoo::random_classical_superchannel(
            Alphabets { c: 2, a: 2, s: 2, b: 2, d: 2 },
            &mut rng,
        );
        let n = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let p = vec![1.0, 0.0];
        let got = classical_apply(&theta, &n, &p).unwrap();
        let mut want = vec![0.0; 2];
        for a in 0..2 {
            for s in 0..2 {
                for b in 0..2 {
                    for dd in 0..2 {
                        want[dd] += theta.d[b][s][dd] * n[a][b] * theta.e[0][a][s];
                    }
                }
            }
        }
        for dd in 0..2 {
            assert_abs_diff_eq!(got[dd], want[dd], epsilon = 1e-13);
        }
    }

    #[test]
    fn embedded_classical_matches_classical_apply() {
        let mut rng = seeded_rng(12);
        let theta = crate::zoo::random_classical_superchannel(
            Alphabets { c: 2, a: 2, s: 2, b: 2, d: 2 },
            &mut rng,
        );
        let qtheta = embed_classical(&theta).unwrap();
        let n = vec![vec![0.25, 0.75], vec![1.0, 0.0]];
        let qn = embed_classical_channel(&n).unwrap();
        let p = vec![0.6, 0.4];
        let qp = State::from_distribution(&p).unwrap();
        let out_c = classical_apply(&theta, &n, &p).unwrap();
        let out_q = qtheta.apply_to(&qn, 1).unwrap().apply(&qp).unwrap();
        for dd in 0..2 {
            assert_abs_diff_eq!(out_q.op().matrix()[(dd, dd)].re, out_c[dd], epsilon = 1e-10);
        }
        // off-diagonals vanish
        assert!(out_q.op().matrix()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn link_is_commutative() {
        let mut rng = seeded_rng(13);
        let x = Wired::new(random_density(4, 4, &mut rng).with_dims(vec![2, 2]).unwrap(), vec![0, 1]);
        let y = Wired::new(random_density(4, 4, &mut rng).with_dims(vec![2, 2]).unwrap(), vec![1, 2]);
        let xy = link(&x, &y).unwrap();
        let yx = link(&y, &x).unwrap();
        let perm: Vec<usize> = xy
            .labels
            .iter()
            .map(|l| yx.labels.iter().position(|a| a == l).unwrap())
            .collect();
        let aligned = permute_systems(&yx.op, &perm).unwrap();
        assert!(xy.op.sub(&aligned).unwrap().frobenius_norm() < 1e-11);
    }
}

impl Channel {
    /// Apply as a linear map without state validation (test/diagnostic use;
    /// accepts non-PSD inputs such as matrix units).
    pub fn apply_op_linear(&self, x: &Operator) -> Operator {
        let kraus = self.kraus();
        let mut out = DMatrix::<C64>::zeros(self.dim_out, self.dim_out);
        for k in kraus {
            out += k * x.matrix() * k.adjoint();
        }
        Operator::new(out, vec![self.dim_out]).unwrap()
    }
}

/// The identity superchannel on `d`-dimensional wires (trivial memory).
pub fn identity_superchannel(d: usize) -> Superchannel {
    let e = Channel::identity(d);
    let dch = Channel::identity(d);
    Superchannel::from_parts(
        e,
        dch,
        CombWires { c: d, a: vec![d], b: vec![d], s: vec![1], d },
    )
    .unwrap()
}
