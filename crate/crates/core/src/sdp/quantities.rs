//! SDP-backed discrimination quantities.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    eig_hermitian, kron, mat_fn, partial_trace, support_contained, C64, Operator,
};
use crate::qobj::{Comb, State, Superchannel};
use crate::sdp::{embed_at, herm_basis, solve, Row, SdpProblem, SdpStatus, SolveOpts};
use crate::tol::ZERO_PROB;
use crate::{Error, Result};

fn e_unit(k: usize, l: usize) -> Operator {
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(k, l)] = C64::new(1.0, 0.0);
    m[(l, k)] += C64::new(if k == l { 0.0 } else { 1.0 }, 0.0);
    Operator::from_matrix(m).unwrap()
}

fn e_unit_im(k: usize, l: usize) -> Operator {
    // i(E_kl - E_lk), hermitian
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(k, l)] = C64::new(0.0, 1.0);
    m[(l, k)] = C64::new(0.0, -1.0);
    Operator::from_matrix(m).unwrap()
}

/// Minimum-error (Helstrom) discrimination of two states with prior `p` on
/// the first. Returns the error probability and the optimal POVM element
/// accepting the first hypothesis.
pub fn min_error(p: f64, rho1: &State, rho2: &State) -> Result<(f64, Operator)> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(Error::arg(format!("prior {p} outside (0,1)")));
    }
    if rho1.dim() != rho2.dim() {
        return Err(Error::dim("state dims differ"));
    }
    let d = rho1.dim();
    let delta = rho1.op().scale(p).sub(&rho2.op().scale(1.0 - p))?;
    let mut prob = SdpProblem::maximize();
    let q = prob.add_block(d);
    let slack = prob.add_block(d);
    prob.obj_block(q, delta);
    prob.add_mat_eq(
        d,
        &[(q, &|h: &Operator| h.clone()), (slack, &|h: &Operator| h.clone())],
        &[],
        &Operator::identity(&[d]),
    );
    let sol = solve(&prob, &SolveOpts::tight())?;
    Ok((p - sol.primal, sol.blocks[0].clone()))
}

/// Hypothesis-testing relative entropy `D_H^eps` in bits:
/// `-log2 min { tr(Q sigma) : tr(Q rho) >= 1 - eps, 0 <= Q <= I }`.
pub fn dh_epsilon(rho: &State, sigma: &State, eps: f64) -> Result<f64> {
    dh_epsilon_witness(rho, sigma, eps).map(|(v, _)| v)
}

/// `dh_epsilon` along with the optimal test.
pub fn dh_epsilon_witness(rho: &State, sigma: &State, eps: f64) -> Result<(f64, Operator)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("epsilon {eps} outside (0,1)")));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("state dims differ"));
    }
    // orthogonal supports: the support projector of rho is a perfect test
    let proj = crate::linalg::support_projector(rho.op())?;
    let overlap = proj.pair_re(sigma.op())?;
    if overlap <= ZERO_PROB {
        return Ok((f64::INFINITY, proj));
    }
    let d = rho.dim();
    let mut prob = SdpProblem::minimize();
    let q = prob.add_block(d);
    let slack = prob.add_block(d);
    prob.obj_block(q, sigma.op().clone());
    prob.add_mat_eq(
        d,
        &[(q, &|h: &Operator| h.clone()), (slack, &|h: &Operator| h.clone())],
        &[],
        &Operator::identity(&[d]),
    );
    prob.add_ge(Row::new().block(q, rho.op().clone()), 1.0 - eps);
    let sol = solve(&prob, &SolveOpts::tight())?;
    let beta = sol.primal.max(0.0);
    if beta <= ZERO_PROB {
        return Ok((f64::INFINITY, sol.blocks[0].clone()));
    }
    Ok((-beta.log2(), sol.blocks[0].clone()))
}

/// Diamond norm distance `||N - M||_diamond` via the primal SDP
/// `max 2 tr(J(N-M) W)` over `0 <= W <= rho (x) I`, `tr rho = 1`.
pub fn diamond_norm(n: &crate::qobj::Channel, m: &crate::qobj::Channel) -> Result<f64> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dim("channel dims differ"));
    }
    let (da, db) = (n.dim_in(), n.dim_out());
    let j = n.choi().sub(m.choi())?;
    if j.frobenius_norm() < 1e-14 {
        return Ok(0.0);
    }
    let mut prob = SdpProblem::maximize();
    let w = prob.add_block(da * db);
    let v = prob.add_block(da * db);
    let rho = prob.add_block(da);
    prob.obj_block(w, j.scale(2.0).with_dims(vec![da * db])?);
    // W + V - rho (x) I_B = 0
    let dims = [da, db];
    prob.add_mat_eq(
        da * db,
        &[
            (w, &|h: &Operator| h.clone()),
            (v, &|h: &Operator| h.clone()),
            (rho, &|h: &Operator| {
                partial_trace(&h.clone().with_dims(vec![dims[0], dims[1]]).unwrap(), &[0])
                    .unwrap()
                    .scale(-1.0)
            }),
        ],
        &[],
        &Operator::zeros(&[da * db]),
    );
    prob.add_eq(Row::new().block(rho, Operator::identity(&[da])), 1.0);
    let sol = solve(&prob, &SolveOpts::tight())?;
    Ok(sol.primal.max(0.0))
}

/// Diamond norm via the dual SDP
/// `min (||tr_B Y0||_inf + ||tr_B Y1||_inf)/2` with
/// `[[Y0, -J], [-J, Y1]] >= 0`. Used as an independent route and as the
/// building block for diamond-ball constraints.
pub fn diamond_norm_dual(n: &crate::qobj::Channel, m: &crate::qobj::Channel) -> Result<f64> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dim("channel dims differ"));
    }
    let (da, db) = (n.dim_in(), n.dim_out());
    let j = n.choi().sub(m.choi())?.with_dims(vec![da * db])?;
    let mut prob = SdpProblem::minimize();
    let w = prob.add_block(2 * da * db); // [[Y0, -J],[-J, Y1]]
    let mu0 = prob.add_free();
    let mu1 = prob.add_free();
    prob.obj_free(mu0, 0.5);
    prob.obj_free(mu1, 0.5);
    pin_offdiag_block(&mut prob, w, da * db, &j.scale(-1.0));
    // tr_B Y_k <= mu_k I_A via PSD slacks
    for (corner, mu) in [(0usize, mu0), (1usize, mu1)] {
        let vk = prob.add_block(da);
        for h in herm_basis(da) {
            let lift = kron(
                &e_unit(corner, corner),
                &embed_at(&h, &[da, db], &[0]),
            )
            .with_dims(vec![2 * da * db])
            .unwrap();
            let row = Row::new()
                .block(w, lift.scale(-1.0))
                .block(vk, h.clone().scale(-1.0))
                .free(mu, h.trace_re());
            prob.add_eq(row, 0.0);
        }
    }
    let sol = solve(&prob, &SolveOpts::tight())?;
    Ok(sol.primal.max(0.0))
}

/// Constrain `W`'s off-diagonal block (in a `[[.,X],[X^dag,.]]` layout on
/// dimension `2d`) to equal the fixed operator `k` (`X = k`).
fn pin_offdiag_block(prob: &mut SdpProblem, w: super::BlockId, d: usize, k: &Operator) {
    for h in herm_basis(d) {
        let re_lift = kron(&e_unit(0, 1), &h).with_dims(vec![2 * d]).unwrap();
        let re_rhs = 2.0 * h.pair_re(k).unwrap();
        prob.add_eq(Row::new().block(w, re_lift), re_rhs);
        let im_lift = kron(&e_unit_im(1, 0), &h).with_dims(vec![2 * d]).unwrap();
        // tr(i(E10-E01)(x)H W) = -2 Im tr(H W01); rhs: -2 Im tr(H k)
        let hk = h.matmul(k).unwrap();
        let im_rhs = -2.0 * hk.trace().im;
        prob.add_eq(Row::new().block(w, im_lift), im_rhs);
    }
}

/// The max-relative entropy `D_max(rho || sigma) = log2 || sigma^{-1/2} rho
/// sigma^{-1/2} ||_inf`, `+inf` outside the support of `sigma`.
pub fn dmax(rho: &State, sigma: &State) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("state dims differ"));
    }
    dmax_ops(rho.op(), sigma.op())
}

/// `dmax` on raw PSD operators (used for Choi-based channel quantities).
pub fn dmax_ops(rho: &Operator, sigma: &Operator) -> Result<f64> {
    if !support_contained(rho, sigma)? {
        return Ok(f64::INFINITY);
    }
    let isqrt = mat_fn(sigma, |l| 1.0 / l.sqrt(), true)?;
    let mid = isqrt.matmul(rho)?.matmul(&isqrt)?;
    let spec = eig_hermitian(&mid.hermitize()?)?;
    let top = spec.max().max(0.0);
    if top <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(top.log2())
}

/// Channel max-relative entropy; equals the Choi-operator `dmax`.
pub fn channel_dmax(n: &crate::qobj::Channel, m: &crate::qobj::Channel) -> Result<f64> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dim("channel dims differ"));
    }
    dmax_ops(n.choi(), m.choi())
}

/// Smooth max-relative entropy `D_max^eps` over the purified-distance ball of
/// subnormalized states, as an SDP. `eps = 0` reduces to `dmax`.
pub fn dmax_smooth(rho: &State, sigma: &State, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::arg(format!("epsilon {eps} outside [0,1)")));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("state dims differ"));
    }
    if eps == 0.0 {
        return dmax(rho, sigma);
    }
    let d = rho.dim();
    // fidelity target: F*(rho~, rho) >= 1 - eps^2, encoded through
    // Re tr X >= sqrt(1-eps^2) - sqrt((1-tr rho~)(1-tr rho)); for normalized
    // rho the second term vanishes.
    let phi = (1.0 - eps * eps).max(0.0).sqrt();
    let mut prob = SdpProblem::minimize();
    let z = prob.add_block(2 * d); // [[rho~, X],[X^dag, rho]]
    let v = prob.add_block(d); // slack for t sigma - rho~ >= 0
    let t = prob.add_free();
    prob.obj_free(t, 1.0);
    // Z22 = rho
    for h in herm_basis(d) {
        let lift = kron(&e_unit(1, 1), &h).with_dims(vec![2 * d]).unwrap();
        prob.add_eq(Row::new().block(z, lift), h.pair_re(rho.op())?);
    }
    // tr Z11 <= 1
    let tr11 = kron(&e_unit(0, 0), &Operator::identity(&[d]))
        .with_dims(vec![2 * d])
        .unwrap();
    prob.add_le(Row::new().block(z, tr11), 1.0);
    // Re tr X >= phi
    let ax = kron(&e_unit(0, 1), &Operator::identity(&[d]))
        .scale(0.5)
        .with_dims(vec![2 * d])
        .unwrap();
    prob.add_ge(Row::new().block(z, ax), phi);
    // t sigma - Z11 - V = 0
    for h in herm_basis(d) {
        let lift_z = kron(&e_unit(0, 0), &h).with_dims(vec![2 * d]).unwrap();
        let row = Row::new()
            .block(z, lift_z.scale(-1.0))
            .block(v, h.clone().scale(-1.0))
            .free(t, h.pair_re(sigma.op())?);
        prob.add_eq(row, 0.0);
    }
    let sol = prob.solve(&SolveOpts::tight())?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::AlmostOptimal => {
            let t = sol.frees[0];
            if t <= ZERO_PROB {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(t.log2())
            }
        }
        SdpStatus::Infeasible => Ok(f64::INFINITY),
        s => Err(Error::Solver(format!("dmax_smooth: {s:?}"))),
    }
}

/// Smooth channel max-relative entropy
/// `D_max^eps(N||M) = min { D_max(N~||M) : (1/2)||N~ - N||_diamond <= eps }`
/// over CPTP `N~`, as a single SDP.
pub fn smooth_channel_dmax(n: &crate::qobj::Channel, m: &crate::qobj::Channel, eps: f64) -> Result<f64> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dim("channel dims differ"));
    }
    if eps < 0.0 {
        return Err(Error::arg("negative epsilon"));
    }
    if eps == 0.0 {
        return channel_dmax(n, m);
    }
    let (da, db) = (n.dim_in(), n.dim_out());
    let d = da * db;
    let mut prob = SdpProblem::minimize();
    let jt = prob.add_block(d); // Choi of N~
    let slack = prob.add_block(d); // t J_M - J~ >= 0
    let w = prob.add_block(2 * d); // diamond-ball dual certificate
    let t = prob.add_free();
    let mu0 = prob.add_free();
    let mu1 = prob.add_free();
    prob.obj_free(t, 1.0);
    // TP: tr_B J~ = I_A
    for h in herm_basis(da) {
        let lift = embed_at(&h, &[da, db], &[0]).with_dims(vec![d]).unwrap();
        prob.add_eq(Row::new().block(jt, lift), h.trace_re());
    }
    // t J_M - J~ - slack = 0
    let jm = m.choi().clone().with_dims(vec![d])?;
    for h in herm_basis(d) {
        let row = Row::new()
            .block(jt, h.clone().scale(-1.0))
            .block(slack, h.clone().scale(-1.0))
            .free(t, h.pair_re(&jm)?);
        prob.add_eq(row, 0.0);
    }
    // W off-diagonal pins -(J~ - J_N): W01 + J~ = J_N
    let jn = n.choi().clone().with_dims(vec![d])?;
    for h in herm_basis(d) {
        let re_lift = kron(&e_unit(0, 1), &h).with_dims(vec![2 * d]).unwrap();
        let row = Row::new().block(w, re_lift).block(jt, h.clone().scale(2.0));
        prob.add_eq(row, 2.0 * h.pair_re(&jn)?);
        let im_lift = kron(&e_unit_im(1, 0), &h).with_dims(vec![2 * d]).unwrap();
        // Im tr(H (J_N - J~)) = 0 automatically for hermitian blocks
        prob.add_eq(Row::new().block(w, im_lift), 0.0);
    }
    // tr_B W_kk <= mu_k I_A
    for (corner, mu) in [(0usize, mu0), (1usize, mu1)] {
        let vk = prob.add_block(da);
        for h in herm_basis(da) {
            let lift = kron(&e_unit(corner, corner), &embed_at(&h, &[da, db], &[0]))
                .with_dims(vec![2 * d])
                .unwrap();
            let row = Row::new()
                .block(w, lift.scale(-1.0))
                .block(vk, h.clone().scale(-1.0))
                .free(mu, h.trace_re());
            prob.add_eq(row, 0.0);
        }
    }
    // (mu0 + mu1)/2 <= 2 eps
    prob.add_le(Row::new().free(mu0, 0.5).free(mu1, 0.5), 2.0 * eps);
    let sol = prob.solve(&SolveOpts::tight())?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::AlmostOptimal => {
            let t = sol.frees[0];
            if t <= ZERO_PROB {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(t.log2())
            }
        }
        SdpStatus::Infeasible => Ok(f64::INFINITY),
        s => Err(Error::Solver(format!("smooth_channel_dmax: {s:?}"))),
    }
}

/// A two-outcome comb tester: elements `t1`, `t2` summing to `xi (x) I_D`
/// with the causal marginal hierarchy down to the input state `sigma`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombTester {
    pub t1: Operator,
    pub t2: Operator,
    pub xi: Operator,
    pub sigma: Operator,
}

/// Optimal single-use discrimination of two combs with identical wire
/// signature: minimizes `p tr(T2 C1) + (1-p) tr(T1 C2)` over all testers.
pub fn comb_discrimination(theta1: &Comb, theta2: &Comb, prior: f64) -> Result<(f64, CombTester)> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::arg(format!("prior {prior} outside (0,1)")));
    }
    let w1 = theta1.wires();
    let w2 = theta2.wires();
    if w1.c != w2.c || w1.a != w2.a || w1.b != w2.b || w1.d != w2.d {
        return Err(Error::dim("comb wire signatures differ"));
    }
    let c1 = theta1.process_choi()?;
    let c2 = theta2.process_choi()?;
    // tester wire spaces: [C, A1, B1, ..., D]
    let mut dims: Vec<usize> = vec![w1.c];
    for i in 0..w1.slots() {
        dims.push(w1.a[i]);
        dims.push(w1.b[i]);
    }
    dims.push(w1.d);
    let full: usize = dims.iter().product();
    let inner = full / w1.d;

    let mut prob = SdpProblem::minimize();
    let t1 = prob.add_block(full);
    let t2 = prob.add_block(full);
    prob.obj_block(t2, c1.clone().with_dims(vec![full])?.scale(prior));
    prob.obj_block(t1, c2.clone().with_dims(vec![full])?.scale(1.0 - prior));

    // hierarchy blocks: xi_k on [C, A1, B1, .., A_k, B_k]
    let mut xis = Vec::new();
    let mut xi_dims = vec![w1.c];
    let mut xi_dim_prods = vec![w1.c];
    for i in 0..w1.slots() {
        xi_dims.push(w1.a[i]);
        xi_dims.push(w1.b[i]);
        xi_dim_prods.push(xi_dims.iter().product());
    }
    let sigma = prob.add_block(w1.c);
    for lvl in 1..=w1.slots() {
        xis.push(prob.add_block(xi_dim_prods[lvl]));
    }

    // T1 + T2 = Xi_top (x) I_D, pinned entrywise over the full space
    let top = if w1.slots() == 0 { None } else { Some(xis[w1.slots() - 1]) };
    for h in herm_basis(full) {
        let reduced = partial_trace(&h.clone().with_dims(vec![inner, w1.d])?, &[0])?
            .with_dims(vec![inner])?;
        let mut row = Row::new().block(t1, h.clone()).block(t2, h.clone());
        match top {
            Some(b) => {
                row = row.block(b, reduced.scale(-1.0));
            }
            None => {
                row = row.block(sigma, reduced.scale(-1.0));
            }
        }
        prob.add_eq(row, 0.0);
    }
    // tr_{B_k} Xi_k = Xi_{k-1} (x) I_{A_k}
    for lvl in (1..=w1.slots()).rev() {
        let cur = xis[lvl - 1];
        let cur_sys: Vec<usize> = xi_dims[..2 * lvl + 1].to_vec();
        let lower_prod: usize = xi_dim_prods[lvl - 1];
        let a_k = w1.a[lvl - 1];
        for h in herm_basis(lower_prod * a_k) {
            // coefficient on cur: (H (x) I_{B_k}) with H on [..., A_k]
            let h_sys = h
                .clone()
                .with_dims(cur_sys[..cur_sys.len() - 1].to_vec())?;
            let lift = embed_at(&h_sys, &cur_sys, &(0..cur_sys.len() - 1).collect::<Vec<_>>())
                .with_dims(vec![xi_dim_prods[lvl]])?;
            // coefficient on lower: tr_{A_k}(H) (x) (-B_k)
            let h_split = h.clone().with_dims(vec![lower_prod, a_k])?;
            let reduced = partial_trace(&h_split, &[0])?.with_dims(vec![lower_prod])?;
            let lower_block = if lvl == 1 { sigma } else { xis[lvl - 2] };
            let row = Row::new()
                .block(cur, lift)
                .block(lower_block, reduced.scale(-1.0));
            prob.add_eq(row, 0.0);
        }
    }
    prob.add_eq(Row::new().block(sigma, Operator::identity(&[w1.c])), 1.0);

    let sol = solve(&prob, &SolveOpts::tight())?;
    let tester = CombTester {
        t1: sol.blocks[0].clone().with_dims(dims.clone())?,
        t2: sol.blocks[1].clone().with_dims(dims)?,
        xi: if w1.slots() == 0 {
            sol.blocks[2].clone()
        } else {
            sol.blocks[3 + w1.slots() - 1 - 1].clone()
        },
        sigma: sol.blocks[2].clone(),
    };
    Ok((sol.primal.max(0.0), tester))
}

/// Tester value `tr(T C)` of a strategy expressed as a (transposed) tester
/// element against a comb's process Choi.
pub fn tester_probability(t: &Operator, process_choi: &Operator) -> Result<f64> {
    t.pair_re(process_choi)
}

/// Superchannel front end for [`comb_discrimination`].
pub fn superchannel_discrimination(
    theta1: &Superchannel,
    theta2: &Superchannel,
    prior: f64,
) -> Result<(f64, CombTester)> {
    comb_discrimination(theta1.comb(), theta2.comb(), prior)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, trace_norm};
    use crate::qobj::{
        random_channel, random_state, seeded_rng, Channel, CombWires, State,
    };
    use crate::zoo::make_replacer;
    use approx::assert_abs_diff_eq;

    fn plus_state() -> State {
        let mut v = nalgebra::DVector::zeros(2);
        v[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        v[1] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        State::pure(&v, &[2]).unwrap()
    }

    #[test]
    fn min_error_equal_states_is_half() {
        let rho = State::maximally_mixed(2);
        let (pe, _) = min_error(0.5, &rho, &rho).unwrap();
        assert_abs_diff_eq!(pe, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn min_error_orthogonal_is_zero() {
        let (pe, _) = min_error(0.5, &State::basis(2, 0), &State::basis(2, 1)).unwrap();
        assert_abs_diff_eq!(pe, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn min_error_zero_vs_plus() {
        // trace-norm eigenvalue oracle: ||(|0><0| - |+><+|)/2||_1 = 1/sqrt(2)
        let (pe, q) = min_error(0.5, &State::basis(2, 0), &plus_state()).unwrap();
        let expect = 0.5 * (1.0 - 1.0 / 2f64.sqrt());
        assert_abs_diff_eq!(pe, expect, epsilon = 1e-7);
        // returned test reproduces the value
        let alpha = 1.0 - q.pair_re(State::basis(2, 0).op()).unwrap();
        let beta = q.pair_re(plus_state().op()).unwrap();
        assert_abs_diff_eq!(0.5 * alpha + 0.5 * beta, pe, epsilon = 1e-6);
    }

    #[test]
    fn min_error_matches_closed_form_random() {
        let mut rng = seeded_rng(31);
        for _ in 0..10 {
            let r1 = random_state(3, 2, &mut rng).unwrap();
            let r2 = random_state(3, 3, &mut rng).unwrap();
            let p = 0.3;
            let (pe, _) = min_error(p, &r1, &r2).unwrap();
            let delta = r1.op().scale(p).sub(&r2.op().scale(1.0 - p)).unwrap();
            let closed = 0.5 * (1.0 - trace_norm(&delta));
            assert_abs_diff_eq!(pe, closed, epsilon = 1e-7);
        }
    }

    #[test]
    fn dh_identity_case() {
        let rho = State::maximally_mixed(2);
        for eps in [0.01, 0.1, 0.5] {
            let v = dh_epsilon(&rho, &rho, eps).unwrap();
            assert_abs_diff_eq!(v, -(1.0 - eps).log2(), epsilon = 1e-6);
        }
    }

    #[test]
    fn dh_orthogonal_is_infinite() {
        let v = dh_epsilon(&State::basis(2, 0), &State::basis(2, 1), 0.1).unwrap();
        assert!(v.is_infinite() && v > 0.0);
    }

    #[test]
    fn dh_matches_neyman_pearson_oracle() {
        // threshold-test enumeration oracle for commuting states
        let rho = State::basis(2, 0);
        let sigma = State::maximally_mixed(2);
        let eps = 0.1;
        let v = dh_epsilon(&rho, &sigma, eps).unwrap();
        // classical NP on (1,0) vs (1/2,1/2): accept outcome 0 with prob
        // gamma = 1-eps, beta = gamma/2
        let beta = (1.0 - eps) * 0.5;
        assert_abs_diff_eq!(v, -beta.log2(), epsilon = 1e-6);
    }

    #[test]
    fn dh_monotone_in_eps() {
        let mut rng = seeded_rng(37);
        let rho = random_state(2, 2, &mut rng).unwrap();
        let sigma = random_state(2, 2, &mut rng).unwrap();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.05, 0.2, 0.5, 0.8] {
            let v = dh_epsilon(&rho, &sigma, eps).unwrap();
            assert!(v >= last - 1e-7);
            last = v;
        }
    }

    #[test]
    fn diamond_norm_of_equal_channels_is_zero() {
        let mut rng = seeded_rng(41);
        let n = random_channel(2, 2, &mut rng).unwrap();
        assert_abs_diff_eq!(diamond_norm(&n, &n).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn diamond_norm_replacers_is_trace_distance() {
        let mut rng = seeded_rng(43);
        let t1 = random_state(2, 2, &mut rng).unwrap();
        let t2 = random_state(2, 1, &mut rng).unwrap();
        let r1 = Channel::replacer(2, &t1);
        let r2 = Channel::replacer(2, &t2);
        let dn = diamond_norm(&r1, &r2).unwrap();
        let td = trace_norm(&t1.op().sub(t2.op()).unwrap());
        assert_abs_diff_eq!(dn, td, epsilon = 1e-6);
    }

    #[test]
    fn diamond_norm_identity_vs_full_dephasing() {
        let dn = diamond_norm(&Channel::identity(2), &Channel::dephasing(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(dn, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn diamond_primal_dual_agree() {
        let mut rng = seeded_rng(47);
        for _ in 0..5 {
            let n = random_channel(2, 2, &mut rng).unwrap();
            let m = random_channel(2, 2, &mut rng).unwrap();
            let p = diamond_norm(&n, &m).unwrap();
            let d = diamond_norm_dual(&n, &m).unwrap();
            assert_abs_diff_eq!(p, d, epsilon = 1e-6);
        }
    }

    #[test]
    fn dmax_basics() {
        let rho = State::basis(2, 0);
        let mm = State::maximally_mixed(2);
        assert_abs_diff_eq!(dmax(&mm, &mm).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(dmax(&rho, &mm).unwrap(), 1.0, epsilon = 1e-10);
        assert!(dmax(&rho, &State::basis(2, 1)).unwrap().is_infinite());
    }

    #[test]
    fn dmax_smooth_bounds() {
        let mut rng = seeded_rng(53);
        let rho = random_state(2, 2, &mut rng).unwrap();
        let sigma = random_state(2, 2, &mut rng).unwrap();
        let exact = dmax(&rho, &sigma).unwrap();
        let tiny = dmax_smooth(&rho, &sigma, 1e-6).unwrap();
        assert!((tiny - exact).abs() < 1e-3, "tiny-eps {tiny} vs exact {exact}");
        let smooth = dmax_smooth(&rho, &sigma, 0.1).unwrap();
        assert!(smooth <= exact + 1e-8);
        // shrinking feasibility: D_max^eps(rho||rho) <= 0
        let selfsmooth = dmax_smooth(&rho, &rho, 0.1).unwrap();
        assert!(selfsmooth <= 1e-9);
    }

    #[test]
    fn smooth_channel_dmax_bounds() {
        let mut rng = seeded_rng(59);
        let n = random_channel(2, 2, &mut rng).unwrap();
        let m = random_channel(2, 2, &mut rng).unwrap();
        let exact = channel_dmax(&n, &m).unwrap();
        let small = smooth_channel_dmax(&n, &m, 1e-6).unwrap();
        assert!((small - exact).abs() < 1e-2, "{small} vs {exact}");
        let smooth = smooth_channel_dmax(&n, &m, 0.1).unwrap();
        assert!(smooth <= exact + 1e-7);
        let smoother = smooth_channel_dmax(&n, &m, 0.3).unwrap();
        assert!(smoother <= smooth + 1e-7);
    }

    #[test]
    fn comb_discrimination_equal_combs() {
        let mut rng = seeded_rng(61);
        let e = random_channel(2, 4, &mut rng).unwrap();
        let d = random_channel(4, 2, &mut rng).unwrap();
        let theta = crate::qobj::Superchannel::from_parts(
            e,
            d,
            CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 },
        )
        .unwrap();
        for p in [0.5, 0.3] {
            let (pe, _) = superchannel_discrimination(&theta, &theta, p).unwrap();
            assert_abs_diff_eq!(pe, p.min(1.0 - p), epsilon = 1e-6);
        }
    }

    #[test]
    fn comb_discrimination_replacers_match_channel_discrimination() {
        let mut rng = seeded_rng(67);
        let r1 = random_channel(2, 2, &mut rng).unwrap();
        let r2 = random_channel(2, 2, &mut rng).unwrap();
        let th1 = make_replacer(&r1).unwrap();
        let th2 = make_replacer(&r2).unwrap();
        let (pe, tester) = superchannel_discrimination(&th1, &th2, 0.5).unwrap();
        let dn = diamond_norm(&r1, &r2).unwrap();
        assert_abs_diff_eq!(pe, 0.5 - dn / 4.0, epsilon = 1e-5);
        // tester marginals satisfy the hierarchy
        let sum = tester.t1.add(&tester.t2).unwrap();
        let xi = partial_trace(&sum, &[0, 1, 2]).unwrap().scale(1.0 / 2.0);
        let sig = partial_trace(&xi, &[0]).unwrap().scale(1.0 / 2.0);
        assert_abs_diff_eq!(sig.trace_re(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn explicit_product_strategies_are_feasible_testers() {
        // an explicit (state, slot channel, measurement) strategy never beats
        // the tester SDP optimum
        let mut rng = seeded_rng(71);
        let e1 = random_channel(2, 4, &mut rng).unwrap();
        let d1 = random_channel(4, 2, &mut rng).unwrap();
        let e2 = random_channel(2, 4, &mut rng).unwrap();
        let d2 = random_channel(4, 2, &mut rng).unwrap();
        let w = CombWires { c: 2, a: vec![2], b: vec![2], s: vec![2], d: 2 };
        let th1 = crate::qobj::Superchannel::from_parts(e1, d1, w.clone()).unwrap();
        let th2 = crate::qobj::Superchannel::from_parts(e2, d2, w).unwrap();
        let (pe, _) = superchannel_discrimination(&th1, &th2, 0.5).unwrap();
        for trial in 0..8 {
            let rho = random_state(2, 1, &mut rng).unwrap();
            let slot = random_channel(2, 2, &mut rng).unwrap();
            let out1 = th1.apply_to(&slot, 1).unwrap().apply(&rho).unwrap();
            let out2 = th2.apply_to(&slot, 1).unwrap().apply(&rho).unwrap();
            let (err, _) = min_error(0.5, &out1, &out2).unwrap();
            assert!(
                err >= pe - 1e-6,
                "trial {trial}: explicit strategy error {err} beats SDP {pe}"
            );
        }
    }

    #[test]
    fn dh_positive_on_basis_vs_mixed() {
        let v = dh_epsilon(&State::basis(2, 0), &State::maximally_mixed(2), 0.5).unwrap();
        assert!(v >= 1.0 - 1e-6);
        let _ = basis_ket(2, 0);
    }
}
