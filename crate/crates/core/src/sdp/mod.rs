//! Semidefinite programming: a conic front end plus the SDP-backed
//! quantities (Helstrom error, hypothesis-testing relative entropy, diamond
//! norm, comb discrimination, smooth max-relative entropy).
//!
//! Problems are stated over complex Hermitian PSD blocks, nonnegative scalars
//! and free scalars, with affine equality constraints. Complex blocks are
//! solved by realification: a Hermitian `n x n` block embeds as the real
//! symmetric `2n x 2n` matrix `[[Re X, -Im X], [Im X, Re X]]`, which doubles
//! dimensions but keeps a single solver path. The interior-point backend is
//! Clarabel with Nesterov-Todd scaling for the PSD cone.

mod quantities;

pub use quantities::*;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{C64, Operator};
use crate::tol::{SDP_FEAS_TOL, SDP_GAP_TOL};
use crate::{Error, Result};

/// Handle to a Hermitian PSD variable block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(usize);

/// Handle to a nonnegative scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonnegId(usize);

/// Handle to a free scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreeId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    AlmostOptimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    Numerical,
}

/// One affine row: `sum_b tr(A_b X_b) + sum_i c_i s_i + sum_j d_j y_j (=|<=|>=) rhs`.
#[derive(Clone, Debug, Default)]
pub struct Row {
    blocks: Vec<(usize, Operator)>,
    nonnegs: Vec<(usize, f64)>,
    frees: Vec<(usize, f64)>,
}

impl Row {
    pub fn new() -> Self {
        Row::default()
    }

    pub fn block(mut self, b: BlockId, coeff: Operator) -> Self {
        self.blocks.push((b.0, coeff));
        self
    }

    pub fn nonneg(mut self, s: NonnegId, coeff: f64) -> Self {
        self.nonnegs.push((s.0, coeff));
        self
    }

    pub fn free(mut self, y: FreeId, coeff: f64) -> Self {
        self.frees.push((y.0, coeff));
        self
    }
}

/// An SDP in block form.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    sense_max: bool,
    block_dims: Vec<usize>,
    nonneg_count: usize,
    free_count: usize,
    obj_blocks: Vec<(usize, Operator)>,
    obj_nonnegs: Vec<(usize, f64)>,
    obj_frees: Vec<(usize, f64)>,
    rows: Vec<(Row, f64)>,
}

/// Solver tolerances.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveOpts {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            gap_tol: SDP_GAP_TOL,
            feas_tol: SDP_FEAS_TOL,
            max_iter: 400,
        }
    }
}

impl SolveOpts {
    pub fn tight() -> Self {
        SolveOpts {
            gap_tol: 1e-9,
            feas_tol: 1e-9,
            max_iter: 600,
        }
    }
}

/// Primal/dual certificates of a solve.
#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective in the problem's own sense.
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    #[serde(skip)]
    pub blocks: Vec<Operator>,
    pub nonnegs: Vec<f64>,
    pub frees: Vec<f64>,
    pub iterations: u32,
    pub residual_primal: f64,
    pub residual_dual: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, SdpStatus::Optimal | SdpStatus::AlmostOptimal)
    }

    /// Debug dump of block dims, objective and residuals.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "primal": self.primal,
            "dual": self.dual,
            "gap": self.gap,
            "iterations": self.iterations,
            "residual_primal": self.residual_primal,
            "residual_dual": self.residual_dual,
            "block_dims": self.blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(),
        })
    }
}

impl SdpProblem {
    pub fn minimize() -> Self {
        SdpProblem::default()
    }

    pub fn maximize() -> Self {
        SdpProblem {
            sense_max: true,
            ..Default::default()
        }
    }

    pub fn add_block(&mut self, complex_dim: usize) -> BlockId {
        self.block_dims.push(complex_dim);
        BlockId(self.block_dims.len() - 1)
    }

    pub fn add_nonneg(&mut self) -> NonnegId {
        self.nonneg_count += 1;
        NonnegId(self.nonneg_count - 1)
    }

    pub fn add_free(&mut self) -> FreeId {
        self.free_count += 1;
        FreeId(self.free_count - 1)
    }

    /// Add `tr(C X_b)` to the objective.
    pub fn obj_block(&mut self, b: BlockId, coeff: Operator) {
        self.obj_blocks.push((b.0, coeff));
    }

    pub fn obj_nonneg(&mut self, s: NonnegId, coeff: f64) {
        self.obj_nonnegs.push((s.0, coeff));
    }

    pub fn obj_free(&mut self, y: FreeId, coeff: f64) {
        self.obj_frees.push((y.0, coeff));
    }

    pub fn add_eq(&mut self, row: Row, rhs: f64) {
        self.rows.push((row, rhs));
    }

    /// `row <= rhs` via a nonnegative slack.
    pub fn add_le(&mut self, row: Row, rhs: f64) {
        let s = self.add_nonneg();
        self.add_eq(row.nonneg(s, 1.0), rhs);
    }

    /// `row >= rhs` via a nonnegative slack.
    pub fn add_ge(&mut self, row: Row, rhs: f64) {
        let s = self.add_nonneg();
        self.add_eq(row.nonneg(s, -1.0), rhs);
    }

    /// Matrix equality `sum_b L_b(X_b) + sum_j y_j K_j = RHS` on a Hermitian
    /// space of dimension `space_dim`, expanded over a Hermitian operator
    /// basis. Each block term supplies the adjoint action: a closure mapping a
    /// basis element `H` to the coefficient `A` with `tr(A X_b) = tr(H L_b(X_b))`.
    pub fn add_mat_eq(
        &mut self,
        space_dim: usize,
        block_terms: &[(BlockId, &dyn Fn(&Operator) -> Operator)],
        free_terms: &[(FreeId, &Operator)],
        rhs: &Operator,
    ) {
        for h in herm_basis(space_dim) {
            let mut row = Row::new();
            for (b, lift) in block_terms {
                row = row.block(*b, lift(&h));
            }
            for (y, k) in free_terms {
                row = row.free(*y, h.pair_re(k).expect("dims"));
            }
            let rhs_val = h.pair_re(rhs).expect("dims");
            self.add_eq(row, rhs_val);
        }
    }

    /// Solve with Clarabel.
    pub fn solve(&self, opts: &SolveOpts) -> Result<SdpSolution> {
        // layout: per-block svec regions, then nonneg scalars, then frees
        let real_dims: Vec<usize> = self.block_dims.iter().map(|&n| 2 * n).collect();
        let tri_len: Vec<usize> = real_dims.iter().map(|&m| m * (m + 1) / 2).collect();
        let mut block_off = Vec::with_capacity(tri_len.len());
        let mut off = 0usize;
        for t in &tri_len {
            block_off.push(off);
            off += t;
        }
        let nonneg_off = off;
        let free_off = nonneg_off + self.nonneg_count;
        let nvar = free_off + self.free_count;

        // objective (clarabel minimizes)
        let sign = if self.sense_max { -1.0 } else { 1.0 };
        let mut q = vec![0.0; nvar];
        for (b, c) in &self.obj_blocks {
            let sv = svec_coeff(c, self.block_dims[*b]);
            for (k, v) in sv {
                q[block_off[*b] + k] += sign * v;
            }
        }
        for (s, c) in &self.obj_nonnegs {
            q[nonneg_off + s] += sign * c;
        }
        for (y, c) in &self.obj_frees {
            q[free_off + y] += sign * c;
        }

        // constraint matrix in triplets; cone order: Zero rows, then PSD
        // blocks, then nonneg
        let mut ti: Vec<usize> = Vec::new();
        let mut tj: Vec<usize> = Vec::new();
        let mut tv: Vec<f64> = Vec::new();
        let mut bvec: Vec<f64> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

        let neq = self.rows.len();
        for (r, (row, rhs)) in self.rows.iter().enumerate() {
            for (b, a) in &row.blocks {
                for (k, v) in svec_coeff(a, self.block_dims[*b]) {
                    ti.push(r);
                    tj.push(block_off[*b] + k);
                    tv.push(v);
                }
            }
            for (s, c) in &row.nonnegs {
                ti.push(r);
                tj.push(nonneg_off + s);
                tv.push(*c);
            }
            for (y, c) in &row.frees {
                ti.push(r);
                tj.push(free_off + y);
                tv.push(*c);
            }
            bvec.push(*rhs);
        }
        if neq > 0 {
            cones.push(SupportedConeT::ZeroConeT(neq));
        }
        let mut mrow = neq;
        for (b, t) in tri_len.iter().enumerate() {
            for k in 0..*t {
                ti.push(mrow + k);
                tj.push(block_off[b] + k);
                tv.push(-1.0);
                bvec.push(0.0);
            }
            mrow += t;
            cones.push(SupportedConeT::PSDTriangleConeT(real_dims[b]));
        }
        if self.nonneg_count > 0 {
            for s in 0..self.nonneg_count {
                ti.push(mrow + s);
                tj.push(nonneg_off + s);
                tv.push(-1.0);
                bvec.push(0.0);
            }
            mrow += self.nonneg_count;
            cones.push(SupportedConeT::NonnegativeConeT(self.nonneg_count));
        }

        let amat = CscMatrix::new_from_triplets(mrow, nvar, ti, tj, tv);
        let pmat = CscMatrix::<f64>::zeros((nvar, nvar));
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(opts.max_iter)
            .tol_gap_abs(opts.gap_tol)
            .tol_gap_rel(opts.gap_tol)
            .tol_feas(opts.feas_tol)
            .build()
            .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&pmat, &q, &amat, &bvec, &cones, settings);
        solver.solve();
        let sol = &solver.solution;

        let status = match sol.status {
            SolverStatus::Solved => SdpStatus::Optimal,
            SolverStatus::AlmostSolved => SdpStatus::AlmostOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SdpStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SdpStatus::Unbounded,
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SdpStatus::MaxIterations,
            _ => SdpStatus::Numerical,
        };

        let mut blocks = Vec::with_capacity(self.block_dims.len());
        for (b, &n) in self.block_dims.iter().enumerate() {
            blocks.push(unsvec_complex(&sol.x[block_off[b]..block_off[b] + tri_len[b]], n));
        }
        let nonnegs = sol.x[nonneg_off..nonneg_off + self.nonneg_count].to_vec();
        let frees = sol.x[free_off..free_off + self.free_count].to_vec();
        let (primal, dual) = if self.sense_max {
            (-sol.obj_val, -sol.obj_val_dual)
        } else {
            (sol.obj_val, sol.obj_val_dual)
        };
        Ok(SdpSolution {
            status,
            primal,
            dual,
            gap: (primal - dual).abs(),
            blocks,
            nonnegs,
            frees,
            iterations: sol.iterations,
            residual_primal: sol.r_prim,
            residual_dual: sol.r_dual,
        })
    }
}

/// Solve and require an optimal status.
pub fn solve(p: &SdpProblem, opts: &SolveOpts) -> Result<SdpSolution> {
    let sol = p.solve(opts)?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::AlmostOptimal => Ok(sol),
        SdpStatus::Infeasible => Err(Error::Solver("infeasible".into())),
        SdpStatus::Unbounded => Err(Error::Solver("unbounded".into())),
        SdpStatus::MaxIterations => Err(Error::Solver("iteration limit".into())),
        SdpStatus::Numerical => Err(Error::Solver("numerical failure".into())),
    }
}

/// Hermitian operator basis of an `n`-dimensional space: diagonal units,
/// symmetric pairs, antisymmetric pairs. `n^2` elements.
pub fn herm_basis(n: usize) -> Vec<Operator> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut m = DMatrix::<C64>::zeros(n, n);
        m[(i, i)] = C64::new(1.0, 0.0);
        out.push(Operator::from_matrix(m).unwrap());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::<C64>::zeros(n, n);
            m[(i, j)] = C64::new(1.0, 0.0);
            m[(j, i)] = C64::new(1.0, 0.0);
            out.push(Operator::from_matrix(m).unwrap());
            let mut m = DMatrix::<C64>::zeros(n, n);
            m[(i, j)] = C64::new(0.0, 1.0);
            m[(j, i)] = C64::new(0.0, -1.0);
            out.push(Operator::from_matrix(m).unwrap());
        }
    }
    out
}

/// Realified svec coefficients of a Hermitian matrix `A` for a complex block
/// of dimension `n`: the sparse vector `v` with
/// `v . svec(X_real) = tr(A X_complex)`.
///
/// The embedding is `R(M) = [[Re M, -Im M], [Im M, Re M]]` and
/// `tr(R(A) R(X)) = 2 tr(A X)`, so the coefficient matrix is `R(A)/2`.
fn svec_coeff(a: &Operator, n: usize) -> Vec<(usize, f64)> {
    assert_eq!(a.dim(), n, "coefficient dim mismatch");
    let m = 2 * n;
    let half = 0.5;
    let r = |i: usize, j: usize| -> f64 {
        // R(A)[i,j] for the 2x2 block layout
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let z = a.matrix()[(ii, jj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => unreachable!(),
        }
    };
    let sqrt2 = 2f64.sqrt();
    let mut out = Vec::new();
    let mut k = 0usize;
    for j in 0..m {
        for i in 0..=j {
            let v = if i == j {
                half * r(i, j)
            } else {
                half * sqrt2 * r(i, j)
            };
            if v.abs() > 1e-14 {
                out.push((k, v));
            }
            k += 1;
        }
    }
    out
}

/// Reconstruct the complex Hermitian block from its realified svec. The real
/// solution is symmetrized over the complex-structure orbit, which maps any
/// feasible real point back to a valid complex block.
fn unsvec_complex(x: &[f64], n: usize) -> Operator {
    let m = 2 * n;
    let mut real = DMatrix::<f64>::zeros(m, m);
    let sqrt2 = 2f64.sqrt();
    let mut k = 0usize;
    for j in 0..m {
        for i in 0..=j {
            let v = if i == j { x[k] } else { x[k] / sqrt2 };
            real[(i, j)] = v;
            real[(j, i)] = v;
            k += 1;
        }
    }
    let mut out = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (real[(i, j)] + real[(n + i, n + j)]);
            let im = 0.5 * (real[(n + i, j)] - real[(i, n + j)]);
            out[(i, j)] = C64::new(re, im);
        }
    }
    // enforce exact hermiticity
    let adj = out.adjoint();
    let herm = (out + adj) * C64::new(0.5, 0.0);
    Operator::from_matrix(herm).unwrap()
}

/// `H (x) I` placed so that `H` occupies `positions` of a space with
/// `dims`; adjoint of the partial trace.
pub fn embed_at(h: &Operator, dims: &[usize], positions: &[usize]) -> Operator {
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !positions.contains(p)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&p| dims[p]).collect();
    let big = if rest_dims.is_empty() {
        h.clone()
    } else {
        crate::linalg::kron(h, &Operator::identity(&rest_dims))
    };
    // big systems: positions then rest; permute into natural order
    let mut source: Vec<usize> = positions.to_vec();
    source.extend(rest.iter());
    let mut perm = vec![0usize; dims.len()];
    for (src_pos, &nat) in source.iter().enumerate() {
        perm[nat] = src_pos;
    }
    let h_sys: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
    let mut big_dims = h_sys;
    big_dims.extend(rest_dims);
    let big = big.with_dims(big_dims).unwrap();
    crate::linalg::permute_systems(&big, &perm).unwrap()
}
