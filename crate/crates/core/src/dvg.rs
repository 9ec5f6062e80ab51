//! Closed-form divergences and asymptotic-bound calculators. All values are
//! in bits (base-two logarithms).

use serde::{Deserialize, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::{eig_hermitian, mat_fn, support_contained, support_projector, Operator};
use crate::qobj::State;
use crate::tol::{EXACT_TOL, SUPPORT_EIG, ZERO_PROB};
use crate::{Error, Result};

/// Certificate attached to a numeric divergence value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Exact,
    LowerBound,
    UpperBound,
}

/// A divergence value with its certificate kind and tolerance. Infinite
/// values carry the condition that caused them.
#[derive(Clone, Debug, Deserialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub kind: Kind,
    pub tol: f64,
    #[serde(default)]
    pub condition: Option<String>,
}

impl DivergenceEstimate {
    pub fn exact(value: f64) -> Self {
        DivergenceEstimate {
            value,
            kind: Kind::Exact,
            tol: 1e-9,
            condition: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(
            self.kind != Kind::Exact || tol <= EXACT_TOL,
            "exact estimates need tol <= {EXACT_TOL}"
        );
        self.tol = tol;
        self
    }

    pub fn lower(value: f64, tol: f64) -> Self {
        DivergenceEstimate {
            value,
            kind: Kind::LowerBound,
            tol,
            condition: None,
        }
    }

    pub fn upper(value: f64, tol: f64) -> Self {
        DivergenceEstimate {
            value,
            kind: Kind::UpperBound,
            tol,
            condition: None,
        }
    }

    pub fn infinite(condition: impl Into<String>) -> Self {
        DivergenceEstimate {
            value: f64::INFINITY,
            kind: Kind::Exact,
            tol: 0.0,
            condition: Some(condition.into()),
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

impl Serialize for DivergenceEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DivergenceEstimate", 4)?;
        if self.value.is_infinite() {
            st.serialize_field("value", "inf")?;
        } else {
            st.serialize_field("value", &self.value)?;
        }
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("tol", &self.tol)?;
        st.serialize_field("condition", &self.condition)?;
        st.end()
    }
}

fn check_pair(rho: &State, sigma: &State) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dim("state dims differ"));
    }
    Ok(())
}

/// Quantum relative entropy `D(rho||sigma) = tr[rho(log rho - log sigma)]`,
/// `+inf` when `supp(rho)` is not contained in `supp(sigma)`.
pub fn rel_entropy(rho: &State, sigma: &State) -> Result<DivergenceEstimate> {
    check_pair(rho, sigma)?;
    if !support_contained(rho.op(), sigma.op())? {
        return Ok(DivergenceEstimate::infinite("support violation"));
    }
    let spec = eig_hermitian(rho.op())?;
    let ent: f64 = spec
        .values
        .iter()
        .filter(|&&l| l > SUPPORT_EIG)
        .map(|&l| l * l.log2())
        .sum();
    let log_sigma = mat_fn(sigma.op(), |l| l.log2(), true)?;
    let cross = rho.op().pair_re(&log_sigma)?;
    Ok(DivergenceEstimate::exact(ent - cross))
}

/// `tr(rho^a sigma^b)` with generalized (on-support) powers.
fn power_trace(rho: &Operator, sigma: &Operator, a: f64, b: f64) -> Result<f64> {
    let ra = if (a - 1.0).abs() < 1e-15 {
        rho.clone()
    } else {
        mat_fn(rho, |l| l.powf(a), true)?
    };
    let sb = if (b - 1.0).abs() < 1e-15 {
        sigma.clone()
    } else {
        mat_fn(sigma, |l| l.powf(b), true)?
    };
    ra.pair_re(&sb)
}

fn orthogonal(rho: &State, sigma: &State) -> Result<bool> {
    Ok(rho.op().pair_re(sigma.op())? <= ZERO_PROB)
}

/// Petz-Renyi divergence `D_alpha = log tr[rho^a sigma^(1-a)] / (a-1)`.
/// Limits: `alpha = 0` gives `-log tr[Pi_rho sigma]`, `alpha = 1` the relative
/// entropy.
pub fn petz_alpha(rho: &State, sigma: &State, alpha: f64) -> Result<DivergenceEstimate> {
    check_pair(rho, sigma)?;
    if alpha < 0.0 {
        return Err(Error::arg(format!("alpha {alpha} negative")));
    }
    if alpha == 0.0 {
        let proj = support_projector(rho.op())?;
        let overlap = proj.pair_re(sigma.op())?;
        if overlap <= ZERO_PROB {
            return Ok(DivergenceEstimate::infinite("orthogonal supports"));
        }
        return Ok(DivergenceEstimate::exact(-overlap.log2()));
    }
    if (alpha - 1.0).abs() < 1e-12 {
        return rel_entropy(rho, sigma);
    }
    if alpha < 1.0 {
        if orthogonal(rho, sigma)? {
            return Ok(DivergenceEstimate::infinite("orthogonal states"));
        }
    } else if !support_contained(rho.op(), sigma.op())? {
        return Ok(DivergenceEstimate::infinite("support violation"));
    }
    let tr = power_trace(rho.op(), sigma.op(), alpha, 1.0 - alpha)?;
    if tr <= ZERO_PROB {
        return Ok(DivergenceEstimate::infinite("vanishing power trace"));
    }
    Ok(DivergenceEstimate::exact(tr.log2() / (alpha - 1.0)))
}

/// Sandwiched Renyi divergence
/// `D~_alpha = log tr[(sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a] / (a-1)`.
/// `alpha = 1/2` equals `-log F`, `alpha -> inf` the max-relative entropy.
pub fn sandwiched_alpha(rho: &State, sigma: &State, alpha: f64) -> Result<DivergenceEstimate> {
    check_pair(rho, sigma)?;
    if alpha <= 0.0 {
        return Err(Error::arg(format!("alpha {alpha} must be positive")));
    }
    if alpha.is_infinite() {
        let v = crate::sdp::dmax(rho, sigma)?;
        return Ok(if v.is_infinite() {
            DivergenceEstimate::infinite("support violation")
        } else {
            DivergenceEstimate::exact(v)
        });
    }
    if (alpha - 1.0).abs() < 1e-12 {
        return rel_entropy(rho, sigma);
    }
    if alpha < 1.0 {
        if orthogonal(rho, sigma)? {
            return Ok(DivergenceEstimate::infinite("orthogonal states"));
        }
    } else if !support_contained(rho.op(), sigma.op())? {
        return Ok(DivergenceEstimate::infinite("support violation"));
    }
    let expo = (1.0 - alpha) / (2.0 * alpha);
    let sig_pow = mat_fn(sigma.op(), |l| l.powf(expo), true)?;
    let mid = sig_pow.matmul(rho.op())?.matmul(&sig_pow)?.hermitize()?;
    let powered = mat_fn(&mid, |l| l.powf(alpha), true)?;
    let tr = powered.trace_re();
    if tr <= ZERO_PROB {
        return Ok(DivergenceEstimate::infinite("vanishing power trace"));
    }
    Ok(DivergenceEstimate::exact(tr.log2() / (alpha - 1.0)))
}

/// Chernoff divergence `C = -inf_{0<=a<=1} log tr[rho^a sigma^(1-a)]` by
/// golden-section search (the trace is convex in `a`).
pub fn chernoff(rho: &State, sigma: &State) -> Result<DivergenceEstimate> {
    check_pair(rho, sigma)?;
    if orthogonal(rho, sigma)? {
        return Ok(DivergenceEstimate::infinite("orthogonal states"));
    }
    let g = |a: f64| -> f64 {
        power_trace(rho.op(), sigma.op(), a, 1.0 - a)
            .map(|t| t.max(ZERO_PROB).log2())
            .unwrap_or(f64::INFINITY)
    };
    let (_, gmin) = golden_min(&g, 0.0, 1.0, 1e-9);
    let endpoint_min = g(0.0).min(g(1.0));
    Ok(DivergenceEstimate::exact(-gmin.min(endpoint_min)))
}

/// Golden-section minimization of a scalar convex function on `[lo, hi]`.
pub fn golden_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Raw second moment `tr(rho (log rho - log sigma)^2)` as written in the
/// second-order expansion. See [`variance`] for the centered version actually
/// used by [`second_order_rhs`].
pub fn variance_raw(rho: &State, sigma: &State) -> Result<f64> {
    check_pair(rho, sigma)?;
    if !support_contained(rho.op(), sigma.op())? {
        return Err(Error::arg("support violation"));
    }
    let l = mat_fn(rho.op(), |x| x.log2(), true)?.sub(&mat_fn(sigma.op(), |x| x.log2(), true)?)?;
    let l2 = l.matmul(&l)?;
    rho.op().pair_re(&l2)
}

/// Centered quantum information variance
/// `V = tr(rho (log rho - log sigma)^2) - D(rho||sigma)^2`.
pub fn variance(rho: &State, sigma: &State) -> Result<f64> {
    let raw = variance_raw(rho, sigma)?;
    let d = rel_entropy(rho, sigma)?.value;
    let v = raw - d * d;
    Ok(v.max(0.0))
}

/// Inverse standard-normal CDF.
pub fn normal_quantile(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("epsilon {eps} outside (0,1)")));
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(n.inverse_cdf(eps))
}

/// Second-order expansion right-hand side `n D + sqrt(n V) Phi^{-1}(eps)`.
pub fn second_order_rhs(d: f64, v: f64, eps: f64, n: usize) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::arg("negative variance"));
    }
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    Ok(n as f64 * d + (n as f64 * v).sqrt() * normal_quantile(eps)?)
}

/// Binary relative entropy with the `0 log 0 = 0` convention.
pub fn binary_dkl(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| -> f64 {
        if x <= 0.0 {
            0.0
        } else if y <= 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).log2()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Binary entropy in bits.
pub fn h2(eps: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(eps) + term(1.0 - eps)
}

/// Weak-converse bound `(D + h2(eps)/n) / (1 - eps)` on the Stein rate.
pub fn stein_weak_converse(d: f64, eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("epsilon {eps} outside (0,1)")));
    }
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    Ok((d + h2(eps) / n as f64) / (1.0 - eps))
}

/// Symmetric-setting converse `-(1/n) log[p(1-p)] + div_half`, where
/// `div_half` is a sandwiched-1/2 divergence of the strategy class in use.
pub fn chernoff_setting_rhs(div_half: f64, p: f64, n: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!("prior {p} outside (0,1)")));
    }
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    Ok(-(p * (1.0 - p)).log2() / n as f64 + div_half)
}

/// Strong-converse-exponent bound `max(0, sup_{a>1} ((a-1)/a)(r - D~_a))`,
/// maximized over a grid on `(1, 64]` with golden-section refinement plus the
/// `a -> inf` endpoint `r - D~_inf`.
pub fn sc_exponent_rhs(div_alpha: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    let obj = |a: f64| -> f64 {
        let d = div_alpha(a);
        if d.is_infinite() {
            f64::NEG_INFINITY
        } else if a.is_infinite() {
            r - d
        } else {
            (a - 1.0) / a * (r - d)
        }
    };
    let mut best = 0.0f64;
    let mut best_a = 1.0 + 1e-6;
    let grid: Vec<f64> = (0..64).map(|i| 1.0 + 63.0 * (i as f64 + 0.5) / 64.0).collect();
    for &a in &grid {
        let v = obj(a);
        if v > best {
            best = v;
            best_a = a;
        }
    }
    if best > 0.0 {
        let lo = (best_a - 1.0).max(1.0 + 1e-9);
        let hi = (best_a + 1.0).min(64.0);
        let (_, negv) = golden_min(&|a| -obj(a), lo, hi, 1e-9);
        best = best.max(-negv);
    }
    best.max(obj(f64::INFINITY)).max(0.0)
}
