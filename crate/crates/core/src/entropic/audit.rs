//! Registry of inequality audits: each entry samples a random instance that
//! satisfies the hypotheses, evaluates both sides exactly, and reports the
//! slack `rhs − lhs`.
//!
//! Every entry also has an explicit-input evaluator so the same inequality can
//! be checked on hand-built instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::hmin::min_entropy_sdp;
use super::quadrature::{log_difference_integral, quadratic_integral};
use super::{d_max, entropy, purified_distance, q2_tilde, relative_entropy, shannon_entropy};
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    binary_f, c, derive_seed, partial_trace_op, random_density_with, rng_from_seed, trace_distance, trace_norm,
    BipartiteState, CMatrix, DensityOperator, HermitianOperator, LOG2_E,
};

/// Slack below which an audited instance counts as a violation.
pub const AUDIT_TOL: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    Pinsker,
    PurifiedDistance,
    TraceNormPartial,
    TraceNormChannel,
    ContinuityRelEntropy,
    QuadUpperBound,
    DualStates,
    DualSub,
    ImaxBound,
    ContinuityClassical,
    ContinuityQuantum,
    IntegralB1,
    IntegralB2,
}

impl LemmaId {
    pub const ALL: [LemmaId; 13] = [
        LemmaId::Pinsker,
        LemmaId::PurifiedDistance,
        LemmaId::TraceNormPartial,
        LemmaId::TraceNormChannel,
        LemmaId::ContinuityRelEntropy,
        LemmaId::QuadUpperBound,
        LemmaId::DualStates,
        LemmaId::DualSub,
        LemmaId::ImaxBound,
        LemmaId::ContinuityClassical,
        LemmaId::ContinuityQuantum,
        LemmaId::IntegralB1,
        LemmaId::IntegralB2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::Pinsker => "pinsker",
            LemmaId::PurifiedDistance => "purified_distance",
            LemmaId::TraceNormPartial => "trace_norm_partial",
            LemmaId::TraceNormChannel => "trace_norm_channel",
            LemmaId::ContinuityRelEntropy => "continuity_rel_entropy",
            LemmaId::QuadUpperBound => "quad_upper_bound",
            LemmaId::DualStates => "dual_states",
            LemmaId::DualSub => "dual_sub",
            LemmaId::ImaxBound => "imax_bound",
            LemmaId::ContinuityClassical => "continuity_classical",
            LemmaId::ContinuityQuantum => "continuity_quantum",
            LemmaId::IntegralB1 => "integral_b1",
            LemmaId::IntegralB2 => "integral_b2",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        LemmaId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == key)
            .ok_or_else(|| Error::Lookup(format!("unknown lemma id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaAuditRecord {
    pub lemma_id: LemmaId,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub instance_seed: u64,
}

impl LemmaAuditRecord {
    fn new(lemma_id: LemmaId, (lhs, rhs): (f64, f64), instance_seed: u64) -> Self {
        LemmaAuditRecord { lemma_id, lhs, rhs, slack: rhs - lhs, instance_seed }
    }

    pub fn holds(&self) -> bool {
        self.slack >= AUDIT_TOL
    }
}

/// Samples one instance of `id` from `instance_seed` and evaluates both sides.
pub fn lemma_audit(id: LemmaId, instance_seed: u64) -> Result<LemmaAuditRecord> {
    let mut rng = rng_from_seed(instance_seed);
    let sides = match id {
        LemmaId::Pinsker => {
            let d = rng.random_range(2..=6);
            let rank = rng.random_range(1..=d);
            let s = random_density_with(d, rank, &mut rng)?;
            let r = random_positive(d, d, rng.random_range(0.3..=1.0), &mut rng)?;
            pinsker(&s, &r)?
        }
        LemmaId::PurifiedDistance => {
            let d = rng.random_range(2..=6);
            let a = random_positive(d, rng.random_range(1..=d), rng.random_range(0.2..=1.0), &mut rng)?;
            let b = random_positive(d, d, rng.random_range(0.2..=1.0), &mut rng)?;
            let t = rng.random_range(0.0..=1.0);
            let tau = DensityOperator::new_clamped(&a.scale(t) + &b.scale(1.0 - t), 1e-12)?;
            let rho = DensityOperator::new_clamped(b, 1e-12)?;
            purified_distance_bound(&tau, &rho)?
        }
        LemmaId::TraceNormPartial => {
            let dims = bipartite_dims(&mut rng);
            let n = dims[0] * dims[1];
            let r = random_positive(n, rng.random_range(1..=n), rng.random_range(0.2..=2.0), &mut rng)?;
            let s = random_positive(n, rng.random_range(1..=n), rng.random_range(0.2..=2.0), &mut rng)?;
            trace_norm_partial(&r, &s, &dims)?
        }
        LemmaId::TraceNormChannel => {
            let d_in: usize = rng.random_range(2..=4);
            let d_out: usize = rng.random_range(2..=4);
            let min_k = d_in.div_ceil(d_out);
            let k = rng.random_range(min_k.max(1)..=3.max(min_k));
            let ch = QuantumChannel::random(d_in, d_out, k, rng.random())?;
            let r = random_positive(d_in, rng.random_range(1..=d_in), rng.random_range(0.2..=2.0), &mut rng)?;
            let s = random_positive(d_in, rng.random_range(1..=d_in), rng.random_range(0.2..=2.0), &mut rng)?;
            trace_norm_channel(&ch, &r, &s)?
        }
        LemmaId::ContinuityRelEntropy => {
            let d = rng.random_range(2..=4);
            let k = rng.random_range(2..=8);
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..=1.0)).collect();
            let total: f64 = w.iter().sum();
            let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
            let t = rng.random_range(0.0..=0.2);
            let mut pairs = Vec::with_capacity(k);
            for _ in 0..k {
                let sigma = random_positive(d, rng.random_range(1..=d), rng.random_range(0.5..=1.0), &mut rng)?;
                let tau = random_positive(d, d, rng.random_range(0.5..=1.0), &mut rng)?;
                let hat = &sigma.scale(1.0 - t) + &tau.scale(t);
                pairs.push((DensityOperator::new_clamped(sigma, 1e-12)?, DensityOperator::new_clamped(hat, 1e-12)?));
            }
            continuity_rel_entropy(&probs, &pairs, d)?
        }
        LemmaId::QuadUpperBound => {
            let d = rng.random_range(2..=6);
            let s = random_positive(d, rng.random_range(1..=d), rng.random_range(0.3..=2.0), &mut rng)?;
            let r = random_positive(d, d, rng.random_range(0.3..=2.0), &mut rng)?;
            quad_upper_bound(&s, &r)?
        }
        LemmaId::DualStates => {
            let dims = bipartite_dims(&mut rng);
            let n = dims[0] * dims[1];
            let rho = BipartiteState::new(random_density_with(n, rng.random_range(1..=n), &mut rng)?, dims.to_vec())?;
            let tau = random_positive(dims[0], dims[0], rng.random_range(0.3..=2.0), &mut rng)?;
            dual_states(&rho, &tau)?
        }
        LemmaId::DualSub => {
            let dims = bipartite_dims(&mut rng);
            let n = dims[0] * dims[1];
            let rho = random_positive(n, rng.random_range(1..=n), rng.random_range(0.2..=3.0), &mut rng)?;
            let tau = random_positive(dims[0], dims[0], rng.random_range(0.3..=2.0), &mut rng)?;
            dual_sub(&rho, &dims, &tau)?
        }
        LemmaId::ImaxBound => {
            let dims = bipartite_dims(&mut rng);
            let n = dims[0] * dims[1];
            let rho = BipartiteState::new(random_density_with(n, n, &mut rng)?, dims.to_vec())?;
            let eps = rng.random_range(0.005..1.0 / 24.0);
            imax_bound(&rho, eps)?
        }
        LemmaId::ContinuityClassical => {
            let n = rng.random_range(2..=6);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
            let mut q: Vec<f64> = p.iter().map(|&x| (x + rng.random_range(-0.2..=0.2)).clamp(0.0, 1.0)).collect();
            let budget = rng.random_range(0.0..=0.5);
            let t: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            if t > budget {
                let s = budget / t;
                q = p.iter().zip(&q).map(|(a, b)| a + s * (b - a)).collect();
            }
            continuity_classical(&p, &q)?
        }
        LemmaId::ContinuityQuantum => {
            let d = rng.random_range(2..=6);
            let a = random_positive(d, rng.random_range(1..=d), rng.random_range(0.3..=1.0), &mut rng)?;
            let b = random_positive(d, rng.random_range(1..=d), rng.random_range(0.3..=1.0), &mut rng)?;
            let budget = rng.random_range(0.0..=0.5);
            let full = trace_norm(&(&a - &b));
            let t = if full > budget { budget / full } else { 1.0 };
            let s = &a.scale(1.0 - t) + &b.scale(t);
            continuity_quantum(&DensityOperator::new_clamped(a, 1e-12)?, &DensityOperator::new_clamped(s, 1e-12)?)?
        }
        LemmaId::IntegralB1 | LemmaId::IntegralB2 => {
            let d = rng.random_range(2..=6);
            let rho = mixed_positive(d, &mut rng)?;
            let target = mixed_positive(d, &mut rng)?;
            let delta = &target - &rho;
            if id == LemmaId::IntegralB1 {
                integral_b1(&rho, &delta)?
            } else {
                integral_b2(&rho, &delta)?
            }
        }
    };
    Ok(LemmaAuditRecord::new(id, sides, instance_seed))
}

/// Audits `count` instances with seeds derived from `master_seed`, in parallel, in index order.
pub fn audit_many(id: LemmaId, master_seed: u64, count: usize) -> Result<Vec<LemmaAuditRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| lemma_audit(id, derive_seed(master_seed ^ lemma_salt(id), i)))
        .collect()
}

fn lemma_salt(id: LemmaId) -> u64 {
    LemmaId::ALL.iter().position(|&x| x == id).unwrap() as u64 * 0x9E37_79B9
}

fn bipartite_dims(rng: &mut ChaCha8Rng) -> [usize; 2] {
    [[2, 2], [2, 3], [3, 2]][rng.random_range(0..3)]
}

/// Random PSD operator of the given rank and trace.
fn random_positive(d: usize, rank: usize, trace: f64, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    Ok(random_density_with(d, rank, rng)?.op().scale(trace))
}

/// Full-rank positive operator with eigenvalues kept away from zero.
fn mixed_positive(d: usize, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    let s = rng.random_range(0.1..=0.5);
    let scale = rng.random_range(0.5..=2.0);
    let r = random_density_with(d, rng.random_range(1..=d), rng)?;
    Ok(&r.op().scale((1.0 - s) * scale) + &HermitianOperator::identity(d).scale(s * scale / d as f64))
}

/// `(1/(2 ln 2))‖σ−ρ‖₁² ≤ D(σ‖ρ)` for normalized `σ`, sub-normalized `ρ`.
pub fn pinsker(sigma: &DensityOperator, rho: &HermitianOperator) -> Result<(f64, f64)> {
    if !sigma.is_normalized() {
        return Err(Error::Precondition("Pinsker needs a normalized σ".into()));
    }
    let t = trace_distance(sigma, rho)?;
    let d = relative_entropy(sigma, rho)?.require("Pinsker")?;
    Ok((t * t / (2.0 * std::f64::consts::LN_2), d))
}

/// `‖τ−ρ‖₁ ≤ 2 P(τ,ρ)`.
pub fn purified_distance_bound(tau: &DensityOperator, rho: &DensityOperator) -> Result<(f64, f64)> {
    Ok((trace_distance(tau, rho)?, 2.0 * purified_distance(tau, rho)?))
}

/// `‖ρ_A−σ_A‖₁ ≤ ‖ρ_AB−σ_AB‖₁` for positive operators on `A ⊗ B`.
pub fn trace_norm_partial(rho: &HermitianOperator, sigma: &HermitianOperator, dims: &[usize]) -> Result<(f64, f64)> {
    let ra = partial_trace_op(rho, dims, &[0])?;
    let sa = partial_trace_op(sigma, dims, &[0])?;
    Ok((trace_distance(&ra, &sa)?, trace_distance(rho, sigma)?))
}

/// `‖N(ρ)−N(σ)‖₁ ≤ ‖ρ−σ‖₁`.
pub fn trace_norm_channel(ch: &QuantumChannel, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<(f64, f64)> {
    let a = ch.apply_op(rho)?;
    let b = ch.apply_op(sigma)?;
    Ok((trace_distance(&a, &b)?, trace_distance(rho, sigma)?))
}

/// Continuity of relative entropy for a discrete random pair `(σ_k, σ̂_k)` with
/// probabilities `probs`; `ρ = E σ`, `ρ̂ = E σ̂`, and `ε_σ`, `ε_ρ` are the
/// realized distances. Returns `(|E D(σ‖ρ) − E D(σ̂‖ρ̂)|, (ε_σ+ε_ρ) log d + f(ε_σ) + f(ε_ρ))`.
pub fn continuity_rel_entropy(
    probs: &[f64],
    pairs: &[(DensityOperator, DensityOperator)],
    d: usize,
) -> Result<(f64, f64)> {
    if probs.len() != pairs.len() || probs.is_empty() {
        return Err(Error::MalformedInput("one probability per operator pair".into()));
    }
    let mut rho = CMatrix::zeros(d, d);
    let mut rho_hat = CMatrix::zeros(d, d);
    let mut eps_sigma = 0.0;
    for (p, (s, sh)) in probs.iter().zip(pairs) {
        if s.dim() != d || sh.dim() != d {
            return Err(Error::dims(d, s.dim()));
        }
        rho += s.matrix() * c(*p, 0.0);
        rho_hat += sh.matrix() * c(*p, 0.0);
        eps_sigma += p * trace_distance(s, sh)?;
    }
    let rho = HermitianOperator::new(rho)?;
    let rho_hat = HermitianOperator::new(rho_hat)?;
    let eps_rho = trace_distance(&rho, &rho_hat)?;
    if eps_sigma > 0.5 || eps_rho > 0.5 {
        return Err(Error::Precondition("continuity needs ε_σ, ε_ρ ≤ 1/2".into()));
    }
    let mut e = 0.0;
    let mut e_hat = 0.0;
    for (p, (s, sh)) in probs.iter().zip(pairs) {
        e += p * relative_entropy(s, &rho)?.require("continuity")?;
        e_hat += p * relative_entropy(sh, &rho_hat)?.require("continuity")?;
    }
    let rhs = (eps_sigma + eps_rho) * (d as f64).log2() + binary_f(eps_sigma) + binary_f(eps_rho);
    Ok(((e - e_hat).abs(), rhs))
}

/// `D(σ‖ρ)/log₂e ≤ Q̃₂(σ‖ρ) − Tr σ` for positive `σ`, `ρ`.
pub fn quad_upper_bound(sigma: &HermitianOperator, rho: &HermitianOperator) -> Result<(f64, f64)> {
    let d = relative_entropy(sigma, rho)?.require("quadratic bound")?;
    Ok((d / LOG2_E, q2_tilde(sigma, rho)? - sigma.trace()))
}

/// Lower bound on `log₂ inf_{ξ_B} 2^{D_max(ρ_AB ‖ τ_A ⊗ ξ_B)}` over normalized
/// `ξ_B`, from the dual value of the min-entropy program applied to
/// `(τ_A^{-1/2} ⊗ I) ρ (τ_A^{-1/2} ⊗ I)`.
pub fn min_dmax_product_lower(rho: &HermitianOperator, dims: &[usize], tau_a: &HermitianOperator) -> Result<f64> {
    let (d_a, d_b) = (dims[0], dims[1]);
    if tau_a.dim() != d_a {
        return Err(Error::dims(d_a, tau_a.dim()));
    }
    let rho_a = partial_trace_op(rho, dims, &[0])?;
    if super::support_leak(&rho_a, tau_a) > super::SUPPORT_LEAK_TOL * rho_a.trace().max(1.0) {
        return Err(Error::Support("supp(ρ_A) ⊄ supp(τ_A)".into()));
    }
    let inv = tau_a.power(-0.5)?.kron(&HermitianOperator::identity(d_b));
    let reduced = rho.sandwich(&inv);
    Ok(min_entropy_sdp(&reduced, d_a, d_b)?.dual.log2())
}

/// `D̃₂(ρ_AB‖τ_A⊗ρ_B) ≤ inf_ξ D_max(ρ_AB‖τ_A⊗ξ_B)` for a normalized state.
pub fn dual_states(rho: &BipartiteState, tau_a: &HermitianOperator) -> Result<(f64, f64)> {
    let st = rho.state();
    let rho_b = rho.marginal(1)?;
    let reference = tau_a.kron(&rho_b);
    let lhs = (q2_tilde(st, &reference)? / st.trace()).log2();
    Ok((lhs, min_dmax_product_lower(st, rho.dims(), tau_a)?))
}

/// `log₂ Q̃₂(ρ_AB‖τ_A⊗ρ_B) ≤ inf_ξ D_max(ρ_AB‖τ_A⊗ξ_B)` for a positive operator.
pub fn dual_sub(rho: &HermitianOperator, dims: &[usize], tau_a: &HermitianOperator) -> Result<(f64, f64)> {
    let rho_b = partial_trace_op(rho, dims, &[1])?;
    let reference = tau_a.kron(&rho_b);
    let lhs = q2_tilde(rho, &reference)?.log2();
    Ok((lhs, min_dmax_product_lower(rho, dims, tau_a)?))
}

/// `I_max^{2ε}(A;B) ≤ D_max^{ε}(ρ_AB‖ρ_A⊗ρ_B) + log₂(3/ε²)` (the lemma with γ = ε).
///
/// The left side is bounded above by the feasible point `ρ_AB` itself,
/// `D_max(ρ_AB‖ρ_A⊗ρ_B)`. The smooth divergence on the right is bounded
/// below through projectors `Π`: any `ρ̂` in the ε-ball has
/// `Tr Πρ̂ ≥ Tr Πρ − 2ε`, so `D_max(ρ̂‖R) ≥ log₂((Tr Πρ − 2ε)/Tr ΠR)`.
pub fn imax_bound(rho: &BipartiteState, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Precondition(format!("ε = {epsilon} outside (0, 1/2)")));
    }
    let st = rho.state();
    let reference = rho.marginal(0)?.kron(&rho.marginal(1)?);
    let lhs = d_max(st, &reference)?.require("max-mutual information")?;
    let mut best = f64::NEG_INFINITY;
    // projectors onto the positive part of ρ − 2^μ R along a grid of μ
    let mut mu = -4.0;
    while mu <= lhs + 0.5 {
        let diff = st.op() - &reference.scale(mu.exp2());
        let e = diff.eigen();
        let pos: Vec<f64> = e.values.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        if pos.iter().any(|&v| v > 0.0) {
            let proj = HermitianOperator::from_matrix_unchecked(e.reconstruct(|v| if v > 0.0 { 1.0 } else { 0.0 }));
            let num = proj.trace_product(st) - 2.0 * epsilon;
            let den = proj.trace_product(&reference);
            if num > 0.0 && den > 0.0 {
                best = best.max((num / den).log2());
            }
        }
        mu += 0.05;
    }
    best = best.max((1.0 - 2.0 * epsilon).log2());
    Ok((lhs, best + (3.0 / (epsilon * epsilon)).log2()))
}

/// `|H(p) − H(q)| ≤ T log|X| + f(T)` for sequences in `[0,1]` with `T ≤ 1/2`.
pub fn continuity_classical(p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::MalformedInput("sequences must have equal nonzero length".into()));
    }
    if p.iter().chain(q).any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Precondition("entries must lie in [0, 1]".into()));
    }
    let t: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    if t > 0.5 {
        return Err(Error::Precondition(format!("T = {t} exceeds 1/2")));
    }
    let lhs = (shannon_entropy(p) - shannon_entropy(q)).abs();
    Ok((lhs, t * (p.len() as f64).log2() + binary_f(t)))
}

/// `|H(ρ) − H(σ)| ≤ T log d + f(T)` with `T = ‖ρ−σ‖₁ ≤ 1/2`.
pub fn continuity_quantum(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(f64, f64)> {
    let t = trace_distance(rho, sigma)?;
    if t > 0.5 {
        return Err(Error::Precondition(format!("T = {t} exceeds 1/2")));
    }
    let lhs = (entropy(rho) - entropy(sigma)).abs();
    Ok((lhs, t * (rho.dim() as f64).log2() + binary_f(t)))
}

/// `log₂(ρ+δ) − log₂ρ ≤ log₂e ∫(ρ+t)^{-1}δ(ρ+t)^{-1}dt`: returns
/// `(λ_max(left − right), 0)`.
pub fn integral_b1(rho: &HermitianOperator, delta: &HermitianOperator) -> Result<(f64, f64)> {
    let sum = rho + delta;
    if !(sum.min_eigenvalue() > 0.0) {
        return Err(Error::Precondition("ρ + δ must be positive definite".into()));
    }
    let left = &sum.log2()? - &rho.log2()?;
    let right = log_difference_integral(rho, delta)?.scale(LOG2_E);
    Ok(((&left - &right).max_eigenvalue(), 0.0))
}

/// `∫ Tr[δ(ρ+t)^{-1}δ(ρ+t)^{-1}] dt ≤ Tr[δρ^{-1/2}δρ^{-1/2}]`.
pub fn integral_b2(rho: &HermitianOperator, delta: &HermitianOperator) -> Result<(f64, f64)> {
    let lhs = quadratic_integral(rho, delta)?;
    let inv = rho.power(-0.5)?;
    let a = delta.matrix() * inv.matrix();
    Ok((lhs, crate::linalg::trace_of_product(&a, &a).re))
}
