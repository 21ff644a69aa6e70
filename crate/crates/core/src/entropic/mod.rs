//! Divergences, entropies, distances and their smoothed variants.
//!
//! All logarithms are base 2. Relative entropy follows the unnormalized
//! convention `D(σ‖ρ) = Tr[σ(log σ − log ρ)]` with no `1/Tr σ` factor, while
//! the Rényi family carries `Tr σ` inside the logarithm.

pub mod audit;
pub mod hmin;
pub mod quadrature;
pub mod smooth;

pub use audit::{lemma_audit, LemmaAuditRecord, LemmaId};
pub use hmin::{h_min, h_min_bloch_grid, min_entropy_sdp, SdpSolution};
pub use smooth::{smooth_bound, SmoothKind, SmoothingCertificate};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::channels::CQEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{check_same_dim, trace_of_product, BipartiteState, DensityOperator, HermitianOperator, LOG2_E};

/// Weight of `σ` outside `supp(ρ)` tolerated before a divergence is declared infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// A divergence value, or `+∞` when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceResult {
    pub value: Divergence,
    /// `Tr σ` of the first argument.
    pub lhs_trace: f64,
}

impl DivergenceResult {
    fn finite(v: f64, lhs_trace: f64) -> Self {
        DivergenceResult { value: Divergence::Finite(v), lhs_trace }
    }

    fn infinite(lhs_trace: f64) -> Self {
        DivergenceResult { value: Divergence::Infinite, lhs_trace }
    }

    pub fn support_ok(&self) -> bool {
        matches!(self.value, Divergence::Finite(_))
    }

    pub fn finite_value(&self) -> Option<f64> {
        match self.value {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }

    /// The value as an `f64`, mapping the infinite case to `f64::INFINITY`.
    pub fn as_f64(&self) -> f64 {
        self.finite_value().unwrap_or(f64::INFINITY)
    }

    /// The finite value or a support error.
    pub fn require(&self, what: &str) -> Result<f64> {
        self.finite_value()
            .ok_or_else(|| Error::Support(format!("{what}: supp(σ) is not contained in supp(ρ)")))
    }
}

/// Weight `Tr[(I − Π_ρ)σ]` of `σ` outside the support of `ρ`.
pub fn support_leak(sigma: &HermitianOperator, rho: &HermitianOperator) -> f64 {
    let er = rho.eigen();
    let cut = er.cutoff();
    let n = rho.dim();
    let mut leak = 0.0;
    for j in 0..n {
        if er.values[j] > cut {
            continue;
        }
        let v = er.vectors.column(j);
        let sv = sigma.matrix() * v;
        leak += v.dotc(&sv).re;
    }
    leak
}

fn support_contained(sigma: &HermitianOperator, rho: &HermitianOperator) -> bool {
    support_leak(sigma, rho) <= SUPPORT_LEAK_TOL * sigma.trace().abs().max(1.0)
}

/// Von Neumann entropy `−Tr ρ log ρ` (sub-normalized inputs allowed).
pub fn entropy(rho: &HermitianOperator) -> f64 {
    let e = rho.eigen();
    let cut = e.cutoff();
    -e.values.iter().filter(|&&v| v > cut).map(|v| v * v.log2()).sum::<f64>()
}

/// Shannon entropy of a non-negative sequence (not necessarily normalized).
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

pub fn relative_entropy(sigma: &HermitianOperator, rho: &HermitianOperator) -> Result<DivergenceResult> {
    check_same_dim(sigma, rho)?;
    let tr = sigma.trace();
    if !support_contained(sigma, rho) {
        return Ok(DivergenceResult::infinite(tr));
    }
    let es = sigma.eigen();
    let er = rho.eigen();
    let (cs, cr) = (es.cutoff(), er.cutoff());
    let overlap = es.vectors.adjoint() * &er.vectors;
    let n = sigma.dim();
    let mut value = 0.0;
    for i in 0..n {
        let s = es.values[i];
        if s <= cs {
            continue;
        }
        let mut cross = 0.0;
        for j in 0..n {
            if er.values[j] > cr {
                cross += overlap[(i, j)].norm_sqr() * er.values[j].log2();
            }
        }
        value += s * (s.log2() - cross);
    }
    Ok(DivergenceResult::finite(value, tr))
}

/// `Q̃₂(σ‖ρ) = Tr[σ ρ^{−1/2} σ ρ^{−1/2}]`.
pub fn q2_tilde(sigma: &HermitianOperator, rho: &HermitianOperator) -> Result<f64> {
    check_same_dim(sigma, rho)?;
    if !support_contained(sigma, rho) {
        return Err(Error::Support("Q̃₂ needs supp(σ) ⊂ supp(ρ)".into()));
    }
    let inv = rho.power(-0.5)?;
    let a = sigma.matrix() * inv.matrix();
    Ok(trace_of_product(&a, &a).re)
}

/// `D_max(σ‖ρ) = log₂ λ_max(ρ^{−1/2} σ ρ^{−1/2})`.
pub fn d_max(sigma: &HermitianOperator, rho: &HermitianOperator) -> Result<DivergenceResult> {
    check_same_dim(sigma, rho)?;
    let tr = sigma.trace();
    if !support_contained(sigma, rho) {
        return Ok(DivergenceResult::infinite(tr));
    }
    let inv = rho.power(-0.5)?;
    let x = sigma.sandwich(&inv);
    let lmax = x.max_eigenvalue();
    if !(lmax > 0.0) {
        return Err(Error::Precondition("D_max of the zero operator".into()));
    }
    Ok(DivergenceResult::finite(lmax.log2(), tr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenyiVariant {
    Petz,
    Sandwiched,
    Classical,
}

/// `log₂ Σ λ^α` over positive `λ`, computed without overflow.
fn log2_power_sum(values: impl Iterator<Item = f64>, alpha: f64) -> f64 {
    let v: Vec<f64> = values.filter(|&x| x > 0.0).collect();
    let Some(m) = v.iter().cloned().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    let s: f64 = v.iter().map(|x| (x / m).powf(alpha)).sum();
    alpha * m.log2() + s.log2()
}

pub fn renyi_divergence(
    sigma: &HermitianOperator,
    rho: &HermitianOperator,
    alpha: f64,
    variant: RenyiVariant,
) -> Result<DivergenceResult> {
    check_same_dim(sigma, rho)?;
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::Precondition(format!(
            "alpha must lie in (0,1)∪(1,∞), got {alpha}; use relative_entropy for alpha = 1"
        )));
    }
    let tr = sigma.trace();
    if alpha > 1.0 && variant != RenyiVariant::Classical && !support_contained(sigma, rho) {
        return Ok(DivergenceResult::infinite(tr));
    }
    let log_q = match variant {
        RenyiVariant::Sandwiched => {
            let g = (1.0 - alpha) / (2.0 * alpha);
            let rg = rho.power(g)?;
            let x = sigma.sandwich(&rg);
            let cut = x.support_cutoff();
            log2_power_sum(x.eigenvalues().iter().cloned().filter(|&v| v > cut), alpha)
        }
        RenyiVariant::Petz => {
            let sa = sigma.power(alpha)?;
            let rb = rho.power(1.0 - alpha)?;
            let q = trace_of_product(sa.matrix(), rb.matrix()).re;
            if q > 0.0 {
                q.log2()
            } else {
                f64::NEG_INFINITY
            }
        }
        RenyiVariant::Classical => {
            let n = sigma.dim();
            let mut q = 0.0;
            for i in 0..n {
                let p = sigma.matrix()[(i, i)].re.max(0.0);
                let r = rho.matrix()[(i, i)].re.max(0.0);
                if p == 0.0 {
                    continue;
                }
                if r == 0.0 {
                    if alpha > 1.0 {
                        return Ok(DivergenceResult::infinite(tr));
                    }
                    continue;
                }
                q += p.powf(alpha) * r.powf(1.0 - alpha);
            }
            // classical definition carries no trace normalization
            let v = if q > 0.0 { q.log2() / (alpha - 1.0) } else { f64::INFINITY };
            return Ok(if v.is_finite() { DivergenceResult::finite(v, tr) } else { DivergenceResult::infinite(tr) });
        }
    };
    if log_q == f64::NEG_INFINITY {
        return Ok(DivergenceResult::infinite(tr));
    }
    Ok(DivergenceResult::finite((log_q - tr.log2()) / (alpha - 1.0), tr))
}

/// Generalized fidelity `F* = (‖√τ√ρ‖₁ + √((1−Tr τ)(1−Tr ρ)))²`.
pub fn fidelity_star(tau: &HermitianOperator, rho: &HermitianOperator) -> Result<f64> {
    check_same_dim(tau, rho)?;
    let sr = rho.sqrt()?;
    let m = tau.sandwich(&sr);
    let root: f64 = m.eigenvalues().iter().map(|v| v.max(0.0).sqrt()).sum();
    let extra = ((1.0 - tau.trace()).max(0.0) * (1.0 - rho.trace()).max(0.0)).sqrt();
    Ok((root + extra).powi(2).min(1.0))
}

pub fn purified_distance(tau: &HermitianOperator, rho: &HermitianOperator) -> Result<f64> {
    Ok((1.0 - fidelity_star(tau, rho)?).max(0.0).sqrt())
}

/// Coherent information `I(A⟩B) = H(B) − H(AB)` for a state on `A ⊗ B`
/// (A first). The divergence form `D(ρ_AB‖I_A ⊗ ρ_B)` is computed as well and
/// must agree within 1e-9.
pub fn coherent_information(rho_ab: &BipartiteState) -> Result<f64> {
    if rho_ab.dims().len() != 2 {
        return Err(Error::Precondition("coherent information needs a bipartite state".into()));
    }
    if !rho_ab.state().is_normalized() {
        return Err(Error::Precondition("coherent information needs a normalized state".into()));
    }
    let rho_b = rho_ab.marginal(1)?;
    let entropic = entropy(&rho_b) - entropy(rho_ab.state());
    let reference = HermitianOperator::identity(rho_ab.dim(0)).kron(&rho_b);
    let divergence = relative_entropy(rho_ab.state(), &reference)?.require("coherent information")?;
    if (divergence - entropic).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "coherent information routes disagree: {divergence} vs {entropic}"
        )));
    }
    Ok(entropic)
}

/// Holevo information `H(ρ) − Σ Q(x) H(ρ_x)`, cross-checked against
/// `D(Σ Q(x)|x⟩⟨x|⊗ρ_x ‖ Σ Q(x)|x⟩⟨x|⊗ρ)`.
pub fn holevo_information(ens: &CQEnsemble) -> Result<f64> {
    let avg = ens.average_state()?;
    let entropic = entropy(&avg)
        - ens
            .pmf()
            .iter()
            .zip(ens.states())
            .map(|(q, r)| q * entropy(r))
            .sum::<f64>();
    let joint = ens.joint_state()?;
    let qx = DensityOperator::diagonal(ens.pmf())?;
    let reference = qx.kron(&avg);
    let divergence = relative_entropy(joint.state(), &reference)?.require("Holevo information")?;
    if (divergence - entropic).abs() > 1e-9 {
        return Err(Error::Numerical(format!("Holevo routes disagree: {divergence} vs {entropic}")));
    }
    Ok(entropic)
}

/// `V(σ‖ρ) = Tr[σ(log σ − log ρ)²] − D(σ‖ρ)²`.
pub fn info_variance(sigma: &DensityOperator, rho: &HermitianOperator) -> Result<f64> {
    check_same_dim(sigma, rho)?;
    if !sigma.is_normalized() {
        return Err(Error::Precondition("information variance needs a normalized σ".into()));
    }
    if !support_contained(sigma, rho) {
        return Err(Error::Support("information variance needs supp(σ) ⊂ supp(ρ)".into()));
    }
    let l = &sigma.log2()? - &rho.log2()?;
    let ls = l.matrix() * sigma.matrix();
    let second = trace_of_product(&ls, l.matrix()).re;
    let d = relative_entropy(sigma, rho)?.require("information variance")?;
    Ok((second - d * d).max(0.0))
}

/// `Φ⁻¹(p)` for the standard normal distribution.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Second-order rate `D(σ‖ρ) − √(V/n) Φ⁻¹(ε²)`; the `O(log n / n)` remainder is dropped.
pub fn aep_rate(sigma: &DensityOperator, rho: &HermitianOperator, n: u64, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let d = relative_entropy(sigma, rho)?.require("AEP rate")?;
    let v = info_variance(sigma, rho)?;
    if v == 0.0 {
        return Ok(d);
    }
    let p = epsilon * epsilon;
    // ε = √(1/2) rounds so that ε² misses 1/2 by an ulp
    let z = if (p - 0.5).abs() <= 2.0 * f64::EPSILON { 0.0 } else { inverse_normal_cdf(p) };
    Ok(d - (v / n as f64).sqrt() * z)
}

/// `log₂ e`, re-exported for bound formulas.
pub const LOG_E: f64 = LOG2_E;
