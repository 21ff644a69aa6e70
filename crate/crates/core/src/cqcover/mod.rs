//! Classical-quantum covering.
//!
//! A codebook of `Θ` symbols drawn i.i.d. from `Q` is mapped to the uniform
//! mixture `σ = (1/Θ) Σ ρ_{x(i)}`. Its expected relative entropy to
//! `ρ = Σ Q(x) ρ_x` is at most `(log₂e/Θ)·Q̃₂(φ_XB‖Q_X⊗ρ)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{CQEnsemble, PMF_TOL};
use crate::entropic::{d_max, purified_distance, q2_tilde, relative_entropy, smooth_bound, support_leak, SmoothKind, SUPPORT_LEAK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    binary_f, c, derive_seed, random_density_with, rng_from_seed, trace_distance, trace_of_product, BipartiteState, CMatrix,
    DensityOperator, HermitianOperator, LOG2_E,
};
use crate::stats::McEstimate;

/// Largest number of ordered codebooks `|X|^Θ` the exact expectation accepts.
pub const MAX_ENUMERATION: u64 = 1_000_000;
/// Agreement required between two routes to the same quantity.
pub const ROUTE_TOL: f64 = 1e-9;

/// Ordered list of `Θ` symbols with repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Codebook {
    symbols: Vec<String>,
    #[serde(skip)]
    indices: Vec<usize>,
}

impl Codebook {
    pub fn new(ens: &CQEnsemble, symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Precondition("a codebook needs at least one symbol".into()));
        }
        let indices = symbols.iter().map(|s| ens.index_of(s)).collect::<Result<Vec<_>>>()?;
        Ok(Codebook { symbols, indices })
    }

    pub fn from_indices(ens: &CQEnsemble, indices: Vec<usize>) -> Result<Self> {
        let symbols = indices
            .iter()
            .map(|&i| {
                ens.alphabet()
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Lookup(format!("symbol index {i} not in alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ens, symbols)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn theta(&self) -> usize {
        self.symbols.len()
    }
}

/// Draws `Θ` symbols i.i.d. from the ensemble's PMF.
pub fn sample_codebook(ens: &CQEnsemble, theta: usize, seed: u64) -> Result<Codebook> {
    let mut rng = rng_from_seed(seed);
    sample_codebook_with(ens, theta, &mut rng)
}

fn sample_codebook_with<R: Rng + ?Sized>(ens: &CQEnsemble, theta: usize, rng: &mut R) -> Result<Codebook> {
    if theta == 0 {
        return Err(Error::Precondition("Θ must be at least 1".into()));
    }
    let dist = WeightedIndex::new(ens.pmf()).map_err(|e| Error::MalformedInput(format!("ensemble PMF: {e}")))?;
    Codebook::from_indices(ens, (0..theta).map(|_| dist.sample(rng)).collect())
}

#[derive(Debug, Clone)]
pub struct CQJoint {
    /// `Σ Q(x)|x⟩⟨x| ⊗ ρ_x` on `X ⊗ B`.
    pub phi_xb: BipartiteState,
    pub q_x: Vec<f64>,
    pub rho_avg: DensityOperator,
}

impl CQJoint {
    /// `Q_X ⊗ ρ`.
    pub fn product_reference(&self) -> Result<DensityOperator> {
        Ok(DensityOperator::diagonal(&self.q_x)?.kron(&self.rho_avg))
    }
}

pub fn cq_joint(ens: &CQEnsemble) -> Result<CQJoint> {
    let phi_xb = ens.joint_state()?;
    let rho_avg = ens.average_state()?;
    let b = phi_xb.marginal(1)?;
    if b.max_abs_diff(&rho_avg) > 1e-10 {
        return Err(Error::Numerical("B-marginal of φ_XB differs from Σ Q(x)ρ_x".into()));
    }
    let x = phi_xb.marginal(0)?;
    let n = ens.len();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { ens.pmf()[i] } else { 0.0 };
            if (x.matrix()[(i, j)] - c(want, 0.0)).norm() > 1e-10 {
                return Err(Error::Numerical("X-marginal of φ_XB differs from Q".into()));
            }
        }
    }
    Ok(CQJoint { phi_xb, q_x: ens.pmf().to_vec(), rho_avg })
}

fn mixture(ens: &CQEnsemble, weights: &[f64]) -> Result<DensityOperator> {
    let d = ens.d_b();
    let mut m = CMatrix::zeros(d, d);
    for (w, r) in weights.iter().zip(ens.states()) {
        if *w > 0.0 {
            m += r.matrix() * c(*w, 0.0);
        }
    }
    DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(m), 1e-12)
}

/// `σ = (1/Θ) Σ_i ρ_{x(i)}`.
pub fn mix_codebook(ens: &CQEnsemble, code: &Codebook) -> Result<DensityOperator> {
    let mut counts = vec![0.0; ens.len()];
    for s in code.symbols() {
        counts[ens.index_of(s)?] += 1.0;
    }
    let theta = code.theta() as f64;
    let weights: Vec<f64> = counts.iter().map(|n| n / theta).collect();
    mixture(ens, &weights)
}

/// `Q̃₂(φ_XB‖Q_X⊗ρ)`, computed from the joint state and as
/// `Σ_x Q(x) Tr[ρ_x ρ^{−1/2} ρ_x ρ^{−1/2}]`; the two must agree.
pub fn q2_cq(ens: &CQEnsemble) -> Result<f64> {
    let rho = ens.average_state()?;
    for ((s, q), r) in ens.alphabet().iter().zip(ens.pmf()).zip(ens.states()) {
        if *q > 0.0 && support_leak(r, &rho) > SUPPORT_LEAK_TOL {
            return Err(Error::Support(format!("state of symbol {s:?} leaves the support of ρ")));
        }
    }
    let inv = rho.power(-0.5)?;
    let per_symbol: f64 = ens
        .pmf()
        .iter()
        .zip(ens.states())
        .filter(|(q, _)| **q > 0.0)
        .map(|(q, r)| {
            let a = r.matrix() * inv.matrix();
            q * trace_of_product(&a, &a).re
        })
        .sum();
    let joint = cq_joint(ens)?;
    let reference = joint.product_reference()?;
    let via_joint = q2_tilde(joint.phi_xb.state(), &reference)?;
    if (via_joint - per_symbol).abs() > ROUTE_TOL * per_symbol.max(1.0) {
        return Err(Error::Numerical(format!("Q̃₂ routes disagree: {via_joint} vs {per_symbol}")));
    }
    Ok(per_symbol)
}

/// `(log₂e/Θ)·Q̃₂(φ_XB‖Q_X⊗ρ)`.
pub fn covering_bound(q2: f64, theta: usize) -> f64 {
    LOG2_E * q2 / theta as f64
}

fn enumeration_guard(n_symbols: usize, theta: usize) -> Result<u64> {
    let count = (n_symbols as u64).checked_pow(theta as u32).filter(|&n| n <= MAX_ENUMERATION);
    count.ok_or_else(|| {
        Error::Resource(format!(
            "|X|^Θ = {n_symbols}^{theta} codebooks exceed the enumeration limit {MAX_ENUMERATION}"
        ))
    })
}

/// All `(n_1,…,n_k)` with `Σ n_x = Θ`, in lexicographic order.
fn compositions(k: usize, theta: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for n in 0..=left {
            cur.push(n);
            rec(k, left - n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, theta, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `Θ!/∏n_x! · ∏Q(x)^{n_x}`, built as a product of binomials.
fn multinomial_weight(counts: &[usize], pmf: &[f64]) -> f64 {
    let mut w = 1.0;
    let mut total = 0usize;
    for (&n, &q) in counts.iter().zip(pmf) {
        for j in 1..=n {
            total += 1;
            w *= total as f64 / j as f64 * q;
        }
    }
    w
}

fn check_theta(theta: usize) -> Result<()> {
    if theta == 0 {
        return Err(Error::Precondition("Θ must be at least 1".into()));
    }
    Ok(())
}

/// Exact `E D(σ‖ρ)` over i.i.d. codebooks. `D` depends only on the symbol
/// counts, so the sum runs over type classes with multinomial weights.
pub fn exact_expectation(ens: &CQEnsemble, theta: usize) -> Result<f64> {
    check_theta(theta)?;
    enumeration_guard(ens.len(), theta)?;
    let rho = ens.average_state()?;
    let terms = compositions(ens.len(), theta)
        .into_par_iter()
        .map(|counts| {
            let w = multinomial_weight(&counts, ens.pmf());
            if w == 0.0 {
                return Ok(0.0);
            }
            let weights: Vec<f64> = counts.iter().map(|&n| n as f64 / theta as f64).collect();
            let sigma = mixture(ens, &weights)?;
            Ok(w * relative_entropy(&sigma, &rho)?.require("codebook mixture")?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// Exact `E D(σ‖ρ)` by visiting all `|X|^Θ` ordered codebooks.
pub fn exact_expectation_ordered(ens: &CQEnsemble, theta: usize) -> Result<f64> {
    check_theta(theta)?;
    let total = enumeration_guard(ens.len(), theta)?;
    let k = ens.len() as u64;
    let rho = ens.average_state()?;
    let terms = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut w = 1.0;
            let mut weights = vec![0.0; ens.len()];
            for _ in 0..theta {
                let x = (idx % k) as usize;
                idx /= k;
                w *= ens.pmf()[x];
                weights[x] += 1.0 / theta as f64;
            }
            if w == 0.0 {
                return Ok(0.0);
            }
            let sigma = mixture(ens, &weights)?;
            Ok(w * relative_entropy(&sigma, &rho)?.require("codebook mixture")?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

pub fn mc_expectation(ens: &CQEnsemble, theta: usize, trials: usize, master_seed: u64) -> Result<McEstimate> {
    check_theta(theta)?;
    if trials < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
    }
    let rho = ens.average_state()?;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let code = sample_codebook(ens, theta, derive_seed(master_seed, t))?;
            let sigma = mix_codebook(ens, &code)?;
            relative_entropy(&sigma, &rho)?.require("codebook mixture")
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(&values))
}

/// `Σ_x Q(x) Tr[ρ_x(log₂(ρ_x/Θ + ρ) − log₂ρ)]`, which sits between the exact
/// expectation and the `Q̃₂` bound.
pub fn jensen_intermediate(ens: &CQEnsemble, theta: usize) -> Result<f64> {
    check_theta(theta)?;
    let rho = ens.average_state()?;
    let log_rho = rho.log2()?;
    let mut total = 0.0;
    for (q, r) in ens.pmf().iter().zip(ens.states()) {
        if *q == 0.0 {
            continue;
        }
        let shifted = &r.scale(1.0 / theta as f64) + rho.op();
        let diff = &shifted.log2()? - &log_rho;
        total += q * r.trace_product(&diff);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem3Terms {
    pub epsilon: f64,
    pub eta: f64,
    /// `D_max(φ_XB‖Q_X⊗ρ)`.
    pub d_max_exact: f64,
    /// Certified upper bound on `D_max^ε(φ_XB‖Q_X⊗ρ)`.
    pub d_max_smooth: f64,
    /// `[D_max^ε − log₂η]^+` evaluated with the bound above.
    pub log_theta_bound: f64,
    /// `(3 log₂e/ε²)η + 16ε log₂|B| + f(12ε) + f(4ε)`; infinite at `ε = 0`.
    pub delta_bound: f64,
}

/// Achievability terms of the one-shot CQ covering theorem. `ε = 0` gives the
/// unsmoothed limit.
pub fn theorem3_terms(ens: &CQEnsemble, epsilon: f64, eta: f64) -> Result<Theorem3Terms> {
    if !(0.0..1.0 / 24.0).contains(&epsilon) {
        return Err(Error::Precondition(format!("ε = {epsilon} outside [0, 1/24)")));
    }
    if !(eta > 0.0 && eta < 1.0 / 24.0) {
        return Err(Error::Precondition(format!("η = {eta} outside (0, 1/24)")));
    }
    let joint = cq_joint(ens)?;
    let reference = joint.product_reference()?;
    let exact = d_max(joint.phi_xb.state(), &reference)?.require("D_max(φ_XB‖Q_X⊗ρ)")?;
    let smooth = if epsilon == 0.0 {
        exact
    } else {
        smooth_bound(SmoothKind::DMaxEps, joint.phi_xb.state(), Some(&reference), epsilon)?
            .bound_value
            .min(exact)
    };
    let delta_bound = if epsilon == 0.0 {
        f64::INFINITY
    } else {
        3.0 * LOG2_E / (epsilon * epsilon) * eta
            + 16.0 * epsilon * (ens.d_b() as f64).log2()
            + binary_f(12.0 * epsilon)
            + binary_f(4.0 * epsilon)
    };
    Ok(Theorem3Terms {
        epsilon,
        eta,
        d_max_exact: exact,
        d_max_smooth: smooth,
        log_theta_bound: (smooth - eta.log2()).max(0.0),
        delta_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConverseCertificate {
    pub log_theta: f64,
    /// `D_max(ω_XA‖ω′_XA)` on the message-index register.
    pub d_max_input: f64,
    /// `D_max(ω_XB‖ω_X⊗ω_B)` after the channel.
    pub value: f64,
}

/// Data-processing certificate for a codebook: the message register `X` and
/// its copy `A` are perfectly correlated, and `i ↦ ρ_{x(i)}` maps `A` to `B`.
pub fn converse_certificate(ens: &CQEnsemble, code: &Codebook) -> Result<ConverseCertificate> {
    let theta = code.theta();
    let log_theta = (theta as f64).log2();
    let mut diag = vec![0.0; theta * theta];
    for i in 0..theta {
        diag[i * theta + i] = 1.0 / theta as f64;
    }
    let omega = DensityOperator::diagonal(&diag)?;
    let omega_prime = DensityOperator::maximally_mixed(theta * theta);
    let d_in = d_max(&omega, &omega_prime)?.require("D_max(ω_XA‖ω′_XA)")?;
    if (d_in - log_theta).abs() > 1e-12 {
        return Err(Error::Numerical(format!("D_max(ω_XA‖ω′_XA) = {d_in}, expected log₂Θ = {log_theta}")));
    }
    let states = code.indices().iter().map(|&i| ens.states()[i].clone()).collect();
    let message_ens = CQEnsemble::indexed(vec![1.0 / theta as f64; theta], states)?;
    let joint = cq_joint(&message_ens)?;
    let reference = joint.product_reference()?;
    let value = d_max(joint.phi_xb.state(), &reference)?.require("D_max(ω_XB‖ω_X⊗ω_B)")?;
    if value > log_theta + ROUTE_TOL {
        return Err(Error::Numerical(format!("converse certificate {value} exceeds log₂Θ = {log_theta}")));
    }
    Ok(ConverseCertificate { log_theta, d_max_input: d_in, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Exact,
    Mc,
}

impl EstimateMode {
    pub fn name(&self) -> &'static str {
        match self {
            EstimateMode::Exact => "exact",
            EstimateMode::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalBound {
    pub mode: EstimateMode,
    /// `E D(P_σ‖Q_Y)` over i.i.d. codebooks.
    pub expectation: f64,
    /// Zero in exact mode.
    pub stderr: f64,
    /// `(log₂e/Θ)·2^{D₂(Q_X Q_{Y|X}‖Q_X Q_Y)}`.
    pub d2_bound: f64,
}

fn validate_pmf(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::MalformedInput(format!("{what} must be a non-empty vector of non-negative numbers")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PMF_TOL {
        return Err(Error::MalformedInput(format!("{what} sums to {s}")));
    }
    Ok(())
}

fn classical_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, qv)| pv * (pv / qv).log2())
        .sum()
}

/// Classical channel `W` (rows `W(·|x)`) with input PMF `Q`. The expectation
/// is exact when `|X|^Θ` is within the enumeration limit and a seeded Monte
/// Carlo with `trials` draws otherwise. The `D₂` bound is cross-checked
/// against `q2_cq` on the diagonal embedding.
pub fn classical_bound(w: &[Vec<f64>], q: &[f64], theta: usize, trials: usize, seed: u64) -> Result<ClassicalBound> {
    check_theta(theta)?;
    validate_pmf(q, "input PMF")?;
    if w.len() != q.len() {
        return Err(Error::MalformedInput(format!("W has {} rows but Q has {} entries", w.len(), q.len())));
    }
    let n_y = w[0].len();
    for (x, row) in w.iter().enumerate() {
        if row.len() != n_y {
            return Err(Error::MalformedInput(format!("row {x} of W has {} entries, expected {n_y}", row.len())));
        }
        validate_pmf(row, &format!("row {x} of W"))?;
    }
    let q_y: Vec<f64> = (0..n_y).map(|y| w.iter().zip(q).map(|(row, qx)| qx * row[y]).sum()).collect();
    let mut d2 = 0.0;
    for (row, qx) in w.iter().zip(q) {
        for (y, wy) in row.iter().enumerate() {
            if *qx > 0.0 && *wy > 0.0 {
                d2 += qx * wy * wy / q_y[y];
            }
        }
    }
    let cq = q2_cq(&CQEnsemble::from_classical(w, q)?)?;
    if (cq - d2).abs() > ROUTE_TOL * d2.max(1.0) {
        return Err(Error::Numerical(format!("classical Q₂ {d2} differs from the CQ embedding {cq}")));
    }
    let mix = |counts: &[f64]| -> Vec<f64> {
        (0..n_y).map(|y| w.iter().zip(counts).map(|(row, n)| n * row[y]).sum::<f64>() / theta as f64).collect()
    };
    let (mode, expectation, stderr) = if enumeration_guard(q.len(), theta).is_ok() {
        let terms: Vec<f64> = compositions(q.len(), theta)
            .into_par_iter()
            .map(|counts| {
                let wgt = multinomial_weight(&counts, q);
                if wgt == 0.0 {
                    return 0.0;
                }
                let c: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
                wgt * classical_divergence(&mix(&c), &q_y)
            })
            .collect();
        (EstimateMode::Exact, terms.iter().sum(), 0.0)
    } else {
        if trials < 2 {
            return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
        }
        let dist = WeightedIndex::new(q).map_err(|e| Error::MalformedInput(format!("input PMF: {e}")))?;
        let values: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, t));
                let mut c = vec![0.0; q.len()];
                for _ in 0..theta {
                    c[dist.sample(&mut rng)] += 1.0;
                }
                classical_divergence(&mix(&c), &q_y)
            })
            .collect();
        let e = McEstimate::from_samples(&values);
        (EstimateMode::Mc, e.mean, e.stderr)
    };
    Ok(ClassicalBound { mode, expectation, stderr, d2_bound: LOG2_E * d2 / theta as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosureRecord {
    /// `D_max(M(φ)‖Q_X⊗Tr_X M(φ))`.
    pub lhs: f64,
    /// `D_max(φ‖Q_X⊗φ_B)`.
    pub rhs: f64,
    pub slack: f64,
    pub seed: u64,
}

/// Dephasing `X` cannot increase `D_max(φ‖Q_X⊗φ_B)`. `φ` mixes `φ_XB` with a
/// random full-rank state on `X⊗B`, so it is not classical on `X`.
pub fn measurement_closure_audit(ens: &CQEnsemble, seed: u64) -> Result<ClosureRecord> {
    if ens.pmf().iter().any(|&q| q <= 0.0) {
        return Err(Error::Precondition("closure audit needs Q with full support".into()));
    }
    let (nx, d) = (ens.len(), ens.d_b());
    let mut rng = rng_from_seed(seed);
    let t = rng.random_range(0.05..0.5);
    let noise = random_density_with(nx * d, nx * d, &mut rng)?;
    let joint = cq_joint(ens)?;
    let phi_m = joint.phi_xb.state().matrix() * c(1.0 - t, 0.0) + noise.matrix() * c(t, 0.0);
    let phi = BipartiteState::new(DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(phi_m), 1e-12)?, vec![nx, d])?;
    let mut dephased = CMatrix::zeros(nx * d, nx * d);
    for x in 0..nx {
        dephased
            .view_mut((x * d, x * d), (d, d))
            .copy_from(&phi.state().matrix().view((x * d, x * d), (d, d)));
    }
    let dephased = BipartiteState::new(
        DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(dephased), 1e-12)?,
        vec![nx, d],
    )?;
    let qx = DensityOperator::diagonal(ens.pmf())?;
    let lhs = d_max(dephased.state(), &qx.kron(&dephased.marginal(1)?))?.as_f64();
    let rhs = d_max(phi.state(), &qx.kron(&phi.marginal(1)?))?.as_f64();
    Ok(ClosureRecord { lhs, rhs, slack: rhs - lhs, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRecord {
    /// `P(φ_XB, φ̂_XB)/2`.
    pub epsilon: f64,
    pub q_distance: f64,
    pub phi_distance: f64,
    /// `P(X ≠ X′)` under the optimal coupling.
    pub mismatch: f64,
    /// `Σ P(x,x′)‖ρ_x − ρ̂_{x′}‖₁`.
    pub coupling_sum: f64,
    /// Monte-Carlo `E‖σ − σ̂‖₁` over coupled codebooks.
    pub mc: McEstimate,
    /// `12ε`.
    pub bound: f64,
    pub slack: f64,
    pub seed: u64,
}

/// Maximal coupling of `Q` and `Q̂` as a row-major `|X|×|X|` matrix.
pub fn optimal_coupling(q: &[f64], q_hat: &[f64]) -> Result<Vec<f64>> {
    if q.len() != q_hat.len() {
        return Err(Error::dims(q.len(), q_hat.len()));
    }
    let n = q.len();
    let common: Vec<f64> = q.iter().zip(q_hat).map(|(a, b)| a.min(*b)).collect();
    let mismatch = 1.0 - common.iter().sum::<f64>();
    let mut p = vec![0.0; n * n];
    for x in 0..n {
        p[x * n + x] = common[x];
    }
    if mismatch > 0.0 {
        for x in 0..n {
            for y in 0..n {
                p[x * n + y] += (q[x] - common[x]) * (q_hat[y] - common[y]) / mismatch;
            }
        }
    }
    Ok(p)
}

/// Checks `E‖σ − σ̂‖₁ ≤ 12ε` for a perturbed ensemble `{Q̂, ρ̂_x}` whose joint
/// state lies at purified distance `2ε` from `φ_XB`.
pub fn coupling_audit(ens: &CQEnsemble, theta: usize, trials: usize, seed: u64) -> Result<CouplingRecord> {
    check_theta(theta)?;
    if trials < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
    }
    let (n, d) = (ens.len(), ens.d_b());
    let mut rng = rng_from_seed(seed);
    let t = rng.random_range(0.0..0.1);
    let s = rng.random_range(0.0..0.1);
    let noise: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = noise.iter().sum();
    let q_hat: Vec<f64> = ens.pmf().iter().zip(&noise).map(|(q, z)| (1.0 - t) * q + t * z / total).collect();
    let norm: f64 = q_hat.iter().sum();
    let q_hat: Vec<f64> = q_hat.iter().map(|v| v / norm).collect();
    let states_hat = ens
        .states()
        .iter()
        .map(|r| {
            let z = random_density_with(d, d, &mut rng)?;
            DensityOperator::new_clamped(
                HermitianOperator::from_matrix_unchecked(r.matrix() * c(1.0 - s, 0.0) + z.matrix() * c(s, 0.0)),
                1e-12,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let hat = CQEnsemble::new(ens.alphabet().to_vec(), q_hat.clone(), states_hat)?;

    let phi = ens.joint_state()?;
    let phi_hat = hat.joint_state()?;
    let epsilon = purified_distance(phi.state(), phi_hat.state())? / 2.0;
    let q_distance: f64 = ens.pmf().iter().zip(&q_hat).map(|(a, b)| (a - b).abs()).sum();
    let phi_distance = trace_distance(phi.state(), phi_hat.state())?;

    let p = optimal_coupling(ens.pmf(), &q_hat)?;
    let mismatch: f64 = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).map(|(x, y)| p[x * n + y]).sum();
    if (mismatch - q_distance / 2.0).abs() > 1e-12 {
        return Err(Error::Numerical(format!("P(X≠X′) = {mismatch} but ½‖Q − Q̂‖₁ = {}", q_distance / 2.0)));
    }
    let mut dist = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            dist[x * n + y] = trace_distance(&ens.states()[x], &hat.states()[y])?;
        }
    }
    let coupling_sum: f64 = p.iter().zip(&dist).map(|(a, b)| a * b).sum();

    let pair = WeightedIndex::new(&p).map_err(|e| Error::Numerical(format!("coupling PMF: {e}")))?;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng_from_seed(derive_seed(seed, k));
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            for _ in 0..theta {
                let j = pair.sample(&mut r);
                a[j / n] += 1.0 / theta as f64;
                b[j % n] += 1.0 / theta as f64;
            }
            let (sa, sb) = (mixture(ens, &a)?, mixture(&hat, &b)?);
            trace_distance(&sa, &sb)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mc = McEstimate::from_samples(&values);
    let bound = 12.0 * epsilon;
    Ok(CouplingRecord {
        epsilon,
        q_distance,
        phi_distance,
        mismatch,
        coupling_sum,
        mc,
        bound,
        slack: bound - coupling_sum,
        seed,
    })
}
