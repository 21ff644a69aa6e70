//! Fully quantum covering.
//!
//! The input `ρ_A` is purified on `R`, the channel acts on `A`, and a Haar
//! unitary followed by a block measurement `{P_m}` of rank `Θ` acts on `R`.
//! Each outcome leaves `B` in a state whose `A`-side preimage has rank at
//! most `Θ`. The expected relative entropy of the resulting `σ_BM` to
//! `ρ_B ⊗ I/M` is bounded by `(log₂e/Θ)·Q̃₂(ρ_BR‖ρ_B⊗I_R)`.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::entropic::{coherent_information, h_min, q2_tilde, relative_entropy, smooth::smooth_h_min};
use crate::error::{Error, Result};
use crate::linalg::{
    binary_f, c, derive_seed, haar_unitary, max_abs_diff, partial_trace_matrix, BipartiteState, CMatrix, CVector, DensityOperator,
    HermitianOperator, C64, LOG2_E,
};
use crate::stats::McEstimate;

/// Tolerance for the structural invariants of an instance.
pub const INSTANCE_TOL: f64 = 1e-10;
/// Tolerance for the per-draw chain identity.
pub const CHAIN_TOL: f64 = 1e-8;
/// Relative eigenvalue cutoff for rank checks.
pub const RANK_CUTOFF: f64 = 1e-9;
/// Weights below this are treated as empty blocks.
const EMPTY_BLOCK: f64 = 1e-14;
/// Redraws allowed per trial after a support failure.
const MAX_RESAMPLES: u32 = 16;

#[derive(Debug, Clone)]
pub struct QCoverInstance {
    rho_a: DensityOperator,
    channel: QuantumChannel,
    rho_br: BipartiteState,
    /// `ω_ij` stored at `i·D + j`; `ω_ji = ω_ij†`.
    omega: Vec<CMatrix>,
    rho_b: DensityOperator,
}

impl QCoverInstance {
    pub fn rho_a(&self) -> &DensityOperator {
        &self.rho_a
    }

    pub fn channel(&self) -> &QuantumChannel {
        &self.channel
    }

    /// Channel output of the purification, ordered `B ⊗ R`.
    pub fn rho_br(&self) -> &BipartiteState {
        &self.rho_br
    }

    pub fn rho_b(&self) -> &DensityOperator {
        &self.rho_b
    }

    /// `ω_ij = Tr_E[W√ρ_A|i⟩⟨j|√ρ_A W†]`.
    pub fn omega(&self, i: usize, j: usize) -> &CMatrix {
        &self.omega[i * self.dim_a() + j]
    }

    pub fn dim_a(&self) -> usize {
        self.rho_a.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.rho_b.dim()
    }
}

/// Builds `ρ_BR` and the blocks `ω_ij` from the Stinespring dilation of `channel`.
pub fn build_instance(rho_a: &DensityOperator, channel: &QuantumChannel) -> Result<QCoverInstance> {
    let d = rho_a.dim();
    if channel.d_in() != d {
        return Err(Error::dims(d, channel.d_in()));
    }
    if !rho_a.is_normalized() {
        return Err(Error::Precondition("covering input must be normalized".into()));
    }
    let (d_b, env) = (channel.d_out(), channel.env_dim());
    let v = channel.stinespring() * rho_a.sqrt()?.matrix();
    let mut omega = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            omega.push(CMatrix::from_fn(d_b, d_b, |b, b2| {
                (0..env).map(|e| v[(b * env + e, i)] * v[(b2 * env + e, j)].conj()).sum::<C64>()
            }));
        }
    }
    let n = d_b * d;
    let br = CMatrix::from_fn(n, n, |r, k| omega[(r % d) * d + k % d][(r / d, k / d)]);
    let rho_br = BipartiteState::new(DensityOperator::new_clamped(HermitianOperator::new(br)?, 1e-12)?, vec![d_b, d])?;
    let mut b = CMatrix::zeros(d_b, d_b);
    for i in 0..d {
        b += &omega[i * d + i];
    }
    let rho_b = DensityOperator::new_clamped(HermitianOperator::new(b)?, 1e-12)?;
    if (rho_br.state().trace() - 1.0).abs() > INSTANCE_TOL {
        return Err(Error::Numerical("ρ_BR is not normalized".into()));
    }
    if rho_b.max_abs_diff(channel.apply(rho_a)?.op()) > INSTANCE_TOL {
        return Err(Error::Numerical("Σ ω_ii differs from N(ρ_A)".into()));
    }
    Ok(QCoverInstance { rho_a: rho_a.clone(), channel: channel.clone(), rho_br, omega, rho_b })
}

/// `Q̃₂(ρ_BR‖ρ_B ⊗ I_R)`, computed both from the blocks
/// `Σ_ij Tr[ω_ij ρ_B^{-1/2} ω_ji ρ_B^{-1/2}]` and from the joint state.
pub fn q2_target(inst: &QCoverInstance) -> Result<f64> {
    let d = inst.dim_a();
    let reference = inst.rho_b.op().kron(&HermitianOperator::identity(d));
    let joint = q2_tilde(inst.rho_br.state(), &reference)?;
    let inv = inst.rho_b.power(-0.5)?;
    let inv = inv.matrix();
    let mut blocks = 0.0;
    for i in 0..d {
        for j in 0..d {
            let a = inst.omega(i, j) * inv;
            let b = inst.omega(j, i) * inv;
            blocks += (a * b).trace().re;
        }
    }
    if (blocks - joint).abs() > 1e-9 * joint.abs().max(1.0) {
        return Err(Error::Numerical(format!("Q̃₂ routes disagree: {blocks} vs {joint}")));
    }
    Ok(joint)
}

/// `(log₂e/Θ)·Q̃₂(ρ_BR‖ρ_B⊗I_R)`.
pub fn covering_bound(q2: f64, theta: usize) -> f64 {
    LOG2_E * q2 / theta as f64
}

/// A unitary on `R` followed by the computational-basis block measurement
/// with `M = D/Θ` projectors of rank `Θ`.
#[derive(Debug, Clone)]
pub struct BlockCode {
    u: CMatrix,
    theta: usize,
    m_count: usize,
}

impl BlockCode {
    pub fn new(u: CMatrix, theta: usize) -> Result<BlockCode> {
        let d = u.nrows();
        if u.ncols() != d || d == 0 {
            return Err(Error::MalformedInput("block code needs a square unitary".into()));
        }
        if theta == 0 || d % theta != 0 {
            return Err(Error::Precondition(format!("Θ = {theta} must divide D = {d}")));
        }
        let dev = max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(d, d));
        if dev > 1e-10 {
            return Err(Error::Precondition(format!("U is not unitary (deviation {dev:e})")));
        }
        Ok(BlockCode { u, theta, m_count: d / theta })
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn m_count(&self) -> usize {
        self.m_count
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Basis indices covered by `P_m`.
    pub fn block(&self, m: usize) -> Range<usize> {
        m * self.theta..(m + 1) * self.theta
    }

    pub fn projector(&self, m: usize) -> CMatrix {
        let d = self.dim();
        let r = self.block(m);
        CMatrix::from_fn(d, d, |i, j| if i == j && r.contains(&i) { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    /// `U† P_m U`.
    pub fn pulled_back_projector(&self, m: usize) -> CMatrix {
        let rows = self.u.rows(m * self.theta, self.theta);
        rows.adjoint() * rows
    }
}

pub fn sample_block_code(d: usize, theta: usize, seed: u64) -> Result<BlockCode> {
    if theta == 0 || d % theta != 0 {
        return Err(Error::Precondition(format!("Θ = {theta} must divide D = {d}")));
    }
    BlockCode::new(haar_unitary(d, seed), theta)
}

#[derive(Debug, Clone)]
pub struct CoverOutcome {
    /// Classical-quantum state on `B ⊗ M`.
    pub sigma_bm: BipartiteState,
    pub block_weights: Vec<f64>,
    /// Normalized block states; `None` for blocks of zero weight.
    pub block_states: Vec<Option<DensityOperator>>,
    /// Normalized input states on `A` conditioned on `m`; `σ̄_B^m = N(σ̄_A^m)`.
    pub block_inputs: Vec<Option<DensityOperator>>,
    /// `D(σ̄_B^m‖ρ_B)`, zero for empty blocks.
    pub block_divergences: Vec<f64>,
    /// `D(σ_BM‖ρ_B ⊗ I/M)`.
    pub d_value: f64,
    /// `Σ_m w_m D(σ̄_B^m‖ρ_B) + D(w‖uniform)`.
    pub chain_value: f64,
    pub theta: usize,
}

impl CoverOutcome {
    pub fn chain_gap(&self) -> f64 {
        (self.d_value - self.chain_value).abs()
    }
}

fn assemble_sigma_bm(blocks: &[CMatrix], d_b: usize) -> Result<BipartiteState> {
    let m_count = blocks.len();
    let n = d_b * m_count;
    let mut s = CMatrix::zeros(n, n);
    for (m, blk) in blocks.iter().enumerate() {
        for b in 0..d_b {
            for b2 in 0..d_b {
                s[(b * m_count + m, b2 * m_count + m)] = blk[(b, b2)];
            }
        }
    }
    let st = DensityOperator::new_clamped(HermitianOperator::new(s)?, 1e-9)?;
    BipartiteState::new(st, vec![d_b, m_count])
}

/// Sub-normalized blocks `σ_B^m = Σ_ij ω_ij ⟨j|U†P_mU|i⟩`.
pub fn sigma_blocks(inst: &QCoverInstance, code: &BlockCode) -> Result<Vec<CMatrix>> {
    let d = inst.dim_a();
    if code.dim() != d {
        return Err(Error::dims(d, code.dim()));
    }
    let d_b = inst.dim_b();
    (0..code.m_count())
        .map(|m| {
            let g = code.pulled_back_projector(m);
            let mut s = CMatrix::zeros(d_b, d_b);
            for i in 0..d {
                for j in 0..d {
                    s += inst.omega(i, j) * g[(j, i)];
                }
            }
            Ok((&s + s.adjoint()) * c(0.5, 0.0))
        })
        .collect()
}

/// Runs the construction for one code and evaluates `D(σ_BM‖ρ_BM)` and its
/// decomposition over blocks.
pub fn simulate(inst: &QCoverInstance, code: &BlockCode) -> Result<CoverOutcome> {
    let blocks = sigma_blocks(inst, code)?;
    let m_count = code.m_count();
    let sigma_bm = assemble_sigma_bm(&blocks, inst.dim_b())?;
    let rho_bm = inst.rho_b.op().kron(&HermitianOperator::identity(m_count).scale(1.0 / m_count as f64));
    let d_value = relative_entropy(sigma_bm.state(), &rho_bm)?.require("covering divergence")?;

    let mut block_weights = Vec::with_capacity(m_count);
    let mut block_states = Vec::with_capacity(m_count);
    let mut block_inputs = Vec::with_capacity(m_count);
    let mut block_divergences = Vec::with_capacity(m_count);
    let x = inst.rho_a.sqrt()?.matrix() * code.u().transpose();
    let mut chain = 0.0;
    for (m, blk) in blocks.iter().enumerate() {
        let w = blk.trace().re;
        block_weights.push(w);
        if w > EMPTY_BLOCK {
            let st = DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(blk / c(w, 0.0)), 1e-9)?;
            let dm = relative_entropy(&st, &inst.rho_b)?.require("block divergence")?;
            chain += w * dm + w * (w * m_count as f64).log2();
            let y = &x * code.projector(m);
            let a = &y * y.adjoint() / c(w, 0.0);
            let a = DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked((&a + a.adjoint()) * c(0.5, 0.0)), 1e-9)?;
            block_states.push(Some(st));
            block_inputs.push(Some(a));
            block_divergences.push(dm);
        } else {
            block_states.push(None);
            block_inputs.push(None);
            block_divergences.push(0.0);
        }
    }
    Ok(CoverOutcome {
        sigma_bm,
        block_weights,
        block_states,
        block_inputs,
        block_divergences,
        d_value,
        chain_value: chain,
        theta: code.theta(),
    })
}

/// `σ_BM` from the reference picture, `Σ_m Tr_R[(I⊗P_mU)ρ_BR(I⊗U†P_m)] ⊗ |m⟩⟨m|`.
pub fn sigma_bm_via_reference(inst: &QCoverInstance, code: &BlockCode) -> Result<HermitianOperator> {
    let d = inst.dim_a();
    if code.dim() != d {
        return Err(Error::dims(d, code.dim()));
    }
    let d_b = inst.dim_b();
    let rotated = inst.rho_br.state().conjugate_by(&CMatrix::identity(d_b, d_b).kronecker(code.u()));
    let blocks = (0..code.m_count())
        .map(|m| {
            let p = CMatrix::identity(d_b, d_b).kronecker(&code.projector(m));
            partial_trace_matrix(&(&p * rotated.matrix() * &p), &[d_b, d], &[0])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_sigma_bm(&blocks, d_b)?.state().op().clone())
}

/// `σ_BM` with the unitary moved to the input side: `(I⊗U)(√ρ_A⊗I)|Γ⟩ =
/// (√ρ_A U^T ⊗ I)|Γ⟩`, channel on `A`, then the block measurement on `R`.
pub fn sigma_bm_via_input(inst: &QCoverInstance, code: &BlockCode) -> Result<HermitianOperator> {
    let d = inst.dim_a();
    if code.dim() != d {
        return Err(Error::dims(d, code.dim()));
    }
    let d_b = inst.dim_b();
    let x = inst.rho_a.sqrt()?.matrix() * code.u().transpose();
    let psi = CVector::from_fn(d * d, |r, _| x[(r / d, r % d)]);
    let pure = DensityOperator::pure(&psi)?;
    let ar = BipartiteState::new(pure, vec![d, d])?;
    let br = inst.channel.apply_partial(&ar, 0)?;
    let blocks = (0..code.m_count())
        .map(|m| {
            let p = CMatrix::identity(d_b, d_b).kronecker(&code.projector(m));
            partial_trace_matrix(&(&p * br.state().matrix() * &p), &[d_b, d], &[0])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_sigma_bm(&blocks, d_b)?.state().op().clone())
}

#[derive(Debug, Clone)]
pub struct ExtractedBlock {
    /// `σ̄_B^m`.
    pub state: DensityOperator,
    /// `σ̄_A^m`, the input that produces `state`.
    pub input: DensityOperator,
    pub index: usize,
    pub divergence: f64,
    /// Rank of `input`; the output rank can exceed `Θ` for non-unitary channels.
    pub rank: usize,
}

/// The block with the smallest `D(σ̄_B^m‖ρ_B)`. Its input on `A` has rank at
/// most `Θ` and its divergence is at most `d_value`.
pub fn extract_block(outcome: &CoverOutcome) -> Result<ExtractedBlock> {
    let (index, state, divergence) = outcome
        .block_states
        .iter()
        .zip(&outcome.block_divergences)
        .enumerate()
        .filter_map(|(m, (s, dv))| s.as_ref().map(|s| (m, s, *dv)))
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or_else(|| Error::Numerical("all blocks are empty".into()))?;
    let input = outcome.block_inputs[index]
        .as_ref()
        .ok_or_else(|| Error::Numerical("missing block input".into()))?;
    let rank = input.rank_relative(RANK_CUTOFF);
    if rank > outcome.theta {
        return Err(Error::Numerical(format!("block input rank {rank} exceeds Θ = {}", outcome.theta)));
    }
    if divergence > outcome.d_value + 1e-9 {
        return Err(Error::Numerical(format!(
            "block divergence {divergence} exceeds the total {}",
            outcome.d_value
        )));
    }
    Ok(ExtractedBlock { state: state.clone(), input: input.clone(), index, divergence, rank })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverTrial {
    pub trial: u64,
    /// Seed of the accepted Haar draw.
    pub seed: u64,
    pub d_value: f64,
    pub chain_gap: f64,
    /// Draws discarded for support failure before this one.
    pub resamples: u32,
}

/// One seeded draw per trial, evaluated in parallel and returned in trial order.
pub fn mc_trials(inst: &QCoverInstance, theta: usize, trials: usize, master_seed: u64) -> Result<Vec<CoverTrial>> {
    let d = inst.dim_a();
    if theta == 0 || d % theta != 0 {
        return Err(Error::Precondition(format!("Θ = {theta} must divide D = {d}")));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let base = derive_seed(master_seed, t);
            let mut resamples = 0;
            loop {
                let seed = if resamples == 0 { base } else { derive_seed(base, resamples as u64) };
                let code = sample_block_code(d, theta, seed)?;
                match simulate(inst, &code) {
                    Ok(out) => {
                        return Ok(CoverTrial {
                            trial: t,
                            seed,
                            d_value: out.d_value,
                            chain_gap: out.chain_gap(),
                            resamples,
                        })
                    }
                    Err(Error::Support(_)) if resamples < MAX_RESAMPLES => resamples += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect()
}

pub fn mc_expectation(inst: &QCoverInstance, theta: usize, trials: usize, master_seed: u64) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
    }
    let rows = mc_trials(inst, theta, trials, master_seed)?;
    let values: Vec<f64> = rows.iter().map(|r| r.d_value).collect();
    Ok(McEstimate::from_samples(&values))
}

/// `α = (DΘ − Θ²)/(D(D² − 1))`.
pub fn haar_alpha(d: usize, theta: usize) -> f64 {
    let (d, t) = (d as f64, theta as f64);
    (d * t - t * t) / (d * (d * d - 1.0))
}

/// `β = (DΘ² − Θ)/(D(D² − 1))`.
pub fn haar_beta(d: usize, theta: usize) -> f64 {
    let (d, t) = (d as f64, theta as f64);
    (d * t * t - t) / (d * (d * d - 1.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HaarMoments {
    /// Estimate of `⟨0|E[U†PU]|0⟩ = Θ/D`.
    pub first: McEstimate,
    /// Estimate of `α` from `E|⟨k|U†PU|0⟩|²`, `k ≠ 0`.
    pub alpha: McEstimate,
    /// Estimate of `β` from `E|⟨0|U†PU|0⟩|² − α`.
    pub beta: McEstimate,
}

/// Empirical moments of `G = U†P_1U`: `E[G|0⟩⟨0|G] = αI + β|0⟩⟨0|`.
pub fn haar_moments(d: usize, theta: usize, draws: usize, master_seed: u64) -> Result<HaarMoments> {
    if d < 2 || draws < 2 {
        return Err(Error::Precondition("moment estimation needs D ≥ 2 and two draws".into()));
    }
    if theta == 0 || d % theta != 0 {
        return Err(Error::Precondition(format!("Θ = {theta} must divide D = {d}")));
    }
    let samples: Vec<(f64, f64, f64)> = (0..draws as u64)
        .into_par_iter()
        .map(|t| {
            let code = BlockCode::new(haar_unitary(d, derive_seed(master_seed, t)), theta).expect("Θ | D checked");
            let g = code.pulled_back_projector(0);
            let off = (1..d).map(|k| g[(k, 0)].norm_sqr()).sum::<f64>() / (d - 1) as f64;
            (g[(0, 0)].re, off, g[(0, 0)].norm_sqr() - off)
        })
        .collect();
    let col = |f: fn(&(f64, f64, f64)) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    Ok(HaarMoments {
        first: McEstimate::from_samples(&col(|s| s.0)),
        alpha: McEstimate::from_samples(&col(|s| s.1)),
        beta: McEstimate::from_samples(&col(|s| s.2)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Terms {
    pub epsilon: f64,
    pub eta: f64,
    /// Upper bound on `−H_min^ε(R|B)` from a certified smoothing candidate.
    pub neg_hmin_smooth: f64,
    /// `[−H_min^ε(R|B) − log₂η]^+` evaluated with the bound above.
    pub log_theta_bound: f64,
    /// `log₂e·η + 6ε log₂|B| + f(4ε) + f(2ε)`.
    pub delta_bound: f64,
    /// `[−H_min(R|B)]^+` at the given input state.
    pub converse_log_theta: f64,
}

/// Achievability and converse terms of the one-shot covering theorem. `ε = 0`
/// gives the unsmoothed limit.
pub fn theorem1_terms(inst: &QCoverInstance, epsilon: f64, eta: f64) -> Result<Theorem1Terms> {
    if !(0.0..0.125).contains(&epsilon) {
        return Err(Error::Precondition(format!("ε = {epsilon} outside [0, 1/8)")));
    }
    if !(eta > 0.0 && eta < 0.125) {
        return Err(Error::Precondition(format!("η = {eta} outside (0, 1/8)")));
    }
    let rho_rb = inst.rho_br.swapped()?;
    let exact = h_min(&rho_rb)?;
    let smoothed = if epsilon == 0.0 { exact } else { smooth_h_min(&rho_rb, epsilon)?.bound_value.max(exact) };
    let neg = -smoothed;
    let d_b = inst.dim_b() as f64;
    Ok(Theorem1Terms {
        epsilon,
        eta,
        neg_hmin_smooth: neg,
        log_theta_bound: (neg - eta.log2()).max(0.0),
        delta_bound: LOG2_E * eta + 6.0 * epsilon * d_b.log2() + binary_f(4.0 * epsilon) + binary_f(2.0 * epsilon),
        converse_log_theta: (-exact).max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendPoint {
    pub n: usize,
    pub theta_n: f64,
    pub q2: f64,
    /// `(1/n)(log₂e/Θ_n)·Q̃₂(ρ_BR^{⊗n}‖ρ_B^{⊗n}⊗I)`.
    pub per_copy_bound: f64,
}

/// Per-copy unsmoothed bound on `n` copies with `Θ_n = ⌈2^{n r}⌉`,
/// `r = I(R⟩B) + rate_margin`.
pub fn asymptotic_trend(
    rho_a: &DensityOperator,
    channel: &QuantumChannel,
    n_max: usize,
    rate_margin: f64,
) -> Result<Vec<TrendPoint>> {
    let single = build_instance(rho_a, channel)?;
    let rate = coherent_information(&single.rho_br.swapped()?)? + rate_margin;
    let mut out = Vec::with_capacity(n_max);
    let mut input = rho_a.clone();
    for n in 1..=n_max {
        if n > 1 {
            input = input.kron(rho_a);
        }
        let inst = build_instance(&input, &channel.tensor_power(n)?)?;
        let q2 = q2_target(&inst)?;
        let theta_n = (n as f64 * rate).exp2().ceil();
        out.push(TrendPoint { n, theta_n, q2, per_copy_bound: LOG2_E * q2 / theta_n / n as f64 });
    }
    Ok(out)
}
