//! One-shot decoupling with a relative-entropy criterion.
//!
//! A Haar unitary on `A` followed by a channel `T: A → B` turns `ρ_AE` into
//! `σ_BE`. On average `σ_BE` is `τ_B ⊗ ρ_E` with `τ_B = T(I/D)`, and
//! `E D(σ_BE‖τ_B⊗ρ_E) ≤ log₂e·Q̃₂(τ_AB‖I⊗τ_B)·Q̃₂(ρ_AE‖I⊗ρ_E)` where `τ_AB` is
//! the Choi state of `T`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::entropic::{h_min, relative_entropy, smooth::smooth_h_min};
use crate::error::{Error, Result};
use crate::linalg::{
    binary_f, derive_seed, haar_unitary, partial_trace_op, trace_norm, BipartiteState, CMatrix, DensityOperator, HermitianOperator,
    LOG2_E,
};
use crate::stats::McEstimate;

/// Tolerance for the structural invariants of an instance.
pub const INSTANCE_TOL: f64 = 1e-10;
/// Tolerance for `τ̃_B = √τ_B` and `ρ̃_E = √ρ_E`.
pub const TILDE_TOL: f64 = 1e-9;
/// Largest fraction of excluded trials before an estimate is flagged.
pub const MAX_EXCLUSION_RATE: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct DecoupleInstance {
    rho_ae: BipartiteState,
    channel: QuantumChannel,
    tau_ab: BipartiteState,
    tau_b: DensityOperator,
    rho_e: DensityOperator,
    rho_be_target: BipartiteState,
}

impl DecoupleInstance {
    pub fn new(rho_ae: BipartiteState, channel: QuantumChannel) -> Result<Self> {
        if rho_ae.dims().len() != 2 {
            return Err(Error::Precondition("ρ_AE must have exactly two subsystems".into()));
        }
        if rho_ae.dim(0) != channel.d_in() {
            return Err(Error::dims(channel.d_in(), rho_ae.dim(0)));
        }
        if !rho_ae.state().is_normalized() {
            return Err(Error::Precondition("ρ_AE must be normalized".into()));
        }
        let d = channel.d_in();
        let tau_ab = channel.choi();
        let tau_b = channel.apply(&DensityOperator::maximally_mixed(d))?;
        if tau_ab.marginal(1)?.max_abs_diff(&tau_b) > INSTANCE_TOL {
            return Err(Error::Numerical("B-marginal of the Choi state differs from T(I/D)".into()));
        }
        let rho_e = rho_ae.marginal(1)?;
        let rho_be_target = BipartiteState::product(&tau_b, &rho_e);
        Ok(DecoupleInstance { rho_ae, channel, tau_ab, tau_b, rho_e, rho_be_target })
    }

    pub fn rho_ae(&self) -> &BipartiteState {
        &self.rho_ae
    }

    pub fn channel(&self) -> &QuantumChannel {
        &self.channel
    }

    /// Choi state `J(T)` ordered `A ⊗ B`.
    pub fn tau_ab(&self) -> &BipartiteState {
        &self.tau_ab
    }

    pub fn tau_b(&self) -> &DensityOperator {
        &self.tau_b
    }

    pub fn rho_e(&self) -> &DensityOperator {
        &self.rho_e
    }

    /// `τ_B ⊗ ρ_E`.
    pub fn rho_be_target(&self) -> &BipartiteState {
        &self.rho_be_target
    }

    pub fn dim_a(&self) -> usize {
        self.rho_ae.dim(0)
    }

    pub fn dim_b(&self) -> usize {
        self.channel.d_out()
    }

    pub fn dim_e(&self) -> usize {
        self.rho_ae.dim(1)
    }
}

#[derive(Debug, Clone)]
pub struct DecoupleOutcome {
    pub sigma_be: BipartiteState,
    /// `D(σ_BE‖τ_B⊗ρ_E)`, `+∞` when the support condition fails.
    pub d_value: f64,
    pub support_ok: bool,
}

/// `σ_BE = (T ⊗ id_E)(U ⊗ I)ρ_AE(U† ⊗ I)`.
pub fn decouple_trial(inst: &DecoupleInstance, u: &CMatrix) -> Result<DecoupleOutcome> {
    let d = inst.dim_a();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::dims(d, u.nrows()));
    }
    let d_e = inst.dim_e();
    let lifted = u.kronecker(&CMatrix::identity(d_e, d_e));
    let rotated = DensityOperator::new_clamped(inst.rho_ae.state().conjugate_by(&lifted), 1e-12)?;
    let rotated = BipartiteState::new(rotated, vec![d, d_e])?;
    let sigma_be = inst.channel.apply_partial(&rotated, 0)?;
    let dv = relative_entropy(sigma_be.state(), inst.rho_be_target.state())?;
    Ok(DecoupleOutcome { sigma_be, d_value: dv.as_f64(), support_ok: dv.support_ok() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBound {
    /// `Q̃₂(τ_AB‖I_A⊗τ_B) = Tr[τ̃_AB²]`.
    pub q2_tau: f64,
    /// `Q̃₂(ρ_AE‖I_A⊗ρ_E) = Tr[ρ̃_AE²]`.
    pub q2_rho: f64,
    /// `log₂e·q2_tau·q2_rho`.
    pub bound: f64,
}

/// `X ↦ (I ⊗ M^{−1/4}) X (I ⊗ M^{−1/4})` on `A ⊗ K`, followed by `Tr[·²]` and
/// a check that the `K`-marginal equals `√M`.
fn tilde_q2(x: &BipartiteState, m: &DensityOperator, which: &str) -> Result<f64> {
    let d_a = x.dim(0);
    let k = m.power(-0.25).map_err(|e| Error::Support(format!("{which}: {e}")))?;
    let lift = CMatrix::identity(d_a, d_a).kronecker(k.matrix());
    let tilde = x.state().conjugate_by(&lift);
    let marginal = partial_trace_op(&tilde, x.dims(), &[1])?;
    let root = m.sqrt()?;
    if marginal.max_abs_diff(&root) > TILDE_TOL {
        return Err(Error::Support(format!(
            "{which}: reduced tilde operator differs from the square root by {:e}",
            marginal.max_abs_diff(&root)
        )));
    }
    Ok(tilde.trace_product(&tilde))
}

pub fn q2_product_bound(inst: &DecoupleInstance) -> Result<ProductBound> {
    let q2_tau = tilde_q2(&inst.tau_ab, &inst.tau_b, "Q̃₂(τ_AB‖I⊗τ_B)")?;
    let q2_rho = tilde_q2(&inst.rho_ae, &inst.rho_e, "Q̃₂(ρ_AE‖I⊗ρ_E)")?;
    Ok(ProductBound { q2_tau, q2_rho, bound: LOG2_E * q2_tau * q2_rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem5Terms {
    pub epsilon: f64,
    /// Lower bound on `H_min^ε(A|B)_τ`.
    pub hmin_ab: f64,
    /// Lower bound on `H_min^ε(A|E)_ρ`.
    pub hmin_ae: f64,
    /// `log₂e·2^{−H_min^ε(A|B) − H_min^ε(A|E)}`.
    pub main_term: f64,
    /// `12ε log₂(|B||E|) + f(8ε) + f(4ε)`.
    pub additive: f64,
    pub total: f64,
}

/// Right-hand side of the one-shot decoupling theorem with certified lower
/// bounds in place of the smooth min-entropies. `ε = 0` uses exact values.
pub fn theorem5_terms(inst: &DecoupleInstance, epsilon: f64) -> Result<Theorem5Terms> {
    if !(0.0..1.0 / 16.0).contains(&epsilon) {
        return Err(Error::Precondition(format!("ε = {epsilon} outside [0, 1/16)")));
    }
    let lower = |st: &BipartiteState| -> Result<f64> {
        let exact = h_min(st)?;
        if epsilon == 0.0 {
            Ok(exact)
        } else {
            Ok(smooth_h_min(st, epsilon)?.bound_value.max(exact))
        }
    };
    let hmin_ab = lower(&inst.tau_ab)?;
    let hmin_ae = lower(&inst.rho_ae)?;
    let main_term = LOG2_E * (-hmin_ab - hmin_ae).exp2();
    let additive = if epsilon == 0.0 {
        0.0
    } else {
        12.0 * epsilon * ((inst.dim_b() * inst.dim_e()) as f64).log2() + binary_f(8.0 * epsilon) + binary_f(4.0 * epsilon)
    };
    Ok(Theorem5Terms { epsilon, hmin_ab, hmin_ae, main_term, additive, total: main_term + additive })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoupleTrial {
    pub trial: u64,
    pub seed: u64,
    pub d_value: f64,
    pub excluded: bool,
    /// `‖σ_BE − ρ_BE‖₁² / (2 ln 2)`.
    pub pinsker_lhs: f64,
}

impl DecoupleTrial {
    pub fn pinsker_holds(&self) -> bool {
        self.excluded || self.pinsker_lhs <= self.d_value + 1e-12
    }
}

/// One seeded Haar draw per trial, evaluated in parallel and returned in trial order.
pub fn mc_trials(inst: &DecoupleInstance, trials: usize, master_seed: u64) -> Result<Vec<DecoupleTrial>> {
    let d = inst.dim_a();
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master_seed, t);
            let out = decouple_trial(inst, &haar_unitary(d, seed))?;
            let diff = out.sigma_be.state().op() - inst.rho_be_target.state().op();
            let tn = trace_norm(&diff);
            Ok(DecoupleTrial {
                trial: t,
                seed,
                d_value: out.d_value,
                excluded: !out.support_ok,
                pinsker_lhs: tn * tn / (2.0 * std::f64::consts::LN_2),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoupleEstimate {
    /// Over trials with finite `d_value`.
    pub estimate: McEstimate,
    pub excluded: usize,
    pub exclusion_rate: f64,
    /// Set when more than 1% of trials were excluded.
    pub flagged: bool,
    pub pinsker_violations: usize,
    pub bound: f64,
    /// `mean ≤ bound + 3·stderr`.
    pub within_bound: bool,
}

pub fn mc_expectation(inst: &DecoupleInstance, trials: usize, master_seed: u64) -> Result<DecoupleEstimate> {
    if trials < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
    }
    let rows = mc_trials(inst, trials, master_seed)?;
    let values: Vec<f64> = rows.iter().filter(|r| !r.excluded).map(|r| r.d_value).collect();
    if values.is_empty() {
        return Err(Error::Numerical("every trial failed the support condition".into()));
    }
    let excluded = rows.len() - values.len();
    let exclusion_rate = excluded as f64 / rows.len() as f64;
    let estimate = McEstimate::from_samples(&values);
    let bound = q2_product_bound(inst)?.bound;
    let k_se = if estimate.stderr.is_finite() { 3.0 * estimate.stderr } else { 0.0 };
    Ok(DecoupleEstimate {
        estimate,
        excluded,
        exclusion_rate,
        flagged: exclusion_rate > MAX_EXCLUSION_RATE,
        pinsker_violations: rows.iter().filter(|r| !r.pinsker_holds()).count(),
        bound,
        within_bound: estimate.mean <= bound + k_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputMoment {
    /// Largest `|E[σ_BE] − ρ_BE|` over real and imaginary parts of all entries.
    pub max_abs_dev: f64,
    /// Largest deviation in units of its standard error.
    pub max_z: f64,
}

/// Entrywise comparison of the empirical mean of `σ_BE` with `τ_B ⊗ ρ_E`.
pub fn mean_output_check(inst: &DecoupleInstance, trials: usize, master_seed: u64) -> Result<OutputMoment> {
    if trials < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two trials".into()));
    }
    let d = inst.dim_a();
    let outs = (0..trials as u64)
        .into_par_iter()
        .map(|t| Ok(decouple_trial(inst, &haar_unitary(d, derive_seed(master_seed, t)))?.sigma_be.state().matrix().clone()))
        .collect::<Result<Vec<CMatrix>>>()?;
    let target = inst.rho_be_target.state().matrix();
    let n = target.nrows();
    let (mut max_abs_dev, mut max_z) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            for part in [|z: nalgebra::Complex<f64>| z.re, |z: nalgebra::Complex<f64>| z.im] {
                let vals: Vec<f64> = outs.iter().map(|m| part(m[(i, j)])).collect();
                let e = McEstimate::from_samples(&vals);
                let dev = (e.mean - part(target[(i, j)])).abs();
                max_abs_dev = max_abs_dev.max(dev);
                let z = if e.stderr > 0.0 {
                    dev / e.stderr
                } else if dev > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                };
                max_z = max_z.max(z);
            }
        }
    }
    Ok(OutputMoment { max_abs_dev, max_z })
}

/// `ρ_A ⊗ ρ_E` as an `A ⊗ E` state.
pub fn product_state(rho_a: &DensityOperator, rho_e: &DensityOperator) -> BipartiteState {
    BipartiteState::product(rho_a, rho_e)
}

/// Checks that `H` is a valid `A ⊗ E` state of the given dimensions.
pub fn bipartite(h: HermitianOperator, d_a: usize, d_e: usize) -> Result<BipartiteState> {
    BipartiteState::new(DensityOperator::new(h)?, vec![d_a, d_e])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, LOG2_E};

    fn pure_product() -> DecoupleInstance {
        let a = DensityOperator::basis_state(2, 0).unwrap();
        let e = DensityOperator::basis_state(2, 1).unwrap();
        DecoupleInstance::new(product_state(&a, &e), QuantumChannel::identity(2)).unwrap()
    }

    #[test]
    fn depolarizing_output_is_target() {
        let rho = random_density(6, 6, 3).unwrap();
        let inst = DecoupleInstance::new(bipartite(rho.into_op(), 3, 2).unwrap(), QuantumChannel::completely_depolarizing(3, 2)).unwrap();
        for seed in 0..5 {
            let out = decouple_trial(&inst, &haar_unitary(3, seed)).unwrap();
            assert!(out.sigma_be.state().max_abs_diff(inst.rho_be_target().state()) < 1e-12);
            assert!(out.d_value.abs() < 1e-10);
        }
        let pb = q2_product_bound(&inst).unwrap();
        assert!((pb.q2_tau - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn identity_channel_product_input() {
        let a = random_density(2, 2, 8).unwrap();
        let e = random_density(3, 3, 9).unwrap();
        let inst = DecoupleInstance::new(product_state(&a, &e), QuantumChannel::identity(2)).unwrap();
        let want = 1.0 - crate::entropic::entropy(&a);
        for seed in 0..5 {
            let out = decouple_trial(&inst, &haar_unitary(2, seed)).unwrap();
            assert!((out.d_value - want).abs() < 1e-10);
        }
    }

    #[test]
    fn product_bound_closed_forms() {
        let inst = pure_product();
        let pb = q2_product_bound(&inst).unwrap();
        assert!((pb.q2_tau - 2.0).abs() < 1e-10);
        assert!((pb.q2_rho - 1.0).abs() < 1e-10);
        let est = mc_expectation(&inst, 20, 1).unwrap();
        assert!((est.estimate.mean - 1.0).abs() < 1e-10 && est.within_bound && est.pinsker_violations == 0);
    }

    #[test]
    fn theorem5_plug_ins() {
        let t = theorem5_terms(&pure_product(), 0.0).unwrap();
        assert!((t.hmin_ab + 1.0).abs() < 1e-6 && t.hmin_ae.abs() < 1e-6);
        assert!((t.total - 2.0 * LOG2_E).abs() < 1e-5);
        let s = theorem5_terms(&pure_product(), 1.0 / 32.0).unwrap();
        let want = 12.0 / 32.0 * 2.0 + binary_f(0.25) + binary_f(0.125);
        assert!((s.additive - want).abs() < 1e-12);
        assert!(theorem5_terms(&pure_product(), 0.07).is_err());
    }

    #[test]
    fn random_instance_within_bound() {
        let rho = random_density(8, 3, 21).unwrap();
        let inst = DecoupleInstance::new(bipartite(rho.into_op(), 4, 2).unwrap(), QuantumChannel::random(4, 2, 2, 22).unwrap()).unwrap();
        let est = mc_expectation(&inst, 200, 5).unwrap();
        assert!(est.within_bound && !est.flagged && est.pinsker_violations == 0);
        assert!(est.estimate.mean <= theorem5_terms(&inst, 0.0).unwrap().total);
    }
}
