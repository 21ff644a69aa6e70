//! Certified one-sided smoothing of `D_max` and `H_min`.
//!
//! Every candidate returned lies in the sub-normalized purified-distance ball
//! around the target, so its exact (unsmoothed) value is a valid bound on the
//! smooth quantity: an upper bound for `D_max^ε`, a lower bound for `H_min^ε`.
//!
//! Candidates for `D_max^ε(σ‖ρ)`:
//! * clipping: with `X = ρ^{-1/2}σρ^{-1/2}`, `σ̂(c) = ρ^{1/2} min(X, c) ρ^{1/2} ≤ cρ`,
//!   mixed toward `cρ` with a weight chosen by golden-section search to
//!   maximize fidelity; the threshold `c` is bisected to the smallest value
//!   whose best candidate still lies in the ball;
//! * eigenvalue truncation of `σ` (drop the smallest eigenvalues).

use super::hmin::min_entropy_sdp;
use super::{d_max, fidelity_star, purified_distance};
use crate::error::{Error, Result};
use crate::linalg::{BipartiteState, DensityOperator, HermitianOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothKind {
    DMaxEps,
    HMinEps { d_a: usize, d_b: usize },
}

#[derive(Debug, Clone)]
pub struct SmoothingCertificate {
    /// Feasible point of the ball around the target.
    pub candidate: DensityOperator,
    /// Purified distance from the candidate to the target.
    pub epsilon_used: f64,
    /// Upper bound on `D_max^ε` or lower bound on `H_min^ε`; `+∞` if no
    /// candidate with finite `D_max` exists.
    pub bound_value: f64,
}

/// Dispatches on `kind`. `reference` is required for `DMaxEps` and ignored for `HMinEps`.
pub fn smooth_bound(
    kind: SmoothKind,
    target: &DensityOperator,
    reference: Option<&HermitianOperator>,
    epsilon: f64,
) -> Result<SmoothingCertificate> {
    match kind {
        SmoothKind::DMaxEps => {
            let r = reference.ok_or_else(|| Error::Precondition("D_max smoothing needs a reference operator".into()))?;
            smooth_d_max(target, r, epsilon)
        }
        SmoothKind::HMinEps { d_a, d_b } => {
            let st = BipartiteState::new(target.clone(), vec![d_a, d_b])?;
            smooth_h_min(&st, epsilon)
        }
    }
}

fn check_epsilon(epsilon: f64, target: &DensityOperator) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() || epsilon > target.trace().sqrt() + 1e-12 {
        return Err(Error::Precondition(format!(
            "smoothing parameter {epsilon} outside [0, √Tr = {}]",
            target.trace().sqrt()
        )));
    }
    Ok(())
}

struct Clipper<'a> {
    target: &'a DensityOperator,
    reference: HermitianOperator,
    r_half: HermitianOperator,
    x_vectors: crate::linalg::CMatrix,
    x_values: Vec<f64>,
}

impl<'a> Clipper<'a> {
    fn new(target: &'a DensityOperator, reference: &HermitianOperator) -> Result<Self> {
        let r_half = reference.sqrt()?;
        let r_inv = reference.power(-0.5)?;
        let proj = reference.support_projector();
        let projected = target.op().sandwich(&proj);
        let x = projected.sandwich(&r_inv);
        let e = x.eigen();
        Ok(Clipper {
            target,
            reference: HermitianOperator::from_matrix_unchecked(r_half.matrix() * r_half.matrix()),
            r_half,
            x_vectors: e.vectors.clone(),
            x_values: e.values.iter().map(|v| v.max(0.0)).collect(),
        })
    }

    fn c_max(&self) -> f64 {
        self.x_values.iter().cloned().fold(0.0, f64::max)
    }

    /// `ρ^{1/2} min(X, c) ρ^{1/2}`.
    fn clipped(&self, cap: f64) -> HermitianOperator {
        let n = self.x_values.len();
        let mut scaled = self.x_vectors.clone();
        for k in 0..n {
            let s = self.x_values[k].min(cap);
            for r in 0..n {
                scaled[(r, k)] *= crate::linalg::c(s, 0.0);
            }
        }
        let m = &scaled * self.x_vectors.adjoint();
        HermitianOperator::from_matrix_unchecked(self.r_half.matrix() * m * self.r_half.matrix())
    }

    fn mix(&self, clipped: &HermitianOperator, cap: f64, w: f64) -> HermitianOperator {
        &clipped.scale(1.0 - w) + &self.reference.scale(w * cap)
    }

    /// Best mixing weight for threshold `cap`: (purified distance, candidate).
    fn best_at(&self, cap: f64) -> Option<(f64, HermitianOperator)> {
        let clipped = self.clipped(cap);
        let t0 = clipped.trace();
        let t1 = cap * self.reference.trace();
        let w_max = if t1 > t0 { ((1.0 - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
        let fid = |w: f64| fidelity_star(&self.mix(&clipped, cap, w), self.target).unwrap_or(0.0);
        let (mut a, mut b) = (0.0, w_max);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (fid(x1), fid(x2));
        for _ in 0..40 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = fid(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = fid(x1);
            }
        }
        let mut best = (fid(0.0), 0.0);
        for (f, w) in [(f1, x1), (f2, x2), (fid(w_max), w_max)] {
            if f > best.0 {
                best = (f, w);
            }
        }
        let cand = self.mix(&clipped, cap, best.1);
        if !(cand.trace() > 0.0) {
            return None;
        }
        let p = purified_distance(&cand, self.target).ok()?;
        Some((p, cand))
    }
}

/// Certified upper bound on `D_max^ε(target‖reference)`.
pub fn smooth_d_max(target: &DensityOperator, reference: &HermitianOperator, epsilon: f64) -> Result<SmoothingCertificate> {
    crate::linalg::check_same_dim(target, reference)?;
    check_epsilon(epsilon, target)?;
    let exact = d_max(target, reference)?.as_f64();
    let mut best = SmoothingCertificate {
        candidate: target.clone(),
        epsilon_used: 0.0,
        bound_value: exact,
    };
    if epsilon == 0.0 {
        return Ok(best);
    }
    let consider = |op: HermitianOperator, p: f64, best: &mut SmoothingCertificate| {
        if p > epsilon {
            return;
        }
        let Ok(cand) = DensityOperator::new_clamped(op, 1e-10) else { return };
        let Ok(v) = d_max(&cand, reference) else { return };
        let v = v.as_f64();
        if v < best.bound_value {
            *best = SmoothingCertificate { candidate: cand, epsilon_used: p, bound_value: v };
        }
    };

    let clipper = Clipper::new(target, reference)?;
    let c_hi = clipper.c_max();
    if c_hi > 0.0 {
        if let Some((p_hi, cand)) = clipper.best_at(c_hi) {
            consider(cand, p_hi, &mut best);
            if p_hi <= epsilon {
                let (mut lo, mut hi) = (c_hi.ln() - 60.0, c_hi.ln());
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    match clipper.best_at(mid.exp()) {
                        Some((p, cand)) if p <= epsilon => {
                            consider(cand, p, &mut best);
                            hi = mid;
                        }
                        _ => lo = mid,
                    }
                    if hi - lo < 1e-9 {
                        break;
                    }
                }
            }
        }
    }

    let e = target.eigen();
    let n = target.dim();
    for drop in 1..n {
        let kept: Vec<f64> = e
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < drop { 0.0 } else { v.max(0.0) })
            .collect();
        if kept.iter().all(|&v| v == 0.0) {
            break;
        }
        let op = HermitianOperator::from_matrix_unchecked(crate::linalg::Eigen {
            values: kept,
            vectors: e.vectors.clone(),
        }
        .reconstruct(|v| v));
        let Ok(p) = purified_distance(&op, target) else { continue };
        consider(op, p, &mut best);
    }
    Ok(best)
}

/// Certified lower bound on `H_min^ε(A|B)`.
///
/// The optimal `σ_B` of the unsmoothed program defines the reference
/// `I_A ⊗ σ_B`; the `D_max` smoothing above produces a candidate, whose exact
/// min-entropy is then recomputed. The better of that value and the
/// unsmoothed one is returned.
pub fn smooth_h_min(target: &BipartiteState, epsilon: f64) -> Result<SmoothingCertificate> {
    if target.dims().len() != 2 {
        return Err(Error::Precondition("min-entropy smoothing needs a bipartite state".into()));
    }
    let state = target.state();
    check_epsilon(epsilon, state)?;
    let (d_a, d_b) = (target.dim(0), target.dim(1));
    let sol = min_entropy_sdp(state, d_a, d_b)?;
    let exact = -sol.primal.log2();
    let base = SmoothingCertificate { candidate: state.clone(), epsilon_used: 0.0, bound_value: exact };
    if epsilon == 0.0 {
        return Ok(base);
    }
    let reference = HermitianOperator::identity(d_a).kron(&sol.sigma_b);
    let cert = smooth_d_max(state, &reference, epsilon)?;
    if cert.epsilon_used == 0.0 {
        return Ok(base);
    }
    let smoothed = min_entropy_sdp(&cert.candidate, d_a, d_b)?;
    let h = -smoothed.primal.log2();
    if h > exact {
        Ok(SmoothingCertificate { candidate: cert.candidate, epsilon_used: cert.epsilon_used, bound_value: h })
    } else {
        Ok(base)
    }
}
