//! Conditional min-entropy through the semidefinite program
//! `minimize Tr σ_B  subject to  I_A ⊗ σ_B ⪰ ρ_AB`.
//!
//! The solver is a log-det barrier method over a real orthonormal basis of
//! Hermitian `d_B × d_B` matrices. `σ_B ⪰ 0` is implied by the constraint
//! whenever `ρ_AB ⪰ 0`, so only one barrier term is needed. A dual feasible
//! point is recovered from the barrier Hessian and rescaled so that the
//! reported gap is a rigorous bracket of the optimum.

use nalgebra::{DMatrix, DVector};

use super::{d_max, Divergence};
use crate::error::{Error, Result};
use crate::linalg::{c, partial_trace_matrix, BipartiteState, CMatrix, HermitianOperator};

/// Target for `primal − dual`, relative to `max(1, primal)`.
const GAP_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
/// Largest relative gap accepted when the iterates stop improving.
const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Optimal `σ_B` (unnormalized, `Tr σ_B = primal`).
    pub sigma_b: HermitianOperator,
    /// Primal objective `Tr σ_B`; an upper bound on the optimum.
    pub primal: f64,
    /// Dual objective `Tr[ρ Y]` of a feasible dual point; a lower bound on the optimum.
    pub dual: f64,
    pub gap: f64,
    pub newton_steps: usize,
}

fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = c(1.0, 0.0);
        out.push(m);
    }
    for k in 0..d {
        for l in k + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(k, l)] = c(s, 0.0);
            m[(l, k)] = c(s, 0.0);
            out.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(k, l)] = c(0.0, s);
            m[(l, k)] = c(0.0, -s);
            out.push(m);
        }
    }
    out
}

fn assemble(basis: &[CMatrix], x: &DVector<f64>) -> CMatrix {
    let d = basis[0].nrows();
    let mut m = CMatrix::zeros(d, d);
    for (e, &xk) in basis.iter().zip(x.iter()) {
        m += e * c(xk, 0.0);
    }
    m
}

fn lift(d_a: usize, sigma: &CMatrix) -> CMatrix {
    CMatrix::identity(d_a, d_a).kronecker(sigma)
}

/// Inverse through Cholesky, `None` when the matrix is not positive definite.
fn spd_inverse(m: &CMatrix) -> Option<(CMatrix, f64)> {
    let ch = m.clone().cholesky()?;
    let logdet: f64 = 2.0 * ch.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    if !logdet.is_finite() {
        return None;
    }
    Some((ch.inverse(), logdet))
}

/// Solves `minimize Tr σ_B  s.t.  I_A ⊗ σ_B ⪰ ρ` for a PSD operator `ρ` on `A ⊗ B`.
pub fn min_entropy_sdp(rho: &HermitianOperator, d_a: usize, d_b: usize) -> Result<SdpSolution> {
    if d_a * d_b != rho.dim() || d_a == 0 || d_b == 0 {
        return Err(Error::dims(rho.dim(), d_a * d_b));
    }
    let scale = rho.max_eigenvalue();
    if !(scale > 0.0) {
        return Err(Error::Precondition("min-entropy of a zero operator".into()));
    }
    // work with ρ/λ_max so that the barrier runs at unit scale
    let r = rho.matrix() / c(scale, 0.0);
    let basis = hermitian_basis(d_b);
    let n = basis.len();
    let cost: Vec<f64> = basis.iter().map(|e| e.trace().re).collect();
    let lifted: Vec<CMatrix> = basis.iter().map(|e| lift(d_a, e)).collect();

    // I_B lies in the span: coefficients 1 on the diagonal elements
    let mut x = DVector::<f64>::zeros(n);
    for k in 0..d_b {
        x[k] = 2.0;
    }
    let mut t = 1.0;
    let mu = 8.0;
    let mut steps = 0usize;
    let mut best_primal = f64::INFINITY;
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_sigma = CMatrix::zeros(d_b, d_b);

    // log det of the slack; the linear part of the barrier is handled through differences
    let barrier = |x: &DVector<f64>| -> Option<(f64, CMatrix)> {
        let s1 = lift(d_a, &assemble(&basis, x)) - &r;
        spd_inverse(&s1).map(|(inv, logdet)| (logdet, inv))
    };

    loop {
        // centering by damped Newton
        let mut inner = 0;
        let mut floor = false;
        loop {
            let (logdet0, inv) = barrier(&x)
                .ok_or_else(|| Error::Numerical("barrier iterate left the feasible cone".into()))?;
            let g_mats: Vec<CMatrix> = lifted.iter().map(|le| &inv * le).collect();
            let mut grad = DVector::<f64>::zeros(n);
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for k in 0..n {
                grad[k] = t * cost[k] - g_mats[k].trace().re;
                for l in 0..=k {
                    let v = trace_prod_re(&g_mats[k], &g_mats[l]);
                    hess[(k, l)] = v;
                    hess[(l, k)] = v;
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .clone()
                    .lu()
                    .solve(&(-&grad))
                    .ok_or_else(|| Error::Numerical("singular Newton system in min-entropy SDP".into()))?,
            };
            let decrement = -grad.dot(&step);
            let lin_step: f64 = t * cost.iter().zip(step.iter()).map(|(a, b)| a * b).sum::<f64>();
            steps += 1;
            inner += 1;
            if decrement < 1e-14 || inner > MAX_NEWTON {
                break;
            }
            let mut s = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &x + &step * s;
                if let Some((logdet1, _)) = barrier(&cand) {
                    if s * lin_step - (logdet1 - logdet0) <= -0.25 * s * decrement {
                        x = cand;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            // a tiny accepted step means the iterate sits at the rounding floor
            if accepted && s < 1e-3 && (1e-10..1e-8).contains(&decrement) {
                floor = true;
            }
            if !accepted || floor || decrement < 1e-10 {
                break;
            }
            if steps > 20 * MAX_NEWTON {
                return Err(Error::Numerical(format!(
                    "min-entropy SDP did not converge (t = {t:e}, Newton decrement {decrement:e})"
                )));
            }
        }

        let sigma = assemble(&basis, &x);
        let primal = sigma.trace().re;
        let s1 = lift(d_a, &sigma) - &r;
        let (inv, _) = spd_inverse(&s1).ok_or_else(|| Error::Numerical("lost feasibility".into()))?;
        let y = &inv / c(t, 0.0);
        best_dual = best_dual.max(dual_value(&sigma, &s1, &r, &y, d_a, d_b)?);
        if primal < best_primal {
            best_primal = primal;
            best_sigma = sigma;
        }
        let gap = best_primal - best_dual;
        let saturated = inner > MAX_NEWTON;
        if gap <= GAP_TOL * best_primal.max(1.0) || t > 1e15 || saturated {
            if gap > STALL_TOL * best_primal.max(1.0) {
                return Err(Error::Numerical(format!(
                    "min-entropy SDP stalled: primal {best_primal:e}, dual {best_dual:e}, gap {gap:e}"
                )));
            }
            return Ok(SdpSolution {
                sigma_b: HermitianOperator::from_matrix_unchecked(best_sigma * c(scale, 0.0)),
                primal: best_primal * scale,
                dual: best_dual * scale,
                gap: gap * scale,
                newton_steps: steps,
            });
        }
        t *= mu;
    }
}

/// Dual objective of `Y ⪰ 0` after the congruence `(I ⊗ M) Y (I ⊗ M)` with
/// `M = (Tr_A Y)^{-1/2}`, which makes `Tr_A Y = I_B` exactly.
///
/// `Tr[ρY]` is evaluated as `Tr[(I⊗σ)Y] − Tr[SY]` with `S = I⊗σ − ρ`, which
/// avoids the cancellation near the optimum.
fn dual_value(sigma: &CMatrix, s: &CMatrix, r: &CMatrix, y: &CMatrix, d_a: usize, d_b: usize) -> Result<f64> {
    let y = (y + y.adjoint()) * c(0.5, 0.0);
    let ty = HermitianOperator::from_matrix_unchecked(partial_trace_matrix(&y, &[d_a, d_b], &[1])?);
    if ty.min_eigenvalue() > 0.0 {
        let m = lift(d_a, ty.power(-0.5)?.matrix());
        let yn = &m * &y * &m;
        Ok(trace_prod_re(&lift(d_a, sigma), &yn) - trace_prod_re(s, &yn))
    } else {
        Ok(trace_prod_re(r, &y) / ty.max_eigenvalue().max(1.0))
    }
}

fn trace_prod_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = a[(i, j)] * b[(j, i)];
            s += p.re;
        }
    }
    s
}

fn check_bipartite(state: &BipartiteState) -> Result<(usize, usize)> {
    if state.dims().len() != 2 {
        return Err(Error::Precondition("min-entropy needs a bipartite state".into()));
    }
    Ok((state.dim(0), state.dim(1)))
}

/// `H_min(A|B)` for a state on `A ⊗ B` (first subsystem is conditioned).
///
/// The returned value is `−log₂` of the primal optimum, which is a lower
/// bound on the exact value within the solver gap.
pub fn h_min(state: &BipartiteState) -> Result<f64> {
    let (d_a, d_b) = check_bipartite(state)?;
    let sol = min_entropy_sdp(state.state(), d_a, d_b)?;
    Ok(-sol.primal.log2())
}

/// `H_min(A|B)` by exhaustive search over the Bloch ball for `d_B = 2`.
///
/// `λ(σ) = 2^{D_max(ρ‖I⊗σ)}` is quasi-convex in `σ`, so a coarse spherical
/// grid followed by shrinking cartesian refinement finds the minimum.
pub fn h_min_bloch_grid(state: &BipartiteState) -> Result<f64> {
    let (d_a, d_b) = check_bipartite(state)?;
    if d_b != 2 {
        return Err(Error::Precondition(format!("Bloch grid needs d_B = 2, got {d_b}")));
    }
    let eval = |v: [f64; 3]| -> f64 {
        let sigma = bloch_state(v);
        let reference = HermitianOperator::identity(d_a).kron(&sigma);
        match d_max(state.state(), &reference) {
            Ok(r) => match r.value {
                Divergence::Finite(x) => x,
                Divergence::Infinite => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };
    let mut best = ([0.0; 3], eval([0.0; 3]));
    let (nr, nt, np) = (12, 16, 32);
    for ir in 1..=nr {
        let r = ir as f64 / nr as f64;
        for it in 0..=nt {
            let th = std::f64::consts::PI * it as f64 / nt as f64;
            for ip in 0..np {
                let ph = 2.0 * std::f64::consts::PI * ip as f64 / np as f64;
                let v = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()];
                let f = eval(v);
                if f < best.1 {
                    best = (v, f);
                }
            }
        }
    }
    let mut h = 0.15;
    let k = 5i32;
    while h > 1e-13 {
        let centre = best.0;
        for a in -k..=k {
            for b in -k..=k {
                for cz in -k..=k {
                    let mut v = [
                        centre[0] + h * a as f64 / k as f64,
                        centre[1] + h * b as f64 / k as f64,
                        centre[2] + h * cz as f64 / k as f64,
                    ];
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if norm > 1.0 {
                        v.iter_mut().for_each(|x| *x /= norm);
                    }
                    let f = eval(v);
                    if f < best.1 {
                        best = (v, f);
                    }
                }
            }
        }
        h *= 0.6;
    }
    if !best.1.is_finite() {
        return Err(Error::Numerical("Bloch grid found no σ_B with finite D_max".into()));
    }
    Ok(-best.1)
}

fn bloch_state(v: [f64; 3]) -> HermitianOperator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = c((1.0 + v[2]) / 2.0, 0.0);
    m[(1, 1)] = c((1.0 - v[2]) / 2.0, 0.0);
    m[(0, 1)] = c(v[0] / 2.0, -v[1] / 2.0);
    m[(1, 0)] = c(v[0] / 2.0, v[1] / 2.0);
    HermitianOperator::from_matrix_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, CVector, DensityOperator};

    fn max_entangled(d: usize) -> BipartiteState {
        let mut v = CVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = c(1.0, 0.0);
        }
        BipartiteState::new(DensityOperator::pure(&v).unwrap(), vec![d, d]).unwrap()
    }

    #[test]
    fn maximally_entangled_closed_form() {
        for d in [2, 3] {
            let h = h_min(&max_entangled(d)).unwrap();
            assert!((h + (d as f64).log2()).abs() < 1e-8, "d={d}: {h}");
        }
        let g = h_min_bloch_grid(&max_entangled(2)).unwrap();
        assert!((g + 1.0).abs() < 1e-6);
    }

    #[test]
    fn product_closed_form() {
        let sb = random_density(2, 2, 3).unwrap();
        let prod = BipartiteState::product(&DensityOperator::maximally_mixed(2), &sb);
        assert!((h_min(&prod).unwrap() - 1.0).abs() < 1e-8);
        assert!((h_min_bloch_grid(&prod).unwrap() - 1.0).abs() < 1e-6);
        let pure = BipartiteState::product(&DensityOperator::basis_state(2, 0).unwrap(), &sb);
        assert!(h_min(&pure).unwrap().abs() < 1e-8);
        assert!(h_min_bloch_grid(&pure).unwrap().abs() < 1e-6);
        let ra = DensityOperator::diagonal(&[0.6, 0.3, 0.1]).unwrap();
        let prod = BipartiteState::product(&ra, &sb);
        assert!((h_min(&prod).unwrap() + 0.6f64.log2()).abs() < 1e-8);
    }

    #[test]
    fn duality_gap_is_small_and_brackets() {
        for seed in 0..5 {
            let r = random_density(6, 6, seed).unwrap();
            let sol = min_entropy_sdp(&r, 3, 2).unwrap();
            assert!(sol.gap >= -1e-12 && sol.gap <= 1e-7);
            assert!(sol.dual <= sol.primal + 1e-12);
            let reference = HermitianOperator::identity(3).kron(&sol.sigma_b);
            let slackness = (&reference - r.op()).min_eigenvalue();
            assert!(slackness > -1e-9);
        }
    }

    #[test]
    fn sdp_agrees_with_grid() {
        for seed in 10..14 {
            let r = random_density(4, 3, seed).unwrap();
            let st = BipartiteState::new(r, vec![2, 2]).unwrap();
            let a = h_min(&st).unwrap();
            let b = h_min_bloch_grid(&st).unwrap();
            assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let r = random_density(4, 4, 1).unwrap();
        assert!(min_entropy_sdp(&r, 3, 2).is_err());
    }
}
