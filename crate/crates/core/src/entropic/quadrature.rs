//! Resolvent integrals `∫₀^∞ (ρ+t)^{-1} δ (ρ+t)^{-1} dt` by Gauss–Legendre
//! quadrature after the substitution `t = u/(1−u)`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, HermitianOperator};

pub const QUADRATURE_NODES: usize = 400;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(QUADRATURE_NODES).unwrap()))
}

/// `∫₀^∞ dt / ((a+t)(b+t))` for `a, b > 0`.
pub fn resolvent_integral(a: f64, b: f64) -> f64 {
    // with t = u/(1−u), dt = du/(1−u)² and the integrand becomes
    // 1 / ((a(1−u) + u)(b(1−u) + u)) on [0, 1]
    rule().integrate(0.0, 1.0, |u| 1.0 / ((a * (1.0 - u) + u) * (b * (1.0 - u) + u)))
}

/// Closed form of [`resolvent_integral`]: `(ln a − ln b)/(a − b)`, or `1/a` when `a = b`.
pub fn divided_log(a: f64, b: f64) -> f64 {
    if ((a - b) / a.max(b)).abs() < 1e-12 {
        2.0 / (a + b)
    } else {
        (a.ln() - b.ln()) / (a - b)
    }
}

fn spectrum_checked(rho: &HermitianOperator, delta: &HermitianOperator) -> Result<()> {
    if rho.dim() != delta.dim() {
        return Err(Error::dims(rho.dim(), delta.dim()));
    }
    if !(rho.min_eigenvalue() > 0.0) {
        return Err(Error::Precondition("resolvent integrals need ρ positive definite".into()));
    }
    Ok(())
}

/// `δ` expressed in the eigenbasis of `ρ`, together with the kernel
/// `K_{zz'} = ∫ dt/((λ_z+t)(λ_z'+t))` computed by quadrature.
fn kernel(rho: &HermitianOperator, delta: &HermitianOperator) -> (CMatrix, CMatrix, Vec<Vec<f64>>) {
    let e = rho.eigen();
    let n = rho.dim();
    let d = e.vectors.adjoint() * delta.matrix() * &e.vectors;
    let mut k = vec![vec![0.0; n]; n];
    for z in 0..n {
        for w in z..n {
            let v = resolvent_integral(e.values[z], e.values[w]);
            k[z][w] = v;
            k[w][z] = v;
        }
    }
    (e.vectors.clone(), d, k)
}

/// `∫₀^∞ (ρ+t)^{-1} δ (ρ+t)^{-1} dt` (natural-log units).
pub fn log_difference_integral(rho: &HermitianOperator, delta: &HermitianOperator) -> Result<HermitianOperator> {
    spectrum_checked(rho, delta)?;
    let (v, d, k) = kernel(rho, delta);
    let n = rho.dim();
    let inner = CMatrix::from_fn(n, n, |z, w| d[(z, w)] * c(k[z][w], 0.0));
    Ok(HermitianOperator::from_matrix_unchecked(&v * inner * v.adjoint()))
}

/// `∫₀^∞ Tr[δ(ρ+t)^{-1}δ(ρ+t)^{-1}] dt`.
pub fn quadratic_integral(rho: &HermitianOperator, delta: &HermitianOperator) -> Result<f64> {
    spectrum_checked(rho, delta)?;
    let (_, d, k) = kernel(rho, delta);
    let n = rho.dim();
    let mut s = 0.0;
    for z in 0..n {
        for w in 0..n {
            s += d[(z, w)].norm_sqr() * k[z][w];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    #[test]
    fn scalar_case_is_inverse() {
        for lam in [0.01, 0.1, 0.5, 1.0, 3.0] {
            assert!((resolvent_integral(lam, lam) - 1.0 / lam).abs() < 1e-9 / lam);
        }
    }

    #[test]
    fn matches_divided_difference() {
        for (a, b) in [(0.05, 0.9), (0.2, 0.21), (1.0, 0.3)] {
            let q = resolvent_integral(a, b);
            assert!((q - divided_log(a, b)).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn log_integral_against_closed_form() {
        let r = random_density(3, 3, 2).unwrap();
        let rho = &r.op().scale(0.7) + &HermitianOperator::identity(3).scale(0.1);
        let s = random_density(3, 3, 3).unwrap();
        let delta = s.op() - &rho;
        let q = log_difference_integral(&rho, &delta).unwrap();
        let e = rho.eigen();
        let d = e.vectors.adjoint() * delta.matrix() * &e.vectors;
        let exact = CMatrix::from_fn(3, 3, |z, w| d[(z, w)] * c(divided_log(e.values[z], e.values[w]), 0.0));
        let exact = &e.vectors * exact * e.vectors.adjoint();
        let err = (q.matrix() - exact).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        assert!(err < 1e-9);
    }

    #[test]
    fn rejects_singular_rho() {
        let rho = HermitianOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let delta = HermitianOperator::identity(2);
        assert!(quadratic_integral(&rho, &delta).is_err());
    }
}
