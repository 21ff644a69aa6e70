//! Quantum channels in Kraus form with Stinespring and Choi views, and
//! classical-quantum ensembles.

mod json;

pub use json::{matrix_from_json, matrix_to_json, ChannelJson, EnsembleJson, MatrixJson};

use crate::error::{Error, Result};
use crate::linalg::{
    c, haar_unitary, partial_trace_matrix, random_density_with, rng_from_seed, BipartiteState, CMatrix,
    DensityOperator, HermitianOperator, C64,
};

/// Tolerance for `Σ K†K = I`.
pub const TP_TOL: f64 = 1e-10;

/// CPTP map held as a Kraus list.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::MalformedInput("channel needs at least one Kraus operator".into()))?;
        let (d_out, d_in) = first.shape();
        if d_in == 0 || d_out == 0 {
            return Err(Error::MalformedInput("Kraus operators must be nonempty".into()));
        }
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::MalformedInput(format!(
                    "Kraus operator shape {:?} differs from {:?}",
                    k.shape(),
                    (d_out, d_in)
                )));
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::MalformedInput("non-finite Kraus entry".into()));
            }
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let err = (sum - CMatrix::identity(d_in, d_in)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if err > TP_TOL {
            return Err(Error::MalformedInput(format!("channel is not trace preserving (max |ΣK†K − I| = {err:e})")));
        }
        Ok(QuantumChannel { kraus, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        QuantumChannel { kraus: vec![CMatrix::identity(d, d)], d_in: d, d_out: d }
    }

    /// `ρ ↦ Tr[ρ] I/d_out`, with Kraus operators `|i⟩⟨j|/√d_out`.
    pub fn completely_depolarizing(d_in: usize, d_out: usize) -> Self {
        let s = 1.0 / (d_out as f64).sqrt();
        let mut kraus = Vec::with_capacity(d_in * d_out);
        for i in 0..d_out {
            for j in 0..d_in {
                let mut k = CMatrix::zeros(d_out, d_in);
                k[(i, j)] = c(s, 0.0);
                kraus.push(k);
            }
        }
        QuantumChannel { kraus, d_in, d_out }
    }

    /// `ρ ↦ (1−p)ρ + p Tr[ρ] I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Precondition(format!("depolarizing parameter {p} outside [0, 1]")));
        }
        let full = Self::completely_depolarizing(d, d);
        let mut kraus = Vec::with_capacity(d * d + 1);
        if p < 1.0 {
            kraus.push(CMatrix::identity(d, d) * c((1.0 - p).sqrt(), 0.0));
        }
        if p > 0.0 {
            kraus.extend(full.kraus.into_iter().map(|k| k * c(p.sqrt(), 0.0)));
        }
        Ok(QuantumChannel { kraus, d_in: d, d_out: d })
    }

    /// Channel whose Stinespring isometry is the first `d_in` columns of a Haar unitary
    /// on `d_out · n_kraus` dimensions.
    pub fn random(d_in: usize, d_out: usize, n_kraus: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out == 0 || n_kraus == 0 {
            return Err(Error::Precondition("random channel dimensions must be positive".into()));
        }
        if d_out * n_kraus < d_in {
            return Err(Error::Precondition(format!(
                "an isometry {d_in} → {d_out}·{n_kraus} does not exist"
            )));
        }
        let u = haar_unitary(d_out * n_kraus, seed);
        let kraus = (0..n_kraus)
            .map(|e| CMatrix::from_fn(d_out, d_in, |b, a| u[(b * n_kraus + e, a)]))
            .collect();
        Ok(QuantumChannel { kraus, d_in, d_out })
    }

    /// Rebuilds a channel from its normalized Choi state on `A ⊗ B`.
    pub fn from_choi(choi: &BipartiteState) -> Result<Self> {
        if choi.dims().len() != 2 {
            return Err(Error::MalformedInput("Choi state must be bipartite".into()));
        }
        let (d_in, d_out) = (choi.dim(0), choi.dim(1));
        let e = choi.state().eigen();
        let cut = e.cutoff();
        let mut kraus = Vec::new();
        for (k, &lam) in e.values.iter().enumerate() {
            if lam <= cut {
                continue;
            }
            let s = (d_in as f64 * lam).sqrt();
            let v = e.vectors.column(k);
            kraus.push(CMatrix::from_fn(d_out, d_in, |b, a| v[a * d_out + b] * c(s, 0.0)));
        }
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn env_dim(&self) -> usize {
        self.kraus.len()
    }

    /// `W = Σ_e K_e ⊗ |e⟩`, a `(d_out·env) × d_in` isometry with row index `b·env + e`.
    pub fn stinespring(&self) -> CMatrix {
        let env = self.env_dim();
        CMatrix::from_fn(self.d_out * env, self.d_in, |r, a| self.kraus[r % env][(r / env, a)])
    }

    /// `Σ K X K†` for an arbitrary square input.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.d_in || x.ncols() != self.d_in {
            return Err(Error::dims(self.d_in, x.nrows()));
        }
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply_op(&self, h: &HermitianOperator) -> Result<HermitianOperator> {
        Ok(HermitianOperator::from_matrix_unchecked(self.apply_matrix(h.matrix())?))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        DensityOperator::new_clamped(self.apply_op(rho)?, 1e-12)
    }

    /// Applies the channel to subsystem `k` of a multipartite state.
    pub fn apply_partial(&self, state: &BipartiteState, k: usize) -> Result<BipartiteState> {
        let dims = state.dims();
        if k >= dims.len() {
            return Err(Error::MalformedInput(format!("subsystem {k} out of range")));
        }
        if dims[k] != self.d_in {
            return Err(Error::dims(self.d_in, dims[k]));
        }
        let before: usize = dims[..k].iter().product();
        let after: usize = dims[k + 1..].iter().product();
        let ib = CMatrix::identity(before, before);
        let ia = CMatrix::identity(after, after);
        let m = state.state().matrix();
        let mut out_dims = dims.to_vec();
        out_dims[k] = self.d_out;
        let n: usize = out_dims.iter().product();
        let mut out = CMatrix::zeros(n, n);
        for kr in &self.kraus {
            let lifted = ib.kronecker(kr).kronecker(&ia);
            out += &lifted * m * lifted.adjoint();
        }
        let rho = DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(out), 1e-12)?;
        BipartiteState::new(rho, out_dims)
    }

    /// `N ⊗ M` with Kraus operators `K_i ⊗ L_j`.
    pub fn tensor(&self, other: &QuantumChannel) -> QuantumChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| other.kraus.iter().map(move |l| k.kronecker(l)))
            .collect();
        QuantumChannel { kraus, d_in: self.d_in * other.d_in, d_out: self.d_out * other.d_out }
    }

    /// `N^{⊗n}` for `n ≥ 1`.
    pub fn tensor_power(&self, n: usize) -> Result<QuantumChannel> {
        if n == 0 {
            return Err(Error::Precondition("tensor power needs n ≥ 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    /// Normalized Choi state `(1/D) Σ_ij |i⟩⟨j| ⊗ T(|i⟩⟨j|)` on `A ⊗ B`.
    pub fn choi(&self) -> BipartiteState {
        let (d, o) = (self.d_in, self.d_out);
        let mut j = CMatrix::zeros(d * o, d * o);
        for i in 0..d {
            for k in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, k)] = C64::new(1.0, 0.0);
                let t = self.apply_matrix(&e).expect("dimension checked");
                for b in 0..o {
                    for b2 in 0..o {
                        j[(i * o + b, k * o + b2)] = t[(b, b2)] / c(d as f64, 0.0);
                    }
                }
            }
        }
        let rho = DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(j), 1e-12)
            .expect("Choi state of a CPTP map is a state");
        BipartiteState::new(rho, vec![d, o]).expect("dims match")
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self.kraus.iter().map(matrix_to_json).collect(),
        }
    }

    pub fn from_json(j: &ChannelJson) -> Result<Self> {
        let kraus = j.kraus.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        let ch = Self::new(kraus)?;
        if ch.d_in != j.d_in || ch.d_out != j.d_out {
            return Err(Error::MalformedInput(format!(
                "declared dims {}→{} disagree with Kraus shape {}→{}",
                j.d_in, j.d_out, ch.d_in, ch.d_out
            )));
        }
        Ok(ch)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("channel serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: ChannelJson = serde_json::from_str(s).map_err(|e| Error::MalformedInput(format!("channel JSON: {e}")))?;
        Self::from_json(&j)
    }
}

/// `T(X) = D · Tr_A[(X^T ⊗ I) J]`, the channel action read off a Choi matrix.
pub fn apply_via_choi(choi: &BipartiteState, x: &CMatrix) -> Result<CMatrix> {
    let (d, o) = (choi.dim(0), choi.dim(1));
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::dims(d, x.nrows()));
    }
    let lifted = x.transpose().kronecker(&CMatrix::identity(o, o));
    let prod = lifted * choi.state().matrix();
    Ok(partial_trace_matrix(&prod, &[d, o], &[1])? * c(d as f64, 0.0))
}

/// Finite ensemble `{Q(x), ρ_x}` of states on `H_B`.
#[derive(Debug, Clone)]
pub struct CQEnsemble {
    alphabet: Vec<String>,
    pmf: Vec<f64>,
    states: Vec<DensityOperator>,
}

/// Tolerance on `Σ Q(x) = 1`.
pub const PMF_TOL: f64 = 1e-12;

impl CQEnsemble {
    pub fn new(alphabet: Vec<String>, pmf: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::MalformedInput("ensemble alphabet is empty".into()));
        }
        if pmf.len() != alphabet.len() || states.len() != alphabet.len() {
            return Err(Error::MalformedInput(format!(
                "alphabet has {} symbols but {} probabilities and {} states",
                alphabet.len(),
                pmf.len(),
                states.len()
            )));
        }
        for (i, s) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(s) {
                return Err(Error::MalformedInput(format!("symbol {s:?} repeated")));
            }
        }
        if pmf.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
            return Err(Error::MalformedInput("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::MalformedInput(format!("probabilities sum to {total}")));
        }
        let d = states[0].dim();
        for (s, r) in alphabet.iter().zip(&states) {
            if r.dim() != d {
                return Err(Error::dims(d, r.dim()));
            }
            if !r.is_normalized() {
                return Err(Error::MalformedInput(format!("state for symbol {s:?} is not normalized")));
            }
        }
        Ok(CQEnsemble { alphabet, pmf, states })
    }

    /// Symbols `"0"`, `"1"`, … for the given probabilities and states.
    pub fn indexed(pmf: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        let alphabet = (0..pmf.len()).map(|i| i.to_string()).collect();
        Self::new(alphabet, pmf, states)
    }

    /// `{(1/2, |0⟩⟨0|), (1/2, |1⟩⟨1|)}`.
    pub fn binary_orthogonal() -> Self {
        let states = vec![DensityOperator::basis_state(2, 0).unwrap(), DensityOperator::basis_state(2, 1).unwrap()];
        Self::indexed(vec![0.5, 0.5], states).unwrap()
    }

    /// Random ensemble: Dirichlet(1,…,1) probabilities, full-rank random states.
    pub fn random(n_symbols: usize, d_b: usize, seed: u64) -> Result<Self> {
        use rand::Rng;
        if n_symbols == 0 || d_b == 0 {
            return Err(Error::Precondition("ensemble sizes must be positive".into()));
        }
        let mut rng = rng_from_seed(seed);
        let w: Vec<f64> = (0..n_symbols).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        let mut pmf: Vec<f64> = w.iter().map(|x| x / s).collect();
        let head: f64 = pmf[..n_symbols - 1].iter().sum();
        pmf[n_symbols - 1] = (1.0 - head).max(0.0);
        let states = (0..n_symbols)
            .map(|_| {
                let rank = rng.random_range(1..=d_b);
                random_density_with(d_b, rank, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::indexed(pmf, states)
    }

    /// Diagonal ensemble of a classical channel: `ρ_x = diag(W(·|x))`.
    pub fn from_classical(w: &[Vec<f64>], q: &[f64]) -> Result<Self> {
        let states = w
            .iter()
            .map(|row| DensityOperator::diagonal(row))
            .collect::<Result<Vec<_>>>()?;
        Self::indexed(q.to_vec(), states)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    pub fn d_b(&self) -> usize {
        self.states[0].dim()
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::Lookup(format!("symbol {symbol:?} not in alphabet")))
    }

    pub fn state(&self, symbol: &str) -> Result<&DensityOperator> {
        Ok(&self.states[self.index_of(symbol)?])
    }

    /// `ρ = Σ Q(x) ρ_x`.
    pub fn average_state(&self) -> Result<DensityOperator> {
        let d = self.d_b();
        let mut m = CMatrix::zeros(d, d);
        for (q, r) in self.pmf.iter().zip(&self.states) {
            m += r.matrix() * c(*q, 0.0);
        }
        DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(m), 1e-12)
    }

    /// `Σ Q(x) |x⟩⟨x| ⊗ ρ_x` on `X ⊗ B`.
    pub fn joint_state(&self) -> Result<BipartiteState> {
        let (nx, d) = (self.len(), self.d_b());
        let mut m = CMatrix::zeros(nx * d, nx * d);
        for (x, (q, r)) in self.pmf.iter().zip(&self.states).enumerate() {
            let block = r.matrix() * c(*q, 0.0);
            m.view_mut((x * d, x * d), (d, d)).copy_from(&block);
        }
        let rho = DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(m), 1e-12)?;
        BipartiteState::new(rho, vec![nx, d])
    }

    pub fn to_json(&self) -> EnsembleJson {
        EnsembleJson {
            alphabet: self.alphabet.iter().map(|s| serde_json::Value::String(s.clone())).collect(),
            pmf: self.pmf.clone(),
            states: self.states.iter().map(|r| matrix_to_json(r.matrix())).collect(),
        }
    }

    pub fn from_json(j: &EnsembleJson) -> Result<Self> {
        let alphabet = j
            .alphabet
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                other => Err(Error::MalformedInput(format!("alphabet symbols must be strings or numbers, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let states = j
            .states
            .iter()
            .map(|m| DensityOperator::from_matrix(matrix_from_json(m)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, j.pmf.clone(), states)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: EnsembleJson = serde_json::from_str(s).map_err(|e| Error::MalformedInput(format!("ensemble JSON: {e}")))?;
        Self::from_json(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("ensemble serializes")
    }
}

/// The CQ channel `|x⟩⟨x| ↦ ρ_x` on `|X|`-dimensional inputs; off-diagonal
/// input entries are discarded. Kraus operators are `√μ_k |u_k⟩⟨x|` over the
/// eigenpairs of each `ρ_x`.
pub fn cq_as_channel(ens: &CQEnsemble) -> QuantumChannel {
    let (nx, d) = (ens.len(), ens.d_b());
    let mut kraus = Vec::new();
    for (x, r) in ens.states().iter().enumerate() {
        let e = r.eigen();
        for (k, &mu) in e.values.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let s = mu.sqrt();
            let mut m = CMatrix::zeros(d, nx);
            for b in 0..d {
                m[(b, x)] = e.vectors[(b, k)] * c(s, 0.0);
            }
            kraus.push(m);
        }
    }
    // eigenvalues clipped at zero can leave ΣK†K off by rounding; rescale per column
    let mut norms = vec![0.0; nx];
    for k in &kraus {
        for x in 0..nx {
            norms[x] += k.column(x).norm_squared();
        }
    }
    for k in kraus.iter_mut() {
        for x in 0..nx {
            let f = 1.0 / norms[x].sqrt();
            for b in 0..d {
                k[(b, x)] *= c(f, 0.0);
            }
        }
    }
    QuantumChannel::new(kraus).expect("CQ channel is trace preserving")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, trace_distance, CVector};

    fn close(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    #[test]
    fn identity_stinespring() {
        let ch = QuantumChannel::identity(2);
        assert_eq!(ch.env_dim(), 1);
        assert!(close(&ch.stinespring(), &CMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn stinespring_is_isometry_and_matches_kraus() {
        for ch in [
            QuantumChannel::depolarizing(2, 0.3).unwrap(),
            QuantumChannel::random(3, 3, 3, 5).unwrap(),
            QuantumChannel::random(2, 3, 2, 6).unwrap(),
        ] {
            let w = ch.stinespring();
            assert!(close(&(w.adjoint() * &w), &CMatrix::identity(ch.d_in(), ch.d_in())) < 1e-10);
            for seed in 0..100 {
                let r = random_density(ch.d_in(), ch.d_in(), seed).unwrap();
                let big = &w * r.matrix() * w.adjoint();
                let via_w = partial_trace_matrix(&big, &[ch.d_out(), ch.env_dim()], &[0]).unwrap();
                let via_k = ch.apply_matrix(r.matrix()).unwrap();
                assert!(close(&via_w, &via_k) < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_tp() {
        let k = CMatrix::identity(2, 2) * c(0.9, 0.0);
        assert!(matches!(QuantumChannel::new(vec![k]), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn choi_examples() {
        let j = QuantumChannel::identity(2).choi();
        assert!((j.state().purity() - 1.0).abs() < 1e-12);
        assert!((j.state().matrix()[(0, 3)].re - 0.5).abs() < 1e-15);
        let j = QuantumChannel::completely_depolarizing(2, 2).choi();
        assert!(close(j.state().matrix(), &(CMatrix::identity(4, 4) * c(0.25, 0.0))) < 1e-14);
    }

    #[test]
    fn choi_marginal_and_reconstruction() {
        let ch = QuantumChannel::random(3, 2, 3, 9).unwrap();
        let j = ch.choi();
        let tb = j.marginal(1).unwrap();
        let expect = ch.apply(&DensityOperator::maximally_mixed(3)).unwrap();
        assert!(close(tb.matrix(), expect.matrix()) < 1e-12);
        let rebuilt = QuantumChannel::from_choi(&j).unwrap();
        for seed in 0..100 {
            let r = random_density(3, 2, seed).unwrap();
            let a = ch.apply_matrix(r.matrix()).unwrap();
            let b = apply_via_choi(&j, r.matrix()).unwrap();
            let d = rebuilt.apply_matrix(r.matrix()).unwrap();
            assert!(close(&a, &b) < 1e-9);
            assert!(close(&a, &d) < 1e-9);
        }
    }

    #[test]
    fn apply_examples() {
        let r = random_density(3, 3, 1).unwrap();
        let out = QuantumChannel::identity(3).apply(&r).unwrap();
        assert!(close(out.matrix(), r.matrix()) < 1e-15);
        let out = QuantumChannel::completely_depolarizing(3, 3).apply(&r).unwrap();
        assert!(close(out.matrix(), DensityOperator::maximally_mixed(3).matrix()) < 1e-14);
    }

    #[test]
    fn partial_application_on_purification() {
        let r = random_density(3, 3, 4).unwrap();
        let ch = QuantumChannel::random(3, 2, 2, 4).unwrap();
        let psi = crate::linalg::canonical_purification(&r).unwrap().state().unwrap();
        let out = ch.apply_partial(&psi, 0).unwrap();
        let b = out.marginal(0).unwrap();
        let direct = ch.apply(&r).unwrap();
        assert!(trace_distance(&b, &direct).unwrap() < 1e-10);
    }

    #[test]
    fn json_round_trip_exact() {
        let ch = QuantumChannel::random(2, 3, 2, 11).unwrap();
        let back = QuantumChannel::from_json_str(&ch.to_json_string()).unwrap();
        for (a, b) in ch.kraus().iter().zip(back.kraus()) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x == y));
        }
        assert!(QuantumChannel::from_json_str("{\"d_in\":2}").is_err());
    }

    #[test]
    fn ensemble_validation() {
        let s = vec![DensityOperator::basis_state(2, 0).unwrap(), DensityOperator::basis_state(2, 1).unwrap()];
        assert!(CQEnsemble::indexed(vec![0.5, 0.6], s.clone()).is_err());
        assert!(CQEnsemble::indexed(vec![0.5], s.clone()).is_err());
        let e = CQEnsemble::indexed(vec![0.25, 0.75], s).unwrap();
        assert!(matches!(e.index_of("7"), Err(Error::Lookup(_))));
        let back = CQEnsemble::from_json_str(&e.to_json_string()).unwrap();
        assert_eq!(back.pmf(), e.pmf());
    }

    #[test]
    fn cq_channel_examples() {
        let ens = CQEnsemble::binary_orthogonal();
        let ch = cq_as_channel(&ens);
        let out = ch.apply(&DensityOperator::basis_state(2, 0).unwrap()).unwrap();
        assert!(close(out.matrix(), ens.states()[0].matrix()) < 1e-14);
        let ens = CQEnsemble::random(3, 2, 4).unwrap();
        let ch = cq_as_channel(&ens);
        let q = DensityOperator::diagonal(ens.pmf()).unwrap();
        let out = ch.apply(&q).unwrap();
        assert!(close(out.matrix(), ens.average_state().unwrap().matrix()) < 1e-12);
        let mut v = CVector::zeros(3);
        v[0] = c(1.0, 0.0);
        v[1] = c(1.0, 0.0);
        let plus = DensityOperator::pure(&v).unwrap();
        let out = ch.apply(&plus).unwrap();
        let expect = (ens.states()[0].matrix() + ens.states()[1].matrix()) * c(0.5, 0.0);
        assert!(close(out.matrix(), &expect) < 1e-12);
    }
}
