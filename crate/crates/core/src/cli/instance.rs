//! JSON instance descriptions for the experiment runner.

use serde::{Deserialize, Serialize};

use crate::channels::{matrix_from_json, ChannelJson, CQEnsemble, EnsembleJson, MatrixJson, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{random_density, BipartiteState, DensityOperator};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    MaximallyMixed { dim: usize },
    Basis { dim: usize, index: usize },
    Diagonal { diag: Vec<f64> },
    Random { dim: usize, rank: usize, seed: u64 },
    Matrix { matrix: MatrixJson },
    /// `a ⊗ b`.
    Product { a: Box<StateSpec>, b: Box<StateSpec> },
}

impl StateSpec {
    pub fn build(&self) -> Result<DensityOperator> {
        match self {
            StateSpec::MaximallyMixed { dim } => {
                if *dim == 0 {
                    return Err(Error::Precondition("dimension must be positive".into()));
                }
                Ok(DensityOperator::maximally_mixed(*dim))
            }
            StateSpec::Basis { dim, index } => DensityOperator::basis_state(*dim, *index),
            StateSpec::Diagonal { diag } => DensityOperator::diagonal(diag),
            StateSpec::Random { dim, rank, seed } => random_density(*dim, *rank, *seed),
            StateSpec::Matrix { matrix } => DensityOperator::from_matrix(matrix_from_json(matrix)?),
            StateSpec::Product { a, b } => Ok(a.build()?.kron(&b.build()?)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity { dim: usize },
    Depolarizing { dim: usize, p: f64 },
    CompletelyDepolarizing { d_in: usize, d_out: usize },
    Random { d_in: usize, d_out: usize, kraus: usize, seed: u64 },
    Kraus(ChannelJson),
}

impl ChannelSpec {
    pub fn build(&self) -> Result<QuantumChannel> {
        match self {
            ChannelSpec::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::Precondition("dimension must be positive".into()));
                }
                Ok(QuantumChannel::identity(*dim))
            }
            ChannelSpec::Depolarizing { dim, p } => QuantumChannel::depolarizing(*dim, *p),
            ChannelSpec::CompletelyDepolarizing { d_in, d_out } => {
                if *d_in == 0 || *d_out == 0 {
                    return Err(Error::Precondition("dimensions must be positive".into()));
                }
                Ok(QuantumChannel::completely_depolarizing(*d_in, *d_out))
            }
            ChannelSpec::Random { d_in, d_out, kraus, seed } => QuantumChannel::random(*d_in, *d_out, *kraus, *seed),
            ChannelSpec::Kraus(j) => QuantumChannel::from_json(j),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    BinaryOrthogonal,
    Random { symbols: usize, dim: usize, seed: u64 },
    Classical { w: Vec<Vec<f64>>, q: Vec<f64> },
    Explicit(EnsembleJson),
}

impl EnsembleSpec {
    pub fn build(&self) -> Result<CQEnsemble> {
        match self {
            EnsembleSpec::BinaryOrthogonal => Ok(CQEnsemble::binary_orthogonal()),
            EnsembleSpec::Random { symbols, dim, seed } => CQEnsemble::random(*symbols, *dim, *seed),
            EnsembleSpec::Classical { w, q } => CQEnsemble::from_classical(w, q),
            EnsembleSpec::Explicit(j) => CQEnsemble::from_json(j),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    /// Exact enumeration when within the resource guard, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    Mc,
}

/// Instance description; which fields are read depends on the mode.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub id: Option<String>,
    /// `ρ_A` for quantum covering, `ρ_AE` for decoupling.
    #[serde(default)]
    pub state: Option<StateSpec>,
    /// `[d_A, d_E]` for decoupling.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    /// Classical channel rows `W(·|x)`.
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub estimate: Estimate,
    /// Lemma names for `audit-lemmas`; all lemmas when absent.
    #[serde(default)]
    pub lemmas: Option<Vec<String>>,
}

impl InstanceSpec {
    pub fn id_or(&self, default: &str) -> String {
        self.id.clone().unwrap_or_else(|| default.to_string())
    }

    pub fn quantum(&self) -> Result<(DensityOperator, QuantumChannel)> {
        let state = self.state.clone().unwrap_or(StateSpec::MaximallyMixed { dim: 2 });
        let channel = self.channel.clone().unwrap_or(ChannelSpec::Identity { dim: 2 });
        Ok((state.build()?, channel.build()?))
    }

    pub fn ensemble(&self) -> Result<CQEnsemble> {
        self.ensemble.clone().unwrap_or(EnsembleSpec::BinaryOrthogonal).build()
    }

    pub fn classical(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let w = self.w.clone().unwrap_or_else(|| vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let q = self.q.clone().unwrap_or_else(|| vec![1.0 / w.len() as f64; w.len()]);
        Ok((w, q))
    }

    pub fn decouple(&self) -> Result<(BipartiteState, QuantumChannel)> {
        let state = self.state.clone().unwrap_or(StateSpec::Product {
            a: Box::new(StateSpec::Basis { dim: 2, index: 0 }),
            b: Box::new(StateSpec::Basis { dim: 2, index: 0 }),
        });
        let rho = state.build()?;
        let dims = match &self.dims {
            Some(d) => d.clone(),
            None => match &state {
                StateSpec::Product { a, .. } => {
                    let d_a = a.build()?.dim();
                    vec![d_a, rho.dim() / d_a]
                }
                _ => return Err(Error::Precondition("decoupling needs \"dims\": [d_A, d_E]".into())),
            },
        };
        let channel = self.channel.clone().unwrap_or(ChannelSpec::Identity { dim: dims[0] }).build()?;
        Ok((BipartiteState::new(rho, dims)?, channel))
    }
}
