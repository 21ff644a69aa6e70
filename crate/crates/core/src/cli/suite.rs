//! Preset check lists. Every check reduces to a list of `(slack, seed)` pairs
//! and fails when its worst slack falls below `−tolerance`.

use clap::ValueEnum;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::table::Table;
use crate::channels::{CQEnsemble, QuantumChannel};
use crate::cqcover;
use crate::decouple::{self, DecoupleInstance};
use crate::entropic::audit::audit_many;
use crate::entropic::{aep_rate, h_min, h_min_bloch_grid, relative_entropy, LemmaId};
use crate::error::Result;
use crate::linalg::{derive_seed, random_density, rng_from_seed, BipartiteState, CMatrix, DensityOperator, HermitianOperator, C64};
use crate::qcover;
use crate::stats::McEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Smoke,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    /// Acceptance criterion the check belongs to.
    pub criterion: u8,
    pub samples: usize,
    pub worst_slack: f64,
    /// Seed of the instance with the worst slack.
    pub worst_seed: u64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub preset: Preset,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<SuiteCheck>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "criterion", "samples", "worst_slack", "seed", "passed"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone().into(),
                (c.criterion as u64).into(),
                c.samples.into(),
                c.worst_slack.into(),
                c.worst_seed.into(),
                c.passed.into(),
            ]);
        }
        t
    }
}

struct Sizes {
    lemma: usize,
    q_instances: usize,
    q_draws: usize,
    chain_draws: usize,
    cq_ensembles: usize,
    classical: usize,
    dec_instances: usize,
    dec_trials: usize,
    moment_draws: usize,
    hmin_states: usize,
}

impl Sizes {
    fn of(p: Preset) -> Sizes {
        match p {
            Preset::Smoke => Sizes {
                lemma: 25,
                q_instances: 3,
                q_draws: 60,
                chain_draws: 10,
                cq_ensembles: 4,
                classical: 10,
                dec_instances: 3,
                dec_trials: 60,
                moment_draws: 1000,
                hmin_states: 8,
            },
            Preset::Full => Sizes {
                lemma: 500,
                q_instances: 20,
                q_draws: 500,
                chain_draws: 50,
                cq_ensembles: 30,
                classical: 50,
                dec_instances: 10,
                dec_trials: 500,
                moment_draws: 10_000,
                hmin_states: 50,
            },
        }
    }
}

type Samples = Vec<(f64, u64)>;
type Job<'a> = (String, u8, Box<dyn Fn() -> Result<Samples> + Sync + 'a>);

/// `tol − |a − b|`.
fn agree(a: f64, b: f64, tol: f64) -> f64 {
    tol - (a - b).abs()
}

/// Largest entrywise `|mean − target|/stderr` over real and imaginary parts.
fn max_z(samples: &[CMatrix], target: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..target.nrows() {
        for j in 0..target.ncols() {
            let parts: [fn(C64) -> f64; 2] = [|z| z.re, |z| z.im];
            for part in parts {
                let vals: Vec<f64> = samples.iter().map(|m| part(m[(i, j)])).collect();
                let e = McEstimate::from_samples(&vals);
                let dev = (e.mean - part(target[(i, j)])).abs();
                let z = if e.stderr > 0.0 {
                    dev / e.stderr
                } else if dev > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                };
                worst = worst.max(z);
            }
        }
    }
    worst
}

fn quantum_instance(i: usize, seed: u64) -> Result<(DensityOperator, QuantumChannel)> {
    let d = [2, 4, 6][i % 3];
    let s = derive_seed(seed, 1000 + i as u64);
    let rho = random_density(d, d, s)?;
    let ch = match (i / 3) % 3 {
        0 => QuantumChannel::identity(d),
        1 => QuantumChannel::depolarizing(d, 0.5)?,
        _ => {
            let d_out = 2 + i % 2;
            QuantumChannel::random(d, d_out, d.div_ceil(d_out) + (i / 9) % 2, s ^ 1)?
        }
    };
    Ok((rho, ch))
}

fn divisors(d: usize) -> Vec<usize> {
    (1..=d).filter(|t| d % t == 0).collect()
}

fn lemma_check(id: LemmaId, seed: u64, n: usize) -> Result<Samples> {
    Ok(audit_many(id, seed, n)?.into_iter().map(|r| (r.slack, r.instance_seed)).collect())
}

fn quantum_bound(z: &Sizes, seed: u64) -> Result<Samples> {
    let mut out = Vec::new();
    for i in 0..z.q_instances {
        let (rho, ch) = quantum_instance(i, seed)?;
        let inst = qcover::build_instance(&rho, &ch)?;
        let q2 = qcover::q2_target(&inst)?;
        for theta in divisors(inst.dim_a()) {
            let s = derive_seed(seed, (i * 16 + theta) as u64);
            let e = qcover::mc_expectation(&inst, theta, z.q_draws, s)?;
            out.push((qcover::covering_bound(q2, theta) + 3.0 * e.stderr - e.mean, s));
        }
    }
    Ok(out)
}

fn quantum_anchors(seed: u64) -> Result<Samples> {
    let mut out = Vec::new();
    for d in [2, 4, 6] {
        let mixed = DensityOperator::maximally_mixed(d);
        let id = qcover::build_instance(&mixed, &QuantumChannel::identity(d))?;
        out.push((agree(qcover::q2_target(&id)?, d as f64, 1e-9), d as u64));
        let dep = qcover::build_instance(&mixed, &QuantumChannel::completely_depolarizing(d, 2))?;
        for t in 0..5 {
            let s = derive_seed(seed, t);
            let code = qcover::sample_block_code(d, divisors(d)[1], s)?;
            out.push((agree(qcover::simulate(&dep, &code)?.d_value, 0.0, 1e-9), s));
        }
    }
    Ok(out)
}

fn chain_checks(z: &Sizes, seed: u64) -> Result<Samples> {
    let mut out = Vec::new();
    for i in 0..z.q_instances.min(9) {
        let (rho, ch) = quantum_instance(i, seed)?;
        let inst = qcover::build_instance(&rho, &ch)?;
        let d = inst.dim_a();
        for k in 0..z.chain_draws {
            let theta = divisors(d)[k % divisors(d).len()];
            let s = derive_seed(seed ^ 0xC4A1, (i * 1000 + k) as u64);
            let out_k = qcover::simulate(&inst, &qcover::sample_block_code(d, theta, s)?)?;
            out.push((qcover::CHAIN_TOL - out_k.chain_gap(), s));
            let blk = qcover::extract_block(&out_k)?;
            out.push((theta as f64 - blk.rank as f64, s));
            out.push((out_k.d_value - blk.divergence + 1e-9, s));
        }
    }
    Ok(out)
}

fn cq_exact(z: &Sizes, seed: u64) -> Result<Samples> {
    let mut ens = vec![(CQEnsemble::binary_orthogonal(), 0)];
    for i in 0..z.cq_ensembles {
        let s = derive_seed(seed, 2000 + i as u64);
        ens.push((CQEnsemble::random(2 + i % 2, 2 + (i / 2) % 2, s)?, s));
    }
    let mut out = Vec::new();
    for (e, s) in &ens {
        let q2 = cqcover::q2_cq(e)?;
        for theta in 1..=5 {
            let v = cqcover::exact_expectation(e, theta)?;
            out.push((cqcover::covering_bound(q2, theta) - v, *s));
        }
    }
    let orth = CQEnsemble::binary_orthogonal();
    out.push((agree(cqcover::exact_expectation(&orth, 1)?, 1.0, 1e-12), 0));
    out.push((agree(cqcover::exact_expectation(&orth, 2)?, 0.5, 1e-12), 0));
    Ok(out)
}

fn random_stochastic<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let w: Vec<f64> = (0..cols).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|v| v / s).collect();
            let head: f64 = row[..cols - 1].iter().sum();
            row[cols - 1] = 1.0 - head;
            row
        })
        .collect()
}

fn classical_checks(z: &Sizes, seed: u64) -> Result<Samples> {
    (0..z.classical)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, 3000 + i as u64);
            let mut rng = rng_from_seed(s);
            let (nx, ny) = (2 + i % 2, 2 + (i / 2) % 2);
            let w = random_stochastic(nx, ny, &mut rng);
            let q = random_stochastic(1, nx, &mut rng).remove(0);
            let b = cqcover::classical_bound(&w, &q, 1 + i % 4, 2, s)?;
            Ok((b.d2_bound - b.expectation, s))
        })
        .collect()
}

fn decouple_instance(i: usize, seed: u64) -> Result<(DecoupleInstance, u64)> {
    let d_a = [2, 3, 4, 6][i % 4];
    let d_e = 1 + i % 2;
    let s = derive_seed(seed, 4000 + i as u64);
    let rho = random_density(d_a * d_e, 1 + i % (d_a * d_e), s)?;
    let ch = match i % 3 {
        0 => QuantumChannel::identity(d_a),
        1 => QuantumChannel::depolarizing(d_a, 0.3)?,
        _ => QuantumChannel::random(d_a, 2, 2, s ^ 1)?,
    };
    Ok((DecoupleInstance::new(BipartiteState::new(rho, vec![d_a, d_e])?, ch)?, s))
}

fn decouple_checks(z: &Sizes, seed: u64) -> Result<Samples> {
    let mut out = Vec::new();
    for i in 0..z.dec_instances {
        let (inst, s) = decouple_instance(i, seed)?;
        let e = decouple::mc_expectation(&inst, z.dec_trials, s)?;
        out.push((e.bound + 3.0 * e.estimate.stderr - e.estimate.mean, s));
        out.push((-(e.pinsker_violations as f64), s));
        out.push((if e.flagged { -1.0 } else { 0.0 }, s));
    }
    let pure = BipartiteState::product(&DensityOperator::basis_state(2, 0)?, &DensityOperator::basis_state(2, 0)?);
    let anchor = DecoupleInstance::new(pure, QuantumChannel::identity(2))?;
    let e = decouple::mc_expectation(&anchor, 20, seed)?;
    out.push((agree(e.estimate.mean, 1.0, 1e-10), seed));
    out.push((e.bound - e.estimate.mean, seed));
    Ok(out)
}

fn moment_checks(z: &Sizes, seed: u64) -> Result<Samples> {
    let (d, theta) = (4, 2);
    let s = derive_seed(seed, 5000);
    let inst = qcover::build_instance(&random_density(d, d, s)?, &QuantumChannel::random(d, 2, 2, s ^ 1)?)?;
    let m = d / theta;
    let sigmas = (0..z.moment_draws as u64)
        .into_par_iter()
        .map(|t| {
            let code = qcover::sample_block_code(d, theta, derive_seed(s, t))?;
            Ok(qcover::simulate(&inst, &code)?.sigma_bm.state().matrix().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let rho_bm = inst.rho_b().op().kron(&HermitianOperator::identity(m).scale(1.0 / m as f64));
    let mut out = vec![(3.0 - max_z(&sigmas, rho_bm.matrix()), s)];

    let s2 = derive_seed(seed, 5001);
    let dec = DecoupleInstance::new(BipartiteState::new(random_density(8, 4, s2)?, vec![4, 2])?, QuantumChannel::random(4, 2, 2, s2 ^ 1)?)?;
    out.push((3.0 - decouple::mean_output_check(&dec, z.moment_draws, s2)?.max_z, s2));

    let s3 = derive_seed(seed, 5002);
    let hm = qcover::haar_moments(d, theta, z.moment_draws, s3)?;
    let zs = |e: &McEstimate, target: f64| (e.mean - target).abs() / e.stderr;
    out.push((3.0 - zs(&hm.first, theta as f64 / d as f64), s3));
    out.push((3.0 - zs(&hm.alpha, qcover::haar_alpha(d, theta)), s3));
    out.push((3.0 - zs(&hm.beta, qcover::haar_beta(d, theta)), s3));
    Ok(out)
}

fn hmin_checks(z: &Sizes, seed: u64) -> Result<Samples> {
    let mut out = (0..z.hmin_states)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, 6000 + i as u64);
            let d_a = 2 + i % 2;
            let st = BipartiteState::new(random_density(2 * d_a, 1 + i % (2 * d_a), s)?, vec![d_a, 2])?;
            Ok((agree(h_min(&st)?, h_min_bloch_grid(&st)?, 1e-4), s))
        })
        .collect::<Result<Samples>>()?;
    for d in [2usize, 3] {
        let v = crate::linalg::CVector::from_fn(d * d, |k, _| if k / d == k % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let me = BipartiteState::new(DensityOperator::pure(&v)?, vec![d, d])?;
        out.push((agree(h_min(&me)?, -(d as f64).log2(), 1e-6), d as u64));
        let s = derive_seed(seed, 6100 + d as u64);
        let (a, b) = (random_density(d, d, s)?, random_density(2, 2, s ^ 1)?);
        let prod = BipartiteState::product(&a, &b);
        out.push((agree(h_min(&prod)?, -a.max_eigenvalue().log2(), 1e-6), s));
    }
    Ok(out)
}

fn trend_checks(seed: u64) -> Result<Samples> {
    let rho = DensityOperator::diagonal(&[0.7, 0.3])?;
    let pts = qcover::asymptotic_trend(&rho, &QuantumChannel::identity(2), 3, 0.5)?;
    let mut out: Samples = pts.windows(2).map(|w| (w[0].per_copy_bound - w[1].per_copy_bound, w[1].n as u64)).collect();
    let s = derive_seed(seed, 7000);
    let (sig, r) = (random_density(3, 3, s)?, random_density(3, 3, s ^ 1)?);
    let d = relative_entropy(&sig, &r)?.as_f64();
    for n in [1u64, 10, 1000] {
        out.push((agree(aep_rate(&sig, &r, n, 0.5f64.sqrt())?, d, 1e-12), s));
    }
    Ok(out)
}

/// Runs the preset. Checks run in a fixed order, so the report is reproducible.
pub fn suite(preset: Preset, seed: u64, tolerance: f64) -> Result<SuiteReport> {
    let z = Sizes::of(preset);
    let mut jobs: Vec<Job> = Vec::new();
    for id in LemmaId::ALL {
        let n = z.lemma;
        jobs.push((format!("lemma:{}", id.name()), 1, Box::new(move || lemma_check(id, seed, n))));
    }
    jobs.push(("qcover:bound".into(), 2, Box::new(|| quantum_bound(&z, seed))));
    jobs.push(("qcover:anchors".into(), 2, Box::new(|| quantum_anchors(seed))));
    jobs.push(("qcover:chain_and_block".into(), 3, Box::new(|| chain_checks(&z, seed))));
    jobs.push(("cqcover:exact_bound".into(), 4, Box::new(|| cq_exact(&z, seed))));
    jobs.push(("cqcover:classical".into(), 5, Box::new(|| classical_checks(&z, seed))));
    jobs.push(("decouple:bound".into(), 6, Box::new(|| decouple_checks(&z, seed))));
    jobs.push(("moments".into(), 7, Box::new(|| moment_checks(&z, seed))));
    jobs.push(("hmin:sdp".into(), 8, Box::new(|| hmin_checks(&z, seed))));
    jobs.push(("trend".into(), 9, Box::new(|| trend_checks(seed))));

    let checks = jobs
        .iter()
        .map(|(name, criterion, job)| {
            let (samples, worst_slack, worst_seed, error) = match job() {
                Ok(v) => {
                    let worst = v.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((f64::INFINITY, seed));
                    (v.len(), worst.0, worst.1, None)
                }
                Err(e) => (0, f64::NEG_INFINITY, seed, Some(e.to_string())),
            };
            SuiteCheck {
                name: name.clone(),
                criterion: *criterion,
                samples,
                worst_slack,
                worst_seed,
                passed: error.is_none() && worst_slack >= -tolerance,
                error,
            }
        })
        .collect();
    Ok(SuiteReport { preset, seed, tolerance, checks })
}
