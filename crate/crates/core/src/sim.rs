//! Monte Carlo simulation of the protocol.
//!
//! Each round Bob either reflects (Alice prepares a state of a random test
//! basis and measures the return in the same basis) or measures and resends
//! in the computational basis. Noise is a generalized-Pauli depolarizing
//! channel, so MUB error rates come out of the physics rather than being
//! injected.
//!
//! Rounds are grouped in fixed blocks; block k draws from ChaCha8 seeded with
//! `seed` on stream k. Counts are merged by integer addition, so results do
//! not depend on the number of threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{check_q, MubConvention, MubErrorTable, NoiseModel, RawKeyJoint, Scenario, StatsTensor};
use crate::error::{Error, Result};
use crate::keyrate::{check_config, key_rate, key_rate_from_stats, BoundReading, KeyRateBreakdown};
use crate::mub::{mubs_for, Basis, BasisLabel};
use crate::numerics::{inner, norm_sqr};

pub const BLOCK_ROUNDS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub d: usize,
    pub n_mubs: usize,
    pub q: f64,
    pub scenario: Scenario,
    pub rounds: u64,
    pub seed: u64,
    pub prob_reflect: f64,
    pub reading: BoundReading,
}

impl ProtocolConfig {
    pub fn new(d: usize, n_mubs: usize, q: f64, scenario: Scenario, rounds: u64, seed: u64) -> Result<Self> {
        let c = Self {
            d,
            n_mubs,
            q,
            scenario,
            rounds,
            seed,
            prob_reflect: 0.5,
            reading: BoundReading::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_config(self.d, self.n_mubs)?;
        check_q(self.d, self.q)?;
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(self.prob_reflect > 0.0 && self.prob_reflect < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "reflect probability {} must lie strictly between 0 and 1",
                self.prob_reflect
            )));
        }
        Ok(())
    }

    /// The analytic convention this physical noise realizes: one depolarizing
    /// pass gives per-outcome error Q, two passes give the two-pass total
    /// split over the d−1 wrong outcomes.
    pub fn matching_convention(&self) -> MubConvention {
        match self.scenario {
            Scenario::Dependent => MubConvention::PerOutcome,
            Scenario::Independent => MubConvention::TotalSplit,
        }
    }

    pub fn analytic_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.d, self.q, self.scenario, self.matching_convention())
    }
}

/// Born-rule measurement; returns the outcome and the post-measurement state.
pub fn measure_in_basis<R: Rng + ?Sized>(
    state: &[Complex64],
    basis: &Basis,
    rng: &mut R,
) -> Result<(usize, Vec<Complex64>)> {
    if state.len() != basis.dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes, basis {} has dimension {}",
            state.len(),
            basis.label,
            basis.dim
        )));
    }
    let norm = norm_sqr(state);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(norm));
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut outcome = basis.dim - 1;
    for j in 0..basis.dim {
        acc += inner(&basis.vector(j), state).norm_sqr();
        if u < acc {
            outcome = j;
            break;
        }
    }
    Ok((outcome, basis.vector(outcome)))
}

/// One depolarizing pass: identity with probability 1 − λ + λ/d², otherwise
/// each other X^x Z^z with probability λ/d² (λ = dQ).
pub fn apply_channel<R: Rng + ?Sized>(state: &[Complex64], q: f64, rng: &mut R) -> Vec<Complex64> {
    let d = state.len();
    let lambda = (d as f64 * q).min(1.0);
    let each = lambda / (d * d) as f64;
    let keep = 1.0 - lambda + each;
    let u: f64 = rng.gen();
    if u < keep || each == 0.0 {
        return state.to_vec();
    }
    let k = (1 + ((u - keep) / each) as usize).min(d * d - 1);
    let (x, z) = (k / d, k % d);
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for (i, amp) in state.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * ((z * i) % d) as f64 / d as f64;
        out[(i + x) % d] += amp * Complex64::from_polar(1.0, angle);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalStats {
    pub d: usize,
    /// n[a][b][c] for measure-resend rounds, flattened like `StatsTensor`.
    pub counts: Vec<u64>,
    /// Per test basis: n[i][j] prepared i, measured j on reflect rounds.
    pub mub_counts: Vec<(BasisLabel, Vec<u64>)>,
    pub measure_resend_rounds: u64,
    pub reflect_rounds: u64,
}

impl EmpiricalStats {
    fn empty(d: usize, labels: &[BasisLabel]) -> Self {
        Self {
            d,
            counts: vec![0; d * d * d],
            mub_counts: labels.iter().map(|&l| (l, vec![0; d * d])).collect(),
            measure_resend_rounds: 0,
            reflect_rounds: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for ((_, a), (_, b)) in self.mub_counts.iter_mut().zip(&other.mub_counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.measure_resend_rounds += other.measure_resend_rounds;
        self.reflect_rounds += other.reflect_rounds;
        self
    }

    pub fn count(&self, a: usize, b: usize, c: usize) -> u64 {
        self.counts[(a * self.d + b) * self.d + c]
    }

    pub fn slice_total(&self, a: usize) -> u64 {
        let dd = self.d * self.d;
        self.counts[a * dd..(a + 1) * dd].iter().sum()
    }

    /// Frequencies conditioned on the sent symbol, plus per-pair MUB error frequencies.
    pub fn to_stats(&self) -> Result<StatsTensor> {
        let d = self.d;
        let mut p = Vec::with_capacity(d * d * d);
        for a in 0..d {
            let n = self.slice_total(a);
            if n == 0 {
                return Err(Error::InsufficientData(format!("no measure-resend rounds with sent symbol {a}")));
            }
            let dd = d * d;
            p.extend(self.counts[a * dd..(a + 1) * dd].iter().map(|&c| c as f64 / n as f64));
        }
        let mut tables = Vec::with_capacity(self.mub_counts.len());
        for (label, counts) in &self.mub_counts {
            let mut values = vec![0.0; d * d];
            for i in 0..d {
                let n: u64 = counts[i * d..(i + 1) * d].iter().sum();
                if n == 0 {
                    return Err(Error::InsufficientData(format!("no reflect rounds prepared in {label}{i}")));
                }
                for j in 0..d {
                    values[i * d + j] = counts[i * d + j] as f64 / n as f64;
                }
            }
            tables.push(MubErrorTable::new(*label, d, values));
        }
        StatsTensor::from_values(d, p, tables)
    }

    /// Raw-key table from measure-resend rounds: Bob's b against Alice's sent a.
    pub fn raw_key_joint(&self) -> Result<RawKeyJoint> {
        let d = self.d;
        let total = self.measure_resend_rounds;
        if total == 0 {
            return Err(Error::InsufficientData("no measure-resend rounds".into()));
        }
        let mut joint = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let n: u64 = (0..d).map(|c| self.count(a, b, c)).sum();
                joint[b * d + a] = n as f64 / total as f64;
            }
        }
        let p_a = (0..d).map(|a| self.slice_total(a) as f64 / total as f64).collect();
        Ok(RawKeyJoint::new(d, p_a, joint))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: ProtocolConfig,
    pub empirical: EmpiricalStats,
    pub breakdown: KeyRateBreakdown,
    /// Key rate of the analytic model under the matching convention.
    pub analytic: KeyRateBreakdown,
}

fn run_block(config: &ProtocolConfig, comp: &Basis, tests: &[Basis], block: u64) -> Result<EmpiricalStats> {
    let d = config.d;
    let labels: Vec<_> = tests.iter().map(|b| b.label).collect();
    let mut out = EmpiricalStats::empty(d, &labels);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(block);
    let start = block * BLOCK_ROUNDS;
    let end = (start + BLOCK_ROUNDS).min(config.rounds);
    for _ in start..end {
        if rng.gen::<f64>() < config.prob_reflect {
            let which = rng.gen_range(0..tests.len());
            let basis = &tests[which];
            let i = rng.gen_range(0..d);
            let mut psi = apply_channel(&basis.vector(i), config.q, &mut rng);
            if config.scenario == Scenario::Independent {
                psi = apply_channel(&psi, config.q, &mut rng);
            }
            let (j, _) = measure_in_basis(&psi, basis, &mut rng)?;
            out.mub_counts[which].1[i * d + j] += 1;
            out.reflect_rounds += 1;
        } else {
            let a = rng.gen_range(0..d);
            let psi = apply_channel(&comp.vector(a), config.q, &mut rng);
            let (b, resent) = measure_in_basis(&psi, comp, &mut rng)?;
            let psi = apply_channel(&resent, config.q, &mut rng);
            let (c, _) = measure_in_basis(&psi, comp, &mut rng)?;
            out.counts[(a * d + b) * d + c] += 1;
            out.measure_resend_rounds += 1;
        }
    }
    Ok(out)
}

/// Counts only; bit-identical for a fixed config regardless of thread count.
pub fn simulate_counts(config: &ProtocolConfig) -> Result<EmpiricalStats> {
    config.validate()?;
    let family = mubs_for(config.d)?;
    let tests = family.test_bases(config.n_mubs)?;
    let comp = Basis::computational(config.d);
    let labels: Vec<_> = tests.iter().map(|b| b.label).collect();
    let blocks = config.rounds.div_ceil(BLOCK_ROUNDS);
    (0..blocks)
        .into_par_iter()
        .map(|k| run_block(config, &comp, tests, k))
        .try_reduce(|| EmpiricalStats::empty(config.d, &labels), |a, b| Ok(a.merge(b)))
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<SimulationResult> {
    let empirical = simulate_counts(config)?;
    let stats = empirical.to_stats()?;
    let joint = empirical.raw_key_joint()?;
    let mut breakdown = key_rate_from_stats(&stats, &joint, config.n_mubs, config.reading)?;
    let model = config.analytic_model()?;
    breakdown.model = Some(model);
    let analytic = key_rate(&model, config.n_mubs, config.reading)?;
    Ok(SimulationResult {
        config: *config,
        empirical,
        breakdown,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn computational_state_measures_deterministically() {
        let comp = Basis::computational(3);
        let mut r = rng();
        for _ in 0..100 {
            let (j, post) = measure_in_basis(&comp.vector(2), &comp, &mut r).unwrap();
            assert_eq!(j, 2);
            assert_eq!(post, comp.vector(2));
        }
    }

    #[test]
    fn unnormalized_state_rejected() {
        let comp = Basis::computational(3);
        let psi = vec![c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)];
        assert!(matches!(measure_in_basis(&psi, &comp, &mut rng()), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn x0_in_computational_basis_is_uniform() {
        let x0 = mubs_for(3).unwrap().bases[1].vector(0);
        let comp = Basis::computational(3);
        let mut r = rng();
        let n = 100_000;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[measure_in_basis(&x0, &comp, &mut r).unwrap().0] += 1;
        }
        // Chi-square with 2 degrees of freedom; 3σ-equivalent cutoff ≈ 11.8.
        let e = n as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 11.8, "chi2 = {chi2}");
    }

    #[test]
    fn zero_noise_channel_is_identity() {
        let psi = mubs_for(4).unwrap().bases[2].vector(1);
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(apply_channel(&psi, 0.0, &mut r), psi);
        }
    }

    #[test]
    fn channel_flip_rate() {
        let comp = Basis::computational(3);
        let mut r = rng();
        let n = 1_000_000;
        let mut flips = 0u64;
        for _ in 0..n {
            let psi = apply_channel(&comp.vector(0), 0.05, &mut r);
            if measure_in_basis(&psi, &comp, &mut r).unwrap().0 == 1 {
                flips += 1;
            }
        }
        let p = flips as f64 / n as f64;
        let sigma = (0.05 * 0.95 / n as f64).sqrt();
        assert!((p - 0.05).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn zero_noise_protocol() {
        let c = ProtocolConfig::new(3, 3, 0.0, Scenario::Dependent, 100_000, 1).unwrap();
        let res = run_protocol(&c).unwrap();
        let stats = res.empirical.to_stats().unwrap();
        for a in 0..3 {
            assert_eq!(stats.p(a, a, a), 1.0);
        }
        assert!((res.breakdown.r - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn insufficient_data_is_reported() {
        let c = ProtocolConfig::new(4, 5, 0.01, Scenario::Dependent, 3, 1).unwrap();
        assert!(matches!(run_protocol(&c), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn deterministic() {
        let c = ProtocolConfig::new(4, 3, 0.02, Scenario::Independent, 20_000, 99).unwrap();
        assert_eq!(simulate_counts(&c).unwrap(), simulate_counts(&c).unwrap());
        let other = ProtocolConfig { seed: 100, ..c };
        assert_ne!(simulate_counts(&c).unwrap(), simulate_counts(&other).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(3, 3, 0.05, Scenario::Dependent, 0, 1).is_err());
        assert!(ProtocolConfig::new(3, 2, 0.05, Scenario::Dependent, 10, 1).is_err());
        assert!(ProtocolConfig::new(3, 3, 0.5, Scenario::Dependent, 10, 1).is_err());
    }
}
