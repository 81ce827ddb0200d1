//! Noise model: from the scalar parameter Q to the observable statistics.
//!
//! Q is the probability of each specific wrong symbol in one pass through the
//! computational-basis channel, so one pass keeps the symbol with probability
//! 1 − (d−1)Q. Two independent passes then accumulate a reflected error of
//! 1 − [(1−(d−1)Q)² + (d−1)Q²], i.e. 2Q(2−3Q) for qutrits and 2Q(3−6Q) for
//! ququarts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mub::{mubs_for, BasisLabel};
use crate::numerics::entropy_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Forward and reverse noise are tied; the reflected round trip sees error Q.
    Dependent,
    /// Forward and reverse passes are independent channels.
    Independent,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Dependent, Scenario::Independent];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Dependent => "dependent",
            Scenario::Independent => "independent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dependent" | "dep" => Ok(Scenario::Dependent),
            "independent" | "indep" | "ind" => Ok(Scenario::Independent),
            other => Err(Error::InvalidParameter(format!("unknown scenario '{other}'"))),
        }
    }
}

/// How the reflected error figure maps onto individual `P[Kᵢ→Kⱼ]` entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MubConvention {
    /// Each wrong outcome occurs with the full reflected error figure.
    #[default]
    PerOutcome,
    /// The reflected error figure is a total, split evenly over the d−1 wrong outcomes.
    TotalSplit,
}

impl MubConvention {
    pub const ALL: [MubConvention; 2] = [MubConvention::PerOutcome, MubConvention::TotalSplit];

    pub fn as_str(&self) -> &'static str {
        match self {
            MubConvention::PerOutcome => "per-outcome",
            MubConvention::TotalSplit => "total-split",
        }
    }
}

impl fmt::Display for MubConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MubConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-outcome" | "per_outcome" => Ok(MubConvention::PerOutcome),
            "total-split" | "total_split" => Ok(MubConvention::TotalSplit),
            other => Err(Error::InvalidParameter(format!("unknown convention '{other}'"))),
        }
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 3 || d == 4 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

pub(crate) fn check_q(d: usize, q: f64) -> Result<()> {
    check_dim(d)?;
    // A little slack so grids that end at exactly 1/d are not rejected by round-off.
    if !(q >= 0.0 && q <= 1.0 / d as f64 + 1e-12) {
        return Err(Error::NoiseOutOfRange { q, d });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub dim: usize,
    pub q: f64,
    pub scenario: Scenario,
    pub convention: MubConvention,
}

impl NoiseModel {
    pub fn new(dim: usize, q: f64, scenario: Scenario, convention: MubConvention) -> Result<Self> {
        check_q(dim, q)?;
        Ok(Self {
            dim,
            q: q.min(1.0 / dim as f64),
            scenario,
            convention,
        })
    }
}

/// Row-stochastic d×d matrix: `t[i][j]` = P(send i → receive j).
pub fn transition_matrix(d: usize, q: f64) -> Result<Vec<Vec<f64>>> {
    check_q(d, q)?;
    let q = q.min(1.0 / d as f64);
    let keep = 1.0 - (d as f64 - 1.0) * q;
    Ok((0..d)
        .map(|i| (0..d).map(|j| if i == j { keep } else { q }).collect())
        .collect())
}

/// Per-pair error probabilities `P[Kᵢ→Kⱼ]` for one test basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MubErrorTable {
    pub label: BasisLabel,
    dim: usize,
    /// Row-major d×d; diagonal entries are not used by any bound.
    values: Vec<f64>,
}

impl MubErrorTable {
    pub fn new(label: BasisLabel, dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dim * dim);
        Self { label, dim, values }
    }

    pub fn uniform(label: BasisLabel, dim: usize, per_pair: f64) -> Self {
        let values = (0..dim * dim)
            .map(|k| if k / dim == k % dim { 1.0 - (dim as f64 - 1.0) * per_pair } else { per_pair })
            .collect();
        Self::new(label, dim, values)
    }

    pub fn get(&self, prepared: usize, measured: usize) -> f64 {
        self.values[prepared * self.dim + measured]
    }

    /// Σ over ordered pairs i ≠ j.
    pub fn error_sum(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| (0..self.dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }
}

/// The full observable record consumed by the key-rate evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsTensor {
    pub dim: usize,
    /// `p[a·d² + b·d + c]`: sent a, Bob measured b, Alice's return measurement c; conditioned on a.
    p: Vec<f64>,
    pub mub_errors: Vec<MubErrorTable>,
}

impl StatsTensor {
    pub fn from_values(dim: usize, p: Vec<f64>, mub_errors: Vec<MubErrorTable>) -> Result<Self> {
        check_dim(dim)?;
        if p.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor has {} entries, expected {}",
                p.len(),
                dim * dim * dim
            )));
        }
        Ok(Self { dim, p, mub_errors })
    }

    pub fn p(&self, a: usize, b: usize, c: usize) -> f64 {
        self.p[(a * self.dim + b) * self.dim + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn mub_table(&self, label: BasisLabel) -> Option<&MubErrorTable> {
        self.mub_errors.iter().find(|t| t.label == label)
    }

    /// Σ_{b,c} p[a][b][c] for one sent symbol.
    pub fn slice_sum(&self, a: usize) -> f64 {
        let d = self.dim;
        self.p[a * d * d..(a + 1) * d * d].iter().sum()
    }

    /// Checks the entry ranges and per-slice normalization (within `tol`).
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some((i, &v)) = self
            .p
            .iter()
            .enumerate()
            .find(|(_, &v)| !(-tol..=1.0 + tol).contains(&v))
        {
            return Err(Error::NegativeWeight { index: i, value: v });
        }
        for a in 0..self.dim {
            let s = self.slice_sum(a);
            if (s - 1.0).abs() > tol {
                return Err(Error::Degenerate(format!("slice a={a} sums to {s}")));
            }
        }
        let cap = 1.0 / (self.dim as f64 - 1.0);
        for table in &self.mub_errors {
            for i in 0..self.dim {
                let mut row = 0.0;
                for j in (0..self.dim).filter(|&j| j != i) {
                    let v = table.get(i, j);
                    if !(-tol..=cap + tol).contains(&v) {
                        return Err(Error::InvalidParameter(format!(
                            "P[{}{i}→{}{j}] = {v} outside [0, {cap}]",
                            table.label, table.label
                        )));
                    }
                    row += v;
                }
                if row > 1.0 + tol {
                    return Err(Error::InvalidParameter(format!(
                        "errors for prepared {}{i} sum to {row}",
                        table.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// p[a][b][c] = T(a→b)·T(b→c), the same in both scenarios.
pub fn joint_stats(model: &NoiseModel) -> Result<StatsTensor> {
    let d = model.dim;
    let t = transition_matrix(d, model.q)?;
    let mut p = Vec::with_capacity(d * d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                p.push(t[a][b] * t[b][c]);
            }
        }
    }
    StatsTensor::from_values(d, p, Vec::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedError {
    /// Total error figure of the reflected round trip (Q, or the two-pass accumulation).
    pub total: f64,
    /// Value assigned to each `P[Kᵢ→Kⱼ]`, i ≠ j.
    pub per_pair: f64,
    pub warnings: Vec<String>,
}

/// Error accumulated over two independent passes: 1 − [(1−(d−1)Q)² + (d−1)Q²].
pub fn two_pass_error(d: usize, q: f64) -> f64 {
    let dm1 = d as f64 - 1.0;
    1.0 - ((1.0 - dm1 * q).powi(2) + dm1 * q * q)
}

pub fn reflected_mub_error(model: &NoiseModel) -> ReflectedError {
    let d = model.dim;
    let mut warnings = Vec::new();
    let mut total = match model.scenario {
        Scenario::Dependent => model.q,
        Scenario::Independent => two_pass_error(d, model.q),
    };
    if total > 1.0 {
        warnings.push(format!("reflected error {total} clamped to 1"));
        total = 1.0;
    }
    let mut per_pair = match model.convention {
        MubConvention::PerOutcome => total,
        MubConvention::TotalSplit => total / (d as f64 - 1.0),
    };
    let cap = 1.0 / (d as f64 - 1.0);
    if per_pair > cap {
        warnings.push(format!("per-pair MUB error {per_pair} clamped to {cap}"));
        per_pair = cap;
    }
    ReflectedError {
        total,
        per_pair,
        warnings,
    }
}

/// Computational tensor plus MUB error tables for every test basis of `n_mubs`.
pub fn analytic_stats(model: &NoiseModel, n_mubs: usize) -> Result<(StatsTensor, Vec<String>)> {
    let mut stats = joint_stats(model)?;
    let family = mubs_for(model.dim)?;
    let reflected = reflected_mub_error(model);
    stats.mub_errors = family
        .test_bases(n_mubs)?
        .iter()
        .map(|b| MubErrorTable::uniform(b.label, model.dim, reflected.per_pair))
        .collect();
    Ok((stats, reflected.warnings))
}

/// Joint distribution of the raw key: Bob's symbol i, Alice's (sent) symbol j.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKeyJoint {
    pub dim: usize,
    pub p_a: Vec<f64>,
    /// Row-major, `joint[i·d + j]` with i Bob's symbol and j Alice's.
    pub joint: Vec<f64>,
}

impl RawKeyJoint {
    pub fn new(dim: usize, p_a: Vec<f64>, joint: Vec<f64>) -> Self {
        assert_eq!(p_a.len(), dim);
        assert_eq!(joint.len(), dim * dim);
        Self { dim, p_a, joint }
    }

    pub fn h_a(&self) -> Result<f64> {
        entropy_of(self.p_a.iter().copied())
    }

    pub fn h_joint(&self) -> Result<f64> {
        entropy_of(self.joint.iter().copied())
    }

    /// H(B|A) = H(B,A) − H(A).
    pub fn h_b_given_a(&self) -> Result<f64> {
        Ok(self.h_joint()? - self.h_a()?)
    }
}

pub fn raw_key_joint(model: &NoiseModel) -> Result<RawKeyJoint> {
    let d = model.dim;
    let t = transition_matrix(d, model.q)?;
    let p_a = vec![1.0 / d as f64; d];
    let mut joint = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            joint[i * d + j] = t[j][i] / d as f64;
        }
    }
    Ok(RawKeyJoint::new(d, p_a, joint))
}
