//! Lower bound on the key rate from observed statistics.
//!
//! The pipeline: t-partition of the raw-key rounds, a Cauchy–Schwarz bound on
//! the overlap sum of Eve's no-error states (X for qutrits, W for ququarts),
//! the two non-zero eigenvalues of the normalized no-error operator, and
//! finally the rate
//!
//! r = S(BEC) − S(EC)_upper − H(B|A).

use std::fmt;
use std::str::FromStr;

use crate::channel::{analytic_stats, raw_key_joint, NoiseModel, RawKeyJoint, StatsTensor};
use crate::error::{Error, Result};
use crate::mub::BasisLabel;
use crate::numerics::{binary_entropy, entropy_of};

/// How the clamped overlap square S feeds the eigenvalue formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OverlapReading {
    /// p ≥ S used directly.
    #[default]
    Direct,
    /// p ≥ S / n_pairs, i.e. S spread over the d(d−1)/2 cross overlaps.
    PerPair,
}

/// How the eigenvalue entropy enters S(EC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EigenEntropy {
    /// h(λ̃₁) + h(λ̃₂), two binary entropies.
    #[default]
    SummedBinary,
    /// −λ̃₁log λ̃₁ − λ̃₂log λ̃₂, the entropy of the pair.
    Pair,
}

impl OverlapReading {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverlapReading::Direct => "direct",
            OverlapReading::PerPair => "per-pair",
        }
    }
}

impl EigenEntropy {
    pub fn as_str(&self) -> &'static str {
        match self {
            EigenEntropy::SummedBinary => "summed-binary",
            EigenEntropy::Pair => "pair",
        }
    }
}

impl FromStr for OverlapReading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(OverlapReading::Direct),
            "per-pair" | "per_pair" => Ok(OverlapReading::PerPair),
            other => Err(Error::InvalidParameter(format!("unknown overlap reading '{other}'"))),
        }
    }
}

impl FromStr for EigenEntropy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summed-binary" | "summed_binary" => Ok(EigenEntropy::SummedBinary),
            "pair" => Ok(EigenEntropy::Pair),
            other => Err(Error::InvalidParameter(format!("unknown eigen-entropy reading '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BoundReading {
    pub overlap: OverlapReading,
    pub eigen_entropy: EigenEntropy,
}

impl BoundReading {
    /// The alternative reading: per-pair overlap and pair entropy.
    pub fn normalized() -> Self {
        Self {
            overlap: OverlapReading::PerPair,
            eigen_entropy: EigenEntropy::Pair,
        }
    }
}

impl fmt::Display for BoundReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.overlap.as_str(), self.eigen_entropy.as_str())
    }
}

/// Number of supported test-basis counts per dimension (computational basis included).
pub fn supported_mubs(d: usize) -> &'static [usize] {
    match d {
        3 => &[3, 4],
        4 => &[2, 3, 4, 5],
        _ => &[],
    }
}

pub fn check_config(d: usize, n_mubs: usize) -> Result<()> {
    if supported_mubs(d).contains(&n_mubs) {
        Ok(())
    } else if d == 3 || d == 4 {
        Err(Error::UnsupportedConfig { d, n_mubs })
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

pub fn n_pairs(d: usize) -> usize {
    d * (d - 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TPartition {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl TPartition {
    pub fn total(&self) -> f64 {
        self.t1 + self.t2 + self.t3 + self.t4
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }
}

/// a = sent, b = Bob, c = Alice's final measurement.
pub fn t_partition(stats: &StatsTensor) -> TPartition {
    let d = stats.dim;
    let mut t = TPartition {
        t1: 0.0,
        t2: 0.0,
        t3: 0.0,
        t4: 0.0,
    };
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let v = stats.p(a, b, c);
                match (a == b, b == c) {
                    (true, true) => t.t1 += v,
                    (false, true) => t.t2 += v,
                    (true, false) => t.t3 += v,
                    (false, false) => t.t4 += v,
                }
            }
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapBound {
    pub n_mubs: usize,
    /// Right-hand side of the overlap inequality; may be negative.
    pub x_or_w: f64,
    /// X² if X ≥ 0, else 0.
    pub s: f64,
    pub p_eig: f64,
}

type Idx = (usize, usize, usize);

// Square-root cross terms as printed, each entry √(p_first · p_second).

const QUTRIT_S1: [(Idx, Idx); 9] = [
    ((0, 0, 1), (1, 0, 2)),
    ((0, 1, 1), (1, 0, 2)),
    ((0, 2, 1), (1, 0, 2)),
    ((0, 0, 1), (1, 1, 2)),
    ((0, 1, 1), (1, 1, 2)),
    ((0, 2, 1), (1, 1, 2)),
    ((0, 0, 1), (1, 2, 2)),
    ((0, 1, 1), (1, 2, 2)),
    ((0, 2, 1), (1, 2, 2)),
];

// Eight terms; (000, 111) does not appear.
const QUTRIT_S2: [(Idx, Idx); 8] = [
    ((0, 0, 0), (1, 0, 1)),
    ((0, 1, 0), (1, 0, 1)),
    ((0, 2, 0), (1, 0, 1)),
    ((0, 1, 0), (1, 1, 1)),
    ((0, 2, 0), (1, 1, 1)),
    ((0, 0, 0), (1, 2, 1)),
    ((0, 1, 0), (1, 2, 1)),
    ((0, 2, 0), (1, 2, 1)),
];

const QUQUART_S1: [(Idx, Idx); 16] = [
    ((1, 0, 0), (0, 0, 1)),
    ((1, 1, 0), (0, 0, 1)),
    ((1, 2, 0), (0, 0, 1)),
    ((1, 3, 0), (0, 0, 1)),
    ((1, 0, 0), (0, 1, 1)),
    ((1, 1, 0), (0, 1, 1)),
    ((1, 2, 0), (0, 1, 1)),
    ((1, 3, 0), (0, 1, 1)),
    ((1, 0, 0), (0, 2, 1)),
    ((1, 1, 0), (0, 2, 1)),
    ((1, 2, 0), (0, 2, 1)),
    ((1, 3, 0), (0, 2, 1)),
    ((1, 0, 0), (0, 3, 1)),
    ((1, 1, 0), (0, 3, 1)),
    ((1, 2, 0), (0, 3, 1)),
    ((1, 3, 0), (0, 3, 1)),
];

// Fifteen terms; (111, 000) does not appear.
const QUQUART_S2: [(Idx, Idx); 15] = [
    ((1, 0, 1), (0, 0, 0)),
    ((1, 2, 1), (0, 0, 0)),
    ((1, 3, 1), (0, 0, 0)),
    ((1, 0, 1), (0, 1, 0)),
    ((1, 1, 1), (0, 1, 0)),
    ((1, 2, 1), (0, 1, 0)),
    ((1, 3, 1), (0, 1, 0)),
    ((1, 0, 1), (0, 2, 0)),
    ((1, 1, 1), (0, 2, 0)),
    ((1, 2, 1), (0, 2, 0)),
    ((1, 3, 1), (0, 2, 0)),
    ((1, 0, 1), (0, 3, 0)),
    ((1, 1, 1), (0, 3, 0)),
    ((1, 2, 1), (0, 3, 0)),
    ((1, 3, 1), (0, 3, 0)),
];

fn sqrt_sum(stats: &StatsTensor, terms: &[(Idx, Idx)]) -> f64 {
    terms
        .iter()
        .map(|&((a, b, c), (x, y, z))| (stats.p(a, b, c) * stats.p(x, y, z)).max(0.0).sqrt())
        .sum()
}

/// Coefficients (constant, ΣP, first √-group, second √-group) and the test bases used.
fn bound_coefficients(d: usize, n_mubs: usize) -> Result<(f64, f64, f64, f64, &'static [BasisLabel])> {
    use BasisLabel::*;
    let c = match (d, n_mubs) {
        (3, 3) => (3.0, 0.75, 1.5, 3.0, &[X, Y][..]),
        (3, 4) => (3.0, 0.5, 0.0, 3.0, &[X, Y, Z][..]),
        (4, 2) => (6.0, 2.0, 18.0, 6.0, &[A][..]),
        (4, 3) => (6.0, 1.0, 6.0, 6.0, &[A, B][..]),
        (4, 4) => (6.0, 2.0 / 3.0, 2.0, 6.0, &[A, B, C][..]),
        (4, 5) => (6.0, 0.5, 0.0, 6.0, &[A, B, C, D][..]),
        _ => return Err(check_config(d, n_mubs).unwrap_err()),
    };
    Ok(c)
}

/// Sum of the MUB pair errors the bound for (d, n_mubs) references.
pub fn mub_error_sum(stats: &StatsTensor, n_mubs: usize) -> Result<f64> {
    let (_, _, _, _, labels) = bound_coefficients(stats.dim, n_mubs)?;
    labels
        .iter()
        .map(|&l| {
            stats
                .mub_table(l)
                .map(|t| t.error_sum())
                .ok_or_else(|| Error::InvalidParameter(format!("statistics carry no errors for basis {l}")))
        })
        .sum()
}

/// Right-hand side of the overlap inequality alone (no clamp).
pub fn overlap_rhs(stats: &StatsTensor, n_mubs: usize) -> Result<f64> {
    let d = stats.dim;
    let (c0, cp, c1, c2, _) = bound_coefficients(d, n_mubs)?;
    let (s1, s2) = match d {
        3 => (sqrt_sum(stats, &QUTRIT_S1), sqrt_sum(stats, &QUTRIT_S2)),
        _ => (sqrt_sum(stats, &QUQUART_S1), sqrt_sum(stats, &QUQUART_S2)),
    };
    Ok(c0 - cp * mub_error_sum(stats, n_mubs)? - c1 * s1 - c2 * s2)
}

pub fn overlap_bound(stats: &StatsTensor, n_mubs: usize, reading: OverlapReading) -> Result<OverlapBound> {
    let x = overlap_rhs(stats, n_mubs)?;
    let s = if x >= 0.0 { x * x } else { 0.0 };
    let p_eig = match reading {
        OverlapReading::Direct => s,
        OverlapReading::PerPair => s / n_pairs(stats.dim) as f64,
    };
    Ok(OverlapBound {
        n_mubs,
        x_or_w: x,
        s,
        p_eig,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Radicand before clamping.
    pub radicand: f64,
    pub warning: Option<String>,
}

/// The two non-zero eigenvalues of the normalized no-error operator.
///
/// `p_diag` holds p[a][a][a]; `p_eig` is the lower bound on the squared
/// cross-overlap sum. The radicand is clamped to [0, (Σ p_diag)²], which keeps
/// λ̃₁ ∈ [½, 1].
pub fn eigen_pair(p_diag: &[f64], p_eig: f64) -> Result<EigenPair> {
    let sum: f64 = p_diag.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::Degenerate(format!("no-error weights sum to {sum}")));
    }
    if p_eig < 0.0 {
        return Err(Error::InvalidParameter(format!("overlap bound {p_eig} is negative")));
    }
    let radicand = match *p_diag {
        [p0, p1, p2] => {
            4.0 * p_eig + p0 * p0 - 2.0 * p0 * p1 + p1 * p1 - 2.0 * p0 * p2 - 2.0 * p1 * p2 + p2 * p2
        }
        [p0, p1, p2, p3] => {
            4.0 * p_eig - 4.0 * p1 * p2 - 4.0 * p0 * p3 + (p0 - p1 - p2 + p3).powi(2)
        }
        _ => return Err(Error::UnsupportedDimension(p_diag.len())),
    };
    let cap = sum * sum;
    let (clamped, warning) = if radicand < 0.0 {
        (0.0, Some(format!("radicand {radicand:.3e} clamped to 0")))
    } else if radicand > cap {
        (cap, Some(format!("radicand {radicand:.6} clamped to {cap:.6}")))
    } else {
        (radicand, None)
    };
    let half_gap = clamped.sqrt() / (2.0 * sum);
    Ok(EigenPair {
        lambda1: 0.5 + half_gap,
        lambda2: 0.5 - half_gap,
        radicand,
        warning,
    })
}

fn eigen_term(lambda1: f64, lambda2: f64, mode: EigenEntropy) -> f64 {
    match mode {
        EigenEntropy::SummedBinary => binary_entropy(lambda1) + binary_entropy(lambda2),
        EigenEntropy::Pair => {
            let f = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
            f(lambda1) + f(lambda2)
        }
    }
}

/// Upper bound on S(EC).
pub fn sec_upper(t: &TPartition, lambda1: f64, lambda2: f64, d: usize, mode: EigenEntropy) -> Result<f64> {
    let df = d as f64;
    let h_t = entropy_of(t.as_array().iter().map(|x| x / df))?;
    Ok(h_t + (t.t2 + t.t3 + t.t4) / df + t.t1 / df * eigen_term(lambda1, lambda2, mode))
}

/// S(BEC): entropy of all d³ entries p[a][b][c]/d.
pub fn sbec(stats: &StatsTensor) -> Result<f64> {
    let df = stats.dim as f64;
    entropy_of(stats.values().iter().map(|v| v / df))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateBreakdown {
    pub model: Option<NoiseModel>,
    pub dim: usize,
    pub n_mubs: usize,
    pub reading: BoundReading,
    pub t: TPartition,
    pub overlap: OverlapBound,
    pub lambda1: f64,
    pub lambda2: f64,
    pub s_bec: f64,
    pub s_ec_upper: f64,
    pub h_a: f64,
    pub h_joint: f64,
    pub h_b_given_a: f64,
    pub r: f64,
    pub warnings: Vec<String>,
}

impl KeyRateBreakdown {
    /// |r − (S(BEC) − S(EC)_upper − H(B|A))|.
    pub fn reconstruction_residual(&self) -> f64 {
        (self.r - (self.s_bec - self.s_ec_upper - self.h_b_given_a)).abs()
    }
}

/// Evaluates the bound from arbitrary statistics (analytic or empirical).
pub fn key_rate_from_stats(
    stats: &StatsTensor,
    joint: &RawKeyJoint,
    n_mubs: usize,
    reading: BoundReading,
) -> Result<KeyRateBreakdown> {
    let d = stats.dim;
    check_config(d, n_mubs)?;
    if joint.dim != d {
        return Err(Error::DimensionMismatch(format!(
            "raw-key table is {}×{}, statistics are for d={d}",
            joint.dim, joint.dim
        )));
    }
    let t = t_partition(stats);
    let overlap = overlap_bound(stats, n_mubs, reading.overlap)?;
    let p_diag: Vec<f64> = (0..d).map(|a| stats.p(a, a, a)).collect();
    let eig = eigen_pair(&p_diag, overlap.p_eig)?;
    let s_bec = sbec(stats)?;
    let s_ec_upper = sec_upper(&t, eig.lambda1, eig.lambda2, d, reading.eigen_entropy)?;
    let h_a = joint.h_a()?;
    let h_joint = joint.h_joint()?;
    let r = s_bec - s_ec_upper + h_a - h_joint;
    Ok(KeyRateBreakdown {
        model: None,
        dim: d,
        n_mubs,
        reading,
        t,
        overlap,
        lambda1: eig.lambda1,
        lambda2: eig.lambda2,
        s_bec,
        s_ec_upper,
        h_a,
        h_joint,
        h_b_given_a: h_joint - h_a,
        r,
        warnings: eig.warning.into_iter().collect(),
    })
}

pub fn key_rate(model: &NoiseModel, n_mubs: usize, reading: BoundReading) -> Result<KeyRateBreakdown> {
    check_config(model.dim, n_mubs)?;
    let (stats, mut warnings) = analytic_stats(model, n_mubs)?;
    let joint = raw_key_joint(model)?;
    let mut out = key_rate_from_stats(&stats, &joint, n_mubs, reading)?;
    out.model = Some(*model);
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}
