//! An explicit symmetric attack: the Stinespring dilation of a depolarizing
//! channel, with one environment slot per generalized Pauli operator.
//!
//! Used as an oracle. Eve's states are read off the isometry directly, so the
//! unitarity constraints, the symmetry classes, the t-identities and the
//! overlap bounds can all be checked against ground truth.

use num_complex::Complex64;

use crate::channel::{check_q, MubErrorTable, StatsTensor};
use crate::error::{Error, Result};
use crate::keyrate::{check_config, overlap_rhs};
use crate::mub::{mubs_for, Basis, BasisLabel};
use crate::numerics::{c64, inner, norm_sqr, normalized_entropy, ComplexMatrix};

/// V: C^d → C^d ⊗ C^env; output index = system · env_dim + env.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackIsometry {
    pub dim: usize,
    pub env_dim: usize,
    pub v: ComplexMatrix,
}

/// Generalized Pauli X^x Z^z applied to |i⟩: ω^{z·i} |i + x⟩.
fn pauli_on_basis(d: usize, x: usize, z: usize, i: usize) -> (usize, Complex64) {
    let angle = 2.0 * std::f64::consts::PI * ((z * i) % d) as f64 / d as f64;
    ((i + x) % d, Complex64::from_polar(1.0, angle))
}

/// Dilation of ρ ↦ (1−λ)ρ + λ·I/d with λ = dQ.
pub fn depolarizing_isometry(d: usize, q: f64) -> Result<AttackIsometry> {
    check_q(d, q)?;
    let lambda = (d as f64 * q).min(1.0);
    let d2 = (d * d) as f64;
    let w_id = (1.0 - lambda + lambda / d2).sqrt();
    let w = (lambda / d2).sqrt();
    let env = d * d;
    let mut v = ComplexMatrix::zeros(d * env, d);
    for i in 0..d {
        for x in 0..d {
            for z in 0..d {
                let k = x * d + z;
                let weight = if k == 0 { w_id } else { w };
                let (out, phase) = pauli_on_basis(d, x, z, i);
                v[(out * env + k, i)] += phase * weight;
            }
        }
    }
    Ok(AttackIsometry { dim: d, env_dim: env, v })
}

/// `second ∘ first`, with the two environments kept as separate registers
/// (combined env index = e_first · second.env_dim + e_second).
pub fn compose(first: &AttackIsometry, second: &AttackIsometry) -> Result<AttackIsometry> {
    if first.dim != second.dim {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose d={} with d={}",
            first.dim, second.dim
        )));
    }
    let d = first.dim;
    let (e1, e2) = (first.env_dim, second.env_dim);
    let env = e1 * e2;
    let mut v = ComplexMatrix::zeros(d * env, d);
    for i in 0..d {
        for s in 0..d {
            for a in 0..e1 {
                let amp = first.v[(s * e1 + a, i)];
                if amp == c64(0.0, 0.0) {
                    continue;
                }
                for s2 in 0..d {
                    for b in 0..e2 {
                        let amp2 = second.v[(s2 * e2 + b, s)];
                        if amp2 != c64(0.0, 0.0) {
                            v[(s2 * env + a * e2 + b, i)] += amp * amp2;
                        }
                    }
                }
            }
        }
    }
    Ok(AttackIsometry { dim: d, env_dim: env, v })
}

/// The reflected round trip under independent forward and reverse depolarizing passes.
pub fn two_pass_attack(d: usize, q: f64) -> Result<AttackIsometry> {
    let one = depolarizing_isometry(d, q)?;
    compose(&one, &one)
}

impl AttackIsometry {
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.v.apply(psi)
    }

    /// max |V†V − I|.
    pub fn isometry_residual(&self) -> f64 {
        let vdv = &self.v.adjoint() * &self.v;
        vdv.max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    /// Eve's states relative to `basis`: V|bᵢ⟩ = Σⱼ |bⱼ⟩ ⊗ |f_{ij}⟩.
    pub fn eve_states(&self, basis: &Basis) -> Result<EveStates> {
        if basis.dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "basis {} has dimension {}, attack has {}",
                basis.label, basis.dim, self.dim
            )));
        }
        let (d, env) = (self.dim, self.env_dim);
        let mut f = Vec::with_capacity(d * d);
        for i in 0..d {
            let out = self.apply(&basis.vector(i));
            for j in 0..d {
                let bj = basis.vector(j);
                f.push(
                    (0..env)
                        .map(|e| (0..d).map(|s| bj[s].conj() * out[s * env + e]).sum())
                        .collect(),
                );
            }
        }
        Ok(EveStates { dim: d, label: basis.label, f })
    }

    /// P(i → j) in the computational basis.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let states = self
            .eve_states(&Basis::computational(self.dim))
            .expect("computational basis matches");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| states.prob(i, j)).collect())
            .collect()
    }

    /// P[Kᵢ→Kⱼ] for one basis.
    pub fn pair_errors(&self, basis: &Basis) -> Result<MubErrorTable> {
        let states = self.eve_states(basis)?;
        let d = self.dim;
        let values = (0..d * d).map(|k| states.prob(k / d, k % d)).collect();
        Ok(MubErrorTable::new(basis.label, d, values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EveStates {
    pub dim: usize,
    pub label: BasisLabel,
    f: Vec<Vec<Complex64>>,
}

/// Mean of one symmetry class with its largest deviation from the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassAverage {
    pub mean: Complex64,
    pub spread: f64,
    pub count: usize,
}

impl ClassAverage {
    fn from_values(values: &[Complex64]) -> Self {
        let count = values.len();
        let mean = values.iter().sum::<Complex64>() / count as f64;
        let spread = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
        Self { mean, spread, count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryParams {
    pub a: ClassAverage,
    pub b: ClassAverage,
    pub c: ClassAverage,
    pub z: ClassAverage,
    pub m: ClassAverage,
    pub t: ClassAverage,
}

impl SymmetryParams {
    pub fn classes(&self) -> [(&'static str, ClassAverage); 6] {
        [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("z", self.z),
            ("m", self.m),
            ("t", self.t),
        ]
    }

    pub fn max_spread(&self) -> f64 {
        self.classes().iter().map(|(_, c)| c.spread).fold(0.0, f64::max)
    }

    /// Largest |value| among the a, b, c, z, m entries (not averages).
    pub fn max_vanishing(&self) -> f64 {
        [self.a, self.b, self.c, self.z, self.m]
            .iter()
            .map(|c| c.mean.norm() + c.spread)
            .fold(0.0, f64::max)
    }
}

impl EveStates {
    pub fn get(&self, i: usize, j: usize) -> &[Complex64] {
        &self.f[i * self.dim + j]
    }

    /// ⟨f_ij|f_kl⟩.
    pub fn overlap(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        inner(self.get(i, j), self.get(k, l))
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        norm_sqr(self.get(i, j))
    }

    /// Largest |Σ_s ⟨f_is|f_js⟩ − δ_ij| over all i, j.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let sum: Complex64 = (0..d).map(|s| self.overlap(i, s, j, s)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sum - c64(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Class averages of the scalar products; class membership depends on d.
    pub fn symmetry(&self) -> SymmetryParams {
        let d = self.dim;
        let (mut a, mut b, mut c, mut z, mut m, mut t) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..d {
            for j in (0..d).filter(|&j| j != i) {
                a.push(self.overlap(i, i, i, j));
                t.push(self.overlap(i, i, j, j));
                if d == 3 {
                    z.push(self.overlap(i, j, j, i));
                } else {
                    m.push(self.overlap(i, j, j, i));
                }
                for k in (0..d).filter(|&k| k != i && k != j) {
                    b.push(self.overlap(i, i, j, k));
                    c.push(self.overlap(i, j, i, k));
                    if d == 3 {
                        m.push(self.overlap(i, j, k, i));
                    } else {
                        // ⟨f_ij|f_jh⟩ with i, j, h distinct.
                        z.push(self.overlap(i, j, j, k));
                        for l in (0..d).filter(|&l| l != i && l != j && l != k) {
                            m.push(self.overlap(i, j, k, l));
                        }
                    }
                }
            }
        }
        SymmetryParams {
            a: ClassAverage::from_values(&a),
            b: ClassAverage::from_values(&b),
            c: ClassAverage::from_values(&c),
            z: ClassAverage::from_values(&z),
            m: ClassAverage::from_values(&m),
            t: ClassAverage::from_values(&t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// t from the computational-basis Gram entries vs. t predicted from the MUB
/// error rates and Re(m).
pub fn check_t_identity(n_mubs: usize, attack: &AttackIsometry) -> Result<TIdentityCheck> {
    let d = attack.dim;
    check_config(d, n_mubs)?;
    let family = mubs_for(d)?;
    let sym = attack.eve_states(&Basis::computational(d))?.symmetry();
    let lhs = sym.t.mean.re;
    let re_m = sym.m.mean.re;
    let errors: f64 = family
        .test_bases(n_mubs)?
        .iter()
        .map(|b| attack.pair_errors(b).map(|t| t.error_sum()))
        .sum::<Result<f64>>()?;
    let (coef, m_coef) = match (d, n_mubs) {
        (3, 3) => (0.25, 0.5),
        (3, 4) => (1.0 / 6.0, 0.0),
        (4, 2) => (1.0 / 3.0, 3.0),
        (4, 3) => (1.0 / 6.0, 1.0),
        (4, 4) => (1.0 / 9.0, 1.0 / 3.0),
        _ => (1.0 / 12.0, 0.0),
    };
    let rhs = 1.0 - coef * errors - m_coef * re_m;
    Ok(TIdentityCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Everything the oracle knows about one noise level: the observable
/// statistics it induces and Eve's actual no-error states.
#[derive(Debug, Clone)]
pub struct OracleRecord {
    pub stats: StatsTensor,
    /// ⟨e_aaa|e_bbb⟩ for the measure-resend rounds.
    pub gram: ComplexMatrix,
    /// Re Σ_{a<b} ⟨e_aaa|e_bbb⟩.
    pub x_true: f64,
    /// Σ_{a<b} |⟨e_aaa|e_bbb⟩|².
    pub p_true: f64,
}

impl OracleRecord {
    /// Von Neumann entropy of the normalized no-error operator.
    pub fn sigma1_entropy(&self) -> Result<f64> {
        normalized_entropy(&self.gram)
    }

    pub fn t1(&self) -> f64 {
        self.gram.trace().re
    }
}

/// Independent forward and reverse depolarizing attacks at noise `q`.
///
/// Measure-resend rounds give Eve e_{abc} = f_ab ⊗ f_bc (one register per
/// pass); reflected rounds see the composed isometry.
pub fn oracle_record(d: usize, q: f64, n_mubs: usize) -> Result<OracleRecord> {
    check_config(d, n_mubs)?;
    let one = depolarizing_isometry(d, q)?;
    let fwd = one.eve_states(&Basis::computational(d))?;
    let both = compose(&one, &one)?;

    let mut p = Vec::with_capacity(d * d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                p.push(fwd.prob(a, b) * fwd.prob(b, c));
            }
        }
    }
    let family = mubs_for(d)?;
    let tables = family
        .test_bases(n_mubs)?
        .iter()
        .map(|b| both.pair_errors(b))
        .collect::<Result<Vec<_>>>()?;
    let stats = StatsTensor::from_values(d, p, tables)?;

    let gram = ComplexMatrix::from_fn(d, d, |a, b| fwd.overlap(a, a, b, b) * fwd.overlap(a, a, b, b));
    let mut x_true = 0.0;
    let mut p_true = 0.0;
    for a in 0..d {
        for b in a + 1..d {
            x_true += gram[(a, b)].re;
            p_true += gram[(a, b)].norm_sqr();
        }
    }
    Ok(OracleRecord {
        stats,
        gram,
        x_true,
        p_true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSlack {
    pub rhs: f64,
    pub x_true: f64,
    /// x_true − rhs; a valid bound has slack ≥ 0.
    pub slack: f64,
}

/// Compares the overlap inequality, fed with the oracle's own statistics,
/// against the oracle's true overlap sum.
pub fn bound_slack(d: usize, n_mubs: usize, q: f64) -> Result<BoundSlack> {
    let rec = oracle_record(d, q, n_mubs)?;
    let rhs = overlap_rhs(&rec.stats, n_mubs)?;
    Ok(BoundSlack {
        rhs,
        x_true: rec.x_true,
        slack: rec.x_true - rhs,
    })
}

/// All oracle checks for one (d, n_mubs, Q), over both the single-pass and
/// the composed two-pass attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraCheck {
    pub d: usize,
    pub n_mubs: usize,
    pub q: f64,
    pub isometry_residual: f64,
    pub unitarity_residual: f64,
    pub symmetry_spread: f64,
    /// Largest |a|, |b|, |c|, |z|, |m| entry.
    pub max_vanishing: f64,
    pub t_residual: f64,
    pub bound: BoundSlack,
}

pub fn verify_algebra(d: usize, n_mubs: usize, q: f64) -> Result<AlgebraCheck> {
    check_config(d, n_mubs)?;
    let one = depolarizing_isometry(d, q)?;
    let both = compose(&one, &one)?;
    let comp = Basis::computational(d);
    let mut check = AlgebraCheck {
        d,
        n_mubs,
        q,
        isometry_residual: 0.0,
        unitarity_residual: 0.0,
        symmetry_spread: 0.0,
        max_vanishing: 0.0,
        t_residual: 0.0,
        bound: bound_slack(d, n_mubs, q)?,
    };
    for attack in [&one, &both] {
        let states = attack.eve_states(&comp)?;
        let sym = states.symmetry();
        check.isometry_residual = check.isometry_residual.max(attack.isometry_residual());
        check.unitarity_residual = check.unitarity_residual.max(states.unitarity_residual());
        check.symmetry_spread = check.symmetry_spread.max(sym.max_spread());
        check.max_vanishing = check.max_vanishing.max(sym.max_vanishing());
        check.t_residual = check.t_residual.max(check_t_identity(n_mubs, attack)?.residual);
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::transition_matrix;

    #[test]
    fn zero_noise_embeds() {
        for d in [3, 4] {
            let v = depolarizing_isometry(d, 0.0).unwrap();
            let s = v.eve_states(&Basis::computational(d)).unwrap();
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        assert!((s.overlap(i, i, 0, 0) - c64(1.0, 0.0)).norm() < 1e-15);
                    } else {
                        assert_eq!(s.prob(i, j), 0.0);
                    }
                }
            }
            let sym = s.symmetry();
            assert!((sym.t.mean.re - 1.0).abs() < 1e-15);
            assert!(sym.max_vanishing() < 1e-15);
        }
    }

    #[test]
    fn isometry_and_induced_channel() {
        for d in [3, 4] {
            for k in 0..=10 {
                let q = k as f64 / (10.0 * d as f64);
                let v = depolarizing_isometry(d, q).unwrap();
                assert!(v.isometry_residual() < 1e-12);
                let t = transition_matrix(d, q).unwrap();
                let got = v.transition_matrix();
                for i in 0..d {
                    for j in 0..d {
                        assert!((got[i][j] - t[i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn single_pass_mub_error_is_q() {
        let v = depolarizing_isometry(3, 0.05).unwrap();
        let x = &mubs_for(3).unwrap().bases[1];
        let table = v.pair_errors(x).unwrap();
        assert!((table.get(0, 1) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn composed_attack_accumulates_error() {
        for (d, q) in [(3, 0.05), (4, 0.03)] {
            let v = two_pass_attack(d, q).unwrap();
            assert!(v.isometry_residual() < 1e-12);
            let total = crate::channel::two_pass_error(d, q);
            for b in mubs_for(d).unwrap().test_bases(d + 1).unwrap() {
                let table = v.pair_errors(b).unwrap();
                for i in 0..d {
                    let row: f64 = (0..d).filter(|&j| j != i).map(|j| table.get(i, j)).sum();
                    assert!((row - total).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_classes() {
        for d in [3, 4] {
            let v = depolarizing_isometry(d, 0.04).unwrap();
            let sym = v.eve_states(&Basis::computational(d)).unwrap().symmetry();
            assert!(sym.max_spread() < 1e-12);
            assert!(sym.max_vanishing() < 1e-10);
            assert!((sym.t.mean.re - (1.0 - d as f64 * 0.04)).abs() < 1e-12);
        }
    }

    #[test]
    fn t_identities() {
        for d in [3, 4] {
            for &n in crate::keyrate::supported_mubs(d) {
                for q in [0.0, 0.02, 0.03] {
                    let r = check_t_identity(n, &depolarizing_isometry(d, q).unwrap()).unwrap();
                    assert!(r.residual < 1e-9, "d={d} n={n} q={q}: {r:?}");
                }
            }
        }
        let r = check_t_identity(3, &depolarizing_isometry(3, 0.0).unwrap()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_true_overlaps() {
        let rec = oracle_record(3, 0.0, 3).unwrap();
        assert!((rec.x_true - 3.0).abs() < 1e-12);
        let q = 0.02;
        let rec = oracle_record(4, q, 5).unwrap();
        let y = (1.0 - 4.0 * q).powi(2);
        assert!((rec.x_true - 6.0 * y).abs() < 1e-12);
        assert!((rec.p_true - 6.0 * y * y).abs() < 1e-12);
        rec.stats.validate(1e-12).unwrap();
    }

    #[test]
    fn full_algebra_report() {
        for d in [3, 4] {
            for &n in crate::keyrate::supported_mubs(d) {
                let c = verify_algebra(d, n, 0.03).unwrap();
                assert!(c.isometry_residual < 1e-12, "{c:?}");
                assert!(c.unitarity_residual < 1e-12, "{c:?}");
                assert!(c.symmetry_spread < 1e-12, "{c:?}");
                assert!(c.max_vanishing < 1e-10, "{c:?}");
                assert!(c.t_residual < 1e-9, "{c:?}");
            }
        }
    }

    #[test]
    fn bounds_hold_for_oracle() {
        for d in [3, 4] {
            for &n in crate::keyrate::supported_mubs(d) {
                for q in [0.0, 0.01, 0.02, 0.03, 0.05] {
                    let s = bound_slack(d, n, q).unwrap();
                    assert!(s.slack >= -1e-9, "d={d} n={n} q={q}: {s:?}");
                }
            }
        }
    }
}
