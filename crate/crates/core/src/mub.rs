//! The qutrit and ququart mutually unbiased bases used by the protocol.
//!
//! Vectors are stored exactly as written in the protocol description (no
//! re-phasing or reordering) so that an error label such as `P[X0→X1]` or
//! `P[A2→A3]` refers to the same physical states as the bound formulas.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{c64, inner, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisLabel {
    Comp,
    X,
    Y,
    Z,
    A,
    B,
    C,
    D,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BasisLabel::Comp => "COMP",
            BasisLabel::X => "X",
            BasisLabel::Y => "Y",
            BasisLabel::Z => "Z",
            BasisLabel::A => "A",
            BasisLabel::B => "B",
            BasisLabel::C => "C",
            BasisLabel::D => "D",
        };
        f.write_str(s)
    }
}

/// An orthonormal basis of C^d; vector `i` is column `i` of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub dim: usize,
    pub label: BasisLabel,
    pub vectors: ComplexMatrix,
}

impl Basis {
    pub fn new(label: BasisLabel, columns: Vec<Vec<Complex64>>) -> Self {
        let vectors = ComplexMatrix::from_columns(&columns);
        Self {
            dim: vectors.rows(),
            label,
            vectors,
        }
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            dim,
            label: BasisLabel::Comp,
            vectors: ComplexMatrix::identity(dim),
        }
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i)
    }

    /// max |⟨vᵢ|vⱼ⟩ − δᵢⱼ|.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            let vi = self.vector(i);
            for j in 0..self.dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(&vi, &self.vector(j)) - c64(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// An ordered family of bases, computational basis first.
#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily {
    pub dim: usize,
    pub bases: Vec<Basis>,
}

impl MubFamily {
    /// The first `n_mubs` bases (computational included).
    pub fn active(&self, n_mubs: usize) -> Result<&[Basis]> {
        if n_mubs < 1 || n_mubs > self.bases.len() {
            return Err(Error::UnsupportedConfig {
                d: self.dim,
                n_mubs,
            });
        }
        Ok(&self.bases[..n_mubs])
    }

    /// Non-computational bases among the first `n_mubs`.
    pub fn test_bases(&self, n_mubs: usize) -> Result<&[Basis]> {
        Ok(&self.active(n_mubs)?[1..])
    }

    /// Largest unbiasedness deviation over every pair of distinct bases.
    pub fn max_pair_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, b1) in self.bases.iter().enumerate() {
            for b2 in &self.bases[i + 1..] {
                worst = worst.max(verify_unbiased(b1, b2).expect("same dimension"));
            }
        }
        worst
    }
}

/// Qutrit family {COMP, X, Y, Z}; η = e^{2πi/3}.
pub fn qutrit_mubs() -> MubFamily {
    let s = 1.0 / 3f64.sqrt();
    let one = c64(s, 0.0);
    let eta = Complex64::from_polar(s, 2.0 * PI / 3.0);
    let eta_c = eta.conj();

    let x = Basis::new(
        BasisLabel::X,
        vec![
            vec![one, one, one],
            vec![one, eta, eta_c],
            vec![one, eta_c, eta],
        ],
    );
    let y = Basis::new(
        BasisLabel::Y,
        vec![
            vec![eta, one, one],
            vec![one, eta, one],
            vec![one, one, eta],
        ],
    );
    // Y with η replaced by η*.
    let z = Basis::new(
        BasisLabel::Z,
        vec![
            vec![eta_c, one, one],
            vec![one, eta_c, one],
            vec![one, one, eta_c],
        ],
    );
    MubFamily {
        dim: 3,
        bases: vec![Basis::computational(3), x, y, z],
    }
}

/// Ququart family {COMP, A, B, C, D}; all coefficients are ±½ or ±i/2.
pub fn ququart_mubs() -> MubFamily {
    let p = c64(0.5, 0.0);
    let m = c64(-0.5, 0.0);
    let pi = c64(0.0, 0.5);
    let mi = c64(0.0, -0.5);

    let a = Basis::new(
        BasisLabel::A,
        vec![
            vec![p, p, p, p],
            vec![p, p, m, m],
            vec![p, m, m, p],
            vec![p, m, p, m],
        ],
    );
    let b = Basis::new(
        BasisLabel::B,
        vec![
            vec![p, m, mi, mi],
            vec![p, m, pi, pi],
            vec![p, p, pi, mi],
            vec![p, p, mi, pi],
        ],
    );
    let c = Basis::new(
        BasisLabel::C,
        vec![
            vec![p, mi, mi, m],
            vec![p, mi, pi, p],
            vec![p, pi, pi, m],
            vec![p, pi, mi, p],
        ],
    );
    let d = Basis::new(
        BasisLabel::D,
        vec![
            vec![p, mi, m, mi],
            vec![p, mi, p, pi],
            vec![p, pi, m, pi],
            vec![p, pi, p, mi],
        ],
    );
    MubFamily {
        dim: 4,
        bases: vec![Basis::computational(4), a, b, c, d],
    }
}

pub fn mubs_for(dim: usize) -> Result<MubFamily> {
    match dim {
        3 => Ok(qutrit_mubs()),
        4 => Ok(ququart_mubs()),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// max over v ∈ b1, w ∈ b2 of ||⟨v|w⟩| − 1/√d|.
pub fn verify_unbiased(b1: &Basis, b2: &Basis) -> Result<f64> {
    if b1.dim != b2.dim {
        return Err(Error::DimensionMismatch(format!(
            "basis {} has dimension {}, basis {} has dimension {}",
            b1.label, b1.dim, b2.label, b2.dim
        )));
    }
    let target = 1.0 / (b1.dim as f64).sqrt();
    let mut worst = 0.0_f64;
    for i in 0..b1.dim {
        let v = b1.vector(i);
        for j in 0..b2.dim {
            worst = worst.max((inner(&v, &b2.vector(j)).norm() - target).abs());
        }
    }
    Ok(worst)
}
