//! Clifford algebra representations in dimensions 1 to 3.
//!
//! Conventions are fixed once here:
//! * dim 1: `c₁ = i`
//! * dim 2: `c₁ = iσ₁`, `c₂ = iσ₂`, `Γ = σ₃`
//! * dim 3: `c_j = iσ_j`
//!
//! Generators are skew-adjoint with `c_j² = −1`, so `2πi·c(v)` is Hermitian for
//! real `v`.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, I, ONE, ZERO};

pub fn pauli(j: usize) -> CMat {
    match j {
        1 => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("Pauli index must be 1, 2 or 3"),
    }
}

#[derive(Clone, Debug)]
pub struct CliffordRep {
    dim: usize,
    generators: Vec<CMat>,
    chirality: Option<CMat>,
}

impl CliffordRep {
    pub fn build(dim: usize) -> Result<Self> {
        let (generators, chirality) = match dim {
            1 => (vec![CMat::from_element(1, 1, I)], None),
            2 => (vec![pauli(1) * I, pauli(2) * I], Some(pauli(3))),
            3 => ((1..=3).map(|j| pauli(j) * I).collect(), None),
            _ => return Err(Error::UnsupportedDimension { dim }),
        };
        Ok(Self { dim, generators, chirality })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size of the spinor module, `2^⌊dim/2⌋` (dimension 3 uses 2×2 Pauli matrices).
    pub fn size(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> &CMat {
        &self.generators[j]
    }

    pub fn chirality(&self) -> Option<&CMat> {
        self.chirality.as_ref()
    }

    /// `Σ_j v_j c_j`.
    pub fn mult(&self, v: &[C64]) -> Result<CMat> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for (c, x) in self.generators.iter().zip(v) {
            out += c * *x;
        }
        Ok(out)
    }

    pub fn mult_real(&self, v: &[f64]) -> Result<CMat> {
        let v: Vec<C64> = v.iter().map(|x| C64::new(*x, 0.0)).collect();
        self.mult(&v)
    }

    /// `tr(Γ·M)`.
    pub fn supertrace(&self, m: &CMat) -> Result<C64> {
        let gamma = self.chirality.as_ref().ok_or(Error::NoGrading { dim: self.dim })?;
        let n = self.size();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        Ok((gamma * m).trace())
    }

    /// Clifford action of the collar coordinate `∂/∂x` on `[0,a] × T²`, equal to `−iΓ`.
    ///
    /// Together with `c₁, c₂` this gives a dim-3 representation with volume
    /// element `c_x c₁ c₂ = −1`.
    pub fn collar_normal(&self) -> Result<CMat> {
        let gamma = self.chirality.as_ref().ok_or(Error::NoGrading { dim: self.dim })?;
        Ok(gamma * (-I))
    }

    /// Largest deviation from the defining relations: anticommutation,
    /// skew-adjointness and (in even dimension) the grading identities.
    pub fn relation_residual(&self) -> f64 {
        let n = self.size();
        let id = CMat::identity(n, n);
        let mut worst: f64 = 0.0;
        for (j, cj) in self.generators.iter().enumerate() {
            worst = worst.max((cj.adjoint() + cj).norm());
            for (k, ck) in self.generators.iter().enumerate() {
                let target = if j == k { &id * C64::new(-2.0, 0.0) } else { CMat::zeros(n, n) };
                worst = worst.max((cj * ck + ck * cj - target).norm());
            }
            if let Some(g) = &self.chirality {
                worst = worst.max((g * cj + cj * g).norm());
            }
        }
        if let Some(g) = &self.chirality {
            worst = worst.max((g.adjoint() - g).norm());
            worst = worst.max((g * g - &id).norm());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMat, b: &CMat) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn relations_hold_in_every_dimension() {
        for dim in 1..=3 {
            let rep = CliffordRep::build(dim).unwrap();
            assert_eq!(rep.relation_residual(), 0.0, "dim {dim}");
        }
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        assert!(matches!(CliffordRep::build(0), Err(Error::UnsupportedDimension { dim: 0 })));
        let msg = CliffordRep::build(4).unwrap_err().to_string();
        assert!(msg.contains("1..=3"));
    }

    #[test]
    fn conventions_in_dim_two() {
        let rep = CliffordRep::build(2).unwrap();
        assert!(close(rep.chirality().unwrap(), &pauli(3)));
        assert!(close(&rep.mult_real(&[1.0, 0.0]).unwrap(), &(pauli(1) * I)));
        assert!(close(&rep.mult_real(&[0.0, 0.0]).unwrap(), &CMat::zeros(2, 2)));
    }

    #[test]
    fn triple_product_in_dim_three_is_identity() {
        let rep = CliffordRep::build(3).unwrap();
        let c = rep.generators();
        // (iσ1)(iσ2)(iσ3) = −i·σ1σ2σ3 = −i·i = 1
        assert!(close(&(&c[0] * &c[1] * &c[2]), &CMat::identity(2, 2)));
    }

    #[test]
    fn supertrace_examples() {
        let rep = CliffordRep::build(2).unwrap();
        let c = rep.generators();
        assert_eq!(rep.supertrace(&CMat::identity(2, 2)).unwrap(), ZERO);
        assert_eq!(rep.supertrace(&c[0]).unwrap(), ZERO);
        // σ3·(iσ1)(iσ2) = −σ3·iσ3 = −i·1, trace −2i
        let st = rep.supertrace(&(&c[0] * &c[1])).unwrap();
        assert!((st - C64::new(0.0, -2.0)).norm() < 1e-15);
        assert!(matches!(
            CliffordRep::build(3).unwrap().supertrace(&CMat::identity(2, 2)),
            Err(Error::NoGrading { dim: 3 })
        ));
    }

    #[test]
    fn dimension_mismatch_in_mult() {
        let rep = CliffordRep::build(2).unwrap();
        assert!(matches!(rep.mult_real(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn collar_normal_completes_a_dim_three_representation() {
        let rep = CliffordRep::build(2).unwrap();
        let cx = rep.collar_normal().unwrap();
        let c = rep.generators();
        assert!(close(&(&cx * &cx), &(CMat::identity(2, 2) * C64::new(-1.0, 0.0))));
        for cj in c {
            assert!(close(&(&cx * cj + cj * &cx), &CMat::zeros(2, 2)));
        }
        assert!(close(&(&cx * &c[0] * &c[1]), &(CMat::identity(2, 2) * C64::new(-1.0, 0.0))));
    }
}
