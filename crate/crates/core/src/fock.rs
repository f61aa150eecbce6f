//! Antisymmetric Fock space over `C^n` with Jordan–Wigner field operators.
//!
//! Basis vectors are occupation bitstrings `(n_1, …, n_modes)` ordered
//! lexicographically, so mode `j` (0-based) is bit `modes − 1 − j` of the basis
//! index and the vacuum is index 0. The annihilator of mode `j` carries the
//! sign string `(−1)^{n_0 + … + n_{j−1}}` over the lower-index modes. With this
//! ordering, the basis vector with occupied set `s_1 < … < s_k` is exactly
//! `a*(e_{s_1})⋯a*(e_{s_k})Ω`.
//!
//! Inner products are antilinear in the first argument, `a(f)` is antilinear
//! in `f` and `a*(f)a(g) + a(g)a*(f) = ⟨g, f⟩·1`.

use crate::error::{Error, Result};
use crate::opalg::{Operator, Vector, ONE, ZERO};

pub const MAX_MODES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Creation,
    Annihilation,
}

/// A field operator together with the one-particle vector it was built from.
#[derive(Clone, Debug)]
pub struct FieldOperator {
    pub kind: FieldKind,
    pub argument: Vector,
    pub matrix: Operator,
}

pub fn build_space(modes: usize) -> Result<FockSpace> {
    FockSpace::new(modes)
}

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self> {
        if modes > MAX_MODES {
            return Err(Error::TooManyModes {
                modes,
                cap: MAX_MODES,
            });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    fn bit(&self, mode: usize) -> usize {
        1 << (self.modes - 1 - mode)
    }

    pub fn is_occupied(&self, index: usize, mode: usize) -> bool {
        index & self.bit(mode) != 0
    }

    /// Occupied modes of a basis vector, ascending.
    pub fn occupied_modes(&self, index: usize) -> Vec<usize> {
        (0..self.modes)
            .filter(|&m| self.is_occupied(index, m))
            .collect()
    }

    pub fn basis_index(&self, occupied: &[usize]) -> usize {
        occupied.iter().fold(0, |acc, &m| acc | self.bit(m))
    }

    pub fn particle_number(&self, index: usize) -> u32 {
        index.count_ones()
    }

    /// Number of occupied modes strictly below `mode`.
    fn occupied_below(&self, index: usize, mode: usize) -> u32 {
        if mode == 0 {
            0
        } else {
            (index >> (self.modes - mode)).count_ones()
        }
    }

    fn jw_sign(&self, index: usize, mode: usize) -> f64 {
        if self.occupied_below(index, mode) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn vacuum(&self) -> Vector {
        Vector::from_fn(self.dim(), |i, _| if i == 0 { ONE } else { ZERO })
    }

    pub fn basis_vector(&self, index: usize) -> Vector {
        Vector::from_fn(self.dim(), |i, _| if i == index { ONE } else { ZERO })
    }

    fn check_arg(&self, op: &'static str, f: &Vector) -> Result<()> {
        if f.len() != self.modes {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.modes,
                actual: f.len(),
            });
        }
        Ok(())
    }

    /// `a(f) = Σ_j conj(f_j) c_j`.
    pub fn annihilator(&self, f: &Vector) -> Result<Operator> {
        self.check_arg("annihilator", f)?;
        let dim = self.dim();
        let mut m = Operator::zeros(dim, dim).into_matrix();
        for s in 0..dim {
            for j in 0..self.modes {
                if self.is_occupied(s, j) && f[j] != ZERO {
                    let target = s ^ self.bit(j);
                    m[(target, s)] += f[j].conj() * self.jw_sign(s, j);
                }
            }
        }
        Ok(Operator::from_matrix(m))
    }

    /// `a*(f) = a(f)*`, linear in `f`.
    pub fn creator(&self, f: &Vector) -> Result<Operator> {
        self.check_arg("creator", f)?;
        Ok(self.annihilator(f)?.adjoint())
    }

    pub fn field(&self, kind: FieldKind, f: &Vector) -> Result<FieldOperator> {
        let matrix = match kind {
            FieldKind::Creation => self.creator(f)?,
            FieldKind::Annihilation => self.annihilator(f)?,
        };
        Ok(FieldOperator {
            kind,
            argument: f.clone(),
            matrix,
        })
    }

    pub fn mode_annihilator(&self, mode: usize) -> Operator {
        self.annihilator(&self.unit(mode))
            .expect("unit vector has the right length")
    }

    pub fn mode_creator(&self, mode: usize) -> Operator {
        self.mode_annihilator(mode).adjoint()
    }

    /// One-particle basis vector `e_mode`.
    pub fn unit(&self, mode: usize) -> Vector {
        Vector::from_fn(self.modes, |i, _| if i == mode { ONE } else { ZERO })
    }

    /// Apply `a*(f)` to a Fock vector without forming the matrix.
    pub fn apply_creator(&self, f: &Vector, v: &Vector) -> Result<Vector> {
        self.check_arg("apply_creator", f)?;
        let mut out = Vector::zeros(self.dim());
        for s in 0..self.dim() {
            if v[s] == ZERO {
                continue;
            }
            for j in 0..self.modes {
                if !self.is_occupied(s, j) && f[j] != ZERO {
                    let target = s | self.bit(j);
                    out[target] += f[j] * self.jw_sign(s, j) * v[s];
                }
            }
        }
        Ok(out)
    }

    /// Grading operator Γ: `+1` on even, `−1` on odd particle number.
    pub fn parity(&self) -> Operator {
        let diag: Vec<_> = (0..self.dim())
            .map(|s| {
                if self.particle_number(s) % 2 == 0 {
                    ONE
                } else {
                    -ONE
                }
            })
            .collect();
        Operator::from_diagonal(&diag)
    }

    /// `f_1 ∧ … ∧ f_k = a*(f_1)⋯a*(f_k)Ω`. Linearly dependent inputs give zero.
    pub fn wedge_vector(&self, vectors: &[Vector]) -> Result<Vector> {
        if vectors.len() > self.modes {
            // more vectors than modes are necessarily dependent
            for f in vectors {
                self.check_arg("wedge_vector", f)?;
            }
            return Ok(Vector::zeros(self.dim()));
        }
        let mut v = self.vacuum();
        for f in vectors.iter().rev() {
            v = self.apply_creator(f, &v)?;
        }
        Ok(v)
    }

    /// Second quantization Γ(V): `Γ(V)(f_1∧…∧f_k) = Vf_1∧…∧Vf_k`.
    pub fn second_quantization(&self, v: &Operator) -> Result<Operator> {
        if v.rows() != self.modes || v.cols() != self.modes {
            return Err(Error::DimensionMismatch {
                op: "second_quantization",
                expected: self.modes,
                actual: v.rows(),
            });
        }
        let dim = self.dim();
        let mut m = Operator::zeros(dim, dim).into_matrix();
        for s in 0..dim {
            let images: Vec<Vector> = self
                .occupied_modes(s)
                .into_iter()
                .map(|j| v.column(j))
                .collect();
            let col = self.wedge_vector(&images)?;
            m.set_column(s, &col);
        }
        Ok(Operator::from_matrix(m))
    }

    /// Normal-ordered monomials `a*(e_S) a(e_T)` over all subset pairs, with
    /// `a*(e_S)` the product of mode creators in ascending order and `a(e_T)`
    /// the product of mode annihilators in descending order.
    pub fn monomial_subsets(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.modes;
        let mut out = Vec::with_capacity(1 << (2 * n));
        for s in 0..(1usize << n) {
            for t in 0..(1usize << n) {
                let ss: Vec<usize> = (0..n).filter(|&j| s & (1 << j) != 0).collect();
                let tt: Vec<usize> = (0..n).filter(|&j| t & (1 << j) != 0).collect();
                out.push((ss, tt));
            }
        }
        out
    }
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::c;
    use crate::opalg::{hs_norm, inner, operator_norm};
    use crate::random::{random_matrix, random_unitary, random_vector, rng};

    #[test]
    fn space_dimensions() {
        assert_eq!(build_space(0).unwrap().dim(), 1);
        assert_eq!(build_space(1).unwrap().dim(), 2);
        assert_eq!(build_space(3).unwrap().dim(), 8);
        assert!(matches!(
            build_space(13),
            Err(Error::TooManyModes { modes: 13, cap: 12 })
        ));
        let s = build_space(0).unwrap();
        assert_eq!(s.vacuum().len(), 1);
    }

    #[test]
    fn annihilator_kills_vacuum_and_creator_fills_mode() {
        let s = build_space(3).unwrap();
        let a = s.annihilator(&s.unit(0)).unwrap();
        assert!(a.apply(&s.vacuum()).norm() == 0.0);
        let v = s.creator(&s.unit(0)).unwrap().apply(&s.vacuum());
        assert_eq!(v, s.basis_vector(s.basis_index(&[0])));
    }

    #[test]
    fn car_identities_random() {
        let mut r = rng(11);
        for modes in 1..=4 {
            let s = build_space(modes).unwrap();
            let id = Operator::identity(s.dim());
            for _ in 0..10 {
                let f = random_vector(&mut r, modes);
                let g = random_vector(&mut r, modes);
                let af = s.annihilator(&f).unwrap();
                let ag = s.annihilator(&g).unwrap();
                assert!(hs_norm(&af.anticommutator(&ag)) < 1e-12);
                let mixed = s.creator(&f).unwrap().anticommutator(&ag);
                let expected = id.scale(inner(&g, &f));
                assert!(hs_norm(&(&mixed - &expected)) < 1e-12);
            }
        }
    }

    #[test]
    fn unit_vector_mixed_anticommutator_is_identity() {
        let s = build_space(3).unwrap();
        let mut f = Vector::from_vec(vec![c(1.0, 1.0), c(0.5, 0.0), c(0.0, -0.5)]);
        f /= c(f.norm(), 0.0);
        let anti = s.creator(&f).unwrap().anticommutator(&s.annihilator(&f).unwrap());
        assert!(hs_norm(&(&anti - &Operator::identity(8))) < 1e-12);
        let g = Vector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let h = Vector::from_vec(vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let anti = s.creator(&g).unwrap().anticommutator(&s.annihilator(&h).unwrap());
        assert!(hs_norm(&anti) < 1e-14);
    }

    #[test]
    fn annihilator_is_antilinear() {
        let mut r = rng(12);
        let s = build_space(3).unwrap();
        let f = random_vector(&mut r, 3);
        let g = random_vector(&mut r, 3);
        let lam = c(0.3, -1.7);
        let lhs = s.annihilator(&(f.clone() * lam + &g)).unwrap();
        let rhs = &s.annihilator(&f).unwrap().scale(lam.conj()) + &s.annihilator(&g).unwrap();
        assert!(hs_norm(&(&lhs - &rhs)) < 1e-13);
    }

    #[test]
    fn field_norm_equals_vector_norm() {
        let mut r = rng(13);
        let s = build_space(4).unwrap();
        for _ in 0..5 {
            let f = random_vector(&mut r, 4);
            let a = s.annihilator(&f).unwrap();
            assert!((operator_norm(&a) - f.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn parity_properties() {
        let mut r = rng(14);
        let s = build_space(3).unwrap();
        let gamma = s.parity();
        let id = Operator::identity(8);
        assert_eq!(&gamma * &gamma, id);
        assert_eq!(gamma.adjoint(), gamma);
        assert_eq!(gamma.apply(&s.vacuum()), s.vacuum());
        let one = s.creator(&s.unit(0)).unwrap().apply(&s.vacuum());
        assert_eq!(gamma.apply(&one), -one);
        let f = random_vector(&mut r, 3);
        let a = s.annihilator(&f).unwrap();
        assert_eq!(gamma.anticommutator(&a).max_abs(), 0.0);
    }

    #[test]
    fn wedge_vectors() {
        let mut r = rng(15);
        let s = build_space(4).unwrap();
        assert_eq!(s.wedge_vector(&[]).unwrap(), s.vacuum());
        let f = random_vector(&mut r, 4);
        let g = random_vector(&mut r, 4);
        let h = random_vector(&mut r, 4);
        let fgh = s.wedge_vector(&[f.clone(), g.clone(), h.clone()]).unwrap();
        let gfh = s.wedge_vector(&[g.clone(), f.clone(), h.clone()]).unwrap();
        assert!((fgh.clone() + gfh).norm() < 1e-12);
        let ff = s.wedge_vector(&[f.clone(), f.clone()]).unwrap();
        assert!(ff.norm() < 1e-12);
        // ⟨f∧g, f∧g⟩ is the Gram determinant
        let fg = s.wedge_vector(&[f.clone(), g.clone()]).unwrap();
        let gram = inner(&f, &f) * inner(&g, &g) - inner(&f, &g) * inner(&g, &f);
        assert!((inner(&fg, &fg) - gram).norm() < 1e-10);
        // ascending basis wedges are the basis vectors
        let e = s.wedge_vector(&[s.unit(1), s.unit(3)]).unwrap();
        assert_eq!(e, s.basis_vector(s.basis_index(&[1, 3])));
    }

    #[test]
    fn field_monomials_span_full_matrix_algebra() {
        for modes in 1..=3 {
            let s = build_space(modes).unwrap();
            let dim = s.dim();
            let mut rows = Vec::new();
            for (ss, tt) in s.monomial_subsets() {
                let mut x = Operator::identity(dim);
                for &j in &ss {
                    x = &x * &s.mode_creator(j);
                }
                for &j in tt.iter().rev() {
                    x = &x * &s.mode_annihilator(j);
                }
                rows.extend(x.entries());
            }
            let count = 1 << (2 * modes);
            let stacked = Operator::from_row_major(count, dim * dim, &rows).unwrap();
            assert_eq!(stacked.rank(1e-10), dim * dim);
        }
    }

    #[test]
    fn second_quantization_intertwines_creators() {
        let mut r = rng(16);
        let s = build_space(3).unwrap();
        let v = random_unitary(&mut r, 3);
        let gv = s.second_quantization(&v).unwrap();
        assert!(gv.unitarity_residual() < 1e-10);
        let f = random_vector(&mut r, 3);
        let lhs = &(&gv * &s.creator(&f).unwrap()) * &gv.adjoint();
        let rhs = s.creator(&v.apply(&f)).unwrap();
        assert!(hs_norm(&(&lhs - &rhs)) < 1e-10);
        let _ = random_matrix(&mut r, 1, 1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = build_space(3).unwrap();
        let f = Vector::zeros(2);
        assert!(matches!(
            s.annihilator(&f),
            Err(Error::DimensionMismatch { expected: 3, actual: 2, .. })
        ));
    }
}
