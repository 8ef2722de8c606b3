//! Fiberwise linear algebra: symplectic pairings, tamings, integral lattices
//! and their types, and the classical membership tests.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, QMatrix, ZMatrix};

/// A real symplectic vector space `(R^{2n}, omega)` with `omega` given exactly
/// in a chosen basis: `omega(x, y) = x^T * omega * y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticSpace {
    omega: QMatrix,
}

impl SymplecticSpace {
    pub fn new(omega: QMatrix) -> Result<Self> {
        if !omega.is_square() || omega.rows() == 0 || !omega.rows().is_multiple_of(2) {
            return Err(Error::InvalidPairing);
        }
        if omega.add(&omega.transpose()).is_zero() && !omega.det().is_zero() {
            Ok(SymplecticSpace { omega })
        } else {
            Err(Error::InvalidPairing)
        }
    }

    /// Block form `[[0, I], [-I, 0]]`.
    pub fn standard(n: usize) -> Self {
        let mut omega = QMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega[(i, n + i)] = int(1);
            omega[(n + i, i)] = int(-1);
        }
        SymplecticSpace { omega }
    }

    pub fn dim(&self) -> usize {
        self.omega.rows()
    }

    pub fn half_dim(&self) -> usize {
        self.dim() / 2
    }

    pub fn omega(&self) -> &QMatrix {
        &self.omega
    }

    pub fn omega_f64(&self) -> DMatrix<f64> {
        self.omega.to_f64()
    }

    /// The taming `J = omega` of the block form; it gives `Q = I` whenever
    /// `omega` is the standard pairing.
    pub fn standard_taming(&self) -> DMatrix<f64> {
        SymplecticSpace::standard(self.half_dim()).omega_f64()
    }

    fn check_dim(&self, rows: usize, cols: usize) -> Result<()> {
        if rows != cols {
            return Err(Error::Dimension { expected: rows, found: cols });
        }
        if rows != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: rows });
        }
        Ok(())
    }
}

/// Named tolerances used throughout the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Float algebraic identities (symplectic, J^2 = -I, compatibility).
    pub alg_tol: f64,
    /// Sampled-field invariants (periodicity, polarization, isometries).
    pub field_tol: f64,
    /// Relative threshold for numerical rank decisions.
    pub rank_tol: f64,
    /// Residual norm below which an equation counts as satisfied.
    pub residual_tol: f64,
    /// Lattice rounding residual allowed by the quantization check.
    pub quant_tol: f64,
    /// Allowed discrepancy between residual norms related by a duality.
    pub covariance_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            alg_tol: 1e-10,
            field_tol: 1e-9,
            rank_tol: 1e-9,
            residual_tol: 1e-8,
            quant_tol: 1e-6,
            covariance_tol: 1e-9,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 6] =
        ["alg_tol", "field_tol", "rank_tol", "residual_tol", "quant_tol", "covariance_tol"];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "alg_tol" => self.alg_tol,
            "field_tol" => self.field_tol,
            "rank_tol" => self.rank_tol,
            "residual_tol" => self.residual_tol,
            "quant_tol" => self.quant_tol,
            "covariance_tol" => self.covariance_tol,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidTolerance { name: String::from(name) });
        }
        let slot = match name {
            "alg_tol" => &mut self.alg_tol,
            "field_tol" => &mut self.field_tol,
            "rank_tol" => &mut self.rank_tol,
            "residual_tol" => &mut self.residual_tol,
            "quant_tol" => &mut self.quant_tol,
            "covariance_tol" => &mut self.covariance_tol,
            _ => return Err(Error::UnknownTolerance { name: String::from(name) }),
        };
        *slot = value;
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        Self::NAMES.iter().map(move |&n| (n, self.get(n).unwrap_or(f64::NAN)))
    }
}

/// Gravitational coupling and tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct EsmParameters {
    pub kappa: f64,
    pub tolerances: Tolerances,
}

impl EsmParameters {
    pub fn new(kappa: f64, tolerances: Tolerances) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Invalid(String::from("kappa must be positive")));
        }
        for (name, value) in tolerances.entries() {
            if !(value > 0.0) {
                return Err(Error::InvalidTolerance { name: String::from(name) });
            }
        }
        Ok(EsmParameters { kappa, tolerances })
    }
}

impl Default for EsmParameters {
    fn default() -> Self {
        EsmParameters { kappa: 1.0, tolerances: Tolerances::default() }
    }
}

/// Exact test of `m^T omega m = omega`.
pub fn is_symplectic(m: &QMatrix, sp: &SymplecticSpace) -> Result<bool> {
    sp.check_dim(m.rows(), m.cols())?;
    Ok(&(&m.transpose() * sp.omega()) * m == *sp.omega())
}

/// Float test of `m^T omega m = omega` in the max norm.
pub fn is_symplectic_f64(m: &DMatrix<f64>, sp: &SymplecticSpace, tol: f64) -> Result<bool> {
    sp.check_dim(m.nrows(), m.ncols())?;
    let omega = sp.omega_f64();
    Ok((m.transpose() * &omega * m - &omega).amax() <= tol)
}

/// A complex structure `J` compatible with `omega` whose metric
/// `Q(x, y) = omega(Jx, y)` is positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct Taming {
    j: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl Taming {
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
}

/// Gram matrix of `Q(x, y) = omega(Jx, y)`, i.e. `J^T omega`.
pub fn taming_metric(j: &DMatrix<f64>, omega: &DMatrix<f64>) -> DMatrix<f64> {
    j.transpose() * omega
}

pub fn validate_taming(j: &DMatrix<f64>, sp: &SymplecticSpace, tol: f64) -> Result<Taming> {
    sp.check_dim(j.nrows(), j.ncols())?;
    let dim = sp.dim();
    let omega = sp.omega_f64();
    let square = j * j + DMatrix::<f64>::identity(dim, dim);
    let violation = square.amax();
    if !(violation <= tol) {
        return Err(Error::NotAlmostComplex { violation });
    }
    let violation = (j.transpose() * &omega * j - &omega).amax();
    if !(violation <= tol) {
        return Err(Error::NotCompatible { violation });
    }
    let q = taming_metric(j, &omega);
    let q = (&q + q.transpose()) * 0.5;
    let min_eigenvalue = q.clone().symmetric_eigen().eigenvalues.min();
    if !(min_eigenvalue > tol) {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(Taming { j: j.clone(), q })
}

/// A full lattice `Lambda = B Z^{2n}` on which `omega` is integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralLattice {
    basis: ZMatrix,
    type_divisors: Vec<BigInt>,
}

impl IntegralLattice {
    pub fn new(basis: ZMatrix, sp: &SymplecticSpace) -> Result<Self> {
        sp.check_dim(basis.rows(), basis.cols())?;
        if basis.det().is_zero() {
            return Err(Error::DegenerateLattice);
        }
        let type_divisors = lattice_type(&basis, sp)?;
        Ok(IntegralLattice { basis, type_divisors })
    }

    /// The lattice `Z^{2n}` of the ambient basis.
    pub fn standard(sp: &SymplecticSpace) -> Result<Self> {
        Self::new(ZMatrix::identity(sp.dim()), sp)
    }

    pub fn basis(&self) -> &ZMatrix {
        &self.basis
    }

    pub fn type_divisors(&self) -> &[BigInt] {
        &self.type_divisors
    }

    /// Expresses an ambient matrix in lattice coordinates: `B^{-1} m B`.
    pub fn in_lattice_coordinates(&self, m: &QMatrix) -> QMatrix {
        let b = self.basis.to_rational();
        let b_inv = b.inverse().expect("lattice basis is invertible");
        &(&b_inv * m) * &b
    }

    /// `m Lambda = Lambda`, decided by comparing Hermite normal forms.
    pub fn is_preserved_by(&self, m: &QMatrix) -> bool {
        let image = m * &self.basis.to_rational();
        match image.to_integer() {
            Some(image) => {
                image.transpose().hermite_normal_form() == self.basis.transpose().hermite_normal_form()
            }
            None => false,
        }
    }
}

/// Gram matrix `B^T omega B` of a lattice basis.
pub fn lattice_gram(basis: &ZMatrix, sp: &SymplecticSpace) -> QMatrix {
    let b = basis.to_rational();
    &(&b.transpose() * sp.omega()) * &b
}

/// Elementary-divisor type `(t_1 | t_2 | ... | t_n)` of the lattice.
pub fn lattice_type(basis: &ZMatrix, sp: &SymplecticSpace) -> Result<Vec<BigInt>> {
    sp.check_dim(basis.rows(), basis.cols())?;
    let gram = lattice_gram(basis, sp).to_integer().ok_or(Error::NotIntegral)?;
    symplectic_type_of_gram(&gram)
}

/// Integer symplectic (Frobenius) reduction of an antisymmetric integral
/// Gram matrix. At each stage the smallest nonzero pairing (lexicographically
/// first on ties) is moved to the leading 2x2 block, its rows and columns are
/// cleared by integral basis changes, and the reduction recurses on the
/// complement.
pub fn symplectic_type_of_gram(gram: &ZMatrix) -> Result<Vec<BigInt>> {
    let size = gram.rows();
    if gram.cols() != size || !size.is_multiple_of(2) {
        return Err(Error::Dimension { expected: size, found: gram.cols() });
    }
    if gram.det().is_zero() {
        return Err(Error::DegenerateLattice);
    }
    let mut g = Congruence { g: gram.clone() };
    let mut divisors = Vec::with_capacity(size / 2);
    let mut k = 0;
    while k < size {
        loop {
            let (i, j) = g.min_pairing(k).ok_or(Error::DegenerateLattice)?;
            g.swap(k, i);
            let j = if j == k { i } else { j };
            g.swap(k + 1, j);
            if g.g[(k, k + 1)].is_negative() {
                g.swap(k, k + 1);
            }
            let d = g.g[(k, k + 1)].clone();
            let mut remainder = false;
            for m in k + 2..size {
                let q = g.g[(k, m)].div_floor(&d);
                if !q.is_zero() {
                    g.add_basis(m, k + 1, &-q);
                }
                let q = g.g[(k + 1, m)].div_floor(&d);
                if !q.is_zero() {
                    g.add_basis(m, k, &q);
                }
                remainder |= !g.g[(k, m)].is_zero() || !g.g[(k + 1, m)].is_zero();
            }
            if remainder {
                continue;
            }
            let offending = (k + 2..size)
                .flat_map(|a| (k + 2..size).map(move |b| (a, b)))
                .find(|&(a, b)| !(&g.g[(a, b)] % &d).is_zero());
            match offending {
                Some((a, _)) => g.add_basis(k, a, &BigInt::one()),
                None => {
                    divisors.push(d);
                    break;
                }
            }
        }
        k += 2;
    }
    Ok(divisors)
}

struct Congruence {
    g: ZMatrix,
}

impl Congruence {
    fn min_pairing(&self, k: usize) -> Option<(usize, usize)> {
        let n = self.g.rows();
        let mut best: Option<(usize, usize)> = None;
        for i in k..n {
            for j in i + 1..n {
                let v = &self.g[(i, j)];
                if v.is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| v.abs() < self.g[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    fn swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.g.rows();
        for c in 0..n {
            let t = self.g[(a, c)].clone();
            self.g[(a, c)] = self.g[(b, c)].clone();
            self.g[(b, c)] = t;
        }
        for r in 0..n {
            let t = self.g[(r, a)].clone();
            self.g[(r, a)] = self.g[(r, b)].clone();
            self.g[(r, b)] = t;
        }
    }

    /// basis[target] += factor * basis[source]
    fn add_basis(&mut self, target: usize, source: usize, factor: &BigInt) {
        let n = self.g.rows();
        for c in 0..n {
            let v = &self.g[(source, c)] * factor;
            self.g[(target, c)] += v;
        }
        for r in 0..n {
            let v = &self.g[(r, source)] * factor;
            self.g[(r, target)] += v;
        }
    }
}

/// Membership in the modified Siegel group of the lattice: `m` symplectic
/// and `m Lambda = Lambda`.
pub fn siegel_membership(m: &QMatrix, lat: &IntegralLattice, sp: &SymplecticSpace) -> Result<bool> {
    if !is_symplectic(m, sp)? {
        return Ok(false);
    }
    Ok(lat.is_preserved_by(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use alloc::vec;

    fn std2() -> SymplecticSpace {
        SymplecticSpace::standard(1)
    }

    #[test]
    fn standard_pairing_is_block_form() {
        let sp = SymplecticSpace::standard(2);
        assert_eq!(sp.omega()[(0, 2)], int(1));
        assert_eq!(sp.omega()[(2, 0)], int(-1));
        assert_eq!(sp.omega()[(1, 3)], int(1));
        assert_eq!(sp.omega()[(0, 1)], int(0));
    }

    #[test]
    fn rejects_degenerate_pairing() {
        let bad = QMatrix::from_i64(&[&[0, 0], &[0, 0]]);
        assert_eq!(SymplecticSpace::new(bad), Err(Error::InvalidPairing));
        let sym = QMatrix::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(SymplecticSpace::new(sym), Err(Error::InvalidPairing));
    }

    #[test]
    fn membership_examples() {
        let sp = std2();
        assert!(is_symplectic(&QMatrix::identity(2), &sp).unwrap());
        assert!(is_symplectic(&QMatrix::from_i64(&[&[1, 1], &[0, 1]]), &sp).unwrap());
        assert!(!is_symplectic(&QMatrix::from_i64(&[&[2, 0], &[0, 2]]), &sp).unwrap());
        assert!(matches!(
            is_symplectic(&QMatrix::identity(4), &sp),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn standard_taming_has_identity_metric() {
        let sp = std2();
        let t = validate_taming(&sp.standard_taming(), &sp, 1e-12).unwrap();
        assert_eq!(t.q(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn opposite_complex_structure_is_not_positive() {
        // [[0,-1],[1,0]] gives Q = -I for omega(x, y) = x^T [[0,1],[-1,0]] y
        let sp = std2();
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(validate_taming(&j, &sp, 1e-12), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn identity_is_not_almost_complex() {
        let sp = std2();
        let j = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(validate_taming(&j, &sp, 1e-12), Err(Error::NotAlmostComplex { .. })));
    }

    #[test]
    fn conjugated_taming_metric() {
        // J = S J0 S^{-1} with S = diag(2, 1/2): Q = diag(1/4, 4)
        let sp = std2();
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let s_inv = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]);
        let j = &s * sp.standard_taming() * &s_inv;
        let t = validate_taming(&j, &sp, 1e-12).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 4.0]);
        assert!((t.q() - expected).amax() < 1e-15);
    }

    #[test]
    fn non_symplectic_complex_structure_is_not_compatible() {
        // J^2 = -I but J does not preserve omega on R^4
        let sp = SymplecticSpace::standard(2);
        let mut j = DMatrix::<f64>::zeros(4, 4);
        j[(1, 0)] = 1.0;
        j[(0, 1)] = -1.0;
        j[(3, 2)] = -1.0;
        j[(2, 3)] = 1.0;
        assert!(matches!(validate_taming(&j, &sp, 1e-12), Err(Error::NotCompatible { .. })));
    }

    #[test]
    fn type_of_normal_forms() {
        let g = ZMatrix::from_i64(&[&[0, 1], &[-1, 0]]);
        assert_eq!(symplectic_type_of_gram(&g).unwrap(), vec![BigInt::from(1)]);
        let g = ZMatrix::from_i64(&[&[0, 2], &[-2, 0]]);
        assert_eq!(symplectic_type_of_gram(&g).unwrap(), vec![BigInt::from(2)]);
        let g = ZMatrix::from_i64(&[&[0, 0, 6, 0], &[0, 0, 0, 1], &[-6, 0, 0, 0], &[0, -1, 0, 0]]);
        assert_eq!(symplectic_type_of_gram(&g).unwrap(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn type_needs_divisibility_fix() {
        // pairings 2 and 3 in separate planes: type (1, 6)
        let g = ZMatrix::from_i64(&[&[0, 0, 2, 0], &[0, 0, 0, 3], &[-2, 0, 0, 0], &[0, -3, 0, 0]]);
        assert_eq!(symplectic_type_of_gram(&g).unwrap(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn type_errors() {
        let sp = std2();
        let singular = ZMatrix::from_i64(&[&[1, 1], &[1, 1]]);
        assert_eq!(IntegralLattice::new(singular, &sp), Err(Error::DegenerateLattice));
        let half = SymplecticSpace::new(QMatrix::from_rows(vec![
            vec![int(0), rat(1, 2)],
            vec![rat(-1, 2), int(0)],
        ]))
        .unwrap();
        assert_eq!(lattice_type(&ZMatrix::identity(2), &half), Err(Error::NotIntegral));
    }

    #[test]
    fn siegel_examples() {
        let sp = std2();
        let z2 = IntegralLattice::standard(&sp).unwrap();
        let u = QMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        assert!(siegel_membership(&QMatrix::identity(2), &z2, &sp).unwrap());
        assert!(siegel_membership(&u, &z2, &sp).unwrap());
        let half = QMatrix::from_rows(vec![vec![int(1), rat(1, 2)], vec![int(0), int(1)]]);
        assert!(!siegel_membership(&half, &z2, &sp).unwrap());
        let lower = QMatrix::from_i64(&[&[1, 0], &[1, 1]]);
        let lat = IntegralLattice::new(ZMatrix::from_i64(&[&[1, 0], &[0, 2]]), &sp).unwrap();
        assert_eq!(lat.type_divisors(), &[BigInt::from(2)]);
        // u maps (0,2) to (2,2) = 2(1,0) + (0,2); lower maps (1,0) to (1,1) which is outside
        assert!(siegel_membership(&u, &lat, &sp).unwrap());
        assert!(!siegel_membership(&lower, &lat, &sp).unwrap());
    }
}
