//! Duality structures as symplectic monodromy representations of a finitely
//! presented fundamental group.
//!
//! A single basepoint is used throughout; transport between basepoints is
//! recovered by conjugation.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{QMatrix, Rational};
use crate::symplectic::{is_symplectic, IntegralLattice, SymplecticSpace};

/// A word in the generators and their inverses.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<(usize, i8)>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    /// Panics unless every exponent is `1` or `-1`.
    pub fn new(letters: Vec<(usize, i8)>) -> Self {
        assert!(letters.iter().all(|&(_, e)| e == 1 || e == -1), "exponents must be +-1");
        Word { letters }
    }

    pub fn generator(index: usize) -> Self {
        Word { letters: vec![(index, 1)] }
    }

    pub fn generator_inverse(index: usize) -> Self {
        Word { letters: vec![(index, -1)] }
    }

    /// `g^power`, expanded into letters.
    pub fn power(index: usize, power: i64) -> Self {
        let e = if power < 0 { -1 } else { 1 };
        Word { letters: vec![(index, e); power.unsigned_abs() as usize] }
    }

    pub fn letters(&self) -> &[(usize, i8)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect() }
    }

    /// Free reduction: cancels adjacent `x x^-1` pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<(usize, i8)> = Vec::with_capacity(self.letters.len());
        for &(g, e) in &self.letters {
            if out.last() == Some(&(g, -e)) {
                out.pop();
            } else {
                out.push((g, e));
            }
        }
        Word { letters: out }
    }

    /// Exponent sum per generator (the abelianization).
    pub fn exponent_sums(&self, generators: usize) -> Vec<i64> {
        let mut sums = vec![0i64; generators];
        for &(g, e) in &self.letters {
            if g < generators {
                sums[g] += i64::from(e);
            }
        }
        sums
    }

    fn validate(&self, count: usize) -> Result<()> {
        match self.letters.iter().find(|&&(g, _)| g >= count) {
            Some(&(index, _)) => Err(Error::InvalidWord { index, count }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPresentation {
    generators: Vec<String>,
    relations: Vec<Word>,
}

impl GroupPresentation {
    pub fn new(generators: Vec<String>, relations: Vec<Word>) -> Result<Self> {
        for r in &relations {
            r.validate(generators.len())?;
        }
        Ok(GroupPresentation { generators, relations })
    }

    pub fn free(generators: Vec<String>) -> Self {
        GroupPresentation { generators, relations: Vec::new() }
    }

    /// `Z^k`: all commutators `[a_i, a_j]` are relations.
    pub fn free_abelian(generators: Vec<String>) -> Self {
        let k = generators.len();
        let mut relations = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                relations.push(Word::new(vec![(i, 1), (j, 1), (i, -1), (j, -1)]));
            }
        }
        GroupPresentation { generators, relations }
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn relations(&self) -> &[Word] {
        &self.relations
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g == name)
    }
}

/// A homomorphism from the presented group to `Sp(2n)` with an optional
/// invariant Dirac lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyRep {
    presentation: GroupPresentation,
    sp: SymplecticSpace,
    images: Vec<QMatrix>,
    inverses: Vec<QMatrix>,
    lattice: Option<IntegralLattice>,
}

impl MonodromyRep {
    pub fn new(
        presentation: GroupPresentation,
        sp: SymplecticSpace,
        images: Vec<QMatrix>,
        lattice: Option<IntegralLattice>,
    ) -> Result<Self> {
        if images.len() != presentation.generator_count() {
            return Err(Error::Dimension { expected: presentation.generator_count(), found: images.len() });
        }
        let mut inverses = Vec::with_capacity(images.len());
        for m in &images {
            if !is_symplectic(m, &sp)? {
                return Err(Error::NotSymplectic);
            }
            inverses.push(m.inverse().ok_or(Error::NotSymplectic)?);
        }
        let rep = MonodromyRep { presentation, sp, images, inverses, lattice: None };
        for (i, r) in rep.presentation.relations.iter().enumerate() {
            if !rep.transport(r)?.is_identity() {
                return Err(Error::RelationViolated { relation: i });
            }
        }
        match lattice {
            Some(lat) => rep.with_lattice(lat),
            None => Ok(rep),
        }
    }

    pub fn trivial(presentation: GroupPresentation, sp: SymplecticSpace) -> Self {
        let dim = sp.dim();
        let k = presentation.generator_count();
        MonodromyRep {
            presentation,
            sp,
            images: vec![QMatrix::identity(dim); k],
            inverses: vec![QMatrix::identity(dim); k],
            lattice: None,
        }
    }

    /// Attaches a Dirac lattice, checking that every generator preserves it.
    pub fn with_lattice(mut self, lattice: IntegralLattice) -> Result<Self> {
        if lattice.basis().rows() != self.sp.dim() {
            return Err(Error::Dimension { expected: self.sp.dim(), found: lattice.basis().rows() });
        }
        for (g, m) in self.images.iter().enumerate() {
            if !image_preserves_lattice(m, &lattice) {
                return Err(Error::LatticeNotPreserved { generator: g });
            }
        }
        self.lattice = Some(lattice);
        Ok(self)
    }

    pub fn presentation(&self) -> &GroupPresentation {
        &self.presentation
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.sp
    }

    pub fn dim(&self) -> usize {
        self.sp.dim()
    }

    pub fn images(&self) -> &[QMatrix] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &QMatrix {
        &self.images[generator]
    }

    pub fn lattice(&self) -> Option<&IntegralLattice> {
        self.lattice.as_ref()
    }

    fn letter(&self, g: usize, e: i8) -> &QMatrix {
        if e > 0 {
            &self.images[g]
        } else {
            &self.inverses[g]
        }
    }

    /// Ordered product of the images along the word (the parallel transport
    /// around the corresponding loop).
    pub fn transport(&self, w: &Word) -> Result<QMatrix> {
        w.validate(self.images.len())?;
        let mut acc = QMatrix::identity(self.dim());
        for &(g, e) in w.letters() {
            acc = &acc * self.letter(g, e);
        }
        Ok(acc)
    }

    pub fn transport_f64(&self, w: &Word) -> Result<DMatrix<f64>> {
        Ok(self.transport(w)?.to_f64())
    }

    /// Conjugates every image by `s`: `s rho s^{-1}`.
    pub fn conjugated(&self, s: &QMatrix) -> Result<Self> {
        let s_inv = s.inverse().ok_or(Error::NotSymplectic)?;
        let images = self.images.iter().map(|m| &(s * m) * &s_inv).collect();
        MonodromyRep::new(self.presentation.clone(), self.sp.clone(), images, None)
    }
}

fn image_preserves_lattice(m: &QMatrix, lattice: &IntegralLattice) -> bool {
    let local = lattice.in_lattice_coordinates(m);
    local.is_integral() && local.det().abs().is_one()
}

/// Every generator maps the lattice basis into the lattice and is invertible
/// over the integers in that basis.
pub fn preserves_lattice(rep: &MonodromyRep, lat: &IntegralLattice) -> Result<bool> {
    if lat.basis().rows() != rep.dim() {
        return Err(Error::Dimension { expected: rep.dim(), found: lat.basis().rows() });
    }
    Ok(rep.images.iter().all(|m| image_preserves_lattice(m, lat)))
}

pub const DEFAULT_HOLONOMY_LIMIT: usize = 100_000;

/// All transports of words of length at most `max_len`, deduplicated exactly
/// and returned in canonical (sorted) order.
pub fn holonomy_sample(rep: &MonodromyRep, max_len: usize, limit: usize) -> Result<Vec<QMatrix>> {
    let mut seen: BTreeSet<QMatrix> = BTreeSet::new();
    let identity = QMatrix::identity(rep.dim());
    seen.insert(identity.clone());
    let mut frontier = vec![identity];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for m in &frontier {
            for g in 0..rep.images.len() {
                for e in [1i8, -1] {
                    let candidate = m * rep.letter(g, e);
                    if !seen.contains(&candidate) {
                        seen.insert(candidate.clone());
                        if seen.len() > limit {
                            return Err(Error::SizeLimit { limit });
                        }
                        next.push(candidate);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        frontier = next;
    }
    Ok(seen.into_iter().collect())
}

/// Linear system `A x_i - y_i A = 0` in the entries of `A`, one block per pair.
fn intertwiner_space(pairs: &[(&QMatrix, &QMatrix)], dim: usize) -> Vec<QMatrix> {
    let unknowns = dim * dim;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for (x, y) in pairs {
        for r in 0..dim {
            for c in 0..dim {
                let mut row = vec![Rational::zero(); unknowns];
                for k in 0..dim {
                    // (A x)[r][c] = sum_k A[r][k] x[k][c]
                    row[r * dim + k] += x[(k, c)].clone();
                    // (y A)[r][c] = sum_k y[r][k] A[k][c]
                    row[k * dim + c] -= y[(r, k)].clone();
                }
                if row.iter().any(|v| !v.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    let basis = if rows.is_empty() {
        (0..unknowns)
            .map(|i| {
                let mut v = vec![Rational::zero(); unknowns];
                v[i] = Rational::one();
                v
            })
            .collect()
    } else {
        QMatrix::from_rows(rows).nullspace()
    };
    basis.into_iter().map(|v| QMatrix::from_fn(dim, dim, |r, c| v[r * dim + c].clone())).collect()
}

/// Basis of the commutant algebra `{A : A rho(g) = rho(g) A for all g}`.
pub fn commutant_basis(rep: &MonodromyRep) -> Vec<QMatrix> {
    let pairs: Vec<_> = rep.images.iter().map(|m| (m, m)).collect();
    intertwiner_space(&pairs, rep.dim())
}

/// Coefficients of `m` in the span of `basis`, if it lies there.
pub fn span_coefficients(basis: &[QMatrix], m: &QMatrix) -> Option<Vec<Rational>> {
    if basis.is_empty() {
        return if m.is_zero() { Some(Vec::new()) } else { None };
    }
    let len = m.rows() * m.cols();
    let columns: Vec<Vec<Rational>> = basis.iter().map(|b| b.as_slice().to_vec()).collect();
    QMatrix::from_columns(len, &columns).solve(m.as_slice())
}

/// Membership in `Aut(Delta)`: symplectic and in the commutant of the holonomy.
pub fn in_symplectic_commutant(rep: &MonodromyRep, basis: &[QMatrix], m: &QMatrix) -> Result<bool> {
    Ok(is_symplectic(m, rep.space())? && span_coefficients(basis, m).is_some())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Triviality {
    Trivial,
    /// `generator` has a non-identity image; `trace_word` is a short word whose
    /// trace already differs from the trivial value `2n`, when one exists.
    Nontrivial { generator: usize, image: QMatrix, trace_word: Option<(Word, Rational)> },
}

impl Triviality {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Triviality::Trivial)
    }
}

/// A flat symplectic bundle is trivial iff its monodromy is; only the
/// identity is conjugate to the identity, so this is an exact image test.
pub fn is_trivializable(rep: &MonodromyRep) -> Triviality {
    let Some(generator) = rep.images.iter().position(|m| !m.is_identity()) else {
        return Triviality::Trivial;
    };
    let trivial_trace = Rational::from_integer(BigInt::from(rep.dim()));
    let trace_word = reduced_words(rep.images.len(), 3).into_iter().find_map(|w| {
        let t = rep.transport(&w).ok()?.trace();
        (t != trivial_trace).then_some((w, t))
    });
    Triviality::Nontrivial { generator, image: rep.images[generator].clone(), trace_word }
}

/// Reduced words of length `1..=max_len` in shortlex order.
pub fn reduced_words(generators: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for g in 0..generators {
                for e in [1i8, -1] {
                    if w.letters.last() == Some(&(g, -e)) {
                        continue;
                    }
                    let mut letters = w.letters.clone();
                    letters.push((g, e));
                    next.push(Word { letters });
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Conjugator {
    Exact(QMatrix),
    Approximate(DMatrix<f64>),
}

impl Conjugator {
    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            Conjugator::Exact(m) => m.to_f64(),
            Conjugator::Approximate(m) => m.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistinctWitness {
    Trace { word: Word, first: Rational, second: Rational },
    /// Every intertwiner `A r1 = r2 A` is singular; `dimension` is the
    /// dimension of the intertwiner space.
    NoInvertibleIntertwiner { dimension: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Equivalence {
    /// `conjugator * r1(g) * conjugator^{-1} = r2(g)` for every generator.
    Equivalent(Conjugator),
    Distinct(DistinctWitness),
    Inconclusive,
}

const SWEEP_HEIGHT: i64 = 2;
const SWEEP_LIMIT: usize = 20_000;
const ZERO_TEST_TRIALS: usize = 12;

/// Semi-decision procedure for conjugacy of two representations in `Sp(2n, R)`.
pub fn reps_equivalent(r1: &MonodromyRep, r2: &MonodromyRep, max_word_len: usize, alg_tol: f64) -> Result<Equivalence> {
    if r1.presentation != r2.presentation || r1.sp != r2.sp {
        return Err(Error::PresentationMismatch);
    }
    for w in reduced_words(r1.images.len(), max_word_len) {
        let first = r1.transport(&w)?.trace();
        let second = r2.transport(&w)?.trace();
        if first != second {
            return Ok(Equivalence::Distinct(DistinctWitness::Trace { word: w, first, second }));
        }
    }
    let pairs: Vec<_> = r1.images.iter().zip(&r2.images).collect();
    let space = intertwiner_space(&pairs, r1.dim());
    if space.is_empty() || !has_invertible_member(&space) {
        return Ok(Equivalence::Distinct(DistinctWitness::NoInvertibleIntertwiner { dimension: space.len() }));
    }

    let omega = r1.sp.omega();
    let mut approximate: Option<DMatrix<f64>> = None;
    for coeffs in sweep_coefficients(space.len(), SWEEP_HEIGHT, SWEEP_LIMIT) {
        let a = combine(&space, &coeffs);
        let Some(scale) = conformal_factor(&a, omega) else { continue };
        match rational_sqrt(&scale) {
            Some(root) => return Ok(Equivalence::Equivalent(Conjugator::Exact(a.scale(&root.recip())))),
            None if approximate.is_none() => {
                let s = libm::sqrt(crate::exact::rational_to_f64(&scale));
                approximate = Some(a.to_f64() / s);
            }
            None => {}
        }
    }
    if let Some(m) = approximate {
        return Ok(Equivalence::Equivalent(Conjugator::Approximate(m)));
    }
    Ok(match least_squares_conjugator(&space, &r1.sp.omega_f64(), alg_tol) {
        Some(m) => Equivalence::Equivalent(Conjugator::Approximate(m)),
        None => Equivalence::Inconclusive,
    })
}

fn combine(space: &[QMatrix], coeffs: &[i64]) -> QMatrix {
    let mut a = QMatrix::zeros(space[0].rows(), space[0].cols());
    for (b, &c) in space.iter().zip(coeffs) {
        if c != 0 {
            a = a.add(&b.scale(&Rational::from_integer(BigInt::from(c))));
        }
    }
    a
}

/// Schwartz-Zippel test on `det(sum c_i A_i)`: a nonzero polynomial of degree
/// `2n` vanishes at a random point of `[-2^20, 2^20]^k` with probability at
/// most `2n / 2^21`, so a dozen zero evaluations certify singularity.
fn has_invertible_member(space: &[QMatrix]) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    (0..ZERO_TEST_TRIALS).any(|_| {
        let coeffs: Vec<i64> = (0..space.len()).map(|_| rng.gen_range(-(1 << 20)..=(1 << 20))).collect();
        !combine(space, &coeffs).det().is_zero()
    })
}

/// `lambda` with `a^T omega a = lambda omega`, `lambda > 0`, if `a` is invertible
/// and conformally symplectic.
fn conformal_factor(a: &QMatrix, omega: &QMatrix) -> Option<Rational> {
    let s = &(&a.transpose() * omega) * a;
    let n = omega.rows();
    let (p, q) = (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).find(|&(p, q)| !omega[(p, q)].is_zero())?;
    let lambda = &s[(p, q)] / &omega[(p, q)];
    (lambda.is_positive() && s == omega.scale(&lambda)).then_some(lambda)
}

fn rational_sqrt(q: &Rational) -> Option<Rational> {
    let (n, d) = (q.numer(), q.denom());
    if n.is_negative() {
        return None;
    }
    let (rn, rd) = (n.sqrt(), d.sqrt());
    (&rn * &rn == *n && &rd * &rd == *d).then(|| BigRational::new(rn, rd))
}

/// Integer coefficient vectors ordered by height, then lexicographically in
/// the value order `0, 1, -1, 2, -2, ...`.
fn sweep_coefficients(k: usize, max_height: i64, limit: usize) -> Vec<Vec<i64>> {
    let values: Vec<i64> = core::iter::once(0).chain((1..=max_height).flat_map(|h| [h, -h])).collect();
    let mut out = Vec::new();
    for h in 1..=max_height {
        let width = (2 * h + 1) as usize;
        let mut idx = vec![0usize; k];
        'odometer: loop {
            if idx.iter().any(|&i| values[i].abs() == h) {
                out.push(idx.iter().map(|&i| values[i]).collect());
                if out.len() >= limit {
                    return out;
                }
            }
            for i in (0..k).rev() {
                if idx[i] + 1 < width {
                    idx[i] += 1;
                    continue 'odometer;
                }
                idx[i] = 0;
            }
            break;
        }
    }
    out
}

/// Gauss-Newton on `A(c)^T omega A(c) = omega` over the intertwiner space.
fn least_squares_conjugator(space: &[QMatrix], omega: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let basis: Vec<DMatrix<f64>> = space.iter().map(QMatrix::to_f64).collect();
    let dim = omega.nrows();
    let k = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _attempt in 0..8 {
        let mut c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..100 {
            let a = basis.iter().zip(&c).fold(DMatrix::zeros(dim, dim), |acc, (b, &x)| acc + b * x);
            let resid = a.transpose() * omega * &a - omega;
            if resid.amax() <= tol {
                return Some(a);
            }
            let mut jac = DMatrix::<f64>::zeros(dim * dim, k);
            for (i, b) in basis.iter().enumerate() {
                let d = b.transpose() * omega * &a + a.transpose() * omega * b;
                for (r, v) in d.iter().enumerate() {
                    jac[(r, i)] = *v;
                }
            }
            let rhs = DMatrix::from_iterator(dim * dim, 1, resid.iter().copied());
            let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
            for (x, s) in c.iter_mut().zip(step.iter()) {
                *x -= s;
            }
            if c.iter().any(|x| !x.is_finite()) {
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use alloc::string::ToString;

    fn one_loop(image: QMatrix) -> MonodromyRep {
        let pres = GroupPresentation::free(vec!["a".to_string()]);
        MonodromyRep::new(pres, SymplecticSpace::standard(1), vec![image], None).unwrap()
    }

    fn unipotent() -> QMatrix {
        QMatrix::from_i64(&[&[1, 1], &[0, 1]])
    }

    #[test]
    fn transport_examples() {
        let rep = one_loop(unipotent());
        assert!(rep.transport(&Word::empty()).unwrap().is_identity());
        let w = Word::new(vec![(0, 1), (0, -1)]);
        assert!(rep.transport(&w).unwrap().is_identity());
        let aa = Word::power(0, 2);
        assert_eq!(rep.transport(&aa).unwrap(), QMatrix::from_i64(&[&[1, 2], &[0, 1]]));
        assert!(matches!(rep.transport(&Word::generator(3)), Err(Error::InvalidWord { .. })));
    }

    #[test]
    fn constructor_checks_relations_and_symplecticity() {
        let sp = SymplecticSpace::standard(1);
        let pres = GroupPresentation::new(vec!["a".to_string()], vec![Word::power(0, 2)]).unwrap();
        let minus = QMatrix::identity(2).neg();
        assert!(MonodromyRep::new(pres.clone(), sp.clone(), vec![minus], None).is_ok());
        assert_eq!(
            MonodromyRep::new(pres, sp.clone(), vec![unipotent()], None),
            Err(Error::RelationViolated { relation: 0 })
        );
        let pres = GroupPresentation::free(vec!["a".to_string()]);
        let scale = QMatrix::from_i64(&[&[2, 0], &[0, 2]]);
        assert_eq!(MonodromyRep::new(pres, sp, vec![scale], None), Err(Error::NotSymplectic));
    }

    #[test]
    fn holonomy_of_trivial_and_central_reps() {
        let trivial = MonodromyRep::trivial(GroupPresentation::free(vec!["a".to_string()]), SymplecticSpace::standard(1));
        assert_eq!(holonomy_sample(&trivial, 5, 10).unwrap(), vec![QMatrix::identity(2)]);
        let minus = one_loop(QMatrix::identity(2).neg());
        assert_eq!(holonomy_sample(&minus, 2, 10).unwrap().len(), 2);
        let u = one_loop(unipotent());
        assert!(matches!(holonomy_sample(&u, 10, 5), Err(Error::SizeLimit { limit: 5 })));
    }

    #[test]
    fn commutant_of_unipotent() {
        let basis = commutant_basis(&one_loop(unipotent()));
        assert_eq!(basis.len(), 2);
        assert!(span_coefficients(&basis, &QMatrix::identity(2)).is_some());
        assert!(span_coefficients(&basis, &QMatrix::from_i64(&[&[0, 1], &[0, 0]])).is_some());
        assert!(span_coefficients(&basis, &QMatrix::from_i64(&[&[0, 0], &[1, 0]])).is_none());
    }

    #[test]
    fn commutant_of_hyperbolic_is_diagonal() {
        let d = QMatrix::from_rows(vec![vec![int(2), int(0)], vec![int(0), rat(1, 2)]]);
        let basis = commutant_basis(&one_loop(d));
        assert_eq!(basis.len(), 2);
        assert!(span_coefficients(&basis, &QMatrix::from_i64(&[&[1, 0], &[0, 0]])).is_some());
        assert!(span_coefficients(&basis, &QMatrix::from_i64(&[&[0, 0], &[0, 1]])).is_some());
    }

    #[test]
    fn commutant_of_trivial_group_is_everything() {
        let trivial = MonodromyRep::trivial(GroupPresentation::free(Vec::new()), SymplecticSpace::standard(1));
        assert_eq!(commutant_basis(&trivial).len(), 4);
    }

    #[test]
    fn triviality_witness() {
        let rep = one_loop(unipotent());
        match is_trivializable(&rep) {
            Triviality::Nontrivial { generator, image, trace_word } => {
                assert_eq!(generator, 0);
                assert_eq!(image, unipotent());
                // every power of a unipotent has trace 2
                assert!(trace_word.is_none());
            }
            Triviality::Trivial => panic!("unipotent monodromy is nontrivial"),
        }
        assert!(is_trivializable(&one_loop(QMatrix::identity(2))).is_trivial());
        let minus = is_trivializable(&one_loop(QMatrix::identity(2).neg()));
        assert!(matches!(minus, Triviality::Nontrivial { trace_word: Some(_), .. }));
    }

    #[test]
    fn equivalence_examples() {
        let u = one_loop(unipotent());
        match reps_equivalent(&u, &u, 3, 1e-10).unwrap() {
            Equivalence::Equivalent(Conjugator::Exact(a)) => {
                assert_eq!(&a * u.image(0), u.image(0) * &a);
                assert!(is_symplectic(&a, u.space()).unwrap());
            }
            other => panic!("expected exact conjugator, got {other:?}"),
        }
        let id = one_loop(QMatrix::identity(2));
        assert!(matches!(
            reps_equivalent(&u, &id, 3, 1e-10).unwrap(),
            Equivalence::Distinct(DistinctWitness::NoInvertibleIntertwiner { .. })
        ));
        let h = one_loop(QMatrix::from_i64(&[&[2, 1], &[1, 1]]));
        let s = unipotent();
        let conj = h.conjugated(&s).unwrap();
        match reps_equivalent(&h, &conj, 3, 1e-10).unwrap() {
            Equivalence::Equivalent(Conjugator::Exact(a)) => {
                let a_inv = a.inverse().unwrap();
                assert_eq!(&(&a * h.image(0)) * &a_inv, *conj.image(0));
                assert!(is_symplectic(&a, h.space()).unwrap());
            }
            other => panic!("expected exact conjugator, got {other:?}"),
        }
        let other = one_loop(QMatrix::from_i64(&[&[3, 1], &[2, 1]]));
        assert!(matches!(
            reps_equivalent(&h, &other, 1, 1e-10).unwrap(),
            Equivalence::Distinct(DistinctWitness::Trace { .. })
        ));
    }

    #[test]
    fn irrational_scale_falls_back_to_float_conjugator() {
        // A = [[1,1],[0,2]] has det 2, so A/sqrt(2) is the symplectic conjugator
        let h = one_loop(QMatrix::from_i64(&[&[2, 1], &[1, 1]]));
        let a = QMatrix::from_i64(&[&[1, 1], &[0, 2]]);
        let images = vec![&(&a * h.image(0)) * &a.inverse().unwrap()];
        let conj = MonodromyRep::new(h.presentation().clone(), h.space().clone(), images, None).unwrap();
        match reps_equivalent(&h, &conj, 2, 1e-10).unwrap() {
            Equivalence::Equivalent(c) => {
                let m = c.to_f64();
                let lhs = &m * h.image(0).to_f64();
                let rhs = conj.image(0).to_f64() * &m;
                assert!((lhs - rhs).amax() < 1e-12);
                let omega = h.space().omega_f64();
                assert!((m.transpose() * &omega * &m - omega).amax() < 1e-12);
            }
            other => panic!("expected equivalence, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_presentations_are_rejected() {
        let u = one_loop(unipotent());
        let two = MonodromyRep::trivial(
            GroupPresentation::free(vec!["a".to_string(), "b".to_string()]),
            SymplecticSpace::standard(1),
        );
        assert_eq!(reps_equivalent(&u, &two, 2, 1e-10), Err(Error::PresentationMismatch));
    }

    #[test]
    fn lattice_preservation_examples() {
        let sp = SymplecticSpace::standard(1);
        let z2 = IntegralLattice::standard(&sp).unwrap();
        let trivial = MonodromyRep::trivial(GroupPresentation::free(vec!["a".to_string()]), sp.clone());
        assert!(preserves_lattice(&trivial, &z2).unwrap());
        assert!(preserves_lattice(&one_loop(unipotent()), &z2).unwrap());
        let half = QMatrix::from_rows(vec![vec![int(1), rat(1, 2)], vec![int(0), int(1)]]);
        let rep = one_loop(half);
        assert!(!preserves_lattice(&rep, &z2).unwrap());
        assert_eq!(rep.with_lattice(z2), Err(Error::LatticeNotPreserved { generator: 0 }));
    }

    #[test]
    fn reduced_word_counts() {
        // 2k (2k - 1)^(L - 1) reduced words of length L
        assert_eq!(reduced_words(2, 3).len(), 4 + 12 + 36);
        assert!(reduced_words(2, 3).iter().all(|w| w.reduced() == *w));
    }
}
