//! Dense exact matrices over the rationals and the integers.
//!
//! Everything the algebraic layer decides (symplectic membership, lattice
//! types, commutants, integral cohomology) goes through these types so that
//! no tolerance is involved.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // huge components: divide in the integer domain first
        _ => {
            let (quot, rem) = q.numer().div_rem(q.denom());
            quot.to_f64().unwrap_or(f64::NAN)
                + rem.to_f64().unwrap_or(0.0) / q.denom().to_f64().unwrap_or(f64::INFINITY)
        }
    }
}

/// Row-major dense matrix of rationals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for c in 0..self.cols {
                if c > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self[(r, c)])?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Rational;
    fn index(&self, (r, c): (usize, usize)) -> &Rational {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Rational {
        &mut self.data[r * self.cols + c]
    }
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        QMatrix { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|row| row.iter().map(|&v| int(v)).collect()).collect())
    }

    pub fn from_column(v: &[Rational]) -> Self {
        QMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    let v = &self[(r, c)];
                    if r == c {
                        v.is_one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn max_abs(&self) -> Rational {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// Smallest common denominator of all entries.
    pub fn common_denominator(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn pow(&self, exponent: i64) -> Option<Self> {
        let base = if exponent < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Self::identity(self.rows);
        for _ in 0..exponent.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].recip();
            for c in col..m.cols {
                let v = &m[(row, c)] * &inv;
                m[(row, c)] = v;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let factor = m[(r, col)].clone();
                    for c in col..m.cols {
                        let v = &m[(row, c)] * &factor;
                        m[(r, c)] -= v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one vector per free column of the RREF.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Rational::zero(); self.cols];
            v[free] = Rational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    pub fn det(&self) -> Rational {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Rational::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pivot = m[(col, col)].clone();
            det *= &pivot;
            for r in col + 1..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let factor = &m[(r, col)] / &pivot;
                for c in col..n {
                    let v = &m[(col, c)] * &factor;
                    m[(r, c)] -= v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(self.clone());
        }
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, n + r)] = Rational::one();
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |r, c| red[(r, n + c)].clone()))
    }

    /// Some exact solution of `self * x = b`, if one exists.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, self.cols)] = b[r].clone();
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = red[(i, self.cols)].clone();
        }
        Some(x)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self[(r, c)].clone()
            } else {
                other[(r, c - self.cols)].clone()
            }
        })
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Rational>]) -> Self {
        Self::from_fn(rows, columns.len(), |r, c| columns[c][r].clone())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| rational_to_f64(&self[(r, c)]))
    }

    pub fn to_integer(&self) -> Option<ZMatrix> {
        if !self.is_integral() {
            return None;
        }
        Some(ZMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.to_integer()).collect() })
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = QMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = a * &rhs[(k, c)];
                    out[(r, c)] += v;
                }
            }
        }
        out
    }
}

/// Row-major dense matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for ZMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for c in 0..self.cols {
                if c > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self[(r, c)])?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl Index<(usize, usize)> for ZMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ZMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ZMatrix {
    type Output = ZMatrix;
    fn mul(self, rhs: &ZMatrix) -> ZMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ZMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = a * &rhs[(k, c)];
                    out[(r, c)] += v;
                }
            }
        }
        out
    }
}

/// Result of a Smith normal form computation: `u * a * v = d` with `u`, `v`
/// unimodular and `d` diagonal with `d_1 | d_2 | ...`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: ZMatrix,
    pub u_inv: ZMatrix,
    pub v: ZMatrix,
    pub v_inv: ZMatrix,
    /// Nonzero diagonal entries, all positive.
    pub divisors: Vec<BigInt>,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.divisors.len()
    }
}

impl ZMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ZMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ZMatrix { rows, cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_rational(&self) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |r, c| BigRational::from_integer(self[(r, c)].clone()))
    }

    pub fn det(&self) -> BigInt {
        self.to_rational().det().to_integer()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[target] += factor * row[source]
    fn add_row(&mut self, target: usize, source: usize, factor: &BigInt) {
        for c in 0..self.cols {
            let v = &self[(source, c)] * factor;
            self[(target, c)] += v;
        }
    }

    /// col[target] += factor * col[source]
    fn add_col(&mut self, target: usize, source: usize, factor: &BigInt) {
        for r in 0..self.rows {
            let v = &self[(r, source)] * factor;
            self[(r, target)] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -&self[(r, c)];
            self[(r, c)] = v;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = -&self[(r, c)];
            self[(r, c)] = v;
        }
    }

    /// Row-style Hermite normal form: upper echelon, positive pivots, entries
    /// above each pivot reduced into `[0, pivot)`. Row operations only, so the
    /// row lattice is preserved.
    pub fn hermite_normal_form(&self) -> Self {
        let mut h = self.clone();
        let mut pivot_row = 0;
        for col in 0..h.cols {
            if pivot_row == h.rows {
                break;
            }
            loop {
                let best = (pivot_row..h.rows)
                    .filter(|&r| !h[(r, col)].is_zero())
                    .min_by(|&a, &b| h[(a, col)].abs().cmp(&h[(b, col)].abs()));
                let Some(best) = best else { break };
                h.swap_rows(pivot_row, best);
                let mut clean = true;
                for r in pivot_row + 1..h.rows {
                    if h[(r, col)].is_zero() {
                        continue;
                    }
                    let q = h[(r, col)].div_floor(&h[(pivot_row, col)]);
                    h.add_row(r, pivot_row, &-q);
                    if !h[(r, col)].is_zero() {
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
            if h[(pivot_row, col)].is_zero() {
                continue;
            }
            if h[(pivot_row, col)].is_negative() {
                h.negate_row(pivot_row);
            }
            for r in 0..pivot_row {
                let q = h[(r, col)].div_floor(&h[(pivot_row, col)]);
                if !q.is_zero() {
                    h.add_row(r, pivot_row, &-q);
                }
            }
            pivot_row += 1;
        }
        h
    }

    /// Smith normal form with both transformation matrices and their inverses.
    pub fn smith(&self) -> Smith {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut u = ZMatrix::identity(m);
        let mut u_inv = ZMatrix::identity(m);
        let mut v = ZMatrix::identity(n);
        let mut v_inv = ZMatrix::identity(n);

        // Row ops on a are mirrored on u (left) and inversely on u_inv (right);
        // column ops on a are mirrored on v (right) and inversely on v_inv (left).
        macro_rules! row_swap {
            ($i:expr, $j:expr) => {{
                a.swap_rows($i, $j);
                u.swap_rows($i, $j);
                u_inv.swap_cols($i, $j);
            }};
        }
        macro_rules! col_swap {
            ($i:expr, $j:expr) => {{
                a.swap_cols($i, $j);
                v.swap_cols($i, $j);
                v_inv.swap_rows($i, $j);
            }};
        }
        macro_rules! row_add {
            ($t:expr, $s:expr, $f:expr) => {{
                let f: BigInt = $f;
                a.add_row($t, $s, &f);
                u.add_row($t, $s, &f);
                u_inv.add_col($s, $t, &-f);
            }};
        }
        macro_rules! col_add {
            ($t:expr, $s:expr, $f:expr) => {{
                let f: BigInt = $f;
                a.add_col($t, $s, &f);
                v.add_col($t, $s, &f);
                v_inv.add_row($s, $t, &-f);
            }};
        }

        let mut divisors = Vec::new();
        for t in 0..m.min(n) {
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    if !a[(i, j)].is_zero()
                        && best.is_none_or(|(bi, bj)| a[(i, j)].abs() < a[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            row_swap!(t, bi);
            col_swap!(t, bj);
            loop {
                let mut clean = true;
                for i in t + 1..m {
                    if !a[(i, t)].is_zero() {
                        let q = a[(i, t)].div_floor(&a[(t, t)]);
                        row_add!(i, t, -q);
                        clean &= a[(i, t)].is_zero();
                    }
                }
                for j in t + 1..n {
                    if !a[(t, j)].is_zero() {
                        let q = a[(t, j)].div_floor(&a[(t, t)]);
                        col_add!(j, t, -q);
                        clean &= a[(t, j)].is_zero();
                    }
                }
                if !clean {
                    // bring the smallest remainder in the pivot row/column to the pivot
                    let mut pick: Option<(usize, bool)> = None;
                    let mut min = a[(t, t)].abs();
                    for i in t + 1..m {
                        if !a[(i, t)].is_zero() && a[(i, t)].abs() < min {
                            min = a[(i, t)].abs();
                            pick = Some((i, true));
                        }
                    }
                    for j in t + 1..n {
                        if !a[(t, j)].is_zero() && a[(t, j)].abs() < min {
                            min = a[(t, j)].abs();
                            pick = Some((j, false));
                        }
                    }
                    match pick {
                        Some((i, true)) => row_swap!(t, i),
                        Some((j, false)) => col_swap!(t, j),
                        None => {}
                    }
                    continue;
                }
                let offending = (t + 1..m)
                    .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                    .find(|&(i, j)| !(&a[(i, j)] % &a[(t, t)]).is_zero());
                match offending {
                    Some((i, _)) => row_add!(t, i, BigInt::one()),
                    None => break,
                }
            }
            if a[(t, t)].is_negative() {
                a.negate_row(t);
                u.negate_row(t);
                u_inv.negate_col(t);
            }
            divisors.push(a[(t, t)].clone());
        }
        Smith { u, u_inv, v, v_inv, divisors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_nullspace_and_inverse() {
        let a = QMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(Zero::is_zero));
        assert_eq!(a.det(), int(0));
        let b = QMatrix::from_i64(&[&[2, 1], &[7, 4]]);
        let inv = b.inverse().unwrap();
        assert!((&b * &inv).is_identity());
        assert!(a.inverse().is_none());
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = QMatrix::from_i64(&[&[1, 1], &[2, 2]]);
        assert!(a.solve(&[int(1), int(3)]).is_none());
        let x = a.solve(&[int(1), int(2)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![int(1), int(2)]);
    }

    #[test]
    fn smith_of_minus_two_identity() {
        let a = ZMatrix::from_i64(&[&[-2, 0], &[0, -2]]);
        let s = a.smith();
        assert_eq!(s.divisors, vec![BigInt::from(2), BigInt::from(2)]);
    }

    #[test]
    fn smith_transforms_are_consistent() {
        let a = ZMatrix::from_i64(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let s = a.smith();
        let d = &(&s.u * &a) * &s.v;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j && i < s.rank() { s.divisors[i].clone() } else { BigInt::zero() };
                assert_eq!(d[(i, j)], expected);
            }
        }
        assert_eq!(s.divisors, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let one = ZMatrix::identity(3);
        assert_eq!(&s.u * &s.u_inv, one);
        assert_eq!(&s.v * &s.v_inv, one);
    }

    #[test]
    fn hermite_normal_form_is_canonical_for_row_lattices() {
        let a = ZMatrix::from_i64(&[&[1, 0], &[0, 2]]);
        let b = ZMatrix::from_i64(&[&[1, 2], &[0, 2]]);
        assert_eq!(a.hermite_normal_form(), b.hermite_normal_form());
        let c = ZMatrix::from_i64(&[&[1, 1], &[0, 2]]);
        assert_ne!(a.hermite_normal_form(), c.hermite_normal_form());
    }
}
