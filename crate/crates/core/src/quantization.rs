//! Cellular cohomology with coefficients in the local system, its integral
//! image, and the integrality test for field-strength classes.
//!
//! Cochains live on cells; the value of a cochain on a translated copy of a
//! face is the transported value, so incidences carry transition matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{rational_to_f64, QMatrix, Rational, ZMatrix};
use crate::local_system::Word;
use crate::spacetime::{pair_slot, SpacetimeGrid, TwistedTwoForm};
use crate::target::ScalarTarget;

/// `face` appears in the boundary of a cell with `sign`; cochain values on
/// the face are carried into the cell's frame by `transition`.
#[derive(Clone, Debug, PartialEq)]
pub struct Incidence {
    pub face: usize,
    pub sign: i8,
    pub transition: QMatrix,
}

/// Identifies the grid a complex was built from.
#[derive(Clone, Debug, PartialEq)]
struct GridKey {
    shape: [usize; 4],
    periodic: [bool; 4],
    winding: [Option<Word>; 4],
    /// Periodic directions spanned by each cell, per degree.
    directions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedCellComplex {
    fiber: usize,
    counts: Vec<usize>,
    /// `boundary[k][cell]` for `k >= 1`; `boundary[0]` is empty.
    boundary: Vec<Vec<Vec<Incidence>>>,
    /// Columns span the coefficient lattice; `None` is the standard one.
    lattice: Option<ZMatrix>,
    grid: Option<GridKey>,
}

impl TwistedCellComplex {
    /// Validates face indices, transition shapes and `delta o delta = 0`.
    pub fn new(
        fiber: usize,
        counts: Vec<usize>,
        boundary: Vec<Vec<Vec<Incidence>>>,
        lattice: Option<ZMatrix>,
    ) -> Result<Self> {
        if boundary.len() != counts.len() {
            return Err(Error::Dimension { expected: counts.len(), found: boundary.len() });
        }
        for (k, cells) in boundary.iter().enumerate() {
            let expected = if k == 0 { 0 } else { counts[k] };
            if cells.len() != expected {
                return Err(Error::InvalidComplex { degree: k });
            }
            for inc in cells.iter().flatten() {
                if inc.face >= counts[k - 1] || inc.sign.abs() != 1 {
                    return Err(Error::InvalidComplex { degree: k });
                }
                if inc.transition.rows() != fiber || inc.transition.cols() != fiber {
                    return Err(Error::Dimension { expected: fiber, found: inc.transition.rows() });
                }
            }
        }
        if let Some(b) = &lattice {
            if b.rows() != fiber || b.cols() != fiber || b.det().is_zero() {
                return Err(Error::DegenerateLattice);
            }
        }
        let complex = TwistedCellComplex { fiber, counts, boundary, lattice, grid: None };
        for k in 0..complex.top_degree().saturating_sub(1) {
            let product = &complex.coboundary(k + 1) * &complex.coboundary(k);
            if !product.is_zero() {
                return Err(Error::InvalidComplex { degree: k });
            }
        }
        Ok(complex)
    }

    /// One vertex and one edge, glued by `rho`.
    pub fn circle(rho: &QMatrix) -> Result<Self> {
        Self::torus(core::slice::from_ref(rho))
    }

    /// Minimal complex of `T^p`: one cell per subset of the circle factors.
    /// The monodromies must commute.
    pub fn torus(rhos: &[QMatrix]) -> Result<Self> {
        let p = rhos.len();
        let fiber = rhos.first().map_or(0, |r| r.rows());
        let cells: Vec<Vec<Vec<usize>>> = (0..=p).map(|k| subsets(p, k)).collect();
        let counts = cells.iter().map(Vec::len).collect();
        let id = QMatrix::identity(fiber);
        let boundary = cells
            .iter()
            .enumerate()
            .map(|(k, list)| {
                if k == 0 {
                    return Vec::new();
                }
                list.iter()
                    .map(|s| {
                        let mut incs = Vec::new();
                        for (i, &dir) in s.iter().enumerate() {
                            let face: Vec<usize> = s.iter().copied().filter(|&d| d != dir).collect();
                            let face = cells[k - 1].iter().position(|c| *c == face).expect("face is a subset");
                            let sign = if i % 2 == 0 { 1 } else { -1 };
                            incs.push(Incidence { face, sign, transition: rhos[dir].clone() });
                            incs.push(Incidence { face, sign: -sign, transition: id.clone() });
                        }
                        incs
                    })
                    .collect()
            })
            .collect();
        Self::new(fiber, counts, boundary, None)
    }

    /// Cubical complex of a `shape[0] x ... ` periodic grid with the cut
    /// between the last and first node of each circle.
    pub fn cubical_torus(shape: &[usize], rhos: &[QMatrix]) -> Result<Self> {
        let p = shape.len();
        if rhos.len() != p {
            return Err(Error::Dimension { expected: p, found: rhos.len() });
        }
        let fiber = rhos.first().map_or(0, |r| r.rows());
        let verts: usize = shape.iter().product();
        let multi = |mut v: usize| {
            let mut idx = vec![0; p];
            for (i, &n) in shape.iter().enumerate() {
                idx[i] = v % n;
                v /= n;
            }
            idx
        };
        let flat = |idx: &[usize]| idx.iter().zip(shape).rev().fold(0, |acc, (&i, &n)| acc * n + i);
        let subsets_by_degree: Vec<Vec<Vec<usize>>> = (0..=p).map(|k| subsets(p, k)).collect();
        let counts = subsets_by_degree.iter().map(|s| s.len() * verts).collect();
        let id = QMatrix::identity(fiber);
        let boundary = subsets_by_degree
            .iter()
            .enumerate()
            .map(|(k, list)| {
                if k == 0 {
                    return Vec::new();
                }
                let mut out = Vec::with_capacity(list.len() * verts);
                for s in list {
                    for v in 0..verts {
                        let base = multi(v);
                        let mut incs = Vec::new();
                        for (i, &dir) in s.iter().enumerate() {
                            let face: Vec<usize> = s.iter().copied().filter(|&d| d != dir).collect();
                            let face_slot = subsets_by_degree[k - 1].iter().position(|c| *c == face).expect("subset");
                            let sign = if i % 2 == 0 { 1 } else { -1 };
                            let mut far = base.clone();
                            far[dir] = (base[dir] + 1) % shape[dir];
                            let transition = if base[dir] + 1 == shape[dir] { rhos[dir].clone() } else { id.clone() };
                            incs.push(Incidence { face: face_slot * verts + flat(&far), sign, transition });
                            incs.push(Incidence { face: face_slot * verts + v, sign: -sign, transition: id.clone() });
                        }
                        out.push(incs);
                    }
                }
                out
            })
            .collect();
        Self::new(fiber, counts, boundary, None)
    }

    /// Minimal torus complex of the periodic directions of `grid`, with the
    /// exact cut monodromies. Open directions retract to a point.
    pub fn for_grid(grid: &SpacetimeGrid, target: &ScalarTarget) -> Result<Self> {
        let directions: Vec<usize> = (0..4).filter(|&m| grid.periodic()[m]).collect();
        let rep = target.monodromy();
        let rhos = directions
            .iter()
            .map(|&m| grid.winding(m).map_or_else(|| Ok(QMatrix::identity(rep.dim())), |w| rep.transport(w)))
            .collect::<Result<Vec<_>>>()?;
        let mut complex = if rhos.is_empty() {
            Self::new(rep.dim(), vec![1], vec![Vec::new()], None)?
        } else {
            Self::torus(&rhos)?
        };
        complex.grid = Some(GridKey {
            shape: grid.shape(),
            periodic: grid.periodic(),
            winding: core::array::from_fn(|m| grid.winding(m).cloned()),
            directions,
        });
        Ok(complex)
    }

    /// Uses the lattice spanned by the columns of `basis` for integral
    /// computations.
    pub fn with_lattice(mut self, basis: ZMatrix) -> Result<Self> {
        if basis.rows() != self.fiber || basis.cols() != self.fiber || basis.det().is_zero() {
            return Err(Error::DegenerateLattice);
        }
        self.lattice = Some(basis);
        Ok(self)
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn top_degree(&self) -> usize {
        self.counts.len()
    }

    pub fn boundary(&self, k: usize) -> &[Vec<Incidence>] {
        &self.boundary[k]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts.iter().enumerate().map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) }).sum()
    }

    fn count(&self, k: usize) -> usize {
        self.counts.get(k).copied().unwrap_or(0)
    }

    /// `delta_k : C^k -> C^{k+1}` in fiber coordinates.
    pub fn coboundary(&self, k: usize) -> QMatrix {
        let f = self.fiber;
        let mut out = QMatrix::zeros(self.count(k + 1) * f, self.count(k) * f);
        if let Some(cells) = self.boundary.get(k + 1) {
            for (cell, incs) in cells.iter().enumerate() {
                for inc in incs {
                    let sign = Rational::from_integer(BigInt::from(inc.sign));
                    for r in 0..f {
                        for c in 0..f {
                            let v = &inc.transition[(r, c)] * &sign;
                            out[(cell * f + r, inc.face * f + c)] += v;
                        }
                    }
                }
            }
        }
        out
    }

    fn lattice_basis(&self) -> QMatrix {
        self.lattice.as_ref().map_or_else(|| QMatrix::identity(self.fiber), ZMatrix::to_rational)
    }

    /// `delta_k` in lattice coordinates; fails unless every transition
    /// preserves the lattice.
    pub fn integer_coboundary(&self, k: usize) -> Result<ZMatrix> {
        let b = self.lattice_basis();
        let b_inv = b.inverse().ok_or(Error::DegenerateLattice)?;
        if let Some(cells) = self.boundary.get(k + 1) {
            for (cell, incs) in cells.iter().enumerate() {
                for inc in incs {
                    let local = &(&b_inv * &inc.transition) * &b;
                    if !local.is_integral() {
                        return Err(Error::LatticeNotPreserved { generator: cell });
                    }
                }
            }
        }
        let f = self.fiber;
        let conj = |m: usize| block_diagonal(&b_inv, m, f);
        let lifted = &(&conj(self.count(k + 1)) * &self.coboundary(k)) * &block_diagonal(&b, self.count(k), f);
        Ok(lifted.to_integer().expect("lattice coordinates are integral"))
    }

    /// Pairs of periodic spacetime directions spanned by the 2-cells of a
    /// grid complex, in cell order.
    fn grid_two_cells(&self) -> Option<Vec<(usize, usize)>> {
        let key = self.grid.as_ref()?;
        Some(subsets(key.directions.len(), 2).iter().map(|s| (key.directions[s[0]], key.directions[s[1]])).collect())
    }
}

fn block_diagonal(block: &QMatrix, copies: usize, f: usize) -> QMatrix {
    QMatrix::from_fn(copies * f, copies * f, |r, c| {
        if r / f == c / f {
            block[(r % f, c % f)].clone()
        } else {
            Rational::zero()
        }
    })
}

/// `k`-element subsets of `0..p` in lexicographic order.
fn subsets(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            cur.push(i);
            extend(i + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, p, k, &mut Vec::new(), &mut out);
    out
}

/// Values of a `k`-cochain, `fiber` entries per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedCochain {
    pub degree: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    Real,
    Integer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cohomology {
    pub degree: usize,
    pub ring: Ring,
    /// Dimension over the reals, or free rank over the integers.
    pub rank: usize,
    /// Invariant factors greater than one (integer case only).
    pub torsion: Vec<BigInt>,
    /// Cocycles whose classes form a basis of the free part.
    pub representatives: Vec<Vec<Rational>>,
}

/// Smith form of a possibly empty matrix.
fn smith(m: &ZMatrix) -> crate::exact::Smith {
    if m.rows() == 0 || m.cols() == 0 {
        return crate::exact::Smith {
            u: ZMatrix::identity(m.rows()),
            u_inv: ZMatrix::identity(m.rows()),
            v: ZMatrix::identity(m.cols()),
            v_inv: ZMatrix::identity(m.cols()),
            divisors: Vec::new(),
        };
    }
    m.smith()
}

/// Integer structure of `H^k`: `kernel` holds a basis of the integral
/// cocycles (columns), `relations` the coboundaries in those coordinates.
struct IntegralCocycles {
    kernel: ZMatrix,
    kernel_left_inverse: ZMatrix,
    relations: crate::exact::Smith,
}

fn integral_cocycles(complex: &TwistedCellComplex, k: usize) -> Result<IntegralCocycles> {
    let next = complex.integer_coboundary(k)?;
    let width = complex.count(k) * complex.fiber;
    let s = smith(&next);
    let r = s.rank();
    let kernel = ZMatrix::from_fn(width, width - r, |i, j| s.v[(i, r + j)].clone());
    let kernel_left_inverse = ZMatrix::from_fn(width - r, width, |i, j| s.v_inv[(r + i, j)].clone());
    let prev = if k == 0 {
        ZMatrix::zeros(width, 0)
    } else {
        complex.integer_coboundary(k - 1)?
    };
    let relations = smith(&(&kernel_left_inverse * &prev));
    Ok(IntegralCocycles { kernel, kernel_left_inverse, relations })
}

impl IntegralCocycles {
    /// Integer functionals on `C^k` (lattice coordinates) reading off the
    /// free class coordinates.
    fn class_functionals(&self) -> ZMatrix {
        let m = self.kernel.cols();
        let s = self.relations.rank();
        let tail = ZMatrix::from_fn(m - s, m, |i, j| self.relations.u[(s + i, j)].clone());
        &tail * &self.kernel_left_inverse
    }

    /// Integral cocycles representing the free generators.
    fn generators(&self) -> ZMatrix {
        let m = self.kernel.cols();
        let s = self.relations.rank();
        let tail = ZMatrix::from_fn(m, m - s, |i, j| self.relations.u_inv[(i, s + j)].clone());
        &self.kernel * &tail
    }
}

/// `H^k` of the complex over the reals (computed exactly over the
/// rationals) or over the integers.
pub fn twisted_cohomology(complex: &TwistedCellComplex, k: usize, ring: Ring) -> Result<Cohomology> {
    if k >= complex.top_degree() {
        return Ok(Cohomology { degree: k, ring, rank: 0, torsion: Vec::new(), representatives: Vec::new() });
    }
    match ring {
        Ring::Real => {
            let kernel = complex.coboundary(k).nullspace();
            let image = if k == 0 { QMatrix::zeros(complex.count(0) * complex.fiber, 0) } else { complex.coboundary(k - 1) };
            let mut span = image.clone();
            let mut rank = span.rank();
            let mut representatives = Vec::new();
            for v in kernel {
                let candidate = span.hstack(&QMatrix::from_column(&v));
                let r = candidate.rank();
                if r > rank {
                    span = candidate;
                    rank = r;
                    representatives.push(v);
                }
            }
            Ok(Cohomology { degree: k, ring, rank: representatives.len(), torsion: Vec::new(), representatives })
        }
        Ring::Integer => {
            let ic = integral_cocycles(complex, k)?;
            let torsion = ic.relations.divisors.iter().filter(|d| !d.is_one()).cloned().collect();
            let gens = ic.generators();
            let b = complex.lattice_basis();
            let f = complex.fiber;
            let to_fiber = block_diagonal(&b, complex.count(k), f);
            let representatives = (0..gens.cols())
                .map(|j| to_fiber.mul_vec(&gens.column(j).into_iter().map(Rational::from_integer).collect::<Vec<_>>()))
                .collect::<Vec<_>>();
            Ok(Cohomology { degree: k, ring, rank: representatives.len(), torsion, representatives })
        }
    }
}

/// Image of integral cohomology in real cohomology: `generators` are cocycles
/// (fiber coordinates) whose classes span the image lattice, and
/// `functionals` read off the coordinates of a cocycle's class in that basis.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralImage {
    pub degree: usize,
    pub generators: Vec<Vec<Rational>>,
    pub functionals: QMatrix,
}

impl IntegralImage {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn coordinates(&self, cochain: &[f64]) -> Vec<f64> {
        let fl = self.functionals.to_f64();
        (0..fl.nrows()).map(|i| (0..fl.ncols()).map(|j| fl[(i, j)] * cochain[j]).sum()).collect()
    }
}

pub fn integral_image_basis(complex: &TwistedCellComplex, k: usize) -> Result<IntegralImage> {
    let width = complex.count(k) * complex.fiber;
    if k >= complex.top_degree() {
        return Ok(IntegralImage { degree: k, generators: Vec::new(), functionals: QMatrix::zeros(0, width) });
    }
    let ic = integral_cocycles(complex, k)?;
    let b = complex.lattice_basis();
    let b_inv = b.inverse().ok_or(Error::DegenerateLattice)?;
    let f = complex.fiber;
    let functionals = &ic.class_functionals().to_rational() * &block_diagonal(&b_inv, complex.count(k), f);
    let gens = ic.generators();
    let to_fiber = block_diagonal(&b, complex.count(k), f);
    let generators = (0..gens.cols())
        .map(|j| to_fiber.mul_vec(&gens.column(j).into_iter().map(Rational::from_integer).collect::<Vec<_>>()))
        .collect();
    Ok(IntegralImage { degree: k, generators, functionals })
}

/// Integrates `v` over the 2-cells of a grid complex with the trapezoid
/// rule, carrying values past the cut into the cell frame.
pub fn integrate_two_form(
    v: &TwistedTwoForm,
    grid: &SpacetimeGrid,
    complex: &TwistedCellComplex,
) -> Result<TwistedCochain> {
    let key = complex.grid.as_ref().ok_or(Error::ComplexMismatch)?;
    let winding: [Option<Word>; 4] = core::array::from_fn(|m| grid.winding(m).cloned());
    if key.shape != grid.shape() || key.periodic != grid.periodic() || key.winding != winding {
        return Err(Error::ComplexMismatch);
    }
    if v.nodes() != grid.len() || v.fiber() != complex.fiber {
        return Err(Error::ComplexMismatch);
    }
    let f = complex.fiber;
    let cells = complex.grid_two_cells().expect("grid complex");
    let mut values = vec![0.0; cells.len() * f];
    let shape = grid.shape();
    let h = grid.spacing();
    for (cell, &(m, n)) in cells.iter().enumerate() {
        let (slot, sign) = pair_slot(m, n).expect("distinct directions");
        let out = &mut values[cell * f..(cell + 1) * f];
        for i in 0..=shape[m] {
            for j in 0..=shape[n] {
                let w = trapezoid(i, shape[m]) * trapezoid(j, shape[n]) * h[m] * h[n] * sign;
                let mut idx = [0; 4];
                idx[m] = i % shape[m];
                idx[n] = j % shape[n];
                let block = v.at(grid.flat_index(idx));
                let mut u: Vec<f64> = block[slot * f..(slot + 1) * f].to_vec();
                for (dir, wrapped) in [(n, j == shape[n]), (m, i == shape[m])] {
                    if let (true, Some(t)) = (wrapped, grid.twist(dir)) {
                        u = (0..f).map(|r| (0..f).map(|c| t.rho[(r, c)] * u[c]).sum()).collect();
                    }
                }
                for (o, x) in out.iter_mut().zip(&u) {
                    *o += w * x;
                }
            }
        }
    }
    Ok(TwistedCochain { degree: 2, values })
}

fn trapezoid(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuantizationVerdict {
    /// The class is the lattice point `coefficients` within the rounding
    /// residual.
    Integral { coefficients: Vec<i64>, residual: f64 },
    NonIntegral { coefficients: Vec<f64>, nearest: Vec<i64>, residual: f64 },
    NotClosed { violation: f64 },
}

impl QuantizationVerdict {
    pub fn is_integral(&self) -> bool {
        matches!(self, QuantizationVerdict::Integral { .. })
    }
}

/// Decides whether the class of a 2-cochain lies in the integral image.
pub fn classify_cochain(complex: &TwistedCellComplex, cochain: &TwistedCochain, tol: f64) -> Result<QuantizationVerdict> {
    let k = cochain.degree;
    let width = complex.count(k) * complex.fiber;
    if cochain.values.len() != width {
        return Err(Error::ComplexMismatch);
    }
    let delta = complex.coboundary(k).to_f64();
    let violation = (0..delta.nrows())
        .map(|r| (0..width).map(|c| delta[(r, c)] * cochain.values[c]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if violation > tol {
        return Ok(QuantizationVerdict::NotClosed { violation });
    }
    let image = integral_image_basis(complex, k)?;
    let coefficients = image.coordinates(&cochain.values);
    let nearest: Vec<i64> = coefficients.iter().map(|a| libm::round(*a) as i64).collect();
    let residual = coefficients.iter().zip(&nearest).map(|(a, n)| (a - *n as f64).abs()).fold(0.0, f64::max);
    Ok(if residual <= tol {
        QuantizationVerdict::Integral { coefficients: nearest, residual }
    } else {
        QuantizationVerdict::NonIntegral { coefficients, nearest, residual }
    })
}

/// Integrates `v` over the cells of the grid complex and classifies the
/// resulting twisted class.
pub fn quantization_check(
    v: &TwistedTwoForm,
    grid: &SpacetimeGrid,
    complex: &TwistedCellComplex,
    tol: f64,
) -> Result<QuantizationVerdict> {
    let cochain = integrate_two_form(v, grid, complex)?;
    classify_cochain(complex, &cochain, tol)
}

/// `sum_k (-1)^k rank H^k` over the reals.
pub fn cohomological_euler_characteristic(complex: &TwistedCellComplex) -> Result<i64> {
    let mut chi = 0i64;
    for k in 0..complex.top_degree() {
        let r = twisted_cohomology(complex, k, Ring::Real)?.rank as i64;
        chi += if k % 2 == 0 { r } else { -r };
    }
    Ok(chi)
}

/// Converts exact cocycle entries for reporting.
pub fn cochain_to_f64(values: &[Rational]) -> Vec<f64> {
    values.iter().map(rational_to_f64).collect()
}

/// Invariant factors as machine integers when they fit.
pub fn torsion_to_u64(torsion: &[BigInt]) -> Vec<u64> {
    torsion.iter().map(|d| d.abs().to_u64().unwrap_or(u64::MAX)).collect()
}
