//! Four-dimensional chart grid with periodic cut directions and the bundle
//! valued forms living on it.
//!
//! Conventions: signature `(-,+,+,+)`, `eps_{0123} = +1`, and on 2-forms
//! `(*F)_{rs} = 1/2 sqrt|g| eps_{mnrs} F^{mn}`, so `** = -1` and
//! `(* x J)^2 = +1`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::local_system::Word;
use crate::target::{FundamentalField, ScalarTarget, TamingField};

pub type Tensor2 = [[f64; 4]; 4];

/// Index pairs `m < n` labelling 2-form components.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
/// Index triples `l < m < n` labelling 3-form components.
pub const TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

/// `(pair slot, sign)` with `F_{mn} = sign * F[slot]`.
pub fn pair_slot(m: usize, n: usize) -> Option<(usize, f64)> {
    if m == n {
        return None;
    }
    let (a, b, s) = if m < n { (m, n, 1.0) } else { (n, m, -1.0) };
    PAIRS.iter().position(|&p| p == (a, b)).map(|k| (k, s))
}

/// Levi-Civita symbol with `eps_{0123} = +1`.
pub fn levi_civita(idx: [usize; 4]) -> f64 {
    for i in 0..4 {
        for j in i + 1..4 {
            if idx[i] == idx[j] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    let mut p = idx;
    for i in 0..4 {
        while p[i] != i {
            let t = p[i];
            p.swap(i, t);
            sign = -sign;
        }
    }
    sign
}

/// Transition data of a periodic direction: the monodromy along the pulled
/// back loop and the jump of the lifted scalar map across the cut.
#[derive(Clone, Debug, PartialEq)]
pub struct CutTwist {
    pub word: Word,
    pub rho: DMatrix<f64>,
    pub rho_inv: DMatrix<f64>,
    pub period_shift: Vec<f64>,
}

/// One tap of a first-derivative stencil: node, cut crossings, weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap {
    pub node: usize,
    pub wrap: i8,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimeGrid {
    shape: [usize; 4],
    spacing: [f64; 4],
    origin: [f64; 4],
    periodic: [bool; 4],
    twists: [Option<CutTwist>; 4],
    strides: [usize; 4],
}

impl SpacetimeGrid {
    /// `winding[m]` is the target loop traced by the scalar map along the
    /// periodic direction `m`; `None` means the trivial loop.
    pub fn new(
        shape: [usize; 4],
        spacing: [f64; 4],
        origin: [f64; 4],
        periodic: [bool; 4],
        winding: [Option<Word>; 4],
        target: &ScalarTarget,
    ) -> Result<Self> {
        for m in 0..4 {
            if shape[m] == 0 || !(spacing[m] > 0.0) || !spacing[m].is_finite() {
                return Err(Error::Invalid("grid shape and spacing must be positive".into()));
            }
            if shape[m] > 1 && shape[m] < 3 {
                return Err(Error::GridTooCoarse { direction: m, points: shape[m], required: 3 });
            }
        }
        let rep = target.monodromy();
        let mut twists: [Option<CutTwist>; 4] = Default::default();
        for m in 0..4 {
            if !periodic[m] {
                continue;
            }
            let word = winding[m].clone().unwrap_or_default();
            let exact = rep.transport(&word)?;
            let sums = word.exponent_sums(rep.presentation().generator_count());
            let mut period_shift = vec![0.0; target.dim()];
            for (g, &n) in sums.iter().enumerate() {
                let dir = target.direction_of(g).expect("generator has a periodic direction");
                period_shift[dir] += n as f64 * target.periods()[dir].expect("periodic");
            }
            twists[m] = Some(CutTwist {
                word,
                rho: exact.to_f64(),
                rho_inv: exact.inverse().expect("symplectic").to_f64(),
                period_shift,
            });
        }
        let strides = [shape[1] * shape[2] * shape[3], shape[2] * shape[3], shape[3], 1];
        Ok(SpacetimeGrid { shape, spacing, origin, periodic, twists, strides })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn spacing(&self) -> [f64; 4] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 4] {
        self.origin
    }

    pub fn periodic(&self) -> [bool; 4] {
        self.periodic
    }

    pub fn twist(&self, m: usize) -> Option<&CutTwist> {
        self.twists[m].as_ref()
    }

    pub fn winding(&self, m: usize) -> Option<&Word> {
        self.twists[m].as_ref().map(|t| &t.word)
    }

    /// `N_m h_m` for periodic directions.
    pub fn period(&self, m: usize) -> Option<f64> {
        self.periodic[m].then(|| self.shape[m] as f64 * self.spacing[m])
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_active(&self, m: usize) -> bool {
        self.shape[m] > 1
    }

    pub fn multi_index(&self, node: usize) -> [usize; 4] {
        let mut idx = [0; 4];
        for m in 0..4 {
            idx[m] = (node / self.strides[m]) % self.shape[m];
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 4]) -> usize {
        (0..4).map(|m| idx[m] * self.strides[m]).sum()
    }

    pub fn coords(&self, node: usize) -> [f64; 4] {
        let idx = self.multi_index(node);
        core::array::from_fn(|m| self.origin[m] + idx[m] as f64 * self.spacing[m])
    }

    /// Second-order first-derivative stencil in direction `m`: central in the
    /// interior and across periodic cuts, one-sided at open boundaries.
    pub fn stencil(&self, node: usize, m: usize) -> ([Tap; 3], usize) {
        let none = Tap { node, wrap: 0, weight: 0.0 };
        let n = self.shape[m];
        if n == 1 {
            return ([none; 3], 0);
        }
        let h = self.spacing[m];
        let i = (node / self.strides[m]) % n;
        let base = node - i * self.strides[m];
        let at = |k: usize| base + k * self.strides[m];
        if self.periodic[m] {
            let (next, wn) = if i + 1 == n { (0, 1) } else { (i + 1, 0) };
            let (prev, wp) = if i == 0 { (n - 1, -1) } else { (i - 1, 0) };
            let taps = [
                Tap { node: at(next), wrap: wn, weight: 0.5 / h },
                Tap { node: at(prev), wrap: wp, weight: -0.5 / h },
                none,
            ];
            return (taps, 2);
        }
        if i == 0 {
            let taps = [
                Tap { node: at(0), wrap: 0, weight: -1.5 / h },
                Tap { node: at(1), wrap: 0, weight: 2.0 / h },
                Tap { node: at(2), wrap: 0, weight: -0.5 / h },
            ];
            (taps, 3)
        } else if i + 1 == n {
            let taps = [
                Tap { node: at(n - 1), wrap: 0, weight: 1.5 / h },
                Tap { node: at(n - 2), wrap: 0, weight: -2.0 / h },
                Tap { node: at(n - 3), wrap: 0, weight: 0.5 / h },
            ];
            (taps, 3)
        } else {
            let taps = [
                Tap { node: at(i + 1), wrap: 0, weight: 0.5 / h },
                Tap { node: at(i - 1), wrap: 0, weight: -0.5 / h },
                none,
            ];
            (taps, 2)
        }
    }

    /// Nodes at least `margin` steps away from every open boundary.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&node| {
                let idx = self.multi_index(node);
                (0..4).all(|m| {
                    self.periodic[m] || !self.is_active(m) || (idx[m] >= margin && idx[m] + margin < self.shape[m])
                })
            })
            .collect()
    }

    /// Nodes on the last slice of a periodic direction (where cuts are crossed).
    pub fn cut_nodes(&self, m: usize) -> Vec<usize> {
        (0..self.len()).filter(|&node| self.multi_index(node)[m] + 1 == self.shape[m]).collect()
    }

    pub fn require_points(&self, required: usize) -> Result<()> {
        for m in 0..4 {
            if self.is_active(m) && self.shape[m] < required {
                return Err(Error::GridTooCoarse { direction: m, points: self.shape[m], required });
            }
        }
        Ok(())
    }

    /// Same chart and cuts with every active direction refined by `factor`.
    pub fn refined(&self, factor: usize, target: &ScalarTarget) -> Result<Self> {
        let mut shape = self.shape;
        let mut spacing = self.spacing;
        for m in 0..4 {
            if !self.is_active(m) {
                continue;
            }
            if self.periodic[m] {
                shape[m] *= factor;
            } else {
                shape[m] = (shape[m] - 1) * factor + 1;
            }
            spacing[m] /= factor as f64;
        }
        let winding = core::array::from_fn(|m| self.winding(m).cloned());
        SpacetimeGrid::new(shape, spacing, self.origin, self.periodic, winding, target)
    }
}

/// Lorentzian metric with cached inverse, volume factor and the pointwise
/// Hodge and index-raising operators in the pair basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzMetricField {
    g: Vec<Tensor2>,
    g_inv: Vec<Tensor2>,
    vol: Vec<f64>,
    raise: Vec<[[f64; 6]; 6]>,
    star: Vec<[[f64; 6]; 6]>,
}

impl LorentzMetricField {
    pub fn from_values(grid: &SpacetimeGrid, g: Vec<Tensor2>) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), found: g.len() });
        }
        let n = g.len();
        let mut field = LorentzMetricField {
            g_inv: Vec::with_capacity(n),
            vol: Vec::with_capacity(n),
            raise: Vec::with_capacity(n),
            star: Vec::with_capacity(n),
            g: Vec::new(),
        };
        for m in &g {
            let mat = Matrix4::from_fn(|r, c| 0.5 * (m[r][c] + m[c][r]));
            let eig = SymmetricEigen::new(mat).eigenvalues;
            let scale = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if eig.iter().any(|v| v.abs() <= 1e-14 * scale) || scale == 0.0 {
                return Err(Error::SingularMetric);
            }
            let negative = eig.iter().filter(|v| **v < 0.0).count();
            if negative != 1 {
                return Err(Error::SignatureError { negative, positive: 4 - negative });
            }
            let inv = mat.try_inverse().ok_or(Error::SingularMetric)?;
            let inv: Tensor2 = core::array::from_fn(|r| core::array::from_fn(|c| inv[(r, c)]));
            let vol = libm::sqrt(mat.determinant().abs());
            let raise = raise_matrix(&inv);
            field.star.push(star_matrix(&raise, vol));
            field.raise.push(raise);
            field.g_inv.push(inv);
            field.vol.push(vol);
        }
        field.g = g;
        Ok(field)
    }

    pub fn from_fn(grid: &SpacetimeGrid, f: impl Fn([f64; 4]) -> Tensor2) -> Result<Self> {
        Self::from_values(grid, (0..grid.len()).map(|k| f(grid.coords(k))).collect())
    }

    pub fn minkowski(grid: &SpacetimeGrid) -> Self {
        Self::from_fn(grid, |_| MINKOWSKI).expect("Minkowski metric is Lorentzian")
    }

    pub fn g(&self, node: usize) -> &Tensor2 {
        &self.g[node]
    }

    pub fn g_inv(&self, node: usize) -> &Tensor2 {
        &self.g_inv[node]
    }

    pub fn vol(&self, node: usize) -> f64 {
        self.vol[node]
    }

    pub fn values(&self) -> &[Tensor2] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Hodge dual of a real 2-form given by its six pair components.
    pub fn hodge(&self, node: usize, f: &[f64; 6]) -> [f64; 6] {
        apply6(&self.star[node], f)
    }

    /// `F^{mn}` for `m < n`.
    pub fn raise_pair(&self, node: usize, f: &[f64; 6]) -> [f64; 6] {
        apply6(&self.raise[node], f)
    }
}

pub const MINKOWSKI: Tensor2 = [[-1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

fn apply6(m: &[[f64; 6]; 6], f: &[f64; 6]) -> [f64; 6] {
    core::array::from_fn(|p| (0..6).map(|q| m[p][q] * f[q]).sum())
}

fn raise_matrix(inv: &Tensor2) -> [[f64; 6]; 6] {
    core::array::from_fn(|p| {
        let (m, n) = PAIRS[p];
        core::array::from_fn(|q| {
            let (a, b) = PAIRS[q];
            inv[m][a] * inv[n][b] - inv[m][b] * inv[n][a]
        })
    })
}

fn star_matrix(raise: &[[f64; 6]; 6], vol: f64) -> [[f64; 6]; 6] {
    core::array::from_fn(|p| {
        let (r, s) = PAIRS[p];
        core::array::from_fn(|q| {
            (0..6)
                .map(|k| {
                    let (m, n) = PAIRS[k];
                    levi_civita([m, n, r, s]) * raise[k][q]
                })
                .sum::<f64>()
                * vol
        })
    })
}

/// Lifted scalar map `phi: M -> R^d`; across the cut in direction `m` the
/// lift jumps by the period vector of the winding loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMapField {
    dim: usize,
    values: Vec<f64>,
}

impl ScalarMapField {
    pub fn from_values(grid: &SpacetimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * dim {
            return Err(Error::Dimension { expected: grid.len() * dim, found: values.len() });
        }
        Ok(ScalarMapField { dim, values })
    }

    pub fn constant(grid: &SpacetimeGrid, y: &[f64]) -> Self {
        let values = (0..grid.len()).flat_map(|_| y.iter().copied()).collect();
        ScalarMapField { dim: y.len(), values }
    }

    /// Samples `f`; on the cut slices checks `f(x + L e_m) = f(x) + shift_m`.
    pub fn from_fn(grid: &SpacetimeGrid, dim: usize, f: impl Fn([f64; 4]) -> Vec<f64>, tol: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for k in 0..grid.len() {
            let y = f(grid.coords(k));
            if y.len() != dim {
                return Err(Error::Dimension { expected: dim, found: y.len() });
            }
            values.extend(y);
        }
        for m in 0..4 {
            let (Some(l), Some(twist)) = (grid.period(m), grid.twist(m)) else { continue };
            for node in grid.cut_nodes(m) {
                let x = grid.coords(node);
                let mut shifted = x;
                shifted[m] += l;
                let a = f(x);
                let b = f(shifted);
                let violation = (0..dim).map(|i| (b[i] - a[i] - twist.period_shift[i]).abs()).fold(0.0, f64::max);
                if violation > tol {
                    return Err(Error::CutIncompatible { direction: m, violation });
                }
            }
        }
        Ok(ScalarMapField { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `d_m phi^i` at every node, laid out `[node][m][i]`.
    pub fn differential(&self, grid: &SpacetimeGrid) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; grid.len() * 4 * d];
        for node in 0..grid.len() {
            for m in 0..4 {
                let (taps, len) = grid.stencil(node, m);
                let shift = grid.twist(m).map(|t| &t.period_shift[..]);
                // weights sum to zero, so differencing against the center
                // keeps derivatives of constants exactly zero
                for tap in &taps[..len] {
                    for i in 0..d {
                        let mut v = self.values[tap.node * d + i];
                        if let (Some(s), w) = (shift, tap.wrap) {
                            v += f64::from(w) * s[i];
                        }
                        out[(node * 4 + m) * d + i] += tap.weight * (v - self.values[node * d + i]);
                    }
                }
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for chunk in self.values.chunks(self.dim) {
            values.extend(f(chunk));
        }
        ScalarMapField { dim: self.dim, values }
    }
}

/// Bundle valued 2-form in the cut trivialization, stored as
/// `[node][pair][fiber]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedTwoForm {
    fiber: usize,
    data: Vec<f64>,
}

impl TwistedTwoForm {
    pub fn zero(grid: &SpacetimeGrid, fiber: usize) -> Self {
        TwistedTwoForm { fiber, data: vec![0.0; grid.len() * 6 * fiber] }
    }

    pub fn from_values(grid: &SpacetimeGrid, fiber: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() * 6 * fiber {
            return Err(Error::Dimension { expected: grid.len() * 6 * fiber, found: data.len() });
        }
        Ok(TwistedTwoForm { fiber, data })
    }

    /// Samples `f(x)` (six pair blocks of `fiber` entries) and checks cut
    /// compatibility `V(x + L e_m) = rho_m V(x)` on the cut slices.
    pub fn from_fn(grid: &SpacetimeGrid, fiber: usize, f: impl Fn([f64; 4]) -> Vec<f64>, tol: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * 6 * fiber);
        for k in 0..grid.len() {
            let v = f(grid.coords(k));
            if v.len() != 6 * fiber {
                return Err(Error::Dimension { expected: 6 * fiber, found: v.len() });
            }
            data.extend(v);
        }
        for m in 0..4 {
            let (Some(l), Some(twist)) = (grid.period(m), grid.twist(m)) else { continue };
            for node in grid.cut_nodes(m) {
                let x = grid.coords(node);
                let mut shifted = x;
                shifted[m] += l;
                let a = f(x);
                let b = f(shifted);
                let mut violation = 0.0f64;
                for p in 0..6 {
                    for r in 0..fiber {
                        let t: f64 = (0..fiber).map(|c| twist.rho[(r, c)] * a[p * fiber + c]).sum();
                        violation = violation.max((b[p * fiber + r] - t).abs());
                    }
                }
                if violation > tol {
                    return Err(Error::CutIncompatible { direction: m, violation });
                }
            }
        }
        Ok(TwistedTwoForm { fiber, data })
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / (6 * self.fiber)
    }

    /// Block of `6 * fiber` values at a node.
    pub fn at(&self, node: usize) -> &[f64] {
        let w = 6 * self.fiber;
        &self.data[node * w..(node + 1) * w]
    }

    fn at_mut(&mut self, node: usize) -> &mut [f64] {
        let w = 6 * self.fiber;
        &mut self.data[node * w..(node + 1) * w]
    }

    /// `V^a_{mn}` with antisymmetry.
    pub fn component(&self, node: usize, a: usize, m: usize, n: usize) -> f64 {
        match pair_slot(m, n) {
            Some((p, s)) => s * self.at(node)[p * self.fiber + a],
            None => 0.0,
        }
    }

    /// Real 2-form `V^a` at a node.
    pub fn real_form(&self, node: usize, a: usize) -> [f64; 6] {
        let block = self.at(node);
        core::array::from_fn(|p| block[p * self.fiber + a])
    }

    /// `V -> M(node) V` acting on the fiber index.
    pub fn map_fiber(&self, m: impl Fn(usize) -> DMatrix<f64>) -> Self {
        let mut out = self.clone();
        let f = self.fiber;
        for node in 0..self.nodes() {
            let mat = m(node);
            let src = self.at(node);
            let dst = out.at_mut(node);
            for p in 0..6 {
                for r in 0..f {
                    dst[p * f + r] = (0..f).map(|c| mat[(r, c)] * src[p * f + c]).sum();
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        TwistedTwoForm { fiber: self.fiber, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        TwistedTwoForm { fiber: self.fiber, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        TwistedTwoForm { fiber: self.fiber, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Bundle valued 3-form, stored as `[node][triple][fiber]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeForm {
    fiber: usize,
    data: Vec<f64>,
}

impl ThreeForm {
    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let w = 4 * self.fiber;
        &self.data[node * w..(node + 1) * w]
    }

    /// Fiber vector of the component `(l, m, n)` with `l < m < n`.
    pub fn component(&self, node: usize, triple: usize) -> &[f64] {
        let f = self.fiber;
        &self.at(node)[triple * f..(triple + 1) * f]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Pullbacks `J(phi(x))` and `Q(phi(x))` at every node.
#[derive(Clone, Debug)]
pub struct HodgeContext {
    j: Vec<DMatrix<f64>>,
    q: Vec<DMatrix<f64>>,
}

impl HodgeContext {
    pub fn new(taming: &TamingField, phi: &ScalarMapField) -> Result<Self> {
        if phi.dim() != taming.target().dim() {
            return Err(Error::Dimension { expected: taming.target().dim(), found: phi.dim() });
        }
        let omega = taming.space().omega_f64();
        let nodes = phi.values().len() / phi.dim();
        let mut j = Vec::with_capacity(nodes);
        let mut q = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let jm = taming.eval(phi.at(node));
            q.push(jm.transpose() * &omega);
            j.push(jm);
        }
        Ok(HodgeContext { j, q })
    }

    pub fn j(&self, node: usize) -> &DMatrix<f64> {
        &self.j[node]
    }

    pub fn q(&self, node: usize) -> &DMatrix<f64> {
        &self.q[node]
    }

    pub fn fiber(&self) -> usize {
        self.j.first().map_or(0, |m| m.nrows())
    }
}

fn check_shapes(g: &LorentzMetricField, ctx: &HodgeContext, v: &TwistedTwoForm) -> Result<()> {
    if v.nodes() != g.len() {
        return Err(Error::Dimension { expected: g.len(), found: v.nodes() });
    }
    if ctx.j.len() != g.len() {
        return Err(Error::Dimension { expected: g.len(), found: ctx.j.len() });
    }
    if ctx.fiber() != v.fiber() {
        return Err(Error::Dimension { expected: ctx.fiber(), found: v.fiber() });
    }
    Ok(())
}

/// `*_g` on every fiber component, no fiber action.
pub fn hodge_untwisted(g: &LorentzMetricField, v: &TwistedTwoForm) -> Result<TwistedTwoForm> {
    if v.nodes() != g.len() {
        return Err(Error::Dimension { expected: g.len(), found: v.nodes() });
    }
    let f = v.fiber;
    let mut out = v.clone();
    for node in 0..g.len() {
        let star = &g.star[node];
        let src = v.at(node);
        let dst = out.at_mut(node);
        for p in 0..6 {
            for a in 0..f {
                dst[p * f + a] = (0..6).map(|q| star[p][q] * src[q * f + a]).sum();
            }
        }
    }
    Ok(out)
}

/// `(* x J) V`: Hodge dual followed by the pulled back taming.
pub fn twisted_hodge(g: &LorentzMetricField, ctx: &HodgeContext, v: &TwistedTwoForm) -> Result<TwistedTwoForm> {
    check_shapes(g, ctx, v)?;
    let starred = hodge_untwisted(g, v)?;
    Ok(starred.map_fiber(|node| ctx.j[node].clone()))
}

/// `(V + *V) / 2`, the projection onto the positively polarized forms.
pub fn polarize(g: &LorentzMetricField, ctx: &HodgeContext, v: &TwistedTwoForm) -> Result<TwistedTwoForm> {
    Ok(v.add(&twisted_hodge(g, ctx, v)?).scale(0.5))
}

/// `(V - *V) / 2`.
pub fn antipolarize(g: &LorentzMetricField, ctx: &HodgeContext, v: &TwistedTwoForm) -> Result<TwistedTwoForm> {
    Ok(v.sub(&twisted_hodge(g, ctx, v)?).scale(0.5))
}

/// First derivatives of every component of `v` in direction `m` at `node`,
/// with neighbors across a cut transported by the cut monodromy.
fn twisted_partial(grid: &SpacetimeGrid, v: &TwistedTwoForm, node: usize, m: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let f = v.fiber;
    let (taps, len) = grid.stencil(node, m);
    let center = v.at(node);
    for tap in &taps[..len] {
        let src = v.at(tap.node);
        let twist = match tap.wrap {
            0 => None,
            1 => grid.twist(m).map(|t| &t.rho),
            _ => grid.twist(m).map(|t| &t.rho_inv),
        };
        for p in 0..6 {
            for r in 0..f {
                let val = match twist {
                    Some(t) => (0..f).map(|c| t[(r, c)] * src[p * f + c]).sum(),
                    None => src[p * f + r],
                };
                out[p * f + r] += tap.weight * (val - center[p * f + r]);
            }
        }
    }
}

/// Exterior derivative `(dV)_{lmn} = d_l V_{mn} + d_m V_{nl} + d_n V_{lm}`.
pub fn twisted_d(v: &TwistedTwoForm, grid: &SpacetimeGrid) -> Result<ThreeForm> {
    if v.nodes() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), found: v.nodes() });
    }
    grid.require_points(3)?;
    let f = v.fiber;
    let mut data = vec![0.0; grid.len() * 4 * f];
    let mut partial = vec![vec![0.0; 6 * f]; 4];
    for node in 0..grid.len() {
        for (m, buf) in partial.iter_mut().enumerate() {
            twisted_partial(grid, v, node, m, buf);
        }
        for (t, &(l, m, n)) in TRIPLES.iter().enumerate() {
            for a in 0..f {
                let get = |d: usize, i: usize, j: usize| {
                    let (p, s) = pair_slot(i, j).expect("distinct");
                    s * partial[d][p * f + a]
                };
                data[(node * 4 + t) * f + a] = get(l, m, n) + get(m, n, l) + get(n, l, m);
            }
        }
    }
    Ok(ThreeForm { fiber: f, data })
}

/// `(V1 (/) V2)_{mn} = Q_ab V1^a_{ml} g^{ls} V2^b_{sn}` per node.
pub fn inner_contraction(
    v1: &TwistedTwoForm,
    v2: &TwistedTwoForm,
    g: &LorentzMetricField,
    ctx: &HodgeContext,
) -> Result<Vec<Tensor2>> {
    check_shapes(g, ctx, v1)?;
    check_shapes(g, ctx, v2)?;
    let f = v1.fiber;
    let mut out = Vec::with_capacity(g.len());
    for node in 0..g.len() {
        let q = &ctx.q[node];
        let ginv = &g.g_inv[node];
        let a1: Vec<[[f64; 4]; 4]> = (0..f).map(|a| full_form(&v1.real_form(node, a))).collect();
        let a2: Vec<[[f64; 4]; 4]> = (0..f).map(|b| full_form(&v2.real_form(node, b))).collect();
        // W_b = V2^b with its first index raised: W_b^l_n = g^{ls} V2^b_{sn}
        let raised: Vec<Tensor2> = a2
            .iter()
            .map(|v| core::array::from_fn(|l| core::array::from_fn(|n| (0..4).map(|s| ginv[l][s] * v[s][n]).sum())))
            .collect();
        let mut t = [[0.0; 4]; 4];
        for a in 0..f {
            for b in 0..f {
                let qab = q[(a, b)];
                if qab == 0.0 {
                    continue;
                }
                for m in 0..4 {
                    for n in 0..4 {
                        let s: f64 = (0..4).map(|l| a1[a][m][l] * raised[b][l][n]).sum();
                        t[m][n] += qab * s;
                    }
                }
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Antisymmetric 4x4 array from pair components.
pub fn full_form(f: &[f64; 6]) -> Tensor2 {
    let mut out = [[0.0; 4]; 4];
    for (p, &(m, n)) in PAIRS.iter().enumerate() {
        out[m][n] = f[p];
        out[n][m] = -f[p];
    }
    out
}

/// Fundamental field `Psi^k(phi(x))` at every node.
pub fn pulled_back_fundamental_field(psi: &FundamentalField, phi: &ScalarMapField) -> Result<Vec<Vec<DMatrix<f64>>>> {
    (0..phi.values().len() / phi.dim()).map(|node| psi.psi(phi.at(node))).collect()
}

/// `1/2 (*V, Psi^k V)` with the 2-form product `(A, B) = 1/2 A_{mn} B^{mn}`
/// and fiber pairing `Q`; one `d`-vector per node.
pub fn scalar_pairing(
    v: &TwistedTwoForm,
    psi: &[Vec<DMatrix<f64>>],
    g: &LorentzMetricField,
    ctx: &HodgeContext,
) -> Result<Vec<Vec<f64>>> {
    check_shapes(g, ctx, v)?;
    if psi.len() != g.len() {
        return Err(Error::Dimension { expected: g.len(), found: psi.len() });
    }
    let starred = hodge_untwisted(g, v)?;
    let f = v.fiber;
    let mut out = Vec::with_capacity(g.len());
    for node in 0..g.len() {
        let q = &ctx.q[node];
        let star_forms: Vec<[f64; 6]> = (0..f).map(|a| starred.real_form(node, a)).collect();
        let raw: Vec<[f64; 6]> = (0..f).map(|a| v.real_form(node, a)).collect();
        let values = psi[node]
            .iter()
            .map(|pk| {
                let mut total = 0.0;
                for b in 0..f {
                    // (Psi^k V)^b, raised
                    let mixed: [f64; 6] = core::array::from_fn(|p| (0..f).map(|c| pk[(b, c)] * raw[c][p]).sum());
                    let up = g.raise_pair(node, &mixed);
                    for (a, sa) in star_forms.iter().enumerate() {
                        let qab = q[(a, b)];
                        if qab != 0.0 {
                            total += qab * (0..6).map(|p| sa[p] * up[p]).sum::<f64>();
                        }
                    }
                }
                0.5 * total
            })
            .collect();
        out.push(values);
    }
    Ok(out)
}
