//! Flat-chart scalar target with periodic directions, the taming field on the
//! duality bundle, its fundamental form and the index-raised fundamental field.
//!
//! The flat connection is trivialized on the cut chart, so covariant
//! derivatives are ordinary derivatives and crossing a cut in periodic
//! direction `i` conjugates by the monodromy `rho_i`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::local_system::MonodromyRep;
use crate::symplectic::{validate_taming, SymplecticSpace};

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Regular lattice of sample points. Periodic directions are covered by
/// `count` points spaced `period / count` starting at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    counts: Vec<usize>,
    periodic: Vec<bool>,
}

impl SampleGrid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>, periodic: Vec<bool>) -> Result<Self> {
        let d = origin.len();
        for len in [spacing.len(), counts.len(), periodic.len()] {
            if len != d {
                return Err(Error::Dimension { expected: d, found: len });
            }
        }
        if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::Invalid("sample spacing must be positive".into()));
        }
        if counts.contains(&0) {
            return Err(Error::Invalid("sample counts must be positive".into()));
        }
        Ok(SampleGrid { origin, spacing, counts, periodic })
    }

    /// Grid matching the target's periods: periodic directions are sampled on
    /// `[0, L)`, the others on the given closed intervals.
    pub fn for_target(target: &ScalarTarget, counts: &[usize], ranges: &[(f64, f64)]) -> Result<Self> {
        let d = target.dim();
        if counts.len() != d || ranges.len() != d {
            return Err(Error::Dimension { expected: d, found: counts.len().min(ranges.len()) });
        }
        let mut origin = vec![0.0; d];
        let mut spacing = vec![0.0; d];
        let mut periodic = vec![false; d];
        for i in 0..d {
            match target.periods[i] {
                Some(l) => {
                    spacing[i] = l / counts[i] as f64;
                    periodic[i] = true;
                }
                None => {
                    let (a, b) = ranges[i];
                    origin[i] = a;
                    spacing[i] = if counts[i] > 1 { (b - a) / (counts[i] - 1) as f64 } else { 1.0 };
                }
            }
        }
        SampleGrid::new(origin, spacing, counts.to_vec(), periodic)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            idx[i] = flat % self.counts[i];
            flat /= self.counts[i];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.origin[i] + k as f64 * self.spacing[i])
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Multilinear interpolation weights at `y`: `(flat index, wraps, weight)`
    /// where `wraps[i]` counts how many periods direction `i` was shifted.
    /// Non-periodic directions extrapolate linearly beyond the grid.
    pub fn stencil(&self, y: &[f64]) -> Vec<(usize, Vec<i64>, f64)> {
        let d = self.dim();
        let mut axes: Vec<[(usize, i64, f64); 2]> = Vec::with_capacity(d);
        for i in 0..d {
            let n = self.counts[i];
            let t = (y[i] - self.origin[i]) / self.spacing[i];
            if n == 1 {
                axes.push([(0, 0, 1.0), (0, 0, 0.0)]);
                continue;
            }
            if self.periodic[i] {
                let k = libm::floor(t) as i64;
                let frac = t - k as f64;
                let n = n as i64;
                let lo = (k.rem_euclid(n) as usize, k.div_euclid(n), 1.0 - frac);
                let hi = ((k + 1).rem_euclid(n) as usize, (k + 1).div_euclid(n), frac);
                axes.push([lo, hi]);
            } else {
                let k = (libm::floor(t) as i64).clamp(0, n as i64 - 2);
                let frac = t - k as f64;
                axes.push([(k as usize, 0, 1.0 - frac), (k as usize + 1, 0, frac)]);
            }
        }
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut idx = vec![0; d];
            let mut wraps = vec![0; d];
            let mut w = 1.0;
            for i in 0..d {
                let (k, wrap, weight) = axes[i][(corner >> i) & 1];
                idx[i] = k;
                wraps[i] = wrap;
                w *= weight;
            }
            if w != 0.0 {
                out.push((self.flat_index(&idx), wraps, w));
            }
        }
        out
    }
}

#[derive(Clone)]
pub enum MetricField {
    Constant(DMatrix<f64>),
    Sampled { grid: SampleGrid, values: Vec<DMatrix<f64>> },
    Custom(MatrixFn),
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricField::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MetricField::Sampled { grid, .. } => f.debug_struct("Sampled").field("grid", grid).finish(),
            MetricField::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone)]
pub enum PotentialField {
    Constant(f64),
    Sampled { grid: SampleGrid, values: Vec<f64> },
    Custom { value: ScalarFn, gradient: Option<VectorFn> },
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialField::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            PotentialField::Sampled { grid, .. } => f.debug_struct("Sampled").field("grid", grid).finish(),
            PotentialField::Custom { gradient, .. } => {
                f.debug_struct("Custom").field("analytic_gradient", &gradient.is_some()).finish()
            }
        }
    }
}

/// Scalar structure on a flat chart `R^d` with optional periodic coordinates,
/// together with the monodromy of the duality structure around them.
#[derive(Clone, Debug)]
pub struct ScalarTarget {
    periods: Vec<Option<f64>>,
    metric: MetricField,
    potential: PotentialField,
    monodromy: MonodromyRep,
    generator_of: Vec<Option<usize>>,
    rho: Vec<DMatrix<f64>>,
    rho_inv: Vec<DMatrix<f64>>,
    fd_step: f64,
}

impl ScalarTarget {
    /// `monodromy` carries one generator per periodic coordinate, in order.
    pub fn new(
        periods: Vec<Option<f64>>,
        metric: MetricField,
        potential: PotentialField,
        monodromy: MonodromyRep,
    ) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::Invalid("target dimension must be positive".into()));
        }
        if periods.iter().flatten().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::Invalid("periods must be positive".into()));
        }
        let periodic = periods.iter().filter(|p| p.is_some()).count();
        let gens = monodromy.presentation().generator_count();
        if gens != periodic {
            return Err(Error::Dimension { expected: periodic, found: gens });
        }
        let images = monodromy.images();
        for i in 0..gens {
            for j in i + 1..gens {
                if &images[i] * &images[j] != &images[j] * &images[i] {
                    return Err(Error::RelationViolated { relation: i * gens + j });
                }
            }
        }
        if let MetricField::Constant(m) = &metric {
            check_metric(m, periods.len())?;
        }
        let mut generator_of = vec![None; periods.len()];
        let mut next = 0;
        for (i, p) in periods.iter().enumerate() {
            if p.is_some() {
                generator_of[i] = Some(next);
                next += 1;
            }
        }
        let rho = images.iter().map(|m| m.to_f64()).collect();
        let rho_inv = images.iter().map(|m| m.inverse().expect("symplectic image is invertible").to_f64()).collect();
        Ok(ScalarTarget { periods, metric, potential, monodromy, generator_of, rho, rho_inv, fd_step: DEFAULT_FD_STEP })
    }

    /// Flat metric `I`, vanishing potential.
    pub fn flat(periods: Vec<Option<f64>>, monodromy: MonodromyRep) -> Result<Self> {
        let d = periods.len();
        Self::new(periods, MetricField::Constant(DMatrix::identity(d, d)), PotentialField::Constant(0.0), monodromy)
    }

    /// Step used when differentiating non-constant metric and potential fields.
    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn monodromy(&self) -> &MonodromyRep {
        &self.monodromy
    }

    pub fn metric_field(&self) -> &MetricField {
        &self.metric
    }

    pub fn potential_field(&self) -> &PotentialField {
        &self.potential
    }

    pub fn fiber_dim(&self) -> usize {
        self.monodromy.dim()
    }

    /// Monodromy generator attached to a periodic coordinate.
    pub fn generator_of(&self, direction: usize) -> Option<usize> {
        self.generator_of[direction]
    }

    /// The coordinate whose loop is generator `g`.
    pub fn direction_of(&self, generator: usize) -> Option<usize> {
        self.generator_of.iter().position(|&g| g == Some(generator))
    }

    pub fn rho_f64(&self, generator: usize) -> &DMatrix<f64> {
        &self.rho[generator]
    }

    /// Shifts `y` into the fundamental domain; returns the reduced point and
    /// the number of periods removed per coordinate.
    pub fn reduce(&self, y: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let mut out = y.to_vec();
        let mut wraps = vec![0; y.len()];
        for (i, p) in self.periods.iter().enumerate() {
            if let Some(l) = p {
                let m = libm::floor(y[i] / l);
                out[i] = y[i] - m * l;
                wraps[i] = m as i64;
            }
        }
        (out, wraps)
    }

    /// `prod_i rho_i^{wraps_i}` and its inverse, for per-coordinate wraps.
    pub fn monodromy_power(&self, wraps: &[i64]) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        if wraps.iter().all(|&w| w == 0) {
            return None;
        }
        let n = self.fiber_dim();
        let mut m = DMatrix::identity(n, n);
        let mut m_inv = DMatrix::identity(n, n);
        for (i, &w) in wraps.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let g = self.generator_of[i].expect("wraps only occur in periodic directions");
            let (fwd, bwd) = if w > 0 { (&self.rho[g], &self.rho_inv[g]) } else { (&self.rho_inv[g], &self.rho[g]) };
            for _ in 0..w.unsigned_abs() {
                m = &m * fwd;
                m_inv = bwd * &m_inv;
            }
        }
        Some((m, m_inv))
    }

    /// `G(y)`; sampled metrics are interpolated with plain periodic wrap.
    pub fn metric(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.metric {
            MetricField::Constant(m) => m.clone(),
            MetricField::Sampled { grid, values } => {
                let d = self.dim();
                grid.stencil(y).into_iter().fold(DMatrix::zeros(d, d), |acc, (k, _, w)| acc + &values[k] * w)
            }
            MetricField::Custom(f) => f(y),
        }
    }

    pub fn metric_inverse(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.metric(y).try_inverse().ok_or(Error::SingularMetric)
    }

    pub fn potential(&self, y: &[f64]) -> f64 {
        match &self.potential {
            PotentialField::Constant(c) => *c,
            PotentialField::Sampled { grid, values } => grid.stencil(y).into_iter().map(|(k, _, w)| values[k] * w).sum(),
            PotentialField::Custom { value, .. } => value(y),
        }
    }

    /// `dPhi(y)`: analytic when supplied, else a 4-point central difference.
    pub fn potential_gradient(&self, y: &[f64]) -> Vec<f64> {
        match &self.potential {
            PotentialField::Constant(_) => vec![0.0; self.dim()],
            PotentialField::Custom { gradient: Some(g), .. } => g(y),
            _ => {
                let h = self.fd_step;
                (0..self.dim())
                    .map(|i| {
                        let at = |s: f64| {
                            let mut p = y.to_vec();
                            p[i] += s * h;
                            self.potential(&p)
                        };
                        (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// `grad_G Phi = G^{-1} dPhi`.
    pub fn potential_gradient_raised(&self, y: &[f64]) -> Result<Vec<f64>> {
        let inv = self.metric_inverse(y)?;
        let grad = DVector::from_vec(self.potential_gradient(y));
        Ok((inv * grad).iter().copied().collect())
    }

    /// Levi-Civita symbols of `G`: entry `[k][(i, j)] = Gamma^k_{ij}`.
    pub fn christoffel(&self, y: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let d = self.dim();
        if matches!(self.metric, MetricField::Constant(_)) {
            return Ok(vec![DMatrix::zeros(d, d); d]);
        }
        let h = self.fd_step;
        let dg: Vec<DMatrix<f64>> = (0..d)
            .map(|l| {
                let mut p = y.to_vec();
                p[l] += h;
                let plus = self.metric(&p);
                p[l] -= 2.0 * h;
                (plus - self.metric(&p)) / (2.0 * h)
            })
            .collect();
        let inv = self.metric_inverse(y)?;
        let mut gamma = vec![DMatrix::zeros(d, d); d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma[k][(i, j)] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// Checks positive definiteness of `G` at every grid point.
    pub fn validate_metric_on(&self, grid: &SampleGrid) -> Result<()> {
        grid.points().try_for_each(|y| check_metric(&self.metric(&y), self.dim()))
    }
}

fn check_metric(m: &DMatrix<f64>, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension { expected: d, found: m.nrows() });
    }
    let sym = (m + m.transpose()) * 0.5;
    if (m - &sym).amax() > 1e-12 * (1.0 + m.amax()) || sym.cholesky().is_none() {
        return Err(Error::NotPositiveMetric);
    }
    Ok(())
}

/// Affine map `y -> A y + shift` on the target chart.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub shift: Vec<f64>,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        AffineMap { linear: DMatrix::identity(d, d), shift: vec![0.0; d] }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.linear * DVector::from_column_slice(y);
        v.iter().zip(&self.shift).map(|(a, b)| a + b).collect()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.linear.clone().try_inverse().ok_or_else(|| Error::Invalid("target map is singular".into()))?;
        let shift = (&inv * DVector::from_column_slice(&self.shift)).iter().map(|v| -v).collect();
        Ok(AffineMap { linear: inv, shift })
    }

    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let shift = self.apply(&inner.shift);
        AffineMap { linear: &self.linear * &inner.linear, shift }
    }
}

#[derive(Clone)]
pub enum TamingKind {
    Constant(DMatrix<f64>),
    /// `E(y) J E(y)^{-1}` with `E(y) = exp(sum_i y_i X_i)`.
    Conjugated { base: DMatrix<f64>, generators: Vec<DMatrix<f64>> },
    /// One matrix per point of the sample grid; interpolated and retracted
    /// onto complex structures between samples.
    Sampled(Vec<DMatrix<f64>>),
    /// `F J(f0^{-1}(y)) F^{-1}`.
    Transformed { inner: Box<TamingField>, lift: DMatrix<f64>, lift_inv: DMatrix<f64>, inverse_map: AffineMap },
    Custom(MatrixFn),
}

impl fmt::Debug for TamingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TamingKind::Constant(j) => f.debug_tuple("Constant").field(j).finish(),
            TamingKind::Conjugated { base, generators } => {
                f.debug_struct("Conjugated").field("base", base).field("generators", generators).finish()
            }
            TamingKind::Sampled(v) => f.debug_tuple("Sampled").field(&v.len()).finish(),
            TamingKind::Transformed { lift, .. } => f.debug_struct("Transformed").field("lift", lift).finish(),
            TamingKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Taming `J(y)` of the duality bundle in the cut trivialization.
#[derive(Clone, Debug)]
pub struct TamingField {
    kind: TamingKind,
    grid: SampleGrid,
    target: ScalarTarget,
    sp: SymplecticSpace,
}

impl TamingField {
    /// Validates `J` as a taming at every sample point.
    pub fn new(kind: TamingKind, grid: SampleGrid, target: &ScalarTarget, tol: f64) -> Result<Self> {
        if grid.dim() != target.dim() {
            return Err(Error::Dimension { expected: target.dim(), found: grid.dim() });
        }
        if let TamingKind::Sampled(values) = &kind {
            if values.len() != grid.len() {
                return Err(Error::Dimension { expected: grid.len(), found: values.len() });
            }
        }
        if let TamingKind::Conjugated { generators, .. } = &kind {
            if generators.len() != target.dim() {
                return Err(Error::Dimension { expected: target.dim(), found: generators.len() });
            }
        }
        let field = TamingField { kind, grid, target: target.clone(), sp: target.monodromy().space().clone() };
        for y in field.grid.points() {
            validate_taming(&field.raw(&y), &field.sp, tol)?;
        }
        Ok(field)
    }

    pub fn constant(j: DMatrix<f64>, grid: SampleGrid, target: &ScalarTarget, tol: f64) -> Result<Self> {
        Self::new(TamingKind::Constant(j), grid, target, tol)
    }

    pub fn kind(&self) -> &TamingKind {
        &self.kind
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn target(&self) -> &ScalarTarget {
        &self.target
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.sp
    }

    pub fn fiber_dim(&self) -> usize {
        self.sp.dim()
    }

    /// The defining formula evaluated at an arbitrary chart point with no
    /// reduction to the fundamental domain.
    pub fn raw(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            TamingKind::Constant(j) => j.clone(),
            TamingKind::Conjugated { base, generators } => {
                let n = base.nrows();
                let x = generators.iter().zip(y).fold(DMatrix::zeros(n, n), |acc, (g, &t)| acc + g * t);
                let e = expm(&x);
                let e_inv = expm(&(-x));
                &e * base * e_inv
            }
            TamingKind::Sampled(values) => {
                let n = self.fiber_dim();
                let mut acc = DMatrix::zeros(n, n);
                for (k, wraps, w) in self.grid.stencil(y) {
                    let v = match self.target.monodromy_power(&wraps) {
                        Some((m, m_inv)) => &m * &values[k] * &m_inv,
                        None => values[k].clone(),
                    };
                    acc += v * w;
                }
                retract_to_complex_structure(acc)
            }
            TamingKind::Transformed { inner, lift, lift_inv, inverse_map } => {
                lift * inner.eval(&inverse_map.apply(y)) * lift_inv
            }
            TamingKind::Custom(f) => f(y),
        }
    }

    /// `J(y)` as a global section: the value at the reduced point,
    /// conjugated by the monodromy of the removed periods.
    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        if matches!(self.kind, TamingKind::Sampled(_)) {
            return self.raw(y);
        }
        let (reduced, wraps) = self.target.reduce(y);
        let j = self.raw(&reduced);
        match self.target.monodromy_power(&wraps) {
            Some((m, m_inv)) => &m * j * &m_inv,
            None => j,
        }
    }

    /// `Q(y) = J(y)^T omega`.
    pub fn metric(&self, y: &[f64]) -> DMatrix<f64> {
        self.eval(y).transpose() * self.sp.omega_f64()
    }

    pub fn with_kind(&self, kind: TamingKind, tol: f64) -> Result<Self> {
        TamingField::new(kind, self.grid.clone(), &self.target, tol)
    }
}

/// Newton iteration `J <- (J - J^{-1}) / 2` onto `J^2 = -I`; stays inside the
/// compatible tamings when started from an interpolated one.
pub fn retract_to_complex_structure(mut j: DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    for _ in 0..60 {
        let defect = (&j * &j + &id).amax();
        if defect <= 4.0 * f64::EPSILON * (1.0 + j.amax() * j.amax()) {
            break;
        }
        let Some(inv) = j.clone().try_inverse() else { break };
        j = (&j - inv) * 0.5;
    }
    j
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `Theta_i(y) = dJ/dy^i` by central differences on the global section.
#[derive(Clone, Debug)]
pub struct FundamentalFormField {
    taming: TamingField,
    steps: Vec<f64>,
}

impl FundamentalFormField {
    pub fn taming(&self) -> &TamingField {
        &self.taming
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn theta(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        (0..y.len())
            .map(|i| {
                let mut p = y.to_vec();
                p[i] = y[i] + self.steps[i];
                let plus = self.taming.eval(&p);
                p[i] = y[i] - self.steps[i];
                let minus = self.taming.eval(&p);
                (plus - minus) / (2.0 * self.steps[i])
            })
            .collect()
    }

    /// Largest `|Theta_i|_inf` over the sample grid.
    pub fn max_norm(&self) -> f64 {
        self.taming.grid.points().flat_map(|y| self.theta(&y)).map(|m| m.amax()).fold(0.0, f64::max)
    }
}

pub fn fundamental_form(t: &ScalarTarget, jf: &TamingField) -> Result<FundamentalFormField> {
    if jf.grid.dim() != t.dim() {
        return Err(Error::Dimension { expected: t.dim(), found: jf.grid.dim() });
    }
    for (direction, &points) in jf.grid.counts.iter().enumerate() {
        if points < 3 {
            return Err(Error::GridTooCoarse { direction, points, required: 3 });
        }
    }
    Ok(FundamentalFormField { taming: jf.clone(), steps: jf.grid.spacing.clone() })
}

pub fn is_unitary(ff: &FundamentalFormField, tol: f64) -> bool {
    ff.max_norm() <= tol
}

/// `Psi^i = G^{ij} Theta_j`.
#[derive(Clone, Debug)]
pub struct FundamentalField {
    target: ScalarTarget,
    form: FundamentalFormField,
}

impl FundamentalField {
    pub fn form(&self) -> &FundamentalFormField {
        &self.form
    }

    pub fn psi(&self, y: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let theta = self.form.theta(y);
        raise_index(&self.target.metric_inverse(y)?, &theta)
    }
}

pub fn raise_index(inverse_metric: &DMatrix<f64>, theta: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let d = theta.len();
    if inverse_metric.nrows() != d {
        return Err(Error::Dimension { expected: d, found: inverse_metric.nrows() });
    }
    Ok((0..d)
        .map(|i| {
            let n = theta[0].nrows();
            (0..d).fold(DMatrix::zeros(n, n), |acc, j| acc + &theta[j] * inverse_metric[(i, j)])
        })
        .collect())
}

pub fn fundamental_field(t: &ScalarTarget, ff: &FundamentalFormField) -> Result<FundamentalField> {
    if ff.taming.grid.dim() != t.dim() {
        return Err(Error::Dimension { expected: t.dim(), found: ff.taming.grid.dim() });
    }
    for y in ff.taming.grid.points() {
        t.metric_inverse(&y)?;
    }
    Ok(FundamentalField { target: t.clone(), form: ff.clone() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicityReport {
    /// `(coordinate, max |J(y + L e_i) - rho_i J(y) rho_i^{-1}|_inf)` per periodic coordinate.
    pub per_direction: Vec<(usize, f64)>,
    pub max_violation: f64,
}

/// Measures twisted periodicity of the defining formula on the sample grid.
pub fn twisted_periodicity_violation(t: &ScalarTarget, jf: &TamingField) -> PeriodicityReport {
    let mut per_direction = Vec::new();
    for (i, p) in t.periods().iter().enumerate() {
        let (Some(l), Some(g)) = (p, t.generator_of(i)) else { continue };
        let rho = t.rho_f64(g);
        let rho_inv = &t.rho_inv[g];
        let worst = jf
            .grid
            .points()
            .map(|y| {
                let mut shifted = y.clone();
                shifted[i] += l;
                (jf.raw(&shifted) - rho * jf.raw(&y) * rho_inv).amax()
            })
            .fold(0.0, f64::max);
        per_direction.push((i, worst));
    }
    let max_violation = per_direction.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    PeriodicityReport { per_direction, max_violation }
}

pub fn check_twisted_periodicity(t: &ScalarTarget, jf: &TamingField, tol: f64) -> Result<PeriodicityReport> {
    let report = twisted_periodicity_violation(t, jf);
    if report.max_violation > tol {
        return Err(Error::NonGlobalSection { violation: report.max_violation });
    }
    Ok(report)
}
