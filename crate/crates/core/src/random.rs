//! Seeded generators of random algebraic data and field configurations for
//! property checks.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use rand::Rng;

use crate::error::Result;
use crate::exact::{QMatrix, Rational, ZMatrix};
use crate::local_system::{GroupPresentation, MonodromyRep, Word};
use crate::residuals::EsmConfiguration;
use crate::spacetime::{LorentzMetricField, ScalarMapField, SpacetimeGrid, TwistedTwoForm, MINKOWSKI};
use crate::symplectic::{EsmParameters, SymplecticSpace};
use crate::target::{SampleGrid, ScalarTarget, TamingField, TamingKind};

/// Product of `steps` elementary integer row operations and sign flips.
pub fn unimodular<R: Rng>(rng: &mut R, dim: usize, steps: usize) -> ZMatrix {
    let mut m = ZMatrix::identity(dim);
    if dim < 2 {
        return m;
    }
    for _ in 0..steps {
        let i = rng.gen_range(0..dim);
        let mut j = rng.gen_range(0..dim - 1);
        if j >= i {
            j += 1;
        }
        if rng.gen_bool(0.1) {
            for c in 0..dim {
                m[(i, c)] = -m[(i, c)].clone();
            }
        } else {
            let k = BigInt::from(rng.gen_range(-2i64..=2));
            for c in 0..dim {
                let v = &m[(j, c)] * &k;
                m[(i, c)] += v;
            }
        }
    }
    m
}

/// Product of integer symplectic transvections `[[I, S], [0, I]]` and
/// `[[I, 0], [S, I]]` with symmetric `S`, for the standard pairing.
pub fn integer_symplectic<R: Rng>(rng: &mut R, n: usize, steps: usize) -> QMatrix {
    let mut m = QMatrix::identity(2 * n);
    for _ in 0..steps {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let k = rng.gen_range(-2i64..=2);
        let lower = rng.gen_bool(0.5);
        let t = QMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let mut v: i64 = i64::from(r == c);
            let (r0, c0) = if lower { (n, 0) } else { (0, n) };
            if r >= r0 && r < r0 + n && c >= c0 && c < c0 + n {
                let (a, b) = (r - r0, c - c0);
                if (a, b) == (i, j) || (a, b) == (j, i) {
                    v += k;
                }
            }
            Rational::from_integer(BigInt::from(v))
        });
        m = &t * &m;
    }
    m
}

/// Divisor chain `d_1 | d_2 | ... | d_n` with ratios in `1..=3`.
pub fn divisor_chain<R: Rng>(rng: &mut R, n: usize) -> Vec<i64> {
    let mut last = 1i64;
    (0..n)
        .map(|_| {
            last *= rng.gen_range(1..=3);
            last
        })
        .collect()
}

/// Basis `diag(d, 1)`, whose Gram matrix for the standard pairing is the
/// normal form `[[0, D], [-D, 0]]`.
pub fn normal_form_basis(d: &[i64]) -> ZMatrix {
    let n = d.len();
    ZMatrix::from_fn(2 * n, 2 * n, |r, c| match (r == c, r < n) {
        (false, _) => BigInt::from(0),
        (true, true) => BigInt::from(d[r]),
        (true, false) => BigInt::from(1),
    })
}

/// Integer matrices preserving the Gram form `[[0, D], [-D, 0]]`: products
/// of block transvections `[[I, S], [0, I]]`, `[[I, 0], [S, I]]` with `D S`
/// symmetric.
pub fn gram_preserving<R: Rng>(rng: &mut R, d: &[i64], steps: usize) -> QMatrix {
    let n = d.len();
    let mut m = QMatrix::identity(2 * n);
    for _ in 0..steps {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let k = rng.gen_range(-2i64..=2);
        let lower = rng.gen_bool(0.5);
        let mut block = vec![vec![0i64; n]; n];
        if i == j {
            block[i][i] = k;
        } else {
            block[i][j] = k * d[j];
            block[j][i] = k * d[i];
        }
        let t = QMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let mut v = i64::from(r == c);
            if lower && r >= n && c < n {
                v += block[r - n][c];
            }
            if !lower && r < n && c >= n {
                v += block[r][c - n];
            }
            Rational::from_integer(BigInt::from(v))
        });
        m = &t * &m;
    }
    m
}

/// Random element `Omega^{-1} S` of the symplectic Lie algebra.
pub fn symplectic_algebra_element<R: Rng>(rng: &mut R, sp: &SymplecticSpace, scale: f64) -> DMatrix<f64> {
    let d = sp.dim();
    let mut s = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-scale..scale);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let omega = sp.omega_f64();
    -&omega * s
}

/// Reduced random word in `generators` letters.
pub fn word<R: Rng>(rng: &mut R, generators: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word::new((0..len).map(|_| (rng.gen_range(0..generators), if rng.gen_bool(0.5) { 1 } else { -1 })).collect())
        .reduced()
}

/// Unpolarized configuration on an open box with scalar target `R`, trivial
/// monodromy, a taming `exp(y X) J0 exp(-y X)`, a smooth Lorentzian
/// perturbation of Minkowski space and uniformly random `V`.
pub fn configuration<R: Rng>(rng: &mut R, shape: [usize; 4], n: usize) -> Result<EsmConfiguration> {
    let sp = SymplecticSpace::standard(n);
    let pres = GroupPresentation::free(Vec::new());
    let target = ScalarTarget::flat(vec![None], MonodromyRep::trivial(pres, sp.clone()))?;
    let generator = symplectic_algebra_element(rng, &sp, 0.5);
    let samples = SampleGrid::for_target(&target, &[9], &[(-2.0, 2.0)])?;
    let kind = TamingKind::Conjugated { base: sp.standard_taming(), generators: vec![generator] };
    let taming = TamingField::new(kind, samples, &target, 1e-8)?;

    let spacing = [0.25; 4];
    let grid = SpacetimeGrid::new(shape, spacing, [0.0; 4], [false; 4], Default::default(), &target)?;
    let wave: [f64; 4] = core::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let bumps: Vec<(usize, usize, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(-0.1..0.1), rng.gen_range(-2.0..2.0)))
        .collect();
    let metric = LorentzMetricField::from_fn(&grid, |x| {
        let mut g = MINKOWSKI;
        for &(a, b, amp, k) in &bumps {
            let v = amp * libm::sin(k * (x[0] + x[1] - x[2] + 0.5 * x[3]));
            g[a][b] += v;
            if a != b {
                g[b][a] += v;
            }
        }
        g
    })?;
    let phi = ScalarMapField::from_fn(
        &grid,
        1,
        |x| vec![libm::sin(wave[0] * x[0] + wave[1] * x[1] + wave[2] * x[2] + wave[3] * x[3])],
        1e-9,
    )?;
    let data = (0..grid.len() * 6 * 2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = TwistedTwoForm::from_values(&grid, 2 * n, data)?;
    EsmConfiguration::unchecked(grid, metric, phi, v, taming, EsmParameters::default())
}

