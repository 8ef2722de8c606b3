//! Scalar-electromagnetic dualities: an isometry of the scalar target
//! preserving the potential, lifted to a constant symplectic matrix on the
//! duality bundle in the cut trivialization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::local_system::{span_coefficients, commutant_basis, MonodromyRep, Word};
use crate::residuals::{residual_report, EsmConfiguration, NormPair, ResidualReport};
use crate::spacetime::SpacetimeGrid;
use crate::symplectic::{is_symplectic, siegel_membership, IntegralLattice, SymplecticSpace};
use crate::target::{AffineMap, SampleGrid, ScalarTarget, TamingField, TamingKind};

/// Projection of a duality to the scalar target.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetMap {
    Identity,
    Translation(Vec<f64>),
    /// Linear isometry of a constant target metric; must permute the periodic
    /// directions up to sign.
    Linear(DMatrix<f64>),
    Affine(AffineMap),
}

impl TargetMap {
    pub fn to_affine(&self, d: usize) -> AffineMap {
        match self {
            TargetMap::Identity => AffineMap::identity(d),
            TargetMap::Translation(t) => AffineMap { linear: DMatrix::identity(d, d), shift: t.clone() },
            TargetMap::Linear(a) => AffineMap { linear: a.clone(), shift: alloc::vec![0.0; d] },
            TargetMap::Affine(m) => m.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            TargetMap::Identity => true,
            TargetMap::Translation(t) => t.iter().all(|&v| v == 0.0),
            TargetMap::Linear(a) => a.is_identity(0.0),
            TargetMap::Affine(m) => m.linear.is_identity(0.0) && m.shift.iter().all(|&v| v == 0.0),
        }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        match self {
            TargetMap::Identity => y.to_vec(),
            TargetMap::Translation(t) => y.iter().zip(t).map(|(a, b)| a + b).collect(),
            _ => self.to_affine(y.len()).apply(y),
        }
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &TargetMap, d: usize) -> TargetMap {
        match (self, inner) {
            (TargetMap::Identity, other) | (other, TargetMap::Identity) => other.clone(),
            (TargetMap::Translation(a), TargetMap::Translation(b)) => {
                TargetMap::Translation(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => TargetMap::Affine(self.to_affine(d).compose(&inner.to_affine(d))),
        }
    }
}

/// `f = (f0, F)` with `F` exact and symplectic.
#[derive(Clone, Debug, PartialEq)]
pub struct DualityTransformation {
    f0: TargetMap,
    lift: QMatrix,
    lift_f64: DMatrix<f64>,
    lift_inv_f64: DMatrix<f64>,
}

impl DualityTransformation {
    pub fn new(f0: TargetMap, lift: QMatrix, sp: &SymplecticSpace) -> Result<Self> {
        if !is_symplectic(&lift, sp)? {
            return Err(Error::NotSymplectic);
        }
        let inv = lift.inverse().ok_or(Error::NotSymplectic)?;
        Ok(DualityTransformation { f0, lift_f64: lift.to_f64(), lift_inv_f64: inv.to_f64(), lift })
    }

    pub fn identity(sp: &SymplecticSpace) -> Self {
        Self::new(TargetMap::Identity, QMatrix::identity(sp.dim()), sp).expect("identity is symplectic")
    }

    pub fn f0(&self) -> &TargetMap {
        &self.f0
    }

    pub fn lift(&self) -> &QMatrix {
        &self.lift
    }

    pub fn lift_f64(&self) -> &DMatrix<f64> {
        &self.lift_f64
    }

    /// `self o inner`: `(f0 o g0, F G)`.
    pub fn compose(&self, inner: &DualityTransformation, d: usize) -> Self {
        let lift = &self.lift * &inner.lift;
        let inv = lift.inverse().expect("product of symplectic matrices is invertible");
        DualityTransformation {
            f0: self.f0.compose(&inner.f0, d),
            lift_f64: lift.to_f64(),
            lift_inv_f64: inv.to_f64(),
            lift,
        }
    }

    /// Action of `f0` on the loop generators: generator `i` goes to
    /// `generator_action[i].0` raised to `generator_action[i].1`.
    pub fn generator_action(&self, t: &ScalarTarget, tol: f64) -> Result<Vec<(usize, i8)>> {
        let d = t.dim();
        let a = self.f0.to_affine(d).linear;
        let gens = t.monodromy().presentation().generator_count();
        (0..gens)
            .map(|g| {
                let i = t.direction_of(g).expect("generator has a direction");
                let l = t.periods()[i].expect("periodic");
                let image: Vec<f64> = (0..d).map(|r| a[(r, i)] * l).collect();
                for (j, p) in t.periods().iter().enumerate() {
                    let Some(lj) = p else { continue };
                    let others_vanish = (0..d).all(|r| r == j || image[r].abs() <= tol);
                    if !others_vanish {
                        continue;
                    }
                    let gj = t.generator_of(j).expect("periodic");
                    if (image[j] - lj).abs() <= tol {
                        return Ok((gj, 1));
                    }
                    if (image[j] + lj).abs() <= tol {
                        return Ok((gj, -1));
                    }
                }
                Err(Error::IsometryViolation { violation: f64::INFINITY })
            })
            .collect()
    }

    /// Loops pushed forward by `f0`.
    pub fn map_word(&self, w: &Word, action: &[(usize, i8)]) -> Word {
        Word::new(w.letters().iter().map(|&(g, e)| (action[g].0, action[g].1 * e)).collect())
    }

    /// Checks `F rho_i = rho_{f0(i)} F` exactly and that `f0` preserves the
    /// metric and the potential on the sample points.
    pub fn validate(&self, t: &ScalarTarget, samples: &SampleGrid, tol: f64) -> Result<()> {
        let action = self.generator_action(t, tol)?;
        let rep = t.monodromy();
        for (g, &(h, e)) in action.iter().enumerate() {
            let target_image = rep.transport(&Word::new(alloc::vec![(h, e)]))?;
            let lhs = &self.lift * rep.image(g);
            let rhs = &target_image * &self.lift;
            if lhs != rhs {
                let violation = (lhs.to_f64() - rhs.to_f64()).amax();
                return Err(Error::EquivarianceViolation { generator: g, violation });
            }
        }
        let map = self.f0.to_affine(t.dim());
        let mut violation = 0.0f64;
        for y in samples.points() {
            let fy = self.f0.apply(&y);
            let pulled = map.linear.transpose() * t.metric(&fy) * &map.linear;
            violation = violation.max((pulled - t.metric(&y)).amax());
            violation = violation.max((t.potential(&fy) - t.potential(&y)).abs());
        }
        if violation > tol {
            return Err(Error::IsometryViolation { violation });
        }
        Ok(())
    }
}

/// `J_f(y) = F J(f0^{-1}(y)) F^{-1}`.
pub fn transform_taming(f: &DualityTransformation, jf: &TamingField, tol: f64) -> Result<TamingField> {
    let d = jf.target().dim();
    let inverse_map = f.f0.to_affine(d).inverse()?;
    let kind = TamingKind::Transformed {
        inner: alloc::boxed::Box::new(jf.clone()),
        lift: f.lift_f64.clone(),
        lift_inv: f.lift_inv_f64.clone(),
        inverse_map,
    };
    jf.with_kind(kind, tol)
}

/// `f <> (phi, V) = (f0 o phi, F V)` at fixed metric, evaluated against the
/// transformed taming `J_f`.
pub fn apply_duality(f: &DualityTransformation, cfg: &EsmConfiguration) -> Result<EsmConfiguration> {
    let t = cfg.target();
    let tol = cfg.params.tolerances.field_tol;
    f.validate(t, cfg.taming.grid(), tol)?;
    let action = f.generator_action(t, tol)?;
    let grid = &cfg.grid;
    let winding: [Option<Word>; 4] = core::array::from_fn(|m| grid.winding(m).map(|w| f.map_word(w, &action)));
    let new_grid = SpacetimeGrid::new(grid.shape(), grid.spacing(), grid.origin(), grid.periodic(), winding, t)?;
    let phi = cfg.phi.map(|y| f.f0.apply(y));
    let lift = f.lift_f64.clone();
    let v = cfg.v.map_fiber(|_| lift.clone());
    let taming = transform_taming(f, &cfg.taming, cfg.params.tolerances.alg_tol.max(tol))?;
    EsmConfiguration::unchecked(new_grid, cfg.metric.clone(), phi, v, taming, cfg.params.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceReport {
    pub original: ResidualReport,
    pub transformed: ResidualReport,
    pub scalar_discrepancy: f64,
    pub em_discrepancy: f64,
    pub einstein_discrepancy: f64,
    pub polarization_discrepancy: f64,
    /// Larger of the scalar and electromagnetic discrepancies.
    pub discrepancy: f64,
    pub passed: bool,
}

fn norm_gap(a: &NormPair, b: &NormPair) -> f64 {
    (a.max - b.max).abs().max((a.rms - b.rms).abs())
}

/// Residuals of `cfg` under the original structure and of `f <> cfg` under
/// the transformed one.
pub fn covariance_check(f: &DualityTransformation, cfg: &EsmConfiguration, tol: f64) -> Result<CovarianceReport> {
    let original = residual_report(cfg, false)?;
    let transformed = residual_report(&apply_duality(f, cfg)?, false)?;
    let scalar_discrepancy = norm_gap(&original.scalar, &transformed.scalar);
    let em_discrepancy = norm_gap(&original.em, &transformed.em);
    let einstein_discrepancy = norm_gap(&original.einstein, &transformed.einstein);
    let polarization_discrepancy = norm_gap(&original.polarization, &transformed.polarization);
    let discrepancy = scalar_discrepancy.max(em_discrepancy);
    Ok(CovarianceReport {
        original,
        transformed,
        scalar_discrepancy,
        em_discrepancy,
        einstein_discrepancy,
        polarization_discrepancy,
        discrepancy,
        passed: discrepancy <= tol,
    })
}

/// `Ad(f)(J) = J` on the sample grid.
pub fn is_symmetry(f: &DualityTransformation, jf: &TamingField, tol: f64) -> bool {
    let Ok(transformed) = transform_taming(f, jf, 1e-6) else { return false };
    jf.grid().points().all(|y| (transformed.eval(&y) - jf.eval(&y)).amax() <= tol)
}

/// `F(Lambda) = Lambda`.
pub fn is_integral_duality(f: &DualityTransformation, lat: &IntegralLattice, sp: &SymplecticSpace) -> Result<bool> {
    siegel_membership(&f.lift, lat, sp)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceProbe {
    /// Sample indices with `f0 = id`.
    pub kernel: Vec<usize>,
    /// Pairs `(i, j)` whose composite was checked.
    pub compositions: Vec<(usize, usize)>,
    pub violations: Vec<String>,
}

impl SequenceProbe {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sample check of `1 -> Aut(Delta) -> Aut(D0) -> Aut(Sigma) -> 1`: kernel
/// elements are exactly the symplectic commutant of the monodromy, and the
/// projection to the target is multiplicative.
pub fn exact_sequence_probe(
    t: &ScalarTarget,
    samples: &SampleGrid,
    sample: &[DualityTransformation],
    tol: f64,
) -> SequenceProbe {
    let rep: &MonodromyRep = t.monodromy();
    let basis = commutant_basis(rep);
    let mut probe = SequenceProbe::default();
    for (i, f) in sample.iter().enumerate() {
        if !f.f0.is_identity() {
            continue;
        }
        probe.kernel.push(i);
        let valid = f.validate(t, samples, tol).is_ok();
        let in_commutant = span_coefficients(&basis, &f.lift).is_some();
        if valid != in_commutant {
            probe.violations.push(format!(
                "transformation {i}: equivariance {valid} but commutant membership {in_commutant}"
            ));
        }
    }
    let d = t.dim();
    for (i, f) in sample.iter().enumerate() {
        for (j, g) in sample.iter().enumerate() {
            let composite = f.compose(g, d);
            probe.compositions.push((i, j));
            for y in samples.points() {
                let lhs = composite.f0.apply(&y);
                let rhs = f.f0.apply(&g.f0.apply(&y));
                let gap = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if gap > tol {
                    probe.violations.push(format!("composite ({i}, {j}) does not project to f0 o g0 (gap {gap:e})"));
                    break;
                }
            }
            let both_valid = f.validate(t, samples, tol).is_ok() && g.validate(t, samples, tol).is_ok();
            if both_valid && composite.validate(t, samples, tol).is_err() {
                probe.violations.push(format!("composite ({i}, {j}) of dualities is not a duality"));
            }
        }
    }
    probe
}
