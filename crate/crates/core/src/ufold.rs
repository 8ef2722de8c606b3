//! Reference U-fold: a circle target with parabolic monodromy, a scalar
//! winding once around one spatial circle, and a polarized constant-charge
//! field strength carried along by the flat frame.

use alloc::string::ToString;
use alloc::vec;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::exact::QMatrix;
use crate::local_system::{GroupPresentation, MonodromyRep, Word};
use crate::residuals::EsmConfiguration;
use crate::spacetime::{pair_slot, LorentzMetricField, ScalarMapField, SpacetimeGrid, TwistedTwoForm};
use crate::symplectic::{EsmParameters, IntegralLattice, SymplecticSpace};
use crate::target::{SampleGrid, ScalarTarget, TamingField, TamingKind};

/// Size of the reference U-fold. Spacetime is `[0, T] x S^1_{L1} x S^1_{L2}
/// x [0, Z]`; the scalar winds once around the `x^1` circle.
#[derive(Clone, Debug, PartialEq)]
pub struct UFold {
    pub shape: [usize; 4],
    /// `(T, L1, L2, Z)`.
    pub extent: [f64; 4],
    pub target_period: f64,
    /// Multiplies the unit-period field strength.
    pub charge: f64,
    /// Taming samples per target period.
    pub taming_samples: usize,
    /// Amplitude of a time-dependent ripple `a sin(2 pi x^0 / T)` added to
    /// the scalar; zero gives an exact Maxwell and scalar solution.
    pub ripple: f64,
}

impl Default for UFold {
    fn default() -> Self {
        UFold { shape: [8; 4], extent: [1.0, 2.0, 1.0, 1.0], target_period: 1.0, charge: 1.0, taming_samples: 16, ripple: 0.0 }
    }
}

impl UFold {
    pub fn with_shape(shape: [usize; 4]) -> Self {
        UFold { shape, ..Default::default() }
    }

    pub fn monodromy_image() -> QMatrix {
        QMatrix::from_i64(&[&[1, 1], &[0, 1]])
    }

    pub fn space() -> SymplecticSpace {
        SymplecticSpace::standard(1)
    }

    /// Representation on `Z = <a>` with `rho(a) = image`, preserving `Z^2`.
    pub fn representation(image: QMatrix) -> Result<MonodromyRep> {
        let sp = Self::space();
        let lattice = IntegralLattice::standard(&sp)?;
        MonodromyRep::new(GroupPresentation::free_abelian(vec!["a".to_string()]), sp, vec![image], Some(lattice))
    }

    pub fn target(&self) -> Result<ScalarTarget> {
        ScalarTarget::flat(vec![Some(self.target_period)], Self::representation(Self::monodromy_image())?)
    }

    /// `log rho(a) / L`: the flat frame is `E(y) = exp(y X)` with
    /// `E(y + L) = rho(a) E(y)`.
    pub fn frame_generator(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / self.target_period, 0.0, 0.0])
    }

    /// `J(y) = E(y) J0 E(y)^{-1}`, a global section of the taming bundle.
    pub fn taming(&self, target: &ScalarTarget) -> Result<TamingField> {
        let grid = SampleGrid::for_target(target, &[self.taming_samples], &[(0.0, 0.0)])?;
        let kind = TamingKind::Conjugated { base: Self::space().standard_taming(), generators: vec![self.frame_generator()] };
        TamingField::new(kind, grid, target, 1e-10)
    }

    pub fn grid(&self, target: &ScalarTarget) -> Result<SpacetimeGrid> {
        let spacing: [f64; 4] = core::array::from_fn(|m| {
            if m == 1 || m == 2 {
                self.extent[m] / self.shape[m] as f64
            } else {
                self.extent[m] / (self.shape[m].max(2) - 1) as f64
            }
        });
        let winding = [None, Some(Word::generator(0)), None, None];
        SpacetimeGrid::new(self.shape, spacing, [0.0; 4], [false, true, true, false], winding, target)
    }

    /// `phi = (L / L1) x^1 + a sin(2 pi x^0 / T)`.
    pub fn scalar_at(&self, x: [f64; 4]) -> f64 {
        let slope = self.target_period / self.extent[1];
        slope * x[1] + self.ripple * libm::sin(2.0 * core::f64::consts::PI * x[0] / self.extent[0])
    }

    pub fn scalar(&self, grid: &SpacetimeGrid) -> Result<ScalarMapField> {
        ScalarMapField::from_fn(grid, 1, |x| vec![self.scalar_at(x)], 1e-9)
    }

    /// `V = E(phi) W` with `W^2 = c dx^1 dx^2`, `W^1 = *W^2 = c dx^0 dx^3`
    /// and `c = charge / (L1 L2)`, so `V^2` has period `charge` over the
    /// spatial torus.
    pub fn field_strength(&self, grid: &SpacetimeGrid) -> Result<TwistedTwoForm> {
        let c = self.charge / (self.extent[1] * self.extent[2]);
        let (electric, _) = pair_slot(0, 3).expect("pair");
        let (magnetic, _) = pair_slot(1, 2).expect("pair");
        let x_gen = self.frame_generator();
        TwistedTwoForm::from_fn(
            grid,
            2,
            |x| {
                let y = self.scalar_at(x);
                let mut w = vec![0.0; 12];
                w[electric * 2] = c;
                w[magnetic * 2 + 1] = c;
                // E(y) = I + y X since X is nilpotent.
                for p in 0..6 {
                    let top = w[p * 2] + y * x_gen[(0, 1)] * w[p * 2 + 1];
                    w[p * 2] = top;
                }
                w
            },
            1e-9,
        )
    }

    pub fn configuration(&self, params: EsmParameters) -> Result<EsmConfiguration> {
        let target = self.target()?;
        let grid = self.grid(&target)?;
        let metric = LorentzMetricField::minkowski(&grid);
        let phi = self.scalar(&grid)?;
        let v = self.field_strength(&grid)?;
        let taming = self.taming(&target)?;
        EsmConfiguration::new(grid, metric, phi, v, taming, params)
    }
}
