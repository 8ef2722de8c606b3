//! Pointwise residuals of the Einstein, scalar and electromagnetic equations
//! on a grid configuration `(g, phi, V)`, and their aggregate norms.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spacetime::{
    inner_contraction, pulled_back_fundamental_field, scalar_pairing, twisted_d, twisted_hodge, HodgeContext,
    LorentzMetricField, ScalarMapField, SpacetimeGrid, Tensor2, ThreeForm, TwistedTwoForm, PAIRS,
};
use crate::symplectic::EsmParameters;
use crate::target::{fundamental_field, fundamental_form, ScalarTarget, TamingField};

/// Nodes this close to an open boundary are left out of every norm.
pub const BOUNDARY_MARGIN: usize = 2;
/// The Bianchi divergence differentiates the Einstein tensor once more.
pub const BIANCHI_MARGIN: usize = BOUNDARY_MARGIN + 1;

/// Global configuration together with the structures it is evaluated against.
#[derive(Clone, Debug)]
pub struct EsmConfiguration {
    pub grid: SpacetimeGrid,
    pub metric: LorentzMetricField,
    pub phi: ScalarMapField,
    pub v: TwistedTwoForm,
    pub taming: TamingField,
    pub params: EsmParameters,
}

impl EsmConfiguration {
    /// Checks shapes and the positive polarization `*V = V` to `field_tol`.
    pub fn new(
        grid: SpacetimeGrid,
        metric: LorentzMetricField,
        phi: ScalarMapField,
        v: TwistedTwoForm,
        taming: TamingField,
        params: EsmParameters,
    ) -> Result<Self> {
        let cfg = Self::unchecked(grid, metric, phi, v, taming, params)?;
        let violation = cfg.polarization_violation()?;
        if violation > cfg.params.tolerances.field_tol {
            return Err(Error::NotPolarized { violation });
        }
        Ok(cfg)
    }

    /// Shape checks only; polarization is reported rather than enforced.
    pub fn unchecked(
        grid: SpacetimeGrid,
        metric: LorentzMetricField,
        phi: ScalarMapField,
        v: TwistedTwoForm,
        taming: TamingField,
        params: EsmParameters,
    ) -> Result<Self> {
        let n = grid.len();
        for found in [metric.len(), phi.values().len() / phi.dim().max(1), v.nodes()] {
            if found != n {
                return Err(Error::Dimension { expected: n, found });
            }
        }
        if phi.dim() != taming.target().dim() {
            return Err(Error::Dimension { expected: taming.target().dim(), found: phi.dim() });
        }
        if v.fiber() != taming.fiber_dim() {
            return Err(Error::Dimension { expected: taming.fiber_dim(), found: v.fiber() });
        }
        Ok(EsmConfiguration { grid, metric, phi, v, taming, params })
    }

    pub fn target(&self) -> &ScalarTarget {
        self.taming.target()
    }

    pub fn context(&self) -> Result<HodgeContext> {
        HodgeContext::new(&self.taming, &self.phi)
    }

    /// `max_x |*V - V|_Q`.
    pub fn polarization_violation(&self) -> Result<f64> {
        let ctx = self.context()?;
        let diff = twisted_hodge(&self.metric, &ctx, &self.v)?.sub(&self.v);
        Ok((0..self.grid.len()).map(|k| two_form_q_norm(&diff, k, ctx.q(k))).fold(0.0, f64::max))
    }
}

fn two_form_q_norm(v: &TwistedTwoForm, node: usize, q: &DMatrix<f64>) -> f64 {
    let f = v.fiber();
    let block = v.at(node);
    let s: f64 = (0..PAIRS.len()).map(|p| quad(q, &block[p * f..(p + 1) * f])).sum();
    libm::sqrt(s.max(0.0))
}

fn three_form_q_norm(v: &ThreeForm, node: usize, q: &DMatrix<f64>) -> f64 {
    let s: f64 = (0..4).map(|t| quad(q, v.component(node, t))).sum();
    libm::sqrt(s.max(0.0))
}

fn quad(q: &DMatrix<f64>, u: &[f64]) -> f64 {
    let n = u.len();
    (0..n).map(|a| (0..n).map(|b| u[a] * q[(a, b)] * u[b]).sum::<f64>()).sum()
}

/// `e(x) = 1/2 g^{mn} d_m phi^i d_n phi^j G_ij(phi) + Phi(phi)`.
pub fn modified_density(cfg: &EsmConfiguration) -> Result<Vec<f64>> {
    let dphi = cfg.phi.differential(&cfg.grid);
    let d = cfg.phi.dim();
    let t = cfg.target();
    Ok((0..cfg.grid.len())
        .map(|node| {
            let y = cfg.phi.at(node);
            let gt = t.metric(y);
            let ginv = cfg.metric.g_inv(node);
            let pull = pullback(&dphi[node * 4 * d..(node + 1) * 4 * d], &gt, d);
            let trace: f64 = (0..4).map(|m| (0..4).map(|n| ginv[m][n] * pull[m][n]).sum::<f64>()).sum();
            0.5 * trace + t.potential(y)
        })
        .collect())
}

/// `(phi^* G)_{mn} = G_ij d_m phi^i d_n phi^j` from a `[m][i]` block.
fn pullback(dphi: &[f64], gt: &DMatrix<f64>, d: usize) -> Tensor2 {
    core::array::from_fn(|m| {
        core::array::from_fn(|n| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += gt[(i, j)] * dphi[m * d + i] * dphi[n * d + j];
                }
            }
            s
        })
    })
}

/// Metric derivatives `d_l g_{mn}` at a node.
fn metric_derivative(grid: &SpacetimeGrid, g: &LorentzMetricField, node: usize) -> [Tensor2; 4] {
    let center = g.g(node);
    core::array::from_fn(|l| {
        let (taps, len) = grid.stencil(node, l);
        let mut out = [[0.0; 4]; 4];
        for tap in &taps[..len] {
            let v = g.g(tap.node);
            for m in 0..4 {
                for n in 0..4 {
                    out[m][n] += tap.weight * (v[m][n] - center[m][n]);
                }
            }
        }
        out
    })
}

pub type Christoffel = [[[f64; 4]; 4]; 4];

/// `Gamma^l_{mn}` at every node.
pub fn christoffel_field(grid: &SpacetimeGrid, g: &LorentzMetricField) -> Vec<Christoffel> {
    (0..grid.len())
        .map(|node| {
            let dg = metric_derivative(grid, g, node);
            let ginv = g.g_inv(node);
            let mut gamma = [[[0.0; 4]; 4]; 4];
            for l in 0..4 {
                for m in 0..4 {
                    for n in m..4 {
                        let s: f64 = (0..4).map(|s| ginv[l][s] * (dg[m][s][n] + dg[n][s][m] - dg[s][m][n])).sum();
                        gamma[l][m][n] = 0.5 * s;
                        gamma[l][n][m] = 0.5 * s;
                    }
                }
            }
            gamma
        })
        .collect()
}

/// `theta^k = g^{mn}(d_m d_n phi^k - Gamma^l_{mn} d_l phi^k + Gamma^k_ij(phi) d_m phi^i d_n phi^j)`.
pub fn tension_field(cfg: &EsmConfiguration) -> Result<Vec<Vec<f64>>> {
    cfg.grid.require_points(3)?;
    let grid = &cfg.grid;
    let d = cfg.phi.dim();
    let dphi = cfg.phi.differential(grid);
    let gamma = christoffel_field(grid, &cfg.metric);
    let t = cfg.target();
    let mut out = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        // d_m (d_n phi), symmetrized
        let mut hess = vec![[[0.0; 4]; 4]; d];
        for m in 0..4 {
            let (taps, len) = grid.stencil(node, m);
            for tap in &taps[..len] {
                for n in 0..4 {
                    for k in 0..d {
                        let delta = dphi[(tap.node * 4 + n) * d + k] - dphi[(node * 4 + n) * d + k];
                        hess[k][m][n] += tap.weight * delta;
                    }
                }
            }
        }
        let y = cfg.phi.at(node);
        let target_gamma = t.christoffel(y)?;
        let ginv = cfg.metric.g_inv(node);
        let dp = |m: usize, k: usize| dphi[(node * 4 + m) * d + k];
        let theta = (0..d)
            .map(|k| {
                let mut s = 0.0;
                for m in 0..4 {
                    for n in 0..4 {
                        if ginv[m][n] == 0.0 {
                            continue;
                        }
                        let mut term = 0.5 * (hess[k][m][n] + hess[k][n][m]);
                        for l in 0..4 {
                            term -= gamma[node][l][m][n] * dp(l, k);
                        }
                        for i in 0..d {
                            for j in 0..d {
                                term += target_gamma[k][(i, j)] * dp(m, i) * dp(n, j);
                            }
                        }
                        s += ginv[m][n] * term;
                    }
                }
                s
            })
            .collect();
        out.push(theta);
    }
    Ok(out)
}

/// `theta_Sigma = theta - grad_G Phi`.
pub fn modified_tension(cfg: &EsmConfiguration) -> Result<Vec<Vec<f64>>> {
    let mut theta = tension_field(cfg)?;
    let t = cfg.target();
    for (node, th) in theta.iter_mut().enumerate() {
        let grad = t.potential_gradient_raised(cfg.phi.at(node))?;
        for (a, b) in th.iter_mut().zip(grad) {
            *a -= b;
        }
    }
    Ok(theta)
}

/// Einstein tensor and the chain it was computed from.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub christoffel: Vec<Christoffel>,
    pub ricci: Vec<Tensor2>,
    pub scalar: Vec<f64>,
    pub einstein: Vec<Tensor2>,
}

/// `G = Ric - R g / 2` by nested central differences; symmetric by
/// construction.
pub fn curvature(grid: &SpacetimeGrid, g: &LorentzMetricField) -> Result<Curvature> {
    grid.require_points(5)?;
    if g.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), found: g.len() });
    }
    let gamma = christoffel_field(grid, g);
    let mut ricci = Vec::with_capacity(grid.len());
    let mut scalar = Vec::with_capacity(grid.len());
    let mut einstein = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let gc = &gamma[node];
        // dgamma[d][l][m][n] = d_d Gamma^l_{mn}
        let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
        for (dd, slot) in dgamma.iter_mut().enumerate() {
            let (taps, len) = grid.stencil(node, dd);
            for tap in &taps[..len] {
                let gn = &gamma[tap.node];
                for l in 0..4 {
                    for m in 0..4 {
                        for n in 0..4 {
                            slot[l][m][n] += tap.weight * (gn[l][m][n] - gc[l][m][n]);
                        }
                    }
                }
            }
        }
        let mut ric = [[0.0; 4]; 4];
        for s in 0..4 {
            for n in 0..4 {
                let mut r = 0.0;
                for m in 0..4 {
                    r += dgamma[m][m][n][s] - dgamma[n][m][m][s];
                    for l in 0..4 {
                        r += gc[m][m][l] * gc[l][n][s] - gc[m][n][l] * gc[l][m][s];
                    }
                }
                ric[s][n] = r;
            }
        }
        let ric: Tensor2 = core::array::from_fn(|a| core::array::from_fn(|b| 0.5 * (ric[a][b] + ric[b][a])));
        let ginv = g.g_inv(node);
        let r: f64 = (0..4).map(|a| (0..4).map(|b| ginv[a][b] * ric[a][b]).sum::<f64>()).sum();
        let gm = g.g(node);
        einstein.push(core::array::from_fn(|a| core::array::from_fn(|b| ric[a][b] - 0.5 * r * gm[a][b])));
        ricci.push(ric);
        scalar.push(r);
    }
    Ok(Curvature { christoffel: gamma, ricci, scalar, einstein })
}

pub fn einstein_tensor(grid: &SpacetimeGrid, g: &LorentzMetricField) -> Result<Vec<Tensor2>> {
    Ok(curvature(grid, g)?.einstein)
}

/// Contracted Bianchi diagnostic `nabla^m G_{mn}` by finite differences.
pub fn bianchi_divergence(grid: &SpacetimeGrid, g: &LorentzMetricField, curv: &Curvature) -> Vec<[f64; 4]> {
    let e = &curv.einstein;
    (0..grid.len())
        .map(|node| {
            let mut de = [[[0.0; 4]; 4]; 4];
            for (a, slot) in de.iter_mut().enumerate() {
                let (taps, len) = grid.stencil(node, a);
                for tap in &taps[..len] {
                    for m in 0..4 {
                        for n in 0..4 {
                            slot[m][n] += tap.weight * (e[tap.node][m][n] - e[node][m][n]);
                        }
                    }
                }
            }
            let gamma = &curv.christoffel[node];
            let ginv = g.g_inv(node);
            let en = &e[node];
            core::array::from_fn(|n| {
                let mut s = 0.0;
                for a in 0..4 {
                    for m in 0..4 {
                        let mut cov = de[a][m][n];
                        for l in 0..4 {
                            cov -= gamma[l][a][m] * en[l][n] + gamma[l][a][n] * en[m][l];
                        }
                        s += ginv[a][m] * cov;
                    }
                }
                s
            })
        })
        .collect()
}

/// `T = g e + 2 V (/) V - phi^* G`.
pub fn stress_tensor(cfg: &EsmConfiguration) -> Result<Vec<Tensor2>> {
    let ctx = cfg.context()?;
    stress_tensor_with(cfg, &ctx)
}

fn stress_tensor_with(cfg: &EsmConfiguration, ctx: &HodgeContext) -> Result<Vec<Tensor2>> {
    let e = modified_density(cfg)?;
    let vv = inner_contraction(&cfg.v, &cfg.v, &cfg.metric, ctx)?;
    let dphi = cfg.phi.differential(&cfg.grid);
    let d = cfg.phi.dim();
    let t = cfg.target();
    Ok((0..cfg.grid.len())
        .map(|node| {
            let gm = cfg.metric.g(node);
            let pull = pullback(&dphi[node * 4 * d..(node + 1) * 4 * d], &t.metric(cfg.phi.at(node)), d);
            core::array::from_fn(|m| core::array::from_fn(|n| gm[m][n] * e[node] + 2.0 * vv[node][m][n] - pull[m][n]))
        })
        .collect())
}

/// Max and RMS of a pointwise norm over the interior nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormPair {
    pub max: f64,
    pub rms: f64,
}

impl NormPair {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return NormPair::default();
        }
        let max = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
        let rms = libm::sqrt(pairwise_sum(&squares) / values.len() as f64);
        NormPair { max, rms }
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Conventions echoed in every report.
#[derive(Clone, Debug, PartialEq)]
pub struct Conventions {
    pub entries: Vec<(&'static str, String)>,
}

impl Conventions {
    pub fn new(params: &EsmParameters) -> Self {
        let mut entries: Vec<(&'static str, String)> = vec![
            ("signature", "(-,+,+,+)".into()),
            ("orientation", "eps_{0123} = +1".into()),
            ("hodge", "(*F)_{rs} = 1/2 sqrt|g| eps_{mnrs} F^{mn}".into()),
            ("twisted_hodge", "*_g x J(phi), squares to +1 on 2-forms".into()),
            ("omega", "omega(x,y) = x^T Omega y, Omega = [[0,I],[-I,0]]".into()),
            ("taming_metric", "Q = omega(J., .) = J^T Omega".into()),
            ("polarization", "*_g x J V = V".into()),
            ("contraction", "(V1 (/) V2)_{mn} = Q_ab V1^a_{ml} g^{ls} V2^b_{sn}".into()),
            ("stress_tensor", "T = g e + 2 V (/) V - phi^* G".into()),
            ("scalar_pairing", "1/2 (*_g V, Psi V) with (A,B) = 1/2 A_{mn} B^{mn} Q; convention dependent".into()),
            ("exterior_derivative", "(dV)_{lmn} = d_l V_{mn} + d_m V_{nl} + d_n V_{lm}".into()),
            ("finite_differences", "second-order central; one-sided second-order at open boundaries".into()),
            ("boundary_margin", alloc::format!("{BOUNDARY_MARGIN}")),
            ("kappa", alloc::format!("{:e}", params.kappa)),
        ];
        entries.sort_by(|a, b| a.0.cmp(b.0));
        Conventions { entries }
    }
}

/// Pointwise residual fields, kept only when requested.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualFields {
    pub einstein: Vec<Tensor2>,
    pub scalar: Vec<Vec<f64>>,
    pub em: ThreeForm,
    pub polarization: TwistedTwoForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub einstein: NormPair,
    pub scalar: NormPair,
    pub em: NormPair,
    pub polarization: NormPair,
    pub interior_nodes: usize,
    pub conventions: Conventions,
    pub fields: Option<ResidualFields>,
}

/// Einstein residual `G - kappa T` (infinity norm over components), scalar
/// residual `theta_Sigma - 1/2 (*V, Psi V)` (G-norm), electromagnetic residual
/// `dV` (Q-norm) and the polarization defect `*V - V` (Q-norm).
pub fn residual_report(cfg: &EsmConfiguration, keep_fields: bool) -> Result<ResidualReport> {
    let grid = &cfg.grid;
    let ctx = cfg.context()?;
    let t = cfg.target();

    let g_tensor = einstein_tensor(grid, &cfg.metric)?;
    let stress = stress_tensor_with(cfg, &ctx)?;
    let kappa = cfg.params.kappa;
    let einstein: Vec<Tensor2> = g_tensor
        .iter()
        .zip(&stress)
        .map(|(gt, tt)| core::array::from_fn(|m| core::array::from_fn(|n| gt[m][n] - kappa * tt[m][n])))
        .collect();

    let form = fundamental_form(t, &cfg.taming)?;
    let field = fundamental_field(t, &form)?;
    let psi = pulled_back_fundamental_field(&field, &cfg.phi)?;
    let pairing = scalar_pairing(&cfg.v, &psi, &cfg.metric, &ctx)?;
    let scalar: Vec<Vec<f64>> = modified_tension(cfg)?
        .into_iter()
        .zip(pairing)
        .map(|(th, p)| th.iter().zip(p).map(|(a, b)| a - b).collect())
        .collect();

    let em = twisted_d(&cfg.v, grid)?;
    let polarization = twisted_hodge(&cfg.metric, &ctx, &cfg.v)?.sub(&cfg.v);

    let interior = grid.interior(BOUNDARY_MARGIN);
    let collect = |f: &dyn Fn(usize) -> f64| -> NormPair {
        let values: Vec<f64> = interior.iter().map(|&k| f(k)).collect();
        NormPair::from_values(&values)
    };
    let einstein_norm = collect(&|k| einstein[k].iter().flatten().fold(0.0, |a, v| a.max(v.abs())));
    let scalar_norm = collect(&|k| {
        let gt = t.metric(cfg.phi.at(k));
        libm::sqrt(quad(&gt, &scalar[k]).max(0.0))
    });
    let em_norm = collect(&|k| three_form_q_norm(&em, k, ctx.q(k)));
    let polarization_norm = collect(&|k| two_form_q_norm(&polarization, k, ctx.q(k)));

    Ok(ResidualReport {
        einstein: einstein_norm,
        scalar: scalar_norm,
        em: em_norm,
        polarization: polarization_norm,
        interior_nodes: interior.len(),
        conventions: Conventions::new(&cfg.params),
        fields: keep_fields.then_some(ResidualFields { einstein, scalar, em, polarization }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_system::{GroupPresentation, MonodromyRep};
    use crate::symplectic::SymplecticSpace;
    use crate::target::{MetricField, PotentialField, SampleGrid, ScalarFn, VectorFn};
    use alloc::sync::Arc;

    fn line_target(potential: PotentialField) -> ScalarTarget {
        let rep = MonodromyRep::trivial(GroupPresentation::free(Vec::new()), SymplecticSpace::standard(1));
        ScalarTarget::new(vec![None], MetricField::Constant(DMatrix::identity(1, 1)), potential, rep).unwrap()
    }

    fn config(target: &ScalarTarget, n: usize, h: f64, phi: impl Fn([f64; 4]) -> Vec<f64>, kappa: f64) -> EsmConfiguration {
        let grid = SpacetimeGrid::new([n; 4], [h; 4], [0.0; 4], [false; 4], Default::default(), target).unwrap();
        let sg = SampleGrid::for_target(target, &[5], &[(-10.0, 10.0)]).unwrap();
        let jf = TamingField::constant(SymplecticSpace::standard(1).standard_taming(), sg, target, 1e-12).unwrap();
        let metric = LorentzMetricField::minkowski(&grid);
        let phi = ScalarMapField::from_fn(&grid, 1, phi, 1e-12).unwrap();
        let v = TwistedTwoForm::zero(&grid, 2);
        let params = EsmParameters::new(kappa, Default::default()).unwrap();
        EsmConfiguration::new(grid, metric, phi, v, jf, params).unwrap()
    }

    #[test]
    fn vacuum_residuals_are_exactly_zero() {
        let t = line_target(PotentialField::Constant(0.0));
        let cfg = config(&t, 5, 0.1, |_| vec![0.3], 1.0);
        let r = residual_report(&cfg, false).unwrap();
        for n in [r.einstein, r.scalar, r.em, r.polarization] {
            assert_eq!(n.max, 0.0);
            assert_eq!(n.rms, 0.0);
        }
    }

    #[test]
    fn density_examples() {
        let t = line_target(PotentialField::Constant(2.5));
        let cfg = config(&t, 5, 0.1, |_| vec![0.0], 1.0);
        assert!(modified_density(&cfg).unwrap().iter().all(|&e| e == 2.5));
        let t = line_target(PotentialField::Constant(0.0));
        let cfg = config(&t, 5, 0.1, |x| vec![0.3 * x[1]], 1.0);
        assert!(modified_density(&cfg).unwrap().iter().all(|&e| (e - 0.045).abs() < 1e-14));
    }

    #[test]
    fn tension_examples() {
        let t = line_target(PotentialField::Constant(0.0));
        let cfg = config(&t, 5, 0.1, |x| vec![0.2 * x[0] + 0.7 * x[2]], 1.0);
        assert!(tension_field(&cfg).unwrap().iter().all(|th| th[0].abs() < 1e-12));
        let cfg = config(&t, 7, 0.1, |x| vec![x[1] * x[1]], 1.0);
        let theta = tension_field(&cfg).unwrap();
        for node in cfg.grid.interior(BOUNDARY_MARGIN) {
            assert!((theta[node][0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn modified_tension_subtracts_gradient() {
        let value: ScalarFn = Arc::new(|y: &[f64]| y[0]);
        let gradient: VectorFn = Arc::new(|_: &[f64]| vec![1.0]);
        let t = line_target(PotentialField::Custom { value, gradient: Some(gradient) });
        let cfg = config(&t, 5, 0.1, |_| vec![0.0], 1.0);
        assert!(modified_tension(&cfg).unwrap().iter().all(|th| th[0] == -1.0));
    }

    #[test]
    fn linear_scalar_is_a_deliberate_non_solution() {
        let t = line_target(PotentialField::Constant(0.0));
        let k = 0.1;
        let kappa = 2.0;
        let cfg = config(&t, 5, 0.25, |x| vec![k * x[1]], kappa);
        let r = residual_report(&cfg, true).unwrap();
        assert!(r.scalar.max < 1e-14);
        assert_eq!(r.em.max, 0.0);
        // T = eta k^2/2 - k^2 dx dx: T_00 = -k^2/2, T_11 = -k^2/2, T_22 = T_33 = k^2/2
        let expected = kappa * k * k / 2.0;
        assert!((r.einstein.max - expected).abs() < 1e-14);
        let fields = r.fields.unwrap();
        let node = cfg.grid.interior(2)[0];
        assert!((fields.einstein[node][0][0] - expected).abs() < 1e-14);
        assert!((fields.einstein[node][1][1] - expected).abs() < 1e-14);
        assert!((fields.einstein[node][2][2] + expected).abs() < 1e-14);
    }

    #[test]
    fn stress_of_constant_potential_is_metric_multiple() {
        let t = line_target(PotentialField::Constant(3.0));
        let cfg = config(&t, 5, 0.1, |_| vec![1.0], 1.0);
        let s = stress_tensor(&cfg).unwrap();
        for (node, tt) in s.iter().enumerate() {
            let g = cfg.metric.g(node);
            for m in 0..4 {
                for n in 0..4 {
                    assert_eq!(tt[m][n], 3.0 * g[m][n]);
                }
            }
        }
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let v: Vec<f64> = (0..1000).map(|k| 0.1 + k as f64 * 1e-3).collect();
        let exact = 0.1 * 1000.0 + 1e-3 * 999.0 * 1000.0 / 2.0;
        assert!((pairwise_sum(&v) - exact).abs() < 1e-11);
    }
}
