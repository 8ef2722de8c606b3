//! Turns a parsed scenario into the core objects, one stage at a time.

use std::sync::Arc;

use esm_core::duality::{DualityTransformation, TargetMap};
use esm_core::exact::QMatrix;
use esm_core::local_system::{GroupPresentation, MonodromyRep};
use esm_core::residuals::EsmConfiguration;
use esm_core::spacetime::{pair_slot, LorentzMetricField, ScalarMapField, SpacetimeGrid, TwistedTwoForm};
use esm_core::symplectic::{EsmParameters, IntegralLattice, SymplecticSpace, Tolerances};
use esm_core::target::{expm, AffineMap, MetricField, PotentialField, SampleGrid, ScalarTarget, TamingField, TamingKind};
use nalgebra::DMatrix;

use crate::error::{Result, VerifyError};
use crate::scenario::{
    exact_matrix, float_matrix, parse_word, FieldSpec, MetricSpec, MonodromySpec, PairBlock, PeriodSpec, PhiSpec,
    PotentialSpec, Scenario, SpacetimeSpec, TamingSpec, TargetMapSpec, TargetMetricSpec, TargetSpec,
};

/// Command-line adjustments applied on top of the scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub tolerances: Vec<(String, f64)>,
    /// Grid refinement factor; 1 or absent keeps the scenario grid.
    pub refine: Option<usize>,
}

impl Overrides {
    fn refine_factor(&self) -> usize {
        self.refine.unwrap_or(1)
    }
}

pub fn parameters(s: &Scenario, overrides: &Overrides) -> Result<EsmParameters> {
    let mut tolerances = Tolerances::default();
    let entries = s.doc.params.tolerances.iter().map(|(k, v)| (k.as_str(), *v));
    for (name, value) in entries.chain(overrides.tolerances.iter().map(|(k, v)| (k.as_str(), *v))) {
        tolerances.set(name, value).map_err(|e| VerifyError::schema(format!("tolerance {name}"), e.to_string()))?;
    }
    EsmParameters::new(s.doc.params.kappa.unwrap_or(1.0), tolerances)
        .map_err(|e| VerifyError::schema("params.kappa", e.to_string()))
}

fn monodromy_spec(s: &Scenario) -> Result<&MonodromySpec> {
    s.doc.monodromy.as_ref().ok_or(VerifyError::MissingSection("monodromy"))
}

pub fn symplectic_space(spec: &MonodromySpec) -> Result<SymplecticSpace> {
    if spec.n == 0 {
        return Err(VerifyError::schema("monodromy.n", "must be positive"));
    }
    match &spec.omega {
        None => Ok(SymplecticSpace::standard(spec.n)),
        Some(rows) => {
            let omega = exact_matrix(rows, "monodromy.omega")?;
            if omega.rows() != 2 * spec.n || omega.cols() != 2 * spec.n {
                return Err(VerifyError::schema("monodromy.omega", format!("expected a {0}x{0} matrix", 2 * spec.n)));
            }
            SymplecticSpace::new(omega).map_err(VerifyError::model("symplectic pairing"))
        }
    }
}

pub fn presentation(spec: &MonodromySpec) -> Result<GroupPresentation> {
    let gens = spec.generators.clone();
    let mut relations = if spec.abelian {
        GroupPresentation::free_abelian(gens.clone()).relations().to_vec()
    } else {
        Vec::new()
    };
    for (i, r) in spec.relations.iter().enumerate() {
        relations.push(parse_word(r, &gens, &format!("monodromy.relations[{i}]"))?);
    }
    GroupPresentation::new(gens, relations).map_err(VerifyError::model("group presentation"))
}

pub fn images(spec: &MonodromySpec) -> Result<Vec<QMatrix>> {
    if spec.images.len() != spec.generators.len() {
        return Err(VerifyError::schema(
            "monodromy.images",
            format!("{} images for {} generators", spec.images.len(), spec.generators.len()),
        ));
    }
    spec.images
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let field = format!("monodromy.images[{i}]");
            let q = exact_matrix(m, &field)?;
            if q.rows() != 2 * spec.n || q.cols() != 2 * spec.n {
                return Err(VerifyError::schema(field, format!("expected a {0}x{0} matrix", 2 * spec.n)));
            }
            Ok(q)
        })
        .collect()
}

pub fn lattice(spec: &MonodromySpec, sp: &SymplecticSpace) -> Result<Option<IntegralLattice>> {
    let Some(rows) = &spec.lattice else { return Ok(None) };
    let q = exact_matrix(rows, "monodromy.lattice")?;
    let basis = q.to_integer().ok_or_else(|| VerifyError::schema("monodromy.lattice", "entries must be integers"))?;
    if basis.rows() != sp.dim() || basis.cols() != sp.dim() {
        return Err(VerifyError::schema("monodromy.lattice", format!("expected a {0}x{0} matrix", sp.dim())));
    }
    IntegralLattice::new(basis, sp).map(Some).map_err(VerifyError::model("Dirac lattice"))
}

/// Representation with its lattice attached.
pub fn representation(s: &Scenario) -> Result<MonodromyRep> {
    let spec = monodromy_spec(s)?;
    let sp = symplectic_space(spec)?;
    let rep = MonodromyRep::new(presentation(spec)?, sp.clone(), images(spec)?, None)
        .map_err(VerifyError::model("monodromy representation"))?;
    match lattice(spec, &sp)? {
        Some(lat) => rep.with_lattice(lat).map_err(VerifyError::model("monodromy representation")),
        None => Ok(rep),
    }
}

fn target_spec(s: &Scenario) -> Result<&TargetSpec> {
    s.doc.target.as_ref().ok_or(VerifyError::MissingSection("target"))
}

pub fn target(s: &Scenario, rep: &MonodromyRep) -> Result<ScalarTarget> {
    let spec = target_spec(s)?;
    let periods = spec
        .periods
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            PeriodSpec::Length(l) => Ok(Some(*l)),
            PeriodSpec::Open(word) if word == "open" => Ok(None),
            PeriodSpec::Open(word) => Err(VerifyError::schema(format!("target.periods[{i}]"), format!("{word:?} is not a period or \"open\""))),
        })
        .collect::<Result<Vec<_>>>()?;
    let d = periods.len();
    let metric = match &spec.metric {
        TargetMetricSpec::Flat => MetricField::Constant(DMatrix::identity(d, d)),
        TargetMetricSpec::Constant { matrix } => MetricField::Constant(float_matrix(matrix, d, "target.metric.matrix")?),
    };
    let potential = match &spec.potential {
        PotentialSpec::Zero => PotentialField::Constant(0.0),
        PotentialSpec::Constant { value } => PotentialField::Constant(*value),
        PotentialSpec::Quadratic { value, center, hessian } => {
            if center.len() != d {
                return Err(VerifyError::schema("target.potential.center", format!("expected {d} entries")));
            }
            let h = float_matrix(hessian, d, "target.potential.hessian")?;
            let h = (&h + h.transpose()) * 0.5;
            let (value, c, hg) = (*value, center.clone(), h.clone());
            let c2 = center.clone();
            let shifted = move |y: &[f64], c: &[f64]| nalgebra::DVector::from_iterator(y.len(), y.iter().zip(c).map(|(a, b)| a - b));
            PotentialField::Custom {
                value: Arc::new(move |y: &[f64]| {
                    let u = shifted(y, &c);
                    value + 0.5 * u.dot(&(&h * &u))
                }),
                gradient: Some(Arc::new(move |y: &[f64]| {
                    let u = shifted(y, &c2);
                    (&hg * u).iter().copied().collect()
                })),
            }
        }
    };
    let mut t = ScalarTarget::new(periods, metric, potential, rep.clone()).map_err(VerifyError::model("scalar target"))?;
    if let Some(step) = spec.fd_step {
        if !(step > 0.0) {
            return Err(VerifyError::schema("target.fd_step", "must be positive"));
        }
        t = t.with_fd_step(step);
    }
    Ok(t)
}

fn taming_spec(s: &Scenario) -> Result<&TamingSpec> {
    s.doc.taming.as_ref().ok_or(VerifyError::MissingSection("taming"))
}

pub fn sample_grid(s: &Scenario, t: &ScalarTarget) -> Result<SampleGrid> {
    let samples = taming_spec(s)?.samples();
    let d = t.dim();
    if samples.counts.len() != d {
        return Err(VerifyError::schema("taming.samples.counts", format!("expected {d} entries")));
    }
    let mut ranges = vec![(0.0, 0.0); d];
    for i in 0..d {
        if t.periods()[i].is_some() {
            continue;
        }
        let r = samples
            .ranges
            .get(i)
            .ok_or_else(|| VerifyError::schema("taming.samples.ranges", format!("open direction {i} needs a range")))?;
        ranges[i] = (r[0], r[1]);
    }
    SampleGrid::for_target(t, &samples.counts, &ranges).map_err(VerifyError::model("taming sample grid"))
}

/// Taming kind and its sample grid, before validation.
pub fn taming_kind(s: &Scenario, t: &ScalarTarget) -> Result<(TamingKind, SampleGrid)> {
    let grid = sample_grid(s, t)?;
    let sp = t.monodromy().space();
    let f = sp.dim();
    let kind = match taming_spec(s)? {
        TamingSpec::Standard { .. } => TamingKind::Constant(sp.standard_taming()),
        TamingSpec::Constant { matrix, .. } => TamingKind::Constant(float_matrix(matrix, f, "taming.matrix")?),
        TamingSpec::Conjugated { base, generators, .. } => {
            let base = match base {
                Some(m) => float_matrix(m, f, "taming.base")?,
                None => sp.standard_taming(),
            };
            let generators = generators
                .iter()
                .enumerate()
                .map(|(i, m)| float_matrix(m, f, &format!("taming.generators[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            TamingKind::Conjugated { base, generators }
        }
        TamingSpec::Sampled { values, .. } => TamingKind::Sampled(
            values
                .iter()
                .enumerate()
                .map(|(i, m)| float_matrix(m, f, &format!("taming.values[{i}]")))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok((kind, grid))
}

pub fn taming(s: &Scenario, t: &ScalarTarget, params: &EsmParameters) -> Result<TamingField> {
    let (kind, grid) = taming_kind(s, t)?;
    TamingField::new(kind, grid, t, params.tolerances.alg_tol).map_err(VerifyError::model("taming"))
}

pub fn spacetime_spec(s: &Scenario, overrides: &Overrides) -> Result<SpacetimeSpec> {
    let spec = s.doc.spacetime.as_ref().ok_or(VerifyError::MissingSection("spacetime"))?;
    match overrides.refine_factor() {
        1 => Ok(spec.clone()),
        factor => spec.refined(factor, [true; 4]),
    }
}

pub fn grid(s: &Scenario, t: &ScalarTarget, overrides: &Overrides) -> Result<SpacetimeGrid> {
    let spec = spacetime_spec(s, overrides)?;
    grid_from_spec(&spec, t)
}

pub fn grid_from_spec(spec: &SpacetimeSpec, t: &ScalarTarget) -> Result<SpacetimeGrid> {
    let gens = t.monodromy().presentation().generators().to_vec();
    if !spec.winding.is_empty() && spec.winding.len() != 4 {
        return Err(VerifyError::schema("spacetime.winding", "expected four words"));
    }
    let mut winding: [Option<esm_core::local_system::Word>; 4] = Default::default();
    for (m, text) in spec.winding.iter().enumerate() {
        let word = parse_word(text, &gens, &format!("spacetime.winding[{m}]"))?;
        if !word.is_empty() {
            if !spec.periodic[m] {
                return Err(VerifyError::schema(format!("spacetime.winding[{m}]"), "open axes cannot wind"));
            }
            winding[m] = Some(word);
        }
    }
    SpacetimeGrid::new(spec.shape, spec.spacing()?, spec.origin, spec.periodic, winding, t)
        .map_err(VerifyError::model("spacetime grid"))
}

fn require_analytic(overrides: &Overrides, field: &str) -> Result<()> {
    if overrides.refine_factor() > 1 {
        return Err(VerifyError::schema(field, "sampled fields cannot be refined"));
    }
    Ok(())
}

pub fn metric(s: &Scenario, grid: &SpacetimeGrid, overrides: &Overrides) -> Result<LorentzMetricField> {
    let spec = s.doc.metric.as_ref().ok_or(VerifyError::MissingSection("metric"))?;
    let stage = VerifyError::model("spacetime metric");
    match spec {
        MetricSpec::Minkowski => Ok(LorentzMetricField::minkowski(grid)),
        MetricSpec::Schwarzschild { mass } => {
            let m = *mass;
            LorentzMetricField::from_fn(grid, |x| {
                let (r, th) = (x[1], x[2]);
                let f = 1.0 - 2.0 * m / r;
                let s = th.sin();
                [[-f, 0.0, 0.0, 0.0], [0.0, 1.0 / f, 0.0, 0.0], [0.0, 0.0, r * r, 0.0], [0.0, 0.0, 0.0, r * r * s * s]]
            })
            .map_err(stage)
        }
        MetricSpec::Sampled { values, file } => {
            require_analytic(overrides, "metric")?;
            let data = s.sampled_values(values, file, "metric")?;
            if data.len() != 16 * grid.len() {
                return Err(VerifyError::schema("metric", format!("expected {} values, found {}", 16 * grid.len(), data.len())));
            }
            let g = data.chunks(16).map(|c| core::array::from_fn(|a| core::array::from_fn(|b| c[4 * a + b]))).collect();
            LorentzMetricField::from_values(grid, g).map_err(stage)
        }
    }
}

pub fn phi(s: &Scenario, grid: &SpacetimeGrid, t: &ScalarTarget, params: &EsmParameters, overrides: &Overrides) -> Result<ScalarMapField> {
    let spec = s.doc.phi.as_ref().ok_or(VerifyError::MissingSection("phi"))?;
    let d = t.dim();
    let tol = params.tolerances.field_tol;
    let stage = VerifyError::model("scalar map");
    match spec {
        PhiSpec::Constant { value } => {
            if value.len() != d {
                return Err(VerifyError::schema("phi.value", format!("expected {d} entries")));
            }
            ScalarMapField::from_fn(grid, d, |_| value.clone(), tol).map_err(stage)
        }
        PhiSpec::Analytic { offset, slope, waves } => {
            if offset.len() != d {
                return Err(VerifyError::schema("phi.offset", format!("expected {d} entries")));
            }
            if !slope.is_empty() && slope.len() != d {
                return Err(VerifyError::schema("phi.slope", format!("expected {d} rows")));
            }
            if let Some(w) = waves.iter().find(|w| w.component >= d) {
                return Err(VerifyError::schema("phi.waves", format!("component {} out of range", w.component)));
            }
            ScalarMapField::from_fn(
                grid,
                d,
                |x| {
                    let mut y = offset.clone();
                    for (i, row) in slope.iter().enumerate() {
                        y[i] += (0..4).map(|m| row[m] * x[m]).sum::<f64>();
                    }
                    for w in waves {
                        let arg: f64 = (0..4).map(|m| w.frequency[m] * x[m]).sum::<f64>();
                        y[w.component] += w.amplitude * (2.0 * std::f64::consts::PI * arg + w.phase).sin();
                    }
                    y
                },
                tol,
            )
            .map_err(stage)
        }
        PhiSpec::Sampled { values, file } => {
            require_analytic(overrides, "phi")?;
            let data = s.sampled_values(values, file, "phi")?;
            ScalarMapField::from_values(grid, d, data).map_err(stage)
        }
    }
}

fn pair_blocks(blocks: &[PairBlock], fiber: usize, scale: f64) -> Result<Vec<f64>> {
    let mut w = vec![0.0; 6 * fiber];
    for (i, b) in blocks.iter().enumerate() {
        let field = format!("v.components[{i}]");
        let digits: Vec<usize> = b.pair.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
        let (slot, sign) = match digits[..] {
            [m, n] if m < 4 && n < 4 && b.pair.len() == 2 => {
                pair_slot(m, n).ok_or_else(|| VerifyError::schema(&field, "pair needs two distinct axes"))?
            }
            _ => return Err(VerifyError::schema(&field, format!("{:?} is not an axis pair like \"03\"", b.pair))),
        };
        if b.values.len() != fiber {
            return Err(VerifyError::schema(&field, format!("expected {fiber} values")));
        }
        for (a, v) in b.values.iter().enumerate() {
            w[slot * fiber + a] += sign * scale * v;
        }
    }
    Ok(w)
}

pub fn field(
    s: &Scenario,
    grid: &SpacetimeGrid,
    phi: &ScalarMapField,
    taming: &TamingField,
    params: &EsmParameters,
    overrides: &Overrides,
) -> Result<TwistedTwoForm> {
    let spec = s.doc.v.as_ref().ok_or(VerifyError::MissingSection("v"))?;
    let f = taming.fiber_dim();
    let tol = params.tolerances.field_tol;
    let stage = VerifyError::model("field strength");
    match spec {
        FieldSpec::Zero => Ok(TwistedTwoForm::zero(grid, f)),
        FieldSpec::Constant { components, scale } => {
            let w = pair_blocks(components, f, *scale)?;
            TwistedTwoForm::from_fn(grid, f, |_| w.clone(), tol).map_err(stage)
        }
        FieldSpec::Frame { components, scale } => {
            let w = pair_blocks(components, f, *scale)?;
            let TamingKind::Conjugated { generators, .. } = taming.kind() else {
                return Err(VerifyError::schema("v", "frame fields need a conjugated taming"));
            };
            let frame = |y: &[f64]| {
                let mut x = DMatrix::zeros(f, f);
                for (yi, g) in y.iter().zip(generators) {
                    x += g * *yi;
                }
                expm(&x)
            };
            let data: Vec<f64> = (0..grid.len())
                .flat_map(|k| {
                    let e = frame(phi.at(k));
                    (0..6)
                        .flat_map(|p| {
                            let block = &w[p * f..(p + 1) * f];
                            (0..f).map(|r| (0..f).map(|c| e[(r, c)] * block[c]).sum::<f64>()).collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            check_frame_periodicity(grid, phi, frame, &w, tol).map_err(VerifyError::model("field strength"))?;
            TwistedTwoForm::from_values(grid, f, data).map_err(stage)
        }
        FieldSpec::Sampled { values, file, scale } => {
            require_analytic(overrides, "v")?;
            let data = s.sampled_values(values, file, "v")?;
            let v = TwistedTwoForm::from_values(grid, f, data).map_err(stage)?;
            Ok(v.scale(*scale))
        }
    }
}

/// `E(phi(x) + shift_m) W = rho_m E(phi(x)) W` on the cut slices, which
/// makes the frame field cut compatible whenever the scalar is.
fn check_frame_periodicity(
    grid: &SpacetimeGrid,
    phi: &ScalarMapField,
    frame: impl Fn(&[f64]) -> DMatrix<f64>,
    w: &[f64],
    tol: f64,
) -> esm_core::Result<()> {
    let f = w.len() / 6;
    let w = DMatrix::from_row_slice(6, f, w).transpose();
    for m in 0..4 {
        let Some(twist) = grid.twist(m) else { continue };
        let mut violation = 0.0f64;
        for node in grid.cut_nodes(m) {
            let y = phi.at(node);
            let shifted: Vec<f64> = y.iter().zip(&twist.period_shift).map(|(a, b)| a + b).collect();
            let gap = &frame(&shifted) * &w - &twist.rho * frame(y) * &w;
            violation = violation.max(gap.amax());
        }
        if violation > tol {
            return Err(esm_core::Error::CutIncompatible { direction: m, violation });
        }
    }
    Ok(())
}

/// Full configuration; polarization is reported, not enforced.
pub fn configuration(s: &Scenario, overrides: &Overrides) -> Result<EsmConfiguration> {
    let params = parameters(s, overrides)?;
    let rep = representation(s)?;
    let t = target(s, &rep)?;
    let jf = taming(s, &t, &params)?;
    let g = grid(s, &t, overrides)?;
    let metric = metric(s, &g, overrides)?;
    let phi = phi(s, &g, &t, &params, overrides)?;
    let v = field(s, &g, &phi, &jf, &params, overrides)?;
    EsmConfiguration::unchecked(g, metric, phi, v, jf, params).map_err(VerifyError::model("configuration"))
}

#[derive(Clone, Debug)]
pub struct NamedTransformation {
    pub name: String,
    pub transformation: DualityTransformation,
}

pub fn target_map(spec: &TargetMapSpec, d: usize, field: &str) -> Result<TargetMap> {
    let vector = |v: &Vec<f64>, what: &str| {
        if v.len() == d {
            Ok(v.clone())
        } else {
            Err(VerifyError::schema(format!("{field}.{what}"), format!("expected {d} entries")))
        }
    };
    Ok(match spec {
        TargetMapSpec::Identity => TargetMap::Identity,
        TargetMapSpec::Translation { shift } => TargetMap::Translation(vector(shift, "shift")?),
        TargetMapSpec::Linear { matrix } => TargetMap::Linear(float_matrix(matrix, d, &format!("{field}.matrix"))?),
        TargetMapSpec::Affine { matrix, shift } => TargetMap::Affine(AffineMap {
            linear: float_matrix(matrix, d, &format!("{field}.matrix"))?,
            shift: vector(shift, "shift")?,
        }),
    })
}

pub fn transformations(s: &Scenario, t: &ScalarTarget) -> Result<Vec<NamedTransformation>> {
    if s.doc.transformation.is_empty() {
        return Err(VerifyError::MissingSection("transformation"));
    }
    let sp = t.monodromy().space();
    s.doc
        .transformation
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let field = format!("transformation[{i}]");
            let f0 = target_map(&spec.f0, t.dim(), &format!("{field}.f0"))?;
            let lift = exact_matrix(&spec.lift, &format!("{field}.lift"))?;
            if lift.rows() != sp.dim() || lift.cols() != sp.dim() {
                return Err(VerifyError::schema(format!("{field}.lift"), format!("expected a {0}x{0} matrix", sp.dim())));
            }
            let transformation = DualityTransformation::new(f0, lift, sp).map_err(VerifyError::model("duality transformation"))?;
            Ok(NamedTransformation { name: spec.name.clone().unwrap_or_else(|| format!("transformation {i}")), transformation })
        })
        .collect()
}

pub fn monodromy_generators(rep: &MonodromyRep) -> Vec<String> {
    rep.presentation().generators().to_vec()
}
