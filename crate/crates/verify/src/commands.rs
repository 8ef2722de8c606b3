//! Verification commands. Each returns an [`Outcome`]; input problems are
//! errors, failed checks are a `fail` status.

use esm_core::duality::{covariance_check, is_integral_duality, is_symmetry, TargetMap};
use esm_core::local_system::{commutant_basis, holonomy_sample, is_trivializable, MonodromyRep, Triviality};
use esm_core::quantization::{
    cohomological_euler_characteristic, integral_image_basis, quantization_check, twisted_cohomology,
    QuantizationVerdict, Ring, TwistedCellComplex,
};
use esm_core::residuals::{residual_report, EsmConfiguration, ResidualReport};
use esm_core::spacetime::{LorentzMetricField, SpacetimeGrid};
use esm_core::symplectic::{is_symplectic, IntegralLattice};
use esm_core::target::{check_twisted_periodicity, ScalarTarget, TamingField};
use serde_json::{json, Map, Value};

use crate::error::{Result, VerifyError};
use crate::model::{self, Overrides};
use crate::report::{error_value, exact, float_matrix, norm_pair, num, nums, Outcome, Status, COCHAIN_MODEL};
use crate::scenario::{format_word, Exact, Scenario};

/// The bundled U-fold scenario.
pub const UFOLD_SCENARIO: &str = include_str!("../scenarios/ufold.toml");

pub fn bundled_ufold() -> Result<Scenario> {
    Scenario::parse(UFOLD_SCENARIO, "bundled:ufold.toml", ".")
}

fn grid_value(grid: &SpacetimeGrid, rep: &MonodromyRep) -> Value {
    let gens = rep.presentation().generators();
    let winding: Vec<Value> =
        (0..4).map(|m| grid.winding(m).map_or(Value::Null, |w| json!(format_word(w, gens)))).collect();
    json!({
        "shape": grid.shape(),
        "spacing": nums(&grid.spacing()),
        "origin": nums(&grid.origin()),
        "periodic": grid.periodic(),
        "winding": winding,
        "nodes": grid.len(),
    })
}

fn norms_value(r: &ResidualReport) -> Value {
    json!({
        "einstein": norm_pair(&r.einstein),
        "scalar": norm_pair(&r.scalar),
        "em": norm_pair(&r.em),
        "polarization": norm_pair(&r.polarization),
    })
}

fn module_conventions(r: &ResidualReport) -> Value {
    Value::Object(r.conventions.entries.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

/// One named invariant check.
struct Checks(Vec<(String, Value)>);

impl Checks {
    fn record(&mut self, name: &str, outcome: std::result::Result<Value, esm_core::Error>) -> bool {
        let (ok, value) = match outcome {
            Ok(detail) => (true, json!({ "status": "pass", "detail": detail })),
            Err(e) => (false, json!({ "status": "fail", "error": error_value(&e) })),
        };
        self.0.push((name.to_string(), value));
        ok
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.0.push((name.to_string(), json!({ "status": "skipped", "reason": reason })));
    }

    fn skip_all(&mut self, names: &[&str], reason: &str) {
        for n in names {
            self.skip(n, reason);
        }
    }

    fn failed(&self) -> bool {
        self.0.iter().any(|(_, v)| v["status"] == "fail")
    }

    fn into_value(self) -> Value {
        Value::Array(self.0.into_iter().map(|(name, mut v)| {
            v["name"] = json!(name);
            v
        }).collect())
    }
}

/// Optional section: `Ok(None)` when it is absent.
fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(VerifyError::MissingSection(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Splits model errors (invariant violations) from input errors.
fn invariant<T>(r: Result<T>) -> Result<std::result::Result<T, esm_core::Error>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(VerifyError::Model { source, .. }) => Ok(Err(source)),
        Err(e) => Err(e),
    }
}

const LATER: [&str; 8] = [
    "target",
    "taming",
    "twisted_periodicity",
    "winding_words",
    "lorentz_metric",
    "scalar_cut_compatibility",
    "field_cut_compatibility",
    "polarization",
];

/// Runs every constructor invariant and reports each one.
pub fn validate(s: &Scenario, ov: &Overrides) -> Result<Outcome> {
    let params = model::parameters(s, ov)?;
    let mut checks = Checks(Vec::new());
    let Some(spec) = s.doc.monodromy.as_ref() else {
        return Err(VerifyError::MissingSection("monodromy"));
    };
    let sp = model::symplectic_space(spec)?;
    let presentation = model::presentation(spec)?;
    let images = model::images(spec)?;
    let lattice = model::lattice(spec, &sp);

    let mut symplectic = Ok(json!(images.len()));
    for (g, m) in images.iter().enumerate() {
        match is_symplectic(m, &sp) {
            Ok(true) => {}
            Ok(false) => {
                symplectic = Err(esm_core::Error::Invalid(format!("image of generator {} is not symplectic", presentation.generators()[g])));
                break;
            }
            Err(e) => {
                symplectic = Err(e);
                break;
            }
        }
    }
    let mut rest_reason = None;
    if !checks.record("monodromy_symplectic", symplectic) {
        checks.skip("relations", "monodromy is not symplectic");
        rest_reason = Some("no valid monodromy");
    }
    let mut rep = None;
    if rest_reason.is_none() {
        let built = MonodromyRep::new(presentation, sp.clone(), images, None);
        match built {
            Ok(r) => {
                checks.record("relations", Ok(json!(r.presentation().relations().len())));
                rep = Some(r);
            }
            Err(e) => {
                checks.record("relations", Err(e));
                rest_reason = Some("relations fail");
            }
        }
    }
    match (rep.take(), invariant(lattice)?) {
        (Some(r), Ok(Some(lat))) => {
            let types: Vec<String> = lat.type_divisors().iter().map(ToString::to_string).collect();
            checks.record("lattice", Ok(json!({ "type": types })));
            match r.with_lattice(lat) {
                Ok(r) => {
                    checks.record("lattice_preserved", Ok(Value::Bool(true)));
                    rep = Some(r);
                }
                Err(e) => {
                    checks.record("lattice_preserved", Err(e));
                    rest_reason = Some("lattice not preserved");
                }
            }
        }
        (Some(r), Ok(None)) => {
            checks.skip_all(&["lattice", "lattice_preserved"], "no lattice given");
            rep = Some(r);
        }
        (Some(_), Err(e)) => {
            checks.record("lattice", Err(e));
            checks.skip("lattice_preserved", "invalid lattice");
            rest_reason = Some("invalid lattice");
        }
        (None, _) => checks.skip_all(&["lattice", "lattice_preserved"], "no valid monodromy"),
    }

    match (rep, rest_reason) {
        (Some(rep), None) => validate_geometry(s, ov, &params, &rep, &mut checks)?,
        (_, reason) => checks.skip_all(&LATER, reason.unwrap_or("no valid monodromy")),
    }
    let status = Status::from_passed(!checks.failed());
    Ok(Outcome { status, results: json!({ "checks": checks.into_value() }), params })
}

fn validate_geometry(
    s: &Scenario,
    ov: &Overrides,
    params: &esm_core::symplectic::EsmParameters,
    rep: &MonodromyRep,
    checks: &mut Checks,
) -> Result<()> {
    let Some(t) = optional(invariant(model::target(s, rep)))? else {
        checks.skip_all(&LATER, "no [target] section");
        return Ok(());
    };
    let t = match t {
        Ok(t) => t,
        Err(e) => {
            checks.record("target", Err(e));
            checks.skip_all(&LATER[1..], "invalid target");
            return Ok(());
        }
    };
    let Some(jf) = optional(invariant(model::taming(s, &t, params)))? else {
        checks.record("target", Ok(json!({ "dim": t.dim() })));
        checks.skip_all(&LATER[1..], "no [taming] section");
        return Ok(());
    };
    let metric_ok = optional(invariant(model::sample_grid(s, &t)))?
        .map(|g| g.and_then(|g| t.validate_metric_on(&g)))
        .unwrap_or(Ok(()));
    checks.record("target", metric_ok.map(|_| json!({ "dim": t.dim() })));
    let jf = match jf {
        Ok(jf) => jf,
        Err(e) => {
            checks.record("taming", Err(e));
            checks.skip_all(&LATER[2..], "invalid taming");
            return Ok(());
        }
    };
    checks.record("taming", Ok(json!({ "samples": jf.grid().len() })));
    checks.record(
        "twisted_periodicity",
        check_twisted_periodicity(&t, &jf, params.tolerances.field_tol).map(|r| num(r.max_violation)),
    );
    validate_fields(s, ov, params, &t, &jf, checks)
}

fn validate_fields(
    s: &Scenario,
    ov: &Overrides,
    params: &esm_core::symplectic::EsmParameters,
    t: &ScalarTarget,
    jf: &TamingField,
    checks: &mut Checks,
) -> Result<()> {
    let names = &LATER[3..];
    let Some(grid) = optional(invariant(model::grid(s, t, ov)))? else {
        checks.skip_all(names, "no [spacetime] section");
        return Ok(());
    };
    let grid = match grid {
        Ok(g) => g,
        Err(e) => {
            checks.record("winding_words", Err(e));
            checks.skip_all(&names[1..], "invalid grid");
            return Ok(());
        }
    };
    checks.record("winding_words", Ok(json!(grid.len())));
    let metric = optional(invariant(model::metric(s, &grid, ov)))?;
    let metric: Option<LorentzMetricField> = match metric {
        None => {
            checks.skip("lorentz_metric", "no [metric] section");
            None
        }
        Some(Ok(m)) => {
            checks.record("lorentz_metric", Ok(Value::Bool(true)));
            Some(m)
        }
        Some(Err(e)) => {
            checks.record("lorentz_metric", Err(e));
            None
        }
    };
    let phi = match optional(invariant(model::phi(s, &grid, t, params, ov)))? {
        None => {
            checks.skip_all(&names[2..], "no [phi] section");
            return Ok(());
        }
        Some(Err(e)) => {
            checks.record("scalar_cut_compatibility", Err(e));
            checks.skip_all(&names[3..], "invalid scalar map");
            return Ok(());
        }
        Some(Ok(phi)) => {
            checks.record("scalar_cut_compatibility", Ok(Value::Bool(true)));
            phi
        }
    };
    let v = match optional(invariant(model::field(s, &grid, &phi, jf, params, ov)))? {
        None => {
            checks.skip_all(&names[3..], "no [v] section");
            return Ok(());
        }
        Some(Err(e)) => {
            checks.record("field_cut_compatibility", Err(e));
            checks.skip("polarization", "invalid field strength");
            return Ok(());
        }
        Some(Ok(v)) => {
            checks.record("field_cut_compatibility", Ok(Value::Bool(true)));
            v
        }
    };
    let Some(metric) = metric else {
        checks.skip("polarization", "no valid metric");
        return Ok(());
    };
    let cfg = EsmConfiguration::unchecked(grid, metric, phi, v, jf.clone(), params.clone())
        .map_err(VerifyError::model("configuration"))?;
    let polarization = cfg.polarization_violation().and_then(|violation| {
        if violation <= params.tolerances.field_tol {
            Ok(num(violation))
        } else {
            Err(esm_core::Error::NotPolarized { violation })
        }
    });
    checks.record("polarization", polarization);
    Ok(())
}

fn residuals_value(cfg: &EsmConfiguration, report: &ResidualReport, s: &Scenario) -> Value {
    let mut v = json!({
        "norms": norms_value(report),
        "interior_nodes": report.interior_nodes,
        "grid": grid_value(&cfg.grid, cfg.target().monodromy()),
        "scenario_hash": s.hash,
        "conventions": module_conventions(report),
    });
    if let Some(fields) = &report.fields {
        let einstein: Vec<f64> = fields.einstein.iter().flat_map(|t| t.iter().flatten().copied()).collect();
        let scalar: Vec<f64> = fields.scalar.iter().flatten().copied().collect();
        v["fields"] = json!({
            "layout": "node-major; einstein 16 row-major per node, scalar d per node, em 4 triples x 2n, polarization 6 pairs x 2n",
            "einstein": nums(&einstein),
            "scalar": nums(&scalar),
            "em": nums(fields.em.data()),
            "polarization": nums(fields.polarization.data()),
        });
    }
    v
}

fn residuals_pass(report: &ResidualReport, params: &esm_core::symplectic::EsmParameters) -> bool {
    let tol = params.tolerances.residual_tol;
    report.einstein.max <= tol
        && report.scalar.max <= tol
        && report.em.max <= tol
        && report.polarization.max <= params.tolerances.field_tol
}

/// Residuals of the three field equations and the polarization defect.
pub fn residuals(s: &Scenario, ov: &Overrides, dump_fields: bool) -> Result<Outcome> {
    let cfg = model::configuration(s, ov)?;
    let report = residual_report(&cfg, dump_fields).map_err(VerifyError::model("residuals"))?;
    Ok(Outcome {
        status: Status::from_passed(residuals_pass(&report, &cfg.params)),
        results: residuals_value(&cfg, &report, s),
        params: cfg.params.clone(),
    })
}

fn target_map_value(f0: &TargetMap) -> Value {
    match f0 {
        TargetMap::Identity => json!({ "kind": "identity" }),
        TargetMap::Translation(t) => json!({ "kind": "translation", "shift": nums(t) }),
        TargetMap::Linear(a) => json!({ "kind": "linear", "matrix": float_matrix(a) }),
        TargetMap::Affine(a) => json!({ "kind": "affine", "matrix": float_matrix(&a.linear), "shift": nums(&a.shift) }),
    }
}

/// Covariance of the residuals under each scenario transformation.
pub fn duality(s: &Scenario, ov: &Overrides) -> Result<Outcome> {
    let cfg = model::configuration(s, ov)?;
    let fs = model::transformations(s, cfg.target())?;
    let tol = cfg.params.tolerances.covariance_tol;
    let lattice = cfg.target().monodromy().lattice().cloned();
    let sp = cfg.target().monodromy().space().clone();
    let mut all = true;
    let mut entries = Vec::new();
    for nt in &fs {
        let f = &nt.transformation;
        let mut entry = json!({
            "name": nt.name,
            "f0": target_map_value(f.f0()),
            "lift": exact(f.lift()),
            "is_symmetry": is_symmetry(f, &cfg.taming, cfg.params.tolerances.alg_tol.max(1e-9)),
        });
        if let Some(lat) = &lattice {
            entry["integral"] = json!(is_integral_duality(f, lat, &sp).map_err(VerifyError::model("lattice membership"))?);
        }
        match covariance_check(f, &cfg, tol) {
            Ok(r) => {
                all &= r.passed;
                entry["passed"] = json!(r.passed);
                entry["discrepancy"] = num(r.discrepancy);
                entry["scalar_discrepancy"] = num(r.scalar_discrepancy);
                entry["em_discrepancy"] = num(r.em_discrepancy);
                entry["einstein_discrepancy"] = num(r.einstein_discrepancy);
                entry["polarization_discrepancy"] = num(r.polarization_discrepancy);
                entry["original"] = norms_value(&r.original);
                entry["transformed"] = norms_value(&r.transformed);
            }
            Err(e) => {
                all = false;
                entry["passed"] = json!(false);
                entry["error"] = error_value(&e);
            }
        }
        entries.push(entry);
    }
    Ok(Outcome {
        status: Status::from_passed(all),
        results: json!({
            "transformations": entries,
            "grid": grid_value(&cfg.grid, cfg.target().monodromy()),
            "scenario_hash": s.hash,
        }),
        params: cfg.params.clone(),
    })
}

fn verdict_value(v: &QuantizationVerdict) -> Value {
    match v {
        QuantizationVerdict::Integral { coefficients, residual } => {
            json!({ "kind": "Integral", "coefficients": coefficients, "residual": num(*residual) })
        }
        QuantizationVerdict::NonIntegral { coefficients, nearest, residual } => json!({
            "kind": "NonIntegral",
            "coefficients": nums(coefficients),
            "nearest": nearest,
            "residual": num(*residual),
        }),
        QuantizationVerdict::NotClosed { violation } => json!({ "kind": "NotClosed", "violation": num(*violation) }),
    }
}

/// Cohomology summary of a complex: real and integer ranks, torsion and the
/// weighted Euler characteristic identity.
pub fn complex_summary(complex: &TwistedCellComplex) -> esm_core::Result<Value> {
    let mut degrees = Vec::new();
    for k in 0..complex.counts().len() {
        let real = twisted_cohomology(complex, k, Ring::Real)?;
        let integer = twisted_cohomology(complex, k, Ring::Integer)?;
        let torsion: Vec<String> = integer.torsion.iter().map(ToString::to_string).collect();
        degrees.push(json!({
            "degree": k,
            "real_rank": real.rank,
            "integer_rank": integer.rank,
            "torsion": torsion,
        }));
    }
    let chi = complex.euler_characteristic();
    let weighted = cohomological_euler_characteristic(complex)?;
    Ok(json!({
        "cells": complex.counts(),
        "fiber": complex.fiber(),
        "euler_characteristic": chi,
        "cohomological_euler_characteristic": weighted,
        "euler_identity": weighted == complex.fiber() as i64 * chi,
        "cohomology": degrees,
    }))
}

/// Twisted Dirac quantization of the scenario field strength.
pub fn quantize(s: &Scenario, ov: &Overrides) -> Result<Outcome> {
    let cfg = model::configuration(s, ov)?;
    let t = cfg.target();
    let stage = "twisted cell complex";
    let mut complex = TwistedCellComplex::for_grid(&cfg.grid, t).map_err(VerifyError::model(stage))?;
    if let Some(lat) = t.monodromy().lattice() {
        complex = complex.with_lattice(lat.basis().clone()).map_err(VerifyError::model(stage))?;
    }
    let summary = complex_summary(&complex).map_err(VerifyError::model(stage))?;
    let image = integral_image_basis(&complex, 2.min(complex.counts().len().saturating_sub(1)))
        .map_err(VerifyError::model("integral image"))?;
    let tol = cfg.params.tolerances.quant_tol;
    let verdict = quantization_check(&cfg.v, &cfg.grid, &complex, tol).map_err(VerifyError::model("quantization"))?;
    let mut results = json!({
        "model": COCHAIN_MODEL,
        "complex": summary,
        "integral_image_rank": image.rank(),
        "verdict": verdict_value(&verdict),
        "tolerance": num(tol),
        "scenario_hash": s.hash,
    });
    if complex.counts().len() < 3 {
        results["note"] = json!("fewer than two periodic axes: no 2-cells");
    }
    Ok(Outcome { status: Status::from_passed(verdict.is_integral()), results, params: cfg.params.clone() })
}

fn triviality_value(t: &Triviality, gens: &[String]) -> Value {
    match t {
        Triviality::Trivial => json!({ "verdict": "Trivial" }),
        Triviality::Nontrivial { generator, image, trace_word } => {
            let mut v = json!({
                "verdict": "Nontrivial",
                "generator": gens[*generator],
                "image": exact(image),
            });
            if let Some((w, tr)) = trace_word {
                v["trace_word"] = json!({ "word": format_word(w, gens), "trace": tr.to_string() });
            }
            v
        }
    }
}

const HOLONOMY_WORD_LENGTH: usize = 3;
const HOLONOMY_LIMIT: usize = 10_000;

/// Monodromy data: triviality witness, lattice type, commutant and a
/// holonomy sample.
pub fn holonomy(s: &Scenario, ov: &Overrides) -> Result<Outcome> {
    let params = model::parameters(s, ov)?;
    let rep = model::representation(s)?;
    let triviality = is_trivializable(&rep);
    let mut results = holonomy_value(&rep, &triviality);
    let status = match holonomy_sample(&rep, HOLONOMY_WORD_LENGTH, HOLONOMY_LIMIT) {
        Ok(sample) => {
            results["holonomy_sample"] = json!({ "max_word_length": HOLONOMY_WORD_LENGTH, "distinct_elements": sample.len() });
            Status::Pass
        }
        Err(e) => {
            results["holonomy_sample"] = error_value(&e);
            Status::Inconclusive
        }
    };
    Ok(Outcome { status, results, params })
}

fn holonomy_value(rep: &MonodromyRep, triviality: &Triviality) -> Value {
    let gens = rep.presentation().generators();
    let images: Map<String, Value> = gens.iter().zip(rep.images()).map(|(g, m)| (g.clone(), exact(m))).collect();
    let mut v = json!({
        "generators": gens,
        "relations": rep.presentation().relations().iter().map(|w| format_word(w, gens)).collect::<Vec<_>>(),
        "images": images,
        "triviality": triviality_value(triviality, gens),
        "commutant_dimension": commutant_basis(rep).len(),
    });
    if let Some(lat) = rep.lattice() {
        v["lattice"] = lattice_value(lat);
    }
    v
}

fn lattice_value(lat: &IntegralLattice) -> Value {
    let types: Vec<String> = lat.type_divisors().iter().map(ToString::to_string).collect();
    json!({ "type": types, "basis": exact(&lat.basis().to_rational()), "preserved": true })
}

/// End-to-end U-fold demonstration on the bundled (or a given) scenario.
pub fn ufold_demo(s: &Scenario, ov: &Overrides) -> Result<Outcome> {
    let validation = validate(s, ov)?;
    let rep = model::representation(s)?;
    let triviality = is_trivializable(&rep);
    let nontrivial = !triviality.is_trivial();

    let mut flipped_doc = s.clone();
    if let Some(m) = flipped_doc.doc.monodromy.as_mut() {
        let dim = 2 * m.n;
        let identity: Vec<Vec<Exact>> =
            (0..dim).map(|r| (0..dim).map(|c| Exact::Integer(i64::from(r == c))).collect()).collect();
        m.images = vec![identity; m.images.len()];
    }
    let flipped = is_trivializable(&model::representation(&flipped_doc)?);

    let residuals = residuals(s, ov, false)?;
    let duality = duality(s, ov)?;
    let quantization = quantize(s, ov)?;

    let sp = rep.space().clone();
    let identity_integral = match rep.lattice() {
        Some(lat) => is_integral_duality(&esm_core::duality::DualityTransformation::identity(&sp), lat, &sp)
            .map_err(VerifyError::model("lattice membership"))?,
        None => false,
    };
    let integral_names: Vec<Value> = duality.results["transformations"]
        .as_array()
        .map(|ts| ts.iter().filter(|t| t["integral"] == json!(true)).map(|t| t["name"].clone()).collect())
        .unwrap_or_default();

    let passed = validation.status == Status::Pass
        && nontrivial
        && flipped.is_trivial()
        && duality.status == Status::Pass
        && quantization.status == Status::Pass
        && identity_integral;
    let results = json!({
        "validation": validation.results,
        "monodromy": holonomy_value(&rep, &triviality),
        "identity_monodromy": triviality_value(&flipped, rep.presentation().generators()),
        "residuals": { "status": residuals.status.as_str(), "report": residuals.results },
        "covariance": { "status": duality.status.as_str(), "report": duality.results },
        "quantization": { "status": quantization.status.as_str(), "report": quantization.results },
        "integral_dualities": {
            "identity_is_integral": identity_integral,
            "integral_scenario_transformations": integral_names,
        },
        "summary": {
            "invariants_hold": validation.status == Status::Pass,
            "monodromy_nontrivial": nontrivial,
            "identity_monodromy_trivial": flipped.is_trivial(),
            "covariance_holds": duality.status == Status::Pass,
            "field_quantized": quantization.status == Status::Pass,
            "integral_duality_group_nonempty": identity_integral,
        },
    });
    Ok(Outcome { status: Status::from_passed(passed), results, params: validation.params })
}
