//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use esm_core::duality::{covariance_check, DualityTransformation, TargetMap};
use esm_core::exact::{int, rat, QMatrix};
use esm_core::local_system::{is_trivializable, GroupPresentation, MonodromyRep, Triviality};
use esm_core::quantization::{cohomological_euler_characteristic, twisted_cohomology, Ring, TwistedCellComplex};
use esm_core::random;
use esm_core::residuals::{einstein_tensor, residual_report, EsmConfiguration, BOUNDARY_MARGIN};
use esm_core::spacetime::{
    polarize, pulled_back_fundamental_field, scalar_pairing, twisted_hodge, TwistedTwoForm,
};
use esm_core::symplectic::{lattice_type, IntegralLattice, SymplecticSpace};
use esm_core::target::{fundamental_field, fundamental_form, ScalarTarget, TamingField};
use esm_verify::scenario::Exact;
use esm_verify::{model, run, Command, Overrides, Scenario};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn bundled(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(format!("{name}.toml"))).expect("bundled scenario parses")
}

fn bundled_scenarios() -> Vec<Scenario> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .expect("scenario dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Scenario::load(p).expect("bundled scenario parses")).collect()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Ten random unpolarized configurations on `8^4`, five with `2n = 2` and
/// five with `2n = 4`.
fn random_configurations() -> Vec<EsmConfiguration> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..10).map(|i| random::configuration(&mut rng, [8; 4], 1 + i % 2).expect("random configuration")).collect()
}

fn hodge_involution() -> Check {
    let mut worst = 0.0f64;
    for cfg in random_configurations() {
        let ctx = cfg.context().map_err(|e| e.to_string())?;
        let once = twisted_hodge(&cfg.metric, &ctx, &cfg.v).map_err(|e| e.to_string())?;
        let twice = twisted_hodge(&cfg.metric, &ctx, &once).map_err(|e| e.to_string())?;
        worst = worst.max(sup(twice.data(), cfg.v.data()));
    }
    ensure(worst <= 1e-10, format!("max |**V - V| = {worst:.3e} over 10 configurations"))
}

/// Matrix of `P+` at `node`, assembled column by column.
fn projector_at(cfg: &EsmConfiguration, node: usize) -> DMatrix<f64> {
    let f = cfg.v.fiber();
    let dim = 6 * f;
    let ctx = cfg.context().expect("context");
    let mut p = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut data = vec![0.0; cfg.v.data().len()];
        data[node * dim + col] = 1.0;
        let e = TwistedTwoForm::from_values(&cfg.grid, f, data).expect("unit field");
        let image = polarize(&cfg.metric, &ctx, &e).expect("polarize");
        for (row, value) in image.at(node).iter().enumerate() {
            p[(row, col)] = *value;
        }
    }
    p
}

fn polarization_projector() -> Check {
    let mut idempotence = 0.0f64;
    let mut ranks = Vec::new();
    for cfg in random_configurations() {
        let ctx = cfg.context().map_err(|e| e.to_string())?;
        let once = polarize(&cfg.metric, &ctx, &cfg.v).map_err(|e| e.to_string())?;
        let twice = polarize(&cfg.metric, &ctx, &once).map_err(|e| e.to_string())?;
        idempotence = idempotence.max(sup(twice.data(), once.data()));
        let n = cfg.v.fiber() / 2;
        for node in [0, 1365, 2730, 4095] {
            let p = projector_at(&cfg, node);
            idempotence = idempotence.max((&p * &p - &p).amax());
            let rank = p.singular_values().iter().filter(|s| **s > 1e-8).count();
            if rank != 6 * n {
                return Err(format!("rank {rank} != 6n = {} at node {node}", 6 * n));
            }
            ranks.push(rank);
        }
    }
    ensure(
        idempotence <= 1e-10,
        format!("max |P+P+ - P+| = {idempotence:.3e}; rank 6n at all {} sampled nodes", ranks.len()),
    )
}

fn vacuum_exactness() -> Check {
    let s = bundled("vacuum");
    let cfg = model::configuration(&s, &Overrides::default()).map_err(|e| e.to_string())?;
    let report = residual_report(&cfg, true).map_err(|e| e.to_string())?;
    let fields = report.fields.as_ref().expect("fields kept");
    let nonzero = fields.einstein.iter().flat_map(|t| t.iter().flatten()).filter(|v| **v != 0.0).count()
        + fields.scalar.iter().flatten().filter(|v| **v != 0.0).count()
        + fields.em.data().iter().filter(|v| **v != 0.0).count();
    let norms = [report.einstein, report.scalar, report.em];
    ensure(
        nonzero == 0 && norms.iter().all(|n| n.max == 0.0 && n.rms == 0.0),
        format!("{nonzero} nonzero residual components at {} nodes", cfg.grid.len()),
    )
}

fn schwarzschild_convergence() -> Check {
    let s = bundled("schwarzschild");
    let ov = Overrides::default();
    let rep = model::representation(&s).map_err(|e| e.to_string())?;
    let t = model::target(&s, &rep).map_err(|e| e.to_string())?;
    let coarse_spec = model::spacetime_spec(&s, &ov).map_err(|e| e.to_string())?;
    let coarse = model::grid_from_spec(&coarse_spec, &t).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    let mut spacing = Vec::new();
    for factor in [1usize, 2] {
        let spec = coarse_spec.refined(factor, [false, true, true, false]).map_err(|e| e.to_string())?;
        let grid = model::grid_from_spec(&spec, &t).map_err(|e| e.to_string())?;
        let g = model::metric(&s, &grid, &ov).map_err(|e| e.to_string())?;
        let einstein = einstein_tensor(&grid, &g).map_err(|e| e.to_string())?;
        // Compare on the nodes of the coarse interior, present in both grids.
        let err = coarse
            .interior(BOUNDARY_MARGIN)
            .into_iter()
            .map(|k| {
                let [a, r, th, ph] = coarse.multi_index(k);
                let e = &einstein[grid.flat_index([a, r * factor, th * factor, ph])];
                e.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max);
        errors.push(err);
        spacing.push(grid.spacing()[1]);
    }
    let order = (errors[0] / errors[1]).log2();
    let c = errors[0] / (spacing[0] * spacing[0]);
    ensure(
        (1.8..=2.2).contains(&order) && errors[1] <= c * spacing[1] * spacing[1] * 1.2,
        format!("|G| = {:.3e} -> {:.3e}, order {order:.3}, C = {c:.3}", errors[0], errors[1]),
    )
}

/// Translations with `+-[[1, t], [0, 1]]`, which commute with the parabolic
/// monodromy.
fn random_dualities(seed: u64, count: usize) -> Vec<DualityTransformation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp = SymplecticSpace::standard(1);
    (0..count)
        .map(|_| {
            let shift = rng.gen_range(-1.5..1.5);
            let t = rat(rng.gen_range(-6..=6), rng.gen_range(1..=4));
            let mut lift = QMatrix::from_rows(vec![vec![int(1), t], vec![int(0), int(1)]]);
            if rng.gen_bool(0.5) {
                lift = lift.neg();
            }
            DualityTransformation::new(TargetMap::Translation(vec![shift]), lift, &sp).expect("symplectic lift")
        })
        .collect()
}

fn covariance() -> Check {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for n in [8usize, 16] {
        let mut s = bundled("ufold");
        s.doc.spacetime.as_mut().expect("spacetime").shape = [n; 4];
        let cfg = model::configuration(&s, &Overrides::default()).map_err(|e| e.to_string())?;
        let mut resolution_worst = 0.0f64;
        for f in random_dualities(5, 5) {
            let r = covariance_check(&f, &cfg, 1e-9).map_err(|e| e.to_string())?;
            if r.original.scalar.max < 1e-3 || r.original.em.max < 1e-3 {
                return Err(format!("{n}^4: residuals too small for a meaningful comparison"));
            }
            resolution_worst = resolution_worst.max(r.discrepancy);
        }
        worst = worst.max(resolution_worst);
        lines.push(format!("{n}^4: {resolution_worst:.3e}"));
    }
    ensure(worst <= 1e-9, format!("max scalar/EM norm discrepancy over 5 transformations: {}", lines.join(", ")))
}

fn nontriviality_witness() -> Check {
    let s = bundled("ufold");
    let rep = model::representation(&s).map_err(|e| e.to_string())?;
    let verdict = is_trivializable(&rep);
    let mut flipped = s.clone();
    let m = flipped.doc.monodromy.as_mut().expect("monodromy");
    m.images = vec![vec![vec![Exact::Integer(1), Exact::Integer(0)], vec![Exact::Integer(0), Exact::Integer(1)]]];
    let flipped_verdict = is_trivializable(&model::representation(&flipped).map_err(|e| e.to_string())?);
    let ok = matches!(verdict, Triviality::Nontrivial { generator: 0, .. }) && flipped_verdict.is_trivial();
    ensure(ok, format!("bundled: {}, rho(a) = I: {}", verdict_name(&verdict), verdict_name(&flipped_verdict)))
}

fn verdict_name(t: &Triviality) -> &'static str {
    if t.is_trivial() {
        "Trivial"
    } else {
        "Nontrivial"
    }
}

fn lattice_types() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..100 {
        let n = 1 + i % 3;
        let sp = SymplecticSpace::standard(n);
        let d = random::divisor_chain(&mut rng, n);
        let expected: Vec<String> = d.iter().map(ToString::to_string).collect();
        let basis = random::normal_form_basis(&d);
        let direct: Vec<String> = lattice_type(&basis, &sp).map_err(|e| e.to_string())?.iter().map(ToString::to_string).collect();
        let u = random::unimodular(&mut rng, 2 * n, 12);
        let changed: Vec<String> =
            lattice_type(&(&basis * &u), &sp).map_err(|e| e.to_string())?.iter().map(ToString::to_string).collect();
        if direct != expected || changed != expected {
            return Err(format!("type {direct:?} / {changed:?} for normal form {expected:?}"));
        }
    }
    let mut words = 0;
    for n in 1..=3 {
        let sp = SymplecticSpace::standard(n);
        let d = random::divisor_chain(&mut rng, n);
        let b = random::normal_form_basis(&d).to_rational();
        let b_inv = b.inverse().expect("basis");
        let images: Vec<QMatrix> = (0..2).map(|_| &(&b * &random::gram_preserving(&mut rng, &d, 4)) * &b_inv).collect();
        let lattice = IntegralLattice::new(random::normal_form_basis(&d), &sp).map_err(|e| e.to_string())?;
        let expected: Vec<String> = lattice.type_divisors().iter().map(ToString::to_string).collect();
        let pres = GroupPresentation::free(vec!["a".into(), "b".into()]);
        let rep = MonodromyRep::new(pres, sp.clone(), images, Some(lattice)).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let w = random::word(&mut rng, 2, 6);
            let moved = (&rep.transport(&w).map_err(|e| e.to_string())? * &b).to_integer().ok_or("transport left the lattice")?;
            let got: Vec<String> = lattice_type(&moved, &sp).map_err(|e| e.to_string())?.iter().map(ToString::to_string).collect();
            if got != expected {
                return Err(format!("transported type {got:?} != {expected:?}"));
            }
            words += 1;
        }
    }
    Ok(format!("100 GL(2n, Z) basis changes and {words} transported lattices keep their type"))
}

fn cohomology_oracles() -> Check {
    let torus = TwistedCellComplex::torus(&[QMatrix::identity(2), QMatrix::identity(2)]).map_err(|e| e.to_string())?;
    let ranks: Vec<usize> = (0..3)
        .map(|k| twisted_cohomology(&torus, k, Ring::Real).map(|h| h.rank))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let minus = TwistedCellComplex::circle(&QMatrix::identity(2).neg()).map_err(|e| e.to_string())?;
    let minus_ranks: Vec<usize> = (0..2)
        .map(|k| twisted_cohomology(&minus, k, Ring::Real).map(|h| h.rank))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let h1 = twisted_cohomology(&minus, 1, Ring::Integer).map_err(|e| e.to_string())?;
    let torsion: Vec<String> = h1.torsion.iter().map(ToString::to_string).collect();
    if ranks != [2, 4, 2] || minus_ranks != [0, 0] || torsion != ["2", "2"] || h1.rank != 0 {
        return Err(format!("T^2 {ranks:?}, S^1(-I) {minus_ranks:?} torsion {torsion:?}"));
    }
    let parabolic = QMatrix::from_i64(&[&[1, 1], &[0, 1]]);
    let mut complexes = vec![
        ("T^2 trivial".to_string(), torus),
        ("S^1 -I".to_string(), minus),
        ("S^1 parabolic".to_string(), TwistedCellComplex::circle(&parabolic).map_err(|e| e.to_string())?),
        (
            "cubical T^2 parabolic".to_string(),
            TwistedCellComplex::cubical_torus(&[3, 2], &[parabolic.clone(), QMatrix::identity(2)]).map_err(|e| e.to_string())?,
        ),
    ];
    for s in bundled_scenarios() {
        let Ok(rep) = model::representation(&s) else { continue };
        let (Ok(t), Some(_)) = (model::target(&s, &rep), s.doc.spacetime.as_ref()) else { continue };
        let grid = model::grid(&s, &t, &Overrides::default()).map_err(|e| e.to_string())?;
        complexes.push((s.name().to_string(), TwistedCellComplex::for_grid(&grid, &t).map_err(|e| e.to_string())?));
    }
    for (name, c) in &complexes {
        let weighted = cohomological_euler_characteristic(c).map_err(|e| e.to_string())?;
        if weighted != c.fiber() as i64 * c.euler_characteristic() {
            return Err(format!("{name}: weighted Euler characteristic {weighted} != 2n chi"));
        }
    }
    Ok(format!(
        "T^2 ranks (2, 4, 2); S^1(-I) ranks (0, 0), H^1 torsion (Z/2)^2; Euler identity on {} complexes",
        complexes.len()
    ))
}

fn quantize_verdict(name: &str) -> Result<serde_json::Value, String> {
    let report = run(Command::Quantize, &bundled(name), &Overrides::default(), false, false).map_err(|e| e.to_string())?;
    Ok(report.outcome.results["verdict"].clone())
}

fn dirac_quantization() -> Check {
    let unit = quantize_verdict("ufold")?;
    let half = quantize_verdict("ufold_half")?;
    let residual = half["residual"].as_f64().unwrap_or(f64::NAN);
    ensure(
        unit["kind"] == "Integral" && half["kind"] == "NonIntegral" && (residual - 0.5).abs() <= 1e-6,
        format!("unit charge {}, half charge {} with residual {residual}", unit["kind"], half["kind"]),
    )
}

fn unitary_limit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cfg = random::configuration(&mut rng, [6; 4], 1).map_err(|e| e.to_string())?;
    let t: ScalarTarget = cfg.target().clone();
    let j0 = t.monodromy().space().standard_taming();
    cfg.taming = TamingField::constant(j0, cfg.taming.grid().clone(), &t, 1e-12).map_err(|e| e.to_string())?;
    let ff = fundamental_form(&t, &cfg.taming).map_err(|e| e.to_string())?;
    let theta = ff.max_norm();
    let psi = fundamental_field(&t, &ff).map_err(|e| e.to_string())?;
    let psi_max = cfg
        .taming
        .grid()
        .points()
        .map(|y| psi.psi(&y).map(|p| p.iter().map(|m| m.amax()).fold(0.0, f64::max)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    let nodes = pulled_back_fundamental_field(&psi, &cfg.phi).map_err(|e| e.to_string())?;
    let ctx = cfg.context().map_err(|e| e.to_string())?;
    let pairing = scalar_pairing(&cfg.v, &nodes, &cfg.metric, &ctx).map_err(|e| e.to_string())?;
    let nonzero = pairing.iter().flatten().filter(|v| **v != 0.0).count();
    ensure(
        theta == 0.0 && psi_max == 0.0 && nonzero == 0,
        format!("max |Theta| = {theta}, max |Psi| = {psi_max}, {nonzero} nonzero pairing values at {} nodes", cfg.grid.len()),
    )
}

fn commands_for(s: &Scenario) -> Vec<Command> {
    let mut cmds = vec![Command::Validate, Command::Holonomy, Command::Residuals, Command::Quantize];
    if !s.doc.transformation.is_empty() {
        cmds.push(Command::Duality);
    }
    if s.name() == "ufold" {
        cmds.push(Command::UfoldDemo);
    }
    cmds
}

fn determinism() -> Check {
    let mut runs = 0;
    for s in bundled_scenarios() {
        for cmd in commands_for(&s) {
            let once = run(cmd, &s, &Overrides::default(), false, false).map(|r| r.to_json()).map_err(|e| e.to_string());
            let again = run(cmd, &s, &Overrides::default(), false, false).map(|r| r.to_json()).map_err(|e| e.to_string());
            if once != again {
                return Err(format!("{} {} differs between runs", s.name(), cmd.name()));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} scenario/command pairs produce byte-identical reports"))
}

const CRITERIA: [Criterion; 11] = [
    ("twisted Hodge involution", hodge_involution),
    ("polarization projector", polarization_projector),
    ("vacuum exactness", vacuum_exactness),
    ("Schwarzschild curvature convergence", schwarzschild_convergence),
    ("duality covariance on the U-fold", covariance),
    ("non-trivializability witness", nontriviality_witness),
    ("lattice types", lattice_types),
    ("twisted cohomology oracles", cohomology_oracles),
    ("Dirac quantization", dirac_quantization),
    ("unitary limit", unitary_limit),
    ("report determinism", determinism),
];

fn main() {
    let results: Vec<(Check, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|(_, f)| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (r, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failures = 0;
    for (i, ((name, _), (result, secs))) in CRITERIA.iter().zip(&results).enumerate() {
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} [{name}] {detail} ({secs:.1}s)", i + 1);
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
