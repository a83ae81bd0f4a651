//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use specrep::labelfn::LabelFn;
use specrep::limiting::{LimitingSequence, ZetaRule};
use specrep::measure::BorelSet;
use specrep::nnsm::{
    condition1_check, condition2_check, condition3_check, integration_laws, limit_term_value, positivity_floor,
    random_subset,
};
use specrep::random;
use specrep::spectral::{op_norm, Hermitian};
use specrep::unbounded::{d0_laws, density_witness, random_field, BlockMeasure, GeometricTarget};
use specrep::{BlockModel, ComplexMatrix, VonNeumannAlgebra};
use specrep_harness::faults::{inject, FaultKind, DEFAULT_DELTA};
use specrep_harness::pipelines::{
    family_for, measure_from_generators, test_polys, verify_b, verify_c, verify_d, BOptions, BlockOptions,
};
use specrep_harness::rep::CharacterIndex;
use specrep_harness::scenario::{gen_scenario, tensor_model, Body, Caps, Kind};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frob_norm() / (1.0 + a.frob_norm())
}

fn commutative_round_trip() -> Outcome {
    let start = Instant::now();
    let caps = Caps {
        h: 4,
        k: 16,
        points: 6,
        blocks: 64,
    };
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let s = gen_scenario(Kind::A, seed, &caps).map_err(|e| e.to_string())?;
        let Body::A(a) = &s.body else { unreachable!() };
        ensure(a.w.ambient_dim() <= 4 && a.generators.len() <= 3 && a.characters.len() <= 6, || {
            format!("seed {seed} exceeds the scenario bounds")
        })?;
        let k = a.w.ambient_dim();
        let mut index = CharacterIndex::default();
        let e = measure_from_generators(&a.generators, k, &mut index).map_err(|e| e.to_string())?;
        let mut rng = random::rng(seed);
        for b in test_polys(a.generators.len(), 10, &mut rng) {
            let lhs = b.eval_matrices(&a.generators).map_err(|e| e.to_string())?;
            let mut rhs = ComplexMatrix::zeros(k, k);
            for (x, p) in e.atoms() {
                rhs = &rhs + &p.matrix().scale(b.eval_scalar(&index.points()[*x]));
            }
            worst = worst.max(rel(&lhs, &rhs));
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-8, || format!("representation residual {worst:e} > 1e-8"))?;
    ensure(elapsed <= Duration::from_secs(30), || format!("runtime {elapsed:?} > 30s"))?;
    Ok(format!("200 scenarios, max residual {worst:.2e}, {:.2}s", elapsed.as_secs_f64()))
}

fn tensor_round_trip() -> Outcome {
    let start = Instant::now();
    let opts = BOptions::default();
    let (mut recon, mut repr) = (0.0f64, 0.0f64);
    for seed in 0..100 {
        let s = gen_scenario(Kind::B, seed, &Caps::default()).map_err(|e| e.to_string())?;
        let Body::B(b) = &s.body else { unreachable!() };
        let out = verify_b(&b.rep, Some(&b.oracle), seed, &opts);
        let m = out.measure.ok_or_else(|| format!("seed {seed}: no measure assembled"))?;
        recon = recon.max(m.distance(&b.oracle));
        let r = out.checks.get("representation").ok_or("missing representation check")?;
        repr = repr.max(r.residual);
        ensure(out.checks.pass(), || {
            format!("seed {seed}: {:?}", out.checks.failures().map(|c| &c.name).collect::<Vec<_>>())
        })?;
    }
    let elapsed = start.elapsed();
    ensure(recon <= 1e-7, || format!("reconstruction {recon:e} > 1e-7"))?;
    ensure(repr <= 1e-8, || format!("representation {repr:e} > 1e-8"))?;
    ensure(elapsed <= Duration::from_secs(120), || format!("runtime {elapsed:?} > 120s"))?;
    Ok(format!(
        "100 scenarios x {} fields, reconstruction {recon:.2e}, representation {repr:.2e}, {:.2}s",
        opts.rep_samples,
        elapsed.as_secs_f64()
    ))
}

fn characterization_conditions() -> Outcome {
    let (mut c1, mut k_dev) = (0.0f64, 0.0f64);
    let (mut samples, mut fitted, mut exact) = (0usize, 0usize, 0usize);
    let (mut min_rate, mut worst_value) = (f64::INFINITY, 0.0f64);
    for seed in 0..100 {
        let s = gen_scenario(Kind::B, seed, &Caps::default()).map_err(|e| e.to_string())?;
        let Body::B(b) = &s.body else { unreachable!() };
        let family = family_for(b.rep.w1(), 10, seed).map_err(|e| e.to_string())?;
        let mf = b.oracle.decompose(&family).map_err(|e| e.to_string())?;
        for c in condition1_check(&mf, 10, seed).map_err(|e| e.to_string())? {
            c1 = c1.max(c.residual);
        }
        let c2 = condition2_check(&mf, &[BorelSet::all()]).map_err(|e| e.to_string())?;
        k_dev = k_dev.max((c2.k_max() - 1.0).abs());

        let labels: Vec<usize> = mf.labels().iter().copied().collect();
        let ext = mf.extender().map_err(|e| e.to_string())?;
        let mut rng = random::rng(seed ^ 0xC3);
        let draws = if b.rep.w1().is_abelian() { 1 } else { 6 };
        for _ in 0..draws {
            let p = rng.random_range(0..family.len());
            let q = rng.random_range(0..family.len());
            let d1 = random_subset(&labels, &mut rng);
            let d2 = random_subset(&labels, &mut rng);
            let report = condition3_check(&mf, &ext, p, q, &d1, &d2, 64).map_err(|e| e.to_string())?;
            samples += 1;
            let value = report.last();
            worst_value = worst_value.max(value * 64.0);
            ensure(value <= 10.0 / 64.0, || format!("seed {seed}: residual {value:e} at 64 exceeds 10/64"))?;
            match report.fitted_rate() {
                Some(rate) => {
                    fitted += 1;
                    min_rate = min_rate.min(rate);
                    ensure(rate >= 0.8, || format!("seed {seed}: fitted rate {rate:.3} < 0.8"))?;
                }
                None => exact += 1,
            }
        }
    }
    ensure(c1 <= 1e-7, || format!("condition (1) residual {c1:e}"))?;
    ensure(k_dev <= 1e-8, || format!("witnessed bound deviates from 1 by {k_dev:e}"))?;
    ensure(fitted >= 50, || format!("only {fitted} samples with a fitted rate"))?;
    Ok(format!(
        "100 families, condition1 {c1:.2e}, |k-1| {k_dev:.2e}, {samples} decay samples ({fitted} fitted, {exact} exact), min rate {min_rate:.3}, max 64*r {worst_value:.3}"
    ))
}

fn limiting_sequences() -> Outcome {
    let mut rng = random::rng(0x11);
    let (mut worst_ratio, mut worst_lim, mut worst_zeta) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..500 {
        let n = rng.random_range(1..=8);
        let a = random::hermitian::<f64>(&mut rng, n);
        let h = Hermitian::new(a.clone()).map_err(|e| e.to_string())?;
        let right = LimitingSequence::new(&h, 64, ZetaRule::RightEndpoint).map_err(|e| e.to_string())?;
        let mid = LimitingSequence::new(&h, 64, ZetaRule::Midpoint).map_err(|e| e.to_string())?;
        for ell in 1..=64 {
            let (r, m) = (right.term(ell).unwrap(), mid.term(ell).unwrap());
            let err = op_norm(&(&a - &r.sum(n))).map_err(|e| e.to_string())?;
            worst_ratio = worst_ratio.max(err * ell as f64);
            ensure(err <= 1.0 / ell as f64 + 1e-12, || format!("trial {trial}: ‖A − S_{ell}‖ = {err:e}"))?;
            let gap = op_norm(&(&r.sum(n) - &m.sum(n))).map_err(|e| e.to_string())?;
            let mesh = r.mesh().max(m.mesh());
            worst_zeta = worst_zeta.max(gap / mesh);
            ensure(gap <= 2.0 * mesh, || format!("trial {trial}: endpoint rules differ by {gap:e} at {ell}"))?;
        }

        // M(Δ)(A) through the limit against the linear extension
        let mult = rng.random_range(1..=2);
        let u = random::unitary::<f64>(&mut rng, n * mult);
        let groups: Vec<Vec<usize>> = (0..mult).map(|i| vec![i]).collect();
        let m = tensor_model(VonNeumannAlgebra::full(n), &u, &groups, mult).map_err(|e| e.to_string())?;
        let set = BorelSet::singleton(0);
        let direct = m.evaluate(&set, &a).map_err(|e| e.to_string())?;
        let term = right.term_at(200_000).map_err(|e| e.to_string())?;
        let limit = limit_term_value(&m, &term, &set).map_err(|e| e.to_string())?;
        let d = rel(&direct, &limit);
        worst_lim = worst_lim.max(d);
        ensure(d <= 1e-5, || format!("trial {trial}: limit disagrees by {d:e}"))?;
    }
    Ok(format!(
        "500 operators, max ℓ‖A−S_ℓ‖ {worst_ratio:.3}, limit vs extension {worst_lim:.2e}, max gap/mesh {worst_zeta:.3}"
    ))
}

fn integration_law_suite() -> Outcome {
    let mut worst = [0.0f64; 5];
    let mut floor = f64::INFINITY;
    let mut triples = 0;
    let mut seed = 0;
    while triples < 1000 {
        let s = gen_scenario(Kind::B, seed, &Caps::default()).map_err(|e| e.to_string())?;
        seed += 1;
        let Body::B(b) = &s.body else { unreachable!() };
        let m = &b.oracle;
        let w1 = m.w1().clone();
        let labels: Vec<usize> = m.labels().collect();
        let mut rng = random::rng(seed ^ 0x1A55);
        for _ in 0..10 {
            let f = random_field(&w1, rng.random_range(1..=3), &mut rng);
            let mut g = random_field(&w1, rng.random_range(1..=2), &mut rng);
            if rng.random_bool(0.3) {
                g.terms.push((LabelFn::indicator(random_subset(&labels, &mut rng)), w1.random_element(&mut rng)));
            }
            let lambda = random::complex_normal(&mut rng);
            let a = w1.random_element(&mut rng);
            let set = random_subset(&labels, &mut rng);
            let laws = integration_laws(m, &f, &g, lambda, &a, &set).map_err(|e| e.to_string())?;
            for (w, l) in worst.iter_mut().zip(laws) {
                *w = w.max(l);
            }
            let x = w1.random_element(&mut rng);
            let pos = &x.adjoint() * &x;
            let fl = positivity_floor(m, &pos).map_err(|e| e.to_string())?;
            floor = floor.min(fl / (1.0 + pos.frob_norm()));
            triples += 1;
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    ensure(max <= 1e-8, || format!("law residuals {worst:?}"))?;
    ensure(floor >= -1e-9, || format!("positivity violation {floor:e}"))?;
    Ok(format!(
        "{triples} triples, law residuals [{}], min eigenvalue {floor:.2e}",
        worst.iter().map(|w| format!("{w:.1e}")).collect::<Vec<_>>().join(", ")
    ))
}

fn domain_laws() -> Outcome {
    let mut worst = [0.0f64; 3];
    let mut tuples = 0;
    let mut seed = 0;
    while tuples < 500 {
        let s = gen_scenario(Kind::D, seed, &Caps::default()).map_err(|e| e.to_string())?;
        seed += 1;
        let Body::Block(model) = &s.body else { unreachable!() };
        let m = BlockMeasure::canonical(model.w().clone(), model.dims().clone());
        let mut rng = random::rng(seed ^ 0xD0);
        for _ in 0..10 {
            let f = random_field(model.w(), rng.random_range(1..=3), &mut rng);
            let g = random_field(model.w(), rng.random_range(1..=3), &mut rng);
            let vec = |rng: &mut random::Rng64| {
                let support: Vec<usize> = (0..rng.random_range(1..=6)).map(|_| rng.random_range(0..model.horizon())).collect();
                model.random_vector(support, rng)
            };
            let x = vec(&mut rng);
            let y = vec(&mut rng);
            let alpha = random::complex_normal(&mut rng);
            let beta = random::complex_normal(&mut rng);
            let laws = d0_laws(&m, &f, &g, alpha, beta, &x, &y).map_err(|e| e.to_string())?;
            for (w, l) in worst.iter_mut().zip(laws) {
                *w = w.max(l);
            }
            tuples += 1;
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    ensure(max <= 1e-9, || format!("law residuals {worst:?}"))?;

    let mut witnesses = 0;
    for seed in 0..10u64 {
        let mut rng = random::rng(seed);
        let ratio = random::uniform(&mut rng, 0.2, 0.8);
        let dims = specrep::unbounded::BlockDims {
            prefix: vec![],
            repeat: vec![1, 2, 3],
        };
        let target = GeometricTarget::<f64>::new(1.0, ratio, dims, 1, seed);
        for exp in 1..=10 {
            let eps = 10f64.powi(-exp);
            let w = density_witness(&target, eps).map_err(|e| e.to_string())?;
            ensure(w.deficit <= eps, || format!("seed {seed}: deficit {:e} > {eps:e}", w.deficit))?;
            witnesses += 1;
        }
    }
    Ok(format!(
        "{tuples} tuples, residuals [{:.1e}, {:.1e}, {:.1e}], {witnesses} density witnesses down to 1e-10",
        worst[0], worst[1], worst[2]
    ))
}

fn unbounded_pipelines() -> Outcome {
    let opts = BlockOptions::default();
    let mut worst = 0.0f64;
    let canonical = BlockModel::number_operator(64);
    let mut reports = vec![("number-operator".to_string(), verify_c(&canonical, 0, &opts))];
    reports.push(("number-operator-d".to_string(), verify_d(&canonical, 0, &opts)));
    for seed in 0..50 {
        for kind in [Kind::Cprime, Kind::D] {
            let s = gen_scenario(kind, seed, &Caps::default()).map_err(|e| e.to_string())?;
            let Body::Block(model) = &s.body else { unreachable!() };
            let checks = match kind {
                Kind::D => verify_d(model, seed, &opts),
                _ => verify_c(model, seed, &opts),
            };
            reports.push((s.id, checks));
        }
    }
    for (id, checks) in &reports {
        ensure(checks.pass(), || {
            format!("{id}: {:?}", checks.failures().map(|c| &c.name).collect::<Vec<_>>())
        })?;
        worst = worst.max(checks.get("representation").map_or(f64::INFINITY, |c| c.residual));
    }
    ensure(worst <= 1e-12, || format!("representation residual {worst:e}"))?;

    let mut detected = 0;
    for kind in FaultKind::ALL {
        for seed in 0..20 {
            let o = inject(kind, seed, DEFAULT_DELTA).map_err(|e| e.to_string())?;
            ensure(o.detected(), || format!("{kind} seed {seed} undetected"))?;
            detected += 1;
        }
    }
    Ok(format!(
        "{} models pass, representation {worst:.2e}, faults detected {detected}/80",
        reports.len()
    ))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_specrep");
    let run = |jobs: &str| {
        Command::new(bin)
            .args(["report", "--kinds", "a,b,c,d", "--seed", "900", "--count", "8", "--jobs", jobs])
            .env_remove("SPECREP_SEED")
            .output()
            .map_err(|e| e.to_string())
    };
    let first = run("4")?;
    let second = run("4")?;
    let serial = run("1")?;
    ensure(first.status.success(), || String::from_utf8_lossy(&first.stderr).into_owned())?;
    ensure(first.stdout == second.stdout, || "repeated runs differ".into())?;
    ensure(first.stdout == serial.stdout, || "parallel and serial runs differ".into())?;
    Ok(format!("32 reports, {} identical bytes over 3 runs", first.stdout.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("commutative-round-trip", commutative_round_trip),
        ("tensor-round-trip", tensor_round_trip),
        ("characterization-conditions", characterization_conditions),
        ("limiting-sequences", limiting_sequences),
        ("integration-laws", integration_law_suite),
        ("domain-laws", domain_laws),
        ("unbounded-pipelines", unbounded_pipelines),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{:.2}s]", i + 1, start.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{:.2}s]", i + 1, start.elapsed().as_secs_f64());
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
