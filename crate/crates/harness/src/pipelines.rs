//! The four verification pipelines. Each stage records its residuals and the
//! pipeline carries on past failures.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::Rng;
use specrep::algebra::{enumerate_projections_abelian, sample_projections};
use specrep::joint::joint_diagonalize;
use specrep::labelfn::C64;
use specrep::measure::{BorelSet, DiscreteSpace};
use specrep::nnsm::{
    assemble_from_family, assemble_with, check_nnsm, condition1_check, condition2_check, condition3_check, integrate,
    random_subset, MeasureFamily, OperatorField,
};
use specrep::random::{self, Rng64};
use specrep::report::{Check, CheckList};
use specrep::spectral::op_norm;
use specrep::star::StarPoly;
use specrep::unbounded::{
    compact_support_check, core_stabilization, d_alpha_check, density_witness, domain_inclusion_residual,
    functional_bound_residual, i_m_apply, representation_integrability, spectral_integral_apply,
    truncated_integral_apply, BlockMeasure, DAlphaVerdict, GeometricTarget, RepField,
};
use specrep::{BlockModel, ComplexMatrix, ProjectionFamily, DomainVector, NonNegSpectralMeasure, Real, SpectralMeasure, VonNeumannAlgebra};

use crate::error::HarnessResult;
use crate::rep::{CharacterIndex, IntegralRep};
use crate::report::VerificationReport;
use crate::scenario::{gen_scenario, Body, Caps, Kind, Scenario};

/// Representation residuals on finitely supported vectors count as exact
/// below this relative level.
pub const EXACT: f64 = 1e-12;

fn tol() -> specrep::Tolerances<f64> {
    f64::tolerances()
}

fn record<T>(checks: &mut CheckList, name: &str, r: specrep::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            checks.push(Check::failed(name, e.to_string()));
            None
        }
    }
}

/// Test *-polynomials: the unit, generators, adjoints, pairwise products
/// and `extra` random polynomials of degree at most 3.
pub fn test_polys(r: usize, extra: usize, rng: &mut Rng64) -> Vec<StarPoly<f64>> {
    let mut out = vec![StarPoly::one(r)];
    for i in 0..r {
        out.push(StarPoly::var(r, i));
        out.push(StarPoly::var_star(r, i));
        for j in i..r {
            out.push(StarPoly::var(r, i).mul(&StarPoly::var(r, j)));
            out.push(StarPoly::var(r, i).mul(&StarPoly::var_star(r, j)));
        }
    }
    out.extend((0..extra).map(|_| StarPoly::random(r, 3, 4, rng)));
    out
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frob_norm() / (1.0 + a.frob_norm())
}

/// Joint eigenprojections of the images, labelled by character. With a unit
/// image `ρ(1)` first in the list, atoms where `χ(1) ≈ 0` are dropped.
/// Returns the atoms and the distance of the `χ(1)` values from `{0, 1}`.
pub fn atoms_from_images(
    images: &[ComplexMatrix],
    unit: Option<&ComplexMatrix>,
    k: usize,
    index: &mut CharacterIndex,
) -> specrep::Result<(BTreeMap<usize, ComplexMatrix>, f64)> {
    let mut normals: Vec<ComplexMatrix> = unit.into_iter().cloned().collect();
    normals.extend(images.iter().cloned());
    let atlas = joint_diagonalize(&normals, k)?;
    let offset = usize::from(unit.is_some());
    let mut atoms: BTreeMap<usize, ComplexMatrix> = BTreeMap::new();
    let mut unit_residual = 0.0f64;
    for point in atlas.points {
        if offset == 1 {
            let u = point.values[0];
            unit_residual = unit_residual.max(u.norm().min((u - 1.0).norm()));
            if (u - 1.0).norm() > 0.5 {
                continue;
            }
        }
        let label = index.label(&point.values[offset..]);
        let p = point.projection.into_matrix();
        let entry = atoms.entry(label).or_insert_with(|| ComplexMatrix::zeros(k, k));
        *entry = &*entry + &p;
    }
    Ok((atoms, unit_residual))
}

/// The spectral measure `E` of commuting normal generators, unvalidated,
/// with points labelled through `index`.
pub fn measure_from_generators(
    generators: &[ComplexMatrix],
    k: usize,
    index: &mut CharacterIndex,
) -> specrep::Result<SpectralMeasure> {
    let (atoms, _) = atoms_from_images(generators, None, k, index)?;
    SpectralMeasure::unchecked(DiscreteSpace::range(index.len()), k, atoms, Some(ComplexMatrix::identity(k)))
}

fn generator_prechecks(checks: &mut CheckList, gens: &[ComplexMatrix]) {
    let normal = gens
        .iter()
        .map(|g| g.normality_residual() / (1.0 + g.frob_norm().powi(2)))
        .fold(0.0, f64::max);
    let mut commute = 0.0f64;
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            let s = 1.0 + a.frob_norm() * b.frob_norm();
            commute = commute.max(a.commutator(b).frob_norm() / s);
            commute = commute.max(a.commutator(&b.adjoint()).frob_norm() / s);
        }
    }
    checks.push(Check::new("generators-normal", normal, tol().alg));
    checks.push(Check::new("generators-commute", commute, tol().alg));
}

/// Commutative case: `ρ` given by commuting normal generator images in `𝒲`.
pub fn verify_a(
    w: &VonNeumannAlgebra,
    generators: &[ComplexMatrix],
    index: &mut CharacterIndex,
    oracle: Option<&SpectralMeasure>,
    seed: u64,
) -> CheckList {
    let mut checks = CheckList::new();
    let k = w.ambient_dim();
    let r = generators.len();
    generator_prechecks(&mut checks, generators);
    let Some(e) = record(&mut checks, "spectral-measure", measure_from_generators(generators, k, index)) else {
        return checks;
    };
    for c in e.validate() {
        checks.push(Check { name: format!("measure-{}", c.name), ..c });
    }

    let mut rng = random::rng(seed);
    let mut rep_res = Vec::new();
    for b in test_polys(r, 10, &mut rng) {
        let lhs = match b.eval_matrices(generators) {
            Ok(m) => m,
            Err(err) => {
                checks.push(Check::failed("representation", err.to_string()));
                return checks;
            }
        };
        let rhs = e
            .atoms()
            .iter()
            .fold(ComplexMatrix::zeros(k, k), |acc, (x, p)| &acc + &p.matrix().scale(b.eval_scalar(&index.points()[*x])));
        rep_res.push(rel(&lhs, &rhs));
    }
    checks.push(CheckList::max_check("representation", rep_res, tol().alg));
    checks.push(CheckList::max_check(
        "algebra-membership",
        e.atoms().values().map(|p| w.membership_residual(p.matrix())),
        tol().alg,
    ));

    // an independent reconstruction from the reversed generator order
    let reversed: Vec<ComplexMatrix> = generators.iter().rev().cloned().collect();
    let uniqueness = joint_diagonalize(&reversed, k).map(|atlas| {
        let mut worst = 0.0f64;
        let mut seen = BTreeMap::new();
        for point in atlas.points {
            let values: Vec<C64> = point.values.iter().rev().copied().collect();
            match index.find(&values) {
                Some(x) => {
                    let entry = seen.entry(x).or_insert_with(|| ComplexMatrix::zeros(k, k));
                    *entry = &*entry + point.projection.matrix();
                }
                None => worst = f64::INFINITY,
            }
        }
        for x in e.atoms().keys().chain(seen.keys()) {
            let a = e.atom(*x);
            let b = seen.get(x).cloned().unwrap_or_else(|| ComplexMatrix::zeros(k, k));
            worst = worst.max(rel(&a, &b));
        }
        worst
    });
    if let Some(u) = record(&mut checks, "uniqueness", uniqueness) {
        checks.push(Check::new("uniqueness", u, tol().ext));
    }
    if let Some(o) = oracle {
        let labels: BTreeSet<usize> = e.atoms().keys().chain(o.atoms().keys()).copied().collect();
        checks.push(CheckList::max_check(
            "oracle-atoms",
            labels.iter().map(|x| rel(&o.atom(*x), &e.atom(*x))),
            tol().ext,
        ));
    }
    checks.push(Check::new("compact-support", 0.0, 0.0).flag("finite character set"));
    checks
}

#[derive(Debug, Clone, Copy)]
pub struct BOptions {
    pub family_size: usize,
    pub set_pairs: usize,
    pub relation_trials: usize,
    pub c3_samples: usize,
    pub ell_max: usize,
    pub rep_samples: usize,
    pub bound_samples: usize,
}

impl Default for BOptions {
    fn default() -> Self {
        Self {
            family_size: 10,
            set_pairs: 20,
            relation_trials: 10,
            c3_samples: 2,
            ell_max: 64,
            rep_samples: 20,
            bound_samples: 10,
        }
    }
}

/// The projection family used for `𝒲₁`: all projections when abelian,
/// a spanning sample otherwise.
pub fn family_for(w: &VonNeumannAlgebra, size: usize, seed: u64) -> specrep::Result<ProjectionFamily> {
    if w.is_abelian() {
        enumerate_projections_abelian(w)
    } else {
        sample_projections(w, size, seed)
    }
}

fn identity_index(family: &ProjectionFamily) -> Option<usize> {
    let n = family.algebra.ambient_dim();
    let id = ComplexMatrix::identity(n);
    family.members.iter().position(|p| (p.matrix() - &id).frob_norm() < 1e-9)
}

/// Result of the representation-to-measure pipeline.
pub struct BOutcome {
    pub checks: CheckList,
    pub measure: Option<NonNegSpectralMeasure>,
    pub family: Option<MeasureFamily<f64>>,
}

/// Non-commutative case `ρ: 𝔅 ⊗ 𝒲₁ → B(𝒦)`.
pub fn verify_b(rep: &IntegralRep, oracle: Option<&NonNegSpectralMeasure>, seed: u64, opts: &BOptions) -> BOutcome {
    let mut checks = CheckList::new();
    let w1 = rep.w1().clone();
    let k = rep.target_dim();
    let r = rep.nvars();
    let mut out = BOutcome {
        checks: CheckList::new(),
        measure: None,
        family: None,
    };
    let Some(family) = record(&mut checks, "projection-family", family_for(&w1, opts.family_size, seed)) else {
        out.checks = checks;
        return out;
    };
    if !w1.is_abelian() {
        checks.push(Check::new("family-spans", if family.spans_algebra { 0.0 } else { 1.0 }, 0.0).flag("sampled projections"));
    }
    let mut index = match oracle {
        Some(_) => CharacterIndex::new(rep.characters().to_vec()),
        None => CharacterIndex::default(),
    };

    // stages 1-2: ρ_P and its spectral measure E_P
    let mut raw: Vec<(BTreeMap<usize, ComplexMatrix>, ComplexMatrix)> = Vec::with_capacity(family.len());
    let mut unit_res = 0.0f64;
    let mut rho_p_normal = 0.0f64;
    let mut failed = false;
    for p in &family.members {
        let built = (|| -> specrep::Result<_> {
            let unit = rep.apply(&StarPoly::one(r), p.matrix())?;
            let gens = (0..r)
                .map(|i| rep.apply(&StarPoly::var(r, i), p.matrix()))
                .collect::<specrep::Result<Vec<_>>>()?;
            Ok((unit, gens))
        })();
        let Some((unit, gens)) = record(&mut checks, "rho-p", built) else {
            failed = true;
            break;
        };
        let mut all = vec![unit.clone()];
        all.extend(gens.iter().cloned());
        let mut local = CheckList::new();
        generator_prechecks(&mut local, &all);
        rho_p_normal = rho_p_normal.max(local.checks.iter().map(|c| c.residual).fold(0.0, f64::max));
        match atoms_from_images(&gens, Some(&unit), k, &mut index) {
            Ok((atoms, u)) => {
                unit_res = unit_res.max(u);
                raw.push((atoms, unit));
            }
            Err(e) => {
                checks.push(Check::failed("e-p-construction", e.to_string()));
                failed = true;
                break;
            }
        }
    }
    checks.push(Check::new("rho-p-commuting-normal", rho_p_normal, tol().alg));
    if failed {
        out.checks = checks;
        return out;
    }
    checks.push(Check::new("character-unit", unit_res, tol().ext));
    let space = DiscreteSpace::range(index.len());
    let mut measures = Vec::with_capacity(raw.len());
    let mut validity: BTreeMap<String, f64> = BTreeMap::new();
    for (atoms, unit) in raw {
        match SpectralMeasure::unchecked(space.clone(), k, atoms, Some(unit)) {
            Ok(e) => {
                for c in e.validate() {
                    let slot = validity.entry(c.name).or_insert(0.0);
                    *slot = slot.max(c.residual);
                }
                measures.push(e);
            }
            Err(err) => {
                checks.push(Check::failed("e-p-measures", err.to_string()));
                out.checks = checks;
                return out;
            }
        }
    }
    for (name, residual) in validity {
        checks.push(Check::new(format!("e-p-{name}"), residual, tol().proj));
    }

    // stage 3: supp(E_P) ⊆ supp(E_id)
    if let Some(id) = identity_index(&family) {
        let support_id = measures[id].support();
        let violations = measures.iter().filter(|e| !e.support().is_subset(&support_id)).count();
        checks.push(Check::new("support-containment", violations as f64, 0.0));
    }

    let Some(mf) = record(&mut checks, "measure-family", MeasureFamily::new(family.clone(), measures)) else {
        out.checks = checks;
        return out;
    };

    // characterization conditions on the family
    if let Some(c1) = record(&mut checks, "condition1", condition1_check(&mf, opts.relation_trials, seed)) {
        checks.extend(c1);
    }
    let labels: Vec<usize> = mf.labels().iter().copied().collect();
    let mut set_rng = random::rng(seed ^ 0x5E75);
    let mut sets: Vec<BorelSet> = labels.iter().map(|x| BorelSet::singleton(*x)).collect();
    sets.push(BorelSet::all());
    sets.extend((0..3).map(|_| random_subset(&labels, &mut set_rng)));
    if let Some(c2) = record(&mut checks, "condition2", condition2_check(&mf, &sets)) {
        checks.push(c2.check(tol().proj).flag(format!("k_max = {:.12}", c2.k_max())));
    }
    if let Some(ext) = record(&mut checks, "condition3", mf.extender()) {
        let mut values = Vec::new();
        let mut deficits = Vec::new();
        let mut rates = Vec::new();
        for _ in 0..opts.c3_samples {
            let p = set_rng.random_range(0..family.len());
            let q = set_rng.random_range(0..family.len());
            let d1 = random_subset(&labels, &mut set_rng);
            let d2 = random_subset(&labels, &mut set_rng);
            if let Some(report) = record(
                &mut checks,
                "condition3",
                condition3_check(&mf, &ext, p, q, &d1, &d2, opts.ell_max),
            ) {
                let cs = report.checks(10.0, 0.8);
                values.push(cs[0].residual);
                deficits.push(cs[1].residual);
                rates.extend(report.fitted_rate());
            }
        }
        let mut rate = CheckList::max_check("condition3-rate", deficits, 0.0);
        let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
        rate = if rates.is_empty() {
            rate.flag("exact: residual vanishes beyond rounding")
        } else {
            rate.flag(format!("min fitted rate {min_rate:.3}"))
        };
        checks.push(CheckList::max_check("condition3-value", values, 10.0).flag(format!("ell = {}", opts.ell_max)));
        checks.push(rate);
    }

    // stage 4: assemble M and its uniqueness
    let Some(m) = record(&mut checks, "assembly", assemble_from_family(&mf)) else {
        out.checks = checks;
        out.family = Some(mf);
        return out;
    };
    if let Some(other) = record(&mut checks, "uniqueness", assemble_with(&mf, true)) {
        checks.push(Check::new("uniqueness", other.distance(&m), tol().ext));
    }
    if let Some(o) = oracle {
        checks.push(Check::new("oracle-reconstruction", m.distance(o), tol().ext));
    }

    // stage 5: normalization and the definition itself
    checks.push(Check::new("normalization", m.normalization_residual(), tol().recon));
    if let Some(nn) = record(&mut checks, "nnsm", check_nnsm(&m, &family, opts.set_pairs, seed)) {
        for c in nn {
            checks.push(Check { name: format!("nnsm-{}", c.name), ..c });
        }
    }

    // stage 6: ρ(F) = ∫ f_F dM
    let mut rng = random::rng(seed ^ 0xF1E1D);
    let mut rep_res = Vec::new();
    for _ in 0..opts.rep_samples {
        let terms: Vec<(StarPoly<f64>, ComplexMatrix)> = (0..rng.random_range(1..=3))
            .map(|_| (StarPoly::random(r, 3, 3, &mut rng), w1.random_element(&mut rng)))
            .collect();
        let sample = (|| -> specrep::Result<f64> {
            let mut lhs = ComplexMatrix::zeros(k, k);
            for (b, a) in &terms {
                lhs = &lhs + &rep.apply(b, a)?;
            }
            let field = OperatorField {
                terms: terms.iter().map(|(b, a)| (index.labelfn(b), a.clone())).collect(),
            };
            let rhs = integrate(&m, &field, &BorelSet::all())?;
            Ok(rel(&lhs, &rhs))
        })();
        if let Some(v) = record(&mut checks, "representation", sample) {
            rep_res.push(v);
        }
    }
    checks.push(CheckList::max_check("representation", rep_res, tol().ext));

    // stage 7: ‖ρ_b(A)‖ ≤ ‖ρ(b ⊗ id)‖ ‖A‖
    let id = ComplexMatrix::identity(w1.ambient_dim());
    let mut bound_res = Vec::new();
    for _ in 0..opts.bound_samples {
        let b = StarPoly::random(r, 3, 3, &mut rng);
        let a = w1.random_element(&mut rng);
        let sample = (|| -> specrep::Result<f64> {
            let lhs = op_norm(&rep.apply(&b, &a)?)?;
            let rhs = op_norm(&rep.apply(&b, &id)?)? * op_norm(&a)?;
            Ok((lhs - rhs) / (1.0 + rhs))
        })();
        if let Some(v) = record(&mut checks, "rho-b-bounded", sample) {
            bound_res.push(v);
        }
    }
    checks.push(CheckList::max_check("rho-b-bounded", bound_res, tol().recon));

    out.checks = checks;
    out.measure = Some(m);
    out.family = Some(mf);
    out
}

#[derive(Debug, Clone, Copy)]
pub struct BlockOptions {
    pub vectors: usize,
    pub max_support: usize,
    pub extra_polys: usize,
    pub probes: usize,
    pub family_size: usize,
}

impl Default for BlockOptions {
    fn default() -> Self {
        Self {
            vectors: 8,
            max_support: 6,
            extra_polys: 6,
            probes: 20,
            family_size: 6,
        }
    }
}

fn test_vectors(model: &BlockModel, rng: &mut Rng64, opts: &BlockOptions) -> Vec<DomainVector> {
    let horizon = model.horizon();
    (0..opts.vectors)
        .map(|_| {
            let size = rng.random_range(1..=opts.max_support.min(horizon).max(1));
            let support: BTreeSet<usize> = (0..size).map(|_| rng.random_range(0..horizon)).collect();
            model.random_vector(support, rng)
        })
        .collect()
}

fn density_checks(checks: &mut CheckList, model: &BlockModel, rng: &mut Rng64) {
    let ratio = random::uniform(rng, 0.2, 0.5);
    let target = GeometricTarget::new(1.0, ratio, model.dims().clone(), model.w().ambient_dim(), rng.random());
    let mut deficit = Vec::new();
    let mut uncertified = 0usize;
    let mut horizon_ok = true;
    for eps in [1e-2, 1e-6, 1e-10] {
        match density_witness(&target, eps) {
            Ok(w) => {
                deficit.push(w.deficit / eps);
                if w.horizon > model.horizon() {
                    horizon_ok = false;
                    continue;
                }
                match d_alpha_check(&w.vector, model, &w.k, 0, 0) {
                    Ok(r) if r.verdict == DAlphaVerdict::Certified => {}
                    _ => uncertified += 1,
                }
            }
            Err(e) => checks.push(Check::failed("density", e.to_string())),
        }
    }
    let mut c = CheckList::max_check("density", deficit, 1.0).flag("countable-discrete: sigma-compact and regular branches coincide");
    if !horizon_ok {
        c = Check::failed("density", "witness horizon exceeds the model horizon");
    }
    checks.push(c);
    checks.push(Check::new("density-d-alpha", uncertified as f64, 0.0));
}

fn d_alpha_and_support(checks: &mut CheckList, model: &BlockModel, xs: &[DomainVector], opts: &BlockOptions, seed: u64) {
    let mut not_certified = 0usize;
    let mut probe = Vec::new();
    let mut outside = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let k = x.support();
        match d_alpha_check(x, model, &k, opts.probes, seed.wrapping_add(i as u64)) {
            Ok(r) => {
                if r.verdict != DAlphaVerdict::Certified {
                    not_certified += 1;
                }
                probe.push(r.worst());
                outside.push(compact_support_check(x, &k).residual);
            }
            Err(e) => checks.push(Check::failed("d-alpha", e.to_string())),
        }
    }
    checks.push(Check::new("d-alpha-certified", not_certified as f64, 0.0));
    checks.push(CheckList::max_check("d-alpha-probes", probe, tol().recon).flag("reading: b ranges over the algebra, |f_b| as modulus"));
    checks.push(CheckList::max_check("compact-support", outside, 0.0));
}

/// Unbounded commutative case on a block model.
pub fn verify_c(model: &BlockModel, seed: u64, opts: &BlockOptions) -> CheckList {
    let mut checks = CheckList::new();
    let horizon = model.horizon();
    let id = ComplexMatrix::identity(model.w().ambient_dim());
    checks.push(representation_integrability(model, &id, horizon).check("integrability"));
    let mut rng = random::rng(seed);
    density_checks(&mut checks, model, &mut rng);

    let r = model.generators().len();
    let xs = test_vectors(model, &mut rng, opts);
    let polys = test_polys(r, opts.extra_polys, &mut rng);
    let mut rep_res = Vec::new();
    for x in &xs {
        for b in &polys {
            let sample = model
                .rho_apply(&RepField::single(b.clone(), id.clone()), x)
                .map(|lhs| {
                    let rhs = spectral_integral_apply(&model.labelfn_of(b), x);
                    lhs.dist(&rhs) / (1.0 + lhs.norm())
                });
            if let Some(v) = record(&mut checks, "representation", sample) {
                rep_res.push(v);
            }
        }
    }
    checks.push(CheckList::max_check("representation", rep_res, EXACT));

    let mut core = Vec::new();
    for x in &xs {
        for f in model.generators() {
            let level = core_stabilization(f, x);
            let full = spectral_integral_apply(f, x);
            let trunc = truncated_integral_apply(f, level as f64, x, horizon);
            core.push(trunc.dist(&full) / (1.0 + full.norm()));
        }
    }
    checks.push(CheckList::max_check("core-stabilization", core, EXACT));
    d_alpha_and_support(&mut checks, model, &xs, opts, seed);
    checks
}

/// Per-block `E_P({n})` from the joint spectrum of `ρ_P(1)` and `ρ_P(bᵢ)` on
/// block `n`, with its deviation from `P ⊗ I` and from the block character.
fn block_spectral(model: &BlockModel, p: &ComplexMatrix, n: usize) -> specrep::Result<(ComplexMatrix, f64)> {
    let d = model.block_dim(n);
    let lifted = model.lift(p, n);
    let gens: Vec<ComplexMatrix> = (0..model.generators().len())
        .map(|i| &model.generator_block(i, n) * &lifted)
        .collect();
    let mut index = CharacterIndex::new(vec![model.character(n)]);
    let (atoms, unit) = atoms_from_images(&gens, Some(&lifted), d, &mut index)?;
    let total = atoms.values().fold(ComplexMatrix::zeros(d, d), |acc, m| &acc + m);
    let stray = atoms.keys().any(|x| *x != 0);
    let mut residual = rel(&lifted, &total).max(unit);
    if stray {
        let spread = index.points()[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&index.points()[0]).map(|(a, b)| (a - b).norm() / (1.0 + b.norm())))
            .fold(0.0, f64::max);
        residual = residual.max(spread);
    }
    Ok((atoms.get(&0).cloned().unwrap_or_else(|| ComplexMatrix::zeros(d, d)), residual))
}

/// Unbounded case with a von Neumann algebra `𝒲` on a block model.
pub fn verify_d(model: &BlockModel, seed: u64, opts: &BlockOptions) -> CheckList {
    let mut checks = CheckList::new();
    let horizon = model.horizon();
    let w = model.w().clone();
    let mut rng = random::rng(seed);
    let Some(family) = record(&mut checks, "projection-family", family_for(&w, opts.family_size, seed)) else {
        return checks;
    };

    // stage 1: integrability of each ρ_P
    let integ = family
        .members
        .iter()
        .map(|p| representation_integrability(model, p.matrix(), horizon).worst().1)
        .fold(0.0, f64::max);
    let mut c = Check::new("rho-p-integrability", integ, tol().recon);
    if !w.is_abelian() {
        c = c.flag("sampled projections");
    }
    checks.push(c);

    let xs = test_vectors(model, &mut rng, opts);
    let blocks: BTreeSet<usize> = xs.iter().flat_map(|x| x.blocks().map(|(n, _)| *n)).collect();

    // stage 2: E_P per block, stage 3: support containment
    let mut per_block: BTreeMap<usize, Vec<ComplexMatrix>> = BTreeMap::new();
    let mut spectral_res = 0.0f64;
    let mut stage2_failed = false;
    for n in &blocks {
        let mut list = Vec::with_capacity(family.len());
        for p in &family.members {
            match block_spectral(model, p.matrix(), *n) {
                Ok((e, r)) => {
                    spectral_res = spectral_res.max(r);
                    list.push(e);
                }
                Err(e) => {
                    if !stage2_failed {
                        checks.push(Check::failed("block-spectral-measures", e.to_string()));
                    }
                    stage2_failed = true;
                    break;
                }
            }
        }
        per_block.insert(*n, list);
    }
    if stage2_failed {
        return checks;
    }
    checks.push(Check::new("block-spectral-measures", spectral_res, tol().ext));
    let id_idx = identity_index(&family);
    let mut violations = 0usize;
    for x in &xs {
        for (n, v) in x.blocks() {
            let list = &per_block[n];
            let id_mass: f64 = id_idx.map_or(1.0, |i| specrep::matrix::vec_norm(&list[i].matvec(v)));
            for e in list {
                let mass = specrep::matrix::vec_norm(&e.matvec(v));
                if mass > 1e-12 && id_mass <= 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    checks.push(Check::new("support-containment", violations as f64, 0.0));

    // stage 4: blockwise assembly of M
    let mut measure = BlockMeasure::canonical(w.clone(), model.dims().clone());
    let mut assembly = 0.0f64;
    for (n, list) in &per_block {
        let d = model.block_dim(*n);
        let built = (|| -> specrep::Result<Vec<ComplexMatrix>> {
            let space = DiscreteSpace::finite([*n])?;
            let measures = list
                .iter()
                .map(|e| SpectralMeasure::unchecked(space.clone(), d, BTreeMap::from([(*n, e.clone())]), Some(e.clone())))
                .collect::<specrep::Result<Vec<_>>>()?;
            let mf = MeasureFamily::new(family.clone(), measures)?;
            let m = assemble_from_family(&mf)?;
            Ok(m.atom_images(*n).map(<[ComplexMatrix]>::to_vec).unwrap_or_default())
        })();
        let Some(images) = record(&mut checks, "block-assembly", built) else {
            return checks;
        };
        for (img, b) in images.iter().zip(w.basis()) {
            assembly = assembly.max(rel(&model.lift(b, *n), img));
        }
        if let Err(e) = measure.set_block(*n, images) {
            checks.push(Check::failed("block-assembly", e.to_string()));
            return checks;
        }
    }
    checks.push(Check::new("block-assembly", assembly, tol().ext));
    checks.push(Check::new("normalization", measure.normalization_residual(), tol().recon));

    // stage 5: ρ(F)x = 𝕀_M(F)x on 𝒟₀
    let r = model.generators().len();
    let mut rep_res = Vec::new();
    for x in &xs {
        for _ in 0..4 {
            let field = RepField {
                terms: (0..rng.random_range(1..=3))
                    .map(|_| (StarPoly::random(r, 3, 3, &mut rng), w.random_element(&mut rng)))
                    .collect(),
            };
            let sample = model.rho_apply(&field, x).and_then(|lhs| {
                let rhs = i_m_apply(&model.label_field(&field), &measure, x)?;
                Ok(lhs.dist(&rhs) / (1.0 + lhs.norm()))
            });
            if let Some(v) = record(&mut checks, "representation", sample) {
                rep_res.push(v);
            }
        }
    }
    checks.push(CheckList::max_check("representation", rep_res, EXACT));

    // stages 6-7: domain inclusion and functional bound
    let mut incl = Vec::new();
    let mut func = Vec::new();
    for x in &xs {
        let b = StarPoly::random(r, 3, 3, &mut rng);
        let a = w.random_element(&mut rng);
        if let Some(v) = record(&mut checks, "domain-inclusion", domain_inclusion_residual(model, &b, &a, x)) {
            incl.push(v);
        }
        if let Some(v) = record(&mut checks, "functional-bound", functional_bound_residual(model, &b, &a, x)) {
            func.push(v);
        }
    }
    checks.push(CheckList::max_check("domain-inclusion", incl, tol().recon));
    checks.push(CheckList::max_check("functional-bound", func, tol().recon));

    let mut support_checks = CheckList::new();
    d_alpha_and_support(&mut support_checks, model, &xs, opts, seed);
    for c in support_checks {
        let c = if c.name == "compact-support" {
            c.flag("reading: compact-support clause carried over to the uniqueness statement")
        } else {
            c
        };
        checks.push(c);
    }
    checks
}

/// Runs the pipeline matching the scenario kind.
pub fn run_scenario(s: &Scenario) -> CheckList {
    match (&s.body, s.kind) {
        (Body::A(a), _) => {
            let mut index = CharacterIndex::new(a.characters.clone());
            verify_a(&a.w, &a.generators, &mut index, Some(&a.oracle), s.seed)
        }
        (Body::B(b), _) => verify_b(&b.rep, Some(&b.oracle), s.seed, &BOptions::default()).checks,
        (Body::Block(m), Kind::D) => verify_d(m, s.seed, &BlockOptions::default()),
        (Body::Block(m), _) => verify_c(m, s.seed, &BlockOptions::default()),
    }
}

/// Generates and verifies one scenario.
pub fn verify(kind: Kind, seed: u64, caps: &Caps, timing: bool) -> HarnessResult<VerificationReport> {
    let start = Instant::now();
    let scenario = gen_scenario(kind, seed, caps)?;
    let mut report = VerificationReport::new(scenario.id.clone(), run_scenario(&scenario));
    if timing {
        report.wall_ms = start.elapsed().as_millis() as u64;
    }
    Ok(report)
}
