//! Fault injection. Each class corrupts a valid scenario by a known amount
//! and records which named check catches it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use specrep::matrix::vec_norm;
use specrep::nnsm::{check_nnsm, condition1_check, MeasureFamily};
use specrep::random;
use specrep::report::{Check, CheckList};
use specrep::unbounded::{representation_integrability, BlockCorruption};
use specrep::{ComplexMatrix, Real, SpectralMeasure, C};

use crate::error::{HarnessError, HarnessResult};
use crate::pipelines::family_for;
use crate::scenario::{gen_scenario, Body, Caps, Kind, Scenario};

pub const DEFAULT_DELTA: f64 = 1e-3;

/// Derived seeds tried when a scenario offers nothing to corrupt.
const ATTEMPTS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    NonIdempotentProjection,
    BrokenCondition1,
    NonNormalBlock,
    DenormalizedMeasure,
}

impl FaultKind {
    pub const ALL: [FaultKind; 4] = [
        FaultKind::NonIdempotentProjection,
        FaultKind::BrokenCondition1,
        FaultKind::NonNormalBlock,
        FaultKind::DenormalizedMeasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultKind::NonIdempotentProjection => "non-idempotent-projection",
            FaultKind::BrokenCondition1 => "broken-condition1",
            FaultKind::NonNormalBlock => "non-normal-block",
            FaultKind::DenormalizedMeasure => "denormalized-measure",
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown fault class {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct FaultOutcome {
    pub kind: FaultKind,
    pub scenario: String,
    pub delta: f64,
    pub checks: CheckList,
    /// First failing check whose residual is within a factor 10 of `delta`.
    pub detected_by: Option<Check>,
}

impl FaultOutcome {
    fn new(kind: FaultKind, scenario: String, delta: f64, checks: CheckList) -> Self {
        let detected_by = checks
            .checks
            .iter()
            .find(|c| !c.pass && c.residual >= delta / 10.0 && c.residual <= delta * 10.0)
            .cloned();
        Self {
            kind,
            scenario,
            delta,
            checks,
            detected_by,
        }
    }

    pub fn detected(&self) -> bool {
        self.detected_by.is_some()
    }
}

pub fn inject(kind: FaultKind, seed: u64, delta: f64) -> HarnessResult<FaultOutcome> {
    let caps = Caps::default();
    for attempt in 0..ATTEMPTS {
        let s = seed.wrapping_add(attempt.wrapping_mul(1_000_003));
        let outcome = match kind {
            FaultKind::NonIdempotentProjection => non_idempotent(&gen_scenario(Kind::A, s, &caps)?, delta)?,
            FaultKind::BrokenCondition1 => broken_condition1(&gen_scenario(Kind::B, s, &caps)?, delta)?,
            FaultKind::NonNormalBlock => non_normal(&gen_scenario(Kind::D, s, &caps)?, delta)?,
            FaultKind::DenormalizedMeasure => denormalized(&gen_scenario(Kind::B, s, &caps)?, delta)?,
        };
        if let Some(checks) = outcome {
            let id = format!("{}-{}", kind, s);
            return Ok(FaultOutcome::new(kind, id, delta, checks));
        }
    }
    Err(HarnessError::Usage(format!("no scenario near seed {seed} admits fault {kind}")))
}

/// `P ↦ P + δ H/‖H‖_F` with `H` block diagonal for `P`, so that
/// `‖P'² − P'‖_F = δ + O(δ²)`.
fn non_idempotent(s: &Scenario, delta: f64) -> HarnessResult<Option<CheckList>> {
    let Body::A(a) = &s.body else { return Ok(None) };
    let k = a.oracle.dim();
    let mut rng = random::rng(s.seed ^ 0xFA17);
    let mut atoms: std::collections::BTreeMap<usize, ComplexMatrix> =
        a.oracle.atoms().iter().map(|(x, p)| (*x, p.matrix().clone())).collect();
    let Some((&x, p)) = atoms.iter().next() else { return Ok(None) };
    let q = &ComplexMatrix::identity(k) - p;
    let h = random::hermitian::<f64>(&mut rng, k);
    let h = &(&(p * &h) * p) + &(&(&q * &h) * &q);
    let norm = h.frob_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let perturbed = p + &h.scale_real(delta / norm);
    atoms.insert(x, perturbed);
    let e = SpectralMeasure::unchecked(a.oracle.space().clone(), k, atoms, Some(a.oracle.total().matrix().clone()))?;
    Ok(Some(e.validate()))
}

/// Rotates one measure `E_P` of a member outside the primary spanning subset
/// by angle `δ` in a plane meeting the range of one atom.
fn broken_condition1(s: &Scenario, delta: f64) -> HarnessResult<Option<CheckList>> {
    let Body::B(b) = &s.body else { return Ok(None) };
    let family = family_for(b.rep.w1(), 10, s.seed)?;
    let mf = b.oracle.decompose(&family)?;
    let primary = mf.extender()?.primary_indices().to_vec();
    let k = mf.target_dim();
    let id = ComplexMatrix::identity(k);
    for (i, e) in mf.measures().iter().enumerate() {
        if primary.contains(&i) {
            continue;
        }
        let Some(u) = e.atoms().values().find_map(|p| {
            let m = p.matrix();
            let (u, v) = (first_column(m)?, first_column(&(&id - m))?);
            Some(rotation(&u, &v, delta))
        }) else {
            continue;
        };
        let conj = |m: &ComplexMatrix| &(&u * m) * &u.adjoint();
        let atoms = e.atoms().iter().map(|(x, p)| (*x, conj(p.matrix()))).collect();
        let rotated = SpectralMeasure::unchecked(e.space().clone(), k, atoms, Some(conj(e.total().matrix())))?;
        let mut measures = mf.measures().to_vec();
        measures[i] = rotated;
        let broken = MeasureFamily::new(family, measures)?;
        return Ok(Some(condition1_check(&broken, 10, s.seed)?));
    }
    Ok(None)
}

fn first_column(m: &ComplexMatrix) -> Option<Vec<C<f64>>> {
    (0..m.cols()).map(|j| m.column(j)).find_map(|c| {
        let n = vec_norm(&c);
        (n > 0.5).then(|| c.iter().map(|z| z / n).collect())
    })
}

/// Rotation by `θ` in the plane of orthonormal `u, v`.
fn rotation(u: &[C<f64>], v: &[C<f64>], theta: f64) -> ComplexMatrix {
    let n = u.len();
    let (c, s) = (theta.cos(), theta.sin());
    let uu = ComplexMatrix::outer(u, u);
    let vv = ComplexMatrix::outer(v, v);
    let vu = ComplexMatrix::outer(v, u);
    let uv = ComplexMatrix::outer(u, v);
    let plane = &uu + &vv;
    let turn = &(&plane.scale_real(c - 1.0) + &vu.scale_real(s)) - &uv.scale_real(s);
    &ComplexMatrix::identity(n) + &turn
}

/// Adds `s·E₀₁` to one generator on the first block of dimension at least
/// two, with `s` chosen so the relative normality residual equals `δ`.
fn non_normal(s: &Scenario, delta: f64) -> HarnessResult<Option<CheckList>> {
    let Body::Block(model) = &s.body else { return Ok(None) };
    if model.generators().is_empty() {
        return Ok(None);
    }
    let Some(n) = (0..model.horizon()).find(|n| model.block_dim(*n) >= 2) else {
        return Ok(None);
    };
    let d = model.block_dim(n);
    let f = model.generators()[0].eval(n).norm();
    let s2 = delta * (1.0 + d as f64 * f * f) / (std::f64::consts::SQRT_2 - delta);
    let corrupted = model.clone().with_corruption(BlockCorruption {
        generator: 0,
        block: n,
        delta: ComplexMatrix::unit(d, 0, 1).scale_real(s2.sqrt()),
    })?;
    let id = ComplexMatrix::identity(corrupted.w().ambient_dim());
    let mut checks = CheckList::new();
    checks.push(representation_integrability(&corrupted, &id, corrupted.horizon()).check("integrability"));
    Ok(Some(checks))
}

/// Scales the images of the atom with the largest `Φ_x(id)` by `1 + δ`.
fn denormalized(s: &Scenario, delta: f64) -> HarnessResult<Option<CheckList>> {
    let Body::B(b) = &s.body else { return Ok(None) };
    let mut m = b.oracle.clone();
    let id = ComplexMatrix::identity(m.w1().ambient_dim());
    let Some(x) = m
        .labels()
        .max_by(|a, c| {
            let ra = m.phi(*a, &id).map(|p| p.frob_norm()).unwrap_or(0.0);
            let rc = m.phi(*c, &id).map(|p| p.frob_norm()).unwrap_or(0.0);
            ra.total_cmp(&rc)
        })
    else {
        return Ok(None);
    };
    if let Some(images) = m.atoms_mut().get_mut(&x) {
        for img in images.iter_mut() {
            *img = img.scale_real(1.0 + delta);
        }
    }
    let family = family_for(m.w1(), 10, s.seed)?;
    let mut checks = CheckList::new();
    checks.push(Check::new("normalization", m.normalization_residual(), f64::tolerances().recon));
    checks.extend(check_nnsm(&m, &family, 20, s.seed)?);
    Ok(Some(checks))
}
