//! Non-negative spectral measures `M: Bor(X) → B(𝒲₁, B(𝒦))` on discrete
//! spaces, their assembly from projection-indexed families of spectral
//! measures, and bounded integration of operator fields.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDoc, LinearExtender, ProjectionFamily, VonNeumannAlgebra};
use crate::error::{Error, Result};
use crate::labelfn::LabelFn;
use crate::limiting::{LimitingSequence, LimitingTerm, ZetaRule};
use crate::matrix::{Matrix, MatrixDoc};
use crate::measure::{BorelSet, DiscreteSpace, SpectralMeasure};
use crate::random::{self, Rng64};
use crate::report::{Check, CheckList};
use crate::scalar::{Real, C};
use crate::spectral::{eig_hermitian, op_norm, projection_residual, star_decompose, Hermitian, Projection};

/// Residuals below this multiple of machine precision (times the operand
/// scale) are rounding noise.
const NOISE_FLOOR: f64 = 64.0;
const MIN_FIT_POINTS: usize = 3;

/// Atom maps `Φ_x: 𝒲₁ → B(𝒦)`, stored as the images of the trace-orthonormal
/// basis of `𝒲₁`. `M(Δ)(A) = Σ_{x∈Δ} Φ_x(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegSpectralMeasure<T> {
    space: DiscreteSpace,
    w1: VonNeumannAlgebra<T>,
    target_dim: usize,
    atoms: BTreeMap<usize, Vec<Matrix<T>>>,
}

impl<T: Real> NonNegSpectralMeasure<T> {
    pub fn new(
        space: DiscreteSpace,
        w1: VonNeumannAlgebra<T>,
        target_dim: usize,
        atoms: BTreeMap<usize, Vec<Matrix<T>>>,
    ) -> Result<Self> {
        for (x, images) in &atoms {
            if !space.contains(*x) {
                return Err(Error::SpaceMismatch(format!("atom label {x} is not a point of the space")));
            }
            if images.len() != w1.dim() {
                return Err(Error::DimMismatch {
                    expected: w1.dim(),
                    actual: images.len(),
                });
            }
            for m in images {
                if m.rows() != target_dim || m.cols() != target_dim {
                    return Err(Error::shape(format!("{target_dim}x{target_dim}"), m.shape_str()));
                }
            }
        }
        Ok(Self {
            space,
            w1,
            target_dim,
            atoms,
        })
    }

    /// Builds the atom maps by applying `phi(x, ·)` to the basis of `𝒲₁`.
    pub fn from_fn(
        space: DiscreteSpace,
        w1: VonNeumannAlgebra<T>,
        target_dim: usize,
        labels: impl IntoIterator<Item = usize>,
        mut phi: impl FnMut(usize, &Matrix<T>) -> Matrix<T>,
    ) -> Result<Self> {
        let atoms = labels
            .into_iter()
            .map(|x| (x, w1.basis().iter().map(|b| phi(x, b)).collect()))
            .collect();
        Self::new(space, w1, target_dim, atoms)
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn w1(&self) -> &VonNeumannAlgebra<T> {
        &self.w1
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.keys().copied()
    }

    pub fn atom_images(&self, x: usize) -> Option<&[Matrix<T>]> {
        self.atoms.get(&x).map(Vec::as_slice)
    }

    pub fn atoms_mut(&mut self) -> &mut BTreeMap<usize, Vec<Matrix<T>>> {
        &mut self.atoms
    }

    fn check_member(&self, a: &Matrix<T>) -> Result<()> {
        let r = self.w1.membership_residual(a);
        if r > T::tolerances().alg {
            return Err(Error::AlgebraMismatch {
                residual: r.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn apply_images(&self, images: &[Matrix<T>], coords: &[C<T>]) -> Matrix<T> {
        images
            .iter()
            .zip(coords)
            .fold(Matrix::zeros(self.target_dim, self.target_dim), |acc, (m, c)| &acc + &m.scale(*c))
    }

    /// `Φ_x(A)`; zero for labels without a stored atom.
    pub fn phi(&self, x: usize, a: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_member(a)?;
        Ok(self.phi_unchecked(x, &self.w1.coords(a)))
    }

    fn phi_unchecked(&self, x: usize, coords: &[C<T>]) -> Matrix<T> {
        match self.atoms.get(&x) {
            Some(images) => self.apply_images(images, coords),
            None => Matrix::zeros(self.target_dim, self.target_dim),
        }
    }

    /// `M(Δ)(A)`. Cofinite sets range over the stored atoms.
    pub fn evaluate(&self, set: &BorelSet, a: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_member(a)?;
        let set = self.space.normalize(set)?;
        let coords = self.w1.coords(a);
        Ok(self
            .atoms
            .iter()
            .filter(|(x, _)| set.contains(**x))
            .fold(Matrix::zeros(self.target_dim, self.target_dim), |acc, (_, images)| {
                &acc + &self.apply_images(images, &coords)
            }))
    }

    /// The set function `M_P = M(·)(P)` as a spectral measure (unvalidated).
    pub fn compression(&self, p: &Matrix<T>) -> Result<SpectralMeasure<T>> {
        self.check_member(p)?;
        let coords = self.w1.coords(p);
        let atoms = self
            .atoms
            .iter()
            .map(|(x, images)| (*x, self.apply_images(images, &coords)))
            .collect();
        SpectralMeasure::unchecked(self.space.clone(), self.target_dim, atoms, None)
    }

    /// `‖M(X)(id) − id‖_F / (1 + ‖id‖_F)`.
    pub fn normalization_residual(&self) -> T {
        let id = Matrix::identity(self.w1.ambient_dim());
        match self.evaluate(&BorelSet::all(), &id) {
            Ok(total) => total.rel_dist(&Matrix::identity(self.target_dim)),
            Err(_) => T::infinity(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization_residual() <= T::tolerances().recon
    }

    /// Support of `M_id`.
    pub fn support(&self) -> BorelSet {
        match self.compression(&Matrix::identity(self.w1.ambient_dim())) {
            Ok(e) => e.support(),
            Err(_) => BorelSet::empty(),
        }
    }

    /// `M_P` for every member of a projection family.
    pub fn decompose(&self, family: &ProjectionFamily<T>) -> Result<MeasureFamily<T>> {
        let measures = family
            .members
            .iter()
            .map(|p| self.compression(p.matrix()))
            .collect::<Result<Vec<_>>>()?;
        MeasureFamily::new(family.clone(), measures)
    }

    /// Largest relative distance between corresponding atom maps, over the
    /// union of the stored labels.
    pub fn distance(&self, other: &Self) -> T {
        let labels: BTreeSet<usize> = self.labels().chain(other.labels()).collect();
        let mut worst = T::zero();
        for x in labels {
            for b in self.w1.basis() {
                let lhs = self.phi_unchecked(x, &self.w1.coords(b));
                let rhs = match other.phi(x, b) {
                    Ok(m) => m,
                    Err(_) => return T::infinity(),
                };
                worst = worst.max(lhs.rel_dist(&rhs));
            }
        }
        worst
    }

    pub fn to_doc(&self) -> NnsmDoc {
        NnsmDoc {
            kind: "nnsm".into(),
            space: self.space.clone(),
            w1: self.w1.to_doc(),
            target_dim: self.target_dim,
            atoms: self
                .atoms
                .iter()
                .map(|(x, images)| NnsmAtomDoc {
                    label: *x,
                    images: images.iter().map(Matrix::to_doc).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &NnsmDoc) -> Result<Self> {
        if doc.kind != "nnsm" {
            return Err(Error::Format(format!("expected kind \"nnsm\", got {:?}", doc.kind)));
        }
        let w1 = VonNeumannAlgebra::from_doc(&doc.w1)?;
        let mut atoms = BTreeMap::new();
        for a in &doc.atoms {
            let images = a.images.iter().map(Matrix::from_doc).collect::<Result<Vec<_>>>()?;
            if atoms.insert(a.label, images).is_some() {
                return Err(Error::Format(format!("duplicate atom label {}", a.label)));
            }
        }
        Self::new(doc.space.clone(), w1, doc.target_dim, atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnsmAtomDoc {
    pub label: usize,
    pub images: Vec<MatrixDoc>,
}

/// NNSM file: space, algebra descriptor and per-atom images of the algebra
/// basis recomputed from the descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnsmDoc {
    pub kind: String,
    pub space: DiscreteSpace,
    pub w1: AlgebraDoc,
    pub target_dim: usize,
    pub atoms: Vec<NnsmAtomDoc>,
}

/// A spectral measure `E_P` for each member `P` of a projection family.
#[derive(Debug, Clone)]
pub struct MeasureFamily<T> {
    family: ProjectionFamily<T>,
    measures: Vec<SpectralMeasure<T>>,
    target_dim: usize,
    labels: BTreeSet<usize>,
}

impl<T: Real> MeasureFamily<T> {
    pub fn new(family: ProjectionFamily<T>, measures: Vec<SpectralMeasure<T>>) -> Result<Self> {
        if measures.len() != family.len() {
            return Err(Error::DimMismatch {
                expected: family.len(),
                actual: measures.len(),
            });
        }
        let target_dim = measures.first().map_or(0, SpectralMeasure::dim);
        if let Some(m) = measures.iter().find(|m| m.dim() != target_dim) {
            return Err(Error::DimMismatch {
                expected: target_dim,
                actual: m.dim(),
            });
        }
        if let Some(m) = measures.iter().find(|m| m.space() != measures[0].space()) {
            return Err(Error::SpaceMismatch(format!("{:?}", m.space())));
        }
        let labels = measures.iter().flat_map(|m| m.atoms().keys().copied()).collect();
        Ok(Self {
            family,
            measures,
            target_dim,
            labels,
        })
    }

    pub fn family(&self) -> &ProjectionFamily<T> {
        &self.family
    }

    pub fn measures(&self) -> &[SpectralMeasure<T>] {
        &self.measures
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn space(&self) -> &DiscreteSpace {
        self.measures[0].space()
    }

    /// Labels carrying an atom in at least one member measure.
    pub fn labels(&self) -> &BTreeSet<usize> {
        &self.labels
    }

    /// `E_P(Δ)` for every member, in family order.
    pub fn assignment(&self, set: &BorelSet) -> Result<Vec<Matrix<T>>> {
        self.measures
            .iter()
            .map(|m| m.evaluate(set).map(Projection::into_matrix))
            .collect()
    }

    pub fn extender(&self) -> Result<LinearExtender<T>> {
        LinearExtender::new(self.family.clone())
    }
}

/// Residual report for the NNSM definition: each sampled compression is a
/// spectral measure and the product rule holds on random set pairs.
pub fn check_nnsm<T: Real>(
    m: &NonNegSpectralMeasure<T>,
    family: &ProjectionFamily<T>,
    set_pairs: usize,
    seed: u64,
) -> Result<CheckList> {
    if family.algebra.ambient_dim() != m.w1.ambient_dim() {
        return Err(Error::AlgebraMismatch { residual: f64::INFINITY });
    }
    let tol = T::tolerances();
    let recon = tol.recon.to_f64_lossy();
    let mut idem = Vec::new();
    let mut orth = Vec::new();
    let mut compressions = Vec::with_capacity(family.len());
    for p in &family.members {
        let e = m.compression(p.matrix())?;
        let report = e.validate();
        idem.extend(report.get("atom-idempotency").map(|c| c.residual));
        orth.extend(report.get("atom-orthogonality").map(|c| c.residual));
        compressions.push(e);
    }
    let mut out = CheckList::new();
    out.push(CheckList::max_check("compression-idempotency", idem, recon));
    out.push(CheckList::max_check("compression-orthogonality", orth, recon));

    let labels: Vec<usize> = m.labels().collect();
    let mut rng = random::rng(seed);
    let mut product = Vec::with_capacity(set_pairs);
    if !family.is_empty() {
        for _ in 0..set_pairs {
            let i = rng.random_range(0..family.len());
            let j = rng.random_range(0..family.len());
            let d1 = random_subset(&labels, &mut rng);
            let d2 = random_subset(&labels, &mut rng);
            let lhs = &m.evaluate(&d1, family.members[i].matrix())? * &m.evaluate(&d2, family.members[j].matrix())?;
            let pq = family.members[i].matrix() * family.members[j].matrix();
            let rhs = m.evaluate(&d1.intersection(&d2), &pq)?;
            product.push(((&lhs - &rhs).frob_norm() / (T::one() + lhs.frob_norm())).to_f64_lossy());
        }
    }
    out.push(CheckList::max_check("product-rule", product, recon));
    Ok(out)
}

/// Random subset: each label independently with probability 1/2.
pub fn random_subset(labels: &[usize], rng: &mut Rng64) -> BorelSet {
    BorelSet::of(labels.iter().copied().filter(|_| rng.random_bool(0.5)))
}

/// Condition (1): `Σ λᵢ E_{Pᵢ}(Δ) = Σ μⱼ E_{Qⱼ}(Δ)` whenever `Σ λᵢ Pᵢ = Σ μⱼ Qⱼ`.
///
/// Every member is expanded in the primary spanning subset and its measure
/// compared atom by atom with the same expansion of the measures; `trials`
/// further random relations are formed by rewriting random real combinations
/// in the secondary spanning subset. Atoms suffice since every Borel set is a
/// union of atoms.
pub fn condition1_check<T: Real>(family: &MeasureFamily<T>, trials: usize, seed: u64) -> Result<CheckList> {
    let ext = family.extender()?;
    let members = family.family().matrices();
    let sets: Vec<BorelSet> = family.labels().iter().map(|x| BorelSet::singleton(*x)).collect();
    let assignments: Vec<Vec<Matrix<T>>> = sets.iter().map(|d| family.assignment(d)).collect::<Result<_>>()?;
    let ext_tol = T::tolerances().ext.to_f64_lossy();

    let mut member_res = Vec::new();
    for (k, p) in members.iter().enumerate() {
        let (coefs, _) = ext.decompose(p, false)?;
        for a in &assignments {
            let rhs = combine(&coefs, a, family.target_dim());
            member_res.push(a[k].rel_dist(&rhs).to_f64_lossy());
        }
    }

    let mut rng = random::rng(seed);
    let mut relation_res = Vec::new();
    for _ in 0..trials {
        let count = rng.random_range(1..=members.len());
        let lhs: Vec<(usize, C<T>)> = (0..count)
            .map(|_| (rng.random_range(0..members.len()), C::new(random::normal(&mut rng), T::zero())))
            .collect();
        let n = members[0].rows();
        let a = lhs.iter().fold(Matrix::zeros(n, n), |acc, (i, c)| &acc + &members[*i].scale(*c));
        let (rhs, _) = ext.decompose(&a, true)?;
        for asg in &assignments {
            let l = combine(&lhs, asg, family.target_dim());
            let r = combine(&rhs, asg, family.target_dim());
            relation_res.push(l.rel_dist(&r).to_f64_lossy());
        }
    }
    let mut out = CheckList::new();
    out.push(CheckList::max_check("condition1-members", member_res, ext_tol));
    out.push(CheckList::max_check("condition1-relations", relation_res, ext_tol));
    Ok(out)
}

fn combine<T: Real>(coefs: &[(usize, C<T>)], assignment: &[Matrix<T>], dim: usize) -> Matrix<T> {
    coefs
        .iter()
        .fold(Matrix::zeros(dim, dim), |acc, (i, c)| &acc + &assignment[*i].scale(*c))
}

/// Condition (2): `sup_P ‖E_P(Δ)‖` per tested set.
#[derive(Debug, Clone)]
pub struct Condition2Report {
    pub witnesses: Vec<(BorelSet, f64)>,
}

impl Condition2Report {
    /// Largest witnessed `k_Δ`.
    pub fn k_max(&self) -> f64 {
        self.witnesses.iter().fold(0.0, |acc, (_, k)| acc.max(*k))
    }

    /// Passes when every witnessed bound is at most one, the norm bound of
    /// a projection, up to the projection tolerance.
    pub fn check(&self, proj_tol: f64) -> Check {
        Check::new("condition2", self.k_max(), 1.0 + proj_tol)
    }
}

pub fn condition2_check<T: Real>(family: &MeasureFamily<T>, sets: &[BorelSet]) -> Result<Condition2Report> {
    let mut witnesses = Vec::with_capacity(sets.len());
    for d in sets {
        let mut sup = T::zero();
        for e in family.measures() {
            sup = sup.max(op_norm(e.evaluate(d)?.matrix())?);
        }
        witnesses.push((d.clone(), sup.to_f64_lossy()));
    }
    Ok(Condition2Report { witnesses })
}

/// Residual of condition (3) as a function of `ℓ`.
#[derive(Debug, Clone)]
pub struct Condition3Report {
    /// `r(ℓ)` for `ℓ = 1..=ell_max`
    pub residuals: Vec<f64>,
    /// Residuals at or below this level count as exact zeros.
    pub floor: f64,
}

impl Condition3Report {
    pub fn ell_max(&self) -> usize {
        self.residuals.len()
    }

    pub fn last(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Monotone upper envelope `r̂(ℓ) = max_{ℓ' ≥ ℓ} r(ℓ')`, with rounding
    /// noise clamped to zero.
    pub fn envelope(&self) -> Vec<f64> {
        let mut env = vec![0.0; self.residuals.len()];
        let mut run = 0.0f64;
        for (i, r) in self.residuals.iter().enumerate().rev() {
            let r = if *r <= self.floor { 0.0 } else { *r };
            run = run.max(r);
            env[i] = run;
        }
        env
    }

    /// Least-squares decay rate of the envelope in log-log coordinates, fitted
    /// at the corners of its steps (the last `ℓ` of each constant run), or
    /// `None` when too few nonzero corners remain (the residual is exact).
    pub fn fitted_rate(&self) -> Option<f64> {
        let env = self.envelope();
        let pts: Vec<(f64, f64)> = env
            .iter()
            .enumerate()
            .filter(|(i, r)| **r > 0.0 && env.get(i + 1) != Some(*r))
            .map(|(i, r)| (((i + 1) as f64).ln(), r.ln()))
            .collect();
        if pts.len() < MIN_FIT_POINTS {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| -sxy / sxx)
    }

    /// Checks `r(ℓ_max) ≤ c/ℓ_max` and, when a rate can be fitted, that it is
    /// at least `min_rate` (residual `max(0, min_rate − rate)`).
    pub fn checks(&self, c: f64, min_rate: f64) -> Vec<Check> {
        let ell = self.ell_max().max(1) as f64;
        let value = Check::new("condition3-value", self.last() * ell, c)
            .flag(format!("residual at ell={} is {:e}", self.ell_max(), self.last()));
        let rate = match self.fitted_rate() {
            Some(r) => Check::new("condition3-rate", (min_rate - r).max(0.0), 0.0).flag(format!("fitted rate {r:.3}")),
            None => Check::new("condition3-rate", 0.0, 0.0).flag("exact: residual vanishes beyond rounding"),
        };
        vec![value, rate]
    }
}

/// Condition (3) for members `p` and `q` of the family on `Δ₁`, `Δ₂`.
pub fn condition3_check<T: Real>(
    family: &MeasureFamily<T>,
    ext: &LinearExtender<T>,
    p: usize,
    q: usize,
    d1: &BorelSet,
    d2: &BorelSet,
    ell_max: usize,
) -> Result<Condition3Report> {
    let members = family.family().matrices();
    let lhs = &family.measures()[p].evaluate(d1)?.into_matrix() * &family.measures()[q].evaluate(d2)?.into_matrix();
    let pq = members[p] * members[q];
    let parts = star_decompose(&pq)?;
    let inter = d1.intersection(d2);
    let assignment = family.assignment(&inter)?;
    let seqs = parts
        .with_phases()
        .map(|(phase, h)| LimitingSequence::new(h, ell_max, ZetaRule::RightEndpoint).map(|s| (phase, s)));
    let seqs: Vec<(C<T>, LimitingSequence<T>)> = seqs.into_iter().collect::<Result<_>>()?;
    let mut cache: Vec<(Matrix<T>, Matrix<T>)> = Vec::new();
    let k = family.target_dim();
    let mut residuals = Vec::with_capacity(ell_max);
    for ell in 1..=ell_max {
        let mut rhs = Matrix::zeros(k, k);
        for (phase, seq) in &seqs {
            let term = seq.term(ell).expect("stored term");
            let part = riemann_value(term, k, |r| cached_extend(&mut cache, ext, &assignment, r))?;
            rhs = &rhs + &part.scale(*phase);
        }
        residuals.push((&lhs - &rhs).frob_norm().to_f64_lossy());
    }
    let scale = T::one() + lhs.frob_norm();
    let floor = (T::epsilon() * T::lit(NOISE_FLOOR) * scale * T::lit((1 + k) as f64)).to_f64_lossy();
    Ok(Condition3Report { residuals, floor })
}

fn cached_extend<T: Real>(
    cache: &mut Vec<(Matrix<T>, Matrix<T>)>,
    ext: &LinearExtender<T>,
    assignment: &[Matrix<T>],
    r: &Matrix<T>,
) -> Result<Matrix<T>> {
    let hit = cache
        .iter()
        .find(|(key, _)| (key - r).frob_norm() <= T::epsilon() * T::lit(NOISE_FLOOR));
    if let Some((_, v)) = hit {
        return Ok(v.clone());
    }
    let v = ext.extend(assignment, r)?;
    cache.push((r.clone(), v.clone()));
    Ok(v)
}

/// `Σ_k ζ_k · value(R_k)` for one Riemann sum.
pub fn riemann_value<T: Real>(
    term: &LimitingTerm<T>,
    dim: usize,
    mut value: impl FnMut(&Matrix<T>) -> Result<Matrix<T>>,
) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(dim, dim);
    for (zeta, r) in term.pairs() {
        out = &out + &value(r.matrix())?.scale_real(zeta);
    }
    Ok(out)
}

/// Assembles `M` with `M_P = E_P` by linear extension of `P ↦ E_P({x})` on
/// each atom, through the primary spanning subset (or the secondary one).
pub fn assemble_from_family<T: Real>(family: &MeasureFamily<T>) -> Result<NonNegSpectralMeasure<T>> {
    assemble_with(family, false)
}

pub fn assemble_with<T: Real>(family: &MeasureFamily<T>, secondary: bool) -> Result<NonNegSpectralMeasure<T>> {
    let ext = family.extender()?;
    let w1 = family.family().algebra.clone();
    let mut atoms = BTreeMap::new();
    for x in family.labels() {
        let assignment = family.assignment(&BorelSet::singleton(*x))?;
        let images = w1
            .basis()
            .iter()
            .map(|b| {
                let (p, s) = ext.extend_both(&assignment, b)?;
                let gap = p.rel_dist(&s);
                if gap > T::tolerances().ext {
                    return Err(Error::InconsistentAssignment {
                        residual: gap.to_f64_lossy(),
                    });
                }
                Ok(if secondary { s } else { p })
            })
            .collect::<Result<Vec<_>>>()?;
        atoms.insert(*x, images);
    }
    NonNegSpectralMeasure::new(family.space().clone(), w1, family.target_dim(), atoms)
}

/// `E_{S_ℓ(A)}(Δ) = Σ_k ζ_k M_{R_k}(Δ)` for a term of a limiting sequence.
pub fn limit_term_value<T: Real>(m: &NonNegSpectralMeasure<T>, term: &LimitingTerm<T>, set: &BorelSet) -> Result<Matrix<T>> {
    riemann_value(term, m.target_dim(), |r| m.evaluate(set, r))
}

/// Minimum eigenvalue of `Φ_x(A)` over the atoms, for positive `A`.
pub fn positivity_floor<T: Real>(m: &NonNegSpectralMeasure<T>, a: &Matrix<T>) -> Result<T> {
    let mut worst = T::infinity();
    for x in m.labels().collect::<Vec<_>>() {
        let img = m.phi(x, a)?;
        let sd = eig_hermitian(&Hermitian::hermitian_part_of(&img))?;
        worst = worst.min(sd.min());
    }
    Ok(if worst.is_infinite() { T::zero() } else { worst })
}

/// `F = Σ fᵢ ⊗ Aᵢ` with `fᵢ` a label function and `Aᵢ ∈ 𝒲₁`.
#[derive(Debug, Clone)]
pub struct OperatorField<T> {
    pub terms: Vec<(LabelFn, Matrix<T>)>,
}

impl<T: Real> OperatorField<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn single(f: LabelFn, a: Matrix<T>) -> Self {
        Self { terms: vec![(f, a)] }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            terms: self.terms.iter().map(|(f, a)| (f.clone(), a.scale(s))).collect(),
        }
    }

    /// Pointwise product `(Σ fᵢ⊗Aᵢ)(Σ gⱼ⊗Bⱼ) = Σ fᵢgⱼ ⊗ AᵢBⱼ`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (f, a) in &self.terms {
            for (g, b) in &other.terms {
                terms.push((f.times(g), a * b));
            }
        }
        Self { terms }
    }

    /// `F* = Σ f̄ᵢ ⊗ Aᵢ*`.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(f, a)| (f.conj(), a.adjoint())).collect(),
        }
    }

    /// `F(x) = Σ fᵢ(x) Aᵢ ∈ 𝒲₁`.
    pub fn value_at(&self, x: usize, n: usize) -> Matrix<T> {
        self.terms
            .iter()
            .fold(Matrix::zeros(n, n), |acc, (f, a)| &acc + &a.scale(f.eval_as(x)))
    }

    /// Largest algebra-membership residual of the coefficient operators.
    pub fn membership_residual(&self, w: &VonNeumannAlgebra<T>) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (_, a)| acc.max(w.membership_residual(a)))
    }
}

/// `∫_Δ F dM = Σᵢ Σ_{x∈Δ} fᵢ(x) Φ_x(Aᵢ)` for finite `Δ`.
pub fn integrate<T: Real>(m: &NonNegSpectralMeasure<T>, f: &OperatorField<T>, set: &BorelSet) -> Result<Matrix<T>> {
    let set = m.space().normalize(set)?;
    let members = set.members().ok_or(Error::InfiniteSet)?;
    let r = f.membership_residual(m.w1());
    if r > T::tolerances().alg {
        return Err(Error::AlgebraMismatch {
            residual: r.to_f64_lossy(),
        });
    }
    let k = m.target_dim();
    let coords: Vec<Vec<C<T>>> = f.terms.iter().map(|(_, a)| m.w1().coords(a)).collect();
    let mut out = Matrix::zeros(k, k);
    for x in members {
        let Some(images) = m.atom_images(*x) else {
            continue;
        };
        for ((g, _), c) in f.terms.iter().zip(&coords) {
            let v = g.eval_as::<T>(*x);
            if v.is_zero() {
                continue;
            }
            out = &out + &m.apply_images(images, c).scale(v);
        }
    }
    Ok(out)
}

/// Residuals of the five integration laws on one `(F, G, Δ)` sample:
/// additivity, homogeneity, the indicator law, positivity of `∫ F*F dM`, and
/// multiplicativity.
pub fn integration_laws<T: Real>(
    m: &NonNegSpectralMeasure<T>,
    f: &OperatorField<T>,
    g: &OperatorField<T>,
    lambda: C<T>,
    a: &Matrix<T>,
    set: &BorelSet,
) -> Result<[T; 5]> {
    let int_f = integrate(m, f, set)?;
    let int_g = integrate(m, g, set)?;
    let additive = integrate(m, &f.add(g), set)?.rel_dist(&(&int_f + &int_g));
    let homogeneous = integrate(m, &f.scale(lambda), set)?.rel_dist(&int_f.scale(lambda));
    let indicator = integrate(m, &OperatorField::single(LabelFn::indicator(set.clone()), a.clone()), &m.space().whole().intersection(&finite_cover(m, set)))?
        .rel_dist(&m.evaluate(set, a)?);
    let ff = f.adjoint().mul(f);
    let pos = integrate(m, &ff, set)?;
    let sd = eig_hermitian(&Hermitian::hermitian_part_of(&pos))?;
    let positivity = (-sd.min()).max(T::zero()) / (T::one() + sd.radius());
    let multiplicative = integrate(m, &f.mul(g), set)?.rel_dist(&(&int_f * &int_g));
    Ok([additive, homogeneous, indicator, positivity, multiplicative])
}

/// Finite set containing every stored atom and the given set's members.
fn finite_cover<T: Real>(m: &NonNegSpectralMeasure<T>, set: &BorelSet) -> BorelSet {
    let mut labels: BTreeSet<usize> = m.labels().collect();
    if let Some(s) = set.members() {
        labels.extend(s);
    }
    BorelSet::Finite(labels)
}

/// `id_K` check helper for projections of `𝒦`.
pub fn projection_defect<T: Real>(m: &Matrix<T>) -> T {
    projection_residual(m)
}
