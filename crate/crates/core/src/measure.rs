//! Discrete Borel spaces and projection-valued spectral measures on them.
//!
//! Every subset of a discrete space is Borel and the compact subsets are the
//! finite ones. Countable spaces are indexed by `ℕ`; their sets are kept as
//! finite or cofinite label sets.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelfn::LabelFn;
use crate::matrix::{vec_inner, vec_norm, Matrix, MatrixDoc};
use crate::report::{Check, CheckList};
use crate::scalar::{Real, C};
use crate::spectral::{projection_residual, Projection};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DiscreteSpace {
    Finite { labels: Vec<usize> },
    /// `ℕ`, iterated up to `horizon` (exclusive) when a finite walk is needed.
    Countable { horizon: usize },
}

impl DiscreteSpace {
    pub fn finite(labels: impl IntoIterator<Item = usize>) -> Result<Self> {
        let labels: Vec<usize> = labels.into_iter().collect();
        let distinct: BTreeSet<_> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::Format("space labels must be distinct".into()));
        }
        Ok(DiscreteSpace::Finite { labels })
    }

    /// `{0, …, n−1}`.
    pub fn range(n: usize) -> Self {
        DiscreteSpace::Finite {
            labels: (0..n).collect(),
        }
    }

    pub fn countable(horizon: usize) -> Self {
        DiscreteSpace::Countable { horizon }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DiscreteSpace::Finite { .. })
    }

    pub fn contains(&self, x: usize) -> bool {
        match self {
            DiscreteSpace::Finite { labels } => labels.contains(&x),
            DiscreteSpace::Countable { .. } => true,
        }
    }

    /// Points up to the iteration horizon (all points for a finite space).
    pub fn points(&self) -> Vec<usize> {
        match self {
            DiscreteSpace::Finite { labels } => labels.clone(),
            DiscreteSpace::Countable { horizon } => (0..*horizon).collect(),
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            DiscreteSpace::Finite { .. } => None,
            DiscreteSpace::Countable { horizon } => Some(*horizon),
        }
    }

    pub fn whole(&self) -> BorelSet {
        match self {
            DiscreteSpace::Finite { labels } => BorelSet::Finite(labels.iter().copied().collect()),
            DiscreteSpace::Countable { .. } => BorelSet::all(),
        }
    }

    /// Checks that a set lives in this space and rewrites it as a finite set
    /// when the space is finite.
    pub fn normalize(&self, set: &BorelSet) -> Result<BorelSet> {
        match (self, set) {
            (DiscreteSpace::Finite { labels }, BorelSet::Finite(s)) => {
                if let Some(x) = s.iter().find(|x| !labels.contains(x)) {
                    return Err(Error::SpaceMismatch(format!("label {x} is not a point of the space")));
                }
                Ok(set.clone())
            }
            (DiscreteSpace::Finite { labels }, BorelSet::Cofinite(c)) => Ok(BorelSet::Finite(
                labels.iter().copied().filter(|x| !c.contains(x)).collect(),
            )),
            (DiscreteSpace::Countable { .. }, _) => Ok(set.clone()),
        }
    }
}

/// Finite set of labels, or the complement of one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "labels", rename_all = "lowercase")]
pub enum BorelSet {
    Finite(BTreeSet<usize>),
    Cofinite(BTreeSet<usize>),
}

impl BorelSet {
    pub fn empty() -> Self {
        BorelSet::Finite(BTreeSet::new())
    }

    pub fn all() -> Self {
        BorelSet::Cofinite(BTreeSet::new())
    }

    pub fn singleton(x: usize) -> Self {
        BorelSet::Finite([x].into())
    }

    pub fn of(labels: impl IntoIterator<Item = usize>) -> Self {
        BorelSet::Finite(labels.into_iter().collect())
    }

    /// `{0, …, n−1}`.
    pub fn below(n: usize) -> Self {
        BorelSet::Finite((0..n).collect())
    }

    pub fn contains(&self, x: usize) -> bool {
        match self {
            BorelSet::Finite(s) => s.contains(&x),
            BorelSet::Cofinite(c) => !c.contains(&x),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BorelSet::Finite(_))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, BorelSet::Finite(s) if s.is_empty())
    }

    pub fn members(&self) -> Option<&BTreeSet<usize>> {
        match self {
            BorelSet::Finite(s) => Some(s),
            BorelSet::Cofinite(_) => None,
        }
    }

    pub fn max_label(&self) -> Option<usize> {
        match self {
            BorelSet::Finite(s) => s.iter().next_back().copied(),
            BorelSet::Cofinite(_) => None,
        }
    }

    pub fn complement(&self) -> Self {
        match self {
            BorelSet::Finite(s) => BorelSet::Cofinite(s.clone()),
            BorelSet::Cofinite(c) => BorelSet::Finite(c.clone()),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        use BorelSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a | b),
            (Cofinite(a), Cofinite(b)) => Cofinite(a & b),
            (Finite(f), Cofinite(c)) | (Cofinite(c), Finite(f)) => Cofinite(c - f),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        use BorelSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a & b),
            (Cofinite(a), Cofinite(b)) => Cofinite(a | b),
            (Finite(f), Cofinite(c)) | (Cofinite(c), Finite(f)) => Finite(f - c),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        use BorelSet::*;
        match (self, other) {
            (Finite(a), _) => a.iter().all(|x| other.contains(*x)),
            (Cofinite(a), Cofinite(b)) => b.is_subset(a),
            (Cofinite(_), Finite(_)) => false,
        }
    }

    /// Members below a horizon.
    pub fn truncate(&self, horizon: usize) -> BTreeSet<usize> {
        match self {
            BorelSet::Finite(s) => s.range(..horizon).copied().collect(),
            BorelSet::Cofinite(c) => (0..horizon).filter(|x| !c.contains(x)).collect(),
        }
    }
}

/// Purely atomic projection-valued measure `E(Δ) = Σ_{x∈Δ} E_x` on ℂ^dim.
///
/// `total = E(X)` is kept explicitly and need not be the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure<T> {
    space: DiscreteSpace,
    dim: usize,
    atoms: BTreeMap<usize, Projection<T>>,
    total: Projection<T>,
}

impl<T: Real> SpectralMeasure<T> {
    /// Validated construction; `total` defaults to the sum of the atoms.
    pub fn new(
        space: DiscreteSpace,
        dim: usize,
        atoms: BTreeMap<usize, Matrix<T>>,
        total: Option<Matrix<T>>,
    ) -> Result<Self> {
        let raw = Self::unchecked(space, dim, atoms, total)?;
        if let Some(bad) = raw.validate().failures().next() {
            return Err(Error::NotProjection { residual: bad.residual });
        }
        Ok(raw)
    }

    /// Construction that only checks shapes and labels; pair with
    /// [`SpectralMeasure::validate`] to obtain a residual report.
    pub fn unchecked(
        space: DiscreteSpace,
        dim: usize,
        atoms: BTreeMap<usize, Matrix<T>>,
        total: Option<Matrix<T>>,
    ) -> Result<Self> {
        let mut proj = BTreeMap::new();
        for (x, m) in atoms {
            if !space.contains(x) {
                return Err(Error::SpaceMismatch(format!("atom label {x} is not a point of the space")));
            }
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::shape(format!("{dim}x{dim}"), m.shape_str()));
            }
            proj.insert(x, Projection::trusted(m));
        }
        let total = match total {
            Some(t) => {
                if t.rows() != dim || t.cols() != dim {
                    return Err(Error::shape(format!("{dim}x{dim}"), t.shape_str()));
                }
                t
            }
            None => proj
                .values()
                .fold(Matrix::zeros(dim, dim), |acc, p| &acc + p.matrix()),
        };
        Ok(Self {
            space,
            dim,
            atoms: proj,
            total: Projection::trusted(total),
        })
    }

    /// Measure whose atoms are the given projections.
    pub fn from_projections(space: DiscreteSpace, dim: usize, atoms: BTreeMap<usize, Projection<T>>) -> Result<Self> {
        Self::new(
            space,
            dim,
            atoms.into_iter().map(|(x, p)| (x, p.into_matrix())).collect(),
            None,
        )
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &BTreeMap<usize, Projection<T>> {
        &self.atoms
    }

    pub fn atom(&self, x: usize) -> Matrix<T> {
        self.atoms
            .get(&x)
            .map_or_else(|| Matrix::zeros(self.dim, self.dim), |p| p.matrix().clone())
    }

    pub fn total(&self) -> &Projection<T> {
        &self.total
    }

    /// Residual report for every measure invariant.
    pub fn validate(&self) -> CheckList {
        let tol = T::tolerances();
        let proj_tol = tol.proj.to_f64_lossy();
        let mut out = CheckList::new();
        out.push(CheckList::max_check(
            "atom-idempotency",
            self.atoms.values().map(|p| projection_residual(p.matrix()).to_f64_lossy()),
            proj_tol,
        ));
        let atoms: Vec<&Matrix<T>> = self.atoms.values().map(Projection::matrix).collect();
        let mut orth = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                orth.push((*a * *b).frob_norm().to_f64_lossy());
            }
        }
        out.push(CheckList::max_check("atom-orthogonality", orth, proj_tol));
        out.push(Check::new(
            "total-idempotency",
            projection_residual(self.total.matrix()).to_f64_lossy(),
            proj_tol,
        ));
        out.push(CheckList::max_check(
            "total-contains-atoms",
            atoms
                .iter()
                .map(|a| (&(self.total.matrix() * *a) - *a).frob_norm().to_f64_lossy()),
            proj_tol,
        ));
        if self.space.is_finite() {
            let sum = self.sum_atoms();
            let r = (&sum - self.total.matrix()).frob_norm() / (T::one() + self.total.matrix().frob_norm());
            out.push(Check::new("atoms-sum-to-total", r.to_f64_lossy(), proj_tol));
        }
        out
    }

    fn sum_atoms(&self) -> Matrix<T> {
        self.atoms
            .values()
            .fold(Matrix::zeros(self.dim, self.dim), |acc, p| &acc + p.matrix())
    }

    fn sum_over(&self, labels: &BTreeSet<usize>) -> Matrix<T> {
        labels
            .iter()
            .filter_map(|x| self.atoms.get(x))
            .fold(Matrix::zeros(self.dim, self.dim), |acc, p| &acc + p.matrix())
    }

    /// `E(Δ)`; cofinite sets are evaluated as `total − E(complement)`.
    pub fn evaluate(&self, set: &BorelSet) -> Result<Projection<T>> {
        let set = self.space.normalize(set)?;
        let m = match &set {
            BorelSet::Finite(s) => self.sum_over(s),
            BorelSet::Cofinite(c) => self.total.matrix() - &self.sum_over(c),
        };
        Ok(Projection::trusted(m))
    }

    /// `∫_Δ f dE = Σ_{x∈Δ} f(x) E_x`.
    pub fn integrate_bounded(&self, f: &LabelFn, set: &BorelSet) -> Result<Matrix<T>> {
        let set = self.space.normalize(set)?;
        if !set.is_finite() && f.sup_bound().is_none() {
            return Err(Error::UnboundedOnSet);
        }
        let mut out = Matrix::zeros(self.dim, self.dim);
        for (x, p) in &self.atoms {
            if set.contains(*x) {
                let v = f.eval_as::<T>(*x);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite);
                }
                out = &out + &p.matrix().scale(v);
            }
        }
        Ok(out)
    }

    /// `E_{h₁,h₂}(Δ) = ⟨E(Δ)h₁, h₂⟩`.
    pub fn scalar_measure(&self, h1: &[C<T>], h2: &[C<T>], set: &BorelSet) -> Result<C<T>> {
        for h in [h1, h2] {
            if h.len() != self.dim {
                return Err(Error::DimMismatch {
                    expected: self.dim,
                    actual: h.len(),
                });
            }
        }
        let e = self.evaluate(set)?;
        Ok(vec_inner(&e.matrix().matvec(h1), h2))
    }

    /// Labels of atoms with `‖E_x‖ > τ_proj`.
    pub fn support(&self) -> BorelSet {
        let tol = T::tolerances().proj;
        BorelSet::Finite(
            self.atoms
                .iter()
                .filter(|(_, p)| p.matrix().frob_norm() > tol)
                .map(|(x, _)| *x)
                .collect(),
        )
    }

    /// Labels with `E_{h,h}({x}) > τ_proj ‖h‖²`.
    pub fn support_vector(&self, h: &[C<T>]) -> BorelSet {
        let tol = T::tolerances().proj;
        let mass = vec_norm(h).powi(2);
        BorelSet::Finite(
            self.atoms
                .iter()
                .filter(|(_, p)| vec_inner(&p.matrix().matvec(h), h).re > tol * mass)
                .map(|(x, _)| *x)
                .collect(),
        )
    }

    /// Compares `sup_K E_{h,h}(K)` over finite `K ⊆ {0..horizon}` with the
    /// total mass `⟨E(X)h, h⟩`.
    pub fn check_regularity(&self, h: &[C<T>], horizon: usize) -> Result<RegularityReport> {
        if h.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: h.len(),
            });
        }
        let labels: BTreeSet<usize> = match &self.space {
            DiscreteSpace::Finite { labels } => labels.iter().copied().filter(|x| *x < horizon).collect(),
            DiscreteSpace::Countable { .. } => (0..horizon).collect(),
        };
        let sup = vec_inner(&self.sum_over(&labels).matvec(h), h).re.to_f64_lossy();
        let mass = vec_inner(&self.total.matrix().matvec(h), h).re.to_f64_lossy();
        let deficit = mass - sup;
        let tol = T::tolerances().meas.to_f64_lossy();
        Ok(RegularityReport {
            horizon,
            sup,
            mass,
            deficit,
            regular: deficit <= tol * (1.0 + mass.abs()),
        })
    }

    pub fn to_doc(&self) -> MeasureDoc {
        MeasureDoc {
            kind: "spectral".into(),
            space: self.space.clone(),
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|(x, p)| AtomDoc {
                    label: *x,
                    matrix: p.matrix().to_doc(),
                })
                .collect(),
            total: Some(self.total.matrix().to_doc()),
        }
    }

    /// Parses a document without validating the measure invariants.
    pub fn from_doc_unchecked(doc: &MeasureDoc) -> Result<Self> {
        if doc.kind != "spectral" {
            return Err(Error::Format(format!("expected kind \"spectral\", got {:?}", doc.kind)));
        }
        let mut atoms = BTreeMap::new();
        for a in &doc.atoms {
            if atoms.insert(a.label, Matrix::from_doc(&a.matrix)?).is_some() {
                return Err(Error::Format(format!("duplicate atom label {}", a.label)));
            }
        }
        let total = doc.total.as_ref().map(Matrix::from_doc).transpose()?;
        Self::unchecked(doc.space.clone(), doc.dim, atoms, total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub horizon: usize,
    pub sup: f64,
    pub mass: f64,
    pub deficit: f64,
    pub regular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDoc {
    pub label: usize,
    pub matrix: MatrixDoc,
}

/// Measure file: space, dimension and atom matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub kind: String,
    pub space: DiscreteSpace,
    pub dim: usize,
    pub atoms: Vec<AtomDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<MatrixDoc>,
}

/// Zero vector helper used by callers building test vectors.
pub fn zero_vector<T: Real>(n: usize) -> Vec<C<T>> {
    vec![C::zero(); n]
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;

    use super::*;

    type M = Matrix<f64>;

    fn two_atoms() -> SpectralMeasure<f64> {
        let atoms = BTreeMap::from([(0, M::real_diag(&[1.0, 0.0])), (1, M::real_diag(&[0.0, 1.0]))]);
        SpectralMeasure::new(DiscreteSpace::range(2), 2, atoms, None).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let e = two_atoms();
        assert_eq!(e.evaluate(&BorelSet::empty()).unwrap().matrix(), &M::zeros(2, 2));
        assert_eq!(e.evaluate(&BorelSet::all()).unwrap().matrix(), e.total().matrix());
        assert_eq!(e.evaluate(&BorelSet::singleton(0)).unwrap().matrix(), &M::real_diag(&[1.0, 0.0]));
        assert!(matches!(e.evaluate(&BorelSet::singleton(7)), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn integrate_identity_function() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = vec![Complex::new(s, 0.0), Complex::new(s, 0.0)];
        let v2 = vec![Complex::new(s, 0.0), Complex::new(-s, 0.0)];
        let atoms = BTreeMap::from([(1, M::outer(&v1, &v1)), (2, M::outer(&v2, &v2))]);
        let e = SpectralMeasure::new(DiscreteSpace::finite([1, 2]).unwrap(), 2, atoms, None).unwrap();
        let out = e.integrate_bounded(&LabelFn::poly(&[0.0, 1.0]), &BorelSet::all()).unwrap();
        // eigenvalues 1 on v1 and 2 on v2
        let expect = M::from_real_rows(&[&[1.5, -0.5], &[-0.5, 1.5]]);
        assert!(out.approx_eq(&expect, 1e-14).unwrap());
        assert_eq!(e.integrate_bounded(&LabelFn::constant(1.0), &BorelSet::all()).unwrap(), *e.total().matrix());
        assert_eq!(e.integrate_bounded(&LabelFn::constant(0.0), &BorelSet::all()).unwrap(), M::zeros(2, 2));
    }

    #[test]
    fn unbounded_on_infinite_set() {
        let atoms = BTreeMap::from([(3, M::identity(1))]);
        let e = SpectralMeasure::new(DiscreteSpace::countable(10), 1, atoms, None).unwrap();
        let r = e.integrate_bounded(&LabelFn::poly(&[0.0, 1.0]), &BorelSet::all());
        assert_eq!(r, Err(Error::UnboundedOnSet));
        let ok = e.integrate_bounded(&LabelFn::poly(&[0.0, 1.0]), &BorelSet::below(5)).unwrap();
        assert_eq!(ok[(0, 0)], Complex::new(3.0, 0.0));
    }

    #[test]
    fn scalar_measure_examples() {
        let e = two_atoms();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = vec![Complex::new(s, 0.0), Complex::new(s, 0.0)];
        let v = e.scalar_measure(&h, &h, &BorelSet::singleton(0)).unwrap();
        assert!((v.re - 0.5).abs() < 1e-15 && v.im == 0.0);
        let e1 = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
        assert_eq!(e.scalar_measure(&e1, &h, &BorelSet::singleton(0)).unwrap(), Complex::new(0.0, 0.0));
        let g = vec![Complex::new(0.2, 1.0), Complex::new(-3.0, 0.5)];
        let total = e.scalar_measure(&h, &g, &BorelSet::all()).unwrap();
        assert!((total - vec_inner(&h, &g)).norm() < 1e-15);
    }

    #[test]
    fn supports() {
        let atoms = BTreeMap::from([
            (1, M::real_diag(&[1.0, 0.0])),
            (2, M::zeros(2, 2)),
            (3, M::real_diag(&[0.0, 1.0])),
        ]);
        let e = SpectralMeasure::new(DiscreteSpace::range(4), 2, atoms, None).unwrap();
        assert_eq!(e.support(), BorelSet::of([1, 3]));
        let h = vec![Complex::new(2.0, 0.0), Complex::new(0.0, 0.0)];
        assert_eq!(e.support_vector(&h), BorelSet::singleton(1));
    }

    #[test]
    fn regularity_on_blocks() {
        let atoms: BTreeMap<usize, M> = (0..8).map(|n| (n, M::unit(8, n, n))).collect();
        let e = SpectralMeasure::new(DiscreteSpace::countable(100), 8, atoms, None).unwrap();
        let mut h = zero_vector::<f64>(8);
        h[5] = Complex::new(1.0, 0.0);
        assert!(!e.check_regularity(&h, 5).unwrap().regular);
        let r = e.check_regularity(&h, 6).unwrap();
        assert!(r.regular && r.deficit == 0.0);
        assert!(e.check_regularity(&zero_vector(8), 0).unwrap().regular);
    }

    #[test]
    fn invalid_atoms_are_reported() {
        let atoms = BTreeMap::from([(0, M::real_diag(&[1.0, 0.0])), (1, M::real_diag(&[1.0, 1.0]))]);
        let e = SpectralMeasure::unchecked(DiscreteSpace::range(2), 2, atoms, None).unwrap();
        let report = e.validate();
        assert!(!report.get("atom-orthogonality").unwrap().pass);
        assert!(!report.get("total-idempotency").unwrap().pass);
    }

    #[test]
    fn set_algebra() {
        let a = BorelSet::of([1, 2, 3]);
        let b = BorelSet::of([3, 4]).complement();
        assert_eq!(a.intersection(&b), BorelSet::of([1, 2]));
        assert_eq!(a.union(&b), BorelSet::Cofinite([4].into()));
        assert!(BorelSet::of([1, 2]).is_subset(&b));
        assert!(!b.is_subset(&a));
        let doc = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<BorelSet>(&doc).unwrap(), b);
    }

    #[test]
    fn document_round_trip() {
        let e = two_atoms();
        let text = serde_json::to_string(&e.to_doc()).unwrap();
        let back = SpectralMeasure::<f64>::from_doc_unchecked(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, e);
        assert!(back.validate().pass());
    }
}
