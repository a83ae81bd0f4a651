//! Desk-scale unbounded model: a countable orthogonal sum of finite blocks,
//! finitely supported vectors as the dense domain, and evaluation of
//! unbounded spectral integrals on that domain.
//!
//! Block `n` is `ℂʰ ⊗ ℂ^{mₙ}`. An element `b ⊗ A` acts on it as
//! `f_b(n) · (A ⊗ I)`, where `f_b` is the character value of `b` at `n`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDoc, VonNeumannAlgebra};
use crate::error::{Error, Result};
use crate::labelfn::{LabelFn, Tail, C64};
use crate::limiting::{LimitingSequence, ZetaRule};
use crate::matrix::{vec_inner, vec_norm, Matrix};
use crate::measure::{BorelSet, DiscreteSpace};
use crate::nnsm::OperatorField;
use crate::random::{self, Rng64};
use crate::report::Check;
use crate::scalar::{Real, C};
use crate::spectral::{op_norm, star_decompose};
use crate::star::StarPoly;

/// Fields `Σ fᵢ ⊗ Aᵢ` with possibly unbounded `fᵢ`.
pub type UnboundedField<T> = OperatorField<T>;

/// Block multiplicities: an explicit prefix, then `repeat` cycled forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDims {
    pub prefix: Vec<usize>,
    pub repeat: Vec<usize>,
}

impl BlockDims {
    pub fn constant(m: usize) -> Self {
        Self {
            prefix: Vec::new(),
            repeat: vec![m],
        }
    }

    pub fn get(&self, n: usize) -> usize {
        match self.prefix.get(n) {
            Some(m) => *m,
            None => self.repeat[(n - self.prefix.len()) % self.repeat.len()],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repeat.is_empty() || self.prefix.iter().chain(&self.repeat).any(|m| *m == 0) {
            return Err(Error::Format("block multiplicities must be positive with a nonempty repeat rule".into()));
        }
        Ok(())
    }
}

/// Named generator value rules of the block-model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum GeneratorRule {
    Poly { coefficients: Vec<f64> },
    ExpIndex { scale: f64, base: f64 },
    BoundedConst { value: f64 },
    Reciprocal { scale: f64, shift: f64 },
}

impl GeneratorRule {
    pub fn to_labelfn(&self) -> LabelFn {
        match self {
            GeneratorRule::Poly { coefficients } => LabelFn::poly(coefficients),
            GeneratorRule::ExpIndex { scale, base } => LabelFn::ExpIndex {
                scale: C64::new(*scale, 0.0),
                base: *base,
            },
            GeneratorRule::BoundedConst { value } => LabelFn::constant(*value),
            GeneratorRule::Reciprocal { scale, shift } => LabelFn::Reciprocal {
                scale: C64::new(*scale, 0.0),
                shift: *shift,
            },
        }
    }
}

/// Additive perturbation of one generator's action on one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCorruption<T> {
    pub generator: usize,
    pub block: usize,
    pub delta: Matrix<T>,
}

#[derive(Debug, Clone)]
pub struct BlockModel<T> {
    space: DiscreteSpace,
    dims: BlockDims,
    generators: Vec<LabelFn>,
    rules: Option<Vec<GeneratorRule>>,
    w: VonNeumannAlgebra<T>,
    corruption: Option<BlockCorruption<T>>,
}

impl<T: Real> BlockModel<T> {
    pub fn new(horizon: usize, dims: BlockDims, generators: Vec<LabelFn>, w: VonNeumannAlgebra<T>) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            space: DiscreteSpace::countable(horizon),
            dims,
            generators,
            rules: None,
            w,
            corruption: None,
        })
    }

    pub fn from_rules(horizon: usize, dims: BlockDims, rules: Vec<GeneratorRule>, w: VonNeumannAlgebra<T>) -> Result<Self> {
        for rule in &rules {
            if let GeneratorRule::Reciprocal { shift, .. } = rule {
                if !(*shift > 0.0) {
                    return Err(Error::Format(format!("reciprocal shift must be positive, got {shift}")));
                }
            }
        }
        let gens = rules.iter().map(GeneratorRule::to_labelfn).collect();
        let mut model = Self::new(horizon, dims, gens, w)?;
        model.rules = Some(rules);
        Ok(model)
    }

    /// `f(k) = k` on one-dimensional blocks.
    pub fn number_operator(horizon: usize) -> Self {
        Self::from_rules(
            horizon,
            BlockDims::constant(1),
            vec![GeneratorRule::Poly {
                coefficients: vec![0.0, 1.0],
            }],
            VonNeumannAlgebra::scalars(1),
        )
        .expect("valid model")
    }

    pub fn with_corruption(mut self, corruption: BlockCorruption<T>) -> Result<Self> {
        let d = self.block_dim(corruption.block);
        if corruption.generator >= self.generators.len() {
            return Err(Error::DimMismatch {
                expected: self.generators.len(),
                actual: corruption.generator + 1,
            });
        }
        if corruption.delta.rows() != d || corruption.delta.cols() != d {
            return Err(Error::shape(format!("{d}x{d}"), corruption.delta.shape_str()));
        }
        self.corruption = Some(corruption);
        Ok(self)
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn horizon(&self) -> usize {
        self.space.horizon().unwrap_or(0)
    }

    pub fn dims(&self) -> &BlockDims {
        &self.dims
    }

    pub fn generators(&self) -> &[LabelFn] {
        &self.generators
    }

    pub fn w(&self) -> &VonNeumannAlgebra<T> {
        &self.w
    }

    pub fn corruption(&self) -> Option<&BlockCorruption<T>> {
        self.corruption.as_ref()
    }

    pub fn multiplicity(&self, n: usize) -> usize {
        self.dims.get(n)
    }

    pub fn block_dim(&self, n: usize) -> usize {
        self.w.ambient_dim() * self.dims.get(n)
    }

    /// Character values `(f_{b₁}(n), …, f_{b_r}(n))`.
    pub fn character(&self, n: usize) -> Vec<C<T>> {
        self.generators.iter().map(|g| g.eval_as(n)).collect()
    }

    /// `f_b(n)` for a *-polynomial in the generators.
    pub fn character_value(&self, b: &StarPoly<T>, n: usize) -> C<T> {
        b.eval_scalar(&self.character(n))
    }

    /// `A ⊗ I_{mₙ}`.
    pub fn lift(&self, a: &Matrix<T>, n: usize) -> Matrix<T> {
        a.kron(&Matrix::identity(self.multiplicity(n)))
    }

    /// Action of generator `i` on block `n`.
    pub fn generator_block(&self, i: usize, n: usize) -> Matrix<T> {
        let d = self.block_dim(n);
        let base = Matrix::identity(d).scale(self.generators[i].eval_as(n));
        match &self.corruption {
            Some(c) if c.generator == i && c.block == n => &base + &c.delta,
            _ => base,
        }
    }

    /// `ρ(b)` on block `n`, evaluated on the generator actions.
    pub fn rho_block(&self, b: &StarPoly<T>, n: usize) -> Result<Matrix<T>> {
        let gens: Vec<Matrix<T>> = (0..self.generators.len()).map(|i| self.generator_block(i, n)).collect();
        if gens.is_empty() {
            return Ok(Matrix::identity(self.block_dim(n)).scale(b.eval_scalar(&[])));
        }
        b.eval_matrices(&gens)
    }

    /// `ρ(Σ bᵢ ⊗ Aᵢ) x`.
    pub fn rho_apply(&self, field: &RepField<T>, x: &DomainVector<T>) -> Result<DomainVector<T>> {
        self.check_vector(x)?;
        let mut out = DomainVector::zero();
        for (n, v) in x.blocks() {
            let mut acc = vec![C::zero(); v.len()];
            for (b, a) in &field.terms {
                let m = &self.rho_block(b, *n)? * &self.lift(a, *n);
                for (o, y) in acc.iter_mut().zip(m.matvec(v)) {
                    *o += y;
                }
            }
            out.insert(*n, acc);
        }
        Ok(out)
    }

    /// `f_F = Σ f_{bᵢ} ⊗ Aᵢ` as a field of label functions.
    pub fn label_field(&self, field: &RepField<T>) -> UnboundedField<T> {
        OperatorField {
            terms: field
                .terms
                .iter()
                .map(|(b, a)| (self.labelfn_of(b), a.clone()))
                .collect(),
        }
    }

    /// `n ↦ f_b(n)`.
    pub fn labelfn_of(&self, b: &StarPoly<T>) -> LabelFn {
        let poly = StarPoly::<f64>::zero(b.nvars());
        let poly = b.terms().fold(poly, |acc, (m, c)| {
            acc.add(&StarPoly::monomial(b.nvars(), m.clone(), C64::new(c.re.to_f64_lossy(), c.im.to_f64_lossy())))
        });
        LabelFn::Compose {
            poly,
            args: self.generators.clone(),
        }
    }

    /// Checks that `x` lives on blocks of the space with matching sizes.
    pub fn check_vector(&self, x: &DomainVector<T>) -> Result<()> {
        for (n, v) in x.blocks() {
            if *n >= self.horizon() {
                return Err(Error::NotInD0(format!("block {n} lies beyond the horizon {}", self.horizon())));
            }
            if v.len() != self.block_dim(*n) {
                return Err(Error::NotInD0(format!(
                    "block {n} has {} components, expected {}",
                    v.len(),
                    self.block_dim(*n)
                )));
            }
        }
        Ok(())
    }

    /// Random vector with Gaussian components on the given blocks.
    pub fn random_vector(&self, support: impl IntoIterator<Item = usize>, rng: &mut Rng64) -> DomainVector<T> {
        let mut x = DomainVector::zero();
        for n in support {
            x.insert(n, random::vector(rng, self.block_dim(n)));
        }
        x
    }

    /// Canonical NNSM `Φₙ(A) = A ⊗ I`.
    pub fn canonical_measure(&self) -> BlockMeasure<T> {
        BlockMeasure::canonical(self.w.clone(), self.dims.clone())
    }

    pub fn to_doc(&self) -> Result<BlockModelDoc> {
        let rules = self
            .rules
            .clone()
            .ok_or_else(|| Error::Format("generators without named rules cannot be serialized".into()))?;
        Ok(BlockModelDoc {
            kind: "block-model".into(),
            horizon: self.horizon(),
            block_dims: self.dims.clone(),
            generators: rules,
            w: self.w.to_doc(),
        })
    }

    pub fn from_doc(doc: &BlockModelDoc) -> Result<Self> {
        if doc.kind != "block-model" {
            return Err(Error::Format(format!("expected kind \"block-model\", got {:?}", doc.kind)));
        }
        let w = VonNeumannAlgebra::from_doc(&doc.w)?;
        Self::from_rules(doc.horizon, doc.block_dims.clone(), doc.generators.clone(), w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelDoc {
    pub kind: String,
    pub horizon: usize,
    pub block_dims: BlockDims,
    pub generators: Vec<GeneratorRule>,
    pub w: AlgebraDoc,
}

/// Element `Σ bᵢ ⊗ Aᵢ` of `𝔅 ⊗ 𝒲` with `bᵢ` *-polynomials in the generators.
#[derive(Debug, Clone)]
pub struct RepField<T> {
    pub terms: Vec<(StarPoly<T>, Matrix<T>)>,
}

impl<T: Real> RepField<T> {
    pub fn single(b: StarPoly<T>, a: Matrix<T>) -> Self {
        Self { terms: vec![(b, a)] }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (b, a) in &self.terms {
            for (c, d) in &other.terms {
                terms.push((b.mul(c), a * d));
            }
        }
        Self { terms }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(b, a)| (b.adjoint(), a.adjoint())).collect(),
        }
    }
}

/// Finitely supported vector of the block space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainVector<T> {
    blocks: BTreeMap<usize, Vec<C<T>>>,
}

impl<T: Real> DomainVector<T> {
    pub fn zero() -> Self {
        Self { blocks: BTreeMap::new() }
    }

    /// Unit vector `e_i` in block `n` of dimension `dim`.
    pub fn unit(n: usize, i: usize, dim: usize) -> Self {
        let mut v = vec![C::zero(); dim];
        v[i] = C::one();
        let mut x = Self::zero();
        x.insert(n, v);
        x
    }

    pub fn insert(&mut self, n: usize, v: Vec<C<T>>) {
        self.blocks.insert(n, v);
    }

    pub fn block(&self, n: usize) -> Option<&[C<T>]> {
        self.blocks.get(&n).map(Vec::as_slice)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&usize, &Vec<C<T>>)> {
        self.blocks.iter()
    }

    /// Blocks carrying a nonzero component.
    pub fn support(&self) -> BorelSet {
        BorelSet::of(
            self.blocks
                .iter()
                .filter(|(_, v)| v.iter().any(|c| !c.is_zero()))
                .map(|(n, _)| *n),
        )
    }

    pub fn norm_sqr(&self) -> T {
        self.blocks
            .values()
            .flatten()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨x, y⟩`, linear in `x`.
    pub fn inner(&self, other: &Self) -> C<T> {
        self.blocks
            .iter()
            .filter_map(|(n, v)| other.blocks.get(n).map(|w| vec_inner(v, w)))
            .fold(C::zero(), |acc, c| acc + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, w) in &other.blocks {
            match out.blocks.get_mut(n) {
                Some(v) => v.iter_mut().zip(w).for_each(|(a, b)| *a += b),
                None => {
                    out.blocks.insert(*n, w.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|(n, v)| (*n, v.iter().map(|c| *c * s).collect()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-C::one()))
    }

    pub fn dist(&self, other: &Self) -> T {
        self.sub(other).norm()
    }

    /// `χ_K x`.
    pub fn truncate(&self, k: &BorelSet) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .filter(|(n, _)| k.contains(**n))
                .map(|(n, v)| (*n, v.clone()))
                .collect(),
        }
    }

    /// Applies a per-block linear map.
    pub fn map_blocks(&self, mut f: impl FnMut(usize, &[C<T>]) -> Result<Vec<C<T>>>) -> Result<Self> {
        let mut out = Self::zero();
        for (n, v) in &self.blocks {
            out.insert(*n, f(*n, v)?);
        }
        Ok(out)
    }

    /// `E_{x,x}(Δ) = Σ_{n∈Δ} ‖xₙ‖²` as a list of atoms.
    pub fn scalar_measure(&self) -> BTreeMap<usize, T> {
        self.blocks
            .iter()
            .map(|(n, v)| (*n, vec_norm(v).powi(2)))
            .filter(|(_, m)| !m.is_zero())
            .collect()
    }
}

/// `Δₙ` of a bounding sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingSet {
    pub set: BorelSet,
    /// False when some function had no tail certificate and was scanned
    /// only up to the horizon.
    pub certified: bool,
}

/// `Δₙ = {k : |f_j(k)| ≤ n for all j}`. Functions whose eventual behaviour
/// is not known from their representation are evaluated up to `horizon`.
pub fn bounding_sequence(fs: &[LabelFn], n: f64, horizon: usize) -> BoundingSet {
    let mut set = BorelSet::all();
    let mut certified = true;
    for f in fs {
        let good = |k: usize| f.eval(k).norm() <= n;
        let part = match f.tail(n) {
            Some(Tail::Below(k0)) => BorelSet::Cofinite((0..k0).filter(|k| !good(*k)).collect()),
            Some(Tail::Above(k0)) => BorelSet::of((0..k0).filter(|k| good(*k))),
            None => {
                certified = false;
                BorelSet::of((0..=horizon).filter(|k| good(*k)))
            }
        };
        set = set.intersection(&part);
    }
    BoundingSet { set, certified }
}

/// `𝕀(f)x` for the block spectral measure `n ↦` projection onto block `n`.
/// Finitely supported vectors always lie in the domain.
pub fn spectral_integral_apply<T: Real>(f: &LabelFn, x: &DomainVector<T>) -> DomainVector<T> {
    x.map_blocks(|n, v| {
        let s = f.eval_as::<T>(n);
        Ok(v.iter().map(|c| *c * s).collect())
    })
    .expect("infallible")
}

/// Smallest integer level `n` with `Δₙ ⊇ supp(x)`, after which
/// `𝕀(f χ_{Δₙ})x = 𝕀(f)x`.
pub fn core_stabilization<T: Real>(f: &LabelFn, x: &DomainVector<T>) -> usize {
    x.support()
        .members()
        .into_iter()
        .flatten()
        .map(|k| f.eval(*k).norm().ceil() as usize)
        .max()
        .unwrap_or(0)
}

/// `𝕀(f χ_{Δₙ})x`.
pub fn truncated_integral_apply<T: Real>(f: &LabelFn, level: f64, x: &DomainVector<T>, horizon: usize) -> DomainVector<T> {
    let delta = bounding_sequence(std::slice::from_ref(f), level, horizon).set;
    spectral_integral_apply(&f.times(&LabelFn::indicator(delta)), x)
}

/// Membership in `𝒟₀ = ∪_K M(K)(id)𝒦` with its witness `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct D0Witness {
    pub member: bool,
    pub k: BorelSet,
}

/// Every finitely supported vector lies in `M(K)(id)𝒦` for `K = supp(x)`.
pub fn d0_membership<T: Real>(x: &DomainVector<T>) -> D0Witness {
    D0Witness {
        member: true,
        k: x.support(),
    }
}

/// Target vector `cₙ = scale · ratioⁿ · uₙ` with unit `uₙ`, not finitely
/// supported.
#[derive(Debug, Clone)]
pub struct GeometricTarget<T> {
    pub scale: f64,
    pub ratio: f64,
    pub dims: BlockDims,
    pub h: usize,
    pub seed: u64,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> GeometricTarget<T> {
    pub fn new(scale: f64, ratio: f64, dims: BlockDims, h: usize, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&ratio), "ratio must lie in [0, 1)");
        Self {
            scale,
            ratio,
            dims,
            h,
            seed,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn component(&self, n: usize) -> Vec<C<T>> {
        let mut rng = random::rng(self.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let v: Vec<C<T>> = random::vector(&mut rng, self.h * self.dims.get(n));
        let norm = vec_norm(&v);
        let s = T::lit(self.scale * self.ratio.powi(n as i32)) / norm;
        v.into_iter().map(|c| c * s).collect()
    }

    /// `Σ_{n≥N} ‖cₙ‖² = scale² r^{2N} / (1 − r²)`.
    pub fn tail_mass(&self, from: usize) -> f64 {
        let r2 = self.ratio * self.ratio;
        self.scale * self.scale * r2.powi(from as i32) / (1.0 - r2)
    }

    pub fn truncation(&self, horizon: usize) -> DomainVector<T> {
        let mut x = DomainVector::zero();
        for n in 0..horizon {
            x.insert(n, self.component(n));
        }
        x
    }
}

/// Constructive `𝒟₀` approximant of a target within `ε`.
#[derive(Debug, Clone)]
pub struct DensityWitness<T> {
    pub vector: DomainVector<T>,
    pub horizon: usize,
    /// Certified `‖target − vector‖` from the explicit tail bound.
    pub deficit: f64,
    pub k: BorelSet,
    /// On a countable discrete space the σ-compact and regular branches of
    /// the density argument are the same truncation.
    pub branch: &'static str,
}

pub fn density_witness<T: Real>(target: &GeometricTarget<T>, eps: f64) -> Result<DensityWitness<T>> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut horizon = 0;
    while target.tail_mass(horizon).sqrt() > eps {
        horizon += 1;
        if horizon > 1 << 20 {
            return Err(Error::TooLarge {
                what: "truncation horizon",
                size: horizon,
                limit: 1 << 20,
            });
        }
    }
    let vector = target.truncation(horizon);
    Ok(DensityWitness {
        k: BorelSet::of(0..horizon),
        vector,
        horizon,
        deficit: target.tail_mass(horizon).sqrt(),
        branch: "countable-discrete",
    })
}

/// NNSM on the block space: `Φₙ(A)` acts on block `n`, given by the images
/// of the algebra basis. Blocks without stored images use `A ⊗ I`.
#[derive(Debug, Clone)]
pub struct BlockMeasure<T> {
    w: VonNeumannAlgebra<T>,
    dims: BlockDims,
    overrides: BTreeMap<usize, Vec<Matrix<T>>>,
}

impl<T: Real> BlockMeasure<T> {
    pub fn canonical(w: VonNeumannAlgebra<T>, dims: BlockDims) -> Self {
        Self {
            w,
            dims,
            overrides: BTreeMap::new(),
        }
    }

    pub fn w(&self) -> &VonNeumannAlgebra<T> {
        &self.w
    }

    pub fn block_dim(&self, n: usize) -> usize {
        self.w.ambient_dim() * self.dims.get(n)
    }

    /// Replaces `Φₙ` by the given images of the algebra basis.
    pub fn set_block(&mut self, n: usize, images: Vec<Matrix<T>>) -> Result<()> {
        if images.len() != self.w.dim() {
            return Err(Error::DimMismatch {
                expected: self.w.dim(),
                actual: images.len(),
            });
        }
        let d = self.block_dim(n);
        if let Some(m) = images.iter().find(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::shape(format!("{d}x{d}"), m.shape_str()));
        }
        self.overrides.insert(n, images);
        Ok(())
    }

    pub fn stored_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.overrides.keys().copied()
    }

    /// `Φₙ(A)`.
    pub fn phi(&self, n: usize, a: &Matrix<T>) -> Result<Matrix<T>> {
        let r = self.w.membership_residual(a);
        if r > T::tolerances().alg {
            return Err(Error::AlgebraMismatch {
                residual: r.to_f64_lossy(),
            });
        }
        Ok(self.phi_unchecked(n, a))
    }

    fn phi_unchecked(&self, n: usize, a: &Matrix<T>) -> Matrix<T> {
        match self.overrides.get(&n) {
            Some(images) => {
                let d = self.block_dim(n);
                images
                    .iter()
                    .zip(self.w.coords(a))
                    .fold(Matrix::zeros(d, d), |acc, (m, c)| &acc + &m.scale(c))
            }
            None => a.kron(&Matrix::identity(self.dims.get(n))),
        }
    }

    /// `M({n})(id) = id` on every stored block.
    pub fn normalization_residual(&self) -> T {
        let id = Matrix::identity(self.w.ambient_dim());
        self.overrides
            .keys()
            .map(|n| self.phi_unchecked(*n, &id).rel_dist(&Matrix::identity(self.block_dim(*n))))
            .fold(T::zero(), T::max)
    }

    fn check_vector(&self, x: &DomainVector<T>) -> Result<()> {
        for (n, v) in x.blocks() {
            if v.len() != self.block_dim(*n) {
                return Err(Error::NotInD0(format!(
                    "block {n} has {} components, expected {}",
                    v.len(),
                    self.block_dim(*n)
                )));
            }
        }
        Ok(())
    }
}

/// `ψ(f, A)x = Σ_{n∈supp x} f(n) Φₙ(A) xₙ` on `x ∈ 𝒟₀`, exact on the finite
/// support.
pub fn psi_apply<T: Real>(f: &LabelFn, a: &Matrix<T>, m: &BlockMeasure<T>, x: &DomainVector<T>) -> Result<DomainVector<T>> {
    m.check_vector(x)?;
    let r = m.w.membership_residual(a);
    if r > T::tolerances().alg {
        return Err(Error::AlgebraMismatch {
            residual: r.to_f64_lossy(),
        });
    }
    x.map_blocks(|n, v| {
        let s = f.eval_as::<T>(n);
        Ok(m.phi_unchecked(n, a).matvec(v).into_iter().map(|c| c * s).collect())
    })
}

/// `ψ(f, S_ℓ(A))x` through the limiting sequences of the four positive
/// parts of `A`, compared with the exact value.
#[derive(Debug, Clone)]
pub struct PsiCertificate<T> {
    pub ell: usize,
    pub value: DomainVector<T>,
    /// `‖ψ(f, S_ℓ(A))x − ψ(f, A)x‖`
    pub residual: f64,
    /// A priori bound `Σ_parts (1/ℓ) Σₙ |f(n)| ‖xₙ‖`.
    pub bound: f64,
}

pub fn psi_limit<T: Real>(
    f: &LabelFn,
    a: &Matrix<T>,
    m: &BlockMeasure<T>,
    x: &DomainVector<T>,
    ell: usize,
) -> Result<PsiCertificate<T>> {
    let exact = psi_apply(f, a, m, x)?;
    let parts = star_decompose(a)?;
    let mut value = DomainVector::zero();
    for (phase, h) in parts.with_phases() {
        let seq = LimitingSequence::new(h, ell, ZetaRule::RightEndpoint)?;
        let term = seq.term(ell).expect("stored term");
        for (zeta, r) in term.pairs() {
            let piece = psi_apply(f, r.matrix(), m, x)?;
            value = value.add(&piece.scale(phase * C::new(zeta, T::zero())));
        }
    }
    let mass: f64 = x
        .blocks()
        .map(|(n, v)| f.eval(*n).norm() * vec_norm(v).to_f64_lossy())
        .sum();
    Ok(PsiCertificate {
        ell,
        residual: value.dist(&exact).to_f64_lossy(),
        value,
        bound: 4.0 * mass / ell as f64,
    })
}

/// `𝕀_M(F)x = Σᵢ ψ(fᵢ, Aᵢ)x` on `x ∈ 𝒟₀`.
pub fn i_m_apply<T: Real>(f: &UnboundedField<T>, m: &BlockMeasure<T>, x: &DomainVector<T>) -> Result<DomainVector<T>> {
    let mut out = x.scale(C::zero());
    for (g, a) in &f.terms {
        out = out.add(&psi_apply(g, a, m, x)?);
    }
    Ok(out)
}

/// `𝕀_M(F*)x`, which agrees with `𝕀_M(F)*x` on `𝒟₀`.
pub fn adjoint_on_d0<T: Real>(f: &UnboundedField<T>, m: &BlockMeasure<T>, x: &DomainVector<T>) -> Result<DomainVector<T>> {
    i_m_apply(&f.adjoint(), m, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DAlphaVerdict {
    Certified,
    SampledPass,
    Fail,
}

#[derive(Debug, Clone)]
pub struct DAlphaReport {
    pub verdict: DAlphaVerdict,
    /// `‖ρ(b)x‖ − α_K(b)‖x‖`, relative to `1 + α_K(b)‖x‖`, per probe
    pub probe_residuals: Vec<f64>,
    pub flags: Vec<String>,
}

impl DAlphaReport {
    pub fn worst(&self) -> f64 {
        self.probe_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Membership of `x` in `D_{α_K,ρ}`: exact certificate when the support of
/// `x` lies in `K`, otherwise sampled probes `b` (the unit, the generators and
/// random *-polynomials of degree at most 3).
pub fn d_alpha_check<T: Real>(
    x: &DomainVector<T>,
    model: &BlockModel<T>,
    k: &BorelSet,
    probes: usize,
    seed: u64,
) -> Result<DAlphaReport> {
    model.check_vector(x)?;
    let k_members = k.members().ok_or(Error::InfiniteSet)?;
    let r = model.generators.len();
    let mut polys = vec![StarPoly::one(r)];
    polys.extend((0..r).map(|i| StarPoly::var(r, i)));
    let mut rng = random::rng(seed);
    while polys.len() < probes.max(r + 1) {
        let b = StarPoly::random(r, 3, 4, &mut rng);
        polys.push(b);
    }
    polys.truncate(probes.max(1).max(r + 1));
    let xn = x.norm();
    let tol = T::tolerances().recon.to_f64_lossy();
    let mut residuals = Vec::with_capacity(polys.len());
    for b in &polys {
        let alpha = k_members
            .iter()
            .map(|n| model.character_value(b, *n).norm())
            .fold(T::zero(), T::max);
        let mut lhs = T::zero();
        for (n, v) in x.blocks() {
            lhs += vec_norm(&model.rho_block(b, *n)?.matvec(v)).powi(2);
        }
        let bound = alpha * xn;
        residuals.push(((lhs.sqrt() - bound) / (T::one() + bound)).to_f64_lossy());
    }
    let mut flags = vec!["reading: b ranges over the algebra, |f_b| as modulus".to_string()];
    let sampled_ok = residuals.iter().all(|r| *r <= tol);
    let verdict = if x.support().is_subset(k) && model.corruption.is_none() {
        DAlphaVerdict::Certified
    } else if sampled_ok {
        flags.push(format!("sampled: {} probes", residuals.len()));
        DAlphaVerdict::SampledPass
    } else {
        DAlphaVerdict::Fail
    };
    if verdict == DAlphaVerdict::Certified && !sampled_ok {
        return Err(Error::Format("certified vector violates a probe bound".into()));
    }
    Ok(DAlphaReport {
        verdict,
        probe_residuals: residuals,
        flags,
    })
}

/// Blockwise normality `‖[Bₙ, Bₙ*]‖_F / (1 + ‖Bₙ‖_F²)` of each block action,
/// reported with the worst block.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    pub residuals: Vec<(usize, f64)>,
}

impl IntegrabilityReport {
    pub fn worst(&self) -> (usize, f64) {
        self.residuals
            .iter()
            .copied()
            .fold((0, 0.0), |acc, r| if r.1 > acc.1 || r.1.is_nan() { r } else { acc })
    }

    pub fn check(&self, name: &str) -> Check {
        let (n, r) = self.worst();
        Check::new(name, r, <f64 as Real>::tolerances().recon).flag(format!("worst block {n}"))
    }
}

fn normality<T: Real>(b: &Matrix<T>) -> f64 {
    let c = b.commutator(&b.adjoint()).frob_norm();
    (c / (T::one() + b.frob_norm().powi(2))).to_f64_lossy()
}

/// Normality of the block action `Bₙ = Σ fᵢ(n) (Aᵢ ⊗ I)` of a field.
pub fn integrability_check<T: Real>(model: &BlockModel<T>, f: &UnboundedField<T>, horizon: usize) -> IntegrabilityReport {
    let residuals = (0..horizon.min(model.horizon()))
        .map(|n| {
            let d = model.block_dim(n);
            let b = f
                .terms
                .iter()
                .fold(Matrix::zeros(d, d), |acc, (g, a)| &acc + &model.lift(a, n).scale(g.eval_as(n)));
            (n, normality(&b))
        })
        .collect();
    IntegrabilityReport { residuals }
}

/// Normality of every generator action `ρ(bᵢ ⊗ P)` on each block.
pub fn representation_integrability<T: Real>(model: &BlockModel<T>, p: &Matrix<T>, horizon: usize) -> IntegrabilityReport {
    let residuals = (0..horizon.min(model.horizon()))
        .map(|n| {
            let lifted = model.lift(p, n);
            let worst = (0..model.generators.len())
                .map(|i| normality(&(&model.generator_block(i, n) * &lifted)))
                .fold(0.0, f64::max);
            (n, worst)
        })
        .collect();
    IntegrabilityReport { residuals }
}

/// Inner-product, additivity and product-law residuals on one sample.
pub fn d0_laws<T: Real>(
    m: &BlockMeasure<T>,
    f: &UnboundedField<T>,
    g: &UnboundedField<T>,
    alpha: C<T>,
    beta: C<T>,
    x: &DomainVector<T>,
    y: &DomainVector<T>,
) -> Result<[f64; 3]> {
    let fy = i_m_apply(f, m, y)?;
    let fstar_x = adjoint_on_d0(f, m, x)?;
    let lhs = fy.inner(x);
    let rhs = y.inner(&fstar_x);
    let scale = T::one() + fy.norm() * x.norm() + y.norm() * fstar_x.norm();
    let adjoint = ((lhs - rhs).norm() / scale).to_f64_lossy();

    let fx = i_m_apply(f, m, x)?;
    let gx = i_m_apply(g, m, x)?;
    let combo = f.scale(alpha).add(&g.scale(beta));
    let lin = i_m_apply(&combo, m, x)?;
    let expect = fx.scale(alpha).add(&gx.scale(beta));
    let additive = (lin.dist(&expect) / (T::one() + expect.norm())).to_f64_lossy();

    let fg = i_m_apply(&f.mul(g), m, x)?;
    let nested = i_m_apply(f, m, &gx)?;
    let product = (fg.dist(&nested) / (T::one() + nested.norm())).to_f64_lossy();
    Ok([adjoint, additive, product])
}

/// `‖ρ(b⊗A)x‖ ≤ ‖A‖ ‖ρ(b⊗id)x‖`, relative to `1 + rhs`.
pub fn domain_inclusion_residual<T: Real>(model: &BlockModel<T>, b: &StarPoly<T>, a: &Matrix<T>, x: &DomainVector<T>) -> Result<f64> {
    let id = Matrix::identity(model.w.ambient_dim());
    let lhs = model.rho_apply(&RepField::single(b.clone(), a.clone()), x)?.norm();
    let rhs = op_norm(a)? * model.rho_apply(&RepField::single(b.clone(), id), x)?.norm();
    Ok(((lhs - rhs) / (T::one() + rhs)).to_f64_lossy())
}

/// `|⟨ρ(b⊗A)x, x⟩| ≤ ‖A‖ ‖ρ(b⊗id)x‖ ‖x‖`, relative to `1 + rhs`.
pub fn functional_bound_residual<T: Real>(model: &BlockModel<T>, b: &StarPoly<T>, a: &Matrix<T>, x: &DomainVector<T>) -> Result<f64> {
    let id = Matrix::identity(model.w.ambient_dim());
    let lhs = model.rho_apply(&RepField::single(b.clone(), a.clone()), x)?.inner(x).norm();
    let rhs = op_norm(a)? * model.rho_apply(&RepField::single(b.clone(), id), x)?.norm() * x.norm();
    Ok(((lhs - rhs) / (T::one() + rhs)).to_f64_lossy())
}

/// Random field with `terms` summands: polynomial, exponential or bounded
/// label functions times random elements of `w`.
pub fn random_field<T: Real>(w: &VonNeumannAlgebra<T>, terms: usize, rng: &mut Rng64) -> UnboundedField<T> {
    let terms = (0..terms)
        .map(|_| {
            let f = match rng.random_range(0..4) {
                0 => LabelFn::poly(&[random::normal(rng), random::normal(rng), 0.1 * random::normal::<f64>(rng)]),
                1 => LabelFn::ExpIndex {
                    scale: random::complex_normal(rng),
                    base: random::uniform(rng, 0.5, 1.2),
                },
                2 => LabelFn::Reciprocal {
                    scale: random::complex_normal(rng),
                    shift: 1.0,
                },
                _ => LabelFn::Const(random::complex_normal(rng)),
            };
            (f, w.random_element(rng))
        })
        .collect();
    OperatorField { terms }
}

/// Representation residuals `‖ρ(F)x − 𝕀_M(f_F)x‖ / (1 + ‖ρ(F)x‖)`.
pub fn representation_residual<T: Real>(
    model: &BlockModel<T>,
    m: &BlockMeasure<T>,
    field: &RepField<T>,
    x: &DomainVector<T>,
) -> Result<f64> {
    let lhs = model.rho_apply(field, x)?;
    let rhs = i_m_apply(&model.label_field(field), m, x)?;
    Ok((lhs.dist(&rhs) / (T::one() + lhs.norm())).to_f64_lossy())
}

/// Support of `E_{x,x}` with the check that it is finite and inside `k`.
pub fn compact_support_check<T: Real>(x: &DomainVector<T>, k: &BorelSet) -> Check {
    let support: BTreeSet<usize> = x.scalar_measure().keys().copied().collect();
    let outside = support.iter().filter(|n| !k.contains(**n)).count();
    Check::new("compact-support", outside as f64, 0.0)
}
