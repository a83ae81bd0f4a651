//! Seeded scenario generation. Every scenario starts from a ground-truth
//! measure and induces the representation from it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use specrep::algebra::bicommutant;
use specrep::labelfn::C64;
use specrep::measure::DiscreteSpace;
use specrep::random::{self, Rng64};
use specrep::unbounded::{BlockDims, GeneratorRule};
use specrep::{BlockModel, ComplexMatrix, NonNegSpectralMeasure, SpectralMeasure, VonNeumannAlgebra};

use crate::error::{HarnessError, HarnessResult};
use crate::rep::IntegralRep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    A,
    B,
    Cprime,
    D,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::A, Kind::B, Kind::Cprime, Kind::D];

    pub fn tag(self) -> &'static str {
        match self {
            Kind::A => "a",
            Kind::B => "b",
            Kind::Cprime => "c",
            Kind::D => "d",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Kind::A => 0xA1,
            Kind::B => 0xB2,
            Kind::Cprime => 0xC3,
            Kind::D => 0xD4,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Kind {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Kind::A),
            "b" => Ok(Kind::B),
            "c" | "cprime" | "c'" => Ok(Kind::Cprime),
            "d" => Ok(Kind::D),
            other => Err(HarnessError::Usage(format!("unknown scenario kind {other:?}"))),
        }
    }
}

/// Size caps: `h` bounds the algebra dimension, `k` the represented space,
/// `points` the size of `X` and `blocks` the block-model horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub h: usize,
    pub k: usize,
    pub points: usize,
    pub blocks: usize,
}

impl Caps {
    pub const LIMIT: Caps = Caps {
        h: 4,
        k: 16,
        points: 8,
        blocks: 64,
    };

    pub fn validate(&self) -> HarnessResult<()> {
        let checks = [
            ("h", self.h, Self::LIMIT.h),
            ("k", self.k, Self::LIMIT.k),
            ("points", self.points, Self::LIMIT.points),
            ("blocks", self.blocks, Self::LIMIT.blocks),
        ];
        for (what, value, limit) in checks {
            if value > limit {
                return Err(HarnessError::CapExceeded { what, value, limit });
            }
            if value == 0 {
                return Err(HarnessError::Usage(format!("cap {what} must be positive")));
            }
        }
        Ok(())
    }
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            h: 4,
            k: 16,
            points: 6,
            blocks: 64,
        }
    }
}

impl FromStr for Caps {
    type Err = HarnessError;

    /// `h=4,k=16,points=6,blocks=64`, any subset.
    fn from_str(s: &str) -> HarnessResult<Self> {
        let mut caps = Caps::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("cap {part:?} is not key=value")))?;
            let value: usize = value
                .parse()
                .map_err(|_| HarnessError::Usage(format!("cap {key} needs an integer, got {value:?}")))?;
            match key {
                "h" => caps.h = value,
                "k" => caps.k = value,
                "points" | "x" => caps.points = value,
                "blocks" => caps.blocks = value,
                _ => return Err(HarnessError::Usage(format!("unknown cap {key:?}"))),
            }
        }
        caps.validate()?;
        Ok(caps)
    }
}

/// Commuting normal generator images with the spectral measure they come from.
#[derive(Debug, Clone)]
pub struct ScenarioA {
    pub w: VonNeumannAlgebra,
    pub generators: Vec<ComplexMatrix>,
    pub characters: Vec<Vec<C64>>,
    pub oracle: SpectralMeasure,
}

/// Representation `ρ(F) = ∫ f_F dM` induced by a tensor-model NNSM.
#[derive(Debug, Clone)]
pub struct ScenarioB {
    pub rep: IntegralRep,
    pub oracle: NonNegSpectralMeasure,
}

#[derive(Debug, Clone)]
pub enum Body {
    A(ScenarioA),
    B(ScenarioB),
    Block(BlockModel),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub seed: u64,
    pub kind: Kind,
    pub body: Body,
}

pub fn scenario_id(kind: Kind, seed: u64) -> String {
    format!("{kind}-{seed}")
}

pub fn gen_scenario(kind: Kind, seed: u64, caps: &Caps) -> HarnessResult<Scenario> {
    caps.validate()?;
    let mut rng = random::rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kind.salt());
    let body = match kind {
        Kind::A => Body::A(gen_a(&mut rng, caps)?),
        Kind::B => Body::B(gen_b(&mut rng, caps)?),
        Kind::Cprime => Body::Block(gen_block(&mut rng, caps, false)?),
        Kind::D => Body::Block(gen_block(&mut rng, caps, true)?),
    };
    Ok(Scenario {
        id: scenario_id(kind, seed),
        seed,
        kind,
        body,
    })
}

/// Character tuples for `n` points and `r` generators, pairwise separated.
/// Each generator is general complex, real, or of unit modulus.
pub fn random_characters(rng: &mut Rng64, n: usize, r: usize) -> Vec<Vec<C64>> {
    let styles: Vec<u8> = (0..r).map(|_| rng.random_range(0..3)).collect();
    loop {
        let chars: Vec<Vec<C64>> = (0..n)
            .map(|_| {
                styles
                    .iter()
                    .map(|s| match s {
                        0 => random::complex_normal(rng),
                        1 => C64::new(random::normal(rng), 0.0),
                        _ => C64::from_polar(1.0, random::uniform(rng, 0.0, std::f64::consts::TAU)),
                    })
                    .collect()
            })
            .collect();
        let separated = (0..n).all(|i| {
            (i + 1..n).all(|j| chars[i].iter().zip(&chars[j]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) > 0.1)
        });
        if separated {
            return chars;
        }
    }
}

/// Splits `0..size` into `n` labelled groups, some possibly empty.
fn random_partition(rng: &mut Rng64, size: usize, n: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n];
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(rng);
    for (i, j) in order.into_iter().enumerate() {
        let g = if i < n { i } else { rng.random_range(0..n) };
        groups[g].push(j);
    }
    groups
}

fn gen_a(rng: &mut Rng64, caps: &Caps) -> HarnessResult<ScenarioA> {
    let k = rng.random_range(1..=caps.h);
    let n = rng.random_range(1..=caps.points);
    let r = rng.random_range(1..=3);
    let characters = random_characters(rng, n, r);
    let u = random::unitary::<f64>(rng, k);
    let groups = random_partition(rng, k, n);
    let atoms: BTreeMap<usize, ComplexMatrix> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(x, g)| {
            let p = g.iter().fold(ComplexMatrix::zeros(k, k), |acc, j| {
                let col = u.column(*j);
                &acc + &ComplexMatrix::outer(&col, &col)
            });
            (x, p)
        })
        .collect();
    let oracle = SpectralMeasure::new(DiscreteSpace::range(n), k, atoms, None)?;
    let generators: Vec<ComplexMatrix> = (0..r)
        .map(|i| {
            oracle
                .atoms()
                .iter()
                .fold(ComplexMatrix::zeros(k, k), |acc, (x, p)| &acc + &p.matrix().scale(characters[*x][i]))
        })
        .collect();
    let w = if rng.random_bool(0.5) {
        VonNeumannAlgebra::full(k)
    } else {
        bicommutant(&generators, k)?
    };
    Ok(ScenarioA {
        w,
        generators,
        characters,
        oracle,
    })
}

/// `Φ_x(A) = U(A ⊗ D_x)U*` with disjoint diagonal indicators `D_x`.
pub fn tensor_model(
    w1: VonNeumannAlgebra,
    u: &ComplexMatrix,
    groups: &[Vec<usize>],
    multiplicity: usize,
) -> HarnessResult<NonNegSpectralMeasure> {
    let k = w1.ambient_dim() * multiplicity;
    let space = DiscreteSpace::range(groups.len());
    let m = NonNegSpectralMeasure::from_fn(space, w1, k, 0..groups.len(), |x, a| {
        let d: Vec<f64> = (0..multiplicity)
            .map(|i| if groups[x].contains(&i) { 1.0 } else { 0.0 })
            .collect();
        &(u * &a.kron(&ComplexMatrix::real_diag(&d))) * &u.adjoint()
    })?;
    Ok(m)
}

fn gen_b(rng: &mut Rng64, caps: &Caps) -> HarnessResult<ScenarioB> {
    let w1 = match rng.random_range(0..5) {
        0 => VonNeumannAlgebra::scalars(1),
        1 | 2 if caps.h >= 2 => VonNeumannAlgebra::diagonals(rng.random_range(2..=caps.h)),
        _ if caps.h >= 2 => VonNeumannAlgebra::full(2),
        _ => VonNeumannAlgebra::scalars(1),
    };
    let h = w1.ambient_dim();
    if h > caps.k {
        return Err(HarnessError::CapExceeded {
            what: "k",
            value: h,
            limit: caps.k,
        });
    }
    let multiplicity = rng.random_range(1..=caps.k / h);
    let n = rng.random_range(1..=caps.points);
    let r = rng.random_range(1..=3);
    let characters = random_characters(rng, n, r);
    let u = random::unitary::<f64>(rng, h * multiplicity);
    let groups = random_partition(rng, multiplicity, n);
    let oracle = tensor_model(w1, &u, &groups, multiplicity)?;
    Ok(ScenarioB {
        rep: IntegralRep::new(oracle.clone(), characters),
        oracle,
    })
}

fn random_rule(rng: &mut Rng64) -> GeneratorRule {
    match rng.random_range(0..4) {
        0 => {
            let degree = rng.random_range(1..=2);
            let coefficients = (0..=degree).map(|_| (random::normal::<f64>(rng) * 4.0).round() / 4.0).collect::<Vec<_>>();
            let mut coefficients = coefficients;
            if coefficients[degree] == 0.0 {
                coefficients[degree] = 1.0;
            }
            GeneratorRule::Poly { coefficients }
        }
        1 => GeneratorRule::ExpIndex {
            scale: random::uniform(rng, 0.5, 2.0),
            base: random::uniform(rng, 0.5, 1.15),
        },
        2 => GeneratorRule::Reciprocal {
            scale: random::uniform(rng, 0.5, 2.0),
            shift: 1.0,
        },
        _ => GeneratorRule::BoundedConst {
            value: random::normal(rng),
        },
    }
}

/// Block model with block dimension at most 3; kind D varies the algebra.
fn gen_block(rng: &mut Rng64, caps: &Caps, with_algebra: bool) -> HarnessResult<BlockModel> {
    let w = if with_algebra {
        match rng.random_range(0..4) {
            0 => VonNeumannAlgebra::scalars(1),
            1 if caps.h >= 2 => VonNeumannAlgebra::diagonals(rng.random_range(2..=caps.h.min(3))),
            2 if caps.h >= 2 => VonNeumannAlgebra::full(2),
            _ if caps.h >= 3 => VonNeumannAlgebra::diagonals(3),
            _ => VonNeumannAlgebra::scalars(1),
        }
    } else {
        VonNeumannAlgebra::scalars(1)
    };
    let mmax = (3 / w.ambient_dim()).max(1);
    let prefix = (0..rng.random_range(0..4)).map(|_| rng.random_range(1..=mmax)).collect();
    let repeat = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=mmax)).collect();
    let r = rng.random_range(1..=2);
    let rules = (0..r).map(|_| random_rule(rng)).collect();
    Ok(BlockModel::from_rules(caps.blocks, BlockDims { prefix, repeat }, rules, w)?)
}
