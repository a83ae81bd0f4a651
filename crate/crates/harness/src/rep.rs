//! Representations `ρ` of `𝔅 ⊗ 𝒲₁` given as black boxes on elementary
//! tensors `b ⊗ A`, and bookkeeping of character labels.

use std::sync::Arc;

use specrep::labelfn::{LabelFn, C64};
use specrep::star::StarPoly;
use specrep::{ComplexMatrix, NonNegSpectralMeasure, VonNeumannAlgebra};

/// `ρ(b ⊗ A) = Σ_x f_b(χ_x) Φ_x(A)`, optionally with the image of one
/// generator scaled by `1 + ε` (which breaks multiplicativity).
#[derive(Debug, Clone)]
pub struct IntegralRep {
    measure: NonNegSpectralMeasure,
    characters: Vec<Vec<C64>>,
    corruption: Option<(usize, f64)>,
}

impl IntegralRep {
    pub fn new(measure: NonNegSpectralMeasure, characters: Vec<Vec<C64>>) -> Self {
        Self {
            measure,
            characters,
            corruption: None,
        }
    }

    pub fn corrupted(mut self, generator: usize, eps: f64) -> Self {
        self.corruption = Some((generator, eps));
        self
    }

    pub fn nvars(&self) -> usize {
        self.characters.first().map_or(0, Vec::len)
    }

    pub fn w1(&self) -> &VonNeumannAlgebra {
        self.measure.w1()
    }

    pub fn target_dim(&self) -> usize {
        self.measure.target_dim()
    }

    pub fn characters(&self) -> &[Vec<C64>] {
        &self.characters
    }

    pub fn apply(&self, b: &StarPoly<f64>, a: &ComplexMatrix) -> specrep::Result<ComplexMatrix> {
        let k = self.target_dim();
        let mut out = ComplexMatrix::zeros(k, k);
        for x in self.measure.labels() {
            let v = b.eval_scalar(&self.characters[x]);
            if v.norm() == 0.0 {
                continue;
            }
            out = &out + &self.measure.phi(x, a)?.scale(v);
        }
        if let Some((i, eps)) = self.corruption {
            if *b == StarPoly::var(self.nvars(), i) {
                out = out.scale_real(1.0 + eps);
            }
        }
        Ok(out)
    }
}

/// Assigns labels to character tuples, merging tuples within a relative
/// tolerance. Seeded with the oracle's points so labels line up.
#[derive(Debug, Clone, Default)]
pub struct CharacterIndex {
    points: Vec<Vec<C64>>,
}

impl CharacterIndex {
    pub const TOL: f64 = 1e-6;

    pub fn new(points: Vec<Vec<C64>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<C64>] {
        &self.points
    }

    pub fn find(&self, values: &[C64]) -> Option<usize> {
        self.points.iter().position(|p| {
            p.iter()
                .zip(values)
                .all(|(a, b)| (a - b).norm() <= Self::TOL * (1.0 + a.norm()))
        })
    }

    pub fn label(&mut self, values: &[C64]) -> usize {
        match self.find(values) {
            Some(i) => i,
            None => {
                self.points.push(values.to_vec());
                self.points.len() - 1
            }
        }
    }

    /// `x ↦ f_b(χ_x)` on the indexed labels.
    pub fn labelfn(&self, b: &StarPoly<f64>) -> LabelFn {
        let table: Arc<Vec<C64>> = Arc::new(self.points.iter().map(|p| b.eval_scalar(p)).collect());
        let bound = table.iter().map(|v| v.norm()).fold(0.0, f64::max);
        LabelFn::custom("character", Some(bound), move |x| table.get(x).copied().unwrap_or_default())
    }
}
