//! Complex functions on the labels of a discrete space, possibly unbounded.
//!
//! Functions are intensional: only finitely many values are ever evaluated,
//! and boundedness or growth is known from the representation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::measure::BorelSet;
use crate::scalar::{Real, C};
use crate::star::StarPoly;

pub type C64 = Complex<f64>;

type CustomFn = Arc<dyn Fn(usize) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum LabelFn {
    Const(C64),
    /// `Σⱼ cⱼ kʲ`
    Poly(Vec<C64>),
    /// `scale · baseᵏ`
    ExpIndex { scale: C64, base: f64 },
    /// `scale / (k + shift)` with `shift > 0`
    Reciprocal { scale: C64, shift: f64 },
    Indicator(BorelSet),
    /// A *-polynomial applied to the values of other functions.
    Compose { poly: StarPoly<f64>, args: Vec<LabelFn> },
    Product(Vec<LabelFn>),
    Sum(Vec<LabelFn>),
    Scaled(C64, Box<LabelFn>),
    Conj(Box<LabelFn>),
    Custom { name: String, f: CustomFn, bound: Option<f64> },
}

/// Eventual behaviour of `|f(k)|` relative to a level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `|f(k)| ≤ n` for all `k ≥ k0`
    Below(usize),
    /// `|f(k)| > n` for all `k ≥ k0`
    Above(usize),
}

impl LabelFn {
    pub fn constant(c: f64) -> Self {
        LabelFn::Const(Complex::new(c, 0.0))
    }

    pub fn poly(coefficients: &[f64]) -> Self {
        LabelFn::Poly(coefficients.iter().map(|c| Complex::new(*c, 0.0)).collect())
    }

    /// `f(k) = k`.
    pub fn index() -> Self {
        Self::poly(&[0.0, 1.0])
    }

    pub fn indicator(set: BorelSet) -> Self {
        LabelFn::Indicator(set)
    }

    pub fn custom(name: impl Into<String>, bound: Option<f64>, f: impl Fn(usize) -> C64 + Send + Sync + 'static) -> Self {
        LabelFn::Custom {
            name: name.into(),
            f: Arc::new(f),
            bound,
        }
    }

    pub fn times(&self, other: &LabelFn) -> Self {
        LabelFn::Product(vec![self.clone(), other.clone()])
    }

    pub fn plus(&self, other: &LabelFn) -> Self {
        LabelFn::Sum(vec![self.clone(), other.clone()])
    }

    pub fn scaled(&self, c: C64) -> Self {
        LabelFn::Scaled(c, Box::new(self.clone()))
    }

    pub fn conj(&self) -> Self {
        LabelFn::Conj(Box::new(self.clone()))
    }

    pub fn eval(&self, k: usize) -> C64 {
        match self {
            LabelFn::Const(c) => *c,
            LabelFn::Poly(cs) => {
                let x = k as f64;
                cs.iter().rev().fold(C64::zero(), |acc, c| acc * x + c)
            }
            LabelFn::ExpIndex { scale, base } => scale * base.powf(k as f64),
            LabelFn::Reciprocal { scale, shift } => scale / (k as f64 + shift),
            LabelFn::Indicator(set) => {
                if set.contains(k) {
                    C64::one()
                } else {
                    C64::zero()
                }
            }
            LabelFn::Compose { poly, args } => {
                let vals: Vec<C64> = args.iter().map(|a| a.eval(k)).collect();
                poly.eval_scalar(&vals)
            }
            LabelFn::Product(fs) => fs.iter().fold(C64::one(), |acc, f| acc * f.eval(k)),
            LabelFn::Sum(fs) => fs.iter().fold(C64::zero(), |acc, f| acc + f.eval(k)),
            LabelFn::Scaled(c, f) => c * f.eval(k),
            LabelFn::Conj(f) => f.eval(k).conj(),
            LabelFn::Custom { f, .. } => f(k),
        }
    }

    pub fn eval_as<T: Real>(&self, k: usize) -> C<T> {
        let v = self.eval(k);
        Complex::new(T::lit(v.re), T::lit(v.im))
    }

    /// A global bound on `|f|` when one is known from the representation.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            LabelFn::Const(c) => Some(c.norm()),
            LabelFn::Poly(cs) => {
                let nonzero_tail = cs.iter().skip(1).any(|c| !c.is_zero());
                (!nonzero_tail).then(|| cs.first().map_or(0.0, |c| c.norm()))
            }
            LabelFn::ExpIndex { scale, base } => (base.abs() <= 1.0 || scale.is_zero()).then(|| scale.norm()),
            LabelFn::Reciprocal { scale, shift } => Some(scale.norm() / shift),
            LabelFn::Indicator(_) => Some(1.0),
            LabelFn::Compose { poly, args } => {
                let bounds: Option<Vec<f64>> = args.iter().map(LabelFn::sup_bound).collect();
                let bounds = bounds?;
                Some(poly.terms().fold(0.0, |acc, (m, c)| {
                    acc + c.norm()
                        * m.iter()
                            .zip(&bounds)
                            .map(|(&(a, b), x)| x.powi((a + b) as i32))
                            .product::<f64>()
                }))
            }
            LabelFn::Product(fs) => fs.iter().map(LabelFn::sup_bound).product(),
            LabelFn::Sum(fs) => fs.iter().map(LabelFn::sup_bound).sum(),
            LabelFn::Scaled(c, f) => f.sup_bound().map(|b| b * c.norm()),
            LabelFn::Conj(f) => f.sup_bound(),
            LabelFn::Custom { bound, .. } => *bound,
        }
    }

    /// Certified eventual comparison of `|f|` with the level `n`, when the
    /// representation allows one.
    pub fn tail(&self, n: f64) -> Option<Tail> {
        if let Some(b) = self.sup_bound() {
            if b <= n {
                return Some(Tail::Below(0));
            }
        }
        match self {
            LabelFn::Const(c) => Some(if c.norm() <= n { Tail::Below(0) } else { Tail::Above(0) }),
            LabelFn::Poly(cs) => poly_tail(cs, n),
            LabelFn::ExpIndex { scale, base } => {
                let s = scale.norm();
                let b = base.abs();
                if b > 1.0 {
                    // s bᵏ > n once k > log(n/s)/log b
                    let k0 = ((n / s).ln() / b.ln()).floor().max(-1.0) + 1.0;
                    Some(Tail::Above(k0 as usize))
                } else if n <= 0.0 {
                    (b == 0.0).then_some(Tail::Below(1))
                } else {
                    // s bᵏ ≤ n once k ≥ log(n/s)/log b
                    let k0 = ((n / s).ln() / b.ln()).ceil().max(0.0);
                    Some(Tail::Below(k0 as usize))
                }
            }
            LabelFn::Reciprocal { scale, shift } => {
                if n <= 0.0 {
                    return Some(Tail::Above(0));
                }
                let k0 = (scale.norm() / n - shift).ceil().max(0.0);
                Some(Tail::Below(k0 as usize))
            }
            LabelFn::Indicator(set) => {
                let (inside_tail, k0) = match set {
                    BorelSet::Finite(s) => (false, s.iter().next_back().map_or(0, |m| m + 1)),
                    BorelSet::Cofinite(c) => (true, c.iter().next_back().map_or(0, |m| m + 1)),
                };
                Some(if !inside_tail || n >= 1.0 { Tail::Below(k0) } else { Tail::Above(k0) })
            }
            LabelFn::Scaled(c, f) => {
                if c.is_zero() {
                    Some(if n >= 0.0 { Tail::Below(0) } else { Tail::Above(0) })
                } else {
                    f.tail(n / c.norm())
                }
            }
            LabelFn::Conj(f) => f.tail(n),
            LabelFn::Compose { poly, args } => {
                // a single monomial in one unbounded argument grows with it
                let mut terms = poly.terms();
                let (m, c) = terms.next()?;
                if terms.next().is_some() || c.is_zero() {
                    return None;
                }
                let active: Vec<usize> = m
                    .iter()
                    .enumerate()
                    .filter(|(_, (a, b))| a + b > 0)
                    .map(|(i, _)| i)
                    .collect();
                if active.len() != 1 {
                    return None;
                }
                let i = active[0];
                let d = (m[i].0 + m[i].1) as f64;
                let level = (n / c.norm()).max(0.0).powf(1.0 / d);
                args[i].tail(level)
            }
            LabelFn::Product(_) | LabelFn::Sum(_) | LabelFn::Custom { .. } => None,
        }
    }
}

/// Lower bound `|p(k)| ≥ kᵈ⁻¹ (|c_d| k − S)` with `S = Σ_{j<d} |cⱼ|`, valid for
/// `k ≥ 1`; it exceeds `n` once `|c_d| k − S > n`.
fn poly_tail(cs: &[C64], n: f64) -> Option<Tail> {
    let d = cs.iter().rposition(|c| !c.is_zero())?;
    if d == 0 {
        return Some(if cs[0].norm() <= n { Tail::Below(0) } else { Tail::Above(0) });
    }
    let lead = cs[d].norm();
    let rest: f64 = cs[..d].iter().map(|c| c.norm()).sum();
    let k0 = ((n.max(0.0) + rest) / lead).floor() + 1.0;
    Some(Tail::Above(k0.max(1.0) as usize))
}

impl fmt::Debug for LabelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelFn::Const(c) => write!(f, "Const({c})"),
            LabelFn::Poly(cs) => f.debug_tuple("Poly").field(cs).finish(),
            LabelFn::ExpIndex { scale, base } => write!(f, "ExpIndex({scale}·{base}^k)"),
            LabelFn::Reciprocal { scale, shift } => write!(f, "Reciprocal({scale}/(k+{shift}))"),
            LabelFn::Indicator(s) => f.debug_tuple("Indicator").field(s).finish(),
            LabelFn::Compose { poly, args } => f.debug_struct("Compose").field("poly", poly).field("args", args).finish(),
            LabelFn::Product(fs) => f.debug_tuple("Product").field(fs).finish(),
            LabelFn::Sum(fs) => f.debug_tuple("Sum").field(fs).finish(),
            LabelFn::Scaled(c, g) => f.debug_tuple("Scaled").field(c).field(g).finish(),
            LabelFn::Conj(g) => f.debug_tuple("Conj").field(g).finish(),
            LabelFn::Custom { name, bound, .. } => write!(f, "Custom({name}, bound={bound:?})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_check(f: &LabelFn, n: f64, upto: usize) {
        match f.tail(n) {
            Some(Tail::Below(k0)) => {
                for k in k0..upto {
                    assert!(f.eval(k).norm() <= n, "{f:?} at {k}");
                }
            }
            Some(Tail::Above(k0)) => {
                for k in k0..upto {
                    assert!(f.eval(k).norm() > n, "{f:?} at {k}");
                }
            }
            None => {}
        }
    }

    #[test]
    fn evaluations() {
        assert_eq!(LabelFn::poly(&[1.0, 0.0, 2.0]).eval(3), Complex::new(19.0, 0.0));
        let e = LabelFn::ExpIndex { scale: Complex::new(2.0, 0.0), base: 0.5 };
        assert_eq!(e.eval(3), Complex::new(0.25, 0.0));
        let g = LabelFn::Poly(vec![Complex::new(0.0, 1.0)]);
        assert_eq!(g.conj().eval(0), Complex::new(0.0, -1.0));
        assert_eq!(LabelFn::indicator(BorelSet::of([2])).eval(2), Complex::new(1.0, 0.0));
    }

    #[test]
    fn bounds() {
        assert_eq!(LabelFn::index().sup_bound(), None);
        assert_eq!(LabelFn::constant(-3.0).sup_bound(), Some(3.0));
        let r = LabelFn::Reciprocal { scale: Complex::new(1.0, 0.0), shift: 1.0 };
        assert_eq!(r.sup_bound(), Some(1.0));
        assert_eq!(r.times(&LabelFn::constant(2.0)).sup_bound(), Some(2.0));
    }

    #[test]
    fn tails_are_sound() {
        let fs = [
            LabelFn::index(),
            LabelFn::poly(&[3.0, -2.0, 0.5]),
            LabelFn::poly(&[0.0, 0.0, 1.0]),
            LabelFn::ExpIndex { scale: Complex::new(0.1, 0.0), base: 2.0 },
            LabelFn::ExpIndex { scale: Complex::new(40.0, 0.0), base: 0.5 },
            LabelFn::Reciprocal { scale: Complex::new(7.0, 0.0), shift: 0.5 },
            LabelFn::indicator(BorelSet::of([3, 9]).complement()),
            LabelFn::index().scaled(Complex::new(0.0, 2.0)),
            LabelFn::Compose { poly: StarPoly::var(1, 0).mul(&StarPoly::var_star(1, 0)), args: vec![LabelFn::index()] },
        ];
        for f in &fs {
            assert!(f.tail(5.0).is_some(), "{f:?}");
            for n in [0.0, 0.5, 1.0, 5.0, 9.0, 100.0] {
                brute_check(f, n, 400);
            }
        }
    }
}
