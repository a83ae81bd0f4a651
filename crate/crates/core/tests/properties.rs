use std::collections::BTreeMap;

use proptest::prelude::*;
use specrep::algebra::{bicommutant, commutant_of, enumerate_projections_abelian, LinearExtender};
use specrep::joint::joint_diagonalize;
use specrep::labelfn::{LabelFn, C64};
use specrep::limiting::{limiting_sequence, LimitingSequence, ZetaRule};
use specrep::matrix::MatrixDoc;
use specrep::measure::{BorelSet, DiscreteSpace};
use specrep::random;
use specrep::unbounded::spectral_integral_apply;
use specrep::spectral::{eig_hermitian, positive_sqrt, star_decompose, Hermitian};
use specrep::{ComplexMatrix, DomainVector, Real, SpectralMeasure, VonNeumannAlgebra};

fn tol() -> specrep::Tolerances<f64> {
    f64::tolerances()
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frob_norm() / (1.0 + b.frob_norm())
}

/// Random measure on `{0..points}` built from a random unitary frame.
fn random_measure(seed: u64, dim: usize, points: usize) -> SpectralMeasure {
    let mut rng = random::rng(seed);
    let u = random::unitary::<f64>(&mut rng, dim);
    let mut atoms = BTreeMap::new();
    for j in 0..dim {
        let x = (seed as usize + j * 7) % points;
        let v = u.column(j);
        let p = ComplexMatrix::outer(&v, &v);
        let entry = atoms.entry(x).or_insert_with(|| ComplexMatrix::zeros(dim, dim));
        *entry = &*entry + &p;
    }
    SpectralMeasure::new(DiscreteSpace::range(points), dim, atoms, None).unwrap()
}

fn random_domain_vector(seed: u64, blocks: usize) -> DomainVector {
    let mut rng = random::rng(seed);
    let mut x = DomainVector::zero();
    for n in 0..blocks {
        if random::uniform::<f64>(&mut rng, 0.0, 1.0) < 0.6 {
            x.insert(n, random::vector(&mut rng, 1 + n % 3));
        }
    }
    x
}

fn label_set(bits: u16) -> BorelSet {
    BorelSet::of((0..12).filter(|i| bits & (1 << i) != 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_reconstruction(seed in any::<u64>(), n in 1usize..=8, scale in prop::sample::select(vec![1.0, 1e6])) {
        let mut rng = random::rng(seed);
        let a = random::hermitian::<f64>(&mut rng, n).scale_real(scale);
        let sd = eig_hermitian(&Hermitian::new(a.clone()).unwrap()).unwrap();
        prop_assert!(rel(&sd.reconstruct(), &a) <= tol().recon);
        let sum = sd.pairs.iter().fold(ComplexMatrix::zeros(n, n), |acc, (_, p)| &acc + p.matrix());
        prop_assert!((&sum - &ComplexMatrix::identity(n)).frob_norm() <= tol().proj);
    }

    #[test]
    fn star_parts_recombine(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = random::rng(seed);
        let a = random::ginibre::<f64>(&mut rng, n, n);
        let parts = star_decompose(&a).unwrap();
        prop_assert!(rel(&parts.recombine(), &a) <= tol().recon);
    }

    #[test]
    fn positive_square_root(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = random::rng(seed);
        let g = random::ginibre::<f64>(&mut rng, n, n);
        let a = &g.adjoint() * &g;
        let r = positive_sqrt(&Hermitian::new(a.clone()).unwrap()).unwrap();
        let r = r.matrix();
        prop_assert!(rel(&(r * r), &a) <= tol().recon);
        prop_assert!(r.commutator(&a).frob_norm() / (1.0 + a.frob_norm()) <= tol().recon);
    }

    #[test]
    fn limiting_error_below_inverse_ell(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = random::rng(seed);
        let a = Hermitian::new(random::hermitian::<f64>(&mut rng, n)).unwrap();
        let seq = limiting_sequence(&a, 64).unwrap();
        for t in seq.terms() {
            prop_assert!(t.error <= 1.0 / t.ell as f64 + 1e-12, "ell {} error {}", t.ell, t.error);
        }
    }

    #[test]
    fn limit_independent_of_zeta(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = random::rng(seed);
        let a = Hermitian::new(random::hermitian::<f64>(&mut rng, n)).unwrap();
        let right = LimitingSequence::new(&a, 32, ZetaRule::RightEndpoint).unwrap();
        let mid = LimitingSequence::new(&a, 32, ZetaRule::Midpoint).unwrap();
        for (r, m) in right.terms().iter().zip(mid.terms()) {
            let gap = (&r.sum(n) - &m.sum(n)).frob_norm();
            prop_assert!(gap <= 2.0 * r.mesh() * (n as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn joint_atoms_resolve_generators(seed in any::<u64>(), n in 1usize..=6, r in 1usize..=3) {
        let mut rng = random::rng(seed);
        let u = random::unitary::<f64>(&mut rng, n);
        let levels = 1 + seed as usize % n;
        let gens: Vec<ComplexMatrix> = (0..r)
            .map(|_| {
                let vals: Vec<_> = (0..n)
                    .map(|i| random::complex_normal::<f64>(&mut rng) * (i % levels) as f64)
                    .collect();
                &(&u * &ComplexMatrix::diag(&vals)) * &u.adjoint()
            })
            .collect();
        let atlas = joint_diagonalize(&gens, n).unwrap();
        let mut total = ComplexMatrix::zeros(n, n);
        for (i, p) in atlas.points.iter().enumerate() {
            let m = p.projection.matrix();
            prop_assert!((&(m * m) - m).frob_norm() <= tol().proj);
            for q in &atlas.points[i + 1..] {
                prop_assert!((m * q.projection.matrix()).frob_norm() <= tol().proj);
            }
            total = &total + m;
        }
        prop_assert!((&total - &ComplexMatrix::identity(n)).frob_norm() <= tol().proj);
        for (i, g) in gens.iter().enumerate() {
            prop_assert!(rel(&atlas.reconstruct(i), g) <= tol().recon);
        }
    }

    #[test]
    fn bicommutant_is_closed(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = random::rng(seed);
        let g = random::hermitian::<f64>(&mut rng, n);
        let w = bicommutant(std::slice::from_ref(&g), n).unwrap();
        let again = bicommutant(w.basis(), n).unwrap();
        prop_assert_eq!(again.dim(), w.dim());
        for b in again.basis() {
            prop_assert!(w.membership_residual(b) <= tol().alg);
        }
        let c = commutant_of(w.basis(), n).unwrap();
        for x in c.basis() {
            prop_assert!(x.commutator(&g).frob_norm() <= tol().alg);
        }
    }

    #[test]
    fn matrix_json_round_trip(seed in any::<u64>(), rows in 1usize..=5, cols in 1usize..=5) {
        let mut rng = random::rng(seed);
        let m = random::ginibre::<f64>(&mut rng, rows, cols);
        let doc = MatrixDoc::from_json(&m.to_doc().to_json()).unwrap();
        let back = ComplexMatrix::from_doc(&doc).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn measure_additive_and_multiplicative(seed in any::<u64>(), n in 1usize..=6, d1 in any::<u16>(), d2 in any::<u16>()) {
        let e = random_measure(seed, n, 12);
        let (s1, s2) = (label_set(d1), label_set(d2));
        let ev = |s: &BorelSet| e.evaluate(s).unwrap().matrix().clone();
        let lhs = &ev(&s1.union(&s2)) + &ev(&s1.intersection(&s2));
        let rhs = &ev(&s1) + &ev(&s2);
        prop_assert!((&lhs - &rhs).frob_norm() <= tol().recon);
        prop_assert!((&(&ev(&s1) * &ev(&s2)) - &ev(&s1.intersection(&s2))).frob_norm() <= tol().recon);

        let h = random::vector::<f64>(&mut random::rng(seed ^ 1), n);
        let mu = |s: &BorelSet| e.scalar_measure(&h, &h, s).unwrap();
        prop_assert!(mu(&s1).re >= -tol().psd && mu(&s1).im.abs() <= tol().recon);
        let split = mu(&s1.union(&s2)) + mu(&s1.intersection(&s2)) - mu(&s1) - mu(&s2);
        prop_assert!(split.norm() <= tol().recon);
    }

    #[test]
    fn bounded_integral_is_homomorphism(seed in any::<u64>(), n in 1usize..=6, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let e = random_measure(seed, n, 12);
        let all = BorelSet::all();
        let f = LabelFn::poly(&[a, 1.0]);
        let g = LabelFn::ExpIndex { scale: C64::new(b, 0.5), base: 0.9 };
        let int = |h: &LabelFn| e.integrate_bounded(h, &all).unwrap();
        prop_assert!(rel(&int(&f.plus(&g)), &(&int(&f) + &int(&g))) <= tol().recon);
        prop_assert!(rel(&int(&f.times(&g)), &(&int(&f) * &int(&g))) <= tol().recon);
        prop_assert!(rel(&int(&g.conj()), &int(&g).adjoint()) <= tol().recon);
    }

    #[test]
    fn borel_set_laws(d1 in any::<u16>(), d2 in any::<u16>(), x in 0usize..16) {
        let (s1, s2) = (label_set(d1), label_set(d2));
        prop_assert_eq!(s1.union(&s2).contains(x), s1.contains(x) || s2.contains(x));
        prop_assert_eq!(s1.intersection(&s2).contains(x), s1.contains(x) && s2.contains(x));
        prop_assert_eq!(s1.complement().contains(x), !s1.contains(x));
        prop_assert!(s1.intersection(&s2).is_subset(&s1));
        prop_assert!(s1.is_subset(&s1.union(&s2)));
        prop_assert!(s1.complement().complement().contains(x) == s1.contains(x));
    }

    #[test]
    fn extension_is_well_defined(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = random::rng(seed);
        let w = VonNeumannAlgebra::diagonals(n);
        let family = enumerate_projections_abelian(&w).unwrap();
        let u = random::unitary::<f64>(&mut rng, n + 1);
        let v = ComplexMatrix::from_fn(n + 1, n, |i, j| u[(i, j)]);
        let map = |a: &ComplexMatrix| &(&v * a) * &v.adjoint();
        let assignment: Vec<_> = family.matrices().into_iter().map(map).collect();
        let ext = LinearExtender::new(family).unwrap();
        let a = w.random_element(&mut rng);
        let b = w.random_element(&mut rng);
        let (primary, secondary) = ext.extend_both(&assignment, &a).unwrap();
        prop_assert!(rel(&primary, &secondary) <= tol().ext);
        prop_assert!(rel(&primary, &map(&a)) <= tol().ext);
        let z = C64::new(0.3, -1.2);
        let sum = &a + &b.scale(z);
        let lhs = ext.extend(&assignment, &sum).unwrap();
        let rhs = &ext.extend(&assignment, &a).unwrap() + &ext.extend(&assignment, &b).unwrap().scale(z);
        prop_assert!(rel(&lhs, &rhs) <= tol().ext);
    }

    #[test]
    fn domain_vector_laws(s1 in any::<u64>(), s2 in any::<u64>(), cut in any::<u16>(), c in -2.0f64..2.0) {
        let x = random_domain_vector(s1, 10);
        let y = random_domain_vector(s2, 10);
        let xy = x.inner(&y);
        prop_assert!((xy - y.inner(&x).conj()).norm() <= 1e-12 * (1.0 + x.norm() * y.norm()));
        prop_assert!((x.inner(&x).re - x.norm_sqr()).abs() <= 1e-12 * (1.0 + x.norm_sqr()));
        let k = label_set(cut);
        let once = x.truncate(&k);
        prop_assert_eq!(once.truncate(&k), once.clone());
        prop_assert!(once.norm() <= x.norm() + 1e-12);

        let f = LabelFn::poly(&[c, 1.0]);
        let g = LabelFn::Reciprocal { scale: C64::new(1.0, c), shift: 1.0 };
        let lhs = spectral_integral_apply(&f.plus(&g), &x);
        let rhs = spectral_integral_apply(&f, &x).add(&spectral_integral_apply(&g, &x));
        prop_assert!(lhs.dist(&rhs) <= tol().recon * (1.0 + rhs.norm()));
        let composed = spectral_integral_apply(&f, &spectral_integral_apply(&g, &x));
        prop_assert!(spectral_integral_apply(&f.times(&g), &x).dist(&composed) <= tol().recon * (1.0 + composed.norm()));
    }
}
