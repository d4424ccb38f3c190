mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qestkit::bounds::{
    check_feasible, holevo_bound, holevo_objective, rld_cr_bound, sld_cr_bound, HolevoMethod, HolevoOptions,
    WeightMatrix,
};
use qestkit::classify::classify_point;
use qestkit::infogeo::analyze;
use qestkit::linalg::{
    commutation_superop, rld_inner, sld_inner, sld_orthonormal_complement, trace_norm, ComplexMatrix,
    HermitianMatrix,
};
use qestkit::model::ModelPoint;
use qestkit::random::{random_complex_matrix, random_point, random_unitary, random_weight};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn point(seed: u64, d: usize, n: usize) -> ModelPoint {
    random_point(&mut rng(seed), d, n).expect("regular random model")
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), 1usize..=3))
}

fn numeric() -> HolevoOptions {
    HolevoOptions { method: HolevoMethod::Numeric, ..Default::default() }
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scores_match_dense_solves(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (s, m) = analyze(&p).unwrap();
        let rho = p.rho().as_matrix();
        for (k, drho) in p.drho().iter().enumerate() {
            let l = common::sld(rho, drho.as_matrix());
            let lt = common::rld(rho, drho.as_matrix());
            prop_assert!((s.slds[k].as_matrix() - l).camax() < 1e-9);
            prop_assert!((&s.rlds[k] - lt).camax() < 1e-9);
        }
        let drho: Vec<_> = p.drho().iter().map(|x| x.as_matrix().clone()).collect();
        let (g, gt) = common::fisher(rho, &drho);
        prop_assert!((&m.g - g).amax() < 1e-9);
        prop_assert!((&m.gt - gt).camax() < 1e-9);
    }

    #[test]
    fn commutation_operator_is_sld_skew(seed in any::<u64>(), d in 2usize..=4) {
        let p = point(seed, d, 1);
        let mut r = rng(seed ^ 0x5eed);
        let x = random_complex_matrix(&mut r, d);
        let y = random_complex_matrix(&mut r, d);
        let dx = commutation_superop(p.eig(), &x).unwrap();
        let dy = commutation_superop(p.eig(), &y).unwrap();
        let lhs = sld_inner(p.eig(), &x, &dy).unwrap();
        let rhs = -sld_inner(p.eig(), &dx, &y).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn rld_minus_sld_is_sld_of_commutation(seed in any::<u64>(), d in 2usize..=4) {
        let p = point(seed, d, 1);
        let mut r = rng(seed ^ 0xd1ff);
        let x = random_complex_matrix(&mut r, d);
        let y = random_complex_matrix(&mut r, d);
        let idy = commutation_superop(p.eig(), &y).unwrap() * Complex64::i();
        let lhs = rld_inner(p.rho().as_matrix(), &x, &y).unwrap() - sld_inner(p.eig(), &x, &y).unwrap();
        let rhs = sld_inner(p.eig(), &x, &idy).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn trace_norm_matches_svd_and_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..=6) {
        let mut r = rng(seed);
        let a = random_complex_matrix(&mut r, d);
        let u = random_unitary(&mut r, d);
        let v = random_unitary(&mut r, d);
        let t = trace_norm(&a);
        prop_assert!((t - common::trace_norm(&a)).abs() < 1e-10 * (1.0 + t));
        prop_assert!((trace_norm(&(&u * &a * &v)) - t).abs() < 1e-10 * (1.0 + t));
    }

    #[test]
    fn dual_scores_are_biorthogonal(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (s, m) = analyze(&p).unwrap();
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                let sld = sld_inner(p.eig(), s.sld_duals[i].as_matrix(), s.slds[j].as_matrix()).unwrap();
                let rld = rld_inner(p.rho().as_matrix(), &s.rld_duals[i], &s.rlds[j]).unwrap();
                prop_assert!((sld - delta).norm() < 1e-9);
                prop_assert!((rld - delta).norm() < 1e-9);
            }
        }
        let re_z = m.z.map(|z| z.re);
        prop_assert!((re_z - &m.g_inv).amax() < 1e-9 * (1.0 + m.g_inv.amax()));
    }

    #[test]
    fn rld_information_dominates_sld(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (_, m) = analyze(&p).unwrap();
        // Re G̃ − G is positive semidefinite (ordering on real tangent vectors)
        let diff = m.gt.map(|z| z.re) - &m.g;
        let min = diff.symmetric_eigenvalues().min();
        prop_assert!(min > -1e-9 * (1.0 + m.gt.camax()), "min eigenvalue {min}");
    }

    #[test]
    fn unitary_conjugation_changes_nothing(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let u = random_unitary(&mut rng(seed ^ 0x9a09e), d);
        let q = p.conjugated(&u).unwrap();
        let (_, mp) = analyze(&p).unwrap();
        let (_, mq) = analyze(&q).unwrap();
        let scale = 1.0 + mp.g.amax();
        prop_assert!((&mp.g - &mq.g).amax() < 1e-9 * scale);
        prop_assert!((&mp.gt - &mq.gt).camax() < 1e-9 * scale);
        prop_assert!((&mp.z - &mq.z).camax() < 1e-9 * (1.0 + mp.z.camax()));
        let (rp, rq) = (classify_point(&p, 1e-8).unwrap(), classify_point(&q, 1e-8).unwrap());
        prop_assert_eq!(rp.verdicts(), rq.verdicts());
    }

    #[test]
    fn classification_containments(seed in any::<u64>(), (d, n) in shape()) {
        let r = classify_point(&point(seed, d, n), 1e-8).unwrap();
        prop_assert!(r.consistency.consistent());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn holevo_sits_between_lower_bounds_and_duals(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (_, m) = analyze(&p).unwrap();
        let w = WeightMatrix::new(random_weight(&mut rng(seed ^ 1), n)).unwrap();
        let sol = holevo_bound(&p, &w, &numeric()).unwrap();
        let cs = sld_cr_bound(&m, &w).unwrap();
        let cr = rld_cr_bound(&m, &w).unwrap();
        // a budget-exhausted solve still returns its best feasible value
        prop_assert!(sol.value >= cs.max(cr) - 1e-8 * (1.0 + sol.value));
        prop_assert!(sol.value <= sol.dual_objective + 1e-12 * (1.0 + sol.value));
        prop_assert!(sol.value <= 2.0 * cs + 1e-8 * (1.0 + cs));
        prop_assert!(check_feasible(&p, &sol.x).unwrap().max() < 1e-8);
        if n == 1 {
            prop_assert!((sol.value - cs).abs() < 1e-10 * (1.0 + cs));
        }
    }

    #[test]
    fn holevo_is_minimal_and_convex_along_feasible_lines(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (s, _) = analyze(&p).unwrap();
        let w = WeightMatrix::new(random_weight(&mut rng(seed ^ 2), n)).unwrap();
        let sol = holevo_bound(&p, &w, &numeric()).unwrap();
        let mut spanners = vec![HermitianMatrix::identity(d)];
        spanners.extend(s.slds.iter().cloned());
        let complement = sld_orthonormal_complement(p.eig(), &spanners).unwrap();
        let mut r = rng(seed ^ 3);
        let mut shifted = |scale: f64| -> Vec<HermitianMatrix> {
            sol.x
                .iter()
                .map(|x| {
                    let mut m = x.as_matrix().clone();
                    for b in &complement {
                        m += b.as_matrix() * Complex64::new(scale * r.random_range(-1.0..1.0), 0.0);
                    }
                    HermitianMatrix::new(m).unwrap()
                })
                .collect()
        };
        for scale in [1e-3, 1e-1, 1.0] {
            let (a, b) = (shifted(scale), shifted(scale));
            prop_assert!(check_feasible(&p, &a).unwrap().max() < 1e-8);
            let fa = holevo_objective(&p, &a, &w).unwrap();
            let fb = holevo_objective(&p, &b, &w).unwrap();
            let mid: Vec<HermitianMatrix> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| HermitianMatrix::new((x.as_matrix() + y.as_matrix()) * Complex64::new(0.5, 0.0)).unwrap())
                .collect();
            let fm = holevo_objective(&p, &mid, &w).unwrap();
            prop_assert!(fm <= 0.5 * (fa + fb) + 1e-10 * (1.0 + fa.abs() + fb.abs()));
            prop_assert!(sol.value <= fa.min(fb) + 1e-8 * (1.0 + sol.value));
        }
    }

    #[test]
    fn bounds_scale_with_the_weight(seed in any::<u64>(), (d, n) in shape(), c in 0.1f64..10.0) {
        let p = point(seed, d, n);
        let (_, m) = analyze(&p).unwrap();
        let w = WeightMatrix::new(random_weight(&mut rng(seed ^ 4), n)).unwrap();
        let wc = w.scaled(c).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
        prop_assert!(rel(sld_cr_bound(&m, &wc).unwrap(), c * sld_cr_bound(&m, &w).unwrap()) < 1e-10);
        prop_assert!(rel(rld_cr_bound(&m, &wc).unwrap(), c * rld_cr_bound(&m, &w).unwrap()) < 1e-10);
        let h = holevo_bound(&p, &w, &numeric()).unwrap().value;
        let hc = holevo_bound(&p, &wc, &numeric()).unwrap().value;
        prop_assert!(rel(hc, c * h) < 1e-6, "{hc} vs {}", c * h);
    }

    #[test]
    fn bounds_grow_with_the_weight(seed in any::<u64>(), (d, n) in shape()) {
        let p = point(seed, d, n);
        let (_, m) = analyze(&p).unwrap();
        let mut r = rng(seed ^ 5);
        let w1 = random_weight(&mut r, n);
        let extra = {
            let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
            &a * a.transpose()
        };
        let w1 = WeightMatrix::new(w1.clone()).unwrap();
        let w2 = WeightMatrix::new(w1.matrix() + extra).unwrap();
        let tol = 1e-8;
        prop_assert!(sld_cr_bound(&m, &w2).unwrap() >= sld_cr_bound(&m, &w1).unwrap() - tol);
        prop_assert!(rld_cr_bound(&m, &w2).unwrap() >= rld_cr_bound(&m, &w1).unwrap() - tol);
        let h1 = holevo_bound(&p, &w1, &numeric()).unwrap().value;
        let h2 = holevo_bound(&p, &w2, &numeric()).unwrap().value;
        prop_assert!(h2 >= h1 - 1e-7 * (1.0 + h1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn holevo_agrees_with_direct_search(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=2) {
        let p = point(seed, d, n);
        let w = random_weight(&mut rng(seed ^ 6), n);
        let sol = holevo_bound(&p, &WeightMatrix::new(w.clone()).unwrap(), &numeric()).unwrap();
        let rho: ComplexMatrix = p.rho().as_matrix().clone();
        let drho: Vec<ComplexMatrix> = p.drho().iter().map(|x| x.as_matrix().clone()).collect();
        let reference = common::holevo_search(&rho, &drho, &w);
        let xs: Vec<ComplexMatrix> = sol.x.iter().map(|x| x.as_matrix().clone()).collect();
        let h = ComplexMatrix::from_fn(n, n, |i, j| (&rho * &xs[j] * &xs[i]).trace());
        prop_assert!((common::holevo_function(&h, &w) - sol.value).abs() < 1e-10 * (1.0 + sol.value));
        for (i, x) in xs.iter().enumerate() {
            prop_assert!((&rho * x).trace().norm() < 1e-9);
            for (j, dr) in drho.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!(((dr * x).trace() - delta).norm() < 1e-9);
            }
        }
        // the search only ever overestimates the minimum
        prop_assert!(sol.value <= reference + 1e-7 * (1.0 + reference), "{} vs {reference}", sol.value);
        prop_assert!(sol.value >= reference - 1e-4 * (1.0 + reference), "{} vs {reference}", sol.value);
        let (cs, cr) = common::sld_and_rld_bounds(&rho, &drho, &w);
        prop_assert!((sol.sld_bound - cs).abs() < 1e-9 * (1.0 + cs));
        prop_assert!((sol.rld_bound - cr).abs() < 1e-9 * (1.0 + cr));
    }
}
