mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use relucert::formulations::{build_0sos, build_sdr, rank_one_moment, ConicProgram, ConstraintClass};
use relucert::harness::relative_error;
use relucert::lifting::build_layout;
use relucert::network::{propagate_bounds, random_network, InputBox, InputPolytope, OutputHalfspace};
use relucert::solver::{project_nonneg, project_psd, smat, svec};

use common::*;

fn sym_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0..5.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psd_projection_is_idempotent_and_optimal(m in sym_matrix(6)) {
        let p = project_psd(&m).unwrap();
        prop_assert!(min_eig(&p) >= -1e-9);
        let pp = project_psd(&p).unwrap();
        prop_assert!((&pp - &p).amax() <= 1e-9);
        // the removed part is negative semidefinite and orthogonal to the result
        let rest = &m - &p;
        prop_assert!(SymmetricEigen::new(rest.clone()).eigenvalues.max() <= 1e-9);
        prop_assert!(rest.dot(&p).abs() <= 1e-8 * (1.0 + m.norm_squared()));
    }

    #[test]
    fn nonneg_projection_is_idempotent(m in sym_matrix(5)) {
        let p = project_nonneg(&m);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert_eq!(project_nonneg(&p), p.clone());
        for (a, b) in m.iter().zip(p.iter()) {
            prop_assert!(*b == a.max(0.0));
        }
    }

    #[test]
    fn svec_preserves_inner_products(a in sym_matrix(5), b in sym_matrix(5)) {
        let (sa, sb) = (svec(&a), svec(&b));
        prop_assert!((sa.dot(&sb) - a.dot(&b)).abs() <= 1e-9);
        prop_assert!((smat(sa.as_slice(), 5) - &a).amax() <= 1e-12);
    }

    #[test]
    fn relative_error_is_nonnegative_and_scale_free(r in -1e3..1e3f64, e in -1e3..1e3f64, s in 0.1..10.0f64) {
        let base = relative_error(r, e);
        prop_assert!(base >= 0.0);
        if e.abs() > 1e-6 {
            prop_assert!((relative_error(s * r, s * e) - base).abs() <= 1e-9 * (1.0 + base));
        }
    }

    #[test]
    fn interval_bounds_contain_forward_passes(seed in 0u64..10_000, width in 1usize..8, depth in 1usize..4) {
        let mut dims = vec![2];
        dims.extend(std::iter::repeat(width).take(depth));
        dims.push(1);
        let net = random_network(&dims, seed).unwrap();
        let bx = InputBox::new(vec![-1.0, -0.5], vec![0.3, 1.0]).unwrap();
        let bounds = propagate_bounds(&net, &bx).unwrap();
        let mut rng = rng(seed);
        for _ in 0..20 {
            let x = random_point(&bx, &mut rng);
            prop_assert!(bounds.contains(&net.forward(&x).unwrap(), 1e-9));
        }
    }

    #[test]
    fn rank_one_lifts_are_feasible(seed in 0u64..10_000) {
        let net = random_network(&[2, 5, 3, 1], seed).unwrap();
        let bx = InputBox::uniform(2, -1.0, 0.1).unwrap();
        let input = InputPolytope::from_box(&bx);
        let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
        let prog = build_0sos(&net, &input, &output).unwrap();
        let layout = prog.layout.clone().unwrap();
        let x = random_point(&bx, &mut rng(seed));
        let m = rank_one_moment(&lifted_point(&net, &input, &layout, &x));
        prop_assert!(prog.max_violation(&m) <= 1e-9);
        let y = net.eval(&x).unwrap()[0];
        prop_assert!((prog.objective_value(&m) - y).abs() <= 1e-12);

        let bounds = propagate_bounds(&net, &bx).unwrap();
        let sdr = build_sdr(&net, &input, &output, &bounds).unwrap();
        let sdr_layout = build_layout(&net, 0);
        let m = rank_one_moment(&lifted_point(&net, &input, &sdr_layout, &x));
        prop_assert!(sdr.max_violation(&m) <= 1e-9);
    }

    #[test]
    fn program_dump_round_trips(seed in 0u64..1_000) {
        let net = random_network(&[2, 3, 1], seed).unwrap();
        let input = InputPolytope::from_box(&InputBox::uniform(2, -1.0, 1.0).unwrap());
        let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
        let prog = build_0sos(&net, &input, &output).unwrap();
        let back = ConicProgram::parse_dump(&prog.dump()).unwrap();
        prop_assert_eq!(back.dump(), prog.dump());
        prop_assert_eq!(back.num_equalities(), prog.num_equalities());
        for class in ConstraintClass::ALL {
            prop_assert_eq!(back.count(class), prog.count(class));
        }
    }

    #[test]
    fn mixtures_of_lifts_keep_equalities(seed in 0u64..10_000, k in 1usize..5) {
        let net = random_network(&[2, 6, 1], seed).unwrap();
        let bx = InputBox::uniform(2, -1.0, 1.0).unwrap();
        let input = InputPolytope::from_box(&bx);
        let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
        let prog = build_0sos(&net, &input, &output).unwrap();
        let layout = prog.layout.clone().unwrap();
        let mut rng = rng(seed);
        let weights = unit_weights(k, &mut rng);
        let factors: Vec<DVector<f64>> = weights
            .iter()
            .map(|&xi| factor(&lifted_point(&net, &input, &layout, &random_point(&bx, &mut rng)), xi))
            .collect();
        let m = gram(&factors);
        prop_assert!(prog.max_violation(&m) <= 1e-9);
    }
}
