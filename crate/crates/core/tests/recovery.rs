mod common;

use nalgebra::DVector;

use relucert::formulations::{ablate, build_0sos, ConstraintClass};
use relucert::harness::case_study_input;
use relucert::network::{case_study_network, random_network, InputBox, InputPolytope, OutputHalfspace, ReluNetwork};
use relucert::oracle::exact_verify;
use relucert::recovery::{certify, extract_inputs, max_entry_residual, nonneg_factorize, CertifyConfig, FactorConfig, Verdict};
use relucert::solver::{solve, SolverConfig};

use common::*;

#[test]
fn constructed_cp_matrix_round_trips() {
    let net = random_network(&[2, 4, 1], 3).unwrap();
    let bx = InputBox::uniform(2, -1.0, 1.0).unwrap();
    let input = InputPolytope::from_box(&bx);
    let prog = build_0sos(&net, &input, &OutputHalfspace::new(vec![1.0], 0.0).unwrap()).unwrap();
    let layout = prog.layout.clone().unwrap();
    let points = [
        DVector::from_vec(vec![0.9, -0.7]),
        DVector::from_vec(vec![-0.6, 0.2]),
        DVector::from_vec(vec![0.1, 0.8]),
    ];
    let weights = [0.6, 0.48, 0.64];
    let factors: Vec<_> = points.iter().zip(weights).map(|(x, w)| factor(&lifted_point(&net, &input, &layout, x), w)).collect();
    let m = gram(&factors);
    let fac = nonneg_factorize(&m, 3, &FactorConfig::default()).unwrap();
    assert!(fac.residual <= 1e-8, "residual {}", fac.residual);
    assert!((max_entry_residual(&m, &fac.factors) - fac.residual).abs() <= 1e-12);
    let recovered = extract_inputs(&fac, &layout).unwrap();
    assert_eq!(recovered.len(), 3);
    for x in &points {
        let best = recovered
            .iter()
            .map(|r| (DVector::from_vec(r.input.clone()) - x).amax())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-4, "input {x:?} missed by {best}");
    }
}

#[test]
fn rank_one_passthrough_recovers_the_input() {
    let net = case_study_network();
    let input = case_study_input();
    let prog = build_0sos(&net, &input, &OutputHalfspace::new(vec![1.0], 0.0).unwrap()).unwrap();
    let layout = prog.layout.clone().unwrap();
    let x0 = DVector::from_vec(vec![0.3, -0.45]);
    let m = gram(&[factor(&lifted_point(&net, &input, &layout, &x0), 1.0)]);
    let fac = nonneg_factorize(&m, 1, &FactorConfig::default()).unwrap();
    let got = extract_inputs(&fac, &layout).unwrap();
    assert_eq!(got.len(), 1);
    assert!((DVector::from_vec(got[0].input.clone()) - x0).amax() <= 1e-8);
    assert!((got[0].xi - 1.0).abs() <= 1e-8);
}

#[test]
fn unique_minimiser_certifies_at_rank_one() {
    let net = ReluNetwork::from_rows(&[
        (vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
        (vec![vec![1.0, 1.0]], vec![0.0]),
    ])
    .unwrap();
    let input = InputPolytope::from_box(&InputBox::uniform(2, 0.5, 1.0).unwrap());
    let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
    let prog = build_0sos(&net, &input, &output).unwrap();
    let res = solve(&prog, &SolverConfig::with_tolerance(1e-8)).unwrap();
    assert!(res.is_optimal());
    assert!((res.objective - 1.0).abs() <= 1e-5);
    let cert = certify(&net, &res, prog.layout.as_ref().unwrap(), &input, &output, 1..=3, &CertifyConfig::default());
    assert_eq!(cert.verdict, Verdict::Exact, "{}", cert.note);
    assert_eq!(cert.rank, Some(1));
    let w = &cert.witnesses[0];
    assert!((DVector::from_vec(w.input.clone()) - DVector::from_vec(vec![0.5, 0.5])).amax() <= 1e-3);
}

#[test]
fn over_ablated_program_is_inconclusive() {
    let net = case_study_network();
    let input = case_study_input();
    let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
    let prog = ablate(&build_0sos(&net, &input, &output).unwrap(), ConstraintClass::NonnegMatrix).unwrap();
    let mut cfg = SolverConfig::with_tolerance(1e-6);
    cfg.max_iter = 20_000;
    let res = solve(&prog, &cfg).unwrap();
    let cert = certify(&net, &res, prog.layout.as_ref().unwrap(), &input, &output, 1..=6, &CertifyConfig::default());
    assert_eq!(cert.verdict, Verdict::Inconclusive);
    assert!(res.objective < -2.0 - 1e-2);
}

#[test]
fn exact_certificates_have_sound_witnesses() {
    let net = case_study_network();
    let input = case_study_input();
    let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
    let prog = build_0sos(&net, &input, &output).unwrap();
    let res = solve(&prog, &SolverConfig::with_tolerance(1e-6)).unwrap();
    let cert = certify(&net, &res, prog.layout.as_ref().unwrap(), &input, &output, 1..=6, &CertifyConfig::default());
    assert_eq!(cert.verdict, Verdict::Exact);
    let exact = exact_verify(&net, &input, &output).unwrap().opt;
    for w in &cert.witnesses {
        assert!(w.objective >= exact - 1e-6);
        assert!(input.contains(&DVector::from_vec(w.input.clone()), 1e-6));
        let y = output.objective(&net.eval(&DVector::from_vec(w.input.clone())).unwrap());
        assert!((y - w.objective).abs() <= 1e-12);
    }
    assert!((cert.min_witness_objective().unwrap() - res.objective).abs() <= 1e-3);
    assert!((cert.xi_squared_sum - 1.0).abs() <= CertifyConfig::default().residual_threshold);
    let json: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
    assert_eq!(json["verdict"], "EXACT");
}
