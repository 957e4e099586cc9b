mod common;

use relucert::formulations::{build_0sos, build_sdr, build_triangle_sdr};
use relucert::harness::case_study_input;
use relucert::network::{case_study_network, propagate_bounds, random_network, InputBox, InputPolytope, OutputHalfspace};
use relucert::oracle::exact_verify;
use relucert::solver::{solve, SolverConfig};

fn cfg() -> SolverConfig {
    let mut cfg = SolverConfig::with_tolerance(1e-6);
    cfg.max_iter = 50_000;
    cfg
}

#[test]
fn case_study_ordering_sdr_below_0sos_below_exact() {
    let net = case_study_network();
    let input = case_study_input();
    let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
    let bounds = propagate_bounds(&net, input.bounding_box()).unwrap();
    let sdr = solve(&build_sdr(&net, &input, &output, &bounds).unwrap(), &cfg()).unwrap().objective;
    let zero = solve(&build_0sos(&net, &input, &output).unwrap(), &cfg()).unwrap().objective;
    let exact = exact_verify(&net, &input, &output).unwrap().opt;
    assert!(sdr <= zero + 1e-4, "sdr {sdr} 0sos {zero}");
    assert!(zero <= exact + 1e-4, "0sos {zero} exact {exact}");
}

#[test]
fn triangle_cuts_never_lower_the_sdr_value() {
    let bx = InputBox::uniform(2, -1.0, 0.1).unwrap();
    let input = InputPolytope::from_box(&bx);
    let output = OutputHalfspace::new(vec![1.0], 0.0).unwrap();
    for seed in 0..3 {
        let net = random_network(&[2, 10, 1], seed).unwrap();
        let bounds = propagate_bounds(&net, &bx).unwrap();
        let sdr = solve(&build_sdr(&net, &input, &output, &bounds).unwrap(), &cfg()).unwrap().objective;
        let tri = solve(&build_triangle_sdr(&net, &input, &output, &bounds).unwrap(), &cfg()).unwrap().objective;
        let exact = exact_verify(&net, &input, &output).unwrap().opt;
        assert!(tri >= sdr - 1e-3, "seed {seed}: triangle {tri} sdr {sdr}");
        assert!(tri <= exact + 1e-4, "seed {seed}: triangle {tri} exact {exact}");
    }
}

#[test]
fn safe_verdicts_are_sound() {
    let bx = InputBox::uniform(2, -1.0, 0.1).unwrap();
    let input = InputPolytope::from_box(&bx);
    for seed in 20..26 {
        let net = random_network(&[2, 6, 1], seed).unwrap();
        for d in [-1.0, 0.0, 0.5] {
            let output = OutputHalfspace::new(vec![1.0], d).unwrap();
            let relaxed = solve(&build_0sos(&net, &input, &output).unwrap(), &cfg()).unwrap().objective;
            let exact = exact_verify(&net, &input, &output).unwrap();
            if relaxed >= d + 1e-6 {
                assert!(exact.is_safe(&output), "seed {seed} d {d}");
            }
        }
    }
}
