use finsler_hj::builtins::{BuiltinParams, BuiltinProblem};
use finsler_hj::eikonal::{solve_eikonal, BoundaryData, EikonalOptions};
use finsler_hj::stationary::{
    check_condition_a_with, coercivity_threshold, family_sup_diagnostic, solve_stationary, solve_stationary_observed, stability_gap,
    subsolution_spot_check, sweep_eikonal, verify_stationary, ConditionA, PairSampler, StationaryCheck, StationaryHamiltonian, StationaryOptions,
};
use finsler_hj::subdiff;
use finsler_hj::{Bounds, GridDomain, NormField, ScalarField, Stencil, StencilGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plane(half: f64, n: usize) -> (NormField, GridDomain) {
    let g = GridDomain::rectangle(Bounds::square(-half, half), n, n).unwrap();
    (NormField::euclidean(g.bounds().clone()), g)
}

fn solve(p: &BuiltinProblem, nf: &NormField, g: &GridDomain) -> ScalarField {
    solve_stationary(&p.hamiltonian, nf, g, &StationaryOptions::default()).unwrap().u
}

fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn constant_f_gives_constant_solution() {
    let (nf, g) = plane(1.0, 31);
    let p = BuiltinProblem::ex5(ScalarField::constant(&g, 0.42)).unwrap();
    let u = solve(&p, &nf, &g);
    assert!(u.values().iter().all(|&v| v == 0.42 || (v - 0.42).abs() <= 1e-10));
}

#[test]
fn every_builtin_passes_its_verifier() {
    let (nf, g) = plane(4.0, 101);
    let check = StationaryCheck::default();
    for params in [
        BuiltinParams::Ex1 { a: 3.0, x0: [0.0, 0.0] },
        BuiltinParams::Ex2 { x0: [0.0, 0.0] },
        BuiltinParams::Ex3 { a: 1.0, b: 2.0, x0: [0.0, 0.0] },
        BuiltinParams::Ex4 { x0: [0.0, 0.0] },
        BuiltinParams::Ex5 { f: "sin(x1) * cos(x2)".into(), x0: None },
    ] {
        let p = BuiltinProblem::build(&params, &nf, &g).unwrap();
        let u = solve(&p, &nf, &g);
        let r = verify_stationary(&u, &p.hamiltonian, &p.expectation, &nf, &g, &check).unwrap();
        assert!(r.pass, "{}: {}", params.id(), r.to_json());
    }
}

#[test]
fn verifier_rejects_impostors() {
    let (nf, g) = plane(4.0, 101);
    let p = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let u = solve(&p, &nf, &g);
    let check = StationaryCheck::default();
    let raised = verify_stationary(&u.map(|v| v + 0.8), &p.hamiltonian, &p.expectation, &nf, &g, &check).unwrap();
    assert!(!raised.pass);
    assert!(raised.measured["subsolution_defect"] > raised.bound["subsolution_defect"]);
    let lowered = verify_stationary(&u.map(|v| v - 0.8), &p.hamiltonian, &p.expectation, &nf, &g, &check).unwrap();
    assert!(lowered.measured["supersolution_defect"] < lowered.bound["supersolution_defect"]);
    let wavy = ScalarField::from_fn(&g, |x| (4.0 * x[0]).sin());
    let steep = verify_stationary(&wavy, &p.hamiltonian, &p.expectation, &nf, &g, &check).unwrap();
    assert!(steep.measured["lipschitz"] > steep.bound["lipschitz"] && !steep.witnesses.is_empty());
    assert_eq!(steep.pass, steep.rederive_pass());
}

#[test]
fn ex5_with_cosine_of_distance_reproduces_ex2() {
    let (nf, g) = plane(4.0, 81);
    let two = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let five = BuiltinProblem::build(&BuiltinParams::Ex5 { f: "cos(d)".into(), x0: Some([0.0, 0.0]) }, &nf, &g).unwrap();
    let d = max_abs_diff(&solve(&two, &nf, &g), &solve(&five, &nf, &g));
    assert!(d <= 1e-9, "runs differ by {d}");
}

#[test]
fn shifting_the_hamiltonian_shifts_the_solution() {
    let (nf, g) = plane(3.0, 61);
    let p = BuiltinProblem::ex2([0.5, -0.5], &nf, &g).unwrap();
    let u = solve(&p, &nf, &g);
    for c in [0.3, -0.7] {
        let v = solve_stationary(&p.hamiltonian.shifted(c), &nf, &g, &StationaryOptions::default()).unwrap().u;
        let worst = u.values().iter().zip(v.values()).map(|(a, b)| (b - a + c).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "shift {c}: {worst}");
    }
}

#[test]
fn jacobi_matches_gauss_seidel() {
    let (nf, g) = plane(3.0, 61);
    let p = BuiltinProblem::ex3(1.0, 2.0, [0.0, 0.0], &nf, &g).unwrap();
    let gs = solve_stationary(&p.hamiltonian, &nf, &g, &StationaryOptions::default()).unwrap();
    let opts = StationaryOptions { parallel: true, max_sweeps: 20_000, ..Default::default() };
    let jac = solve_stationary(&p.hamiltonian, &nf, &g, &opts).unwrap();
    let d = max_abs_diff(&gs.u, &jac.u);
    assert!(d <= 1e-6, "Jacobi and Gauss-Seidel differ by {d}");
}

#[test]
fn iterates_increase_and_stay_below_upper_bound() {
    let (nf, g) = plane(3.0, 41);
    let p = BuiltinProblem::ex4([0.0, 0.0], &nf, &g).unwrap();
    let mut prev = vec![-p.hamiltonian.k1; g.len()];
    let mut sweeps = 0;
    let opts = StationaryOptions::default();
    solve_stationary_observed(&p.hamiltonian, &nf, &g, &opts, |_, u| {
        sweeps += 1;
        for (a, b) in prev.iter().zip(u) {
            assert!(b >= a, "iterate decreased");
            assert!(*b <= -p.hamiltonian.k0 + opts.tol);
        }
        prev.copy_from_slice(u);
    })
    .unwrap();
    assert!(sweeps >= 2);
}

#[test]
fn fast_sweeping_matches_dijkstra_on_linear_data() {
    let g = GridDomain::square_with_boundary(0.0, 1.0, 51).unwrap();
    let nf = NormField::euclidean(g.bounds().clone());
    let h = BoundaryData::from_fn(&g, |x| x[0]);
    let dij = solve_eikonal(&nf, &g, &h, &EikonalOptions::default()).unwrap().u;
    let opts = StationaryOptions { tol: 1e-12, ..Default::default() };
    let sw = sweep_eikonal(&nf, &g, &h.entries, &opts).unwrap().u;
    let worst = g.interior_nodes().map(|n| (dij[n] - sw[n]).abs()).fold(0.0, f64::max);
    assert!(worst <= 3.0 * g.h(), "max gap {worst}");
}

#[test]
fn condition_a_examples() {
    let (nf, g) = plane(2.0, 41);
    let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen).unwrap();
    let sampler = PairSampler { budget: 20_000, ..Default::default() };
    let cert = ConditionA::linear(0.0);
    for p in [BuiltinProblem::ex1(3.0, [0.0, 0.0], &nf, &g).unwrap(), BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap()] {
        let r = check_condition_a_with(&p.hamiltonian, &cert, &graph, &sampler).unwrap();
        assert!(r.pass && r.witnesses.is_empty(), "{}", r.to_json());
    }
    let df = graph.from_node(g.nearest_node(&[0.0, 0.0]).unwrap()).unwrap();
    let d = df.values.values().to_vec();
    let exp = StationaryHamiltonian::new("exp", 1.0, 1.0 + 4.0, move |n, t| t.exp() * (1.0 + d[n]));
    let r = check_condition_a_with(&exp, &ConditionA::linear(1.0), &graph, &sampler).unwrap();
    assert!(!r.pass);
    let w = &r.witnesses[0];
    assert!(w.values[0].max(w.values[1]) > 2.0, "violation should need large t");
}

#[test]
fn coercivity_thresholds() {
    let (nf, g) = plane(3.0, 61);
    let x0 = g.nearest_node(&[0.0, 0.0]).unwrap();
    let tol = 1e-6;
    let two = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    assert!((coercivity_threshold(&two.hamiltonian, 1.0, x0, None, tol).unwrap() - 2.0).abs() <= 2.0 * tol);
    // min(t, a) > 1 + cos d needs only t > 1 + cos d <= 2, so the threshold at x0 is 2 < a
    let one = BuiltinProblem::ex1(3.0, [0.0, 0.0], &nf, &g).unwrap();
    let r1 = coercivity_threshold(&one.hamiltonian, 1.0, x0, None, tol).unwrap();
    assert!((r1 - 2.0).abs() <= 2.0 * tol && r1 <= 3.0);
    let four = BuiltinProblem::ex4([0.0, 0.0], &nf, &g).unwrap();
    let df = four.distance.as_ref().unwrap();
    for x in [g.nearest_node(&[1.0, 0.5]).unwrap(), g.nearest_node(&[-2.0, 2.0]).unwrap()] {
        let r = coercivity_threshold(&four.hamiltonian, 1.0, x, None, tol).unwrap();
        assert!((r - df.value(x)).abs() <= 2.0 * tol, "{r} vs {}", df.value(x));
    }
}

#[test]
fn stability_gap_fixtures() {
    let (nf, g) = plane(4.0, 81);
    let p = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let u1 = solve(&p, &nf, &g);

    let h2 = p.hamiltonian.shifted(0.1);
    let u2 = solve_stationary(&h2, &nf, &g, &StationaryOptions::default()).unwrap().u;
    let s = stability_gap(&p.hamiltonian, &h2, &u1, &u2, &g, 5.0).unwrap();
    assert!((s.gap - 0.1).abs() <= 1e-6 && (s.bound - 0.1).abs() <= 1e-12 && s.pass);

    let same = stability_gap(&p.hamiltonian, &p.hamiltonian, &u1, &u1, &g, 5.0).unwrap();
    assert!(same.gap == 0.0 && same.bound == 0.0 && same.pass);

    let df = p.distance.clone().unwrap();
    let cosd: Vec<f64> = df.values.values().iter().map(|d| 0.9 * d.cos()).collect();
    let damped = StationaryHamiltonian::new("0.9 cos", -0.9, 0.9, move |n, t| t - cosd[n]);
    let u3 = solve_stationary(&damped, &nf, &g, &StationaryOptions::default()).unwrap().u;
    let s = stability_gap(&p.hamiltonian, &damped, &u1, &u3, &g, 5.0).unwrap();
    assert!(s.pass && s.gap <= 0.1 + 5.0 * g.h(), "{s:?}");
    assert!((s.bound - 0.1).abs() <= 1e-3);

    let small = GridDomain::rectangle(Bounds::square(-4.0, 4.0), 11, 11).unwrap();
    assert!(stability_gap(&p.hamiltonian, &h2, &u1, &u2, &small, 5.0).is_err());
}

#[test]
fn family_sup_fixtures() {
    let (nf, g) = plane(4.0, 81);
    let p = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let check = StationaryCheck::default();
    let u = solve(&p, &nf, &g);
    let s0 = ScalarField::constant(&g, -p.hamiltonian.k1);

    assert!(family_sup_diagnostic(&[], &p.hamiltonian, &nf, &g, &check).is_err());
    let r = family_sup_diagnostic(std::slice::from_ref(&s0), &p.hamiltonian, &nf, &g, &check).unwrap();
    assert!(r.pass, "{}", r.to_json());
    let r = family_sup_diagnostic(&[u.clone(), u.map(|v| v - 0.1)], &p.hamiltonian, &nf, &g, &check).unwrap();
    assert!(r.pass, "{}", r.to_json());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family: Vec<ScalarField> = (0..10)
        .map(|_| {
            let c = rng.gen_range(0.0..1.5);
            u.zip_with(&s0, |a, b| (a - c).max(b)).unwrap()
        })
        .collect();
    let r = family_sup_diagnostic(&family, &p.hamiltonian, &nf, &g, &check).unwrap();
    assert!(r.pass, "{}", r.to_json());

    // 2u is not a subsolution, so it may not enter a family
    assert!(family_sup_diagnostic(&[u.map(|v| 2.0 * v + 1.0)], &p.hamiltonian, &nf, &g, &check).is_err());
}

#[test]
fn raised_solution_is_a_supersolution_above_u() {
    let (nf, g) = plane(4.0, 81);
    let p = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let check = StationaryCheck::default();
    let u = solve(&p, &nf, &g);
    let probe = finsler_hj::stationary::spot_probe(&g, check.c).unwrap();
    for delta in [0.0, 0.05, 0.3] {
        let v = u.map(|x| x + delta);
        for x in (0..g.len()).filter(|&n| g.in_core(n, check.frame)).step_by(97) {
            let local = nf.at(&g.point(x)).unwrap();
            for d in subdiff::passing_subdifferentials(&v, &g, x, &probe).unwrap() {
                assert!(v[x] + p.hamiltonian.eval(x, local.dual(&d.components)) >= -check.c * g.h());
            }
        }
        let gap = v.values().iter().zip(u.values()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        assert!(gap >= -check.c * g.h());
    }
    let (worst, bad) = subsolution_spot_check(&u, &p.hamiltonian, &nf, &g, &check).unwrap();
    assert!(bad.is_empty(), "solution fails its own subsolution check: {worst}");
}

#[test]
fn solutions_depend_continuously_on_the_amplitude() {
    let (nf, g) = plane(4.0, 61);
    let p = BuiltinProblem::ex2([0.0, 0.0], &nf, &g).unwrap();
    let base = solve(&p, &nf, &g);
    let d = p.distance.clone().unwrap();
    for gamma in [0.9, 0.95, 1.05, 1.1] {
        let cosd: Vec<f64> = d.values.values().iter().map(|r| gamma * r.cos()).collect();
        let h = StationaryHamiltonian::new("gamma cos", -gamma, gamma, move |n, t| t - cosd[n]);
        let u = solve_stationary(&h, &nf, &g, &StationaryOptions::default()).unwrap().u;
        let gap = max_abs_diff(&u, &base);
        assert!(gap <= (gamma - 1.0f64).abs() + 5.0 * g.h(), "gamma {gamma}: {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solution_stays_in_the_generic_band(amp in 0.1f64..2.0, kx in 0.2f64..2.0, shift in -1.0f64..1.0) {
        let (nf, g) = plane(2.0, 31);
        let f = ScalarField::from_fn(&g, |x| shift + amp * (kx * x[0]).sin() * x[1].cos());
        let p = BuiltinProblem::ex5(f).unwrap();
        let u = solve(&p, &nf, &g);
        for &v in u.values() {
            prop_assert!(v >= -p.hamiltonian.k1 - 1e-9 && v <= -p.hamiltonian.k0 + 1e-9);
        }
    }

    #[test]
    fn larger_hamiltonian_gives_smaller_solution(c in 0.0f64..0.5) {
        let (nf, g) = plane(2.0, 31);
        let p = BuiltinProblem::ex2([0.3, 0.0], &nf, &g).unwrap();
        let inner = p.hamiltonian.clone();
        let bumped = StationaryHamiltonian::new("bumped", -1.0, 1.0 + c, move |n, t| inner.eval(n, t) + c * (n % 3) as f64 / 2.0);
        let u1 = solve(&p, &nf, &g);
        let u2 = solve_stationary(&bumped, &nf, &g, &StationaryOptions::default()).unwrap().u;
        for (a, b) in u1.values().iter().zip(u2.values()) {
            prop_assert!(b <= &(a + 1e-9));
        }
    }
}
