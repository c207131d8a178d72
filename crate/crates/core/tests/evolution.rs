use finsler_hj::evolution::{
    check_condition_a_evolution_with, comparison_check, envelope_bounds_check, envelope_constants, hopf_lax_oracle, monotonicity_gap,
    solve_evolution, EvolutionConditionA, EvolutionHamiltonian, EvolutionOptions, EvolutionSolution,
};
use finsler_hj::stationary::PairSampler;
use finsler_hj::{Bounds, GridDomain, NormField, ScalarField, Stencil, StencilGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAME: f64 = 0.1;

fn plane(n: usize) -> (NormField, GridDomain) {
    let g = GridDomain::rectangle(Bounds::square(-1.0, 1.0), n, n).unwrap();
    (NormField::euclidean(g.bounds().clone()), g)
}

fn transport() -> EvolutionHamiltonian {
    EvolutionHamiltonian::new("m", |_, _, m| m).with_lipschitz(1.0)
}

fn run(h: &EvolutionHamiltonian, nf: &NormField, g: &GridDomain, h0: &ScalarField, t: f64) -> EvolutionSolution {
    solve_evolution(h, nf, g, h0, t, &EvolutionOptions::default()).unwrap()
}

fn cone(g: &GridDomain) -> ScalarField {
    ScalarField::from_fn(g, |x| (x[0] - 0.2).hypot(x[1] + 0.1).min(0.6))
}

#[test]
fn transport_matches_hopf_lax_oracle() {
    let (nf, g) = plane(41);
    let h0 = cone(&g);
    let sol = run(&transport(), &nf, &g, &h0, 0.5);
    let oracle = hopf_lax_oracle(&nf, &g, &h0, 0.5).unwrap();
    let worst = (0..g.len()).filter(|&n| g.in_core(n, FRAME)).map(|n| (sol.last.u[n] - oracle[n]).abs()).fold(0.0, f64::max);
    assert!(worst <= 3.0 * (g.h() + sol.dt), "max error {worst}");
}

#[test]
fn oracle_is_a_semigroup() {
    let (nf, g) = plane(41);
    let h0 = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
    let once = hopf_lax_oracle(&nf, &g, &h0, 0.5).unwrap();
    let twice = hopf_lax_oracle(&nf, &g, &hopf_lax_oracle(&nf, &g, &h0, 0.2).unwrap(), 0.3).unwrap();
    let worst = once.values().iter().zip(twice.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 2.0 * g.h(), "semigroup gap {worst}");
}

#[test]
fn cosine_hamiltonian_stays_in_envelope() {
    let (nf, g) = plane(101);
    let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen).unwrap();
    let d = graph.from_node(g.nearest_node(&[0.0, 0.0]).unwrap()).unwrap().values.into_values();
    let h = EvolutionHamiltonian::new("m - cos d", move |_, n, m| m - d[n].cos()).with_lipschitz(1.0);
    let h0 = ScalarField::constant(&g, 0.0);
    let sol = run(&h, &nf, &g, &h0, 1.0);
    let (k0, k1) = envelope_constants(&h, &g, 1.0, 0.0);
    assert!(k0 == -1.0 && k1 <= 1.0);
    let r = envelope_bounds_check(&sol, -1.0, 1.0, &h0, &g, 5.0, FRAME).unwrap();
    assert!(r.pass, "{}", r.to_json());
}

#[test]
fn oracle_lies_in_the_transport_envelope() {
    let (nf, g) = plane(41);
    let lip = 1.5;
    let h0 = ScalarField::from_fn(&g, |x| lip * x[0].abs().max(0.5 * x[1]));
    let sol = run(&transport(), &nf, &g, &h0, 0.4);
    let (k0, k1) = envelope_constants(&transport(), &g, 0.4, lip);
    assert_eq!((k0, k1), (0.0, lip));
    let oracle = hopf_lax_oracle(&nf, &g, &h0, 0.4).unwrap();
    for n in 0..g.len() {
        assert!(oracle[n] <= h0[n] && oracle[n] >= h0[n] - lip * 0.4 - 1e-12);
    }
    assert!(envelope_bounds_check(&sol, k0, k1, &h0, &g, 5.0, FRAME).unwrap().pass);
}

#[test]
fn comparison_fixtures() {
    let (nf, g) = plane(41);
    let h = EvolutionHamiltonian::new("m - x1", {
        let g = g.clone();
        move |_, n, m| m - g.point(n)[0]
    })
    .with_lipschitz(1.0);
    let hu = cone(&g);
    let u = run(&h, &nf, &g, &hu, 0.5);

    let v = run(&h, &nf, &g, &hu.map(|x| x + 1.0), 0.5);
    let c = comparison_check(&u, &v, &g, 5.0, FRAME).unwrap();
    assert!((c.inf_gap - 1.0).abs() <= 1e-12 && c.pass);

    let same = comparison_check(&u, &u, &g, 5.0, FRAME).unwrap();
    assert!(same.inf_gap >= -1e-12 && same.pass);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bumps: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..0.2)).collect();
    let above = ScalarField::from_nodes(&g, |n| hu[n] + bumps[n]);
    let w = run(&h, &nf, &g, &above, 0.5);
    let c = comparison_check(&u, &w, &g, 5.0, FRAME).unwrap();
    assert!(c.pass && c.inf_gap >= 0.0, "{c:?}");

    let other = solve_evolution(&h, &nf, &g, &hu, 0.3, &EvolutionOptions::default()).unwrap();
    assert!(comparison_check(&u, &other, &g, 5.0, FRAME).is_err());
}

#[test]
fn monotonicity_fixtures() {
    let (nf, g) = plane(41);
    let h1 = transport();
    let data = cone(&g);
    let v = run(&h1, &nf, &g, &data, 0.5);

    let h2 = h1.shifted(0.05);
    let u = run(&h2, &nf, &g, &data, 0.5);
    let m = monotonicity_gap(&u, &v, &h1, &h2, &data, &data, &g, 5.0).unwrap();
    assert!(m.pass && (m.bound - 0.05).abs() < 1e-12, "{m:?}");

    let lowered = data.map(|x| x - 0.3);
    let u = run(&h1, &nf, &g, &lowered, 0.5);
    let m = monotonicity_gap(&u, &v, &h1, &h1, &data, &lowered, &g, 5.0).unwrap();
    assert!(m.pass && (m.gap + 0.3).abs() <= 1e-12 && (m.bound + 0.3).abs() <= 1e-12, "{m:?}");

    let m = monotonicity_gap(&v, &v, &h1, &h1, &data, &data, &g, 5.0).unwrap();
    assert!(m.pass && m.gap == 0.0);

    assert!(monotonicity_gap(&v, &v, &h2, &h1, &data, &data, &g, 5.0).is_err());
    assert!(monotonicity_gap(&v, &v, &h1, &h1, &lowered, &data, &g, 5.0).is_err());
}

#[test]
fn transport_of_a_tilted_plane_moves_at_unit_speed() {
    let (nf, g) = plane(81);
    let alpha = 0.3;
    let t = 0.2;
    let sol = run(&transport(), &nf, &g, &ScalarField::from_fn(&g, |x| alpha * x[0]), t);
    // edge effects travel inward at unit speed
    let window = FRAME + t / 2.0 + 0.05;
    for n in (0..g.len()).filter(|&n| g.in_core(n, window)) {
        let rate = (sol.last.u[n] - alpha * g.point(n)[0]) / t;
        assert!((rate + alpha).abs() <= 5.0 * (g.h() + sol.dt), "rate {rate}");
    }
}

#[test]
fn condition_a_evolution_examples() {
    let (nf, g) = plane(41);
    let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen).unwrap();
    let d = graph.from_node(g.nearest_node(&[0.0, 0.0]).unwrap()).unwrap().values.into_values();
    let sampler = PairSampler { budget: 20_000, ..Default::default() };

    let cos = EvolutionHamiltonian::new("m - cos d", move |_, n, m| m - d[n].cos());
    let r = check_condition_a_evolution_with(&cos, &EvolutionConditionA::new(|_, dist, r| dist + r.abs(), 0.0), &graph, &sampler).unwrap();
    assert!(r.pass, "{}", r.to_json());

    // r(t, x) = 1 + sin(t) cos(x1) / 2 has modulus |dt|/2 + dist/2, and |r| <= 3/2
    let gg = g.clone();
    let rate = EvolutionHamiltonian::new("r m", move |t, n, m| (1.0 + 0.5 * t.sin() * gg.point(n)[0].cos()) * m);
    let cert = EvolutionConditionA::new(|_, _, r| 1.5 * r.abs(), 0.5);
    let r = check_condition_a_evolution_with(&rate, &cert, &graph, &sampler).unwrap();
    assert!(r.pass, "{}", r.to_json());

    let exp = EvolutionHamiltonian::new("exp m", |_, _, m| m.exp());
    let cert = EvolutionConditionA::new(|s, dist, r| s + dist + r.abs(), 1.0);
    let r = check_condition_a_evolution_with(&exp, &cert, &graph, &sampler).unwrap();
    assert!(!r.pass && !r.witnesses.is_empty());
    assert!(r.witnesses[0].values[2].max(r.witnesses[0].values[3]) > 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn adding_a_constant_to_the_data_adds_it_to_the_solution(c in -2.0f64..2.0, k in 0.5f64..3.0) {
        let (nf, g) = plane(21);
        let h0 = ScalarField::from_fn(&g, |x| (k * x[0]).sin() * x[1]);
        let u = run(&transport(), &nf, &g, &h0, 0.3);
        let v = run(&transport(), &nf, &g, &h0.map(|x| x + c), 0.3);
        for (a, b) in u.states().zip(v.states()) {
            for n in 0..g.len() {
                prop_assert!((b.u[n] - a.u[n] - c).abs() <= 1e-12 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn ordered_data_stay_ordered_and_close(seed in 0u64..1000) {
        let (nf, g) = plane(21);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let low: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let high: Vec<f64> = low.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let gap0 = high.iter().zip(&low).map(|(a, b)| a - b).fold(0.0, f64::max);
        let h = EvolutionHamiltonian::new("m + sin(m) / 2", |_, _, m| m + 0.5 * m.sin()).with_lipschitz(1.5);
        let u1 = run(&h, &nf, &g, &ScalarField::new(&g, low).unwrap(), 0.3);
        let u2 = run(&h, &nf, &g, &ScalarField::new(&g, high).unwrap(), 0.3);
        for (a, b) in u1.states().zip(u2.states()) {
            for n in 0..g.len() {
                prop_assert!(a.u[n] <= b.u[n]);
                prop_assert!(b.u[n] - a.u[n] <= gap0 + 1e-12);
            }
        }
    }
}
