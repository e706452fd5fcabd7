mod common;

use common::*;
use kikuchi::check::{check_model, CheckStatus};
use kikuchi::diffusion::*;
use kikuchi::energy::*;
use kikuchi::fixtures;
use kikuchi::hypergraph::IncidenceFn;
use kikuchi::interaction::*;
use kikuchi::oracle::*;
use kikuchi::tensor::{conditional_expectation, gibbs};
use kikuchi::transforms::*;
use kikuchi::*;
use proptest::prelude::*;

fn closed_cover(seed: u64, n: usize) -> Complex {
    binary(fixtures::random_closed(&mut rng(seed), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn dirichlet_inversion(seed in any::<u64>(), n in 3usize..7) {
        let x = fixtures::random_closed(&mut rng(seed), n);
        let (mu, zeta) = (x.mobius(), IncidenceFn::zeta(&x));
        let unit = IncidenceFn::unit(x.len());
        for prod in [mu.convolve(&zeta, &x), zeta.convolve(&mu, &x)] {
            for a in 0..x.len() {
                for b in 0..x.len() {
                    prop_assert_eq!(prod.get(a, b), unit.get(a, b));
                }
            }
        }
        let c = x.mobius_numbers().c;
        for b in 0..x.len() {
            prop_assert_eq!(x.upper_members(b).iter().map(|&a| c[a]).sum::<i64>(), 1);
        }
    }

    #[test]
    fn complex_identities(seed in any::<u64>(), n in 3usize..6) {
        let cx = closed_cover(seed, n);
        let mut r = rng(seed ^ 1);
        let psi = cx.random(2, &mut r, 1.0).unwrap();
        prop_assert!(cx.boundary(&cx.boundary(&psi).unwrap()).unwrap().max_abs() < 1e-12);
        let q = cx.random(0, &mut r, 1.0).unwrap();
        let phi = cx.random(1, &mut r, 1.0).unwrap();
        prop_assert!(cx.differential(&cx.differential(&q).unwrap()).unwrap().max_abs() < 1e-12);
        let lhs = cx.pairing(&cx.differential(&q).unwrap(), &phi, None).unwrap();
        let rhs = cx.pairing(&q, &cx.boundary(&phi).unwrap(), None).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        let dpsi = cx.random(2, &mut r, 1.0).unwrap();
        let lhs = cx.pairing(&cx.differential(&phi).unwrap(), &dpsi, None).unwrap();
        let rhs = cx.pairing(&phi, &cx.boundary(&dpsi).unwrap(), None).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn transforms_invert_and_localize(seed in any::<u64>(), n in 3usize..6) {
        let cx = closed_cover(seed, n);
        let mut r = rng(seed ^ 2);
        let u = cx.random(0, &mut r, 1.0).unwrap();
        let phi = cx.random(1, &mut r, 1.0).unwrap();
        prop_assert!(mobius0(&cx, &zeta0(&cx, &u).unwrap()).unwrap().max_abs_diff(&u).unwrap() < 1e-10);
        prop_assert!(mobius1(&cx, &zeta1(&cx, &phi).unwrap()).unwrap().max_abs_diff(&phi).unwrap() < 1e-10);
        let (zu, zphi) = (zeta0(&cx, &u).unwrap(), zeta1(&cx, &phi).unwrap());
        for a in 0..cx.len() {
            let (sub, map) = cx.cone(a).unwrap();
            let lu = zeta0(&sub, &cx.restrict_field(&u, &sub, &map).unwrap()).unwrap();
            prop_assert_eq!(lu, cx.restrict_field(&zu, &sub, &map).unwrap());
            let lphi = zeta1(&sub, &cx.restrict_field(&phi, &sub, &map).unwrap()).unwrap();
            prop_assert!(lphi.max_abs_diff(&cx.restrict_field(&zphi, &sub, &map).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn interaction_projection_properties(seed in any::<u64>(), n in 3usize..6) {
        let cx = closed_cover(seed, n);
        let mut r = rng(seed ^ 3);
        let u = cx.random(0, &mut r, 1.0).unwrap();
        let p = interaction_projection(&cx, &u).unwrap();
        prop_assert!(interaction_projection(&cx, &p).unwrap().max_abs_diff(&p).unwrap() < 1e-10);
        // P keeps the homology class
        prop_assert!(homologous(&cx, &u, &p, 1e-10).unwrap());
        let d = cx.boundary(&cx.random(1, &mut r, 1.0).unwrap()).unwrap();
        prop_assert!(interaction_projection(&cx, &d).unwrap().max_abs() < 1e-10);
        let eta = cx.boundary(&homotopy(&cx, &u).unwrap()).unwrap();
        prop_assert!(eta.max_abs_diff(&u.sub(&homotopy_defect(&cx, &u).unwrap()).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn gibbs_ignores_constant_shifts(values in prop::collection::vec(-20.0f64..20.0, 8), c in -50.0f64..50.0) {
        let shape = Domain::uniform(&Region::from([0, 1, 2]), 2).shape(&Region::from([0, 1, 2])).unwrap();
        let h = Tensor::new(shape, values).unwrap();
        let a = gibbs(&h);
        let b = gibbs(&h.map(|v| v + c));
        prop_assert!(a.tensor().max_abs_diff(b.tensor()).unwrap() < 1e-12);
        prop_assert!((a.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_expectation_tower(h in prop::collection::vec(-3.0f64..3.0, 12), f in prop::collection::vec(-3.0f64..3.0, 12)) {
        let domain = Domain::new([(0, 2), (1, 3), (2, 2)]).unwrap();
        let shape = domain.shape(&Region::from([0, 1, 2])).unwrap();
        let (h, f) = (Tensor::new(shape.clone(), h).unwrap(), Tensor::new(shape, f).unwrap());
        let (b, c) = (Region::from([0, 1]), Region::from([1]));
        let once = conditional_expectation(&h, &f, &b).unwrap();
        let twice = conditional_expectation(&effective_energy(&h, &b).unwrap(), &once, &c).unwrap();
        prop_assert!(twice.max_abs_diff(&conditional_expectation(&h, &f, &c).unwrap()).unwrap() < 1e-10);
        // idempotent onto observables of b
        let fb = once.extend(h.shape()).unwrap();
        prop_assert!(conditional_expectation(&h, &fb, &b).unwrap().max_abs_diff(&once).unwrap() < 1e-12);
    }

    #[test]
    fn effective_energy_marginalises(h in prop::collection::vec(-5.0f64..5.0, 8)) {
        let shape = Domain::uniform(&Region::from([0, 1, 2]), 2).shape(&Region::from([0, 1, 2])).unwrap();
        let h = Tensor::new(shape, h).unwrap();
        for b in [Region::from([0]), Region::from([0, 2]), Region::empty()] {
            let lhs = gibbs(&effective_energy(&h, &b).unwrap());
            let rhs = gibbs(&h).tensor().partial_sum(&b).unwrap();
            prop_assert!(lhs.tensor().max_abs_diff(&rhs).unwrap() < 1e-12);
        }
        let f = effective_energy(&h, &Region::empty()).unwrap().values()[0];
        prop_assert!((f - free_energy(&h, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exact_marginals_are_consistent(seed in any::<u64>()) {
        let cx = closed_cover(seed, 5);
        let h = fixtures::random_potentials(&cx, &mut rng(seed ^ 4), 2.0).unwrap();
        let m = globalize(&cx, &h).unwrap();
        let p = exact_marginals(&m, &cx).unwrap();
        prop_assert!(consistency_defect(&cx, &p).unwrap() < 1e-12);
        let (big_u, _) = global_pass(&m, &cx).unwrap();
        prop_assert!(effective_gradient(&cx, &big_u).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn canonical_flux_is_exact_on_trees(seed in any::<u64>(), n in 3usize..8) {
        let cx = binary(fixtures::random_tree_cover(&mut rng(seed), n));
        let h = fixtures::random_potentials(&cx, &mut rng(seed ^ 5), 1.5).unwrap();
        let bound = cx.hypergraph().diameter().value + 1;
        let cfg = RunConfig { max_iters: bound, mode: DivergenceMode::Full, normalize_each_step: false, ..RunConfig::default() };
        let (eq, _) = run(&cx, &h, FluxKind::Canonical, &cfg).unwrap();
        prop_assert!(eq.converged(), "{:?} after {} steps", eq.status, eq.iterations);
        let p = exact_marginals(&globalize(&cx, &h).unwrap(), &cx).unwrap();
        prop_assert!(max_tv(&eq.q, &p) < 1e-8);
    }
}

#[test]
fn bundled_fixtures_pass_the_check_suite() {
    for name in ["c1", "t1", "triangle", "tree7", "triangle_stiff", "clamp_chain"] {
        let m = load(name);
        let rep = check_model(&m.complex, &m.potentials, 0);
        let bad: Vec<_> = rep.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect();
        assert!(bad.is_empty(), "{name}: {bad:#?}");
    }
}

#[test]
fn clamped_chain_matches_oracle_conditionals() {
    let m = load("clamp_chain");
    let cx = &m.complex;
    let (u0, mode) = m.clamped().unwrap();
    let cfg = RunConfig { step: 0.5, max_iters: 2000, mode, ..RunConfig::default() };
    for kind in [FluxKind::Standard, FluxKind::Canonical] {
        let (eq, _) = run(cx, &u0, kind, &cfg).unwrap();
        assert!(eq.converged(), "{kind:?}");
        // P(x0, x1, x2 | x2 = 0) by enumeration of the unclamped model
        let g = globalize(cx, &m.potentials).unwrap().gibbs();
        let mut cond =
            g.values().iter().enumerate().map(|(k, &v)| if k % 2 == 0 { v } else { 0.0 }).collect::<Vec<_>>();
        let z: f64 = cond.iter().sum();
        cond.iter_mut().for_each(|v| *v /= z);
        let cond = Tensor::new(g.tensor().shape().clone(), cond).unwrap();
        for a in 0..cx.len() {
            let p = cond.partial_sum(cx.region(a)).unwrap();
            assert!(eq.q[a].tensor().max_abs_diff(&p).unwrap() < 1e-6, "{kind:?} {}", cx.region(a));
        }
    }
}

#[test]
fn clamping_to_own_boundary_keeps_the_equilibrium() {
    let cx = binary(fixtures::clamp_chain());
    let h = fixtures::random_potentials(&cx, &mut rng(9), 1.0).unwrap();
    let cfg = RunConfig { step: 0.5, max_iters: 2000, ..RunConfig::default() };
    let (free, _) = run(&cx, &h, FluxKind::Standard, &cfg).unwrap();
    let boundary = Region::from([2]);
    let u0 = clamp_boundary(&cx, &free.u, &boundary, &free.u).unwrap();
    let clamped = RunConfig { mode: DivergenceMode::Interior { boundary }, ..cfg };
    let (eq, _) = run(&cx, &u0, FluxKind::Standard, &clamped).unwrap();
    assert!(eq.converged());
    assert!(max_tv(&eq.q, &free.q) < 1e-8);
}

#[test]
fn all_boundary_run_is_a_no_op() {
    let cx = binary(fixtures::t1());
    let h = fixtures::random_potentials(&cx, &mut rng(10), 1.0).unwrap();
    let cfg = RunConfig {
        mode: DivergenceMode::Interior { boundary: cx.hypergraph().omega().clone() },
        ..RunConfig::default()
    };
    let (eq, _) = run(&cx, &h, FluxKind::Standard, &cfg).unwrap();
    assert_eq!(eq.iterations, 0);
    assert_eq!(eq.u, h);
}

#[test]
fn trace_lines_parse() {
    let m = load("t1");
    let (_, trace) = run(&m.complex, &m.potentials, FluxKind::Standard, &RunConfig::default()).unwrap();
    let text = trace.to_json_lines().unwrap();
    let back: Vec<TraceEntry> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back, trace.entries);
}

#[test]
fn standard_flux_agrees_with_oracle_on_trees() {
    let m = load("tree7");
    let cfg = RunConfig { step: 0.5, max_iters: 2000, ..RunConfig::default() };
    let (eq, _) = run(&m.complex, &m.potentials, FluxKind::Standard, &cfg).unwrap();
    let p = exact_marginals(&globalize(&m.complex, &m.potentials).unwrap(), &m.complex).unwrap();
    assert!(eq.converged());
    assert!(max_tv(&eq.q, &p) < 1e-8);
}
