use galmono::monodromy::{
    complete_fiber, default_loop_scale, harvest_permutations, loop_permutation, random_loop, verify_deck_formula,
    LoopResult, MonodromyConfig,
};
use galmono::perm::Permutation;
use galmono::problems::{find, instantiate, ProblemInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(id: &str, seed: u64) -> (ProblemInstance, galmono::monodromy::FiberState, ChaCha8Rng) {
    let p = find(id).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = instantiate(p.as_ref(), &mut rng).unwrap();
    let fiber = complete_fiber(
        &inst.system,
        &inst.seed,
        p.expected_degree(),
        &MonodromyConfig::default(),
        &mut rng,
    )
    .unwrap();
    (inst, fiber, rng)
}

fn sigma(r: LoopResult) -> Permutation {
    match r {
        LoopResult::Permutation(p) => p,
        other => panic!("loop failed: {other:?}"),
    }
}

#[test]
fn concatenated_loops_compose() {
    let (inst, fiber, mut rng) = setup("p3p", 2);
    let cfg = MonodromyConfig::default();
    let scale = default_loop_scale(&fiber.z_star);
    let a = random_loop(&fiber.z_star, &mut rng, scale);
    let b = random_loop(&fiber.z_star, &mut rng, scale);
    let sa = sigma(loop_permutation(&inst.system, &fiber, &a, &cfg).unwrap());
    let sb = sigma(loop_permutation(&inst.system, &fiber, &b, &cfg).unwrap());
    let sab = sigma(loop_permutation(&inst.system, &fiber, &a.concat(&b), &cfg).unwrap());
    assert_eq!(sab, sa.then(&sb));
    let inv = sigma(loop_permutation(&inst.system, &fiber, &a.reversed(), &cfg).unwrap());
    assert_eq!(inv, sa.inverse());
}

#[test]
fn fiber_solutions_are_distinct_solutions() {
    let (inst, fiber, _) = setup("abs-pose-3-0", 4);
    assert_eq!(fiber.len(), 8);
    assert!(fiber.complete);
    for x in &fiber.solutions {
        let r = inst.system.eval(x, &fiber.z_star).unwrap();
        assert!(galmono::linalg::inf_norm(r.as_slice()) < 1e-9);
    }
    assert!(fiber.min_separation() > 1e-4);
}

#[test]
fn harvest_is_reproducible() {
    let run = || {
        let (inst, fiber, mut rng) = setup("p3p", 8);
        harvest_permutations(&inst.system, &fiber, 6, &MonodromyConfig::default(), &mut rng).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.permutations.len(), 6);
}

#[test]
fn sign_flip_is_a_central_involution() {
    let (inst, fiber, mut rng) = setup("p3p", 1);
    let sample = harvest_permutations(&inst.system, &fiber, 8, &MonodromyConfig::default(), &mut rng).unwrap();
    let d = inst.deck_map("sign_flip").unwrap();
    let rep = verify_deck_formula(&inst.system, &fiber, d.name, d.map.as_ref()).unwrap();
    assert!(rep.is_involution && rep.fixed_point_free);
    assert!(rep.max_residual < 1e-6);
    assert!(sample.permutations.iter().all(|g| g.commutes_with(&rep.index_map)));
}

#[test]
fn harvest_requires_complete_fiber() {
    let (inst, mut fiber, mut rng) = setup("toy-cubic", 0);
    fiber.complete = false;
    assert!(harvest_permutations(&inst.system, &fiber, 2, &MonodromyConfig::default(), &mut rng).is_err());
}
