use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vineyard_core::field::{Field, PrimeField, Rationals};
use vineyard_core::io::format::{parse, serialize, AnyModule};
use vineyard_core::io::generate::{generate_random, random_transform, RandomParams, TwistSite};
use vineyard_core::module::{reps_equal, VineyardModuleRep};
use vineyard_core::simplify::{backward_simplify, forward_simplify, simplify, verify_witness};

fn params(seed: u64, twisted: bool) -> RandomParams {
    RandomParams {
        seed,
        n_vines: 2 + (seed % 2) as usize,
        n_times: 5,
        obfuscate: true,
        twists: if twisted { vec![TwistSite::Stuck, TwistSite::Random] } else { vec![] },
        bounce: twisted,
        ..Default::default()
    }
}

fn verdict<F: Field>(m: &VineyardModuleRep<F>) -> bool {
    simplify(m).unwrap().is_trivial().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn obfuscated_trivial_modules_are_trivial(seed in 0u64..10_000) {
        let f = PrimeField::new(3).unwrap();
        let m = generate_random(&f, &params(seed, false)).unwrap();
        prop_assert!(m.is_valid());
        let s = simplify(&m).unwrap();
        prop_assert!(s.diagnostics.is_empty());
        let (yes, w) = s.is_trivial();
        prop_assert!(yes);
        prop_assert!(verify_witness(&m, w.unwrap()));
    }

    #[test]
    fn verdict_survives_change_of_basis(seed in 0u64..10_000) {
        let f = PrimeField::gf2();
        let m = generate_random(&f, &params(seed, true)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i = seed as usize % m.vineyard().grid().len();
        let t = random_transform(&mut rng, &m, i);
        let c = m.change_basis(i, &t).unwrap();
        prop_assert!(c.is_valid());
        prop_assert_eq!(verdict(&m), verdict(&c));
    }

    #[test]
    fn passes_never_fail_on_valid_modules(seed in 0u64..10_000) {
        let m = generate_random(&Rationals, &params(seed, true)).unwrap();
        prop_assert!(forward_simplify(&m).is_ok());
        prop_assert!(backward_simplify(&m).is_ok());
        let s = simplify(&m).unwrap();
        prop_assert!(reps_equal(&m.conjugate(&s.transforms).unwrap(), &s.rep));
    }

    #[test]
    fn files_round_trip(seed in 0u64..10_000) {
        let m = generate_random(&PrimeField::new(7).unwrap(), &params(seed, true)).unwrap();
        let text = serialize(&m);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &AnyModule::Prime(m));
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn generation_is_deterministic(seed in 0u64..10_000) {
        let f = PrimeField::gf2();
        let a = serialize(&generate_random(&f, &params(seed, true)).unwrap());
        let b = serialize(&generate_random(&f, &params(seed, true)).unwrap());
        prop_assert_eq!(a, b);
    }
}
