//! Properties that every trilocal behavior must have.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netbound::inequalities::{run_checks, IneqSelection, Status};
use netbound::lpfeas::nsi_feasible;
use netbound::scalar::rat;
use netbound::trilocal::{depolarize, depolarize_model, random_rational_model};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trilocal_behaviors_pass_every_proven_check(seed in any::<u64>(), d in 1usize..=3) {
        let m = random_rational_model(&mut ChaCha8Rng::seed_from_u64(seed), d, 5);
        let dist = m.evaluate();
        prop_assert!(dist.is_normalized() && dist.is_nonnegative());
        let b = m.behavior();
        prop_assert!(b.in_range());
        prop_assert!(nsi_feasible(&b).unwrap().is_feasible());
        for r in run_checks(&b, IneqSelection::All).unwrap() {
            if r.status == Status::Proven {
                prop_assert!(r.satisfied, "{} fails", r.name);
            }
        }
    }

    #[test]
    fn depolarization_commutes_with_evaluation(seed in any::<u64>(), k in 0i64..=4) {
        let m = random_rational_model(&mut ChaCha8Rng::seed_from_u64(seed), 2, 4);
        let eta = rat(k, 4);
        let shrunk = depolarize_model(&m, &eta).unwrap();
        prop_assert_eq!(shrunk.behavior(), depolarize(&m.behavior(), &eta));
        prop_assert!(nsi_feasible(&shrunk.behavior()).unwrap().is_feasible());
    }
}
