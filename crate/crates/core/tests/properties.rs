use laakso::rational::{inv_pow3, Rational};
use laakso::wormhole::gaps;
use laakso::{distance, minimal_height_intervals, CantorAddress, LaaksoPoint};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

const DENOM: i64 = 486;

fn point() -> impl Strategy<Value = LaaksoPoint> {
    (0..=DENOM, prop::collection::vec(any::<bool>(), 0..6)).prop_map(|(k, bits)| {
        LaaksoPoint::new(
            Rational::new(BigInt::from(k), BigInt::from(DENOM)),
            CantorAddress::new(bits),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(x in point(), y in point(), z in point()) {
        let dxy = distance(&x, &y);
        prop_assert_eq!(&dxy, &distance(&y, &x));
        prop_assert!(dxy <= distance(&x, &z) + distance(&z, &y));
        prop_assert!(dxy >= (x.height() - y.height()).abs());
        prop_assert_eq!(dxy.is_zero(), x == y);
    }

    #[test]
    fn canonicalize_is_idempotent(x in point()) {
        let c = x.canonicalize();
        prop_assert_eq!(c.canonicalize().address().clone(), c.address().clone());
        prop_assert_eq!(&c, &x);
        prop_assert_eq!(distance(&c, &x), Rational::zero());
    }

    #[test]
    fn gaps_straddle_a_level_spacing(k in 1..DENOM, n in 1u32..7) {
        let t = Rational::new(BigInt::from(k), BigInt::from(DENOM));
        let (up, down) = gaps(&t, n);
        if let (Some(up), Some(down)) = (up.finite(), down.finite()) {
            prop_assert!(up + down >= inv_pow3(n));
        }
    }

    #[test]
    fn minimal_intervals_contain_both_heights(x in point(), y in point()) {
        for iv in minimal_height_intervals(&x, &y) {
            prop_assert!(iv.contains(x.height()) && iv.contains(y.height()));
        }
    }
}
