//! Seeded random points for property checks and scans.

use num_bigint::BigInt;
use rand::Rng;
pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SeededRng;

use crate::address::CantorAddress;
use crate::point::LaaksoPoint;
use crate::rational::Rational;

pub fn rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

pub fn random_address<R: Rng>(rng: &mut R, depth: usize) -> CantorAddress {
    CantorAddress::new((0..depth).map(|_| rng.gen()).collect())
}

/// Height `k/denom` with `k` uniform in `lo..=hi`.
pub fn random_height<R: Rng>(rng: &mut R, denom: u64, lo: u64, hi: u64) -> Rational {
    Rational::new(BigInt::from(rng.gen_range(lo..=hi)), BigInt::from(denom))
}

/// A point with height in `[0,1]` on the `1/denom` grid and a random address of `depth` bits.
pub fn random_point<R: Rng>(rng: &mut R, depth: usize, denom: u64) -> LaaksoPoint {
    let h = random_height(rng, denom, 0, denom);
    LaaksoPoint::new(h, random_address(rng, depth)).expect("grid heights lie in [0,1]")
}

/// As [`random_point`] but with height strictly inside `(0,1)`.
pub fn random_interior_point<R: Rng>(rng: &mut R, depth: usize, denom: u64) -> LaaksoPoint {
    let h = random_height(rng, denom, 1, denom - 1);
    LaaksoPoint::new(h, random_address(rng, depth)).expect("grid heights lie in [0,1]")
}
