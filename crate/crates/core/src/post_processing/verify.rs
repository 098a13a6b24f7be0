use super::gf2::gf64_mul;
use crate::bits::BitString;

pub const VERIFY_HASH_BITS: u64 = 64;

/// Polynomial hash over GF(2^64): Horner evaluation at `point` of the
/// message words followed by the bit length. Two distinct strings of at
/// most `L` words collide for at most `(L + 1) / 2^64` of the points.
pub fn poly_hash(bits: &BitString, point: u64) -> u64 {
    let mut acc = 0u64;
    for &w in bits.words() {
        acc = gf64_mul(acc ^ w, point);
    }
    gf64_mul(acc ^ bits.len() as u64, point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use rand::Rng;

    #[test]
    fn detects_single_flips_and_length_changes() {
        let mut rng = substream(1, Purpose::Synthetic, 0);
        let a = BitString::random(1000, &mut rng);
        for _ in 0..200 {
            let point: u64 = rng.random();
            let mut b = a.clone();
            b.flip(rng.random_range(0..1000));
            assert_ne!(poly_hash(&a, point), poly_hash(&b, point));
        }
        let mut longer = a.clone();
        longer.push(false);
        assert_ne!(poly_hash(&a, 7), poly_hash(&longer, 7));
        assert_eq!(poly_hash(&a, 99), poly_hash(&a.clone(), 99));
    }
}
