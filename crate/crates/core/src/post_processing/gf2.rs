//! Carry-less arithmetic on little-endian `u64` word vectors.
//!
//! Bit `i` of a polynomial is the coefficient of `z^i`, stored as bit
//! `i % 64` of word `i / 64`, matching [`BitString`](crate::BitString).

const KARATSUBA_CUTOFF: usize = 24;

/// 64×64 → 128-bit carry-less product as `(low, high)`.
pub fn clmul64(a: u64, b: u64) -> (u64, u64) {
    // 4-bit window over `b`; table entries are a·x for x < 16 as 128-bit values.
    let mut tab = [(0u64, 0u64); 16];
    for x in 1..16usize {
        let mut lo = 0u64;
        let mut hi = 0u64;
        for bit in 0..4 {
            if x >> bit & 1 == 1 {
                lo ^= a << bit;
                if bit > 0 {
                    hi ^= a >> (64 - bit);
                }
            }
        }
        tab[x] = (lo, hi);
    }
    let mut lo = 0u64;
    let mut hi = 0u64;
    for nib in (0..16).rev() {
        // shift accumulator left by 4
        hi = hi << 4 | lo >> 60;
        lo <<= 4;
        let (tl, th) = tab[(b >> (nib * 4) & 0xF) as usize];
        lo ^= tl;
        hi ^= th;
    }
    (lo, hi)
}

fn schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let (lo, hi) = clmul64(x, y);
            out[i + j] ^= lo;
            out[i + j + 1] ^= hi;
        }
    }
}

/// XORs `a · b` into `out`; `a` and `b` have equal length and
/// `out.len() >= 2 · a.len()`.
fn karatsuba(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_CUTOFF {
        schoolbook(a, b, out);
        return;
    }
    let h = n / 2;
    let m = n - h;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);

    let mut z0 = vec![0u64; 2 * h];
    karatsuba(a0, b0, &mut z0);
    let mut z2 = vec![0u64; 2 * m];
    karatsuba(a1, b1, &mut z2);

    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..h {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = vec![0u64; 2 * m];
    karatsuba(&sa, &sb, &mut z1);
    for (i, w) in z0.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        z1[i] ^= w;
    }

    for (i, w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, w) in z1.iter().enumerate() {
        out[i + h] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        out[i + 2 * h] ^= w;
    }
}

/// Full product of two polynomials; result has `a.len() + b.len()` words.
pub fn poly_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    // Cut the longer operand into chunks of the shorter one's length and
    // multiply each chunk with equal-size Karatsuba.
    let s = short.len();
    let mut scratch = vec![0u64; 2 * s];
    let mut chunk = vec![0u64; s];
    for start in (0..long.len()).step_by(s) {
        let end = (start + s).min(long.len());
        chunk.fill(0);
        chunk[..end - start].copy_from_slice(&long[start..end]);
        scratch.fill(0);
        karatsuba(&chunk, short, &mut scratch);
        let limit = (out.len() - start).min(2 * s);
        for i in 0..limit {
            out[start + i] ^= scratch[i];
        }
    }
    out
}

/// Multiplication in GF(2^64) modulo `x^64 + x^4 + x^3 + x + 1`.
pub fn gf64_mul(a: u64, b: u64) -> u64 {
    let (lo, hi) = clmul64(a, b);
    // x^64 ≡ x^4 + x^3 + x + 1; fold the high word twice.
    let (l1, h1) = clmul64(hi, 0x1B);
    let (l2, _) = clmul64(h1, 0x1B);
    lo ^ l1 ^ l2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_clmul(a: u64, b: u64) -> u128 {
        let mut r = 0u128;
        for i in 0..64 {
            if b >> i & 1 == 1 {
                r ^= (a as u128) << i;
            }
        }
        r
    }

    fn naive_poly_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len()];
        for i in 0..a.len() * 64 {
            if a[i / 64] >> (i % 64) & 1 == 0 {
                continue;
            }
            for j in 0..b.len() * 64 {
                if b[j / 64] >> (j % 64) & 1 == 1 {
                    out[(i + j) / 64] ^= 1 << ((i + j) % 64);
                }
            }
        }
        out
    }

    fn naive_gf64(a: u64, b: u64) -> u64 {
        let mut r = naive_clmul(a, b);
        for i in (64..128).rev() {
            if r >> i & 1 == 1 {
                r ^= 0x1Bu128 << (i - 64) | 1u128 << i;
            }
        }
        r as u64
    }

    #[test]
    fn small_products() {
        assert_eq!(clmul64(0b11, 0b11), (0b101, 0));
        assert_eq!(clmul64(1 << 63, 2), (0, 1));
        assert_eq!(gf64_mul(1 << 63, 2), 0x1B);
        assert_eq!(gf64_mul(123456789, 1), 123456789);
    }

    proptest! {
        #[test]
        fn clmul_matches_bitwise(a: u64, b: u64) {
            let (lo, hi) = clmul64(a, b);
            prop_assert_eq!((hi as u128) << 64 | lo as u128, naive_clmul(a, b));
        }

        #[test]
        fn gf64_matches_reduction(a: u64, b: u64) {
            prop_assert_eq!(gf64_mul(a, b), naive_gf64(a, b));
        }

        #[test]
        fn poly_mul_matches_naive(a in prop::collection::vec(any::<u64>(), 0..8), b in prop::collection::vec(any::<u64>(), 0..8)) {
            prop_assert_eq!(poly_mul(&a, &b), naive_poly_mul(&a, &b));
        }
    }

    #[test]
    fn karatsuba_path_matches_schoolbook() {
        use rand::Rng;
        let mut rng = crate::rng::substream(9, crate::rng::Purpose::Synthetic, 0);
        for (la, lb) in [(100, 100), (257, 61), (61, 300), (1, 90), (77, 77)] {
            let a: Vec<u64> = (0..la).map(|_| rng.random()).collect();
            let b: Vec<u64> = (0..lb).map(|_| rng.random()).collect();
            let mut expect = vec![0u64; la + lb];
            schoolbook(&a, &b, &mut expect);
            assert_eq!(poly_mul(&a, &b), expect, "{la}x{lb}");
        }
    }
}
