use super::gf2::poly_mul;
use super::PostError;
use crate::bits::BitString;

pub fn toeplitz_seed_len(input_len: usize, out_len: usize) -> usize {
    input_len + out_len - 1
}

/// Toeplitz hash `y = T·x` with `T[i][j] = seed[i − j + n − 1]`.
///
/// Bit `i` of the output is the coefficient of `z^{i+n−1}` in `S(z)·X(z)`,
/// so the whole matrix-vector product is one carry-less polynomial
/// multiplication.
pub fn privacy_amplify(input: &BitString, out_len: usize, seed: &BitString) -> Result<BitString, PostError> {
    let n = input.len();
    if out_len >= n {
        return Err(PostError::OutputTooLong { out: out_len, input: n });
    }
    if out_len == 0 {
        return Ok(BitString::new());
    }
    let expected = toeplitz_seed_len(n, out_len);
    if seed.len() != expected {
        return Err(PostError::SeedLength {
            got: seed.len(),
            expected,
        });
    }
    let product = poly_mul(seed.words(), input.words());
    let bits = product.len() * 64;
    Ok(BitString::from_words(product, bits).slice(n - 1, out_len))
}
