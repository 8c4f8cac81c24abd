use num_complex::Complex64;

use crate::toral::{IntMatrix2, ToralAutomorphism, ToralError};
use crate::Error;

/// `(A^T)^n k`, with overflow reported.
pub fn transpose_power_apply(
    aut: &ToralAutomorphism,
    k: [i128; 2],
    n: u32,
) -> Result<[i128; 2], Error> {
    let at: IntMatrix2 = aut.matrix().transpose();
    let p = at.checked_pow(n)?;
    Ok(p.mul_vec(k).ok_or(ToralError::Overflow("(A^T)^n k"))?)
}

/// Correlation `int e_k(A^n x) conj(e_l(x)) dx` of the characters
/// `e_k(x) = exp(2 pi i <k, x>)`. Since `e_k o A^n = e_{(A^T)^n k}`, the
/// integral is 1 when `(A^T)^n k = l` and 0 otherwise.
pub fn character_correlation(
    aut: &ToralAutomorphism,
    k: [i128; 2],
    l: [i128; 2],
    n: u32,
) -> Result<Complex64, Error> {
    if k == [0, 0] || l == [0, 0] {
        return Err(crate::invalid("k, l", "characters must be non-trivial"));
    }
    let image = transpose_power_apply(aut, k, n)?;
    Ok(if image == l {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    })
}
