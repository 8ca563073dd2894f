//! Natural-number helpers shared by the evaluators: Cantor pairing and its
//! inverses, integer square roots and exact logarithms.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Cantor pairing `[x | y] = (x + y)(x + y + 1)/2 + x`.
pub fn pair(x: &BigUint, y: &BigUint) -> BigUint {
    let s = x + y;
    ((&s * (&s + 1u32)) >> 1) + x
}

/// Triangular root: the largest `w` with `w(w+1)/2 <= z`.
fn triangular_root(z: &BigUint) -> BigUint {
    let disc: BigUint = (z << 3) + 1u32;
    let w = (isqrt(&disc) - 1u32) >> 1;
    debug_assert!({
        let t = (&w * (&w + 1u32)) >> 1;
        let next = ((&w + 1u32) * (&w + 2u32)) >> 1;
        t <= *z && *z < next
    });
    w
}

/// Inverse of [`pair`]: `unpair(pair(x, y)) == (x, y)`.
pub fn unpair(z: &BigUint) -> (BigUint, BigUint) {
    let w = triangular_root(z);
    let t = (&w * (&w + 1u32)) >> 1;
    let x = z - t;
    let y = &w - &x;
    (x, y)
}

pub fn unpair_left(z: &BigUint) -> BigUint {
    unpair(z).0
}

pub fn unpair_right(z: &BigUint) -> BigUint {
    unpair(z).1
}

/// Floor square root, checked against `r^2 <= n < (r+1)^2`.
pub fn isqrt(n: &BigUint) -> BigUint {
    let mut r = n.sqrt();
    // The library routine is exact; the loops only guard the contract.
    while &r * &r > *n {
        r -= 1u32;
    }
    loop {
        let next = &r + 1u32;
        if &next * &next <= *n {
            r = next;
        } else {
            break;
        }
    }
    r
}

/// `Some(k)` when `n == base^k`.
pub fn exact_log(n: &BigUint, base: u32) -> Option<u64> {
    assert!(base >= 2);
    if n.is_zero() {
        return None;
    }
    if n.is_one() {
        return Some(0);
    }
    if base.is_power_of_two() {
        let shift = u64::from(base.trailing_zeros());
        let tz = n.trailing_zeros()?;
        return (n.bits() == tz + 1 && tz % shift == 0).then_some(tz / shift);
    }
    if (n % base).is_zero() {
        // base^k has bit length within one of k * log2(base) + 1.
        let approx = (n.bits() - 1) as f64 / f64::from(base).log2();
        let guess = approx.round() as u64;
        let lo = guess.saturating_sub(2);
        let big_base = BigUint::from(base);
        let mut p = big_base.pow(u32::try_from(lo).ok()?);
        for k in lo..=guess + 2 {
            match p.cmp(n) {
                std::cmp::Ordering::Equal => return Some(k),
                std::cmp::Ordering::Greater => return None,
                std::cmp::Ordering::Less => p *= &big_base,
            }
        }
    }
    None
}

/// Bit length of `3^(k)`, rounded up; used to reject towers before building them.
pub fn pow_bits_upper(base: u32, exponent: &BigUint) -> Option<u64> {
    let e = exponent.to_f64()?;
    let bits = e * f64::from(base).log2() + 1.0;
    (bits.is_finite() && bits < u64::MAX as f64).then_some(bits.ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&n(1), &n(2)), n(7));
        assert_eq!(unpair(&n(7)), (n(1), n(2)));
        assert_eq!(pair(&n(0), &n(0)), n(0));
        assert_eq!(pair(&n(2), &n(1)), n(8));
    }

    #[test]
    fn pairing_round_trips_on_a_dense_range() {
        for z in 0..20_000u64 {
            let (x, y) = unpair(&n(z));
            assert_eq!(pair(&x, &y), n(z));
        }
    }

    #[test]
    fn isqrt_boundaries() {
        for v in 0..2000u64 {
            let r = isqrt(&n(v)).to_u64().unwrap();
            assert!(r * r <= v && (r + 1) * (r + 1) > v);
        }
        let big = BigUint::from(10u32).pow(80);
        assert_eq!(isqrt(&big), BigUint::from(10u32).pow(40));
    }

    #[test]
    fn exact_log_detects_powers() {
        assert_eq!(exact_log(&n(1), 3), Some(0));
        assert_eq!(exact_log(&n(27), 3), Some(3));
        assert_eq!(exact_log(&n(28), 3), None);
        assert_eq!(exact_log(&n(0), 5), None);
        assert_eq!(exact_log(&n(390625), 5), Some(8));
        assert_eq!(exact_log(&n(64), 2), Some(6));
        assert_eq!(exact_log(&n(96), 2), None);
        let big = BigUint::from(3u32).pow(5000);
        assert_eq!(exact_log(&big, 3), Some(5000));
        assert_eq!(exact_log(&(big + 3u32), 3), None);
    }
}
