//! Exact integer and modular arithmetic: residue symbols, primality,
//! factorization, square detection and CRT assembly.
//!
//! Everything here works on machine integers with 128-bit intermediates.
//! Inputs to [`make_squarefree`] are capped at 2^40 in magnitude, and moduli
//! are capped at 2^63, so no product in this module can overflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest magnitude accepted for a family member.
pub const MAX_MAGNITUDE: i64 = 1 << 40;

/// Largest modulus handled by the modular routines.
pub const MAX_MODULUS: u64 = 1 << 63;

/// Trial division runs up to this bound before Pollard rho takes over.
const TRIAL_DIVISION_BOUND: u64 = 1 << 20;

/// Rho attempts (distinct polynomial constants) before giving up on a cofactor.
const RHO_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NtError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("Jacobi symbol needs an odd positive modulus, got {0}")]
    BadJacobiModulus(i128),
    #[error("{value} is not square-free ({prime}^2 divides it)")]
    NotSquareFree { value: i64, prime: u64 },
    #[error("could not factor {0} within the factorization budget")]
    Unfactorable(u64),
    #[error("{0} is outside the supported range |n| <= 2^40")]
    OutOfRange(i64),
    #[error("{0} is not allowed (values 0 and 1 are excluded)")]
    DisallowedValue(i64),
    #[error("moduli {0} and {1} are not coprime")]
    NonCoprimeModuli(u64, u64),
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("result exceeds 2^63")]
    Overflow,
}

/// A validated square-free integer other than 0 and 1, stored with its
/// factorization so that square-freeness is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct SquareFreeInt {
    value: i64,
    odd_primes: Vec<u64>,
    has_factor_two: bool,
}

impl SquareFreeInt {
    pub fn value(&self) -> i64 {
        self.value
    }

    /// +1 or -1.
    pub fn sign(&self) -> i8 {
        if self.value < 0 {
            -1
        } else {
            1
        }
    }

    pub fn is_negative(&self) -> bool {
        self.value < 0
    }

    /// Odd primes dividing the value, strictly increasing.
    pub fn odd_primes(&self) -> &[u64] {
        &self.odd_primes
    }

    pub fn has_factor_two(&self) -> bool {
        self.has_factor_two
    }

    /// All primes dividing the value, 2 first when present.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.has_factor_two
            .then_some(2)
            .into_iter()
            .chain(self.odd_primes.iter().copied())
    }

    pub fn divisible_by(&self, p: u64) -> bool {
        self.value.unsigned_abs().is_multiple_of(p)
    }

    /// Residue of the value in `[0, m)`.
    pub fn residue(&self, m: u64) -> u64 {
        reduce(self.value as i128, m)
    }
}

impl TryFrom<i64> for SquareFreeInt {
    type Error = NtError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        make_squarefree(value)
    }
}

impl From<SquareFreeInt> for i64 {
    fn from(s: SquareFreeInt) -> i64 {
        s.value
    }
}

impl std::fmt::Display for SquareFreeInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A prime power `prime^exponent` whose value fits below 2^63.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimePower {
    prime: u64,
    exponent: u32,
    modulus: u64,
}

impl PrimePower {
    pub fn new(prime: u64, exponent: u32) -> Result<Self, NtError> {
        if !is_prime(prime) {
            return Err(NtError::NotPrime(prime));
        }
        if exponent == 0 {
            return Err(NtError::ZeroModulus);
        }
        let modulus = checked_pow(prime, exponent).ok_or(NtError::Overflow)?;
        Ok(Self {
            prime,
            exponent,
            modulus,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

/// `base^exp` if it stays at or below 2^63.
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    let v = base.checked_pow(exp)?;
    (v <= MAX_MODULUS).then_some(v)
}

/// Reduces a signed value into `[0, m)`.
pub fn reduce(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a * b mod m` for moduli up to 2^127, by shift-and-add when the product
/// would not fit in 128 bits.
pub fn mul_mod_wide(a: u128, b: u128, m: u128) -> u128 {
    let (mut a, mut b) = (a % m, b % m);
    if a.leading_zeros() + b.leading_zeros() >= 128 {
        return a * b % m;
    }
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    acc
}

/// Inverse modulo `m < 2^126`.
pub fn inv_mod_wide(a: u128, m: u128) -> Option<u128> {
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m as i128) as u128)
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| reduce(old_s, m))
}

/// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn check_odd_prime(p: u64) -> Result<(), NtError> {
    if p.is_multiple_of(2) || !is_prime(p) {
        return Err(NtError::NotOddPrime(p));
    }
    Ok(())
}

/// Legendre symbol `(a/p)` by Euler's criterion.
pub fn legendre(a: i128, p: u64) -> Result<i8, NtError> {
    check_odd_prime(p)?;
    Ok(legendre_unchecked(a, p))
}

/// Legendre symbol for a modulus already known to be an odd prime.
pub(crate) fn legendre_unchecked(a: i128, p: u64) -> i8 {
    let r = reduce(a, p);
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Supplies Legendre symbols `(a/p)` for odd primes `p`; lets sweeps share a
/// cache across families.
pub trait LegendreSource: Sync {
    fn legendre(&self, a: i64, p: u64) -> i8;
}

/// Computes every symbol on demand.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectLegendre;

impl LegendreSource for DirectLegendre {
    fn legendre(&self, a: i64, p: u64) -> i8 {
        legendre_unchecked(a as i128, p)
    }
}

/// Jacobi symbol `(a/n)` for odd `n >= 1`, via the binary reciprocity algorithm.
pub fn jacobi(a: i128, n: i128) -> Result<i8, NtError> {
    if n <= 0 || n % 2 == 0 {
        return Err(NtError::BadJacobiModulus(n));
    }
    let mut n = n as u128;
    let mut a = a.rem_euclid(n as i128) as u128;
    let mut t = 1i8;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        if z % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            t = -t;
        }
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        (a, n) = (n % a, a);
    }
    Ok(if n == 1 { t } else { 0 })
}

/// Floor of the square root of `n`, exact.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    // Newton from an upper bound; strictly decreasing until it settles.
    let mut x = 1u128 << (128 - n.leading_zeros()).div_ceil(2);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

pub fn is_perfect_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u128);
    r * r == n as u128
}

fn pollard_brent(n: u64, c: u64) -> Option<u64> {
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut x, mut y, mut q) = (2u64, 2u64, 1u64);
    let mut g = 1u64;
    let mut r = 1u64;
    let mut ys = y;
    const BATCH: u64 = 128;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BATCH.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd(q, n);
            k += BATCH;
        }
        r *= 2;
        if r > 1 << 24 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn split_cofactor(n: u64, out: &mut Vec<u64>) -> Result<(), NtError> {
    if n == 1 {
        return Ok(());
    }
    if is_prime(n) {
        out.push(n);
        return Ok(());
    }
    let r = isqrt(n as u128) as u64;
    if r * r == n {
        split_cofactor(r, out)?;
        return split_cofactor(r, out);
    }
    for c in 1..=RHO_ATTEMPTS {
        if let Some(d) = pollard_brent(n, c) {
            split_cofactor(d, out)?;
            return split_cofactor(n / d, out);
        }
    }
    Err(NtError::Unfactorable(n))
}

/// Prime factorization of `n >= 1` as ascending `(prime, exponent)` pairs.
///
/// Trial division up to 2^20, then Pollard-Brent rho on whatever remains.
/// Every reported factor passes [`is_prime`].
pub fn factorize(mut n: u64) -> Result<Vec<(u64, u32)>, NtError> {
    if n == 0 {
        return Err(NtError::ZeroModulus);
    }
    let mut primes = Vec::new();
    let mut d = 2u64;
    while d <= TRIAL_DIVISION_BOUND && d * d <= n {
        while n.is_multiple_of(d) {
            primes.push(d);
            n /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    split_cofactor(n, &mut primes)?;
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        debug_assert!(is_prime(p));
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    Ok(out)
}

/// Validates `n` as a square-free integer outside {0, 1} and records its
/// factorization.
pub fn make_squarefree(n: i64) -> Result<SquareFreeInt, NtError> {
    if n == 0 || n == 1 {
        return Err(NtError::DisallowedValue(n));
    }
    if n.unsigned_abs() > MAX_MAGNITUDE as u64 {
        return Err(NtError::OutOfRange(n));
    }
    let mut odd_primes = Vec::new();
    let mut has_factor_two = false;
    for (p, e) in factorize(n.unsigned_abs())? {
        if e > 1 {
            return Err(NtError::NotSquareFree { value: n, prime: p });
        }
        if p == 2 {
            has_factor_two = true;
        } else {
            odd_primes.push(p);
        }
    }
    Ok(SquareFreeInt {
        value: n,
        odd_primes,
        has_factor_two,
    })
}

/// Exact test that the product of the given square-free values is a perfect
/// square.
///
/// Multiplies in 128 bits and takes an integer square root; if the product
/// overflows, falls back to counting prime multiplicities and the sign.
pub fn product_is_square<'a>(values: impl IntoIterator<Item = &'a SquareFreeInt>) -> bool {
    let values: Vec<&SquareFreeInt> = values.into_iter().collect();
    let product = values
        .iter()
        .try_fold(1i128, |acc, v| acc.checked_mul(v.value() as i128));
    if let Some(product) = product {
        return is_perfect_square(product);
    }
    let negatives = values.iter().filter(|v| v.is_negative()).count();
    let mut primes: Vec<u64> = values.iter().flat_map(|v| v.primes()).collect();
    primes.sort_unstable();
    negatives % 2 == 0 && primes.chunks(2).all(|c| c.len() == 2 && c[0] == c[1])
}

/// Combines pairwise-coprime congruences `x = r_i (mod m_i)` into the unique
/// `x` in `[0, prod m_i)`.
pub fn crt_combine(congruences: &[(i128, u64)]) -> Result<(u64, u64), NtError> {
    let mut acc_r = 0u64;
    let mut acc_m = 1u64;
    for &(r, m) in congruences {
        if m == 0 {
            return Err(NtError::ZeroModulus);
        }
        if gcd(acc_m, m) != 1 {
            return Err(NtError::NonCoprimeModuli(acc_m, m));
        }
        let new_m = acc_m
            .checked_mul(m)
            .filter(|&v| v <= MAX_MODULUS)
            .ok_or(NtError::Overflow)?;
        let r = reduce(r, m);
        // x = acc_r + acc_m * t with t = (r - acc_r) / acc_m (mod m)
        let inv = inv_mod(acc_m % m, m).unwrap_or(0);
        let diff = reduce(r as i128 - acc_r as i128, m);
        let t = mul_mod(diff, inv, m);
        acc_r = ((acc_r as u128 + acc_m as u128 * t as u128) % new_m as u128) as u64;
        acc_m = new_m;
    }
    Ok((acc_r, acc_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_odd_primes(below: u64) -> Vec<u64> {
        (3..below).step_by(2).filter(|&p| is_prime(p)).collect()
    }

    fn brute_is_qr(a: i128, p: u64) -> bool {
        let r = reduce(a, p);
        (1..p).any(|x| x * x % p == r)
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(13, 17), Ok(1));
        assert_eq!(legendre(13, 13), Ok(0));
        assert_eq!(legendre(2, 3), Ok(-1));
        assert_eq!(legendre(5, 4), Err(NtError::NotOddPrime(4)));
        assert_eq!(legendre(5, 2), Err(NtError::NotOddPrime(2)));
        assert_eq!(legendre(5, 15), Err(NtError::NotOddPrime(15)));
    }

    #[test]
    fn legendre_matches_exhaustive_squaring() {
        for p in small_odd_primes(200) {
            for a in -(p as i128)..=p as i128 {
                let l = legendre(a, p).unwrap();
                assert_eq!(
                    l == 1,
                    brute_is_qr(a, p) && reduce(a, p) != 0,
                    "a={a} p={p}"
                );
                assert_eq!(l == 0, reduce(a, p) == 0);
            }
        }
    }

    #[test]
    fn euler_criterion_and_multiplicativity() {
        for p in small_odd_primes(100) {
            for a in 1..=50i128 {
                if a % p as i128 != 0 {
                    let e = pow_mod(a as u64, (p - 1) / 2, p);
                    assert!(e == 1 || e == p - 1);
                    assert_eq!(e == 1, legendre(a, p).unwrap() == 1);
                }
                for b in 1..=50i128 {
                    assert_eq!(
                        legendre(a * b, p).unwrap(),
                        legendre(a, p).unwrap() * legendre(b, p).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(1, 9), Ok(1));
        assert_eq!(jacobi(13, 17), Ok(1));
        assert_eq!(jacobi(2, 15), Ok(1));
        assert_eq!(jacobi(3, 15), Ok(0));
        assert!(jacobi(3, 10).is_err());
        assert!(jacobi(3, -7).is_err());
        assert!(jacobi(3, 0).is_err());
        assert_eq!(jacobi(5, 1), Ok(1));
    }

    #[test]
    fn jacobi_is_multiplicative_extension_of_legendre() {
        let primes = small_odd_primes(60);
        for n in (1..400i128).step_by(2) {
            for a in -40..40i128 {
                let mut expected = 1i8;
                for (p, e) in factorize(n as u64).unwrap() {
                    for _ in 0..e {
                        expected *= legendre(a, p).unwrap();
                    }
                }
                assert_eq!(jacobi(a, n).unwrap(), expected, "a={a} n={n}");
            }
        }
        for &p in &primes {
            for a in 0..p as i128 {
                assert_eq!(jacobi(a, p as i128).unwrap(), legendre(a, p).unwrap());
            }
        }
    }

    #[test]
    fn perfect_squares() {
        assert!(is_perfect_square(48841));
        assert_eq!(221 * 221, 48841);
        assert!(is_perfect_square(0));
        assert!(is_perfect_square(1));
        assert!(!is_perfect_square(-4));
        assert!(!is_perfect_square(48842));
        let big = (i64::MAX as i128) * (i64::MAX as i128);
        assert!(is_perfect_square(big));
        assert!(!is_perfect_square(big - 1));
        assert!(!is_perfect_square(big + 1));
    }

    #[test]
    fn product_square_both_routes() {
        let sf = |v: &[i64]| {
            v.iter()
                .map(|&x| make_squarefree(x).unwrap())
                .collect::<Vec<_>>()
        };
        assert!(product_is_square(&sf(&[13, 17, 221])));
        assert!(product_is_square(&sf(&[11, 19, 209])));
        assert!(!product_is_square(&sf(&[2, 3, 5])));
        assert!(!product_is_square(&sf(&[-2, 3, 6])));
        assert!(product_is_square(&sf(&[-2, -3, 6])));
        // overflows i128: four large primes each appearing twice
        let big = [
            1_099_511_627_689i64,
            1_099_511_627_609,
            1_099_511_627_581,
            1_099_511_627_573,
        ];
        assert!(big.iter().all(|&p| is_prime(p as u64)));
        let mut v = big.to_vec();
        v.extend(big.iter().map(|p| -p));
        assert!(product_is_square(&sf(&v)));
        v[0] = -v[0];
        assert!(!product_is_square(&sf(&v)));
        v[0] = 3;
        assert!(!product_is_square(&sf(&v)));
    }

    #[test]
    fn isqrt_exhaustive_small() {
        for n in 0..100_000u128 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
    }

    #[test]
    fn make_squarefree_examples() {
        let s = make_squarefree(45353).unwrap();
        assert_eq!(s.odd_primes(), &[7, 11, 19, 31]);
        assert_eq!(s.sign(), 1);
        assert!(!s.has_factor_two());

        assert_eq!(
            make_squarefree(12),
            Err(NtError::NotSquareFree {
                value: 12,
                prime: 2
            })
        );

        let s = make_squarefree(-10).unwrap();
        assert_eq!(s.sign(), -1);
        assert!(s.has_factor_two());
        assert_eq!(s.odd_primes(), &[5]);

        assert_eq!(make_squarefree(0), Err(NtError::DisallowedValue(0)));
        assert_eq!(make_squarefree(1), Err(NtError::DisallowedValue(1)));
        assert!(make_squarefree(-1).is_ok());
        assert_eq!(
            make_squarefree((1 << 40) + 1),
            Err(NtError::OutOfRange((1 << 40) + 1))
        );
        // 2^40 - 1 = 3 * 5^2 * 11 * 17 * 31 * 41 * 61681
        assert_eq!(
            make_squarefree(-(1 << 40) + 1),
            Err(NtError::NotSquareFree {
                value: -(1 << 40) + 1,
                prime: 5
            })
        );
        assert!(make_squarefree(-(1 << 40)).is_err());
    }

    #[test]
    fn make_squarefree_large_prime_and_semiprime() {
        // 1099511627689 is the largest prime below 2^40.
        let p = 1_099_511_627_689i64;
        assert!(is_prime(p as u64));
        let s = make_squarefree(p).unwrap();
        assert_eq!(s.odd_primes(), &[p as u64]);
        // 1048573 * 1048571, both primes just below 2^20
        let s = make_squarefree(-1_048_573 * 1_048_571).unwrap();
        assert_eq!(s.odd_primes(), &[1_048_571, 1_048_573]);
        assert!(make_squarefree(1_048_573 * 1_048_573).is_err());
    }

    #[test]
    fn factorize_needs_rho() {
        // product of two primes above the trial-division bound
        let a = 4_294_967_291u64; // 2^32 - 5
        let b = 2_147_483_647u64; // 2^31 - 1
        assert_eq!(factorize(a * b).unwrap(), vec![(b, 1), (a, 1)]);
        assert_eq!(factorize(1).unwrap(), vec![]);
        assert_eq!(factorize(1 << 62).unwrap(), vec![(2, 62)]);
        assert_eq!(factorize(3u64.pow(39)).unwrap(), vec![(3, 39)]);
    }

    #[test]
    fn primality_known_values() {
        let primes: Vec<u64> = (0..100).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![
                2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                83, 89, 97
            ]
        );
        assert!(is_prime(18_446_744_073_709_551_557)); // largest 64-bit prime
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
        assert!(!is_prime(3_825_123_056_546_413_051));
    }

    #[test]
    fn wide_arithmetic() {
        let m = (1u128 << 125) + 867; // odd
        let a = (1u128 << 124) + 12345;
        let b = (1u128 << 123) + 999;
        // (2^124 + x)(2^123 + y) = 2^247 + ... ; check via distributivity
        let lhs = mul_mod_wide(a, b, m);
        let split = (mul_mod_wide(a, 1 << 123, m) + mul_mod_wide(a, 999, m)) % m;
        assert_eq!(lhs, split);
        assert_eq!(mul_mod_wide(7, 9, 10), 3);
        let inv = inv_mod_wide(a, m).unwrap();
        assert_eq!(mul_mod_wide(a, inv, m), 1);
        assert_eq!(inv_mod_wide(6, 9), None);
        for x in 1..200u128 {
            for y in 1..200u128 {
                assert_eq!(
                    mul_mod_wide(x << 100, y << 20, 1_000_003),
                    (((x << 100) % 1_000_003) * ((y << 20) % 1_000_003)) % 1_000_003
                );
            }
        }
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt_combine(&[(2, 9), (1, 5)]), Ok((11, 45)));
        assert_eq!(crt_combine(&[(17, 5)]), Ok((2, 5)));
        assert_eq!(crt_combine(&[(-1, 5)]), Ok((4, 5)));
        assert_eq!(crt_combine(&[(0, 3), (0, 4)]), Ok((0, 12)));
        assert_eq!(crt_combine(&[]), Ok((0, 1)));
        assert_eq!(
            crt_combine(&[(1, 6), (1, 4)]),
            Err(NtError::NonCoprimeModuli(6, 4))
        );
        assert_eq!(crt_combine(&[(1, 1 << 62), (1, 3)]), Err(NtError::Overflow));
        assert_eq!(crt_combine(&[(1, 0)]), Err(NtError::ZeroModulus));
    }

    #[test]
    fn prime_power_construction() {
        let pp = PrimePower::new(3, 6).unwrap();
        assert_eq!(pp.modulus(), 729);
        assert_eq!(PrimePower::new(2, 63).unwrap().modulus(), 1 << 63);
        assert_eq!(PrimePower::new(2, 64), Err(NtError::Overflow));
        assert!(PrimePower::new(9, 2).is_err());
        assert!(PrimePower::new(3, 0).is_err());
    }

    proptest! {
        #[test]
        fn squarefree_factors_multiply_back(n in -(1i64 << 40)..(1i64 << 40)) {
            if let Ok(s) = make_squarefree(n) {
                let prod: i64 = s.primes().map(|p| p as i64).product::<i64>() * s.sign() as i64;
                prop_assert_eq!(prod, n);
                prop_assert!(s.odd_primes().windows(2).all(|w| w[0] < w[1]));
                prop_assert!(s.odd_primes().iter().all(|&p| is_prime(p)));
            }
        }

        #[test]
        fn factorize_multiplies_back(n in 1u64..u64::MAX / 2) {
            let f = factorize(n).unwrap();
            let prod = f.iter().fold(1u128, |acc, &(p, e)| acc * (p as u128).pow(e));
            prop_assert_eq!(prod, n as u128);
            prop_assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }

        #[test]
        fn crt_reduces_to_inputs(r1 in -1000i128..1000, r2 in -1000i128..1000, r3 in 0i128..1000,
                                 e1 in 1u32..10, e2 in 1u32..6, e3 in 1u32..4) {
            let ms = [2u64.pow(e1), 3u64.pow(e2), 7u64.pow(e3)];
            let rs = [r1, r2, r3];
            let input: Vec<_> = rs.iter().copied().zip(ms).collect();
            let (x, m) = crt_combine(&input).unwrap();
            prop_assert_eq!(m, ms.iter().product::<u64>());
            prop_assert!(x < m);
            for (r, mi) in input {
                prop_assert_eq!(x % mi, reduce(r, mi));
            }
        }
    }
}
