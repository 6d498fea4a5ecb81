//! Square roots modulo primes and prime powers, and roots of `f` modulo any
//! `m` for certified families.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{validate_certificate, Certificate, CertificateViolation, Family};
use crate::ntheory::{
    self, crt_combine, factorize, inv_mod_wide, legendre_unchecked, mul_mod, mul_mod_wide, pow_mod,
    reduce, NtError, PrimePower, MAX_MODULUS,
};
use crate::wire;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("{a} is not a nonzero quadratic residue modulo {p}")]
    NonResidue { a: i128, p: u64 },
    #[error("{a} is not congruent to 1 mod 8")]
    NotOneMod8 { a: i128 },
    #[error("lifting precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(#[from] CertificateViolation),
    #[error("modulus exceeds the supported range")]
    Overflow,
    #[error(transparent)]
    Arithmetic(#[from] NtError),
    #[error("certificate route produced no root modulo {0}")]
    RouteFailed(u64),
}

/// The smaller of the two square roots of `a` modulo the odd prime `p`,
/// by Tonelli-Shanks.
pub fn sqrt_mod_p(a: i128, p: u64) -> Result<u64, LiftError> {
    if ntheory::legendre(a, p)? != 1 {
        return Err(LiftError::NonResidue { a, p });
    }
    let a = reduce(a, p);
    let r = if p % 4 == 3 {
        pow_mod(a, (p + 1) / 4, p)
    } else {
        let s = (p - 1).trailing_zeros();
        let q = (p - 1) >> s;
        let z = (2..p)
            .find(|&z| legendre_unchecked(z as i128, p) == -1)
            .expect("every odd prime has a non-residue");
        let mut m = s;
        let mut c = pow_mod(z, q, p);
        let mut t = pow_mod(a, q, p);
        let mut r = pow_mod(a, q.div_ceil(2), p);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1 << (m - i - 1), p);
            m = i;
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            r = mul_mod(r, b, p);
        }
        r
    };
    debug_assert_eq!(mul_mod(r, r, p), a);
    Ok(r.min(p - r))
}

/// Largest modulus `p^b` accepted by [`hensel_lift`].
pub const MAX_LIFT_MODULUS: u128 = 1 << 126;

/// Lifts a root of `x^2 = a (mod p)` to `x^2 = a (mod p^b)`, one power of
/// `p` at a time. The result is congruent to `root` modulo `p`.
///
/// Works for `p^b` up to 2^126 so that wide instances can be checked; roots
/// of `f` only ever need moduli below 2^63.
pub fn hensel_lift(a: i128, p: u64, root: u64, b: u32) -> Result<u128, LiftError> {
    if p.is_multiple_of(2) || !ntheory::is_prime(p) {
        return Err(LiftError::PreconditionViolated("p must be an odd prime"));
    }
    if b == 0 {
        return Err(LiftError::PreconditionViolated(
            "exponent must be at least 1",
        ));
    }
    if reduce(a, p) == 0 {
        return Err(LiftError::PreconditionViolated("p divides a"));
    }
    let root = root % p;
    if mul_mod(root, root, p) != reduce(a, p) {
        return Err(LiftError::PreconditionViolated(
            "root is not a square root of a mod p",
        ));
    }
    (p as u128)
        .checked_pow(b)
        .filter(|&m| m <= MAX_LIFT_MODULUS)
        .ok_or(LiftError::Overflow)?;
    let mut r = root as u128;
    let mut modulus = p as u128;
    for _ in 1..b {
        modulus *= p as u128;
        // r <- r - (r^2 - a) / (2r)
        let a_mod = a.rem_euclid(modulus as i128) as u128;
        let sq = mul_mod_wide(r, r, modulus);
        let residual = (sq + modulus - a_mod) % modulus;
        let inv = inv_mod_wide(2 * r % modulus, modulus)
            .expect("2r is a unit when p is odd and p does not divide a");
        let step = mul_mod_wide(residual, inv, modulus);
        r = (r + modulus - step) % modulus;
    }
    Ok(r)
}

/// A square root of `a` modulo `2^b`, for `a = 1 (mod 8)`.
pub fn lift_dyadic(a: i128, b: u32) -> Result<u64, LiftError> {
    if a.rem_euclid(8) != 1 {
        return Err(LiftError::NotOneMod8 { a });
    }
    if b == 0 {
        return Err(LiftError::PreconditionViolated(
            "exponent must be at least 1",
        ));
    }
    if b > 63 {
        return Err(LiftError::Overflow);
    }
    // Invariant: r odd, r^2 = a (mod 2^k). Adding 2^(k-1) changes r^2 by
    // 2^k mod 2^(k+1) once k >= 3.
    let mut r: u128 = 1;
    for k in 3..b {
        let next = 1u128 << (k + 1);
        if (r * r) % next != a.rem_euclid(next as i128) as u128 {
            r += 1 << (k - 1);
        }
    }
    Ok((r % (1u128 << b)) as u64)
}

/// One prime-power component of a [`RootWitness`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalRoot {
    pub prime: u64,
    pub exponent: u32,
    #[serde(with = "wire::int")]
    pub modulus: u64,
    /// 1-based family index of the factor `x^2 - a_i` that vanishes.
    pub factor_index: usize,
    #[serde(with = "wire::int")]
    pub root: u64,
}

/// A residue `root` in `[0, modulus)` with `f(root) = 0 (mod modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootWitness {
    #[serde(with = "wire::int")]
    pub root: u64,
    #[serde(with = "wire::int")]
    pub modulus: u64,
    pub components: Vec<LocalRoot>,
}

/// Root of `f` modulo a prime power, following the certificate: a member of
/// `T` that is a residue when `p` does not divide the product over `T`, the
/// recorded witness when it does, and the dyadic witness for `p = 2`.
///
/// Returns the local root, normalised to the smaller of `r` and `p^e - r`,
/// together with the 1-based index of the factor used.
pub fn root_mod_prime_power(
    family: &Family,
    cert: &Certificate,
    pp: PrimePower,
) -> Result<(u64, usize), LiftError> {
    validate_certificate(family, cert)?;
    local_root(family, cert, pp)
}

fn local_root(
    family: &Family,
    cert: &Certificate,
    pp: PrimePower,
) -> Result<(u64, usize), LiftError> {
    let (p, e, m) = (pp.prime(), pp.exponent(), pp.modulus());
    let value_at = |i: usize| family.member(i).expect("validated index").value() as i128;
    let (index, root) = if p == 2 {
        let i = cert.dyadic_witness;
        (i, lift_dyadic(value_at(i), e)?)
    } else {
        let i = match cert.odd_prime_witnesses.get(&p) {
            Some(&i) => i,
            None => {
                // p does not divide the product over T; the symbols over T
                // multiply to +1 and |T| is odd, so one of them is +1.
                *cert
                    .subset_t
                    .iter()
                    .find(|&&j| legendre_unchecked(value_at(j), p) == 1)
                    .ok_or(LiftError::RouteFailed(m))?
            }
        };
        let a = value_at(i);
        let r = sqrt_mod_p(a, p)?;
        let lifted = hensel_lift(a, p, r, e)?;
        (i, u64::try_from(lifted).map_err(|_| LiftError::Overflow)?)
    };
    let root = root.min(m - root);
    if mul_mod(root, root, m) != reduce(value_at(index), m) {
        return Err(LiftError::RouteFailed(m));
    }
    Ok((root, index))
}

/// A root of `f` modulo `m`, assembled by CRT from prime-power roots and
/// checked against `f` before it is returned.
pub fn root_mod(family: &Family, cert: &Certificate, m: u64) -> Result<RootWitness, LiftError> {
    if m == 0 {
        return Err(LiftError::Arithmetic(NtError::ZeroModulus));
    }
    if m > MAX_MODULUS {
        return Err(LiftError::Overflow);
    }
    validate_certificate(family, cert)?;
    let mut components = Vec::new();
    for (p, e) in factorize(m)? {
        let pp = PrimePower::new(p, e)?;
        let (root, factor_index) = local_root(family, cert, pp)?;
        components.push(LocalRoot {
            prime: p,
            exponent: e,
            modulus: pp.modulus(),
            factor_index,
            root,
        });
    }
    let congruences: Vec<(i128, u64)> = components
        .iter()
        .map(|c| (c.root as i128, c.modulus))
        .collect();
    let (root, modulus) = crt_combine(&congruences)?;
    debug_assert_eq!(modulus, m);
    if family.eval_mod(root, m) != 0 {
        return Err(LiftError::RouteFailed(m));
    }
    Ok(RootWitness {
        root,
        modulus: m,
        components,
    })
}
