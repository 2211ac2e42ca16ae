//! Elementary multiplicative number theory: factorization, divisors,
//! Kronecker symbols, divisor-sum functions and a shared prime sieve.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

const SIEVE_LIMIT: u64 = 100_000;

static SIEVE_PRIMES: OnceLock<Vec<u64>> = OnceLock::new();

fn sieve_primes() -> &'static [u64] {
    SIEVE_PRIMES.get_or_init(|| primes_up_to(SIEVE_LIMIT))
}

/// All primes `p <= x` by the sieve of Eratosthenes.
pub fn primes_up_to(x: u64) -> Vec<u64> {
    if x < 2 {
        return Vec::new();
    }
    let n = x as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

/// Trial-division factorization. The shared sieve covers every prime
/// below 100_000, which resolves all n below 10^10; a 6k±1 wheel picks
/// up anything larger.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidInput("factorize(0) is undefined".into()));
    }
    let original = n;
    let mut m = n;
    let mut factors = Vec::new();
    for &p in sieve_primes() {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if m > 1 {
        if m < SIEVE_LIMIT * SIEVE_LIMIT {
            factors.push((m, 1));
        } else {
            let mut p = SIEVE_LIMIT - SIEVE_LIMIT % 6 + 1;
            while p * p <= m {
                for q in [p, p + 4] {
                    if m % q == 0 {
                        let mut e = 0u32;
                        while m % q == 0 {
                            m /= q;
                            e += 1;
                        }
                        factors.push((q, e));
                    }
                }
                p += 6;
            }
            if m > 1 {
                factors.push((m, 1));
                factors.sort_unstable();
            }
        }
    }
    Ok(Factorization {
        n: original,
        factors,
    })
}

/// Sorted list of all positive divisors of n.
pub fn divisors(n: u64) -> Result<Vec<u64>> {
    let f = factorize(n)?;
    let mut divs = vec![1u64];
    for &(p, e) in &f.factors {
        let base = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            divs.extend(base.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

/// Number of divisors τ(n).
pub fn tau(n: u64) -> Result<u64> {
    let f = factorize(n)?;
    Ok(f.factors.iter().map(|&(_, e)| e as u64 + 1).product())
}

/// Divisor sum σ₁(m) = Σ_{d|m} d.
pub fn sigma1(m: u64) -> Result<u64> {
    let f = factorize(m)?;
    let mut s = 1u64;
    for &(p, e) in &f.factors {
        let mut geo = 1u64;
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            geo += pk;
        }
        s *= geo;
    }
    Ok(s)
}

pub fn is_squarefree(n: u64) -> Result<bool> {
    let f = factorize(n)?;
    Ok(f.factors.iter().all(|&(_, e)| e == 1))
}

/// Kronecker symbol (a/b), fully extended: (a/0) = 1 iff a = ±1,
/// (a/-1) by the sign of a, (a/2) by the period-8 rule, and complete
/// multiplicativity in b.
///
/// Panics on (0,0), which has no value.
pub fn kronecker(a: i64, b: i64) -> i32 {
    assert!(a != 0 || b != 0, "kronecker(0,0) is undefined");
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut res = 1i32;
    let mut b = b;
    if b < 0 {
        b = -b;
        if a < 0 {
            res = -res;
        }
    }
    let tz = b.trailing_zeros();
    if tz > 0 {
        if a & 1 == 0 {
            return 0;
        }
        let am8 = a.rem_euclid(8);
        // (a/2) = +1 for a ≡ ±1 (mod 8), -1 for a ≡ ±3 (mod 8)
        if tz % 2 == 1 && (am8 == 3 || am8 == 5) {
            res = -res;
        }
        b >>= tz;
    }
    // Jacobi symbol (a/b) for odd b > 0.
    let mut a = a.rem_euclid(b);
    while a != 0 {
        while a & 1 == 0 {
            a >>= 1;
            let bm8 = b % 8;
            if bm8 == 3 || bm8 == 5 {
                res = -res;
            }
        }
        std::mem::swap(&mut a, &mut b);
        if a % 4 == 3 && b % 4 == 3 {
            res = -res;
        }
        a %= b;
    }
    if b == 1 {
        res
    } else {
        0
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(1).unwrap().factors, vec![]);
        assert_eq!(factorize(12).unwrap().factors, vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(35).unwrap().factors, vec![(5, 1), (7, 1)]);
        assert!(factorize(0).is_err());
    }

    #[test]
    fn factorize_reconstruction() {
        for n in 1..=100_000u64 {
            let f = factorize(n).unwrap();
            let prod: u64 = f
                .factors
                .iter()
                .map(|&(p, e)| p.pow(e))
                .product();
            assert_eq!(prod, n);
            for w in f.factors.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
        }
    }

    #[test]
    fn divisors_examples() {
        assert_eq!(divisors(1).unwrap(), vec![1]);
        assert_eq!(divisors(12).unwrap(), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(35).unwrap(), vec![1, 5, 7, 35]);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(1).unwrap(), 1);
        assert_eq!(tau(12).unwrap(), 6);
        assert_eq!(tau(35).unwrap(), 4);
    }

    #[test]
    fn tau_matches_divisor_count() {
        for n in 1..=10_000u64 {
            assert_eq!(tau(n).unwrap() as usize, divisors(n).unwrap().len());
        }
    }

    #[test]
    fn sigma1_and_squarefree_and_sieve() {
        assert_eq!(sigma1(1).unwrap(), 1);
        assert_eq!(sigma1(6).unwrap(), 12);
        assert!(!is_squarefree(12).unwrap());
        assert!(is_squarefree(35).unwrap());
        assert_eq!(primes_up_to(10), vec![2, 3, 5, 7]);
    }

    #[test]
    fn kronecker_examples() {
        // squares mod 7 are {1,2,4}; -3 ≡ 4 (mod 7)
        assert_eq!(kronecker(-3, 7), 1);
        // squares mod 5 are {1,4}; -3 ≡ 2 (mod 5)
        assert_eq!(kronecker(-3, 5), -1);
        for a in [-17i64, -2, 0, 3, 5, 100] {
            assert_eq!(kronecker(a, 1), 1);
        }
        assert_eq!(kronecker(1, 0), 1);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(5, 0), 0);
    }

    #[test]
    fn kronecker_vs_squares_mod_p() {
        for &p in &primes_up_to(100) {
            if p == 2 {
                continue;
            }
            let squares: std::collections::HashSet<u64> =
                (1..p).map(|x| x * x % p).collect();
            for a in 0..p {
                let k = kronecker(a as i64, p as i64);
                if a == 0 {
                    assert_eq!(k, 0);
                } else if squares.contains(&a) {
                    assert_eq!(k, 1, "a={} p={}", a, p);
                } else {
                    assert_eq!(k, -1, "a={} p={}", a, p);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kronecker_multiplicative_in_a(
            a in -1000i64..1000,
            a2 in -1000i64..1000,
            b in (1i64..2000).prop_map(|x| 2 * x + 1),
        ) {
            prop_assume!(a != 0 && a2 != 0);
            prop_assert_eq!(
                kronecker(a, b) * kronecker(a2, b),
                kronecker(a * a2, b)
            );
        }
    }
}
