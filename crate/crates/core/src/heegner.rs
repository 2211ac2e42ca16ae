//! Admissible levels: the set ℕ_k of squarefree levels coprime to 6 on
//! which a Heegner point for the field exists, square roots β of D mod
//! 4N, the genus of X₀(N) and the constant κ_N.

use num_rational::Ratio;

use crate::arith::{factorize, gcd, is_squarefree, kronecker, tau};
use crate::error::{Error, Result};
use crate::quadfield::FundamentalDiscriminant;

/// A level N ∈ ℕ_k with a witness β, the genus of X₀(N) and κ_N.
#[derive(Debug, Clone, Copy)]
pub struct HeegnerLevel {
    n: u64,
    disc: FundamentalDiscriminant,
    beta: u64,
    genus: u64,
    kappa: Ratio<i64>,
}

impl HeegnerLevel {
    /// Validate N ∈ ℕ_k and assemble the level data. The smallest β is
    /// kept as the witness.
    pub fn new(disc: &FundamentalDiscriminant, n: u64) -> Result<Self> {
        let betas = solve_beta(disc, n)?;
        let beta = *betas.first().ok_or_else(|| {
            Error::InvalidInput(format!(
                "N = {n} is not a Heegner level for D = {}: no β with β² ≡ D (mod 4N)",
                disc.d()
            ))
        })?;
        Ok(HeegnerLevel {
            n,
            disc: *disc,
            beta,
            genus: genus_x0(n)?,
            kappa: kappa(n)?,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn disc(&self) -> &FundamentalDiscriminant {
        &self.disc
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }

    pub fn genus(&self) -> u64 {
        self.genus
    }

    pub fn kappa(&self) -> Ratio<i64> {
        self.kappa
    }

    pub fn kappa_f64(&self) -> f64 {
        *self.kappa.numer() as f64 / *self.kappa.denom() as f64
    }
}

fn check_level_shape(disc: &FundamentalDiscriminant, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("N = 0 is not a level".into()));
    }
    if !is_squarefree(n)? {
        return Err(Error::InvalidInput(format!("N = {n} is not squarefree")));
    }
    if gcd(n, 6) != 1 {
        return Err(Error::InvalidInput(format!("N = {n} is not coprime to 6")));
    }
    if gcd(n, disc.abs_d()) != 1 {
        return Err(Error::InvalidInput(format!(
            "N = {n} shares a factor with D = {}",
            disc.d()
        )));
    }
    Ok(())
}

/// All β in [0, 2N) with β² ≡ D (mod 4N). An empty list means N ∉ ℕ_k;
/// an N violating the shape conditions (squarefree, coprime to 6·D) is
/// rejected as invalid instead.
pub fn solve_beta(disc: &FundamentalDiscriminant, n: u64) -> Result<Vec<u64>> {
    check_level_shape(disc, n)?;
    let modulus = 4 * n as i64;
    let d = disc.d();
    let mut betas = Vec::new();
    for beta in 0..2 * n {
        let b = beta as i64;
        if (b * b - d).rem_euclid(modulus) == 0 {
            betas.push(beta);
        }
    }
    Ok(betas)
}

/// Membership in ℕ_k.
pub fn is_heegner_level(disc: &FundamentalDiscriminant, n: u64) -> bool {
    match solve_beta(disc, n) {
        Ok(betas) => !betas.is_empty(),
        Err(_) => false,
    }
}

/// All members of ℕ_k up to n_max, ascending.
pub fn enum_levels(disc: &FundamentalDiscriminant, n_max: u64) -> Vec<u64> {
    (1..=n_max).filter(|&n| is_heegner_level(disc, n)).collect()
}

/// Genus of X₀(N) for squarefree N coprime to 6, by the four-term
/// formula: 1 + ∏(p+1)/12 − ∏(1+(−1/p))/4 − ∏(1+(−3/p))/3 − τ(N)/2.
pub fn genus_x0(n: u64) -> Result<u64> {
    if n == 0 || !is_squarefree(n)? || gcd(n, 6) != 1 {
        return Err(Error::InvalidInput(format!(
            "genus formula requires squarefree N coprime to 6, got {n}"
        )));
    }
    let f = factorize(n)?;
    let mut prod_p1 = 1i64;
    let mut prod_e2 = 1i64;
    let mut prod_e3 = 1i64;
    for &(p, _) in &f.factors {
        prod_p1 *= p as i64 + 1;
        prod_e2 *= 1 + kronecker(-1, p as i64) as i64;
        prod_e3 *= 1 + kronecker(-3, p as i64) as i64;
    }
    let t = tau(n)? as i64;
    let twelve_g = 12 + prod_p1 - 3 * prod_e2 - 4 * prod_e3 - 6 * t;
    if twelve_g % 12 != 0 || twelve_g < 0 {
        return Err(Error::Internal(format!(
            "genus formula non-integral at N = {n}: 12g = {twelve_g}"
        )));
    }
    Ok((twelve_g / 12) as u64)
}

/// κ_N = −12/(N·∏_{p|N}(1+1/p)) = −12/∏_{p|N}(p+1) for squarefree N.
pub fn kappa(n: u64) -> Result<Ratio<i64>> {
    if n == 0 || !is_squarefree(n)? {
        return Err(Error::InvalidInput(format!(
            "κ requires squarefree N ≥ 1, got {n}"
        )));
    }
    let f = factorize(n)?;
    let denom: i64 = f.factors.iter().map(|&(p, _)| p as i64 + 1).product();
    Ok(Ratio::new(-12, denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes_up_to;
    use crate::quadfield::make_discriminant;

    #[test]
    fn solve_beta_examples() {
        let d3 = make_discriminant(-3).unwrap();
        assert!(!solve_beta(&d3, 7).unwrap().is_empty());
        assert!(solve_beta(&d3, 5).unwrap().is_empty());
        let betas = solve_beta(&d3, 13).unwrap();
        assert!(!betas.is_empty());
        for b in betas {
            assert_eq!((b as i64 * b as i64 + 3).rem_euclid(52), 0);
        }
        // invalid N is an error, not an empty list
        assert!(solve_beta(&d3, 9).is_err());
        assert!(solve_beta(&d3, 21).is_err());
    }

    #[test]
    fn level_membership_examples() {
        let d3 = make_discriminant(-3).unwrap();
        let primes: Vec<u64> = enum_levels(&d3, 50)
            .into_iter()
            .filter(|&n| primes_up_to(50).contains(&n))
            .collect();
        assert_eq!(primes, vec![7, 13, 19, 31, 37, 43]);
        assert!(!is_heegner_level(&d3, 9));
        let d7 = make_discriminant(-7).unwrap();
        assert!(!is_heegner_level(&d7, 21));
    }

    #[test]
    fn prime_levels_match_congruence_oracle() {
        let d3 = make_discriminant(-3).unwrap();
        for p in primes_up_to(1000) {
            if p < 5 {
                continue;
            }
            assert_eq!(
                is_heegner_level(&d3, p),
                p % 3 == 1,
                "p = {}",
                p
            );
        }
    }

    #[test]
    fn enum_levels_all_verified() {
        let d23 = make_discriminant(-23).unwrap();
        let levels = enum_levels(&d23, 300);
        assert!(!levels.is_empty());
        for n in levels {
            let betas = solve_beta(&d23, n).unwrap();
            assert!(!betas.is_empty());
            for b in betas {
                let lhs = (b as i64 * b as i64 - d23.d()).rem_euclid(4 * n as i64);
                assert_eq!(lhs, 0);
            }
        }
    }

    #[test]
    fn genus_examples() {
        assert_eq!(genus_x0(11).unwrap(), 1);
        assert_eq!(genus_x0(13).unwrap(), 0);
        assert_eq!(genus_x0(35).unwrap(), 3);
        assert_eq!(genus_x0(91).unwrap(), 7);
        assert!(genus_x0(9).is_err());
        assert!(genus_x0(14).is_err());
    }

    #[test]
    fn genus_asymptotic_sanity() {
        for n in 1000..1400u64 {
            let Ok(g) = genus_x0(n) else { continue };
            let f = factorize(n).unwrap();
            let main: f64 = f
                .factors
                .iter()
                .map(|&(p, _)| p as f64 + 1.0)
                .product::<f64>()
                / 12.0;
            assert!((g as f64 / main - 1.0).abs() <= 0.5, "N = {}", n);
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(7).unwrap(), Ratio::new(-3, 2));
        assert_eq!(kappa(13).unwrap(), Ratio::new(-6, 7));
        assert_eq!(kappa(35).unwrap(), Ratio::new(-1, 4));
        assert!(kappa(12).is_err());
    }

    #[test]
    fn density_floor() {
        let d3 = make_discriminant(-3).unwrap();
        let primes = primes_up_to(10_000);
        let members = primes
            .iter()
            .filter(|&&p| is_heegner_level(&d3, p))
            .count();
        assert!(members as f64 / primes.len() as f64 >= 0.45);
    }

    #[test]
    fn level_construction() {
        let d3 = make_discriminant(-3).unwrap();
        let lvl = HeegnerLevel::new(&d3, 7).unwrap();
        assert_eq!(lvl.n(), 7);
        assert_eq!(lvl.kappa(), Ratio::new(-3, 2));
        assert!(HeegnerLevel::new(&d3, 5).is_err());
    }
}
