//! Exact arithmetic in Z_p.
//!
//! Every value carries its modulus so that several protocol instances with
//! different moduli can coexist in one process. Values are always kept as
//! the least non-negative representative.

use std::fmt;

use crate::error::{Error, Result};

/// The modulus `p` of a residue ring. Always greater than 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(p: u64) -> Result<Self> {
        if p > 1 {
            Ok(Modulus(p))
        } else {
            Err(Error::InvalidModulus(p))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Residue of an arbitrary unsigned integer.
    pub fn reduce(self, x: u64) -> Residue {
        Residue { value: x % self.0, modulus: self }
    }

    /// Residue of a signed integer; negatives map to their canonical representative.
    pub fn reduce_signed(self, x: i128) -> Residue {
        let p = self.0 as i128;
        Residue { value: x.rem_euclid(p) as u64, modulus: self }
    }

    pub fn zero(self) -> Residue {
        Residue { value: 0, modulus: self }
    }

    /// Trial-division primality test; p fits in 64 bits and is small in practice.
    pub fn is_prime(self) -> bool {
        let p = self.0;
        if p < 4 {
            return p >= 2;
        }
        if p.is_multiple_of(2) {
            return false;
        }
        let mut d = 3u64;
        while d.saturating_mul(d) <= p {
            if p.is_multiple_of(d) {
                return false;
            }
            d += 2;
        }
        true
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of Z_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Residue {
    value: u64,
    modulus: Modulus,
}

impl Residue {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    fn check(self, other: Residue) -> Result<()> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(Error::ModulusMismatch { left: self.modulus.0, right: other.modulus.0 })
        }
    }

    pub fn try_add(self, other: Residue) -> Result<Residue> {
        self.check(other)?;
        let p = self.modulus.0 as u128;
        let v = (self.value as u128 + other.value as u128) % p;
        Ok(Residue { value: v as u64, modulus: self.modulus })
    }

    pub fn try_sub(self, other: Residue) -> Result<Residue> {
        self.check(other)?;
        let p = self.modulus.0 as u128;
        let v = (self.value as u128 + p - other.value as u128) % p;
        Ok(Residue { value: v as u64, modulus: self.modulus })
    }
}

impl std::ops::Neg for Residue {
    type Output = Residue;

    fn neg(self) -> Residue {
        if self.value == 0 {
            self
        } else {
            Residue { value: self.modulus.0 - self.value, modulus: self.modulus }
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus.0)
    }
}

/// Sum of a sequence of residues sharing modulus `p`. The empty sum is `0 mod p`.
pub fn sum_mod<I>(p: Modulus, values: I) -> Result<Residue>
where
    I: IntoIterator<Item = Residue>,
{
    values.into_iter().try_fold(p.zero(), |acc, x| acc.try_add(x))
}
