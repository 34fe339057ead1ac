//! Non-negative binary floating point with a fixed-width mantissa and an
//! unbounded (128-bit) exponent.
//!
//! Block counts grow doubly exponentially, so `ln a_n` itself grows like
//! `d^n` and overflows every hardware exponent long before `n = 40`. Keeping
//! counts as `mantissa * 2^exponent` lets the evaluator multiply and add them
//! exactly up to one rounding per operation, factoring out the largest term
//! during addition by construction. Logarithms are only taken on output.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtFloat {
    Zero,
    /// `mantissa * 2^exponent`, with `mantissa` holding exactly the working
    /// precision in bits (top bit set).
    Finite {
        mantissa: BigUint,
        exponent: i128,
    },
}

impl ExtFloat {
    pub fn zero() -> Self {
        ExtFloat::Zero
    }

    pub fn from_u64(v: u64, precision: u32) -> Self {
        Self::from_biguint(&BigUint::from(v), precision)
    }

    pub fn from_biguint(v: &BigUint, precision: u32) -> Self {
        normalize(v.clone(), 0, precision)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtFloat::Zero)
    }

    pub fn mul(&self, other: &Self, precision: u32) -> Self {
        match (self, other) {
            (
                ExtFloat::Finite {
                    mantissa: a,
                    exponent: ea,
                },
                ExtFloat::Finite {
                    mantissa: b,
                    exponent: eb,
                },
            ) => normalize(a * b, ea + eb, precision),
            _ => ExtFloat::Zero,
        }
    }

    pub fn add(&self, other: &Self, precision: u32) -> Self {
        let (hi, lo) = match self.cmp_magnitude(other) {
            Ordering::Less => (other, self),
            _ => (self, other),
        };
        match (hi, lo) {
            (ExtFloat::Zero, _) => ExtFloat::Zero,
            (x, ExtFloat::Zero) => normalize_to(x, precision),
            (
                ExtFloat::Finite {
                    mantissa: mh,
                    exponent: eh,
                },
                ExtFloat::Finite {
                    mantissa: ml,
                    exponent: el,
                },
            ) => {
                let gap = eh - el + mh.bits() as i128 - ml.bits() as i128;
                if gap > precision as i128 + 1 {
                    // The smaller term is below half an ulp of the larger.
                    return normalize_to(hi, precision);
                }
                let shift = (eh - el) as u64;
                normalize((mh << shift) + ml, *el, precision)
            }
        }
    }

    /// Natural logarithm; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        match self.ln_parts() {
            None => f64::NEG_INFINITY,
            Some((e, frac)) => e as f64 * LN_2 + frac,
        }
    }

    /// `(e, f)` with `ln(self) = e * ln 2 + f` and `0 <= f < ln 2`, keeping
    /// the integer part exact for values far beyond `f64` range.
    pub fn ln_parts(&self) -> Option<(i128, f64)> {
        match self {
            ExtFloat::Zero => None,
            ExtFloat::Finite { mantissa, exponent } => {
                let bits = mantissa.bits();
                let drop = bits.saturating_sub(64);
                let top = (mantissa >> drop).to_u64().unwrap_or(u64::MAX) as f64;
                let kept = (bits - drop) as i32;
                // top / 2^(kept-1) lies in [1, 2).
                let frac = top * 2f64.powi(1 - kept);
                Some((exponent + bits as i128 - 1, frac.ln()))
            }
        }
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtFloat::Zero, ExtFloat::Zero) => Ordering::Equal,
            (ExtFloat::Zero, _) => Ordering::Less,
            (_, ExtFloat::Zero) => Ordering::Greater,
            (
                ExtFloat::Finite {
                    mantissa: a,
                    exponent: ea,
                },
                ExtFloat::Finite {
                    mantissa: b,
                    exponent: eb,
                },
            ) => {
                let top_a = ea + a.bits() as i128;
                let top_b = eb + b.bits() as i128;
                top_a.cmp(&top_b).then_with(|| {
                    // Same leading bit position: compare aligned mantissas.
                    let (sa, sb) = (a.bits(), b.bits());
                    match sa.cmp(&sb) {
                        Ordering::Less => (a << (sb - sa)).cmp(b),
                        Ordering::Greater => a.cmp(&(b << (sa - sb))),
                        Ordering::Equal => a.cmp(b),
                    }
                })
            }
        }
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_magnitude(other))
    }
}

fn normalize_to(x: &ExtFloat, precision: u32) -> ExtFloat {
    match x {
        ExtFloat::Zero => ExtFloat::Zero,
        ExtFloat::Finite { mantissa, exponent } => normalize(mantissa.clone(), *exponent, precision),
    }
}

/// Rounds `m * 2^e` to nearest (ties away from zero) with `precision` bits.
fn normalize(m: BigUint, e: i128, precision: u32) -> ExtFloat {
    if m.is_zero() {
        return ExtFloat::Zero;
    }
    let p = precision as u64;
    let bits = m.bits();
    if bits > p {
        let shift = bits - p;
        let half = BigUint::one() << (shift - 1);
        let mut rounded = (m + half) >> shift;
        let mut exponent = e + shift as i128;
        if rounded.bits() > p {
            rounded >>= 1u32;
            exponent += 1;
        }
        ExtFloat::Finite {
            mantissa: rounded,
            exponent,
        }
    } else {
        let shift = p - bits;
        ExtFloat::Finite {
            mantissa: m << shift,
            exponent: e - shift as i128,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big_ln(v: &BigUint) -> f64 {
        let bits = v.bits();
        let drop = bits.saturating_sub(64);
        ((v >> drop).to_u64().unwrap() as f64).ln() + drop as f64 * LN_2
    }

    #[test]
    fn small_values_are_exact() {
        let p = 64;
        let two = ExtFloat::from_u64(2, p);
        let three = ExtFloat::from_u64(3, p);
        assert_eq!(two.mul(&three, p), ExtFloat::from_u64(6, p));
        assert_eq!(two.add(&three, p), ExtFloat::from_u64(5, p));
        assert_eq!(ExtFloat::zero().add(&three, p), three);
        assert!(ExtFloat::zero().mul(&three, p).is_zero());
        assert!((ExtFloat::from_u64(2, p).ln() - LN_2).abs() < 1e-15);
        assert_eq!(ExtFloat::zero().ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn repeated_squaring_tracks_exponent() {
        // 2^(2^100) is far outside f64 but its log is exact.
        let p = 128;
        let mut x = ExtFloat::from_u64(2, p);
        for _ in 0..100 {
            x = x.mul(&x, p);
        }
        let (e, frac) = x.ln_parts().unwrap();
        assert_eq!(e as f64 * LN_2 + frac, 2f64.powi(100) * LN_2);
    }

    #[test]
    fn tiny_addend_is_absorbed() {
        let p = 53;
        let big = ExtFloat::from_biguint(&(BigUint::one() << 200u32), p);
        let one = ExtFloat::from_u64(1, p);
        assert_eq!(big.add(&one, p), big);
        assert_eq!(one.add(&big, p), big);
    }

    proptest! {
        #[test]
        fn sums_and_products_match_exact(
            xs in proptest::collection::vec(1u64..u64::MAX, 2..6),
            p in 53u32..160,
        ) {
            let exact_sum: BigUint = xs.iter().map(|&x| BigUint::from(x)).sum();
            let exact_prod: BigUint = xs.iter().map(|&x| BigUint::from(x)).product();
            let fs: Vec<ExtFloat> = xs.iter().map(|&x| ExtFloat::from_u64(x, p)).collect();
            let sum = fs.iter().skip(1).fold(fs[0].clone(), |acc, f| acc.add(f, p));
            let prod = fs.iter().skip(1).fold(fs[0].clone(), |acc, f| acc.mul(f, p));
            let tol = 8.0 * 2f64.powi(-(p.min(60) as i32));
            prop_assert!((sum.ln() - big_ln(&exact_sum)).abs() < tol + 1e-15 * big_ln(&exact_sum));
            prop_assert!((prod.ln() - big_ln(&exact_prod)).abs() < tol + 1e-15 * big_ln(&exact_prod));
        }

        #[test]
        fn ordering_matches_exact(a in 0u64..u64::MAX, b in 0u64..u64::MAX) {
            let (fa, fb) = (ExtFloat::from_u64(a, 64), ExtFloat::from_u64(b, 64));
            prop_assert_eq!(fa.partial_cmp(&fb), Some(a.cmp(&b)));
        }
    }
}
