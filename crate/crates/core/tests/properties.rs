//! Exactness and round-trip properties checked against arbitrary-precision
//! integer arithmetic.

use std::io::Cursor;

use krylovlab::io::{format_number, parse_matrix_market};
use krylovlab::precision::{two_prod, two_sum, ExtendedReal};
use num_bigint::BigInt;
use proptest::prelude::*;

/// `x · 2^1074 · 2^1074` as an integer; exact for every finite double and
/// for products of two doubles.
const SHIFT: u32 = 2 * 1074;

fn exact(x: f64) -> BigInt {
    assert!(x.is_finite());
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let v = BigInt::from(mant) << ((e + SHIFT as i64) as u32);
    if neg {
        -v
    } else {
        v
    }
}

/// Exact value of `a · b` on the same scale as [`exact`].
fn exact_prod(a: f64, b: f64) -> BigInt {
    (exact(a) * exact(b)) >> SHIFT
}

fn ext_exact(x: ExtendedReal) -> BigInt {
    exact(x.hi()) + exact(x.lo())
}

/// Moderate magnitudes: no overflow, and products stay clear of the
/// subnormal range.
fn moderate() -> impl Strategy<Value = f64> {
    (-1.0f64..1.0, -60i32..60).prop_map(|(m, e)| m * 2f64.powi(e))
}

fn extended() -> impl Strategy<Value = ExtendedReal> {
    (moderate(), -1.0f64..1.0).prop_map(|(hi, r)| ExtendedReal::new(hi, hi * r * 2f64.powi(-53)))
}

/// `|got − want| ≤ 2^-k |want|`.
fn within(got: &BigInt, want: &BigInt, k: u32) -> bool {
    let diff = got - want;
    let scaled: BigInt = diff.magnitude().clone().into();
    (scaled << k) <= want.magnitude().clone().into()
}

proptest! {
    #[test]
    fn two_sum_is_exact(a in any::<f64>(), b in any::<f64>()) {
        prop_assume!(a.is_finite() && b.is_finite() && (a + b).is_finite());
        let (s, e) = two_sum(a, b);
        prop_assert_eq!(exact(s) + exact(e), exact(a) + exact(b));
    }

    #[test]
    fn two_prod_is_exact(a in moderate(), b in moderate()) {
        let (p, e) = two_prod(a, b);
        prop_assert_eq!(exact(p) + exact(e), exact_prod(a, b));
    }

    #[test]
    fn extended_add_and_mul_are_accurate(x in extended(), y in extended()) {
        let (xe, ye) = (ext_exact(x), ext_exact(y));
        let sum = &xe + &ye;
        prop_assert!(within(&ext_exact(x + y), &sum, 103), "sum of {:?} and {:?}", x, y);
        let prod = (xe.clone() * ye.clone()) >> SHIFT;
        prop_assert!(within(&ext_exact(x * y), &prod, 103), "product of {:?} and {:?}", x, y);
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        let back: f64 = format_number(v).parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn banner_mutations_are_rejected(pos in 0usize..5, word in "[A-Za-z%]{1,14}") {
        let valid: [&[&str]; 5] = [
            &["%%MatrixMarket"],
            &["matrix"],
            &["coordinate", "array"],
            &["real", "integer"],
            &["general", "symmetric", "skew-symmetric"],
        ];
        prop_assume!(!valid[pos].contains(&word.as_str()));
        let mut tokens = vec!["%%MatrixMarket", "matrix", "coordinate", "real", "general"];
        tokens[pos] = &word;
        let text = format!("{}\n1 1 1\n1 1 2.5\n", tokens.join(" "));
        prop_assert!(parse_matrix_market(Cursor::new(text)).is_err());
        tokens.remove(pos);
        let text = format!("{}\n1 1 1\n1 1 2.5\n", tokens.join(" "));
        prop_assert!(parse_matrix_market(Cursor::new(text)).is_err());
    }
}

#[test]
fn unmutated_banner_parses() {
    let text = "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.5\n";
    let (h, data) = parse_matrix_market(Cursor::new(text)).unwrap();
    assert_eq!((h.rows, h.cols, h.entries), (1, 1, 1));
    assert_eq!(data.to_dense()[(0, 0)], 2.5);
}

#[test]
fn exact_encoding_of_known_values() {
    assert_eq!(exact(1.0), BigInt::from(1) << SHIFT);
    assert_eq!(exact(-0.5), -(BigInt::from(1) << (SHIFT - 1)));
    assert_eq!(exact(f64::from_bits(1)), BigInt::from(1) << 1074);
}
