//! Orientation and in-circle tests with an exact fallback.
//!
//! A floating-point evaluation is trusted when it clears a forward error
//! bound; otherwise the determinant is recomputed over big integers after
//! scaling every input to a common binary exponent.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Signed;

const EPS: f64 = f64::EPSILON / 2.0;
const CCW_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;
const ICC_BOUND: f64 = (10.0 + 96.0 * EPS) * EPS;

/// Sign of the signed area of `(a, b, c)`: positive when counter-clockwise.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let l = (a[0] - c[0]) * (b[1] - c[1]);
    let r = (a[1] - c[1]) * (b[0] - c[0]);
    let det = l - r;
    let bound = CCW_BOUND * (l.abs() + r.abs());
    if det > bound {
        return Ordering::Greater;
    }
    if -det > bound {
        return Ordering::Less;
    }
    orient2d_exact(a, b, c)
}

/// Positive when `d` lies strictly inside the circle through the
/// counter-clockwise triangle `(a, b, c)`.
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Ordering {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let (bdxcdy, cdxbdy) = (bdx * cdy, cdx * bdy);
    let (cdxady, adxcdy) = (cdx * ady, adx * cdy);
    let (adxbdy, bdxady) = (adx * bdy, bdx * ady);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    let bound = ICC_BOUND * permanent;
    if det > bound {
        return Ordering::Greater;
    }
    if -det > bound {
        return Ordering::Less;
    }
    incircle_exact(a, b, c, d)
}

/// `(mantissa, exponent)` with `x = mantissa * 2^exponent`.
fn decompose(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1i64 << 52), exp - 1075) };
    (sign * m, e)
}

/// Exact integers proportional (by one common power of two) to the inputs.
fn to_integers<const N: usize>(xs: [f64; N]) -> [BigInt; N] {
    let parts = xs.map(decompose);
    let e0 = parts.iter().filter(|p| p.0 != 0).map(|p| p.1).min().unwrap_or(0);
    parts.map(|(m, e)| if m == 0 { BigInt::from(0) } else { BigInt::from(m) << ((e - e0) as usize) })
}

fn sign(x: &BigInt) -> Ordering {
    if x.is_positive() {
        Ordering::Greater
    } else if x.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

fn orient2d_exact(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let [ax, ay, bx, by, cx, cy] = to_integers([a[0], a[1], b[0], b[1], c[0], c[1]]);
    let det = (&ax - &cx) * (&by - &cy) - (&ay - &cy) * (&bx - &cx);
    sign(&det)
}

fn incircle_exact(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Ordering {
    let [ax, ay, bx, by, cx, cy, dx, dy] = to_integers([a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]]);
    let (adx, ady) = (&ax - &dx, &ay - &dy);
    let (bdx, bdy) = (&bx - &dx, &by - &dy);
    let (cdx, cdy) = (&cx - &dx, &cy - &dy);
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy) + blift * (&cdx * &ady - &adx * &cdy) + clift * (&adx * &bdy - &bdx * &ady);
    sign(&det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_basics() {
        assert_eq!(orient2d([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), Ordering::Greater);
        assert_eq!(orient2d([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), Ordering::Less);
        assert_eq!(orient2d([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]), Ordering::Equal);
    }

    #[test]
    fn near_collinear_points_are_exact() {
        // Points on the line y = x, perturbed by one ulp.
        let a = [0.5, 0.5];
        let b = [12.0, 12.0];
        let c = [24.0, 24.0];
        assert_eq!(orient2d(a, b, c), Ordering::Equal);
        let c2 = [24.0, f64::from_bits(24f64.to_bits() + 1)];
        assert_eq!(orient2d(a, b, c2), Ordering::Greater);
        let c3 = [24.0, f64::from_bits(24f64.to_bits() - 1)];
        assert_eq!(orient2d(a, b, c3), Ordering::Less);
    }

    #[test]
    fn cocircular_square() {
        let (a, b, c, d) = ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]);
        assert_eq!(incircle(a, b, c, d), Ordering::Equal);
        assert_eq!(incircle(a, b, c, [0.5, 0.5]), Ordering::Greater);
        assert_eq!(incircle(a, b, c, [2.0, 2.0]), Ordering::Less);
        let nudged = [0.0, f64::from_bits(1f64.to_bits() - 1)];
        assert_eq!(incircle(a, b, c, nudged), Ordering::Greater);
    }

    #[test]
    fn decomposition_round_trips() {
        for x in [1.0, -3.5, 1e-300, 5e-324, 123456.789] {
            let (m, e) = decompose(x);
            assert_eq!(m as f64 * 2f64.powi(e / 2) * 2f64.powi(e - e / 2), x);
        }
    }
}
