//! Bracket-doubling bisection shared by every monotone inversion in the crate
//! (θ_N⁻¹, the Legendre maximiser, and the E|S| inversion behind `rate_h`).

/// Relative bracket width at which bisection stops.
pub const REL_WIDTH: f64 = 1e-12;

const MAX_EXPANSIONS: usize = 1100;
const MAX_BISECTIONS: usize = 4000;

/// Locates the zero of a strictly increasing function `h`.
///
/// The bracket starts at `[-1, 1]` and is doubled outward until it contains a
/// sign change, then halved until its width drops below
/// `REL_WIDTH * max(1, |x|)`. When `value_tol > 0` the search also stops as
/// soon as `|h(x)| < value_tol`.
pub fn increasing_zero<F>(h: F, value_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);

    for _ in 0..MAX_EXPANSIONS {
        if h(hi) >= 0.0 || !hi.is_finite() {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..MAX_EXPANSIONS {
        if h(lo) <= 0.0 || !lo.is_finite() {
            break;
        }
        hi = lo;
        lo *= 2.0;
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        if hi - lo <= REL_WIDTH * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        let v = h(mid);
        if v == 0.0 || v.abs() < value_tol {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_inside_initial_bracket() {
        let x = increasing_zero(|x| x - 0.25, 0.0);
        assert!((x - 0.25).abs() < 1e-12);
    }

    #[test]
    fn expands_in_both_directions() {
        let x = increasing_zero(|x| x - 1234.5, 0.0);
        assert!((x - 1234.5).abs() < 1e-12 * 1234.5);
        let y = increasing_zero(|x| x.powi(3) + 8000.0, 0.0);
        assert!((y + 20.0).abs() < 1e-10);
    }

    #[test]
    fn value_tolerance_short_circuits() {
        let x = increasing_zero(|x| 1e-3 * (x - 3.0), 1e-6);
        assert!((x - 3.0).abs() < 1e-3);
    }
}
