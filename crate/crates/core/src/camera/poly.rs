//! Small dense-polynomial helpers used to certify lens-model monotonicity.
//!
//! Coefficients are stored lowest degree first: `c[0] + c[1]·t + c[2]·t² + …`.

pub(crate) fn eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

pub(crate) fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn trimmed(coeffs: &[f64]) -> &[f64] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1] == 0.0 {
        n -= 1;
    }
    &coeffs[..n]
}

/// Real roots of the polynomial inside `[lo, hi]`, ascending.
///
/// Recursive isolation: the roots of the derivative split the interval into
/// monotone pieces, and each piece holds at most one root, found by bisection.
pub(crate) fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trimmed(coeffs);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let t = -c[0] / c[1];
            if (lo..=hi).contains(&t) {
                vec![t]
            } else {
                Vec::new()
            }
        }
        _ => {
            let mut knots = vec![lo];
            knots.extend(real_roots_in(&derivative(c), lo, hi));
            knots.push(hi);
            let mut roots: Vec<f64> = Vec::new();
            for w in knots.windows(2) {
                if let Some(t) = bisect_root(c, w[0], w[1]) {
                    if roots.last().is_none_or(|&last| t - last > 1e-14) {
                        roots.push(t);
                    }
                }
            }
            roots
        }
    }
}

fn bisect_root(c: &[f64], mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = eval(c, a);
    let fb = eval(c, b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Minimum value of the polynomial over `[lo, hi]`.
pub(crate) fn min_on(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = eval(coeffs, lo).min(eval(coeffs, hi));
    for t in real_roots_in(&derivative(coeffs), lo, hi) {
        best = best.min(eval(coeffs, t));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_cubic() {
        // (t - 0.5)(t - 1)(t - 2) = t³ - 3.5t² + 3.5t - 1
        let c = [-1.0, 3.5, -3.5, 1.0];
        let r = real_roots_in(&c, 0.0, 3.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.5, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(real_roots_in(&c, 1.2, 1.8).len(), 0);
    }

    #[test]
    fn min_matches_dense_scan() {
        let c = [1.0, -3.0, 0.5, 2.0, -0.4];
        let (lo, hi) = (0.0, 2.4);
        let scan = (0..=100_000)
            .map(|i| eval(&c, lo + (hi - lo) * i as f64 / 100_000.0))
            .fold(f64::INFINITY, f64::min);
        let m = min_on(&c, lo, hi);
        assert!(m <= scan + 1e-12);
        assert!(scan - m < 1e-8);
    }
}
