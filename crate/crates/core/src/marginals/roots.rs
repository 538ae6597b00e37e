//! Real roots of low-degree polynomials on a bracket.
//!
//! Roots of p are isolated between consecutive critical points (roots of p'),
//! where p is monotone, and refined by bisection.

const BISECT_ITER: usize = 200;

/// Horner evaluation; `c` holds ascending-power coefficients.
pub(crate) fn eval(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

/// Sorted real roots of `c` in the open interval (lo, hi).
pub(crate) fn real_roots(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let degree = match c.iter().rposition(|&a| a != 0.0) {
        Some(d) => d,
        None => return Vec::new(),
    };
    let c = &c[..=degree];
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        let r = -c[0] / c[1];
        return if r > lo && r < hi {
            vec![r]
        } else {
            Vec::new()
        };
    }

    let mut fences = vec![lo];
    fences.extend(real_roots(&derivative(c), lo, hi));
    fences.push(hi);

    let mut roots: Vec<f64> = Vec::new();
    for w in fences.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (eval(c, a), eval(c, b));
        if fa == 0.0 {
            if a > lo && a < hi {
                roots.push(a);
            }
            continue;
        }
        if fb == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..BISECT_ITER {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = eval(c, m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}
