//! Small numerical helpers: log-log fits, isotonic regression, Halton points
//! and Gauss–Legendre rules.

use std::f64::consts::PI;

/// Least-squares slope of ln y against ln x over the strictly positive pairs.
/// `None` when fewer than two usable points remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Pool-adjacent-violators fit of a nondecreasing sequence (equal weights).
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b as u64) as f64;
        i /= b as u64;
        f *= inv;
    }
    r
}

/// Halton point `i` in [0,1)^dims with a Cranley–Patterson shift.
pub fn halton(i: u64, dims: usize, shift: &[f64]) -> Vec<f64> {
    assert!(dims <= PRIMES.len(), "Halton dimension too large");
    (0..dims)
        .map(|d| {
            let u = radical_inverse(i + 1, PRIMES[d]) + shift.get(d).copied().unwrap_or(0.0);
            u - u.floor()
        })
        .collect()
}

/// Maps a point of [0,1)^d to the closed ball of radius `r` (radial
/// stretching of the cube, so the image is equidistributed enough for a
/// sup-estimate).
pub fn cube_to_ball(u: &[f64], r: f64) -> Vec<f64> {
    let v: Vec<f64> = u.iter().map(|x| 2.0 * x - 1.0).collect();
    let inf = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return vec![0.0; u.len()];
    }
    v.iter().map(|x| x * r * inf / l2).collect()
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [64.0, 128.0, 256.0, 512.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn pav_pools_violators() {
        assert_eq!(isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_nondecreasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(9);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree 17
        let i16: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(16)).sum();
        assert!((i16 - 2.0 / 17.0).abs() < 1e-14);
        let (x2, _) = gauss_legendre(2);
        assert!((x2[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn halton_in_unit_cube() {
        for i in 0..100 {
            let p = halton(i, 3, &[0.3, 0.9, 0.1]);
            assert!(p.iter().all(|&u| (0.0..1.0).contains(&u)));
        }
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn ball_map_respects_radius() {
        for i in 0..200 {
            let p = cube_to_ball(&halton(i, 2, &[]), 0.3);
            assert!(p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.3 + 1e-15);
        }
    }
}
