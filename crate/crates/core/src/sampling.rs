//! Deterministic quasi-uniform point sets on balls.
//!
//! Verification sweeps need reproducible samples: the Halton sequence fills
//! the ball evenly without randomness, and the coordinate axes are always
//! included because degenerate directions are where strict inequalities
//! tend to fail first.

const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radii fractions at which axis points are planted.
pub const AXIS_FRACTIONS: [f64; 3] = [0.1, 0.5, 1.0];

fn radical_inverse(base: u32, mut i: u64) -> f64 {
    let b = f64::from(base);
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % u64::from(base)) as f64 * inv;
        i /= u64::from(base);
        inv /= b;
    }
    r
}

/// The first `count` Halton points (skipping index 0, which degenerates to
/// the cube corner) that land inside the unit ball, scaled to `radius`.
/// Points are nonzero by construction.
pub fn ball_points(n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    assert!((1..=PRIMES.len()).contains(&n), "dimension 1..=10 supported");
    assert!(radius > 0.0, "radius must be positive");
    let mut out = Vec::with_capacity(count);
    let mut i: u64 = 1;
    while out.len() < count {
        let p: Vec<f64> = (0..n).map(|d| 2.0 * radical_inverse(PRIMES[d], i) - 1.0).collect();
        let norm2: f64 = p.iter().map(|v| v * v).sum();
        if norm2 <= 1.0 && norm2 > 0.0 {
            out.push(p.iter().map(|v| v * radius).collect());
        }
        i += 1;
    }
    out
}

/// ± axis points at the [`AXIS_FRACTIONS`] of `radius`: 6n points.
pub fn axis_points(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(6 * n);
    for d in 0..n {
        for f in AXIS_FRACTIONS {
            for sign in [1.0, -1.0] {
                let mut p = vec![0.0; n];
                p[d] = sign * f * radius;
                out.push(p);
            }
        }
    }
    out
}

/// Axis points plus Halton fill, at least `count` points in total. All
/// points are nonzero and inside the closed ball.
pub fn sample_ball(n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = axis_points(n, radius);
    if count > out.len() {
        out.extend(ball_points(n, radius, count - out.len()));
    }
    out
}

/// `count` evenly spaced times over [lo, hi], endpoints included.
pub fn uniform_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && hi > lo);
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * step).collect()
}
