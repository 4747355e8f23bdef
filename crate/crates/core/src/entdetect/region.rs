//! Range of `Σ x_i⁴` over `{x ∈ ℝ^D_{≥0} : Σ x_i ≤ c, Σ x_i² = s}`.
//!
//! Stationary points of `Σ x⁴` under the two constraints satisfy
//! `4x³ − 2λx − μ = 0` on the support, so the nonzero entries take at most two
//! distinct values. The minimum is found by enumerating all such two-level
//! configurations with `Σ x = c`, plus the equal-entry points where the linear
//! constraint is slack.

/// Admissible interval of the quartic sum at fixed quadratic sum `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticRange {
    pub min: f64,
    pub max: f64,
}

/// `None` when no point satisfies the constraints (`s > c²` or `s < 0`).
pub fn quartic_range(s: f64, dim: usize, c: f64) -> Option<QuarticRange> {
    if !(0.0..=c * c * (1.0 + 1e-12)).contains(&s) || dim == 0 {
        return None;
    }
    let s = s.min(c * c);
    if s == 0.0 {
        return Some(QuarticRange { min: 0.0, max: 0.0 });
    }
    let mut best = f64::INFINITY;
    for m in 1..=dim {
        let mf = m as f64;
        // m equal entries, linear constraint slack.
        if (mf * s).sqrt() <= c * (1.0 + 1e-12) {
            best = best.min(s * s / mf);
        }
        // k entries a and l = m − k entries b, with k a + l b = c and k a² + l b² = s.
        for k in 1..m {
            let (kf, lf) = (k as f64, (m - k) as f64);
            let qa = lf * lf / kf + lf;
            let qb = -2.0 * c * lf / kf;
            let qc = c * c / kf - s;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                continue;
            }
            for sign in [-1.0, 1.0] {
                let b = (-qb + sign * disc.sqrt()) / (2.0 * qa);
                let a = (c - lf * b) / kf;
                if a >= -1e-14 && b >= -1e-14 {
                    let (a, b) = (a.max(0.0), b.max(0.0));
                    best = best.min(kf * a.powi(4) + lf * b.powi(4));
                }
            }
        }
    }
    Some(QuarticRange { min: best, max: s * s })
}

/// How far `(s, q)` lies outside the admissible set; `≤ 0` means inside.
pub fn region_excess(s: f64, q: f64, dim: usize, c: f64) -> f64 {
    if s > c * c {
        return s - c * c;
    }
    match quartic_range(s.max(0.0), dim, c) {
        Some(r) => (r.min - q).max(q - r.max),
        None => f64::INFINITY,
    }
}
