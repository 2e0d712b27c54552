//! Fixed-order quadrature building blocks: Gauss-Legendre rules, circle/disc
//! arc intersection and compensated reductions.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.on(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation; deterministic and accurate to O(log n) ulps.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// The set of polar angles φ for which `center + rho·e^{iφ}` lies strictly
/// inside the disc `|z - disc_center| < disc_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcSet {
    Empty,
    Full,
    /// φ ∈ (mid − half, mid + half), with 0 < half < π.
    Arc { mid: f64, half: f64 },
}

impl ArcSet {
    pub fn length(&self) -> f64 {
        match *self {
            ArcSet::Empty => 0.0,
            ArcSet::Full => 2.0 * PI,
            ArcSet::Arc { half, .. } => 2.0 * half,
        }
    }
}

pub fn arc_inside_disc(
    center: num_complex::Complex64,
    rho: f64,
    disc_center: num_complex::Complex64,
    disc_radius: f64,
) -> ArcSet {
    let offset = disc_center - center;
    let d = offset.norm();
    // |center + ρe^{iφ} − c|² = ρ² − 2ρd cos(φ − ψ) + d² < R²
    if d < 1e-300 {
        return if rho < disc_radius {
            ArcSet::Full
        } else {
            ArcSet::Empty
        };
    }
    let c = (rho * rho + d * d - disc_radius * disc_radius) / (2.0 * rho * d);
    if c >= 1.0 {
        ArcSet::Empty
    } else if c <= -1.0 {
        ArcSet::Full
    } else {
        ArcSet::Arc {
            mid: offset.arg(),
            half: c.acos(),
        }
    }
}

/// Angular nodes and weights over an [`ArcSet`].
///
/// Arcs are integrated with a graded substitution clustering nodes at both
/// endpoints, which absorbs the square-root behaviour of integrands that
/// vanish (or blow up integrably) where the arc meets the disc boundary.
pub fn arc_rule(arc: ArcSet, rule: &GaussLegendre, full_points: usize) -> Vec<(f64, f64)> {
    match arc {
        ArcSet::Empty => Vec::new(),
        ArcSet::Full => {
            let n = full_points.max(8);
            let w = 2.0 * PI / n as f64;
            (0..n).map(|k| (w * k as f64, w)).collect()
        }
        ArcSet::Arc { mid, half } => {
            let mut out = Vec::with_capacity(2 * rule.nodes.len());
            // φ = mid ± half·(1 − (1 − t)²), t ∈ [0, 1]
            for sign in [-1.0, 1.0] {
                for (t, w) in rule.on(0.0, 1.0) {
                    let s = 1.0 - t;
                    let phi = mid + sign * half * (1.0 - s * s);
                    out.push((phi, w * half * 2.0 * s));
                }
            }
            out
        }
    }
}

/// Geometric grading of `[a, b]` towards `b` (sub-interval lengths shrink by half).
pub fn graded_panels(a: f64, b: f64, levels: usize, toward_end: bool) -> Vec<(f64, f64)> {
    let mut panels = Vec::with_capacity(levels + 1);
    let len = b - a;
    let mut lo = 0.0;
    for l in 0..levels {
        let hi = 1.0 - 0.5f64.powi(l as i32 + 1);
        panels.push((lo, hi));
        lo = hi;
    }
    panels.push((lo, 1.0));
    panels
        .into_iter()
        .map(|(u, v)| {
            if toward_end {
                (a + len * u, a + len * v)
            } else {
                (b - len * v, b - len * u)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arc_for_center_on_circle() {
        // ζ = 1, ρ small: inside the unit disc iff cos(φ − π) > ρ/2
        let arc = arc_inside_disc(Complex64::new(1.0, 0.0), 0.2, Complex64::new(0.0, 0.0), 1.0);
        match arc {
            ArcSet::Arc { mid, half } => {
                assert!((mid.abs() - PI).abs() < 1e-14);
                assert!((half - (0.1f64).acos()).abs() < 1e-12);
            }
            _ => panic!("expected an arc"),
        }
    }

    #[test]
    fn graded_arc_rule_has_exact_length() {
        let rule = GaussLegendre::new(12);
        let arc = ArcSet::Arc { mid: 0.3, half: 1.1 };
        let total: f64 = arc_rule(arc, &rule, 64).iter().map(|p| p.1).sum();
        assert!((total - 2.2).abs() < 1e-13);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(1.0, 3.0, 4, true);
        assert_eq!(p.first().unwrap().0, 1.0);
        assert_eq!(p.last().unwrap().1, 3.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
