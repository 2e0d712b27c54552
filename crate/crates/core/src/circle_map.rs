//! Sampled orientation-preserving homeomorphisms of the unit circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, QcError, Result};
use crate::geometry::Point;

const TAU: f64 = 2.0 * PI;

/// Periodic interpolating cubic spline through `(t_k, y_k)` on non-uniform knots.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    values: Vec<Complex64>,
    second: Vec<Complex64>,
    period: f64,
}

impl PeriodicSpline {
    /// `knots` holds `n + 1` increasing abscissae with `knots[n] = knots[0] + period`;
    /// `values` holds the `n` ordinates at `knots[..n]`.
    pub fn with_knots(knots: &[f64], values: &[Complex64], period: f64) -> Result<Self> {
        let n = values.len();
        if n < 3 || knots.len() != n + 1 {
            return Err(arg(format!(
                "periodic spline needs n >= 3 values and n + 1 knots (got {} and {})",
                n,
                knots.len()
            )));
        }
        if ((knots[n] - knots[0]) - period).abs() > 1e-9 * period.abs().max(1.0) {
            return Err(arg("last knot must equal first knot plus the period"));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&d| !(d > 0.0)) {
            return Err(QcError::Geometry("spline knots must be strictly increasing".into()));
        }
        let y = |i: usize| values[i % n];
        // cyclic tridiagonal system for the second derivatives
        let sub: Vec<f64> = (0..n).map(|i| h[(i + n - 1) % n]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[(i + n - 1) % n] + h[i])).collect();
        let sup: Vec<f64> = (0..n).map(|i| h[i]).collect();
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let hm = h[(i + n - 1) % n];
                let ym = y(i + n - 1);
                ((y(i + 1) - y(i)) / h[i] - (y(i) - ym) / hm) * 6.0
            })
            .collect();
        let second = solve_cyclic(&sub, &diag, &sup, &rhs);
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
            period,
        })
    }

    /// Uniform knots `t_k = period · k / n`.
    pub fn uniform(values: &[Complex64], period: f64) -> Result<Self> {
        let n = values.len();
        let knots: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
        Self::with_knots(&knots, values, period)
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.values.len();
        let t0 = self.knots[0];
        let u = t0 + (t - t0).rem_euclid(self.period);
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let h = self.knots[i + 1] - self.knots[i];
        (i, (u - self.knots[i]) / h, h)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let n = self.values.len();
        let (i, s, h) = self.locate(t);
        let j = (i + 1) % n;
        let a = 1.0 - s;
        let (mi, mj) = (self.second[i], self.second[j]);
        self.values[i] * a + self.values[j] * s + (mi * (a * a * a - a) + mj * (s * s * s - s)) * (h * h / 6.0)
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        let n = self.values.len();
        let (i, s, h) = self.locate(t);
        let j = (i + 1) % n;
        let a = 1.0 - s;
        let (mi, mj) = (self.second[i], self.second[j]);
        (self.values[j] - self.values[i]) / h + (mj * (3.0 * s * s - 1.0) - mi * (3.0 * a * a - 1.0)) * (h / 6.0)
    }
}

/// Sherman-Morrison reduction of a cyclic tridiagonal solve to two Thomas sweeps.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let alpha = sup[n - 1]; // A[n-1][0]
    let beta = sub[0]; // A[0][n-1]
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &d, sup, rhs);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = Complex64::new(gamma, 0.0);
    u[n - 1] = Complex64::new(alpha, 0.0);
    let z = thomas(sub, &d, sup, &u);
    let fact = (x[0] + x[n - 1] * (beta / gamma)) / (z[0] + z[n - 1] * (beta / gamma) + 1.0);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - d[i - 1] * sub[i]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= next * c[i];
    }
    x
}

/// How a [`CircleMap`] is evaluated between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Periodic cubic spline in θ.
    PeriodicCubic,
    /// Piecewise linear in the lifted argument; exact for maps whose lift is
    /// piecewise linear with breakpoints among the samples.
    PiecewiseLinear,
}

/// Samples `f(e^{iθ_k})`, `θ_k = 2πk/n`, of an orientation-preserving
/// homeomorphism from the circle onto a curve starlike about 0. Samples are kept
/// as given, so the boundary trace of a map that is only normalised at three
/// points (whose image curve need not be the unit circle) is represented
/// faithfully; [`CircleMap::projected`] gives the radial projection.
#[derive(Debug, Clone)]
pub struct CircleMap {
    values: Vec<Point>,
    lift: Vec<f64>,
    interpolation: Interpolation,
    /// Periodic part `φ(θ) − θ` of the lift.
    lift_spline: Option<PeriodicSpline>,
    value_spline: Option<PeriodicSpline>,
}

impl CircleMap {
    pub fn from_samples(values: Vec<Point>, interpolation: Interpolation) -> Result<Self> {
        let n = values.len();
        if n < 16 {
            return Err(arg(format!("circle map needs at least 16 samples, got {n}")));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0) {
            return Err(QcError::Geometry(format!("sample {k} is not a point of the punctured plane")));
        }
        let mut lift = Vec::with_capacity(n);
        lift.push(values[0].arg());
        for k in 1..=n {
            let prev = lift[k - 1];
            let v = values[k % n];
            let step = (v / values[k - 1]).arg();
            if k < n {
                lift.push(prev + step);
            } else {
                let total = prev + step - lift[0];
                let winding = (total / TAU).round() as i64;
                if winding != 1 {
                    return Err(QcError::Geometry(format!("circle map has winding number {winding}, expected 1")));
                }
            }
        }
        // anchor the lift so that φ(0) lies in (−π, π]
        if let Some(k) = lift.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(QcError::Geometry(format!(
                "argument of the samples is not strictly increasing at index {k}"
            )));
        }
        if lift[n - 1] >= lift[0] + TAU {
            return Err(QcError::Geometry("argument of the samples wraps more than once".into()));
        }
        let (lift_spline, value_spline) = match interpolation {
            Interpolation::PeriodicCubic => {
                let periodic: Vec<Complex64> = lift
                    .iter()
                    .enumerate()
                    .map(|(k, &phi)| Complex64::new(phi - TAU * k as f64 / n as f64, 0.0))
                    .collect();
                (
                    Some(PeriodicSpline::uniform(&periodic, TAU)?),
                    Some(PeriodicSpline::uniform(&values, TAU)?),
                )
            }
            Interpolation::PiecewiseLinear => (None, None),
        };
        Ok(Self {
            values,
            lift,
            interpolation,
            lift_spline,
            value_spline,
        })
    }

    /// Samples `θ ↦ e^{i g(θ)}` for a lift `g` with `g(θ + 2π) = g(θ) + 2π`.
    pub fn from_lift(n: usize, interpolation: Interpolation, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n)
            .map(|k| Point::from_polar(1.0, g(TAU * k as f64 / n as f64)))
            .collect();
        Self::from_samples(values, interpolation)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_lift(n, Interpolation::PeriodicCubic, |t| t)
    }

    /// `e^{iθ} ↦ e^{i g(θ)}` with `g(θ) = aθ` on `[0, π]` and `aπ + (2 − a)(θ − π)`
    /// on `[π, 2π]`, sampled exactly (n even) and interpolated linearly.
    pub fn angular_stretch(a: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && a < 2.0) {
            return Err(arg(format!("angular slope must lie in (0, 2), got {a}")));
        }
        if !n.is_multiple_of(2) {
            return Err(arg("angular stretch needs an even sample count so that θ = π is a node"));
        }
        Self::from_lift(n, Interpolation::PiecewiseLinear, move |t| angular_stretch_lift(a, t))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn samples(&self) -> &[Point] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn winding_number(&self) -> i64 {
        1
    }

    /// Angular spacing `2π/n` of the samples.
    pub fn spacing(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.values.len() as f64
    }

    /// `max_k | |f(e^{iθ_k})| − 1 |` of the stored samples.
    pub fn radial_defect(&self) -> f64 {
        self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Continuous argument `φ(θ)` with `f(e^{iθ}) = e^{iφ(θ)}`.
    pub fn lift_at(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let turns = (theta / TAU).floor();
        let t = theta - turns * TAU;
        let base = match &self.lift_spline {
            Some(s) => t + s.eval(t).re,
            None => {
                let u = t / self.spacing();
                let k = (u.floor() as usize).min(n - 1);
                let s = u - k as f64;
                let next = if k + 1 < n { self.lift[k + 1] } else { self.lift[0] + TAU };
                self.lift[k] * (1.0 - s) + next * s
            }
        };
        base + turns * TAU
    }

    /// Interpolated `f(e^{iθ})`. Piecewise-linear maps interpolate modulus and
    /// argument separately, so maps onto the circle stay on it.
    pub fn eval(&self, theta: f64) -> Point {
        match &self.value_spline {
            Some(s) => s.eval(theta),
            None => {
                let n = self.values.len();
                let u = theta.rem_euclid(TAU) / self.spacing();
                let k = (u.floor() as usize).min(n - 1);
                let s = u - k as f64;
                let r = self.values[k].norm() * (1.0 - s) + self.values[(k + 1) % n].norm() * s;
                Point::from_polar(r, self.lift_at(theta))
            }
        }
    }

    /// Radial projection `e^{iφ(θ)}` of [`CircleMap::eval`].
    pub fn projected(&self, theta: f64) -> Point {
        Point::from_polar(1.0, self.lift_at(theta))
    }

    /// `|d f(e^{iθ}) / dθ|`, the modulus of the tangential derivative.
    pub fn tangential_derivative(&self, theta: f64) -> f64 {
        match &self.value_spline {
            Some(s) => s.derivative(theta).norm(),
            None => self.eval(theta).norm() * self.lift_derivative(theta),
        }
    }

    /// `dφ/dθ`.
    pub fn lift_derivative(&self, theta: f64) -> f64 {
        match &self.lift_spline {
            Some(s) => 1.0 + s.derivative(theta.rem_euclid(TAU)).re,
            None => {
                let n = self.values.len();
                let u = theta.rem_euclid(TAU) / self.spacing();
                let k = (u.floor() as usize).min(n - 1);
                let next = if k + 1 < n { self.lift[k + 1] } else { self.lift[0] + TAU };
                (next - self.lift[k]) / self.spacing()
            }
        }
    }

    /// CSV with header `theta,re_f,im_f`, one row per stored sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,re_f,im_f\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.angle(k), v.re, v.im));
        }
        out
    }
}

pub fn angular_stretch_lift(a: f64, theta: f64) -> f64 {
    let b = 2.0 - a;
    let turns = (theta / TAU).floor();
    let t = theta - turns * TAU;
    let g = if t <= PI { a * t } else { a * PI + b * (t - PI) };
    g + turns * TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spline_reproduces_trig_polynomial() {
        let n = 64;
        let f = |t: f64| Complex64::new(t.cos() + 0.3 * (2.0 * t).sin(), (3.0 * t).cos());
        let vals: Vec<Complex64> = (0..n).map(|k| f(TAU * k as f64 / n as f64)).collect();
        let s = PeriodicSpline::uniform(&vals, TAU).unwrap();
        for (k, v) in vals.iter().enumerate() {
            assert!((s.eval(TAU * k as f64 / n as f64) - v).norm() < 1e-12);
        }
        for t in [0.05, 1.234, 3.3, 6.2, -0.5, 7.0] {
            assert!((s.eval(t) - f(t)).norm() < 2e-4, "t={t}");
            let df = Complex64::new(-t.sin() + 0.6 * (2.0 * t).cos(), -3.0 * (3.0 * t).sin());
            assert!((s.derivative(t) - df).norm() < 1e-2);
        }
    }

    #[test]
    fn spline_on_nonuniform_knots() {
        let n = 40;
        let mut knots: Vec<f64> = (0..n).map(|k| TAU * (k as f64 / n as f64 + 0.004 * (k as f64).sin())).collect();
        knots.push(TAU);
        let vals: Vec<Complex64> = knots[..n].iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let s = PeriodicSpline::with_knots(&knots, &vals, TAU).unwrap();
        for t in [0.1, 2.0, 4.5] {
            assert!((s.eval(t) - Complex64::from_polar(1.0, t)).norm() < 1e-4);
        }
    }

    #[test]
    fn identity_and_angular_stretch() {
        let id = CircleMap::identity(64).unwrap();
        for t in [0.0, 0.3, 3.0, 6.0] {
            assert!((id.eval(t) - Point::from_polar(1.0, t)).norm() < 1e-6);
            assert!((id.projected(t) - Point::from_polar(1.0, t)).norm() < 1e-12);
            assert!((id.lift_derivative(t) - 1.0).abs() < 1e-12);
            assert!((id.tangential_derivative(t) - 1.0).abs() < 1e-4);
        }
        let st = CircleMap::angular_stretch(1.5, 256).unwrap();
        assert!((st.lift_at(PI / 2.0) - 0.75 * PI).abs() < 1e-12);
        assert!((st.lift_derivative(PI / 2.0) - 1.5).abs() < 1e-12);
        assert!((st.lift_derivative(3.0 * PI / 2.0) - 0.5).abs() < 1e-12);
        assert!((st.eval(1.0) - Point::from_polar(1.0, 1.5)).norm() < 1e-12);
        assert!(id.radial_defect() < 1e-15);
        assert!(CircleMap::angular_stretch(1.5, 255).is_err());
    }

    #[test]
    fn rejects_reversed_and_double_covers() {
        let rev: Vec<Point> = (0..32).map(|k| Point::from_polar(1.0, -TAU * k as f64 / 32.0)).collect();
        assert!(CircleMap::from_samples(rev, Interpolation::PeriodicCubic).is_err());
        let double: Vec<Point> = (0..32).map(|k| Point::from_polar(1.0, 2.0 * TAU * k as f64 / 32.0)).collect();
        assert!(CircleMap::from_samples(double, Interpolation::PeriodicCubic).is_err());
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let id = CircleMap::identity(32).unwrap();
        let csv = id.to_csv();
        assert_eq!(csv.lines().count(), 33);
        assert!(csv.starts_with("theta,re_f,im_f"));
    }

    proptest! {
        #[test]
        fn lift_is_increasing_for_smooth_homeomorphisms(eps in -0.4f64..0.4, m in 1i32..4, t in 0.0f64..TAU) {
            // θ + (ε/m) sin(mθ) is a lift of a diffeomorphism when |ε| < 1
            let g = move |s: f64| s + eps / m as f64 * (m as f64 * s).sin();
            let map = CircleMap::from_lift(128, Interpolation::PeriodicCubic, g).unwrap();
            prop_assert!(map.lift_derivative(t) > 0.0);
            prop_assert!((map.lift_at(t) - g(t)).abs() < 1e-4);
            prop_assert!((map.lift_at(t + TAU) - map.lift_at(t) - TAU).abs() < 1e-12);
        }
    }
}
