use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};

/// Radial profile `Q(r)` generating the scale family `Q_u(x, y) = Q(e^u |x - y|)`.
///
/// Every profile satisfies `Q(0) = 1`, so `K_t(x, x) = t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SeedProfile {
    /// `exp(-(r / width)^2 / 2)`.
    Gaussian { width: f64 },
    /// `1 / (1 + (r / width)^2)`.
    Cauchy { width: f64 },
    /// `Q ≡ 1`. Positive semidefinite but without decay; useful only as a
    /// negative control for the assumption validator.
    Constant,
}

impl Default for SeedProfile {
    fn default() -> Self {
        SeedProfile::Gaussian { width: 1.0 }
    }
}

impl SeedProfile {
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            SeedProfile::Gaussian { width } => {
                let z = r / width;
                (-0.5 * z * z).exp()
            }
            SeedProfile::Cauchy { width } => {
                let z = r / width;
                1.0 / (1.0 + z * z)
            }
            SeedProfile::Constant => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SeedProfile::Gaussian { .. } => "gaussian",
            SeedProfile::Cauchy { .. } => "cauchy",
            SeedProfile::Constant => "constant",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SeedProfile::Gaussian { width } | SeedProfile::Cauchy { width } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::Domain(format!(
                        "seed width must be positive and finite, got {width}"
                    )));
                }
            }
            SeedProfile::Constant => {}
        }
        if (self.value(0.0) - 1.0).abs() > 0.0 {
            return Err(Error::Domain("seed profile must satisfy Q(0) = 1".into()));
        }
        Ok(())
    }
}

/// Closed bounded interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Density `g` of the reference measure `μ(dx) = g(x) dx` on the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// `g ≡ 1`.
    Uniform,
    /// Samples of `g` at equally spaced points spanning the interval
    /// (first sample at `lo`, last at `hi`), linearly interpolated.
    Table(Vec<f64>),
}

/// Geometry and kernel of the model: seed profile, interval, density and
/// the order of the Gauss-Legendre rule used for `u`-integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    seed: SeedProfile,
    interval: Interval,
    density: Density,
    quadrature_order: usize,
    reference_rule: Rule,
    density_max: f64,
    total_mass: f64,
}

impl Default for KernelFamily {
    fn default() -> Self {
        KernelFamily::new(SeedProfile::default(), Interval::unit(), Density::Uniform, 20)
            .expect("default kernel family is valid")
    }
}

impl KernelFamily {
    pub fn new(
        seed: SeedProfile,
        interval: Interval,
        density: Density,
        quadrature_order: usize,
    ) -> Result<Self> {
        seed.validate()?;
        Interval::new(interval.lo, interval.hi)?;
        if quadrature_order == 0 || quadrature_order > 128 {
            return Err(Error::Domain(format!(
                "quadrature order must be in 1..=128, got {quadrature_order}"
            )));
        }
        let (density_max, total_mass) = match &density {
            Density::Uniform => (1.0, interval.length()),
            Density::Table(values) => {
                if values.len() < 2 {
                    return Err(Error::Domain(
                        "density table needs at least two samples".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Domain(
                        "density table values must be finite and nonnegative".into(),
                    ));
                }
                let max = values.iter().cloned().fold(0.0, f64::max);
                let h = interval.length() / (values.len() - 1) as f64;
                let mass = h
                    * (values.iter().sum::<f64>()
                        - 0.5 * (values[0] + values[values.len() - 1]));
                if mass <= 0.0 {
                    return Err(Error::Domain("density has zero total mass".into()));
                }
                (max, mass)
            }
        };
        Ok(KernelFamily {
            seed,
            interval,
            density,
            quadrature_order,
            reference_rule: gauss_legendre(quadrature_order),
            density_max,
            total_mass,
        })
    }

    pub fn with_quadrature_order(&self, order: usize) -> Result<Self> {
        KernelFamily::new(self.seed, self.interval, self.density.clone(), order)
    }

    pub fn seed(&self) -> SeedProfile {
        self.seed
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.density, Density::Uniform)
    }

    /// `μ(I)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn density_max(&self) -> f64 {
        self.density_max
    }

    /// `g(x)`; zero outside the interval.
    pub fn density_at(&self, x: f64) -> f64 {
        if !self.interval.contains(x) {
            return 0.0;
        }
        match &self.density {
            Density::Uniform => 1.0,
            Density::Table(values) => {
                let cells = (values.len() - 1) as f64;
                let s = (x - self.interval.lo) / self.interval.length() * cells;
                let i = (s.floor() as usize).min(values.len() - 2);
                let frac = s - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    fn check_position(&self, x: f64) -> Result<()> {
        if self.interval.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "position {x} lies outside [{}, {}]",
                self.interval.lo, self.interval.hi
            )))
        }
    }

    /// `Q_u(x, y) = Q(e^u |x - y|)`.
    pub fn q_kernel(&self, u: f64, x: f64, y: f64) -> Result<f64> {
        self.check_position(x)?;
        self.check_position(y)?;
        if !u.is_finite() {
            return Err(Error::Domain(format!("scale u must be finite, got {u}")));
        }
        Ok(self.q_of_distance(u, (x - y).abs()))
    }

    #[inline]
    pub fn q_of_distance(&self, u: f64, r: f64) -> f64 {
        self.seed.value(u.exp() * r)
    }

    /// `K_t(x, y) = ∫_0^t Q_u(x, y) du`.
    pub fn k_kernel(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.check_position(x)?;
        self.check_position(y)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("cutoff t must be finite and >= 0, got {t}")));
        }
        Ok(self.k_increment(0.0, t, (x - y).abs()))
    }

    /// `K_t` as a function of the distance `r = |x - y|`.
    #[inline]
    pub fn k_of_distance(&self, t: f64, r: f64) -> f64 {
        self.k_increment(0.0, t, r)
    }

    /// `∫_s^u Q(e^v r) dv`, by Gauss-Legendre on subintervals of length at most one.
    pub fn k_increment(&self, s: f64, u: f64, r: f64) -> f64 {
        if u <= s {
            return 0.0;
        }
        if r == 0.0 {
            return u - s;
        }
        let pieces = (u - s).ceil().max(1.0) as usize;
        let h = (u - s) / pieces as f64;
        let half = 0.5 * h;
        let rule = &self.reference_rule;
        let mut total = 0.0;
        for p in 0..pieces {
            let mid = s + (p as f64 + 0.5) * h;
            let mut piece = 0.0;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                piece += w * self.seed.value((mid + half * x).exp() * r);
            }
            total += half * piece;
        }
        total
    }

    /// Gram matrix of the seed profile on the given points (`u = 0`) and its
    /// smallest eigenvalue; the profile is accepted as positive semidefinite
    /// when that eigenvalue is at least `-1e-9` times the largest.
    pub fn check_positive_semidefinite(&self, points: &[f64]) -> Result<f64> {
        let n = points.len();
        let gram = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            self.seed.value((points[i] - points[j]).abs())
        });
        let eig = nalgebra::SymmetricEigen::new(gram);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        if min < -1e-9 * max.max(1.0) {
            return Err(Error::Domain(format!(
                "seed profile is not positive semidefinite: eigenvalue {min}"
            )));
        }
        Ok(min)
    }
}

/// `K_t(r)` for one fixed cutoff, tabulated in `s = ln r` and evaluated by
/// cubic Hermite interpolation using the exact derivative
/// `dK_t/ds = Q(e^t r) - Q(r)`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    t: f64,
    s_min: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl KernelTable {
    const STEP: f64 = 0.01;
    const DEPTH: f64 = 18.0;

    pub fn new(family: &KernelFamily, t: f64) -> Self {
        let s_min = -t - Self::DEPTH;
        let s_max = family.interval().length().max(1e-300).ln() + 0.05;
        let cells = ((s_max - s_min) / Self::STEP).ceil() as usize;
        let step = (s_max - s_min) / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        let mut slopes = Vec::with_capacity(cells + 1);
        let seed = family.seed();
        let te = t.exp();
        for k in 0..=cells {
            let r = (s_min + k as f64 * step).exp();
            values.push(family.k_of_distance(t, r));
            slopes.push(seed.value(te * r) - seed.value(r));
        }
        KernelTable {
            t,
            s_min,
            step,
            values,
            slopes,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.t;
        }
        let s = r.ln();
        let pos = (s - self.s_min) / self.step;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        let i = (pos.floor() as usize).min(last - 1);
        let u = pos - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }
}

/// Scan settings for [`validate_kernel_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionScan {
    pub u_max: f64,
    /// Number of `u` samples on `[0, u_max]` at the base resolution.
    pub u_points: usize,
    /// Number of distance samples on `(0, diam I]` at the base resolution.
    pub r_points: usize,
}

impl Default for AssumptionScan {
    fn default() -> Self {
        AssumptionScan {
            u_max: 8.0,
            u_points: 33,
            r_points: 96,
        }
    }
}

/// One measured constant of the regularity assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    /// Measured at base resolution over the full scan.
    pub constant: f64,
    /// Measured on a doubled grid.
    pub refined: f64,
    /// Measured over half the `u` range; a large change signals growth.
    pub half_range: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub seed: &'static str,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Measures the constants in the decay bounds on `Q_u` and its first and
/// mixed second derivatives, and the supremum of `|K_t(x,y) + ln(|x-y| ∨ e^{-t})|`.
///
/// A constant passes when it is finite and changes by less than 5% both
/// under grid refinement and when the `u` range is halved.
pub fn validate_kernel_assumptions(family: &KernelFamily, scan: &AssumptionScan) -> AssumptionReport {
    let diam = family.interval().length();
    let measure = |u_max: f64, u_points: usize, r_points: usize| -> [f64; 4] {
        let mut sup = [0.0f64; 4];
        for iu in 0..u_points {
            let u = u_max * iu as f64 / (u_points - 1).max(1) as f64;
            let eu = u.exp();
            let h = 1e-6 * (-u).exp();
            for ir in 1..=r_points {
                // log-spaced distances down to e^{-u_max - 2}
                let frac = ir as f64 / r_points as f64;
                let r = diam * (-(u_max + 2.0 + diam.ln().max(0.0)) * (1.0 - frac)).exp();
                let decay = (1.0 + eu * r).powi(-2);
                let q = |dx: f64| family.q_of_distance(u, (r + dx).abs());
                let q0 = q(0.0);
                let dq = (q(h) - q(-h)) / (2.0 * h);
                // x -> x + a, y -> y + b moves the distance by a - b
                let dxy = -(q(0.0 + 2.0 * h) - 2.0 * q0 + q(-2.0 * h)) / (4.0 * h * h);
                sup[0] = sup[0].max(q0.abs() / decay);
                sup[1] = sup[1].max(dq.abs() / (eu * decay));
                sup[2] = sup[2].max(dxy.abs() / (eu * eu * decay));
                let t = u;
                let k = family.k_of_distance(t, r);
                sup[3] = sup[3].max((k + r.max((-t).exp()).ln()).abs());
            }
        }
        sup
    };
    let base = measure(scan.u_max, scan.u_points, scan.r_points);
    let refined = measure(scan.u_max, 2 * scan.u_points - 1, 2 * scan.r_points);
    let half = measure(0.5 * scan.u_max, scan.u_points, scan.r_points);
    let names = ["q_decay", "dq_decay", "d2q_decay", "log_asymptotics"];
    let checks = (0..4)
        .map(|i| {
            let stable = |a: f64, b: f64| (a - b).abs() <= 0.05 * a.abs().max(b.abs()).max(1e-12);
            let passed = base[i].is_finite()
                && refined[i].is_finite()
                && stable(base[i], refined[i])
                && stable(base[i], half[i]);
            AssumptionCheck {
                name: names[i],
                constant: base[i],
                refined: refined[i],
                half_range: half[i],
                passed,
            }
        })
        .collect();
    AssumptionReport {
        seed: family.seed().name(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> KernelFamily {
        KernelFamily::default()
    }

    #[test]
    fn q_kernel_examples() {
        let f = family();
        assert_eq!(f.q_kernel(0.0, 0.3, 0.3).unwrap(), 1.0);
        let e = (-0.5f64).exp();
        assert!((f.q_kernel(0.0, 0.0, 1.0).unwrap() - e).abs() < 1e-15);
        assert!((f.q_kernel(2f64.ln(), 0.0, 0.5).unwrap() - e).abs() < 1e-15);
    }

    #[test]
    fn q_kernel_rejects_outside_positions() {
        let f = family();
        assert!(matches!(f.q_kernel(0.0, -0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(f.k_kernel(1.0, 0.5, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn k_kernel_trivial_values() {
        let f = family();
        assert_eq!(f.k_kernel(0.0, 0.2, 0.9).unwrap(), 0.0);
        assert_eq!(f.k_kernel(5.0, 0.4, 0.4).unwrap(), 5.0);
    }

    #[test]
    fn kernels_are_exactly_symmetric() {
        let f = family();
        for &(x, y) in &[(0.1, 0.7), (0.0, 1.0), (0.33, 0.3301)] {
            assert_eq!(f.q_kernel(1.3, x, y).unwrap(), f.q_kernel(1.3, y, x).unwrap());
            assert_eq!(f.k_kernel(4.2, x, y).unwrap(), f.k_kernel(4.2, y, x).unwrap());
        }
    }

    #[test]
    fn k_kernel_is_stable_under_doubled_order() {
        let f = family();
        let g = f.with_quadrature_order(40).unwrap();
        for &t in &[0.5, 3.0, 10.0] {
            for &r in &[1e-6, 1e-3, 0.05, 0.3, 1.0] {
                let a = f.k_of_distance(t, r);
                let b = g.k_of_distance(t, r);
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300), "t={t} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn density_table_interpolates_and_integrates() {
        let f = KernelFamily::new(
            SeedProfile::default(),
            Interval::new(0.0, 2.0).unwrap(),
            Density::Table(vec![0.0, 1.0, 0.5]),
            20,
        )
        .unwrap();
        assert!((f.density_at(0.5) - 0.5).abs() < 1e-15);
        assert!((f.density_at(1.5) - 0.75).abs() < 1e-15);
        assert_eq!(f.density_at(2.5), 0.0);
        assert!((f.total_mass() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_densities_are_rejected() {
        for table in [vec![1.0], vec![1.0, -0.1], vec![0.0, 0.0], vec![1.0, f64::INFINITY]] {
            assert!(KernelFamily::new(SeedProfile::default(), Interval::unit(), Density::Table(table), 20).is_err());
        }
    }

    #[test]
    fn seeds_are_positive_semidefinite_on_a_grid() {
        let points: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        for seed in [
            SeedProfile::Gaussian { width: 1.0 },
            SeedProfile::Cauchy { width: 0.5 },
            SeedProfile::Constant,
        ] {
            let f = KernelFamily::new(seed, Interval::unit(), Density::Uniform, 20).unwrap();
            f.check_positive_semidefinite(&points).unwrap();
        }
    }

    #[test]
    fn table_matches_direct_kernel() {
        let f = family();
        for &t in &[0.0, 2.0, 8.0] {
            let table = KernelTable::new(&f, t);
            assert_eq!(table.eval(0.0), t);
            for k in 0..400 {
                let r = (-(t + 12.0) * k as f64 / 400.0).exp();
                let direct = f.k_of_distance(t, r);
                assert!((table.eval(r) - direct).abs() < 1e-9, "t={t} r={r}");
            }
        }
    }

    #[test]
    fn default_seed_passes_assumption_scan() {
        let report = validate_kernel_assumptions(&family(), &AssumptionScan::default());
        for c in &report.checks {
            assert!(c.constant.is_finite(), "{c:?}");
        }
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn diagonal_log_asymptotics_vanish_exactly() {
        let f = family();
        for t in [0.5, 3.0, 7.0] {
            assert_eq!(f.k_of_distance(t, 0.0) + (-t as f64).exp().ln(), 0.0);
        }
    }

    #[test]
    fn constant_seed_fails_log_asymptotics() {
        let f = KernelFamily::new(SeedProfile::Constant, Interval::unit(), Density::Uniform, 20).unwrap();
        let report = validate_kernel_assumptions(&f, &AssumptionScan::default());
        let item = report.check("log_asymptotics").unwrap();
        assert!(!item.passed);
        assert!(item.constant > 1.5 * item.half_range);
        assert!(!report.passed());
    }
}
