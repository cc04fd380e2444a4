use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ChargeConfig;
use super::matching::{potential_increment, wasserstein_matching};
use crate::error::{Error, Result};
use crate::field::{Interval, KernelFamily};
use crate::report::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `U + i(u−s)`.
    Baseline,
    /// `U + (i−1)(u−s) + (−ln m − s)₊`, neutral configurations.
    NeutralRefined,
    /// `U + (i−1)(u−s)`, non-neutral configurations.
    NonNeutral,
}

impl Inequality {
    pub fn name(&self) -> &'static str {
        match self {
            Inequality::Baseline => "baseline",
            Inequality::NeutralRefined => "neutral_refined",
            Inequality::NonNeutral => "non_neutral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neutrality {
    Any,
    Neutral,
    NonNeutral,
}

/// Random configuration sources for the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ConfigSampler {
    /// i.i.d. uniform positions; signs uniform within the neutrality class.
    Uniform { class: Neutrality },
    /// `i/2` dipoles at separation `e^{−γu}`, one `γ` per sample.
    Dipole { gammas: Vec<f64> },
}

impl ConfigSampler {
    pub fn dipole() -> Self {
        ConfigSampler::Dipole {
            gammas: vec![0.5, 1.0, 2.0],
        }
    }

    pub fn neutrality(&self) -> Neutrality {
        match self {
            ConfigSampler::Uniform { class } => *class,
            ConfigSampler::Dipole { .. } => Neutrality::Neutral,
        }
    }

    pub fn check(&self, i: usize) -> Result<()> {
        let ok = match self {
            ConfigSampler::Uniform { class: Neutrality::Neutral } => i % 2 == 0,
            ConfigSampler::Uniform { class: Neutrality::NonNeutral } => i >= 1,
            ConfigSampler::Uniform { class: Neutrality::Any } => true,
            ConfigSampler::Dipole { gammas } => i % 2 == 0 && i > 0 && !gammas.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "sampler {self:?} cannot produce configurations with {i} charges"
            )))
        }
    }

    /// Draws one configuration. The random numbers consumed do not depend on
    /// `u`, so a fixed stream gives the same configuration family across `u`.
    pub fn draw<R: Rng>(&self, interval: &Interval, i: usize, u: f64, rng: &mut R) -> ChargeConfig {
        let len = interval.length();
        let mut positions = Vec::with_capacity(i);
        let mut signs = Vec::with_capacity(i);
        match self {
            ConfigSampler::Uniform { class } => {
                for _ in 0..i {
                    positions.push(interval.lo + len * rng.gen::<f64>());
                }
                match class {
                    Neutrality::Any => signs.extend((0..i).map(|_| if rng.gen::<bool>() { 1i8 } else { -1 })),
                    Neutrality::Neutral => {
                        signs.extend((0..i).map(|k| if k < i / 2 { 1i8 } else { -1 }));
                        shuffle(&mut signs, rng);
                    }
                    Neutrality::NonNeutral => loop {
                        let bits: Vec<i8> = (0..i).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
                        if bits.iter().map(|&s| s as i64).sum::<i64>() != 0 {
                            signs = bits;
                            break;
                        }
                    },
                }
            }
            ConfigSampler::Dipole { gammas } => {
                let gamma = gammas[rng.gen_range(0..gammas.len())];
                let d = (-gamma * u).exp() * len;
                for _ in 0..i / 2 {
                    let c: f64 = rng.gen();
                    let flip: bool = rng.gen();
                    let half = 0.5 * d.min(len);
                    let centre = (interval.lo + half) + c * (len - 2.0 * half);
                    let (a, b) = (centre - half, centre + half);
                    positions.push(a);
                    positions.push(b);
                    if flip {
                        signs.extend([1i8, -1]);
                    } else {
                        signs.extend([-1i8, 1]);
                    }
                }
            }
        }
        ChargeConfig::new(positions, signs).expect("sampler produces valid configurations")
    }
}

fn shuffle<T, R: Rng>(v: &mut [T], rng: &mut R) {
    for k in (1..v.len()).rev() {
        let j = rng.gen_range(0..=k);
        v.swap(k, j);
    }
}

/// Slack of `inequality` at one configuration; `+∞` when `m = 0`.
pub fn slack(family: &KernelFamily, config: &ChargeConfig, inequality: Inequality, s: f64, u: f64) -> Result<f64> {
    let i = config.len() as f64;
    let du = u - s;
    match inequality {
        Inequality::Baseline => Ok(potential_increment(family, config, s, u)? + i * du),
        Inequality::NeutralRefined => {
            if !config.is_neutral() || config.is_empty() {
                return Err(Error::Precondition("refined neutral bound needs a non-empty neutral configuration".into()));
            }
            let m = wasserstein_matching(&config.positive(), &config.negative())?.value;
            if m == 0.0 {
                return Ok(f64::INFINITY);
            }
            let extra = (-m.ln() - s).max(0.0);
            Ok(potential_increment(family, config, s, u)? + (i - 1.0) * du + extra)
        }
        Inequality::NonNeutral => {
            if config.is_neutral() {
                return Err(Error::Precondition("non-neutral bound applied to a neutral configuration".into()));
            }
            Ok(potential_increment(family, config, s, u)? + (i - 1.0) * du)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub u: f64,
    pub min_slack: f64,
    pub mean_slack: f64,
    /// `Ĉ = max(0, −min_slack)`.
    pub c_hat: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub inequality: Inequality,
    pub charges: usize,
    pub s: f64,
    pub rows: Vec<AuditRow>,
    /// `(lower edge, count)` of the slack histogram at the largest `u`.
    pub histogram: Vec<(f64, usize)>,
}

impl AuditReport {
    pub fn c_hat(&self) -> f64 {
        self.rows.iter().map(|r| r.c_hat).fold(0.0, f64::max)
    }

    pub fn row(&self, u: f64) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.u == u)
    }

    /// Minimum slack at the largest `u` is at least the minimum at
    /// `u_max/2` minus `tol`.
    pub fn uniformly_bounded(&self, tol: f64) -> Option<bool> {
        let last = self.rows.iter().max_by(|a, b| a.u.total_cmp(&b.u))?;
        let half = self.row(0.5 * last.u)?;
        Some(last.min_slack >= half.min_slack - tol)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["u", "inequality", "min_slack", "mean_slack", "C_hat", "samples"]);
        for r in &self.rows {
            t.push(vec![
                r.u.into(),
                self.inequality.name().into(),
                r.min_slack.into(),
                r.mean_slack.into(),
                r.c_hat.into(),
                r.samples.into(),
            ]);
        }
        t.set_meta("charges", self.charges);
        t.set_meta("s", self.s);
        t
    }
}

const HISTOGRAM_BINS: usize = 20;

fn histogram(values: &[f64]) -> Vec<(f64, usize)> {
    let finite: Vec<f64> = values.iter().cloned().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Vec::new();
    }
    let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for v in finite {
        let k = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, c))
        .collect()
}

/// Minimum and mean slack per `u` over `sample_count` configurations.
///
/// Sample `j` uses stream `j` of a generator seeded by `seed`, reused for
/// every `u`.
#[allow(clippy::too_many_arguments)]
pub fn onsager_audit(
    family: &KernelFamily,
    sampler: &ConfigSampler,
    inequality: Inequality,
    i: usize,
    s: f64,
    u_list: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<AuditReport> {
    sampler.check(i)?;
    let class = sampler.neutrality();
    match (inequality, class) {
        (Inequality::NeutralRefined, Neutrality::Neutral) | (Inequality::NonNeutral, Neutrality::NonNeutral) => {}
        (Inequality::Baseline, _) => {}
        _ => {
            return Err(Error::Precondition(format!(
                "{} audit needs a matching sampler class, got {class:?}",
                inequality.name()
            )))
        }
    }
    if sample_count == 0 || u_list.is_empty() {
        return Err(Error::Precondition("audit needs samples and at least one u".into()));
    }
    if u_list.iter().any(|&u| !(u.is_finite() && u >= s)) || !(s >= 0.0) {
        return Err(Error::Domain("audit needs 0 <= s <= u for every u".into()));
    }
    let interval = family.interval();
    let mut rows = Vec::with_capacity(u_list.len());
    let mut last = Vec::new();
    let u_max = u_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for &u in u_list {
        let slacks = (0..sample_count)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let config = sampler.draw(&interval, i, u, &mut rng);
                slack(family, &config, inequality, s, u)
            })
            .collect::<Result<Vec<f64>>>()?;
        let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
        let finite: Vec<f64> = slacks.iter().cloned().filter(|v| v.is_finite()).collect();
        let mean_slack = if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        rows.push(AuditRow {
            u,
            min_slack,
            mean_slack,
            c_hat: (-min_slack).max(0.0),
            samples: sample_count,
        });
        if u == u_max {
            last = slacks;
        }
    }
    Ok(AuditReport {
        inequality,
        charges: i,
        s,
        rows,
        histogram: histogram(&last),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dipole_refined_slack_is_finite() {
        let f = KernelFamily::default();
        let d = (-3.0f64).exp();
        let c = ChargeConfig::new(vec![0.5, 0.5 + d], vec![1, -1]).unwrap();
        let k = f.k_kernel(6.0, 0.5, 0.5 + d).unwrap();
        assert!((potential_increment(&f, &c, 0.0, 6.0).unwrap() + 2.0 * k).abs() < 1e-13);
        let sl = slack(&f, &c, Inequality::NeutralRefined, 0.0, 6.0).unwrap();
        // U + 6 + 3 with U ≈ -2K_6(e^{-3})
        assert!((sl - (-2.0 * k + 6.0 + 3.0)).abs() < 1e-12);
        assert!(sl.is_finite());
    }

    #[test]
    fn class_mismatch_is_refused() {
        let f = KernelFamily::default();
        let sampler = ConfigSampler::Uniform { class: Neutrality::Any };
        let r = onsager_audit(&f, &sampler, Inequality::NeutralRefined, 2, 0.0, &[1.0], 10, 1);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let r = onsager_audit(&f, &ConfigSampler::dipole(), Inequality::NeutralRefined, 3, 0.0, &[1.0], 10, 1);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn samplers_respect_class() {
        let iv = Interval::unit();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c = ConfigSampler::Uniform { class: Neutrality::Neutral }.draw(&iv, 4, 1.0, &mut rng);
            assert!(c.is_neutral());
            let c = ConfigSampler::Uniform { class: Neutrality::NonNeutral }.draw(&iv, 4, 1.0, &mut rng);
            assert!(!c.is_neutral());
            let c = ConfigSampler::dipole().draw(&iv, 4, 5.0, &mut rng);
            assert!(c.is_neutral());
            assert!(c.check_in(&iv).is_ok());
        }
    }

    #[test]
    fn baseline_audit_small() {
        let f = KernelFamily::default();
        let sampler = ConfigSampler::Uniform { class: Neutrality::Any };
        let rep = onsager_audit(&f, &sampler, Inequality::Baseline, 4, 0.0, &[2.0, 4.0], 200, 9).unwrap();
        assert!(rep.rows.iter().all(|r| r.min_slack >= -1e-9));
        assert_eq!(rep.to_table().rows.len(), 2);
        assert_eq!(rep.histogram.iter().map(|h| h.1).sum::<usize>(), 200);
    }
}
