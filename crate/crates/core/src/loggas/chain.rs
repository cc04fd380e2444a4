use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activity::Activity;
use crate::error::{Error, Result};
use crate::field::{Interval, KernelFamily, KernelTable};
use crate::onsager::ChargeConfig;
use crate::stats::integrated_autocorrelation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSettings {
    pub burn_in: usize,
    pub thinning: usize,
    /// Probabilities of insert, delete and displace proposals.
    pub move_mix: [f64; 3],
    /// Displacement step as a fraction of `|I|`.
    pub step_fraction: f64,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            burn_in: 10_000,
            thinning: 10,
            move_mix: [1.0 / 3.0; 3],
            step_fraction: 0.05,
        }
    }
}

impl ChainSettings {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.move_mix.iter().sum();
        if self.move_mix.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("move mix {:?} must be a probability vector", self.move_mix)));
        }
        if self.move_mix[0] != self.move_mix[1] {
            return Err(Error::Domain("insert and delete proposals need equal probability".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Domain("thinning must be at least 1".into()));
        }
        if !(self.step_fraction.is_finite() && self.step_fraction > 0.0) {
            return Err(Error::Domain("displacement step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    Insert { x: f64, sign: i8 },
    Delete { k: usize },
    Displace { k: usize, x: f64 },
}

impl Move {
    fn kind(&self) -> usize {
        match self {
            Move::Insert { .. } => 0,
            Move::Delete { .. } => 1,
            Move::Displace { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MoveCounters {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRecord<'a> {
    pub step: u64,
    pub n: usize,
    pub positions: &'a [f64],
    pub signs: &'a [i8],
}

/// Folds `x` back into the interval by reflection at both ends.
pub fn reflect(x: f64, interval: &Interval) -> f64 {
    let len = interval.length();
    let period = 2.0 * len;
    let mut y = (x - interval.lo).rem_euclid(period);
    if y > len {
        y = period - y;
    }
    interval.lo + y
}

/// Density of a reflected Gaussian step from `x` to `y`; symmetric in
/// `(x, y)`.
pub fn reflected_step_density(x: f64, y: f64, sigma: f64, interval: &Interval) -> f64 {
    let len = interval.length();
    let images = (6.0 * sigma / len).ceil() as i64 + 1;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut total = 0.0;
    for m in -images..=images {
        let shift = 2.0 * m as f64 * len;
        for image in [x + shift, 2.0 * interval.lo - x + shift] {
            let z = (y - image) / sigma;
            total += norm * (-0.5 * z * z).exp();
        }
    }
    total
}

/// Grand-canonical Metropolis chain on `Ξ_I` with target
/// `α_gas^n Π g(x_i) e^{−β² Σ_{i<j} λ_iλ_j K_t(x_i,x_j)}` on unordered
/// configurations.
#[derive(Debug, Clone)]
pub struct GasChain {
    family: KernelFamily,
    table: KernelTable,
    alpha_gas: f64,
    beta: f64,
    t: f64,
    settings: ChainSettings,
    state: ChargeConfig,
    rng: ChaCha8Rng,
    step: u64,
    counters: MoveCounters,
}

impl GasChain {
    pub fn new(
        family: &KernelFamily,
        alpha_gas: f64,
        beta: f64,
        t: f64,
        settings: ChainSettings,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        Activity::Gas(alpha_gas).validate()?;
        if alpha_gas <= 0.0 {
            return Err(Error::Domain("the gas chain needs a positive activity".into()));
        }
        if !(beta.is_finite() && beta >= 0.0 && t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("invalid (beta, t) = ({beta}, {t})")));
        }
        settings.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(GasChain {
            family: family.clone(),
            table: KernelTable::new(family, t),
            alpha_gas,
            beta,
            t,
            settings,
            state: ChargeConfig::empty(),
            rng,
            step: 0,
            counters: MoveCounters::default(),
        })
    }

    pub fn state(&self) -> &ChargeConfig {
        &self.state
    }

    pub fn set_state(&mut self, config: ChargeConfig) -> Result<()> {
        config.check_in(&self.family.interval())?;
        self.state = config;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn counters(&self) -> MoveCounters {
        self.counters
    }

    pub fn settings(&self) -> &ChainSettings {
        &self.settings
    }

    pub fn cutoff(&self) -> f64 {
        self.t
    }

    fn sigma(&self) -> f64 {
        self.settings.step_fraction * self.family.interval().length()
    }

    fn kernel(&self, r: f64) -> f64 {
        self.table.eval(r)
    }

    /// `Σ_{i<j} λ_iλ_j K_t(x_i, x_j)`.
    pub fn energy(&self, config: &ChargeConfig) -> f64 {
        config.energy(|r| self.kernel(r))
    }

    /// Interaction of a charge at `x` with the charges of `config` except `skip`.
    fn field_at(&self, config: &ChargeConfig, x: f64, skip: Option<usize>) -> f64 {
        config
            .positions()
            .iter()
            .zip(config.signs())
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, (&y, &s))| s as f64 * self.kernel((x - y).abs()))
            .sum()
    }

    /// Unnormalized log target of `config`.
    pub fn log_target(&self, config: &ChargeConfig) -> f64 {
        let n = config.len() as f64;
        let log_g: f64 = config.positions().iter().map(|&x| self.family.density_at(x).ln()).sum();
        n * self.alpha_gas.ln() + log_g - self.beta * self.beta * self.energy(config)
    }

    /// Proposal density of `mv` from `from`.
    pub fn proposal_density(&self, from: &ChargeConfig, mv: &Move) -> f64 {
        let mix = self.settings.move_mix;
        let n = from.len() as f64;
        match *mv {
            Move::Insert { x, .. } => mix[0] * 0.5 * self.family.density_at(x) / self.family.total_mass(),
            Move::Delete { .. } => mix[1] / n,
            Move::Displace { k, x } => {
                mix[2] / n * reflected_step_density(from.positions()[k], x, self.sigma(), &self.family.interval())
            }
        }
    }

    /// `ΔE` of `mv` applied to `from`.
    pub fn energy_change(&self, from: &ChargeConfig, mv: &Move) -> f64 {
        match *mv {
            Move::Insert { x, sign } => sign as f64 * self.field_at(from, x, None),
            Move::Delete { k } => {
                -(from.signs()[k] as f64) * self.field_at(from, from.positions()[k], Some(k))
            }
            Move::Displace { k, x } => {
                let s = from.signs()[k] as f64;
                s * (self.field_at(from, x, Some(k)) - self.field_at(from, from.positions()[k], Some(k)))
            }
        }
    }

    /// Metropolis-Hastings acceptance probability of `mv` from `from`.
    pub fn acceptance(&self, from: &ChargeConfig, mv: &Move) -> Result<f64> {
        let beta2 = self.beta * self.beta;
        let de = self.energy_change(from, mv);
        if !de.is_finite() {
            return Err(Error::Numerical(format!("non-finite energy change {de} at step {}", self.step)));
        }
        let mass = self.family.total_mass();
        let n = from.len() as f64;
        let log_ratio = match *mv {
            Move::Insert { .. } => (2.0 * self.alpha_gas * mass / (n + 1.0)).ln() - beta2 * de,
            Move::Delete { .. } => (n / (2.0 * self.alpha_gas * mass)).ln() - beta2 * de,
            Move::Displace { k, x } => {
                let g_new = self.family.density_at(x);
                let g_old = self.family.density_at(from.positions()[k]);
                (g_new / g_old).ln() - beta2 * de
            }
        };
        Ok(log_ratio.min(0.0).exp())
    }

    pub fn apply(config: &ChargeConfig, mv: &Move) -> ChargeConfig {
        let mut next = config.clone();
        match *mv {
            Move::Insert { x, sign } => next.push(x, sign),
            Move::Delete { k } => {
                next.swap_remove(k);
            }
            Move::Displace { k, x } => next.set_position(k, x),
        }
        next
    }

    /// Reverse of `mv` once applied to `from`.
    pub fn reverse(from: &ChargeConfig, mv: &Move) -> Move {
        match *mv {
            Move::Insert { .. } => Move::Delete { k: from.len() },
            Move::Delete { k } => Move::Insert {
                x: from.positions()[k],
                sign: from.signs()[k],
            },
            Move::Displace { k, .. } => Move::Displace {
                k,
                x: from.positions()[k],
            },
        }
    }

    fn draw_position(&mut self) -> f64 {
        let iv = self.family.interval();
        if self.family.is_uniform() {
            return iv.lo + iv.length() * self.rng.gen::<f64>();
        }
        let gmax = self.family.density_max();
        loop {
            let x = iv.lo + iv.length() * self.rng.gen::<f64>();
            if self.rng.gen::<f64>() * gmax < self.family.density_at(x) {
                return x;
            }
        }
    }

    fn propose(&mut self) -> Option<Move> {
        let u: f64 = self.rng.gen();
        let mix = self.settings.move_mix;
        let n = self.state.len();
        if u < mix[0] {
            let x = self.draw_position();
            let sign = if self.rng.gen::<bool>() { 1 } else { -1 };
            Some(Move::Insert { x, sign })
        } else if u < mix[0] + mix[1] {
            (n > 0).then(|| Move::Delete { k: self.rng.gen_range(0..n) })
        } else {
            if n == 0 {
                return None;
            }
            let k = self.rng.gen_range(0..n);
            let z: f64 = self.rng.sample(StandardNormal);
            let x = reflect(self.state.positions()[k] + self.sigma() * z, &self.family.interval());
            Some(Move::Displace { k, x })
        }
    }

    /// One Metropolis step.
    pub fn step(&mut self) -> Result<()> {
        self.step += 1;
        let Some(mv) = self.propose() else {
            return Ok(());
        };
        let kind = mv.kind();
        self.counters.proposed[kind] += 1;
        let a = self.acceptance(&self.state, &mv)?;
        if self.rng.gen::<f64>() < a {
            self.counters.accepted[kind] += 1;
            match mv {
                Move::Insert { x, sign } => self.state.push(x, sign),
                Move::Delete { k } => {
                    self.state.swap_remove(k);
                }
                Move::Displace { k, x } => self.state.set_position(k, x),
            }
        }
        Ok(())
    }

    pub fn burn_in(&mut self) -> Result<()> {
        for _ in 0..self.settings.burn_in {
            self.step()?;
        }
        Ok(())
    }

    /// Burns in, then calls `observe` on every `thinning`-th state.
    pub fn run<F>(&mut self, samples: usize, mut observe: F) -> Result<()>
    where
        F: FnMut(u64, &ChargeConfig) -> Result<()>,
    {
        self.burn_in()?;
        for _ in 0..samples {
            for _ in 0..self.settings.thinning {
                self.step()?;
            }
            observe(self.step, &self.state)?;
        }
        Ok(())
    }

    /// Samples after burn-in.
    pub fn collect(&mut self, samples: usize) -> Result<Vec<ChargeConfig>> {
        let mut out = Vec::with_capacity(samples);
        self.run(samples, |_, c| {
            out.push(c.clone());
            Ok(())
        })?;
        Ok(out)
    }
}

/// Writes one NDJSON record `{step, n, positions, signs}`.
pub fn write_record<W: Write>(out: &mut W, step: u64, config: &ChargeConfig) -> Result<()> {
    let rec = ChainRecord {
        step,
        n: config.len(),
        positions: config.positions(),
        signs: config.signs(),
    };
    serde_json::to_writer(&mut *out, &rec).map_err(|e| Error::Numerical(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| Error::Numerical(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub samples: usize,
    pub mean_n: f64,
    pub mean_n_stderr: f64,
    /// Integrated autocorrelation time of `n` in units of retained samples.
    pub tau_n: f64,
    pub acceptance: [f64; 3],
}

/// Particle-count statistics with an autocorrelation-corrected error.
pub fn summarize(counts: &[f64], counters: &MoveCounters) -> ChainSummary {
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / m;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let tau = integrated_autocorrelation(counts);
    let mut acceptance = [0.0; 3];
    for k in 0..3 {
        if counters.proposed[k] > 0 {
            acceptance[k] = counters.accepted[k] as f64 / counters.proposed[k] as f64;
        }
    }
    ChainSummary {
        samples: counts.len(),
        mean_n: mean,
        mean_n_stderr: (tau * var / m).sqrt(),
        tau_n: tau,
        acceptance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Density, SeedProfile};

    fn balance_residual(chain: &GasChain, x: &ChargeConfig, mv: &Move) -> f64 {
        let y = GasChain::apply(x, mv);
        let back = GasChain::reverse(x, mv);
        let fwd = chain.log_target(x).exp() * chain.proposal_density(x, mv) * chain.acceptance(x, mv).unwrap();
        let bwd = chain.log_target(&y).exp() * chain.proposal_density(&y, &back) * chain.acceptance(&y, &back).unwrap();
        (fwd - bwd).abs() / fwd.abs().max(bwd.abs())
    }

    #[test]
    fn detailed_balance_pairwise() {
        let families = [
            KernelFamily::default(),
            KernelFamily::new(SeedProfile::default(), Interval::unit(), Density::Table(vec![0.5, 1.5, 1.0]), 20)
                .unwrap(),
        ];
        for f in &families {
            let mut chain = GasChain::new(f, 0.7, 1.1, 3.0, ChainSettings::default(), 11, 0).unwrap();
            chain.settings.burn_in = 200;
            let states = chain.collect(60).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut checked = 0;
            for x in states.iter().filter(|s| !s.is_empty()) {
                let n = x.len();
                let k = rng.gen_range(0..n);
                let moves = [
                    Move::Insert { x: rng.gen(), sign: if rng.gen() { 1 } else { -1 } },
                    Move::Delete { k },
                    Move::Displace { k, x: reflect(x.positions()[k] + 0.04 * rng.gen::<f64>(), &f.interval()) },
                ];
                for mv in &moves {
                    let r = balance_residual(&chain, x, mv);
                    assert!(r < 1e-12, "{mv:?}: {r:e}");
                    checked += 1;
                }
            }
            assert!(checked > 30);
        }
    }

    #[test]
    fn reflection_stays_inside() {
        let iv = Interval::new(-1.0, 2.0).unwrap();
        for x in [-1.5, 2.25, 7.9, -4.2, 0.3] {
            let y = reflect(x, &iv);
            assert!(iv.contains(y), "{x} -> {y}");
        }
        assert!((reflect(2.25, &iv) - 1.75).abs() < 1e-15);
        let a = reflected_step_density(0.01, 0.03, 0.05, &Interval::unit());
        let b = reflected_step_density(0.03, 0.01, 0.05, &Interval::unit());
        assert!((a - b).abs() < 1e-15 * a);
    }

    #[test]
    fn free_gas_count_is_poisson() {
        let f = KernelFamily::default();
        let mut chain = GasChain::new(&f, 0.8, 0.0, 2.0, ChainSettings::default(), 2, 0).unwrap();
        let counts: Vec<f64> = chain.collect(20_000).unwrap().iter().map(|c| c.len() as f64).collect();
        let s = summarize(&counts, &chain.counters());
        assert!((s.mean_n - 1.6).abs() < 4.0 * s.mean_n_stderr, "{s:?}");
        let c = chain.counters();
        assert!((0..3).all(|k| c.accepted[k] <= c.proposed[k]));
    }

    #[test]
    fn records_are_ndjson() {
        let mut buf = Vec::new();
        let c = ChargeConfig::new(vec![0.25, 0.5], vec![1, -1]).unwrap();
        write_record(&mut buf, 7, &c).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "{\"step\":7,\"n\":2,\"positions\":[0.25,0.5],\"signs\":[1,-1]}\n");
    }
}
