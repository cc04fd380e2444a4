//! One pipeline per command. Each returns its artifacts without touching
//! the filesystem.

use bsg_core::cumulants::{
    bracket12_bound_scan, cumulant_curve, renormalized_flow, sample_report, MonteCarloConfig, MIN_MC_REPLICAS,
};
use bsg_core::field::{
    martingale_value, validate_kernel_assumptions, AssumptionScan, FieldSampler, Grid, KernelFamily,
};
use bsg_core::loggas::{
    charge_fourier, correlation_ratio_sampled, neutral_fractions, sg_ratio_sampled, summarize, write_record,
    GasChain,
};
use bsg_core::onsager::{onsager_audit, ChargeConfig, ConfigSampler};
use bsg_core::report::{format_float, Table};
use bsg_core::Error;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{Artifact, Body};
use crate::{Command, Context, Failure};

pub fn execute(command: Command, config: &ExperimentConfig, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let family = config.family()?;
    let mut artifacts = match command {
        Command::ValidateKernel => validate_kernel(config, &family)?,
        Command::Cumulants => cumulants(config, &family, ctx)?,
        Command::RenormFlow => renorm_flow(config, &family, ctx)?,
        Command::OnsagerAudit => audit(config, &family, ctx)?,
        Command::Gibbs => gibbs(config, &family, ctx)?,
        Command::FourierDuality => fourier_duality(config, &family, ctx)?,
        Command::Correlations => correlations(config, &family, ctx)?,
        Command::BracketScan => bracket_scan(config, &family)?,
    };
    for a in &mut artifacts {
        if let Body::Table { table, .. } = &mut a.body {
            stamp(table, command, ctx);
        }
    }
    Ok(artifacts)
}

/// Puts the provenance keys ahead of the table's own metadata.
fn stamp(table: &mut Table, command: Command, ctx: &Context) {
    let own = std::mem::take(&mut table.metadata);
    table.set_meta("command", command.name());
    table.set_meta("version", env!("CARGO_PKG_VERSION"));
    table.set_meta("config_hash", &ctx.config_hash);
    table.set_meta("master_seed", ctx.master_seed);
    for (k, v) in own {
        table.set_meta(&k, v);
    }
}

fn table_artifact(config: &ExperimentConfig, stem: &str, table: Table, summary: Vec<String>) -> Artifact {
    Artifact {
        stem: stem.into(),
        body: Body::Table {
            table,
            formats: config.formats(),
        },
        summary,
    }
}

fn slab_sampler(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<FieldSampler, Failure> {
    let grid = Grid::midpoint(family, config.numerics.grid_points)?;
    let mut slabs = vec![0.0];
    slabs.extend_from_slice(&config.numerics.t_grid);
    Ok(FieldSampler::new(family, &grid, &slabs, ctx.master_seed)?)
}

fn flag(b: bool) -> i64 {
    b as i64
}

fn validate_kernel(config: &ExperimentConfig, family: &KernelFamily) -> Result<Vec<Artifact>, Failure> {
    let report = validate_kernel_assumptions(family, &AssumptionScan::default());
    let mut table = Table::new(&["check", "constant", "refined", "half_range", "passed"]);
    let mut summary = Vec::new();
    for c in &report.checks {
        table.push(vec![
            c.name.into(),
            c.constant.into(),
            c.refined.into(),
            c.half_range.into(),
            flag(c.passed).into(),
        ]);
        summary.push(format!(
            "{}: constant {:.6e} (refined {:.6e}) {}",
            c.name,
            c.constant,
            c.refined,
            if c.passed { "ok" } else { "FAILED" }
        ));
    }
    table.set_meta("seed", report.seed);
    table.set_meta("passed", report.passed());
    Ok(vec![table_artifact(config, "kernel", table, summary)])
}

fn cumulants(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let n = &config.numerics;
    let beta = config.model.beta();
    if n.monte_carlo && n.replicas < MIN_MC_REPLICAS {
        return Err(Failure::Config(format!(
            "numerics.replicas: Monte Carlo cumulants need at least {MIN_MC_REPLICAS}"
        )));
    }
    let q = config.quadrature(family)?;
    let mut report = cumulant_curve(family, beta, &n.t_grid, n.order_max, &q)?;
    if n.monte_carlo {
        let sampler = slab_sampler(config, family, ctx)?;
        let w = sampler.grid().weights();
        let values = sampler.map_replicas(0, n.replicas, |view| {
            n.t_grid
                .iter()
                .enumerate()
                .map(|(k, &t)| martingale_value(view.field(k + 1), w, beta, t, None, None).re)
                .collect::<Vec<f64>>()
        });
        for (k, &t) in n.t_grid.iter().enumerate() {
            let samples: Vec<f64> = values.iter().map(|v| v[k]).collect();
            report.entries.extend(sample_report(&samples, beta, t, n.order_max)?.entries);
        }
    }
    let mut summary: Vec<String> = n
        .t_grid
        .iter()
        .map(|&t| {
            let values: Vec<String> = report
                .entries
                .iter()
                .filter(|e| e.t == t)
                .map(|e| format!("C{}[{}]={:.6e}", e.order, e.method.as_str(), e.value))
                .collect();
            format!("t={t}: {}", values.join(" "))
        })
        .collect();
    for g in &report.growth {
        summary.push(format!("C{} growth slope {:.4} over t in [{}, {}]", g.order, g.slope, g.t_lo, g.t_hi));
    }
    let mut table = report.to_table();
    table.set_meta("quadrature", q.label());
    Ok(vec![table_artifact(config, "cumulants", table, summary)])
}

fn renorm_flow(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let n = &config.numerics;
    let alphas: Vec<f64> = config.model.activities().iter().map(|a| a.library()).collect();
    let q = config.quadrature(family)?;
    let mc = MonteCarloConfig {
        grid_points: n.grid_points,
        replicas: n.replicas,
        master_seed: ctx.master_seed,
    };
    let points = renormalized_flow(family, &alphas, config.model.beta(), &n.t_grid, &q, &mc)?;
    let mut table = Table::new(&["t", "alpha_library", "value", "stderr", "counterterm", "counterterms"]);
    let mut summary = Vec::new();
    for p in &points {
        table.push(vec![
            p.t.into(),
            p.alpha.into(),
            p.value.into(),
            p.stderr.into(),
            p.counterterm.into(),
            p.counterterms.into(),
        ]);
        summary.push(format!(
            "t={} alpha={}: Zbar={:.6} +- {:.2e} ({} counterterms)",
            p.t, p.alpha, p.value, p.stderr, p.counterterms
        ));
    }
    table.set_meta("beta", config.model.beta());
    table.set_meta("replicas", n.replicas);
    table.set_meta("grid_points", n.grid_points);
    Ok(vec![table_artifact(config, "renorm", table, summary)])
}

fn sampler_name(s: &ConfigSampler) -> String {
    match s {
        ConfigSampler::Uniform { class } => format!("uniform_{class:?}").to_lowercase(),
        ConfigSampler::Dipole { .. } => "dipole".into(),
    }
}

fn audit(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let a = &config.audit;
    let mut table = Table::new(&[
        "u",
        "inequality",
        "min_slack",
        "mean_slack",
        "C_hat",
        "samples",
        "charges",
        "sampler",
    ]);
    let mut summary = Vec::new();
    for &ineq in &a.inequalities {
        let sampler = a.sampler(ineq);
        for &i in &a.particle_counts {
            let report = onsager_audit(family, &sampler, ineq, i, a.s, &a.u_list, a.samples, ctx.master_seed)?;
            for r in &report.rows {
                table.push(vec![
                    r.u.into(),
                    ineq.name().into(),
                    r.min_slack.into(),
                    r.mean_slack.into(),
                    r.c_hat.into(),
                    r.samples.into(),
                    i.into(),
                    sampler_name(&sampler).into(),
                ]);
            }
            let worst = report
                .rows
                .iter()
                .min_by(|x, y| x.min_slack.total_cmp(&y.min_slack))
                .expect("audit has rows");
            summary.push(format!(
                "{} i={i} ({}): min slack {:.6e} at u={}, C_hat={:.6e}",
                ineq.name(),
                sampler_name(&sampler),
                worst.min_slack,
                worst.u,
                report.c_hat()
            ));
        }
    }
    table.set_meta("s", a.s);
    Ok(vec![table_artifact(config, "audit", table, summary)])
}

/// Thinned chain states at every cutoff of `t_grid`; chain `k` uses stream `k`.
fn chain_runs(
    config: &ExperimentConfig,
    family: &KernelFamily,
    ctx: &Context,
) -> Result<Vec<(GasChain, Vec<(u64, ChargeConfig)>)>, Failure> {
    let n = &config.numerics;
    let alpha_gas = config.model.activity().gas();
    let beta = config.model.beta();
    n.t_grid
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut chain = GasChain::new(family, alpha_gas, beta, t, n.mcmc.settings(), ctx.master_seed, k as u64)?;
            let mut states = Vec::with_capacity(n.mcmc.samples);
            chain.run(n.mcmc.samples, |step, c| {
                states.push((step, c.clone()));
                Ok(())
            })?;
            Ok((chain, states))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(Failure::from)
}

fn gibbs(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let runs = chain_runs(config, family, ctx)?;
    let mut table = Table::new(&[
        "t",
        "samples",
        "mean_n",
        "mean_n_stderr",
        "tau_n",
        "accept_insert",
        "accept_delete",
        "accept_displace",
        "mean_abs_charge",
        "neutral_configurations",
        "neutral_particles",
    ]);
    let mut summary = Vec::new();
    let mut artifacts = Vec::new();
    for (k, (chain, states)) in runs.iter().enumerate() {
        let t = chain.cutoff();
        let counts: Vec<f64> = states.iter().map(|(_, c)| c.len() as f64).collect();
        let s = summarize(&counts, &chain.counters());
        let configs: Vec<ChargeConfig> = states.iter().map(|(_, c)| c.clone()).collect();
        let nf = neutral_fractions(&configs, t);
        let abs_charge = configs.iter().map(|c| c.charge().abs() as f64).sum::<f64>() / configs.len() as f64;
        table.push(vec![
            t.into(),
            s.samples.into(),
            s.mean_n.into(),
            s.mean_n_stderr.into(),
            s.tau_n.into(),
            s.acceptance[0].into(),
            s.acceptance[1].into(),
            s.acceptance[2].into(),
            abs_charge.into(),
            nf.configurations.into(),
            nf.particles.into(),
        ]);
        summary.push(format!(
            "t={t}: mean n {:.5} +- {:.2e} (tau {:.2}), acceptance {:.3}/{:.3}/{:.3}",
            s.mean_n, s.mean_n_stderr, s.tau_n, s.acceptance[0], s.acceptance[1], s.acceptance[2]
        ));
        if config.output.trajectory {
            let mut text = Vec::new();
            for (step, c) in states {
                write_record(&mut text, *step, c)?;
            }
            artifacts.push(Artifact {
                stem: format!("trajectory_{k}"),
                body: Body::Text {
                    extension: "ndjson".into(),
                    text: String::from_utf8(text).expect("json is utf-8"),
                },
                summary: Vec::new(),
            });
        }
    }
    table.set_meta("alpha_gas", config.model.activity().gas());
    table.set_meta("beta", config.model.beta());
    let mut out = vec![table_artifact(config, "gibbs", table, summary)];
    out.extend(artifacts);
    Ok(out)
}

fn fourier_duality(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let n = &config.numerics;
    let theta = config.theta()?;
    let beta = config.model.beta();
    let runs = chain_runs(config, family, ctx)?;
    let sampler = slab_sampler(config, family, ctx)?;
    let slabs: Vec<usize> = (1..=n.t_grid.len()).collect();
    let field = sg_ratio_sampled(&sampler, n.replicas, config.model.activity().library(), beta, &slabs, &theta)?;
    let mut table = Table::new(&[
        "t",
        "gas_re",
        "gas_im",
        "gas_stderr",
        "field_re",
        "field_im",
        "field_stderr",
        "z_score",
    ]);
    let mut summary = Vec::new();
    for ((chain, states), f) in runs.iter().zip(&field) {
        let configs: Vec<ChargeConfig> = states.iter().map(|(_, c)| c.clone()).collect();
        let g = charge_fourier(&configs, &theta)?;
        let z = g.z_score(f);
        table.push(vec![
            chain.cutoff().into(),
            g.value.re.into(),
            g.value.im.into(),
            g.stderr.into(),
            f.value.re.into(),
            f.value.im.into(),
            f.stderr.into(),
            z.into(),
        ]);
        summary.push(format!(
            "t={}: gas {:.6}{:+.6}i, field {:.6}{:+.6}i, z={z:.2}",
            chain.cutoff(),
            g.value.re,
            g.value.im,
            f.value.re,
            f.value.im
        ));
    }
    table.set_meta("theta_halfnorm", format_float(theta.holder_halfnorm()));
    table.set_meta("alpha_gas", config.model.activity().gas());
    table.set_meta("beta", beta);
    Ok(vec![table_artifact(config, "duality", table, summary)])
}

fn correlations(config: &ExperimentConfig, family: &KernelFamily, ctx: &Context) -> Result<Vec<Artifact>, Failure> {
    let n = &config.numerics;
    let ins = config.insertions()?;
    let beta = config.model.beta();
    let sampler = slab_sampler(config, family, ctx)?;
    let slabs: Vec<usize> = (1..=n.t_grid.len()).collect();
    let ratios = correlation_ratio_sampled(
        family,
        &sampler,
        n.replicas,
        config.model.activity().library(),
        beta,
        &ins,
        &slabs,
    )?;
    let mut table = Table::new(&["t", "re", "im", "stderr", "prefactor", "condition_violated"]);
    let mut summary = Vec::new();
    for r in &ratios {
        table.push(vec![
            r.t.into(),
            r.estimate.value.re.into(),
            r.estimate.value.im.into(),
            r.estimate.stderr.into(),
            r.prefactor.into(),
            flag(r.condition_violated).into(),
        ]);
        summary.push(format!(
            "t={}: ratio {:.6}{:+.6}i +- {:.2e}{}",
            r.t,
            r.estimate.value.re,
            r.estimate.value.im,
            r.estimate.stderr,
            if r.condition_violated { " (outside the proven range)" } else { "" }
        ));
    }
    table.set_meta("beta", beta);
    Ok(vec![table_artifact(config, "correlations", table, summary)])
}

fn bracket_scan(config: &ExperimentConfig, family: &KernelFamily) -> Result<Vec<Artifact>, Failure> {
    let q = config.quadrature(family)?;
    let scan = bracket12_bound_scan(family, config.model.beta(), &config.bracket.s_list, &q)?;
    let summary = vec![format!(
        "log-slope {:.4} over s in [{}, {}] (3beta^2/2 - 1 = {:.4})",
        scan.fit.slope,
        scan.s[0],
        scan.s[scan.s.len() - 1],
        1.5 * scan.beta * scan.beta - 1.0
    )];
    Ok(vec![table_artifact(config, "bracket", scan.to_table(), summary)])
}
