//! Built-in experiments, each producing plot-ready tables.

use tvws_pricing::contract::{ironing_optimal_menu, screening_coefficients, screening_menu, screening_revenue, valid_query_sequence};
use tvws_pricing::game::{best_response_dynamics, random_initial_profile};
use tvws_pricing::optimizer::grid_search_with;
use tvws_pricing::{
    distributions, CostModel, Execution, GameContext, Information, MarketConfig, PricePoint, Scenario,
    TypeProfile,
};

use crate::config::SweepParam;
use crate::experiment::{sweep_table, SweepCase, SweepPlan};
use crate::output::Table;
use crate::{CliError, Result};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2016;

/// Name and one-line description of every preset.
pub const PRESETS: [(&str, &str); 7] = [
    ("fig4_hybrid", "hybrid optimum vs. service-only and registration-only pricing at eps0 = 3"),
    ("fig5_br_vs_eps0", "optimal reservation over an eps0 sweep, reference distributions 1-3"),
    ("fig6_strategy_utility", "non-strategic vs. strategic SUs over eps0 at eps1 = 0.05 and 0.1"),
    ("fig7_information", "complete vs. incomplete information over eps0, distribution 1"),
    ("fig8_contract_items", "screening menus for 50 unregistered SUs, distributions 1-5"),
    ("fig9_suboptimal", "threshold menu revenue relative to the ironing optimum"),
    ("fig10_convergence", "best-response switch counts against the N(N+1) bound"),
];

/// Committed registration shares of the non-strategic baseline.
pub const NONSTRATEGIC_GAMMAS: [f64; 2] = [0.2, 0.5];

/// Reservation-cost sweep `0, 0.2, ..., 7`.
pub fn eps0_sweep() -> Vec<f64> {
    (0..=35).map(|i| (i as f64 * 0.2 * 1e12).round() / 1e12).collect()
}

/// Runs a preset by name.
pub fn run_preset(name: &str, seed: u64) -> Result<Vec<Table>> {
    match name {
        "fig4_hybrid" => fig4_hybrid(seed, 100),
        "fig5_br_vs_eps0" => fig5_br_vs_eps0(),
        "fig6_strategy_utility" => fig6_strategy_utility(),
        "fig7_information" => fig7_information(),
        "fig8_contract_items" => fig8_contract_items(),
        "fig9_suboptimal" => fig9_suboptimal(seed, 100),
        "fig10_convergence" => fig10_convergence(seed, &(1..=10).map(|k| k * 100).collect::<Vec<_>>(), 200),
        _ => Err(CliError::Config(format!(
            "unknown preset `{name}`; available: {}",
            PRESETS.map(|p| p.0).join(", ")
        ))),
    }
}

fn reference_cases(indices: &[usize], scenarios: &[Scenario]) -> Result<Vec<SweepCase>> {
    let mut cases = Vec::new();
    for &k in indices {
        let types = distributions::reference(k)?;
        for &scenario in scenarios {
            let gammas: &[f64] = if scenario == Scenario::NonStrategicComplete { &NONSTRATEGIC_GAMMAS } else { &[0.0] };
            for &gamma in gammas {
                cases.push(SweepCase { series: format!("distr{k}"), scenario, types: types.clone(), gamma });
            }
        }
    }
    Ok(cases)
}

fn eps0_plan(cost: CostModel) -> SweepPlan {
    SweepPlan { param: SweepParam::Eps0, values: eps0_sweep(), market: MarketConfig::default(), cost }
}

fn fmt_f(x: f64) -> String {
    x.to_string()
}

/// Best hybrid pricing against the best fee at `B_R = 0` and `B_R = B`,
/// for reference distributions 1-3 and `trials` random distributions, with
/// a final row of means.
pub fn fig4_hybrid(seed: u64, trials: usize) -> Result<Vec<Table>> {
    let cfg = MarketConfig::default();
    let cost = CostModel { reservation_coeff: 3.0, ..CostModel::default() };
    let mut populations: Vec<(String, TypeProfile)> =
        (1..=3).map(|k| Ok((format!("distr{k}"), distributions::reference(k)?))).collect::<Result<_>>()?;
    for (i, s) in distributions::trial_seeds(seed, trials).into_iter().enumerate() {
        populations.push((format!("random{}", i + 1), distributions::random(cfg.n_sus, 10, s)?));
    }
    let rows = Execution::default().try_map(&populations, |(_, types)| -> Result<[f64; 7]> {
        let grid = grid_search_with(Scenario::StrategicComplete, types, &cfg, &cost, Execution::Sequential)?;
        let best = grid.best();
        let service = grid.best_with_reservation(0.0).expect("grid includes B_R = 0");
        let registration = grid.best_with_reservation(cfg.total_bandwidth).expect("grid includes B_R = B");
        Ok([
            best.price_point.reserved_bandwidth,
            best.price_point.registration_fee,
            best.do_utility,
            service.price_point.registration_fee,
            service.do_utility,
            registration.price_point.registration_fee,
            registration.do_utility,
        ])
    })?;
    let mut table = Table::new(
        "fig4_hybrid",
        &[
            "series",
            "hybrid_br",
            "hybrid_r",
            "hybrid_do_utility",
            "service_only_r",
            "service_only_do_utility",
            "registration_only_r",
            "registration_only_do_utility",
        ],
    );
    for ((series, _), row) in populations.iter().zip(&rows) {
        let mut out = vec![series.clone()];
        out.extend(row.iter().map(|&x| fmt_f(x)));
        table.push(out);
    }
    if trials > 0 {
        let random = &rows[3..];
        let mean = |j: usize| random.iter().map(|r| r[j]).sum::<f64>() / random.len() as f64;
        let mut out = vec!["random_mean".to_string()];
        out.extend((0..7).map(|j| fmt_f(mean(j))));
        table.push(out);
    }
    Ok(vec![table])
}

/// Optimal reservation over the reservation-cost sweep for every scenario.
pub fn fig5_br_vs_eps0() -> Result<Vec<Table>> {
    let cases = reference_cases(&[1, 2, 3], &Scenario::ALL)?;
    Ok(vec![sweep_table("fig5_br_vs_eps0", &cases, &eps0_plan(CostModel::default()), Execution::default())?])
}

/// Non-strategic baselines against strategic SUs, one table per query cost.
pub fn fig6_strategy_utility() -> Result<Vec<Table>> {
    let cases = reference_cases(&[1], &[Scenario::NonStrategicComplete, Scenario::StrategicComplete])?;
    [0.05, 0.1]
        .iter()
        .map(|&eps1| {
            let plan = eps0_plan(CostModel { query_marginal_cost: eps1, ..CostModel::default() });
            sweep_table(&format!("fig6_strategy_utility_eps1_{eps1}"), &cases, &plan, Execution::default())
        })
        .collect()
}

/// Complete against incomplete information on distribution 1.
pub fn fig7_information() -> Result<Vec<Table>> {
    let cases = reference_cases(&[1], &[Scenario::StrategicComplete, Scenario::StrategicIncomplete])?;
    Ok(vec![sweep_table("fig7_information", &cases, &eps0_plan(CostModel::default()), Execution::default())?])
}

/// Posted screening menu per type at `B_R = 30`, `r = 200`, `ε0 = 3` with
/// 50 unregistered SUs, next to the ironing optimum.
pub fn fig8_contract_items() -> Result<Vec<Table>> {
    let cfg = MarketConfig::default();
    let cost = CostModel { reservation_coeff: 3.0, ..CostModel::default() };
    let pp = PricePoint::new(30.0, 200.0);
    let mu1 = 50;
    let mut table = Table::new(
        "fig8_contract_items",
        &["series", "type", "theta", "count", "q", "p", "ironing_q", "ironing_p"],
    );
    for k in 1..=5 {
        let types = distributions::reference(k)?;
        let (support, index) = types.support();
        let (_, menu) = screening_menu(&support, &pp, mu1, &cfg, &cost)?;
        let (ironed, _) = ironing_optimal_menu(&support, &pp, mu1, &cfg, &cost)?;
        for (j, &t) in index.iter().enumerate() {
            let (plan, best) = (menu.plans()[j], ironed.plans()[j]);
            table.push(vec![
                format!("distr{k}"),
                (t + 1).to_string(),
                fmt_f(types.thetas[t]),
                types.counts[t].to_string(),
                plan.queries.to_string(),
                fmt_f(plan.price),
                best.queries.to_string(),
                fmt_f(best.price),
            ]);
        }
    }
    Ok(vec![table])
}

/// Revenue ratios of the threshold menu to the ironing optimum at `B_R = 0`
/// with every SU buying, for random distributions over `T` types.
pub fn fig9_suboptimal(seed: u64, trials: usize) -> Result<Vec<Table>> {
    let cfg = MarketConfig::default();
    let cost = CostModel::default();
    let pp = PricePoint::new(0.0, 0.0);
    let type_counts: Vec<usize> = (1..=6).map(|k| 5 * k).collect();
    let seeds = distributions::trial_seeds(seed, type_counts.len());
    let rows = Execution::default().try_map(&type_counts.iter().zip(seeds).collect::<Vec<_>>(), |&(&t, s)| {
        let mut ratios = Vec::with_capacity(trials);
        let (mut threshold_sum, mut ironing_sum) = (0.0, 0.0);
        for trial_seed in distributions::trial_seeds(s, trials) {
            let types = distributions::random(cfg.n_sus, t, trial_seed)?;
            let (support, _) = types.support();
            let coeffs = screening_coefficients(&support, &pp, cfg.n_sus, &cfg, &cost)?;
            let threshold = screening_revenue(&coeffs, &valid_query_sequence(&coeffs, &cfg));
            let (_, ironing) = ironing_optimal_menu(&support, &pp, cfg.n_sus, &cfg, &cost)?;
            ratios.push(if ironing > 0.0 { threshold / ironing } else { 1.0 });
            threshold_sum += threshold;
            ironing_sum += ironing;
        }
        let n = ratios.len().max(1) as f64;
        Ok::<_, CliError>(vec![
            t.to_string(),
            ratios.len().to_string(),
            fmt_f(ratios.iter().sum::<f64>() / n),
            fmt_f(ratios.iter().copied().fold(f64::INFINITY, f64::min)),
            fmt_f(if ironing_sum > 0.0 { threshold_sum / ironing_sum } else { 1.0 }),
            fmt_f(threshold_sum / n),
            fmt_f(ironing_sum / n),
        ])
    })?;
    let mut table = Table::new(
        "fig9_suboptimal",
        &[
            "types",
            "trials",
            "mean_ratio",
            "min_ratio",
            "ratio_of_means",
            "mean_threshold_revenue",
            "mean_ironing_revenue",
        ],
    );
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![table])
}

/// Switch counts of best-response dynamics from random starting profiles
/// at `B_R = 30`, `r = 200`, with types drawn uniformly from ten levels.
pub fn fig10_convergence(seed: u64, populations: &[u32], trials: usize) -> Result<Vec<Table>> {
    let pp = PricePoint::new(30.0, 200.0);
    let cost = CostModel::default();
    let seeds = distributions::trial_seeds(seed, populations.len());
    let jobs: Vec<(u32, u64)> = populations.iter().copied().zip(seeds).collect();
    let rows = Execution::default().try_map(&jobs, |&(n, s)| {
        let cfg = MarketConfig { n_sus: n, ..MarketConfig::default() };
        let mut steps = Vec::with_capacity(trials);
        for trial_seed in distributions::trial_seeds(s, trials) {
            let [type_seed, start_seed] = <[u64; 2]>::try_from(distributions::trial_seeds(trial_seed, 2))
                .expect("two seeds");
            let types = distributions::random(n, 10, type_seed)?;
            let start = random_initial_profile(&types, start_seed);
            let ctx = GameContext::new(Information::Incomplete, pp, types, cfg, cost)?;
            steps.push(best_response_dynamics(&ctx, &start)?.converged_in_steps);
        }
        let bound = n as u64 * (n as u64 + 1);
        let mean = steps.iter().sum::<u64>() as f64 / steps.len().max(1) as f64;
        let max = steps.iter().copied().max().unwrap_or(0);
        Ok::<_, CliError>(vec![
            n.to_string(),
            steps.len().to_string(),
            fmt_f(mean),
            max.to_string(),
            bound.to_string(),
            (max <= bound).to_string(),
        ])
    })?;
    let mut table = Table::new(
        "fig10_convergence",
        &["n", "trials", "mean_steps", "max_steps", "bound", "within_bound"],
    );
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![table])
}
