//! Parameter sweeps over grid searches.

use tvws_pricing::optimizer::grid_search_with;
use tvws_pricing::{
    distributions, CostModel, Execution, GridResult, MarketConfig, Plan, PointEvaluation, Scenario,
    TypeProfile,
};

use crate::config::{ExperimentSpec, SweepParam};
use crate::output::Table;
use crate::Result;

/// Header of every sweep table.
pub const SWEEP_HEADER: [&str; 15] = [
    "series",
    "scenario",
    "sweep_param",
    "sweep_value",
    "br",
    "r",
    "do_utility",
    "mean_su_utility",
    "mu0",
    "mu1",
    "eps0",
    "alpha",
    "eps1",
    "gamma",
    "uptake",
];

/// One line of a sweep: a labelled population priced under one scenario.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub series: String,
    pub scenario: Scenario,
    pub types: TypeProfile,
    /// Committed registration share; only non-strategic pricing reads it.
    pub gamma: f64,
}

/// A sweep shared by several cases.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub market: MarketConfig,
    pub cost: CostModel,
}

/// Optimum of one case at one sweep value.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub cost: CostModel,
    pub gamma: f64,
    pub best: PointEvaluation,
}

fn grid(case: &SweepCase, gamma: f64, plan: &SweepPlan, cost: &CostModel, exec: Execution) -> Result<GridResult> {
    let types = if case.scenario == Scenario::NonStrategicComplete {
        distributions::with_commitment(case.types.clone(), gamma)?
    } else {
        case.types.clone()
    };
    Ok(grid_search_with(case.scenario, &types, &plan.market, cost, exec)?)
}

/// Runs the sweep for one case. Reservation-cost sweeps search the grid
/// once and reprice it; other parameters search afresh per value.
pub fn sweep_case(case: &SweepCase, plan: &SweepPlan, exec: Execution) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::with_capacity(plan.values.len());
    if plan.param.reprices() {
        let base = grid(case, case.gamma, plan, &plan.cost, exec)?;
        for &value in &plan.values {
            let (cost, gamma) = plan.param.apply(value, plan.cost, case.gamma);
            let result = base.repriced(&cost)?;
            points.push(SweepPoint { value, cost, gamma, best: result.best().clone() });
        }
    } else {
        for &value in &plan.values {
            let (cost, gamma) = plan.param.apply(value, plan.cost, case.gamma);
            let result = grid(case, gamma, plan, &cost, exec)?;
            points.push(SweepPoint { value, cost, gamma, best: result.best().clone() });
        }
    }
    Ok(points)
}

/// `count:queries:price` per menu entry, `;` separated.
pub fn format_uptake(uptake: &[(u32, Plan)]) -> String {
    uptake
        .iter()
        .map(|(n, p)| format!("{n}:{}:{}", p.queries, p.price))
        .collect::<Vec<_>>()
        .join(";")
}

/// Inverse of [`format_uptake`].
pub fn parse_uptake(s: &str) -> Option<Vec<(u32, Plan)>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';')
        .map(|item| {
            let mut parts = item.split(':');
            let n = parts.next()?.parse().ok()?;
            let q = parts.next()?.parse().ok()?;
            let p = parts.next()?.parse().ok()?;
            parts.next().is_none().then_some((n, Plan::new(q, p)))
        })
        .collect()
}

fn sweep_row(case: &SweepCase, param: SweepParam, point: &SweepPoint) -> Vec<String> {
    let b = &point.best;
    vec![
        case.series.clone(),
        case.scenario.to_string(),
        param.to_string(),
        point.value.to_string(),
        b.price_point.reserved_bandwidth.to_string(),
        b.price_point.registration_fee.to_string(),
        b.do_utility.to_string(),
        b.mean_su_utility.to_string(),
        b.mu0.to_string(),
        b.mu1.to_string(),
        point.cost.reservation_coeff.to_string(),
        point.cost.reservation_exponent.to_string(),
        point.cost.query_marginal_cost.to_string(),
        if case.scenario == Scenario::NonStrategicComplete { point.gamma.to_string() } else { String::new() },
        format_uptake(&b.uptake),
    ]
}

/// Sweeps every case and collects the rows in case order. Cases run
/// through `exec`; the grid inside each case runs sequentially.
pub fn sweep_table(name: &str, cases: &[SweepCase], plan: &SweepPlan, exec: Execution) -> Result<Table> {
    let results = exec.try_map(cases, |case| sweep_case(case, plan, Execution::Sequential))?;
    let mut table = Table::new(name, &SWEEP_HEADER);
    for (case, points) in cases.iter().zip(&results) {
        for point in points {
            table.push(sweep_row(case, plan.param, point));
        }
    }
    Ok(table)
}

/// Runs a configured experiment and returns its table.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let cases: Vec<SweepCase> = spec
        .type_profiles()?
        .into_iter()
        .map(|(series, types)| SweepCase { series, scenario: spec.scenario, types, gamma: spec.gamma })
        .collect();
    let plan = SweepPlan {
        param: spec.sweep.param,
        values: spec.sweep.values.clone(),
        market: spec.market,
        cost: spec.cost,
    };
    Ok(vec![sweep_table(&spec.name, &cases, &plan, Execution::default())?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use tvws_pricing::model::do_utility;
    use tvws_pricing::PricePoint;

    fn small_market() -> MarketConfig {
        MarketConfig { n_sus: 12, fee_max: 60.0, fee_step: 2.0, ..MarketConfig::default() }
    }

    #[test]
    fn uptake_round_trips() {
        let u = vec![(3, Plan::new(100, 12.5)), (0, Plan::new(0, 0.0)), (7, Plan::new(100, 1.0 / 3.0))];
        assert_eq!(parse_uptake(&format_uptake(&u)).unwrap(), u);
        assert_eq!(parse_uptake("").unwrap(), vec![]);
        assert!(parse_uptake("1:2").is_none());
    }

    #[test]
    fn repriced_and_fresh_sweeps_agree() {
        let types = TypeProfile::new(vec![1.0, 2.0, 4.0], vec![4, 5, 3]).unwrap();
        let case = SweepCase { series: "s".into(), scenario: Scenario::StrategicIncomplete, types, gamma: 0.0 };
        let plan = SweepPlan {
            param: SweepParam::Eps0,
            values: vec![0.0, 1.5, 6.0],
            market: small_market(),
            cost: CostModel::default(),
        };
        let repriced = sweep_case(&case, &plan, Execution::Sequential).unwrap();
        for point in &repriced {
            let fresh = grid_search_with(case.scenario, &case.types, &plan.market, &point.cost, Execution::Sequential)
                .unwrap();
            assert_eq!(fresh.best(), &point.best);
        }
    }

    #[test]
    fn rows_recompute_operator_utility() {
        let text = r#"
name = "rows"
scenario = "nonstrategic-complete"
seed = 3
[distribution]
kind = "custom"
thetas = [1.0, 2.0, 3.0]
counts = [5, 5, 2]
gamma = 0.2
[market]
n_sus = 12
fee_max = 40.0
[sweep]
param = "eps1"
values = [0.0, 0.05]
"#;
        let spec = parse_config(text).unwrap();
        let table = &run_experiment(&spec).unwrap()[0];
        assert_eq!(table.rows.len(), 2);
        let col = |name: &str| table.column(name).unwrap();
        for i in 0..table.rows.len() {
            let num = |name: &str| col(name)[i].parse::<f64>().unwrap();
            let cost = CostModel {
                reservation_coeff: num("eps0"),
                reservation_exponent: num("alpha"),
                query_marginal_cost: num("eps1"),
            };
            let pp = PricePoint::new(num("br"), num("r"));
            let uptake = parse_uptake(col("uptake")[i]).unwrap();
            let u = do_utility(&pp, num("mu0") as u32, &uptake, &cost);
            assert!((u - num("do_utility")).abs() <= 1e-9);
            assert_eq!(col("gamma")[i], "0.2");
        }
    }
}
