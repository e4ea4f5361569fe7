//! Stage-I pricing: exhaustive search over reserved bandwidth and
//! registration fee.
//!
//! Each grid point is priced under one of three behavioural scenarios. The
//! search is organised by reserved-bandwidth column: every column is
//! independent, and in the incomplete-information scenario one structured
//! enumeration covers the whole fee column at once.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::estimator::{closed_form_mu_complete, estimate_mu, estimate_mu_over_fees};
use crate::exec::Execution;
use crate::game::{best_response_dynamics, posted_menu, GameContext, Information};
use crate::model::{
    do_utility, su_utility, CostModel, MarketConfig, Plan, PlanMenu, PricePoint, Scheme,
    StrategyProfile, TypeProfile, TOL,
};

/// Behavioural model of the SUs assumed when pricing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// A fixed share `γ^i` of each type is committed to registration and
    /// only drops out when the fee exceeds its expected share.
    NonStrategicComplete,
    /// SUs play the registration game; the operator knows every type.
    StrategicComplete,
    /// SUs play the registration game; the operator posts one menu.
    StrategicIncomplete,
}

impl Scenario {
    pub const ALL: [Scenario; 3] =
        [Scenario::NonStrategicComplete, Scenario::StrategicComplete, Scenario::StrategicIncomplete];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NonStrategicComplete => "nonstrategic-complete",
            Scenario::StrategicComplete => "strategic-complete",
            Scenario::StrategicIncomplete => "strategic-incomplete",
        }
    }

    fn information(self) -> Information {
        match self {
            Scenario::StrategicIncomplete => Information::Incomplete,
            _ => Information::Complete,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

/// Everything the operator learns from pricing one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub price_point: PricePoint,
    pub do_utility: f64,
    pub mu0: u32,
    pub mu1: u32,
    /// Posted plans, one per type that occurs in the population (lowest first).
    pub menu: PlanMenu,
    /// Unregistered buyer count and plan for each menu entry.
    pub uptake: Vec<(u32, Plan)>,
    /// Average utility over all `N` SUs.
    pub mean_su_utility: f64,
}

/// Per-type registrants that stay under non-strategic behaviour: the
/// committed pools `counts·γ` are kept whole when the expected share at
/// the committed count covers the fee, and dropped otherwise.
pub fn nonstrategic_registrants(types: &TypeProfile, price_point: &PricePoint) -> Result<Vec<u32>> {
    let pools = types.registration_pools()?;
    let committed: u32 = pools.iter().sum();
    if committed == 0 {
        return Ok(pools);
    }
    let share = price_point.reserved_bandwidth / committed as f64;
    Ok(pools
        .iter()
        .zip(&types.thetas)
        .map(|(&pool, &theta)| if share * theta - price_point.registration_fee >= -TOL { pool } else { 0 })
        .collect())
}

/// Number of non-strategic registrants that stay at `price_point`.
pub fn nonstrategic_registration_count(types: &TypeProfile, price_point: &PricePoint) -> Result<u32> {
    Ok(nonstrategic_registrants(types, price_point)?.iter().sum())
}

/// Prices one grid point.
pub fn evaluate_point(
    scenario: Scenario,
    price_point: PricePoint,
    types: &TypeProfile,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<PointEvaluation> {
    let ctx = GameContext::new(scenario.information(), price_point, types.clone(), *cfg, *cost)?;
    match scenario {
        Scenario::NonStrategicComplete => nonstrategic_point(&ctx),
        Scenario::StrategicComplete => {
            strategic_point(&ctx, &closed_form_mu_complete(&ctx)?.registered)
        }
        Scenario::StrategicIncomplete => {
            let registered = match estimate_mu(&ctx) {
                Ok(est) => est.registered,
                Err(Error::InvariantViolation(_)) => fallback_split(&ctx)?,
                Err(e) => return Err(e),
            };
            strategic_point(&ctx, &registered)
        }
    }
}

fn nonstrategic_point(ctx: &GameContext) -> Result<PointEvaluation> {
    let stayed = nonstrategic_registrants(&ctx.types, &ctx.price_point)?;
    let committed = ctx.types.registration_pools()?;
    // The service pool is fixed in advance; registrants who drop out leave.
    let unregistered: Vec<u32> =
        ctx.types.counts.iter().zip(&committed).map(|(c, k)| c - k).collect();
    settle_point(ctx, &stayed, &unregistered)
}

fn strategic_point(ctx: &GameContext, registered: &[u32]) -> Result<PointEvaluation> {
    let unregistered: Vec<u32> =
        ctx.types.counts.iter().zip(registered).map(|(c, k)| c - k).collect();
    settle_point(ctx, registered, &unregistered)
}

fn settle_point(ctx: &GameContext, registered: &[u32], unregistered: &[u32]) -> Result<PointEvaluation> {
    let mu0: u32 = registered.iter().sum();
    let mu1: u32 = unregistered.iter().sum();
    let (menu, index, uptake) = posted_menu(ctx, unregistered)?;
    let registrant_utility: f64 = (0..ctx.types.n_types())
        .filter(|&t| registered[t] > 0)
        .map(|t| registered[t] as f64 * ctx.registration_payoff(t, mu0))
        .sum();
    let mut service_utility = 0.0;
    for (&t, &(buyers, plan)) in index.iter().zip(&uptake) {
        if buyers > 0 {
            let theta = ctx.types.thetas[t];
            service_utility += buyers as f64
                * su_utility(theta, Scheme::ServicePlan, &ctx.price_point, 0, plan, mu1, &ctx.cfg)?;
        }
    }
    Ok(PointEvaluation {
        price_point: ctx.price_point,
        do_utility: do_utility(&ctx.price_point, mu0, &uptake, &ctx.cost),
        mu0,
        mu1,
        menu,
        uptake,
        mean_su_utility: (registrant_utility + service_utility) / ctx.types.total() as f64,
    })
}

/// Registration split used when no structured equilibrium exists: the
/// equilibrium reached by improvement dynamics from the all-service profile.
fn fallback_split(ctx: &GameContext) -> Result<Vec<u32>> {
    let start = StrategyProfile::uniform(ctx.types.su_types(), Scheme::ServicePlan);
    let outcome = best_response_dynamics(ctx, &start)?;
    Ok(outcome.profile.registered_per_type(ctx.types.n_types()))
}

/// Result of a full grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub scenario: Scenario,
    pub best_point: PricePoint,
    pub best_do_utility: f64,
    /// Every grid point, reserved bandwidth ascending, then fee ascending.
    pub surface: Vec<PointEvaluation>,
}

impl GridResult {
    fn from_surface(scenario: Scenario, surface: Vec<PointEvaluation>) -> Result<Self> {
        let best = argmax(surface.iter()).ok_or_else(|| invalid("grid", "empty search grid"))?;
        Ok(Self {
            scenario,
            best_point: best.price_point,
            best_do_utility: best.do_utility,
            surface,
        })
    }

    /// The surface entry at the optimum.
    pub fn best(&self) -> &PointEvaluation {
        self.surface
            .iter()
            .find(|p| p.price_point == self.best_point)
            .expect("best point lies on the surface")
    }

    /// Best fee for a fixed reserved bandwidth.
    pub fn best_with_reservation(&self, reserved_bandwidth: f64) -> Option<&PointEvaluation> {
        argmax(
            self.surface
                .iter()
                .filter(|p| (p.price_point.reserved_bandwidth - reserved_bandwidth).abs() <= TOL),
        )
    }

    /// The same surface under different reservation-cost parameters.
    /// Behaviour and menus do not depend on the reservation cost, so only
    /// operator profits change. The per-query cost must be unchanged.
    pub fn repriced(&self, cost: &CostModel) -> Result<Self> {
        cost.validate()?;
        let surface = self
            .surface
            .iter()
            .map(|p| PointEvaluation {
                do_utility: do_utility(&p.price_point, p.mu0, &p.uptake, cost),
                ..p.clone()
            })
            .collect();
        Self::from_surface(self.scenario, surface)
    }
}

/// First maximum in scan order, equal within [`TOL`] counting as a tie.
fn argmax<'a>(points: impl Iterator<Item = &'a PointEvaluation>) -> Option<&'a PointEvaluation> {
    points.fold(None, |best, p| match best {
        Some(b) if p.do_utility <= b.do_utility + TOL => Some(b),
        _ => Some(p),
    })
}

/// [`grid_search_with`] using the default execution strategy.
pub fn grid_search(
    scenario: Scenario,
    types: &TypeProfile,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<GridResult> {
    grid_search_with(scenario, types, cfg, cost, Execution::default())
}

/// Evaluates every `(B_R, r)` on the configured grid and returns the first
/// maximum scanning `B_R` ascending, then `r` ascending.
pub fn grid_search_with(
    scenario: Scenario,
    types: &TypeProfile,
    cfg: &MarketConfig,
    cost: &CostModel,
    exec: Execution,
) -> Result<GridResult> {
    cfg.validate()?;
    cost.validate()?;
    types.validate_for(cfg)?;
    if scenario == Scenario::NonStrategicComplete {
        types.registration_pools()?;
    }
    let fees = cfg.fee_grid();
    let columns = exec.try_map(&cfg.reservation_grid(), |&br| {
        evaluate_column(scenario, br, &fees, types, cfg, cost)
    })?;
    GridResult::from_surface(scenario, columns.into_iter().flatten().collect())
}

fn evaluate_column(
    scenario: Scenario,
    reserved_bandwidth: f64,
    fees: &[f64],
    types: &TypeProfile,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<Vec<PointEvaluation>> {
    if scenario != Scenario::StrategicIncomplete {
        return fees
            .iter()
            .map(|&r| evaluate_point(scenario, PricePoint::new(reserved_bandwidth, r), types, cfg, cost))
            .collect();
    }
    let base = PricePoint::new(reserved_bandwidth, fees[0]);
    let ctx = GameContext::new(Information::Incomplete, base, types.clone(), *cfg, *cost)?;
    let estimates = estimate_mu_over_fees(&ctx, fees)?;
    fees.iter()
        .zip(estimates)
        .map(|(&r, est)| {
            let mut at = ctx.clone();
            at.price_point.registration_fee = r;
            let registered = match est {
                Some(est) => est.registered,
                None => fallback_split(&at)?,
            };
            strategic_point(&at, &registered)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_cfg(n: u32, fee_max: f64, fee_step: f64) -> MarketConfig {
        MarketConfig { n_sus: n, fee_max, fee_step, ..MarketConfig::default() }
    }

    fn cost(eps0: f64, eps1: f64) -> CostModel {
        CostModel { reservation_coeff: eps0, reservation_exponent: 1.2, query_marginal_cost: eps1 }
    }

    #[test]
    fn nonstrategic_count_examples() {
        let types = TypeProfile::with_reg_fractions(vec![1.0, 2.0], vec![10, 10], vec![0.5, 0.5]).unwrap();
        assert_eq!(nonstrategic_registration_count(&types, &PricePoint::new(60.0, 5.0)).unwrap(), 10);
        // Share 6 per unit type: type 1 drops out at r = 7, type 2 stays.
        assert_eq!(nonstrategic_registration_count(&types, &PricePoint::new(60.0, 7.0)).unwrap(), 5);
        // Weak inequality: 6·1 = 6 keeps type 1.
        assert_eq!(nonstrategic_registration_count(&types, &PricePoint::new(60.0, 6.0)).unwrap(), 10);
        assert_eq!(nonstrategic_registration_count(&types, &PricePoint::new(0.0, 1.0)).unwrap(), 0);
        let none = TypeProfile::new(vec![1.0, 2.0], vec![10, 10]).unwrap();
        assert_eq!(nonstrategic_registration_count(&none, &PricePoint::new(60.0, 0.0)).unwrap(), 0);
    }

    #[test]
    fn zero_reservation_sells_whole_band_to_service_pool() {
        let types = TypeProfile::with_reg_fractions(vec![1.0, 2.0, 3.0], vec![10, 10, 10], vec![0.2; 3]).unwrap();
        let cfg = small_cfg(30, 600.0, 1.0);
        let eval = evaluate_point(Scenario::NonStrategicComplete, PricePoint::new(0.0, 17.0), &types, &cfg, &cost(2.0, 0.0)).unwrap();
        // B · Σθ·fraction over the pre-committed service pool.
        assert_relative_eq!(eval.do_utility, 60.0 * 2.0, epsilon = 1e-9);
        assert_eq!((eval.mu0, eval.mu1), (0, 24));
        assert_eq!(eval.mean_su_utility, 0.0);
    }

    #[test]
    fn full_reservation_leaves_only_fees() {
        let types = distributions::reference(1).unwrap();
        let cfg = MarketConfig::default();
        for scenario in [Scenario::StrategicComplete, Scenario::StrategicIncomplete] {
            let eval = evaluate_point(scenario, PricePoint::new(60.0, 60.0), &types, &cfg, &cost(1.0, 0.0)).unwrap();
            let expected = eval.mu0 as f64 * 60.0 - 60f64.powf(1.2);
            assert_relative_eq!(eval.do_utility, expected, epsilon = 1e-9);
            assert!(eval.uptake.iter().all(|(_, p)| p.price == 0.0 && p.queries == 0));
        }
    }

    #[test]
    fn single_type_free_market_prefers_plans() {
        let types = TypeProfile::new(vec![10.0], vec![5]).unwrap();
        let cfg = small_cfg(5, 600.0, 1.0);
        let res = grid_search(Scenario::StrategicComplete, &types, &cfg, &cost(0.0, 0.0)).unwrap();
        // Personal plans extract B·θ outright. Registration needs a strictly
        // positive payoff, so the best full reservation admits one SU at 599.
        assert_eq!(res.best_point.reserved_bandwidth, 0.0);
        assert_relative_eq!(res.best_do_utility, 600.0, epsilon = 1e-9);
        let all_reserved = res.best_with_reservation(60.0).unwrap();
        assert_eq!(all_reserved.price_point.registration_fee, 599.0);
        assert_eq!(all_reserved.mu0, 1);
        assert_relative_eq!(all_reserved.do_utility, 599.0, epsilon = 1e-9);
    }

    #[test]
    fn single_fee_grid_picks_best_column() {
        let types = distributions::reference(2).unwrap();
        let cfg = MarketConfig { fee_min: 50.0, fee_max: 50.0, ..MarketConfig::default() };
        let res = grid_search(Scenario::StrategicComplete, &types, &cfg, &cost(3.0, 0.0)).unwrap();
        assert_eq!(res.surface.len(), 11);
        let best = res.surface.iter().map(|p| p.do_utility).fold(f64::MIN, f64::max);
        assert!(res.best_do_utility >= best - TOL);
    }

    #[test]
    fn sweep_column_matches_pointwise_evaluation() {
        let types = TypeProfile::new(vec![1.0, 2.0, 4.0], vec![3, 4, 3]).unwrap();
        let cfg = small_cfg(10, 40.0, 2.0);
        let c = cost(1.0, 0.05);
        let res = grid_search(Scenario::StrategicIncomplete, &types, &cfg, &c).unwrap();
        for p in &res.surface {
            let direct = evaluate_point(Scenario::StrategicIncomplete, p.price_point, &types, &cfg, &c).unwrap();
            assert_eq!(&direct, p);
        }
    }

    #[test]
    fn repricing_matches_direct_search() {
        let types = distributions::reference(3).unwrap();
        let cfg = MarketConfig { fee_step: 10.0, ..MarketConfig::default() };
        let base = grid_search(Scenario::StrategicComplete, &types, &cfg, &cost(0.0, 0.0)).unwrap();
        for eps0 in [0.5, 2.0, 6.0] {
            let direct = grid_search(Scenario::StrategicComplete, &types, &cfg, &cost(eps0, 0.0)).unwrap();
            assert_eq!(base.repriced(&cost(eps0, 0.0)).unwrap(), direct);
        }
    }

    #[test]
    fn execution_strategies_agree() {
        let types = distributions::reference(4).unwrap();
        let cfg = MarketConfig { fee_step: 25.0, ..MarketConfig::default() };
        for scenario in Scenario::ALL {
            let t = types.clone().with_fractions_for(scenario);
            let seq = grid_search_with(scenario, &t, &cfg, &cost(1.0, 0.0), Execution::Sequential).unwrap();
            let par = grid_search_with(scenario, &t, &cfg, &cost(1.0, 0.0), Execution::Parallel).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("hybrid".parse::<Scenario>().is_err());
    }

    trait WithFractions {
        fn with_fractions_for(self, scenario: Scenario) -> Self;
    }

    impl WithFractions for TypeProfile {
        fn with_fractions_for(self, scenario: Scenario) -> Self {
            if scenario == Scenario::NonStrategicComplete {
                let n = self.n_types();
                TypeProfile::with_reg_fractions(self.thetas, self.counts, vec![0.5; n]).unwrap()
            } else {
                self
            }
        }
    }

    fn small_market() -> impl Strategy<Value = (TypeProfile, MarketConfig)> {
        prop::collection::vec(0u32..5, 1..=4).prop_filter_map("non-empty", |counts| {
            let n: u32 = counts.iter().sum();
            (n > 0).then(|| {
                let t = counts.len();
                let types = TypeProfile::with_reg_fractions(
                    distributions::integer_ladder(t),
                    counts.iter().map(|c| c * 2).collect(),
                    vec![0.5; t],
                )
                .unwrap();
                (types, small_cfg(2 * n, 120.0, 4.0))
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn optimum_dominates_pure_schemes_and_reservation_falls_with_cost(
            (types, cfg) in small_market(), eps1 in prop::sample::select(vec![0.0, 0.05]),
            which in 0usize..3,
        ) {
            let scenario = Scenario::ALL[which];
            let base = grid_search(scenario, &types, &cfg, &cost(0.0, eps1)).unwrap();
            let mut last_br = f64::INFINITY;
            for step in 0..=12 {
                let res = base.repriced(&cost(step as f64 * 0.5, eps1)).unwrap();
                let none = res.best_with_reservation(0.0).unwrap();
                let full = res.best_with_reservation(cfg.total_bandwidth).unwrap();
                prop_assert!(res.best_do_utility >= none.do_utility - TOL);
                prop_assert!(res.best_do_utility >= full.do_utility - TOL);
                prop_assert!(res.best_point.reserved_bandwidth <= last_br);
                last_br = res.best_point.reserved_bandwidth;
            }
        }

        #[test]
        fn complete_information_menus_are_all_or_nothing(
            (types, cfg) in small_market(), eps1 in 0.0f64..0.2, which in 0usize..3,
        ) {
            let scenario = Scenario::ALL[which];
            let res = grid_search(scenario, &types, &cfg, &cost(1.0, eps1)).unwrap();
            for p in &res.surface {
                prop_assert!(p.menu.plans().iter().all(|q| q.queries == 0 || q.queries == cfg.n_periods));
                prop_assert_eq!(p.mu0 + p.mu1 <= types.total(), true);
            }
        }
    }
}
