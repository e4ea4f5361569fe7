//! The stage-I registration game between secondary users.
//!
//! Each SU either registers (sharing the reserved band with the other
//! registrants for a flat fee) or stays on the service-plan side and buys
//! from the stage-II menu. The menu is designed for the known type
//! distribution and the number of unregistered SUs, so an SU's payoff
//! depends only on its own type and on how many SUs chose each scheme.
//! Most work here therefore happens on counts; the profile-level entry
//! points ([`payoff`], [`is_nash`]) go through the full menu construction
//! and serve as the reference path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contract::{complete_info_menu, screening_menu, screening_surplus};
use crate::error::{Error, Result};
use crate::model::{
    do_utility, su_utility, CostModel, EquilibriumOutcome, MarketConfig, Plan, PlanMenu,
    PricePoint, Scheme, StrategyProfile, TypeProfile, TOL,
};

/// What the operator knows about SU types when designing stage-II plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Information {
    /// Every SU gets a personal plan that extracts its whole surplus.
    Complete,
    /// One screening menu, designed from the type distribution, for all
    /// unregistered SUs.
    Incomplete,
}

/// Everything needed to evaluate payoffs in one game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GameContext {
    pub information: Information,
    pub price_point: PricePoint,
    pub types: TypeProfile,
    pub cfg: MarketConfig,
    pub cost: CostModel,
}

impl GameContext {
    pub fn new(
        information: Information,
        price_point: PricePoint,
        types: TypeProfile,
        cfg: MarketConfig,
        cost: CostModel,
    ) -> Result<Self> {
        cfg.validate()?;
        types.validate_for(&cfg)?;
        cost.validate()?;
        price_point.validate(&cfg)?;
        Ok(Self { information, price_point, types, cfg, cost })
    }

    pub fn n(&self) -> usize {
        self.types.total() as usize
    }

    /// `B_R·θ/μ0 − r`.
    pub(crate) fn registration_payoff(&self, t: usize, mu0: u32) -> f64 {
        self.registration_payoff_at(t, mu0, self.price_point.registration_fee)
    }

    /// Registration payoff at an arbitrary fee.
    pub(crate) fn registration_payoff_at(&self, t: usize, mu0: u32, fee: f64) -> f64 {
        debug_assert!(mu0 >= 1);
        self.price_point.reserved_bandwidth / mu0 as f64 * self.types.thetas[t] - fee
    }

    /// Service-side payoffs for every pool size.
    pub(crate) fn service_table(&self) -> Result<ServiceTable> {
        let n_types = self.types.n_types();
        let n = self.types.total();
        let mut values = vec![0.0; (n as usize + 1) * n_types];
        if self.information == Information::Incomplete {
            let (support, index) = self.types.support();
            for mu1 in 1..=n {
                let surplus =
                    screening_surplus(&support, mu1, &self.price_point, &self.cfg, &self.cost)?;
                for (&t, v) in index.iter().zip(surplus) {
                    values[mu1 as usize * n_types + t] = v;
                }
            }
        }
        Ok(ServiceTable { n_types, values })
    }

    fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.choices.len() != self.n() || profile.type_index.len() != self.n() {
            return Err(Error::InvalidState(format!(
                "profile has {} choices and {} type indices for {} SUs",
                profile.choices.len(),
                profile.type_index.len(),
                self.n()
            )));
        }
        let mut seen = vec![0u32; self.types.n_types()];
        for &t in &profile.type_index {
            let slot = seen.get_mut(t).ok_or_else(|| {
                Error::InvalidState(format!("type index {t} outside the ladder"))
            })?;
            *slot += 1;
        }
        if seen != self.types.counts {
            return Err(Error::InvalidState(
                "profile type indices do not match the type counts".into(),
            ));
        }
        Ok(())
    }

    fn unregistered(&self, registered: &[u32]) -> Vec<u32> {
        self.types.counts.iter().zip(registered).map(|(c, r)| c - r).collect()
    }

    /// Payoff of a class representative: current scheme vs. unilateral switch.
    fn class_payoffs(&self, table: &ServiceTable, t: usize, scheme: Scheme, mu0: u32) -> (f64, f64) {
        let mu1 = self.types.total() - mu0;
        match scheme {
            Scheme::Registration => (self.registration_payoff(t, mu0), table.get(t, mu1 + 1)),
            Scheme::ServicePlan => (table.get(t, mu1), self.registration_payoff(t, mu0 + 1)),
        }
    }
}

/// Service-side payoff by type and number of unregistered SUs. Zero under
/// complete information, where every plan is priced at its buyer's value.
#[derive(Debug, Clone)]
pub(crate) struct ServiceTable {
    n_types: usize,
    values: Vec<f64>,
}

impl ServiceTable {
    pub(crate) fn get(&self, t: usize, mu1: u32) -> f64 {
        self.values[mu1 as usize * self.n_types + t]
    }
}

/// Payoff of SU `su_index` under `profile`, built through the full stage-II
/// menu.
pub fn payoff(ctx: &GameContext, profile: &StrategyProfile, su_index: usize) -> Result<f64> {
    ctx.check_profile(profile)?;
    let t = *profile
        .type_index
        .get(su_index)
        .ok_or_else(|| Error::InvalidState(format!("no SU with index {su_index}")))?;
    let theta = ctx.types.thetas[t];
    match profile.choices[su_index] {
        Scheme::Registration => su_utility(
            theta,
            Scheme::Registration,
            &ctx.price_point,
            profile.mu0(),
            Plan::NULL,
            0,
            &ctx.cfg,
        ),
        Scheme::ServicePlan => match ctx.information {
            Information::Complete => Ok(0.0),
            Information::Incomplete => {
                let registered = profile.registered_per_type(ctx.types.n_types());
                let (menu, index, _) = stage_two(ctx, &registered)?;
                let pos = index.iter().position(|&i| i == t).ok_or_else(|| {
                    Error::InvariantViolation("SU type missing from the menu".into())
                })?;
                su_utility(
                    theta,
                    Scheme::ServicePlan,
                    &ctx.price_point,
                    0,
                    menu.plan(pos),
                    profile.mu1(),
                    &ctx.cfg,
                )
            }
        },
    }
}

/// True iff no SU gains strictly (beyond [`TOL`]) by switching scheme, with
/// the switch evaluated at the post-deviation counts.
pub fn is_nash(ctx: &GameContext, profile: &StrategyProfile) -> Result<bool> {
    ctx.check_profile(profile)?;
    // Same type and same scheme means same payoffs; check one SU per class.
    let mut checked = vec![[false; 2]; ctx.types.n_types()];
    let mut deviated = profile.clone();
    for i in 0..profile.n() {
        let t = profile.type_index[i];
        let slot = match profile.choices[i] {
            Scheme::Registration => 0,
            Scheme::ServicePlan => 1,
        };
        if checked[t][slot] {
            continue;
        }
        checked[t][slot] = true;
        let current = payoff(ctx, profile, i)?;
        deviated.choices[i] = profile.choices[i].other();
        let alternative = payoff(ctx, &deviated, i)?;
        deviated.choices[i] = profile.choices[i];
        if alternative > current + TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Count-level equilibrium test, equivalent to [`is_nash`] on any profile
/// with these per-type counts.
#[cfg(test)]
pub(crate) fn is_nash_counts(ctx: &GameContext, registered: &[u32]) -> bool {
    let table = ctx.service_table().expect("valid context");
    let mu0: u32 = registered.iter().sum();
    let unregistered = ctx.unregistered(registered);
    (0..ctx.types.n_types()).all(|t| {
        [(registered[t], Scheme::Registration), (unregistered[t], Scheme::ServicePlan)]
            .into_iter()
            .filter(|&(members, _)| members > 0)
            .all(|(_, scheme)| {
                let (cur, dev) = ctx.class_payoffs(&table, t, scheme, mu0);
                dev <= cur + TOL
            })
    })
}

/// Posted menu, the support index of each plan, and per-plan uptake.
pub(crate) type PostedMenu = (PlanMenu, Vec<usize>, Vec<(u32, Plan)>);

/// Where a type's equilibrium conditions hold on an ascending fee grid
/// (the context's own fee is ignored) with `mu0` registrants overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ClassBounds {
    /// Registrants of the type have no profitable switch at fee indices
    /// below this.
    pub(crate) members_stay_below: usize,
    /// Outsiders of the type have no profitable switch from this index on.
    pub(crate) outsiders_stay_from: usize,
}

/// Service payoffs do not depend on the fee, so a registrant's condition
/// only tightens as the fee grows and an outsider's only loosens.
pub(crate) fn class_bounds(
    ctx: &GameContext,
    table: &ServiceTable,
    t: usize,
    mu0: u32,
    fees: &[f64],
) -> ClassBounds {
    let n = ctx.types.total();
    let members_stay_below = if mu0 == 0 {
        0
    } else {
        let dev = table.get(t, n - mu0 + 1);
        fees.partition_point(|&fee| dev <= ctx.registration_payoff_at(t, mu0, fee) + TOL)
    };
    let outsiders_stay_from = if mu0 == n {
        fees.len()
    } else {
        let cur = table.get(t, n - mu0);
        fees.partition_point(|&fee| ctx.registration_payoff_at(t, mu0 + 1, fee) > cur + TOL)
    };
    ClassBounds { members_stay_below, outsiders_stay_from }
}

/// Descending-type admission under complete information: whole type
/// classes register from the top while every member still earns a strictly
/// positive payoff, then members of the marginal type join one at a time in
/// ID order.
pub fn registration_equilibrium_complete(ctx: &GameContext) -> Result<StrategyProfile> {
    if ctx.information != Information::Complete {
        return Err(Error::InvalidState(
            "descending admission applies to complete information only".into(),
        ));
    }
    let br = ctx.price_point.reserved_bandwidth;
    let r = ctx.price_point.registration_fee;
    let thetas = &ctx.types.thetas;
    let counts = &ctx.types.counts;
    let admits = |theta: f64, members: u32| br * theta > members as f64 * r + TOL;

    // `marginal` is 1-based: types above it register in full.
    let mut marginal = thetas.len();
    let mut admitted = 0u32;
    while marginal > 0 && admits(thetas[marginal - 1], admitted + counts[marginal - 1]) {
        admitted += counts[marginal - 1];
        marginal -= 1;
    }

    let mut profile = StrategyProfile::uniform(ctx.types.su_types(), Scheme::ServicePlan);
    for (choice, &t) in profile.choices.iter_mut().zip(&profile.type_index) {
        if t + 1 > marginal {
            *choice = Scheme::Registration;
        }
    }
    if marginal > 0 {
        let t = marginal - 1;
        for (choice, &ti) in profile.choices.iter_mut().zip(&profile.type_index) {
            if ti == t && admits(thetas[t], admitted + 1) {
                admitted += 1;
                *choice = Scheme::Registration;
            }
        }
    }
    Ok(profile)
}

/// Random initial profile: every SU picks a scheme by a fair coin.
pub fn random_initial_profile(types: &TypeProfile, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let type_index = types.su_types();
    let choices = type_index
        .iter()
        .map(|_| if rng.gen_bool(0.5) { Scheme::Registration } else { Scheme::ServicePlan })
        .collect();
    StrategyProfile { choices, type_index }
}

/// Round-robin improvement dynamics: in slot `t` SU `t mod N` switches iff
/// the other scheme (with itself added) pays strictly more. Stops once a
/// full round passes without a switch.
///
/// `converged_in_steps` counts switches. More than `N(N+1)` switches would
/// contradict the congestion-game bound and is reported as an error.
pub fn best_response_dynamics(
    ctx: &GameContext,
    initial: &StrategyProfile,
) -> Result<EquilibriumOutcome> {
    ctx.check_profile(initial)?;
    let n = initial.n();
    let bound = n as u64 * (n as u64 + 1);
    let mut profile = initial.clone();
    let table = ctx.service_table()?;
    let mut mu0 = profile.mu0();
    let mut switches = 0u64;
    let mut quiet = 0usize;
    let mut slot = 0usize;

    while n > 0 && quiet < n {
        let i = slot % n;
        let t = profile.type_index[i];
        let scheme = profile.choices[i];
        let (current, alternative) = ctx.class_payoffs(&table, t, scheme, mu0);
        if alternative > current + TOL {
            match scheme {
                Scheme::Registration => mu0 -= 1,
                Scheme::ServicePlan => mu0 += 1,
            }
            profile.choices[i] = scheme.other();
            switches += 1;
            quiet = 0;
            if switches > bound {
                return Err(Error::InvariantViolation(format!(
                    "improvement path exceeded N(N+1) = {bound} switches"
                )));
            }
        } else {
            quiet += 1;
        }
        slot += 1;
    }
    settle(ctx, profile, switches)
}

/// Stage-II menu for a fixed registration split: one plan per type that
/// occurs in the population, the ladder index of each plan, and the number
/// of unregistered buyers of each plan.
pub(crate) fn stage_two(
    ctx: &GameContext,
    registered: &[u32],
) -> Result<PostedMenu> {
    posted_menu(ctx, &ctx.unregistered(registered))
}

/// [`stage_two`] from the per-type unregistered counts.
pub(crate) fn posted_menu(
    ctx: &GameContext,
    unregistered: &[u32],
) -> Result<PostedMenu> {
    let (support, index) = ctx.types.support();
    let mu1: u32 = unregistered.iter().sum();
    let menu = match ctx.information {
        _ if mu1 == 0 => PlanMenu::null_only(),
        Information::Complete => {
            complete_info_menu(&support.thetas, &ctx.price_point, mu1, &ctx.cfg, &ctx.cost)?
        }
        Information::Incomplete => {
            screening_menu(&support, &ctx.price_point, mu1, &ctx.cfg, &ctx.cost)?.1
        }
    };
    let uptake = index.iter().zip(menu.plans()).map(|(&t, &p)| (unregistered[t], p)).collect();
    Ok((menu, index, uptake))
}

fn settle(ctx: &GameContext, profile: StrategyProfile, steps: u64) -> Result<EquilibriumOutcome> {
    let registered = profile.registered_per_type(ctx.types.n_types());
    let mu0 = profile.mu0();
    let mu1 = profile.mu1();
    let (menu, index, uptake) = stage_two(ctx, &registered)?;
    let su_utilities = profile
        .choices
        .iter()
        .zip(&profile.type_index)
        .map(|(&choice, &t)| {
            let theta = ctx.types.thetas[t];
            match choice {
                Scheme::Registration => Ok(ctx.registration_payoff(t, mu0)),
                Scheme::ServicePlan => {
                    let pos = index.iter().position(|&i| i == t).ok_or_else(|| {
                        Error::InvariantViolation("service-plan SU type missing from the menu".into())
                    })?;
                    su_utility(theta, choice, &ctx.price_point, 0, menu.plan(pos), mu1, &ctx.cfg)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let do_utility = do_utility(&ctx.price_point, mu0, &uptake, &ctx.cost);
    Ok(EquilibriumOutcome {
        profile,
        su_utilities,
        do_utility,
        menu,
        uptake,
        converged_in_steps: steps,
    })
}

/// Largest population the exhaustive enumerator accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Every pure equilibrium, found by testing all `2^N` profiles. Profiles are
/// returned in lexicographic order of the choice vector (registration first).
pub fn enumerate_nash_bruteforce(ctx: &GameContext) -> Result<Vec<StrategyProfile>> {
    let n = ctx.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit { what: "N", value: n, limit: BRUTE_FORCE_LIMIT });
    }
    let type_index = ctx.types.su_types();
    let mut found = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let choices = (0..n)
            .map(|i| {
                if mask >> (n - 1 - i) & 1 == 0 {
                    Scheme::Registration
                } else {
                    Scheme::ServicePlan
                }
            })
            .collect();
        let profile = StrategyProfile { choices, type_index: type_index.clone() };
        if is_nash(ctx, &profile)? {
            found.push(profile);
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ctx(info: Information, thetas: &[f64], counts: &[u32], br: f64, r: f64) -> GameContext {
        let types = TypeProfile::new(thetas.to_vec(), counts.to_vec()).unwrap();
        let cfg = MarketConfig { n_sus: types.total(), ..MarketConfig::default() };
        GameContext::new(info, PricePoint::new(br, r), types, cfg, CostModel::default()).unwrap()
    }

    fn profile_from(ctx: &GameContext, registered: &[bool]) -> StrategyProfile {
        StrategyProfile {
            choices: registered
                .iter()
                .map(|&r| if r { Scheme::Registration } else { Scheme::ServicePlan })
                .collect(),
            type_index: ctx.types.su_types(),
        }
    }

    #[test]
    fn complete_info_payoffs() {
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[1, 1, 1], 6.0, 4.0);
        // IDs: 0 -> θ=3, 1 -> θ=2, 2 -> θ=1.
        let p = profile_from(&g, &[true, true, false]);
        assert_relative_eq!(payoff(&g, &p, 0).unwrap(), 5.0);
        assert_relative_eq!(payoff(&g, &p, 1).unwrap(), 2.0);
        assert_eq!(payoff(&g, &p, 2).unwrap(), 0.0);
        assert!(payoff(&g, &p, 3).is_err());
    }

    #[test]
    fn incomplete_info_low_type_gets_nothing() {
        let g = ctx(Information::Incomplete, &[1.0, 2.0], &[5, 5], 0.0, 0.0);
        // Pool g = (0, 0.6): only the high type is served, and the low type
        // is left with zero surplus.
        let p = StrategyProfile::uniform(g.types.su_types(), Scheme::ServicePlan);
        let low = p.type_index.iter().position(|&t| t == 0).unwrap();
        let high = p.type_index.iter().position(|&t| t == 1).unwrap();
        assert_eq!(payoff(&g, &p, low).unwrap(), 0.0);
        assert_relative_eq!(payoff(&g, &p, high).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn admission_example() {
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[1, 1, 1], 6.0, 4.0);
        let p = registration_equilibrium_complete(&g).unwrap();
        assert_eq!(p.choices, vec![Scheme::Registration, Scheme::Registration, Scheme::ServicePlan]);
        assert!(is_nash(&g, &p).unwrap());
        let all = enumerate_nash_bruteforce(&g).unwrap();
        assert!(!all.is_empty());
        assert!(all.iter().all(|q| q.mu0() == 2));
    }

    #[test]
    fn admission_edges() {
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[2, 2, 2], 6.0, 18.5);
        assert_eq!(registration_equilibrium_complete(&g).unwrap().mu0(), 0);
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[2, 2, 2], 6.0, 0.0);
        assert_eq!(registration_equilibrium_complete(&g).unwrap().mu0(), 6);
        let g = ctx(Information::Incomplete, &[1.0], &[1], 6.0, 0.0);
        assert!(registration_equilibrium_complete(&g).is_err());
    }

    #[test]
    fn nash_examples() {
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[2, 2, 2], 6.0, 18.5);
        let everyone = StrategyProfile::uniform(g.types.su_types(), Scheme::Registration);
        assert!(!is_nash(&g, &everyone).unwrap());
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[2, 2, 2], 6.0, 0.0);
        let nobody = StrategyProfile::uniform(g.types.su_types(), Scheme::ServicePlan);
        assert!(!is_nash(&g, &nobody).unwrap());
    }

    #[test]
    fn bruteforce_examples() {
        let g = ctx(Information::Complete, &[2.0], &[1], 6.0, 0.0);
        let all = enumerate_nash_bruteforce(&g).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].choices, vec![Scheme::Registration]);

        // One registrant earns 12 − 10 > 0, two would earn 6 − 10 < 0.
        let g = ctx(Information::Complete, &[2.0], &[2], 6.0, 10.0);
        let all = enumerate_nash_bruteforce(&g).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|p| p.mu0() == 1));
        assert_eq!(all[0].choices, vec![Scheme::Registration, Scheme::ServicePlan]);

        let big = ctx(Information::Complete, &[1.0], &[21], 6.0, 1.0);
        assert!(matches!(enumerate_nash_bruteforce(&big), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn dynamics_fixed_point_and_outcome_consistency() {
        let g = ctx(Information::Complete, &[1.0, 2.0, 3.0], &[1, 1, 1], 6.0, 4.0);
        let ne = registration_equilibrium_complete(&g).unwrap();
        let out = best_response_dynamics(&g, &ne).unwrap();
        assert_eq!(out.converged_in_steps, 0);
        assert_eq!(out.profile, ne);
        let recomputed = do_utility(&g.price_point, out.profile.mu0(), &out.uptake, &g.cost);
        assert_relative_eq!(out.do_utility, recomputed);
    }

    #[test]
    fn profile_consistency_is_checked() {
        let g = ctx(Information::Complete, &[1.0, 2.0], &[1, 1], 6.0, 4.0);
        let bad = StrategyProfile { choices: vec![Scheme::ServicePlan; 2], type_index: vec![1, 1] };
        assert!(matches!(is_nash(&g, &bad), Err(Error::InvalidState(_))));
        let short = StrategyProfile { choices: vec![Scheme::ServicePlan], type_index: vec![0] };
        assert!(best_response_dynamics(&g, &short).is_err());
    }

    fn small_instance() -> impl Strategy<Value = (Vec<f64>, Vec<u32>, u32, f64, bool)> {
        (
            prop::collection::vec((0.2f64..4.0, 0u32..5), 1..=3),
            0u32..=10,
            0.0f64..120.0,
            any::<bool>(),
        )
            .prop_filter_map("non-empty", |(raw, br, r, complete)| {
                let mut acc = 0.0;
                let thetas: Vec<f64> = raw.iter().map(|(d, _)| { acc += d; acc }).collect();
                let counts: Vec<u32> = raw.iter().map(|(_, c)| *c).collect();
                let n: u32 = counts.iter().sum();
                (1..=10).contains(&n).then_some((thetas, counts, br, r, complete))
            })
    }

    proptest! {
        #[test]
        fn count_check_agrees_with_profile_check((thetas, counts, br, r, complete) in small_instance(), seed in any::<u64>()) {
            let info = if complete { Information::Complete } else { Information::Incomplete };
            let g = ctx(info, &thetas, &counts, 6.0 * br as f64, r);
            let p = random_initial_profile(&g.types, seed);
            let reg = p.registered_per_type(g.types.n_types());
            prop_assert_eq!(is_nash(&g, &p).unwrap(), is_nash_counts(&g, &reg));
        }

        #[test]
        fn class_bounds_match_pointwise_check(
            (thetas, counts, br, _r, complete) in small_instance(), seed in any::<u64>(),
        ) {
            let info = if complete { Information::Complete } else { Information::Incomplete };
            let g = ctx(info, &thetas, &counts, 6.0 * br as f64, 0.0);
            let reg = random_initial_profile(&g.types, seed).registered_per_type(g.types.n_types());
            let mu0: u32 = reg.iter().sum();
            let fees: Vec<f64> = (0..=120).map(|f| f as f64 * 0.5).collect();
            let table = g.service_table().unwrap();
            let bounds: Vec<ClassBounds> =
                (0..thetas.len()).map(|t| class_bounds(&g, &table, t, mu0, &fees)).collect();
            for (i, &fee) in fees.iter().enumerate() {
                let mut at = g.clone();
                at.price_point.registration_fee = fee;
                let accepted = bounds.iter().zip(&reg).zip(&counts).all(|((b, &k), &c)| {
                    (k == 0 || i < b.members_stay_below) && (k == c || i >= b.outsiders_stay_from)
                });
                prop_assert_eq!(accepted, is_nash_counts(&at, &reg), "fee {}", fee);
            }
        }

        #[test]
        fn both_schemes_get_worse_with_crowding(
            (thetas, counts, br, r, complete) in small_instance(),
        ) {
            let info = if complete { Information::Complete } else { Information::Incomplete };
            let g = ctx(info, &thetas, &counts, 6.0 * br as f64, r);
            let table = g.service_table().unwrap();
            let n = g.types.total();
            for t in 0..g.types.n_types() {
                for k in 1..n {
                    prop_assert!(g.registration_payoff(t, k + 1) <= g.registration_payoff(t, k));
                    prop_assert!(table.get(t, k + 1) <= table.get(t, k) + TOL);
                    prop_assert!(table.get(t, k) >= 0.0);
                }
            }
        }

        #[test]
        fn admission_yields_equilibrium_with_profitable_registrants((thetas, counts, br, r, _c) in small_instance()) {
            let g = ctx(Information::Complete, &thetas, &counts, 6.0 * br as f64, r);
            let p = registration_equilibrium_complete(&g).unwrap();
            prop_assert!(is_nash(&g, &p).unwrap());
            let mu0 = p.mu0();
            for (c, &t) in p.choices.iter().zip(&p.type_index) {
                match c {
                    Scheme::Registration => prop_assert!(g.registration_payoff(t, mu0) > 0.0),
                    Scheme::ServicePlan => prop_assert!(g.registration_payoff(t, mu0 + 1) <= TOL),
                }
            }
        }

        #[test]
        fn dynamics_reach_an_equilibrium_within_bound((thetas, counts, br, r, complete) in small_instance(), seed in any::<u64>()) {
            let info = if complete { Information::Complete } else { Information::Incomplete };
            let g = ctx(info, &thetas, &counts, 6.0 * br as f64, r);
            let start = random_initial_profile(&g.types, seed);
            let out = best_response_dynamics(&g, &start).unwrap();
            let n = g.n() as u64;
            prop_assert!(out.converged_in_steps <= n * (n + 1));
            prop_assert!(is_nash(&g, &out.profile).unwrap());
            let all = enumerate_nash_bruteforce(&g).unwrap();
            prop_assert!(all.iter().any(|q| q.mu0() == out.profile.mu0()));
            if complete {
                let alg = registration_equilibrium_complete(&g).unwrap();
                prop_assert_eq!(alg.mu0(), out.profile.mu0());
            }
        }

        #[test]
        fn swapping_same_type_choices_preserves_equilibrium((thetas, counts, br, r, complete) in small_instance()) {
            let info = if complete { Information::Complete } else { Information::Incomplete };
            let g = ctx(info, &thetas, &counts, 6.0 * br as f64, r);
            for ne in enumerate_nash_bruteforce(&g).unwrap() {
                for i in 0..ne.n() {
                    for j in 0..ne.n() {
                        if ne.type_index[i] == ne.type_index[j]
                            && ne.choices[i] == Scheme::Registration
                            && ne.choices[j] == Scheme::ServicePlan
                        {
                            let mut swapped = ne.clone();
                            swapped.choices.swap(i, j);
                            prop_assert!(is_nash(&g, &swapped).unwrap());
                            prop_assert_eq!(swapped.mu0(), ne.mu0());
                        }
                    }
                }
            }
        }
    }
}
