//! Market primitives: configuration, type ladder, costs, menus, and the
//! closed-form utility functions every other module builds on.

use crate::error::{invalid, Error, Result};

/// Absolute tolerance for money comparisons. Strict inequalities in the
/// equilibrium and contract algorithms are evaluated as `a > b + TOL`.
pub const TOL: f64 = 1e-9;

/// Population, horizon, bandwidth and fee-grid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    pub n_sus: u32,
    pub n_periods: u32,
    /// Total TV-white-space bandwidth `B` in MHz.
    pub total_bandwidth: f64,
    /// Width of one channel `b0` in MHz; reservations are whole channels.
    pub channel_width: f64,
    pub fee_min: f64,
    pub fee_max: f64,
    pub fee_step: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_sus: 100,
            n_periods: 100,
            total_bandwidth: 60.0,
            channel_width: 6.0,
            fee_min: 0.0,
            fee_max: 600.0,
            fee_step: 1.0,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sus == 0 {
            return Err(invalid("n_sus", "must be at least 1"));
        }
        if self.n_periods == 0 {
            return Err(invalid("n_periods", "must be at least 1"));
        }
        if !(self.total_bandwidth.is_finite() && self.total_bandwidth > 0.0) {
            return Err(invalid("total_bandwidth", "must be positive and finite"));
        }
        if !(self.channel_width.is_finite() && self.channel_width > 0.0) {
            return Err(invalid("channel_width", "must be positive and finite"));
        }
        let ratio = self.total_bandwidth / self.channel_width;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(
                "total_bandwidth",
                format!(
                    "{} is not a whole number of {}-MHz channels",
                    self.total_bandwidth, self.channel_width
                ),
            ));
        }
        if !(self.fee_min.is_finite() && self.fee_max.is_finite()) || self.fee_min > self.fee_max {
            return Err(invalid("fee_min", "fee range must satisfy fee_min <= fee_max"));
        }
        if !(self.fee_step.is_finite() && self.fee_step > 0.0) {
            return Err(invalid("fee_step", "must be positive"));
        }
        Ok(())
    }

    pub fn channels(&self) -> u32 {
        (self.total_bandwidth / self.channel_width).round() as u32
    }

    /// Reservable bandwidths `{0, b0, 2·b0, ..., B}`.
    pub fn reservation_grid(&self) -> Vec<f64> {
        (0..=self.channels())
            .map(|k| k as f64 * self.channel_width)
            .collect()
    }

    /// Registration fees `{r_min, r_min + r0, ..., r_max}`.
    pub fn fee_grid(&self) -> Vec<f64> {
        let steps = ((self.fee_max - self.fee_min) / self.fee_step + 1e-9).floor() as u64;
        (0..=steps)
            .map(|j| self.fee_min + j as f64 * self.fee_step)
            .collect()
    }
}

/// The type ladder `θ^1 < ... < θ^T` with integer SU counts per type.
///
/// `reg_fractions` holds the share of each type pre-committed to
/// registration; it only matters for non-strategic users.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeProfile {
    pub thetas: Vec<f64>,
    pub counts: Vec<u32>,
    pub reg_fractions: Vec<f64>,
}

impl TypeProfile {
    /// Builds a validated profile with no pre-committed registrants.
    pub fn new(thetas: Vec<f64>, counts: Vec<u32>) -> Result<Self> {
        let reg_fractions = vec![0.0; thetas.len()];
        Self::with_reg_fractions(thetas, counts, reg_fractions)
    }

    pub fn with_reg_fractions(
        thetas: Vec<f64>,
        counts: Vec<u32>,
        reg_fractions: Vec<f64>,
    ) -> Result<Self> {
        let profile = Self { thetas, counts, reg_fractions };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(invalid("thetas", "at least one type is required"));
        }
        if self.counts.len() != self.thetas.len() {
            return Err(invalid(
                "counts",
                format!("expected {} entries, got {}", self.thetas.len(), self.counts.len()),
            ));
        }
        if self.reg_fractions.len() != self.thetas.len() {
            return Err(invalid(
                "reg_fractions",
                format!(
                    "expected {} entries, got {}",
                    self.thetas.len(),
                    self.reg_fractions.len()
                ),
            ));
        }
        if self.thetas.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("thetas", "every type must be positive and finite"));
        }
        if self.thetas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("thetas", "types must be strictly increasing"));
        }
        if self.reg_fractions.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(invalid("reg_fractions", "fractions must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Checks the profile against a market: counts must add up to `N`.
    pub fn validate_for(&self, cfg: &MarketConfig) -> Result<()> {
        self.validate()?;
        if self.total() != cfg.n_sus {
            return Err(invalid(
                "counts",
                format!("counts sum to {} but n_sus = {}", self.total(), cfg.n_sus),
            ));
        }
        Ok(())
    }

    pub fn n_types(&self) -> usize {
        self.thetas.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Share of each type in this profile.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Type index of every SU, with IDs assigned by descending type and
    /// then input order.
    pub fn su_types(&self) -> Vec<usize> {
        (0..self.n_types())
            .rev()
            .flat_map(|t| std::iter::repeat_n(t, self.counts[t] as usize))
            .collect()
    }

    /// Whole-SU registration pools `counts[i] · γ^i` for non-strategic users.
    pub fn registration_pools(&self) -> Result<Vec<u32>> {
        self.counts
            .iter()
            .zip(&self.reg_fractions)
            .map(|(&c, &g)| {
                let pool = c as f64 * g;
                if (pool - pool.round()).abs() > 1e-9 {
                    Err(invalid(
                        "reg_fractions",
                        format!("{c} SUs at fraction {g} is not a whole number of registrants"),
                    ))
                } else {
                    Ok(pool.round() as u32)
                }
            })
            .collect()
    }

    /// The types that occur at all, with indices back into this ladder.
    pub fn support(&self) -> (TypeProfile, Vec<usize>) {
        self.service_pool(&vec![0; self.n_types()])
    }

    /// The unregistered sub-population left after `registered[i]` SUs of
    /// each type registered. Types with nobody left are dropped; the
    /// returned indices map positions of the pool back into this ladder.
    pub fn service_pool(&self, registered: &[u32]) -> (TypeProfile, Vec<usize>) {
        let mut thetas = Vec::new();
        let mut counts = Vec::new();
        let mut index = Vec::new();
        for (t, (&c, &reg)) in self.counts.iter().zip(registered).enumerate() {
            let left = c.saturating_sub(reg);
            if left > 0 {
                thetas.push(self.thetas[t]);
                counts.push(left);
                index.push(t);
            }
        }
        let reg_fractions = vec![0.0; thetas.len()];
        (TypeProfile { thetas, counts, reg_fractions }, index)
    }
}

/// Operator costs: `φ0(b) = ε0·b^α` for reservation, `φ1(q) = ε1·q` for queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub reservation_coeff: f64,
    pub reservation_exponent: f64,
    pub query_marginal_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { reservation_coeff: 0.0, reservation_exponent: 1.2, query_marginal_cost: 0.0 }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.reservation_coeff.is_finite() && self.reservation_coeff >= 0.0) {
            return Err(invalid("reservation_coeff", "must be non-negative"));
        }
        if !(self.reservation_exponent.is_finite() && self.reservation_exponent >= 1.0) {
            return Err(invalid("reservation_exponent", "must be at least 1"));
        }
        if !(self.query_marginal_cost.is_finite() && self.query_marginal_cost >= 0.0) {
            return Err(invalid("query_marginal_cost", "must be non-negative"));
        }
        Ok(())
    }
}

/// Stage-I announcement: reserved bandwidth `B_R` and registration fee `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub reserved_bandwidth: f64,
    pub registration_fee: f64,
}

impl PricePoint {
    pub fn new(reserved_bandwidth: f64, registration_fee: f64) -> Self {
        Self { reserved_bandwidth, registration_fee }
    }

    pub fn validate(&self, cfg: &MarketConfig) -> Result<()> {
        let br = self.reserved_bandwidth;
        if !(0.0..=cfg.total_bandwidth).contains(&br) {
            return Err(invalid("reserved_bandwidth", format!("{br} outside [0, B]")));
        }
        let k = br / cfg.channel_width;
        if (k - k.round()).abs() > 1e-9 {
            return Err(invalid("reserved_bandwidth", format!("{br} is not a whole number of channels")));
        }
        let r = self.registration_fee;
        if !(cfg.fee_min - TOL..=cfg.fee_max + TOL).contains(&r) {
            return Err(invalid("registration_fee", format!("{r} outside the fee range")));
        }
        Ok(())
    }

    /// Bandwidth left for the service-plan scheme, `B − B_R`.
    pub fn shared_bandwidth(&self, cfg: &MarketConfig) -> f64 {
        cfg.total_bandwidth - self.reserved_bandwidth
    }
}

/// The pricing scheme an SU picks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Registration,
    ServicePlan,
}

impl Scheme {
    pub fn other(self) -> Self {
        match self {
            Scheme::Registration => Scheme::ServicePlan,
            Scheme::ServicePlan => Scheme::Registration,
        }
    }
}

/// One contract item: `queries` database accesses for a wholesale `price`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub queries: u32,
    pub price: f64,
}

impl Plan {
    pub const NULL: Plan = Plan { queries: 0, price: 0.0 };

    pub fn new(queries: u32, price: f64) -> Self {
        Self { queries, price }
    }
}

/// A contract menu. Item 0 is always the null plan; item `i ≥ 1` is the
/// plan designed for the `i`-th entry of the type list the menu was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMenu {
    items: Vec<Plan>,
}

impl PlanMenu {
    pub fn null_only() -> Self {
        Self { items: vec![Plan::NULL] }
    }

    /// Prepends the null plan to `plans` and checks `q ≤ M`.
    pub fn from_plans(plans: Vec<Plan>, cfg: &MarketConfig) -> Result<Self> {
        if let Some(p) = plans.iter().find(|p| p.queries > cfg.n_periods) {
            return Err(Error::ContractViolation(format!(
                "plan with {} queries exceeds the {} periods",
                p.queries, cfg.n_periods
            )));
        }
        let mut items = Vec::with_capacity(plans.len() + 1);
        items.push(Plan::NULL);
        items.extend(plans);
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Plan] {
        &self.items
    }

    /// Non-null items, one per type.
    pub fn plans(&self) -> &[Plan] {
        &self.items[1..]
    }

    /// Plan designed for the type at 0-based position `idx`.
    pub fn plan(&self, idx: usize) -> Plan {
        self.items[idx + 1]
    }

    pub fn is_monotone(&self) -> bool {
        self.plans().windows(2).all(|w| w[0].queries <= w[1].queries)
    }
}

/// Every SU's scheme choice plus its position on the type ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    pub choices: Vec<Scheme>,
    pub type_index: Vec<usize>,
}

impl StrategyProfile {
    pub fn uniform(type_index: Vec<usize>, choice: Scheme) -> Self {
        Self { choices: vec![choice; type_index.len()], type_index }
    }

    pub fn n(&self) -> usize {
        self.choices.len()
    }

    pub fn mu0(&self) -> u32 {
        self.choices.iter().filter(|c| **c == Scheme::Registration).count() as u32
    }

    pub fn mu1(&self) -> u32 {
        self.n() as u32 - self.mu0()
    }

    /// Registrants per type for a ladder with `n_types` rungs.
    pub fn registered_per_type(&self, n_types: usize) -> Vec<u32> {
        let mut reg = vec![0; n_types];
        for (c, &t) in self.choices.iter().zip(&self.type_index) {
            if *c == Scheme::Registration {
                reg[t] += 1;
            }
        }
        reg
    }
}

/// Final state of an equilibrium computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOutcome {
    pub profile: StrategyProfile,
    pub su_utilities: Vec<f64>,
    pub do_utility: f64,
    /// Stage-II menu offered to the unregistered pool (indexed by pool type).
    pub menu: PlanMenu,
    /// How many plans each pool type buys, paired with the plan.
    pub uptake: Vec<(u32, Plan)>,
    pub converged_in_steps: u64,
}

/// `θ = w·log2(1 + S/n0)`.
pub fn compute_type(valuation_weight: f64, signal_power: f64, noise_power: f64) -> Result<f64> {
    for (name, v) in [
        ("valuation_weight", valuation_weight),
        ("signal_power", signal_power),
        ("noise_power", noise_power),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(valuation_weight * (1.0 + signal_power / noise_power).log2())
}

/// Value of `q` queries to an unregistered SU sharing `B − B_R` with `μ1 − 1` others.
pub fn valuation(q: u32, price_point: &PricePoint, mu1: u32, cfg: &MarketConfig) -> Result<f64> {
    if mu1 == 0 {
        return Err(Error::InvalidState(
            "service-plan valuation needs at least one unregistered SU".into(),
        ));
    }
    if q > cfg.n_periods {
        return Err(Error::Domain(format!("{q} queries exceed {} periods", cfg.n_periods)));
    }
    Ok(price_point.shared_bandwidth(cfg) * q as f64 / (mu1 as f64 * cfg.n_periods as f64))
}

/// Utility of an SU of type `su_type` under either scheme.
///
/// `mu0` is only read for [`Scheme::Registration`], `plan`/`mu1` only for
/// [`Scheme::ServicePlan`].
pub fn su_utility(
    su_type: f64,
    choice: Scheme,
    price_point: &PricePoint,
    mu0: u32,
    plan: Plan,
    mu1: u32,
    cfg: &MarketConfig,
) -> Result<f64> {
    match choice {
        Scheme::Registration => {
            if mu0 == 0 {
                return Err(Error::InvalidState(
                    "registration utility needs at least one registrant".into(),
                ));
            }
            Ok(price_point.reserved_bandwidth / mu0 as f64 * su_type - price_point.registration_fee)
        }
        Scheme::ServicePlan => {
            Ok(su_type * valuation(plan.queries, price_point, mu1, cfg)? - plan.price)
        }
    }
}

/// `φ0(b) = ε0·b^α`.
pub fn reservation_cost(b: f64, cost: &CostModel) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    cost.reservation_coeff * b.powf(cost.reservation_exponent)
}

/// `φ1(q) = ε1·q`.
pub fn query_cost(total_queries: u64, cost: &CostModel) -> f64 {
    cost.query_marginal_cost * total_queries as f64
}

/// Operator profit: registration fees plus plan sales minus reservation
/// and query-maintenance costs. `plan_uptake` pairs a buyer count with
/// the plan those buyers took.
pub fn do_utility(
    price_point: &PricePoint,
    mu0: u32,
    plan_uptake: &[(u32, Plan)],
    cost: &CostModel,
) -> f64 {
    let sales: f64 = plan_uptake.iter().map(|(n, p)| *n as f64 * p.price).sum();
    let queries: u64 = plan_uptake.iter().map(|(n, p)| *n as u64 * p.queries as u64).sum();
    mu0 as f64 * price_point.registration_fee + sales
        - reservation_cost(price_point.reserved_bandwidth, cost)
        - query_cost(queries, cost)
}
