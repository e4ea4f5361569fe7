//! Stage-II menu design for the unregistered types.
//!
//! Under complete information every SU gets a personal plan with its
//! participation constraint binding. Under incomplete information the
//! operator posts one screening menu: query levels come from the sign of
//! the per-type revenue coefficients `g_i` (a top-down threshold scan),
//! and prices follow from binding the lowest type's participation
//! constraint and every adjacent downward incentive constraint.
//!
//! The screening functions take the type profile the operator designs for,
//! whose fractions are the `β^i` entering `g_i`, together with the number
//! `μ1` of unregistered SUs sharing the band.

use crate::error::{Error, Result};
use crate::model::{
    valuation, CostModel, MarketConfig, Plan, PlanMenu, PricePoint, TypeProfile, TOL,
};

/// Revenue coefficients of the screening problem for one types.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningCoefficients {
    /// `g_i(μ1)`, one per type, lowest type first.
    pub g: Vec<f64>,
    /// `Δ^i = θ^{i+1} − θ^i`, with the top entry fixed at 0.
    pub deltas: Vec<f64>,
    /// Number of low types that receive zero queries (`i_S`, in `0..=T`).
    pub threshold_index: usize,
}

/// Personal plans under complete information, one per entry of
/// `unregistered_types` (in order): the full horizon when the per-query
/// value beats the per-query cost, nothing otherwise, priced at the SU's
/// full valuation.
pub fn complete_info_menu(
    unregistered_types: &[f64],
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<PlanMenu> {
    if mu1 == 0 || unregistered_types.is_empty() {
        return Ok(PlanMenu::null_only());
    }
    let per_query = price_point.shared_bandwidth(cfg) / (mu1 as f64 * cfg.n_periods as f64);
    let plans = unregistered_types
        .iter()
        .map(|&theta| {
            let q = if per_query * theta - cost.query_marginal_cost > TOL {
                cfg.n_periods
            } else {
                0
            };
            Ok(Plan::new(q, theta * valuation(q, price_point, mu1, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PlanMenu::from_plans(plans, cfg)
}

/// Computes `g_i = β^i θ^i (B−B_R)/M − Δ^i (B−B_R)/M Σ_{j>i} β^j − μ1 β^i ε1`
/// with `β` the type fractions of `types`.
pub fn screening_coefficients(
    types: &TypeProfile,
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<ScreeningCoefficients> {
    if mu1 == 0 {
        return Err(Error::InvalidState("screening needs at least one unregistered SU".into()));
    }
    if types.total() == 0 {
        return Err(Error::InvalidState("screening needs a non-empty type profile".into()));
    }
    let t = types.n_types();
    let beta = types.fractions();
    let per_query_bw = price_point.shared_bandwidth(cfg) / cfg.n_periods as f64;
    let deltas: Vec<f64> = (0..t)
        .map(|i| if i + 1 < t { types.thetas[i + 1] - types.thetas[i] } else { 0.0 })
        .collect();

    let mut g = vec![0.0; t];
    let mut beta_above = 0.0;
    for i in (0..t).rev() {
        g[i] = beta[i] * types.thetas[i] * per_query_bw
            - deltas[i] * per_query_bw * beta_above
            - mu1 as f64 * beta[i] * cost.query_marginal_cost;
        beta_above += beta[i];
    }
    let threshold_index = threshold_scan(&g);
    Ok(ScreeningCoefficients { g, deltas, threshold_index })
}

/// Top-down scan: every type above the first non-positive coefficient
/// (counting from the top) is served.
fn threshold_scan(g: &[f64]) -> usize {
    let mut i_s = g.len();
    while i_s > 0 && g[i_s - 1] > TOL {
        i_s -= 1;
    }
    i_s
}

/// Monotone 0-or-`M` query levels: zero for the lowest `i_S` types, the
/// full horizon above.
pub fn valid_query_sequence(coeffs: &ScreeningCoefficients, cfg: &MarketConfig) -> Vec<u32> {
    let i_s = threshold_scan(&coeffs.g);
    (0..coeffs.g.len())
        .map(|i| if i < i_s { 0 } else { cfg.n_periods })
        .collect()
}

/// Prices `p_k = Σ_{i≤k} θ^i [v(q_i) − v(q_{i−1})]` for a monotone query
/// sequence, binding the lowest type's participation and each adjacent
/// downward incentive constraint.
pub fn price_recursion(
    qs: &[u32],
    types: &TypeProfile,
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
) -> Result<PlanMenu> {
    if qs.len() != types.n_types() {
        return Err(Error::ContractViolation(format!(
            "{} query levels for {} types",
            qs.len(),
            types.n_types()
        )));
    }
    if let Some(w) = qs.windows(2).find(|w| w[0] > w[1]) {
        return Err(Error::ContractViolation(format!(
            "query levels must be non-decreasing in type, found {} then {}",
            w[0], w[1]
        )));
    }
    let mut plans = Vec::with_capacity(qs.len());
    let mut price = 0.0;
    let mut prev_value = 0.0;
    for (&q, &theta) in qs.iter().zip(&types.thetas) {
        let value = valuation(q, price_point, mu1, cfg)?;
        price += theta * (value - prev_value);
        prev_value = value;
        plans.push(Plan::new(q, price));
    }
    PlanMenu::from_plans(plans, cfg)
}

/// The screening menu actually posted: threshold queries plus recursive prices.
pub fn screening_menu(
    types: &TypeProfile,
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<(ScreeningCoefficients, PlanMenu)> {
    let coeffs = screening_coefficients(types, price_point, mu1, cfg, cost)?;
    let qs = valid_query_sequence(&coeffs, cfg);
    let menu = price_recursion(&qs, types, price_point, mu1, cfg)?;
    Ok((coeffs, menu))
}

/// Service revenue net of query cost, `Σ g_i q_i`.
pub fn screening_revenue(coeffs: &ScreeningCoefficients, qs: &[u32]) -> f64 {
    coeffs.g.iter().zip(qs).map(|(g, &q)| g * q as f64).sum()
}

/// Maximizes `Σ g_i q_i` over non-decreasing integer `q ∈ [0, max_q]^T` by
/// pooling adjacent violators: each pointwise optimum sits at a boundary,
/// and any block whose level exceeds the next block's is merged with it and
/// re-solved on the summed coefficient. Linear objectives keep every block
/// at 0 or `max_q`.
pub fn iron_queries(g: &[f64], max_q: u32) -> Vec<u32> {
    struct Block {
        len: usize,
        coeff: f64,
    }
    let level = |coeff: f64| if coeff > TOL { max_q } else { 0 };

    let mut blocks: Vec<Block> = Vec::with_capacity(g.len());
    for &gi in g {
        blocks.push(Block { len: 1, coeff: gi });
        while blocks.len() >= 2 {
            let top = &blocks[blocks.len() - 1];
            let below = &blocks[blocks.len() - 2];
            if level(below.coeff) <= level(top.coeff) {
                break;
            }
            let top = blocks.pop().unwrap();
            let below = blocks.last_mut().unwrap();
            below.len += top.len;
            below.coeff += top.coeff;
        }
    }
    blocks
        .iter()
        .flat_map(|b| std::iter::repeat_n(level(b.coeff), b.len))
        .collect()
}

/// Bunching-and-ironing benchmark: the revenue-optimal monotone menu for
/// the types. Used as the optimality reference for the threshold menu, never
/// inside equilibrium search.
pub fn ironing_optimal_menu(
    types: &TypeProfile,
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<(PlanMenu, f64)> {
    let coeffs = screening_coefficients(types, price_point, mu1, cfg, cost)?;
    let qs = iron_queries(&coeffs.g, cfg.n_periods);
    let menu = price_recursion(&qs, types, price_point, mu1, cfg)?;
    Ok((menu, screening_revenue(&coeffs, &qs)))
}

/// Outcome of checking a menu against participation and incentive constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct MenuReport {
    /// `ir[i]`: type `i` gets non-negative utility from its own item.
    pub ir: Vec<bool>,
    /// `(i, j, ok)`: type `i` weakly prefers its item to type `j`'s.
    pub ic: Vec<(usize, usize, bool)>,
}

impl MenuReport {
    pub fn all_pass(&self) -> bool {
        self.ir.iter().all(|&ok| ok) && self.ic.iter().all(|&(_, _, ok)| ok)
    }

    pub fn failures(&self) -> usize {
        self.ir.iter().filter(|ok| !**ok).count() + self.ic.iter().filter(|c| !c.2).count()
    }
}

/// Checks all `T` participation and `T(T−1)` incentive constraints.
pub fn verify_menu(
    menu: &PlanMenu,
    types: &TypeProfile,
    price_point: &PricePoint,
    mu1: u32,
    cfg: &MarketConfig,
) -> MenuReport {
    let t = types.n_types().min(menu.plans().len());
    let utility = |i: usize, j: usize| -> f64 {
        let plan = menu.plan(j);
        let v = valuation(plan.queries, price_point, mu1.max(1), cfg).unwrap_or(f64::NAN);
        types.thetas[i] * v - plan.price
    };
    let ir = (0..t).map(|i| utility(i, i) >= -TOL).collect();
    let mut ic = Vec::with_capacity(t * t.saturating_sub(1));
    for i in 0..t {
        let own = utility(i, i);
        for j in (0..t).filter(|&j| j != i) {
            ic.push((i, j, own >= utility(i, j) - TOL));
        }
    }
    MenuReport { ir, ic }
}

/// Surplus of every type of `types` under the screening menu posted to
/// `mu1` unregistered SUs, without building the menu.
///
/// With threshold queries the recursive price of every served type equals
/// the lowest served type's full valuation, so served type `k` keeps
/// `(θ^k − θ^s)·(B − B_R)/μ1`.
pub(crate) fn screening_surplus(
    types: &TypeProfile,
    mu1: u32,
    price_point: &PricePoint,
    cfg: &MarketConfig,
    cost: &CostModel,
) -> Result<Vec<f64>> {
    let coeffs = screening_coefficients(types, price_point, mu1, cfg, cost)?;
    let s = coeffs.threshold_index;
    let full = valuation(cfg.n_periods, price_point, mu1, cfg)?;
    Ok((0..types.n_types())
        .map(|k| if k >= s { types.thetas[k] * full - types.thetas[s] * full } else { 0.0 })
        .collect())
}
