//! Operator-side prediction of the registration count.
//!
//! Under incomplete information the operator cannot run the SUs' dynamics,
//! and equilibria are not unique. It instead counts every pure equilibrium
//! by its registration count. SUs of one type are interchangeable, so the
//! count works on per-type registrant numbers and weights each by the
//! number of SU profiles it stands for. The most common count wins.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::game::{class_bounds, ClassBounds, GameContext, Information};
use crate::model::TOL;

/// Predicted registration split.
#[derive(Debug, Clone, PartialEq)]
pub struct MuEstimate {
    pub mu0: u32,
    pub mu1: u32,
    /// Registration counts found, as value → number of equilibrium profiles.
    pub candidates: BTreeMap<u32, BigUint>,
    /// Per-type registrants of the first equilibrium found with `mu0` registrants.
    pub registered: Vec<u32>,
}

impl MuEstimate {
    fn single(registered: Vec<u32>, n: u32) -> Self {
        let mu0 = registered.iter().sum();
        Self { mu0, mu1: n - mu0, candidates: BTreeMap::from([(mu0, BigUint::from(1u32))]), registered }
    }

    /// Total number of equilibrium profiles found.
    pub fn multiplicity(&self) -> BigUint {
        self.candidates.values().sum()
    }

    pub fn mean(&self) -> f64 {
        let total: BigUint = self.candidates.iter().map(|(&v, m)| m * v).sum();
        total.to_f64().unwrap_or(f64::NAN) / self.multiplicity().to_f64().unwrap_or(f64::NAN)
    }
}

/// Predicts the registration count as the most common `μ0` over all pure
/// equilibria, counting SU profiles. Ties go to the smaller count.
pub fn estimate_mu(ctx: &GameContext) -> Result<MuEstimate> {
    let fee = ctx.price_point.registration_fee;
    estimate_mu_over_fees(ctx, &[fee])?.pop().flatten().ok_or_else(|| {
        Error::InvariantViolation(format!(
            "no equilibrium at B_R = {}, r = {fee}",
            ctx.price_point.reserved_bandwidth
        ))
    })
}

/// [`estimate_mu`] at every fee of an ascending grid, with the context's
/// own fee ignored. `None` marks fees without any equilibrium.
///
/// With `μ0` fixed, each type is forced in (only its registrants are
/// content), forced out (only its outsiders are), free (both) or
/// impossible. The equilibria with `μ0` registrants then number
/// `C(n_free, μ0 − n_in)` by Vandermonde's identity. The reported split
/// fills the free types from the highest down.
pub fn estimate_mu_over_fees(ctx: &GameContext, fees: &[f64]) -> Result<Vec<Option<MuEstimate>>> {
    if ctx.information != Information::Incomplete {
        return Err(Error::InvalidState("equilibrium counting expects incomplete information".into()));
    }
    if fees.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidState("fee grid must be ascending".into()));
    }
    let counts = &ctx.types.counts;
    let n = ctx.types.total();
    let table = ctx.service_table()?;
    let occupied: Vec<usize> = (0..counts.len()).filter(|&t| counts[t] > 0).collect();
    // bounds[mu0][j] for the j-th occupied type.
    let bounds: Vec<Vec<ClassBounds>> = (0..=n)
        .map(|mu0| occupied.iter().map(|&t| class_bounds(ctx, &table, t, mu0, fees)).collect())
        .collect();
    let mut binomials: HashMap<u32, Vec<BigUint>> = HashMap::new();

    let estimates = (0..fees.len())
        .map(|f| {
            let mut candidates = BTreeMap::new();
            let mut free_at_mode = Vec::new();
            let mut best: Option<(u32, u32)> = None;
            for mu0 in 0..=n {
                let (mut forced_in, mut free) = (0u32, 0u32);
                let mut free_types = Vec::new();
                let feasible = occupied.iter().zip(&bounds[mu0 as usize]).all(|(&t, b)| {
                    match (f < b.members_stay_below, f >= b.outsiders_stay_from) {
                        (true, true) => {
                            free += counts[t];
                            free_types.push(t);
                        }
                        (true, false) => forced_in += counts[t],
                        (false, true) => {}
                        (false, false) => return false,
                    }
                    true
                });
                if !feasible || mu0 < forced_in || mu0 > forced_in + free {
                    continue;
                }
                let row = binomials.entry(free).or_insert_with(|| binomial_row(free));
                let weight = row[(mu0 - forced_in) as usize].clone();
                let better = match best {
                    Some((b, _)) => weight > candidates[&b],
                    None => true,
                };
                if better {
                    best = Some((mu0, forced_in));
                    free_at_mode = free_types;
                }
                candidates.insert(mu0, weight);
            }
            let (mu0, forced_in) = best?;
            let mut registered: Vec<u32> = (0..counts.len())
                .map(|t| {
                    let b = occupied.iter().position(|&o| o == t).map(|j| bounds[mu0 as usize][j]);
                    match b {
                        Some(b) if f < b.members_stay_below && f < b.outsiders_stay_from => counts[t],
                        _ => 0,
                    }
                })
                .collect();
            let mut left = mu0 - forced_in;
            for &t in free_at_mode.iter().rev() {
                registered[t] = left.min(counts[t]);
                left -= registered[t];
            }
            Some(MuEstimate { mu0, mu1: n - mu0, candidates, registered })
        })
        .collect();
    Ok(estimates)
}

/// `C(c, k)` for `k = 0..=c`.
fn binomial_row(c: u32) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(c as usize + 1);
    let mut value = BigUint::from(1u32);
    for k in 0..=c {
        row.push(value.clone());
        value = value * (c - k) / (k + 1);
    }
    row
}

/// Registration count under complete information from the threshold
/// formulas: `i_M` is one below the lowest type from which every type
/// upward can register at a profit, `R0` counts the SUs above `i_M`, and
/// `R1` is the largest number of type-`i_M` SUs that still profit.
pub fn closed_form_mu_complete(ctx: &GameContext) -> Result<MuEstimate> {
    if ctx.information != Information::Complete {
        return Err(Error::InvalidState("closed form expects complete information".into()));
    }
    let br = ctx.price_point.reserved_bandwidth;
    let r = ctx.price_point.registration_fee;
    let thetas = &ctx.types.thetas;
    let counts = &ctx.types.counts;
    let n = ctx.types.total();
    let n_types = thetas.len();

    if r.abs() <= TOL {
        let registered = counts.iter().zip(thetas).map(|(&c, &t)| if br * t > TOL { c } else { 0 }).collect();
        return Ok(MuEstimate::single(registered, n));
    }

    let profitable = |theta: f64, members: u32| br * theta > members as f64 * r + TOL;
    // suffix[k] = Σ_{i ≥ k} counts[i]
    let mut suffix = vec![0u32; n_types + 1];
    for k in (0..n_types).rev() {
        suffix[k] = suffix[k + 1] + counts[k];
    }
    let lowest_full = (0..n_types)
        .find(|&k| profitable(thetas[k], suffix[k]))
        .unwrap_or(n_types);
    let mut registered = vec![0u32; n_types];
    registered[lowest_full..].copy_from_slice(&counts[lowest_full..]);
    if lowest_full > 0 {
        let marginal = lowest_full - 1;
        let r0 = suffix[lowest_full];
        let cap = counts[marginal];
        let approx = ((br * thetas[marginal] - TOL) / r - r0 as f64).ceil() - 1.0;
        let mut k = approx.clamp(0.0, cap as f64) as u32;
        while k > 0 && !profitable(thetas[marginal], r0 + k) {
            k -= 1;
        }
        while k < cap && profitable(thetas[marginal], r0 + k + 1) {
            k += 1;
        }
        registered[marginal] = k;
    }
    Ok(MuEstimate::single(registered, n))
}
