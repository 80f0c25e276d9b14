//! OFDMA downlink PRB allocation maximizing cumulative MoS under per-type
//! SLA floors.
//!
//! Every admitted UE gets a choice table: the SLA-admissible profiles of
//! its application priced in PRBs at its current channel quality. Three
//! allocators then pick one choice per UE within the cell budget:
//!
//! - [`mrr_allocate`]: round robin from a random start, each visit jumping
//!   the UE to the best profile that still fits.
//! - [`wf_allocate`]: water filling; UEs served best-channel-first.
//! - [`mckp_allocate`]: multiple-choice knapsack solved by dynamic
//!   programming over scaled profits (Lawler-style FPTAS), optimal up to a
//!   (1 - epsilon) factor on the incremental MoS.
//!
//! [`brute_force_oracle`] enumerates small instances exactly and exists to
//! check the DP, not to schedule.

use rand::Rng;

use crate::error::{Error, Result};
use crate::qoe::{ClientType, VideoProfile};

/// A wireless client at one scheduling instant.
#[derive(Debug, Clone)]
pub struct UeState {
    pub id: u32,
    pub ctype: ClientType,
    pub channel: crate::channel::UeChannelState,
}

/// One admissible (profile, PRB cost) option of a UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    /// Index into the application profile table.
    pub profile_idx: usize,
    /// PRBs needed to carry the profile's send rate at this UE's channel.
    pub weight: u32,
    pub mos: f64,
    pub send_rate: f64,
    pub call_drop: f64,
    /// MoS gained over the UE's baseline (cheapest admissible) choice.
    pub raw_profit: f64,
}

/// The priced options of one UE, sorted by weight with dominated choices
/// removed. The first entry is the baseline.
#[derive(Debug, Clone)]
pub struct ChoiceTable {
    pub ue_id: u32,
    pub ctype: ClientType,
    pub bits_per_prb: u32,
    pub choices: Vec<Choice>,
}

impl ChoiceTable {
    pub fn baseline(&self) -> &Choice {
        &self.choices[0]
    }

    pub fn best(&self) -> &Choice {
        self.choices.last().expect("choice tables are non-empty")
    }
}

/// PRBs per second delivered by one PRB slot: 1000 TTIs of `bits_per_prb`.
fn weight_for(send_rate_mbps: f64, bits_per_prb: u32) -> u32 {
    let bits_per_s = f64::from(bits_per_prb) * 1000.0;
    ((send_rate_mbps * 1e6) / bits_per_s).ceil().max(0.0) as u32
}

/// Builds the weight/profit table of one UE from its application profiles.
///
/// Keeps only profiles meeting the UE's SLA floor, prices each in PRBs,
/// collapses equal weights to the best MoS, and drops dominated entries so
/// the result is a ladder: strictly increasing weight, strictly increasing
/// MoS. Profits are measured from the baseline.
pub fn build_choice_table(ue: &UeState, table: &[VideoProfile]) -> Result<ChoiceTable> {
    if ue.channel.bits_per_prb == 0 {
        return Err(Error::UnservableUe { ue: ue.id });
    }
    let mut choices: Vec<Choice> = Vec::new();
    for (idx, p) in table.iter().enumerate() {
        if p.mos < ue.ctype.min_mos() {
            continue;
        }
        let weight = weight_for(p.send_rate, ue.channel.bits_per_prb).max(1);
        choices.push(Choice {
            profile_idx: idx,
            weight,
            mos: p.mos,
            send_rate: p.send_rate,
            call_drop: p.call_drop,
            raw_profit: 0.0,
        });
    }
    if choices.is_empty() {
        return Err(Error::InfeasibleSla {
            level: ue.ctype.level(),
            floor: ue.ctype.min_mos(),
        });
    }
    choices.sort_by(|a, b| (a.weight, ordered(a.mos)).partial_cmp(&(b.weight, ordered(b.mos))).unwrap());
    // dominance pruning: per weight keep the max mos, then drop any entry
    // not strictly better than its cheaper predecessor
    let mut pruned: Vec<Choice> = Vec::with_capacity(choices.len());
    for c in choices {
        if let Some(last) = pruned.last_mut() {
            if last.weight == c.weight {
                *last = c; // same cost, higher mos (sorted ascending)
                continue;
            }
            if c.mos <= last.mos {
                continue; // heavier but no better
            }
        }
        pruned.push(c);
    }
    let base_mos = pruned[0].mos;
    for c in &mut pruned {
        c.raw_profit = c.mos - base_mos;
    }
    Ok(ChoiceTable {
        ue_id: ue.id,
        ctype: ue.ctype,
        bits_per_prb: ue.channel.bits_per_prb,
        choices: pruned,
    })
}

fn ordered(x: f64) -> f64 {
    debug_assert!(!x.is_nan());
    x
}

/// Drops UEs until the remaining baselines fit the budget.
///
/// Removal order: lowest SLA tier first, then the largest baseline weight,
/// then the smallest id. Returns the admitted tables and the blocked ids.
pub fn admit(tables: Vec<ChoiceTable>, budget: u32) -> (Vec<ChoiceTable>, Vec<u32>) {
    let mut total: u64 = tables.iter().map(|t| u64::from(t.baseline().weight)).sum();
    if total <= u64::from(budget) {
        return (tables, Vec::new());
    }
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by_key(|&i| {
        let t = &tables[i];
        (t.ctype.level(), std::cmp::Reverse(t.baseline().weight), t.ue_id)
    });
    let mut evicted = vec![false; tables.len()];
    let mut blocked = Vec::new();
    for i in order {
        if total <= u64::from(budget) {
            break;
        }
        total -= u64::from(tables[i].baseline().weight);
        evicted[i] = true;
        blocked.push(tables[i].ue_id);
    }
    blocked.sort_unstable();
    let admitted = tables
        .into_iter()
        .zip(evicted)
        .filter_map(|(t, out)| (!out).then_some(t))
        .collect();
    (admitted, blocked)
}

/// Final choice of one UE after allocation.
#[derive(Debug, Clone, Copy)]
pub struct UeAssignment {
    pub ue_id: u32,
    pub ctype: ClientType,
    pub cqi_bits_per_prb: u32,
    pub choice: Choice,
}

/// Result of a per-cell allocation round.
#[derive(Debug, Clone)]
pub struct WirelessAllocation {
    pub assignments: Vec<UeAssignment>,
    pub total_prbs_used: u32,
    pub cumulative_mos: f64,
    pub blocked: Vec<u32>,
}

impl WirelessAllocation {
    fn from_choices(tables: &[ChoiceTable], picks: &[usize]) -> Self {
        let mut assignments = Vec::with_capacity(tables.len());
        let mut total = 0u32;
        let mut mos_sum = 0.0;
        for (t, &j) in tables.iter().zip(picks) {
            let c = t.choices[j];
            total += c.weight;
            mos_sum += c.mos;
            assignments.push(UeAssignment {
                ue_id: t.ue_id,
                ctype: t.ctype,
                cqi_bits_per_prb: t.bits_per_prb,
                choice: c,
            });
        }
        WirelessAllocation {
            assignments,
            total_prbs_used: total,
            cumulative_mos: mos_sum,
            blocked: Vec::new(),
        }
    }

    /// Sum of chosen send rates in Mbps (the backhaul this cell needs).
    pub fn send_rate_sum(&self) -> f64 {
        self.assignments.iter().map(|a| a.choice.send_rate).sum()
    }

    /// Sum of incremental profits over baselines.
    pub fn incremental_profit(&self) -> f64 {
        self.assignments.iter().map(|a| a.choice.raw_profit).sum()
    }
}

fn baseline_total(tables: &[ChoiceTable]) -> u32 {
    tables.iter().map(|t| t.baseline().weight).sum()
}

fn require_feasible_baselines(tables: &[ChoiceTable], budget: u32) -> Result<u32> {
    let needed = baseline_total(tables);
    if needed > budget {
        return Err(Error::BaselineInfeasible { needed, budget });
    }
    Ok(needed)
}

/// Best upgrade for UE `t` currently at choice `cur` with `slack` spare
/// PRBs: the highest-MoS choice whose extra cost fits.
fn best_fitting_upgrade(t: &ChoiceTable, cur: usize, slack: u32) -> Option<usize> {
    let cur_w = t.choices[cur].weight;
    (cur + 1..t.choices.len())
        .rev()
        .find(|&j| t.choices[j].weight - cur_w <= slack)
}

/// Modified round robin (application-aware).
///
/// Baselines first; then, starting from a uniformly random UE, cycle over
/// UEs upgrading each visited UE to the best choice the unallocated budget
/// still affords. A full cycle with no change terminates the loop.
pub fn mrr_allocate<R: Rng + ?Sized>(
    tables: &[ChoiceTable],
    budget: u32,
    rng: &mut R,
) -> Result<WirelessAllocation> {
    let used = require_feasible_baselines(tables, budget)?;
    let n = tables.len();
    let mut picks = vec![0usize; n];
    if n == 0 {
        return Ok(WirelessAllocation::from_choices(tables, &picks));
    }
    let mut slack = budget - used;
    let start = rng.random_range(0..n);
    loop {
        let mut changed = false;
        for step in 0..n {
            let i = (start + step) % n;
            if let Some(j) = best_fitting_upgrade(&tables[i], picks[i], slack) {
                slack -= tables[i].choices[j].weight - tables[i].choices[picks[i]].weight;
                picks[i] = j;
                changed = true;
            }
            if slack == 0 {
                break;
            }
        }
        if !changed || slack == 0 {
            break;
        }
        if picks.iter().zip(tables).all(|(&p, t)| p + 1 == t.choices.len()) {
            break; // everyone at max mos
        }
    }
    Ok(WirelessAllocation::from_choices(tables, &picks))
}

/// Water filling: UEs sorted by descending channel quality (ties by
/// ascending id), each raised once to the best choice that fits.
pub fn wf_allocate(tables: &[ChoiceTable], budget: u32) -> Result<WirelessAllocation> {
    let used = require_feasible_baselines(tables, budget)?;
    let mut picks = vec![0usize; tables.len()];
    let mut slack = budget - used;
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(tables[i].bits_per_prb), tables[i].ue_id));
    for i in order {
        if slack == 0 {
            break;
        }
        if let Some(j) = best_fitting_upgrade(&tables[i], picks[i], slack) {
            slack -= tables[i].choices[j].weight - tables[i].choices[picks[i]].weight;
            picks[i] = j;
        }
    }
    Ok(WirelessAllocation::from_choices(tables, &picks))
}

/// Multiple-choice knapsack by profit-scaled dynamic programming.
///
/// Profits are scaled by the Lawler factor `K = epsilon * p_max / n` and
/// floored to integers; the DP then finds, for every achievable scaled
/// profit `q`, the minimum PRBs `Y_i(q)` needed by the first `i` UEs, and
/// the answer is the largest `q` with `Y_n(q) <= budget`. The recovered
/// assignment is within `(1 - epsilon)` of the optimal incremental MoS.
pub fn mckp_allocate(tables: &[ChoiceTable], budget: u32, epsilon: f64) -> Result<WirelessAllocation> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Config(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let base_total = require_feasible_baselines(tables, budget)?;
    // p_max must come from the reachable choices only: scaling against an
    // unattainable profit would collapse every real profit to zero and void
    // the (1 - epsilon) guarantee.
    let slack = budget - base_total;
    let p_max = tables
        .iter()
        .flat_map(|t| {
            let base_w = t.baseline().weight;
            t.choices
                .iter()
                .filter(move |c| c.weight - base_w <= slack)
                .map(|c| c.raw_profit)
        })
        .fold(0.0f64, f64::max);
    let n = tables.len().max(1);
    let scale = if p_max > 0.0 {
        epsilon * p_max / n as f64
    } else {
        1.0 // all reachable profits zero; any positive resolution works
    };
    mckp_allocate_with_scale(tables, budget, scale)
}

/// The scaled-profit DP with an explicit scaling resolution.
///
/// With `profit_scale` dividing every raw profit exactly, the flooring is
/// lossless and the result is the true optimum.
pub fn mckp_allocate_with_scale(
    tables: &[ChoiceTable],
    budget: u32,
    profit_scale: f64,
) -> Result<WirelessAllocation> {
    if !(profit_scale > 0.0) {
        return Err(Error::Config(format!("profit scale {profit_scale} must be positive")));
    }
    let base_total = require_feasible_baselines(tables, budget)?;
    let n = tables.len();
    if n == 0 {
        return Ok(WirelessAllocation::from_choices(tables, &[]));
    }
    let slack = budget - base_total;

    // Per-UE items: (scaled profit, weight, choice index). Choices whose
    // extra cost can never fit the global slack are unreachable; dropping
    // them keeps every surviving item individually achievable, which the
    // (1 - epsilon) bound needs.
    let mut items: Vec<Vec<(u32, u32, usize)>> = Vec::with_capacity(n);
    for t in tables {
        let base_w = t.baseline().weight;
        let mut row = Vec::with_capacity(t.choices.len());
        for (j, c) in t.choices.iter().enumerate() {
            if c.weight - base_w > slack {
                break; // ladder is weight-sorted
            }
            row.push(((c.raw_profit / profit_scale).floor() as u32, c.weight, j));
        }
        items.push(row);
    }

    let upper: usize = items
        .iter()
        .map(|row| row.iter().map(|&(p, _, _)| p as usize).max().unwrap_or(0))
        .sum();
    let sentinel = budget + 1;

    // Y[q]: minimum total PRBs reaching scaled profit exactly q; pick[i][q]
    // records the item index used at stage i to reach q.
    let mut y = vec![sentinel; upper + 1];
    y[0] = 0;
    let mut pick: Vec<Vec<u8>> = Vec::with_capacity(n);
    for row in &items {
        if row.len() > usize::from(u8::MAX) {
            return Err(Error::Config(format!(
                "choice table with {} entries exceeds the DP item limit",
                row.len()
            )));
        }
        let mut next = vec![sentinel; upper + 1];
        let mut chosen = vec![u8::MAX; upper + 1];
        for q in 0..=upper {
            for &(p, w, j) in row {
                let p = p as usize;
                if p > q {
                    continue;
                }
                let prev = y[q - p];
                if prev == sentinel {
                    continue;
                }
                let cand = prev + w;
                if cand < next[q] {
                    next[q] = cand;
                    chosen[q] = j as u8;
                }
            }
        }
        y = next;
        pick.push(chosen);
    }

    let best_q = (0..=upper).rev().find(|&q| y[q] <= budget).ok_or(
        // unreachable: q = 0 (all baselines) always fits
        Error::BaselineInfeasible { needed: base_total, budget },
    )?;

    // Walk the stages backwards: pick[i][q] holds the item taken at stage
    // i when the cumulative scaled profit through stage i is q.
    let mut picks = vec![0usize; n];
    let mut q = best_q;
    for i in (0..n).rev() {
        let j = pick[i][q];
        debug_assert_ne!(j, u8::MAX, "backtrack hit an unreachable state");
        let j = usize::from(j);
        picks[i] = items[i][j].2;
        q -= items[i][j].0 as usize;
    }
    debug_assert_eq!(q, 0);

    Ok(WirelessAllocation::from_choices(tables, &picks))
}

/// Exhaustive optimum over one-choice-per-UE vectors within the budget.
///
/// Returns the maximum total incremental profit and the lexicographically
/// smallest assignment achieving it. Guarded against instances with more
/// than 10^7 vectors.
pub fn brute_force_oracle(tables: &[ChoiceTable], budget: u32) -> Result<(f64, Vec<usize>)> {
    let mut vectors: u128 = 1;
    for t in tables {
        vectors = vectors.saturating_mul(t.choices.len() as u128);
        if vectors > 10_000_000 {
            return Err(Error::InstanceTooLarge { vectors });
        }
    }
    require_feasible_baselines(tables, budget)?;
    let n = tables.len();
    let mut current = vec![0usize; n];
    let mut best_profit = f64::NEG_INFINITY;
    let mut best = vec![0usize; n];
    loop {
        let weight: u64 = tables
            .iter()
            .zip(&current)
            .map(|(t, &j)| u64::from(t.choices[j].weight))
            .sum();
        if weight <= u64::from(budget) {
            let profit: f64 = tables
                .iter()
                .zip(&current)
                .map(|(t, &j)| t.choices[j].raw_profit)
                .sum();
            // odometer order visits assignments in lexicographic order, so
            // a strict improvement keeps the lexicographically smallest argmax
            if profit > best_profit {
                best_profit = profit;
                best.copy_from_slice(&current);
            }
        }
        // advance the odometer
        let mut i = n;
        loop {
            if i == 0 {
                return Ok((best_profit.max(0.0), best));
            }
            i -= 1;
            current[i] += 1;
            if current[i] < tables[i].choices.len() {
                break;
            }
            current[i] = 0;
        }
    }
}
