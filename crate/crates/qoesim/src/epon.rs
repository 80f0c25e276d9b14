//! EPON downstream bandwidth allocation across wireless backhaul and wired
//! ONUs.
//!
//! Backhaul gets whatever the wireless allocation decided (`W_B`); every
//! ONU is then guaranteed the minimum bandwidth its clients' SLA floors
//! demand (`W_F` in total), and the excess `E - W_F - W_B` is shared by
//! policy:
//!
//! - [`eara_allocate`]: excess proportional to each ONU's average
//!   call-drop probability at its minimum profiles (application-aware).
//! - [`hpf_allocate`]: excess spent greedily on the highest-priority
//!   clients first, each jumped straight to its maximum-MoS profile
//!   (application-unaware).
//!
//! Grants are mapped back to per-client profiles by [`intra_onu_assign`].

use crate::error::{Error, Result};
use crate::qoe::{best_profile_within, min_profile_for_type, ClientType, VideoProfile};
use crate::wireless::WirelessAllocation;

/// A wired video client behind an ONU.
#[derive(Debug, Clone, Copy)]
pub struct WiredClient {
    pub id: u32,
    pub ctype: ClientType,
}

/// An ONU and the wired clients it serves.
#[derive(Debug, Clone)]
pub struct OnuState {
    pub id: u32,
    pub clients: Vec<WiredClient>,
}

/// How the EPON capacity splits for one allocation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EponBudget {
    /// Total downstream capacity E in Mbps.
    pub total: f64,
    /// Backhaul reservation W_B in Mbps.
    pub backhaul: f64,
    /// Sum of ONU minimums W_F in Mbps.
    pub wired_min: f64,
    /// E - W_F - W_B.
    pub excess: f64,
}

/// Final profile of one wired client.
#[derive(Debug, Clone, Copy)]
pub struct WiredAssignment {
    pub client_id: u32,
    pub ctype: ClientType,
    pub profile_idx: usize,
    pub send_rate: f64,
    pub mos: f64,
    pub call_drop: f64,
}

/// Outcome for one ONU: its grant and its clients' final profiles.
#[derive(Debug, Clone)]
pub struct OnuOutcome {
    pub onu_id: u32,
    pub min_bw: f64,
    pub granted_bw: f64,
    pub avg_mos: f64,
    pub avg_call_drop: f64,
    pub clients: Vec<WiredAssignment>,
}

/// Result of one EPON allocation round.
#[derive(Debug, Clone)]
pub struct EponAllocation {
    pub budget: EponBudget,
    pub onus: Vec<OnuOutcome>,
}

impl EponAllocation {
    /// Backhaul plus all ONU grants, for conservation checks.
    pub fn total_allocated(&self) -> f64 {
        self.budget.backhaul + self.onus.iter().map(|o| o.granted_bw).sum::<f64>()
    }
}

/// Backhaul demand of the wireless side: the sum of every admitted UE's
/// chosen send rate.
pub fn backhaul_demand(cells: &[WirelessAllocation]) -> f64 {
    cells.iter().map(|c| c.send_rate_sum()).sum()
}

/// Guaranteed minimum bandwidth of an ONU: the cheapest SLA-satisfying
/// profile of each client, summed.
pub fn onu_min_bw(onu: &OnuState, table: &[VideoProfile]) -> Result<f64> {
    let mut total = 0.0;
    for c in &onu.clients {
        total += min_profile_for_type(table, c.ctype)?.send_rate;
    }
    Ok(total)
}

/// Distributes one ONU's grant over its clients.
///
/// Clients start at their minimum profiles; the leftover is spent visiting
/// clients by descending SLA tier (ties by ascending id), each upgraded to
/// the best profile whose extra send rate still fits.
pub fn intra_onu_assign(onu: &OnuState, grant: f64, table: &[VideoProfile]) -> Result<OnuOutcome> {
    let min_bw = onu_min_bw(onu, table)?;
    if grant < min_bw - 1e-9 {
        return Err(Error::GrantBelowMinimum { grant, min: min_bw });
    }
    let mut assignments: Vec<WiredAssignment> = Vec::with_capacity(onu.clients.len());
    for c in &onu.clients {
        let p = min_profile_for_type(table, c.ctype)?;
        let profile_idx = table.iter().position(|x| x == p).unwrap();
        assignments.push(WiredAssignment {
            client_id: c.id,
            ctype: c.ctype,
            profile_idx,
            send_rate: p.send_rate,
            mos: p.mos,
            call_drop: p.call_drop,
        });
    }
    let mut leftover = grant - min_bw;
    let mut order: Vec<usize> = (0..assignments.len()).collect();
    order.sort_by_key(|&i| {
        (
            std::cmp::Reverse(assignments[i].ctype.level()),
            assignments[i].client_id,
        )
    });
    for i in order {
        let cur = assignments[i];
        if let Some(p) = best_profile_within(table, cur.send_rate + leftover, cur.ctype) {
            if p.mos > cur.mos {
                leftover -= p.send_rate - cur.send_rate;
                let profile_idx = table.iter().position(|x| x == p).unwrap();
                assignments[i] = WiredAssignment {
                    client_id: cur.client_id,
                    ctype: cur.ctype,
                    profile_idx,
                    send_rate: p.send_rate,
                    mos: p.mos,
                    call_drop: p.call_drop,
                };
            }
        }
    }
    Ok(finish_onu(onu.id, min_bw, grant, assignments))
}

fn finish_onu(
    onu_id: u32,
    min_bw: f64,
    granted_bw: f64,
    clients: Vec<WiredAssignment>,
) -> OnuOutcome {
    let n = clients.len().max(1) as f64;
    let avg_mos = clients.iter().map(|c| c.mos).sum::<f64>() / n;
    let avg_call_drop = clients.iter().map(|c| c.call_drop).sum::<f64>() / n;
    OnuOutcome {
        onu_id,
        min_bw,
        granted_bw,
        avg_mos,
        avg_call_drop,
        clients,
    }
}

fn budget_for(onus: &[OnuState], total: f64, backhaul: f64, table: &[VideoProfile]) -> Result<(EponBudget, Vec<f64>)> {
    let mins: Vec<f64> = onus
        .iter()
        .map(|o| onu_min_bw(o, table))
        .collect::<Result<_>>()?;
    let wired_min: f64 = mins.iter().sum();
    let excess = total - wired_min - backhaul;
    if excess < -1e-9 {
        return Err(Error::CapacityInfeasible { shortfall: -excess });
    }
    Ok((
        EponBudget {
            total,
            backhaul,
            wired_min,
            excess: excess.max(0.0),
        },
        mins,
    ))
}

/// EPON application-aware resource allocation.
///
/// Minimum grants first; the average call-drop probability of each ONU at
/// those minimums then weights one proportional split of the excess (an
/// all-zero drop vector degenerates to an equal split). The redistribution
/// runs exactly once.
pub fn eara_allocate(
    onus: &[OnuState],
    total_mbps: f64,
    backhaul_mbps: f64,
    table: &[VideoProfile],
) -> Result<EponAllocation> {
    let (budget, mins) = budget_for(onus, total_mbps, backhaul_mbps, table)?;
    // call drops at the provisional minimum-profile assignment
    let drops: Vec<f64> = onus
        .iter()
        .zip(&mins)
        .map(|(o, &m)| intra_onu_assign(o, m, table).map(|out| out.avg_call_drop))
        .collect::<Result<_>>()?;
    let drop_sum: f64 = drops.iter().sum();
    let n = onus.len().max(1) as f64;
    let mut outcomes = Vec::with_capacity(onus.len());
    for ((onu, &min_bw), &drop) in onus.iter().zip(&mins).zip(&drops) {
        let share = if drop_sum > 0.0 {
            budget.excess * drop / drop_sum
        } else {
            budget.excess / n
        };
        outcomes.push(intra_onu_assign(onu, min_bw + share, table)?);
    }
    Ok(EponAllocation {
        budget,
        onus: outcomes,
    })
}

/// Highest-priority-first allocation.
///
/// Minimum grants as in EARA; the excess is then offered to clients across
/// all ONUs in descending SLA tier (ties by ascending client id), each
/// jumped to its maximum-MoS profile when the incremental send rate fits.
pub fn hpf_allocate(
    onus: &[OnuState],
    total_mbps: f64,
    backhaul_mbps: f64,
    table: &[VideoProfile],
) -> Result<EponAllocation> {
    let (budget, mins) = budget_for(onus, total_mbps, backhaul_mbps, table)?;
    // start everyone at minimums
    let mut outcomes: Vec<OnuOutcome> = onus
        .iter()
        .zip(&mins)
        .map(|(o, &m)| intra_onu_assign(o, m, table))
        .collect::<Result<_>>()?;
    // global priority pass over (onu, client)
    let mut visit: Vec<(usize, usize)> = Vec::new();
    for (oi, out) in outcomes.iter().enumerate() {
        for ci in 0..out.clients.len() {
            visit.push((oi, ci));
        }
    }
    visit.sort_by_key(|&(oi, ci)| {
        let c = &outcomes[oi].clients[ci];
        (std::cmp::Reverse(c.ctype.level()), c.client_id)
    });
    let mut excess = budget.excess;
    for (oi, ci) in visit {
        if excess <= 0.0 {
            break;
        }
        let cur = outcomes[oi].clients[ci];
        let Some(top) = best_profile_within(table, f64::INFINITY, cur.ctype) else {
            continue;
        };
        let step = top.send_rate - cur.send_rate;
        if step <= 0.0 || step > excess + 1e-12 {
            continue;
        }
        excess -= step;
        let profile_idx = table.iter().position(|x| x == top).unwrap();
        outcomes[oi].clients[ci] = WiredAssignment {
            client_id: cur.client_id,
            ctype: cur.ctype,
            profile_idx,
            send_rate: top.send_rate,
            mos: top.mos,
            call_drop: top.call_drop,
        };
        outcomes[oi].granted_bw += step;
    }
    for out in &mut outcomes {
        let refreshed = finish_onu(
            out.onu_id,
            out.min_bw,
            out.granted_bw,
            std::mem::take(&mut out.clients),
        );
        *out = refreshed;
    }
    Ok(EponAllocation {
        budget,
        onus: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qoe::{build_profile_table, ApplicationSpec, DEFAULT_FEC};
    use crate::wireless::{build_choice_table, wf_allocate, UeState};

    fn skype() -> Vec<VideoProfile> {
        build_profile_table(&ApplicationSpec::skype(), DEFAULT_FEC).unwrap()
    }

    fn onu(id: u32, types: &[ClientType]) -> OnuState {
        OnuState {
            id,
            clients: types
                .iter()
                .enumerate()
                .map(|(i, &ctype)| WiredClient {
                    id: id * 100 + i as u32,
                    ctype,
                })
                .collect(),
        }
    }

    #[test]
    fn backhaul_demand_sums_chosen_send_rates() {
        assert_eq!(backhaul_demand(&[]), 0.0);
        let table = skype();
        // one cell, two UEs pinned at the 5.12 and 1.28 Mbps profiles
        let assignments: Vec<_> = [(0u32, 5.12f64), (1, 1.28)]
            .iter()
            .map(|&(id, send)| {
                let idx = table
                    .iter()
                    .position(|p| (p.send_rate - send).abs() < 0.01)
                    .unwrap();
                crate::wireless::UeAssignment {
                    ue_id: id,
                    ctype: ClientType::Type1,
                    cqi_bits_per_prb: 933,
                    choice: crate::wireless::Choice {
                        profile_idx: idx,
                        weight: 1,
                        mos: table[idx].mos,
                        send_rate: table[idx].send_rate,
                        call_drop: table[idx].call_drop,
                        raw_profit: 0.0,
                    },
                }
            })
            .collect();
        let alloc = crate::wireless::WirelessAllocation {
            total_prbs_used: 2,
            cumulative_mos: assignments.iter().map(|a| a.choice.mos).sum(),
            blocked: vec![],
            assignments,
        };
        let demand = backhaul_demand(std::slice::from_ref(&alloc));
        assert!((demand - 6.40).abs() < 0.01, "got {demand}");
        // linearity: two identical cells double the demand
        let twice = backhaul_demand(&[alloc.clone(), alloc]);
        assert!((twice - 2.0 * demand).abs() < 1e-12);
    }

    #[test]
    fn onu_min_bw_matches_table_lookups() {
        let table = skype();
        let o = onu(1, &[ClientType::Type1, ClientType::Type2, ClientType::Type3]);
        let min = onu_min_bw(&o, &table).unwrap();
        assert!((min - 2.24).abs() < 0.02, "0.32+0.64+1.28, got {min}");
        let empty = OnuState { id: 2, clients: vec![] };
        assert_eq!(onu_min_bw(&empty, &table).unwrap(), 0.0);
    }

    #[test]
    fn intra_onu_minimum_grant_pins_minimum_profiles() {
        let table = skype();
        let o = onu(1, &[ClientType::Type1, ClientType::Type3]);
        let min = onu_min_bw(&o, &table).unwrap();
        let out = intra_onu_assign(&o, min, &table).unwrap();
        for c in &out.clients {
            let floor = min_profile_for_type(&table, c.ctype).unwrap();
            assert_eq!(c.send_rate, floor.send_rate);
        }
        assert!(intra_onu_assign(&o, min - 0.1, &table).is_err());
    }

    #[test]
    fn intra_onu_one_mbps_picks_the_qvga_15fps_row() {
        let table = skype();
        let o = onu(1, &[ClientType::Type1]);
        let out = intra_onu_assign(&o, 1.0, &table).unwrap();
        let c = &out.clients[0];
        let p = &table[c.profile_idx];
        assert_eq!(
            (p.resolution.width, p.resolution.height, p.fps),
            (160, 120, 15.0)
        );
        assert!((p.send_rate - 0.96).abs() < 0.01);
    }

    #[test]
    fn intra_onu_unbounded_grant_maxes_a_single_client() {
        let table = skype();
        let o = onu(1, &[ClientType::Type2]);
        let out = intra_onu_assign(&o, 100.0, &table).unwrap();
        let top = best_profile_within(&table, f64::INFINITY, ClientType::Type2).unwrap();
        assert_eq!(out.clients[0].mos, top.mos);
    }

    #[test]
    fn eara_zero_excess_grants_minimums() {
        let table = skype();
        let onus = vec![onu(1, &[ClientType::Type1]), onu(2, &[ClientType::Type3])];
        let wf: f64 = onus.iter().map(|o| onu_min_bw(o, &table).unwrap()).sum();
        let alloc = eara_allocate(&onus, wf + 5.0, 5.0, &table).unwrap();
        assert!(alloc.budget.excess.abs() < 1e-9);
        for o in &alloc.onus {
            assert!((o.granted_bw - o.min_bw).abs() < 1e-9);
        }
    }

    #[test]
    fn eara_splits_excess_proportionally_to_drops() {
        let table = skype();
        // type-1 minimum (mos ~3.11) has a much higher drop than type-3's
        let onus = vec![onu(1, &[ClientType::Type1]), onu(2, &[ClientType::Type3])];
        let mins: Vec<f64> = onus.iter().map(|o| onu_min_bw(o, &table).unwrap()).collect();
        let drops: Vec<f64> = onus
            .iter()
            .zip(&mins)
            .map(|(o, &m)| intra_onu_assign(o, m, &table).unwrap().avg_call_drop)
            .collect();
        let excess = 3.0;
        let total = mins.iter().sum::<f64>() + excess;
        let alloc = eara_allocate(&onus, total, 0.0, &table).unwrap();
        let dsum: f64 = drops.iter().sum();
        for (o, (&m, &d)) in alloc.onus.iter().zip(mins.iter().zip(&drops)) {
            let expect = m + excess * d / dsum;
            assert!(
                ((o.granted_bw - expect) / expect).abs() < 1e-6,
                "grant {} expected {expect}",
                o.granted_bw
            );
        }
    }

    #[test]
    fn eara_equal_split_when_nobody_drops() {
        let table = skype();
        // a type-2 client's cheapest profile at mos >= 4.5 does not exist, so
        // force zero drops by using clients already at the zero-drop region:
        // the cheapest type-3 profile has mos ~4.19 (drop > 0), so instead
        // check the degenerate rule with an empty-drop construction: two ONUs
        // with zero clients each.
        let onus = vec![
            OnuState { id: 1, clients: vec![] },
            OnuState { id: 2, clients: vec![] },
        ];
        let alloc = eara_allocate(&onus, 10.0, 0.0, &table).unwrap();
        assert_eq!(alloc.onus[0].granted_bw, alloc.onus[1].granted_bw);
        assert!((alloc.onus[0].granted_bw - 5.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_shortfall_is_reported() {
        let table = skype();
        let onus = vec![onu(1, &[ClientType::Type3])];
        let err = eara_allocate(&onus, 1.0, 0.5, &table).unwrap_err();
        match err {
            Error::CapacityInfeasible { shortfall } => {
                assert!((shortfall - (1.28 + 0.5 - 1.0)).abs() < 0.02, "got {shortfall}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn hpf_upgrades_the_highest_tier_first() {
        let table = skype();
        let onus = vec![onu(1, &[ClientType::Type1]), onu(2, &[ClientType::Type3])];
        let mins: f64 = onus.iter().map(|o| onu_min_bw(o, &table).unwrap()).sum();
        // excess covers exactly the type-3 jump to max (28.672 - 1.28)
        let t3_step = best_profile_within(&table, f64::INFINITY, ClientType::Type3)
            .unwrap()
            .send_rate
            - 1.28;
        let alloc = hpf_allocate(&onus, mins + t3_step + 0.01, 0.0, &table).unwrap();
        let t3 = &alloc.onus[1].clients[0];
        let t1 = &alloc.onus[0].clients[0];
        assert!((t3.mos - 4.7308).abs() < 0.01, "type 3 maxed, got {}", t3.mos);
        let t1_floor = min_profile_for_type(&table, ClientType::Type1).unwrap();
        assert_eq!(t1.send_rate, t1_floor.send_rate, "type 1 starved");
    }

    #[test]
    fn hpf_zero_excess_equals_eara_zero_excess() {
        let table = skype();
        let onus = vec![onu(1, &[ClientType::Type2, ClientType::Type1])];
        let mins: f64 = onus.iter().map(|o| onu_min_bw(o, &table).unwrap()).sum();
        let a = eara_allocate(&onus, mins, 0.0, &table).unwrap();
        let b = hpf_allocate(&onus, mins, 0.0, &table).unwrap();
        for (x, y) in a.onus.iter().zip(&b.onus) {
            assert_eq!(x.granted_bw, y.granted_bw);
            for (cx, cy) in x.clients.iter().zip(&y.clients) {
                assert_eq!(cx.profile_idx, cy.profile_idx);
            }
        }
    }

    #[test]
    fn hpf_unbounded_excess_maxes_everyone() {
        let table = skype();
        let onus = vec![onu(1, &[ClientType::Type1, ClientType::Type2, ClientType::Type3])];
        let alloc = hpf_allocate(&onus, 1e6, 0.0, &table).unwrap();
        for c in &alloc.onus[0].clients {
            let top = best_profile_within(&table, f64::INFINITY, c.ctype).unwrap();
            assert_eq!(c.mos, top.mos);
        }
    }

    #[test]
    fn floors_hold_under_both_policies() {
        let table = skype();
        let onus = vec![
            onu(1, &[ClientType::Type1, ClientType::Type1, ClientType::Type2]),
            onu(2, &[ClientType::Type3, ClientType::Type2]),
            onu(3, &[ClientType::Type1, ClientType::Type3]),
        ];
        let mins: f64 = onus.iter().map(|o| onu_min_bw(o, &table).unwrap()).sum();
        for excess in [0.0, 1.0, 7.5, 40.0] {
            for alloc in [
                eara_allocate(&onus, mins + excess, 0.0, &table).unwrap(),
                hpf_allocate(&onus, mins + excess, 0.0, &table).unwrap(),
            ] {
                for o in &alloc.onus {
                    for c in &o.clients {
                        assert!(c.mos >= c.ctype.min_mos());
                    }
                }
                assert!(alloc.total_allocated() <= mins + excess + 1e-9);
            }
        }
    }
}
