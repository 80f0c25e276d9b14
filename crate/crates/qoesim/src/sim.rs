//! End-to-end scenario runs: seeded channel draws, per-cell PRB
//! scheduling, EPON capacity sharing, and metric aggregation.
//!
//! A run is deterministic given its config (seed included): placement and
//! client types come from one stream, fading from a second, and the MRR
//! start indices from a third, so switching the allocation algorithm or
//! the application never perturbs the channel trace.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{observe, ChannelConfig};
use crate::epon::{backhaul_demand, eara_allocate, hpf_allocate, OnuState, WiredClient};
use crate::error::{Error, Result};
use crate::qoe::{build_profile_table, ApplicationSpec, ClientType};
use crate::wireless::{
    admit, build_choice_table, mckp_allocate, mrr_allocate, wf_allocate, UeState,
    WirelessAllocation,
};

/// Offered-load level: how many clients contend for the fixed budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Load {
    Low,
    Medium,
    High,
}

impl Load {
    pub const ALL: [Load; 3] = [Load::Low, Load::Medium, Load::High];

    pub fn ues_per_cell(self) -> u32 {
        match self {
            Load::Low => 5,
            Load::Medium => 10,
            Load::High => 15,
        }
    }

    pub fn wired_clients_per_onu(self) -> u32 {
        match self {
            Load::Low => 4,
            Load::Medium => 8,
            Load::High => 12,
        }
    }
}

impl std::fmt::Display for Load {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Load::Low => "low",
            Load::Medium => "medium",
            Load::High => "high",
        })
    }
}

impl std::str::FromStr for Load {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Load::Low),
            "medium" => Ok(Load::Medium),
            "high" => Ok(Load::High),
            other => Err(Error::Config(format!("unknown load '{other}'"))),
        }
    }
}

/// Wireless PRB allocation algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WirelessAlg {
    Mrr,
    Wf,
    Mckp,
}

impl std::fmt::Display for WirelessAlg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WirelessAlg::Mrr => "mrr",
            WirelessAlg::Wf => "wf",
            WirelessAlg::Mckp => "mckp",
        })
    }
}

impl std::str::FromStr for WirelessAlg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrr" => Ok(WirelessAlg::Mrr),
            "wf" => Ok(WirelessAlg::Wf),
            "mckp" => Ok(WirelessAlg::Mckp),
            other => Err(Error::Config(format!("unknown wireless algorithm '{other}'"))),
        }
    }
}

/// EPON excess-distribution policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EponAlg {
    Eara,
    Hpf,
}

impl std::fmt::Display for EponAlg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EponAlg::Eara => "eara",
            EponAlg::Hpf => "hpf",
        })
    }
}

impl std::str::FromStr for EponAlg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eara" => Ok(EponAlg::Eara),
            "hpf" => Ok(EponAlg::Hpf),
            other => Err(Error::Config(format!("unknown epon algorithm '{other}'"))),
        }
    }
}

fn default_cells() -> u32 {
    5
}
fn default_wired_onus() -> u32 {
    3
}
fn default_prbs() -> u32 {
    100
}
fn default_epon_capacity() -> f64 {
    10_000.0
}
fn default_load() -> Load {
    Load::Medium
}
fn default_type_mix() -> [f64; 3] {
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
}
fn default_app() -> String {
    "skype".into()
}
fn default_wireless_alg() -> WirelessAlg {
    WirelessAlg::Mckp
}
fn default_epon_alg() -> EponAlg {
    EponAlg::Eara
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_ttis() -> u32 {
    20
}
fn default_seed() -> u64 {
    1
}
fn default_fec() -> f64 {
    crate::qoe::DEFAULT_FEC
}
fn default_distance_range() -> (f64, f64) {
    (0.05, 1.0)
}
fn default_backhaul_overhead() -> f64 {
    1.0
}

/// Full description of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Wireless base stations, each co-located with an ONU.
    #[serde(default = "default_cells")]
    pub cells: u32,
    /// ONUs serving wired clients only.
    #[serde(default = "default_wired_onus")]
    pub wired_onus: u32,
    /// PRB budget per cell per TTI (100 at 20 MHz).
    #[serde(default = "default_prbs")]
    pub prbs_per_cell: u32,
    /// EPON downstream capacity E in Mbps.
    #[serde(default = "default_epon_capacity")]
    pub epon_capacity_mbps: f64,
    #[serde(default = "default_load")]
    pub load: Load,
    /// Overrides the load level's UEs per cell when set.
    #[serde(default)]
    pub ues_per_cell: Option<u32>,
    /// Overrides the load level's wired clients per ONU when set.
    #[serde(default)]
    pub wired_clients_per_onu: Option<u32>,
    /// Probability of a client being type 1, 2, 3; must sum to 1.
    #[serde(default = "default_type_mix")]
    pub type_mix: [f64; 3],
    #[serde(default = "default_app")]
    pub app: String,
    #[serde(default = "default_wireless_alg")]
    pub wireless_algorithm: WirelessAlg,
    #[serde(default = "default_epon_alg")]
    pub epon_algorithm: EponAlg,
    /// MCKP approximation factor.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ttis")]
    pub ttis: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fec")]
    pub fec: f64,
    #[serde(default)]
    pub channel: ChannelConfig,
    /// UE placement range in km, sampled uniformly per run.
    #[serde(default = "default_distance_range")]
    pub distance_range_km: (f64, f64),
    /// Multiplier on the backhaul demand (PHY overhead knob).
    #[serde(default = "default_backhaul_overhead")]
    pub backhaul_overhead: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 || self.wired_onus == 0 || self.prbs_per_cell == 0 {
            return Err(Error::Config("cells, wired_onus, and prbs_per_cell must be positive".into()));
        }
        if self.effective_ues_per_cell() == 0 || self.effective_wired_per_onu() == 0 {
            return Err(Error::Config("client counts must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon {} outside (0, 1]", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.fec) {
            return Err(Error::Config(format!("fec {} outside [0, 1)", self.fec)));
        }
        let mix_sum: f64 = self.type_mix.iter().sum();
        if self.type_mix.iter().any(|&p| p < 0.0) || (mix_sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("type_mix {:?} must be non-negative and sum to 1", self.type_mix)));
        }
        let (lo, hi) = self.distance_range_km;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("distance range ({lo}, {hi}) km is invalid")));
        }
        if self.backhaul_overhead < 1.0 {
            return Err(Error::Config("backhaul_overhead must be at least 1".into()));
        }
        if self.epon_capacity_mbps <= 0.0 {
            return Err(Error::Config("epon_capacity_mbps must be positive".into()));
        }
        self.channel.validate()?;
        ApplicationSpec::for_name(&self.app)?;
        Ok(())
    }

    pub fn effective_ues_per_cell(&self) -> u32 {
        self.ues_per_cell.unwrap_or_else(|| self.load.ues_per_cell())
    }

    pub fn effective_wired_per_onu(&self) -> u32 {
        self.wired_clients_per_onu
            .unwrap_or_else(|| self.load.wired_clients_per_onu())
    }

    /// Stable identifier used as the CSV `run_id`.
    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-{}-{}-s{}",
            self.app, self.load, self.wireless_algorithm, self.epon_algorithm, self.seed
        )
    }
}

/// Which side of the access network a metric row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Wireless,
    Wired,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Wireless => "wireless",
            Domain::Wired => "wired",
        })
    }
}

/// Per-(domain, client type) aggregate over a whole run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TypeAggregate {
    pub domain: Domain,
    pub ctype: ClientType,
    pub mean_mos: f64,
    pub mean_call_drop: f64,
    /// Mean PRBs per client-TTI (wireless) or mean granted Mbps (wired).
    pub mean_resource: f64,
    pub samples: u64,
}

/// Everything a run reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub ttis: u32,
    /// Sum of admitted wireless clients' MoS, per TTI.
    pub per_tti_cumulative_mos: Vec<f64>,
    pub mean_cumulative_mos: f64,
    /// Sum of admitted wireless clients' call-drop probabilities, averaged
    /// over TTIs.
    pub mean_cumulative_call_drop: f64,
    /// Six rows: wireless and wired, types 1..3, in that order.
    pub per_type: Vec<TypeAggregate>,
    /// Blocked UE-TTIs over the whole run.
    pub blocked_total: u64,
    pub mean_sched_time_us: f64,
    /// Conservation witnesses, maxima over all TTIs.
    pub max_cell_prbs_used: u32,
    pub max_epon_allocated_mbps: f64,
    pub max_epon_identity_residual: f64,
    /// Smallest (mos - SLA floor) over every served client in the run.
    pub min_sla_margin: f64,
}

fn draw_type<R: Rng + ?Sized>(mix: &[f64; 3], rng: &mut R) -> ClientType {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in mix.iter().enumerate() {
        acc += p;
        if x < acc {
            return ClientType::ALL[i];
        }
    }
    ClientType::Type3
}

struct Accumulator {
    mos_sum: f64,
    drop_sum: f64,
    resource_sum: f64,
    samples: u64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            mos_sum: 0.0,
            drop_sum: 0.0,
            resource_sum: 0.0,
            samples: 0,
        }
    }

    fn push(&mut self, mos: f64, drop: f64, resource: f64) {
        self.mos_sum += mos;
        self.drop_sum += drop;
        self.resource_sum += resource;
        self.samples += 1;
    }

    fn aggregate(&self, domain: Domain, ctype: ClientType) -> TypeAggregate {
        let n = self.samples.max(1) as f64;
        TypeAggregate {
            domain,
            ctype,
            mean_mos: self.mos_sum / n,
            mean_call_drop: self.drop_sum / n,
            mean_resource: self.resource_sum / n,
            samples: self.samples,
        }
    }
}

/// Per-TTI traces of a run, for CSV export.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    /// (tti, ue_id, snr_db, cqi, bits_per_prb)
    pub channel: Vec<(u32, u32, f64, u8, u32)>,
    /// (tti, cell, ue_id, ctype, cqi bits/prb, prbs, mos)
    pub wireless: Vec<(u32, u32, u32, ClientType, u32, u32, f64)>,
    /// (tti, onu, client, ctype, granted_bw, mos, call_drop)
    pub epon: Vec<(u32, u32, u32, ClientType, f64, f64, f64)>,
}

impl RunTrace {
    pub fn channel_csv(&self) -> String {
        let mut out = String::from("tti,ue_id,snr_db,cqi,bits_per_prb\n");
        for &(tti, ue, snr, cqi, bits) in &self.channel {
            out.push_str(&format!("{tti},{ue},{snr:.4},{cqi},{bits}\n"));
        }
        out
    }

    pub fn wireless_csv(&self) -> String {
        let mut out = String::from("tti,cell,ue,ctype,bits_per_prb,prbs,mos\n");
        for &(tti, cell, ue, ctype, bits, prbs, mos) in &self.wireless {
            out.push_str(&format!("{tti},{cell},{ue},{ctype},{bits},{prbs},{mos:.4}\n"));
        }
        out
    }

    pub fn epon_csv(&self) -> String {
        let mut out = String::from("tti,onu,client,ctype,granted_bw,mos,call_drop\n");
        for &(tti, onu, client, ctype, bw, mos, drop) in &self.epon {
            out.push_str(&format!("{tti},{onu},{client},{ctype},{bw:.4},{mos:.4},{drop:.4}\n"));
        }
        out
    }
}

/// Runs one scenario end to end.
pub fn run(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    run_internal(cfg, None)
}

/// Like [`run`], also collecting per-TTI CSV traces.
pub fn run_traced(cfg: &ScenarioConfig) -> Result<(RunMetrics, RunTrace)> {
    let mut trace = RunTrace::default();
    let metrics = run_internal(cfg, Some(&mut trace))?;
    Ok((metrics, trace))
}

fn run_internal(cfg: &ScenarioConfig, mut trace: Option<&mut RunTrace>) -> Result<RunMetrics> {
    cfg.validate()?;
    let app = ApplicationSpec::for_name(&cfg.app)?;
    let table = build_profile_table(&app, cfg.fec)?;

    // independent streams so the channel trace is invariant to the
    // algorithm choice and the application
    let mut setup_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fading_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut sched_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6A09_E667_F3BC_C908);

    let ues_per_cell = cfg.effective_ues_per_cell();
    let (d_lo, d_hi) = cfg.distance_range_km;
    // (cell, ue) -> (id, type, distance)
    let mut ue_plan: Vec<Vec<(u32, ClientType, f64)>> = Vec::with_capacity(cfg.cells as usize);
    for cell in 0..cfg.cells {
        let mut ues = Vec::with_capacity(ues_per_cell as usize);
        for u in 0..ues_per_cell {
            let distance = if d_hi > d_lo {
                setup_rng.random_range(d_lo..=d_hi)
            } else {
                d_lo
            };
            let ctype = draw_type(&cfg.type_mix, &mut setup_rng);
            ues.push((cell * 1000 + u, ctype, distance));
        }
        ue_plan.push(ues);
    }
    let onus: Vec<OnuState> = (0..cfg.wired_onus)
        .map(|o| OnuState {
            id: o,
            clients: (0..cfg.effective_wired_per_onu())
                .map(|c| WiredClient {
                    id: o * 1000 + c,
                    ctype: draw_type(&cfg.type_mix, &mut setup_rng),
                })
                .collect(),
        })
        .collect();

    let mut per_tti_cumulative_mos = Vec::with_capacity(cfg.ttis as usize);
    let mut drop_per_tti_sum = 0.0;
    let mut wireless_acc: Vec<Accumulator> = (0..3).map(|_| Accumulator::new()).collect();
    let mut wired_acc: Vec<Accumulator> = (0..3).map(|_| Accumulator::new()).collect();
    let mut blocked_total = 0u64;
    let mut sched_time_us_sum = 0.0;
    let mut max_cell_prbs_used = 0u32;
    let mut max_epon_allocated = 0.0f64;
    let mut max_identity_residual = 0.0f64;
    let mut min_sla_margin = f64::INFINITY;

    for tti in 0..cfg.ttis {
        // channel observations first, in a fixed order
        let mut cell_ues: Vec<Vec<UeState>> = Vec::with_capacity(ue_plan.len());
        for ues in &ue_plan {
            let mut states = Vec::with_capacity(ues.len());
            for &(id, ctype, distance) in ues {
                let channel = observe(&cfg.channel, distance, &mut fading_rng)
                    .map_err(|e| e.at_tti(tti))?;
                if let Some(t) = trace.as_deref_mut() {
                    t.channel
                        .push((tti, id, channel.snr_db, channel.cqi, channel.bits_per_prb));
                }
                states.push(UeState { id, ctype, channel });
            }
            cell_ues.push(states);
        }

        let started = Instant::now();
        let mut cell_allocs: Vec<WirelessAllocation> = Vec::with_capacity(cell_ues.len());
        for ues in &cell_ues {
            let mut tables = Vec::with_capacity(ues.len());
            let mut blocked = Vec::new();
            for ue in ues {
                if ue.channel.bits_per_prb == 0 {
                    blocked.push(ue.id); // unservable this TTI
                    continue;
                }
                tables.push(build_choice_table(ue, &table).map_err(|e| e.at_tti(tti))?);
            }
            let (admitted, evicted) = admit(tables, cfg.prbs_per_cell);
            blocked.extend(evicted);
            let mut alloc = match cfg.wireless_algorithm {
                WirelessAlg::Mrr => mrr_allocate(&admitted, cfg.prbs_per_cell, &mut sched_rng),
                WirelessAlg::Wf => wf_allocate(&admitted, cfg.prbs_per_cell),
                WirelessAlg::Mckp => mckp_allocate(&admitted, cfg.prbs_per_cell, cfg.epsilon),
            }
            .map_err(|e| e.at_tti(tti))?;
            blocked.sort_unstable();
            alloc.blocked = blocked;
            cell_allocs.push(alloc);
        }

        let backhaul = backhaul_demand(&cell_allocs) * cfg.backhaul_overhead;
        let epon = match cfg.epon_algorithm {
            EponAlg::Eara => eara_allocate(&onus, cfg.epon_capacity_mbps, backhaul, &table),
            EponAlg::Hpf => hpf_allocate(&onus, cfg.epon_capacity_mbps, backhaul, &table),
        }
        .map_err(|e| e.at_tti(tti))?;
        sched_time_us_sum += started.elapsed().as_secs_f64() * 1e6;

        // metrics
        let mut tti_mos = 0.0;
        for (cell, alloc) in cell_allocs.iter().enumerate() {
            max_cell_prbs_used = max_cell_prbs_used.max(alloc.total_prbs_used);
            blocked_total += alloc.blocked.len() as u64;
            tti_mos += alloc.cumulative_mos;
            for a in &alloc.assignments {
                drop_per_tti_sum += a.choice.call_drop;
                let idx = usize::from(a.ctype.level()) - 1;
                wireless_acc[idx].push(a.choice.mos, a.choice.call_drop, f64::from(a.choice.weight));
                min_sla_margin = min_sla_margin.min(a.choice.mos - a.ctype.min_mos());
                if let Some(t) = trace.as_deref_mut() {
                    t.wireless.push((
                        tti,
                        cell as u32,
                        a.ue_id,
                        a.ctype,
                        a.cqi_bits_per_prb,
                        a.choice.weight,
                        a.choice.mos,
                    ));
                }
            }
        }
        per_tti_cumulative_mos.push(tti_mos);

        max_epon_allocated = max_epon_allocated.max(epon.total_allocated());
        let identity = (epon.budget.excess
            - (cfg.epon_capacity_mbps - epon.budget.wired_min - epon.budget.backhaul))
            .abs();
        max_identity_residual = max_identity_residual.max(identity);
        for onu in &epon.onus {
            for c in &onu.clients {
                let idx = usize::from(c.ctype.level()) - 1;
                wired_acc[idx].push(c.mos, c.call_drop, c.send_rate);
                min_sla_margin = min_sla_margin.min(c.mos - c.ctype.min_mos());
                if let Some(t) = trace.as_deref_mut() {
                    t.epon
                        .push((tti, onu.onu_id, c.client_id, c.ctype, onu.granted_bw, c.mos, c.call_drop));
                }
            }
        }
    }

    let ttis = cfg.ttis.max(1) as f64;
    let mut per_type = Vec::with_capacity(6);
    for (i, t) in ClientType::ALL.iter().enumerate() {
        per_type.push(wireless_acc[i].aggregate(Domain::Wireless, *t));
    }
    for (i, t) in ClientType::ALL.iter().enumerate() {
        per_type.push(wired_acc[i].aggregate(Domain::Wired, *t));
    }
    Ok(RunMetrics {
        ttis: cfg.ttis,
        mean_cumulative_mos: per_tti_cumulative_mos.iter().sum::<f64>() / ttis,
        mean_cumulative_call_drop: drop_per_tti_sum / ttis,
        per_tti_cumulative_mos,
        per_type,
        blocked_total,
        mean_sched_time_us: sched_time_us_sum / ttis,
        max_cell_prbs_used,
        max_epon_allocated_mbps: max_epon_allocated,
        max_epon_identity_residual: max_identity_residual,
        min_sla_margin: if min_sla_margin.is_finite() {
            min_sla_margin
        } else {
            0.0
        },
    })
}

/// One cell of a sweep grid.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub load: Load,
    pub algorithm: WirelessAlg,
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Runs the Cartesian product of loads, wireless algorithms, and seeds
/// over a base scenario. Failures are recorded per cell; the sweep
/// continues. Rows come back in (load, algorithm, seed) order regardless
/// of execution order.
pub fn sweep(
    base: &ScenarioConfig,
    loads: &[Load],
    algorithms: &[WirelessAlg],
    seeds: &[u64],
) -> Result<Vec<SweepCell>> {
    if loads.is_empty() || algorithms.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep axes must be non-empty".into()));
    }
    let mut jobs = Vec::new();
    for &load in loads {
        for &algorithm in algorithms {
            for &seed in seeds {
                let mut cfg = base.clone();
                cfg.load = load;
                cfg.wireless_algorithm = algorithm;
                cfg.seed = seed;
                jobs.push((load, algorithm, seed, cfg));
            }
        }
    }
    let outcomes = run_parallel(jobs.iter().map(|(_, _, _, cfg)| cfg.clone()).collect());
    Ok(jobs
        .into_iter()
        .zip(outcomes)
        .map(|((load, algorithm, seed, _), outcome)| SweepCell {
            load,
            algorithm,
            seed,
            outcome,
        })
        .collect())
}

/// Worker-pool helper: runs scenarios on up to `QOE_SIM_THREADS` threads
/// (default: available parallelism), results in input order.
pub fn run_parallel(cfgs: Vec<ScenarioConfig>) -> Vec<std::result::Result<RunMetrics, String>> {
    let threads = std::env::var("QOE_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .min(cfgs.len().max(1));
    let mut results: Vec<std::result::Result<RunMetrics, String>> =
        (0..cfgs.len()).map(|_| Err(String::new())).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            handles.push(scope.spawn(|| {
                let mut local = Vec::new();
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= cfgs.len() {
                        return local;
                    }
                    local.push((i, run(&cfgs[i]).map_err(|e| e.to_string())));
                }
            }));
        }
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                results[i] = r;
            }
        }
    });
    results
}

/// Mean and standard error of one metric over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub load: Load,
    pub algorithm: WirelessAlg,
    pub domain: Domain,
    pub ctype: ClientType,
    pub mean_mos: f64,
    pub stderr_mos: f64,
    pub mean_call_drop: f64,
    pub stderr_call_drop: f64,
    pub seeds: u64,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates sweep cells per (load, algorithm, domain, client type).
/// Failed cells are excluded; a warning string is returned per skipped
/// group or failed run.
pub fn summarize(cells: &[SweepCell]) -> (Vec<SummaryRow>, Vec<String>) {
    use std::collections::BTreeMap;
    let mut warnings = Vec::new();
    let mut groups: BTreeMap<(Load, WirelessAlg, Domain, ClientType), (Vec<f64>, Vec<f64>)> =
        BTreeMap::new();
    for cell in cells {
        match &cell.outcome {
            Ok(metrics) => {
                for t in &metrics.per_type {
                    let entry = groups
                        .entry((cell.load, cell.algorithm, t.domain, t.ctype))
                        .or_default();
                    entry.0.push(t.mean_mos);
                    entry.1.push(t.mean_call_drop);
                }
            }
            Err(e) => warnings.push(format!(
                "run (load={}, alg={}, seed={}) failed: {e}",
                cell.load, cell.algorithm, cell.seed
            )),
        }
    }
    let rows = groups
        .into_iter()
        .filter_map(|((load, algorithm, domain, ctype), (mos, drop))| {
            if mos.is_empty() {
                warnings.push(format!("group (load={load}, alg={algorithm}, {domain}, type {ctype}) is empty"));
                return None;
            }
            let (mean_mos, stderr_mos) = mean_stderr(&mos);
            let (mean_call_drop, stderr_call_drop) = mean_stderr(&drop);
            Some(SummaryRow {
                load,
                algorithm,
                domain,
                ctype,
                mean_mos,
                stderr_mos,
                mean_call_drop,
                stderr_call_drop,
                seeds: mos.len() as u64,
            })
        })
        .collect();
    (rows, warnings)
}

/// CSV header of the per-run metrics table.
pub const METRICS_CSV_HEADER: &str =
    "run_id,seed,load,wireless_alg,epon_alg,domain,client_type,mean_mos,mean_call_drop,blocked,prbs_or_bw";

/// Renders the six per-type rows of one run.
pub fn metrics_csv_rows(cfg: &ScenarioConfig, metrics: &RunMetrics) -> String {
    let mut out = String::new();
    for t in &metrics.per_type {
        let blocked = match t.domain {
            Domain::Wireless => metrics.blocked_total,
            Domain::Wired => 0,
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.4},{:.4},{},{:.4}\n",
            cfg.run_id(),
            cfg.seed,
            cfg.load,
            cfg.wireless_algorithm,
            cfg.epon_algorithm,
            t.domain,
            t.ctype,
            t.mean_mos,
            t.mean_call_drop,
            blocked,
            t.mean_resource,
        ));
    }
    out
}

/// Full metrics CSV for one run.
pub fn metrics_csv(cfg: &ScenarioConfig, metrics: &RunMetrics) -> String {
    format!("{METRICS_CSV_HEADER}\n{}", metrics_csv_rows(cfg, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            cells: 2,
            wired_onus: 2,
            ttis: 5,
            load: Load::Low,
            seed: 11,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_ttis_gives_empty_metrics() {
        let cfg = ScenarioConfig {
            ttis: 0,
            ..small_cfg()
        };
        let m = run(&cfg).unwrap();
        assert!(m.per_tti_cumulative_mos.is_empty());
        assert_eq!(m.mean_cumulative_mos, 0.0);
        assert_eq!(m.blocked_total, 0);
    }

    #[test]
    fn identical_seeds_give_identical_metrics() {
        let cfg = small_cfg();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.per_tti_cumulative_mos, b.per_tti_cumulative_mos);
        assert_eq!(a.blocked_total, b.blocked_total);
        assert_eq!(metrics_csv(&cfg, &a), metrics_csv(&cfg, &b));
    }

    #[test]
    fn different_seeds_change_the_trace() {
        let a = run(&small_cfg()).unwrap();
        let mut cfg = small_cfg();
        cfg.seed = 12;
        let b = run(&cfg).unwrap();
        assert_ne!(a.per_tti_cumulative_mos, b.per_tti_cumulative_mos);
    }

    #[test]
    fn channel_trace_is_algorithm_invariant() {
        // blocked counts and admission depend only on channels, which must
        // not shift when the allocator changes
        let mut wf = small_cfg();
        wf.wireless_algorithm = WirelessAlg::Wf;
        let mut mrr = small_cfg();
        mrr.wireless_algorithm = WirelessAlg::Mrr;
        let a = run(&wf).unwrap();
        let b = run(&mrr).unwrap();
        assert_eq!(a.blocked_total, b.blocked_total);
    }

    #[test]
    fn budgets_hold_in_a_run() {
        let cfg = ScenarioConfig {
            load: Load::High,
            ttis: 10,
            ..small_cfg()
        };
        let m = run(&cfg).unwrap();
        assert!(m.max_cell_prbs_used <= cfg.prbs_per_cell);
        assert!(m.max_epon_allocated_mbps <= cfg.epon_capacity_mbps + 1e-6);
        assert!(m.max_epon_identity_residual < 1e-6);
        assert!(m.min_sla_margin >= 0.0);
    }

    #[test]
    fn sweep_grid_has_stable_shape() {
        let base = small_cfg();
        let cells = sweep(
            &base,
            &[Load::Low, Load::Medium],
            &[WirelessAlg::Wf, WirelessAlg::Mrr],
            &[1, 2, 3],
        )
        .unwrap();
        assert_eq!(cells.len(), 12);
        // stable (load, algorithm, seed) order
        assert_eq!(cells[0].load, Load::Low);
        assert_eq!(cells[0].algorithm, WirelessAlg::Wf);
        assert_eq!(cells[0].seed, 1);
        assert_eq!(cells[11].load, Load::Medium);
        assert_eq!(cells[11].algorithm, WirelessAlg::Mrr);
        assert_eq!(cells[11].seed, 3);
        assert!(cells.iter().all(|c| c.outcome.is_ok()));
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let mut base = small_cfg();
        base.epon_capacity_mbps = 3.0; // too small for high load minimums
        let cells = sweep(&base, &[Load::Low, Load::High], &[WirelessAlg::Wf], &[1]).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().any(|c| c.outcome.is_err()));
    }

    #[test]
    fn summarize_single_seed_has_zero_stderr() {
        let base = small_cfg();
        let cells = sweep(&base, &[Load::Low], &[WirelessAlg::Wf], &[5]).unwrap();
        let (rows, warnings) = summarize(&cells);
        assert!(warnings.is_empty());
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert_eq!(r.stderr_mos, 0.0);
            assert_eq!(r.seeds, 1);
        }
    }

    #[test]
    fn stderr_formula_matches_hand_value() {
        let (mean, se) = mean_stderr(&[4.0, 4.2]);
        assert!((mean - 4.1).abs() < 1e-12);
        assert!((se - 0.1).abs() < 1e-12);
        let (_, se0) = mean_stderr(&[4.0, 4.0]);
        assert_eq!(se0, 0.0);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = small_cfg();
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.type_mix = [0.5, 0.5, 0.5];
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.app = "nosuch".into();
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.distance_range_km = (0.0, 1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<ScenarioConfig>(r#"{"sead": 3}"#);
        assert!(err.is_err());
    }
}
