//! Self-verification: the checks behind `qoesim verify` and the
//! acceptance test suite.
//!
//! Each check exercises one falsifiable claim of the model or the
//! allocators (table reproduction, oracle equivalence, approximation
//! bounds, metric orderings, conservation, determinism) and reports one
//! pass/fail line. Sweep-based checks share their runs through
//! [`VerifyContext`] so a full `verify` invocation runs each sweep once.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qoe::{
    build_profile_table, ApplicationSpec, CallDropCurve, ClientType, Resolution, DEFAULT_FEC,
};
use crate::sim::{
    metrics_csv, run, sweep, Domain, EponAlg, Load, RunMetrics, ScenarioConfig, SweepCell,
    WirelessAlg,
};
use crate::wireless::{brute_force_oracle, mckp_allocate, mckp_allocate_with_scale, Choice, ChoiceTable};

/// Outcome of a single verification check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            detail: detail.into(),
        }
    }

    fn from(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Skype reference table: resolution, fps, video rate, send rate, MoS,
/// call drop. Three printed rate entries in the source table are
/// inconsistent with its own construction (9.20 and 15.33 in the
/// 640x480@15 row, 1.70 in the 160x120@28 row) and are frozen here at the
/// values the table's equations imply (9.22, 15.36, 1.79).
pub const SKYPE_REFERENCE: [(u32, u32, f64, f64, f64, f64, f64); 12] = [
    (160, 120, 5.0, 0.19, 0.32, 2.92, 0.532),
    (160, 120, 10.0, 0.38, 0.64, 3.63, 0.248),
    (160, 120, 15.0, 0.57, 0.96, 3.96, 0.116),
    (160, 120, 28.0, 1.07, 1.79, 4.32, 0.036),
    (320, 240, 5.0, 0.77, 1.28, 4.15, 0.070),
    (320, 240, 10.0, 1.54, 2.56, 4.46, 0.008),
    (320, 240, 15.0, 2.30, 3.83, 4.57, 0.000),
    (320, 240, 28.0, 4.30, 7.16, 4.66, 0.000),
    (640, 480, 5.0, 3.07, 5.12, 4.62, 0.000),
    (640, 480, 10.0, 6.14, 10.23, 4.69, 0.000),
    (640, 480, 15.0, 9.22, 15.36, 4.72, 0.000),
    (640, 480, 28.0, 17.20, 28.67, 4.74, 0.000),
];

const RATE_TOL: f64 = 0.01 + 1e-9;
const MOS_TOL_WIDE: f64 = 0.2;
const MOS_TOL_TYPICAL: f64 = 0.12;

/// Scenario every sweep-based check starts from: the five-cell, three-ONU
/// layout at 100 PRBs per cell.
pub fn reference_scenario() -> ScenarioConfig {
    ScenarioConfig {
        ttis: 12,
        ..ScenarioConfig::default()
    }
}

const ORDERING_SEEDS: u64 = 30;

fn seed_list(n: u64) -> Vec<u64> {
    (1..=n).collect()
}

/// Caches the expensive sweeps so several checks can share them.
#[derive(Default)]
pub struct VerifyContext {
    main_sweep: Option<Vec<SweepCell>>,
    epon_runs: Option<EponRuns>,
    app_runs: Option<AppRuns>,
}

struct EponRuns {
    capacity: f64,
    eara: Vec<RunMetrics>,
    hpf: Vec<RunMetrics>,
}

struct AppRuns {
    skype: Vec<RunMetrics>,
    googleplus: Vec<RunMetrics>,
}

impl VerifyContext {
    /// 30 seeds x {medium, high} x {mrr, wf, mckp} on the reference scenario.
    fn main_sweep(&mut self) -> crate::Result<&[SweepCell]> {
        if self.main_sweep.is_none() {
            let cells = sweep(
                &reference_scenario(),
                &[Load::Medium, Load::High],
                &[WirelessAlg::Mrr, WirelessAlg::Wf, WirelessAlg::Mckp],
                &seed_list(ORDERING_SEEDS),
            )?;
            self.main_sweep = Some(cells);
        }
        Ok(self.main_sweep.as_deref().unwrap())
    }

    /// 30 high-load seeds under each EPON policy with the capacity pulled
    /// down to where the excess actually contends (the 10 Gbps default
    /// saturates every client and the policies become indistinguishable).
    fn epon_runs(&mut self) -> crate::Result<&EponRuns> {
        if self.epon_runs.is_none() {
            let capacity = 850.0;
            let mut eara = Vec::new();
            let mut hpf = Vec::new();
            for seed in seed_list(ORDERING_SEEDS) {
                let mut cfg = reference_scenario();
                cfg.load = Load::High;
                cfg.wireless_algorithm = WirelessAlg::Wf;
                cfg.epon_capacity_mbps = capacity;
                cfg.seed = seed;
                cfg.epon_algorithm = EponAlg::Eara;
                eara.push(run(&cfg)?);
                cfg.epon_algorithm = EponAlg::Hpf;
                hpf.push(run(&cfg)?);
            }
            self.epon_runs = Some(EponRuns { capacity, eara, hpf });
        }
        Ok(self.epon_runs.as_ref().unwrap())
    }

    /// 30 high-load seeds per application under identical budgets.
    fn app_runs(&mut self) -> crate::Result<&AppRuns> {
        if self.app_runs.is_none() {
            let mut skype = Vec::new();
            let mut googleplus = Vec::new();
            for seed in seed_list(ORDERING_SEEDS) {
                let mut cfg = reference_scenario();
                cfg.load = Load::High;
                cfg.seed = seed;
                cfg.app = "skype".into();
                skype.push(run(&cfg)?);
                cfg.app = "googleplus".into();
                googleplus.push(run(&cfg)?);
            }
            self.app_runs = Some(AppRuns { skype, googleplus });
        }
        Ok(self.app_runs.as_ref().unwrap())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Criterion 1: the generated Skype table reproduces the reference rows.
pub fn check_table2(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "table2-reproduction";
    let started = Instant::now();
    let table = match build_profile_table(&ApplicationSpec::skype(), DEFAULT_FEC) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    if table.len() != 12 {
        return CheckResult::fail(NAME, format!("expected 12 profiles, got {}", table.len()));
    }
    let curve = CallDropCurve::table();
    let mut within_typical = 0;
    for &(w, h, fps, rv, rs, mos, drop) in &SKYPE_REFERENCE {
        let Some(p) = table
            .iter()
            .find(|p| p.resolution == Resolution::new(w, h) && p.fps == fps)
        else {
            return CheckResult::fail(NAME, format!("missing profile {w}x{h}@{fps}"));
        };
        if (p.video_rate - rv).abs() > RATE_TOL || (p.send_rate - rs).abs() > RATE_TOL {
            return CheckResult::fail(
                NAME,
                format!(
                    "{w}x{h}@{fps}: rates ({:.4}, {:.4}) vs reference ({rv}, {rs})",
                    p.video_rate, p.send_rate
                ),
            );
        }
        let dev = (p.mos - mos).abs();
        if dev > MOS_TOL_WIDE {
            return CheckResult::fail(
                NAME,
                format!("{w}x{h}@{fps}: mos {:.4} deviates {dev:.3} from {mos}", p.mos),
            );
        }
        if dev <= MOS_TOL_TYPICAL {
            within_typical += 1;
        }
        // the curve must hit every measured (mos, drop) anchor exactly
        match curve.eval(mos) {
            Ok(d) if d == drop => {}
            Ok(d) => {
                return CheckResult::fail(NAME, format!("drop at mos {mos}: {d} != {drop}"));
            }
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        }
    }
    if within_typical < 11 {
        return CheckResult::fail(
            NAME,
            format!("only {within_typical}/12 MoS values within {MOS_TOL_TYPICAL}"),
        );
    }
    let elapsed = started.elapsed();
    CheckResult::from(
        NAME,
        elapsed.as_secs_f64() < 1.0,
        format!(
            "12 profiles, rates within {RATE_TOL:.2}, {within_typical}/12 MoS within {MOS_TOL_TYPICAL}, in {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

/// Criterion 2: call drop is exactly zero from MoS 4.5 up.
pub fn check_zero_drop(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "zero-drop-boundary";
    let curve = CallDropCurve::table();
    for app in [
        ApplicationSpec::skype(),
        ApplicationSpec::googleplus(),
        ApplicationSpec::ichat(),
    ] {
        let table = match build_profile_table(&app, DEFAULT_FEC) {
            Ok(t) => t,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for p in &table {
            if p.mos >= 4.5 && p.call_drop != 0.0 {
                return CheckResult::fail(
                    NAME,
                    format!("{}: mos {:.4} has drop {}", app.name, p.mos, p.call_drop),
                );
            }
        }
    }
    // dense sweep of the boundary region
    for i in 0..=5000 {
        let mos = 4.5 + 0.5 * i as f64 / 5000.0;
        match curve.eval(mos) {
            Ok(0.0) => {}
            Ok(d) => return CheckResult::fail(NAME, format!("drop({mos}) = {d}")),
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        }
    }
    CheckResult::pass(NAME, "drop == 0 for every profile and grid point with mos >= 4.5")
}

/// Random MCKP instance with integer profits (lossless at scale 1) and a
/// budget that always admits the baselines.
fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<ChoiceTable>, u32) {
    let n = rng.random_range(1..=6usize);
    let mut tables = Vec::with_capacity(n);
    for ue in 0..n {
        let k = rng.random_range(1..=5usize);
        let mut weight = rng.random_range(1..=3u32);
        let mut profit = 0u32;
        let mut choices = Vec::with_capacity(k);
        for j in 0..k {
            if j > 0 {
                weight += rng.random_range(1..=6u32);
                profit += rng.random_range(1..=9u32);
            }
            choices.push(Choice {
                profile_idx: j,
                weight,
                mos: 3.0 + f64::from(profit),
                send_rate: f64::from(weight),
                call_drop: 0.0,
                raw_profit: f64::from(profit),
            });
        }
        tables.push(ChoiceTable {
            ue_id: ue as u32,
            ctype: ClientType::Type1,
            bits_per_prb: 1000,
            choices,
        });
    }
    let base: u32 = tables.iter().map(|t| t.baseline().weight).sum();
    let budget = rng.random_range(base..=30.max(base));
    (tables, budget)
}

const EXACTNESS_INSTANCES: usize = 500;

/// Criterion 3: lossless-scaled MCKP equals the brute-force optimum.
pub fn check_mckp_exactness(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "mckp-exactness";
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for i in 0..EXACTNESS_INSTANCES {
        let (tables, budget) = random_instance(&mut rng);
        let (opt, _) = match brute_force_oracle(&tables, budget) {
            Ok(v) => v,
            Err(e) => return CheckResult::fail(NAME, format!("instance {i}: {e}")),
        };
        let alloc = match mckp_allocate_with_scale(&tables, budget, 1.0) {
            Ok(a) => a,
            Err(e) => return CheckResult::fail(NAME, format!("instance {i}: {e}")),
        };
        if alloc.incremental_profit() != opt {
            return CheckResult::fail(
                NAME,
                format!("instance {i}: dp {} != oracle {opt}", alloc.incremental_profit()),
            );
        }
        if alloc.total_prbs_used > budget {
            return CheckResult::fail(NAME, format!("instance {i}: budget exceeded"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    CheckResult::from(
        NAME,
        secs < 30.0,
        format!("{EXACTNESS_INSTANCES} instances match the oracle exactly in {secs:.2} s"),
    )
}

/// Criterion 4: the (1 - epsilon) approximation bound holds on every
/// instance for epsilon in {0.5, 0.25, 0.1}.
pub fn check_fptas_bound(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "fptas-bound";
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0DD);
    let mut worst = f64::INFINITY;
    for i in 0..EXACTNESS_INSTANCES {
        let (tables, budget) = random_instance(&mut rng);
        let (opt, _) = match brute_force_oracle(&tables, budget) {
            Ok(v) => v,
            Err(e) => return CheckResult::fail(NAME, format!("instance {i}: {e}")),
        };
        for epsilon in [0.5, 0.25, 0.1] {
            let alloc = match mckp_allocate(&tables, budget, epsilon) {
                Ok(a) => a,
                Err(e) => return CheckResult::fail(NAME, format!("instance {i}: {e}")),
            };
            let got = alloc.incremental_profit();
            if opt > 0.0 {
                worst = worst.min(got / opt);
            }
            if got + 1e-9 < (1.0 - epsilon) * opt {
                return CheckResult::fail(
                    NAME,
                    format!("instance {i}, eps {epsilon}: {got} < (1-eps) * {opt}"),
                );
            }
        }
    }
    CheckResult::pass(
        NAME,
        format!(
            "bound held on {EXACTNESS_INSTANCES} instances x 3 epsilons (worst ratio {worst:.4})"
        ),
    )
}

fn mean_cumulative(cells: &[SweepCell], load: Load, alg: WirelessAlg) -> (f64, f64) {
    let mos = mean(cells.iter().filter_map(|c| match &c.outcome {
        Ok(m) if c.load == load && c.algorithm == alg => Some(m.mean_cumulative_mos),
        _ => None,
    }));
    let drop = mean(cells.iter().filter_map(|c| match &c.outcome {
        Ok(m) if c.load == load && c.algorithm == alg => Some(m.mean_cumulative_call_drop),
        _ => None,
    }));
    (mos, drop)
}

/// Criterion 5: mean cumulative MoS orders mckp >= wf >= mrr at medium and
/// high load (mckp > mrr strictly at high); call drop orders the other way.
pub fn check_scheduler_ordering(ctx: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "scheduler-ordering";
    let cells = match ctx.main_sweep() {
        Ok(c) => c,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    if cells.iter().any(|c| c.outcome.is_err()) {
        return CheckResult::fail(NAME, "a sweep run failed".to_string());
    }
    let mut detail = String::new();
    for load in [Load::Medium, Load::High] {
        let (mckp_mos, mckp_drop) = mean_cumulative(cells, load, WirelessAlg::Mckp);
        let (wf_mos, wf_drop) = mean_cumulative(cells, load, WirelessAlg::Wf);
        let (mrr_mos, mrr_drop) = mean_cumulative(cells, load, WirelessAlg::Mrr);
        detail.push_str(&format!(
            "[{load}] mos mckp {mckp_mos:.2} wf {wf_mos:.2} mrr {mrr_mos:.2}; drop mckp {mckp_drop:.2} wf {wf_drop:.2} mrr {mrr_drop:.2} "
        ));
        if !(mckp_mos >= wf_mos && wf_mos >= mrr_mos) {
            return CheckResult::fail(NAME, format!("mos ordering broken at {load}: {detail}"));
        }
        if !(mckp_drop <= wf_drop && wf_drop <= mrr_drop) {
            return CheckResult::fail(NAME, format!("drop ordering broken at {load}: {detail}"));
        }
        if load == Load::High && !(mckp_mos > mrr_mos) {
            return CheckResult::fail(NAME, format!("mckp not strictly above mrr at high load: {detail}"));
        }
    }
    CheckResult::pass(NAME, detail.trim_end().to_string())
}

/// Criterion 6: no served client, wireless or wired, ever lands below its
/// SLA floor across all verification sweeps.
pub fn check_sla_floor(ctx: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "sla-floor";
    let mut worst = f64::INFINITY;
    let mut runs = 0usize;
    {
        let cells = match ctx.main_sweep() {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for c in cells {
            if let Ok(m) = &c.outcome {
                worst = worst.min(m.min_sla_margin);
                runs += 1;
            }
        }
    }
    {
        let epon = match ctx.epon_runs() {
            Ok(r) => r,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for m in epon.eara.iter().chain(&epon.hpf) {
            worst = worst.min(m.min_sla_margin);
            runs += 1;
        }
    }
    {
        let apps = match ctx.app_runs() {
            Ok(r) => r,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for m in apps.skype.iter().chain(&apps.googleplus) {
            worst = worst.min(m.min_sla_margin);
            runs += 1;
        }
    }
    CheckResult::from(
        NAME,
        worst >= 0.0,
        format!("worst (mos - floor) margin {worst:.4} over {runs} runs"),
    )
}

/// Criterion 7: PRB and EPON budgets hold every TTI, and the EPON excess
/// identity holds to 1e-6 Mbps.
pub fn check_budget_conservation(ctx: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "budget-conservation";
    let prb_budget = reference_scenario().prbs_per_cell;
    let mut max_prbs = 0u32;
    let mut max_residual = 0.0f64;
    let mut capacity_ok = true;
    {
        let cells = match ctx.main_sweep() {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        let capacity = reference_scenario().epon_capacity_mbps;
        for c in cells {
            if let Ok(m) = &c.outcome {
                max_prbs = max_prbs.max(m.max_cell_prbs_used);
                max_residual = max_residual.max(m.max_epon_identity_residual);
                capacity_ok &= m.max_epon_allocated_mbps <= capacity + 1e-6;
            }
        }
    }
    {
        let epon = match ctx.epon_runs() {
            Ok(r) => r,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        for m in epon.eara.iter().chain(&epon.hpf) {
            max_prbs = max_prbs.max(m.max_cell_prbs_used);
            max_residual = max_residual.max(m.max_epon_identity_residual);
            capacity_ok &= m.max_epon_allocated_mbps <= epon.capacity + 1e-6;
        }
    }
    let passed = max_prbs <= prb_budget && capacity_ok && max_residual <= 1e-6;
    CheckResult::from(
        NAME,
        passed,
        format!(
            "max PRBs/cell {max_prbs}/{prb_budget}, capacity respected: {capacity_ok}, identity residual {max_residual:.2e}"
        ),
    )
}

fn wired_type_mean(runs: &[RunMetrics], ctype: ClientType) -> f64 {
    mean(runs.iter().flat_map(|m| {
        m.per_type
            .iter()
            .filter(move |t| t.domain == Domain::Wired && t.ctype == ctype)
            .map(|t| t.mean_mos)
    }))
}

/// Criterion 8: under a contended EPON, EARA lifts type-1 wired clients
/// strictly above HPF, while HPF keeps type 3 at least as high as EARA.
pub fn check_eara_vs_hpf(ctx: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "eara-vs-hpf";
    let epon = match ctx.epon_runs() {
        Ok(r) => r,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let t1_eara = wired_type_mean(&epon.eara, ClientType::Type1);
    let t1_hpf = wired_type_mean(&epon.hpf, ClientType::Type1);
    let t3_eara = wired_type_mean(&epon.eara, ClientType::Type3);
    let t3_hpf = wired_type_mean(&epon.hpf, ClientType::Type3);
    let detail = format!(
        "type1 eara {t1_eara:.3} vs hpf {t1_hpf:.3}; type3 hpf {t3_hpf:.3} vs eara {t3_eara:.3} (E = {} Mbps)",
        epon.capacity
    );
    CheckResult::from(NAME, t1_eara > t1_hpf && t3_hpf >= t3_eara, detail)
}

/// Criterion 9: under identical seeds and budgets, Google+ runs score at
/// least Skype's cumulative MoS and at most its call drop.
pub fn check_googleplus_vs_skype(ctx: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "googleplus-vs-skype";
    let apps = match ctx.app_runs() {
        Ok(r) => r,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let gp_mos = mean(apps.googleplus.iter().map(|m| m.mean_cumulative_mos));
    let sk_mos = mean(apps.skype.iter().map(|m| m.mean_cumulative_mos));
    let gp_drop = mean(apps.googleplus.iter().map(|m| m.mean_cumulative_call_drop));
    let sk_drop = mean(apps.skype.iter().map(|m| m.mean_cumulative_call_drop));
    let detail = format!(
        "mos googleplus {gp_mos:.2} vs skype {sk_mos:.2}; drop googleplus {gp_drop:.2} vs skype {sk_drop:.2}"
    );
    CheckResult::from(NAME, gp_mos >= sk_mos && gp_drop <= sk_drop, detail)
}

/// Criterion 10: one MCKP allocation on an instance with 427 choices over
/// 15 UEs at epsilon 0.1 finishes under 10 ms median.
pub fn check_mckp_runtime(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "mckp-runtime";
    let mut rng = ChaCha8Rng::seed_from_u64(427);
    // 7 UEs with 29 choices + 8 with 28 = 427 total
    let mut tables = Vec::new();
    for ue in 0..15u32 {
        let k = if ue < 7 { 29 } else { 28 };
        let mut weight = 1u32;
        let mut profit = 0.0f64;
        let mut choices = Vec::with_capacity(k);
        for j in 0..k {
            if j > 0 {
                weight += rng.random_range(1..=3u32);
                profit += rng.random_range(0.01..0.1f64);
            }
            choices.push(Choice {
                profile_idx: j,
                weight,
                mos: 3.0 + profit,
                send_rate: f64::from(weight),
                call_drop: 0.0,
                raw_profit: profit,
            });
        }
        tables.push(ChoiceTable {
            ue_id: ue,
            ctype: ClientType::Type1,
            bits_per_prb: 1000,
            choices,
        });
    }
    let total: usize = tables.iter().map(|t| t.choices.len()).sum();
    debug_assert_eq!(total, 427);
    let budget = 100;
    let mut samples = Vec::with_capacity(21);
    let mut profit = 0.0;
    for _ in 0..21 {
        let started = Instant::now();
        match mckp_allocate(&tables, budget, 0.1) {
            Ok(a) => profit = a.incremental_profit(),
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        }
        samples.push(started.elapsed().as_secs_f64() * 1e3);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = samples[samples.len() / 2];
    CheckResult::from(
        NAME,
        median < 10.0,
        format!("N={total}, n=15, eps=0.1: median {median:.3} ms over 21 runs (profit {profit:.3})"),
    )
}

/// Criterion 11: the same config renders byte-identical metrics CSV.
pub fn check_determinism(_: &mut VerifyContext) -> CheckResult {
    const NAME: &str = "determinism";
    for alg in [WirelessAlg::Mrr, WirelessAlg::Wf, WirelessAlg::Mckp] {
        let mut cfg = reference_scenario();
        cfg.wireless_algorithm = alg;
        cfg.seed = 77;
        cfg.ttis = 8;
        let a = match run(&cfg) {
            Ok(m) => metrics_csv(&cfg, &m),
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        let b = match run(&cfg) {
            Ok(m) => metrics_csv(&cfg, &m),
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        if a != b {
            return CheckResult::fail(NAME, format!("CSV bytes differ for {alg}"));
        }
    }
    CheckResult::pass(NAME, "repeated runs render byte-identical CSV for all algorithms")
}

type Check = fn(&mut VerifyContext) -> CheckResult;

/// All checks in reporting order.
pub const CHECKS: [(&str, Check); 11] = [
    ("table2-reproduction", check_table2),
    ("zero-drop-boundary", check_zero_drop),
    ("mckp-exactness", check_mckp_exactness),
    ("fptas-bound", check_fptas_bound),
    ("scheduler-ordering", check_scheduler_ordering),
    ("sla-floor", check_sla_floor),
    ("budget-conservation", check_budget_conservation),
    ("eara-vs-hpf", check_eara_vs_hpf),
    ("googleplus-vs-skype", check_googleplus_vs_skype),
    ("mckp-runtime", check_mckp_runtime),
    ("determinism", check_determinism),
];

/// Runs every check whose name contains `filter` (all when `None`).
pub fn run_checks(filter: Option<&str>) -> Vec<CheckResult> {
    let mut ctx = VerifyContext::default();
    CHECKS
        .iter()
        .filter(|(name, _)| filter.map_or(true, |f| name.contains(f)))
        .map(|(_, check)| check(&mut ctx))
        .collect()
}
