//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any gating criterion fails.

#[allow(dead_code)]
#[path = "../../core/tests/common/properties.rs"]
mod properties;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use silly_rules::information::observe_then_commit_value;
use silly_rules::seeds::rng_from_seed;
use silly_rules::{
    brute_force_branch, preset, prop1_residual, run_sweep, solve, solve_value, vpi, AgentType, Belief, CensoredTime,
    Decision, Params, PayoffConvention, SolverOptions, Spec, SweepResult, VpiOptions,
};

struct Outcome {
    pass: bool,
    detail: String,
    /// Non-gating observations.
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), notes: Vec::new() }
    }
}

fn within(limit: Duration, started: Instant) -> (bool, String) {
    let t = started.elapsed();
    (t <= limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn uniform_params(d: f64, c: f64, gamma: f64, alpha: f64, beta: f64) -> Params {
    Params {
        density: d,
        signaling_cost: c,
        discount: gamma,
        reward: 1.0,
        punisher_share: 0.5,
        prior_alpha: alpha,
        prior_beta: beta,
        group_size: 2,
        payoff_convention: PayoffConvention::Prose,
    }
}

fn discount_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for gamma in [0.9, 0.95, 0.98, 0.99] {
        for i in 0..20 {
            let d = f64::from(i) * 0.05;
            for eu in [0.2, 1.0, 5.0] {
                worst = worst.max(prop1_residual(gamma, d, eu).unwrap().abs());
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(1), start);
    Outcome::new(worst <= 1e-12 && fast, format!("max |residual| {worst:e} ≤ 1e-12 over 240 points; {time}"))
}

fn vpi_vanishes() -> Outcome {
    let start = Instant::now();
    let values: Vec<f64> = [0.0, 0.5, 0.9, 0.99]
        .iter()
        .map(|&d| {
            let p = uniform_params(d, 0.0, 0.98, 1.0, 1.0);
            vpi(&p.prior(), &p, AgentType::Punisher, &VpiOptions::default()).unwrap().vpi
        })
        .collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let ratio = values[3] / values[0];
    let (fast, time) = within(Duration::from_secs(600), start);
    Outcome::new(
        monotone && ratio <= 0.1 && fast,
        format!(
            "VPI at d=0,0.5,0.9,0.99: {:.4}, {:.4}, {:.4}, {:.4}; non-increasing={monotone}, ratio {ratio:.3} ≤ 0.1; {time}",
            values[0], values[1], values[2], values[3]
        ),
    )
}

fn lower_bound_policy() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let densities = [0.0, 0.9, 0.99];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..50 {
        let d = densities[i % 3];
        let gamma = rng.gen_range(0.9..0.98);
        let c = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.05) };
        let (a, b) = (rng.gen_range(0.3..30.0), rng.gen_range(0.3..30.0));
        let ty = if rng.gen_bool(0.5) { AgentType::Punisher } else { AgentType::NonPunisher };
        let belief = Belief::with_counts(a, b, rng.gen_range(0..10), rng.gen_range(0..10));
        let p = uniform_params(d, c, gamma, a, b);
        let otc = observe_then_commit_value(&belief, &p, ty).unwrap();
        let dp = solve_value(&p, ty, &belief, &SolverOptions::default()).unwrap().value;
        worst = worst.max(otc - dp);
    }
    let gap = |d: f64| {
        let p = uniform_params(d, 0.0, 0.98, 1.0, 1.0);
        let dp = solve_value(&p, AgentType::Punisher, &p.prior(), &SolverOptions::default()).unwrap().value;
        dp - observe_then_commit_value(&p.prior(), &p, AgentType::Punisher).unwrap()
    };
    let (g90, g99) = (gap(0.9), gap(0.99));
    Outcome::new(
        worst <= 1e-6 && g99 < g90,
        format!(
            "max(lower bound − optimum) {worst:.3e} ≤ 1e-6 over 50 points; gap {g90:.4} (d=0.9) → {g99:.4} (d=0.99); {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn enumeration_oracle() -> Outcome {
    let start = Instant::now();
    let h = 4;
    let mut worst = 0.0f64;
    let mut decisions_ok = true;
    for d in [0.0, 0.5, 0.9] {
        for c in [0.0, 0.02, 0.08] {
            let p = uniform_params(d, c, 0.98, 1.2, 0.8);
            for ty in AgentType::ALL {
                let table = solve(&p, ty, &SolverOptions::finite(h)).unwrap();
                for n in 0..h {
                    for k in 0..=n {
                        let b = Belief::with_counts(1.2, 0.8, k, n - k);
                        let oracle = brute_force_branch(&p, ty, &b.rebased(), h - n).unwrap();
                        worst = worst.max((oracle - table.branch_value(k, n - k).unwrap()).abs());
                        let want = if oracle < 0.0 { Decision::Retire } else { Decision::Continue };
                        decisions_ok &= table.decide(&b).unwrap() == want;
                    }
                }
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    Outcome::new(
        worst <= 1e-9 && decisions_ok && fast,
        format!("max |Δvalue| {worst:.2e} ≤ 1e-9, decisions identical={decisions_ok}; {time}"),
    )
}

fn sweep_of(name: &str, densities: &[f64], costs: &[f64], timesteps: Option<u32>) -> (Spec, SweepResult) {
    let mut spec = preset(name).unwrap();
    spec.replications = 200;
    spec.density_grid = densities.to_vec();
    spec.cost_grid = costs.to_vec();
    if let Some(t) = timesteps {
        spec.max_timesteps = t;
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = run_sweep(&spec, workers).unwrap();
    (spec, result)
}

fn final_row(result: &SweepResult, d: f64, c: f64) -> (f64, f64) {
    let row = result.cell(d, c).unwrap().rows.last().unwrap();
    (row.surviving_fraction, row.mean_active_size)
}

fn hypothesis_1() -> Outcome {
    let start = Instant::now();
    let ds = [0.0, 0.5, 0.9];
    let (_, result) = sweep_of("baseline", &ds, &[0.08, 0.005], Some(100));
    let high: Vec<f64> = ds.iter().map(|&d| final_row(&result, d, 0.08).0).collect();
    let low: Vec<f64> = ds.iter().map(|&d| final_row(&result, d, 0.005).0).collect();
    let decreasing = high.windows(2).all(|w| w[1] < w[0]);
    let sustained = low.iter().all(|&s| s >= 0.95);
    let (fast, time) = within(Duration::from_secs(900), start);
    Outcome::new(
        decreasing && sustained && fast,
        format!(
            "t=100 survival at c=0.08: {high:?} strictly decreasing={decreasing}; at c=0.005: {low:?} all ≥ 0.95={sustained}; {time}"
        ),
    )
}

fn hypothesis_2() -> Outcome {
    let start = Instant::now();
    let (_, result) = sweep_of("robustness", &[0.0, 0.9], &[0.002], Some(250));
    let (s0, m0) = final_row(&result, 0.0, 0.002);
    let (s9, m9) = final_row(&result, 0.9, 0.002);
    let mut out = Outcome::new(
        s9 > s0 && m9 > m0,
        format!(
            "t=250 d=0.9 vs d=0: survival {s9} vs {s0}, mean size {m9:.2} vs {m0:.2}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    let soft = (s9 - 0.75).abs() <= 0.15 && (m9 - 50.0).abs() <= 15.0;
    out.notes.push(format!(
        "soft target (reported only): d=0.9 survival {s9} in 0.75±0.15 and mean size {m9:.2} in 50±15 → {}",
        if soft { "met" } else { "missed" }
    ));
    out
}

fn hypothesis_3() -> Outcome {
    let start = Instant::now();
    let (_, result) = sweep_of("adaptability", &[0.0, 0.9], &[0.002], None);
    let m0 = result.cell(0.0, 0.002).unwrap().collapse_stats().median;
    let cell = result.cell(0.9, 0.002).unwrap();
    let m9 = cell.collapse_stats().median;
    let early = cell.collapse.iter().filter(|c| c.is_some_and(|t| t <= 50)).count() as f64 / cell.collapse.len() as f64;
    let faster = match (m9, m0) {
        (CensoredTime::At(a), CensoredTime::At(b)) => a < b,
        (CensoredTime::At(_), CensoredTime::NotReached) => true,
        _ => false,
    };
    let mut out = Outcome::new(
        faster,
        format!("median collapse timestep d=0.9: {m9}, d=0: {m0}; {:.1}s", start.elapsed().as_secs_f64()),
    );
    out.notes.push(format!(
        "reported only: {:.1}% of d=0.9 groups collapse within 50 timesteps (target ≥ 90%) → {}",
        100.0 * early,
        if early >= 0.9 { "met" } else { "missed" }
    ));
    out
}

fn cli_determinism() -> Outcome {
    let start = Instant::now();
    let exe = env!("CARGO_BIN_EXE_silly-rules");
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, args: &[&str]| {
        let status = Command::new(exe)
            .args(["sweep", "--preset", "robustness", "--groups", "200", "--seed", "7"])
            .args(args)
            .arg("--out")
            .arg(dir)
            .env_remove("SILLY_RULES_OUT")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.join("aggregate.csv")).unwrap()
    };
    let outputs: Vec<Vec<u8>> =
        ["1", "4", "16"].iter().map(|w| run(&tmp.path().join(format!("w{w}")), &["--workers", w])).collect();
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let manifest = tmp.path().join("w4").join("manifest.json");
    let replay = run(&tmp.path().join("replay"), &["--config", manifest.to_str().unwrap()]);
    let mut out = Outcome::new(
        identical && !outputs[0].is_empty(),
        format!(
            "aggregate.csv byte-identical for workers 1, 4, 16 ({} bytes); {:.1}s",
            outputs[0].len(),
            start.elapsed().as_secs_f64()
        ),
    );
    out.notes.push(format!("manifest replay byte-identical: {}", replay == outputs[0]));
    out
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for name in properties::NAMES {
        if let Err(e) = properties::run_property(name, properties::CASES) {
            failures.push(format!("{name}: {e}"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} suites × {} cases green; {:.1}s",
                properties::NAMES.len(),
                properties::CASES,
                start.elapsed().as_secs_f64()
            )
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("discount identity", discount_identity),
        ("value of information vanishes with density", vpi_vanishes),
        ("observe-then-commit lower bound", lower_bound_policy),
        ("DP matches exhaustive enumeration", enumeration_oracle),
        ("H1: density ordering of collapse", hypothesis_1),
        ("H2: robustness of dense groups", hypothesis_2),
        ("H3: dense groups collapse faster", hypothesis_3),
        ("sweep output independent of workers", cli_determinism),
        ("property suites at 10^4 cases", property_suites),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let mark = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{mark} [{}] {name}: {}", i + 1, outcome.detail);
        for note in &outcome.notes {
            println!("     [{}] {note}", i + 1);
        }
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria failed: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
