//! Self-check suite behind `pca verify`.

use std::sync::Arc;

use pca_core::coupling::{estimate_rho, sandwich_check};
use pca_core::dynamics::{run, Boundary, Configuration};
use pca_core::exact::{
    check_detailed_balance, check_gibbs_consistency, gap_a, gibbs_table, nu_table, stochastic_order, transition_matrix,
    wm_gap, GapMode, PotentialPhi,
};
use pca_core::exec::Executor;
use pca_core::lattice::{ball, dependence_cone, Region, Site};
use pca_core::math::tanh;
use pca_core::noise::RandomnessKey;
use pca_core::rule::{dv_threshold, ClassCRule, InteractionKernel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level {other:?} (expected fast or full)")),
        }
    }
}

impl Level {
    fn max_sites(self) -> usize {
        match self {
            Level::Fast => 5,
            Level::Full => 9,
        }
    }

    fn samples(self) -> u64 {
        match self {
            Level::Fast => 10_000,
            Level::Full => 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, detail: detail.into() }
    }

    fn error(name: impl Into<String>, e: impl std::fmt::Display) -> Self {
        CheckResult::new(name, false, format!("error: {e}"))
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Reference values, one `name = value` per line.
pub const DEFAULT_BASELINE: &str = "\
# exact magnetization gaps, 2D nearest neighbour, J = 1
gap_a beta=0.2 L=0 = 1.3280735405356979
gap_a beta=0.2 L=1 = 0.80327548843914703
gap_a beta=0.2 L=2 = 0.40824687616603240
gap_a beta=0.6 L=2 = 1.9502957191033380
wm_gap beta=0.2 L=0 = 0.80327548843914703
wm_gap beta=0.2 L=2 = 0.18840058252538390
gibbs_plus beta=0.2 L=0 = 0.70081887210978676
";

const BASELINE_TOLERANCE: f64 = 1e-12;
const RESIDUAL_TOLERANCE: f64 = 1e-12;

fn nn(beta: f64) -> ClassCRule {
    ClassCRule::new(beta, InteractionKernel::nn2d(1.0).expect("preset kernel")).expect("valid beta")
}

fn site(c: &[i32]) -> Site {
    Site::new(c).expect("small dimension")
}

fn square(side: u32) -> Region {
    Region::cube(site(&[0, 0]), side).expect("non-empty square")
}

/// Regions used by the exact checks, capped at `max_sites`.
fn exact_regions(max_sites: usize) -> Vec<(&'static str, Region)> {
    let all = [
        ("B0", ball(2, 0).expect("ball")),
        ("B1", ball(2, 1).expect("ball")),
        ("square3", square(3)),
    ];
    all.into_iter().filter(|(_, r)| r.len() <= max_sites).collect()
}

fn boundaries(region: &Region, key: &RandomnessKey) -> Vec<(&'static str, Boundary)> {
    let mut out = vec![("plus", Boundary::AllPlus), ("minus", Boundary::AllMinus)];
    if let Some(b) = Boundary::random(region, 1, key, 0.5) {
        out.push(("random", b));
    }
    out
}

pub fn detailed_balance(level: Level, seed: u64) -> CheckResult {
    let name = "detailed_balance";
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for beta in [0.1, 0.3, 0.6] {
        let rule = nn(beta);
        for (i, (_, region)) in exact_regions(level.max_sites()).into_iter().enumerate() {
            for (_, b) in boundaries(&region, &RandomnessKey::new(17 ^ seed).with_experiment(i as u64)) {
                let r = nu_table(&rule, &region, &b).and_then(|t| {
                    let m = transition_matrix(&rule, &region, &b)?;
                    check_detailed_balance(&t, &m, &RandomnessKey::new(5 ^ seed))
                });
                match r {
                    Ok(r) => worst = worst.max(r),
                    Err(e) => return CheckResult::error(name, e),
                }
                cases += 1;
            }
        }
    }
    CheckResult::new(name, worst < RESIDUAL_TOLERANCE, format!("max residual {worst:.3e} over {cases} cases"))
}

pub fn gibbs_consistency(level: Level) -> CheckResult {
    let name = "gibbs_consistency";
    let inner = ball(2, 0).expect("ball");
    let outer = ball(2, if level == Level::Fast { 1 } else { 2 }).expect("ball");
    let mut worst: f64 = 0.0;
    for beta in [0.1, 0.3, 0.6] {
        match check_gibbs_consistency(&nn(beta), &inner, &outer, &Boundary::AllPlus) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return CheckResult::error(name, e),
        }
    }
    CheckResult::new(
        name,
        worst < RESIDUAL_TOLERANCE,
        format!("max residual {worst:.3e} over {} conditionings per beta", 1u64 << (outer.len() - 1)),
    )
}

pub fn stochastic_orders() -> CheckResult {
    let name = "stochastic_orders";
    let region = square(2);
    let mut margin = f64::INFINITY;
    let mut all = true;
    for beta in [0.2, 0.6] {
        let rule = nn(beta);
        let pot = PotentialPhi::of(&rule);
        let r = (|| {
            let nu_p = nu_table(&rule, &region, &Boundary::AllPlus)?;
            let nu_m = nu_table(&rule, &region, &Boundary::AllMinus)?;
            let mu_p = gibbs_table(&pot, &region, &Boundary::AllPlus)?;
            let mu_m = gibbs_table(&pot, &region, &Boundary::AllMinus)?;
            Ok::<_, pca_core::Error>([
                stochastic_order(&nu_m, &nu_p)?,
                stochastic_order(&mu_p, &nu_p)?,
                stochastic_order(&nu_m, &mu_m)?,
            ])
        })();
        match r {
            Ok(vs) => {
                for v in vs {
                    all &= v.holds;
                    margin = margin.min(v.margin);
                }
            }
            Err(e) => return CheckResult::error(name, e),
        }
    }
    CheckResult::new(name, all, format!("min margin {margin:.3e} over all up-sets of a 2x2 box"))
}

pub fn cone(level: Level, seed: u64) -> CheckResult {
    let name = "cone";
    let trials: u64 = if level == Level::Fast { 100 } else { 1000 };
    let mut mismatches = 0u64;
    let rule = nn(0.5);
    let origin = site(&[0, 0]);
    let target = Region::explicit([origin]).expect("one site");
    for n in 1..=3u32 {
        let region = Arc::new(ball(2, n + 2).expect("ball"));
        let cone = match dependence_cone(&target, n, rule.kernel().stencil()) {
            Ok(c) => c,
            Err(e) => return CheckResult::error(name, e),
        };
        for trial in 0..trials {
            let key = RandomnessKey::new(trial ^ seed.rotate_left(32)).with_experiment(u64::from(n));
            let a0 = Configuration::random(region.clone(), &key.with_replica_set(1), 0.5);
            let mut b0 = Configuration::random(region.clone(), &key.with_replica_set(2), 0.5);
            for (i, s) in region.sites().iter().enumerate() {
                if cone.contains(s) {
                    b0.set(i, a0.get(i));
                }
            }
            let tb = Boundary::random(&region, 1, &key.with_replica_set(3), 0.5).expect("collar");
            let r = run(&rule, &Boundary::AllPlus, &a0, u64::from(n), &key)
                .and_then(|a| Ok((a, run(&rule, &tb, &b0, u64::from(n), &key)?)));
            match r {
                Ok((a, b)) => mismatches += u64::from(a.spin_at(&origin) != b.spin_at(&origin)),
                Err(e) => return CheckResult::error(name, e),
            }
        }
    }
    CheckResult::new(name, mismatches == 0, format!("{mismatches} mismatches in {} runs", 3 * trials))
}

pub fn sandwich<E: Executor + ?Sized>(exec: &E, level: Level, seed: u64) -> CheckResult {
    let name = "sandwich";
    let radius = if level == Level::Fast { 1 } else { 3 };
    let region = Arc::new(ball(2, radius).expect("ball"));
    let steps = 20;
    let samples = level.samples() / 10;
    let (mut violations, mut updates) = (0u64, 0u64);
    for (i, beta) in [0.2, 0.6].into_iter().enumerate() {
        let key = RandomnessKey::new(31 ^ seed).with_experiment(i as u64);
        let eta = Configuration::random(region.clone(), &key.with_replica_set(u64::MAX), 0.5);
        let tau = Boundary::random(&region, 1, &key.with_replica_set(u64::MAX - 1), 0.5).expect("collar");
        match sandwich_check(exec, &nn(beta), &tau, &eta, steps, samples, &key) {
            Ok(r) => {
                violations += r.violations;
                updates += r.site_updates;
            }
            Err(e) => return CheckResult::error(name, e),
        }
    }
    CheckResult::new(name, violations == 0, format!("{violations} order violations in {updates} site updates"))
}

pub fn dv() -> CheckResult {
    let name = "dv_threshold";
    let expected = 0.274_653_072_167_027;
    match dv_threshold(&InteractionKernel::nn2d(1.0).expect("preset"), 1e-10) {
        Ok(Some(b)) => CheckResult::new(name, (b - expected).abs() < 1e-4, format!("threshold {b:.9} (expected {expected:.6})")),
        Ok(None) => CheckResult::new(name, false, "no threshold found"),
        Err(e) => CheckResult::error(name, e),
    }
}

/// `ρ(1)` at the origin equals `tanh(4β)` for the 2D nearest-neighbour rule.
pub fn rho_one<E: Executor + ?Sized>(exec: &E, level: Level, seed: u64) -> CheckResult {
    let name = "rho_n1";
    let beta = 0.2;
    let exact = tanh(4.0 * beta);
    match estimate_rho(exec, &nn(beta), &ball(2, 1).expect("ball"), 1, level.samples(), &RandomnessKey::new(77 ^ seed)) {
        Ok(e) => CheckResult::new(
            name,
            e.ci_low <= exact && exact <= e.ci_high,
            format!("estimate {:.5} CI [{:.5}, {:.5}] vs exact {exact:.5}", e.p_hat, e.ci_low, e.ci_high),
        ),
        Err(e) => CheckResult::error(name, e),
    }
}

/// A parsed baseline entry: quantity, beta, radius, value.
type BaselineEntry = (String, f64, u32, f64);

pub fn parse_baseline(text: &str) -> Result<Vec<BaselineEntry>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || format!("line {}: cannot parse {line:?}", no + 1);
        let (lhs, value) = line.rsplit_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let mut words = lhs.split_whitespace();
        let quantity = words.next().ok_or_else(bad)?;
        let beta: f64 = words.next().and_then(|w| w.strip_prefix("beta=")).and_then(|w| w.parse().ok()).ok_or_else(bad)?;
        let radius: u32 = words.next().and_then(|w| w.strip_prefix("L=")).and_then(|w| w.parse().ok()).ok_or_else(bad)?;
        if words.next().is_some() || !value.is_finite() {
            return Err(bad());
        }
        out.push((quantity.to_string(), beta, radius, value));
    }
    if out.is_empty() {
        return Err("no entries".into());
    }
    Ok(out)
}

fn baseline_value<E: Executor + ?Sized>(exec: &E, quantity: &str, beta: f64, radius: u32) -> Result<f64, String> {
    let rule = nn(beta);
    let e = |e: pca_core::Error| e.to_string();
    match quantity {
        "gap_a" => gap_a(exec, &rule, radius, GapMode::ExactOnly).map(|g| g.value).map_err(e),
        "wm_gap" => wm_gap(&PotentialPhi::of(&rule), radius).map_err(e),
        "gibbs_plus" => {
            let m = gibbs_table(&PotentialPhi::of(&rule), &ball(2, radius).map_err(e)?, &Boundary::AllPlus)
                .and_then(|t| t.magnetization(&site(&[0, 0])))
                .map_err(e)?;
            Ok((1.0 + m) / 2.0)
        }
        other => Err(format!("unknown quantity {other:?}")),
    }
}

/// One result per entry, or a single failure when the file is unreadable.
pub fn baseline<E: Executor + ?Sized>(exec: &E, text: &str) -> Vec<CheckResult> {
    let entries = match parse_baseline(text) {
        Ok(v) => v,
        Err(e) => return vec![CheckResult::new("baseline", false, format!("corrupted baseline: {e}"))],
    };
    entries
        .into_iter()
        .map(|(q, beta, radius, want)| {
            let name = format!("baseline {q} beta={beta} L={radius}");
            match baseline_value(exec, &q, beta, radius) {
                Ok(got) => CheckResult::new(
                    name,
                    (got - want).abs() < BASELINE_TOLERANCE,
                    format!("{got:.16e} vs {want:.16e} (diff {:.1e})", (got - want).abs()),
                ),
                Err(e) => CheckResult::new(name, false, e),
            }
        })
        .collect()
}

/// `seed` perturbs every random key; 0 reproduces the reference run.
pub fn run_suite<E: Executor + ?Sized>(exec: &E, level: Level, seed: u64, baseline_text: &str) -> Vec<CheckResult> {
    let mut out = vec![
        detailed_balance(level, seed),
        gibbs_consistency(level),
        stochastic_orders(),
        cone(level, seed),
        sandwich(exec, level, seed),
        dv(),
        rho_one(exec, level, seed),
    ];
    out.extend(baseline(exec, baseline_text));
    out
}
