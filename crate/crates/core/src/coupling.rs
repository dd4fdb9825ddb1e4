//! Monotone synchronous coupling of up to four replicas, the `ρ(n)`
//! estimator and order-sandwich checks.
//!
//! Every replica reads the same uniform `U(key, t, k)` at site `k` and time
//! `t`. For an attractive rule with ordered boundaries the threshold update
//! then preserves componentwise order pathwise, which is asserted after
//! every step.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Boundary, Configuration, FiniteVolume, LocalObservable};
use crate::error::{Error, Result};
use crate::exec::{self, Executor};
use crate::lattice::{dependence_cone, Region, Site};
use crate::noise::RandomnessKey;
use crate::rule::{is_attractive_bruteforce, UpdateRule};
use crate::stats::{Wilson, Z95};

pub const MAX_REPLICAS: usize = 4;

/// Replicas of one rule on a common region, advanced in lockstep.
pub struct CouplingState {
    volumes: Vec<FiniteVolume>,
    states: Vec<Vec<u8>>,
    /// One buffer per replica; the collar part must stay that replica's.
    scratch: Vec<Vec<u8>>,
    codes: Vec<u64>,
    key: RandomnessKey,
    t: u64,
    enforce_order: bool,
    site_updates: u64,
}

impl CouplingState {
    /// Replicas listed bottom to top. Initial states and boundaries must be
    /// ordered; order is then asserted after every step.
    pub fn new<R: UpdateRule + ?Sized>(
        rule: &R,
        replicas: &[(Boundary, Configuration)],
        key: RandomnessKey,
    ) -> Result<Self> {
        let mut state = Self::build(rule, replicas, key)?;
        let ordered_start = replicas.windows(2).all(|w| w[0].1.precedes(&w[1].1));
        let ordered_boundary = state
            .volumes
            .first()
            .map(|fv| replicas.windows(2).all(|w| w[0].0.precedes_on(&w[1].0, fv.collar_sites())))
            .unwrap_or(true);
        if !ordered_start || !ordered_boundary {
            return Err(Error::UnorderedInitial);
        }
        state.enforce_order = true;
        Ok(state)
    }

    /// Replicas without any order requirement; no order is asserted.
    pub fn unordered<R: UpdateRule + ?Sized>(
        rule: &R,
        replicas: &[(Boundary, Configuration)],
        key: RandomnessKey,
    ) -> Result<Self> {
        Self::build(rule, replicas, key)
    }

    fn build<R: UpdateRule + ?Sized>(rule: &R, replicas: &[(Boundary, Configuration)], key: RandomnessKey) -> Result<Self> {
        if replicas.is_empty() || replicas.len() > MAX_REPLICAS {
            return Err(Error::ReplicaCount(replicas.len()));
        }
        let region = replicas[0].1.region().clone();
        if replicas.iter().any(|(_, c)| *c.region() != region) {
            return Err(Error::IncompatibleRegions);
        }
        let mut volumes = Vec::with_capacity(replicas.len());
        let mut states = Vec::with_capacity(replicas.len());
        for (b, c) in replicas {
            let fv = FiniteVolume::new(rule, region.clone(), b)?;
            states.push(fv.extend(c)?);
            volumes.push(fv);
        }
        let codes = volumes[0].site_codes(&key);
        let scratch = states.clone();
        Ok(CouplingState { volumes, states, scratch, codes, key, t: 0, enforce_order: false, site_updates: 0 })
    }

    /// Time of the current states (0 before the first step).
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn site_updates(&self) -> u64 {
        self.site_updates
    }

    pub fn replicas(&self) -> usize {
        self.states.len()
    }

    pub fn configuration(&self, i: usize) -> Configuration {
        self.volumes[i].interior(&self.states[i])
    }

    /// First `(site index, lower replica)` where consecutive replicas are out
    /// of order.
    pub fn first_violation(&self) -> Option<(usize, usize)> {
        let n = self.volumes[0].len();
        for i in 0..self.states.len() - 1 {
            let (a, b) = (&self.states[i], &self.states[i + 1]);
            if let Some(k) = (0..n).find(|&k| a[k] > b[k]) {
                return Some((k, i));
            }
        }
        None
    }

    /// Number of (site, consecutive pair) order violations.
    pub fn violations(&self) -> u64 {
        let n = self.volumes[0].len();
        self.states.windows(2).map(|w| (0..n).filter(|&k| w[0][k] > w[1][k]).count() as u64).sum()
    }

    /// All replicas equal on the interior.
    pub fn coalesced(&self) -> bool {
        let n = self.volumes[0].len();
        self.states.windows(2).all(|w| w[0][..n] == w[1][..n])
    }

    /// One step at time `t + 1` for every replica.
    pub fn step(&mut self) -> Result<()> {
        self.t += 1;
        for ((fv, st), next) in self.volumes.iter().zip(self.states.iter_mut()).zip(self.scratch.iter_mut()) {
            fv.step_into(st, next, &self.key, &self.codes, self.t, None);
            core::mem::swap(st, next);
        }
        self.site_updates += (self.volumes[0].len() * self.states.len()) as u64;
        if self.enforce_order {
            if let Some((k, lower)) = self.first_violation() {
                return Err(Error::OrderViolation {
                    step: self.t,
                    site: self.volumes[0].region().site(k),
                    lower,
                    upper: lower + 1,
                });
            }
        }
        Ok(())
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Estimated probability with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoEstimate {
    pub n: u64,
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: u64,
    pub samples: u64,
}

impl RhoEstimate {
    pub fn from_counts(n: u64, successes: u64, samples: u64) -> Self {
        let w = Wilson::new(successes, samples);
        let p_hat = if samples == 0 { 0.0 } else { successes as f64 / samples as f64 };
        RhoEstimate { n, p_hat, ci_halfwidth: w.halfwidth(), ci_low: w.low, ci_high: w.high, successes, samples }
    }

    /// Normal-approximation standard error of `p_hat`.
    pub fn stderr(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        crate::math::sqrt(self.p_hat * (1.0 - self.p_hat) / self.samples as f64)
    }
}

/// A coupled pair run only on the backward cone of a target set:
/// `A_n = targets`, `A_{t-1} = (A_t ∪ neighbours of A_t) ∩ Λ`.
struct PrunedPair {
    lower: FiniteVolume,
    upper: FiniteVolume,
    start_lower: Vec<u8>,
    start_upper: Vec<u8>,
    /// `active[t]` for `t = 0..=n`.
    active: Vec<Vec<u32>>,
    targets: Vec<u32>,
    check_order: bool,
    /// Agreement on `A_t` is absorbing only when both boundaries agree on
    /// every collar site read by later active sites.
    early_stop: bool,
}

enum PairEnd {
    /// The pair agreed on `A_t` for some `t ≤ n`, hence on the targets at `n`.
    Coalesced,
    Final(Vec<u8>, Vec<u8>),
}

impl PrunedPair {
    fn new(lower: FiniteVolume, upper: FiniteVolume, start_lower: Vec<u8>, start_upper: Vec<u8>, targets: Vec<u32>, n: u64, check_order: bool) -> Self {
        let len = lower.len();
        let mut active = vec![targets.clone()];
        let mut mark = vec![false; len];
        for _ in 0..n {
            let cur = active.last().expect("non-empty");
            let mut next = Vec::new();
            for &k in cur {
                if !mark[k as usize] {
                    mark[k as usize] = true;
                    next.push(k);
                }
                for &j in lower.neighbors_of(k as usize) {
                    if (j as usize) < len && !mark[j as usize] {
                        mark[j as usize] = true;
                        next.push(j);
                    }
                }
            }
            for &k in &next {
                mark[k as usize] = false;
            }
            next.sort_unstable();
            active.push(next);
        }
        active.reverse();
        let early_stop = active[1..].iter().flatten().all(|&k| {
            lower.neighbors_of(k as usize).iter().all(|&j| (j as usize) < len || start_lower[j as usize] == start_upper[j as usize])
        });
        PrunedPair { lower, upper, start_lower, start_upper, active, targets, check_order, early_stop }
    }

    fn horizon(&self) -> u64 {
        self.active.len() as u64 - 1
    }

    /// Site updates of a full (non-coalesced) run.
    fn full_updates(&self) -> u64 {
        2 * self.active[1..].iter().map(|a| a.len() as u64).sum::<u64>()
    }

    fn agree_on(a: &[u8], b: &[u8], sites: &[u32]) -> bool {
        sites.iter().all(|&k| a[k as usize] == b[k as usize])
    }

    fn run(&self, key: &RandomnessKey, codes: &[u64]) -> Result<PairEnd> {
        let (mut lo, mut hi) = (self.start_lower.clone(), self.start_upper.clone());
        if self.early_stop && Self::agree_on(&lo, &hi, &self.active[0]) {
            return Ok(PairEnd::Coalesced);
        }
        let (mut lo_next, mut hi_next) = (lo.clone(), hi.clone());
        for t in 1..=self.horizon() {
            let act = &self.active[t as usize];
            self.lower.step_into(&lo, &mut lo_next, key, codes, t, Some(act));
            self.upper.step_into(&hi, &mut hi_next, key, codes, t, Some(act));
            core::mem::swap(&mut lo, &mut lo_next);
            core::mem::swap(&mut hi, &mut hi_next);
            if self.check_order {
                if let Some(&k) = act.iter().find(|&&k| lo[k as usize] > hi[k as usize]) {
                    return Err(Error::OrderViolation { step: t, site: self.lower.region().site(k as usize), lower: 0, upper: 1 });
                }
            }
            if self.early_stop && Self::agree_on(&lo, &hi, act) {
                return Ok(PairEnd::Coalesced);
            }
        }
        Ok(PairEnd::Final(lo, hi))
    }

    fn differs(&self, end: &PairEnd) -> bool {
        match end {
            PairEnd::Coalesced => false,
            PairEnd::Final(lo, hi) => !Self::agree_on(lo, hi, &self.targets),
        }
    }
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn cone_of_origin<R: UpdateRule + ?Sized>(rule: &R, region: &Region, n: u64) -> Result<()> {
    let origin = Region::explicit([Site::origin(region.dim())?])?;
    let steps = u32::try_from(n).map_err(|_| Error::Parameter("horizon too large".into()))?;
    let cone = dependence_cone(&origin, steps, rule.stencil())?;
    if !cone.is_subset_of(region) {
        return Err(Error::RegionTooSmall { steps: n, required_radius: steps * rule.stencil().range() });
    }
    Ok(())
}

/// Build a pruned pair for `targets` between two (boundary, initial) specs.
fn pruned_pair<R: UpdateRule + ?Sized>(
    rule: &R,
    lower: (&Boundary, &Configuration),
    upper: (&Boundary, &Configuration),
    targets: &Region,
    n: u64,
) -> Result<PrunedPair> {
    let region = lower.1.region().clone();
    if *upper.1.region() != region {
        return Err(Error::IncompatibleRegions);
    }
    let lo = FiniteVolume::new(rule, region.clone(), lower.0)?;
    let hi = FiniteVolume::new(rule, region.clone(), upper.0)?;
    let start_lower = lo.extend(lower.1)?;
    let start_upper = hi.extend(upper.1)?;
    let idx: Vec<u32> = targets
        .sites()
        .iter()
        .map(|s| region.index_of(s).map(|i| i as u32).ok_or(Error::SupportOutsideRegion))
        .collect::<Result<_>>()?;
    let ordered = lower.1.precedes(upper.1) && lower.0.precedes_on(upper.0, lo.collar_sites());
    let check = ordered && is_attractive_bruteforce(rule);
    Ok(PrunedPair::new(lo, hi, start_lower, start_upper, idx, n, check))
}

/// Per-sample indicator of `ω^lower_T(n) ≠ ω^upper_T(n)` on the target set
/// `T`, sample `i` using replica set `i`.
#[allow(clippy::too_many_arguments)]
pub fn pair_discrepancy_outcomes<R, E>(
    exec: &E,
    rule: &R,
    lower: (&Boundary, &Configuration),
    upper: (&Boundary, &Configuration),
    targets: &Region,
    n: u64,
    samples: u64,
    key: &RandomnessKey,
) -> Result<Vec<bool>>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    let pair = pruned_pair(rule, lower, upper, targets, n)?;
    let codes = pair.lower.site_codes(key);
    first_error(exec::collect(exec, samples, |i| {
        let end = pair.run(&key.with_replica_set(i), &codes)?;
        Ok(pair.differs(&end))
    }))
}

/// Probability that the coupled pair disagrees somewhere on `targets` at
/// time `n`.
#[allow(clippy::too_many_arguments)]
pub fn pair_discrepancy<R, E>(
    exec: &E,
    rule: &R,
    lower: (&Boundary, &Configuration),
    upper: (&Boundary, &Configuration),
    targets: &Region,
    n: u64,
    samples: u64,
    key: &RandomnessKey,
) -> Result<RhoEstimate>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    let out = pair_discrepancy_outcomes(exec, rule, lower, upper, targets, n, samples, key)?;
    Ok(RhoEstimate::from_counts(n, out.iter().filter(|&&b| b).count() as u64, samples))
}

/// Per-sample outcomes of the `ρ(n)` experiment: `true` when the
/// all-minus/all-plus pair disagrees at the origin at time `n`.
pub fn rho_outcomes<R, E>(exec: &E, rule: &R, region: &Region, n: u64, samples: u64, key: &RandomnessKey) -> Result<Vec<bool>>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    cone_of_origin(rule, region, n)?;
    let region = Arc::new(region.clone());
    let lo = Configuration::all_minus(region.clone());
    let hi = Configuration::all_plus(region.clone());
    let origin = Region::explicit([Site::origin(region.dim())?])?;
    pair_discrepancy_outcomes(exec, rule, (&Boundary::AllMinus, &lo), (&Boundary::AllPlus, &hi), &origin, n, samples, key)
}

/// `ρ̂(n)`: coupled runs from (all minus, all plus) with the matching
/// boundaries on `region`, which must contain the dependence cone of the
/// origin at horizon `n`.
pub fn estimate_rho<R, E>(exec: &E, rule: &R, region: &Region, n: u64, samples: u64, key: &RandomnessKey) -> Result<RhoEstimate>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    let out = rho_outcomes(exec, rule, region, n, samples, key)?;
    Ok(RhoEstimate::from_counts(n, out.iter().filter(|&&b| b).count() as u64, samples))
}

/// Site updates a single `estimate_rho` sample performs when it never
/// coalesces early.
pub fn rho_updates_per_sample<R: UpdateRule + ?Sized>(rule: &R, region: &Region, n: u64) -> Result<u64> {
    cone_of_origin(rule, region, n)?;
    let region = Arc::new(region.clone());
    let lo = Configuration::all_minus(region.clone());
    let hi = Configuration::all_plus(region.clone());
    let origin = Region::explicit([Site::origin(region.dim())?])?;
    let pair = pruned_pair(rule, (&Boundary::AllMinus, &lo), (&Boundary::AllPlus, &hi), &origin, n)?;
    Ok(pair.full_updates())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SandwichReport {
    pub holds: bool,
    pub violations: u64,
    pub site_updates: u64,
    pub samples: u64,
}

/// Three replicas `(P^−, P^τ, P^+)` from `(all minus, η, all plus)`; counts
/// order violations after every step of every sample.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_check<R, E>(
    exec: &E,
    rule: &R,
    middle_boundary: &Boundary,
    eta: &Configuration,
    n: u64,
    samples: u64,
    key: &RandomnessKey,
) -> Result<SandwichReport>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    let region = eta.region().clone();
    let replicas = [
        (Boundary::AllMinus, Configuration::all_minus(region.clone())),
        (middle_boundary.clone(), eta.clone()),
        (Boundary::AllPlus, Configuration::all_plus(region)),
    ];
    CouplingState::unordered(rule, &replicas, *key)?;
    let per_sample = exec::collect(exec, samples, |i| -> Result<(u64, u64)> {
        let mut st = CouplingState::unordered(rule, &replicas, key.with_replica_set(i))?;
        let mut violations = st.violations();
        for _ in 0..n {
            st.step()?;
            violations += st.violations();
        }
        Ok((violations, st.site_updates()))
    });
    let mut report = SandwichReport { holds: true, violations: 0, site_updates: 0, samples };
    for r in per_sample {
        let (v, u) = r?;
        report.violations += v;
        report.site_updates += u;
    }
    report.holds = report.violations == 0;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicityReport {
    pub n: u64,
    /// `E|f(ω^+(n)) − f(ω^−(n))|`, which dominates the distance of either
    /// extreme start from the stationary value.
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub seminorm: f64,
    pub rho: RhoEstimate,
    /// `2·|||f|||·ρ̂(n)`.
    pub bound: f64,
    /// `4·(stderr of lhs + 2|||f||| · stderr of ρ̂)`.
    pub slack: f64,
    pub holds: bool,
}

/// Compare the coupled extreme-start discrepancy of `f` at time `n` with
/// `2·|||f|||·ρ̂(n)`. `region` must contain the cones of both the origin and
/// the support of `f`.
#[allow(clippy::too_many_arguments)]
pub fn ergodicity_bound_check<R, E>(
    exec: &E,
    rule: &R,
    region: &Region,
    f: &LocalObservable,
    n: u64,
    samples: u64,
    key: &RandomnessKey,
) -> Result<ErgodicityReport>
where
    R: UpdateRule + Sync + ?Sized,
    E: Executor + ?Sized,
{
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    let steps = u32::try_from(n).map_err(|_| Error::Parameter("horizon too large".into()))?;
    let cone = dependence_cone(f.support(), steps, rule.stencil())?;
    if !cone.is_subset_of(region) {
        let reach = f.support().sites().iter().map(Site::l1_norm).max().unwrap_or(0);
        return Err(Error::RegionTooSmall { steps: n, required_radius: steps * rule.stencil().range() + reach });
    }
    let rho = estimate_rho(exec, rule, region, n, samples, key)?;
    let arc = Arc::new(region.clone());
    let lo = Configuration::all_minus(arc.clone());
    let hi = Configuration::all_plus(arc);
    let pair = pruned_pair(rule, (&Boundary::AllMinus, &lo), (&Boundary::AllPlus, &hi), f.support(), n)?;
    let positions = f.positions_in(region)?;
    let codes = pair.lower.site_codes(key);
    let diffs = first_error(exec::collect(exec, samples, |i| -> Result<f64> {
        Ok(match pair.run(&key.with_replica_set(i), &codes)? {
            PairEnd::Coalesced => 0.0,
            PairEnd::Final(a, b) => (f.eval_ext(&positions, &b) - f.eval_ext(&positions, &a)).abs(),
        })
    }))?;
    let (sum, sq) = diffs.iter().fold((0.0, 0.0), |(s, q), &x| (s + x, q + x * x));
    let (lhs, lhs_stderr) = crate::stats::mean_stderr(sum, sq, samples);
    let seminorm = f.seminorm();
    let bound = 2.0 * seminorm * rho.p_hat;
    let slack = 4.0 * (lhs_stderr + 2.0 * seminorm * rho.stderr());
    Ok(ErgodicityReport { n, lhs, lhs_stderr, seminorm, rho, bound, slack, holds: lhs <= bound + slack })
}

/// Confidence-interval half-width used when propagating a Wilson interval as
/// a normal error: `halfwidth / z`.
pub fn halfwidth_to_stderr(halfwidth: f64) -> f64 {
    halfwidth / Z95
}
