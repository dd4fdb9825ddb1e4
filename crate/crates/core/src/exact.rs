//! Exact enumeration on small regions: the reversible measure, the
//! finite-volume Gibbs measure, transition matrices and order checks.
//!
//! Tables are indexed by configuration rank: bit `i` of the rank is the spin
//! at the `i`-th site of the region in lexicographic order, set for `+1`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Boundary, Configuration, FiniteVolume};
use crate::error::{Error, Result};
use crate::exec::{self, Executor};
use crate::lattice::{ball, Region, Site};
use crate::math;
use crate::noise::RandomnessKey;
use crate::rule::{ClassCRule, InteractionKernel, UpdateRule};

/// Largest region enumerated by the measure tables.
pub const TABLE_BUDGET: usize = 16;
/// Largest region for a dense transition matrix.
pub const MATRIX_BUDGET: usize = 12;
/// Largest region for exact stochastic-order checks.
pub const EXACT_ORDER_SITES: usize = 4;
/// Regions up to this size get a full pairwise detailed-balance sweep.
pub const FULL_SWEEP_SITES: usize = 10;
/// Random pairs checked above [`FULL_SWEEP_SITES`].
pub const SAMPLED_PAIRS: u64 = 1_000_000;

fn check_budget(region: &Region, budget: usize) -> Result<()> {
    if region.len() > budget {
        return Err(Error::BudgetExceeded { sites: region.len(), budget });
    }
    Ok(())
}

#[inline]
fn spin_value(rank: u64, i: usize) -> f64 {
    if rank >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// A probability vector over `{−1, +1}^Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureTable {
    region: Arc<Region>,
    probs: Vec<f64>,
}

impl MeasureTable {
    /// Normalised table from unnormalised log weights.
    pub fn from_log_weights(region: Arc<Region>, logw: Vec<f64>) -> Result<Self> {
        if logw.len() != 1usize << region.len() {
            return Err(Error::ConfigurationSize { expected: 1 << region.len(), got: logw.len() });
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logw.iter().map(|&l| math::exp(l - max)).collect();
        // summing in sorted order makes the normaliser independent of how
        // configurations are ranked, so relabelled tables agree bit for bit
        let mut sorted = probs.clone();
        sorted.sort_by(f64::total_cmp);
        let z: f64 = sorted.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(MeasureTable { region, probs })
    }

    /// Table from explicit probabilities, which must be non-negative and sum
    /// to one within `1e-9`.
    pub fn from_probs(region: Arc<Region>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << region.len() {
            return Err(Error::ConfigurationSize { expected: 1 << region.len(), got: probs.len() });
        }
        if let Some(&p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::Probability(p));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Probability(total));
        }
        Ok(MeasureTable { region, probs })
    }

    pub fn uniform(region: Arc<Region>) -> Result<Self> {
        check_budget(&region, TABLE_BUDGET)?;
        let n = 1usize << region.len();
        Ok(MeasureTable { region, probs: vec![1.0 / n as f64; n] })
    }

    pub fn point_mass(region: Arc<Region>, rank: u64) -> Result<Self> {
        check_budget(&region, TABLE_BUDGET)?;
        let mut probs = vec![0.0; 1usize << region.len()];
        let slot = probs.get_mut(rank as usize).ok_or(Error::Parameter("rank out of range".into()))?;
        *slot = 1.0;
        Ok(MeasureTable { region, probs })
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, config: &Configuration) -> Result<f64> {
        if config.region() != &self.region {
            return Err(Error::RegionMismatch);
        }
        Ok(self.probs[config.rank().expect("table regions are small") as usize])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Image under the global spin flip.
    pub fn flipped(&self) -> Self {
        let mask = self.probs.len() - 1;
        let probs = (0..self.probs.len()).map(|r| self.probs[r ^ mask]).collect();
        MeasureTable { region: self.region.clone(), probs }
    }

    /// `Σ_σ σ_k·table(σ)`.
    pub fn magnetization(&self, k: &Site) -> Result<f64> {
        let i = self.region.index_of(k).ok_or(Error::SiteOutsideRegion(*k))?;
        Ok(self.probs.iter().enumerate().map(|(r, p)| spin_value(r as u64, i) * p).sum())
    }

    /// `E f` for a function of the rank.
    pub fn expect(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(r, p)| f(r as u64) * p).sum()
    }

    /// Largest entrywise difference to another table on the same region.
    pub fn max_abs_diff(&self, other: &MeasureTable) -> Result<f64> {
        if self.region != other.region {
            return Err(Error::RegionMismatch);
        }
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Conditional law on `inner ⊆ Λ` given the spins of `exterior` on
    /// `Λ ∖ inner` (the exterior configuration lives on that difference set).
    pub fn conditional(&self, inner: &Region, exterior: &Configuration) -> Result<MeasureTable> {
        let (inner_pos, outer_pos) = split_positions(&self.region, inner)?;
        if outer_pos.is_empty() {
            return Ok(MeasureTable { region: Arc::new(inner.clone()), probs: self.probs.clone() });
        }
        let ext_sites: Vec<Site> = outer_pos.iter().map(|&i| self.region.site(i)).collect();
        if exterior.region().sites() != ext_sites.as_slice() {
            return Err(Error::RegionMismatch);
        }
        let mut base = 0u64;
        for (j, &i) in outer_pos.iter().enumerate() {
            if exterior.get(j).is_plus() {
                base |= 1 << i;
            }
        }
        let probs: Vec<f64> = (0..1u64 << inner_pos.len())
            .map(|r| self.probs[(base | scatter(r, &inner_pos)) as usize])
            .collect();
        let z: f64 = probs.iter().sum();
        if z <= 0.0 {
            return Err(Error::Probability(z));
        }
        Ok(MeasureTable { region: Arc::new(inner.clone()), probs: probs.into_iter().map(|p| p / z).collect() })
    }

    /// Marginal law on `inner ⊆ Λ`.
    pub fn marginal(&self, inner: &Region) -> Result<MeasureTable> {
        let (inner_pos, _) = split_positions(&self.region, inner)?;
        let mut probs = vec![0.0; 1usize << inner_pos.len()];
        for (r, p) in self.probs.iter().enumerate() {
            probs[gather(r as u64, &inner_pos) as usize] += p;
        }
        Ok(MeasureTable { region: Arc::new(inner.clone()), probs })
    }
}

/// Positions of `inner`'s sites in `outer`, and of the remaining sites.
fn split_positions(outer: &Region, inner: &Region) -> Result<(Vec<usize>, Vec<usize>)> {
    let inner_pos = inner
        .sites()
        .iter()
        .map(|s| outer.index_of(s).ok_or(Error::SiteOutsideRegion(*s)))
        .collect::<Result<Vec<_>>>()?;
    let outer_pos = (0..outer.len()).filter(|i| !inner_pos.contains(i)).collect();
    Ok((inner_pos, outer_pos))
}

/// Spread the low bits of `r` onto the given positions.
fn scatter(r: u64, positions: &[usize]) -> u64 {
    positions.iter().enumerate().fold(0, |acc, (j, &i)| acc | (r >> j & 1) << i)
}

fn gather(r: u64, positions: &[usize]) -> u64 {
    positions.iter().enumerate().fold(0, |acc, (j, &i)| acc | (r >> i & 1) << j)
}

/// `β·Σ_j K(j − k)·σ̃_j` split into interior terms (region index, `βK`) and a
/// frozen boundary part.
#[derive(Clone, Debug)]
struct Field {
    interior: Vec<(usize, f64)>,
    fixed: f64,
}

impl Field {
    fn at(beta: f64, kernel: &InteractionKernel, k: Site, region: &Region, boundary: &Boundary) -> Result<Self> {
        let mut interior = Vec::new();
        let mut fixed = 0.0;
        for (o, w) in kernel.entries() {
            let j = k + *o;
            match region.index_of(&j) {
                Some(i) => interior.push((i, beta * w)),
                None => fixed += beta * w * boundary.spin_at(&j).ok_or(Error::MissingSpin(j))?.value(),
            }
        }
        Ok(Field { interior, fixed })
    }

    #[inline]
    fn eval(&self, rank: u64) -> f64 {
        self.interior.iter().fold(self.fixed, |acc, &(i, w)| acc + w * spin_value(rank, i))
    }
}

/// Reversible measure of `P_Λ^τ` for a class-C rule:
/// `ν(σ) ∝ Π_{k∈Λ} cosh(β h_k(σ_Λ τ)) · exp(β σ_k b_k(τ))`, with `b_k` the
/// part of the field coming from outside `Λ`.
pub fn nu_table(rule: &ClassCRule, region: &Region, boundary: &Boundary) -> Result<MeasureTable> {
    check_budget(region, TABLE_BUDGET)?;
    if rule.dim() != region.dim() {
        return Err(Error::DimensionMismatch);
    }
    let fields = region
        .sites()
        .iter()
        .map(|&k| Field::at(rule.beta(), rule.kernel(), k, region, boundary))
        .collect::<Result<Vec<_>>>()?;
    let logw = (0..1u64 << region.len())
        .map(|r| {
            fields
                .iter()
                .enumerate()
                .map(|(i, f)| math::log_cosh(f.eval(r)) + spin_value(r, i) * f.fixed)
                .sum()
        })
        .collect();
    MeasureTable::from_log_weights(Arc::new(region.clone()), logw)
}

/// The multibody potential `φ_{U_k}(σ) = −log cosh(β Σ_j K(k − j) σ_j)`
/// attached to a class-C rule; `U_k = k + supp K`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPhi {
    beta: f64,
    kernel: InteractionKernel,
}

impl PotentialPhi {
    pub fn new(beta: f64, kernel: InteractionKernel) -> Result<Self> {
        Ok(Self::of(&ClassCRule::new(beta, kernel)?))
    }

    pub fn of(rule: &ClassCRule) -> Self {
        PotentialPhi { beta: rule.beta(), kernel: rule.kernel().clone() }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kernel(&self) -> &InteractionKernel {
        &self.kernel
    }

    /// `U_k`.
    pub fn support(&self, k: Site) -> Result<Region> {
        Region::explicit(self.kernel.entries().iter().map(|(o, _)| k + *o))
    }

    /// `φ_{U_k}(σ)` for a configuration given as a site lookup.
    pub fn phi(&self, k: Site, sigma: impl Fn(&Site) -> Option<crate::rule::Spin>) -> Result<f64> {
        let mut h = 0.0;
        for (o, w) in self.kernel.entries() {
            let j = k + *o;
            h += w * sigma(&j).ok_or(Error::MissingSpin(j))?.value();
        }
        Ok(-math::log_cosh(self.beta * h))
    }

    /// Centres `k` with `U_k ∩ Λ ≠ ∅`, in lexicographic order.
    pub fn interacting_centres(&self, region: &Region) -> Vec<Site> {
        let mut set = alloc::collections::BTreeSet::new();
        for s in region.sites() {
            for (o, _) in self.kernel.entries() {
                // j ∈ U_k ⇔ j − k ∈ supp K ⇔ k = j − o
                set.insert(*s - *o);
            }
        }
        set.into_iter().collect()
    }
}

/// Finite-volume Gibbs measure `μ_Λ^τ(σ) ∝ exp(−Σ_{k : U_k∩Λ≠∅} φ_{U_k}(σ_Λ τ))`.
/// The boundary must cover every site within `2R` of `Λ`.
pub fn gibbs_table(potential: &PotentialPhi, region: &Region, boundary: &Boundary) -> Result<MeasureTable> {
    check_budget(region, TABLE_BUDGET)?;
    if potential.kernel.dim() != region.dim() {
        return Err(Error::DimensionMismatch);
    }
    let fields = potential
        .interacting_centres(region)
        .into_iter()
        .map(|k| Field::at(potential.beta, &potential.kernel, k, region, boundary))
        .collect::<Result<Vec<_>>>()?;
    let logw = (0..1u64 << region.len())
        .map(|r| fields.iter().map(|f| math::log_cosh(f.eval(r))).sum())
        .collect();
    MeasureTable::from_log_weights(Arc::new(region.clone()), logw)
}

/// Dense `P[η → σ]`, row-major by `η` rank.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    region: Arc<Region>,
    states: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.states..(from + 1) * self.states]
    }

    /// Largest `|Σ_σ P[η → σ] − 1|`.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.states).map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `π P` for a row vector `π`.
    pub fn apply_left(&self, table: &MeasureTable) -> Result<MeasureTable> {
        if table.region() != &self.region {
            return Err(Error::RegionMismatch);
        }
        let mut out = vec![0.0; self.states];
        for (from, &p) in table.probs().iter().enumerate() {
            for (o, &q) in out.iter_mut().zip(self.row(from)) {
                *o += p * q;
            }
        }
        Ok(MeasureTable { region: self.region.clone(), probs: out })
    }
}

/// `P[η → σ] = Π_{k∈Λ} p_k(σ_k | η_Λ τ_{Λᶜ})` for a binary rule.
pub fn transition_matrix<R: UpdateRule + ?Sized>(rule: &R, region: &Region, boundary: &Boundary) -> Result<TransitionMatrix> {
    check_budget(region, MATRIX_BUDGET)?;
    let arc = Arc::new(region.clone());
    let fv = FiniteVolume::new(rule, arc.clone(), boundary)?;
    let n = region.len();
    let states = 1usize << n;
    let mut entries = vec![0.0; states * states];
    for from in 0..states {
        let ext = fv.extend(&Configuration::from_rank(arc.clone(), from as u64))?;
        let row = &mut entries[from * states..(from + 1) * states];
        row[0] = 1.0;
        for k in 0..n {
            let p = fv.plus_prob_at(&ext, k);
            let half = 1usize << k;
            for r in 0..half {
                let base = row[r];
                row[r] = base * (1.0 - p);
                row[r + half] = base * p;
            }
        }
    }
    Ok(TransitionMatrix { region: arc, states, entries })
}

/// Largest `|ν(σ)P(σ→η) − ν(η)P(η→σ)|`: every pair when the region has at
/// most [`FULL_SWEEP_SITES`] sites, otherwise [`SAMPLED_PAIRS`] pairs drawn
/// under `key`.
pub fn check_detailed_balance(table: &MeasureTable, matrix: &TransitionMatrix, key: &RandomnessKey) -> Result<f64> {
    if table.region() != matrix.region() {
        return Err(Error::RegionMismatch);
    }
    let nu = table.probs();
    let residual = |a: usize, b: usize| (nu[a] * matrix.get(a, b) - nu[b] * matrix.get(b, a)).abs();
    let states = matrix.states();
    if table.region().len() <= FULL_SWEEP_SITES {
        let mut worst: f64 = 0.0;
        for a in 0..states {
            for b in a + 1..states {
                worst = worst.max(residual(a, b));
            }
        }
        return Ok(worst);
    }
    let mut worst: f64 = 0.0;
    let draw = |u: f64| ((u * states as f64) as usize).min(states - 1);
    for i in 0..SAMPLED_PAIRS {
        let stream = key.stream(i);
        worst = worst.max(residual(draw(stream.uniform(0)), draw(stream.uniform(1))));
    }
    Ok(worst)
}

/// Boundary on the width-`2R` collar of `inner` made of `exterior` on
/// `outer ∖ inner` and `tau` elsewhere.
fn composite_boundary(inner: &Region, outer: &Region, exterior_rank: u64, outer_pos: &[usize], tau: &Boundary, range: u32) -> Result<Boundary> {
    let Some(collar) = inner.collar(2 * range.max(1)) else {
        return Ok(tau.clone());
    };
    let collar = Arc::new(collar);
    let mut c = Configuration::all_minus(collar.clone());
    let lookup: BTreeMap<Site, bool> =
        outer_pos.iter().enumerate().map(|(j, &i)| (outer.site(i), exterior_rank >> j & 1 == 1)).collect();
    for (i, s) in collar.sites().iter().enumerate() {
        let spin = match lookup.get(s) {
            Some(&b) => crate::rule::Spin::from_bit(b),
            None => tau.spin_at(s).ok_or(Error::MissingSpin(*s))?,
        };
        c.set(i, spin);
    }
    Ok(Boundary::Explicit(c))
}

/// `inner ⊂ outer` with `dist(inner, outerᶜ) > R`.
pub fn check_nesting(inner: &Region, outer: &Region, range: u32) -> Result<()> {
    let distance = inner.distance_to_complement_of(outer);
    if !inner.is_subset_of(outer) || inner == outer || distance <= range {
        return Err(Error::Nesting { distance, range });
    }
    Ok(())
}

/// Largest difference, over every configuration of `outer ∖ inner`, between
/// the conditional of `ν_outer^τ` on `inner` and the Gibbs measure on `inner`
/// with the composite boundary.
pub fn check_gibbs_consistency(rule: &ClassCRule, inner: &Region, outer: &Region, tau: &Boundary) -> Result<f64> {
    check_nesting(inner, outer, rule.range())?;
    let nu = nu_table(rule, outer, tau)?;
    let potential = PotentialPhi::of(rule);
    let (_, outer_pos) = split_positions(outer, inner)?;
    let ext_region = Arc::new(Region::explicit(outer_pos.iter().map(|&i| outer.site(i)))?);
    let mut worst: f64 = 0.0;
    for e in 0..1u64 << outer_pos.len() {
        let exterior = Configuration::from_rank(ext_region.clone(), e);
        let cond = nu.conditional(inner, &exterior)?;
        let boundary = composite_boundary(inner, outer, e, &outer_pos, tau, rule.range())?;
        let mu = gibbs_table(&potential, inner, &boundary)?;
        worst = worst.max(cond.max_abs_diff(&mu)?);
    }
    Ok(worst)
}

/// How a magnetization gap was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapMethod {
    Exact,
    /// Coupled extreme pair averaged over a window after burn-in. `early` is
    /// the same average over the window ending at half the burn-in, a drift
    /// diagnostic: the estimate is biased upward and decreases toward the gap.
    MonteCarlo { stderr: f64, samples: u64, burn_in: u64, window: u64, early: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub value: f64,
    pub method: GapMethod,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    pub samples: u64,
    pub burn_in: u64,
    pub window: u64,
    pub key: RandomnessKey,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapMode {
    ExactOnly,
    /// Exact within budget, Monte Carlo beyond.
    Auto(McOptions),
}

fn origin_of(dim: usize) -> Result<Site> {
    Site::origin(dim)
}

/// `∫σ_0 dν_{B_L}^+ − ∫σ_0 dν_{B_L}^−`.
pub fn gap_a<E: Executor + ?Sized>(exec: &E, rule: &ClassCRule, radius: u32, mode: GapMode) -> Result<Gap> {
    let region = ball(rule.dim(), radius)?;
    let o = origin_of(rule.dim())?;
    if region.len() <= TABLE_BUDGET {
        let plus = nu_table(rule, &region, &Boundary::AllPlus)?.magnetization(&o)?;
        let minus = nu_table(rule, &region, &Boundary::AllMinus)?.magnetization(&o)?;
        return Ok(Gap { value: plus - minus, method: GapMethod::Exact });
    }
    let GapMode::Auto(opts) = mode else {
        return Err(Error::BudgetExceeded { sites: region.len(), budget: TABLE_BUDGET });
    };
    gap_a_mc(exec, rule, &region, opts)
}

fn gap_a_mc<E: Executor + ?Sized>(exec: &E, rule: &ClassCRule, region: &Region, opts: McOptions) -> Result<Gap> {
    if opts.samples < 2 || opts.window == 0 {
        return Err(Error::Parameter("Monte Carlo gap needs at least 2 samples and a non-empty window".into()));
    }
    let arc = Arc::new(region.clone());
    let lo_fv = FiniteVolume::new(rule, arc.clone(), &Boundary::AllMinus)?;
    let hi_fv = FiniteVolume::new(rule, arc.clone(), &Boundary::AllPlus)?;
    let o = region.index_of(&origin_of(rule.dim())?).ok_or(Error::SupportOutsideRegion)?;
    let codes = lo_fv.site_codes(&opts.key);
    let early_end = opts.burn_in / 2;
    let early_start = early_end.saturating_sub(opts.window - 1);
    let pairs = exec::collect(exec, opts.samples, |i| {
        let key = opts.key.with_replica_set(i);
        let mut lo = lo_fv.extend_uniform(crate::rule::Spin::Minus);
        let mut hi = hi_fv.extend_uniform(crate::rule::Spin::Plus);
        let (mut lo_next, mut hi_next) = (lo.clone(), hi.clone());
        let (mut late, mut early) = (0.0, 0.0);
        let diff = |lo: &[u8], hi: &[u8]| (hi[o] as f64 - lo[o] as f64) * 2.0;
        if early_start == 0 {
            early += diff(&lo, &hi);
        }
        for t in 1..opts.burn_in + opts.window {
            lo_fv.step_into(&lo, &mut lo_next, &key, &codes, t, None);
            hi_fv.step_into(&hi, &mut hi_next, &key, &codes, t, None);
            core::mem::swap(&mut lo, &mut lo_next);
            core::mem::swap(&mut hi, &mut hi_next);
            if t >= early_start && t <= early_end {
                early += diff(&lo, &hi);
            }
            if t >= opts.burn_in {
                late += diff(&lo, &hi);
            }
        }
        let early_len = (early_end - early_start + 1) as f64;
        (late / opts.window as f64, early / early_len)
    });
    let n = opts.samples as f64;
    let (sum, sq) = pairs.iter().fold((0.0, 0.0), |(s, q), (x, _)| (s + x, q + x * x));
    let (value, stderr) = crate::stats::mean_stderr(sum, sq, opts.samples);
    let early = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    Ok(Gap {
        value,
        method: GapMethod::MonteCarlo { stderr, samples: opts.samples, burn_in: opts.burn_in, window: opts.window, early },
    })
}

/// `∫σ_0 dμ_{B_L}^+ − ∫σ_0 dμ_{B_L}^−`.
pub fn wm_gap(potential: &PotentialPhi, radius: u32) -> Result<f64> {
    let d = potential.kernel.dim();
    let region = ball(d, radius)?;
    let o = origin_of(d)?;
    let plus = gibbs_table(potential, &region, &Boundary::AllPlus)?.magnetization(&o)?;
    let minus = gibbs_table(potential, &region, &Boundary::AllMinus)?.magnetization(&o)?;
    Ok(plus - minus)
}

/// Every up-set of the Boolean lattice `{0,1}^n` as a bitmask over ranks,
/// for `n ≤ 4`.
pub fn up_sets(n: usize) -> Result<Vec<u64>> {
    if n > EXACT_ORDER_SITES {
        return Err(Error::BudgetExceeded { sites: n, budget: EXACT_ORDER_SITES });
    }
    let states = 1usize << n;
    let mut out = Vec::new();
    for mask in 0..1u64 << states {
        let closed = (0..states).all(|r| {
            mask >> r & 1 == 0 || (0..n).all(|i| mask >> (r | 1 << i) & 1 == 1)
        });
        if closed {
            out.push(mask);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderMode {
    /// Every up-set checked.
    Exact,
    /// A fixed family of increasing test functions.
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderVerdict {
    pub holds: bool,
    pub mode: OrderMode,
    /// `min_f (E_2 f − E_1 f)` over the tested family; negative on failure.
    pub margin: f64,
    pub tested: usize,
}

pub const ORDER_TOLERANCE: f64 = 1e-12;

/// `t1 ⪯ t2`: exact over all up-sets for at most four sites, otherwise over
/// single spins, pair products of plus-indicators, all-plus, magnetization
/// and at-least-`m`-plus indicators.
pub fn stochastic_order(t1: &MeasureTable, t2: &MeasureTable) -> Result<OrderVerdict> {
    if t1.region() != t2.region() {
        return Err(Error::RegionMismatch);
    }
    let n = t1.region().len();
    let (p, q) = (t1.probs(), t2.probs());
    let mut margin = f64::INFINITY;
    let mut tested = 0;
    if n <= EXACT_ORDER_SITES {
        for u in up_sets(n)? {
            let mass = |t: &[f64]| (0..t.len()).filter(|&r| u >> r & 1 == 1).map(|r| t[r]).sum::<f64>();
            margin = margin.min(mass(q) - mass(p));
            tested += 1;
        }
        return Ok(OrderVerdict { holds: margin >= -ORDER_TOLERANCE, mode: OrderMode::Exact, margin, tested });
    }
    let mut test = |f: &dyn Fn(u64) -> f64| {
        margin = margin.min(t2.expect(f) - t1.expect(f));
        tested += 1;
    };
    let all = (1u64 << n) - 1;
    for i in 0..n {
        test(&|r| (r >> i & 1) as f64);
        for j in i + 1..n {
            test(&|r| (r >> i & r >> j & 1) as f64);
        }
    }
    test(&|r| (r == all) as u8 as f64);
    test(&|r| 2.0 * r.count_ones() as f64 - n as f64);
    for m in 1..=n as u32 {
        test(&|r| (r.count_ones() >= m) as u8 as f64);
    }
    Ok(OrderVerdict { holds: margin >= -ORDER_TOLERANCE, mode: OrderMode::Heuristic, margin, tested })
}
