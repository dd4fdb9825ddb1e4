//! Finite-volume synchronous dynamics `P_Λ^τ` with frozen boundary spins.
//!
//! A step reads only the pre-step snapshot: every site `k ∈ Λ` draws
//! `U(key, t, k)` and becomes `+1` iff `U < p_k(+1 | σ_Λ τ_Λᶜ)`. Time starts
//! at `t = 1` for the first step; `t = 0` is the initial condition.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::{self, Executor};
use crate::lattice::{Region, Site};
use crate::noise::RandomnessKey;
use crate::rule::{Spin, UpdateRule};
use crate::stats::mean_stderr;

/// Spins on the sites of a region, one bit per site in region order
/// (bit set ⇔ `+1`).
#[derive(Clone, PartialEq, Eq)]
pub struct Configuration {
    region: Arc<Region>,
    words: Vec<u64>,
}

impl Configuration {
    pub fn uniform(region: Arc<Region>, spin: Spin) -> Self {
        let n = region.len();
        let mut words = vec![if spin.is_plus() { u64::MAX } else { 0 }; n.div_ceil(64)];
        if let Some(last) = words.last_mut() {
            if !n.is_multiple_of(64) {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
        Configuration { region, words }
    }

    pub fn all_plus(region: Arc<Region>) -> Self {
        Self::uniform(region, Spin::Plus)
    }

    pub fn all_minus(region: Arc<Region>) -> Self {
        Self::uniform(region, Spin::Minus)
    }

    pub fn from_spins(region: Arc<Region>, spins: impl IntoIterator<Item = Spin>) -> Result<Self> {
        let mut c = Self::all_minus(region);
        let mut count = 0;
        for (i, s) in spins.into_iter().enumerate() {
            if i >= c.len() {
                return Err(Error::ConfigurationSize { expected: c.len(), got: i + 1 });
            }
            c.set(i, s);
            count += 1;
        }
        if count != c.len() {
            return Err(Error::ConfigurationSize { expected: c.len(), got: count });
        }
        Ok(c)
    }

    /// The configuration whose bit pattern is `rank` (bit `i` ↔ site `i`).
    pub fn from_rank(region: Arc<Region>, rank: u64) -> Self {
        let mut c = Self::all_minus(region);
        for i in 0..c.len().min(64) {
            c.set(i, Spin::from_bit(rank >> i & 1 == 1));
        }
        c
    }

    /// Draw every spin from `U(key, 0, site) < p_plus`.
    pub fn random(region: Arc<Region>, key: &RandomnessKey, p_plus: f64) -> Self {
        let mut c = Self::all_minus(region.clone());
        let stream = key.stream(0);
        for (i, site) in region.sites().iter().enumerate() {
            c.set(i, Spin::from_bit(stream.uniform(key.site_code(site)) < p_plus));
        }
        c
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Spin {
        Spin::from_bit(self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    #[inline]
    pub fn set(&mut self, i: usize, s: Spin) {
        let bit = 1u64 << (i % 64);
        if s.is_plus() {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn spin_at(&self, site: &Site) -> Option<Spin> {
        self.region.index_of(site).map(|i| self.get(i))
    }

    pub fn spins(&self) -> impl Iterator<Item = Spin> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Bit pattern for regions of at most 64 sites.
    pub fn rank(&self) -> Option<u64> {
        (self.len() <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Componentwise `self ⪯ other`.
    pub fn precedes(&self, other: &Configuration) -> bool {
        self.region == other.region && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// `θ_offset`: the same spins carried by the translated region.
    pub fn translate(&self, offset: Site) -> Self {
        Configuration { region: Arc::new(self.region.translate(offset)), words: self.words.clone() }
    }

    /// The configuration with every spin flipped.
    pub fn flipped(&self) -> Self {
        let mut c = self.clone();
        for i in 0..c.len() {
            let s = c.get(i).flip();
            c.set(i, s);
        }
        c
    }

    /// One `+`/`-` character per site in region order.
    pub fn symbols(&self) -> impl fmt::Display + '_ {
        struct Symbols<'a>(&'a Configuration);
        impl fmt::Display for Symbols<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for s in self.0.spins() {
                    f.write_str(if s.is_plus() { "+" } else { "-" })?;
                }
                Ok(())
            }
        }
        Symbols(self)
    }

    fn to_bytes(&self, out: &mut [u8]) {
        for (i, b) in out.iter_mut().enumerate().take(self.len()) {
            *b = self.get(i).is_plus() as u8;
        }
    }

    fn from_bytes(region: Arc<Region>, bytes: &[u8]) -> Self {
        let mut c = Self::all_minus(region);
        for (i, &b) in bytes.iter().enumerate().take(c.len()) {
            c.set(i, Spin::from_bit(b != 0));
        }
        c
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration[{}]", self.symbols())
    }
}

/// Spins frozen outside the box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Boundary {
    AllPlus,
    AllMinus,
    /// Values on an explicit collar; sites missing from it have no value.
    Explicit(Configuration),
}

impl Boundary {
    #[inline]
    pub fn spin_at(&self, site: &Site) -> Option<Spin> {
        match self {
            Boundary::AllPlus => Some(Spin::Plus),
            Boundary::AllMinus => Some(Spin::Minus),
            Boundary::Explicit(c) => c.spin_at(site),
        }
    }

    /// A boundary on the width-`width` collar of `region`, each spin `+` with
    /// probability `p_plus` under `key`.
    pub fn random(region: &Region, width: u32, key: &RandomnessKey, p_plus: f64) -> Option<Self> {
        let collar = region.collar(width)?;
        Some(Boundary::Explicit(Configuration::random(Arc::new(collar), key, p_plus)))
    }

    /// `self ⪯ other` on every site of `sites`; sites without a value on
    /// either side make the comparison fail.
    pub fn precedes_on(&self, other: &Boundary, sites: &[Site]) -> bool {
        sites.iter().all(|s| match (self.spin_at(s), other.spin_at(s)) {
            (Some(a), Some(b)) => a <= b,
            _ => false,
        })
    }
}

/// `P_Λ^τ` compiled for a binary rule: neighbour index lists and a
/// probability lookup by neighbourhood bit pattern.
#[derive(Clone)]
pub struct FiniteVolume {
    region: Arc<Region>,
    degree: usize,
    /// `neighbors[k * degree + i]` indexes the extended state (interior
    /// sites first, then collar sites).
    neighbors: Vec<u32>,
    collar: Vec<u8>,
    collar_sites: Vec<Site>,
    plus_prob: Vec<f64>,
}

/// Largest neighbourhood compiled into a lookup table.
pub const MAX_STENCIL: usize = 20;

impl FiniteVolume {
    pub fn new<R: UpdateRule + ?Sized>(rule: &R, region: Arc<Region>, boundary: &Boundary) -> Result<Self> {
        if !rule.spin_space().is_binary() {
            return Err(Error::SpinSpace("simulation engine supports {-1, +1} only"));
        }
        let offsets = rule.stencil().offsets();
        if rule.stencil().dim() != region.dim() {
            return Err(Error::DimensionMismatch);
        }
        let degree = offsets.len();
        if degree > MAX_STENCIL {
            return Err(Error::Parameter(alloc::format!("stencil of {degree} offsets exceeds {MAX_STENCIL}")));
        }
        let n = region.len();
        let mut collar_sites: Vec<Site> = Vec::new();
        let mut collar: Vec<u8> = Vec::new();
        let mut neighbors = Vec::with_capacity(n * degree);
        for k in region.sites() {
            for o in offsets {
                let j = *k + *o;
                let idx = match region.index_of(&j) {
                    Some(i) => i,
                    None => match collar_sites.iter().position(|s| *s == j) {
                        Some(c) => n + c,
                        None => {
                            let s = boundary.spin_at(&j).ok_or(Error::MissingSpin(j))?;
                            collar_sites.push(j);
                            collar.push(s.is_plus() as u8);
                            n + collar_sites.len() - 1
                        }
                    },
                };
                neighbors.push(idx as u32);
            }
        }
        let mut pattern = vec![0usize; degree];
        let plus_prob = (0..1usize << degree)
            .map(|p| {
                for (i, v) in pattern.iter_mut().enumerate() {
                    *v = p >> i & 1;
                }
                rule.prob(1, &pattern)
            })
            .collect();
        Ok(FiniteVolume { region, degree, neighbors, collar, collar_sites, plus_prob })
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    /// Extended-state indices read when updating interior site `k`.
    pub fn neighbors_of(&self, k: usize) -> &[u32] {
        &self.neighbors[k * self.degree..(k + 1) * self.degree]
    }

    /// Sites outside `Λ` read by some update.
    pub fn collar_sites(&self) -> &[Site] {
        &self.collar_sites
    }

    /// Extended state (interior then collar) for an interior configuration.
    pub fn extend(&self, config: &Configuration) -> Result<Vec<u8>> {
        if *config.region() != self.region {
            return Err(Error::ConfigurationSize { expected: self.region.len(), got: config.len() });
        }
        let mut ext = vec![0u8; self.region.len() + self.collar.len()];
        config.to_bytes(&mut ext);
        ext[self.region.len()..].copy_from_slice(&self.collar);
        Ok(ext)
    }

    pub fn extend_uniform(&self, spin: Spin) -> Vec<u8> {
        let mut ext = vec![spin.is_plus() as u8; self.region.len()];
        ext.extend_from_slice(&self.collar);
        ext
    }

    pub fn interior(&self, ext: &[u8]) -> Configuration {
        Configuration::from_bytes(self.region.clone(), ext)
    }

    /// Per-site hashes under `key`'s origin, in region order.
    pub fn site_codes(&self, key: &RandomnessKey) -> Vec<u64> {
        self.region.sites().iter().map(|s| key.site_code(s)).collect()
    }

    #[inline]
    pub fn plus_prob_at(&self, ext: &[u8], k: usize) -> f64 {
        let nb = &self.neighbors[k * self.degree..(k + 1) * self.degree];
        let mut pattern = 0usize;
        for (i, &j) in nb.iter().enumerate() {
            pattern |= (ext[j as usize] as usize) << i;
        }
        self.plus_prob[pattern]
    }

    /// Synchronous update of the sites in `active` (all sites when `None`)
    /// from `src` into `dst`, using the uniforms of time `t`.
    #[inline]
    pub fn step_into(&self, src: &[u8], dst: &mut [u8], key: &RandomnessKey, codes: &[u64], t: u64, active: Option<&[u32]>) {
        let stream = key.stream(t);
        match active {
            None => {
                for k in 0..self.region.len() {
                    dst[k] = (stream.uniform(codes[k]) < self.plus_prob_at(src, k)) as u8;
                }
            }
            Some(sites) => {
                for &k in sites {
                    let k = k as usize;
                    dst[k] = (stream.uniform(codes[k]) < self.plus_prob_at(src, k)) as u8;
                }
            }
        }
    }

    /// `n` full steps at times `t0 + 1 ..= t0 + n`, in place.
    pub fn advance(&self, ext: &mut Vec<u8>, key: &RandomnessKey, codes: &[u64], t0: u64, n: u64) {
        let mut next = ext.clone();
        for t in t0 + 1..=t0 + n {
            self.step_into(ext, &mut next, key, codes, t, None);
            core::mem::swap(ext, &mut next);
        }
    }
}

/// One synchronous step at time `t`.
pub fn step<R: UpdateRule + ?Sized>(
    rule: &R,
    boundary: &Boundary,
    config: &Configuration,
    key: &RandomnessKey,
    t: u64,
) -> Result<Configuration> {
    let fv = FiniteVolume::new(rule, config.region().clone(), boundary)?;
    let src = fv.extend(config)?;
    let mut dst = src.clone();
    fv.step_into(&src, &mut dst, key, &fv.site_codes(key), t, None);
    Ok(fv.interior(&dst))
}

/// `n` steps at times `1..=n`.
pub fn run<R: UpdateRule + ?Sized>(
    rule: &R,
    boundary: &Boundary,
    initial: &Configuration,
    n: u64,
    key: &RandomnessKey,
) -> Result<Configuration> {
    trajectory_with(rule, boundary, initial, n, key, |_, _| {})
}

/// Like [`run`], calling `visit(t, ω(t))` for `t = 0..=n`.
pub fn trajectory_with<R: UpdateRule + ?Sized>(
    rule: &R,
    boundary: &Boundary,
    initial: &Configuration,
    n: u64,
    key: &RandomnessKey,
    mut visit: impl FnMut(u64, &Configuration),
) -> Result<Configuration> {
    let fv = FiniteVolume::new(rule, initial.region().clone(), boundary)?;
    let codes = fv.site_codes(key);
    let mut ext = fv.extend(initial)?;
    let mut next = ext.clone();
    visit(0, initial);
    for t in 1..=n {
        fv.step_into(&ext, &mut next, key, &codes, t, None);
        core::mem::swap(&mut ext, &mut next);
        visit(t, &fv.interior(&ext));
    }
    Ok(fv.interior(&ext))
}

/// A function of the spins on a finite support, tabulated by support rank.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalObservable {
    support: Region,
    values: Vec<f64>,
}

/// Largest support for a tabulated observable.
pub const MAX_SUPPORT: usize = 20;

impl LocalObservable {
    pub fn from_fn(support: Region, f: impl Fn(&[Spin]) -> f64) -> Result<Self> {
        let n = support.len();
        if n > MAX_SUPPORT {
            return Err(Error::BudgetExceeded { sites: n, budget: MAX_SUPPORT });
        }
        let mut spins = vec![Spin::Minus; n];
        let values = (0..1u64 << n)
            .map(|r| {
                for (i, s) in spins.iter_mut().enumerate() {
                    *s = Spin::from_bit(r >> i & 1 == 1);
                }
                f(&spins)
            })
            .collect();
        Ok(LocalObservable { support, values })
    }

    /// `f(σ) = σ_site`.
    pub fn spin(site: Site) -> Self {
        let support = Region::explicit([site]).expect("single site");
        LocalObservable { support, values: vec![-1.0, 1.0] }
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn value_at_rank(&self, rank: u64) -> f64 {
        self.values[rank as usize]
    }

    /// `Var_k(f)`: the largest change of `f` when only site `k` is flipped.
    pub fn variation(&self, support_index: usize) -> f64 {
        let bit = 1usize << support_index;
        (0..self.values.len()).map(|r| (self.values[r] - self.values[r ^ bit]).abs()).fold(0.0, f64::max)
    }

    /// `|||f||| = Σ_k Var_k(f)`.
    pub fn seminorm(&self) -> f64 {
        (0..self.support.len()).map(|i| self.variation(i)).sum()
    }

    /// Positions of the support sites inside `region`.
    pub fn positions_in(&self, region: &Region) -> Result<Vec<usize>> {
        self.support.sites().iter().map(|s| region.index_of(s).ok_or(Error::SupportOutsideRegion)).collect()
    }

    #[inline]
    pub fn eval_ext(&self, positions: &[usize], ext: &[u8]) -> f64 {
        let mut r = 0usize;
        for (i, &p) in positions.iter().enumerate() {
            r |= (ext[p] as usize) << i;
        }
        self.values[r]
    }

    pub fn eval(&self, config: &Configuration) -> Result<f64> {
        let mut r = 0u64;
        for (i, s) in self.support.sites().iter().enumerate() {
            let spin = config.spin_at(s).ok_or(Error::SupportOutsideRegion)?;
            r |= (spin.is_plus() as u64) << i;
        }
        Ok(self.values[r as usize])
    }
}

/// Monte Carlo estimate of `E f(ω(n))` from `samples` independent replicas
/// (replica-set ids `0..samples`); returns `(mean, standard error)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_observable<R, E>(
    exec: &E,
    rule: &R,
    boundary: &Boundary,
    initial: &Configuration,
    n: u64,
    f: &LocalObservable,
    samples: u64,
    key: &RandomnessKey,
) -> Result<(f64, f64)>
where
    R: UpdateRule + ?Sized,
    E: Executor + ?Sized,
{
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    let positions = f.positions_in(initial.region())?;
    let fv = FiniteVolume::new(rule, initial.region().clone(), boundary)?;
    let start = fv.extend(initial)?;
    if n == 0 {
        return Ok((f.eval_ext(&positions, &start), 0.0));
    }
    let codes = fv.site_codes(key);
    let (sum, sq) = exec::sum_and_squares(exec, samples, |i| {
        let k = key.with_replica_set(i);
        let mut ext = start.clone();
        fv.advance(&mut ext, &k, &codes, 0, n);
        f.eval_ext(&positions, &ext)
    });
    Ok(mean_stderr(sum, sq, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::lattice::{ball, dependence_cone};
    use crate::rule::{ClassCRule, InteractionKernel};

    fn s(c: &[i32]) -> Site {
        Site::new(c).unwrap()
    }

    fn nn(beta: f64) -> ClassCRule {
        ClassCRule::new(beta, InteractionKernel::nn2d(1.0).unwrap()).unwrap()
    }

    const TANH_08: f64 = 0.664_036_770_267_848_9;

    #[test]
    fn configuration_bits() {
        let r = Arc::new(ball(2, 6).unwrap());
        assert!(r.len() > 64);
        let mut c = Configuration::all_minus(r.clone());
        c.set(70, Spin::Plus);
        assert_eq!(c.get(70), Spin::Plus);
        assert_eq!(c.count_plus(), 1);
        assert!(c.precedes(&Configuration::all_plus(r.clone())));
        assert!(!Configuration::all_plus(r.clone()).precedes(&c));
        assert_eq!(Configuration::all_plus(r.clone()).count_plus(), r.len());
        assert_eq!(c.rank(), None);
        let small = Arc::new(ball(2, 1).unwrap());
        let c = Configuration::from_rank(small.clone(), 0b10110);
        assert_eq!(c.rank(), Some(0b10110));
        assert_eq!(alloc::format!("{}", c.symbols()), "-++-+");
        assert!(Configuration::from_spins(small, [Spin::Plus]).is_err());
    }

    #[test]
    fn independent_case_is_a_fair_coin() {
        let r = Arc::new(ball(2, 3).unwrap());
        let rule = nn(0.0);
        let f = LocalObservable::spin(s(&[0, 0]));
        let init = Configuration::all_plus(r);
        let (m, se) =
            estimate_observable(&Sequential, &rule, &Boundary::AllPlus, &init, 3, &f, 20_000, &RandomnessKey::new(1))
                .unwrap();
        assert!(m.abs() < 4.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn single_site_with_plus_boundary() {
        let r = Arc::new(ball(2, 0).unwrap());
        let rule = nn(0.2);
        let f = LocalObservable::spin(s(&[0, 0]));
        for init in [Configuration::all_minus(r.clone()), Configuration::all_plus(r.clone())] {
            let (m, se) =
                estimate_observable(&Sequential, &rule, &Boundary::AllPlus, &init, 2, &f, 50_000, &RandomnessKey::new(5))
                    .unwrap();
            assert!((m - TANH_08).abs() < 4.0 * se, "mean {m} se {se}");
        }
        let init = Configuration::all_minus(r);
        let (m, se) =
            estimate_observable(&Sequential, &rule, &Boundary::AllPlus, &init, 0, &f, 10, &RandomnessKey::new(5)).unwrap();
        assert_eq!((m, se), (-1.0, 0.0));
    }

    #[test]
    fn one_step_frequency_matches_update_prob() {
        // single site, plus boundary: every step is Bernoulli(0.832…) regardless of σ
        let r = Arc::new(ball(2, 0).unwrap());
        let rule = nn(0.2);
        let init = Configuration::all_minus(r);
        let n = 40_000u64;
        let key = RandomnessKey::new(99);
        let plus = (0..n)
            .filter(|&i| step(&rule, &Boundary::AllPlus, &init, &key.with_replica_set(i), 1).unwrap().get(0).is_plus())
            .count() as f64;
        let p = rule.update_prob(Spin::Plus, 4.0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((plus / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn replay_is_exact() {
        let r = Arc::new(ball(2, 4).unwrap());
        let rule = nn(0.35);
        let key = RandomnessKey::new(3).with_replica_set(17);
        let init = Configuration::random(r.clone(), &RandomnessKey::new(11), 0.5);
        let a = run(&rule, &Boundary::AllMinus, &init, 12, &key).unwrap();
        let b = run(&rule, &Boundary::AllMinus, &init, 12, &key).unwrap();
        assert_eq!(a, b);
        assert_eq!(run(&rule, &Boundary::AllMinus, &init, 0, &key).unwrap(), init);
        assert_eq!(run(&rule, &Boundary::AllMinus, &init, 1, &key).unwrap(), step(&rule, &Boundary::AllMinus, &init, &key, 1).unwrap());
        let two = step(&rule, &Boundary::AllMinus, &init, &key, 1).unwrap();
        let two = step(&rule, &Boundary::AllMinus, &two, &key, 2).unwrap();
        assert_eq!(run(&rule, &Boundary::AllMinus, &init, 2, &key).unwrap(), two);
    }

    #[test]
    fn missing_boundary_is_reported() {
        let r = Arc::new(ball(2, 1).unwrap());
        let partial = Boundary::Explicit(Configuration::all_plus(Arc::new(Region::explicit([s(&[2, 0])]).unwrap())));
        let init = Configuration::all_plus(r);
        let err = step(&nn(0.2), &partial, &init, &RandomnessKey::new(0), 1).unwrap_err();
        assert!(matches!(err, Error::MissingSpin(_)));
    }

    #[test]
    fn cone_property_under_boundary_perturbation() {
        let rule = nn(0.5);
        let nn_st = rule.kernel().stencil().clone();
        for n in 1..=3u64 {
            let region = Arc::new(ball(2, 6).unwrap());
            let target = Region::explicit([s(&[0, 0])]).unwrap();
            let cone = dependence_cone(&target, n as u32, &nn_st).unwrap();
            for trial in 0..50u64 {
                let key = RandomnessKey::new(trial);
                let a0 = Configuration::random(region.clone(), &key.with_experiment(1), 0.5);
                let mut b0 = Configuration::random(region.clone(), &key.with_experiment(2), 0.5);
                for (i, site) in region.sites().iter().enumerate() {
                    if cone.contains(site) {
                        b0.set(i, a0.get(i));
                    }
                }
                let tb = Boundary::random(&region, 1, &key.with_experiment(3), 0.5).unwrap();
                let a = run(&rule, &Boundary::AllPlus, &a0, n, &key).unwrap();
                let b = run(&rule, &tb, &b0, n, &key).unwrap();
                assert_eq!(a.spin_at(&s(&[0, 0])), b.spin_at(&s(&[0, 0])));
            }
        }
    }

    #[test]
    fn translation_covariance() {
        let rule = nn(0.4);
        let region = Arc::new(ball(2, 3).unwrap());
        let key = RandomnessKey::new(8);
        let init = Configuration::random(region.clone(), &key.with_experiment(9), 0.4);
        let off = s(&[3, -7]);
        let a = run(&rule, &Boundary::AllPlus, &init, 5, &key).unwrap();
        let b = run(&rule, &Boundary::AllPlus, &init.translate(off), 5, &key.translated(off)).unwrap();
        assert_eq!(a.translate(off), b);
    }

    #[test]
    fn observable_seminorm() {
        let f0 = LocalObservable::spin(s(&[0, 0]));
        assert_eq!(f0.variation(0), 2.0);
        assert_eq!(f0.seminorm(), 2.0);
        let pair = Region::explicit([s(&[0, 0]), s(&[1, 0])]).unwrap();
        let prod = LocalObservable::from_fn(pair, |x| x[0].value() * x[1].value()).unwrap();
        assert_eq!(prod.seminorm(), 4.0);
        let big = ball(2, 4).unwrap();
        assert!(LocalObservable::from_fn(big, |_| 0.0).is_err());
    }
}
