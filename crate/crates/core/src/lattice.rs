//! Geometry of Z^d: sites, L1 balls, finite regions, neighborhood stencils
//! and dependence cones.
//!
//! Every [`Region`] keeps its sites in lexicographic order. That order is the
//! configuration index used by bit-packing, measure-table ranks and file
//! output, so it never changes once a region is built.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// A point of Z^d.
///
/// Coordinates beyond `dim` are kept at zero so that the derived ordering is
/// the lexicographic order on the first `dim` coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Site {
    pub fn new(coords: &[i32]) -> Result<Self> {
        let d = coords.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Dimension(d));
        }
        let mut c = [0; MAX_DIM];
        c[..d].copy_from_slice(coords);
        Ok(Site { coords: c, dim: d as u8 })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        Ok(Site { coords: [0; MAX_DIM], dim: dim as u8 })
    }

    /// The unit vector along axis `axis`.
    pub fn unit(dim: usize, axis: usize) -> Result<Self> {
        let mut s = Site::origin(dim)?;
        if axis >= dim {
            return Err(Error::Dimension(axis));
        }
        s.coords[axis] = 1;
        Ok(s)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    /// `‖k‖ = Σ |k_i|`.
    #[inline]
    pub fn l1_norm(&self) -> u32 {
        self.coords().iter().map(|c| c.unsigned_abs()).sum()
    }

    #[inline]
    pub fn l1_dist(&self, other: &Site) -> u32 {
        (*self - *other).l1_norm()
    }
}

impl Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, rhs: Site) -> Site {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut c = self.coords;
        for (a, b) in c.iter_mut().zip(rhs.coords.iter()) {
            *a += *b;
        }
        Site { coords: c, dim: self.dim }
    }
}

impl Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, rhs: Site) -> Site {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut c = self.coords;
        for (a, b) in c.iter_mut().zip(rhs.coords.iter()) {
            *a -= *b;
        }
        Site { coords: c, dim: self.dim }
    }
}

impl Neg for Site {
    type Output = Site;
    #[inline]
    fn neg(self) -> Site {
        let mut c = self.coords;
        c.iter_mut().for_each(|a| *a = -*a);
        Site { coords: c, dim: self.dim }
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// How a region was specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionKind {
    L1Ball { center: Site, radius: u32 },
    Explicit,
}

/// A non-empty finite subset of Z^d with a fixed lexicographic site order and
/// O(1) site lookup.
#[derive(Clone)]
pub struct Region {
    kind: RegionKind,
    dim: usize,
    sites: Vec<Site>,
    lookup: DenseIndex,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}
impl Eq for Region {}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RegionKind::L1Ball { center, radius } => {
                write!(f, "Ball(center={center:?}, L={radius}, |Λ|={})", self.sites.len())
            }
            RegionKind::Explicit => write!(f, "Explicit({:?})", self.sites),
        }
    }
}

/// Bounding-box lookup table from site to region index.
#[derive(Clone)]
struct DenseIndex {
    lo: [i32; MAX_DIM],
    extent: [u32; MAX_DIM],
    table: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl DenseIndex {
    fn build(dim: usize, sites: &[Site]) -> Self {
        let mut lo = [0i32; MAX_DIM];
        let mut hi = [0i32; MAX_DIM];
        for a in 0..dim {
            lo[a] = sites.iter().map(|s| s.coords[a]).min().unwrap_or(0);
            hi[a] = sites.iter().map(|s| s.coords[a]).max().unwrap_or(0);
        }
        let mut extent = [1u32; MAX_DIM];
        for a in 0..dim {
            extent[a] = (hi[a] - lo[a] + 1) as u32;
        }
        let size: usize = extent.iter().map(|&e| e as usize).product();
        let mut idx = DenseIndex { lo, extent, table: alloc::vec![ABSENT; size] };
        for (i, s) in sites.iter().enumerate() {
            let slot = idx.slot(s).expect("site inside its own bounding box");
            idx.table[slot] = i as u32;
        }
        idx
    }

    #[inline]
    fn slot(&self, s: &Site) -> Option<usize> {
        let mut off = 0usize;
        for a in 0..MAX_DIM {
            let r = s.coords[a] - self.lo[a];
            if r < 0 || r as u32 >= self.extent[a] {
                return None;
            }
            off = off * self.extent[a] as usize + r as usize;
        }
        Some(off)
    }

    #[inline]
    fn get(&self, s: &Site) -> Option<usize> {
        self.slot(s).and_then(|o| {
            let v = self.table[o];
            (v != ABSENT).then_some(v as usize)
        })
    }
}

impl Region {
    /// Build an explicit region from an arbitrary site list. Duplicates are
    /// rejected rather than silently merged.
    pub fn explicit(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut v: Vec<Site> = sites.into_iter().collect();
        let Some(first) = v.first() else {
            return Err(Error::EmptyRegion);
        };
        let dim = first.dim();
        if v.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch);
        }
        v.sort_unstable();
        let n = v.len();
        v.dedup();
        if v.len() != n {
            return Err(Error::DuplicateSite);
        }
        Ok(Self::from_sorted(RegionKind::Explicit, dim, v))
    }

    fn from_sorted(kind: RegionKind, dim: usize, sites: Vec<Site>) -> Self {
        let lookup = DenseIndex::build(dim, &sites);
        Region { kind, dim, sites, lookup }
    }

    fn from_set(dim: usize, set: BTreeSet<Site>) -> Self {
        Self::from_sorted(RegionKind::Explicit, dim, set.into_iter().collect())
    }

    /// The L1 ball `{k : ‖k − center‖ ≤ radius}`.
    pub fn ball_at(center: Site, radius: u32) -> Self {
        let dim = center.dim();
        let mut sites = Vec::new();
        let r = radius as i32;
        let mut cur = [0i32; MAX_DIM];
        fn rec(a: usize, dim: usize, budget: i32, cur: &mut [i32; MAX_DIM], center: &Site, out: &mut Vec<Site>) {
            if a == dim {
                let mut c = [0; MAX_DIM];
                for i in 0..dim {
                    c[i] = center.coords[i] + cur[i];
                }
                out.push(Site { coords: c, dim: dim as u8 });
                return;
            }
            for x in -budget..=budget {
                cur[a] = x;
                rec(a + 1, dim, budget - x.abs(), cur, center, out);
            }
            cur[a] = 0;
        }
        rec(0, dim, r, &mut cur, &center, &mut sites);
        // recursion emits in lexicographic order already
        debug_assert!(sites.windows(2).all(|w| w[0] < w[1]));
        Self::from_sorted(RegionKind::L1Ball { center, radius }, dim, sites)
    }

    /// A `side^d` hypercube with lower corner `corner`.
    pub fn cube(corner: Site, side: u32) -> Result<Self> {
        let dim = corner.dim();
        let mut sites = Vec::new();
        let total = (side as usize).pow(dim as u32);
        for mut idx in 0..total {
            let mut c = [0i32; MAX_DIM];
            for a in (0..dim).rev() {
                c[a] = corner.coords[a] + (idx % side as usize) as i32;
                idx /= side as usize;
            }
            sites.push(Site { coords: c, dim: dim as u8 });
        }
        Region::explicit(sites)
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    /// Position of `site` in the region's order.
    #[inline]
    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if site.dim() != self.dim {
            return None;
        }
        self.lookup.get(site)
    }

    #[inline]
    pub fn contains(&self, site: &Site) -> bool {
        self.index_of(site).is_some()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    /// The region shifted by `offset`; keeps the ball description when there is one.
    pub fn translate(&self, offset: Site) -> Self {
        let sites = self.sites.iter().map(|&s| s + offset).collect();
        let kind = match self.kind {
            RegionKind::L1Ball { center, radius } => RegionKind::L1Ball { center: center + offset, radius },
            RegionKind::Explicit => RegionKind::Explicit,
        };
        Self::from_sorted(kind, self.dim, sites)
    }

    /// Sites outside the region within L1 distance `width` of it.
    pub fn collar(&self, width: u32) -> Option<Region> {
        let mut set = BTreeSet::new();
        let origin = Site::origin(self.dim).expect("region dimension is valid");
        let ball = Region::ball_at(origin, width);
        for s in &self.sites {
            for o in ball.sites() {
                let t = *s + *o;
                if !self.contains(&t) {
                    set.insert(t);
                }
            }
        }
        (!set.is_empty()).then(|| Region::from_set(self.dim, set))
    }

    /// L1 distance between the region and the complement of `outer`, i.e. the
    /// smallest `‖k − j‖` with `k` here and `j ∉ outer`.
    pub fn distance_to_complement_of(&self, outer: &Region) -> u32 {
        // the nearest outside site is reached within radius (max over sites of
        // the distance to outer's boundary) + 1; search growing shells
        let origin = Site::origin(self.dim).expect("region dimension is valid");
        let mut r = 0u32;
        loop {
            let shell = Region::ball_at(origin, r);
            for s in &self.sites {
                for o in shell.sites() {
                    if o.l1_norm() == r && !outer.contains(&(*s + *o)) {
                        return r;
                    }
                }
            }
            r += 1;
        }
    }
}

/// The L1 ball `B_L` centred at the origin of Z^d.
pub fn ball(dim: usize, radius: u32) -> Result<Region> {
    Ok(Region::ball_at(Site::origin(dim)?, radius))
}

/// A finite set of offsets describing the dependence neighborhood `V_0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    dim: usize,
    offsets: Vec<Site>,
    range: u32,
}

impl Stencil {
    pub fn new(dim: usize, offsets: impl IntoIterator<Item = Site>) -> Result<Self> {
        let set: BTreeSet<Site> = offsets.into_iter().collect();
        if set.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch);
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        let range = set.iter().map(Site::l1_norm).max().unwrap_or(0);
        Ok(Stencil { dim, offsets: set.into_iter().collect(), range })
    }

    /// `±e_i` for every axis.
    pub fn nearest_neighbor(dim: usize) -> Result<Self> {
        let mut v = Vec::new();
        for a in 0..dim {
            let e = Site::unit(dim, a)?;
            v.push(e);
            v.push(-e);
        }
        Stencil::new(dim, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offsets in lexicographic order; neighborhood patterns use this order.
    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn is_symmetric(&self) -> bool {
        self.offsets.iter().all(|o| self.offsets.binary_search(&-*o).is_ok())
    }
}

/// `Λ̄^(n)`: sites whose time-0 values can influence `region` after `n`
/// synchronous steps. Each step adds `k + V_0` for every `k` already in the
/// set; the set itself is kept, which makes the cone monotone in `n` even for
/// stencils that exclude the origin.
pub fn dependence_cone(region: &Region, steps: u32, stencil: &Stencil) -> Result<Region> {
    if stencil.dim() != region.dim() {
        return Err(Error::DimensionMismatch);
    }
    let mut set: BTreeSet<Site> = region.sites().iter().copied().collect();
    let mut frontier: Vec<Site> = set.iter().copied().collect();
    for _ in 0..steps {
        let mut next = Vec::new();
        for k in &frontier {
            for o in stencil.offsets() {
                let j = *k + *o;
                if set.insert(j) {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(Region::from_set(region.dim(), set))
}

/// `∂_iΛ = {k ∈ Λ : (k + V_0) ⊄ Λ}`; `None` when every neighborhood stays inside.
pub fn inner_boundary(region: &Region, stencil: &Stencil) -> Result<Option<Region>> {
    if stencil.dim() != region.dim() {
        return Err(Error::DimensionMismatch);
    }
    let set: BTreeSet<Site> = region
        .sites()
        .iter()
        .copied()
        .filter(|k| stencil.offsets().iter().any(|o| !region.contains(&(*k + *o))))
        .collect();
    Ok((!set.is_empty()).then(|| Region::from_set(region.dim(), set)))
}
