//! Decay fits, the explicit temporal rate, the recursive inequalities and
//! the `β` scan that ties them together.

use alloc::string::String;
use alloc::vec::Vec;

use crate::coupling::{estimate_rho, RhoEstimate};
use crate::error::{Error, Result};
use crate::exact::{gap_a, Gap, GapMethod, GapMode};
use crate::exec::Executor;
use crate::lattice::ball;
use crate::math;
use crate::noise::RandomnessKey;
use crate::rule::{ClassCRule, InteractionKernel, UpdateRule};
use crate::stats::Z95;

/// `y ≈ C·e^{−M x}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub rsq: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Least squares on `(x, ln y)` over the points with `y > 0`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<DecayFit> {
    let pos: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, y)| y > 0.0 && y.is_finite() && x.is_finite()).collect();
    if pos.len() < 3 {
        return Err(Error::TooFewPoints(pos.len()));
    }
    let n = pos.len() as f64;
    let mx = pos.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pos.iter().map(|p| math::ln(p.1)).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pos {
        let (dx, dy) = (x - mx, math::ln(y) - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Parameter("fit needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let rsq = if syy <= f64::EPSILON * n { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit { amplitude: math::exp(intercept), rate: -slope, rsq, used: pos.len(), excluded: points.len() - pos.len() })
}

/// [`fit_exponential`] on `(x, y, half-width)` triples, dropping points with
/// `y < 10·half-width`.
pub fn fit_exponential_excluding_noise(points: &[(f64, f64, f64)]) -> Result<DecayFit> {
    let kept: Vec<(f64, f64)> = points.iter().filter(|p| p.1 >= 10.0 * p.2).map(|p| (p.0, p.1)).collect();
    let dropped = points.len() - kept.len();
    let mut fit = fit_exponential(&kept)?;
    fit.excluded += dropped;
    Ok(fit)
}

/// Geometry constants of the explicit rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateConstants {
    pub dim: usize,
    pub range: u32,
    /// `(2R + 1)^d`, the smallest constant with `(2nR + 1)^d ≤ Ĉ·n^d` for all `n ≥ 1`.
    pub c_hat: f64,
    pub kappa: f64,
}

impl RateConstants {
    pub fn new(dim: usize, range: u32, kappa: f64) -> Self {
        RateConstants { dim, range, c_hat: math::powi(2.0 * range as f64 + 1.0, dim as u32), kappa }
    }

    pub fn of<R: UpdateRule + ?Sized>(rule: &R) -> Self {
        Self::new(rule.stencil().dim(), rule.stencil().range(), rule.spin_space().kappa())
    }

    /// `(2nR + 1)^d`.
    pub fn cone_volume_bound(&self, n: u64) -> f64 {
        math::powi(2.0 * n as f64 * self.range as f64 + 1.0, self.dim as u32)
    }

    /// `2^d·Ĉ·n^d·ρ`.
    pub fn product(&self, n1: u64, rho: f64) -> f64 {
        math::powi(2.0, self.dim as u32) * self.c_hat * math::powi(n1 as f64, self.dim as u32) * rho
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateOutcome {
    /// `λ = −ln(product)/(2 n1) > 0`.
    Accepted { lambda: f64, product: f64 },
    /// `product ≥ 1`: `n1` too small.
    Rejected { product: f64 },
}

impl RateOutcome {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            RateOutcome::Accepted { lambda, .. } => Some(*lambda),
            RateOutcome::Rejected { .. } => None,
        }
    }

    pub fn product(&self) -> f64 {
        match self {
            RateOutcome::Accepted { product, .. } | RateOutcome::Rejected { product } => *product,
        }
    }
}

/// The explicit temporal rate from a single measured `ρ(n1)`.
pub fn rate_lambda(n1: u64, rho: f64, consts: &RateConstants) -> Result<RateOutcome> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Probability(rho));
    }
    if n1 == 0 {
        return Err(Error::Parameter("n1 must be at least 1".into()));
    }
    let product = consts.product(n1, rho);
    Ok(if product < 1.0 {
        RateOutcome::Accepted { lambda: -math::ln(product) / (2.0 * n1 as f64), product }
    } else {
        RateOutcome::Rejected { product }
    })
}

/// Smallest measured `n` whose estimate passes [`rate_lambda`].
pub fn choose_n1(estimates: &[RhoEstimate], consts: &RateConstants) -> Option<(u64, f64)> {
    let mut sorted: Vec<&RhoEstimate> = estimates.iter().collect();
    sorted.sort_by_key(|e| e.n);
    sorted.into_iter().find_map(|e| match rate_lambda(e.n, e.p_hat, consts) {
        Ok(RateOutcome::Accepted { lambda, .. }) => Some((e.n, lambda)),
        _ => None,
    })
}

/// `lhs ≤ rhs` judged on interval ends: the lower 95% end of the left side
/// against the upper end of the right side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs − lhs_low) + (rhs_high − rhs)`.
    pub slack: f64,
    /// `rhs + slack − lhs`; negative when violated.
    pub margin: f64,
    pub holds: bool,
}

impl InequalityReport {
    fn new(lhs: f64, lhs_low: f64, rhs: f64, rhs_high: f64) -> Self {
        let slack = (lhs - lhs_low) + (rhs_high - rhs);
        let margin = rhs_high - lhs_low;
        InequalityReport { lhs, rhs, slack, margin, holds: margin >= 0.0 }
    }
}

/// `ρ(2n) ≤ (2nR + 1)^d·ρ(n)²`.
pub fn check_recursion_rho(rho_n: &RhoEstimate, rho_2n: &RhoEstimate, consts: &RateConstants) -> InequalityReport {
    let factor = consts.cone_volume_bound(rho_n.n);
    InequalityReport::new(rho_2n.p_hat, rho_2n.ci_low, factor * rho_n.p_hat * rho_n.p_hat, factor * rho_n.ci_high * rho_n.ci_high)
}

/// `ρ(2n) ≤ 2(2L + 1)^d·ρ(n)² + 2κ·gap_L`, where the gap carries a 95%
/// half-width (zero when exact).
pub fn check_recursion_mixed(
    rho_n: &RhoEstimate,
    rho_2n: &RhoEstimate,
    radius: u32,
    gap: f64,
    gap_halfwidth: f64,
    consts: &RateConstants,
) -> InequalityReport {
    let factor = 2.0 * math::powi(2.0 * radius as f64 + 1.0, consts.dim as u32);
    let rhs = factor * rho_n.p_hat * rho_n.p_hat + 2.0 * consts.kappa * gap;
    let rhs_high = factor * rho_n.ci_high * rho_n.ci_high + 2.0 * consts.kappa * (gap + gap_halfwidth);
    InequalityReport::new(rho_2n.p_hat, rho_2n.ci_low, rhs, rhs_high)
}

/// `ρ(n) ≤ κ·gap_L` for a large-`n` estimate, one report per `(L, gap, half-width)`.
pub fn check_hwm(rho: &RhoEstimate, gaps: &[(u32, f64, f64)], consts: &RateConstants) -> Vec<(u32, InequalityReport)> {
    gaps.iter()
        .map(|&(l, g, hw)| (l, InequalityReport::new(rho.p_hat, rho.ci_low, consts.kappa * g, consts.kappa * (g + hw))))
        .collect()
}

/// 95% half-width of a gap: zero when exact.
pub fn gap_halfwidth(gap: &Gap) -> f64 {
    match gap.method {
        GapMethod::Exact => 0.0,
        GapMethod::MonteCarlo { stderr, .. } => Z95 * stderr,
    }
}

/// `ρ̂(n) ≤ e^{−λ(n − n1)}·ρ̂(n1)·(1 + slack)` at every measured `n ≥ n1`,
/// where `slack` is the relative half-width of each point.
pub fn decay_envelope_holds(estimates: &[RhoEstimate], lambda: f64, n1: u64) -> bool {
    let Some(base) = estimates.iter().find(|e| e.n == n1) else {
        return false;
    };
    estimates.iter().filter(|e| e.n >= n1).all(|e| {
        let envelope = math::exp(-lambda * (e.n - n1) as f64) * base.ci_high;
        e.ci_low <= envelope
    })
}

/// A `β` scan over one kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub kernel: InteractionKernel,
    pub betas: Vec<f64>,
    pub radii: Vec<u32>,
    pub horizons: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    pub gap_mode: GapMode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellKind {
    Gap { radius: u32 },
    Rho { n: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellValue {
    Gap(Gap),
    Rho(RhoEstimate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanCell {
    pub index: u64,
    pub beta: f64,
    pub kind: CellKind,
    pub result: core::result::Result<CellValue, Error>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaSummary {
    pub beta: f64,
    pub dv_sum: f64,
    pub spatial_fit: core::result::Result<DecayFit, Error>,
    pub temporal_fit: core::result::Result<DecayFit, Error>,
    /// Outcome of [`rate_lambda`] at each measured horizon, ascending.
    pub rates: Vec<(u64, core::result::Result<RateOutcome, Error>)>,
    /// Smallest accepted horizon and its rate.
    pub n1: Option<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub constants: RateConstants,
    pub cells: Vec<ScanCell>,
    pub summaries: Vec<BetaSummary>,
}

impl ScanReport {
    pub fn any_success(&self) -> bool {
        self.cells.iter().any(|c| c.result.is_ok())
    }

    pub fn gap(&self, beta: f64, radius: u32) -> Option<&Gap> {
        self.cells.iter().find_map(|c| match (&c.kind, &c.result) {
            (CellKind::Gap { radius: r }, Ok(CellValue::Gap(g))) if c.beta == beta && *r == radius => Some(g),
            _ => None,
        })
    }

    pub fn rho(&self, beta: f64, n: u64) -> Option<&RhoEstimate> {
        self.cells.iter().find_map(|c| match (&c.kind, &c.result) {
            (CellKind::Rho { n: m }, Ok(CellValue::Rho(e))) if c.beta == beta && *m == n => Some(e),
            _ => None,
        })
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Parameter(alloc::format!("{name}: {msg}")));
        if self.betas.is_empty() {
            return field("beta", "grid is empty");
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return field("beta", &alloc::format!("{b} is not a finite non-negative number"));
        }
        if self.radii.is_empty() && self.horizons.is_empty() {
            return field("L/n", "both grids are empty");
        }
        if !self.horizons.is_empty() && self.samples == 0 {
            return field("samples", "must be at least 1");
        }
        Ok(())
    }

    /// Cells in β-major order, gaps before horizons; the position is the cell
    /// index that keys its randomness.
    pub fn cells(&self) -> Vec<(f64, CellKind)> {
        let mut out = Vec::new();
        for &b in &self.betas {
            out.extend(self.radii.iter().map(|&r| (b, CellKind::Gap { radius: r })));
            out.extend(self.horizons.iter().map(|&n| (b, CellKind::Rho { n })));
        }
        out
    }

    pub fn cell_key(&self, index: u64) -> RandomnessKey {
        RandomnessKey::new(self.seed).with_experiment(index)
    }
}

fn run_cell<E: Executor + ?Sized>(exec: &E, cfg: &ScanConfig, index: u64, beta: f64, kind: &CellKind) -> Result<CellValue> {
    let rule = ClassCRule::new(beta, cfg.kernel.clone())?;
    let key = cfg.cell_key(index);
    match *kind {
        CellKind::Gap { radius } => {
            let mode = match cfg.gap_mode {
                GapMode::Auto(opts) => GapMode::Auto(crate::exact::McOptions { key, ..opts }),
                m => m,
            };
            gap_a(exec, &rule, radius, mode).map(CellValue::Gap)
        }
        CellKind::Rho { n } => {
            let steps = u32::try_from(n).map_err(|_| Error::Parameter("horizon too large".into()))?;
            let region = ball(rule.dim(), steps * rule.range())?;
            estimate_rho(exec, &rule, &region, n, cfg.samples, &key).map(CellValue::Rho)
        }
    }
}

/// Every cell of the grid plus per-`β` fits and rate outcomes. Cell errors
/// are recorded and the scan continues.
pub fn phase_scan<E: Executor + ?Sized>(exec: &E, cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let probe = ClassCRule::new(0.0, cfg.kernel.clone())?;
    let constants = RateConstants::of(&probe);
    let cells: Vec<ScanCell> = cfg
        .cells()
        .into_iter()
        .enumerate()
        .map(|(i, (beta, kind))| {
            let result = run_cell(exec, cfg, i as u64, beta, &kind);
            ScanCell { index: i as u64, beta, kind, result }
        })
        .collect();
    let mut summaries = Vec::new();
    for &beta in &cfg.betas {
        let rule = ClassCRule::new(beta, cfg.kernel.clone())?;
        let mut gap_points = Vec::new();
        let mut rho_points = Vec::new();
        let mut estimates = Vec::new();
        for c in cells.iter().filter(|c| c.beta == beta) {
            match &c.result {
                Ok(CellValue::Gap(g)) => {
                    if let CellKind::Gap { radius } = c.kind {
                        gap_points.push((radius as f64, g.value, gap_halfwidth(g)));
                    }
                }
                Ok(CellValue::Rho(e)) => {
                    rho_points.push((e.n as f64, e.p_hat, e.ci_halfwidth));
                    estimates.push(*e);
                }
                Err(_) => {}
            }
        }
        estimates.sort_by_key(|e| e.n);
        let rates = estimates.iter().map(|e| (e.n, rate_lambda(e.n, e.p_hat, &constants))).collect();
        summaries.push(BetaSummary {
            beta,
            dv_sum: rule.dv_sum(),
            spatial_fit: fit_exponential_excluding_noise(&gap_points),
            temporal_fit: fit_exponential_excluding_noise(&rho_points),
            rates,
            n1: choose_n1(&estimates, &constants),
        });
    }
    Ok(ScanReport { constants, cells, summaries })
}

/// Short machine-readable tag for an error kept in a scan cell.
pub fn error_tag(e: &Error) -> String {
    let s = match e {
        Error::BudgetExceeded { .. } => "budget",
        Error::RegionTooSmall { .. } => "region",
        Error::Probability(_) => "probability",
        Error::TooFewPoints(_) => "too-few-points",
        Error::Parameter(_) => "parameter",
        _ => "error",
    };
    String::from(s)
}
