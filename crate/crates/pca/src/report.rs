//! CSV and JSON-lines writers. Every real is printed with 17 significant
//! digits so values survive a text round trip unchanged.

use std::fmt::Write as _;

use pca_core::analysis::{error_tag, CellKind, CellValue, DecayFit, RateOutcome, ScanConfig, ScanReport};
use pca_core::coupling::RhoEstimate;
use pca_core::exact::{GapMethod, GapMode};
use serde_json::{json, Value};

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const RHO_HEADER: &str = "n,p_hat,ci_halfwidth,samples,beta,L,seed";

pub fn rho_row(e: &RhoEstimate, beta: f64, radius: u32, seed: u64) -> String {
    format!("{},{},{},{},{},{},{}", e.n, num(e.p_hat), num(e.ci_halfwidth), e.samples, num(beta), radius, seed)
}

pub const SCAN_HEADER: &str = "cell,beta,kind,L,n,value,ci_halfwidth,samples,method,status";

/// One row per grid cell.
pub fn scan_csv(report: &ScanReport) -> String {
    let mut out = String::from(SCAN_HEADER);
    out.push('\n');
    for c in &report.cells {
        let (kind, l, n) = match c.kind {
            CellKind::Gap { radius } => ("gap", radius.to_string(), String::new()),
            CellKind::Rho { n } => ("rho", String::new(), n.to_string()),
        };
        let (value, hw, samples, method, status) = match &c.result {
            Ok(CellValue::Gap(g)) => match g.method {
                GapMethod::Exact => (num(g.value), num(0.0), String::new(), "exact", "ok".to_string()),
                GapMethod::MonteCarlo { stderr, samples, .. } => {
                    (num(g.value), num(pca_core::stats::Z95 * stderr), samples.to_string(), "mc", "ok".to_string())
                }
            },
            Ok(CellValue::Rho(e)) => (num(e.p_hat), num(e.ci_halfwidth), e.samples.to_string(), "coupling", "ok".to_string()),
            Err(e) => (String::new(), String::new(), String::new(), "", format!("error:{}", error_tag(e))),
        };
        writeln!(out, "{},{},{kind},{l},{n},{value},{hw},{samples},{method},{status}", c.index, num(c.beta)).expect("string write");
    }
    out
}

pub const SUMMARY_HEADER: &str = "beta,dv_sum,spatial_M,spatial_C,spatial_rsq,spatial_excluded,temporal_rate,temporal_C,temporal_rsq,temporal_excluded,n1,lambda,c_hat,kappa";

fn fit_cols(f: &Result<DecayFit, pca_core::Error>) -> String {
    match f {
        Ok(f) => format!("{},{},{},{}", num(f.rate), num(f.amplitude), num(f.rsq), f.excluded),
        Err(_) => ",,,".into(),
    }
}

/// One row per `β`.
pub fn summary_csv(report: &ScanReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in &report.summaries {
        let (n1, lambda) = match s.n1 {
            Some((n, l)) => (n.to_string(), num(l)),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{n1},{lambda},{},{}",
            num(s.beta),
            num(s.dv_sum),
            fit_cols(&s.spatial_fit),
            fit_cols(&s.temporal_fit),
            num(report.constants.c_hat),
            num(report.constants.kappa)
        )
        .expect("string write");
    }
    out
}

fn fit_json(f: &Result<DecayFit, pca_core::Error>) -> Value {
    match f {
        Ok(f) => json!({"C": f.amplitude, "rate": f.rate, "rsq": f.rsq, "used": f.used, "excluded": f.excluded}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

/// Metadata line, one line per cell and one per `β` summary.
pub fn scan_jsonl(cfg: &ScanConfig, report: &ScanReport) -> String {
    let kernel: Vec<Value> = cfg.kernel.entries().iter().map(|(o, w)| json!({"offset": o.coords(), "weight": w})).collect();
    let mode = match cfg.gap_mode {
        GapMode::ExactOnly => json!("exact-only"),
        GapMode::Auto(o) => json!({"mc-allowed": {"samples": o.samples, "burn_in": o.burn_in, "window": o.window}}),
    };
    let mut lines = vec![json!({
        "type": "meta",
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "rule": {"class": "tanh", "dim": cfg.kernel.dim(), "kernel": kernel},
        "beta": cfg.betas,
        "L": cfg.radii,
        "n": cfg.horizons,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "mode": mode,
        "c_hat": report.constants.c_hat,
        "c_hat_definition": "(2R+1)^d",
        "kappa": report.constants.kappa,
        "range": report.constants.range,
    })];
    for c in &report.cells {
        let mut v = json!({"type": "cell", "cell": c.index, "beta": c.beta});
        match c.kind {
            CellKind::Gap { radius } => v["L"] = json!(radius),
            CellKind::Rho { n } => v["n"] = json!(n),
        }
        match &c.result {
            Ok(CellValue::Gap(g)) => {
                v["gap"] = json!(g.value);
                if let GapMethod::MonteCarlo { stderr, samples, burn_in, window, early } = g.method {
                    v["mc"] = json!({"stderr": stderr, "samples": samples, "burn_in": burn_in, "window": window, "early_window_mean": early});
                }
            }
            Ok(CellValue::Rho(e)) => {
                v["rho"] = json!({"p_hat": e.p_hat, "ci_low": e.ci_low, "ci_high": e.ci_high, "successes": e.successes, "samples": e.samples});
            }
            Err(e) => v["error"] = json!({"tag": error_tag(e), "message": e.to_string()}),
        }
        lines.push(v);
    }
    for s in &report.summaries {
        let rates: Vec<Value> = s
            .rates
            .iter()
            .map(|(n, r)| match r {
                Ok(RateOutcome::Accepted { lambda, product }) => json!({"n1": n, "accepted": true, "lambda": lambda, "product": product}),
                Ok(RateOutcome::Rejected { product }) => json!({"n1": n, "accepted": false, "product": product}),
                Err(e) => json!({"n1": n, "error": e.to_string()}),
            })
            .collect();
        lines.push(json!({
            "type": "summary",
            "beta": s.beta,
            "dv_sum": s.dv_sum,
            "spatial_fit": fit_json(&s.spatial_fit),
            "temporal_fit": fit_json(&s.temporal_fit),
            "rate_lambda": rates,
            "n1": s.n1.map(|x| x.0),
            "lambda": s.n1.map(|x| x.1),
        }));
    }
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}
