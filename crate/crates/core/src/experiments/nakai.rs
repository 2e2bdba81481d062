//! The sine-of-logarithm exponent on the dyadic annuli `B_m \ B_{m+1}` of
//! `[0, 1)`, where `B_m = [0, 2^-m)`. Its oscillation on `B_N` does not
//! shrink, so `P(B_N)^(g_-(B_N) - g_+(B_N)) >= 2^(N/2)` for every `N`.
//!
//! The dyadic filtration is compressed to the annuli: `g` is constant on each
//! annulus, so only the sets `B_m` matter. Leaf `m < D` is the annulus
//! `B_m \ B_{m+1}` (probability `2^-(m+1)`), leaf `D` is `B_D`.

use crate::error::{Error, Result};
use crate::space::{validate_filtration, FilteredSpace};

use super::{ConstantReport, Witness, WitnessKind};

/// Largest annulus depth tried before giving up.
pub const NAKAI_MAX_DEPTH: usize = 4096;

fn c(n: usize) -> f64 {
    1.0 / (n as f64 * std::f64::consts::LN_2 + 1.0)
}

/// `h_m = sum_{n <= m} c_n - c_{m+1}` with `c_n = 1 / ln(2^n e)`; the value
/// of `h` on the annulus `B_m \ B_{m+1}`.
pub fn nakai_h(m: usize) -> f64 {
    (1..=m).map(c).sum::<f64>() - c(m + 1)
}

fn h_table(depth: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut partial = 0.0;
    for m in 0..=depth {
        if m > 0 {
            partial += c(m);
        }
        out.push(partial - c(m + 1));
    }
    out
}

fn spread(g: &[f64], n: usize, depth: usize) -> (f64, usize, usize) {
    let mut hi = (f64::NEG_INFINITY, n);
    let mut lo = (f64::INFINITY, n);
    for (m, &v) in g.iter().enumerate().take(depth).skip(n) {
        if v > hi.0 {
            hi = (v, m);
        }
        if v < lo.0 {
            lo = (v, m);
        }
    }
    (hi.0 - lo.0, hi.1, lo.1)
}

/// `2^(N (g_+ - g_-))` over the annuli `N..depth` of `B_N`.
pub fn nakai_witness_ratio(n: usize, depth: usize) -> f64 {
    let g: Vec<f64> = h_table(depth).iter().map(|h| h.sin()).collect();
    2f64.powf(n as f64 * spread(&g, n, depth).0)
}

/// Compressed space with `depth` annuli and the tail `B_depth`; level `n`
/// separates the first `n` annuli and keeps `B_n` as one block.
pub fn nakai_space(depth: usize) -> Result<FilteredSpace> {
    let mut probs: Vec<f64> = (0..depth).map(|m| 0.5f64.powi(m as i32 + 1)).collect();
    probs.push(0.5f64.powi(depth as i32));
    let levels = (0..=depth)
        .map(|n| {
            let mut blocks: Vec<Vec<usize>> = (0..n).map(|m| vec![m]).collect();
            blocks.push((n..=depth).collect());
            blocks
        })
        .collect();
    validate_filtration(levels, probs)
}

/// Checks `P(B_N)^(g_- - g_+) >= 2^(N/2)` for `N = 1..=max_n` and the
/// increment bounds `0 < h_{m+1} - h_m <= 2 / ((m+1) ln 2)` for `m < D`.
///
/// `D` is the smallest depth at which every `B_N` contains annuli with
/// `g >= 1/2` and `g <= 0`. Values of `h` on annuli are exact; only the
/// tail leaf `B_D` is truncated.
pub fn nakai_sadasue(max_n: usize) -> Result<ConstantReport> {
    if !(1..=30).contains(&max_n) {
        return Err(Error::Validation(format!("max_n must be in 1..=30, got {max_n}")));
    }
    let mut report = ConstantReport::new("P(B_N)^(g_-(B_N) - g_+(B_N))", "2^(N/2)");
    let h = h_table(NAKAI_MAX_DEPTH);
    let g: Vec<f64> = h.iter().map(|v| v.sin()).collect();
    let first = |pred: &dyn Fn(f64) -> bool| (max_n..NAKAI_MAX_DEPTH).find(|&m| pred(g[m]));
    let (y, z) = match (first(&|v| v >= 0.5), first(&|v| v <= 0.0)) {
        (Some(y), Some(z)) => (y, z),
        _ => {
            return Err(Error::Resource(format!(
                "no sine-window witnesses below depth {NAKAI_MAX_DEPTH} for N = {max_n}"
            )))
        }
    };
    let depth = y.max(z) + 1;

    for n in 1..=max_n {
        let (s, hi, lo) = spread(&g, n, depth);
        let ratio = 2f64.powf(n as f64 * s);
        let bound = 2f64.powf(n as f64 / 2.0);
        if ratio < bound {
            report.violations += 1;
        }
        report.ratios.push(ratio);
        report.bounds.push(bound);
        report.point("ratio", n as f64, ratio);
        report.point("bound", n as f64, bound);
        report.param(&format!("witness_y_{n}"), hi as f64);
        report.param(&format!("witness_z_{n}"), lo as f64);
    }
    let mut increment_failures = 0usize;
    for m in 0..depth {
        let d = h[m + 1] - h[m];
        if m >= 1 && !(d > 0.0 && d <= 2.0 / ((m + 1) as f64 * std::f64::consts::LN_2)) {
            increment_failures += 1;
        }
        report.point("h", m as f64, h[m]);
    }
    report.violations += increment_failures;

    let w_index = report.ratios.len() - 1;
    report.witness = Some(Witness {
        index: w_index,
        ratio: report.ratios[w_index],
        instance: WitnessKind::NakaiSadasue { n: max_n, depth },
    });
    report.param("depth", depth as f64);
    report.param("h_1", h[1]);
    report.param("h_depth", h[depth]);
    report.param("increment_failures", increment_failures as f64);
    report.param("tail_probability", 0.5f64.powi(depth as i32));
    report.param("tail_first_omitted_term", c(depth + 1));
    report.notes.push(format!(
        "h is exact on the annuli 0..{depth}; on B_{depth} (probability 2^-{depth}) the series is cut at n = {depth}, \
         the omitted part starting with c_{} = {:e}",
        depth + 1,
        c(depth + 1)
    ));
    report.finalize();
    Ok(report)
}
