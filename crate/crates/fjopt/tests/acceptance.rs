//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use fjopt::core::reduction::ReductionKind;
use fjopt::report::ReportRow;
use fjopt::suites::{
    clique_anchor_rows, reduction_anchor_rows, reduction_sweep, run_suite, Backend, Suite, SuiteConfig,
    L1_SWEEP_MAX_N, NEGATIVITY_PROBES,
};

const SEED: u64 = 2024;

struct Outcome {
    rows: Vec<ReportRow>,
    error: Option<String>,
    elapsed: Duration,
}

fn timed(f: impl FnOnce() -> Result<Vec<ReportRow>, String>) -> Outcome {
    let start = Instant::now();
    let res = f();
    let elapsed = start.elapsed();
    match res {
        Ok(rows) => Outcome { rows, error: None, elapsed },
        Err(e) => Outcome { rows: Vec::new(), error: Some(e), elapsed },
    }
}

fn suite(s: Suite, trials: usize, backend: Backend) -> Result<Vec<ReportRow>, String> {
    run_suite(s, SuiteConfig { seed: SEED, trials, backend }).map_err(|e| e.to_string())
}

/// Prints the criterion line; `limit` adds a wall-clock requirement.
fn judge(n: usize, name: &str, out: Outcome, limit: Option<Duration>) -> bool {
    let failed: Vec<&ReportRow> = out.rows.iter().filter(|r| !r.pass).collect();
    let mut ok = out.error.is_none() && failed.is_empty() && !out.rows.is_empty();
    let mut detail = format!("{} rows, {} failed, {:.2}s", out.rows.len(), failed.len(), out.elapsed.as_secs_f64());
    if let Some(limit) = limit {
        let in_time = out.elapsed < limit;
        ok &= in_time;
        detail.push_str(&format!(" (limit {}s)", limit.as_secs()));
    }
    if let Some(e) = &out.error {
        detail.push_str(&format!("; error: {e}"));
    }
    if let Some(r) = failed.first() {
        detail.push_str(&format!("; first failure: {} {} {} ({})", r.experiment, r.quantity, r.value_rational, r.bound));
    }
    println!("criterion {n}: {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let mut all = true;

    all &= judge(
        1,
        "equilibrium exact residual and iterate gap",
        timed(|| {
            let mut rows = suite(Suite::Equilibrium, 200, Backend::Exact)?;
            rows.extend(suite(Suite::Equilibrium, 200, Backend::Float)?);
            Ok(rows)
        }),
        Some(Duration::from_secs(30)),
    );

    all &= judge(
        2,
        "gradient and second partials vs finite differences",
        timed(|| {
            let mut rows = suite(Suite::Gradients, 100, Backend::Exact)?;
            rows.extend(suite(Suite::Hessians, 100, Backend::Exact)?);
            Ok(rows)
        }),
        None,
    );

    // 18 trials cover n = 2..=10 twice.
    all &= judge(
        3,
        "clique closed forms and anchors",
        timed(|| {
            let rows = suite(Suite::Clique, 18, Backend::Exact)?;
            Ok(rows.into_iter().filter(|r| r.experiment == "clique").collect())
        }),
        None,
    );

    all &= judge(4, "monotonicity of y", timed(|| suite(Suite::Monotone, 50, Backend::Exact)), None);
    all &= judge(5, "sensitivity bound", timed(|| suite(Suite::Sensitivity, 50, Backend::Exact)), None);
    all &= judge(6, "perturbation sandwich", timed(|| suite(Suite::Perturbation, 4, Backend::Exact)), None);

    all &= judge(
        7,
        "L0 reduction anchors and brute-force agreement",
        timed(|| {
            let mut rows: Vec<ReportRow> = reduction_anchor_rows()
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|r| r.experiment == "reduction-l0")
                .collect();
            rows.extend(reduction_sweep(ReductionKind::L0, 8).map_err(|e| e.to_string())?);
            Ok(rows)
        }),
        Some(Duration::from_secs(60)),
    );

    all &= judge(
        8,
        "L1 reduction anchors, sweep and grid concentration",
        timed(|| {
            let mut rows: Vec<ReportRow> = reduction_anchor_rows()
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|r| r.experiment == "reduction-l1")
                .collect();
            rows.extend(reduction_sweep(ReductionKind::L1, L1_SWEEP_MAX_N).map_err(|e| e.to_string())?);
            rows.extend(suite(Suite::Structure, 1, Backend::Exact)?);
            Ok(rows)
        }),
        None,
    );

    all &= judge(
        9,
        "negativity at corrected delta",
        timed(|| suite(Suite::Negativity, NEGATIVITY_PROBES, Backend::Exact)),
        None,
    );

    all &= judge(
        10,
        "clique mass erratum reproduced",
        timed(|| {
            let rows = clique_anchor_rows().map_err(|e| e.to_string())?;
            Ok(rows.into_iter().filter(|r| r.experiment == "clique-erratum").collect())
        }),
        None,
    );

    if !all {
        std::process::exit(1);
    }
}
