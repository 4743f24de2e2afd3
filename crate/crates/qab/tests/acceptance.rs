//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs through the same `run_suite` entry point as the CLI, at a
//! non-degenerate parameter point (all six parameters genuinely complex).

use qab::config::RunConfig;
use qab::suites::{run_suite, CheckRecord};
use std::process::ExitCode;
use std::time::{Duration, Instant};

fn base(ms: &[usize], samples: usize) -> RunConfig {
    RunConfig {
        q: [1.1, 0.05],
        g: [0.4, 0.1],
        alpha: [0.6, 0.5],
        alpha_tilde: [0.7, 0.3],
        gamma: [1.3, -0.2],
        gamma_bar: [0.9, 0.4],
        m: ms.to_vec(),
        samples,
        seed: 20240917,
        ..RunConfig::default()
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

/// Every selected check must pass; an empty selection or an unevaluated point fails.
fn judge(suite: &str, cfg: &RunConfig, budget: Option<Duration>, select: impl Fn(&CheckRecord) -> bool) -> Outcome {
    let start = Instant::now();
    let report = match run_suite(suite, cfg) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("harness error: {e}") },
    };
    let elapsed = start.elapsed();
    let broken: Vec<&CheckRecord> = report.checks.iter().filter(|c| c.check.name == "point evaluated").collect();
    let chosen: Vec<&CheckRecord> = report.checks.iter().filter(|c| select(c) && !c.check.skipped).collect();
    let skipped = report.checks.iter().filter(|c| select(c) && c.check.skipped).count();
    let failed: Vec<&CheckRecord> = chosen.iter().copied().filter(|c| !c.check.passed).collect();
    let worst = chosen
        .iter()
        .filter(|c| !c.check.negative_control && c.check.tolerance > 0.0 && c.check.residual.is_finite())
        .map(|c| c.check.residual / c.check.tolerance)
        .fold(0.0f64, f64::max);
    let controls = chosen.iter().filter(|c| c.check.negative_control).count();
    let over_budget = budget.is_some_and(|b| elapsed > b);
    let mut detail = format!(
        "{} checks ({} negative controls), {} failed, {} skipped, worst residual/threshold {:.2e}, {:.1} s",
        chosen.len(),
        controls,
        failed.len(),
        skipped,
        worst,
        elapsed.as_secs_f64()
    );
    if let Some(b) = budget {
        detail += &format!(" (budget {} s)", b.as_secs());
    }
    for c in failed.iter().chain(broken.iter()).take(3) {
        detail += &format!(
            "\n      {} M={:?}: {:.3e} vs {:.1e} {}",
            c.check.name,
            c.check.ms,
            c.check.residual,
            c.check.tolerance,
            c.check.note.as_deref().unwrap_or("")
        );
    }
    Outcome { pass: !chosen.is_empty() && failed.is_empty() && broken.is_empty() && !over_budget, detail }
}

fn named(prefixes: &'static [&'static str]) -> impl Fn(&CheckRecord) -> bool {
    move |c| prefixes.iter().any(|p| c.check.name.starts_with(p))
}

fn main() -> ExitCode {
    // libtest-style flags (e.g. --nocapture, filters) are accepted and ignored.
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        (
            "representation relations, M 1..4, 20 points each",
            Box::new(|| judge("rep-check", &base(&[1, 2, 3, 4], 20), Some(Duration::from_secs(60)), |_| true)),
        ),
        (
            "S-matrix null space 1-dim, intertwining, E4/F4 ablation, M in {1,2,3}^2",
            Box::new(|| judge("smatrix", &base(&[1, 2, 3], 1), None, |_| true)),
        ),
        (
            "Yang-Baxter for all triples with M <= 2",
            Box::new(|| judge("ybe", &base(&[1, 2], 1), Some(Duration::from_secs(180)), |_| true)),
        ),
        (
            "closed-form K = boundary intertwiner, twisted-charge ablation, M 1..3",
            Box::new(|| judge("kmatrix", &base(&[1, 2, 3], 2), None, |_| true)),
        ),
        (
            "reflection equation, (M1,M2) <= (2,2), 5 points, trivial C_k control",
            Box::new(|| judge("bybe", &base(&[1, 2], 5), None, |_| true)),
        ),
        (
            "unitarity K(p)K(-p) = 1, M 1..3",
            Box::new(|| judge("unitarity", &base(&[1, 2, 3], 5), None, named(&["K(-p)"]))),
        ),
        (
            "C_k (anti)symmetry, M 2..4",
            Box::new(|| judge("unitarity", &base(&[2, 3, 4], 5), None, named(&["C_k"]))),
        ),
        (
            "rational limit of K, M 1..3",
            Box::new(|| judge("limits", &base(&[1, 2, 3], 2), None, named(&["rational"]))),
        ),
        (
            "Yangian limit of the twisted charges, M 1..3",
            Box::new(|| judge("limits", &base(&[1, 2, 3], 2), None, named(&["Yangian"]))),
        ),
        (
            "coideal expansions of the twisted charges, pairs <= (2,2)",
            Box::new(|| judge("coalgebra", &base(&[1, 2], 3), None, named(&["coideal"]))),
        ),
    ];
    let mut all = true;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.pass;
        println!("criterion {:>2}: {} - {title}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}", if all { "all criteria passed" } else { "FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
