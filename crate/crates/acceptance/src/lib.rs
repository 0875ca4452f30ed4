//! Helpers for the acceptance run: a scorecard that prints one line per
//! criterion, and reference integrals computed without the library.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed: Duration,
}

#[derive(Debug, Default)]
pub struct Scorecard {
    outcomes: Vec<Outcome>,
}

/// Findings collected while a criterion runs.
#[derive(Debug, Default)]
pub struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.details
            .push(format!("    [{}] {detail}", if ok { "ok" } else { "FAIL" }));
        self.passed &= ok;
    }

    pub fn note(&mut self, detail: impl Into<String>) {
        self.details.push(format!("    {}", detail.into()));
    }
}

impl Scorecard {
    pub fn run(&mut self, id: u32, title: &str, body: impl FnOnce(&mut Checks)) {
        let start = Instant::now();
        let mut checks = Checks::new();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| body(&mut checks)));
        if let Err(panic) = result {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            checks.check(false, format!("aborted: {message}"));
        }
        let outcome = Outcome {
            id,
            title: title.to_string(),
            passed: checks.passed,
            details: checks.details,
            elapsed: start.elapsed(),
        };
        println!(
            "{} criterion {}: {} ({:.1} s)",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.id,
            outcome.title,
            outcome.elapsed.as_secs_f64()
        );
        for line in &outcome.details {
            println!("{line}");
        }
        self.outcomes.push(outcome);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.id.to_string())
            .collect();
        if failed.is_empty() {
            format!("acceptance: all {} criteria passed", self.outcomes.len())
        } else {
            format!(
                "acceptance: {} of {} criteria passed; failed: {}",
                self.outcomes.len() - failed.len(),
                self.outcomes.len(),
                failed.join(", ")
            )
        }
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 18)
}

/// I(X;Y) in bits for equiprobable ±1 over a real Gaussian channel with
/// noise variance `s`, integrated from the definition.
pub fn bpsk_mi_by_integration(s: f64) -> f64 {
    let density = |y: f64, x: f64| (-(y - x).powi(2) / (2.0 * s)).exp() / (2.0 * PI * s).sqrt();
    let softplus = |t: f64| {
        if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        }
    };
    let integrand = |y: f64| {
        [1.0, -1.0]
            .iter()
            .map(|&x| {
                // ln p(y|x)/p(y), with p(y|−x)/p(y|x) = exp(−2xy/s)
                let log_ratio = LN_2 - softplus(-2.0 * x * y / s);
                0.5 * density(y, x) * log_ratio / LN_2
            })
            .sum::<f64>()
    };
    let reach = 1.0 + 40.0 * s.sqrt();
    let panels = 200;
    let width = 2.0 * reach / panels as f64;
    (0..panels)
        .map(|k| {
            let a = -reach + k as f64 * width;
            adaptive_simpson(&integrand, a, a + width, 1e-14)
        })
        .sum()
}
