use serde::{Deserialize, Serialize};

/// Slack below which an exact-mode comparison counts as equality.
pub const EXACT_TOL: f64 = 1e-12;

/// Flag attached to verdicts whose bound is only conjectured.
pub const CONJECTURE: &str = "CONJECTURE";

/// Outcome of one entanglement or nonlocality criterion.
///
/// `detected ⇔ quantity > bound + margin·stderr + 1e-12`. Criteria of the form
/// "separable ⇒ X ≥ Y" are reported in gap form (`quantity = Y − X`, `bound = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub quantity: f64,
    pub bound: f64,
    /// Number of standard errors added to the bound.
    pub margin: f64,
    pub stderr: f64,
    pub detected: bool,
    pub flags: Vec<String>,
}

impl Verdict {
    pub fn exact(criterion: &str, quantity: f64, bound: f64) -> Self {
        Self::statistical(criterion, quantity, bound, 0.0, 0.0)
    }

    pub fn statistical(criterion: &str, quantity: f64, bound: f64, stderr: f64, margin: f64) -> Self {
        let detected = quantity > bound + margin * stderr + EXACT_TOL;
        Self { criterion: criterion.to_string(), quantity, bound, margin, stderr, detected, flags: vec![] }
    }

    /// Gap form of "separable ⇒ measured ≥ lower".
    pub fn lower_bound(criterion: &str, measured: f64, lower: f64) -> Self {
        Self::exact(criterion, lower - measured, 0.0)
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flags.push(flag.to_string());
        self
    }

    /// Distance past the (margin-adjusted) bound; positive when detected.
    pub fn excess(&self) -> f64 {
        self.quantity - self.bound - self.margin * self.stderr
    }
}
