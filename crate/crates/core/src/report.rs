//! Synthesis reports.
//!
//! Every quantity is emitted exactly: parameter counts as integers,
//! ratios as reduced fractions with a decimal companion. The table
//! renderer follows the usual architecture-table style — parameters in
//! 2-decimal millions, ratios to 2 decimals — while the document keeps
//! full precision.

use serde::{Deserialize, Serialize};

use crate::numeric::{parse_rational, ratio_u64, rounded_decimal};

/// Per-macro-layer slice of a synthesis result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerPlan {
    pub layer: String,
    pub factor: u64,
    pub output_channels: u64,
    /// Scaled micro-layer depths, branch by branch.
    pub scaled_depths: Vec<Vec<u64>>,
}

/// Full account of one synthesis run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisReport {
    pub network: String,
    pub alpha: u64,
    pub beta: u64,
    pub lambda: String,
    pub scope_aware: bool,
    pub objective: String,
    pub policy: String,
    pub baseline_params: u64,
    pub budget_fraction: String,
    pub budget_fraction_decimal: String,
    pub budget_floor: u64,
    pub ideal_params_per_class: String,
    pub achieved_params: u64,
    pub achieved_fraction: String,
    pub achieved_fraction_decimal: String,
    pub classifier_classes: u64,
    pub baseline_flops: u64,
    pub scaled_flops: u64,
    pub solution_space_affine: String,
    pub solution_space_non_affine: String,
    pub layers: Vec<LayerPlan>,
    pub bottleneck_flags: Vec<String>,
    pub approximate: bool,
    pub notes: Vec<String>,
}

fn millions(count: u64) -> String {
    rounded_decimal(&ratio_u64(count, 1_000_000), 2)
}

impl SynthesisReport {
    /// Canonical document form: pretty JSON, fixed field order, trailing
    /// newline. Identical reports serialize byte-identically.
    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        out.push('\n');
        out
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut t = String::new();
        let achieved_2dp = parse_rational(&self.achieved_fraction)
            .map(|r| rounded_decimal(&r, 2))
            .unwrap_or_else(|_| self.achieved_fraction.clone());
        t.push_str(&format!("synthesis report: {}\n", self.network));
        t.push_str(&format!(
            "  scope: alpha={} beta={} lambda={} scope-aware={}\n",
            self.alpha, self.beta, self.lambda, self.scope_aware
        ));
        t.push_str(&format!(
            "  objective: {}   policy: {}\n",
            self.objective, self.policy
        ));
        t.push_str(&format!(
            "  baseline params: {} ({} M)   flops: {}\n",
            self.baseline_params,
            millions(self.baseline_params),
            self.baseline_flops
        ));
        t.push_str(&format!(
            "  budget: fraction {} ({})   floor {}   ideal per-class {}\n",
            self.budget_fraction,
            self.budget_fraction_decimal,
            self.budget_floor,
            self.ideal_params_per_class
        ));
        t.push_str(&format!(
            "  achieved: {} params ({} M)   fraction {} (~{})   flops: {}\n",
            self.achieved_params,
            millions(self.achieved_params),
            self.achieved_fraction_decimal,
            achieved_2dp,
            self.scaled_flops
        ));
        t.push_str(&format!("  classifier: {}-way\n", self.classifier_classes));
        t.push_str(&format!(
            "  solution space: affine {}   non-affine {}\n",
            self.solution_space_affine, self.solution_space_non_affine
        ));
        t.push_str("  layer plan:\n");
        let name_width = self
            .layers
            .iter()
            .map(|l| l.layer.len())
            .max()
            .unwrap_or(5)
            .max(5);
        t.push_str(&format!(
            "    {:<name_width$}  {:>6}  {:>8}  depths\n",
            "layer", "factor", "channels"
        ));
        for layer in &self.layers {
            let depths = layer
                .scaled_depths
                .iter()
                .map(|branch| {
                    let inner = branch
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(",");
                    format!("[{inner}]")
                })
                .collect::<Vec<_>>()
                .join(" ");
            t.push_str(&format!(
                "    {:<name_width$}  {:>6}  {:>8}  {}\n",
                layer.layer, layer.factor, layer.output_channels, depths
            ));
        }
        if self.bottleneck_flags.is_empty() {
            t.push_str("  bottlenecks: none\n");
        } else {
            t.push_str("  bottlenecks:\n");
            for flag in &self.bottleneck_flags {
                t.push_str(&format!("    {flag}\n"));
            }
        }
        if self.approximate {
            t.push_str("  note: solved with quantized sums; optimality not guaranteed\n");
        }
        for note in &self.notes {
            t.push_str(&format!("  note: {note}\n"));
        }
        t
    }
}
