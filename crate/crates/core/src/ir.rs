//! Intermediate representation for convolutional networks.
//!
//! A [`Network`] is an ordered list of macro-layers. Each macro-layer holds
//! one or more parallel [`Branch`]es, and a branch is a sequential chain of
//! [`MicroLayer`]s (filter-banks). Data flows macro-layer to macro-layer;
//! branch outputs concatenate, so a macro-layer's output channel count is
//! the sum of its branches' final depths.
//!
//! Parameter and FLOP accounting is exact integer arithmetic, convolutional
//! capacity only: biases and the classifier are excluded. Spatial geometry
//! (`out_rows`/`out_cols`) is declared, never inferred — scaling leaves
//! geometry untouched, so no stride/padding machinery exists here.

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One filter-bank: a set of `depth` kernels of identical dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroLayer {
    pub kernel_width: u64,
    pub kernel_height: u64,
    /// Number of kernels, i.e. output channels produced by this filter-bank.
    pub depth: u64,
    pub out_rows: u64,
    pub out_cols: u64,
    /// Declared input channel count. Optional; when present it is checked
    /// against the propagated channel wiring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_channels: Option<u64>,
}

impl MicroLayer {
    pub fn new(
        kernel_width: u64,
        kernel_height: u64,
        depth: u64,
        out_rows: u64,
        out_cols: u64,
    ) -> Self {
        Self {
            kernel_width,
            kernel_height,
            depth,
            out_rows,
            out_cols,
            in_channels: None,
        }
    }

    pub fn with_in_channels(mut self, in_channels: u64) -> Self {
        self.in_channels = Some(in_channels);
        self
    }

    /// Weight count for this filter-bank fed with `in_channels` inputs:
    /// `in_channels × kernel_width × kernel_height × depth`, bias-free.
    pub fn param_count(&self, in_channels: u64) -> u64 {
        in_channels * self.kernel_width * self.kernel_height * self.depth
    }

    /// Multiply-accumulates counted as two operations each:
    /// `2 × param_count × out_rows × out_cols`.
    pub fn flop_count(&self, in_channels: u64) -> u64 {
        2 * self.param_count(in_channels) * self.out_rows * self.out_cols
    }
}

/// A sequential chain of micro-layers forming one parallel data path.
/// Chains model reduce-then-convolve paths; each link consumes the
/// previous link's depth as its input channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Branch(pub Vec<MicroLayer>);

impl Branch {
    pub fn new(micro_layers: Vec<MicroLayer>) -> Self {
        Branch(micro_layers)
    }

    pub fn micro_layers(&self) -> &[MicroLayer] {
        &self.0
    }

    /// Depth of the final micro-layer; what this branch contributes to the
    /// macro-layer's concatenated output.
    pub fn output_channels(&self) -> u64 {
        self.0.last().map(|m| m.depth).unwrap_or(0)
    }
}

/// One sequential stage of the network. Removing a macro-layer bisects the
/// network; its branches run in parallel on the same input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroLayer {
    pub name: String,
    pub branches: Vec<Branch>,
    /// Opaque carriers for non-convolutional companions (pooling,
    /// normalization). Preserved verbatim through scaling.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

impl MacroLayer {
    pub fn new(name: impl Into<String>, branches: Vec<Branch>) -> Self {
        Self {
            name: name.into(),
            branches,
            annotations: Vec::new(),
        }
    }

    pub fn with_annotations(mut self, annotations: Vec<String>) -> Self {
        self.annotations = annotations;
        self
    }

    /// Concatenated output channels: the sum of branch final depths.
    pub fn output_channels(&self) -> u64 {
        self.branches.iter().map(Branch::output_channels).sum()
    }

    /// All micro-layer depths in this macro-layer, branch by branch.
    pub fn depths(&self) -> impl Iterator<Item = u64> + '_ {
        self.branches
            .iter()
            .flat_map(|b| b.0.iter().map(|m| m.depth))
    }

    pub fn micro_layer_count(&self) -> usize {
        self.branches.iter().map(|b| b.0.len()).sum()
    }
}

/// A whole architecture: macro-layer sequence plus classifier metadata.
/// The classifier itself carries no convolutional parameters here; only
/// its width is tracked so scope rewrites can adjust it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub name: String,
    pub input_channels: u64,
    pub classifier_classes: u64,
    pub macro_layers: Vec<MacroLayer>,
}

/// A violated structural rule, tied to the macro-layer it occurred in
/// (`"<network>"` for network-level rules).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationFinding {
    pub layer: String,
    pub rule: String,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.layer, self.rule)
    }
}

/// Channel wiring contradiction between a declared input width and the
/// propagated one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiringError {
    pub layer: String,
    pub declared: u64,
    pub propagated: u64,
}

impl fmt::Display for WiringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: declared in_channels {} but channel propagation yields {}",
            self.layer, self.declared, self.propagated
        )
    }
}

impl Error for WiringError {}

impl Network {
    pub fn new(
        name: impl Into<String>,
        input_channels: u64,
        classifier_classes: u64,
        macro_layers: Vec<MacroLayer>,
    ) -> Self {
        Self {
            name: name.into(),
            input_channels,
            classifier_classes,
            macro_layers,
        }
    }

    /// Concatenated output channel sum of each macro-layer, in order.
    pub fn channel_sums(&self) -> Vec<u64> {
        self.macro_layers
            .iter()
            .map(MacroLayer::output_channels)
            .collect()
    }

    /// Per-macro-layer parameter counts with propagated input channels.
    pub fn per_layer_param_counts(&self) -> Result<Vec<u64>, WiringError> {
        self.fold_layers(|micro, in_ch| micro.param_count(in_ch))
    }

    /// Total convolutional parameter count (classifier excluded).
    pub fn param_count(&self) -> Result<u64, WiringError> {
        Ok(self.per_layer_param_counts()?.iter().sum())
    }

    /// Total convolutional FLOP count, multiply-accumulate = 2 ops.
    pub fn flop_count(&self) -> Result<u64, WiringError> {
        Ok(self
            .fold_layers(|micro, in_ch| micro.flop_count(in_ch))?
            .iter()
            .sum())
    }

    fn fold_layers(
        &self,
        per_micro: impl Fn(&MicroLayer, u64) -> u64,
    ) -> Result<Vec<u64>, WiringError> {
        let mut in_channels = self.input_channels;
        let mut totals = Vec::with_capacity(self.macro_layers.len());
        for layer in &self.macro_layers {
            let mut layer_total = 0u64;
            for branch in &layer.branches {
                let mut branch_in = in_channels;
                for micro in &branch.0 {
                    if let Some(declared) = micro.in_channels {
                        if declared != branch_in {
                            return Err(WiringError {
                                layer: layer.name.clone(),
                                declared,
                                propagated: branch_in,
                            });
                        }
                    }
                    layer_total += per_micro(micro, branch_in);
                    branch_in = micro.depth;
                }
            }
            totals.push(layer_total);
            in_channels = layer.output_channels();
        }
        Ok(totals)
    }

    /// Checks every structural invariant; an empty list means the network
    /// is well formed. Each finding names the macro-layer and the rule.
    pub fn validate(&self) -> Vec<ValidationFinding> {
        let mut findings = Vec::new();
        let network = "<network>";
        if self.name.is_empty() {
            findings.push(ValidationFinding {
                layer: network.into(),
                rule: "name must be non-empty".into(),
            });
        }
        if self.input_channels == 0 {
            findings.push(ValidationFinding {
                layer: network.into(),
                rule: "input_channels must be >= 1".into(),
            });
        }
        if self.classifier_classes == 0 {
            findings.push(ValidationFinding {
                layer: network.into(),
                rule: "classifier_classes must be >= 1".into(),
            });
        }
        if self.macro_layers.is_empty() {
            findings.push(ValidationFinding {
                layer: network.into(),
                rule: "macro_layers must be non-empty".into(),
            });
        }

        let mut in_channels = self.input_channels;
        for layer in &self.macro_layers {
            if layer.branches.is_empty() {
                findings.push(ValidationFinding {
                    layer: layer.name.clone(),
                    rule: "branches must be non-empty".into(),
                });
            }
            for (b, branch) in layer.branches.iter().enumerate() {
                if branch.0.is_empty() {
                    findings.push(ValidationFinding {
                        layer: layer.name.clone(),
                        rule: format!("branch {b} must contain at least one micro-layer"),
                    });
                }
                let mut branch_in = in_channels;
                for (m, micro) in branch.0.iter().enumerate() {
                    for (field, value) in [
                        ("kernel_width", micro.kernel_width),
                        ("kernel_height", micro.kernel_height),
                        ("depth", micro.depth),
                        ("out_rows", micro.out_rows),
                        ("out_cols", micro.out_cols),
                    ] {
                        if value == 0 {
                            findings.push(ValidationFinding {
                                layer: layer.name.clone(),
                                rule: format!("branch {b} micro-layer {m}: {field} must be >= 1"),
                            });
                        }
                    }
                    if let Some(declared) = micro.in_channels {
                        if declared != branch_in {
                            findings.push(ValidationFinding {
                                layer: layer.name.clone(),
                                rule: format!(
                                    "branch {b} micro-layer {m}: declared in_channels {declared} \
                                     does not match propagated {branch_in}"
                                ),
                            });
                        }
                    }
                    branch_in = micro.depth;
                }
            }
            in_channels = layer.output_channels();
        }
        findings
    }
}

/// Scope block a document may carry alongside the architecture. Lambda is
/// kept as its source string so exactness survives the round trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentScope {
    pub alpha: u64,
    pub beta: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default)]
    pub scope_aware: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    name: String,
    input_channels: u64,
    classifier_classes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scope: Option<DocumentScope>,
    macro_layers: Vec<MacroLayer>,
}

/// Result of parsing a network document: the architecture plus any scope
/// block it carried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDocument {
    pub network: Network,
    pub scope: Option<DocumentScope>,
}

/// Malformed document. Wraps the underlying JSON error, which carries the
/// offending line and column.
#[derive(Debug)]
pub struct ParseError(serde_json::Error);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "document parse error: {}", self.0)
    }
}

impl Error for ParseError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        Some(&self.0)
    }
}

/// Parses a JSON network document. Unknown fields are rejected.
pub fn parse_document(text: &str) -> Result<ParsedDocument, ParseError> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(ParseError)?;
    Ok(ParsedDocument {
        network: Network {
            name: doc.name,
            input_channels: doc.input_channels,
            classifier_classes: doc.classifier_classes,
            macro_layers: doc.macro_layers,
        },
        scope: doc.scope,
    })
}

/// Serializes a network to its canonical document form: pretty-printed
/// JSON with fixed field order and a trailing newline. Identical networks
/// serialize byte-identically.
pub fn to_document_string(network: &Network) -> String {
    let mut out = serde_json::to_string_pretty(network).expect("network serialization cannot fail");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn param_count_micro_matches_reference_layers() {
        // in=96, 5x5 kernel, 256 outputs -> 614400 (~0.61M)
        let conv2 = MicroLayer::new(5, 5, 256, 27, 27);
        assert_eq!(conv2.param_count(96), 614_400);
        // identity case
        let unit = MicroLayer::new(1, 1, 1, 1, 1);
        assert_eq!(unit.param_count(1), 1);
        // in=384, 3x3 kernel, 384 outputs -> 384*384*9
        let conv4 = MicroLayer::new(3, 3, 384, 13, 13);
        assert_eq!(conv4.param_count(384), 1_327_104);
    }

    #[test]
    fn network_totals_for_reference_stack() {
        let net = models::alexnet();
        assert_eq!(
            net.per_layer_param_counts().unwrap(),
            vec![34_848, 614_400, 884_736, 1_327_104, 884_736]
        );
        assert_eq!(net.param_count().unwrap(), 3_745_824);
    }

    #[test]
    fn single_layer_param_count() {
        let net = Network::new(
            "stem",
            3,
            1000,
            vec![MacroLayer::new(
                "conv1",
                vec![Branch::new(vec![MicroLayer::new(11, 11, 96, 55, 55)])],
            )],
        );
        assert_eq!(net.param_count().unwrap(), 34_848);
    }

    #[test]
    fn flop_count_first_layer() {
        // 2 * 34848 * 55 * 55
        let net = models::alexnet();
        let conv1 = MicroLayer::new(11, 11, 96, 55, 55);
        assert_eq!(conv1.flop_count(3), 210_830_400);
        assert_eq!(net.flop_count().unwrap(), 2_153_268_288);
    }

    #[test]
    fn flop_trivial_unit() {
        let unit = MicroLayer::new(1, 1, 1, 1, 1);
        assert_eq!(unit.flop_count(1), 2);
    }

    #[test]
    fn isolated_layer_flops_scale_inverse_to_factor() {
        let base = MicroLayer::new(3, 3, 384, 13, 13);
        let scaled = MicroLayer::new(3, 3, 384 / 4, 13, 13);
        assert_eq!(base.flop_count(256), 4 * scaled.flop_count(256));
    }

    #[test]
    fn validate_clean_fixture() {
        assert!(models::alexnet().validate().is_empty());
        assert!(models::googlenet().validate().is_empty());
    }

    #[test]
    fn validate_reports_wiring_mismatch() {
        let mut net = models::alexnet();
        // declare a wrong input width on layer 2
        net.macro_layers[1].branches[0].0[0].in_channels = Some(64);
        let findings = net.validate();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].layer, "conv2");
        assert!(findings[0].rule.contains("in_channels 64"));
        assert!(net.param_count().is_err());
    }

    #[test]
    fn validate_reports_zero_depth() {
        let mut net = models::alexnet();
        net.macro_layers[2].branches[0].0[0].depth = 0;
        net.macro_layers[2].branches[0].0[0].in_channels = None;
        let findings = net.validate();
        // zero depth plus the downstream wiring mismatch it induces
        assert!(findings
            .iter()
            .any(|f| f.layer == "conv3" && f.rule.contains("depth must be >= 1")));
    }

    #[test]
    fn validate_reports_empty_structures() {
        let net = Network::new("empty", 3, 10, vec![]);
        assert!(net
            .validate()
            .iter()
            .any(|f| f.rule.contains("macro_layers")));
        let net = Network::new("hollow", 3, 10, vec![MacroLayer::new("m0", vec![])]);
        assert!(net
            .validate()
            .iter()
            .any(|f| f.rule.contains("branches must be non-empty")));
    }

    #[test]
    fn document_round_trip_is_identity() {
        for net in [models::alexnet(), models::googlenet()] {
            let text = to_document_string(&net);
            let parsed = parse_document(&text).unwrap();
            assert_eq!(parsed.network, net);
            assert_eq!(parsed.scope, None);
        }
    }

    #[test]
    fn document_missing_macro_layers_is_parse_error() {
        let err = parse_document(r#"{"name":"x","input_channels":3,"classifier_classes":10}"#)
            .unwrap_err();
        assert!(err.to_string().contains("macro_layers"));
    }

    #[test]
    fn document_unknown_field_rejected() {
        let text = r#"{"name":"x","input_channels":3,"classifier_classes":10,"macro_layers":[],"stride":2}"#;
        assert!(parse_document(text).is_err());
    }

    #[test]
    fn document_scope_block_parsed() {
        let text = r#"{
            "name": "x",
            "input_channels": 3,
            "classifier_classes": 1000,
            "scope": {"alpha": 1000, "beta": 5, "lambda": "0.25", "scope_aware": true},
            "macro_layers": [
                {"name": "m0", "branches": [[
                    {"kernel_width": 1, "kernel_height": 1, "depth": 8, "out_rows": 4, "out_cols": 4}
                ]]}
            ]
        }"#;
        let parsed = parse_document(text).unwrap();
        let scope = parsed.scope.unwrap();
        assert_eq!(
            (scope.alpha, scope.beta, scope.scope_aware),
            (1000, 5, true)
        );
        assert_eq!(scope.lambda.as_deref(), Some("0.25"));
    }
}
