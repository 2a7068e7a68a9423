//! Admissible scaling factors and solution-space accounting.
//!
//! A macro-layer can only be scaled by an integer that divides every
//! micro-layer depth inside it, i.e. by a divisor of the gcd of those
//! depths. The affine solution space is the product of those common-divisor
//! counts across macro-layers; the non-affine space (every micro-layer
//! scaled independently, never synthesized) is the product of per-depth
//! divisor counts and reaches astronomical sizes, so counts are arbitrary
//! precision.

use std::error::Error;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::ir::{MacroLayer, Network};
use crate::numeric::window_int_bounds;

/// Enumeration refusal threshold used when the caller does not pick one.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Receives each qualifying plan as `(factor vector, phi')`.
pub type PlanVisitor<'a> = &'a mut dyn FnMut(&[u64], u64);

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// All divisors of `n`, ascending. Trial division up to sqrt(n).
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n >= 1, "divisors of zero are not defined here");
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n.is_multiple_of(i) {
            small.push(i);
            if i != n / i {
                large.push(n / i);
            }
        }
        i += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// The admissible scaling factors of one macro-layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSet {
    pub macro_layer: String,
    /// Sorted ascending; always contains 1; every member divides every
    /// micro-layer depth in the macro-layer.
    pub factors: Vec<u64>,
}

/// Common divisors of all micro-layer depths in `layer`.
pub fn factor_set(layer: &MacroLayer) -> FactorSet {
    let g = layer.depths().fold(0u64, gcd);
    FactorSet {
        macro_layer: layer.name.clone(),
        factors: divisors(g.max(1)),
    }
}

/// Factor sets for every macro-layer, in network order.
pub fn factor_sets(network: &Network) -> Vec<FactorSet> {
    network.macro_layers.iter().map(factor_set).collect()
}

/// Size of the scaling solution space.
///
/// Affine: one factor per macro-layer, the product of common-divisor
/// counts. Non-affine: every micro-layer scaled independently, the product
/// of per-depth divisor counts.
pub fn count_solution_space(network: &Network, affine: bool) -> BigUint {
    let mut count = BigUint::one();
    if affine {
        for layer in &network.macro_layers {
            count *= BigUint::from(factor_set(layer).factors.len());
        }
    } else {
        for layer in &network.macro_layers {
            for depth in layer.depths() {
                count *= BigUint::from(divisors(depth).len());
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorSpaceError {
    /// The affine space is too large to walk; counting a non-covering
    /// window exhaustively is refused in favor of the solver.
    SpaceExceedsCap {
        space: BigUint,
        cap: u64,
    },
    InvalidWindow(String),
}

impl fmt::Display for FactorSpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorSpaceError::SpaceExceedsCap { space, cap } => write!(
                f,
                "affine solution space has {space} assignments, above the enumeration cap {cap}; \
                 use the dynamic-programming solver for plan search, or widen the window to cover \
                 the whole space for closed-form counting"
            ),
            FactorSpaceError::InvalidWindow(msg) => write!(f, "invalid window: {msg}"),
        }
    }
}

impl Error for FactorSpaceError {}

/// Outcome of a window count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCount {
    /// Assignments whose scaled parameter count lands in the window.
    pub matching: BigUint,
    /// Full affine solution-space size.
    pub total_space: BigUint,
    /// False when the count came from the closed-form product instead of
    /// an exhaustive walk (only possible for an all-covering window).
    pub enumerated: bool,
}

/// Per-layer shape flattened for the enumeration hot path.
struct LayerShape {
    /// Branch chains as `(kernel_area, depth)` links.
    chains: Vec<Vec<(u64, u64)>>,
    out_sum: u64,
}

impl LayerShape {
    fn of(layer: &MacroLayer) -> Self {
        LayerShape {
            chains: layer
                .branches
                .iter()
                .map(|b| {
                    b.micro_layers()
                        .iter()
                        .map(|m| (m.kernel_width * m.kernel_height, m.depth))
                        .collect()
                })
                .collect(),
            out_sum: layer.output_channels(),
        }
    }

    /// Parameter contribution with scaled input `in_scaled` and factor `f`.
    fn contribution(&self, in_scaled: u64, f: u64) -> u64 {
        let mut total = 0u64;
        for chain in &self.chains {
            let mut link_in = in_scaled;
            for &(kernel_area, depth) in chain {
                let scaled_depth = depth / f;
                total += link_in * kernel_area * scaled_depth;
                link_in = scaled_depth;
            }
        }
        total
    }
}

/// Exhaustively counts affine factor assignments whose scaled parameter
/// count `phi'` satisfies `|target_fraction * phi - phi'| / phi <
/// tolerance`, the bottleneck constraint disregarded. Qualifying plans are
/// streamed to `visit` (factor vector, `phi'`) in lexicographic factor
/// order.
///
/// When the solution space exceeds `enumeration_cap`, only an all-covering
/// window can still be counted (closed form, nothing streamed); any other
/// window is refused.
pub fn enumerate_window(
    network: &Network,
    target_fraction: &BigRational,
    tolerance: &BigRational,
    enumeration_cap: u64,
    mut visit: Option<PlanVisitor<'_>>,
) -> Result<WindowCount, FactorSpaceError> {
    if target_fraction <= &BigRational::zero() || target_fraction > &BigRational::one() {
        return Err(FactorSpaceError::InvalidWindow(
            "target_fraction must lie in (0, 1]".into(),
        ));
    }
    if tolerance < &BigRational::zero() {
        return Err(FactorSpaceError::InvalidWindow(
            "tolerance must be >= 0".into(),
        ));
    }
    let phi = network
        .param_count()
        .map_err(|e| FactorSpaceError::InvalidWindow(e.to_string()))?;

    let sets: Vec<Vec<u64>> = factor_sets(network)
        .into_iter()
        .map(|s| s.factors)
        .collect();
    let shapes: Vec<LayerShape> = network.macro_layers.iter().map(LayerShape::of).collect();
    let total_space = count_solution_space(network, true);
    let (lo, hi) = window_int_bounds(phi, target_fraction, tolerance);

    if total_space > BigUint::from(enumeration_cap) {
        // minimum achievable phi': every layer at its largest factor
        let mut min_phi = 0u64;
        let mut in_scaled = network.input_channels;
        for (shape, set) in shapes.iter().zip(&sets) {
            let f = *set.last().expect("factor sets are non-empty");
            min_phi += shape.contribution(in_scaled, f);
            in_scaled = shape.out_sum / f;
        }
        let covers_all = lo <= BigInt::from(min_phi) && hi >= BigInt::from(phi);
        if covers_all {
            return Ok(WindowCount {
                matching: total_space.clone(),
                total_space,
                enumerated: false,
            });
        }
        return Err(FactorSpaceError::SpaceExceedsCap {
            space: total_space,
            cap: enumeration_cap,
        });
    }

    let lo = lo.to_i128().unwrap_or(i128::MAX);
    let hi = hi.to_i128().unwrap_or(i128::MIN);
    let mut factors = vec![0u64; sets.len()];
    let mut matching = 0u64;
    walk(
        &shapes,
        &sets,
        0,
        network.input_channels,
        0,
        lo,
        hi,
        &mut factors,
        &mut matching,
        &mut visit,
    );
    Ok(WindowCount {
        matching: BigUint::from(matching),
        total_space,
        enumerated: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn walk(
    shapes: &[LayerShape],
    sets: &[Vec<u64>],
    layer: usize,
    in_scaled: u64,
    sum: u64,
    lo: i128,
    hi: i128,
    factors: &mut Vec<u64>,
    matching: &mut u64,
    visit: &mut Option<PlanVisitor<'_>>,
) {
    if layer == shapes.len() {
        let total = sum as i128;
        if lo <= total && total <= hi {
            *matching += 1;
            if let Some(v) = visit.as_deref_mut() {
                v(factors, sum);
            }
        }
        return;
    }
    for &f in &sets[layer] {
        factors[layer] = f;
        walk(
            shapes,
            sets,
            layer + 1,
            shapes[layer].out_sum / f,
            sum + shapes[layer].contribution(in_scaled, f),
            lo,
            hi,
            factors,
            matching,
            visit,
        );
    }
}
