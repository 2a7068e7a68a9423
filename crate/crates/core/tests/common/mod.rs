//! Shared test support: a deterministic RNG and a small-network generator.
#![allow(dead_code)]

use scalesynth_core::factorspace::count_solution_space;
use scalesynth_core::ir::{Branch, MacroLayer, MicroLayer, Network};

/// xorshift64*; deterministic across platforms, no dependencies.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn pick<T: Copy>(&mut self, choices: &[T]) -> T {
        choices[self.below(choices.len() as u64) as usize]
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

const DEPTHS: &[u64] = &[
    1, 2, 3, 4, 5, 6, 8, 12, 16, 24, 27, 32, 48, 64, 96, 100, 128, 144, 192, 250, 256, 320, 384,
    480, 510, 512,
];
const KERNELS: &[u64] = &[1, 2, 3, 5];
const SPATIAL: &[u64] = &[1, 2, 4, 7];

/// A random well-formed network: at most `max_layers` macro-layers, up to
/// three branches each, chains of one or two micro-layers, depths <= 512.
pub fn random_network(rng: &mut Rng, max_layers: u64) -> Network {
    let layer_count = 1 + rng.below(max_layers);
    let mut layers = Vec::new();
    for i in 0..layer_count {
        let branch_count = 1 + rng.below(3);
        let spatial = rng.pick(SPATIAL);
        let mut branches = Vec::new();
        for _ in 0..branch_count {
            let chain_len = 1 + rng.below(2);
            let mut chain = Vec::new();
            for _ in 0..chain_len {
                let k = rng.pick(KERNELS);
                chain.push(MicroLayer::new(k, k, rng.pick(DEPTHS), spatial, spatial));
            }
            branches.push(Branch::new(chain));
        }
        layers.push(MacroLayer::new(format!("m{i}"), branches));
    }
    Network::new(
        format!("random-{}", rng.below(1_000_000)),
        1 + rng.below(4),
        1 + rng.below(1000),
        layers,
    )
}

/// Like [`random_network`], but resamples until the affine solution space
/// is small enough for the brute-force oracle to walk quickly.
pub fn random_oracle_network(rng: &mut Rng, max_layers: u64, max_space: u64) -> Network {
    loop {
        let net = random_network(rng, max_layers);
        if count_solution_space(&net, true) <= max_space.into() {
            return net;
        }
    }
}
