//! Reference architectures used as fixtures and CLI examples.
//!
//! Both constructors declare `in_channels` on every micro-layer so the
//! channel wiring of the transcriptions stays auditable against their
//! published layer tables.

use crate::ir::{Branch, MacroLayer, MicroLayer, Network};

fn conv(k: u64, depth: u64, rows: u64, cols: u64, in_channels: u64) -> MicroLayer {
    MicroLayer::new(k, k, depth, rows, cols).with_in_channels(in_channels)
}

/// The five-layer AlexNet convolutional stack. Fully-connected layers are
/// out of scope; only the classifier width (1000) is carried as metadata.
pub fn alexnet() -> Network {
    let layers = vec![
        MacroLayer::new("conv1", vec![Branch::new(vec![conv(11, 96, 55, 55, 3)])])
            .with_annotations(vec!["relu".into(), "lrn".into(), "maxpool 3x3/2".into()]),
        MacroLayer::new("conv2", vec![Branch::new(vec![conv(5, 256, 27, 27, 96)])])
            .with_annotations(vec!["relu".into(), "lrn".into(), "maxpool 3x3/2".into()]),
        MacroLayer::new("conv3", vec![Branch::new(vec![conv(3, 384, 13, 13, 256)])])
            .with_annotations(vec!["relu".into()]),
        MacroLayer::new("conv4", vec![Branch::new(vec![conv(3, 384, 13, 13, 384)])])
            .with_annotations(vec!["relu".into()]),
        MacroLayer::new("conv5", vec![Branch::new(vec![conv(3, 256, 13, 13, 384)])])
            .with_annotations(vec!["relu".into(), "maxpool 3x3/2".into()]),
    ];
    Network::new("alexnet", 3, 1000, layers)
}

/// One inception module: 1x1, 1x1->3x3, 1x1->5x5, and the pooling
/// projection. The 3x3 max-pool feeding the projection is carried as an
/// annotation; the projection itself is the branch's only micro-layer.
#[allow(clippy::too_many_arguments)]
fn inception(
    name: &str,
    in_channels: u64,
    spatial: u64,
    d1x1: u64,
    d3x3_reduce: u64,
    d3x3: u64,
    d5x5_reduce: u64,
    d5x5: u64,
    pool_proj: u64,
) -> MacroLayer {
    MacroLayer::new(
        name,
        vec![
            Branch::new(vec![conv(1, d1x1, spatial, spatial, in_channels)]),
            Branch::new(vec![
                conv(1, d3x3_reduce, spatial, spatial, in_channels),
                conv(3, d3x3, spatial, spatial, d3x3_reduce),
            ]),
            Branch::new(vec![
                conv(1, d5x5_reduce, spatial, spatial, in_channels),
                conv(5, d5x5, spatial, spatial, d5x5_reduce),
            ]),
            Branch::new(vec![conv(1, pool_proj, spatial, spatial, in_channels)]),
        ],
    )
    .with_annotations(vec!["pool-proj branch follows maxpool 3x3/1".into()])
}

/// Inception-v1 transcribed from its published layer table: the two stem
/// stages plus nine inception modules. Auxiliary classifiers and the final
/// fully-connected layer are excluded; convolutional capacity is 5,966,272
/// parameters.
pub fn googlenet() -> Network {
    let mut layers = vec![
        MacroLayer::new("conv1", vec![Branch::new(vec![conv(7, 64, 112, 112, 3)])])
            .with_annotations(vec!["relu".into(), "maxpool 3x3/2".into(), "lrn".into()]),
        MacroLayer::new(
            "conv2",
            vec![Branch::new(vec![
                conv(1, 64, 56, 56, 64),
                conv(3, 192, 56, 56, 64),
            ])],
        )
        .with_annotations(vec!["relu".into(), "lrn".into(), "maxpool 3x3/2".into()]),
        inception("inception_3a", 192, 28, 64, 96, 128, 16, 32, 32),
        inception("inception_3b", 256, 28, 128, 128, 192, 32, 96, 64),
        inception("inception_4a", 480, 14, 192, 96, 208, 16, 48, 64),
        inception("inception_4b", 512, 14, 160, 112, 224, 24, 64, 64),
        inception("inception_4c", 512, 14, 128, 128, 256, 24, 64, 64),
        inception("inception_4d", 512, 14, 112, 144, 288, 32, 64, 64),
        inception("inception_4e", 528, 14, 256, 160, 320, 32, 128, 128),
        inception("inception_5a", 832, 7, 256, 160, 320, 32, 128, 128),
        inception("inception_5b", 832, 7, 384, 192, 384, 48, 128, 128),
    ];
    // stage-boundary pools
    layers[3]
        .annotations
        .push("followed by maxpool 3x3/2".into());
    layers[8]
        .annotations
        .push("followed by maxpool 3x3/2".into());
    layers[10]
        .annotations
        .push("followed by avgpool 7x7/1".into());
    Network::new("googlenet", 3, 1000, layers)
}
