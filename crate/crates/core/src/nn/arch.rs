use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamVector;

/// Which fixed architecture a [`ModelArch`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchVariant {
    /// conv → conv → maxpool → dense → dense
    CnnEmnist,
    /// dense → dense
    MlpSmall,
}

/// One layer, with the shape of its input already resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Valid (unpadded) stride-1 convolution with square kernel, ReLU output.
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        in_h: usize,
        in_w: usize,
    },
    /// Non-overlapping max pool (stride = size), trailing rows/cols dropped.
    MaxPool {
        channels: usize,
        size: usize,
        in_h: usize,
        in_w: usize,
    },
    /// Fully connected; `relu` is false for the logits layer.
    Dense {
        inputs: usize,
        outputs: usize,
        relu: bool,
    },
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel * kernel + out_channels,
            LayerSpec::MaxPool { .. } => 0,
            LayerSpec::Dense { inputs, outputs, .. } => inputs * outputs + outputs,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                in_channels,
                in_h,
                in_w,
                ..
            } => in_channels * in_h * in_w,
            LayerSpec::MaxPool {
                channels,
                in_h,
                in_w,
                ..
            } => channels * in_h * in_w,
            LayerSpec::Dense { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                in_h,
                in_w,
                ..
            } => out_channels * (in_h + 1 - kernel) * (in_w + 1 - kernel),
            LayerSpec::MaxPool {
                channels,
                size,
                in_h,
                in_w,
            } => channels * (in_h / size) * (in_w / size),
            LayerSpec::Dense { outputs, .. } => outputs,
        }
    }

    /// (fan_in, fan_out) used by Glorot initialisation.
    fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (in_channels * kernel * kernel, out_channels * kernel * kernel),
            LayerSpec::MaxPool { .. } => (0, 0),
            LayerSpec::Dense { inputs, outputs, .. } => (inputs, outputs),
        }
    }

    /// Number of weights (the biases follow them in the flat layout).
    fn weight_count(&self) -> usize {
        match *self {
            LayerSpec::Conv { out_channels, .. } => self.param_count() - out_channels,
            LayerSpec::Dense { outputs, .. } => self.param_count() - outputs,
            LayerSpec::MaxPool { .. } => 0,
        }
    }
}

/// A fixed model architecture over single-channel `height × width` images.
///
/// Parameters are laid out layer by layer, weights first then biases. Conv
/// weights are `[out][in][ky][kx]`, dense weights are `[out][in]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelArch {
    variant: ArchVariant,
    height: usize,
    width: usize,
    classes: usize,
    layers: Vec<LayerSpec>,
}

pub const CNN_CONV1_FILTERS: usize = 32;
pub const CNN_CONV2_FILTERS: usize = 64;
pub const CNN_HIDDEN: usize = 128;
pub const MLP_HIDDEN: usize = 64;

impl ModelArch {
    /// conv(32, 3×3, ReLU) → conv(64, 3×3, ReLU) → maxpool(2×2) →
    /// dense(128, ReLU) → dense(classes).
    ///
    /// For 28×28 inputs and 10 classes this has 1,199,882 parameters.
    pub fn cnn_emnist(height: usize, width: usize, classes: usize) -> Self {
        Self::cnn_with_widths(
            height,
            width,
            classes,
            CNN_CONV1_FILTERS,
            CNN_CONV2_FILTERS,
            CNN_HIDDEN,
        )
    }

    /// The CNN layer stack with custom widths; used for reduced-size gradient
    /// checks and quick experiments.
    pub fn cnn_with_widths(
        height: usize,
        width: usize,
        classes: usize,
        conv1: usize,
        conv2: usize,
        hidden: usize,
    ) -> Self {
        assert!(height >= 6 && width >= 6, "cnn needs inputs of at least 6x6");
        let (h1, w1) = (height - 2, width - 2);
        let (h2, w2) = (h1 - 2, w1 - 2);
        let pooled = conv2 * (h2 / 2) * (w2 / 2);
        let layers = vec![
            LayerSpec::Conv {
                in_channels: 1,
                out_channels: conv1,
                kernel: 3,
                in_h: height,
                in_w: width,
            },
            LayerSpec::Conv {
                in_channels: conv1,
                out_channels: conv2,
                kernel: 3,
                in_h: h1,
                in_w: w1,
            },
            LayerSpec::MaxPool {
                channels: conv2,
                size: 2,
                in_h: h2,
                in_w: w2,
            },
            LayerSpec::Dense {
                inputs: pooled,
                outputs: hidden,
                relu: true,
            },
            LayerSpec::Dense {
                inputs: hidden,
                outputs: classes,
                relu: false,
            },
        ];
        ModelArch {
            variant: ArchVariant::CnnEmnist,
            height,
            width,
            classes,
            layers,
        }
    }

    /// dense(64, ReLU) → dense(classes).
    pub fn mlp_small(height: usize, width: usize, classes: usize) -> Self {
        Self::mlp_with_hidden(height, width, classes, MLP_HIDDEN)
    }

    pub fn mlp_with_hidden(height: usize, width: usize, classes: usize, hidden: usize) -> Self {
        let layers = vec![
            LayerSpec::Dense {
                inputs: height * width,
                outputs: hidden,
                relu: true,
            },
            LayerSpec::Dense {
                inputs: hidden,
                outputs: classes,
                relu: false,
            },
        ];
        ModelArch {
            variant: ArchVariant::MlpSmall,
            height,
            width,
            classes,
            layers,
        }
    }

    pub fn variant(&self) -> ArchVariant {
        self.variant
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn input_len(&self) -> usize {
        self.height * self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Glorot-uniform weights in `[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut values = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            let (fan_in, fan_out) = layer.fans();
            let weights = layer.weight_count();
            if weights > 0 {
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                values.extend((0..weights).map(|_| rng.random_range(-s..=s)));
            }
            values.extend(std::iter::repeat_n(0.0, layer.param_count() - weights));
        }
        ParamVector::from_vec(values)
    }
}
