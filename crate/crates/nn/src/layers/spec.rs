use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Kind and hyper-parameters of one layer. The `Display` form is the one
/// stored in checkpoint headers and parses back with `FromStr`.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Relu,
    Silu,
    Sigmoid,
    BatchNorm1d {
        features: usize,
        momentum: f64,
        epsilon: f64,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
    /// Per-record reshape; the batch axis is kept.
    Reshape {
        dims: Vec<usize>,
    },
}

impl LayerSpec {
    pub fn batch_norm(features: usize) -> Self {
        Self::BatchNorm1d {
            features,
            momentum: 0.1,
            epsilon: 1e-5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Conv2d { .. } => "conv2d",
            Self::Dense { .. } => "dense",
            Self::Relu => "relu",
            Self::Silu => "silu",
            Self::Sigmoid => "sigmoid",
            Self::BatchNorm1d { .. } => "batchnorm1d",
            Self::Dropout { .. } => "dropout",
            Self::Flatten => "flatten",
            Self::Reshape { .. } => "reshape",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("{}: {m}", self.name())));
        match *self {
            Self::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } if in_channels == 0 || out_channels == 0 || kernel.0 == 0 || kernel.1 == 0 => {
                bad("channels and kernel sizes must be positive")
            }
            Self::Dense { inputs, outputs } if inputs == 0 || outputs == 0 => bad("sizes must be positive"),
            Self::BatchNorm1d {
                features,
                momentum,
                epsilon,
            } if features == 0 || !(0.0..=1.0).contains(&momentum) || !(epsilon > 0.0) => {
                bad("needs features > 0, momentum in [0,1], epsilon > 0")
            }
            Self::Dropout { rate } if !(0.0..1.0).contains(&rate) => bad("rate must be in [0,1)"),
            Self::Reshape { ref dims } if dims.is_empty() || dims.contains(&0) => bad("dims must be positive"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            Self::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => write!(
                f,
                " in={in_channels} out={out_channels} kernel={}x{}",
                kernel.0, kernel.1
            ),
            Self::Dense { inputs, outputs } => write!(f, " in={inputs} out={outputs}"),
            Self::BatchNorm1d {
                features,
                momentum,
                epsilon,
            } => write!(f, " features={features} momentum={momentum:?} epsilon={epsilon:?}"),
            Self::Dropout { rate } => write!(f, " rate={rate:?}"),
            Self::Reshape { dims } => write!(f, " dims={}", join_dims(dims)),
            Self::Relu | Self::Silu | Self::Sigmoid | Self::Flatten => Ok(()),
        }
    }
}

fn join_dims(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|d| {
            d.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad dimension list '{s}'")))
        })
        .collect()
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty layer spec".into()))?;
        let mut fields = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got '{w}'")))?;
            fields.insert(k, v);
        }
        let mut take = |key: &str| {
            fields
                .remove(key)
                .ok_or_else(|| Error::InvalidArgument(format!("{kind}: missing '{key}'")))
        };
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: bad value '{v}'")))
        }
        let spec = match kind {
            "conv2d" => {
                let kernel = parse_dims(take("kernel")?)?;
                if kernel.len() != 2 {
                    return Err(Error::InvalidArgument("conv2d kernel must be HxW".into()));
                }
                Self::Conv2d {
                    in_channels: num("in", take("in")?)?,
                    out_channels: num("out", take("out")?)?,
                    kernel: (kernel[0], kernel[1]),
                }
            }
            "dense" => Self::Dense {
                inputs: num("in", take("in")?)?,
                outputs: num("out", take("out")?)?,
            },
            "relu" => Self::Relu,
            "silu" => Self::Silu,
            "sigmoid" => Self::Sigmoid,
            "batchnorm1d" => Self::BatchNorm1d {
                features: num("features", take("features")?)?,
                momentum: num("momentum", take("momentum")?)?,
                epsilon: num("epsilon", take("epsilon")?)?,
            },
            "dropout" => Self::Dropout {
                rate: num("rate", take("rate")?)?,
            },
            "flatten" => Self::Flatten,
            "reshape" => Self::Reshape {
                dims: parse_dims(take("dims")?)?,
            },
            other => return Err(Error::InvalidArgument(format!("unknown layer '{other}'"))),
        };
        if let Some(k) = fields.keys().next() {
            return Err(Error::InvalidArgument(format!("{kind}: unexpected '{k}'")));
        }
        spec.validate()?;
        Ok(spec)
    }
}
