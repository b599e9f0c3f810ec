//! The network: conv frame embedder, class-token transformer encoder with
//! learned positional rows, and three layernorm+linear softmax heads.

mod config;
mod net;
mod params;

pub use config::{ModelConfig, LN_EPS};
pub use net::HeadOutputs;
pub use params::{EmbedParams, HeadParams, LayerParams, Model};
