//! Parameter containers, seeded initialization, and the checkpoint format.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{LossWeights, DIGIT_CLASSES};
use crate::model::config::ModelConfig;
use crate::numkit::Tensor;
use crate::seeds::rng_from;

pub struct EmbedParams {
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub conv3_w: Tensor,
    pub conv3_b: Tensor,
    pub proj_w: Tensor,
    pub proj_b: Tensor,
}

pub struct LayerParams {
    pub ln1_gain: Tensor,
    pub ln1_bias: Tensor,
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
    pub ln2_gain: Tensor,
    pub ln2_bias: Tensor,
    pub mlp_w1: Tensor,
    pub mlp_b1: Tensor,
    pub mlp_w2: Tensor,
    pub mlp_b2: Tensor,
}

pub struct HeadParams {
    pub ln_gain: Tensor,
    pub ln_bias: Tensor,
    pub w: Tensor,
    pub b: Tensor,
}

/// The full network: conv frame embedder, class-token transformer encoder
/// with learned positional rows, three layernorm+linear heads, and the
/// learned loss scales.
pub struct Model {
    pub cfg: ModelConfig,
    pub embed: EmbedParams,
    pub class_token: Tensor,
    /// `[m+1, d]`; row 0 belongs to the class token.
    pub pos_table: Tensor,
    pub layers: Vec<LayerParams>,
    pub head_holistic: HeadParams,
    pub head_digit1: HeadParams,
    pub head_digit2: HeadParams,
    pub loss_weights: LossWeights,
}

fn normal(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f64> {
    let dist = Normal::new(0.0, std).expect("positive std");
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn linear_pair(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> (Tensor, Tensor) {
    let std = (1.0 / fan_in as f64).sqrt();
    let w = Tensor::param(normal(rng, fan_in * fan_out, std), &[fan_in, fan_out]).unwrap();
    let b = Tensor::param(vec![0.0; fan_out], &[fan_out]).unwrap();
    (w, b)
}

fn conv_pair(rng: &mut ChaCha8Rng, cin: usize, cout: usize, k: usize) -> (Tensor, Tensor) {
    let fan_in = cin * k * k;
    let std = (2.0 / fan_in as f64).sqrt();
    let w = Tensor::param(normal(rng, cout * fan_in, std), &[cout, cin, k, k]).unwrap();
    let b = Tensor::param(vec![0.0; cout], &[cout]).unwrap();
    (w, b)
}

fn ln_pair(d: usize) -> (Tensor, Tensor) {
    (
        Tensor::param(vec![1.0; d], &[d]).unwrap(),
        Tensor::param(vec![0.0; d], &[d]).unwrap(),
    )
}

fn head(rng: &mut ChaCha8Rng, d: usize, out: usize) -> HeadParams {
    let (ln_gain, ln_bias) = ln_pair(d);
    let (w, b) = linear_pair(rng, d, out);
    HeadParams {
        ln_gain,
        ln_bias,
        w,
        b,
    }
}

impl Model {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Model> {
        cfg.validate()?;
        let mut rng = rng_from(seed);
        let d = cfg.feature_dim;
        let c = cfg.embed_channels;
        let (conv1_w, conv1_b) = conv_pair(&mut rng, 1, c, 3);
        let (conv2_w, conv2_b) = conv_pair(&mut rng, c, 2 * c, 3);
        let (conv3_w, conv3_b) = conv_pair(&mut rng, 2 * c, 4 * c, 3);
        let (proj_w, proj_b) = linear_pair(&mut rng, 4 * c, d);
        let class_token = Tensor::param(normal(&mut rng, d, 0.02), &[1, d]).unwrap();
        let pos_table =
            Tensor::param(normal(&mut rng, (cfg.window_len + 1) * d, 0.02), &[cfg.window_len + 1, d])
                .unwrap();
        let mut layers = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            let (ln1_gain, ln1_bias) = ln_pair(d);
            let (wq, bq) = linear_pair(&mut rng, d, cfg.attn_dim());
            let (wk, bk) = linear_pair(&mut rng, d, cfg.attn_dim());
            let (wv, bv) = linear_pair(&mut rng, d, cfg.attn_dim());
            let (wo, bo) = linear_pair(&mut rng, cfg.attn_dim(), d);
            let (ln2_gain, ln2_bias) = ln_pair(d);
            let (mlp_w1, mlp_b1) = linear_pair(&mut rng, d, cfg.mlp_hidden());
            let (mlp_w2, mlp_b2) = linear_pair(&mut rng, cfg.mlp_hidden(), d);
            layers.push(LayerParams {
                ln1_gain,
                ln1_bias,
                wq,
                bq,
                wk,
                bk,
                wv,
                bv,
                wo,
                bo,
                ln2_gain,
                ln2_bias,
                mlp_w1,
                mlp_b1,
                mlp_w2,
                mlp_b2,
            });
        }
        Ok(Model {
            cfg: cfg.clone(),
            embed: EmbedParams {
                conv1_w,
                conv1_b,
                conv2_w,
                conv2_b,
                conv3_w,
                conv3_b,
                proj_w,
                proj_b,
            },
            class_token,
            pos_table,
            layers,
            head_holistic: head(&mut rng, d, cfg.num_classes),
            head_digit1: head(&mut rng, d, DIGIT_CLASSES),
            head_digit2: head(&mut rng, d, DIGIT_CLASSES),
            loss_weights: LossWeights::learned(),
        })
    }

    /// Every trainable tensor in fixed manifest order.
    pub fn named_params(&self) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = vec![
            ("embed.conv1.w".into(), self.embed.conv1_w.clone()),
            ("embed.conv1.b".into(), self.embed.conv1_b.clone()),
            ("embed.conv2.w".into(), self.embed.conv2_w.clone()),
            ("embed.conv2.b".into(), self.embed.conv2_b.clone()),
            ("embed.conv3.w".into(), self.embed.conv3_w.clone()),
            ("embed.conv3.b".into(), self.embed.conv3_b.clone()),
            ("embed.proj.w".into(), self.embed.proj_w.clone()),
            ("embed.proj.b".into(), self.embed.proj_b.clone()),
            ("class_token".into(), self.class_token.clone()),
            ("pos_table".into(), self.pos_table.clone()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let pre = format!("layer{i}");
            out.extend([
                (format!("{pre}.ln1.gain"), l.ln1_gain.clone()),
                (format!("{pre}.ln1.bias"), l.ln1_bias.clone()),
                (format!("{pre}.attn.wq"), l.wq.clone()),
                (format!("{pre}.attn.bq"), l.bq.clone()),
                (format!("{pre}.attn.wk"), l.wk.clone()),
                (format!("{pre}.attn.bk"), l.bk.clone()),
                (format!("{pre}.attn.wv"), l.wv.clone()),
                (format!("{pre}.attn.bv"), l.bv.clone()),
                (format!("{pre}.attn.wo"), l.wo.clone()),
                (format!("{pre}.attn.bo"), l.bo.clone()),
                (format!("{pre}.ln2.gain"), l.ln2_gain.clone()),
                (format!("{pre}.ln2.bias"), l.ln2_bias.clone()),
                (format!("{pre}.mlp.w1"), l.mlp_w1.clone()),
                (format!("{pre}.mlp.b1"), l.mlp_b1.clone()),
                (format!("{pre}.mlp.w2"), l.mlp_w2.clone()),
                (format!("{pre}.mlp.b2"), l.mlp_b2.clone()),
            ]);
        }
        for (name, h) in [
            ("head.holistic", &self.head_holistic),
            ("head.digit1", &self.head_digit1),
            ("head.digit2", &self.head_digit2),
        ] {
            out.extend([
                (format!("{name}.ln.gain"), h.ln_gain.clone()),
                (format!("{name}.ln.bias"), h.ln_bias.clone()),
                (format!("{name}.w"), h.w.clone()),
                (format!("{name}.b"), h.b.clone()),
            ]);
        }
        out.extend(self.loss_weights.named_params());
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.len()).sum()
    }
}

// ── Checkpoint format ───────────────────────────────────────────────
//
// "RKCK" | u32 header length | header JSON | f64 LE payloads in header order.

const CKPT_MAGIC: &[u8; 4] = b"RKCK";

#[derive(Serialize, Deserialize)]
struct CkptEntry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
}

#[derive(Serialize, Deserialize)]
struct CkptHeader {
    config: ModelConfig,
    params: Vec<CkptEntry>,
}

impl Model {
    pub fn save(&self, path: &Path) -> Result<()> {
        let named = self.named_params();
        let header = CkptHeader {
            config: self.cfg.clone(),
            params: named
                .iter()
                .map(|(name, t)| CkptEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    dtype: "f64".into(),
                })
                .collect(),
        };
        let hjson = serde_json::to_vec(&header)
            .map_err(|e| Error::format("checkpoint", "header", e.to_string()))?;
        let mut buf = Vec::with_capacity(hjson.len() + 8 + self.param_count() * 8);
        buf.extend_from_slice(CKPT_MAGIC);
        buf.extend_from_slice(&(hjson.len() as u32).to_le_bytes());
        buf.extend_from_slice(&hjson);
        for (_, t) in &named {
            for v in t.data().iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 8 || &bytes[..4] != CKPT_MAGIC {
            return Err(Error::format("checkpoint", "magic", "not a checkpoint file".to_string()));
        }
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if bytes.len() < 8 + hlen {
            return Err(Error::format("checkpoint", "header", "truncated header".to_string()));
        }
        let header: CkptHeader = serde_json::from_slice(&bytes[8..8 + hlen])
            .map_err(|e| Error::format("checkpoint", "header", e.to_string()))?;
        let model = Model::init(&header.config, 0)?;
        let named = model.named_params();
        if named.len() != header.params.len() {
            return Err(Error::format(
                "checkpoint",
                "params",
                format!("{} entries, config implies {}", header.params.len(), named.len()),
            ));
        }
        let mut off = 8 + hlen;
        for ((name, tensor), entry) in named.iter().zip(&header.params) {
            if *name != entry.name || tensor.shape() != entry.shape.as_slice() {
                return Err(Error::format(
                    "checkpoint",
                    entry.name.clone(),
                    format!(
                        "expected `{name}` with shape {:?}, manifest has `{}` {:?}",
                        tensor.shape(),
                        entry.name,
                        entry.shape
                    ),
                ));
            }
            if entry.dtype != "f64" {
                return Err(Error::format("checkpoint", entry.name.clone(), "dtype must be f64".to_string()));
            }
            let count = tensor.len();
            if off + count * 8 > bytes.len() {
                return Err(Error::format("checkpoint", entry.name.clone(), "payload truncated".to_string()));
            }
            let vals: Vec<f64> = (0..count)
                .map(|i| f64::from_le_bytes(bytes[off + i * 8..off + i * 8 + 8].try_into().unwrap()))
                .collect();
            tensor.set_data(&vals)?;
            off += count * 8;
        }
        if off != bytes.len() {
            return Err(Error::format("checkpoint", "payload", "trailing bytes".to_string()));
        }
        // The loss scales travel through named_params into loss_weights.
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_params_are_unique_and_cover_loss_scales() {
        let model = Model::init(&ModelConfig::default(), 1).unwrap();
        let named = model.named_params();
        let mut names: Vec<&str> = named.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        let before = names.len();
        names.dedup();
        assert_eq!(before, names.len());
        assert!(names.contains(&"loss.s1") && names.contains(&"loss.s3"));
    }

    #[test]
    fn checkpoint_round_trips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.rkck");
        let mut cfg = ModelConfig::default();
        cfg.feature_dim = 16;
        cfg.head_dim = 4;
        cfg.window_len = 4;
        let model = Model::init(&cfg, 7).unwrap();
        model.loss_weights.set_log_sigmas([0.1, -0.2, 0.3]).unwrap();
        model.save(&path).unwrap();
        let back = Model::load(&path).unwrap();
        assert_eq!(back.cfg, cfg);
        for ((na, ta), (nb, tb)) in model.named_params().iter().zip(back.named_params()) {
            assert_eq!(*na, nb);
            assert_eq!(ta.to_vec(), tb.to_vec(), "param {na} differs");
        }
        assert_eq!(back.loss_weights.log_sigmas(), [0.1, -0.2, 0.3]);
    }

    #[test]
    fn checkpoint_shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.rkck");
        let model = Model::init(
            &ModelConfig {
                feature_dim: 16,
                head_dim: 4,
                window_len: 4,
                ..ModelConfig::default()
            },
            7,
        )
        .unwrap();
        model.save(&path).unwrap();
        // Corrupt the recorded shape of one parameter.
        let mut bytes = fs::read(&path).unwrap();
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + hlen]).unwrap();
        header["params"][0]["shape"] = serde_json::json!([1, 2, 3]);
        let new_h = serde_json::to_vec(&header).unwrap();
        let mut rebuilt = Vec::new();
        rebuilt.extend_from_slice(&bytes[..4]);
        rebuilt.extend_from_slice(&(new_h.len() as u32).to_le_bytes());
        rebuilt.extend_from_slice(&new_h);
        rebuilt.extend_from_slice(&bytes.split_off(8 + hlen));
        fs::write(&path, rebuilt).unwrap();
        assert!(Model::load(&path).is_err());
    }
}
