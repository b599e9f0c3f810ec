//! Forward pass: conv embedder → class-token encoder → three heads.

use crate::error::{Error, Result};
use crate::model::config::LN_EPS;
use crate::model::params::{HeadParams, Model};
use crate::numkit::Tensor;
use crate::synthgen::Frame;

/// The three probability vectors the network emits for one window.
pub struct HeadOutputs {
    /// Holistic jersey distribution over K classes.
    pub p0: Tensor,
    /// First-digit distribution over 11 classes.
    pub p1: Tensor,
    /// Second-digit distribution over 11 classes.
    pub p2: Tensor,
}

fn frame_to_tensor(frame: &Frame) -> Tensor {
    // HWC on disk, CHW for the conv kernels.
    let (h, w, c) = (frame.h, frame.w, frame.c);
    let mut data = vec![0.0f64; c * h * w];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                data[(ch * h + y) * w + x] = frame.get(y, x, ch) as f64;
            }
        }
    }
    Tensor::from_vec(data, &[c, h, w]).expect("frame tensor")
}

impl Model {
    /// One frame to one `[1, d]` feature row.
    pub fn embed_frame(&self, frame: &Frame) -> Result<Tensor> {
        if frame.c != 1 {
            return Err(Error::shape(
                "embed_frame",
                format!("embedder expects grayscale frames, got {} channels", frame.c),
            ));
        }
        let x = frame_to_tensor(frame);
        let e = &self.embed;
        let x = x.conv2d(&e.conv1_w, &e.conv1_b, 2, 1)?.relu();
        let x = x.conv2d(&e.conv2_w, &e.conv2_b, 2, 1)?.relu();
        let x = x.conv2d(&e.conv3_w, &e.conv3_b, 2, 1)?.relu();
        let pooled = x.global_mean_pool()?;
        pooled.matmul(&e.proj_w)?.add(&e.proj_b)
    }

    /// Stack per-frame features into an `[m, d]` matrix. All frames must
    /// share one shape; the embedder is applied identically to each.
    pub fn embed_frames(&self, frames: &[Frame]) -> Result<Tensor> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("embed_frames on an empty window"))?;
        if frames
            .iter()
            .any(|f| (f.h, f.w, f.c) != (first.h, first.w, first.c))
        {
            return Err(Error::shape("embed_frames", "frames disagree on size".to_string()));
        }
        let rows: Vec<Tensor> = frames
            .iter()
            .map(|f| self.embed_frame(f))
            .collect::<Result<_>>()?;
        Tensor::concat_rows(&rows)
    }

    /// Run the encoder over `[m, d]` features and return the class-token
    /// state `[1, d]` after the final layer.
    pub fn encode(&self, feats: &Tensor) -> Result<Tensor> {
        self.encode_inner(feats, None)
    }

    pub(crate) fn encode_inner(
        &self,
        feats: &Tensor,
        mut attn_sink: Option<&mut Vec<Tensor>>,
    ) -> Result<Tensor> {
        let m = self.cfg.window_len;
        let d = self.cfg.feature_dim;
        if feats.shape() != [m, d] {
            return Err(Error::shape(
                "encode",
                format!("features {:?}, config wants [{m}, {d}]", feats.shape()),
            ));
        }
        let tokens = Tensor::concat_rows(&[self.class_token.clone(), feats.clone()])?;
        let mut x = tokens.add(&self.pos_table)?;
        let scale = 1.0 / (self.cfg.head_dim as f64).sqrt();
        for (li, layer) in self.layers.iter().enumerate() {
            let normed = x.layer_norm(&layer.ln1_gain, &layer.ln1_bias, LN_EPS)?;
            let q = normed.matmul(&layer.wq)?.add(&layer.bq)?;
            let k = normed.matmul(&layer.wk)?.add(&layer.bk)?;
            let v = normed.matmul(&layer.wv)?.add(&layer.bv)?;
            let mut ctx = Vec::with_capacity(self.cfg.heads);
            for h in 0..self.cfg.heads {
                let off = h * self.cfg.head_dim;
                let qh = q.slice_cols(off, self.cfg.head_dim)?;
                let kh = k.slice_cols(off, self.cfg.head_dim)?;
                let vh = v.slice_cols(off, self.cfg.head_dim)?;
                let scores = qh.matmul(&kh.transpose()?)?.scale(scale);
                let attn = scores.softmax(1)?;
                if let Some(sink) = attn_sink.as_deref_mut() {
                    sink.push(attn.clone());
                }
                ctx.push(attn.matmul(&vh)?);
            }
            let merged = Tensor::concat_cols(&ctx)?;
            let attn_out = merged.matmul(&layer.wo)?.add(&layer.bo)?;
            x = x.add(&attn_out)?;
            let normed2 = x.layer_norm(&layer.ln2_gain, &layer.ln2_bias, LN_EPS)?;
            let hidden = normed2.matmul(&layer.mlp_w1)?.add(&layer.mlp_b1)?.gelu();
            let mlp_out = hidden.matmul(&layer.mlp_w2)?.add(&layer.mlp_b2)?;
            x = x.add(&mlp_out)?;
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("encoder layer {li}")));
            }
        }
        x.slice_rows(0, 1)
    }

    fn run_head(&self, z: &Tensor, head: &HeadParams) -> Result<Tensor> {
        let out = head.b.len();
        z.layer_norm(&head.ln_gain, &head.ln_bias, LN_EPS)?
            .matmul(&head.w)?
            .add(&head.b)?
            .softmax(1)?
            .reshape(&[out])
    }

    /// Three independent layernorm→linear→softmax maps over the class-token
    /// state.
    pub fn heads(&self, z: &Tensor) -> Result<HeadOutputs> {
        Ok(HeadOutputs {
            p0: self.run_head(z, &self.head_holistic)?,
            p1: self.run_head(z, &self.head_digit1)?,
            p2: self.run_head(z, &self.head_digit2)?,
        })
    }

    /// Full pass over a window of at most `m` frames; shorter windows are
    /// padded by repeating the final frame.
    pub fn forward(&self, frames: &[Frame]) -> Result<HeadOutputs> {
        let m = self.cfg.window_len;
        if frames.is_empty() {
            return Err(Error::invalid("forward on an empty window"));
        }
        if frames.len() > m {
            return Err(Error::shape(
                "forward",
                format!("window of {} frames exceeds m={m}", frames.len()),
            ));
        }
        let feats = if frames.len() == m {
            self.embed_frames(frames)?
        } else {
            let mut padded: Vec<Frame> = frames.to_vec();
            while padded.len() < m {
                padded.push(padded.last().unwrap().clone());
            }
            self.embed_frames(&padded)?
        };
        let z = self.encode(&feats)?;
        self.heads(&z)
    }
}
