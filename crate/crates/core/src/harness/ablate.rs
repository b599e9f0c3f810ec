//! Ablation grids over attention heads, encoder layers, and window length.

use crate::error::Result;
use crate::harness::config::{MaskMode, RunConfig};
use crate::harness::data::PreparedData;
use crate::harness::eval::evaluate;
use crate::harness::train::train;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    Heads,
    Layers,
    WindowLen,
}

impl AblationAxis {
    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::Heads => "h",
            AblationAxis::Layers => "l",
            AblationAxis::WindowLen => "m",
        }
    }

    pub fn values(self) -> &'static [usize] {
        match self {
            AblationAxis::Heads => &[2, 4, 6, 8, 10],
            AblationAxis::Layers => &[2, 4, 6, 8],
            AblationAxis::WindowLen => &[10, 20, 30, 40, 50],
        }
    }
}

/// One config per grid cell: the swept axis varies, the other two are held
/// at their companion constants (l=2, m=30 for the head sweep; h=8, m=30 for
/// layers; h=8, l=2 for window length).
pub fn ablation_grid(axis: AblationAxis, base: &RunConfig) -> Vec<(usize, RunConfig)> {
    axis.values()
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            match axis {
                AblationAxis::Heads => {
                    cfg.model.heads = v;
                    cfg.model.layers = 2;
                    cfg.model.window_len = 30;
                }
                AblationAxis::Layers => {
                    cfg.model.layers = v;
                    cfg.model.heads = 8;
                    cfg.model.window_len = 30;
                }
                AblationAxis::WindowLen => {
                    cfg.model.window_len = v;
                    cfg.model.heads = 8;
                    cfg.model.layers = 2;
                }
            }
            (v, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub axis: &'static str,
    pub value: usize,
    pub accuracy: f64,
    pub weighted_f1: f64,
}

pub const ABLATION_HEADER: &str = "axis,value,accuracy,weighted_f1";

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(ABLATION_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4}\n",
            r.axis, r.value, r.accuracy, r.weighted_f1
        ));
    }
    out
}

/// One train+evaluate per grid cell on a shared dataset. Evaluation is
/// unmasked, matching how the ablation tables score the raw network.
pub fn ablate(
    axis: AblationAxis,
    base: &RunConfig,
    data: &PreparedData,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (value, cfg) in ablation_grid(axis, base) {
        let outcome = train(&cfg, data)?;
        let ev = evaluate(&outcome.model, &data.test, None, MaskMode::None, &cfg.augment)?;
        rows.push(AblationRow {
            axis: axis.name(),
            value,
            accuracy: ev.accuracy,
            weighted_f1: ev.weighted_f1,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_the_published_shapes() {
        let base = RunConfig::default();
        let h = ablation_grid(AblationAxis::Heads, &base);
        assert_eq!(h.len(), 5);
        assert_eq!(h.iter().map(|(v, _)| *v).collect::<Vec<_>>(), vec![2, 4, 6, 8, 10]);
        for (v, cfg) in &h {
            assert_eq!(cfg.model.heads, *v);
            assert_eq!((cfg.model.layers, cfg.model.window_len), (2, 30));
        }

        let l = ablation_grid(AblationAxis::Layers, &base);
        assert_eq!(l.len(), 4);
        assert_eq!(l.iter().map(|(v, _)| *v).collect::<Vec<_>>(), vec![2, 4, 6, 8]);
        for (v, cfg) in &l {
            assert_eq!(cfg.model.layers, *v);
            assert_eq!((cfg.model.heads, cfg.model.window_len), (8, 30));
        }

        let m = ablation_grid(AblationAxis::WindowLen, &base);
        assert_eq!(m.len(), 5);
        assert_eq!(m.iter().map(|(v, _)| *v).collect::<Vec<_>>(), vec![10, 20, 30, 40, 50]);
        for (v, cfg) in &m {
            assert_eq!(cfg.model.window_len, *v);
            assert_eq!((cfg.model.heads, cfg.model.layers), (8, 2));
        }
    }

    #[test]
    fn csv_shape_matches_rows() {
        let rows = vec![AblationRow {
            axis: "h",
            value: 8,
            accuracy: 0.8337,
            weighted_f1: 0.8385,
        }];
        let csv = ablation_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.contains("h,8,0.8337,0.8385"));
    }
}
