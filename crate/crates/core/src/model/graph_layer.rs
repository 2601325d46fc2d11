use std::fmt;

use serde::{Deserialize, Serialize};

use super::layers::{rotary_scores, Init, Linear, Mlp, Noise};
use super::ModelConfig;
use crate::labeling::WholeLabel;
use crate::tensor::{ParamId, Session, Var};
use crate::Result;

/// The four token-graph views: vanilla, span, relation and cls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewId {
    O,
    S,
    R,
    C,
}

impl ViewId {
    pub const ALL: [ViewId; 4] = [ViewId::O, ViewId::S, ViewId::R, ViewId::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewId::O => "o",
            ViewId::S => "s",
            ViewId::R => "r",
            ViewId::C => "c",
        }
    }

    /// Whole-label matrix supervising this view; the vanilla view has none.
    pub fn supervision(self) -> Option<WholeLabel> {
        match self {
            ViewId::O => None,
            ViewId::S => Some(WholeLabel::Span),
            ViewId::R => Some(WholeLabel::Rel),
            ViewId::C => Some(WholeLabel::Cls),
        }
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct GraphParams {
    pub query: [Mlp; 4],
    pub key: [Mlp; 4],
    pub th_query: Linear,
    pub th_key: Linear,
    /// Projection of the encoder output to the initial hop representation.
    pub project: Linear,
    /// `hops[l][v]`: `[d_u, d_u]` mixing weight of view `v` at hop `l`.
    pub hops: Vec<[ParamId; 4]>,
    dropout: f64,
}

impl GraphParams {
    pub(crate) fn new(init: &mut Init, cfg: &ModelConfig) -> Self {
        let (dh, hid, dq) = (cfg.hidden_size, cfg.mlp_hidden, cfg.score_dim);
        let query = ViewId::ALL.map(|v| Mlp::new(init, &format!("graph.{v}.query"), dh, hid, dq));
        let key = ViewId::ALL.map(|v| Mlp::new(init, &format!("graph.{v}.key"), dh, hid, dq));
        let th_query = Linear::new(init, "graph.th.query", dh, dq);
        let th_key = Linear::new(init, "graph.th.key", dh, dq);
        let project = Linear::new(init, "graph.project", dh, cfg.graph_dim);
        let hops = (0..cfg.hop_layers)
            .map(|l| {
                ViewId::ALL.map(|v| {
                    init.weight(format!("graph.hop.{l}.{v}"), cfg.graph_dim, cfg.graph_dim)
                })
            })
            .collect();
        Self {
            query,
            key,
            th_query,
            th_key,
            project,
            hops,
            dropout: cfg.dropout,
        }
    }

    /// `S^G_v`: `[n+1, n+1]` rotary scores of one view.
    pub fn attention_scores(
        &self,
        s: &mut Session,
        h: Var,
        view: ViewId,
        offset: i64,
    ) -> Result<Var> {
        let q = self.query[view.index()].forward(s, h)?;
        let k = self.key[view.index()].forward(s, h)?;
        rotary_scores(s, q, k, offset)
    }

    pub fn all_scores(&self, s: &mut Session, h: Var, offset: i64) -> Result<[Var; 4]> {
        let mut out = Vec::with_capacity(4);
        for v in ViewId::ALL {
            out.push(self.attention_scores(s, h, v, offset)?);
        }
        Ok(out.try_into().expect("four views"))
    }

    /// `TH^G`, from affine (not MLP) query/key maps of `h`.
    pub fn hidden_thresholds(&self, s: &mut Session, h: Var, offset: i64) -> Result<Var> {
        let q = self.th_query.forward(s, h)?;
        let k = self.th_key.forward(s, h)?;
        rotary_scores(s, q, k, offset)
    }

    /// Row-softmax of each view's scores.
    pub fn attention(&self, s: &mut Session, scores: &[Var; 4]) -> Result<[Var; 4]> {
        let mut out = Vec::with_capacity(4);
        for &sc in scores {
            out.push(s.softmax(sc, 1)?);
        }
        Ok(out.try_into().expect("four views"))
    }

    /// `u⁰ = W h + b`, then per hop `u ← ReLU((1/4) Σ_v A_v u W^v_l)`.
    pub fn multi_hop(
        &self,
        s: &mut Session,
        h: Var,
        scores: &[Var; 4],
        noise: &mut Noise,
    ) -> Result<Var> {
        let attention = self.attention(s, scores)?;
        let mut u = self.project.forward(s, h)?;
        for layer in &self.hops {
            let mut acc: Option<Var> = None;
            for v in ViewId::ALL {
                let w = s.param(layer[v.index()]);
                let mixed = s.matmul(u, w)?;
                let spread = s.matmul(attention[v.index()], mixed)?;
                acc = Some(match acc {
                    Some(a) => s.add(a, spread)?,
                    None => spread,
                });
            }
            let mean = s.scale(acc.expect("four views"), 1.0 / ViewId::ALL.len() as f64);
            u = s.relu(mean);
            u = noise.apply(s, u, self.dropout)?;
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ParamStore, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(cfg: &ModelConfig) -> (ParamStore, GraphParams) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = GraphParams::new(
            &mut Init {
                store: &mut store,
                rng: &mut rng,
            },
            cfg,
        );
        (store, p)
    }

    fn random_h(rows: usize, cols: usize, seed: u64) -> Tensor {
        Tensor::glorot(&[rows, cols], &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn shapes() {
        let cfg = ModelConfig::tiny();
        let (store, p) = build(&cfg);
        let mut s = Session::new(&store);
        let h = s.constant(random_h(4, cfg.hidden_size, 1));
        let scores = p.all_scores(&mut s, h, 0).unwrap();
        for v in scores {
            assert_eq!(s.shape(v), &[4, 4]);
        }
        let u = p.multi_hop(&mut s, h, &scores, &mut Noise::off()).unwrap();
        assert_eq!(s.shape(u), &[4, cfg.graph_dim]);
        let th = p.hidden_thresholds(&mut s, h, 0).unwrap();
        assert_eq!(s.shape(th), &[4, 4]);
    }

    #[test]
    fn zero_hop_weights_give_zero_output() {
        let cfg = ModelConfig::tiny();
        let (mut store, p) = build(&cfg);
        for layer in &p.hops {
            for id in layer {
                store.get_mut(*id).data_mut().fill(0.0);
            }
        }
        let mut s = Session::new(&store);
        let h = s.constant(random_h(3, cfg.hidden_size, 2));
        let scores = p.all_scores(&mut s, h, 0).unwrap();
        let u = p.multi_hop(&mut s, h, &scores, &mut Noise::off()).unwrap();
        assert!(s.value(u).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_threshold_params_give_zero_thresholds() {
        let cfg = ModelConfig::tiny();
        let (mut store, p) = build(&cfg);
        for id in [p.th_query.w, p.th_query.b, p.th_key.w, p.th_key.b] {
            store.get_mut(id).data_mut().fill(0.0);
        }
        let mut s = Session::new(&store);
        let h = s.constant(random_h(5, cfg.hidden_size, 3));
        let th = p.hidden_thresholds(&mut s, h, 0).unwrap();
        assert!(s.value(th).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let cfg = ModelConfig::tiny();
        let (store, p) = build(&cfg);
        let mut s = Session::new(&store);
        let h = s.constant(random_h(6, cfg.hidden_size, 4));
        let scores = p.all_scores(&mut s, h, 0).unwrap();
        for a in p.attention(&mut s, &scores).unwrap() {
            for row in s.value(a).to_rows() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|x| *x >= 0.0));
            }
        }
    }

    #[test]
    fn single_view_hop_matches_hand_computation() {
        let cfg = ModelConfig {
            graph_dim: 2,
            hop_layers: 1,
            ..ModelConfig::tiny()
        };
        let (mut store, p) = build(&cfg);
        // Identity projection on the first two hidden columns.
        let dh = cfg.hidden_size;
        let mut w = vec![0.0; dh * 2];
        w[0] = 1.0;
        w[2 + 1] = 1.0;
        store.get_mut(p.project.w).data_mut().copy_from_slice(&w);
        store.get_mut(p.project.b).data_mut().fill(0.0);
        for v in ViewId::ALL {
            let mat = if v == ViewId::S {
                [2.0, 0.0, 0.0, 2.0]
            } else {
                [0.0; 4]
            };
            store
                .get_mut(p.hops[0][v.index()])
                .data_mut()
                .copy_from_slice(&mat);
        }
        let mut s = Session::new(&store);
        let mut hrows = vec![vec![0.0; dh]; 3];
        hrows[0][0] = 1.0;
        hrows[1][1] = 2.0;
        hrows[2][0] = -1.0;
        hrows[2][1] = 1.0;
        let refs: Vec<&[f64]> = hrows.iter().map(Vec::as_slice).collect();
        let h = s.constant(Tensor::matrix(&refs));
        let raw = [[0.0, 1.0, 2.0], [0.5, 0.0, -0.5], [1.0, 1.0, 1.0]];
        let scores = ViewId::ALL.map(|_| s.constant(Tensor::matrix(&[&raw[0], &raw[1], &raw[2]])));
        let u = p.multi_hop(&mut s, h, &scores, &mut Noise::off()).unwrap();

        let u0 = [[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]];
        for (i, row) in raw.iter().enumerate() {
            let z: f64 = row.iter().map(|x| x.exp()).sum();
            for c in 0..2 {
                let agg: f64 = (0..3).map(|j| row[j].exp() / z * 2.0 * u0[j][c]).sum();
                let expected = (agg / 4.0).max(0.0);
                assert!((s.value(u).get(i, c) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_invariance_of_scores() {
        let cfg = ModelConfig::tiny();
        let (store, p) = build(&cfg);
        let mut s = Session::new(&store);
        let h = s.constant(random_h(5, cfg.hidden_size, 9));
        for v in ViewId::ALL {
            let a = p.attention_scores(&mut s, h, v, 0).unwrap();
            let b = p.attention_scores(&mut s, h, v, 7).unwrap();
            for (x, y) in s.value(a).data().iter().zip(s.value(b).data()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
