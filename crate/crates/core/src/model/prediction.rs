use super::layers::{rotary_scores, Init, Linear, Mlp};
use super::ModelConfig;
use crate::labeling::{EssentialLabel, LabelCellSet};
use crate::tensor::{Session, Tensor, TensorError, Var};
use crate::Result;

#[derive(Clone, Debug)]
pub struct PredictionParams {
    /// One query/key scorer per essential label, indexed by `EssentialLabel::index`.
    pub query: Vec<Mlp>,
    pub key: Vec<Mlp>,
    pub th_query: Linear,
    pub th_key: Linear,
}

impl PredictionParams {
    pub(crate) fn new(init: &mut Init, cfg: &ModelConfig) -> Self {
        let dc = cfg.hidden_size + cfg.graph_dim;
        let (hid, dq) = (cfg.mlp_hidden, cfg.score_dim);
        let query = EssentialLabel::ALL
            .iter()
            .map(|l| Mlp::new(init, &format!("pred.{}.query", l.index()), dc, hid, dq))
            .collect();
        let key = EssentialLabel::ALL
            .iter()
            .map(|l| Mlp::new(init, &format!("pred.{}.key", l.index()), dc, hid, dq))
            .collect();
        Self {
            query,
            key,
            th_query: Linear::new(init, "pred.th.query", cfg.hidden_size, dq),
            th_key: Linear::new(init, "pred.th.key", cfg.hidden_size, dq),
        }
    }

    /// One rotary score matrix per essential label, from `C`.
    pub fn score_essential(&self, s: &mut Session, c: Var, offset: i64) -> Result<Vec<Var>> {
        let mut out = Vec::with_capacity(EssentialLabel::ALL.len());
        for (q, k) in self.query.iter().zip(&self.key) {
            let qv = q.forward(s, c)?;
            let kv = k.forward(s, c)?;
            out.push(rotary_scores(s, qv, kv, offset)?);
        }
        Ok(out)
    }

    /// `TH^P`, computed from the encoder output `H`.
    pub fn adaptive_threshold(&self, s: &mut Session, h: Var, offset: i64) -> Result<Var> {
        let q = self.th_query.forward(s, h)?;
        let k = self.th_key.forward(s, h)?;
        rotary_scores(s, q, k, offset)
    }
}

/// `C = [H | U]`.
pub fn fuse(s: &mut Session, h: Var, u: Var) -> Result<Var> {
    if s.shape(h)[0] != s.shape(u)[0] {
        return Err(TensorError::ShapeMismatch {
            op: "fuse",
            left: s.shape(h).to_vec(),
            right: s.shape(u).to_vec(),
        }
        .into());
    }
    Ok(s.concat_cols(&[h, u])?)
}

/// Labels whose score strictly exceeds the cell threshold, over model cells
/// `1 ≤ i ≤ j ≤ n`, returned in token coordinates.
pub fn predict_labels(scores: &[Tensor], threshold: &Tensor) -> LabelCellSet {
    assert_eq!(
        scores.len(),
        EssentialLabel::ALL.len(),
        "one score matrix per essential label"
    );
    let size = threshold.rows();
    let mut cells = LabelCellSet::new(size.saturating_sub(1));
    for i in 1..size {
        for j in i..size {
            let th = threshold.get(i, j);
            for label in EssentialLabel::ALL {
                if scores[label.index()].get(i, j) > th {
                    cells.insert(i - 1, j - 1, label);
                }
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ParamStore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_scores_predict_nothing() {
        let th = Tensor::zeros(&[5, 5]);
        let scores = vec![Tensor::zeros(&[5, 5]); 9];
        assert!(predict_labels(&scores, &th).is_empty());
    }

    #[test]
    fn two_labels_in_one_cell() {
        let th = Tensor::zeros(&[4, 4]);
        let mut scores = vec![Tensor::zeros(&[4, 4]); 9];
        for l in [
            EssentialLabel::ExpHeadToHolderHead,
            EssentialLabel::ExpTailToHolderTail,
        ] {
            scores[l.index()].data_mut()[4 + 2] = 0.5;
        }
        let cells = predict_labels(&scores, &th);
        assert_eq!(cells.labels(0, 1).unwrap().len(), 2);
        assert_eq!(cells.multi_label_cells(), 1);
    }

    #[test]
    fn brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rand_matrix = || {
            let data = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Tensor::new(vec![5, 5], data).unwrap()
        };
        let th = rand_matrix();
        let scores: Vec<Tensor> = (0..9).map(|_| rand_matrix()).collect();
        let cells = predict_labels(&scores, &th);
        let mut expected = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for l in EssentialLabel::ALL {
                    if i >= 1 && j >= i && scores[l.index()].get(i, j) > th.get(i, j) {
                        expected.push((i - 1, j - 1, l));
                    }
                }
            }
        }
        let got: Vec<_> = cells
            .cells()
            .flat_map(|((i, j), ls)| ls.iter().map(move |l| (i, j, *l)))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn fuse_concatenates_and_rejects_mismatch() {
        let store = ParamStore::new();
        let mut s = Session::new(&store);
        let h = s.constant(Tensor::matrix(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let u = s.constant(Tensor::zeros(&[2, 3]));
        let c = fuse(&mut s, h, u).unwrap();
        assert_eq!(s.value(c).row(1), &[3.0, 4.0, 0.0, 0.0, 0.0]);
        let bad = s.constant(Tensor::zeros(&[3, 3]));
        assert!(fuse(&mut s, h, bad).is_err());
    }
}
