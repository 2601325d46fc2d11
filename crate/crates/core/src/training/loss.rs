use crate::labeling::{EssentialLabel, LabelCellSet, WholeLabel};
use crate::model::{Forward, ViewId};
use crate::tensor::{Graph, Tensor, Var};
use crate::Result;

/// Supervision of one cell: `(score index, positive)` for every label in
/// the cell's universe. Coordinates index the score matrices directly.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGold {
    pub i: usize,
    pub j: usize,
    pub labels: Vec<(usize, bool)>,
}

/// Σ over cells of
/// `log(e^{TH} + Σ_neg e^{S_r}) + log(e^{−TH} + Σ_pos e^{−S_r})`.
///
/// `scores` and `threshold` must share one square shape.
pub fn adaptive_threshold_loss(
    g: &mut Graph,
    scores: &[Var],
    threshold: Var,
    gold: &[CellGold],
) -> Result<Var> {
    if gold.is_empty() {
        return Ok(g.constant(Tensor::scalar(0.0)));
    }
    let size = g.shape(threshold)[0];
    let block = size * size;
    let mut parts = Vec::with_capacity(scores.len() + 1);
    parts.push(threshold);
    parts.extend_from_slice(scores);
    let stacked = g.concat_rows(&parts)?;
    let mut sets = Vec::with_capacity(2 * gold.len());
    for cell in gold {
        let at = |b: usize| b * block + cell.i * size + cell.j;
        let mut neg = vec![(at(0), 1.0)];
        let mut pos = vec![(at(0), -1.0)];
        for &(r, positive) in &cell.labels {
            if positive {
                pos.push((at(r + 1), -1.0));
            } else {
                neg.push((at(r + 1), 1.0));
            }
        }
        sets.push(neg);
        sets.push(pos);
    }
    let terms = g.logsumexp_sets(stacked, sets)?;
    Ok(g.sum(terms))
}

/// All nine essential labels on model cells `1 ≤ i ≤ j ≤ n`; the sentinel
/// row and column are not supervised.
pub fn essential_gold(cells: &LabelCellSet) -> Vec<CellGold> {
    let n = cells.n();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in i..n {
            let labels = EssentialLabel::ALL
                .iter()
                .map(|l| (l.index(), cells.has(i - 1, j - 1, *l)))
                .collect();
            out.push(CellGold { i, j, labels });
        }
    }
    out
}

/// Whole labels against the `[S^G_s, S^G_r, S^G_c]` score order. The
/// sentinel row is supervised only in the cls matrix; every other cell
/// `i ≤ j` carries all three labels.
pub fn whole_gold(cells: &LabelCellSet) -> Vec<CellGold> {
    let w = cells.whole();
    let n = cells.n();
    let cls = WholeLabel::Cls.index();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(CellGold {
            i: 0,
            j,
            labels: vec![(cls, w.get(WholeLabel::Cls, 0, j))],
        });
    }
    for i in 1..n {
        for j in i..n {
            let labels = WholeLabel::ALL
                .iter()
                .map(|l| (l.index(), w.get(*l, i, j)))
                .collect();
            out.push(CellGold { i, j, labels });
        }
    }
    out
}

/// `L_e + α L_w`.
pub fn total_loss(l_e: f64, l_w: f64, alpha: f64) -> f64 {
    l_e + alpha * l_w
}

#[derive(Clone, Copy, Debug)]
pub struct SentenceLoss {
    pub all: Var,
    pub l_e: f64,
    /// `None` when `α = 0`: the whole-label loss is not built at all.
    pub l_w: Option<f64>,
}

pub fn sentence_loss(
    g: &mut Graph,
    f: &Forward,
    gold: &LabelCellSet,
    alpha: f64,
) -> Result<SentenceLoss> {
    let l_e =
        adaptive_threshold_loss(g, &f.label_scores, f.label_threshold, &essential_gold(gold))?;
    let l_e_value = g.value(l_e).item();
    if alpha == 0.0 {
        return Ok(SentenceLoss {
            all: l_e,
            l_e: l_e_value,
            l_w: None,
        });
    }
    let supervised = [ViewId::S, ViewId::R, ViewId::C].map(|v| f.view_scores[v.index()]);
    let l_w = adaptive_threshold_loss(g, &supervised, f.graph_threshold, &whole_gold(gold))?;
    let l_w_value = g.value(l_w).item();
    let weighted = g.scale(l_w, alpha);
    let all = g.add(l_e, weighted)?;
    Ok(SentenceLoss {
        all,
        l_e: l_e_value,
        l_w: Some(l_w_value),
    })
}
