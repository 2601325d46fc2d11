use super::loss::sentence_loss;
use crate::corpus::{Polarity, Sentence, SentimentTuple, Span};
use crate::labeling::encode;
use crate::model::{ModelConfig, Noise, Tgls, Vocab};
use crate::tensor::{finite_difference_check, GradCheckReport, ParamStore, Session};
use crate::Result;

pub const GRADCHECK_EPSILON: f64 = 2e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-3;

/// "I love the food": holder `I`, positive expression `love`, target `the food`.
pub fn gradcheck_sentence() -> Sentence {
    let t = SentimentTuple::new(
        Some(Span::single(0)),
        Span::single(1),
        Some(Span::new(2, 3)),
        Polarity::Positive,
    );
    Sentence::from_words("gradcheck", &["I", "love", "the", "food"], vec![t])
}

/// Central-difference check of `L_all` over every trainable parameter of a
/// freshly initialized model, dropout off.
pub fn gradcheck(model_cfg: &ModelConfig, alpha: f64, seed: u64) -> Result<GradCheckReport> {
    let cfg = ModelConfig {
        embedding_dropout: 0.0,
        dropout: 0.0,
        ..model_cfg.clone()
    };
    let sentence = gradcheck_sentence();
    let model = Tgls::new(cfg, Vocab::build([&sentence]), seed)?;
    let enc = model.encode(&sentence);
    let gold = encode(&sentence)?;

    let loss_of = |store: &ParamStore| -> Result<f64> {
        let mut s = Session::new(store);
        let f = model.forward(&mut s, &enc, &mut Noise::off(), 0)?;
        let l = sentence_loss(&mut s, &f, &gold, alpha)?;
        Ok(s.value(l.all).item())
    };

    let mut s = Session::new(model.params());
    let f = model.forward(&mut s, &enc, &mut Noise::off(), 0)?;
    let l = sentence_loss(&mut s, &f, &gold, alpha)?;
    s.backward(l.all)?;
    let analytic = s.gradients();
    let report = finite_difference_check(
        model.params(),
        &analytic,
        |store| loss_of(store).unwrap_or(f64::NAN),
        GRADCHECK_EPSILON,
        GRADCHECK_TOLERANCE,
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_model_passes() {
        let r = gradcheck(&ModelConfig::tiny(), 0.25, 0).unwrap();
        assert!(
            r.passed(),
            "max rel error {} at {:?}",
            r.max_rel_error,
            r.worst
        );
        assert!(r.checked > 100);
    }
}
