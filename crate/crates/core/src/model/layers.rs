use rand::RngCore;

use crate::tensor::{Graph, ParamId, ParamStore, Session, Tensor, Var};
use crate::Result;

/// Registers parameters in a fixed order: Glorot-uniform weights, zero biases.
pub(crate) struct Init<'a> {
    pub store: &'a mut ParamStore,
    pub rng: &'a mut dyn RngCore,
}

impl Init<'_> {
    pub fn weight(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        let t = Tensor::glorot(&[rows, cols], self.rng);
        self.store.add(name, t)
    }

    pub fn bias(&mut self, name: impl Into<String>, len: usize) -> ParamId {
        self.store.add(name, Tensor::zeros(&[len]))
    }
}

/// Dropout source. `off()` makes every forward pass deterministic.
pub struct Noise<'r> {
    rng: Option<&'r mut dyn RngCore>,
}

impl<'r> Noise<'r> {
    pub fn off() -> Self {
        Self { rng: None }
    }

    pub fn on(rng: &'r mut dyn RngCore) -> Self {
        Self { rng: Some(rng) }
    }

    pub fn is_on(&self) -> bool {
        self.rng.is_some()
    }

    pub fn apply(&mut self, g: &mut Graph, x: Var, rate: f64) -> Result<Var> {
        match self.rng.as_deref_mut() {
            Some(rng) if rate > 0.0 => Ok(g.dropout(x, rate, rng)?),
            _ => Ok(x),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub(crate) fn new(init: &mut Init, name: &str, input: usize, output: usize) -> Self {
        Self {
            w: init.weight(format!("{name}.w"), input, output),
            b: init.bias(format!("{name}.b"), output),
        }
    }

    pub fn forward(&self, s: &mut Session, x: Var) -> Result<Var> {
        let (w, b) = (s.param(self.w), s.param(self.b));
        Ok(s.affine(x, w, b)?)
    }
}

/// One hidden layer with ReLU.
#[derive(Clone, Copy, Debug)]
pub struct Mlp {
    pub hidden: Linear,
    pub out: Linear,
}

impl Mlp {
    pub(crate) fn new(
        init: &mut Init,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
    ) -> Self {
        Self {
            hidden: Linear::new(init, &format!("{name}.hidden"), input, hidden),
            out: Linear::new(init, &format!("{name}.out"), hidden, output),
        }
    }

    pub fn forward(&self, s: &mut Session, x: Var) -> Result<Var> {
        let h = self.hidden.forward(s, x)?;
        let h = s.relu(h);
        self.out.forward(s, h)
    }
}

/// `S_ij = rope(q)_i · rope(k)_j`, which equals `q_iᵀ R_{j-i} k_j`.
/// Row `r` of `q` and `k` sits at position `r + offset`.
pub fn rotary_scores(g: &mut Graph, q: Var, k: Var, offset: i64) -> Result<Var> {
    let rq = g.rope(q, offset)?;
    let rk = g.rope(k, offset)?;
    let rkt = g.transpose(rk)?;
    Ok(g.matmul(rq, rkt)?)
}
