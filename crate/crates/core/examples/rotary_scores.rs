//! Rotary query/key scores depend only on the distance between positions:
//! shifting every position by the same amount leaves the score matrix
//! unchanged, while the raw dot product ignores position altogether.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tgls::model::rotary_scores;
use tgls::tensor::{Graph, Tensor};

fn main() -> tgls::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (rows, dim) = (5, 8);
    let q = Tensor::glorot(&[rows, dim], &mut rng);
    let k = Tensor::glorot(&[rows, dim], &mut rng);

    let mut g = Graph::new();
    let (qv, kv) = (g.constant(q.clone()), g.constant(k));
    let base = rotary_scores(&mut g, qv, kv, 0)?;
    let mut worst: f64 = 0.0;
    for offset in [1, 17, 1000, -40] {
        let shifted = rotary_scores(&mut g, qv, kv, offset)?;
        let diff = g
            .value(base)
            .data()
            .iter()
            .zip(g.value(shifted).data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("offset {offset:>5}: max |ΔS| = {diff:.2e}");
        worst = worst.max(diff);
    }

    // Identical query and key content at every position: scores then vary
    // only with the relative distance j - i.
    let row: Vec<f64> = q.row(0).to_vec();
    let same = Tensor::new(vec![rows, dim], row.repeat(rows))?;
    let sv = g.constant(same);
    let s = rotary_scores(&mut g, sv, sv, 0)?;
    println!("\nscores for repeated content (constant along diagonals):");
    for r in g.value(s).to_rows() {
        println!(
            "  {}",
            r.iter()
                .map(|v| format!("{v:7.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    assert!(worst < 1e-9);
    Ok(())
}
