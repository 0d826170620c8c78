//! Compare reverse-mode gradients with central finite differences on a small
//! random network, for the input and for every intermediate activation.
//!
//!     cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saliency_bench::engine::{mini_vgg, Tensor};

fn main() -> saliency_bench::Result<()> {
    let model = mini_vgg(16, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let input = Tensor::new(vec![3, 16, 16], (0..768).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    let trace = model.forward(&input)?;
    let class = 1;
    let grads = model.backward(&trace, class)?;
    let h = 1e-6;

    // Perturb the input of layer `start` (the network input when start = 0).
    // Exact zeros are skipped: a pooling window of tied zeros after a ReLU
    // has no derivative, and a finite difference there measures a kink.
    let check = |start: usize, x: &Tensor, g: &Tensor, rng: &mut ChaCha8Rng| -> saliency_bench::Result<f64> {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let i = rng.gen_range(0..x.len());
            if x.data()[i] == 0.0 {
                continue;
            }
            let mut plus = x.clone();
            plus.data_mut()[i] += h;
            let mut minus = x.clone();
            minus.data_mut()[i] -= h;
            let fd = (model.forward_from(start, &plus)?[class] - model.forward_from(start, &minus)?[class]) / (2.0 * h);
            worst = worst.max((fd - g.data()[i]).abs() / fd.abs().max(g.data()[i].abs()).max(1e-8));
        }
        Ok(worst)
    };

    println!(
        "input: worst relative error {:.2e}",
        check(0, &input, grads.wrt_input(), &mut rng)?
    );
    for (i, layer) in model.layers().iter().enumerate().take(model.layers().len() - 1) {
        let err = check(i + 1, &trace.activations[i], grads.wrt_layer(i), &mut rng)?;
        println!("after layer {i:>2} ({}): worst relative error {err:.2e}", layer.kind());
    }
    Ok(())
}
