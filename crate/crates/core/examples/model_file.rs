//! Save and reload a model in the SMDL format, then check the reloaded copy
//! reproduces the logits bit for bit.
//!
//!     cargo run --example model_file -- [path]

use saliency_bench::engine::{mini_vgg, Tensor};
use saliency_bench::io::{load_model, save_model};

fn main() -> saliency_bench::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/examples-out/mini_vgg.smdl".into());
    if let Some(dir) = std::path::Path::new(&path).parent() {
        saliency_bench::io::ensure_dir(dir)?;
    }
    let model = mini_vgg(64, 42)?;
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    assert_eq!(loaded, model);

    let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("{path}: {} layers, {size} bytes", loaded.layers().len());
    for (i, (layer, shape)) in loaded.layers().iter().zip(loaded.shapes()).enumerate() {
        println!("  {i:>2} {:<14} -> {shape:?}", layer.kind().to_string());
    }
    let input = Tensor::filled(vec![3, 64, 64], 0.5);
    let a = model.forward(&input)?.logits().to_vec();
    let b = loaded.forward(&input)?.logits().to_vec();
    assert_eq!(a, b);
    println!("logits {a:?} identical after reload");
    Ok(())
}
