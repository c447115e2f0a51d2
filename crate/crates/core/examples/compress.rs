//! Compress to codes, save the model, reload it and decompress.

use mtt::experiments::{gen_example1, Example1Params};
use mtt::io::{read_model, write_model};
use mtt::{mtt_fit, MttConfig};

fn main() -> mtt::Result<()> {
    let p = Example1Params { m: 30, n_samples: 80, noise_amp: 3.0 };
    let (x, y) = gen_example1(5, &p);
    let cfg = MttConfig { k1: 5, k2: 5, q: 30, max_iter: 50, seed: 5, ..Default::default() };
    let (model, _) = mtt_fit(&x, &y, &cfg)?;

    let (u1, u2) = model.compress(&y, &model.v)?;
    println!("codes: U1 {:?}, U2 {:?} for X {:?}", u1.shape(), u2.shape(), x.shape());

    let dir = std::env::temp_dir().join("mtt-compress-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.bin");
    write_model(&path, &model)?;
    let loaded = read_model(&path)?;
    println!("model file: {} bytes, identical after reload: {}", std::fs::metadata(&path)?.len(), loaded == model);

    let xhat = loaded.decompress(&u1, &u2)?;
    let direct = model.apply(&y, &model.v)?;
    println!("‖X̂ − direct‖ = {:.2e}", (&xhat - direct).norm());
    println!("‖X − X̂‖² = {:.3}", (&x - &xhat).norm_squared());
    Ok(())
}
