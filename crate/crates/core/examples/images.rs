//! Noisy image compression on a generated corpus of graymaps.

use mtt::experiments::{image_corpus_experiment, write_synthetic_corpus, CorpusSpec, ImageMethod};
use mtt::MttConfig;

fn main() -> mtt::Result<()> {
    let dir = std::env::temp_dir().join("mtt-images-example");
    write_synthetic_corpus(&dir.join("corpus"), 20, 32, 32, 0)?;
    let spec = CorpusSpec {
        dir: dir.join("corpus"),
        width: 32,
        height: 32,
        count: 20,
        sample_size: 14,
        noise_amp: 1.0,
        match_tol: None,
        injection_blocks: None,
    };
    let cfg = MttConfig { k1: 8, k2: 8, q: 32, max_iter: 10, ..Default::default() };
    let rep = image_corpus_experiment(&spec, &cfg, Some(&dir.join("recon")))?;
    for m in ImageMethod::ALL {
        println!("{:<5} mean MSE {:.4}  median {:.4}", m.as_str(), rep.mean(m), rep.median(m));
    }
    println!("MTT < GBT2 < GBT1: {}", rep.ordering_holds());
    println!("reconstructions in {}", dir.join("recon").display());
    Ok(())
}
