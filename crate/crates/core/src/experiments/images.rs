use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{derive_seed, rng_for, stats};
use crate::error::{Error, Result};
use crate::io::pgm::{self, Pgm};
use crate::matops::Matrix;
use crate::solver::{self, MttConfig, MttTrace};
use crate::transforms;

const STREAM_IMAGE_NOISE: u64 = 11;
const STREAM_PERMUTATION: u64 = 12;
const STREAM_IMAGE_INJECTION: u64 = 13;

/// Where the corpus lives and how the experiment samples it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub dir: PathBuf,
    pub width: usize,
    pub height: usize,
    /// Number of images `r` taken from the directory (sorted by file name).
    pub count: usize,
    /// Number of images `s ≤ r` in the training sample.
    pub sample_size: usize,
    /// Standard deviation of the additive noise, in `[0, 1]` intensity units.
    pub noise_amp: f64,
    /// A query is matched to its nearest sample only if their squared
    /// distance is at most this; `None` always matches.
    pub match_tol: Option<f64>,
    /// Number of distinct random injection blocks; block `j` of the initial
    /// injection is block `j mod g`. Defaults to the sample size.
    pub injection_blocks: Option<usize>,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("image size {}x{} must be positive", self.width, self.height));
        }
        if self.count == 0 || self.sample_size == 0 || self.sample_size > self.count {
            return bad(format!(
                "need 1 <= sample size ({}) <= image count ({})",
                self.sample_size, self.count
            ));
        }
        if !(self.noise_amp >= 0.0 && self.noise_amp.is_finite()) {
            return bad(format!("noise amplitude must be >= 0, got {}", self.noise_amp));
        }
        if let Some(t) = self.match_tol {
            if !(t >= 0.0) {
                return bad(format!("match tolerance must be >= 0, got {t}"));
            }
        }
        if self.injection_blocks == Some(0) {
            return bad("injection block count must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageMethod {
    Gbt1,
    Gbt2,
    Mtt,
}

impl ImageMethod {
    pub const ALL: [ImageMethod; 3] = [ImageMethod::Gbt1, ImageMethod::Gbt2, ImageMethod::Mtt];

    pub fn as_str(self) -> &'static str {
        match self {
            ImageMethod::Gbt1 => "gbt1",
            ImageMethod::Gbt2 => "gbt2",
            ImageMethod::Mtt => "mtt",
        }
    }
}

/// Per-query result.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRow {
    /// Index of the query in the corpus.
    pub index: usize,
    pub file: PathBuf,
    /// Corpus index of the nearest training sample.
    pub matched_sample: usize,
    pub match_distance: f64,
    pub matched: bool,
    pub in_sample: bool,
    /// Per-pixel MSE for [`ImageMethod::ALL`], in that order.
    pub mse: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageReport {
    pub rows: Vec<ImageRow>,
    /// Corpus indices of the training sample, in block order.
    pub sample: Vec<usize>,
    /// Mean per-image MSE for [`ImageMethod::ALL`].
    pub mean_mse: [f64; 3],
    /// Median per-image MSE for [`ImageMethod::ALL`].
    pub median_mse: [f64; 3],
    pub trace: MttTrace,
    /// Written reconstructions, if an output directory was given.
    pub written: Vec<PathBuf>,
}

impl ImageReport {
    pub fn mean(&self, m: ImageMethod) -> f64 {
        self.mean_mse[m as usize]
    }

    pub fn median(&self, m: ImageMethod) -> f64 {
        self.median_mse[m as usize]
    }

    /// `MTT < GBT2 < GBT1` on the mean MSE.
    pub fn ordering_holds(&self) -> bool {
        let [g1, g2, mtt] = self.mean_mse;
        mtt < g2 && g2 < g1
    }
}

fn list_pgms(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Ingestion {
        files: vec![(dir.to_path_buf(), e.to_string())],
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads the first `count` graymaps of the corpus as `height x width`
/// matrices with intensities in `[0, 1]`.
pub fn load_corpus(spec: &CorpusSpec) -> Result<(Vec<PathBuf>, Vec<Matrix>)> {
    let files = list_pgms(&spec.dir)?;
    if files.len() < spec.count {
        return Err(Error::Ingestion {
            files: vec![(
                spec.dir.clone(),
                format!("found {} PGM images, need {}", files.len(), spec.count),
            )],
        });
    }
    let files: Vec<PathBuf> = files.into_iter().take(spec.count).collect();
    let mut images = Vec::with_capacity(files.len());
    let mut offenders = Vec::new();
    for f in &files {
        match pgm::read_pgm(f) {
            Ok(img) if img.width == spec.width && img.height == spec.height => {
                images.push(img.to_matrix())
            }
            Ok(img) => offenders.push((
                f.clone(),
                format!(
                    "size {}x{}, expected {}x{}",
                    img.width, img.height, spec.width, spec.height
                ),
            )),
            Err(e) => offenders.push((f.clone(), e.to_string())),
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Ingestion { files: offenders });
    }
    Ok((files, images))
}

fn hcat(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks[0].nrows();
    let w = blocks[0].ncols();
    let mut out = Matrix::zeros(rows, w * blocks.len());
    for (j, b) in blocks.iter().enumerate() {
        out.columns_mut(j * w, w).copy_from(*b);
    }
    out
}

/// Compression, denoising and reconstruction of a noisy image corpus.
///
/// The training pair is `X = [X⁽ᵗ¹⁾ … X⁽ᵗˢ⁾]` (clean) and
/// `Y = [X̃⁽ᵗ¹⁾ … X̃⁽ᵗˢ⁾]` (noisy), each image contributing a block of
/// `width` columns. Every corpus image is then used as a query: it is
/// matched to its nearest noisy training sample `α` and reconstructed as
/// `D₁C₁Y⁽ℓ⁾ + D₂C₂Z⁽α⁾`, where `Z⁽α⁾` is block `α` of the fitted `Z`.
/// The single-term baseline uses rank `k1 + k2`; the two-term baseline is
/// the fit at the initial injection.
pub fn image_corpus_experiment(
    spec: &CorpusSpec,
    cfg: &MttConfig,
    out_dir: Option<&Path>,
) -> Result<ImageReport> {
    spec.validate()?;
    cfg.validate()?;
    let (files, clean) = load_corpus(spec)?;
    let (h, w) = (spec.height, spec.width);

    let mut noise_rng = rng_for(derive_seed(cfg.seed, STREAM_IMAGE_NOISE));
    let noisy: Vec<Matrix> = clean
        .iter()
        .map(|x| {
            let n = Matrix::from_fn(h, w, |_, _| StandardNormal.sample(&mut noise_rng));
            x + n * spec.noise_amp
        })
        .collect();

    let mut order: Vec<usize> = (0..spec.count).collect();
    order.shuffle(&mut rng_for(derive_seed(cfg.seed, STREAM_PERMUTATION)));
    let sample: Vec<usize> = order[..spec.sample_size].to_vec();

    let x = hcat(&sample.iter().map(|&i| &clean[i]).collect::<Vec<_>>());
    let y = hcat(&sample.iter().map(|&i| &noisy[i]).collect::<Vec<_>>());

    let g_blocks = spec.injection_blocks.unwrap_or(spec.sample_size);
    let mut inj_rng = rng_for(derive_seed(cfg.seed, STREAM_IMAGE_INJECTION));
    let blocks: Vec<Matrix> = (0..g_blocks)
        .map(|_| super::fill_rows(cfg.q, w, || inj_rng.random::<f64>()))
        .collect();
    let v0 = hcat(
        &(0..spec.sample_size)
            .map(|j| &blocks[j % g_blocks])
            .collect::<Vec<_>>(),
    );

    let k = cfg.k();
    if k > h {
        return Err(Error::InvalidArgument(format!(
            "total budget k1+k2={k} exceeds image height {h}"
        )));
    }
    let gbt1 = transforms::gbt1_fit(&x, &y, k, cfg.pinv_tol)?;
    let (step1, _) = solver::mtt_init_with_injection(&x, &y, v0.clone(), cfg)?;
    let (model, trace) = solver::mtt_fit_with_injection(&x, &y, v0, cfg)?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let pixels = (h * w) as f64;
    let mut rows = Vec::with_capacity(spec.count);
    let mut written = Vec::new();
    for (l, query) in noisy.iter().enumerate() {
        let (j, dist) = sample
            .iter()
            .enumerate()
            .map(|(j, &i)| (j, (&noisy[i] - query).norm_squared()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let matched = spec.match_tol.is_none_or(|t| dist <= t);

        let second_term = |m: &solver::MttModel| -> Result<Matrix> {
            if matched {
                m.second.apply(&m.z.columns(j * w, w).into_owned())
            } else {
                Ok(Matrix::zeros(h, w))
            }
        };
        let recon = [
            gbt1.apply(query)?,
            step1.first.apply(query)? + second_term(&step1)?,
            model.first.apply(query)? + second_term(&model)?,
        ];
        let mut mse = [0.0; 3];
        for (slot, r) in mse.iter_mut().zip(&recon) {
            *slot = (&clean[l] - r).norm_squared() / pixels;
        }
        if let Some(dir) = out_dir {
            for (method, r) in ImageMethod::ALL.iter().zip(&recon) {
                let path = dir.join(format!("recon_{}_{l:03}.pgm", method.as_str()));
                pgm::write_pgm(&path, &Pgm::from_matrix(r))?;
                written.push(path);
            }
        }
        rows.push(ImageRow {
            index: l,
            file: files[l].clone(),
            matched_sample: sample[j],
            match_distance: dist,
            matched,
            in_sample: sample.contains(&l),
            mse,
        });
    }

    let per = |i: usize| rows.iter().map(|r| r.mse[i]).collect::<Vec<_>>();
    let mean_mse = [0, 1, 2].map(|i| stats::mean(&per(i)));
    let median_mse = [0, 1, 2].map(|i| stats::median(&per(i)));
    Ok(ImageReport {
        rows,
        sample,
        mean_mse,
        median_mse,
        trace,
        written,
    })
}

/// Writes `count` synthetic `width x height` graymaps to `dir`.
///
/// Images come in pairs of "subjects": a smooth random pattern of Gaussian
/// blobs, and the same pattern under a horizontal lighting gradient.
pub fn write_synthetic_corpus(
    dir: &Path,
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut rng = rng_for(seed);
    let mut paths = Vec::with_capacity(count);
    let mut base = Matrix::zeros(height, width);
    for i in 0..count {
        if i % 2 == 0 {
            base = synthetic_subject(&mut rng, width, height);
        }
        let img = if i % 2 == 0 {
            base.clone()
        } else {
            Matrix::from_fn(height, width, |r, c| {
                let light = 0.8 + 0.4 * c as f64 / width.max(1) as f64;
                (base[(r, c)] * light).min(1.0)
            })
        };
        let path = dir.join(format!("img_{i:03}.pgm"));
        pgm::write_pgm(&path, &Pgm::from_matrix(&img))?;
        paths.push(path);
    }
    Ok(paths)
}

fn synthetic_subject(rng: &mut impl Rng, width: usize, height: usize) -> Matrix {
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random::<f64>() * height as f64,
                rng.random::<f64>() * width as f64,
                0.12 + 0.2 * rng.random::<f64>(),
                0.3 + 0.7 * rng.random::<f64>(),
            )
        })
        .collect();
    let background = 0.1 + 0.2 * rng.random::<f64>();
    let scale = height.max(width) as f64;
    Matrix::from_fn(height, width, |r, c| {
        let v: f64 = blobs
            .iter()
            .map(|&(cr, cc, s, a)| {
                let d2 = ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)) / (s * scale).powi(2);
                a * (-0.5 * d2).exp()
            })
            .sum();
        (background + v).min(1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dir: &Path, noise: f64) -> CorpusSpec {
        CorpusSpec {
            dir: dir.to_path_buf(),
            width: 8,
            height: 8,
            count: 10,
            sample_size: 10,
            noise_amp: noise,
            match_tol: None,
            injection_blocks: None,
        }
    }

    #[test]
    fn full_rank_without_noise_reconstructs_exactly() {
        let tmp = tempfile::tempdir().unwrap();
        write_synthetic_corpus(tmp.path(), 10, 8, 8, 3).unwrap();
        let cfg = MttConfig { k1: 4, k2: 4, q: 8, max_iter: 5, seed: 1, ..Default::default() };
        let rep = image_corpus_experiment(&spec(tmp.path(), 0.0), &cfg, None).unwrap();
        assert!(rep.mean(ImageMethod::Gbt1) < 1e-20, "{:?}", rep.mean_mse);
        assert!(rep.rows.iter().all(|r| r.in_sample && r.match_distance == 0.0));
    }

    #[test]
    fn report_is_deterministic_and_writes_images() {
        let tmp = tempfile::tempdir().unwrap();
        write_synthetic_corpus(&tmp.path().join("c"), 10, 8, 8, 4).unwrap();
        let mut sp = spec(&tmp.path().join("c"), 1.0);
        sp.sample_size = 5;
        let cfg = MttConfig { k1: 2, k2: 2, q: 8, max_iter: 10, seed: 9, ..Default::default() };
        let out = tmp.path().join("out");
        let a = image_corpus_experiment(&sp, &cfg, Some(&out)).unwrap();
        let b = image_corpus_experiment(&sp, &cfg, None).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.written.len(), 30);
        assert_eq!(pgm::read_pgm(&a.written[0]).unwrap().width, 8);
    }

    #[test]
    fn missing_or_missized_images_are_listed() {
        let tmp = tempfile::tempdir().unwrap();
        let err = image_corpus_experiment(&spec(tmp.path(), 1.0), &MttConfig::default(), None)
            .unwrap_err();
        assert!(matches!(err, Error::Ingestion { .. }));

        write_synthetic_corpus(tmp.path(), 10, 8, 8, 1).unwrap();
        write_synthetic_corpus(&tmp.path().join("x"), 1, 7, 8, 1).unwrap();
        fs::rename(tmp.path().join("x/img_000.pgm"), tmp.path().join("img_004.pgm")).unwrap();
        fs::write(tmp.path().join("img_007.pgm"), b"junk").unwrap();
        match image_corpus_experiment(&spec(tmp.path(), 1.0), &MttConfig::default(), None) {
            Err(Error::Ingestion { files }) => {
                let names: Vec<_> = files.iter().map(|(p, _)| p.file_name().unwrap().to_owned()).collect();
                assert_eq!(names, vec!["img_004.pgm", "img_007.pgm"]);
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }
}
