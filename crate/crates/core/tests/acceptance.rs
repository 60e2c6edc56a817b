//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria run in order inside a single test so timings are not disturbed
//! by other tests. `ACCEPTANCE_ONLY=1,4` restricts the run to a subset; the
//! default runs everything.

mod common;

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::Path;
use std::time::{Duration, Instant};

use common::grad::{batch, check_network, randomize_biases};
use common::oracle::{coarse_image, image_cooc, random_image};
use crossco::attacks::{parse_list, pre_compression_rows, robustness_rows, AttackSpec};
use crossco::features::{assemble_crossconet, cross_cooc, spatial_cooc, NetKind, Offset, Source};
use crossco::harness::corpus::extract_images;
use crossco::harness::jpeg_aware::{pre_compression_sweep, qf_sweep, EVAL_QFS, MISMATCHED_QFS, TRAIN_QFS};
use crossco::harness::report::{clean_rows, CSV_HEADER};
use crossco::harness::robustness::clean_eval;
use crossco::harness::synthetic::{synthesize, write_dataset, SyntheticConfig};
use crossco::harness::train::{save_outcome, train_with, Provenance};
use crossco::harness::*;
use crossco::jpeg::{self, Chroma};
use crossco::models::{build_conet, build_crossconet, network_input, width_scale};
use crossco::nn::{LayerSpec, Network};
use crossco::raster::{channel, ImageFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const ORACLE_IMAGES: usize = 100;
const ORACLE_OFFSETS: [(i32, i32); 5] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 1)];
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
// Criterion 2
const PERF_SIDE: usize = 1024;
const PERF_BUDGET_MS: f64 = 250.0;
/// Single-threaded median measured on the development machine (AVX-512
/// x86-64, opt-level 3).
const PERF_BASELINE_MS: f64 = 7.2;
const PERF_REGRESSION: f64 = 2.0;
// Criterion 3
const GRAD_BUDGET: Duration = Duration::from_secs(60);
// Criterion 4
const OVERFIT_PER_CLASS: usize = 16;
const OVERFIT_MAX_EPOCHS: usize = 200;
const OVERFIT_BATCH: usize = 8;
const OVERFIT_ACCURACY: f64 = 0.95;
const OVERFIT_LOSS: f64 = 0.1;
const OVERFIT_BUDGET: Duration = Duration::from_secs(600);
// Criterion 5
const SEP_TRAIN: usize = 200;
const SEP_TEST: usize = 100;
const SEP_EPOCHS: usize = 40;
const SEP_SEEDS: u64 = 5;
const SEP_REQUIRED: usize = 4;
const SEP_ACCURACY: f64 = 0.90;
// Criterion 6
const JPEG_QF: u8 = 95;
const JPEG_PSNR: f64 = 30.0;
const JPEG_COMPONENT_TOL: i32 = 1;
// Shared
const WIDTH: f64 = 0.25;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    /// Failing a documented benchmark is reported without failing the run.
    gate: bool,
    detail: String,
}

fn selected() -> Option<Vec<usize>> {
    let v = std::env::var("ACCEPTANCE_ONLY").ok()?;
    Some(v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
}

#[test]
fn acceptance() {
    type Criterion = fn() -> (bool, String);
    let all: [(usize, &str, bool, Criterion); 8] = [
        (1, "feature oracle", true, feature_oracle),
        (2, "performance floor", false, performance_floor),
        (3, "gradcheck", true, gradcheck),
        (4, "overfit", true, overfit),
        (5, "synthetic separability", true, separability),
        (6, "jpeg codec", true, jpeg_codec),
        (7, "determinism", true, determinism),
        (8, "table shapes and parameter grids", true, table_shapes),
    ];
    let only = selected();
    let mut lines = Vec::new();
    for (id, name, gate, run) in all {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            println!("criterion {id} ({name}): SKIPPED");
            continue;
        }
        let (pass, detail) = run();
        let line = Line { id, name, pass, gate, detail };
        println!(
            "criterion {} ({}): {}{} - {}",
            line.id,
            line.name,
            if line.pass { "PASS" } else { "FAIL" },
            if line.gate { "" } else { " [benchmark, not gated]" },
            line.detail
        );
        lines.push(line);
    }
    let failed: Vec<usize> = lines.iter().filter(|l| l.gate && !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn feature_oracle() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for i in 0..ORACLE_IMAGES {
        let (w, h) = (rng.gen_range(4..=16), rng.gen_range(4..=16));
        // half the images use few grey levels so cells collect many pairs
        let img = if i % 2 == 0 { random_image(&mut rng, w, h) } else { coarse_image(&mut rng, w, h, 4) };
        for (da, db) in ORACLE_OFFSETS {
            let off = Offset::new(da, db);
            let total = ((h - da.unsigned_abs() as usize) * (w - db.unsigned_abs() as usize)) as u64;
            for band in 0..3 {
                let m = spatial_cooc(&channel(&img, band + 1).unwrap(), off).unwrap();
                if m.counts() != &image_cooc(&img, band, band, da, db)[..] || m.total() != total {
                    mismatches.push(format!("{w}x{h} band {band} offset {da},{db}"));
                }
                cases += 1;
            }
            for (src, a, b) in [(Source::RG, 0, 1), (Source::RB, 0, 2), (Source::GB, 1, 2)] {
                let m = cross_cooc(&img, src, off).unwrap();
                if m.counts() != &image_cooc(&img, a, b, da, db)[..] || m.total() != total {
                    mismatches.push(format!("{w}x{h} {src:?} offset {da},{db}"));
                }
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < ORACLE_BUDGET;
    (
        pass,
        format!(
            "{cases} matrices over {ORACLE_IMAGES} images x {} offsets, {} mismatches, {:.2} s (budget {} s)",
            ORACLE_OFFSETS.len(),
            mismatches.len(),
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

fn performance_floor() -> (bool, String) {
    let img = synthesize(&SyntheticConfig { width: PERF_SIDE, height: PERF_SIDE, ..Default::default() }, GAN, 7, 0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut times: Vec<f64> = pool.install(|| {
        (0..5)
            .map(|_| {
                let t = Instant::now();
                let f = assemble_crossconet(&img, Offset::default(), Offset::default()).unwrap();
                std::hint::black_box(f);
                t.elapsed().as_secs_f64() * 1e3
            })
            .collect()
    });
    times.sort_by(f64::total_cmp);
    let median = times[2];
    let limit = PERF_BUDGET_MS.min(PERF_BASELINE_MS * PERF_REGRESSION);
    (
        median < limit,
        format!(
            "{PERF_SIDE}x{PERF_SIDE} 6-plane extraction, median of 5 single-threaded runs {median:.1} ms \
             (budget {PERF_BUDGET_MS} ms, baseline {PERF_BASELINE_MS} ms, regression limit {PERF_REGRESSION}x)"
        ),
    )
}

fn gradcheck() -> (bool, String) {
    use LayerSpec::*;
    let start = Instant::now();
    let head = [Flatten, Dense { units: 1 }, Sigmoid];
    let stacks: Vec<(Vec<usize>, Vec<LayerSpec>)> = vec![
        (vec![2, 5, 5], [&[Conv2d { filters: 2, kernel: 3 }][..], &head].concat()),
        (vec![2, 6, 6], [&[Conv2d { filters: 3, kernel: 5 }, Relu][..], &head].concat()),
        (vec![1, 6, 6], [&[Conv2d { filters: 2, kernel: 3 }, MaxPool2x2][..], &head].concat()),
        (vec![12], vec![Dense { units: 5 }, Relu, Dense { units: 1 }, Sigmoid]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut straddled = 0;
    let mut nets: Vec<(String, Network<f64>, Vec<usize>)> = stacks
        .into_iter()
        .map(|(shape, specs)| (format!("{specs:?}"), Network::new(&shape, &specs, 9).unwrap(), shape))
        .collect();
    for spec in [build_conet(3), build_crossconet(3)] {
        let spec = width_scale(&spec, 0.1).unwrap();
        let shape = vec![spec.input_planes, 16, 16];
        nets.push((format!("{}-plane detector at width 0.1", spec.input_planes), spec.instantiate_with_size(16).unwrap(), shape));
    }
    for (name, mut net, shape) in nets {
        randomize_biases(&mut net, &mut rng);
        let (xs, ys) = batch(&mut rng, &shape, 2);
        let c = check_network(net, &xs, &ys);
        worst = worst.max(c.worst).max(c.worst_straddled);
        checked += c.checked;
        straddled += c.straddled;
        if let Err(e) = c.verdict() {
            failures.push(format!("{name}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < GRAD_BUDGET;
    (
        pass,
        format!(
            "{checked} parameters at h=1e-3 plus {straddled} kink-straddling at h=1e-6, max relative error {worst:.2e} \
             (tolerance 1e-4), {:.1} s (budget {} s){}",
            elapsed.as_secs_f64(),
            GRAD_BUDGET.as_secs(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn images(config: &SyntheticConfig, data_seed: u64, indices: std::ops::Range<usize>) -> InMemory {
    let mut imgs = Vec::new();
    let mut labels = Vec::new();
    for label in [REAL, GAN] {
        for i in indices.clone() {
            imgs.push(synthesize(config, label, data_seed, i as u64));
            labels.push(label);
        }
    }
    InMemory::new(imgs, labels).unwrap()
}

fn features(src: &InMemory) -> FeatureSet {
    let feats = extract_images(src.images(), NetKind::Crossconet, Offset::default(), Offset::default()).unwrap();
    let samples = feats
        .into_iter()
        .zip(src.labels())
        .enumerate()
        .map(|(i, (features, label))| Sample { name: format!("{i}"), label, features })
        .collect();
    FeatureSet::new(samples).unwrap()
}

/// Mean binary cross-entropy of `model` on `set`, from its predictions.
fn bce(model: &Network<f32>, set: &FeatureSet) -> f64 {
    let planes = model.input_shape()[0];
    let inputs = set.inputs(planes).unwrap();
    let n = inputs.len() as f64;
    inputs
        .iter()
        .zip(set.labels())
        .map(|(x, y)| {
            let p = (model.predict(&network_input(x)).unwrap() as f64).clamp(1e-7, 1.0 - 1e-7);
            if y == GAN {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

fn overfit() -> (bool, String) {
    let start = Instant::now();
    let set = features(&images(&SyntheticConfig::default(), 31, 0..OVERFIT_PER_CLASS));
    let config = TrainConfig {
        learning_rate: 0.01,
        momentum: 0.9,
        batch_size: OVERFIT_BATCH,
        epochs: OVERFIT_MAX_EPOCHS,
        width_factor: WIDTH,
        seed: 1,
        ..Default::default()
    };
    // the running epoch loss trails the end-of-epoch loss while it falls
    let outcome = train_with(&set, None, &config, |e| {
        if e.mean_loss < OVERFIT_LOSS / 2.0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    let acc = evaluate(&outcome.model, &set).unwrap().accuracy;
    let loss = bce(&outcome.model, &set);
    let elapsed = start.elapsed();
    let pass = acc >= OVERFIT_ACCURACY && loss < OVERFIT_LOSS && elapsed < OVERFIT_BUDGET;
    (
        pass,
        format!(
            "{} images, {} epochs, train accuracy {:.2}% (>= {}%), final loss {loss:.4} (< {OVERFIT_LOSS}), {:.0} s (budget {} s)",
            set.len(),
            outcome.log.len(),
            acc * 100.0,
            OVERFIT_ACCURACY * 100.0,
            elapsed.as_secs_f64(),
            OVERFIT_BUDGET.as_secs()
        ),
    )
}

fn separability() -> (bool, String) {
    let attack = parse_list("gamma:1.2").unwrap();
    let mut holds = 0;
    let mut misses = 0;
    let mut clean_ok = true;
    let mut per_seed = Vec::new();
    for seed in 0..SEP_SEEDS {
        let start = Instant::now();
        let data_seed = 5000 + seed;
        let config = SyntheticConfig::default();
        let train_set = features(&images(&config, data_seed, 0..SEP_TRAIN));
        let test_images = images(&config, data_seed, SEP_TRAIN..SEP_TRAIN + SEP_TEST);
        let base = TrainConfig { width_factor: WIDTH, epochs: SEP_EPOCHS, seed, ..Default::default() };
        let cross = train(&train_set, None, &TrainConfig { net: NetKind::Crossconet, ..base.clone() });
        let co = train(&train_set, None, &TrainConfig { net: NetKind::Conet, ..base });
        drop(train_set);
        // an aborted run fails the seed and decides the verdict
        let (cross, co) = match (cross, co) {
            (Ok(cross), Ok(co)) => (cross.model, co.model),
            (cross, co) => {
                let why = |r: &Result<_, crossco::Error>, name: &str| r.as_ref().err().map(|e| format!("{name} training failed: {e}"));
                let reasons: Vec<String> = [why(&cross, "Cross-Co-Net"), why(&co, "Co-Net")].into_iter().flatten().collect();
                misses += 1;
                clean_ok = false;
                per_seed.push(format!("seed {seed}: {} ({:.0} s)", reasons.join("; "), start.elapsed().as_secs_f64()));
                println!("  separability {}", per_seed.last().unwrap());
                break;
            }
        };
        let models = [NamedModel::new("Cross-Co-Net", &cross), NamedModel::new("Co-Net", &co)];
        let clean = clean_eval(&models, &test_images, Offset::default(), Offset::default()).unwrap();
        let gamma =
            robustness_eval(&models, &test_images, &attack, Offset::default(), Offset::default(), "synthetic").unwrap();
        let (cross_gamma, co_gamma) = (gamma.rows[0].accuracy, gamma.rows[1].accuracy);
        let ordered = cross_gamma >= co_gamma;
        if ordered {
            holds += 1;
        } else {
            misses += 1;
        }
        clean_ok &= clean[0].accuracy >= SEP_ACCURACY;
        per_seed.push(format!(
            "seed {seed}: clean {:.2}/{:.2}, gamma 1.2 {:.2}/{:.2} ({:.0} s)",
            clean[0].accuracy * 100.0,
            clean[1].accuracy * 100.0,
            cross_gamma * 100.0,
            co_gamma * 100.0,
            start.elapsed().as_secs_f64()
        ));
        println!("  separability {}", per_seed.last().unwrap());
        // clean accuracy is required on every seed, so only a failing verdict can stop early
        if !clean_ok || misses > SEP_SEEDS as usize - SEP_REQUIRED {
            break;
        }
    }
    let pass = clean_ok && holds >= SEP_REQUIRED;
    (
        pass,
        format!(
            "Cross-Co-Net clean accuracy >= {}% on every seed run: {clean_ok}; Cross >= Co under gamma 1.2 on {holds} of {} seeds run \
             (need {SEP_REQUIRED} of {SEP_SEEDS}); accuracies Cross/Co in %: {}",
            SEP_ACCURACY * 100.0,
            holds + misses,
            per_seed.join("; ")
        ),
    )
}

/// Annex K luminance and chrominance tables in natural (row-major) order.
const ANNEX_K_LUMA: [u8; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56, 14, 17, 22, 29, 51,
    87, 80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];
const ANNEX_K_CHROMA: [u8; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99,
];

fn reference_components(bytes: &[u8]) -> Vec<u8> {
    use zune_core::bytestream::ZCursor;
    use zune_core::colorspace::ColorSpace;
    use zune_core::options::DecoderOptions;
    let opts = DecoderOptions::default().jpeg_set_out_colorspace(ColorSpace::YCbCr);
    zune_jpeg::JpegDecoder::new_with_options(ZCursor::new(bytes), opts).decode().unwrap()
}

fn jpeg_codec() -> (bool, String) {
    let img = synthesize(&SyntheticConfig::default(), REAL, 1, 0);
    let bytes = jpeg::encode(&img, JPEG_QF, Chroma::Full).unwrap();
    let ours = jpeg::decode(&bytes).unwrap();
    let psnr = jpeg::psnr(&img, &ours).unwrap();
    let comps = jpeg::decode_components(&bytes).unwrap();
    let n = comps.width * comps.height;
    let ours_ycc: Vec<u8> = (0..n).flat_map(|i| comps.planes.iter().map(move |p| p[i])).collect();
    let theirs_ycc = reference_components(&bytes);
    let comp_diff = ours_ycc.iter().zip(&theirs_ycc).map(|(&a, &b)| (a as i32 - b as i32).abs()).max().unwrap_or(i32::MAX);
    let theirs_rgb = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg).unwrap().to_rgb8();
    let rgb_diff = ours.data().iter().zip(theirs_rgb.as_raw()).map(|(&a, &b)| (a as i32 - b as i32).abs()).max().unwrap();
    let tables = jpeg::quality_scale(50);
    let tables_ok = tables.luminance == ANNEX_K_LUMA && tables.chrominance == ANNEX_K_CHROMA;
    let pass = psnr >= JPEG_PSNR && ours_ycc.len() == theirs_ycc.len() && comp_diff <= JPEG_COMPONENT_TOL && tables_ok;
    (
        pass,
        format!(
            "QF {JPEG_QF} PSNR {psnr:.2} dB (>= {JPEG_PSNR}); reference decoder agreement {comp_diff} per Y/Cb/Cr sample \
             (<= {JPEG_COMPONENT_TOL}), {rgb_diff} per RGB sample after colour conversion; quality 50 tables equal Annex K: {tables_ok}"
        ),
    )
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Synthesize, extract, train, attack, report; every artifact lands in `root/out`.
fn pipeline(root: &Path) {
    let data = root.join("data");
    let out = root.join("out");
    std::fs::create_dir_all(&out).unwrap();
    write_dataset(&data, &SyntheticConfig { width: 48, height: 48, ..Default::default() }, 6, 11, ImageFormat::Png).unwrap();
    let manifest = ingest(&data).unwrap();
    extract_corpus(&manifest, Offset::default(), Offset::default(), NetKind::Crossconet, out.join("feats")).unwrap();
    let set = load_corpus(out.join("feats")).unwrap();
    let config = TrainConfig { width_factor: 0.1, batch_size: 4, epochs: 2, seed: 3, ..Default::default() };
    let outcome = train(&set, Some(&set), &config).unwrap();
    save_outcome(&outcome, &Provenance::new(&config, &outcome, set.len()), out.join("model.ccnw")).unwrap();
    let models = [NamedModel::new("Cross-Co-Net", &outcome.model)];
    let attacks = parse_list("median:3,noise:2.0,resize:0.8,rotate:10").unwrap();
    let report = robustness_eval(&models, &manifest, &attacks, Offset::default(), Offset::default(), "synthetic").unwrap();
    emit_report(&report, ReportFormat::Csv, out.join("report.csv")).unwrap();
    emit_report(&report, ReportFormat::Json, out.join("report.json")).unwrap();
}

fn determinism() -> (bool, String) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (sa, sb) = (snapshot(&a.path().join("out")), snapshot(&b.path().join("out")));
    let differing: Vec<&String> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
    let pass = differing.is_empty() && sa.len() == sb.len() && ["model.ccnw", "report.csv", "report.json"].iter().all(|k| sa.contains_key(*k));
    (
        pass,
        format!("two runs wrote {} artifacts (corpus, checkpoint, sidecars, reports); {} differ", sa.len(), differing.len()),
    )
}

fn labels(specs: &[AttackSpec]) -> Vec<(String, String)> {
    specs.iter().map(|a| (a.operation().to_string(), a.parameter())).collect()
}

fn owned(rows: &[(&str, &str)]) -> Vec<(String, String)> {
    rows.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn table_shapes() -> (bool, String) {
    let mut problems = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            problems.push(what.to_string());
        }
    };

    // reference robustness grid; the crop row names its window instead of "-"
    let golden = owned(&[
        ("Median filter", "3 x 3"),
        ("Median filter", "5 x 5"),
        ("Gaussian noise", "0.5"),
        ("Gaussian noise", "0.8"),
        ("Gaussian noise", "2"),
        ("AHE", "-"),
        ("Gamma correction", "0.9"),
        ("Gamma correction", "0.8"),
        ("Gamma correction", "1.2"),
        ("Average blurring", "3 x 3"),
        ("Average blurring", "5 x 5"),
        ("Resizing", "0.9"),
        ("Resizing", "0.8"),
        ("Resizing", "0.5"),
        ("Zooming", "1.1"),
        ("Zooming", "1.2"),
        ("Zooming", "1.9"),
        ("Rotation", "5"),
        ("Rotation", "10"),
        ("Rotation", "45"),
        ("Cropping", "880 x 880"),
        ("Blurring followed by sharpening", "-"),
    ]);
    check(labels(&robustness_rows()) == golden, "robustness rows differ from the golden list");
    check(robustness_rows().contains(&AttackSpec::Clahe { clip: 1.0, tiles: crossco::attacks::DEFAULT_TILES }), "AHE clip is not 1.0");
    check(TRAIN_QFS == [75, 80, 85, 90, 95], "training quality factors");
    check(MISMATCHED_QFS == [73, 77, 83, 87, 93, 97], "mismatched quality factors");
    check(EVAL_QFS == [73, 75, 77, 80, 83, 85, 87, 90, 93, 95, 97], "evaluation quality factors");
    let pre = owned(&[("Median filter", "5 x 5"), ("Resizing", "0.8"), ("Gaussian noise", "2"), ("Zooming", "1.9"), ("AHE", "-")]);
    check(labels(&pre_compression_rows()) == pre, "pre-compression operators");

    // emitted shapes, with two tiny detectors on a two-image corpus
    let spec = |kind| width_scale(&crossco::models::build_for(kind, 5), 0.1).unwrap();
    let cross: Network<f32> = spec(NetKind::Crossconet).instantiate().unwrap();
    let co: Network<f32> = spec(NetKind::Conet).instantiate().unwrap();
    let models = [NamedModel::new("Cross-Co-Net", &cross), NamedModel::new("Co-Net", &co)];
    let (tau, tau_p) = (Offset::default(), Offset::default());

    // the crop row needs images of at least 880 x 880
    let big = images(&SyntheticConfig { width: 896, height: 896, ..Default::default() }, 8, 0..1);
    let mut robustness = Report::new(Vec::new());
    for dataset in ["dataset-a", "dataset-b"] {
        robustness.extend(robustness_eval(&models, &big, &robustness_rows(), tau, tau_p, dataset).unwrap());
    }
    check(robustness.rows.len() == 22 * 2 * 2, "robustness report row count");
    let first: Vec<(String, String)> =
        robustness.rows.iter().take(44).step_by(2).map(|r| (r.operation.clone(), r.parameter.clone())).collect();
    check(first == golden, "robustness report row order");

    let small = images(&SyntheticConfig { width: 40, height: 40, ..Default::default() }, 8, 0..1);
    let clean = clean_eval(&models, &small, tau, tau_p).unwrap();
    let mut t1 = Vec::new();
    for dataset in ["dataset-a", "dataset-b"] {
        for (m, r) in models.iter().zip(&clean) {
            t1.push((dataset, m.name.as_str(), r.accuracy));
        }
    }
    let clean_report = clean_rows(&t1);
    check(clean_report.rows.len() == 4 && clean_report.rows.iter().all(|r| r.operation == "Clean" && r.parameter == "-"), "clean table");

    let jpeg_cfg = JpegAwareConfig::default();
    let ja = [NamedModel::new("JPEG-aware Cross-Co-Net", &cross)];
    let qf_report = qf_sweep(&ja, &small, &jpeg_cfg, tau, tau_p, "dataset-a").unwrap();
    let t3: Vec<(String, String)> = qf_report.rows.iter().map(|r| (r.operation.clone(), r.parameter.clone())).collect();
    let want3: Vec<(String, String)> = EVAL_QFS.iter().map(|q| ("JPEG compression".to_string(), q.to_string())).collect();
    check(t3 == want3, "quality-factor table rows");
    let processed = pre_compression_sweep(&ja, &small, &jpeg_cfg, tau, tau_p, "dataset-a").unwrap();
    check(processed.rows.len() == EVAL_QFS.len() * 5, "processed-then-compressed row count");
    check(
        processed.rows[5].operation == "Median filter + JPEG compression" && processed.rows[5].parameter == "5 x 5; QF 75",
        "processed-then-compressed row labels",
    );
    let csv = robustness.to_csv().unwrap();
    check(csv.lines().next() == Some(CSV_HEADER.join(",").as_str()), "csv header");
    check(csv.lines().count() == 1 + robustness.rows.len(), "csv line count");

    let pass = problems.is_empty();
    (
        pass,
        format!(
            "22 robustness rows, 5 training / 6 mismatched / 11 evaluation quality factors and 5 pre-compression operators \
             match the reference grids; emitted {} clean, {} robustness, {} quality-factor and {} processed-then-compressed rows. \
             Reference accuracies need full-size face corpora and full-width training and are not reproduced here{}",
            clean_report.rows.len(),
            robustness.rows.len(),
            qf_report.rows.len(),
            processed.rows.len(),
            if pass { String::new() } else { format!("; problems: {}", problems.join(", ")) }
        ),
    )
}
