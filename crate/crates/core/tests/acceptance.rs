//! Exit criteria for the artifact. Each test prints one PASS/FAIL line; run
//! with `--nocapture` to see them.

mod common;

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use hsreid_core::cube::{
    integrate_to_rgb, read_cube, uniform_wavelengths, write_cube, DataType, HyperCube, Interleave,
};
use hsreid_core::pipeline::{run_images, run_manifest, LoadedImage, Mode, PipelineConfig};
use hsreid_core::reid::{cmc, DatasetManifest, DistanceMatrix, ManifestEntry, Role};
use hsreid_core::segment::{default_lambda, segment, segment_cube, LatticeGraph, SegmentParams};
use hsreid_core::spectral::{spectral_angle, SpectralSignature};
use hsreid_core::synth::{generate_dataset, generate_scenes, SignatureMode, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let within = elapsed < limit;
    let status = if ok && within { "PASS" } else { "FAIL" };
    println!(
        "[{status}] {id} {name}: {detail} ({:.2?} / limit {:.0?})",
        elapsed, limit
    );
    assert!(ok, "{id} {name} failed: {detail}");
    assert!(within, "{id} {name} exceeded its time limit: {elapsed:?} >= {limit:?}");
}

#[test]
fn c01_metric_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut worst_identity = 0.0f64;
    let mut worst_scale = 0.0f64;
    let mut ok = true;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..325).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..325).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c = rng.gen_range(0.01..100.0);
        let sa = SpectralSignature::new(a.clone()).unwrap();
        let sb = SpectralSignature::new(b).unwrap();
        let sca = SpectralSignature::new(a.iter().map(|v| v * c).collect()).unwrap();
        let ab = spectral_angle(&sa, &sb).unwrap();
        ok &= ab == spectral_angle(&sb, &sa).unwrap();
        ok &= (0.0..=FRAC_PI_2).contains(&ab);
        worst_identity = worst_identity.max(spectral_angle(&sa, &sa).unwrap().abs());
        worst_scale = worst_scale.max((spectral_angle(&sca, &sb).unwrap() - ab).abs());
    }
    ok &= worst_identity <= 1e-12 && worst_scale <= 1e-12;
    report(
        "C1",
        "metric suite",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("1000 pairs, B=325, max |θ(a,a)| = {worst_identity:.1e}, max scale drift = {worst_scale:.1e}"),
    );
}

#[test]
fn c02_segmentation_partition_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let start = Instant::now();
    let mut failures = Vec::new();
    for cube_idx in 0..20 {
        let cube = common::random_cube(&mut rng, 64, 64, 16);
        for k in [1, 16, 64] {
            let seg = segment_cube(&cube, &SegmentParams::new(k)).unwrap();
            let labels_ok = seg.map.labels().len() == 64 * 64 && seg.map.labels().iter().all(|&l| (l as usize) < k);
            if !(labels_ok && seg.map.k() == k && seg.map.connected_components() == k) {
                failures.push((cube_idx, k, seg.map.k(), seg.map.connected_components()));
            }
        }
    }
    report(
        "C2",
        "segmentation partition",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        &format!("20 cubes 64x64x16 x K in {{1,16,64}}, failures {failures:?}"),
    );
}

#[test]
fn c03_greedy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let start = Instant::now();
    let shapes = [(1, 5), (1, 8), (1, 13), (2, 2), (2, 3), (2, 4), (3, 3)];
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (h, w) = shapes[rng.gen_range(0..shapes.len())];
        assert!(LatticeGraph::edge_count(h, w) <= 12);
        let weights = (0..LatticeGraph::edge_count(h, w))
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let graph = LatticeGraph::from_weights(h, w, weights).unwrap();
        let k = rng.gen_range(1..=h * w);
        let lambda = default_lambda(&graph) * rng.gen_range(0.0..4.0);
        let (_, trace) = segment(&graph, k, lambda).unwrap();
        let outcomes = common::greedy_outcomes(&graph, k, lambda, 1e-12);
        let gap = outcomes
            .iter()
            .map(|v| (trace.objective - v).abs())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(gap);
    }

    // 2x2 cube: identical spectra down each column, 1.2 rad across
    let left = [1.0, 0.2, 0.1];
    let right = [0.1, 0.3, 1.0];
    let cube = HyperCube::from_fn(2, 2, vec![450.0, 550.0, 650.0], |_, c| {
        if c == 0 {
            left.to_vec()
        } else {
            right.to_vec()
        }
    })
    .unwrap();
    let across = spectral_angle(
        &SpectralSignature::new(left.to_vec()).unwrap(),
        &SpectralSignature::new(right.to_vec()).unwrap(),
    )
    .unwrap();
    let seg = segment_cube(&cube, &SegmentParams::new(2)).unwrap();
    let graph = hsreid_core::segment::build_graph(&cube, seg.sigma).unwrap();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in 0u32..16 {
        let chosen: Vec<usize> = (0..4).filter(|i| subset & (1 << i) != 0).collect();
        let comps = common::components(&graph, &chosen);
        if comps.iter().max().unwrap() + 1 != 2 {
            continue;
        }
        let value = common::objective(&graph, &chosen, seg.lambda);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, chosen));
        }
    }
    let (best_value, best_edges) = best.unwrap();
    let mut greedy_edges: Vec<usize> = seg.trace.edges().collect();
    greedy_edges.sort_unstable();
    let column_split = seg.map.labels() == [0, 1, 0, 1];
    let exhaustive_ok = greedy_edges == best_edges && (seg.trace.objective - best_value).abs() < 1e-9;

    report(
        "C3",
        "greedy oracle",
        worst <= 1e-9 && across >= 1.0 && column_split && exhaustive_ok,
        start.elapsed(),
        Duration::from_secs(10),
        &format!(
            "50 graphs, max |lazy - rescan| = {worst:.1e}; 2x2 column cube (θ = {across:.3}) edges {greedy_edges:?} vs exhaustive {best_edges:?}"
        ),
    );
}

#[test]
fn c04_boundary_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let start = Instant::now();
    let mut misses = Vec::new();
    for layout in 0..10 {
        let regions = rng.gen_range(2..=6);
        let (cube, truth) = common::piecewise_constant_scene(&mut rng, 40, 40, 16, regions);
        let seg = segment_cube(&cube, &SegmentParams::new(truth.k())).unwrap();
        if seg.map != truth {
            misses.push(layout);
        }
    }
    report(
        "C4",
        "boundary recovery",
        misses.is_empty(),
        start.elapsed(),
        Duration::from_secs(30),
        &format!("10 piecewise-constant 40x40x16 layouts, mismatched layouts {misses:?}"),
    );
}

struct Case {
    matrix: DistanceMatrix,
    manifest: DatasetManifest,
    rows: Vec<Vec<f64>>,
    gallery_ids: Vec<String>,
    gallery_people: Vec<String>,
    probe_people: Vec<String>,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n_gallery = rng.gen_range(1..=20);
    let n_probe = rng.gen_range(1..=20);
    // sometimes several gallery images share a person
    let people = if rng.gen_bool(0.3) {
        rng.gen_range(1..=n_gallery)
    } else {
        n_gallery
    };
    let gallery_ids: Vec<String> = (0..n_gallery)
        .map(|j| format!("g{:02}", rng.gen_range(0..100) * 100 + j))
        .collect();
    let gallery_people: Vec<String> = (0..n_gallery)
        .map(|j| format!("p{}", if j < people { j } else { rng.gen_range(0..people) }))
        .collect();
    let probe_ids: Vec<String> = (0..n_probe).map(|i| format!("q{i:02}")).collect();
    let probe_people: Vec<String> = (0..n_probe).map(|_| format!("p{}", rng.gen_range(0..people))).collect();
    let coarse = rng.gen_bool(0.5);
    let rows: Vec<Vec<f64>> = (0..n_probe)
        .map(|_| {
            (0..n_gallery)
                .map(|_| {
                    if coarse {
                        rng.gen_range(0..5) as f64 * 0.25
                    } else {
                        rng.gen_range(0.0..FRAC_PI_2)
                    }
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for (id, p) in gallery_ids.iter().zip(&gallery_people) {
        entries.push(ManifestEntry {
            image_id: id.clone(),
            person_id: p.clone(),
            role: Role::Gallery,
            cube: "x.hdr".into(),
            raster: None,
            mask: "x.pgm".into(),
        });
    }
    for (id, p) in probe_ids.iter().zip(&probe_people) {
        entries.push(ManifestEntry {
            image_id: id.clone(),
            person_id: p.clone(),
            role: Role::Probe,
            cube: "x.hdr".into(),
            raster: None,
            mask: "x.pgm".into(),
        });
    }
    let manifest = DatasetManifest::new(entries).unwrap();
    let matrix = DistanceMatrix::new(probe_ids, gallery_ids.clone(), rows.concat()).unwrap();
    Case {
        matrix,
        manifest,
        rows,
        gallery_ids,
        gallery_people,
        probe_people,
    }
}

#[test]
fn c05_cmc_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let start = Instant::now();
    let mut ok = true;
    let mut ties = 0;
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let curve = cmc(&case.matrix, &case.manifest).unwrap();
        let oracle = common::brute_force_cmc(&case.rows, &case.gallery_ids, &case.gallery_people, &case.probe_people);
        ties += usize::from(case.rows.iter().any(|r| (1..r.len()).any(|j| r[..j].contains(&r[j]))));
        ok &= curve.rates() == oracle.as_slice();
        ok &= *curve.rates().last().unwrap() == 1.0;
        ok &= curve.rates().windows(2).all(|w| w[0] <= w[1]);
    }
    report(
        "C5",
        "CMC oracle",
        ok && ties > 0,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("100 matrices up to 20x20 ({ties} with tied distances), exact match with brute force"),
    );
}

#[test]
fn c06_ranking_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let start = Instant::now();
    let mut ok = true;
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let warped = case.matrix.map(|x| x * x * x + x).unwrap();
        ok &= cmc(&case.matrix, &case.manifest).unwrap() == cmc(&warped, &case.manifest).unwrap();
    }
    report(
        "C6",
        "ranking invariance",
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        "x -> x^3 + x on 100 matrices leaves every CMC curve bit-identical",
    );
}

#[test]
fn c07_end_to_end_metamer_reproduction() {
    let start = Instant::now();
    let spec = SyntheticSpec {
        persons: 15,
        wavelengths: uniform_wavelengths(400.0, 1000.0, 64),
        gain_range: (0.7, 1.3),
        noise: 0.005,
        mode: SignatureMode::Metamer { min_angle: 0.15 },
        seed: 7,
        ..SyntheticSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (manifest, manifest_path) = generate_dataset(&spec, dir.path()).unwrap();
    assert_eq!(manifest.gallery().count(), 15);

    // skins really are RGB metamers
    let scenes = generate_scenes(&spec).unwrap();
    let rgb_of = |s: &SpectralSignature| {
        let cube = HyperCube::new(1, 1, spec.wavelengths.clone(), s.values().to_vec()).unwrap();
        integrate_to_rgb(&cube, &spec.windows).unwrap().data().to_vec()
    };
    let reference = rgb_of(&scenes.skin[0]);
    let metamers = scenes.skin.iter().all(|s| {
        rgb_of(s)
            .iter()
            .zip(&reference)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()))
    });

    let config = PipelineConfig::default();
    let hyper = run_manifest(&manifest_path, Mode::Hyper, &config).unwrap();
    let rgb = run_manifest(&manifest_path, Mode::Rgb, &config).unwrap();
    let (h1, r1) = (hyper.curve.rank1(), rgb.curve.rank1());
    let closed = hyper.curve.rates().last() == Some(&1.0) && rgb.curve.rates().last() == Some(&1.0);
    report(
        "C7",
        "end-to-end hyperspectral vs RGB",
        metamers && closed && h1 == 1.0 && r1 <= 0.2 && h1 - r1 >= 0.2,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "N=15, 64 bands, gain [0.7,1.3], noise 0.005: hyper rank-1 {}/15, rgb rank-1 {}/15",
            (h1 * 15.0).round(),
            (r1 * 15.0).round()
        ),
    );
}

#[test]
fn c08_pipeline_illumination_invariance() {
    let start = Instant::now();
    let spec = SyntheticSpec {
        persons: 6,
        seed: 8,
        ..SyntheticSpec::default()
    };
    let scenes = generate_scenes(&spec).unwrap();
    let images: Vec<LoadedImage> = scenes.images.iter().map(LoadedImage::from).collect();
    let config = PipelineConfig::default();
    let base = run_images(&images, &scenes.manifest, Mode::Hyper, &config).unwrap();
    let mut worst = 0.0f64;
    for gain in [0.5, 2.0] {
        let relit: Vec<LoadedImage> = images
            .iter()
            .map(|img| {
                let mut img = img.clone();
                if img.role == Role::Probe {
                    img.cube = img.cube.scaled(gain).unwrap();
                }
                img
            })
            .collect();
        let out = run_images(&relit, &scenes.manifest, Mode::Hyper, &config).unwrap();
        for (a, b) in base.matrix.values().iter().zip(out.matrix.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    report(
        "C8",
        "pipeline illumination invariance",
        worst <= 1e-9,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("probe gain in {{0.5, 2.0}}, max distance change {worst:.1e}"),
    );
}

#[test]
fn c09_io_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (hdr, img) = (dir.path().join("c.hdr"), dir.path().join("c.img"));
    let mut ok = true;
    let mut combos = 0;
    for _ in 0..20 {
        let (h, w, b) = (rng.gen_range(1..12), rng.gen_range(1..12), rng.gen_range(1..24));
        let wl = uniform_wavelengths(400.0, 1000.0, b);
        let f64_values: Vec<f64> = (0..h * w * b).map(|_| rng.gen_range(0.0..2.0)).collect();
        let f32_values: Vec<f64> = f64_values.iter().map(|&v| v as f32 as f64).collect();
        for (data_type, values) in [(DataType::Float32, &f32_values), (DataType::Float64, &f64_values)] {
            let cube = HyperCube::new(h, w, wl.clone(), values.clone()).unwrap();
            for interleave in Interleave::ALL {
                write_cube(&cube, &hdr, &img, interleave, data_type).unwrap();
                let back = read_cube(&hdr, &img).unwrap();
                ok &= back
                    .data()
                    .iter()
                    .zip(cube.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                ok &= back == cube;
                combos += 1;
            }
        }
    }
    report(
        "C9",
        "I/O round trip",
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("20 cubes, {combos} interleave/type combinations bit-exact"),
    );
}

#[test]
fn c10_performance_floor() {
    let spec = SyntheticSpec {
        height: 256,
        width: 256,
        patch: (48, 40),
        persons: 2,
        clutter: 6,
        seed: 10,
        ..SyntheticSpec::default()
    };
    let scenes = generate_scenes(&spec).unwrap();
    let cube = &scenes.images[0].cube;
    assert_eq!((cube.height(), cube.width(), cube.bands()), (256, 256, 64));
    let start = Instant::now();
    let seg = segment_cube(cube, &SegmentParams::new(200)).unwrap();
    let elapsed = start.elapsed();
    report(
        "C10",
        "performance floor",
        seg.map.k() == 200 && seg.map.is_connected_partition(),
        elapsed,
        Duration::from_secs(10),
        "256x256x64 synthetic cube into K=200 superpixels",
    );
}
