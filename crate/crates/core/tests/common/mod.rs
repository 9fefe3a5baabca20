//! Reference implementations used as test oracles. Nothing here calls into
//! the library's segmentation or ranking code paths.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use hsreid_core::cube::HyperCube;
use hsreid_core::segment::LatticeGraph;
use hsreid_core::SuperpixelMap;
use rand::Rng;

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Component id per vertex of the subgraph holding only `selected` edges (BFS).
pub fn components(graph: &LatticeGraph, selected: &[usize]) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for &i in selected {
        let e = graph.edges()[i];
        adj[e.a as usize].push(e.b as usize);
        adj[e.b as usize].push(e.a as usize);
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = next;
                    queue.push_back(u);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Entropy rate plus λ times the balancing term, computed from the explicit
/// transition matrix of the selected subgraph.
pub fn objective(graph: &LatticeGraph, selected: &[usize], lambda: f64) -> f64 {
    let n = graph.vertex_count();
    let mut w = vec![vec![0.0; n]; n];
    for (e, &wt) in graph.edges().iter().zip(graph.weights()) {
        w[e.a as usize][e.b as usize] = wt;
        w[e.b as usize][e.a as usize] = wt;
    }
    let degree: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let total: f64 = degree.iter().sum();

    let mut chosen = vec![vec![false; n]; n];
    for &i in selected {
        let e = graph.edges()[i];
        chosen[e.a as usize][e.b as usize] = true;
        chosen[e.b as usize][e.a as usize] = true;
    }

    let mut entropy = 0.0;
    if total > 0.0 {
        for i in 0..n {
            if degree[i] == 0.0 {
                continue;
            }
            let mut row = vec![0.0; n];
            for j in 0..n {
                if chosen[i][j] {
                    row[j] = w[i][j] / degree[i];
                }
            }
            row[i] = 1.0 - row.iter().sum::<f64>();
            let mu = degree[i] / total;
            entropy -= mu * row.iter().map(|&p| xlogx(p)).sum::<f64>();
        }
    }

    let comp = components(graph, selected);
    let count = comp.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    comp.iter().for_each(|&c| sizes[c] += 1);
    let size_entropy: f64 = -sizes.iter().map(|&s| xlogx(s as f64 / n as f64)).sum::<f64>();
    entropy + lambda * (size_entropy - count as f64)
}

/// Final objectives of every run of the greedy that rescans all merging edges
/// each step with gains evaluated from scratch. Gains within `tol` of the best
/// count as tied and each tied edge is followed, since exact ties (for example
/// zero entropy gain on equal-size merges) are resolved by rounding noise.
pub fn greedy_outcomes(graph: &LatticeGraph, k: usize, lambda: f64, tol: f64) -> Vec<f64> {
    assert!(graph.edges().len() <= 64);
    let mut outcomes = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![Vec::<usize>::new()];
    while let Some(selected) = stack.pop() {
        let mask = selected.iter().fold(0u64, |m, &i| m | (1 << i));
        if !seen.insert(mask) {
            continue;
        }
        let value = objective(graph, &selected, lambda);
        if selected.len() == graph.vertex_count() - k {
            outcomes.push(value);
            continue;
        }
        let comp = components(graph, &selected);
        let gains: Vec<(usize, f64)> = graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| comp[e.a as usize] != comp[e.b as usize])
            .map(|(i, _)| {
                let mut trial = selected.clone();
                trial.push(i);
                (i, objective(graph, &trial, lambda) - value)
            })
            .collect();
        let best = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        for &(i, g) in &gains {
            if g >= best - tol {
                let mut next = selected.clone();
                next.push(i);
                stack.push(next);
            }
        }
    }
    outcomes
}

/// Per-probe brute-force rank: one plus the number of gallery entries that sort
/// strictly ahead of the best correct entry (distance, then image id).
pub fn brute_force_cmc(
    distances: &[Vec<f64>],
    gallery_ids: &[String],
    gallery_people: &[String],
    probe_people: &[String],
) -> Vec<f64> {
    let n = gallery_ids.len();
    let mut ranks = Vec::new();
    for (row, person) in distances.iter().zip(probe_people) {
        let mut best = usize::MAX;
        for c in 0..n {
            if &gallery_people[c] != person {
                continue;
            }
            let ahead = (0..n)
                .filter(|&j| row[j] < row[c] || (row[j] == row[c] && gallery_ids[j] < gallery_ids[c]))
                .count();
            best = best.min(ahead + 1);
        }
        ranks.push(best);
    }
    (1..=n)
        .map(|r| ranks.iter().filter(|&&x| x <= r).count() as f64 / ranks.len() as f64)
        .collect()
}

/// Axis-aligned guillotine split of an `h × w` image into `regions` rectangles.
pub fn guillotine_layout(rng: &mut impl Rng, h: usize, w: usize, regions: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut rects = vec![(0, 0, h, w)];
    while rects.len() < regions {
        let i = rng.gen_range(0..rects.len());
        let (r0, c0, r1, c1) = rects[i];
        let horizontal = rng.gen_bool(0.5);
        if horizontal && r1 - r0 >= 8 {
            let cut = rng.gen_range(r0 + 4..=r1 - 4);
            rects[i] = (r0, c0, cut, c1);
            rects.push((cut, c0, r1, c1));
        } else if !horizontal && c1 - c0 >= 8 {
            let cut = rng.gen_range(c0 + 4..=c1 - 4);
            rects[i] = (r0, c0, r1, cut);
            rects.push((r0, cut, r1, c1));
        }
    }
    rects
}

fn plain_angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// `count` random non-negative spectra, pairwise at least `min_angle` apart.
pub fn separated_spectra(rng: &mut impl Rng, count: usize, bands: usize, min_angle: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < count {
        let s: Vec<f64> = (0..bands).map(|_| rng.gen_range(0.05..1.0)).collect();
        if out.iter().all(|o| plain_angle(o, &s) >= min_angle) {
            out.push(s);
        }
    }
    out
}

/// Noise-free piecewise-constant cube over a random layout, plus its true partition.
pub fn piecewise_constant_scene(
    rng: &mut impl Rng,
    h: usize,
    w: usize,
    bands: usize,
    regions: usize,
) -> (HyperCube, SuperpixelMap) {
    let rects = guillotine_layout(rng, h, w, regions);
    let spectra = separated_spectra(rng, rects.len(), bands, 0.5);
    let region = |r: usize, c: usize| {
        rects
            .iter()
            .position(|&(r0, c0, r1, c1)| (r0..r1).contains(&r) && (c0..c1).contains(&c))
            .unwrap()
    };
    let wavelengths = hsreid_core::cube::uniform_wavelengths(400.0, 1000.0, bands);
    let cube = HyperCube::from_fn(h, w, wavelengths, |r, c| spectra[region(r, c)].clone()).unwrap();
    let truth = SuperpixelMap::from_labels(h, w, (0..h * w).map(|p| region(p / w, p % w) as u32).collect())
        .unwrap()
        .relabel_canonical();
    (cube, truth)
}

/// Smooth random field plus per-band noise; every spectrum strictly positive.
pub fn random_cube(rng: &mut impl Rng, h: usize, w: usize, bands: usize) -> HyperCube {
    let centers: Vec<(f64, f64, Vec<f64>)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.0..h as f64),
                rng.gen_range(0.0..w as f64),
                (0..bands).map(|_| rng.gen_range(0.1..1.0)).collect(),
            )
        })
        .collect();
    let wavelengths = hsreid_core::cube::uniform_wavelengths(400.0, 1000.0, bands);
    let mut noise = || rng.gen_range(0.0..0.02);
    HyperCube::from_fn(h, w, wavelengths, |r, c| {
        let nearest = centers
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - r as f64).powi(2) + (a.1 - c as f64).powi(2);
                let db = (b.0 - r as f64).powi(2) + (b.1 - c as f64).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        nearest.2.iter().map(|v| v + noise()).collect()
    })
    .unwrap()
}
