//! Gallery/probe matching and cumulative matching characteristics.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{spectral_angle, SkinSignatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Gallery,
    Probe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub person_id: String,
    pub role: Role,
    /// ENVI header path, relative to the manifest's directory unless absolute.
    pub cube: PathBuf,
    /// Raster path; defaults to the header path with an `img` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<PathBuf>,
    pub mask: PathBuf,
}

impl ManifestEntry {
    pub fn raster_path(&self) -> PathBuf {
        self.raster.clone().unwrap_or_else(|| self.cube.with_extension("img"))
    }
}

/// Closed-set gallery/probe dataset description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = DatasetManifest { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(e.image_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate image id {:?}", e.image_id)));
            }
        }
        let gallery_people: HashSet<&str> = self.gallery().map(|e| e.person_id.as_str()).collect();
        if gallery_people.is_empty() {
            return Err(Error::Manifest("no gallery entries".into()));
        }
        if self.probes().next().is_none() {
            return Err(Error::Manifest("no probe entries".into()));
        }
        if let Some(p) = self.probes().find(|p| !gallery_people.contains(p.person_id.as_str())) {
            return Err(Error::OpenSet(p.person_id.clone()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Loads a manifest and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = DatasetManifest::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for e in &mut manifest.entries {
            e.cube = base.join(&e.cube);
            e.mask = base.join(&e.mask);
            e.raster = e.raster.as_ref().map(|r| base.join(r));
        }
        Ok(manifest)
    }

    pub fn gallery(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Gallery)
    }

    pub fn probes(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Probe)
    }

    pub fn person_of(&self, image_id: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.image_id == image_id)
            .map(|e| e.person_id.as_str())
    }
}

/// How cross-pair spectral angles between two images are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "min" => Ok(Aggregation::Min),
            other => Err(Error::Config(format!("aggregation must be mean or min, got {other:?}"))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Min => "min",
        })
    }
}

/// Mean spectral angle over all (probe, gallery) signature pairs.
pub fn image_distance(probe: &SkinSignatureSet, gallery: &SkinSignatureSet) -> Result<f64> {
    image_distance_with(probe, gallery, Aggregation::Mean)
}

pub fn image_distance_with(
    probe: &SkinSignatureSet,
    gallery: &SkinSignatureSet,
    aggregation: Aggregation,
) -> Result<f64> {
    if probe.is_empty() || gallery.is_empty() {
        return Err(Error::EmptySignatureSet);
    }
    if probe.bands() != gallery.bands() {
        return Err(Error::BandMismatch {
            left: probe.bands(),
            right: gallery.bands(),
        });
    }
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for p in probe.signatures() {
        for g in gallery.signatures() {
            let angle = spectral_angle(p, g)?;
            sum += angle;
            min = min.min(angle);
        }
    }
    Ok(match aggregation {
        Aggregation::Mean => sum / (probe.len() * gallery.len()) as f64,
        Aggregation::Min => min,
    })
}

/// Probes × gallery matrix of image distances in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    probe_ids: Vec<String>,
    gallery_ids: Vec<String>,
    distances: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(probe_ids: Vec<String>, gallery_ids: Vec<String>, distances: Vec<f64>) -> Result<Self> {
        if distances.len() != probe_ids.len() * gallery_ids.len() {
            return Err(Error::IdMismatch(format!(
                "{} distances for {} probes x {} gallery images",
                distances.len(),
                probe_ids.len(),
                gallery_ids.len()
            )));
        }
        if let Some(d) = distances.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::InvalidParameter(format!("distance {d} is not finite and >= 0")));
        }
        Ok(DistanceMatrix {
            probe_ids,
            gallery_ids,
            distances,
        })
    }

    pub fn probe_ids(&self) -> &[String] {
        &self.probe_ids
    }

    pub fn gallery_ids(&self) -> &[String] {
        &self.gallery_ids
    }

    pub fn get(&self, probe: usize, gallery: usize) -> f64 {
        self.distances[probe * self.gallery_ids.len() + gallery]
    }

    pub fn row(&self, probe: usize) -> &[f64] {
        let n = self.gallery_ids.len();
        &self.distances[probe * n..(probe + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.distances
    }

    /// Applies `f` to every entry; the result must stay finite and non-negative.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        DistanceMatrix::new(
            self.probe_ids.clone(),
            self.gallery_ids.clone(),
            self.distances.iter().map(|&d| f(d)).collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("probe");
        for g in &self.gallery_ids {
            let _ = write!(out, ",{g}");
        }
        out.push('\n');
        for (i, p) in self.probe_ids.iter().enumerate() {
            out.push_str(p);
            for d in self.row(i) {
                let _ = write!(out, ",{d}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv("empty distance file".into()))?;
        let gallery_ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut probe_ids = Vec::new();
        let mut distances = Vec::new();
        for line in lines {
            let mut fields = line.split(',').map(str::trim);
            probe_ids.push(fields.next().unwrap_or_default().to_string());
            let row = fields
                .map(|f| f.parse::<f64>().map_err(|_| Error::Csv(format!("bad distance {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != gallery_ids.len() {
                return Err(Error::Csv(format!(
                    "row {:?} has {} values for {} gallery columns",
                    probe_ids.last().unwrap(),
                    row.len(),
                    gallery_ids.len()
                )));
            }
            distances.extend(row);
        }
        DistanceMatrix::new(probe_ids, gallery_ids, distances)
    }
}

/// Entry `(i, j)` is the distance between probe `i` and gallery image `j`.
pub fn distance_matrix(probes: &[SkinSignatureSet], gallery: &[SkinSignatureSet]) -> Result<DistanceMatrix> {
    distance_matrix_with(probes, gallery, Aggregation::Mean)
}

pub fn distance_matrix_with(
    probes: &[SkinSignatureSet],
    gallery: &[SkinSignatureSet],
    aggregation: Aggregation,
) -> Result<DistanceMatrix> {
    let distances = probes
        .par_iter()
        .flat_map_iter(|p| gallery.iter().map(move |g| image_distance_with(p, g, aggregation)))
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::new(
        probes.iter().map(|p| p.image_id().to_string()).collect(),
        gallery.iter().map(|g| g.image_id().to_string()).collect(),
        distances,
    )
}

/// One gallery column: its image id and the person it shows.
#[derive(Debug, Clone, Copy)]
pub struct GalleryItem<'a> {
    pub image_id: &'a str,
    pub person_id: &'a str,
}

/// 1-based rank of the best-placed correct gallery image when the row is
/// sorted by ascending distance, ties going to the smaller gallery image id.
pub fn rank_of_match(row: &[f64], gallery: &[GalleryItem<'_>], probe_person: &str) -> Result<usize> {
    if row.len() != gallery.len() {
        return Err(Error::IdMismatch(format!(
            "{} distances for {} gallery images",
            row.len(),
            gallery.len()
        )));
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        row[a]
            .total_cmp(&row[b])
            .then_with(|| gallery[a].image_id.cmp(gallery[b].image_id))
    });
    order
        .iter()
        .position(|&j| gallery[j].person_id == probe_person)
        .map(|pos| pos + 1)
        .ok_or_else(|| Error::OpenSet(probe_person.to_string()))
}

/// Rank-r recognition rates for r = 1..N, N the gallery size.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    rates: Vec<f64>,
}

impl CmcCurve {
    /// Builds the curve from per-probe ranks against a gallery of `n` images.
    pub fn from_ranks(ranks: &[usize], n: usize) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::InvalidParameter("no probes to evaluate".into()));
        }
        if let Some(r) = ranks.iter().find(|&&r| r == 0 || r > n) {
            return Err(Error::InvalidParameter(format!("rank {r} outside 1..={n}")));
        }
        let mut hits = vec![0usize; n + 1];
        for &r in ranks {
            hits[r] += 1;
        }
        let total = ranks.len() as f64;
        let mut cumulative = 0;
        let rates = (1..=n)
            .map(|r| {
                cumulative += hits[r];
                cumulative as f64 / total
            })
            .collect();
        Ok(CmcCurve { rates })
    }

    pub fn gallery_size(&self) -> usize {
        self.rates.len()
    }

    /// Rates indexed from rank 1.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Recognition rate at 1-based `rank`.
    pub fn rate(&self, rank: usize) -> f64 {
        self.rates[rank - 1]
    }

    pub fn rank1(&self) -> f64 {
        self.rates[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,rate\n");
        for (i, r) in self.rates.iter().enumerate() {
            let _ = writeln!(out, "{},{r}", i + 1);
        }
        out
    }
}

/// Per-probe ranks, in matrix row order.
pub fn match_ranks(matrix: &DistanceMatrix, manifest: &DatasetManifest) -> Result<Vec<usize>> {
    let persons: HashMap<&str, (&str, Role)> = manifest
        .entries
        .iter()
        .map(|e| (e.image_id.as_str(), (e.person_id.as_str(), e.role)))
        .collect();
    let lookup = |id: &str, role: Role| -> Result<&str> {
        match persons.get(id) {
            Some(&(person, r)) if r == role => Ok(person),
            Some(_) => Err(Error::IdMismatch(format!("image {id:?} is not a {role:?} entry"))),
            None => Err(Error::IdMismatch(format!("image {id:?} is not in the manifest"))),
        }
    };
    let gallery = matrix
        .gallery_ids()
        .iter()
        .map(|id| {
            Ok(GalleryItem {
                image_id: id,
                person_id: lookup(id, Role::Gallery)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    matrix
        .probe_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| rank_of_match(matrix.row(i), &gallery, lookup(id, Role::Probe)?))
        .collect()
}

pub fn cmc(matrix: &DistanceMatrix, manifest: &DatasetManifest) -> Result<CmcCurve> {
    let ranks = match_ranks(matrix, manifest)?;
    CmcCurve::from_ranks(&ranks, matrix.gallery_ids().len())
}
