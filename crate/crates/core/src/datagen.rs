//! Synthetic Gaussian mixtures and CSV point I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::PointSet;
use crate::rng::stream;
use crate::{Error, Result};

/// Mixture of `n_clusters` unit-variance isotropic Gaussians whose means lie
/// uniformly on the sphere of radius `mean_norm`; every sample is rescaled
/// to length `target_norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub mean_norm: f64,
    pub target_norm: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Default `target_norm` is max(mean_norm, √dim).
    pub fn new(n_clusters: usize, points_per_cluster: usize, dim: usize, mean_norm: f64, seed: u64) -> Self {
        SyntheticSpec {
            n_clusters,
            points_per_cluster,
            dim,
            mean_norm,
            target_norm: mean_norm.max((dim as f64).sqrt()),
            seed,
        }
    }

    pub fn with_target_norm(mut self, target_norm: f64) -> Self {
        self.target_norm = target_norm;
        self
    }

    pub fn n(&self) -> usize {
        self.n_clusters * self.points_per_cluster
    }

    fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.points_per_cluster == 0 || self.dim == 0 {
            return Err(Error::InvalidInput("synthetic counts must be >= 1".into()));
        }
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.mean_norm) || !ok(self.target_norm) {
            return Err(Error::InvalidInput("synthetic norms must be finite and > 0".into()));
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn scale_to(v: &mut [f64], norm: f64) {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x *= norm / len);
    } else {
        v[0] = norm;
    }
}

/// Points and their generating cluster, cluster-major.
pub fn gen_synthetic_labeled(spec: &SyntheticSpec) -> Result<(PointSet, Vec<usize>)> {
    spec.validate()?;
    let mut rng = stream(spec.seed, 0);
    let means: Vec<Vec<f64>> = (0..spec.n_clusters)
        .map(|_| {
            let mut m = gaussian(&mut rng, spec.dim);
            scale_to(&mut m, spec.mean_norm);
            m
        })
        .collect();
    let mut coords = Vec::with_capacity(spec.n() * spec.dim);
    let mut labels = Vec::with_capacity(spec.n());
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..spec.points_per_cluster {
            let mut x = gaussian(&mut rng, spec.dim);
            x.iter_mut().zip(mean).for_each(|(a, b)| *a += b);
            scale_to(&mut x, spec.target_norm);
            coords.extend_from_slice(&x);
            labels.push(c);
        }
    }
    Ok((PointSet::new(coords, spec.n(), spec.dim)?, labels))
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<PointSet> {
    Ok(gen_synthetic_labeled(spec)?.0)
}

/// Read a rectangular numeric CSV. With `header` the first row is skipped.
pub fn load_points(path: &Path, header: bool) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut coords = Vec::new();
    let mut dim = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(parse_err(line, format!("expected {d} fields, found {}", record.len())));
            }
            _ => {}
        }
        for field in record.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(line, format!("non-finite value {field:?}")));
            }
            coords.push(x);
        }
        n += 1;
    }
    let dim = dim.ok_or_else(|| parse_err(1, "no data rows".into()))?;
    PointSet::new(coords, n, dim)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Write points as CSV with shortest round-trip float formatting.
pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in points.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
