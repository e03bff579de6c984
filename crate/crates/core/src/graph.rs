//! Weighted radar graph, signal normalisation and train/test/validation splits.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::sim::io::read_dataset;
use crate::sim::seeds::{derive_seed, TAG_SPLIT};
use crate::sim::{norm, RadarConfig, RawSample, Snr};
use crate::{Error, Result, Scalar};

/// Bonus weight for radars that share a carrier frequency.
pub const SAME_FREQUENCY_BONUS: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct RadarGraph<T = f64> {
    /// `A`, symmetric, non-negative, zero diagonal.
    pub adjacency: Tensor<T>,
    /// `I + D^-1/2 A D^-1/2`.
    pub normalized_adjacency: Tensor<T>,
    /// Diagonal of `D`.
    pub degree: Vec<T>,
    /// Subnet index of every node, renumbered densely from 0 in order of first appearance.
    pub subnet_of: Vec<usize>,
    /// One boolean node mask per subnet.
    pub subnet_masks: Vec<Vec<bool>>,
}

impl<T: Scalar> RadarGraph<T> {
    /// Builds the graph from an explicit adjacency matrix.
    ///
    /// Zero-degree nodes get a `D^-1/2` entry of 0, so they keep only their
    /// identity term in the normalised adjacency.
    pub fn from_adjacency(adjacency: Tensor<T>, subnet_ids: &[usize]) -> Result<Self> {
        let n = subnet_ids.len();
        if adjacency.shape() != [n, n] {
            return Err(Error::shape(format!(
                "adjacency shape {:?} for {n} nodes",
                adjacency.shape()
            )));
        }
        let degree: Vec<T> = (0..n).map(|i| adjacency.row(i).iter().copied().sum()).collect();
        let inv_sqrt: Vec<T> = degree
            .iter()
            .map(|&d| if d > T::zero() { T::one() / d.sqrt() } else { T::zero() })
            .collect();
        let mut normalized = Tensor::identity(n);
        for i in 0..n {
            for j in 0..n {
                let v = normalized.at(i, j) + inv_sqrt[i] * adjacency.at(i, j) * inv_sqrt[j];
                normalized.set(i, j, v);
            }
        }
        let mut dense: Vec<usize> = Vec::new();
        let subnet_of: Vec<usize> = subnet_ids
            .iter()
            .map(|s| match dense.iter().position(|d| d == s) {
                Some(p) => p,
                None => {
                    dense.push(*s);
                    dense.len() - 1
                }
            })
            .collect();
        let subnet_masks = (0..dense.len())
            .map(|s| subnet_of.iter().map(|&x| x == s).collect())
            .collect();
        Ok(Self {
            adjacency,
            normalized_adjacency: normalized,
            degree,
            subnet_of,
            subnet_masks,
        })
    }

    /// Single isolated node (normalised adjacency `[1]`).
    pub fn singleton() -> Self {
        Self::from_adjacency(Tensor::zeros(&[1, 1]), &[0]).expect("1x1 graph")
    }

    pub fn num_nodes(&self) -> usize {
        self.subnet_of.len()
    }

    pub fn num_subnets(&self) -> usize {
        self.subnet_masks.len()
    }

    pub fn cast<U: Scalar>(&self) -> RadarGraph<U> {
        RadarGraph {
            adjacency: self.adjacency.cast(),
            normalized_adjacency: self.normalized_adjacency.cast(),
            degree: self.degree.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            subnet_of: self.subnet_of.clone(),
            subnet_masks: self.subnet_masks.clone(),
        }
    }
}

/// `a_ij = 0.3 + 1/d_ij` for equal carrier frequencies, `1/d_ij` otherwise;
/// distances in kilometres.
pub fn adjacency_weight(d_km: f64, same_frequency: bool) -> f64 {
    let w = 1.0 / d_km;
    if same_frequency {
        SAME_FREQUENCY_BONUS + w
    } else {
        w
    }
}

pub fn build_adjacency<T: Scalar>(radars: &[RadarConfig]) -> Result<RadarGraph<T>> {
    let n = radars.len();
    if n < 2 {
        return Err(Error::InvalidGeometry(format!("need at least 2 radars, got {n}")));
    }
    let mut a = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in (i + 1)..n {
            let (p, q) = (radars[i].position, radars[j].position);
            let d_km = norm(&[p[0] - q[0], p[1] - q[1], p[2] - q[2]]) / 1000.0;
            if !(d_km > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "radars {} and {} coincide",
                    radars[i].id, radars[j].id
                )));
            }
            let same = radars[i].carrier_frequency == radars[j].carrier_frequency;
            let w = T::lit(adjacency_weight(d_km, same));
            a.set(i, j, w);
            a.set(j, i, w);
        }
    }
    let subnets: Vec<usize> = radars.iter().map(|r| r.subnet_id).collect();
    RadarGraph::from_adjacency(a, &subnets)
}

/// Graph over a subset of radars, or the singleton graph for one radar.
pub fn build_subgraph<T: Scalar>(radars: &[RadarConfig], nodes: &[usize]) -> Result<RadarGraph<T>> {
    let picked: Vec<RadarConfig> = nodes.iter().map(|&i| radars[i].clone()).collect();
    if picked.len() == 1 {
        return Ok(RadarGraph::singleton());
    }
    build_adjacency(&picked)
}

/// Min/max of the fitting set, in dBsm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
}

impl NormStats {
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<Self> {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidConfig("cannot fit normalisation on an empty set".into()));
        }
        if max <= min {
            return Err(Error::ConstantSignal(min));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Min-max normalises `values`; fits the stats on `values` unless given.
/// Stored stats are applied without clipping.
pub fn min_max_normalize(values: &[f64], stats: Option<NormStats>) -> Result<(Vec<f64>, NormStats)> {
    let stats = match stats {
        Some(s) => s,
        None => NormStats::fit(values)?,
    };
    Ok((values.iter().map(|&v| stats.apply(v)).collect(), stats))
}

/// A normalised N x K observation.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub sample_id: usize,
    pub label: u8,
    pub snr: Snr,
    pub signals: Tensor<f64>,
}

impl GraphSample {
    pub fn from_raw(raw: &RawSample, stats: &NormStats) -> Result<Self> {
        let rows: Vec<Vec<f64>> = raw
            .segments
            .iter()
            .map(|s| s.samples.iter().map(|&v| stats.apply(v)).collect())
            .collect();
        Ok(Self {
            sample_id: raw.sample_id,
            label: raw.label,
            snr: raw.snr,
            signals: Tensor::from_rows(&rows)?,
        })
    }

    /// Sample restricted to a node subset, in the given order.
    pub fn select_nodes(&self, nodes: &[usize]) -> Self {
        let k = self.signals.cols();
        let data: Vec<f64> = nodes.iter().flat_map(|&n| self.signals.row(n).to_vec()).collect();
        Self {
            sample_id: self.sample_id,
            label: self.label,
            snr: self.snr,
            signals: Tensor::from_vec(&[nodes.len(), k], data).expect("subset shape"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Train/test/validation sizes for a 7:2:1 split: test and validation are
/// floored and the remainder goes to train.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = n * 2 / 10;
    let validation = n / 10;
    (n - test - validation, test, validation)
}

/// Stratified, seeded 7:2:1 split over positions `0..labels.len()`.
///
/// Each label group is shuffled, the groups are interleaved in proportion to
/// their sizes, and the interleaved order is cut into test, validation, train.
pub fn split_indices(labels: &[u8], seed: u64) -> Result<SplitIndices> {
    let n = labels.len();
    if n < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_SPLIT]));
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut groups: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..n).filter(|&i| labels[i] == *c).collect())
        .collect();
    for g in &mut groups {
        g.shuffle(&mut rng);
    }
    let mut taken = vec![0usize; groups.len()];
    let mut order = Vec::with_capacity(n);
    for m in 0..n {
        let pick = (0..groups.len())
            .filter(|&g| taken[g] < groups[g].len())
            .max_by(|&a, &b| {
                let deficit = |g: usize| (groups[g].len() * (m + 1)) as f64 / n as f64 - taken[g] as f64;
                deficit(a).partial_cmp(&deficit(b)).unwrap().then(b.cmp(&a))
            })
            .expect("remaining samples");
        order.push(groups[pick][taken[pick]]);
        taken[pick] += 1;
    }
    let (_, n_test, n_val) = split_sizes(n);
    Ok(SplitIndices {
        test: order[..n_test].to_vec(),
        validation: order[n_test..n_test + n_val].to_vec(),
        train: order[n_test + n_val..].to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<GraphSample>,
    pub test: Vec<GraphSample>,
    pub validation: Vec<GraphSample>,
    pub normalization_stats: NormStats,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn ids(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let ids = |v: &[GraphSample]| v.iter().map(|s| s.sample_id).collect();
        (ids(&self.train), ids(&self.test), ids(&self.validation))
    }
}

fn assemble(raw: &[RawSample], idx: &SplitIndices, stats: NormStats, seed: u64) -> Result<DatasetSplit> {
    let build = |is: &[usize]| is.iter().map(|&i| GraphSample::from_raw(&raw[i], &stats)).collect::<Result<Vec<_>>>();
    Ok(DatasetSplit {
        train: build(&idx.train)?,
        test: build(&idx.test)?,
        validation: build(&idx.validation)?,
        normalization_stats: stats,
        seed,
    })
}

/// Splits raw samples 7:2:1 and normalises with stats fitted on train only.
pub fn split_dataset(raw: &[RawSample], seed: u64) -> Result<DatasetSplit> {
    let labels: Vec<u8> = raw.iter().map(|s| s.label).collect();
    let idx = split_indices(&labels, seed)?;
    let stats = NormStats::fit(
        idx.train
            .iter()
            .flat_map(|&i| raw[i].segments.iter().flat_map(|s| s.samples.iter())),
    )?;
    assemble(raw, &idx, stats, seed)
}

pub const GRAPH_FILE: &str = "graph.csv";
pub const SPLIT_FILE: &str = "split_manifest.toml";
pub const SPLIT_FORMAT_VERSION: u32 = 1;

pub fn write_graph_csv(path: &Path, graph: &RadarGraph<f64>) -> Result<()> {
    let n = graph.num_nodes();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", graph.adjacency.at(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_graph_csv(path: &Path) -> Result<Tensor<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::format(path, format!("bad value '{v}'"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let t = Tensor::from_rows(&rows)?;
    if t.rows() != t.cols() {
        return Err(Error::format(path, "adjacency is not square"));
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format_version: u32,
    pub seed: u64,
    pub normalization: NormStats,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

pub fn write_split_manifest(path: &Path, split: &DatasetSplit) -> Result<()> {
    let (train, test, validation) = split.ids();
    let m = SplitManifest {
        format_version: SPLIT_FORMAT_VERSION,
        seed: split.seed,
        normalization: split.normalization_stats,
        train,
        test,
        validation,
    };
    let text = toml::to_string(&m).map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_split_manifest(path: &Path) -> Result<SplitManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: SplitManifest = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if m.format_version != SPLIT_FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported format version {}", m.format_version)));
    }
    Ok(m)
}

/// Rebuilds a split from raw samples and a split manifest.
pub fn split_from_manifest(raw: &[RawSample], m: &SplitManifest) -> Result<DatasetSplit> {
    let pos: HashMap<usize, usize> = raw.iter().enumerate().map(|(i, s)| (s.sample_id, i)).collect();
    let lookup = |ids: &[usize]| {
        ids.iter()
            .map(|id| {
                pos.get(id)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("split references unknown sample {id}")))
            })
            .collect::<Result<Vec<_>>>()
    };
    let idx = SplitIndices {
        train: lookup(&m.train)?,
        test: lookup(&m.test)?,
        validation: lookup(&m.validation)?,
    };
    assemble(raw, &idx, m.normalization, m.seed)
}

/// Reads `segments.csv` from `dataset_dir` and applies the split manifest.
pub fn read_split(dataset_dir: &Path, manifest_path: &Path) -> Result<DatasetSplit> {
    let (_, raw) = read_dataset(dataset_dir)?;
    split_from_manifest(&raw, &read_split_manifest(manifest_path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{default_radar_layout, RcsSegment};
    use proptest::prelude::*;

    fn radar(id: usize, x_km: f64, y_km: f64, fc: f64, subnet: usize) -> RadarConfig {
        RadarConfig {
            id,
            position: [x_km * 1000.0, y_km * 1000.0, 0.0],
            carrier_frequency: fc,
            subnet_id: subnet,
        }
    }

    #[test]
    fn adjacency_weights() {
        let g: RadarGraph = build_adjacency(&[radar(0, 0.0, 0.0, 1e9, 0), radar(1, 10.0, 0.0, 1e9, 0)]).unwrap();
        assert!((g.adjacency.at(0, 1) - 0.4).abs() < 1e-15);
        let g: RadarGraph = build_adjacency(&[radar(0, 0.0, 0.0, 1e9, 0), radar(1, 0.0, 2.0, 2e9, 1)]).unwrap();
        assert!((g.adjacency.at(1, 0) - 0.5).abs() < 1e-15);
        assert_eq!(g.adjacency.at(0, 0), 0.0);
        assert_eq!(g.num_subnets(), 2);
    }

    #[test]
    fn coincident_radars_rejected() {
        let r = build_adjacency::<f64>(&[radar(0, 1.0, 1.0, 1e9, 0), radar(1, 1.0, 1.0, 1e9, 0)]);
        assert!(matches!(r, Err(Error::InvalidGeometry(_))));
        assert!(build_adjacency::<f64>(&[radar(0, 1.0, 1.0, 1e9, 0)]).is_err());
    }

    /// Dense oracle: explicit D^-1/2 matrices multiplied out.
    fn oracle_normalized(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut dm = vec![vec![0.0; n]; n];
        for i in 0..n {
            let d: f64 = a[i].iter().sum();
            dm[i][i] = if d > 0.0 { d.powf(-0.5) } else { 0.0 };
        }
        let mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| {
            let mut z = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        z[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            z
        };
        let mut out = mul(&mul(&dm, &a.to_vec()), &dm);
        for (i, row) in out.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        out
    }

    #[test]
    fn three_radar_normalized_adjacency_matches_oracle() {
        let radars = [radar(0, 0.0, 0.0, 1e9, 0), radar(1, 3.0, 4.0, 1e9, 0), radar(2, -2.0, 1.0, 3e9, 1)];
        let g: RadarGraph = build_adjacency(&radars).unwrap();
        let a: Vec<Vec<f64>> = (0..3).map(|i| g.adjacency.row(i).to_vec()).collect();
        let want = oracle_normalized(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.normalized_adjacency.at(i, j) - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_degree_node_keeps_identity() {
        let a = Tensor::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 2.0], vec![0.0, 2.0, 0.0]]).unwrap();
        let g = RadarGraph::<f64>::from_adjacency(a, &[0, 0, 0]).unwrap();
        assert_eq!(g.normalized_adjacency.row(0), &[1.0, 0.0, 0.0]);
        assert!((g.normalized_adjacency.at(1, 2) - 1.0).abs() < 1e-15);
        let empty = RadarGraph::<f64>::from_adjacency(Tensor::zeros(&[3, 3]), &[0, 1, 1]).unwrap();
        assert_eq!(empty.normalized_adjacency, Tensor::identity(3));
    }

    #[test]
    fn nine_node_graph_spectrum_in_unit_interval() {
        let g: RadarGraph = build_adjacency(&default_radar_layout()).unwrap();
        let n = 9;
        let mut s = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = g.normalized_adjacency.at(i, j) - if i == j { 1.0 } else { 0.0 };
                s[(i, j)] = v;
                assert!((g.normalized_adjacency.at(i, j) - g.normalized_adjacency.at(j, i)).abs() < 1e-15);
            }
        }
        for ev in s.symmetric_eigen().eigenvalues.iter() {
            assert!(*ev >= -1.0 - 1e-12 && *ev <= 1.0 + 1e-12, "eigenvalue {ev}");
        }
        assert_eq!(g.subnet_masks[0].iter().filter(|b| **b).count(), 5);
        assert_eq!(g.subnet_masks[1].iter().filter(|b| **b).count(), 4);
    }

    #[test]
    fn normalization_examples() {
        let (v, st) = min_max_normalize(&[0.0, 5.0, 10.0], None).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        let (v, _) = min_max_normalize(&[12.0], Some(st)).unwrap();
        assert!(v[0] > 1.0);
        assert!(matches!(min_max_normalize(&[3.0, 3.0], None), Err(Error::ConstantSignal(_))));
    }

    proptest! {
        #[test]
        fn normalize_round_trip(values in proptest::collection::vec(-80.0f64..80.0, 2..50)) {
            prop_assume!(values.iter().any(|v| *v != values[0]));
            let (norm, st) = min_max_normalize(&values, None).unwrap();
            for (n, v) in norm.iter().zip(&values) {
                prop_assert!(*n >= 0.0 && *n <= 1.0);
                prop_assert!((st.invert(*n) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn split_sizes_match_ratio() {
        assert_eq!(split_sizes(2000), (1400, 400, 200));
        assert_eq!(split_sizes(10), (7, 2, 1));
        assert_eq!(split_sizes(200), (140, 40, 20));
        let labels: Vec<u8> = (0..9).map(|i| (i % 2) as u8).collect();
        assert!(matches!(split_indices(&labels, 0), Err(Error::TooFewSamples { .. })));
    }

    proptest! {
        #[test]
        fn split_is_disjoint_stratified(n0 in 5usize..120, n1 in 5usize..120, seed in 0u64..1000) {
            let labels: Vec<u8> = (0..n0).map(|_| 0u8).chain((0..n1).map(|_| 1u8)).collect();
            let s = split_indices(&labels, seed).unwrap();
            let n = labels.len();
            let (tr, te, va) = split_sizes(n);
            prop_assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (tr, te, va));
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for part in [&s.train, &s.test, &s.validation] {
                let zeros = part.iter().filter(|&&i| labels[i] == 0).count() as f64;
                let expect = part.len() as f64 * n0 as f64 / n as f64;
                prop_assert!((zeros - expect).abs() <= 1.0 + 1e-9, "zeros {} expect {}", zeros, expect);
            }
        }
    }

    fn toy_raw(n: usize) -> Vec<RawSample> {
        (0..n)
            .map(|i| RawSample {
                sample_id: i,
                label: (i % 2) as u8,
                snr: Snr::Db(0.0),
                segments: (0..2)
                    .map(|r| RcsSegment {
                        radar_id: r,
                        class_label: (i % 2) as u8,
                        snr: Snr::Db(0.0),
                        samples: (0..4).map(|k| (i * 7 + r * 3 + k) as f64 * 0.5).collect(),
                        sample_rate: 20.0,
                        segment_id: i * 2 + r,
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn split_normalizes_on_train_only() {
        let raw = toy_raw(20);
        let split = split_dataset(&raw, 3).unwrap();
        assert_eq!((split.train.len(), split.test.len(), split.validation.len()), (14, 4, 2));
        let train_vals: Vec<f64> = split.train.iter().flat_map(|s| s.signals.data().to_vec()).collect();
        let min = train_vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = train_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((min, max), (0.0, 1.0));
    }

    #[test]
    fn split_manifest_round_trip() {
        let raw = toy_raw(30);
        let split = split_dataset(&raw, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(SPLIT_FILE);
        write_split_manifest(&p, &split).unwrap();
        let back = split_from_manifest(&raw, &read_split_manifest(&p).unwrap()).unwrap();
        assert_eq!(back, split);
    }

    #[test]
    fn graph_csv_round_trip() {
        let g: RadarGraph = build_adjacency(&default_radar_layout()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(GRAPH_FILE);
        write_graph_csv(&p, &g).unwrap();
        assert_eq!(read_graph_csv(&p).unwrap(), g.adjacency);
    }
}
