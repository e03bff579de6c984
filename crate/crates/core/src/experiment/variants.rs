use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::RadarGraph;
use crate::nn::{ModelSpec, TemporalKind, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AblationVariant {
    Gru,
    AttGru,
    StgcnLike,
    Stfgacn1F,
    Stfgacn2F,
    Fft,
    Fft9,
    Gru9,
}

/// How a variant turns samples into predictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    /// One model per radar, each trained on that radar's segments.
    SingleRadar(TemporalKind),
    /// Graph model over the first subnet only (`true`) or every radar.
    Graph { temporal: TemporalKind, first_subnet_only: bool },
    /// Spectral-peak templates per radar segment.
    Fft,
    /// Majority vote over radars of a per-segment variant.
    Vote(AblationVariant),
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 8] = [
        AblationVariant::Gru,
        AblationVariant::AttGru,
        AblationVariant::StgcnLike,
        AblationVariant::Stfgacn1F,
        AblationVariant::Stfgacn2F,
        AblationVariant::Fft,
        AblationVariant::Fft9,
        AblationVariant::Gru9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationVariant::Gru => "GRU",
            AblationVariant::AttGru => "ATT-GRU",
            AblationVariant::StgcnLike => "STGCN-like",
            AblationVariant::Stfgacn1F => "STFGACN-1F",
            AblationVariant::Stfgacn2F => "STFGACN-2F",
            AblationVariant::Fft => "FFT",
            AblationVariant::Fft9 => "FFT(9)",
            AblationVariant::Gru9 => "GRU(9)",
        }
    }

    pub fn kind(&self) -> VariantKind {
        use AblationVariant::*;
        match self {
            Gru => VariantKind::SingleRadar(TemporalKind::Gru),
            AttGru => VariantKind::SingleRadar(TemporalKind::AttGru),
            StgcnLike => VariantKind::Graph { temporal: TemporalKind::Conv, first_subnet_only: false },
            Stfgacn1F => VariantKind::Graph { temporal: TemporalKind::AttGru, first_subnet_only: true },
            Stfgacn2F => VariantKind::Graph { temporal: TemporalKind::AttGru, first_subnet_only: false },
            Fft => VariantKind::Fft,
            Fft9 => VariantKind::Vote(Fft),
            Gru9 => VariantKind::Vote(Gru),
        }
    }

    /// Whether a network is trained for this variant or the one it votes over.
    pub fn is_neural(&self) -> bool {
        match self.kind() {
            VariantKind::Fft => false,
            VariantKind::Vote(base) => base.is_neural(),
            _ => true,
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|v| v == self).expect("listed")
    }

    /// Model spec and the node subset it consumes, for variants that own a network.
    pub fn model_spec(&self, graph: &RadarGraph, hidden: usize, channels: usize) -> Option<(ModelSpec, Vec<usize>)> {
        let spec = |temporal, graph_on, subnet_of| ModelSpec {
            temporal,
            graph: graph_on,
            subnet_of,
            hidden,
            decoder_channels: channels,
        };
        match self.kind() {
            VariantKind::SingleRadar(t) => Some((spec(t, false, vec![0]), vec![0])),
            VariantKind::Graph { temporal, first_subnet_only } => {
                let nodes = node_set(graph, first_subnet_only);
                let subnets = nodes.iter().map(|&n| graph.subnet_of[n]).collect::<Vec<_>>();
                let dense = densify(&subnets);
                Some((spec(temporal, true, dense), nodes))
            }
            _ => None,
        }
    }
}

fn densify(ids: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    ids.iter()
        .map(|s| match seen.iter().position(|x| x == s) {
            Some(p) => p,
            None => {
                seen.push(*s);
                seen.len() - 1
            }
        })
        .collect()
}

pub fn node_set(graph: &RadarGraph, first_subnet_only: bool) -> Vec<usize> {
    (0..graph.num_nodes()).filter(|&n| !first_subnet_only || graph.subnet_of[n] == 0).collect()
}

/// Graph induced on `nodes`, in that order.
pub fn restrict_graph(graph: &RadarGraph, nodes: &[usize]) -> Result<RadarGraph> {
    let rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&i| nodes.iter().map(|&j| graph.adjacency.at(i, j)).collect())
        .collect();
    let subnets: Vec<usize> = nodes.iter().map(|&n| graph.subnet_of[n]).collect();
    if rows.is_empty() {
        return Err(Error::InvalidConfig("empty node subset".into()));
    }
    RadarGraph::from_adjacency(Tensor::from_rows(&rows)?, &subnets)
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        AblationVariant::ALL
            .into_iter()
            .find(|v| v.name().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>() == key)
            .ok_or_else(|| {
                let names: Vec<_> = AblationVariant::ALL.iter().map(|v| v.name()).collect();
                Error::InvalidConfig(format!("unknown variant '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

impl Serialize for AblationVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AblationVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_adjacency;
    use crate::sim::default_radar_layout;

    #[test]
    fn names_round_trip_and_aliases() {
        for v in AblationVariant::ALL {
            assert_eq!(v.name().parse::<AblationVariant>().unwrap(), v);
        }
        assert_eq!("stfgacn-2f".parse::<AblationVariant>().unwrap(), AblationVariant::Stfgacn2F);
        assert_eq!("gru9".parse::<AblationVariant>().unwrap(), AblationVariant::Gru9);
        assert!("svm".parse::<AblationVariant>().is_err());
    }

    #[test]
    fn one_f_uses_the_five_radar_subnet() {
        let g: RadarGraph = build_adjacency(&default_radar_layout()).unwrap();
        let (spec, nodes) = AblationVariant::Stfgacn1F.model_spec(&g, 16, 4).unwrap();
        assert_eq!(nodes.len(), 5);
        assert_eq!(spec.num_subnets(), 1);
        assert_eq!(restrict_graph(&g, &nodes).unwrap().num_nodes(), 5);
        let (spec2, nodes2) = AblationVariant::Stfgacn2F.model_spec(&g, 16, 4).unwrap();
        assert_eq!((nodes2.len(), spec2.num_subnets()), (9, 2));
        assert!(AblationVariant::Fft9.model_spec(&g, 16, 4).is_none());
    }
}
