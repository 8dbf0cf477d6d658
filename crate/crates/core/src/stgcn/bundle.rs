use std::path::Path;

use ndarray::Array2;

use super::{GraphContext, GraphConvMode, StgcnConfig, StgcnModel};
use crate::error::{Error, Result};
use crate::graph::{GraphOperator, OperatorKind};
use crate::ingest::NormalizationParams;
use crate::tensor::{Checkpoint, Tensor};

/// A model plus everything needed to forecast from a fused panel: the graph
/// operator, the station and channel order, and the fitted scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: StgcnModel,
    pub operator: GraphOperator,
    pub normalization: NormalizationParams,
    pub station_order: Vec<String>,
    pub predicted_target: String,
}

impl TrainedModel {
    pub fn graph_context(&self) -> Result<GraphContext> {
        GraphContext::new(&self.operator, self.model.config.graph_mode, self.model.config.graph_kernel)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.model.config;
        let meta = vec![
            ("history".to_string(), c.history.to_string()),
            ("in_channels".into(), c.in_channels.to_string()),
            (
                "channels".into(),
                c.channels.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("kernel_t".into(), c.kernel_t.to_string()),
            ("graph_kernel".into(), c.graph_kernel.to_string()),
            ("graph_mode".into(), c.graph_mode.as_str().into()),
            ("dropout".into(), format!("{:e}", c.dropout)),
            ("residual".into(), c.residual.to_string()),
            ("target_channel".into(), c.target_channel.to_string()),
            ("init_seed".into(), c.init_seed.to_string()),
            ("predicted_target".into(), self.predicted_target.clone()),
            ("stations".into(), self.station_order.join("|")),
            ("targets".into(), self.normalization.target_ids.join("|")),
        ];
        let mut tensors: Vec<(String, Tensor)> = self
            .model
            .params
            .names
            .iter()
            .cloned()
            .zip(self.model.params.tensors.iter().cloned())
            .collect();
        let s = self.operator.n_nodes();
        tensors.push((
            "graph.operator".into(),
            Tensor::new(vec![s, s], self.operator.matrix.iter().copied().collect()).expect("square"),
        ));
        tensors.push(("norm.min".into(), Tensor::from_vec(self.normalization.min.clone())));
        tensors.push(("norm.max".into(), Tensor::from_vec(self.normalization.max.clone())));
        Checkpoint { meta, tensors }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let get = |k: &str| {
            ck.meta(k)
                .ok_or_else(|| Error::Validation(format!("checkpoint is missing {k:?}")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Validation(format!("checkpoint entry {k:?} is not an integer")))
        };
        let channels: Vec<usize> = get("channels")?
            .split(',')
            .map(|v| v.parse().map_err(|_| Error::Validation("bad channels entry".into())))
            .collect::<Result<_>>()?;
        let channels: [usize; 3] = channels
            .try_into()
            .map_err(|_| Error::Validation("channels must have 3 entries".into()))?;
        let config = StgcnConfig {
            history: num("history")?,
            in_channels: num("in_channels")?,
            channels,
            kernel_t: num("kernel_t")?,
            graph_kernel: num("graph_kernel")?,
            graph_mode: get("graph_mode")?.parse::<GraphConvMode>()?,
            dropout: get("dropout")?
                .parse()
                .map_err(|_| Error::Validation("bad dropout entry".into()))?,
            residual: get("residual")? == "true",
            target_channel: num("target_channel")?,
            init_seed: get("init_seed")?
                .parse()
                .map_err(|_| Error::Validation("bad init_seed entry".into()))?,
        };
        let mut model = StgcnModel::new(config)?;
        for (name, slot) in model.params.names.iter().zip(model.params.tensors.iter_mut()) {
            let t = ck
                .tensor(name)
                .ok_or_else(|| Error::Validation(format!("checkpoint is missing parameter {name:?}")))?;
            if t.shape() != slot.shape() {
                return Err(Error::shape("checkpoint parameter", t.shape(), slot.shape()));
            }
            *slot = t.clone();
        }
        let op = ck
            .tensor("graph.operator")
            .ok_or_else(|| Error::Validation("checkpoint is missing graph.operator".into()))?;
        let s = op.shape()[0];
        let matrix = Array2::from_shape_vec((s, s), op.data().to_vec())
            .map_err(|_| Error::Validation("graph.operator is not square".into()))?;
        let kind = match model.config.graph_mode {
            GraphConvMode::FirstOrder => OperatorKind::RenormalizedAdjacency,
            GraphConvMode::Chebyshev => OperatorKind::ScaledLaplacian,
        };
        let split = |v: &str| -> Vec<String> {
            if v.is_empty() {
                Vec::new()
            } else {
                v.split('|').map(String::from).collect()
            }
        };
        let vec_of = |name: &str| -> Result<Vec<f64>> {
            ck.tensor(name)
                .map(|t| t.data().to_vec())
                .ok_or_else(|| Error::Validation(format!("checkpoint is missing {name}")))
        };
        let normalization = NormalizationParams {
            target_ids: split(get("targets")?),
            min: vec_of("norm.min")?,
            max: vec_of("norm.max")?,
        };
        let station_order = split(get("stations")?);
        if station_order.len() != s || normalization.target_ids.len() != normalization.min.len() {
            return Err(Error::Validation("checkpoint station or target lists are inconsistent".into()));
        }
        Ok(Self {
            model,
            operator: GraphOperator { kind, matrix },
            normalization,
            station_order,
            predicted_target: get("predicted_target")?.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
