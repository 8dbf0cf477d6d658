//! `key = value` run configuration. Blank lines and `#` comments are ignored;
//! unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fusion::RbfConfig;
use crate::stgcn::{GraphConvMode, StgcnConfig, TrainConfig};

const KEYS: &[&str] = &[
    "stations",
    "observations",
    "out_dir",
    "history_steps",
    "horizon_steps",
    "predicted_target",
    "max_gap_hours",
    "split",
    "shape_c",
    "ridge",
    "metric",
    "centering",
    "sigma",
    "graph_mode",
    "graph_kernel",
    "channels",
    "kernel_t",
    "dropout",
    "residual",
    "lr",
    "batch_size",
    "epochs",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub stations: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub history_steps: usize,
    pub horizon_steps: usize,
    pub predicted_target: Option<String>,
    pub max_gap_hours: usize,
    pub split: (f64, f64, f64),
    pub rbf: RbfConfig,
    pub sigma: Option<f64>,
    pub graph_mode: GraphConvMode,
    pub graph_kernel: usize,
    pub channels: [usize; 3],
    pub kernel_t: usize,
    pub dropout: f64,
    pub residual: bool,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let m = StgcnConfig::default();
        let t = TrainConfig::default();
        Self {
            stations: None,
            observations: None,
            out_dir: None,
            history_steps: m.history,
            horizon_steps: 3,
            predicted_target: None,
            max_gap_hours: 3,
            split: (0.6, 0.2, 0.2),
            rbf: RbfConfig::default(),
            sigma: None,
            graph_mode: m.graph_mode,
            graph_kernel: m.graph_kernel,
            channels: m.channels,
            kernel_t: m.kernel_t,
            dropout: m.dropout,
            residual: m.residual,
            lr: t.lr,
            batch_size: t.batch_size,
            epochs: t.epochs,
            seed: t.seed,
        }
    }
}

/// Splits `text` into key/value pairs, rejecting malformed lines and duplicates.
pub fn parse_key_values(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{origin}:{}: expected `key = value`, got {line:?}", n + 1))
        })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(Error::Config(format!("{origin}:{}: empty key", n + 1)));
        }
        if out.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("{origin}:{}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_opt_f64(key: &str, v: &str) -> Result<Option<f64>> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|p| parse_num(key, p.trim())).collect()
}

impl PipelineConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string(), base)?;
        Ok(cfg)
    }

    /// Applies every entry in `text`; relative paths resolve against `base`.
    pub fn apply_text(&mut self, text: &str, origin: &str, base: &Path) -> Result<()> {
        for (k, v) in parse_key_values(text, origin)? {
            self.set(&k, &v, base)?;
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "stations" => self.stations = Some(path(v)),
            "observations" => self.observations = Some(path(v)),
            "out_dir" => self.out_dir = Some(path(v)),
            "history_steps" => self.history_steps = parse_num(key, v)?,
            "horizon_steps" => self.horizon_steps = parse_num(key, v)?,
            "predicted_target" => self.predicted_target = Some(v.to_string()),
            "max_gap_hours" => self.max_gap_hours = parse_num(key, v)?,
            "split" => {
                let f: Vec<f64> = parse_list(key, v)?;
                if f.len() != 3 {
                    return Err(Error::Config("split needs three fractions".into()));
                }
                self.split = (f[0], f[1], f[2]);
            }
            "shape_c" => self.rbf.shape_c = parse_opt_f64(key, v)?,
            "ridge" => self.rbf.ridge = parse_opt_f64(key, v)?,
            "metric" => self.rbf.metric = v.parse()?,
            "centering" => self.rbf.centering = parse_num(key, v)?,
            "sigma" => self.sigma = parse_opt_f64(key, v)?,
            "graph_mode" => self.graph_mode = v.parse()?,
            "graph_kernel" => self.graph_kernel = parse_num(key, v)?,
            "channels" => {
                let c: Vec<usize> = parse_list(key, v)?;
                self.channels = c
                    .try_into()
                    .map_err(|_| Error::Config("channels needs three widths".into()))?;
            }
            "kernel_t" => self.kernel_t = parse_num(key, v)?,
            "dropout" => self.dropout = parse_num(key, v)?,
            "residual" => self.residual = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; expected one of {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} must be key=value")))?;
            self.set(k.trim(), v.trim(), Path::new("."))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_steps == 0 {
            return Err(Error::Config("horizon_steps must be at least 1".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma must be positive, got {s}")));
            }
        }
        self.rbf.validate()?;
        self.model_config(1)?;
        self.train_config().validate()
    }

    /// Model configuration for a panel with `in_channels` targets.
    pub fn model_config(&self, in_channels: usize) -> Result<StgcnConfig> {
        let c = StgcnConfig {
            history: self.history_steps,
            in_channels,
            channels: self.channels,
            kernel_t: self.kernel_t,
            graph_kernel: self.graph_kernel,
            graph_mode: self.graph_mode,
            dropout: self.dropout,
            residual: self.residual,
            target_channel: 0,
            init_seed: self.seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn require_target(&self) -> Result<&str> {
        self.predicted_target
            .as_deref()
            .ok_or_else(|| Error::Config("predicted_target is not set".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let mut c = PipelineConfig::default();
        c.apply_text(
            "# run\nhistory_steps = 10 \nchannels=16,4,16\nshape_c = auto\nsplit=0.7,0.1,0.2\nstations = in/s.csv # trailing\n",
            "t",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(c.history_steps, 10);
        assert_eq!(c.channels, [16, 4, 16]);
        assert_eq!(c.rbf.shape_c, None);
        assert_eq!(c.split, (0.7, 0.1, 0.2));
        assert_eq!(c.stations.as_deref(), Some(Path::new("/base/in/s.csv")));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let mut c = PipelineConfig::default();
        assert!(matches!(c.apply_text("colour = red", "t", Path::new(".")), Err(Error::Config(_))));
        assert!(matches!(
            parse_key_values("lr=1\nlr=2", "t"),
            Err(Error::Config(_))
        ));
        assert!(matches!(parse_key_values("novalue", "t"), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in ["history_steps = 8", "graph_mode = first_order\ngraph_kernel = 3", "lr = -1", "epochs = many", "sigma = 0"] {
            let mut c = PipelineConfig::default();
            assert!(c.apply_text(bad, "t", Path::new(".")).is_err(), "{bad}");
        }
    }

    #[test]
    fn overrides_apply() {
        let mut c = PipelineConfig::default();
        c.apply_overrides(&["epochs=5".into(), "predicted_target = pm25".into()]).unwrap();
        assert_eq!(c.epochs, 5);
        assert_eq!(c.require_target().unwrap(), "pm25");
        assert!(c.apply_overrides(&["epochs".into()]).is_err());
    }
}
