//! Text container for named `f64` blocks plus string metadata.
//!
//! ```text
//! geofuse-checkpoint 1
//! meta <key> <value>
//! tensor <name> <rank> <dim>...
//! <values, space separated, shortest round-trip exponent form>
//! end
//! ```
//!
//! Values round-trip bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

const MAGIC: &str = "geofuse-checkpoint 1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, t) in &self.tensors {
            let _ = write!(out, "tensor {name} {}", t.shape().len());
            for d in t.shape() {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let mut first = true;
            for v in t.data() {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(err(1, "not a geofuse checkpoint")),
        }
        let mut ck = Checkpoint::default();
        let mut ended = false;
        while let Some((ln, line)) = lines.next() {
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                ck.meta.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let mut parts = rest.split_whitespace();
                let name = parts.next().ok_or_else(|| err(ln, "missing tensor name"))?;
                let rank: usize = parts
                    .next()
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| err(ln, "bad tensor rank"))?;
                let shape: Vec<usize> = parts
                    .map(|d| d.parse().map_err(|_| err(ln, "bad tensor dim")))
                    .collect::<Result<_>>()?;
                if shape.len() != rank {
                    return Err(err(ln, "rank does not match dims"));
                }
                let (vln, values) = lines.next().ok_or_else(|| err(ln, "missing tensor values"))?;
                let data: Vec<f64> = values
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| err(vln, "bad value")))
                    .collect::<Result<_>>()?;
                let t = Tensor::new(shape, data).map_err(|_| err(vln, "value count does not match shape"))?;
                ck.tensors.push((name.to_string(), t));
            } else if !line.trim().is_empty() {
                return Err(err(ln, "unrecognized line"));
            }
        }
        if !ended {
            return Err(err(text.lines().count(), "missing end marker"));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in proptest::collection::vec(any::<u64>(), 1..40)) {
            let data: Vec<f64> = bits.iter().map(|b| f64::from_bits(*b)).filter(|v| !v.is_nan()).collect();
            prop_assume!(!data.is_empty());
            let n = data.len();
            let ck = Checkpoint {
                meta: vec![("kind".into(), "test value".into())],
                tensors: vec![("w".into(), Tensor::new(vec![n], data.clone()).unwrap())],
            };
            let back = Checkpoint::parse(&ck.to_text(), Path::new("mem")).unwrap();
            let got = back.tensor("w").unwrap().data();
            for (a, b) in got.iter().zip(&data) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.meta("kind"), Some("test value"));
        }
    }

    #[test]
    fn truncated_file_rejected() {
        let text = "geofuse-checkpoint 1\ntensor w 1 2\n1e0 2e0\n";
        assert!(Checkpoint::parse(text, Path::new("mem")).is_err());
        let bad = "geofuse-checkpoint 1\ntensor w 1 3\n1e0 2e0\nend\n";
        assert!(Checkpoint::parse(bad, Path::new("mem")).is_err());
    }
}
