//! SpectrumTree JSON with decimal-string big integers.

use std::str::FromStr;

use anyhow::{Context, Result};
use moran_core::spectra::{Shift, SpectrumTree};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftJson {
    pub ell: String,
    pub x: String,
    pub k: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub levels: Vec<Vec<String>>,
    pub boundaries: Vec<usize>,
    #[serde(default)]
    pub shifts: Vec<Vec<ShiftJson>>,
}

impl TreeJson {
    pub fn from_tree(t: &SpectrumTree) -> Self {
        Self {
            levels: t.levels.iter().map(|l| l.iter().map(|x| x.to_string()).collect()).collect(),
            boundaries: t.boundaries.clone(),
            shifts: t
                .shifts
                .iter()
                .map(|l| l.iter().map(|s| ShiftJson { ell: s.ell.to_string(), x: s.x.to_string(), k: s.k }).collect())
                .collect(),
        }
    }

    pub fn to_tree(&self) -> Result<SpectrumTree> {
        let int = |s: &String| BigInt::from_str(s).with_context(|| format!("bad integer {s:?}"));
        let levels = self.levels.iter().map(|l| l.iter().map(int).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        let mut shifts = self
            .shifts
            .iter()
            .map(|l| {
                l.iter()
                    .map(|s| {
                        let x = BigRational::from_str(&s.x).with_context(|| format!("bad rational {:?}", s.x))?;
                        Ok(Shift { ell: int(&s.ell)?, x, k: s.k })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        shifts.resize(levels.len(), Vec::new());
        let tree = SpectrumTree { levels, boundaries: self.boundaries.clone(), shifts };
        tree.validate()?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use moran_core::spectra::{canonical_levels, greedy_spectrum, GreedyParams};
    use moran_core::{EvalConfig, MoranSpec};

    #[test]
    fn round_trip() {
        let spec = MoranSpec::example45();
        for t in [
            canonical_levels(&spec, 3).unwrap(),
            greedy_spectrum(&spec, 2, &GreedyParams::default(), &EvalConfig::default()).unwrap(),
        ] {
            let j = serde_json::to_string(&TreeJson::from_tree(&t)).unwrap();
            let back: TreeJson = serde_json::from_str(&j).unwrap();
            assert_eq!(back.to_tree().unwrap(), t);
        }
    }

    #[test]
    fn rejects_unnested() {
        let t = TreeJson { levels: vec![vec!["0".into(), "1".into()], vec!["0".into(), "2".into()]], boundaries: vec![1, 2], shifts: vec![] };
        assert!(t.to_tree().is_err());
    }
}
