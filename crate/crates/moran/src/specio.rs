//! MoranSpec JSON files and built-in names.

use std::path::Path;

use anyhow::{bail, Context, Result};
use moran_core::{Family, MoranSpec, Stage, TailRule};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageJson {
    #[serde(rename = "N")]
    pub modulus: u64,
    #[serde(rename = "B")]
    pub digits: Vec<u64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailWord {
    Finite,
    Repeat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailJson {
    Rule(TailWord),
    Family {
        family: String,
        #[serde(default, skip_serializing_if = "Value::is_null")]
        params: Value,
    },
}

fn finite() -> TailJson {
    TailJson::Rule(TailWord::Finite)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default)]
    pub stages: Vec<StageJson>,
    #[serde(default = "finite")]
    pub tail: TailJson,
}

#[derive(Deserialize)]
struct BourgainParams {
    set: Vec<u64>,
    #[serde(default = "default_padding")]
    padding: u32,
}

fn default_padding() -> u32 {
    12
}

fn family_from(name: &str, params: &Value) -> Result<Family> {
    Ok(match name {
        "jp4" => Family::Jp4,
        "example45" => Family::Example45,
        "example92" => Family::Example92,
        "bourgain" => {
            let p: BourgainParams = serde_json::from_value(params.clone()).context("bourgain params need {\"set\": [...], \"padding\": n}")?;
            Family::Bourgain { set: p.set, padding: p.padding }
        }
        other => bail!("unknown family {other:?} (known: jp4, example45, example92, bourgain)"),
    })
}

impl SpecFile {
    pub fn to_spec(&self) -> Result<MoranSpec> {
        let prefix = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| Stage::new(s.modulus, s.digits.clone(), s.spectrum.clone()).with_context(|| format!("stage {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let tail = match &self.tail {
            TailJson::Rule(TailWord::Finite) => TailRule::Finite,
            TailJson::Rule(TailWord::Repeat) => TailRule::PeriodicRepeat,
            TailJson::Family { family, params } => TailRule::Parametric(family_from(family, params)?),
        };
        Ok(MoranSpec::new(prefix, tail)?)
    }

    pub fn from_spec(spec: &MoranSpec) -> Self {
        let stages = spec
            .prefix
            .iter()
            .map(|s| StageJson { modulus: s.modulus, digits: s.digits.clone(), spectrum: s.spectrum.clone() })
            .collect();
        let tail = match &spec.tail {
            TailRule::Finite => TailJson::Rule(TailWord::Finite),
            TailRule::PeriodicRepeat => TailJson::Rule(TailWord::Repeat),
            TailRule::Parametric(f) => TailJson::Family {
                family: f.name().into(),
                params: match f {
                    Family::Bourgain { set, padding } => json!({ "set": set, "padding": padding }),
                    _ => Value::Null,
                },
            },
        };
        Self { stages, tail }
    }
}

/// A built-in name, inline JSON, or a path to a JSON file.
pub fn load_spec(arg: &str) -> Result<MoranSpec> {
    match arg {
        "jp4" => return Ok(MoranSpec::jp4()),
        "example45" => return Ok(MoranSpec::example45()),
        "example92" => return Ok(MoranSpec::example92()),
        _ => {}
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).with_context(|| format!("reading spec {arg}"))?
    };
    let file: SpecFile = serde_json::from_str(&text).with_context(|| format!("parsing spec {arg}"))?;
    file.to_spec()
}

/// Inline JSON that reloads to the same spec.
pub fn inline_spec(spec: &MoranSpec) -> String {
    serde_json::to_string(&SpecFile::from_spec(spec)).expect("spec serializes")
}
