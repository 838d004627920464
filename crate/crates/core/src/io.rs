//! Configuration files and report files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::engine::replication_seed;
use crate::error::{ConfigError, RunError};
use crate::experiments::{run_scenario, RunPlan, ScenarioReport, Sufficiency};
use crate::metrics::MeasureStat;
use crate::model::{validate_config, Department, DepartmentConfig};

pub const ATV_JSON: &str = include_str!("../configs/atv.json");
pub const WW_JSON: &str = include_str!("../configs/ww.json");

pub const REPORT_SCHEMA_ID: &str = "storesim-report/1";

pub fn bundled_config(d: Department) -> &'static str {
    match d {
        Department::Atv => ATV_JSON,
        Department::Ww => WW_JSON,
    }
}

/// Parses and validates a config document. Every violation is reported.
pub fn parse_config(text: &str) -> Result<DepartmentConfig, ConfigError> {
    let cfg: DepartmentConfig = serde_json::from_str(text)?;
    let violations = validate_config(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(
            violations.iter().map(|v| v.to_string()).collect(),
        ))
    }
}

pub fn load_config(path: &Path) -> Result<DepartmentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Canonical serialisation: pretty JSON with a trailing newline.
pub fn config_to_json(cfg: &DepartmentConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serialises");
    s.push('\n');
    s
}

pub fn config_hash(cfg: &DepartmentConfig) -> String {
    hex::encode(Sha256::digest(config_to_json(cfg).as_bytes()))
}

/// What is needed to rerun a report exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub plan: RunPlan,
    pub base_seed: u64,
    pub replication_seeds: Vec<u64>,
    pub config_sha256: String,
    pub config: DepartmentConfig,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema: String,
    pub provenance: Provenance,
    pub rota: crate::model::Rota,
    pub proactivity: crate::model::ProactivityParams,
    pub measures: Vec<MeasureStat>,
    pub per_replication: Vec<Vec<Option<f64>>>,
    pub sufficiency: Option<Sufficiency>,
}

impl ReportDocument {
    pub fn new(cfg: &DepartmentConfig, report: &ScenarioReport) -> Self {
        let plan = report.plan;
        Self {
            schema: REPORT_SCHEMA_ID.to_string(),
            provenance: Provenance {
                plan,
                base_seed: plan.base_seed,
                replication_seeds: (0..plan.replications)
                    .map(|r| replication_seed(plan.base_seed, r))
                    .collect(),
                config_sha256: config_hash(cfg),
                config: cfg.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            rota: report.rota,
            proactivity: report.proactivity,
            measures: report.measures.clone(),
            per_replication: report.per_replication.clone(),
            sufficiency: report.sufficiency,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reruns the embedded plan on the embedded config. The config hash is
    /// checked first so a tampered document is refused.
    pub fn regenerate(&self) -> Result<ReportDocument, RunError> {
        let cfg = &self.provenance.config;
        if config_hash(cfg) != self.provenance.config_sha256 {
            return Err(RunError::Plan(
                "embedded config does not match its hash".into(),
            ));
        }
        let run = run_scenario(cfg, &self.provenance.plan)?;
        Ok(ReportDocument::new(cfg, &run.report))
    }
}

/// One row per measure: id, name, mean, sd. Missing values are empty.
pub fn measures_to_csv(measures: &[MeasureStat]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "name", "mean", "sd"])
        .expect("in-memory write");
    let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for m in measures {
        w.write_record([m.id.to_string(), m.name.clone(), fmt(m.mean), fmt(m.sd)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Schema of [`ReportDocument`], written next to each report. Uses the
/// `type`/`required`/`properties`/`items`/`minItems`/`maxItems` subset of
/// JSON Schema, which [`validate_against`] understands.
pub fn report_schema() -> Value {
    let number_or_null = json!({"type": ["number", "null"]});
    json!({
        "$id": REPORT_SCHEMA_ID,
        "type": "object",
        "required": ["schema", "provenance", "rota", "proactivity", "measures", "per_replication", "sufficiency"],
        "properties": {
            "schema": {"type": "string"},
            "provenance": {
                "type": "object",
                "required": ["plan", "base_seed", "replication_seeds", "config_sha256", "config", "version"],
                "properties": {
                    "plan": {"type": "object", "required": ["scenario", "weeks", "replications", "base_seed"]},
                    "base_seed": {"type": "integer"},
                    "replication_seeds": {"type": "array", "items": {"type": "integer"}},
                    "config_sha256": {"type": "string"},
                    "config": {"type": "object"},
                    "version": {"type": "string"}
                }
            },
            "rota": {"type": "object", "required": ["cashiers", "normal", "expert"]},
            "proactivity": {"type": "object"},
            "measures": {
                "type": "array",
                "minItems": 29,
                "maxItems": 29,
                "items": {
                    "type": "object",
                    "required": ["id", "name", "mean", "sd", "n"],
                    "properties": {
                        "id": {"type": "integer"},
                        "name": {"type": "string"},
                        "mean": number_or_null,
                        "sd": number_or_null,
                        "n": {"type": "integer"}
                    }
                }
            },
            "per_replication": {
                "type": "array",
                "items": {"type": "array", "minItems": 29, "maxItems": 29, "items": number_or_null}
            },
            "sufficiency": {"type": ["object", "null"]}
        }
    })
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// Checks `doc` against a schema in the subset emitted by
/// [`report_schema`]. Returns one message per failure, with a JSON pointer.
pub fn validate_against(schema: &Value, doc: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, doc, String::new(), &mut errors);
    errors
}

fn check(schema: &Value, v: &Value, at: String, errors: &mut Vec<String>) {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(ts) => ts
                .iter()
                .filter_map(Value::as_str)
                .any(|s| type_matches(s, v)),
            _ => true,
        };
        if !ok {
            errors.push(format!("{at}: expected type {t}"));
            return;
        }
    }
    if let (Some(req), Some(obj)) = (
        schema.get("required").and_then(Value::as_array),
        v.as_object(),
    ) {
        for key in req.iter().filter_map(Value::as_str) {
            if !obj.contains_key(key) {
                errors.push(format!("{at}: missing {key}"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (
        schema.get("properties").and_then(Value::as_object),
        v.as_object(),
    ) {
        for (key, sub) in props {
            if let Some(child) = obj.get(key) {
                check(sub, child, format!("{at}/{key}"), errors);
            }
        }
    }
    if let Some(arr) = v.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < min {
                errors.push(format!("{at}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (arr.len() as u64) > max {
                errors.push(format!("{at}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, x) in arr.iter().enumerate() {
                check(items, x, format!("{at}/{i}"), errors);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CustomerKind;

    #[test]
    fn bundled_configs_round_trip_byte_for_byte() {
        assert_eq!(config_to_json(&DepartmentConfig::atv()), ATV_JSON);
        assert_eq!(config_to_json(&DepartmentConfig::ww()), WW_JSON);
        let atv = parse_config(ATV_JSON).unwrap();
        assert_eq!(atv, DepartmentConfig::atv());
        assert_eq!(atv.probabilities.buy_after_browse, 0.37);
        let ww = parse_config(WW_JSON).unwrap();
        assert_eq!(ww.mix.share(CustomerKind::ShoppingEnthusiast), 0.8);
        assert_eq!(ww.mix.share(CustomerKind::DisinterestedShopper), 0.2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = ATV_JSON.replacen("\"pool_size\"", "\"pool_sise\"", 1);
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_config("{\n  \"department\": \"atv\",\n  oops\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn violations_are_listed_exhaustively() {
        let mut cfg = DepartmentConfig::atv();
        cfg.rota.real.normal = -1;
        cfg.probabilities.require_help = 2.0;
        let err = parse_config(&config_to_json(&cfg)).unwrap_err();
        match err {
            ConfigError::Invalid(v) => {
                assert!(
                    v.iter().any(|m| m == "rota.real.normal: negative-count"),
                    "{v:?}"
                );
                assert!(
                    v.iter()
                        .any(|m| m.starts_with("probabilities.require_help")),
                    "{v:?}"
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_changes_with_content() {
        let a = DepartmentConfig::atv();
        let mut b = a.clone();
        b.pool_size += 1;
        assert_eq!(config_hash(&a).len(), 64);
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn schema_subset_validator() {
        let schema = json!({"type": "object", "required": ["a"], "properties": {
            "a": {"type": "array", "maxItems": 2, "items": {"type": ["number", "null"]}}
        }});
        assert!(validate_against(&schema, &json!({"a": [1, null]})).is_empty());
        assert_eq!(
            validate_against(&schema, &json!({"a": [1, "x", 3]})).len(),
            2
        );
        assert_eq!(
            validate_against(&schema, &json!({})),
            vec![": missing a".to_string()]
        );
    }
}
