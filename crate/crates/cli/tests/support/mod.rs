//! Test helpers: invoking the binary and validating JSON output against the
//! shipped schemas (a small draft-07 subset: types, properties/required,
//! items, enum, oneOf, local $ref, minItems/maxItems).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn repmix() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repmix"))
}

pub fn dataset_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn run_ok(args: &[&str]) -> String {
    let output = repmix().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "repmix {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("utf-8 output")
}

pub fn run_raw(args: &[&str]) -> Output {
    repmix().args(args).output().expect("binary runs")
}

pub fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(&path).expect("schema file exists");
    serde_json::from_str(&text).expect("schema parses")
}

pub fn validate_against_schema(name: &str, payload: &str) {
    let schema = schema(name);
    let value: Value = serde_json::from_str(payload).expect("output parses as JSON");
    if let Err(e) = validate(&schema, &schema, &value, "$") {
        panic!("schema `{name}` violated: {e}");
    }
}

fn resolve<'a>(root: &'a Value, reference: &str) -> &'a Value {
    let path = reference
        .strip_prefix("#/")
        .unwrap_or_else(|| panic!("only local refs supported, got {reference}"));
    let mut node = root;
    for key in path.split('/') {
        node = node
            .get(key)
            .unwrap_or_else(|| panic!("dangling $ref {reference}"));
    }
    node
}

fn type_matches(expected: &str, value: &Value) -> bool {
    match expected {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_u64() || value.is_i64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        other => panic!("unsupported type keyword {other}"),
    }
}

pub fn validate(schema: &Value, root: &Value, value: &Value, at: &str) -> Result<(), String> {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        return validate(resolve(root, reference), root, value, at);
    }

    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let hits = options
            .iter()
            .filter(|option| validate(option, root, value, at).is_ok())
            .count();
        if hits != 1 {
            return Err(format!("{at}: oneOf matched {hits} branches"));
        }
        return Ok(());
    }

    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{at}: {value} not in enum {allowed:?}"));
        }
        return Ok(());
    }

    match schema.get("type") {
        Some(Value::String(t)) => {
            if !type_matches(t, value) {
                return Err(format!("{at}: expected {t}, got {value}"));
            }
        }
        Some(Value::Array(types)) => {
            let ok = types
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(t, value));
            if !ok {
                return Err(format!("{at}: expected one of {types:?}, got {value}"));
            }
        }
        _ => {}
    }

    if let Some(object) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !object.contains_key(key) {
                    return Err(format!("{at}: missing required key `{key}`"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        if let Some(properties) = properties {
            for (key, item) in object {
                if let Some(subschema) = properties.get(key) {
                    validate(subschema, root, item, &format!("{at}.{key}"))?;
                } else if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                    return Err(format!("{at}: unexpected key `{key}`"));
                }
            }
        }
    }

    if let Some(array) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (array.len() as u64) < min {
                return Err(format!("{at}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (array.len() as u64) > max {
                return Err(format!("{at}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, item) in array.iter().enumerate() {
                validate(items, root, item, &format!("{at}[{i}]"))?;
            }
        }
    }

    Ok(())
}
