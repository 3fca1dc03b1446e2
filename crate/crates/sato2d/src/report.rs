//! Structured reports: a human-readable rendering plus a deterministic
//! JSON form (schema `sato2d/1`). All numbers are exact strings; nothing is
//! ever emitted as a float.

use sato2d_core::field::{rat_to_string, KField, Rat};
use sato2d_core::opalg::Trunc;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

impl Status {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// Window/bound qualification, empty when the verdict is absolute.
    pub scope: String,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub text: String,
    pub values: Value,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub field_text: String,
    pub trunc: Trunc,
    pub bounds: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub blocks: Vec<Block>,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn new(command: &str, field: &KField, trunc: Trunc) -> Self {
        let field_text = match field.extension_constant() {
            None => "Q".to_string(),
            Some(d) => format!("Q(sqrt,{})", rat_to_string(d)),
        };
        Report {
            command: command.to_string(),
            field_text,
            trunc,
            bounds: Vec::new(),
            seed: None,
            blocks: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn bound(&mut self, name: &str, value: impl ToString) {
        self.bounds.push((name.to_string(), value.to_string()));
    }

    pub fn block(&mut self, name: &str, text: impl Into<String>) {
        self.blocks.push(Block {
            name: name.to_string(),
            text: text.into(),
            values: Value::Null,
        });
    }

    pub fn block_with(&mut self, name: &str, text: impl Into<String>, values: Value) {
        self.blocks.push(Block {
            name: name.to_string(),
            text: text.into(),
            values,
        });
    }

    pub fn verdict(&mut self, name: &str, status: Status, scope: &str) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            status,
            scope: scope.to_string(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| v.status != Status::Fail)
    }

    pub fn to_json(&self) -> Value {
        let mut header = Map::new();
        header.insert("field".into(), json!(self.field_text));
        header.insert(
            "trunc".into(),
            json!({
                "nx": self.trunc.nx,
                "n1": self.trunc.n1,
                "smin": self.trunc.s_min,
                "smax": self.trunc.s_max,
            }),
        );
        let bounds: Map<String, Value> = self
            .bounds
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        header.insert("bounds".into(), Value::Object(bounds));
        if let Some(seed) = self.seed {
            header.insert("seed".into(), json!(seed));
        }
        json!({
            "schema": "sato2d/1",
            "command": self.command,
            "header": Value::Object(header),
            "blocks": self.blocks.iter().map(|b| json!({
                "name": b.name,
                "text": b.text,
                "values": b.values,
            })).collect::<Vec<_>>(),
            "verdicts": self.verdicts.iter().map(|v| json!({
                "name": v.name,
                "status": v.status.as_str(),
                "scope": v.scope,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {} | field {} | window nx={} n1={} d2 in [{}, {}]\n",
            self.command,
            self.field_text,
            self.trunc.nx,
            self.trunc.n1,
            self.trunc.s_min,
            self.trunc.s_max
        ));
        for (k, v) in &self.bounds {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed = {seed}\n"));
        }
        for b in &self.blocks {
            out.push_str(&format!("{}: {}\n", b.name, b.text));
        }
        for v in &self.verdicts {
            let scope = if v.scope.is_empty() {
                String::new()
            } else {
                format!(" [{}]", v.scope)
            };
            out.push_str(&format!("{}: {}{}\n", v.name, v.status.as_str(), scope));
        }
        out
    }
}

/// Exact string for a rational in report values.
pub fn rat_value(r: &Rat) -> Value {
    json!(rat_to_string(r))
}
