use std::fmt;

use serde::Serialize;

use crate::ast::{Payload, Sort};

use super::Endpoint;

/// Runtime values of the process language.
#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    Int(i64),
    Str(String),
    Bool(bool),
    /// A message value, as received or built with a sort constructor.
    Msg(Box<Message>),
    Endpoint(Endpoint),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Msg(m) => m.payload.as_int(),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Bool(_) => "bool",
            Value::Msg(_) => "message",
            Value::Endpoint(_) => "endpoint",
        }
    }

    /// Whether the value fits a sort's payload schema. Endpoints are
    /// checked by role and structural type.
    pub fn fits(&self, payload: &Payload) -> bool {
        match (self, payload) {
            (Value::Unit, Payload::None) | (Value::Int(_), Payload::Int) | (Value::Str(_), Payload::String) => true,
            (Value::Endpoint(e), Payload::Endpoint { role, local }) => {
                e.role() == role && crate::ast::struct_eq(&e.current_type(), local.as_ref())
            }
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => Ok(()),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Msg(m) => write!(f, "{m}"),
            Value::Endpoint(e) => write!(f, "endpoint {}", e.role()),
        }
    }
}

/// A message on the wire: a sort and a payload matching its schema.
#[derive(Clone, Debug)]
pub struct Message {
    pub sort: Sort,
    pub payload: Value,
    /// Position of the message in the run's communication log.
    pub seq: u64,
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.sort.name, self.payload)
    }
}

/// Payload summary for traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum PayloadRecord {
    Unit,
    Int(i64),
    Str(String),
    Endpoint(String),
}

impl From<&Value> for PayloadRecord {
    fn from(v: &Value) -> Self {
        match v {
            Value::Int(n) => PayloadRecord::Int(*n),
            Value::Str(s) => PayloadRecord::Str(s.clone()),
            Value::Endpoint(e) => PayloadRecord::Endpoint(e.role().to_string()),
            _ => PayloadRecord::Unit,
        }
    }
}

impl fmt::Display for PayloadRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadRecord::Unit => Ok(()),
            PayloadRecord::Int(n) => write!(f, "{n}"),
            PayloadRecord::Str(s) => write!(f, "{s:?}"),
            PayloadRecord::Endpoint(r) => write!(f, "endpoint {r}"),
        }
    }
}
