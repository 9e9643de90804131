use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::ir::{Location, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! node_kinds {
    ($($kind:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum NodeKind {
            $($kind,)*
        }

        impl NodeKind {
            pub const ALL: &'static [NodeKind] = &[$(NodeKind::$kind,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$kind => stringify!($kind),)*
                }
            }

            pub fn parse(s: &str) -> Option<NodeKind> {
                match s {
                    $(stringify!($kind) => Some(NodeKind::$kind),)*
                    _ => None,
                }
            }
        }
    };
}

node_kinds! {
    TranslationUnit,
    FunctionDeclaration,
    ParameterDeclaration,
    VariableDeclaration,
    RecordDeclaration,
    FieldDeclaration,
    CompoundStatement,
    IfStatement,
    SwitchStatement,
    CaseStatement,
    GotoStatement,
    LabelStatement,
    ReturnStatement,
    TryStatement,
    CatchClause,
    ThrowStatement,
    BinaryOperator,
    UnaryOperator,
    CastExpression,
    CallExpression,
    MemberExpression,
    ArraySubscriptionExpression,
    DeclaredReferenceExpression,
    Literal,
    ConditionalExpression,
    ProblemNode,
}

impl NodeKind {
    pub fn is_declaration(self) -> bool {
        matches!(
            self,
            NodeKind::FunctionDeclaration
                | NodeKind::ParameterDeclaration
                | NodeKind::VariableDeclaration
                | NodeKind::RecordDeclaration
                | NodeKind::FieldDeclaration
        )
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::CompoundStatement
                | NodeKind::IfStatement
                | NodeKind::SwitchStatement
                | NodeKind::CaseStatement
                | NodeKind::GotoStatement
                | NodeKind::LabelStatement
                | NodeKind::ReturnStatement
                | NodeKind::TryStatement
                | NodeKind::CatchClause
                | NodeKind::ThrowStatement
        )
    }

    /// Properties that must be supplied when a node of this kind is created.
    pub fn required_properties(self) -> &'static [&'static str] {
        match self {
            NodeKind::BinaryOperator | NodeKind::UnaryOperator => &["operatorCode"],
            NodeKind::Literal => &["value"],
            _ => &[],
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "AST")]
    Ast,
    #[serde(rename = "EOG")]
    Eog,
    #[serde(rename = "DFG")]
    Dfg,
    #[serde(rename = "REFERS_TO")]
    RefersTo,
    #[serde(rename = "TYPE")]
    Type,
    #[serde(rename = "FIELD")]
    Field,
}

impl EdgeKind {
    pub const ALL: &'static [EdgeKind] = &[
        EdgeKind::Ast,
        EdgeKind::Eog,
        EdgeKind::Dfg,
        EdgeKind::RefersTo,
        EdgeKind::Type,
        EdgeKind::Field,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Ast => "AST",
            EdgeKind::Eog => "EOG",
            EdgeKind::Dfg => "DFG",
            EdgeKind::RefersTo => "REFERS_TO",
            EdgeKind::Type => "TYPE",
            EdgeKind::Field => "FIELD",
        }
    }

    pub fn parse(s: &str) -> Option<EdgeKind> {
        EdgeKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Property value. Non-finite floats serialize as strings so JSON stays valid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PropValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl PropValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            PropValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            PropValue::Int(i) => Some(*i),
            _ => None,
        }
    }
}

impl Serialize for PropValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PropValue::Bool(b) => s.serialize_bool(*b),
            PropValue::Int(i) => s.serialize_i64(*i),
            PropValue::Float(f) if f.is_finite() => s.serialize_f64(*f),
            PropValue::Float(f) => s.serialize_str(&float_text(*f)),
            PropValue::Str(v) => s.serialize_str(v),
        }
    }
}

fn float_text(f: f64) -> String {
    if f.is_nan() {
        "NaN".to_string()
    } else if f > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropValue::Bool(b) => write!(f, "{b}"),
            PropValue::Int(i) => write!(f, "{i}"),
            PropValue::Float(v) if v.is_finite() => write!(f, "{v:?}"),
            PropValue::Float(v) => f.write_str(&float_text(*v)),
            PropValue::Str(s) => f.write_str(s),
        }
    }
}

impl From<bool> for PropValue {
    fn from(v: bool) -> Self {
        PropValue::Bool(v)
    }
}

impl From<i64> for PropValue {
    fn from(v: i64) -> Self {
        PropValue::Int(v)
    }
}

impl From<f64> for PropValue {
    fn from(v: f64) -> Self {
        PropValue::Float(v)
    }
}

impl From<&str> for PropValue {
    fn from(v: &str) -> Self {
        PropValue::Str(v.to_string())
    }
}

impl From<String> for PropValue {
    fn from(v: String) -> Self {
        PropValue::Str(v)
    }
}

pub type Properties = BTreeMap<String, PropValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct CpgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: Option<String>,
    pub code: String,
    pub ty: TypeRef,
    pub properties: Properties,
    pub location: Option<Location>,
}

impl CpgNode {
    pub fn prop(&self, key: &str) -> Option<&PropValue> {
        self.properties.get(key)
    }

    pub fn prop_str(&self, key: &str) -> Option<&str> {
        self.prop(key).and_then(PropValue::as_str)
    }

    pub fn operator(&self) -> Option<&str> {
        self.prop_str("operatorCode")
    }

    pub fn name_is(&self, name: &str) -> bool {
        self.name.as_deref() == Some(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub properties: Properties,
}

/// Template for a node to be created; see [`crate::cpg::CpgGraph::new_node`].
#[derive(Debug, Clone)]
pub struct NewNode {
    pub kind: NodeKind,
    pub name: Option<String>,
    pub code: String,
    pub ty: TypeRef,
    pub properties: Properties,
    pub location: Option<Location>,
}

impl NewNode {
    pub fn new(kind: NodeKind) -> Self {
        NewNode {
            kind,
            name: None,
            code: String::new(),
            ty: TypeRef::Void,
            properties: Properties::new(),
            location: None,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn code(mut self, code: impl Into<String>) -> Self {
        self.code = code.into();
        self
    }

    pub fn ty(mut self, ty: TypeRef) -> Self {
        self.ty = ty;
        self
    }

    pub fn prop(mut self, key: &str, value: impl Into<PropValue>) -> Self {
        self.properties.insert(key.to_string(), value.into());
        self
    }

    pub fn at(mut self, location: Option<Location>) -> Self {
        self.location = location;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_roundtrip() {
        assert_eq!(NodeKind::ALL.len(), 26);
        for &k in NodeKind::ALL {
            assert_eq!(NodeKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(NodeKind::parse("Nope"), None);
    }

    #[test]
    fn non_finite_floats_serialize_as_text() {
        let json = |v: f64| serde_json::to_string(&PropValue::Float(v)).unwrap();
        assert_eq!(json(f64::NAN), r#""NaN""#);
        assert_eq!(json(f64::NEG_INFINITY), r#""-inf""#);
        assert_eq!(json(1.5), "1.5");
        assert_eq!(PropValue::Float(2.0).to_string(), "2.0");
    }
}
