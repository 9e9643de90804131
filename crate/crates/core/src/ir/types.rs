//! The LLVM type system, as far as the translator needs it.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FloatKind {
    Half,
    BFloat,
    Float,
    Double,
    X86Fp80,
    Fp128,
    PpcFp128,
}

impl FloatKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FloatKind::Half => "half",
            FloatKind::BFloat => "bfloat",
            FloatKind::Float => "float",
            FloatKind::Double => "double",
            FloatKind::X86Fp80 => "x86_fp80",
            FloatKind::Fp128 => "fp128",
            FloatKind::PpcFp128 => "ppc_fp128",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "half" => FloatKind::Half,
            "bfloat" => FloatKind::BFloat,
            "float" => FloatKind::Float,
            "double" => FloatKind::Double,
            "x86_fp80" => FloatKind::X86Fp80,
            "fp128" => FloatKind::Fp128,
            "ppc_fp128" => FloatKind::PpcFp128,
            _ => return None,
        })
    }
}

/// A type as written in the IR.
///
/// Named structs are kept by name (`Named`) and resolved through the module's
/// type table, which keeps recursive types finite. Literal structs compare
/// structurally: two literal structs with the same field list are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeRef {
    Int(u32),
    Float(FloatKind),
    /// `pointee` is `None` for opaque `ptr`.
    Pointer {
        pointee: Option<Box<TypeRef>>,
        addrspace: u32,
    },
    Array(u64, Box<TypeRef>),
    Vector {
        len: u64,
        scalable: bool,
        elem: Box<TypeRef>,
    },
    Struct {
        fields: Vec<TypeRef>,
        packed: bool,
    },
    Named(String),
    Function {
        ret: Box<TypeRef>,
        params: Vec<TypeRef>,
        varargs: bool,
    },
    Void,
    Label,
    Token,
    Metadata,
    /// Anything the parser could not classify, plus opaque struct bodies.
    Opaque,
}

impl TypeRef {
    pub fn ptr_to(pointee: TypeRef) -> TypeRef {
        TypeRef::Pointer {
            pointee: Some(Box::new(pointee)),
            addrspace: 0,
        }
    }

    pub fn opaque_ptr() -> TypeRef {
        TypeRef::Pointer {
            pointee: None,
            addrspace: 0,
        }
    }

    pub fn i1() -> TypeRef {
        TypeRef::Int(1)
    }

    pub fn is_float(&self) -> bool {
        matches!(self, TypeRef::Float(_))
    }

    pub fn is_int(&self) -> bool {
        matches!(self, TypeRef::Int(_))
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, TypeRef::Pointer { .. })
    }

    pub fn int_width(&self) -> Option<u32> {
        match self {
            TypeRef::Int(w) => Some(*w),
            TypeRef::Vector { elem, .. } => elem.int_width(),
            _ => None,
        }
    }

    pub fn pointee(&self) -> Option<&TypeRef> {
        match self {
            TypeRef::Pointer { pointee, .. } => pointee.as_deref(),
            _ => None,
        }
    }

    /// Element type of an array or vector.
    pub fn element(&self) -> Option<&TypeRef> {
        match self {
            TypeRef::Array(_, elem) => Some(elem),
            TypeRef::Vector { elem, .. } => Some(elem),
            _ => None,
        }
    }

    /// Identifier-safe spelling used when naming generated record types.
    pub fn mangled(&self) -> String {
        match self {
            TypeRef::Int(w) => format!("i{w}"),
            TypeRef::Float(k) => k.keyword().to_string(),
            TypeRef::Pointer { .. } => "ptr".to_string(),
            TypeRef::Array(n, elem) => format!("a{n}x{}", elem.mangled()),
            TypeRef::Vector { len, elem, .. } => format!("v{len}x{}", elem.mangled()),
            TypeRef::Struct { fields, .. } => literal_struct_name(fields),
            TypeRef::Named(name) => name.clone(),
            TypeRef::Function { .. } => "fn".to_string(),
            TypeRef::Void => "void".to_string(),
            TypeRef::Label => "label".to_string(),
            TypeRef::Token => "token".to_string(),
            TypeRef::Metadata => "metadata".to_string(),
            TypeRef::Opaque => "opaque".to_string(),
        }
    }
}

/// `literal_` followed by the mangled field types joined with `_`.
pub fn literal_struct_name(fields: &[TypeRef]) -> String {
    let mut name = String::from("literal");
    for field in fields {
        name.push('_');
        name.push_str(&field.mangled());
    }
    name
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int(w) => write!(f, "i{w}"),
            TypeRef::Float(k) => f.write_str(k.keyword()),
            TypeRef::Pointer { pointee, addrspace } => {
                match pointee {
                    Some(inner) => write!(f, "{inner}")?,
                    None => f.write_str("ptr")?,
                }
                if *addrspace != 0 {
                    write!(f, " addrspace({addrspace})")?;
                }
                if pointee.is_some() {
                    f.write_str("*")?;
                }
                Ok(())
            }
            TypeRef::Array(n, elem) => write!(f, "[{n} x {elem}]"),
            TypeRef::Vector {
                len,
                scalable,
                elem,
            } => {
                if *scalable {
                    write!(f, "<vscale x {len} x {elem}>")
                } else {
                    write!(f, "<{len} x {elem}>")
                }
            }
            TypeRef::Struct { fields, packed } => {
                if *packed {
                    f.write_str("<")?;
                }
                f.write_str("{")?;
                for (i, field) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, " {field}")?;
                }
                f.write_str(if fields.is_empty() { "}" } else { " }" })?;
                if *packed {
                    f.write_str(">")?;
                }
                Ok(())
            }
            TypeRef::Named(name) => write!(f, "%{name}"),
            TypeRef::Function {
                ret,
                params,
                varargs,
            } => {
                write!(f, "{ret} (")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                if *varargs {
                    f.write_str(if params.is_empty() { "..." } else { ", ..." })?;
                }
                f.write_str(")")
            }
            TypeRef::Void => f.write_str("void"),
            TypeRef::Label => f.write_str("label"),
            TypeRef::Token => f.write_str("token"),
            TypeRef::Metadata => f.write_str("metadata"),
            TypeRef::Opaque => f.write_str("opaque"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_struct_equality_is_structural() {
        let a = TypeRef::Struct {
            fields: vec![TypeRef::Int(32), TypeRef::Int(8)],
            packed: false,
        };
        let b = TypeRef::Struct {
            fields: vec![TypeRef::Int(32), TypeRef::Int(8)],
            packed: false,
        };
        let swapped = TypeRef::Struct {
            fields: vec![TypeRef::Int(8), TypeRef::Int(32)],
            packed: false,
        };
        assert_eq!(a, b);
        assert_ne!(a, swapped);
    }

    #[test]
    fn display_round_trips_common_spellings() {
        assert_eq!(TypeRef::ptr_to(TypeRef::ptr_to(TypeRef::Int(8))).to_string(), "i8**");
        assert_eq!(TypeRef::opaque_ptr().to_string(), "ptr");
        let s = TypeRef::Struct {
            fields: vec![TypeRef::Int(32), TypeRef::Int(8)],
            packed: false,
        };
        assert_eq!(s.to_string(), "{ i32, i8 }");
        assert_eq!(
            TypeRef::Array(10, Box::new(TypeRef::Array(20, Box::new(TypeRef::Int(32))))).to_string(),
            "[10 x [20 x i32]]"
        );
    }

    #[test]
    fn mangled_names() {
        assert_eq!(literal_struct_name(&[TypeRef::Int(32), TypeRef::Int(8)]), "literal_i32_i8");
        assert_eq!(literal_struct_name(&[TypeRef::opaque_ptr(), TypeRef::Int(32)]), "literal_ptr_i32");
    }
}
