//! Named unary symbols defined by terms, and the unary basis behind `g`.

use std::collections::HashMap;

use thiserror::Error;

use crate::term::{ExtId, OpSymbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("`{0}` is not a valid symbol name")]
    InvalidName(String),
    #[error("`{0}` is already defined")]
    Duplicate(String),
    #[error("body of `{name}` must only use the variable x, found x{var}")]
    NotUnary { name: String, var: u32 },
    #[error("body of `{name}` refers to undefined symbol ext#{id}")]
    ForwardReference { name: String, id: ExtId },
}

/// A registered unary function `name(x) = body`.
#[derive(Debug, Clone)]
pub struct ExtDef {
    pub name: String,
    pub body: Term,
}

/// The closed set of user-defined unary symbols a family of terms may use.
///
/// Bodies may only refer to symbols registered before them, so evaluation of
/// a registered symbol always terminates.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    defs: Vec<ExtDef>,
    by_name: HashMap<String, ExtId>,
    g_basis: Option<Vec<ExtId>>,
}

const RESERVED: &[&str] = &[
    "exp2", "sq", "double", "succ", "pair", "pow", "L", "R", "l", "r", "h", "g",
];

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name)
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn define_unary(&mut self, name: &str, body: Term) -> Result<ExtId, RegistryError> {
        if !valid_name(name) {
            return Err(RegistryError::InvalidName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(RegistryError::Duplicate(name.to_string()));
        }
        if let Some(&var) = body.free_vars().iter().find(|&&v| v != 0) {
            return Err(RegistryError::NotUnary {
                name: name.to_string(),
                var,
            });
        }
        let next = self.defs.len() as ExtId;
        for sym in body.symbols() {
            if let OpSymbol::Ext(id) = sym {
                if id >= next {
                    return Err(RegistryError::ForwardReference {
                        name: name.to_string(),
                        id,
                    });
                }
            }
        }
        self.defs.push(ExtDef {
            name: name.to_string(),
            body,
        });
        self.by_name.insert(name.to_string(), next);
        Ok(next)
    }

    pub fn lookup(&self, name: &str) -> Option<ExtId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ExtId) -> Option<&ExtDef> {
        self.defs.get(id as usize)
    }

    pub fn name_of(&self, id: ExtId) -> Option<&str> {
        self.get(id).map(|d| d.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> impl Iterator<Item = (ExtId, &ExtDef)> {
        self.defs.iter().enumerate().map(|(i, d)| (i as ExtId, d))
    }

    /// Symbols `f0 .. f(k-1)` used by `g`; set through
    /// [`crate::bases::UnaryBasis::install`].
    pub fn g_basis(&self) -> Option<&[ExtId]> {
        self.g_basis.as_deref()
    }

    pub(crate) fn set_g_basis(&mut self, ids: Vec<ExtId>) {
        self.g_basis = Some(ids);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn define_and_lookup() {
        let mut reg = Registry::new();
        let id = reg.define_unary("twice", Term::add(Term::var(0), Term::var(0))).unwrap();
        assert_eq!(reg.lookup("twice"), Some(id));
        assert_eq!(reg.name_of(id), Some("twice"));
        assert_eq!(
            reg.define_unary("twice", Term::var(0)),
            Err(RegistryError::Duplicate("twice".into()))
        );
    }

    #[test]
    fn rejects_bad_definitions() {
        let mut reg = Registry::new();
        assert!(matches!(reg.define_unary("h", Term::var(0)), Err(RegistryError::InvalidName(_))));
        assert!(matches!(reg.define_unary("9a", Term::var(0)), Err(RegistryError::InvalidName(_))));
        assert!(matches!(
            reg.define_unary("f", Term::var(1)),
            Err(RegistryError::NotUnary { var: 1, .. })
        ));
        assert!(matches!(
            reg.define_unary("f", Term::ext(0, Term::var(0))),
            Err(RegistryError::ForwardReference { id: 0, .. })
        ));
    }
}
