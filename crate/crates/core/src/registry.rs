//! Name-keyed factories for the pluggable strategies (chunkers, cipher suites,
//! backends).

use std::collections::BTreeMap;
use std::fmt;

/// Error for a lookup of a name nobody registered.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{name}` (available: {available})")]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: String,
}

/// Builds a boxed `T` from construction arguments `A`.
pub type Factory<A, T, E> = fn(&A) -> Result<Box<T>, E>;

pub struct Registry<A: ?Sized, T: ?Sized, E> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<A, T, E>>,
}

impl<A: ?Sized, T: ?Sized, E> Registry<A, T, E>
where
    E: From<UnknownStrategy>,
{
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<A, T, E>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn build(&self, name: &str, args: &A) -> Result<Box<T>, E> {
        match self.entries.get(name) {
            Some(factory) => factory(args),
            None => Err(UnknownStrategy {
                kind: self.kind,
                name: name.to_owned(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }
            .into()),
        }
    }
}

impl<A: ?Sized, T: ?Sized, E> fmt::Debug for Registry<A, T, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
