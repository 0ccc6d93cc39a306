//! Name-keyed registries for the interchangeable pieces of a run: kernels,
//! covariance models and segment integrators are each selected by a string
//! taken from the configuration file or the command line.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

type Factory<P, T> = Box<dyn Fn(&P) -> Result<Box<T>> + Send + Sync>;

/// Maps names to factories producing boxed trait objects of type `T` from
/// construction parameters `P`.
pub struct Registry<P, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Factory<P, T>>,
}

impl<P, T: ?Sized> Registry<P, T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&P) -> Result<Box<T>> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Box::new(factory));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => factory(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<P, T: ?Sized> fmt::Debug for Registry<P, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names().collect::<Vec<_>>())
            .finish()
    }
}
