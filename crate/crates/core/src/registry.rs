//! Name-keyed registries of interchangeable strategies.
//!
//! Each family (basis functions, boundary integrators, dense solvers) keeps
//! its constructors in a [`Registry`] so front ends can select an
//! implementation by name at runtime.

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Registry<C> {
    family: &'static str,
    entries: Vec<Entry<C>>,
}

#[derive(Clone)]
struct Entry<C> {
    name: &'static str,
    aliases: &'static [&'static str],
    summary: &'static str,
    ctor: C,
}

impl<C: Clone> Registry<C> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: Vec::new(),
        }
    }

    /// Adds or replaces the entry called `name`.
    pub fn register(&mut self, name: &'static str, summary: &'static str, ctor: C) -> &mut Self {
        self.register_with_aliases(name, &[], summary, ctor)
    }

    pub fn register_with_aliases(
        &mut self,
        name: &'static str,
        aliases: &'static [&'static str],
        summary: &'static str,
        ctor: C,
    ) -> &mut Self {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            aliases,
            summary,
            ctor,
        });
        self
    }

    /// Constructor registered under `name` or one of its aliases
    /// (case-insensitive).
    pub fn get(&self, name: &str) -> Result<C> {
        let key = name.trim().to_ascii_lowercase();
        self.entries
            .iter()
            .find(|e| e.name == key || e.aliases.contains(&key.as_str()))
            .map(|e| e.ctor.clone())
            .ok_or_else(|| Error::UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }

    pub fn family(&self) -> &'static str {
        self.family
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_aliases() {
        let mut r: Registry<fn() -> u32> = Registry::new("number");
        r.register("one", "1", || 1)
            .register_with_aliases("two", &["deux"], "2", || 2);
        assert_eq!(r.get("one").unwrap()(), 1);
        assert_eq!(r.get("DEUX").unwrap()(), 2);
        assert_eq!(r.names(), vec!["one", "two"]);
        let err = r.get("three").unwrap_err().to_string();
        assert!(err.contains("one, two"), "{err}");
    }

    #[test]
    fn re_registering_replaces() {
        let mut r: Registry<fn() -> u32> = Registry::new("number");
        r.register("one", "", || 1).register("one", "", || 11);
        assert_eq!(r.names().len(), 1);
        assert_eq!(r.get("one").unwrap()(), 11);
    }
}
