use std::collections::HashMap;

use crate::calendar::DayType;
use crate::error::{Error, Result};
use crate::tusdata::TaskCatalog;

pub type ActivityId = u16;

/// No selectable task.
pub const IDLE: ActivityId = 0;
/// Household absent for the day.
pub const AWAY: ActivityId = 1;

/// Interned activity codes shared by every catalog of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityTable {
    names: Vec<String>,
    index: HashMap<String, ActivityId>,
}

impl Default for ActivityTable {
    fn default() -> Self {
        let mut t = ActivityTable { names: Vec::new(), index: HashMap::new() };
        t.intern("idle");
        t.intern("away");
        t
    }
}

impl ActivityTable {
    pub fn intern(&mut self, code: &str) -> ActivityId {
        if let Some(&id) = self.index.get(code) {
            return id;
        }
        let id = ActivityId::try_from(self.names.len()).expect("fewer than 65536 activity codes");
        self.names.push(code.to_string());
        self.index.insert(code.to_string(), id);
        id
    }

    pub fn id(&self, code: &str) -> Option<ActivityId> {
        self.index.get(code).copied()
    }

    pub fn name(&self, id: ActivityId) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A catalog with interned activity ids and a per-(type, day type) lookup cache.
#[derive(Debug, Clone)]
pub struct CompiledCatalog {
    pub catalog: TaskCatalog,
    pub activity: Vec<ActivityId>,
    cache: HashMap<(String, DayType), Vec<usize>>,
}

impl CompiledCatalog {
    /// Interns the catalog's codes into `table` and pre-resolves `type_keys`.
    pub fn new<'a>(
        catalog: TaskCatalog,
        table: &mut ActivityTable,
        type_keys: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let activity = catalog.specs.iter().map(|s| table.intern(&s.activity_code)).collect();
        let mut cache = HashMap::new();
        for key in type_keys {
            for dt in DayType::ALL {
                cache.entry((key.to_string(), dt)).or_insert_with(|| catalog.resolve(key, dt));
            }
        }
        CompiledCatalog { catalog, activity, cache }
    }

    pub fn resolve(&self, type_key: &str, day_type: DayType) -> Vec<usize> {
        match self.cache.get(&(type_key.to_string(), day_type)) {
            Some(v) => v.clone(),
            None => self.catalog.resolve(type_key, day_type),
        }
    }

    pub fn resolve_nonempty(&self, type_key: &str, day_type: DayType) -> Result<Vec<usize>> {
        let r = self.resolve(type_key, day_type);
        if r.is_empty() {
            return Err(Error::EmptyCatalog { type_key: type_key.to_string(), day_type: day_type.to_string() });
        }
        Ok(r)
    }
}
