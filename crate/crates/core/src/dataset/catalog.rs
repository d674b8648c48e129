use std::fmt;

use serde::{Deserialize, Serialize};

/// Instant at which a transient-stability feature is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Snapshot {
    #[serde(rename = "static")]
    Static,
    /// Fault inception.
    #[serde(rename = "t0")]
    T0,
    /// Fault clearing.
    #[serde(rename = "tcl")]
    Tcl,
    #[serde(rename = "tcl+3c")]
    Tcl3c,
    #[serde(rename = "tcl+6c")]
    Tcl6c,
    #[serde(rename = "tcl+9c")]
    Tcl9c,
}

impl Snapshot {
    pub fn tag(self) -> &'static str {
        match self {
            Snapshot::Static => "static",
            Snapshot::T0 => "t0",
            Snapshot::Tcl => "tcl",
            Snapshot::Tcl3c => "tcl+3c",
            Snapshot::Tcl6c => "tcl+6c",
            Snapshot::Tcl9c => "tcl+9c",
        }
    }
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub snapshot: Snapshot,
    pub description: String,
}

/// The 33 system-level transient-stability features `Tz1`..`Tz33`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl FeatureCatalog {
    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const ROWS: [(Snapshot, &str); 33] = {
    use Snapshot::*;
    [
        (Static, "mean mechanical power of all generators"),
        (T0, "maximum initial acceleration over all generators"),
        (T0, "initial rotor angle of the generator with the largest acceleration"),
        (T0, "mean initial accelerating power over all generators"),
        (Tcl, "magnitude of the system impact"),
        (Tcl, "rotor angle of the generator deviating most from the centre of inertia"),
        (Tcl, "kinetic energy of the generator with the largest rotor angle"),
        (Tcl, "rotor angle of the generator with the largest kinetic energy"),
        (Tcl, "maximum rotor kinetic energy over all generators"),
        (Tcl, "mean rotor kinetic energy over all generators"),
        (Tcl, "maximum relative rotor swing angle"),
        (Tcl, "angular speed of the generator deviating most from the centre of inertia"),
        (Tcl3c, "magnitude of the system impact"),
        (Tcl3c, "maximum rotor kinetic energy over all generators"),
        (Tcl3c, "mean rotor kinetic energy over all generators"),
        (Tcl3c, "rotor angle of the generator deviating most from the centre of inertia"),
        (Tcl3c, "maximum relative rotor swing angle"),
        (Tcl3c, "kinetic energy of the generator with the largest rotor angle"),
        (Tcl3c, "angular speed of the generator deviating most from the centre of inertia"),
        (Tcl6c, "magnitude of the system impact"),
        (Tcl6c, "maximum rotor kinetic energy over all generators"),
        (Tcl6c, "mean rotor kinetic energy over all generators"),
        (Tcl6c, "kinetic energy of the generator with the largest rotor angle"),
        (Tcl6c, "rotor angle of the generator deviating most from the centre of inertia"),
        (Tcl6c, "maximum relative rotor swing angle"),
        (Tcl6c, "angular speed of the generator deviating most from the centre of inertia"),
        (Tcl9c, "magnitude of the system impact"),
        (Tcl9c, "kinetic energy of the generator with the largest rotor angle"),
        (Tcl9c, "maximum rotor kinetic energy over all generators"),
        (Tcl9c, "mean rotor kinetic energy over all generators"),
        (Tcl9c, "rotor angle of the generator deviating most from the centre of inertia"),
        (Tcl9c, "maximum relative rotor swing angle"),
        (Tcl9c, "angular speed of the generator deviating most from the centre of inertia"),
    ]
};

pub fn tz_catalog() -> FeatureCatalog {
    FeatureCatalog {
        entries: ROWS
            .iter()
            .enumerate()
            .map(|(i, &(snapshot, description))| CatalogEntry {
                id: format!("Tz{}", i + 1),
                snapshot,
                description: description.to_string(),
            })
            .collect(),
    }
}
