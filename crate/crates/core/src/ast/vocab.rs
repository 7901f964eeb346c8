use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

/// The 41 canonical signal identifiers shared by every requirement.
pub const CANONICAL_SIGNALS: [&str; 41] = [
    "accel",
    "acceleration",
    "altitude",
    "amplitude",
    "brake",
    "brightness",
    "co2_level",
    "concentration",
    "current",
    "density",
    "dist",
    "distance",
    "flow_rate",
    "frequency",
    "fuel_level",
    "heading",
    "humidity",
    "load",
    "noise_level",
    "oxygen",
    "ph_level",
    "phase",
    "pitch",
    "power",
    "pressure",
    "roll",
    "rpm",
    "speed",
    "steering",
    "strain",
    "stress",
    "temp",
    "temperature",
    "throttle",
    "torque",
    "velocity",
    "voltage",
    "x_pos",
    "y_pos",
    "yaw",
    "z_pos",
];

const DEFAULT_ALIASES: &[(&str, &str)] = &[
    ("airspeed", "speed"),
    ("ground_speed", "speed"),
    ("obstacle_distance", "distance"),
    ("obstacle_dist", "dist"),
    ("co2", "co2_level"),
    ("co2_concentration", "co2_level"),
    ("ph", "ph_level"),
    ("flowrate", "flow_rate"),
    ("flow", "flow_rate"),
    ("noise", "noise_level"),
    ("fuel", "fuel_level"),
    ("pos_x", "x_pos"),
    ("pos_y", "y_pos"),
    ("pos_z", "z_pos"),
    ("position_x", "x_pos"),
    ("position_y", "y_pos"),
    ("position_z", "z_pos"),
    ("engine_speed", "rpm"),
    ("joint_torque", "torque"),
    ("contact_force", "load"),
    ("pollutant_concentration", "concentration"),
    ("steering_angle", "steering"),
    ("brake_pressure", "brake"),
];

/// Canonical signal names plus an alias table mapping alternate identifiers onto them.
#[derive(Debug, Clone)]
pub struct SignalVocabulary {
    names: BTreeSet<String>,
    aliases: HashMap<String, String>,
}

impl SignalVocabulary {
    /// The shared vocabulary used by the benchmark tooling.
    pub fn standard() -> &'static SignalVocabulary {
        static VOCAB: OnceLock<SignalVocabulary> = OnceLock::new();
        VOCAB.get_or_init(|| {
            SignalVocabulary::new(
                CANONICAL_SIGNALS.iter().map(|s| s.to_string()),
                DEFAULT_ALIASES
                    .iter()
                    .map(|(a, c)| (a.to_string(), c.to_string())),
            )
        })
    }

    pub fn new(
        names: impl IntoIterator<Item = String>,
        aliases: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        SignalVocabulary {
            names: names.into_iter().collect(),
            aliases: aliases.into_iter().collect(),
        }
    }

    pub fn is_canonical(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Resolves `name` (exactly, case-folded, or through an alias) to its canonical form.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        if let Some(n) = self.names.get(name) {
            return Some(n);
        }
        let folded = name.to_ascii_lowercase();
        if let Some(n) = self.names.get(&folded) {
            return Some(n);
        }
        self.aliases
            .get(name)
            .or_else(|| self.aliases.get(&folded))
            .map(String::as_str)
    }

    /// Canonical form when one exists, otherwise the name unchanged.
    pub fn normalize(&self, name: &str) -> String {
        self.resolve(name).unwrap_or(name).to_string()
    }
}
