//! `convert_unit`: physical quantities between units of the same dimension.

use super::ToolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Speed,
    Pressure,
    Temperature,
    Time,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    /// value_in_base = value * factor
    Linear(f64),
    /// value_in_base (°C) = (value + offset) * factor
    Affine { offset: f64, factor: f64 },
}

struct Unit {
    names: &'static [&'static str],
    dimension: Dimension,
    scale: Scale,
}

const UNITS: &[Unit] = &[
    // length, base m
    Unit { names: &["m", "meter", "meters", "metre", "metres"], dimension: Dimension::Length, scale: Scale::Linear(1.0) },
    Unit { names: &["ft", "foot", "feet"], dimension: Dimension::Length, scale: Scale::Linear(0.3048) },
    Unit { names: &["mm", "millimeter", "millimeters"], dimension: Dimension::Length, scale: Scale::Linear(0.001) },
    Unit { names: &["cm", "centimeter", "centimeters"], dimension: Dimension::Length, scale: Scale::Linear(0.01) },
    Unit { names: &["km", "kilometer", "kilometers"], dimension: Dimension::Length, scale: Scale::Linear(1000.0) },
    Unit { names: &["in", "inch", "inches"], dimension: Dimension::Length, scale: Scale::Linear(0.0254) },
    Unit { names: &["mi", "mile", "miles"], dimension: Dimension::Length, scale: Scale::Linear(1609.344) },
    Unit { names: &["nmi", "nautical_mile", "nautical_miles"], dimension: Dimension::Length, scale: Scale::Linear(1852.0) },
    // speed, base m/s
    Unit { names: &["m/s", "mps", "meters/second", "m/sec"], dimension: Dimension::Speed, scale: Scale::Linear(1.0) },
    Unit { names: &["kn", "kt", "kts", "knot", "knots"], dimension: Dimension::Speed, scale: Scale::Linear(0.514444) },
    Unit { names: &["km/h", "kmh", "kph", "kmph"], dimension: Dimension::Speed, scale: Scale::Linear(1.0 / 3.6) },
    Unit { names: &["mph", "mi/h"], dimension: Dimension::Speed, scale: Scale::Linear(0.44704) },
    Unit { names: &["ft/s", "fps"], dimension: Dimension::Speed, scale: Scale::Linear(0.3048) },
    // pressure, base kPa
    Unit { names: &["kpa"], dimension: Dimension::Pressure, scale: Scale::Linear(1.0) },
    Unit { names: &["pa"], dimension: Dimension::Pressure, scale: Scale::Linear(0.001) },
    Unit { names: &["mpa"], dimension: Dimension::Pressure, scale: Scale::Linear(1000.0) },
    Unit { names: &["psi"], dimension: Dimension::Pressure, scale: Scale::Linear(6.894757) },
    Unit { names: &["bar"], dimension: Dimension::Pressure, scale: Scale::Linear(100.0) },
    Unit { names: &["atm"], dimension: Dimension::Pressure, scale: Scale::Linear(101.325) },
    // temperature, base °C
    Unit { names: &["c", "°c", "degc", "celsius"], dimension: Dimension::Temperature, scale: Scale::Linear(1.0) },
    Unit { names: &["f", "°f", "degf", "fahrenheit"], dimension: Dimension::Temperature, scale: Scale::Affine { offset: -32.0, factor: 5.0 / 9.0 } },
    Unit { names: &["k", "kelvin"], dimension: Dimension::Temperature, scale: Scale::Affine { offset: -273.15, factor: 1.0 } },
    // time, base s
    Unit { names: &["s", "sec", "second", "seconds"], dimension: Dimension::Time, scale: Scale::Linear(1.0) },
    Unit { names: &["ms", "millisecond", "milliseconds"], dimension: Dimension::Time, scale: Scale::Linear(0.001) },
    Unit { names: &["min", "minute", "minutes"], dimension: Dimension::Time, scale: Scale::Linear(60.0) },
    Unit { names: &["h", "hr", "hour", "hours"], dimension: Dimension::Time, scale: Scale::Linear(3600.0) },
    // mass, base kg
    Unit { names: &["kg", "kilogram", "kilograms"], dimension: Dimension::Mass, scale: Scale::Linear(1.0) },
    Unit { names: &["g", "gram", "grams"], dimension: Dimension::Mass, scale: Scale::Linear(0.001) },
    Unit { names: &["lb", "lbs", "pound", "pounds"], dimension: Dimension::Mass, scale: Scale::Linear(0.45359237) },
];

fn lookup(name: &str) -> Option<&'static Unit> {
    let key = name.trim().to_lowercase().replace(' ', "");
    let key = key.strip_prefix("deg").filter(|k| k.len() == 1).map_or(key.clone(), |k| k.to_string());
    UNITS.iter().find(|u| u.names.contains(&key.as_str()))
}

/// Every spelling the converter accepts, grouped by dimension.
pub fn supported_units() -> Vec<(&'static str, Dimension)> {
    UNITS.iter().map(|u| (u.names[0], u.dimension)).collect()
}

/// Converts `value` from `from_unit` to `to_unit` (unrounded).
pub fn convert_unit(value: f64, from_unit: &str, to_unit: &str) -> Result<f64, ToolError> {
    let from = lookup(from_unit).ok_or_else(|| ToolError::Exec(format!("unknown unit `{from_unit}`")))?;
    let to = lookup(to_unit).ok_or_else(|| ToolError::Exec(format!("unknown unit `{to_unit}`")))?;
    if from.dimension != to.dimension {
        return Err(ToolError::Exec(format!(
            "cannot convert {:?} `{from_unit}` to {:?} `{to_unit}`",
            from.dimension, to.dimension
        )));
    }
    if !value.is_finite() {
        return Err(ToolError::Exec(format!("value {value} is not finite")));
    }
    if std::ptr::eq(from, to) {
        return Ok(value);
    }
    let base = match from.scale {
        Scale::Linear(f) => value * f,
        Scale::Affine { offset, factor } => (value + offset) * factor,
    };
    Ok(match to.scale {
        Scale::Linear(f) => base / f,
        Scale::Affine { offset, factor } => base / factor - offset,
    })
}
