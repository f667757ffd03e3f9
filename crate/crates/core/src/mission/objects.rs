use serde::{Deserialize, Serialize};

use super::MissionError;

/// Largest payload the airframe carries, kg.
pub const MAX_PAYLOAD: f64 = 0.4;

/// The catalog shipped with the crate.
pub const DEFAULT_CATALOG_TOML: &str = include_str!("../../config/objects.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    /// kg.
    pub mass: f64,
    /// Length along the flight direction, width across it, height; m.
    pub dims: [f64; 3],
    /// Vertical travel needed to clear the stand, m.
    pub lift_travel: f64,
    /// Capture width to use instead of `dims[1]`, for irregular shapes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_width: Option<f64>,
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<(), MissionError> {
        let positive = [self.mass, self.dims[0], self.dims[1], self.dims[2], self.lift_travel];
        if self.name.is_empty() || positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(MissionError::InvalidObject(format!("{}: fields must be positive", self.name)));
        }
        if self.mass > MAX_PAYLOAD {
            return Err(MissionError::InvalidObject(format!("{}: heavier than {MAX_PAYLOAD} kg", self.name)));
        }
        if let Some(w) = self.effective_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(MissionError::InvalidObject(format!("{}: effective_width must be positive", self.name)));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.dims[0]
    }

    /// Width the fingers must land within.
    pub fn width(&self) -> f64 {
        self.effective_width.unwrap_or(self.dims[1])
    }

    pub fn height(&self) -> f64 {
        self.dims[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectCatalog {
    #[serde(rename = "object")]
    pub objects: Vec<ObjectSpec>,
}

impl Default for ObjectCatalog {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CATALOG_TOML).expect("shipped catalog parses")
    }
}

impl ObjectCatalog {
    pub fn from_toml(text: &str) -> Result<Self, MissionError> {
        let cat: Self = toml::from_str(text).map_err(|e| MissionError::InvalidObject(e.to_string()))?;
        for (i, o) in cat.objects.iter().enumerate() {
            o.validate()?;
            if cat.objects[..i].iter().any(|p| p.name == o.name) {
                return Err(MissionError::InvalidObject(format!("duplicate object {}", o.name)));
            }
        }
        Ok(cat)
    }

    pub fn get(&self, name: &str) -> Result<&ObjectSpec, MissionError> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| MissionError::UnknownObject(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(|o| o.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_catalog() {
        let c = ObjectCatalog::default();
        assert_eq!(c.names().collect::<Vec<_>>(), ["styrofoam", "box", "roll", "bottle"]);
        let widths: Vec<f64> = c.objects.iter().map(ObjectSpec::width).collect();
        assert_eq!(widths, [0.14, 0.12, 0.08, 0.06]);
        assert_eq!(c.get("roll").unwrap().mass, 0.086);
        assert_eq!(c.get("styrofoam").unwrap().lift_travel, 0.01);
        assert!(matches!(c.get("anvil"), Err(MissionError::UnknownObject(_))));
    }

    #[test]
    fn rejects_heavy_and_duplicate() {
        let heavy = "[[object]]\nname='a'\nmass=0.5\ndims=[0.1,0.1,0.1]\nlift_travel=0.04\n";
        assert!(ObjectCatalog::from_toml(heavy).is_err());
        let one = "[[object]]\nname='a'\nmass=0.1\ndims=[0.1,0.1,0.1]\nlift_travel=0.04\n";
        assert!(ObjectCatalog::from_toml(one).is_ok());
        assert!(ObjectCatalog::from_toml(&format!("{one}{one}")).is_err());
    }
}
