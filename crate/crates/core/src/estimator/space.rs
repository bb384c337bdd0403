use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EstimatorError, StateVector, ACTIVITY, AROUSAL, SOCIAL, STRESS, VALENCE};

/// Axis-aligned box over some of the space's dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub bounds: BTreeMap<String, [f64; 2]>,
    /// Routes must stay out of disorder regions.
    #[serde(default)]
    pub disorder: bool,
}

impl Region {
    pub fn new(label: &str, bounds: &[(&str, f64, f64)]) -> Self {
        Region {
            label: label.to_string(),
            bounds: bounds.iter().map(|(d, lo, hi)| (d.to_string(), [*lo, *hi])).collect(),
            disorder: false,
        }
    }

    pub fn disorder(mut self) -> Self {
        self.disorder = true;
        self
    }

    /// Boundary-inclusive containment on the region's declared dimensions.
    pub fn contains(&self, state: &StateVector) -> bool {
        self.bounds
            .iter()
            .all(|(d, [lo, hi])| state.get(d).is_some_and(|v| *lo <= v && v <= *hi))
    }

    pub fn contains_point(&self, dims: &[String], point: &[f64]) -> bool {
        self.bounds.iter().all(|(d, [lo, hi])| {
            dims.iter()
                .position(|x| x == d)
                .is_some_and(|i| *lo <= point[i] && point[i] <= *hi)
        })
    }
}

fn default_grid() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub dimensions: Vec<String>,
    pub regions: Vec<Region>,
    #[serde(default = "default_grid")]
    pub grid: u32,
}

impl StateSpace {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let dims: BTreeSet<&String> = self.dimensions.iter().collect();
        if dims.len() != self.dimensions.len() {
            return Err(EstimatorError::InvalidSpace("duplicate dimension".into()));
        }
        if self.grid < 2 {
            return Err(EstimatorError::InvalidSpace("grid must be at least 2".into()));
        }
        let mut labels = BTreeSet::new();
        for r in &self.regions {
            if !labels.insert(&r.label) {
                return Err(EstimatorError::InvalidSpace(format!("duplicate region {:?}", r.label)));
            }
            if r.bounds.is_empty() {
                return Err(EstimatorError::InvalidSpace(format!("region {:?} has no bounds", r.label)));
            }
            for (d, [lo, hi]) in &r.bounds {
                if !dims.contains(d) {
                    return Err(EstimatorError::InvalidSpace(format!("region {:?} uses unknown dimension {d:?}", r.label)));
                }
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                    return Err(EstimatorError::InvalidSpace(format!("region {:?} bounds on {d} are not a box in [0,1]", r.label)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EstimatorError> {
        let s: StateSpace =
            serde_json::from_str(text).map_err(|e| EstimatorError::InvalidSpace(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn region(&self, label: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.label == label)
    }

    /// Valence by arousal with depressive and chronic-stress boxes.
    pub fn demo_2d() -> Self {
        StateSpace {
            dimensions: vec![VALENCE.into(), AROUSAL.into()],
            regions: vec![
                Region::new("healthy", &[(VALENCE, 0.55, 1.0), (AROUSAL, 0.3, 0.7)]),
                Region::new("depressive", &[(VALENCE, 0.0, 0.35), (AROUSAL, 0.0, 0.4)]).disorder(),
                Region::new("chronic_stress", &[(VALENCE, 0.0, 0.45), (AROUSAL, 0.7, 1.0)]).disorder(),
            ],
            grid: 10,
        }
    }

    pub fn production_5d() -> Self {
        StateSpace {
            dimensions: vec![VALENCE.into(), AROUSAL.into(), STRESS.into(), ACTIVITY.into(), SOCIAL.into()],
            regions: vec![
                Region::new(
                    "healthy",
                    &[(VALENCE, 0.55, 1.0), (STRESS, 0.0, 0.5), (ACTIVITY, 0.4, 1.0), (SOCIAL, 0.3, 1.0)],
                ),
                Region::new("depressive", &[(VALENCE, 0.0, 0.35), (ACTIVITY, 0.0, 0.3)]).disorder(),
                Region::new("chronic_stress", &[(STRESS, 0.75, 1.0), (AROUSAL, 0.7, 1.0)]).disorder(),
            ],
            grid: 10,
        }
    }
}

/// Labels of every region containing the state.
pub fn classify_regions(state: &StateVector, space: &StateSpace) -> Result<Vec<String>, EstimatorError> {
    if let Some(d) = state.dims.keys().find(|d| !space.dimensions.contains(d)) {
        return Err(EstimatorError::DimensionMismatch(d.clone()));
    }
    Ok(space
        .regions
        .iter()
        .filter(|r| r.contains(state))
        .map(|r| r.label.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn boundary_inclusive_membership() {
        let space = StateSpace {
            dimensions: vec![VALENCE.into(), STRESS.into()],
            regions: vec![Region::new("healthy", &[(VALENCE, 0.35, 1.0), (STRESS, 0.0, 0.5)])],
            grid: 10,
        };
        let s = StateVector::new(0).with(VALENCE, 0.5).with(STRESS, 0.5);
        assert_eq!(classify_regions(&s, &space).unwrap(), vec!["healthy"]);
        let out = StateVector::new(0).with(VALENCE, 0.2).with(STRESS, 0.9);
        assert!(classify_regions(&out, &space).unwrap().is_empty());
        let bad = StateVector::new(0).with("mystery", 0.1);
        assert!(matches!(classify_regions(&bad, &space), Err(EstimatorError::DimensionMismatch(_))));
    }

    #[test]
    fn shipped_spaces_are_valid_and_round_trip() {
        for s in [StateSpace::demo_2d(), StateSpace::production_5d()] {
            s.validate().unwrap();
            assert_eq!(StateSpace::from_json(&s.to_json()).unwrap(), s);
        }
        let bare = r#"{"dimensions":["a"],"regions":[{"label":"x","bounds":{"a":[0.1,0.2]}}]}"#;
        let s = StateSpace::from_json(bare).unwrap();
        assert_eq!(s.grid, 10);
        assert!(!s.regions[0].disorder);
        assert!(StateSpace::from_json(r#"{"dimensions":["a"],"regions":[{"label":"x","bounds":{"a":[0.3,0.2]}}]}"#).is_err());
    }

    #[test]
    fn random_states_match_direct_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = [VALENCE, AROUSAL, STRESS];
        for _ in 0..1000 {
            let mut regions = Vec::new();
            for k in 0..3 {
                let mut b = Vec::new();
                for d in dims {
                    if rng.gen_bool(0.7) {
                        let a: f64 = rng.gen();
                        let c: f64 = rng.gen();
                        b.push((d, a.min(c), a.max(c)));
                    }
                }
                if b.is_empty() {
                    b.push((VALENCE, 0.0, 1.0));
                }
                regions.push(Region::new(&format!("r{k}"), &b));
            }
            let space = StateSpace { dimensions: dims.iter().map(|d| d.to_string()).collect(), regions, grid: 10 };
            let mut s = StateVector::new(0);
            let vals: Vec<f64> = dims.iter().map(|_| rng.gen()).collect();
            for (d, v) in dims.iter().zip(&vals) {
                s.set(d, *v, 1.0);
            }
            let got = classify_regions(&s, &space).unwrap();
            let want: Vec<String> = space
                .regions
                .iter()
                .filter(|r| {
                    let mut inside = true;
                    for (i, d) in dims.iter().enumerate() {
                        if let Some([lo, hi]) = r.bounds.get(*d) {
                            if vals[i] < *lo || vals[i] > *hi {
                                inside = false;
                            }
                        }
                    }
                    inside
                })
                .map(|r| r.label.clone())
                .collect();
            assert_eq!(got, want);
        }
    }
}
