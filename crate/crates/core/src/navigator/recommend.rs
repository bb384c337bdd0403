use serde::{Deserialize, Serialize};

use super::{InterventionSpec, NavError, NavigatorConfig};

/// Summary of a subject's recent data used by the recommendation rules.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecommendProfile {
    pub days_of_data: usize,
    pub social_engagement: Option<f64>,
    /// Recent home minutes as a z-score against the personal baseline.
    pub home_z: Option<f64>,
    /// Events tagged both `social_media` and `arousal`.
    pub social_media_arousal_events: usize,
    pub daily_arousal: Vec<f64>,
    /// Events tagged `conflict`.
    pub conflict_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Isolation,
    Volatility,
    Maintenance,
}

impl Pattern {
    fn tag(self) -> &'static str {
        match self {
            Pattern::Isolation => "isolation",
            Pattern::Volatility => "volatility",
            Pattern::Maintenance => "maintenance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedItem {
    pub intervention: InterventionSpec,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub patterns: Vec<Pattern>,
    pub items: Vec<RecommendedItem>,
    pub rationale: Vec<String>,
}

impl Recommendation {
    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.intervention.name.as_str()).collect()
    }
}

pub fn recommend(
    profile: &RecommendProfile,
    catalog: &[InterventionSpec],
    cfg: &NavigatorConfig,
) -> Result<Recommendation, NavError> {
    if profile.days_of_data < cfg.recommend_min_days {
        return Err(NavError::InsufficientData {
            have: profile.days_of_data,
            need: cfg.recommend_min_days,
        });
    }
    let mut patterns = Vec::new();
    let mut rationale = Vec::new();

    let social_low = profile.social_engagement.is_some_and(|s| s < cfg.isolation_social_max);
    let home_high = profile.home_z.is_some_and(|z| z > cfg.isolation_home_z_min);
    if social_low && home_high && profile.social_media_arousal_events > 0 {
        patterns.push(Pattern::Isolation);
        rationale.push(format!(
            "isolation: social engagement {:.2} below {:.2}, home time z {:+.2}, {} social-media arousal events",
            profile.social_engagement.unwrap_or_default(),
            cfg.isolation_social_max,
            profile.home_z.unwrap_or_default(),
            profile.social_media_arousal_events
        ));
    }

    let arousal_std = crate::stats::pop_std(&profile.daily_arousal);
    if arousal_std.is_some_and(|s| s > cfg.volatility_arousal_std_min) && profile.conflict_events > 0 {
        patterns.push(Pattern::Volatility);
        rationale.push(format!(
            "volatility: daily arousal std {:.2} above {:.2}, {} conflict events",
            arousal_std.unwrap_or_default(),
            cfg.volatility_arousal_std_min,
            profile.conflict_events
        ));
    }

    if patterns.is_empty() {
        patterns.push(Pattern::Maintenance);
        rationale.push("no risk pattern matched: maintain current habits".into());
    }
    let items = patterns
        .iter()
        .flat_map(|p| {
            catalog
                .iter()
                .filter(|s| s.has_tag(p.tag()))
                .map(|s| RecommendedItem { intervention: s.clone(), pattern: *p })
        })
        .collect();
    Ok(Recommendation { patterns, items, rationale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigator::default_catalog;

    fn a_profile() -> RecommendProfile {
        RecommendProfile {
            days_of_data: 14,
            social_engagement: Some(0.2),
            home_z: Some(1.6),
            social_media_arousal_events: 4,
            daily_arousal: vec![0.5; 14],
            conflict_events: 0,
        }
    }

    #[test]
    fn isolation_profile_gets_social_list() {
        let r = recommend(&a_profile(), &default_catalog(), &NavigatorConfig::default()).unwrap();
        assert_eq!(r.patterns, vec![Pattern::Isolation]);
        assert_eq!(
            r.names(),
            vec!["Therapy focused on enhancing social skills", "Reengagement with available social support"]
        );
        assert!(r.rationale[0].contains("home time"));
    }

    #[test]
    fn volatile_profile_gets_regulation_list() {
        let p = RecommendProfile {
            days_of_data: 14,
            social_engagement: Some(0.6),
            home_z: Some(0.0),
            social_media_arousal_events: 0,
            daily_arousal: (0..14).map(|i| if i % 2 == 0 { 0.2 } else { 0.8 }).collect(),
            conflict_events: 3,
        };
        let r = recommend(&p, &default_catalog(), &NavigatorConfig::default()).unwrap();
        assert_eq!(r.patterns, vec![Pattern::Volatility]);
        assert_eq!(
            r.names(),
            vec![
                "Mindfulness-based Stress-reduction",
                "Progressive muscle relaxation",
                "Unified protocol for emotional disorders",
                "Dialectical Behavior Therapy",
                "Attachment-based Family Therapy"
            ]
        );
    }

    #[test]
    fn default_branch_and_data_gate() {
        let mut p = a_profile();
        p.social_media_arousal_events = 0;
        let r = recommend(&p, &default_catalog(), &NavigatorConfig::default()).unwrap();
        assert_eq!(r.names(), vec!["Physical activity", "Social interaction with friends"]);
        p.days_of_data = 6;
        assert!(matches!(
            recommend(&p, &default_catalog(), &NavigatorConfig::default()),
            Err(NavError::InsufficientData { have: 6, need: 7 })
        ));
    }
}
