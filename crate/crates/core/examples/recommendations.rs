//! Pattern-based recommendations for an isolated subject and for one with
//! unstable arousal and frequent conflict.

use mhn_core::navigator::{default_catalog, recommend, NavigatorConfig, RecommendProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = NavigatorConfig::default();
    let catalog = default_catalog();
    let isolated = RecommendProfile {
        days_of_data: 14,
        social_engagement: Some(0.15),
        home_z: Some(1.8),
        social_media_arousal_events: 5,
        daily_arousal: vec![0.45; 14],
        conflict_events: 0,
    };
    let volatile = RecommendProfile {
        days_of_data: 14,
        social_engagement: Some(0.55),
        home_z: Some(-0.2),
        social_media_arousal_events: 0,
        daily_arousal: (0..14).map(|i| if i % 2 == 0 { 0.15 } else { 0.85 }).collect(),
        conflict_events: 4,
    };
    for (name, profile) in [("isolated", isolated), ("volatile", volatile)] {
        let r = recommend(&profile, &catalog, &cfg)?;
        println!("{name}: patterns {:?}", r.patterns);
        for line in &r.rationale {
            println!("  why: {line}");
        }
        for item in &r.items {
            println!("  - {} ({:?})", item.intervention.name, item.pattern);
        }
    }
    Ok(())
}
