//! Walks two participants through the listening study in memory: one
//! finishes properly, the other answers the attention check wrongly.

use std::sync::Arc;

use harmonist::simulate::synthetic_study_config;
use harmonist::study::{FinalizeRequest, ManualClock, StudyEngine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clock = Arc::new(ManualClock::new(0));
    let engine = StudyEngine::in_memory(synthetic_study_config(), 1, clock.clone())?;
    for answer in ["Agree", "Strongly agree"] {
        let session = engine.create_session(true)?;
        println!("session {} hears {:?}", session.id, session.modality_order);
        for n in 1..=2 {
            let page = engine.page(&session.id, n)?;
            let mut ids: Vec<String> = page.items.iter().map(|i| i.stimulus_id.clone()).collect();
            ids.sort();
            println!("  page {n} ({}) ranked {ids:?}", page.modality.as_str());
            engine.submit_ranking(&session.id, n, ids)?;
        }
        clock.advance_secs(240);
        let decision = engine.finalize(
            &session.id,
            FinalizeRequest {
                age: Some(29),
                gender: None,
                expertise: 4,
                attention_answer: answer.into(),
            },
        )?;
        println!("  -> {decision:?}");
    }
    let export = engine.export();
    print!("{}", export.rows_csv());
    print!("{}", export.exclusions_csv());
    Ok(())
}
