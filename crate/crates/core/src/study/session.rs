use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{StudyConfig, PAGE_SIZE};
use super::StudyError;
use crate::condition::{Algorithm, Modality};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Finalized,
}

/// One participant's randomized assignment.
///
/// Page `k` is heard in `modality_order[k]`; each page holds two stimuli
/// per algorithm in presentation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub modality_order: [Modality; 2],
    pub pages: [Vec<String>; 2],
    pub created_at_ms: u64,
    #[serde(default)]
    pub finalized_at_ms: Option<u64>,
}

impl Session {
    pub fn state(&self) -> SessionState {
        if self.finalized_at_ms.is_some() {
            SessionState::Finalized
        } else {
            SessionState::Open
        }
    }

    pub fn page_modality(&self, page: usize) -> Modality {
        self.modality_order[page]
    }
}

/// Random balanced assignment: for each algorithm, a uniformly random two of
/// its four stimuli go to the first page; page order, modality order and
/// within-page order are all uniform.
pub fn draw_session<R: Rng + ?Sized>(
    config: &StudyConfig,
    rng: &mut R,
) -> Result<Session, StudyError> {
    config.validate()?;
    let mut pages: [Vec<String>; 2] =
        [Vec::with_capacity(PAGE_SIZE), Vec::with_capacity(PAGE_SIZE)];
    for alg in Algorithm::ALL {
        let mut ids: Vec<&str> = config
            .stimuli
            .iter()
            .filter(|s| s.algorithm == alg)
            .map(|s| s.id.as_str())
            .collect();
        ids.shuffle(rng);
        pages[0].extend(ids[..2].iter().map(|s| s.to_string()));
        pages[1].extend(ids[2..].iter().map(|s| s.to_string()));
    }
    for page in &mut pages {
        page.shuffle(rng);
    }
    let modality_order = if rng.random_bool(0.5) {
        [Modality::PianoSolo, Modality::Group]
    } else {
        [Modality::Group, Modality::PianoSolo]
    };
    let id = format!("{:032x}", rng.random::<u128>());
    Ok(Session {
        id,
        modality_order,
        pages,
        created_at_ms: 0,
        finalized_at_ms: None,
    })
}

pub fn create_session(config: &StudyConfig, seed: u64) -> Result<Session, StudyError> {
    draw_session(config, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::config::sample_config;
    use std::collections::HashSet;

    #[test]
    fn pages_partition_and_balance() {
        let config = sample_config();
        for seed in 0..500 {
            let s = create_session(&config, seed).unwrap();
            let all: HashSet<&String> = s.pages.iter().flatten().collect();
            assert_eq!(all.len(), 8);
            for page in &s.pages {
                assert_eq!(page.len(), 4);
                let a = page
                    .iter()
                    .filter(|id| config.stimulus(id).unwrap().algorithm == Algorithm::A)
                    .count();
                assert_eq!(a, 2);
            }
            assert_ne!(s.modality_order[0], s.modality_order[1]);
        }
    }

    #[test]
    fn seeded_sessions_are_reproducible() {
        let config = sample_config();
        assert_eq!(
            create_session(&config, 42).unwrap(),
            create_session(&config, 42).unwrap()
        );
        assert_ne!(
            create_session(&config, 42).unwrap().id,
            create_session(&config, 43).unwrap().id
        );
    }
}
