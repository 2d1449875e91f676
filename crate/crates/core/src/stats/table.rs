use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::StatsError;
use crate::condition::{Algorithm, Modality};
use crate::study::ExportRow;

/// Number of outcome categories: ranks 1 (best) to 4.
pub const RANKS: usize = 4;

/// Expertise levels 1 and 2 are non-musicians, 3 to 6 musicians.
pub fn binarize_musicianship(level: u8) -> Result<bool, StatsError> {
    match level {
        1 | 2 => Ok(false),
        3..=6 => Ok(true),
        other => Err(StatsError::Range(format!(
            "expertise {other} is outside 1..=6"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub participant: String,
    pub algorithm: Algorithm,
    pub modality: Modality,
    pub musician: bool,
    pub ranking: u8,
}

impl Observation {
    pub fn new(
        participant: impl Into<String>,
        algorithm: Algorithm,
        modality: Modality,
        musician: bool,
        ranking: u8,
    ) -> Result<Self, StatsError> {
        if !(1..=RANKS as u8).contains(&ranking) {
            return Err(StatsError::Range(format!(
                "ranking {ranking} is outside 1..=4"
            )));
        }
        Ok(Observation {
            participant: participant.into(),
            algorithm,
            modality,
            musician,
            ranking,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservationTable {
    rows: Vec<Observation>,
}

#[derive(Deserialize)]
struct CsvRow {
    participant_id: String,
    algorithm: String,
    modality: String,
    ranking: u8,
    expertise: u8,
}

impl ObservationTable {
    pub fn new(rows: Vec<Observation>) -> Self {
        ObservationTable { rows }
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn participant_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.participant.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    /// Share of participants (not rows) who are musicians.
    pub fn musician_share(&self) -> f64 {
        let mut seen = HashSet::new();
        let (mut musicians, mut total) = (0usize, 0usize);
        for r in &self.rows {
            if seen.insert(r.participant.as_str()) {
                total += 1;
                musicians += usize::from(r.musician);
            }
        }
        if total == 0 {
            0.0
        } else {
            musicians as f64 / total as f64
        }
    }

    pub fn from_export(rows: &[ExportRow]) -> Result<Self, StatsError> {
        rows.iter()
            .map(|r| {
                Observation::new(
                    r.participant_id.clone(),
                    r.algorithm,
                    r.modality,
                    binarize_musicianship(r.expertise)?,
                    r.ranking,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    /// Reads the export CSV. Extra columns are ignored.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, StatsError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in csv.deserialize::<CsvRow>().enumerate() {
            let line = i + 2;
            let bad = |msg: String| StatsError::Table(format!("row at line {line}: {msg}"));
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let algorithm = rec.algorithm.parse().map_err(bad)?;
            let modality = rec.modality.parse().map_err(bad)?;
            let musician = binarize_musicianship(rec.expertise).map_err(|e| bad(e.to_string()))?;
            rows.push(
                Observation::new(
                    rec.participant_id,
                    algorithm,
                    modality,
                    musician,
                    rec.ranking,
                )
                .map_err(|e| bad(e.to_string()))?,
            );
        }
        Ok(Self::new(rows))
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, StatsError> {
        let file = File::open(path).map_err(|source| StatsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file)
    }

    pub fn rankings(&self, algorithm: Algorithm, modality: Modality) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.modality == modality)
            .map(|r| f64::from(r.ranking))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn musicianship_levels() {
        assert!(!binarize_musicianship(1).unwrap());
        assert!(!binarize_musicianship(2).unwrap());
        assert!(binarize_musicianship(3).unwrap());
        assert!(binarize_musicianship(6).unwrap());
        assert!(binarize_musicianship(0).is_err());
        assert!(binarize_musicianship(7).is_err());
    }

    #[test]
    fn csv_parsing() {
        let text = "participant_id,stimulus_id,algorithm,modality,ranking,expertise,age,gender\n\
                    p1,m1,A,piano,1,2,,\n\
                    p1,m5,B,group,4,2,31,f\n";
        let t = ObservationTable::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.rows()[1].modality, Modality::Group);
        assert!(!t.rows()[0].musician);
        let bad = text.replace(",4,2,31", ",5,2,31");
        assert!(ObservationTable::from_csv_reader(bad.as_bytes()).is_err());
        let empty =
            ObservationTable::from_csv_reader("participant_id,algorithm\n".as_bytes()).unwrap();
        assert!(empty.is_empty());
    }
}
