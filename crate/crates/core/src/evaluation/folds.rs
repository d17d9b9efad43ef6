use std::collections::BTreeSet;

use crate::pipeline::FrameRecord;

use super::EvalError;

/// One leave-one-person-out split, as indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_person: String,
    pub train_persons: Vec<String>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Distinct person ids in sorted order.
pub fn persons(records: &[FrameRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| r.person_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// One fold per person (sorted by id) over the frames selected by `members`.
pub fn lopo_folds_over(records: &[FrameRecord], members: &[usize]) -> Result<Vec<Fold>, EvalError> {
    let ids: BTreeSet<&str> = members.iter().map(|&i| records[i].person_id.as_str()).collect();
    if ids.len() < 2 {
        return Err(EvalError::TooFewPersons(ids.len()));
    }
    Ok(ids
        .iter()
        .map(|&p| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&i| records[i].person_id == p);
            Fold {
                test_person: p.to_string(),
                train_persons: ids.iter().filter(|&&q| q != p).map(|q| q.to_string()).collect(),
                train,
                test,
            }
        })
        .collect())
}

pub fn lopo_folds(records: &[FrameRecord]) -> Result<Vec<Fold>, EvalError> {
    let all: Vec<usize> = (0..records.len()).collect();
    lopo_folds_over(records, &all)
}
