use std::collections::HashMap;

use super::generate::{TruthLabel, TruthRow};
use super::SynthError;
use crate::mlfilters::Confusion;

/// Scores `(post id, predicted relevant)` pairs against the truth rows.
pub fn truth_metrics<'a>(
    predicted: impl IntoIterator<Item = (&'a str, bool)>,
    truth: &HashMap<String, TruthRow>,
) -> Result<Confusion, SynthError> {
    let mut c = Confusion::default();
    for (id, relevant) in predicted {
        let row = truth.get(id).ok_or_else(|| SynthError::UnknownId(id.to_string()))?;
        c.add(relevant, row.label == TruthLabel::Relevant);
    }
    Ok(c)
}

pub fn truth_index(rows: &[TruthRow]) -> HashMap<String, TruthRow> {
    rows.iter().map(|r| (r.post_id.clone(), r.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(labels: &[bool]) -> HashMap<String, TruthRow> {
        let rows: Vec<TruthRow> = labels
            .iter()
            .enumerate()
            .map(|(i, &r)| TruthRow {
                post_id: format!("p{i}"),
                label: if r { TruthLabel::Relevant } else { TruthLabel::Irrelevant },
                event_id: None,
            })
            .collect();
        truth_index(&rows)
    }

    #[test]
    fn eight_two_two() {
        // 10 relevant, 8 found; 2 false alarms among 10 irrelevant
        let labels: Vec<bool> = (0..20).map(|i| i < 10).collect();
        let truth = rows(&labels);
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let pred = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i < 8 || i == 10 || i == 11));
        let c = truth_metrics(pred, &truth).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (8, 2, 2));
        assert!((c.precision() - 0.8).abs() < 1e-12);
        assert!((c.recall() - 0.8).abs() < 1e-12);
        assert!((c.fscore() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_silent() {
        let truth = rows(&[true, false, true]);
        let ids = ["p0", "p1", "p2"];
        let perfect = truth_metrics(ids.iter().map(|id| (*id, *id != "p1")), &truth).unwrap();
        assert_eq!((perfect.precision(), perfect.recall(), perfect.fscore()), (1.0, 1.0, 1.0));
        let silent = truth_metrics(ids.iter().map(|id| (*id, false)), &truth).unwrap();
        assert_eq!(silent.recall(), 0.0);
        assert!(matches!(truth_metrics([("zz", true)], &truth), Err(SynthError::UnknownId(_))));
    }
}
