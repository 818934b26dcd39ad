use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::join::{join_all, JoinEvent};
use super::spec::JoinSpec;
use crate::hc_events::RowId;
use crate::ingest::{RejectedRecord, SocialPost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evidence {
    /// Event table row the post joined with.
    Event(RowId),
    /// Source whose streamer rejected the record.
    Rejected(String),
}

/// One line of the labeled output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPost {
    pub post_id: String,
    pub label: Label,
    pub evidence: Evidence,
    /// Training text; not part of the JSON-lines output.
    #[serde(skip)]
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelOutput {
    /// Relevant posts in input order, then irrelevant rejects in input order.
    pub labeled: Vec<LabeledPost>,
    /// Posts left for prediction, in input order.
    pub unlabeled: Vec<SocialPost>,
    pub similarity_evals: usize,
}

impl LabelOutput {
    pub fn count(&self, label: Label) -> usize {
        self.labeled.iter().filter(|l| l.label == label).count()
    }
}

/// Labels posts that join with an event as relevant (evidence: the lowest
/// matching row id) and rejected records with text as irrelevant; all other
/// posts are returned unlabeled. Rejects without text carry nothing to train
/// on and are dropped.
pub fn label_stream(
    events: &[JoinEvent],
    posts: &[SocialPost],
    rejects: &[RejectedRecord],
    spec: &JoinSpec,
) -> LabelOutput {
    let joined = join_all(events, posts, spec);
    let mut evidence: BTreeMap<usize, RowId> = BTreeMap::new();
    for &(e, p) in &joined.pairs {
        let row = events[e].row;
        evidence.entry(p).and_modify(|r| *r = (*r).min(row)).or_insert(row);
    }
    let mut out = LabelOutput { similarity_evals: joined.similarity_evals, ..Default::default() };
    for (i, post) in posts.iter().enumerate() {
        match evidence.get(&i) {
            Some(&row) => out.labeled.push(LabeledPost {
                post_id: post.id.clone(),
                label: Label::Relevant,
                evidence: Evidence::Event(row),
                text: post.text.clone(),
            }),
            None => out.unlabeled.push(post.clone()),
        }
    }
    for r in rejects {
        if let Some(text) = &r.text {
            out.labeled.push(LabeledPost {
                post_id: r.id.clone(),
                label: Label::Irrelevant,
                evidence: Evidence::Rejected(r.src.clone()),
                text: text.clone(),
            });
        }
    }
    out
}
