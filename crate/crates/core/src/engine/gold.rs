use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldMember {
    pub image_id: String,
    pub confidence: f64,
}

/// Correctly classified, above-threshold test images of one class at one
/// checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldList {
    class_id: usize,
    checkpoint_id: String,
    tau: f64,
    members: Vec<GoldMember>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("tau", format!("must lie in (0, 1], got {tau}")))
    }
}

impl GoldList {
    /// Build from members whose labels were already checked by the caller.
    ///
    /// Enforces the threshold and uniqueness invariants.
    pub fn from_members(
        class_id: usize,
        checkpoint_id: impl Into<String>,
        tau: f64,
        members: Vec<GoldMember>,
    ) -> Result<Self> {
        check_tau(tau)?;
        let mut seen = HashSet::with_capacity(members.len());
        for m in &members {
            if !seen.insert(m.image_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate image id `{}` in gold list",
                    m.image_id
                )));
            }
            if !(m.confidence >= tau && m.confidence <= 1.0) {
                return Err(Error::Validation(format!(
                    "confidence {} of `{}` is outside [tau={tau}, 1]",
                    m.confidence, m.image_id
                )));
            }
        }
        Ok(Self {
            class_id,
            checkpoint_id: checkpoint_id.into(),
            tau,
            members,
        })
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn checkpoint_id(&self) -> &str {
        &self.checkpoint_id
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn members(&self) -> &[GoldMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The same membership re-labelled for another checkpoint, for scoring
    /// against a fixed reference population.
    pub fn anchored_to(&self, checkpoint_id: impl Into<String>) -> Self {
        Self {
            checkpoint_id: checkpoint_id.into(),
            ..self.clone()
        }
    }
}

/// Members are images with `label == class_id` and `confidence >= tau`, in
/// input order.
pub fn form_gold_list(
    image_ids: &[String],
    labels: &[usize],
    confidences: &[f64],
    class_id: usize,
    tau: f64,
    checkpoint_id: &str,
) -> Result<GoldList> {
    if image_ids.len() != labels.len() || labels.len() != confidences.len() {
        return Err(Error::Validation(format!(
            "misaligned inputs: {} image ids, {} labels, {} confidences",
            image_ids.len(),
            labels.len(),
            confidences.len()
        )));
    }
    check_tau(tau)?;
    if let Some(i) = confidences.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation(format!(
            "confidence {} of `{}` is outside [0, 1]",
            confidences[i], image_ids[i]
        )));
    }
    let members = image_ids
        .iter()
        .zip(labels)
        .zip(confidences)
        .filter(|((_, &label), &p)| label == class_id && p >= tau)
        .map(|((id, _), &p)| GoldMember {
            image_id: id.clone(),
            confidence: p,
        })
        .collect();
    GoldList::from_members(class_id, checkpoint_id, tau, members)
}

/// `w_i = p_i / Σ_j p_j`; `None` for an empty gold list.
pub fn confidence_weights(gold: &GoldList) -> Option<Vec<f64>> {
    if gold.is_empty() {
        return None;
    }
    let total: f64 = gold.members.iter().map(|m| m.confidence).sum();
    Some(gold.members.iter().map(|m| m.confidence / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i}")).collect()
    }

    #[test]
    fn both_predicates_apply() {
        let g = form_gold_list(&ids(4), &[1, 1, 0, 1], &[0.6, 0.4, 0.9, 0.5], 1, 0.5, "E20")
            .unwrap();
        let got: Vec<_> = g.members().iter().map(|m| m.image_id.as_str()).collect();
        assert_eq!(got, ["img0", "img3"]);
        assert_eq!(g.checkpoint_id(), "E20");
    }

    #[test]
    fn threshold_is_inclusive() {
        let g = form_gold_list(&ids(1), &[0], &[0.5], 0, 0.5, "x").unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn nothing_passes_threshold() {
        let g = form_gold_list(&ids(3), &[0, 0, 0], &[0.1, 0.49, 0.3], 0, 0.5, "E25").unwrap();
        assert!(g.is_empty());
        assert!(confidence_weights(&g).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(form_gold_list(&ids(2), &[0], &[0.5, 0.5], 0, 0.5, "x").is_err());
        assert!(form_gold_list(&ids(1), &[0], &[1.5], 0, 0.5, "x").is_err());
        assert!(form_gold_list(&ids(1), &[0], &[0.7], 0, 0.0, "x").is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(form_gold_list(&dup, &[0, 0], &[0.7, 0.8], 0, 0.5, "x").is_err());
        let low = GoldMember {
            image_id: "a".into(),
            confidence: 0.2,
        };
        assert!(GoldList::from_members(0, "x", 0.5, vec![low]).is_err());
    }

    #[test]
    fn weights() {
        let g = form_gold_list(&ids(4), &[0; 4], &[0.7; 4], 0, 0.5, "x").unwrap();
        assert_eq!(confidence_weights(&g).unwrap(), vec![0.25; 4]);

        let g = form_gold_list(&ids(2), &[0; 2], &[0.6, 0.9], 0, 0.5, "x").unwrap();
        let w = confidence_weights(&g).unwrap();
        assert!((w[0] - 0.4).abs() < 1e-15 && (w[1] - 0.6).abs() < 1e-15);

        let scaled = form_gold_list(&ids(2), &[0; 2], &[0.3, 0.45], 0, 0.25, "x").unwrap();
        let ws = confidence_weights(&scaled).unwrap();
        assert!((ws[0] - w[0]).abs() < 1e-15 && (ws[1] - w[1]).abs() < 1e-15);
    }
}
