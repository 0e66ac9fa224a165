use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use crate::corpus::{Corpus, Manifesto};
use crate::embedalign::cosine;
use crate::pslengine::Database;

use super::{lw_right_left_ratio, squash, CalibrationConfig, CalibrationError, CoalitionKind, ManifestoEstimate, PartyGraph};

/// Observed predicate carrying the warm-start value when a prior rule is
/// enabled.
pub const PRIOR_PREDICATE: &str = "Prior";

const DAYS_PER_YEAR: f64 = 365.25;

/// For each manifesto, the most recent manifesto of every other party
/// released within the window before (or on) its date. Date ties go to the
/// smaller id.
pub fn recent_pairs(manifestos: &[&Manifesto], window_years: f64) -> BTreeSet<(String, String)> {
    let mut by_party: BTreeMap<&str, Vec<&Manifesto>> = BTreeMap::new();
    for m in manifestos {
        by_party.entry(m.party_id.as_str()).or_default().push(m);
    }
    let mut out = BTreeSet::new();
    for x in manifestos {
        for (party, ms) in &by_party {
            if *party == x.party_id {
                continue;
            }
            let best = ms
                .iter()
                .filter(|y| {
                    let days = (x.election_date - y.election_date).num_days();
                    days >= 0 && days as f64 <= window_years * DAYS_PER_YEAR
                })
                .max_by(|a, b| a.election_date.cmp(&b.election_date).then(b.id.cmp(&a.id)));
            if let Some(y) = best {
                out.insert((x.id.clone(), y.id.clone()));
            }
        }
    }
    out
}

/// Same country and election date, distinct manifestos; both orders.
pub fn same_election_pairs(manifestos: &[&Manifesto]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for x in manifestos {
        for y in manifestos {
            if x.id != y.id && x.country == y.country && x.election_date == y.election_date {
                out.insert((x.id.clone(), y.id.clone()));
            }
        }
    }
    out
}

/// `(manifesto, party, previous manifesto of that party)`.
pub fn previous_manifestos(manifestos: &[&Manifesto]) -> BTreeSet<(String, String, String)> {
    let mut by_party: BTreeMap<&str, Vec<&Manifesto>> = BTreeMap::new();
    for m in manifestos {
        by_party.entry(m.party_id.as_str()).or_default().push(m);
    }
    let mut out = BTreeSet::new();
    for (party, mut ms) in by_party {
        ms.sort_by(|a, b| a.election_date.cmp(&b.election_date).then(a.id.cmp(&b.id)));
        for w in ms.windows(2) {
            out.insert((w[1].id.clone(), party.to_string(), w[0].id.clone()));
        }
    }
    out
}

/// Observed atoms and `pos` targets for the calibration program.
///
/// Manifestos in `targets` get a free `pos` initialised at their estimate;
/// all others get an observed `pos` equal to their estimate.
pub fn build_database(
    corpus: &Corpus,
    estimates: &BTreeMap<String, ManifestoEstimate>,
    targets: &BTreeSet<String>,
    graph: &PartyGraph,
    config: &CalibrationConfig,
) -> Result<Database, CalibrationError> {
    config.validate()?;
    let ms: Vec<&Manifesto> = corpus.manifestos.iter().collect();
    let estimate = |id: &str| estimates.get(id).ok_or_else(|| CalibrationError::MissingPrediction(id.to_string()));
    let mut db = Database::new();

    let mut missing = BTreeSet::new();
    for m in &ms {
        let e = estimate(&m.id)?;
        let id = m.id.as_str();
        db.observe("Manifesto", &[id], 1.0)?;
        db.observe("Party", &[id, &m.party_id], 1.0)?;
        db.observe("LwRightLeftRatio", &[id], squash(lw_right_left_ratio(&e.polarities)?)?)?;
        if targets.contains(id) {
            db.add_target("pos", &[id], Some(e.pos()))?;
        } else {
            db.observe("pos", &[id], e.pos())?;
        }
        if config.prior_weight.is_some() {
            db.observe(PRIOR_PREDICATE, &[id], e.pos())?;
        }
        if !graph.contains_party(&m.party_id) && missing.insert(m.party_id.clone()) {
            warn!("party {} has no coalition edges", m.party_id);
        }
    }
    for t in targets {
        if !ms.iter().any(|m| &m.id == t) {
            return Err(CalibrationError::MissingPrediction(t.clone()));
        }
    }

    for (x, y) in same_election_pairs(&ms) {
        db.observe("SameElec", &[&x, &y], 1.0)?;
    }
    let recent = recent_pairs(&ms, config.recency_window_years);
    for (x, y) in &recent {
        db.observe("Recent", &[x, y], 1.0)?;
        let cos = cosine(&estimate(x)?.v_d, &estimate(y)?.v_d);
        let sim = if config.similarity_clamp { cos.max(0.0) } else { (cos + 1.0) / 2.0 }.clamp(0.0, 1.0);
        db.observe("Similarity", &[x, y], sim)?;
        db.observe("Similarity", &[y, x], sim)?;
    }
    for (x, party, t) in previous_manifestos(&ms) {
        db.observe("PreviousManifesto", &[&x, &party, &t], 1.0)?;
    }
    for (a, b, count, kind) in graph.edges() {
        if count == 0 {
            continue;
        }
        let name = match kind {
            CoalitionKind::Regional => "RegCoalition",
            CoalitionKind::Eu => "EUCoalition",
        };
        let v = squash(count as f64)?;
        db.observe(name, &[a, b], v)?;
        db.observe(name, &[b, a], v)?;
    }
    Ok(db)
}
