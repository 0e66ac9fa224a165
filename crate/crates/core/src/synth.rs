//! Planted synthetic corpora: parties with known left-right positions,
//! coalition blocks and pseudo-languages, for end-to-end checks without
//! licensed data.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{CoalitionKind, PartyGraph};
use crate::corpus::{compute_rile, Corpus, LabelScheme, Manifesto, Polarity, Sentence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub countries: usize,
    pub parties_per_country: usize,
    pub elections: usize,
    pub languages: Vec<String>,
    /// Codes drawn per polarity (taken in scheme order).
    pub codes_per_polarity: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Probability that a sentence takes a LEFT or RIGHT code.
    pub polar_share: f64,
    /// Spread of party positions around their bloc centre.
    pub party_spread: f64,
    /// Step size of the per-election random walk.
    pub drift: f64,
    /// Share of documents whose sentence codes are withheld (rile kept).
    pub unlabelled_fraction: f64,
    pub first_year: i32,
    pub years_between_elections: i32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            countries: 5,
            parties_per_country: 5,
            elections: 8,
            languages: vec!["xa".into(), "xb".into(), "xc".into()],
            codes_per_polarity: 3,
            min_sentences: 10,
            max_sentences: 16,
            polar_share: 0.7,
            party_spread: 0.12,
            drift: 0.04,
            unlabelled_fraction: 0.5,
            first_year: 1990,
            years_between_elections: 4,
            seed: 41,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub graph: PartyGraph,
    /// Planted position in [-1, 1] for every manifesto.
    pub planted: BTreeMap<String, f64>,
    /// Manifestos whose codes were withheld, with their original codes.
    pub withheld: BTreeMap<String, Vec<String>>,
}

impl SynthData {
    /// Restores withheld sentence codes on the selected manifestos.
    pub fn with_codes(&self, corpus: &Corpus) -> Corpus {
        let mut out = corpus.clone();
        for m in &mut out.manifestos {
            if let Some(codes) = self.withheld.get(&m.id) {
                for (s, c) in m.sentences.iter_mut().zip(codes) {
                    s.gold_code = Some(c.clone());
                }
            }
        }
        out
    }
}

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// A stock of distinct pseudo-words, unique across languages.
fn lexicon(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Language {
    topics: BTreeMap<String, Vec<String>>,
    fillers: Vec<String>,
}

const TOPIC_WORDS: usize = 4;
const FILLER_WORDS: usize = 30;

pub fn generate(config: &SynthConfig, scheme: &LabelScheme) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pick = |p: Polarity| -> Vec<String> {
        scheme.entries().iter().filter(|e| e.polarity == p).take(config.codes_per_polarity).map(|e| e.code.clone()).collect()
    };
    let (left, right, neutral) = (pick(Polarity::Left), pick(Polarity::Right), pick(Polarity::Neutral));
    let all_codes: Vec<&String> = left.iter().chain(&right).chain(&neutral).collect();

    let mut taken = BTreeSet::new();
    let languages: Vec<Language> = config
        .languages
        .iter()
        .map(|_| Language {
            topics: all_codes.iter().map(|c| (c.to_string(), lexicon(&mut rng, TOPIC_WORDS, &mut taken))).collect(),
            fillers: lexicon(&mut rng, FILLER_WORDS, &mut taken),
        })
        .collect();

    // Three blocs per country: left, centre, right.
    let centres = [-0.55, 0.0, 0.55];
    let mut graph = PartyGraph::new();
    let mut parties = Vec::new();
    for c in 0..config.countries {
        let mut members: Vec<Vec<String>> = vec![Vec::new(); centres.len()];
        for p in 0..config.parties_per_country {
            let bloc = (2 * p + 1) * centres.len() / (2 * config.parties_per_country);
            let id = format!("c{c}p{p}");
            let base: f64 = centres[bloc] + rng.gen_range(-config.party_spread..=config.party_spread);
            members[bloc].push(id.clone());
            parties.push((c, id, bloc, base));
        }
        for bloc in &members {
            for (i, a) in bloc.iter().enumerate() {
                for b in &bloc[i + 1..] {
                    graph.add(a, b, rng.gen_range(3..=6), CoalitionKind::Regional);
                }
            }
        }
    }
    // European groups follow bloc membership across countries.
    for (i, (ci, a, bi, _)) in parties.iter().enumerate() {
        for (cj, b, bj, _) in &parties[i + 1..] {
            if bi == bj && ci != cj {
                graph.add(a, b, rng.gen_range(2..=4), CoalitionKind::Eu);
            }
        }
    }

    let mut manifestos = Vec::new();
    let mut planted = BTreeMap::new();
    for (c, party, _, base) in &parties {
        let lang = &languages[c % languages.len()];
        let tag = &config.languages[c % languages.len()];
        let mut theta: f64 = *base;
        for e in 0..config.elections {
            theta = (theta + rng.gen_range(-config.drift..=config.drift)).clamp(-0.95, 0.95);
            let year = config.first_year + e as i32 * config.years_between_elections;
            // Countries vote in different months so elections never coincide across borders.
            let date = NaiveDate::from_ymd_opt(year, 3 + *c as u32, 1).expect("valid date");
            let n = rng.gen_range(config.min_sentences..=config.max_sentences);
            let mut sentences = Vec::with_capacity(n);
            for pos in 0..n {
                let u: f64 = rng.gen();
                let pool = if u < config.polar_share * (1.0 + theta) / 2.0 {
                    &right
                } else if u < config.polar_share {
                    &left
                } else {
                    &neutral
                };
                let code = pool.choose(&mut rng).unwrap().clone();
                let mut words: Vec<&String> = lang.topics[&code].choose_multiple(&mut rng, 2).collect();
                words.extend(lang.fillers.choose_multiple(&mut rng, 3));
                words.shuffle(&mut rng);
                let text = words.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
                sentences.push(Sentence::new(text, Some(code), pos + 1));
            }
            let codes: Vec<&str> = sentences.iter().map(|s| s.gold_code.as_deref().unwrap()).collect();
            let rile = compute_rile(&codes, scheme).expect("codes come from the scheme");
            let id = format!("{party}-{year}");
            planted.insert(id.clone(), theta);
            manifestos.push(Manifesto {
                id,
                party_id: party.clone(),
                country: format!("C{c}"),
                language: tag.clone(),
                election_date: date,
                sentences,
                rile_gold: Some(rile),
                ches_gold: Some(theta),
            });
        }
    }

    let mut withheld = BTreeMap::new();
    for m in &mut manifestos {
        if rng.gen::<f64>() < config.unlabelled_fraction {
            withheld.insert(m.id.clone(), m.sentences.iter_mut().map(|s| s.gold_code.take().unwrap()).collect());
        }
    }
    manifestos.sort_by(|a, b| a.election_date.cmp(&b.election_date).then(a.id.cmp(&b.id)));
    SynthData { corpus: Corpus::new(manifestos, scheme.clone()), graph, planted, withheld }
}
