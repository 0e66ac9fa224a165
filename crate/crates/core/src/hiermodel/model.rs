use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelScheme, Manifesto, Polarity};
use crate::diffcore::{bilstm_encode, BiLstmParams, ParamId, ParameterStore, Tape, Tensor, Var, INIT_BOUND};
use crate::embedalign::EmbeddingTable;

use super::loss::LossComponents;
use super::{ModelConfig, ModelError, Vocabulary};

/// Per-sentence outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    /// Distribution over the 57 codes.
    pub y: Vec<f64>,
    /// Distribution over `[left, right, neutral]`.
    pub p: Vec<f64>,
    /// Sentence vector from the sentence-level bi-LSTM.
    pub h: Vec<f64>,
}

impl SentencePrediction {
    pub fn class(&self) -> usize {
        argmax(&self.y)
    }

    pub fn polarity(&self) -> Polarity {
        Polarity::from_index(argmax(&self.p)).expect("three polarity classes")
    }

    /// `p_right - p_left`.
    pub fn balance(&self) -> f64 {
        self.p[Polarity::Right.index()] - self.p[Polarity::Left.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub manifesto_id: String,
    pub sentences: Vec<SentencePrediction>,
    /// Mean of `[y_i; h_i]` over sentences.
    pub v_d: Vec<f64>,
    /// Document score in (-1, 1).
    pub r_hat: f64,
}

impl Prediction {
    pub fn predicted_codes<'a>(&self, scheme: &'a LabelScheme) -> Vec<&'a str> {
        self.sentences.iter().map(|s| scheme.code_at(s.class()).expect("class index in scheme")).collect()
    }

    pub fn predicted_polarities(&self) -> Vec<Polarity> {
        self.sentences.iter().map(SentencePrediction::polarity).collect()
    }

    /// Calibration prior on the [0, 1] scale.
    pub fn pos(&self) -> f64 {
        (self.r_hat + 1.0) / 2.0
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Tape nodes for one document.
#[derive(Debug, Clone)]
pub struct DocumentGraph {
    pub class_logits: Vec<Var>,
    pub polarity_logits: Vec<Var>,
    pub y: Vec<Var>,
    pub p: Vec<Var>,
    pub h: Vec<Var>,
    pub v_d: Var,
    pub r_hat: Var,
}

/// Gold targets of one document, resolved to class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTargets {
    pub classes: Option<Vec<usize>>,
    pub polarities: Option<Vec<Polarity>>,
    pub rile: Option<f64>,
}

impl DocumentTargets {
    pub fn of(manifesto: &Manifesto, scheme: &LabelScheme) -> Result<Self, ModelError> {
        let classes = match manifesto.gold_codes() {
            Some(codes) => Some(codes.iter().map(|c| scheme.class_index(c)).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        let polarities = classes.as_ref().map(|cs| cs.iter().map(|&c| scheme.polarity_at(c)).collect());
        Ok(Self { classes, polarities, rile: manifesto.rile_gold })
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_none() && self.rile.is_none()
    }
}

/// Hierarchical bi-LSTM: words → sentence vectors → sentence states → heads.
#[derive(Debug, Clone, PartialEq)]
pub struct HierModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    /// Class codes in head order.
    pub codes: Vec<String>,
    pub(crate) class_polarity: Vec<Polarity>,
    pub store: ParameterStore,
    pub(crate) embeddings: ParamId,
    pub(crate) word_encoder: BiLstmParams,
    pub(crate) sentence_encoder: BiLstmParams,
    pub(crate) class_w: ParamId,
    pub(crate) class_b: ParamId,
    pub(crate) polarity_w: ParamId,
    pub(crate) polarity_b: ParamId,
    pub(crate) doc_w: ParamId,
    pub(crate) doc_b: ParamId,
}

impl HierModel {
    /// Fresh parameters. Embedding rows are copied from `pretrained` when it
    /// holds the namespaced word, and drawn uniformly otherwise.
    pub fn new(
        config: &ModelConfig,
        scheme: &LabelScheme,
        vocab: Vocabulary,
        pretrained: Option<&EmbeddingTable>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if let Some(table) = pretrained {
            if table.dim() != config.embedding_dim {
                return Err(ModelError::Config(format!(
                    "embedding_dim {} does not match pretrained dimension {}",
                    config.embedding_dim,
                    table.dim()
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParameterStore::new();
        let k = scheme.len();
        let sent_dim = 2 * config.sentence_hidden;

        let mut emb = Tensor::uniform(vocab.len(), config.embedding_dim, INIT_BOUND, &mut rng);
        if let Some(table) = pretrained {
            for (row, word) in vocab.words().iter().enumerate() {
                if let Some(i) = table.index_of(word) {
                    emb.row_mut(row).copy_from_slice(&table.row(i));
                }
            }
        }
        let embeddings = store.add("embeddings", emb)?;
        store.set_trainable(embeddings, config.trainable_embeddings);
        let word_encoder = BiLstmParams::new(&mut store, "word", config.embedding_dim, config.word_hidden, &mut rng)?;
        let sentence_encoder =
            BiLstmParams::new(&mut store, "sentence", 2 * config.word_hidden, config.sentence_hidden, &mut rng)?;
        let mut dense = |store: &mut ParameterStore, name: &str, out: usize, inp: usize| {
            let w = store.add(&format!("{name}.W"), Tensor::uniform(out, inp, INIT_BOUND, &mut rng))?;
            let b = store.add(&format!("{name}.b"), Tensor::uniform(out, 1, INIT_BOUND, &mut rng))?;
            Ok::<_, ModelError>((w, b))
        };
        let (class_w, class_b) = dense(&mut store, "class", k, sent_dim)?;
        let (polarity_w, polarity_b) = dense(&mut store, "polarity", 3, sent_dim)?;
        let (doc_w, doc_b) = dense(&mut store, "document", 1, k + sent_dim)?;

        Ok(Self {
            config: config.clone(),
            vocab,
            codes: scheme.codes().map(String::from).collect(),
            class_polarity: scheme.entries().iter().map(|e| e.polarity).collect(),
            store,
            embeddings,
            word_encoder,
            sentence_encoder,
            class_w,
            class_b,
            polarity_w,
            polarity_b,
            doc_w,
            doc_b,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.codes.len()
    }

    /// Dimension of the pooled document vector `V_d`.
    pub fn document_dim(&self) -> usize {
        self.num_classes() + 2 * self.config.sentence_hidden
    }

    pub fn check_scheme(&self, scheme: &LabelScheme) -> Result<(), ModelError> {
        let polarities = scheme.entries().iter().map(|e| e.polarity);
        if scheme.codes().ne(self.codes.iter().map(String::as_str)) || polarities.ne(self.class_polarity.iter().copied()) {
            return Err(ModelError::Config("label scheme differs from the one the model was built with".into()));
        }
        Ok(())
    }

    /// Records the forward pass of one document on `tape`.
    pub fn forward(&self, tape: &mut Tape, manifesto: &Manifesto) -> Result<DocumentGraph, ModelError> {
        self.forward_with(tape, &self.store, manifesto)
    }

    pub(crate) fn forward_with(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        manifesto: &Manifesto,
    ) -> Result<DocumentGraph, ModelError> {
        if manifesto.sentences.is_empty() {
            return Err(ModelError::EmptyDocument(manifesto.id.clone()));
        }
        let mut sentence_inputs = Vec::with_capacity(manifesto.sentences.len());
        for s in &manifesto.sentences {
            if s.tokens.is_empty() {
                return Err(ModelError::EmptySentence { id: manifesto.id.clone(), position: s.position_index });
            }
            let words: Vec<Var> = s
                .tokens
                .iter()
                .map(|t| tape.param_row(store, self.embeddings, self.vocab.lookup(&manifesto.language, t)))
                .collect();
            sentence_inputs.push(bilstm_encode(tape, store, &self.word_encoder, &words)?.final_state);
        }
        let encoded = bilstm_encode(tape, store, &self.sentence_encoder, &sentence_inputs)?;

        let (cw, cb) = (tape.param(store, self.class_w), tape.param(store, self.class_b));
        let (pw, pb) = (tape.param(store, self.polarity_w), tape.param(store, self.polarity_b));
        let (dw, db) = (tape.param(store, self.doc_w), tape.param(store, self.doc_b));

        let mut graph = DocumentGraph {
            class_logits: Vec::new(),
            polarity_logits: Vec::new(),
            y: Vec::new(),
            p: Vec::new(),
            h: encoded.steps.clone(),
            v_d: encoded.final_state,
            r_hat: encoded.final_state,
        };
        let mut pooled = Vec::with_capacity(encoded.steps.len());
        for &h in &encoded.steps {
            let cl = tape.affine(cw, h, cb);
            let pl = tape.affine(pw, h, pb);
            let y = tape.softmax(cl);
            let p = tape.softmax(pl);
            pooled.push(tape.concat(&[y, h]));
            graph.class_logits.push(cl);
            graph.polarity_logits.push(pl);
            graph.y.push(y);
            graph.p.push(p);
        }
        graph.v_d = tape.mean(&pooled);
        let score = tape.affine(dw, graph.v_d, db);
        graph.r_hat = tape.tanh(score);
        Ok(graph)
    }

    /// Scalar loss node for one document and the values of its components.
    /// Absent targets contribute nothing.
    pub fn document_loss(
        &self,
        tape: &mut Tape,
        graph: &DocumentGraph,
        targets: &DocumentTargets,
    ) -> Result<(Var, LossComponents), ModelError> {
        let cfg = &self.config;
        let mut terms: Vec<Var> = Vec::new();
        let mut comps = LossComponents::default();

        if let (Some(classes), Some(polarities)) = (&targets.classes, &targets.polarities) {
            if classes.len() != graph.y.len() {
                return Err(ModelError::MissingGold("sentence count does not match gold codes".into()));
            }
            let mut xent = Vec::with_capacity(classes.len());
            let mut pxent = Vec::with_capacity(classes.len());
            for (i, (&c, &pol)) in classes.iter().zip(polarities).enumerate() {
                debug_assert_eq!(self.class_polarity[c], pol);
                xent.push(tape.softmax_xent(graph.class_logits[i], c)?);
                pxent.push(tape.softmax_xent(graph.polarity_logits[i], pol.index())?);
            }
            let ls = tape.mean(&xent);
            let lsp = tape.mean(&pxent);
            comps.sentence = tape.scalar(ls);
            comps.polarity = tape.scalar(lsp);
            terms.push(tape.scale(ls, cfg.alpha));
            terms.push(tape.scale(lsp, cfg.beta));
        }
        if let Some(r) = targets.rile {
            let gold = tape.constant(Tensor::scalar(r));
            let diff = tape.sub(graph.r_hat, gold);
            let ld = tape.square(diff);

            let balances: Vec<Var> = graph
                .p
                .iter()
                .map(|&p| {
                    let right = tape.pick(p, Polarity::Right.index());
                    let left = tape.pick(p, Polarity::Left.index());
                    tape.sub(right, left)
                })
                .collect();
            let mean_balance = tape.mean(&balances);
            let gap = tape.sub(mean_balance, gold);
            let lstruc = tape.square(gap);

            comps.document = tape.scalar(ld);
            comps.structured = tape.scalar(lstruc);
            terms.push(tape.scale(ld, 1.0 - cfg.alpha));
            terms.push(tape.scale(lstruc, cfg.gamma));
        }
        if terms.is_empty() {
            return Err(ModelError::NoSupervision);
        }
        let mut total = terms[0];
        for &t in &terms[1..] {
            total = tape.add(total, t);
        }
        comps.total = tape.scalar(total);
        Ok((total, comps))
    }

    /// Mean per-document loss over `docs`, as one scalar node.
    pub fn batch_loss(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        docs: &[(&Manifesto, DocumentTargets)],
    ) -> Result<Var, ModelError> {
        let mut losses = Vec::with_capacity(docs.len());
        for (m, targets) in docs {
            let graph = self.forward_with(tape, store, m)?;
            losses.push(self.document_loss(tape, &graph, targets)?.0);
        }
        if losses.is_empty() {
            return Err(ModelError::NoSupervision);
        }
        Ok(tape.mean(&losses))
    }

    /// Mean of `[y_i; h_i]`, computed directly from sentence outputs.
    pub fn pool(sentences: &[SentencePrediction]) -> Vec<f64> {
        let dim = sentences.first().map_or(0, |s| s.y.len() + s.h.len());
        let mut acc = vec![0.0; dim];
        for s in sentences {
            for (a, v) in acc.iter_mut().zip(s.y.iter().chain(&s.h)) {
                *a += v;
            }
        }
        let n = sentences.len() as f64;
        acc.iter().map(|a| a / n).collect()
    }

    /// Document score for a pooled vector.
    pub fn score(&self, v_d: &[f64]) -> f64 {
        let w = self.store.value(self.doc_w).data();
        let b = self.store.value(self.doc_b).data()[0];
        (w.iter().zip(v_d).map(|(a, x)| a * x).sum::<f64>() + b).tanh()
    }

    pub fn encode_document(&self, manifesto: &Manifesto) -> Result<Prediction, ModelError> {
        let mut tape = Tape::new();
        let g = self.forward(&mut tape, manifesto)?;
        let vec = |v: Var| tape.value(v).data().to_vec();
        let sentences = (0..g.y.len())
            .map(|i| SentencePrediction { y: vec(g.y[i]), p: vec(g.p[i]), h: vec(g.h[i]) })
            .collect();
        Ok(Prediction {
            manifesto_id: manifesto.id.clone(),
            sentences,
            v_d: vec(g.v_d),
            r_hat: tape.scalar(g.r_hat),
        })
    }
}
