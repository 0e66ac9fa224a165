//! Cross-lingual embedding alignment by orthogonal Procrustes.
//!
//! Each language is mapped into the English space with `W* = U Vᵀ`, where
//! `U Σ Vᵀ` is the SVD of `Xᵀ Y` over the rows of a bilingual lexicon
//! (`X` other-language vectors, `Y` their English translations).

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("need at least 2 usable lexicon pairs, found {0}")]
    TooFewPairs(usize),
    #[error("cross-covariance is degenerate or non-finite")]
    Degenerate,
    #[error("no projection for language {0:?}")]
    MissingProjection(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub language: String,
    words: Vec<String>,
    vocabulary: HashMap<String, usize>,
    /// `|V| x d`, one row per word.
    matrix: DMatrix<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` rows. Duplicate words keep their
    /// first occurrence.
    pub fn from_rows(language: &str, dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self, AlignError> {
        let mut words = Vec::with_capacity(rows.len());
        let mut vocabulary = HashMap::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, (word, vector)) in rows.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(AlignError::Format {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", vector.len()),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(AlignError::Format { line: i + 1, message: "non-finite value".into() });
            }
            if vocabulary.contains_key(&word) {
                log::warn!("duplicate embedding for {word:?}; keeping the first");
                continue;
            }
            vocabulary.insert(word.clone(), words.len());
            words.push(word);
            data.extend(vector);
        }
        let matrix = DMatrix::from_row_slice(words.len(), dim, &data);
        Ok(Self { language: language.to_string(), words, vocabulary, matrix })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vocabulary.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Right-multiplies every row by `projection`.
    pub fn project(&self, projection: &ProjectionMatrix) -> Result<Self, AlignError> {
        if projection.dim() != self.dim() {
            return Err(AlignError::DimensionMismatch(self.dim(), projection.dim()));
        }
        Ok(Self { matrix: &self.matrix * &projection.0, ..self.clone() })
    }
}

/// Orthogonal `d x d` map from another language into English space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix(pub DMatrix<f64>);

impl ProjectionMatrix {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `max |WᵀW - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.0.transpose() * &self.0;
        let eye = DMatrix::<f64>::identity(self.dim(), self.dim());
        (gram - eye).amax()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BilingualLexicon {
    /// `(source word, English word)`.
    pub pairs: Vec<(String, String)>,
}

impl BilingualLexicon {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        Self { pairs }
    }

    /// Two-column tab-separated file.
    pub fn load(path: &Path) -> Result<Self, AlignError> {
        let file = std::fs::File::open(path).map_err(|source| AlignError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut pairs = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| AlignError::Format { line: i + 1, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next()) {
                (Some(src), Some(en)) => pairs.push((src.trim().to_string(), en.trim().to_string())),
                _ => {
                    return Err(AlignError::Format { line: i + 1, message: "expected two tab-separated columns".into() })
                }
            }
        }
        Ok(Self { pairs })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignOptions {
    /// Subtract the per-table mean of the paired rows before the SVD.
    pub mean_center: bool,
    /// Scale paired rows to unit length before the SVD.
    pub unit_normalize: bool,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub projection: ProjectionMatrix,
    pub used_pairs: usize,
    pub dropped_pairs: usize,
}

pub fn align(other: &EmbeddingTable, english: &EmbeddingTable, lexicon: &BilingualLexicon) -> Result<Alignment, AlignError> {
    align_with(other, english, lexicon, AlignOptions::default())
}

pub fn align_with(
    other: &EmbeddingTable,
    english: &EmbeddingTable,
    lexicon: &BilingualLexicon,
    options: AlignOptions,
) -> Result<Alignment, AlignError> {
    let d = other.dim();
    if d != english.dim() {
        return Err(AlignError::DimensionMismatch(d, english.dim()));
    }
    let usable: Vec<(usize, usize)> = lexicon
        .pairs
        .iter()
        .filter_map(|(src, en)| Some((other.index_of(src)?, english.index_of(en)?)))
        .collect();
    let dropped = lexicon.pairs.len() - usable.len();
    if dropped > 0 {
        log::info!("{}: dropped {dropped} of {} lexicon pairs as out-of-vocabulary", other.language, lexicon.pairs.len());
    }
    if usable.len() < 2 {
        return Err(AlignError::TooFewPairs(usable.len()));
    }

    let mut x = DMatrix::from_fn(usable.len(), d, |r, c| other.matrix[(usable[r].0, c)]);
    let mut y = DMatrix::from_fn(usable.len(), d, |r, c| english.matrix[(usable[r].1, c)]);
    for m in [&mut x, &mut y] {
        if options.unit_normalize {
            for mut row in m.row_iter_mut() {
                let n = row.norm();
                if n > 0.0 {
                    row /= n;
                }
            }
        }
        if options.mean_center {
            let mean = m.row_mean();
            for mut row in m.row_iter_mut() {
                row -= &mean;
            }
        }
    }

    let cross = x.transpose() * y;
    if cross.iter().any(|v| !v.is_finite()) {
        return Err(AlignError::Degenerate);
    }
    let svd = cross.svd(true, true);
    if svd.singular_values.iter().all(|&s| s <= f64::EPSILON) {
        return Err(AlignError::Degenerate);
    }
    let mut u = svd.u.ok_or(AlignError::Degenerate)?;
    let mut v_t = svd.v_t.ok_or(AlignError::Degenerate)?;
    // Sign convention: largest-magnitude entry of each left singular vector
    // is positive; the matching right singular vector flips with it.
    for k in 0..u.ncols() {
        let col = u.column(k);
        let (imax, _) = col.iter().enumerate().fold((0, 0.0f64), |acc, (i, &v)| {
            if v.abs() > acc.1 {
                (i, v.abs())
            } else {
                acc
            }
        });
        if u[(imax, k)] < 0.0 {
            u.column_mut(k).neg_mut();
            v_t.row_mut(k).neg_mut();
        }
    }
    Ok(Alignment { projection: ProjectionMatrix(u * v_t), used_pairs: usable.len(), dropped_pairs: dropped })
}

/// Stacks all tables into one, projecting each non-English block with its
/// projection. Rows are namespaced `"{language}:{word}"`.
pub fn build_multilingual(
    tables: &[EmbeddingTable],
    projections: &BTreeMap<String, ProjectionMatrix>,
) -> Result<EmbeddingTable, AlignError> {
    let dim = tables.first().map(|t| t.dim()).unwrap_or(0);
    let mut rows = Vec::with_capacity(tables.iter().map(|t| t.len()).sum());
    for table in tables {
        if table.dim() != dim {
            return Err(AlignError::DimensionMismatch(dim, table.dim()));
        }
        let projected = if table.language == "en" {
            match projections.get("en") {
                Some(p) => table.project(p)?,
                None => table.clone(),
            }
        } else {
            let p = projections
                .get(&table.language)
                .ok_or_else(|| AlignError::MissingProjection(table.language.clone()))?;
            table.project(p)?
        };
        for (i, word) in projected.words.iter().enumerate() {
            rows.push((namespaced(&table.language, word), projected.row(i)));
        }
    }
    EmbeddingTable::from_rows("multi", dim, rows)
}

pub fn namespaced(language: &str, word: &str) -> String {
    format!("{language}:{word}")
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Reads `word v1 ... vd` lines after an optional `count dim` header.
pub fn load_embeddings(path: &Path, language: &str) -> Result<EmbeddingTable, AlignError> {
    let file = std::fs::File::open(path).map_err(|source| AlignError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_embeddings(BufReader::new(file), language)
}

pub fn read_embeddings(reader: impl BufRead, language: &str) -> Result<EmbeddingTable, AlignError> {
    let mut dim: Option<usize> = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| AlignError::Format { line: lineno, message: e.to_string() })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && fields.len() == 2 {
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AlignError::Format { line: lineno, message: e.to_string() })?;
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(AlignError::Format {
                line: lineno,
                message: format!("expected {d} values, found {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AlignError::Format { line: lineno, message: "non-finite value".into() });
        }
        rows.push((fields[0].to_string(), values));
    }
    EmbeddingTable::from_rows(language, dim.unwrap_or(0), rows)
}

pub fn write_embeddings(table: &EmbeddingTable, mut writer: impl Write) -> std::io::Result<()> {
    writeln!(writer, "{} {}", table.len(), table.dim())?;
    for (i, word) in table.words.iter().enumerate() {
        write!(writer, "{word}")?;
        for v in table.matrix.row(i).iter() {
            // `{:?}` prints the shortest representation that round-trips.
            write!(writer, " {v:?}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path) -> Result<(), AlignError> {
    let io_err = |source| AlignError::Io { path: path.display().to_string(), source };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    write_embeddings(table, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}
