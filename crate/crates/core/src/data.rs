//! Binary classification datasets: LIBSVM text I/O, scaling, shuffling and
//! the adversarial lower-bound stream.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    /// Position in the source file or generator output.
    pub id: usize,
    pub x: SparseVec,
    /// −1 or +1.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub examples: Vec<Example>,
    /// Feature dimension; every index lies in [1, dim].
    pub dim: usize,
    /// Source file or generator parameters.
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.y > 0.0).count()
    }
}

/// Reads a LIBSVM file. The larger of the two raw labels becomes +1.
pub fn parse_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut ds = parse_libsvm_reader(BufReader::new(file), path)?;
    ds.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ds)
}

/// Parses LIBSVM text from any reader; `origin` is used in error messages.
pub fn parse_libsvm_reader<R: Read>(reader: R, origin: &Path) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut raw = Vec::new();
    let mut dim = 0usize;
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(lineno, format!("bad label {label_tok:?}")))?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got {tok:?}")))?;
            let i: u32 = i
                .parse()
                .ok()
                .filter(|i| *i > 0)
                .ok_or_else(|| parse_err(lineno, format!("bad index {i:?}")))?;
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("bad value {v:?}")))?;
            if indices.last().is_some_and(|last| *last >= i) {
                return Err(parse_err(lineno, format!("index {i} is not ascending")));
            }
            indices.push(i);
            values.push(v);
        }
        let x = SparseVec::new(indices, values).map_err(|e| parse_err(lineno, e.to_string()))?;
        dim = dim.max(x.max_index() as usize);
        raw.push((label, x));
    }

    let mut labels: Vec<f64> = raw.iter().map(|(l, _)| *l).collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::ClassCount {
            path: origin.to_path_buf(),
            found: labels.len(),
        });
    }
    let positive = labels[1];
    let examples = raw
        .into_iter()
        .enumerate()
        .map(|(id, (l, x))| Example {
            id,
            x,
            y: if l == positive { 1.0 } else { -1.0 },
        })
        .collect();
    Ok(Dataset {
        name: origin.to_string_lossy().into_owned(),
        examples,
        dim,
        provenance: origin.display().to_string(),
    })
}

/// Writes `+1`/`-1` labels and shortest round-trip decimal values.
pub fn write_libsvm_writer<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    for e in &ds.examples {
        w.write_all(if e.y > 0.0 { b"+1" } else { b"-1" })?;
        for (i, v) in e.x.iter() {
            write!(w, " {i}:{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_libsvm_writer(ds, BufWriter::new(file)).map_err(io)
}

/// Affine map of every feature onto [0, 1] using its minimum and maximum
/// over the whole dataset, absent entries counting as zero. Constant
/// features map to 0.
pub fn normalize_minmax(ds: &Dataset) -> Dataset {
    let n = ds.examples.len();
    let mut lo = vec![f64::INFINITY; ds.dim + 1];
    let mut hi = vec![f64::NEG_INFINITY; ds.dim + 1];
    let mut count = vec![0usize; ds.dim + 1];
    for e in &ds.examples {
        for (i, v) in e.x.iter() {
            let i = i as usize;
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
            count[i] += 1;
        }
    }
    for i in 1..=ds.dim {
        if count[i] < n {
            lo[i] = lo[i].min(0.0);
            hi[i] = hi[i].max(0.0);
        }
    }
    let scale = |i: usize, v: f64| {
        let range = hi[i] - lo[i];
        if range > 0.0 {
            ((v - lo[i]) / range).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    // features whose absent entries map to a nonzero value
    let dense: Vec<u32> = (1..=ds.dim)
        .filter(|&i| count[i] < n && scale(i, 0.0) != 0.0)
        .map(|i| i as u32)
        .collect();
    let examples = ds
        .examples
        .iter()
        .map(|e| {
            let mut pairs: Vec<(u32, f64)> =
                e.x.iter().map(|(i, v)| (i, scale(i as usize, v))).collect();
            for &i in &dense {
                if e.x.indices().binary_search(&i).is_err() {
                    pairs.push((i, scale(i as usize, 0.0)));
                }
            }
            pairs.sort_by_key(|p| p.0);
            pairs.retain(|p| p.1 != 0.0);
            let (indices, values) = pairs.into_iter().unzip();
            Example {
                id: e.id,
                x: SparseVec::from_sorted_unchecked(indices, values),
                y: e.y,
            }
        })
        .collect();
    Dataset {
        name: ds.name.clone(),
        examples,
        dim: ds.dim,
        provenance: format!("{} (min-max scaled)", ds.provenance),
    }
}

/// Uniformly random reordering driven by `seed`.
pub fn permute(ds: &Dataset, seed: u64) -> Dataset {
    let mut out = ds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.examples.shuffle(&mut rng);
    out
}

/// Stream on which any learner keeping at most B examples suffers linear
/// regret: the first 3B rounds are the basis vectors e_1..e_3B with labels
/// alternating +1, −1, and the remaining rounds replay those pairs uniformly
/// at random.
pub fn gen_lowerbound(budget: usize, rounds: usize, seed: u64) -> Result<Dataset> {
    let prefix = 3 * budget;
    if budget == 0 || rounds < prefix {
        return Err(Error::InvalidConfig(format!(
            "lower-bound stream needs B > 0 and T >= 3B, got B={budget}, T={rounds}"
        )));
    }
    let pair = |t: usize| -> (SparseVec, f64) {
        // t is 1-based
        (
            SparseVec::basis(t as u32),
            if t % 2 == 1 { 1.0 } else { -1.0 },
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (1..=rounds)
        .map(|t| {
            let src = if t <= prefix {
                t
            } else {
                rng.random_range(1..=prefix)
            };
            let (x, y) = pair(src);
            Example { id: t - 1, x, y }
        })
        .collect();
    Ok(Dataset {
        name: format!("lowerbound_B{budget}_T{rounds}"),
        examples,
        dim: prefix,
        provenance: format!("lowerbound generator: B={budget}, T={rounds}, seed={seed}"),
    })
}
