//! Concrete locally decodable code fixtures: encoders, query-set decoders
//! with expectation-valued bias tables, corruption adversaries, and the
//! empirical worst-case decoding check.
//!
//! Conventions: a message is a `u32` with bit 1 of the message string in the
//! most significant of the k used bits, matching the canonical hypercube
//! layout. Codeword coordinate `s` of the Hadamard-style fixtures carries the
//! parity of `s & msg`. Decoders are stored by expectation: each query set
//! carries a table `h_S` with values in [-1, 1], the mean of the +/-1-valued
//! output, so every decoding probability is computed exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::FunctionTable;
use crate::par;

pub const PROB_TOL: f64 = 1e-12;

/// Exhaustive-adversary budget: messages times corruption patterns.
const EXHAUSTIVE_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Encoder {
    /// Coordinate `s` carries the GF(2) inner product of `masks[s]` and the
    /// message bits.
    BinaryLinear { masks: Vec<u32> },
    /// Fully tabulated code, one row of symbols per message.
    Table { codewords: Vec<Vec<u32>> },
}

/// A code `C : {0,1}^k -> (H_n)^N`.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub k: usize,
    pub len: usize,
    pub symbol_bits: usize,
    pub encoder: Encoder,
}

impl CodeSpec {
    pub fn num_messages(&self) -> usize {
        1 << self.k
    }

    /// Sign of message bit `i` (0-based): +1 for bit 0, -1 for bit 1.
    pub fn message_sign(&self, msg: u32, i: usize) -> f64 {
        if (msg >> (self.k - 1 - i)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Unit direction of message bit `i` in coordinate-mask space.
    pub fn message_unit(&self, i: usize) -> u32 {
        1 << (self.k - 1 - i)
    }

    pub fn encode_symbol(&self, s: usize, msg: u32) -> u32 {
        match &self.encoder {
            Encoder::BinaryLinear { masks } => (masks[s] & msg).count_ones() & 1,
            Encoder::Table { codewords } => codewords[msg as usize][s],
        }
    }

    pub fn encode(&self, msg: u32) -> Vec<u32> {
        (0..self.len).map(|s| self.encode_symbol(s, msg)).collect()
    }
}

/// One decoder branch: query the coordinates of `set` (strictly ascending)
/// and answer with a +/-1 variable whose mean on symbols `z` is `bias(z)`.
#[derive(Debug, Clone)]
pub struct QueryEntry {
    pub set: Vec<usize>,
    pub prob: f64,
    pub bias: FunctionTable,
}

/// Per-index query-set distributions with bias tables.
#[derive(Debug, Clone)]
pub struct DecoderSpec {
    pub k: usize,
    pub code_len: usize,
    pub symbol_bits: usize,
    /// Maximum number of queries q.
    pub max_queries: usize,
    /// Predetermined-bit budget m (per queried symbol).
    pub degree_budget: usize,
    pub per_index: Vec<Vec<QueryEntry>>,
}

impl DecoderSpec {
    /// Checks probability normalization, set shapes, and bias degrees.
    pub fn validate(&self) -> Result<()> {
        if self.per_index.len() != self.k {
            return Err(Error::Dimension(format!(
                "decoder covers {} indices, code has k={}",
                self.per_index.len(),
                self.k
            )));
        }
        for (i, entries) in self.per_index.iter().enumerate() {
            let total: f64 = entries.iter().map(|e| e.prob).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::Contract(format!(
                    "query distribution for index {i} sums to {total}"
                )));
            }
            for e in entries {
                if e.prob < 0.0 {
                    return Err(Error::Contract(format!("negative probability at index {i}")));
                }
                if e.set.is_empty() || e.set.len() > self.max_queries {
                    return Err(Error::Contract(format!(
                        "query set of size {} at index {i} exceeds q={}",
                        e.set.len(),
                        self.max_queries
                    )));
                }
                if !e.set.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Contract(format!("query set not ascending at index {i}")));
                }
                if *e.set.last().unwrap() >= self.code_len {
                    return Err(Error::Contract(format!("query set out of range at index {i}")));
                }
                if e.bias.n() != self.symbol_bits || e.bias.q() != e.set.len() {
                    return Err(Error::Dimension(format!(
                        "bias table shape mismatch at index {i}"
                    )));
                }
                if e.bias.degree() > self.degree_budget {
                    return Err(Error::Contract(format!(
                        "bias table degree {} exceeds m={} at index {i}",
                        e.bias.degree(),
                        self.degree_budget
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mean +/-1 output on the (possibly corrupted) word `y` for index `i`.
    pub fn decode_bias(&self, i: usize, y: &[u32]) -> f64 {
        let mut acc = 0.0;
        let mut symbols = Vec::with_capacity(self.max_queries);
        for e in &self.per_index[i] {
            symbols.clear();
            symbols.extend(e.set.iter().map(|&s| y[s]));
            acc += e.prob * e.bias.value_at_symbols(&symbols);
        }
        acc
    }
}

/// Positions replaced by the adversary, with their substituted symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct CorruptionPattern {
    pub replacements: Vec<(usize, u32)>,
}

impl CorruptionPattern {
    pub fn apply(&self, y: &mut [u32]) {
        for &(pos, val) in &self.replacements {
            y[pos] = val;
        }
    }
}

/// Exact decoding success probability for one (message, index, word).
pub fn success_probability(
    code: &CodeSpec,
    decoder: &DecoderSpec,
    i: usize,
    msg: u32,
    y: &[u32],
) -> f64 {
    0.5 + 0.5 * code.message_sign(msg, i) * decoder.decode_bias(i, y)
}

fn check_fixture_k(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::Parameter(format!("fixture requires 1 <= k <= {max}, got {k}")));
    }
    Ok(())
}

/// The Hadamard code with its matched-pair decoder: coordinate `a` carries
/// `a.x`, and index `i` is decoded by the XOR of a uniformly random pair
/// `{a, a ^ e_i}`.
pub fn hadamard_code(k: usize) -> Result<(CodeSpec, DecoderSpec)> {
    check_fixture_k(k, 16)?;
    let n_len = 1usize << k;
    let code = CodeSpec {
        k,
        len: n_len,
        symbol_bits: 1,
        encoder: Encoder::BinaryLinear { masks: (0..n_len as u32).collect() },
    };
    let xor_pair = FunctionTable::character(1, 2, 0b11)?;
    let mut per_index = Vec::with_capacity(k);
    for i in 0..k {
        let e = code.message_unit(i) as usize;
        let mut entries = Vec::with_capacity(n_len / 2);
        for a in 0..n_len {
            if a & e == 0 {
                entries.push(QueryEntry {
                    set: vec![a, a ^ e],
                    prob: 2.0 / n_len as f64,
                    bias: xor_pair.clone(),
                });
            }
        }
        per_index.push(entries);
    }
    let decoder = DecoderSpec {
        k,
        code_len: n_len,
        symbol_bits: 1,
        max_queries: 2,
        degree_budget: 1,
        per_index,
    };
    decoder.validate()?;
    Ok((code, decoder))
}

/// q-query generalization of the Hadamard decoder: sample q-1 coordinates
/// uniformly, close the telescope with `a_q = a_1 ^ ... ^ a_{q-1} ^ e_i`, and
/// output the XOR of all queried bits. Colliding coordinates are collapsed
/// into the induced distribution on sets; bits read an even number of times
/// cancel, so each entry's bias is the character of the odd-multiplicity
/// positions.
pub fn parity_code(k: usize, q: usize) -> Result<(CodeSpec, DecoderSpec)> {
    check_fixture_k(k, 16)?;
    if q < 2 {
        return Err(Error::Parameter(format!("parity fixture requires q >= 2, got {q}")));
    }
    if k * (q - 1) > 23 {
        return Err(Error::Resource(format!(
            "parity fixture enumerates 2^{} base tuples",
            k * (q - 1)
        )));
    }
    let n_len = 1usize << k;
    let code = CodeSpec {
        k,
        len: n_len,
        symbol_bits: 1,
        encoder: Encoder::BinaryLinear { masks: (0..n_len as u32).collect() },
    };
    let tuple_count = n_len.pow((q - 1) as u32);
    let tuple_prob = 1.0 / tuple_count as f64;
    let mut per_index = Vec::with_capacity(k);
    for i in 0..k {
        let e = code.message_unit(i) as usize;
        // (sorted set, odd-multiplicity subset mask over set positions) -> prob
        let mut collected: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
        let mut tuple = vec![0usize; q];
        for t in 0..tuple_count {
            let mut rest = t;
            let mut closing = e;
            for slot in tuple.iter_mut().take(q - 1) {
                *slot = rest % n_len;
                rest /= n_len;
                closing ^= *slot;
            }
            tuple[q - 1] = closing;
            let mut set: Vec<usize> = tuple.clone();
            set.sort_unstable();
            set.dedup();
            let mut odd_mask = 0usize;
            for (pos, &s) in set.iter().enumerate() {
                let mult = tuple.iter().filter(|&&t| t == s).count();
                if mult % 2 == 1 {
                    odd_mask |= 1 << (set.len() - 1 - pos);
                }
            }
            *collected.entry((set, odd_mask)).or_insert(0.0) += tuple_prob;
        }
        let mut entries = Vec::with_capacity(collected.len());
        for ((set, odd_mask), prob) in collected {
            let bias = FunctionTable::character(1, set.len(), odd_mask)?;
            entries.push(QueryEntry { set, prob, bias });
        }
        per_index.push(entries);
    }
    let decoder = DecoderSpec {
        k,
        code_len: n_len,
        symbol_bits: 1,
        max_queries: q,
        degree_budget: 1,
        per_index,
    };
    decoder.validate()?;
    Ok((code, decoder))
}

/// Negative-control fixture: the Hadamard encoder with a decoder that always
/// queries the fixed pair `{0, e_i}`. Coordinate 0 is read with probability
/// one, so it lands in the bad set of the smoothing transform, and an
/// adversary corrupting it defeats every index at once.
pub fn skewed_code(k: usize) -> Result<(CodeSpec, DecoderSpec)> {
    check_fixture_k(k, 8)?;
    let n_len = 1usize << k;
    let code = CodeSpec {
        k,
        len: n_len,
        symbol_bits: 1,
        encoder: Encoder::BinaryLinear { masks: (0..n_len as u32).collect() },
    };
    let xor_pair = FunctionTable::character(1, 2, 0b11)?;
    let per_index = (0..k)
        .map(|i| {
            vec![QueryEntry {
                set: vec![0, code.message_unit(i) as usize],
                prob: 1.0,
                bias: xor_pair.clone(),
            }]
        })
        .collect();
    let decoder = DecoderSpec {
        k,
        code_len: n_len,
        symbol_bits: 1,
        max_queries: 2,
        degree_budget: 1,
        per_index,
    };
    decoder.validate()?;
    Ok((code, decoder))
}

#[derive(Debug, Clone)]
pub enum CheckMode {
    /// Enumerate every corruption pattern of weight exactly floor(delta*N).
    Exhaustive,
    /// Random patterns plus a greedy pattern aimed at the highest-marginal
    /// coordinates; an honest lower bound on the adversary.
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct LdcCheck {
    /// Worst-case exact success probability over messages, indices, patterns.
    pub worst_success: f64,
    /// `worst_success - 1/2`; nonpositive means the pair is not an LDC here.
    pub advantage: f64,
    pub worst_message: u32,
    pub worst_index: usize,
    pub worst_pattern: CorruptionPattern,
}

/// Worst-case decoding check against the corruption budget `delta`.
/// Probabilities come from the bias tables exactly; only the adversary is
/// enumerated or sampled.
pub fn empirical_ldc_check(
    code: &CodeSpec,
    decoder: &DecoderSpec,
    delta: f64,
    mode: CheckMode,
) -> Result<LdcCheck> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::Parameter(format!("delta {delta} outside [0, 1/2]")));
    }
    decoder.validate()?;
    let weight = (delta * code.len as f64).floor() as usize;
    let alphabet = 1u32 << code.symbol_bits;

    if let CheckMode::Exhaustive = mode {
        let patterns = pattern_count(code.len, weight, alphabet);
        let total = patterns * code.num_messages() as f64;
        if total > EXHAUSTIVE_BUDGET {
            return Err(Error::Resource(format!(
                "exhaustive check needs {total:.3e} evaluations, budget {EXHAUSTIVE_BUDGET:.0e}"
            )));
        }
    }

    // (success, msg, i, pattern); the full tuple keeps the min deterministic.
    let per_message = par::map_indexed(code.num_messages(), |msg| {
        let msg = msg as u32;
        let clean = code.encode(msg);
        let mut worst: Option<(f64, u32, usize, CorruptionPattern)> = None;
        let mut consider = |success: f64, i: usize, pattern: &CorruptionPattern| {
            let better = match &worst {
                None => true,
                Some((s, _, wi, wp)) => (success, i, pattern) < (*s, *wi, wp),
            };
            if better {
                worst = Some((success, msg, i, pattern.clone()));
            }
        };
        for i in 0..code.k {
            match &mode {
                CheckMode::Exhaustive => {
                    for_each_pattern(&clean, weight, alphabet, &mut |pattern| {
                        let mut y = clean.clone();
                        pattern.apply(&mut y);
                        consider(success_probability(code, decoder, i, msg, &y), i, pattern);
                    });
                }
                CheckMode::Sampled { trials, seed } => {
                    use rand::seq::SliceRandom;
                    use rand::{Rng, SeedableRng};
                    let task = ((msg as u64) << 32) | i as u64;
                    let mut rng =
                        rand_chacha::ChaCha8Rng::seed_from_u64(par::derive_seed(*seed, task));
                    let mut positions: Vec<usize> = (0..code.len).collect();
                    for _ in 0..*trials {
                        positions.shuffle(&mut rng);
                        let mut replacements: Vec<(usize, u32)> = positions[..weight]
                            .iter()
                            .map(|&pos| {
                                let shift = rng.gen_range(1..alphabet);
                                (pos, (clean[pos] + shift) % alphabet)
                            })
                            .collect();
                        replacements.sort_unstable();
                        let pattern = CorruptionPattern { replacements };
                        let mut y = clean.clone();
                        pattern.apply(&mut y);
                        consider(success_probability(code, decoder, i, msg, &y), i, &pattern);
                    }
                    let pattern = greedy_pattern(code, decoder, i, &clean, weight, alphabet);
                    let mut y = clean.clone();
                    pattern.apply(&mut y);
                    consider(success_probability(code, decoder, i, msg, &y), i, &pattern);
                }
            }
        }
        worst.expect("at least one (index, pattern) evaluated")
    });

    let (worst_success, worst_message, worst_index, worst_pattern) = per_message
        .into_iter()
        .min_by(|a, b| a.partial_cmp(b).expect("success probabilities are finite"))
        .expect("at least one message");
    Ok(LdcCheck {
        worst_success,
        advantage: worst_success - 0.5,
        worst_message,
        worst_index,
        worst_pattern,
    })
}

fn pattern_count(n: usize, weight: usize, alphabet: u32) -> f64 {
    let mut binom = 1.0_f64;
    for j in 0..weight {
        binom *= (n - j) as f64 / (j + 1) as f64;
    }
    binom * ((alphabet - 1) as f64).powi(weight as i32)
}

/// Enumerate all patterns of weight exactly `weight` relative to `clean`:
/// every position subset and every non-identity replacement per position.
fn for_each_pattern(
    clean: &[u32],
    weight: usize,
    alphabet: u32,
    visit: &mut impl FnMut(&CorruptionPattern),
) {
    if weight == 0 {
        visit(&CorruptionPattern::default());
        return;
    }
    let n = clean.len();
    let mut positions: Vec<usize> = (0..weight).collect();
    'outer: loop {
        let mut offsets = vec![1u32; weight];
        loop {
            let replacements = positions
                .iter()
                .zip(&offsets)
                .map(|(&pos, &off)| (pos, (clean[pos] + off) % alphabet))
                .collect();
            visit(&CorruptionPattern { replacements });
            let mut advanced = false;
            for o in offsets.iter_mut() {
                if *o + 1 < alphabet {
                    *o += 1;
                    advanced = true;
                    break;
                }
                *o = 1;
            }
            if !advanced {
                break;
            }
        }
        let mut j = weight;
        while j > 0 {
            j -= 1;
            if positions[j] != j + n - weight {
                positions[j] += 1;
                for l in j + 1..weight {
                    positions[l] = positions[l - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Corrupt the `weight` highest-marginal coordinates for index `i`, choosing
/// each replacement greedily against the running bias.
fn greedy_pattern(
    code: &CodeSpec,
    decoder: &DecoderSpec,
    i: usize,
    clean: &[u32],
    weight: usize,
    alphabet: u32,
) -> CorruptionPattern {
    let mut marginal = vec![0.0f64; code.len];
    for e in &decoder.per_index[i] {
        for &s in &e.set {
            marginal[s] += e.prob;
        }
    }
    let mut order: Vec<usize> = (0..code.len).collect();
    order.sort_by(|&a, &b| marginal[b].partial_cmp(&marginal[a]).unwrap().then(a.cmp(&b)));
    let mut y = clean.to_vec();
    let mut replacements = Vec::with_capacity(weight);
    for &pos in order.iter().take(weight) {
        let mut best = (f64::INFINITY, clean[pos]);
        for off in 1..alphabet {
            let val = (clean[pos] + off) % alphabet;
            y[pos] = val;
            let bias = decoder.decode_bias(i, &y);
            if bias < best.0 {
                best = (bias, val);
            }
        }
        y[pos] = best.1;
        replacements.push((pos, best.1));
    }
    replacements.sort_unstable();
    CorruptionPattern { replacements }
}

// --- JSON import/export -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct QueryEntryJson {
    #[serde(rename = "S")]
    set: Vec<usize>,
    prob: f64,
    #[serde(rename = "biasTable")]
    bias_table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DecoderIndexJson {
    i: usize,
    sets: Vec<QueryEntryJson>,
}

#[derive(Serialize, Deserialize)]
struct CodeDecoderJson {
    k: usize,
    #[serde(rename = "N")]
    code_len: usize,
    n: usize,
    q: usize,
    m: usize,
    /// One row per message, `N * n` bits, symbols in coordinate order with
    /// the leading bit of each symbol first.
    codewords: Vec<Vec<u8>>,
    decoder: Vec<DecoderIndexJson>,
}

/// Serialize a code/decoder pair. Bias tables are flat value arrays in the
/// canonical order: query coordinates ascending, then hypercube order.
pub fn export_json(code: &CodeSpec, decoder: &DecoderSpec) -> Result<String> {
    let rows = code.num_messages() * code.len * code.symbol_bits;
    if rows > (1 << 24) {
        return Err(Error::Resource(format!("codeword table of {rows} bits exceeds budget")));
    }
    let codewords = (0..code.num_messages() as u32)
        .map(|msg| {
            let mut row = Vec::with_capacity(code.len * code.symbol_bits);
            for symbol in code.encode(msg) {
                for b in (0..code.symbol_bits).rev() {
                    row.push(((symbol >> b) & 1) as u8);
                }
            }
            row
        })
        .collect();
    let doc = CodeDecoderJson {
        k: code.k,
        code_len: code.len,
        n: code.symbol_bits,
        q: decoder.max_queries,
        m: decoder.degree_budget,
        codewords,
        decoder: decoder
            .per_index
            .iter()
            .enumerate()
            .map(|(i, entries)| DecoderIndexJson {
                i,
                sets: entries
                    .iter()
                    .map(|e| QueryEntryJson {
                        set: e.set.clone(),
                        prob: e.prob,
                        bias_table: e.bias.values().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&serde_json::to_value(&doc)?)?)
}

/// Inverse of [`export_json`]; the code comes back as a table encoder.
pub fn import_json(text: &str) -> Result<(CodeSpec, DecoderSpec)> {
    let doc: CodeDecoderJson = serde_json::from_str(text)?;
    if doc.codewords.len() != 1 << doc.k {
        return Err(Error::Dimension(format!(
            "expected {} codewords, got {}",
            1 << doc.k,
            doc.codewords.len()
        )));
    }
    let codewords = doc
        .codewords
        .iter()
        .map(|row| {
            if row.len() != doc.code_len * doc.n {
                return Err(Error::Dimension(format!(
                    "codeword row of {} bits, expected {}",
                    row.len(),
                    doc.code_len * doc.n
                )));
            }
            Ok(row
                .chunks(doc.n)
                .map(|bits| bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b)))
                .collect())
        })
        .collect::<Result<Vec<Vec<u32>>>>()?;
    let code = CodeSpec {
        k: doc.k,
        len: doc.code_len,
        symbol_bits: doc.n,
        encoder: Encoder::Table { codewords },
    };
    let mut per_index = vec![Vec::new(); doc.k];
    for idx in doc.decoder {
        if idx.i >= doc.k {
            return Err(Error::Dimension(format!("decoder index {} out of range", idx.i)));
        }
        per_index[idx.i] = idx
            .sets
            .into_iter()
            .map(|e| {
                Ok(QueryEntry {
                    bias: FunctionTable::new(doc.n, e.set.len(), e.bias_table)?,
                    set: e.set,
                    prob: e.prob,
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let decoder = DecoderSpec {
        k: doc.k,
        code_len: doc.code_len,
        symbol_bits: doc.n,
        max_queries: doc.q,
        degree_budget: doc.m,
        per_index,
    };
    decoder.validate()?;
    Ok((code, decoder))
}
