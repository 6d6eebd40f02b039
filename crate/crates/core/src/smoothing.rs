//! Smooth-decoder transformation: from a query-set decoder to tuple
//! distributions over `[N]^q` whose per-coordinate marginals are bounded by
//! `2q/(delta N)`, with per-tuple functions that preserve the decoding bias
//! and the degree budget.
//!
//! The construction follows the resampling argument exactly, on small
//! instances: coordinates whose query marginal reaches `q/(delta N)` form the
//! bad set; each bad coordinate of a sampled set is replaced by an
//! independent uniform coordinate; the product space of replacements is
//! enumerated, never sampled, so every downstream inequality is checked
//! against exact numbers. Mass on a resampled set `T` is then spread
//! uniformly over the ordered q-tuples covering `T`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codes::{CodeSpec, DecoderSpec, PROB_TOL};
use crate::error::{Error, Result};
use crate::hypercube::{block_of, flatten_blocks, FunctionTable};
use crate::par;

/// Enumeration budget for the resampling product space, in bits.
const RESAMPLE_BUDGET_BITS: usize = 30;

/// One support tuple of the smoothed decoder: an ordered element of `[N]^q`,
/// its probability, and a function on `H_n^q` read through the tuple.
#[derive(Debug, Clone)]
pub struct SmoothTuple {
    pub coords: Vec<usize>,
    pub prob: f64,
    pub table: FunctionTable,
}

/// Smoothed decoder for one message index, with provenance.
#[derive(Debug, Clone)]
pub struct SmoothIndex {
    pub tuples: Vec<SmoothTuple>,
    pub bad_set: Vec<usize>,
    /// The resampled set distribution: (sorted set, probability).
    pub resampled_sets: Vec<(Vec<usize>, f64)>,
}

/// Smoothed decoder for all indices.
#[derive(Debug, Clone)]
pub struct SmoothDecoder {
    pub k: usize,
    pub code_len: usize,
    pub symbol_bits: usize,
    pub queries: usize,
    pub degree_budget: usize,
    pub delta: f64,
    pub per_index: Vec<SmoothIndex>,
}

impl SmoothIndex {
    /// Exact `Pr[s in tuple]` over the tuple distribution.
    pub fn marginal(&self, code_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; code_len];
        for t in &self.tuples {
            let mut distinct = t.coords.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for s in distinct {
                out[s] += t.prob;
            }
        }
        out
    }

    /// Exact decoding bias at the codeword of `msg`: E_mu[f_S(C(x)_S)].
    pub fn bias_at(&self, code: &CodeSpec, msg: u32) -> f64 {
        let mut acc = 0.0;
        let mut symbols = Vec::new();
        for t in &self.tuples {
            symbols.clear();
            symbols.extend(t.coords.iter().map(|&s| code.encode_symbol(s, msg)));
            acc += t.prob * t.table.value_at_symbols(&symbols);
        }
        acc
    }
}

/// Exact query marginals `Pr[s in S]` of the original decoder at index `i`.
pub fn marginals(decoder: &DecoderSpec, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; decoder.code_len];
    for e in &decoder.per_index[i] {
        for &s in &e.set {
            out[s] += e.prob;
        }
    }
    out
}

/// Coordinates whose marginal reaches the threshold `q/(delta N)`. The
/// marginals sum to at most q, so the result always has at most `delta N`
/// elements.
pub fn bad_set(decoder: &DecoderSpec, i: usize, delta: f64) -> Result<Vec<usize>> {
    if !(0.0 < delta && delta <= 0.5) {
        return Err(Error::Parameter(format!("delta {delta} outside (0, 1/2]")));
    }
    let threshold = decoder.max_queries as f64 / (delta * decoder.code_len as f64);
    Ok(marginals(decoder, i)
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= threshold - PROB_TOL)
        .map(|(s, _)| s)
        .collect())
}

/// Smooth one index: resample bad coordinates by exact enumeration, build the
/// conditional-expectation function for each resampled set, and spread the
/// set mass uniformly over covering q-tuples.
pub fn smooth_index(decoder: &DecoderSpec, i: usize, delta: f64) -> Result<SmoothIndex> {
    let bad = bad_set(decoder, i, delta)?;
    let n_len = decoder.code_len;
    let n_bits = decoder.symbol_bits;
    let q = decoder.max_queries;
    let log_n = usize::BITS as usize - (n_len - 1).leading_zeros() as usize;
    if bad.len() * log_n + q > RESAMPLE_BUDGET_BITS {
        return Err(Error::Resource(format!(
            "resampling over {} bad coordinates at N={} exceeds the enumeration budget",
            bad.len(),
            n_len
        )));
    }

    // Accumulate, per resampled set T: its probability and the table of
    //   nu(S) / N^{|bad in S|} * h_S(z restricted through the replacement map)
    // summed over originating sets and replacement outcomes. Dividing by the
    // set probability at the end yields the conditional expectation g_T.
    let mut acc: BTreeMap<Vec<usize>, (f64, Vec<f64>)> = BTreeMap::new();
    for entry in &decoder.per_index[i] {
        let bad_positions: Vec<usize> = (0..entry.set.len())
            .filter(|&j| bad.binary_search(&entry.set[j]).is_ok())
            .collect();
        let outcomes = n_len.pow(bad_positions.len() as u32);
        let outcome_prob = entry.prob / outcomes as f64;
        let mut targets: Vec<usize> = entry.set.clone();
        for outcome in 0..outcomes {
            let mut rest = outcome;
            for (&j, slot) in bad_positions.iter().zip(0..) {
                let _ = slot;
                targets[j] = rest % n_len;
                rest /= n_len;
            }
            let mut set: Vec<usize> = targets.clone();
            set.sort_unstable();
            set.dedup();
            let table_len = 1usize << (n_bits * set.len());
            let slot = acc
                .entry(set.clone())
                .or_insert_with(|| (0.0, vec![0.0; table_len]));
            slot.0 += outcome_prob;
            // position of each original query inside T
            let places: Vec<usize> = targets
                .iter()
                .map(|t| set.binary_search(t).expect("target is in its own set"))
                .collect();
            let mut symbols = vec![0u32; entry.set.len()];
            for (z, cell) in slot.1.iter_mut().enumerate() {
                for (j, &place) in places.iter().enumerate() {
                    symbols[j] = block_of(n_bits, set.len(), z, place);
                }
                *cell += outcome_prob * entry.bias.value_at_symbols(&symbols);
            }
        }
    }

    let mut resampled_sets = Vec::with_capacity(acc.len());
    let mut tuples = Vec::new();
    for (set, (set_prob, weighted)) in acc {
        let g_values: Vec<f64> = weighted.iter().map(|w| w / set_prob).collect();
        let g = FunctionTable::new(n_bits, set.len(), g_values)?;
        resampled_sets.push((set.clone(), set_prob));
        let covers = covering_tuples(&set, q);
        let tuple_prob = set_prob / covers.len() as f64;
        for coords in covers {
            let table = read_through_tuple(&g, &set, &coords, n_bits, q)?;
            tuples.push(SmoothTuple { coords, prob: tuple_prob, table });
        }
    }
    Ok(SmoothIndex { tuples, bad_set: bad, resampled_sets })
}

/// The family F(T): ordered q-tuples over T containing every element of T.
fn covering_tuples(set: &[usize], q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut tuple = vec![0usize; q];
    enumerate_covers(set, q, 0, &mut tuple, &mut out);
    out
}

fn enumerate_covers(
    set: &[usize],
    q: usize,
    depth: usize,
    tuple: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == q {
        let mut seen = vec![false; set.len()];
        for &c in tuple.iter() {
            seen[set.binary_search(&c).unwrap()] = true;
        }
        if seen.iter().all(|&b| b) {
            out.push(tuple.clone());
        }
        return;
    }
    // not enough remaining slots to cover the unused elements: prune
    for &s in set {
        tuple[depth] = s;
        enumerate_covers(set, q, depth + 1, tuple, out);
    }
}

/// Canonical per-tuple function: argument position j is read through
/// coordinate `coords[j]`; where a set element appears several times, only
/// its first occurrence is read and later ones are ignored.
fn read_through_tuple(
    g: &FunctionTable,
    set: &[usize],
    coords: &[usize],
    n_bits: usize,
    q: usize,
) -> Result<FunctionTable> {
    // for each set element, the first tuple position carrying it
    let first_pos: Vec<usize> = set
        .iter()
        .map(|s| coords.iter().position(|c| c == s).expect("covering tuple"))
        .collect();
    FunctionTable::from_fn(n_bits, q, |z| {
        let symbols: Vec<u32> = first_pos
            .iter()
            .map(|&j| block_of(n_bits, q, z, j))
            .collect();
        g.value(flatten_blocks(n_bits, &symbols))
    })
}

/// Smooth every index of the decoder.
pub fn smooth_decoder(decoder: &DecoderSpec, delta: f64) -> Result<SmoothDecoder> {
    decoder.validate()?;
    let per_index: Vec<Result<SmoothIndex>> =
        par::map_indexed(decoder.k, |i| smooth_index(decoder, i, delta));
    let per_index = per_index.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SmoothDecoder {
        k: decoder.k,
        code_len: decoder.code_len,
        symbol_bits: decoder.symbol_bits,
        queries: decoder.max_queries,
        degree_budget: decoder.degree_budget,
        delta,
        per_index,
    })
}

/// Verification report for the two smooth-decoding guarantees plus degree
/// preservation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmoothReport {
    pub min_bias: f64,
    pub max_marginal: f64,
    pub max_degree: usize,
    pub marginal_bound: f64,
    pub bias_floor: f64,
    pub pass: bool,
}

/// Exhaustively checks, over all messages, that the signed bias is at least
/// `2 eps`, the marginals are at most `2q/(delta N)`, and degrees stay within
/// the budget.
pub fn verify_smooth(
    smooth: &SmoothDecoder,
    code: &CodeSpec,
    delta: f64,
    eps: f64,
) -> Result<SmoothReport> {
    if code.num_messages() > 4096 {
        return Err(Error::Resource(format!(
            "exhaustive bias check over 2^{} messages exceeds budget",
            code.k
        )));
    }
    if smooth.k != code.k || smooth.code_len != code.len {
        return Err(Error::Dimension("smooth decoder does not match code".into()));
    }
    let biases = par::map_indexed(code.num_messages(), |msg| {
        let msg = msg as u32;
        (0..code.k)
            .map(|i| code.message_sign(msg, i) * smooth.per_index[i].bias_at(code, msg))
            .fold(f64::INFINITY, f64::min)
    });
    let min_bias = biases.into_iter().fold(f64::INFINITY, f64::min);
    let max_marginal = smooth
        .per_index
        .iter()
        .flat_map(|s| s.marginal(code.len))
        .fold(0.0, f64::max);
    let max_degree = smooth
        .per_index
        .iter()
        .flat_map(|s| s.tuples.iter().map(|t| t.table.degree()))
        .max()
        .unwrap_or(0);
    let marginal_bound = 2.0 * smooth.queries as f64 / (delta * code.len as f64);
    let bias_floor = 2.0 * eps;
    let pass = min_bias >= bias_floor - PROB_TOL
        && max_marginal <= marginal_bound + PROB_TOL
        && max_degree <= smooth.degree_budget;
    Ok(SmoothReport { min_bias, max_marginal, max_degree, marginal_bound, bias_floor, pass })
}

// --- JSON export ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SmoothTupleJson {
    #[serde(rename = "S")]
    coords: Vec<usize>,
    prob: f64,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SmoothIndexJson {
    i: usize,
    #[serde(rename = "badSet")]
    bad_set: Vec<usize>,
    resampled: Vec<(Vec<usize>, f64)>,
    tuples: Vec<SmoothTupleJson>,
}

#[derive(Serialize, Deserialize)]
struct SmoothDecoderJson {
    k: usize,
    #[serde(rename = "N")]
    code_len: usize,
    n: usize,
    q: usize,
    m: usize,
    delta: f64,
    #[serde(rename = "perIndex")]
    per_index: Vec<SmoothIndexJson>,
}

pub fn export_json(smooth: &SmoothDecoder) -> Result<String> {
    let doc = SmoothDecoderJson {
        k: smooth.k,
        code_len: smooth.code_len,
        n: smooth.symbol_bits,
        q: smooth.queries,
        m: smooth.degree_budget,
        delta: smooth.delta,
        per_index: smooth
            .per_index
            .iter()
            .enumerate()
            .map(|(i, s)| SmoothIndexJson {
                i,
                bad_set: s.bad_set.clone(),
                resampled: s.resampled_sets.clone(),
                tuples: s
                    .tuples
                    .iter()
                    .map(|t| SmoothTupleJson {
                        coords: t.coords.clone(),
                        prob: t.prob,
                        table: t.table.values().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&serde_json::to_value(&doc)?)?)
}
