//! Sparse q-linear forms over the product index space `[N] x B_{n,m}`:
//! per-tuple Fourier block forms, their probability-weighted assembly, the
//! codeword sign witness, marginal forms, and plane sub-stochasticity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codes::CodeSpec;
use crate::error::{Error, Result};
use crate::hypercube::{block_of, char_eval_flat, FunctionTable, HammingBall, SUPPORT_TOL};
use crate::smoothing::{SmoothDecoder, SmoothIndex};

pub const ENTRY_TOL: f64 = 1e-12;

/// A q-linear form stored by its nonzero coefficient tuples. Entry keys are
/// flat indices below `dim`, ordered lexicographically so iteration and
/// serialization are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseForm {
    arity: usize,
    dim: usize,
    entries: BTreeMap<Vec<u32>, f64>,
}

impl SparseForm {
    pub fn new(arity: usize, dim: usize) -> Self {
        Self { arity, dim, entries: BTreeMap::new() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Accumulate a coefficient; exact zeros are not stored.
    pub fn add(&mut self, idx: Vec<u32>, val: f64) {
        debug_assert_eq!(idx.len(), self.arity);
        debug_assert!(idx.iter().all(|&i| (i as usize) < self.dim));
        if val == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry(idx) {
            Entry::Occupied(mut cell) => {
                *cell.get_mut() += val;
                if *cell.get() == 0.0 {
                    cell.remove();
                }
            }
            Entry::Vacant(cell) => {
                cell.insert(val);
            }
        }
    }

    /// `self + c * other`, entrywise.
    pub fn add_scaled(&mut self, other: &SparseForm, c: f64) {
        debug_assert_eq!(self.arity, other.arity);
        debug_assert_eq!(self.dim, other.dim);
        for (idx, val) in other.entries() {
            self.add(idx.to_vec(), c * val);
        }
    }

    pub fn scaled(&self, c: f64) -> SparseForm {
        let mut out = SparseForm::new(self.arity, self.dim);
        for (idx, val) in self.entries() {
            out.add(idx.to_vec(), c * val);
        }
        out
    }

    /// Full multilinear evaluation `A(z[1], ..., z[q])`.
    pub fn evaluate(&self, zs: &[&[f64]]) -> f64 {
        debug_assert_eq!(zs.len(), self.arity);
        let mut acc = 0.0;
        for (idx, val) in self.entries() {
            let mut term = val;
            for (j, &i) in idx.iter().enumerate() {
                term *= zs[j][i as usize];
            }
            acc += term;
        }
        acc
    }

    /// Gradient with respect to argument `axis`: the contraction against all
    /// other arguments.
    pub fn gradient(&self, axis: usize, zs: &[&[f64]]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        for (idx, val) in self.entries() {
            let mut term = val;
            for (j, &i) in idx.iter().enumerate() {
                if j != axis {
                    term *= zs[j][i as usize];
                }
            }
            grad[idx[axis] as usize] += term;
        }
        grad
    }

    /// Contractions with a standard basis vector at `axis` and all-ones
    /// elsewhere, for every index: the axis-aligned hyperplane sums.
    pub fn plane_sums(&self, axis: usize) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for (idx, val) in self.entries() {
            sums[idx[axis] as usize] += val;
        }
        sums
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).sum()
    }

    pub fn is_nonneg(&self) -> bool {
        self.entries.values().all(|&v| v >= 0.0)
    }
}

/// Sign vector of character evaluations of a codeword, flattened over
/// `[N] x B_{n,m}`.
#[derive(Debug, Clone)]
pub struct WitnessVector(pub Vec<f64>);

impl WitnessVector {
    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Flat index of codeword coordinate `s` paired with ball rank `rank`.
pub fn flat_index(s: usize, rank: usize, ball_len: usize) -> u32 {
    (s * ball_len + rank) as u32
}

/// The q-linear block form of a degree-bounded function: coefficients are the
/// Fourier coefficients restricted to `B_{n,m}^q`, indexed by ball ranks.
pub fn block_form(f: &FunctionTable, ball: &HammingBall) -> Result<SparseForm> {
    if f.n() != ball.n() {
        return Err(Error::Dimension("function and ball disagree on n".into()));
    }
    if f.degree() > ball.radius() {
        return Err(Error::Contract(format!(
            "function degree {} exceeds ball radius {}",
            f.degree(),
            ball.radius()
        )));
    }
    let q = f.q();
    let n = f.n();
    let mut form = SparseForm::new(q, ball.len());
    for (u, &c) in f.fourier().iter().enumerate() {
        if c.abs() <= SUPPORT_TOL {
            continue;
        }
        let idx = (0..q)
            .map(|j| {
                ball.rank(block_of(n, q, u, j))
                    .map(|r| r as u32)
                    .ok_or_else(|| Error::Contract("supported block outside the ball".into()))
            })
            .collect::<Result<Vec<u32>>>()?;
        form.add(idx, c);
    }
    Ok(form)
}

/// The unscaled form of one smoothed index: the expectation over support
/// tuples of their block forms, placed at the coordinate blocks. Tuples with
/// coinciding coordinates accumulate into the same entries.
pub fn build_form(
    smooth: &SmoothIndex,
    code_len: usize,
    ball: &HammingBall,
) -> Result<SparseForm> {
    let mut arity = None;
    let mut form = SparseForm::new(
        smooth.tuples.first().map(|t| t.coords.len()).unwrap_or(1),
        code_len * ball.len(),
    );
    for tuple in &smooth.tuples {
        let q = tuple.coords.len();
        if *arity.get_or_insert(q) != q {
            return Err(Error::Dimension("mixed tuple arities".into()));
        }
        let n = tuple.table.n();
        for (u, &c) in tuple.table.fourier().iter().enumerate() {
            if c.abs() <= SUPPORT_TOL {
                continue;
            }
            let idx = (0..q)
                .map(|j| {
                    ball.rank(block_of(n, q, u, j))
                        .map(|r| flat_index(tuple.coords[j], r as usize, ball.len()))
                        .ok_or_else(|| {
                            Error::Contract("smoothed function leaks outside the ball".into())
                        })
                })
                .collect::<Result<Vec<u32>>>()?;
            form.add(idx, tuple.prob * c);
        }
    }
    Ok(form)
}

/// The witness `y_hat = (chi_u(y_s))` for the codeword of `msg`.
pub fn witness(code: &CodeSpec, msg: u32, ball: &HammingBall) -> WitnessVector {
    let mut out = Vec::with_capacity(code.len * ball.len());
    for s in 0..code.len {
        let symbol = code.encode_symbol(s, msg) as usize;
        for u in ball.members() {
            out.push(char_eval_flat(u.value() as usize, symbol));
        }
    }
    WitnessVector(out)
}

/// Message whose bits are the signs of `alpha` (nonnegative entries map to
/// bit 0). This is the single conversion point between sign vectors and bit
/// messages.
pub fn sign_message(code: &CodeSpec, alpha: &[f64]) -> u32 {
    let mut msg = 0u32;
    for (i, &a) in alpha.iter().enumerate() {
        if a < 0.0 {
            msg |= code.message_unit(i);
        }
    }
    msg
}

/// The marginal form `M(b) = E_S[b[1]_{s_1} ... b[q]_{s_q}]` on `[N]`.
pub fn marginal_form(smooth: &SmoothIndex, code_len: usize) -> SparseForm {
    let arity = smooth.tuples.first().map(|t| t.coords.len()).unwrap_or(1);
    let mut form = SparseForm::new(arity, code_len);
    for tuple in &smooth.tuples {
        form.add(tuple.coords.iter().map(|&s| s as u32).collect(), tuple.prob);
    }
    form
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaneCheck {
    pub nonneg: bool,
    pub max_plane_sum: f64,
    pub pass: bool,
}

/// Plane sub-stochasticity: nonnegative entries and every axis-aligned
/// hyperplane sum at most one.
pub fn plane_substochastic_check(form: &SparseForm) -> PlaneCheck {
    let nonneg = form.is_nonneg();
    let mut max_plane_sum = 0.0f64;
    for axis in 0..form.arity() {
        for s in form.plane_sums(axis) {
            max_plane_sum = max_plane_sum.max(s);
        }
    }
    PlaneCheck { nonneg, max_plane_sum, pass: nonneg && max_plane_sum <= 1.0 + ENTRY_TOL }
}

/// Parameters shared by all forms of a basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisParams {
    pub k: usize,
    #[serde(rename = "N")]
    pub code_len: usize,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub delta: f64,
    pub eps: f64,
    pub p: Vec<f64>,
    pub ball_len: usize,
    pub dim: usize,
}

/// The scaled basis `A_1, ..., A_k` with its declared distortion bound.
#[derive(Debug, Clone)]
pub struct EmbeddingBasis {
    pub forms: Vec<SparseForm>,
    pub scale: f64,
    /// Declared distortion: q |B|^{(q+2)/2} / (2 delta eps).
    pub k_bound: f64,
    pub params: BasisParams,
    pub code: CodeSpec,
    pub ball: HammingBall,
}

pub fn validate_exponents(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Parameter("empty exponent vector".into()));
    }
    if p.iter().any(|&pj| !(pj > 1.0) || !pj.is_finite()) {
        return Err(Error::Parameter("every exponent must lie in (1, inf)".into()));
    }
    let dual: f64 = p.iter().map(|pj| 1.0 / pj).sum();
    if dual > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!(
            "exponent vector has sum of reciprocals {dual} > 1"
        )));
    }
    Ok(())
}

/// Assemble the scaled basis from a smoothed decoder: forms scaled by
/// `N |B| / (2 eps)`, declared distortion `q |B|^{(q+2)/2} / (2 delta eps)`.
pub fn embedding_basis(
    code: &CodeSpec,
    smooth: &SmoothDecoder,
    eps: f64,
    p: &[f64],
) -> Result<EmbeddingBasis> {
    if !(0.0 < eps && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps {eps} outside (0, 1/2]")));
    }
    if p.len() != smooth.queries {
        return Err(Error::Parameter(format!(
            "exponent vector of length {} for arity {}",
            p.len(),
            smooth.queries
        )));
    }
    validate_exponents(p)?;
    if smooth.k != code.k || smooth.code_len != code.len {
        return Err(Error::Dimension("smooth decoder does not match code".into()));
    }
    let ball = HammingBall::new(smooth.symbol_bits, smooth.degree_budget)?;
    let ball_len = ball.len() as f64;
    let scale = code.len as f64 * ball_len / (2.0 * eps);
    let q = smooth.queries as f64;
    let k_bound = q * ball_len.powf((q + 2.0) / 2.0) / (2.0 * smooth.delta * eps);
    let forms = smooth
        .per_index
        .iter()
        .map(|s| Ok(build_form(s, code.len, &ball)?.scaled(scale)))
        .collect::<Result<Vec<_>>>()?;
    let params = BasisParams {
        k: code.k,
        code_len: code.len,
        n: smooth.symbol_bits,
        m: smooth.degree_budget,
        q: smooth.queries,
        delta: smooth.delta,
        eps,
        p: p.to_vec(),
        ball_len: ball.len(),
        dim: code.len * ball.len(),
    };
    Ok(EmbeddingBasis { forms, scale, k_bound, params, code: code.clone(), ball })
}

// --- JSON-lines serialization ----------------------------------------------

#[derive(Serialize, Deserialize)]
struct FormHeader {
    q: usize,
    dim: usize,
    scale: f64,
    params: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct FormEntry {
    idx: Vec<u32>,
    val: f64,
}

/// One nonzero per line, preceded by a header line.
pub fn export_jsonl(form: &SparseForm, scale: f64, params: serde_json::Value) -> Result<String> {
    let mut out = serde_json::to_string(&serde_json::to_value(FormHeader {
        q: form.arity(),
        dim: form.dim(),
        scale,
        params,
    })?)?;
    out.push('\n');
    for (idx, val) in form.entries() {
        out.push_str(&serde_json::to_string(&serde_json::to_value(FormEntry {
            idx: idx.to_vec(),
            val,
        })?)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn import_jsonl(text: &str) -> Result<(SparseForm, f64, serde_json::Value)> {
    let mut lines = text.lines();
    let header: FormHeader = serde_json::from_str(
        lines.next().ok_or_else(|| Error::Parameter("empty form document".into()))?,
    )?;
    let mut form = SparseForm::new(header.q, header.dim);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let entry: FormEntry = serde_json::from_str(line)?;
        if entry.idx.len() != header.q {
            return Err(Error::Dimension("entry arity does not match header".into()));
        }
        form.add(entry.idx, entry.val);
    }
    Ok((form, header.scale, header.params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::hadamard_code;
    use crate::smoothing::smooth_decoder;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hadamard_basis(k: usize) -> EmbeddingBasis {
        let (code, decoder) = hadamard_code(k).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        embedding_basis(&code, &smooth, 0.25, &[2.0, 2.0]).unwrap()
    }

    #[test]
    fn block_form_of_xor_character_is_a_single_entry() {
        let ball = HammingBall::new(1, 1).unwrap();
        let f = FunctionTable::character(1, 2, 0b11).unwrap();
        let form = block_form(&f, &ball).unwrap();
        assert_eq!(form.nnz(), 1);
        let (idx, val) = form.entries().next().unwrap();
        assert_eq!(idx, &[1, 1]);
        assert!((val - 1.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn block_form_of_constant_sits_at_the_origin() {
        let ball = HammingBall::new(1, 1).unwrap();
        let f = FunctionTable::constant(1, 2, 1.0).unwrap();
        let form = block_form(&f, &ball).unwrap();
        assert_eq!(form.nnz(), 1);
        let (idx, val) = form.entries().next().unwrap();
        assert_eq!(idx, &[0, 0]);
        assert!((val - 1.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn block_form_matches_inner_product_oracle_on_random_degree_one() {
        // random degree-1 function on H_2^2 built from low-weight characters
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2;
        let q = 2;
        let ball = HammingBall::new(n, 1).unwrap();
        let mut coeffs = vec![0.0; 1 << (n * q)];
        for u1 in [0usize, 0b01, 0b10] {
            for u2 in [0usize, 0b01, 0b10] {
                coeffs[(u1 << n) | u2] = rng.gen_range(-0.2..0.2);
            }
        }
        let f = FunctionTable::from_fn(n, q, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(u, c)| c * char_eval_flat(u, x))
                .sum()
        })
        .unwrap();
        let form = block_form(&f, &ball).unwrap();
        assert!(form.nnz() <= 9);
        // oracle: direct inner products
        for (idx, val) in form.entries() {
            let u = (ball.member(idx[0] as usize).value() as usize) << n
                | ball.member(idx[1] as usize).value() as usize;
            let direct: f64 = (0..f.num_points())
                .map(|x| f.value(x) * char_eval_flat(u, x))
                .sum::<f64>()
                / f.num_points() as f64;
            assert!((val - direct).abs() < ENTRY_TOL);
        }
    }

    #[test]
    fn block_form_rejects_degree_violation() {
        let ball = HammingBall::new(2, 1).unwrap();
        let f = FunctionTable::character(2, 1, 0b11).unwrap();
        assert!(matches!(block_form(&f, &ball), Err(Error::Contract(_))));
    }

    #[test]
    fn hadamard_form_is_a_weighted_partial_permutation() {
        let (code, decoder) = hadamard_code(3).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        let ball = HammingBall::new(1, 1).unwrap();
        let form = build_form(&smooth.per_index[0], code.len, &ball).unwrap();
        assert_eq!(form.nnz(), 8);
        let e = code.message_unit(0);
        for (idx, val) in form.entries() {
            assert!((val - 0.125).abs() < ENTRY_TOL);
            // entries live on the weight-one Fourier block, at (a, a ^ e_1)
            assert_eq!(idx[0] % 2, 1);
            assert_eq!(idx[1] % 2, 1);
            let a = idx[0] / 2;
            let b = idx[1] / 2;
            assert_eq!(a ^ b, e);
        }
        assert!((form.sum() - 1.0).abs() < ENTRY_TOL);
        assert!((form.abs_sum() - 1.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn all_zero_functions_build_an_empty_form() {
        let (code, decoder) = hadamard_code(2).unwrap();
        let mut smooth = smooth_decoder(&decoder, 0.25).unwrap();
        let ball = HammingBall::new(1, 1).unwrap();
        for t in &mut smooth.per_index[0].tuples {
            t.table = FunctionTable::constant(1, 2, 0.0).unwrap();
        }
        let form = build_form(&smooth.per_index[0], code.len, &ball).unwrap();
        assert_eq!(form.nnz(), 0);
    }

    #[test]
    fn witness_of_zero_codeword_is_all_ones() {
        let (code, _) = hadamard_code(3).unwrap();
        let ball = HammingBall::new(1, 1).unwrap();
        let w = witness(&code, 0, &ball);
        assert!(w.0.iter().all(|&v| v == 1.0));
        assert!((w.norm_l2() - 4.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn block_forms_reproduce_function_values_on_witness_slices() {
        // F_S(y_hat slices) equals f_S(C(x)_S) for all tuples and messages
        let (code, decoder) = hadamard_code(3).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        let ball = HammingBall::new(1, 1).unwrap();
        for msg in 0..code.num_messages() as u32 {
            let w = witness(&code, msg, &ball);
            for s in &smooth.per_index {
                for t in &s.tuples {
                    let f = block_form(&t.table, &ball).unwrap();
                    let slices: Vec<&[f64]> = t
                        .coords
                        .iter()
                        .map(|&c| &w.0[c * ball.len()..(c + 1) * ball.len()])
                        .collect();
                    let via_form = f.evaluate(&slices);
                    let symbols: Vec<u32> =
                        t.coords.iter().map(|&c| code.encode_symbol(c, msg)).collect();
                    let direct = t.table.value_at_symbols(&symbols);
                    assert!((via_form - direct).abs() < ENTRY_TOL);
                }
            }
        }
    }

    #[test]
    fn marginal_form_of_hadamard_is_plane_substochastic_after_scaling() {
        let (code, decoder) = hadamard_code(3).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        let m = marginal_form(&smooth.per_index[0], code.len);
        assert_eq!(m.nnz(), 8);
        assert!((m.sum() - 1.0).abs() < ENTRY_TOL);
        // delta N / q = 1/2
        let scaled = m.scaled(0.5);
        let check = plane_substochastic_check(&scaled);
        assert!(check.pass);
        assert!((check.max_plane_sum - 0.0625).abs() < ENTRY_TOL);
    }

    #[test]
    fn point_mass_marginal_form_saturates_iff_budget_is_tight() {
        let mut m = SparseForm::new(2, 4);
        m.add(vec![1, 2], 1.0);
        // delta N = q: scaling by one keeps plane sums exactly one
        let check = plane_substochastic_check(&m);
        assert!(check.pass);
        assert!((check.max_plane_sum - 1.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn uniform_tuple_distribution_has_flat_plane_sums() {
        let n = 3u32;
        let mut m = SparseForm::new(2, n as usize);
        for a in 0..n {
            for b in 0..n {
                m.add(vec![a, b], 1.0 / (n * n) as f64);
            }
        }
        for axis in 0..2 {
            for s in m.plane_sums(axis) {
                assert!((s - 1.0 / n as f64).abs() < ENTRY_TOL);
            }
        }
    }

    #[test]
    fn plane_check_accepts_identity_and_rejects_ones() {
        let mut id = SparseForm::new(2, 3);
        for i in 0..3 {
            id.add(vec![i, i], 1.0);
        }
        let check = plane_substochastic_check(&id);
        assert!(check.pass);
        assert!((check.max_plane_sum - 1.0).abs() < ENTRY_TOL);

        let mut ones = SparseForm::new(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                ones.add(vec![i, j], 1.0);
            }
        }
        let check = plane_substochastic_check(&ones);
        assert!(!check.pass);
        assert!((check.max_plane_sum - 2.0).abs() < ENTRY_TOL);
    }

    #[test]
    fn basis_scale_and_distortion_constants() {
        let basis = hadamard_basis(3);
        assert!((basis.scale - 32.0).abs() < ENTRY_TOL);
        assert!((basis.k_bound - 128.0).abs() < ENTRY_TOL);
        assert_eq!(basis.forms.len(), 3);
        assert_eq!(basis.params.dim, 16);
        // scaled entries are 32/8 = 4
        for f in &basis.forms {
            for (_, v) in f.entries() {
                assert!((v - 4.0).abs() < ENTRY_TOL);
            }
        }
    }

    #[test]
    fn invalid_exponent_vectors_are_rejected() {
        let (code, decoder) = hadamard_code(3).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        for p in [vec![2.0, 1.5], vec![1.0, 2.0], vec![2.0]] {
            assert!(embedding_basis(&code, &smooth, 0.25, &p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let basis = hadamard_basis(3);
        let params = serde_json::to_value(&basis.params).unwrap();
        let text = export_jsonl(&basis.forms[0], basis.scale, params.clone()).unwrap();
        let (form, scale, got_params) = import_jsonl(&text).unwrap();
        assert_eq!(form, basis.forms[0]);
        assert_eq!(scale, basis.scale);
        assert_eq!(got_params, params);
    }

    proptest! {
        #[test]
        fn evaluation_is_linear_in_each_argument(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 4usize;
            let mut form = SparseForm::new(3, dim);
            for _ in 0..6 {
                let idx = vec![
                    rng.gen_range(0..dim as u32),
                    rng.gen_range(0..dim as u32),
                    rng.gen_range(0..dim as u32),
                ];
                form.add(idx, rng.gen_range(-1.0..1.0));
            }
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let (x, x2, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let c = rng.gen_range(-2.0..2.0);
            let combined: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| a + c * b).collect();
            let lhs = form.evaluate(&[&combined, &y, &z]);
            let rhs = form.evaluate(&[&x, &y, &z]) + c * form.evaluate(&[&x2, &y, &z]);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
