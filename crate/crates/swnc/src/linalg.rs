//! Incremental Gaussian elimination over GF(2^8).
//!
//! The receiver state is kept in reduced row-echelon form after every
//! insert, so querying which source packets are decoded is a plain row
//! scan. Source packet indices are 1-based and act as matrix columns.

use std::collections::BTreeMap;

use rand::Rng;

use crate::gf256::{axpy_bytes, Gf256};
use crate::{Error, Result};

/// Coding coefficients for a contiguous window of source packets.
///
/// `offset` is the 1-based index of the first source packet the vector
/// applies to; element `i` multiplies packet `offset + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    offset: u32,
    elems: Vec<Gf256>,
}

impl CoeffVector {
    pub fn new(offset: u32, elems: Vec<Gf256>) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::EmptyCoeffVector);
        }
        Ok(Self { offset, elems })
    }

    /// Unit vector selecting a single source packet.
    pub fn unit(index: u32) -> Self {
        Self {
            offset: index,
            elems: vec![Gf256::ONE],
        }
    }

    /// Uniformly random coefficients over the window, rejecting the
    /// all-zero draw (which carries no information).
    pub fn random<R: Rng>(offset: u32, len: usize, rng: &mut R) -> Self {
        assert!(len >= 1);
        loop {
            let elems: Vec<Gf256> = (0..len).map(|_| Gf256(rng.gen())).collect();
            if elems.iter().any(|e| !e.is_zero()) {
                return Self { offset, elems };
            }
        }
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Highest 1-based source index covered by the vector.
    pub fn last_index(&self) -> u32 {
        self.offset + self.elems.len() as u32 - 1
    }

    pub fn elems(&self) -> &[Gf256] {
        &self.elems
    }

    /// Coefficient applied to source packet `index`, zero outside the window.
    pub fn coeff_at(&self, index: u32) -> Gf256 {
        if index < self.offset || index > self.last_index() {
            Gf256::ZERO
        } else {
            self.elems[(index - self.offset) as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.elems.iter().all(|e| e.is_zero())
    }
}

/// Result of offering one coded packet to the elimination state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// The packet increased the receiver rank.
    Innovative,
    /// The packet was linearly dependent on what is already held.
    Redundant,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<Gf256>,
    payload: Vec<u8>,
}

impl Row {
    fn is_unit(&self) -> bool {
        self.coeffs.iter().filter(|c| !c.is_zero()).count() == 1
    }
}

/// Receiver-side elimination state over a fixed universe of `n_sources`
/// columns, maintained in reduced row-echelon form.
#[derive(Debug, Clone)]
pub struct EliminationState {
    n_sources: u32,
    rows: Vec<Row>,
    pivot_map: BTreeMap<u32, usize>,
    payload_len: Option<usize>,
}

impl EliminationState {
    pub fn new(n_sources: u32) -> Self {
        Self {
            n_sources,
            rows: Vec::new(),
            pivot_map: BTreeMap::new(),
            payload_len: None,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sources(&self) -> u32 {
        self.n_sources
    }

    /// Offer one coded packet. Returns whether it was innovative; the
    /// state is unchanged on [`InsertOutcome::Redundant`] and the RREF
    /// invariant is restored before returning otherwise.
    pub fn eliminate_insert(
        &mut self,
        coeffs: &CoeffVector,
        payload: &[u8],
    ) -> Result<InsertOutcome> {
        if let Some(expected) = self.payload_len {
            if payload.len() != expected {
                return Err(Error::PayloadLength {
                    expected,
                    got: payload.len(),
                });
            }
        }
        assert!(
            coeffs.last_index() <= self.n_sources,
            "coefficient window exceeds source universe"
        );

        let mut v = vec![Gf256::ZERO; self.n_sources as usize];
        for (i, &c) in coeffs.elems().iter().enumerate() {
            v[(coeffs.offset() - 1) as usize + i] = c;
        }
        let mut p = payload.to_vec();

        // Forward-reduce against existing pivot rows.
        for (&col, &row_idx) in &self.pivot_map {
            let c = v[(col - 1) as usize];
            if !c.is_zero() {
                let row = &self.rows[row_idx];
                for (dst, src) in v.iter_mut().zip(&row.coeffs) {
                    *dst += c * *src;
                }
                axpy_bytes(&mut p, c, &row.payload);
            }
        }

        let Some(pivot) = v.iter().position(|c| !c.is_zero()) else {
            return Ok(InsertOutcome::Redundant);
        };

        // Normalize so the pivot coefficient is one.
        let inv = v[pivot].gf_inv().expect("pivot is nonzero");
        for c in v.iter_mut() {
            *c *= inv;
        }
        let mut scaled = vec![0u8; p.len()];
        axpy_bytes(&mut scaled, inv, &p);
        let p = scaled;

        // Clear the pivot column in every existing row (zeros above).
        for row in &mut self.rows {
            let c = row.coeffs[pivot];
            if !c.is_zero() {
                for (dst, src) in row.coeffs.iter_mut().zip(&v) {
                    *dst += c * *src;
                }
                axpy_bytes(&mut row.payload, c, &p);
            }
        }

        self.rows.push(Row {
            coeffs: v,
            payload: p,
        });
        self.pivot_map.insert(pivot as u32 + 1, self.rows.len() - 1);
        self.payload_len.get_or_insert(payload.len());
        Ok(InsertOutcome::Innovative)
    }

    /// Source indices whose RREF row is a unit vector, with payloads.
    pub fn decoded_packets(&self) -> Vec<(u32, &[u8])> {
        let mut out: Vec<(u32, &[u8])> = Vec::new();
        for (&col, &row_idx) in &self.pivot_map {
            let row = &self.rows[row_idx];
            if row.is_unit() {
                out.push((col, row.payload.as_slice()));
            }
        }
        out
    }

    /// Whether source packet `index` is individually decoded.
    pub fn is_decoded(&self, index: u32) -> bool {
        self.pivot_map
            .get(&index)
            .is_some_and(|&row_idx| self.rows[row_idx].is_unit())
    }

    #[doc(hidden)]
    pub fn dense_rows(&self) -> Vec<Vec<Gf256>> {
        self.rows.iter().map(|r| r.coeffs.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain forward elimination with partial pivoting; written
    /// independently of `EliminationState` to act as a rank oracle.
    fn oracle_rank(matrix: &[Vec<Gf256>]) -> usize {
        let mut m: Vec<Vec<Gf256>> = matrix.to_vec();
        let rows = m.len();
        if rows == 0 {
            return 0;
        }
        let cols = m[0].len();
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot_row) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot_row);
            let inv = m[rank][col].gf_inv().unwrap();
            for cell in m[rank].iter_mut() {
                *cell *= inv;
            }
            let pivot_row = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = row[col];
                    for (dst, &src) in row.iter_mut().zip(&pivot_row) {
                        *dst += f * src;
                    }
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    fn dense(cv: &CoeffVector, n: u32) -> Vec<Gf256> {
        (1..=n).map(|i| cv.coeff_at(i)).collect()
    }

    #[test]
    fn unit_vector_into_empty_state_is_innovative() {
        let mut st = EliminationState::new(3);
        let out = st
            .eliminate_insert(&CoeffVector::unit(1), &[0xAA])
            .unwrap();
        assert_eq!(out, InsertOutcome::Innovative);
        assert_eq!(st.rank(), 1);
    }

    #[test]
    fn duplicate_row_is_redundant() {
        let mut st = EliminationState::new(3);
        st.eliminate_insert(&CoeffVector::unit(1), &[0xAA]).unwrap();
        let out = st
            .eliminate_insert(&CoeffVector::unit(1), &[0xAA])
            .unwrap();
        assert_eq!(out, InsertOutcome::Redundant);
        assert_eq!(st.rank(), 1);
    }

    #[test]
    fn payload_length_mismatch_is_rejected() {
        let mut st = EliminationState::new(3);
        st.eliminate_insert(&CoeffVector::unit(1), &[1, 2]).unwrap();
        let err = st
            .eliminate_insert(&CoeffVector::unit(2), &[1])
            .unwrap_err();
        assert!(matches!(err, Error::PayloadLength { .. }));
    }

    #[test]
    fn rank_matches_bruteforce_oracle_on_random_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3117);
        for _ in 0..500 {
            let mut st = EliminationState::new(3);
            let mut stacked = Vec::new();
            for _ in 0..3 {
                let cv = CoeffVector::random(1, 3, &mut rng);
                stacked.push(dense(&cv, 3));
                st.eliminate_insert(&cv, &[0]).unwrap();
            }
            assert_eq!(st.rank(), oracle_rank(&stacked));
        }
    }

    #[test]
    fn rank_matches_oracle_across_window_sizes_up_to_8() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xbead);
        for w in 1..=8u32 {
            for _ in 0..200 {
                let n_inserts = rng.gen_range(1..=(w as usize + 3));
                let mut st = EliminationState::new(w);
                let mut stacked = Vec::new();
                for _ in 0..n_inserts {
                    let off = rng.gen_range(1..=w);
                    let len = rng.gen_range(1..=(w - off + 1)) as usize;
                    let cv = CoeffVector::random(off, len, &mut rng);
                    stacked.push(dense(&cv, w));
                    st.eliminate_insert(&cv, &[0, 0]).unwrap();
                }
                assert_eq!(st.rank(), oracle_rank(&stacked), "w={w}");
            }
        }
    }

    #[test]
    fn full_rank_state_decodes_source_payloads_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x51deca11);
        for _ in 0..50 {
            let w = rng.gen_range(2..=6u32);
            let payload_len = rng.gen_range(1..=32usize);
            let sources: Vec<Vec<u8>> = (0..w)
                .map(|_| (0..payload_len).map(|_| rng.gen()).collect())
                .collect();
            let mut st = EliminationState::new(w);
            while st.rank() < w as usize {
                let cv = CoeffVector::random(1, w as usize, &mut rng);
                let mut payload = vec![0u8; payload_len];
                for (i, src) in sources.iter().enumerate() {
                    axpy_bytes(&mut payload, cv.coeff_at(i as u32 + 1), src);
                }
                st.eliminate_insert(&cv, &payload).unwrap();
            }
            let decoded = st.decoded_packets();
            assert_eq!(decoded.len(), w as usize);
            for (idx, payload) in decoded {
                assert_eq!(payload, sources[(idx - 1) as usize].as_slice());
            }
        }
    }

    #[test]
    fn partial_rank_reports_only_unit_rows() {
        // Rows over 3 packets that reduce to e1 and (0,1,1): only packet 1
        // is individually decoded.
        let mut st = EliminationState::new(3);
        st.eliminate_insert(
            &CoeffVector::new(1, vec![Gf256::ONE, Gf256::ZERO, Gf256::ZERO]).unwrap(),
            &[0x11],
        )
        .unwrap();
        st.eliminate_insert(
            &CoeffVector::new(1, vec![Gf256::ZERO, Gf256::ONE, Gf256::ONE]).unwrap(),
            &[0x22],
        )
        .unwrap();
        let decoded = st.decoded_packets();
        assert_eq!(decoded.len(), 1);
        assert_eq!(decoded[0].0, 1);
        assert_eq!(decoded[0].1, &[0x11]);
        assert!(st.is_decoded(1));
        assert!(!st.is_decoded(2));
        assert!(!st.is_decoded(3));
    }

    #[test]
    fn empty_state_has_no_decoded_packets() {
        let st = EliminationState::new(4);
        assert!(st.decoded_packets().is_empty());
        assert_eq!(st.rank(), 0);
    }

    #[test]
    fn rref_invariant_holds_after_every_insert() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let w = 6u32;
        let mut st = EliminationState::new(w);
        for _ in 0..20 {
            let cv = CoeffVector::random(1, w as usize, &mut rng);
            st.eliminate_insert(&cv, &[0]).unwrap();
            let rows = st.dense_rows();
            for (i, row) in rows.iter().enumerate() {
                let pivot = row.iter().position(|c| !c.is_zero()).unwrap();
                assert_eq!(row[pivot], Gf256::ONE);
                for (j, other) in rows.iter().enumerate() {
                    if i != j {
                        assert_eq!(other[pivot], Gf256::ZERO, "pivot column not clear");
                    }
                }
            }
        }
    }

    #[test]
    fn redundancy_probability_matches_256_pow_r_minus_w() {
        // P(uniform vector lands in a rank-r subspace of GF(256)^w) is
        // 256^(r-w); check empirically within three standard errors.
        let mut rng = ChaCha8Rng::seed_from_u64(0xACE5);
        let w = 3u32;
        let mut base = EliminationState::new(w);
        base.eliminate_insert(&CoeffVector::unit(1), &[0]).unwrap();
        base.eliminate_insert(&CoeffVector::unit(2), &[0]).unwrap();
        assert_eq!(base.rank(), 2);

        let trials = 200_000u32;
        let mut redundant = 0u32;
        for _ in 0..trials {
            let elems: Vec<Gf256> = (0..w).map(|_| Gf256(rng.gen())).collect();
            let cv = CoeffVector::new(1, elems).unwrap();
            let mut st = base.clone();
            if st.eliminate_insert(&cv, &[0]).unwrap() == InsertOutcome::Redundant {
                redundant += 1;
            }
        }
        let p = 256f64.powi(2) / 256f64.powi(3);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let observed = redundant as f64 / trials as f64;
        assert!(
            (observed - p).abs() <= 3.0 * se,
            "observed {observed}, expected {p} +- {}",
            3.0 * se
        );
    }
}
