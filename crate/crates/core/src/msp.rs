//! Monotone span programs and the secret sharing scheme they induce.
//!
//! An MSP is a `d × e` matrix `M` over `K` whose rows are labelled with players.
//! A set `B` is qualified when the target `ε = (1,0,…,0)` lies in the row span of
//! `M_B`. Sharing `a` picks `a_* = (a, ρ_2, …, ρ_e)` and hands row `l` of `M·a_*`
//! to the owner of row `l`.

use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::structures::{PlayerSet, StructureError, MAX_PLAYERS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MspError {
    #[error("matrix dimensions do not match ({0})")]
    DimensionMismatch(String),
    #[error("owner map is not surjective: player {0} owns no row")]
    NotSurjective(usize),
    #[error("MSP needs d >= e >= 1 (got d={d}, e={e})")]
    BadShape { d: usize, e: usize },
    #[error("matrix entry outside of {0}")]
    ForeignElement(FieldSpec),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("player set {0} is not qualified")]
    Unqualified(PlayerSet),
    #[error("share for row {0} is missing")]
    MissingShare(usize),
    #[error("field GF({q}) has too few points for {n} players")]
    FieldTooSmallForPoints { q: u64, n: usize },
}

pub type Matrix = Vec<Vec<FieldElement>>;

/// Solves `A·x = b` by Gauss-Jordan elimination.
///
/// Pivots are the first nonzero entry scanning columns left to right; free
/// variables are set to zero, so the returned solution is deterministic.
pub fn solve_linear(
    a: &[Vec<FieldElement>],
    b: &[FieldElement],
) -> Result<Option<Vec<FieldElement>>, MspError> {
    let rows = a.len();
    if rows != b.len() {
        return Err(MspError::DimensionMismatch(format!(
            "{rows} rows vs rhs of {}",
            b.len()
        )));
    }
    if rows == 0 {
        return Err(MspError::DimensionMismatch("empty system".into()));
    }
    let cols = a[0].len();
    if a.iter().any(|r| r.len() != cols) {
        return Err(MspError::DimensionMismatch("ragged matrix".into()));
    }
    let zero = b[0].zero_like();
    let mut m: Vec<Vec<FieldElement>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut prow = 0;
    for col in 0..cols {
        let Some(sel) = (prow..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(prow, sel);
        let inv = m[prow][col].inverse().expect("nonzero pivot");
        for x in m[prow].iter_mut() {
            *x *= inv;
        }
        for r in 0..rows {
            if r != prow && !m[r][col].is_zero() {
                let factor = m[r][col];
                for c in col..=cols {
                    let v = m[prow][c];
                    m[r][c] -= factor * v;
                }
            }
        }
        pivots.push(col);
        prow += 1;
        if prow == rows {
            break;
        }
    }
    if m[prow..].iter().any(|r| !r[cols].is_zero()) {
        return Ok(None);
    }
    let mut x = vec![zero; cols];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = m[r][cols];
    }
    Ok(Some(x))
}

pub fn dot(a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = a[0].zero_like();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// The dealer's extended secret `a_* = (a, ρ_2, …, ρ_e)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtendedSecret(pub Vec<FieldElement>);

impl ExtendedSecret {
    pub fn secret(&self) -> FieldElement {
        self.0[0]
    }

    pub fn coords(&self) -> &[FieldElement] {
        &self.0
    }

    pub fn zero(field: &FieldSpec, e: usize) -> Self {
        ExtendedSecret(vec![field.zero(); e])
    }

    pub fn add(&self, other: &ExtendedSecret) -> ExtendedSecret {
        ExtendedSecret(self.0.iter().zip(&other.0).map(|(a, b)| *a + *b).collect())
    }

    pub fn scale(&self, lambda: FieldElement) -> ExtendedSecret {
        ExtendedSecret(self.0.iter().map(|a| *a * lambda).collect())
    }
}

/// Shares indexed by row; `None` where a row's value is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShareVector {
    pub entries: Vec<Option<FieldElement>>,
}

impl ShareVector {
    pub fn full(values: Vec<FieldElement>) -> Self {
        ShareVector {
            entries: values.into_iter().map(Some).collect(),
        }
    }

    pub fn empty(d: usize) -> Self {
        ShareVector {
            entries: vec![None; d],
        }
    }

    /// Keeps only the rows owned by players in `set`.
    pub fn restrict(&self, msp: &Msp, set: PlayerSet) -> ShareVector {
        ShareVector {
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(l, e)| if set.contains(msp.owner(l)) { *e } else { None })
                .collect(),
        }
    }

    pub fn get(&self, row: usize) -> Option<FieldElement> {
        self.entries.get(row).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msp {
    field: FieldSpec,
    matrix: Matrix,
    owners: Vec<usize>,
    n: usize,
    rows_by_player: Vec<Vec<usize>>,
}

impl Msp {
    pub fn new(
        field: FieldSpec,
        matrix: Matrix,
        owners: Vec<usize>,
        n: usize,
    ) -> Result<Self, MspError> {
        if n == 0 || n >= MAX_PLAYERS {
            return Err(StructureError::BadPlayerCount(n).into());
        }
        let d = matrix.len();
        let e = matrix.first().map_or(0, Vec::len);
        if e == 0 || d < e {
            return Err(MspError::BadShape { d, e });
        }
        if matrix.iter().any(|r| r.len() != e) {
            return Err(MspError::DimensionMismatch("ragged matrix".into()));
        }
        if matrix.iter().flatten().any(|x| !field.contains(x)) {
            return Err(MspError::ForeignElement(field));
        }
        if owners.len() != d {
            return Err(MspError::DimensionMismatch(format!(
                "{d} rows but {} owners",
                owners.len()
            )));
        }
        let mut rows_by_player = vec![Vec::new(); n];
        for (l, &p) in owners.iter().enumerate() {
            if p >= n {
                return Err(StructureError::PlayerOutOfRange { player: p, n }.into());
            }
            rows_by_player[p].push(l);
        }
        if let Some(p) = rows_by_player.iter().position(Vec::is_empty) {
            return Err(MspError::NotSurjective(p));
        }
        Ok(Msp {
            field,
            matrix,
            owners,
            n,
            rows_by_player,
        })
    }

    /// Vandermonde MSP: row `i` is `(1, x, …, x^t)` at `x = i + 1`, owned by player `i`.
    pub fn threshold(n: usize, t: usize, field: &FieldSpec) -> Result<Self, MspError> {
        if n as u64 >= field.modulus() {
            return Err(MspError::FieldTooSmallForPoints {
                q: field.modulus(),
                n,
            });
        }
        if t >= n {
            return Err(StructureError::BadThreshold { n, t }.into());
        }
        let matrix = (0..n)
            .map(|i| {
                let x = field.elem(i as u64 + 1);
                (0..=t).map(|j| x.pow(j as u64)).collect()
            })
            .collect();
        Msp::new(*field, matrix, (0..n).collect(), n)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn owner(&self, row: usize) -> usize {
        self.owners[row]
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn player_count(&self) -> usize {
        self.n
    }

    pub fn rows_of(&self, player: usize) -> &[usize] {
        &self.rows_by_player[player]
    }

    /// Row indices owned by members of `set`, ascending.
    pub fn rows_of_set(&self, set: PlayerSet) -> Vec<usize> {
        (0..self.rows())
            .filter(|&l| set.contains(self.owners[l]))
            .collect()
    }

    pub fn row(&self, l: usize) -> &[FieldElement] {
        &self.matrix[l]
    }

    /// `M_B^T` as an `e × |rows(B)|` matrix.
    fn transpose_restricted(&self, rows: &[usize]) -> Matrix {
        (0..self.cols())
            .map(|j| rows.iter().map(|&l| self.matrix[l][j]).collect())
            .collect()
    }

    fn target(&self) -> Vec<FieldElement> {
        let mut eps = vec![self.field.zero(); self.cols()];
        eps[0] = self.field.one();
        eps
    }

    pub fn qualified(&self, set: PlayerSet) -> Result<bool, MspError> {
        set.check_range(self.n)?;
        Ok(self.reconstruction_vector(set).is_some())
    }

    /// `λ` with `λ^T · M_B = ε`, indexed like [`Msp::rows_of_set`].
    pub fn reconstruction_vector(&self, set: PlayerSet) -> Option<Vec<FieldElement>> {
        let rows = self.rows_of_set(set);
        if rows.is_empty() {
            return None;
        }
        solve_linear(&self.transpose_restricted(&rows), &self.target())
            .expect("consistent dimensions")
    }

    /// The lexicographically smallest qualified subset of `available`.
    ///
    /// Qualification is monotone, so this is the shortest qualified prefix of
    /// the sorted member list.
    pub fn smallest_qualified_subset(&self, available: PlayerSet) -> Option<PlayerSet> {
        let mut prefix = PlayerSet::EMPTY;
        for p in available.iter() {
            prefix.insert(p);
            if self.reconstruction_vector(prefix).is_some() {
                return Some(prefix);
            }
        }
        None
    }

    pub fn extend_secret(&self, a: FieldElement, randomness: &[FieldElement]) -> ExtendedSecret {
        assert_eq!(
            randomness.len() + 1,
            self.cols(),
            "need e-1 random coordinates"
        );
        let mut v = Vec::with_capacity(self.cols());
        v.push(a);
        v.extend_from_slice(randomness);
        ExtendedSecret(v)
    }

    /// `α = M · a_*`.
    pub fn shares_of(&self, a_star: &ExtendedSecret) -> Vec<FieldElement> {
        self.matrix.iter().map(|row| dot(row, &a_star.0)).collect()
    }

    pub fn share(
        &self,
        a: FieldElement,
        randomness: &[FieldElement],
    ) -> (ExtendedSecret, ShareVector) {
        let a_star = self.extend_secret(a, randomness);
        let alpha = self.shares_of(&a_star);
        (a_star, ShareVector::full(alpha))
    }

    /// Recovers the secret from the shares of the players in `set`.
    pub fn reconstruct(
        &self,
        shares: &ShareVector,
        set: PlayerSet,
    ) -> Result<FieldElement, MspError> {
        set.check_range(self.n)?;
        let rows = self.rows_of_set(set);
        let lambda = self
            .reconstruction_vector(set)
            .ok_or(MspError::Unqualified(set))?;
        let mut acc = self.field.zero();
        for (&l, &c) in rows.iter().zip(&lambda) {
            let s = shares.get(l).ok_or(MspError::MissingShare(l))?;
            acc += c * s;
        }
        Ok(acc)
    }

    pub fn check_row(&self, a_star: &ExtendedSecret, l: usize, value: FieldElement) -> bool {
        dot(&self.matrix[l], &a_star.0) == value
    }

    /// A vector `r` with `<r, Mb * Mb'> = b_1 b'_1` for all `b, b'`, if one exists.
    pub fn recombination_vector(&self) -> Option<Vec<FieldElement>> {
        let e = self.cols();
        let mut system = Vec::with_capacity(e * e);
        let mut rhs = Vec::with_capacity(e * e);
        for j in 0..e {
            for k in j..e {
                system.push(self.matrix.iter().map(|row| row[j] * row[k]).collect());
                rhs.push(if j == 0 && k == 0 {
                    self.field.one()
                } else {
                    self.field.zero()
                });
            }
        }
        solve_linear(&system, &rhs).expect("consistent dimensions")
    }

    pub fn has_multiplication(&self) -> bool {
        self.recombination_vector().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> FieldSpec {
        FieldSpec::computation(q).unwrap()
    }

    fn set(xs: &[usize]) -> PlayerSet {
        xs.iter().copied().collect()
    }

    fn mat(k: &FieldSpec, rows: &[&[u64]]) -> Matrix {
        rows.iter().map(|r| k.elems(r)).collect()
    }

    // Substitution oracle: A·x == b.
    fn satisfies(a: &Matrix, x: &[FieldElement], b: &[FieldElement]) -> bool {
        a.iter().zip(b).all(|(row, &rhs)| dot(row, x) == rhs)
    }

    #[test]
    fn solve_examples() {
        let k = gf(7);
        let id = mat(&k, &[&[1, 0], &[0, 1]]);
        assert_eq!(
            solve_linear(&id, &k.elems(&[3, 4])).unwrap(),
            Some(k.elems(&[3, 4]))
        );
        let a = mat(&k, &[&[1, 1], &[1, 2]]);
        let x = solve_linear(&a, &k.elems(&[1, 0])).unwrap().unwrap();
        assert_eq!(x, k.elems(&[2, 6]));
        assert!(satisfies(&a, &x, &k.elems(&[1, 0])));
        let singular = mat(&k, &[&[1, 1], &[2, 2]]);
        assert_eq!(solve_linear(&singular, &k.elems(&[1, 0])).unwrap(), None);
        assert!(matches!(
            solve_linear(&a, &k.elems(&[1])),
            Err(MspError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn solve_random_systems_against_substitution() {
        let k = gf(13);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let r = rng.gen_range(1..5);
            let c = rng.gen_range(1..5);
            let a: Matrix = (0..r)
                .map(|_| (0..c).map(|_| k.elem(rng.gen_range(0..13))).collect())
                .collect();
            let b: Vec<_> = (0..r).map(|_| k.elem(rng.gen_range(0..13))).collect();
            match solve_linear(&a, &b).unwrap() {
                Some(x) => assert!(satisfies(&a, &x, &b)),
                None => {
                    // Exhaustively confirm there is no solution for small systems.
                    let total = 13u64.pow(c as u32);
                    for idx in 0..total {
                        let mut rest = idx;
                        let x: Vec<_> = (0..c)
                            .map(|_| {
                                let v = k.elem(rest % 13);
                                rest /= 13;
                                v
                            })
                            .collect();
                        assert!(!satisfies(&a, &x, &b));
                    }
                }
            }
        }
    }

    #[test]
    fn threshold_construction() {
        let k = gf(7);
        let msp = Msp::threshold(3, 1, &k).unwrap();
        assert_eq!(msp.matrix(), &mat(&k, &[&[1, 1], &[1, 2], &[1, 3]]));
        assert_eq!(msp.owners(), &[0, 1, 2]);
        assert!(matches!(
            Msp::threshold(7, 1, &k),
            Err(MspError::FieldTooSmallForPoints { .. })
        ));
        assert!(Msp::threshold(3, 3, &k).is_err());
    }

    #[test]
    fn msp_validation() {
        let k = gf(7);
        assert!(matches!(
            Msp::new(k, mat(&k, &[&[1], &[1]]), vec![0, 0], 2),
            Err(MspError::NotSurjective(1))
        ));
        assert!(matches!(
            Msp::new(k, mat(&k, &[&[1, 1]]), vec![0], 1),
            Err(MspError::BadShape { .. })
        ));
        let foreign = vec![vec![gf(11).elem(1)]];
        assert!(matches!(
            Msp::new(k, foreign, vec![0], 1),
            Err(MspError::ForeignElement(_))
        ));
    }

    #[test]
    fn qualification_examples() {
        let k = gf(7);
        let msp = Msp::threshold(3, 1, &k).unwrap();
        assert!(!msp.qualified(set(&[0])).unwrap());
        assert!(msp.qualified(set(&[0, 1])).unwrap());
        assert!(!msp.qualified(PlayerSet::EMPTY).unwrap());
        assert!(msp.qualified(set(&[4])).is_err());
        assert_eq!(
            msp.reconstruction_vector(set(&[0, 1])),
            Some(k.elems(&[2, 6]))
        );
        assert_eq!(msp.reconstruction_vector(set(&[0])), None);
        let single = Msp::new(k, mat(&k, &[&[1]]), vec![0], 1).unwrap();
        assert_eq!(single.reconstruction_vector(set(&[0])), Some(k.elems(&[1])));
    }

    #[test]
    fn share_reconstruct_examples() {
        let k = gf(7);
        let msp = Msp::threshold(3, 1, &k).unwrap();
        let (a_star, alpha) = msp.share(k.elem(3), &[k.elem(2)]);
        assert_eq!(alpha, ShareVector::full(k.elems(&[5, 0, 2])));
        // Polynomial-evaluation oracle p(x) = 3 + 2x.
        for x in 1..=3u64 {
            assert_eq!(alpha.get(x as usize - 1), Some(k.elem(3 + 2 * x)));
        }
        let (_, zero) = msp.share(k.zero(), &[k.zero()]);
        assert_eq!(zero, ShareVector::full(k.elems(&[0, 0, 0])));
        let (_, constant) = msp.share(k.elem(3), &[k.zero()]);
        assert_eq!(constant, ShareVector::full(k.elems(&[3, 3, 3])));

        let two = alpha.restrict(&msp, set(&[0, 1]));
        assert_eq!(msp.reconstruct(&two, set(&[0, 1])).unwrap(), k.elem(3));
        assert_eq!(msp.reconstruct(&constant, set(&[1, 2])).unwrap(), k.elem(3));
        assert_eq!(
            msp.reconstruct(&alpha, set(&[2])),
            Err(MspError::Unqualified(set(&[2])))
        );
        assert_eq!(
            msp.reconstruct(&alpha.restrict(&msp, set(&[0])), set(&[0, 1])),
            Err(MspError::MissingShare(1))
        );

        assert!(msp.check_row(&a_star, 0, k.elem(5)));
        assert!(!msp.check_row(&a_star, 0, k.elem(6)));
        assert!(msp.check_row(&ExtendedSecret::zero(&k, 2), 2, k.zero()));
    }

    #[test]
    fn recombination_examples() {
        let k = gf(7);
        let msp = Msp::threshold(3, 1, &k).unwrap();
        let r = msp.recombination_vector().unwrap();
        assert_eq!(r, k.elems(&[3, 4, 1]));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let b: Vec<_> = (0..2).map(|_| k.elem(rng.gen_range(0..7))).collect();
            let b2: Vec<_> = (0..2).map(|_| k.elem(rng.gen_range(0..7))).collect();
            let mb = msp.shares_of(&ExtendedSecret(b.clone()));
            let mb2 = msp.shares_of(&ExtendedSecret(b2.clone()));
            let prod: Vec<_> = mb.iter().zip(&mb2).map(|(x, y)| *x * *y).collect();
            assert_eq!(dot(&r, &prod), b[0] * b2[0]);
        }
        let single = Msp::new(k, mat(&k, &[&[1]]), vec![0], 1).unwrap();
        assert_eq!(single.recombination_vector(), Some(k.elems(&[1])));
        assert_eq!(
            Msp::threshold(3, 2, &k).unwrap().recombination_vector(),
            None
        );
        assert_eq!(
            Msp::threshold(4, 2, &k).unwrap().recombination_vector(),
            None
        );
        assert!(Msp::threshold(5, 2, &k).unwrap().has_multiplication());
    }

    #[test]
    fn smallest_qualified_subset_matches_lex_enumeration() {
        let k = gf(11);
        for n in 2..=5 {
            for t in 0..n {
                let msp = Msp::threshold(n, t, &k).unwrap();
                for avail in PlayerSet::all_subsets(n) {
                    let mut candidates: Vec<PlayerSet> = PlayerSet::all_subsets(n)
                        .filter(|s| s.is_subset(&avail) && msp.qualified(*s).unwrap())
                        .collect();
                    candidates.sort();
                    assert_eq!(
                        msp.smallest_qualified_subset(avail),
                        candidates.first().copied()
                    );
                }
            }
        }
    }

    #[test]
    fn share_secrecy_single_player_exhaustive_gf5() {
        let k = gf(5);
        let msp = Msp::threshold(3, 1, &k).unwrap();
        for p in 0..3 {
            let mut reference: Option<Vec<u32>> = None;
            for a in 0..5 {
                let mut hist = vec![0u32; 5];
                for rho in 0..5 {
                    let (_, alpha) = msp.share(k.elem(a), &[k.elem(rho)]);
                    hist[alpha.get(p).unwrap().value() as usize] += 1;
                }
                assert_eq!(hist, vec![1; 5]);
                match &reference {
                    None => reference = Some(hist),
                    Some(r) => assert_eq!(r, &hist),
                }
            }
        }
    }

    #[test]
    fn reconstruct_after_share_exhaustive_gf5() {
        let k = gf(5);
        for n in 1..=4 {
            for t in 0..n {
                let msp = Msp::threshold(n, t, &k).unwrap();
                let qualified: Vec<PlayerSet> = PlayerSet::all_subsets(n)
                    .filter(|s| msp.qualified(*s).unwrap())
                    .collect();
                let tapes = 5u64.pow(t as u32);
                for a in 0..5 {
                    for tape in 0..tapes {
                        let mut rest = tape;
                        let rho: Vec<_> = (0..t)
                            .map(|_| {
                                let v = k.elem(rest % 5);
                                rest /= 5;
                                v
                            })
                            .collect();
                        let (_, alpha) = msp.share(k.elem(a), &rho);
                        for b in &qualified {
                            assert_eq!(msp.reconstruct(&alpha, *b).unwrap(), k.elem(a));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn qualified_iff_reconstruction_vector() {
        let k = gf(7);
        for n in 1..=5 {
            for t in 0..n {
                let msp = Msp::threshold(n, t, &k).unwrap();
                for b in PlayerSet::all_subsets(n) {
                    let lambda = msp.reconstruction_vector(b);
                    assert_eq!(msp.qualified(b).unwrap(), lambda.is_some());
                    assert_eq!(lambda.is_some(), b.len() > t);
                }
            }
        }
    }

    #[test]
    fn multiplication_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, t, q) in [(3, 1, 7), (5, 2, 11), (7, 3, 65521)] {
            let k = gf(q);
            let msp = Msp::threshold(n, t, &k).unwrap();
            let r = msp.recombination_vector().unwrap();
            for _ in 0..1000 {
                let b = ExtendedSecret((0..=t).map(|_| k.elem(rng.gen_range(0..q))).collect());
                let b2 = ExtendedSecret((0..=t).map(|_| k.elem(rng.gen_range(0..q))).collect());
                let prod: Vec<_> = msp
                    .shares_of(&b)
                    .iter()
                    .zip(msp.shares_of(&b2))
                    .map(|(x, y)| *x * y)
                    .collect();
                assert_eq!(dot(&r, &prod), b.secret() * b2.secret());
            }
        }
    }
}
