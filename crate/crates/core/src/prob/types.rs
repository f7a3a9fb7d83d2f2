use serde::Serialize;

use super::pmf::{normalize, Pmf};
use crate::error::{invalid, Error, Result};

/// Which of the two users a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    /// Zero-based index (0 for user 1).
    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub const BOTH: [User; 2] = [User::One, User::Two];
}

/// A finite alphabet, optionally with display labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate alphabet label {dup:?}")));
        }
        let size = labels.len();
        Alphabet::new(size)?;
        Ok(Self {
            size,
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Numeric value of each symbol: the index when unlabeled, otherwise the
    /// parsed label. `None` when some label is not a number.
    pub fn numeric_values(&self) -> Option<Vec<f64>> {
        match &self.labels {
            None => Some((0..self.size).map(|i| i as f64).collect()),
            Some(labels) => labels.iter().map(|l| l.trim().parse::<f64>().ok()).collect(),
        }
    }
}

/// A validated probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    mass: Vec<f64>,
}

impl ProbVec {
    pub fn new(mut mass: Vec<f64>) -> Result<Self> {
        normalize("probability vector", &mut mass)?;
        Ok(Self { mass })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[at] = 1.0;
        Self { mass }
    }

    /// Bernoulli(p) on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub(crate) fn from_raw(mass: Vec<f64>) -> Self {
        Self { mass }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

/// Joint law of the two sources, `mass[s1][s2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSourcePMF {
    pmf: Pmf,
    alphabets: [Alphabet; 2],
}

impl JointSourcePMF {
    /// Requires both marginals to be strictly positive.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let joint = Self::new_degenerate(rows)?;
        for user in User::BOTH {
            if joint.marginal(user).as_slice().iter().any(|&p| p <= 0.0) {
                return Err(invalid(
                    "source",
                    format!("marginal of S{} has a zero-mass symbol", user.index() + 1),
                ));
            }
        }
        Ok(joint)
    }

    /// Accepts marginals with zero-mass symbols.
    pub fn new_degenerate(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n1 = rows.len();
        let n2 = rows.first().map_or(0, Vec::len);
        if n1 == 0 || n2 == 0 || rows.iter().any(|r| r.len() != n2) {
            return Err(Error::ShapeMismatch("source rows must form a nonempty rectangle".into()));
        }
        let mass = rows.into_iter().flatten().collect();
        let pmf = Pmf::new(vec![n1, n2], mass)?;
        Ok(Self {
            pmf,
            alphabets: [Alphabet::new(n1)?, Alphabet::new(n2)?],
        })
    }

    /// Product law of two marginals.
    pub fn independent(p1: &ProbVec, p2: &ProbVec) -> Self {
        Self {
            pmf: Pmf::product(p1.as_slice(), p2.as_slice()),
            alphabets: [
                Alphabet::new(p1.len()).expect("nonempty"),
                Alphabet::new(p2.len()).expect("nonempty"),
            ],
        }
    }

    pub fn with_alphabets(mut self, a1: Alphabet, a2: Alphabet) -> Result<Self> {
        if a1.size() != self.size(User::One) || a2.size() != self.size(User::Two) {
            return Err(Error::ShapeMismatch("alphabet sizes differ from source".into()));
        }
        self.alphabets = [a1, a2];
        Ok(self)
    }

    pub fn alphabet(&self, user: User) -> &Alphabet {
        &self.alphabets[user.index()]
    }

    pub fn size(&self, user: User) -> usize {
        self.pmf.shape()[user.index()]
    }

    pub fn prob(&self, s1: usize, s2: usize) -> f64 {
        self.pmf.mass()[s1 * self.size(User::Two) + s2]
    }

    pub fn as_pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn marginal(&self, user: User) -> ProbVec {
        ProbVec::from_raw(self.pmf.marginal(&[user.index()]).mass().to_vec())
    }

    /// Joint with `user`'s source on the first axis and the other on the second.
    pub fn oriented(&self, user: User) -> Pmf {
        match user {
            User::One => self.pmf.clone(),
            User::Two => self.pmf.marginal(&[1, 0]),
        }
    }

    /// P(S_user | S_other), one row per side-information symbol; rows with
    /// zero side-information mass are undefined.
    pub fn conditional_given_other(&self, user: User) -> CondPMF {
        let o = self.oriented(user);
        let (n, m) = (o.shape()[0], o.shape()[1]);
        let rows = (0..m)
            .map(|side| {
                let col: Vec<f64> = (0..n).map(|s| o.mass()[s * m + side]).collect();
                let total: f64 = col.iter().sum();
                (total > 0.0).then(|| col.iter().map(|p| p / total).collect())
            })
            .collect();
        CondPMF::from_rows_unchecked(n, rows)
    }

    /// True when the sources are independent to within `tol` bits of mutual information.
    pub fn is_independent(&self, tol: f64) -> bool {
        self.pmf.mutual_information_of(&[0], &[1]) <= tol
    }
}

/// A conditional law: one distribution over the output alphabet per input symbol.
/// Rows conditioned on zero-mass inputs may be left undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPMF {
    out_size: usize,
    rows: Vec<Option<Vec<f64>>>,
}

impl CondPMF {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_undefined(rows.into_iter().map(Some).collect())
    }

    /// Rows given as `None` are undefined and raise [`Error::UndefinedRow`] when read.
    pub fn with_undefined(rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        let out_size = rows
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| invalid("conditional", "no defined rows"))?;
        let mut checked = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            checked.push(match row {
                Some(mut r) => {
                    if r.len() != out_size {
                        return Err(Error::ShapeMismatch(format!(
                            "conditional row {i} has {} entries, expected {out_size}",
                            r.len()
                        )));
                    }
                    normalize(&format!("conditional row {i}"), &mut r)?;
                    Some(r)
                }
                None => None,
            });
        }
        Ok(Self {
            out_size,
            rows: checked,
        })
    }

    pub(crate) fn from_rows_unchecked(out_size: usize, rows: Vec<Option<Vec<f64>>>) -> Self {
        Self { out_size, rows }
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(n, n, |s| s)
    }

    /// Every input maps to the same output law.
    pub fn constant(in_size: usize, law: &ProbVec) -> Self {
        Self {
            out_size: law.len(),
            rows: vec![Some(law.as_slice().to_vec()); in_size],
        }
    }

    pub fn deterministic(in_size: usize, out_size: usize, map: impl Fn(usize) -> usize) -> Self {
        let rows = (0..in_size)
            .map(|i| {
                let mut r = vec![0.0; out_size];
                r[map(i)] = 1.0;
                Some(r)
            })
            .collect();
        Self { out_size, rows }
    }

    pub fn in_size(&self) -> usize {
        self.rows.len()
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn is_defined(&self, row: usize) -> bool {
        self.rows[row].is_some()
    }

    pub fn row(&self, row: usize) -> Result<&[f64]> {
        self.rows[row].as_deref().ok_or(Error::UndefinedRow { row })
    }

    /// Row contents, or `None` when undefined.
    pub fn row_opt(&self, row: usize) -> Option<&[f64]> {
        self.rows[row].as_deref()
    }
}

/// Transition law P(y1, y2 | x1, x2), stored as `trans[x1][x2][y1][y2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayChannel {
    dims: [usize; 4],
    trans: Vec<f64>,
}

impl TwoWayChannel {
    /// Builds from the nested `channel[x1][x2][y1][y2]` layout.
    pub fn new(nested: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let nx1 = nested.len();
        let nx2 = nested.first().map_or(0, Vec::len);
        let ny1 = nested.first().and_then(|a| a.first()).map_or(0, Vec::len);
        let ny2 = nested
            .first()
            .and_then(|a| a.first())
            .and_then(|b| b.first())
            .map_or(0, Vec::len);
        let dims = [nx1, nx2, ny1, ny2];
        let mut flat = Vec::with_capacity(dims.iter().product());
        for a in &nested {
            if a.len() != nx2 {
                return Err(Error::ShapeMismatch("channel x2 axis is ragged".into()));
            }
            for b in a {
                if b.len() != ny1 {
                    return Err(Error::ShapeMismatch("channel y1 axis is ragged".into()));
                }
                for c in b {
                    if c.len() != ny2 {
                        return Err(Error::ShapeMismatch("channel y2 axis is ragged".into()));
                    }
                    flat.extend_from_slice(c);
                }
            }
        }
        Self::from_flat(dims, flat)
    }

    pub fn from_flat(dims: [usize; 4], mut trans: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::ShapeMismatch("channel alphabets must be nonempty".into()));
        }
        if trans.len() != dims.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "channel with dims {dims:?} needs {} entries, got {}",
                dims.iter().product::<usize>(),
                trans.len()
            )));
        }
        let slice = dims[2] * dims[3];
        for (k, chunk) in trans.chunks_mut(slice).enumerate() {
            let (x1, x2) = (k / dims[1], k % dims[1]);
            normalize(&format!("channel slice ({x1},{x2})"), chunk)?;
        }
        Ok(Self { dims, trans })
    }

    /// Builds from a function giving P(y1, y2 | x1, x2).
    pub fn from_fn(dims: [usize; 4], f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut trans = Vec::with_capacity(dims.iter().product());
        for x1 in 0..dims[0] {
            for x2 in 0..dims[1] {
                for y1 in 0..dims[2] {
                    for y2 in 0..dims[3] {
                        trans.push(f(x1, x2, y1, y2));
                    }
                }
            }
        }
        Self::from_flat(dims, trans)
    }

    /// `[|X1|, |X2|, |Y1|, |Y2|]`.
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn input_size(&self, user: User) -> usize {
        self.dims[user.index()]
    }

    pub fn output_size(&self, user: User) -> usize {
        self.dims[2 + user.index()]
    }

    pub fn prob(&self, x1: usize, x2: usize, y1: usize, y2: usize) -> f64 {
        let [_, nx2, ny1, ny2] = self.dims;
        self.trans[((x1 * nx2 + x2) * ny1 + y1) * ny2 + y2]
    }

    /// Joint output law for one input pair, laid out `[y1][y2]`.
    pub fn slice(&self, x1: usize, x2: usize) -> &[f64] {
        let [_, nx2, ny1, ny2] = self.dims;
        let len = ny1 * ny2;
        let start = (x1 * nx2 + x2) * len;
        &self.trans[start..start + len]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.trans
    }
}

/// Per-letter distortion `d[s][s_hat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    d: Vec<f64>,
    recon: Alphabet,
}

impl DistortionMatrix {
    /// Requires at least one zero entry in every row.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::new_relaxed(rows)?;
        for s in 0..m.rows {
            if m.row(s).iter().all(|&v| v > 0.0) {
                return Err(invalid("distortion", format!("row {s} has no zero entry")));
            }
        }
        Ok(m)
    }

    /// Accepts rows without a zero entry.
    pub fn new_relaxed(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch("distortion rows must form a nonempty rectangle".into()));
        }
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid("distortion", format!("entry {bad} is negative or not finite")));
        }
        Ok(Self {
            rows: n,
            cols: m,
            d,
            recon: Alphabet::new(m)?,
        })
    }

    pub fn hamming(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(rows).expect("hamming matrix is valid")
    }

    pub fn with_recon_alphabet(mut self, recon: Alphabet) -> Result<Self> {
        if recon.size() != self.cols {
            return Err(Error::ShapeMismatch("reconstruction alphabet size differs".into()));
        }
        self.recon = recon;
        Ok(self)
    }

    pub fn source_size(&self) -> usize {
        self.rows
    }

    pub fn recon_size(&self) -> usize {
        self.cols
    }

    pub fn recon_alphabet(&self) -> &Alphabet {
        &self.recon
    }

    pub fn get(&self, s: usize, s_hat: usize) -> f64 {
        self.d[s * self.cols + s_hat]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.d[s * self.cols..(s + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_hamming(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self.get(i, j) == if i == j { 0.0 } else { 1.0 })
            })
    }

    /// Smallest achievable expected distortion for source law `p`.
    pub fn min_distortion(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(s, &ps)| ps * self.row(s).iter().copied().fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// Expected distortion of the best constant reconstruction, and that reconstruction.
    pub fn best_constant(&self, p: &[f64]) -> (f64, usize) {
        (0..self.cols)
            .map(|sh| (p.iter().enumerate().map(|(s, &ps)| ps * self.get(s, sh)).sum::<f64>(), sh))
            .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
    }

    /// Distortion above which zero rate suffices.
    pub fn max_useful_distortion(&self, p: &[f64]) -> f64 {
        self.best_constant(p).0
    }
}

/// Shape consistency between a source, a channel, and the two distortion measures.
pub fn check_model_shapes(
    src: &JointSourcePMF,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
) -> Result<()> {
    for (user, d) in [(User::One, d1), (User::Two, d2)] {
        if d.source_size() != src.size(user) {
            return Err(Error::ShapeMismatch(format!(
                "distortion{} has {} rows but |S{}| = {}",
                user.index() + 1,
                d.source_size(),
                user.index() + 1,
                src.size(user)
            )));
        }
    }
    Ok(())
}
