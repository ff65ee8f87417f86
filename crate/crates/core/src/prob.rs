//! Finite-alphabet probability model.
//!
//! Symbols of an alphabet of size `n` are the integers `0..n`. Joint
//! distributions are stored densely in row-major order (last axis fastest),
//! which is also the on-disk layout of the JSON table format:
//!
//! ```json
//! {"alphabets": [2, 2], "mass": [0.5, 0.2, 0.1, 0.2]}
//! ```
//!
//! All entropies are in bits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of cells any materialized object may hold.
pub const DEFAULT_CELL_CAP: usize = 1 << 24;

/// Normalization tolerance applied to user-supplied distributions.
pub const INPUT_TOLERANCE: f64 = 1e-12;

/// Normalization tolerance applied after n-fold products.
pub const PRODUCT_TOLERANCE: f64 = 1e-9;

/// A finite alphabet `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("alphabet size must be at least 1".into()));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

fn check_masses(mass: &[f64], tolerance: f64) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidDistribution("empty mass vector".into()));
    }
    if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !m.is_finite() || **m < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {m}, expected a finite nonnegative value"
        )));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > tolerance {
        return Err(Error::InvalidDistribution(format!(
            "total mass is {total}, expected 1 within {tolerance:e}"
        )));
    }
    Ok(())
}

fn checked_cells(shape: &[usize], cap: usize, what: &str) -> Result<usize> {
    let required = shape.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    if required > cap as u128 {
        return Err(Error::Resource {
            what: what.to_string(),
            required,
            cap: cap as u128,
        });
    }
    Ok(required as usize)
}

/// Probability mass function over a single finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(mass, INPUT_TOLERANCE)
    }

    pub fn with_tolerance(mass: Vec<f64>, tolerance: f64) -> Result<Self> {
        check_masses(&mass, tolerance)?;
        Ok(Self { mass })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        Ok(Self {
            mass: vec![1.0 / size as f64; size],
        })
    }

    /// Point mass at `symbol`.
    pub fn point(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::Usage(format!("symbol {symbol} outside alphabet of size {size}")));
        }
        let mut mass = vec![0.0; size];
        mass[symbol] = 1.0;
        Ok(Self { mass })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.mass.len())
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.mass[symbol]
    }

    /// Symbols with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    /// The n-fold i.i.d. extension; tuples are indexed with the first coordinate most significant.
    pub fn product_extend(&self, n: usize) -> Result<Pmf> {
        self.product_extend_capped(n, DEFAULT_CELL_CAP)
    }

    pub fn product_extend_capped(&self, n: usize, cap: usize) -> Result<Pmf> {
        if n == 0 {
            return Err(Error::Usage("product extension order must be positive".into()));
        }
        let shape = vec![self.len(); n];
        checked_cells(&shape, cap, &format!("{n}-fold product of a {}-symbol pmf", self.len()))?;
        let mut mass = self.mass.clone();
        for _ in 1..n {
            mass = mass
                .iter()
                .flat_map(|&a| self.mass.iter().map(move |&b| a * b))
                .collect();
        }
        Pmf::with_tolerance(mass, PRODUCT_TOLERANCE)
    }

    /// Product distribution `self × other` as a two-axis joint.
    pub fn outer(&self, other: &Pmf) -> JointPmf {
        let mass = self
            .mass
            .iter()
            .flat_map(|&a| other.mass.iter().map(move |&b| a * b))
            .collect();
        JointPmf {
            shape: vec![self.len(), other.len()],
            mass,
        }
    }

    pub fn to_table(&self) -> Table {
        Table {
            alphabets: vec![self.len()],
            mass: self.mass.clone(),
        }
    }

    pub fn from_table(table: Table) -> Result<Self> {
        if table.alphabets.len() != 1 {
            return Err(Error::InvalidDistribution(format!(
                "a pmf needs exactly one alphabet, found {}",
                table.alphabets.len()
            )));
        }
        table.check_len()?;
        Pmf::new(table.mass)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(Table::load(path)?)
    }
}

/// Result of [`marginalize`].
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Pmf(Pmf),
    Joint(JointPmf),
}

/// A conditional slice `P(· | axis = symbol)` over the remaining axes, flattened row-major.
///
/// When the conditioning symbol has zero marginal mass the slice is all zeros
/// and `degenerate` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalSlice {
    pub mass: Vec<f64>,
    pub degenerate: bool,
}

/// Joint pmf over the Cartesian product of two or three alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(shape, mass, INPUT_TOLERANCE)
    }

    pub fn with_tolerance(shape: Vec<usize>, mass: Vec<f64>, tolerance: f64) -> Result<Self> {
        if !(2..=3).contains(&shape.len()) {
            return Err(Error::InvalidDistribution(format!(
                "a joint pmf needs 2 or 3 alphabets, found {}",
                shape.len()
            )));
        }
        for &s in &shape {
            Alphabet::new(s)?;
        }
        let cells = checked_cells(&shape, DEFAULT_CELL_CAP, "joint pmf")?;
        if cells != mass.len() {
            return Err(Error::InvalidDistribution(format!(
                "shape {shape:?} has {cells} cells but {} masses were given",
                mass.len()
            )));
        }
        check_masses(&mass, tolerance)?;
        Ok(Self { shape, mass })
    }

    /// Builds a two-axis joint from nested rows (`rows[x][y]`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDistribution("ragged rows".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    pub fn alphabets(&self) -> Vec<Alphabet> {
        self.shape.iter().map(|&s| Alphabet(s)).collect()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for k in (0..self.shape.len() - 1).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    /// Flat row-major offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.mass[self.offset(index)]
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.shape.len()).rev() {
            out[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
    }

    /// Marginal on a single axis.
    pub fn marginal(&self, axis: usize) -> Pmf {
        let mut mass = vec![0.0; self.shape[axis]];
        let mut idx = vec![0; self.shape.len()];
        for (flat, &m) in self.mass.iter().enumerate() {
            self.unravel(flat, &mut idx);
            mass[idx[axis]] += m;
        }
        Pmf { mass }
    }

    /// Sums out every axis not in `keep`; the result's axes follow the order of `keep`.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Marginal> {
        let axes = self.shape.len();
        if keep.is_empty() || keep.len() >= axes {
            return Err(Error::Usage(format!(
                "marginalization must keep a nonempty proper subset of {axes} axes, got {keep:?}"
            )));
        }
        let mut seen = vec![false; axes];
        for &k in keep {
            if k >= axes || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Usage(format!("invalid axis list {keep:?}")));
            }
        }
        if let [axis] = keep {
            return Ok(Marginal::Pmf(self.marginal(*axis)));
        }
        let shape: Vec<usize> = keep.iter().map(|&k| self.shape[k]).collect();
        let mut mass = vec![0.0; shape.iter().product()];
        let mut idx = vec![0; axes];
        for (flat, &m) in self.mass.iter().enumerate() {
            self.unravel(flat, &mut idx);
            let out = keep.iter().fold(0, |acc, &k| acc * self.shape[k] + idx[k]);
            mass[out] += m;
        }
        Ok(Marginal::Joint(JointPmf { shape, mass }))
    }

    /// Two-axis marginal; convenience wrapper around [`JointPmf::marginalize`].
    pub fn pair(&self, first: usize, second: usize) -> Result<JointPmf> {
        if self.axes() == 2 && first != second {
            if (first, second) == (0, 1) {
                return Ok(self.clone());
            }
            if (first, second) == (1, 0) {
                return Ok(self.transpose());
            }
        }
        match self.marginalize(&[first, second])? {
            Marginal::Joint(j) => Ok(j),
            Marginal::Pmf(_) => unreachable!("two kept axes give a joint"),
        }
    }

    /// Swaps the two axes of a two-axis joint.
    pub fn transpose(&self) -> JointPmf {
        assert_eq!(self.axes(), 2, "transpose needs a two-axis joint");
        let (rows, cols) = (self.shape[0], self.shape[1]);
        let mut mass = vec![0.0; self.mass.len()];
        for r in 0..rows {
            for c in 0..cols {
                mass[c * rows + r] = self.mass[r * cols + c];
            }
        }
        JointPmf {
            shape: vec![cols, rows],
            mass,
        }
    }

    /// `P(· | axis = symbol)` over the remaining axes.
    pub fn condition(&self, axis: usize, symbol: usize) -> Result<ConditionalSlice> {
        if axis >= self.axes() {
            return Err(Error::Usage(format!("axis {axis} out of range")));
        }
        if symbol >= self.shape[axis] {
            return Err(Error::Usage(format!(
                "symbol {symbol} outside alphabet of size {} on axis {axis}",
                self.shape[axis]
            )));
        }
        let mut idx = vec![0; self.axes()];
        let mut slice = Vec::with_capacity(self.mass.len() / self.shape[axis]);
        for (flat, &m) in self.mass.iter().enumerate() {
            self.unravel(flat, &mut idx);
            if idx[axis] == symbol {
                slice.push(m);
            }
        }
        let total: f64 = slice.iter().sum();
        if total > 0.0 {
            slice.iter_mut().for_each(|m| *m /= total);
            Ok(ConditionalSlice {
                mass: slice,
                degenerate: false,
            })
        } else {
            slice.iter_mut().for_each(|m| *m = 0.0);
            Ok(ConditionalSlice {
                mass: slice,
                degenerate: true,
            })
        }
    }

    /// Views the joint as a pmf over its flattened cell index.
    pub fn flatten(&self) -> Pmf {
        Pmf {
            mass: self.mass.clone(),
        }
    }

    pub fn product_extend(&self, n: usize) -> Result<JointPmf> {
        self.product_extend_capped(n, DEFAULT_CELL_CAP)
    }

    /// n-fold i.i.d. extension. Axis `k` of the result ranges over `shape[k]^n`
    /// tuples, first coordinate most significant.
    pub fn product_extend_capped(&self, n: usize, cap: usize) -> Result<JointPmf> {
        if n == 0 {
            return Err(Error::Usage("product extension order must be positive".into()));
        }
        let full: Vec<usize> = self.shape.iter().flat_map(|&s| std::iter::repeat_n(s, n)).collect();
        checked_cells(&full, cap, &format!("{n}-fold product of a {:?} joint", self.shape))?;

        let base_idx: Vec<Vec<usize>> = (0..self.mass.len())
            .map(|flat| {
                let mut idx = vec![0; self.axes()];
                self.unravel(flat, &mut idx);
                idx
            })
            .collect();

        let mut current = self.clone();
        for _ in 1..n {
            let shape: Vec<usize> = current.shape.iter().zip(&self.shape).map(|(a, b)| a * b).collect();
            let next_strides = {
                let mut st = vec![1; shape.len()];
                for k in (0..shape.len() - 1).rev() {
                    st[k] = st[k + 1] * shape[k + 1];
                }
                st
            };
            let mut mass = vec![0.0; current.mass.len() * self.mass.len()];
            let mut cur_idx = vec![0; self.axes()];
            for (flat, &a) in current.mass.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                current.unravel(flat, &mut cur_idx);
                for (b, bidx) in self.mass.iter().zip(&base_idx) {
                    let out: usize = (0..self.axes())
                        .map(|k| (cur_idx[k] * self.shape[k] + bidx[k]) * next_strides[k])
                        .sum();
                    mass[out] = a * b;
                }
            }
            current = JointPmf { shape, mass };
        }
        check_masses(&current.mass, PRODUCT_TOLERANCE)?;
        Ok(current)
    }

    pub fn to_table(&self) -> Table {
        Table {
            alphabets: self.shape.clone(),
            mass: self.mass.clone(),
        }
    }

    pub fn from_table(table: Table) -> Result<Self> {
        table.check_len()?;
        JointPmf::new(table.alphabets, table.mass)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(Table::load(path)?)
    }
}

/// Conditional pmf `P(out | in)`, one row per input symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    rows: Vec<Pmf>,
    output: usize,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let output = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidDistribution("channel has no rows".into()))?;
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                if r.len() != output {
                    return Err(Error::InvalidDistribution(format!(
                        "channel row {i} has {} entries, expected {output}",
                        r.len()
                    )));
                }
                Pmf::new(r).map_err(|e| Error::InvalidDistribution(format!("channel row {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, output })
    }

    /// Noiseless channel `out = in`.
    pub fn identity(size: usize) -> Result<Self> {
        Self::new(
            (0..size)
                .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Channel with a single output symbol.
    pub fn constant(input: usize) -> Result<Self> {
        Self::new(vec![vec![1.0]; input])
    }

    /// Binary symmetric channel with crossover probability `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]])
    }

    pub fn input_alphabet(&self) -> Alphabet {
        Alphabet(self.rows.len())
    }

    pub fn output_alphabet(&self) -> Alphabet {
        Alphabet(self.output)
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input].get(output)
    }

    /// Row-major flattening of the transition matrix.
    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.mass().iter().copied()).collect()
    }

    pub fn to_table(&self) -> Table {
        Table {
            alphabets: vec![self.rows.len(), self.output],
            mass: self.flat(),
        }
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let [input, output] = table.alphabets[..] else {
            return Err(Error::InvalidDistribution(format!(
                "a channel needs exactly two alphabets, found {}",
                table.alphabets.len()
            )));
        };
        table.check_len()?;
        if output == 0 || input == 0 {
            return Err(Error::InvalidDistribution("empty channel alphabet".into()));
        }
        Self::new(table.mass.chunks(output).map(<[f64]>::to_vec).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(Table::load(path)?)
    }
}

/// Sub-normalized nonnegative function dominated by a reference distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubPmf {
    shape: Vec<usize>,
    mass: Vec<f64>,
    reference: Vec<f64>,
}

impl SubPmf {
    pub fn new(shape: Vec<usize>, mass: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        let cells: usize = shape.iter().product();
        if mass.len() != cells || reference.len() != cells {
            return Err(Error::InvalidDistribution("sub-pmf shape mismatch".into()));
        }
        if let Some(i) = (0..cells).find(|&i| !(mass[i] >= 0.0 && mass[i] <= reference[i])) {
            return Err(Error::InvalidDistribution(format!(
                "sub-pmf entry {i} = {} not within [0, {}]",
                mass[i], reference[i]
            )));
        }
        Ok(Self { shape, mass, reference })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass removed relative to the reference.
    pub fn removed(&self) -> f64 {
        self.reference.iter().zip(&self.mass).map(|(r, m)| r - m).sum()
    }

    pub fn is_in_support(&self, flat: usize) -> bool {
        self.mass[flat] > 0.0
    }
}

/// The JSON table format shared by pmfs, joints and channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub alphabets: Vec<usize>,
    pub mass: Vec<f64>,
}

impl Table {
    fn check_len(&self) -> Result<()> {
        let cells = self.alphabets.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        if cells != Some(self.mass.len()) {
            return Err(Error::InvalidDistribution(format!(
                "alphabets {:?} do not match {} mass entries",
                self.alphabets,
                self.mass.len()
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}

/// `mass[x,y,u] = P_XY(x,y) · P_{U|Y}(u|y)`, the Markov chain `X → Y → U`.
pub fn compose_markov(p_xy: &JointPmf, helper: &Channel) -> Result<JointPmf> {
    if p_xy.axes() != 2 {
        return Err(Error::Usage("compose_markov needs a two-axis joint over X×Y".into()));
    }
    let (nx, ny) = (p_xy.shape[0], p_xy.shape[1]);
    if helper.input_alphabet().size() != ny {
        return Err(Error::Usage(format!(
            "helper input alphabet has {} symbols but Y has {ny}",
            helper.input_alphabet().size()
        )));
    }
    let nu = helper.output_alphabet().size();
    checked_cells(&[nx, ny, nu], DEFAULT_CELL_CAP, "Markov composition")?;
    let mut mass = Vec::with_capacity(nx * ny * nu);
    for x in 0..nx {
        for y in 0..ny {
            let pxy = p_xy.mass[x * ny + y];
            mass.extend(helper.rows[y].mass().iter().map(|pu| pxy * pu));
        }
    }
    JointPmf::with_tolerance(vec![nx, ny, nu], mass, PRODUCT_TOLERANCE)
}

/// Free-function form of [`JointPmf::marginalize`].
pub fn marginalize(joint: &JointPmf, keep: &[usize]) -> Result<Marginal> {
    joint.marginalize(keep)
}

/// Shannon entropy in bits; zero-mass terms contribute nothing.
pub fn entropy(mass: &[f64]) -> f64 {
    -mass.iter().filter(|&&m| m > 0.0).map(|&m| m * m.log2()).sum::<f64>()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// Relative entropy `D(P‖Q)` in bits.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Usage(format!(
            "alphabet sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (x, (&pm, &qm)) in p.mass().iter().zip(q.mass()).enumerate() {
        if pm > 0.0 {
            if qm <= 0.0 {
                return Err(Error::SupportViolation { symbol: x, p_mass: pm });
            }
            total += pm * (pm / qm).log2();
        }
    }
    Ok(total)
}

/// Terms involving the helper variable of a three-axis joint over X×Y×U.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HelperTerms {
    pub h_u: f64,
    pub h_x_given_u: f64,
    pub i_u_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShannonQuantities {
    pub h_x: f64,
    pub h_y: f64,
    pub h_xy: f64,
    pub h_x_given_y: f64,
    pub i_x_y: f64,
    pub helper: Option<HelperTerms>,
}

/// Entropies and mutual informations of a joint over X×Y or X×Y×U.
pub fn shannon_quantities(joint: &JointPmf) -> ShannonQuantities {
    let xy = joint.pair(0, 1).expect("axes 0 and 1 exist");
    let h_x = entropy(xy.marginal(0).mass());
    let h_y = entropy(xy.marginal(1).mass());
    let h_xy = entropy(xy.mass());
    let helper = (joint.axes() == 3).then(|| {
        let xu = joint.pair(0, 2).expect("three axes");
        let uy = joint.pair(2, 1).expect("three axes");
        let h_u = entropy(xu.marginal(1).mass());
        HelperTerms {
            h_u,
            h_x_given_u: entropy(xu.mass()) - h_u,
            i_u_y: h_u + h_y - entropy(uy.mass()),
        }
    });
    ShannonQuantities {
        h_x,
        h_y,
        h_xy,
        h_x_given_y: h_xy - h_y,
        i_x_y: h_x + h_y - h_xy,
        helper,
    }
}

/// Doubly symmetric binary source: uniform X, Y = X through a BSC(`crossover`).
pub fn dsbs(crossover: f64) -> Result<JointPmf> {
    let (same, diff) = (0.5 * (1.0 - crossover), 0.5 * crossover);
    JointPmf::new(vec![2, 2], vec![same, diff, diff, same])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn marginalize_examples() {
        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let Marginal::Pmf(m) = uniform.marginalize(&[0]).unwrap() else {
            panic!()
        };
        assert_eq!(m.mass(), &[0.5, 0.5]);

        let j = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2]]).unwrap();
        let Marginal::Pmf(m) = j.marginalize(&[0]).unwrap() else {
            panic!()
        };
        assert!(close(m.get(0), 0.7, 1e-15) && close(m.get(1), 0.3, 1e-15));

        assert!(matches!(j.marginalize(&[0, 1]), Err(Error::Usage(_))));
        assert!(matches!(j.marginalize(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn marginalize_three_axes_keeps_requested_order() {
        let p = compose_markov(&dsbs(0.25).unwrap(), &Channel::binary_symmetric(0.1).unwrap()).unwrap();
        let uy = p.pair(2, 1).unwrap();
        let yu = p.pair(1, 2).unwrap();
        assert_eq!(uy.transpose(), yu);
        assert!(close(uy.get(&[0, 0]), 0.45, 1e-15));
        assert!(close(uy.get(&[1, 0]), 0.05, 1e-15));
    }

    #[test]
    fn condition_examples() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2]]).unwrap();
        let c = j.condition(1, 0).unwrap();
        assert!(!c.degenerate);
        assert!(close(c.mass[0], 0.5 / 0.6, 1e-15) && close(c.mass[1], 0.1 / 0.6, 1e-15));

        let zero_col = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        let c = zero_col.condition(1, 1).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.mass, vec![0.0, 0.0]);

        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_eq!(uniform.condition(1, 0).unwrap().mass, vec![0.5, 0.5]);
        assert!(uniform.condition(1, 2).is_err());
    }

    #[test]
    fn compose_markov_examples() {
        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();

        let id = compose_markov(&uniform, &Channel::identity(2).unwrap()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for u in 0..2 {
                    let expect = if u == y { 0.25 } else { 0.0 };
                    assert_eq!(id.get(&[x, y, u]), expect);
                }
            }
        }

        let constant = compose_markov(&uniform, &Channel::constant(2).unwrap()).unwrap();
        assert_eq!(constant.shape(), &[2, 2, 1]);
        assert_eq!(constant.mass(), uniform.mass());

        let bsc = compose_markov(&uniform, &Channel::binary_symmetric(0.25).unwrap()).unwrap();
        let xu = bsc.pair(0, 2).unwrap();
        // direct summation: P_XU(0,0) = Σ_y P(0,y) P(0|y)
        let oracle = 0.25 * 0.75 + 0.25 * 0.25;
        assert!(close(xu.get(&[0, 0]), oracle, 1e-15));

        assert!(compose_markov(&uniform, &Channel::identity(3).unwrap()).is_err());
    }

    #[test]
    fn product_extend_examples() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        assert_eq!(p.product_extend(1).unwrap(), p);
        let p2 = p.product_extend(2).unwrap();
        let expect = [0.49, 0.21, 0.21, 0.09];
        for (a, b) in p2.mass().iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
        let b3 = Pmf::uniform(2).unwrap().product_extend(3).unwrap();
        assert!(b3.mass().iter().all(|&m| m == 0.125));

        let err = Pmf::uniform(4).unwrap().product_extend_capped(13, 1 << 24).unwrap_err();
        assert!(matches!(err, Error::Resource { required, .. } if required == 1u128 << 26));
    }

    #[test]
    fn joint_product_extend_orders_tuples() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2]]).unwrap();
        let j2 = j.product_extend(2).unwrap();
        assert_eq!(j2.shape(), &[4, 4]);
        // x = (1, 0) -> 2, y = (0, 1) -> 1
        assert!(close(j2.get(&[2, 1]), 0.1 * 0.2, 1e-15));
        assert!(close(j2.get(&[3, 3]), 0.2 * 0.2, 1e-15));
        assert_eq!(j.product_extend(1).unwrap(), j);
    }

    #[test]
    fn shannon_examples() {
        let uniform = JointPmf::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let s = shannon_quantities(&uniform);
        assert!(close(s.h_x_given_y, 1.0, 1e-15) && close(s.i_x_y, 0.0, 1e-15));

        let equal = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let s = shannon_quantities(&equal);
        assert!(close(s.h_x_given_y, 0.0, 1e-15) && close(s.i_x_y, 1.0, 1e-15));

        let s = shannon_quantities(&dsbs(0.25).unwrap());
        let h2 = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!(close(s.h_x_given_y, h2, 1e-12));
        assert!(close(h2, 0.8113, 1e-4));
    }

    #[test]
    fn kl_divergence_checks_support() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let q = Pmf::new(vec![0.5, 0.5]).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        assert!(close(d, 0.7 * 1.4f64.log2() + 0.3 * 0.6f64.log2(), 1e-15));
        let point = Pmf::point(2, 0).unwrap();
        assert!(matches!(
            kl_divergence(&q, &point),
            Err(Error::SupportViolation { symbol: 1, .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(JointPmf::new(vec![2], vec![0.5, 0.5]).is_err());
        assert!(JointPmf::new(vec![2, 2], vec![1.0]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn table_round_trip_is_row_major() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2]]).unwrap();
        let text = serde_json::to_string(&j.to_table()).unwrap();
        assert_eq!(text, r#"{"alphabets":[2,2],"mass":[0.5,0.2,0.1,0.2]}"#);
        let back: Table = serde_json::from_str(&text).unwrap();
        assert_eq!(JointPmf::from_table(back).unwrap(), j);

        let ch = Channel::from_table(Table {
            alphabets: vec![2, 3],
            mass: vec![0.5, 0.5, 0.0, 0.0, 0.0, 1.0],
        })
        .unwrap();
        assert_eq!(ch.prob(1, 2), 1.0);
        assert_eq!(ch.output_alphabet().size(), 3);
    }
}
