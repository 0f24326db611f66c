//! Flat tori, truncated dual-lattice mode sets, and unitary-valued maps given
//! as finite Fourier series.
//!
//! Points of `T^d` are `x ∈ [0,1)^d`; the mode with integer label `n` carries
//! momentum `k = n + ε + θ` (spin structure `ε`, flat twist `θ`).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ONE, ZERO};

pub const DEFAULT_UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusSpec {
    spin: Vec<f64>,
    twist: Vec<f64>,
}

impl TorusSpec {
    /// `spin` entries must be exactly 0 or 1/2; `twist` entries lie in `[0, 1)`.
    pub fn new(spin: Vec<f64>, twist: Vec<f64>) -> Result<Self> {
        if spin.is_empty() || spin.len() > 3 {
            return Err(Error::UnsupportedDimension { dim: spin.len() });
        }
        if spin.len() != twist.len() {
            return Err(Error::DimensionMismatch { expected: spin.len(), got: twist.len() });
        }
        for (j, e) in spin.iter().enumerate() {
            if *e != 0.0 && *e != 0.5 {
                return Err(Error::InvalidTorus(format!("spin structure entry {j} is {e}; must be 0 or 0.5")));
            }
        }
        for (j, t) in twist.iter().enumerate() {
            if !(0.0..1.0).contains(t) {
                return Err(Error::InvalidTorus(format!("twist entry {j} is {t}; must lie in [0, 1)")));
            }
        }
        Ok(Self { spin, twist })
    }

    pub fn dim(&self) -> usize {
        self.spin.len()
    }

    pub fn spin(&self) -> &[f64] {
        &self.spin
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    /// `ε + θ`, the offset of every momentum from the integer lattice.
    pub fn shift(&self) -> Vec<f64> {
        self.spin.iter().zip(&self.twist).map(|(e, t)| e + t).collect()
    }

    pub fn momentum(&self, n: &[i64]) -> Vec<f64> {
        n.iter().zip(self.shift()).map(|(n, s)| *n as f64 + s).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeSet {
    cutoff: usize,
    dim: usize,
    labels: Vec<Vec<i64>>,
    momenta: Vec<Vec<f64>>,
}

impl ModeSet {
    /// All momenta `n + ε + θ` with `max |n_j| ≤ cutoff`, lexicographic in `n`.
    pub fn new(spec: &TorusSpec, cutoff: usize) -> Self {
        let dim = spec.dim();
        let side = 2 * cutoff + 1;
        let total = side.pow(dim as u32);
        let lam = cutoff as i64;
        let mut labels = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut n = vec![0i64; dim];
            for j in (0..dim).rev() {
                n[j] = (rest % side) as i64 - lam;
                rest /= side;
            }
            labels.push(n);
        }
        let momenta = labels.iter().map(|n| spec.momentum(n)).collect();
        Self { cutoff, dim, labels, momenta }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Vec<i64>] {
        &self.labels
    }

    pub fn momenta(&self) -> &[Vec<f64>] {
        &self.momenta
    }

    /// Position of the integer label `n`, if it lies in the box.
    pub fn index_of(&self, n: &[i64]) -> Option<usize> {
        let lam = self.cutoff as i64;
        let side = 2 * lam + 1;
        let mut idx = 0i64;
        for v in n {
            if v.abs() > lam {
                return None;
            }
            idx = idx * side + (v + lam);
        }
        Some(idx as usize)
    }
}

/// A map `g: T^d → U(N)` as a finite Fourier series `g(x) = Σ_w ĝ_w e^{2πi w·x}`.
#[derive(Clone, Debug)]
pub struct UnitaryMap {
    dim: usize,
    rank: usize,
    coefficients: BTreeMap<Vec<i64>, CMat>,
    character: Option<Vec<i64>>,
}

/// Samples of a map on the uniform grid, in lexicographic grid order.
#[derive(Clone, Debug)]
pub struct MapSamples {
    pub resolution: usize,
    pub values: Vec<CMat>,
    pub unitarity_residual: f64,
}

/// Fourier coefficients of `ω = g⁻¹dg`, one series per coordinate direction.
#[derive(Clone, Debug)]
pub struct MaurerCartan {
    pub dim: usize,
    pub rank: usize,
    pub components: Vec<BTreeMap<Vec<i64>, CMat>>,
    /// Largest `‖ω_j(x) + ω_j(x)†‖` found on the checking grid.
    pub skew_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Winding {
    pub degrees: Vec<i64>,
    pub residual: f64,
}

fn grid_points(dim: usize, resolution: usize) -> impl Iterator<Item = Vec<f64>> {
    let total = resolution.pow(dim as u32);
    (0..total).map(move |idx| {
        let mut rest = idx;
        let mut x = vec![0.0; dim];
        for j in (0..dim).rev() {
            x[j] = (rest % resolution) as f64 / resolution as f64;
            rest /= resolution;
        }
        x
    })
}

fn fourier_phase(w: &[i64], x: &[f64]) -> C64 {
    let arg: f64 = w.iter().zip(x).map(|(w, x)| *w as f64 * x).sum();
    C64::from_polar(1.0, 2.0 * PI * arg)
}

impl UnitaryMap {
    pub fn from_coefficients(dim: usize, rank: usize, coefficients: BTreeMap<Vec<i64>, CMat>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension { dim });
        }
        for (w, c) in &coefficients {
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: w.len() });
            }
            if c.nrows() != rank || c.ncols() != rank {
                return Err(Error::DimensionMismatch { expected: rank, got: c.nrows() });
            }
        }
        let coefficients = coefficients.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        Ok(Self { dim, rank, coefficients, character: None })
    }

    /// `g(x) = e^{2πi m·x}` with `N = 1`.
    pub fn character(m: Vec<i64>) -> Self {
        let mut coefficients = BTreeMap::new();
        let dim = m.len();
        coefficients.insert(m.clone(), CMat::from_element(1, 1, ONE));
        Self { dim, rank: 1, coefficients, character: Some(m) }
    }

    pub fn constant(dim: usize, u: CMat) -> Self {
        let rank = u.nrows();
        let mut coefficients = BTreeMap::new();
        coefficients.insert(vec![0; dim], u);
        Self { dim, rank, coefficients, character: None }
    }

    /// `diag(c_a · e^{2πi m_a·x})` for unit-modulus constants `c_a`.
    pub fn diagonal(dim: usize, entries: &[(Vec<i64>, C64)]) -> Result<Self> {
        let rank = entries.len();
        let mut coefficients: BTreeMap<Vec<i64>, CMat> = BTreeMap::new();
        for (a, (m, c)) in entries.iter().enumerate() {
            if m.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.len() });
            }
            coefficients.entry(m.clone()).or_insert_with(|| CMat::zeros(rank, rank))[(a, a)] = *c;
        }
        Self::from_coefficients(dim, rank, coefficients)
    }

    /// Parses the coefficient-file format (see the CLI documentation):
    /// `N <rank>`, `dim <d>`, then one line `w_1 … w_d a b re im` per entry
    /// with 0-based row `a` and column `b`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rank = None;
        let mut dim = None;
        let mut entries: Vec<(usize, Vec<i64>, usize, usize, C64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::MapParse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "N" | "dim" => {
                    if fields.len() != 2 {
                        return Err(err(format!("expected `{} <integer>`", fields[0])));
                    }
                    let v: usize = fields[1].parse().map_err(|_| err(format!("bad integer `{}`", fields[1])))?;
                    if fields[0] == "N" {
                        rank = Some(v);
                    } else {
                        dim = Some(v);
                    }
                }
                _ => {
                    let d = dim.ok_or_else(|| err("`dim` must precede coefficient lines".into()))?;
                    if fields.len() != d + 4 {
                        return Err(err(format!("expected {} fields, found {}", d + 4, fields.len())));
                    }
                    let mut w = Vec::with_capacity(d);
                    for f in &fields[..d] {
                        w.push(f.parse::<i64>().map_err(|_| err(format!("bad frequency `{f}`")))?);
                    }
                    let a: usize = fields[d].parse().map_err(|_| err(format!("bad row `{}`", fields[d])))?;
                    let b: usize = fields[d + 1].parse().map_err(|_| err(format!("bad column `{}`", fields[d + 1])))?;
                    let re: f64 =
                        fields[d + 2].parse().map_err(|_| err(format!("bad real part `{}`", fields[d + 2])))?;
                    let im: f64 =
                        fields[d + 3].parse().map_err(|_| err(format!("bad imaginary part `{}`", fields[d + 3])))?;
                    entries.push((lineno + 1, w, a, b, C64::new(re, im)));
                }
            }
        }
        let rank = rank.ok_or(Error::MapParse { line: 0, message: "missing `N` line".into() })?;
        let dim = dim.ok_or(Error::MapParse { line: 0, message: "missing `dim` line".into() })?;
        let mut coefficients: BTreeMap<Vec<i64>, CMat> = BTreeMap::new();
        for (line, w, a, b, v) in entries {
            if a >= rank || b >= rank {
                return Err(Error::MapParse { line, message: format!("entry ({a},{b}) outside rank {rank}") });
            }
            coefficients.entry(w).or_insert_with(|| CMat::zeros(rank, rank))[(a, b)] += v;
        }
        Self::from_coefficients(dim, rank, coefficients)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coefficients(&self) -> &BTreeMap<Vec<i64>, CMat> {
        &self.coefficients
    }

    pub fn coefficient(&self, w: &[i64]) -> Option<&CMat> {
        self.coefficients.get(w)
    }

    /// The shortcut `m` when the map was built as a character.
    pub fn character_shortcut(&self) -> Option<&[i64]> {
        self.character.as_deref()
    }

    /// Largest max-norm of a frequency in the support.
    pub fn max_frequency(&self) -> i64 {
        self.coefficients.keys().flat_map(|w| w.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    /// `(m_a, c_a)` per diagonal slot when `g = diag(c_a e^{2πi m_a·x})` with
    /// `|c_a| = 1`; `None` for any other map.
    pub fn diagonal_characters(&self) -> Option<Vec<(Vec<i64>, C64)>> {
        let mut found: Vec<Option<(Vec<i64>, C64)>> = vec![None; self.rank];
        for (w, c) in &self.coefficients {
            for a in 0..self.rank {
                for b in 0..self.rank {
                    let v = c[(a, b)];
                    if v.norm() == 0.0 {
                        continue;
                    }
                    if a != b || found[a].is_some() {
                        return None;
                    }
                    found[a] = Some((w.clone(), v));
                }
            }
        }
        let out: Option<Vec<_>> = found.into_iter().collect();
        out.filter(|v| v.iter().all(|(_, c)| (c.norm() - 1.0).abs() < 1e-12))
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.rank, self.rank);
        for (w, c) in &self.coefficients {
            out += c * fourier_phase(w, x);
        }
        out
    }

    /// `∂g/∂x_j` at `x`, differentiated exactly on coefficients.
    pub fn derivative(&self, x: &[f64], j: usize) -> CMat {
        let mut out = CMat::zeros(self.rank, self.rank);
        for (w, c) in &self.coefficients {
            out += c * (fourier_phase(w, x) * C64::new(0.0, 2.0 * PI * w[j] as f64));
        }
        out
    }

    fn check_resolution(&self, resolution: usize) -> Result<()> {
        let f = self.max_frequency();
        let needed = (2 * f + 1) as usize;
        if resolution < needed {
            return Err(Error::GridTooCoarse { resolution, frequency: f, needed });
        }
        Ok(())
    }

    /// Samples on the uniform grid of `resolution^dim` points and reports
    /// `max ‖g†g − I‖`.
    pub fn evaluate(&self, resolution: usize) -> Result<MapSamples> {
        self.check_resolution(resolution)?;
        let id = CMat::identity(self.rank, self.rank);
        let mut residual: f64 = 0.0;
        let mut values = Vec::new();
        for x in grid_points(self.dim, resolution) {
            let g = self.eval(&x);
            residual = residual.max((g.adjoint() * &g - &id).norm());
            values.push(g);
        }
        Ok(MapSamples { resolution, values, unitarity_residual: residual })
    }

    pub fn check_unitary(&self, resolution: usize, tolerance: f64) -> Result<f64> {
        let residual = self.evaluate(resolution)?.unitarity_residual;
        if residual > tolerance {
            return Err(Error::NotUnitary { residual, tolerance });
        }
        Ok(residual)
    }

    /// Coefficients of `g†`, equal to `g⁻¹` for unitary maps.
    pub fn adjoint(&self) -> Self {
        let coefficients =
            self.coefficients.iter().map(|(w, c)| (w.iter().map(|v| -v).collect(), c.adjoint())).collect();
        let character = self.character.as_ref().map(|m| m.iter().map(|v| -v).collect());
        Self { dim: self.dim, rank: self.rank, coefficients, character }
    }

    /// Pointwise product `g·h`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.rank != other.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: other.rank });
        }
        let mut coefficients: BTreeMap<Vec<i64>, CMat> = BTreeMap::new();
        for (w1, c1) in &self.coefficients {
            for (w2, c2) in &other.coefficients {
                let w: Vec<i64> = w1.iter().zip(w2).map(|(a, b)| a + b).collect();
                *coefficients.entry(w).or_insert_with(|| CMat::zeros(self.rank, self.rank)) += c1 * c2;
            }
        }
        coefficients.retain(|_, c| c.norm() > 1e-15);
        let mut out = Self::from_coefficients(self.dim, self.rank, coefficients)?;
        if let (Some(a), Some(b)) = (&self.character, &other.character) {
            out.character = Some(a.iter().zip(b).map(|(x, y)| x + y).collect());
        }
        Ok(out)
    }

    /// `U g U†` for a constant unitary `U`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        let coefficients = self.coefficients.iter().map(|(w, c)| (w.clone(), u * c * u.adjoint())).collect();
        Self { dim: self.dim, rank: self.rank, coefficients, character: None }
    }

    /// Exact Fourier coefficients of `ω_j = g†∂_j g`:
    /// `ω̂_j(p) = Σ_{w'' − w = p} 2πi·w''_j·ĝ_w†·ĝ_{w''}`.
    /// Anti-Hermiticity is then checked on a grid of the given resolution.
    pub fn maurer_cartan(&self, resolution: usize, tolerance: f64) -> Result<MaurerCartan> {
        self.check_unitary(resolution, tolerance)?;
        let mut components: Vec<BTreeMap<Vec<i64>, CMat>> = vec![BTreeMap::new(); self.dim];
        for (w, cw) in &self.coefficients {
            let left = cw.adjoint();
            for (w2, c2) in &self.coefficients {
                let p: Vec<i64> = w2.iter().zip(w).map(|(a, b)| a - b).collect();
                let prod = &left * c2;
                for (j, comp) in components.iter_mut().enumerate() {
                    if w2[j] == 0 {
                        continue;
                    }
                    let term = &prod * C64::new(0.0, 2.0 * PI * w2[j] as f64);
                    *comp.entry(p.clone()).or_insert_with(|| CMat::zeros(self.rank, self.rank)) += term;
                }
            }
        }
        for comp in components.iter_mut() {
            comp.retain(|_, c| c.norm() > 1e-13);
        }
        let mut mc = MaurerCartan { dim: self.dim, rank: self.rank, components, skew_residual: 0.0 };
        let mut worst: f64 = 0.0;
        for x in grid_points(self.dim, resolution) {
            for j in 0..self.dim {
                let w = mc.eval(j, &x);
                worst = worst.max((&w + w.adjoint()).norm());
            }
        }
        mc.skew_residual = worst;
        if worst > tolerance * (1.0 + 2.0 * PI * self.max_frequency() as f64) {
            return Err(Error::NotUnitary { residual: worst, tolerance });
        }
        Ok(mc)
    }

    /// Degrees `m_j = (1/2πi)∮ g⁻¹∂_j g dx_j` of a rank-one map.
    ///
    /// The loop integral along `x_j` is independent of the transverse
    /// coordinates for a unitary map; it is evaluated by trapezoid quadrature
    /// along every grid line and the worst deviation from an integer is
    /// reported as the residual.
    pub fn winding(&self, resolution: usize) -> Result<Winding> {
        if self.rank != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.rank });
        }
        self.check_unitary(resolution, DEFAULT_UNITARITY_TOL)?;
        let mut degrees = Vec::with_capacity(self.dim);
        let mut residual: f64 = 0.0;
        for j in 0..self.dim {
            let mut value = None;
            for base in grid_points(self.dim, resolution) {
                if base[j] != 0.0 {
                    continue;
                }
                let mut acc = ZERO;
                for i in 0..resolution {
                    let mut x = base.clone();
                    x[j] = i as f64 / resolution as f64;
                    let g = self.eval(&x)[(0, 0)];
                    let dg = self.derivative(&x, j)[(0, 0)];
                    acc += dg / g;
                }
                let m = acc / C64::new(0.0, 2.0 * PI * resolution as f64);
                residual = residual.max(m.im.abs()).max((m.re - m.re.round()).abs());
                let r = m.re.round() as i64;
                match value {
                    None => value = Some(r),
                    Some(v) if v != r => residual = residual.max(1.0),
                    _ => {}
                }
            }
            degrees.push(value.unwrap_or(0));
        }
        if residual > 0.01 {
            return Err(Error::NonIntegerWinding { residual });
        }
        Ok(Winding { degrees, residual })
    }

    /// Matrix of multiplication by `g` on the truncated space with index
    /// `(mode · spinor + σ) · N + a`; entry blocks are `ĝ_{n − n'}` on every
    /// spinor component. Frequencies leaving the box are dropped.
    pub fn multiplication_matrix(&self, modes: &ModeSet, spinor: usize) -> CMat {
        let n = self.rank;
        let size = modes.len() * spinor * n;
        let mut out = CMat::zeros(size, size);
        for (col, label) in modes.labels().iter().enumerate() {
            for (w, c) in &self.coefficients {
                let target: Vec<i64> = label.iter().zip(w).map(|(a, b)| a + b).collect();
                if let Some(row) = modes.index_of(&target) {
                    for s in 0..spinor {
                        for a in 0..n {
                            for b in 0..n {
                                out[((row * spinor + s) * n + a, (col * spinor + s) * n + b)] += c[(a, b)];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl MaurerCartan {
    pub fn eval(&self, j: usize, x: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.rank, self.rank);
        for (p, c) in &self.components[j] {
            out += c * fourier_phase(p, x);
        }
        out
    }

    /// All frequencies carrying a nonzero coefficient in some direction.
    pub fn support(&self) -> Vec<Vec<i64>> {
        let mut keys: Vec<Vec<i64>> = self.components.iter().flat_map(|c| c.keys().cloned()).collect();
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn max_frequency(&self) -> i64 {
        self.support().iter().flat_map(|w| w.iter().map(|v| v.abs())).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_set_examples() {
        let spec = TorusSpec::new(vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        let ms = ModeSet::new(&spec, 1);
        assert_eq!(ms.len(), 9);
        assert!(ms.momenta().contains(&vec![0.5, 0.5]));
        assert!(ms.momenta().contains(&vec![-0.5, -0.5]));

        let spec = TorusSpec::new(vec![0.0], vec![0.3]).unwrap();
        let ms = ModeSet::new(&spec, 2);
        let got: Vec<f64> = ms.momenta().iter().map(|k| k[0]).collect();
        let want = [-1.7, -0.7, 0.3, 1.3, 2.3];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn index_of_inverts_enumeration() {
        let spec = TorusSpec::new(vec![0.0, 0.5, 0.0], vec![0.1, 0.0, 0.2]).unwrap();
        let ms = ModeSet::new(&spec, 2);
        for (i, n) in ms.labels().iter().enumerate() {
            assert_eq!(ms.index_of(n), Some(i));
        }
        assert_eq!(ms.index_of(&[3, 0, 0]), None);
    }

    #[test]
    fn invalid_spin_entry_names_the_field() {
        let err = TorusSpec::new(vec![0.7, 0.5], vec![0.0, 0.0]).unwrap_err().to_string();
        assert!(err.contains("entry 0") && err.contains("0.7"), "{err}");
        assert!(TorusSpec::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn unitarity_residuals() {
        let g = UnitaryMap::character(vec![1, 0]);
        assert!(g.evaluate(5).unwrap().unitarity_residual < 1e-15);
        let u = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let h = UnitaryMap::constant(2, u);
        assert!(h.evaluate(3).unwrap().unitarity_residual < 1e-15);
        let mut bad = BTreeMap::new();
        bad.insert(vec![0], CMat::from_element(1, 1, C64::new(0.5, 0.0)));
        bad.insert(vec![1], CMat::from_element(1, 1, C64::new(0.7, 0.0)));
        let bad = UnitaryMap::from_coefficients(1, 1, bad).unwrap();
        assert!(bad.evaluate(8).unwrap().unitarity_residual > 0.1);
        assert!(matches!(bad.maurer_cartan(8, DEFAULT_UNITARITY_TOL), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = UnitaryMap::character(vec![3]);
        assert!(matches!(g.evaluate(6), Err(Error::GridTooCoarse { needed: 7, .. })));
    }

    #[test]
    fn maurer_cartan_examples() {
        let g = UnitaryMap::character(vec![1, 0]);
        let mc = g.maurer_cartan(8, DEFAULT_UNITARITY_TOL).unwrap();
        assert_eq!(mc.components[0].len(), 1);
        assert!((mc.components[0][&vec![0, 0]][(0, 0)] - C64::new(0.0, 2.0 * PI)).norm() < 1e-14);
        assert!(mc.components[1].is_empty());

        let c = UnitaryMap::constant(2, CMat::identity(1, 1));
        let mc = c.maurer_cartan(4, DEFAULT_UNITARITY_TOL).unwrap();
        assert!(mc.components.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn diagonal_map_maurer_cartan_matches_componentwise_derivative() {
        let g = UnitaryMap::diagonal(2, &[(vec![1, 0], ONE), (vec![0, -1], ONE)]).unwrap();
        let mc = g.maurer_cartan(8, DEFAULT_UNITARITY_TOL).unwrap();
        let x = [0.37, 0.81];
        // oracle: differentiate each diagonal entry by centered differences
        for j in 0..2 {
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (g.eval(&xp) - g.eval(&xm)) / C64::new(2.0 * h, 0.0);
            let oracle = g.eval(&x).adjoint() * fd;
            assert!((mc.eval(j, &x) - oracle).norm() < 1e-8);
        }
        let w1 = mc.eval(0, &x);
        let w2 = mc.eval(1, &x);
        assert!((w1[(0, 0)] - C64::new(0.0, 2.0 * PI)).norm() < 1e-13 && w1[(1, 1)].norm() < 1e-13);
        assert!((w2[(1, 1)] - C64::new(0.0, -2.0 * PI)).norm() < 1e-13 && w2[(0, 0)].norm() < 1e-13);
    }

    #[test]
    fn winding_examples() {
        let g = UnitaryMap::character(vec![2, 3]);
        assert_eq!(g.winding(8).unwrap().degrees, vec![2, 3]);
        let c = UnitaryMap::constant(2, CMat::from_element(1, 1, C64::from_polar(1.0, 0.4)));
        assert_eq!(c.winding(4).unwrap().degrees, vec![0, 0]);
        let e = UnitaryMap::character(vec![1]);
        let p = e.product(&e).unwrap();
        assert_eq!(p.winding(16).unwrap().degrees, vec![2]);
    }

    #[test]
    fn parse_round_trip() {
        let text = "# a rank-two diagonal map\nN 2\ndim 2\n1 0 0 0 1.0 0.0\n0 -1 1 1 1.0 0.0\n";
        let g = UnitaryMap::parse(text).unwrap();
        assert_eq!(g.rank(), 2);
        let d = g.diagonal_characters().unwrap();
        assert_eq!(d[0].0, vec![1, 0]);
        assert_eq!(d[1].0, vec![0, -1]);
        let err = UnitaryMap::parse("N 1\ndim 2\n1 0 0 0 1.0\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
