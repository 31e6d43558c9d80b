use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, FEASIBILITY_TOL};
use crate::oracle::{ProblemMeta, ProblemSpec};
use crate::point::{fnv1a, BlockPoint};
use crate::rng::SeededRng;

/// How a generated payoff matrix is scaled after sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the largest absolute entry, so payoffs lie in `[0, 1]`.
    #[default]
    MaxAbs,
    /// Divide by the largest absolute row sum.
    MaxRowSum,
}

impl Normalization {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" | "maxabs" => Ok(Self::MaxAbs),
            "rowsum" => Ok(Self::MaxRowSum),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Which entries the generator boosted, for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationTrace {
    pub boosted_row: usize,
    pub special_col: usize,
}

/// Bilinear game `min_{x in Delta_n} max_{y in Delta_k} y^T C x`.
///
/// `C` has one row per strategy of the maximizing player `y` and one column
/// per strategy of the minimizing player `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    c: DMatrix<f64>,
    trace: Option<GenerationTrace>,
}

impl MatrixGame {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() < 1 || c.ncols() < 1 {
            return Err(Error::InvalidDimension("empty payoff matrix".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix"));
        }
        Ok(Self { c, trace: None })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidDimension("ragged payoff rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(DMatrix::from_row_slice(rows.len(), ncols, &flat))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn trace(&self) -> Option<GenerationTrace> {
        self.trace
    }

    /// Dimension of the minimizer's simplex.
    pub fn n(&self) -> usize {
        self.c.ncols()
    }

    /// Dimension of the maximizer's simplex.
    pub fn k(&self) -> usize {
        self.c.nrows()
    }

    pub fn checksum(&self) -> u64 {
        let dims = [self.c.nrows() as u64, self.c.ncols() as u64];
        let entries = self.c.row_iter().flat_map(|r| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        fnv1a(dims.into_iter().chain(entries))
    }

    pub fn payoff(&self, x: &[f64], y: &[f64]) -> f64 {
        let cx = &self.c * DVector::from_column_slice(x);
        cx.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Plain-text form: a `rows cols` line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.c.nrows(), self.c.ncols());
        for row in self.c.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty matrix file".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: 1,
                msg: format!("bad dimensions: {e}"),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: 1,
                msg: "expected `rows cols`".into(),
            });
        };
        let mut flat = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (i, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {cols} entries, found {}", vals.len()),
                });
            }
            flat.extend(vals);
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: seen + 2,
                msg: format!("expected {rows} rows, found {seen}"),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, &flat))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Problem view with `z = (x, y)`, `x in Delta_n`, `y in Delta_k`.
    ///
    /// On the simplex pair `||C x||_2 <= sqrt(k) max|C_ij|` and
    /// `||C^T y||_2 <= sqrt(n) max|C_ij|`, so `M = max|C_ij| sqrt(n + k)`.
    /// The gradient is linear in `z` with Lipschitz constant `||C||_2`,
    /// bounded here by the Frobenius norm.
    pub fn to_problem(&self) -> ProblemSpec {
        let (n, k) = (self.n(), self.k());
        let max_abs = self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let meta = ProblemMeta {
            lipschitz: Some((max_abs * ((n + k) as f64).sqrt()).max(f64::MIN_POSITIVE)),
            grad_lipschitz: Some(self.c.norm().max(f64::MIN_POSITIVE)),
            mu: 0.0,
            // bilinear: every Taylor expansion of order >= 2 is exact
            beta: Some(crate::kernels::MAX_BETA),
            holder_const: None,
        };
        let value_c = Arc::new(self.c.clone());
        let grad_c = value_c.clone();
        let gap_c = value_c.clone();
        ProblemSpec::new(
            format!("matgame {k}x{n}"),
            DomainSpec::SimplexPair { nx: n, ny: k },
            Arc::new(move |z: &BlockPoint| bilinear(&value_c, z.x(), z.y())),
        )
        .with_saddle_grad(Arc::new(move |z: &BlockPoint| {
            let x = DVector::from_column_slice(z.x());
            let y = DVector::from_column_slice(z.y());
            let gx = grad_c.tr_mul(&y);
            let gy = &*grad_c * x;
            gx.iter().copied().chain(gy.iter().map(|v| -v)).collect()
        }))
        .with_gap(Arc::new(move |z: &BlockPoint| gap_unchecked(&gap_c, z.x(), z.y())))
        .with_meta(meta)
        .expect("matrix game metadata is positive")
    }
}

fn bilinear(c: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let cx = c * DVector::from_column_slice(x);
    cx.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn gap_unchecked(c: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let cx = c * DVector::from_column_slice(x);
    let cty = c.tr_mul(&DVector::from_column_slice(y));
    cx.max() - cty.min()
}

/// Random game: uniform `[0, 1]` entries, one row redrawn from `[5, 10]`, one
/// entry of that row redrawn from `[1, 5]`, then normalized.
pub fn gen_matrix_game(
    n: usize,
    k: usize,
    seed: u64,
    normalization: Normalization,
) -> Result<MatrixGame> {
    if n < 2 || k < 2 {
        return Err(Error::InvalidDimension(format!(
            "matrix game needs n, k >= 2, got n = {n}, k = {k}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut c = DMatrix::from_fn(k, n, |_, _| 0.0);
    // row-major fill so the draw order does not depend on storage layout
    for i in 0..k {
        for j in 0..n {
            c[(i, j)] = rng.uniform(0.0, 1.0);
        }
    }
    let boosted_row = (rng.uniform(0.0, 1.0) * k as f64) as usize % k;
    for j in 0..n {
        c[(boosted_row, j)] = rng.uniform(5.0, 10.0);
    }
    let special_col = (rng.uniform(0.0, 1.0) * n as f64) as usize % n;
    c[(boosted_row, special_col)] = rng.uniform(1.0, 5.0);
    let scale = match normalization {
        Normalization::MaxAbs => c.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Normalization::MaxRowSum => c
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    };
    c /= scale;
    let mut game = MatrixGame::new(c)?;
    game.trace = Some(GenerationTrace {
        boosted_row,
        special_col,
    });
    Ok(game)
}

fn on_simplex(v: &[f64]) -> bool {
    v.iter().all(|&a| a >= -FEASIBILITY_TOL) && (v.iter().sum::<f64>() - 1.0).abs() <= FEASIBILITY_TOL
}

/// Saddle gap `max_i (C x)_i - min_j (C^T y)_j`; nonnegative on feasible input.
pub fn matgame_gap(game: &MatrixGame, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != game.n() || y.len() != game.k() {
        return Err(Error::InvalidDimension(format!(
            "game is {}x{}, got x of length {} and y of length {}",
            game.k(),
            game.n(),
            x.len(),
            y.len()
        )));
    }
    if !on_simplex(x) || !on_simplex(y) {
        return Err(Error::Precondition("matgame_gap needs simplex points".into()));
    }
    Ok(gap_unchecked(&game.c, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_game() {
        let g = MatrixGame::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(matgame_gap(&g, &[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(matgame_gap(&g, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(matgame_gap(&g, &[0.7, 0.7], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn generation_recipe() {
        let g = gen_matrix_game(50, 50, 7, Normalization::MaxAbs).unwrap();
        assert!(g.matrix().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let again = gen_matrix_game(50, 50, 7, Normalization::MaxAbs).unwrap();
        assert_eq!(g, again);
        let t = g.trace().unwrap();
        // the boosted row dominates every other row entrywise except the special entry
        let c = g.matrix();
        for i in 0..50 {
            if i == t.boosted_row {
                continue;
            }
            for j in 0..50 {
                if j != t.special_col {
                    assert!(c[(t.boosted_row, j)] > c[(i, j)]);
                }
            }
        }
        let boosted_over_half = (0..50)
            .filter(|&i| c.row(i).iter().filter(|&&v| v >= 0.5 - 1e-12).count() >= 49)
            .count();
        assert_eq!(boosted_over_half, 1);
        assert_ne!(g.checksum(), gen_matrix_game(50, 50, 8, Normalization::MaxAbs).unwrap().checksum());
    }

    #[test]
    fn row_sum_normalization() {
        let g = gen_matrix_game(4, 3, 1, Normalization::MaxRowSum).unwrap();
        let max_row = g.matrix().row_iter().map(|r| r.sum()).fold(0.0, f64::max);
        assert!((max_row - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_small_rejected() {
        assert!(matches!(
            gen_matrix_game(1, 5, 0, Normalization::MaxAbs),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g = gen_matrix_game(5, 3, 11, Normalization::MaxAbs).unwrap();
        let back = MatrixGame::from_text(&g.to_text()).unwrap();
        assert_eq!(back.matrix(), g.matrix());
        assert!(MatrixGame::from_text("2 2\n1 2\n3\n").is_err());
        assert!(MatrixGame::from_text("2 2\n1 2\n").is_err());
    }

    #[test]
    fn problem_view_is_consistent() {
        let g = gen_matrix_game(3, 4, 2, Normalization::MaxAbs).unwrap();
        let p = g.to_problem();
        assert_eq!((p.nx(), p.ny()), (3, 4));
        let z = BlockPoint::new(vec![0.2, 0.3, 0.5], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((p.value(&z) - g.payoff(z.x(), z.y())).abs() < 1e-15);
        assert_eq!(p.gap(&z).unwrap(), matgame_gap(&g, z.x(), z.y()).unwrap());
        // bilinear: central differences are exact up to rounding
        let grad = p.saddle_grad(&z).unwrap();
        let h = 1e-6;
        for i in 0..7 {
            let mut e = vec![0.0; 7];
            e[i] = 1.0;
            let fd = (p.value(&z.shifted(&e, h)) - p.value(&z.shifted(&e, -h))) / (2.0 * h);
            let want = if i < 3 { fd } else { -fd };
            assert!((grad[i] - want).abs() < 1e-8);
        }
    }
}
