//! Perron root of nonnegative matrices.
//!
//! The matrix is split into strongly connected components of its support graph;
//! the spectral radius is the largest root over the irreducible diagonal blocks.
//! Each block is shifted by a positive multiple of the identity, which makes it
//! primitive, and power iteration runs until the Collatz-Wielandt bracket
//! `min_i (Bx)_i / x_i <= rho(B) <= max_i (Bx)_i / x_i` closes.

/// Relative width at which the Collatz-Wielandt bracket counts as converged.
pub const PERRON_RTOL: f64 = 1e-12;

const MAX_ITERATIONS: usize = 20_000;

/// Lower and upper bounds on the spectral radius of a nonnegative square matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronBracket {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

impl PerronBracket {
    pub fn estimate(&self) -> f64 {
        if self.upper.is_infinite() {
            f64::INFINITY
        } else {
            0.5 * (self.lower + self.upper)
        }
    }
}

/// Spectral radius of a square nonnegative matrix.
///
/// # Panics
/// If the matrix is not square or has a negative or NaN entry.
pub fn spectral_radius(matrix: &[Vec<f64>]) -> f64 {
    perron_bracket(matrix).estimate()
}

pub fn perron_bracket(matrix: &[Vec<f64>]) -> PerronBracket {
    let n = matrix.len();
    for row in matrix {
        assert_eq!(row.len(), n, "matrix must be square");
        assert!(row.iter().all(|&v| v >= 0.0), "matrix must be nonnegative");
    }
    let mut total = PerronBracket { lower: 0.0, upper: 0.0, iterations: 0 };
    for block in strongly_connected_components(matrix) {
        let b = block_bracket(matrix, &block);
        total.lower = total.lower.max(b.lower);
        total.upper = total.upper.max(b.upper);
        total.iterations += b.iterations;
    }
    total
}

fn block_bracket(matrix: &[Vec<f64>], block: &[usize]) -> PerronBracket {
    if block.len() == 1 {
        let v = matrix[block[0]][block[0]];
        return PerronBracket { lower: v, upper: v, iterations: 0 };
    }
    let sub: Vec<Vec<f64>> = block.iter().map(|&i| block.iter().map(|&j| matrix[i][j]).collect()).collect();
    if sub.iter().flatten().any(|v| v.is_infinite()) {
        return PerronBracket { lower: f64::INFINITY, upper: f64::INFINITY, iterations: 0 };
    }
    let n = sub.len();
    let row_sums: Vec<f64> = sub.iter().map(|r| r.iter().sum()).collect();
    // rho lies between the smallest and largest row sum; shifting by their mean
    // keeps the subdominant ratio well below one for most spectra.
    let shift = row_sums.iter().sum::<f64>() / n as f64;
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut lower = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
    let mut upper = row_sums.iter().copied().fold(0.0, f64::max);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && upper - lower > PERRON_RTOL * upper {
        iterations += 1;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = shift * x[i] + sub[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower = lower.max(lo - shift);
        upper = upper.min(hi - shift);
        let norm = y.iter().copied().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    PerronBracket { lower, upper, iterations }
}

/// Tarjan's algorithm over the support graph (`i -> j` iff `m[i][j] > 0`).
fn strongly_connected_components(matrix: &[Vec<f64>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        m: &'a [Vec<f64>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for w in 0..s.m.len() {
            if s.m[v][w] <= 0.0 {
                continue;
            }
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }

    let n = matrix.len();
    let mut s = State {
        m: matrix,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}
